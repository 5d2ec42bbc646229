//! `lgst`: batch front end for linearized gate set tomography.

mod commands;
mod experiment;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lgst_core::model::CouplingRule;
use lgst_core::simulator::Backend;
use lgst_core::Execution;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lgst", version, about = "Linearized gate set tomography on sparse Clifford error models")]
struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the ring-connectivity error model and sample its rates.
    ModelGen(ModelGenArgs),
    /// Sample random circuits and list the observables measured on each.
    DesignGen(DesignGenArgs),
    /// Produce a synthetic dataset for a design under a model with rates.
    Simulate(SimulateArgs),
    /// Fit error rates to a dataset.
    Fit(FitArgs),
    /// Report the rank and conditioning of a design matrix.
    Rank(RankArgs),
    /// Reproduce one of the numerical studies.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    TargetToAll,
    OwnEdgeAndAdjacent,
    AllEdges,
}

impl From<Coupling> for CouplingRule {
    fn from(c: Coupling) -> Self {
        match c {
            Coupling::TargetToAll => CouplingRule::TargetToAll,
            Coupling::OwnEdgeAndAdjacent => CouplingRule::OwnEdgeAndAdjacent,
            Coupling::AllEdges => CouplingRule::AllEdges,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Dense,
    Taylor,
}

/// Resolves `--backend`/`--k`, defaulting to dense up to five qubits.
pub fn backend(arg: Option<BackendArg>, k: usize, n: usize) -> Backend {
    match arg {
        Some(BackendArg::Dense) => Backend::DenseExact,
        Some(BackendArg::Taylor) => Backend::Taylor { k },
        None => match Backend::default_for(n) {
            Backend::Taylor { .. } => Backend::Taylor { k },
            b => b,
        },
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Uncertainty {
    None,
    Linear,
    Bootstrap,
}

/// `inf` or a positive integer.
pub fn parse_shots(s: &str) -> Result<Option<u64>, String> {
    match s.trim() {
        "inf" | "infinite" => Ok(None),
        t => match t.parse::<u64>() {
            Ok(0) => Err("shot count must be positive".into()),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(format!("expected a positive integer or 'inf', got {t:?}")),
        },
    }
}

/// Shot count as parsed from the command line; `None` is the infinite-shot limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Shots(pub Option<u64>);

pub fn shots_value(s: &str) -> Result<Shots, String> {
    parse_shots(s).map(Shots)
}

/// `a/b` or a decimal.
pub fn parse_fraction(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad fraction {s:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad fraction {s:?}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("bad number {s:?}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

#[derive(Args, Serialize)]
pub struct ModelGenArgs {
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Rate scale factor (>= 1).
    #[arg(short = 'c', long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = Coupling::TargetToAll)]
    pub coupling: Coupling,
    /// Connectivity as `a-b,c-d,…`; defaults to a ring.
    #[arg(long)]
    pub edges: Option<String>,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct DesignGenArgs {
    #[arg(short = 'n', long)]
    pub n: usize,
    #[arg(long, default_value_t = 15)]
    pub depth: usize,
    /// Number of circuits.
    #[arg(short = 'K', long = "circuits", default_value_t = 1000)]
    pub circuits: usize,
    /// Maximum observable weight.
    #[arg(short = 'w', long, default_value_t = 2)]
    pub w: usize,
    #[arg(long, default_value_t = 2)]
    pub seed: u64,
    /// Probability of placing a CZ on a free ring edge.
    #[arg(long, default_value_t = 0.25)]
    pub p_cz: f64,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub design: PathBuf,
    /// Model file with rates.
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Taylor order.
    #[arg(short = 'k', long, default_value_t = 3)]
    pub k: usize,
    /// Shots per circuit, or `inf`.
    #[arg(short = 'N', long, default_value = "inf", value_parser = shots_value)]
    pub shots: Shots,
    /// Extra factor applied to the model's rates.
    #[arg(short = 'c', long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 3)]
    pub seed: u64,
    /// Largest register the dense backend accepts.
    #[arg(long, default_value_t = lgst_core::simulator::dense::DEFAULT_MAX_QUBITS)]
    pub max_dense_qubits: usize,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub design: PathBuf,
    /// Model whose parameters are fitted (rates in the file are ignored).
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = Uncertainty::Linear)]
    pub uncertainty: Uncertainty,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 4)]
    pub seed: u64,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct RankArgs {
    #[arg(long)]
    #[serde(skip)]
    pub design: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub model: PathBuf,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Subcommand)]
pub enum ExperimentCommand {
    /// Accuracy of the full-model fit on ten qubits, with and without shot noise.
    Fig2(experiment::Fig2Args),
    /// Mean error per class against circuit count and shot count.
    Fig3(experiment::Fig3Args),
    /// Fits of randomly reduced models.
    Fig4(experiment::Fig4Args),
    /// Error growth as the rates are scaled up.
    Fig5(experiment::Fig5Args),
    /// Rank of the design matrix for random sparse models.
    Fig6(experiment::Fig6Args),
}

/// 0 success, 2 invalid input, 3 numerical non-convergence, 1 anything else (I/O).
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(le) = cause.downcast_ref::<lgst_core::Error>() {
            return match le {
                lgst_core::Error::NonConvergence { .. } => 3,
                lgst_core::Error::Io(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let result = match &cli.command {
        Command::ModelGen(a) => commands::model_gen(a),
        Command::DesignGen(a) => commands::design_gen(a),
        Command::Simulate(a) => commands::simulate(a, exec),
        Command::Fit(a) => commands::fit(a, exec),
        Command::Rank(a) => commands::rank(a, exec),
        Command::Experiment(e) => experiment::run(e, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shot_and_fraction_parsing() {
        assert_eq!(parse_shots("inf"), Ok(None));
        assert_eq!(parse_shots("1000"), Ok(Some(1000)));
        assert!(parse_shots("0").is_err());
        assert!(parse_shots("x").is_err());
        assert!((parse_fraction("1/650").unwrap() - 1.0 / 650.0).abs() < 1e-18);
        assert_eq!(parse_fraction("0.25"), Ok(0.25));
        assert!(parse_fraction("1/0").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        let e = anyhow::Error::from(lgst_core::Error::NonConvergence { what: "nnls".into(), iterations: 3 });
        assert_eq!(exit_code(&e), 3);
        assert_eq!(exit_code(&anyhow::Error::from(lgst_core::Error::Design("x".into())).context("stage")), 2);
        assert_eq!(exit_code(&anyhow::Error::from(std::io::Error::other("x"))), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
