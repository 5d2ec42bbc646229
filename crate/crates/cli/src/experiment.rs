//! `lgst experiment fig2 … fig6`: run a study, write its tables, report and plots.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use lgst_core::experiments::{
    run_fig2, run_fig3, run_fig4, run_fig5, run_fig6, BoxStats, Fig2Config, Fig3Config, Fig4Config, Fig5Config,
    Fig6Config, LargeConfig, LargeDataset, ParamClass, SparseClass,
};
use lgst_core::Execution;
use serde::Serialize;

use crate::manifest::{Output, RunManifest};
use crate::svg::{boxplot, histogram, Plot, Series};
use crate::{parse_fraction, shots_value, Coupling, ExperimentCommand, Shots};

#[derive(Args, Serialize, Clone)]
pub struct LargeArgs {
    #[arg(short = 'n', long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 15)]
    pub depth: usize,
    #[arg(short = 'K', long = "circuits", default_value_t = 1000)]
    pub circuits: usize,
    #[arg(short = 'w', long, default_value_t = 2)]
    pub w: usize,
    /// Taylor order of the data-generating simulator.
    #[arg(short = 'k', long, default_value_t = 3)]
    pub k: usize,
    /// Seed of the true rates.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub design_seed: u64,
    #[arg(long, value_enum, default_value_t = Coupling::TargetToAll)]
    pub coupling: Coupling,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

impl LargeArgs {
    fn config(&self) -> LargeConfig {
        LargeConfig {
            n: self.n,
            depth: self.depth,
            circuits: self.circuits,
            w: self.w,
            model_seed: self.seed,
            design_seed: self.design_seed,
            k: self.k,
            coupling: self.coupling.into(),
        }
    }

    fn manifest(&self, sub: &str, cfg: &impl Serialize) -> Result<RunManifest> {
        Ok(RunManifest::new(sub, &serde_json::json!({ "data": self, "study": cfg }))?
            .seed("model", self.seed)
            .seed("design", self.design_seed))
    }

    fn prepare(&self, exec: Execution) -> Result<LargeDataset> {
        eprintln!("simulating {} circuits on {} qubits (Taylor order {})", self.circuits, self.n, self.k);
        LargeDataset::prepare(&self.config(), exec).context("preparing dataset")
    }
}

#[derive(Args, Serialize)]
pub struct Fig2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: LargeArgs,
    /// Shot counts, `inf` for the exact limit.
    #[arg(short = 'N', long, value_delimiter = ',', default_value = "inf,1000", value_parser = shots_value)]
    pub shots: Vec<Shots>,
    #[arg(long, default_value_t = 3)]
    pub noise_seed: u64,
}

#[derive(Args, Serialize)]
pub struct Fig3Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: LargeArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,400,500,600,700,800,900,1000")]
    pub counts: Vec<usize>,
    /// Random circuit subsets per count.
    #[arg(long, default_value_t = 500)]
    pub subsets: usize,
    #[arg(short = 'N', long, value_delimiter = ',', default_value = "100,1000,10000,inf", value_parser = shots_value)]
    pub shots: Vec<Shots>,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 4)]
    pub noise_seed: u64,
    #[arg(long, default_value_t = 5)]
    pub subset_seed: u64,
}

#[derive(Args, Serialize)]
pub struct Fig4Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: LargeArgs,
    /// Fractions of the parameters kept, as decimals or `a/b`.
    #[arg(long = "eta", value_delimiter = ',', default_value = "1/650,1/4,1/2,3/4,1", value_parser = parse_fraction)]
    pub etas: Vec<f64>,
    /// Reduced models per fraction.
    #[arg(long, default_value_t = 150)]
    pub models: usize,
    #[arg(long, default_value_t = 6)]
    pub subset_seed: u64,
}

#[derive(Args, Serialize)]
pub struct Fig5Args {
    #[arg(short = 'n', long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 15)]
    pub depth: usize,
    #[arg(short = 'K', long = "circuits", default_value_t = 1000)]
    pub circuits: usize,
    #[arg(short = 'w', long, default_value_t = 2)]
    pub w: usize,
    #[arg(long, default_value_t = 50)]
    pub models: usize,
    /// Rate scale factors.
    #[arg(short = 'c', long = "c", value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18")]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub design_seed: u64,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct Fig6Args {
    #[arg(short = 'n', long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    #[arg(short = 'w', long, default_value_t = 2)]
    pub w: usize,
    /// Numbers of sampled generators.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128")]
    pub kappas: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    /// Circuits added between rank checks.
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_circuits: usize,
    #[arg(long, default_value_t = 9)]
    pub seed: u64,
    #[arg(short = 'o', long, default_value = ".")]
    #[serde(skip)]
    pub out: PathBuf,
}

pub fn run(cmd: &ExperimentCommand, exec: Execution) -> Result<()> {
    match cmd {
        ExperimentCommand::Fig2(a) => fig2(a, exec),
        ExperimentCommand::Fig3(a) => fig3(a, exec),
        ExperimentCommand::Fig4(a) => fig4(a, exec),
        ExperimentCommand::Fig5(a) => fig5(a, exec),
        ExperimentCommand::Fig6(a) => fig6(a, exec),
    }
}

fn shots_name(s: Option<u64>) -> String {
    s.map_or_else(|| "inf".into(), |n| n.to_string())
}

#[derive(Serialize)]
struct Check {
    what: String,
    value: f64,
    threshold: f64,
    holds: bool,
}

impl Check {
    fn below(what: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { what: what.into(), value, threshold, holds: value < threshold }
    }

    fn at_least(what: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { what: what.into(), value, threshold, holds: value >= threshold }
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("  [{}] {}: {:.4e} (threshold {:.4e})", if c.holds { "ok" } else { "!!" }, c.what, c.value, c.threshold);
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    checks: &'a [Check],
    report: &'a T,
}

fn fig2(a: &Fig2Args, exec: Execution) -> Result<()> {
    let cfg = Fig2Config { shots: a.shots.iter().map(|s| s.0).collect(), noise_seed: a.noise_seed, ..Default::default() };
    let manifest = a.data.manifest("experiment fig2", &cfg)?.seed("noise", a.noise_seed);
    let data = a.data.prepare(exec)?;
    let r = run_fig2(&data, &cfg, exec).context("fitting")?;
    let mut out = Output::create(&a.data.out, &manifest)?;

    let mut checks = Vec::new();
    for f in &r.fits {
        let s = shots_name(f.shots);
        checks.push(Check::below(format!("N={s}: H median |err| / mean |h|"), f.h.median_abs_err / f.h.mean_true_abs, 0.1));
        checks.push(Check::below(format!("N={s}: S median |err| / mean s"), f.s.median_abs_err / f.s.mean_true_abs, 0.1));
    }
    println!("fig2: kappa={} rows={} {}", r.kappa, r.rows, if r.rank.is_full_rank() { "full rank" } else { "RANK DEFICIENT" });
    print_checks(&checks);
    out.json("fig2_report.json", &Report { checks: &checks, report: &r })?;

    #[derive(Serialize)]
    struct Row<'a> {
        parameter: &'a str,
        kind: &'a str,
        shots: String,
        truth: f64,
        estimate: f64,
        abs_error: f64,
    }
    let mut rows = Vec::new();
    for f in &r.fits {
        for (i, label) in r.labels.iter().enumerate() {
            rows.push(Row {
                parameter: label,
                kind: if r.is_h[i] { "H" } else { "S" },
                shots: shots_name(f.shots),
                truth: r.truth[i],
                estimate: f.estimate[i],
                abs_error: (f.estimate[i] - r.truth[i]).abs(),
            });
        }
    }
    out.csv("fig2_scatter.csv", rows)?;

    #[derive(Serialize)]
    struct Bin {
        shots: String,
        kind: &'static str,
        lo: f64,
        hi: f64,
        count: usize,
    }
    let mut bins = Vec::new();
    for f in &r.fits {
        for (kind, h) in [("H", &f.h_histogram), ("S", &f.s_histogram)] {
            for (b, &count) in h.counts.iter().enumerate() {
                bins.push(Bin { shots: shots_name(f.shots), kind, lo: h.edges[b], hi: h.edges[b + 1], count });
            }
        }
    }
    out.csv("fig2_histogram.csv", bins)?;

    for f in &r.fits {
        let s = shots_name(f.shots);
        let pick = |h: bool| -> Vec<(f64, f64)> {
            (0..r.truth.len()).filter(|&i| r.is_h[i] == h).map(|i| (r.truth[i], f.estimate[i])).collect()
        };
        let plot = Plot {
            title: format!("Estimated vs true rates, N = {s}"),
            xlabel: "true rate".into(),
            ylabel: "estimated rate".into(),
            diagonal: true,
            series: vec![
                Series { name: "Hamiltonian".into(), points: pick(true), line: false },
                Series { name: "stochastic".into(), points: pick(false), line: false },
            ],
            ..Default::default()
        };
        out.text(&format!("fig2_scatter_N{s}.svg"), &plot.render(&out.hash))?;
        let svg = histogram(
            &format!("|estimate - truth|, N = {s}"),
            "absolute error",
            &f.h_histogram.edges,
            &[("Hamiltonian", &f.h_histogram.counts), ("stochastic", &f.s_histogram.counts)],
            &out.hash,
        );
        out.text(&format!("fig2_histogram_N{s}.svg"), &svg)?;
    }
    out.finish();
    Ok(())
}

fn fig3(a: &Fig3Args, exec: Execution) -> Result<()> {
    let cfg = Fig3Config {
        counts: a.counts.clone(),
        subsets: a.subsets,
        shots: a.shots.iter().map(|s| s.0).collect(),
        noise_seed: a.noise_seed,
        subset_seed: a.subset_seed,
        bootstrap: a.bootstrap,
    };
    let manifest =
        a.data.manifest("experiment fig3", &cfg)?.seed("noise", a.noise_seed).seed("subsets", a.subset_seed);
    let data = a.data.prepare(exec)?;
    let r = run_fig3(&data, &cfg, exec).context("sub-sampling fits")?;
    let mut out = Output::create(&a.data.out, &manifest)?;

    let mut checks = Vec::new();
    for &(class, reference) in &r.reference {
        if let Some(s) = r.series(class, None) {
            checks.push(Check::below(
                format!("{} at full count, N=inf, vs reference", class.name()),
                *s.mean_abs_err.last().expect("nonempty"),
                reference,
            ));
        }
    }
    println!("fig3: {} subsets per count, {} observables per circuit", r.subsets, r.observables_per_circuit);
    print_checks(&checks);
    out.json("fig3_report.json", &Report { checks: &checks, report: &r })?;

    #[derive(Serialize)]
    struct Row {
        class: &'static str,
        shots: String,
        circuits: usize,
        mean_abs_err: f64,
        band: f64,
        reference: f64,
    }
    let reference = |c: ParamClass| r.reference.iter().find(|x| x.0 == c).map_or(f64::NAN, |x| x.1);
    let rows = r.series.iter().flat_map(|s| {
        r.counts.iter().enumerate().map(move |(i, &c)| Row {
            class: s.class.name(),
            shots: shots_name(s.shots),
            circuits: c,
            mean_abs_err: s.mean_abs_err[i],
            band: s.band[i],
            reference: reference(s.class),
        })
    });
    out.csv("fig3_series.csv", rows.collect::<Vec<_>>())?;

    for &(class, refv) in &r.reference {
        let series = r
            .series
            .iter()
            .filter(|s| s.class == class)
            .map(|s| Series {
                name: format!("N = {}", shots_name(s.shots)),
                points: r.counts.iter().map(|&c| c as f64).zip(s.mean_abs_err.iter().copied()).collect(),
                line: true,
            })
            .collect();
        let plot = Plot {
            title: format!("{}: mean absolute error", class.name()),
            xlabel: "circuits".into(),
            ylabel: "mean |estimate - truth|".into(),
            log_y: true,
            hlines: vec![refv],
            series,
            ..Default::default()
        };
        let file = format!("fig3_{}.svg", class.name().to_lowercase().replace(' ', "_"));
        out.text(&file, &plot.render(&out.hash))?;
    }
    out.finish();
    Ok(())
}

fn fig4(a: &Fig4Args, exec: Execution) -> Result<()> {
    let cfg = Fig4Config { etas: a.etas.clone(), models: a.models, seed: a.subset_seed };
    let manifest = a.data.manifest("experiment fig4", &cfg)?.seed("subsets", a.subset_seed);
    let data = a.data.prepare(exec)?;
    let r = run_fig4(&data, &cfg, exec).context("fitting reduced models")?;
    let mut out = Output::create(&a.data.out, &manifest)?;

    let checks: Vec<Check> = r
        .rows
        .iter()
        .map(|row| Check::below(format!("eta={:.4}: median |err| vs mean |rate|", row.eta), row.stats.median, r.mean_true_abs))
        .collect();
    println!("fig4: kappa={} mean |rate| {:.3e}; {}", r.kappa, r.mean_true_abs, r.note);
    print_checks(&checks);
    out.json("fig4_report.json", &Report { checks: &checks, report: &r })?;

    #[derive(Serialize)]
    struct Row {
        eta: f64,
        size: usize,
        fits: usize,
        count: usize,
        min: f64,
        q1: f64,
        median: f64,
        q3: f64,
        max: f64,
        mean: f64,
    }
    out.csv(
        "fig4_box.csv",
        r.rows
            .iter()
            .map(|x| {
                let b = &x.stats;
                Row { eta: x.eta, size: x.size, fits: x.fits, count: b.count, min: b.min, q1: b.q1, median: b.median, q3: b.q3, max: b.max, mean: b.mean }
            })
            .collect::<Vec<_>>(),
    )?;
    let boxes: Vec<(String, BoxStats)> = r.rows.iter().map(|x| (format!("{:.3}", x.eta), x.stats.clone())).collect();
    let svg = boxplot("Reduced models", "fraction of parameters kept", "|estimate - truth|", &boxes, Some(r.mean_true_abs), &out.hash);
    out.text("fig4_box.svg", &svg)?;
    out.finish();
    Ok(())
}

fn fig5(a: &Fig5Args, exec: Execution) -> Result<()> {
    let cfg = Fig5Config {
        n: a.n,
        depth: a.depth,
        circuits: a.circuits,
        w: a.w,
        models: a.models,
        scales: a.scales.clone(),
        seed: a.seed,
        design_seed: a.design_seed,
    };
    let manifest = RunManifest::new("experiment fig5", &cfg)?.seed("rates", a.seed).seed("design", a.design_seed);
    eprintln!("simulating {} models x {} scales on {} circuits (dense backend)", a.models, a.scales.len(), a.circuits);
    let r = run_fig5(&cfg, exec).context("scaling study")?;
    let mut out = Output::create(&a.out, &manifest)?;

    let mut checks = Vec::new();
    if let Some(first) = r.rows.first() {
        checks.push(Check::below(format!("c={}: median |err| / mean |rate|", first.c), first.median_ratio, 0.1));
    }
    for row in r.rows.iter().filter(|x| x.c >= 12.0) {
        checks.push(Check::at_least(format!("c={}: median |err| / mean |rate|", row.c), row.median_ratio, 0.4));
    }
    checks.push(Check::at_least("Spearman(c, median |err|)", r.trend, 0.9));
    println!("fig5: kappa={} {}", r.kappa, if r.rank.is_full_rank() { "full rank" } else { "RANK DEFICIENT" });
    print_checks(&checks);
    out.json("fig5_report.json", &Report { checks: &checks, report: &r })?;

    #[derive(Serialize)]
    struct Row {
        c: f64,
        mean_abs_rate: f64,
        median_ratio: f64,
        count: usize,
        min: f64,
        q1: f64,
        median: f64,
        q3: f64,
        max: f64,
        mean: f64,
    }
    out.csv(
        "fig5_box.csv",
        r.rows
            .iter()
            .map(|x| {
                let b = &x.stats;
                Row {
                    c: x.c,
                    mean_abs_rate: x.mean_abs_rate,
                    median_ratio: x.median_ratio,
                    count: b.count,
                    min: b.min,
                    q1: b.q1,
                    median: b.median,
                    q3: b.q3,
                    max: b.max,
                    mean: b.mean,
                }
            })
            .collect::<Vec<_>>(),
    )?;
    let boxes: Vec<(String, BoxStats)> = r.rows.iter().map(|x| (format!("{}", x.c), x.stats.clone())).collect();
    out.text("fig5_box.svg", &boxplot("Error vs rate scale", "c", "|estimate - truth|", &boxes, None, &out.hash))?;
    let ratio = Plot {
        title: "Median error relative to mean |rate|".into(),
        xlabel: "c".into(),
        ylabel: "median |err| / mean |rate|".into(),
        series: vec![Series { name: "median ratio".into(), points: r.rows.iter().map(|x| (x.c, x.median_ratio)).collect(), line: true }],
        ..Default::default()
    };
    out.text("fig5_ratio.svg", &ratio.render(&out.hash))?;
    out.finish();
    Ok(())
}

fn class_name(c: SparseClass) -> &'static str {
    match c {
        SparseClass::HOnly => "H only",
        SparseClass::SOnly => "S only",
        SparseClass::MixedSpam => "mixed + SPAM",
    }
}

fn fig6(a: &Fig6Args, exec: Execution) -> Result<()> {
    let cfg = Fig6Config {
        n: a.n,
        depth: a.depth,
        w: a.w,
        kappas: a.kappas.clone(),
        instances: a.instances,
        batch: a.batch,
        max_circuits: a.max_circuits,
        seed: a.seed,
    };
    let manifest = RunManifest::new("experiment fig6", &cfg)?.seed("seed", a.seed);
    let r = run_fig6(&cfg, exec).context("rank study")?;
    let mut out = Output::create(&a.out, &manifest)?;
    let checks = vec![
        Check::at_least("fraction of instances reaching rank/kappa = 1", r.instances.iter().filter(|i| i.circuits_to_full_rank.is_some()).count() as f64 / r.instances.len().max(1) as f64, 1.0),
        Check::at_least("paired fraction with H-only needing no more circuits", r.h_not_more_fraction, 0.9),
    ];
    println!("fig6: {} instances", r.instances.len());
    print_checks(&checks);
    out.json("fig6_report.json", &Report { checks: &checks, report: &r })?;

    #[derive(Serialize)]
    struct Curve {
        class: &'static str,
        sampled: usize,
        instance: usize,
        kappa: usize,
        circuits: usize,
        rank_ratio: f64,
    }
    let curves: Vec<Curve> = r
        .instances
        .iter()
        .flat_map(|i| {
            i.curve.iter().map(move |&(c, ratio)| Curve {
                class: class_name(i.class),
                sampled: i.sampled,
                instance: i.instance,
                kappa: i.kappa,
                circuits: c,
                rank_ratio: ratio,
            })
        })
        .collect();
    out.csv("fig6_curves.csv", curves)?;

    #[derive(Serialize)]
    struct Summary {
        class: &'static str,
        sampled: usize,
        instance: usize,
        kappa: usize,
        circuits_to_full_rank: Option<usize>,
        final_ratio: f64,
    }
    out.csv(
        "fig6_summary.csv",
        r.instances
            .iter()
            .map(|i| Summary {
                class: class_name(i.class),
                sampled: i.sampled,
                instance: i.instance,
                kappa: i.kappa,
                circuits_to_full_rank: i.circuits_to_full_rank,
                final_ratio: i.final_ratio,
            })
            .collect::<Vec<_>>(),
    )?;
    let series = SparseClass::ALL
        .iter()
        .map(|&c| Series {
            name: class_name(c).into(),
            points: r
                .instances
                .iter()
                .filter(|i| i.class == c)
                .filter_map(|i| i.circuits_to_full_rank.map(|n| (i.kappa as f64, n as f64)))
                .collect(),
            line: false,
        })
        .collect();
    let plot = Plot {
        title: "Circuits needed for rank/kappa = 1".into(),
        xlabel: "kappa".into(),
        ylabel: "circuits".into(),
        log_x: true,
        log_y: true,
        series,
        ..Default::default()
    };
    out.text("fig6_circuits.svg", &plot.render(&out.hash))?;
    out.finish();
    Ok(())
}
