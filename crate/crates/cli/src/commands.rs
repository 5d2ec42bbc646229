//! model-gen, design-gen, simulate, fit and rank.

use anyhow::{bail, Context, Result};
use lgst_core::design::{build_design, rank_report, DesignMatrix, ExperimentDesign, LayerSampler, RankReport};
use lgst_core::io::{align_dataset, read_dataset_rows, sidecar_path, write_dataset, EstimateFile};
use lgst_core::model::{build_paper_model, ErrorModel, ModelFile, RateVector};
use lgst_core::simulator::{simulate_design, SimulatorConfig};
use lgst_core::solver::{bootstrap, CompressedDesign};
use lgst_core::Execution;
use serde::Serialize;

use crate::manifest::{Output, RunManifest};
use crate::{DesignGenArgs, FitArgs, ModelGenArgs, RankArgs, SimulateArgs, Uncertainty};

fn parse_edges(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p.split_once('-').with_context(|| format!("edge {p:?} is not of the form a-b"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

fn parse_model(bytes: &[u8]) -> Result<(ErrorModel, Option<RateVector>)> {
    let file: ModelFile = serde_json::from_slice(bytes).context("parsing model file")?;
    ErrorModel::from_file(&file).context("validating model")
}

fn parse_design(bytes: &[u8]) -> Result<ExperimentDesign> {
    ExperimentDesign::from_json(std::str::from_utf8(bytes)?).context("parsing design file")
}

fn check_qubits(design: &ExperimentDesign, model: &ErrorModel) -> Result<()> {
    if design.n != model.num_qubits() {
        bail!(lgst_core::Error::Dimension { left: model.num_qubits(), right: design.n });
    }
    Ok(())
}

fn rank_summary(r: &RankReport) -> String {
    format!(
        "rank {}/{} (H {}/{}, S {}/{}), condition {}",
        r.joint.rank,
        r.kappa,
        r.h.rank,
        r.h.cols,
        r.s.rank,
        r.s.cols,
        r.joint.condition.map_or("inf".into(), |c| format!("{c:.3e}"))
    )
}

fn warn_rank(r: &RankReport) {
    if !r.is_full_rank() {
        eprintln!(
            "warning: design matrix is rank deficient: rank {} of {} parameters, null-space dimension {} (H {}, S {}); \
             rates in the null space are not identifiable",
            r.joint.rank,
            r.kappa,
            r.kappa - r.joint.rank,
            r.h.cols - r.h.rank,
            r.s.cols - r.s.rank
        );
    }
}

pub fn model_gen(a: &ModelGenArgs) -> Result<()> {
    let edges = a.edges.as_deref().map(parse_edges).transpose()?;
    let (model, rates) = build_paper_model(a.n, edges.as_deref(), a.seed, a.c, a.coupling.into()).context("building model")?;
    let manifest = RunManifest::new("model-gen", a)?.seed("seed", a.seed);
    let mut out = Output::create(&a.out, &manifest)?;
    out.json("model.json", &model.to_file(Some(&rates)))?;
    let d = model.diagnostics();
    println!("model: n={} kappa={} ({} H, {} S) over {} gates", d.n, d.kappa, d.num_h, d.num_s, d.num_gates);
    out.finish();
    Ok(())
}

pub fn design_gen(a: &DesignGenArgs) -> Result<()> {
    let sampler = LayerSampler { p_cz: a.p_cz, ..LayerSampler::ring(a.n) };
    let design = ExperimentDesign::random(a.n, a.w, a.depth, a.circuits, sampler, a.seed).context("sampling design")?;
    let manifest = RunManifest::new("design-gen", a)?.seed("seed", a.seed);
    let mut out = Output::create(&a.out, &manifest)?;
    out.json("design.json", &design)?;
    println!(
        "design: {} circuits of depth {}, {} observables each, {} rows",
        design.circuits.len(),
        design.depth,
        design.observables().len(),
        design.num_rows()
    );
    out.finish();
    Ok(())
}

pub fn simulate(a: &SimulateArgs, exec: Execution) -> Result<()> {
    let mut manifest = RunManifest::new("simulate", a)?.seed("seed", a.seed);
    let design = parse_design(&manifest.input("design", &a.design)?)?;
    let (model, rates) = parse_model(&manifest.input("model", &a.model)?)?;
    check_qubits(&design, &model)?;
    let Some(rates) = rates else { bail!(lgst_core::Error::Model("model file has no rates to simulate".into())) };
    if !(a.c > 0.0 && a.c.is_finite()) {
        bail!(lgst_core::Error::Model(format!("rate scale must be positive, got {}", a.c)));
    }
    let backend = crate::backend(a.backend, a.k, design.n);
    let config = SimulatorConfig { max_dense_qubits: a.max_dense_qubits, ..SimulatorConfig::new(backend, a.shots.0, a.seed) };
    let scale = model.recipe().map_or(1.0, |r| r.scale_c) * a.c;
    let model_ref = manifest.reference("model").expect("recorded");
    let mut out = Output::create(&a.out, &manifest)?;
    let ds = simulate_design(&design, &model, &rates.scaled(a.c), &config, &model_ref, scale, exec).context("simulating")?;
    let path = out.path("data.csv");
    write_dataset(&path, &ds, &out.hash)?;
    out.record(path.clone());
    out.record(sidecar_path(&path));
    println!("dataset: {} rows, backend {}, shots {}", ds.rows.len(), backend.name(), a.shots.0.map_or("inf".into(), |n| n.to_string()));
    out.finish();
    Ok(())
}

fn kept_rows(dm: &DesignMatrix, model: &ErrorModel, delta: &[f64]) -> DesignMatrix {
    let mut kept = DesignMatrix::empty(model);
    for (i, d) in delta.iter().enumerate() {
        if !d.is_nan() {
            kept.push_row(*dm.row_info(i), &dm.row_entries(i));
        }
    }
    kept
}

pub fn fit(a: &FitArgs, exec: Execution) -> Result<()> {
    let mut manifest = RunManifest::new("fit", a)?.seed("seed", a.seed);
    let design = parse_design(&manifest.input("design", &a.design)?)?;
    let (model, _) = parse_model(&manifest.input("model", &a.model)?)?;
    check_qubits(&design, &model)?;
    manifest.input("data", &a.data)?;
    let rows = read_dataset_rows(&a.data).context("reading dataset")?;
    let dm = build_design(&design, &model, exec).context("building design matrix")?;
    let aligned = align_dataset(&design, &dm, &rows);
    if aligned.missing == dm.num_rows() {
        bail!(lgst_core::Error::Format("dataset has no rows matching the design".into()));
    }
    if aligned.missing > 0 {
        eprintln!("warning: dropped {} of {} design rows with no data in the dataset", aligned.missing, dm.num_rows());
    }
    if aligned.unmatched > 0 {
        eprintln!("warning: ignored {} dataset rows that match no circuit/observable of the design", aligned.unmatched);
    }
    let rank = rank_report(&kept_rows(&dm, &model, &aligned.delta));
    warn_rank(&rank);

    let circuits: Vec<usize> = (0..design.circuits.len()).collect();
    let cd = CompressedDesign::new(&dm, &circuits, &[&aligned.delta]).context("compressing design")?;
    let mut est = cd.solve(0);
    let label = match a.uncertainty {
        Uncertainty::None => None,
        Uncertainty::Linear => {
            let var: Vec<f64> = aligned.variance.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
            est.stderr = Some(cd.linear_stderr(&dm, &circuits, &var, &est));
            Some("linear".to_string())
        }
        Uncertainty::Bootstrap => {
            let b = bootstrap(&dm, &circuits, &aligned.delta, &est.params, a.replicates, a.seed, exec)
                .context("bootstrap")?;
            est.stderr = Some(b.stderr);
            Some(format!("bootstrap ({} replicates over circuits, seed {})", a.replicates, a.seed))
        }
    };
    let mut file = EstimateFile::new(&model, &est, &manifest.reference("model").expect("recorded"), "");
    file.solver_meta.uncertainty = label;
    file.solver_meta.rank = Some(rank.clone());
    file.solver_meta.dropped_rows = aligned.missing;
    let mut out = Output::create(&a.out, &manifest)?;
    file.manifest = out.hash.clone();
    out.json("estimate.json", &file)?;
    println!(
        "fit: {} rows, {}; residuals H {:.3e} S {:.3e}; NNLS {} iterations, KKT residual {:.2e}",
        dm.num_rows() - aligned.missing,
        rank_summary(&rank),
        est.hamiltonian.residual,
        est.stochastic.residual,
        est.stochastic.iterations,
        est.stochastic.kkt_residual
    );
    out.finish();
    if !est.stochastic.converged {
        bail!(lgst_core::Error::NonConvergence { what: "NNLS".into(), iterations: est.stochastic.iterations });
    }
    Ok(())
}

#[derive(Serialize)]
struct RankFile<'a> {
    rows: usize,
    nnz: usize,
    null_space_dim: usize,
    report: &'a RankReport,
}

pub fn rank(a: &RankArgs, exec: Execution) -> Result<()> {
    let mut manifest = RunManifest::new("rank", a)?;
    let design = parse_design(&manifest.input("design", &a.design)?)?;
    let (model, _) = parse_model(&manifest.input("model", &a.model)?)?;
    check_qubits(&design, &model)?;
    let dm = build_design(&design, &model, exec).context("building design matrix")?;
    let report = rank_report(&dm);
    warn_rank(&report);
    let mut out = Output::create(&a.out, &manifest)?;
    out.json(
        "rank.json",
        &RankFile { rows: dm.num_rows(), nnz: dm.nnz(), null_space_dim: report.kappa - report.joint.rank, report: &report },
    )?;
    println!("design matrix {}x{}: {}", dm.num_rows(), dm.kappa(), rank_summary(&report));
    out.finish();
    Ok(())
}
