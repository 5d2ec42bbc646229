//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs the full-size studies, so it takes a while (about 20 minutes on one core). Failing
//! criteria are reported but only make the process exit non-zero when
//! `LGST_ACCEPTANCE_STRICT=1` is set.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use lgst_core::design::{build_design, sample_random_circuit, LayerSampler};
use lgst_core::experiments::{
    non_increasing_within, run_fig2, run_fig3, run_fig4, run_fig5, run_fig6, sample_sparse_support, sparse_model,
    Fig2Config, Fig3Config, Fig4Config, Fig5Config, Fig6Config, LargeConfig, LargeDataset, ParamClass, SparseClass,
};
use lgst_core::model::{build_paper_model, CouplingRule, ErrorModel, RateVector};
use lgst_core::pauli::{PauliString, StabilizerState};
use lgst_core::propagation::CircuitSensitivity;
use lgst_core::simulator::{simulate_dense, DenseOptions};
use lgst_core::solver::nnls::{kkt_residual, nnls};
use lgst_core::solver::CompressedDesign;
use lgst_core::Execution;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

// Oracle equivalence
const ORACLE_TRIPLES: usize = 600;
const ORACLE_FD_STEP: f64 = 1e-5;
const ORACLE_FD_TOL: f64 = 1e-6;
const ORACLE_CLIFFORD_CIRCUITS: usize = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
// Linear self-consistency
const SELF_TOL_H: f64 = 1e-10;
const SELF_TOL_S: f64 = 1e-10;
const SELF_BUDGET: Duration = Duration::from_secs(600);
// Fig. 2
const FIG2_MEDIAN_FRACTION: f64 = 0.10;
const FIG2_H_CUTOFF: f64 = 1e-3;
const FIG2_S_CUTOFF: f64 = 5e-4;
/// "Concentrated below" is read as: at least this quantile of the errors lies below the cutoff.
const FIG2_MASS_QUANTILE: f64 = 0.9;
// Fig. 3
const FIG3_SUBSETS: usize = 24;
const FIG3_BAND_ALLOWANCE: f64 = 1.0;
// Fig. 5
const FIG5_CIRCUITS: usize = 200;
const FIG5_SMALL_C_FRACTION: f64 = 0.10;
const FIG5_LARGE_C: f64 = 12.0;
const FIG5_LARGE_C_FRACTION: f64 = 0.40;
const FIG5_MIN_TREND: f64 = 0.9;
const FIG5_BUDGET: Duration = Duration::from_secs(30 * 60);
// Fig. 6
const FIG6_PAIRED_FRACTION: f64 = 0.9;
// NNLS
const NNLS_KKT_TOL: f64 = 1e-8;
const NNLS_SYSTEMS: usize = 1000;
const NNLS_AGREE_TOL: f64 = 1e-9;
// Performance
const PERF_ROWS: usize = 55_000;
const PERF_KAPPA: usize = 650;
const PERF_BUILD_BUDGET: Duration = Duration::from_secs(60);
const PERF_PEAK_BYTES: u64 = 4 << 30;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(o: &Outcome) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{} {:<18} {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail).unwrap();
    out.flush().unwrap();
}

fn random_model(n: usize, rng: &mut ChaCha20Rng) -> ErrorModel {
    if rng.random_bool(0.3) {
        return build_paper_model(n, None, 0, 1.0, CouplingRule::default()).unwrap().0;
    }
    let class = SparseClass::ALL[rng.random_range(0..3)];
    let kappa = rng.random_range(1..=8);
    let support = sample_sparse_support(n, kappa, rng).unwrap();
    sparse_model(n, class, &support, rng).unwrap()
}

fn oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut worst_fd = 0.0f64;
    let mut entries = 0usize;
    let mut ideal_ok = true;
    for _ in 0..ORACLE_TRIPLES {
        let n = rng.random_range(1..=3);
        let model = random_model(n, &mut rng);
        let depth = rng.random_range(1..=6);
        let circuit = sample_random_circuit(n, depth, &LayerSampler::ring(n), &mut rng).unwrap();
        let qubits: Vec<usize> = loop {
            let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            if !s.is_empty() {
                break s;
            }
        };
        let q = PauliString::z_type(n, &qubits);
        let row = CircuitSensitivity::new(&circuit, &model).unwrap().row(&q).unwrap();
        let dense = |v: Vec<f64>| {
            let r = RateVector::new(&model, v).unwrap();
            simulate_dense(&circuit, &model, &r, std::slice::from_ref(&q), DenseOptions::default()).unwrap().expectations[0]
        };
        ideal_ok &= dense(vec![0.0; model.kappa()]) == f64::from(row.ideal);
        let mut full = vec![0.0; model.kappa()];
        for &(p, v) in &row.entries {
            full[p] = v;
        }
        for (p, &d) in full.iter().enumerate() {
            let mut plus = vec![0.0; model.kappa()];
            plus[p] = ORACLE_FD_STEP;
            let mut minus = vec![0.0; model.kappa()];
            minus[p] = -ORACLE_FD_STEP;
            let fd = (dense(plus) - dense(minus)) / (2.0 * ORACLE_FD_STEP);
            worst_fd = worst_fd.max((fd - d).abs());
            entries += 1;
        }
    }

    // Conjugation and stabilizer signs against explicit matrices, including phases.
    let mut conj_checked = 0usize;
    let mut conj_mismatch = 0usize;
    let mut sign_checked = 0usize;
    let mut sign_mismatch = 0usize;
    for i in 0..ORACLE_CLIFFORD_CIRCUITS {
        let n = 1 + i % 3;
        let depth = rng.random_range(0..=8);
        let circuit = common::random_registry_circuit(n, depth, &mut rng);
        let u = common::circuit_unitary(&circuit);
        let ud = u.adjoint();
        let tab = circuit.tableau();
        let psi_dense = common::circuit_state(&circuit);
        let psi = StabilizerState::from_clifford(&tab);
        for p in common::all_paulis(n) {
            let p = p.with_phase(rng.random_range(0..4));
            let want = common::decode_pauli(&u.mul(&common::pauli_matrix(&p)).mul(&ud), n);
            conj_checked += 1;
            match want {
                Some((w, dev)) if dev < 1e-12 && w == tab.conjugate(&p).unwrap() => {}
                _ => conj_mismatch += 1,
            }
            if p.is_hermitian() {
                sign_checked += 1;
                let e = common::expectation(&psi_dense, &common::pauli_matrix(&p));
                let rounded = e.re.round();
                let exact = (e.re - rounded).abs() < 1e-12 && e.im.abs() < 1e-12;
                if !exact || psi.expectation(&p).unwrap() != rounded {
                    sign_mismatch += 1;
                }
            }
        }
    }
    let elapsed = t0.elapsed();
    Outcome {
        name: "oracle",
        pass: worst_fd <= ORACLE_FD_TOL && ideal_ok && conj_mismatch == 0 && sign_mismatch == 0 && elapsed < ORACLE_BUDGET,
        detail: format!(
            "{ORACLE_TRIPLES} triples, {entries} entries, max |row - FD| = {worst_fd:.2e} (tol {ORACLE_FD_TOL:.0e}); \
             ideal values exact: {ideal_ok}; conjugations {conj_checked} ({conj_mismatch} wrong); \
             stabilizer signs {sign_checked} ({sign_mismatch} wrong); {:.1}s (budget {}s)",
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    }
}

fn self_consistency(kkts: &mut Vec<f64>, outputs: &mut Vec<f64>) -> Outcome {
    let t0 = Instant::now();
    let cfg = LargeConfig { k: 1, ..Default::default() };
    let data = LargeDataset::prepare(&cfg, Execution::Parallel).unwrap();
    let y = data.deltas(None, 0, Execution::Parallel).unwrap();
    let est = CompressedDesign::all_circuits(&data.dm, &[&y]).unwrap().solve(0);
    let elapsed = t0.elapsed();
    let truth = data.truth.values();
    let (mut eh, mut es) = (0.0f64, 0.0f64);
    for (p, (&e, &t)) in est.rates.iter().zip(truth).enumerate() {
        if data.truth.is_h(p) {
            eh = eh.max((e - t).abs());
        } else {
            es = es.max((e - t).abs());
            outputs.push(e);
        }
    }
    kkts.push(est.stochastic.kkt_residual);
    let nonneg = truth.iter().enumerate().all(|(p, &t)| data.truth.is_h(p) || t >= 0.0);
    Outcome {
        name: "self-consistency",
        pass: eh <= SELF_TOL_H && es <= SELF_TOL_S && nonneg && elapsed < SELF_BUDGET,
        detail: format!(
            "n={} kappa={} circuits={} depth={}: max H err {eh:.2e} (tol {SELF_TOL_H:.0e}), max S err {es:.2e} \
             (tol {SELF_TOL_S:.0e}), truth S >= 0: {nonneg}; {:.1}s (budget {}s)",
            cfg.n,
            data.model.kappa(),
            cfg.circuits,
            cfg.depth,
            elapsed.as_secs_f64(),
            SELF_BUDGET.as_secs()
        ),
    }
}

fn fig2(data: &LargeDataset, kkts: &mut Vec<f64>, outputs: &mut Vec<f64>) -> Outcome {
    let r = run_fig2(data, &Fig2Config::default(), Execution::Parallel).unwrap();
    let inf = r.fits.iter().find(|f| f.shots.is_none()).unwrap();
    let finite = r.fits.iter().find(|f| f.shots == Some(1000)).unwrap();
    for f in &r.fits {
        kkts.push(f.nnls_kkt);
        outputs.extend(f.estimate.iter().zip(&r.is_h).filter(|(_, &h)| !h).map(|(v, _)| *v));
    }
    let frac = |v: &[f64], cut: f64| v.iter().filter(|&&x| x < cut).count() as f64 / v.len() as f64;
    let err = |h: bool| -> Vec<f64> {
        finite.estimate.iter().zip(&r.truth).zip(&r.is_h).filter(|(_, &x)| x == h).map(|((e, t), _)| (e - t).abs()).collect()
    };
    let (fh, fs) = (frac(&err(true), FIG2_H_CUTOFF), frac(&err(false), FIG2_S_CUTOFF));
    let h_ok = inf.h.median_abs_err < FIG2_MEDIAN_FRACTION * inf.h.mean_true_abs;
    let s_ok = inf.s.median_abs_err < FIG2_MEDIAN_FRACTION * inf.s.mean_true_abs;
    Outcome {
        name: "fig2",
        pass: h_ok && s_ok && fh >= FIG2_MASS_QUANTILE && fs >= FIG2_MASS_QUANTILE,
        detail: format!(
            "N=inf: H median {:.2e} vs {:.0}% of mean |h| {:.2e}; S median {:.2e} vs {:.0}% of mean s {:.2e}. \
             N=1000: {:.1}% of H errors < {FIG2_H_CUTOFF:.0e}, {:.1}% of S errors < {FIG2_S_CUTOFF:.0e} (need {:.0}%)",
            inf.h.median_abs_err,
            FIG2_MEDIAN_FRACTION * 100.0,
            inf.h.mean_true_abs,
            inf.s.median_abs_err,
            FIG2_MEDIAN_FRACTION * 100.0,
            inf.s.mean_true_abs,
            fh * 100.0,
            fs * 100.0,
            FIG2_MASS_QUANTILE * 100.0
        ),
    }
}

fn fig3(data: &LargeDataset) -> Outcome {
    let cfg = Fig3Config { subsets: FIG3_SUBSETS, ..Default::default() };
    let r = run_fig3(data, &cfg, Execution::Parallel).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for class in ParamClass::ALL {
        let Some(inf) = r.series(class, None) else { continue };
        let mono = non_increasing_within(&inf.mean_abs_err, &inf.band, FIG3_BAND_ALLOWANCE);
        let last: Vec<f64> = cfg.shots.iter().map(|&s| *r.series(class, s).unwrap().mean_abs_err.last().unwrap()).collect();
        let ordered = last.windows(2).all(|w| w[0] > w[1]);
        pass &= mono && ordered;
        parts.push(format!(
            "{}: non-increasing {mono}, full-count {} ordered {ordered}",
            class.name(),
            last.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" > ")
        ));
    }
    Outcome { name: "fig3", pass, detail: format!("{} subsets; {}", cfg.subsets, parts.join("; ")) }
}

fn fig4(data: &LargeDataset) -> Outcome {
    let cfg = Fig4Config::default();
    let r = run_fig4(data, &cfg, Execution::Parallel).unwrap();
    let med = |eta: f64| r.rows.iter().find(|row| (row.eta - eta).abs() < 1e-12).unwrap().stats.median;
    let tiny = med(1.0 / 650.0);
    let mids = [0.25, 0.5, 0.75].map(med);
    let full = med(1.0);
    let pass = tiny > r.mean_true_abs && mids.iter().all(|&m| m < r.mean_true_abs) && mids[2] > full;
    Outcome {
        name: "fig4",
        pass,
        detail: format!(
            "mean |rate| {:.2e}; median at eta=1/650 {tiny:.2e}, 1/4 {:.2e}, 1/2 {:.2e}, 3/4 {:.2e}, 1 {full:.2e}",
            r.mean_true_abs, mids[0], mids[1], mids[2]
        ),
    }
}

fn fig5() -> Outcome {
    let t0 = Instant::now();
    let cfg = Fig5Config { circuits: FIG5_CIRCUITS, ..Default::default() };
    let r = run_fig5(&cfg, Execution::Parallel).unwrap();
    let elapsed = t0.elapsed();
    let first = &r.rows[0];
    let large: Vec<_> = r.rows.iter().filter(|row| row.c >= FIG5_LARGE_C).collect();
    let large_min = large.iter().map(|row| row.median_ratio).fold(f64::INFINITY, f64::min);
    let pass = first.c == 1.0
        && first.median_ratio < FIG5_SMALL_C_FRACTION
        && large_min >= FIG5_LARGE_C_FRACTION
        && r.trend > FIG5_MIN_TREND
        && r.rank.is_full_rank()
        && elapsed < FIG5_BUDGET;
    Outcome {
        name: "fig5",
        pass,
        detail: format!(
            "n={} circuits={} models={} full rank {}; median/mean|rate| at c=1 {:.3} (< {FIG5_SMALL_C_FRACTION}), \
             min over c>={FIG5_LARGE_C} {:.3} (>= {FIG5_LARGE_C_FRACTION}); spearman {:.3} (> {FIG5_MIN_TREND}); \
             {:.0}s (budget {}s)",
            cfg.n,
            cfg.circuits,
            cfg.models,
            r.rank.is_full_rank(),
            first.median_ratio,
            large_min,
            r.trend,
            elapsed.as_secs_f64(),
            FIG5_BUDGET.as_secs()
        ),
    }
}

fn fig6() -> Outcome {
    let cfg = Fig6Config::default();
    let r = run_fig6(&cfg, Execution::Parallel).unwrap();
    let worst = r.instances.iter().map(|i| i.final_ratio).fold(f64::INFINITY, f64::min);
    Outcome {
        name: "fig6",
        pass: r.all_full_rank && r.h_not_more_fraction >= FIG6_PAIRED_FRACTION,
        detail: format!(
            "{} instances over kappa {:?}: all reach rank/kappa = 1: {} (min {:.3}); H-only needs no more circuits \
             than S-only in {:.1}% of {} pairs (need {:.0}%)",
            r.instances.len(),
            cfg.kappas,
            r.all_full_rank,
            worst,
            r.h_not_more_fraction * 100.0,
            r.pairs,
            FIG6_PAIRED_FRACTION * 100.0
        ),
    }
}

/// Exhaustive active-set solution: the best unconstrained fit on any column subset whose
/// solution is strictly positive.
fn exhaustive_nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (Vec<f64>, f64) {
    let k = a.ncols();
    let mut best = (vec![0.0; k], b.norm_squared());
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|&j| mask >> j & 1 == 1).collect();
        let sub = a.select_columns(&cols);
        let Ok(z) = sub.clone().svd(true, true).solve(b, 1e-14) else { continue };
        if z.iter().any(|&v| v <= 0.0) {
            continue;
        }
        let mut x = vec![0.0; k];
        for (&j, &v) in cols.iter().zip(z.iter()) {
            x[j] = v;
        }
        let obj = (a * DVector::from_column_slice(&x) - b).norm_squared();
        if obj < best.1 {
            best = (x, obj);
        }
    }
    best
}

fn nnls_check(kkts: &[f64], outputs: &[f64]) -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(202);
    let mut worst_x = 0.0f64;
    let mut worst_obj = 0.0f64;
    let mut worst_kkt = kkts.iter().copied().fold(0.0, f64::max);
    let mut negatives = outputs.iter().filter(|v| v.is_sign_negative()).count();
    for _ in 0..NNLS_SYSTEMS {
        let m = rng.random_range(3..=8);
        let a = DMatrix::from_fn(m, 3, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let s = nnls(&a, &b, 0.0);
        let (x, obj) = exhaustive_nnls(&a, &b);
        negatives += s.x.iter().filter(|v| v.is_sign_negative()).count();
        worst_kkt = worst_kkt.max(kkt_residual(&a, &b, &s.x));
        let got = (&a * DVector::from_column_slice(&s.x) - &b).norm_squared();
        worst_obj = worst_obj.max((got - obj).abs());
        worst_x = worst_x.max(s.x.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
    }
    Outcome {
        name: "nnls",
        pass: worst_kkt <= NNLS_KKT_TOL && negatives == 0 && worst_x <= NNLS_AGREE_TOL && worst_obj <= NNLS_AGREE_TOL,
        detail: format!(
            "{} fits: max KKT residual {worst_kkt:.2e} (tol {NNLS_KKT_TOL:.0e}); negative outputs {negatives}; \
             {NNLS_SYSTEMS} 3-parameter systems vs exhaustive: max |x diff| {worst_x:.2e}, max objective diff \
             {worst_obj:.2e} (tol {NNLS_AGREE_TOL:.0e})",
            kkts.len() + NNLS_SYSTEMS
        ),
    }
}

fn peak_rss_bytes() -> Option<u64> {
    let s = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = s.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn performance(data: &LargeDataset) -> Outcome {
    let t0 = Instant::now();
    let dm = build_design(&data.design, &data.model, Execution::Parallel).unwrap();
    let elapsed = t0.elapsed();
    let peak = peak_rss_bytes();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let shape_ok = dm.num_rows() == PERF_ROWS && dm.kappa() == PERF_KAPPA;
    Outcome {
        name: "performance",
        pass: shape_ok && elapsed < PERF_BUILD_BUDGET && peak.is_some_and(|p| p < PERF_PEAK_BYTES),
        detail: format!(
            "{}x{} design ({} nonzeros) built in {:.2}s on {threads} thread(s) (budget {}s); \
             process peak RSS {} (limit 4 GiB)",
            dm.num_rows(),
            dm.kappa(),
            dm.nnz(),
            elapsed.as_secs_f64(),
            PERF_BUILD_BUDGET.as_secs(),
            peak.map_or("unavailable".into(), |p| format!("{:.0} MiB", p as f64 / (1 << 20) as f64))
        ),
    }
}

fn main() {
    // libtest passes flags such as --nocapture or a name filter; only a listing request matters.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let t0 = Instant::now();
    let mut outcomes = Vec::new();
    let mut kkts = Vec::new();
    let mut outputs = Vec::new();
    let run = |o: Outcome, all: &mut Vec<Outcome>| {
        report(&o);
        all.push(o);
    };

    run(oracle(), &mut outcomes);
    run(self_consistency(&mut kkts, &mut outputs), &mut outcomes);
    let data = LargeDataset::prepare(&LargeConfig::default(), Execution::Parallel).unwrap();
    run(fig2(&data, &mut kkts, &mut outputs), &mut outcomes);
    run(fig3(&data), &mut outcomes);
    run(fig4(&data), &mut outcomes);
    run(performance(&data), &mut outcomes);
    drop(data);
    run(fig5(), &mut outcomes);
    run(fig6(), &mut outcomes);
    run(nnls_check(&kkts, &outputs), &mut outcomes);

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.0}s",
        outcomes.len() - failed.len(),
        failed.len(),
        t0.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        if std::env::var("LGST_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
