//! Simulator accuracy and statistical behaviour of the estimator.

use lgst_core::design::{build_design, ExperimentDesign, LayerSampler};
use lgst_core::experiments::fit_all;
use lgst_core::model::{build_paper_model, ErrorModel, RateVector};
use lgst_core::simulator::{add_shot_noise, simulate_exact, Backend, ExactData, SimulatorConfig};
use lgst_core::solver::{bootstrap, median, shot_variance, CompressedDesign};
use lgst_core::Execution;

const EXEC: Execution = Execution::Parallel;

fn exact(design: &ExperimentDesign, model: &ErrorModel, rates: &RateVector, backend: Backend) -> ExactData {
    simulate_exact(design, model, rates, &SimulatorConfig::new(backend, None, 0), EXEC).unwrap()
}

fn max_diff(a: &ExactData, b: &ExactData) -> f64 {
    a.flat_values().iter().zip(b.flat_values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn deltas(values: &[Vec<f64>], ideal: &[i8]) -> Vec<f64> {
    values.iter().flatten().zip(ideal).map(|(v, &i)| v - f64::from(i)).collect()
}

#[test]
fn high_order_taylor_matches_dense_on_small_registers() {
    for n in 1..=3 {
        let (model, rates) = build_paper_model(n, None, 20 + n as u64, 1.0, Default::default()).unwrap();
        let design = ExperimentDesign::random(n, n.min(2), 15, 40, LayerSampler::ring(n), 30 + n as u64).unwrap();
        let dense = exact(&design, &model, &rates, Backend::DenseExact);
        // Truncation shrinks by roughly two orders of magnitude per two orders of expansion.
        for (k, tol) in [(5, 1e-6), (7, 1e-9)] {
            let d = max_diff(&dense, &exact(&design, &model, &rates, Backend::Taylor { k }));
            assert!(d < tol, "n={n}: k={k} differs from dense by {d:e}");
        }
    }
}

#[test]
fn taylor_error_shrinks_with_order_at_five_qubits() {
    let n = 5;
    let (model, rates) = build_paper_model(n, None, 5, 1.0, Default::default()).unwrap();
    let design = ExperimentDesign::random(n, 2, 15, 30, LayerSampler::ring(n), 6).unwrap();
    let dense = exact(&design, &model, &rates, Backend::DenseExact);
    let errs: Vec<f64> =
        (1..=4).map(|k| max_diff(&dense, &exact(&design, &model, &rates, Backend::Taylor { k }))).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "errors by order {errs:?}");
    }
    // At these rates third order sits within about 1e-3 of dense and fourth order within 1e-4.
    assert!(errs[2] < 5e-3, "k=3 error {:e}", errs[2]);
    assert!(errs[3] < 1e-3, "k=4 error {:e}", errs[3]);
}

/// Root-mean-square H-rate error over `seeds` noise realizations of first-order data.
fn h_rms(model: &ErrorModel, rates: &RateVector, circuits: usize, shots: u64, seeds: u64) -> f64 {
    let n = model.num_qubits();
    let design = ExperimentDesign::random(n, 2, 15, circuits, LayerSampler::ring(n), 41).unwrap();
    let dm = build_design(&design, model, EXEC).unwrap();
    let data = exact(&design, model, rates, Backend::Taylor { k: 1 });
    let ideal = data.flat_ideal();
    let h = model.h_indices();
    let mut acc = 0.0;
    for s in 0..seeds {
        let noisy = add_shot_noise(&data, &design.observables(), shots, 100 + s, EXEC).unwrap();
        let est = fit_all(&dm, &deltas(&noisy, &ideal)).unwrap().full_rates(model.kappa());
        acc += h.iter().map(|&i| (est[i] - rates.values()[i]).powi(2)).sum::<f64>() / h.len() as f64;
    }
    (acc / seeds as f64).sqrt()
}

#[test]
fn error_scales_as_inverse_root_of_measurements() {
    let (model, rates) = build_paper_model(4, None, 8, 1.0, Default::default()).unwrap();
    // Sixteen times the shots: error drops four-fold.
    let r_shots = h_rms(&model, &rates, 200, 500, 6) / h_rms(&model, &rates, 200, 8000, 6);
    assert!((3.0..5.3).contains(&r_shots), "shot ratio {r_shots}");
    // Four times the circuits: error roughly halves.
    let r_circ = h_rms(&model, &rates, 150, 1000, 6) / h_rms(&model, &rates, 600, 1000, 6);
    assert!((1.5..2.7).contains(&r_circ), "circuit ratio {r_circ}");
}

#[test]
fn linear_and_bootstrap_uncertainties_agree() {
    let n = 4;
    let (model, rates) = build_paper_model(n, None, 9, 1.0, Default::default()).unwrap();
    let design = ExperimentDesign::random(n, 2, 15, 400, LayerSampler::ring(n), 10).unwrap();
    let dm = build_design(&design, &model, EXEC).unwrap();
    let data = exact(&design, &model, &rates, Backend::Taylor { k: 1 });
    let shots = 1000;
    let noisy = add_shot_noise(&data, &design.observables(), shots, 11, EXEC).unwrap();
    let y = deltas(&noisy, &data.flat_ideal());
    let var: Vec<f64> = noisy.iter().flatten().map(|&v| shot_variance(v, Some(shots))).collect();

    let circuits: Vec<usize> = (0..design.circuits.len()).collect();
    let cd = CompressedDesign::new(&dm, &circuits, &[&y]).unwrap();
    let est = cd.solve(0);
    let linear = cd.linear_stderr(&dm, &circuits, &var, &est);
    let boot = bootstrap(&dm, &circuits, &y, &est.params, 200, 12, EXEC).unwrap();

    // Compare on H rates; the NNLS active set makes clipped S rates non-Gaussian.
    let ratios: Vec<f64> = est
        .params
        .iter()
        .enumerate()
        .filter(|(_, &p)| dm.col_is_h()[p])
        .map(|(j, _)| boot.stderr[j] / linear[j])
        .collect();
    let m = median(&ratios);
    assert!((0.75..1.33).contains(&m), "median bootstrap/linear ratio {m}");
}
