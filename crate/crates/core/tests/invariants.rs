//! Property tests for the algebraic and numerical invariants the fit relies on.

mod common;

use lgst_core::design::{build_design, ExperimentDesign, LayerSampler};
use lgst_core::model::build_paper_model;
use lgst_core::pauli::{CliffordTableau, Pauli, PauliString, StabilizerState};
use lgst_core::simulator::{simulate_exact, Backend, SimulatorConfig};
use lgst_core::solver::nnls::{kkt_residual, nnls};
use lgst_core::solver::qr::GivensQr;
use lgst_core::Execution;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (prop::collection::vec(0..4usize, n), 0..4u8).prop_map(move |(codes, phase)| {
        let terms: Vec<(usize, Pauli)> = codes.iter().enumerate().map(|(q, &c)| (q, LETTERS[c])).collect();
        PauliString::from_sparse(n, &terms).with_phase(phase)
    })
}

fn pauli_pair(max_n: usize) -> impl Strategy<Value = (PauliString, PauliString)> {
    (1..=max_n).prop_flat_map(|n| (pauli(n), pauli(n)))
}

fn pauli_triple(max_n: usize) -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1..=max_n).prop_flat_map(|n| (pauli(n), pauli(n), pauli(n)))
}

fn circuit_tableau(n: usize, depth: usize, seed: u64) -> CliffordTableau {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    common::random_registry_circuit(n, depth, &mut rng).tableau()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn product_matches_matrix_product((a, b) in pauli_pair(3)) {
        let n = a.num_qubits();
        let got = a.mul(&b).unwrap();
        let want = common::pauli_matrix(&a).mul(&common::pauli_matrix(&b));
        let (decoded, dev) = common::decode_pauli(&want, n).unwrap();
        prop_assert_eq!(got, decoded);
        prop_assert!(dev < 1e-12);
    }

    #[test]
    fn product_is_associative((a, b, c) in pauli_triple(70)) {
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn commutation_agrees_with_products((a, b) in pauli_pair(70)) {
        let ab = a.mul(&b).unwrap();
        let ba = b.mul(&a).unwrap();
        let commute = a.commutes(&b).unwrap();
        prop_assert_eq!(commute, b.commutes(&a).unwrap());
        if commute {
            prop_assert_eq!(ab, ba);
        } else {
            prop_assert_eq!(ab, ba.negated());
        }
    }

    #[test]
    fn hermitian_strings_square_to_identity(p in (1..70usize).prop_flat_map(pauli)) {
        let h = p.unsigned();
        prop_assert!(h.is_hermitian());
        prop_assert!(h.mul(&h).unwrap().is_identity());
        prop_assert_eq!(h.mul(&h).unwrap().phase_exp(), 0);
    }

    #[test]
    fn labels_round_trip(p in (1..70usize).prop_flat_map(pauli)) {
        let h = p.unsigned();
        prop_assert_eq!(PauliString::parse_unsigned(&h.to_label()).unwrap(), h.clone());
        prop_assert_eq!(h.to_string().parse::<PauliString>().unwrap(), h);
    }

    #[test]
    fn conjugation_is_an_automorphism(
        n in 1..6usize,
        seed in any::<u64>(),
        codes in prop::collection::vec((prop::collection::vec(0..4usize, 6), 0..4u8), 2),
    ) {
        let t = circuit_tableau(n, 6, seed);
        prop_assert!(t.is_symplectic());
        let mk = |(c, ph): &(Vec<usize>, u8)| {
            let terms: Vec<(usize, Pauli)> = (0..n).map(|q| (q, LETTERS[c[q]])).collect();
            PauliString::from_sparse(n, &terms).with_phase(*ph)
        };
        let (a, b) = (mk(&codes[0]), mk(&codes[1]));
        let ca = t.conjugate(&a).unwrap();
        let cb = t.conjugate(&b).unwrap();
        prop_assert_eq!(t.conjugate(&a.mul(&b).unwrap()).unwrap(), ca.mul(&cb).unwrap());
        prop_assert_eq!(ca.commutes(&cb).unwrap(), a.commutes(&b).unwrap());
        prop_assert_eq!(ca.is_hermitian(), a.is_hermitian());
        prop_assert_eq!(t.inverse().conjugate(&ca).unwrap(), a);
    }

    #[test]
    fn composition_matches_sequential_conjugation(n in 1..6usize, s1 in any::<u64>(), s2 in any::<u64>(), code in prop::collection::vec(0..4usize, 6)) {
        let inner = circuit_tableau(n, 4, s1);
        let outer = circuit_tableau(n, 4, s2);
        let terms: Vec<(usize, Pauli)> = (0..n).map(|q| (q, LETTERS[code[q]])).collect();
        let p = PauliString::from_sparse(n, &terms);
        let both = inner.then(&outer).unwrap();
        prop_assert_eq!(both.conjugate(&p).unwrap(), outer.conjugate(&inner.conjugate(&p).unwrap()).unwrap());
        prop_assert_eq!(outer.compose(&inner).unwrap(), both);
    }

    #[test]
    fn stabilizer_expectations_are_signs_of_the_group(n in 1..8usize, seed in any::<u64>(), code in prop::collection::vec(0..4usize, 8)) {
        let psi = StabilizerState::from_clifford(&circuit_tableau(n, 8, seed));
        let terms: Vec<(usize, Pauli)> = (0..n).map(|q| (q, LETTERS[code[q]])).collect();
        let p = PauliString::from_sparse(n, &terms);
        let e = psi.expectation(&p).unwrap();
        prop_assert!(e == 0.0 || e == 1.0 || e == -1.0);
        // Members of the group are exactly the Paulis commuting with every generator.
        let commutes_all = psi.generators().iter().all(|g| g.commutes(&p).unwrap());
        prop_assert_eq!(e != 0.0, commutes_all);
        prop_assert_eq!(psi.expectation(&p.negated()).unwrap(), -e);
    }

    #[test]
    fn nnls_is_feasible_and_optimal(
        rows in 1..12usize,
        cols in 1..8usize,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
        let sol = nnls(&a, &b, 0.0);
        prop_assert!(sol.converged);
        for &x in &sol.x {
            prop_assert!(x >= 0.0 && x.is_sign_positive());
        }
        prop_assert!(kkt_residual(&a, &b, &sol.x) <= 1e-8);
    }

    #[test]
    fn givens_qr_preserves_normal_equations(rows in 1..30usize, cols in 1..8usize, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut qr = GivensQr::new(cols, 1);
        let mut a = DMatrix::zeros(rows, cols);
        let mut y = DVector::zeros(rows);
        for i in 0..rows {
            let mut entries = Vec::new();
            for j in 0..cols {
                if rng.random_bool(0.5) {
                    entries.push((j, rng.random_range(-1.0..1.0)));
                }
            }
            for &(j, v) in &entries {
                a[(i, j)] = v;
            }
            y[i] = rng.random_range(-1.0..1.0);
            qr.add_row(&entries, &[y[i]]);
        }
        let r = qr.r();
        let qty = qr.qty();
        let ata = a.transpose() * &a;
        let rtr = r.transpose() * &r;
        prop_assert!((ata - rtr).amax() < 1e-12);
        let aty = a.transpose() * &y;
        let rtq = r.transpose() * qty.column(0);
        prop_assert!((aty - rtq).amax() < 1e-12);
        // ‖y‖² = ‖Qᵀy‖² + discarded residual.
        let total = qty.column(0).norm_squared() + qr.residual2()[0];
        prop_assert!((total - y.norm_squared()).abs() < 1e-12);
    }
}

#[test]
fn stabilizer_signs_match_dense_states() {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    let mut checked = 0;
    for trial in 0..120 {
        let n = 1 + trial % 3;
        let circuit = common::random_registry_circuit(n, 10, &mut rng);
        let psi = StabilizerState::from_clifford(&circuit.tableau());
        let dense = common::circuit_state(&circuit);
        for p in common::all_paulis(n) {
            let want = common::expectation(&dense, &common::pauli_matrix(&p));
            assert!(want.im.abs() < 1e-12);
            let want = want.re.round();
            assert_eq!(psi.expectation(&p).unwrap(), want, "circuit {trial}, observable {p}");
            checked += 1;
        }
    }
    assert!(checked >= 1000, "only {checked} checks");
}

/// With first-order data the measured deviations are exactly the design matrix times the rates.
#[test]
fn first_order_data_is_the_design_matrix_image() {
    let n = 4;
    let (model, rates) = build_paper_model(n, None, 11, 1.0, Default::default()).unwrap();
    let design = ExperimentDesign::random(n, 2, 8, 20, LayerSampler::ring(n), 12).unwrap();
    let dm = build_design(&design, &model, Execution::Sequential).unwrap();
    let data = simulate_exact(&design, &model, &rates, &SimulatorConfig::new(Backend::Taylor { k: 1 }, None, 0), Execution::Sequential)
        .unwrap();
    let pred = dm.apply(rates.values());
    let delta: Vec<f64> =
        data.flat_values().iter().zip(data.flat_ideal()).map(|(v, i)| v - f64::from(i)).collect();
    let err = pred.iter().zip(&delta).map(|(p, d)| (p - d).abs()).fold(0.0, f64::max);
    assert!(err < 1e-14, "max deviation {err}");
}

#[test]
fn parallel_and_sequential_agree_bitwise() {
    let n = 5;
    let (model, rates) = build_paper_model(n, None, 3, 1.0, Default::default()).unwrap();
    let design = ExperimentDesign::random(n, 2, 10, 30, LayerSampler::ring(n), 4).unwrap();
    let a = build_design(&design, &model, Execution::Sequential).unwrap();
    let b = build_design(&design, &model, Execution::Parallel).unwrap();
    assert_eq!(a.triplets(), b.triplets());
    let cfg = SimulatorConfig::new(Backend::Taylor { k: 2 }, Some(500), 9);
    let x = simulate_exact(&design, &model, &rates, &cfg, Execution::Sequential).unwrap();
    let y = simulate_exact(&design, &model, &rates, &cfg, Execution::Parallel).unwrap();
    assert_eq!(x.flat_values(), y.flat_values());
}
