use std::ops::ControlFlow;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use spinbus::hamiltonian::{build_hamiltonian, ChainSpec};
use spinbus::lindblad::{evolve, evolve_with, liouvillian_apply, NoiseKind, NoiseModel};
use spinbus::observables::{
    concurrence, entanglement_of_formation_from_concurrence, fidelity_sq, TwoQubitState,
};
use spinbus::qstate::{DensityMatrix, OperatorSum, QubitSet, SiteLabel};

fn random_density(qubits: QubitSet, entries: &[(f64, f64)]) -> DensityMatrix {
    let d = qubits.dim();
    let a = DMatrix::from_fn(d, d, |r, c| {
        let (re, im) = entries[(r * d + c) % entries.len()];
        Complex64::new(re + 0.01 * (r as f64), im - 0.01 * (c as f64))
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix(qubits, &(m / tr)).unwrap()
}

fn entries(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
}

fn kind() -> impl Strategy<Value = NoiseKind> {
    prop_oneof![Just(NoiseKind::PhysicalT1), Just(NoiseKind::PhysicalT2)]
}

fn pair() -> QubitSet {
    QubitSet::new(vec![SiteLabel::Ancilla, SiteLabel::RegisterFar]).unwrap()
}

/// `exp(-i theta n.sigma)` on one qubit, embedded on the first or second slot.
fn local_unitary(theta: f64, n: (f64, f64, f64), first: bool) -> DMatrix<Complex64> {
    let norm = (n.0 * n.0 + n.1 * n.1 + n.2 * n.2).sqrt().max(1e-9);
    let (x, y, z) = (n.0 / norm, n.1 / norm, n.2 / norm);
    let (c, s) = (theta.cos(), theta.sin());
    let i = Complex64::new(0.0, 1.0);
    let u = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0) - i * s * z,
            -i * s * Complex64::new(x, -y),
            -i * s * Complex64::new(x, y),
            Complex64::new(c, 0.0) + i * s * z,
        ],
    );
    let id = DMatrix::<Complex64>::identity(2, 2);
    if first {
        u.kronecker(&id)
    } else {
        id.kronecker(&u)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_output_is_traceless_and_hermitian(e in entries(64), g in 0.05f64..1.5, rate in 0.0f64..2.0, k in kind()) {
        let spec = ChainSpec::uniform(2, g);
        let h = build_hamiltonian(&spec).unwrap();
        let rho = random_density(QubitSet::bus(2, true), &e);
        let out = liouvillian_apply(&h, &NoiseModel::chain(k, rate, 2), &rho).unwrap();
        prop_assert!(out.trace().norm() < 1e-12);
        prop_assert!(out.hermiticity_error() < 1e-12);
    }

    #[test]
    fn evolution_keeps_a_valid_state(e in entries(64), g in 0.05f64..1.5, rate in 0.0f64..0.5, k in kind()) {
        let spec = ChainSpec::uniform(1, g);
        let h = build_hamiltonian(&spec).unwrap();
        let rho = random_density(QubitSet::bus(1, true), &e);
        let grid = [0.5, 1.0, 2.0];
        let mut last = rho.clone();
        let stats = evolve_with(&rho, &h, &NoiseModel::chain(k, rate, 1), &grid, &Default::default(), |_, r| {
            last = r.clone();
            ControlFlow::Continue(())
        })
        .unwrap();
        prop_assert!(stats.max_trace_drift < 1e-9);
        prop_assert!(last.hermiticity_error() < 1e-9);
        prop_assert!(last.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn concurrence_is_bounded(e in entries(16)) {
        let rho = random_density(pair(), &e);
        let c = concurrence(TwoQubitState::new(&rho).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        let ef = entanglement_of_formation_from_concurrence(c);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ef));
    }

    #[test]
    fn concurrence_ignores_local_unitaries(
        e in entries(16),
        t1 in 0.0f64..3.2,
        t2 in 0.0f64..3.2,
        n1 in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        n2 in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
    ) {
        let rho = random_density(pair(), &e);
        let u = local_unitary(t1, n1, true) * local_unitary(t2, n2, false);
        let m = &u * rho.to_matrix() * u.adjoint();
        let moved = DensityMatrix::from_matrix(pair(), &m).unwrap();
        let a = concurrence(TwoQubitState::new(&rho).unwrap());
        let b = concurrence(TwoQubitState::new(&moved).unwrap());
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in entries(16), b in entries(16)) {
        let r = random_density(pair(), &a);
        let s = random_density(pair(), &b);
        let f = fidelity_sq(&r, &s).unwrap();
        let g = fidelity_sq(&s, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - g).abs() < 1e-8);
        prop_assert!((fidelity_sq(&r, &r).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rates_and_time_rescale_together(c in 0.5f64..3.0, rate in 0.0f64..0.3, k in kind()) {
        let spec = ChainSpec::uniform(1, 0.8);
        let h = build_hamiltonian(&spec).unwrap();
        let mut hc = OperatorSum::new(h.qubits().clone());
        for t in h.terms() {
            let mut t = t.clone();
            t.coefficient *= c;
            hc.push(t).unwrap();
        }
        let rho = random_density(QubitSet::bus(1, true), &[(0.3, -0.2), (0.7, 0.1), (-0.4, 0.5)]);
        let grid = [0.5, 1.5, 3.0];
        let scaled: Vec<f64> = grid.iter().map(|t| t / c).collect();
        let probe = |r: &DensityMatrix| r.get(3, 12).re + r.get(1, 1).re;
        let opts = spinbus::ode::IntegratorOptions { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
        let a = evolve(&rho, &h, &NoiseModel::chain(k, rate, 1), &grid, &opts, &[&probe]).unwrap();
        let b = evolve(&rho, &hc, &NoiseModel::chain(k, c * rate, 1), &scaled, &opts, &[&probe]).unwrap();
        for (x, y) in a.values[0].iter().zip(&b.values[0]) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}
