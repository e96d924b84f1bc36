//! Fidelity, concurrence and entanglement of formation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, PureState};

/// `V diag(sqrt(max(l, 0))) V^dagger` of a Hermitian matrix.
pub fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let v = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    v * s * v.adjoint()
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

/// Squared Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, clamped to `[0, 1]`.
pub fn fidelity_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.qubits() != sigma.qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let sr = hermitian_sqrt(&rho.to_matrix());
    let m = &sr * sigma.to_matrix() * &sr;
    let f: f64 = hermitian_eigenvalues(&m)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    Ok((f * f).clamp(0.0, 1.0))
}

/// `<psi|rho|psi>`, the squared fidelity against a pure target.
pub fn fidelity_sq_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    Ok(rho.expectation_pure(psi)?.clamp(0.0, 1.0))
}

/// A density matrix known to live on exactly two qubits.
#[derive(Debug, Clone, Copy)]
pub struct TwoQubitState<'a>(&'a DensityMatrix);

impl<'a> TwoQubitState<'a> {
    pub fn new(rho: &'a DensityMatrix) -> Result<Self> {
        if rho.qubits().len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: rho.dim(),
            });
        }
        Ok(TwoQubitState(rho))
    }

    pub fn density(&self) -> &DensityMatrix {
        self.0
    }
}

/// Wootters concurrence.
pub fn concurrence(state: TwoQubitState<'_>) -> f64 {
    let rho = state.0.to_matrix();
    // Y (x) Y is the anti-diagonal (-1, 1, 1, -1) in either bit order
    let yy = DMatrix::from_fn(4, 4, |r, c| {
        if r + c == 3 {
            Complex64::new(if r == 0 || r == 3 { -1.0 } else { 1.0 }, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let tilde = &yy * rho.map(|z| z.conj()) * &yy;
    let sr = hermitian_sqrt(&rho);
    let m = &sr * tilde * &sr;
    let mut lam: Vec<f64> = hermitian_eigenvalues(&m)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).clamp(0.0, 1.0)
}

/// Binary entropy in bits with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Entanglement of formation from a concurrence value.
pub fn entanglement_of_formation_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0)
}

pub fn entanglement_of_formation(state: TwoQubitState<'_>) -> f64 {
    entanglement_of_formation_from_concurrence(concurrence(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{
        basis_state, plus_state, singlet, Pauli, PauliString, QubitSet, SiteLabel,
    };

    fn pair() -> (SiteLabel, SiteLabel) {
        (SiteLabel::Ancilla, SiteLabel::RegisterFar)
    }

    fn werner(p: f64) -> DensityMatrix {
        let (a, b) = pair();
        let s = singlet(a, b).unwrap().to_density();
        let q = s.qubits().clone();
        let mix = DensityMatrix::maximally_mixed(q.clone());
        let data: Vec<Complex64> = s
            .data()
            .iter()
            .zip(mix.data())
            .map(|(x, y)| x * p + y * (1.0 - p))
            .collect();
        DensityMatrix::from_data(q, data).unwrap()
    }

    #[test]
    fn werner_concurrence() {
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            let c = concurrence(TwoQubitState::new(&werner(p)).unwrap());
            let expect = ((3.0 * p - 1.0) / 2.0).max(0.0);
            assert!((c - expect).abs() < 1e-8, "p={p}: {c} vs {expect}");
        }
    }

    #[test]
    fn product_and_bell_states() {
        let (a, b) = pair();
        let q = QubitSet::new(vec![a, b]).unwrap();
        let prod = basis_state(&q, &[0, 1]).unwrap().to_density();
        assert!(concurrence(TwoQubitState::new(&prod).unwrap()) < 1e-8);
        let s = singlet(a, b).unwrap().to_density();
        let c = concurrence(TwoQubitState::new(&s).unwrap());
        assert!((c - 1.0).abs() < 1e-8);
        assert!((entanglement_of_formation(TwoQubitState::new(&s).unwrap()) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn local_unitary_invariance() {
        let w = werner(0.8);
        let c0 = concurrence(TwoQubitState::new(&w).unwrap());
        let mut s = PauliString::single(SiteLabel::Ancilla, Pauli::X, Complex64::new(1.0, 0.0));
        s.factors.insert(SiteLabel::RegisterFar, Pauli::Y);
        let rotated = w.conjugate_by(&s).unwrap();
        let c1 = concurrence(TwoQubitState::new(&rotated).unwrap());
        assert!((c0 - c1).abs() < 1e-10);
    }

    #[test]
    fn eof_reference_value() {
        // independent evaluation: x = (1 + sqrt(0.84))/2,
        // h(x) = -x log2 x - (1-x) log2 (1-x)
        let x: f64 = (1.0 + 0.84f64.sqrt()) / 2.0;
        let h = -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
        let e = entanglement_of_formation_from_concurrence(0.4);
        assert!((e - h).abs() < 1e-12);
        assert!((e - 0.250_224_911_611_070_85).abs() < 1e-12, "{e:.16}");
        assert_eq!(entanglement_of_formation_from_concurrence(0.0), 0.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
    }

    #[test]
    fn fidelity_general_and_pure_agree() {
        let (a, b) = pair();
        let s = singlet(a, b).unwrap();
        let w = werner(0.6);
        let f1 = fidelity_sq(&w, &s.to_density()).unwrap();
        let f2 = fidelity_sq_pure(&w, &s).unwrap();
        assert!((f1 - f2).abs() < 1e-8);
        assert!((f2 - (0.6 + 0.4 / 4.0)).abs() < 1e-12);
        let p = plus_state(a).to_density();
        assert!((fidelity_sq(&p, &p).unwrap() - 1.0).abs() < 1e-8);
        assert!(fidelity_sq(&p, &w).is_err());
        assert!(TwoQubitState::new(&p).is_err());
    }

    #[test]
    fn mixed_fidelity_against_mixed() {
        let q = QubitSet::new(vec![SiteLabel::Ancilla]).unwrap();
        let mk = |p: f64| {
            DensityMatrix::from_data(
                q.clone(),
                vec![
                    Complex64::new(p, 0.0),
                    Complex64::default(),
                    Complex64::default(),
                    Complex64::new(1.0 - p, 0.0),
                ],
            )
            .unwrap()
        };
        // commuting states: (sum sqrt(p_i q_i))^2
        let f = fidelity_sq(&mk(0.3), &mk(0.8)).unwrap();
        let expect = ((0.3f64 * 0.8).sqrt() + (0.7f64 * 0.2).sqrt()).powi(2);
        assert!((f - expect).abs() < 1e-10);
    }
}
