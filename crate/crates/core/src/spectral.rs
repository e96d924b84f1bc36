//! Free-fermion mode analysis of the chain.
//!
//! The XY chain maps onto hopping fermions, so everything here is phrased
//! through the one-body hopping matrix over bus sites `0..=N+1`. Closed forms:
//!
//! * `E_n = 2 kappa cos(n pi / (N+1))`
//! * `Gamma_n = g sin(n pi / (N+1)) / sqrt((N+1)/2)`
//! * `t_n = pi / (sqrt 2 Gamma_n)`

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ChainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub n: usize,
    pub energy: f64,
    pub gamma: f64,
    pub transfer_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub chain_length: usize,
    pub kappa: f64,
    pub g: f64,
    pub modes: Vec<Mode>,
    /// `(N+1)/2` for odd `N`.
    pub zero_mode_index: Option<usize>,
}

impl ModeTable {
    pub fn mode(&self, n: usize) -> Option<&Mode> {
        self.modes.get(n.checked_sub(1)?)
    }

    pub fn zero_mode(&self) -> Option<&Mode> {
        self.zero_mode_index.and_then(|n| self.mode(n))
    }
}

/// Closed-form mode energies, tunnelling rates and transfer times.
pub fn mode_table(n: usize, kappa: f64, g: f64) -> Result<ModeTable> {
    if n == 0 {
        return Err(Error::config("N must be at least 1"));
    }
    if !(kappa > 0.0) || !(g > 0.0) {
        return Err(Error::config("kappa and g must be positive"));
    }
    let np1 = (n + 1) as f64;
    let norm = (np1 / 2.0).sqrt();
    let modes = (1..=n)
        .map(|k| {
            let phi = k as f64 * PI / np1;
            // exact zero for the central mode
            let energy = if 2 * k == n + 1 {
                0.0
            } else {
                2.0 * kappa * phi.cos()
            };
            let gamma = g * phi.sin() / norm;
            Mode {
                n: k,
                energy,
                gamma,
                transfer_time: PI / (2f64.sqrt() * gamma),
            }
        })
        .collect();
    Ok(ModeTable {
        chain_length: n,
        kappa,
        g,
        modes,
        zero_mode_index: (n % 2 == 1).then_some(n.div_ceil(2)),
    })
}

/// Transfer time through the zero mode (odd `N`) or the mode closest to zero
/// energy (even `N`), `pi sqrt(N+1) / (2 g sin(n pi/(N+1)))`.
pub fn zero_mode_transfer_time(n: usize, g: f64) -> f64 {
    let k = n.div_ceil(2);
    let np1 = (n + 1) as f64;
    PI * np1.sqrt() / (2.0 * g * (k as f64 * PI / np1).sin())
}

/// `g sqrt(N) / kappa`; the weak-coupling regime used throughout is 0.1.
pub fn weak_coupling_margin(n: usize, kappa: f64, g: f64) -> f64 {
    g * (n as f64).sqrt() / kappa
}

/// One-body hopping matrix over bus sites `0..=N+1` in core units, with the
/// register detuning on the two end diagonals.
pub fn single_particle_matrix(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let d = spec.n + 2;
    let mut h = DMatrix::zeros(d, d);
    for (i, j, c) in spec.bonds() {
        h[(i, j)] = c;
        h[(j, i)] = c;
    }
    let eps = spec.detuning_core();
    h[(0, 0)] += eps;
    h[(d - 1, d - 1)] += eps;
    Ok(h)
}

/// Uniform `n x n` tridiagonal hopping block with off-diagonal `kappa`.
pub fn chain_block(n: usize, kappa: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { kappa } else { 0.0 })
}

/// Eigenpairs sorted by eigenvalue descending. Each vector's first component
/// above `1e-9` in magnitude is made positive.
pub fn sorted_eigen(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-9) {
                if first < 0.0 {
                    v = -v;
                }
            }
            (e, v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::Geometry;

    #[test]
    fn n3_energies_and_zero_mode_time() {
        let t = mode_table(3, 1.0, 0.2).unwrap();
        let e: Vec<f64> = t.modes.iter().map(|m| m.energy).collect();
        let s2 = 2f64.sqrt();
        for (a, b) in e.iter().zip([s2, 0.0, -s2]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(t.zero_mode_index, Some(2));
        let t2 = t.zero_mode().unwrap().transfer_time;
        assert!((t2 - PI / 0.2).abs() < 1e-12);
    }

    #[test]
    fn n5_energies_and_zero_mode_time() {
        let g = 0.05;
        let t = mode_table(5, 1.0, g).unwrap();
        let s3 = 3f64.sqrt();
        for (m, b) in t.modes.iter().zip([s3, 1.0, 0.0, -1.0, -s3]) {
            assert!((m.energy - b).abs() < 1e-12);
        }
        let expected = PI * 6f64.sqrt() / (2.0 * g);
        assert!((t.zero_mode().unwrap().transfer_time - expected).abs() < 1e-10);
        assert!((zero_mode_transfer_time(5, g) - expected).abs() < 1e-10);
    }

    #[test]
    fn even_chain_has_no_zero_mode() {
        let t = mode_table(4, 1.0, 0.1).unwrap();
        assert!(t.zero_mode_index.is_none());
        assert!(t.modes.windows(2).all(|w| w[0].energy > w[1].energy));
    }

    #[test]
    fn invalid_inputs() {
        assert!(mode_table(0, 1.0, 0.1).is_err());
        assert!(mode_table(3, 0.0, 0.1).is_err());
        assert!(mode_table(3, 1.0, -0.1).is_err());
    }

    #[test]
    fn margin_values() {
        let n = 3;
        let g = 1.0 / (10.0 * 3f64.sqrt());
        assert!((weak_coupling_margin(n, 1.0, g) - 0.1).abs() < 1e-14);
        assert!((weak_coupling_margin(5, 1.0, 1.0) - 5f64.sqrt()).abs() < 1e-14);
        let a = weak_coupling_margin(7, 2.0, 0.3);
        let b = weak_coupling_margin(7, 2.0 * 13.0, 0.3 * 13.0);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn hopping_matrix_layout() {
        let spec = ChainSpec::uniform(3, 1.0);
        let h = single_particle_matrix(&spec).unwrap();
        for i in 0..5 {
            assert_eq!(h[(i, i)], 0.0);
            for j in 0..5 {
                let expect = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert!((h[(i, j)] - expect).abs() < 1e-15);
            }
        }
        let mut detuned = spec.clone();
        detuned.detuning_hz = 0.25 * spec.kappa_hz();
        let h = single_particle_matrix(&detuned).unwrap();
        assert!((h[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((h[(4, 4)] - 0.25).abs() < 1e-15);
        assert_eq!(h[(2, 2)], 0.0);
    }

    #[test]
    fn decoupled_interior_block_matches_closed_form() {
        let spec = ChainSpec::uniform(3, 1e-300);
        let h = single_particle_matrix(&spec).unwrap();
        let inner = h.view((1, 1), (3, 3)).into_owned();
        let eig = sorted_eigen(&inner);
        let s2 = 2f64.sqrt();
        for ((e, _), b) in eig.iter().zip([s2, 0.0, -s2]) {
            assert!((e - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_against_diagonalisation_odd_n() {
        for n in (1..=21).step_by(2) {
            let table = mode_table(n, 1.0, 0.05).unwrap();
            let eig = sorted_eigen(&chain_block(n, 1.0));
            for (m, (e, v)) in table.modes.iter().zip(&eig) {
                assert!((m.energy - e).abs() <= 1e-10 * 2.0, "N={n}");
                // Gamma_n = g |<site 1 | mode n>|
                assert!((m.gamma - 0.05 * v[0].abs()).abs() < 1e-10, "N={n}");
            }
        }
    }

    #[test]
    fn full_dipolar_matrix_is_dense() {
        let spec = ChainSpec {
            geometry: Geometry::Uniform {
                chain_nm: 10.0,
                register_nm: 10.0,
            },
            ..ChainSpec::uniform(3, 1.0)
        }
        .with_model(crate::hamiltonian::CouplingModel::FullDipolar);
        let h = single_particle_matrix(&spec).unwrap();
        assert!((h[(0, 2)] - 0.125).abs() < 1e-14);
        assert!((h[(0, 4)] - 1.0 / 64.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvector_sign_convention() {
        let eig = sorted_eigen(&chain_block(5, 1.0));
        for (_, v) in eig {
            let first = v.iter().copied().find(|x| x.abs() > 1e-9).unwrap();
            assert!(first > 0.0);
        }
    }
}
