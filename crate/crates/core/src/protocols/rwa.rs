//! Numerical check of the two rotating-wave approximations behind the
//! effective exchange Hamiltonian.

use std::ops::ControlFlow;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hamiltonian::{
    build_lab_frame_two_spin, frame_unitary, rotated_basis, rotating_frame_reference, DriveParams,
};
use crate::ode::{integrate, IntegratorOptions, OdeSystem};

type M4 = Matrix4<Complex64>;
type V4 = Vector4<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaOptions {
    /// Hierarchy factor the parameters are meant to satisfy.
    pub factor: f64,
    /// Comparison horizon; one swap period `pi / kappa` when absent.
    pub t_final: Option<f64>,
    pub samples: usize,
    pub integrator: IntegratorOptions,
}

impl Default for RwaOptions {
    fn default() -> Self {
        RwaOptions {
            factor: 100.0,
            t_final: None,
            samples: 400,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaReport {
    pub params: DriveParams,
    pub t_final: f64,
    /// Max trace distance between the exact rotating-frame state and evolution
    /// under the first-RWA Hamiltonian.
    pub first_rwa_deviation: f64,
    /// Max trace distance between the exact rotating-frame state and the
    /// effective exchange Hamiltonian (both approximations, rotated basis).
    pub full_deviation: f64,
    pub hierarchy_ok: bool,
    pub warnings: Vec<String>,
}

/// Lab-frame Schrodinger equation written for `phi = U(t) psi`, so the
/// integrated variable is the rotating-frame state itself:
/// `d phi/dt = -i U (H_lab - H_0) U^dag phi` with `H_0 = sum (w_i / 2) Z_i`.
/// Evaluated on the full propagator, column-major.
struct LabFrame {
    p: DriveParams,
    zeeman: M4,
}

impl LabFrame {
    fn new(p: DriveParams) -> Self {
        let zeeman = M4::from_diagonal(&V4::from_fn(|k, _| {
            let s1 = if k & 2 == 0 { 1.0 } else { -1.0 };
            let s2 = if k & 1 == 0 { 1.0 } else { -1.0 };
            Complex64::new((s1 * p.omega[0] + s2 * p.omega[1]) / 2.0, 0.0)
        }));
        LabFrame { p, zeeman }
    }
}

impl OdeSystem for LabFrame {
    fn dim(&self) -> usize {
        16
    }

    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let u = frame_unitary(&self.p, t);
        let h = u * (build_lab_frame_two_spin(&self.p, t) - self.zeeman) * u.adjoint();
        let mi = Complex64::new(0.0, -1.0);
        for c in 0..4 {
            let col = &y[4 * c..4 * c + 4];
            for r in 0..4 {
                dy[4 * c + r] = (0..4).map(|k| h[(r, k)] * col[k]).sum::<Complex64>() * mi;
            }
        }
    }
}

/// `exp(-i H t)` of a Hermitian 4x4.
fn propagator(h: &M4, t: f64) -> M4 {
    let eig = h.symmetric_eigen();
    let phases = eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * t));
    &eig.eigenvectors * M4::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// `sqrt(1 - |<a|b>|^2)` for normalized vectors.
fn pure_trace_distance(a: &V4, b: &V4) -> f64 {
    let o = a.dotc(b).norm_sqr() / (a.norm_squared() * b.norm_squared());
    (1.0 - o).max(0.0).sqrt()
}

/// Integrates the lab-frame dynamics from each computational basis state in
/// the rotating frame and compares against the approximate
/// Hamiltonians. Returns the worst deviation over states and sample times.
pub fn rwa_validation(p: &DriveParams, opts: &RwaOptions) -> Result<RwaReport> {
    let frames = rotating_frame_reference(p);
    let w = rotated_basis();
    let t_final = opts
        .t_final
        .unwrap_or(std::f64::consts::PI / p.kappa.abs().max(1e-300));
    let grid: Vec<f64> = (0..=opts.samples)
        .map(|k| t_final * k as f64 / opts.samples as f64)
        .collect();
    let sys = LabFrame::new(*p);
    let mut first = 0.0f64;
    let mut full = 0.0f64;
    let id = M4::identity();
    integrate(&sys, id.as_slice(), &grid, &opts.integrator, |_, t, y| {
        let rot = M4::from_column_slice(y);
        let a = propagator(&frames.h_rwa, t);
        let b = w * propagator(&frames.h_rf, t) * w;
        for k in 0..4 {
            let exact: V4 = rot.column(k).into();
            first = first.max(pure_trace_distance(&exact, &a.column(k).into()));
            full = full.max(pure_trace_distance(&exact, &b.column(k).into()));
        }
        ControlFlow::Continue(())
    })?;
    let ok = p.hierarchy_ok(opts.factor);
    let mut warnings = Vec::new();
    if !ok {
        warnings.push(format!(
            "drive parameters violate the {}x frequency hierarchy",
            opts.factor
        ));
    }
    Ok(RwaReport {
        params: *p,
        t_final,
        first_rwa_deviation: first,
        full_deviation: full,
        hierarchy_ok: ok,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn without_coupling_the_two_effective_forms_coincide() {
        let mut p = DriveParams::with_hierarchy(10.0);
        p.kappa = 0.0;
        let f = rotating_frame_reference(&p);
        let w = rotated_basis();
        for t in [0.3, 1.7, 4.0] {
            let a = propagator(&f.h_rwa, t);
            let b = w * propagator(&f.h_rf, t) * w;
            assert!((a - b).norm() < 1e-12);
        }
    }

    struct Direct(DriveParams);

    impl OdeSystem for Direct {
        fn dim(&self) -> usize {
            4
        }

        fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
            let h = build_lab_frame_two_spin(&self.0, t);
            for r in 0..4 {
                dy[r] =
                    (0..4).map(|c| h[(r, c)] * y[c]).sum::<Complex64>() * Complex64::new(0.0, -1.0);
            }
        }
    }

    #[test]
    fn rotating_variable_matches_direct_lab_integration() {
        let p = DriveParams::with_hierarchy(5.0);
        let grid = [0.4, 1.1, 2.5];
        let tight = IntegratorOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..Default::default()
        };
        let mut direct = Vec::new();
        let mut psi0 = [Complex64::new(0.0, 0.0); 4];
        psi0[2] = Complex64::new(1.0, 0.0);
        integrate(&Direct(p), &psi0, &grid, &tight, |_, t, y| {
            direct.push(frame_unitary(&p, t) * V4::from_column_slice(y));
            ControlFlow::Continue(())
        })
        .unwrap();
        let mut k = 0;
        integrate(
            &LabFrame::new(p),
            M4::identity().as_slice(),
            &grid,
            &tight,
            |_, _, y| {
                let col: V4 = M4::from_column_slice(y).column(2).into();
                assert!(
                    (col - direct[k]).norm() < 1e-8,
                    "{}",
                    (col - direct[k]).norm()
                );
                k += 1;
                ControlFlow::Continue(())
            },
        )
        .unwrap();
        assert_eq!(k, 3);
    }

    #[test]
    fn propagator_is_unitary() {
        let p = DriveParams::with_hierarchy(10.0);
        let u = propagator(&rotating_frame_reference(&p).h_rf, 0.77);
        assert!((u * u.adjoint() - M4::identity()).norm() < 1e-12);
    }

    #[test]
    fn weak_hierarchy_is_flagged() {
        let p = DriveParams::with_hierarchy(3.0);
        let opts = RwaOptions {
            factor: 10.0,
            samples: 20,
            ..Default::default()
        };
        let r = rwa_validation(&p, &opts).unwrap();
        assert!(!r.hierarchy_ok);
        assert_eq!(r.warnings.len(), 1);
    }
}
