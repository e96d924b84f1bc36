//! Explicit Runge-Kutta integration of complex-valued linear-algebra ODEs.
//!
//! Two methods: the Dormand-Prince 5(4) embedded pair with PI step-size
//! control, and classical fixed-step RK4. Adaptive solutions are sampled on
//! the requested grid with cubic Hermite interpolation between accepted
//! steps, so the step sequence never depends on the grid.

use std::ops::ControlFlow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Dormand-Prince 5(4).
    AdaptiveRk45,
    /// Classical RK4 with steps no longer than `max_step`.
    FixedRk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step. Required (finite) for `FixedRk4`. Serialized
    /// as `null` when unbounded.
    #[serde(with = "unbounded")]
    pub max_step: f64,
    /// Only every `observable_stride`-th grid time is reported.
    pub observable_stride: usize,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        x.is_finite().then_some(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            method: Method::AdaptiveRk45,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            observable_stride: 1,
        }
    }
}

impl IntegratorOptions {
    pub fn fixed(step: f64) -> Self {
        IntegratorOptions {
            method: Method::FixedRk4,
            max_step: step,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::config("integrator tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::config("max_step must be positive"));
        }
        if self.method == Method::FixedRk4 && !self.max_step.is_finite() {
            return Err(Error::config("fixed-step RK4 needs a finite max_step"));
        }
        if self.observable_stride == 0 {
            return Err(Error::config("observable_stride must be at least 1"));
        }
        Ok(())
    }
}

/// `dy/dt = f(t, y)` over a flat complex state.
pub trait OdeSystem: Sync {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// True when the observer stopped the run early.
    pub stopped_early: bool,
}

/// Checks that `grid` is non-empty, non-negative and strictly increasing.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("time grid is empty"));
    }
    if !(grid[0] >= 0.0) {
        return Err(Error::config("time grid must start at or after 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Integrates from `t = 0` through every grid time, calling
/// `observer(index, t, y)` at each reported grid point.
pub fn integrate<S, F>(
    sys: &S,
    y0: &[Complex64],
    grid: &[f64],
    opts: &IntegratorOptions,
    mut observer: F,
) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[Complex64]) -> ControlFlow<()>,
{
    opts.validate()?;
    check_grid(grid)?;
    if y0.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: y0.len(),
        });
    }
    let stride = opts.observable_stride;
    let mut report = |k: usize, t: f64, y: &[Complex64]| {
        if k % stride == 0 {
            observer(k, t, y)
        } else {
            ControlFlow::Continue(())
        }
    };
    match opts.method {
        Method::AdaptiveRk45 => dopri5(sys, y0, grid, opts, &mut report),
        Method::FixedRk4 => rk4(sys, y0, grid, opts.max_step, &mut report),
    }
}

fn axpy(out: &mut [Complex64], y: &[Complex64], terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = y[i];
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = acc;
    }
}

fn rk4<S, F>(sys: &S, y0: &[Complex64], grid: &[f64], step: f64, report: &mut F) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[Complex64]) -> ControlFlow<()>,
{
    let d = y0.len();
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
    );
    let mut stats = OdeStats::default();
    let mut t = 0.0;
    for (k, &target) in grid.iter().enumerate() {
        let span = target - t;
        if span > 0.0 {
            let n = (span / step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for s in 0..n {
                let ts = t + s as f64 * h;
                sys.rhs(ts, &y, &mut k1);
                axpy(&mut tmp, &y, &[(0.5 * h, &k1)]);
                sys.rhs(ts + 0.5 * h, &tmp, &mut k2);
                axpy(&mut tmp, &y, &[(0.5 * h, &k2)]);
                sys.rhs(ts + 0.5 * h, &tmp, &mut k3);
                axpy(&mut tmp, &y, &[(h, &k3)]);
                sys.rhs(ts + h, &tmp, &mut k4);
                for i in 0..d {
                    y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
                stats.accepted += 1;
                stats.rhs_evals += 4;
            }
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Integration {
                    time: t,
                    reason: "state became non-finite".into(),
                });
            }
            t = target;
        }
        if report(k, target, &y).is_break() {
            stats.stopped_early = true;
            break;
        }
    }
    Ok(stats)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn scaled_norm(v: &[Complex64], y: &[Complex64], z: &[Complex64], rtol: f64, atol: f64) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y.iter().zip(z))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / v.len().max(1) as f64).sqrt()
}

/// `0.01 |y0| / |f0|` in the scaled norm. Unlike the usual two-probe
/// heuristic this is covariant under `f -> c f`, `t -> t / c`, so a rescaled
/// problem takes exactly the rescaled step sequence.
fn initial_step(y0: &[Complex64], f0: &[Complex64], span: f64, opts: &IntegratorOptions) -> f64 {
    let d0 = scaled_norm(y0, y0, y0, opts.rel_tol, opts.abs_tol);
    let d1 = scaled_norm(f0, y0, y0, opts.rel_tol, opts.abs_tol);
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    h.min(span).min(opts.max_step)
}

fn dopri5<S, F>(
    sys: &S,
    y0: &[Complex64],
    grid: &[f64],
    opts: &IntegratorOptions,
    report: &mut F,
) -> Result<OdeStats>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, f64, &[Complex64]) -> ControlFlow<()>,
{
    let d = y0.len();
    let zero = Complex64::default();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut k1 = vec![zero; d];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![zero; d],
        vec![zero; d],
        vec![zero; d],
        vec![zero; d],
        vec![zero; d],
        vec![zero; d],
    );
    let mut ynew = vec![zero; d];
    let mut tmp = vec![zero; d];
    let mut err = vec![zero; d];
    let mut sample = vec![zero; d];

    let t_end = *grid.last().unwrap();
    let mut t = 0.0;
    let mut next = 0usize;
    // grid points at t = 0
    while next < grid.len() && grid[next] <= 0.0 {
        if report(next, grid[next], &y).is_break() {
            stats.stopped_early = true;
            return Ok(stats);
        }
        next += 1;
    }
    if next == grid.len() {
        return Ok(stats);
    }

    sys.rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;
    let mut h = initial_step(&y, &k1, t_end, opts);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    const MAX_STEPS: usize = 1_000_000_000;

    while next < grid.len() {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::Integration {
                time: t,
                reason: "step budget exhausted".into(),
            });
        }
        h = h.min(opts.max_step).min(t_end - t);
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                time: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        axpy(&mut tmp, &y, &[(h * A21, &k1)]);
        sys.rhs(t + C2 * h, &tmp, &mut k2);
        axpy(&mut tmp, &y, &[(h * A31, &k1), (h * A32, &k2)]);
        sys.rhs(t + C3 * h, &tmp, &mut k3);
        axpy(
            &mut tmp,
            &y,
            &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)],
        );
        sys.rhs(t + C4 * h, &tmp, &mut k4);
        axpy(
            &mut tmp,
            &y,
            &[
                (h * A51, &k1),
                (h * A52, &k2),
                (h * A53, &k3),
                (h * A54, &k4),
            ],
        );
        sys.rhs(t + C5 * h, &tmp, &mut k5);
        axpy(
            &mut tmp,
            &y,
            &[
                (h * A61, &k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ],
        );
        sys.rhs(t + h, &tmp, &mut k6);
        axpy(
            &mut ynew,
            &y,
            &[
                (h * A71, &k1),
                (h * A73, &k3),
                (h * A74, &k4),
                (h * A75, &k5),
                (h * A76, &k6),
            ],
        );
        sys.rhs(t + h, &ynew, &mut k7);
        stats.rhs_evals += 6;

        for i in 0..d {
            err[i] =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let en = scaled_norm(&err, &y, &ynew, opts.rel_tol, opts.abs_tol);

        if !en.is_finite() {
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        if en <= 1.0 {
            let t_new = t + h;
            // sample every grid point in (t, t_new]
            while next < grid.len() && grid[next] <= t_new * (1.0 + 1e-15) {
                let tg = grid[next];
                let theta = ((tg - t) / h).clamp(0.0, 1.0);
                if theta >= 1.0 {
                    sample.copy_from_slice(&ynew);
                } else {
                    let t2 = theta * theta;
                    let t3 = t2 * theta;
                    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                    let h10 = (t3 - 2.0 * t2 + theta) * h;
                    let h01 = -2.0 * t3 + 3.0 * t2;
                    let h11 = (t3 - t2) * h;
                    for i in 0..d {
                        sample[i] = y[i] * h00 + k1[i] * h10 + ynew[i] * h01 + k7[i] * h11;
                    }
                }
                if report(next, tg, &sample).is_break() {
                    stats.accepted += 1;
                    stats.stopped_early = true;
                    return Ok(stats);
                }
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;

            let en = en.max(1e-10);
            let mut fac = 0.9 * en.powf(-0.17) * err_old.powf(0.04);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            err_old = en;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `y' = i w y`, solution `e^{i w t}`.
    struct Rotor(f64);

    impl OdeSystem for Rotor {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = Complex64::new(0.0, self.0) * y[0];
        }
    }

    /// `y' = -t y`, solution `e^{-t^2/2}`.
    struct Gauss;

    impl OdeSystem for Gauss {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = -y[0] * t;
        }
    }

    fn run(sys: &dyn OdeSystem, grid: &[f64], opts: &IntegratorOptions) -> Vec<Complex64> {
        let mut out = Vec::new();
        integrate(sys, &[Complex64::new(1.0, 0.0)], grid, opts, |_, _, y| {
            out.push(y[0]);
            ControlFlow::Continue(())
        })
        .unwrap();
        out
    }

    #[test]
    fn adaptive_rotor_accuracy() {
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let out = run(&Rotor(2.0), &grid, &IntegratorOptions::default());
        for (t, y) in grid.iter().zip(&out) {
            let exact = Complex64::from_polar(1.0, 2.0 * t);
            assert!((y - exact).norm() < 1e-6, "t={t}");
        }
        // grid endpoints are hit exactly by a step
        assert!((out.last().unwrap() - Complex64::from_polar(1.0, 20.0)).norm() < 1e-7);
    }

    #[test]
    fn fixed_rk4_accuracy_and_time_dependence() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let out = run(&Gauss, &grid, &IntegratorOptions::fixed(0.01));
        for (t, y) in grid.iter().zip(&out) {
            assert!((y.re - (-t * t / 2.0).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn stride_and_early_stop() {
        let grid: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let opts = IntegratorOptions {
            observable_stride: 3,
            ..Default::default()
        };
        let mut seen = Vec::new();
        integrate(
            &Rotor(1.0),
            &[Complex64::new(1.0, 0.0)],
            &grid,
            &opts,
            |k, _, _| {
                seen.push(k);
                ControlFlow::Continue(())
            },
        )
        .unwrap();
        assert_eq!(seen, vec![0, 3, 6, 9]);
        let stats = integrate(
            &Rotor(1.0),
            &[Complex64::new(1.0, 0.0)],
            &grid,
            &IntegratorOptions::default(),
            |k, _, _| {
                if k == 4 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
        .unwrap();
        assert!(stats.stopped_early);
    }

    #[test]
    fn bad_inputs() {
        let opts = IntegratorOptions::default();
        let y0 = [Complex64::new(1.0, 0.0)];
        let noop = |_: usize, _: f64, _: &[Complex64]| ControlFlow::Continue(());
        assert!(integrate(&Rotor(1.0), &y0, &[0.0, 1.0, 1.0], &opts, noop).is_err());
        assert!(integrate(&Rotor(1.0), &y0, &[-1.0, 1.0], &opts, noop).is_err());
        assert!(integrate(&Rotor(1.0), &y0, &[], &opts, noop).is_err());
        let bad = IntegratorOptions {
            rel_tol: 0.0,
            ..opts
        };
        assert!(integrate(&Rotor(1.0), &y0, &[1.0], &bad, noop).is_err());
        let fixed = IntegratorOptions {
            method: Method::FixedRk4,
            ..opts
        };
        assert!(integrate(&Rotor(1.0), &y0, &[1.0], &fixed, noop).is_err());
    }

    /// Blows up in finite time: `y' = y^2`, `y(0) = 1`, pole at `t = 1`.
    struct Blowup;

    impl OdeSystem for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
            dy[0] = y[0] * y[0];
        }
    }

    #[test]
    fn underflow_reports_last_good_time() {
        let res = integrate(
            &Blowup,
            &[Complex64::new(1.0, 0.0)],
            &[2.0],
            &IntegratorOptions::default(),
            |_, _, _| ControlFlow::Continue(()),
        );
        match res {
            Err(Error::Integration { time, .. }) => assert!(time > 0.9 && time < 1.01, "{time}"),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
