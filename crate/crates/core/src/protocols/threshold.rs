//! Noise thresholds by bisection on the decoherence rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::transfer::{entanglement_series, fidelity_series, EntanglementSetup, QstSetup};
use super::{linspace, nominal_transfer_time};
use crate::error::{Error, Result};
use crate::hamiltonian::{ChainSpec, RegisterCoupling};
use crate::lindblad::{NoiseKind, NoiseModel};
use crate::ode::IntegratorOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Concurrence floor below which a channel counts as classical.
    pub eps_q: f64,
    /// Stop once `hi / lo - 1` drops below this.
    pub rel_tol: f64,
    /// Window `[0, window_factor * t_zero_mode]`.
    pub window_factor: f64,
    pub points: usize,
    pub max_expansions: usize,
    pub integrator: IntegratorOptions,
    /// Starting rate in core units; a heuristic is used when absent.
    pub initial_rate: Option<f64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            eps_q: 1e-4,
            rel_tol: 0.01,
            window_factor: 3.0,
            points: 600,
            max_expansions: 40,
            integrator: IntegratorOptions::default(),
            initial_rate: None,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if !(self.eps_q > 0.0) || !(self.rel_tol > 0.0) || !(self.window_factor > 0.0) {
            return Err(Error::config(
                "eps_q, rel_tol and window_factor must be positive",
            ));
        }
        if self.points < 3 {
            return Err(Error::config("search window needs at least 3 samples"));
        }
        Ok(())
    }

    pub fn window(&self, spec: &ChainSpec) -> Vec<f64> {
        linspace(
            self.window_factor * nominal_transfer_time(spec),
            self.points,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    /// Geometric midpoint of the final bracket, core units.
    pub rate_core: f64,
    /// `1 / rate` in seconds.
    pub coherence_s: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub window_core: f64,
    pub warnings: Vec<String>,
}

/// Bisects on `rate` for the boundary where `pred` turns false. `pred` must
/// be true at small rates.
fn bisect<P>(
    spec: &ChainSpec,
    opts: &SearchOptions,
    guess: f64,
    pred: P,
) -> Result<ThresholdOutcome>
where
    P: Fn(f64) -> Result<bool>,
{
    opts.validate()?;
    let mut evals = 0usize;
    let mut eval = |g: f64| -> Result<bool> {
        evals += 1;
        pred(g)
    };
    let (mut lo, mut hi);
    let start = opts.initial_rate.unwrap_or(guess);
    if !(start > 0.0) {
        return Err(Error::Search("initial rate must be positive".into()));
    }
    if eval(start)? {
        lo = start;
        hi = start * 2.0;
        let mut k = 0;
        while eval(hi)? {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > opts.max_expansions {
                return Err(Error::Search(
                    "predicate stays true at every sampled rate".into(),
                ));
            }
        }
    } else {
        hi = start;
        lo = start / 2.0;
        let mut k = 0;
        while !eval(lo)? {
            hi = lo;
            lo /= 2.0;
            k += 1;
            if k > opts.max_expansions {
                return Err(Error::Search(
                    "predicate stays false at every sampled rate".into(),
                ));
            }
        }
    }
    while hi / lo - 1.0 > opts.rel_tol {
        let mid = (lo * hi).sqrt();
        if eval(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut warnings = Vec::new();
    // spot-check the monotonicity assumption below the bracket
    if !eval(lo / 4.0)? {
        warnings.push(format!(
            "predicate false at rate {:.4e}, below the threshold",
            lo / 4.0
        ));
    }
    let rate = (lo * hi).sqrt();
    Ok(ThresholdOutcome {
        rate_core: rate,
        coherence_s: spec.rate_to_coherence(rate),
        bracket: (lo, hi),
        evaluations: evals,
        window_core: *opts.window(spec).last().unwrap(),
        warnings,
    })
}

fn default_guess(spec: &ChainSpec, opts: &SearchOptions) -> f64 {
    1.5 / (spec.n as f64 * nominal_transfer_time(spec) * opts.window_factor / 3.0)
}

/// Rate at which the far register stops receiving any entanglement.
pub fn classical_threshold(
    spec: &ChainSpec,
    kind: NoiseKind,
    setup: &EntanglementSetup,
    opts: &SearchOptions,
) -> Result<ThresholdOutcome> {
    spec.validate()?;
    let grid = opts.window(spec);
    let quantum = |rate: f64| -> Result<bool> {
        let noise = NoiseModel::chain(kind, rate, spec.n);
        let s = entanglement_series(
            spec,
            &noise,
            setup,
            &grid,
            &opts.integrator,
            Some(opts.eps_q),
        )?;
        Ok(s.secondary.iter().any(|&c| c > opts.eps_q))
    };
    if !quantum(0.0)? {
        return Err(Error::Search(
            "no entanglement reaches the far register even without noise".into(),
        ));
    }
    bisect(spec, opts, default_guess(spec, opts), quantum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FtOutcome {
    /// Even the noiseless transfer misses the target.
    Never {
        noiseless_max: f64,
    },
    Reached(ThresholdOutcome),
}

impl FtOutcome {
    pub fn coherence_s(&self) -> Option<f64> {
        match self {
            FtOutcome::Never { .. } => None,
            FtOutcome::Reached(t) => Some(t.coherence_s),
        }
    }
}

/// Longest tolerable coherence time for `max F^2 >= target`.
pub fn ft_threshold(
    spec: &ChainSpec,
    kind: NoiseKind,
    setup: &QstSetup,
    target: f64,
    opts: &SearchOptions,
) -> Result<FtOutcome> {
    spec.validate()?;
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::config("target fidelity must lie in (0, 1]"));
    }
    let grid = opts.window(spec);
    let run = |rate: f64| {
        let noise = NoiseModel::chain(kind, rate, spec.n);
        fidelity_series(spec, &noise, setup, &grid, &opts.integrator, Some(target))
    };
    let clean = run(0.0)?;
    if clean.max() < target {
        return Ok(FtOutcome::Never {
            noiseless_max: clean.max(),
        });
    }
    let pred = |rate: f64| -> Result<bool> { Ok(run(rate)?.max() >= target) };
    // the fidelity target is far stricter than the classical boundary
    let guess = default_guess(spec, opts) * (1.0 - target).max(1e-6) * 10.0;
    bisect(spec, opts, guess, pred).map(FtOutcome::Reached)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub g_over_kappa: Vec<f64>,
    pub rates_core: Vec<f64>,
    /// `max_ef[i][j]` at `g_over_kappa[i]`, `rates_core[j]`.
    pub max_ef: Vec<Vec<f64>>,
    /// Largest sampled rate with entanglement above the floor, per coupling.
    pub tolerable_rate: Vec<Option<f64>>,
    pub best_g_over_kappa: Option<f64>,
}

fn with_g(spec: &ChainSpec, g: f64) -> ChainSpec {
    let mut s = spec.clone();
    s.register = RegisterCoupling::OverKappa(g);
    s
}

/// `max_tau E_F` over a grid of register couplings and rates.
pub fn threshold_surface(
    spec: &ChainSpec,
    kind: NoiseKind,
    g_grid: &[f64],
    rate_grid: &[f64],
    setup: &EntanglementSetup,
    opts: &SearchOptions,
) -> Result<Surface> {
    opts.validate()?;
    if g_grid.is_empty() || rate_grid.is_empty() {
        return Err(Error::config("surface grids must be non-empty"));
    }
    let cells: Vec<(usize, usize)> = (0..g_grid.len())
        .flat_map(|i| (0..rate_grid.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let s = with_g(spec, g_grid[i]);
            s.validate()?;
            let noise = NoiseModel::chain(kind, rate_grid[j], s.n);
            let grid = opts.window(&s);
            Ok(entanglement_series(&s, &noise, setup, &grid, &opts.integrator, None)?.max())
        })
        .collect();
    let mut max_ef = vec![vec![0.0; rate_grid.len()]; g_grid.len()];
    for (&(i, j), v) in cells.iter().zip(values) {
        max_ef[i][j] = v?;
    }
    let floor = crate::observables::entanglement_of_formation_from_concurrence(opts.eps_q);
    let tolerable_rate: Vec<Option<f64>> = max_ef
        .iter()
        .map(|row| {
            row.iter()
                .zip(rate_grid)
                .filter(|(v, _)| **v > floor)
                .map(|(_, r)| *r)
                .fold(None, |acc: Option<f64>, r| {
                    Some(acc.map_or(r, |a| a.max(r)))
                })
        })
        .collect();
    let best_g_over_kappa = tolerable_rate
        .iter()
        .zip(g_grid)
        .filter_map(|(r, g)| r.map(|r| (r, *g)))
        .fold(None, |acc: Option<(f64, f64)>, (r, g)| match acc {
            Some((br, _)) if br >= r => acc,
            _ => Some((r, g)),
        })
        .map(|(_, g)| g);
    Ok(Surface {
        g_over_kappa: g_grid.to_vec(),
        rates_core: rate_grid.to_vec(),
        max_ef,
        tolerable_rate,
        best_g_over_kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingScan {
    pub g_over_kappa: Vec<f64>,
    pub thresholds: Vec<ThresholdOutcome>,
    /// Index of the coupling with the highest tolerable rate.
    pub best: usize,
}

impl CouplingScan {
    pub fn best_g(&self) -> f64 {
        self.g_over_kappa[self.best]
    }

    pub fn best_threshold(&self) -> &ThresholdOutcome {
        &self.thresholds[self.best]
    }
}

/// Classical threshold at each register coupling, in parallel.
pub fn coupling_scan(
    spec: &ChainSpec,
    kind: NoiseKind,
    g_grid: &[f64],
    setup: &EntanglementSetup,
    opts: &SearchOptions,
) -> Result<CouplingScan> {
    if g_grid.is_empty() {
        return Err(Error::config("coupling grid must be non-empty"));
    }
    let thresholds: Vec<ThresholdOutcome> = g_grid
        .par_iter()
        .map(|&g| classical_threshold(&with_g(spec, g), kind, setup, opts))
        .collect::<Result<_>>()?;
    let best = thresholds
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.rate_core.total_cmp(&b.1.rate_core))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(CouplingScan {
        g_over_kappa: g_grid.to_vec(),
        thresholds,
        best,
    })
}
