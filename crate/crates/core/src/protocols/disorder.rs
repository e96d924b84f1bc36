//! Spacing-disorder Monte Carlo and the long-chain scan.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::threshold::SearchOptions;
use super::transfer::{entanglement_series, Engine, EntanglementSetup};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    dipolar_coupling, weak_g_over_kappa, ChainSpec, CouplingModel, Geometry, RegisterCoupling,
};
use crate::lindblad::{NoiseKind, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub mean_spacing_nm: f64,
    /// Standard deviation relative to the mean spacing.
    pub rel_std: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec {
            mean_spacing_nm: 10.0,
            rel_std: 0.05,
            runs: 100,
            seed: 0x5eed,
        }
    }
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_spacing_nm > 0.0) {
            return Err(Error::config("mean spacing must be positive"));
        }
        if !(self.rel_std >= 0.0) || !self.rel_std.is_finite() {
            return Err(Error::config("rel_std must be finite and non-negative"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        Ok(())
    }

    /// Independent stream per run index.
    pub fn rng(&self, run: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run as u64);
        rng
    }

    /// `count` spacings from a Gaussian truncated at 3 sigma, non-positive
    /// draws resampled.
    pub fn draw_spacings(&self, run: usize, count: usize) -> Vec<f64> {
        let mean = self.mean_spacing_nm;
        let sigma = self.rel_std * mean;
        if sigma == 0.0 {
            return vec![mean; count];
        }
        let mut rng = self.rng(run);
        let normal = Normal::new(mean, sigma).expect("finite positive sigma");
        (0..count)
            .map(|_| loop {
                let x: f64 = normal.sample(&mut rng);
                if x > 0.0 && (x - mean).abs() <= 3.0 * sigma {
                    break x;
                }
            })
            .collect()
    }
}

/// `(mean, 1.96 s / sqrt(n))`; the half-width is 0 for a single value.
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderPoint {
    pub n: usize,
    pub model: CouplingModel,
    pub mean: f64,
    pub ci95_half_width: f64,
    /// Sample standard deviation of intra-chain couplings relative to their mean,
    /// pooled over runs.
    pub kappa_rel_spread: f64,
    pub per_run: Vec<f64>,
}

/// Chain realization of one Monte Carlo run.
pub fn disordered_chain(
    template: &ChainSpec,
    dis: &DisorderSpec,
    model: CouplingModel,
    run: usize,
) -> Result<ChainSpec> {
    let n = template.n;
    let spacings = dis.draw_spacings(run, n + 1);
    let mut spec = template.clone();
    spec.model = model;
    spec.geometry = Geometry::Explicit(spacings.clone());
    if model == CouplingModel::NearestNeighbor {
        // register coupling pinned to the mean intra-chain coupling
        let inner = if n >= 2 {
            &spacings[1..n]
        } else {
            &spacings[..]
        };
        let ks: Vec<f64> = inner
            .iter()
            .map(|&r| dipolar_coupling(r, template))
            .collect::<Result<_>>()?;
        spec.register = RegisterCoupling::Hz(ks.iter().sum::<f64>() / ks.len() as f64);
    }
    spec.validate()?;
    Ok(spec)
}

fn intra_chain_couplings(spec: &ChainSpec) -> Vec<f64> {
    let s = spec.spacings();
    let n = spec.n;
    s[1..n]
        .iter()
        .map(|&r| dipolar_coupling(r, spec).unwrap_or(f64::NAN))
        .collect()
}

/// Mean and 95% CI of `max_tau E_F` per chain length under spacing disorder.
/// `t1_s` adds physical-T1 noise on the chain; pass `None` for a noiseless run.
pub fn disorder_monte_carlo(
    template: &ChainSpec,
    dis: &DisorderSpec,
    n_list: &[usize],
    model: CouplingModel,
    t1_s: Option<f64>,
    opts: &SearchOptions,
) -> Result<Vec<DisorderPoint>> {
    dis.validate()?;
    opts.validate()?;
    if n_list.is_empty() {
        return Err(Error::config("chain length list is empty"));
    }
    let jobs: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| (0..dis.runs).map(move |r| (n, r)))
        .collect();
    let results: Vec<Result<(f64, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(n, run)| {
            let mut t = template.clone();
            t.n = n;
            t.geometry = Geometry::Uniform {
                chain_nm: dis.mean_spacing_nm,
                register_nm: dis.mean_spacing_nm,
            };
            let spec = disordered_chain(&t, dis, model, run)?;
            let rate = t1_s.map(|s| spec.coherence_to_rate(s)).unwrap_or(0.0);
            let noise = NoiseModel::chain(NoiseKind::PhysicalT1, rate, n);
            let mut setup = EntanglementSetup::vacuum(n);
            setup.engine = Engine::Subspace;
            let s = entanglement_series(
                &spec,
                &noise,
                &setup,
                &opts.window(&spec),
                &opts.integrator,
                None,
            )?;
            Ok((s.max(), intra_chain_couplings(&spec)))
        })
        .collect();
    let mut out = Vec::new();
    let mut it = results.into_iter();
    for &n in n_list {
        let mut per_run = Vec::with_capacity(dis.runs);
        let mut rel = Vec::new();
        for _ in 0..dis.runs {
            let (v, ks) = it.next().expect("one result per job")?;
            per_run.push(v);
            rel.extend(ks);
        }
        let (kmean, _) = mean_ci95(&rel);
        let kstd = if rel.len() > 1 {
            (rel.iter().map(|k| (k - kmean).powi(2)).sum::<f64>() / (rel.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        let (mean, hw) = mean_ci95(&per_run);
        out.push(DisorderPoint {
            n,
            model,
            mean,
            ci95_half_width: hw,
            kappa_rel_spread: if kmean > 0.0 { kstd / kmean } else { 0.0 },
            per_run,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegisterRegime {
    /// `g = kappa`.
    Strong,
    /// `g = kappa / (10 sqrt N)`.
    Weak,
}

impl RegisterRegime {
    pub fn g_over_kappa(self, n: usize) -> f64 {
        match self {
            RegisterRegime::Strong => 1.0,
            RegisterRegime::Weak => weak_g_over_kappa(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongChainPoint {
    pub n: usize,
    pub tau_core: f64,
    pub tau_s: f64,
    pub eof: f64,
}

/// First-maximum time and entanglement per chain length under physical T1
/// noise, in the single-excitation block.
pub fn long_chain_scan(
    template: &ChainSpec,
    n_list: &[usize],
    regime: RegisterRegime,
    t1_s: Option<f64>,
    opts: &SearchOptions,
) -> Result<(Vec<LongChainPoint>, Vec<String>)> {
    opts.validate()?;
    if n_list.is_empty() {
        return Err(Error::config("chain length list is empty"));
    }
    let points: Vec<LongChainPoint> = n_list
        .par_iter()
        .map(|&n| {
            let mut spec = template.clone();
            spec.n = n;
            spec.model = CouplingModel::NearestNeighbor;
            spec.register = RegisterCoupling::OverKappa(regime.g_over_kappa(n));
            spec.validate()?;
            let rate = t1_s.map(|s| spec.coherence_to_rate(s)).unwrap_or(0.0);
            let noise = NoiseModel::chain(NoiseKind::PhysicalT1, rate, n);
            let mut setup = EntanglementSetup::vacuum(n);
            setup.engine = Engine::Subspace;
            let s = entanglement_series(
                &spec,
                &noise,
                &setup,
                &opts.window(&spec),
                &opts.integrator,
                None,
            )?;
            let (t, v) = s.first_maximum().unwrap_or((0.0, 0.0));
            Ok(LongChainPoint {
                n,
                tau_core: t,
                tau_s: spec.time_to_seconds(t),
                eof: v,
            })
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let violations = points
        .windows(2)
        .filter(|w| w[1].eof > w[0].eof + 1e-9)
        .count();
    if violations > 1 {
        warnings.push(format!(
            "E_F* increases with N at {violations} places in the scan"
        ));
    }
    Ok((points, warnings))
}
