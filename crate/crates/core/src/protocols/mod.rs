//! Experiment procedures built on the simulation core.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ChainSpec;
use crate::lindblad::NoiseModel;
use crate::ode::IntegratorOptions;
use crate::qstate::{basis_state, singlet, DensityMatrix, PureState, QubitSet, SiteLabel};
use crate::spectral::zero_mode_transfer_time;

mod disorder;
mod rwa;
mod threshold;
mod transfer;

pub use disorder::{
    disorder_monte_carlo, disordered_chain, long_chain_scan, mean_ci95, DisorderPoint,
    DisorderSpec, LongChainPoint, RegisterRegime,
};
pub use rwa::{rwa_validation, RwaOptions, RwaReport};
pub use threshold::{
    classical_threshold, coupling_scan, ft_threshold, threshold_surface, CouplingScan, FtOutcome,
    SearchOptions, Surface, ThresholdOutcome,
};
pub use transfer::{
    corrected_fidelity, entanglement_series, fidelity_series, run_entanglement_transfer, run_qst,
    Engine, EntanglementSetup, QstSetup, Series,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Modes,
    Transfer,
    Entangle,
    Threshold,
    FtThreshold,
    Surface,
    Disorder,
    LongChain,
    RwaCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Modes,
        ExperimentKind::Transfer,
        ExperimentKind::Entangle,
        ExperimentKind::Threshold,
        ExperimentKind::FtThreshold,
        ExperimentKind::Surface,
        ExperimentKind::Disorder,
        ExperimentKind::LongChain,
        ExperimentKind::RwaCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Modes => "modes",
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Entangle => "entangle",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::FtThreshold => "ft-threshold",
            ExperimentKind::Surface => "surface",
            ExperimentKind::Disorder => "disorder",
            ExperimentKind::LongChain => "long-chain",
            ExperimentKind::RwaCheck => "rwa-check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A table cell: a number or a marker such as `never`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(k) => Some(*k as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Everything needed to re-run an experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub chain: Option<ChainSpec>,
    pub noise: Option<NoiseModel>,
    pub integrator: Option<IntegratorOptions>,
    pub seed: Option<u64>,
    pub unit_convention: String,
    pub version: String,
    /// Protocol parameters not captured above (search window, targets, ...).
    pub parameters: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(
        chain: Option<&ChainSpec>,
        noise: Option<&NoiseModel>,
        integrator: Option<&IntegratorOptions>,
    ) -> Self {
        Provenance {
            chain: chain.cloned(),
            noise: noise.cloned(),
            integrator: integrator.copied(),
            seed: None,
            unit_convention: chain
                .map(|c| c.units.name().to_string())
                .unwrap_or_else(|| "none".into()),
            version: VERSION.to_string(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.chain {
            c.validate()?;
            if c.units.name() != self.unit_convention {
                return Err(Error::config("unit convention disagrees with the chain"));
            }
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        if let Some(o) = &self.integrator {
            o.validate()?;
        }
        if self.version.is_empty() {
            return Err(Error::config("provenance lacks a version"));
        }
        Ok(())
    }
}

/// Tabular experiment output with scalar summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, Cell>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentResult {
    pub fn new(kind: ExperimentKind, columns: &[&str], provenance: Provenance) -> Self {
        ExperimentResult {
            kind,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
            provenance,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Cell::as_f64)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }

    pub fn cell(&self, row: usize, name: &str) -> Option<&Cell> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.get(row).map(|r| &r[k])
    }
}

/// Largest local maximum of a sampled curve, refined by a parabola through
/// the neighboring samples. Among maxima within `1e-3` of the largest the
/// earliest wins, so revivals of equal height do not displace the first peak.
pub fn first_maximum(times: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len().min(times.len());
    if n == 0 {
        return None;
    }
    let mut peaks: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| values[i] >= values[i - 1] && values[i] > values[i + 1])
        .collect();
    if peaks.is_empty() {
        // monotone curve: the larger endpoint
        let i = if values[n - 1] > values[0] { n - 1 } else { 0 };
        return Some((times[i], values[i]));
    }
    let best = peaks
        .iter()
        .map(|&i| values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    peaks.retain(|&i| values[i] >= best - 1e-3);
    let i = peaks[0];
    let (t0, t1, t2) = (times[i - 1], times[i], times[i + 1]);
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    let denom = (t0 - t1) * (t0 - t2) * (t1 - t2);
    let a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom;
    let b = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / denom;
    if a < 0.0 && denom != 0.0 {
        let tv = -b / (2.0 * a);
        if tv >= t0 && tv <= t2 {
            let c = y1 - a * t1 * t1 - b * t1;
            return Some((tv, a * tv * tv + b * tv + c));
        }
    }
    Some((t1, y1))
}

/// `[0, factor * t_zero_mode]` sampled at `points` equally spaced times, in
/// core units.
pub fn transfer_window(spec: &ChainSpec, factor: f64, points: usize) -> Vec<f64> {
    let t_end = factor * nominal_transfer_time(spec);
    linspace(t_end, points)
}

/// Zero-mode transfer time at the register coupling of `spec`. For the full
/// dipolar model the register coupling is read from the first bond.
pub fn nominal_transfer_time(spec: &ChainSpec) -> f64 {
    let g = match spec.model {
        crate::hamiltonian::CouplingModel::NearestNeighbor => spec.g_core(),
        crate::hamiltonian::CouplingModel::FullDipolar => spec
            .bonds()
            .iter()
            .find(|(i, j, _)| *i == 0 && *j == 1)
            .map(|b| b.2)
            .unwrap_or(1.0),
    };
    if g > 0.0 {
        zero_mode_transfer_time(spec.n, g)
    } else {
        PI * ((spec.n + 1) as f64).sqrt()
    }
}

/// `points` equally spaced times on `[0, t_end]`.
pub fn linspace(t_end: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|k| t_end * k as f64 / (points - 1) as f64)
        .collect()
}

/// Chain basis state from bits `[c1, ..., cN]`.
pub fn chain_basis(n: usize, bits: &[u8]) -> Result<PureState> {
    let q = QubitSet::new((1..=n).map(SiteLabel::Chain).collect())?;
    basis_state(&q, bits)
}

/// `|Psi->_{a,0} |chain> |0>_{N+1}` on the bus with ancilla.
pub fn entangled_initial_state(n: usize, chain_bits: &[u8]) -> Result<DensityMatrix> {
    let s = singlet(SiteLabel::Ancilla, SiteLabel::RegisterNear)?;
    let chain = chain_basis(n, chain_bits)?;
    let far = basis_state(&QubitSet::new(vec![SiteLabel::RegisterFar])?, &[0])?;
    Ok(s.tensor(&chain)?.tensor(&far)?.to_density())
}

/// All `2^n` chain basis states in counting order, chain spin 1 as the
/// leading bit.
pub fn all_chain_states(n: usize) -> Vec<Vec<u8>> {
    (0..1usize << n)
        .map(|k| (0..n).map(|j| ((k >> (n - 1 - j)) & 1) as u8).collect())
        .collect()
}

pub fn bits_label(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_maximum_refines_a_parabola() {
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| 1.0 - (t - 2.33f64).powi(2)).collect();
        let (t, v) = first_maximum(&times, &values).unwrap();
        assert!((t - 2.33).abs() < 1e-9);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn first_maximum_prefers_earliest_of_equal_peaks() {
        let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| (t.sin()).powi(2)).collect();
        let (t, _) = first_maximum(&times, &values).unwrap();
        assert!((t - PI / 2.0).abs() < 1e-3);
        let mono = [0.0, 0.1, 0.2];
        assert_eq!(first_maximum(&[0.0, 1.0, 2.0], &mono), Some((2.0, 0.2)));
        assert_eq!(first_maximum(&[], &[]), None);
    }

    #[test]
    fn chain_state_enumeration() {
        let all = all_chain_states(3);
        assert_eq!(all.len(), 8);
        assert_eq!(all[1], vec![0, 0, 1]);
        assert_eq!(all[4], vec![1, 0, 0]);
        assert_eq!(bits_label(&all[2]), "010");
    }

    #[test]
    fn initial_state_is_the_singlet_on_ancilla_and_near_register() {
        let rho = entangled_initial_state(3, &[0, 1, 0]).unwrap();
        assert_eq!(rho.qubits(), &QubitSet::bus(3, true));
        let red = rho
            .partial_trace(&[SiteLabel::Ancilla, SiteLabel::RegisterNear])
            .unwrap();
        let s = singlet(SiteLabel::Ancilla, SiteLabel::RegisterNear).unwrap();
        assert!((red.expectation_pure(&s).unwrap() - 1.0).abs() < 1e-12);
        let c2 = rho.partial_trace(&[SiteLabel::Chain(2)]).unwrap();
        assert!((c2.get(1, 1).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_spans_three_transfer_times() {
        let spec = ChainSpec::weak(3);
        let w = transfer_window(&spec, 3.0, 301);
        let tn = zero_mode_transfer_time(3, spec.g_core());
        assert!((w[300] - 3.0 * tn).abs() < 1e-9);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn result_accessors() {
        let mut r = ExperimentResult::new(
            ExperimentKind::Modes,
            &["n", "label"],
            Provenance::default(),
        );
        r.push_row(vec![1.0.into(), "never".into()]);
        r.set("x", 2.0);
        assert_eq!(r.scalar("x"), Some(2.0));
        assert_eq!(r.column("label"), None);
        assert_eq!(r.column("n"), Some(vec![1.0]));
        assert_eq!(
            ExperimentKind::parse("ft-threshold"),
            Some(ExperimentKind::FtThreshold)
        );
        let json = serde_json::to_string(&r).unwrap();
        let back: ExperimentResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn cells_and_unbounded_steps_survive_json() {
        let opts = IntegratorOptions::default();
        let mut r = ExperimentResult::new(
            ExperimentKind::Threshold,
            &["n", "x", "s"],
            Provenance::new(Some(&ChainSpec::weak(3)), None, Some(&opts)),
        );
        r.push_row(vec![3usize.into(), 2.0.into(), "never".into()]);
        let back: ExperimentResult =
            serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.rows[0][0], Cell::Int(3));
        assert_eq!(back.rows[0][1], Cell::Num(2.0));
        assert!(back.provenance.integrator.unwrap().max_step.is_infinite());
    }
}
