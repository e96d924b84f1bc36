//! State transfer and entanglement distribution runs.

use std::ops::ControlFlow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    chain_basis, entangled_initial_state, first_maximum, ExperimentKind, ExperimentResult,
    Provenance,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, ChainSpec};
use crate::lindblad::{
    evolve_single_excitation_with, evolve_with, EvolveStats, NoiseKind, NoiseModel, SubspaceState,
    TRACE_DRIFT_WARN,
};
use crate::observables::{concurrence, entanglement_of_formation_from_concurrence, TwoQubitState};
use crate::ode::IntegratorOptions;
use crate::qstate::{
    basis_state, plus_state, singlet, DensityMatrix, PureState, QubitSet, SiteLabel,
};

/// Quantum state transfer from the near to the far register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QstSetup {
    /// Single-qubit input amplitudes `(alpha, beta)`.
    pub input: [Complex64; 2],
    pub chain_init: Vec<u8>,
}

impl QstSetup {
    /// `|+>` input, chain in `|0...0>`.
    pub fn plus(n: usize) -> Self {
        let p = plus_state(SiteLabel::RegisterNear);
        QstSetup {
            input: [p.amplitudes()[0], p.amplitudes()[1]],
            chain_init: vec![0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    /// The single-excitation block whenever the state and noise allow it.
    Auto,
    Full,
    Subspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSetup {
    pub chain_init: Vec<u8>,
    pub engine: Engine,
}

impl EntanglementSetup {
    pub fn vacuum(n: usize) -> Self {
        EntanglementSetup {
            chain_init: vec![0; n],
            engine: Engine::Auto,
        }
    }

    pub fn with_chain(bits: Vec<u8>) -> Self {
        EntanglementSetup {
            chain_init: bits,
            engine: Engine::Auto,
        }
    }
}

/// A sampled run: the primary observable plus a companion column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub primary: Vec<f64>,
    pub secondary: Vec<f64>,
    pub stats: EvolveStats,
    pub stopped_early: bool,
}

impl Series {
    pub fn max(&self) -> f64 {
        self.primary.iter().copied().fold(0.0, f64::max)
    }

    pub fn first_maximum(&self) -> Option<(f64, f64)> {
        first_maximum(&self.times, &self.primary)
    }
}

fn check_chain_bits(spec: &ChainSpec, bits: &[u8]) -> Result<()> {
    if bits.len() != spec.n {
        return Err(Error::config(format!(
            "chain_init has {} bits, N = {}",
            bits.len(),
            spec.n
        )));
    }
    Ok(())
}

/// Best of the identity and a `Z` correction on the received qubit.
/// Returns `(F^2, correction)` with correction `0` for identity, `1` for `Z`.
pub fn corrected_fidelity(received: &DensityMatrix, input: &[Complex64; 2]) -> (f64, u8) {
    let f = |b: Complex64| {
        let psi = [input[0], b];
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                acc += psi[r].conj() * received.get(r, c) * psi[c];
            }
        }
        acc.re.clamp(0.0, 1.0)
    };
    let plain = f(input[1]);
    let flipped = f(-input[1]);
    if flipped > plain {
        (flipped, 1)
    } else {
        (plain, 0)
    }
}

/// `F^2(tau)` of the far register against the input. With `stop_at`, the run
/// ends at the first sample whose fidelity reaches that value.
pub fn fidelity_series(
    spec: &ChainSpec,
    noise: &NoiseModel,
    setup: &QstSetup,
    t_grid: &[f64],
    opts: &IntegratorOptions,
    stop_at: Option<f64>,
) -> Result<Series> {
    check_chain_bits(spec, &setup.chain_init)?;
    let n = spec.n;
    let h = build_hamiltonian(spec)?;
    let input = PureState::new(
        QubitSet::new(vec![SiteLabel::RegisterNear])?,
        setup.input.to_vec(),
    )?;
    let amps = [input.amplitudes()[0], input.amplitudes()[1]];
    let far = basis_state(&QubitSet::new(vec![SiteLabel::RegisterFar])?, &[0])?;
    let psi0 = input
        .tensor(&chain_basis(n, &setup.chain_init)?)?
        .tensor(&far)?;
    let rho0 = psi0.to_density();
    let mut s = Series {
        times: Vec::new(),
        primary: Vec::new(),
        secondary: Vec::new(),
        stats: EvolveStats::default(),
        stopped_early: false,
    };
    let stats = evolve_with(&rho0, &h, noise, t_grid, opts, |t, rho| {
        let red = rho
            .partial_trace(&[SiteLabel::RegisterFar])
            .expect("far register present");
        let (f, corr) = corrected_fidelity(&red, &amps);
        s.times.push(t);
        s.primary.push(f);
        s.secondary.push(corr as f64);
        match stop_at {
            Some(target) if f >= target => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    })?;
    s.stopped_early = stats.ode.stopped_early;
    s.stats = stats;
    Ok(s)
}

fn subspace_ok(setup: &EntanglementSetup, noise: &NoiseModel) -> bool {
    let no_noise = noise.rate == 0.0 || noise.sites.is_empty();
    setup.chain_init.iter().all(|&b| b == 0) && (no_noise || noise.kind == NoiseKind::PhysicalT1)
}

/// `E_F(tau)` between the ancilla and the far register, with the concurrence
/// as the companion column. With `stop_above`, the run ends at the first
/// sample whose concurrence exceeds that value.
pub fn entanglement_series(
    spec: &ChainSpec,
    noise: &NoiseModel,
    setup: &EntanglementSetup,
    t_grid: &[f64],
    opts: &IntegratorOptions,
    stop_above: Option<f64>,
) -> Result<Series> {
    check_chain_bits(spec, &setup.chain_init)?;
    let mut s = Series {
        times: Vec::new(),
        primary: Vec::new(),
        secondary: Vec::new(),
        stats: EvolveStats::default(),
        stopped_early: false,
    };
    let mut record = |t: f64, red: &DensityMatrix| {
        let c = concurrence(TwoQubitState::new(red).expect("two qubits"));
        s.times.push(t);
        s.primary
            .push(entanglement_of_formation_from_concurrence(c));
        s.secondary.push(c);
        match stop_above {
            Some(eps) if c > eps => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    };
    let use_subspace = match setup.engine {
        Engine::Full => false,
        Engine::Subspace => true,
        Engine::Auto => subspace_ok(setup, noise),
    };
    let stats = if use_subspace {
        if setup.chain_init.iter().any(|&b| b != 0) {
            return Err(Error::config(
                "the single-excitation engine needs a vacuum chain",
            ));
        }
        let pair = singlet(SiteLabel::Ancilla, SiteLabel::RegisterNear)?;
        let sub0 = SubspaceState::from_ancilla_pair(spec.n, &pair)?;
        evolve_single_excitation_with(&sub0, spec, noise, t_grid, opts, |t, st| {
            record(t, &st.reduced_ancilla_far())
        })?
    } else {
        let rho0 = entangled_initial_state(spec.n, &setup.chain_init)?;
        let h = build_hamiltonian(spec)?;
        evolve_with(&rho0, &h, noise, t_grid, opts, |t, rho| {
            let red = rho
                .partial_trace(&[SiteLabel::Ancilla, SiteLabel::RegisterFar])
                .expect("ancilla and far register present");
            record(t, &red)
        })?
    };
    s.stopped_early = stats.ode.stopped_early;
    s.stats = stats;
    Ok(s)
}

fn series_result(
    kind: ExperimentKind,
    spec: &ChainSpec,
    s: &Series,
    names: [&str; 2],
    prov: Provenance,
) -> ExperimentResult {
    let mut r = ExperimentResult::new(kind, &["tau_core", "tau_s", names[0], names[1]], prov);
    for i in 0..s.times.len() {
        let t = s.times[i];
        r.push_row(vec![
            t.into(),
            spec.time_to_seconds(t).into(),
            s.primary[i].into(),
            s.secondary[i].into(),
        ]);
    }
    if let Some((t, v)) = s.first_maximum() {
        r.set("first_max_tau_core", t);
        r.set("first_max_tau_s", spec.time_to_seconds(t));
        r.set("first_max_value", v);
    }
    r.set("max_value", s.max());
    r.set("max_trace_drift", s.stats.max_trace_drift);
    if s.stats.max_trace_drift > TRACE_DRIFT_WARN {
        r.warnings.push(format!(
            "trace drift {:.3e} exceeds {TRACE_DRIFT_WARN:e}",
            s.stats.max_trace_drift
        ));
    }
    r
}

/// Fidelity series of a state transfer run.
pub fn run_qst(
    spec: &ChainSpec,
    noise: &NoiseModel,
    setup: &QstSetup,
    t_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<ExperimentResult> {
    let s = fidelity_series(spec, noise, setup, t_grid, opts, None)?;
    let prov = Provenance::new(Some(spec), Some(noise), Some(opts))
        .param("input", format!("{},{}", setup.input[0], setup.input[1]))
        .param("chain_init", super::bits_label(&setup.chain_init));
    Ok(series_result(
        ExperimentKind::Transfer,
        spec,
        &s,
        ["fidelity_sq", "correction"],
        prov,
    ))
}

/// Entanglement of formation series of an entanglement distribution run.
pub fn run_entanglement_transfer(
    spec: &ChainSpec,
    noise: &NoiseModel,
    setup: &EntanglementSetup,
    t_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<ExperimentResult> {
    let s = entanglement_series(spec, noise, setup, t_grid, opts, None)?;
    let prov = Provenance::new(Some(spec), Some(noise), Some(opts))
        .param("chain_init", super::bits_label(&setup.chain_init))
        .param("engine", format!("{:?}", setup.engine));
    Ok(series_result(
        ExperimentKind::Entangle,
        spec,
        &s,
        ["eof", "concurrence"],
        prov,
    ))
}
