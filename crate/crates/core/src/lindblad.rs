//! Lindblad evolution with Pauli jump operators.
//!
//! `d rho/dt = -i[H, rho] + sum_k gamma_k (L_k rho L_k - rho)` with each `L_k`
//! a single-site Pauli. Rates are in core units (inverse of the time unit
//! set by the nominal chain coupling).
//!
//! Two engines share the same equation: the full `2^n x 2^n` density matrix,
//! and a compact block for states with at most one excitation on the bus,
//! which is exact for Hamiltonians conserving excitation number and `Z`
//! dephasing.

use std::ops::ControlFlow;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ChainSpec;
use crate::ode::{integrate, IntegratorOptions, OdeStats, OdeSystem};
use crate::qstate::{
    DensityMatrix, OperatorSum, Pauli, PauliString, PureState, QubitSet, SiteLabel, SparseOperator,
};
use crate::spectral::single_particle_matrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which physical decoherence channel the chain suffers.
///
/// In the qubit encoding used here the physical relaxation channel shows up
/// as a `Z` jump and the physical dephasing channel as an `X` jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    PhysicalT1,
    PhysicalT2,
}

impl NoiseKind {
    pub fn operator(self) -> Pauli {
        match self {
            NoiseKind::PhysicalT1 => Pauli::Z,
            NoiseKind::PhysicalT2 => Pauli::X,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::PhysicalT1 => "T1",
            NoiseKind::PhysicalT2 => "T2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Per-site rate in core units.
    pub rate: f64,
    pub sites: Vec<SiteLabel>,
    /// Permit jumps on register or ancilla sites.
    pub allow_non_chain: bool,
}

impl NoiseModel {
    /// The same channel on every chain spin `1..=n`.
    pub fn chain(kind: NoiseKind, rate: f64, n: usize) -> Self {
        NoiseModel {
            kind,
            rate,
            sites: (1..=n).map(SiteLabel::Chain).collect(),
            allow_non_chain: false,
        }
    }

    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::PhysicalT1,
            rate: 0.0,
            sites: Vec::new(),
            allow_non_chain: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::config(
                "decoherence rate must be finite and non-negative",
            ));
        }
        if !self.allow_non_chain {
            if let Some(s) = self.sites.iter().find(|s| !s.is_chain()) {
                return Err(Error::config(format!(
                    "noise on non-chain site {s} needs allow_non_chain"
                )));
            }
        }
        Ok(())
    }

    pub fn jumps(&self) -> Vec<(f64, PauliString)> {
        if self.rate == 0.0 {
            return Vec::new();
        }
        self.sites
            .iter()
            .map(|&s| {
                (
                    self.rate,
                    PauliString::single(s, self.kind.operator(), Complex64::new(1.0, 0.0)),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Jump {
    rate: f64,
    flip: usize,
    /// `(-1)^{popcount(k & sign)}` per basis index.
    parity: Vec<f64>,
}

/// The Lindblad generator compiled against one qubit set.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    qubits: QubitSet,
    h: SparseOperator,
    jumps: Vec<Jump>,
    total_rate: f64,
}

const PAR_THRESHOLD: usize = 64;

impl Liouvillian {
    pub fn new(h: &OperatorSum, noise: &NoiseModel, qubits: &QubitSet) -> Result<Self> {
        noise.validate()?;
        if !h.qubits().is_subset_of(qubits) {
            return Err(Error::config("Hamiltonian acts on sites outside the state"));
        }
        let d = qubits.dim();
        let hs = h.compile(qubits)?;
        let mut jumps = Vec::new();
        for (rate, op) in noise.jumps() {
            let k = op.kernel(qubits)?;
            jumps.push(Jump {
                rate,
                flip: k.flip,
                parity: (0..d).map(|i| k.parity(i)).collect(),
            });
        }
        let total_rate = jumps.iter().map(|j| j.rate).sum();
        Ok(Liouvillian {
            qubits: qubits.clone(),
            h: hs,
            jumps,
            total_rate,
        })
    }

    pub fn qubits(&self) -> &QubitSet {
        &self.qubits
    }

    fn row(&self, r: usize, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.qubits.dim();
        out.fill(ZERO);
        for (k, h) in self.h.row(r) {
            let s = -I * h;
            for (o, &x) in out.iter_mut().zip(&rho[k * d..(k + 1) * d]) {
                *o += s * x;
            }
        }
        let rrow = &rho[r * d..(r + 1) * d];
        for (k, &x) in rrow.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            let s = I * x;
            for (c, h) in self.h.row(k) {
                out[c] += s * h;
            }
        }
        for j in &self.jumps {
            let src = r ^ j.flip;
            let w = j.rate * j.parity[src];
            let srow = &rho[src * d..(src + 1) * d];
            if j.flip == 0 {
                for ((o, &x), &p) in out.iter_mut().zip(srow).zip(&j.parity) {
                    *o += x * (w * p);
                }
            } else {
                for (c, o) in out.iter_mut().enumerate() {
                    let cs = c ^ j.flip;
                    *o += srow[cs] * (w * j.parity[cs]);
                }
            }
        }
        if self.total_rate != 0.0 {
            for (o, &x) in out.iter_mut().zip(rrow) {
                *o -= x * self.total_rate;
            }
        }
    }

    /// `out = L(rho)` on row-major data.
    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.qubits.dim();
        if d >= PAR_THRESHOLD {
            out.par_chunks_mut(d)
                .enumerate()
                .for_each(|(r, o)| self.row(r, rho, o));
        } else {
            for (r, o) in out.chunks_mut(d).enumerate() {
                self.row(r, rho, o);
            }
        }
    }
}

impl OdeSystem for Liouvillian {
    fn dim(&self) -> usize {
        self.qubits.dim().pow(2)
    }

    fn rhs(&self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self.apply(y, dy);
    }
}

/// One application of the generator to `rho`.
pub fn liouvillian_apply(
    h: &OperatorSum,
    noise: &NoiseModel,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    let l = Liouvillian::new(h, noise, rho.qubits())?;
    let mut out = vec![ZERO; rho.data().len()];
    l.apply(rho.data(), &mut out);
    DensityMatrix::from_data(rho.qubits().clone(), out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolveStats {
    pub ode: OdeStats,
    /// Largest `|Tr rho - 1|` seen at a reported time.
    pub max_trace_drift: f64,
}

/// Trace drift above which callers should warn.
pub const TRACE_DRIFT_WARN: f64 = 1e-6;

/// Full density-matrix evolution. `observer` sees every reported grid time
/// and may stop the run.
pub fn evolve_with<F>(
    rho0: &DensityMatrix,
    h: &OperatorSum,
    noise: &NoiseModel,
    t_grid: &[f64],
    opts: &IntegratorOptions,
    mut observer: F,
) -> Result<EvolveStats>
where
    F: FnMut(f64, &DensityMatrix) -> ControlFlow<()>,
{
    let l = Liouvillian::new(h, noise, rho0.qubits())?;
    let q = rho0.qubits().clone();
    let mut drift = 0.0f64;
    let ode = integrate(&l, rho0.data(), t_grid, opts, |_, t, y| {
        let rho = DensityMatrix::from_data(q.clone(), y.to_vec())
            .expect("dimension fixed by the generator");
        drift = drift.max((rho.trace() - 1.0).norm());
        observer(t, &rho)
    })?;
    Ok(EvolveStats {
        ode,
        max_trace_drift: drift,
    })
}

/// Series of scalar observables sampled on the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `values[k][i]` is observable `k` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    pub stats: EvolveStats,
}

pub type Observable<'a> = &'a dyn Fn(&DensityMatrix) -> f64;

pub fn evolve(
    rho0: &DensityMatrix,
    h: &OperatorSum,
    noise: &NoiseModel,
    t_grid: &[f64],
    opts: &IntegratorOptions,
    observables: &[Observable<'_>],
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); observables.len()];
    let stats = evolve_with(rho0, h, noise, t_grid, opts, |t, rho| {
        times.push(t);
        for (v, f) in values.iter_mut().zip(observables) {
            v.push(f(rho));
        }
        ControlFlow::Continue(())
    })?;
    Ok(Trajectory {
        times,
        values,
        stats,
    })
}

/// Density matrix restricted to `{ancilla} x {vacuum, one excitation on the bus}`.
///
/// Index `a * (N + 3) + s`: `a` is the ancilla bit, `s = 0` is the bus vacuum
/// and `s = j + 1` an excitation on bus site `j` (`0..=N+1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceState {
    n: usize,
    data: Vec<Complex64>,
}

impl SubspaceState {
    pub fn block(n: usize) -> usize {
        n + 3
    }

    pub fn dim_for(n: usize) -> usize {
        2 * (n + 3)
    }

    pub fn chain_length(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        Self::dim_for(self.n)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn from_data(n: usize, data: Vec<Complex64>) -> Result<Self> {
        let d = Self::dim_for(n);
        if data.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: data.len(),
            });
        }
        Ok(SubspaceState { n, data })
    }

    /// Full-space basis index of subspace index `p` on `QubitSet::bus(n, true)`.
    fn full_index(n: usize, p: usize) -> usize {
        let m = Self::block(n);
        let (a, s) = (p / m, p % m);
        a | if s == 0 { 0 } else { 1 << s }
    }

    /// Projects a full density matrix on `QubitSet::bus(n, true)`.
    /// Fails when more than `1e-9` of the weight lies outside the subspace.
    pub fn from_full(rho: &DensityMatrix) -> Result<Self> {
        let n = rho
            .qubits()
            .chain_length()
            .ok_or_else(|| Error::config("state is not on a full bus"))?;
        if *rho.qubits() != QubitSet::bus(n, true) {
            return Err(Error::config("subspace states need the bus plus ancilla"));
        }
        let d = Self::dim_for(n);
        let idx: Vec<usize> = (0..d).map(|p| Self::full_index(n, p)).collect();
        let mut data = vec![ZERO; d * d];
        let mut inside = 0.0;
        for (p, &fp) in idx.iter().enumerate() {
            inside += rho.get(fp, fp).re;
            for (q, &fq) in idx.iter().enumerate() {
                data[p * d + q] = rho.get(fp, fq);
            }
        }
        let total = rho.trace().re;
        if (total - inside).abs() > 1e-9 {
            return Err(Error::Unsupported(format!(
                "state has weight {:.3e} outside the single-excitation subspace",
                total - inside
            )));
        }
        Ok(SubspaceState { n, data })
    }

    /// `|pair>_{a,0} |0...0>` from a pure state on `{ancilla, near register}`,
    /// without building the full-space matrix.
    pub fn from_ancilla_pair(n: usize, pair: &PureState) -> Result<Self> {
        if *pair.qubits() != QubitSet::new(vec![SiteLabel::Ancilla, SiteLabel::RegisterNear])? {
            return Err(Error::config(
                "pair state must live on the ancilla and near register",
            ));
        }
        let m = Self::block(n);
        let d = Self::dim_for(n);
        let amp = pair.amplitudes();
        let mut psi = vec![ZERO; d];
        for (k, a) in amp.iter().enumerate() {
            psi[(k & 1) * m + ((k >> 1) & 1)] = *a;
        }
        let mut data = vec![ZERO; d * d];
        for p in 0..d {
            for q in 0..d {
                data[p * d + q] = psi[p] * psi[q].conj();
            }
        }
        Ok(SubspaceState { n, data })
    }

    pub fn to_full(&self) -> DensityMatrix {
        let n = self.n;
        let q = QubitSet::bus(n, true);
        let fd = q.dim();
        let d = self.dim();
        let mut data = vec![ZERO; fd * fd];
        for p in 0..d {
            let fp = Self::full_index(n, p);
            for c in 0..d {
                data[fp * fd + Self::full_index(n, c)] = self.data[p * d + c];
            }
        }
        DensityMatrix::from_data(q, data).expect("dimension matches the bus")
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|k| self.data[k * d + k].re).sum()
    }

    /// Reduced state on `{ancilla, far register}`.
    pub fn reduced_ancilla_far(&self) -> DensityMatrix {
        let m = Self::block(self.n);
        let d = self.dim();
        let far = m - 1;
        let at = |a: usize, s: usize, b: usize, t: usize| self.data[(a * m + s) * d + b * m + t];
        let mut red = vec![ZERO; 16];
        for a in 0..2 {
            for b in 0..2 {
                // reduced index: ancilla bit 0, far register bit 1
                red[(a | 2) * 4 + (b | 2)] = at(a, far, b, far);
                red[a * 4 + b] = (0..far).map(|s| at(a, s, b, s)).sum();
                red[(a | 2) * 4 + b] = at(a, far, b, 0);
                red[a * 4 + (b | 2)] = at(a, 0, b, far);
            }
        }
        let q = QubitSet::new(vec![SiteLabel::Ancilla, SiteLabel::RegisterFar])
            .expect("distinct labels");
        DensityMatrix::from_data(q, red).expect("4 x 4")
    }
}

/// Generator on the single-excitation block.
#[derive(Debug, Clone)]
pub struct SubspaceLiouvillian {
    n: usize,
    /// Nonzero `(s, u, h_su)` of the bus block including the vacuum.
    h: Vec<(usize, usize, f64)>,
    /// Per `(p, q)` decay `sum gamma (l_p l_q - 1)`, flattened.
    dephasing: Vec<f64>,
}

impl SubspaceLiouvillian {
    pub fn new(spec: &ChainSpec, noise: &NoiseModel) -> Result<Self> {
        noise.validate()?;
        if noise.rate > 0.0 && !noise.sites.is_empty() && noise.kind != NoiseKind::PhysicalT1 {
            return Err(Error::Unsupported(
                "the single-excitation engine only handles Z-type (physical T1) noise".into(),
            ));
        }
        let n = spec.n;
        let sp = single_particle_matrix(spec)?;
        let mut h = Vec::new();
        for i in 0..sp.nrows() {
            for j in 0..sp.ncols() {
                if sp[(i, j)] != 0.0 {
                    h.push((i + 1, j + 1, sp[(i, j)]));
                }
            }
        }
        // the single-particle matrix is measured from the all-down reference,
        // which is the bus vacuum
        let m = SubspaceState::block(n);
        let d = 2 * m;
        let mut deph = vec![0.0; d * d];
        for (rate, op) in noise.jumps() {
            let site = *op.factors.keys().next().expect("single-site jump");
            let l: Vec<f64> = (0..d)
                .map(|p| {
                    let (a, s) = (p / m, p % m);
                    let excited = match site {
                        SiteLabel::Ancilla => a == 1,
                        other => other.bus_index(n).map(|b| s == b + 1).unwrap_or(false),
                    };
                    if excited {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .collect();
            for p in 0..d {
                for q in 0..d {
                    deph[p * d + q] += rate * (l[p] * l[q] - 1.0);
                }
            }
        }
        Ok(SubspaceLiouvillian {
            n,
            h,
            dephasing: deph,
        })
    }
}

impl OdeSystem for SubspaceLiouvillian {
    fn dim(&self) -> usize {
        SubspaceState::dim_for(self.n).pow(2)
    }

    fn rhs(&self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let m = SubspaceState::block(self.n);
        let d = 2 * m;
        for (o, (&x, &g)) in dy.iter_mut().zip(y.iter().zip(&self.dephasing)) {
            *o = x * g;
        }
        for a in 0..2 {
            for &(s, u, h) in &self.h {
                // -i (H rho): row (a, s) gains h * row (a, u)
                let (ro, ri) = ((a * m + s) * d, (a * m + u) * d);
                let w = -I * h;
                for q in 0..d {
                    dy[ro + q] += w * y[ri + q];
                }
                // +i (rho H): column (a, s) gains h * column (a, u), using h symmetric
                let (co, ci) = (a * m + s, a * m + u);
                let w = I * h;
                for p in 0..d {
                    dy[p * d + co] += w * y[p * d + ci];
                }
            }
        }
    }
}

/// Evolution in the single-excitation block. Supports only `Z` jumps.
pub fn evolve_single_excitation_with<F>(
    rho0: &SubspaceState,
    spec: &ChainSpec,
    noise: &NoiseModel,
    t_grid: &[f64],
    opts: &IntegratorOptions,
    mut observer: F,
) -> Result<EvolveStats>
where
    F: FnMut(f64, &SubspaceState) -> ControlFlow<()>,
{
    if rho0.n != spec.n {
        return Err(Error::config("state and chain have different lengths"));
    }
    let l = SubspaceLiouvillian::new(spec, noise)?;
    let n = spec.n;
    let mut drift = 0.0f64;
    let ode = integrate(&l, &rho0.data, t_grid, opts, |_, t, y| {
        let s = SubspaceState {
            n,
            data: y.to_vec(),
        };
        drift = drift.max((s.trace() - 1.0).abs());
        observer(t, &s)
    })?;
    Ok(EvolveStats {
        ode,
        max_trace_drift: drift,
    })
}
