//! Bus geometry, dipolar couplings and Hamiltonian builders.
//!
//! Couplings follow the secular dipolar law `|kappa(r)| = kappa_ref (r_ref / r)^3`
//! for spins on a line along the field axis. Magnitudes are used throughout:
//! the overall sign of the exchange only contributes a global phase.
//!
//! The simulation core works in dimensionless units where the nominal
//! intra-chain coupling is 1. [`ChainSpec::unit_scale`] converts between
//! these units and SI through the selected [`UnitConvention`].

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{OperatorSum, Pauli, QubitSet, SiteLabel};

/// Vacuum permeability, T m / A.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Bohr magneton, J / T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Free-electron g-factor.
pub const G_ELECTRON: f64 = 2.002_319_304_36;
/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Default dipolar reference: 26 kHz at 10 nm.
pub const KAPPA_REF_HZ: f64 = 26.0e3;
pub const R_REF_NM: f64 = 10.0;

/// Zeeman splitting of the nitrogen electron spin, Hz.
pub const ZEEMAN_HZ: f64 = 10.0e9;
/// The two Jahn-Teller hyperfine values of the nitrogen donor, Hz.
pub const HYPERFINE_N_HZ: [f64; 2] = [-118.9e6, -159.7e6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingModel {
    NearestNeighbor,
    FullDipolar,
}

/// How a quoted frequency `f` enters the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitConvention {
    /// Coefficient `2 pi f` (rad/s).
    Angular,
    /// Coefficient `f` (1/s).
    Cyclic,
}

impl UnitConvention {
    pub fn factor(self) -> f64 {
        match self {
            UnitConvention::Angular => 2.0 * PI,
            UnitConvention::Cyclic => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitConvention::Angular => "angular",
            UnitConvention::Cyclic => "cyclic",
        }
    }
}

/// Spin positions along the bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    /// Equal intra-chain spacing, and a register-to-chain distance at each end.
    Uniform { chain_nm: f64, register_nm: f64 },
    /// All `N+1` nearest-neighbor distances, near register first.
    Explicit(Vec<f64>),
}

/// Register-to-chain coupling for the nearest-neighbor model. Under full
/// dipolar coupling every strength follows from the geometry instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegisterCoupling {
    /// `g / kappa` relative to the nominal intra-chain coupling.
    OverKappa(f64),
    Hz(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n: usize,
    pub geometry: Geometry,
    pub kappa_ref_hz: f64,
    pub r_ref_nm: f64,
    pub register: RegisterCoupling,
    pub model: CouplingModel,
    /// Register detuning, Hz.
    pub detuning_hz: f64,
    pub units: UnitConvention,
}

impl ChainSpec {
    /// Nearest-neighbor chain with uniform 10 nm spacing.
    pub fn uniform(n: usize, g_over_kappa: f64) -> Self {
        ChainSpec {
            n,
            geometry: Geometry::Uniform {
                chain_nm: R_REF_NM,
                register_nm: R_REF_NM,
            },
            kappa_ref_hz: KAPPA_REF_HZ,
            r_ref_nm: R_REF_NM,
            register: RegisterCoupling::OverKappa(g_over_kappa),
            model: CouplingModel::NearestNeighbor,
            detuning_hz: 0.0,
            units: UnitConvention::Cyclic,
        }
    }

    /// Weak-coupling register strength `g = kappa / (10 sqrt N)`.
    pub fn weak(n: usize) -> Self {
        Self::uniform(n, weak_g_over_kappa(n))
    }

    pub fn with_model(mut self, model: CouplingModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_units(mut self, units: UnitConvention) -> Self {
        self.units = units;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("N must be at least 1"));
        }
        if !(self.kappa_ref_hz > 0.0) || !(self.r_ref_nm > 0.0) {
            return Err(Error::config(
                "dipolar reference coupling and distance must be positive",
            ));
        }
        match &self.geometry {
            Geometry::Uniform {
                chain_nm,
                register_nm,
            } => {
                if !(*chain_nm > 0.0) || !(*register_nm > 0.0) {
                    return Err(Error::config("all spacings must be positive"));
                }
            }
            Geometry::Explicit(s) => {
                if s.len() != self.n + 1 {
                    return Err(Error::config(format!(
                        "expected N+1 = {} spacings, got {}",
                        self.n + 1,
                        s.len()
                    )));
                }
                if s.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::config("all spacings must be positive"));
                }
            }
        }
        match self.register {
            RegisterCoupling::OverKappa(r) if !(r >= 0.0) || !r.is_finite() => {
                return Err(Error::config(
                    "g/kappa must be a finite non-negative number",
                ))
            }
            RegisterCoupling::Hz(g) if !(g >= 0.0) || !g.is_finite() => {
                return Err(Error::config("g must be a finite non-negative frequency"))
            }
            _ => {}
        }
        if !self.detuning_hz.is_finite() {
            return Err(Error::config("detuning must be finite"));
        }
        Ok(())
    }

    /// The `N+1` nearest-neighbor distances in nm.
    pub fn spacings(&self) -> Vec<f64> {
        match &self.geometry {
            Geometry::Uniform {
                chain_nm,
                register_nm,
            } => {
                let mut s = vec![*chain_nm; self.n + 1];
                s[0] = *register_nm;
                s[self.n] = *register_nm;
                s
            }
            Geometry::Explicit(s) => s.clone(),
        }
    }

    /// Positions of sites `0..=N+1` in nm, site 0 at the origin.
    pub fn positions(&self) -> Vec<f64> {
        let mut pos = vec![0.0];
        let mut acc = 0.0;
        for s in self.spacings() {
            acc += s;
            pos.push(acc);
        }
        pos
    }

    /// Intra-chain distance that sets the energy unit: the uniform chain
    /// spacing, or the mean intra-chain spacing of an explicit geometry.
    pub fn nominal_chain_spacing(&self) -> f64 {
        match &self.geometry {
            Geometry::Uniform { chain_nm, .. } => *chain_nm,
            Geometry::Explicit(s) => {
                let inner = if self.n >= 2 { &s[1..self.n] } else { &s[..] };
                inner.iter().sum::<f64>() / inner.len() as f64
            }
        }
    }

    /// The nominal intra-chain coupling in Hz; this is 1 in core units.
    pub fn kappa_hz(&self) -> f64 {
        dipolar_hz(
            self.nominal_chain_spacing(),
            self.kappa_ref_hz,
            self.r_ref_nm,
        )
    }

    /// Hamiltonian coefficient of the unit coupling, in 1/s.
    pub fn unit_scale(&self) -> f64 {
        self.kappa_hz() * self.units.factor()
    }

    /// Rate in 1/s to core units.
    pub fn rate_to_core(&self, per_second: f64) -> f64 {
        per_second / self.unit_scale()
    }

    /// Core time to seconds.
    pub fn time_to_seconds(&self, t: f64) -> f64 {
        t / self.unit_scale()
    }

    /// Coherence time `T` (s) to a core-unit rate `1/T`.
    pub fn coherence_to_rate(&self, seconds: f64) -> f64 {
        self.rate_to_core(1.0 / seconds)
    }

    /// Core-unit rate to the coherence time it corresponds to, in seconds.
    pub fn rate_to_coherence(&self, rate: f64) -> f64 {
        1.0 / (rate * self.unit_scale())
    }

    /// `g / kappa` in core units (nearest-neighbor model).
    pub fn g_core(&self) -> f64 {
        match self.register {
            RegisterCoupling::OverKappa(r) => r,
            RegisterCoupling::Hz(g) => g / self.kappa_hz(),
        }
    }

    pub fn detuning_core(&self) -> f64 {
        self.detuning_hz / self.kappa_hz()
    }

    fn core_coupling(&self, r_nm: f64) -> f64 {
        dipolar_hz(r_nm, self.kappa_ref_hz, self.r_ref_nm) / self.kappa_hz()
    }

    /// Every exchange bond `(i, j, strength)` over bus indices, in core units.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        match self.model {
            CouplingModel::NearestNeighbor => {
                let spacings = self.spacings();
                let g = self.g_core();
                (0..=n)
                    .map(|i| {
                        let c = if i == 0 || i == n {
                            g
                        } else {
                            self.core_coupling(spacings[i])
                        };
                        (i, i + 1, c)
                    })
                    .collect()
            }
            CouplingModel::FullDipolar => {
                let pos = self.positions();
                let mut out = Vec::new();
                for i in 0..n + 2 {
                    for j in i + 1..n + 2 {
                        out.push((i, j, self.core_coupling(pos[j] - pos[i])));
                    }
                }
                out
            }
        }
    }
}

pub fn weak_g_over_kappa(n: usize) -> f64 {
    0.1 / (n as f64).sqrt()
}

fn dipolar_hz(r_nm: f64, kappa_ref_hz: f64, r_ref_nm: f64) -> f64 {
    kappa_ref_hz * (r_ref_nm / r_nm).powi(3)
}

/// Coupling magnitude in Hz at distance `r_nm` under `spec`'s dipolar reference.
pub fn dipolar_coupling(r_nm: f64, spec: &ChainSpec) -> Result<f64> {
    if !(r_nm > 0.0) {
        return Err(Error::config(format!(
            "distance must be positive, got {r_nm}"
        )));
    }
    Ok(dipolar_hz(r_nm, spec.kappa_ref_hz, spec.r_ref_nm))
}

/// `mu_0 g_e^2 mu_B^2 / (8 pi r^3)` expressed in Hz.
pub fn dipolar_coupling_from_constants(r_nm: f64) -> f64 {
    let r = r_nm * 1e-9;
    MU_0 * G_ELECTRON * G_ELECTRON * BOHR_MAGNETON * BOHR_MAGNETON / (8.0 * PI * r.powi(3)) / PLANCK
}

fn add_detuning(h: &mut OperatorSum, spec: &ChainSpec) -> Result<()> {
    let eps = spec.detuning_core();
    if eps != 0.0 {
        // raises the single-excitation energy of |1> on each register by eps
        h.add_pauli(SiteLabel::RegisterNear, Pauli::Z, -0.5 * eps)?;
        h.add_pauli(SiteLabel::RegisterFar, Pauli::Z, -0.5 * eps)?;
    }
    Ok(())
}

fn build_from_bonds(spec: &ChainSpec) -> Result<OperatorSum> {
    spec.validate()?;
    let n = spec.n;
    let mut h = OperatorSum::new(QubitSet::bus(n, false));
    for (i, j, c) in spec.bonds() {
        h.add_exchange(
            SiteLabel::from_bus_index(i, n),
            SiteLabel::from_bus_index(j, n),
            c,
        )?;
    }
    add_detuning(&mut h, spec)?;
    Ok(h)
}

/// Nearest-neighbor XY Hamiltonian over sites `0..=N+1`, core units.
pub fn build_effective_xy(spec: &ChainSpec) -> Result<OperatorSum> {
    if spec.model != CouplingModel::NearestNeighbor {
        return Err(Error::config(
            "build_effective_xy needs the nearest-neighbor model",
        ));
    }
    build_from_bonds(spec)
}

/// XY exchange between every pair of spins with `1/r^3` strengths.
pub fn build_full_dipolar(spec: &ChainSpec) -> Result<OperatorSum> {
    if spec.model != CouplingModel::FullDipolar {
        return Err(Error::config(
            "build_full_dipolar needs the full-dipolar model",
        ));
    }
    build_from_bonds(spec)
}

/// Dispatches on `spec.model`.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<OperatorSum> {
    match spec.model {
        CouplingModel::NearestNeighbor => build_effective_xy(spec),
        CouplingModel::FullDipolar => build_full_dipolar(spec),
    }
}

/// Drive parameters of the two-spin RWA harness. Any consistent unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Transition frequencies `omega_0 + delta_i`.
    pub omega: [f64; 2],
    /// Drive amplitude.
    pub rabi: f64,
    pub kappa: f64,
}

impl DriveParams {
    /// `kappa = 1`, `rabi = factor`, and transition frequencies carrying the
    /// two nitrogen hyperfine offsets `+A1/2`, `-A2/2` relative to the Zeeman
    /// splitting, scaled so that the smaller one equals `factor^2`.
    pub fn with_hierarchy(factor: f64) -> Self {
        let d1 = HYPERFINE_N_HZ[0] / 2.0 / ZEEMAN_HZ;
        let d2 = -HYPERFINE_N_HZ[1] / 2.0 / ZEEMAN_HZ;
        let omega0 = factor * factor / (1.0 + d1.min(d2));
        DriveParams {
            omega: [omega0 * (1.0 + d1), omega0 * (1.0 + d2)],
            rabi: factor,
            kappa: 1.0,
        }
    }

    /// `|kappa| * h <= rabi` and `rabi * h <= omega_i`.
    pub fn hierarchy_ok(&self, factor: f64) -> bool {
        self.kappa.abs() * factor <= self.rabi * (1.0 + 1e-12)
            && self
                .omega
                .iter()
                .all(|w| self.rabi * factor <= w * (1.0 + 1e-12))
    }
}

type M4 = Matrix4<Complex64>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Two-spin operator in display order `|s1 s2>` (spin 1 is the high bit).
fn two_spin(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> M4 {
    M4::from_fn(|r, c| a[r >> 1][c >> 1] * b[r & 1][c & 1])
}

fn id2() -> [[Complex64; 2]; 2] {
    [[re(1.0), re(0.0)], [re(0.0), re(1.0)]]
}

/// Lab-frame driven two-spin Hamiltonian at time `t`:
/// `kappa Z1 Z2 + sum (omega_i/2) Z_i + sum rabi X_i cos(omega_i t)`.
pub fn build_lab_frame_two_spin(p: &DriveParams, t: f64) -> M4 {
    let (x, z) = (Pauli::X.matrix(), Pauli::Z.matrix());
    let z1 = two_spin(z, id2());
    let z2 = two_spin(id2(), z);
    let x1 = two_spin(x, id2());
    let x2 = two_spin(id2(), x);
    z1 * z2 * re(p.kappa)
        + z1 * re(p.omega[0] / 2.0)
        + z2 * re(p.omega[1] / 2.0)
        + x1 * re(p.rabi * (p.omega[0] * t).cos())
        + x2 * re(p.rabi * (p.omega[1] * t).cos())
}

/// Rotating-frame targets of the two rotating-wave approximations.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatingFrame {
    /// After the first RWA: `kappa Z1 Z2 + sum (rabi/2) X_i`.
    pub h_rwa: M4,
    /// The first-RWA Hamiltonian in the rotated basis, before the second
    /// RWA: `kappa X1 X2 + sum (rabi/2) Z_i`.
    pub h_rotated: M4,
    /// After the second RWA: `kappa (s+ s- + s- s+) + sum (rabi/2) Z_i`.
    pub h_rf: M4,
}

pub fn rotating_frame_reference(p: &DriveParams) -> RotatingFrame {
    let (x, y, z) = (Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::Z.matrix());
    let h_rwa =
        two_spin(z, z) * re(p.kappa) + (two_spin(x, id2()) + two_spin(id2(), x)) * re(p.rabi / 2.0);
    let local_z = (two_spin(z, id2()) + two_spin(id2(), z)) * re(p.rabi / 2.0);
    let h_rotated = two_spin(x, x) * re(p.kappa) + local_z;
    let h_rf = (two_spin(x, x) + two_spin(y, y)) * re(p.kappa / 2.0) + local_z;
    RotatingFrame {
        h_rwa,
        h_rotated,
        h_rf,
    }
}

/// `U(t) = diag(e^{i theta_k t})` with
/// `theta = ((w1+w2)/2, (w1-w2)/2, -(w1-w2)/2, -(w1+w2)/2)`.
pub fn frame_unitary(p: &DriveParams, t: f64) -> M4 {
    let s = (p.omega[0] + p.omega[1]) / 2.0;
    let d = (p.omega[0] - p.omega[1]) / 2.0;
    let theta = [s, d, -d, -s];
    M4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| {
        Complex64::from_polar(1.0, theta[k] * t)
    }))
}

/// Local change of basis `|0> -> |+>`, `|1> -> |->` on both spins.
pub fn rotated_basis() -> M4 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = [[re(s), re(s)], [re(s), re(-s)]];
    two_spin(h, h)
}
