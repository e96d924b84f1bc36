//! Flat `key = value` experiment configuration.
//!
//! Dimensionful values carry units (`26kHz`, `3.2ms`, `10nm`) and are
//! converted here, once; everything past this module is in SI or core units.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use spinbus::hamiltonian::{
    weak_g_over_kappa, ChainSpec, CouplingModel, Geometry, RegisterCoupling, UnitConvention,
    KAPPA_REF_HZ, R_REF_NM,
};
use spinbus::lindblad::{NoiseKind, NoiseModel};
use spinbus::ode::{IntegratorOptions, Method};
use spinbus::protocols::{
    DisorderSpec, Engine, EntanglementSetup, QstSetup, RegisterRegime, RwaOptions, SearchOptions,
};

use crate::error::CliError;

/// Recognized keys with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "chain length N"),
    (
        "g-over-kappa",
        "register coupling relative to kappa, or `weak` for 1/(10 sqrt N)",
    ),
    ("g", "register coupling as a frequency"),
    ("kappa", "dipolar coupling at the reference distance"),
    ("r-ref", "reference distance for kappa"),
    ("spacing", "intra-chain spacing"),
    (
        "register-spacing",
        "register-to-chain spacing (defaults to spacing)",
    ),
    (
        "spacings",
        "all N+1 nearest-neighbor distances, comma separated",
    ),
    ("model", "nn or fd"),
    ("detuning", "register detuning epsilon"),
    ("units", "cyclic or angular"),
    ("noise", "none, t1 or t2"),
    ("coherence", "T1 or T2 time of the chain spins"),
    ("method", "rk45 or rk4"),
    ("rtol", "relative tolerance"),
    ("atol", "absolute tolerance"),
    (
        "max-step",
        "step bound in core time units (step size for rk4)",
    ),
    (
        "window-factor",
        "time window in units of the zero-mode transfer time",
    ),
    ("points", "samples in the time window"),
    ("eps-q", "concurrence floor for the classical threshold"),
    (
        "search-tol",
        "relative bracket width at which bisection stops",
    ),
    ("target", "fidelity target for ft-threshold"),
    ("chain-init", "initial chain bit string, e.g. 010"),
    (
        "input",
        "transferred qubit: plus, minus, plus-y, zero or one",
    ),
    ("engine", "auto, full or subspace"),
    ("runs", "Monte Carlo runs"),
    ("disorder", "relative spacing standard deviation"),
    ("n-list", "chain lengths, comma separated"),
    ("regime", "strong or weak register coupling"),
    ("seed", "64-bit master seed"),
    (
        "g-grid",
        "register couplings for surface, comma separated or a:b:step",
    ),
    (
        "coherence-grid",
        "coherence times for surface, comma separated",
    ),
    ("factor", "frequency hierarchy factor for rwa-check"),
    ("t-final", "rwa-check horizon in core time units"),
    ("samples", "rwa-check comparison samples"),
    ("experiment", "experiment run at each sweep point"),
    ("output", "output file; stdout when absent"),
    ("format", "csv or json"),
];

/// Keys that only steer where results go, left out of the config hash.
const OUTPUT_KEYS: &[&str] = &["output", "format"];

pub fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// `--N`, `g_over_kappa` and `G-Over-Kappa` all name `g-over-kappa`-style keys.
pub fn normalize_key(key: &str) -> String {
    let k = key.trim().to_ascii_lowercase().replace('_', "-");
    if k == "n" || k == "chain-length" {
        "n".into()
    } else {
        k
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Sweep axes in declaration order.
    sweep: Vec<(String, Vec<String>)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = Config::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::validation(format!("line {}: expected `key = value`", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(axis) = k.strip_prefix("sweep.") {
                c.add_sweep(axis, v)?;
            } else {
                let key = normalize_key(k);
                if c.values.contains_key(&key) {
                    return Err(CliError::validation(format!(
                        "line {}: `{key}` given twice",
                        no + 1
                    )));
                }
                c.set(&key, v)?;
            }
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = normalize_key(key);
        if !is_known(&key) {
            return Err(CliError::validation(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(CliError::validation(format!("`{key}` has an empty value")));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    /// Adds or replaces a sweep axis from `v1,v2,...` or `a:b:step`.
    pub fn add_sweep(&mut self, key: &str, list: &str) -> Result<(), CliError> {
        let key = normalize_key(key);
        if !is_known(&key) || OUTPUT_KEYS.contains(&key.as_str()) || key == "experiment" {
            return Err(CliError::validation(format!("`{key}` cannot be swept")));
        }
        let values = expand_list(list)?;
        if values.is_empty() {
            return Err(CliError::validation(format!("sweep over `{key}` is empty")));
        }
        match self.sweep.iter_mut().find(|(k, _)| *k == key) {
            Some(axis) => axis.1 = values,
            None => self.sweep.push((key, values)),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(is_known(key), "{key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn sweep_axes(&self) -> &[(String, Vec<String>)] {
        &self.sweep
    }

    /// Copy with the sweep axes fixed to one value each.
    pub fn at_point(&self, assignment: &[(String, String)]) -> Result<Config, CliError> {
        let mut c = Config {
            values: self.values.clone(),
            sweep: Vec::new(),
        };
        for (k, v) in assignment {
            c.set(k, v)?;
        }
        Ok(c)
    }

    /// Canonical text form; the input of [`Config::hash`].
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            if !OUTPUT_KEYS.contains(&k.as_str()) {
                out.push_str(&format!("{k}={v}\n"));
            }
        }
        for (k, vs) in &self.sweep {
            out.push_str(&format!("sweep.{k}={}\n", vs.join(",")));
        }
        out
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    // typed accessors

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::validation(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn number(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.parsed::<f64>(key)?.unwrap_or(default))
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.parsed::<usize>(key)?.unwrap_or(default))
    }

    fn quantity(&self, key: &str, dim: Dim) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|v| parse_quantity(key, v, dim))
            .transpose()
    }

    pub fn n(&self) -> Result<usize, CliError> {
        let n = self.count("n", 3)?;
        if n == 0 {
            return Err(CliError::validation("N must be at least 1"));
        }
        Ok(n)
    }

    pub fn units(&self) -> Result<UnitConvention, CliError> {
        match self.get("units").unwrap_or("cyclic") {
            "cyclic" => Ok(UnitConvention::Cyclic),
            "angular" => Ok(UnitConvention::Angular),
            other => Err(CliError::validation(format!(
                "`units`: unknown convention `{other}`"
            ))),
        }
    }

    pub fn model(&self) -> Result<CouplingModel, CliError> {
        match self.get("model").unwrap_or("nn") {
            "nn" | "nearest-neighbor" => Ok(CouplingModel::NearestNeighbor),
            "fd" | "full-dipolar" => Ok(CouplingModel::FullDipolar),
            other => Err(CliError::validation(format!(
                "`model`: unknown model `{other}`"
            ))),
        }
    }

    /// `g / kappa` for chain length `n`, resolving `weak`.
    pub fn g_over_kappa(&self, n: usize) -> Result<f64, CliError> {
        match self.get("g-over-kappa") {
            None => Ok(1.0),
            Some(v) => resolve_g(v, n),
        }
    }

    pub fn chain(&self) -> Result<ChainSpec, CliError> {
        let n = self.n()?;
        let mut spec = ChainSpec::uniform(n, 1.0);
        spec.kappa_ref_hz = self
            .quantity("kappa", Dim::Frequency)?
            .unwrap_or(KAPPA_REF_HZ);
        spec.r_ref_nm = self.quantity("r-ref", Dim::Length)?.unwrap_or(R_REF_NM);
        spec.model = self.model()?;
        spec.units = self.units()?;
        spec.detuning_hz = self.quantity("detuning", Dim::Frequency)?.unwrap_or(0.0);
        if let Some(list) = self.get("spacings") {
            if self.get("spacing").is_some() || self.get("register-spacing").is_some() {
                return Err(CliError::validation(
                    "`spacings` excludes `spacing` and `register-spacing`",
                ));
            }
            let s = split_list(list)
                .iter()
                .map(|v| parse_quantity("spacings", v, Dim::Length))
                .collect::<Result<Vec<_>, _>>()?;
            spec.geometry = Geometry::Explicit(s);
        } else {
            let chain_nm = self.quantity("spacing", Dim::Length)?.unwrap_or(R_REF_NM);
            let register_nm = self
                .quantity("register-spacing", Dim::Length)?
                .unwrap_or(chain_nm);
            spec.geometry = Geometry::Uniform {
                chain_nm,
                register_nm,
            };
        }
        spec.register = match (self.get("g"), self.get("g-over-kappa")) {
            (Some(_), Some(_)) => {
                return Err(CliError::validation(
                    "give either `g` or `g-over-kappa`, not both",
                ))
            }
            (Some(v), None) => RegisterCoupling::Hz(parse_quantity("g", v, Dim::Frequency)?),
            _ => RegisterCoupling::OverKappa(self.g_over_kappa(n)?),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noise_kind(&self) -> Result<Option<NoiseKind>, CliError> {
        match self.get("noise").unwrap_or("none") {
            "none" => Ok(None),
            "t1" => Ok(Some(NoiseKind::PhysicalT1)),
            "t2" => Ok(Some(NoiseKind::PhysicalT2)),
            other => Err(CliError::validation(format!(
                "`noise`: unknown kind `{other}`"
            ))),
        }
    }

    /// Coherence time in seconds, required when noise is on.
    pub fn coherence(&self) -> Result<Option<f64>, CliError> {
        let t = self.quantity("coherence", Dim::Time)?;
        if let Some(t) = t {
            if !(t > 0.0) {
                return Err(CliError::validation("`coherence` must be positive"));
            }
        }
        Ok(t)
    }

    pub fn noise(&self, spec: &ChainSpec) -> Result<NoiseModel, CliError> {
        match self.noise_kind()? {
            None => Ok(NoiseModel::none()),
            Some(kind) => {
                let t = self.coherence()?.ok_or_else(|| {
                    CliError::validation("noise is on but `coherence` is missing")
                })?;
                Ok(NoiseModel::chain(kind, spec.coherence_to_rate(t), spec.n))
            }
        }
    }

    /// Noise kind for threshold searches; defaults to t2.
    pub fn search_kind(&self) -> Result<NoiseKind, CliError> {
        Ok(self.noise_kind()?.unwrap_or(NoiseKind::PhysicalT2))
    }

    pub fn integrator(&self) -> Result<IntegratorOptions, CliError> {
        let method = match self.get("method").unwrap_or("rk45") {
            "rk45" => Method::AdaptiveRk45,
            "rk4" => Method::FixedRk4,
            other => return Err(CliError::validation(format!("`method`: unknown `{other}`"))),
        };
        let d = IntegratorOptions::default();
        let o = IntegratorOptions {
            method,
            rel_tol: self.number("rtol", d.rel_tol)?,
            abs_tol: self.number("atol", d.abs_tol)?,
            max_step: self.number("max-step", d.max_step)?,
            ..d
        };
        o.validate()?;
        Ok(o)
    }

    pub fn search(&self) -> Result<SearchOptions, CliError> {
        let d = SearchOptions::default();
        let o = SearchOptions {
            eps_q: self.number("eps-q", d.eps_q)?,
            rel_tol: self.number("search-tol", d.rel_tol)?,
            window_factor: self.number("window-factor", d.window_factor)?,
            points: self.count("points", d.points)?,
            integrator: self.integrator()?,
            ..d
        };
        o.validate()?;
        Ok(o)
    }

    pub fn chain_init(&self, n: usize) -> Result<Vec<u8>, CliError> {
        let Some(bits) = self.get("chain-init") else {
            return Ok(vec![0; n]);
        };
        let v: Vec<u8> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(CliError::validation(format!(
                    "`chain-init`: `{bits}` is not a bit string"
                ))),
            })
            .collect::<Result<_, _>>()?;
        if v.len() != n {
            return Err(CliError::validation(format!(
                "`chain-init` has {} bits, N = {n}",
                v.len()
            )));
        }
        Ok(v)
    }

    pub fn entanglement_setup(&self, n: usize) -> Result<EntanglementSetup, CliError> {
        let mut s = EntanglementSetup::with_chain(self.chain_init(n)?);
        s.engine = match self.get("engine").unwrap_or("auto") {
            "auto" => Engine::Auto,
            "full" => Engine::Full,
            "subspace" => Engine::Subspace,
            other => return Err(CliError::validation(format!("`engine`: unknown `{other}`"))),
        };
        Ok(s)
    }

    pub fn qst_setup(&self, n: usize) -> Result<QstSetup, CliError> {
        use num_complex::Complex64 as C;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let input = match self.get("input").unwrap_or("plus") {
            "plus" => [C::new(h, 0.0), C::new(h, 0.0)],
            "minus" => [C::new(h, 0.0), C::new(-h, 0.0)],
            "plus-y" => [C::new(h, 0.0), C::new(0.0, h)],
            "zero" => [C::new(1.0, 0.0), C::new(0.0, 0.0)],
            "one" => [C::new(0.0, 0.0), C::new(1.0, 0.0)],
            other => {
                return Err(CliError::validation(format!(
                    "`input`: unknown state `{other}`"
                )))
            }
        };
        Ok(QstSetup {
            input,
            chain_init: self.chain_init(n)?,
        })
    }

    pub fn target(&self) -> Result<f64, CliError> {
        let t = self.number("target", 0.99)?;
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::validation("`target` must lie in (0, 1]"));
        }
        Ok(t)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        match self.get("seed") {
            None => Ok(DisorderSpec::default().seed),
            Some(v) => {
                let parsed = match v.strip_prefix("0x") {
                    Some(hex) => u64::from_str_radix(hex, 16),
                    None => v.parse(),
                };
                parsed.map_err(|_| {
                    CliError::validation(format!("`seed`: `{v}` is not a 64-bit integer"))
                })
            }
        }
    }

    pub fn disorder(&self) -> Result<DisorderSpec, CliError> {
        let d = DisorderSpec::default();
        let s = DisorderSpec {
            mean_spacing_nm: self
                .quantity("spacing", Dim::Length)?
                .unwrap_or(d.mean_spacing_nm),
            rel_std: parse_fraction("disorder", self.get("disorder"))?.unwrap_or(d.rel_std),
            runs: self.count("runs", d.runs)?,
            seed: self.seed()?,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n_list(&self) -> Result<Vec<usize>, CliError> {
        let Some(list) = self.get("n-list") else {
            return Ok(vec![self.n()?]);
        };
        split_list(list)
            .iter()
            .map(|v| match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(CliError::validation(format!(
                    "`n-list`: `{v}` is not a chain length"
                ))),
            })
            .collect()
    }

    pub fn regime(&self) -> Result<RegisterRegime, CliError> {
        match self.get("regime").unwrap_or("strong") {
            "strong" => Ok(RegisterRegime::Strong),
            "weak" => Ok(RegisterRegime::Weak),
            other => Err(CliError::validation(format!("`regime`: unknown `{other}`"))),
        }
    }

    /// Register couplings for a surface; `weak` resolves against N.
    pub fn g_grid(&self, n: usize) -> Result<Vec<f64>, CliError> {
        let list = self.get("g-grid").unwrap_or("0.1:1:0.1");
        expand_list(list)?.iter().map(|v| resolve_g(v, n)).collect()
    }

    pub fn coherence_grid(&self) -> Result<Vec<f64>, CliError> {
        let list = self
            .get("coherence-grid")
            .ok_or_else(|| CliError::validation("surface needs `coherence-grid`"))?;
        split_list(list)
            .iter()
            .map(|v| parse_quantity("coherence-grid", v, Dim::Time))
            .collect()
    }

    pub fn rwa(&self) -> Result<RwaOptions, CliError> {
        let d = RwaOptions::default();
        let o = RwaOptions {
            factor: self.number("factor", d.factor)?,
            t_final: self.parsed::<f64>("t-final")?,
            samples: self.count("samples", d.samples)?,
            integrator: match self.get("rtol").or(self.get("atol")).or(self.get("method")) {
                Some(_) => self.integrator()?,
                None => d.integrator,
            },
        };
        if !(o.factor > 1.0) {
            return Err(CliError::validation("`factor` must exceed 1"));
        }
        if o.samples == 0 {
            return Err(CliError::validation("`samples` must be at least 1"));
        }
        Ok(o)
    }

    pub fn format(&self) -> Result<Format, CliError> {
        match self.get("format") {
            Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(other) => Err(CliError::validation(format!("`format`: unknown `{other}`"))),
            None => Ok(match self.get("output") {
                Some(p) if p.ends_with(".json") => Format::Json,
                _ => Format::Csv,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Frequency,
    Time,
    Length,
}

/// Splits a numeric prefix from its unit suffix and scales to Hz, s or nm.
pub fn parse_quantity(key: &str, text: &str, dim: Dim) -> Result<f64, CliError> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            c.is_alphabetic()
                && !(matches!(c, 'e' | 'E')
                    && t[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+'))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = (t[..split].trim(), t[split..].trim());
    let value: f64 = num
        .parse()
        .map_err(|_| CliError::validation(format!("`{key}`: cannot parse `{text}`")))?;
    let scale = match (dim, unit) {
        (Dim::Frequency, "Hz") => 1.0,
        (Dim::Frequency, "kHz") => 1e3,
        (Dim::Frequency, "MHz") => 1e6,
        (Dim::Frequency, "GHz") => 1e9,
        (Dim::Time, "s") => 1.0,
        (Dim::Time, "ms") => 1e-3,
        (Dim::Time, "us" | "μs" | "µs") => 1e-6,
        (Dim::Time, "ns") => 1e-9,
        (Dim::Length, "nm") => 1.0,
        (Dim::Length, "um" | "μm" | "µm") => 1e3,
        (Dim::Length, "A") => 0.1,
        (_, "") => {
            return Err(CliError::validation(format!(
                "`{key}` needs a unit ({})",
                match dim {
                    Dim::Frequency => "Hz, kHz, MHz or GHz",
                    Dim::Time => "s, ms, us or ns",
                    Dim::Length => "nm or um",
                }
            )))
        }
        (_, u) => return Err(CliError::validation(format!("`{key}`: unknown unit `{u}`"))),
    };
    Ok(value * scale)
}

/// `0.05` or `5%`.
fn parse_fraction(key: &str, v: Option<&str>) -> Result<Option<f64>, CliError> {
    v.map(|v| {
        let (num, scale) = match v.strip_suffix('%') {
            Some(p) => (p, 0.01),
            None => (v, 1.0),
        };
        num.trim()
            .parse::<f64>()
            .map(|x| x * scale)
            .map_err(|_| CliError::validation(format!("`{key}`: cannot parse `{v}`")))
    })
    .transpose()
}

fn resolve_g(v: &str, n: usize) -> Result<f64, CliError> {
    if v == "weak" {
        return Ok(weak_g_over_kappa(n));
    }
    v.parse::<f64>()
        .map_err(|_| CliError::validation(format!("`g-over-kappa`: cannot parse `{v}`")))
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Comma list, where an item `a:b:step` expands to the arithmetic range
/// including `b`.
pub fn expand_list(list: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for item in split_list(list) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            out.push(item);
            continue;
        }
        let bad = || CliError::validation(format!("range `{item}` is not `start:stop:step`"));
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let h: f64 = parts[2].parse().map_err(|_| bad())?;
        if !(h > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / h + 1e-9).floor() as usize;
        for k in 0..=count {
            let x = a + k as f64 * h;
            // trim representation noise such as 0.30000000000000004
            out.push(format!("{}", (x * 1e12).round() / 1e12));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_carry_units() {
        assert_eq!(parse_quantity("k", "26kHz", Dim::Frequency).unwrap(), 26e3);
        assert!((parse_quantity("t", "3.2 ms", Dim::Time).unwrap() - 3.2e-3).abs() < 1e-18);
        assert_eq!(parse_quantity("t", "70us", Dim::Time).unwrap(), 70e-6);
        assert_eq!(parse_quantity("t", "1e-3s", Dim::Time).unwrap(), 1e-3);
        assert_eq!(parse_quantity("r", "5nm", Dim::Length).unwrap(), 5.0);
        assert!(parse_quantity("t", "3.2", Dim::Time).is_err());
        assert!(parse_quantity("t", "3.2kHz", Dim::Time).is_err());
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        assert!(Config::parse("n = 3\ncoherance = 1ms\n").is_err());
        assert!(Config::parse("n = 3\nN = 5\n").is_err());
        assert!(Config::parse("sweep.colour = 1,2\n").is_err());
        let c = Config::parse("# comment\nN = 5 # trailing\ng_over_kappa = weak\n").unwrap();
        assert_eq!(c.n().unwrap(), 5);
        assert!((c.g_over_kappa(5).unwrap() - weak_g_over_kappa(5)).abs() < 1e-15);
    }

    #[test]
    fn ranges_expand_inclusively() {
        let v = expand_list("0.1:1:0.1").unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[2], "0.3");
        assert_eq!(v[9], "1");
        assert_eq!(expand_list("weak, 0.5").unwrap(), vec!["weak", "0.5"]);
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = Config::parse("n = 3\noutput = a.csv\n").unwrap();
        let b = Config::parse("n = 3\noutput = b.json\n").unwrap();
        let c = Config::parse("n = 5\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn chain_from_keys() {
        let c = Config::parse(
            "n=5\nspacing=5nm\nregister-spacing=10nm\ng-over-kappa=1\nunits=angular\n",
        )
        .unwrap();
        let s = c.chain().unwrap();
        assert_eq!(s.units, UnitConvention::Angular);
        assert_eq!(s.spacings(), vec![10.0, 5.0, 5.0, 5.0, 5.0, 10.0]);
        let both = Config::parse("g = 26kHz\ng-over-kappa = 1\n").unwrap();
        assert!(both.chain().is_err());
        assert!(Config::parse("n = 0\n").unwrap().chain().is_err());
    }
}
