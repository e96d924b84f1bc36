//! Labeled multi-qubit states and Pauli-string operators.
//!
//! Every state carries a [`QubitSet`], an ordered list of [`SiteLabel`]s in
//! the fixed order `ancilla, 0, 1, ..., N, N+1`. Basis indices are
//! little-endian: the qubit at position `k` of the set owns bit `k` of the
//! index. All simulation happens in the rotated computational basis of the
//! effective XY Hamiltonian.
//!
//! Operators are never stored as dense `2^n x 2^n` matrices on the hot path.
//! A Pauli string acts on a basis index as `P|k> = a(k) |k ^ flip>`, which is
//! what [`PauliKernel`] encodes; [`SparseOperator`] is the row-compressed
//! form of a whole [`OperatorSum`] used by the integrators.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Role of a spin in the bus. The derived ordering is the canonical qubit
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SiteLabel {
    Ancilla,
    /// Near register, bus index 0.
    RegisterNear,
    /// Chain spin `i`, bus index `1..=N`.
    Chain(usize),
    /// Far register, bus index `N+1`.
    RegisterFar,
}

impl SiteLabel {
    /// Position along the bus (`0..=n+1`), or `None` for the ancilla.
    pub fn bus_index(self, n: usize) -> Option<usize> {
        match self {
            SiteLabel::Ancilla => None,
            SiteLabel::RegisterNear => Some(0),
            SiteLabel::Chain(i) => Some(i),
            SiteLabel::RegisterFar => Some(n + 1),
        }
    }

    /// Inverse of [`SiteLabel::bus_index`].
    pub fn from_bus_index(index: usize, n: usize) -> SiteLabel {
        if index == 0 {
            SiteLabel::RegisterNear
        } else if index == n + 1 {
            SiteLabel::RegisterFar
        } else {
            SiteLabel::Chain(index)
        }
    }

    pub fn is_chain(self) -> bool {
        matches!(self, SiteLabel::Chain(_))
    }
}

impl fmt::Display for SiteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteLabel::Ancilla => write!(f, "a"),
            SiteLabel::RegisterNear => write!(f, "r0"),
            SiteLabel::Chain(i) => write!(f, "c{i}"),
            SiteLabel::RegisterFar => write!(f, "rN"),
        }
    }
}

/// Ordered, duplicate-free list of qubit labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSet {
    labels: Vec<SiteLabel>,
}

impl QubitSet {
    /// Builds a set from arbitrary labels; they are sorted into canonical order.
    pub fn new(mut labels: Vec<SiteLabel>) -> Result<Self> {
        labels.sort();
        for w in labels.windows(2) {
            if w[0] == w[1] {
                return Err(Error::config(format!("duplicate site label {}", w[0])));
            }
        }
        if labels.len() > 24 {
            return Err(Error::config(format!(
                "{} qubits exceed the dense-state limit of 24",
                labels.len()
            )));
        }
        Ok(QubitSet { labels })
    }

    /// Sites `0..=n+1`, optionally preceded by the ancilla.
    pub fn bus(n: usize, with_ancilla: bool) -> Self {
        let mut labels = Vec::with_capacity(n + 3);
        if with_ancilla {
            labels.push(SiteLabel::Ancilla);
        }
        labels.push(SiteLabel::RegisterNear);
        labels.extend((1..=n).map(SiteLabel::Chain));
        labels.push(SiteLabel::RegisterFar);
        QubitSet { labels }
    }

    pub fn labels(&self) -> &[SiteLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Hilbert-space dimension `2^len`.
    pub fn dim(&self) -> usize {
        1 << self.labels.len()
    }

    pub fn position(&self, label: SiteLabel) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn require(&self, label: SiteLabel) -> Result<usize> {
        self.position(label).ok_or(Error::UnknownSite(label))
    }

    pub fn contains(&self, label: SiteLabel) -> bool {
        self.position(label).is_some()
    }

    pub fn is_subset_of(&self, other: &QubitSet) -> bool {
        self.labels.iter().all(|&l| other.contains(l))
    }

    /// Number of chain spins, if the set is a contiguous bus `0..=N+1`.
    pub fn chain_length(&self) -> Option<usize> {
        let chain: Vec<usize> = self
            .labels
            .iter()
            .filter_map(|l| match l {
                SiteLabel::Chain(i) => Some(*i),
                _ => None,
            })
            .collect();
        let contiguous = chain.iter().enumerate().all(|(k, &i)| i == k + 1);
        (contiguous
            && self.contains(SiteLabel::RegisterNear)
            && self.contains(SiteLabel::RegisterFar))
        .then_some(chain.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// The 2x2 matrix in the computational basis, `m[row][col]`.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// `coefficient * prod_s P_s`. Identity sites are absent from `factors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: Complex64,
    pub factors: BTreeMap<SiteLabel, Pauli>,
}

impl PauliString {
    pub fn identity(coefficient: Complex64) -> Self {
        PauliString {
            coefficient,
            factors: BTreeMap::new(),
        }
    }

    pub fn single(site: SiteLabel, p: Pauli, coefficient: Complex64) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(site, p);
        PauliString {
            coefficient,
            factors,
        }
    }

    pub fn pair(a: SiteLabel, pa: Pauli, b: SiteLabel, pb: Pauli, coefficient: Complex64) -> Self {
        assert_ne!(a, b, "a Pauli pair needs two distinct sites");
        let mut factors = BTreeMap::new();
        factors.insert(a, pa);
        factors.insert(b, pb);
        PauliString {
            coefficient,
            factors,
        }
    }

    /// Paulis are Hermitian, so only the coefficient is conjugated.
    pub fn adjoint(&self) -> Self {
        PauliString {
            coefficient: self.coefficient.conj(),
            factors: self.factors.clone(),
        }
    }

    pub fn support(&self) -> impl Iterator<Item = SiteLabel> + '_ {
        self.factors.keys().copied()
    }

    /// Bit masks of this string relative to `qubits`.
    pub fn kernel(&self, qubits: &QubitSet) -> Result<PauliKernel> {
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut phase = self.coefficient;
        for (&site, &p) in &self.factors {
            let bit = 1usize << qubits.require(site)?;
            match p {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    phase *= I;
                }
                Pauli::Z => sign |= bit,
            }
        }
        Ok(PauliKernel { flip, sign, phase })
    }
}

/// A Pauli string compiled against a qubit set: `P|k> = amplitude(k) |k ^ flip>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliKernel {
    pub flip: usize,
    pub sign: usize,
    pub phase: Complex64,
}

impl PauliKernel {
    #[inline]
    pub fn amplitude(&self, k: usize) -> Complex64 {
        if (k & self.sign).count_ones() & 1 == 1 {
            -self.phase
        } else {
            self.phase
        }
    }

    /// `+1` or `-1`: the amplitude of a unit-coefficient Hermitian string
    /// without its `i^{#Y}` phase.
    #[inline]
    pub fn parity(&self, k: usize) -> f64 {
        if (k & self.sign).count_ones() & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Applies `op` to a state vector over `qubits`. Cost is `O(dim)`.
pub fn apply_pauli_string(
    op: &PauliString,
    v: &[Complex64],
    qubits: &QubitSet,
) -> Result<Vec<Complex64>> {
    if v.len() != qubits.dim() {
        return Err(Error::DimensionMismatch {
            expected: qubits.dim(),
            found: v.len(),
        });
    }
    let kern = op.kernel(qubits)?;
    let mut out = vec![ZERO; v.len()];
    for (k, &amp) in v.iter().enumerate() {
        out[k ^ kern.flip] = kern.amplitude(k) * amp;
    }
    Ok(out)
}

/// Two-level ladder operators, `σ± = (σx ± iσy)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Plus,
    Minus,
}

impl Ladder {
    fn expansion(self) -> [(Pauli, Complex64); 2] {
        match self {
            Ladder::Plus => [
                (Pauli::X, Complex64::new(0.5, 0.0)),
                (Pauli::Y, Complex64::new(0.0, 0.5)),
            ],
            Ladder::Minus => [
                (Pauli::X, Complex64::new(0.5, 0.0)),
                (Pauli::Y, Complex64::new(0.0, -0.5)),
            ],
        }
    }
}

/// Weighted sum of Pauli strings over a qubit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSum {
    terms: Vec<PauliString>,
    qubits: QubitSet,
}

impl OperatorSum {
    pub fn new(qubits: QubitSet) -> Self {
        OperatorSum {
            terms: Vec::new(),
            qubits,
        }
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn qubits(&self) -> &QubitSet {
        &self.qubits
    }

    pub fn push(&mut self, term: PauliString) -> Result<()> {
        if let Some(site) = term.support().find(|s| !self.qubits.contains(*s)) {
            return Err(Error::UnknownSite(site));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn add_pauli(&mut self, site: SiteLabel, p: Pauli, coefficient: f64) -> Result<()> {
        self.push(PauliString::single(
            site,
            p,
            Complex64::new(coefficient, 0.0),
        ))
    }

    /// Appends `c * L_a L_b` expanded into four Pauli strings.
    pub fn add_ladder_product(
        &mut self,
        a: SiteLabel,
        la: Ladder,
        b: SiteLabel,
        lb: Ladder,
        c: f64,
    ) -> Result<()> {
        for (pa, ca) in la.expansion() {
            for (pb, cb) in lb.expansion() {
                self.push(PauliString::pair(a, pa, b, pb, ca * cb * c))?;
            }
        }
        Ok(())
    }

    /// Appends the XY exchange `c (σ+_a σ-_b + σ-_a σ+_b)`, collected into
    /// `(c/2)(XX + YY)`.
    pub fn add_exchange(&mut self, a: SiteLabel, b: SiteLabel, c: f64) -> Result<()> {
        let half = Complex64::new(0.5 * c, 0.0);
        self.push(PauliString::pair(a, Pauli::X, b, Pauli::X, half))?;
        self.push(PauliString::pair(a, Pauli::Y, b, Pauli::Y, half))
    }

    /// Merges strings with identical factors and drops vanishing ones.
    pub fn simplify(&self) -> OperatorSum {
        let mut terms = Vec::new();
        for (factors, coefficient) in self.collect() {
            if coefficient.norm() > 1e-15 {
                terms.push(PauliString {
                    coefficient,
                    factors,
                });
            }
        }
        OperatorSum {
            terms,
            qubits: self.qubits.clone(),
        }
    }

    fn collect(&self) -> BTreeMap<BTreeMap<SiteLabel, Pauli>, Complex64> {
        let mut map: BTreeMap<BTreeMap<SiteLabel, Pauli>, Complex64> = BTreeMap::new();
        for t in &self.terms {
            *map.entry(t.factors.clone()).or_insert(ZERO) += t.coefficient;
        }
        map
    }

    pub fn adjoint(&self) -> OperatorSum {
        OperatorSum {
            terms: self.terms.iter().map(PauliString::adjoint).collect(),
            qubits: self.qubits.clone(),
        }
    }

    /// Conjugate-collect-compare: every collected coefficient must be real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let a = self.collect();
        let b = self.adjoint().collect();
        a.iter()
            .all(|(k, v)| (b.get(k).copied().unwrap_or(ZERO) - v).norm() <= tol)
    }

    /// Matrix-free application to a state vector over `on`.
    pub fn apply(&self, v: &[Complex64], on: &QubitSet) -> Result<Vec<Complex64>> {
        if v.len() != on.dim() {
            return Err(Error::DimensionMismatch {
                expected: on.dim(),
                found: v.len(),
            });
        }
        let kernels = self.kernels(on)?;
        let mut out = vec![ZERO; v.len()];
        for kern in &kernels {
            for (k, &amp) in v.iter().enumerate() {
                out[k ^ kern.flip] += kern.amplitude(k) * amp;
            }
        }
        Ok(out)
    }

    pub fn kernels(&self, on: &QubitSet) -> Result<Vec<PauliKernel>> {
        self.terms.iter().map(|t| t.kernel(on)).collect()
    }

    /// Row-compressed form over `on`.
    pub fn compile(&self, on: &QubitSet) -> Result<SparseOperator> {
        SparseOperator::from_kernels(on.dim(), &self.kernels(on)?)
    }

    /// Dense matrix. Intended for small systems and tests.
    pub fn to_dense(&self, on: &QubitSet) -> Result<DMatrix<Complex64>> {
        let sparse = self.compile(on)?;
        let d = on.dim();
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for (c, v) in sparse.row(r) {
                m[(r, c)] += v;
            }
        }
        Ok(m)
    }
}

/// Compressed sparse row operator.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseOperator {
    pub fn from_kernels(dim: usize, kernels: &[PauliKernel]) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut row: Vec<(usize, Complex64)> = Vec::with_capacity(kernels.len());
        for r in 0..dim {
            row.clear();
            for k in kernels {
                // H[r, c] = a(c) with c = r ^ flip
                let c = r ^ k.flip;
                let v = k.amplitude(c);
                match row.iter_mut().find(|(cc, _)| *cc == c) {
                    Some(entry) => entry.1 += v,
                    None => row.push((c, v)),
                }
            }
            row.sort_by_key(|(c, _)| *c);
            for &(c, v) in &row {
                if v.norm() > 1e-15 {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseOperator {
            dim,
            row_ptr,
            cols,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn matvec(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).map(|(c, h)| h * v[c]).sum();
        }
    }

    /// `out += s * (self · m)`, `m` and `out` row-major `dim x dim`.
    pub fn left_mul_add(&self, m: &[Complex64], s: Complex64, out: &mut [Complex64]) {
        let d = self.dim;
        for r in 0..d {
            let orow = &mut out[r * d..(r + 1) * d];
            for (k, h) in self.row(r) {
                let hs = h * s;
                let mrow = &m[k * d..(k + 1) * d];
                for (o, &x) in orow.iter_mut().zip(mrow) {
                    *o += hs * x;
                }
            }
        }
    }

    /// `out += s * (m · self)`.
    pub fn right_mul_add(&self, m: &[Complex64], s: Complex64, out: &mut [Complex64]) {
        let d = self.dim;
        for r in 0..d {
            let mrow = &m[r * d..(r + 1) * d];
            let orow = &mut out[r * d..(r + 1) * d];
            for k in 0..d {
                let x = mrow[k] * s;
                if x == ZERO {
                    continue;
                }
                for (c, h) in self.row(k) {
                    orow[c] += x * h;
                }
            }
        }
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    qubits: QubitSet,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on a zero vector or wrong length.
    pub fn new(qubits: QubitSet, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != qubits.dim() {
            return Err(Error::DimensionMismatch {
                expected: qubits.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::config("state vector has zero norm"));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(PureState { qubits, amplitudes })
    }

    pub fn qubits(&self) -> &QubitSet {
        &self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::config(
                "inner product of states on different qubit sets",
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product of states on disjoint qubit sets.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut labels = self.qubits.labels().to_vec();
        labels.extend_from_slice(other.qubits.labels());
        let qubits = QubitSet::new(labels)?;
        let pos_a: Vec<usize> = self
            .qubits
            .labels()
            .iter()
            .map(|&l| qubits.position(l).unwrap())
            .collect();
        let pos_b: Vec<usize> = other
            .qubits
            .labels()
            .iter()
            .map(|&l| qubits.position(l).unwrap())
            .collect();
        let mut amps = vec![ZERO; qubits.dim()];
        for (ia, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let base = scatter_bits(ia, &pos_a);
            for (ib, &b) in other.amplitudes.iter().enumerate() {
                amps[base | scatter_bits(ib, &pos_b)] = a * b;
            }
        }
        Ok(PureState {
            qubits,
            amplitudes: amps,
        })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Computational basis state; `bits[k]` is the value of the `k`-th qubit of `qubits`.
pub fn basis_state(qubits: &QubitSet, bits: &[u8]) -> Result<PureState> {
    if bits.len() != qubits.len() {
        return Err(Error::DimensionMismatch {
            expected: qubits.len(),
            found: bits.len(),
        });
    }
    let mut index = 0usize;
    for (k, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 => index |= 1 << k,
            other => return Err(Error::config(format!("bit value {other} is not 0 or 1"))),
        }
    }
    let mut amps = vec![ZERO; qubits.dim()];
    amps[index] = ONE;
    Ok(PureState {
        qubits: qubits.clone(),
        amplitudes: amps,
    })
}

/// `(|0>_a |1>_b - |1>_a |0>_b) / sqrt 2` on `{a, b}`.
pub fn singlet(a: SiteLabel, b: SiteLabel) -> Result<PureState> {
    let qubits = QubitSet::new(vec![a, b])?;
    let bit_a = 1usize << qubits.require(a)?;
    let bit_b = 1usize << qubits.require(b)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![ZERO; 4];
    amps[bit_b] = Complex64::new(s, 0.0);
    amps[bit_a] = Complex64::new(-s, 0.0);
    Ok(PureState {
        qubits,
        amplitudes: amps,
    })
}

/// `(|0> + |1>) / sqrt 2` on a single site.
pub fn plus_state(site: SiteLabel) -> PureState {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState {
        qubits: QubitSet { labels: vec![site] },
        amplitudes: vec![s, s],
    }
}

/// Single-qubit pure state `alpha|0> + beta|1>` (normalized on construction).
pub fn qubit_state(site: SiteLabel, alpha: Complex64, beta: Complex64) -> Result<PureState> {
    PureState::new(QubitSet { labels: vec![site] }, vec![alpha, beta])
}

#[inline]
fn scatter_bits(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((index >> k) & 1) << p))
}

/// Dense `d x d` density matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    qubits: QubitSet,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &PureState) -> Self {
        let d = psi.dim();
        let mut data = vec![ZERO; d * d];
        for (r, a) in psi.amplitudes.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (c, b) in psi.amplitudes.iter().enumerate() {
                data[r * d + c] = a * b.conj();
            }
        }
        DensityMatrix {
            qubits: psi.qubits.clone(),
            data,
        }
    }

    /// Wraps raw row-major data without checking the state invariants; see
    /// [`DensityMatrix::validate`].
    pub fn from_data(qubits: QubitSet, data: Vec<Complex64>) -> Result<Self> {
        let d = qubits.dim();
        if data.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: data.len(),
            });
        }
        Ok(DensityMatrix { qubits, data })
    }

    pub fn from_matrix(qubits: QubitSet, m: &DMatrix<Complex64>) -> Result<Self> {
        let d = qubits.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        let mut data = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                data.push(m[(r, c)]);
            }
        }
        Ok(DensityMatrix { qubits, data })
    }

    pub fn maximally_mixed(qubits: QubitSet) -> Self {
        let d = qubits.dim();
        let mut data = vec![ZERO; d * d];
        for k in 0..d {
            data[k * d + k] = Complex64::new(1.0 / d as f64, 0.0);
        }
        DensityMatrix { qubits, data }
    }

    pub fn qubits(&self) -> &QubitSet {
        &self.qubits
    }

    pub fn dim(&self) -> usize {
        self.qubits.dim()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|k| self.data[k * d + k]).sum()
    }

    /// `max |rho - rho^dagger|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.data)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks trace, Hermiticity and positivity at the given tolerances.
    pub fn validate(&self, trace_tol: f64, herm_tol: f64, pos_tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > trace_tol {
            return Err(Error::config(format!("trace {tr} differs from 1")));
        }
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(Error::config(format!("not Hermitian (error {herm:e})")));
        }
        let min = self.min_eigenvalue();
        if min < -pos_tol {
            return Err(Error::config(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `<psi| rho |psi>` for `psi` on the same qubit set.
    pub fn expectation_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.qubits != self.qubits {
            return Err(Error::config(
                "state and density matrix live on different qubit sets",
            ));
        }
        let d = self.dim();
        let a = &psi.amplitudes;
        let mut acc = ZERO;
        for r in 0..d {
            if a[r] == ZERO {
                continue;
            }
            let row = &self.data[r * d..(r + 1) * d];
            let inner: Complex64 = row.iter().zip(a).map(|(x, b)| x * b).sum();
            acc += a[r].conj() * inner;
        }
        Ok(acc.re)
    }

    /// `P rho P^dagger` for a Pauli string `P`.
    pub fn conjugate_by(&self, op: &PauliString) -> Result<DensityMatrix> {
        let kern = op.kernel(&self.qubits)?;
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            let ar = kern.amplitude(r);
            for c in 0..d {
                data[(r ^ kern.flip) * d + (c ^ kern.flip)] =
                    ar * self.data[r * d + c] * kern.amplitude(c).conj();
            }
        }
        Ok(DensityMatrix {
            qubits: self.qubits.clone(),
            data,
        })
    }

    /// Reduced state on `keep`.
    pub fn partial_trace(&self, keep: &[SiteLabel]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::config("partial trace needs a non-empty keep set"));
        }
        let kept = QubitSet::new(keep.to_vec())?;
        let keep_pos: Vec<usize> = kept
            .labels()
            .iter()
            .map(|&l| self.qubits.require(l))
            .collect::<Result<_>>()?;
        let traced_pos: Vec<usize> = (0..self.qubits.len())
            .filter(|p| !keep_pos.contains(p))
            .collect();
        let dk = kept.dim();
        let dt = 1usize << traced_pos.len();
        let d = self.dim();
        let traced_offsets: Vec<usize> = (0..dt).map(|t| scatter_bits(t, &traced_pos)).collect();
        let keep_offsets: Vec<usize> = (0..dk).map(|k| scatter_bits(k, &keep_pos)).collect();
        let mut data = vec![ZERO; dk * dk];
        for (i, &ri) in keep_offsets.iter().enumerate() {
            for (j, &cj) in keep_offsets.iter().enumerate() {
                data[i * dk + j] = traced_offsets
                    .iter()
                    .map(|&t| self.data[(ri | t) * d + (cj | t)])
                    .sum();
            }
        }
        Ok(DensityMatrix { qubits: kept, data })
    }

    /// Trace distance `||rho - sigma||_1 / 2`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.qubits != other.qubits {
            return Err(Error::config("trace distance between different qubit sets"));
        }
        let diff = self.to_matrix() - other.to_matrix();
        let h = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(0.5
            * h.symmetric_eigenvalues()
                .iter()
                .map(|x| x.abs())
                .sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Little-endian Kronecker embedding of a single-qubit matrix.
    fn dense_embed(n: usize, pos: usize, m: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
        let d = 1 << n;
        DMatrix::from_fn(d, d, |r, col| {
            let others = !(1usize << pos);
            if (r & others) != (col & others) {
                return ZERO;
            }
            m[(r >> pos) & 1][(col >> pos) & 1]
        })
    }

    #[test]
    fn z_and_x_on_zero() {
        let q = QubitSet::new(vec![SiteLabel::RegisterNear]).unwrap();
        let zero = basis_state(&q, &[0]).unwrap();
        let z = PauliString::single(SiteLabel::RegisterNear, Pauli::Z, ONE);
        let x = PauliString::single(SiteLabel::RegisterNear, Pauli::X, ONE);
        assert_eq!(
            apply_pauli_string(&z, zero.amplitudes(), &q).unwrap(),
            vec![ONE, ZERO]
        );
        assert_eq!(
            apply_pauli_string(&x, zero.amplitudes(), &q).unwrap(),
            vec![ZERO, ONE]
        );
    }

    #[test]
    fn exchange_moves_excitation_between_sites() {
        let (s1, s2) = (SiteLabel::Chain(1), SiteLabel::Chain(2));
        let q = QubitSet::new(vec![s1, s2]).unwrap();
        let mut op = OperatorSum::new(q.clone());
        op.add_ladder_product(s1, Ladder::Plus, s2, Ladder::Minus, 1.0)
            .unwrap();
        assert_eq!(op.terms().len(), 4);
        op.add_ladder_product(s1, Ladder::Minus, s2, Ladder::Plus, 1.0)
            .unwrap();
        let collected = op.simplify();
        assert_eq!(collected.terms().len(), 2);

        // |0>_1 |1>_2 is index 2 (site 2 owns bit 1)
        let psi = basis_state(&q, &[0, 1]).unwrap();
        let out = op.apply(psi.amplitudes(), &q).unwrap();
        let expected = basis_state(&q, &[1, 0]).unwrap();
        for (a, b) in out.iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }

        // dense oracle: sigma+ = |0><1|, sigma- = |1><0|
        let sp = [[ZERO, ONE], [ZERO, ZERO]];
        let sm = [[ZERO, ZERO], [ONE, ZERO]];
        let oracle = dense_embed(2, 0, sp) * dense_embed(2, 1, sm)
            + dense_embed(2, 0, sm) * dense_embed(2, 1, sp);
        let dense = op.to_dense(&q).unwrap();
        assert!((dense - oracle).norm() < 1e-14);
    }

    #[test]
    fn hermiticity_check_detects_missing_adjoint() {
        let (s1, s2) = (SiteLabel::Chain(1), SiteLabel::Chain(2));
        let q = QubitSet::new(vec![s1, s2]).unwrap();
        let mut op = OperatorSum::new(q.clone());
        op.add_ladder_product(s1, Ladder::Plus, s2, Ladder::Minus, 1.0)
            .unwrap();
        assert!(!op.is_hermitian(1e-12));
        op.add_ladder_product(s1, Ladder::Minus, s2, Ladder::Plus, 1.0)
            .unwrap();
        assert!(op.is_hermitian(1e-12));
    }

    #[test]
    fn unknown_site_is_rejected() {
        let q = QubitSet::new(vec![SiteLabel::RegisterNear]).unwrap();
        let x = PauliString::single(SiteLabel::Chain(1), Pauli::X, ONE);
        assert!(matches!(
            apply_pauli_string(&x, &[ONE, ZERO], &q),
            Err(Error::UnknownSite(SiteLabel::Chain(1)))
        ));
        let mut op = OperatorSum::new(q);
        assert!(op.add_pauli(SiteLabel::Chain(3), Pauli::Z, 1.0).is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(QubitSet::new(vec![SiteLabel::Chain(1), SiteLabel::Chain(1)]).is_err());
    }

    #[test]
    fn bus_set_is_canonical_and_contiguous() {
        let q = QubitSet::bus(3, true);
        assert_eq!(q.len(), 6);
        assert_eq!(q.position(SiteLabel::Ancilla), Some(0));
        assert_eq!(q.position(SiteLabel::RegisterFar), Some(5));
        assert_eq!(q.chain_length(), Some(3));
        let shuffled = QubitSet::new(vec![
            SiteLabel::RegisterFar,
            SiteLabel::Chain(1),
            SiteLabel::RegisterNear,
        ])
        .unwrap();
        assert_eq!(shuffled.labels()[0], SiteLabel::RegisterNear);
    }

    #[test]
    fn singlet_amplitudes() {
        let psi = singlet(SiteLabel::Ancilla, SiteLabel::RegisterNear).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // ancilla owns bit 0, register bit 1: index = a + 2*r
        let a01 = psi.amplitudes()[2]; // |0>_a |1>_0
        let a10 = psi.amplitudes()[1]; // |1>_a |0>_0
        assert!((a01 - c(s)).norm() < 1e-15);
        assert!((a10 - c(-s)).norm() < 1e-15);
        assert_eq!(psi.amplitudes()[0], ZERO);
        assert_eq!(psi.amplitudes()[3], ZERO);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_and_basis_states() {
        let p = plus_state(SiteLabel::RegisterNear);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(p.amplitudes(), &[c(s), c(s)]);
        let q = QubitSet::bus(1, false);
        let b = basis_state(&q, &[0, 0, 0]).unwrap();
        assert_eq!(b.amplitudes()[0], ONE);
        assert!(b.amplitudes()[1..].iter().all(|a| *a == ZERO));
        assert!(basis_state(&q, &[0, 2, 0]).is_err());
    }

    #[test]
    fn tensor_places_bits_by_label() {
        let s = singlet(SiteLabel::Ancilla, SiteLabel::RegisterNear).unwrap();
        let rest = basis_state(
            &QubitSet::new(vec![SiteLabel::Chain(1), SiteLabel::RegisterFar]).unwrap(),
            &[1, 0],
        )
        .unwrap();
        let full = s.tensor(&rest).unwrap();
        assert_eq!(full.qubits(), &QubitSet::bus(1, true));
        // chain 1 is at position 2 -> bit 4 always set
        for (k, a) in full.amplitudes().iter().enumerate() {
            if *a != ZERO {
                assert_eq!(k & 4, 4);
                assert_eq!(k & 8, 0);
            }
        }
    }

    #[test]
    fn partial_trace_of_singlet_is_maximally_mixed() {
        let rho = singlet(SiteLabel::Ancilla, SiteLabel::RegisterNear)
            .unwrap()
            .to_density();
        let red = rho.partial_trace(&[SiteLabel::Ancilla]).unwrap();
        assert!((red.get(0, 0) - c(0.5)).norm() < 1e-15);
        assert!((red.get(1, 1) - c(0.5)).norm() < 1e-15);
        assert!(red.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let q = QubitSet::new(vec![SiteLabel::RegisterNear, SiteLabel::RegisterFar]).unwrap();
        let rho = basis_state(&q, &[0, 1]).unwrap().to_density();
        let red = rho.partial_trace(&[SiteLabel::RegisterNear]).unwrap();
        assert!((red.get(0, 0) - ONE).norm() < 1e-15);
        assert!(red.get(1, 1).norm() < 1e-15);
        assert!(rho.partial_trace(&[]).is_err());
    }

    #[test]
    fn conjugate_by_z_flips_coherence_sign() {
        let p = plus_state(SiteLabel::RegisterFar).to_density();
        let z = PauliString::single(SiteLabel::RegisterFar, Pauli::Z, ONE);
        let out = p.conjugate_by(&z).unwrap();
        assert!((out.get(0, 1) + p.get(0, 1)).norm() < 1e-15);
        assert!((out.get(0, 0) - p.get(0, 0)).norm() < 1e-15);
    }

    #[test]
    fn validate_rejects_bad_trace() {
        let q = QubitSet::new(vec![SiteLabel::RegisterFar]).unwrap();
        let rho = DensityMatrix::from_data(q, vec![c(0.7), ZERO, ZERO, c(0.7)]).unwrap();
        assert!(rho.validate(1e-9, 1e-9, 1e-7).is_err());
    }
}
