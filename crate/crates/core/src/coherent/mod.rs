//! Gazeau-Klauder coherent states over the two monotone dressed-energy
//! branches.
//!
//! For a strictly increasing energy sequence `E_k` the shifted dimensionless
//! energies are `eps_k = (E_k - E_0) / omega_f`, the weights are
//! `c_k = eps_1 ... eps_k`, and
//!
//! ```text
//! |x, y> = N(x)^-1 sum_k x^{k/2} exp(-i E_k y) / sqrt(c_k) |k>,
//! N(x)^2 = sum_k x^k / c_k.
//! ```
//!
//! Resolution of the identity needs a measure on `x >= 0` with power moments
//! `c_k`; [`quadrature::moment_quadrature`] builds the Gauss rule matched to
//! the first `2Q` of them.

pub mod quadrature;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Branch, Model};
use crate::operator::{outer, CMat, CVec};

pub use quadrature::{moment_quadrature, QuadratureRule};

/// Default working precision (bits) for weights and moment recurrences.
pub const DEFAULT_PRECISION_BITS: u32 = 256;
/// Environment variable overriding [`DEFAULT_PRECISION_BITS`].
pub const PRECISION_ENV: &str = "QJC_PRECISION_BITS";
/// Tail criterion for truncated coherent series.
pub const TAIL_LIMIT: f64 = 1e-14;
/// Default number of coherent-series terms.
pub const DEFAULT_SERIES_DEPTH: usize = 60;

/// Extended-precision width in bits, at least 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidParams(format!(
                "extended precision must be >= 64 bits, got {bits}"
            )));
        }
        Ok(Self(bits))
    }

    /// Reads [`PRECISION_ENV`], falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(PRECISION_ENV) {
            Ok(v) => {
                let bits = v
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidParams(format!("{PRECISION_ENV} = {v:?} is not an integer")))?;
                Self::new(bits)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn bits(&self) -> u32 {
        self.0
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self(DEFAULT_PRECISION_BITS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyBranch {
    /// `J_k = E_{k+1,+}`, levels `|k+1,+>`.
    J,
    /// `S_{k+K0} = E_{k+K0,-}`, levels `|k+K0,->`.
    S,
}

/// `eps_k = (seq_k - seq_0) / scale`, rejecting non-increasing input.
pub fn shifted_sequence(seq: &[f64], scale: f64) -> Result<Vec<f64>> {
    if seq.is_empty() {
        return Err(Error::Empty("energy sequence"));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidParams(format!("scale must be > 0, got {scale}")));
    }
    for (i, w) in seq.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NotMonotone {
                index: i + 1,
                prev: w[0],
                next: w[1],
            });
        }
    }
    Ok(seq.iter().map(|e| (e - seq[0]) / scale).collect())
}

/// `c_0 = 1`, `c_k = eps_1 ... eps_k` for `k <= depth`, multiplied at
/// `precision` bits.
pub fn weights_c(eps: &[f64], depth: usize, precision: Precision) -> Result<Vec<Float>> {
    if eps.len() <= depth {
        return Err(Error::InsufficientTruncation(format!(
            "{} shifted energies cannot give {} weights",
            eps.len(),
            depth + 1
        )));
    }
    let ext: Vec<Float> = eps.iter().map(|&e| Float::with_val(precision.bits(), e)).collect();
    weights_from_ext(&ext, depth, precision)
}

fn weights_from_ext(eps: &[Float], depth: usize, precision: Precision) -> Result<Vec<Float>> {
    let mut c = Vec::with_capacity(depth + 1);
    let mut acc = Float::with_val(precision.bits(), 1);
    c.push(acc.clone());
    for (i, e) in eps.iter().enumerate().take(depth + 1).skip(1) {
        if !e.is_sign_positive() || e.is_zero() {
            return Err(Error::NonPositiveEnergy {
                index: i,
                value: e.to_f64(),
            });
        }
        acc *= e;
        c.push(acc.clone());
    }
    Ok(c)
}

/// `x^k / c_k` for `k < count`, through the ratio recursion
/// `t_k = t_{k-1} x / eps_k` (no overflow for large `k`).
fn series_terms(eps: &[f64], x: f64, count: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(count);
    let mut acc = 1.0;
    if count > 0 {
        t.push(acc);
    }
    for e in eps.iter().take(count).skip(1) {
        acc *= x / e;
        t.push(acc);
    }
    t
}

fn eps_of(c: &[Float]) -> Vec<f64> {
    let mut eps = vec![0.0];
    for w in c.windows(2) {
        eps.push(Float::with_val(w[1].prec(), &w[1] / &w[0]).to_f64());
    }
    eps
}

/// `N(x) = (sum_{k <= depth} x^k / c_k)^{1/2}`.
///
/// Fails unless the first omitted term `x^{depth+1} / c_{depth+1}` is below
/// [`TAIL_LIMIT`] times the partial sum; `c` must therefore hold
/// `depth + 2` weights.
pub fn normalization(x: f64, c: &[Float], depth: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParams(format!("x must be >= 0, got {x}")));
    }
    if c.len() < depth + 2 {
        return Err(Error::InsufficientTruncation(format!(
            "normalization at depth {depth} needs {} weights, got {}",
            depth + 2,
            c.len()
        )));
    }
    let eps = eps_of(c);
    let t = series_terms(&eps, x, depth + 2);
    let partial: f64 = t[..=depth].iter().sum();
    let ratio = t[depth + 1] / partial;
    if ratio >= TAIL_LIMIT {
        return Err(Error::TailTooLarge {
            x,
            ratio,
            limit: TAIL_LIMIT,
        });
    }
    Ok(partial.sqrt())
}

/// One Gazeau-Klauder branch of a model.
#[derive(Debug, Clone)]
pub struct CoherentFamily {
    branch: FamilyBranch,
    /// Raw energies `E_k` for `k = 0..=depth + 1` (closed form, so they
    /// extend past the Hilbert-space truncation).
    energies: Vec<f64>,
    eps: Vec<f64>,
    c: Vec<Float>,
    depth: usize,
    /// Dressed vectors available inside the truncation, `levels[k] = |k>`.
    levels: Vec<CVec>,
    dim: usize,
    k0: usize,
    precision: Precision,
}

impl CoherentFamily {
    /// Builds the branch from the closed-form energies. Energies, shifts and
    /// products are evaluated at `precision` bits; `eps` and energies are
    /// kept rounded to `f64` for amplitudes and phases.
    pub fn new(model: &Model, branch: FamilyBranch, depth: usize, precision: Precision) -> Result<Self> {
        let p = &model.params;
        let bits = precision.bits();
        let k0 = model.k0();
        let dressed_level = |k: usize| match branch {
            FamilyBranch::J => (k + 1, Branch::Plus),
            FamilyBranch::S => (k + k0, Branch::Minus),
        };
        let delta = Float::with_val(bits, p.omega_f) - Float::with_val(bits, p.omega_s);
        let delta2 = Float::with_val(bits, &delta * &delta);
        let kappa2 = Float::with_val(bits, p.kappa) * Float::with_val(bits, p.kappa);
        let omega_f = Float::with_val(bits, p.omega_f);
        let energy_ext = |k: usize| {
            let (n, b) = dressed_level(k);
            let nf = Float::with_val(bits, n);
            let root = Float::with_val(bits, &kappa2 * &nf + &delta2).sqrt();
            let half = Float::with_val(bits, 0.5);
            let base = Float::with_val(bits, &nf - &half) * &omega_f;
            let shift = Float::with_val(bits, root * &half);
            if b == Branch::Plus {
                base + shift
            } else {
                base - shift
            }
        };
        let ext: Vec<Float> = (0..=depth + 1).map(energy_ext).collect();
        for (i, w) in ext.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NotMonotone {
                    index: i + 1,
                    prev: w[0].to_f64(),
                    next: w[1].to_f64(),
                });
            }
        }
        let eps_ext: Vec<Float> = ext
            .iter()
            .map(|e| Float::with_val(bits, e - &ext[0]) / &omega_f)
            .collect();
        let c = weights_from_ext(&eps_ext, depth + 1, precision)?;
        let levels: Vec<CVec> = match branch {
            FamilyBranch::J => model.basis.plus.iter().map(|v| v.amplitudes.clone()).collect(),
            FamilyBranch::S => model.basis.minus[k0 - 1..]
                .iter()
                .map(|v| v.amplitudes.clone())
                .collect(),
        };
        Ok(Self {
            branch,
            energies: ext.iter().map(Float::to_f64).collect(),
            eps: eps_ext.iter().map(Float::to_f64).collect(),
            c,
            depth,
            levels,
            dim: model.working_dim(),
            k0,
            precision,
        })
    }

    pub fn branch(&self) -> FamilyBranch {
        self.branch
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// `K0` of the model the family was built from.
    pub fn k0(&self) -> usize {
        self.k0
    }

    /// Shifted energies `eps_0..=eps_{depth+1}`.
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// Weights `c_0..=c_{depth+1}`.
    pub fn weights(&self) -> &[Float] {
        &self.c
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.c.iter().map(Float::to_f64).collect()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Number of dressed levels of this branch inside the truncation.
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> Option<&CVec> {
        self.levels.get(k)
    }

    pub fn working_dim(&self) -> usize {
        self.dim
    }

    /// Smallest spacing of the energies carried by the truncated levels.
    pub fn min_gap(&self) -> f64 {
        self.energies[..self.levels.len().max(2)]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `x^k / c_k` for every truncated level.
    pub fn level_terms(&self, x: f64) -> Vec<f64> {
        series_terms(&self.eps, x, self.levels.len())
    }

    pub fn normalization(&self, x: f64, depth: usize) -> Result<f64> {
        if depth > self.depth {
            return Err(Error::InsufficientTruncation(format!(
                "requested depth {depth} exceeds family depth {}",
                self.depth
            )));
        }
        normalization(x, &self.c, depth)
    }

    /// Unnormalized `sum_{k < L} x^{k/2} exp(-i E_k y) / sqrt(c_k) |k>` over
    /// the truncated levels; its squared norm is the truncated `N(x)^2`.
    pub fn scaled_vector(&self, x: f64, y: f64) -> CVec {
        let terms = self.level_terms(x);
        let mut v = CVec::zeros(self.dim);
        for (k, (t, level)) in terms.iter().zip(&self.levels).enumerate() {
            if *t == 0.0 {
                continue;
            }
            let phase = num_complex::Complex64::from_polar(t.sqrt(), -self.energies[k] * y);
            v += level * phase;
        }
        v
    }

    /// Fraction of `N(x)^2` (series to `depth`) that falls outside the
    /// truncated levels.
    pub fn truncation_loss(&self, x: f64) -> f64 {
        let t = series_terms(&self.eps, x, self.depth + 1);
        let total: f64 = t.iter().sum();
        let kept: f64 = t[..self.levels.len().min(t.len())].iter().sum();
        ((total - kept) / total).max(0.0)
    }
}

/// Unit coherent vector `|x, y>` of a branch, series cut after `depth`
/// terms.
pub fn coherent_vector(family: &CoherentFamily, x: f64, y: f64, depth: usize) -> Result<CVec> {
    if !(x >= 0.0) {
        return Err(Error::InvalidParams(format!("x must be >= 0, got {x}")));
    }
    if depth + 1 > family.level_count() {
        return Err(Error::InsufficientTruncation(format!(
            "depth {depth} needs {} levels, truncation holds {}",
            depth + 1,
            family.level_count()
        )));
    }
    let n = family.normalization(x, depth)?;
    let terms = series_terms(&family.eps, x, depth + 1);
    let mut v = CVec::zeros(family.dim);
    for (k, t) in terms.iter().enumerate() {
        if *t == 0.0 {
            continue;
        }
        let amp = num_complex::Complex64::from_polar(t.sqrt() / n, -family.energies[k] * y);
        v += &family.levels[k] * amp;
    }
    Ok(v)
}

/// One term `exp(i freq y) |left><right|` of an almost-periodic operator
/// function of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTerm {
    pub freq: f64,
    pub left: CVec,
    pub right: CVec,
}

/// Finite trigonometric sum of rank-one operators,
/// `f(y) = sum_t exp(i freq_t y) |left_t><right_t|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOperator {
    dim: usize,
    terms: Vec<PhaseTerm>,
}

impl PhaseOperator {
    pub fn new(dim: usize, terms: Vec<PhaseTerm>) -> Result<Self> {
        for t in &terms {
            if t.left.len() != dim || t.right.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.left.len().max(t.right.len()),
                });
            }
        }
        Ok(Self { dim, terms })
    }

    /// A `y`-independent operator.
    pub fn constant(a: &CMat) -> Self {
        let dim = a.nrows();
        let terms = (0..a.ncols())
            .map(|j| {
                let mut e = CVec::zeros(dim);
                e[j] = crate::operator::ONE;
                PhaseTerm {
                    freq: 0.0,
                    left: a.column(j).into_owned(),
                    right: e,
                }
            })
            .collect();
        Self { dim, terms }
    }

    /// `|x, y><x, y|` of a family over its truncated levels, normalized by
    /// the truncated series so the trace is one.
    pub fn coherent_projector(family: &CoherentFamily, x: f64) -> Self {
        let terms = family.level_terms(x);
        let norm2: f64 = terms.iter().sum();
        let amps: Vec<f64> = terms.iter().map(|t| (t / norm2).sqrt()).collect();
        let mut out = Vec::with_capacity(amps.len() * amps.len());
        for (k, ak) in amps.iter().enumerate() {
            for (l, al) in amps.iter().enumerate() {
                if *ak == 0.0 || *al == 0.0 {
                    continue;
                }
                out.push(PhaseTerm {
                    freq: family.energies[l] - family.energies[k],
                    left: &family.levels[k] * num_complex::Complex64::new(ak * al, 0.0),
                    right: family.levels[l].clone(),
                });
            }
        }
        Self {
            dim: family.dim,
            terms: out,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[PhaseTerm] {
        &self.terms
    }

    pub fn at(&self, y: f64) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for t in &self.terms {
            m += outer(&t.left, &t.right) * num_complex::Complex64::from_polar(1.0, t.freq * y);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YMode {
    #[serde(alias = "exact")]
    ExactMean,
    #[serde(alias = "grid")]
    FiniteGrid,
}

/// Discretization of the angle variable `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum YGrid {
    /// Bohr mean: every nonzero frequency averages to zero.
    ExactMean,
    /// Midpoint grid `y_m = (m + 1/2) span / M` with weights `1/M`.
    FiniteGrid { points: Vec<f64>, span: f64 },
}

impl YGrid {
    pub fn finite(count: usize, span: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::YGridTooSmall(count));
        }
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::InvalidParams(format!("y span must be > 0, got {span}")));
        }
        let h = span / count as f64;
        Ok(Self::FiniteGrid {
            points: (0..count).map(|m| (m as f64 + 0.5) * h).collect(),
            span,
        })
    }

    /// Grid spanning `50 / min_gap` of a family.
    pub fn for_family(family: &CoherentFamily, count: usize) -> Result<Self> {
        Self::finite(count, 50.0 / family.min_gap())
    }

    pub fn mode(&self) -> YMode {
        match self {
            YGrid::ExactMean => YMode::ExactMean,
            YGrid::FiniteGrid { .. } => YMode::FiniteGrid,
        }
    }

    /// `(y, weight)` pairs; the exact mean is represented by the single
    /// point `y = 0` with weight one together with phase removal.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match self {
            YGrid::ExactMean => vec![(0.0, 1.0)],
            YGrid::FiniteGrid { points, .. } => {
                let w = 1.0 / points.len() as f64;
                points.iter().map(|&y| (y, w)).collect()
            }
        }
    }

    /// `|mean_m exp(i freq y_m)|`: the weight a nonzero frequency leaks
    /// through the average (zero in exact mode).
    pub fn leakage(&self, freq: f64) -> f64 {
        match self {
            YGrid::ExactMean => {
                if freq == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            YGrid::FiniteGrid { points, .. } => {
                let n = points.len() as f64;
                let (s, c) = points
                    .iter()
                    .fold((0.0, 0.0), |(s, c), &y| (s + (freq * y).sin(), c + (freq * y).cos()));
                s.hypot(c) / n
            }
        }
    }
}

/// Average of `f(y)` over the angle measure.
pub fn y_average(grid: &YGrid, f: &PhaseOperator) -> CMat {
    let mut m = CMat::zeros(f.dim, f.dim);
    match grid {
        YGrid::ExactMean => {
            for t in f.terms.iter().filter(|t| t.freq == 0.0) {
                m += outer(&t.left, &t.right);
            }
        }
        YGrid::FiniteGrid { points, .. } => {
            let n = points.len() as f64;
            for t in &f.terms {
                let mean = points
                    .iter()
                    .map(|&y| num_complex::Complex64::from_polar(1.0, t.freq * y))
                    .sum::<num_complex::Complex64>()
                    / n;
                m += outer(&t.left, &t.right) * mean;
            }
        }
    }
    m
}
