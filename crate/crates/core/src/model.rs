//! Truncated qubit-oscillator model in the rotating wave approximation.
//!
//! The bare basis is `|n, s>` with `n in 0..=n_max` and `s in {g, e}`,
//! flattened as `index = 2 n + s` (`g = 0`, `e = 1`). The last bare index
//! `|n_max, e>` belongs to the cut `(n_max + 1)` excitation block; every
//! other index spans the *working space* of dimension `2 n_max + 1`, which is
//! exactly the span of the dressed states `|0,g>` and `|n,+->`,
//! `1 <= n <= n_max`. Dressed vectors and all POVM operators live in the
//! working space, written in the bare coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{outer, CMat, CVec, Projector, ONE};

/// Upper bound for the M0 threshold scan.
pub const DEFAULT_M0_SCAN_BOUND: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_f: f64,
    pub omega_s: f64,
    pub kappa: f64,
    pub n_max: usize,
}

impl ModelParams {
    pub fn new(omega_f: f64, omega_s: f64, kappa: f64, n_max: usize) -> Result<Self> {
        let p = Self {
            omega_f,
            omega_s,
            kappa,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_f.is_finite() && self.omega_f > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega_f must be > 0, got {}",
                self.omega_f
            )));
        }
        if !(self.omega_s.is_finite() && self.omega_s > 0.0) {
            return Err(Error::InvalidParams(format!(
                "omega_s must be > 0, got {}",
                self.omega_s
            )));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::InvalidParams(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if self.n_max < 4 {
            return Err(Error::InvalidParams(format!("n_max must be >= 4, got {}", self.n_max)));
        }
        Ok(())
    }

    /// Detuning `omega_f - omega_s`.
    pub fn delta(&self) -> f64 {
        self.omega_f - self.omega_s
    }

    /// Dimension of the full bare basis, `2 (n_max + 1)`.
    pub fn bare_dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    /// Dimension of the dressed-complete working space, `2 n_max + 1`.
    pub fn working_dim(&self) -> usize {
        2 * self.n_max + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    G,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BareIndex {
    pub fock: usize,
    pub qubit: Qubit,
}

impl BareIndex {
    pub fn new(fock: usize, qubit: Qubit) -> Self {
        Self { fock, qubit }
    }

    pub fn flat(&self) -> usize {
        2 * self.fock
            + match self.qubit {
                Qubit::G => 0,
                Qubit::E => 1,
            }
    }

    pub fn from_flat(i: usize) -> Self {
        Self {
            fock: i / 2,
            qubit: if i.is_multiple_of(2) { Qubit::G } else { Qubit::E },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Ground,
    Plus,
    Minus,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Ground => "ground",
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

/// Placement of `cos(theta/2)` and `sin(theta/2)` in `|n,+->`.
///
/// `AsPrinted`: `|n,+> = cos |n-1,e> + sin |n,g>`,
/// `|n,-> = sin |n-1,e> - cos |n,g>`. `Swapped` exchanges the two
/// trigonometric factors (equivalently `theta -> pi - theta`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingConvention {
    AsPrinted,
    Swapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressedVector {
    pub n: usize,
    pub branch: Branch,
    /// Amplitudes over the working-space bare coordinates.
    pub amplitudes: CVec,
    /// `None` for the ground state.
    pub convention: Option<MixingConvention>,
}

impl DressedVector {
    /// Embeds the amplitudes into the full bare basis (dangling entry zero).
    pub fn embed_bare(&self) -> CVec {
        let mut v = CVec::zeros(self.amplitudes.len() + 1);
        v.rows_mut(0, self.amplitudes.len()).copy_from(&self.amplitudes);
        v
    }
}

/// Mixing angle `theta_n = atan2(kappa sqrt(n), delta)` in `(0, pi)` for
/// `kappa > 0`; `0` or `pi` at zero coupling.
pub fn mixing_angle(n: usize, params: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidLevel {
            n,
            branch: "mixing angle",
        });
    }
    let delta = params.delta();
    if params.kappa == 0.0 && delta == 0.0 {
        return Err(Error::DegenerateBlock { n });
    }
    Ok((params.kappa * (n as f64).sqrt()).atan2(delta))
}

/// Closed-form dressed energies:
/// `E_{0,g} = (omega_f + delta) / 2`,
/// `E_{n,+-} = omega_f (n - 1/2) +- sqrt(delta^2 + kappa^2 n) / 2`.
///
/// Valid for every `n`, not only inside the truncation.
pub fn eigenenergy(n: usize, branch: Branch, params: &ModelParams) -> Result<f64> {
    let delta = params.delta();
    match (branch, n) {
        (Branch::Ground, 0) => Ok((params.omega_f + delta) / 2.0),
        (Branch::Ground, _) | (Branch::Plus, 0) | (Branch::Minus, 0) => Err(Error::InvalidLevel {
            n,
            branch: branch.name(),
        }),
        (b, n) => {
            let nf = n as f64;
            let root = (delta * delta + params.kappa * params.kappa * nf).sqrt();
            let sign = if b == Branch::Plus { 1.0 } else { -1.0 };
            Ok(params.omega_f * (nf - 0.5) + sign * 0.5 * root)
        }
    }
}

/// The 2x2 block of the Hamiltonian on `(|n-1,e>, |n,g>)`.
fn block(n: usize, params: &ModelParams) -> [[f64; 2]; 2] {
    let nf = n as f64;
    let off = 0.5 * params.kappa * nf.sqrt();
    [
        [params.omega_f * (nf - 1.0) + 0.5 * params.omega_s, off],
        [off, params.omega_f * nf - 0.5 * params.omega_s],
    ]
}

fn block_residual(b: &[[f64; 2]; 2], v: (f64, f64), lambda: f64) -> f64 {
    let r0 = b[0][0] * v.0 + b[0][1] * v.1 - lambda * v.0;
    let r1 = b[1][0] * v.0 + b[1][1] * v.1 - lambda * v.1;
    r0.hypot(r1)
}

/// Dressed state as a unit vector on the working space.
///
/// The convention (see [`MixingConvention`]) is fixed per block by
/// requiring the vector to be an eigenvector of the block for the labelled
/// energy.
pub fn dressed_state(n: usize, branch: Branch, params: &ModelParams) -> Result<DressedVector> {
    params.validate()?;
    if n > params.n_max {
        return Err(Error::OutOfTruncation { n, n_max: params.n_max });
    }
    let dim = params.working_dim();
    let mut amplitudes = CVec::zeros(dim);
    if branch == Branch::Ground {
        if n != 0 {
            return Err(Error::InvalidLevel {
                n,
                branch: branch.name(),
            });
        }
        amplitudes[BareIndex::new(0, Qubit::G).flat()] = ONE;
        return Ok(DressedVector {
            n,
            branch,
            amplitudes,
            convention: None,
        });
    }
    if n == 0 {
        return Err(Error::InvalidLevel {
            n,
            branch: branch.name(),
        });
    }
    let theta = mixing_angle(n, params)?;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    // Components on (|n-1,e>, |n,g>).
    let printed = match branch {
        Branch::Plus => (c, s),
        _ => (s, -c),
    };
    let swapped = match branch {
        Branch::Plus => (s, c),
        _ => (c, -s),
    };
    let b = block(n, params);
    let energy = eigenenergy(n, branch, params)?;
    let (v, convention) = if block_residual(&b, printed, energy) <= block_residual(&b, swapped, energy) {
        (printed, MixingConvention::AsPrinted)
    } else {
        (swapped, MixingConvention::Swapped)
    };
    amplitudes[BareIndex::new(n - 1, Qubit::E).flat()] = Complex64::new(v.0, 0.0);
    amplitudes[BareIndex::new(n, Qubit::G).flat()] = Complex64::new(v.1, 0.0);
    Ok(DressedVector {
        n,
        branch,
        amplitudes,
        convention: Some(convention),
    })
}

/// Hamiltonian
/// `omega_f a^+ a + (omega_s / 2) sigma_z + (kappa / 2)(sigma^- a^+ + sigma^+ a^-)`
/// on the full bare basis of dimension `2 (n_max + 1)`.
pub fn hamiltonian_matrix(params: &ModelParams) -> Result<CMat> {
    params.validate()?;
    let dim = params.bare_dim();
    let mut h = CMat::zeros(dim, dim);
    for n in 0..=params.n_max {
        let g = BareIndex::new(n, Qubit::G).flat();
        let e = BareIndex::new(n, Qubit::E).flat();
        h[(g, g)] = Complex64::new(params.omega_f * n as f64 - 0.5 * params.omega_s, 0.0);
        h[(e, e)] = Complex64::new(params.omega_f * n as f64 + 0.5 * params.omega_s, 0.0);
    }
    for n in 1..=params.n_max {
        let e = BareIndex::new(n - 1, Qubit::E).flat();
        let g = BareIndex::new(n, Qubit::G).flat();
        let coupling = Complex64::new(0.5 * params.kappa * (n as f64).sqrt(), 0.0);
        h[(e, g)] = coupling;
        h[(g, e)] = coupling;
    }
    Ok(h)
}

/// Left-hand side of the threshold inequality,
/// `(sqrt(delta^2 + kappa^2 (m+1)) + sqrt(delta^2 + kappa^2 m))^-1`.
pub fn threshold_lhs(m: usize, params: &ModelParams) -> f64 {
    let d2 = params.delta() * params.delta();
    let k2 = params.kappa * params.kappa;
    let mf = m as f64;
    1.0 / ((d2 + k2 * (mf + 1.0)).sqrt() + (d2 + k2 * mf).sqrt())
}

/// `true` when the threshold inequality `lhs(m) < 2 omega_f / kappa^2` holds.
pub fn threshold_holds(m: usize, params: &ModelParams) -> bool {
    if params.kappa == 0.0 {
        return true;
    }
    threshold_lhs(m, params) < 2.0 * params.omega_f / (params.kappa * params.kappa)
}

/// Least `M0 >= 1` satisfying the threshold inequality, and
/// `K0 = max(3, M0)`. The left side decreases in `M0`, so the scan
/// terminates; `bound` guards against pathological inputs.
pub fn compute_m0_k0_bounded(params: &ModelParams, bound: usize) -> Result<(usize, usize)> {
    params.validate()?;
    let mut m = 1;
    while !threshold_holds(m, params) {
        m += 1;
        if m > bound {
            return Err(Error::ThresholdScanExhausted { bound });
        }
    }
    Ok((m, m.max(3)))
}

pub fn compute_m0_k0(params: &ModelParams) -> Result<(usize, usize)> {
    compute_m0_k0_bounded(params, DEFAULT_M0_SCAN_BOUND)
}

fn check_increasing(seq: &[f64], index_offset: usize) -> Result<()> {
    for (i, w) in seq.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NotMonotone {
                index: index_offset + i + 1,
                prev: w[0],
                next: w[1],
            });
        }
    }
    Ok(())
}

/// The two monotone energy subsequences inside the truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySequences {
    /// `J_k = E_{k+1,+}` for `k = 0..n_max-1`.
    pub j: Vec<f64>,
    /// `S_n = E_{n,-}` for `n = K0..=n_max`; `s[i]` is `S_{K0 + i}`.
    pub s: Vec<f64>,
    pub k0: usize,
}

/// `J` and `S` restricted to the truncation, both verified strictly
/// increasing.
pub fn energy_sequences(params: &ModelParams, k0: usize) -> Result<EnergySequences> {
    params.validate()?;
    if k0 == 0 || k0 > params.n_max {
        return Err(Error::InsufficientTruncation(format!(
            "K0 = {k0} must lie in 1..={}",
            params.n_max
        )));
    }
    let j = (0..params.n_max)
        .map(|k| eigenenergy(k + 1, Branch::Plus, params))
        .collect::<Result<Vec<_>>>()?;
    check_increasing(&j, 0)?;
    let s = (k0..=params.n_max)
        .map(|n| eigenenergy(n, Branch::Minus, params))
        .collect::<Result<Vec<_>>>()?;
    check_increasing(&s, k0)?;
    Ok(EnergySequences { j, s, k0 })
}

/// Closed-form energies, threshold levels and sequences of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub e0g: f64,
    /// `e_plus[n-1] = E_{n,+}`.
    pub e_plus: Vec<f64>,
    /// `e_minus[n-1] = E_{n,-}`.
    pub e_minus: Vec<f64>,
    pub sequences: EnergySequences,
    pub m0: usize,
    pub k0: usize,
    /// `E_{0,g}` as tabulated minus `<0,g|H|0,g> = -omega_s / 2`.
    pub spectral_offset: f64,
}

impl SpectrumTable {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let (m0, k0) = compute_m0_k0(params)?;
        let e0g = eigenenergy(0, Branch::Ground, params)?;
        let e_plus = (1..=params.n_max)
            .map(|n| eigenenergy(n, Branch::Plus, params))
            .collect::<Result<Vec<_>>>()?;
        let e_minus = (1..=params.n_max)
            .map(|n| eigenenergy(n, Branch::Minus, params))
            .collect::<Result<Vec<_>>>()?;
        let sequences = energy_sequences(params, k0)?;
        Ok(Self {
            e0g,
            e_plus,
            e_minus,
            sequences,
            m0,
            k0,
            spectral_offset: e0g + 0.5 * params.omega_s,
        })
    }
}

/// All dressed vectors of the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedBasis {
    pub ground: DressedVector,
    /// `plus[n-1] = |n,+>`.
    pub plus: Vec<DressedVector>,
    /// `minus[n-1] = |n,->`.
    pub minus: Vec<DressedVector>,
}

impl DressedBasis {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let ground = dressed_state(0, Branch::Ground, params)?;
        let plus = (1..=params.n_max)
            .map(|n| dressed_state(n, Branch::Plus, params))
            .collect::<Result<Vec<_>>>()?;
        let minus = (1..=params.n_max)
            .map(|n| dressed_state(n, Branch::Minus, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ground, plus, minus })
    }

    pub fn get(&self, n: usize, branch: Branch) -> Option<&DressedVector> {
        match branch {
            Branch::Ground => (n == 0).then_some(&self.ground),
            Branch::Plus => n.checked_sub(1).and_then(|i| self.plus.get(i)),
            Branch::Minus => n.checked_sub(1).and_then(|i| self.minus.get(i)),
        }
    }

    /// Ground first, then `|n,+>, |n,->` for `n = 1..=n_max`.
    pub fn iter(&self) -> impl Iterator<Item = &DressedVector> {
        std::iter::once(&self.ground).chain(self.plus.iter().zip(&self.minus).flat_map(|(p, m)| [p, m]))
    }

    /// Conventions applied across the `+-` blocks, deduplicated in order
    /// of first appearance.
    pub fn conventions(&self) -> Vec<MixingConvention> {
        let mut out = Vec::new();
        for c in self.plus.iter().chain(&self.minus).filter_map(|v| v.convention) {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

/// `H = H_1 + H_2 + H_3` on the working space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSplit {
    pub p1: Projector,
    pub p2: Projector,
    pub p3: Projector,
    pub k0: usize,
}

impl SubspaceSplit {
    /// `(n_max, n_max - K0 + 1, K0)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.p1.rank(), self.p2.rank(), self.p3.rank())
    }
}

/// `P1` on `{|n,+>}`, `P2` on `{|n,->: n >= K0}`, `P3` on
/// `{|0,g>} + {|n,->: 1 <= n < K0}`.
pub fn subspace_split(params: &ModelParams, k0: usize) -> Result<SubspaceSplit> {
    let basis = DressedBasis::new(params)?;
    subspace_split_from(params, &basis, k0)
}

pub fn subspace_split_from(params: &ModelParams, basis: &DressedBasis, k0: usize) -> Result<SubspaceSplit> {
    if k0 < 3 {
        return Err(Error::InsufficientTruncation(format!("K0 = {k0} < 3")));
    }
    if params.n_max <= k0 + 4 {
        return Err(Error::InsufficientTruncation(format!(
            "n_max = {} must exceed K0 + 4 = {}",
            params.n_max,
            k0 + 4
        )));
    }
    let dim = params.working_dim();
    let amps = |v: &DressedVector| v.amplitudes.clone();
    let h1: Vec<CVec> = basis.plus.iter().map(amps).collect();
    let h2: Vec<CVec> = basis.minus[k0 - 1..].iter().map(amps).collect();
    let h3: Vec<CVec> = std::iter::once(&basis.ground)
        .chain(&basis.minus[..k0 - 1])
        .map(amps)
        .collect();
    Ok(SubspaceSplit {
        p1: Projector::from_vectors(dim, &h1)?,
        p2: Projector::from_vectors(dim, &h2)?,
        p3: Projector::from_vectors(dim, &h3)?,
        k0,
    })
}

/// Everything downstream constructions need about one parameter point.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub spectrum: SpectrumTable,
    pub basis: DressedBasis,
    pub split: SubspaceSplit,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let spectrum = SpectrumTable::new(&params)?;
        let basis = DressedBasis::new(&params)?;
        let split = subspace_split_from(&params, &basis, spectrum.k0)?;
        Ok(Self {
            params,
            spectrum,
            basis,
            split,
        })
    }

    pub fn k0(&self) -> usize {
        self.spectrum.k0
    }

    pub fn working_dim(&self) -> usize {
        self.params.working_dim()
    }

    /// Hamiltonian compressed to the working space.
    pub fn working_hamiltonian(&self) -> Result<CMat> {
        let h = hamiltonian_matrix(&self.params)?;
        let d = self.working_dim();
        Ok(h.view((0, 0), (d, d)).into_owned())
    }

    /// Largest `||[H, P_i]||_HS` over the three components; zero means each
    /// range is invariant under `exp(-i t H)`.
    pub fn split_commutator_defect(&self) -> Result<f64> {
        let h = self.working_hamiltonian()?;
        let scale = crate::operator::hs_norm(&h).max(1.0);
        Ok([&self.split.p1, &self.split.p2, &self.split.p3]
            .iter()
            .map(|p| {
                let m = p.matrix();
                crate::operator::hs_norm(&(&h * m - m * &h)) / scale
            })
            .fold(0.0, f64::max))
    }
}

/// Rank-one projector on a dressed vector.
pub fn dressed_projector(v: &DressedVector) -> CMat {
    outer(&v.amplitudes, &v.amplitudes)
}
