//! Non-commutative operator graphs `V = span{M(B)}` and the Knill-Laflamme
//! test `dim P V P = 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{hs_inner, hs_norm, identity, CMat, OperatorSubspace, Projector, DEFAULT_RANK_TOL};
use crate::povm::{povm_of_set, MeasurableSet, PovmAtlas};

/// Random unions added to the default and random families.
pub const RANDOM_UNIONS: usize = 32;
/// Proportionality tolerance of the anticlique test.
pub const KL_TOL: f64 = 1e-10;
/// Tolerance used to certify a candidate projector.
pub const PROJECTOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyKind {
    /// Every atom on its own.
    Atoms,
    /// Binary tree of contiguous id ranges, root `Omega` down to singletons.
    Dyadic,
    /// `Omega` plus seeded random unions.
    Random { seed: u64 },
    /// Atoms, `Omega` and seeded random unions.
    Default { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetFamily {
    pub kind: FamilyKind,
    pub sets: Vec<MeasurableSet>,
}

fn range_set(atlas: &PovmAtlas, lo: usize, hi: usize) -> MeasurableSet {
    let pt = atlas.pt_id();
    MeasurableSet::new((lo..hi).filter(|&i| i != pt), (lo..hi).contains(&pt))
}

fn dyadic(atlas: &PovmAtlas, lo: usize, hi: usize, out: &mut Vec<MeasurableSet>) {
    out.push(range_set(atlas, lo, hi));
    if hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        dyadic(atlas, lo, mid, out);
        dyadic(atlas, mid, hi, out);
    }
}

impl SetFamily {
    pub fn new(atlas: &PovmAtlas, kind: FamilyKind) -> Self {
        let atoms = || {
            (0..atlas.pt_id())
                .map(MeasurableSet::singleton)
                .chain(std::iter::once(MeasurableSet::pt()))
        };
        let unions = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..RANDOM_UNIONS)
                .map(|_| MeasurableSet::random(atlas, &mut rng))
                .collect::<Vec<_>>()
        };
        let sets = match kind {
            FamilyKind::Atoms => atoms().collect(),
            FamilyKind::Dyadic => {
                let mut out = Vec::new();
                dyadic(atlas, 0, atlas.len(), &mut out);
                out
            }
            FamilyKind::Random { seed } => std::iter::once(MeasurableSet::all(atlas)).chain(unions(seed)).collect(),
            FamilyKind::Default { seed } => atoms()
                .chain(std::iter::once(MeasurableSet::all(atlas)))
                .chain(unions(seed))
                .collect(),
        };
        Self { kind, sets }
    }

    pub fn atoms(atlas: &PovmAtlas) -> Self {
        Self::new(atlas, FamilyKind::Atoms)
    }

    /// Checks every set against the atlas and that the union is `Omega`.
    pub fn validate(&self, atlas: &PovmAtlas) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::Empty("set family"));
        }
        let mut union = MeasurableSet::empty();
        for s in &self.sets {
            s.validate(atlas)?;
            union = union.union(s);
        }
        if union != MeasurableSet::all(atlas) {
            return Err(Error::Inconsistent("set family does not cover Omega".into()));
        }
        Ok(())
    }
}

/// HS-orthonormal basis of `span{M(B) : B in family}`.
pub fn graph_from_atlas(atlas: &PovmAtlas, family: &SetFamily, rank_tol: f64) -> Result<OperatorSubspace> {
    family.validate(atlas)?;
    let ops = family
        .sets
        .iter()
        .map(|s| povm_of_set(atlas, s))
        .collect::<Result<Vec<_>>>()?;
    OperatorSubspace::orthonormalize(&ops, rank_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphAxiomReport {
    /// `max_A dist(A*, V)` over the basis.
    pub adjoint_defect: f64,
    /// HS distance of the identity (or of the restricting projector) to the
    /// (compressed) graph.
    pub identity_distance: f64,
    pub adjoint_closed: bool,
    pub contains_identity: bool,
    pub tol: f64,
}

impl GraphAxiomReport {
    pub fn passed(&self) -> bool {
        self.adjoint_closed && self.contains_identity
    }
}

/// Adjoint closure and identity containment. With `restrict = Some(P)` the
/// identity test is made for `P` inside `P V P`.
pub fn verify_graph_axioms(v: &OperatorSubspace, tol: f64, restrict: Option<&Projector>) -> Result<GraphAxiomReport> {
    let adjoints: Vec<CMat> = v.basis().iter().map(|a| a.adjoint()).collect();
    let adjoint_defect = v.distances_to(&adjoints)?.into_iter().fold(0.0f64, f64::max);
    let identity_distance = match restrict {
        Some(p) => compress_with(p, v)?.distance_to(p.matrix())?,
        None => v.distance_to(&identity(v.ambient_dim()))?,
    };
    Ok(GraphAxiomReport {
        adjoint_defect,
        identity_distance,
        adjoint_closed: adjoint_defect <= tol,
        contains_identity: identity_distance <= tol,
        tol,
    })
}

/// `span{P A P : A in basis(V)}`; images below the larger of the rank
/// tolerance and the basis noise floor (in HS norm) are treated as zero.
pub fn compress(p: &CMat, v: &OperatorSubspace) -> Result<OperatorSubspace> {
    let p = Projector::new(p.clone(), PROJECTOR_TOL)?;
    compress_with(&p, v)
}

pub fn compress_with(p: &Projector, v: &OperatorSubspace) -> Result<OperatorSubspace> {
    if p.dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: v.ambient_dim(),
            found: p.dim(),
        });
    }
    if v.is_empty() {
        return Ok(OperatorSubspace::empty(v.ambient_dim(), v.rank_tol()));
    }
    let images: Vec<CMat> = v.basis().iter().map(|a| p.sandwich(a)).collect();
    OperatorSubspace::orthonormalize_absolute(&images, v.rank_tol().max(v.noise_floor()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    pub dim: usize,
    pub is_anticlique: bool,
    /// Fitted `lambda = <P, B> / <P, P>` for the single basis element `B`.
    pub lambda: Option<f64>,
    /// `||B - lambda P||_HS` (zero when `dim != 1`).
    pub proportionality_defect: f64,
}

/// Knill-Laflamme check: `P` is an anticlique of `V` iff `P V P` is one
/// dimensional and spanned by `P` itself.
pub fn kl_check(p: &CMat, v: &OperatorSubspace) -> Result<KlReport> {
    let proj = Projector::new(p.clone(), PROJECTOR_TOL)?;
    if proj.rank() == 0 {
        return Err(Error::InvalidState("anticlique candidate has rank 0".into()));
    }
    let c = compress_with(&proj, v)?;
    let (lambda, defect) = match c.basis() {
        [b] => {
            let num = hs_inner(p, b)?;
            let den = hs_inner(p, p)?.re;
            let lambda = num / den;
            let defect = hs_norm(&(b - p * lambda));
            (Some(lambda.norm()), defect)
        }
        _ => (None, 0.0),
    };
    Ok(KlReport {
        dim: c.dim(),
        is_anticlique: c.dim() == 1 && defect <= KL_TOL,
        lambda,
        proportionality_defect: defect,
    })
}

/// Convenience: graph of the default family at the default rank tolerance.
pub fn default_graph(atlas: &PovmAtlas, seed: u64) -> Result<OperatorSubspace> {
    graph_from_atlas(
        atlas,
        &SetFamily::new(atlas, FamilyKind::Default { seed }),
        DEFAULT_RANK_TOL,
    )
}
