//! Discretized POVM `M = M1 + M2 + M3` over `Omega = R^2 + R^2 + {pt}`.
//!
//! Components one and two are built from the J and S coherent families and
//! the Gauss rules matched to their weights; the point component carries
//! `P3`. Every atom stores its density `P(omega)` (without weight) together
//! with a spectral factorization `density = sum_m lambda_m |v_m><v_m|` that
//! square roots and Kraus operators are read from.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coherent::{
    moment_quadrature, CoherentFamily, FamilyBranch, Precision, QuadratureRule, YGrid, YMode, DEFAULT_SERIES_DEPTH,
};
use crate::error::{Error, Result};
use crate::model::{Model, ModelParams, SubspaceSplit};
use crate::operator::{hermitian_eigen, identity, op_norm, outer, CMat, CVec, Projector};

/// Default number of Gauss nodes per component.
pub const DEFAULT_QUAD_ORDER: usize = 8;
/// Default number of angle samples in finite-grid mode.
pub const DEFAULT_Y_POINTS: usize = 16;
/// Interior completeness tolerance.
pub const INTERIOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    One,
    Two,
    Point,
}

impl Component {
    pub fn name(&self) -> &'static str {
        match self {
            Component::One => "one",
            Component::Two => "two",
            Component::Point => "point",
        }
    }
}

/// One point of the discretized `Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmAtom {
    pub component: Component,
    /// Gauss node index (components one and two).
    pub x_node: Option<usize>,
    /// Angle sample index (finite-grid mode only).
    pub y_node: Option<usize>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub weight: f64,
    pub density: CMat,
    weighted: CMat,
    sqrt: CMat,
    sqrt_factor: CMat,
    factors: Vec<(f64, CVec)>,
}

impl PovmAtom {
    /// Atom with a known factorization `density = sum lambda |v><v|`;
    /// factors with `lambda <= 0` are dropped.
    pub fn from_factors(
        component: Component,
        x_node: Option<usize>,
        y_node: Option<usize>,
        location: (Option<f64>, Option<f64>),
        weight: f64,
        factors: Vec<(f64, CVec)>,
        dim: usize,
    ) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParams(format!("atom weight must be > 0, got {weight}")));
        }
        let factors: Vec<(f64, CVec)> = factors.into_iter().filter(|(l, _)| *l > 0.0).collect();
        let mut density = CMat::zeros(dim, dim);
        for (l, v) in &factors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            density += outer(v, v) * num_complex::Complex64::new(*l, 0.0);
        }
        Ok(Self::assemble(
            component, x_node, y_node, location, weight, density, factors,
        ))
    }

    /// Atom from a dense psd density; factors come from its eigensolve.
    pub fn from_density(
        component: Component,
        x_node: Option<usize>,
        y_node: Option<usize>,
        location: (Option<f64>, Option<f64>),
        weight: f64,
        density: CMat,
    ) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParams(format!("atom weight must be > 0, got {weight}")));
        }
        if !density.is_square() {
            return Err(Error::DimensionMismatch {
                expected: density.nrows(),
                found: density.ncols(),
            });
        }
        let (vals, vecs) = hermitian_eigen(&density);
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -crate::operator::PSD_TOL * scale.max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let floor = 64.0 * f64::EPSILON * scale * density.nrows() as f64;
        let factors = vals
            .iter()
            .enumerate()
            .filter(|(_, l)| **l > floor)
            .map(|(i, l)| (*l, vecs.column(i).into_owned()))
            .collect();
        Ok(Self::assemble(
            component, x_node, y_node, location, weight, density, factors,
        ))
    }

    /// Atom from a stored density and factorization, as read back from JSON.
    /// Only shapes and the weight are checked.
    pub fn from_stored(
        component: Component,
        x_node: Option<usize>,
        y_node: Option<usize>,
        location: (Option<f64>, Option<f64>),
        weight: f64,
        density: CMat,
        factors: Vec<(f64, CVec)>,
    ) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParams(format!("atom weight must be > 0, got {weight}")));
        }
        let d = density.nrows();
        if density.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: density.ncols(),
            });
        }
        if let Some((_, v)) = factors.iter().find(|(_, v)| v.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        Ok(Self::assemble(
            component, x_node, y_node, location, weight, density, factors,
        ))
    }

    fn assemble(
        component: Component,
        x_node: Option<usize>,
        y_node: Option<usize>,
        (x, y): (Option<f64>, Option<f64>),
        weight: f64,
        density: CMat,
        factors: Vec<(f64, CVec)>,
    ) -> Self {
        let weighted = &density * num_complex::Complex64::new(weight, 0.0);
        let sqrt = if component == Component::Point && weight == 1.0 {
            // The point density is a projector.
            density.clone()
        } else {
            let d = density.nrows();
            let mut s = CMat::zeros(d, d);
            for (l, v) in &factors {
                s += outer(v, v) * num_complex::Complex64::new((weight * l).sqrt(), 0.0);
            }
            s
        };
        let d = density.nrows();
        let mut sqrt_factor = CMat::zeros(d, factors.len());
        for (m, (l, v)) in factors.iter().enumerate() {
            sqrt_factor.set_column(m, &(v * num_complex::Complex64::new((weight * l).sqrt().sqrt(), 0.0)));
        }
        Self {
            component,
            x_node,
            y_node,
            x,
            y,
            weight,
            density,
            weighted,
            sqrt,
            sqrt_factor,
            factors,
        }
    }

    /// `weight * density`, the atom's contribution to `M(B)`.
    pub fn weighted(&self) -> &CMat {
        &self.weighted
    }

    /// `(lambda_m, v_m)` with `density = sum_m lambda_m |v_m><v_m|`.
    pub fn factors(&self) -> &[(f64, CVec)] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// `(weight * density)^{1/2}` from the factorization.
    pub fn weighted_sqrt(&self) -> &CMat {
        &self.sqrt
    }

    /// `S x S` with `S` the weighted square root. Low-rank atoms use
    /// `S = V V*`, `V = [(w lambda_m)^{1/4} v_m]`, so the cost is `O(d^2 r)`.
    pub fn sqrt_sandwich(&self, x: &CMat) -> CMat {
        let d = self.density.nrows();
        if 2 * self.factors.len() < d {
            let v = &self.sqrt_factor;
            let inner = v.adjoint() * x * v;
            v * inner * v.adjoint()
        } else {
            &self.sqrt * x * &self.sqrt
        }
    }
}

/// Discretization choices for [`PovmAtlas::build`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtlasConfig {
    pub quad_order: usize,
    pub series_depth: usize,
    pub y_mode: YMode,
    pub y_points: usize,
    pub precision: Precision,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            quad_order: DEFAULT_QUAD_ORDER,
            series_depth: DEFAULT_SERIES_DEPTH,
            y_mode: YMode::ExactMean,
            y_points: DEFAULT_Y_POINTS,
            precision: Precision::default(),
        }
    }
}

/// The finite set of atoms together with the model data it was built from.
#[derive(Debug, Clone)]
pub struct PovmAtlas {
    pub params: ModelParams,
    pub k0: usize,
    pub y_mode: YMode,
    pub quad_order: usize,
    pub series_depth: usize,
    pub split: SubspaceSplit,
    pub quad_j: QuadratureRule,
    pub quad_s: QuadratureRule,
    atoms: Vec<PovmAtom>,
    interior: Projector,
    interior_levels: Vec<CVec>,
}

impl PovmAtlas {
    /// Builds families, Gauss rules and angle grid, then the atlas.
    pub fn build(model: &Model, config: &AtlasConfig) -> Result<Self> {
        let fam_j = CoherentFamily::new(model, FamilyBranch::J, config.series_depth, config.precision)?;
        let fam_s = CoherentFamily::new(model, FamilyBranch::S, config.series_depth, config.precision)?;
        let quad_j = moment_quadrature(fam_j.weights(), config.quad_order, config.precision)?;
        let quad_s = moment_quadrature(fam_s.weights(), config.quad_order, config.precision)?;
        let grid = match config.y_mode {
            YMode::ExactMean => YGrid::ExactMean,
            YMode::FiniteGrid => {
                let gap = fam_j.min_gap().min(fam_s.min_gap());
                YGrid::finite(config.y_points, 50.0 / gap)?
            }
        };
        build_povm_atlas(model, &fam_j, &fam_s, &quad_j, &quad_s, &grid)
    }

    pub fn atoms(&self) -> &[PovmAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.split.p3.dim()
    }

    /// Index of the point atom (always the last one).
    pub fn pt_id(&self) -> usize {
        self.atoms.len() - 1
    }

    pub fn p3(&self) -> &CMat {
        self.split.p3.matrix()
    }

    /// Projector on the first `2Q` levels of each branch plus `H3`.
    pub fn interior(&self) -> &Projector {
        &self.interior
    }

    /// Dressed levels spanning [`interior`](Self::interior).
    pub fn interior_levels(&self) -> &[CVec] {
        &self.interior_levels
    }

    /// Ids of the atoms of one component, ascending.
    pub fn component_ids(&self, c: Component) -> Vec<usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.component == c)
            .map(|(i, _)| i)
            .collect()
    }

    /// Reassembles an atlas from stored atoms (the point atom last).
    pub fn from_parts(
        model: &Model,
        y_mode: YMode,
        quad_order: usize,
        series_depth: usize,
        quad_j: QuadratureRule,
        quad_s: QuadratureRule,
        atoms: Vec<PovmAtom>,
    ) -> Result<Self> {
        match atoms.last() {
            Some(a) if a.component == Component::Point => {}
            _ => return Err(Error::Inconsistent("atlas must end with the point atom".into())),
        }
        if atoms.iter().filter(|a| a.component == Component::Point).count() != 1 {
            return Err(Error::Inconsistent("atlas needs exactly one point atom".into()));
        }
        let dim = model.working_dim();
        for a in &atoms {
            if a.density.nrows() != dim || a.density.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.density.nrows(),
                });
            }
        }
        let interior_levels = interior_levels(model, quad_order);
        let interior = Projector::from_vectors(model.working_dim(), &interior_levels)?;
        Ok(Self {
            params: model.params,
            k0: model.k0(),
            y_mode,
            quad_order,
            series_depth,
            split: model.split.clone(),
            quad_j,
            quad_s,
            atoms,
            interior,
            interior_levels,
        })
    }
}

fn interior_levels(model: &Model, quad_order: usize) -> Vec<CVec> {
    let k0 = model.k0();
    let levels = 2 * quad_order;
    let mut vecs: Vec<CVec> = Vec::new();
    vecs.extend(model.basis.plus.iter().take(levels).map(|v| v.amplitudes.clone()));
    vecs.extend(
        model.basis.minus[k0 - 1..]
            .iter()
            .take(levels)
            .map(|v| v.amplitudes.clone()),
    );
    vecs.push(model.basis.ground.amplitudes.clone());
    vecs.extend(model.basis.minus[..k0 - 1].iter().map(|v| v.amplitudes.clone()));
    vecs
}

fn component_atoms(
    component: Component,
    family: &CoherentFamily,
    quad: &QuadratureRule,
    grid: &YGrid,
    out: &mut Vec<PovmAtom>,
) -> Result<()> {
    let dim = family.working_dim();
    for (j, (&x, &w)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
        match grid {
            YGrid::ExactMean => {
                let factors = family
                    .level_terms(x)
                    .into_iter()
                    .take(family.depth() + 1)
                    .enumerate()
                    .map(|(k, t)| (t, family.level(k).cloned().unwrap_or_else(|| CVec::zeros(dim))))
                    .collect();
                out.push(PovmAtom::from_factors(
                    component,
                    Some(j),
                    None,
                    (Some(x), None),
                    w,
                    factors,
                    dim,
                )?);
            }
            YGrid::FiniteGrid { points, .. } => {
                let wy = w / points.len() as f64;
                for (m, &y) in points.iter().enumerate() {
                    let u = family.scaled_vector(x, y);
                    let n2 = u.norm_squared();
                    let v = &u / num_complex::Complex64::new(n2.sqrt(), 0.0);
                    out.push(PovmAtom::from_factors(
                        component,
                        Some(j),
                        Some(m),
                        (Some(x), Some(y)),
                        wy,
                        vec![(n2, v)],
                        dim,
                    )?);
                }
            }
        }
    }
    Ok(())
}

/// Atoms in the fixed order: component one by (x-node, y-node), component
/// two likewise, then the point atom carrying `P3`.
///
/// In exact-mean mode each x-node is one atom with the phase-averaged
/// density `sum_k x^k / c_k |k><k|`; in finite-grid mode each `(x, y)` pair
/// is a rank-one atom `u u*`, `u = sum_k x^{k/2} exp(-i E_k y) / sqrt(c_k) |k>`,
/// with weight `w_j / M_y`.
pub fn build_povm_atlas(
    model: &Model,
    fam_j: &CoherentFamily,
    fam_s: &CoherentFamily,
    quad_j: &QuadratureRule,
    quad_s: &QuadratureRule,
    grid: &YGrid,
) -> Result<PovmAtlas> {
    if fam_j.branch() != FamilyBranch::J || fam_s.branch() != FamilyBranch::S {
        return Err(Error::Inconsistent("families must be (J, S)".into()));
    }
    if fam_s.k0() != model.k0() || fam_j.k0() != model.k0() || model.split.k0 != model.k0() {
        return Err(Error::Inconsistent(format!(
            "K0 mismatch: model {}, split {}, S family {}",
            model.k0(),
            model.split.k0,
            fam_s.k0()
        )));
    }
    if fam_j.working_dim() != model.working_dim() || fam_s.working_dim() != model.working_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.working_dim(),
            found: fam_j.working_dim(),
        });
    }
    if quad_j.is_empty() || quad_s.is_empty() {
        return Err(Error::Empty("quadrature rule"));
    }
    let mut atoms = Vec::new();
    component_atoms(Component::One, fam_j, quad_j, grid, &mut atoms)?;
    component_atoms(Component::Two, fam_s, quad_s, grid, &mut atoms)?;

    let k0 = model.k0();
    let pt_factors = std::iter::once(&model.basis.ground)
        .chain(&model.basis.minus[..k0 - 1])
        .map(|v| (1.0, v.amplitudes.clone()))
        .collect();
    let pt = PovmAtom::from_factors(
        Component::Point,
        None,
        None,
        (None, None),
        1.0,
        pt_factors,
        model.working_dim(),
    )?;
    // The point density is the split's projector itself, so M({pt}) = P3
    // holds bit for bit.
    let pt = PovmAtom::assemble(
        Component::Point,
        None,
        None,
        (None, None),
        1.0,
        model.split.p3.matrix().clone(),
        pt.factors,
    );
    atoms.push(pt);
    PovmAtlas::from_parts(
        model,
        grid.mode(),
        quad_j.matched_moments / 2,
        fam_j.depth(),
        quad_j.clone(),
        quad_s.clone(),
        atoms,
    )
}

/// A set of atoms of an atlas. `atom_ids` never holds the point atom; it is
/// selected through `include_pt`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MeasurableSet {
    pub atom_ids: BTreeSet<usize>,
    pub include_pt: bool,
}

impl MeasurableSet {
    pub fn new(atom_ids: impl IntoIterator<Item = usize>, include_pt: bool) -> Self {
        Self {
            atom_ids: atom_ids.into_iter().collect(),
            include_pt,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole of `Omega_disc`.
    pub fn all(atlas: &PovmAtlas) -> Self {
        Self::new(0..atlas.pt_id(), true)
    }

    pub fn pt() -> Self {
        Self::new([], true)
    }

    pub fn singleton(id: usize) -> Self {
        Self::new([id], false)
    }

    /// All atoms of one component.
    pub fn component(atlas: &PovmAtlas, c: Component) -> Self {
        match c {
            Component::Point => Self::pt(),
            _ => Self::new(atlas.component_ids(c), false),
        }
    }

    /// Each non-point atom independently with probability 1/2, and the
    /// point atom likewise.
    pub fn random<R: Rng + ?Sized>(atlas: &PovmAtlas, rng: &mut R) -> Self {
        let ids: Vec<usize> = (0..atlas.pt_id()).filter(|_| rng.gen_bool(0.5)).collect();
        let pt = rng.gen_bool(0.5);
        Self::new(ids, pt)
    }

    pub fn is_empty(&self) -> bool {
        self.atom_ids.is_empty() && !self.include_pt
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            atom_ids: self.atom_ids.union(&other.atom_ids).copied().collect(),
            include_pt: self.include_pt || other.include_pt,
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self {
            atom_ids: self.atom_ids.difference(&other.atom_ids).copied().collect(),
            include_pt: self.include_pt && !other.include_pt,
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.atom_ids.is_disjoint(&other.atom_ids) && !(self.include_pt && other.include_pt)
    }

    pub fn contains(&self, atlas: &PovmAtlas, id: usize) -> bool {
        if id == atlas.pt_id() {
            self.include_pt
        } else {
            self.atom_ids.contains(&id)
        }
    }

    /// Indicator over all atom ids (point atom last).
    pub fn indicator(&self, atlas: &PovmAtlas) -> Vec<f64> {
        (0..atlas.len())
            .map(|id| if self.contains(atlas, id) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn validate(&self, atlas: &PovmAtlas) -> Result<()> {
        match self.atom_ids.iter().find(|&&id| id >= atlas.pt_id()) {
            Some(&id) => Err(Error::InvalidSet { id, len: atlas.pt_id() }),
            None => Ok(()),
        }
    }
}

/// `M(B) = sum_{id in B} weight * density`, summed in ascending id order
/// with the point atom (`P3`) last.
pub fn povm_of_set(atlas: &PovmAtlas, set: &MeasurableSet) -> Result<CMat> {
    set.validate(atlas)?;
    let d = atlas.dim();
    let mut m = CMat::zeros(d, d);
    for &id in &set.atom_ids {
        m += atlas.atoms[id].weighted();
    }
    if set.include_pt {
        m += atlas.atoms[atlas.pt_id()].weighted();
    }
    Ok(m)
}

/// The density `P(omega)` of one atom, without its weight.
pub fn density_at(atlas: &PovmAtlas, id: usize) -> Result<&CMat> {
    atlas
        .atoms
        .get(id)
        .map(|a| &a.density)
        .ok_or(Error::InvalidSet { id, len: atlas.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    /// `||Pi (M(Omega) - I) Pi||` on the interior subspace.
    pub norm_defect_interior: f64,
    /// `max |<v|M(Omega)|v> - 1|` over the interior dressed levels. Moment
    /// matching fixes these entries in both y-modes; a finite y-grid leaves
    /// off-diagonal leakage that only the norm defect sees.
    pub diagonal_defect_interior: f64,
    /// `||M(Omega) - I||` on the whole truncated space.
    pub norm_defect_total: f64,
    pub interior_dim: usize,
}

/// Interior and full-space defects of an arbitrary candidate `M(Omega)`.
pub fn completeness_of(atlas: &PovmAtlas, total: &CMat) -> CompletenessReport {
    let diff = total - identity(atlas.dim());
    let interior = atlas.interior.sandwich(&diff);
    let diagonal = atlas
        .interior_levels
        .iter()
        .map(|v| (v.adjoint() * &diff * v)[(0, 0)].norm())
        .fold(0.0, f64::max);
    CompletenessReport {
        norm_defect_interior: op_norm(&interior),
        diagonal_defect_interior: diagonal,
        norm_defect_total: op_norm(&diff),
        interior_dim: atlas.interior.rank(),
    }
}

pub fn completeness_check(atlas: &PovmAtlas) -> CompletenessReport {
    let total = povm_of_set(atlas, &MeasurableSet::all(atlas)).expect("full set is valid");
    completeness_of(atlas, &total)
}
