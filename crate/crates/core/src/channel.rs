//! The generalized channel `Phi*`, the measurement channel `Psi_hat` with
//! its Kraus and complementary forms, operator graphs of channels, and a
//! Choi-matrix complete-positivity test.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    hermitian_eigvals, hs_inner, hs_norm, identity, op_norm, CMat, OperatorSubspace, Projector, ZERO,
};
use crate::povm::PovmAtlas;

/// Trace-preservation tolerance of a Kraus family.
pub const TP_TOL: f64 = 1e-9;
/// Choi-matrix positivity tolerance.
pub const CHOI_TOL: f64 = 1e-9;
/// State validation tolerance (trace and positivity).
pub const STATE_TOL: f64 = 1e-10;

/// A linear map on matrices, `in_dim x in_dim -> out_dim x out_dim`.
pub trait LinearMap {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &CMat) -> CMat;

    /// Image of the matrix unit `|i><j|`.
    fn apply_unit(&self, i: usize, j: usize) -> CMat {
        self.apply(&crate::operator::matrix_unit(self.in_dim(), i, j))
    }
}

/// `rho -> sum_k A_k rho A_k*` with `A_k : C^in -> C^out`.
///
/// Trace preservation (`sum A_k* A_k = I`) is measured, not required: the
/// measurement channel of a finite atlas is trace preserving only on the
/// interior subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMat>,
    /// Row indices holding a nonzero entry, per Kraus operator.
    row_support: Vec<Vec<usize>>,
}

impl KrausChannel {
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<CMat>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Empty("Kraus family"));
        }
        for a in &kraus {
            if a.nrows() != out_dim || a.ncols() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: out_dim * in_dim,
                    found: a.nrows() * a.ncols(),
                });
            }
        }
        let row_support = kraus
            .iter()
            .map(|a| {
                (0..a.nrows())
                    .filter(|&r| a.row(r).iter().any(|z| *z != ZERO))
                    .collect()
            })
            .collect();
        Ok(Self {
            in_dim,
            out_dim,
            kraus,
            row_support,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, vec![identity(dim)]).expect("square identity")
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    /// `sum_k A_k* A_k`.
    pub fn kraus_sum(&self) -> CMat {
        let mut s = CMat::zeros(self.in_dim, self.in_dim);
        for (a, rows) in self.kraus.iter().zip(&self.row_support) {
            if rows.len() == a.nrows() {
                s += a.adjoint() * a;
            } else {
                for &r in rows {
                    let row = a.row(r);
                    s += row.adjoint() * row;
                }
            }
        }
        s
    }

    /// `||sum A* A - I||`, optionally compressed to a domain projector.
    pub fn tp_defect(&self, domain: Option<&Projector>) -> f64 {
        let d = self.kraus_sum() - identity(self.in_dim);
        match domain {
            Some(p) => op_norm(&p.sandwich(&d)),
            None => op_norm(&d),
        }
    }

    /// Heisenberg picture `x -> sum_k A_k* x A_k`.
    pub fn apply_dual(&self, x: &CMat) -> CMat {
        let mut s = CMat::zeros(self.in_dim, self.in_dim);
        for a in &self.kraus {
            s += a.adjoint() * x * a;
        }
        s
    }
}

impl LinearMap for KrausChannel {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn apply(&self, rho: &CMat) -> CMat {
        let mut s = CMat::zeros(self.out_dim, self.out_dim);
        for a in &self.kraus {
            s += a * rho * a.adjoint();
        }
        s
    }

    /// `sum_k A_k|i> (A_k|j>)*`, touching only the nonzero rows.
    fn apply_unit(&self, i: usize, j: usize) -> CMat {
        let mut s = CMat::zeros(self.out_dim, self.out_dim);
        for (a, rows) in self.kraus.iter().zip(&self.row_support) {
            for &r in rows {
                let ai = a[(r, i)];
                if ai == ZERO {
                    continue;
                }
                for &c in rows {
                    let aj = a[(c, j)];
                    if aj != ZERO {
                        s[(r, c)] += ai * aj.conj();
                    }
                }
            }
        }
        s
    }
}

/// The transpose map, a positive but not completely positive fixture.
#[derive(Debug, Clone, Copy)]
pub struct Transpose(pub usize);

impl LinearMap for Transpose {
    fn in_dim(&self) -> usize {
        self.0
    }

    fn out_dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &CMat) -> CMat {
        x.transpose()
    }
}

fn check_function_len(atlas: &PovmAtlas, len: usize) -> Result<()> {
    if len != atlas.len() {
        return Err(Error::DimensionMismatch {
            expected: atlas.len(),
            found: len,
        });
    }
    Ok(())
}

fn check_square(atlas: &PovmAtlas, x: &CMat) -> Result<()> {
    if x.nrows() != atlas.dim() || x.ncols() != atlas.dim() {
        return Err(Error::DimensionMismatch {
            expected: atlas.dim(),
            found: x.nrows(),
        });
    }
    Ok(())
}

/// Checks `rho` is Hermitian, psd and of unit trace to [`STATE_TOL`].
pub fn validate_state(rho: &CMat) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidState("state must be square".into()));
    }
    let herm = (rho - rho.adjoint()).norm();
    if herm > STATE_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} != 1")));
    }
    let min = hermitian_eigvals(rho).first().copied().unwrap_or(0.0);
    if min < -STATE_TOL {
        return Err(Error::InvalidState(format!("min eigenvalue {min:e} < 0")));
    }
    Ok(())
}

/// `Phi*(x (x) f) = sum_omega f(omega) (w P)^{1/2} x (w P)^{1/2}`, the point
/// atom contributing `f(pt) P3 x P3`.
pub fn phi_star(atlas: &PovmAtlas, x: &CMat, f: &[Complex64]) -> Result<CMat> {
    check_square(atlas, x)?;
    check_function_len(atlas, f.len())?;
    let d = atlas.dim();
    let mut out = CMat::zeros(d, d);
    for (atom, &fw) in atlas.atoms().iter().zip(f) {
        if fw == ZERO {
            continue;
        }
        out += atom.sqrt_sandwich(x) * fw;
    }
    Ok(out)
}

/// Discrete `f_rho(omega)`, indexed by atom id.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteStateFunction {
    pub entries: Vec<CMat>,
}

impl DiscreteStateFunction {
    /// `sum_omega Tr f_rho(omega)`.
    pub fn total_trace(&self) -> f64 {
        self.entries.iter().map(|e| e.trace().re).sum()
    }

    /// `sum_omega f(omega) Tr(f_rho(omega) x)`.
    pub fn pair(&self, x: &CMat, f: &[Complex64]) -> Result<Complex64> {
        let mut s = ZERO;
        for (e, &fw) in self.entries.iter().zip(f) {
            s += fw * (e * x).trace();
        }
        Ok(s)
    }
}

/// Predual of [`phi_star`]: `rho -> (w P)^{1/2} rho (w P)^{1/2}` per atom.
pub fn phi_predual(atlas: &PovmAtlas, rho: &CMat) -> Result<DiscreteStateFunction> {
    check_square(atlas, rho)?;
    validate_state(rho)?;
    Ok(DiscreteStateFunction {
        entries: atlas.atoms().iter().map(|a| a.sqrt_sandwich(rho)).collect(),
    })
}

/// `Psi_hat*(f) = sum_omega f(omega) w P(omega)` in ascending id order, so
/// an indicator reproduces `M(B)` bit for bit.
pub fn psi_hat_star(atlas: &PovmAtlas, f: &[f64]) -> Result<CMat> {
    check_function_len(atlas, f.len())?;
    let d = atlas.dim();
    let mut out = CMat::zeros(d, d);
    for (atom, &fw) in atlas.atoms().iter().zip(f) {
        if fw == 0.0 {
            continue;
        }
        if fw == 1.0 {
            out += atom.weighted();
        } else {
            out += atom.weighted() * Complex64::new(fw, 0.0);
        }
    }
    Ok(out)
}

/// Outcome distribution `Tr(rho w P(omega))` of the measurement channel.
pub fn psi_hat(atlas: &PovmAtlas, rho: &CMat) -> Result<Vec<f64>> {
    check_square(atlas, rho)?;
    validate_state(rho)?;
    atlas
        .atoms()
        .iter()
        .map(|a| Ok(hs_inner(a.weighted(), rho)?.re))
        .collect()
}

/// Environment label of one Kraus operator of [`kraus_of_psi_hat`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KrausLabel {
    pub atom: usize,
    pub factor: usize,
}

/// `A_{omega,m} = |omega><v_{omega,m}| sqrt(w lambda_m)` from each atom's
/// spectral factors, ordered by (atom id, factor index); output space is
/// indexed by atom id.
pub fn kraus_of_psi_hat(atlas: &PovmAtlas) -> Result<(KrausChannel, Vec<KrausLabel>)> {
    let d = atlas.dim();
    let n = atlas.len();
    let mut kraus = Vec::new();
    let mut labels = Vec::new();
    for (id, atom) in atlas.atoms().iter().enumerate() {
        if atom.factors().is_empty() {
            return Err(Error::NotPsd { min_eigenvalue: 0.0 });
        }
        for (m, (lambda, v)) in atom.factors().iter().enumerate() {
            if !(*lambda > 0.0) {
                return Err(Error::NotPsd {
                    min_eigenvalue: *lambda,
                });
            }
            let scale = (atom.weight * lambda).sqrt();
            let mut a = CMat::zeros(n, d);
            for c in 0..d {
                a[(id, c)] = v[c].conj() * scale;
            }
            kraus.push(a);
            labels.push(KrausLabel { atom: id, factor: m });
        }
    }
    Ok((KrausChannel::new(d, n, kraus)?, labels))
}

/// Stinespring swap: `B_m[k, :] = A_k[m, :]`, i.e. `B_m = sum_k |k><m| A_k`.
pub fn complementary(ch: &KrausChannel) -> KrausChannel {
    let env = ch.len();
    let kraus = (0..ch.out_dim)
        .map(|m| {
            let mut b = CMat::zeros(env, ch.in_dim);
            for (k, a) in ch.kraus.iter().enumerate() {
                b.row_mut(k).copy_from(&a.row(m));
            }
            b
        })
        .collect();
    KrausChannel::new(ch.in_dim, env, kraus).expect("dimensions follow from the input")
}

/// `A_k* A_j` over all ordered pairs, skipping pairs with disjoint row
/// supports (their product vanishes identically).
pub fn channel_graph_generators(ch: &KrausChannel) -> Vec<CMat> {
    let mut ops = Vec::new();
    for (k, a) in ch.kraus.iter().enumerate() {
        for (j, b) in ch.kraus.iter().enumerate() {
            let ra = &ch.row_support[k];
            let rb = &ch.row_support[j];
            let common: Vec<usize> = ra.iter().copied().filter(|r| rb.binary_search(r).is_ok()).collect();
            if common.is_empty() {
                continue;
            }
            if 2 * common.len() < a.nrows() {
                let mut p = CMat::zeros(ch.in_dim, ch.in_dim);
                for r in common {
                    p += a.row(r).adjoint() * b.row(r);
                }
                ops.push(p);
            } else {
                ops.push(a.adjoint() * b);
            }
        }
    }
    ops
}

/// Operator graph `span{A_k* A_j}` of a channel.
pub fn graph_of_channel(ch: &KrausChannel, rank_tol: f64) -> Result<OperatorSubspace> {
    let ops = channel_graph_generators(ch);
    if ops.is_empty() {
        return Ok(OperatorSubspace::empty(ch.in_dim, rank_tol));
    }
    OperatorSubspace::orthonormalize(&ops, rank_tol)
}

/// Comparison of the complementary channel's graph with `span{M(B)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphIdentityReport {
    pub channel_graph_dim: usize,
    pub atom_graph_dim: usize,
    /// Symmetric distance between the two orthonormal bases.
    pub basis_distance: f64,
    /// Largest relative distance of a generator of either side to the
    /// other span. Stable when the generators are nearly dependent.
    pub generator_distance: f64,
}

/// Builds the measurement channel, its complement and the complement's
/// graph, and compares it with the graph spanned by the atoms.
pub fn complementary_graph_identity(atlas: &PovmAtlas, rank_tol: f64) -> Result<GraphIdentityReport> {
    let (ch, _) = kraus_of_psi_hat(atlas)?;
    let comp = complementary(&ch);
    let gens = channel_graph_generators(&comp);
    let g = OperatorSubspace::orthonormalize(&gens, rank_tol)?;
    let atom_ops: Vec<CMat> = atlas.atoms().iter().map(|a| a.weighted().clone()).collect();
    let v = OperatorSubspace::orthonormalize(&atom_ops, rank_tol)?;
    let mut generator_distance = 0.0f64;
    for (space, ops) in [(&v, &gens), (&g, &atom_ops)] {
        for (op, dist) in ops.iter().zip(space.distances_to(ops)?) {
            let n = hs_norm(op);
            if n > 0.0 {
                generator_distance = generator_distance.max(dist / n);
            }
        }
    }
    Ok(GraphIdentityReport {
        channel_graph_dim: g.dim(),
        atom_graph_dim: v.dim(),
        basis_distance: g.distance(&v)?,
        generator_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiReport {
    pub min_eigenvalue: f64,
    /// `||Pi (Tr_out C - I) Pi||` with `Pi` the domain projector (identity
    /// when absent).
    pub tp_defect: f64,
    /// Sizes of the connected blocks the Choi matrix splits into.
    pub block_sizes: Vec<usize>,
    pub completely_positive: bool,
    pub trace_preserving: bool,
}

impl ChoiReport {
    pub fn passed(&self) -> bool {
        self.completely_positive && self.trace_preserving
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Builds `C = sum_ij |i><j| (x) Phi(|i><j|)` from the map's action on matrix
/// units, splits it into the connected components of its sparsity pattern
/// and eigensolves each block.
pub fn choi_cp_check(map: &dyn LinearMap, domain: Option<&Projector>) -> Result<ChoiReport> {
    let din = map.in_dim();
    let dout = map.out_dim();
    if let Some(p) = domain {
        if p.dim() != din {
            return Err(Error::DimensionMismatch {
                expected: din,
                found: p.dim(),
            });
        }
    }
    let n = din * dout;
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut partial = CMat::zeros(din, din);
    for i in 0..din {
        for j in 0..din {
            let img = map.apply_unit(i, j);
            partial[(i, j)] = img.trace();
            for a in 0..dout {
                for b in 0..dout {
                    let z = img[(a, b)];
                    if z != ZERO {
                        entries.push((i * dout + a, j * dout + b, z));
                    }
                }
            }
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(r, c, _) in &entries {
        let (pr, pc) = (find(&mut parent, r), find(&mut parent, c));
        if pr != pc {
            parent[pr.max(pc)] = pr.min(pc);
        }
    }
    let mut block_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for idx in 0..n {
        let root = find(&mut parent, idx);
        if block_of[root] == usize::MAX {
            block_of[root] = members.len();
            members.push(Vec::new());
        }
        let b = block_of[root];
        block_of[idx] = b;
        members[b].push(idx);
    }
    let mut local = vec![0usize; n];
    for m in &members {
        for (k, &idx) in m.iter().enumerate() {
            local[idx] = k;
        }
    }
    let mut blocks: Vec<CMat> = members.iter().map(|m| CMat::zeros(m.len(), m.len())).collect();
    for &(r, c, z) in &entries {
        blocks[block_of[r]][(local[r], local[c])] += z;
    }
    let mut min_eigenvalue = f64::INFINITY;
    for b in &blocks {
        let h = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
        if let Some(&m) = hermitian_eigvals(&h).first() {
            min_eigenvalue = min_eigenvalue.min(m);
        }
    }
    // partial[i, j] = Tr Phi(|i><j|) = (sum A* A)[j, i] for Kraus maps.
    let defect = partial.transpose() - identity(din);
    let tp_defect = match domain {
        Some(p) => op_norm(&p.sandwich(&defect)),
        None => op_norm(&defect),
    };
    Ok(ChoiReport {
        min_eigenvalue,
        tp_defect,
        block_sizes: members.iter().map(Vec::len).collect(),
        completely_positive: min_eigenvalue >= -CHOI_TOL,
        trace_preserving: tp_defect <= TP_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::YMode;
    use crate::graph::{graph_from_atlas, SetFamily};
    use crate::model::{Model, ModelParams};
    use crate::operator::{max_abs_diff, outer, DEFAULT_RANK_TOL, ONE};
    use crate::povm::{povm_of_set, AtlasConfig, Component, MeasurableSet, PovmAtom};
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(mode: YMode, q: usize) -> (Model, PovmAtlas) {
        let m = Model::new(ModelParams::new(1.0, 0.5, 0.2, 40).unwrap()).unwrap();
        let a = PovmAtlas::build(
            &m,
            &AtlasConfig {
                quad_order: q,
                y_mode: mode,
                ..AtlasConfig::default()
            },
        )
        .unwrap();
        (m, a)
    }

    fn ones(n: usize) -> Vec<Complex64> {
        vec![ONE; n]
    }

    #[test]
    fn unitality_and_indicators() {
        let (_, a) = setup(YMode::ExactMean, 8);
        let d = a.dim();
        let total = povm_of_set(&a, &MeasurableSet::all(&a)).unwrap();
        let u = phi_star(&a, &identity(d), &ones(a.len())).unwrap();
        assert!(max_abs_diff(&u, &total) < 1e-13);
        assert!(op_norm(&a.interior().sandwich(&(u - identity(d)))) < 1e-8);
        let zero = phi_star(&a, &identity(d), &vec![ZERO; a.len()]).unwrap();
        assert_eq!(zero, CMat::zeros(d, d));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let b = MeasurableSet::random(&a, &mut rng);
            let chi = b.indicator(&a);
            assert_eq!(psi_hat_star(&a, &chi).unwrap(), povm_of_set(&a, &b).unwrap());
            let chi_c: Vec<Complex64> = chi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let via_phi = phi_star(&a, &identity(d), &chi_c).unwrap();
            assert!(max_abs_diff(&via_phi, &povm_of_set(&a, &b).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn duality_and_positivity() {
        let (_, a) = setup(YMode::FiniteGrid, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let rho = sample::state(a.dim(), &mut rng);
            let x = sample::complex_matrix(a.dim(), a.dim(), &mut rng);
            let f = sample::complex_function(a.len(), &mut rng);
            let lhs = (&rho * phi_star(&a, &x, &f).unwrap()).trace();
            let rhs = phi_predual(&a, &rho).unwrap().pair(&x, &f).unwrap();
            let fmax = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((lhs - rhs).norm() <= 1e-10 * op_norm(&x) * fmax);

            let p = sample::psd(a.dim(), &mut rng);
            let g: Vec<Complex64> = sample::nonnegative_function(a.len(), &mut rng)
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect();
            let img = phi_star(&a, &p, &g).unwrap();
            assert!(hermitian_eigvals(&img)[0] >= -1e-10 * hs_norm(&p));
        }
    }

    #[test]
    fn predual_of_h3_state() {
        let (m, a) = setup(YMode::ExactMean, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = sample::state_on(&m.split.p3, &mut rng);
        let sf = phi_predual(&a, &rho).unwrap();
        for e in &sf.entries[..a.pt_id()] {
            assert!(hs_norm(e) < 1e-14);
        }
        assert!((sf.total_trace() - 1.0).abs() < 1e-12);
        let p = psi_hat(&a, &rho).unwrap();
        assert!((p[a.pt_id()] - 1.0).abs() < 1e-12);
        assert!(validate_state(&(identity(3) * Complex64::new(0.5, 0.0))).is_err());
    }

    #[test]
    fn interior_state_has_unit_mass() {
        let (_, a) = setup(YMode::ExactMean, 8);
        let interior = a.interior();
        let rho = interior.matrix().unscale(interior.rank() as f64);
        let sf = phi_predual(&a, &rho).unwrap();
        assert!((sf.total_trace() - 1.0).abs() < 1e-8);
        let p = psi_hat(&a, &rho).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(p.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn lowest_plus_level_distribution() {
        let (m, a) = setup(YMode::ExactMean, 8);
        let v = &m.basis.plus[0].amplitudes;
        let p = psi_hat(&a, &outer(v, v)).unwrap();
        // Only component one carries |1,+>; at k = 0 the entry is w_j.
        for (id, atom) in a.atoms().iter().enumerate() {
            match atom.component {
                Component::One => assert!((p[id] - atom.weight).abs() < 1e-14),
                _ => assert!(p[id].abs() < 1e-14),
            }
        }
    }

    #[test]
    fn kraus_reproduces_measurement() {
        let (_, a) = setup(YMode::ExactMean, 4);
        let (ch, labels) = kraus_of_psi_hat(&a).unwrap();
        assert_eq!(labels.len(), ch.len());
        let total = povm_of_set(&a, &MeasurableSet::all(&a)).unwrap();
        assert!(max_abs_diff(&ch.kraus_sum(), &total) < 1e-13);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = sample::state(a.dim(), &mut rng);
        let out = ch.apply(&rho);
        let p = psi_hat(&a, &rho).unwrap();
        for (id, v) in p.iter().enumerate() {
            assert!((out[(id, id)].re - v).abs() < 1e-10);
        }
        assert!(max_abs_diff(&out, &CMat::from_diagonal(&out.diagonal())) < 1e-14);
    }

    #[test]
    fn single_identity_atom_kraus() {
        let (m, a) = setup(YMode::ExactMean, 2);
        let atom = PovmAtom::from_density(Component::One, Some(0), None, (Some(1.0), None), 1.0, identity(3)).unwrap();
        assert_eq!(atom.rank(), 3);
        let _ = (m, a);
        let grid = setup(YMode::FiniteGrid, 2).1;
        let (ch, _) = kraus_of_psi_hat(&grid).unwrap();
        assert_eq!(ch.len(), grid.pt_id() + grid.k0);
    }

    #[test]
    fn complementary_exchange_identity() {
        let (_, a) = setup(YMode::FiniteGrid, 2);
        let (ch, _) = kraus_of_psi_hat(&a).unwrap();
        let comp = complementary(&ch);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = sample::state(a.dim(), &mut rng);
        let env = comp.apply(&rho);
        for j in [0, 3, ch.len() - 1] {
            for k in [0, 1, ch.len() - 2] {
                let want = (&ch.kraus()[j] * &rho * ch.kraus()[k].adjoint()).trace();
                assert!((env[(j, k)] - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn complementary_of_unitary_is_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = sample::hermitian(3, &mut rng);
        let (vals, vecs) = crate::operator::hermitian_eigen(&h);
        let phases = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            vals.iter().map(|&t| Complex64::from_polar(1.0, t)),
        ));
        let u = &vecs * phases * vecs.adjoint();
        let ch = KrausChannel::new(3, 3, vec![u]).unwrap();
        let c = complementary(&ch);
        assert_eq!(c.out_dim(), 1);
        let rho = sample::state(3, &mut rng);
        assert!((c.apply(&rho)[(0, 0)] - rho.trace()).norm() < 1e-12);
        let back = complementary(&c);
        let g1 = graph_of_channel(&ch, DEFAULT_RANK_TOL).unwrap();
        let g2 = graph_of_channel(&back, DEFAULT_RANK_TOL).unwrap();
        assert!(g1.distance(&g2).unwrap() < 1e-10);
    }

    #[test]
    fn channel_graph_fixtures() {
        let id = graph_of_channel(&KrausChannel::identity(4), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(id.dim(), 1);
        let mut p = CMat::zeros(4, 4);
        p[(0, 0)] = ONE;
        p[(2, 2)] = ONE;
        let ch = KrausChannel::new(4, 4, vec![p.clone(), identity(4) - &p]).unwrap();
        assert_eq!(graph_of_channel(&ch, DEFAULT_RANK_TOL).unwrap().dim(), 2);
        assert!(ch.tp_defect(None) < 1e-15);
    }

    #[test]
    fn complementary_graph_equals_atom_graph() {
        let (_, a) = setup(YMode::ExactMean, 8);
        let (ch, _) = kraus_of_psi_hat(&a).unwrap();
        let g = graph_of_channel(&complementary(&ch), DEFAULT_RANK_TOL).unwrap();
        let v = graph_from_atlas(&a, &SetFamily::atoms(&a), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(g.dim(), v.dim());
        assert!(g.distance(&v).unwrap() <= 1e-8);
    }

    #[test]
    fn complementary_generators_in_grid_atom_graph() {
        let (_, a) = setup(YMode::FiniteGrid, 2);
        let r = complementary_graph_identity(&a, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(r.channel_graph_dim, r.atom_graph_dim);
        assert!(r.generator_distance <= 1e-8, "{r:?}");
        let (_, e) = setup(YMode::ExactMean, 8);
        let r = complementary_graph_identity(&e, DEFAULT_RANK_TOL).unwrap();
        assert!(r.basis_distance <= 1e-8 && r.generator_distance <= 1e-8, "{r:?}");
    }

    #[test]
    fn choi_fixtures() {
        let r = choi_cp_check(&KrausChannel::identity(3), None).unwrap();
        assert!(r.passed());
        assert!((r.min_eigenvalue).abs() < 1e-14);
        let t = choi_cp_check(&Transpose(3), None).unwrap();
        assert!(!t.completely_positive);
        assert!((t.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn choi_of_measurement_channel() {
        let (_, a) = setup(YMode::ExactMean, 8);
        let (ch, _) = kraus_of_psi_hat(&a).unwrap();
        let r = choi_cp_check(&ch, Some(a.interior())).unwrap();
        assert!(r.completely_positive, "{}", r.min_eigenvalue);
        assert!(r.trace_preserving, "{}", r.tp_defect);
        assert_eq!(r.block_sizes.iter().sum::<usize>(), a.dim() * a.len());
        assert!(r.block_sizes.iter().filter(|&&s| s > 1).count() >= a.len());
        let full = choi_cp_check(&ch, None).unwrap();
        assert!(!full.trace_preserving);
    }
}
