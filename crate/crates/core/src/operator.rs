//! Dense complex operator algebra on the truncated Hilbert space.
//!
//! Operators are plain `DMatrix<Complex64>` values. The Hilbert-Schmidt
//! pairing `<A, B> = Tr(A* B)` turns the operator space into a Hilbert space;
//! [`OperatorSubspace`] keeps an orthonormal basis for finite spans of
//! operators (graphs and their compressions).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative Hermiticity tolerance used by [`is_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative tolerance on negative eigenvalues used by [`is_psd`].
pub const PSD_TOL: f64 = 1e-10;
/// Default relative rank tolerance for [`OperatorSubspace::orthonormalize`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Relative margin under which pivot candidates count as tied.
const PIVOT_SLACK: f64 = 1e-6;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_same_shape(a: &CMat, b: &CMat) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

#[inline]
fn dot_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

#[inline]
fn axpy_slices(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Real and imaginary parts of the flattened operators, one per column.
fn split_columns(ops: &[CMat]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ops[0].len();
    let mut re = DMatrix::zeros(n, ops.len());
    let mut im = DMatrix::zeros(n, ops.len());
    for (j, a) in ops.iter().enumerate() {
        for (i, z) in a.as_slice().iter().enumerate() {
            re[(i, j)] = z.re;
            im[(i, j)] = z.im;
        }
    }
    (re, im)
}

/// Hilbert-Schmidt inner product `Tr(A* B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Result<Complex64> {
    check_same_shape(a, b)?;
    Ok(dot_slices(a.as_slice(), b.as_slice()))
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn hs_norm(a: &CMat) -> f64 {
    a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

/// Spectral norm of an arbitrary square operator.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// Spectral norm of a Hermitian operator (largest eigenvalue modulus).
pub fn hermitian_norm(a: &CMat) -> f64 {
    hermitian_eigvals(a).iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

pub fn is_hermitian(a: &CMat) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = hs_norm(a);
    hs_norm(&(a - a.adjoint())) <= HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE)
}

fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

pub fn hermitian_eigvals(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitize(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Certified positive semidefiniteness: Hermitian and
/// `min eig >= -PSD_TOL * ||A||`.
pub fn is_psd(a: &CMat) -> bool {
    if !is_hermitian(a) {
        return false;
    }
    let ev = hermitian_eigvals(a);
    let scale = ev.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    ev.first().is_none_or(|&m| m >= -PSD_TOL * scale)
}

/// Positive square root through the spectral decomposition. Eigenvalues
/// inside the psd tolerance band below zero are clamped, and eigenvalues at
/// roundoff level (`<= 64 eps ||A||`) are treated as exact zeros.
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    if !is_hermitian(a) {
        return Err(Error::NotPsd {
            min_eigenvalue: f64::NAN,
        });
    }
    let (values, vectors) = hermitian_eigen(a);
    let scale = values.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    if let Some(&min) = values.first() {
        if min < -PSD_TOL * scale {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    let n = a.nrows();
    let mut out = CMat::zeros(n, n);
    let floor = 64.0 * f64::EPSILON * scale;
    for (k, &lambda) in values.iter().enumerate() {
        if lambda <= floor {
            continue;
        }
        let v = vectors.column(k);
        out += (v * v.adjoint()).scale(lambda.sqrt());
    }
    Ok(out)
}

/// An orthogonal projector certified idempotent and self-adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: CMat,
    rank: usize,
}

impl Projector {
    /// Certifies `matrix` as a projector to relative tolerance `tol`.
    pub fn new(matrix: CMat, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let scale = hs_norm(&matrix).max(1.0);
        let herm = hs_norm(&(&matrix - matrix.adjoint()));
        let idem = hs_norm(&(&matrix * &matrix - &matrix));
        let defect = herm.max(idem) / scale;
        if defect > tol {
            return Err(Error::NotProjector { defect });
        }
        // Trace of a projector is its rank.
        let rank = matrix.trace().re.round().max(0.0) as usize;
        Ok(Self { matrix, rank })
    }

    /// `P = sum v v*` over vectors that must be orthonormal to 1e-10.
    pub fn from_vectors(dim: usize, vectors: &[CVec]) -> Result<Self> {
        let mut defect = 0.0_f64;
        for (i, u) in vectors.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.len(),
                });
            }
            for (j, v) in vectors.iter().enumerate().skip(i) {
                let target = if i == j { ONE } else { ZERO };
                defect = defect.max((u.dotc(v) - target).norm());
            }
        }
        if defect > 1e-10 {
            return Err(Error::NotOrthonormal { defect });
        }
        let mut matrix = CMat::zeros(dim, dim);
        for v in vectors {
            matrix += outer(v, v);
        }
        Ok(Self {
            matrix,
            rank: vectors.len(),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `P A P`.
    pub fn sandwich(&self, a: &CMat) -> CMat {
        &self.matrix * a * &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
}

/// Finite span of operators with a Hilbert-Schmidt orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSubspace {
    dim: usize,
    basis: Vec<CMat>,
    rank_tol: f64,
    /// Smallest residual accepted during orthonormalization (one for bases
    /// supplied already orthonormal).
    min_residual: f64,
}

impl OperatorSubspace {
    /// Modified Gram-Schmidt with a mandatory second orthogonalization pass.
    ///
    /// Each input is scaled to unit HS norm first, so the drop rule
    /// "residual < tol * input norm" is independent of generator scale.
    /// Inputs that vanish identically are skipped. An all-zero input list
    /// yields an empty subspace.
    pub fn orthonormalize(ops: &[CMat], tol: f64) -> Result<Self> {
        Self::gram_schmidt(ops, tol, true)
    }

    /// Same as [`Self::orthonormalize`] but without rescaling, so an input
    /// is dropped once its residual falls below `tol` in absolute HS norm.
    /// Suited to images of an orthonormal basis, where small images mean
    /// the generator is (numerically) annihilated.
    pub fn orthonormalize_absolute(ops: &[CMat], tol: f64) -> Result<Self> {
        Self::gram_schmidt(ops, tol, false)
    }

    /// Gram-Schmidt with column pivoting: the remaining residual of largest
    /// norm is taken next and orthogonalized a second time before it is
    /// accepted, so the basis is built in order of decreasing independence
    /// and stops at the first residual below `tol`.
    fn gram_schmidt(ops: &[CMat], tol: f64, rescale: bool) -> Result<Self> {
        let first = ops.first().ok_or(Error::Empty("operator list"))?;
        let dim = first.nrows();
        let mut residuals: Vec<CMat> = Vec::with_capacity(ops.len());
        for op in ops {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.nrows(),
                });
            }
            let norm = hs_norm(op);
            if norm == 0.0 || !norm.is_finite() {
                continue;
            }
            residuals.push(if rescale { op.unscale(norm) } else { op.clone() });
        }
        let mut basis: Vec<CMat> = Vec::new();
        let mut min_residual = 1.0f64;
        while !residuals.is_empty() {
            let norms: Vec<f64> = residuals.iter().map(hs_norm).collect();
            let best = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if best < tol {
                break;
            }
            // Near-ties go to the earliest candidate, so an orthonormal input
            // keeps its order.
            let pivot = norms.iter().position(|&n| n >= best * (1.0 - PIVOT_SLACK)).unwrap_or(0);
            let mut q = residuals.remove(pivot);
            for b in &basis {
                let c = dot_slices(b.as_slice(), q.as_slice());
                axpy_slices(-c, b.as_slice(), q.as_mut_slice());
            }
            let qn = hs_norm(&q);
            if qn < tol {
                continue;
            }
            min_residual = min_residual.min(qn);
            let q = q.unscale(qn);
            for r in &mut residuals {
                let c = dot_slices(q.as_slice(), r.as_slice());
                axpy_slices(-c, q.as_slice(), r.as_mut_slice());
            }
            basis.push(q);
        }
        Ok(Self {
            dim,
            basis,
            rank_tol: tol,
            min_residual,
        })
    }

    /// Wraps a basis that is already orthonormal; the Gram matrix is checked
    /// to 1e-10.
    pub fn from_orthonormal(dim: usize, basis: Vec<CMat>, rank_tol: f64) -> Result<Self> {
        let s = Self {
            dim,
            basis,
            rank_tol,
            min_residual: 1.0,
        };
        for b in &s.basis {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.nrows(),
                });
            }
        }
        let defect = s.gram_defect();
        if defect > 1e-10 {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(s)
    }

    pub fn empty(dim: usize, rank_tol: f64) -> Self {
        Self {
            dim,
            basis: Vec::new(),
            rank_tol,
            min_residual: 1.0,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn min_residual(&self) -> f64 {
        self.min_residual
    }

    /// Roundoff level of the basis elements: an element normalized from a
    /// residual `r` carries errors of order `eps / r`, so linear images of
    /// the basis are only meaningful above `64 eps / min_residual`.
    pub fn noise_floor(&self) -> f64 {
        64.0 * f64::EPSILON / self.min_residual
    }

    /// Largest entry of `|Gram - I|`.
    pub fn gram_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let g = dot_slices(a.as_slice(), b.as_slice());
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, a: &CMat) -> Result<CMat> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.nrows(),
            });
        }
        let mut p = CMat::zeros(self.dim, self.dim);
        for q in &self.basis {
            let c = dot_slices(q.as_slice(), a.as_slice());
            axpy_slices(c, q.as_slice(), p.as_mut_slice());
        }
        Ok(p)
    }

    /// `||A - proj(A)||_HS`.
    pub fn distance_to(&self, a: &CMat) -> Result<f64> {
        let p = self.project(a)?;
        Ok(hs_norm(&(a - p)))
    }

    /// `||A - proj(A)|| <= tol * ||A||`.
    pub fn contains(&self, a: &CMat, tol: f64) -> Result<bool> {
        let d = self.distance_to(a)?;
        Ok(d <= tol * hs_norm(a))
    }

    /// `||A - proj(A)||_HS` for many operators at once. The coefficients and
    /// residuals are formed with real matrix products, and the residual is
    /// kept explicitly so small distances stay accurate.
    pub fn distances_to(&self, ops: &[CMat]) -> Result<Vec<f64>> {
        for a in ops {
            if a.nrows() != self.dim || a.ncols() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: a.nrows(),
                });
            }
        }
        if self.basis.is_empty() || ops.is_empty() {
            return Ok(ops.iter().map(hs_norm).collect());
        }
        let (qr, qi) = split_columns(&self.basis);
        let (ar, ai) = split_columns(ops);
        let cr = qr.tr_mul(&ar) + qi.tr_mul(&ai);
        let ci = qr.tr_mul(&ai) - qi.tr_mul(&ar);
        let rr = ar - (&qr * &cr - &qi * &ci);
        let ri = ai - (&qr * &ci + &qi * &cr);
        Ok((0..ops.len())
            .map(|j| (rr.column(j).norm_squared() + ri.column(j).norm_squared()).sqrt())
            .collect())
    }

    /// Symmetric subspace distance: the largest distance of a basis element
    /// of either space to the other space. Zero iff the spans coincide.
    pub fn distance(&self, other: &OperatorSubspace) -> Result<f64> {
        let a = other.distances_to(&self.basis)?;
        let b = self.distances_to(&other.basis)?;
        Ok(a.into_iter().chain(b).fold(0.0, f64::max))
    }
}

/// Matrix with exactly one nonzero entry `1` at `(i, j)`.
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> CMat {
    let mut e = CMat::zeros(dim, dim);
    e[(i, j)] = ONE;
    e
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}
