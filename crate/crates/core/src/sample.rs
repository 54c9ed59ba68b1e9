//! Seeded random inputs for property checks.

use num_complex::Complex64;
use rand::Rng;

use crate::operator::{CMat, Projector};

fn entry<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Entries uniform in the unit square of the complex plane.
pub fn complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| entry(rng))
}

pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = complex_matrix(dim, dim, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `G G*` for a random square `G`.
pub fn psd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = complex_matrix(dim, dim, rng);
    &g * g.adjoint()
}

/// Random full-rank density operator.
pub fn state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let p = psd(dim, rng);
    let tr = p.trace().re;
    p.unscale(tr)
}

/// Random density operator supported in the range of `p`.
pub fn state_on<R: Rng + ?Sized>(p: &Projector, rng: &mut R) -> CMat {
    let g = p.sandwich(&psd(p.dim(), rng));
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = h.trace().re;
    h.unscale(tr)
}

/// Values uniform in `[0, 1)`.
pub fn nonnegative_function<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.0..1.0)).collect()
}

/// Complex values with modulus below `sqrt(2)`.
pub fn complex_function<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    (0..len).map(|_| entry(rng)).collect()
}
