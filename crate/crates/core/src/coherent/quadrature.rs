//! Gauss rules matched to a power-moment sequence.
//!
//! The recurrence coefficients of the monic orthogonal polynomials are built
//! from the moments with the Chebyshev algorithm in extended precision. The
//! Jacobi matrix eigenvalues give starting nodes, which are then polished by
//! Newton iteration on the extended-precision recurrence; weights are the
//! Christoffel numbers.

use nalgebra::{DMatrix, SymmetricEigen};
use rug::Float;
use serde::{Deserialize, Serialize};

use super::Precision;
use crate::error::{Error, Result};

/// Relative moment tolerance a returned rule must meet.
pub const MOMENT_TOL: f64 = 1e-9;

/// Discrete positive measure `sum_j w_j delta(x - x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Number of nodes. Smaller than the requested order only when the
    /// moments come from a measure with fewer support points.
    pub order: usize,
    /// Moments the rule was matched against (`2 * requested order`).
    pub matched_moments: usize,
    /// `max_k |sum_j w_j x_j^k - c_k| / c_k` over the matched moments,
    /// evaluated in extended precision on the rounded nodes and weights.
    pub moment_error: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_j w_j f(x_j)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

struct Recurrence {
    alpha: Vec<Float>,
    beta: Vec<Float>,
}

enum ChebyshevOutcome {
    Full(Recurrence),
    /// `sigma_{k,k} <= 0` at this order; the coefficients before it are
    /// valid.
    Breakdown(usize, Recurrence),
}

fn chebyshev(mu: &[Float], n: usize, bits: u32) -> ChebyshevOutcome {
    let zero = Float::with_val(bits, 0);
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut prev: Vec<Float> = vec![zero.clone(); 2 * n];
    let mut cur: Vec<Float> = mu[..2 * n].to_vec();
    alpha.push(Float::with_val(bits, &mu[1] / &mu[0]));
    beta.push(mu[0].clone());
    for k in 1..n {
        let mut next = vec![zero.clone(); 2 * n];
        for l in k..(2 * n - k) {
            let mut s = Float::with_val(bits, &cur[l + 1]);
            s -= Float::with_val(bits, &alpha[k - 1] * &cur[l]);
            s -= Float::with_val(bits, &beta[k - 1] * &prev[l]);
            next[l] = s;
        }
        if next[k] <= 0 {
            return ChebyshevOutcome::Breakdown(k, Recurrence { alpha, beta });
        }
        let a = Float::with_val(bits, &next[k + 1] / &next[k]) - Float::with_val(bits, &cur[k] / &cur[k - 1]);
        let b = Float::with_val(bits, &next[k] / &cur[k - 1]);
        alpha.push(a);
        beta.push(b);
        prev = cur;
        cur = next;
    }
    ChebyshevOutcome::Full(Recurrence { alpha, beta })
}

/// Values `p_0(x)..p_{n-1}(x)`, `p_n(x)` and `p_n'(x)` of the monic family.
fn evaluate(rec: &Recurrence, n: usize, x: &Float, bits: u32) -> (Vec<Float>, Float, Float) {
    let mut values = Vec::with_capacity(n);
    let mut p_prev = Float::with_val(bits, 0);
    let mut p = Float::with_val(bits, 1);
    let mut d_prev = Float::with_val(bits, 0);
    let mut d = Float::with_val(bits, 0);
    for k in 0..n {
        values.push(p.clone());
        let shift = Float::with_val(bits, x - &rec.alpha[k]);
        let b = if k == 0 {
            Float::with_val(bits, 0)
        } else {
            rec.beta[k].clone()
        };
        let p_next = Float::with_val(bits, &shift * &p) - Float::with_val(bits, &b * &p_prev);
        let d_next = Float::with_val(bits, &p + &shift * &d) - Float::with_val(bits, &b * &d_prev);
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (values, p, d)
}

fn gauss_from_recurrence(rec: &Recurrence, n: usize, bits: u32) -> Result<(Vec<f64>, Vec<f64>)> {
    let jac = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            rec.alpha[i].to_f64()
        } else if i + 1 == j || j + 1 == i {
            rec.beta[i.max(j)].to_f64().sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    guesses.sort_by(f64::total_cmp);

    let mut h = Vec::with_capacity(n);
    let mut acc = Float::with_val(bits, 1);
    for b in rec.beta.iter().take(n) {
        acc *= b;
        h.push(acc.clone());
    }

    let stop = Float::with_val(bits, 1) >> (bits - 8);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for g in guesses {
        let mut x = Float::with_val(bits, g);
        for _ in 0..100 {
            let (_, p, d) = evaluate(rec, n, &x, bits);
            if d.is_zero() {
                break;
            }
            let step = Float::with_val(bits, &p / &d);
            x -= &step;
            let scale = Float::with_val(bits, x.clone().abs()).max(&Float::with_val(bits, 1));
            if Float::with_val(bits, step.abs()) <= Float::with_val(bits, &stop * &scale) {
                break;
            }
        }
        let (values, _, _) = evaluate(rec, n, &x, bits);
        let mut christoffel = Float::with_val(bits, 0);
        for (v, hk) in values.iter().zip(&h) {
            christoffel += Float::with_val(bits, v * v) / hk;
        }
        let w = Float::with_val(bits, christoffel.recip());
        nodes.push(x.to_f64());
        weights.push(w.to_f64());
    }
    for (i, w) in nodes.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::HankelNotPositive { order: i + 1 });
        }
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::HankelNotPositive { order: n });
    }
    Ok((nodes, weights))
}

/// Max relative moment deviation of `(nodes, weights)` against `mu`.
pub fn moment_error(nodes: &[f64], weights: &[f64], mu: &[Float]) -> f64 {
    let bits = mu.first().map_or(64, Float::prec);
    let xs: Vec<Float> = nodes.iter().map(|&x| Float::with_val(bits, x)).collect();
    let mut terms: Vec<Float> = weights.iter().map(|&w| Float::with_val(bits, w)).collect();
    let mut worst = 0.0f64;
    for m in mu {
        let sum = terms.iter().fold(Float::with_val(bits, 0), |acc, t| acc + t);
        let rel = Float::with_val(bits, (sum - m) / m).abs().to_f64();
        worst = worst.max(rel);
        for (t, x) in terms.iter_mut().zip(&xs) {
            *t *= x;
        }
    }
    worst
}

/// Gauss rule with `order` nodes reproducing `c_0..c_{2 order - 1}`.
///
/// A sequence whose Hankel matrices lose positive definiteness at some
/// order `k` is accepted only if the `k`-node rule already reproduces every
/// requested moment (a measure with `k` support points); otherwise the
/// failing order is reported.
pub fn moment_quadrature(c: &[Float], order: usize, precision: Precision) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::Empty("quadrature order"));
    }
    if c.len() < 2 * order {
        return Err(Error::InsufficientTruncation(format!(
            "order {order} needs {} moments, got {}",
            2 * order,
            c.len()
        )));
    }
    let bits = precision.bits();
    let mu: Vec<Float> = c[..2 * order].iter().map(|m| Float::with_val(bits, m)).collect();
    if mu.iter().any(|m| !m.is_sign_positive() || m.is_zero()) {
        return Err(Error::HankelNotPositive { order: 0 });
    }
    let (rec, n, breakdown) = match chebyshev(&mu, order, bits) {
        ChebyshevOutcome::Full(rec) => (rec, order, None),
        ChebyshevOutcome::Breakdown(k, rec) => (rec, k, Some(k)),
    };
    let (nodes, weights) = gauss_from_recurrence(&rec, n, bits)?;
    let err = moment_error(&nodes, &weights, &mu);
    if err > MOMENT_TOL || nodes.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::HankelNotPositive {
            order: breakdown.unwrap_or(order),
        });
    }
    Ok(QuadratureRule {
        order: nodes.len(),
        matched_moments: 2 * order,
        moment_error: err,
        alpha: rec.alpha.iter().take(n).map(Float::to_f64).collect(),
        beta: rec.beta.iter().take(n).map(Float::to_f64).collect(),
        nodes,
        weights,
    })
}
