//! Smallest eigenvalue of the second variation
//! `Q(xi) = <S xi, xi> - <f'(u) xi, xi>` over test functions vanishing on
//! the pinned nodes.

use crate::error::{Error, Result};
use crate::extension::DtnOperator;
use crate::field::TraceField;
use crate::params::FractionalParams;

use super::minimize::SymbolSource;
use super::potential::Potential;

const MAX_OUTER: usize = 10_000;
const MAX_INNER: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    /// `||A x - value x||` for the unit eigenvector estimate, an upper bound
    /// on the distance to the spectrum.
    pub residual: f64,
    pub iterations: usize,
}

struct Form<'a> {
    op: &'a DtnOperator,
    potential_term: Vec<f64>,
    free: Vec<bool>,
}

impl Form<'_> {
    fn apply(&self, x: &[f64], shift: f64) -> Vec<f64> {
        let mut out = self.op.apply(x);
        for i in 0..out.len() {
            out[i] = if self.free[i] {
                out[i] + (shift - self.potential_term[i]) * x[i]
            } else {
                0.0
            };
        }
        out
    }

    fn precondition(&self, r: &[f64], shift: f64) -> Vec<f64> {
        let mut z = self.op.apply_shifted_inverse(r, shift);
        for (zi, &f) in z.iter_mut().zip(&self.free) {
            if !f {
                *zi = 0.0;
            }
        }
        z
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for `(A + shift) x = b` on the free
/// nodes.
fn pcg(form: &Form<'_>, b: &[f64], shift: f64, x0: &[f64]) -> Vec<f64> {
    let mut x = x0.to_vec();
    let ax = form.apply(&x, shift);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let target = 1e-14 * norm(b).max(f64::MIN_POSITIVE);
    let mut z = form.precondition(&r, shift);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..MAX_INNER {
        if norm(&r) <= target {
            break;
        }
        let ap = form.apply(&p, shift);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = form.precondition(&r, shift);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

/// Smallest eigenvalue of the second variation at trace `u`, restricted to
/// nodes where `free` is true, by shifted inverse iteration.
///
/// The shift `sigma = max(0, max f'(u)) + 1` makes `A + sigma` positive
/// definite. Each inverse step is a conjugate-gradient solve preconditioned
/// by `(S + sigma)^-1`. Iteration stops when the eigen-residual is at most
/// `tol`, which bounds the error of the returned value by `tol`.
pub fn second_variation_min_eig(
    u: &TraceField,
    free: Option<&[bool]>,
    pot: &Potential,
    params: &FractionalParams,
    symbol: SymbolSource,
    tol: f64,
) -> Result<EigenEstimate> {
    let grid = u.grid();
    let op = symbol.operator(grid, params)?;
    let free = match free {
        Some(f) => {
            if f.len() != grid.trace_len() {
                return Err(Error::ShapeMismatch {
                    expected: grid.trace_len(),
                    got: f.len(),
                });
            }
            f.to_vec()
        }
        None => vec![true; grid.trace_len()],
    };
    if !free.iter().any(|&f| f) {
        return Err(Error::InvalidParameter("no free nodes".into()));
    }
    let potential_term: Vec<f64> = u
        .values()
        .iter()
        .map(|&t| pot.force_derivative(t))
        .collect();
    let sigma = potential_term
        .iter()
        .zip(&free)
        .filter(|(_, &f)| f)
        .map(|(d, _)| *d)
        .fold(0.0f64, f64::max)
        + 1.0;
    let form = Form {
        op: &op,
        potential_term,
        free,
    };
    let mut x: Vec<f64> = form
        .free
        .iter()
        .map(|&f| if f { 1.0 } else { 0.0 })
        .collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    for it in 0..MAX_OUTER {
        let ax = form.apply(&x, 0.0);
        let value = dot(&x, &ax);
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, xi)| a - value * xi).collect();
        let residual = norm(&r);
        if residual <= tol {
            return Ok(EigenEstimate {
                value,
                residual,
                iterations: it,
            });
        }
        // Warm start from the previous iterate scaled by 1/(value + sigma).
        let guess: Vec<f64> = x.iter().map(|v| v / (value + sigma)).collect();
        let y = pcg(&form, &x, sigma, &guess);
        let ny = norm(&y);
        if !(ny > 0.0 && ny.is_finite()) {
            break;
        }
        x = y.iter().map(|v| v / ny).collect();
    }
    Err(Error::EigenNoConvergence {
        iterations: MAX_OUTER,
    })
}
