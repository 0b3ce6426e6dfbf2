//! One-dimensional symmetry diagnostics for computed traces.

use crate::error::{Error, Result};
use crate::field::TraceField;
use crate::grid::SlabGrid;

/// Shape of a sampled profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Constant,
    NonMonotone,
}

impl Monotonicity {
    pub fn as_str(self) -> &'static str {
        match self {
            Monotonicity::Increasing => "increasing",
            Monotonicity::Constant => "constant",
            Monotonicity::NonMonotone => "non-monotone",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub omega: [f64; 2],
    pub residual: f64,
    pub monotone: Monotonicity,
    /// Binned profile `(t, u0(t))` along `omega`.
    pub profile: Vec<(f64, f64)>,
}

/// Classifies a profile with tolerance `tau = 1e-8 (max - min + 1e-300)`.
///
/// A profile is constant when every forward difference is within `tau` of
/// zero, and increasing when no difference falls below `-tau` and at least
/// one exceeds `tau`. Differences smaller than `tau` are treated as
/// unresolved: a saturated tail stops growing in double precision long
/// before it reaches the well value.
pub fn monotonicity_check(u0: &[f64]) -> Monotonicity {
    if u0.len() < 2 {
        return Monotonicity::Constant;
    }
    let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau = 1e-8 * (hi - lo + 1e-300);
    if u0.windows(2).all(|w| (w[1] - w[0]).abs() <= tau) {
        return Monotonicity::Constant;
    }
    if u0.windows(2).all(|w| w[1] - w[0] >= -tau) {
        Monotonicity::Increasing
    } else {
        Monotonicity::NonMonotone
    }
}

/// Largest decrease `max(u_i - u_{i+1}, 0)` between neighbours.
pub fn largest_drop(u0: &[f64]) -> f64 {
    u0.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

fn fd_axis(values: &[f64], n: usize, h: f64, idx: impl Fn(usize) -> usize) -> Vec<f64> {
    let v = |i: usize| values[idx(i)];
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (8.0 * (v(i + 1) - v(i - 1)) - (v(i + 2) - v(i - 2))) / (12.0 * h)
            } else if i >= 1 && i + 1 < n {
                (v(i + 1) - v(i - 1)) / (2.0 * h)
            } else if i == 0 {
                (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
            } else {
                (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * h)
            }
        })
        .collect()
}

/// Finite-difference gradient of a 2D trace: fourth-order central in the
/// interior, second order within two cells of a face.
pub fn trace_gradient(u: &TraceField) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = u.grid();
    if grid.dim() != 2 {
        return Err(Error::InvalidParameter(
            "direction fitting needs a two-dimensional trace".into(),
        ));
    }
    let n = grid.nx();
    let h = grid.spacing();
    let vals = u.values();
    let mut gx = vec![0.0; n * n];
    let mut gy = vec![0.0; n * n];
    for j in 0..n {
        let col = fd_axis(vals, n, h, |i| i * n + j);
        for i in 0..n {
            gx[i * n + j] = col[i];
        }
    }
    for i in 0..n {
        let row = fd_axis(vals, n, h, |j| i * n + j);
        gy[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    Ok((gx, gy))
}

/// Principal eigenvector of the averaged gradient outer product, signed so
/// that the mean directional derivative is non-negative.
pub fn fit_direction(u: &TraceField) -> Result<[f64; 2]> {
    let (gx, gy) = trace_gradient(u)?;
    let n = gx.len() as f64;
    let jxx = gx.iter().map(|g| g * g).sum::<f64>() / n;
    let jyy = gy.iter().map(|g| g * g).sum::<f64>() / n;
    let jxy = gx.iter().zip(&gy).map(|(a, b)| a * b).sum::<f64>() / n;
    if !(jxx + jyy > 0.0) {
        return Err(Error::ConstantField);
    }
    let gap = ((jxx - jyy).powi(2) + 4.0 * jxy * jxy).sqrt();
    if gap <= 1e-12 * (jxx + jyy) {
        return Ok([1.0, 0.0]);
    }
    let theta = 0.5 * (2.0 * jxy).atan2(jxx - jyy);
    let mut omega = [theta.cos(), theta.sin()];
    let mean_dir = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| a * omega[0] + b * omega[1])
        .sum::<f64>();
    if mean_dir < 0.0 {
        omega = [-omega[0], -omega[1]];
    }
    Ok(omega)
}

/// Bin means of `u` along `omega`.
///
/// The bin width is the projected spacing `h max(|omega_1|, |omega_2|)` of
/// consecutive nodes along the grid axis closest to `omega`, and bins are
/// centred on the projections of that axis' nodes. Each bin reports the
/// mean projection and mean value of its nodes.
pub fn one_d_profile(u: &TraceField, omega: [f64; 2]) -> Vec<(f64, f64)> {
    let grid = u.grid();
    let (t, width, t0) = projections(grid, omega);
    let k = |ti: f64| ((ti - t0) / width).round() as i64;
    let kmin = t.iter().map(|&ti| k(ti)).min().unwrap_or(0);
    let kmax = t.iter().map(|&ti| k(ti)).max().unwrap_or(0);
    let nb = (kmax - kmin + 1) as usize;
    let mut cnt = vec![0usize; nb];
    let mut st = vec![0.0; nb];
    let mut su = vec![0.0; nb];
    for (ti, ui) in t.iter().zip(u.values()) {
        let b = (k(*ti) - kmin) as usize;
        cnt[b] += 1;
        st[b] += ti;
        su[b] += ui;
    }
    (0..nb)
        .filter(|&b| cnt[b] > 0)
        .map(|b| (st[b] / cnt[b] as f64, su[b] / cnt[b] as f64))
        .collect()
}

fn projections(grid: &SlabGrid, omega: [f64; 2]) -> (Vec<f64>, f64, f64) {
    let h = grid.spacing();
    let t: Vec<f64> = (0..grid.trace_len())
        .map(|i| {
            let [x, y] = grid.node_coords(i);
            if grid.dim() == 1 {
                x * omega[0].signum()
            } else {
                omega[0] * x + omega[1] * y
            }
        })
        .collect();
    let width = if grid.dim() == 1 {
        h
    } else {
        h * omega[0].abs().max(omega[1].abs())
    };
    let t0 = t[0];
    (t, width, t0)
}

fn interpolate(profile: &[(f64, f64)], t: f64) -> f64 {
    match profile.len() {
        0 => 0.0,
        1 => profile[0].1,
        _ => {
            let pos = profile.partition_point(|p| p.0 < t);
            let i = pos.clamp(1, profile.len() - 1);
            let (t0, u0) = profile[i - 1];
            let (t1, u1) = profile[i];
            u0 + (u1 - u0) * (t - t0) / (t1 - t0)
        }
    }
}

/// `||u - u0(omega . x)||_2 / ||u - mean(u)||_2` with `u0` the linear
/// interpolant of the bin means.
pub fn one_d_residual(u: &TraceField, omega: [f64; 2]) -> f64 {
    let profile = one_d_profile(u, omega);
    let (t, _, _) = projections(u.grid(), omega);
    let vals = u.values();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let num: f64 = t
        .iter()
        .zip(vals)
        .map(|(ti, ui)| (ui - interpolate(&profile, *ti)).powi(2))
        .sum();
    let den: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
    if den == 0.0 {
        return 0.0;
    }
    (num / den).sqrt()
}

/// Fitted direction, residual, and profile shape.
pub fn symmetry_report(u: &TraceField) -> Result<SymmetryReport> {
    let omega = fit_direction(u)?;
    let residual = one_d_residual(u, omega);
    let profile = one_d_profile(u, omega);
    let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
    Ok(SymmetryReport {
        omega,
        residual,
        monotone: monotonicity_check(&values),
        profile,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;

    fn grid2(n: usize) -> Arc<SlabGrid> {
        Arc::new(SlabGrid::new(2, 20.0, n, 3, 1.0).unwrap())
    }

    fn along(grid: &Arc<SlabGrid>, omega: [f64; 2]) -> TraceField {
        TraceField::from_fn(grid.clone(), |x| (omega[0] * x[0] + omega[1] * x[1]).tanh()).unwrap()
    }

    #[test]
    fn monotonicity_flags() {
        assert_eq!(
            monotonicity_check(&[0.0, 1.0, 2.0, 3.0]),
            Monotonicity::Increasing
        );
        assert_eq!(monotonicity_check(&[2.0, 2.0, 2.0]), Monotonicity::Constant);
        assert_eq!(
            monotonicity_check(&[0.0, 1.0, 0.9, 2.0]),
            Monotonicity::NonMonotone
        );
        assert_eq!(
            monotonicity_check(&[3.0, 2.0, 1.0]),
            Monotonicity::NonMonotone
        );
        // Saturated tails may be flat.
        assert_eq!(
            monotonicity_check(&[-1.0, -1.0, -0.5, 0.5, 1.0, 1.0]),
            Monotonicity::Increasing
        );
        // Dips below tau are unresolved, larger ones are not.
        assert_eq!(
            monotonicity_check(&[-1.0, -0.5, -0.5 - 1e-9, 1.0]),
            Monotonicity::Increasing
        );
        assert_eq!(
            monotonicity_check(&[-1.0, -0.5, -0.5 - 1e-7, 1.0]),
            Monotonicity::NonMonotone
        );
        assert_eq!(largest_drop(&[0.0, 1.0, 0.75, 2.0]), 0.25);
    }

    #[test]
    fn axis_and_diagonal_directions() {
        let g = grid2(64);
        let om = fit_direction(&along(&g, [1.0, 0.0])).unwrap();
        assert!((om[0] - 1.0).abs() < 1e-12 && om[1].abs() < 1e-12);
        let d = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let u = along(&g, d);
        let om = fit_direction(&u).unwrap();
        assert!((om[0] - d[0]).abs() < 1e-8 && (om[1] - d[1]).abs() < 1e-8);
        assert!(one_d_residual(&u, d) < 1e-12);
        assert!(one_d_residual(&along(&g, [1.0, 0.0]), [1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn orthogonal_direction_saturates() {
        let g = grid2(64);
        let u = along(&g, [1.0, 0.0]);
        let r = one_d_residual(&u, [0.0, 1.0]);
        assert!((r - 1.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn radial_bump_is_not_one_dimensional() {
        let g = grid2(64);
        let u = TraceField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) / 8.0).exp()).unwrap();
        let rep = symmetry_report(&u).unwrap();
        assert!(rep.residual > 0.1);
    }

    #[test]
    fn constant_field_has_no_direction() {
        let u = TraceField::constant(grid2(16), 1.0).unwrap();
        assert_eq!(fit_direction(&u), Err(Error::ConstantField));
    }

    #[test]
    fn tilted_profile_is_increasing() {
        let g = grid2(128);
        let th = PI / 6.0;
        let u = along(&g, [th.cos(), th.sin()]);
        let rep = symmetry_report(&u).unwrap();
        assert_eq!(rep.monotone, Monotonicity::Increasing);
        assert!(rep.residual < 0.02);
        assert!((rep.omega[1].atan2(rep.omega[0]) - th).abs() < 1e-3);
    }
}
