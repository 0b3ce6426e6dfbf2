//! Constrained minimization of the discrete energy.
//!
//! For a fixed trace the interior of the slab is minimized exactly by the
//! extension, so the slab energy reduces to
//!
//! ```text
//! J(u) = 1/2 <S u, u> + h^n sum_i F(u_i)
//! ```
//!
//! with `S` the Dirichlet-to-Neumann multiplier. The descent runs on the
//! trace: gradient `S u - f(u)` on the free nodes, preconditioned by
//! `(S + eps)^-1`, projected onto `[lo, hi]`, and accepted only when the
//! energy change is non-positive. The energy change of a step `d` is
//! evaluated as `<S u, d> + 1/2 <d, S d> - sum d_i mean f(u_i + theta d_i)`,
//! which stays accurate when the step is tiny compared to `J`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::extension::{apply_la_spectral, solve_extension, DtnOperator};
use crate::field::{SlabField, TraceField};
use crate::grid::{Lateral, SlabGrid};
use crate::params::FractionalParams;
use crate::symmetry::{largest_drop, monotonicity_check, Monotonicity};

use super::potential::Potential;

/// Which multiplier realizes `L_a` on the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolSource {
    /// Closed-form symbol (exact vertical resolution).
    #[default]
    ClosedForm,
    /// Surface flux of the finite-volume vertical scheme on the grid's mesh.
    Discrete,
}

impl SymbolSource {
    pub fn operator(self, grid: &SlabGrid, params: &FractionalParams) -> Result<DtnOperator> {
        match self {
            SymbolSource::ClosedForm => DtnOperator::spectral(grid, params),
            SymbolSource::Discrete => DtnOperator::discrete(grid, params),
        }
    }
}

/// Pinned lateral data. Free-node entries of `values` are the initial
/// iterate.
#[derive(Debug, Clone)]
pub struct LateralData {
    values: TraceField,
    pinned: Vec<bool>,
}

impl LateralData {
    pub fn new(values: TraceField, pinned: Vec<bool>) -> Result<Self> {
        if pinned.len() != values.values().len() {
            return Err(Error::ShapeMismatch {
                expected: values.values().len(),
                got: pinned.len(),
            });
        }
        Ok(Self { values, pinned })
    }

    /// Pins every node within `width` cells of a face of the box.
    pub fn band(values: TraceField, width: usize) -> Self {
        let pinned = band_mask(values.grid(), width);
        Self { values, pinned }
    }

    pub fn values(&self) -> &TraceField {
        &self.values
    }

    pub fn pinned(&self) -> &[bool] {
        &self.pinned
    }

    pub fn grid(&self) -> &Arc<SlabGrid> {
        self.values.grid()
    }
}

/// Nodes within `width` cells of a face.
pub fn band_mask(grid: &SlabGrid, width: usize) -> Vec<bool> {
    let n = grid.nx();
    let near = |i: usize| i < width || i + width >= n;
    (0..grid.trace_len())
        .map(|idx| match grid.dim() {
            1 => near(idx),
            _ => near(idx / n) || near(idx % n),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!(
                "empty constraint box [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Stop when the projected gradient sup norm falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Preconditioner shift `eps` in `(S + eps)^-1`.
    pub shift: f64,
    /// Largest step multiplier the line search may reach.
    pub max_step: f64,
    /// Restrict iterates to odd fields `u(-x) = -u(x)`.
    pub odd: bool,
    pub symbol: SymbolSource,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
            shift: 2.0,
            max_step: 4.0,
            odd: false,
            symbol: SymbolSource::ClosedForm,
        }
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct Minimization {
    pub trace: TraceField,
    pub pinned: Vec<bool>,
    pub iterations: usize,
    /// Final projected-gradient sup norm.
    pub residual: f64,
    /// Reduced energy `J` after every accepted step, starting with the
    /// initial iterate.
    pub energies: Vec<f64>,
}

impl Minimization {
    /// The slab field: the extension of the minimizing trace.
    pub fn slab(&self, params: &FractionalParams) -> Result<SlabField> {
        solve_extension(&self.trace, params)
    }
}

/// `J(u) = 1/2 <S u, u> + h^n sum F(u_i)` for a given multiplier.
pub fn reduced_energy(u: &TraceField, op: &DtnOperator, pot: &Potential) -> f64 {
    let su = op.apply(u.values());
    let quad: f64 = su.iter().zip(u.values()).map(|(a, b)| a * b).sum();
    let pot_sum: f64 = u.values().iter().map(|&t| pot.energy(t)).sum();
    u.grid().cell_measure() * (0.5 * quad + pot_sum)
}

fn reverse_odd(u: &mut [f64]) {
    let n = u.len();
    for i in 0..n / 2 {
        let a = 0.5 * (u[i] - u[n - 1 - i]);
        u[i] = a;
        u[n - 1 - i] = -a;
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }
}

/// Gradient of `J / h^n` (zero on pinned nodes) and its projected sup
/// norm, which ignores nodes held at a bound by the gradient.
fn projected_gradient(
    u: &[f64],
    lu: &[f64],
    pinned: &[bool],
    bounds: Bounds,
    pot: &Potential,
) -> (Vec<f64>, f64) {
    let mut worst = 0.0f64;
    let g = u
        .iter()
        .zip(lu)
        .zip(pinned)
        .map(|((&t, &l), &p)| {
            if p {
                return 0.0;
            }
            let gi = l - pot.force(t);
            if !((t <= bounds.lo && gi > 0.0) || (t >= bounds.hi && gi < 0.0)) {
                worst = worst.max(gi.abs());
            }
            gi
        })
        .collect();
    (g, worst)
}

/// Two-metric projection direction. Nodes within `eps` of a bound that the
/// gradient pushes against take a diagonal step `-g / shift`; the rest take
/// the preconditioned step restricted to them. `eps` shrinks with the
/// projected step, so the split settles onto the true active set.
fn search_direction(
    u: &[f64],
    g: &[f64],
    pinned: &[bool],
    bounds: Bounds,
    op: &DtnOperator,
    shift: f64,
) -> Vec<f64> {
    let step = u
        .iter()
        .zip(g)
        .map(|(&t, &gi)| (t - (t - gi).clamp(bounds.lo, bounds.hi)).abs())
        .fold(0.0, f64::max);
    let eps = step.min(1e-2 * (bounds.hi - bounds.lo));
    let near: Vec<bool> = u
        .iter()
        .zip(g)
        .map(|(&t, &gi)| (t <= bounds.lo + eps && gi > 0.0) || (t >= bounds.hi - eps && gi < 0.0))
        .collect();
    let free_g: Vec<f64> = g
        .iter()
        .zip(&near)
        .map(|(&gi, &n)| if n { 0.0 } else { gi })
        .collect();
    let mut dir = op.apply_shifted_inverse(&free_g, shift);
    for i in 0..dir.len() {
        dir[i] = if pinned[i] {
            0.0
        } else if near[i] {
            -g[i] / shift
        } else {
            -dir[i]
        };
    }
    dir
}

/// Minimizes `J` over traces equal to the pinned data and inside `bounds`.
pub fn minimize_energy(
    lateral: &LateralData,
    bounds: Bounds,
    pot: &Potential,
    params: &FractionalParams,
    opts: &MinimizeOptions,
) -> Result<Minimization> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} must be positive",
            opts.tol
        )));
    }
    let grid = lateral.grid().clone();
    let pinned = lateral.pinned().to_vec();
    let start = lateral.values().values();
    for (index, (&value, &p)) in start.iter().zip(&pinned).enumerate() {
        if p && (value < bounds.lo || value > bounds.hi) {
            return Err(Error::InfeasibleBoundary {
                index,
                value,
                lo: bounds.lo,
                hi: bounds.hi,
            });
        }
    }
    let op = opts.symbol.operator(&grid, params)?;
    let cell = grid.cell_measure();
    let mut u: Vec<f64> = start
        .iter()
        .zip(&pinned)
        .map(|(&t, &p)| if p { t } else { t.clamp(bounds.lo, bounds.hi) })
        .collect();
    if opts.odd {
        reverse_odd(&mut u);
    }
    let mut lu = op.apply(&u);
    let mut energy = reduced_energy(&TraceField::new(grid.clone(), u.clone())?, &op, pot);
    let mut energies = vec![energy];
    let mut alpha: f64 = 1.0;
    let mut iterations = 0;
    loop {
        if iterations % 64 == 0 {
            lu = op.apply(&u);
        }
        let (g, residual) = projected_gradient(&u, &lu, &pinned, bounds, pot);
        if residual <= opts.tol {
            // Confirm against a fresh operator application.
            lu = op.apply(&u);
            let (_, fresh) = projected_gradient(&u, &lu, &pinned, bounds, pot);
            if fresh <= opts.tol {
                return Ok(Minimization {
                    trace: TraceField::new(grid, u)?,
                    pinned,
                    iterations,
                    residual: fresh,
                    energies,
                });
            }
            continue;
        }
        if iterations >= opts.max_iter {
            return Err(Error::IterationCap {
                max_iter: opts.max_iter,
                residual,
            });
        }
        let dir = search_direction(&u, &g, &pinned, bounds, &op, opts.shift);
        loop {
            let mut trial: Vec<f64> = u
                .iter()
                .zip(&dir)
                .zip(&pinned)
                .map(|((&t, &d), &p)| {
                    if p {
                        t
                    } else {
                        (t + alpha * d).clamp(bounds.lo, bounds.hi)
                    }
                })
                .collect();
            if opts.odd {
                reverse_odd(&mut trial);
            }
            let step: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let ls = op.apply(&step);
            let mut de = 0.0;
            for i in 0..u.len() {
                let d = step[i];
                de += d * (lu[i] + 0.5 * ls[i] - pot.mean_force(u[i], d));
            }
            de *= cell;
            if de <= 0.0 {
                u = trial;
                for (l, s) in lu.iter_mut().zip(&ls) {
                    *l += s;
                }
                energy += de;
                energies.push(energy);
                alpha = (alpha * 1.5).min(opts.max_step);
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-30 {
                return Err(Error::LineSearchStall {
                    iteration: iterations,
                    residual,
                });
            }
        }
        iterations += 1;
    }
}

/// Options for [`compute_layer`].
#[derive(Debug, Clone)]
pub struct LayerOptions {
    pub minimize: MinimizeOptions,
    /// Width of the pinned band at each end, in cells.
    pub band: usize,
    pub bounds: Bounds,
}

impl Default for LayerOptions {
    fn default() -> Self {
        Self {
            minimize: MinimizeOptions {
                odd: true,
                ..MinimizeOptions::default()
            },
            band: 2,
            bounds: Bounds { lo: -2.0, hi: 2.0 },
        }
    }
}

/// Layer trace for the double well on a one-dimensional grid.
pub fn compute_layer(params: &FractionalParams, grid: &SlabGrid, tol: f64) -> Result<Minimization> {
    let mut opts = LayerOptions::default();
    opts.minimize.tol = tol;
    compute_layer_with(params, grid, &Potential::double_well(), &opts)
}

/// Minimizes over odd traces pinned to `-1` and `+1` on the end bands,
/// starting from a clipped linear ramp under reflecting lateral closure.
/// The odd constraint replaces `u(0) = 0`, which has no node on the
/// cell-centred grid.
pub fn compute_layer_with(
    params: &FractionalParams,
    grid: &SlabGrid,
    pot: &Potential,
    opts: &LayerOptions,
) -> Result<Minimization> {
    if grid.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "layer computation needs a one-dimensional grid, got dimension {}",
            grid.dim()
        )));
    }
    let grid = Arc::new(grid.clone().with_lateral(Lateral::Reflecting));
    let half = 0.5 * grid.period();
    let n = grid.nx();
    let band = opts.band.max(1);
    let init = TraceField::from_fn(grid.clone(), |x| (x[0] / half).clamp(-1.0, 1.0))?;
    let mut values = init.into_values();
    for (i, v) in values.iter_mut().enumerate() {
        if i < band {
            *v = -1.0;
        } else if i + band >= n {
            *v = 1.0;
        }
    }
    let lateral = LateralData::band(TraceField::new(grid, values)?, band);
    let result = minimize_energy(&lateral, opts.bounds, pot, params, &opts.minimize)?;
    if monotonicity_check(result.trace.values()) != Monotonicity::Increasing {
        return Err(Error::NonMonotone {
            worst_drop: largest_drop(result.trace.values()),
        });
    }
    Ok(result)
}

/// Sup of `L_a u - f(u)` over the free nodes, with the closed-form symbol.
pub fn euler_lagrange_residual(
    u: &TraceField,
    pinned: &[bool],
    pot: &Potential,
    params: &FractionalParams,
) -> Result<f64> {
    let lu = apply_la_spectral(u, params)?;
    Ok(lu
        .values()
        .iter()
        .zip(u.values())
        .zip(pinned)
        .filter(|(_, &p)| !p)
        .map(|((l, &t), _)| (l - pot.force(t)).abs())
        .fold(0.0, f64::max))
}

/// The competitor equal to `well` on `B_R` and to `u` outside `B_{R+width}`,
/// with a linear radial blend in between.
pub fn cutoff_competitor(u: &TraceField, radius: f64, width: f64, well: f64) -> Result<TraceField> {
    let grid = u.grid().clone();
    let values = (0..grid.trace_len())
        .map(|i| {
            let [x, y] = grid.node_coords(i);
            let r = x.hypot(y);
            let eta = (1.0 - (r - radius) / width).clamp(0.0, 1.0);
            eta * well + (1.0 - eta) * u.values()[i]
        })
        .collect();
    TraceField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(l: f64, nx: usize) -> Arc<SlabGrid> {
        Arc::new(
            SlabGrid::new(1, l, nx, 9, 1.0)
                .unwrap()
                .with_lateral(Lateral::Reflecting),
        )
    }

    #[test]
    fn well_boundary_gives_well() {
        let p = FractionalParams::from_s(0.5).unwrap();
        let g = grid1(20.0, 64);
        let start = TraceField::from_fn(g.clone(), |x| 0.3 * (x[0]).sin()).unwrap();
        let mut vals = start.into_values();
        let mask = band_mask(&g, 2);
        for (v, &p) in vals.iter_mut().zip(&mask) {
            if p {
                *v = 1.0;
            }
        }
        let lat = LateralData::new(TraceField::new(g, vals).unwrap(), mask).unwrap();
        let r = minimize_energy(
            &lat,
            Bounds::new(-1.0, 1.0).unwrap(),
            &Potential::double_well(),
            &p,
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(r.trace.values().iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn infeasible_data_is_rejected() {
        let p = FractionalParams::from_s(0.5).unwrap();
        let g = grid1(10.0, 16);
        let lat = LateralData::band(TraceField::constant(g, 1.5).unwrap(), 1);
        let err = minimize_energy(
            &lat,
            Bounds::new(-1.0, 1.0).unwrap(),
            &Potential::double_well(),
            &p,
            &MinimizeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleBoundary { index: 0, .. }));
        assert!(Bounds::new(1.0, -1.0).is_err());
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let p = FractionalParams::from_s(0.5).unwrap();
        let g = grid1(40.0, 128);
        let lat = LateralData::band(
            TraceField::from_fn(g, |x| (x[0] / 20.0).clamp(-1.0, 1.0)).unwrap(),
            2,
        );
        let opts = MinimizeOptions {
            max_iter: 3,
            ..MinimizeOptions::default()
        };
        let err = minimize_energy(
            &lat,
            Bounds::new(-2.0, 2.0).unwrap(),
            &Potential::double_well(),
            &p,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IterationCap { max_iter: 3, .. }));
    }

    #[test]
    fn small_layer_is_odd_monotone_and_beats_competitor() {
        let p = FractionalParams::from_s(0.5).unwrap();
        let g = SlabGrid::new(1, 30.0, 256, 9, 1.0).unwrap();
        let r = compute_layer(&p, &g, 1e-9).unwrap();
        let u = r.trace.values();
        let n = u.len();
        for i in 0..n {
            assert!((u[i] + u[n - 1 - i]).abs() < 1e-12);
        }
        assert!(r.energies.windows(2).all(|w| w[1] <= w[0]));
        let op = DtnOperator::spectral(r.trace.grid(), &p).unwrap();
        let pot = Potential::double_well();
        let e = reduced_energy(&r.trace, &op, &pot);
        let w = cutoff_competitor(&r.trace, 5.0, 1.0, 1.0).unwrap();
        assert!(e < reduced_energy(&w, &op, &pot));
        assert!((e - r.energies.last().unwrap()).abs() < 1e-9);
    }
}
