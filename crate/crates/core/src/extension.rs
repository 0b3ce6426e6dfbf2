//! Extension of a trace into the slab and two realizations of `L_a`.
//!
//! The horizontal direction is spectral and the vertical direction uses the
//! finite-volume operator of [`crate::vertical`], so every Fourier mode is an
//! independent tridiagonal problem. [`apply_la_flux`] reads the discrete
//! surface flux of the computed extension; [`apply_la_spectral`] multiplies
//! by the closed-form symbol.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{SlabField, TraceField};
use crate::grid::{Lateral, SlabGrid};
use crate::params::FractionalParams;
use crate::spectral::Horizontal;
use crate::symbol::symbol_value;
use crate::vertical::VerticalOperator;

/// Fourier coefficients of a trace on the transform grid.
#[derive(Debug, Clone)]
pub struct ModeCoefficients {
    grid: Arc<SlabGrid>,
    coeffs: Vec<Complex64>,
}

impl ModeCoefficients {
    pub fn from_trace(u: &TraceField) -> Self {
        let horiz = Horizontal::new(u.grid());
        Self {
            grid: u.grid().clone(),
            coeffs: horiz.modes(u.values()),
        }
    }

    pub fn grid(&self) -> &Arc<SlabGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Largest `|c(-k) - conj(c(k))|`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let e = Horizontal::new(&self.grid).ext();
        let neg = |m: usize| (e - m) % e;
        let partner = |idx: usize| match self.grid.dim() {
            1 => neg(idx),
            _ => neg(idx / e) * e + neg(idx % e),
        };
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let worst = (0..self.coeffs.len())
            .map(|i| (self.coeffs[partner(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0f64, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    pub fn to_trace(&self) -> Result<TraceField> {
        let horiz = Horizontal::new(&self.grid);
        TraceField::new(self.grid.clone(), horiz.synthesize(self.coeffs.clone()))
    }
}

/// Precomputed per-mode multiplier for a fixed grid.
#[derive(Debug)]
pub struct DtnOperator {
    horiz: Horizontal,
    table: Vec<f64>,
}

impl DtnOperator {
    /// Multiplier `S_s(|xi|)` from the closed form.
    pub fn spectral(grid: &SlabGrid, params: &FractionalParams) -> Result<Self> {
        let horiz = Horizontal::new(grid);
        let table = horiz.try_radial_table(|xi| symbol_value(xi, params))?;
        Ok(Self { horiz, table })
    }

    /// Multiplier given by the discrete surface flux of the vertical scheme.
    pub fn discrete(grid: &SlabGrid, params: &FractionalParams) -> Result<Self> {
        let horiz = Horizontal::new(grid);
        let vert = VerticalOperator::for_grid(grid, params)?;
        let table = horiz.try_radial_table(|xi| vert.dtn(xi))?;
        Ok(Self { horiz, table })
    }

    pub fn horizontal(&self) -> &Horizontal {
        &self.horiz
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.horiz.apply_table(u, &self.table)
    }

    /// Applies `1 / (S + shift)`.
    pub fn apply_shifted_inverse(&self, u: &[f64], shift: f64) -> Vec<f64> {
        let inv: Vec<f64> = self.table.iter().map(|s| 1.0 / (s + shift)).collect();
        self.horiz.apply_table(u, &inv)
    }
}

/// Discrete energy minimizer with trace `u`.
pub fn solve_extension(u: &TraceField, params: &FractionalParams) -> Result<SlabField> {
    let grid = u.grid();
    let horiz = Horizontal::new(grid);
    let vert = VerticalOperator::for_grid(grid, params)?;
    let (xi, class) = horiz.radial_classes();
    let profiles = xi
        .iter()
        .map(|x| Ok(vert.solve_mode(x * x)?.phi))
        .collect::<Result<Vec<_>>>()?;
    let modes = horiz.modes(u.values());
    let my = grid.my();
    let mut values = Vec::with_capacity(grid.slab_len());
    for j in 0..my {
        let level: Vec<Complex64> = modes
            .iter()
            .zip(&class)
            .map(|(c, &k)| c * profiles[k][j])
            .collect();
        values.extend(horiz.synthesize(level));
    }
    SlabField::new(grid.clone(), values)
}

fn neg_laplacian(horiz: &Horizontal, u: &[f64]) -> Vec<f64> {
    let table = horiz.radial_table(|k| k * k);
    horiz.apply_table(u, &table)
}

/// Sup norm of the discrete interior equation
/// `c_{j-1}(v_j - v_{j-1}) + c_j(v_j - v_{j+1}) - m_j Lap_x v_j`, together
/// with the top-row no-flux balance. Each row is divided by its diagonal
/// bound `c_{j-1} + c_j + m_j max|xi|^2`, since the conductances near the
/// surface grow like `y_1^(a-1)` on graded meshes.
pub fn extension_residual(v: &SlabField, params: &FractionalParams) -> Result<f64> {
    let grid = v.grid();
    let horiz = Horizontal::new(grid);
    let vert = VerticalOperator::for_grid(grid, params)?;
    let (c, m) = (vert.conductance(), vert.mass());
    let k2 = horiz.wavenumbers().iter().fold(0.0f64, |a, k| a.max(k * k)) * grid.dim() as f64;
    let my = grid.my();
    let mut worst = 0.0f64;
    for j in 1..my {
        let lap = neg_laplacian(&horiz, v.level(j));
        let below = v.level(j - 1);
        let here = v.level(j);
        let upper = if j + 1 < my { c[j] } else { 0.0 };
        let diag = c[j - 1] + upper + m[j] * k2;
        for i in 0..here.len() {
            let mut r = c[j - 1] * (here[i] - below[i]) + m[j] * lap[i];
            if j + 1 < my {
                r += c[j] * (here[i] - v.level(j + 1)[i]);
            }
            worst = worst.max(r.abs() / diag);
        }
    }
    Ok(worst)
}

/// `L_a u` as the discrete weighted surface flux of the extension.
///
/// The flux is the half-cell balance `c_0 (v_0 - v_1) - m_0 Lap_x v_0`,
/// which equals the first variation of the discrete Dirichlet energy with
/// respect to the trace. On strongly graded meshes `c_0` is large and
/// `v_0 - v_1` small, so the increment is synthesized from the per-mode
/// increments `1 - phi_1` rather than by subtracting the two levels.
pub fn apply_la_flux(u: &TraceField, params: &FractionalParams) -> Result<TraceField> {
    let grid = u.grid();
    let horiz = Horizontal::new(grid);
    let vert = VerticalOperator::for_grid(grid, params)?;
    let (c0, m0) = (vert.conductance()[0], vert.mass()[0]);
    let (xi, class) = horiz.radial_classes();
    let step = xi
        .iter()
        .map(|x| {
            let xi2 = x * x;
            Ok((vert.solve_mode(xi2)?.flux - xi2 * m0) / c0)
        })
        .collect::<Result<Vec<_>>>()?;
    let modes = horiz.modes(u.values());
    let increment = horiz.synthesize(
        modes
            .iter()
            .zip(&class)
            .map(|(c, &k)| c * step[k])
            .collect(),
    );
    let lap = neg_laplacian(&horiz, u.values());
    let out = increment
        .iter()
        .zip(&lap)
        .map(|(d, l)| c0 * d + m0 * l)
        .collect();
    TraceField::new(grid.clone(), out)
}

/// `L_a u` by multiplying each Fourier coefficient with the symbol.
pub fn apply_la_spectral(u: &TraceField, params: &FractionalParams) -> Result<TraceField> {
    let op = DtnOperator::spectral(u.grid(), params)?;
    TraceField::new(u.grid().clone(), op.apply(u.values()))
}

/// Discrete Dirichlet energy `1/2 sum y^a |grad v|^2` of a slab field over
/// the whole box. The horizontal part uses `<-Lap_x v, v>`.
pub fn dirichlet_energy(v: &SlabField, params: &FractionalParams) -> Result<f64> {
    let grid = v.grid();
    let horiz = Horizontal::new(grid);
    let vert = VerticalOperator::for_grid(grid, params)?;
    let (c, m) = (vert.conductance(), vert.mass());
    let mut total = 0.0;
    for j in 0..grid.my() {
        let lj = v.level(j);
        let lap = neg_laplacian(&horiz, lj);
        total += m[j] * lj.iter().zip(&lap).map(|(a, b)| a * b).sum::<f64>();
        if j + 1 < grid.my() {
            let up = v.level(j + 1);
            total += c[j] * lj.iter().zip(up).map(|(a, b)| (b - a).powi(2)).sum::<f64>();
        }
    }
    Ok(0.5 * grid.cell_measure() * total)
}

/// Random trigonometric polynomial with axis mode numbers `1..=max_mode`
/// plus a constant, compatible with the grid's lateral closure. The
/// coefficients are uniform in `[-1, 1]` and reproducible from `seed`.
pub fn band_limited_trace(grid: Arc<SlabGrid>, max_mode: usize, seed: u64) -> Result<TraceField> {
    if max_mode == 0 || 2 * max_mode >= grid.nx() {
        return Err(Error::InvalidParameter(format!(
            "max_mode {max_mode} must lie in 1..{}",
            grid.nx() / 2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.period();
    let lateral = grid.lateral();
    // basis(m, phase, x)
    let basis = move |m: usize, sine: bool, x: f64| -> f64 {
        match lateral {
            Lateral::Periodic => {
                let t = 2.0 * PI * m as f64 * x / l;
                if sine {
                    t.sin()
                } else {
                    t.cos()
                }
            }
            Lateral::Reflecting => (PI * m as f64 * (x + 0.5 * l) / l).cos(),
        }
    };
    let phases: &[bool] = match lateral {
        Lateral::Periodic => &[false, true],
        Lateral::Reflecting => &[false],
    };
    let mut terms: Vec<(usize, bool, usize, bool, f64)> = Vec::new();
    let offset = rng.gen_range(-1.0..1.0);
    match grid.dim() {
        1 => {
            for m in 1..=max_mode {
                for &p in phases {
                    terms.push((m, p, 0, false, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        _ => {
            for m1 in 0..=max_mode {
                for m2 in 0..=max_mode {
                    if m1 == 0 && m2 == 0 {
                        continue;
                    }
                    for &p1 in phases {
                        for &p2 in phases {
                            if (m1 == 0 && p1) || (m2 == 0 && p2) {
                                continue;
                            }
                            terms.push((m1, p1, m2, p2, rng.gen_range(-1.0..1.0)));
                        }
                    }
                }
            }
        }
    }
    let dim = grid.dim();
    TraceField::from_fn(grid, |x| {
        offset
            + terms
                .iter()
                .map(|&(m1, p1, m2, p2, amp)| {
                    let b2 = if dim == 1 { 1.0 } else { basis(m2, p2, x[1]) };
                    amp * basis(m1, p1, x[0]) * b2
                })
                .sum::<f64>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(nx: usize, my: usize, params: &FractionalParams) -> Arc<SlabGrid> {
        Arc::new(SlabGrid::for_params(1, 2.0 * PI, nx, my, params).unwrap())
    }

    #[test]
    fn constants_extend_to_constants() {
        for a in [-0.5, 0.0, 0.5] {
            let p = FractionalParams::from_a(a).unwrap();
            let g = grid1(16, 17, &p);
            let u = TraceField::constant(g, 2.5).unwrap();
            let v = solve_extension(&u, &p).unwrap();
            assert!(v.values().iter().all(|x| (x - 2.5).abs() < 1e-13));
            assert!(apply_la_flux(&u, &p).unwrap().sup_norm() < 1e-12);
            assert!(apply_la_spectral(&u, &p).unwrap().sup_norm() < 1e-12);
        }
    }

    #[test]
    fn flat_weight_cosine_matches_cosh_profile() {
        let p = FractionalParams::from_a(0.0).unwrap();
        let g = grid1(32, 257, &p);
        for k in [1.0, 3.0] {
            let u = TraceField::from_fn(g.clone(), |x| (k * x[0]).cos()).unwrap();
            let v = solve_extension(&u, &p).unwrap();
            let mut worst = 0.0f64;
            for (j, y) in g.y_nodes().iter().enumerate() {
                let prof = (k * (1.0 - y)).cosh() / k.cosh();
                for (i, x) in g.axis_coords().iter().enumerate() {
                    worst = worst.max((v.level(j)[i] - prof * (k * x).cos()).abs());
                }
            }
            assert!(worst < 1e-4, "k={k} err={worst}");
            let lu = apply_la_flux(&u, &p).unwrap();
            for (x, l) in g.axis_coords().iter().zip(lu.values()) {
                assert!((l - k * k.tanh() * (k * x).cos()).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn extension_satisfies_discrete_equation() {
        for a in [-0.6, 0.3] {
            let p = FractionalParams::from_a(a).unwrap();
            let g = Arc::new(
                SlabGrid::for_params(2, 5.0, 16, 33, &p)
                    .unwrap()
                    .with_lateral(Lateral::Reflecting),
            );
            let u = band_limited_trace(g, 3, 7).unwrap();
            let v = solve_extension(&u, &p).unwrap();
            let r = extension_residual(&v, &p).unwrap();
            assert!(r <= 1e-10 * u.sup_norm(), "residual {r}");
            let diff = v
                .trace()
                .values()
                .iter()
                .zip(u.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn extension_is_linear() {
        let p = FractionalParams::from_s(0.3).unwrap();
        let g = grid1(32, 33, &p);
        let u1 = TraceField::from_fn(g.clone(), |x| (2.0 * x[0]).sin()).unwrap();
        let u2 = TraceField::from_fn(g.clone(), |x| 0.5 * (5.0 * x[0]).cos()).unwrap();
        let sum = TraceField::new(
            g.clone(),
            u1.values()
                .iter()
                .zip(u2.values())
                .map(|(a, b)| a + b)
                .collect(),
        )
        .unwrap();
        let (v1, v2, vs) = (
            solve_extension(&u1, &p).unwrap(),
            solve_extension(&u2, &p).unwrap(),
            solve_extension(&sum, &p).unwrap(),
        );
        for ((a, b), c) in v1.values().iter().zip(v2.values()).zip(vs.values()) {
            assert!((a + b - c).abs() < 1e-12);
        }
    }

    #[test]
    fn modes_are_hermitian_and_invert() {
        let p = FractionalParams::from_s(0.5).unwrap();
        let g = Arc::new(SlabGrid::for_params(2, 4.0, 8, 5, &p).unwrap());
        let u = band_limited_trace(g, 2, 3).unwrap();
        let c = ModeCoefficients::from_trace(&u);
        assert!(c.hermitian_defect() < 1e-13);
        let back = c.to_trace().unwrap();
        for (a, b) in back.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_equals_energy_derivative() {
        // <L_h u, u> = 2 E(v) exactly for the discrete scheme.
        let p = FractionalParams::from_a(-0.4).unwrap();
        let g = grid1(32, 65, &p);
        let u = band_limited_trace(g, 6, 11).unwrap();
        let lu = apply_la_flux(&u, &p).unwrap();
        let e = dirichlet_energy(&solve_extension(&u, &p).unwrap(), &p).unwrap();
        let q = lu.inner(&u);
        assert!(
            (q - 2.0 * e).abs() <= 1e-11 * q.abs(),
            "{q} {e} {}",
            q - 2.0 * e
        );
    }

    #[test]
    fn spurious_harmonic_raises_energy() {
        // e^{pi x/2} sin(pi y/2) vanishes on y = 0 and has no flux at y = 1.
        let p = FractionalParams::from_a(0.0).unwrap();
        let g = Arc::new(SlabGrid::for_params(1, 8.0, 64, 129, &p).unwrap());
        let u = TraceField::from_fn(g.clone(), |x| (PI * x[0] / 4.0).sin()).unwrap();
        let v = solve_extension(&u, &p).unwrap();
        let mut w = v.clone();
        let nt = g.trace_len();
        for (j, y) in g.y_nodes().iter().enumerate() {
            for (i, x) in g.axis_coords().iter().enumerate() {
                w.values_mut()[j * nt + i] += (PI * x / 2.0).exp() * (PI * y / 2.0).sin();
            }
        }
        let ev = dirichlet_energy(&v, &p).unwrap();
        let ew = dirichlet_energy(&w, &p).unwrap();
        assert!(ew > ev + 1.0, "{ew} vs {ev}");
    }
}
