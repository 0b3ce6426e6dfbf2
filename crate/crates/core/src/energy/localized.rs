use crate::error::{Error, Result};
use crate::field::SlabField;
use crate::grid::SlabGrid;
use crate::params::FractionalParams;
use crate::spectral::Horizontal;
use crate::vertical::VerticalOperator;

use super::potential::Potential;

/// Parts of the cylinder energy `E_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub radius: f64,
    /// `1/2 int_{C_R} y^a |grad v|^2`.
    pub dirichlet: f64,
    /// The `x`-gradient share of `dirichlet`.
    pub horizontal: f64,
    /// `int_{B_R} F(v(., 0))`.
    pub potential: f64,
    pub total: f64,
}

const SUBSAMPLES: usize = 32;

/// Fraction of every trace cell lying in the ball `B_R` centred at the
/// origin. Cells cut by the circle are subsampled on a 32 x 32 lattice.
pub fn ball_weights(grid: &SlabGrid, radius: f64) -> Result<Vec<f64>> {
    let half = 0.5 * grid.period();
    if !(radius >= 0.0) || radius > half * (1.0 + 1e-12) {
        return Err(Error::RadiusExceedsBox {
            radius,
            half_width: half,
        });
    }
    let h = grid.spacing();
    let coords = grid.axis_coords();
    let overlap_1d = |x: f64| ((x + 0.5 * h).min(radius) - (x - 0.5 * h).max(-radius)).max(0.0) / h;
    match grid.dim() {
        1 => Ok(coords.iter().map(|&x| overlap_1d(x)).collect()),
        _ => {
            let r2 = radius * radius;
            let mut w = Vec::with_capacity(grid.trace_len());
            for &x in &coords {
                for &y in &coords {
                    let far = (x.abs() + 0.5 * h).powi(2) + (y.abs() + 0.5 * h).powi(2);
                    let nx = (x.abs() - 0.5 * h).max(0.0);
                    let ny = (y.abs() - 0.5 * h).max(0.0);
                    if far <= r2 {
                        w.push(1.0);
                    } else if nx * nx + ny * ny >= r2 {
                        w.push(0.0);
                    } else {
                        let step = h / SUBSAMPLES as f64;
                        let mut hits = 0usize;
                        for p in 0..SUBSAMPLES {
                            let sx = x - 0.5 * h + (p as f64 + 0.5) * step;
                            for q in 0..SUBSAMPLES {
                                let sy = y - 0.5 * h + (q as f64 + 0.5) * step;
                                if sx * sx + sy * sy < r2 {
                                    hits += 1;
                                }
                            }
                        }
                        w.push(hits as f64 / (SUBSAMPLES * SUBSAMPLES) as f64);
                    }
                }
            }
            Ok(w)
        }
    }
}

/// Per-node energy densities of a slab field, integrated in `y`. Built once
/// and reused for every radius.
#[derive(Debug, Clone)]
pub struct EnergyDensity {
    horizontal: Vec<f64>,
    vertical: Vec<f64>,
    potential: Vec<f64>,
    cell: f64,
}

impl EnergyDensity {
    pub fn new(v: &SlabField, pot: &Potential, params: &FractionalParams) -> Result<Self> {
        let grid = v.grid();
        let horiz = Horizontal::new(grid);
        let vert = VerticalOperator::for_grid(grid, params)?;
        let (c, m) = (vert.conductance(), vert.mass());
        let nt = grid.trace_len();
        let mut horizontal = vec![0.0; nt];
        let mut vertical = vec![0.0; nt];
        for j in 0..grid.my() {
            let level = v.level(j);
            for axis in 0..grid.dim() {
                let d = horiz.derivative(level, axis);
                for (acc, g) in horizontal.iter_mut().zip(&d) {
                    *acc += 0.5 * m[j] * g * g;
                }
            }
            if j + 1 < grid.my() {
                for ((acc, a), b) in vertical.iter_mut().zip(level).zip(v.level(j + 1)) {
                    *acc += 0.5 * c[j] * (b - a).powi(2);
                }
            }
        }
        let potential = v.level(0).iter().map(|&t| pot.energy(t)).collect();
        Ok(Self {
            horizontal,
            vertical,
            potential,
            cell: grid.cell_measure(),
        })
    }

    pub fn integrate(&self, weights: &[f64], radius: f64) -> EnergyBreakdown {
        let sum = |d: &[f64]| self.cell * d.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
        let horizontal = sum(&self.horizontal);
        let dirichlet = horizontal + sum(&self.vertical);
        let potential = sum(&self.potential);
        EnergyBreakdown {
            radius,
            dirichlet,
            horizontal,
            potential,
            total: dirichlet + potential,
        }
    }
}

/// `E_R(v)`: Dirichlet energy over the cylinder `B_R x (0, 1)` plus the
/// potential over `B_R`, with cell-overlap weights in `x` and the
/// finite-volume weights in `y`.
pub fn energy_localized(
    v: &SlabField,
    radius: f64,
    pot: &Potential,
    params: &FractionalParams,
) -> Result<EnergyBreakdown> {
    let w = ball_weights(v.grid(), radius)?;
    Ok(EnergyDensity::new(v, pot, params)?.integrate(&w, radius))
}

/// Gradient of `E_R` with respect to every slab value, in storage order.
pub fn energy_localized_gradient(
    v: &SlabField,
    radius: f64,
    pot: &Potential,
    params: &FractionalParams,
) -> Result<Vec<f64>> {
    let grid = v.grid();
    let chi = ball_weights(grid, radius)?;
    let horiz = Horizontal::new(grid);
    let vert = VerticalOperator::for_grid(grid, params)?;
    let (c, m) = (vert.conductance(), vert.mass());
    let nt = grid.trace_len();
    let cell = grid.cell_measure();
    let mut out = vec![0.0; grid.slab_len()];
    for j in 0..grid.my() {
        let level = v.level(j);
        let block = &mut out[j * nt..(j + 1) * nt];
        for axis in 0..grid.dim() {
            let d = horiz.derivative(level, axis);
            let weighted: Vec<f64> = d.iter().zip(&chi).map(|(g, w)| g * w).collect();
            let back = horiz.derivative_adjoint(&weighted, axis);
            for (o, b) in block.iter_mut().zip(&back) {
                *o += cell * m[j] * b;
            }
        }
        let couple = |other: &[f64], ce: f64, block: &mut [f64]| {
            for (((o, a), b), w) in block.iter_mut().zip(level).zip(other).zip(&chi) {
                *o += cell * ce * w * (a - b);
            }
        };
        if j + 1 < grid.my() {
            couple(v.level(j + 1), c[j], block);
        }
        if j > 0 {
            couple(v.level(j - 1), c[j - 1], block);
        }
    }
    for ((o, &t), w) in out[..nt].iter_mut().zip(v.level(0)).zip(&chi) {
        *o -= cell * w * pot.force(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::extension::{apply_la_flux, solve_extension};
    use crate::field::TraceField;

    #[test]
    fn wells_have_zero_energy() {
        let p = FractionalParams::from_s(0.5).unwrap();
        let g = Arc::new(SlabGrid::for_params(1, 20.0, 32, 9, &p).unwrap());
        let v = SlabField::new(g.clone(), vec![-1.0; g.slab_len()]).unwrap();
        let pot = Potential::double_well();
        for r in [1.0, 5.0, 10.0] {
            let e = energy_localized(&v, r, &pot, &p).unwrap();
            assert_eq!(e.total, 0.0);
        }
    }

    #[test]
    fn zero_state_potential_is_measure() {
        let p = FractionalParams::from_s(0.3).unwrap();
        let pot = Potential::double_well();
        let g = Arc::new(SlabGrid::for_params(1, 20.0, 40, 9, &p).unwrap());
        let v = SlabField::new(g.clone(), vec![0.0; g.slab_len()]).unwrap();
        for r in [1.0, 3.3, 7.77] {
            let e = energy_localized(&v, r, &pot, &p).unwrap();
            assert_eq!(e.dirichlet, 0.0);
            assert!((e.potential - 0.25 * 2.0 * r).abs() < 1e-12);
        }
        let g2 = Arc::new(SlabGrid::for_params(2, 20.0, 64, 5, &p).unwrap());
        let v2 = SlabField::new(g2.clone(), vec![0.0; g2.slab_len()]).unwrap();
        let e = energy_localized(&v2, 6.0, &pot, &p).unwrap();
        let area = PI * 36.0;
        assert!((e.potential - 0.25 * area).abs() < 2e-3 * area);
        assert!(energy_localized(&v2, 10.5, &pot, &p).is_err());
    }

    #[test]
    fn full_box_energy_matches_flux_identity() {
        let p = FractionalParams::from_s(0.7).unwrap();
        let g = Arc::new(SlabGrid::for_params(1, 2.0 * PI, 32, 65, &p).unwrap());
        let u = TraceField::from_fn(g.clone(), |x| (3.0 * x[0]).cos()).unwrap();
        let v = solve_extension(&u, &p).unwrap();
        let e = energy_localized(&v, PI, &Potential::double_well(), &p).unwrap();
        let q = apply_la_flux(&u, &p).unwrap().inner(&u);
        assert!((e.dirichlet - 0.5 * q).abs() < 1e-11 * q);
    }
}
