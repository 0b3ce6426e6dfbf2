//! Finite-volume discretization of `-(y^a phi')' + xi^2 y^a phi` on the
//! graded mesh, with the surface value prescribed and a no-flux top.
//!
//! Edge conductances use the exact harmonic weight
//! `h / int y^-a dy`, so the weight is never sampled at `y = 0` and the
//! `xi = 0` flux is reproduced exactly. Node masses are `int y^a dy` over the
//! dual cell. The discrete surface flux is the half-cell balance
//! `c_0 (phi_0 - phi_1) + xi^2 m_0 phi_0`, which is the derivative of the
//! discrete Dirichlet energy with respect to the surface value.

use crate::error::{Error, Result};
use crate::grid::SlabGrid;
use crate::params::FractionalParams;

#[derive(Debug, Clone)]
pub struct VerticalOperator {
    /// Edge conductances `w_e / h_e`, one per interval.
    conductance: Vec<f64>,
    /// Weighted dual-cell masses, one per node.
    mass: Vec<f64>,
}

/// Solution of the unit-trace mode problem.
#[derive(Debug, Clone)]
pub struct ModeProfile {
    /// `phi_j` with `phi_0 = 1`.
    pub phi: Vec<f64>,
    /// Discrete surface flux for unit trace.
    pub flux: f64,
}

impl VerticalOperator {
    pub fn new(y: &[f64], a: f64) -> Result<Self> {
        let my = y.len();
        if my < 3 {
            return Err(Error::InvalidParameter(format!(
                "vertical node count {my} must be at least 3"
            )));
        }
        let p = 1.0 - a;
        let q = 1.0 + a;
        let conductance = y
            .windows(2)
            .map(|w| {
                // (h / int y^-a) / h
                p / (w[1].powf(p) - w[0].powf(p))
            })
            .collect::<Vec<_>>();
        let mut mass = Vec::with_capacity(my);
        for j in 0..my {
            let lo = if j == 0 { 0.0 } else { 0.5 * (y[j - 1] + y[j]) };
            let hi = if j + 1 == my {
                1.0
            } else {
                0.5 * (y[j] + y[j + 1])
            };
            mass.push((hi.powf(q) - lo.powf(q)) / q);
        }
        if let Some(row) = conductance
            .iter()
            .position(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err(Error::SingularSystem { row });
        }
        Ok(Self { conductance, mass })
    }

    pub fn for_grid(grid: &SlabGrid, params: &FractionalParams) -> Result<Self> {
        Self::new(grid.y_nodes(), params.a())
    }

    pub fn my(&self) -> usize {
        self.mass.len()
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Solves the mode problem for `|xi|^2 = xi2` with unit surface value.
    ///
    /// The unknown is the deviation `psi = phi - 1`, which keeps the surface
    /// flux free of cancellation at low frequency.
    pub fn solve_mode(&self, xi2: f64) -> Result<ModeProfile> {
        let my = self.my();
        let n = my - 1;
        let c = &self.conductance;
        let m = &self.mass;
        // Thomas algorithm on rows j = 1..my-1.
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for r in 0..n {
            let j = r + 1;
            let upper = if j + 1 < my { c[j] } else { 0.0 };
            let diag = c[j - 1] + upper + xi2 * m[j];
            let lower = if r > 0 { c[j - 1] } else { 0.0 };
            let rhs = -xi2 * m[j];
            let (prev_c, prev_d) = if r > 0 {
                (cp[r - 1], dp[r - 1])
            } else {
                (0.0, 0.0)
            };
            let denom = diag - lower * prev_c;
            if !(denom.is_finite() && denom > 0.0) {
                return Err(Error::SingularSystem { row: j });
            }
            cp[r] = upper / denom;
            dp[r] = (rhs + lower * prev_d) / denom;
        }
        let mut psi = vec![0.0; my];
        psi[n] = dp[n - 1];
        for r in (0..n - 1).rev() {
            psi[r + 1] = dp[r] + cp[r] * psi[r + 2];
        }
        let flux = -c[0] * psi[1] + xi2 * m[0];
        let phi = psi.iter().map(|p| 1.0 + p).collect();
        Ok(ModeProfile { phi, flux })
    }

    /// Discrete surface flux for unit trace at frequency `|xi|`.
    pub fn dtn(&self, xi: f64) -> Result<f64> {
        Ok(self.solve_mode(xi * xi)?.flux)
    }

    /// Discrete Dirichlet energy `sum c_e (phi_{e+1} - phi_e)^2 + xi^2 sum m_j phi_j^2`.
    pub fn mode_energy(&self, phi: &[f64], xi2: f64) -> f64 {
        let grad: f64 = self
            .conductance
            .iter()
            .zip(phi.windows(2))
            .map(|(c, w)| c * (w[1] - w[0]).powi(2))
            .sum();
        let zeroth: f64 = self.mass.iter().zip(phi).map(|(m, p)| m * p * p).sum();
        grad + xi2 * zeroth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_graded_mesh;

    #[test]
    fn masses_integrate_the_weight() {
        for &a in &[-0.8, -0.3, 0.0, 0.4, 0.9] {
            let y = make_graded_mesh(40, 2.0).unwrap();
            let op = VerticalOperator::new(&y, a).unwrap();
            let total: f64 = op.mass().iter().sum();
            assert!((total - 1.0 / (1.0 + a)).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_frequency_is_flat() {
        let y = make_graded_mesh(20, 2.0).unwrap();
        let op = VerticalOperator::new(&y, 0.3).unwrap();
        let p = op.solve_mode(0.0).unwrap();
        assert!(p.phi.iter().all(|&v| v == 1.0));
        assert_eq!(p.flux, 0.0);
    }

    #[test]
    fn flux_equals_minimal_energy() {
        let y = make_graded_mesh(64, 4.0).unwrap();
        let op = VerticalOperator::new(&y, -0.5).unwrap();
        let xi2 = 2.3;
        let p = op.solve_mode(xi2).unwrap();
        let e = op.mode_energy(&p.phi, xi2);
        assert!((e - p.flux).abs() < 1e-12 * p.flux);
    }

    #[test]
    fn profile_is_monotone_and_positive() {
        let y = make_graded_mesh(50, 2.0).unwrap();
        let op = VerticalOperator::new(&y, 0.0).unwrap();
        let p = op.solve_mode(9.0).unwrap();
        assert!(p.phi.windows(2).all(|w| w[1] < w[0]));
        assert!(p.phi.iter().all(|&v| v > 0.0));
    }
}
