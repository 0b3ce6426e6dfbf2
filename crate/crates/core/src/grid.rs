//! Slab discretization: a horizontal box of side `L` with `Nx` cell-centred
//! nodes per axis, times a graded vertical mesh on `[0, 1]`.

use crate::error::{Error, Result};
use crate::params::FractionalParams;

/// How the horizontal box is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lateral {
    /// Period `L` in every horizontal direction.
    #[default]
    Periodic,
    /// Even reflection across the box faces (period `2L` after mirroring).
    Reflecting,
}

/// `y_j = (j / (My - 1))^gamma` for `j = 0..My`.
pub fn make_graded_mesh(my: usize, gamma: f64) -> Result<Vec<f64>> {
    if my < 3 {
        return Err(Error::InvalidParameter(format!(
            "vertical node count {my} must be at least 3"
        )));
    }
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grading exponent {gamma} must be >= 1"
        )));
    }
    let last = (my - 1) as f64;
    let mut y: Vec<f64> = (0..my).map(|j| (j as f64 / last).powf(gamma)).collect();
    y[0] = 0.0;
    y[my - 1] = 1.0;
    Ok(y)
}

/// The density `y^a`.
///
/// At `y = 0` the weight is `0` for `a > 0` and `1` for `a = 0`; for `a < 0`
/// it diverges and an error is returned.
pub fn weight(y: f64, a: f64) -> Result<f64> {
    if y > 0.0 {
        Ok(y.powf(a))
    } else if y == 0.0 {
        if a > 0.0 {
            Ok(0.0)
        } else if a == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::DegenerateWeight { a })
        }
    } else {
        Err(Error::InvalidParameter(format!("height {y} is negative")))
    }
}

/// Discretization of the slab `box x (0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabGrid {
    dim: usize,
    period: f64,
    nx: usize,
    gamma: f64,
    y: Vec<f64>,
    lateral: Lateral,
}

impl SlabGrid {
    pub fn new(dim: usize, period: f64, nx: usize, my: usize, gamma: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "horizontal dimension {dim} must be 1 or 2"
            )));
        }
        if nx < 4 || !nx.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "horizontal node count {nx} must be even and >= 4"
            )));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box width {period} must be positive"
            )));
        }
        let y = make_graded_mesh(my, gamma)?;
        Ok(Self {
            dim,
            period,
            nx,
            gamma,
            y,
            lateral: Lateral::Periodic,
        })
    }

    /// Grid with the default grading for `params`.
    pub fn for_params(
        dim: usize,
        period: f64,
        nx: usize,
        my: usize,
        params: &FractionalParams,
    ) -> Result<Self> {
        Self::new(dim, period, nx, my, params.default_grading())
    }

    pub fn with_lateral(mut self, lateral: Lateral) -> Self {
        self.lateral = lateral;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Box width `L`.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn my(&self) -> usize {
        self.y.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y
    }

    pub fn lateral(&self) -> Lateral {
        self.lateral
    }

    /// Horizontal spacing `L / Nx`.
    pub fn spacing(&self) -> f64 {
        self.period / self.nx as f64
    }

    /// Number of trace nodes, `Nx^n`.
    pub fn trace_len(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    pub fn slab_len(&self) -> usize {
        self.trace_len() * self.my()
    }

    /// Area (or length) element of one trace node, `h^n`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Cell-centred coordinate of axis index `i`: `-L/2 + (i + 1/2) h`.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -0.5 * self.period + (i as f64 + 0.5) * self.spacing()
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.axis_coord(i)).collect()
    }

    /// Coordinates of trace node `idx` (row-major, first axis slowest).
    pub fn node_coords(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.axis_coord(idx), 0.0],
            _ => [
                self.axis_coord(idx / self.nx),
                self.axis_coord(idx % self.nx),
            ],
        }
    }
}
