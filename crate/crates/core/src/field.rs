use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::SlabGrid;

fn check_values(values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Samples of a function on the horizontal grid at `y = 0`.
#[derive(Debug, Clone)]
pub struct TraceField {
    grid: Arc<SlabGrid>,
    values: Vec<f64>,
}

impl TraceField {
    pub fn new(grid: Arc<SlabGrid>, values: Vec<f64>) -> Result<Self> {
        check_values(&values, grid.trace_len())?;
        Ok(Self { grid, values })
    }

    /// Samples `f` at every trace node.
    pub fn from_fn(grid: Arc<SlabGrid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.trace_len())
            .map(|i| f(grid.node_coords(i)))
            .collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<SlabGrid>, c: f64) -> Result<Self> {
        let n = grid.trace_len();
        Self::new(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Arc<SlabGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L^2` inner product `h^n sum u_i w_i`.
    pub fn inner(&self, other: &TraceField) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.grid.cell_measure()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }
}

/// Samples of a function on every slab node. Storage is level-major: the
/// trace-sized block `j` holds the values at height `y_j`.
#[derive(Debug, Clone)]
pub struct SlabField {
    grid: Arc<SlabGrid>,
    values: Vec<f64>,
}

impl SlabField {
    pub fn new(grid: Arc<SlabGrid>, values: Vec<f64>) -> Result<Self> {
        check_values(&values, grid.slab_len())?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<SlabGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Values at height `y_j`.
    pub fn level(&self, j: usize) -> &[f64] {
        let n = self.grid.trace_len();
        &self.values[j * n..(j + 1) * n]
    }

    /// The trace `v(., 0)`.
    pub fn trace(&self) -> TraceField {
        TraceField {
            grid: self.grid.clone(),
            values: self.level(0).to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_finiteness_are_checked() {
        let g = Arc::new(SlabGrid::new(1, 1.0, 4, 3, 1.0).unwrap());
        assert!(TraceField::new(g.clone(), vec![0.0; 3]).is_err());
        assert!(matches!(
            TraceField::new(g.clone(), vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(SlabField::new(g.clone(), vec![0.0; 12]).is_ok());
        assert!(SlabField::new(g, vec![0.0; 11]).is_err());
    }

    #[test]
    fn levels_are_contiguous() {
        let g = Arc::new(SlabGrid::new(1, 1.0, 4, 3, 1.0).unwrap());
        let v = SlabField::new(g, (0..12).map(|i| i as f64).collect()).unwrap();
        assert_eq!(v.level(1), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(v.trace().values(), &[0.0, 1.0, 2.0, 3.0]);
    }
}
