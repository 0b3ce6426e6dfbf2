use crate::error::{Error, Result};
use crate::field::SlabField;
use crate::params::FractionalParams;
use crate::symbol::least_squares_slope;

use super::localized::{ball_weights, EnergyBreakdown, EnergyDensity};
use super::potential::Potential;

/// Energies on a sequence of cylinders and the fitted growth exponents.
#[derive(Debug, Clone)]
pub struct ScalingSweep {
    pub rows: Vec<EnergyBreakdown>,
    /// Least-squares slope of `log E_R` against `log R` over all radii;
    /// `None` when some energy is not positive.
    pub slope: Option<f64>,
    /// Same fit for the horizontal Dirichlet part alone.
    pub horizontal_slope: Option<f64>,
}

fn fit(rows: &[EnergyBreakdown], pick: impl Fn(&EnergyBreakdown) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.radius.ln(), pick(r)))
        .filter(|(_, e)| *e > 0.0)
        .map(|(l, e)| (l, e.ln()))
        .collect();
    (pts.len() == rows.len() && pts.len() >= 2).then(|| least_squares_slope(&pts))
}

pub fn energy_scaling_sweep(
    v: &SlabField,
    radii: &[f64],
    pot: &Potential,
    params: &FractionalParams,
) -> Result<ScalingSweep> {
    if radii.len() < 2 {
        return Err(Error::InvalidParameter(
            "a sweep needs at least two radii".into(),
        ));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    let density = EnergyDensity::new(v, pot, params)?;
    let rows = radii
        .iter()
        .map(|&r| Ok(density.integrate(&ball_weights(v.grid(), r)?, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingSweep {
        slope: fit(&rows, |r| r.total),
        horizontal_slope: fit(&rows, |r| r.horizontal),
        rows,
    })
}
