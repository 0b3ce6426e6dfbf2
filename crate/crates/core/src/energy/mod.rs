//! Localized energy, constrained minimization, stability, and energy
//! growth for the trace equation `L_a u = f(u)`.

mod localized;
mod minimize;
mod potential;
mod stability;
mod sweep;

pub use localized::{
    ball_weights, energy_localized, energy_localized_gradient, EnergyBreakdown, EnergyDensity,
};
pub use minimize::{
    band_mask, compute_layer, compute_layer_with, cutoff_competitor, euler_lagrange_residual,
    minimize_energy, reduced_energy, Bounds, LateralData, LayerOptions, Minimization,
    MinimizeOptions, SymbolSource,
};
pub use potential::Potential;
pub use stability::{second_variation_min_eig, EigenEstimate};
pub use sweep::{energy_scaling_sweep, ScalingSweep};
