//! Numerical toolkit for the Dirichlet-to-Neumann operator of the weighted
//! extension problem `div(y^a grad v) = 0` on the slab `R^n x (0, 1)` with a
//! no-flux top, and for the nonlinear trace equation `L_a u = f(u)`.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bessel;
pub mod energy;
pub mod error;
pub mod extension;
pub mod field;
pub mod fluid;
pub mod grid;
pub mod params;
pub mod spectral;
pub mod symbol;
pub mod symmetry;
pub mod vertical;

pub use error::{Error, Result};
pub use field::{SlabField, TraceField};
pub use grid::{make_graded_mesh, weight, Lateral, SlabGrid};
pub use params::FractionalParams;
pub use symbol::{symbol_closed_form, symbol_half, symbol_ode_oracle, Regime, SymbolEval};
