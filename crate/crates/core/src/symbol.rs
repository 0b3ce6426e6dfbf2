//! The Fourier symbol `S_s(|xi|)` of the slab Dirichlet-to-Neumann operator.
//!
//! With `nu = 1 - s`, the mode problem `(y^a phi')' = |xi|^2 y^a phi`,
//! `phi(0) = 1`, `phi'(1) = 0` has the closed-form flux
//!
//! ```text
//! S_s(xi) = c1(s) |xi|^(2s) I_nu(|xi|) / (I_nu(|xi|) + (2/pi) sin(s pi) K_nu(|xi|)),
//! c1(s)   = 2^(1-2s) G(1-s) / G(s),
//! ```
//!
//! which is the Bessel `J`/`Y` form at imaginary argument rewritten with
//! `I_{-nu} = I_nu + (2/pi) sin(nu pi) K_nu`. The finite-volume mode solver
//! in [`crate::vertical`] provides an independent route.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::bessel::bessel_ik_scaled;
use crate::error::Result;
use crate::grid::make_graded_mesh;
use crate::params::FractionalParams;
use crate::vertical::VerticalOperator;

/// Above this frequency the symbol is evaluated as `c1 |xi|^(2s)`; the
/// neglected factor differs from one by about `exp(-2 |xi|)`.
pub const HIGH_FREQUENCY_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolEval {
    pub xi: f64,
    pub s: f64,
    pub value: f64,
}

/// `c1(s) = 2^(1-2s) G(1-s) / G(s)`.
pub fn normalization(s: f64) -> f64 {
    (1.0 - 2.0 * s).exp2() * gamma(1.0 - s) / gamma(s)
}

/// Closed-form symbol value.
pub fn symbol_closed_form(xi: f64, params: &FractionalParams) -> Result<SymbolEval> {
    let s = params.s();
    let xi = xi.abs();
    let value = if xi == 0.0 {
        0.0
    } else if xi > HIGH_FREQUENCY_CUTOFF {
        normalization(s) * xi.powf(2.0 * s)
    } else {
        let ik = bessel_ik_scaled(1.0 - s, xi)?;
        let ratio = ik.k / ik.i * (-2.0 * xi).exp();
        normalization(s) * xi.powf(2.0 * s) / (1.0 + 2.0 / PI * (s * PI).sin() * ratio)
    };
    Ok(SymbolEval { xi, s, value })
}

/// Convenience wrapper returning only the value.
pub fn symbol_value(xi: f64, params: &FractionalParams) -> Result<f64> {
    Ok(symbol_closed_form(xi, params)?.value)
}

/// `tanh(|xi|) |xi|`, the `s = 1/2` symbol.
pub fn symbol_half(xi: f64) -> f64 {
    let x = xi.abs();
    x * x.tanh()
}

/// Flux of the discrete mode problem on a graded mesh with `my` nodes.
pub fn symbol_ode_oracle(xi: f64, params: &FractionalParams, my: usize) -> Result<f64> {
    let y = make_graded_mesh(my, params.default_grading())?;
    VerticalOperator::new(&y, params.a())?.dtn(xi.abs())
}

/// Richardson extrapolation of a second-order quantity from two meshes
/// whose spacings differ by `ratio > 1`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64) -> f64 {
    let r2 = ratio * ratio;
    (r2 * fine - coarse) / (r2 - 1.0)
}

/// Oracle on `my` and `2(my-1)+1` nodes, extrapolated.
pub fn symbol_ode_richardson(xi: f64, params: &FractionalParams, my: usize) -> Result<f64> {
    let coarse = symbol_ode_oracle(xi, params, my)?;
    let fine = symbol_ode_oracle(xi, params, 2 * (my - 1) + 1)?;
    Ok(richardson(coarse, fine, 2.0))
}

/// Normalization recovered from the mode solver alone at `|xi| = 1`.
pub fn calibrated_normalization(params: &FractionalParams, my: usize) -> Result<f64> {
    let s = params.s();
    let flux = symbol_ode_richardson(1.0, params, my)?;
    let ik = bessel_ik_scaled(1.0 - s, 1.0)?;
    let ratio = ik.k / ik.i * (-2.0f64).exp();
    Ok(flux * (1.0 + 2.0 / PI * (s * PI).sin() * ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `|xi|` in `[1e-3, 1e-2]`.
    Low,
    /// `|xi|` in `[20, 50]`.
    High,
}

/// Least-squares slope of `log S` against `log |xi|` on the regime's window.
pub fn fit_asymptotic_exponent(params: &FractionalParams, regime: Regime) -> Result<f64> {
    let (lo, hi) = match regime {
        Regime::Low => (1e-3f64, 1e-2f64),
        Regime::High => (20.0f64, 50.0f64),
    };
    let n = 32;
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let t = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64;
        pts.push((t, symbol_value(t.exp(), params)?.ln()));
    }
    Ok(least_squares_slope(&pts))
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: f64) -> FractionalParams {
        FractionalParams::from_s(s).unwrap()
    }

    #[test]
    fn zero_frequency() {
        for s in [0.1, 0.5, 0.9] {
            assert_eq!(symbol_value(0.0, &p(s)).unwrap(), 0.0);
            assert_eq!(symbol_ode_oracle(0.0, &p(s), 32).unwrap(), 0.0);
        }
    }

    #[test]
    fn half_case_values() {
        let v = symbol_value(1.0, &p(0.5)).unwrap();
        assert!((v - 0.761_594_155_955_764_9).abs() < 1e-14);
        assert!((symbol_half(1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(symbol_half(0.0), 0.0);
        let big = symbol_half(50.0);
        assert!((big - 50.0 * (1.0 - 2.0 * (-100f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn half_case_collapse() {
        for i in 0..200 {
            let xi = 10f64.powf(-3.0 + 4.69897 * i as f64 / 199.0);
            let c = symbol_value(xi, &p(0.5)).unwrap();
            let h = symbol_half(xi);
            assert!(((c - h) / h).abs() < 1e-10, "xi {xi}: {c} vs {h}");
        }
    }

    #[test]
    fn closed_form_matches_oracle_for_quarter_order() {
        let exact = symbol_value(2.0, &p(0.25)).unwrap();
        let oracle = symbol_ode_richardson(2.0, &p(0.25), 513).unwrap();
        assert!(((exact - oracle) / exact).abs() < 1e-8);
    }

    #[test]
    fn oracle_converges_to_tanh_for_flat_weight() {
        let params = FractionalParams::from_a(0.0).unwrap();
        let exact = 1f64.tanh();
        let mut prev = f64::INFINITY;
        for my in [33, 65, 129, 257] {
            let err = (symbol_ode_oracle(1.0, &params, my).unwrap() - exact).abs();
            assert!(err < prev / 3.0);
            prev = err;
        }
        let r = symbol_ode_richardson(1.0, &params, 257).unwrap();
        assert!((r - exact).abs() < 1e-10);
    }

    #[test]
    fn self_convergence_on_three_meshes() {
        // xi = 3, a = 0.5 on 64, 128 and 256 nodes.
        let params = FractionalParams::from_a(0.5).unwrap();
        let f: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&m| symbol_ode_oracle(3.0, &params, m).unwrap())
            .collect();
        let order = ((f[0] - f[1]) / (f[1] - f[2])).ln() / (255.0f64 / 127.0).ln();
        assert!(order >= 1.5, "observed order {order}");
        let limit = richardson(f[1], f[2], 255.0 / 127.0);
        let exact = symbol_value(3.0, &params).unwrap();
        assert!(((limit - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn normalization_is_recovered_by_calibration() {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let c = calibrated_normalization(&p(s), 1025).unwrap();
            let exact = normalization(s);
            assert!(((c - exact) / exact).abs() < 1e-9, "s {s}: {c} vs {exact}");
        }
    }

    #[test]
    fn cutoff_is_continuous() {
        for s in [0.1, 0.5, 0.9] {
            let below = symbol_value(HIGH_FREQUENCY_CUTOFF, &p(s)).unwrap();
            let power = normalization(s) * HIGH_FREQUENCY_CUTOFF.powf(2.0 * s);
            assert!(((below - power) / power).abs() < 1e-12);
        }
    }

    #[test]
    fn strictly_increasing_and_laplacian_at_low_frequency() {
        let grid = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 60.0];
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let vals: Vec<f64> = grid
                .iter()
                .map(|&x| symbol_value(x, &p(s)).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] > w[0]));
            let r3 = symbol_value(1e-3, &p(s)).unwrap() / 1e-6;
            let r4 = symbol_value(1e-4, &p(s)).unwrap() / 1e-8;
            assert!(((r3 - r4) / r4).abs() < 0.01);
            assert!((r4 - 0.5 / (1.0 - s)).abs() < 1e-6);
        }
    }

    #[test]
    fn asymptotic_exponents() {
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let low = fit_asymptotic_exponent(&p(s), Regime::Low).unwrap();
            let high = fit_asymptotic_exponent(&p(s), Regime::High).unwrap();
            assert!((low - 2.0).abs() < 0.02, "s {s} low {low}");
            assert!((high - 2.0 * s).abs() < 0.02, "s {s} high {high}");
        }
    }
}
