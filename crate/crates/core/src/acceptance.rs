//! The acceptance suite: each criterion is run at its stated tolerance and
//! runtime budget and reported as a pass/fail outcome with a one-line
//! summary of the measured quantities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{
    band_mask, compute_layer, energy_localized, energy_localized_gradient, energy_scaling_sweep,
    euler_lagrange_residual, minimize_energy, second_variation_min_eig, Bounds, LateralData,
    Minimization, MinimizeOptions, Potential, SymbolSource,
};
use crate::error::Result;
use crate::extension::{apply_la_flux, apply_la_spectral, band_limited_trace, solve_extension};
use crate::field::{SlabField, TraceField};
use crate::fluid::{
    continuity_residual, incompressibility_residual, potential_from_field,
    potential_gradient_mismatch, FlowSample,
};
use crate::grid::{Lateral, SlabGrid};
use crate::params::FractionalParams;
use crate::symbol::{
    fit_asymptotic_exponent, symbol_half, symbol_ode_richardson, symbol_value, Regime,
};
use crate::symmetry::{monotonicity_check, symmetry_report, Monotonicity, SymmetryReport};

/// Fractional orders used by the symbol criteria.
pub const SYMBOL_ORDERS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
/// Fractional orders used by the layer criterion.
pub const LAYER_ORDERS: [f64; 3] = [0.25, 0.5, 0.75];

/// Vertical nodes of the coarser oracle mesh; the finer one has twice the
/// intervals.
const ORACLE_NODES: usize = 2049;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {:<26} {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

fn finish(
    id: u8,
    name: &'static str,
    budget: f64,
    start: Instant,
    outcome: Result<(bool, String)>,
) -> CriterionOutcome {
    let seconds = start.elapsed().as_secs_f64();
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let over = seconds > budget;
    CriterionOutcome {
        id,
        name,
        passed: ok && !over,
        detail: if over {
            format!("{detail}; over budget")
        } else {
            detail
        },
        seconds,
        budget_seconds: budget,
    }
}

/// `n` log-spaced frequencies in `[1e-3, 50]`.
pub fn frequency_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = (1e-3f64.ln(), 50f64.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn symbol_oracle_equivalence() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0f64;
        let mut at = (0.0, 0.0);
        for s in SYMBOL_ORDERS {
            let p = FractionalParams::from_s(s)?;
            for xi in frequency_grid(40) {
                let exact = symbol_value(xi, &p)?;
                let oracle = symbol_ode_richardson(xi, &p, ORACLE_NODES)?;
                let rel = ((exact - oracle) / exact).abs();
                if rel > worst {
                    worst = rel;
                    at = (s, xi);
                }
            }
        }
        Ok((
            worst <= 1e-6,
            format!(
                "max rel err {worst:.2e} at s={} xi={:.3e} (tol 1e-6)",
                at.0, at.1
            ),
        ))
    };
    finish(1, "symbol oracle", 10.0, start, run())
}

pub fn half_order_collapse() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let p = FractionalParams::from_s(0.5)?;
        let mut worst = 0.0f64;
        for xi in frequency_grid(40) {
            let h = symbol_half(xi);
            worst = worst.max(((symbol_value(xi, &p)? - h) / h).abs());
        }
        Ok((
            worst <= 1e-10,
            format!("max rel err {worst:.2e} (tol 1e-10)"),
        ))
    };
    finish(2, "half-order collapse", 1.0, start, run())
}

pub fn symbol_asymptotics() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let (mut low, mut high) = (0.0f64, 0.0f64);
        for s in SYMBOL_ORDERS {
            let p = FractionalParams::from_s(s)?;
            low = low.max((fit_asymptotic_exponent(&p, Regime::Low)? - 2.0).abs());
            high = high.max((fit_asymptotic_exponent(&p, Regime::High)? - 2.0 * s).abs());
        }
        Ok((
            low <= 0.02 && high <= 0.02,
            format!("max |low - 2| {low:.2e}, max |high - 2s| {high:.2e} (tol 0.02)"),
        ))
    };
    finish(3, "symbol asymptotics", 5.0, start, run())
}

fn flux_spectral_gap(my: usize, nx: usize) -> Result<f64> {
    let p = FractionalParams::from_a(0.0)?;
    let g = Arc::new(SlabGrid::for_params(1, 2.0 * PI, nx, my, &p)?);
    let mut worst = 0.0f64;
    for k in [1.0, 2.0, 4.0] {
        let u = TraceField::from_fn(g.clone(), |x| (k * x[0]).cos())?;
        let flux = apply_la_flux(&u, &p)?;
        let spectral = apply_la_spectral(&u, &p)?;
        for (a, b) in flux.values().iter().zip(spectral.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

pub fn extension_correctness() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let p = FractionalParams::from_a(0.0)?;
        let nx = 32;
        let g = Arc::new(SlabGrid::for_params(1, 2.0 * PI, nx, 256, &p)?);
        let mut ext_err = 0.0f64;
        for k in [1.0f64, 2.0, 4.0] {
            let u = TraceField::from_fn(g.clone(), |x| (k * x[0]).cos())?;
            let v = solve_extension(&u, &p)?;
            for (j, &y) in g.y_nodes().iter().enumerate() {
                let prof = (k * (1.0 - y)).cosh() / k.cosh();
                for (i, val) in v.level(j).iter().enumerate() {
                    let exact = prof * (k * g.axis_coord(i)).cos();
                    ext_err = ext_err.max((val - exact).abs());
                }
            }
        }
        let coarse = flux_spectral_gap(128, nx)?;
        let fine = flux_spectral_gap(256, nx)?;
        let ratio = fine / coarse;
        let halves = (0.4..=0.6).contains(&ratio);
        Ok((
            ext_err <= 1e-4 && halves,
            format!(
                "extension sup err {ext_err:.2e} (tol 1e-4); flux/spectral gap {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3} (need 0.5 +- 20%)"
            ),
        ))
    };
    finish(4, "extension correctness", 30.0, start, run())
}

pub fn operator_structure() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let (mut adj, mut pos) = (0.0f64, f64::INFINITY);
        for a in [-0.5, 0.0, 0.5] {
            let p = FractionalParams::from_a(a)?;
            let g = Arc::new(SlabGrid::for_params(2, 2.0 * PI, 24, 65, &p)?);
            for seed in 0..10u64 {
                let u = band_limited_trace(g.clone(), 5, seed)?;
                let w = band_limited_trace(g.clone(), 5, 1000 + seed)?;
                let lu = apply_la_flux(&u, &p)?;
                let lw = apply_la_flux(&w, &p)?;
                let (luw, ulw) = (lu.inner(&w), u.inner(&lw));
                let scale = lu.inner(&lu).sqrt() * w.inner(&w).sqrt();
                adj = adj.max((luw - ulw).abs() / scale);
                let luu = lu.inner(&u);
                pos = pos.min(luu / (lu.inner(&lu).sqrt() * u.inner(&u).sqrt()));
            }
        }
        Ok((
            adj <= 1e-10 && pos >= -1e-10,
            format!("max adjoint defect {adj:.2e} (tol 1e-10); min normalized <Lu,u> {pos:.3e}"),
        ))
    };
    finish(5, "operator structure", 30.0, start, run())
}

/// Layer trace on the acceptance box `L = 80`, `Nx = 1024`, `My = 128`.
pub fn acceptance_layer(s: f64, tol: f64) -> Result<(FractionalParams, Minimization)> {
    let p = FractionalParams::from_s(s)?;
    let g = SlabGrid::for_params(1, 80.0, 1024, 128, &p)?;
    let layer = compute_layer(&p, &g, tol)?;
    Ok((p, layer))
}

pub fn layer_solution() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let pot = Potential::double_well();
        let mut ok = true;
        let mut parts = Vec::new();
        for s in LAYER_ORDERS {
            let (p, lay) = acceptance_layer(s, 1e-10)?;
            let u = lay.trace.values();
            let n = u.len();
            let odd = (0..n)
                .map(|i| (u[i] + u[n - 1 - i]).abs())
                .fold(0.0, f64::max);
            let mono = monotonicity_check(u);
            let el = euler_lagrange_residual(&lay.trace, &lay.pinned, &pot, &p)?;
            let free: Vec<bool> = lay.pinned.iter().map(|&q| !q).collect();
            let eig = second_variation_min_eig(
                &lay.trace,
                Some(&free),
                &pot,
                &p,
                SymbolSource::ClosedForm,
                1e-8,
            )?;
            ok &= mono == Monotonicity::Increasing
                && odd <= 1e-12
                && el <= 1e-6
                && eig.value >= -1e-6;
            parts.push(format!(
                "s={s}: {} odd {odd:.0e} EL {el:.1e} eig {:.1e}",
                mono.as_str(),
                eig.value
            ));
        }
        Ok((ok, parts.join("; ")))
    };
    finish(6, "layer solution", 300.0, start, run())
}

/// Piecewise-linear interpolant of a one-dimensional trace, held constant
/// beyond the end nodes.
pub fn profile_interpolant(u: &TraceField) -> impl Fn(f64) -> f64 {
    let g = u.grid();
    let (h, x0) = (g.spacing(), g.axis_coord(0));
    let vals = u.values().to_vec();
    let last = (vals.len() - 1) as f64;
    move |t: f64| {
        let f = ((t - x0) / h).clamp(0.0, last);
        let i = (f.floor() as usize).min(vals.len() - 2);
        let w = f - i as f64;
        vals[i] * (1.0 - w) + vals[i + 1] * w
    }
}

/// Setup of a planar minimization pinned to a tilted layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarConfig {
    pub s: f64,
    pub nx: usize,
    pub my: usize,
    pub side: f64,
    pub tilt_degrees: f64,
    /// Pinned band width in cells.
    pub band: usize,
    pub tol: f64,
}

impl Default for PlanarConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            nx: 256,
            my: 17,
            side: 80.0,
            tilt_degrees: 30.0,
            band: 2,
            tol: 1e-7,
        }
    }
}

/// The planar minimizer shared by the energy-scaling and symmetry checks.
#[derive(Debug, Clone)]
pub struct PlanarRun {
    pub params: FractionalParams,
    pub omega: [f64; 2],
    pub minimization: Minimization,
    pub slab: SlabField,
}

impl PlanarRun {
    /// Minimizer on the square of side `cfg.side` under reflecting closure,
    /// pinned on the band to the layer along the tilted direction. The
    /// layer comes from a one-dimensional run on twice the side at eight
    /// times the resolution; the free nodes start from a clipped ramp.
    pub fn compute(cfg: &PlanarConfig) -> Result<Self> {
        let p = FractionalParams::from_s(cfg.s)?;
        let long = SlabGrid::for_params(1, 2.0 * cfg.side, 8 * cfg.nx, 9, &p)?;
        let layer = compute_layer(&p, &long, 1e-10)?;
        let prof = profile_interpolant(&layer.trace);
        let th = cfg.tilt_degrees.to_radians();
        let omega = [th.cos(), th.sin()];
        let g = Arc::new(
            SlabGrid::for_params(2, cfg.side, cfg.nx, cfg.my, &p)?
                .with_lateral(Lateral::Reflecting),
        );
        let mask = band_mask(&g, cfg.band);
        let ramp = cfg.side / 8.0;
        let values = (0..g.trace_len())
            .map(|i| {
                let x = g.node_coords(i);
                let t = omega[0] * x[0] + omega[1] * x[1];
                if mask[i] {
                    prof(t)
                } else {
                    (t / ramp).clamp(-1.0, 1.0)
                }
            })
            .collect();
        let lateral = LateralData::new(TraceField::new(g, values)?, mask)?;
        let opts = MinimizeOptions {
            tol: cfg.tol,
            ..MinimizeOptions::default()
        };
        let minimization = minimize_energy(
            &lateral,
            Bounds::new(-2.0, 2.0)?,
            &Potential::double_well(),
            &p,
            &opts,
        )?;
        let slab = minimization.slab(&p)?;
        Ok(Self {
            params: p,
            omega,
            minimization,
            slab,
        })
    }
}

fn radii(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Runs the energy-scaling criterion and the symmetry criterion, which
/// share one planar minimization.
pub fn scaling_and_symmetry() -> [CriterionOutcome; 2] {
    let start = Instant::now();
    let pot = Potential::double_well();
    let one_d = || -> Result<f64> {
        let (p, lay) = acceptance_layer(0.5, 1e-10)?;
        let v = lay.slab(&p)?;
        let sw = energy_scaling_sweep(&v, &radii(10.0, 35.0, 2.5), &pot, &p)?;
        Ok(sw.slope.unwrap_or(f64::NAN))
    };
    let planar = PlanarRun::compute(&PlanarConfig::default());
    let scaling = (|| -> Result<(bool, String)> {
        let slope1 = one_d()?;
        let run = planar.as_ref().map_err(Clone::clone)?;
        let sw = energy_scaling_sweep(&run.slab, &radii(10.0, 30.0, 2.5), &pot, &run.params)?;
        let slope2 = sw.slope.unwrap_or(f64::NAN);
        let hslope = sw.horizontal_slope.unwrap_or(f64::NAN);
        Ok((
            slope1 <= 0.05 && slope2 <= 1.05,
            format!(
                "1D slope {slope1:.4} (<= 0.05); 2D slope {slope2:.4} (<= 1.05), horizontal-only {hslope:.4}; {} iterations",
                run.minimization.iterations
            ),
        ))
    })();
    let scaling = finish(7, "energy scaling", 900.0, start, scaling);
    let sym_start = Instant::now();
    let symmetry = (|| -> Result<(bool, String)> {
        let run = planar.as_ref().map_err(Clone::clone)?;
        let rep: SymmetryReport = symmetry_report(&run.minimization.trace)?;
        let cos = (rep.omega[0] * run.omega[0] + rep.omega[1] * run.omega[1]).clamp(-1.0, 1.0);
        let angle = cos.acos().to_degrees();
        Ok((
            rep.residual <= 0.02 && angle <= 2.0 && rep.monotone == Monotonicity::Increasing,
            format!(
                "residual {:.4} (<= 0.02); omega off by {angle:.3} deg (<= 2); profile {}",
                rep.residual,
                rep.monotone.as_str()
            ),
        ))
    })();
    // The symmetry check shares the planar run, so its budget is the
    // scaling criterion's.
    let mut symmetry = finish(8, "one-dimensional symmetry", 900.0, sym_start, symmetry);
    symmetry.seconds += scaling.seconds;
    symmetry.passed &= symmetry.seconds <= symmetry.budget_seconds;
    [scaling, symmetry]
}

pub fn gradient_check() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let p = FractionalParams::from_s(0.4)?;
        let pot = Potential::double_well();
        let g = Arc::new(SlabGrid::for_params(2, 20.0, 32, 9, &p)?);
        let radius = 7.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let base = solve_extension(&band_limited_trace(g.clone(), 4, 11)?, &p)?;
        let values: Vec<f64> = base
            .values()
            .iter()
            .map(|v| v + 0.1 * rng.gen_range(-1.0..1.0))
            .collect();
        let v = SlabField::new(g.clone(), values)?;
        let grad = energy_localized_gradient(&v, radius, &pot, &p)?;
        let eps = 1e-4;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let dir: Vec<f64> = (0..g.slab_len())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let shifted = |sign: f64| -> Result<f64> {
                let vals = v
                    .values()
                    .iter()
                    .zip(&dir)
                    .map(|(a, d)| a + sign * eps * d)
                    .collect();
                Ok(energy_localized(&SlabField::new(g.clone(), vals)?, radius, &pot, &p)?.total)
            };
            let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * eps);
            let an: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
            worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()));
        }
        Ok((
            worst <= 1e-6,
            format!("max rel mismatch {worst:.2e} over 20 directions (tol 1e-6)"),
        ))
    };
    finish(9, "gradient check", 30.0, start, run())
}

/// `count` seeded points in the unit ball of `R^d`.
pub fn ball_samples(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if x.iter().map(|c| c * c).sum::<f64>() < 1.0 {
            out.push(x);
        }
    }
    out
}

pub fn fluid_identities() -> CriterionOutcome {
    let start = Instant::now();
    let run = || -> Result<(bool, String)> {
        let pts = ball_samples(3, 50, 3);
        let pack = FlowSample::packing(3)?;
        let leak = FlowSample::leak(3)?;
        let pc = continuity_residual(&pack, &pts, 0.0)?;
        let pi = incompressibility_residual(&pack, &pts, 0.0)?;
        let li = incompressibility_residual(&leak, &pts, 0.0)?;
        let lc = continuity_residual(&leak, &pts, 0.0)?;
        let field = |x: &[f64]| vec![x[1], x[0]];
        let mut mismatch = 0.0f64;
        for x in ball_samples(2, 50, 5) {
            mismatch = mismatch.max(potential_gradient_mismatch(&field, &x, 8, 1e-5)?);
        }
        let gauge = potential_from_field(&field, &[0.0, 0.0], 8)?;
        Ok((
            pc <= 1e-8
                && (pi - 3.0).abs() <= 1e-6
                && li <= 1e-8
                && (lc - 3.0).abs() <= 1e-6
                && mismatch <= 1e-8
                && gauge == 0.0,
            format!(
                "packing cont {pc:.1e} inc {pi:.9}; leak inc {li:.1e} cont {lc:.9}; potential grad mismatch {mismatch:.1e}"
            ),
        ))
    };
    finish(10, "fluid identities", 5.0, start, run())
}

/// Every criterion, in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    let mut out = vec![
        symbol_oracle_equivalence(),
        half_order_collapse(),
        symbol_asymptotics(),
        extension_correctness(),
        operator_structure(),
        layer_solution(),
    ];
    out.extend(scaling_and_symmetry());
    out.push(gradient_check());
    out.push(fluid_identities());
    out
}
