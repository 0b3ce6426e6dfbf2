//! Residual checks for the mass-conservation and incompressibility
//! identities, and potential reconstruction for irrotational velocity
//! fields.
//!
//! Points are in `R^d`; for the bottom condition the last coordinate is the
//! vertical one. Fields are callbacks. Missing derivatives are replaced by
//! central differences with step `h`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Scalar = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Clone)]
pub struct FlowSample {
    dim: usize,
    rho: Scalar,
    v: Vector,
    rho_t: Option<Scalar>,
    grad_rho: Option<Vector>,
    div_v: Option<Scalar>,
    h: f64,
}

impl fmt::Debug for FlowSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSample")
            .field("dim", &self.dim)
            .field("h", &self.h)
            .field("analytic_rho_t", &self.rho_t.is_some())
            .field("analytic_grad_rho", &self.grad_rho.is_some())
            .field("analytic_div_v", &self.div_v.is_some())
            .finish()
    }
}

impl FlowSample {
    pub fn new(
        dim: usize,
        rho: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        v: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            rho: Arc::new(rho),
            v: Arc::new(v),
            rho_t: None,
            grad_rho: None,
            div_v: None,
            h: DEFAULT_STEP,
        })
    }

    /// Contracting flow `v = -X` with density `e^{d t}`, which conserves
    /// mass but is not incompressible.
    pub fn packing(dim: usize) -> Result<Self> {
        let d = dim as f64;
        Self::new(
            dim,
            move |_, t| (d * t).exp(),
            |x, _| x.iter().map(|c| -c).collect(),
        )
    }

    /// Contracting flow `v = -X` with unit density: incompressible, but mass
    /// leaks.
    pub fn leak(dim: usize) -> Result<Self> {
        Self::new(dim, |_, _| 1.0, |x, _| x.iter().map(|c| -c).collect())
    }

    pub fn with_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step {h} must lie in (0, 1e-3]"
            )));
        }
        self.h = h;
        Ok(self)
    }

    pub fn with_rho_t(mut self, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.rho_t = Some(Arc::new(f));
        self
    }

    pub fn with_grad_rho(
        mut self,
        f: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad_rho = Some(Arc::new(f));
        self
    }

    pub fn with_div_v(mut self, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.div_v = Some(Arc::new(f));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn rho(&self, x: &[f64], t: f64) -> f64 {
        (self.rho)(x, t)
    }

    pub fn velocity(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.v)(x, t)
    }

    fn check_point(&self, x: &[f64], t: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let r = self.rho(x, t);
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "density {r} is not positive at {x:?}"
            )));
        }
        Ok(())
    }

    fn shifted(x: &[f64], k: usize, dx: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        y[k] += dx;
        y
    }

    fn rho_t_at(&self, x: &[f64], t: f64) -> f64 {
        match &self.rho_t {
            Some(f) => f(x, t),
            None => (self.rho(x, t + self.h) - self.rho(x, t - self.h)) / (2.0 * self.h),
        }
    }

    fn grad_rho_at(&self, x: &[f64], t: f64) -> Vec<f64> {
        match &self.grad_rho {
            Some(f) => f(x, t),
            None => (0..self.dim)
                .map(|k| {
                    let p = self.rho(&Self::shifted(x, k, self.h), t);
                    let m = self.rho(&Self::shifted(x, k, -self.h), t);
                    (p - m) / (2.0 * self.h)
                })
                .collect(),
        }
    }

    fn div_v_at(&self, x: &[f64], t: f64) -> f64 {
        match &self.div_v {
            Some(f) => f(x, t),
            None => (0..self.dim)
                .map(|k| {
                    let p = self.velocity(&Self::shifted(x, k, self.h), t)[k];
                    let m = self.velocity(&Self::shifted(x, k, -self.h), t)[k];
                    (p - m) / (2.0 * self.h)
                })
                .sum(),
        }
    }

    /// `div(rho v)`, expanded by the product rule when analytic derivatives
    /// are available and differenced directly otherwise.
    fn div_flux_at(&self, x: &[f64], t: f64) -> f64 {
        if self.grad_rho.is_some() || self.div_v.is_some() {
            let v = self.velocity(x, t);
            let g = self.grad_rho_at(x, t);
            return g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
                + self.rho(x, t) * self.div_v_at(x, t);
        }
        (0..self.dim)
            .map(|k| {
                let xp = Self::shifted(x, k, self.h);
                let xm = Self::shifted(x, k, -self.h);
                let p = self.rho(&xp, t) * self.velocity(&xp, t)[k];
                let m = self.rho(&xm, t) * self.velocity(&xm, t)[k];
                (p - m) / (2.0 * self.h)
            })
            .sum()
    }
}

fn sup_over(
    flow: &FlowSample,
    points: &[Vec<f64>],
    t: f64,
    f: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in points {
        flow.check_point(x, t)?;
        worst = worst.max(f(x).abs());
    }
    Ok(worst)
}

/// `max |d_t rho + div(rho v)|` over `points`.
pub fn continuity_residual(flow: &FlowSample, points: &[Vec<f64>], t: f64) -> Result<f64> {
    sup_over(flow, points, t, |x| {
        flow.rho_t_at(x, t) + flow.div_flux_at(x, t)
    })
}

/// `max |d_t rho + grad rho . v|` over `points`.
pub fn incompressibility_residual(flow: &FlowSample, points: &[Vec<f64>], t: f64) -> Result<f64> {
    sup_over(flow, points, t, |x| {
        let v = flow.velocity(x, t);
        let g = flow.grad_rho_at(x, t);
        flow.rho_t_at(x, t) + g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
    })
}

/// `max |div v|` over `points`.
pub fn divergence_free_check(flow: &FlowSample, points: &[Vec<f64>], t: f64) -> Result<f64> {
    sup_over(flow, points, t, |x| flow.div_v_at(x, t))
}

/// `max |rho v . (grad_x b, -1)|` on the graph `y = b(x, t)`, where `x`
/// ranges over `horizontal` samples in `R^{d-1}`.
pub fn bottom_flux_residual(
    flow: &FlowSample,
    b: &dyn Fn(&[f64], f64) -> f64,
    horizontal: &[Vec<f64>],
    t: f64,
) -> Result<f64> {
    let d = flow.dim();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "the bottom condition needs a vertical coordinate".into(),
        ));
    }
    let h = flow.step();
    let mut worst = 0.0f64;
    for x in horizontal {
        if x.len() != d - 1 {
            return Err(Error::ShapeMismatch {
                expected: d - 1,
                got: x.len(),
            });
        }
        let mut point = x.clone();
        point.push(b(x, t));
        flow.check_point(&point, t)?;
        let v = flow.velocity(&point, t);
        let mut dot = -v[d - 1];
        for k in 0..d - 1 {
            let slope = (b(&FlowSample::shifted(x, k, h), t)
                - b(&FlowSample::shifted(x, k, -h), t))
                / (2.0 * h);
            dot += v[k] * slope;
        }
        worst = worst.max((flow.rho(&point, t) * dot).abs());
    }
    Ok(worst)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn line_integral(
    v: &dyn Fn(&[f64]) -> Vec<f64>,
    a: &[f64],
    b: &[f64],
    quad: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let dir: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    quad.0
        .iter()
        .zip(&quad.1)
        .map(|(&th, &w)| {
            let x: Vec<f64> = a.iter().zip(&dir).map(|(p, d)| p + th * d).collect();
            w * v(&x).iter().zip(&dir).map(|(f, d)| f * d).sum::<f64>()
        })
        .sum()
}

fn check_nodes(quad_nodes: usize) -> Result<()> {
    if quad_nodes < 8 {
        return Err(Error::InvalidParameter(format!(
            "{quad_nodes} quadrature nodes requested; at least 8 are needed"
        )));
    }
    Ok(())
}

/// `u(X) = int_0^1 v(theta X) . X dtheta`, the potential normalized by
/// `u(0) = 0`.
pub fn potential_from_field(
    v: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    quad_nodes: usize,
) -> Result<f64> {
    check_nodes(quad_nodes)?;
    let origin = vec![0.0; x.len()];
    Ok(line_integral(v, &origin, x, &gauss_legendre(quad_nodes)))
}

/// Largest component of `grad u(X) - v(X)` for the reconstructed potential,
/// with `grad u` from central differences of step `h`.
pub fn potential_gradient_mismatch(
    v: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    quad_nodes: usize,
    h: f64,
) -> Result<f64> {
    check_nodes(quad_nodes)?;
    let target = v(x);
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let up = potential_from_field(v, &FlowSample::shifted(x, k, h), quad_nodes)?;
        let dn = potential_from_field(v, &FlowSample::shifted(x, k, -h), quad_nodes)?;
        worst = worst.max(((up - dn) / (2.0 * h) - target[k]).abs());
    }
    Ok(worst)
}

/// Circulation of `v` around the triangle `0 -> X -> X + delta e_j -> 0`.
pub fn triangle_circulation(
    v: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    axis: usize,
    delta: f64,
    quad_nodes: usize,
) -> Result<f64> {
    check_nodes(quad_nodes)?;
    if axis >= x.len() {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let quad = gauss_legendre(quad_nodes);
    let origin = vec![0.0; x.len()];
    let y = FlowSample::shifted(x, axis, delta);
    Ok(line_integral(v, &origin, x, &quad)
        + line_integral(v, x, &y, &quad)
        + line_integral(v, &y, &origin, &quad))
}
