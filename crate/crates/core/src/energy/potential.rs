use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A potential `F` with nonlinearity `f = -F'` and its derivative `f'`.
///
/// `F` is shifted at construction so that its smallest value over the listed
/// minimizers is zero.
#[derive(Clone)]
pub struct Potential {
    big_f: ScalarFn,
    f: ScalarFn,
    df: ScalarFn,
    shift: f64,
    minimizers: Vec<f64>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("shift", &self.shift)
            .field("minimizers", &self.minimizers)
            .finish()
    }
}

impl Potential {
    pub fn new(
        big_f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        minimizers: Vec<f64>,
    ) -> Result<Self> {
        if minimizers.is_empty() {
            return Err(Error::InvalidParameter(
                "a potential needs at least one minimizer".into(),
            ));
        }
        let shift = minimizers
            .iter()
            .map(|&m| big_f(m))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            big_f: Arc::new(big_f),
            f: Arc::new(f),
            df: Arc::new(df),
            shift,
            minimizers,
        })
    }

    /// `F(t) = (1 - t^2)^2 / 4`, `f(t) = t - t^3`.
    pub fn double_well() -> Self {
        Self::new(
            |t| 0.25 * (1.0 - t * t).powi(2),
            |t| t - t * t * t,
            |t| 1.0 - 3.0 * t * t,
            vec![-1.0, 1.0],
        )
        .expect("minimizer list is non-empty")
    }

    /// Normalized energy density.
    #[inline]
    pub fn energy(&self, t: f64) -> f64 {
        (self.big_f)(t) - self.shift
    }

    /// Nonlinearity `f = -F'`.
    #[inline]
    pub fn force(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// `f'`.
    #[inline]
    pub fn force_derivative(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    pub fn min_value(&self) -> f64 {
        0.0
    }

    pub fn minimizers(&self) -> &[f64] {
        &self.minimizers
    }

    /// Largest `|F'(t) + f(t)|` over `samples` points of `[lo, hi]`, with
    /// `F'` from central differences of step `1e-5`.
    pub fn derivative_defect(&self, lo: f64, hi: f64, samples: usize) -> f64 {
        let h = 1e-5;
        (0..samples)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / (samples.max(2) - 1) as f64;
                let fd = (self.energy(t + h) - self.energy(t - h)) / (2.0 * h);
                (fd + self.force(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `int_0^1 f(a + theta d) dtheta` by four-point Gauss-Legendre, exact
    /// for polynomial `f` of degree up to seven.
    pub(crate) fn mean_force(&self, a: f64, d: f64) -> f64 {
        const NODES: [f64; 4] = [
            0.069_431_844_202_973_71,
            0.330_009_478_207_571_9,
            0.669_990_521_792_428_1,
            0.930_568_155_797_026_3,
        ];
        const WEIGHTS: [f64; 4] = [
            0.173_927_422_568_726_93,
            0.326_072_577_431_273_07,
            0.326_072_577_431_273_07,
            0.173_927_422_568_726_93,
        ];
        NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(t, w)| w * self.force(a + t * d))
            .sum()
    }
}
