use crate::error::{Error, Result};

/// Weight exponent `a` of the density `y^a` together with the fractional
/// order `s = (1 - a) / 2`.
///
/// Both values are stored; constructors keep them consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalParams {
    a: f64,
    s: f64,
}

impl FractionalParams {
    pub fn from_a(a: f64) -> Result<Self> {
        if !(a > -1.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "weight exponent a = {a} must lie in (-1, 1)"
            )));
        }
        Ok(Self {
            a,
            s: 0.5 * (1.0 - a),
        })
    }

    pub fn from_s(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fractional order s = {s} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            a: 1.0 - 2.0 * s,
            s,
        })
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Default vertical grading exponent for this weight.
    ///
    /// For `a <= 0` this is `2 / (1 + a)`; for `a > 0` the profile carries a
    /// `y^(1-a)` cusp and the mirrored choice `2 / (1 - a)` is used. Both
    /// cases collapse to `2 / (1 - |a|)`.
    pub fn default_grading(&self) -> f64 {
        (2.0 / (1.0 - self.a.abs())).max(1.0)
    }
}
