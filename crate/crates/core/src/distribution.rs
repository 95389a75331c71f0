//! Two-parameter Weibull distribution of the time between events.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_positive, check_probability, Result};

/// Shape `eta` and scale `beta` of a Weibull law.
///
/// The density is `(eta/beta) (x/beta)^(eta-1) exp(-(x/beta)^eta)` on `x > 0`;
/// `beta` is always the 63.2% point whatever the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    eta: f64,
    beta: f64,
}

impl WeibullParams {
    pub fn new(eta: f64, beta: f64) -> Result<Self> {
        check_positive("eta", eta)?;
        check_positive("beta", beta)?;
        Ok(Self { eta, beta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Density. Zero for negative `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let z = x / self.beta;
        (self.eta / self.beta) * z.powf(self.eta - 1.0) * (-z.powf(self.eta)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-(x / self.beta).powf(self.eta)).exp_m1()
    }

    /// Survival function `P(X > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        (-(x / self.beta).powf(self.eta)).exp()
    }

    /// The `u`-quantile, `beta * (-ln(1 - u))^(1/eta)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_probability("u", u)?;
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        self.beta * (-(-u).ln_1p()).powf(1.0 / self.eta)
    }

    /// Mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        let g1 = gamma(1.0 + 1.0 / self.eta);
        let g2 = gamma(1.0 + 2.0 / self.eta);
        (self.beta * g1, self.beta * self.beta * (g2 - g1 * g1))
    }

    pub fn mean(&self) -> f64 {
        self.beta * gamma(1.0 + 1.0 / self.eta)
    }

    /// Inverse-transform draw from an explicit uniform in (0, 1).
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.quantile_unchecked(u)
    }

    /// Inverse-transform draw. The uniform is reflected to `1 - U`, which has
    /// the same law, so the quantile reduces to `beta * (-ln U)^(1/eta)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let e = -u.ln();
        if self.eta == 1.0 {
            self.beta * e
        } else {
            self.beta * e.powf(1.0 / self.eta)
        }
    }
}
