//! Shewhart probability limits for Weibull TBE data when the in-control
//! shape and scale are known, plus signal probability and run length under
//! multiplicative shifts.

use serde::{Deserialize, Serialize, Serializer};

use crate::distribution::WeibullParams;
use crate::error::{check_positive, check_probability, Result};

/// Where the scale used for the limits came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitSource {
    Known,
    Estimated,
}

/// Equal-tail probability limits `LCL = scale * A1`, `UCL = scale * A2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartDesign {
    pub alpha0: f64,
    pub eta0: f64,
    pub scale_used: f64,
    pub a1: f64,
    pub a2: f64,
    pub lcl: f64,
    pub cl: f64,
    pub ucl: f64,
    pub source: LimitSource,
}

impl ChartDesign {
    pub(crate) fn build(alpha0: f64, eta0: f64, scale: f64, source: LimitSource) -> Result<Self> {
        check_probability("alpha0", alpha0)?;
        let params = WeibullParams::new(eta0, scale)?;
        let (t1, t2) = tail_exponents(alpha0);
        let a1 = t1.powf(1.0 / eta0);
        let a2 = t2.powf(1.0 / eta0);
        Ok(Self {
            alpha0,
            eta0,
            scale_used: scale,
            a1,
            a2,
            lcl: scale * a1,
            cl: params.mean(),
            ucl: scale * a2,
            source,
        })
    }

    /// Position of a plotted observation relative to the limits. Landing
    /// exactly on a limit does not signal.
    pub fn classify(&self, x: f64) -> PointStatus {
        if x < self.lcl {
            PointStatus::BelowLcl
        } else if x > self.ucl {
            PointStatus::AboveUcl
        } else {
            PointStatus::InLimits
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    InLimits,
    BelowLcl,
    AboveUcl,
}

impl PointStatus {
    pub fn is_signal(self) -> bool {
        self != PointStatus::InLimits
    }
}

/// `(-ln(1 - alpha0/2), -ln(alpha0/2))`: the limit coefficients raised to
/// the in-control shape.
pub fn tail_exponents(alpha0: f64) -> (f64, f64) {
    (-(-0.5 * alpha0).ln_1p(), -(0.5 * alpha0).ln())
}

/// Out-of-control state as ratios `delta1 = beta1/beta0`, `delta2 = eta1/eta0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub delta1: f64,
    pub delta2: f64,
}

impl ShiftSpec {
    pub fn new(delta1: f64, delta2: f64) -> Result<Self> {
        check_positive("delta1", delta1)?;
        check_positive("delta2", delta2)?;
        Ok(Self { delta1, delta2 })
    }

    pub const fn in_control() -> Self {
        Self { delta1: 1.0, delta2: 1.0 }
    }

    pub fn scale_only(delta1: f64) -> Result<Self> {
        Self::new(delta1, 1.0)
    }

    pub fn is_in_control(&self) -> bool {
        self.delta1 == 1.0 && self.delta2 == 1.0
    }

    /// The monitored distribution after the shift.
    pub fn shifted(&self, eta0: f64, beta0: f64) -> Result<WeibullParams> {
        WeibullParams::new(self.delta2 * eta0, self.delta1 * beta0)
    }
}

impl Default for ShiftSpec {
    fn default() -> Self {
        Self::in_control()
    }
}

/// Limits from known in-control parameters.
pub fn design_limits(alpha0: f64, eta0: f64, beta0: f64) -> Result<ChartDesign> {
    ChartDesign::build(alpha0, eta0, beta0, LimitSource::Known)
}

/// Probability that one plotted point falls outside the limits once the
/// process has moved to `W(delta2 * eta0, delta1 * scale_used)`.
pub fn prob_signal(design: &ChartDesign, shift: &ShiftSpec) -> f64 {
    let (t1, t2) = tail_exponents(design.alpha0);
    // (A_j / delta1)^(delta2 eta0) = (t_j / delta1^eta0)^delta2
    let d = shift.delta1.powf(design.eta0);
    let e1 = (t1 / d).powf(shift.delta2);
    let e2 = (t2 / d).powf(shift.delta2);
    -(-e1).exp_m1() + (-e2).exp()
}

/// Average run length. A zero signal probability is `Unbounded`, which is
/// kept apart from a finite but huge value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arl {
    Finite(f64),
    Unbounded,
}

impl Arl {
    pub fn from_probability(ps: f64) -> Self {
        if ps > 0.0 {
            Arl::Finite(1.0 / ps)
        } else {
            Arl::Unbounded
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Arl::Finite(v) => v,
            Arl::Unbounded => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Arl::Finite(v) => Some(v),
            Arl::Unbounded => None,
        }
    }
}

impl Serialize for Arl {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Arl::Finite(v) => s.serialize_f64(*v),
            Arl::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

pub fn arl(design: &ChartDesign, shift: &ShiftSpec) -> Arl {
    Arl::from_probability(prob_signal(design, shift))
}

/// Smallest `n` with `1 - (1 - ps)^n >= q`; `None` when `ps == 0`.
pub fn geometric_quantile(ps: f64, q: f64) -> Option<u64> {
    if ps <= 0.0 {
        return None;
    }
    if ps >= 1.0 {
        return Some(1);
    }
    let log_keep = (-ps).ln_1p();
    let cdf = |n: u64| -(n as f64 * log_keep).exp_m1();
    let mut n = ((-q).ln_1p() / log_keep).ceil().max(1.0) as u64;
    while n > 1 && cdf(n - 1) >= q {
        n -= 1;
    }
    while cdf(n) < q {
        n += 1;
    }
    Some(n)
}

/// Quantile of the geometric run length.
pub fn run_length_quantile(design: &ChartDesign, shift: &ShiftSpec, q: f64) -> Result<Option<u64>> {
    check_probability("q", q)?;
    Ok(geometric_quantile(prob_signal(design, shift), q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ALPHA: f64 = 0.0027;

    #[test]
    fn exponential_limits() {
        let d = design_limits(ALPHA, 1.0, 1.0).unwrap();
        assert_relative_eq!(d.a1, 0.001_350_912_070_956_274, max_relative = 1e-13);
        assert_relative_eq!(d.a2, 6.607_650_686_531_799, max_relative = 1e-13);
        assert_relative_eq!(d.cl, 1.0, epsilon = 1e-14);
        let p = WeibullParams::new(1.0, 1.0).unwrap();
        assert_relative_eq!(p.cdf(d.lcl), ALPHA / 2.0, max_relative = 1e-12);
        assert_relative_eq!(p.sf(d.ucl), ALPHA / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rayleigh_limits_are_square_roots() {
        let d1 = design_limits(ALPHA, 1.0, 1.0).unwrap();
        let d2 = design_limits(ALPHA, 2.0, 1.0).unwrap();
        assert_relative_eq!(d2.a1, d1.a1.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(d2.a2, d1.a2.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(d2.a1, 0.036_755, max_relative = 1e-4);
        assert_relative_eq!(d2.a2, 2.570_54, max_relative = 1e-5);
    }

    #[test]
    fn doubling_beta_doubles_limits() {
        let d = design_limits(ALPHA, 1.7, 3.0).unwrap();
        let e = design_limits(ALPHA, 1.7, 6.0).unwrap();
        assert_eq!(d.a1, e.a1);
        assert_eq!(d.a2, e.a2);
        assert_relative_eq!(e.lcl, 2.0 * d.lcl, max_relative = 1e-15);
        assert_relative_eq!(e.ucl, 2.0 * d.ucl, max_relative = 1e-15);
        assert_relative_eq!(e.cl, 2.0 * d.cl, max_relative = 1e-15);
        assert!(d.lcl < d.cl && d.cl < d.ucl);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(design_limits(1.5, 1.0, 1.0).is_err());
        assert!(design_limits(0.0, 1.0, 1.0).is_err());
        assert!(ShiftSpec::new(0.0, 1.0).is_err());
    }

    #[test]
    fn signal_probability_values() {
        let d = design_limits(ALPHA, 1.0, 1.0).unwrap();
        assert_relative_eq!(prob_signal(&d, &ShiftSpec::in_control()), ALPHA, max_relative = 1e-12);
        let up = ShiftSpec::scale_only(2.0).unwrap();
        // 1 - exp(-A1/2) + exp(-A2/2)
        assert_relative_eq!(prob_signal(&d, &up), 0.037_414, max_relative = 1e-4);
        let down = ShiftSpec::scale_only(0.5).unwrap();
        assert_relative_eq!(prob_signal(&d, &down), 0.002_700, max_relative = 1e-3);
    }

    #[test]
    fn arl_values() {
        let d = design_limits(ALPHA, 1.0, 1.0).unwrap();
        assert_relative_eq!(arl(&d, &ShiftSpec::in_control()).value(), 370.370_370, max_relative = 1e-9);
        assert_relative_eq!(arl(&d, &ShiftSpec::scale_only(2.0).unwrap()).value(), 26.73, max_relative = 1e-3);
        assert_eq!(Arl::from_probability(0.5), Arl::Finite(2.0));
        // a near-degenerate shape collapses all mass inside the limits
        let frozen = ShiftSpec::new(1.0, 1e6).unwrap();
        assert_eq!(arl(&d, &frozen), Arl::Unbounded);
    }

    #[test]
    fn run_length_quantiles() {
        assert_eq!(geometric_quantile(0.5, 0.5), Some(1));
        assert_eq!(geometric_quantile(ALPHA, 0.5), Some(257));
        assert_eq!(geometric_quantile(0.0, 0.5), None);
        // ln(0.05)/ln(0.9973) = 1108.07..
        assert_eq!(geometric_quantile(ALPHA, 0.95), Some(1109));
        // cross-check by summing the pmf
        let mut cum = 0.0;
        let mut n = 0u64;
        while cum < 0.95 {
            n += 1;
            cum += ALPHA * (1.0 - ALPHA).powi(n as i32 - 1);
        }
        assert_eq!(n, 1109);
        let d = design_limits(ALPHA, 1.0, 1.0).unwrap();
        assert!(run_length_quantile(&d, &ShiftSpec::in_control(), 1.0).is_err());
    }

    #[test]
    fn classify_uses_strict_exceedance() {
        let d = design_limits(ALPHA, 1.0, 1.0).unwrap();
        assert_eq!(d.classify(d.ucl), PointStatus::InLimits);
        assert_eq!(d.classify(d.lcl), PointStatus::InLimits);
        assert_eq!(d.classify(7.0), PointStatus::AboveUcl);
        assert_eq!(d.classify(1e-4), PointStatus::BelowLcl);
    }

    proptest! {
        #[test]
        fn in_control_reduces_to_alpha(alpha in 1e-5f64..0.5, eta in 0.2f64..10.0, beta in 0.01f64..1e3) {
            let d = design_limits(alpha, eta, beta).unwrap();
            let ps = prob_signal(&d, &ShiftSpec::in_control());
            prop_assert!((ps - alpha).abs() <= 1e-12 * alpha);
            let p = WeibullParams::new(eta, beta).unwrap();
            prop_assert!((p.cdf(d.lcl) - alpha / 2.0).abs() <= 1e-10 * alpha);
            prop_assert!((p.sf(d.ucl) - alpha / 2.0).abs() <= 1e-10 * alpha);
        }

        #[test]
        fn signal_probability_ignores_beta(alpha in 1e-4f64..0.2, eta in 0.3f64..5.0,
                                           d1 in 0.2f64..5.0, d2 in 0.3f64..3.0) {
            let s = ShiftSpec::new(d1, d2).unwrap();
            let a = prob_signal(&design_limits(alpha, eta, 1.0).unwrap(), &s);
            let b = prob_signal(&design_limits(alpha, eta, 2.0).unwrap(), &s);
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn signal_probability_equals_tail_mass(alpha in 1e-4f64..0.2, eta in 0.3f64..5.0, beta in 0.1f64..50.0,
                                               d1 in 0.2f64..5.0, d2 in 0.3f64..3.0) {
            let d = design_limits(alpha, eta, beta).unwrap();
            let s = ShiftSpec::new(d1, d2).unwrap();
            let law = s.shifted(eta, beta).unwrap();
            let direct = law.cdf(d.lcl) + law.sf(d.ucl);
            prop_assert!((prob_signal(&d, &s) - direct).abs() <= 1e-12 * direct.max(1e-300) + 1e-300);
        }
    }
}
