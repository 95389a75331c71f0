//! Charts whose scale is estimated from a Phase I sample.
//!
//! With the shape known, the maximum likelihood scale gives the pivot
//! `W = (beta_hat / beta0)^eta0 ~ Gamma(shape m, rate m)`, i.e. `2mW` is
//! chi-square with `2m` degrees of freedom. Everything conditional on the
//! Phase I sample is a function of `W` alone, so the distribution of the
//! conditional ARL is handled exactly in `w`-space: moments by quadrature
//! over the pivot's probability scale, the CDF by locating the two roots of
//! `CPS(w) = 1/c` on either side of the CPS minimum.

use serde::Serialize;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{check_positive, check_probability, ChartError, Result};
use crate::known::{tail_exponents, Arl, ChartDesign, LimitSource, ShiftSpec};
use crate::numerics::{bisect, gamma_p_inv, gamma_q_inv, GaussLegendre};

/// Maximum likelihood scale from a Phase I sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseIEstimate {
    pub m: u32,
    pub beta_hat: f64,
    /// `(beta_hat / beta0)^eta0`, known only when a reference scale is supplied.
    pub w: Option<f64>,
}

impl PhaseIEstimate {
    pub fn with_reference(mut self, beta0: f64, eta0: f64) -> Result<Self> {
        check_positive("beta0", beta0)?;
        self.w = Some((self.beta_hat / beta0).powf(eta0));
        Ok(self)
    }
}

/// `beta_hat = (sum x_i^eta0 / m)^(1/eta0)`.
pub fn mle_scale(phase1: &[f64], eta0: f64) -> Result<PhaseIEstimate> {
    check_positive("eta0", eta0)?;
    if phase1.is_empty() {
        return Err(ChartError::EmptySample);
    }
    let mut sum = 0.0;
    for (index, &x) in phase1.iter().enumerate() {
        if !(x > 0.0 && x.is_finite()) {
            return Err(ChartError::NonPositiveObservation { index, value: x });
        }
        sum += if eta0 == 1.0 { x } else { x.powf(eta0) };
    }
    let m = phase1.len();
    let mean = sum / m as f64;
    let beta_hat = if eta0 == 1.0 { mean } else { mean.powf(1.0 / eta0) };
    Ok(PhaseIEstimate {
        m: m as u32,
        beta_hat,
        w: None,
    })
}

/// Plug-in limits `beta_hat * A1`, `beta_hat * A2`.
pub fn plugin_limits(est: &PhaseIEstimate, alpha0: f64, eta0: f64) -> Result<ChartDesign> {
    ChartDesign::build(alpha0, eta0, est.beta_hat, LimitSource::Estimated)
}

/// Signal probability of a plug-in chart as a function of the pivot `w`.
///
/// `CPS(w) = 1 - exp(-k(w) b1) + exp(-k(w) b2)` with `k(w) = w^d2 / d1^(d2 eta0)`
/// and `b_j = t_j^d2`, where `t_j` are the in-control tail exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalChart {
    alpha0: f64,
    eta0: f64,
    shift: ShiftSpec,
    b1: f64,
    b2: f64,
    k_scale: f64,
}

impl ConditionalChart {
    pub fn new(alpha0: f64, eta0: f64, shift: ShiftSpec) -> Result<Self> {
        check_probability("alpha0", alpha0)?;
        check_positive("eta0", eta0)?;
        let shift = ShiftSpec::new(shift.delta1, shift.delta2)?;
        let (t1, t2) = tail_exponents(alpha0);
        Ok(Self {
            alpha0,
            eta0,
            shift,
            b1: t1.powf(shift.delta2),
            b2: t2.powf(shift.delta2),
            k_scale: shift.delta1.powf(shift.delta2 * eta0),
        })
    }

    pub fn in_control(alpha0: f64) -> Result<Self> {
        Self::new(alpha0, 1.0, ShiftSpec::in_control())
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn shift(&self) -> ShiftSpec {
        self.shift
    }

    fn k_of_w(&self, w: f64) -> f64 {
        let wk = if self.shift.delta2 == 1.0 { w } else { w.powf(self.shift.delta2) };
        wk / self.k_scale
    }

    fn w_of_k(&self, k: f64) -> f64 {
        let x = k * self.k_scale;
        if self.shift.delta2 == 1.0 {
            x
        } else {
            x.powf(1.0 / self.shift.delta2)
        }
    }

    fn cps_of_k(&self, k: f64) -> f64 {
        -(-k * self.b1).exp_m1() + (-k * self.b2).exp()
    }

    pub fn cps(&self, w: f64) -> f64 {
        self.cps_of_k(self.k_of_w(w))
    }

    pub fn carl(&self, w: f64) -> Arl {
        Arl::from_probability(self.cps(w))
    }

    fn k_star(&self) -> f64 {
        (self.b2 / self.b1).ln() / (self.b2 - self.b1)
    }

    /// Pivot value where CPS is smallest and CARL largest.
    pub fn w_star(&self) -> f64 {
        self.w_of_k(self.k_star())
    }

    /// Supremum of the conditional ARL over all Phase I outcomes.
    pub fn carl_max(&self) -> f64 {
        1.0 / self.cps_of_k(self.k_star())
    }

    /// The two pivot values `w_lo < w* < w_hi` with `CPS(w) = 1/c`, for
    /// `1 < c < carl_max`.
    pub fn carl_level_roots(&self, c: f64) -> Result<(f64, f64)> {
        let level = 1.0 / c;
        let k_star = self.k_star();
        let f = |k: f64| Ok(self.cps_of_k(k) - level);
        let lo = bisect(f, 0.0, k_star, 1e-15, 400)?.root;
        // 1 - exp(-k b1) alone reaches the level here.
        let k_up = -(-level).ln_1p() / self.b1;
        let k_up = k_up.max(k_star * 2.0);
        let hi = bisect(f, k_star, k_up, 1e-15, 400)?.root;
        Ok((self.w_of_k(lo), self.w_of_k(hi)))
    }
}

pub fn conditional_ps(w: f64, alpha0: f64, eta0: f64, shift: &ShiftSpec) -> Result<f64> {
    check_positive("w", w)?;
    Ok(ConditionalChart::new(alpha0, eta0, *shift)?.cps(w))
}

pub fn conditional_arl(w: f64, alpha0: f64, eta0: f64, shift: &ShiftSpec) -> Result<Arl> {
    Ok(Arl::from_probability(conditional_ps(w, alpha0, eta0, shift)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlSup {
    pub w_star: f64,
    pub carl_max: f64,
}

/// In-control maximiser of the conditional ARL:
/// `w* = ln(t2/t1) / (t2 - t1)` and `carl_max = 1 / CPS(w*)`.
pub fn carl_sup(alpha0: f64) -> Result<CarlSup> {
    let chart = ConditionalChart::in_control(alpha0)?;
    Ok(CarlSup {
        w_star: chart.w_star(),
        carl_max: chart.carl_max(),
    })
}

/// Law of the pivot `W ~ Gamma(shape m, rate m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotLaw {
    m: u32,
}

impl PivotLaw {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(ChartError::InvalidParameter {
                name: "m",
                value: 0.0,
                reason: "phase I sample size must be at least 1",
            });
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cdf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        if w.is_infinite() {
            return 1.0;
        }
        let m = self.m as f64;
        gamma_lr(m, m * w)
    }

    pub fn sf(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 1.0;
        }
        if w.is_infinite() {
            return 0.0;
        }
        let m = self.m as f64;
        gamma_ur(m, m * w)
    }

    /// `w` with `P(W <= w) = p`.
    pub fn lower_quantile(&self, p: f64) -> f64 {
        let m = self.m as f64;
        gamma_p_inv(m, p) / m
    }

    /// `w` with `P(W > w) = q`.
    pub fn upper_quantile(&self, q: f64) -> f64 {
        let m = self.m as f64;
        gamma_q_inv(m, q) / m
    }
}

/// Panel order of the Gauss-Legendre rule; the error check doubles it.
const PANEL_ORDER: usize = 24;
/// Accepted relative disagreement between the two rules.
const QUADRATURE_RTOL: f64 = 1e-8;
/// Decades of tail probability covered by graded panels.
const PANEL_DECADES: i32 = 17;

/// Pivot values and weights for expectations `E[f(W)]`.
///
/// The probability scale `u = P(W <= w)` is folded at 1/2 so each tail is
/// reached through its own quantile (`u` and `1 - u` are never formed), then
/// split into panels graded geometrically towards the tails, each carrying
/// a Gauss-Legendre rule. Two rules, of order `n` and `2n`, are kept so every
/// expectation comes with an error estimate. The nodes depend on `m` only,
/// which lets one grid serve many false-alarm rates.
#[derive(Debug, Clone)]
pub struct PivotQuadrature {
    law: PivotLaw,
    coarse: Vec<(f64, f64)>,
    fine: Vec<(f64, f64)>,
}

impl PivotQuadrature {
    pub fn new(m: u32) -> Result<Self> {
        let law = PivotLaw::new(m)?;
        let coarse = Self::grid(&law, &GaussLegendre::new(PANEL_ORDER));
        let fine = Self::grid(&law, &GaussLegendre::new(2 * PANEL_ORDER));
        Ok(Self { law, coarse, fine })
    }

    pub fn law(&self) -> PivotLaw {
        self.law
    }

    fn grid(law: &PivotLaw, rule: &GaussLegendre) -> Vec<(f64, f64)> {
        let mut edges = vec![0.0];
        edges.extend((0..PANEL_DECADES).rev().map(|j| 0.5 * 10f64.powi(-j)));
        let mut out = Vec::with_capacity(2 * rule.order() * (edges.len() - 1));
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            for (&x, &wt) in rule.nodes().iter().zip(rule.weights()) {
                let v = mid + half * x;
                let weight = wt * half;
                out.push((law.lower_quantile(v), weight));
                out.push((law.upper_quantile(v), weight));
            }
        }
        out
    }

    fn sums<F: Fn(f64) -> f64>(grid: &[(f64, f64)], f: F, reference: f64) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for &(w, weight) in grid {
            let v = f(w);
            let d = v - reference;
            acc[0] += weight * v;
            acc[1] += weight * v * v;
            acc[2] += weight * d * d;
        }
        acc
    }

    /// Mean and standard deviation of `f(W)`, checked for convergence.
    pub fn mean_sd<F: Fn(f64) -> f64>(&self, f: F) -> Result<(f64, f64, f64)> {
        let reference = f(1.0);
        let c = Self::sums(&self.coarse, &f, reference);
        let fine = Self::sums(&self.fine, &f, reference);
        let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
        let rel_error = rel(c[0], fine[0]).max(rel(c[1], fine[1]));
        let mean = fine[0];
        if rel_error.is_nan() || rel_error >= QUADRATURE_RTOL {
            return Err(ChartError::QuadratureNotConverged {
                estimate: mean,
                rel_error,
            });
        }
        let centred = mean - reference;
        let variance = fine[2] - centred * centred;
        if variance < 0.0 {
            return Err(ChartError::NegativeVariance { variance });
        }
        Ok((mean, variance.sqrt(), rel_error))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlMoments {
    pub ecarl: f64,
    pub sdcarl: f64,
    /// Relative disagreement between the two quadrature rules.
    pub rel_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Percentile {
    pub level: f64,
    pub value: f64,
}

/// Summary of the distribution of the conditional ARL across Phase I samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlSummary {
    pub acarl: f64,
    pub sdcarl: f64,
    pub epc: f64,
    pub percentiles: Vec<Percentile>,
    pub carl_sup: f64,
}

/// Distribution of `CARL = 1 / CPS(W)` for Phase I samples of size `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlDistribution {
    chart: ConditionalChart,
    law: PivotLaw,
}

impl CarlDistribution {
    pub fn new(m: u32, alpha0: f64, eta0: f64, shift: ShiftSpec) -> Result<Self> {
        Ok(Self {
            chart: ConditionalChart::new(alpha0, eta0, shift)?,
            law: PivotLaw::new(m)?,
        })
    }

    pub fn in_control(m: u32, alpha0: f64) -> Result<Self> {
        Self::new(m, alpha0, 1.0, ShiftSpec::in_control())
    }

    pub fn chart(&self) -> &ConditionalChart {
        &self.chart
    }

    pub fn m(&self) -> u32 {
        self.law.m()
    }

    pub fn moments(&self) -> Result<CarlMoments> {
        self.moments_on(&PivotQuadrature::new(self.m())?)
    }

    /// Moments on a prebuilt grid, which must be for the same `m`.
    pub fn moments_on(&self, grid: &PivotQuadrature) -> Result<CarlMoments> {
        assert_eq!(grid.law().m(), self.m(), "quadrature grid built for another m");
        let (ecarl, sdcarl, rel_error) = grid.mean_sd(|w| 1.0 / self.chart.cps(w))?;
        Ok(CarlMoments {
            ecarl,
            sdcarl,
            rel_error,
        })
    }

    pub fn carl_max(&self) -> f64 {
        self.chart.carl_max()
    }

    /// `P(CARL <= c)`. The law is continuous, so this is also `P(CARL < c)`.
    pub fn cdf(&self, c: f64) -> Result<f64> {
        if c <= 1.0 {
            return Ok(0.0);
        }
        if c >= self.carl_max() {
            return Ok(1.0);
        }
        let (w_lo, w_hi) = self.chart.carl_level_roots(c)?;
        Ok((self.law.cdf(w_lo) + self.law.sf(w_hi)).min(1.0))
    }

    /// Inverse of [`cdf`](Self::cdf) by bisection on `(1, carl_max]`.
    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        check_probability("gamma", gamma)?;
        let root = bisect(|c| Ok(self.cdf(c)? - gamma), 1.0, self.carl_max(), 1e-12, 200)?;
        Ok(root.root)
    }

    pub fn summary(&self, levels: &[f64], target_arl: f64) -> Result<CarlSummary> {
        let moments = self.moments()?;
        let percentiles = levels
            .iter()
            .map(|&level| Ok(Percentile { level, value: self.quantile(level)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(CarlSummary {
            acarl: moments.ecarl,
            sdcarl: moments.sdcarl,
            epc: self.cdf(target_arl)?,
            percentiles,
            carl_sup: self.carl_max(),
        })
    }
}

/// Expected conditional ARL.
pub fn ecarl(m: u32, alpha0: f64, eta0: f64, shift: &ShiftSpec) -> Result<f64> {
    Ok(CarlDistribution::new(m, alpha0, eta0, *shift)?.moments()?.ecarl)
}

/// Standard deviation of the conditional ARL, `sqrt(E[CARL^2] - E[CARL]^2)`.
pub fn sdcarl(m: u32, alpha0: f64, eta0: f64, shift: &ShiftSpec) -> Result<f64> {
    Ok(CarlDistribution::new(m, alpha0, eta0, *shift)?.moments()?.sdcarl)
}

pub fn carl_cdf(c: f64, m: u32, alpha0: f64, eta0: f64, shift: &ShiftSpec) -> Result<f64> {
    CarlDistribution::new(m, alpha0, eta0, *shift)?.cdf(c)
}

pub fn carl_quantile(gamma: f64, m: u32, alpha0: f64, eta0: f64, shift: &ShiftSpec) -> Result<f64> {
    CarlDistribution::new(m, alpha0, eta0, *shift)?.quantile(gamma)
}

/// In-control probability that the conditional ARL falls short of `target_arl`.
pub fn exceedance_probability(m: u32, alpha0: f64, target_arl: f64) -> Result<f64> {
    check_positive("target_arl", target_arl)?;
    CarlDistribution::in_control(m, alpha0)?.cdf(target_arl)
}
