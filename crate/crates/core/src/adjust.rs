//! Choosing the false-alarm rate of a plug-in chart so that its in-control
//! behaviour, averaged over Phase I samples, meets a target.
//!
//! The knob is the tail probability `alpha` of the equal-tail limits; the
//! search is a bisection over `[alpha0 / 50, min(0.5, 50 alpha0)]` with
//! `alpha0 = 1 / target_arl`.

use serde::{Deserialize, Serialize};

use crate::error::{ChartError, Result};
use crate::estimated::{CarlDistribution, PivotQuadrature};
use crate::known::ShiftSpec;
use crate::numerics::bisect;

/// Relative tolerance on `alpha`.
pub const ALPHA_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    /// `ECARL(m, alpha) = target_arl`.
    EcarlMatch,
    /// `P(CARL < target_arl) = epsilon`.
    EpcCap,
    /// Smallest `alpha` with `SDCARL(m, alpha) <= epsilon * target_arl`.
    SdcarlCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentCriterion {
    pub kind: CriterionKind,
    pub target_arl: f64,
    pub epsilon: f64,
}

impl AdjustmentCriterion {
    pub fn new(kind: CriterionKind, target_arl: f64, epsilon: f64) -> Result<Self> {
        if !(target_arl > 1.0 && target_arl.is_finite()) {
            return Err(ChartError::InvalidParameter {
                name: "target_arl",
                value: target_arl,
                reason: "must exceed 1",
            });
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ChartError::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "must lie strictly between 0 and 1",
            });
        }
        Ok(Self { kind, target_arl, epsilon })
    }

    pub fn ecarl_match(target_arl: f64) -> Result<Self> {
        Self::new(CriterionKind::EcarlMatch, target_arl, 0.5)
    }

    pub fn nominal_alpha(&self) -> f64 {
        1.0 / self.target_arl
    }

    pub fn bracket(&self) -> (f64, f64) {
        let a = self.nominal_alpha();
        (a / 50.0, (50.0 * a).min(0.5))
    }

    /// Criterion statistic at `alpha`: ECARL, EPC or SDCARL.
    pub fn evaluate(&self, m: u32, alpha: f64, grid: &PivotQuadrature) -> Result<f64> {
        let dist = CarlDistribution::in_control(m, alpha)?;
        match self.kind {
            CriterionKind::EcarlMatch => Ok(dist.moments_on(grid)?.ecarl),
            CriterionKind::SdcarlCap => Ok(dist.moments_on(grid)?.sdcarl),
            CriterionKind::EpcCap => dist.cdf(self.target_arl),
        }
    }

    fn goal(&self) -> f64 {
        match self.kind {
            CriterionKind::EcarlMatch => self.target_arl,
            CriterionKind::EpcCap => self.epsilon,
            CriterionKind::SdcarlCap => self.epsilon * self.target_arl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjustmentResult {
    pub m: u32,
    pub kind: CriterionKind,
    pub alpha_adj: f64,
    /// Criterion statistic at `alpha_adj`.
    pub achieved: f64,
    pub iterations: u32,
    /// Final bisection bracket on `alpha`.
    pub bracket: (f64, f64),
}

pub fn adjust(m: u32, crit: &AdjustmentCriterion) -> Result<AdjustmentResult> {
    if m < 2 {
        return Err(ChartError::InvalidParameter {
            name: "m",
            value: m as f64,
            reason: "adjustment needs a phase I sample of at least 2",
        });
    }
    let crit = AdjustmentCriterion::new(crit.kind, crit.target_arl, crit.epsilon)?;
    let grid = PivotQuadrature::new(m)?;
    let (lo, hi) = crit.bracket();
    let goal = crit.goal();
    let f = |alpha: f64| Ok(crit.evaluate(m, alpha, &grid)? - goal);

    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if crit.kind == CriterionKind::SdcarlCap && f_lo <= 0.0 {
        // already under the cap at the smallest admissible alpha
        return Ok(AdjustmentResult {
            m,
            kind: crit.kind,
            alpha_adj: lo,
            achieved: f_lo + goal,
            iterations: 0,
            bracket: (lo, lo),
        });
    }
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 {
        return Err(ChartError::Infeasible {
            m,
            detail: format!(
                "{:?} statistic is {} at alpha = {lo:e} and {} at alpha = {hi:e}, target {goal}",
                crit.kind,
                f_lo + goal,
                f_hi + goal
            ),
        });
    }

    let root = bisect(f, lo, hi, ALPHA_RTOL, 200)?;
    // report from the side of the bracket that satisfies a cap
    let alpha_adj = match crit.kind {
        CriterionKind::SdcarlCap => root.bracket.1,
        _ => root.root,
    };
    Ok(AdjustmentResult {
        m,
        kind: crit.kind,
        alpha_adj,
        achieved: crit.evaluate(m, alpha_adj, &grid)?,
        iterations: root.iterations,
        bracket: root.bracket,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub m: u32,
    pub result: Option<AdjustmentResult>,
    /// Set when the criterion cannot be met at this `m`.
    pub infeasible: Option<String>,
}

/// [`adjust`] over several sample sizes; infeasible rows are kept and flagged.
pub fn criterion_curve(m_list: &[u32], crit: &AdjustmentCriterion) -> Result<Vec<CurveRow>> {
    m_list
        .iter()
        .map(|&m| match adjust(m, crit) {
            Ok(r) => Ok(CurveRow { m, result: Some(r), infeasible: None }),
            Err(e @ ChartError::Infeasible { .. }) => Ok(CurveRow {
                m,
                result: None,
                infeasible: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Expected conditional ARL after a scale shift, with and without adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OocCost {
    pub delta1: f64,
    pub ecarl_adjusted: f64,
    pub ecarl_unadjusted: f64,
}

pub fn out_of_control_cost(
    m: u32,
    alpha_adj: f64,
    alpha0: f64,
    eta0: f64,
    delta1: &[f64],
) -> Result<Vec<OocCost>> {
    let grid = PivotQuadrature::new(m)?;
    delta1
        .iter()
        .map(|&d| {
            let shift = ShiftSpec::scale_only(d)?;
            let ecarl = |alpha| -> Result<f64> {
                Ok(CarlDistribution::new(m, alpha, eta0, shift)?.moments_on(&grid)?.ecarl)
            };
            Ok(OocCost {
                delta1: d,
                ecarl_adjusted: ecarl(alpha_adj)?,
                ecarl_unadjusted: ecarl(alpha0)?,
            })
        })
        .collect()
}
