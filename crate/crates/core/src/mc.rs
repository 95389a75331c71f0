//! Seeded Monte Carlo study of the conditional ARL of plug-in charts.
//!
//! Each replicate simulates a raw in-control Phase I sample, estimates the
//! scale, and evaluates the conditional ARL of the resulting limits. This is
//! deliberately independent of the pivot-space quadrature in
//! [`crate::estimated`], which it is used to cross-check.
//!
//! Replicate `r` of a row draws from its own ChaCha stream (`set_stream(r)`)
//! under a row seed mixed from the master seed, the sample size and the
//! parameters, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::WeibullParams;
use crate::error::{ChartError, Result};
use crate::estimated::{mle_scale, CarlSummary, ConditionalChart, Percentile};
use crate::known::{prob_signal, ChartDesign, ShiftSpec};

/// Percentile levels reported in the published study.
pub const TABLE1_LEVELS: [f64; 7] = [0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95];
pub const TABLE1_M: [u32; 10] = [30, 50, 100, 200, 500, 800, 1000, 2000, 5000, 8000];
pub const TABLE1_PARAMS: [(f64, f64); 6] = [(1.0, 1.0), (1.0, 15.0), (0.5, 10.0), (1.5, 5.0), (2.0, 5.0), (10.0, 15.0)];

/// Per-replicate cap on plotted points in run-length simulation.
pub const RUN_LENGTH_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InControlParams {
    pub eta0: f64,
    pub beta0: f64,
}

impl From<(f64, f64)> for InControlParams {
    fn from((eta0, beta0): (f64, f64)) -> Self {
        Self { eta0, beta0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub alpha0: f64,
    pub params: Vec<InControlParams>,
    pub m: Vec<u32>,
    pub replications: u64,
    pub percentiles: Vec<f64>,
    pub target_arl: f64,
    pub seed: u64,
    /// Phase II state; in control unless set.
    pub shift: ShiftSpec,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            alpha0: 0.0027,
            params: vec![InControlParams { eta0: 1.0, beta0: 1.0 }],
            m: TABLE1_M.to_vec(),
            replications: 200_000,
            percentiles: TABLE1_LEVELS.to_vec(),
            target_arl: 370.4,
            seed: 20_250_101,
            shift: ShiftSpec::in_control(),
        }
    }
}

impl StudyConfig {
    /// Every parameter block of the published study.
    pub fn table1() -> Self {
        Self {
            params: TABLE1_PARAMS.iter().copied().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ChartError::InvalidConfig(msg));
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return bad(format!("alpha0 = {} must lie in (0, 1)", self.alpha0));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if let Some(&m) = self.m.iter().find(|&&m| m == 0) {
            return bad(format!("phase I sample size {m} must be at least 1"));
        }
        for p in &self.params {
            WeibullParams::new(p.eta0, p.beta0)
                .map_err(|e| ChartError::InvalidConfig(format!("params ({}, {}): {e}", p.eta0, p.beta0)))?;
        }
        if self.percentiles.iter().any(|&g| !(g > 0.0 && g < 1.0)) {
            return bad("percentile levels must lie in (0, 1)".into());
        }
        if self.percentiles.windows(2).any(|w| w[0] >= w[1]) {
            return bad("percentile levels must be strictly increasing".into());
        }
        if !(self.target_arl > 1.0 && self.target_arl.is_finite()) {
            return bad(format!("target_arl = {} must exceed 1", self.target_arl));
        }
        ShiftSpec::new(self.shift.delta1, self.shift.delta2)?;
        Ok(())
    }
}

/// One row of the study: a parameter block at one Phase I sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub eta0: f64,
    pub beta0: f64,
    pub m: u32,
    pub replications: u64,
    pub summary: CarlSummary,
}

impl StudyRow {
    /// Monte Carlo standard error of the ACARL.
    pub fn acarl_se(&self) -> f64 {
        self.summary.sdcarl / (self.replications as f64).sqrt()
    }

    /// Binomial standard error of the EPC.
    pub fn epc_se(&self) -> f64 {
        let p = self.summary.epc;
        (p * (1.0 - p) / self.replications as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyTable {
    pub alpha0: f64,
    pub target_arl: f64,
    pub seed: u64,
    pub percentiles: Vec<f64>,
    pub rows: Vec<StudyRow>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn row_seed(seed: u64, m: u32, params: InControlParams) -> u64 {
    [m as u64, params.eta0.to_bits(), params.beta0.to_bits()]
        .iter()
        .fold(splitmix(seed), |acc, &x| splitmix(acc ^ x))
}

/// Conditional ARLs of `replications` simulated plug-in charts, in
/// replicate order.
pub fn simulate_carls(cfg: &StudyConfig, m: u32, params: InControlParams) -> Result<Vec<f64>> {
    cfg.validate()?;
    if m == 0 {
        return Err(ChartError::InvalidConfig("m must be at least 1".into()));
    }
    let law = WeibullParams::new(params.eta0, params.beta0)?;
    let chart = ConditionalChart::new(cfg.alpha0, params.eta0, cfg.shift)?;
    let seed = row_seed(cfg.seed, m, params);
    let eta0 = params.eta0;
    let beta0 = params.beta0;

    (0..cfg.replications)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(m as usize),
            |buf, r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(r);
                buf.clear();
                buf.extend((0..m).map(|_| law.sample(&mut rng)));
                let est = mle_scale(buf, eta0)?.with_reference(beta0, eta0)?;
                let w = est.w.expect("reference scale supplied");
                Ok(1.0 / chart.cps(w))
            },
        )
        .collect()
}

/// Nearest-rank percentile of sorted data.
fn nearest_rank(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let rank = (level * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Summary of simulated conditional ARLs against an analytic supremum.
pub fn summarize(carls: &[f64], levels: &[f64], target_arl: f64, carl_sup: f64) -> CarlSummary {
    let n = carls.len() as f64;
    let mean = carls.iter().sum::<f64>() / n;
    let sd = if carls.len() > 1 {
        (carls.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let below = carls.iter().filter(|&&c| c < target_arl).count() as f64;
    let mut sorted = carls.to_vec();
    sorted.sort_by(f64::total_cmp);
    CarlSummary {
        acarl: mean,
        sdcarl: sd,
        epc: below / n,
        percentiles: levels
            .iter()
            .map(|&level| Percentile { level, value: nearest_rank(&sorted, level) })
            .collect(),
        carl_sup,
    }
}

pub fn simulate_carl_distribution(cfg: &StudyConfig, m: u32, params: InControlParams) -> Result<CarlSummary> {
    let carls = simulate_carls(cfg, m, params)?;
    let sup = ConditionalChart::new(cfg.alpha0, params.eta0, cfg.shift)?.carl_max();
    Ok(summarize(&carls, &cfg.percentiles, cfg.target_arl, sup))
}

/// Every `(params, m)` combination, parameters outermost.
pub fn run_table1(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.params.len() * cfg.m.len());
    for &params in &cfg.params {
        for &m in &cfg.m {
            rows.push(StudyRow {
                eta0: params.eta0,
                beta0: params.beta0,
                m,
                replications: cfg.replications,
                summary: simulate_carl_distribution(cfg, m, params)?,
            });
        }
    }
    Ok(StudyTable {
        alpha0: cfg.alpha0,
        target_arl: cfg.target_arl,
        seed: cfg.seed,
        percentiles: cfg.percentiles.clone(),
        rows,
    })
}

/// Column name for a percentile level: 0.05 -> `p05`, 0.975 -> `p97.5`.
pub fn percentile_column(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("p{:02}", pct.round() as u32)
    } else {
        format!("p{}", (pct * 1e6).round() / 1e6)
    }
}

impl StudyTable {
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["eta0", "beta0", "m", "acarl", "sdcarl", "epc"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(self.percentiles.iter().map(|&l| percentile_column(l)));
        cols
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ChartError::InvalidConfig(format!("csv: {e}"));
        w.write_record(self.columns()).map_err(io)?;
        for row in &self.rows {
            let mut rec = vec![
                row.eta0.to_string(),
                row.beta0.to_string(),
                row.m.to_string(),
                row.summary.acarl.to_string(),
                row.summary.sdcarl.to_string(),
                row.summary.epc.to_string(),
            ];
            rec.extend(row.summary.percentiles.iter().map(|p| p.value.to_string()));
            w.write_record(rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| ChartError::InvalidConfig(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Rows flattened to the CSV columns, plus run metadata.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                obj.insert("eta0".into(), json!(row.eta0));
                obj.insert("beta0".into(), json!(row.beta0));
                obj.insert("m".into(), json!(row.m));
                obj.insert("acarl".into(), json!(row.summary.acarl));
                obj.insert("sdcarl".into(), json!(row.summary.sdcarl));
                obj.insert("epc".into(), json!(row.summary.epc));
                for p in &row.summary.percentiles {
                    obj.insert(percentile_column(p.level), json!(p.value));
                }
                Value::Object(obj)
            })
            .collect();
        json!({
            "alpha0": self.alpha0,
            "target_arl": self.target_arl,
            "seed": self.seed,
            "replications": self.rows.first().map(|r| r.replications),
            "columns": self.columns(),
            "rows": rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunLengthStats {
    pub mean: f64,
    pub sd: f64,
    pub replications: u64,
}

/// Plots observations from `truth` against the limits of `design` until one
/// falls strictly outside, `reps` times.
pub fn simulate_run_lengths_under<R: Rng + ?Sized>(
    design: &ChartDesign,
    truth: &WeibullParams,
    reps: u64,
    rng: &mut R,
) -> Result<RunLengthStats> {
    if reps == 0 {
        return Err(ChartError::InvalidConfig("replications must be at least 1".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..reps {
        let mut n = 0u64;
        loop {
            n += 1;
            if design.classify(truth.sample(rng)).is_signal() {
                break;
            }
            if n >= RUN_LENGTH_CAP {
                return Err(ChartError::RunLengthCap { cap: RUN_LENGTH_CAP });
            }
        }
        let x = n as f64;
        sum += x;
        sum_sq += x * x;
    }
    let k = reps as f64;
    let mean = sum / k;
    let sd = if reps > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0).sqrt()
    } else {
        0.0
    };
    Ok(RunLengthStats { mean, sd, replications: reps })
}

/// Run lengths of a chart whose design scale is the true in-control scale,
/// after `shift`.
pub fn simulate_run_lengths<R: Rng + ?Sized>(
    design: &ChartDesign,
    shift: &ShiftSpec,
    reps: u64,
    rng: &mut R,
) -> Result<RunLengthStats> {
    if prob_signal(design, shift) <= 0.0 {
        return Err(ChartError::RunLengthCap { cap: RUN_LENGTH_CAP });
    }
    let truth = shift.shifted(design.eta0, design.scale_used)?;
    simulate_run_lengths_under(design, &truth, reps, rng)
}
