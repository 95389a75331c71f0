use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use tbe_chart::adjust::{criterion_curve, out_of_control_cost, AdjustmentCriterion, CriterionKind, CurveRow};
use tbe_chart::estimated::{mle_scale, plugin_limits, CarlDistribution, PhaseIEstimate};
use tbe_chart::known::{arl, design_limits, geometric_quantile, prob_signal};
use tbe_chart::mc::{percentile_column, run_table1, simulate_carl_distribution, StudyConfig, TABLE1_LEVELS, TABLE1_PARAMS};
use tbe_chart::monitor::{monitor, parse_series};
use tbe_chart::{ChartDesign, ShiftSpec};

use crate::cli::{AdjustArgs, Case, Criterion, DesignArgs, EvalArgs, LimitArgs, MonitorArgs, Table1Args};
use crate::error::{exit, CliError, CliResult};
use crate::report::{arl_text, csv_line, emit, grid, key_values, num, read_file, Report};

const DEFAULT_ALPHA: f64 = 0.0027;
const OOC_DELTA1: [f64; 2] = [0.5, 2.0];

/// Contents of a design file.
#[derive(Debug, Serialize)]
struct DesignFile {
    design: ChartDesign,
    phase1: Option<PhaseIEstimate>,
}

fn read_series(path: &Path) -> CliResult<Vec<f64>> {
    parse_series(&read_file(path)?).map_err(|e| CliError::in_file(path, e))
}

fn build_design(args: &LimitArgs) -> CliResult<(ChartDesign, Option<PhaseIEstimate>)> {
    let alpha = args.alpha.unwrap_or(DEFAULT_ALPHA);
    let eta = args.eta.ok_or_else(|| CliError::Usage("--eta is required".into()))?;
    match (args.beta, &args.phase1) {
        (Some(beta), None) => Ok((design_limits(alpha, eta, beta)?, None)),
        (None, Some(path)) => {
            let est = mle_scale(&read_series(path)?, eta).map_err(|e| CliError::in_file(path, e))?;
            Ok((plugin_limits(&est, alpha, eta)?, Some(est)))
        }
        (None, None) => Err(CliError::Usage("one of --beta or --phase1 is required".into())),
        (Some(_), Some(_)) => Err(CliError::Usage("--beta and --phase1 are mutually exclusive".into())),
    }
}

fn design_pairs(d: &ChartDesign) -> Vec<(&'static str, String)> {
    vec![
        ("source", format!("{:?}", d.source).to_lowercase()),
        ("alpha0", d.alpha0.to_string()),
        ("eta0", d.eta0.to_string()),
        ("scale", d.scale_used.to_string()),
        ("A1", d.a1.to_string()),
        ("A2", d.a2.to_string()),
        ("LCL", d.lcl.to_string()),
        ("CL", d.cl.to_string()),
        ("UCL", d.ucl.to_string()),
    ]
}

pub fn design(args: &DesignArgs) -> CliResult<i32> {
    let (design, phase1) = build_design(&args.limits)?;
    let file = DesignFile { design, phase1 };

    let mut pairs = design_pairs(&design);
    if let Some(est) = phase1 {
        pairs.push(("m", est.m.to_string()));
        pairs.push(("beta_hat", est.beta_hat.to_string()));
    }
    let header = pairs.iter().map(|(k, _)| k.to_lowercase()).collect::<Vec<_>>();
    let values = pairs.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>();
    let report = Report {
        json: serde_json::to_value(&file).expect("design serializes"),
        csv: csv_line(&header) + &csv_line(&values),
        table: key_values(&pairs),
    };
    emit(&args.output, &report)?;
    Ok(exit::OK)
}

/// Accepts a full design file or a bare design object.
fn load_design(path: &Path) -> CliResult<ChartDesign> {
    let bad = |reason: String| CliError::File { path: path.to_owned(), reason };
    let mut value: Value = serde_json::from_str(&read_file(path)?).map_err(|e| bad(e.to_string()))?;
    if let Some(inner) = value.get_mut("design") {
        value = inner.take();
    }
    let design: ChartDesign = serde_json::from_value(value).map_err(|e| bad(format!("not a chart design: {e}")))?;
    if !(design.lcl >= 0.0 && design.lcl < design.ucl) {
        return Err(bad(format!("limits LCL = {} and UCL = {} are not ordered", design.lcl, design.ucl)));
    }
    Ok(design)
}

pub fn monitor_cmd(args: &MonitorArgs) -> CliResult<i32> {
    let design = match &args.design {
        Some(path) => load_design(path)?,
        None => build_design(&args.limits)?.0,
    };
    let series = read_series(&args.data)?;
    let rep = monitor(&design, &series);

    let first = rep.first_signal.map_or("no signal".to_string(), |i| i.to_string());
    let mut csv = csv_line(&["index".into(), "tbe_value".into(), "status".into()]);
    let mut flagged = Vec::new();
    for r in &rep.records {
        let status = serde_json::to_value(r.status).expect("status serializes");
        let status = status.as_str().unwrap_or_default().to_string();
        csv.push_str(&csv_line(&[r.index.to_string(), r.tbe_value.to_string(), status.clone()]));
        if r.status.is_signal() {
            flagged.push(vec![r.index.to_string(), r.tbe_value.to_string(), status]);
        }
    }
    let mut table = key_values(&[
        ("LCL", rep.lcl.to_string()),
        ("UCL", rep.ucl.to_string()),
        ("observations", rep.records.len().to_string()),
        ("signals", rep.signals.to_string()),
        ("first signal", first),
    ]);
    if !flagged.is_empty() {
        table.push('\n');
        table.push_str(&grid(&["index".into(), "tbe_value".into(), "status".into()], &flagged));
    }
    let report = Report {
        json: json!({
            "design": design,
            "summary": {
                "observations": rep.records.len(),
                "signals": rep.signals,
                "first_signal": rep.first_signal,
            },
            "records": rep.records,
        }),
        csv,
        table,
    };
    emit(&args.output, &report)?;
    Ok(if rep.signals > 0 { exit::SIGNAL } else { exit::OK })
}

pub fn eval(args: &EvalArgs) -> CliResult<i32> {
    let shift = ShiftSpec::new(args.delta1, args.delta2)?;
    let report = match args.case {
        Case::K => eval_known(args, shift)?,
        Case::U => eval_estimated(args, shift)?,
    };
    emit(&args.output, &report)?;
    Ok(exit::OK)
}

fn eval_known(args: &EvalArgs, shift: ShiftSpec) -> CliResult<Report> {
    if args.m.is_some() {
        return Err(CliError::Usage("--m only applies to --case u".into()));
    }
    let design = design_limits(args.alpha, args.eta, args.beta)?;
    let ps = prob_signal(&design, &shift);
    let a = arl(&design, &shift);
    let sdrl = if ps > 0.0 { Some((1.0 - ps).sqrt() / ps) } else { None };
    let q = |p: f64| geometric_quantile(ps, p);

    let mut pairs = vec![
        ("case", "known".to_string()),
        ("alpha0", args.alpha.to_string()),
        ("eta0", args.eta.to_string()),
        ("beta0", args.beta.to_string()),
        ("delta1", args.delta1.to_string()),
        ("delta2", args.delta2.to_string()),
        ("LCL", design.lcl.to_string()),
        ("UCL", design.ucl.to_string()),
        ("PS", ps.to_string()),
        ("ARL", arl_text(a)),
        ("SDRL", sdrl.map_or("unbounded".into(), |s| s.to_string())),
    ];
    let quantiles = [("rl_p05", 0.05), ("rl_p50", 0.5), ("rl_p95", 0.95)];
    for (name, p) in quantiles {
        pairs.push((name, q(p).map_or("unbounded".into(), |n| n.to_string())));
    }
    let header: Vec<String> = pairs.iter().map(|(k, _)| k.to_lowercase()).collect();
    let values: Vec<String> = pairs.iter().map(|(_, v)| v.clone()).collect();
    Ok(Report {
        json: json!({
            "case": "known",
            "alpha0": args.alpha,
            "eta0": args.eta,
            "beta0": args.beta,
            "delta1": args.delta1,
            "delta2": args.delta2,
            "design": design,
            "ps": ps,
            "arl": a,
            "sdrl": sdrl,
            "rl_p05": q(0.05),
            "rl_p50": q(0.5),
            "rl_p95": q(0.95),
        }),
        csv: csv_line(&header) + &csv_line(&values),
        table: key_values(&pairs),
    })
}

fn eval_estimated(args: &EvalArgs, shift: ShiftSpec) -> CliResult<Report> {
    let m = args.m.ok_or_else(|| CliError::Usage("--case u requires --m".into()))?;
    let dist = CarlDistribution::new(m, args.alpha, args.eta, shift)?;
    let moments = dist.moments()?;
    let summary = dist.summary(&TABLE1_LEVELS, args.target)?;

    let mut pairs = vec![
        ("case", "estimated".to_string()),
        ("m", m.to_string()),
        ("alpha0", args.alpha.to_string()),
        ("eta0", args.eta.to_string()),
        ("delta1", args.delta1.to_string()),
        ("delta2", args.delta2.to_string()),
        ("ECARL", summary.acarl.to_string()),
        ("SDCARL", summary.sdcarl.to_string()),
        ("EPC", summary.epc.to_string()),
        ("target_arl", args.target.to_string()),
    ];
    let names: Vec<String> = summary.percentiles.iter().map(|p| percentile_column(p.level)).collect();
    for (name, p) in names.iter().zip(&summary.percentiles) {
        pairs.push((name.as_str(), p.value.to_string()));
    }
    pairs.push(("carl_max", summary.carl_sup.to_string()));
    pairs.push(("w_star", dist.chart().w_star().to_string()));

    let mut json = json!({
        "case": "estimated",
        "m": m,
        "alpha0": args.alpha,
        "eta0": args.eta,
        "delta1": args.delta1,
        "delta2": args.delta2,
        "ecarl": summary.acarl,
        "sdcarl": summary.sdcarl,
        "epc": summary.epc,
        "target_arl": args.target,
    });
    for (name, p) in names.iter().zip(&summary.percentiles) {
        json[name] = json!(p.value);
    }
    json["carl_max"] = json!(summary.carl_sup);
    json["w_star"] = json!(dist.chart().w_star());
    json["quadrature_rel_error"] = json!(moments.rel_error);

    let header: Vec<String> = pairs.iter().map(|(k, _)| k.to_lowercase()).collect();
    let values: Vec<String> = pairs.iter().map(|(_, v)| v.clone()).collect();
    Ok(Report {
        json,
        csv: csv_line(&header) + &csv_line(&values),
        table: key_values(&pairs),
    })
}

pub fn study_config(args: &Table1Args) -> CliResult<StudyConfig> {
    let mut cfg = match &args.config {
        Some(path) => toml::from_str::<StudyConfig>(&read_file(path)?)
            .map_err(|e| CliError::File { path: path.clone(), reason: e.to_string() })?,
        None => StudyConfig::default(),
    };
    if args.all_blocks {
        if !args.params.is_empty() {
            return Err(CliError::Usage("--all-blocks and --params are mutually exclusive".into()));
        }
        cfg.params = TABLE1_PARAMS.iter().copied().map(Into::into).collect();
    }
    if !args.params.is_empty() {
        cfg.params = args.params.iter().copied().map(Into::into).collect();
    }
    if !args.m.is_empty() {
        cfg.m = args.m.clone();
    }
    if let Some(a) = args.alpha {
        cfg.alpha0 = a;
    }
    if let Some(r) = args.reps {
        cfg.replications = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.target {
        cfg.target_arl = t;
    }
    if args.delta1.is_some() || args.delta2.is_some() {
        cfg.shift = ShiftSpec::new(args.delta1.unwrap_or(cfg.shift.delta1), args.delta2.unwrap_or(cfg.shift.delta2))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn table1(args: &Table1Args) -> CliResult<i32> {
    let cfg = study_config(args)?;
    let table = run_table1(&cfg)?;

    let mut header = table.columns();
    header.extend(["acarl_se".to_string(), "epc_se".to_string()]);
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.eta0.to_string(), r.beta0.to_string(), r.m.to_string()];
            cells.extend([num(r.summary.acarl), num(r.summary.sdcarl), num(r.summary.epc)]);
            cells.extend(r.summary.percentiles.iter().map(|p| num(p.value)));
            cells.extend([num(r.acarl_se()), num(r.epc_se())]);
            cells
        })
        .collect();
    let table_text = format!(
        "alpha0 = {}, replications = {}, seed = {}\n{}",
        cfg.alpha0,
        cfg.replications,
        cfg.seed,
        grid(&header, &rows)
    );
    let report = Report {
        json: table.to_json(),
        csv: table.to_csv()?,
        table: table_text,
    };
    emit(&args.output, &report)?;
    Ok(exit::OK)
}

#[derive(Debug, Serialize)]
struct Verification {
    ecarl: f64,
    sdcarl: f64,
    epc: f64,
    rel_error: f64,
}

#[derive(Debug, Serialize)]
struct McCheck {
    replications: u64,
    seed: u64,
    acarl: f64,
    acarl_se: f64,
    sdcarl: f64,
    epc: f64,
}

pub fn adjust_cmd(args: &AdjustArgs) -> CliResult<i32> {
    let kind = match args.criterion {
        Criterion::Ecarl => CriterionKind::EcarlMatch,
        Criterion::Epc => CriterionKind::EpcCap,
        Criterion::Sdcarl => CriterionKind::SdcarlCap,
    };
    let crit = match (kind, args.epsilon) {
        (CriterionKind::EcarlMatch, None) => AdjustmentCriterion::ecarl_match(args.target)?,
        (CriterionKind::EcarlMatch, Some(_)) => {
            return Err(CliError::Usage("--epsilon does not apply to the ecarl criterion".into()))
        }
        (_, Some(eps)) => AdjustmentCriterion::new(kind, args.target, eps)?,
        (_, None) => return Err(CliError::Usage("--epsilon is required for the epc and sdcarl criteria".into())),
    };
    let curve = criterion_curve(&args.m, &crit)?;

    let mut json_rows = Vec::new();
    let mut csv = csv_line(
        &["m", "alpha_adj", "achieved", "ecarl", "sdcarl", "epc", "mc_acarl", "mc_sdcarl", "mc_epc", "infeasible"]
            .map(String::from),
    );
    let mut table_rows = Vec::new();
    let mut infeasible = Vec::new();
    for CurveRow { m, result, infeasible: why } in &curve {
        let Some(res) = result else {
            let why = why.clone().unwrap_or_default();
            csv.push_str(&csv_line(&[m.to_string(), String::new(), String::new(), String::new(), String::new(),
                String::new(), String::new(), String::new(), String::new(), why.clone()]));
            table_rows.push(vec![m.to_string(), "infeasible".into(), String::new(), String::new(), String::new(),
                String::new()]);
            json_rows.push(json!({ "m": m, "infeasible": why }));
            infeasible.push(why);
            continue;
        };
        let dist = CarlDistribution::in_control(*m, res.alpha_adj)?;
        let moments = dist.moments()?;
        let check = Verification {
            ecarl: moments.ecarl,
            sdcarl: moments.sdcarl,
            epc: dist.cdf(args.target)?,
            rel_error: moments.rel_error,
        };
        let mc = if args.reps > 0 {
            let cfg = StudyConfig {
                alpha0: res.alpha_adj,
                m: vec![*m],
                replications: args.reps,
                seed: args.seed,
                target_arl: args.target,
                ..StudyConfig::default()
            };
            let s = simulate_carl_distribution(&cfg, *m, cfg.params[0])?;
            Some(McCheck {
                replications: args.reps,
                seed: args.seed,
                acarl: s.acarl,
                acarl_se: s.sdcarl / (args.reps as f64).sqrt(),
                sdcarl: s.sdcarl,
                epc: s.epc,
            })
        } else {
            None
        };
        let ooc = out_of_control_cost(*m, res.alpha_adj, crit.nominal_alpha(), 1.0, &OOC_DELTA1)?;

        let mc_cells = match &mc {
            Some(c) => [c.acarl.to_string(), c.sdcarl.to_string(), c.epc.to_string()],
            None => Default::default(),
        };
        let mut rec = vec![
            m.to_string(),
            res.alpha_adj.to_string(),
            res.achieved.to_string(),
            check.ecarl.to_string(),
            check.sdcarl.to_string(),
            check.epc.to_string(),
        ];
        rec.extend(mc_cells.iter().cloned());
        rec.push(String::new());
        csv.push_str(&csv_line(&rec));
        table_rows.push(vec![
            m.to_string(),
            format!("{:.7}", res.alpha_adj),
            num(check.ecarl),
            num(check.sdcarl),
            num(check.epc),
            mc.as_ref().map_or(String::new(), |c| format!("{} ± {}", num(c.acarl), num(c.acarl_se))),
        ]);
        json_rows.push(json!({
            "m": m,
            "alpha_adj": res.alpha_adj,
            "achieved": res.achieved,
            "iterations": res.iterations,
            "bracket": res.bracket,
            "verification": check,
            "monte_carlo": mc,
            "out_of_control": ooc,
        }));
    }

    let table = format!(
        "criterion = {:?}, target_arl = {}, epsilon = {}, nominal alpha = {}\n{}",
        kind,
        crit.target_arl,
        args.epsilon.map_or("-".into(), |e| e.to_string()),
        crit.nominal_alpha(),
        grid(&["m", "alpha_adj", "ecarl", "sdcarl", "epc", "mc_acarl"].map(String::from), &table_rows)
    );
    let report = Report {
        json: json!({
            "criterion": kind,
            "target_arl": crit.target_arl,
            "epsilon": args.epsilon,
            "nominal_alpha": crit.nominal_alpha(),
            "rows": json_rows,
        }),
        csv,
        table,
    };
    emit(&args.output, &report)?;
    for why in &infeasible {
        eprintln!("tbechart: {why}");
    }
    Ok(if infeasible.is_empty() { exit::OK } else { exit::INFEASIBLE })
}
