//! Output files: `pathoscores.json`, `distill_report.json`, `metrics.json`
//! and `sweep.csv`, plus the text rendering used by `pathograph report`.
//!
//! Every JSON file has one top-level summary and a per-fold `folds` array.

use std::fmt::Write as _;

use pathograph_core::config::RunConfig;
use pathograph_core::eval::{FoldOutcome, MetricsReport, SweepParameter, SweepRow};
use pathograph_core::pathofilter::PathoScoreReport;
use serde_json::{json, Value};

fn score_entry(r: &PathoScoreReport) -> Value {
    json!({
        "alpha": r.alpha,
        "betas": r.subgraph_names.iter().zip(&r.betas).map(|(n, b)| json!({"name": n, "beta": b})).collect::<Vec<_>>(),
        "retained": r.retained_names(),
        "scope": r.scope,
        "seed": r.seed,
    })
}

/// Top level: the shared report at full-cohort scope; otherwise α and each
/// β averaged over folds, retaining subgraphs whose mean β reaches mean α.
pub fn pathoscores_json(config: &RunConfig, outcomes: &[FoldOutcome]) -> Value {
    let reports: Vec<&PathoScoreReport> = outcomes.iter().filter_map(|o| o.patho.as_ref()).collect();
    let Some(first) = reports.first() else {
        return json!({ "enabled": false, "scope": config.selection_scope, "seed": config.seed, "folds": [] });
    };
    let n = reports.len() as f64;
    let alpha = reports.iter().map(|r| r.alpha).sum::<f64>() / n;
    let betas: Vec<f64> = (0..first.betas.len()).map(|i| reports.iter().map(|r| r.betas[i]).sum::<f64>() / n).collect();
    let summary = PathoScoreReport::new(alpha, betas, first.subgraph_names.clone(), first.scope, config.seed);
    let mut top = score_entry(&summary);
    top["enabled"] = json!(true);
    top["folds"] = Value::Array(
        outcomes
            .iter()
            .filter_map(|o| o.patho.as_ref().map(|r| (o.result.fold, r)))
            .map(|(f, r)| {
                let mut e = score_entry(r);
                e["fold"] = json!(f);
                e
            })
            .collect(),
    );
    top
}

pub fn distill_json(config: &RunConfig, outcomes: &[FoldOutcome]) -> Value {
    let folds: Vec<Value> = outcomes
        .iter()
        .filter_map(|o| o.distill.as_ref().map(|r| (o.result.fold, r)))
        .map(|(f, r)| {
            json!({
                "fold": f,
                "seed": r.config.seed,
                "fitted_on": r.fitted_on,
                "zero_score_nodes": r.zero_score_nodes,
                "dropped": r.drop_plan.nodes.iter().enumerate().map(|(i, d)| json!({
                    "node": i, "top": d.top, "bottom": d.bottom,
                })).collect::<Vec<_>>(),
                "groups": r.plans.iter().map(|p| json!({
                    "group": p.group,
                    "weights": p.weights,
                    "w_max": p.w_max,
                    "lambda_w": p.lambda_w,
                    "probabilities": p.probabilities,
                    "mask": p.mask,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "enabled": config.distill,
        "mode": config.mode,
        "k": config.k,
        "rho": config.rho,
        "p_t": config.p_t,
        "seed": config.seed,
        "folds": folds,
    })
}

pub fn metrics_json(config: &RunConfig, report: &MetricsReport, input_nodes: usize, warnings: &[String]) -> Value {
    let mut v = serde_json::to_value(report).expect("plain data");
    v["scope"] = json!(config.selection_scope);
    v["mode"] = json!(config.mode);
    v["input_nodes"] = json!(input_nodes);
    v["warnings"] = json!(warnings);
    v["config"] = serde_json::to_value(config).expect("plain data");
    v
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "parameter_value",
    "acc_mean",
    "acc_std",
    "auc_mean",
    "auc_std",
    "f1_mean",
    "f1_std",
    "params",
    "epoch_seconds",
    "peak_bytes",
];

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS).expect("in-memory writer");
    for row in rows {
        let r = &row.report;
        w.write_record([
            row.parameter_value.clone(),
            r.acc_mean.to_string(),
            r.acc_std.to_string(),
            r.auc_mean.to_string(),
            r.auc_std.to_string(),
            r.f1_mean.to_string(),
            r.f1_std.to_string(),
            r.parameter_count.to_string(),
            r.epoch_seconds.to_string(),
            r.peak_bytes.to_string(),
        ])
        .expect("in-memory writer");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

pub fn sweep_json(parameter: SweepParameter, rows: &[SweepRow]) -> Value {
    json!({ "parameter": parameter.name(), "rows": rows })
}

/// Human-readable summary of a `metrics.json` document.
pub fn render_metrics(v: &Value) -> Result<String, String> {
    let num = |x: &Value, k: &str| x.get(k).and_then(Value::as_f64).ok_or_else(|| format!("missing number `{k}`"));
    let mut out = String::new();
    let text = |x: &Value, k: &str| x.get(k).and_then(Value::as_str).unwrap_or("?").to_string();
    writeln!(out, "variant {}  (scope {}, mode {})", text(v, "variant"), text(v, "scope"), text(v, "mode")).unwrap();
    writeln!(out, "{:<5} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8} {:>5}", "fold", "acc", "auc", "f1", "nodes", "width", "params", "best").unwrap();
    for f in v.get("folds").and_then(Value::as_array).ok_or("missing `folds`")? {
        let m = f.get("metrics").ok_or("fold without metrics")?;
        writeln!(
            out,
            "{:<5} {:>6.3} {:>6.3} {:>6.3} {:>6} {:>6} {:>8} {:>5}",
            f.get("fold").and_then(Value::as_u64).unwrap_or(0),
            num(m, "acc")?,
            num(m, "auc")?,
            num(m, "f1")?,
            f.get("nodes").and_then(Value::as_u64).unwrap_or(0),
            f.get("feature_width").and_then(Value::as_u64).unwrap_or(0),
            f.get("parameter_count").and_then(Value::as_u64).unwrap_or(0),
            f.get("best_epoch").and_then(Value::as_u64).unwrap_or(0),
        )
        .unwrap();
    }
    for (name, key) in [("ACC", "acc"), ("AUC", "auc"), ("F1", "f1")] {
        let (mean, std) = (num(v, &format!("{key}_mean"))?, num(v, &format!("{key}_std"))?);
        writeln!(out, "{name:<4} {:.2} ± {:.2}", 100.0 * mean, 100.0 * std).unwrap();
    }
    writeln!(
        out,
        "params {:.0}  peak bytes {}  epoch seconds {:.6}",
        num(v, "parameter_count")?,
        v.get("peak_bytes").and_then(Value::as_u64).unwrap_or(0),
        num(v, "epoch_seconds")?
    )
    .unwrap();
    for w in v.get("warnings").and_then(Value::as_array).into_iter().flatten() {
        writeln!(out, "warning: {}", w.as_str().unwrap_or("")).unwrap();
    }
    Ok(out)
}
