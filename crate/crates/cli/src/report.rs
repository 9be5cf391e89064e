//! Versioned JSON / CSV reports.
//!
//! Every numeric field is either a finite number or `null`, and each `null`
//! is listed in `null_fields` with a reason code: `nan`, `pos_inf`,
//! `neg_inf` or `not_applicable`.

use std::io::Write;

use calpha_core::calpha::TestReport;
use calpha_core::im_test::{EquivalenceReport, HeterogeneityScale, IDENTITY_TOL};
use calpha_core::mle::FitResult;
use calpha_simlab::{GeneratorSpec, SimulationReport};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA: &str = "calpha-report/1";

// Placeholders survive until `finish` turns them into nulls with reasons.
const MARK: char = '\u{0}';

/// A JSON number, or a placeholder for a non-finite value.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        marker("nan")
    } else if v > 0.0 {
        marker("pos_inf")
    } else {
        marker("neg_inf")
    }
}

fn marker(reason: &str) -> Value {
    Value::String(format!("{MARK}{reason}"))
}

pub fn not_applicable() -> Value {
    marker("not_applicable")
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

fn named(pairs: &[(String, f64)]) -> Value {
    Value::Object(pairs.iter().map(|(k, v)| (k.clone(), num(*v))).collect())
}

/// Where the master seed came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Flag,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed {
    pub value: u64,
    pub source: SeedSource,
}

fn replace_markers(v: &mut Value, path: &str, nulls: &mut Vec<(String, String)>) {
    match v {
        Value::String(s) if s.starts_with(MARK) => {
            nulls.push((path.to_string(), s[MARK.len_utf8()..].to_string()));
            *v = Value::Null;
        }
        Value::Array(items) => {
            for (i, item) in items.iter_mut().enumerate() {
                replace_markers(item, &format!("{path}[{i}]"), nulls);
            }
        }
        Value::Object(map) => {
            for (k, item) in map.iter_mut() {
                replace_markers(item, &format!("{path}.{k}"), nulls);
            }
        }
        _ => {}
    }
}

/// Wraps a command result in the versioned envelope.
pub fn envelope(command: &str, seed: Option<Seed>, result: Value) -> Value {
    let seed = match seed {
        Some(s) => json!({
            "value": s.value,
            "source": match s.source { SeedSource::Flag => "flag", SeedSource::Entropy => "entropy" },
        }),
        None => not_applicable(),
    };
    let mut doc = json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "result": result,
    });
    let mut nulls = Vec::new();
    replace_markers(&mut doc, "$", &mut nulls);
    doc["null_fields"] = Value::Array(
        nulls
            .into_iter()
            .map(|(path, reason)| json!({ "path": path, "reason": reason }))
            .collect(),
    );
    doc
}

pub fn test_result(report: &TestReport, fit: &FitResult, model: &str) -> Value {
    json!({
        "test": report.test,
        "model": model,
        "statistic": num(report.statistic),
        "components": report.components.as_deref().map(nums).unwrap_or_else(not_applicable),
        "null_distribution": report.null_distribution.label(),
        "p_value": num(report.p_value),
        "alpha": num(report.alpha),
        "critical_value": num(report.critical_value),
        "reject": report.reject,
        "nuisance_estimates": named(&report.nuisance_estimates),
        "beta_hat": nums(&fit.beta()),
        "n": report.n,
        "warnings": report.warnings,
        "fit": {
            "iterations": fit.iterations,
            "gradient_norm": num(fit.gradient_norm),
            "tolerance": num(fit.tolerance),
            "converged": fit.converged,
            "loglik": num(fit.loglik),
        },
    })
}

pub fn spec_value(spec: &GeneratorSpec) -> Value {
    json!({
        "model": spec.model.name(),
        "nuisance": named(&spec.nuisance),
        "xi": num(spec.xi),
        "xi2": num(spec.xi2),
        "u_dist": spec.u_dist.name(),
        "form": spec.form.name(),
        "n": spec.n,
        "periods": spec.periods,
        "covariates": spec.covariates.name(),
    })
}

pub fn simulation_result(r: &SimulationReport) -> Value {
    let reasons: Map<String, Value> = r.exclusion_reasons.iter().map(|(k, c)| (k.clone(), json!(c))).collect();
    json!({
        "test": r.test,
        "spec": spec_value(&r.spec),
        "alpha": num(r.alpha),
        "reps": r.reps,
        "completed": r.completed,
        "excluded": r.excluded,
        "exclusion_reasons": reasons,
        "rejections": r.rejections,
        "rejection_rate": num(r.rejection_rate),
        "rejection_se": num(r.rejection_se),
        "statistic_moments": {
            "mean": num(r.moments.mean),
            "variance": num(r.moments.variance),
            "skewness": num(r.moments.skewness),
        },
        "ks_distance_to_null": num(r.ks_distance_to_null),
        "mass_at_zero": r.mass_at_zero.map(num).unwrap_or_else(not_applicable),
        "fraction_nonpositive": num(r.fraction_nonpositive),
        "empirical_quantile_95": num(r.empirical_quantile_95),
        "null_quantile_95": num(r.null_quantile_95),
        "null_distribution": r.null_distribution,
        "resampled_draws": r.resampled_draws,
        "master_seed": r.master_seed,
        "per_rep_seed_rule": r.per_rep_seed_rule,
        "statistics": nums(&r.statistics),
    })
}

pub fn equivalence_result(
    e: &EquivalenceReport,
    family: &str,
    scale: HeterogeneityScale,
    n: usize,
    beta: &[f64],
) -> Value {
    json!({
        "family": family,
        "scale": scale.name(),
        "n": n,
        "beta_hat": nums(beta),
        "im_value": num(e.im_value),
        "calpha_value": num(e.calpha_value),
        "abs_diff": num(e.abs_diff),
        "identity1_residual": num(e.identity1_residual),
        "identity2_residual": num(e.identity2_residual),
        "identity_tolerance": IDENTITY_TOL,
        "equivalent": e.equivalent,
    })
}

pub fn power_result(delta: f64, j_resid: f64, alpha: f64, power: f64) -> Value {
    json!({
        "delta": num(delta),
        "j_resid": num(j_resid),
        "alpha": num(alpha),
        "shift": num(delta * delta * j_resid.sqrt()),
        "power": num(power),
    })
}

fn flatten(v: &Value, path: &str, rows: &mut Vec<[String; 2]>) {
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                flatten(item, &p, rows);
            }
        }
        Value::Array(items) if !items.is_empty() && path != "null_fields" => {
            for (i, item) in items.iter().enumerate() {
                flatten(item, &format!("{path}[{i}]"), rows);
            }
        }
        Value::Array(_) | Value::Null => rows.push([path.to_string(), String::new()]),
        Value::String(s) => rows.push([path.to_string(), s.clone()]),
        other => rows.push([path.to_string(), other.to_string()]),
    }
}

/// Report serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `doc` as pretty JSON, or as `field,value,null_reason` rows with
/// dotted paths.
pub fn write<W: Write>(mut out: W, doc: &Value, format: Format, target: &str) -> Result<()> {
    let werr = |m: String| Error::Write {
        target: target.to_string(),
        message: m,
    };
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, doc).map_err(|e| werr(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| werr(e.to_string()))?;
        }
        Format::Csv => {
            let reasons: std::collections::HashMap<String, String> = doc["null_fields"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|n| {
                    let path = n["path"].as_str().unwrap_or_default();
                    (
                        path.trim_start_matches("$.").to_string(),
                        n["reason"].as_str().unwrap_or_default().to_string(),
                    )
                })
                .collect();
            let mut body = doc.clone();
            body.as_object_mut()
                .expect("envelope is an object")
                .remove("null_fields");
            let mut rows = Vec::new();
            flatten(&body, "", &mut rows);
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["field", "value", "null_reason"])
                .map_err(|e| werr(e.to_string()))?;
            for [field, value] in rows {
                let reason = reasons.get(&field).cloned().unwrap_or_default();
                w.write_record([field, value, reason])
                    .map_err(|e| werr(e.to_string()))?;
            }
            w.flush().map_err(|e| werr(e.to_string()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_null_with_reason() {
        let doc = envelope(
            "predict-power",
            None,
            json!({ "a": num(f64::NAN), "b": [num(1.0), num(f64::NEG_INFINITY)], "c": not_applicable() }),
        );
        assert!(doc["result"]["a"].is_null());
        assert_eq!(doc["result"]["b"][0], json!(1.0));
        let nulls = doc["null_fields"].as_array().unwrap();
        let pairs: Vec<(&str, &str)> = nulls
            .iter()
            .map(|n| (n["path"].as_str().unwrap(), n["reason"].as_str().unwrap()))
            .collect();
        assert!(pairs.contains(&("$.result.a", "nan")));
        assert!(pairs.contains(&("$.result.b[1]", "neg_inf")));
        assert!(pairs.contains(&("$.result.c", "not_applicable")));
        assert!(pairs.contains(&("$.seed", "not_applicable")));
    }

    #[test]
    fn csv_rows_carry_reasons() {
        let doc = envelope("x", None, json!({ "p": num(f64::INFINITY), "v": [num(2.0)] }));
        let mut buf = Vec::new();
        write(&mut buf, &doc, Format::Csv, "mem").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("field,value,null_reason\n"));
        assert!(text.contains("result.p,,pos_inf\n"));
        assert!(text.contains("result.v[0],2.0,\n"));
        assert!(text.contains("schema,calpha-report/1,\n"));
    }
}
