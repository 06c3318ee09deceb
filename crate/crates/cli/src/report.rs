//! JSON report documents.

use cmc_core::classic::{kendall_tau_b, pearson, spearman};
use cmc_core::maxcorr::maximal_correlation;
use cmc_core::oracle::OracleOutcome;
use cmc_core::{cmc_exact, cmc_x_reversed, CmcOptions, CorrelationReport, Error, JointPmf, ScoredPair};
use serde_json::{json, Map, Value};

use crate::instance::Instance;
use crate::Failure;

pub const MEASURES: [&str; 7] = ["pearson", "spearman", "kendall", "maxcorr", "cmc", "cmc_plus", "cmc_xrev"];

fn keyed(labels: &[String], values: &[f64]) -> Value {
    Value::Object(labels.iter().cloned().zip(values.iter().map(|&v| json!(v))).collect())
}

pub fn witness_table(pmf: &JointPmf, pair: &ScoredPair) -> Value {
    json!({"f": keyed(pmf.x_labels(), &pair.f), "g": keyed(pmf.y_labels(), &pair.g)})
}

fn scalar(value: f64) -> Value {
    json!({"value": value, "status": "ok"})
}

fn correlation_entry(pmf: &JointPmf, report: &CorrelationReport) -> Value {
    let mut entry = Map::new();
    if report.has_witness() {
        entry.insert("value".into(), json!(report.value));
        entry.insert("status".into(), json!("ok"));
    } else {
        entry.insert("value".into(), Value::Null);
        entry.insert("status".into(), json!("no_witness"));
    }
    if let Some(w) = &report.witness {
        entry.insert("witness".into(), witness_table(pmf, w));
    }
    entry.insert("diagnostics".into(), json!(report.diagnostics));
    Value::Object(entry)
}

fn timed<T>(name: &str, run: impl FnOnce() -> T) -> T {
    let started = std::time::Instant::now();
    let out = run();
    eprintln!("cmc: {name} took {:.3}s", started.elapsed().as_secs_f64());
    out
}

/// One measure as a report entry.
pub fn measure_entry(name: &str, inst: &Instance, opts: &CmcOptions) -> cmc_core::Result<Value> {
    let Instance { pmf, x_order, y_order } = inst;
    timed(name, || match name {
        "pearson" => pearson(pmf).map(scalar),
        "spearman" => spearman(pmf, x_order, y_order).map(scalar),
        "kendall" => kendall_tau_b(pmf, x_order, y_order).map(scalar),
        "maxcorr" => maximal_correlation(pmf).map(|r| correlation_entry(pmf, &r)),
        "cmc" => cmc_exact(pmf, x_order, y_order, opts).map(|r| correlation_entry(pmf, &r)),
        "cmc_plus" => cmc_exact(pmf, x_order, y_order, opts).map(|r| {
            let mut entry = correlation_entry(pmf, &r);
            entry["value"] = json!(r.value.max(0.0));
            entry["status"] = json!("ok");
            entry
        }),
        "cmc_xrev" => cmc_x_reversed(pmf, x_order, y_order, opts).map(|r| correlation_entry(pmf, &r)),
        other => Err(Error::InvalidConfig(format!("unknown measure {other:?}"))),
    })
}

/// Measures whose inputs the instance cannot supply are reported as skipped
/// under `all` instead of failing the whole run.
fn skippable(err: &Error) -> bool {
    matches!(err, Error::MissingValues(_) | Error::RequiresTotalOrder)
}

pub fn compute_document(inst: &Instance, measure: &str, opts: &CmcOptions) -> Result<Value, Failure> {
    let mut measures = Map::new();
    if measure == "all" {
        for name in MEASURES {
            let entry = match measure_entry(name, inst, opts) {
                Ok(entry) => entry,
                Err(e) if skippable(&e) => json!({"value": null, "status": "skipped", "reason": e.to_string()}),
                Err(e) => return Err(e.into()),
            };
            measures.insert(name.into(), entry);
        }
    } else {
        measures.insert(measure.into(), measure_entry(measure, inst, opts)?);
    }
    Ok(json!({
        "mode": opts.mode.name(),
        "shape": [inst.pmf.rows(), inst.pmf.cols()],
        "measures": measures,
    }))
}

pub fn oracle_document(inst: &Instance, outcome: &OracleOutcome, engine: &CorrelationReport, step: f64, refine_iters: usize) -> Value {
    let gap = if engine.has_witness() {
        json!((engine.value - outcome.value).abs())
    } else {
        Value::Null
    };
    json!({
        "shape": [inst.pmf.rows(), inst.pmf.cols()],
        "grid_step": step,
        "refine_iters": refine_iters,
        "profiles": outcome.profiles,
        "oracle": outcome.value,
        "oracle_witness": witness_table(&inst.pmf, &outcome.witness),
        "engine": if engine.has_witness() { json!(engine.value) } else { Value::Null },
        "engine_mode": engine.diagnostics.mode,
        "gap": gap,
    })
}
