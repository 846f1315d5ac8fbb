//! CSV tables for keep-frequency estimates and run summaries. Items are
//! 1-based; missing estimates leave the value cells empty.

use std::io::Write;

use serde::Serialize;

use crate::crs::{AlphaEstimate, GammaEstimate, Mapping};
use crate::{Result, Scalar};

#[derive(Serialize)]
struct AlphaRow {
    item: usize,
    state: u32,
    mapping: Mapping,
    alpha: Option<f64>,
    se: Option<f64>,
    trials: usize,
}

#[derive(Serialize)]
struct GammaRow {
    item: usize,
    gamma: Option<f64>,
    se: Option<f64>,
    trials: usize,
    documented: f64,
}

/// One `metric,value` line of a summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub metric: String,
    pub value: String,
}

impl SummaryRow {
    pub fn new(metric: &str, value: impl ToString) -> Self {
        Self {
            metric: metric.to_string(),
            value: value.to_string(),
        }
    }
}

pub fn write_alpha_csv<T: Scalar, W: Write>(rows: &[AlphaEstimate<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(AlphaRow {
            item: r.item + 1,
            state: r.state,
            mapping: r.mapping,
            alpha: r.estimate.map(|e| e.mean.as_f64()),
            se: r.estimate.map(|e| e.std_err.as_f64()),
            trials: r.estimate.map_or(0, |e| e.samples),
        })?;
    }
    if rows.is_empty() {
        w.write_record(["item", "state", "mapping", "alpha", "se", "trials"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gamma_csv<T: Scalar, W: Write>(
    rows: &[GammaEstimate<T>],
    documented: T,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(GammaRow {
            item: r.item + 1,
            gamma: r.estimate.map(|e| e.mean.as_f64()),
            se: r.estimate.map(|e| e.std_err.as_f64()),
            trials: r.estimate.map_or(0, |e| e.samples),
            documented: documented.as_f64(),
        })?;
    }
    if rows.is_empty() {
        w.write_record(["item", "gamma", "se", "trials", "documented"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value"])?;
    for r in rows {
        w.write_record([&r.metric, &r.value])?;
    }
    w.flush()?;
    Ok(())
}
