//! Conversion of regularly sampled series into events by rolling-window
//! shock identification.
//!
//! At sample `t >= W` the window is `values[t-W+1 ..= t]`, latest value
//! included. With `k = ceil((1 - q) W)`, an event is registered when the
//! latest value is strictly greater than the `k`-th smallest window value,
//! i.e. when it ranks in the top `q` fraction. The event time is
//! `(t - W) * time_scale` and the horizon is `(n - W) * time_scale`.

use std::io::Read;

use crate::error::{Error, Result};
use crate::model::EventData;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesData {
    names: Vec<String>,
    /// `p x n`, one row per dimension.
    values: Vec<Vec<f64>>,
    window: usize,
    quantile: f64,
    time_scale: f64,
}

impl SeriesData {
    pub fn new(names: Vec<String>, values: Vec<Vec<f64>>, window: usize, quantile: f64) -> Result<Self> {
        SeriesData::with_time_scale(names, values, window, quantile, 1.0)
    }

    pub fn with_time_scale(names: Vec<String>, values: Vec<Vec<f64>>, window: usize, quantile: f64, time_scale: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSeries(m));
        if values.is_empty() {
            return bad("no series".into());
        }
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: names.len(),
            });
        }
        let n = values[0].len();
        if let Some(i) = values.iter().position(|v| v.len() != n) {
            return bad(format!("series {i} has length {}, expected {n}", values[i].len()));
        }
        if window == 0 || n <= window {
            return bad(format!("need length > window >= 1, got length {n}, window {window}"));
        }
        if !(quantile > 0.0 && quantile < 1.0) {
            return bad(format!("quantile must be in (0, 1), got {quantile}"));
        }
        if !(time_scale.is_finite() && time_scale > 0.0) {
            return bad(format!("time_scale must be positive, got {time_scale}"));
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(t) = v.iter().position(|x| x.is_nan()) {
                return bad(format!("NaN in series {i} at sample {t}"));
            }
        }
        Ok(SeriesData {
            names,
            values,
            window,
            quantile,
            time_scale,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn quantile(&self) -> f64 {
        self.quantile
    }
}

/// Rank of the threshold order statistic, `ceil((1 - q) W)` clamped to `1..=W`.
pub fn threshold_rank(window: usize, quantile: f64) -> usize {
    let k = ((1.0 - quantile) * window as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(window)
}

/// Sample indices `t - W` at which dimension `v` registers a shock.
pub fn shock_indices(v: &[f64], window: usize, quantile: f64) -> Vec<usize> {
    let k = threshold_rank(window, quantile);
    let mut buf = Vec::with_capacity(window);
    let mut out = Vec::new();
    for t in window..v.len() {
        buf.clear();
        buf.extend_from_slice(&v[t + 1 - window..=t]);
        let (_, thr, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
        if v[t] > *thr {
            out.push(t - window);
        }
    }
    out
}

pub fn shocks_from_series(s: &SeriesData) -> Result<EventData> {
    let events = s
        .values
        .iter()
        .map(|v| {
            shock_indices(v, s.window, s.quantile)
                .into_iter()
                .map(|t| t as f64 * s.time_scale)
                .collect()
        })
        .collect();
    EventData::new((s.len() - s.window) as f64 * s.time_scale, events)
}

/// Reads a header of dimension names followed by one numeric row per sample.
/// Returns the names and the `p x n` value matrix.
pub fn read_series_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if names.is_empty() || names.iter().all(|h| h.is_empty()) {
        return Err(Error::InvalidSeries("missing header row".into()));
    }
    let mut values = vec![Vec::new(); names.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, cell) in rec.iter().enumerate() {
            let x: f64 = cell.trim().parse().map_err(|_| {
                Error::InvalidSeries(format!("row {}, column {:?}: not a number: {cell:?}", row + 1, names[c]))
            })?;
            values[c].push(x);
        }
    }
    Ok((names, values))
}
