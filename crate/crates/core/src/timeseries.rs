//! Price panels to signed correlation networks.

use std::io::Read;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::SignedGraph;

#[derive(Debug, Error, PartialEq)]
pub enum TimeseriesError {
    #[error("csv error: {0}")]
    Csv(String),
    #[error("row {row}, column '{column}': missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column '{column}': cannot parse '{value}'")]
    BadValue { row: usize, column: String, value: String },
    #[error("instrument '{id}' has a non-positive price on day {day}")]
    NonPositivePrice { id: String, day: usize },
    #[error("need at least two days, got {0}")]
    TooFewDays(usize),
    #[error("benchmark '{0}' is not in the panel")]
    MissingBenchmark(String),
    #[error("series '{0}' has zero variance")]
    ZeroVarianceSeries(String),
    #[error("at least two instruments are required")]
    TooFewInstruments,
}

impl From<csv::Error> for TimeseriesError {
    fn from(e: csv::Error) -> Self {
        TimeseriesError::Csv(e.to_string())
    }
}

/// Instruments by days.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub ids: Vec<String>,
    pub prices: DMatrix<f64>,
}

/// Instruments by periods; returns or any other aligned series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    pub ids: Vec<String>,
    pub values: DMatrix<f64>,
}

impl PricePanel {
    /// Reads a CSV whose header lists instrument ids and whose rows are days.
    /// A leading `date` column is skipped. Rows with a missing value are
    /// rejected.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, TimeseriesError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let skip = usize::from(header.first().is_some_and(|h| h.eq_ignore_ascii_case("date")));
        let ids: Vec<String> = header[skip..].to_vec();
        let mut days: Vec<Vec<f64>> = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            let row = r + 1;
            let mut values = Vec::with_capacity(ids.len());
            for (c, id) in ids.iter().enumerate() {
                let raw = record.get(c + skip).unwrap_or("");
                if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
                    return Err(TimeseriesError::MissingValue { row, column: id.clone() });
                }
                let v: f64 = raw.parse().map_err(|_| TimeseriesError::BadValue {
                    row,
                    column: id.clone(),
                    value: raw.to_string(),
                })?;
                values.push(v);
            }
            days.push(values);
        }
        let prices = DMatrix::from_fn(ids.len(), days.len(), |i, t| days[t][i]);
        Ok(PricePanel { ids, prices })
    }
}

/// `R_{i,t} = log(P_{i,t} / P_{i,t-1})`.
pub fn log_returns(panel: &PricePanel) -> Result<SeriesPanel, TimeseriesError> {
    let (m, days) = panel.prices.shape();
    if days < 2 {
        return Err(TimeseriesError::TooFewDays(days));
    }
    for i in 0..m {
        for t in 0..days {
            if !(panel.prices[(i, t)] > 0.0) {
                return Err(TimeseriesError::NonPositivePrice {
                    id: panel.ids[i].clone(),
                    day: t,
                });
            }
        }
    }
    let values = DMatrix::from_fn(m, days - 1, |i, t| {
        (panel.prices[(i, t + 1)] / panel.prices[(i, t)]).ln()
    });
    Ok(SeriesPanel {
        ids: panel.ids.clone(),
        values,
    })
}

/// Subtracts the benchmark series from every other series and drops the
/// benchmark itself.
pub fn excess_returns(returns: &SeriesPanel, benchmark: &str) -> Result<SeriesPanel, TimeseriesError> {
    let b = returns
        .ids
        .iter()
        .position(|id| id == benchmark)
        .ok_or_else(|| TimeseriesError::MissingBenchmark(benchmark.to_string()))?;
    let keep: Vec<usize> = (0..returns.ids.len()).filter(|&i| i != b).collect();
    let t = returns.values.ncols();
    let values = DMatrix::from_fn(keep.len(), t, |r, c| {
        returns.values[(keep[r], c)] - returns.values[(b, c)]
    });
    Ok(SeriesPanel {
        ids: keep.iter().map(|&i| returns.ids[i].clone()).collect(),
        values,
    })
}

/// Pearson correlation between every pair of rows.
pub fn correlation_matrix(series: &SeriesPanel) -> Result<DMatrix<f64>, TimeseriesError> {
    let (m, t) = series.values.shape();
    let centered: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let row = series.values.row(i);
            let mean = row.sum() / t as f64;
            let c: Vec<f64> = row.iter().map(|v| v - mean).collect();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(TimeseriesError::ZeroVarianceSeries(series.ids[i].clone()));
            }
            Ok(c.iter().map(|v| v / norm).collect())
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    let r: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                    r.clamp(-1.0, 1.0)
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rows[i.min(j)][i.max(j)] }))
}

/// Complete signed graph weighted by correlation, optionally dropping edges
/// whose absolute correlation is below `threshold`.
pub fn correlation_network(series: &SeriesPanel, threshold: Option<f64>) -> Result<SignedGraph, TimeseriesError> {
    let m = series.ids.len();
    if m < 2 {
        return Err(TimeseriesError::TooFewInstruments);
    }
    let c = correlation_matrix(series)?;
    let cut = threshold.unwrap_or(0.0);
    let mut edges = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let w = c[(i, j)];
            if w.abs() >= cut && w != 0.0 {
                edges.push((i, j, w));
            }
        }
    }
    Ok(SignedGraph::from_sorted_upper(m, edges))
}
