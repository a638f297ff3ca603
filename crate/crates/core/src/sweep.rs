//! Synthetic recovery experiments over parameter grids.

use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{embed_for_k, EigCount, Method, MethodSpec};
use crate::kmeans::{kmeanspp, KmeansConfig};
use crate::metrics::{adjusted_rand_index, orthonormalize, sin_theta_distance};
use crate::ssbm::{generate, ClusterSizes, SsbmParams};
use crate::theory::{tau_admissible, TauMode};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "SIGNET_THREADS";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid experiment grid: {0}")]
    Validation(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Vary the flip probability over `values`.
    Eta,
    /// Vary the edge density over `values`.
    P,
    /// Every pair of `tau_plus_values` x `tau_minus_values`.
    Tau,
}

fn default_trials() -> usize {
    20
}

fn default_restarts() -> usize {
    10
}

fn default_tau() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub axis: Axis,
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub sizes: ClusterSizes,
    /// Fixed taus for the eta and p axes.
    #[serde(default = "default_tau")]
    pub tau_plus: f64,
    #[serde(default = "default_tau")]
    pub tau_minus: f64,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub tau_plus_values: Vec<f64>,
    #[serde(default)]
    pub tau_minus_values: Vec<f64>,
    pub methods: Vec<Method>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub dims: EigCount,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
    /// Admissibility rule attached to tau-grid cells.
    #[serde(default)]
    pub tau_mode: Option<TauMode>,
    /// Also record the sin-theta distance to the cluster indicator subspace.
    #[serde(default)]
    pub sin_theta: bool,
    /// Record wall time per trial. Off by default so reruns are identical.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentGrid {
    pub fn new(axis: Axis, n: usize, k: usize, methods: Vec<Method>) -> Self {
        ExperimentGrid {
            axis,
            n,
            k,
            p: 0.0,
            eta: 0.0,
            sizes: ClusterSizes::Equal,
            tau_plus: 1.0,
            tau_minus: 1.0,
            values: Vec::new(),
            tau_plus_values: Vec::new(),
            tau_minus_values: Vec::new(),
            methods,
            trials: default_trials(),
            base_seed: 0,
            dims: EigCount::KMinus1,
            kmeans_restarts: default_restarts(),
            tau_mode: None,
            sin_theta: false,
            timing: false,
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let base = Cell {
            eta: self.eta,
            p: self.p,
            tau_plus: self.tau_plus,
            tau_minus: self.tau_minus,
        };
        match self.axis {
            Axis::Eta => self.values.iter().map(|&eta| Cell { eta, ..base }).collect(),
            Axis::P => self.values.iter().map(|&p| Cell { p, ..base }).collect(),
            Axis::Tau => self
                .tau_plus_values
                .iter()
                .flat_map(|&tau_plus| {
                    self.tau_minus_values.iter().map(move |&tau_minus| Cell {
                        tau_plus,
                        tau_minus,
                        ..base
                    })
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Validation(m));
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.kmeans_restarts == 0 {
            return bad("kmeans_restarts must be at least 1".into());
        }
        let cells = self.cells();
        if cells.is_empty() {
            return bad("grid has no cells".into());
        }
        for c in &cells {
            SsbmParams::new(self.n, self.k, c.p, c.eta, 0)
                .with_sizes(self.sizes)
                .validate()
                .map_err(|e| SweepError::Validation(e.to_string()))?;
            if !(c.tau_plus > 0.0 && c.tau_minus > 0.0) {
                return bad(format!("non-positive tau pair ({}, {})", c.tau_plus, c.tau_minus));
            }
        }
        if self.dims.resolve(self.k) == 0 {
            return bad("embedding dimension resolves to 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub eta: f64,
    pub p: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub cell: usize,
    pub coords: Cell,
    pub method: Method,
    pub seed: u64,
    pub ari: Option<f64>,
    pub secs: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub converged: bool,
    pub sin_theta: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub cell: usize,
    pub coords: Cell,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub mean_ari: f64,
    pub stderr_ari: f64,
    pub admissible: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs every (cell, seed, method) trial. Trial failures are recorded, not
/// propagated.
pub fn run_sweep(grid: &ExperimentGrid) -> Result<SweepOutput, SweepError> {
    grid.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..grid.trials).map(move |t| (c, t)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(c, t)| run_cell_trial(grid, c, &cells[c], grid.base_seed + t as u64))
            .collect::<Vec<_>>()
    };
    let nested: Vec<Vec<TrialResult>> = match threads_from_env() {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| SweepError::Validation(e.to_string()))?
            .install(work),
        None => work(),
    };
    let trials: Vec<TrialResult> = nested.into_iter().flatten().collect();
    let aggregates = aggregate(grid, &cells, &trials);
    Ok(SweepOutput { trials, aggregates })
}

fn indicator_basis(labels: &[usize], k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(labels.len(), k, |i, c| if labels[i] == c { 1.0 } else { 0.0 });
    orthonormalize(&m)
}

fn run_cell_trial(grid: &ExperimentGrid, cell_index: usize, cell: &Cell, seed: u64) -> Vec<TrialResult> {
    let params = SsbmParams::new(grid.n, grid.k, cell.p, cell.eta, seed).with_sizes(grid.sizes);
    let instance = generate(&params);
    grid.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let mut result = TrialResult {
                cell: cell_index,
                coords: *cell,
                method,
                seed,
                ari: None,
                secs: None,
                eigenvalues: Vec::new(),
                converged: false,
                sin_theta: None,
                error: None,
            };
            let instance = match &instance {
                Ok(i) => i,
                Err(e) => {
                    result.error = Some(e.to_string());
                    return result;
                }
            };
            let spec = MethodSpec::new(method)
                .taus(cell.tau_plus, cell.tau_minus)
                .dims(grid.dims);
            let outcome = embed_for_k(&instance.graph, &spec, grid.k).and_then(|emb| {
                let cfg = KmeansConfig {
                    restarts: grid.kmeans_restarts,
                    ..KmeansConfig::new(grid.k, seed)
                };
                let km = kmeanspp(&emb.coords, &cfg)?;
                Ok((emb, km.labels))
            });
            match outcome {
                Ok((emb, labels)) => {
                    result.ari = adjusted_rand_index(&labels, &instance.labels).ok();
                    result.converged = emb.converged;
                    if grid.sin_theta && emb.coords.ncols() <= grid.k {
                        let truth = indicator_basis(&instance.labels, grid.k);
                        result.sin_theta = sin_theta_distance(&truth, &orthonormalize(&emb.coords)).ok();
                    }
                    result.eigenvalues = emb.eigenvalues;
                }
                Err(e) => result.error = Some(e.to_string()),
            }
            if grid.timing {
                result.secs = Some(start.elapsed().as_secs_f64());
            }
            result
        })
        .collect()
}

/// Mean and standard error of the mean (sample standard deviation).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn aggregate(grid: &ExperimentGrid, cells: &[Cell], trials: &[TrialResult]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for &method in &grid.methods {
            let rows: Vec<&TrialResult> = trials
                .iter()
                .filter(|t| t.cell == ci && t.method == method)
                .collect();
            let aris: Vec<f64> = rows.iter().filter_map(|t| t.ari).collect();
            let (mean_ari, stderr_ari) = mean_and_stderr(&aris);
            let admissible = match (grid.axis, grid.tau_mode) {
                (Axis::Tau, Some(mode)) if grid.k == 2 => {
                    Some(tau_admissible(grid.n, cell.eta, cell.tau_plus, cell.tau_minus, mode))
                }
                _ => None,
            };
            out.push(Aggregate {
                cell: ci,
                coords: *cell,
                method,
                trials: rows.len(),
                failures: rows.len() - aris.len(),
                mean_ari,
                stderr_ari,
                admissible,
            });
        }
    }
    out
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// One row per trial, fixed column order.
pub fn write_trials_csv<W: Write>(out: W, trials: &[TrialResult], timing: bool) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["eta", "p", "tau_plus", "tau_minus", "method", "seed", "ari"];
    if timing {
        header.push("secs");
    }
    header.extend(["converged", "sin_theta", "eigenvalues", "error"]);
    w.write_record(&header)?;
    for t in trials {
        let mut row = vec![
            t.coords.eta.to_string(),
            t.coords.p.to_string(),
            t.coords.tau_plus.to_string(),
            t.coords.tau_minus.to_string(),
            t.method.to_string(),
            t.seed.to_string(),
            opt(&t.ari),
        ];
        if timing {
            row.push(opt(&t.secs));
        }
        row.push(t.converged.to_string());
        row.push(opt(&t.sin_theta));
        row.push(t.eigenvalues.iter().map(f64::to_string).collect::<Vec<_>>().join(";"));
        row.push(t.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (cell, method).
pub fn write_aggregates_csv<W: Write>(out: W, aggregates: &[Aggregate]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "eta", "p", "tau_plus", "tau_minus", "method", "trials", "failures", "mean_ari", "stderr_ari", "admissible",
    ])?;
    for a in aggregates {
        w.write_record([
            a.coords.eta.to_string(),
            a.coords.p.to_string(),
            a.coords.tau_plus.to_string(),
            a.coords.tau_minus.to_string(),
            a.method.to_string(),
            a.trials.to_string(),
            a.failures.to_string(),
            a.mean_ari.to_string(),
            a.stderr_ari.to_string(),
            opt(&a.admissible),
        ])?;
    }
    w.flush()?;
    Ok(())
}
