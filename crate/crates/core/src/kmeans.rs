//! k-means++ seeding followed by Lloyd iterations, best of several restarts.
//!
//! Seeding draws are indexed by point identity rather than position: each
//! point owns one uniform per seeding step, and D²-weighted sampling picks
//! the point minimizing `Exp(u) / D²`. Permuting the input (together with
//! its ids) therefore selects the same seeds.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KmeansError {
    #[error("{n} points cannot form {k} clusters")]
    TooFewPoints { n: usize, k: usize },
    #[error("invalid k-means configuration: {0}")]
    InvalidConfig(String),
    #[error("point ids must be a permutation of 0..n")]
    BadIds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once no center moves by more than this (squared distance).
    pub tol: f64,
    pub seed: u64,
}

impl KmeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KmeansConfig {
            k,
            restarts: 10,
            max_iter: 300,
            tol: 1e-9,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every Lloyd step of the winning restart.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols())
        .map(|j| {
            let d = points[(i, j)] - centers[(c, j)];
            d * d
        })
        .sum()
}

/// Clusters the rows of `points`.
pub fn kmeanspp(points: &DMatrix<f64>, cfg: &KmeansConfig) -> Result<KmeansResult, KmeansError> {
    let ids: Vec<usize> = (0..points.nrows()).collect();
    kmeanspp_with_ids(points, &ids, cfg)
}

/// As [`kmeanspp`], with `ids[i]` naming row `i` for the seeding streams.
pub fn kmeanspp_with_ids(
    points: &DMatrix<f64>,
    ids: &[usize],
    cfg: &KmeansConfig,
) -> Result<KmeansResult, KmeansError> {
    let n = points.nrows();
    if cfg.k == 0 || cfg.restarts == 0 {
        return Err(KmeansError::InvalidConfig(
            "k and restarts must be positive".into(),
        ));
    }
    if n < cfg.k {
        return Err(KmeansError::TooFewPoints { n, k: cfg.k });
    }
    let mut seen = vec![false; n];
    if ids.len() != n || ids.iter().any(|&id| id >= n || std::mem::replace(&mut seen[id], true)) {
        return Err(KmeansError::BadIds);
    }

    let runs: Vec<KmeansResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| single_run(points, ids, cfg, r as u64))
        .collect();
    // first restart wins ties, independent of scheduling
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

fn seed_centers(points: &DMatrix<f64>, ids: &[usize], k: usize, seed: u64, restart: u64) -> DMatrix<f64> {
    let n = points.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = DMatrix::zeros(k, points.ncols());
    let mut dist = vec![1.0; n];
    for step in 0..k {
        rng.set_stream(restart * k as u64 + step as u64);
        rng.set_word_pos(0);
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if dist[i] <= 0.0 {
                continue;
            }
            // Exp(1) / weight; smallest key is a D²-weighted draw
            let key = -(1.0 - u[ids[i]]).ln() / dist[i];
            let better = match pick {
                None => true,
                Some((bk, bid, _)) => key < bk || (key == bk && ids[i] < bid),
            };
            if better {
                pick = Some((key, ids[i], i));
            }
        }
        // all points coincide with chosen centers: take the smallest id
        let row = pick.map(|p| p.2).unwrap_or_else(|| {
            (0..n).min_by_key(|&i| ids[i]).expect("nonempty")
        });
        centers.row_mut(step).copy_from(&points.row(row));
        for i in 0..n {
            dist[i] = if step == 0 {
                sq_dist(points, i, &centers, 0)
            } else {
                dist[i].min(sq_dist(points, i, &centers, step))
            };
        }
    }
    centers
}

fn assign(points: &DMatrix<f64>, centers: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    (0..points.nrows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for c in 0..centers.nrows() {
                let d = sq_dist(points, i, centers, c);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

fn single_run(points: &DMatrix<f64>, ids: &[usize], cfg: &KmeansConfig, restart: u64) -> KmeansResult {
    let (n, dim, k) = (points.nrows(), points.ncols(), cfg.k);
    let mut centers = seed_centers(points, ids, k, cfg.seed, restart);
    let (mut labels, mut dists) = assign(points, &centers);
    let mut history = vec![dists.iter().sum::<f64>()];

    for _ in 0..cfg.max_iter {
        let mut sums = DMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            let mut row = sums.row_mut(labels[i]);
            row += points.row(i);
        }
        let mut new_centers = centers.clone();
        for c in 0..k {
            if counts[c] > 0 {
                new_centers.set_row(c, &(sums.row(c) / counts[c] as f64));
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed at the point farthest from its own center
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    counts[labels[i]] -= 1;
                    labels[i] = c;
                    counts[c] = 1;
                    dists[i] = 0.0;
                    new_centers.set_row(c, &points.row(i));
                }
            }
        }
        let shift = (0..k)
            .map(|c| (new_centers.row(c) - centers.row(c)).norm_squared())
            .fold(0.0, f64::max);
        centers = new_centers;
        let (l, d) = assign(points, &centers);
        labels = l;
        dists = d;
        history.push(dists.iter().sum());
        if shift <= cfg.tol {
            break;
        }
    }

    KmeansResult {
        labels,
        inertia: *history.last().expect("nonempty"),
        inertia_history: history,
    }
}
