//! Signed stochastic block model.
//!
//! Every unordered pair is an edge independently with probability `p`. Its
//! sign is `+1` inside a cluster and `-1` across clusters, then flipped
//! independently with probability `eta`.
//!
//! Randomness is counter-addressed: row `i` owns ChaCha stream `i`, and pair
//! `(i, j)` with `i < j` always consumes the two 64-bit draws at position
//! `j - i - 1` of that stream. Output is therefore identical however rows are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SignedGraph;

/// Stream reserved for drawing cluster sizes in uneven mode.
const LABEL_STREAM: u64 = u64::MAX;
const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum SsbmError {
    #[error("invalid SSBM parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterSizes {
    /// Contiguous blocks `floor(l n / k) .. floor((l + 1) n / k)`.
    #[default]
    Equal,
    /// Uniform affinities, normalized, then i.i.d. label draws.
    Uneven,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsbmParams {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub eta: f64,
    pub seed: u64,
    pub sizes: ClusterSizes,
}

impl SsbmParams {
    pub fn new(n: usize, k: usize, p: f64, eta: f64, seed: u64) -> Self {
        SsbmParams {
            n,
            k,
            p,
            eta,
            seed,
            sizes: ClusterSizes::Equal,
        }
    }

    pub fn with_sizes(mut self, sizes: ClusterSizes) -> Self {
        self.sizes = sizes;
        self
    }

    pub fn validate(&self) -> Result<(), SsbmError> {
        let bad = |m: String| Err(SsbmError::InvalidParams(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.n < self.k {
            return bad(format!("n = {} is smaller than k = {}", self.n, self.k));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        if !(self.eta >= 0.0 && self.eta < 0.5) {
            return bad(format!("eta = {} outside [0, 0.5)", self.eta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SsbmInstance {
    pub graph: SignedGraph,
    pub labels: Vec<usize>,
    pub params: SsbmParams,
}

/// Labels of the equal-size partition.
pub fn equal_labels(n: usize, k: usize) -> Vec<usize> {
    let mut labels = vec![0; n];
    for l in 0..k {
        for label in labels.iter_mut().take((l + 1) * n / k).skip(l * n / k) {
            *label = l;
        }
    }
    labels
}

fn uneven_labels(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, SsbmError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(LABEL_STREAM);
    for _ in 0..MAX_RESAMPLES {
        let affinity: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let total: f64 = affinity.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let mut cdf = Vec::with_capacity(k);
        let mut acc = 0.0;
        for a in &affinity {
            acc += a / total;
            cdf.push(acc);
        }
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                cdf.iter().position(|&c| u < c).unwrap_or(k - 1)
            })
            .collect();
        let mut seen = vec![false; k];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            return Ok(labels);
        }
    }
    Err(SsbmError::InvalidParams(format!(
        "could not draw {k} nonempty uneven clusters for n = {n}"
    )))
}

/// Samples one instance. Identical parameters give identical instances.
pub fn generate(params: &SsbmParams) -> Result<SsbmInstance, SsbmError> {
    params.validate()?;
    let SsbmParams { n, p, eta, seed, .. } = *params;
    let labels = match params.sizes {
        ClusterSizes::Equal => equal_labels(n, params.k),
        ClusterSizes::Uneven => uneven_labels(n, params.k, seed)?,
    };

    let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut row = Vec::new();
            for j in (i + 1)..n {
                let present: f64 = rng.random();
                let flip: f64 = rng.random();
                if present < p {
                    let sign = if labels[i] == labels[j] { 1.0 } else { -1.0 };
                    let w = if flip < eta { -sign } else { sign };
                    row.push((i, j, w));
                }
            }
            row
        })
        .collect();

    let edges = rows.into_iter().flatten().collect();
    Ok(SsbmInstance {
        graph: SignedGraph::from_sorted_upper(n, edges),
        labels,
        params: *params,
    })
}

/// Closed-form edge moments of the equal-size model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStatistics {
    pub pairs: u64,
    pub intra_pairs: u64,
    pub inter_pairs: u64,
    pub mean_edges: f64,
    pub var_edges: f64,
    pub mean_positive_intra: f64,
    pub mean_negative_intra: f64,
    pub mean_positive_inter: f64,
    pub mean_negative_inter: f64,
    pub mean_positive: f64,
    pub mean_negative: f64,
}

pub fn expected_edge_statistics(params: &SsbmParams) -> Result<EdgeStatistics, SsbmError> {
    params.validate()?;
    if params.sizes != ClusterSizes::Equal {
        return Err(SsbmError::InvalidParams(
            "edge moments are only defined for equal cluster sizes".into(),
        ));
    }
    let n = params.n as u64;
    let mut sizes = vec![0u64; params.k];
    for l in equal_labels(params.n, params.k) {
        sizes[l] += 1;
    }
    let pairs = n * (n - 1) / 2;
    let intra_pairs: u64 = sizes.iter().map(|&s| s * s.saturating_sub(1) / 2).sum();
    let inter_pairs = pairs - intra_pairs;
    let (p, eta) = (params.p, params.eta);
    let mean_positive_intra = intra_pairs as f64 * p * (1.0 - eta);
    let mean_negative_intra = intra_pairs as f64 * p * eta;
    let mean_positive_inter = inter_pairs as f64 * p * eta;
    let mean_negative_inter = inter_pairs as f64 * p * (1.0 - eta);
    Ok(EdgeStatistics {
        pairs,
        intra_pairs,
        inter_pairs,
        mean_edges: pairs as f64 * p,
        var_edges: pairs as f64 * p * (1.0 - p),
        mean_positive_intra,
        mean_negative_intra,
        mean_positive_inter,
        mean_negative_inter,
        mean_positive: mean_positive_intra + mean_positive_inter,
        mean_negative: mean_negative_intra + mean_negative_inter,
    })
}
