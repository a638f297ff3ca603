//! Summaries of a clustering of a signed graph.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::graph::SignedGraph;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterStats {
    pub cluster: usize,
    pub size: usize,
    pub internal_positive: usize,
    pub internal_negative: usize,
    /// `positive / (positive + negative)` over internal edges; `None` when
    /// the cluster has no internal edge.
    pub positive_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub clusters: Vec<ClusterStats>,
    /// Positive edge fraction over the whole graph.
    pub graph_positive_ratio: Option<f64>,
    /// Vertices ordered by cluster, ties by index.
    pub permutation: Vec<usize>,
    /// Mean signed weight per pair of vertices between blocks `a` and `b`.
    #[serde(skip)]
    pub block_density: DMatrix<f64>,
}

fn ratio(pos: usize, neg: usize) -> Option<f64> {
    (pos + neg > 0).then(|| pos as f64 / (pos + neg) as f64)
}

pub fn cluster_summary(g: &SignedGraph, labels: &[usize], k: usize) -> ClusterSummary {
    assert_eq!(labels.len(), g.n(), "one label per vertex");
    let mut size = vec![0usize; k];
    labels.iter().for_each(|&l| size[l] += 1);
    let mut pos = vec![0usize; k];
    let mut neg = vec![0usize; k];
    let mut weight = DMatrix::<f64>::zeros(k, k);
    let (mut gp, mut gn) = (0, 0);
    for &(i, j, w) in g.edges() {
        let (a, b) = (labels[i], labels[j]);
        if w > 0.0 {
            gp += 1;
        } else {
            gn += 1;
        }
        if a == b {
            if w > 0.0 {
                pos[a] += 1;
            } else {
                neg[a] += 1;
            }
            weight[(a, a)] += w;
        } else {
            weight[(a, b)] += w;
            weight[(b, a)] += w;
        }
    }
    let block_density = DMatrix::from_fn(k, k, |a, b| {
        let pairs = if a == b {
            size[a] * size[a].saturating_sub(1) / 2
        } else {
            size[a] * size[b]
        };
        if pairs == 0 {
            0.0
        } else {
            weight[(a, b)] / pairs as f64
        }
    });
    let mut permutation: Vec<usize> = (0..g.n()).collect();
    permutation.sort_by_key(|&v| (labels[v], v));
    ClusterSummary {
        k,
        clusters: (0..k)
            .map(|c| ClusterStats {
                cluster: c,
                size: size[c],
                internal_positive: pos[c],
                internal_negative: neg[c],
                positive_ratio: ratio(pos[c], neg[c]),
            })
            .collect(),
        graph_positive_ratio: ratio(gp, gn),
        permutation,
        block_density,
    }
}

pub fn write_labels<W: Write>(mut out: W, labels: &[usize]) -> std::io::Result<()> {
    for l in labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

pub fn write_matrix_csv<W: Write>(mut out: W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
