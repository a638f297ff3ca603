//! Signed graphs and the matrix operators derived from them.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::CsrMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("vertex index {index} out of range for a graph with {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("non-finite weight {weight} on edge ({i}, {j})")]
    NonFiniteWeight { i: usize, j: usize, weight: f64 },
    #[error("vertex {0} has zero degree")]
    ZeroDegreeVertex(usize),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GraphError {
    fn from(e: std::io::Error) -> Self {
        GraphError::Io(e.to_string())
    }
}

/// How normalized operators treat vertices whose relevant degree is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreePolicy {
    /// `D^{-1/2}` is taken as 0 on zero-degree rows, so the normalized
    /// Laplacian has an identity row there.
    #[default]
    Regularize,
    /// Zero-degree vertices are an error.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaplacianKind {
    /// `L+ = D+ - A+`
    Lplus,
    /// `L- = D- - A-`
    Lminus,
    /// `Lbar = Dbar - A`
    SignedLbar,
    /// `I - Dbar^{-1/2} A Dbar^{-1/2}`
    SignedLbarSym,
    /// `I - Dbar^{-1} A` (not symmetric)
    SignedLbarRw,
    /// `(D+)^{-1/2} L+ (D+)^{-1/2}`
    LplusSym,
    /// `(D-)^{-1/2} L- (D-)^{-1/2}`
    LminusSym,
}

/// Undirected graph with real signed edge weights.
///
/// The upper-triangle edge list is the authoritative storage; the full
/// symmetric adjacency is kept alongside it for operator products. The graph
/// is immutable once built.
#[derive(Debug, Clone)]
pub struct SignedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adjacency: CsrMatrix,
}

impl SignedGraph {
    /// Builds a graph from `(i, j, weight)` triples.
    ///
    /// Repeated unordered pairs are summed and pairs whose total is exactly
    /// zero are left out.
    pub fn from_edges(
        n: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, GraphError> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in triples {
            for index in [i, j] {
                if index >= n {
                    return Err(GraphError::IndexOutOfRange { index, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !w.is_finite() {
                return Err(GraphError::NonFiniteWeight { i, j, weight: w });
            }
            *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        let edges: Vec<_> = acc
            .into_iter()
            .filter(|&(_, w)| w != 0.0)
            .map(|((i, j), w)| (i, j, w))
            .collect();
        Ok(Self::from_sorted_upper(n, edges))
    }

    /// Internal constructor for an already validated, sorted, deduplicated
    /// upper-triangle edge list.
    pub(crate) fn from_sorted_upper(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let adjacency = CsrMatrix::from_triplets(
            n,
            edges
                .iter()
                .flat_map(|&(i, j, w)| [(i, j, w), (j, i, w)])
                .collect::<Vec<_>>(),
        );
        SignedGraph {
            n,
            edges,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Upper-triangle edges `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    /// Entrywise `max(A, 0)`.
    pub fn positive_part(&self) -> CsrMatrix {
        self.adjacency.map_values(|v| v.max(0.0))
    }

    /// Entrywise `max(-A, 0)`.
    pub fn negative_part(&self) -> CsrMatrix {
        self.adjacency.map_values(|v| (-v).max(0.0))
    }

    pub fn positive_degrees(&self) -> Vec<f64> {
        self.degrees_by(|w| w.max(0.0))
    }

    pub fn negative_degrees(&self) -> Vec<f64> {
        self.degrees_by(|w| (-w).max(0.0))
    }

    /// `Dbar_ii = sum_j |A_ij|`.
    pub fn abs_degrees(&self) -> Vec<f64> {
        self.degrees_by(f64::abs)
    }

    fn degrees_by(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, w) in &self.edges {
            let v = f(w);
            d[i] += v;
            d[j] += v;
        }
        d
    }

    /// Vertices with no incident edge at all.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        self.abs_degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Induced subgraph on `keep`, relabelled to `0..keep.len()` in order.
    pub fn induced(&self, keep: &[usize]) -> SignedGraph {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(i, j, _)| map[i] != usize::MAX && map[j] != usize::MAX)
            .map(|&(i, j, w)| {
                let (a, b) = (map[i], map[j]);
                (a.min(b), a.max(b), w)
            })
            .collect();
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        SignedGraph::from_sorted_upper(keep.len(), edges)
    }

    /// Multiplies every weight by `c`.
    pub fn scaled(&self, c: f64) -> SignedGraph {
        let edges = self
            .edges
            .iter()
            .map(|&(i, j, w)| (i, j, c * w))
            .filter(|e| e.2 != 0.0)
            .collect();
        SignedGraph::from_sorted_upper(self.n, edges)
    }

    pub fn laplacian(&self, kind: LaplacianKind) -> Result<CsrMatrix, GraphError> {
        self.laplacian_with(kind, DegreePolicy::Regularize)
    }

    pub fn laplacian_with(
        &self,
        kind: LaplacianKind,
        policy: DegreePolicy,
    ) -> Result<CsrMatrix, GraphError> {
        let n = self.n;
        match kind {
            LaplacianKind::Lplus => Ok(combinatorial(&self.positive_part(), &self.positive_degrees())),
            LaplacianKind::Lminus => Ok(combinatorial(&self.negative_part(), &self.negative_degrees())),
            LaplacianKind::SignedLbar => Ok(combinatorial(&self.adjacency, &self.abs_degrees())),
            LaplacianKind::SignedLbarSym => {
                normalized(&self.adjacency, &self.abs_degrees(), policy)
            }
            LaplacianKind::SignedLbarRw => {
                let inv = inverse_power(&self.abs_degrees(), 1.0, policy)?;
                let walk = self.adjacency.scale_rows_cols(&inv, &vec![1.0; n]);
                Ok(CsrMatrix::lin_comb(&[(1.0, &CsrMatrix::identity(n)), (-1.0, &walk)]))
            }
            LaplacianKind::LplusSym => {
                normalized(&self.positive_part(), &self.positive_degrees(), policy)
            }
            LaplacianKind::LminusSym => {
                normalized(&self.negative_part(), &self.negative_degrees(), policy)
            }
        }
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# n={}", self.n)?;
        for &(i, j, w) in &self.edges {
            writeln!(out, "{i}\t{j}\t{w}")?;
        }
        Ok(())
    }
}

/// `D - M` for a degree vector `d`.
fn combinatorial(m: &CsrMatrix, d: &[f64]) -> CsrMatrix {
    CsrMatrix::lin_comb(&[(1.0, &CsrMatrix::from_diagonal(d)), (-1.0, m)])
}

/// `I - D^{-1/2} M D^{-1/2}`.
fn normalized(m: &CsrMatrix, d: &[f64], policy: DegreePolicy) -> Result<CsrMatrix, GraphError> {
    let s = inverse_power(d, 0.5, policy)?;
    let scaled = m.scale_rows_cols(&s, &s);
    Ok(CsrMatrix::lin_comb(&[
        (1.0, &CsrMatrix::identity(m.dim())),
        (-1.0, &scaled),
    ]))
}

/// `d^{-power}` with zero entries mapped to 0 or rejected.
pub(crate) fn inverse_power(d: &[f64], power: f64, policy: DegreePolicy) -> Result<Vec<f64>, GraphError> {
    d.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(v.powf(-power))
            } else if policy == DegreePolicy::Reject {
                Err(GraphError::ZeroDegreeVertex(i))
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// Parsed contents of an edge-list file.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    /// Vertex count from a `# n=<count>` header line, if one was present.
    pub declared_n: Option<usize>,
    pub triples: Vec<(usize, usize, f64)>,
}

impl EdgeList {
    /// Vertex count: the declared one if present, else one past the largest
    /// index seen.
    pub fn vertex_count(&self) -> usize {
        let seen = self
            .triples
            .iter()
            .map(|&(i, j, _)| i.max(j) + 1)
            .max()
            .unwrap_or(0);
        self.declared_n.unwrap_or(0).max(seen)
    }

    pub fn into_graph(self) -> Result<SignedGraph, GraphError> {
        let n = self.vertex_count();
        SignedGraph::from_edges(n, self.triples)
    }
}

/// Reads the tab-separated `i<TAB>j<TAB>w` edge-list format.
///
/// Lines starting with `#` are comments. A comment of the form `# n=<count>`
/// fixes the vertex count, which keeps trailing isolated vertices.
pub fn read_edge_list<R: BufRead>(reader: R) -> Result<EdgeList, GraphError> {
    let mut declared_n = None;
    let mut triples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("n=") {
                declared_n = v.trim().parse().ok();
            }
            continue;
        }
        let parse_err = |msg: String| GraphError::Parse {
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 tab-separated fields, got {}", fields.len())));
        }
        let i: usize = fields[0].trim().parse().map_err(|e| parse_err(format!("{e}")))?;
        let j: usize = fields[1].trim().parse().map_err(|e| parse_err(format!("{e}")))?;
        let w: f64 = fields[2].trim().parse().map_err(|e| parse_err(format!("{e}")))?;
        triples.push((i, j, w));
    }
    Ok(EdgeList {
        declared_n,
        triples,
    })
}
