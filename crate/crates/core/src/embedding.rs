//! Spectral embeddings of signed graphs.
//!
//! Every method reduces to a (possibly generalized) symmetric eigenproblem
//! whose extreme eigenvectors become vertex coordinates:
//!
//! | method          | pencil `(B, A)`                         | side     |
//! |-----------------|-----------------------------------------|----------|
//! | `Sponge`        | `(L+ + tau- D-, L- + tau+ D+)`          | smallest |
//! | `SpongeSym`     | `(L+_sym + tau- I, L-_sym + tau+ I)`    | smallest |
//! | `SignedLbar`    | `(Dbar - A, I)`                         | smallest |
//! | `SignedLbarSym` | `(I - Dbar^{-1/2} A Dbar^{-1/2}, I)`    | smallest |
//! | `SignedLbarRw`  | as `SignedLbarSym`, then `Dbar^{-1/2} v` | smallest |
//! | `Adjacency`     | `(A, I)`                                | largest  |
//! | `Bnc`           | `(D+ - A, Dbar)`                        | smallest |
//! | `Brc`           | `(D+ - A, I)`                           | smallest |
//!
//! Under [`DegreePolicy::Regularize`] isolated vertices are removed before
//! solving and get all-zero coordinates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{largest_generalized, smallest_generalized, EigOptions, EigResult, EigenError, Pencil};
use crate::graph::{inverse_power, DegreePolicy, GraphError, LaplacianKind, SignedGraph};
use crate::kmeans::{kmeanspp, KmeansConfig, KmeansError};
use crate::sparse::CsrMatrix;

/// Relative eigenvalue separation below which the cut-off is called a tie.
const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("mass matrix of the pencil is singular or indefinite")]
    SingularPencil,
    #[error("invalid method specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Eigen(EigenError),
    #[error(transparent)]
    Kmeans(#[from] KmeansError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sponge,
    SpongeSym,
    SignedLbar,
    SignedLbarSym,
    SignedLbarRw,
    Adjacency,
    Bnc,
    Brc,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Sponge,
        Method::SpongeSym,
        Method::SignedLbar,
        Method::SignedLbarSym,
        Method::SignedLbarRw,
        Method::Adjacency,
        Method::Bnc,
        Method::Brc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sponge => "sponge",
            Method::SpongeSym => "sponge-sym",
            Method::SignedLbar => "signed-lbar",
            Method::SignedLbarSym => "signed-lbar-sym",
            Method::SignedLbarRw => "signed-lbar-rw",
            Method::Adjacency => "adjacency",
            Method::Bnc => "bnc",
            Method::Brc => "brc",
        }
    }

    /// Whether the method divides by some degree.
    fn uses_degrees(self) -> bool {
        !matches!(self, Method::SignedLbar | Method::Adjacency | Method::Brc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| EmbeddingError::InvalidSpec(format!("unknown method '{s}'")))
    }
}

/// How many eigenvectors to keep, relative to the cluster count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigCount {
    K,
    #[default]
    KMinus1,
    Fixed(usize),
}

impl EigCount {
    pub fn resolve(self, k: usize) -> usize {
        match self {
            EigCount::K => k,
            EigCount::KMinus1 => k.saturating_sub(1),
            EigCount::Fixed(d) => d,
        }
    }
}

impl FromStr for EigCount {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "k" => Ok(EigCount::K),
            "k-1" => Ok(EigCount::KMinus1),
            other => other
                .parse()
                .map(EigCount::Fixed)
                .map_err(|_| EmbeddingError::InvalidSpec(format!("bad dims '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub dims: EigCount,
    pub policy: DegreePolicy,
    #[serde(skip)]
    pub eig: EigOptions,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec {
            method,
            tau_plus: 1.0,
            tau_minus: 1.0,
            dims: EigCount::default(),
            policy: DegreePolicy::default(),
            eig: EigOptions::default(),
        }
    }

    pub fn taus(mut self, tau_plus: f64, tau_minus: f64) -> Self {
        self.tau_plus = tau_plus;
        self.tau_minus = tau_minus;
        self
    }

    pub fn dims(mut self, dims: EigCount) -> Self {
        self.dims = dims;
        self
    }

    fn validate(&self, d: usize, n: usize) -> Result<(), EmbeddingError> {
        if matches!(self.method, Method::Sponge | Method::SpongeSym)
            && !(self.tau_plus > 0.0 && self.tau_minus > 0.0 && self.tau_plus.is_finite() && self.tau_minus.is_finite())
        {
            return Err(EmbeddingError::InvalidSpec(format!(
                "tau+ = {} and tau- = {} must be positive",
                self.tau_plus, self.tau_minus
            )));
        }
        if d == 0 {
            return Err(EmbeddingError::InvalidSpec("embedding dimension must be at least 1".into()));
        }
        if d > n {
            return Err(EmbeddingError::InvalidSpec(format!(
                "{d} dimensions requested for {n} embeddable vertices"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n x d`, one row per vertex.
    pub coords: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub spec: MethodSpec,
    /// False when the iterative solver stopped at its iteration cap.
    pub converged: bool,
    /// The first discarded eigenvalue equals the last kept one.
    pub tie_at_cutoff: bool,
    /// Vertices left out of the eigenproblem (zero coordinates).
    pub excluded: Vec<usize>,
    pub residuals: Vec<f64>,
}

/// Embeds `g` into `d` dimensions with the method of `spec`.
pub fn embed(g: &SignedGraph, spec: &MethodSpec, d: usize) -> Result<Embedding, EmbeddingError> {
    let (keep, excluded) = split_isolated(g, spec)?;
    spec.validate(d, keep.len())?;
    let sub;
    let h = if excluded.is_empty() {
        g
    } else {
        sub = g.induced(&keep);
        &sub
    };
    let solved = match spec.method {
        Method::Sponge => {
            let (b, a) = sponge_pencil(h, spec.tau_plus, spec.tau_minus);
            solve(b, Some(a), d, false, spec)?
        }
        Method::SpongeSym => {
            let lp = h.laplacian_with(LaplacianKind::LplusSym, spec.policy)?;
            let lm = h.laplacian_with(LaplacianKind::LminusSym, spec.policy)?;
            let eye = CsrMatrix::identity(h.n());
            let b = CsrMatrix::lin_comb(&[(1.0, &lp), (spec.tau_minus, &eye)]);
            let a = CsrMatrix::lin_comb(&[(1.0, &lm), (spec.tau_plus, &eye)]);
            solve(b, Some(a), d, false, spec)?
        }
        Method::SignedLbar => solve(h.laplacian(LaplacianKind::SignedLbar)?, None, d, false, spec)?,
        Method::SignedLbarSym => solve(
            h.laplacian_with(LaplacianKind::SignedLbarSym, spec.policy)?,
            None,
            d,
            false,
            spec,
        )?,
        Method::SignedLbarRw => {
            let mut s = solve(
                h.laplacian_with(LaplacianKind::SignedLbarSym, spec.policy)?,
                None,
                d,
                false,
                spec,
            )?;
            let scale = inverse_power(&h.abs_degrees(), 0.5, spec.policy)?;
            for (i, f) in scale.iter().enumerate() {
                let mut row = s.0.eigenvectors.row_mut(i);
                row *= *f;
            }
            s
        }
        Method::Adjacency => solve(h.adjacency().clone(), None, d, true, spec)?,
        Method::Bnc | Method::Brc => {
            let dp = CsrMatrix::from_diagonal(&h.positive_degrees());
            let b = CsrMatrix::lin_comb(&[(1.0, &dp), (-1.0, h.adjacency())]);
            let a = (spec.method == Method::Bnc).then(|| CsrMatrix::from_diagonal(&h.abs_degrees()));
            solve(b, a, d, false, spec)?
        }
    };
    let (res, converged) = solved;
    Ok(assemble(g.n(), &keep, excluded, res, converged, spec.clone()))
}

/// Embeds with the dimension implied by `spec.dims` for `k` clusters.
pub fn embed_for_k(g: &SignedGraph, spec: &MethodSpec, k: usize) -> Result<Embedding, EmbeddingError> {
    embed(g, spec, spec.dims.resolve(k))
}

pub fn sponge_embedding(g: &SignedGraph, spec: &MethodSpec, d: usize) -> Result<Embedding, EmbeddingError> {
    embed(g, &MethodSpec { method: Method::Sponge, ..spec.clone() }, d)
}

pub fn sponge_sym_embedding(g: &SignedGraph, spec: &MethodSpec, d: usize) -> Result<Embedding, EmbeddingError> {
    embed(g, &MethodSpec { method: Method::SpongeSym, ..spec.clone() }, d)
}

pub fn baseline_embedding(g: &SignedGraph, spec: &MethodSpec, d: usize) -> Result<Embedding, EmbeddingError> {
    if matches!(spec.method, Method::Sponge | Method::SpongeSym) {
        return Err(EmbeddingError::InvalidSpec(format!("{} is not a baseline", spec.method)));
    }
    embed(g, spec, d)
}

/// SPONGE embedding from explicit operators, for instance expected matrices.
pub fn sponge_from_parts(
    l_plus: &CsrMatrix,
    l_minus: &CsrMatrix,
    d_plus: &[f64],
    d_minus: &[f64],
    spec: &MethodSpec,
    d: usize,
) -> Result<Embedding, EmbeddingError> {
    let n = l_plus.dim();
    spec.validate(d, n)?;
    let b = CsrMatrix::lin_comb(&[(1.0, l_plus), (spec.tau_minus, &CsrMatrix::from_diagonal(d_minus))]);
    let a = CsrMatrix::lin_comb(&[(1.0, l_minus), (spec.tau_plus, &CsrMatrix::from_diagonal(d_plus))]);
    let (res, converged) = solve(b, Some(a), d, false, spec)?;
    let keep: Vec<usize> = (0..n).collect();
    Ok(assemble(n, &keep, Vec::new(), res, converged, MethodSpec { method: Method::Sponge, ..spec.clone() }))
}

/// `(L+ + tau- D-, L- + tau+ D+)`.
pub fn sponge_pencil(g: &SignedGraph, tau_plus: f64, tau_minus: f64) -> (CsrMatrix, CsrMatrix) {
    let lp = g.laplacian(LaplacianKind::Lplus).expect("combinatorial Laplacian");
    let lm = g.laplacian(LaplacianKind::Lminus).expect("combinatorial Laplacian");
    let dp = CsrMatrix::from_diagonal(&g.positive_degrees());
    let dm = CsrMatrix::from_diagonal(&g.negative_degrees());
    (
        CsrMatrix::lin_comb(&[(1.0, &lp), (tau_minus, &dm)]),
        CsrMatrix::lin_comb(&[(1.0, &lm), (tau_plus, &dp)]),
    )
}

fn split_isolated(g: &SignedGraph, spec: &MethodSpec) -> Result<(Vec<usize>, Vec<usize>), EmbeddingError> {
    let isolated = g.isolated_vertices();
    if isolated.is_empty() {
        return Ok(((0..g.n()).collect(), isolated));
    }
    match spec.policy {
        DegreePolicy::Reject if spec.method.uses_degrees() => {
            Err(GraphError::ZeroDegreeVertex(isolated[0]).into())
        }
        DegreePolicy::Reject => Ok(((0..g.n()).collect(), Vec::new())),
        DegreePolicy::Regularize => {
            let mut is_iso = vec![false; g.n()];
            isolated.iter().for_each(|&i| is_iso[i] = true);
            Ok(((0..g.n()).filter(|&i| !is_iso[i]).collect(), isolated))
        }
    }
}

fn solve(
    b: CsrMatrix,
    a: Option<CsrMatrix>,
    d: usize,
    largest: bool,
    spec: &MethodSpec,
) -> Result<(EigResult, bool), EmbeddingError> {
    let pencil = match a {
        Some(a) => Pencil::new(b, a).map_err(EmbeddingError::Eigen)?,
        None => Pencil::standard(b),
    };
    let out = if largest {
        largest_generalized(&pencil, d, &spec.eig)
    } else {
        smallest_generalized(&pencil, d, &spec.eig)
    };
    let (mut res, converged) = match out {
        Ok(r) => (r, true),
        Err(EigenError::NotConverged(r)) => (*r, false),
        Err(EigenError::IndefiniteMassMatrix) => return Err(EmbeddingError::SingularPencil),
        Err(e) => return Err(EmbeddingError::Eigen(e)),
    };
    if largest {
        // report ascending like every other method
        res.eigenvalues.reverse();
        res.residuals.reverse();
        let m = res.eigenvectors.ncols();
        let order: Vec<usize> = (0..m).rev().collect();
        res.eigenvectors = res.eigenvectors.select_columns(&order);
    }
    Ok((res, converged))
}

fn assemble(
    n: usize,
    keep: &[usize],
    excluded: Vec<usize>,
    res: EigResult,
    converged: bool,
    spec: MethodSpec,
) -> Embedding {
    let d = res.eigenvectors.ncols();
    let mut coords = DMatrix::zeros(n, d);
    for (r, &v) in keep.iter().enumerate() {
        coords.row_mut(v).copy_from(&res.eigenvectors.row(r));
    }
    // the boundary eigenvalue is the largest kept one, or the smallest kept
    // one when the top of the spectrum was taken
    let boundary = if spec.method == Method::Adjacency {
        res.eigenvalues.first()
    } else {
        res.eigenvalues.last()
    };
    let tie_at_cutoff = match (boundary, res.next_eigenvalue) {
        (Some(&a), Some(b)) => (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()).max(1.0),
        _ => false,
    };
    Embedding {
        coords,
        eigenvalues: res.eigenvalues,
        spec,
        converged,
        tie_at_cutoff,
        excluded,
        residuals: res.residuals,
    }
}

/// Embedding followed by k-means++; returns labels and the embedding.
pub fn cluster_graph(
    g: &SignedGraph,
    spec: &MethodSpec,
    kcfg: &KmeansConfig,
) -> Result<(Vec<usize>, Embedding), EmbeddingError> {
    let emb = embed_for_k(g, spec, kcfg.k)?;
    let result = kmeanspp(&emb.coords, kcfg)?;
    Ok((result.labels, emb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_generalized;
    use crate::metrics::adjusted_rand_index;
    use crate::ssbm::{generate, SsbmParams};

    fn noiseless(n: usize) -> SignedGraph {
        generate(&SsbmParams::new(n, 2, 1.0, 0.0, 0)).unwrap().graph
    }

    #[test]
    fn sponge_rows_agree_within_clusters() {
        let g = noiseless(4);
        // at n = 4 the constant vector only sits below the bulk for small tau-
        let cases = [(MethodSpec::new(Method::Sponge), 1), (MethodSpec::new(Method::Sponge).taus(1.0, 0.25), 2)];
        for (spec, d) in cases {
            let e = sponge_embedding(&g, &spec, d).unwrap();
            for (a, b) in [(0, 1), (2, 3)] {
                assert!((e.coords.row(a) - e.coords.row(b)).abs().max() < 1e-8);
            }
        }
    }

    #[test]
    fn equal_taus_on_four_vertices_pull_in_the_bulk() {
        let g = noiseless(4);
        let e = sponge_embedding(&g, &MethodSpec::new(Method::Sponge), 2).unwrap();
        assert!((e.eigenvalues[0] - 0.4).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 4.0 / 3.0).abs() < 1e-12);
        assert!(e.tie_at_cutoff);
    }

    #[test]
    fn sponge_sym_recovers_noiseless_clusters() {
        let g = noiseless(4);
        let spec = MethodSpec::new(Method::SpongeSym);
        let (labels, _) = cluster_graph(&g, &spec, &KmeansConfig::new(2, 0)).unwrap();
        assert_eq!(adjusted_rand_index(&labels, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn full_dimension_matches_dense_pencil() {
        let g = generate(&SsbmParams::new(12, 3, 0.6, 0.2, 4)).unwrap().graph;
        if !g.isolated_vertices().is_empty() {
            return;
        }
        let spec = MethodSpec::new(Method::Sponge).taus(0.7, 1.3);
        let e = embed(&g, &spec, 12).unwrap();
        let (b, a) = sponge_pencil(&g, 0.7, 1.3);
        let (vals, _) = dense_generalized(&b.to_dense(), Some(&a.to_dense())).unwrap();
        for (x, y) in e.eigenvalues.iter().zip(&vals) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn isolated_vertex_gets_zero_row() {
        let g = SignedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, -1.0), (0, 2, 1.0)]).unwrap();
        let e = sponge_sym_embedding(&g, &MethodSpec::new(Method::SpongeSym), 1).unwrap();
        assert_eq!(e.excluded, vec![3]);
        assert_eq!(e.coords[(3, 0)], 0.0);
        let reject = MethodSpec {
            policy: DegreePolicy::Reject,
            ..MethodSpec::new(Method::SpongeSym)
        };
        assert_eq!(
            embed(&g, &reject, 1).unwrap_err(),
            EmbeddingError::Graph(GraphError::ZeroDegreeVertex(3))
        );
    }

    #[test]
    fn balanced_cliques_give_piecewise_constant_lbar_vector() {
        let g = noiseless(6);
        let e = baseline_embedding(&g, &MethodSpec::new(Method::SignedLbar), 1).unwrap();
        assert!(e.eigenvalues[0].abs() < 1e-12);
        let s = e.coords[(0, 0)].signum();
        for i in 0..6 {
            let expected = if i < 3 { s } else { -s } / 6f64.sqrt();
            assert!((e.coords[(i, 0)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bnc_splits_noiseless_instance() {
        let g = noiseless(6);
        let e = baseline_embedding(&g, &MethodSpec::new(Method::Bnc), 1).unwrap();
        let labels: Vec<usize> = (0..6).map(|i| (e.coords[(i, 0)] > 0.0) as usize).collect();
        assert_eq!(adjusted_rand_index(&labels, &[0, 0, 0, 1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn adjacency_top_vector_is_informative() {
        let g = noiseless(6);
        let e = baseline_embedding(&g, &MethodSpec::new(Method::Adjacency), 1).unwrap();
        let w: Vec<f64> = (0..6).map(|i| if i < 3 { 1.0 } else { -1.0 } / 6f64.sqrt()).collect();
        let dot: f64 = (0..6).map(|i| e.coords[(i, 0)] * w[i]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_taus_are_rejected() {
        let g = noiseless(4);
        let spec = MethodSpec::new(Method::Sponge).taus(0.0, 1.0);
        assert!(matches!(embed(&g, &spec, 1), Err(EmbeddingError::InvalidSpec(_))));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("k-1".parse::<EigCount>().unwrap(), EigCount::KMinus1);
        assert_eq!("3".parse::<EigCount>().unwrap(), EigCount::Fixed(3));
    }
}
