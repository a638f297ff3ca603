//! Symmetric and symmetric-definite generalized eigenproblems.
//!
//! [`smallest_generalized`] returns the `m` algebraically smallest pairs of
//! `B x = lambda A x`. Small problems go through a dense Cholesky reduction;
//! larger ones through a block LOBPCG iteration that only needs products
//! with `A` and `B`.

mod dense;
mod lobpcg;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::sparse::CsrMatrix;

pub use dense::{dense_generalized, inverse_sqrt_spd, symmetric_eigen, symmetric_function};

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("pencil dimension mismatch: B is {b}x{b}, A is {a}x{a}")]
    DimensionMismatch { b: usize, a: usize },
    #[error("requested {m} eigenpairs of a {n}-dimensional problem")]
    TooManyEigenpairs { m: usize, n: usize },
    #[error("mass matrix is not positive definite")]
    IndefiniteMassMatrix,
    #[error("eigensolver did not converge after {} iterations", .0.iterations)]
    NotConverged(Box<EigResult>),
}

/// The pencil `(B, A)` of the problem `B x = lambda A x`.
///
/// `A = None` stands for the identity.
#[derive(Debug, Clone)]
pub struct Pencil {
    b: CsrMatrix,
    a: Option<CsrMatrix>,
}

impl Pencil {
    pub fn new(b: CsrMatrix, a: CsrMatrix) -> Result<Self, EigenError> {
        if b.dim() != a.dim() {
            return Err(EigenError::DimensionMismatch {
                b: b.dim(),
                a: a.dim(),
            });
        }
        Ok(Pencil { b, a: Some(a) })
    }

    pub fn standard(b: CsrMatrix) -> Self {
        Pencil { b, a: None }
    }

    pub fn from_dense(b: &DMatrix<f64>, a: Option<&DMatrix<f64>>) -> Result<Self, EigenError> {
        match a {
            Some(a) => Pencil::new(CsrMatrix::from_dense(b), CsrMatrix::from_dense(a)),
            None => Ok(Pencil::standard(CsrMatrix::from_dense(b))),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn a(&self) -> Option<&CsrMatrix> {
        self.a.as_ref()
    }

    pub(crate) fn apply_b(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.b.mul_dense(x)
    }

    pub(crate) fn apply_a(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.a {
            Some(a) => a.mul_dense(x),
            None => x.clone(),
        }
    }

    pub fn dense_a(&self) -> DMatrix<f64> {
        match &self.a {
            Some(a) => a.to_dense(),
            None => DMatrix::identity(self.dim(), self.dim()),
        }
    }

    /// The pencil `(-B, A)`, whose smallest pairs are the largest of `(B, A)`.
    pub fn negated(&self) -> Pencil {
        Pencil {
            b: self.b.map_values(|v| -v),
            a: self.a.clone(),
        }
    }

    /// Per-column `||B x - lambda A x||_2`.
    pub fn residuals(&self, values: &[f64], vectors: &DMatrix<f64>) -> Vec<f64> {
        let bx = self.apply_b(vectors);
        let ax = self.apply_a(vectors);
        values
            .iter()
            .enumerate()
            .map(|(j, &l)| (bx.column(j) - ax.column(j) * l).norm())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Problems of at most this dimension are solved densely.
    pub dense_threshold: usize,
    /// Extra block columns carried beyond the requested count.
    pub guard: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-8,
            max_iter: 500,
            seed: 0,
            dense_threshold: 512,
            guard: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `n x m`, columns `A`-orthonormal.
    pub eigenvectors: DMatrix<f64>,
    /// `||B x_i - lambda_i A x_i||_2` per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// Estimate of the next eigenvalue after the returned ones, when the
    /// solver has one.
    pub next_eigenvalue: Option<f64>,
    /// Ritz values of the requested pairs at every iteration (iterative
    /// solver only).
    pub ritz_history: Vec<Vec<f64>>,
    pub dense: bool,
}

/// The `m` smallest generalized eigenpairs of `pencil`.
pub fn smallest_generalized(
    pencil: &Pencil,
    m: usize,
    opts: &EigOptions,
) -> Result<EigResult, EigenError> {
    let n = pencil.dim();
    if m > n || m == 0 {
        return Err(EigenError::TooManyEigenpairs { m, n });
    }
    let block = (m + opts.guard).min(n);
    if n <= opts.dense_threshold || n < 4 * block {
        solve_dense(pencil, m)
    } else {
        lobpcg::lobpcg(pencil, m, opts)
    }
}

/// The `m` largest generalized eigenpairs, eigenvalues descending.
pub fn largest_generalized(
    pencil: &Pencil,
    m: usize,
    opts: &EigOptions,
) -> Result<EigResult, EigenError> {
    let flip = |mut r: EigResult| {
        r.eigenvalues.iter_mut().for_each(|v| *v = -*v);
        r.next_eigenvalue = r.next_eigenvalue.map(|v| -v);
        r.ritz_history
            .iter_mut()
            .for_each(|h| h.iter_mut().for_each(|v| *v = -*v));
        r
    };
    match smallest_generalized(&pencil.negated(), m, opts) {
        Ok(r) => Ok(flip(r)),
        Err(EigenError::NotConverged(r)) => Err(EigenError::NotConverged(Box::new(flip(*r)))),
        Err(e) => Err(e),
    }
}

fn solve_dense(pencil: &Pencil, m: usize) -> Result<EigResult, EigenError> {
    let b = pencil.b.to_dense();
    let a = pencil.a.as_ref().map(CsrMatrix::to_dense);
    let (vals, vecs) = dense_generalized(&b, a.as_ref())?;
    let eigenvectors = vecs.columns(0, m).into_owned();
    let eigenvalues = vals[..m].to_vec();
    let residuals = pencil.residuals(&eigenvalues, &eigenvectors);
    Ok(EigResult {
        eigenvalues,
        eigenvectors,
        residuals,
        iterations: 0,
        next_eigenvalue: vals.get(m).copied(),
        ritz_history: Vec::new(),
        dense: true,
    })
}

/// Maps an eigenpair `(lambda, v)` of `A^{-1/2} B A^{-1/2}` to the
/// generalized pair `(lambda, A^{-1/2} v)` of the pencil.
pub fn eigenpair_transport(
    pencil: &Pencil,
    lambda: f64,
    v: &DVector<f64>,
) -> Result<(f64, DVector<f64>), EigenError> {
    let a_inv_sqrt = inverse_sqrt_spd(&pencil.dense_a())?;
    Ok((lambda, a_inv_sqrt * v))
}
