use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use super::EigenError;

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
///
/// Ties keep the order in which the underlying routine reports them, so the
/// output is deterministic for a given input.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `f(M)` for a symmetric matrix via its eigendecomposition.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = symmetric_eigen(m);
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * f(vals[c]));
    scaled * vecs.transpose()
}

/// `M^{-1/2}` for a symmetric positive definite matrix.
pub fn inverse_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, EigenError> {
    let (vals, _) = symmetric_eigen(m);
    if vals.first().is_some_and(|&v| v <= 0.0) {
        return Err(EigenError::IndefiniteMassMatrix);
    }
    Ok(symmetric_function(m, |v| 1.0 / v.sqrt()))
}

/// All generalized eigenpairs of `B x = lambda A x`, ascending, with
/// `A`-orthonormal eigenvectors. Uses the Cholesky factor of `A`.
pub fn dense_generalized(
    b: &DMatrix<f64>,
    a: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, DMatrix<f64>), EigenError> {
    let Some(a) = a else {
        return Ok(symmetric_eigen(b));
    };
    let chol = Cholesky::new(a.clone()).ok_or(EigenError::IndefiniteMassMatrix)?;
    let l = chol.l();
    // C = L^{-1} B L^{-T}
    let linv_b = l
        .solve_lower_triangular(b)
        .ok_or(EigenError::IndefiniteMassMatrix)?;
    let c = l
        .solve_lower_triangular(&linv_b.transpose())
        .ok_or(EigenError::IndefiniteMassMatrix)?;
    let (vals, y) = symmetric_eigen(&c);
    let x = l
        .transpose()
        .solve_upper_triangular(&y)
        .ok_or(EigenError::IndefiniteMassMatrix)?;
    Ok((vals, x))
}
