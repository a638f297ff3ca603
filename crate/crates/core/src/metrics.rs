//! Partition agreement and subspace distance.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("label vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least two items are needed, got {0}")]
    TooFewItems(usize),
    #[error("columns are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("row counts differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

const ORTHONORMAL_TOL: f64 = 1e-8;

fn comb2(x: u64) -> f64 {
    (x as f64) * (x.saturating_sub(1) as f64) / 2.0
}

struct PairCounts {
    /// sum over contingency cells of C(n_ij, 2)
    index: f64,
    sum_a: f64,
    sum_b: f64,
    total: f64,
}

fn pair_counts(a: &[usize], b: &[usize]) -> Result<PairCounts, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(MetricError::TooFewItems(a.len()));
    }
    let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    Ok(PairCounts {
        index: cells.values().map(|&c| comb2(c)).sum(),
        sum_a: rows.values().map(|&c| comb2(c)).sum(),
        sum_b: cols.values().map(|&c| comb2(c)).sum(),
        total: comb2(a.len() as u64),
    })
}

/// Hubert-Arabie adjusted Rand index.
///
/// When the chance-corrected denominator vanishes (both partitions trivial
/// in the same way) the result is 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64, MetricError> {
    let c = pair_counts(a, b)?;
    let expected = c.sum_a * c.sum_b / c.total;
    let max_index = 0.5 * (c.sum_a + c.sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        let identical = c.index == c.sum_a && c.index == c.sum_b;
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((c.index - expected) / denom)
}

/// Fraction of item pairs on which the two partitions agree.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64, MetricError> {
    let c = pair_counts(a, b)?;
    // agreements = pairs together in both + pairs apart in both
    let apart_both = c.total - c.sum_a - c.sum_b + c.index;
    Ok((c.index + apart_both) / c.total)
}

fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
    let g = u.transpose() * u;
    (g - DMatrix::identity(u.ncols(), u.ncols())).abs().max()
}

/// `||(I - U U^T) V||_2`, the sine of the largest principal angle between
/// `range(U)` and `range(V)` when the dimensions agree.
pub fn sin_theta_distance(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64, MetricError> {
    if u.nrows() != v.nrows() {
        return Err(MetricError::DimensionMismatch(u.nrows(), v.nrows()));
    }
    for m in [u, v] {
        let defect = orthonormality_defect(m);
        if defect > ORTHONORMAL_TOL {
            return Err(MetricError::NotOrthonormal(defect));
        }
    }
    if v.ncols() == 0 {
        return Ok(0.0);
    }
    let residual = v - u * (u.transpose() * v);
    let sv = residual.singular_values();
    Ok(sv.iter().cloned().fold(0.0, f64::max).min(1.0))
}

/// Orthonormal basis of the column span (thin QR), dropping nothing.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}
