//! Compressed sparse row storage for the symmetric operators built from a
//! signed graph.
//!
//! Matrices here store both triangles so that block products are a single
//! pass over the rows. Symmetry is a property of how they are built, not of
//! the storage.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates are summed; entries that sum to exactly zero are
    /// dropped. Panics if an index is out of range.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut trips: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, _) in &trips {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for n = {n}");
        }
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());

        let mut iter = trips.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                rows.push(i);
                indices.push(j);
                values.push(v);
            }
        }
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix {
            n,
            indptr: vec![0; n + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Converts a dense square matrix, keeping every nonzero entry.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let n = m.nrows();
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, trips)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm of a
    /// symmetric matrix.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out.prune()
    }

    fn prune(self) -> Self {
        if self.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let n = self.n;
        Self::from_triplets(n, self.triplets().collect::<Vec<_>>())
    }

    /// Computes `diag(left) * self * diag(right)`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> Self {
        assert_eq!(left.len(), self.n);
        assert_eq!(right.len(), self.n);
        Self::from_triplets(
            self.n,
            self.triplets()
                .map(|(i, j, v)| (i, j, left[i] * v * right[j]))
                .collect::<Vec<_>>(),
        )
    }

    /// Linear combination `sum_k c_k M_k` of equally sized matrices.
    pub fn lin_comb(terms: &[(f64, &CsrMatrix)]) -> Self {
        assert!(!terms.is_empty(), "empty linear combination");
        let n = terms[0].1.n;
        let mut trips = Vec::new();
        for (c, m) in terms {
            assert_eq!(m.n, n, "dimension mismatch in linear combination");
            trips.extend(m.triplets().map(|(i, j, v)| (i, j, c * v)));
        }
        Self::from_triplets(n, trips)
    }

    /// Restricts to the rows and columns listed in `keep` (in that order).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let trips: Vec<_> = keep
            .iter()
            .enumerate()
            .flat_map(|(ni, &oi)| {
                let map = &map;
                self.row(oi)
                    .filter(move |(j, _)| map[*j] != usize::MAX)
                    .map(move |(j, v)| (ni, map[j], v))
            })
            .collect();
        Self::from_triplets(keep.len(), trips)
    }

    /// Block product `self * x` for a dense `n x b` block.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n, "dimension mismatch in block product");
        let b = x.ncols();
        let mut y = DMatrix::zeros(self.n, b);
        for c in 0..b {
            let xc = x.column(c);
            let mut yc = y.column_mut(c);
            for i in 0..self.n {
                let mut acc = 0.0;
                for k in self.indptr[i]..self.indptr[i + 1] {
                    acc += self.values[k] * xc[self.indices[k]];
                }
                yc[i] = acc;
            }
        }
        y
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 1, 2.0), (0, 1, -2.0), (1, 2, 1.0), (1, 2, 0.5)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn block_product_matches_dense() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 0, 2.0), (0, 2, -1.0), (2, 0, -1.0), (1, 1, 3.0)]);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = m.mul_dense(&x);
        let expected = m.to_dense() * &x;
        assert!((y - expected).abs().max() < 1e-15);
    }

    #[test]
    fn submatrix_keeps_order() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 2, 1.0), (2, 0, 1.0), (1, 1, 5.0)]);
        let s = m.submatrix(&[2, 0]);
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 0), 1.0);
        assert_eq!(s.nnz(), 2);
    }
}
