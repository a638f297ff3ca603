//! Block LOBPCG for `B x = lambda A x` with `A` symmetric positive definite.
//!
//! Each step runs Rayleigh-Ritz on `[X, W, P]`, where `W` is the Jacobi
//! preconditioned residual and `P` the previous search direction. `W` and `P`
//! are `A`-orthogonalized against `X` and against each other (SVQB), so the
//! reduced problem is a standard symmetric one and `span(X)` is never
//! truncated. That keeps the Ritz values monotone.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{symmetric_eigen, EigOptions, EigResult, EigenError, Pencil};

/// Relative eigenvalue cutoff below which SVQB drops a direction.
const DROP_TOL: f64 = 1e-12;
/// Exact products are recomputed this often to stop the implicit updates of
/// `AX` and `BX` from drifting.
const REFRESH_EVERY: usize = 10;

struct Block {
    x: DMatrix<f64>,
    ax: DMatrix<f64>,
    bx: DMatrix<f64>,
}

impl Block {
    fn mul(&self, c: &DMatrix<f64>) -> Block {
        Block {
            x: &self.x * c,
            ax: &self.ax * c,
            bx: &self.bx * c,
        }
    }

    fn ncols(&self) -> usize {
        self.x.ncols()
    }

    fn hcat(&self, other: &Block) -> Block {
        let cat = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
            let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
            m.columns_mut(0, a.ncols()).copy_from(a);
            m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
            m
        };
        Block {
            x: cat(&self.x, &other.x),
            ax: cat(&self.ax, &other.ax),
            bx: cat(&self.bx, &other.bx),
        }
    }

    fn columns(&self, start: usize, count: usize) -> Block {
        Block {
            x: self.x.columns(start, count).into_owned(),
            ax: self.ax.columns(start, count).into_owned(),
            bx: self.bx.columns(start, count).into_owned(),
        }
    }

    fn select(&self, cols: &[usize]) -> Block {
        Block {
            x: self.x.select_columns(cols),
            ax: self.ax.select_columns(cols),
            bx: self.bx.select_columns(cols),
        }
    }

    fn refresh(&mut self, pencil: &Pencil) {
        self.ax = pencil.apply_a(&self.x);
        self.bx = pencil.apply_b(&self.x);
    }
}

fn gram(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let g = a.transpose() * b;
    (&g + g.transpose()) * 0.5
}

/// `A`-orthonormalizes the columns of `q` with SVQB, dropping directions
/// that are numerically dependent.
fn svqb(q: &Block, norm_a: f64) -> Result<Block, EigenError> {
    let g = gram(&q.x, &q.ax);
    let mut keep = Vec::new();
    let mut scale = Vec::new();
    let gmax = g.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    for i in 0..g.nrows() {
        let d = g[(i, i)];
        if d < -1e-10 * norm_a * q.x.column(i).norm_squared() {
            return Err(EigenError::IndefiniteMassMatrix);
        }
        if d > f64::EPSILON * gmax && d > 0.0 {
            keep.push(i);
            scale.push(1.0 / d.sqrt());
        }
    }
    if keep.is_empty() {
        return Ok(q.columns(0, 0));
    }
    let q = q.select(&keep);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(scale));
    let gs = &d * gram(&q.x, &q.ax) * &d;
    let (vals, vecs) = symmetric_eigen(&gs);
    let vmax = vals.last().copied().unwrap_or(0.0);
    if vals[0] < -1e-8 * vmax {
        return Err(EigenError::IndefiniteMassMatrix);
    }
    let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > DROP_TOL * vmax).collect();
    let t = DMatrix::from_fn(vecs.nrows(), kept.len(), |r, c| {
        vecs[(r, kept[c])] / vals[kept[c]].sqrt()
    });
    Ok(q.mul(&(d * t)))
}

/// Removes the `A`-components of `q` along the `A`-orthonormal block `x`.
fn project_out(q: &Block, x: &Block) -> Block {
    let c = x.x.transpose() * &q.ax;
    Block {
        x: &q.x - &x.x * &c,
        ax: &q.ax - &x.ax * &c,
        bx: &q.bx - &x.bx * &c,
    }
}

/// Rayleigh-Ritz on an `A`-orthonormal basis; returns Ritz values and
/// coefficient vectors, ascending.
fn rayleigh_ritz(s: &Block) -> (Vec<f64>, DMatrix<f64>) {
    symmetric_eigen(&gram(&s.x, &s.bx))
}

pub(super) fn lobpcg(pencil: &Pencil, m: usize, opts: &EigOptions) -> Result<EigResult, EigenError> {
    let n = pencil.dim();
    let bs = (m + opts.guard).min(n);

    let norm_b = pencil.b().inf_norm().max(f64::MIN_POSITIVE);
    let norm_a = pencil.a().map_or(1.0, |a| a.inf_norm());

    let diag_b = pencil.b().diagonal();
    let mean_abs = diag_b.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    let shift = if mean_abs > 0.0 { 1e-2 * mean_abs } else { 1.0 };
    let precond: Vec<f64> = diag_b.iter().map(|d| 1.0 / (d.abs() + shift)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x0 = DMatrix::zeros(n, bs);
    for c in 0..bs {
        for r in 0..n {
            x0[(r, c)] = rng.random::<f64>() - 0.5;
        }
    }
    let mut start = Block {
        ax: pencil.apply_a(&x0),
        bx: pencil.apply_b(&x0),
        x: x0,
    };
    start = svqb(&start, norm_a)?;
    if start.ncols() < bs {
        return Err(EigenError::IndefiniteMassMatrix);
    }
    let (mut theta, z) = rayleigh_ritz(&start);
    let mut x = start.mul(&z);
    let mut p: Option<Block> = None;
    let mut history = Vec::new();
    let mut iterations = 0;

    let relative = |res: f64, lambda: f64, xnorm: f64| res / ((norm_b + lambda.abs() * norm_a) * xnorm);

    for iter in 0..=opts.max_iter {
        iterations = iter;
        history.push(theta[..m].to_vec());

        let mut r = x.bx.clone();
        for j in 0..bs {
            let mut col = r.column_mut(j);
            col.axpy(-theta[j], &x.ax.column(j), 1.0);
        }
        let rel: Vec<f64> = (0..bs)
            .map(|j| relative(r.column(j).norm(), theta[j], x.x.column(j).norm()))
            .collect();

        if rel[..m].iter().all(|&v| v <= opts.tol) {
            // confirm with exact products before accepting
            x.refresh(pencil);
            let exact = pencil.residuals(&theta[..m], &x.x.columns(0, m).into_owned());
            let ok = (0..m).all(|j| relative(exact[j], theta[j], x.x.column(j).norm()) <= opts.tol);
            if ok {
                return Ok(finish(x, &theta, m, exact, iter, history));
            }
        }
        if iter == opts.max_iter {
            break;
        }

        let active: Vec<usize> = (0..bs).filter(|&j| j >= m || rel[j] > opts.tol).collect();
        let mut w = DMatrix::zeros(n, active.len());
        for (c, &j) in active.iter().enumerate() {
            for i in 0..n {
                w[(i, c)] = precond[i] * r[(i, j)];
            }
        }
        let mut q = Block {
            ax: pencil.apply_a(&w),
            bx: pencil.apply_b(&w),
            x: w,
        };
        if let Some(prev) = &p {
            q = q.hcat(prev);
        }
        for _ in 0..2 {
            q = project_out(&q, &x);
            q = svqb(&q, norm_a)?;
        }
        if q.ncols() == 0 {
            break;
        }

        let s = x.hcat(&q);
        let (vals, coef) = rayleigh_ritz(&s);
        let zb = coef.columns(0, bs).into_owned();
        let zq = zb.rows(bs, q.ncols()).into_owned();
        x = s.mul(&zb);
        p = Some(q.mul(&zq));
        theta = vals[..bs].to_vec();

        if (iter + 1) % REFRESH_EVERY == 0 {
            x.refresh(pencil);
            if let Some(pb) = p.as_mut() {
                pb.refresh(pencil);
            }
            // restore A-orthonormality lost to rounding
            let xo = svqb(&x, norm_a)?;
            if xo.ncols() == bs {
                let (t, z) = rayleigh_ritz(&xo);
                x = xo.mul(&z);
                theta = t;
            }
        }
    }

    x.refresh(pencil);
    let exact = pencil.residuals(&theta[..m], &x.x.columns(0, m).into_owned());
    Err(EigenError::NotConverged(Box::new(finish(
        x, &theta, m, exact, iterations, history,
    ))))
}

fn finish(
    x: Block,
    theta: &[f64],
    m: usize,
    residuals: Vec<f64>,
    iterations: usize,
    ritz_history: Vec<Vec<f64>>,
) -> EigResult {
    EigResult {
        eigenvalues: theta[..m].to_vec(),
        eigenvectors: x.x.columns(0, m).into_owned(),
        residuals,
        iterations,
        next_eigenvalue: theta.get(m).copied(),
        ritz_history,
        dense: false,
    }
}
