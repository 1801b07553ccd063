//! Small dense linear algebra: LU solves and symmetric eigendecomposition.
//!
//! Systems in this crate are at most |S|x|S| or |A_i|x|A_i|, so direct dense
//! methods are used throughout. Everything is generic over [`Real`] so it
//! works at both precisions.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum LinAlgError {
    #[error("matrix is singular to working precision (pivot {pivot} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("linear solve residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    BadResidual { residual: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("eigendecomposition did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat<S> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Real> DMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DMat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        DMat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DMat<S>) -> DMat<S> {
        assert_eq!(self.cols, other.rows);
        let mut out = DMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == S::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DMat<S> {
        let mut out = DMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    fn max_abs(&self) -> S {
        self.data
            .iter()
            .fold(S::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }
}

impl<S> std::ops::Index<(usize, usize)> for DMat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for DMat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `a x = b` by LU factorization with partial pivoting and verifies
/// the residual against `Real::solve_eps` (relative to the problem scale).
pub fn solve<S: Real>(a: &DMat<S>, b: &[S]) -> Result<Vec<S>, LinAlgError> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(LinAlgError::Shape(format!(
            "solve expects square system, got {}x{} with rhs {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let mut lu = a.clone();
    let mut x: Vec<S> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = lu[(col, col)].abs();
        for r in col + 1..n {
            if lu[(r, col)].abs() > pivot_val {
                pivot_val = lu[(r, col)].abs();
                pivot_row = r;
            }
        }
        if pivot_val <= S::epsilon() * a.max_abs() {
            return Err(LinAlgError::Singular {
                col,
                pivot: pivot_val.to_f64_lossy(),
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            x.swap(col, pivot_row);
            perm.swap(col, pivot_row);
        }
        for r in col + 1..n {
            let factor = lu[(r, col)] / lu[(col, col)];
            lu[(r, col)] = factor;
            for j in col + 1..n {
                let sub = factor * lu[(col, j)];
                lu[(r, j)] -= sub;
            }
            let sub = factor * x[col];
            x[r] -= sub;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[(i, j)] * x[j];
        }
        x[i] = acc / lu[(i, i)];
    }

    // Residual certification: ||a x - b||_inf relative to the data scale.
    let ax = a.matvec(&x);
    let scale = {
        let bx = b
            .iter()
            .fold(S::zero(), |m, &v| if v.abs() > m { v.abs() } else { m });
        a.max_abs().max(bx).max(S::one())
    };
    let residual = ax.iter().zip(b.iter()).fold(S::zero(), |m, (&l, &r)| {
        let d = (l - r).abs();
        if d > m {
            d
        } else {
            m
        }
    });
    let tol = S::solve_eps() * scale;
    if residual > tol {
        return Err(LinAlgError::BadResidual {
            residual: residual.to_f64_lossy(),
            tol: tol.to_f64_lossy(),
        });
    }
    Ok(x)
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as the COLUMNS of
/// the returned matrix, so `a = v diag(w) v^T`.
pub fn sym_eigen<S: Real>(a: &DMat<S>) -> Result<(Vec<S>, DMat<S>), LinAlgError> {
    let n = a.rows;
    if a.cols != n {
        return Err(LinAlgError::Shape(format!(
            "sym_eigen expects a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let mut m = a.clone();
    let mut v = DMat::identity(n);
    if n <= 1 {
        return Ok(((0..n).map(|i| m[(i, i)]).collect(), v));
    }

    let off_norm = |m: &DMat<S>| -> S {
        let mut s = S::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let scale = m.max_abs().max(S::one());
    let target = S::epsilon() * scale * S::c(n as f64);

    const MAX_SWEEPS: usize = 100;
    for _sweep in 0..MAX_SWEEPS {
        if off_norm(&m) <= target {
            let w = (0..n).map(|i| m[(i, i)]).collect();
            return Ok((w, v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= S::epsilon() * scale {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (S::c(2.0) * apq);
                let t = {
                    let sign = if theta >= S::zero() {
                        S::one()
                    } else {
                        -S::one()
                    };
                    sign / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinAlgError::NoConvergence(MAX_SWEEPS))
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via eigendecomposition.
///
/// Eigenvalues with magnitude below `pinv_rcond * max|eigenvalue|` are
/// treated as exact zeros.
pub fn pinv_sym<S: Real>(a: &DMat<S>) -> Result<DMat<S>, LinAlgError> {
    let (w, v) = sym_eigen(a)?;
    let wmax = w
        .iter()
        .fold(S::zero(), |m, &x| if x.abs() > m { x.abs() } else { m });
    let cutoff = S::pinv_rcond() * wmax;
    let n = a.rows;
    let mut winv = DMat::zeros(n, n);
    for i in 0..n {
        if w[i].abs() > cutoff {
            winv[(i, i)] = S::one() / w[i];
        }
    }
    Ok(v.matmul(&winv).matmul(&v.transpose()))
}
