//! Linear solves for M-matrix systems `(D - N) x = b` arising from restricted
//! generators and first-step equations.
//!
//! Small systems are inverted densely through LU; large ones are solved column
//! by column with Jacobi-preconditioned BiCGSTAB. Every solution carries its
//! max-norm residual.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Systems up to this many unknowns are inverted densely.
pub const DENSE_LIMIT: usize = 500;

/// Max-norm residual every solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Reciprocal 1-norm condition number below which a dense system is treated
/// as singular.
pub const RCOND_MIN: f64 = 1e-13;

/// Square sparse matrix stored by rows, diagonal included.
#[derive(Debug, Clone)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Self {
        SparseRows { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row.iter().map(|&(j, v)| v * x[j]).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().filter(|&&(j, _)| j == i).map(|&(_, v)| v).sum())
            .collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `max_i |(A x - b)_i|`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n()];
        self.mul(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// States that cannot reach any leaking state along nonzero off-diagonal
/// entries. For a diagonally dominant M-matrix whose leaking rows are exactly
/// the strictly dominant ones, the matrix is singular iff this is nonempty.
pub fn trapped_states(matrix: &SparseRows, leaking: &[bool]) -> Vec<usize> {
    let n = matrix.n();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, v) in matrix.row(i) {
            if j != i && v != 0.0 {
                reverse[j].push(i);
            }
        }
    }
    let mut ok = leaking.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| leaking[i]).collect();
    while let Some(j) = queue.pop_front() {
        for &i in &reverse[j] {
            if !ok[i] {
                ok[i] = true;
                queue.push_back(i);
            }
        }
    }
    (0..n).filter(|&i| !ok[i]).collect()
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub residual: f64,
}

/// A factored (dense) or matrix-free (sparse) solver for one system matrix.
#[derive(Debug, Clone)]
pub enum Solver {
    Dense {
        matrix: SparseRows,
        inverse: DMatrix<f64>,
        /// `max |A A^{-1} - I|`.
        residual: f64,
    },
    Sparse {
        matrix: SparseRows,
        precond: Vec<f64>,
    },
}

impl Solver {
    pub fn new(matrix: SparseRows, dense_limit: usize) -> Result<Self> {
        if matrix.n() <= dense_limit {
            Self::dense(matrix)
        } else {
            let precond = matrix
                .diagonal()
                .into_iter()
                .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect();
            Ok(Solver::Sparse { matrix, precond })
        }
    }

    fn dense(matrix: SparseRows) -> Result<Self> {
        let a = matrix.to_dense();
        let n = a.nrows();
        let mut inverse = a
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::TabooGreenDiverges("singular system matrix".into()))?;
        let rcond = 1.0 / (norm1(&a) * norm1(&inverse));
        if !(rcond >= RCOND_MIN) {
            return Err(Error::TabooGreenDiverges(format!(
                "reciprocal condition estimate {rcond:e}"
            )));
        }
        let identity = DMatrix::<f64>::identity(n, n);
        let mut residual = max_abs(&(&a * &inverse - &identity));
        if residual > RESIDUAL_TOL {
            // one step of iterative refinement
            let correction = &inverse * (&identity - &a * &inverse);
            inverse += correction;
            residual = max_abs(&(&a * &inverse - &identity));
        }
        if residual > RESIDUAL_TOL {
            return Err(Error::Residual {
                residual,
                tolerance: RESIDUAL_TOL,
            });
        }
        Ok(Solver::Dense {
            matrix,
            inverse,
            residual,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix().n()
    }

    pub fn matrix(&self) -> &SparseRows {
        match self {
            Solver::Dense { matrix, .. } | Solver::Sparse { matrix, .. } => matrix,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, Solver::Dense { .. })
    }

    /// Column `j` of the inverse.
    pub fn inverse_column(&self, j: usize) -> Result<Solution> {
        match self {
            Solver::Dense {
                inverse, residual, ..
            } => Ok(Solution {
                x: inverse.column(j).iter().copied().collect(),
                residual: *residual,
            }),
            Solver::Sparse { .. } => {
                let mut b = vec![0.0; self.n()];
                b[j] = 1.0;
                self.solve(&b)
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Solution> {
        match self {
            Solver::Dense {
                matrix, inverse, ..
            } => {
                let x: Vec<f64> = (0..matrix.n())
                    .map(|i| inverse.row(i).iter().zip(b).map(|(a, b)| a * b).sum())
                    .collect();
                let residual = matrix.residual(&x, b);
                check_residual(residual)?;
                Ok(Solution { x, residual })
            }
            Solver::Sparse { matrix, precond } => bicgstab(matrix, precond, b),
        }
    }
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

fn check_residual(residual: f64) -> Result<()> {
    if residual <= RESIDUAL_TOL {
        Ok(())
    } else {
        Err(Error::Residual {
            residual,
            tolerance: RESIDUAL_TOL,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Right-preconditioned BiCGSTAB with restarts on breakdown.
fn bicgstab(a: &SparseRows, precond: &[f64], b: &[f64]) -> Result<Solution> {
    let n = a.n();
    let target = 1e-13 * max_norm(b).max(1.0);
    let max_iter = 20 * n + 2000;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut iter = 0;

    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];

    'restart: for _ in 0..8 {
        a.mul(&x, &mut t);
        for i in 0..n {
            r[i] = b[i] - t[i];
        }
        if max_norm(&r) <= target {
            break;
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);

        while iter < max_iter {
            iter += 1;
            let rho_next = dot(&r_hat, &r);
            if rho_next == 0.0 || !rho_next.is_finite() {
                continue 'restart;
            }
            let beta = (rho_next / rho) * (alpha / omega);
            rho = rho_next;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                y[i] = precond[i] * p[i];
            }
            a.mul(&y, &mut v);
            let denom = dot(&r_hat, &v);
            if denom == 0.0 || !denom.is_finite() {
                continue 'restart;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if max_norm(&s) <= target {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                continue 'restart;
            }
            for i in 0..n {
                z[i] = precond[i] * s[i];
            }
            a.mul(&z, &mut t);
            let tt = dot(&t, &t);
            if tt == 0.0 || !tt.is_finite() {
                continue 'restart;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            if max_norm(&r) <= target {
                continue 'restart;
            }
            if omega == 0.0 {
                continue 'restart;
            }
        }
        break;
    }

    let residual = a.residual(&x, b);
    if !residual.is_finite() || residual > RESIDUAL_TOL {
        return Err(Error::TabooGreenDiverges(format!(
            "iterative solve stalled at residual {residual:e} after {iter} iterations"
        )));
    }
    Ok(Solution { x, residual })
}
