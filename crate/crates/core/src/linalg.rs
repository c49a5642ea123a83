//! Sparse symmetric matrices and the linear solvers used for Riesz and Newton systems.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::FemError;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries; each row is sorted by column.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> CsrMatrix {
        triplets.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>, FemError> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                t.push(Triplet::new(i, j, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| FemError::Factorization(format!("{e:?}")))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse Cholesky factorization, reused for every right-hand side.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(SolverKind::Direct),
            "cg" => Ok(SolverKind::Cg),
            other => Err(format!("unknown solver '{other}' (expected direct|cg)")),
        }
    }
}

enum Backend {
    Empty,
    Cholesky(Llt<usize, f64>),
    Cg { inv_diag: Vec<f64>, tol: f64, max_iter: usize },
}

/// A solver for one fixed SPD matrix.
pub struct LinearSolver {
    matrix: CsrMatrix,
    backend: Backend,
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Empty => "empty",
            Backend::Cholesky(_) => "cholesky",
            Backend::Cg { .. } => "cg",
        };
        f.debug_struct("LinearSolver").field("dim", &self.matrix.dim()).field("backend", &kind).finish()
    }
}

impl LinearSolver {
    pub fn new(matrix: CsrMatrix, kind: SolverKind, cg_tol: f64) -> Result<LinearSolver, FemError> {
        let backend = if matrix.dim() == 0 {
            Backend::Empty
        } else {
            match kind {
                SolverKind::Direct => {
                    let a = matrix.to_faer()?;
                    let symbolic = SymbolicLlt::try_new(a.symbolic(), Side::Lower)
                        .map_err(|e| FemError::Factorization(format!("{e:?}")))?;
                    let llt = Llt::try_new_with_symbolic(symbolic, a.as_ref(), Side::Lower)
                        .map_err(|e| FemError::Factorization(format!("{e:?}")))?;
                    Backend::Cholesky(llt)
                }
                SolverKind::Cg => {
                    let inv_diag = matrix.diagonal().iter().map(|d| 1.0 / d).collect();
                    Backend::Cg { inv_diag, tol: cg_tol, max_iter: 20 * matrix.dim() + 100 }
                }
            }
        };
        Ok(LinearSolver { matrix, backend })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, FemError> {
        match &self.backend {
            Backend::Empty => Ok(Vec::new()),
            Backend::Cholesky(llt) => {
                let b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
                let x = llt.solve(&b);
                Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
            }
            Backend::Cg { inv_diag, tol, max_iter } => pcg(&self.matrix, inv_diag, rhs, *tol, *max_iter),
        }
    }
}

fn pcg(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, FemError> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.matvec_into(&p, &mut ap);
        let step = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        if it + 1 == max_iter {
            return Err(FemError::LinearSolve { residual: rnorm / bnorm, iterations: max_iter });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    Err(FemError::LinearSolve { residual: rnorm / bnorm, iterations: max_iter })
}
