//! Damped Jacobi and a multiplicative Vanka patch smoother.

use std::collections::HashMap;

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmootherKind {
    Jacobi,
    Vanka,
}

impl std::str::FromStr for SmootherKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jacobi" => Ok(SmootherKind::Jacobi),
            "vanka" => Ok(SmootherKind::Vanka),
            other => Err(Error::Config(format!("unknown smoother `{other}`"))),
        }
    }
}

impl std::fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SmootherKind::Jacobi => "jacobi",
            SmootherKind::Vanka => "vanka",
        })
    }
}

/// `x <- x + omega D^-1 (b - M x)`.
#[derive(Clone, Debug)]
pub struct JacobiSmoother {
    omega: f64,
    inv_diag: Vec<f64>,
}

impl JacobiSmoother {
    pub fn new(m: &SparseMatrix, omega: f64) -> Result<Self> {
        Ok(JacobiSmoother {
            omega,
            inv_diag: inverse_diagonal(m)?,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        JacobiSmoother {
            omega,
            inv_diag: self.inv_diag.clone(),
        }
    }

    pub fn apply(&self, m: &SparseMatrix, b: &[f64], x: &mut [f64], sweeps: usize) {
        jacobi_sweeps(m, &self.inv_diag, self.omega, b, x, sweeps);
    }
}

pub fn inverse_diagonal(m: &SparseMatrix) -> Result<Vec<f64>> {
    m.diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| if d == 0.0 { Err(Error::ZeroDiagonal(i)) } else { Ok(1.0 / d) })
        .collect()
}

pub(crate) fn jacobi_sweeps(m: &SparseMatrix, inv_diag: &[f64], omega: f64, b: &[f64], x: &mut [f64], sweeps: usize) {
    let mut mx = vec![0.0; x.len()];
    for _ in 0..sweeps {
        m.matvec_into(x, &mut mx);
        x.par_iter_mut()
            .with_min_len(4096)
            .zip(mx.par_iter().zip(b.par_iter().zip(inv_diag.par_iter())))
            .for_each(|(xi, (mi, (bi, di)))| *xi += omega * di * (bi - mi));
    }
}

/// `nu` damped Jacobi sweeps on `M x = b` from `x`.
pub fn jacobi_apply(m: &SparseMatrix, omega: f64, b: &[f64], x: &[f64], nu: usize) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() || b.len() != m.nrows() || x.len() != m.nrows() {
        return Err(Error::Dimension("jacobi needs a square matrix and conformable vectors".into()));
    }
    let inv = inverse_diagonal(m)?;
    let mut y = x.to_vec();
    jacobi_sweeps(m, &inv, omega, b, &mut y, nu);
    Ok(y)
}

/// Memory budget for cached local inverses, in bytes.
pub const VANKA_CACHE_BYTES: usize = 1 << 29;

/// One patch per pressure unknown: the velocity unknowns in its row of `B`
/// plus the pressure unknown itself, which comes last.
#[derive(Clone, Debug)]
pub struct VankaSmoother {
    patches: Vec<Vec<usize>>,
    /// Index into `inverses` per patch, or `None` when the local system is
    /// refactorized on every visit.
    which: Vec<Option<usize>>,
    inverses: Vec<Mat<f64>>,
}

impl VankaSmoother {
    /// `m` is the saddle matrix with the first `nu` unknowns being velocity.
    pub fn new(m: &SparseMatrix, nu: usize) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || nu > n {
            return Err(Error::Dimension("vanka needs a square saddle matrix".into()));
        }
        let patches: Vec<Vec<usize>> = (nu..n)
            .map(|p| {
                let (cols, _) = m.row(p);
                let mut idx: Vec<usize> = cols.iter().copied().filter(|&j| j < nu).collect();
                idx.push(p);
                idx
            })
            .collect();
        let mut marker = vec![usize::MAX; n];
        let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut inverses = Vec::new();
        let mut which = Vec::with_capacity(patches.len());
        let mut bytes = 0usize;
        for idx in &patches {
            let local = local_matrix(m, idx, &mut marker);
            let key = local_key(&local);
            if let Some(&k) = seen.get(&key) {
                which.push(Some(k));
                continue;
            }
            let size = idx.len() * idx.len() * 8;
            let inv = invert(&local)?;
            if bytes + size <= VANKA_CACHE_BYTES {
                bytes += size;
                seen.insert(key, inverses.len());
                which.push(Some(inverses.len()));
                inverses.push(inv);
            } else {
                which.push(None);
            }
        }
        Ok(VankaSmoother {
            patches,
            which,
            inverses,
        })
    }

    pub fn patches(&self) -> &[Vec<usize>] {
        &self.patches
    }

    pub fn distinct_factors(&self) -> usize {
        self.inverses.len()
    }

    /// `sweeps` lexicographic multiplicative sweeps with damping 1.
    pub fn apply(&self, m: &SparseMatrix, b: &[f64], x: &mut [f64], sweeps: usize) -> Result<()> {
        self.apply_damped(m, b, x, sweeps, 1.0)
    }

    /// As [`VankaSmoother::apply`], each patch correction scaled by `omega`.
    pub fn apply_damped(&self, m: &SparseMatrix, b: &[f64], x: &mut [f64], sweeps: usize, omega: f64) -> Result<()> {
        if sweeps == 0 {
            return Ok(());
        }
        let mut r = m.residual(b, x);
        let mut marker = vec![usize::MAX; m.nrows()];
        let mut rl = Vec::new();
        for _ in 0..sweeps {
            for (idx, which) in self.patches.iter().zip(&self.which) {
                rl.clear();
                rl.extend(idx.iter().map(|&i| r[i]));
                let delta = match which {
                    Some(k) => dense_matvec(&self.inverses[*k], &rl),
                    None => {
                        let local = local_matrix(m, idx, &mut marker);
                        let rhs = Mat::from_fn(rl.len(), 1, |i, _| rl[i]);
                        let sol = local.partial_piv_lu().solve(&rhs);
                        (0..rl.len()).map(|i| sol[(i, 0)]).collect()
                    }
                };
                for (&i, &d) in idx.iter().zip(&delta) {
                    let d = omega * d;
                    x[i] += d;
                    // the saddle matrix is symmetric, so row i doubles as column i
                    let (cols, vals) = m.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        r[j] -= v * d;
                    }
                }
            }
        }
        Ok(())
    }
}

fn local_matrix(m: &SparseMatrix, idx: &[usize], marker: &mut [usize]) -> Mat<f64> {
    for (a, &i) in idx.iter().enumerate() {
        marker[i] = a;
    }
    let mut local = Mat::zeros(idx.len(), idx.len());
    for (a, &i) in idx.iter().enumerate() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let b = marker[j];
            if b != usize::MAX {
                local[(a, b)] = v;
            }
        }
    }
    for &i in idx {
        marker[i] = usize::MAX;
    }
    local
}

/// Entries quantized relative to the largest one, so that local matrices of
/// a Galerkin operator that agree up to rounding share one inverse.
fn local_key(m: &Mat<f64>) -> Vec<i64> {
    let mut scale = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            scale = scale.max(m[(i, j)].abs());
        }
    }
    let mut key = Vec::with_capacity(m.nrows() * m.ncols() + 2);
    key.push(m.nrows() as i64);
    key.push((scale.to_bits() >> 24) as i64);
    let q = if scale > 0.0 { KEY_RESOLUTION / scale } else { 0.0 };
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            key.push((m[(i, j)] * q).round() as i64);
        }
    }
    key
}

/// Local matrices whose entries agree to this fraction of the largest entry
/// share a factorization.
const KEY_RESOLUTION: f64 = (1u64 << 40) as f64;

fn invert(local: &Mat<f64>) -> Result<Mat<f64>> {
    let k = local.nrows();
    let inv = local.partial_piv_lu().solve(Mat::<f64>::identity(k, k));
    if (0..k).any(|i| (0..k).any(|j| !inv[(i, j)].is_finite())) {
        return Err(Error::Factorization("singular Vanka patch".into()));
    }
    Ok(inv)
}

fn dense_matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += m[(i, j)] * xj;
        }
    }
    y
}
