//! Compressed-row sparse matrices with the handful of kernels the multigrid
//! hierarchy needs: products, transposes, block assembly and Kronecker
//! products.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_unstable_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(j, v) in &row {
                if j == last {
                    *data.last_mut().expect("nonempty") += v;
                } else {
                    indices.push(j);
                    data.push(v);
                    last = j;
                }
            }
            indptr.push(indices.len());
        }
        SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        SparseMatrix {
            nrows: d.len(),
            ncols: d.len(),
            indptr: (0..=d.len()).collect(),
            indices: (0..d.len()).collect(),
            data: d.to_vec(),
        }
    }

    pub fn from_dense(m: &Mat<f64>, tol: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].abs() > tol {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.nrows)
            .map(|i| self.indptr[i + 1] - self.indptr[i])
            .max()
            .unwrap_or(0)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            out.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
        }
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        let kernel = |(i, yi): (usize, &mut f64)| {
            let mut s = 0.0;
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[p] * x[self.indices[p]];
            }
            *yi = s;
        };
        if self.nnz() > 1 << 16 {
            y.par_iter_mut().enumerate().for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
    }

    /// `b - A x`.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut r = self.matvec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[p];
                indices[next[j]] = i;
                data[next[j]] = self.data[p];
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    /// Sparse product `A B`, row by row with a dense accumulator.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Dimension(format!(
                "product of {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let chunk = 256;
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.nrows.div_ceil(chunk))
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut acc = vec![0.0; other.ncols];
                let mut mark = vec![usize::MAX; other.ncols];
                let lo = c * chunk;
                let hi = (lo + chunk).min(self.nrows);
                let mut out = Vec::with_capacity(hi - lo);
                for i in lo..hi {
                    let mut cols = Vec::new();
                    for p in self.indptr[i]..self.indptr[i + 1] {
                        let (k, a) = (self.indices[p], self.data[p]);
                        for q in other.indptr[k]..other.indptr[k + 1] {
                            let j = other.indices[q];
                            if mark[j] != i {
                                mark[j] = i;
                                acc[j] = 0.0;
                                cols.push(j);
                            }
                            acc[j] += a * other.data[q];
                        }
                    }
                    cols.sort_unstable();
                    let vals = cols.iter().map(|&j| acc[j]).collect();
                    out.push((cols, vals));
                }
                out
            })
            .collect();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let total: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut indices = Vec::with_capacity(total);
        let mut data = Vec::with_capacity(total);
        for (c, v) in rows {
            indices.extend(c);
            data.extend(v);
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        })
    }

    /// `a A + b B`.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "sum of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut t: Vec<(usize, usize, f64)> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, a * v))
            .collect();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, b * v)));
        Ok(Self::from_triplets(self.nrows, self.ncols, &t))
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn scale(&self, c: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Scales row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.nrows);
        let mut out = self.clone();
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out.data[p] *= d[i];
            }
        }
        out
    }

    /// Scales column `j` by `d[j]`.
    pub fn scale_cols(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for p in 0..out.data.len() {
            out.data[p] *= d[out.indices[p]];
        }
        out
    }

    /// Drops entries with `|v| <= tol * max|v|`.
    pub fn prune(&self, tol: f64) -> SparseMatrix {
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = tol * scale;
        let t: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|e| e.2.abs() > cut)
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn kron(&self, other: &SparseMatrix) -> SparseMatrix {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.triplets() {
            for (k, l, b) in other.triplets() {
                t.push((i * other.nrows + k, j * other.ncols + l, a * b));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, &t)
    }

    /// Assembles a block matrix; `None` blocks are zero. Every block row and
    /// column must contain at least one present block.
    pub fn block(grid: &[Vec<Option<&SparseMatrix>>]) -> Result<SparseMatrix> {
        let brows = grid.len();
        let bcols = grid.first().map_or(0, |r| r.len());
        let mut rsz = vec![None; brows];
        let mut csz = vec![None; bcols];
        for (i, row) in grid.iter().enumerate() {
            if row.len() != bcols {
                return Err(Error::Dimension("ragged block grid".into()));
            }
            for (j, b) in row.iter().enumerate() {
                if let Some(m) = b {
                    for (slot, v) in [(&mut rsz[i], m.nrows), (&mut csz[j], m.ncols)] {
                        match slot {
                            Some(s) if *s != v => {
                                return Err(Error::Dimension("inconsistent block sizes".into()))
                            }
                            _ => *slot = Some(v),
                        }
                    }
                }
            }
        }
        let rsz: Vec<usize> = rsz
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::Dimension("empty block row".into())))
            .collect::<Result<_>>()?;
        let csz: Vec<usize> = csz
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::Dimension("empty block column".into())))
            .collect::<Result<_>>()?;
        let mut t = Vec::new();
        let mut r0 = 0;
        for (i, row) in grid.iter().enumerate() {
            let mut c0 = 0;
            for (j, b) in row.iter().enumerate() {
                if let Some(m) = b {
                    t.extend(m.triplets().into_iter().map(|(a, c, v)| (a + r0, c + c0, v)));
                }
                c0 += csz[j];
            }
            r0 += rsz[i];
        }
        Ok(Self::from_triplets(rsz.iter().sum(), csz.iter().sum(), &t))
    }

    /// Submatrix of rows `r0..r1` and columns `c0..c1`.
    pub fn slice(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in r0..r1 {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j >= c0 && j < c1 {
                    t.push((i - r0, j - c0, x));
                }
            }
        }
        Self::from_triplets(r1 - r0, c1 - c0, &t)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let t: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid triplets")
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.linear_combination(1.0, &t, -1.0)
            .map(|d| d.data.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .unwrap_or(f64::INFINITY)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Coordinate text, one `i j value` line per entry with 1-based indices.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 32);
        let _ = writeln!(out, "% {} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
        }
        out
    }

    pub fn write_coo(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_coo_text().as_bytes())?;
        Ok(())
    }
}

/// Exact sparse triple product `R M P`.
pub fn galerkin_triple(r: &SparseMatrix, m: &SparseMatrix, p: &SparseMatrix) -> Result<SparseMatrix> {
    r.matmul(&m.matmul(p)?)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
