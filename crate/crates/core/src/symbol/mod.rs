//! Matrix-valued trigonometric polynomials in `d` variables.
//!
//! A polynomial is stored as a finite map from frequency multi-indices to
//! dense complex `s1 x s2` coefficient matrices, and evaluates to
//! `sum_k f_k exp(i <k, theta>)`.

mod stokes;

pub use stokes::*;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

/// Coefficients smaller than this in modulus are dropped after arithmetic.
const DROP_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<i64>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn neg(&self) -> Self {
        MultiIndex(self.0.iter().map(|k| -k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.0.iter().zip(theta).map(|(&k, &t)| k as f64 * t).sum()
    }
}

#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    levels: usize,
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<MultiIndex, CMat>,
}

pub(crate) fn cmat_norm_max(m: &CMat) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

/// Exact equality of shape and coefficients.
impl PartialEq for TrigPolynomial {
    fn eq(&self, other: &Self) -> bool {
        (self.levels, self.rows, self.cols) == (other.levels, other.rows, other.cols)
            && self.coeffs.len() == other.coeffs.len()
            && self.coeffs.iter().zip(&other.coeffs).all(|((k, a), (l, b))| k == l && a == b)
    }
}

pub(crate) fn kron(a: &CMat, b: &CMat) -> CMat {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

fn scale_mat(m: &CMat, c: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c)
}

impl TrigPolynomial {
    pub fn zero(levels: usize, rows: usize, cols: usize) -> Self {
        TrigPolynomial {
            levels,
            rows,
            cols,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(levels: usize, m: CMat) -> Self {
        let mut f = Self::zero(levels, m.nrows(), m.ncols());
        f.insert(MultiIndex::zero(levels), m);
        f
    }

    pub fn identity(levels: usize, s: usize) -> Self {
        Self::constant(levels, Mat::identity(s, s))
    }

    /// Scalar polynomial from `(k, c)` pairs meaning `c exp(i <k, theta>)`.
    pub fn scalar(levels: usize, terms: &[(&[i64], C64)]) -> Self {
        let mut f = Self::zero(levels, 1, 1);
        for (k, c) in terms {
            assert_eq!(k.len(), levels);
            f.accumulate(MultiIndex(k.to_vec()), &Mat::from_fn(1, 1, |_, _| *c));
        }
        f.prune();
        f
    }

    pub fn from_coefficients(
        levels: usize,
        rows: usize,
        cols: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, CMat)>,
    ) -> Result<Self> {
        let mut f = Self::zero(levels, rows, cols);
        for (k, m) in coeffs {
            if k.0.len() != levels || m.nrows() != rows || m.ncols() != cols {
                return Err(Error::Dimension(format!(
                    "coefficient {:?} of shape {}x{} in a {levels}-level {rows}x{cols} polynomial",
                    k.0,
                    m.nrows(),
                    m.ncols()
                )));
            }
            f.accumulate(k, &m);
        }
        f.prune();
        Ok(f)
    }

    fn insert(&mut self, k: MultiIndex, m: CMat) {
        self.coeffs.insert(k, m);
    }

    fn accumulate(&mut self, k: MultiIndex, m: &CMat) {
        match self.coeffs.get_mut(&k) {
            Some(acc) => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        acc[(i, j)] += m[(i, j)];
                    }
                }
            }
            None => {
                self.coeffs.insert(k, m.clone());
            }
        }
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, m| cmat_norm_max(m) > DROP_TOL);
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &CMat)> {
        self.coeffs.iter()
    }

    /// Fourier coefficient at `k`, zero outside the support.
    pub fn coefficient(&self, k: &[i64]) -> CMat {
        self.coeffs
            .get(&MultiIndex(k.to_vec()))
            .cloned()
            .unwrap_or_else(|| Mat::zeros(self.rows, self.cols))
    }

    /// Per-dimension degree, the largest `|k_j|` in the support.
    pub fn degree(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.levels];
        for k in self.coeffs.keys() {
            for (d, &kj) in deg.iter_mut().zip(&k.0) {
                *d = (*d).max(kj.unsigned_abs() as usize);
            }
        }
        deg
    }

    /// True when every coefficient is real to within `tol`.
    pub fn has_real_coefficients(&self, tol: f64) -> bool {
        self.coeffs.values().all(|m| {
            (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im.abs() <= tol))
        })
    }

    /// Coefficient-wise test `f_{-k} = f_k^H`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for (k, m) in &self.coeffs {
            let other = self.coefficient(&k.neg().0);
            for j in 0..self.cols {
                for i in 0..self.rows {
                    if (m[(i, j)] - other[(j, i)].conj()).norm() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn evaluate(&self, theta: &[f64]) -> CMat {
        assert_eq!(theta.len(), self.levels, "theta has the wrong number of variables");
        let mut out = Mat::<C64>::zeros(self.rows, self.cols);
        for (k, m) in &self.coeffs {
            let phase = C64::from_polar(1.0, k.dot(theta));
            for j in 0..self.cols {
                for i in 0..self.rows {
                    out[(i, j)] += m[(i, j)] * phase;
                }
            }
        }
        out
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.levels != other.levels || self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "({}, {}x{}) vs ({}, {}x{})",
                self.levels, self.rows, self.cols, other.levels, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (k, m) in &other.coeffs {
            out.accumulate(k.clone(), m);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::zero(self.levels, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            out.insert(k.clone(), scale_mat(m, c));
        }
        out.prune();
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `f^H`, with coefficients `(f_{-k})^H`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.levels, self.cols, self.rows);
        for (k, m) in &self.coeffs {
            out.insert(k.neg(), m.adjoint().to_owned());
        }
        out
    }

    /// Pointwise matrix product, computed as a coefficient convolution.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.levels != other.levels || self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zero(self.levels, self.rows, other.cols);
        for (ka, ma) in &self.coeffs {
            for (kb, mb) in &other.coeffs {
                out.accumulate(ka.add(kb), &(ma * mb));
            }
        }
        out.prune();
        Ok(out)
    }

    /// Kronecker product with frequency indices concatenated, so that
    /// `tensor(f, g)(t, u) = f(t) (x) g(u)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Self::zero(
            self.levels + other.levels,
            self.rows * other.rows,
            self.cols * other.cols,
        );
        for (ka, ma) in &self.coeffs {
            for (kb, mb) in &other.coeffs {
                let mut k = ka.0.clone();
                k.extend_from_slice(&kb.0);
                out.accumulate(MultiIndex(k), &kron(ma, mb));
            }
        }
        out.prune();
        out
    }

    /// Reorders the variables: the new variable `j` is the old variable `perm[j]`.
    pub fn permute_variables(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.levels);
        let mut out = Self::zero(self.levels, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            let nk = perm.iter().map(|&p| k.0[p]).collect();
            out.insert(MultiIndex(nk), m.clone());
        }
        out
    }

    /// `theta -> f(-theta)`.
    pub fn reflect(&self) -> Self {
        let mut out = Self::zero(self.levels, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            out.insert(k.neg(), m.clone());
        }
        out
    }

    /// Reorders rows and columns: entry `(i, j)` of the result is entry
    /// `(row_perm[i], col_perm[j])` of `self`.
    pub fn permute_components(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        assert_eq!(row_perm.len(), self.rows);
        assert_eq!(col_perm.len(), self.cols);
        let mut out = Self::zero(self.levels, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            let pm = Mat::from_fn(self.rows, self.cols, |i, j| m[(row_perm[i], col_perm[j])]);
            out.insert(k.clone(), pm);
        }
        out
    }

    /// Stacks polynomials with equal column counts on top of each other.
    pub fn vstack(parts: &[TrigPolynomial]) -> Result<Self> {
        let grid: Vec<Vec<Option<&TrigPolynomial>>> = parts.iter().map(|p| vec![Some(p)]).collect();
        Self::block(&grid)
    }

    /// Assembles a block polynomial from a grid of optional blocks. Every
    /// block row and block column needs at least one present block so that
    /// its size is known.
    pub fn block(grid: &[Vec<Option<&TrigPolynomial>>]) -> Result<Self> {
        let brows = grid.len();
        let bcols = grid.first().map_or(0, |r| r.len());
        if brows == 0 || bcols == 0 || grid.iter().any(|r| r.len() != bcols) {
            return Err(Error::Dimension("ragged or empty block grid".into()));
        }
        let at = |i: usize, j: usize| grid[i][j];
        let mut row_sizes = vec![None; brows];
        let mut col_sizes = vec![None; bcols];
        let mut levels = None;
        for i in 0..brows {
            for j in 0..bcols {
                if let Some(p) = at(i, j) {
                    for (slot, v) in [(&mut row_sizes[i], p.rows), (&mut col_sizes[j], p.cols)] {
                        match slot {
                            Some(s) if *s != v => {
                                return Err(Error::Dimension("inconsistent block sizes".into()))
                            }
                            _ => *slot = Some(v),
                        }
                    }
                    if *levels.get_or_insert(p.levels) != p.levels {
                        return Err(Error::Dimension("mixed variable counts".into()));
                    }
                }
            }
        }
        let row_sizes: Vec<usize> = row_sizes
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::Dimension("empty block row".into())))
            .collect::<Result<_>>()?;
        let col_sizes: Vec<usize> = col_sizes
            .into_iter()
            .map(|s| s.ok_or_else(|| Error::Dimension("empty block column".into())))
            .collect::<Result<_>>()?;
        let levels = levels.unwrap_or(0);
        let rows: usize = row_sizes.iter().sum();
        let cols: usize = col_sizes.iter().sum();
        let mut out = Self::zero(levels, rows, cols);
        let mut r0 = 0;
        for i in 0..brows {
            let mut c0 = 0;
            for j in 0..bcols {
                if let Some(p) = at(i, j) {
                    for (k, m) in &p.coeffs {
                        let mut big = Mat::<C64>::zeros(rows, cols);
                        for jj in 0..m.ncols() {
                            for ii in 0..m.nrows() {
                                big[(r0 + ii, c0 + jj)] = m[(ii, jj)];
                            }
                        }
                        out.accumulate(k.clone(), &big);
                    }
                }
                c0 += col_sizes[j];
            }
            r0 += row_sizes[i];
        }
        out.prune();
        Ok(out)
    }

    /// Eigenvalues of the Hermitian matrix `f(theta)`, ascending.
    pub fn eig_at(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if !self.is_hermitian(1e-12) {
            return Err(Error::NotHermitian);
        }
        Ok(hermitian_eigenvalues(&self.evaluate(theta)))
    }

    /// Largest spectral norm of `f(theta)` over the uniform `grid_n^d` grid.
    pub fn sup_norm(&self, grid_n: usize) -> f64 {
        let mut best = 0.0f64;
        for theta in uniform_grid(self.levels, grid_n) {
            best = best.max(spectral_norm(&self.evaluate(&theta)));
        }
        best
    }

    /// Plain-text form: header `d s1 s2`, then one line `k.. row col re im`
    /// per nonzero coefficient entry (0-based row and column).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.levels, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let z = m[(i, j)];
                    if z.norm() > DROP_TOL {
                        for kj in &k.0 {
                            let _ = write!(out, "{kj} ");
                        }
                        let _ = writeln!(out, "{i} {j} {:e} {:e}", z.re, z.im);
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hl + 1,
                msg: format!("{e}"),
            })?;
        if head.len() != 3 {
            return Err(Error::Parse {
                line: hl + 1,
                msg: "header must be `d s1 s2`".into(),
            });
        }
        let (d, s1, s2) = (head[0], head[1], head[2]);
        let mut f = Self::zero(d, s1, s2);
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::Parse {
                line: ln + 1,
                msg: msg.to_string(),
            };
            if toks.len() != d + 4 {
                return Err(bad("wrong number of fields"));
            }
            let k: Vec<i64> = toks[..d]
                .iter()
                .map(|t| t.parse().map_err(|_| bad("bad frequency index")))
                .collect::<Result<_>>()?;
            let i: usize = toks[d].parse().map_err(|_| bad("bad row"))?;
            let j: usize = toks[d + 1].parse().map_err(|_| bad("bad column"))?;
            let re: f64 = toks[d + 2].parse().map_err(|_| bad("bad real part"))?;
            let im: f64 = toks[d + 3].parse().map_err(|_| bad("bad imaginary part"))?;
            if i >= s1 || j >= s2 {
                return Err(bad("entry outside the block"));
            }
            let mut m = Mat::<C64>::zeros(s1, s2);
            m[(i, j)] = C64::new(re, im);
            f.accumulate(MultiIndex(k), &m);
        }
        f.prune();
        Ok(f)
    }
}

/// Points `2 pi j / grid_n` in every variable, first variable slowest.
pub fn uniform_grid(levels: usize, grid_n: usize) -> impl Iterator<Item = Vec<f64>> {
    let total = grid_n.pow(levels as u32);
    (0..total).map(move |mut idx| {
        let mut theta = vec![0.0; levels];
        for t in theta.iter_mut().rev() {
            *t = 2.0 * std::f64::consts::PI * (idx % grid_n) as f64 / grid_n as f64;
            idx /= grid_n;
        }
        theta
    })
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    // symmetrize against rounding before the solver sees it
    let h = Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("Hermitian eigensolver failed");
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 1 || m.ncols() == 1 {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                s += m[(i, j)].norm_sqr();
            }
        }
        return s.sqrt();
    }
    m.singular_values()
        .expect("singular value solver failed")
        .into_iter()
        .fold(0.0, f64::max)
}
