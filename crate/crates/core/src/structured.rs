//! Multilevel block Toeplitz and circulant operators generated by a symbol,
//! plus the cutting matrices and block permutations used around them.
//!
//! A multi-index `(i1, .., id)` is flattened lexicographically with `i1`
//! slowest, and the block component is the fastest index, so entry
//! `(i, a)` lives at `flat(i) * s + a`.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::symbol::{CMat, TrigPolynomial};

/// Default limit on the order of a dense materialization.
pub const DENSE_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Toeplitz,
    Circulant,
}

#[derive(Clone, Debug)]
pub struct StructuredOperator {
    kind: OperatorKind,
    symbol: TrigPolynomial,
    n: Vec<usize>,
}

fn flat(idx: &[usize], n: &[usize]) -> usize {
    idx.iter().zip(n).fold(0, |acc, (&i, &m)| acc * m + i)
}

fn unflat(mut f: usize, n: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; n.len()];
    for (slot, &m) in idx.iter_mut().zip(n).rev() {
        *slot = f % m;
        f /= m;
    }
    idx
}

impl StructuredOperator {
    pub fn toeplitz(symbol: TrigPolynomial, n: &[usize]) -> Result<Self> {
        Self::new(OperatorKind::Toeplitz, symbol, n)
    }

    pub fn circulant(symbol: TrigPolynomial, n: &[usize]) -> Result<Self> {
        Self::new(OperatorKind::Circulant, symbol, n)
    }

    fn new(kind: OperatorKind, symbol: TrigPolynomial, n: &[usize]) -> Result<Self> {
        if n.len() != symbol.levels() || n.iter().any(|&m| m == 0) {
            return Err(Error::Dimension(format!(
                "partial dimensions {:?} for a {}-level symbol",
                n,
                symbol.levels()
            )));
        }
        Ok(StructuredOperator {
            kind,
            symbol,
            n: n.to_vec(),
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn symbol(&self) -> &TrigPolynomial {
        &self.symbol
    }

    pub fn partial_dims(&self) -> &[usize] {
        &self.n
    }

    pub fn points(&self) -> usize {
        self.n.iter().product()
    }

    pub fn shape(&self) -> (usize, usize) {
        let p = self.points();
        (self.symbol.rows() * p, self.symbol.cols() * p)
    }

    /// Visits every nonzero block as `(row block, column block, coefficient)`.
    fn for_each_block(&self, mut visit: impl FnMut(usize, usize, &CMat)) {
        let d = self.n.len();
        let p = self.points();
        for (k, m) in self.symbol.coefficients() {
            for fi in 0..p {
                let i = unflat(fi, &self.n);
                let mut j = vec![0usize; d];
                let mut inside = true;
                for l in 0..d {
                    let diff = i[l] as i64 - k.0[l];
                    let nl = self.n[l] as i64;
                    match self.kind {
                        OperatorKind::Toeplitz => {
                            if diff < 0 || diff >= nl {
                                inside = false;
                                break;
                            }
                            j[l] = diff as usize;
                        }
                        OperatorKind::Circulant => j[l] = diff.rem_euclid(nl) as usize,
                    }
                }
                if inside {
                    visit(fi, flat(&j, &self.n), m);
                }
            }
        }
    }

    /// Real sparse matrix; fails when the symbol has complex coefficients.
    pub fn to_sparse(&self) -> Result<SparseMatrix> {
        if !self.symbol.has_real_coefficients(1e-14) {
            return Err(Error::ComplexCoefficients);
        }
        let (s1, s2) = (self.symbol.rows(), self.symbol.cols());
        let (r, c) = self.shape();
        let mut t = Vec::new();
        self.for_each_block(|bi, bj, m| {
            for a in 0..s1 {
                for b in 0..s2 {
                    let v = m[(a, b)].re;
                    if v != 0.0 {
                        t.push((bi * s1 + a, bj * s2 + b, v));
                    }
                }
            }
        });
        Ok(SparseMatrix::from_triplets(r, c, &t))
    }

    pub fn materialize_dense(&self) -> Result<CMat> {
        self.materialize_dense_capped(DENSE_CAP)
    }

    pub fn materialize_dense_capped(&self, cap: usize) -> Result<CMat> {
        let (r, c) = self.shape();
        if r.max(c) > cap {
            return Err(Error::SizeCap {
                size: r.max(c),
                cap,
            });
        }
        let (s1, s2) = (self.symbol.rows(), self.symbol.cols());
        let mut out = Mat::<C64>::zeros(r, c);
        self.for_each_block(|bi, bj, m| {
            for a in 0..s1 {
                for b in 0..s2 {
                    out[(bi * s1 + a, bj * s2 + b)] += m[(a, b)];
                }
            }
        });
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let (r, c) = self.shape();
        if x.len() != c {
            return Err(Error::Dimension(format!("vector of length {} for {}x{}", x.len(), r, c)));
        }
        match self.kind {
            OperatorKind::Toeplitz => {
                let (s1, s2) = (self.symbol.rows(), self.symbol.cols());
                let mut y = vec![C64::new(0.0, 0.0); r];
                self.for_each_block(|bi, bj, m| {
                    for a in 0..s1 {
                        let mut acc = C64::new(0.0, 0.0);
                        for b in 0..s2 {
                            acc += m[(a, b)] * x[bj * s2 + b];
                        }
                        y[bi * s1 + a] += acc;
                    }
                });
                Ok(y)
            }
            OperatorKind::Circulant => Ok(self.circulant_matvec(x)),
        }
    }

    /// Transform path: `C v = (F (x) I) D (F (x) I)^H v`.
    fn circulant_matvec(&self, x: &[C64]) -> Vec<C64> {
        let (s1, s2) = (self.symbol.rows(), self.symbol.cols());
        let p = self.points();
        let mut planner = FftPlanner::new();
        // analysis: hat_b[k] = sum_j x_b[j] exp(+i theta_k . j)
        let mut hat: Vec<Vec<C64>> = (0..s2)
            .map(|b| {
                let mut v: Vec<C64> = (0..p).map(|j| x[j * s2 + b]).collect();
                transform(&mut v, &self.n, &mut planner, true);
                v
            })
            .collect();
        let blocks = self.eigenblocks();
        let mut out_hat = vec![vec![C64::new(0.0, 0.0); p]; s1];
        for k in 0..p {
            for a in 0..s1 {
                let mut acc = C64::new(0.0, 0.0);
                for (b, hb) in hat.iter().enumerate() {
                    acc += blocks[k][(a, b)] * hb[k];
                }
                out_hat[a][k] = acc;
            }
        }
        hat.clear();
        let mut y = vec![C64::new(0.0, 0.0); s1 * p];
        let scale = 1.0 / p as f64;
        for (a, v) in out_hat.iter_mut().enumerate() {
            transform(v, &self.n, &mut planner, false);
            for (i, z) in v.iter().enumerate() {
                y[i * s1 + a] = z * scale;
            }
        }
        y
    }

    /// Symbol evaluations at the grid `theta_k = 2 pi k / n`, lexicographic in `k`.
    pub fn eigenblocks(&self) -> Vec<CMat> {
        grid_points(&self.n)
            .map(|theta| self.symbol.evaluate(&theta))
            .collect()
    }
}

fn grid_points(n: &[usize]) -> impl Iterator<Item = Vec<f64>> + '_ {
    let p: usize = n.iter().product();
    (0..p).map(move |f| {
        unflat(f, n)
            .iter()
            .zip(n)
            .map(|(&k, &m)| 2.0 * std::f64::consts::PI * k as f64 / m as f64)
            .collect()
    })
}

/// Multidimensional unnormalized DFT in place. `inverse` selects the
/// `exp(+i ...)` kernel.
fn transform(v: &mut [C64], n: &[usize], planner: &mut FftPlanner<f64>, inverse: bool) {
    let total = v.len();
    let mut stride = total;
    for &m in n {
        stride /= m;
        let fft: Arc<dyn Fft<f64>> = if inverse {
            planner.plan_fft_inverse(m)
        } else {
            planner.plan_fft_forward(m)
        };
        let mut line = vec![C64::new(0.0, 0.0); m];
        let outer = total / (m * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * m * stride + s;
                for (t, z) in line.iter_mut().enumerate() {
                    *z = v[base + t * stride];
                }
                fft.process(&mut line);
                for (t, z) in line.iter().enumerate() {
                    v[base + t * stride] = *z;
                }
            }
        }
    }
}

/// Block evaluations of `f` at the circulant grid of `n`, lexicographic with
/// the first index slowest.
pub fn circulant_eigenblocks(f: &TrigPolynomial, n: &[usize]) -> Result<Vec<CMat>> {
    if f.rows() != f.cols() {
        return Err(Error::Dimension("eigenblocks need a square symbol".into()));
    }
    Ok(StructuredOperator::circulant(f.clone(), n)?.eigenblocks())
}

/// Unitary Fourier matrix `F (x) I_s` whose columns are the eigenvectors of
/// every circulant matrix of block size `s` on the grid `n`.
pub fn fourier_matrix(n: &[usize], s: usize) -> CMat {
    let p: usize = n.iter().product();
    let thetas: Vec<Vec<f64>> = grid_points(n).collect();
    let norm = 1.0 / (p as f64).sqrt();
    Mat::from_fn(p * s, p * s, |r, c| {
        if r % s != c % s {
            return C64::new(0.0, 0.0);
        }
        let j = unflat(r / s, n);
        let phase: f64 = thetas[c / s]
            .iter()
            .zip(&j)
            .map(|(t, &jj)| t * jj as f64)
            .sum();
        C64::from_polar(norm, -phase)
    })
}

/// Which source positions a cutting matrix keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutRule {
    /// 1-based positions `2, 4, .., 2k` with `k = (n - 1) / 2` for odd `n`
    /// and `k = n / 2` for even `n`.
    Interior,
    /// 1-based positions `1, 3, 5, ..`; `k = (n + 1) / 2` for odd `n` and
    /// `k = n / 2` for even `n`. An odd `n = 2^t + 1` stays of that form.
    Boundary,
}

impl CutRule {
    pub fn coarse_size(self, n: usize) -> usize {
        match self {
            CutRule::Interior if n % 2 == 1 => (n - 1) / 2,
            CutRule::Boundary if n % 2 == 1 => (n + 1) / 2,
            _ => n / 2,
        }
    }
}

impl std::str::FromStr for CutRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(CutRule::Interior),
            "boundary" => Ok(CutRule::Boundary),
            other => Err(Error::Config(format!("unknown cutting rule `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CuttingMatrix {
    n: usize,
    k: usize,
    rule: CutRule,
}

impl CuttingMatrix {
    pub fn new(n: usize) -> Self {
        Self::with_rule(n, CutRule::Interior)
    }

    pub fn with_rule(n: usize, rule: CutRule) -> Self {
        CuttingMatrix {
            n,
            k: rule.coarse_size(n),
            rule,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rule(&self) -> CutRule {
        self.rule
    }

    /// 0-based source index kept as target `j`.
    pub fn source(&self, j: usize) -> usize {
        match self.rule {
            CutRule::Interior => 2 * j + 1,
            CutRule::Boundary => 2 * j,
        }
    }

    pub fn cut<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("cut expects {} entries, got {}", self.n, x.len())));
        }
        Ok((0..self.k).map(|j| x[self.source(j)]).collect())
    }

    pub fn embed<T: Copy + Default>(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.k {
            return Err(Error::Dimension(format!("embed expects {} entries, got {}", self.k, y.len())));
        }
        let mut x = vec![T::default(); self.n];
        for (j, &v) in y.iter().enumerate() {
            x[self.source(j)] = v;
        }
        Ok(x)
    }

    /// The `n x k` 0/1 matrix.
    pub fn to_sparse(&self) -> SparseMatrix {
        let t: Vec<_> = (0..self.k).map(|j| (self.source(j), j, 1.0)).collect();
        SparseMatrix::from_triplets(self.n, self.k, &t)
    }

    /// `K (x) .. (x) K (x) I_s` with `levels` copies of `K`.
    pub fn multilevel(&self, levels: usize, s: usize) -> SparseMatrix {
        let mut m = SparseMatrix::identity(1);
        for _ in 0..levels {
            m = m.kron(&self.to_sparse());
        }
        m.kron(&SparseMatrix::identity(s))
    }
}

/// Block-separated to interleaved: entry `l * m + k` moves to `l + s * k`.
pub fn block_permute<T: Copy + Default>(x: &[T], s: usize) -> Result<Vec<T>> {
    if s == 0 || x.len() % s != 0 {
        return Err(Error::Dimension(format!("length {} is not divisible by {s}", x.len())));
    }
    let m = x.len() / s;
    let mut out = vec![T::default(); x.len()];
    for l in 0..s {
        for k in 0..m {
            out[l + s * k] = x[l * m + k];
        }
    }
    Ok(out)
}

/// Inverse of [`block_permute`].
pub fn block_unpermute<T: Copy + Default>(x: &[T], s: usize) -> Result<Vec<T>> {
    if s == 0 || x.len() % s != 0 {
        return Err(Error::Dimension(format!("length {} is not divisible by {s}", x.len())));
    }
    let m = x.len() / s;
    let mut out = vec![T::default(); x.len()];
    for l in 0..s {
        for k in 0..m {
            out[l * m + k] = x[l + s * k];
        }
    }
    Ok(out)
}

/// The permutation matrix `Pi` with `Pi x = block_permute(x, s)`.
pub fn block_permutation_matrix(len: usize, s: usize) -> Result<SparseMatrix> {
    let idx: Vec<usize> = (0..len).collect();
    let perm = block_permute(&idx, s)?;
    let t: Vec<_> = perm.iter().enumerate().map(|(r, &c)| (r, c, 1.0)).collect();
    Ok(SparseMatrix::from_triplets(len, len, &t))
}
