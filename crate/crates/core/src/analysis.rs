//! Numerical certificates for the hypotheses of the two-grid theory: zero
//! structure of symbols, projector conditions for grid transfer symbols,
//! spectral growth of Toeplitz sections and coarse bandwidths.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::saddle_mg::LevelHierarchy;
use crate::sparse::SparseMatrix;
use crate::structured::StructuredOperator;
use crate::symbol::{hermitian_eigenvalues, uniform_grid, CMat, TrigPolynomial};

/// Radii of the ray approaches toward a zero.
pub const RADII: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Values of `lambda_min` below this count as zeros.
const ZERO_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ZeroStructureReport {
    pub zeros: Vec<Vec<f64>>,
    /// Ascending index of the eigenvalue function that vanishes.
    pub eigen_index: Option<usize>,
    /// Number of eigenvalues vanishing at the first zero.
    pub multiplicity: usize,
    /// Least-squares log-log slope of `lambda_min` along the axis rays.
    pub order: Option<f64>,
    /// Minimum of `lambda_min` over grid points outside the zero neighbourhoods.
    pub min_away: f64,
}

impl ZeroStructureReport {
    pub fn unique_zero(&self) -> bool {
        self.zeros.len() == 1 && self.multiplicity == 1
    }
}

fn periodic_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

pub fn check_zero_structure(f: &TrigPolynomial, grid_n: usize) -> Result<ZeroStructureReport> {
    if !f.is_hermitian(1e-13) {
        return Err(Error::NotHermitian);
    }
    let d = f.levels();
    let samples: Vec<(Vec<f64>, f64)> = uniform_grid(d, grid_n)
        .map(|t| {
            let l = hermitian_eigenvalues(&f.evaluate(&t))[0];
            (t, l)
        })
        .collect();
    let zeros: Vec<Vec<f64>> = samples
        .iter()
        .filter(|(_, l)| l.abs() < ZERO_TOL)
        .map(|(t, _)| t.clone())
        .collect();
    let radius = 2.5 * 2.0 * PI / grid_n as f64;
    let min_away = samples
        .iter()
        .filter(|(t, _)| zeros.iter().all(|z| periodic_distance(t, z) > radius))
        .map(|(_, l)| *l)
        .fold(f64::INFINITY, f64::min);
    let (mut eigen_index, mut multiplicity, mut order) = (None, 0, None);
    if let Some(z) = zeros.first() {
        let ev = hermitian_eigenvalues(&f.evaluate(z));
        multiplicity = ev.iter().filter(|l| l.abs() < ZERO_TOL).count();
        eigen_index = ev.iter().position(|l| l.abs() < ZERO_TOL);
        let mut slopes = Vec::new();
        for axis in 0..d {
            for sign in [1.0, -1.0] {
                let pts: Vec<(f64, f64)> = RADII
                    .iter()
                    .map(|&t| {
                        let mut theta = z.clone();
                        theta[axis] += sign * t;
                        (t.ln(), hermitian_eigenvalues(&f.evaluate(&theta))[0].abs().ln())
                    })
                    .collect();
                slopes.push(least_squares_slope(&pts));
            }
        }
        order = Some(slopes.iter().sum::<f64>() / slopes.len() as f64);
    }
    Ok(ZeroStructureReport {
        zeros,
        eigen_index,
        multiplicity,
        order,
        min_away,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// The corner set `Omega(theta) = {theta + pi eta, eta in {0,1}^d}`, with
/// `theta` itself first.
pub fn corners(theta: &[f64]) -> Vec<Vec<f64>> {
    let d = theta.len();
    (0..1usize << d)
        .map(|mask| {
            theta
                .iter()
                .enumerate()
                .map(|(j, t)| if mask >> j & 1 == 1 { t + PI } else { *t })
                .collect()
        })
        .collect()
}

/// `sum over Omega(theta) of p(xi)^H p(xi)`.
pub fn corner_gram(p: &TrigPolynomial, theta: &[f64]) -> CMat {
    let mut q = Mat::<C64>::zeros(p.cols(), p.cols());
    for xi in corners(theta) {
        let v = p.evaluate(&xi);
        q += v.adjoint() * &v;
    }
    q
}

/// `s(theta) = p(theta) q(theta)^-1 p(theta)^H`.
pub fn projector_symbol(p: &TrigPolynomial, theta: &[f64]) -> CMat {
    let q = corner_gram(p, theta);
    let v = p.evaluate(theta);
    let x = q.partial_piv_lu().solve(v.adjoint().to_owned());
    &v * x
}

#[derive(Clone, Debug)]
pub struct ProjectorReport {
    /// Minimum over the grid of `lambda_min` of the corner Gram matrix.
    pub positivity_min: f64,
    /// `|s(theta0) q - q|` for the unit eigenvector `q` of the vanishing eigenvalue.
    pub preservation_residual: f64,
    /// Largest sampled `lambda_j(f)^-1 (1 - lambda_j(s))` over the rays.
    pub ratio_max: f64,
    /// The sampled ratio stays finite and does not grow as the radius shrinks.
    pub ratio_bounded: bool,
}

impl ProjectorReport {
    pub fn holds(&self) -> bool {
        self.positivity_min > 0.0 && self.preservation_residual <= 1e-12 && self.ratio_bounded
    }
}

/// Checks positivity, eigenvector preservation and the bounded-ratio
/// condition for the pair `(p, f)` around the zero `theta0` of eigenvalue
/// function `jbar` (ascending, 0-based).
pub fn check_projector(
    p: &TrigPolynomial,
    f: &TrigPolynomial,
    theta0: &[f64],
    jbar: usize,
    grid_n: usize,
) -> Result<ProjectorReport> {
    if p.rows() != f.rows() || p.levels() != f.levels() || theta0.len() != f.levels() {
        return Err(Error::Dimension("projector and symbol are incompatible".into()));
    }
    if jbar >= f.rows() {
        return Err(Error::Dimension(format!("eigenvalue index {jbar} out of range")));
    }
    let positivity_min = uniform_grid(p.levels(), grid_n)
        .map(|t| hermitian_eigenvalues(&corner_gram(p, &t))[0])
        .fold(f64::INFINITY, f64::min);
    if !(positivity_min > 1e-14) {
        return Ok(ProjectorReport {
            positivity_min,
            preservation_residual: f64::INFINITY,
            ratio_max: f64::INFINITY,
            ratio_bounded: false,
        });
    }
    let f0 = f.evaluate(theta0);
    let h = Mat::from_fn(f0.nrows(), f0.ncols(), |i, j| (f0[(i, j)] + f0[(j, i)].conj()) * 0.5);
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let q = eig.U().col(jbar).to_owned();
    let s0 = projector_symbol(p, theta0);
    let sq = &s0 * &q;
    let preservation_residual = (0..q.nrows())
        .map(|i| (sq[i] - q[i]).norm_sqr())
        .sum::<f64>()
        .sqrt();

    let mut ratio_max = 0.0f64;
    let mut ratio_bounded = true;
    for k in 0..8 {
        let phi = PI * k as f64 / 4.0;
        let dir = [phi.cos(), phi.sin()];
        let mut previous: Option<f64> = None;
        for &r in &RADII {
            let theta: Vec<f64> = theta0
                .iter()
                .enumerate()
                .map(|(j, t)| t + r * dir[j.min(1)] * if j < 2 { 1.0 } else { 0.0 })
                .collect();
            let lf = hermitian_eigenvalues(&f.evaluate(&theta))[jbar];
            let ls = hermitian_eigenvalues(&projector_symbol(p, &theta));
            // eigenvalue of s matching jbar from the top, since s is a projector
            let ls = ls[ls.len() - 1 - jbar.min(ls.len() - 1)];
            let ratio = (1.0 - ls).abs() / lf;
            if !ratio.is_finite() {
                ratio_bounded = false;
            }
            if let Some(prev) = previous {
                if ratio > 10.0 * prev + 1e-6 {
                    ratio_bounded = false;
                }
            }
            ratio_max = ratio_max.max(ratio);
            previous = Some(ratio);
        }
    }
    Ok(ProjectorReport {
        positivity_min,
        preservation_residual,
        ratio_max,
        ratio_bounded,
    })
}

/// For a scalar `p`: the smallest, over 8 rays at the smallest radius, of
/// `max(|f_Bx|, |f_By|) / sum over Omega(theta) minus theta of |p(xi)|`.
/// A value away from zero certifies the scalar pressure condition.
pub fn divergence_ratio_min(p: &TrigPolynomial, fbx: &TrigPolynomial, fby: &TrigPolynomial, theta0: &[f64]) -> f64 {
    let r = RADII[RADII.len() - 1];
    (0..8)
        .map(|k| {
            let phi = PI * k as f64 / 4.0;
            let theta = [theta0[0] + r * phi.cos(), theta0[1] + r * phi.sin()];
            let denom: f64 = corners(&theta)
                .iter()
                .skip(1)
                .map(|xi| p.evaluate(xi)[(0, 0)].norm())
                .sum();
            let num = [fbx, fby]
                .iter()
                .map(|f| {
                    let v = f.evaluate(&theta);
                    (0..v.nrows()).map(|i| v[(i, 0)].norm_sqr()).sum::<f64>().sqrt()
                })
                .fold(0.0, f64::max);
            num / denom
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRow {
    pub n: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
}

/// Dense spectra of `T_n(f)` with `n` points per variable.
pub fn growth_report(f: &TrigPolynomial, n_list: &[usize]) -> Result<Vec<GrowthRow>> {
    if !f.is_hermitian(1e-13) {
        return Err(Error::NotHermitian);
    }
    n_list
        .iter()
        .map(|&n| {
            let op = StructuredOperator::toeplitz(f.clone(), &vec![n; f.levels()])?;
            let dense = op.materialize_dense()?;
            let ev = hermitian_eigenvalues(&dense);
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            Ok(GrowthRow {
                n,
                lambda_min: lo,
                lambda_max: hi,
                condition: hi / lo,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BandwidthRow {
    pub level: usize,
    pub n: usize,
    /// Maximum row nonzeros of the assembled matrices.
    pub a_tilde: usize,
    pub b: usize,
    pub chat: usize,
    /// Row nonzeros of the interior stencil: distinct `(column component,
    /// node offset)` pairs seen from rows of one component, maximized over
    /// components. Unlike the counts above these are not clipped when the
    /// stencil is wider than the grid.
    pub a_tilde_stencil: usize,
    pub b_stencil: usize,
    pub chat_stencil: usize,
}

/// Maps a velocity index to `(component, node)`: two directions of `n x n`
/// nodes, each node carrying the four refined-cell unknowns.
fn velocity_site(i: usize, n: usize) -> (usize, usize) {
    let half = 4 * n * n;
    ((i / half) * 4 + i % 4, (i % half) / 4)
}

fn pressure_site(i: usize, _n: usize) -> (usize, usize) {
    (0, i)
}

fn stencil_width(
    m: &SparseMatrix,
    n: usize,
    row_site: fn(usize, usize) -> (usize, usize),
    col_site: fn(usize, usize) -> (usize, usize),
) -> usize {
    let mut per_component: HashMap<usize, HashSet<(usize, i64, i64)>> = HashMap::new();
    for (i, j, v) in m.triplets() {
        if v == 0.0 {
            continue;
        }
        let (ci, ni) = row_site(i, n);
        let (cj, nj) = col_site(j, n);
        let dr = (nj / n) as i64 - (ni / n) as i64;
        let dc = (nj % n) as i64 - (ni % n) as i64;
        per_component.entry(ci).or_default().insert((cj, dr, dc));
    }
    per_component.values().map(|s| s.len()).max().unwrap_or(0)
}

/// Per-level row nonzeros of `A~`, `B` and `C^`, both as assembled and as
/// interior stencils.
pub fn coarse_degree_report(h: &LevelHierarchy) -> Vec<BandwidthRow> {
    h.levels()
        .iter()
        .enumerate()
        .map(|(level, l)| BandwidthRow {
            level,
            n: l.n,
            a_tilde: l.a_tilde.max_row_nnz(),
            b: l.b.max_row_nnz(),
            chat: l.chat.max_row_nnz(),
            a_tilde_stencil: stencil_width(&l.a_tilde, l.n, velocity_site, velocity_site),
            b_stencil: stencil_width(&l.b, l.n, pressure_site, velocity_site),
            chat_stencil: stencil_width(&l.chat, l.n, pressure_site, pressure_site),
        })
        .collect()
}

/// Interior stencils are identical on every level from index 2 on (trivially
/// true for fewer than four levels).
pub fn bandwidths_stable(rows: &[BandwidthRow]) -> bool {
    let key = |r: &BandwidthRow| (r.a_tilde_stencil, r.b_stencil, r.chat_stencil);
    rows.iter().skip(2).all(|r| key(r) == key(&rows[2]))
}
