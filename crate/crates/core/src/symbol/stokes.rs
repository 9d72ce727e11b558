#![allow(non_snake_case)]

//! Generating symbols of the Q1-iso-Q2/Q1 Stokes discretization and of the
//! grid transfer operators built for it.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;

use super::{CMat, TrigPolynomial};
use crate::error::{Error, Result};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Univariate scalar polynomial from `(k, coefficient)` pairs.
fn uni(terms: &[(i64, f64)]) -> TrigPolynomial {
    let ks: Vec<[i64; 1]> = terms.iter().map(|(k, _)| [*k]).collect();
    let t: Vec<(&[i64], C64)> = ks
        .iter()
        .zip(terms)
        .map(|(k, (_, v))| (&k[..], c(*v)))
        .collect();
    TrigPolynomial::scalar(1, &t)
}

fn mat2(coeffs: [[f64; 2]; 2]) -> CMat {
    Mat::from_fn(2, 2, |i, j| c(coeffs[i][j]))
}

fn uni_matrix(terms: &[(i64, [[f64; 2]; 2])]) -> TrigPolynomial {
    TrigPolynomial::from_coefficients(
        1,
        2,
        2,
        terms
            .iter()
            .map(|(k, m)| (super::MultiIndex(vec![*k]), mat2(*m))),
    )
    .expect("shapes are fixed")
}

// -i sin t, i sin t, 1 + 2 cos t, 1 - e^{it}, 5 + cos t, 1 + e^{it}
fn minus_i_sin() -> TrigPolynomial {
    uni(&[(1, -0.5), (-1, 0.5)])
}
fn i_sin() -> TrigPolynomial {
    uni(&[(1, 0.5), (-1, -0.5)])
}
fn one_plus_two_cos() -> TrigPolynomial {
    uni(&[(-1, 1.0), (0, 1.0), (1, 1.0)])
}
fn one_minus_exp() -> TrigPolynomial {
    uni(&[(0, 1.0), (1, -1.0)])
}
fn five_plus_cos() -> TrigPolynomial {
    uni(&[(-1, 0.5), (0, 5.0), (1, 0.5)])
}
fn one_plus_exp() -> TrigPolynomial {
    uni(&[(0, 1.0), (1, 1.0)])
}

/// Swaps the two variables.
const SWAP: [usize; 2] = [1, 0];
/// Exchanges the second and third velocity components.
const MIRROR4: [usize; 4] = [0, 2, 1, 3];

/// The reflection `x <-> y` of the velocity block layout: arguments are
/// swapped and the two mixed nodes of each macro cell trade places.
pub fn reflect_xy(f: &TrigPolynomial) -> TrigPolynomial {
    let g = f.permute_variables(&SWAP);
    let rows: Vec<usize> = if g.rows() == 4 { MIRROR4.to_vec() } else { (0..g.rows()).collect() };
    let cols: Vec<usize> = if g.cols() == 4 { MIRROR4.to_vec() } else { (0..g.cols()).collect() };
    g.permute_components(&rows, &cols)
}

/// `h(t) = [[1, e^{-it} + 1], [e^{it} + 1, 1]]`.
pub fn h() -> TrigPolynomial {
    uni_matrix(&[
        (-1, [[0.0, 1.0], [0.0, 0.0]]),
        (0, [[1.0, 1.0], [1.0, 1.0]]),
        (1, [[0.0, 0.0], [1.0, 0.0]]),
    ])
}

/// `f_A(t1, t2) = 3 I - h(t2) (x) h(t1) / 3`, the velocity Laplacian block.
pub fn stokes_fA() -> TrigPolynomial {
    let hh = h().tensor(&h()).permute_variables(&SWAP);
    TrigPolynomial::identity(2, 4)
        .scale_real(3.0)
        .sub(&hh.scale_real(1.0 / 3.0))
        .expect("shapes match")
}

/// Symbol of the second velocity component's Laplacian, obtained from
/// [`stokes_fA`] by [`reflect_xy`]; it coincides with `f_A`.
pub fn stokes_fAy() -> TrigPolynomial {
    reflect_xy(&stokes_fA())
}

/// The 4x1 divergence symbol in the first direction.
pub fn stokes_fBx() -> TrigPolynomial {
    let parts = [
        minus_i_sin().tensor(&one_plus_two_cos()).scale_real(1.0 / 48.0),
        one_minus_exp().tensor(&five_plus_cos()).scale_real(1.0 / 24.0),
        i_sin().tensor(&one_plus_exp()).scale_real(1.0 / 8.0),
        one_minus_exp().tensor(&one_plus_exp()).scale_real(1.0 / 8.0),
    ];
    TrigPolynomial::vstack(&parts).expect("shapes match")
}

/// The 4x1 divergence symbol in the second direction, `reflect_xy(f_Bx)`.
pub fn stokes_fBy() -> TrigPolynomial {
    reflect_xy(&stokes_fBx())
}

/// `p2(t) = [[1 + e^{-it}, e^{it} + 1], [2 e^{-it}, 2]]`.
pub fn p2() -> TrigPolynomial {
    uni_matrix(&[
        (-1, [[1.0, 0.0], [2.0, 0.0]]),
        (0, [[1.0, 1.0], [0.0, 2.0]]),
        (1, [[0.0, 1.0], [0.0, 0.0]]),
    ])
}

/// `p4(t1, t2) = p2(t1) (x) p2(t2)`.
pub fn p4() -> TrigPolynomial {
    p2().tensor(&p2())
}

/// Velocity prolongation symbol matched to the component layout of
/// [`stokes_fA`]: `q(t2) (x) q(t1)` with `q = J p2 J`, `J` the 2x2 exchange.
///
/// In the layout of `f_A` the first unknown of a node sits on the pressure
/// node and the second half a cell before it, which is the reverse of the
/// order `p2` is written in. With the exchange, the coarse velocity points of
/// the Toeplitz-times-cut operator land on the even refined points, the same
/// lattice the coarse pressure nodes occupy, and the operator is bilinear
/// interpolation there.
pub fn p_velocity() -> TrigPolynomial {
    let q = p2().permute_components(&[1, 0], &[1, 0]);
    q.tensor(&q).permute_variables(&SWAP)
}

/// `(2 + 2 cos t1)(2 + 2 cos t2)`.
pub fn p_bilinear_scalar() -> TrigPolynomial {
    let b = uni(&[(-1, 1.0), (0, 2.0), (1, 1.0)]);
    b.tensor(&b)
}

/// Diagonal entry of the constant coefficient of `f`, checked to be the
/// same for every diagonal position.
pub fn diagonal_constant(f: &TrigPolynomial) -> f64 {
    let c0 = f.coefficient(&vec![0; f.levels()]);
    c0[(0, 0)].re
}

/// `g(alpha) = 2 alpha D^{-1} - alpha^2 D^{-1} f_A D^{-1}` with `D` the
/// diagonal constant coefficient of `f_A`.
pub fn g_z(alpha: f64, fa: &TrigPolynomial) -> TrigPolynomial {
    let d = diagonal_constant(fa);
    TrigPolynomial::identity(2, fa.rows())
        .scale_real(2.0 * alpha / d)
        .sub(&fa.scale_real(alpha * alpha / (d * d)))
        .expect("shapes match")
}

/// Scalar symbol of the transformed pressure block,
/// `f_Bx^H g_x f_Bx + f_By^H g_y f_By`.
pub fn f_chat(alpha: f64) -> TrigPolynomial {
    let part = |fb: &TrigPolynomial, fa: &TrigPolynomial| {
        fb.adjoint()
            .multiply(&g_z(alpha, fa))
            .and_then(|t| t.multiply(fb))
            .expect("shapes match")
    };
    part(&stokes_fBx(), &stokes_fA())
        .add(&part(&stokes_fBy(), &stokes_fAy()))
        .expect("shapes match")
}

/// The Schur complement symbol `f_Bx^H f_A^{-1} f_Bx + f_By^H f_Ay^{-1} f_By`.
/// It is rational, so only pointwise evaluation is offered.
#[derive(Clone, Debug)]
pub struct SchurSymbol {
    fax: TrigPolynomial,
    fay: TrigPolynomial,
    fbx: TrigPolynomial,
    fby: TrigPolynomial,
}

pub fn f_schur() -> SchurSymbol {
    SchurSymbol {
        fax: stokes_fA(),
        fay: stokes_fAy(),
        fbx: stokes_fBx(),
        fby: stokes_fBy(),
    }
}

impl SchurSymbol {
    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (fa, fb) in [(&self.fax, &self.fbx), (&self.fay, &self.fby)] {
            let a = fa.evaluate(theta);
            let lmin = super::hermitian_eigenvalues(&a)[0];
            if lmin.abs() < 1e-13 {
                return Err(Error::SingularPoint(theta[0], theta[1]));
            }
            let b = fb.evaluate(theta);
            let x = a.partial_piv_lu().solve(&b);
            let mut s = C64::new(0.0, 0.0);
            for i in 0..b.nrows() {
                s += b[(i, 0)].conj() * x[(i, 0)];
            }
            total += s.re;
        }
        Ok(total)
    }

    /// Grid maximum over `[0, 2 pi)^2`, skipping singular points; returns
    /// the value and where it is attained.
    pub fn sup(&self, grid_n: usize) -> (f64, [f64; 2]) {
        let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
        for theta in super::uniform_grid(2, grid_n) {
            if let Ok(v) = self.evaluate(&theta) {
                if v > best.0 {
                    best = (v, [theta[0], theta[1]]);
                }
            }
        }
        best
    }
}

/// The 9x9 symbol of the whole saddle-point matrix in node-interleaved order.
pub fn f_global() -> TrigPolynomial {
    let (fa, fay, fbx, fby) = (stokes_fA(), stokes_fAy(), stokes_fBx(), stokes_fBy());
    let (fbxh, fbyh) = (fbx.adjoint(), fby.adjoint());
    TrigPolynomial::block(&[
        vec![Some(&fa), None, Some(&fbx)],
        vec![None, Some(&fay), Some(&fby)],
        vec![Some(&fbxh), Some(&fbyh), None],
    ])
    .expect("block sizes are consistent")
}

/// The four eigenvalue functions of `f_A` in closed form.
pub fn eig_fA_closed_form(theta: &[f64]) -> [C64; 4] {
    let (t1, t2) = (theta[0], theta[1]);
    let e = |x: f64| C64::from_polar(1.0, x);
    let plus = |t: f64| e(t) + e(t / 2.0) + 1.0;
    let minus = |t: f64| e(t) - e(t / 2.0) + 1.0;
    let pre = e(-(t1 + t2) / 2.0) / 3.0;
    [
        c(3.0) - pre * plus(t1) * plus(t2),
        c(3.0) - pre * minus(t1) * minus(t2),
        c(3.0) + pre * minus(t2) * plus(t1),
        c(3.0) + pre * minus(t1) * plus(t2),
    ]
}
