#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use proptest::test_runner::{RngAlgorithm, TestRng};
use saddle_core::symbol::{CMat, MultiIndex, TrigPolynomial};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn max_abs(a: &CMat) -> f64 {
    max_diff(a, &Mat::zeros(a.nrows(), a.ncols()))
}

pub fn real_max_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

/// Bivariate `rows x cols` symbol with frequencies in `{-1, 0, 1}^2`.
pub fn symbol_from(rows: usize, cols: usize, entries: &[(i64, i64, f64, f64)]) -> TrigPolynomial {
    let per = rows * cols;
    let coeffs = entries.chunks(per).map(|chunk| {
        let (k1, k2) = (chunk[0].0, chunk[0].1);
        let m = Mat::from_fn(rows, cols, |i, j| {
            let e = chunk[(i * cols + j) % chunk.len()];
            C64::new(e.2, e.3)
        });
        (MultiIndex(vec![k1, k2]), m)
    });
    TrigPolynomial::from_coefficients(2, rows, cols, coeffs).unwrap()
}

pub fn arb_symbol(rows: usize, cols: usize) -> impl Strategy<Value = TrigPolynomial> {
    let entry = (-1i64..=1, -1i64..=1, -1.0f64..1.0, -1.0f64..1.0);
    prop::collection::vec(entry, rows * cols..=3 * rows * cols).prop_map(move |v| symbol_from(rows, cols, &v))
}

pub fn arb_real_symbol(rows: usize, cols: usize) -> impl Strategy<Value = TrigPolynomial> {
    let entry = (-1i64..=1, -1i64..=1, -1.0f64..1.0);
    prop::collection::vec(entry, rows * cols..=3 * rows * cols)
        .prop_map(move |v| symbol_from(rows, cols, &v.iter().map(|&(a, b, x)| (a, b, x, 0.0)).collect::<Vec<_>>()))
}

pub fn arb_theta() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 2)
}

fn rng(seed: u8) -> TestRng {
    TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32])
}

/// Reproducible pseudo-random points in `[0, 2 pi)^2`.
pub fn sample_points(count: usize, seed: u8) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| (0..2).map(|_| r.random_range(0.0..2.0 * std::f64::consts::PI)).collect())
        .collect()
}

pub fn sample_vector(len: usize, seed: u8) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.random_range(-0.5..0.5)).collect()
}
