mod common;

use common::*;
use faer::Mat;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use saddle_core::sparse::{galerkin_triple, SparseMatrix};
use saddle_core::stokes::SaddleSystem;
use saddle_core::structured::*;
use saddle_core::symbol::{f_global, CMat, hermitian_eigenvalues, stokes_fA, TrigPolynomial};
use saddle_core::Error;

fn two_plus_two_cos() -> TrigPolynomial {
    TrigPolynomial::scalar(1, &[(&[-1], c(1.0)), (&[0], c(2.0)), (&[1], c(1.0))])
}

fn real_part(m: &CMat) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

#[test]
fn toeplitz_and_circulant_of_two_plus_two_cos() {
    let t = StructuredOperator::toeplitz(two_plus_two_cos(), &[3]).unwrap();
    let expected = [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
    let d = t.materialize_dense().unwrap();
    let cc = StructuredOperator::circulant(two_plus_two_cos(), &[3]).unwrap();
    let dc = cc.materialize_dense().unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(d[(i, j)], c(expected[i][j]));
            assert_eq!(dc[(i, j)], c(if i == j { 2.0 } else { 1.0 }));
        }
    }
}

#[test]
fn single_point_section_is_the_constant_coefficient() {
    let op = StructuredOperator::toeplitz(stokes_fA(), &[1, 1]).unwrap();
    let d = op.materialize_dense().unwrap();
    assert!(max_diff(&d, &stokes_fA().coefficient(&[0, 0])) == 0.0);
}

#[test]
fn identity_symbol_leaves_vectors_unchanged() {
    let op = StructuredOperator::toeplitz(TrigPolynomial::identity(2, 2), &[3, 4]).unwrap();
    let x: Vec<C64> = sample_vector(24, 1).into_iter().map(c).collect();
    assert_eq!(op.matvec(&x).unwrap(), x);
}

#[test]
fn circulant_scales_fourier_vectors() {
    let op = StructuredOperator::circulant(two_plus_two_cos(), &[4]).unwrap();
    let expected = [4.0, 2.0, 0.0, 2.0];
    for (k, &lam) in expected.iter().enumerate() {
        let v: Vec<C64> = (0..4)
            .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j * k) as f64 / 4.0))
            .collect();
        let w = op.matvec(&v).unwrap();
        for (a, b) in w.iter().zip(&v) {
            assert!((a - b * lam).norm() < 1e-13);
        }
    }
    let blocks = circulant_eigenblocks(&two_plus_two_cos(), &[4]).unwrap();
    for (b, lam) in blocks.iter().zip(expected) {
        assert!((b[(0, 0)] - c(lam)).norm() < 1e-14);
    }
}

#[test]
fn matvec_matches_dense_for_fa() {
    for kind in [OperatorKind::Toeplitz, OperatorKind::Circulant] {
        let op = match kind {
            OperatorKind::Toeplitz => StructuredOperator::toeplitz(stokes_fA(), &[8, 8]),
            OperatorKind::Circulant => StructuredOperator::circulant(stokes_fA(), &[8, 8]),
        }
        .unwrap();
        let d = op.materialize_dense().unwrap();
        let x: Vec<C64> = sample_vector(256, 2)
            .iter()
            .zip(sample_vector(256, 3))
            .map(|(a, b)| C64::new(*a, b))
            .collect();
        let y = op.matvec(&x).unwrap();
        let xm = Mat::from_fn(256, 1, |i, _| x[i]);
        let yd = &d * &xm;
        for i in 0..256 {
            assert!((y[i] - yd[(i, 0)]).norm() < 1e-12, "{kind:?} row {i}");
        }
    }
}

#[test]
fn constant_symbol_eigenblocks_repeat() {
    let m = stokes_fA().coefficient(&[0, 0]);
    let f = TrigPolynomial::constant(2, m.clone());
    let blocks = circulant_eigenblocks(&f, &[3, 2]).unwrap();
    assert_eq!(blocks.len(), 6);
    assert!(blocks.iter().all(|b| max_diff(b, &m) == 0.0));
    assert!(matches!(
        circulant_eigenblocks(&TrigPolynomial::zero(2, 2, 3), &[2, 2]),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn circulant_eigenvalues_match_dense_eigensolve() {
    let op = StructuredOperator::circulant(stokes_fA(), &[4, 4]).unwrap();
    let mut from_blocks: Vec<f64> = op.eigenblocks().iter().flat_map(hermitian_eigenvalues).collect();
    from_blocks.sort_by(f64::total_cmp);
    let dense = hermitian_eigenvalues(&op.materialize_dense().unwrap());
    for (a, b) in from_blocks.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn circulant_diagonalization_residual() {
    let n = [8, 8];
    let op = StructuredOperator::circulant(stokes_fA(), &n).unwrap();
    let f = fourier_matrix(&n, 4);
    let blocks = op.eigenblocks();
    let dmat = Mat::from_fn(256, 256, |i, j| if i / 4 == j / 4 { blocks[i / 4][(i % 4, j % 4)] } else { c(0.0) });
    let v = Mat::from_fn(256, 1, |i, _| c(sample_vector(256, 4)[i]));
    let lhs = &op.materialize_dense().unwrap() * &v;
    let rhs = &f * (&dmat * (f.adjoint() * &v));
    assert!(max_diff(&lhs, &rhs) <= 1e-10 * v.norm_l2());
    // unitarity
    let id = f.adjoint() * &f;
    assert!(max_diff(&id, &Mat::identity(256, 256)) < 1e-12);
}

#[test]
fn dense_cap_is_enforced() {
    let op = StructuredOperator::toeplitz(stokes_fA(), &[80, 80]).unwrap();
    assert!(matches!(op.materialize_dense(), Err(Error::SizeCap { .. })));
    let complex = TrigPolynomial::scalar(1, &[(&[1], C64::new(0.0, 1.0))]);
    let op = StructuredOperator::toeplitz(complex, &[4]).unwrap();
    assert!(matches!(op.to_sparse(), Err(Error::ComplexCoefficients)));
}

#[test]
fn toeplitz_sparse_matches_dense() {
    let op = StructuredOperator::toeplitz(stokes_fA(), &[5, 4]).unwrap();
    let s = op.to_sparse().unwrap().to_dense();
    assert!(real_max_diff(&s, &real_part(&op.materialize_dense().unwrap())) < 1e-15);
}

#[test]
fn cutting_examples() {
    let k = CuttingMatrix::new(5);
    assert_eq!(k.k(), 2);
    assert_eq!(k.cut(&['a', 'b', 'c', 'd', 'e']).unwrap(), vec!['b', 'd']);
    let y = [1.5, -2.0];
    assert_eq!(k.cut(&k.embed(&y).unwrap()).unwrap(), y);
    assert_eq!(k.embed(&k.cut(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap()).unwrap(), vec![0.0, 2.0, 0.0, 4.0, 0.0]);

    let b = CuttingMatrix::with_rule(5, CutRule::Boundary);
    assert_eq!(b.cut(&['a', 'b', 'c', 'd', 'e']).unwrap(), vec!['a', 'c', 'e']);
    assert_eq!(CutRule::Interior.coarse_size(6), 3);
    assert_eq!(CutRule::Boundary.coarse_size(257), 129);
    assert!(k.cut(&[1.0; 4]).is_err());
    assert_eq!("boundary".parse::<CutRule>().unwrap(), CutRule::Boundary);
    assert!("middle".parse::<CutRule>().is_err());
}

#[test]
fn cutting_matrix_is_a_column_selection() {
    let k = CuttingMatrix::new(7);
    let m = k.to_sparse();
    assert_eq!(m.shape(), (7, 3));
    let ktk = m.transpose().matmul(&m).unwrap();
    assert!(real_max_diff(&ktk.to_dense(), &Mat::identity(3, 3)) == 0.0);
    let ml = k.multilevel(2, 4);
    assert_eq!(ml.shape(), (7 * 7 * 4, 3 * 3 * 4));
    assert_eq!(ml.nnz(), 36);
}

#[test]
fn block_permutation_examples() {
    let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
    assert_eq!(block_permute(&x, 1).unwrap(), x);
    assert_eq!(block_permute(&x, 3).unwrap(), vec![0.0, 4.0, 8.0, 1.0, 5.0, 9.0, 2.0, 6.0, 10.0, 3.0, 7.0, 11.0]);
    assert!(block_permute(&x, 5).is_err());
    let p = block_permutation_matrix(12, 3).unwrap();
    assert_eq!(p.matvec(&x), block_permute(&x, 3).unwrap());
}

#[test]
fn interleaved_stokes_matrix_is_toeplitz_of_global_symbol() {
    let sys = SaddleSystem::assemble(5).unwrap();
    let q = sys.interleaving_matrix();
    let g = sys.global_matrix();
    let permuted = q.matmul(&g).unwrap().matmul(&q.transpose()).unwrap();
    let t = StructuredOperator::toeplitz(f_global(), &[5, 5]).unwrap().materialize_dense().unwrap();
    assert!(real_max_diff(&permuted.to_dense(), &real_part(&t)) < 1e-12);
}

#[test]
fn galerkin_triple_examples() {
    let m = SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (2, 2, 5.0)]);
    let i = SparseMatrix::identity(3);
    assert!(real_max_diff(&galerkin_triple(&i, &m, &i).unwrap().to_dense(), &m.to_dense()) == 0.0);
    let ones = SparseMatrix::from_triplets(3, 1, &[(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0)]);
    let s = galerkin_triple(&ones.transpose(), &i, &ones).unwrap();
    assert_eq!(s.get(0, 0), 3.0);
}

#[test]
fn galerkin_of_scalar_laplacian_stays_tridiagonal() {
    let lap = TrigPolynomial::scalar(1, &[(&[-1], c(-1.0)), (&[0], c(2.0)), (&[1], c(-1.0))]);
    let a = StructuredOperator::toeplitz(lap, &[9]).unwrap().to_sparse().unwrap();
    let interp = StructuredOperator::toeplitz(two_plus_two_cos(), &[9]).unwrap().to_sparse().unwrap();
    let p = interp.matmul(&CuttingMatrix::new(9).to_sparse()).unwrap();
    let coarse = galerkin_triple(&p.transpose(), &a, &p).unwrap().to_dense();
    // dense oracle: P^T A P computed without the sparse kernels
    let oracle = p.to_dense().transpose() * a.to_dense() * p.to_dense();
    assert!(real_max_diff(&coarse, &oracle) < 1e-13);
    for i in 0..coarse.nrows() {
        for j in 0..coarse.ncols() {
            if i.abs_diff(j) > 1 {
                assert!(coarse[(i, j)].abs() < 1e-13);
            }
        }
    }
}

proptest! {
    #[test]
    fn circulant_product_is_circulant_of_product(f in arb_symbol(2, 2), g in arb_symbol(2, 2)) {
        let n = [8, 8];
        let cf = StructuredOperator::circulant(f.clone(), &n).unwrap().materialize_dense().unwrap();
        let cg = StructuredOperator::circulant(g.clone(), &n).unwrap().materialize_dense().unwrap();
        let cfg = StructuredOperator::circulant(f.multiply(&g).unwrap(), &n).unwrap().materialize_dense().unwrap();
        prop_assert!(max_diff(&(&cf * &cg), &cfg) < 1e-12);
    }

    #[test]
    fn block_permute_roundtrip(x in prop::collection::vec(-1.0f64..1.0, 1..20), s in 1usize..5) {
        let len = x.len() * s;
        let v: Vec<f64> = (0..len).map(|i| x[i % x.len()] + i as f64).collect();
        prop_assert_eq!(block_unpermute(&block_permute(&v, s).unwrap(), s).unwrap(), v);
    }

    #[test]
    fn embed_then_cut_is_identity(n in 3usize..40, seed in 0u8..255) {
        for rule in [CutRule::Interior, CutRule::Boundary] {
            let k = CuttingMatrix::with_rule(n, rule);
            let y = sample_vector(k.k(), seed);
            prop_assert_eq!(k.cut(&k.embed(&y).unwrap()).unwrap(), y);
        }
    }

    #[test]
    fn toeplitz_matvec_matches_dense(f in arb_real_symbol(2, 2), seed in 0u8..255) {
        let op = StructuredOperator::toeplitz(f, &[4, 3]).unwrap();
        let x: Vec<C64> = sample_vector(24, seed).into_iter().map(c).collect();
        let y = op.matvec(&x).unwrap();
        let yd = &op.materialize_dense().unwrap() * Mat::from_fn(24, 1, |i, _| x[i]);
        for i in 0..24 {
            prop_assert!((y[i] - yd[(i, 0)]).norm() < 1e-13);
        }
    }
}
