//! Multigrid for the transformed saddle-point system `L A U`.

mod cycle;
mod hierarchy;

pub use cycle::{
    solve, solve_with, spectral_radius, tgm_iteration_matrix, two_grid_matrix, ConvergenceReport,
    CycleConfig, CycleKind, Solver, DIVERGENCE_LIMIT,
};
pub use hierarchy::{HierarchyConfig, LevelData, LevelHierarchy};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::structured::{CutRule, CuttingMatrix, StructuredOperator};
use crate::symbol::{
    diagonal_constant, f_chat, f_schur, p_bilinear_scalar, p_velocity, stokes_fA, stokes_fAy,
    TrigPolynomial,
};

/// Grid used for every sampled symbol norm.
pub const SYMBOL_GRID: usize = 64;

/// `2 / max_j ||f||_inf / a0_jj(f)` over the given Hermitian symbols.
pub fn alpha_bound(symbols: &[&TrigPolynomial]) -> Result<f64> {
    Ok(2.0 / max_norm_ratio(symbols)?)
}

fn max_norm_ratio(symbols: &[&TrigPolynomial]) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in symbols {
        if !f.is_hermitian(1e-13) {
            return Err(Error::NotHermitian);
        }
        let norm = f.sup_norm(SYMBOL_GRID);
        let c0 = f.coefficient(&vec![0; f.levels()]);
        for j in 0..f.rows() {
            let a = c0[(j, j)].re;
            if a <= 0.0 {
                return Err(Error::NonPositiveDiagonal(a));
            }
            worst = worst.max(norm / a);
        }
    }
    Ok(worst)
}

/// Midpoint of the admissible range for the Stokes symbols, `2/3`.
pub fn default_alpha() -> f64 {
    alpha_bound(&[&stokes_fA(), &stokes_fAy()]).expect("Stokes symbols are admissible") / 2.0
}

/// The two terms of the Jacobi damping bound for the Stokes finest level.
pub fn omega_bound_terms(alpha: f64) -> Result<(f64, f64)> {
    let ratio = max_norm_ratio(&[&stokes_fA(), &stokes_fAy()])?;
    let first = 2.0 * alpha - alpha * alpha * ratio;
    let chat0 = diagonal_constant(&f_chat(alpha));
    let (schur_sup, _) = f_schur().sup(SYMBOL_GRID);
    Ok((first, chat0 / schur_sup))
}

/// `2 min{first, second}` from [`omega_bound_terms`]; `11/12` at `alpha = 2/3`.
pub fn omega_bound(alpha: f64) -> Result<f64> {
    let (a, b) = omega_bound_terms(alpha)?;
    Ok(2.0 * a.min(b))
}

/// Unit-triangular factors of the transform together with the blocks they
/// need. `L = [[I, 0], [a B D^-1, -I]]`, `U = [[I, -a D^-1 B^T], [0, I]]`.
#[derive(Clone, Debug)]
pub struct LauTransform {
    alpha: f64,
    dinv: Vec<f64>,
    b: SparseMatrix,
    bt: SparseMatrix,
}

impl LauTransform {
    pub fn new(a_tilde: &SparseMatrix, b: &SparseMatrix, alpha: f64) -> Result<Self> {
        let dinv = a_tilde
            .diagonal()
            .iter()
            .enumerate()
            .map(|(i, &d)| if d == 0.0 { Err(Error::ZeroDiagonal(i)) } else { Ok(1.0 / d) })
            .collect::<Result<Vec<_>>>()?;
        Ok(LauTransform {
            alpha,
            dinv,
            b: b.clone(),
            bt: b.transpose(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dinv(&self) -> &[f64] {
        &self.dinv
    }

    fn nu(&self) -> usize {
        self.dinv.len()
    }

    pub fn apply_l(&self, x: &[f64]) -> Vec<f64> {
        let nu = self.nu();
        let (u, p) = x.split_at(nu);
        let du: Vec<f64> = u.iter().zip(&self.dinv).map(|(a, d)| a * d).collect();
        let bdu = self.b.matvec(&du);
        let mut out = u.to_vec();
        out.extend(p.iter().zip(bdu).map(|(pi, v)| self.alpha * v - pi));
        out
    }

    pub fn apply_u(&self, x: &[f64]) -> Vec<f64> {
        let nu = self.nu();
        let (u, p) = x.split_at(nu);
        let btp = self.bt.matvec(p);
        let mut out: Vec<f64> = u
            .iter()
            .zip(btp.iter().zip(&self.dinv))
            .map(|(a, (v, d))| a - self.alpha * d * v)
            .collect();
        out.extend_from_slice(p);
        out
    }

    pub fn l_matrix(&self) -> SparseMatrix {
        let bd = self.b.scale_cols(&self.dinv).scale(self.alpha);
        let i = SparseMatrix::identity(self.nu());
        let mi = SparseMatrix::identity(self.b.nrows()).scale(-1.0);
        SparseMatrix::block(&[vec![Some(&i), None], vec![Some(&bd), Some(&mi)]])
            .expect("conformable")
    }

    pub fn u_matrix(&self) -> SparseMatrix {
        let dbt = self.bt.scale_rows(&self.dinv).scale(-self.alpha);
        let i = SparseMatrix::identity(self.nu());
        let ip = SparseMatrix::identity(self.b.nrows());
        SparseMatrix::block(&[vec![Some(&i), Some(&dbt)], vec![None, Some(&ip)]])
            .expect("conformable")
    }
}

/// `C + B (2 a D^-1 - a^2 D^-1 A D^-1) B^T` with `D = diag(A)`.
pub fn build_chat(a_tilde: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, alpha: f64) -> Result<SparseMatrix> {
    let lau = LauTransform::new(a_tilde, b, alpha)?;
    let d = lau.dinv();
    let bt = b.transpose();
    let dbt = bt.scale_rows(d);
    let first = b.matmul(&dbt)?.scale(2.0 * alpha);
    let adbt = a_tilde.matmul(&dbt)?;
    let second = dbt.transpose().matmul(&adbt)?.scale(alpha * alpha);
    c.add(&first.linear_combination(1.0, &second, -1.0)?)
}

/// `A^ = [[A~, (I - a A~ D^-1) B^T], [-B (I - a D^-1 A~), C^]]`.
pub fn build_ahat(a_tilde: &SparseMatrix, b: &SparseMatrix, chat: &SparseMatrix, alpha: f64) -> Result<SparseMatrix> {
    let lau = LauTransform::new(a_tilde, b, alpha)?;
    let bt = b.transpose();
    let dbt = bt.scale_rows(lau.dinv());
    let upper = bt.linear_combination(1.0, &a_tilde.matmul(&dbt)?, -alpha)?;
    let lower = upper.transpose().scale(-1.0);
    SparseMatrix::block(&[vec![Some(a_tilde), Some(&upper)], vec![Some(&lower), Some(chat)]])
}

/// Velocity and pressure prolongations for a level of partial dimension `n`:
/// `P_A = diag(T(p_v) (K (x) K (x) I_4), same)` and `P_C = T(p_c) (K (x) K)`.
pub fn build_prolongations(n: usize, rule: CutRule) -> Result<(SparseMatrix, SparseMatrix)> {
    let k = CuttingMatrix::with_rule(n, rule);
    if n < 3 || k.k() == 0 {
        return Err(Error::TooSmall(n));
    }
    let tv = StructuredOperator::toeplitz(p_velocity(), &[n, n])?.to_sparse()?;
    let pv = tv.matmul(&k.multilevel(2, 4))?;
    let pa = SparseMatrix::block(&[vec![Some(&pv), None], vec![None, Some(&pv)]])?;
    let tc = StructuredOperator::toeplitz(p_bilinear_scalar(), &[n, n])?.to_sparse()?;
    let pc = tc.matmul(&k.multilevel(2, 1))?;
    Ok((pa, pc))
}

/// `lambda_max(D^-1 A)` by 20 power steps from a fixed start vector, using
/// the `D`-weighted Rayleigh quotient.
pub fn jacobi_lambda_max(a: &SparseMatrix) -> Result<f64> {
    let d = a.diagonal();
    if let Some(i) = d.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositiveDiagonal(d[i]));
    }
    let mut v: Vec<f64> = (0..a.nrows())
        .map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5)
        .collect();
    let mut lambda = 0.0;
    for _ in 0..20 {
        let av = a.matvec(&v);
        let num: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        let den: f64 = v.iter().zip(&d).map(|(x, y)| x * x * y).sum();
        lambda = num / den;
        v = av.iter().zip(&d).map(|(x, y)| x / y).collect();
        let s = crate::sparse::norm2(&v);
        v.iter_mut().for_each(|x| *x /= s);
    }
    Ok(lambda)
}
