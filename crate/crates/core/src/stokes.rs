//! The Q1-iso-Q2/Q1 Stokes saddle-point system generated from its symbols.
//!
//! Native unknown ordering is `[u_x, u_y, p]`, where each velocity field
//! stores its four components interleaved per grid node (`node * 4 + c`)
//! and the pressure holds one value per node.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::structured::{block_permute, block_unpermute, StructuredOperator};
use crate::symbol::{stokes_fA, stokes_fAy, stokes_fBx, stokes_fBy};

/// Velocity components per node and field.
pub const S_A: usize = 4;
/// Pressure components per node.
pub const S_C: usize = 1;

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    n: usize,
    ax: StructuredOperator,
    ay: StructuredOperator,
    bx: StructuredOperator,
    by: StructuredOperator,
    a_tilde: SparseMatrix,
    b: SparseMatrix,
    bt: SparseMatrix,
    c: SparseMatrix,
}

impl SaddleSystem {
    pub fn assemble(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooSmall(n));
        }
        let dims = [n, n];
        let ax = StructuredOperator::toeplitz(stokes_fA(), &dims)?;
        let ay = StructuredOperator::toeplitz(stokes_fAy(), &dims)?;
        let bx = StructuredOperator::toeplitz(stokes_fBx(), &dims)?;
        let by = StructuredOperator::toeplitz(stokes_fBy(), &dims)?;
        let (axs, ays) = (ax.to_sparse()?, ay.to_sparse()?);
        let a_tilde = SparseMatrix::block(&[vec![Some(&axs), None], vec![None, Some(&ays)]])?;
        let (bxs, bys) = (bx.to_sparse()?, by.to_sparse()?);
        let bt = SparseMatrix::block(&[vec![Some(&bxs)], vec![Some(&bys)]])?;
        let b = bt.transpose();
        let c = SparseMatrix::zeros(n * n, n * n);
        Ok(SaddleSystem {
            n,
            ax,
            ay,
            bx,
            by,
            a_tilde,
            b,
            bt,
            c,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn velocity_len(&self) -> usize {
        2 * S_A * self.n * self.n
    }

    pub fn pressure_len(&self) -> usize {
        S_C * self.n * self.n
    }

    pub fn len(&self) -> usize {
        self.velocity_len() + self.pressure_len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ax(&self) -> &StructuredOperator {
        &self.ax
    }

    pub fn ay(&self) -> &StructuredOperator {
        &self.ay
    }

    pub fn bx(&self) -> &StructuredOperator {
        &self.bx
    }

    pub fn by(&self) -> &StructuredOperator {
        &self.by
    }

    /// `A~ = diag(A_x, A_y)`.
    pub fn a_tilde(&self) -> &SparseMatrix {
        &self.a_tilde
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn bt(&self) -> &SparseMatrix {
        &self.bt
    }

    pub fn c(&self) -> &SparseMatrix {
        &self.c
    }

    /// `[[A~, B^T], [B, -C]]` in native ordering.
    pub fn global_matrix(&self) -> SparseMatrix {
        let mc = self.c.scale(-1.0);
        SparseMatrix::block(&[
            vec![Some(&self.a_tilde), Some(&self.bt)],
            vec![Some(&self.b), Some(&mc)],
        ])
        .expect("blocks are conformable")
    }

    pub fn apply_global(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.len() {
            return Err(Error::Dimension(format!(
                "vector of length {} for a system of size {}",
                x.len(),
                self.len()
            )));
        }
        let nu = self.velocity_len();
        let (u, p) = x.split_at(nu);
        let mut top = self.a_tilde.matvec(u);
        for (t, v) in top.iter_mut().zip(self.bt.matvec(p)) {
            *t += v;
        }
        let mut bottom = self.b.matvec(u);
        for (t, v) in bottom.iter_mut().zip(self.c.matvec(p)) {
            *t -= v;
        }
        top.extend(bottom);
        Ok(top)
    }

    /// Samples `sin 4t + cos 6t + 1` at `9 n^2` equispaced points of `[0, pi]`
    /// into native ordering and returns `(x_true, A x_true)`.
    pub fn build_rhs(&self) -> (Vec<f64>, Vec<f64>) {
        let x = sample_solution(self.len());
        let b = self.apply_global(&x).expect("length matches");
        (x, b)
    }

    /// Native ordering to nine separated blocks of `n^2` entries each.
    pub fn to_separated(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let half = S_A * self.n * self.n;
        let mut out = block_unpermute(&x[..half], S_A)?;
        out.extend(block_unpermute(&x[half..2 * half], S_A)?);
        out.extend_from_slice(&x[2 * half..]);
        Ok(out)
    }

    pub fn from_separated(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let half = S_A * self.n * self.n;
        let mut out = block_permute(&x[..half], S_A)?;
        out.extend(block_permute(&x[half..2 * half], S_A)?);
        out.extend_from_slice(&x[2 * half..]);
        Ok(out)
    }

    /// Native ordering to all nine components interleaved per node, the
    /// ordering in which the global matrix is `T_n(f_global)`.
    pub fn to_interleaved(&self, x: &[f64]) -> Result<Vec<f64>> {
        block_permute(&self.to_separated(x)?, 2 * S_A + S_C)
    }

    pub fn from_interleaved(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.from_separated(&block_unpermute(x, 2 * S_A + S_C)?)
    }

    /// Permutation matrix `Q` with `Q x = to_interleaved(x)`.
    pub fn interleaving_matrix(&self) -> SparseMatrix {
        let idx: Vec<f64> = (0..self.len()).map(|i| i as f64).collect();
        let perm = self.to_interleaved(&idx).expect("length matches");
        let t: Vec<_> = perm
            .iter()
            .enumerate()
            .map(|(r, &c)| (r, c as usize, 1.0))
            .collect();
        SparseMatrix::from_triplets(self.len(), self.len(), &t)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.len() {
            Ok(())
        } else {
            Err(Error::Dimension(format!("expected {} entries, got {}", self.len(), x.len())))
        }
    }
}

/// `sin 4t + cos 6t + 1` at `len` equispaced points of `[0, pi]`, endpoints
/// included.
pub fn sample_solution(len: usize) -> Vec<f64> {
    let h = if len > 1 { std::f64::consts::PI / (len - 1) as f64 } else { 0.0 };
    (0..len)
        .map(|i| {
            let t = i as f64 * h;
            (4.0 * t).sin() + (6.0 * t).cos() + 1.0
        })
        .collect()
}
