use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::Mat;

use super::{build_ahat, build_chat, build_prolongations, jacobi_lambda_max, LauTransform};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::stokes::SaddleSystem;
use crate::structured::CutRule;

#[derive(Clone, Debug)]
pub struct HierarchyConfig {
    /// Transform parameter at the finest level; coarser levels derive theirs
    /// from the assembled operator.
    pub alpha: f64,
    pub rule: CutRule,
    pub min_coarse_n: usize,
    /// Upper bound on the number of levels, `None` for as deep as possible.
    pub max_levels: Option<usize>,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            alpha: 2.0 / 3.0,
            rule: CutRule::Boundary,
            min_coarse_n: 3,
            max_levels: None,
        }
    }
}

/// One level of the 3-step coarsening. The level matrix is
/// `[[A~, B^T], [B, -C]]` and the iteration runs on its transform `A^`.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub n: usize,
    pub a_tilde: SparseMatrix,
    pub b: SparseMatrix,
    pub c: SparseMatrix,
    pub chat: SparseMatrix,
    pub ahat: SparseMatrix,
    pub alpha: f64,
    pub lau: LauTransform,
    /// Prolongations to this level from the next coarser one.
    pub p_a: Option<SparseMatrix>,
    pub p_c: Option<SparseMatrix>,
}

impl LevelData {
    fn new(n: usize, a_tilde: SparseMatrix, b: SparseMatrix, c: SparseMatrix, alpha: f64) -> Result<Self> {
        let chat = build_chat(&a_tilde, &b, &c, alpha)?;
        let ahat = build_ahat(&a_tilde, &b, &chat, alpha)?;
        let lau = LauTransform::new(&a_tilde, &b, alpha)?;
        Ok(LevelData {
            n,
            a_tilde,
            b,
            c,
            chat,
            ahat,
            alpha,
            lau,
            p_a: None,
            p_c: None,
        })
    }

    pub fn velocity_len(&self) -> usize {
        self.a_tilde.nrows()
    }

    pub fn len(&self) -> usize {
        self.a_tilde.nrows() + self.b.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `[[A~, B^T], [B, -C]]`.
    pub fn saddle_matrix(&self) -> SparseMatrix {
        let bt = self.b.transpose();
        let mc = self.c.scale(-1.0);
        SparseMatrix::block(&[vec![Some(&self.a_tilde), Some(&bt)], vec![Some(&self.b), Some(&mc)]])
            .expect("conformable")
    }

    /// `diag(P_A, P_C)`.
    pub fn prolongation(&self) -> Option<SparseMatrix> {
        match (&self.p_a, &self.p_c) {
            (Some(a), Some(c)) => {
                Some(SparseMatrix::block(&[vec![Some(a), None], vec![None, Some(c)]]).expect("conformable"))
            }
            _ => None,
        }
    }

    /// The coarse level produced by transform, projection and sign flip.
    fn coarsen(&self, p_a: &SparseMatrix, p_c: &SparseMatrix, n_coarse: usize) -> Result<LevelData> {
        let pat = p_a.transpose();
        let pct = p_c.transpose();
        let a_c = pat.matmul(&self.a_tilde.matmul(p_a)?)?;
        // B (I - a D^-1 A~)
        let bd = self.b.scale_cols(self.lau.dinv());
        let bm = self.b.linear_combination(1.0, &bd.matmul(&self.a_tilde)?, -self.alpha)?;
        let b_c = pct.matmul(&bm.matmul(p_a)?)?;
        let c_c = pct.matmul(&self.chat.matmul(p_c)?)?;
        let alpha_c = 1.0 / jacobi_lambda_max(&a_c)?;
        LevelData::new(n_coarse, a_c, b_c, c_c, alpha_c)
    }
}

pub struct LevelHierarchy {
    levels: Vec<LevelData>,
    rule: CutRule,
    coarse_lu: Lu<usize, f64>,
}

impl std::fmt::Debug for LevelHierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LevelHierarchy")
            .field("levels", &self.levels.len())
            .field("rule", &self.rule)
            .finish()
    }
}

impl LevelHierarchy {
    pub fn build(system: &SaddleSystem, config: &HierarchyConfig) -> Result<Self> {
        Self::from_blocks(
            system.n(),
            system.a_tilde().clone(),
            system.b().clone(),
            system.c().clone(),
            config,
        )
    }

    pub fn from_blocks(
        n: usize,
        a_tilde: SparseMatrix,
        b: SparseMatrix,
        c: SparseMatrix,
        config: &HierarchyConfig,
    ) -> Result<Self> {
        if config.alpha <= 0.0 {
            return Err(Error::Config(format!("alpha must be positive, got {}", config.alpha)));
        }
        let max_levels = config.max_levels.unwrap_or(usize::MAX);
        if max_levels == 0 {
            return Err(Error::Config("a hierarchy needs at least one level".into()));
        }
        let mut levels = vec![LevelData::new(n, a_tilde, b, c, config.alpha)?];
        loop {
            let fine = levels.last().expect("nonempty");
            let n_coarse = config.rule.coarse_size(fine.n);
            if levels.len() >= max_levels || n_coarse < config.min_coarse_n.max(1) || fine.n < 3 {
                break;
            }
            let (p_a, p_c) = build_prolongations(fine.n, config.rule)?;
            let coarse = fine.coarsen(&p_a, &p_c, n_coarse)?;
            let fine = levels.last_mut().expect("nonempty");
            fine.p_a = Some(p_a);
            fine.p_c = Some(p_c);
            levels.push(coarse);
        }
        let coarse_lu = factorize(&levels.last().expect("nonempty").ahat)?;
        Ok(LevelHierarchy {
            levels,
            rule: config.rule,
            coarse_lu,
        })
    }

    pub fn levels(&self) -> &[LevelData] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &LevelData {
        &self.levels[l]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn rule(&self) -> CutRule {
        self.rule
    }

    /// Exact solve with the coarsest transformed matrix.
    pub fn coarse_solve(&self, rhs: &[f64]) -> Vec<f64> {
        lu_solve(&self.coarse_lu, rhs)
    }

    /// `L_{l+1} S P^T r`: the right-hand side of the transformed coarse
    /// error equation.
    pub fn restrict(&self, l: usize, r: &[f64]) -> Vec<f64> {
        let fine = &self.levels[l];
        let coarse = &self.levels[l + 1];
        let nu = fine.velocity_len();
        let pa = fine.p_a.as_ref().expect("not the coarsest level");
        let pc = fine.p_c.as_ref().expect("not the coarsest level");
        let mut g = transpose_matvec(pa, &r[..nu]);
        g.extend(transpose_matvec(pc, &r[nu..]).into_iter().map(|v| -v));
        coarse.lau.apply_l(&g)
    }

    /// `P U_{l+1} z`.
    pub fn prolongate(&self, l: usize, z: &[f64]) -> Vec<f64> {
        let fine = &self.levels[l];
        let coarse = &self.levels[l + 1];
        let e = coarse.lau.apply_u(z);
        let nu = coarse.velocity_len();
        let mut out = fine.p_a.as_ref().expect("not the coarsest level").matvec(&e[..nu]);
        out.extend(fine.p_c.as_ref().expect("not the coarsest level").matvec(&e[nu..]));
        out
    }

    /// Composite restriction `L_{l+1} S P^T` and prolongation `P U_{l+1}`
    /// as explicit matrices.
    pub fn composite_transfer(&self, l: usize) -> Result<(SparseMatrix, SparseMatrix)> {
        let fine = &self.levels[l];
        let coarse = &self.levels[l + 1];
        let p = fine.prolongation().ok_or_else(|| Error::Config("coarsest level has no transfer".into()))?;
        let nu = coarse.velocity_len();
        let np = coarse.len() - nu;
        let s = SparseMatrix::diagonal_matrix(
            &(0..nu + np).map(|i| if i < nu { 1.0 } else { -1.0 }).collect::<Vec<_>>(),
        );
        let r = coarse.lau.l_matrix().matmul(&s.matmul(&p.transpose())?)?;
        let pp = p.matmul(&coarse.lau.u_matrix())?;
        Ok((r, pp))
    }
}

fn transpose_matvec(m: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.ncols()];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            y[j] += v * xi;
        }
    }
    y
}

pub(crate) fn factorize(m: &SparseMatrix) -> Result<Lu<usize, f64>> {
    m.to_faer()
        .sp_lu()
        .map_err(|e| Error::Factorization(format!("{e:?}")))
}

pub(crate) fn lu_solve(lu: &Lu<usize, f64>, rhs: &[f64]) -> Vec<f64> {
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}
