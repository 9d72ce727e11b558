use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::hierarchy::{factorize, lu_solve};
use super::{build_prolongations, default_alpha, omega_bound, HierarchyConfig, LevelHierarchy};
use crate::error::{Error, Result};
use crate::smoothers::{inverse_diagonal, jacobi_sweeps, SmootherKind, VankaSmoother};
use crate::sparse::{norm2, SparseMatrix};
use crate::stokes::SaddleSystem;
use crate::structured::{CutRule, DENSE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleKind {
    Tgm,
    V,
    W,
}

impl CycleKind {
    pub fn gamma(self) -> usize {
        match self {
            CycleKind::W => 2,
            _ => 1,
        }
    }
}

impl std::str::FromStr for CycleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tgm" => Ok(CycleKind::Tgm),
            "v" => Ok(CycleKind::V),
            "w" => Ok(CycleKind::W),
            other => Err(Error::Config(format!("unknown cycle `{other}`"))),
        }
    }
}

impl std::fmt::Display for CycleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CycleKind::Tgm => "tgm",
            CycleKind::V => "v",
            CycleKind::W => "w",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleConfig {
    pub cycle: CycleKind,
    pub pre: usize,
    pub post: usize,
    pub omega_pre: f64,
    pub omega_post: f64,
    /// Finest-level transform parameter; `None` selects [`default_alpha`].
    pub alpha: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub min_coarse_n: usize,
    pub rule: CutRule,
    pub smoother: SmootherKind,
    /// Scaling of each Vanka patch correction.
    pub vanka_damping: f64,
    /// Reject damping or transform parameters outside the admissible ranges.
    pub check_bounds: bool,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            cycle: CycleKind::Tgm,
            pre: 0,
            post: 1,
            omega_pre: 0.6,
            omega_post: 0.8,
            alpha: None,
            tol: 1e-6,
            max_iter: 500,
            min_coarse_n: 3,
            rule: CutRule::Boundary,
            smoother: SmootherKind::Jacobi,
            vanka_damping: 0.6,
            check_bounds: true,
        }
    }
}

impl CycleConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or_else(default_alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pre + self.post == 0 {
            return Err(Error::Config("at least one smoothing step is required".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tolerance and iteration limit must be positive".into()));
        }
        if !(self.vanka_damping > 0.0 && self.vanka_damping <= 1.0) {
            return Err(Error::Config(format!("vanka damping {} is outside (0, 1]", self.vanka_damping)));
        }
        let alpha = self.alpha();
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        if self.check_bounds && self.smoother == SmootherKind::Jacobi {
            if alpha >= 4.0 / 3.0 {
                return Err(Error::Config(format!("alpha {alpha} is outside (0, 4/3)")));
            }
            let bound = omega_bound(alpha)?;
            for (steps, omega, name) in [(self.pre, self.omega_pre, "omega-pre"), (self.post, self.omega_post, "omega-post")] {
                if steps > 0 && !(omega > 0.0 && omega < bound) {
                    return Err(Error::Config(format!("{name} {omega} is outside (0, {bound:.6})")));
                }
            }
        }
        Ok(())
    }

    fn hierarchy_config(&self) -> HierarchyConfig {
        HierarchyConfig {
            alpha: self.alpha(),
            rule: self.rule,
            min_coarse_n: self.min_coarse_n,
            max_levels: (self.cycle == CycleKind::Tgm).then_some(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// Relative residual of the monitored system after each iteration.
    pub residual_history: Vec<f64>,
    /// Relative residual of the original system after each iteration.
    pub original_history: Vec<f64>,
    pub converged: bool,
    pub seconds: f64,
}

impl ConvergenceReport {
    pub fn final_relres(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(1.0)
    }
}

/// Levels of the plain Galerkin hierarchy `P^T A P` on the untransformed
/// saddle matrix, smoothed by Vanka.
struct GalerkinLevel {
    matrix: SparseMatrix,
    p: Option<SparseMatrix>,
    pt: Option<SparseMatrix>,
    vanka: Option<VankaSmoother>,
}

enum Method {
    Transformed {
        hierarchy: LevelHierarchy,
        inv_diag: Vec<Vec<f64>>,
    },
    Vanka {
        levels: Vec<GalerkinLevel>,
        coarse: faer::sparse::linalg::solvers::Lu<usize, f64>,
    },
}

/// A prepared multigrid solver for one system; reusable across right-hand
/// sides and smoothing parameters.
pub struct Solver {
    system_matrix: SparseMatrix,
    method: Method,
    cycle: CycleKind,
}

impl Solver {
    pub fn new(system: &SaddleSystem, config: &CycleConfig) -> Result<Self> {
        config.validate()?;
        let system_matrix = system.global_matrix();
        let method = match config.smoother {
            SmootherKind::Jacobi => {
                let hierarchy = LevelHierarchy::build(system, &config.hierarchy_config())?;
                let inv_diag = hierarchy
                    .levels()
                    .iter()
                    .map(|l| inverse_diagonal(&l.ahat))
                    .collect::<Result<Vec<_>>>()?;
                Method::Transformed { hierarchy, inv_diag }
            }
            SmootherKind::Vanka => {
                let (levels, coarse) = galerkin_levels(system, config)?;
                Method::Vanka { levels, coarse }
            }
        };
        Ok(Solver {
            system_matrix,
            method,
            cycle: config.cycle,
        })
    }

    pub fn hierarchy(&self) -> Option<&LevelHierarchy> {
        match &self.method {
            Method::Transformed { hierarchy, .. } => Some(hierarchy),
            Method::Vanka { .. } => None,
        }
    }

    pub fn depth(&self) -> usize {
        match &self.method {
            Method::Transformed { hierarchy, .. } => hierarchy.depth(),
            Method::Vanka { levels, .. } => levels.len(),
        }
    }

    /// Iterates from a zero initial guess; returns the solution of the
    /// original system and the report.
    pub fn solve(&self, b: &[f64], config: &CycleConfig) -> Result<(Vec<f64>, ConvergenceReport)> {
        config.validate()?;
        if (config.cycle == CycleKind::Tgm) != (self.cycle == CycleKind::Tgm) {
            return Err(Error::Config("a two-grid solver and a multilevel solver are not interchangeable".into()));
        }
        if b.len() != self.system_matrix.nrows() {
            return Err(Error::Dimension("right-hand side length".into()));
        }
        let start = Instant::now();
        let nb = norm2(b);
        let mut report = ConvergenceReport {
            iterations: 0,
            residual_history: Vec::new(),
            original_history: Vec::new(),
            converged: false,
            seconds: 0.0,
        };
        let relres = |m: &SparseMatrix, rhs: &[f64], x: &[f64], scale: f64| {
            if scale == 0.0 {
                0.0
            } else {
                norm2(&m.residual(rhs, x)) / scale
            }
        };
        let x = match &self.method {
            Method::Transformed { hierarchy, inv_diag } => {
                let top = hierarchy.level(0);
                let bh = top.lau.apply_l(b);
                let nbh = norm2(&bh);
                let mut y = vec![0.0; bh.len()];
                while report.iterations < config.max_iter {
                    transformed_cycle(hierarchy, inv_diag, 0, &bh, &mut y, config);
                    report.iterations += 1;
                    let r = relres(&top.ahat, &bh, &y, nbh);
                    let x = top.lau.apply_u(&y);
                    report.residual_history.push(r);
                    report.original_history.push(relres(&self.system_matrix, b, &x, nb));
                    if r < config.tol {
                        report.converged = true;
                        break;
                    }
                    if diverged(r) {
                        break;
                    }
                }
                top.lau.apply_u(&y)
            }
            Method::Vanka { levels, coarse } => {
                let mut x = vec![0.0; b.len()];
                while report.iterations < config.max_iter {
                    vanka_cycle(levels, coarse, 0, b, &mut x, config)?;
                    report.iterations += 1;
                    let r = relres(&self.system_matrix, b, &x, nb);
                    report.residual_history.push(r);
                    report.original_history.push(r);
                    if r < config.tol {
                        report.converged = true;
                        break;
                    }
                    if diverged(r) {
                        break;
                    }
                }
                x
            }
        };
        report.seconds = start.elapsed().as_secs_f64();
        Ok((x, report))
    }
}

/// Relative residuals past this are treated as divergence and end the run.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

fn diverged(relres: f64) -> bool {
    !relres.is_finite() || relres > DIVERGENCE_LIMIT
}

fn transformed_cycle(
    h: &LevelHierarchy,
    inv_diag: &[Vec<f64>],
    l: usize,
    b: &[f64],
    y: &mut [f64],
    config: &CycleConfig,
) {
    let last = h.depth() - 1;
    if l == last {
        y.copy_from_slice(&h.coarse_solve(b));
        return;
    }
    let a = &h.level(l).ahat;
    jacobi_sweeps(a, &inv_diag[l], config.omega_pre, b, y, config.pre);
    let r = a.residual(b, y);
    let g = h.restrict(l, &r);
    let mut z = vec![0.0; g.len()];
    let gamma = if l + 1 == last { 1 } else { config.cycle.gamma() };
    for _ in 0..gamma {
        transformed_cycle(h, inv_diag, l + 1, &g, &mut z, config);
    }
    for (yi, ci) in y.iter_mut().zip(h.prolongate(l, &z)) {
        *yi += ci;
    }
    jacobi_sweeps(a, &inv_diag[l], config.omega_post, b, y, config.post);
}

fn galerkin_levels(
    system: &SaddleSystem,
    config: &CycleConfig,
) -> Result<(Vec<GalerkinLevel>, faer::sparse::linalg::solvers::Lu<usize, f64>)> {
    let max_levels = if config.cycle == CycleKind::Tgm { 2 } else { usize::MAX };
    let mut n = system.n();
    let mut nu = system.velocity_len();
    let mut levels = vec![GalerkinLevel {
        matrix: system.global_matrix(),
        p: None,
        pt: None,
        vanka: None,
    }];
    loop {
        let n_coarse = config.rule.coarse_size(n);
        if levels.len() >= max_levels || n_coarse < config.min_coarse_n.max(1) || n < 3 {
            break;
        }
        let (pa, pc) = build_prolongations(n, config.rule)?;
        let p = SparseMatrix::block(&[vec![Some(&pa), None], vec![None, Some(&pc)]])?;
        let pt = p.transpose();
        let fine = levels.last_mut().expect("nonempty");
        fine.vanka = Some(VankaSmoother::new(&fine.matrix, nu)?);
        let coarse = pt.matmul(&fine.matrix.matmul(&p)?)?;
        fine.p = Some(p);
        fine.pt = Some(pt);
        nu = pa.ncols();
        n = n_coarse;
        levels.push(GalerkinLevel {
            matrix: coarse,
            p: None,
            pt: None,
            vanka: None,
        });
    }
    let coarse = factorize(&levels.last().expect("nonempty").matrix)?;
    Ok((levels, coarse))
}

fn vanka_cycle(
    levels: &[GalerkinLevel],
    coarse: &faer::sparse::linalg::solvers::Lu<usize, f64>,
    l: usize,
    b: &[f64],
    x: &mut [f64],
    config: &CycleConfig,
) -> Result<()> {
    let last = levels.len() - 1;
    if l == last {
        x.copy_from_slice(&lu_solve(coarse, b));
        return Ok(());
    }
    let level = &levels[l];
    let vanka = level.vanka.as_ref().expect("smoothed level");
    vanka.apply_damped(&level.matrix, b, x, config.pre, config.vanka_damping)?;
    let r = level.matrix.residual(b, x);
    let g = level.pt.as_ref().expect("transfer").matvec(&r);
    let mut z = vec![0.0; g.len()];
    let gamma = if l + 1 == last { 1 } else { config.cycle.gamma() };
    for _ in 0..gamma {
        vanka_cycle(levels, coarse, l + 1, &g, &mut z, config)?;
    }
    for (xi, ci) in x.iter_mut().zip(level.p.as_ref().expect("transfer").matvec(&z)) {
        *xi += ci;
    }
    vanka.apply_damped(&level.matrix, b, x, config.post, config.vanka_damping)
}

/// Assembles the system, builds `b = A x_true` and solves.
pub fn solve(system: &SaddleSystem, config: &CycleConfig) -> Result<ConvergenceReport> {
    let (_, b) = system.build_rhs();
    solve_with(system, &b, config).map(|(_, r)| r)
}

pub fn solve_with(system: &SaddleSystem, b: &[f64], config: &CycleConfig) -> Result<(Vec<f64>, ConvergenceReport)> {
    Solver::new(system, config)?.solve(b, config)
}

/// Dense two-grid error propagation on the transformed system,
/// `S_post^post (I - P (R A^ P)^-1 R A^) S_pre^pre` with
/// `S = I - omega D^-1 A^`, `R = L_1 S P^T` and `P = P U_1`.
pub fn tgm_iteration_matrix(system: &SaddleSystem, config: &CycleConfig) -> Result<Mat<f64>> {
    if system.len() > DENSE_CAP {
        return Err(Error::SizeCap {
            size: system.len(),
            cap: DENSE_CAP,
        });
    }
    let mut cfg = config.clone();
    cfg.cycle = CycleKind::Tgm;
    let h = LevelHierarchy::build(system, &cfg.hierarchy_config())?;
    if h.depth() < 2 {
        return Err(Error::TooSmall(system.n()));
    }
    let (r, p) = h.composite_transfer(0)?;
    let ahat = h.level(0).ahat.to_dense();
    two_grid_matrix(&ahat, &r.to_dense(), &p.to_dense(), &cfg)
}

/// The two-grid iteration matrix for an arbitrary square `a` with transfer
/// operators `r` and `p`, using Jacobi smoothing from `config`.
pub fn two_grid_matrix(a: &Mat<f64>, r: &Mat<f64>, p: &Mat<f64>, config: &CycleConfig) -> Result<Mat<f64>> {
    let n = a.nrows();
    let coarse = r * a * p;
    let ra = r * a;
    let cgc = Mat::<f64>::identity(n, n) - p * coarse.partial_piv_lu().solve(&ra);
    let smoother = |omega: f64| {
        let mut s = Mat::<f64>::identity(n, n);
        for i in 0..n {
            let d = a[(i, i)];
            for j in 0..n {
                s[(i, j)] -= omega * a[(i, j)] / d;
            }
        }
        s
    };
    if (0..n).any(|i| a[(i, i)] == 0.0) {
        return Err(Error::ZeroDiagonal((0..n).find(|&i| a[(i, i)] == 0.0).unwrap_or(0)));
    }
    let mut m = cgc;
    let s_pre = smoother(config.omega_pre);
    for _ in 0..config.pre {
        m = &m * &s_pre;
    }
    let s_post = smoother(config.omega_post);
    for _ in 0..config.post {
        m = &s_post * &m;
    }
    Ok(m)
}

/// Spectral radius by the norm-ratio power method from a fixed start
/// vector: `(|M^k v| / |M^(k/2) v|)^(2/k)`.
pub fn spectral_radius(m: &Mat<f64>, iterations: usize) -> f64 {
    let n = m.nrows();
    let mut v = Mat::from_fn(n, 1, |i, _| 1.0 + ((i * 37) % 11) as f64 / 11.0);
    let half = iterations / 2;
    let mut log_growth = 0.0;
    for k in 0..iterations {
        v = m * &v;
        let s = v.norm_l2();
        if s == 0.0 {
            return 0.0;
        }
        if k >= half {
            log_growth += s.ln();
        }
        v = v * faer::Scale(1.0 / s);
    }
    (log_growth / (iterations - half) as f64).exp()
}
