//! Parameter grids of the four published experiment tables, their reference
//! iteration counts, and a runner that shares one prepared solver per grid
//! size and method.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::saddle_mg::{ConvergenceReport, CycleConfig, CycleKind, Solver};
use crate::smoothers::SmootherKind;
use crate::stokes::SaddleSystem;

/// Grid exponents of the published tables: `n = 2^t + 1`.
pub const PUBLISHED_T: RangeInclusive<u32> = 5..=8;

/// Allowed deviation from a published count.
pub const COUNT_TOLERANCE: usize = 2;
/// Wider band for the Vanka column, whose smoother variant is not pinned down.
pub const VANKA_TOLERANCE: usize = 3;

pub fn partial_dimension(t: u32) -> usize {
    (1usize << t) + 1
}

/// One column of a table: a fixed configuration run for every `t`.
#[derive(Clone, Debug)]
pub struct Column {
    pub label: &'static str,
    pub config: CycleConfig,
    /// Published counts for `t = 5, 6, 7, 8`.
    pub reference: [usize; 4],
    pub tolerance: usize,
}

fn config(cycle: CycleKind, pre: usize, post: usize, omega_post: f64, smoother: SmootherKind) -> CycleConfig {
    CycleConfig {
        cycle,
        pre,
        post,
        omega_pre: 0.6,
        omega_post,
        smoother,
        ..CycleConfig::default()
    }
}

/// The columns of table `id`.
pub fn table_columns(id: u8) -> Result<Vec<Column>> {
    use CycleKind::*;
    use SmootherKind::*;
    let col = |label, config, reference, tolerance| Column {
        label,
        config,
        reference,
        tolerance,
    };
    let t = COUNT_TOLERANCE;
    Ok(match id {
        1 => vec![
            col("omega=2/5", config(Tgm, 0, 1, 0.4, Jacobi), [38, 36, 35, 35], t),
            col("omega=3/5", config(Tgm, 0, 1, 0.6, Jacobi), [23, 22, 20, 19], t),
            col("omega=4/5", config(Tgm, 0, 1, 0.8, Jacobi), [17, 16, 15, 15], t),
        ],
        2 => vec![
            col("TGM(0,1)", config(Tgm, 0, 1, 0.8, Jacobi), [17, 16, 15, 15], t),
            col("TGM(1,0)", config(Tgm, 1, 0, 0.8, Jacobi), [20, 19, 18, 17], t),
            col("TGM(1,1)", config(Tgm, 1, 1, 0.8, Jacobi), [16, 16, 15, 14], t),
            col("TGM(2,2)", config(Tgm, 2, 2, 0.8, Jacobi), [15, 15, 14, 13], t),
        ],
        3 => vec![
            col("TGM", config(Tgm, 2, 2, 0.8, Jacobi), [15, 15, 14, 13], t),
            col("W", config(W, 2, 2, 0.8, Jacobi), [15, 15, 14, 13], t),
            col("V", config(V, 2, 2, 0.8, Jacobi), [15, 15, 15, 16], t),
        ],
        4 => vec![
            col("Vanka", config(V, 2, 2, 0.8, Vanka), [10, 12, 12, 11], VANKA_TOLERANCE),
            col("Jacobi", config(V, 2, 2, 0.8, Jacobi), [15, 15, 15, 16], t),
        ],
        other => return Err(Error::Config(format!("unknown table {other}"))),
    })
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub table: u8,
    pub column: &'static str,
    pub t: u32,
    pub unknowns: usize,
    pub config: CycleConfig,
    pub iterations: usize,
    pub final_relres: f64,
    pub converged: bool,
    pub seconds: f64,
    /// Published count, when `t` lies inside the published range.
    pub reference: Option<usize>,
    pub tolerance: usize,
}

impl CellResult {
    pub fn deviation(&self) -> Option<i64> {
        self.reference.map(|r| self.iterations as i64 - r as i64)
    }

    pub fn within_tolerance(&self) -> Option<bool> {
        self.deviation()
            .map(|d| self.converged && d.unsigned_abs() as usize <= self.tolerance)
    }
}

/// Runs every column of every listed table for each `t`. Solvers are built
/// once per `t` and per method and reused across columns and tables; rows
/// come back sorted by table, column and `t`.
pub fn run_tables(tables: &[u8], ts: RangeInclusive<u32>) -> Result<Vec<CellResult>> {
    let mut jobs = Vec::new();
    for &id in tables {
        for (order, column) in table_columns(id)?.into_iter().enumerate() {
            jobs.push((id, order, column));
        }
    }
    let mut rows = Vec::new();
    for t in ts {
        let system = SaddleSystem::assemble(partial_dimension(t))?;
        let (_, b) = system.build_rhs();
        // identical configurations appear in several tables; solve each once
        let mut done: Vec<(CycleConfig, ConvergenceReport)> = Vec::new();
        // one solver alive at a time keeps the peak memory of the largest grid down
        let mut keys: Vec<(bool, bool)> = jobs.iter().map(|(_, _, c)| solver_key(&c.config)).collect();
        keys.sort();
        keys.dedup();
        for key in keys {
            let mut solver: Option<Solver> = None;
            for (_, _, column) in jobs.iter().filter(|(_, _, c)| solver_key(&c.config) == key) {
                let cfg = &column.config;
                if done.iter().any(|(c, _)| c == cfg) {
                    continue;
                }
                if solver.is_none() {
                    solver = Some(Solver::new(&system, cfg)?);
                }
                let (_, r) = solver.as_ref().expect("built above").solve(&b, cfg)?;
                done.push((cfg.clone(), r));
            }
        }
        for (id, order, column) in &jobs {
            let cfg = &column.config;
            let report = &done.iter().find(|(c, _)| c == cfg).expect("solved above").1;
            let reference = PUBLISHED_T
                .contains(&t)
                .then(|| column.reference[(t - PUBLISHED_T.start()) as usize]);
            rows.push((
                (*id, *order, t),
                CellResult {
                    table: *id,
                    column: column.label,
                    t,
                    unknowns: system.len(),
                    config: cfg.clone(),
                    iterations: report.iterations,
                    final_relres: report.final_relres(),
                    converged: report.converged,
                    seconds: report.seconds,
                    reference,
                    tolerance: column.tolerance,
                },
            ));
        }
    }
    rows.sort_by_key(|(k, _)| *k);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn solver_key(cfg: &CycleConfig) -> (bool, bool) {
    (cfg.cycle == CycleKind::Tgm, cfg.smoother == SmootherKind::Vanka)
}
