//! Command-line front end: `reproduce`, `solve` and `analyze`.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{check_projector, check_zero_structure, divergence_ratio_min};
use crate::error::{Error, Result};
use crate::experiments::{partial_dimension, run_tables, CellResult, PUBLISHED_T};
use crate::saddle_mg::{default_alpha, ConvergenceReport, CycleConfig, CycleKind, Solver};
use crate::smoothers::SmootherKind;
use crate::stokes::SaddleSystem;
use crate::structured::CutRule;
use crate::symbol::{
    f_chat, f_schur, hermitian_eigenvalues, p4, p_bilinear_scalar, stokes_fA, stokes_fBx, stokes_fBy, uniform_grid,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub const CSV_HEADER: [&str; 12] = [
    "table",
    "t",
    "N",
    "cycle",
    "pre",
    "post",
    "omega_pre",
    "omega_post",
    "smoother",
    "iterations",
    "final_relres",
    "seconds",
];

#[derive(Parser, Debug)]
#[command(name = "saddle-mg", version, about = "Multigrid for the Q1-iso-Q2/Q1 Stokes saddle-point system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rerun a published table and compare with its counts.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        table: u8,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = *PUBLISHED_T.start())]
        t_min: u32,
        #[arg(long, default_value_t = *PUBLISHED_T.end())]
        t_max: u32,
    },
    /// Solve once on the grid n = 2^t + 1.
    Solve(SolveArgs),
    /// Print symbol diagnostics.
    Analyze {
        #[arg(long)]
        symbol: SymbolName,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum SymbolName {
    #[value(name = "fA")]
    FA,
    #[value(name = "fChat")]
    FChat,
    #[value(name = "fS")]
    FS,
    #[value(name = "p4")]
    P4,
}

/// Flags of `solve`. Everything is optional so that a config file can fill
/// the gaps; flags given on the command line win.
#[derive(Args, Debug, Default, Clone)]
pub struct SolveArgs {
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub cycle: Option<CycleKind>,
    #[arg(long)]
    pub pre: Option<usize>,
    #[arg(long)]
    pub post: Option<usize>,
    #[arg(long)]
    pub omega_pre: Option<f64>,
    #[arg(long)]
    pub omega_post: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub smoother: Option<SmootherKind>,
    #[arg(long)]
    pub cut: Option<CutRule>,
    /// Scaling of each Vanka patch correction, in (0, 1].
    #[arg(long)]
    pub vanka_damping: Option<f64>,
    #[arg(long)]
    pub show_hierarchy: bool,
    #[arg(long)]
    pub history: bool,
    /// Write the finest system matrix as COO text.
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
    /// Skip the admissibility checks on alpha and omega.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A fully resolved single-solve request.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub t: u32,
    pub config: CycleConfig,
}

impl SolveArgs {
    /// Fills unset fields from `key = value` lines. Keys are the long flag
    /// names without the leading dashes; `#` starts a comment.
    pub fn merge_config_text(&mut self, text: &str) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            if seen.insert(key.clone(), ()).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("cannot parse `{v}`"))
            }
            match key.as_str() {
                "t" => fill(&mut self.t, num(value).map_err(bad)?),
                "cycle" => fill(&mut self.cycle, value.parse().map_err(|e: Error| bad(e.to_string()))?),
                "pre" => fill(&mut self.pre, num(value).map_err(bad)?),
                "post" => fill(&mut self.post, num(value).map_err(bad)?),
                "omega-pre" => fill(&mut self.omega_pre, num(value).map_err(bad)?),
                "omega-post" => fill(&mut self.omega_post, num(value).map_err(bad)?),
                "alpha" => fill(&mut self.alpha, num(value).map_err(bad)?),
                "tol" => fill(&mut self.tol, num(value).map_err(bad)?),
                "max-iter" => fill(&mut self.max_iter, num(value).map_err(bad)?),
                "smoother" => fill(&mut self.smoother, value.parse().map_err(|e: Error| bad(e.to_string()))?),
                "cut" => fill(&mut self.cut, value.parse().map_err(|e: Error| bad(e.to_string()))?),
                "vanka-damping" => fill(&mut self.vanka_damping, num(value).map_err(bad)?),
                "force" => self.force |= num::<bool>(value).map_err(bad)?,
                "history" => self.history |= num::<bool>(value).map_err(bad)?,
                "show-hierarchy" => self.show_hierarchy |= num::<bool>(value).map_err(bad)?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<ExperimentSpec> {
        let d = CycleConfig::default();
        let t = self.t.ok_or_else(|| Error::Config("`--t` is required".into()))?;
        if !(1..=12).contains(&t) {
            return Err(Error::Config(format!("t = {t} is outside 1..=12")));
        }
        let config = CycleConfig {
            cycle: self.cycle.unwrap_or(d.cycle),
            pre: self.pre.unwrap_or(d.pre),
            post: self.post.unwrap_or(d.post),
            omega_pre: self.omega_pre.unwrap_or(d.omega_pre),
            omega_post: self.omega_post.unwrap_or(d.omega_post),
            alpha: self.alpha.or(d.alpha),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            rule: self.cut.unwrap_or(d.rule),
            smoother: self.smoother.unwrap_or(d.smoother),
            vanka_damping: self.vanka_damping.unwrap_or(d.vanka_damping),
            check_bounds: !self.force,
            ..d
        };
        config.validate()?;
        Ok(ExperimentSpec { t, config })
    }
}

fn fill<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Reproduce {
            table,
            out: path,
            t_min,
            t_max,
        } => {
            if t_min > t_max || t_min == 0 {
                return Err(Error::Config(format!("empty t range {t_min}..={t_max}")));
            }
            let rows = run_tables(&[table], t_min..=t_max)?;
            write_cells_csv(&rows, path.as_deref(), out)?;
            write!(out, "{}", reference_diff(&rows))?;
            Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Solve(mut args) => {
            if let Some(path) = args.config.clone() {
                args.merge_config_text(&fs::read_to_string(path)?)?;
            }
            let spec = args.resolve()?;
            let (system, solver, report) = run_solve(&spec)?;
            if args.show_hierarchy {
                write!(out, "{}", hierarchy_summary(&solver, &spec.config))?;
            }
            if let Some(path) = &args.dump_matrix {
                system.global_matrix().write_coo(path)?;
            }
            if args.history {
                writeln!(out, "iteration,relres,relres_original")?;
                for (k, (a, b)) in report.residual_history.iter().zip(&report.original_history).enumerate() {
                    writeln!(out, "{k},{a:e},{b:e}")?;
                }
            }
            let row = solve_row(&spec, system.len(), &report);
            write_rows(&[row], args.out.as_deref(), out)?;
            Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
        }
        Command::Analyze { symbol, grid, out: path } => {
            if grid < 4 {
                return Err(Error::Config("grid must be at least 4".into()));
            }
            let rows = analyze(symbol, grid)?;
            writeln!(out, "| quantity | value |")?;
            writeln!(out, "|---|---|")?;
            for (k, v) in &rows {
                writeln!(out, "| {k} | {v} |")?;
            }
            writeln!(out)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["quantity", "value"]).map_err(csv_error)?;
            for (k, v) in &rows {
                w.write_record([k, v]).map_err(csv_error)?;
            }
            let text = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            out.write_all(&text)?;
            if let Some(path) = path {
                fs::write(path, &text)?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Assembles `n = 2^t + 1`, builds the solver and solves `A x = A x_true`.
pub fn run_solve(spec: &ExperimentSpec) -> Result<(SaddleSystem, Solver, ConvergenceReport)> {
    let system = SaddleSystem::assemble(partial_dimension(spec.t))?;
    let solver = Solver::new(&system, &spec.config)?;
    let (_, b) = system.build_rhs();
    let (_, report) = solver.solve(&b, &spec.config)?;
    Ok((system, solver, report))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("{other:?}")),
    }
}

fn record(table: &str, t: u32, unknowns: usize, cfg: &CycleConfig, iterations: usize, relres: f64, seconds: f64) -> Vec<String> {
    vec![
        table.to_string(),
        t.to_string(),
        unknowns.to_string(),
        cfg.cycle.to_string(),
        cfg.pre.to_string(),
        cfg.post.to_string(),
        cfg.omega_pre.to_string(),
        cfg.omega_post.to_string(),
        cfg.smoother.to_string(),
        iterations.to_string(),
        format!("{relres:e}"),
        format!("{seconds:.3}"),
    ]
}

fn solve_row(spec: &ExperimentSpec, unknowns: usize, r: &ConvergenceReport) -> Vec<String> {
    record("custom", spec.t, unknowns, &spec.config, r.iterations, r.final_relres(), r.seconds)
}

pub fn cell_record(c: &CellResult) -> Vec<String> {
    record(&c.table.to_string(), c.t, c.unknowns, &c.config, c.iterations, c.final_relres, c.seconds)
}

fn write_cells_csv(rows: &[CellResult], path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let records: Vec<Vec<String>> = rows.iter().map(cell_record).collect();
    write_rows(&records, path, out)
}

fn write_rows(records: &[Vec<String>], path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let mut w = match path {
        Some(p) => csv::Writer::from_writer(Box::new(fs::File::create(p)?) as Box<dyn Write>),
        None => csv::Writer::from_writer(Box::new(&mut *out) as Box<dyn Write>),
    };
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Side-by-side table of measured and published counts.
pub fn reference_diff(rows: &[CellResult]) -> String {
    let mut s = String::from("\n| table | column | t | published | ours | diff | within |\n|---|---|---|---|---|---|---|\n");
    for r in rows {
        let published = r.reference.map_or("-".to_string(), |v| v.to_string());
        let diff = r.deviation().map_or("-".to_string(), |d| format!("{d:+}"));
        let ok = match r.within_tolerance() {
            Some(true) => format!("yes (+-{})", r.tolerance),
            Some(false) => format!("NO (+-{})", r.tolerance),
            None => "-".to_string(),
        };
        let ours = if r.converged {
            r.iterations.to_string()
        } else {
            format!("{} (not converged)", r.iterations)
        };
        s.push_str(&format!("| {} | {} | {} | {published} | {ours} | {diff} | {ok} |\n", r.table, r.column, r.t));
    }
    s
}

fn hierarchy_summary(solver: &Solver, config: &CycleConfig) -> String {
    let mut s = String::new();
    match solver.hierarchy() {
        Some(h) => {
            // omega is shared by all levels
            s.push_str("level,n,unknowns,nnz_ahat,row_nnz_a,row_nnz_b,row_nnz_chat,alpha,omega_pre,omega_post\n");
            for (l, d) in h.levels().iter().enumerate() {
                s.push_str(&format!(
                    "{l},{},{},{},{},{},{},{},{},{}\n",
                    d.n,
                    d.len(),
                    d.ahat.nnz(),
                    d.a_tilde.max_row_nnz(),
                    d.b.max_row_nnz(),
                    d.chat.max_row_nnz(),
                    d.alpha,
                    config.omega_pre,
                    config.omega_post
                ));
            }
        }
        None => s.push_str(&format!("galerkin levels: {}\n", solver.depth())),
    }
    s
}

fn fmt_point(t: &[f64]) -> String {
    let parts: Vec<String> = t.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Diagnostic key/value rows for one of the named symbols.
fn analyze(symbol: SymbolName, grid: usize) -> Result<Vec<(String, String)>> {
    let mut rows = Vec::new();
    let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
    match symbol {
        SymbolName::FA | SymbolName::FChat => {
            let f = if symbol == SymbolName::FA { stokes_fA() } else { f_chat(default_alpha()) };
            let z = check_zero_structure(&f, grid)?;
            let (lo, hi) = uniform_grid(2, grid)
                .map(|t| {
                    let e = hermitian_eigenvalues(&f.evaluate(&t));
                    (e[0], e[e.len() - 1])
                })
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)));
            push("size", format!("{}x{}", f.rows(), f.cols()));
            push("degree", format!("{:?}", f.degree()));
            push("zeros", z.zeros.iter().map(|t| fmt_point(t)).collect::<Vec<_>>().join(" "));
            push("eigen_index", z.eigen_index.map_or("-".into(), |v| v.to_string()));
            push("multiplicity", z.multiplicity.to_string());
            push("order", z.order.map_or("-".into(), |v| format!("{v:.4}")));
            push("min_lambda_away", format!("{:e}", z.min_away));
            push("lambda_min_grid", format!("{lo:e}"));
            push("lambda_max_grid", format!("{hi:.12}"));
            if symbol == SymbolName::FChat {
                let r = check_projector(&p_bilinear_scalar(), &f, &[0.0, 0.0], 0, grid)?;
                push("p_c_positivity_min", format!("{:e}", r.positivity_min));
                push("p_c_preservation_residual", format!("{:e}", r.preservation_residual));
                push("p_c_ratio_max", format!("{:.6}", r.ratio_max));
                push("p_c_ratio_bounded", r.ratio_bounded.to_string());
                let d = divergence_ratio_min(&p_bilinear_scalar(), &stokes_fBx(), &stokes_fBy(), &[0.0, 0.0]);
                push("divergence_ratio_min", format!("{d:.6}"));
            }
        }
        SymbolName::FS => {
            let s = f_schur();
            let (sup, at) = s.sup(grid);
            push("sup", format!("{sup:.12}"));
            push("argmax", fmt_point(&at));
        }
        SymbolName::P4 => {
            let r = check_projector(&p4(), &stokes_fA(), &[0.0, 0.0], 0, grid)?;
            push("positivity_min", format!("{:e}", r.positivity_min));
            push("preservation_residual", format!("{:e}", r.preservation_residual));
            push("ratio_max", format!("{:.6}", r.ratio_max));
            push("ratio_bounded", r.ratio_bounded.to_string());
            push("holds", r.holds().to_string());
        }
    }
    Ok(rows)
}
