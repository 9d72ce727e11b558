use std::path::PathBuf;
use std::process::{Command, Output};

use saddle_core::cli::*;
use saddle_core::saddle_mg::CycleKind;
use saddle_core::smoothers::SmootherKind;
use saddle_core::Error;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saddle-mg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("saddle-mg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn config_text_fills_unset_fields_only() {
    let mut args = SolveArgs {
        pre: Some(3),
        ..Default::default()
    };
    args.merge_config_text("# sweep counts\nt = 4\npre = 1\npost=2 # trailing\nomega_post = 0.5\ncycle = w\nsmoother = jacobi\n")
        .unwrap();
    assert_eq!(args.t, Some(4));
    assert_eq!(args.pre, Some(3));
    assert_eq!(args.post, Some(2));
    assert_eq!(args.omega_post, Some(0.5));
    let spec = args.resolve().unwrap();
    assert_eq!(spec.config.cycle, CycleKind::W);
    assert_eq!(spec.config.smoother, SmootherKind::Jacobi);
    assert!(spec.config.check_bounds);
}

#[test]
fn config_text_errors_carry_line_numbers() {
    let err = SolveArgs::default().merge_config_text("t = 3\nt = 4\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }));
    let err = SolveArgs::default().merge_config_text("\ncolour = red\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }));
    let err = SolveArgs::default().merge_config_text("pre two\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }));
    assert!(SolveArgs::default().merge_config_text("pre = two\n").is_err());
}

#[test]
fn resolve_rejects_bad_requests() {
    assert!(SolveArgs::default().resolve().is_err());
    let with = |f: fn(&mut SolveArgs)| {
        let mut a = SolveArgs {
            t: Some(4),
            ..Default::default()
        };
        f(&mut a);
        a.resolve()
    };
    assert!(with(|_| ()).is_ok());
    assert!(with(|a| a.t = Some(0)).is_err());
    assert!(with(|a| a.t = Some(13)).is_err());
    assert!(with(|a| {
        a.pre = Some(0);
        a.post = Some(0);
    })
    .is_err());
    assert!(with(|a| a.omega_post = Some(0.95)).is_err());
    let forced = with(|a| {
        a.omega_post = Some(0.95);
        a.force = true;
    });
    assert!(!forced.unwrap().config.check_bounds);
}

#[test]
fn exit_codes() {
    assert_eq!(run(["saddle-mg", "--help"]), EXIT_OK);
    assert_eq!(run(["saddle-mg", "frobnicate"]), EXIT_USAGE);
    assert_eq!(run(["saddle-mg", "reproduce", "--table", "5"]), EXIT_USAGE);
    assert_eq!(run(["saddle-mg", "solve", "--t", "3", "--pre", "0", "--post", "0"]), EXIT_USAGE);
    assert_eq!(run(["saddle-mg", "solve", "--t", "3", "--max-iter", "1"]), EXIT_NOT_CONVERGED);
    assert_eq!(run(["saddle-mg", "solve", "--t", "3"]), EXIT_OK);
    assert_eq!(run(["saddle-mg", "analyze", "--symbol", "fB"]), EXIT_USAGE);
}

#[test]
fn solve_prints_one_csv_row() {
    let o = bin(&["solve", "--t", "3", "--cycle", "v", "--pre", "2", "--post", "2"]);
    assert!(o.status.success());
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER.to_vec());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "custom");
    assert_eq!(&rows[0][2], "729");
    let relres: f64 = rows[0][10].parse().unwrap();
    assert!(relres < 1e-6);
}

#[test]
fn solve_is_deterministic_apart_from_timing() {
    let args = ["solve", "--t", "3", "--history", "--show-hierarchy"];
    let strip = |s: String| -> Vec<String> {
        s.lines()
            .map(|l| match l.rsplit_once(',') {
                Some((head, _)) if l.starts_with("custom") => head.to_string(),
                _ => l.to_string(),
            })
            .collect()
    };
    let a = strip(stdout(&bin(&args)));
    let b = strip(stdout(&bin(&args)));
    assert_eq!(a, b);
    assert!(a.iter().any(|l| l == "iteration,relres,relres_original"));
    assert!(a.iter().any(|l| l.starts_with("level,n,unknowns")));
}

#[test]
fn config_file_and_flag_override() {
    let path = scratch("run.cfg");
    std::fs::write(&path, "t = 3\npost = 1\nmax_iter = 1\n").unwrap();
    let o = bin(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_NOT_CONVERGED));
    let o = bin(&["solve", "--config", path.to_str().unwrap(), "--max-iter", "200"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",1,"));
}

#[test]
fn solve_writes_requested_files() {
    let csv_path = scratch("row.csv");
    let coo = scratch("matrix.coo");
    let o = bin(&[
        "solve",
        "--t",
        "2",
        "--out",
        csv_path.to_str().unwrap(),
        "--dump-matrix",
        coo.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(std::fs::metadata(&coo).unwrap().len() > 0);
}

#[test]
fn analyze_prints_markdown_then_csv() {
    let path = scratch("fa.csv");
    let o = bin(&["analyze", "--symbol", "fA", "--grid", "16", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (md, csv_part) = text.split_once("\n\n").unwrap();
    assert!(md.starts_with("| quantity | value |"));
    assert!(md.contains("| multiplicity | 1 |"));
    assert_eq!(csv_part, std::fs::read_to_string(&path).unwrap());

    let o = bin(&["analyze", "--symbol", "fS", "--grid", "16"]);
    let text = stdout(&o);
    let sup = text.lines().find(|l| l.starts_with("sup,")).unwrap();
    let v: f64 = sup[4..].parse().unwrap();
    assert!((v - 0.25).abs() < 1e-12);

    let o = bin(&["analyze", "--symbol", "p4", "--grid", "16"]);
    assert!(stdout(&o).contains("holds,true"));
    assert_eq!(bin(&["analyze", "--symbol", "fA", "--grid", "2"]).status.code(), Some(EXIT_USAGE));
}
