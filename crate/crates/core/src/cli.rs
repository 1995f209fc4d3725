//! Command-line interface: `solve`, `reduce` and `demo`.
//!
//! Exit codes: 0 success (and convergence, for `solve`), 1 error,
//! 2 `solve` ran out of iterations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cg::{cg_solve, SolveOptions, DEFAULT_TOLERANCE};
use crate::example;
use crate::expr::{parse_expr, SymShape};
use crate::io::{load_matrix, load_vector, render_report, ReportFormat};
use crate::reduce::{emit_pseudocode, reduce_to_onf, Target};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "moa-cg",
    version,
    about = "MoA array algebra, psi-reduction and conjugate gradient"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve A x = b for symmetric positive definite A
    Solve(SolveArgs),
    /// Reduce an array expression and print its loop pseudocode
    Reduce(ReduceArgs),
    /// Run the 2x2 worked example and check it against the known values
    Demo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Matrix file (MatrixMarket or CSV)
    #[arg(long)]
    pub matrix: PathBuf,
    /// Right-hand side vector file
    #[arg(long)]
    pub rhs: PathBuf,
    /// Initial guess (defaults to zeros)
    #[arg(long)]
    pub guess: Option<PathBuf>,
    /// Relative residual tolerance
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Iteration limit (defaults to 2n)
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Expression text, e.g. "ip(A, p)"
    #[arg(long)]
    pub expr: String,
    /// Shape declaration NAME=DIMS, e.g. R=2,n (repeatable)
    #[arg(long = "decl", value_parser = parse_decl_arg)]
    pub decls: Vec<(String, SymShape)>,
}

fn parse_decl_arg(text: &str) -> Result<(String, SymShape), String> {
    let (name, dims) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=DIMS, got `{text}`"))?;
    let name = name.trim();
    if name.is_empty() || name == "n" {
        return Err(format!("invalid array name `{name}`"));
    }
    let shape = SymShape::parse_decl(dims)
        .ok_or_else(|| format!("invalid dimensions `{dims}`: use integers and `n`"))?;
    Ok((name.to_string(), shape))
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match solve(args, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NOT_CONVERGED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn solve(args: &SolveArgs, out: &mut dyn Write) -> Result<bool, Box<dyn std::error::Error>> {
    let a = load_matrix(&args.matrix)?;
    let b = load_vector(&args.rhs)?;
    if b.empty {
        return Err(format!("{} holds no values", args.rhs.display()).into());
    }
    let mut options = SolveOptions::default().with_tolerance(args.tol);
    if let Some(m) = args.max_iter {
        options = options.with_max_iterations(m);
    }
    if let Some(g) = &args.guess {
        options = options.with_guess(load_vector(g)?.vector.into_data());
    }
    let report = cg_solve(a.data(), b.vector.data(), &options)?;
    let format = match args.format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    let text = render_report(&report, format)?;
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(report.converged)
}

pub fn cmd_reduce(args: &ReduceArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let decls: BTreeMap<String, SymShape> = args.decls.iter().cloned().collect();
    let result = parse_expr(&args.expr, &decls)
        .map_err(|e| e.to_string())
        .and_then(|e| reduce_to_onf(&e, &Target::new("out")).map_err(|e| e.to_string()));
    match result {
        Ok(program) => {
            let _ = out.write_all(emit_pseudocode(&program).as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn cmd_demo(out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match example::run_checks() {
        Ok(checks) => {
            for c in &checks {
                let _ = writeln!(out, "{}", c.line);
            }
            if checks.iter().all(|c| c.pass) {
                EXIT_OK
            } else {
                EXIT_ERROR
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &config.command {
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Reduce(a) => cmd_reduce(a, out, err),
        Command::Demo => cmd_demo(out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let config =
            CliConfig::try_parse_from(std::iter::once("moa-cg").chain(args.iter().copied()))
                .expect("arguments parse");
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&config, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn decl_flag() {
        let (name, shape) = parse_decl_arg("R=2,n").unwrap();
        assert_eq!(name, "R");
        assert_eq!(shape.to_string(), "<2 n>");
        assert!(parse_decl_arg("R").is_err());
        assert!(parse_decl_arg("R=2,m").is_err());
        assert!(parse_decl_arg("n=2").is_err());
    }

    #[test]
    fn reduce_dot_product() {
        let (code, out, _) = run_args(&[
            "reduce",
            "--expr",
            "ip(psi(<0>,R), psi(<0>,R))",
            "--decl",
            "R=2,n",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("sum(j, 0, n-1, R[j] * R[j])"), "{out}");
    }

    #[test]
    fn reduce_row_sum() {
        let (code, out, _) = run_args(&[
            "reduce", "--expr", "ip(A, p)", "--decl", "A=n,n", "--decl", "p=n",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("sum(j, 0, n-1, A[k*n + j] * p[j])"), "{out}");
    }

    #[test]
    fn reduce_vector_transpose() {
        let (code, out, _) = run_args(&["reduce", "--expr", "tr v", "--decl", "v=n"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out, "for k in [0, n):\n  out[k] := v[k]\n");
    }

    #[test]
    fn reduce_errors() {
        let (code, _, err) = run_args(&["reduce", "--expr", "ip(A, q)", "--decl", "A=n,n"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.starts_with("error:"));
        let (code, _, _) = run_args(&[
            "reduce", "--expr", "ip(A, p)", "--decl", "A=n,n", "--decl", "p=3",
        ]);
        assert_eq!(code, EXIT_ERROR);
    }

    #[test]
    fn demo_passes() {
        let (code, out, _) = run_args(&["demo"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("r0 = p0 = <-8 -3> PASS"));
        assert!(out.contains("alpha = 0.220544 (73/331) PASS"));
        assert!(out.contains("p1 = <-0.3512 0.7229> PASS"));
    }

    #[test]
    fn missing_required_flags_rejected() {
        assert!(CliConfig::try_parse_from(["moa-cg", "solve", "--matrix", "a.mtx"]).is_err());
        assert!(CliConfig::try_parse_from(["moa-cg", "reduce"]).is_err());
    }
}
