//! The worked 2x2 example: `A = [[4, 1], [1, 3]]`, `b = <1 2>`, guess `<2 1>`.
//!
//! The expected values here are the only copy; both `moa-cg demo` and the
//! acceptance tests check against them.

use crate::cg::{cg_init, cg_step, CgError, CgState, SolveOptions};

pub const A: [f64; 4] = [4.0, 1.0, 1.0, 3.0];
pub const B: [f64; 2] = [1.0, 2.0];
pub const GUESS: [f64; 2] = [2.0, 1.0];

/// Exact in floating point: every intermediate is a small integer.
pub const R0: [f64; 2] = [-8.0, -3.0];
pub const ALPHA_NUM: f64 = 73.0;
pub const ALPHA_DEN: f64 = 331.0;
/// Published to four decimals.
pub const X1: [f64; 2] = [0.2356, 0.3384];
pub const R1: [f64; 2] = [-0.2810, 0.7492];
pub const P1: [f64; 2] = [-0.3512, 0.7229];
pub const SOLUTION: [f64; 2] = [1.0 / 11.0, 7.0 / 11.0];

pub const VECTOR_TOLERANCE: f64 = 5e-4;
pub const ALPHA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub line: String,
    pub pass: bool,
}

pub fn initial_state() -> Result<CgState, CgError> {
    cg_init(&A, &B, &SolveOptions::default().with_guess(GUESS.to_vec()))
}

/// The step length of the first iteration, `r0.r0 / p0.Ap0`.
pub fn first_alpha(state: &CgState) -> f64 {
    let n = state.n();
    let (a, r, p) = (state.matrix(), state.residual(), state.direction());
    let rr: f64 = r.iter().map(|v| v * v).sum();
    let pap: f64 = (0..n)
        .map(|i| p[i] * (0..n).map(|j| a[i * n + j] * p[j]).sum::<f64>())
        .sum();
    rr / pap
}

fn vec_text(v: &[f64], decimals: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.decimals$}")).collect();
    format!("<{}>", parts.join(" "))
}

fn within(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Runs the base case and one step, comparing each quantity to the expected
/// values above. Vector lines show the expected value, the verdict, then what
/// was computed.
pub fn run_checks() -> Result<Vec<Check>, CgError> {
    let mut state = initial_state()?;
    let mut checks = Vec::new();

    let r0 = state.residual().to_vec();
    let pass = r0 == R0 && state.direction() == R0;
    checks.push(Check {
        name: "r0",
        line: format!("r0 = p0 = {} {}", vec_text(&r0, 0), verdict(pass)),
        pass,
    });

    let alpha = first_alpha(&state);
    let pass = (alpha - ALPHA_NUM / ALPHA_DEN).abs() <= ALPHA_TOLERANCE;
    checks.push(Check {
        name: "alpha",
        line: format!(
            "alpha = {alpha:.6} ({}/{}) {}",
            ALPHA_NUM,
            ALPHA_DEN,
            verdict(pass)
        ),
        pass,
    });

    cg_step(&mut state)?;
    for (name, got, want) in [
        ("x1", state.solution(), &X1),
        ("r1", state.residual(), &R1),
        ("p1", state.direction(), &P1),
    ] {
        let pass = within(got, want, VECTOR_TOLERANCE);
        checks.push(Check {
            name,
            line: format!(
                "{name} = {} {} (computed {})",
                vec_text(want, 4),
                verdict(pass),
                vec_text(got, 6)
            ),
            pass,
        });
    }
    Ok(checks)
}
