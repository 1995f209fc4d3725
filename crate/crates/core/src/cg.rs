//! Conjugate gradient on two-row recurrence buffers.
//!
//! `X`, `R` and `P` each hold two rows of length `n` in one flat buffer: row 0
//! is the current iterate and row 1 the next. A step fills row 1 with exactly
//! the arithmetic of the reduced ONF (same operand order, sums accumulated from
//! zero in ascending order), then copies row 1 over row 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CgError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix is not symmetric: a[{i}][{j}] and a[{j}][{i}] differ by {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },
    #[error("p·Ap = {pap:e} at iteration {iteration}: matrix is not positive definite")]
    NotPositiveDefinite { pap: f64, iteration: usize },
    #[error("invalid options: {0}")]
    Options(String),
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Relative residual threshold `|r| / |b|` (absolute when `b = 0`).
    pub tolerance: f64,
    /// Defaults to `2n`.
    pub max_iterations: Option<usize>,
    /// Defaults to zeros.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: None,
            initial_guess: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max: usize) -> Self {
        self.max_iterations = Some(max);
        self
    }

    pub fn with_guess(mut self, guess: Vec<f64>) -> Self {
        self.initial_guess = Some(guess);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm before the first step and after each step.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CgState {
    a: Vec<f64>,
    b: Vec<f64>,
    x: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    n: usize,
    iteration: usize,
    residual_norm: f64,
}

fn sum_squares(v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in v {
        acc += x * x;
    }
    acc
}

impl CgState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn x_buf(&self) -> &[f64] {
        &self.x
    }

    pub fn r_buf(&self) -> &[f64] {
        &self.r
    }

    pub fn p_buf(&self) -> &[f64] {
        &self.p
    }

    /// Row 0 of `X`.
    pub fn solution(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn residual(&self) -> &[f64] {
        &self.r[..self.n]
    }

    pub fn direction(&self) -> &[f64] {
        &self.p[..self.n]
    }

    /// Number of reals held by the `X`, `R`, `P` recurrence buffers.
    pub fn working_len(&self) -> usize {
        self.x.len() + self.r.len() + self.p.len()
    }

    /// The buffers under the names the reduced ONF program uses.
    pub fn onf_buffers(&self) -> BTreeMap<String, Vec<f64>> {
        [
            ("A", self.a.clone()),
            ("b", self.b.clone()),
            ("x0", self.x[..self.n].to_vec()),
            ("X", self.x.clone()),
            ("R", self.r.clone()),
            ("P", self.p.clone()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn step(&mut self) -> Result<(), CgError> {
        let n = self.n;
        let a = &self.a;
        let rr_old = sum_squares(&self.r[..n]);
        if rr_old == 0.0 {
            return Ok(());
        }
        let p = &self.p;
        let mut pap = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += p[i] * (a[i * n + j] * p[j]);
            }
            pap += row;
        }
        if pap.is_nan() || pap <= 0.0 {
            return Err(CgError::NotPositiveDefinite {
                pap,
                iteration: self.iteration,
            });
        }
        let alpha = rr_old / pap;
        for k in 0..n {
            self.x[n + k] = self.x[k] + self.p[k] * alpha;
        }
        for k in 0..n {
            let mut ap = 0.0;
            for j in 0..n {
                ap += a[k * n + j] * self.p[j];
            }
            self.r[n + k] = self.r[k] - alpha * ap;
        }
        let rr_new = sum_squares(&self.r[n..]);
        let beta = rr_new / rr_old;
        for k in 0..n {
            self.p[n + k] = self.r[n + k] + self.p[k] * beta;
        }
        self.residual_norm = rr_new.sqrt();
        self.x.copy_within(n.., 0);
        self.r.copy_within(n.., 0);
        self.p.copy_within(n.., 0);
        self.iteration += 1;
        Ok(())
    }
}

/// Validates the system and runs the base case: `X` row 0 = guess,
/// `P` row 0 = `R` row 0 = `b - A x`.
pub fn cg_init(a: &[f64], b: &[f64], options: &SolveOptions) -> Result<CgState, CgError> {
    let n = b.len();
    if n == 0 {
        return Err(CgError::Shape("right-hand side is empty".into()));
    }
    if a.len() != n * n {
        return Err(CgError::Shape(format!(
            "matrix has {} entries, expected {n}x{n} = {}",
            a.len(),
            n * n
        )));
    }
    if options.tolerance.is_nan() || options.tolerance < 0.0 {
        return Err(CgError::Options(format!(
            "tolerance must be >= 0, got {}",
            options.tolerance
        )));
    }
    if options.max_iterations == Some(0) {
        return Err(CgError::Options("max_iterations must be >= 1".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        for j in i + 1..n {
            let diff = (a[i * n + j] - a[j * n + i]).abs();
            if diff > SYMMETRY_TOLERANCE * scale {
                return Err(CgError::Asymmetric { i, j, diff });
            }
        }
    }
    let mut x = vec![0.0; 2 * n];
    if let Some(g) = &options.initial_guess {
        if g.len() != n {
            return Err(CgError::Shape(format!(
                "initial guess has length {}, expected {n}",
                g.len()
            )));
        }
        x[..n].copy_from_slice(g);
    }
    let mut r = vec![0.0; 2 * n];
    for k in 0..n {
        let mut ax = 0.0;
        for j in 0..n {
            ax += a[k * n + j] * x[j];
        }
        r[k] = b[k] - ax;
    }
    let p = r.clone();
    let residual_norm = sum_squares(&r[..n]).sqrt();
    Ok(CgState {
        a: a.to_vec(),
        b: b.to_vec(),
        x,
        r,
        p,
        n,
        iteration: 0,
        residual_norm,
    })
}

pub fn cg_step(state: &mut CgState) -> Result<(), CgError> {
    state.step()
}

pub fn residual_norm(state: &CgState) -> f64 {
    state.residual_norm
}

/// Steps until `|r| <= tolerance * |b|` (or `|r| <= tolerance` when `b = 0`),
/// or until the iteration limit. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn cg_solve(a: &[f64], b: &[f64], options: &SolveOptions) -> Result<SolveReport, CgError> {
    let mut state = cg_init(a, b, options)?;
    let max = options.max_iterations.unwrap_or(2 * state.n);
    let b_norm = sum_squares(b).sqrt();
    let threshold = if b_norm == 0.0 {
        options.tolerance
    } else {
        options.tolerance * b_norm
    };
    let mut history = vec![state.residual_norm];
    let mut converged = state.residual_norm <= threshold;
    while !converged && state.iteration < max {
        state.step()?;
        history.push(state.residual_norm);
        converged = state.residual_norm <= threshold;
    }
    Ok(SolveReport {
        solution: state.solution().to_vec(),
        iterations: state.iteration,
        converged,
        residual_history: history,
    })
}
