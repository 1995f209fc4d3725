//! The conjugate gradient iteration, written as MoA expressions over two-row
//! recurrence arrays `X`, `R`, `P` (shape `<2 n>`) and reduced to ONF.

use std::fmt::Write;

use super::emit::Pseudocode;
use super::lower::{decls, reduce_to_onf, ReduceError, Target};
use super::onf::{OnfProgram, Statement};
use crate::expr::{parse_expr, Dim, SymShape};

/// Base case, then the loop body of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOnf {
    /// Copies the guess `x0` into row 0 of `X` and forms `P = R = b - A x`.
    pub base_case: OnfProgram,
    /// Computes row 1 of `X`, `R`, `P` from row 0, then copies row 1 back to row 0.
    pub step: OnfProgram,
}

/// `(lhs, rhs)` pairs of the base case.
pub const BASE_CASE: [(&str, &str); 2] = [
    ("psi(<0>, X)", "x0"),
    ("psi(<0>, P)", "b - ip(A, psi(<0>, X))"),
];

const ALPHA: &str = "(ip(tr psi(<i>, R), psi(<i>, R)) / ip(tr psi(<i>, P), ip(A, psi(<i>, P))))";
const BETA: &str = "(ip(tr psi(<i+1>, R), psi(<i+1>, R)) / ip(tr psi(<i>, R), psi(<i>, R)))";

/// `(lhs, rhs)` pairs of the loop body with alpha and beta substituted inline.
pub fn step_equations() -> [(String, String); 3] {
    [
        (
            "psi(<i+1>, X)".into(),
            format!("psi(<i>, X) + {ALPHA} * psi(<i>, P)"),
        ),
        (
            "psi(<i+1>, R)".into(),
            format!("psi(<i>, R) - {ALPHA} * ip(A, psi(<i>, P))"),
        ),
        (
            "psi(<i+1>, P)".into(),
            format!("psi(<i+1>, R) + {BETA} * psi(<i>, P)"),
        ),
    ]
}

fn cg_decls() -> std::collections::BTreeMap<String, SymShape> {
    let row2 = SymShape(vec![Dim::Fixed(2), Dim::N]);
    decls([
        ("A", SymShape(vec![Dim::N, Dim::N])),
        ("b", SymShape(vec![Dim::N])),
        ("x0", SymShape(vec![Dim::N])),
        ("X", row2.clone()),
        ("R", row2.clone()),
        ("P", row2),
    ])
}

fn reduce_equation(lhs: &str, rhs: &str) -> Result<OnfProgram, ReduceError> {
    let d = cg_decls();
    let parse = |t: &str| {
        parse_expr(t, &d).map_err(|e| ReduceError::Unsupported {
            node: t.to_string(),
            reason: e.to_string(),
        })
    };
    let target = Target::from_lhs(&parse(lhs)?)?;
    reduce_to_onf(&parse(rhs)?, &target)
}

fn build() -> Result<CgOnf, ReduceError> {
    let mut base_case = reduce_equation(BASE_CASE[0].0, BASE_CASE[0].1)?;
    // P and R share the initial value.
    let d = cg_decls();
    let residual = parse_expr(BASE_CASE[1].1, &d).expect("fixed text");
    let target = Target::from_lhs(&parse_expr(BASE_CASE[1].0, &d).expect("fixed text"))?.and(
        Target::from_lhs(&parse_expr("psi(<0>, R)", &d).expect("fixed text"))?,
    );
    base_case.extend(reduce_to_onf(&residual, &target)?);

    let [x, r, p] = step_equations();
    let mut step = reduce_equation(&x.0, &x.1)?;
    step.extend(reduce_equation(&r.0, &r.1)?);
    step.statements.push(Statement::ExitIfConverged);
    step.extend(reduce_equation(&p.0, &p.1)?);
    for name in ["X", "R", "P"] {
        step.extend(reduce_equation(
            &format!("psi(<0>, {name})"),
            &format!("psi(<1>, {name})"),
        )?);
    }
    Ok(CgOnf { base_case, step })
}

/// Reduces the base case and loop body of conjugate gradient to ONF.
pub fn reduce_cg() -> CgOnf {
    build().expect("the conjugate gradient equations are well-shaped")
}

impl Pseudocode for CgOnf {
    fn write_pseudocode(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        self.base_case.write_pseudocode(out, depth);
        let _ = writeln!(out, "{pad}repeat:");
        self.step.write_pseudocode(out, depth + 1);
        let _ = writeln!(out, "{pad}return X[n + k] for k in [0, n)");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::emit::emit_pseudocode;

    #[test]
    fn program_shape() {
        let cg = reduce_cg();
        assert_eq!(cg.base_case.assignments().count(), 2);
        assert_eq!(cg.step.statements.len(), 7);
        assert_eq!(cg.step.statements[2], Statement::ExitIfConverged);
        let text = emit_pseudocode(&cg);
        assert!(text.contains("X[n + k] := X[k] + P[k] *"), "{text}");
        assert!(
            text.contains("P[k] := R[k] := b[k] - sum(j, 0, n-1, A[k*n + j] * X[j])"),
            "{text}"
        );
    }
}
