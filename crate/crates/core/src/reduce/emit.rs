//! C-like pseudocode for ONF programs.
//!
//! Loops are `for k in [0, n):` with a two-space indent per level, sums are
//! `sum(j, 0, n-1, body)` with an inclusive upper bound, and assignment is `:=`.
//! Binary operators follow C precedence; parentheses appear only where the C
//! reading would otherwise differ from the tree.

use std::fmt::Write;

use super::affine::Poly;
use super::onf::{FlatRef, OnfExpr, OnfProgram, Statement};
use crate::array::BinaryOp;

const INDENT: &str = "  ";

pub trait Pseudocode {
    fn write_pseudocode(&self, out: &mut String, depth: usize);
}

pub fn emit_pseudocode<P: Pseudocode + ?Sized>(p: &P) -> String {
    let mut out = String::new();
    p.write_pseudocode(&mut out, 0);
    out
}

impl Pseudocode for OnfProgram {
    fn write_pseudocode(&self, out: &mut String, depth: usize) {
        for s in &self.statements {
            match s {
                Statement::Assign(a) => {
                    let mut d = depth;
                    for l in &a.loops {
                        let _ = writeln!(
                            out,
                            "{}for {} in [0, {}):",
                            INDENT.repeat(d),
                            l.var,
                            l.extent
                        );
                        d += 1;
                    }
                    let lhs: Vec<String> = a.targets.iter().map(render_ref).collect();
                    let _ = writeln!(
                        out,
                        "{}{} := {}",
                        INDENT.repeat(d),
                        lhs.join(" := "),
                        render_expr(&a.rhs)
                    );
                }
                Statement::ExitIfConverged => {
                    let _ = writeln!(out, "{}exit if converged", INDENT.repeat(depth));
                }
            }
        }
    }
}

pub fn render_ref(r: &FlatRef) -> String {
    format!("{}[{}]", r.buffer, r.offset)
}

fn upper_bound(extent: &Poly) -> String {
    extent.add(&Poly::constant(-1)).compact()
}

fn precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Add | BinaryOp::Sub => 1,
        BinaryOp::Mul | BinaryOp::Div => 2,
    }
}

pub fn render_expr(e: &OnfExpr) -> String {
    match e {
        OnfExpr::Load(r) => render_ref(r),
        OnfExpr::Const(c) => format!("{c}"),
        OnfExpr::Sum { var, extent, body } => {
            format!(
                "sum({var}, 0, {}, {})",
                upper_bound(extent),
                render_expr(body)
            )
        }
        OnfExpr::Bin(op, l, r) => {
            let p = precedence(*op);
            let wrap = |child: &OnfExpr, right: bool| {
                let s = render_expr(child);
                match child {
                    OnfExpr::Bin(cop, ..) => {
                        let cp = precedence(*cop);
                        if cp < p || (right && cp == p) {
                            format!("({s})")
                        } else {
                            s
                        }
                    }
                    _ => s,
                }
            };
            format!("{} {} {}", wrap(l, false), op.symbol(), wrap(r, true))
        }
    }
}
