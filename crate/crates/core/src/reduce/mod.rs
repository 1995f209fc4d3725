//! Psi-reduction of expressions to operational normal form (ONF), a reference
//! executor for ONF programs, and pseudocode emission.

pub mod affine;
mod cg;
mod emit;
mod lower;
mod onf;

pub use affine::{Affine, Poly};
pub use cg::{reduce_cg, step_equations, CgOnf, BASE_CASE};
pub use emit::{emit_pseudocode, render_expr, render_ref, Pseudocode};
pub use lower::{check_affine, normalize, reduce_to_onf, simplify, ReduceError, Target};
pub use onf::{
    alpha_eq_assign, alpha_eq_program, eval_onf, Assign, BufferDecl, FlatRef, Loop, OnfError,
    OnfExpr, OnfProgram, Statement,
};
