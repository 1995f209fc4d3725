//! Mathematics of Arrays (MoA) with psi-reduction, applied to conjugate gradient.
//!
//! - [`array`]: array values and the algebra's total functions (psi, gamma,
//!   take/drop/concat, inner product, ...).
//! - [`expr`]: symbolic expressions, shape inference, parsing and evaluation.
//! - [`reduce`]: rewriting expressions into flat-index loop nests and
//!   emitting them as pseudocode.
//! - [`cg`]: a conjugate gradient solver that runs the reduced iteration
//!   directly on two-row buffers.
//! - [`io`]: matrix/vector loading and report writing.
//! - [`example`]: the worked 2x2 system and its expected values.

pub mod array;
pub mod cg;
pub mod cli;
pub mod example;
pub mod expr;
pub mod io;
pub mod reduce;
