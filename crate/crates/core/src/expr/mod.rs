//! Symbolic MoA expressions with declared (possibly `n`-parameterized) shapes.
//!
//! An [`Expr`] is the input to psi-reduction. [`infer_shape`] applies the shape
//! laws of the algebra without evaluating anything, and [`eval`] gives the
//! denotational value the reducer's output is checked against.

mod eval;
mod parse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::array::{ArrayError, BinaryOp, Shape};

pub use eval::{eval, Binding};
pub use parse::{parse_expr, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("shape error in `{expr}`: {reason}")]
    Shape { expr: String, reason: String },
    #[error("unbound array `{0}`")]
    Unbound(String),
    #[error("array `{name}` is bound with shape {bound} but declared {declared}")]
    BindingShape {
        name: String,
        declared: SymShape,
        bound: Shape,
    },
    #[error("inconsistent value for n: {0} and {1}")]
    InconsistentN(usize, usize),
    #[error("expression uses the symbolic dimension n but no binding fixes its value")]
    UnresolvedN,
    #[error(transparent)]
    Array(#[from] ArrayError),
}

/// One extent of a declared shape: a constant or the problem size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Fixed(usize),
    N,
}

impl Dim {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Dim::Fixed(e) => e,
            Dim::N => n,
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Fixed(e) => write!(f, "{e}"),
            Dim::N => write!(f, "n"),
        }
    }
}

/// A shape whose extents may mention `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymShape(pub Vec<Dim>);

impl SymShape {
    pub fn scalar() -> Self {
        SymShape(Vec::new())
    }

    pub fn fixed(extents: &[usize]) -> Self {
        SymShape(extents.iter().map(|&e| Dim::Fixed(e)).collect())
    }

    pub fn dims(&self) -> &[Dim] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mentions_n(&self) -> bool {
        self.0.contains(&Dim::N)
    }

    pub fn resolve(&self, n: usize) -> Shape {
        Shape::new(self.0.iter().map(|d| d.resolve(n)).collect::<Vec<_>>())
    }

    /// Reads a declaration such as `2,n` or `n,n`; the empty string declares a scalar.
    pub fn parse_decl(text: &str) -> Option<SymShape> {
        let text = text.trim();
        if text.is_empty() {
            return Some(SymShape::scalar());
        }
        text.split(',')
            .map(|t| match t.trim() {
                "n" => Some(Dim::N),
                t => t.parse().ok().map(Dim::Fixed),
            })
            .collect::<Option<Vec<_>>>()
            .map(SymShape)
    }
}

impl From<&Shape> for SymShape {
    fn from(s: &Shape) -> Self {
        SymShape::fixed(s.extents())
    }
}

impl fmt::Display for SymShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "Θ");
        }
        let parts: Vec<String> = self.0.iter().map(Dim::to_string).collect();
        write!(f, "<{}>", parts.join(" "))
    }
}

/// A component of an index literal. `I` is the temporal index of the current
/// row in the two-row recurrence window; `IPlus1` the row after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexComp {
    Const(usize),
    I,
    IPlus1,
}

impl fmt::Display for IndexComp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexComp::Const(c) => write!(f, "{c}"),
            IndexComp::I => write!(f, "i"),
            IndexComp::IPlus1 => write!(f, "i+1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexLit(pub Vec<IndexComp>);

impl IndexLit {
    pub fn constant(components: &[usize]) -> Self {
        IndexLit(components.iter().map(|&c| IndexComp::Const(c)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Constant components, if the literal has no temporal symbols left.
    pub fn as_constant(&self) -> Option<Vec<usize>> {
        self.0
            .iter()
            .map(|c| match c {
                IndexComp::Const(v) => Some(*v),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for IndexLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(IndexComp::to_string).collect();
        write!(f, "<{}>", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Array { name: String, shape: SymShape },
    Scalar(f64),
    Psi { index: IndexLit, array: Box<Expr> },
    Transpose(Box<Expr>),
    InnerProduct(Box<Expr>, Box<Expr>),
    Pointwise(BinaryOp, Box<Expr>, Box<Expr>),
    ReduceAdd(Box<Expr>),
}

impl Expr {
    pub fn array(name: impl Into<String>, shape: SymShape) -> Expr {
        Expr::Array {
            name: name.into(),
            shape,
        }
    }

    pub fn psi(index: IndexLit, array: Expr) -> Expr {
        Expr::Psi {
            index,
            array: Box::new(array),
        }
    }

    pub fn transpose(e: Expr) -> Expr {
        Expr::Transpose(Box::new(e))
    }

    pub fn ip(l: Expr, r: Expr) -> Expr {
        Expr::InnerProduct(Box::new(l), Box::new(r))
    }

    pub fn binop(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Pointwise(op, Box::new(l), Box::new(r))
    }

    pub fn reduce_add(e: Expr) -> Expr {
        Expr::ReduceAdd(Box::new(e))
    }

    /// Free arrays with their declared shapes, in name order.
    pub fn arrays(&self) -> BTreeMap<String, SymShape> {
        let mut out = BTreeMap::new();
        self.collect_arrays(&mut out);
        out
    }

    fn collect_arrays(&self, out: &mut BTreeMap<String, SymShape>) {
        match self {
            Expr::Array { name, shape } => {
                out.insert(name.clone(), shape.clone());
            }
            Expr::Scalar(_) => {}
            Expr::Psi { array, .. } => array.collect_arrays(out),
            Expr::Transpose(e) | Expr::ReduceAdd(e) => e.collect_arrays(out),
            Expr::InnerProduct(l, r) | Expr::Pointwise(_, l, r) => {
                l.collect_arrays(out);
                r.collect_arrays(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Array { .. } | Expr::Scalar(_) => 0,
            Expr::Psi { array: e, .. } | Expr::Transpose(e) | Expr::ReduceAdd(e) => 1 + e.depth(),
            Expr::InnerProduct(l, r) | Expr::Pointwise(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Counts nodes matching `pred` anywhere in the tree.
    pub fn count(&self, pred: &dyn Fn(&Expr) -> bool) -> usize {
        let own = usize::from(pred(self));
        own + match self {
            Expr::Array { .. } | Expr::Scalar(_) => 0,
            Expr::Psi { array: e, .. } | Expr::Transpose(e) | Expr::ReduceAdd(e) => e.count(pred),
            Expr::InnerProduct(l, r) | Expr::Pointwise(_, l, r) => l.count(pred) + r.count(pred),
        }
    }
}

/// Prints in the textual grammar accepted by [`parse_expr`]. Binary
/// operations are always parenthesized so the text re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Array { name, .. } => write!(f, "{name}"),
            Expr::Scalar(v) => write!(f, "{v:?}"),
            Expr::Psi { index, array } => write!(f, "psi({index}, {array})"),
            Expr::Transpose(e) => write!(f, "tr {e}"),
            Expr::InnerProduct(l, r) => write!(f, "ip({l}, {r})"),
            Expr::Pointwise(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::ReduceAdd(e) => write!(f, "red({e})"),
        }
    }
}

fn shape_err(e: &Expr, reason: impl Into<String>) -> ExprError {
    ExprError::Shape {
        expr: e.to_string(),
        reason: reason.into(),
    }
}

/// Static shape of an expression under the shape laws of the algebra.
pub fn infer_shape(e: &Expr) -> Result<SymShape, ExprError> {
    match e {
        Expr::Array { shape, .. } => Ok(shape.clone()),
        Expr::Scalar(_) => Ok(SymShape::scalar()),
        Expr::Psi { index, array } => {
            let s = infer_shape(array)?;
            if index.len() > s.rank() {
                return Err(shape_err(
                    e,
                    format!("index {index} is longer than rank {} of {s}", s.rank()),
                ));
            }
            for (axis, (c, d)) in index.0.iter().zip(&s.0).enumerate() {
                let bound = match d {
                    Dim::Fixed(x) => *x,
                    Dim::N => continue,
                };
                let hi = match c {
                    IndexComp::Const(v) => *v,
                    IndexComp::I => 0,
                    IndexComp::IPlus1 => 1,
                };
                if hi >= bound {
                    return Err(shape_err(
                        e,
                        format!(
                            "index component {c} out of bounds on axis {axis} (extent {bound})"
                        ),
                    ));
                }
            }
            Ok(SymShape(s.0[index.len()..].to_vec()))
        }
        Expr::Transpose(inner) => {
            let s = infer_shape(inner)?;
            match s.rank() {
                0 | 1 => Ok(s),
                2 => Ok(SymShape(vec![s.0[1], s.0[0]])),
                r => Err(shape_err(
                    e,
                    format!("transpose of rank {r} is not supported"),
                )),
            }
        }
        Expr::InnerProduct(l, r) => {
            let ls = infer_shape(l)?;
            let rs = infer_shape(r)?;
            if ls.is_scalar() || rs.is_scalar() {
                return Err(shape_err(
                    e,
                    format!("inner product operands need rank >= 1, got {ls} and {rs}"),
                ));
            }
            let q_left = ls.0[ls.rank() - 1];
            let q_right = rs.0[0];
            if q_left != q_right {
                return Err(shape_err(
                    e,
                    format!("inner extents differ: left {q_left}, right {q_right}"),
                ));
            }
            let mut out = ls.0[..ls.rank() - 1].to_vec();
            out.extend_from_slice(&rs.0[1..]);
            Ok(SymShape(out))
        }
        Expr::Pointwise(op, l, r) => {
            let ls = infer_shape(l)?;
            let rs = infer_shape(r)?;
            if ls == rs || rs.is_scalar() {
                Ok(ls)
            } else if ls.is_scalar() {
                Ok(rs)
            } else {
                Err(shape_err(
                    e,
                    format!("pointwise {} on shapes {ls} and {rs}", op.symbol()),
                ))
            }
        }
        Expr::ReduceAdd(inner) => {
            let s = infer_shape(inner)?;
            if s.rank() != 1 {
                return Err(shape_err(e, format!("reduction expects a vector, got {s}")));
            }
            Ok(SymShape::scalar())
        }
    }
}
