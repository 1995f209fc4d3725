//! Psi-reduction: from a symbolic expression to flat-index loop nests.
//!
//! The pipeline runs each rule family to a fixpoint, in this order:
//!
//! 1. transpose elimination on operands of rank <= 1,
//! 2. temporal index arithmetic (`<i> - <i> = <0>`, so `i` -> 0 and `i+1` -> 1),
//! 3. inner-product expansion into `Sum` over the shared axis,
//! 4. psi-to-gamma flattening: every access becomes `rav X[offset]` with an
//!    affine row-major offset.
//!
//! Steps 3 and 4 happen together while lowering. The result is then put into
//! a canonical form: buffer accesses come first in a product, and a product
//! of a factor with a nested `Sum` inside a `Sum` body becomes a double sum.

use std::collections::BTreeMap;

use thiserror::Error;

use super::affine::{Affine, Poly};
use super::onf::{Assign, BufferDecl, FlatRef, Loop, OnfExpr, OnfProgram, Statement};
use crate::array::BinaryOp;
use crate::expr::{infer_shape, Dim, Expr, ExprError, IndexComp, IndexLit, SymShape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Shape(#[from] ExprError),
    #[error("cannot reduce `{node}`: {reason}")]
    Unsupported { node: String, reason: String },
    #[error("offset `{offset}` into `{buffer}` is not a non-negative affine form")]
    NonAffine { buffer: String, offset: String },
}

/// Where the reduced expression is stored: one or more buffers, each written
/// starting at a base offset in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    slots: Vec<(String, Poly)>,
    len: Option<Poly>,
}

impl Target {
    pub fn new(buffer: impl Into<String>) -> Self {
        Target {
            slots: vec![(buffer.into(), Poly::zero())],
            len: None,
        }
    }

    pub fn at(buffer: impl Into<String>, base: Poly) -> Self {
        Target {
            slots: vec![(buffer.into(), base)],
            len: None,
        }
    }

    /// A target given as an expression `psi(<c...>, X)` or `X`: the slab of
    /// `X` the index selects. Temporal indices are shifted first.
    pub fn from_lhs(lhs: &Expr) -> Result<Self, ReduceError> {
        let lhs = simplify(lhs);
        let (index, name, shape) = match &lhs {
            Expr::Array { name, shape } => (Vec::new(), name, shape),
            Expr::Psi { index, array } => match array.as_ref() {
                Expr::Array { name, shape } => (constant_index(index, &lhs)?, name, shape),
                _ => return Err(unsupported(&lhs, "target must index a named array")),
            },
            _ => {
                return Err(unsupported(
                    &lhs,
                    "target must be a named array or psi of one",
                ))
            }
        };
        infer_shape(&lhs)?;
        let mut padded: Vec<Affine> = index
            .iter()
            .map(|&c| Affine::constant(Poly::constant(c as i64)))
            .collect();
        padded.resize(shape.rank(), Affine::constant(Poly::zero()));
        Ok(Target {
            slots: vec![(name.clone(), gamma(&padded, shape).constant)],
            len: Some(tau(shape)),
        })
    }

    /// Also store the same values into `other` (chained assignment).
    pub fn and(mut self, other: Target) -> Self {
        self.slots.extend(other.slots);
        self
    }

    pub fn with_len(mut self, len: Poly) -> Self {
        self.len = Some(len);
        self
    }
}

fn unsupported(e: &Expr, reason: &str) -> ReduceError {
    ReduceError::Unsupported {
        node: e.to_string(),
        reason: reason.to_string(),
    }
}

fn constant_index(index: &IndexLit, at: &Expr) -> Result<Vec<usize>, ReduceError> {
    index
        .as_constant()
        .ok_or_else(|| unsupported(at, "index still holds a temporal symbol"))
}

fn dim_poly(d: Dim) -> Poly {
    match d {
        Dim::Fixed(e) => Poly::constant(e as i64),
        Dim::N => Poly::n(),
    }
}

fn tau(s: &SymShape) -> Poly {
    s.dims()
        .iter()
        .fold(Poly::constant(1), |acc, &d| acc.mul(&dim_poly(d)))
}

/// Row-major offset of a full symbolic index (Horner's rule).
fn gamma(idx: &[Affine], s: &SymShape) -> Affine {
    idx.iter()
        .zip(s.dims())
        .fold(Affine::constant(Poly::zero()), |acc, (i, &d)| {
            acc.scale(&dim_poly(d)).add(i)
        })
}

fn eliminate_transposes(e: &Expr) -> Expr {
    match e {
        Expr::Transpose(inner) => {
            let inner = eliminate_transposes(inner);
            match infer_shape(&inner) {
                Ok(s) if s.rank() <= 1 => inner,
                _ => Expr::transpose(inner),
            }
        }
        _ => map_children(e, eliminate_transposes),
    }
}

fn shift_temporal(e: &Expr) -> Expr {
    match e {
        Expr::Psi { index, array } => {
            let index = IndexLit(
                index
                    .0
                    .iter()
                    .map(|c| match c {
                        IndexComp::I => IndexComp::Const(0),
                        IndexComp::IPlus1 => IndexComp::Const(1),
                        c => *c,
                    })
                    .collect(),
            );
            Expr::psi(index, shift_temporal(array))
        }
        _ => map_children(e, shift_temporal),
    }
}

fn map_children(e: &Expr, f: fn(&Expr) -> Expr) -> Expr {
    match e {
        Expr::Array { .. } | Expr::Scalar(_) => e.clone(),
        Expr::Psi { index, array } => Expr::psi(index.clone(), f(array)),
        Expr::Transpose(a) => Expr::transpose(f(a)),
        Expr::InnerProduct(l, r) => Expr::ip(f(l), f(r)),
        Expr::Pointwise(op, l, r) => Expr::binop(*op, f(l), f(r)),
        Expr::ReduceAdd(a) => Expr::reduce_add(f(a)),
    }
}

/// Expression-level rules (transpose elimination, then temporal index
/// arithmetic), repeated until nothing changes.
pub fn simplify(e: &Expr) -> Expr {
    let mut current = e.clone();
    loop {
        let next = shift_temporal(&eliminate_transposes(&current));
        if next == current {
            return current;
        }
        current = next;
    }
}

struct Lowering {
    fresh: usize,
}

impl Lowering {
    fn fresh(&mut self) -> String {
        self.fresh += 1;
        format!("%{}", self.fresh)
    }

    /// The element of `e` at the full index `idx`.
    fn lower(&mut self, e: &Expr, idx: &[Affine]) -> Result<OnfExpr, ReduceError> {
        Ok(match e {
            Expr::Array { name, shape } => OnfExpr::load(name.clone(), gamma(idx, shape)),
            Expr::Scalar(v) => OnfExpr::Const(*v),
            Expr::Psi { index, array } => {
                let mut full: Vec<Affine> = constant_index(index, e)?
                    .into_iter()
                    .map(|c| Affine::constant(Poly::constant(c as i64)))
                    .collect();
                full.extend_from_slice(idx);
                self.lower(array, &full)?
            }
            Expr::Transpose(a) => match idx {
                [] | [_] => self.lower(a, idx)?,
                [i, j] => self.lower(a, &[j.clone(), i.clone()])?,
                _ => return Err(unsupported(e, "transpose of rank > 2")),
            },
            Expr::InnerProduct(l, r) => {
                let ls = infer_shape(l)?;
                let split = ls.rank() - 1;
                let q = dim_poly(ls.dims()[split]);
                let v = self.fresh();
                let mut li = idx[..split].to_vec();
                li.push(Affine::var(v.clone()));
                let mut ri = vec![Affine::var(v.clone())];
                ri.extend_from_slice(&idx[split..]);
                let body = OnfExpr::bin(BinaryOp::Mul, self.lower(l, &li)?, self.lower(r, &ri)?);
                OnfExpr::sum(v, q, body)
            }
            Expr::Pointwise(op, l, r) => {
                let li: &[Affine] = if infer_shape(l)?.is_scalar() {
                    &[]
                } else {
                    idx
                };
                let ri: &[Affine] = if infer_shape(r)?.is_scalar() {
                    &[]
                } else {
                    idx
                };
                OnfExpr::bin(*op, self.lower(l, li)?, self.lower(r, ri)?)
            }
            Expr::ReduceAdd(a) => {
                let s = infer_shape(a)?;
                let v = self.fresh();
                let body = self.lower(a, &[Affine::var(v.clone())])?;
                OnfExpr::sum(v, dim_poly(s.dims()[0]), body)
            }
        })
    }
}

/// Buffer accesses first: `e * X[k]` becomes `X[k] * e` when `e` is not itself
/// an access. Multiplication commutes exactly in floating point.
fn accesses_first(e: OnfExpr) -> OnfExpr {
    match e {
        OnfExpr::Bin(op, l, r) => {
            let l = accesses_first(*l);
            let r = accesses_first(*r);
            if op == BinaryOp::Mul
                && matches!(r, OnfExpr::Load(_))
                && !matches!(l, OnfExpr::Load(_))
            {
                OnfExpr::bin(op, r, l)
            } else {
                OnfExpr::bin(op, l, r)
            }
        }
        OnfExpr::Sum { var, extent, body } => OnfExpr::sum(var, extent, accesses_first(*body)),
        e => e,
    }
}

/// Inside a `Sum` body, `x * sum(w, b)` with a sum-free `x` becomes
/// `sum(w, x * b)`, turning nested inner products into a double sum.
fn merge_sums(e: OnfExpr) -> OnfExpr {
    match e {
        OnfExpr::Sum { var, extent, body } => {
            let body = match merge_sums(*body) {
                OnfExpr::Bin(BinaryOp::Mul, x, inner) if !x.contains_sum() => match *inner {
                    OnfExpr::Sum {
                        var: w,
                        extent: we,
                        body: b,
                    } => OnfExpr::sum(w, we, OnfExpr::bin(BinaryOp::Mul, *x, *b)),
                    inner => OnfExpr::Bin(BinaryOp::Mul, x, Box::new(inner)),
                },
                b => b,
            };
            OnfExpr::sum(var, extent, body)
        }
        OnfExpr::Bin(op, l, r) => OnfExpr::bin(op, merge_sums(*l), merge_sums(*r)),
        e => e,
    }
}

/// Applies the canonicalizing rules until the expression stops changing.
pub fn normalize(e: OnfExpr) -> OnfExpr {
    let mut current = e;
    loop {
        let next = merge_sums(accesses_first(current.clone()));
        if next == current {
            return current;
        }
        current = next;
    }
}

const SUM_NAMES: [&str; 10] = ["j", "i", "h", "g", "f", "e", "d", "c", "b", "a"];
const LOOP_NAMES: [&str; 3] = ["k", "l", "m"];

fn sum_height(e: &OnfExpr) -> usize {
    match e {
        OnfExpr::Load(_) | OnfExpr::Const(_) => 0,
        OnfExpr::Bin(_, l, r) => sum_height(l).max(sum_height(r)),
        OnfExpr::Sum { body, .. } => 1 + sum_height(body),
    }
}

fn sum_name(height: usize) -> String {
    SUM_NAMES
        .get(height - 1)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("j{height}"))
}

fn loop_name(axis: usize) -> String {
    LOOP_NAMES
        .get(axis)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("k{axis}"))
}

/// Names each summation variable by how many sums nest inside it (the
/// innermost is `j`, the next `i`, ...). Nested sums never share a name.
fn rename_sums(e: &OnfExpr, renames: &mut Vec<(String, String)>) -> OnfExpr {
    match e {
        OnfExpr::Load(r) => {
            let map = |v: &str| {
                renames
                    .iter()
                    .rev()
                    .find(|(from, _)| from == v)
                    .map(|(_, to)| to.clone())
                    .unwrap_or_else(|| v.to_string())
            };
            OnfExpr::Load(FlatRef::new(r.buffer.clone(), r.offset.rename(&map)))
        }
        OnfExpr::Const(c) => OnfExpr::Const(*c),
        OnfExpr::Bin(op, l, r) => {
            OnfExpr::bin(*op, rename_sums(l, renames), rename_sums(r, renames))
        }
        OnfExpr::Sum { var, extent, body } => {
            let name = sum_name(sum_height(e));
            renames.push((var.clone(), name.clone()));
            let body = rename_sums(body, renames);
            renames.pop();
            OnfExpr::sum(name, extent.clone(), body)
        }
    }
}

/// Reduces `e` to a single assignment statement storing its value into `target`.
pub fn reduce_to_onf(e: &Expr, target: &Target) -> Result<OnfProgram, ReduceError> {
    let shape = infer_shape(e)?;
    let simplified = simplify(e);

    let mut lowering = Lowering { fresh: 0 };
    let out_vars: Vec<String> = (0..shape.rank()).map(|_| lowering.fresh()).collect();
    let idx: Vec<Affine> = out_vars.iter().map(|v| Affine::var(v.clone())).collect();
    let rhs = normalize(lowering.lower(&simplified, &idx)?);

    let loop_renames: Vec<(String, String)> = out_vars
        .iter()
        .enumerate()
        .map(|(axis, v)| (v.clone(), loop_name(axis)))
        .collect();
    let mut renames = loop_renames.clone();
    let rhs = rename_sums(&rhs, &mut renames);

    let flat_shape = SymShape(shape.dims().to_vec());
    let element = gamma(&idx, &flat_shape);
    let rename_loop = |v: &str| {
        loop_renames
            .iter()
            .find(|(from, _)| from == v)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| v.to_string())
    };
    let targets: Vec<FlatRef> = target
        .slots
        .iter()
        .map(|(buf, base)| {
            FlatRef::new(
                buf.clone(),
                Affine::constant(base.clone())
                    .add(&element)
                    .rename(&rename_loop),
            )
        })
        .collect();
    let loops = shape
        .dims()
        .iter()
        .enumerate()
        .map(|(axis, &d)| Loop {
            var: loop_name(axis),
            extent: dim_poly(d),
        })
        .collect();

    let declared = e.arrays();
    let mut buffers: Vec<BufferDecl> = declared
        .iter()
        .map(|(name, s)| BufferDecl {
            name: name.clone(),
            len: tau(s),
        })
        .collect();
    for (buf, base) in &target.slots {
        if !declared.contains_key(buf) {
            let len = target.len.clone().unwrap_or_else(|| base.add(&tau(&shape)));
            buffers.push(BufferDecl {
                name: buf.clone(),
                len,
            });
        }
    }

    let program = OnfProgram {
        buffers,
        statements: vec![Statement::Assign(Assign {
            loops,
            targets,
            rhs,
        })],
    };
    check_affine(&program)?;
    Ok(program)
}

/// Verifies every offset is `c0 + sum(c_v * v)` with non-negative polynomial
/// coefficients over variables bound by an enclosing loop or sum.
pub fn check_affine(p: &OnfProgram) -> Result<(), ReduceError> {
    for a in p.assignments() {
        let mut bound: Vec<String> = a.loops.iter().map(|l| l.var.clone()).collect();
        for t in &a.targets {
            check_ref(t, &bound)?;
        }
        check_expr(&a.rhs, &mut bound)?;
    }
    Ok(())
}

fn check_ref(r: &FlatRef, bound: &[String]) -> Result<(), ReduceError> {
    let ok = r.offset.constant.is_nonnegative()
        && r.offset
            .terms
            .iter()
            .all(|(v, c)| c.is_nonnegative() && bound.iter().any(|b| b == v));
    if ok {
        Ok(())
    } else {
        Err(ReduceError::NonAffine {
            buffer: r.buffer.clone(),
            offset: r.offset.to_string(),
        })
    }
}

fn check_expr(e: &OnfExpr, bound: &mut Vec<String>) -> Result<(), ReduceError> {
    match e {
        OnfExpr::Load(r) => check_ref(r, bound),
        OnfExpr::Const(_) => Ok(()),
        OnfExpr::Bin(_, l, r) => {
            check_expr(l, bound)?;
            check_expr(r, bound)
        }
        OnfExpr::Sum { var, body, .. } => {
            bound.push(var.clone());
            let res = check_expr(body, bound);
            bound.pop();
            res
        }
    }
}

/// Declared shapes for building expressions from text.
pub fn decls<'a>(
    items: impl IntoIterator<Item = (&'a str, SymShape)>,
) -> BTreeMap<String, SymShape> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
