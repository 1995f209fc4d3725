//! Operational normal form: loop nests over flat buffers with affine offsets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::affine::{Affine, Poly};
use crate::array::BinaryOp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OnfError {
    #[error("buffer `{0}` is not bound")]
    MissingBuffer(String),
    #[error("buffer `{name}` has length {actual}, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: i64,
        actual: usize,
    },
    #[error("offset {offset} out of bounds for buffer `{name}` of length {len}")]
    OutOfBounds {
        name: String,
        offset: i64,
        len: usize,
    },
    #[error("loop variable `{0}` is not bound")]
    UnboundVar(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// A flat buffer access `buffer[offset]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlatRef {
    pub buffer: String,
    pub offset: Affine,
}

impl FlatRef {
    pub fn new(buffer: impl Into<String>, offset: Affine) -> Self {
        FlatRef {
            buffer: buffer.into(),
            offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OnfExpr {
    Load(FlatRef),
    Const(f64),
    Bin(BinaryOp, Box<OnfExpr>, Box<OnfExpr>),
    /// `sum(var, 0, extent-1, body)`, accumulated in ascending order from 0.
    Sum {
        var: String,
        extent: Poly,
        body: Box<OnfExpr>,
    },
}

impl OnfExpr {
    pub fn load(buffer: impl Into<String>, offset: Affine) -> Self {
        OnfExpr::Load(FlatRef::new(buffer, offset))
    }

    pub fn bin(op: BinaryOp, l: OnfExpr, r: OnfExpr) -> Self {
        OnfExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn sum(var: impl Into<String>, extent: Poly, body: OnfExpr) -> Self {
        OnfExpr::Sum {
            var: var.into(),
            extent,
            body: Box::new(body),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            OnfExpr::Load(r) => {
                for v in r.offset.vars() {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.to_string());
                    }
                }
            }
            OnfExpr::Const(_) => {}
            OnfExpr::Bin(_, l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            OnfExpr::Sum { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn buffers(&self, out: &mut BTreeSet<String>) {
        self.visit(&mut |e| {
            if let OnfExpr::Load(r) = e {
                out.insert(r.buffer.clone());
            }
        });
    }

    pub fn visit(&self, f: &mut dyn FnMut(&OnfExpr)) {
        f(self);
        match self {
            OnfExpr::Load(_) | OnfExpr::Const(_) => {}
            OnfExpr::Bin(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            OnfExpr::Sum { body, .. } => body.visit(f),
        }
    }

    pub fn contains_sum(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, OnfExpr::Sum { .. }));
        found
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loop {
    pub var: String,
    pub extent: Poly,
}

/// `for loops: t0 := t1 := ... := rhs`, nested outermost first.
#[derive(Debug, Clone, PartialEq)]
pub struct Assign {
    pub loops: Vec<Loop>,
    pub targets: Vec<FlatRef>,
    pub rhs: OnfExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Assign(Assign),
    /// Marks where a driver tests for convergence. It has no effect on buffers.
    ExitIfConverged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferDecl {
    pub name: String,
    pub len: Poly,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OnfProgram {
    pub buffers: Vec<BufferDecl>,
    pub statements: Vec<Statement>,
}

impl OnfProgram {
    pub fn assignments(&self) -> impl Iterator<Item = &Assign> {
        self.statements.iter().filter_map(|s| match s {
            Statement::Assign(a) => Some(a),
            Statement::ExitIfConverged => None,
        })
    }

    /// Appends `other`, merging buffer declarations by name.
    pub fn extend(&mut self, other: OnfProgram) {
        for b in other.buffers {
            if !self.buffers.iter().any(|d| d.name == b.name) {
                self.buffers.push(b);
            }
        }
        self.statements.extend(other.statements);
    }

    /// Every offset in the program: targets and loads.
    pub fn offsets(&self) -> Vec<&FlatRef> {
        let mut out = Vec::new();
        for a in self.assignments() {
            out.extend(a.targets.iter());
            collect_loads(&a.rhs, &mut out);
        }
        out
    }
}

fn collect_loads<'a>(e: &'a OnfExpr, out: &mut Vec<&'a FlatRef>) {
    match e {
        OnfExpr::Load(r) => out.push(r),
        OnfExpr::Const(_) => {}
        OnfExpr::Bin(_, l, r) => {
            collect_loads(l, out);
            collect_loads(r, out);
        }
        OnfExpr::Sum { body, .. } => collect_loads(body, out),
    }
}

/// Executes `p` against `buffers` for problem size `n`.
///
/// Statements run in order; each loop nest runs in row-major order and every
/// `Sum` accumulates from 0 in ascending index order. A `Sum` that has no free
/// loop variables and reads no buffer the statement writes is evaluated once
/// per statement, which cannot change any result.
pub fn eval_onf(
    p: &OnfProgram,
    buffers: &mut BTreeMap<String, Vec<f64>>,
    n: usize,
) -> Result<(), OnfError> {
    let n = n as i64;
    for decl in &p.buffers {
        let buf = buffers
            .get(&decl.name)
            .ok_or_else(|| OnfError::MissingBuffer(decl.name.clone()))?;
        let expected = decl.len.eval(n);
        if buf.len() as i64 != expected {
            return Err(OnfError::LengthMismatch {
                name: decl.name.clone(),
                expected,
                actual: buf.len(),
            });
        }
    }
    for a in p.assignments() {
        run_assign(a, buffers, n)?;
    }
    Ok(())
}

struct Exec<'a> {
    buffers: &'a BTreeMap<String, Vec<f64>>,
    n: i64,
    env: Vec<(String, i64)>,
    cacheable: Vec<*const OnfExpr>,
    cache: HashMap<*const OnfExpr, f64>,
}

impl Exec<'_> {
    fn lookup(&self, v: &str) -> Option<i64> {
        self.env.iter().rev().find(|(w, _)| w == v).map(|(_, x)| *x)
    }

    fn offset(&self, r: &FlatRef) -> Result<(usize, &Vec<f64>), OnfError> {
        let buf = self
            .buffers
            .get(&r.buffer)
            .ok_or_else(|| OnfError::MissingBuffer(r.buffer.clone()))?;
        let off = r.offset.eval(self.n, &|v| self.lookup(v)).ok_or_else(|| {
            let v = r
                .offset
                .vars()
                .find(|v| self.lookup(v).is_none())
                .unwrap_or("?");
            OnfError::UnboundVar(v.to_string())
        })?;
        if off < 0 || off as usize >= buf.len() {
            return Err(OnfError::OutOfBounds {
                name: r.buffer.clone(),
                offset: off,
                len: buf.len(),
            });
        }
        Ok((off as usize, buf))
    }

    fn eval(&mut self, e: &OnfExpr) -> Result<f64, OnfError> {
        match e {
            OnfExpr::Load(r) => {
                let (off, buf) = self.offset(r)?;
                Ok(buf[off])
            }
            OnfExpr::Const(c) => Ok(*c),
            OnfExpr::Bin(op, l, r) => {
                let l = self.eval(l)?;
                let r = self.eval(r)?;
                op.apply(l, r, 0).map_err(|_| OnfError::DivisionByZero)
            }
            OnfExpr::Sum { var, extent, body } => {
                let key = e as *const OnfExpr;
                if let Some(v) = self.cache.get(&key) {
                    return Ok(*v);
                }
                let mut acc = 0.0;
                for x in 0..extent.eval(self.n) {
                    self.env.push((var.clone(), x));
                    let term = self.eval(body);
                    self.env.pop();
                    acc += term?;
                }
                if self.cacheable.contains(&key) {
                    self.cache.insert(key, acc);
                }
                Ok(acc)
            }
        }
    }
}

fn closed_sums(e: &OnfExpr, written: &BTreeSet<String>, out: &mut Vec<*const OnfExpr>) {
    if let OnfExpr::Sum { .. } = e {
        let mut reads = BTreeSet::new();
        e.buffers(&mut reads);
        if e.free_vars().is_empty() && reads.is_disjoint(written) {
            out.push(e as *const OnfExpr);
            return;
        }
    }
    match e {
        OnfExpr::Load(_) | OnfExpr::Const(_) => {}
        OnfExpr::Bin(_, l, r) => {
            closed_sums(l, written, out);
            closed_sums(r, written, out);
        }
        OnfExpr::Sum { body, .. } => closed_sums(body, written, out),
    }
}

fn run_assign(
    a: &Assign,
    buffers: &mut BTreeMap<String, Vec<f64>>,
    n: i64,
) -> Result<(), OnfError> {
    let written: BTreeSet<String> = a.targets.iter().map(|t| t.buffer.clone()).collect();
    let mut cacheable = Vec::new();
    closed_sums(&a.rhs, &written, &mut cacheable);
    let extents: Vec<i64> = a.loops.iter().map(|l| l.extent.eval(n)).collect();
    if extents.iter().any(|&e| e <= 0) {
        return Ok(());
    }
    let mut cache = HashMap::new();
    let mut counter = vec![0i64; extents.len()];
    loop {
        let env: Vec<(String, i64)> = a
            .loops
            .iter()
            .zip(&counter)
            .map(|(l, &x)| (l.var.clone(), x))
            .collect();
        let mut exec = Exec {
            buffers,
            n,
            env,
            cacheable: std::mem::take(&mut cacheable),
            cache: std::mem::take(&mut cache),
        };
        let value = exec.eval(&a.rhs)?;
        let mut offsets = Vec::with_capacity(a.targets.len());
        for t in &a.targets {
            offsets.push(exec.offset(t)?.0);
        }
        cacheable = exec.cacheable;
        cache = exec.cache;
        for (t, off) in a.targets.iter().zip(offsets) {
            buffers.get_mut(&t.buffer).expect("checked above")[off] = value;
        }
        // advance the row-major counter
        let mut axis = extents.len();
        loop {
            if axis == 0 {
                return Ok(());
            }
            axis -= 1;
            counter[axis] += 1;
            if counter[axis] < extents[axis] {
                break;
            }
            counter[axis] = 0;
        }
    }
}

/// Structural equality up to a consistent renaming of loop variables.
pub fn alpha_eq_program(a: &OnfProgram, b: &OnfProgram) -> bool {
    let decls = |p: &OnfProgram| -> BTreeMap<String, Poly> {
        p.buffers
            .iter()
            .map(|d| (d.name.clone(), d.len.clone()))
            .collect()
    };
    decls(a) == decls(b)
        && a.statements.len() == b.statements.len()
        && a.statements
            .iter()
            .zip(&b.statements)
            .all(|(x, y)| match (x, y) {
                (Statement::Assign(x), Statement::Assign(y)) => alpha_eq_assign(x, y),
                (Statement::ExitIfConverged, Statement::ExitIfConverged) => true,
                _ => false,
            })
}

pub fn alpha_eq_assign(a: &Assign, b: &Assign) -> bool {
    if a.loops.len() != b.loops.len() || a.targets.len() != b.targets.len() {
        return false;
    }
    let mut scope = Vec::new();
    for (x, y) in a.loops.iter().zip(&b.loops) {
        if x.extent != y.extent {
            return false;
        }
        scope.push((x.var.clone(), y.var.clone()));
    }
    a.targets
        .iter()
        .zip(&b.targets)
        .all(|(x, y)| flat_ref_eq(x, y, &scope))
        && alpha_eq_expr(&a.rhs, &b.rhs, &mut scope)
}

fn flat_ref_eq(x: &FlatRef, y: &FlatRef, scope: &[(String, String)]) -> bool {
    let map = |v: &str| -> String {
        scope
            .iter()
            .rev()
            .find(|(a, _)| a == v)
            .map(|(_, b)| b.clone())
            .unwrap_or_else(|| format!("free:{v}"))
    };
    let free = |v: &str| -> String {
        if scope.iter().any(|(_, b)| b == v) {
            v.to_string()
        } else {
            format!("free:{v}")
        }
    };
    x.buffer == y.buffer && x.offset.rename(&map) == y.offset.rename(&free)
}

fn alpha_eq_expr(x: &OnfExpr, y: &OnfExpr, scope: &mut Vec<(String, String)>) -> bool {
    match (x, y) {
        (OnfExpr::Load(a), OnfExpr::Load(b)) => flat_ref_eq(a, b, scope),
        (OnfExpr::Const(a), OnfExpr::Const(b)) => a.to_bits() == b.to_bits(),
        (OnfExpr::Bin(o1, l1, r1), OnfExpr::Bin(o2, l2, r2)) => {
            o1 == o2 && alpha_eq_expr(l1, l2, scope) && alpha_eq_expr(r1, r2, scope)
        }
        (
            OnfExpr::Sum {
                var: v1,
                extent: e1,
                body: b1,
            },
            OnfExpr::Sum {
                var: v2,
                extent: e2,
                body: b2,
            },
        ) => {
            if e1 != e2 {
                return false;
            }
            scope.push((v1.clone(), v2.clone()));
            let eq = alpha_eq_expr(b1, b2, scope);
            scope.pop();
            eq
        }
        _ => false,
    }
}
