#![allow(dead_code)]

use std::collections::BTreeMap;

use moa_cg::array::{BinaryOp, DenseArray, Shape};
use moa_cg::expr::{Binding, Dim, Expr, IndexComp, IndexLit, SymShape};
use moa_cg::reduce::{
    eval_onf, reduce_cg, Affine, Assign, FlatRef, Loop, OnfExpr, Poly, Statement,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const MAX_EXTENT: usize = 6;
const MAX_RANK: usize = 3;

/// A random well-shaped expression together with the value of `n` its
/// symbolic dimensions stand for. Every extent equal to `n` is declared as
/// `n`, so shapes stay consistent across the expression.
pub struct RandomExpr {
    pub expr: Expr,
    pub n: usize,
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    n: usize,
    arrays: Vec<(String, Vec<usize>)>,
}

impl<R: Rng> Gen<'_, R> {
    fn sym(&self, extents: &[usize]) -> SymShape {
        SymShape(
            extents
                .iter()
                .map(|&e| if e == self.n { Dim::N } else { Dim::Fixed(e) })
                .collect(),
        )
    }

    fn extent(&mut self) -> usize {
        self.rng.gen_range(1..=MAX_EXTENT)
    }

    fn leaf(&mut self, shape: &[usize], positive: bool) -> Expr {
        if shape.is_empty() && self.rng.gen_bool(0.3) {
            let v: f64 = self.rng.gen_range(0.5..2.0);
            let v = if positive || self.rng.gen_bool(0.7) {
                v
            } else {
                -v
            };
            return Expr::Scalar((v * 64.0).round() / 64.0);
        }
        let existing: Vec<String> = self
            .arrays
            .iter()
            .filter(|(_, s)| s == shape)
            .map(|(name, _)| name.clone())
            .collect();
        let name = if !existing.is_empty() && self.rng.gen_bool(0.4) {
            existing.choose(self.rng).unwrap().clone()
        } else {
            let name = format!("A{}", self.arrays.len());
            self.arrays.push((name.clone(), shape.to_vec()));
            name
        };
        Expr::array(name, self.sym(shape))
    }

    /// An expression of exactly `shape`. `positive` restricts to operations
    /// that keep positive inputs positive, for use under a divisor.
    fn gen(&mut self, shape: &[usize], depth: usize, positive: bool) -> Expr {
        if depth <= 1 || self.rng.gen_bool(0.15) {
            return self.leaf(shape, positive);
        }
        let d = depth - 1;
        loop {
            match self.rng.gen_range(0..6) {
                0 => {
                    let ops: &[BinaryOp] = if positive {
                        &[BinaryOp::Add, BinaryOp::Mul, BinaryOp::Div]
                    } else {
                        &[BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div]
                    };
                    let op = *ops.choose(self.rng).unwrap();
                    let scalar_side = self.rng.gen_range(0..4);
                    let ls: &[usize] = if scalar_side == 0 { &[] } else { shape };
                    let rs: &[usize] = if scalar_side == 1 { &[] } else { shape };
                    let l = self.gen(ls, d, positive);
                    let r = self.gen(rs, d, positive || op == BinaryOp::Div);
                    return Expr::binop(op, l, r);
                }
                1 if shape.len() < MAX_RANK => {
                    let prefix_len = self.rng.gen_range(1..=MAX_RANK - shape.len()).min(2);
                    let prefix: Vec<usize> = (0..prefix_len).map(|_| self.extent()).collect();
                    let index: Vec<IndexComp> = prefix
                        .iter()
                        .map(|&e| {
                            let c = self.rng.gen_range(0..e);
                            match (c, self.rng.gen_bool(0.2)) {
                                (0, true) => IndexComp::I,
                                (1, true) => IndexComp::IPlus1,
                                _ => IndexComp::Const(c),
                            }
                        })
                        .collect();
                    let full: Vec<usize> = prefix.iter().chain(shape).copied().collect();
                    let a = self.gen(&full, d, positive);
                    return Expr::psi(IndexLit(index), a);
                }
                2 if shape.len() <= 2 => {
                    let inner: Vec<usize> = shape.iter().rev().copied().collect();
                    return Expr::transpose(self.gen(&inner, d, positive));
                }
                3 => {
                    let q = self.extent();
                    let split = self.rng.gen_range(0..=shape.len());
                    let (a, b) = shape.split_at(split);
                    if a.len() + 1 > MAX_RANK || b.len() + 1 > MAX_RANK {
                        continue;
                    }
                    let ls: Vec<usize> = a.iter().copied().chain([q]).collect();
                    let rs: Vec<usize> = [q].into_iter().chain(b.iter().copied()).collect();
                    let l = self.gen(&ls, d, positive);
                    let r = self.gen(&rs, d, positive);
                    return Expr::ip(l, r);
                }
                4 if shape.is_empty() => {
                    let q = self.extent();
                    return Expr::reduce_add(self.gen(&[q], d, positive));
                }
                5 => return self.leaf(shape, positive),
                _ => continue,
            }
        }
    }
}

/// An operation tree of depth 1 to `max_depth` (as counted by
/// [`Expr::depth`]), extents at most [`MAX_EXTENT`], ranks at most 3.
pub fn random_expr<R: Rng>(rng: &mut R, max_depth: usize) -> RandomExpr {
    loop {
        let n = rng.gen_range(1..=MAX_EXTENT);
        let rank = rng.gen_range(0..=2);
        let shape: Vec<usize> = (0..rank).map(|_| rng.gen_range(1..=MAX_EXTENT)).collect();
        let mut g = Gen {
            rng: &mut *rng,
            n,
            arrays: Vec::new(),
        };
        let expr = g.gen(&shape, max_depth + 1, false);
        if expr.depth() >= 1 {
            return RandomExpr { expr, n };
        }
    }
}

pub fn random_array<R: Rng>(rng: &mut R, shape: Shape) -> DenseArray {
    let data = (0..shape.tau()).map(|_| rng.gen_range(0.5..2.0)).collect();
    DenseArray::new(shape, data).unwrap()
}

/// Random values in `[0.5, 2)` for every free array of `e`.
pub fn random_binding<R: Rng>(rng: &mut R, e: &Expr, n: usize) -> Binding {
    let mut b = Binding::new();
    for (name, shape) in e.arrays() {
        b.bind(name, random_array(rng, shape.resolve(n)));
    }
    b
}

/// The binding's arrays as flat ONF buffers, plus a zeroed `out` buffer.
pub fn onf_buffers(b: &Binding, out_len: usize) -> BTreeMap<String, Vec<f64>> {
    let mut m: BTreeMap<String, Vec<f64>> = b
        .iter()
        .map(|(k, v)| (k.clone(), v.data().to_vec()))
        .collect();
    m.insert("out".into(), vec![0.0; out_len]);
    m
}

/// `max |got - want| / max |want|`.
pub fn normwise_rel_err(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = got
        .iter()
        .zip(want)
        .fold(0.0f64, |m, (g, w)| m.max((g - w).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `M Mᵀ + n I` for `M` with entries uniform in `[-1, 1)`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let m = random_vec(rng, n * n);
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += m[i * n + k] * m[j * n + k];
            }
            a[i * n + j] = s;
        }
        a[i * n + i] += n as f64;
    }
    // exactly symmetric
    for i in 0..n {
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = a[i * n..(i + 1) * n].to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col].clone();
            for (v, p) in m[row].iter_mut().zip(&pivot_row).skip(col) {
                *v -= f * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn mat_vec(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Runs the reduced CG base case once and its step `k` times on fresh
/// buffers, returning every buffer.
pub fn run_onf_cg(a: &[f64], b: &[f64], guess: &[f64], k: usize) -> BTreeMap<String, Vec<f64>> {
    let n = b.len();
    let cg = reduce_cg();
    let mut bufs = BTreeMap::new();
    bufs.insert("A".to_string(), a.to_vec());
    bufs.insert("b".to_string(), b.to_vec());
    bufs.insert("x0".to_string(), guess.to_vec());
    for name in ["X", "R", "P"] {
        bufs.insert(name.to_string(), vec![0.0; 2 * n]);
    }
    eval_onf(&cg.base_case, &mut bufs, n).unwrap();
    for _ in 0..k {
        eval_onf(&cg.step, &mut bufs, n).unwrap();
    }
    bufs
}

pub fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

// Hand-written CG loop nests, written out independently of the reducer.

fn var(v: &str) -> Affine {
    Affine::var(v)
}

fn nk(v: &str) -> Affine {
    Affine::constant(Poly::n()).add(&var(v))
}

fn row_major(i: &str, j: &str) -> Affine {
    var(i).scale(&Poly::n()).add(&var(j))
}

fn ld(buf: &str, off: Affine) -> OnfExpr {
    OnfExpr::load(buf, off)
}

fn mul(l: OnfExpr, r: OnfExpr) -> OnfExpr {
    OnfExpr::bin(BinaryOp::Mul, l, r)
}

fn sum(v: &str, body: OnfExpr) -> OnfExpr {
    OnfExpr::sum(v, Poly::n(), body)
}

fn assign(targets: Vec<FlatRef>, rhs: OnfExpr) -> Statement {
    Statement::Assign(Assign {
        loops: vec![Loop {
            var: "k".into(),
            extent: Poly::n(),
        }],
        targets,
        rhs,
    })
}

/// `sum(j, R[j] * R[j])` over row 0, or row 1 when `next`.
fn rr(next: bool) -> OnfExpr {
    let r = || ld("R", if next { nk("j") } else { var("j") });
    sum("j", mul(r(), r()))
}

/// `X`, `R`, `P` row-1 updates, the exit test and the row copies.
pub fn golden_step() -> Vec<Statement> {
    let rr0 = rr(false);
    let rr1 = rr(true);
    let pap = sum(
        "i",
        sum(
            "j",
            mul(
                ld("P", var("i")),
                mul(ld("A", row_major("i", "j")), ld("P", var("j"))),
            ),
        ),
    );
    let alpha = OnfExpr::bin(BinaryOp::Div, rr0.clone(), pap);
    let ap = sum("j", mul(ld("A", row_major("k", "j")), ld("P", var("j"))));
    let mut s = vec![
        assign(
            vec![FlatRef::new("X", nk("k"))],
            OnfExpr::bin(
                BinaryOp::Add,
                ld("X", var("k")),
                mul(ld("P", var("k")), alpha.clone()),
            ),
        ),
        assign(
            vec![FlatRef::new("R", nk("k"))],
            OnfExpr::bin(BinaryOp::Sub, ld("R", var("k")), mul(alpha, ap)),
        ),
        Statement::ExitIfConverged,
        assign(
            vec![FlatRef::new("P", nk("k"))],
            OnfExpr::bin(
                BinaryOp::Add,
                ld("R", nk("k")),
                mul(ld("P", var("k")), OnfExpr::bin(BinaryOp::Div, rr1, rr0)),
            ),
        ),
    ];
    for b in ["X", "R", "P"] {
        s.push(assign(vec![FlatRef::new(b, var("k"))], ld(b, nk("k"))));
    }
    s
}

pub fn golden_base_case() -> Vec<Statement> {
    let ax = sum("j", mul(ld("A", row_major("k", "j")), ld("X", var("j"))));
    vec![
        assign(vec![FlatRef::new("X", var("k"))], ld("x0", var("k"))),
        assign(
            vec![FlatRef::new("P", var("k")), FlatRef::new("R", var("k"))],
            OnfExpr::bin(BinaryOp::Sub, ld("b", var("k")), ax),
        ),
    ]
}
