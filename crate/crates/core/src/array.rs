//! Concrete MoA array values and the total functions of the algebra.
//!
//! Every value is a [`DenseArray`]: a [`Shape`] plus a flat buffer holding the
//! row-major ravel. A scalar is an array whose shape is the empty vector.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArrayError {
    #[error("index {index} out of bounds on axis {axis} (extent {extent})")]
    IndexOutOfBounds {
        axis: usize,
        index: usize,
        extent: usize,
    },
    #[error("rank error: {0}")]
    Rank(String),
    #[error("conformance error: {0}")]
    Conformance(String),
    #[error("division by zero at flat position {0}")]
    DivisionByZero(usize),
    #[error("transpose of rank {0} arrays is not supported")]
    UnsupportedRank(usize),
    #[error("data length {data} does not match shape {shape} (expected {expected})")]
    DataLength {
        shape: Shape,
        data: usize,
        expected: usize,
    },
}

pub type Result<T> = std::result::Result<T, ArrayError>;

/// The shape of an array (the value of rho). The empty shape is the shape of a scalar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(extents: impl Into<Vec<usize>>) -> Self {
        Shape(extents.into())
    }

    /// The empty shape, Theta.
    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn extents(&self) -> &[usize] {
        &self.0
    }

    /// Dimensionality (delta): the number of axes.
    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Element count (tau): the product of the extents, 1 for a scalar.
    pub fn tau(&self) -> usize {
        self.0.iter().product()
    }

    pub fn is_scalar(&self) -> bool {
        self.0.is_empty()
    }

    pub fn take(&self, n: isize) -> Result<Shape> {
        take_slice(n, &self.0).map(Shape)
    }

    pub fn drop(&self, n: isize) -> Result<Shape> {
        drop_slice(n, &self.0).map(Shape)
    }

    pub fn concat(&self, other: &Shape) -> Shape {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Shape(v)
    }
}

impl From<Vec<usize>> for Shape {
    fn from(v: Vec<usize>) -> Self {
        Shape(v)
    }
}

impl From<&[usize]> for Shape {
    fn from(v: &[usize]) -> Self {
        Shape(v.to_vec())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_vector(f, self.0.iter())
    }
}

/// The left argument of psi: a full or partial index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexVector(Vec<usize>);

impl IndexVector {
    pub fn new(components: impl Into<Vec<usize>>) -> Self {
        IndexVector(components.into())
    }

    /// The empty index, which selects the whole array.
    pub fn empty() -> Self {
        IndexVector(Vec::new())
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &IndexVector) -> IndexVector {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        IndexVector(v)
    }
}

impl From<Vec<usize>> for IndexVector {
    fn from(v: Vec<usize>) -> Self {
        IndexVector(v)
    }
}

impl fmt::Display for IndexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_vector(f, self.0.iter())
    }
}

fn write_vector<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: impl Iterator<Item = T>,
) -> fmt::Result {
    let parts: Vec<String> = items.map(|x| x.to_string()).collect();
    if parts.is_empty() {
        write!(f, "Θ")
    } else {
        write!(f, "<{}>", parts.join(" "))
    }
}

/// An array value: shape plus its row-major ravel.
///
/// `data.len() == shape.tau()` always holds; a scalar carries exactly one element.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseArray {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        let expected = shape.tau();
        if data.len() != expected {
            return Err(ArrayError::DataLength {
                shape,
                data: data.len(),
                expected,
            });
        }
        Ok(DenseArray { shape, data })
    }

    pub fn scalar(value: f64) -> Self {
        DenseArray {
            shape: Shape::scalar(),
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        DenseArray {
            shape: Shape(vec![data.len()]),
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(Shape(vec![rows, cols]), data)
    }

    pub fn zeros(shape: Shape) -> Self {
        let data = vec![0.0; shape.tau()];
        DenseArray { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    /// The single element of a scalar (or one-element) array.
    pub fn as_scalar(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }
}

impl fmt::Display for DenseArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rank() {
            0 => write!(f, "{}", self.data[0]),
            1 => write_vector(f, self.data.iter()),
            _ => write!(
                f,
                "{} ρ {}",
                self.shape,
                DenseArray::vector(self.data.clone())
            ),
        }
    }
}

pub fn shape(a: &DenseArray) -> Shape {
    a.shape.clone()
}

pub fn tau(a: &DenseArray) -> usize {
    a.shape.tau()
}

/// Row-major offset of a full index, by Horner's rule over the extents.
pub fn gamma(idx: &IndexVector, s: &Shape) -> Result<usize> {
    if idx.len() != s.rank() {
        return Err(ArrayError::Rank(format!(
            "gamma needs a full index: index {idx} has length {} but shape {s} has rank {}",
            idx.len(),
            s.rank()
        )));
    }
    let mut offset = 0;
    for (axis, (&i, &extent)) in idx.0.iter().zip(&s.0).enumerate() {
        if i >= extent {
            return Err(ArrayError::IndexOutOfBounds {
                axis,
                index: i,
                extent,
            });
        }
        offset = offset * extent + i;
    }
    Ok(offset)
}

/// Psi indexing. A partial index selects the contiguous slab of the ravel that
/// starts at the zero-padded index; the empty index returns the array itself.
pub fn psi(idx: &IndexVector, a: &DenseArray) -> Result<DenseArray> {
    let rank = a.rank();
    if idx.len() > rank {
        return Err(ArrayError::Rank(format!(
            "index {idx} is longer than the rank {rank} of the indexed array"
        )));
    }
    let result_shape = Shape(a.shape.0[idx.len()..].to_vec());
    let mut padded = idx.0.clone();
    padded.resize(rank, 0);
    // Bounds of the padded zeros are only violated by empty axes; check the
    // given components explicitly first so the error names the right axis.
    for (axis, (&i, &extent)) in idx.0.iter().zip(&a.shape.0).enumerate() {
        if i >= extent {
            return Err(ArrayError::IndexOutOfBounds {
                axis,
                index: i,
                extent,
            });
        }
    }
    let len = result_shape.tau();
    if len == 0 {
        return Ok(DenseArray {
            shape: result_shape,
            data: Vec::new(),
        });
    }
    let start = gamma(&IndexVector(padded), &a.shape)?;
    Ok(DenseArray {
        data: a.data[start..start + len].to_vec(),
        shape: result_shape,
    })
}

fn take_slice<T: Clone>(n: isize, v: &[T]) -> Result<Vec<T>> {
    let count = n.unsigned_abs();
    if count > v.len() {
        return Err(ArrayError::Conformance(format!(
            "take {n} from a vector of length {}",
            v.len()
        )));
    }
    Ok(if n >= 0 {
        v[..count].to_vec()
    } else {
        v[v.len() - count..].to_vec()
    })
}

fn drop_slice<T: Clone>(n: isize, v: &[T]) -> Result<Vec<T>> {
    let count = n.unsigned_abs();
    if count > v.len() {
        return Err(ArrayError::Conformance(format!(
            "drop {n} from a vector of length {}",
            v.len()
        )));
    }
    Ok(if n >= 0 {
        v[count..].to_vec()
    } else {
        v[..v.len() - count].to_vec()
    })
}

fn require_vector(v: &DenseArray, op: &str) -> Result<()> {
    if v.rank() != 1 {
        return Err(ArrayError::Rank(format!(
            "{op} expects a vector, got shape {}",
            v.shape
        )));
    }
    Ok(())
}

/// First `n` elements, or the last `|n|` when `n` is negative.
pub fn take(n: isize, v: &DenseArray) -> Result<DenseArray> {
    require_vector(v, "take")?;
    take_slice(n, &v.data).map(DenseArray::vector)
}

/// All but the first `n` elements, or all but the last `|n|` when `n` is negative.
pub fn drop(n: isize, v: &DenseArray) -> Result<DenseArray> {
    require_vector(v, "drop")?;
    drop_slice(n, &v.data).map(DenseArray::vector)
}

pub fn concat(u: &DenseArray, v: &DenseArray) -> Result<DenseArray> {
    require_vector(u, "concat")?;
    require_vector(v, "concat")?;
    let mut data = u.data.clone();
    data.extend_from_slice(&v.data);
    Ok(DenseArray::vector(data))
}

pub fn ravel(a: &DenseArray) -> DenseArray {
    DenseArray::vector(a.data.clone())
}

pub fn iota(q: usize) -> DenseArray {
    DenseArray::vector((0..q).map(|i| i as f64).collect())
}

/// Transpose for the ranks the algebra needs: identity on scalars and vectors,
/// axis swap on matrices.
pub fn transpose(a: &DenseArray) -> Result<DenseArray> {
    match a.rank() {
        0 | 1 => Ok(a.clone()),
        2 => {
            let (m, n) = (a.shape.0[0], a.shape.0[1]);
            let mut data = Vec::with_capacity(m * n);
            for i in 0..n {
                for j in 0..m {
                    data.push(a.data[j * n + i]);
                }
            }
            Ok(DenseArray {
                shape: Shape(vec![n, m]),
                data,
            })
        }
        r => Err(ArrayError::UnsupportedRank(r)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        Some(match c {
            '+' => BinaryOp::Add,
            '-' => BinaryOp::Sub,
            '*' => BinaryOp::Mul,
            '/' => BinaryOp::Div,
            _ => return None,
        })
    }

    /// Applies the operator to one pair of elements. `pos` only labels a
    /// division error.
    pub fn apply(self, l: f64, r: f64, pos: usize) -> Result<f64> {
        Ok(match self {
            BinaryOp::Add => l + r,
            BinaryOp::Sub => l - r,
            BinaryOp::Mul => l * r,
            BinaryOp::Div => {
                if r == 0.0 {
                    return Err(ArrayError::DivisionByZero(pos));
                }
                l / r
            }
        })
    }
}

/// Elementwise arithmetic with scalar extension on exactly one scalar operand.
pub fn pointwise(op: BinaryOp, l: &DenseArray, r: &DenseArray) -> Result<DenseArray> {
    let shape = if l.shape == r.shape {
        l.shape.clone()
    } else if l.shape.is_scalar() {
        r.shape.clone()
    } else if r.shape.is_scalar() {
        l.shape.clone()
    } else {
        return Err(ArrayError::Conformance(format!(
            "pointwise {} on shapes {} and {}",
            op.symbol(),
            l.shape,
            r.shape
        )));
    };
    let lstep = usize::from(!l.shape.is_scalar());
    let rstep = usize::from(!r.shape.is_scalar());
    let data = (0..shape.tau())
        .map(|k| op.apply(l.data[k * lstep], r.data[k * rstep], k))
        .collect::<Result<Vec<_>>>()?;
    Ok(DenseArray { shape, data })
}

/// Additive reduction of a vector, summed in ascending index order from 0.
pub fn reduce_add(v: &DenseArray) -> Result<DenseArray> {
    require_vector(v, "reduce_add")?;
    let mut acc = 0.0;
    for &x in &v.data {
        acc += x;
    }
    Ok(DenseArray::scalar(acc))
}

/// Generalized inner product `+.×`: the result shape is the left shape without
/// its last extent followed by the right shape without its first.
pub fn inner_product(l: &DenseArray, r: &DenseArray) -> Result<DenseArray> {
    if l.rank() == 0 || r.rank() == 0 {
        return Err(ArrayError::Rank(format!(
            "inner product needs operands of rank >= 1, got shapes {} and {}",
            l.shape, r.shape
        )));
    }
    let q = *l.shape.0.last().unwrap();
    let q_right = r.shape.0[0];
    if q != q_right {
        return Err(ArrayError::Conformance(format!(
            "inner product extents differ: left last extent {q}, right first extent {q_right}"
        )));
    }
    let outer = l.shape.drop(-1)?;
    let inner = r.shape.drop(1)?;
    let rows = outer.tau();
    let cols = inner.tau();
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for k in 0..q {
                acc += l.data[i * q + k] * r.data[k * cols + j];
            }
            data.push(acc);
        }
    }
    Ok(DenseArray {
        shape: outer.concat(&inner),
        data,
    })
}
