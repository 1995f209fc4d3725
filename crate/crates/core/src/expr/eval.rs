use std::collections::BTreeMap;

use super::{Dim, Expr, ExprError, IndexComp};
use crate::array::{self, DenseArray, IndexVector};

/// Values for the free arrays of an expression.
#[derive(Debug, Clone, Default)]
pub struct Binding {
    arrays: BTreeMap<String, DenseArray>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: DenseArray) -> &mut Self {
        self.arrays.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: DenseArray) -> Self {
        self.bind(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&DenseArray> {
        self.arrays.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &DenseArray)> {
        self.arrays.iter()
    }

    /// Checks every free array of `e` against its declaration and returns the
    /// value of `n` the bound shapes imply, if any declaration mentions it.
    pub fn resolve_n(&self, e: &Expr) -> Result<Option<usize>, ExprError> {
        let mut n = None;
        for (name, declared) in e.arrays() {
            let value = self
                .arrays
                .get(&name)
                .ok_or_else(|| ExprError::Unbound(name.clone()))?;
            let bound = value.shape();
            let mismatch = || ExprError::BindingShape {
                name: name.clone(),
                declared: declared.clone(),
                bound: bound.clone(),
            };
            if bound.rank() != declared.rank() {
                return Err(mismatch());
            }
            for (d, &extent) in declared.dims().iter().zip(bound.extents()) {
                match d {
                    Dim::Fixed(e) if *e != extent => return Err(mismatch()),
                    Dim::Fixed(_) => {}
                    Dim::N => match n {
                        None => n = Some(extent),
                        Some(prev) if prev != extent => {
                            return Err(ExprError::InconsistentN(prev, extent))
                        }
                        Some(_) => {}
                    },
                }
            }
        }
        Ok(n)
    }
}

/// Evaluates `e` by structural recursion over the array operations.
///
/// The temporal symbols `i` and `i+1` denote rows 0 and 1 of the two-row
/// recurrence window.
pub fn eval(e: &Expr, env: &Binding) -> Result<DenseArray, ExprError> {
    env.resolve_n(e)?;
    eval_node(e, env)
}

fn eval_node(e: &Expr, env: &Binding) -> Result<DenseArray, ExprError> {
    Ok(match e {
        Expr::Array { name, .. } => env
            .get(name)
            .cloned()
            .ok_or_else(|| ExprError::Unbound(name.clone()))?,
        Expr::Scalar(v) => DenseArray::scalar(*v),
        Expr::Psi { index, array: a } => {
            let idx: Vec<usize> = index
                .0
                .iter()
                .map(|c| match c {
                    IndexComp::Const(v) => *v,
                    IndexComp::I => 0,
                    IndexComp::IPlus1 => 1,
                })
                .collect();
            array::psi(&IndexVector::new(idx), &eval_node(a, env)?)?
        }
        Expr::Transpose(a) => array::transpose(&eval_node(a, env)?)?,
        Expr::InnerProduct(l, r) => array::inner_product(&eval_node(l, env)?, &eval_node(r, env)?)?,
        Expr::Pointwise(op, l, r) => {
            array::pointwise(*op, &eval_node(l, env)?, &eval_node(r, env)?)?
        }
        Expr::ReduceAdd(a) => array::reduce_add(&eval_node(a, env)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::BinaryOp;
    use crate::expr::SymShape;
    use crate::expr::{infer_shape, parse_expr};

    fn decls() -> BTreeMap<String, SymShape> {
        [
            ("A", SymShape(vec![Dim::N, Dim::N])),
            ("b", SymShape(vec![Dim::N])),
            ("x0", SymShape(vec![Dim::N])),
            ("R", SymShape(vec![Dim::Fixed(2), Dim::N])),
            ("P", SymShape(vec![Dim::Fixed(2), Dim::N])),
            ("v", SymShape(vec![Dim::N])),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    fn example_env() -> Binding {
        Binding::new()
            .with(
                "A",
                DenseArray::matrix(2, 2, vec![4.0, 1.0, 1.0, 3.0]).unwrap(),
            )
            .with("b", DenseArray::vector(vec![1.0, 2.0]))
            .with("x0", DenseArray::vector(vec![2.0, 1.0]))
            .with(
                "R",
                DenseArray::matrix(2, 2, vec![-8.0, -3.0, 0.0, 0.0]).unwrap(),
            )
            .with(
                "P",
                DenseArray::matrix(2, 2, vec![-8.0, -3.0, 0.0, 0.0]).unwrap(),
            )
            .with("v", DenseArray::vector(vec![-8.0, -3.0]))
    }

    #[test]
    fn alpha_of_the_example() {
        let text = "ip(tr psi(<i>,R), psi(<i>,R)) / ip(tr psi(<i>,P), ip(A, psi(<i>,P)))";
        let e = parse_expr(text, &decls()).unwrap();
        let alpha = eval(&e, &example_env()).unwrap();
        assert_eq!(alpha.shape().rank(), 0);
        assert!((alpha.data()[0] - 73.0 / 331.0).abs() < 1e-15);
    }

    #[test]
    fn transpose_of_vector_is_identity() {
        let v = parse_expr("v", &decls()).unwrap();
        let t = Expr::transpose(v.clone());
        assert_eq!(
            eval(&t, &example_env()).unwrap(),
            eval(&v, &example_env()).unwrap()
        );
    }

    #[test]
    fn initial_residual() {
        let e = parse_expr("b - ip(A, x0)", &decls()).unwrap();
        assert_eq!(
            eval(&e, &example_env()).unwrap(),
            DenseArray::vector(vec![-8.0, -3.0])
        );
    }

    #[test]
    fn right_to_left_arithmetic() {
        let e = parse_expr("1 - (4 * 2) + 1", &decls()).unwrap();
        assert_eq!(eval(&e, &Binding::new()).unwrap(), DenseArray::scalar(-8.0));
    }

    #[test]
    fn shape_matches_inference() {
        let e = parse_expr("ip(A, psi(<0>, P)) * 2", &decls()).unwrap();
        let value = eval(&e, &example_env()).unwrap();
        assert_eq!(value.shape(), &infer_shape(&e).unwrap().resolve(2));
    }

    #[test]
    fn binding_errors() {
        let e = parse_expr("ip(A, v)", &decls()).unwrap();
        let env = Binding::new().with("A", DenseArray::matrix(2, 2, vec![0.0; 4]).unwrap());
        assert_eq!(eval(&e, &env), Err(ExprError::Unbound("v".into())));

        let env = env.with("v", DenseArray::vector(vec![1.0, 2.0, 3.0]));
        assert_eq!(eval(&e, &env), Err(ExprError::InconsistentN(2, 3)));

        let env = Binding::new()
            .with("A", DenseArray::vector(vec![1.0, 2.0]))
            .with("v", DenseArray::vector(vec![1.0, 2.0]));
        assert!(matches!(
            eval(&e, &env),
            Err(ExprError::BindingShape { .. })
        ));
    }

    #[test]
    fn division_by_zero_propagates() {
        let e = Expr::binop(BinaryOp::Div, Expr::Scalar(1.0), Expr::Scalar(0.0));
        assert!(matches!(
            eval(&e, &Binding::new()),
            Err(ExprError::Array(_))
        ));
    }
}
