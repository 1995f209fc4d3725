//! Integer polynomials in the problem size `n` and affine offsets built from them.

use std::fmt;

/// `c0 + c1*n + c2*n^2 + ...`, coefficients stored lowest power first with no
/// trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly(Vec<i64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: i64) -> Self {
        Poly(vec![c]).trimmed()
    }

    pub fn n() -> Self {
        Poly(vec![0, 1])
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.0
    }

    fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_constant(&self) -> Option<i64> {
        match self.0.len() {
            0 => Some(0),
            1 => Some(self.0[0]),
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        let v = (0..len)
            .map(|i| self.0.get(i).copied().unwrap_or(0) + other.0.get(i).copied().unwrap_or(0))
            .collect();
        Poly(v).trimmed()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly(v).trimmed()
    }

    pub fn eval(&self, n: i64) -> i64 {
        self.0.iter().rev().fold(0, |acc, c| acc * n + c)
    }

    /// True when every coefficient is non-negative, so the value is
    /// non-negative for every `n >= 0`.
    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    fn needs_parens(&self) -> bool {
        self.0.iter().filter(|&&c| c != 0).count() > 1
    }

    /// Compact rendering without spaces, e.g. `n-1`.
    pub fn compact(&self) -> String {
        self.to_string().replace(' ', "")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (power, &c) in self.0.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mag = c.unsigned_abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if c < 0 { " - " } else { " + " })?;
            }
            first = false;
            let n_part = vec!["n"; power].join("*");
            match (power, mag) {
                (0, m) => write!(f, "{m}")?,
                (_, 1) => write!(f, "{n_part}")?,
                (_, m) => write!(f, "{m}*{n_part}")?,
            }
        }
        Ok(())
    }
}

/// An affine offset `c0 + sum(coef_v * v)` over named loop variables, with
/// coefficients that are polynomials in `n`. Terms keep insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Affine {
    pub constant: Poly,
    pub terms: Vec<(String, Poly)>,
}

impl Affine {
    pub fn constant(c: Poly) -> Self {
        Affine {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Affine {
            constant: Poly::zero(),
            terms: vec![(name.into(), Poly::constant(1))],
        }
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.constant = out.constant.add(&other.constant);
        for (v, c) in &other.terms {
            match out.terms.iter_mut().find(|(w, _)| w == v) {
                Some((_, existing)) => *existing = existing.add(c),
                None => out.terms.push((v.clone(), c.clone())),
            }
        }
        out.terms.retain(|(_, c)| !c.is_zero());
        out
    }

    pub fn scale(&self, k: &Poly) -> Affine {
        let mut out = Affine {
            constant: self.constant.mul(k),
            terms: self
                .terms
                .iter()
                .map(|(v, c)| (v.clone(), c.mul(k)))
                .collect(),
        };
        out.terms.retain(|(_, c)| !c.is_zero());
        out
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(v, _)| v.as_str())
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Affine {
        Affine {
            constant: self.constant.clone(),
            terms: self.terms.iter().map(|(v, c)| (f(v), c.clone())).collect(),
        }
    }

    /// Evaluates the offset; `lookup` supplies loop variable values.
    pub fn eval(&self, n: i64, lookup: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        let mut acc = self.constant.eval(n);
        for (v, c) in &self.terms {
            acc += c.eval(n) * lookup(v)?;
        }
        Some(acc)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.constant.is_zero() || self.terms.is_empty() {
            parts.push(self.constant.to_string());
        }
        for (v, c) in &self.terms {
            if c.as_constant() == Some(1) {
                parts.push(v.clone());
            } else if c.needs_parens() {
                parts.push(format!("{v}*({c})"));
            } else {
                parts.push(format!("{v}*{c}"));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}
