//! Sparse commutative polynomials over ℚ with a fixed number of variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::rational::{q, to_short, Q};

pub type Exponent = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Exponent, Q>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Q::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, Q::one())
    }

    pub fn monomial(exp: Exponent, c: Q) -> Self {
        let nvars = exp.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { nvars, terms }
    }

    /// `Σ_i coeffs[i]·x_i`.
    pub fn linear(coeffs: &[i64]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, &c) in coeffs.iter().enumerate() {
            p.add_term(&unit(n, i), &q(c));
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, Q> {
        &self.terms
    }

    pub fn coeff(&self, exp: &[u32]) -> Q {
        self.terms.get(exp).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exp: &[u32], c: &Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp.to_vec()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(exp);
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Degree in the variables selected by `mask`.
    pub fn degree_in(&self, mask: &[bool]) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| *x).sum()).max()
    }

    /// Sets variable `i` to zero.
    pub fn drop_var(&self, i: usize) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().filter(|(e, _)| e[i] == 0).map(|(e, c)| (e.clone(), c.clone())).collect() }
    }

    /// Renders with the given variable names, e.g. `q1*x1^2 - 2*x2`.
    pub fn format_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        // highest degree first reads most naturally
        let mut items: Vec<(&Exponent, &Q)> = self.terms.iter().collect();
        items.sort_by(|a, b| b.0.iter().sum::<u32>().cmp(&a.0.iter().sum::<u32>()).then(b.0.cmp(a.0)));
        for (k, (e, c)) in items.into_iter().enumerate() {
            let mono = format_monomial(e, names);
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            match (mono.is_empty(), mag.is_one()) {
                (true, _) => out.push_str(&to_short(&mag)),
                (false, true) => out.push_str(&mono),
                (false, false) => {
                    out.push_str(&to_short(&mag));
                    out.push('*');
                    out.push_str(&mono);
                }
            }
        }
        out
    }
}

pub fn unit(n: usize, i: usize) -> Exponent {
    let mut e = vec![0; n];
    e[i] = 1;
    e
}

pub fn format_monomial(e: &[u32], names: &[String]) -> String {
    let parts: Vec<String> = e
        .iter()
        .zip(names)
        .filter(|(x, _)| **x > 0)
        .map(|(x, name)| if *x == 1 { name.clone() } else { format!("{name}^{x}") })
        .collect();
    parts.join("*")
}

/// All exponent vectors in `n` variables of total degree `d`, in descending lex order.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<Exponent> {
    fn rec(n: usize, d: u32, prefix: &mut Exponent, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == n {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=d).rev() {
            prefix.push(k);
            rec(n, d - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(n, d, &mut Vec::new(), &mut out);
    out
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, &-c);
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Q::one())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial rings differ");
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(&e, &(ca * cb));
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.nvars).map(|i| format!("x{i}")).collect();
        f.write_str(&self.format_with(&names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_linear_form() {
        let d = Poly::linear(&[-2, 1]);
        let sq = d.pow(2);
        assert_eq!(sq.coeff(&[2, 0]), q(4));
        assert_eq!(sq.coeff(&[1, 1]), q(-4));
        assert_eq!(sq.coeff(&[0, 2]), q(1));
        assert_eq!(sq.to_string(), "4*x1^2 - 4*x1*x2 + x2^2");
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials_of_degree(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomials_of_degree(3, 1).len(), 3);
        assert_eq!(monomials_of_degree(1, 4), vec![vec![4]]);
    }

    #[test]
    fn cancellation_removes_terms() {
        let x = Poly::var(2, 0);
        assert!((&x - &x).is_zero());
        assert_eq!((&x - &Poly::one(2)).to_string(), "x1 - 1");
    }
}
