//! Truncated power series in `q_1..q_r` with rational coefficients, and
//! matrices of them.
//!
//! Truncation is componentwise: a series of order `N` keeps the monomials
//! `q^e` with every `e_a ≤ N`. Products of truncated series are exact on that
//! box, since the coefficients there only depend on lower exponents.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::linalg::QMatrix;
use crate::poly::format_monomial;
use crate::rational::{q, to_num_den, to_short, Q};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QSeries {
    r: usize,
    order: u32,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl QSeries {
    pub fn zero(r: usize, order: u32) -> Self {
        Self { r, order, terms: BTreeMap::new() }
    }

    pub fn constant(r: usize, order: u32, c: Q) -> Self {
        Self::monomial(r, order, vec![0; r], c)
    }

    pub fn one(r: usize, order: u32) -> Self {
        Self::constant(r, order, Q::one())
    }

    /// `c·q^e`, or zero when `e` lies outside the box.
    pub fn monomial(r: usize, order: u32, e: Vec<u32>, c: Q) -> Self {
        let mut s = Self::zero(r, order);
        s.add_term(&e, &c);
        s
    }

    pub fn var(r: usize, order: u32, a: usize) -> Self {
        let mut e = vec![0; r];
        e[a] = 1;
        Self::monomial(r, order, e, Q::one())
    }

    pub fn nvars(&self) -> usize {
        self.r
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Q> {
        &self.terms
    }

    pub fn in_range(&self, e: &[u32]) -> bool {
        e.iter().all(|&x| x <= self.order)
    }

    pub fn coeff(&self, e: &[u32]) -> Q {
        self.terms.get(e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&vec![0; self.r])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: &[u32], c: &Q) {
        if c.is_zero() || !self.in_range(e) {
            return;
        }
        let entry = self.terms.entry(e.to_vec()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(e);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e, &-c);
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.r, self.order);
        for (e, x) in &self.terms {
            out.add_term(e, &(x * c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.r, self.order.min(other.order));
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                if out.in_range(&e) {
                    out.add_term(&e, &(ca * cb));
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.r, self.order);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `q_a ∂/∂q_a`.
    pub fn theta(&self, a: usize) -> Self {
        let mut out = Self::zero(self.r, self.order);
        for (e, c) in &self.terms {
            out.add_term(e, &(c * q(i64::from(e[a]))));
        }
        out
    }

    /// Multiplies by `q^e`.
    pub fn shift(&self, e: &[u32]) -> Self {
        let mut out = Self::zero(self.r, self.order);
        for (k, c) in &self.terms {
            let s: Vec<u32> = k.iter().zip(e).map(|(x, y)| x + y).collect();
            out.add_term(&s, c);
        }
        out
    }

    /// Largest total degree that can survive truncation.
    fn max_total_degree(&self) -> u32 {
        self.order * self.r as u32
    }

    /// `exp(f)` for `f` without constant term.
    pub fn exp(&self) -> Self {
        assert!(self.constant_term().is_zero(), "exp needs a series without constant term");
        let mut acc = Self::one(self.r, self.order);
        let mut power = Self::one(self.r, self.order);
        for k in 1..=self.max_total_degree() {
            power = power.mul(self).scale(&Q::new(1.into(), k.into()));
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power);
        }
        acc
    }

    /// `1/f` for `f` with invertible constant term.
    pub fn inverse(&self) -> Option<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return None;
        }
        // 1/f = c0^{-1} Σ_k (1 - f/c0)^k
        let h = Self::one(self.r, self.order).sub(&self.scale(&c0.recip()));
        let mut acc = Self::one(self.r, self.order);
        let mut power = Self::one(self.r, self.order);
        for _ in 0..self.max_total_degree() {
            power = power.mul(&h);
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power);
        }
        Some(acc.scale(&c0.recip()))
    }

    /// Substitutes `q_a ↦ Q_a·u_a(Q)`; every `u_a` must have constant term 1
    /// so that the box is preserved.
    pub fn substitute_scaled(&self, u: &[QSeries]) -> Self {
        let mut out = Self::zero(self.r, self.order);
        for (e, c) in &self.terms {
            let mut term = Self::monomial(self.r, self.order, e.clone(), c.clone());
            for (a, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&u[a].pow(k));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Restricts to a smaller box.
    pub fn truncate(&self, order: u32) -> Self {
        let mut out = Self::zero(self.r, order);
        for (e, c) in &self.terms {
            out.add_term(e, c);
        }
        out
    }

    /// Smallest exponent (in key order) at which the two series differ.
    pub fn first_difference(&self, other: &Self) -> Option<Vec<u32>> {
        let diff = self.sub(other);
        diff.terms.keys().next().cloned()
    }

    pub fn format(&self) -> String {
        let names: Vec<String> = (1..=self.r).map(|a| format!("q{a}")).collect();
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let m = format_monomial(e, &names);
                match (m.is_empty(), c.is_one()) {
                    (true, _) => to_short(c),
                    (false, true) => m,
                    (false, false) if *c == -Q::one() => format!("-{m}"),
                    (false, false) => format!("{}*{m}", to_short(c)),
                }
            })
            .collect();
        parts.join(" + ").replace("+ -", "- ")
    }

    /// Coefficient table keyed by exponent strings like `"1,0"`.
    pub fn to_table(&self) -> BTreeMap<String, String> {
        self.terms
            .iter()
            .map(|(e, c)| (e.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","), to_num_den(c)))
            .collect()
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format())
    }
}

impl Serialize for QSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_table().serialize(s)
    }
}

/// Solves `κ_a(q(Q)) = Q_a` for `κ_a = q_a·exp(g_a(q))`, returning the
/// multipliers `u_a` with `q_a = Q_a·u_a(Q)`.
pub fn invert_exponential_map(g: &[QSeries]) -> Vec<QSeries> {
    let r = g.len();
    if r == 0 {
        return vec![];
    }
    let order = g[0].order();
    let mut u: Vec<QSeries> = (0..r).map(|_| QSeries::one(r, order)).collect();
    // each pass fixes one more total degree
    for _ in 0..=(order as usize * r) {
        let next: Vec<QSeries> = g.iter().map(|ga| ga.substitute_scaled(&u).scale(&-Q::one()).exp()).collect();
        if next == u {
            break;
        }
        u = next;
    }
    u
}

/// A matrix whose entries are truncated q-series.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<QSeries>,
}

impl SeriesMatrix {
    pub fn zeros(rows: usize, cols: usize, r: usize, order: u32) -> Self {
        Self { rows, cols, entries: vec![QSeries::zero(r, order); rows * cols] }
    }

    pub fn from_constant(m: &QMatrix, r: usize, order: u32) -> Self {
        let mut out = Self::zeros(m.rows(), m.cols(), r, order);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.entries[i * m.cols() + j] = QSeries::constant(r, order, m[(i, j)].clone());
            }
        }
        out
    }

    pub fn identity(n: usize, r: usize, order: u32) -> Self {
        Self::from_constant(&QMatrix::identity(n), r, order)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &QSeries {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: QSeries) {
        self.entries[i * self.cols + j] = s;
    }

    pub fn map(&self, f: impl Fn(&QSeries) -> QSeries) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn scale_series(&self, s: &QSeries) -> Self {
        self.map(|e| e.mul(s))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in series matrix product");
        let (r, order) = self.entries.first().map_or((0, 0), |e| (e.nvars(), e.order()));
        let mut out = Self::zeros(self.rows, other.cols, r, order);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = QSeries::zero(r, order);
                for k in 0..self.cols {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc.add(&a.mul(b));
                    }
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self { rows: self.cols, cols: self.rows, entries: self.entries.clone() };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn theta(&self, a: usize) -> Self {
        self.map(|e| e.theta(a))
    }

    pub fn substitute_scaled(&self, u: &[QSeries]) -> Self {
        self.map(|e| e.substitute_scaled(u))
    }

    pub fn truncate(&self, order: u32) -> Self {
        self.map(|e| e.truncate(order))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(QSeries::is_zero)
    }

    /// The value at `q = 0`.
    pub fn at_zero(&self) -> QMatrix {
        let mut m = QMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).constant_term();
            }
        }
        m
    }

    /// Coefficient matrix of `q^e`.
    pub fn coeff(&self, e: &[u32]) -> QMatrix {
        let mut m = QMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).coeff(e);
            }
        }
        m
    }

    /// All exponents carrying a nonzero coefficient somewhere.
    pub fn support(&self) -> Vec<Vec<u32>> {
        let mut keys: Vec<Vec<u32>> = self.entries.iter().flat_map(|e| e.terms().keys().cloned()).collect();
        keys.sort();
        keys.dedup();
        keys
    }

    /// First `(exponent, row, col)` where the matrices differ.
    pub fn first_difference(&self, other: &Self) -> Option<(Vec<u32>, usize, usize)> {
        let diff = self.sub(other);
        let key = diff.support().into_iter().next()?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !diff.get(i, j).coeff(&key).is_zero() {
                    return Some((key, i, j));
                }
            }
        }
        None
    }

    pub fn format_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).format()).collect()).collect()
    }
}

impl Serialize for SeriesMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<&QSeries>> = (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).collect()).collect();
        rows.serialize(s)
    }
}
