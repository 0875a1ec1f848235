//! Normal-ordered differential operators.
//!
//! [`WeylOperator`] lives in the reduced variables: terms `c·q^e·z^j·θ^α·E^β`
//! with `θ_a = z·q_a∂_{q_a}` and `E = z²∂_z`. The only nontrivial commutators are
//!
//! ```text
//! [θ_a, q_b] = δ_ab·z·q_a     [E, z] = z²     [E, θ_a] = z·θ_a
//! ```
//!
//! [`AmbientOperator`] lives on `λ_0..λ_m` and `z` with terms `c·λ^u·z^j·∂_λ^v·∂_z^w`
//! (`u`, `j` may be negative).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::poly::Poly;
use crate::rational::{q, to_num_den, to_short, Q};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct WeylKey {
    pub e: Vec<u32>,
    pub j: i32,
    pub alpha: Vec<u32>,
    pub beta: u32,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WeylOperator {
    r: usize,
    terms: BTreeMap<WeylKey, Q>,
}

impl WeylOperator {
    pub fn zero(r: usize) -> Self {
        Self { r, terms: BTreeMap::new() }
    }

    pub fn term(r: usize, c: Q, e: Vec<u32>, j: i32, alpha: Vec<u32>, beta: u32) -> Self {
        let mut op = Self::zero(r);
        op.add_term(WeylKey { e, j, alpha, beta }, &c);
        op
    }

    pub fn constant(r: usize, c: Q) -> Self {
        Self::term(r, c, vec![0; r], 0, vec![0; r], 0)
    }

    pub fn one(r: usize) -> Self {
        Self::constant(r, Q::one())
    }

    pub fn q_pow(r: usize, e: Vec<u32>) -> Self {
        Self::term(r, Q::one(), e, 0, vec![0; r], 0)
    }

    pub fn q_var(r: usize, a: usize) -> Self {
        Self::q_pow(r, unit(r, a))
    }

    pub fn z_pow(r: usize, j: i32) -> Self {
        Self::term(r, Q::one(), vec![0; r], j, vec![0; r], 0)
    }

    pub fn theta(r: usize, a: usize) -> Self {
        Self::term(r, Q::one(), vec![0; r], 0, unit(r, a), 0)
    }

    /// `E = z²∂_z`.
    pub fn euler_z(r: usize) -> Self {
        Self::term(r, Q::one(), vec![0; r], 0, vec![0; r], 1)
    }

    pub fn nvars(&self) -> usize {
        self.r
    }

    pub fn terms(&self) -> &BTreeMap<WeylKey, Q> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, key: WeylKey, c: &Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.r);
        for (k, x) in &self.terms {
            out.add_term(k.clone(), &(x * c));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.r);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Largest q-exponent appearing, per variable.
    pub fn max_q_shift(&self) -> Vec<u32> {
        let mut m = vec![0; self.r];
        for k in self.terms.keys() {
            for (x, &e) in m.iter_mut().zip(&k.e) {
                *x = (*x).max(e);
            }
        }
        m
    }

    /// Left multiplication by `θ_a`.
    fn left_theta(&self, a: usize) -> Self {
        let mut out = Self::zero(self.r);
        for (k, c) in &self.terms {
            let mut k1 = k.clone();
            k1.alpha[a] += 1;
            out.add_term(k1, c);
            if k.e[a] > 0 {
                let mut k2 = k.clone();
                k2.j += 1;
                out.add_term(k2, &(c * q(i64::from(k.e[a]))));
            }
        }
        out
    }

    /// Left multiplication by `E = z²∂_z`.
    fn left_euler(&self) -> Self {
        let mut out = Self::zero(self.r);
        for (k, c) in &self.terms {
            let mut k1 = k.clone();
            k1.beta += 1;
            out.add_term(k1, c);
            let weight = i64::from(k.j) + k.alpha.iter().map(|&x| i64::from(x)).sum::<i64>();
            if weight != 0 {
                let mut k2 = k.clone();
                k2.j += 1;
                out.add_term(k2, &(c * q(weight)));
            }
        }
        out
    }

    /// Left multiplication by `c·q^e·z^j` (these commute past nothing, they just shift).
    fn left_scalar(&self, c: &Q, e: &[u32], j: i32) -> Self {
        let mut out = Self::zero(self.r);
        for (k, x) in &self.terms {
            let mut k1 = k.clone();
            for (a, b) in k1.e.iter_mut().zip(e) {
                *a += b;
            }
            k1.j += j;
            out.add_term(k1, &(x * c));
        }
        out
    }

    /// Commutative image `θ_a ↦ x_a`, `E ↦ z·y` in the variables
    /// `(q_1..q_r, z, x_1..x_r, y)`; with `at_z_zero` the result is taken mod `z`.
    pub fn symbol(&self, at_z_zero: bool) -> Result<Poly, NegativeZPower> {
        let r = self.r;
        let nv = 2 * r + 2;
        let mut p = Poly::zero(nv);
        for (k, c) in &self.terms {
            let zdeg = k.j + k.beta as i32;
            if zdeg < 0 {
                return Err(NegativeZPower(k.j));
            }
            if at_z_zero && zdeg > 0 {
                continue;
            }
            let mut exp = Vec::with_capacity(nv);
            exp.extend(&k.e);
            exp.push(zdeg as u32);
            exp.extend(&k.alpha);
            exp.push(k.beta);
            p.add_term(&exp, c);
        }
        Ok(p)
    }

    pub fn variable_names(r: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=r).map(|a| format!("q{a}")).collect();
        names.push("z".into());
        names.extend((1..=r).map(|a| format!("x{a}")));
        names.push("y".into());
        names
    }

    fn key_string(&self, k: &WeylKey) -> String {
        let mut parts = Vec::new();
        for (a, &e) in k.e.iter().enumerate() {
            push_power(&mut parts, &format!("q{}", a + 1), i64::from(e));
        }
        push_power(&mut parts, "z", i64::from(k.j));
        for (a, &e) in k.alpha.iter().enumerate() {
            push_power(&mut parts, &format!("t{}", a + 1), i64::from(e));
        }
        push_power(&mut parts, "E", i64::from(k.beta));
        parts.join("*")
    }

    /// JSON-friendly term list.
    pub fn term_list(&self) -> Vec<WeylTermRecord> {
        self.terms
            .iter()
            .map(|(k, c)| WeylTermRecord { coeff: to_num_den(c), q: k.e.clone(), z: k.j, theta: k.alpha.clone(), ez: k.beta })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativeZPower(pub i32);

impl fmt::Display for NegativeZPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "operator has a negative power z^{} and no polynomial symbol", self.0)
    }
}

impl std::error::Error for NegativeZPower {}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct WeylTermRecord {
    pub coeff: String,
    pub q: Vec<u32>,
    pub z: i32,
    pub theta: Vec<u32>,
    pub ez: u32,
}

fn unit(r: usize, a: usize) -> Vec<u32> {
    let mut v = vec![0; r];
    v[a] = 1;
    v
}

fn push_power(parts: &mut Vec<String>, name: &str, e: i64) {
    match e {
        0 => {}
        1 => parts.push(name.to_string()),
        _ => parts.push(format!("{name}^{e}")),
    }
}

fn format_terms<'a, K: 'a>(terms: impl Iterator<Item = (&'a K, &'a Q)>, key: impl Fn(&K) -> String) -> String {
    let mut out = String::new();
    for (idx, (k, c)) in terms.enumerate() {
        let mono = key(k);
        let mag = c.abs();
        if idx == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        match (mono.is_empty(), mag.is_one()) {
            (true, _) => out.push_str(&to_short(&mag)),
            (false, true) => out.push_str(&mono),
            (false, false) => out.push_str(&format!("{}*{mono}", to_short(&mag))),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl fmt::Display for WeylOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // q-heavy terms first: "q1 - t1^3"
        f.write_str(&format_terms(self.terms.iter().rev(), |k| self.key_string(k)))
    }
}

impl Serialize for WeylOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.term_list().serialize(s)
    }
}

impl Add for &WeylOperator {
    type Output = WeylOperator;
    fn add(self, rhs: &WeylOperator) -> WeylOperator {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c);
        }
        out
    }
}

impl Sub for &WeylOperator {
    type Output = WeylOperator;
    fn sub(self, rhs: &WeylOperator) -> WeylOperator {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), &-c);
        }
        out
    }
}

impl Neg for &WeylOperator {
    type Output = WeylOperator;
    fn neg(self) -> WeylOperator {
        self.scale(&-Q::one())
    }
}

impl Mul for &WeylOperator {
    type Output = WeylOperator;
    fn mul(self, rhs: &WeylOperator) -> WeylOperator {
        assert_eq!(self.r, rhs.r, "operators over different variables");
        let mut out = WeylOperator::zero(self.r);
        for (k, c) in &self.terms {
            // c q^e z^j θ^α E^β · rhs, built from the right
            let mut acc = rhs.clone();
            for _ in 0..k.beta {
                acc = acc.left_euler();
            }
            for (a, &n) in k.alpha.iter().enumerate() {
                for _ in 0..n {
                    acc = acc.left_theta(a);
                }
            }
            acc = acc.left_scalar(c, &k.e, k.j);
            out = &out + &acc;
        }
        out
    }
}

/// Operators on `λ_0..λ_m` and `z`: terms `c·λ^u·z^j·∂_λ^v·∂_z^w`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct AmbientKey {
    pub u: Vec<i32>,
    pub j: i32,
    pub v: Vec<u32>,
    pub w: u32,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AmbientOperator {
    nl: usize,
    terms: BTreeMap<AmbientKey, Q>,
}

impl AmbientOperator {
    /// `nl` is the number of λ variables (`m + 1`).
    pub fn zero(nl: usize) -> Self {
        Self { nl, terms: BTreeMap::new() }
    }

    pub fn term(nl: usize, c: Q, u: Vec<i32>, j: i32, v: Vec<u32>, w: u32) -> Self {
        let mut op = Self::zero(nl);
        op.add_term(AmbientKey { u, j, v, w }, &c);
        op
    }

    pub fn constant(nl: usize, c: Q) -> Self {
        Self::term(nl, c, vec![0; nl], 0, vec![0; nl], 0)
    }

    pub fn one(nl: usize) -> Self {
        Self::constant(nl, Q::one())
    }

    pub fn lambda_pow(nl: usize, i: usize, k: i32) -> Self {
        let mut u = vec![0; nl];
        u[i] = k;
        Self::term(nl, Q::one(), u, 0, vec![0; nl], 0)
    }

    pub fn z_pow(nl: usize, j: i32) -> Self {
        Self::term(nl, Q::one(), vec![0; nl], j, vec![0; nl], 0)
    }

    pub fn d_lambda(nl: usize, i: usize) -> Self {
        let mut v = vec![0; nl];
        v[i] = 1;
        Self::term(nl, Q::one(), vec![0; nl], 0, v, 0)
    }

    pub fn d_z(nl: usize) -> Self {
        Self::term(nl, Q::one(), vec![0; nl], 0, vec![0; nl], 1)
    }

    /// `λ_i ∂_{λ_i}`.
    pub fn lambda_d(nl: usize, i: usize) -> Self {
        &Self::lambda_pow(nl, i, 1) * &Self::d_lambda(nl, i)
    }

    pub fn terms(&self) -> &BTreeMap<AmbientKey, Q> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, key: AmbientKey, c: &Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.nl);
        for (k, x) in &self.terms {
            out.add_term(k.clone(), &(x * c));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nl);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    fn left_d_lambda(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nl);
        for (k, c) in &self.terms {
            let mut k1 = k.clone();
            k1.v[i] += 1;
            out.add_term(k1, c);
            if k.u[i] != 0 {
                let mut k2 = k.clone();
                k2.u[i] -= 1;
                out.add_term(k2, &(c * q(i64::from(k.u[i]))));
            }
        }
        out
    }

    fn left_d_z(&self) -> Self {
        let mut out = Self::zero(self.nl);
        for (k, c) in &self.terms {
            let mut k1 = k.clone();
            k1.w += 1;
            out.add_term(k1, c);
            if k.j != 0 {
                let mut k2 = k.clone();
                k2.j -= 1;
                out.add_term(k2, &(c * q(i64::from(k.j))));
            }
        }
        out
    }

    /// Applies the operator to the Laurent monomial `λ^u·z^j`.
    pub fn apply_to_monomial(&self, u: &[i32], j: i32) -> BTreeMap<(Vec<i32>, i32), Q> {
        let mut out: BTreeMap<(Vec<i32>, i32), Q> = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut coeff = c.clone();
            let mut uu = u.to_vec();
            let mut jj = j;
            for _ in 0..k.w {
                coeff *= q(i64::from(jj));
                jj -= 1;
            }
            for (i, &n) in k.v.iter().enumerate() {
                for _ in 0..n {
                    coeff *= q(i64::from(uu[i]));
                    uu[i] -= 1;
                }
            }
            if coeff.is_zero() {
                continue;
            }
            for (x, y) in uu.iter_mut().zip(&k.u) {
                *x += y;
            }
            jj += k.j;
            let entry = out.entry((uu, jj)).or_insert_with(Q::zero);
            *entry += coeff;
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn key_string(k: &AmbientKey) -> String {
        let mut parts = Vec::new();
        for (i, &e) in k.u.iter().enumerate() {
            push_power(&mut parts, &format!("l{i}"), i64::from(e));
        }
        push_power(&mut parts, "z", i64::from(k.j));
        for (i, &e) in k.v.iter().enumerate() {
            push_power(&mut parts, &format!("d{i}"), i64::from(e));
        }
        push_power(&mut parts, "dz", i64::from(k.w));
        parts.join("*")
    }
}

impl fmt::Display for AmbientOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_terms(self.terms.iter(), Self::key_string))
    }
}

impl Serialize for AmbientOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_string().serialize(s)
    }
}

impl Add for &AmbientOperator {
    type Output = AmbientOperator;
    fn add(self, rhs: &AmbientOperator) -> AmbientOperator {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c);
        }
        out
    }
}

impl Sub for &AmbientOperator {
    type Output = AmbientOperator;
    fn sub(self, rhs: &AmbientOperator) -> AmbientOperator {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), &-c);
        }
        out
    }
}

impl Mul for &AmbientOperator {
    type Output = AmbientOperator;
    fn mul(self, rhs: &AmbientOperator) -> AmbientOperator {
        assert_eq!(self.nl, rhs.nl, "operators over different variables");
        let mut out = AmbientOperator::zero(self.nl);
        for (k, c) in &self.terms {
            let mut acc = rhs.clone();
            for _ in 0..k.w {
                acc = acc.left_d_z();
            }
            for (i, &n) in k.v.iter().enumerate() {
                for _ in 0..n {
                    acc = acc.left_d_lambda(i);
                }
            }
            let mut shifted = AmbientOperator::zero(self.nl);
            for (kk, x) in &acc.terms {
                let mut k1 = kk.clone();
                for (a, b) in k1.u.iter_mut().zip(&k.u) {
                    *a += b;
                }
                k1.j += k.j;
                shifted.add_term(k1, &(x * c));
            }
            out = &out + &shifted;
        }
        out
    }
}
