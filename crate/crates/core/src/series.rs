//! Cohomology-valued truncated series in `q`, `z^{±1}`, `log q_a` and `log z`.
//!
//! Coefficients are algebra elements (coordinate vectors in the basis of a
//! [`GradedAlgebra`]). The q-exponents are truncated componentwise at `order`;
//! an optional z-window drops out-of-range z-powers and records that it did.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::cohomology::GradedAlgebra;
use crate::qseries::QSeries;
use crate::rational::{q, to_num_den, Q};
use crate::weyl::WeylOperator;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct SeriesKey {
    pub q: Vec<u32>,
    pub z: i32,
    pub logq: Vec<u32>,
    pub logz: u32,
}

impl SeriesKey {
    pub fn plain(q: Vec<u32>, z: i32) -> Self {
        let r = q.len();
        Self { q, z, logq: vec![0; r], logz: 0 }
    }

    pub fn has_logs(&self) -> bool {
        self.logz > 0 || self.logq.iter().any(|&x| x > 0)
    }

    fn label(&self) -> String {
        let join = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!("q={};z={};logq={};logz={}", join(&self.q), self.z, join(&self.logq), self.logz)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LogLaurentSeries {
    r: usize,
    dim: usize,
    order: u32,
    z_window: Option<(i32, i32)>,
    truncated: bool,
    terms: BTreeMap<SeriesKey, Vec<Q>>,
}

fn axpy(acc: &mut [Q], c: &Q, x: &[Q]) {
    for (a, b) in acc.iter_mut().zip(x) {
        if !b.is_zero() {
            *a += c * b;
        }
    }
}

impl LogLaurentSeries {
    pub fn zero(r: usize, dim: usize, order: u32) -> Self {
        Self { r, dim, order, z_window: None, truncated: false, terms: BTreeMap::new() }
    }

    /// Same shape, no terms.
    pub fn empty_like(&self) -> Self {
        Self { terms: BTreeMap::new(), truncated: false, ..self.clone() }
    }

    pub fn with_z_window(mut self, lo: i32, hi: i32) -> Self {
        self.z_window = Some((lo, hi));
        let keys: Vec<SeriesKey> = self.terms.keys().filter(|k| k.z < lo || k.z > hi).cloned().collect();
        for k in keys {
            self.terms.remove(&k);
            self.truncated = true;
        }
        self
    }

    /// The constant `x` (an algebra element).
    pub fn constant(r: usize, order: u32, x: Vec<Q>) -> Self {
        let mut s = Self::zero(r, x.len(), order);
        s.add_term(SeriesKey::plain(vec![0; r], 0), &x);
        s
    }

    pub fn nvars(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn z_window(&self) -> Option<(i32, i32)> {
        self.z_window
    }

    /// Whether any term was dropped for lying outside the z-window.
    pub fn was_truncated(&self) -> bool {
        self.truncated
    }

    pub fn terms(&self) -> &BTreeMap<SeriesKey, Vec<Q>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &SeriesKey) -> Vec<Q> {
        self.terms.get(key).cloned().unwrap_or_else(|| vec![Q::zero(); self.dim])
    }

    pub fn in_q_range(&self, e: &[u32]) -> bool {
        e.iter().all(|&x| x <= self.order)
    }

    pub fn add_term(&mut self, key: SeriesKey, x: &[Q]) {
        self.add_scaled_term(key, &Q::one(), x);
    }

    fn add_scaled_term(&mut self, key: SeriesKey, c: &Q, x: &[Q]) {
        if c.is_zero() || x.iter().all(Zero::is_zero) || !self.in_q_range(&key.q) {
            return;
        }
        if let Some((lo, hi)) = self.z_window {
            if key.z < lo || key.z > hi {
                self.truncated = true;
                return;
            }
        }
        let dim = self.dim;
        let entry = self.terms.entry(key.clone()).or_insert_with(|| vec![Q::zero(); dim]);
        axpy(entry, c, x);
        if entry.iter().all(Zero::is_zero) {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.truncated |= other.truncated;
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            out.add_scaled_term(k.clone(), c, v);
        }
        out
    }

    /// Cup product of every coefficient with the class `x`.
    pub fn mul_element(&self, ga: &GradedAlgebra, x: &[Q]) -> Self {
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            out.add_term(k.clone(), &ga.mul(x, v));
        }
        out
    }

    pub fn mul(&self, ga: &GradedAlgebra, other: &Self) -> Self {
        let mut out = self.empty_like();
        out.order = self.order.min(other.order);
        out.truncated = self.truncated || other.truncated;
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let qe: Vec<u32> = ka.q.iter().zip(&kb.q).map(|(x, y)| x + y).collect();
                if !out.in_q_range(&qe) {
                    continue;
                }
                let key = SeriesKey {
                    q: qe,
                    z: ka.z + kb.z,
                    logq: ka.logq.iter().zip(&kb.logq).map(|(x, y)| x + y).collect(),
                    logz: ka.logz + kb.logz,
                };
                out.add_term(key, &ga.mul(va, vb));
            }
        }
        out
    }

    /// Multiplies by `c·q^e·z^j`.
    pub fn shift(&self, c: &Q, e: &[u32], j: i32) -> Self {
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            let key = SeriesKey { q: k.q.iter().zip(e).map(|(x, y)| x + y).collect(), z: k.z + j, ..k.clone() };
            out.add_scaled_term(key, c, v);
        }
        out
    }

    /// `q_a ∂_{q_a}`, acting on both `q^e` and `(log q_a)^α`.
    pub fn q_derivative(&self, a: usize) -> Self {
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            if k.q[a] > 0 {
                out.add_scaled_term(k.clone(), &q(i64::from(k.q[a])), v);
            }
            if k.logq[a] > 0 {
                let mut k2 = k.clone();
                k2.logq[a] -= 1;
                out.add_scaled_term(k2, &q(i64::from(k.logq[a])), v);
            }
        }
        out
    }

    /// `z ∂_z`, acting on `z^j` and `(log z)^β`.
    pub fn z_derivative(&self) -> Self {
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            if k.z != 0 {
                out.add_scaled_term(k.clone(), &q(i64::from(k.z)), v);
            }
            if k.logz > 0 {
                let mut k2 = k.clone();
                k2.logz -= 1;
                out.add_scaled_term(k2, &q(i64::from(k.logz)), v);
            }
        }
        out
    }

    /// `θ_a = z·q_a∂_{q_a}`.
    pub fn theta(&self, a: usize) -> Self {
        self.q_derivative(a).shift(&Q::one(), &vec![0; self.r], 1)
    }

    /// `z²∂_z`.
    pub fn euler_z(&self) -> Self {
        self.z_derivative().shift(&Q::one(), &vec![0; self.r], 1)
    }

    /// Applies a reduced-variable operator coefficientwise.
    pub fn apply(&self, op: &WeylOperator) -> Self {
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, c) in op.terms() {
            let mut s = self.clone();
            for _ in 0..k.beta {
                s = s.euler_z();
            }
            for (a, &n) in k.alpha.iter().enumerate() {
                for _ in 0..n {
                    s = s.theta(a);
                }
            }
            out = out.add(&s.shift(c, &k.e, k.j));
        }
        out
    }

    pub fn is_log_free(&self) -> bool {
        self.terms.keys().all(|k| !k.has_logs())
    }

    pub fn max_z(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.z).max()
    }

    pub fn min_z(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.z).min()
    }

    /// All q-exponents present.
    pub fn q_support(&self) -> Vec<Vec<u32>> {
        let mut v: Vec<Vec<u32>> = self.terms.keys().map(|k| k.q.clone()).collect();
        v.dedup();
        v.sort();
        v.dedup();
        v
    }

    /// The log-free coefficient of `z^j` as a q-series per basis component.
    pub fn z_coefficient(&self, j: i32) -> Vec<QSeries> {
        let mut out = vec![QSeries::zero(self.r, self.order); self.dim];
        for (k, v) in &self.terms {
            if k.z == j && !k.has_logs() {
                for (s, x) in out.iter_mut().zip(v) {
                    s.add_term(&k.q, x);
                }
            }
        }
        out
    }

    /// Substitutes `q_a ↦ Q_a·u_a(Q)` and `log q_a ↦ log Q_a + w_a(Q)`.
    pub fn substitute(&self, u: &[QSeries], w: &[QSeries]) -> Self {
        let r = self.r;
        let mut out = self.empty_like();
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            let mut scalar = QSeries::monomial(r, self.order, k.q.clone(), Q::one());
            for (a, &e) in k.q.iter().enumerate() {
                if e > 0 {
                    scalar = scalar.mul(&u[a].pow(e));
                }
            }
            // (log Q_a + w_a)^α_a expanded binomially
            let mut parts: Vec<(Vec<u32>, QSeries)> = vec![(vec![0; r], scalar)];
            for a in 0..r {
                let alpha = k.logq[a];
                if alpha == 0 {
                    continue;
                }
                let mut next = Vec::new();
                for (logs, s) in &parts {
                    for kk in 0..=alpha {
                        let binom = binomial(alpha, kk);
                        let term = s.mul(&w[a].pow(alpha - kk)).scale(&binom);
                        if term.is_zero() {
                            continue;
                        }
                        let mut l2 = logs.clone();
                        l2[a] = kk;
                        next.push((l2, term));
                    }
                }
                parts = next;
            }
            for (logs, s) in parts {
                for (e, c) in s.terms() {
                    out.add_scaled_term(SeriesKey { q: e.clone(), z: k.z, logq: logs.clone(), logz: k.logz }, c, v);
                }
            }
        }
        out
    }

    /// Keeps only q-exponents with every component at most `order`.
    pub fn truncate(&self, order: u32) -> Self {
        let mut out = self.empty_like();
        out.order = order.min(self.order);
        out.truncated = self.truncated;
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v);
        }
        out
    }

    /// Coefficient table: key label → `"num/den"` coordinates.
    pub fn to_table(&self) -> BTreeMap<String, Vec<String>> {
        self.terms.iter().map(|(k, v)| (k.label(), v.iter().map(to_num_den).collect())).collect()
    }

    /// Human-readable lines `key: element`.
    pub fn format_lines(&self, ga: &GradedAlgebra) -> Vec<String> {
        self.terms.iter().map(|(k, v)| format!("{}: {}", k.label(), ga.format_element(v))).collect()
    }
}

impl Serialize for LogLaurentSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_table().serialize(s)
    }
}

fn binomial(n: u32, k: u32) -> Q {
    let mut acc = Q::one();
    for i in 0..k {
        acc = acc * q(i64::from(n - i)) / q(i64::from(i + 1));
    }
    acc
}

/// `exp(sign · Σ_a log q_a · p_a · z^{z_power})`, a finite sum by nilpotency.
pub fn exp_log_class(ga: &GradedAlgebra, order: u32, sign: i64, z_power: i32) -> LogLaurentSeries {
    let r = ga.r;
    let mut x = LogLaurentSeries::zero(r, ga.dim(), order);
    for a in 0..r {
        let mut logq = vec![0; r];
        logq[a] = 1;
        let key = SeriesKey { q: vec![0; r], z: z_power, logq, logz: 0 };
        x.add_scaled_term(key, &q(sign), &ga.generator(a));
    }
    exp_nilpotent(ga, &x, order)
}

/// `exp(sign · log z · class)`.
pub fn exp_logz_class(ga: &GradedAlgebra, order: u32, class: &[Q], sign: i64) -> LogLaurentSeries {
    let r = ga.r;
    let mut x = LogLaurentSeries::zero(r, ga.dim(), order);
    x.add_scaled_term(SeriesKey { q: vec![0; r], z: 0, logq: vec![0; r], logz: 1 }, &q(sign), class);
    exp_nilpotent(ga, &x, order)
}

fn exp_nilpotent(ga: &GradedAlgebra, x: &LogLaurentSeries, order: u32) -> LogLaurentSeries {
    let mut acc = LogLaurentSeries::constant(ga.r, order, ga.one());
    let mut power = acc.clone();
    for k in 1..=ga.n as i64 + 1 {
        power = power.mul(ga, x).scale(&Q::new(1.into(), k.into()));
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::build_algebra;
    use crate::fan::{exact_sequence, primitive_relations};
    use crate::fixtures;

    fn p2_algebra() -> GradedAlgebra {
        let fan = fixtures::p2();
        let esd = exact_sequence(&fan, None).unwrap();
        let prels = primitive_relations(&fan, &esd);
        build_algebra(&fan, &esd, &prels).unwrap()
    }

    #[test]
    fn exp_of_log_class_inverts() {
        let ga = p2_algebra();
        let a = exp_log_class(&ga, 3, 1, -1);
        let b = exp_log_class(&ga, 3, -1, -1);
        assert_eq!(a.mul(&ga, &b), LogLaurentSeries::constant(1, 3, ga.one()));
        // p^3 = 0 stops the expansion after the (log q)^2 term
        assert!(a.terms().keys().all(|k| k.logq[0] <= 2));
    }

    #[test]
    fn theta_acts_on_logs() {
        let ga = p2_algebra();
        let e = exp_log_class(&ga, 3, 1, -1);
        // θ e^{p log q / z} = p e^{p log q / z}
        assert_eq!(e.theta(0), e.mul_element(&ga, &ga.generator(0)));
    }

    #[test]
    fn window_records_truncation() {
        let ga = p2_algebra();
        let mut s = LogLaurentSeries::zero(1, ga.dim(), 2).with_z_window(-2, 0);
        s.add_term(SeriesKey::plain(vec![1], -3), &ga.one());
        assert!(s.is_zero());
        assert!(s.was_truncated());
    }

    #[test]
    fn substitution_with_identity_map() {
        let ga = p2_algebra();
        let e = exp_log_class(&ga, 3, 1, -1).shift(&q(2), &[1], -2);
        let u = vec![QSeries::one(1, 3)];
        let w = vec![QSeries::zero(1, 3)];
        assert_eq!(e.substitute(&u, &w), e);
    }
}
