//! The quantum connection: Birkhoff extraction of `Ω_a` from θ-words of a
//! J-function, flatness and pairing checks, and comparison with Batyrev's ring.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::cohomology::GradedAlgebra;
use crate::fan::ExactSequenceData;
use crate::gkz::QuantumRing;
use crate::ifunction::{divisor_word_series, MirrorMap, SeriesError};
use crate::linalg::QMatrix;
use crate::qseries::{QSeries, SeriesMatrix};
use crate::rational::q;
use crate::series::LogLaurentSeries;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnectionError {
    #[error("the θ-word matrix is singular at q = 0")]
    WordBasisSingular,
    #[error("Ω_{a} keeps a z^{z} term at q^{q:?}")]
    ZResidual { a: usize, q: Vec<u32>, z: i32 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Matrix-valued series in `q` with Laurent polynomial coefficients in `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZqMatrix {
    dim: usize,
    r: usize,
    order: u32,
    terms: BTreeMap<Vec<u32>, BTreeMap<i32, QMatrix>>,
}

impl ZqMatrix {
    pub fn zero(dim: usize, r: usize, order: u32) -> Self {
        Self { dim, r, order, terms: BTreeMap::new() }
    }

    pub fn identity(dim: usize, r: usize, order: u32) -> Self {
        let mut m = Self::zero(dim, r, order);
        m.add_term(vec![0; r], 0, &QMatrix::identity(dim));
        m
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BTreeMap<i32, QMatrix>> {
        &self.terms
    }

    pub fn add_term(&mut self, e: Vec<u32>, j: i32, m: &QMatrix) {
        if e.iter().any(|&x| x > self.order) || m.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_default();
        let sum = match slot.get(&j) {
            Some(old) => old + m,
            None => m.clone(),
        };
        if sum.is_zero() {
            slot.remove(&j);
            if slot.is_empty() {
                self.terms.remove(&e);
            }
        } else {
            slot.insert(j, sum);
        }
    }

    fn laurent(&self, e: &[u32]) -> Option<&BTreeMap<i32, QMatrix>> {
        self.terms.get(e)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim, self.r, self.order);
        for (e1, l1) in &self.terms {
            for (e2, l2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(x, y)| x + y).collect();
                if e.iter().any(|&x| x > self.order) {
                    continue;
                }
                for (j1, m1) in l1 {
                    for (j2, m2) in l2 {
                        out.add_term(e.clone(), j1 + j2, &(m1 * m2));
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, l) in &other.terms {
            for (j, m) in l {
                out.add_term(e.clone(), *j, m);
            }
        }
        out
    }

    pub fn left_mul_constant(&self, c: &QMatrix) -> Self {
        let mut out = Self::zero(self.dim, self.r, self.order);
        for (e, l) in &self.terms {
            for (j, m) in l {
                out.add_term(e.clone(), *j, &(c * m));
            }
        }
        out
    }

    /// `z·q_a ∂/∂q_a`.
    pub fn theta(&self, a: usize) -> Self {
        let mut out = Self::zero(self.dim, self.r, self.order);
        for (e, l) in &self.terms {
            for (j, m) in l {
                out.add_term(e.clone(), j + 1, &m.scale(&q(i64::from(e[a]))));
            }
        }
        out
    }

    /// Inverse of a matrix that is the identity at `q = 0`.
    pub fn unipotent_inverse(&self) -> Self {
        let mut inv = Self::identity(self.dim, self.r, self.order);
        for e in box_exponents(self.r, self.order).into_iter().skip(1) {
            let mut acc = Self::zero(self.dim, self.r, self.order);
            for (e1, l1) in &self.terms {
                if e1.iter().all(|&x| x == 0) || e1.iter().zip(&e).any(|(x, y)| x > y) {
                    continue;
                }
                let rest: Vec<u32> = e.iter().zip(e1).map(|(x, y)| x - y).collect();
                if let Some(l2) = inv.laurent(&rest) {
                    for (j1, m1) in l1 {
                        for (j2, m2) in l2 {
                            acc.add_term(e.clone(), j1 + j2, &(m1 * m2).scale(&q(-1)));
                        }
                    }
                }
            }
            if let Some(l) = acc.terms.remove(&e) {
                inv.terms.insert(e, l);
            }
        }
        inv
    }

    /// The `z^j` coefficient as a q-series matrix.
    pub fn z_part(&self, j: i32) -> SeriesMatrix {
        let mut out = SeriesMatrix::zeros(self.dim, self.dim, self.r, self.order);
        for (e, l) in &self.terms {
            if let Some(m) = l.get(&j) {
                for row in 0..self.dim {
                    for col in 0..self.dim {
                        if !m[(row, col)].is_zero() {
                            let mut s = out.get(row, col).clone();
                            s.add_term(e, &m[(row, col)]);
                            out.set(row, col, s);
                        }
                    }
                }
            }
        }
        out
    }

    /// First `(q, z)` carrying a nonzero coefficient with `z ≠ 0`.
    pub fn first_nonconstant_z(&self) -> Option<(Vec<u32>, i32)> {
        self.terms.iter().find_map(|(e, l)| l.keys().find(|&&j| j != 0).map(|&j| (e.clone(), j)))
    }
}

impl Serialize for ZqMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut out: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for (e, l) in &self.terms {
            for (j, m) in l {
                let qs: Vec<String> = e.iter().map(u32::to_string).collect();
                out.insert(format!("q^({}) z^{j}", qs.join(",")), m.to_string_rows());
            }
        }
        out.serialize(s)
    }
}

/// `[0, N]^r` ordered by total degree, then lexicographically.
fn box_exponents(r: usize, order: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..r {
        out = out.into_iter().flat_map(|e: Vec<u32>| (0..=order).map(move |k| [e.clone(), vec![k]].concat())).collect();
    }
    out.sort_by(|a, b| (a.iter().sum::<u32>(), a).cmp(&(b.iter().sum::<u32>(), b)));
    out
}

/// Columns `G_{w_k}` for the words `w_k = p^{α_k}` of the standard basis.
pub fn word_matrix(ga: &GradedAlgebra, full: &LogLaurentSeries) -> Result<ZqMatrix, SeriesError> {
    let dim = ga.dim();
    let mut c = ZqMatrix::zero(dim, ga.r, full.order());
    for (k, alpha) in ga.basis.iter().enumerate() {
        let word: Vec<usize> = alpha.iter().enumerate().flat_map(|(a, &m)| std::iter::repeat(a).take(m as usize)).collect();
        let g = divisor_word_series(ga, full, &word, true)?;
        for (key, v) in g.terms() {
            let mut m = QMatrix::zeros(dim, dim);
            for (i, x) in v.iter().enumerate() {
                m[(i, k)] = x.clone();
            }
            c.add_term(key.q.clone(), key.z, &m);
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffData {
    /// Connection matrices `Ω_a`, one per generator.
    pub omega: Vec<SeriesMatrix>,
    /// `z^0` part of the positive factor.
    pub y0: SeriesMatrix,
    /// Negative factor `S̃ = 1 + O(z^{-1})`.
    pub s_tilde: ZqMatrix,
    /// Positive factor, polynomial in `z`.
    pub f: ZqMatrix,
}

/// Splits the word matrix as `C = S̃·F` and reads `Ω_a = S̃^{-1}(P_a S̃ + θ_a S̃)`.
pub fn birkhoff_extract(ga: &GradedAlgebra, full: &LogLaurentSeries) -> Result<BirkhoffData, ConnectionError> {
    let (dim, r, order) = (ga.dim(), ga.r, full.order());
    let c = word_matrix(ga, full)?;
    let zero_e = vec![0; r];
    let c0 = c.laurent(&zero_e).cloned().unwrap_or_default();
    if c0.keys().any(|&j| j != 0) {
        return Err(ConnectionError::WordBasisSingular);
    }
    let f0 = c0.get(&0).cloned().unwrap_or_else(|| QMatrix::zeros(dim, dim));
    let f0_inv = f0.inverse().ok_or(ConnectionError::WordBasisSingular)?;

    let mut s = ZqMatrix::identity(dim, r, order);
    let mut f = ZqMatrix::zero(dim, r, order);
    f.add_term(zero_e.clone(), 0, &f0);
    for e in box_exponents(r, order).into_iter().skip(1) {
        let mut rest: BTreeMap<i32, QMatrix> = c.laurent(&e).cloned().unwrap_or_default();
        for (e1, l1) in &s.terms {
            if e1 == &zero_e || e1 == &e || e1.iter().zip(&e).any(|(x, y)| x > y) {
                continue;
            }
            let e2: Vec<u32> = e.iter().zip(e1).map(|(x, y)| x - y).collect();
            if let Some(l2) = f.laurent(&e2) {
                for (j1, m1) in l1 {
                    for (j2, m2) in l2 {
                        let slot = rest.entry(j1 + j2).or_insert_with(|| QMatrix::zeros(dim, dim));
                        *slot = &*slot - &(m1 * m2);
                    }
                }
            }
        }
        for (j, m) in rest {
            if j >= 0 {
                f.add_term(e.clone(), j, &m);
            } else {
                s.add_term(e.clone(), j, &(&m * &f0_inv));
            }
        }
    }

    let s_inv = s.unipotent_inverse();
    let mut omega = Vec::with_capacity(r);
    for a in 0..r {
        let p_a = ga.cup_matrix(&ga.generator(a));
        let w = s_inv.mul(&s.left_mul_constant(&p_a).add(&s.theta(a)));
        if let Some((qe, z)) = w.first_nonconstant_z() {
            return Err(ConnectionError::ZResidual { a, q: qe, z });
        }
        omega.push(w.z_part(0));
    }
    let y0 = f.z_part(0);
    Ok(BirkhoffData { omega, y0, s_tilde: s, f })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OriginConnection {
    /// Residue at `λ = 0`: `-c_1 ∪`.
    pub a0: QMatrix,
    /// Grading operator at `λ = ∞`.
    pub ainf: QMatrix,
}

impl OriginConnection {
    /// `[A_∞, A_0] = A_0`.
    pub fn commutator_identity(&self) -> bool {
        self.ainf.commutator(&self.a0) == self.a0
    }
}

/// Everything the `connection` command emits.
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionData {
    pub basis_labels: Vec<String>,
    pub a0: QMatrix,
    pub ainf: QMatrix,
    pub omega: Vec<SeriesMatrix>,
    pub pairing: QMatrix,
}

impl ConnectionData {
    pub fn new(ga: &GradedAlgebra, origin: &OriginConnection, omega: Vec<SeriesMatrix>) -> Self {
        Self {
            basis_labels: ga.basis_labels(),
            a0: origin.a0.clone(),
            ainf: origin.ainf.clone(),
            omega,
            pairing: ga.poincare_pairing_matrix().unwrap_or_else(|_| QMatrix::zeros(ga.dim(), ga.dim())),
        }
    }
}

pub fn origin_connection(ga: &GradedAlgebra, esd: &ExactSequenceData) -> OriginConnection {
    let so = ga.structure_operators(esd);
    OriginConnection { a0: -&so.c1, ainf: so.mu }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlatnessReport {
    pub commute: bool,
    pub potential: bool,
    pub euler: bool,
    pub first_failure: Option<String>,
}

impl FlatnessReport {
    pub fn pass(&self) -> bool {
        self.commute && self.potential && self.euler
    }
}

/// `[Ω_a, Ω_b] = 0`, `θ_a Ω_b = θ_b Ω_a` and `Σ k_a θ_a Ω_b + [A_∞, Ω_b] = Ω_b`.
pub fn flatness_report(omega: &[SeriesMatrix], esd: &ExactSequenceData, ainf: &QMatrix) -> FlatnessReport {
    let r = omega.len();
    let mut rep = FlatnessReport { commute: true, potential: true, euler: true, first_failure: None };
    let fail = |flag: &mut bool, what: String, rep_first: &mut Option<String>| {
        *flag = false;
        rep_first.get_or_insert(what);
    };
    for a in 0..r {
        for b in (a + 1)..r {
            if let Some(d) = omega[a].commutator(&omega[b]).support().into_iter().next() {
                fail(&mut rep.commute, format!("[Ω{}, Ω{}] at q^{d:?}", a + 1, b + 1), &mut rep.first_failure);
            }
            if let Some((d, _, _)) = omega[b].theta(a).first_difference(&omega[a].theta(b)) {
                fail(&mut rep.potential, format!("θ{}Ω{} ≠ θ{}Ω{} at q^{d:?}", a + 1, b + 1, b + 1, a + 1), &mut rep.first_failure);
            }
        }
    }
    for (b, ob) in omega.iter().enumerate() {
        let (rr, order) = (ob.get(0, 0).nvars(), ob.get(0, 0).order());
        let ainf_s = SeriesMatrix::from_constant(ainf, rr, order);
        let mut lhs = ainf_s.commutator(ob);
        for (a, &k) in esd.rho.iter().enumerate() {
            lhs = lhs.add(&ob.theta(a).map(|s| s.scale(&q(k))));
        }
        if let Some((d, _, _)) = lhs.first_difference(ob) {
            fail(&mut rep.euler, format!("Euler identity for Ω{} at q^{d:?}", b + 1), &mut rep.first_failure);
        }
    }
    rep
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairingReport {
    /// `η Ω_a = Ω_aᵀ η` for every `a`.
    pub selfadjoint: bool,
    /// `η μ + μ η = n η`.
    pub mu_identity: bool,
    /// `g` vanishes on degree pairs `(k, l)` with `k + l ≠ n`.
    pub z_pole_order: bool,
}

impl PairingReport {
    pub fn pass(&self) -> bool {
        self.selfadjoint && self.mu_identity && self.z_pole_order
    }
}

pub fn pairing_report(ga: &GradedAlgebra, omega: &[SeriesMatrix], ainf: &QMatrix) -> PairingReport {
    let eta = ga.poincare_pairing_matrix().unwrap_or_else(|_| QMatrix::zeros(ga.dim(), ga.dim()));
    let selfadjoint = omega.iter().all(|o| {
        let (r, order) = (o.get(0, 0).nvars(), o.get(0, 0).order());
        let e = SeriesMatrix::from_constant(&eta, r, order);
        e.mul(o) == o.transpose().mul(&e)
    });
    let lhs = &(&eta * ainf) + &(ainf * &eta);
    let mu_identity = lhs == eta.scale(&q(ga.n as i64));
    let z_pole_order = (0..ga.dim())
        .all(|i| (0..ga.dim()).all(|j| ga.degrees[i] + ga.degrees[j] == ga.n as u32 || eta[(i, j)].is_zero()));
    PairingReport { selfadjoint, mu_identity, z_pole_order }
}

/// `Ω_a(0)^{n+1} = 0` for every `a`.
pub fn residue_nilpotency(ga: &GradedAlgebra, omega: &[SeriesMatrix]) -> bool {
    omega.iter().all(|o| o.at_zero().pow(ga.n as u32 + 1).is_zero())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    /// 0-based generator index.
    pub generator: usize,
    pub q: Vec<u32>,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RingComparison {
    pub pass: bool,
    pub mismatch: Option<Mismatch>,
    /// Columns `x̂^α e_0`.
    pub basis_change: SeriesMatrix,
    /// `K_ab = δ_ab + q_b ∂_b γ'_a` at `q = κ^{-1}(Q)`.
    pub jacobian: Vec<Vec<QSeries>>,
    /// Whether `T` agrees with `Y_0`; only asked when `κ` is the identity.
    pub matches_y0: Option<bool>,
}

/// Checks `x̂_b T = T M_b(κ^{-1}(Q))` with `x̂_b = Σ_a K_ab Ω_a`. Passing
/// `mirror = None` compares naively, identifying `q` with `Q`.
pub fn compare_quantum_rings(
    ga: &GradedAlgebra,
    ring: &QuantumRing,
    birk: &BirkhoffData,
    mirror: Option<&MirrorMap>,
) -> RingComparison {
    let r = ga.r;
    let dim = ga.dim();
    let order = birk.y0.get(0, 0).order();
    let unit = |a: usize, b: usize| if a == b { QSeries::one(r, order) } else { QSeries::zero(r, order) };
    let (jacobian, u) = match mirror {
        Some(mm) => {
            let u = mm.inverse_multipliers();
            let k = (0..r)
                .map(|a| (0..r).map(|b| unit(a, b).add(&mm.gamma_prime[a].theta(b).substitute_scaled(&u))).collect())
                .collect::<Vec<Vec<QSeries>>>();
            (k, Some(u))
        }
        None => ((0..r).map(|a| (0..r).map(|b| unit(a, b)).collect()).collect(), None),
    };
    let xhat: Vec<SeriesMatrix> = (0..r)
        .map(|b| {
            (0..r).fold(SeriesMatrix::zeros(dim, dim, r, order), |acc, a| acc.add(&birk.omega[a].scale_series(&jacobian[a][b])))
        })
        .collect();
    let e0 = ga.basis_index(&vec![0; r]).expect("1 is a basis element");
    let mut t = SeriesMatrix::zeros(dim, dim, r, order);
    for (k, alpha) in ga.basis.iter().enumerate() {
        let mut col: Vec<QSeries> = (0..dim).map(|i| unit(i, e0)).collect();
        for (a, &m) in alpha.iter().enumerate() {
            for _ in 0..m {
                col = (0..dim).map(|i| (0..dim).fold(QSeries::zero(r, order), |s, j| s.add(&xhat[a].get(i, j).mul(&col[j])))).collect();
            }
        }
        for (i, s) in col.into_iter().enumerate() {
            t.set(i, k, s);
        }
    }
    let mut mismatch = None;
    for b in 0..r {
        let mb = ring.matrices[b].truncate(order);
        let mb = match &u {
            Some(u) => mb.substitute_scaled(u),
            None => mb,
        };
        if let Some((qe, row, col)) = xhat[b].mul(&t).first_difference(&t.mul(&mb)) {
            mismatch = Some(Mismatch { generator: b, q: qe, row, col });
            break;
        }
    }
    let matches_y0 = match mirror {
        Some(mm) if !mm.is_identity() => None,
        _ => Some(t == birk.y0),
    };
    RingComparison { pass: mismatch.is_none() && matches_y0 != Some(false), mismatch, basis_change: t, jacobian, matches_y0 }
}

/// Convenience: `Ω` in the cohomology frame from a J-function, plus `Ω_a(0) = p_a ∪`.
pub fn omega_at_origin_is_cup(ga: &GradedAlgebra, omega: &[SeriesMatrix]) -> bool {
    omega.iter().enumerate().all(|(a, o)| o.at_zero() == ga.cup_matrix(&ga.generator(a)))
}
