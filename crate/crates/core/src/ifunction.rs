//! The I-function, its Γ-cancelled twist Ĩ, annihilation checks, the mirror
//! map and θ-word derivatives.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cohomology::GradedAlgebra;
use crate::fan::ExactSequenceData;
use crate::qseries::{invert_exponential_map, QSeries};
use crate::rational::{q, Q};
use crate::series::{exp_log_class, exp_logz_class, LogLaurentSeries, SeriesKey};
use crate::weyl::WeylOperator;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("z-window {lo}..={hi} is too narrow for q-order {order}")]
    TruncationOverflow { lo: i32, hi: i32, order: u32 },
    #[error("non-effective class {0:?} contributes a nonzero coefficient")]
    NonEffectiveContribution(Vec<i64>),
    #[error("the z^-1 coefficient has a component of degree {degree} at q^{q:?}")]
    GammaNotDegreeOne { degree: u32, q: Vec<u32> },
    #[error("mirror map is not invertible")]
    NotInvertible,
    #[error("word of length {len} exceeds the nilpotency depth {depth}")]
    WordTooLong { len: usize, depth: usize },
    #[error("series still carries logarithms after removing e^(δ/z)")]
    LogsRemain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxPoint {
    pub l: Vec<i64>,
    pub degrees: Vec<u32>,
    pub effective: bool,
}

/// All `l ∈ 𝕃` with `p_a(l) ∈ [0, N]`, flagged by pairing against the nef generators.
pub fn enumerate_effective_box(esd: &ExactSequenceData, nef_generators: &[Vec<i64>], order: u32) -> Vec<BoxPoint> {
    let r = esd.r;
    let mut out = Vec::new();
    let mut d = vec![0u32; r];
    loop {
        let di: Vec<i64> = d.iter().map(|&x| i64::from(x)).collect();
        let l = esd.relation_from_degrees(&di);
        let effective = nef_generators.iter().all(|y| y.iter().zip(&di).map(|(a, b)| a * b).sum::<i64>() >= 0);
        out.push(BoxPoint { l, degrees: d.clone(), effective });
        // odometer over [0, N]^r
        let mut k = 0;
        while k < r {
            if d[k] < order {
                d[k] += 1;
                break;
            }
            d[k] = 0;
            k += 1;
        }
        if k == r {
            break;
        }
    }
    out
}

/// `(D + ν·z)^{±1}` (or `(D + ν)^{±1}` without `z`), expanded by nilpotency.
fn linear_factor(ga: &GradedAlgebra, d: &[Q], nu: i64, with_z: bool, inverse: bool, order: u32) -> LogLaurentSeries {
    let r = ga.r;
    let zexp = |k: i32| if with_z { k } else { 0 };
    let mut s = LogLaurentSeries::zero(r, ga.dim(), order);
    if !inverse {
        s.add_term(SeriesKey::plain(vec![0; r], 0), d);
        s.add_term(SeriesKey::plain(vec![0; r], zexp(1)), &ga.one().iter().map(|x| x * q(nu)).collect::<Vec<_>>());
        return s;
    }
    assert!(nu != 0, "D is not invertible");
    // Σ_k (-1)^k D^k (ν z)^{-k-1}
    let mut power = ga.one();
    let nuq = q(nu);
    let mut scale = nuq.recip();
    for k in 0..=ga.n as i32 {
        if power.iter().all(Zero::is_zero) {
            break;
        }
        s.add_term(SeriesKey::plain(vec![0; r], zexp(-k - 1)), &power.iter().map(|x| x * &scale).collect::<Vec<_>>());
        power = ga.mul(&power, d);
        scale = -scale / &nuq;
    }
    s
}

/// `∏_i ratio_i(l_i)` (with `z`) or `∏_i h_i(l_i)` (without).
fn summand(ga: &GradedAlgebra, divisors: &[Vec<Q>], l: &[i64], with_z: bool, order: u32) -> LogLaurentSeries {
    let r = ga.r;
    let mut acc = LogLaurentSeries::constant(r, order, ga.one());
    for (i, &li) in l.iter().enumerate() {
        if li >= 0 {
            for nu in 1..=li {
                acc = acc.mul(ga, &linear_factor(ga, &divisors[i], nu, with_z, true, order));
            }
        } else {
            for nu in (li + 1)..=0 {
                acc = acc.mul(ga, &linear_factor(ga, &divisors[i], nu, with_z, false, order));
            }
        }
        if acc.is_zero() {
            break;
        }
    }
    acc
}

#[derive(Clone, Debug)]
pub struct IFunction {
    /// `I` itself, including `e^{δ/z}`.
    pub full: LogLaurentSeries,
    /// `e^{-δ/z}·I`, log-free.
    pub stripped: LogLaurentSeries,
    pub box_points: Vec<BoxPoint>,
}

fn hypergeometric_sum(
    esd: &ExactSequenceData,
    ga: &GradedAlgebra,
    box_points: &[BoxPoint],
    order: u32,
    with_z: bool,
) -> Result<LogLaurentSeries, SeriesError> {
    let r = esd.r;
    let divisors: Vec<Vec<Q>> = (0..esd.m).map(|i| ga.divisor(i)).collect();
    let mut sum = LogLaurentSeries::zero(r, ga.dim(), order);
    for bp in box_points {
        let mut term = summand(ga, &divisors, &bp.l, with_z, order);
        if !bp.effective {
            if !term.is_zero() {
                return Err(SeriesError::NonEffectiveContribution(bp.l.clone()));
            }
            continue;
        }
        let z_shift = if with_z { 0 } else { -(bp.l.iter().sum::<i64>() as i32) };
        term = term.shift(&Q::one(), &bp.degrees, z_shift);
        sum = sum.add(&term);
    }
    Ok(sum)
}

fn check_window(s: &LogLaurentSeries) -> Result<(), SeriesError> {
    match (s.was_truncated(), s.z_window()) {
        (true, Some((lo, hi))) => Err(SeriesError::TruncationOverflow { lo, hi, order: s.order() }),
        _ => Ok(()),
    }
}

/// `I = e^{δ/z}·Σ_l q^{p(l)} ∏_i ratio_i(l_i)` over the box of order `N`.
/// With a z-window, any dropped term is reported as `TruncationOverflow`.
pub fn build_i(
    esd: &ExactSequenceData,
    ga: &GradedAlgebra,
    nef_generators: &[Vec<i64>],
    order: u32,
    z_window: Option<(i32, i32)>,
) -> Result<IFunction, SeriesError> {
    let box_points = enumerate_effective_box(esd, nef_generators, order);
    let mut stripped = hypergeometric_sum(esd, ga, &box_points, order, true)?;
    if let Some((lo, hi)) = z_window {
        stripped = stripped.with_z_window(lo, hi);
    }
    check_window(&stripped)?;
    let full = exp_log_class(ga, order, 1, -1).mul(ga, &stripped);
    Ok(IFunction { full, stripped, box_points })
}

/// `Ĩ = e^{δ}·z^{-ρ}·Σ_l q^{p(l)} z^{-ρ(l)} ∏_i h_i(l_i)`, all coefficients rational.
pub fn build_i_tilde(
    esd: &ExactSequenceData,
    ga: &GradedAlgebra,
    nef_generators: &[Vec<i64>],
    order: u32,
) -> Result<LogLaurentSeries, SeriesError> {
    let box_points = enumerate_effective_box(esd, nef_generators, order);
    let sum = hypergeometric_sum(esd, ga, &box_points, order, false)?;
    let rho: Vec<Q> = {
        let mut v = ga.zero();
        for (a, &k) in esd.rho.iter().enumerate() {
            for (x, y) in v.iter_mut().zip(ga.generator(a)) {
                *x += q(k) * y;
            }
        }
        v
    };
    let twist = exp_log_class(ga, order, 1, 0).mul(ga, &exp_logz_class(ga, order, &rho, -1));
    Ok(twist.mul(ga, &sum))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnihilationReport {
    pub pass: bool,
    /// Smallest surviving key inside the safe box, if any.
    pub residual: Option<String>,
    pub safe_q_order: u32,
}

pub fn check_annihilation(op: &WeylOperator, s: &LogLaurentSeries) -> AnnihilationReport {
    let shift = op.max_q_shift().into_iter().max().unwrap_or(0);
    let safe = s.order().saturating_sub(shift);
    let out = s.apply(op).truncate(safe);
    let residual = out.terms().keys().next().map(|k| format!("{k:?}"));
    AnnihilationReport { pass: residual.is_none(), residual, safe_q_order: safe }
}

#[derive(Clone, Debug, Serialize)]
pub struct MirrorMap {
    pub gamma_prime: Vec<QSeries>,
    /// `κ_a = q_a·exp(γ'_a)`.
    pub kappa: Vec<QSeries>,
}

impl MirrorMap {
    pub fn is_identity(&self) -> bool {
        self.gamma_prime.iter().all(QSeries::is_zero)
    }

    /// `u_a` with `κ^{-1}(Q)_a = Q_a·u_a(Q)`.
    pub fn inverse_multipliers(&self) -> Vec<QSeries> {
        invert_exponential_map(&self.gamma_prime)
    }

    /// `κ^{-1}(Q)_a` as series.
    pub fn inverse(&self) -> Vec<QSeries> {
        let r = self.gamma_prime.len();
        self.inverse_multipliers()
            .iter()
            .enumerate()
            .map(|(a, u)| u.mul(&QSeries::var(r, u.order(), a)))
            .collect()
    }
}

/// Reads `γ'` off the `z^{-1}` coefficient of `e^{-δ/z}·I`.
pub fn mirror_map(ga: &GradedAlgebra, ifn: &IFunction) -> Result<MirrorMap, SeriesError> {
    let gamma = ifn.stripped.z_coefficient(-1);
    let r = ga.r;
    for (k, s) in gamma.iter().enumerate() {
        if ga.degrees[k] != 1 {
            if let Some(e) = s.terms().keys().next() {
                return Err(SeriesError::GammaNotDegreeOne { degree: ga.degrees[k], q: e.clone() });
            }
        }
    }
    let mut gamma_prime = Vec::with_capacity(r);
    for a in 0..r {
        let mut e = vec![0; r];
        e[a] = 1;
        let idx = ga.basis_index(&e).expect("p_a is a basis element");
        gamma_prime.push(gamma[idx].clone());
    }
    let kappa = gamma_prime.iter().enumerate().map(|(a, g)| QSeries::var(r, g.order(), a).mul(&g.exp())).collect();
    Ok(MirrorMap { gamma_prime, kappa })
}

/// Rewrites `target` in the coordinates `Q = κ(q)`: `q = κ^{-1}(Q)` and
/// `log q_a = log Q_a - γ'_a(κ^{-1}(Q))`.
pub fn invert_and_substitute(target: &LogLaurentSeries, mm: &MirrorMap) -> Result<LogLaurentSeries, SeriesError> {
    if mm.kappa.iter().enumerate().any(|(a, k)| {
        let mut e = vec![0; mm.kappa.len()];
        e[a] = 1;
        !k.coeff(&e).is_one()
    }) {
        return Err(SeriesError::NotInvertible);
    }
    if mm.is_identity() {
        return Ok(target.clone());
    }
    let u = mm.inverse_multipliers();
    let w: Vec<QSeries> = mm.gamma_prime.iter().map(|g| g.substitute_scaled(&u).scale(&-Q::one())).collect();
    Ok(target.substitute(&u, &w))
}

/// `e^{-δ/z}·S`, which must be log-free.
pub fn strip_gauge(ga: &GradedAlgebra, full: &LogLaurentSeries) -> Result<LogLaurentSeries, SeriesError> {
    let s = exp_log_class(ga, full.order(), -1, -1).mul(ga, full);
    if !s.is_log_free() {
        return Err(SeriesError::LogsRemain);
    }
    Ok(s)
}

/// `G_w = e^{-δ/z}·θ_{a_k}⋯θ_{a_1} S` via `G_{w·a} = p_a·G_w + θ_a G_w`.
/// Letters are 0-based generator indices.
pub fn divisor_word_series(
    ga: &GradedAlgebra,
    full: &LogLaurentSeries,
    word: &[usize],
    allow_long: bool,
) -> Result<LogLaurentSeries, SeriesError> {
    if word.len() > ga.n && !allow_long {
        return Err(SeriesError::WordTooLong { len: word.len(), depth: ga.n });
    }
    let mut g = strip_gauge(ga, full)?;
    for &a in word {
        g = g.mul_element(ga, &ga.generator(a)).add(&g.theta(a));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::build_algebra;
    use crate::fan::{exact_sequence, mori_nef_cones, primitive_relations, FanData};
    use crate::fixtures;
    use crate::gkz::{euler_operator, reduced_box_operator};
    use crate::rational::qfrac;

    struct Setup {
        esd: ExactSequenceData,
        ga: GradedAlgebra,
        nef: Vec<Vec<i64>>,
        prels: Vec<crate::fan::PrimitiveRelation>,
    }

    fn setup(fan: &FanData) -> Setup {
        let esd = exact_sequence(fan, None).unwrap();
        let prels = primitive_relations(fan, &esd);
        let ga = build_algebra(fan, &esd, &prels).unwrap();
        let nef = mori_nef_cones(fan, &esd).nef_generators;
        Setup { esd, ga, nef, prels }
    }

    #[test]
    fn box_examples() {
        let s = setup(&fixtures::p1());
        let b = enumerate_effective_box(&s.esd, &s.nef, 3);
        let ls: Vec<Vec<i64>> = b.iter().map(|p| p.l.clone()).collect();
        assert_eq!(ls, vec![vec![0, 0], vec![1, 1], vec![2, 2], vec![3, 3]]);
        assert!(b.iter().all(|p| p.effective));
        assert_eq!(enumerate_effective_box(&s.esd, &s.nef, 0).len(), 1);
        let s = setup(&fixtures::f2());
        let b = enumerate_effective_box(&s.esd, &s.nef, 2);
        assert_eq!(b.len(), 9);
        assert!(b.iter().all(|p| p.effective));
    }

    #[test]
    fn p1_first_order_coefficient() {
        let s = setup(&fixtures::p1());
        let ifn = build_i(&s.esd, &s.ga, &s.nef, 2, None).unwrap();
        // q^1: z^-2 - 2p z^-3
        assert_eq!(ifn.stripped.coeff(&SeriesKey::plain(vec![1], -2)), vec![q(1), q(0)]);
        assert_eq!(ifn.stripped.coeff(&SeriesKey::plain(vec![1], -3)), vec![q(0), q(-2)]);
        assert_eq!(ifn.stripped.coeff(&SeriesKey::plain(vec![0], 0)), vec![q(1), q(0)]);
        assert!(ifn.stripped.is_log_free());
        assert!(ifn.stripped.max_z().unwrap() <= 0);
    }

    #[test]
    fn narrow_window_overflows() {
        let s = setup(&fixtures::p1());
        let err = build_i(&s.esd, &s.ga, &s.nef, 2, Some((-3, 0))).unwrap_err();
        assert!(matches!(err, SeriesError::TruncationOverflow { .. }));
    }

    #[test]
    fn i_tilde_at_q_zero() {
        let s = setup(&fixtures::p1());
        let it = build_i_tilde(&s.esd, &s.ga, &s.nef, 3).unwrap();
        let at0: Vec<(&SeriesKey, &Vec<Q>)> = it.terms().iter().filter(|(k, _)| k.q == vec![0]).collect();
        // exp(p log q) exp(-2 p log z) at q^0: 1 + p log q - 2 p log z
        assert_eq!(at0.len(), 3);
        assert!(it.terms().keys().all(|k| k.logz as usize <= 1));
        // l=(1,1): q z^-2 (1+p)^-2 = q z^-2 (1 - 2p)
        assert_eq!(it.coeff(&SeriesKey::plain(vec![1], -2)), vec![q(1), q(-2)]);
    }

    #[test]
    fn operators_annihilate_i_tilde() {
        for fan in fixtures::weak_fano_fixtures() {
            let s = setup(&fan);
            let it = build_i_tilde(&s.esd, &s.ga, &s.nef, 3).unwrap();
            for p in &s.prels {
                let op = reduced_box_operator(&s.esd, &p.relation).unwrap();
                let rep = check_annihilation(&op, &it);
                assert!(rep.pass, "{:?} leaves {:?}", p.relation, rep.residual);
            }
            for lattice in [true, false] {
                assert!(check_annihilation(&euler_operator(&s.esd, lattice), &it).pass);
            }
        }
    }

    #[test]
    fn boxes_annihilate_i() {
        for fan in fixtures::weak_fano_fixtures() {
            let s = setup(&fan);
            let ifn = build_i(&s.esd, &s.ga, &s.nef, 3, None).unwrap();
            for p in &s.prels {
                let op = reduced_box_operator(&s.esd, &p.relation).unwrap();
                assert!(check_annihilation(&op, &ifn.full).pass);
            }
        }
    }

    #[test]
    fn fano_mirror_maps_are_trivial() {
        for fan in [fixtures::p1(), fixtures::p2(), fixtures::p1xp1(), fixtures::f1()] {
            let s = setup(&fan);
            let ifn = build_i(&s.esd, &s.ga, &s.nef, 3, None).unwrap();
            assert!(mirror_map(&s.ga, &ifn).unwrap().is_identity());
        }
    }

    #[test]
    fn f2_mirror_map_and_inverse() {
        let s = setup(&fixtures::f2());
        let ifn = build_i(&s.esd, &s.ga, &s.nef, 3, None).unwrap();
        let mm = mirror_map(&s.ga, &ifn).unwrap();
        assert_eq!(mm.gamma_prime[0].coeff(&[1, 0]), q(2));
        assert_eq!(mm.gamma_prime[1].coeff(&[1, 0]), q(-1));
        // κ(κ^{-1}(Q)) = Q
        let inv = mm.inverse_multipliers();
        for a in 0..2 {
            let round = mm.kappa[a].substitute_scaled(&inv);
            assert_eq!(round, QSeries::var(2, 3, a));
        }
        assert_eq!(mm.gamma_prime[0].coeff(&[2, 0]), q(3));
        assert_eq!(mm.gamma_prime[1].coeff(&[3, 0]), qfrac(-10, 3));
    }

    #[test]
    fn p1_words() {
        let s = setup(&fixtures::p1());
        let ifn = build_i(&s.esd, &s.ga, &s.nef, 3, None).unwrap();
        let g1 = divisor_word_series(&s.ga, &ifn.full, &[0], false).unwrap();
        assert_eq!(g1.coeff(&SeriesKey::plain(vec![0], 0)), vec![q(0), q(1)]);
        let g11 = divisor_word_series(&s.ga, &ifn.full, &[0, 0], true).unwrap();
        // z^0 part of G_{(1,1)} is q·1
        assert_eq!(g11.coeff(&SeriesKey::plain(vec![1], 0)), vec![q(1), q(0)]);
        assert_eq!(g11.coeff(&SeriesKey::plain(vec![0], 0)), vec![q(0), q(0)]);
        assert!(matches!(
            divisor_word_series(&s.ga, &ifn.full, &[0, 0], false),
            Err(SeriesError::WordTooLong { len: 2, depth: 1 })
        ));
    }

    #[test]
    fn non_effective_points_vanish() {
        // P1 x P1 with the nef basis H1, H1 + H2: the box contains non-effective classes
        let fan = fixtures::p1xp1();
        let esd = exact_sequence(&fan, Some(&[vec![1, 0, 0, 0], vec![1, 0, 1, 0]])).unwrap();
        let prels = primitive_relations(&fan, &esd);
        let ga = build_algebra(&fan, &esd, &prels).unwrap();
        let nef = mori_nef_cones(&fan, &esd).nef_generators;
        let box_points = enumerate_effective_box(&esd, &nef, 2);
        assert!(box_points.iter().any(|b| !b.effective));
        assert!(build_i(&esd, &ga, &nef, 2, None).is_ok());
    }
}
