//! GKZ operator families, the reduced box operators in the Kähler variables
//! `q_a`, their symbols, and the Batyrev quantum ring cut out by the `z = 0`
//! symbols of the primitive relations.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cohomology::{quotient_dimension, GradedAlgebra};
use crate::fan::{ExactSequenceData, PrimitiveRelation};
use crate::linalg::QMatrix;
use crate::poly::{Exponent, Poly};
use crate::qseries::{QSeries, SeriesMatrix};
use crate::rational::{q, Q};
use crate::weyl::{AmbientOperator, NegativeZPower, WeylOperator};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GkzError {
    #[error("{0:?} is not a relation among the rays")]
    NotARelation(Vec<i64>),
    #[error("the grading deg q_a = k_a is not positive on every primitive relation; use a q-truncated ring")]
    GradingNotPositive,
    #[error("quantum ring loses rank in degree {0}")]
    RankDrop(u32),
    #[error("graded normal form needed a term beyond q-order {0}")]
    GradedOverflow(u32),
    #[error(transparent)]
    Symbol(#[from] NegativeZPower),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoxVariant {
    Classical,
    Hat,
    Prime,
    DoublePrime,
}

impl BoxVariant {
    pub const ALL: [BoxVariant; 4] = [BoxVariant::Classical, BoxVariant::Hat, BoxVariant::Prime, BoxVariant::DoublePrime];
}

#[derive(Clone, Debug, Serialize)]
pub struct AmbientFamily {
    pub variant: BoxVariant,
    pub beta: Vec<String>,
    /// `(l, □_l)` for the basis relations `l` (columns of `M`).
    pub boxes: Vec<(Vec<i64>, AmbientOperator)>,
    pub z_ops: Vec<AmbientOperator>,
    pub euler: AmbientOperator,
}

/// Operator families on `λ_0..λ_m` (index 0 is `λ_0`).
pub fn ambient_box_operators(esd: &ExactSequenceData, beta: Option<&[Q]>, variant: BoxVariant) -> AmbientFamily {
    let m = esd.m;
    let nl = m + 1;
    let beta: Vec<Q> = match beta {
        Some(b) => b.to_vec(),
        None => {
            let mut b = vec![Q::zero(); esd.n + 1];
            b[0] = Q::one();
            b
        }
    };
    let d = |i: usize, k: u32| AmbientOperator::d_lambda(nl, i).pow(k);
    let boxes = (0..esd.r)
        .map(|a| {
            let l: Vec<i64> = (0..m).map(|i| esd.m_mat[i][a]).collect();
            (l.clone(), ambient_box(&l, nl, variant, &d))
        })
        .collect();
    let z_ops = (0..esd.n)
        .map(|k| {
            let mut op = AmbientOperator::constant(nl, beta[k + 1].clone());
            for i in 0..m {
                op = &op + &AmbientOperator::lambda_d(nl, i + 1).scale(&q(esd.a[k][i]));
            }
            op
        })
        .collect();
    let euler = match variant {
        BoxVariant::Classical => {
            let mut op = AmbientOperator::constant(nl, beta[0].clone());
            for i in 0..nl {
                op = &op + &AmbientOperator::lambda_d(nl, i);
            }
            op
        }
        _ => {
            let mut op = AmbientOperator::constant(nl, &beta[0] - Q::one());
            for i in 1..nl {
                op = &op + &AmbientOperator::lambda_d(nl, i);
            }
            &op + &(&AmbientOperator::z_pow(nl, 1) * &AmbientOperator::d_z(nl))
        }
    };
    AmbientFamily { variant, beta: beta.iter().map(crate::rational::to_num_den).collect(), boxes, z_ops, euler }
}

fn ambient_box(l: &[i64], nl: usize, variant: BoxVariant, d: &dyn Fn(usize, u32) -> AmbientOperator) -> AmbientOperator {
    let lbar: i64 = l.iter().sum();
    let prod = |sign: i64, wrap: &dyn Fn(usize, u32) -> AmbientOperator| -> AmbientOperator {
        let mut acc = AmbientOperator::one(nl);
        for (i, &li) in l.iter().enumerate() {
            if li * sign > 0 {
                acc = &acc * &wrap(i + 1, (li * sign) as u32);
            }
        }
        acc
    };
    match variant {
        BoxVariant::Classical => {
            let neg = prod(-1, d);
            let pos = prod(1, d);
            if lbar >= 0 {
                &(&d(0, lbar as u32) * &neg) - &pos
            } else {
                &neg - &(&d(0, (-lbar) as u32) * &pos)
            }
        }
        BoxVariant::Hat => &(&AmbientOperator::z_pow(nl, -lbar as i32) * &prod(-1, d)) - &prod(1, d),
        BoxVariant::Prime => {
            let zd = |i: usize, k: u32| (&AmbientOperator::z_pow(nl, 1) * &AmbientOperator::d_lambda(nl, i)).pow(k);
            &prod(-1, &zd) - &prod(1, &zd)
        }
        BoxVariant::DoublePrime => {
            let falling = |i: usize, k: u32| {
                let zl = &AmbientOperator::z_pow(nl, 1) * &AmbientOperator::lambda_d(nl, i);
                (0..k).fold(AmbientOperator::one(nl), |acc, nu| {
                    &acc * &(&zl - &AmbientOperator::z_pow(nl, 1).scale(&q(i64::from(nu))))
                })
            };
            let mut lam = AmbientOperator::one(nl);
            for (i, &li) in l.iter().enumerate() {
                if li != 0 {
                    lam = &lam * &AmbientOperator::lambda_pow(nl, i + 1, li as i32);
                }
            }
            &(&lam * &prod(-1, &falling)) - &prod(1, &falling)
        }
    }
}

/// `Σ_a m_ia θ_a`, the operator attached to `D_i`.
pub fn divisor_operator(esd: &ExactSequenceData, i: usize) -> WeylOperator {
    let r = esd.r;
    let mut op = WeylOperator::zero(r);
    for a in 0..r {
        op = &op + &WeylOperator::theta(r, a).scale(&q(esd.m_mat[i][a]));
    }
    op
}

/// `□̃_l` in the variables `q`, `z`, `θ`.
pub fn reduced_box_operator(esd: &ExactSequenceData, l: &[i64]) -> Result<WeylOperator, GkzError> {
    if l.len() != esd.m || !esd.is_relation(l) {
        return Err(GkzError::NotARelation(l.to_vec()));
    }
    let r = esd.r;
    let d = esd.nef_degrees(l);
    let side = |sign: i64| -> WeylOperator {
        let qe: Vec<u32> = d.iter().map(|&x| if x * sign > 0 { (x * sign) as u32 } else { 0 }).collect();
        let mut acc = WeylOperator::q_pow(r, qe);
        for (i, &li) in l.iter().enumerate() {
            if li * sign < 0 {
                let di = divisor_operator(esd, i);
                for nu in 0..(-li * sign) {
                    acc = &acc * &(&di - &WeylOperator::z_pow(r, 1).scale(&q(nu)));
                }
            }
        }
        acc
    };
    Ok(&side(1) - &side(-1))
}

/// `z∂_z + Σ k_a q_a∂_{q_a}` (flat form) or `z²∂_z + Σ k_a θ_a` (lattice form).
pub fn euler_operator(esd: &ExactSequenceData, lattice_form: bool) -> WeylOperator {
    let r = esd.r;
    let mut op = WeylOperator::euler_z(r);
    for a in 0..r {
        op = &op + &WeylOperator::theta(r, a).scale(&q(esd.rho[a]));
    }
    if lattice_form {
        op
    } else {
        &WeylOperator::z_pow(r, -1) * &op
    }
}

/// Commutative image with `θ_a ↦ x_a`; see [`WeylOperator::symbol`].
pub fn principal_symbol(op: &WeylOperator, at_z_zero: bool) -> Result<Poly, GkzError> {
    Ok(op.symbol(at_z_zero)?)
}

/// Dimension of the `q = z = 0` quotient cut out by the symbols of the
/// reduced boxes of the primitive relations.
pub fn symbol_quotient_dimension(esd: &ExactSequenceData, prels: &[PrimitiveRelation]) -> Result<Option<usize>, GkzError> {
    let r = esd.r;
    let mut rels = Vec::new();
    for p in prels {
        let sym = principal_symbol(&reduced_box_operator(esd, &p.relation)?, true)?;
        let mut x = Poly::zero(r);
        for (e, c) in sym.terms() {
            if e[..r].iter().all(|&k| k == 0) {
                x.add_term(&e[r + 1..2 * r + 1], c);
            }
        }
        rels.push(x);
    }
    Ok(quotient_dimension(r, &rels, esd.n as u32 + 2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RingMode {
    GradedExact,
    QTruncated(u32),
}

#[derive(Clone, Debug)]
pub struct QuantumRing {
    pub basis: Vec<Exponent>,
    pub labels: Vec<String>,
    /// Text of `∏_{l_i>0} D_i^{l_i} - q^{p(l)} ∏_{l_i<0} D_i^{-l_i}` per primitive relation.
    pub relations: Vec<String>,
    /// `M_a`: quantum multiplication by `p_a` on the basis.
    pub matrices: Vec<SeriesMatrix>,
    pub order: u32,
    pub mode: RingMode,
}

/// Quantum deformation of a relation: `(q-exponent, ∏_{l_i<0} D_i^{-l_i})`.
struct Deformation {
    q_exp: Vec<u32>,
    lower: Poly,
}

pub fn batyrev_quantum_ring(
    esd: &ExactSequenceData,
    ga: &GradedAlgebra,
    prels: &[PrimitiveRelation],
    mode: RingMode,
) -> Result<QuantumRing, GkzError> {
    let r = esd.r;
    let n = esd.n as u32;
    let order = match mode {
        RingMode::GradedExact => {
            if prels.iter().any(|p| p.anticanonical_degree <= 0) || esd.rho.iter().any(|&k| k <= 0) {
                return Err(GkzError::GradingNotPositive);
            }
            // q-weights of nonzero entries are bounded by the degree drop ≤ n + 1
            n + 1
        }
        RingMode::QTruncated(order) => order,
    };
    let names = ga.generator_names();
    let mut deformations = Vec::new();
    let mut relations = Vec::new();
    for p in prels {
        let q_exp: Vec<u32> = p.nef_degrees.iter().map(|&d| d.max(0) as u32).collect();
        let mut lower = Poly::one(r);
        for (i, &li) in p.relation.iter().enumerate() {
            if li < 0 {
                lower = &lower * &ga.divisors[i].pow((-li) as u32);
            }
        }
        let upper = p.collection.iter().fold(Poly::one(r), |acc, &i| &acc * &ga.divisors[i]);
        let qm: Vec<String> =
            q_exp.iter().enumerate().filter(|(_, &e)| e > 0).map(|(a, &e)| if e == 1 { format!("q{}", a + 1) } else { format!("q{}^{e}", a + 1) }).collect();
        relations.push(format!("{} = {}{}", upper.format_with(&names), qm.join("*"), {
            let s = lower.format_with(&names);
            if s == "1" {
                String::new()
            } else if qm.is_empty() {
                s
            } else {
                format!("*({s})")
            }
        }));
        deformations.push(Deformation { q_exp, lower });
    }

    let dim = ga.dim();
    let mut overflow = false;
    let mut matrices = Vec::with_capacity(r);
    for a in 0..r {
        let mut mat = SeriesMatrix::zeros(dim, dim, r, order);
        for j in 0..dim {
            let mut start = ga.basis[j].clone();
            start[a] += 1;
            let col = quantum_normal_form(ga, &deformations, start, order, &mut overflow);
            for (i, s) in col.into_iter().enumerate() {
                mat.set(i, j, s);
            }
        }
        matrices.push(mat);
    }
    if mode == RingMode::GradedExact && overflow {
        return Err(GkzError::GradedOverflow(order));
    }
    check_rank(ga, &matrices)?;
    Ok(QuantumRing { basis: ga.basis.clone(), labels: ga.basis_labels(), relations, matrices, order, mode })
}

/// Rewrites `p^start` into the basis, replacing classical reductions by their
/// quantum deformations until only standard monomials (or truncated terms) remain.
fn quantum_normal_form(ga: &GradedAlgebra, defs: &[Deformation], start: Exponent, order: u32, overflow: &mut bool) -> Vec<QSeries> {
    let r = ga.r;
    let dim = ga.dim();
    let mut out = vec![QSeries::zero(r, order); dim];
    let mut work: BTreeMap<(Vec<u32>, Exponent), Q> = BTreeMap::new();
    work.insert((vec![0; r], start), Q::one());
    while let Some(((qe, pe), c)) = work.pop_first() {
        if c.is_zero() {
            continue;
        }
        if qe.iter().any(|&x| x > order) {
            *overflow = true;
            continue;
        }
        if let Some(k) = ga.basis_index(&pe) {
            out[k].add_term(&qe, &c);
            continue;
        }
        let cert = ga.certificate(&pe).expect("monomials of degree ≤ n + 1 carry certificates").clone();
        for (k, x) in ga.monomial_nf(&pe).iter().enumerate() {
            if !x.is_zero() {
                out[k].add_term(&qe, &(&c * x));
            }
        }
        for (mu, j, f) in cert {
            let def = &defs[j];
            let shifted: Vec<u32> = qe.iter().zip(&def.q_exp).map(|(x, y)| x + y).collect();
            for (e, y) in def.lower.terms() {
                let pe2: Exponent = mu.iter().zip(e).map(|(a, b)| a + b).collect();
                *work.entry((shifted.clone(), pe2)).or_insert_with(Q::zero) += &c * &f * y;
            }
        }
    }
    out
}

/// The vectors `M^α·1` for basis exponents `α` must stay independent at `q = 0`, degree by degree.
fn check_rank(ga: &GradedAlgebra, matrices: &[SeriesMatrix]) -> Result<(), GkzError> {
    let m0: Vec<QMatrix> = matrices.iter().map(SeriesMatrix::at_zero).collect();
    for d in 0..=ga.n as u32 {
        let vecs: Vec<Vec<Q>> = ga
            .basis
            .iter()
            .zip(&ga.degrees)
            .filter(|(_, &deg)| deg == d)
            .map(|(alpha, _)| {
                let mut v = ga.one();
                for (a, &k) in alpha.iter().enumerate() {
                    for _ in 0..k {
                        v = m0[a].mul_vec(&v);
                    }
                }
                v
            })
            .collect();
        if vecs.is_empty() {
            continue;
        }
        if QMatrix::from_rows(vecs.clone()).rank() < vecs.len() {
            return Err(GkzError::RankDrop(d));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::build_algebra;
    use crate::fan::{exact_sequence, primitive_relations};
    use crate::fixtures;

    fn setup(fan: &crate::fan::FanData) -> (ExactSequenceData, Vec<PrimitiveRelation>, GradedAlgebra) {
        let esd = exact_sequence(fan, None).unwrap();
        let prels = primitive_relations(fan, &esd);
        let ga = build_algebra(fan, &esd, &prels).unwrap();
        (esd, prels, ga)
    }

    #[test]
    fn reduced_boxes_projective_spaces() {
        let (esd, _, _) = setup(&fixtures::p2());
        assert_eq!(reduced_box_operator(&esd, &[1, 1, 1]).unwrap().to_string(), "q1 - t1^3");
        let (esd, _, _) = setup(&fixtures::p1());
        assert_eq!(reduced_box_operator(&esd, &[1, 1]).unwrap().to_string(), "q1 - t1^2");
        assert_eq!(reduced_box_operator(&esd, &[1, 0]), Err(GkzError::NotARelation(vec![1, 0])));
    }

    #[test]
    fn f2_reduced_box() {
        let (esd, _, _) = setup(&fixtures::f2());
        let op = reduced_box_operator(&esd, &[1, -2, 1, 0]).unwrap();
        let r = 2;
        let d2 = &WeylOperator::theta(r, 0).scale(&q(-2)) + &WeylOperator::theta(r, 1);
        let z = WeylOperator::z_pow(r, 1);
        let expected = &(&(&WeylOperator::q_var(r, 0) * &d2) * &(&d2 - &z)) - &WeylOperator::theta(r, 0).pow(2);
        assert_eq!(op, expected);
        let sym = principal_symbol(&op, true).unwrap();
        let names = WeylOperator::variable_names(r);
        assert_eq!(sym.format_with(&names), "4*q1*x1^2 - 4*q1*x1*x2 + q1*x2^2 - x1^2");
    }

    #[test]
    fn euler_operators() {
        let (esd, _, _) = setup(&fixtures::p2());
        assert_eq!(euler_operator(&esd, true).to_string(), "3*t1 + E");
        assert_eq!(euler_operator(&esd, false).to_string(), "3*z^-1*t1 + z^-1*E");
        let (esd, _, _) = setup(&fixtures::f2());
        assert_eq!(euler_operator(&esd, true).to_string(), "2*t2 + E");
    }

    #[test]
    fn ambient_examples() {
        let (esd, _, _) = setup(&fixtures::p2());
        let fam = ambient_box_operators(&esd, None, BoxVariant::Hat);
        assert_eq!(fam.boxes[0].1.to_string(), "z^-3 - d1*d2*d3");
        assert_eq!(fam.euler.to_string(), "z*dz + l3*d3 + l2*d2 + l1*d1");
        let (esd, _, _) = setup(&fixtures::p1());
        let fam = ambient_box_operators(&esd, None, BoxVariant::Hat);
        assert_eq!(fam.z_ops[0].to_string(), "-l2*d2 + l1*d1");
        let classical = ambient_box_operators(&esd, None, BoxVariant::Classical);
        assert_eq!(classical.boxes[0].1.to_string(), "-d1*d2 + d0^2");
    }

    #[test]
    fn double_prime_is_twisted_hat() {
        for fan in fixtures::weak_fano_fixtures() {
            let (esd, prels, _) = setup(&fan);
            let nl = esd.m + 1;
            let mut rels: Vec<Vec<i64>> = prels.iter().map(|p| p.relation.clone()).collect();
            rels.extend((0..esd.r).map(|a| (0..esd.m).map(|i| esd.m_mat[i][a]).collect()));
            let d = |i: usize, k: u32| AmbientOperator::d_lambda(nl, i).pow(k);
            for l in rels {
                let hat = ambient_box(&l, nl, BoxVariant::Hat, &d);
                let dp = ambient_box(&l, nl, BoxVariant::DoublePrime, &d);
                let prime = ambient_box(&l, nl, BoxVariant::Prime, &d);
                let mut twist = AmbientOperator::one(nl);
                let mut zpos = 0;
                for (i, &li) in l.iter().enumerate() {
                    if li > 0 {
                        twist = &twist * &(&AmbientOperator::z_pow(nl, 1) * &AmbientOperator::lambda_pow(nl, i + 1, 1)).pow(li as u32);
                        zpos += li;
                    }
                }
                assert_eq!(&twist * &hat, dp);
                assert_eq!(&AmbientOperator::z_pow(nl, zpos as i32) * &hat, prime);
            }
        }
    }

    #[test]
    fn p2_quantum_ring() {
        let (esd, prels, ga) = setup(&fixtures::p2());
        let qr = batyrev_quantum_ring(&esd, &ga, &prels, RingMode::GradedExact).unwrap();
        let m = &qr.matrices[0];
        assert_eq!(m.get(0, 2).format(), "q1");
        assert_eq!(m.get(1, 0).format(), "1");
        assert_eq!(m.get(2, 1).format(), "1");
        assert_eq!(m.support().len(), 2);
        assert_eq!(qr.relations, vec!["p1^3 = q1"]);
    }

    #[test]
    fn graded_mode_rejects_weak_fano() {
        let (esd, prels, ga) = setup(&fixtures::f2());
        assert_eq!(batyrev_quantum_ring(&esd, &ga, &prels, RingMode::GradedExact).unwrap_err(), GkzError::GradingNotPositive);
        let qr = batyrev_quantum_ring(&esd, &ga, &prels, RingMode::QTruncated(3)).unwrap();
        assert_eq!(qr.relations, vec!["p1^2 = q1*(4*p1^2 - 4*p1*p2 + p2^2)", "-2*p1*p2 + p2^2 = q2"]);
        let so = ga.structure_operators(&esd);
        for a in 0..2 {
            assert_eq!(qr.matrices[a].at_zero(), so.p[a]);
        }
        assert!(qr.matrices[0].commutator(&qr.matrices[1]).is_zero());
    }

    #[test]
    fn symbol_ideal_has_full_rank() {
        for fan in fixtures::weak_fano_fixtures() {
            let (esd, prels, _) = setup(&fan);
            assert_eq!(symbol_quotient_dimension(&esd, &prels).unwrap(), Some(fan.max_cones.len()));
        }
    }
}
