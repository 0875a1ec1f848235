//! The cohomology ring `H*(X_Σ, ℚ)` in the nef coordinates `p_1..p_r`.
//!
//! The ideal is generated by `∏_{i∈P} D_i` over primitive collections `P`,
//! with `D_i = Σ_a m_ia p_a`. Each degree is reduced separately by exact row
//! reduction, leading monomials chosen in descending lexicographic order; the
//! remaining (standard) monomials form the basis. Reductions keep their
//! ideal-membership certificates because the quantum ring deforms exactly
//! these identities.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::fan::{ExactSequenceData, FanData, PrimitiveRelation};
use crate::linalg::QMatrix;
use crate::poly::{format_monomial, monomials_of_degree, Exponent, Poly};
use crate::rational::{to_num_den, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohomologyError {
    #[error("algebra has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degree-{degree} part has dimension {got}, expected 1")]
    TopDegreeNotOneDimensional { degree: u32, got: usize },
    #[error("relations do not kill degree {0}")]
    NonVanishingAboveTop(u32),
    #[error("the product of divisors of cone {cone:?} integrates to {value}, not 1")]
    PointClassInconsistent { cone: Vec<usize>, value: String },
    #[error("Poincaré pairing is degenerate")]
    DegeneratePairing,
}

/// `monomial - normal_form = Σ c · x^μ · relation_j`, stored as `(μ, j, c)`.
pub type Certificate = Vec<(Exponent, usize, Q)>;

#[derive(Clone, Debug)]
struct Reduction {
    normal_form: Vec<Q>,
    certificate: Certificate,
}

#[derive(Clone, Debug)]
pub struct GradedAlgebra {
    pub r: usize,
    pub n: usize,
    /// Standard monomials, by degree, descending lex within a degree.
    pub basis: Vec<Exponent>,
    pub degrees: Vec<u32>,
    /// `∏_{i∈P} D_i` for each primitive collection, in input order.
    pub relations: Vec<Poly>,
    /// `[D_i]` as polynomials in the `p_a`.
    pub divisors: Vec<Poly>,
    reductions: BTreeMap<Exponent, Reduction>,
    mult: Vec<Vec<Vec<Q>>>,
    integral: Vec<Q>,
}

pub fn build_algebra(
    fan: &FanData,
    esd: &ExactSequenceData,
    prels: &[PrimitiveRelation],
) -> Result<GradedAlgebra, CohomologyError> {
    let (r, n) = (esd.r, esd.n);
    let divisors: Vec<Poly> = (0..esd.m).map(|i| Poly::linear(esd.divisor_class(i))).collect();
    let relations: Vec<Poly> = prels
        .iter()
        .map(|p| p.collection.iter().fold(Poly::one(r), |acc, &i| &acc * &divisors[i]))
        .collect();

    let mut basis = Vec::new();
    let mut degrees = Vec::new();
    let mut standard_by_degree = Vec::new();
    let mut pending: Vec<(Exponent, Vec<(Exponent, Q)>, Certificate)> = Vec::new();
    let mut reductions = BTreeMap::new();
    for d in 0..=(n as u32 + 1) {
        let (standard, reduced) = reduce_degree(r, d, &relations);
        if d as usize == n + 1 && !standard.is_empty() {
            return Err(CohomologyError::NonVanishingAboveTop(d));
        }
        standard_by_degree.push(standard.clone());
        for s in standard {
            basis.push(s);
            degrees.push(d);
        }
        pending.extend(reduced);
    }
    let index: BTreeMap<Exponent, usize> = basis.iter().cloned().enumerate().map(|(k, e)| (e, k)).collect();
    let dim = basis.len();
    for (mono, nf_terms, certificate) in pending {
        let mut normal_form = vec![Q::zero(); dim];
        for (s, c) in nf_terms {
            normal_form[index[&s]] += c;
        }
        reductions.insert(mono, Reduction { normal_form, certificate });
    }
    let expected = fan.max_cones.len();
    if dim != expected {
        return Err(CohomologyError::DimensionMismatch { expected, got: dim });
    }
    let top = &standard_by_degree[n];
    if top.len() != 1 {
        return Err(CohomologyError::TopDegreeNotOneDimensional { degree: n as u32, got: top.len() });
    }

    let mut alg = GradedAlgebra {
        r,
        n,
        basis,
        degrees,
        relations,
        divisors,
        reductions,
        mult: vec![],
        integral: vec![Q::zero(); dim],
    };
    alg.mult = (0..dim)
        .map(|i| (0..dim).map(|j| alg.monomial_nf(&add_exp(&alg.basis[i], &alg.basis[j]))).collect())
        .collect();

    // normalize the point class by the first maximal cone, then check the rest
    let top_index = dim - 1;
    let point = |alg: &GradedAlgebra, cone: &[usize]| -> Q {
        let prod = cone.iter().fold(Poly::one(r), |acc, &i| &acc * &alg.divisors[i]);
        alg.poly_to_element(&prod)[top_index].clone()
    };
    let first = point(&alg, &fan.max_cones[0]);
    if first.is_zero() {
        return Err(CohomologyError::PointClassInconsistent { cone: fan.max_cones[0].clone(), value: to_num_den(&first) });
    }
    alg.integral[top_index] = first.recip();
    for cone in &fan.max_cones {
        let value = point(&alg, cone) * &alg.integral[top_index];
        if !value.is_one() {
            return Err(CohomologyError::PointClassInconsistent { cone: cone.clone(), value: to_num_den(&value) });
        }
    }
    Ok(alg)
}

fn add_exp(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Dimension of `ℚ[x_1..x_r]/(relations)` for homogeneous relations, provided
/// the quotient vanishes in some degree `≤ max_degree`.
pub fn quotient_dimension(r: usize, relations: &[Poly], max_degree: u32) -> Option<usize> {
    let mut total = 0;
    for d in 0..=max_degree {
        let (standard, _) = reduce_degree(r, d, relations);
        if standard.is_empty() {
            return Some(total);
        }
        total += standard.len();
    }
    None
}

type Reduced = Vec<(Exponent, Vec<(Exponent, Q)>, Certificate)>;

/// Row-reduces the degree-`d` part of the ideal. Returns the standard
/// monomials and, for every other monomial, its normal form and certificate.
fn reduce_degree(r: usize, d: u32, relations: &[Poly]) -> (Vec<Exponent>, Reduced) {
    let monos = monomials_of_degree(r, d);
    let col: BTreeMap<&Exponent, usize> = monos.iter().enumerate().map(|(k, e)| (e, k)).collect();
    let mut rows: Vec<(Exponent, usize)> = Vec::new();
    for (j, rel) in relations.iter().enumerate() {
        let Some(rd) = rel.total_degree() else { continue };
        if rd > d {
            continue;
        }
        for mu in monomials_of_degree(r, d - rd) {
            rows.push((mu, j));
        }
    }
    let nm = monos.len();
    let nr = rows.len();
    let mut mat = QMatrix::zeros(nr, nm + nr);
    for (k, (mu, j)) in rows.iter().enumerate() {
        for (e, c) in relations[*j].terms() {
            mat[(k, col[&add_exp(mu, e)])] += c;
        }
        mat[(k, nm + k)] = Q::one();
    }
    let (rref, pivots) = mat.rref();
    let lead: Vec<(usize, usize)> = pivots.iter().enumerate().filter(|(_, &c)| c < nm).map(|(row, &c)| (row, c)).collect();
    let is_lead: Vec<bool> = (0..nm).map(|c| lead.iter().any(|&(_, lc)| lc == c)).collect();
    let standard: Vec<Exponent> = (0..nm).filter(|&c| !is_lead[c]).map(|c| monos[c].clone()).collect();
    let mut reduced = Vec::new();
    for (row, c) in lead {
        let nf: Vec<(Exponent, Q)> = (0..nm)
            .filter(|&s| !is_lead[s] && !rref[(row, s)].is_zero())
            .map(|s| (monos[s].clone(), -rref[(row, s)].clone()))
            .collect();
        let cert: Certificate = (0..nr)
            .filter(|&k| !rref[(row, nm + k)].is_zero())
            .map(|k| (rows[k].0.clone(), rows[k].1, rref[(row, nm + k)].clone()))
            .collect();
        reduced.push((monos[c].clone(), nf, cert));
    }
    (standard, reduced)
}

impl GradedAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_index(&self, exp: &[u32]) -> Option<usize> {
        self.basis.iter().position(|b| b == exp)
    }

    pub fn unit_vector(&self, k: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim()];
        v[k] = Q::one();
        v
    }

    pub fn one(&self) -> Vec<Q> {
        self.unit_vector(0)
    }

    pub fn zero(&self) -> Vec<Q> {
        vec![Q::zero(); self.dim()]
    }

    /// Dimensions of the graded pieces `H^{2k}`, `k = 0..=n`.
    pub fn dims_by_degree(&self) -> Vec<usize> {
        (0..=self.n as u32).map(|d| self.degrees.iter().filter(|&&x| x == d).count()).collect()
    }

    /// Normal form of `p^exp`; zero above the top degree.
    pub fn monomial_nf(&self, exp: &[u32]) -> Vec<Q> {
        if let Some(k) = self.basis_index(exp) {
            return self.unit_vector(k);
        }
        if exp.iter().sum::<u32>() as usize > self.n {
            return self.zero();
        }
        self.reductions.get(exp).map(|r| r.normal_form.clone()).expect("every monomial of degree ≤ n is reduced")
    }

    /// Certificate for a non-standard monomial of degree at most `n + 1`.
    pub fn certificate(&self, exp: &[u32]) -> Option<&Certificate> {
        self.reductions.get(exp).map(|r| &r.certificate)
    }

    pub fn poly_to_element(&self, p: &Poly) -> Vec<Q> {
        let mut out = self.zero();
        for (e, c) in p.terms() {
            for (o, x) in out.iter_mut().zip(self.monomial_nf(e)) {
                if !x.is_zero() {
                    *o += c * x;
                }
            }
        }
        out
    }

    pub fn element_to_poly(&self, v: &[Q]) -> Poly {
        let mut p = Poly::zero(self.r);
        for (b, c) in self.basis.iter().zip(v) {
            p.add_term(b, c);
        }
        p
    }

    /// `[D_i]` as an algebra element.
    pub fn divisor(&self, i: usize) -> Vec<Q> {
        self.poly_to_element(&self.divisors[i])
    }

    /// `p_a` as an algebra element.
    pub fn generator(&self, a: usize) -> Vec<Q> {
        self.poly_to_element(&Poly::var(self.r, a))
    }

    pub fn mul(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let mut out = self.zero();
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let c = xi * yj;
                for (o, s) in out.iter_mut().zip(&self.mult[i][j]) {
                    if !s.is_zero() {
                        *o += &c * s;
                    }
                }
            }
        }
        out
    }

    /// Structure constants: `b_i · b_j = Σ_k table[i][j][k] b_k`.
    pub fn mult_table(&self) -> &Vec<Vec<Vec<Q>>> {
        &self.mult
    }

    /// Matrix of `v ↦ x·v` acting on coefficient columns.
    pub fn cup_matrix(&self, x: &[Q]) -> QMatrix {
        let dim = self.dim();
        let mut m = QMatrix::zeros(dim, dim);
        for j in 0..dim {
            m.set_column(j, &self.mul(x, &self.unit_vector(j)));
        }
        m
    }

    pub fn integrate(&self, x: &[Q]) -> Q {
        x.iter().zip(&self.integral).fold(Q::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn pairing(&self, x: &[Q], y: &[Q]) -> Q {
        self.integrate(&self.mul(x, y))
    }

    pub fn poincare_pairing_matrix(&self) -> Result<QMatrix, CohomologyError> {
        let dim = self.dim();
        let mut g = QMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                g[(i, j)] = self.integrate(&self.mult[i][j]);
            }
        }
        if g.determinant().is_zero() {
            return Err(CohomologyError::DegeneratePairing);
        }
        Ok(g)
    }

    pub fn structure_operators(&self, esd: &ExactSequenceData) -> StructureOperators {
        let p: Vec<QMatrix> = (0..self.r).map(|a| self.cup_matrix(&self.generator(a))).collect();
        let mut c1 = QMatrix::zeros(self.dim(), self.dim());
        for (a, pa) in p.iter().enumerate() {
            c1 = &c1 + &pa.scale(&crate::rational::q(esd.rho[a]));
        }
        let mu = QMatrix::from_diagonal(&self.degrees.iter().map(|&d| crate::rational::q(i64::from(d))).collect::<Vec<_>>());
        StructureOperators { p, c1, mu }
    }

    pub fn generator_names(&self) -> Vec<String> {
        (1..=self.r).map(|a| format!("p{a}")).collect()
    }

    pub fn basis_labels(&self) -> Vec<String> {
        let names = self.generator_names();
        self.basis
            .iter()
            .map(|e| {
                let s = format_monomial(e, &names);
                if s.is_empty() {
                    "1".to_string()
                } else {
                    s
                }
            })
            .collect()
    }

    pub fn format_element(&self, v: &[Q]) -> String {
        self.element_to_poly(v).format_with(&self.generator_names())
    }

    pub fn report(&self) -> Result<CohomologyReport, CohomologyError> {
        let pairing = self.poincare_pairing_matrix()?;
        let labels = self.basis_labels();
        let mut mult_table = BTreeMap::new();
        for i in 0..self.dim() {
            for j in i..self.dim() {
                mult_table.insert(format!("{}*{}", labels[i], labels[j]), self.mult[i][j].iter().map(to_num_den).collect());
            }
        }
        Ok(CohomologyReport {
            basis: labels,
            dims_by_degree: self.dims_by_degree(),
            relations: self.relations.iter().map(|r| r.format_with(&self.generator_names())).collect(),
            mult_table,
            pairing,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureOperators {
    /// Cup product with `p_a`.
    pub p: Vec<QMatrix>,
    /// Cup product with `ρ = c_1`.
    pub c1: QMatrix,
    /// Grading operator.
    pub mu: QMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyReport {
    pub basis: Vec<String>,
    pub dims_by_degree: Vec<usize>,
    pub relations: Vec<String>,
    pub mult_table: BTreeMap<String, Vec<String>>,
    pub pairing: QMatrix,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::{exact_sequence, primitive_relations};
    use crate::fixtures;
    use crate::rational::q;

    fn algebra(fan: &FanData) -> (ExactSequenceData, GradedAlgebra) {
        let esd = exact_sequence(fan, None).unwrap();
        let prels = primitive_relations(fan, &esd);
        let ga = build_algebra(fan, &esd, &prels).unwrap();
        (esd, ga)
    }

    #[test]
    fn p2_ring() {
        let (esd, ga) = algebra(&fixtures::p2());
        assert_eq!(ga.basis, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(ga.dims_by_degree(), vec![1, 1, 1]);
        assert_eq!(ga.integrate(&ga.unit_vector(2)), q(1));
        assert_eq!(ga.integrate(&ga.unit_vector(1)), q(0));
        let g = ga.poincare_pairing_matrix().unwrap();
        assert_eq!(g, QMatrix::from_i64_rows(&[vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]]));
        let so = ga.structure_operators(&esd);
        assert_eq!(so.c1, so.p[0].scale(&q(3)));
        assert_eq!(so.mu, QMatrix::from_i64_rows(&[vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]));
        assert!(so.p[0].pow(3).is_zero());
    }

    #[test]
    fn p1_ring() {
        let (esd, ga) = algebra(&fixtures::p1());
        let so = ga.structure_operators(&esd);
        assert_eq!(so.p[0], QMatrix::from_i64_rows(&[vec![0, 0], vec![1, 0]]));
        assert_eq!(so.c1, so.p[0].scale(&q(2)));
        assert_eq!(ga.poincare_pairing_matrix().unwrap(), QMatrix::from_i64_rows(&[vec![0, 1], vec![1, 0]]));
    }

    #[test]
    fn p1xp1_ring() {
        let (_, ga) = algebra(&fixtures::p1xp1());
        assert_eq!(ga.basis, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(ga.monomial_nf(&[2, 0]), ga.zero());
        assert_eq!(ga.integrate(&ga.unit_vector(3)), q(1));
    }

    #[test]
    fn hirzebruch_intersection_numbers() {
        // D2^2 = -a, D4^2 = a, D1^2 = D3^2 = 0, D1.D2 = D2.D3 = D3.D4 = D4.D1 = 1, D1.D3 = D2.D4 = 0
        for (a, fan) in [(1i64, fixtures::f1()), (2, fixtures::f2())] {
            let (_, ga) = algebra(&fan);
            let d: Vec<Vec<Q>> = (0..4).map(|i| ga.divisor(i)).collect();
            let int = |i: usize, j: usize| ga.pairing(&d[i], &d[j]);
            assert_eq!(int(1, 1), q(-a));
            assert_eq!(int(3, 3), q(a));
            assert_eq!(int(0, 0), q(0));
            assert_eq!(int(2, 2), q(0));
            for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
                assert_eq!(int(i, j), q(1));
            }
            assert_eq!(int(0, 2), q(0));
            assert_eq!(int(1, 3), q(0));
        }
    }

    #[test]
    fn certificates_reproduce_reductions() {
        let (_, ga) = algebra(&fixtures::f2());
        for d in 0..=3u32 {
            for mono in monomials_of_degree(2, d) {
                let Some(cert) = ga.certificate(&mono) else { continue };
                let mut rhs = ga.element_to_poly(&ga.monomial_nf(&mono));
                for (mu, j, c) in cert {
                    rhs = &rhs + &(&Poly::monomial(mu.clone(), c.clone()) * &ga.relations[*j]);
                }
                assert_eq!(rhs, Poly::monomial(mono.clone(), Q::one()));
            }
        }
    }

    #[test]
    fn multiplication_is_commutative_and_associative() {
        for fan in fixtures::weak_fano_fixtures() {
            let (_, ga) = algebra(&fan);
            let dim = ga.dim();
            for i in 0..dim {
                for j in 0..dim {
                    let (bi, bj) = (ga.unit_vector(i), ga.unit_vector(j));
                    assert_eq!(ga.mul(&bi, &bj), ga.mul(&bj, &bi));
                    for k in 0..dim {
                        let bk = ga.unit_vector(k);
                        assert_eq!(ga.mul(&ga.mul(&bi, &bj), &bk), ga.mul(&bi, &ga.mul(&bj, &bk)));
                    }
                }
            }
        }
    }
}
