//! Smooth complete fans: validation and the lattice-combinatorial invariants
//! consumed by the rest of the pipeline.
//!
//! Conventions: rays are indexed from 0 internally (files use 1-based indices),
//! every maximal cone is stored as a sorted index list, and all enumerations are
//! returned in lexicographic order so that downstream output is deterministic.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::cone::{dual_cone_rays, extreme_rays, primitive_integer};
use crate::lattice::{det_i64, elementary_divisors, gcd_slice, integer_kernel_basis, IntMatrix};
use crate::linalg::{dot, QMatrix};
use crate::rational::{q, to_i64, Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FanError {
    #[error("fan has no rays")]
    Empty,
    #[error("ray {index} = {ray:?} does not have dimension {rank}")]
    WrongRayDimension { index: usize, ray: Vec<i64>, rank: usize },
    #[error("ray {index} = {ray:?} is not primitive")]
    NonPrimitiveRay { index: usize, ray: Vec<i64> },
    #[error("rays {first} and {second} coincide")]
    DuplicateRay { first: usize, second: usize },
    #[error("cone {cone:?} references a ray index out of range")]
    IndexOutOfRange { cone: Vec<usize> },
    #[error("cone {cone:?} has {len} rays, expected {rank}")]
    WrongConeSize { cone: Vec<usize>, len: usize, rank: usize },
    #[error("cone {cone:?} is not smooth (determinant {det})")]
    NonSmoothCone { cone: Vec<usize>, det: i64 },
    #[error("cones {first:?} and {second:?} do not meet in a common face")]
    ImproperIntersection { first: Vec<usize>, second: Vec<usize> },
    #[error("fan is not complete: wall {wall:?} lies in {count} maximal cone(s)")]
    NotComplete { wall: Vec<usize>, count: usize },
    #[error("fan is not projective: no strictly convex support function exists")]
    NotProjective,
    #[error("rays do not generate the lattice (elementary divisors {divisors:?})")]
    RaysDoNotGenerateLattice { divisors: Vec<i64> },
    #[error("invalid nef basis: {0}")]
    NefBasisInvalid(String),
    #[error("the nef cone is not simplicial and unimodular; a nef basis must be supplied")]
    NefBasisRequired,
    #[error("no maximal cone yields a non-negative section (last attempt {witness:?})")]
    NoNonnegativeSection { witness: Vec<Vec<i64>> },
}

pub type FanResult<T> = Result<T, FanError>;

/// Rays and maximal cones of a fan in `N ≅ ℤ^rank`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FanData {
    pub rank: usize,
    pub rays: Vec<Vec<i64>>,
    /// 0-based ray indices, each cone sorted ascending.
    pub max_cones: Vec<Vec<usize>>,
}

impl FanData {
    pub fn new(rank: usize, rays: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> Self {
        let max_cones = max_cones
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        Self { rank, rays, max_cones }
    }

    pub fn num_rays(&self) -> usize {
        self.rays.len()
    }

    /// Picard rank `r = m - n`.
    pub fn picard_rank(&self) -> usize {
        self.rays.len().saturating_sub(self.rank)
    }

    /// The `n × m` matrix `A` whose columns are the rays.
    pub fn ray_matrix(&self) -> IntMatrix {
        (0..self.rank).map(|k| self.rays.iter().map(|r| r[k]).collect()).collect()
    }

    /// Square matrix with the rays of `cone` as columns.
    fn cone_matrix(&self, cone: &[usize]) -> IntMatrix {
        (0..self.rank).map(|k| cone.iter().map(|&i| self.rays[i][k]).collect()).collect()
    }

    /// Coordinates of `v` in the basis given by the rays of a smooth maximal cone.
    pub fn cone_coordinates(&self, cone: &[usize], v: &[i64]) -> Vec<i64> {
        let b = QMatrix::from_i64_rows(&self.cone_matrix(cone));
        let inv = b.inverse().expect("maximal cone of a smooth fan is unimodular");
        let vq: Vec<Q> = v.iter().map(|&x| q(x)).collect();
        inv.mul_vec(&vq).iter().map(|x| to_i64(x).expect("unimodular change of basis")).collect()
    }

    /// Whether the index set spans a cone of the fan (i.e. lies in a maximal cone).
    pub fn is_face(&self, set: &[usize]) -> bool {
        self.max_cones.iter().any(|c| set.iter().all(|i| c.contains(i)))
    }

    /// All walls `(ridge, [cone_a, cone_b])`; assumes `validate_fan` has passed.
    fn walls(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut walls: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (ci, cone) in self.max_cones.iter().enumerate() {
            for skip in 0..cone.len() {
                let ridge: Vec<usize> = cone.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &i)| i).collect();
                walls.entry(ridge).or_default().push(ci);
            }
        }
        walls
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FanReport {
    pub smooth: bool,
    pub complete: bool,
    pub projective: bool,
    /// Picard-lattice coordinates (w.r.t. an integer kernel basis) of a class
    /// that is strictly positive on every wall curve: the convexity witness.
    pub ample_witness: Vec<i64>,
    pub diagnostics: Vec<String>,
}

pub fn validate_fan(fan: &FanData) -> FanResult<FanReport> {
    let n = fan.rank;
    let m = fan.num_rays();
    if m == 0 || n == 0 {
        return Err(FanError::Empty);
    }
    for (i, ray) in fan.rays.iter().enumerate() {
        if ray.len() != n {
            return Err(FanError::WrongRayDimension { index: i, ray: ray.clone(), rank: n });
        }
        if gcd_slice(ray) != 1 {
            return Err(FanError::NonPrimitiveRay { index: i, ray: ray.clone() });
        }
        if let Some(j) = fan.rays[..i].iter().position(|r| r == ray) {
            return Err(FanError::DuplicateRay { first: j, second: i });
        }
    }
    let mut diagnostics = Vec::new();
    for cone in &fan.max_cones {
        if cone.iter().any(|&i| i >= m) {
            return Err(FanError::IndexOutOfRange { cone: cone.clone() });
        }
        let distinct: BTreeSet<_> = cone.iter().collect();
        if cone.len() != n || distinct.len() != n {
            return Err(FanError::WrongConeSize { cone: cone.clone(), len: distinct.len(), rank: n });
        }
        let det = det_i64(&fan.cone_matrix(cone));
        if det.abs() != 1 {
            return Err(FanError::NonSmoothCone { cone: cone.clone(), det });
        }
    }
    check_pairwise_faces(fan)?;
    let walls = fan.walls();
    for (ridge, cones) in &walls {
        if cones.len() != 2 {
            return Err(FanError::NotComplete { wall: ridge.clone(), count: cones.len() });
        }
    }
    diagnostics.push(format!("{} maximal cones, {} walls, all unimodular", fan.max_cones.len(), walls.len()));

    // Projectivity: a class strictly positive on every wall relation exists
    // iff the nef cone is full-dimensional; the sum of its rays is then interior.
    let kernel = integer_kernel_basis(&fan.ray_matrix());
    let r = kernel.len();
    let wall_coords: Vec<Vec<i64>> = wall_relations(fan).iter().map(|l| kernel_coordinates(&kernel, l)).collect();
    let nef_rays = dual_cone_rays(&wall_coords, r);
    let witness: Vec<i64> = (0..r).map(|a| nef_rays.iter().map(|y| y[a]).sum()).collect();
    let strictly_convex =
        r == 0 || (!nef_rays.is_empty() && wall_coords.iter().all(|c| c.iter().zip(&witness).map(|(x, y)| x * y).sum::<i64>() > 0));
    if !strictly_convex {
        return Err(FanError::NotProjective);
    }
    diagnostics.push(format!("strictly convex support function found: {witness:?}"));
    Ok(FanReport { smooth: true, complete: true, projective: true, ample_witness: witness, diagnostics })
}

/// Two maximal cones meet in a common face iff every extreme ray of their
/// intersection lies in the span of the shared rays.
fn check_pairwise_faces(fan: &FanData) -> FanResult<()> {
    let n = fan.rank;
    let inverses: Vec<QMatrix> = fan
        .max_cones
        .iter()
        .map(|c| QMatrix::from_i64_rows(&fan.cone_matrix(c)).inverse().expect("unimodular"))
        .collect();
    let int_rows = |m: &QMatrix| -> Vec<Vec<i64>> {
        (0..n).map(|i| m.row(i).iter().map(|x| to_i64(x).expect("unimodular inverse")).collect()).collect()
    };
    for a in 0..fan.max_cones.len() {
        for b in a + 1..fan.max_cones.len() {
            let (ca, cb) = (&fan.max_cones[a], &fan.max_cones[b]);
            let mut ineq = int_rows(&inverses[a]);
            ineq.extend(int_rows(&inverses[b]));
            let shared: Vec<usize> = ca.iter().copied().filter(|i| cb.contains(i)).collect();
            for ray in extreme_rays(&ineq, n) {
                let coords = fan.cone_coordinates(ca, &ray);
                let outside = ca.iter().zip(&coords).any(|(i, c)| *c != 0 && !shared.contains(i));
                if outside {
                    return Err(FanError::ImproperIntersection { first: ca.clone(), second: cb.clone() });
                }
            }
        }
    }
    Ok(())
}

/// Coordinates of `l ∈ 𝕃` in the given ℤ-basis (columns of `basis`).
fn kernel_coordinates(basis: &[Vec<i64>], l: &[i64]) -> Vec<i64> {
    let m = l.len();
    let r = basis.len();
    let mat = QMatrix::from_rows((0..m).map(|i| (0..r).map(|a| q(basis[a][i])).collect()).collect());
    // least-squares normal equations are exact here since l lies in the span
    let mt = mat.transpose();
    let gram = &mt * &mat;
    let rhs = mt.mul_vec(&l.iter().map(|&x| q(x)).collect::<Vec<_>>());
    let c = gram.solve(&rhs).expect("kernel basis has full column rank");
    c.iter().map(|x| to_i64(x).expect("lattice vector has integer coordinates")).collect()
}

/// Wall relations in `ℤ^m`: for each wall, the opposite rays carry coefficient 1.
pub fn wall_relations(fan: &FanData) -> Vec<Vec<i64>> {
    let m = fan.num_rays();
    let mut out = BTreeSet::new();
    for (ridge, cones) in fan.walls() {
        if cones.len() != 2 {
            continue;
        }
        let ca = &fan.max_cones[cones[0]];
        let cb = &fan.max_cones[cones[1]];
        let i = *ca.iter().find(|x| !ridge.contains(x)).expect("opposite ray");
        let j = *cb.iter().find(|x| !ridge.contains(x)).expect("opposite ray");
        let coords = fan.cone_coordinates(ca, &fan.rays[j]);
        let mut l = vec![0i64; m];
        l[i] = 1;
        l[j] = 1;
        for (k, &idx) in ca.iter().enumerate() {
            if idx == i {
                debug_assert_eq!(coords[k], -1, "smooth wall crossing");
            } else {
                l[idx] -= coords[k];
            }
        }
        out.insert(l);
    }
    out.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FanoClass {
    Fano,
    /// Weak Fano but not Fano.
    WeakFano,
    Neither,
}

impl FanoClass {
    pub fn is_weak_fano(self) -> bool {
        matches!(self, FanoClass::Fano | FanoClass::WeakFano)
    }
}

/// Per-cone linear functional test: `m_σ(a_i) = 1` on σ and `m_σ(a_j) ≤ 1` elsewhere.
pub fn classify_fano(fan: &FanData) -> FanoClass {
    let mut strict = true;
    for cone in &fan.max_cones {
        let b = QMatrix::from_i64_rows(&fan.cone_matrix(cone));
        // m_σ^T B = (1,...,1)  =>  m_σ = B^{-T} 1
        let m_sigma = b.transpose().solve(&vec![Q::one(); fan.rank]).expect("unimodular");
        for (j, ray) in fan.rays.iter().enumerate() {
            let val = dot(&m_sigma, &ray.iter().map(|&x| q(x)).collect::<Vec<_>>());
            if val > Q::one() {
                return FanoClass::Neither;
            }
            if !cone.contains(&j) && val == Q::one() {
                strict = false;
            }
        }
    }
    if strict {
        FanoClass::Fano
    } else {
        FanoClass::WeakFano
    }
}

/// The exact sequence `0 → 𝕃 → ℤ^m → N → 0` in a nef basis, with section `G`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactSequenceData {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// `n × m`, columns are rays.
    pub a: IntMatrix,
    /// `m × r`, columns form the basis of 𝕃 dual to `p_1..p_r`.
    pub m_mat: IntMatrix,
    /// `m × r`, non-negative with `Gᵀ M = 1`.
    pub g: IntMatrix,
    /// The nef classes `p_a` in coordinates dual to the integer kernel basis
    /// `kernel_basis` (rows).
    pub p_nef: IntMatrix,
    pub kernel_basis: IntMatrix,
    /// `ρ_a = Σ_i m_ia`, which are also the Euler weights `k_a`.
    pub rho: Vec<i64>,
}

impl ExactSequenceData {
    /// Row `i` of `M`: the class `[D_i] = Σ_a m_ia p_a`.
    pub fn divisor_class(&self, i: usize) -> &[i64] {
        &self.m_mat[i]
    }

    pub fn euler_weights(&self) -> &[i64] {
        &self.rho
    }

    /// `p_a(l) = Σ_i g_ia l_i` for `l ∈ 𝕃`.
    pub fn nef_degrees(&self, l: &[i64]) -> Vec<i64> {
        (0..self.r).map(|a| (0..self.m).map(|i| self.g[i][a] * l[i]).sum()).collect()
    }

    /// `l = M · p(l)`.
    pub fn relation_from_degrees(&self, d: &[i64]) -> Vec<i64> {
        (0..self.m).map(|i| (0..self.r).map(|a| self.m_mat[i][a] * d[a]).sum()).collect()
    }

    pub fn is_relation(&self, l: &[i64]) -> bool {
        self.a.iter().all(|row| row.iter().zip(l).map(|(x, y)| x * y).sum::<i64>() == 0)
    }
}

/// Builds the exact sequence. `nef_basis`, if given, lists each `p_a` as a
/// divisor `Σ_i c_i D_i` (length-`m` integer vectors).
pub fn exact_sequence(fan: &FanData, nef_basis: Option<&[Vec<i64>]>) -> FanResult<ExactSequenceData> {
    let a = fan.ray_matrix();
    let (n, m) = (fan.rank, fan.num_rays());
    let divisors = elementary_divisors(&a);
    if divisors.len() < n || divisors.iter().any(|&d| d != 1) {
        return Err(FanError::RaysDoNotGenerateLattice { divisors });
    }
    let kernel = integer_kernel_basis(&a);
    let r = kernel.len();
    let wall_coords: Vec<Vec<i64>> = wall_relations(fan).iter().map(|l| kernel_coordinates(&kernel, l)).collect();
    let nef_rays = dual_cone_rays(&wall_coords, r);

    let p_nef: IntMatrix = match nef_basis {
        Some(basis) => {
            if basis.len() != r || basis.iter().any(|c| c.len() != m) {
                return Err(FanError::NefBasisInvalid(format!("expected {r} divisors of length {m}")));
            }
            let rows: IntMatrix =
                basis.iter().map(|c| (0..r).map(|k| (0..m).map(|i| c[i] * kernel[k][i]).sum()).collect()).collect();
            for (idx, y) in rows.iter().enumerate() {
                if wall_coords.iter().any(|w| w.iter().zip(y).map(|(u, v)| u * v).sum::<i64>() < 0) {
                    return Err(FanError::NefBasisInvalid(format!("class {} is not nef", idx + 1)));
                }
            }
            rows
        }
        None => {
            if nef_rays.len() != r {
                return Err(FanError::NefBasisRequired);
            }
            nef_rays.clone()
        }
    };
    let det = if r == 0 { 1 } else { det_i64(&p_nef) };
    if det.abs() != 1 {
        return Err(if nef_basis.is_some() {
            FanError::NefBasisInvalid(format!("classes are not a ℤ-basis (determinant {det})"))
        } else {
            FanError::NefBasisRequired
        });
    }
    // M = K · Y^{-1}
    let y_inv = QMatrix::from_i64_rows(&p_nef).inverse().unwrap_or_else(|| QMatrix::identity(0));
    let mut m_mat: IntMatrix = (0..m)
        .map(|i| {
            (0..r)
                .map(|b| {
                    let s: Q = (0..r).fold(Q::zero(), |acc, k| acc + q(kernel[k][i]) * &y_inv[(k, b)]);
                    to_i64(&s).expect("unimodular change of basis")
                })
                .collect()
        })
        .collect();
    let mut p_nef = p_nef;
    if nef_basis.is_none() {
        // order automatic classes by the first ray whose divisor equals them
        let key = |a: usize| (0..m).find(|&i| (0..r).all(|b| m_mat[i][b] == i64::from(a == b))).unwrap_or(m + a);
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by_key(|&a| key(a));
        m_mat = m_mat.iter().map(|row| order.iter().map(|&a| row[a]).collect()).collect();
        p_nef = order.iter().map(|&a| p_nef[a].clone()).collect();
    }
    let rho: Vec<i64> = (0..r).map(|b| (0..m).map(|i| m_mat[i][b]).sum()).collect();
    if rho.iter().any(|&x| x < 0) {
        return Err(FanError::NefBasisInvalid(format!(
            "anticanonical class {rho:?} is outside the cone spanned by the basis"
        )));
    }
    let g = nonnegative_section(fan, &m_mat, r)?;
    Ok(ExactSequenceData { n, m, r, a, m_mat, g, p_nef, kernel_basis: kernel, rho })
}

fn nonnegative_section(fan: &FanData, m_mat: &IntMatrix, r: usize) -> FanResult<IntMatrix> {
    let m = fan.num_rays();
    let mut last = vec![];
    let mut best: Option<IntMatrix> = None;
    for cone in &fan.max_cones {
        let outside: Vec<usize> = (0..m).filter(|i| !cone.contains(i)).collect();
        let rmat = QMatrix::from_rows(outside.iter().map(|&i| m_mat[i].iter().map(|&x| q(x)).collect()).collect());
        let Some(inv) = rmat.inverse() else { continue };
        let mut g = vec![vec![0i64; r]; m];
        for (k, &i) in outside.iter().enumerate() {
            for a in 0..r {
                g[i][a] = to_i64(&inv[(a, k)]).expect("smooth cone complement is unimodular");
            }
        }
        if g.iter().flatten().all(|&x| x >= 0) {
            // several cones may work; keep the lexicographically largest for determinism
            if best.as_ref().map_or(true, |b| g > *b) {
                best = Some(g);
            }
        } else {
            last = g;
        }
    }
    best.ok_or(FanError::NoNonnegativeSection { witness: last })
}

/// A primitive collection with its primitive relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimitiveRelation {
    pub collection: Vec<usize>,
    pub relation: Vec<i64>,
    pub nef_degrees: Vec<i64>,
    pub anticanonical_degree: i64,
}

pub fn primitive_relations(fan: &FanData, esd: &ExactSequenceData) -> Vec<PrimitiveRelation> {
    let m = fan.num_rays();
    let mut out = Vec::new();
    for size in 2..=fan.rank + 1 {
        for set in subsets(m, size) {
            if fan.is_face(&set) {
                continue;
            }
            let minimal = (0..set.len()).all(|skip| {
                let sub: Vec<usize> = set.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &i)| i).collect();
                fan.is_face(&sub)
            });
            if !minimal {
                continue;
            }
            let s: Vec<i64> = (0..fan.rank).map(|k| set.iter().map(|&i| fan.rays[i][k]).sum()).collect();
            let mut l = vec![0i64; m];
            for &i in &set {
                l[i] = 1;
            }
            let cone = fan
                .max_cones
                .iter()
                .find(|c| fan.cone_coordinates(c, &s).iter().all(|&x| x >= 0))
                .expect("complete fan covers every vector");
            for (&idx, c) in cone.iter().zip(fan.cone_coordinates(cone, &s)) {
                if c != 0 {
                    debug_assert!(!set.contains(&idx), "primitive collection meets its minimal cone");
                    l[idx] -= c;
                }
            }
            let nef_degrees = esd.nef_degrees(&l);
            let anticanonical_degree = l.iter().sum();
            out.push(PrimitiveRelation { collection: set, relation: l, nef_degrees, anticanonical_degree });
        }
    }
    out
}

pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MoriNefCones {
    /// Distinct wall curve classes in `ℤ^m`.
    pub wall_classes: Vec<Vec<i64>>,
    /// The extremal wall classes, generating the Mori cone.
    pub mori_generators: Vec<Vec<i64>>,
    /// Mori generators in the coordinates `(p_a(l))_a`.
    pub mori_degrees: Vec<Vec<i64>>,
    /// Extreme rays of the nef cone, in the basis `p_1..p_r`.
    pub nef_generators: Vec<Vec<i64>>,
    pub basis_generates_nef: bool,
    /// Both cones are recovered by dualizing twice.
    pub double_dual_consistent: bool,
}

pub fn mori_nef_cones(fan: &FanData, esd: &ExactSequenceData) -> MoriNefCones {
    let r = esd.r;
    let wall_classes = wall_relations(fan);
    let wall_degrees: Vec<Vec<i64>> = wall_classes.iter().map(|l| esd.nef_degrees(l)).collect();
    let nef_generators = dual_cone_rays(&wall_degrees, r);
    let mori_rays = dual_cone_rays(&nef_generators, r);
    let nef_again = dual_cone_rays(&mori_rays, r);

    let mut extremal: Vec<(Vec<i64>, Vec<i64>)> = mori_rays
        .iter()
        .filter_map(|ray| wall_degrees.iter().position(|d| d == ray).map(|k| (wall_classes[k].clone(), ray.clone())))
        .collect();
    extremal.sort();
    let (mori_generators, mori_degrees): (Vec<_>, Vec<_>) = extremal.into_iter().unzip();
    let pairs_nonneg = nef_generators
        .iter()
        .all(|y| wall_degrees.iter().all(|d| d.iter().zip(y).map(|(a, b)| a * b).sum::<i64>() >= 0));
    let double_dual_consistent = pairs_nonneg && nef_again == nef_generators && mori_generators.len() == mori_rays.len();
    let mut units: Vec<Vec<i64>> = (0..r).map(|a| (0..r).map(|b| i64::from(a == b)).collect()).collect();
    units.sort();
    let basis_generates_nef = nef_generators == units;
    MoriNefCones { wall_classes, mori_generators, mori_degrees, nef_generators, basis_generates_nef, double_dual_consistent }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SemigroupFailure {
    /// A lattice point of the cone that is not a non-negative combination.
    NotInSemigroup,
    /// An interior lattice point not of the form `(1,0) + ℕÃ`, or vice versa.
    GorensteinShift,
    NotPositive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemigroupCounterexample {
    pub point: Vec<i64>,
    pub failure: SemigroupFailure,
    /// Facet values `⟨u_F, y⟩` of the point (level `x_0` is the bound).
    pub facet_values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemigroupReport {
    pub bound: u32,
    pub positive: bool,
    pub normal_up_to_k: bool,
    pub gorenstein_up_to_k: bool,
    pub points_checked: usize,
    /// Lattice point counts of `k·Conv(a_1..a_m)` for `k = 0..=K`.
    pub slice_sizes: Vec<usize>,
    pub counterexamples: Vec<SemigroupCounterexample>,
}

/// Facets `⟨u, y⟩ ≤ 1` of `Conv(a_1..a_m)` (the origin is interior for complete fans).
pub fn polytope_facets(fan: &FanData) -> Vec<Vec<Q>> {
    let n = fan.rank;
    let rays_q: Vec<Vec<Q>> = fan.rays.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let mut facets: BTreeSet<Vec<Q>> = BTreeSet::new();
    for set in subsets(fan.num_rays(), n) {
        let b = QMatrix::from_rows(set.iter().map(|&i| rays_q[i].clone()).collect());
        let Some(u) = b.solve(&vec![Q::one(); n]) else { continue };
        if rays_q.iter().all(|a| dot(&u, a) <= Q::one()) {
            facets.insert(u);
        }
    }
    facets.into_iter().collect()
}

/// Bounded-slab check that `ℕÃ` is positive, normal and Gorenstein with
/// interior `(1,0) + ℕÃ`, where `ã_0 = (1,0)` and `ã_i = (1, a_i)`.
pub fn semigroup_report(fan: &FanData, bound: u32) -> SemigroupReport {
    let n = fan.rank;
    let facets = polytope_facets(fan);
    let lo: Vec<i64> = (0..n).map(|k| fan.rays.iter().map(|r| r[k]).min().unwrap_or(0).min(0)).collect();
    let hi: Vec<i64> = (0..n).map(|k| fan.rays.iter().map(|r| r[k]).max().unwrap_or(0).max(0)).collect();

    let mut generators: Vec<Vec<i64>> = vec![vec![0; n]];
    generators.extend(fan.rays.iter().cloned());
    // level sets of ℕÃ as iterated sumsets of {0, a_1, .., a_m}
    let mut levels: Vec<BTreeSet<Vec<i64>>> = vec![BTreeSet::from([vec![0; n]])];
    for k in 1..=bound as usize {
        let mut next = BTreeSet::new();
        for p in &levels[k - 1] {
            for g in &generators {
                next.insert(p.iter().zip(g).map(|(a, b)| a + b).collect::<Vec<_>>());
            }
        }
        levels.push(next);
    }

    let mut counterexamples = Vec::new();
    let mut points_checked = 0;
    let mut slice_sizes = Vec::new();
    let facet_vals = |y: &[i64]| -> Vec<Q> {
        let yq: Vec<Q> = y.iter().map(|&x| q(x)).collect();
        facets.iter().map(|u| dot(u, &yq)).collect()
    };
    let positive = levels[0].len() == 1;
    if !positive {
        counterexamples.push(SemigroupCounterexample { point: vec![0; n + 1], failure: SemigroupFailure::NotPositive, facet_values: vec![] });
    }
    let mut normal = true;
    let mut gorenstein = true;
    for k in 0..=bound as i64 {
        let kq = q(k);
        let mut in_cone = 0usize;
        let mut interior = BTreeSet::new();
        for y in box_points(&lo, &hi, k) {
            let vals = facet_vals(&y);
            if vals.iter().any(|v| v > &kq) {
                continue;
            }
            in_cone += 1;
            points_checked += 1;
            let mut x = vec![k];
            x.extend(&y);
            if !levels[k as usize].contains(&y) {
                normal = false;
                counterexamples.push(SemigroupCounterexample {
                    point: x.clone(),
                    failure: SemigroupFailure::NotInSemigroup,
                    facet_values: vals.iter().map(crate::rational::to_num_den).collect(),
                });
            }
            if vals.iter().all(|v| v < &kq) {
                interior.insert(y);
            }
        }
        slice_sizes.push(in_cone);
        if k >= 1 && interior != levels[k as usize - 1] {
            gorenstein = false;
            let witness = interior.symmetric_difference(&levels[k as usize - 1]).next().cloned().unwrap_or_default();
            let mut x = vec![k];
            x.extend(&witness);
            counterexamples.push(SemigroupCounterexample {
                point: x,
                failure: SemigroupFailure::GorensteinShift,
                facet_values: facet_vals(&witness).iter().map(crate::rational::to_num_den).collect(),
            });
        }
    }
    SemigroupReport {
        bound,
        positive,
        normal_up_to_k: normal,
        gorenstein_up_to_k: gorenstein,
        points_checked,
        slice_sizes,
        counterexamples,
    }
}

fn box_points(lo: &[i64], hi: &[i64], k: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for (l, h) in lo.iter().zip(hi) {
        let mut next = Vec::new();
        for p in &out {
            for v in k * l..=k * h {
                let mut p2 = p.clone();
                p2.push(v);
                next.push(p2);
            }
        }
        out = next;
    }
    out
}

/// `|Σ(n)|`, cross-checked against the sum of unit-simplex volumes `|det σ|`.
pub fn normalized_volume(fan: &FanData) -> u64 {
    let count = fan.max_cones.len() as u64;
    let simplex_sum: u64 = fan.max_cones.iter().map(|c| det_i64(&fan.cone_matrix(c)).unsigned_abs()).sum();
    assert_eq!(count, simplex_sum, "normalized volume differs from the number of maximal cones");
    count
}

/// Rank of `l` among the Mori generators: true iff `l` pairs non-negatively with every nef generator.
pub fn is_effective(nef_generators: &[Vec<i64>], degrees: &[i64]) -> bool {
    nef_generators.iter().all(|y| y.iter().zip(degrees).map(|(a, b)| a * b).sum::<i64>() >= 0)
}

/// Primitive integer vector helper re-exported for reports.
pub fn primitive(v: &[Q]) -> Vec<i64> {
    primitive_integer(v)
}

#[allow(dead_code)]
fn is_nonneg(v: &[Q]) -> bool {
    v.iter().all(|x| !x.is_negative())
}
