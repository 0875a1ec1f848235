//! Extreme rays of pointed polyhedral cones and cone duality, by exhaustive
//! enumeration of tight constraint sets. Adequate for the low ranks of toric
//! Picard lattices.

use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::linalg::{dot, QMatrix};
use crate::rational::Q;

/// Scales a rational vector to the primitive integer vector on the same ray.
pub fn primitive_integer(v: &[Q]) -> Vec<i64> {
    let lcm = v.iter().fold(num_bigint::BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<num_bigint::BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(num_bigint::BigInt::from(0), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if g.is_zero() { x.clone() } else { x / &g };
            i64::try_from(y).expect("cone ray coordinate overflows i64")
        })
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Extreme rays (primitive integer vectors, sorted) of `{x ∈ ℝ^dim : h·x ≥ 0 for all h}`.
///
/// The cone is assumed pointed; if it is not, only the rays of its pointed
/// part that are cut out by `dim - 1` independent tight constraints appear.
pub fn extreme_rays(inequalities: &[Vec<i64>], dim: usize) -> Vec<Vec<i64>> {
    if dim == 0 {
        return vec![];
    }
    if dim == 1 {
        let mut out = Vec::new();
        for s in [1i64, -1] {
            if inequalities.iter().all(|h| h[0] * s >= 0) {
                out.push(vec![s]);
            }
        }
        // a line is not pointed: report nothing
        return if out.len() == 2 { vec![] } else { out };
    }
    let rows: Vec<Vec<Q>> = inequalities.iter().map(|h| h.iter().map(|&x| crate::rational::q(x)).collect()).collect();
    let mut found = BTreeSet::new();
    for subset in subsets(rows.len(), dim - 1) {
        let sub = QMatrix::from_rows(subset.iter().map(|&i| rows[i].clone()).collect());
        let ns = sub.nullspace();
        if ns.len() != 1 {
            continue;
        }
        for sign in [1i64, -1] {
            let cand: Vec<Q> = ns[0].iter().map(|x| x * crate::rational::q(sign)).collect();
            if rows.iter().all(|h| !dot(h, &cand).is_negative()) {
                found.insert(primitive_integer(&cand));
            }
        }
    }
    found.into_iter().collect()
}

/// Extreme rays of the dual cone `{y : y·g ≥ 0 for all generators g}`.
pub fn dual_cone_rays(generators: &[Vec<i64>], dim: usize) -> Vec<Vec<i64>> {
    extreme_rays(generators, dim)
}

/// Whether `x` lies in the cone described by the inequalities `h·x ≥ 0`.
pub fn satisfies_all(inequalities: &[Vec<i64>], x: &[i64]) -> bool {
    inequalities.iter().all(|h| h.iter().zip(x).map(|(a, b)| a * b).sum::<i64>() >= 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_orthant_is_self_dual() {
        let gens = vec![vec![1, 0], vec![0, 1]];
        assert_eq!(dual_cone_rays(&gens, 2), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn hirzebruch_two_mori_cone_dual() {
        // Mori generators in the (f, s) coordinates of the Picard lattice
        let mori = vec![vec![1, 0], vec![0, 1]];
        let nef = dual_cone_rays(&mori, 2);
        assert_eq!(nef.len(), 2);
        let back = dual_cone_rays(&nef, 2);
        assert_eq!(back, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn skew_cone() {
        // cone spanned by (1,0) and (1,1); dual spanned by (0,1) and (1,-1)
        let dual = dual_cone_rays(&[vec![1, 0], vec![1, 1]], 2);
        assert_eq!(dual, vec![vec![0, 1], vec![1, -1]]);
        assert!(satisfies_all(&dual, &[3, 1]));
        assert!(!satisfies_all(&dual, &[0, 1]));
    }

    #[test]
    fn non_pointed_dual_is_empty() {
        // generators span a line plus more: dual of the whole plane is {0}
        let rays = dual_cone_rays(&[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]], 2);
        assert!(rays.is_empty());
    }

    #[test]
    fn primitive_scaling() {
        use crate::rational::qfrac;
        assert_eq!(primitive_integer(&[qfrac(1, 2), qfrac(-3, 4)]), vec![2, -3]);
    }
}
