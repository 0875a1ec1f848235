use proptest::prelude::*;
use toricmirror::cohomology::{build_algebra, GradedAlgebra};
use toricmirror::fan::{exact_sequence, primitive_relations};
use toricmirror::fixtures;
use toricmirror::qseries::{invert_exponential_map, QSeries};
use toricmirror::rational::{q, Q};
use toricmirror::series::{LogLaurentSeries, SeriesKey};
use toricmirror::weyl::WeylOperator;

const ORDER: u32 = 3;

fn algebra() -> GradedAlgebra {
    let fan = fixtures::p1xp1();
    let esd = exact_sequence(&fan, None).unwrap();
    let prels = primitive_relations(&fan, &esd);
    build_algebra(&fan, &esd, &prels).unwrap()
}

type RawTerm = (Vec<u32>, i32, Vec<u32>, u32, Vec<i64>);

fn raw_series() -> impl Strategy<Value = Vec<RawTerm>> {
    prop::collection::vec(
        (
            prop::collection::vec(0u32..=2, 2),
            -2i32..=1,
            prop::collection::vec(0u32..=1, 2),
            0u32..=1,
            prop::collection::vec(-3i64..=3, 4),
        ),
        0..5,
    )
}

fn build(ga: &GradedAlgebra, raw: &[RawTerm]) -> LogLaurentSeries {
    let mut s = LogLaurentSeries::zero(2, ga.dim(), ORDER);
    for (qe, z, lq, lz, c) in raw {
        let v: Vec<Q> = c.iter().map(|&x| q(x)).collect();
        s.add_term(SeriesKey { q: qe.clone(), z: *z, logq: lq.clone(), logz: *lz }, &v);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms(a in raw_series(), b in raw_series(), c in raw_series()) {
        let ga = algebra();
        let (a, b, c) = (build(&ga, &a), build(&ga, &b), build(&ga, &c));
        prop_assert_eq!(a.mul(&ga, &b), b.mul(&ga, &a));
        prop_assert_eq!(a.mul(&ga, &b).mul(&ga, &c), a.mul(&ga, &b.mul(&ga, &c)));
        prop_assert_eq!(a.mul(&ga, &b.add(&c)), a.mul(&ga, &b).add(&a.mul(&ga, &c)));
        prop_assert_eq!(a.add(&b).sub(&b), a);
    }

    #[test]
    fn leibniz(a in raw_series(), b in raw_series(), k in 0usize..2) {
        let ga = algebra();
        let (a, b) = (build(&ga, &a), build(&ga, &b));
        let prod = a.mul(&ga, &b);
        prop_assert_eq!(prod.theta(k), a.theta(k).mul(&ga, &b).add(&a.mul(&ga, &b.theta(k))));
        prop_assert_eq!(prod.euler_z(), a.euler_z().mul(&ga, &b).add(&a.mul(&ga, &b.euler_z())));
    }

    #[test]
    fn theta_operators_commute(a in raw_series()) {
        let ga = algebra();
        let a = build(&ga, &a);
        prop_assert_eq!(a.theta(0).theta(1), a.theta(1).theta(0));
    }

    #[test]
    fn weyl_associativity(
        t in prop::collection::vec((prop::collection::vec(0u32..=2, 2), -1i32..=2, prop::collection::vec(0u32..=2, 2), 0u32..=2, -4i64..=4), 3)
    ) {
        let ops: Vec<WeylOperator> =
            t.iter().map(|(e, j, al, be, c)| WeylOperator::term(2, q(*c), e.clone(), *j, al.clone(), *be)).collect();
        prop_assert_eq!(&(&ops[0] * &ops[1]) * &ops[2], &ops[0] * &(&ops[1] * &ops[2]));
    }

    #[test]
    fn weyl_action_is_a_homomorphism(
        t in prop::collection::vec((prop::collection::vec(0u32..=1, 2), 0i32..=1, prop::collection::vec(0u32..=2, 2), 0u32..=1, -3i64..=3), 2),
        s in raw_series(),
    ) {
        let ga = algebra();
        let s = build(&ga, &s);
        let ops: Vec<WeylOperator> =
            t.iter().map(|(e, j, al, be, c)| WeylOperator::term(2, q(*c), e.clone(), *j, al.clone(), *be)).collect();
        prop_assert_eq!(s.apply(&(&ops[0] * &ops[1])), s.apply(&ops[1]).apply(&ops[0]));
    }

    #[test]
    fn exponential_map_inverts(c in prop::collection::vec(-3i64..=3, 6)) {
        // κ_a = q_a exp(g_a) composed with its inverse is the identity
        let r = 2;
        let mut g = vec![QSeries::zero(r, ORDER), QSeries::zero(r, ORDER)];
        for (k, e) in [[1u32, 0], [0, 1], [1, 1]].iter().enumerate() {
            g[0].add_term(e, &q(c[k]));
            g[1].add_term(e, &q(c[k + 3]));
        }
        let u = invert_exponential_map(&g);
        for a in 0..r {
            let kappa = QSeries::var(r, ORDER, a).mul(&g[a].exp());
            prop_assert_eq!(kappa.substitute_scaled(&u), QSeries::var(r, ORDER, a));
        }
    }
}
