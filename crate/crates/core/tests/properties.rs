use carnot_core::cantor::{
    cantor_dist_lower, cantor_member, envelopes_containing, gap_window, interval_hits_cantor, LadderIndex, Membership,
};
use carnot_core::{koranyi_lower_bound, GroupSpec, Metric};
use proptest::prelude::*;

const ENGEL: &str = r#"{"n":4,"m":2,"weights":[1,1,2,3],"law":[
  {"i":3,"monomials":[{"coef":0.5,"p":[1],"q":[2]},{"coef":-0.5,"p":[2],"q":[1]}]},
  {"i":4,"monomials":[{"coef":0.5,"p":[1],"q":[3]},{"coef":-0.5,"p":[3],"q":[1]},
    {"coef":0.08333333333333333,"p":[1,1],"q":[2]},{"coef":-0.08333333333333333,"p":[1,2],"q":[1]},
    {"coef":-0.08333333333333333,"p":[1],"q":[1,2]},{"coef":0.08333333333333333,"p":[2],"q":[1,1]}]}]}"#;

fn engel() -> GroupSpec {
    GroupSpec::from_json(ENGEL).unwrap()
}

fn pt(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn group_laws(g: &GroupSpec, p: &[f64], q: &[f64], r: &[f64], lambda: f64) -> Result<(), TestCaseError> {
    let zero = vec![0.0; g.n()];
    let lhs = g.compose(&g.compose(p, q), r);
    let rhs = g.compose(p, &g.compose(q, r));
    prop_assert!(close(&lhs, &rhs, 1e-10), "{lhs:?} vs {rhs:?}");
    prop_assert!(close(&g.compose(p, &zero), p, 1e-15) && close(&g.compose(&zero, p), p, 1e-15));
    prop_assert!(close(&g.compose(p, &g.inverse(p)), &zero, 1e-12));
    prop_assert!(close(&g.compose(&g.inverse(p), p), &zero, 1e-12));
    let dl = g.dilation(lambda, &g.compose(p, q));
    let ld = g.compose(&g.dilation(lambda, p), &g.dilation(lambda, q));
    prop_assert!(close(&dl, &ld, 1e-10));
    Ok(())
}

proptest! {
    #[test]
    fn heisenberg_group_laws(p in pt(3), q in pt(3), r in pt(3), lambda in 0.01..10.0f64) {
        group_laws(&GroupSpec::heisenberg(), &p, &q, &r, lambda)?;
    }

    #[test]
    fn engel_group_laws(p in pt(4), q in pt(4), r in pt(4), lambda in 0.01..10.0f64) {
        group_laws(&engel(), &p, &q, &r, lambda)?;
    }

    #[test]
    fn first_coordinate_reduction_has_a_zero_tail(t in -3.0..3.0f64, target in pt(4)) {
        for g in [GroupSpec::heisenberg(), engel()] {
            let target = &target[..g.n()];
            let tau = g.first_coordinate_tau(t, target).unwrap();
            let base: Vec<f64> = std::iter::once(t).chain(tau).collect();
            let red = g.between(&base, target);
            prop_assert!((red[0] - (target[0] - t)).abs() < 1e-12);
            prop_assert!(red[1..].iter().all(|v| v.abs() < 1e-12 * (1.0 + t.abs()).powi(3) * 30.0), "{red:?}");
        }
    }

    #[test]
    fn metric_axioms(a in pt(3), b in pt(3), c in pt(3)) {
        let h = GroupSpec::heisenberg();
        let metrics = [
            Metric::Euclidean,
            Metric::Koranyi,
            Metric::snowflake(Metric::Koranyi, 0.5).unwrap(),
            Metric::snowflake(Metric::Euclidean, 0.25).unwrap(),
        ];
        for m in &metrics {
            let d = |x: &[f64], y: &[f64]| m.dist(&h, x, y).unwrap();
            prop_assert!(d(&a, &a).abs() < 1e-12);
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-9 * (1.0 + d(&a, &b)));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9, "{} fails the triangle inequality", m.name());
        }
    }

    #[test]
    fn koranyi_is_homogeneous_and_left_invariant(a in pt(3), b in pt(3), g in pt(3), lambda in 0.01..10.0f64) {
        let h = GroupSpec::heisenberg();
        let d = |x: &[f64], y: &[f64]| Metric::Koranyi.dist(&h, x, y).unwrap();
        let base = d(&a, &b);
        let scaled = d(&h.dilation(lambda, &a), &h.dilation(lambda, &b));
        prop_assert!((scaled - lambda * base).abs() <= 1e-10 * (1.0 + lambda * base));
        let moved = d(&h.compose(&g, &a), &h.compose(&g, &b));
        prop_assert!((moved - base).abs() <= 1e-10 * (1.0 + base));
        let p = h.between(&a, &b);
        prop_assert!(koranyi_lower_bound(&p) <= base * (1.0 + 1e-12));
    }

    #[test]
    fn quasi_norm_is_homogeneous_on_engel(p in pt(4), g in pt(4), lambda in 0.01..10.0f64) {
        let e = engel();
        let n = Metric::QuasiNorm.norm(&e, &p).unwrap();
        let scaled = Metric::QuasiNorm.norm(&e, &e.dilation(lambda, &p)).unwrap();
        prop_assert!((scaled - lambda * n).abs() <= 1e-10 * (1.0 + lambda * n));
        let q = e.compose(&g, &p);
        let d = Metric::QuasiNorm.dist(&e, &g, &q).unwrap();
        prop_assert!((d - n).abs() <= 1e-9 * (1.0 + n));
    }

    #[test]
    fn cantor_verdicts_are_stable_under_deeper_scans(x in 0.0..=1.0f64, d in 1u32..40) {
        let shallow = cantor_member(x, d).unwrap();
        let deep = cantor_member(x, d + 10).unwrap();
        if shallow != Membership::Undecided {
            prop_assert_eq!(shallow, deep);
        }
        prop_assert!(cantor_dist_lower(x, d) <= cantor_dist_lower(x, d + 10) + 1e-15);
    }

    #[test]
    fn cantor_distance_bound_is_sound(x in -0.5..1.5f64) {
        // Level-12 interval endpoints belong to the set.
        let mut ends = vec![0.0f64, 1.0];
        for level in 1..=12u32 {
            let w = 3f64.powi(-(level as i32));
            for k in 0..3u64.pow(level) {
                let lo = k as f64 * w;
                if interval_hits_cantor(lo + 0.25 * w, lo + 0.75 * w, 40) {
                    ends.push(lo);
                    ends.push(lo + w);
                }
            }
        }
        let upper = ends.iter().map(|e| (x - e).abs()).fold(f64::INFINITY, f64::min);
        prop_assert!(cantor_dist_lower(x, 40) <= upper + 1e-15);
        if cantor_member(x, 40).unwrap() == Membership::Out {
            prop_assert!(cantor_dist_lower(x, 40) > 0.0);
        }
    }

    #[test]
    fn envelopes_tile_the_unit_interval(x in (2f64).powi(-10)..1.0f64) {
        let hits = envelopes_containing(x);
        prop_assert!(!hits.is_empty() && hits.len() <= 2);
        for idx in &hits {
            let (lo, hi) = idx.envelope();
            prop_assert!(lo <= x && x <= hi);
        }
        let t = x.min(0.999);
        let idx = gap_window(t, 40).unwrap();
        let (lo, hi) = idx.envelope();
        prop_assert!(lo <= t + 4.0 * t * t && hi >= t);
    }
}

#[test]
fn envelope_tiling_is_exact() {
    for n in 1..=10u32 {
        let all: Vec<_> = (0..1u64 << n).map(|k| LadderIndex::new(n, k).unwrap().envelope()).collect();
        assert_eq!(all[0].0, (-(n as f64)).exp2());
        assert_eq!(all.last().unwrap().1, (-(n as f64 - 1.0)).exp2());
        for w in all.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }
}
