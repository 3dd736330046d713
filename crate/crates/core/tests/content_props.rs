use proptest::prelude::*;
use vistrace::content::{
    content_exact_with_caps, content_lower_frostman, content_upper, ContentQuery, ExactCaps,
};
use vistrace::space::{Mask, SpaceGraph, VertexId};

const CAPS: ExactCaps = ExactCaps {
    max_candidates: 0,
    max_targets: 16,
};

fn grid() -> impl Strategy<Value = SpaceGraph> {
    (3usize..8, 3usize..8).prop_map(|(w, h)| {
        SpaceGraph::build_grid(&Mask::new(w, h, true), 1.0, &Default::default()).unwrap()
    })
}

/// A grid, two target sets of at most 6 vertices and a codimension.
fn setup() -> impl Strategy<Value = (SpaceGraph, Vec<VertexId>, Vec<VertexId>, f64)> {
    grid().prop_flat_map(|g| {
        let n = g.len();
        (
            Just(g),
            prop::collection::btree_set(0..n, 1..6),
            prop::collection::btree_set(0..n, 1..6),
            0.0f64..2.0,
        )
            .prop_map(|(g, a, b, t)| (g, a.into_iter().collect(), b.into_iter().collect(), t))
    })
}

/// All vertices as centers so every target set sees the same family.
fn query(g: &SpaceGraph, targets: &[VertexId], t: f64) -> ContentQuery {
    ContentQuery::dyadic(targets.to_vec(), t, 4.0, 1.0).with_centers((0..g.len()).collect())
}

fn exact(g: &SpaceGraph, targets: &[VertexId], t: f64) -> f64 {
    content_exact_with_caps(g, &query(g, targets, t), CAPS)
        .unwrap()
        .value
}

fn union(a: &[VertexId], b: &[VertexId]) -> Vec<VertexId> {
    let mut u: Vec<VertexId> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lower_exact_upper_sandwich((g, a, _b, t) in setup()) {
        let q = query(&g, &a, t);
        let lo = content_lower_frostman(&g, &q).unwrap().value;
        let ex = content_exact_with_caps(&g, &q, CAPS).unwrap().value;
        let up = content_upper(&g, &q).unwrap().value;
        let tol = 1e-9 * up;
        prop_assert!(lo <= ex + tol, "lower {} exact {}", lo, ex);
        prop_assert!(ex <= up + tol, "exact {} upper {}", ex, up);
        prop_assert!(lo > 0.0);
    }

    #[test]
    fn exact_is_monotone_and_subadditive((g, a, b, t) in setup()) {
        let ab = union(&a, &b);
        let (ea, eb, eab) = (exact(&g, &a, t), exact(&g, &b, t), exact(&g, &ab, t));
        let tol = 1e-12 * eab;
        prop_assert!(ea <= eab + tol && eb <= eab + tol);
        prop_assert!(eab <= ea + eb + tol);
    }

    #[test]
    fn greedy_cover_is_a_cover((g, a, _b, t) in setup()) {
        let est = content_upper(&g, &query(&g, &a, t)).unwrap();
        let covered: Vec<VertexId> = est.cover.iter().flat_map(|b| g.ball_members(b)).collect();
        prop_assert!(a.iter().all(|v| covered.contains(v)));
        let cost: f64 = est.cover.iter().map(|b| g.ball_mass(b) / b.radius.powf(t)).sum();
        prop_assert!((cost - est.value).abs() <= 1e-12 * cost);
    }

    #[test]
    fn packing_certificate_is_admissible((g, a, _b, t) in setup()) {
        let q = query(&g, &a, t);
        let est = content_lower_frostman(&g, &q).unwrap();
        let total: f64 = est.dual.iter().map(|d| d.1).sum();
        prop_assert!((total - est.value).abs() <= 1e-9 * total);
        for c in 0..g.len() {
            for &r in &q.radii {
                let members = g.ball_members(&vistrace::space::Ball::new(c, r));
                let load: f64 = est.dual.iter().filter(|d| members.contains(&d.0)).map(|d| d.1).sum();
                let cap = g.mass_of(&members) / r.powf(t);
                prop_assert!(load <= cap * (1.0 + 1e-9), "ball ({}, {}) load {} cap {}", c, r, load, cap);
            }
        }
    }
}

#[test]
fn single_target_exact_value() {
    // one vertex in the middle of a 3x3 grid: the cheapest ball is the
    // smallest one, which holds only its center
    let g = SpaceGraph::build_grid(&Mask::new(3, 3, true), 1.0, &Default::default()).unwrap();
    let v = 4;
    let e = exact(&g, &[v], 1.0);
    assert!((e - 1.0).abs() < 1e-12, "{e}");
}

#[test]
fn center_restriction_inflation_is_bounded() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut worst = 1.0f64;
    for _ in 0..200 {
        let (w, h) = (rng.random_range(3..8), rng.random_range(3..8));
        let g = SpaceGraph::build_grid(&Mask::new(w, h, true), 1.0, &Default::default()).unwrap();
        let k = rng.random_range(1..7);
        let mut a: Vec<VertexId> = (0..k).map(|_| rng.random_range(0..g.len())).collect();
        a.sort_unstable();
        a.dedup();
        let t = rng.random_range(0.0..2.0);
        let own = ContentQuery::dyadic(a.clone(), t, 4.0, 1.0);
        let restricted = content_exact_with_caps(&g, &own, CAPS).unwrap().value;
        let free = exact(&g, &a, t);
        assert!(restricted >= free * (1.0 - 1e-12));
        worst = worst.max(restricted / free);
    }
    eprintln!("largest inflation from target-only centers: {worst:.3}");
    assert!(worst.is_finite());
}
