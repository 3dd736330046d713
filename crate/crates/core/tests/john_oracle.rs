//! John subdomains and cones against brute-force enumeration on tiny graphs.

#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use proptest::prelude::*;
use vistrace::domain::{
    cone_domain, john_subdomain_with_slack, verify_john_curve_with_slack, DomainDecomp,
};
use vistrace::space::{Mask, SpaceGraph, VertexId};

#[derive(Debug, Clone)]
struct Instance {
    dd: DomainDecomp,
    z0: VertexId,
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..5, 2usize..4, any::<u16>(), any::<usize>()).prop_filter_map(
        "needs interior and boundary",
        |(w, h, bits, pick)| {
            let g = Arc::new(
                SpaceGraph::build_grid(&Mask::new(w, h, true), 1.0, &Default::default()).ok()?,
            );
            let dd = DomainDecomp::decompose(g, |v| (bits >> (v % 16)) & 1 == 1).ok()?;
            let z0 = dd.interior()[pick % dd.interior().len()];
            Some(Instance { dd, z0 })
        },
    )
}

/// Membership by enumerating every simple interior path from `z0`: `x` is
/// admitted when some path ending at `x` has `ℓ(γ[v, x]) ≤ c (d_Ω(v) + s)` at
/// every vertex `v` before `x`.
fn brute_members(dd: &DomainDecomp, z0: VertexId, c: f64, s: f64) -> Vec<bool> {
    let g = dd.space();
    let mut hit = vec![false; g.len()];
    let mut path = vec![z0];
    let mut lens = vec![0.0];
    let mut on = vec![false; g.len()];
    on[z0] = true;
    fn walk(
        dd: &DomainDecomp,
        c: f64,
        s: f64,
        path: &mut Vec<VertexId>,
        lens: &mut Vec<f64>,
        on: &mut [bool],
        hit: &mut [bool],
    ) {
        let x = *path.last().unwrap();
        let total = *lens.last().unwrap();
        let ok = path[..path.len() - 1]
            .iter()
            .zip(lens.iter())
            .all(|(&v, &l)| total - l <= c * (dd.d_omega(v) + s));
        if !ok {
            // tails only grow along an extension
            return;
        }
        hit[x] = true;
        let nbrs: Vec<_> = dd.space().neighbors(x).collect();
        for (y, len) in nbrs {
            if on[y] || !dd.is_interior(y) {
                continue;
            }
            on[y] = true;
            path.push(y);
            lens.push(total + len);
            walk(dd, c, s, path, lens, on, hit);
            path.pop();
            lens.pop();
            on[y] = false;
        }
    }
    walk(dd, c, s, &mut path, &mut lens, &mut on, &mut hit);
    hit
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn subdomain_matches_enumeration(inst in instance(), c in 1.0f64..4.0, with_slack in any::<bool>()) {
        let s = if with_slack { 2.0 } else { 0.0 };
        let sub = john_subdomain_with_slack(&inst.dd, inst.z0, c, s).unwrap();
        let oracle = brute_members(&inst.dd, inst.z0, c, s);
        for v in 0..inst.dd.space().len() {
            prop_assert_eq!(sub.contains(v), oracle[v], "vertex {}", v);
        }
    }

    #[test]
    fn witness_curves_pass_the_cone_test(inst in instance(), c in 1.0f64..4.0) {
        let sub = john_subdomain_with_slack(&inst.dd, inst.z0, c, 2.0).unwrap();
        for &x in sub.members() {
            let curve = sub.curve_to(inst.dd.space(), x).unwrap();
            prop_assert_eq!(curve.path[0], inst.z0);
            let chk = verify_john_curve_with_slack(&inst.dd, &curve, c, 2.0).unwrap();
            prop_assert!(chk.ok, "worst ratio {}", chk.worst_ratio);
        }
    }

    #[test]
    fn subdomain_grows_with_c(inst in instance(), c in 1.0f64..4.0, dc in 0.0f64..3.0) {
        let a = john_subdomain_with_slack(&inst.dd, inst.z0, c, 0.0).unwrap();
        let b = john_subdomain_with_slack(&inst.dd, inst.z0, c + dc, 0.0).unwrap();
        prop_assert!(a.members().iter().all(|&v| b.contains(v)));
        prop_assert!(a.contains(inst.z0));
    }

    #[test]
    fn cone_is_union_of_interior_balls(inst in instance(), c in 1.0f64..4.0, pick in any::<usize>()) {
        let dd = &inst.dd;
        let g = dd.space();
        let sub = john_subdomain_with_slack(dd, inst.z0, c, 2.0).unwrap();
        let x = sub.members()[pick % sub.members().len()];
        let curve = sub.curve_to(g, x).unwrap();
        let cone = cone_domain(dd, &curve);
        let dist: Vec<Vec<f64>> = curve.path.iter().map(|&z| g.geodesic_distance(&[z]).unwrap().dist).collect();
        for v in 0..g.len() {
            let margin = curve
                .path
                .iter()
                .zip(&dist)
                .map(|(&z, d)| d[v] - dd.d_omega(z))
                .fold(f64::INFINITY, f64::min);
            if margin < -1e-6 {
                prop_assert!(cone.contains(&v), "vertex {} inside a ball", v);
            } else if margin > -1e-12 {
                prop_assert!(!cone.contains(&v), "vertex {} outside every ball", v);
            }
        }
    }

    #[test]
    fn shrinking_the_domain_shrinks_the_subdomain(inst in instance(), c in 1.0f64..4.0, bits in any::<u16>()) {
        let dd = &inst.dd;
        let keep: Vec<usize> = dd
            .interior()
            .iter()
            .copied()
            .filter(|&v| v == inst.z0 || (bits >> (v % 16)) & 1 == 1)
            .collect();
        let Ok(sub_dd) = dd.restrict(&keep) else { return Ok(()) };
        if !sub_dd.is_interior(inst.z0) {
            return Ok(());
        }
        let small = john_subdomain_with_slack(&sub_dd, inst.z0, c, 0.0).unwrap();
        let big = john_subdomain_with_slack(dd, inst.z0, c, 0.0).unwrap();
        prop_assert!(small.members().iter().all(|&v| big.contains(v)));
    }
}
