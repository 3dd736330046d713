use proptest::prelude::*;
use vistrace::energy::{minimize_energy, CondenserProblem, EnergySolution};
use vistrace::space::{Ball, Mask, SpaceGraph, VertexId, WeightFn};

#[derive(Debug)]
struct Setup {
    g: SpaceGraph,
    e: Vec<VertexId>,
    f: Vec<VertexId>,
}

/// Plates are the leftmost and rightmost columns of a weighted grid.
fn setup() -> impl Strategy<Value = Setup> {
    (3usize..9, 2usize..7, 0.0f64..1.5).prop_map(|(w, h, expo)| {
        let weight = WeightFn::RadialPower {
            center: [0.13, 0.41],
            exponent: expo,
            offset: 0.3,
        };
        let g = SpaceGraph::build_grid(&Mask::new(w, h, true), 0.2, &weight).unwrap();
        let col = |c: usize| {
            (0..h)
                .map(|r| g.vertex_at(r, c).unwrap())
                .collect::<Vec<_>>()
        };
        let (e, f) = (col(0), col(w - 1));
        Setup { g, e, f }
    })
}

fn solve(s: &Setup, e: &[VertexId], f: &[VertexId], q: f64) -> EnergySolution {
    let ball = Ball::new(0, 2.0 * s.g.diameter_bound());
    minimize_energy(
        &s.g,
        &CondenserProblem {
            ball,
            e: e.to_vec(),
            f: f.to_vec(),
            q,
        },
    )
    .unwrap()
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), 1.3f64..1.9, 2.1f64..4.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn potential_obeys_maximum_principle(s in setup(), q in exponent()) {
        let sol = solve(&s, &s.e, &s.f, q);
        prop_assert!(sol.u.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let pot = sol.potential(&s.g);
        prop_assert!(s.e.iter().all(|&v| pot[v] == Some(1.0)));
        prop_assert!(s.f.iter().all(|&v| pot[v] == Some(0.0)));
        prop_assert!(sol.residual < 1e-6, "residual {}", sol.residual);
    }

    #[test]
    fn swapping_plates_reflects_the_potential(s in setup(), q in exponent()) {
        let a = solve(&s, &s.e, &s.f, q);
        let b = solve(&s, &s.f, &s.e, q);
        let scale = a.edge_energy.max(1e-300);
        prop_assert!((a.edge_energy - b.edge_energy).abs() <= 1e-6 * scale);
        for (x, y) in a.u.iter().zip(&b.u) {
            prop_assert!((x + y - 1.0).abs() <= 1e-4, "{} + {}", x, y);
        }
    }

    #[test]
    fn larger_plate_costs_more(s in setup(), q in exponent(), extra in 0usize..64) {
        let a = solve(&s, &s.e, &s.f, q);
        let mut f2 = s.f.clone();
        let v = extra % s.g.len();
        if s.e.contains(&v) || f2.contains(&v) {
            return Ok(());
        }
        f2.push(v);
        let b = solve(&s, &s.e, &f2, q);
        prop_assert!(b.edge_energy >= a.edge_energy * (1.0 - 1e-6));
    }
}

/// Weighted Laplace equation solved densely, independent of the solver.
#[test]
fn quadratic_case_matches_dense_solve() {
    let weight = WeightFn::RadialPower {
        center: [0.0, 0.0],
        exponent: 1.0,
        offset: 0.5,
    };
    let g = SpaceGraph::build_grid(&Mask::new(6, 4, true), 0.25, &weight).unwrap();
    let e: Vec<_> = (0..4).map(|r| g.vertex_at(r, 0).unwrap()).collect();
    let f = vec![g.vertex_at(2, 5).unwrap()];
    let s = Setup { g, e, f };
    let sol = solve(&s, &s.e, &s.f, 2.0);
    let n = s.g.len();
    let fixed: Vec<Option<f64>> = (0..n)
        .map(|v| {
            if s.e.contains(&v) {
                Some(1.0)
            } else if s.f.contains(&v) {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut b = nalgebra::DVector::<f64>::zeros(n);
    for x in 0..n {
        if let Some(val) = fixed[x] {
            a[(x, x)] = 1.0;
            b[x] = val;
            continue;
        }
        for (y, d) in s.g.neighbors(x) {
            let w = (s.g.mass(x) + s.g.mass(y)) / (d * d);
            a[(x, x)] += w;
            a[(x, y)] -= w;
        }
    }
    let u = a.lu().solve(&b).unwrap();
    let pot = sol.potential(&s.g);
    for v in 0..n {
        assert!((pot[v].unwrap() - u[v]).abs() < 1e-10, "vertex {v}");
    }
}
