use proptest::prelude::*;
use vistrace::frostman::{
    build_generations, frostman_weights, verify_separation, verify_telescoping, GenerationOptions,
    GenerationTree, SkeletonPoint,
};
use vistrace::generators::{generate_domain, DomainSpec};

type Level = Vec<SkeletonPoint>;

/// Random trees of depth 1 to 3 where every non-leaf point has one to
/// three children; counts and ball masses are read off a flat pool.
fn skeleton() -> impl Strategy<Value = Vec<Level>> {
    (
        1usize..4,
        prop::collection::vec((0usize..3, 0.1f64..5.0), 64),
    )
        .prop_map(|(depth, pool)| {
            let mut draw = pool.into_iter().cycle();
            let mut levels: Vec<Level> = vec![vec![(0, 0, None, 1.0)]];
            let mut id = 1;
            for _ in 0..depth {
                let parents = levels.last().unwrap().len();
                let mut next = Vec::new();
                for p in 0..parents {
                    let (extra, _) = draw.next().unwrap();
                    for _ in 0..=extra {
                        next.push((id, id, Some(p), draw.next().unwrap().1));
                        id += 1;
                    }
                }
                levels.push(next);
            }
            levels
        })
}

proptest! {
    #[test]
    fn weights_split_parent_mass_by_ball_mass(levels in skeleton()) {
        let tree = GenerationTree::from_skeleton(1.0, 0.125, &levels).unwrap();
        let m = frostman_weights(&tree).unwrap();
        for k in 0..tree.depth() {
            for (pi, p) in tree.levels[k].points.iter().enumerate() {
                let kids = &p.children;
                let total: f64 = kids.iter().map(|&c| m.weights[k + 1][c]).sum();
                prop_assert!((total - m.weights[k][pi]).abs() <= 1e-12);
                let mass: f64 = kids.iter().map(|&c| tree.levels[k + 1].points[c].ball_mass).sum();
                for &c in kids {
                    let share = tree.levels[k + 1].points[c].ball_mass / mass;
                    prop_assert!((m.weights[k + 1][c] - share * m.weights[k][pi]).abs() <= 1e-12);
                }
            }
        }
        for w in &m.weights {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn disk_generations_are_separated_and_telescope() {
    let dd = generate_domain(&DomainSpec::Disk { cells: 64 })
        .unwrap()
        .build(&Default::default())
        .unwrap();
    let g = dd.space();
    let z0 = g.nearest_vertex([0.0, 0.0]);
    for eta in [0.25, 0.125] {
        let opts = GenerationOptions {
            eta,
            depth: 2,
            ..Default::default()
        };
        let tree = build_generations(&dd, z0, opts).unwrap();
        assert!(tree.depth() >= 1, "eta {eta}");
        assert!(tree
            .levels
            .iter()
            .all(|l| l.points.iter().all(|p| dd.is_boundary(p.vertex))));
        let sep = verify_separation(&dd, &tree);
        assert!(sep.ok, "eta {eta}: {:?}", sep.levels);
        let m = frostman_weights(&tree).unwrap();
        for k2 in 0..=tree.depth() {
            assert!(verify_telescoping(g, &tree, &m, 0, k2).unwrap().ok);
        }
    }
}
