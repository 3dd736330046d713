//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary so every line reaches the output. A criterion in
//! `KNOWN_FAILURES` is reported as FAIL but does not fail the run; if it
//! starts passing the run fails so the list gets updated.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vistrace::config::{PipelineConfig, Z0Choice};
use vistrace::content::{
    content_exact_small, content_lower_frostman, content_upper, dyadic_radii, ContentQuery,
};
use vistrace::domain::{visible_boundary, DomainDecomp};
use vistrace::energy::{minimize_energy, verify_loewner, CondenserProblem};
use vistrace::frostman::{
    build_generations, chain_bound, frostman_weights, john_curve_from_generation,
    verify_telescoping, GenerationOptions, GenerationTree,
};
use vistrace::generators::{comb_arcs, generate_domain, DomainSpec};
use vistrace::pipeline::{content_bound_constant, run_pipeline, sample_lower_content, select_z0};
use vistrace::space::{Ball, Mask, SpaceGraph, VertexId, WeightFn};
use vistrace::suites::{half_annuli_condenser, run_suite, SuiteOptions};
use vistrace::trace::trace_values;

const KNOWN_FAILURES: &[usize] = &[10];

type Outcome = (bool, String);

fn domain(spec: DomainSpec) -> DomainDecomp {
    generate_domain(&spec)
        .unwrap()
        .build(&WeightFn::default())
        .unwrap()
}

fn tree(dd: &DomainDecomp, eta: f64, depth: usize) -> GenerationTree {
    let opts = GenerationOptions {
        eta,
        depth,
        ..Default::default()
    };
    build_generations(dd, dd.deepest(), opts).unwrap()
}

/// Hand-built three-level tree with prescribed ball masses.
fn criterion_1() -> Outcome {
    // level 1 masses 1, 2, 3; children of point 0: 4, 4; of 1: 1, 3; of 2: 5
    let levels = vec![
        vec![(0, 0, None, 1.0)],
        vec![
            (1, 1, Some(0), 1.0),
            (2, 2, Some(0), 2.0),
            (3, 3, Some(0), 3.0),
        ],
        vec![
            (4, 4, Some(0), 4.0),
            (5, 5, Some(0), 4.0),
            (6, 6, Some(1), 1.0),
            (7, 7, Some(1), 3.0),
            (8, 8, Some(2), 5.0),
        ],
    ];
    let t = GenerationTree::from_skeleton(1.0, 0.125, &levels).unwrap();
    let m = frostman_weights(&t).unwrap();
    let expected = [
        vec![1.0],
        vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0],
        vec![1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 0.25, 0.5],
    ];
    let mut err = 0.0f64;
    let mut mass_err = 0.0f64;
    for (got, want) in m.weights.iter().zip(&expected) {
        for (a, b) in got.iter().zip(want) {
            err = err.max((a - b).abs());
        }
        mass_err = mass_err.max((got.iter().sum::<f64>() - 1.0).abs());
    }
    (
        err <= 1e-15 && mass_err <= 1e-12 && m.weights.len() == 3,
        format!("max weight error {err:.1e}, max level-mass error {mass_err:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut checks = 0;
    for cells in [128, 144] {
        let dd = domain(DomainSpec::Disk { cells });
        let t = tree(&dd, 0.125, 2);
        if t.depth() != 2 {
            return (
                false,
                format!("disk {cells}: depth {} instead of 2", t.depth()),
            );
        }
        let m = frostman_weights(&t).unwrap();
        for k1 in 0..2 {
            for k2 in k1 + 1..=2 {
                let r = verify_telescoping(dd.space(), &t, &m, k1, k2).unwrap();
                worst = worst.max(r.max_error);
                checks += r.checked;
            }
        }
    }
    (
        worst <= 1e-12,
        format!("{checks} balls, max error {worst:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut msgs = Vec::new();
    let mut ok = true;
    for spec in [
        DomainSpec::Disk { cells: 140 },
        DomainSpec::Comb {
            cells: 168,
            teeth: 8,
        },
        DomainSpec::SlitDisk { cells: 140 },
    ] {
        let name = spec.name();
        let dd = domain(spec);
        let g = dd.space();
        let t = tree(&dd, 0.125, 2);
        // independent pairwise distances, one shortest-path run per point
        let mut min_margin = f64::INFINITY;
        for lvl in &t.levels {
            let need = 8.0 * lvl.radius - 2.0 * g.h();
            for (i, p) in lvl.points.iter().enumerate() {
                let sp = g.geodesic_distance(&[p.vertex]).unwrap();
                for q in &lvl.points[i + 1..] {
                    if q.vertex != p.vertex {
                        min_margin = min_margin.min(sp.dist[q.vertex] - need);
                    }
                }
            }
        }
        let cb = chain_bound(&dd, &t);
        let chains_ok = cb.m as f64 <= 2.0 * cb.packing;
        ok &= min_margin >= 0.0 && chains_ok;
        msgs.push(format!(
            "{name}: separation margin {min_margin:.3e}, M={} packing {:.1}",
            cb.m, cb.packing
        ));
    }
    (ok, msgs.join("; "))
}

fn criterion_4() -> Outcome {
    let mut msgs = Vec::new();
    let mut ok = true;
    for spec in [
        DomainSpec::Disk { cells: 140 },
        DomainSpec::Comb {
            cells: 168,
            teeth: 8,
        },
        DomainSpec::SlitDisk { cells: 140 },
    ] {
        let name = spec.name();
        let dd = domain(spec);
        let t = tree(&dd, 0.125, 2);
        let m = chain_bound(&dd, &t).m;
        let mut n = 0;
        let mut bad = 0;
        for (k, i) in t.all_points().collect::<Vec<_>>() {
            let cert = john_curve_from_generation(&dd, &t, k, i, m).unwrap();
            let good = cert.john.ok
                && cert.cone.ok
                && cert.cone.c == (8 * m + 1) as f64
                && cert.cone.slack <= 2.0 * dd.space().h() + 1e-15;
            bad += usize::from(!good);
            n += 1;
        }
        ok &= bad == 0;
        msgs.push(format!(
            "{name}: {n} curves at c=4M={}, {bad} failures",
            4 * m
        ));
    }
    (ok, msgs.join("; "))
}

/// Octile distance on a full unit grid, summed like a path of unit and
/// diagonal steps.
fn octile(g: &SpaceGraph, a: VertexId, b: VertexId) -> f64 {
    let (pa, pb) = (g.coords(a), g.coords(b));
    let dx = (pa[0] - pb[0]).abs().round();
    let dy = (pa[1] - pb[1]).abs().round();
    let (hi, lo) = (dx.max(dy), dx.min(dy));
    (hi - lo) + lo * std::f64::consts::SQRT_2
}

/// Minimum-cost cover by full subset enumeration.
fn brute_content(g: &SpaceGraph, targets: &[VertexId], t: f64, radii: &[f64]) -> f64 {
    let mut cands: Vec<(u32, f64)> = Vec::new();
    for &c in targets {
        for &r in radii {
            let mut mask = 0u32;
            for (j, &a) in targets.iter().enumerate() {
                if octile(g, c, a) < r {
                    mask |= 1 << j;
                }
            }
            let members = (0..g.len()).filter(|&v| octile(g, c, v) < r).count();
            cands.push((mask, members as f64 / r.powf(t)));
        }
    }
    let full = (1u32 << targets.len()) - 1;
    let mut best = f64::INFINITY;
    for subset in 0u32..(1 << cands.len()) {
        let mut cover = 0;
        let mut cost = 0.0;
        for (i, &(m, c)) in cands.iter().enumerate() {
            if subset >> i & 1 == 1 {
                cover |= m;
                cost += c;
            }
        }
        if cover == full && cost < best {
            best = cost;
        }
    }
    best
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_exact = 0.0f64;
    let mut worst_greedy = 0.0f64;
    let mut sandwich = true;
    for _ in 0..50 {
        let g = SpaceGraph::build_grid(
            &Mask::new(rng.random_range(3..8), rng.random_range(3..8), true),
            1.0,
            &WeightFn::default(),
        )
        .unwrap();
        let n = rng.random_range(1..=4usize);
        let all: Vec<VertexId> = (0..g.len()).collect();
        let mut targets: Vec<VertexId> = all.choose_multiple(&mut rng, n).copied().collect();
        targets.sort_unstable();
        let t = rng.random_range(0.0..2.0);
        let cap = [1.0, 2.0, 4.0][rng.random_range(0..3)];
        let radii = dyadic_radii(1.0, cap);
        let q = ContentQuery::dyadic(targets.clone(), t, cap, 1.0);
        let exact = content_exact_small(&g, &q).unwrap().value;
        let upper = content_upper(&g, &q).unwrap().value;
        let lower = content_lower_frostman(&g, &q).unwrap().value;
        let oracle = brute_content(&g, &targets, t, &radii);
        worst_exact = worst_exact.max((exact - oracle).abs() / oracle);
        worst_greedy = worst_greedy.max(upper / (exact * (1.0 + (n as f64).ln())));
        let tol = 1e-12 * exact;
        sandwich &= lower <= exact + tol && exact <= upper + tol;
    }
    (
        worst_exact <= 1e-12 && worst_greedy <= 1.0 + 1e-12 && sandwich,
        format!(
            "exact vs enumeration {worst_exact:.1e}, greedy/((1+ln|A|) exact) <= {worst_greedy:.3}, sandwich {sandwich}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let a = run_suite("co-dim-change", SuiteOptions::default()).unwrap();
    let b = run_suite("scale-change", SuiteOptions::default()).unwrap();
    let min_margin = a
        .cases
        .iter()
        .map(|c| c.value)
        .fold(f64::INFINITY, f64::min);
    let spread = b.cases.last().map(|c| c.value).unwrap_or(f64::NAN);
    (
        a.ok && a.cases.len() == 100 && b.ok,
        format!(
            "100 scaling instances, min margin {min_margin:.3e}; scale-change C spread {spread:.3}"
        ),
    )
}

/// Dense reference solve of the weighted Laplacian with the plates fixed.
fn dense_harmonic(g: &SpaceGraph, p: &CondenserProblem) -> Vec<(VertexId, f64)> {
    let support = g.ball_members(&p.ball);
    let mut fixed = vec![None; g.len()];
    for &v in &p.e {
        fixed[v] = Some(1.0);
    }
    for &v in &p.f {
        fixed[v] = Some(0.0);
    }
    let free: Vec<VertexId> = support
        .iter()
        .copied()
        .filter(|&v| fixed[v].is_none())
        .collect();
    let mut idx = vec![usize::MAX; g.len()];
    for (i, &v) in free.iter().enumerate() {
        idx[v] = i;
    }
    let mut in_ball = vec![false; g.len()];
    for &v in &support {
        in_ball[v] = true;
    }
    let n = free.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (i, &v) in free.iter().enumerate() {
        for (y, d) in g.neighbors(v) {
            if !in_ball[y] {
                continue;
            }
            let w = (g.mass(v) + g.mass(y)) / (d * d);
            a[(i, i)] += w;
            match fixed[y] {
                Some(val) => b[i] += w * val,
                None => a[(i, idx[y])] -= w,
            }
        }
    }
    let x = a.lu().solve(&b).expect("nonsingular");
    free.iter().copied().zip(x.iter().copied()).collect()
}

/// Plates are the first and last columns. Uniform weights make the exact
/// potential constant on every column, so vertical edges are exact ties.
fn column_condenser(g: &SpaceGraph, w: usize, h: usize, q: f64) -> CondenserProblem {
    CondenserProblem {
        ball: Ball::new(0, 4.0 * (w + h) as f64),
        e: (0..g.len()).filter(|&v| g.coords(v)[0] < 0.5).collect(),
        f: (0..g.len())
            .filter(|&v| g.coords(v)[0] > w as f64 - 1.5)
            .collect(),
        q,
    }
}

fn solve(g: &SpaceGraph, p: &CondenserProblem) -> vistrace::energy::EnergySolution {
    match minimize_energy(g, p) {
        Err(vistrace::Error::NonConvergence { best, .. }) => *best,
        r => r.unwrap(),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_dense = 0.0f64;
    let mut worst_generic = 0.0f64;
    let mut worst_tied = 0.0f64;
    for i in 0..8 {
        let (w, h) = (rng.random_range(10..45), rng.random_range(10..45));
        let generic = i % 2 == 1;
        let weight = if generic {
            WeightFn::RadialPower {
                center: [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
                exponent: rng.random_range(-0.5..1.0),
                offset: 1.0,
            }
        } else {
            WeightFn::default()
        };
        let g = SpaceGraph::build_grid(&Mask::new(w, h, true), 1.0, &weight).unwrap();
        assert!(g.len() <= 2000);
        for q in [2.0, 1.5, 3.0] {
            let p = column_condenser(&g, w, h, q);
            let sol = solve(&g, &p);
            if q == 2.0 {
                let pot = sol.potential(&g);
                for (v, x) in dense_harmonic(&g, &p) {
                    worst_dense =
                        worst_dense.max((pot[v].unwrap() - x).abs() / x.abs().max(1e-300));
                }
            } else if generic {
                worst_generic = worst_generic.max(sol.residual);
            } else {
                worst_tied = worst_tied.max(sol.residual);
            }
        }
    }
    let mut cs = Vec::new();
    for cells in [32, 64] {
        let (g, p) = half_annuli_condenser(cells, 1.5).unwrap();
        let sol = solve(&g, &p);
        let content = |set: &[VertexId]| {
            content_lower_frostman(&g, &ContentQuery::dyadic(set.to_vec(), 1.0, 1.0, g.h()))
                .unwrap()
                .value
        };
        cs.push(verify_loewner(&g, &p, &sol, 1.0, content(&p.e), content(&p.f)).empirical_c);
    }
    let spread = cs[0].max(cs[1]) / cs[0].min(cs[1]);
    (
        worst_dense <= 1e-8 && worst_generic < 1e-8 && spread <= 2.0,
        format!(
            "q=2 vs dense {worst_dense:.1e}, residual q in {{1.5,3}} {worst_generic:.1e} \
             (tied uniform grids {worst_tied:.1e}), Loewner C {:.4} -> {:.4}",
            cs[0], cs[1]
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut msgs = Vec::new();
    let mut ok = true;
    let z0s = [
        Z0Choice::default(),
        Z0Choice::Coords([0.15, 0.1]),
        Z0Choice::Coords([-0.2, -0.05]),
    ];
    for (coarse, fine) in [
        (
            DomainSpec::Disk { cells: 125 },
            DomainSpec::Disk { cells: 250 },
        ),
        (
            DomainSpec::Comb {
                cells: 168,
                teeth: 8,
            },
            DomainSpec::Comb {
                cells: 336,
                teeth: 8,
            },
        ),
    ] {
        let name = coarse.name();
        let mut c1s = Vec::new();
        let mut c0_min = f64::INFINITY;
        for spec in [coarse, fine] {
            let dd = domain(spec.clone());
            for z0 in &z0s {
                let cfg = PipelineConfig {
                    domain: spec.clone(),
                    t: 1.0,
                    p: 1.5,
                    z0: z0.clone(),
                    ..Default::default()
                };
                let z = select_z0(&cfg, &dd).unwrap();
                c0_min = c0_min.min(sample_lower_content(&cfg, &dd, z).unwrap().c0);
                let opts = GenerationOptions {
                    eta: cfg.eta,
                    depth: cfg.depth,
                    ..Default::default()
                };
                let t = build_generations(&dd, z, opts).unwrap();
                let m = frostman_weights(&t).unwrap();
                c1s.push(content_bound_constant(&cfg, &dd, &t, &m).unwrap().c1);
            }
        }
        let lo = c1s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c1s.iter().copied().fold(0.0, f64::max);
        ok &= c0_min > 0.0 && lo > 0.0 && hi / lo < 4.0;
        msgs.push(format!(
            "{name}: c0 >= {c0_min:.3}, c1 in [{lo:.3}, {hi:.3}], spread {:.2}",
            hi / lo
        ));
    }
    (ok, msgs.join("; "))
}

fn criterion_9() -> Outcome {
    let mut runs = Vec::new();
    for cells in [70, 140] {
        let rep = run_pipeline(&PipelineConfig {
            domain: DomainSpec::Disk { cells },
            ..Default::default()
        })
        .unwrap();
        runs.push(rep.stages.trace.ok().cloned().expect("trace stage"));
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (a, b) in runs[0].entries.iter().zip(&runs[1].entries) {
        let (Some(ra), Some(rb)) = (&a.report, &b.report) else {
            ok = false;
            notes.push(format!("{} failed", a.function));
            continue;
        };
        let finite = [ra.ratio_energy, ra.ratio_lq, rb.ratio_energy, rb.ratio_lq]
            .iter()
            .all(|x| x.is_finite());
        let hom = a
            .homogeneity_error
            .unwrap()
            .max(b.homogeneity_error.unwrap());
        ok &= finite && hom <= 1e-12;
        if a.function.starts_with("constant") {
            ok &=
                ra.besov_q == 0.0 && ra.energy_d == 0.0 && rb.besov_q == 0.0 && rb.energy_d == 0.0;
            continue;
        }
        if a.function.starts_with("d_omega") {
            // the trace vanishes: both ratios are at round-off level
            let tiny = ra.ratio_energy.max(rb.ratio_energy) < 1e-6;
            ok &= tiny;
            notes.push(format!(
                "{} ~0 ({:.1e})",
                a.function,
                ra.ratio_energy.max(rb.ratio_energy)
            ));
        } else {
            let s = ra.ratio_energy.max(rb.ratio_energy) / ra.ratio_energy.min(rb.ratio_energy);
            ok &= s <= 4.0;
            notes.push(format!("{} x{s:.2}", a.function));
        }
    }
    (ok, format!("refinement 70 -> 140: {}", notes.join(", ")))
}

fn geodesic_from_deepest(dd: &DomainDecomp) -> Vec<f64> {
    let g = dd.space();
    let sp = g.shortest_paths_within(&[dd.deepest()], |v| dd.is_interior(v), f64::INFINITY);
    sp.dist
        .iter()
        .map(|&d| if d.is_finite() { d } else { 0.0 })
        .collect()
}

fn nearest_boundary_to(dd: &DomainDecomp, p: [f64; 2]) -> VertexId {
    let g = dd.space();
    let d = |v: VertexId| {
        let c = g.coords(v);
        (c[0] - p[0]).hypot(c[1] - p[1])
    };
    *dd.boundary()
        .iter()
        .min_by(|&&a, &&b| d(a).total_cmp(&d(b)))
        .unwrap()
}

fn criterion_10() -> Outcome {
    let outer_pts: Vec<[f64; 2]> = (0..8)
        .map(|k| {
            let t = k as f64 * std::f64::consts::FRAC_PI_4 + 0.1;
            [t.cos(), t.sin()]
        })
        .collect();
    let mut gaps: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut visible_outer = 0;
    for cells in [168, 336] {
        let dd = domain(DomainSpec::Comb { cells, teeth: 8 });
        let g = dd.space();
        let h = g.h();
        let tooth_pts: Vec<[f64; 2]> = comb_arcs(8)
            .iter()
            .map(|a| {
                let mid = 0.5 * (a.alpha + a.beta);
                let r = a.radius - 3.0 * h;
                [r * mid.cos(), r * mid.sin()]
            })
            .collect();
        for c in [2.0, 8.0, 32.0] {
            visible_outer += visible_boundary(&dd, dd.deepest(), c)
                .unwrap()
                .iter()
                .filter(|&&v| {
                    let p = g.coords(v);
                    p[0].hypot(p[1]) > 1.0 - 2.0 * h
                })
                .count();
        }
        let u = geodesic_from_deepest(&dd);
        let radii: Vec<f64> = (0..4).rev().map(|j| 2.0 * h * 2f64.powi(j)).collect();
        let gap = |pts: &[[f64; 2]]| -> Vec<f64> {
            let support: Vec<VertexId> = pts.iter().map(|&p| nearest_boundary_to(&dd, p)).collect();
            trace_values(&dd, &u, &support, &radii).unwrap().gaps
        };
        gaps.push((gap(&outer_pts), gap(&tooth_pts)));
    }
    let ratios =
        |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| y / x).collect() };
    let outer = ratios(&gaps[0].0, &gaps[1].0);
    let tooth = ratios(&gaps[0].1, &gaps[1].1);
    let outer_stuck = outer.iter().filter(|&&r| r >= 1.0).count();
    let tooth_shrink = tooth.iter().filter(|&&r| r < 1.0).count();
    let worst_tooth = tooth.iter().copied().fold(0.0, f64::max);
    (
        visible_outer == 0 && outer_stuck == outer.len() && tooth_shrink == tooth.len(),
        format!(
            "visible outer-circle vertices {visible_outer}; outer gaps not shrinking {outer_stuck}/{}; \
             tooth gaps shrinking {tooth_shrink}/{} (worst ratio {worst_tooth:.2})",
            outer.len(),
            tooth.len()
        ),
    )
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    for (id, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = f();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (ok, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known, see README)",
            (true, true) => "PASS (listed as known failure)",
        };
        println!("criterion {id:>2}: {tag} [{secs:.1}s] {detail}");
        if ok == known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria with unexpected outcome");
        std::process::exit(1);
    }
}
