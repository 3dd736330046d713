//! Property suites behind `verify <lemma-id>`. Each suite runs a small,
//! seeded batch of instances and reports one line per case.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::content::{
    content_lower_frostman, dyadic_radii, verify_content_scaling, verify_scale_change, ContentQuery,
};
use crate::energy::{minimize_energy, verify_ball_counting, verify_loewner, CondenserProblem};
use crate::error::{Error, Result};
use crate::frostman::well_placed_family;
use crate::generators::{generate_domain, DomainSpec};
use crate::pipeline::run_pipeline;
use crate::space::{Ball, Mask, SpaceGraph, VertexId, WeightFn};

pub const LEMMAS: [&str; 8] = [
    "co-dim-change",
    "scale-change",
    "loewner",
    "not-counting",
    "telescoping",
    "frostman-bound",
    "trace-energy",
    "lq-estimate",
];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Cells per unit for the domain-based suites.
    pub cells: usize,
    /// Random instances for the combinatorial suites.
    pub instances: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            cells: 48,
            instances: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    pub ok: bool,
    pub value: f64,
    pub detail: String,
}

impl Case {
    fn new(name: impl Into<String>, ok: bool, value: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ok,
            value,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub lemma: String,
    pub cases: Vec<Case>,
    pub ok: bool,
}

pub fn run_suite(id: &str, opts: SuiteOptions) -> Result<SuiteReport> {
    let cases = match id {
        "co-dim-change" => co_dim_change(opts)?,
        "scale-change" => scale_change(opts)?,
        "loewner" => loewner(opts)?,
        "not-counting" => not_counting(opts)?,
        "telescoping" => telescoping(opts)?,
        "frostman-bound" => frostman_bound(opts)?,
        "trace-energy" => trace_suite(opts, false)?,
        "lq-estimate" => trace_suite(opts, true)?,
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown lemma '{id}', expected one of {}",
                LEMMAS.join(", ")
            )))
        }
    };
    Ok(SuiteReport {
        lemma: id.to_string(),
        ok: cases.iter().all(|c| c.ok),
        cases,
    })
}

fn unit_grid(w: usize, h: usize) -> Result<SpaceGraph> {
    SpaceGraph::build_grid(&Mask::new(w, h, true), 1.0, &WeightFn::default())
}

/// Random small grids and target sets, small enough for exact contents.
fn co_dim_change(opts: SuiteOptions) -> Result<Vec<Case>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();
    for i in 0..opts.instances {
        let g = unit_grid(rng.random_range(3..8), rng.random_range(3..8))?;
        let n = rng.random_range(1..=5usize).min(g.len());
        let all: Vec<VertexId> = (0..g.len()).collect();
        let mut targets: Vec<VertexId> = all.choose_multiple(&mut rng, n).copied().collect();
        targets.sort_unstable();
        let t = rng.random_range(0.0..2.0);
        let tau = t + rng.random_range(0.0..1.5);
        let rho = [1.0, 2.0, 4.0][rng.random_range(0..3)];
        let rep = verify_content_scaling(&g, &targets, t, tau, rho, &dyadic_radii(1.0, rho))?;
        let tol = 1e-12 * rep.lhs.abs().max(rep.rhs.abs()).max(1.0);
        out.push(Case::new(
            format!("instance {i}"),
            rep.exact && rep.margin >= -tol,
            rep.margin,
            format!(
                "t={t:.3} tau={tau:.3} rho={rho} lhs={:.6e} rhs={:.6e}",
                rep.lhs, rep.rhs
            ),
        ));
    }
    Ok(out)
}

/// Maximal `α`-net of `targets`, greedy by vertex id.
fn net_cover(g: &SpaceGraph, targets: &[VertexId], alpha: f64) -> Vec<Ball> {
    let mut near = vec![false; g.len()];
    let mut s = g.searcher();
    let mut out = Vec::new();
    for &v in targets {
        if near[v] {
            continue;
        }
        out.push(Ball::new(v, alpha));
        for &(y, d) in s.within(v, alpha) {
            if d < alpha {
                near[y] = true;
            }
        }
    }
    out
}

/// A union of random disks on a 128x128 unit grid, covered at `α = 32` and
/// refined to `ρ = α/2, α/4, α/8`. The constants must be finite and within a
/// factor 2.
fn scale_change(opts: SuiteOptions) -> Result<Vec<Case>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let g = unit_grid(128, 128)?;
    let disks: Vec<([f64; 2], f64)> = (0..6)
        .map(|_| {
            let c = [rng.random_range(32.0..96.0), rng.random_range(32.0..96.0)];
            (c, rng.random_range(10.0..24.0))
        })
        .collect();
    let targets: Vec<VertexId> = (0..g.len())
        .filter(|&v| {
            let p = g.coords(v);
            disks
                .iter()
                .any(|(c, r)| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) < r * r)
        })
        .collect();
    let alpha = 32.0;
    let t = 1.0;
    let cover = net_cover(&g, &targets, alpha);
    let mut out = Vec::new();
    let mut cs = Vec::new();
    for k in [2.0, 4.0, 8.0] {
        let rep = verify_scale_change(&g, &targets, t, alpha, alpha / k, &cover)?;
        cs.push(rep.empirical_c);
        out.push(Case::new(
            format!("alpha/rho = {k}"),
            rep.empirical_c.is_finite() && rep.empirical_c > 0.0,
            rep.empirical_c,
            format!(
                "coarse={:.4e} refined={:.4e} balls={}",
                rep.coarse_sum, rep.refined_sum, rep.refined_balls
            ),
        ));
    }
    let spread = spread(&cs);
    out.push(Case::new(
        "stable within x2",
        spread <= 2.0,
        spread,
        "max C / min C",
    ));
    Ok(out)
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Plates `{1/4 ≤ |x| ≤ 3/4, ±x₁ ≥ 1/4}` in the unit ball of a full square grid.
pub fn half_annuli_condenser(cells: usize, q: f64) -> Result<(SpaceGraph, CondenserProblem)> {
    let gen = generate_domain(&DomainSpec::Disk { cells })?;
    let dd = gen.build(&WeightFn::default())?;
    let g = dd.space().clone();
    let o = g.nearest_vertex([0.0, 0.0]);
    let ball = Ball::new(o, 1.0);
    let members = g.ball_members(&ball);
    let plate = |sign: f64| -> Vec<VertexId> {
        members
            .iter()
            .copied()
            .filter(|&v| {
                let p = g.coords(v);
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                (0.25..=0.75).contains(&r) && sign * p[0] >= 0.25
            })
            .collect()
    };
    let (e, f) = (plate(-1.0), plate(1.0));
    Ok((g, CondenserProblem { ball, e, f, q }))
}

/// Empirical Loewner constant on the half-annuli condenser for `t = 1`,
/// `q ∈ {1.5, 2}`, at `cells` and `2 cells`.
fn loewner(opts: SuiteOptions) -> Result<Vec<Case>> {
    let t = 1.0;
    let mut out = Vec::new();
    for q in [1.5, 2.0] {
        let mut cs = Vec::new();
        for cells in [opts.cells, 2 * opts.cells] {
            let (g, p) = half_annuli_condenser(cells, q)?;
            let sol = match minimize_energy(&g, &p) {
                Err(Error::NonConvergence { best, .. }) => *best,
                r => r?,
            };
            let content = |set: &[VertexId]| -> Result<f64> {
                let query = ContentQuery::dyadic(set.to_vec(), t, p.ball.radius, g.h());
                Ok(content_lower_frostman(&g, &query)?.value)
            };
            let rep = verify_loewner(&g, &p, &sol, t, content(&p.e)?, content(&p.f)?);
            cs.push(rep.empirical_c);
            out.push(Case::new(
                format!("q={q} cells={cells}"),
                rep.empirical_c.is_finite() && rep.empirical_c > 0.0,
                rep.empirical_c,
                format!(
                    "energy={:.6e} lambda={:.4e} residual={:.1e}",
                    rep.energy, rep.lambda, sol.residual
                ),
            ));
        }
        let s = spread(&cs);
        out.push(Case::new(
            format!("q={q} refinement within x2"),
            s <= 2.0,
            s,
            "max C / min C",
        ));
    }
    Ok(out)
}

/// Empirical `K_0` on the disk for decreasing `η`, and the isolated point of
/// the punctured disk, which admits no family.
fn not_counting(opts: SuiteOptions) -> Result<Vec<Case>> {
    let PipelineConfig { p, q, .. } = PipelineConfig::default();
    let dd =
        generate_domain(&DomainSpec::Disk { cells: opts.cells })?.build(&WeightFn::default())?;
    let z = dd.deepest();
    let w = dd.nearest_boundary(z);
    let r = dd.d_omega(z);
    let mut out = Vec::new();
    for eta in [0.25, 0.125, 0.0625] {
        let b = eta * r;
        let fam = well_placed_family(&dd, w, 2.0 * r, b, Ball::new(z, b));
        let case =
            match fam.and_then(|f| verify_ball_counting(dd.space(), w, z, r, eta, q, &f.balls)) {
                Ok(rep) => Case::new(
                    format!("eta={eta}"),
                    rep.empirical_k0.is_finite(),
                    rep.empirical_k0,
                    format!(
                        "family={} strict_eta={} 1/K0={:.3e} eta^(p-q)={:.3e}",
                        rep.family_size,
                        rep.strict_eta,
                        1.0 / rep.empirical_k0,
                        eta.powf(p - q)
                    ),
                ),
                Err(e) => Case::new(format!("eta={eta}"), false, f64::NAN, e.to_string()),
            };
        out.push(case);
    }
    let pd = generate_domain(&DomainSpec::PuncturedDisk { cells: opts.cells })?
        .build(&WeightFn::default())?;
    let g = pd.space();
    let hole = pd.nearest_boundary(g.nearest_vertex([0.0, 0.0]));
    let z = pd.deepest();
    let b = 0.125 * pd.d_omega(z);
    let err = well_placed_family(&pd, hole, 4.0 * g.h(), 2.0 * g.h(), Ball::new(z, b))
        .and_then(|f| verify_ball_counting(g, hole, z, pd.d_omega(z), 0.125, q, &f.balls));
    out.push(Case::new(
        "punctured disk centre",
        matches!(err, Err(Error::NoWellPlacedBalls)),
        0.0,
        match err {
            Ok(r) => format!("unexpected family of {}", r.family_size),
            Err(e) => e.to_string(),
        },
    ));
    Ok(out)
}

fn disk_config(opts: SuiteOptions) -> PipelineConfig {
    PipelineConfig {
        domain: DomainSpec::Disk { cells: opts.cells },
        seed: opts.seed,
        ..Default::default()
    }
}

fn telescoping(opts: SuiteOptions) -> Result<Vec<Case>> {
    let mut out = Vec::new();
    for spec in [
        DomainSpec::Disk { cells: opts.cells },
        DomainSpec::SlitDisk { cells: opts.cells },
    ] {
        let name = spec.name();
        let rep = run_pipeline(&PipelineConfig {
            domain: spec,
            ..disk_config(opts)
        })?;
        match rep.stages.frostman.ok() {
            Some(f) => out.extend(f.telescoping.iter().map(|t| {
                Case::new(
                    format!("{name} k1={} k2={}", t.k1, t.k2),
                    t.ok,
                    t.max_error,
                    format!("{} points", t.checked),
                )
            })),
            None => out.push(Case::new(
                name,
                false,
                f64::NAN,
                stage_error(&rep.stages.frostman.error),
            )),
        }
    }
    Ok(out)
}

fn stage_error(e: &Option<String>) -> String {
    e.clone().unwrap_or_else(|| "skipped".into())
}

fn frostman_bound(opts: SuiteOptions) -> Result<Vec<Case>> {
    let mut out = Vec::new();
    for eta in [0.25, 0.125] {
        let rep = run_pipeline(&PipelineConfig {
            eta,
            ..disk_config(opts)
        })?;
        match rep.stages.frostman.ok() {
            Some(f) => out.push(Case::new(
                format!("disk eta={eta}"),
                f.c2.is_finite() && f.c2 > 0.0,
                f.c2,
                format!("samples={} witness={:?}", f.bound.samples, f.bound.witness),
            )),
            None => out.push(Case::new(
                format!("disk eta={eta}"),
                false,
                f64::NAN,
                stage_error(&rep.stages.frostman.error),
            )),
        }
    }
    Ok(out)
}

/// Finite ratios on the default test-function suite, constants annihilated,
/// and invariance under `u ↦ 2u`.
fn trace_suite(opts: SuiteOptions, lq: bool) -> Result<Vec<Case>> {
    let rep = run_pipeline(&disk_config(opts))?;
    let Some(tr) = rep.stages.trace.ok() else {
        return Ok(vec![Case::new(
            "trace stage",
            false,
            f64::NAN,
            stage_error(&rep.stages.trace.error),
        )]);
    };
    let mut out = Vec::new();
    for e in &tr.entries {
        let Some(r) = &e.report else {
            out.push(Case::new(
                &e.function,
                false,
                f64::NAN,
                e.error.clone().unwrap_or_default(),
            ));
            continue;
        };
        let ratio = if lq { r.ratio_lq } else { r.ratio_energy };
        let hom = e.homogeneity_error.unwrap_or(f64::INFINITY);
        let mut ok = ratio.is_finite() && hom <= 1e-9;
        if e.function.starts_with("constant") && !lq {
            ok &= r.besov_q == 0.0;
        }
        out.push(Case::new(
            &e.function,
            ok,
            ratio,
            format!("homogeneity={hom:.1e} max_gap={:.3e}", r.max_gap),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_lemma() {
        assert!(run_suite("nope", SuiteOptions::default()).is_err());
    }

    #[test]
    fn co_dim_change_small() {
        let rep = run_suite(
            "co-dim-change",
            SuiteOptions {
                instances: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.ok, "{:?}", rep.cases);
        assert_eq!(rep.cases.len(), 10);
    }
}
