//! End-to-end run: space, domain, sampled lower content, generations,
//! Frostman measure, John curves, the concluding content bound and traces.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, Z0Choice};
use crate::content::{
    content_lower_from_measure, content_lower_frostman, ContentQuery, EstimateKind,
};
use crate::domain::{visible_boundary_localized, DomainDecomp};
use crate::error::{Error, Result};
use crate::frostman::{
    build_generations, chain_bound, frostman_weights, john_curve_from_generation,
    verify_frostman_bound, verify_separation, verify_telescoping, ChainBound, FrostmanBoundReport,
    FrostmanMeasure, GenerationOptions, GenerationTree, SeparationReport, TelescopingReport,
    TreeFlags,
};
use crate::generators::generate_domain;
use crate::space::{Ball, DoublingEstimate, VertexId};
use crate::trace::{
    poincare_quotients, verify_trace_energy, PoincareSample, SobolevFunction, TraceOptions,
    TraceParams, TraceReport,
};

pub const EMPIRICAL_LABEL: &str = "empirical lower-constant over sampled scales";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage<T> {
    pub status: StageStatus,
    pub error: Option<String>,
    pub error_tag: Option<String>,
    pub output: Option<T>,
}

impl<T> Stage<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Self {
                status: StageStatus::Ok,
                error: None,
                error_tag: None,
                output: Some(v),
            },
            Err(e) => Self {
                status: StageStatus::Failed,
                error: Some(e.to_string()),
                error_tag: Some(e.tag().to_string()),
                output: None,
            },
        }
    }

    fn skipped(reason: &str) -> Self {
        Self {
            status: StageStatus::Skipped,
            error: Some(reason.to_string()),
            error_tag: None,
            output: None,
        }
    }

    pub fn ok(&self) -> Option<&T> {
        self.output.as_ref()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub vertices: usize,
    pub discarded: usize,
    pub h: f64,
    pub total_mass: f64,
    pub grid: Option<(usize, usize)>,
    pub doubling: DoublingEstimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub interior: usize,
    pub boundary: usize,
    pub interior_mass: f64,
    pub z0: VertexId,
    pub z0_coords: [f64; 2],
    pub d_omega_z0: f64,
    /// Diagnostic only: doubling ratio of `μ|_Ω`.
    pub restricted_doubling: DoublingEstimate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerContentSample {
    pub w: VertexId,
    pub rho: f64,
    pub targets: usize,
    pub content_lower: f64,
    pub kind: EstimateKind,
    pub ball_mass: f64,
    /// `content_lower ρ^t / μ(B(w, ρ))`
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerContentReport {
    pub t: f64,
    pub label: String,
    pub c0: f64,
    pub witness: Option<(VertexId, f64)>,
    pub samples: Vec<LowerContentSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub r: f64,
    pub eta: f64,
    pub w0: VertexId,
    pub sizes: Vec<usize>,
    pub radii: Vec<f64>,
    pub flags: TreeFlags,
    /// Generation points `(vertex, center)` per level.
    pub points: Vec<Vec<(VertexId, VertexId)>>,
    pub separation: SeparationReport,
    pub chain: ChainBound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrostmanSummary {
    pub measure: FrostmanMeasure,
    pub bound: FrostmanBoundReport,
    /// Empirical growth constant `c₂`.
    pub c2: f64,
    pub telescoping: Vec<TelescopingReport>,
    pub telescoping_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSummary {
    pub level: usize,
    pub index: usize,
    pub vertex: VertexId,
    pub length: f64,
    pub worst_ratio: f64,
    pub john_ok: bool,
    pub cone_size: usize,
    pub cone_c: f64,
    pub cone_ok: bool,
    pub chain_depth_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnSummary {
    pub m: usize,
    /// `4M`
    pub curve_c: f64,
    pub curves: Vec<CurveSummary>,
    pub all_ok: bool,
    /// Visible boundary in `B(z0, 3 d_Ω(z0))` at the configured `c`.
    pub visible_c: f64,
    pub visible_count: usize,
    /// Deepest-level points that are visible at `c = 4M`.
    pub atoms_visible: usize,
    pub atoms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentBoundReport {
    pub p: f64,
    pub label: String,
    pub z0: VertexId,
    pub scale: f64,
    pub targets: usize,
    /// `μ(B(z0, d_Ω(z0))) / d_Ω(z0)^p`
    pub reference: f64,
    /// Content lower bound certified by the Frostman measure.
    pub content_frostman: f64,
    /// Best packing lower bound on the same targets.
    pub content_packing: f64,
    pub kind_packing: EstimateKind,
    pub c1: f64,
    pub c1_packing: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEntry {
    pub function: String,
    pub report: Option<TraceReport>,
    pub error: Option<String>,
    /// `max |ratio(2u) - ratio(u)| / max(ratio(u), tiny)` over both ratios.
    pub homogeneity_error: Option<f64>,
    pub poincare: Vec<PoincareSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStage {
    pub params: TraceParams,
    pub radii: Vec<f64>,
    pub entries: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stages {
    pub space: Stage<SpaceSummary>,
    pub decomposition: Stage<DecompositionSummary>,
    pub lower_content: Stage<LowerContentReport>,
    pub generations: Stage<GenerationSummary>,
    pub frostman: Stage<FrostmanSummary>,
    pub john: Stage<JohnSummary>,
    pub content_bound: Stage<ContentBoundReport>,
    pub trace: Stage<TraceStage>,
}

#[derive(Debug, Clone, Default)]
pub struct PlotBundle {
    /// `(level, vertex, x, y, weight)`
    pub points: Vec<(usize, VertexId, f64, f64, f64)>,
    /// `(curve, vertex, x, y)` in curve order.
    pub curves: Vec<(usize, VertexId, f64, f64)>,
    /// `(function, vertex, x, y, value)` for potentials on `Ω`.
    pub potentials: Vec<(String, VertexId, f64, f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: PipelineConfig,
    pub stages: Stages,
    /// Seconds per stage, kept out of the deterministic JSON.
    #[serde(skip)]
    pub wall_clock: BTreeMap<String, f64>,
    #[serde(skip)]
    pub plot: PlotBundle,
}

struct Timer {
    times: BTreeMap<String, f64>,
}

impl Timer {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.times
            .insert(name.to_string(), t.elapsed().as_secs_f64());
        out
    }
}

fn doubling_samples(dd: &DomainDecomp, interior_only: bool) -> Vec<(VertexId, f64)> {
    let g = dd.space();
    let pool: Vec<VertexId> = if interior_only {
        dd.interior().to_vec()
    } else {
        (0..g.len()).collect()
    };
    let step = (pool.len() / 16).max(1);
    let mut radii = Vec::new();
    let mut r = 4.0 * g.h();
    while r <= 0.25 * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    if radii.is_empty() {
        radii.push(4.0 * g.h());
    }
    pool.iter()
        .step_by(step)
        .flat_map(|&v| radii.iter().map(move |&r| (v, r)))
        .collect()
}

/// Resolve the configured `z0` on a decomposed domain.
pub fn select_z0(cfg: &PipelineConfig, dd: &DomainDecomp) -> Result<VertexId> {
    match cfg.z0 {
        Z0Choice::Auto(_) => Ok(dd.deepest()),
        Z0Choice::Coords(p) => {
            let v = dd.space().nearest_vertex(p);
            if dd.is_interior(v) {
                Ok(v)
            } else {
                Err(Error::CenterOutside { vertex: v })
            }
        }
    }
}

/// Sampled lower content assumption over seeded boundary windows.
pub fn sample_lower_content(
    cfg: &PipelineConfig,
    dd: &DomainDecomp,
    z0: VertexId,
) -> Result<LowerContentReport> {
    let g = dd.space();
    let h = g.h();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut windows: Vec<VertexId> = dd
        .boundary()
        .choose_multiple(&mut rng, cfg.radii.lower_windows)
        .copied()
        .collect();
    windows.sort_unstable();
    let mut scales = Vec::new();
    let mut rho = cfg.radii.lower_max * dd.d_omega(z0);
    for _ in 0..cfg.radii.lower_scales {
        if rho >= 4.0 * h - 1e-12 {
            scales.push(rho);
        }
        rho /= 2.0;
    }
    if scales.is_empty() {
        return Err(Error::InvalidInput(
            "no sampled scale is at least four cells".into(),
        ));
    }
    let mut s = g.searcher();
    let mut samples = Vec::new();
    for &w in &windows {
        for &rho in &scales {
            let found = s.within(w, rho);
            let mut targets: Vec<VertexId> = found
                .iter()
                .filter(|&&(v, d)| d < rho && dd.is_boundary(v))
                .map(|&(v, _)| v)
                .collect();
            targets.sort_unstable();
            let ball_mass: f64 = found
                .iter()
                .filter(|&&(_, d)| d < rho)
                .map(|&(v, _)| g.mass(v))
                .sum();
            let est =
                content_lower_frostman(g, &ContentQuery::dyadic(targets.clone(), cfg.t, rho, h))?;
            samples.push(LowerContentSample {
                w,
                rho,
                targets: targets.len(),
                content_lower: est.value,
                kind: est.kind,
                ball_mass,
                ratio: est.value * rho.powf(cfg.t) / ball_mass,
            });
        }
    }
    let (c0, witness) = samples.iter().fold((f64::INFINITY, None), |acc, s| {
        if s.ratio < acc.0 {
            (s.ratio, Some((s.w, s.rho)))
        } else {
            acc
        }
    });
    Ok(LowerContentReport {
        t: cfg.t,
        label: EMPIRICAL_LABEL.into(),
        c0,
        witness,
        samples,
    })
}

/// Frostman-certified lower content of the deepest generation near `z0`.
pub fn content_bound_constant(
    cfg: &PipelineConfig,
    dd: &DomainDecomp,
    tree: &GenerationTree,
    m: &FrostmanMeasure,
) -> Result<ContentBoundReport> {
    let g = dd.space();
    let z0 = tree.z0;
    let dz = dd.d_omega(z0);
    let mut s = g.searcher();
    let reach = 3.0 * dz;
    s.within(z0, reach);
    let mut picked: Vec<(VertexId, f64)> = m
        .atoms(tree)
        .into_iter()
        .filter(|&(v, _)| s.dist(v) < reach)
        .collect();
    picked.sort_unstable_by_key(|a| a.0);
    picked.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    let targets: Vec<VertexId> = picked.iter().map(|a| a.0).collect();
    let weights: Vec<f64> = picked.iter().map(|a| a.1).collect();
    let q = ContentQuery::dyadic(targets.clone(), cfg.p, dz, g.h());
    let fro = content_lower_from_measure(g, &q, &weights)?;
    let pack = content_lower_frostman(g, &q)?;
    let reference = g.ball_mass(&Ball::new(z0, dz)) / dz.powf(cfg.p);
    Ok(ContentBoundReport {
        p: cfg.p,
        label: EMPIRICAL_LABEL.into(),
        z0,
        scale: dz,
        targets: targets.len(),
        reference,
        content_frostman: fro.value,
        content_packing: pack.value,
        kind_packing: pack.kind,
        c1: fro.value / reference,
        c1_packing: pack.value / reference,
    })
}

fn john(
    cfg: &PipelineConfig,
    dd: &DomainDecomp,
    tree: &GenerationTree,
    chain: &ChainBound,
    plot: &mut PlotBundle,
) -> Result<JohnSummary> {
    let g = dd.space();
    let mut curves = Vec::new();
    for (n, (k, i)) in tree.all_points().enumerate() {
        let cert = john_curve_from_generation(dd, tree, k, i, chain.m)?;
        for &v in &cert.curve.path {
            let p = g.coords(v);
            plot.curves.push((n, v, p[0], p[1]));
        }
        curves.push(CurveSummary {
            level: k,
            index: i,
            vertex: tree.levels[k].points[i].vertex,
            length: cert.curve.length(),
            worst_ratio: cert.john.worst_ratio,
            john_ok: cert.john.ok,
            cone_size: cert.cone.size,
            cone_c: cert.cone.c,
            cone_ok: cert.cone.ok,
            chain_depth_margin: cert.chain_depth_margin,
        });
    }
    let extra = dd.slack().boundary_len();
    let curve_c = 4.0 * chain.m as f64;
    let vis = visible_boundary_localized(dd, tree.z0, cfg.c, extra)?;
    let vis_m = visible_boundary_localized(dd, tree.z0, curve_c, extra)?;
    let deepest = &tree.levels[tree.depth()].points;
    let atoms_visible = deepest
        .iter()
        .filter(|p| vis_m.binary_search(&p.vertex).is_ok())
        .count();
    Ok(JohnSummary {
        m: chain.m,
        curve_c,
        all_ok: curves.iter().all(|c| c.john_ok && c.cone_ok),
        curves,
        visible_c: cfg.c,
        visible_count: vis.len(),
        atoms_visible,
        atoms: deepest.len(),
    })
}

fn trace_radii(cfg: &PipelineConfig, h: f64, cap: f64) -> Vec<f64> {
    let mut radii: Vec<f64> = (0..cfg.radii.trace_scales)
        .map(|j| cfg.radii.trace_min_cells * h * 2f64.powi(j as i32))
        .filter(|&r| r <= cap)
        .collect();
    radii.reverse();
    radii
}

fn relative_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
}

fn trace(
    cfg: &PipelineConfig,
    dd: &DomainDecomp,
    tree: &GenerationTree,
    m: &FrostmanMeasure,
    plot: &mut PlotBundle,
) -> Result<TraceStage> {
    let g = dd.space();
    let z0 = tree.z0;
    let params = TraceParams::new(cfg.p, cfg.q_trace, cfg.q_hat, cfg.c)?;
    let radii = trace_radii(cfg, g.h(), dd.d_omega(z0));
    if radii.is_empty() {
        return Err(Error::InvalidInput(
            "no trace radius fits below d_omega(z0)".into(),
        ));
    }
    let opts = TraceOptions {
        radii: radii.clone(),
        proof_mode: cfg.proof_mode,
        maximal_radii: cfg.radii.maximal_cells.iter().map(|c| c * g.h()).collect(),
    };
    let atoms = m.atoms(tree);
    let dz = dd.d_omega(z0);
    let balls = [(z0, dz / 2.0), (z0, dz / 4.0)];
    let mut entries = Vec::new();
    for f in &cfg.test_functions {
        let run = || -> Result<(TraceReport, f64, Vec<PoincareSample>, Vec<f64>)> {
            let vals = f.eval(dd, z0)?;
            let u = SobolevFunction::new(dd, vals.clone(), cfg.q_trace)?;
            let rep = verify_trace_energy(dd, z0, &u, params, &atoms, &opts)?;
            let rep2 = verify_trace_energy(dd, z0, &u.scaled(dd, 2.0)?, params, &atoms, &opts)?;
            let hom = relative_change(rep.ratio_energy, rep2.ratio_energy)
                .max(relative_change(rep.ratio_lq, rep2.ratio_lq));
            let pq = poincare_quotients(dd, &u, cfg.q_hat, &balls);
            Ok((rep, hom, pq, vals))
        };
        match run() {
            Ok((rep, hom, pq, vals)) => {
                if matches!(f, crate::trace::TestFunction::Potential { .. }) {
                    for &v in dd.interior() {
                        let p = g.coords(v);
                        plot.potentials.push((f.label(), v, p[0], p[1], vals[v]));
                    }
                }
                entries.push(TraceEntry {
                    function: f.label(),
                    report: Some(rep),
                    error: None,
                    homogeneity_error: Some(hom),
                    poincare: pq,
                });
            }
            Err(e) => entries.push(TraceEntry {
                function: f.label(),
                report: None,
                error: Some(e.to_string()),
                homogeneity_error: None,
                poincare: Vec::new(),
            }),
        }
    }
    Ok(TraceStage {
        params,
        radii,
        entries,
    })
}

/// Validate, then run every stage in order. Stage failures are recorded and
/// skip the stages that depend on them; only an invalid configuration is an
/// error.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut timer = Timer {
        times: BTreeMap::new(),
    };
    let mut plot = PlotBundle::default();

    let built = timer.run("space", || -> Result<DomainDecomp> {
        let gen = generate_domain(&cfg.domain)?;
        gen.build(&cfg.weight)
    });
    let (space_stage, dd) = match built {
        Ok(dd) => {
            let g = dd.space();
            let summary = timer.run("space_doubling", || SpaceSummary {
                vertices: g.len(),
                discarded: g.discarded(),
                h: g.h(),
                total_mass: g.total_mass(),
                grid: g.grid_dims(),
                doubling: g.doubling_constant(&doubling_samples(&dd, false)),
            });
            (Stage::from_result(Ok(summary)), Some(dd))
        }
        Err(e) => (Stage::from_result(Err(e)), None),
    };

    let mut decomposition = Stage::skipped("space stage failed");
    let mut z0 = None;
    if let Some(dd) = &dd {
        let r = timer.run("decomposition", || -> Result<DecompositionSummary> {
            let v = select_z0(cfg, dd)?;
            Ok(DecompositionSummary {
                interior: dd.interior().len(),
                boundary: dd.boundary().len(),
                interior_mass: dd.interior().iter().map(|&x| dd.space().mass(x)).sum(),
                z0: v,
                z0_coords: dd.space().coords(v),
                d_omega_z0: dd.d_omega(v),
                restricted_doubling: dd.restricted_doubling(&doubling_samples(dd, true)),
            })
        });
        z0 = r.as_ref().ok().map(|s| s.z0);
        decomposition = Stage::from_result(r);
    }

    let mut lower_stage = Stage::skipped("decomposition stage failed");
    let mut generations = Stage::skipped("decomposition stage failed");
    let mut tree = None;
    if let (Some(dd), Some(z0)) = (&dd, z0) {
        lower_stage =
            Stage::from_result(timer.run("lower_content", || sample_lower_content(cfg, dd, z0)));
        let opts = GenerationOptions {
            eta: cfg.eta,
            depth: cfg.depth,
            strict: cfg.strict_mode,
            min_cells: 2.0,
        };
        let r = timer.run(
            "generations",
            || -> Result<(GenerationTree, GenerationSummary)> {
                let t = build_generations(dd, z0, opts)?;
                let summary = GenerationSummary {
                    r: t.r,
                    eta: t.eta,
                    w0: t.w0,
                    sizes: t.levels.iter().map(|l| l.points.len()).collect(),
                    radii: t.levels.iter().map(|l| l.radius).collect(),
                    flags: t.flags.clone(),
                    points: t
                        .levels
                        .iter()
                        .map(|l| l.points.iter().map(|p| (p.vertex, p.center)).collect())
                        .collect(),
                    separation: verify_separation(dd, &t),
                    chain: chain_bound(dd, &t),
                };
                Ok((t, summary))
            },
        );
        match r {
            Ok((t, s)) => {
                tree = Some((t, s.chain.clone()));
                generations = Stage::from_result(Ok(s));
            }
            Err(e) => generations = Stage::from_result(Err(e)),
        }
    }

    let mut frostman = Stage::skipped("generations stage failed");
    let mut john_stage = Stage::skipped("generations stage failed");
    let mut measure = None;
    if let (Some(dd), Some((t, chain))) = (&dd, &tree) {
        let r = timer.run("frostman", || -> Result<FrostmanSummary> {
            let m = frostman_weights(t)?;
            let bound =
                verify_frostman_bound(dd, t, &m, cfg.p, cfg.radii.frostman_extra_centers, cfg.seed);
            let mut tele = Vec::new();
            for k1 in 0..=t.depth() {
                for k2 in k1..=t.depth() {
                    tele.push(verify_telescoping(dd.space(), t, &m, k1, k2)?);
                }
            }
            Ok(FrostmanSummary {
                c2: bound.max_ratio,
                bound,
                telescoping_ok: tele.iter().all(|r| r.ok),
                telescoping: tele,
                measure: m,
            })
        });
        if let Ok(s) = &r {
            measure = Some(s.measure.clone());
            for (k, lvl) in t.levels.iter().enumerate() {
                for (i, p) in lvl.points.iter().enumerate() {
                    let c = dd.space().coords(p.vertex);
                    plot.points
                        .push((k, p.vertex, c[0], c[1], s.measure.weights[k][i]));
                }
            }
        }
        frostman = Stage::from_result(r);
        john_stage = Stage::from_result(timer.run("john", || john(cfg, dd, t, chain, &mut plot)));
    }

    let mut bound_stage = Stage::skipped("frostman stage failed");
    let mut trace_stage = Stage::skipped("frostman stage failed");
    if let (Some(dd), Some((t, _)), Some(m)) = (&dd, &tree, &measure) {
        bound_stage = Stage::from_result(
            timer.run("content_bound", || content_bound_constant(cfg, dd, t, m)),
        );
        trace_stage = Stage::from_result(timer.run("trace", || trace(cfg, dd, t, m, &mut plot)));
    }

    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        stages: Stages {
            space: space_stage,
            decomposition,
            lower_content: lower_stage,
            generations,
            frostman,
            john: john_stage,
            content_bound: bound_stage,
            trace: trace_stage,
        },
        wall_clock: timer.times,
        plot,
    })
}
