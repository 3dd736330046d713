//! Upper gradients, traces on boundary atoms, Besov seminorms and the two
//! trace estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{john_subdomain, DomainDecomp};
use crate::error::{Error, Result};
use crate::space::{SpaceGraph, VertexId};

/// A function on `Ω` together with its minimal upper gradient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevFunction {
    /// Per-vertex values; only interior vertices are read.
    pub values: Vec<f64>,
    /// `g_u`, zero off the interior.
    pub gradient: Vec<f64>,
    pub q: f64,
    /// `Σ_Ω g_u^q μ`
    pub energy: f64,
}

impl SobolevFunction {
    pub fn new(dd: &DomainDecomp, values: Vec<f64>, q: f64) -> Result<Self> {
        let g = dd.space();
        if values.len() != g.len() {
            return Err(Error::InvalidInput(format!(
                "function has {} values for {} vertices",
                values.len(),
                g.len()
            )));
        }
        if let Some(&v) = dd.interior().iter().find(|&&v| !values[v].is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at vertex {v}"
            )));
        }
        let gradient = minimal_upper_gradient(dd, &values);
        let energy = dd
            .interior()
            .iter()
            .map(|&v| gradient[v].powf(q) * g.mass(v))
            .sum();
        Ok(Self {
            values,
            gradient,
            q,
            energy,
        })
    }

    /// `Σ_{set} g_u^q μ`
    pub fn energy_on(&self, g: &SpaceGraph, set: &[VertexId]) -> f64 {
        set.iter()
            .map(|&v| self.gradient[v].powf(self.q) * g.mass(v))
            .sum()
    }

    pub fn scaled(&self, dd: &DomainDecomp, a: f64) -> Result<Self> {
        Self::new(dd, self.values.iter().map(|x| a * x).collect(), self.q)
    }
}

/// `g_u(x) = max_y |u(x) - u(y)| / d(x, y)` over interior neighbors `y` of an
/// interior vertex `x`.
pub fn minimal_upper_gradient(dd: &DomainDecomp, u: &[f64]) -> Vec<f64> {
    let g = dd.space();
    let mut out = vec![0.0; g.len()];
    for &x in dd.interior() {
        out[x] = g
            .neighbors(x)
            .filter(|&(y, _)| dd.is_interior(y))
            .map(|(y, len)| (u[x] - u[y]).abs() / len)
            .fold(0.0, f64::max);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceValues {
    pub support: Vec<VertexId>,
    /// Decreasing radii used for the averages.
    pub radii: Vec<f64>,
    /// `Tu(z)`: average over `B(z, r_min) ∩ Ω`.
    pub values: Vec<f64>,
    /// Averages per support vertex, aligned with `radii`.
    pub averages: Vec<Vec<f64>>,
    /// Largest gap between averages at consecutive radii.
    pub gaps: Vec<f64>,
}

impl TraceValues {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Solid averages of `u` over `B(z, r) ∩ Ω` for every support vertex and radius.
pub fn trace_values(
    dd: &DomainDecomp,
    u: &[f64],
    support: &[VertexId],
    radii: &[f64],
) -> Result<TraceValues> {
    let g = dd.space();
    if radii.is_empty() {
        return Err(Error::InvalidInput(
            "trace needs at least one radius".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::InvalidInput(
            "trace radii must be positive and decreasing".into(),
        ));
    }
    let r_max = radii[0];
    let rows: Vec<Result<Vec<f64>>> = support
        .par_iter()
        .map_init(
            || g.searcher(),
            |s, &z| {
                let near = s.within(z, r_max);
                let mut sums = vec![(0.0, 0.0); radii.len()];
                for &(v, d) in near {
                    if !dd.is_interior(v) {
                        continue;
                    }
                    let m = g.mass(v);
                    for (j, &r) in radii.iter().enumerate() {
                        if d >= r {
                            break;
                        }
                        sums[j].0 += m * u[v];
                        sums[j].1 += m;
                    }
                }
                sums.iter()
                    .zip(radii)
                    .map(|(&(num, den), &r)| {
                        if den > 0.0 {
                            Ok(num / den)
                        } else {
                            Err(Error::IsolatedBoundaryPoint {
                                vertex: z,
                                radius: r,
                            })
                        }
                    })
                    .collect()
            },
        )
        .collect();
    let averages = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let values = averages.iter().map(|a| *a.last().unwrap()).collect();
    let gaps = averages
        .iter()
        .map(|a| {
            a.windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(TraceValues {
        support: support.to_vec(),
        radii: radii.to_vec(),
        values,
        averages,
        gaps,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BesovParams {
    /// Smoothness `θ = 1 - p/q`.
    pub theta: f64,
    pub q: f64,
    /// Ball dilation in the kernel `ν(B(z, S d(y, z)))`.
    pub s: f64,
}

impl BesovParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Self::with_dilation(1.0 - p / q, q, 2.0)
    }

    pub fn with_dilation(theta: f64, q: f64, s: f64) -> Result<Self> {
        let mut errs = Vec::new();
        if !(theta > 0.0 && theta < 1.0) {
            errs.push(format!("theta must lie in (0, 1), got {theta}"));
        }
        if !(q >= 1.0) {
            errs.push(format!("q must be at least 1, got {q}"));
        }
        if !(s >= 1.0) {
            errs.push(format!("S must be at least 1, got {s}"));
        }
        if errs.is_empty() {
            Ok(Self { theta, q, s })
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }
}

/// Pairwise graph distances between atoms.
pub fn atom_distances(g: &SpaceGraph, atoms: &[VertexId]) -> Vec<Vec<f64>> {
    atoms
        .par_iter()
        .map(|&a| {
            let sp = g.shortest_paths_within(&[a], |_| true, f64::INFINITY);
            atoms.iter().map(|&b| sp.dist[b]).collect()
        })
        .collect()
}

/// Merge atoms sitting on the same vertex and drop zero weights.
fn merge_atoms(
    atoms: &[(VertexId, f64)],
    values: &[f64],
) -> Result<(Vec<VertexId>, Vec<f64>, Vec<f64>)> {
    if atoms.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} trace values for {} atoms",
            values.len(),
            atoms.len()
        )));
    }
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by_key(|&i| atoms[i].0);
    let (mut vs, mut ws, mut ts) = (Vec::new(), Vec::new(), Vec::new());
    for i in idx {
        let (v, w) = atoms[i];
        if w <= 0.0 {
            continue;
        }
        if vs.last() == Some(&v) {
            if *ts.last().unwrap() != values[i] {
                return Err(Error::InvalidInput(format!(
                    "two trace values at vertex {v}"
                )));
            }
            *ws.last_mut().unwrap() += w;
        } else {
            vs.push(v);
            ws.push(w);
            ts.push(values[i]);
        }
    }
    Ok((vs, ws, ts))
}

/// `Σ_{y ≠ z} ν(y) ν(z) |Tu(y) - Tu(z)|^q / (d(y,z)^{θq} ν(B̄(z, S d(y,z))))`.
///
/// `atoms[i]` carries the trace value `tu[i]`. Balls in the kernel are
/// closed and counted over atoms only.
pub fn besov_seminorm(
    g: &SpaceGraph,
    atoms: &[(VertexId, f64)],
    tu: &[f64],
    params: BesovParams,
) -> Result<f64> {
    let (vs, ws, ts) = merge_atoms(atoms, tu)?;
    let dist = atom_distances(g, &vs);
    Ok(besov_from_distances(&dist, &ws, &ts, params))
}

/// The double sum on a precomputed distance matrix.
pub fn besov_from_distances(
    dist: &[Vec<f64>],
    weights: &[f64],
    tu: &[f64],
    params: BesovParams,
) -> f64 {
    let n = weights.len();
    let tq = params.theta * params.q;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|z| {
            let mut acc = 0.0;
            for y in 0..n {
                if y == z || tu[y] == tu[z] {
                    continue;
                }
                let d = dist[z][y];
                let reach = params.s * d;
                let ball: f64 = (0..n)
                    .filter(|&a| dist[z][a] <= reach * (1.0 + 1e-12))
                    .map(|a| weights[a])
                    .sum();
                acc += weights[y] * weights[z] * (tu[y] - tu[z]).abs().powf(params.q)
                    / (d.powf(tq) * ball);
            }
            acc
        })
        .collect();
    // ordered reduction keeps the sum bit-stable across thread counts
    rows.iter().sum()
}

/// `M_Ω(χ_D f)(w)`: the largest average of `χ_D f` over `B ∩ Ω` among balls
/// `B` with center in `Ω̄`, radius in `radii`, containing `w`. The singleton
/// ball `{w}` is always included.
pub fn restricted_maximal(
    dd: &DomainDecomp,
    f: &[f64],
    window: &[VertexId],
    radii: &[f64],
) -> Vec<f64> {
    let g = dd.space();
    let mut chi_f = vec![0.0; g.len()];
    for &v in window {
        if dd.is_interior(v) {
            chi_f[v] = f[v];
        }
    }
    let mut out: Vec<f64> = (0..g.len())
        .map(|v| {
            if dd.is_interior(v) {
                chi_f[v]
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let centers: Vec<VertexId> = dd.interior().iter().chain(dd.boundary()).copied().collect();
    for &r in radii {
        let avgs: Vec<(VertexId, f64)> = centers
            .par_iter()
            .map_init(
                || g.searcher(),
                |s, &x| {
                    let (mut num, mut den) = (0.0, 0.0);
                    for &(v, d) in s.within(x, r) {
                        if d < r && dd.is_interior(v) {
                            num += chi_f[v] * g.mass(v);
                            den += g.mass(v);
                        }
                    }
                    (
                        x,
                        if den > 0.0 {
                            num / den
                        } else {
                            f64::NEG_INFINITY
                        },
                    )
                },
            )
            .collect();
        let mut s = g.searcher();
        for (x, a) in avgs {
            if a == f64::NEG_INFINITY {
                continue;
            }
            for &(w, d) in s.within(x, r) {
                if d < r && a > out[w] {
                    out[w] = a;
                }
            }
        }
    }
    for v in out.iter_mut() {
        if *v == f64::NEG_INFINITY {
            *v = 0.0;
        }
    }
    out
}

/// Exponents and the constants derived from the John constant `c`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceParams {
    pub p: f64,
    pub q: f64,
    pub q_hat: f64,
    pub c: f64,
    /// `β₀` with `p < q(1 - β₀)`.
    pub beta0: f64,
    /// `ε` with `p + ε < q`.
    pub eps: f64,
    /// `τ = 2c + 1`
    pub tau: f64,
    /// `α = 2 - 1/(2c)`
    pub alpha: f64,
}

impl TraceParams {
    pub fn new(p: f64, q: f64, q_hat: f64, c: f64) -> Result<Self> {
        let mut errs = Vec::new();
        if !(p > 1.0 && p < q_hat && q_hat < q) {
            errs.push(format!(
                "need 1 < p < q_hat < q, got p={p}, q_hat={q_hat}, q={q}"
            ));
        }
        if !(c > 1.0) {
            errs.push(format!("John constant must exceed 1, got {c}"));
        }
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        Ok(Self {
            p,
            q,
            q_hat,
            c,
            beta0: 0.5 * (1.0 - p / q),
            eps: 0.5 * (q - p),
            tau: 2.0 * c + 1.0,
            alpha: 2.0 - 1.0 / (2.0 * c),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Decreasing radii for the trace averages.
    pub radii: Vec<f64>,
    /// Also evaluate the energy of `(g_u^q̂ + M_Ω(χ_D g_u^q̂))^{1/q̂}`.
    pub proof_mode: bool,
    /// Radii for the maximal function in proof mode.
    pub maximal_radii: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceReport {
    pub params: TraceParams,
    pub z0: VertexId,
    pub d_omega_z0: f64,
    /// `(atom, Tu, ν)`
    pub atoms: Vec<(VertexId, f64, f64)>,
    pub max_gap: f64,
    /// `‖Tu‖^q` in `B^{1-p/q}_{q,q,2}`.
    pub besov_q: f64,
    /// `Σ_{D(z0)} g_u^q μ` with `D(z0) = B(z0, 10c d_Ω(z0)) ∩ Ω`.
    pub energy_d: f64,
    pub d_size: usize,
    /// `‖Tu‖^q_{L^q(ν)}`
    pub lq_norm_q: f64,
    /// `‖u‖^q_{L^q(Ω_{z0}(c))}`
    pub lq_domain_q: f64,
    /// `d_Ω(z0)^{-p} ‖u‖^q + d_Ω(z0)^{q-p} Σ_D g_u^q μ`
    pub lq_rhs: f64,
    pub ratio_energy: f64,
    pub ratio_lq: f64,
    /// `B* = B(z0, d_Ω(z0)/2)`: radius and `μ(B* ∩ Ω)`.
    pub b_star: (f64, f64),
    /// Energy of the auxiliary gradient, in proof mode.
    pub proof_energy: Option<f64>,
}

/// `lhs / rhs` with `0/0 = 0`; a positive numerator over zero is an error.
fn guarded_ratio(lhs: f64, rhs: f64, what: &str) -> Result<f64> {
    if rhs > 0.0 {
        Ok(lhs / rhs)
    } else if lhs == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::InvalidInput(format!(
            "{what}: positive left side {lhs} over zero right side"
        )))
    }
}

/// Both trace estimates for `u` against the measure `atoms` (vertex, weight).
pub fn verify_trace_energy(
    dd: &DomainDecomp,
    z0: VertexId,
    u: &SobolevFunction,
    params: TraceParams,
    atoms: &[(VertexId, f64)],
    opts: &TraceOptions,
) -> Result<TraceReport> {
    let g = dd.space();
    if !dd.is_interior(z0) {
        return Err(Error::CenterOutside { vertex: z0 });
    }
    if (u.q - params.q).abs() > 0.0 {
        return Err(Error::InvalidInput(format!(
            "function energy exponent {} differs from q = {}",
            u.q, params.q
        )));
    }
    let support: Vec<VertexId> = atoms.iter().map(|a| a.0).collect();
    let tv = trace_values(dd, &u.values, &support, &opts.radii)?;
    let (vs, ws, ts) = merge_atoms(atoms, &tv.values)?;
    let dist = atom_distances(g, &vs);
    let besov_q = besov_from_distances(&dist, &ws, &ts, BesovParams::new(params.p, params.q)?);

    let dz = dd.d_omega(z0);
    let mut s = g.searcher();
    let d_set: Vec<VertexId> = {
        let rad = 10.0 * params.c * dz;
        let mut v: Vec<VertexId> = s
            .within(z0, rad)
            .iter()
            .filter(|&&(v, d)| d < rad && dd.is_interior(v))
            .map(|&(v, _)| v)
            .collect();
        v.sort_unstable();
        v
    };
    let energy_d = u.energy_on(g, &d_set);
    let ratio_energy = guarded_ratio(besov_q, energy_d, "trace energy")?;

    let lq_norm_q: f64 = ws
        .iter()
        .zip(&ts)
        .map(|(w, t)| w * t.abs().powf(params.q))
        .sum();
    let sub = john_subdomain(dd, z0, params.c)?;
    let lq_domain_q: f64 = sub
        .members()
        .iter()
        .map(|&v| u.values[v].abs().powf(params.q) * g.mass(v))
        .sum();
    let lq_rhs = dz.powf(-params.p) * lq_domain_q + dz.powf(params.q - params.p) * energy_d;
    let ratio_lq = guarded_ratio(lq_norm_q, lq_rhs, "trace L^q")?;

    let b_star_mass = dd.interior_mass(&crate::space::Ball::new(z0, dz / 2.0));
    let proof_energy = if opts.proof_mode {
        let gq: Vec<f64> = u.gradient.iter().map(|x| x.powf(params.q_hat)).collect();
        let m = restricted_maximal(dd, &gq, &d_set, &opts.maximal_radii);
        Some(
            d_set
                .iter()
                .map(|&v| (gq[v] + m[v]).powf(params.q / params.q_hat) * g.mass(v))
                .sum(),
        )
    } else {
        None
    };
    Ok(TraceReport {
        params,
        z0,
        d_omega_z0: dz,
        atoms: atoms
            .iter()
            .zip(&tv.values)
            .map(|(&(v, w), &t)| (v, t, w))
            .collect(),
        max_gap: tv.max_gap(),
        besov_q,
        energy_d,
        d_size: d_set.len(),
        lq_norm_q,
        lq_domain_q,
        lq_rhs,
        ratio_energy,
        ratio_lq,
        b_star: (dz / 2.0, b_star_mass),
        proof_energy,
    })
}

/// Test functions for the trace stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TestFunction {
    Constant {
        value: f64,
    },
    /// Coordinate `x_{axis+1}`.
    Coordinate {
        axis: usize,
    },
    /// `d_Ω^β`
    DistancePower {
        beta: f64,
    },
    /// Condenser potential in the whole space with plates `x₁ ≤ -plate` and
    /// `x₁ ≥ plate` (relative to `z0`).
    Potential {
        q: f64,
        plate: f64,
    },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            Self::Constant { value } => format!("constant({value})"),
            Self::Coordinate { axis } => format!("x{}", axis + 1),
            Self::DistancePower { beta } => format!("d_omega^{beta}"),
            Self::Potential { q, plate } => format!("potential(q={q}, plate={plate})"),
        }
    }

    /// The default suite: constants, both coordinates, `d_Ω^{1/2}`, `d_Ω`
    /// and a 2-energy potential.
    pub fn suite() -> Vec<Self> {
        vec![
            Self::Constant { value: 1.0 },
            Self::Coordinate { axis: 0 },
            Self::Coordinate { axis: 1 },
            Self::DistancePower { beta: 0.5 },
            Self::DistancePower { beta: 1.0 },
            Self::Potential { q: 2.0, plate: 0.5 },
        ]
    }

    pub fn eval(&self, dd: &DomainDecomp, z0: VertexId) -> Result<Vec<f64>> {
        let g = dd.space();
        let n = g.len();
        Ok(match *self {
            Self::Constant { value } => vec![value; n],
            Self::Coordinate { axis } => {
                if axis > 1 {
                    return Err(Error::InvalidInput(format!(
                        "coordinate axis {axis} out of range"
                    )));
                }
                (0..n).map(|v| g.coords(v)[axis]).collect()
            }
            Self::DistancePower { beta } => {
                dd.d_omega_field().iter().map(|d| d.powf(beta)).collect()
            }
            Self::Potential { q, plate } => {
                let x0 = g.coords(z0)[0];
                let e: Vec<VertexId> = (0..n).filter(|&v| g.coords(v)[0] - x0 <= -plate).collect();
                let f: Vec<VertexId> = (0..n).filter(|&v| g.coords(v)[0] - x0 >= plate).collect();
                let ball = crate::space::Ball::new(z0, 2.0 * g.diameter_bound());
                let sol = crate::energy::minimize_energy(
                    g,
                    &crate::energy::CondenserProblem { ball, e, f, q },
                )?;
                sol.potential(g)
                    .into_iter()
                    .map(|x| x.unwrap_or(0.0))
                    .collect()
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareSample {
    pub center: VertexId,
    pub radius: f64,
    /// `⨍|u - u_B| / (r (⨍ g^q̂)^{1/q̂})` over `B ∩ Ω`; absent when `g` vanishes on `B`.
    pub quotient: Option<f64>,
}

/// Discrete `q̂`-Poincaré quotients on `B ∩ Ω` for the sampled balls.
pub fn poincare_quotients(
    dd: &DomainDecomp,
    u: &SobolevFunction,
    q_hat: f64,
    balls: &[(VertexId, f64)],
) -> Vec<PoincareSample> {
    let g = dd.space();
    let mut s = g.searcher();
    balls
        .iter()
        .map(|&(c, r)| {
            let members: Vec<VertexId> = s
                .within(c, r)
                .iter()
                .filter(|&&(v, d)| d < r && dd.is_interior(v))
                .map(|&(v, _)| v)
                .collect();
            let m: f64 = members.iter().map(|&v| g.mass(v)).sum();
            let quotient = (m > 0.0)
                .then(|| {
                    let mean = members
                        .iter()
                        .map(|&v| u.values[v] * g.mass(v))
                        .sum::<f64>()
                        / m;
                    let osc = members
                        .iter()
                        .map(|&v| (u.values[v] - mean).abs() * g.mass(v))
                        .sum::<f64>()
                        / m;
                    let grad = (members
                        .iter()
                        .map(|&v| u.gradient[v].powf(q_hat) * g.mass(v))
                        .sum::<f64>()
                        / m)
                        .powf(1.0 / q_hat);
                    (grad > 0.0).then(|| osc / (r * grad))
                })
                .flatten();
            PoincareSample {
                center: c,
                radius: r,
                quotient,
            }
        })
        .collect()
}
