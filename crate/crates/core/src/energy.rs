//! Discrete q-energy of condensers.
//!
//! The minimised functional is the edge-sum relaxation
//! `Σ_{xy} w_xy |u(x) - u(y)|^q` with `w_xy = (μ(x) + μ(y)) / d(x,y)^q`,
//! which dominates the max-form energy `Σ_x (Lip u)(x)^q μ(x)`. Both are
//! reported.

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Ball, SpaceGraph, VertexId};

/// `(Lip u)(x) = max_{y ~ x} |u(x) - u(y)| / d(x, y)`.
pub fn discrete_lip(g: &SpaceGraph, u: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|x| {
            g.neighbors(x)
                .map(|(y, len)| (u[x] - u[y]).abs() / len)
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondenserProblem {
    pub ball: Ball,
    pub e: Vec<VertexId>,
    pub f: Vec<VertexId>,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergySolution {
    /// Vertices of the ambient ball, sorted.
    pub support: Vec<VertexId>,
    /// Potential on `support`, aligned by index.
    pub u: Vec<f64>,
    /// `Σ (Lip u)^q μ` with `Lip` taken inside the ball.
    pub energy: f64,
    /// Minimised edge-sum relaxation.
    pub edge_energy: f64,
    pub iterations: usize,
    /// Scaled first-order residual `max |∂E/∂u_x| / max_x Σ_y q w_xy |Δ|^{q-1}` over free vertices.
    pub residual: f64,
}

impl EnergySolution {
    /// Potential spread over the whole graph, `None` outside the ball.
    pub fn potential(&self, g: &SpaceGraph) -> Vec<Option<f64>> {
        let mut out = vec![None; g.len()];
        for (&v, &val) in self.support.iter().zip(&self.u) {
            out[v] = Some(val);
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// IRLS relaxation, used when `q > 2`.
    pub damping: f64,
    /// Regularisation of `|Δ|^{q-2}` in the IRLS and Newton weights.
    pub epsilon: f64,
    pub energy_tol: f64,
    pub residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            damping: 0.5,
            epsilon: 1e-28,
            energy_tol: 1e-10,
            residual_tol: 1e-10,
        }
    }
}

struct Local {
    support: Vec<VertexId>,
    /// local index -> Some(free index)
    free: Vec<Option<usize>>,
    n_free: usize,
    /// local edges (a, b, d, w) with a < b
    edges: Vec<(usize, usize, f64, f64)>,
    mass: Vec<f64>,
}

fn localize(g: &SpaceGraph, p: &CondenserProblem) -> Result<(Local, Vec<f64>)> {
    if p.e.is_empty() || p.f.is_empty() {
        return Err(Error::InvalidInput(
            "condenser plates must be nonempty".into(),
        ));
    }
    if !(p.q > 1.0) {
        return Err(Error::InvalidInput(format!("q must exceed 1, got {}", p.q)));
    }
    let support = g.ball_members(&p.ball);
    let mut local = vec![usize::MAX; g.len()];
    for (i, &v) in support.iter().enumerate() {
        local[v] = i;
    }
    let mut u = vec![0.5; support.len()];
    let mut fixed = vec![false; support.len()];
    for (plate, val) in [(&p.e, 1.0), (&p.f, 0.0)] {
        for &v in plate.iter() {
            let i = *local
                .get(v)
                .filter(|&&i| i != usize::MAX)
                .ok_or_else(|| Error::InvalidInput(format!("plate vertex {v} outside the ball")))?;
            if fixed[i] && u[i] != val {
                return Err(Error::InvalidInput(format!(
                    "plates intersect at vertex {v}"
                )));
            }
            fixed[i] = true;
            u[i] = val;
        }
    }
    let mut free = vec![None; support.len()];
    let mut n_free = 0;
    for i in 0..support.len() {
        if !fixed[i] {
            free[i] = Some(n_free);
            n_free += 1;
        }
    }
    let mut edges = Vec::new();
    for (i, &v) in support.iter().enumerate() {
        for (y, d) in g.neighbors(v) {
            let j = local[y];
            if j != usize::MAX && i < j {
                let w = (g.mass(v) + g.mass(y)) / d.powf(p.q);
                edges.push((i, j, d, w));
            }
        }
    }
    let mass = support.iter().map(|&v| g.mass(v)).collect();
    Ok((
        Local {
            support,
            free,
            n_free,
            edges,
            mass,
        },
        u,
    ))
}

impl Local {
    fn edge_energy(&self, u: &[f64], q: f64) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b, _, w)| w * (u[a] - u[b]).abs().powf(q))
            .sum()
    }

    fn max_energy(&self, u: &[f64], q: f64) -> f64 {
        let mut lip = vec![0.0f64; u.len()];
        for &(a, b, d, _) in &self.edges {
            let s = (u[a] - u[b]).abs() / d;
            lip[a] = lip[a].max(s);
            lip[b] = lip[b].max(s);
        }
        lip.iter().zip(&self.mass).map(|(l, m)| l.powf(q) * m).sum()
    }

    /// Gradient on free vertices and the normalised residual.
    fn gradient(&self, u: &[f64], q: f64) -> (Vec<f64>, f64) {
        let mut grad = vec![0.0; self.n_free];
        let mut scale = vec![0.0; self.n_free];
        for &(a, b, _, w) in &self.edges {
            let delta = u[a] - u[b];
            let mag = q * w * delta.abs().powf(q - 1.0);
            let gval = mag * delta.signum();
            if let Some(i) = self.free[a] {
                grad[i] += gval;
                scale[i] += mag;
            }
            if let Some(j) = self.free[b] {
                grad[j] -= gval;
                scale[j] += mag;
            }
        }
        let gmax = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let smax = scale.iter().fold(0.0f64, |m, x| m.max(*x));
        let res = if smax > 0.0 { gmax / smax } else { gmax };
        (grad, res)
    }

    /// Solve the weighted Laplacian system `Σ_y c_xy (u_x - u_y) = rhs_x` on free
    /// vertices, fixed values taken from `u`. Returns the free values.
    fn weighted_solve(
        &self,
        u: &[f64],
        coef: &[f64],
        extra_rhs: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let n = self.n_free;
        let mut coo = CooMatrix::new(n, n);
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        if let Some(extra) = extra_rhs {
            rhs.copy_from_slice(extra);
        }
        for (k, &(a, b, _, _)) in self.edges.iter().enumerate() {
            let c = coef[k];
            match (self.free[a], self.free[b]) {
                (Some(i), Some(j)) => {
                    diag[i] += c;
                    diag[j] += c;
                    coo.push(i, j, -c);
                    coo.push(j, i, -c);
                }
                (Some(i), None) => {
                    diag[i] += c;
                    rhs[i] += c * u[b];
                }
                (None, Some(j)) => {
                    diag[j] += c;
                    rhs[j] += c * u[a];
                }
                (None, None) => {}
            }
        }
        for (i, d) in diag.iter().enumerate() {
            // isolated free vertices are pinned to their current value
            if *d > 0.0 {
                coo.push(i, i, *d);
            } else {
                coo.push(i, i, 1.0);
            }
        }
        let csc = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&csc)
            .map_err(|e| Error::InvalidInput(format!("singular condenser system: {e}")))?;
        let sol = chol.solve(&DMatrix::from_column_slice(n, 1, &rhs));
        Ok(sol.column(0).iter().copied().collect())
    }

    /// Nonlinear Gauss-Seidel: each free vertex in turn moves to the exact
    /// minimiser of its local energy. Lands on ties `u_x = u_y` exactly,
    /// which the linearised steps only reach up to round-off.
    fn relax_sweeps(&self, u: &mut [f64], q: f64, sweeps: usize, tol: f64) -> f64 {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); u.len()];
        for &(a, b, _, w) in &self.edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let slope = |x: f64, nb: &[(usize, f64)], u: &[f64]| -> f64 {
            nb.iter()
                .map(|&(y, w)| {
                    let d = x - u[y];
                    w * d.abs().powf(q - 1.0) * d.signum()
                })
                .sum()
        };
        let mut residual = self.gradient(u, q).1;
        let mut best = (residual, u.to_vec());
        let mut stale = 0;
        for _ in 0..sweeps {
            if best.0 <= tol || stale >= 10 {
                break;
            }
            for i in 0..u.len() {
                if self.free[i].is_none() || adj[i].is_empty() {
                    continue;
                }
                let nb = &adj[i];
                let (mut lo, mut hi) = nb
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(y, _)| {
                        (l.min(u[y]), h.max(u[y]))
                    });
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slope(mid, nb, u) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let mut best = (slope(u[i], nb, u).abs(), u[i]);
                for x in nb
                    .iter()
                    .map(|&(y, _)| u[y])
                    .filter(|&x| x >= lo && x <= hi)
                    .chain([lo, hi])
                {
                    let g = slope(x, nb, u).abs();
                    if g < best.0 {
                        best = (g, x);
                    }
                }
                u[i] = best.1;
            }
            residual = self.gradient(u, q).1;
            if residual < best.0 {
                best = (residual, u.to_vec());
                stale = 0;
            } else {
                stale += 1;
            }
        }
        u.copy_from_slice(&best.1);
        best.0
    }

    fn scatter(&self, u: &mut [f64], free_vals: &[f64]) {
        for (i, f) in self.free.iter().enumerate() {
            if let Some(k) = f {
                u[i] = free_vals[*k];
            }
        }
    }
}

/// Minimise the edge-sum q-energy with `u = 1` on `E` and `u = 0` on `F`.
pub fn minimize_energy(g: &SpaceGraph, p: &CondenserProblem) -> Result<EnergySolution> {
    minimize_energy_with(g, p, SolverOptions::default())
}

pub fn minimize_energy_with(
    g: &SpaceGraph,
    p: &CondenserProblem,
    opts: SolverOptions,
) -> Result<EnergySolution> {
    let (loc, mut u) = localize(g, p)?;
    let q = p.q;
    let finish = |loc: &Local, mut u: Vec<f64>, iterations: usize| {
        for x in u.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let (_, residual) = loc.gradient(&u, q);
        EnergySolution {
            energy: loc.max_energy(&u, q),
            edge_energy: loc.edge_energy(&u, q),
            support: loc.support.clone(),
            u,
            iterations,
            residual,
        }
    };
    if loc.n_free == 0 {
        return Ok(finish(&loc, u, 0));
    }
    let w: Vec<f64> = loc.edges.iter().map(|e| e.3).collect();
    // harmonic start; exact when q = 2
    let sol = loc.weighted_solve(&u, &w, None)?;
    loc.scatter(&mut u, &sol);
    if q == 2.0 {
        return Ok(finish(&loc, u, 1));
    }
    let mut iterations = 1;
    let mut energy = loc.edge_energy(&u, q);
    // IRLS; for q < 2 each step minimises a majorant, so it runs undamped
    let damping = if q < 2.0 { 1.0 } else { opts.damping };
    while iterations < opts.max_iterations {
        iterations += 1;
        let coef: Vec<f64> = loc
            .edges
            .iter()
            .map(|&(a, b, _, wt)| {
                let d2 = (u[a] - u[b]).powi(2);
                wt * (d2 + opts.epsilon).powf((q - 2.0) / 2.0)
            })
            .collect();
        let sol = loc.weighted_solve(&u, &coef, None)?;
        for (i, f) in loc.free.iter().enumerate() {
            if let Some(k) = f {
                u[i] += damping * (sol[*k] - u[i]);
            }
        }
        let next = loc.edge_energy(&u, q);
        let change = (energy - next).abs() / next.max(f64::MIN_POSITIVE);
        energy = next;
        if change < opts.energy_tol {
            break;
        }
    }
    // Newton polish with backtracking line search
    let mut residual = loc.gradient(&u, q).1;
    let mut floor = residual;
    let mut stale = 0;
    while residual > opts.residual_tol && iterations < opts.max_iterations {
        iterations += 1;
        let (grad, _) = loc.gradient(&u, q);
        let hess: Vec<f64> = loc
            .edges
            .iter()
            .map(|&(a, b, _, wt)| {
                let d2 = (u[a] - u[b]).powi(2);
                q * (q - 1.0) * wt * (d2 + opts.epsilon).powf((q - 2.0) / 2.0)
            })
            .collect();
        // Solve H δ = -grad with fixed values treated as zero increments.
        let zeros = vec![0.0; u.len()];
        let neg: Vec<f64> = grad.iter().map(|x| -x).collect();
        let delta = loc.weighted_solve(&zeros, &hess, Some(&neg))?;
        let mut step = 1.0;
        let base = loc.edge_energy(&u, q);
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = u.clone();
            for (i, f) in loc.free.iter().enumerate() {
                if let Some(k) = f {
                    trial[i] += step * delta[*k];
                }
            }
            let e = loc.edge_energy(&trial, q);
            if e <= base {
                u = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        let next = loc.gradient(&u, q).1;
        if !accepted || next >= residual && step < 1e-6 {
            residual = next;
            break;
        }
        // stop once the residual sits at its round-off floor
        if next < 0.5 * floor {
            floor = next;
            stale = 0;
        } else {
            stale += 1;
            if stale >= 8 {
                residual = next;
                break;
            }
        }
        residual = next;
    }
    if q < 2.0 && residual > opts.residual_tol {
        residual = loc.relax_sweeps(&mut u, q, 50, opts.residual_tol);
    }
    if residual > opts.residual_tol.max(1e-8) && iterations >= opts.max_iterations {
        return Err(Error::NonConvergence {
            iterations,
            residual,
            best: Box::new(finish(&loc, u, iterations)),
        });
    }
    Ok(finish(&loc, u, iterations))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoewnerReport {
    pub energy: f64,
    pub ball_mass: f64,
    pub radius: f64,
    pub q: f64,
    pub t: f64,
    pub content_e: f64,
    pub content_f: f64,
    /// `min(content_e, content_f) * r^t / μ(B)`.
    pub lambda: f64,
    /// Smallest `C` with `energy >= λ μ(B) / (C r^q)`.
    pub empirical_c: f64,
}

/// Capacity lower bound in terms of plate contents. `content_e`, `content_f`
/// are `t`-codimensional contents at scale `r` (any valid estimate of the same kind).
pub fn verify_loewner(
    g: &SpaceGraph,
    p: &CondenserProblem,
    sol: &EnergySolution,
    t: f64,
    content_e: f64,
    content_f: f64,
) -> LoewnerReport {
    let r = p.ball.radius;
    let ball_mass = g.ball_mass(&p.ball);
    let lambda = content_e.min(content_f) * r.powf(t) / ball_mass;
    let empirical_c = if sol.energy > 0.0 {
        lambda * ball_mass / (sol.energy * r.powf(p.q))
    } else {
        f64::INFINITY
    };
    LoewnerReport {
        energy: sol.energy,
        ball_mass,
        radius: r,
        q: p.q,
        t,
        content_e,
        content_f,
        lambda,
        empirical_c,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallCountingReport {
    pub boundary_point: VertexId,
    pub center: VertexId,
    pub radius: f64,
    pub eta: f64,
    pub q: f64,
    pub family_size: usize,
    /// `η^q μ(B(z, r))`
    pub lhs: f64,
    /// `Σ μ(B_i)`
    pub family_mass: f64,
    /// `lhs / family_mass`
    pub empirical_k0: f64,
    /// Whether `η` honours the strict-mode threshold `η < 1/168`.
    pub strict_eta: bool,
}

/// Compare `η^q μ(B(z, r))` with the total mass of a well-placed family of
/// radius-`ηr` balls.
pub fn verify_ball_counting(
    g: &SpaceGraph,
    w: VertexId,
    z: VertexId,
    r: f64,
    eta: f64,
    q: f64,
    family: &[Ball],
) -> Result<BallCountingReport> {
    if family.is_empty() {
        return Err(Error::NoWellPlacedBalls);
    }
    let lhs = eta.powf(q) * g.ball_mass(&Ball::new(z, r));
    let family_mass: f64 = family.iter().map(|b| g.ball_mass(b)).sum();
    Ok(BallCountingReport {
        boundary_point: w,
        center: z,
        radius: r,
        eta,
        q,
        family_size: family.len(),
        lhs,
        family_mass,
        empirical_k0: lhs / family_mass,
        strict_eta: eta < 1.0 / 168.0,
    })
}
