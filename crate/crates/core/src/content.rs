//! Codimensional Hausdorff content relative to a finite family of candidate
//! balls: `H^{-t}_R(A) = inf Σ μ(B_i) / r_i^t` over covers of `A` by
//! candidate balls with `r_i ≤ R`.
//!
//! Three estimators share one candidate family: a greedy cover (upper), an
//! exact branch-and-bound (small instances) and a packing certificate
//! (lower), which is any measure `ν` on `A` with `ν(B) ≤ μ(B)/r^t` for every
//! candidate `B`.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Ball, SpaceGraph, VertexId};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentQuery {
    pub targets: Vec<VertexId>,
    pub t: f64,
    pub radius_cap: f64,
    /// Candidate centers; `None` means the targets themselves.
    pub centers: Option<Vec<VertexId>>,
    /// Sorted ascending, each in `[h, radius_cap]`.
    pub radii: Vec<f64>,
}

impl ContentQuery {
    /// Radii `h 2^j ≤ R`.
    pub fn dyadic(targets: Vec<VertexId>, t: f64, radius_cap: f64, h: f64) -> Self {
        Self {
            targets,
            t,
            radius_cap,
            centers: None,
            radii: dyadic_radii(h, radius_cap),
        }
    }

    pub fn with_centers(mut self, centers: Vec<VertexId>) -> Self {
        self.centers = Some(centers);
        self
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Self {
        self.radii = radii;
        self
    }
}

pub fn dyadic_radii(h: f64, cap: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = h;
    while r <= cap * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Upper,
    Lower,
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    /// Cover certificate for upper and exact estimates.
    pub cover: Vec<Ball>,
    /// Packing certificate `(vertex, weight)` for lower estimates.
    pub dual: Vec<(VertexId, f64)>,
}

impl ContentEstimate {
    fn empty(kind: EstimateKind) -> Self {
        Self {
            value: 0.0,
            kind,
            cover: Vec::new(),
            dual: Vec::new(),
        }
    }
}

/// One candidate ball with the set of targets it covers.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub ball: Ball,
    pub cost: f64,
    /// Indices into the query's target list, ascending.
    pub covers: Vec<usize>,
}

/// Enumerate the candidate family of a query, dropping balls meeting no target.
pub fn candidates(g: &SpaceGraph, q: &ContentQuery) -> Result<Vec<Candidate>> {
    if q.radii
        .iter()
        .any(|&r| !(r > 0.0) || r > q.radius_cap * (1.0 + 1e-12))
    {
        return Err(Error::InvalidInput(
            "candidate radii must lie in (0, R]".into(),
        ));
    }
    let mut target_index = vec![usize::MAX; g.len()];
    for (i, &a) in q.targets.iter().enumerate() {
        target_index[a] = i;
    }
    let centers: Vec<VertexId> = match &q.centers {
        Some(c) => c.clone(),
        None => q.targets.clone(),
    };
    let mut radii = q.radii.clone();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let rmax = match radii.last() {
        Some(&r) => r,
        None => return Ok(Vec::new()),
    };
    let mut out = Vec::new();
    let mut s = g.searcher();
    for &c in &centers {
        let found = s.within(c, rmax);
        for &r in &radii {
            let mut mass = 0.0;
            let mut covers = Vec::new();
            for &(v, d) in found {
                if d < r {
                    mass += g.mass(v);
                    if target_index[v] != usize::MAX {
                        covers.push(target_index[v]);
                    }
                }
            }
            if covers.is_empty() {
                continue;
            }
            covers.sort_unstable();
            out.push(Candidate {
                ball: Ball::new(c, r),
                cost: mass / r.powf(q.t),
                covers,
            });
        }
    }
    Ok(out)
}

fn check_coverable(q: &ContentQuery, cands: &[Candidate]) -> Result<()> {
    let mut hit = vec![false; q.targets.len()];
    for c in cands {
        for &i in &c.covers {
            hit[i] = true;
        }
    }
    match hit.iter().position(|h| !h) {
        Some(i) => Err(Error::InsufficientCandidates {
            vertex: q.targets[i],
        }),
        None => Ok(()),
    }
}

/// Greedy weighted set cover: repeatedly take the candidate minimizing
/// cost per newly covered target, ties by larger radius then smaller center id.
pub fn content_upper(g: &SpaceGraph, q: &ContentQuery) -> Result<ContentEstimate> {
    if q.targets.is_empty() {
        return Ok(ContentEstimate::empty(EstimateKind::Upper));
    }
    let cands = candidates(g, q)?;
    check_coverable(q, &cands)?;
    Ok(greedy_cover(&cands, q.targets.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GreedyKey {
    ratio: f64,
    radius: f64,
    center: VertexId,
    index: usize,
}

impl Eq for GreedyKey {}

impl Ord for GreedyKey {
    // reversed so that BinaryHeap pops the smallest ratio, then the largest
    // radius, then the smallest center id
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.ratio
            .total_cmp(&self.ratio)
            .then(self.radius.total_cmp(&o.radius))
            .then(o.center.cmp(&self.center))
            .then(o.index.cmp(&self.index))
    }
}

impl PartialOrd for GreedyKey {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

pub(crate) fn greedy_cover(cands: &[Candidate], n_targets: usize) -> ContentEstimate {
    let key = |i: usize, gain: usize| GreedyKey {
        ratio: cands[i].cost / gain as f64,
        radius: cands[i].ball.radius,
        center: cands[i].ball.center,
        index: i,
    };
    let mut covered = vec![false; n_targets];
    let mut remaining = n_targets;
    // Lazy greedy: gains only shrink, so a popped entry whose key is still
    // current is the true minimum.
    let mut heap: std::collections::BinaryHeap<GreedyKey> = (0..cands.len())
        .map(|i| key(i, cands[i].covers.len()))
        .collect();
    let mut chosen = Vec::new();
    let mut value = 0.0;
    while remaining > 0 {
        let Some(top) = heap.pop() else { break };
        let i = top.index;
        let gain = cands[i].covers.iter().filter(|&&j| !covered[j]).count();
        if gain == 0 {
            continue;
        }
        let fresh = key(i, gain);
        if fresh != top {
            heap.push(fresh);
            continue;
        }
        for &j in &cands[i].covers {
            if !covered[j] {
                covered[j] = true;
                remaining -= 1;
            }
        }
        value += cands[i].cost;
        chosen.push(cands[i].ball);
    }
    ContentEstimate {
        value,
        kind: EstimateKind::Upper,
        cover: chosen,
        dual: Vec::new(),
    }
}

/// Size caps for the exact solver: it runs if either cap is respected.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExactCaps {
    pub max_candidates: usize,
    pub max_targets: usize,
}

impl Default for ExactCaps {
    fn default() -> Self {
        Self {
            max_candidates: 24,
            max_targets: 16,
        }
    }
}

pub fn content_exact_small(g: &SpaceGraph, q: &ContentQuery) -> Result<ContentEstimate> {
    content_exact_with_caps(g, q, ExactCaps::default())
}

pub fn content_exact_with_caps(
    g: &SpaceGraph,
    q: &ContentQuery,
    caps: ExactCaps,
) -> Result<ContentEstimate> {
    if q.targets.is_empty() {
        return Ok(ContentEstimate::empty(EstimateKind::Exact));
    }
    let cands = candidates(g, q)?;
    if cands.len() > caps.max_candidates && q.targets.len() > caps.max_targets {
        return Err(Error::InstanceTooLarge {
            candidates: cands.len(),
            targets: q.targets.len(),
        });
    }
    check_coverable(q, &cands)?;
    let (value, picks) = exact_cover(&cands, q.targets.len());
    Ok(ContentEstimate {
        value,
        kind: EstimateKind::Exact,
        cover: picks.into_iter().map(|i| cands[i].ball).collect(),
        dual: Vec::new(),
    })
}

/// Branch and bound on the uncovered target with the fewest options.
pub(crate) fn exact_cover(cands: &[Candidate], n_targets: usize) -> (f64, Vec<usize>) {
    let mut by_target: Vec<Vec<usize>> = vec![Vec::new(); n_targets];
    for (i, c) in cands.iter().enumerate() {
        for &j in &c.covers {
            by_target[j].push(i);
        }
    }
    for list in &mut by_target {
        list.sort_by(|&a, &b| cands[a].cost.total_cmp(&cands[b].cost).then(a.cmp(&b)));
    }
    // start from the greedy solution as incumbent
    let greedy = greedy_cover(cands, n_targets);
    let mut best_val = greedy.value;
    let mut best: Vec<usize> = greedy
        .cover
        .iter()
        .map(|b| {
            cands
                .iter()
                .position(|c| c.ball == *b)
                .expect("greedy picks come from the family")
        })
        .collect();
    struct Search<'a> {
        cands: &'a [Candidate],
        by_target: &'a [Vec<usize>],
        cover_count: Vec<usize>,
        stack: Vec<usize>,
    }
    fn rec(s: &mut Search, cost: f64, best_val: &mut f64, best: &mut Vec<usize>) {
        // most constrained uncovered target, and a simple lower bound
        let mut pick: Option<usize> = None;
        let mut bound = 0.0f64;
        for (j, list) in s.by_target.iter().enumerate() {
            if s.cover_count[j] > 0 {
                continue;
            }
            bound = bound.max(s.cands[list[0]].cost);
            if pick.is_none_or(|p| list.len() < s.by_target[p].len()) {
                pick = Some(j);
            }
        }
        let Some(j) = pick else {
            if cost < *best_val {
                *best_val = cost;
                *best = s.stack.clone();
            }
            return;
        };
        if cost + bound >= *best_val {
            return;
        }
        for idx in 0..s.by_target[j].len() {
            let i = s.by_target[j][idx];
            let c = s.cands[i].cost;
            if cost + c >= *best_val {
                continue;
            }
            for &k in &s.cands[i].covers {
                s.cover_count[k] += 1;
            }
            s.stack.push(i);
            rec(s, cost + c, best_val, best);
            s.stack.pop();
            for &k in &s.cands[i].covers {
                s.cover_count[k] -= 1;
            }
        }
    }
    let mut s = Search {
        cands,
        by_target: &by_target,
        cover_count: vec![0; n_targets],
        stack: Vec::new(),
    };
    rec(&mut s, 0.0, &mut best_val, &mut best);
    best.sort_unstable();
    (best_val, best)
}

/// Size caps under which the packing LP is solved exactly.
pub const LP_MAX_CANDIDATES: usize = 3000;
pub const LP_MAX_TARGETS: usize = 400;

/// Lower bound by a packing measure: the exact LP optimum on small instances,
/// otherwise a scaled `μ|_A` certificate improved by greedy water-filling.
pub fn content_lower_frostman(g: &SpaceGraph, q: &ContentQuery) -> Result<ContentEstimate> {
    if q.targets.is_empty() {
        return Ok(ContentEstimate::empty(EstimateKind::Lower));
    }
    let cands = candidates(g, q)?;
    if cands.len() <= LP_MAX_CANDIDATES && q.targets.len() <= LP_MAX_TARGETS {
        if let Some(est) = packing_lp(q, &cands) {
            return Ok(est);
        }
    }
    let seed: Vec<f64> = q.targets.iter().map(|&a| g.mass(a)).collect();
    Ok(packing_from_measure(q, &cands, &seed, true))
}

/// Lower bound certified by a given nonnegative measure on the targets
/// (aligned with `q.targets`), scaled down until every candidate constraint
/// holds. No water-filling, so the certificate is proportional to `weights`.
pub fn content_lower_from_measure(
    g: &SpaceGraph,
    q: &ContentQuery,
    weights: &[f64],
) -> Result<ContentEstimate> {
    if weights.len() != q.targets.len() {
        return Err(Error::InvalidInput(
            "one weight per target is required".into(),
        ));
    }
    if q.targets.is_empty() {
        return Ok(ContentEstimate::empty(EstimateKind::Lower));
    }
    let cands = candidates(g, q)?;
    Ok(packing_from_measure(q, &cands, weights, false))
}

fn packing_lp(q: &ContentQuery, cands: &[Candidate]) -> Option<ContentEstimate> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = q
        .targets
        .iter()
        .map(|_| lp.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    for c in cands {
        let expr: Vec<_> = c.covers.iter().map(|&j| (vars[j], 1.0)).collect();
        lp.add_constraint(&expr[..], ComparisonOp::Le, c.cost);
    }
    let sol = lp.solve().ok()?;
    let mut dual = Vec::new();
    let mut weights = vec![0.0; q.targets.len()];
    for (j, v) in vars.iter().enumerate() {
        weights[j] = sol[*v].max(0.0);
    }
    // the simplex output can overshoot a constraint by rounding; scale it back
    let scale = feasibility_scale(cands, &weights);
    let mut value = 0.0;
    for (j, w) in weights.iter().enumerate() {
        let w = w * scale;
        value += w;
        if w > 0.0 {
            dual.push((q.targets[j], w));
        }
    }
    Some(ContentEstimate {
        value,
        kind: EstimateKind::Lower,
        cover: Vec::new(),
        dual,
    })
}

fn feasibility_scale(cands: &[Candidate], weights: &[f64]) -> f64 {
    let mut scale = f64::INFINITY;
    for c in cands {
        let load: f64 = c.covers.iter().map(|&j| weights[j]).sum();
        if load > 0.0 {
            scale = scale.min(c.cost / load);
        }
    }
    if scale.is_finite() {
        scale.min(1.0)
    } else {
        1.0
    }
}

fn packing_from_measure(
    q: &ContentQuery,
    cands: &[Candidate],
    seed: &[f64],
    fill: bool,
) -> ContentEstimate {
    let mut scale = f64::INFINITY;
    for c in cands {
        let load: f64 = c.covers.iter().map(|&j| seed[j]).sum();
        if load > 0.0 {
            scale = scale.min(c.cost / load);
        }
    }
    if !scale.is_finite() {
        scale = 0.0;
    }
    let mut weights: Vec<f64> = seed.iter().map(|w| w * scale).collect();
    if fill {
        let mut slack: Vec<f64> = cands
            .iter()
            .map(|c| c.cost - c.covers.iter().map(|&j| weights[j]).sum::<f64>())
            .collect();
        let mut by_target: Vec<Vec<usize>> = vec![Vec::new(); q.targets.len()];
        for (i, c) in cands.iter().enumerate() {
            for &j in &c.covers {
                by_target[j].push(i);
            }
        }
        for j in 0..q.targets.len() {
            let room = by_target[j]
                .iter()
                .map(|&i| slack[i])
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            if room.is_finite() && room > 0.0 {
                weights[j] += room;
                for &i in &by_target[j] {
                    slack[i] -= room;
                }
            }
        }
    }
    let value = weights.iter().sum();
    ContentEstimate {
        value,
        kind: EstimateKind::Lower,
        cover: Vec::new(),
        dual: q
            .targets
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&a, &w)| (a, w))
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub t: f64,
    pub tau: f64,
    pub rho: f64,
    /// `ρ^{τ-t} H^{-τ}_ρ(A)`
    pub lhs: f64,
    /// `H^{-t}_ρ(A)`
    pub rhs: f64,
    pub margin: f64,
    pub exact: bool,
}

/// Exponent change: `ρ^{τ-t} H^{-τ}_ρ(A) ≥ H^{-t}_ρ(A)` for `τ ≥ t`. Exact
/// contents when the instance is small, otherwise `upper_τ` against `lower_t`.
pub fn verify_content_scaling(
    g: &SpaceGraph,
    targets: &[VertexId],
    t: f64,
    tau: f64,
    rho: f64,
    radii: &[f64],
) -> Result<ScalingReport> {
    if tau < t {
        return Err(Error::InvalidInput(format!(
            "need tau >= t, got {tau} < {t}"
        )));
    }
    let base = ContentQuery {
        targets: targets.to_vec(),
        t,
        radius_cap: rho,
        centers: None,
        radii: radii.to_vec(),
    };
    let mut high = base.clone();
    high.t = tau;
    let factor = rho.powf(tau - t);
    let (lhs, rhs, exact) = match (content_exact_small(g, &high), content_exact_small(g, &base)) {
        (Ok(a), Ok(b)) => (factor * a.value, b.value, true),
        _ => (
            factor * content_upper(g, &high)?.value,
            content_lower_frostman(g, &base)?.value,
            false,
        ),
    };
    Ok(ScalingReport {
        t,
        tau,
        rho,
        lhs,
        rhs,
        margin: lhs - rhs,
        exact,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleChangeReport {
    pub t: f64,
    pub alpha: f64,
    pub rho: f64,
    /// `Σ μ(B_i) / r_i^t` over the input cover.
    pub coarse_sum: f64,
    /// `Σ μ(B) / ρ^t` over the refined cover, an upper bound for `H^{-t}_ρ(K)`.
    pub refined_sum: f64,
    pub refined_balls: usize,
    /// `refined_sum / ((α/ρ)^t coarse_sum)`
    pub empirical_c: f64,
}

/// Refine a cover at scale `α` into radius-`ρ` balls and report the constant
/// in `H^{-t}_ρ(K) ≤ C (α/ρ)^t Σ μ(B_i)/r_i^t`. Each ball with `r_i > ρ` is
/// replaced by radius-`ρ` balls centered on a maximal `ρ/2`-separated subset
/// of `K ∩ B_i` (greedy by vertex id).
pub fn verify_scale_change(
    g: &SpaceGraph,
    targets: &[VertexId],
    t: f64,
    alpha: f64,
    rho: f64,
    cover: &[Ball],
) -> Result<ScaleChangeReport> {
    if !(alpha >= rho && rho > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need alpha >= rho > 0, got {alpha}, {rho}"
        )));
    }
    let mut in_k = vec![false; g.len()];
    for &v in targets {
        in_k[v] = true;
    }
    let mut covered = vec![false; g.len()];
    let mut coarse_sum = 0.0;
    let mut refined_sum = 0.0;
    let mut refined = 0usize;
    let mut s = g.searcher();
    for b in cover {
        let members: Vec<VertexId> = {
            let mut m: Vec<VertexId> = s
                .within(b.center, b.radius)
                .iter()
                .filter(|&&(_, d)| d < b.radius)
                .map(|&(v, _)| v)
                .collect();
            m.sort_unstable();
            m
        };
        let mass: f64 = members.iter().map(|&v| g.mass(v)).sum();
        coarse_sum += mass / b.radius.powf(t);
        if b.radius <= rho {
            refined_sum += mass / b.radius.powf(t);
            refined += 1;
            for &v in &members {
                covered[v] = true;
            }
            continue;
        }
        let mut near_net = vec![false; g.len()];
        for &v in members.iter().filter(|&&v| in_k[v]) {
            if near_net[v] {
                continue;
            }
            let found = s.within(v, rho);
            let mut m = 0.0;
            for &(y, d) in found {
                if d < rho {
                    m += g.mass(y);
                    covered[y] = true;
                }
                if d < rho / 2.0 {
                    near_net[y] = true;
                }
            }
            refined_sum += m / rho.powf(t);
            refined += 1;
        }
    }
    if let Some(&v) = targets.iter().find(|&&v| !covered[v]) {
        return Err(Error::InsufficientCandidates { vertex: v });
    }
    let denom = (alpha / rho).powf(t) * coarse_sum;
    Ok(ScaleChangeReport {
        t,
        alpha,
        rho,
        coarse_sum,
        refined_sum,
        refined_balls: refined,
        empirical_c: if denom > 0.0 {
            refined_sum / denom
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Mask, WeightFn};

    fn path(n: usize) -> SpaceGraph {
        SpaceGraph::build_grid(&Mask::new(n, 1, true), 1.0, &WeightFn::default()).unwrap()
    }

    #[test]
    fn empty_target() {
        let g = path(5);
        let q = ContentQuery::dyadic(vec![], 1.0, 4.0, 1.0);
        assert_eq!(content_upper(&g, &q).unwrap().value, 0.0);
        assert!(content_upper(&g, &q).unwrap().cover.is_empty());
    }

    #[test]
    fn single_vertex() {
        let g = path(5);
        let q = ContentQuery::dyadic(vec![2], 0.0, 1.0, 1.0);
        // B(2, 1) = {2}
        assert_eq!(content_upper(&g, &q).unwrap().value, 1.0);
        assert_eq!(content_exact_small(&g, &q).unwrap().value, 1.0);
        assert_eq!(content_lower_frostman(&g, &q).unwrap().value, 1.0);
        // radius 2 ball {1,2,3}, t = 1: cost 3/2
        let q = q.with_radii(vec![2.0]);
        let q = ContentQuery {
            t: 1.0,
            radius_cap: 2.0,
            ..q
        };
        assert!((content_lower_frostman(&g, &q).unwrap().value - 1.5).abs() < 1e-9);
    }

    #[test]
    fn forced_cover_of_two_points() {
        let g = path(20);
        let q = ContentQuery::dyadic(vec![2, 15], 1.0, 1.0, 1.0);
        let e = content_exact_small(&g, &q).unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.cover.len(), 2);
    }

    #[test]
    fn insufficient_candidates() {
        let g = path(20);
        let q = ContentQuery::dyadic(vec![2, 15], 1.0, 1.0, 1.0).with_centers(vec![2]);
        assert!(matches!(
            content_upper(&g, &q),
            Err(Error::InsufficientCandidates { vertex: 15 })
        ));
    }

    #[test]
    fn too_large() {
        let g = path(40);
        let q = ContentQuery::dyadic((0..40).collect(), 1.0, 8.0, 1.0);
        assert!(matches!(
            content_exact_small(&g, &q),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn path_sandwich() {
        let g = path(10);
        let q = ContentQuery::dyadic((0..10).collect(), 1.0, 4.0, 1.0);
        let lo = content_lower_frostman(&g, &q).unwrap().value;
        let ex = content_exact_small(&g, &q).unwrap().value;
        let up = content_upper(&g, &q).unwrap().value;
        assert!(lo <= ex + 1e-9 && ex <= up + 1e-9, "{lo} {ex} {up}");
        assert!(ex <= 4.0 * lo);
        assert!(up <= (1.0 + 10f64.ln()) * ex);
    }

    #[test]
    fn scaling_identity() {
        let g = path(12);
        let r = verify_content_scaling(&g, &[1, 5, 9], 1.0, 1.0, 4.0, &[1.0, 2.0, 4.0]).unwrap();
        assert!(r.exact);
        assert!((r.lhs - r.rhs).abs() < 1e-12);
    }

    #[test]
    fn scale_change_identity() {
        let g = path(30);
        let cover = [Ball::new(10, 2.0)];
        let r = verify_scale_change(&g, &[10], 1.0, 2.0, 2.0, &cover).unwrap();
        assert!((r.empirical_c - 1.0).abs() < 1e-12);
        // one radius-4 ball {7..13} refined at ρ = 2: a 1-separated net of K ∩ B
        let k: Vec<usize> = (7..14).collect();
        let r = verify_scale_change(&g, &k, 1.0, 4.0, 2.0, &[Ball::new(10, 4.0)]).unwrap();
        // every vertex is its own net point, each ball B(v, 2) has 3 or fewer vertices
        assert_eq!(r.refined_balls, 7);
        assert!((r.refined_sum - 21.0 / 2.0).abs() < 1e-12);
        assert!((r.coarse_sum - 7.0 / 4.0).abs() < 1e-12);
        assert!((r.empirical_c - 21.0 / 2.0 / (2.0 * 7.0 / 4.0)).abs() < 1e-12);
    }
}
