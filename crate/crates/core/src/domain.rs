//! Domains inside a space: boundary, distance to the boundary, John curves,
//! the largest `c`-John subdomain and the visible boundary.
//!
//! The John subdomain is computed exactly over graph paths. For a curve from
//! `z0` to `x` define its budget as `min_z (c (d_Ω(z) + s) - ℓ(γ_{z,x}))`
//! over the curve's vertices before `x`, where `s` is a length slack. Then
//! `x ∈ Ω_{z0}(c)` iff some curve has nonnegative budget. The best budget
//! satisfies `σ(y) = max_x [min(σ(x), c (d_Ω(x) + s)) - d(x, y)]` and is
//! strictly decreasing along optimal curves, so a Dijkstra-style sweep in
//! decreasing `σ` settles it exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Ball, DoublingEstimate, SpaceGraph, VertexId};
use crate::tolerance::Slack;

#[derive(Debug, Clone)]
pub struct DomainDecomp {
    space: Arc<SpaceGraph>,
    interior: Vec<bool>,
    boundary: Vec<bool>,
    interior_list: Vec<VertexId>,
    boundary_list: Vec<VertexId>,
    d_omega: Vec<f64>,
    nearest: Vec<Option<VertexId>>,
    slack: Slack,
}

impl DomainDecomp {
    /// Split `space` into interior (largest connected component of the
    /// predicate), boundary (non-interior neighbours of the interior) and the rest.
    pub fn decompose(space: Arc<SpaceGraph>, interior: impl Fn(VertexId) -> bool) -> Result<Self> {
        let n = space.len();
        let raw: Vec<bool> = (0..n).map(&interior).collect();
        // largest component of the interior
        let mut comp = vec![usize::MAX; n];
        let mut best: (usize, usize) = (0, usize::MAX);
        let mut stack = Vec::new();
        let mut ncomp = 0;
        for s in 0..n {
            if !raw[s] || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = ncomp;
            stack.push(s);
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for (y, _) in space.neighbors(v) {
                    if raw[y] && comp[y] == usize::MAX {
                        comp[y] = ncomp;
                        stack.push(y);
                    }
                }
            }
            if best.1 == usize::MAX || size > best.0 {
                best = (size, ncomp);
            }
            ncomp += 1;
        }
        if ncomp == 0 {
            return Err(Error::EmptyDomain);
        }
        let inside: Vec<bool> = (0..n).map(|v| comp[v] == best.1).collect();
        let mut boundary = vec![false; n];
        for v in 0..n {
            if inside[v] {
                for (y, _) in space.neighbors(v) {
                    if !inside[y] {
                        boundary[y] = true;
                    }
                }
            }
        }
        let boundary_list: Vec<VertexId> = (0..n).filter(|&v| boundary[v]).collect();
        if boundary_list.is_empty() {
            return Err(Error::BoundarylessDomain);
        }
        let interior_list: Vec<VertexId> = (0..n).filter(|&v| inside[v]).collect();
        let sp = space.geodesic_distance(&boundary_list)?;
        let slack = Slack::for_cell(space.h());
        Ok(Self {
            interior: inside,
            boundary,
            interior_list,
            boundary_list,
            d_omega: sp.dist,
            nearest: sp.source,
            slack,
            space,
        })
    }

    /// Sub-domain with interior `members ∩ Ω`, boundary recomputed.
    pub fn restrict(&self, members: &[VertexId]) -> Result<Self> {
        let mut keep = vec![false; self.space.len()];
        for &v in members {
            keep[v] = self.interior[v];
        }
        let mut d = Self::decompose(self.space.clone(), |v| keep[v])?;
        d.slack = self.slack;
        Ok(d)
    }

    /// Largest `μ(B(x,2r) ∩ Ω) / μ(B(x,r) ∩ Ω)` over the samples.
    pub fn restricted_doubling(&self, samples: &[(VertexId, f64)]) -> DoublingEstimate {
        let g = &self.space;
        let mut s = g.searcher();
        let mut best = DoublingEstimate {
            ratio: 1.0,
            worst: None,
            samples: Vec::with_capacity(samples.len()),
        };
        for &(x, r) in samples {
            let (mut inner, mut outer) = (0.0, 0.0);
            for &(v, d) in s.within(x, 2.0 * r) {
                if d < 2.0 * r && self.interior[v] {
                    outer += g.mass(v);
                    if d < r {
                        inner += g.mass(v);
                    }
                }
            }
            if inner <= 0.0 {
                continue;
            }
            let ratio = outer / inner;
            best.samples.push((x, r, ratio));
            if ratio > best.ratio || best.worst.is_none() {
                best.ratio = best.ratio.max(ratio);
                best.worst = Some((x, r));
            }
        }
        best
    }

    pub fn with_slack(mut self, slack: Slack) -> Self {
        self.slack = slack;
        self
    }

    pub fn space(&self) -> &SpaceGraph {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<SpaceGraph> {
        self.space.clone()
    }

    pub fn slack(&self) -> &Slack {
        &self.slack
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        self.interior[v]
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary[v]
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior_list
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary_list
    }

    /// Distance to the boundary (0 on the boundary itself).
    pub fn d_omega(&self, v: VertexId) -> f64 {
        self.d_omega[v]
    }

    pub fn d_omega_field(&self) -> &[f64] {
        &self.d_omega
    }

    /// Nearest boundary vertex (ties by smaller id along shortest-path trees).
    pub fn nearest_boundary(&self, v: VertexId) -> VertexId {
        self.nearest[v].expect("boundary is nonempty and the space connected")
    }

    /// Interior vertex maximizing `d_Ω`, ties by smallest id.
    pub fn deepest(&self) -> VertexId {
        let mut best = self.interior_list[0];
        for &v in &self.interior_list {
            if self.d_omega[v] > self.d_omega[best] {
                best = v;
            }
        }
        best
    }

    /// `μ(B ∩ Ω)`.
    pub fn interior_mass(&self, ball: &Ball) -> f64 {
        self.space
            .ball_members(ball)
            .into_iter()
            .filter(|&v| self.interior[v])
            .map(|v| self.space.mass(v))
            .sum()
    }

    fn check_center(&self, z0: VertexId) -> Result<()> {
        if z0 >= self.space.len() || !self.interior[z0] {
            return Err(Error::CenterOutside { vertex: z0 });
        }
        Ok(())
    }
}

/// Vertex path with consecutive adjacency and prefix lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub path: Vec<VertexId>,
    /// `prefix[i]` is the length of the subcurve `path[0..=i]`.
    pub prefix: Vec<f64>,
}

impl Curve {
    pub fn from_path(g: &SpaceGraph, path: Vec<VertexId>) -> Result<Self> {
        if path.is_empty() {
            return Err(Error::InvalidInput("empty curve".into()));
        }
        let mut prefix = Vec::with_capacity(path.len());
        prefix.push(0.0);
        for w in path.windows(2) {
            let len = if w[0] == w[1] {
                0.0
            } else {
                g.edge_length(w[0], w[1]).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "curve vertices {} and {} are not adjacent",
                        w[0], w[1]
                    ))
                })?
            };
            prefix.push(prefix.last().unwrap() + len);
        }
        Ok(Self { path, prefix })
    }

    pub fn constant(v: VertexId) -> Self {
        Self {
            path: vec![v],
            prefix: vec![0.0],
        }
    }

    pub fn length(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    pub fn first(&self) -> VertexId {
        self.path[0]
    }

    pub fn last(&self) -> VertexId {
        *self.path.last().unwrap()
    }

    /// Append `other`, which must start where `self` ends.
    pub fn concat(mut self, other: &Curve) -> Self {
        debug_assert_eq!(self.last(), other.first());
        let base = self.length();
        self.path.extend_from_slice(&other.path[1..]);
        self.prefix
            .extend(other.prefix[1..].iter().map(|p| p + base));
        self
    }

    pub fn reversed(&self) -> Self {
        let total = self.length();
        Self {
            path: self.path.iter().rev().copied().collect(),
            prefix: self.prefix.iter().rev().map(|p| total - p).collect(),
        }
    }
}

/// Geodesic from `a` to `b` through vertices accepted by `allowed`.
pub fn geodesic_curve(
    g: &SpaceGraph,
    a: VertexId,
    b: VertexId,
    allowed: impl Fn(VertexId) -> bool,
) -> Option<Curve> {
    let sp = g.shortest_paths_within(&[a], |v| v == b || allowed(v), f64::INFINITY);
    let path = sp.path_to(b)?;
    Curve::from_path(g, path).ok()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnCheck {
    pub ok: bool,
    pub worst_ratio: f64,
    pub witness: Option<VertexId>,
}

/// Twisted-cone test `ℓ(γ_{z,y}) ≤ c d_Ω(z)` along `curve`, which runs from
/// the center side to `y = curve.last()`. A boundary endpoint is exempt.
pub fn verify_john_curve(dd: &DomainDecomp, curve: &Curve, c: f64) -> Result<JohnCheck> {
    verify_john_curve_with_slack(dd, curve, c, 0.0)
}

/// As [`verify_john_curve`] with `d_Ω` relaxed by `slack` (a length).
pub fn verify_john_curve_with_slack(
    dd: &DomainDecomp,
    curve: &Curve,
    c: f64,
    slack: f64,
) -> Result<JohnCheck> {
    let n = curve.path.len();
    let total = curve.length();
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut ok = true;
    for (i, &z) in curve.path.iter().enumerate() {
        let endpoint = i == n - 1;
        if !dd.is_interior(z) {
            if endpoint && dd.is_boundary(z) {
                continue;
            }
            return Err(Error::CurveEscapesDomain { vertex: z });
        }
        let tail = total - curve.prefix[i];
        let ratio = tail / (dd.d_omega(z) + slack);
        if ratio > worst {
            worst = ratio;
            witness = Some(z);
        }
        if tail > c * (dd.d_omega(z) + slack) * (1.0 + 1e-12) {
            ok = false;
        }
    }
    Ok(JohnCheck {
        ok,
        worst_ratio: worst,
        witness,
    })
}

#[derive(Copy, Clone, PartialEq)]
struct Budget {
    sigma: f64,
    vertex: VertexId,
}

impl Eq for Budget {}

impl Ord for Budget {
    // max-heap on sigma, then smaller id first
    fn cmp(&self, other: &Self) -> Ordering {
        self.sigma
            .total_cmp(&other.sigma)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Budget {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `Ω_{z0}(c)` with the best cone budgets and a witness tree.
#[derive(Debug, Clone)]
pub struct JohnSubdomain {
    pub z0: VertexId,
    pub c: f64,
    pub slack: f64,
    /// Best budget `σ(x)` on arrival at `x` (`-∞` when unreachable, `+∞` at `z0`).
    pub sigma: Vec<f64>,
    pred: Vec<Option<VertexId>>,
    members: Vec<VertexId>,
    inside: Vec<bool>,
}

impl JohnSubdomain {
    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.inside[v]
    }

    /// Remaining budget after leaving `x`: `min(σ(x), c (d_Ω(x) + s))`.
    pub fn outgoing(&self, dd: &DomainDecomp, x: VertexId) -> f64 {
        self.sigma[x].min(self.c * (dd.d_omega(x) + self.slack))
    }

    /// The witness curve from `z0` to a member.
    pub fn curve_to(&self, g: &SpaceGraph, x: VertexId) -> Option<Curve> {
        if !self.inside[x] {
            return None;
        }
        let mut path = vec![x];
        let mut cur = x;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Curve::from_path(g, path).ok()
    }
}

/// Largest `c`-John subdomain with center `z0`, cone test relaxed by the
/// domain's John slack.
pub fn john_subdomain(dd: &DomainDecomp, z0: VertexId, c: f64) -> Result<JohnSubdomain> {
    john_subdomain_with_slack(dd, z0, c, dd.slack().john_len())
}

pub fn john_subdomain_with_slack(
    dd: &DomainDecomp,
    z0: VertexId,
    c: f64,
    slack: f64,
) -> Result<JohnSubdomain> {
    dd.check_center(z0)?;
    if !(c >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "John constant must be >= 1, got {c}"
        )));
    }
    let g = dd.space();
    let n = g.len();
    let mut sigma = vec![f64::NEG_INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    sigma[z0] = f64::INFINITY;
    heap.push(Budget {
        sigma: f64::INFINITY,
        vertex: z0,
    });
    while let Some(Budget {
        sigma: s,
        vertex: x,
    }) = heap.pop()
    {
        if done[x] || s < sigma[x] {
            continue;
        }
        done[x] = true;
        let out = s.min(c * (dd.d_omega(x) + slack));
        for (y, len) in g.neighbors(x) {
            if done[y] || !dd.is_interior(y) {
                continue;
            }
            let cand = out - len;
            if cand < 0.0 {
                continue;
            }
            if cand > sigma[y] || (cand == sigma[y] && pred[y].is_some_and(|p| x < p)) {
                sigma[y] = cand;
                pred[y] = Some(x);
                heap.push(Budget {
                    sigma: cand,
                    vertex: y,
                });
            }
        }
    }
    let inside: Vec<bool> = (0..n).map(|v| sigma[v] >= 0.0).collect();
    let members = (0..n).filter(|&v| inside[v]).collect();
    Ok(JohnSubdomain {
        z0,
        c,
        slack,
        sigma,
        pred,
        members,
        inside,
    })
}

/// Per-vertex John quality `1 / c_min(x)` where `c_min` is the smallest
/// constant on the ladder `c_k = c_lo * ratio^k ≤ c_hi` admitting `x`; zero
/// when no ladder value admits it and `+∞` at `z0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnLabel {
    pub z0: VertexId,
    pub quality: Vec<f64>,
}

pub fn john_quality(
    dd: &DomainDecomp,
    z0: VertexId,
    slack: f64,
    c_lo: f64,
    c_hi: f64,
    ratio: f64,
) -> Result<JohnLabel> {
    let n = dd.space().len();
    let mut quality = vec![0.0; n];
    let mut c = c_lo.max(1.0);
    while c <= c_hi * (1.0 + 1e-12) {
        let sub = john_subdomain_with_slack(dd, z0, c, slack)?;
        for &v in sub.members() {
            if quality[v] == 0.0 {
                quality[v] = 1.0 / c;
            }
        }
        c *= ratio;
    }
    quality[z0] = f64::INFINITY;
    Ok(JohnLabel { z0, quality })
}

/// Boundary vertices reachable from `z0` by a `c`-John curve whose interior
/// points pass the slackened cone test.
pub fn visible_boundary(dd: &DomainDecomp, z0: VertexId, c: f64) -> Result<Vec<VertexId>> {
    let sub = john_subdomain(dd, z0, c)?;
    Ok(visible_from(dd, &sub))
}

pub fn visible_from(dd: &DomainDecomp, sub: &JohnSubdomain) -> Vec<VertexId> {
    let g = dd.space();
    dd.boundary()
        .iter()
        .copied()
        .filter(|&w| {
            g.neighbors(w)
                .any(|(x, len)| sub.contains(x) && sub.outgoing(dd, x) >= len)
        })
        .collect()
}

/// A John curve from `z0` ending at the visible boundary vertex `w`.
pub fn curve_to_boundary(dd: &DomainDecomp, sub: &JohnSubdomain, w: VertexId) -> Option<Curve> {
    let g = dd.space();
    let (x, _) = g
        .neighbors(w)
        .filter(|&(x, len)| sub.contains(x) && sub.outgoing(dd, x) >= len)
        .max_by(|a, b| {
            sub.outgoing(dd, a.0)
                .total_cmp(&sub.outgoing(dd, b.0))
                .then_with(|| b.0.cmp(&a.0))
        })?;
    let mut curve = sub.curve_to(g, x)?;
    let len = g.edge_length(x, w)?;
    curve.path.push(w);
    curve.prefix.push(curve.length() + len);
    Some(curve)
}

/// Visible boundary localized to `B(z0, 3 d_Ω(z0) + extra)`.
pub fn visible_boundary_localized(
    dd: &DomainDecomp,
    z0: VertexId,
    c: f64,
    extra: f64,
) -> Result<Vec<VertexId>> {
    let vis = visible_boundary(dd, z0, c)?;
    let radius = 3.0 * dd.d_omega(z0) + extra;
    let near = dd.space().ball_members(&Ball::new(z0, radius));
    let mut in_ball = vec![false; dd.space().len()];
    for v in near {
        in_ball[v] = true;
    }
    Ok(vis.into_iter().filter(|&w| in_ball[w]).collect())
}

/// `C[γ] = ∪_{z ∈ γ} B(z, d_Ω(z))`, sorted.
pub fn cone_domain(dd: &DomainDecomp, curve: &Curve) -> Vec<VertexId> {
    // v is in the cone iff min_z d(z, v) - d_Ω(z) < 0; one Dijkstra from
    // the curve with initial labels -d_Ω(z). Budget is a max-heap, so the
    // heap key is the negated label.
    let g = dd.space();
    let mut label = vec![f64::INFINITY; g.len()];
    let mut done = vec![false; g.len()];
    let mut heap = BinaryHeap::new();
    for &z in &curve.path {
        if dd.is_interior(z) && -dd.d_omega(z) < label[z] {
            label[z] = -dd.d_omega(z);
            heap.push(Budget {
                sigma: dd.d_omega(z),
                vertex: z,
            });
        }
    }
    while let Some(Budget { sigma, vertex: x }) = heap.pop() {
        if done[x] || -sigma > label[x] {
            continue;
        }
        done[x] = true;
        for (y, len) in g.neighbors(x) {
            let cand = label[x] + len;
            if cand < 0.0 && cand < label[y] {
                label[y] = cand;
                heap.push(Budget {
                    sigma: -cand,
                    vertex: y,
                });
            }
        }
    }
    // labels accumulate rounding differently from a plain distance, so
    // a vertex exactly on a sphere needs a margin to stay outside
    let tie = dd.slack().rel * g.h();
    (0..g.len()).filter(|&v| label[v] < -tie).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub size: usize,
    pub c: f64,
    pub slack: f64,
    pub ok: bool,
    /// Cone vertices outside the computed John subdomain of the cone.
    pub missing: Vec<VertexId>,
}

/// Check that every vertex of `cone` lies in the `c`-John subdomain of the
/// cone itself, centered at `z0`.
pub fn certify_cone(
    dd: &DomainDecomp,
    cone: &[VertexId],
    z0: VertexId,
    c: f64,
    slack: f64,
) -> Result<ConeCertificate> {
    let sub_dd = dd.restrict(cone)?;
    let sub = john_subdomain_with_slack(&sub_dd, z0, c, slack)?;
    let missing: Vec<VertexId> = cone.iter().copied().filter(|&v| !sub.contains(v)).collect();
    Ok(ConeCertificate {
        size: cone.len(),
        c,
        slack,
        ok: missing.is_empty(),
        missing,
    })
}
