//! Generations of boundary points and their Frostman measure.
//!
//! Starting from the boundary point `w0` nearest to `z0` (with `r = d_Ω(z0)`),
//! each point `w ∈ P_k` with ball center `z_w` spawns a well-placed family of
//! radius `η^{k+1} r` balls inside the window `B(w, 2η^k r)`, chained to the
//! seed `B(z_w, η^{k+1} r)`. One boundary contact per family ball forms
//! `P_{k+1}`. Weights are pushed down the tree in proportion to the masses
//! `μ(B(w, η^{k+1} r))`.
//!
//! Besides 4-fold disjointness, a candidate is accepted only if its contact
//! lies at least `8 η^{k+1} r` from every contact already accepted in the
//! window. Contacts of different parents are then separated automatically
//! (parents are `8 η^k r` apart and children sit within `2 η^k r`).

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    certify_cone, cone_domain, geodesic_curve, verify_john_curve_with_slack, ConeCertificate,
    Curve, DomainDecomp, JohnCheck,
};
use crate::error::{Error, Result};
use crate::space::{packing_bound, Ball, SpaceGraph, VertexId};

/// Threshold on `η` enforced in strict mode.
pub const ETA_STRICT: f64 = 1.0 / 168.0;

/// Well-placed balls of a common radius along a boundary window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallFamily {
    pub window: Ball,
    pub balls: Vec<Ball>,
    /// Boundary contact per ball: its nearest boundary vertex.
    pub contacts: Vec<VertexId>,
    /// Candidates examined, and whether the final rescan found none acceptable.
    pub candidates: usize,
    pub maximal: bool,
}

/// Family balls plus the chain balls joining them to the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainedFamily {
    pub radius: f64,
    /// `balls[0]` is the seed, `balls[1..=family]` the family, the rest chain balls.
    pub balls: Vec<Ball>,
    pub family: usize,
    /// Chain graph: `d(c_i, c_j) ≤ radius + closure slack`.
    pub edges: Vec<(usize, usize)>,
    /// Minimal number of balls in a chain from the seed to each family ball.
    pub chain_lengths: Vec<usize>,
    pub pruned: usize,
}

impl ChainedFamily {
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.balls.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// BFS parents from the seed over the ball indices in `alive`.
    fn bfs(&self, adj: &[Vec<usize>], alive: &[bool]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.balls.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[0] = Some(0);
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if alive[v] && dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Ball indices along a shortest chain from the seed to family ball `i` (1-based index into `balls`).
    pub fn chain_to(&self, i: usize) -> Vec<usize> {
        let adj = self.adjacency();
        let mut parent = vec![usize::MAX; self.balls.len()];
        let mut queue = std::collections::VecDeque::new();
        parent[0] = 0;
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut out = vec![i];
        let mut cur = i;
        while cur != 0 {
            cur = parent[cur];
            out.push(cur);
        }
        out.reverse();
        out
    }

    /// Whether removing any single chain ball (neither seed nor family) keeps the graph connected.
    pub fn is_minimal(&self) -> bool {
        let adj = self.adjacency();
        (self.family + 1..self.balls.len()).all(|x| {
            let mut alive = vec![true; self.balls.len()];
            alive[x] = false;
            let d = self.bfs(&adj, &alive);
            (0..self.balls.len()).any(|v| alive[v] && d[v].is_none())
        })
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let d = self.bfs(&adj, &vec![true; self.balls.len()]);
        d.iter().all(Option::is_some)
    }
}

struct Window {
    /// d(w, y) for y within the window, by vertex (∞ outside)
    dist: Vec<(VertexId, f64)>,
}

fn window_of(g: &SpaceGraph, w: VertexId, radius: f64) -> Window {
    let mut s = g.searcher();
    let dist = s
        .within(w, radius)
        .iter()
        .copied()
        .filter(|&(_, d)| d < radius)
        .collect();
    Window { dist }
}

/// Greedy well-placed family in the window `B(w, window_radius)`, chained to
/// `seed`. Candidates are interior `y` with `d_Ω(y) ∈ [b, b + contact slack)`
/// whose nearest boundary vertex lies in the window.
pub fn well_placed_family(
    dd: &DomainDecomp,
    w: VertexId,
    window_radius: f64,
    ball_radius: f64,
    seed: Ball,
) -> Result<BallFamily> {
    let g = dd.space();
    let b = ball_radius;
    if b < 2.0 * g.h() - 1e-12 {
        return Err(Error::EtaUnresolvable(format!(
            "ball radius {b} is below two cells ({})",
            2.0 * g.h()
        )));
    }
    let win = window_of(g, w, window_radius);
    let region = chain_region(dd, &win, b);
    let reach = reachable_in(g, seed.center, &region);
    let mut in_window = vec![false; g.len()];
    for &(v, _) in &win.dist {
        in_window[v] = true;
    }
    let band = dd.slack().contact_len();
    let mut cands: Vec<(VertexId, f64)> = win
        .dist
        .iter()
        .map(|&(y, _)| y)
        .filter(|&y| {
            dd.is_interior(y)
                && reach[y]
                && dd.d_omega(y) >= b
                && dd.d_omega(y) < b + band
                && in_window[dd.nearest_boundary(y)]
        })
        .map(|y| (y, 0.0))
        .collect();
    let mut s = g.searcher();
    for c in cands.iter_mut() {
        c.1 = s.ball_mass(c.0, b);
    }
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut st = Acceptance::new(g.len(), b);
    let mut balls = Vec::new();
    let mut contacts: Vec<VertexId> = Vec::new();
    for &(y, _) in &cands {
        if let Some(contact) = st.acceptable(dd, y, &mut s) {
            st.accept(y, contact, &mut s);
            balls.push(Ball::new(y, b));
            contacts.push(contact);
        }
    }
    // certified maximality: no rejected candidate is acceptable now
    let accepted: std::collections::HashSet<VertexId> = balls.iter().map(|b| b.center).collect();
    let maximal = cands
        .iter()
        .filter(|(y, _)| !accepted.contains(y))
        .all(|&(y, _)| st.acceptable(dd, y, &mut s).is_none());
    Ok(BallFamily {
        window: Ball::new(w, window_radius),
        balls,
        contacts,
        candidates: cands.len(),
        maximal,
    })
}

/// Bookkeeping for the greedy family: vertices claimed by accepted 4-balls,
/// distances to accepted centers, and vertices too close to accepted contacts.
struct Acceptance {
    b: f64,
    claimed: Vec<bool>,
    center_dist: Vec<f64>,
    blocked: Vec<bool>,
}

impl Acceptance {
    fn new(n: usize, b: f64) -> Self {
        Self {
            b,
            claimed: vec![false; n],
            center_dist: vec![f64::INFINITY; n],
            blocked: vec![false; n],
        }
    }

    fn acceptable(
        &self,
        dd: &DomainDecomp,
        y: VertexId,
        s: &mut crate::space::BallSearcher,
    ) -> Option<VertexId> {
        let contact = dd.nearest_boundary(y);
        if self.blocked[contact] {
            return None;
        }
        // 4-balls can only meet when the centers are closer than 8b
        if self.center_dist[y] < 8.0 * self.b {
            let four = 4.0 * self.b;
            if s.within(y, four)
                .iter()
                .any(|&(v, d)| d < four && self.claimed[v])
            {
                return None;
            }
        }
        Some(contact)
    }

    fn accept(&mut self, y: VertexId, contact: VertexId, s: &mut crate::space::BallSearcher) {
        let (four, sep) = (4.0 * self.b, 8.0 * self.b);
        for &(v, d) in s.within(y, sep) {
            if d < four {
                self.claimed[v] = true;
            }
            self.center_dist[v] = self.center_dist[v].min(d);
        }
        for &(v, d) in s.within(contact, sep) {
            if d < sep {
                self.blocked[v] = true;
            }
        }
    }
}

/// Allowed chain-ball centers: interior, `d_Ω ≥ b`, inside the window.
fn chain_region(dd: &DomainDecomp, win: &Window, b: f64) -> Vec<bool> {
    let mut region = vec![false; dd.space().len()];
    for &(y, _) in &win.dist {
        if dd.is_interior(y) && dd.d_omega(y) >= b {
            region[y] = true;
        }
    }
    region
}

fn reachable_in(g: &SpaceGraph, start: VertexId, region: &[bool]) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    if !region[start] {
        return seen;
    }
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for (y, _) in g.neighbors(v) {
            if region[y] && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Join every family ball to the seed by balls of the same radius with
/// centers in the chain region, then prune to a minimal chained family.
pub fn chainable_closure(
    dd: &DomainDecomp,
    family: &BallFamily,
    seed: Ball,
) -> Result<ChainedFamily> {
    let g = dd.space();
    let b = seed.radius;
    let reach = dd.slack().closure_len() + b;
    let win = window_of(g, family.window.center, family.window.radius);
    let region = chain_region(dd, &win, b);
    if !region[seed.center] {
        return Err(Error::ChainBroken {
            center: seed.center,
        });
    }
    let sp = g.shortest_paths_within(&[seed.center], |v| region[v], f64::INFINITY);
    // ball centers: seed, family, then chain balls in discovery order
    let mut centers: Vec<VertexId> = vec![seed.center];
    centers.extend(family.balls.iter().map(|b| b.center));
    let n_family = family.balls.len();
    let mut index_of = std::collections::HashMap::new();
    for (i, &c) in centers.iter().enumerate() {
        index_of.entry(c).or_insert(i);
    }
    for fb in &family.balls {
        let path = sp
            .path_to(fb.center)
            .ok_or(Error::ChainBroken { center: fb.center })?;
        let curve = Curve::from_path(g, path)?;
        let mut i = 0;
        while i + 1 < curve.path.len() {
            let mut j = i + 1;
            while j + 1 < curve.path.len() && curve.prefix[j + 1] - curve.prefix[i] <= reach {
                j += 1;
            }
            let c = curve.path[j];
            if let std::collections::hash_map::Entry::Vacant(e) = index_of.entry(c) {
                e.insert(centers.len());
                centers.push(c);
            }
            i = j;
        }
    }
    // chain graph by true distances; the tolerance absorbs rounding between
    // path prefix sums and Dijkstra sums
    let mut edges = Vec::new();
    let mut s = g.searcher();
    let edge_reach = reach * (1.0 + 1e-9);
    for (i, &c) in centers.iter().enumerate() {
        for &(v, d) in s.within(c, edge_reach) {
            if d <= edge_reach {
                if let Some(&j) = index_of.get(&v) {
                    if j > i {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    let mut cf = ChainedFamily {
        radius: b,
        balls: centers.iter().map(|&c| Ball::new(c, b)).collect(),
        family: n_family,
        edges,
        chain_lengths: Vec::new(),
        pruned: 0,
    };
    if !cf.is_connected() {
        return Err(Error::ChainBroken {
            center: seed.center,
        });
    }
    // greedy pruning, repeated until stable
    let adj = cf.adjacency();
    let mut alive = vec![true; cf.balls.len()];
    loop {
        let mut changed = false;
        for x in (n_family + 1..cf.balls.len()).rev() {
            if !alive[x] {
                continue;
            }
            alive[x] = false;
            let d = cf.bfs(&adj, &alive);
            if (0..cf.balls.len()).all(|v| !alive[v] || d[v].is_some()) {
                changed = true;
            } else {
                alive[x] = true;
            }
        }
        if !changed {
            break;
        }
    }
    let keep: Vec<usize> = (0..cf.balls.len()).filter(|&i| alive[i]).collect();
    let mut remap = vec![usize::MAX; cf.balls.len()];
    for (new, &old) in keep.iter().enumerate() {
        remap[old] = new;
    }
    cf.pruned = cf.balls.len() - keep.len();
    cf.balls = keep.iter().map(|&i| cf.balls[i]).collect();
    cf.edges = cf
        .edges
        .iter()
        .filter(|&&(a, b)| alive[a] && alive[b])
        .map(|&(a, b)| (remap[a], remap[b]))
        .collect();
    let adj = cf.adjacency();
    let d = cf.bfs(&adj, &vec![true; cf.balls.len()]);
    cf.chain_lengths = (1..=n_family).map(|i| d[i].unwrap() + 1).collect();
    Ok(cf)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenPoint {
    /// Boundary vertex `w`.
    pub vertex: VertexId,
    /// Center `z_w` of the ball whose contact is `w`.
    pub center: VertexId,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// `μ(B(w, η^k r))`.
    pub ball_mass: f64,
    /// Chained family spawned by this point (absent at the deepest level).
    pub family: Option<ChainedFamily>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generation {
    pub level: usize,
    /// `η^k r`
    pub radius: f64,
    pub points: Vec<GenPoint>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TreeFlags {
    pub requested_depth: usize,
    pub truncated_by_resolution: bool,
    pub starved_level: Option<usize>,
    pub strict: bool,
}

/// `(vertex, center, parent, ball mass)` for [`GenerationTree::from_skeleton`].
pub type SkeletonPoint = (VertexId, VertexId, Option<usize>, f64);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationTree {
    pub z0: VertexId,
    pub w0: VertexId,
    pub r: f64,
    pub eta: f64,
    pub levels: Vec<Generation>,
    pub flags: TreeFlags,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GenerationOptions {
    pub eta: f64,
    pub depth: usize,
    pub strict: bool,
    /// Smallest admissible ball radius, in cells.
    pub min_cells: f64,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self {
            eta: 0.125,
            depth: 2,
            strict: false,
            min_cells: 2.0,
        }
    }
}

impl GenerationTree {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Build a tree from explicit levels of points.
    pub fn from_skeleton(r: f64, eta: f64, levels: &[Vec<SkeletonPoint>]) -> Result<Self> {
        if levels.is_empty() || levels[0].len() != 1 {
            return Err(Error::InvalidInput(
                "level 0 must hold exactly one point".into(),
            ));
        }
        let mut out: Vec<Generation> = Vec::new();
        for (k, lvl) in levels.iter().enumerate() {
            let mut points = Vec::new();
            for (i, &(vertex, center, parent, ball_mass)) in lvl.iter().enumerate() {
                if k > 0 {
                    let p = parent
                        .filter(|&p| p < out[k - 1].points.len())
                        .ok_or_else(|| {
                            Error::InvalidInput(format!(
                                "point {i} of level {k} has no valid parent"
                            ))
                        })?;
                    out[k - 1].points[p].children.push(i);
                }
                points.push(GenPoint {
                    vertex,
                    center,
                    parent: if k == 0 { None } else { parent },
                    children: Vec::new(),
                    ball_mass,
                    family: None,
                });
            }
            out.push(Generation {
                level: k,
                radius: r * eta.powi(k as i32),
                points,
            });
        }
        Ok(Self {
            z0: levels[0][0].1,
            w0: levels[0][0].0,
            r,
            eta,
            flags: TreeFlags {
                requested_depth: levels.len() - 1,
                ..Default::default()
            },
            levels: out,
        })
    }

    /// All `(level, index)` pairs.
    pub fn all_points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.levels
            .iter()
            .flat_map(|l| (0..l.points.len()).map(move |i| (l.level, i)))
    }

    /// Ancestor indices `[i_0, ..., i_k]` of point `(k, i)`.
    pub fn lineage(&self, k: usize, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        for lvl in (1..=k).rev() {
            cur = self.levels[lvl].points[cur]
                .parent
                .expect("non-root has a parent");
            out.push(cur);
        }
        out.reverse();
        out
    }
}

/// Largest depth whose ball radius `η^K r` is at least `min_cells` cells.
pub fn resolvable_depth(r: f64, eta: f64, h: f64, min_cells: f64, requested: usize) -> usize {
    let mut k = 0;
    while k < requested && r * eta.powi(k as i32 + 1) >= min_cells * h - 1e-12 {
        k += 1;
    }
    k
}

pub fn build_generations(
    dd: &DomainDecomp,
    z0: VertexId,
    opts: GenerationOptions,
) -> Result<GenerationTree> {
    let g = dd.space();
    if !dd.is_interior(z0) {
        return Err(Error::CenterOutside { vertex: z0 });
    }
    let eta = opts.eta;
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidInput(format!(
            "eta must lie in (0, 1/2), got {eta}"
        )));
    }
    if opts.strict && eta >= ETA_STRICT {
        return Err(Error::InvalidConfig(vec![format!(
            "strict mode requires eta < 1/168, got {eta}"
        )]));
    }
    let r = dd.d_omega(z0);
    let depth = resolvable_depth(r, eta, g.h(), opts.min_cells, opts.depth);
    if opts.strict && depth == 0 && opts.depth > 0 {
        return Err(Error::EtaUnresolvable(format!(
            "eta * r = {} is below {} cells of size {}",
            eta * r,
            opts.min_cells,
            g.h()
        )));
    }
    let w0 = dd.nearest_boundary(z0);
    let mut levels = vec![Generation {
        level: 0,
        radius: r,
        points: vec![GenPoint {
            vertex: w0,
            center: z0,
            parent: None,
            children: Vec::new(),
            ball_mass: g.ball_mass(&Ball::new(w0, r)),
            family: None,
        }],
    }];
    let mut starved = None;
    for k in 0..depth {
        let rho = r * eta.powi(k as i32);
        let b = rho * eta;
        let parents = &levels[k].points;
        let spawned: Vec<Result<(BallFamily, ChainedFamily)>> = parents
            .par_iter()
            .map(|p| {
                let seed = Ball::new(p.center, b);
                let fam = well_placed_family(dd, p.vertex, 2.0 * rho, b, seed)?;
                let chained = chainable_closure(dd, &fam, seed)?;
                Ok((fam, chained))
            })
            .collect();
        let mut next = Vec::new();
        let mut s = g.searcher();
        for (pi, res) in spawned.into_iter().enumerate() {
            let (fam, chained) = res?;
            for (ball, &contact) in fam.balls.iter().zip(&fam.contacts) {
                levels[k].points[pi].children.push(next.len());
                next.push(GenPoint {
                    vertex: contact,
                    center: ball.center,
                    parent: Some(pi),
                    children: Vec::new(),
                    ball_mass: s.ball_mass(contact, b),
                    family: None,
                });
            }
            levels[k].points[pi].family = Some(chained);
        }
        if next.is_empty() {
            starved = Some(k + 1);
            break;
        }
        levels.push(Generation {
            level: k + 1,
            radius: b,
            points: next,
        });
    }
    Ok(GenerationTree {
        z0,
        w0,
        r,
        eta,
        levels,
        flags: TreeFlags {
            requested_depth: opts.depth,
            truncated_by_resolution: depth < opts.depth,
            starved_level: starved,
            strict: opts.strict,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Per level: smallest pairwise distance between points, and the required bound.
    pub levels: Vec<(usize, f64, f64)>,
    pub ok: bool,
}

/// Exact pairwise separation test: distinct points of `P_k` at least
/// `8 η^k r - separation slack` apart.
pub fn verify_separation(dd: &DomainDecomp, tree: &GenerationTree) -> SeparationReport {
    let g = dd.space();
    let slack = dd.slack().separation_len();
    let mut out = Vec::new();
    let mut ok = true;
    let mut s = g.searcher();
    for lvl in &tree.levels {
        let need = 8.0 * lvl.radius - slack;
        let mut is_point = vec![false; g.len()];
        for p in &lvl.points {
            is_point[p.vertex] = true;
        }
        let mut min_d = f64::INFINITY;
        for p in &lvl.points {
            for &(v, d) in s.within(p.vertex, 8.0 * lvl.radius) {
                if v != p.vertex && is_point[v] {
                    min_d = min_d.min(d);
                }
            }
        }
        // duplicates count as distance zero
        let mut ids: Vec<VertexId> = lvl.points.iter().map(|p| p.vertex).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            min_d = 0.0;
        }
        if min_d < need {
            ok = false;
        }
        out.push((lvl.level, min_d, need));
    }
    SeparationReport { levels: out, ok }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainBound {
    /// Largest minimal chain length over all families.
    pub m: usize,
    pub doubling: f64,
    /// `C_d^{⌈log2(4R/s + 1)⌉}` with `R = 2ρ`, `s = ηρ`.
    pub packing: f64,
    pub ok: bool,
}

/// `M = max N` over all chained families, checked against twice the packing
/// bound from the measured doubling constant.
pub fn chain_bound(dd: &DomainDecomp, tree: &GenerationTree) -> ChainBound {
    let g = dd.space();
    let mut m = 1;
    let mut samples = Vec::new();
    for lvl in &tree.levels {
        for p in &lvl.points {
            if let Some(f) = &p.family {
                m = m.max(f.chain_lengths.iter().copied().max().unwrap_or(1));
            }
            for j in lvl.level..=tree.depth() + 1 {
                let rad = tree.r * tree.eta.powi(j as i32);
                if rad >= g.h() {
                    samples.push((p.center, rad));
                    samples.push((p.vertex, rad));
                }
            }
        }
    }
    let doubling = g.doubling_constant(&samples).ratio;
    let packing = packing_bound(doubling, 2.0, tree.eta);
    ChainBound {
        m,
        doubling,
        packing,
        ok: (m as f64) <= 2.0 * packing,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrostmanMeasure {
    pub depth: usize,
    /// `a(w, k)` aligned with `tree.levels[k].points`.
    pub weights: Vec<Vec<f64>>,
}

impl FrostmanMeasure {
    /// Atoms `(vertex, a(w, K))` of the deepest level.
    pub fn atoms(&self, tree: &GenerationTree) -> Vec<(VertexId, f64)> {
        self.level_atoms(tree, self.depth)
    }

    pub fn level_atoms(&self, tree: &GenerationTree, k: usize) -> Vec<(VertexId, f64)> {
        tree.levels[k]
            .points
            .iter()
            .zip(&self.weights[k])
            .map(|(p, &a)| (p.vertex, a))
            .collect()
    }
}

/// `a(w0, 0) = 1` and `a(w, k+1) = a(A(w), k) μ(B(w, η^{k+1} r)) / Σ_{ζ ∈ D_k(A(w))} μ(B(ζ, η^{k+1} r))`.
pub fn frostman_weights(tree: &GenerationTree) -> Result<FrostmanMeasure> {
    let depth = tree.depth();
    let mut weights = vec![vec![1.0]];
    for k in 0..depth {
        let mut next = vec![0.0; tree.levels[k + 1].points.len()];
        for (pi, p) in tree.levels[k].points.iter().enumerate() {
            let a = weights[k][pi];
            if p.children.is_empty() {
                if a > 0.0 {
                    return Err(Error::OrphanedMass {
                        vertex: p.vertex,
                        level: k,
                    });
                }
                continue;
            }
            let total: f64 = p
                .children
                .iter()
                .map(|&c| tree.levels[k + 1].points[c].ball_mass)
                .sum();
            for &c in &p.children {
                next[c] = a * tree.levels[k + 1].points[c].ball_mass / total;
            }
        }
        weights.push(next);
    }
    let m = FrostmanMeasure { depth, weights };
    for (k, w) in m.weights.iter().enumerate() {
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::CertificateFailed {
                witness: k,
                worst_ratio: total,
                bound: 1.0,
            });
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrostmanBoundReport {
    pub p: f64,
    pub samples: usize,
    /// `max ν(B(ξ,ρ)) ρ^p μ_Ω(B(w0,r)) / (μ_Ω(B(ξ,ρ)) r^p)`
    pub max_ratio: f64,
    pub witness: Option<(VertexId, f64)>,
    /// Largest ratio per sampled radius.
    pub by_radius: Vec<(f64, f64)>,
}

/// Growth bound of the depth-`K` measure over sampled `(ξ, ρ)`, `ξ` in
/// `P_K` plus `extra_centers` random boundary vertices, `ρ` geometric in `[4h, r]`.
pub fn verify_frostman_bound(
    dd: &DomainDecomp,
    tree: &GenerationTree,
    measure: &FrostmanMeasure,
    p: f64,
    extra_centers: usize,
    seed: u64,
) -> FrostmanBoundReport {
    let g = dd.space();
    let atoms = measure.atoms(tree);
    let mut atom_w = vec![0.0; g.len()];
    for &(v, a) in &atoms {
        atom_w[v] += a;
    }
    let mut centers: Vec<VertexId> = atoms.iter().map(|a| a.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    centers.extend(
        dd.boundary()
            .choose_multiple(&mut rng, extra_centers)
            .copied(),
    );
    centers.sort_unstable();
    centers.dedup();
    let mut radii = Vec::new();
    let mut rho = tree.r;
    while rho >= 4.0 * g.h() - 1e-12 {
        radii.push(rho);
        rho /= 2.0;
    }
    radii.reverse();
    let mu_omega = |s: &mut crate::space::BallSearcher, c: VertexId, rad: f64| -> (f64, f64) {
        let mut m = 0.0;
        let mut nu = 0.0;
        for &(v, d) in s.within(c, rad) {
            if d < rad {
                if dd.is_interior(v) {
                    m += g.mass(v);
                }
                nu += atom_w[v];
            }
        }
        (m, nu)
    };
    let mut s = g.searcher();
    let (top, _) = mu_omega(&mut s, tree.w0, tree.r);
    let mut report = FrostmanBoundReport {
        p,
        samples: 0,
        max_ratio: 0.0,
        witness: None,
        by_radius: Vec::new(),
    };
    for &rad in &radii {
        let mut best = 0.0f64;
        for &c in &centers {
            let (m, nu) = mu_omega(&mut s, c, rad);
            if m <= 0.0 {
                continue;
            }
            report.samples += 1;
            let ratio = nu * rad.powf(p) * top / (m * tree.r.powf(p));
            if ratio > best {
                best = ratio;
            }
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.witness = Some((c, rad));
            }
        }
        report.by_radius.push((rad, best));
    }
    report
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelescopingReport {
    pub k1: usize,
    pub k2: usize,
    pub max_error: f64,
    pub checked: usize,
    pub ok: bool,
}

/// `ν_{k2}(B(w, 3η^{k1} r)) = a(w, k1)` for every `w ∈ P_{k1}`.
pub fn verify_telescoping(
    g: &SpaceGraph,
    tree: &GenerationTree,
    measure: &FrostmanMeasure,
    k1: usize,
    k2: usize,
) -> Result<TelescopingReport> {
    if k1 > k2 || k2 > measure.depth {
        return Err(Error::InvalidInput(format!(
            "need k1 <= k2 <= K, got {k1}, {k2}"
        )));
    }
    let mut atom_w = vec![0.0; g.len()];
    for (v, a) in measure.level_atoms(tree, k2) {
        atom_w[v] += a;
    }
    let rad = 3.0 * tree.r * tree.eta.powi(k1 as i32);
    let mut s = g.searcher();
    let mut max_error = 0.0f64;
    for (i, p) in tree.levels[k1].points.iter().enumerate() {
        let nu: f64 = s
            .within(p.vertex, rad)
            .iter()
            .filter(|&&(_, d)| d < rad)
            .map(|&(v, _)| atom_w[v])
            .sum();
        max_error = max_error.max((nu - measure.weights[k1][i]).abs());
    }
    Ok(TelescopingReport {
        k1,
        k2,
        max_error,
        checked: tree.levels[k1].points.len(),
        ok: max_error <= 1e-12,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveCertificate {
    pub level: usize,
    pub index: usize,
    pub curve: Curve,
    pub m: usize,
    /// `verify_john_curve` at `c = 4M`.
    pub john: JohnCheck,
    /// Smallest `d_Ω` along each level's chain geodesics minus `η^k r / 2 - h`.
    pub chain_depth_margin: f64,
    /// `C[γ]` is `(8M+1)`-John with center `z0`.
    pub cone: ConeCertificate,
}

/// John curve from `z0` to the generation point `(k, i)`: chain geodesics
/// through the ancestors' families, then the geodesic `z_w → w`.
pub fn john_curve_from_generation(
    dd: &DomainDecomp,
    tree: &GenerationTree,
    k: usize,
    i: usize,
    m: usize,
) -> Result<CurveCertificate> {
    let g = dd.space();
    let lineage = tree.lineage(k, i);
    let mut curve = Curve::constant(tree.z0);
    let mut margin = f64::INFINITY;
    for lvl in 0..k {
        let parent = &tree.levels[lvl].points[lineage[lvl]];
        let fam = parent.family.as_ref().ok_or(Error::ChainBroken {
            center: parent.center,
        })?;
        let child = &tree.levels[lvl + 1].points[lineage[lvl + 1]];
        let fi = 1 + fam.balls[1..=fam.family]
            .iter()
            .position(|b| b.center == child.center)
            .ok_or(Error::ChainBroken {
                center: child.center,
            })?;
        let chain = fam.chain_to(fi);
        let need = tree.r * tree.eta.powi(lvl as i32 + 1) / 2.0 - g.h();
        for pair in chain.windows(2) {
            let (a, b) = (fam.balls[pair[0]].center, fam.balls[pair[1]].center);
            let seg = geodesic_curve(g, a, b, |v| dd.is_interior(v))
                .ok_or(Error::ChainBroken { center: b })?;
            for &z in &seg.path {
                margin = margin.min(dd.d_omega(z) - need);
            }
            curve = curve.concat(&seg);
        }
    }
    let point = &tree.levels[k].points[i];
    let tail = geodesic_curve(g, point.center, point.vertex, |v| dd.is_interior(v)).ok_or(
        Error::ChainBroken {
            center: point.center,
        },
    )?;
    curve = curve.concat(&tail);
    let c = 4.0 * m as f64;
    let john = verify_john_curve_with_slack(dd, &curve, c, dd.slack().john_len())?;
    let cone = cone_domain(dd, &curve);
    let cone_cert = certify_cone(
        dd,
        &cone,
        tree.z0,
        8.0 * m as f64 + 1.0,
        dd.slack().john_len(),
    )?;
    Ok(CurveCertificate {
        level: k,
        index: i,
        curve,
        m,
        john,
        chain_depth_margin: if k == 0 { 0.0 } else { margin },
        cone: cone_cert,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_only_tree() {
        let t = GenerationTree::from_skeleton(1.0, 0.125, &[vec![(0, 1, None, 3.0)]]).unwrap();
        let m = frostman_weights(&t).unwrap();
        assert_eq!(m.weights, vec![vec![1.0]]);
    }

    #[test]
    fn symmetric_children_split_evenly() {
        let t = GenerationTree::from_skeleton(
            1.0,
            0.125,
            &[
                vec![(0, 0, None, 1.0)],
                vec![(1, 1, Some(0), 5.0), (2, 2, Some(0), 5.0)],
            ],
        )
        .unwrap();
        let m = frostman_weights(&t).unwrap();
        assert_eq!(m.weights[1], vec![0.5, 0.5]);
    }

    #[test]
    fn orphaned_mass_detected() {
        let t = GenerationTree::from_skeleton(
            1.0,
            0.125,
            &[
                vec![(0, 0, None, 1.0)],
                vec![(1, 1, Some(0), 1.0), (2, 2, Some(0), 1.0)],
                vec![(3, 3, Some(0), 1.0)],
            ],
        )
        .unwrap();
        assert!(matches!(
            frostman_weights(&t),
            Err(Error::OrphanedMass {
                vertex: 2,
                level: 1
            })
        ));
    }

    #[test]
    fn resolution_guard() {
        // 200/8 = 25, 200/64 = 3.125, 200/512 < 2
        assert_eq!(resolvable_depth(200.0, 0.125, 1.0, 2.0, 5), 2);
        assert_eq!(resolvable_depth(200.0, 0.125, 1.0, 2.0, 1), 1);
        assert_eq!(resolvable_depth(100.0, 0.125, 1.0, 2.0, 5), 1);
        assert_eq!(resolvable_depth(10.0, 0.125, 1.0, 2.0, 3), 0);
    }
}
