//! Finite geodesic metric measure spaces.
//!
//! A [`SpaceGraph`] is a connected graph with positive edge lengths and
//! positive vertex masses. The metric is the shortest-path length and the
//! measure of a vertex set is the sum of its masses. Grid spaces are built
//! from a boolean raster with 8-neighbour connectivity and octile edge
//! lengths, which distorts planar distances by at most about 8%.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

/// Boolean raster with physical placement. Cell `(row, col)` has its center at
/// `origin + (col * h, row * h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub origin: [f64; 2],
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, fill: bool) -> Self {
        Self {
            width,
            height,
            origin: [0.0, 0.0],
            cells: vec![fill; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        origin: [f64; 2],
        h: f64,
        f: impl Fn([f64; 2]) -> bool,
    ) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let p = [origin[0] + col as f64 * h, origin[1] + row as f64 * h];
                cells.push(f(p));
            }
        }
        Self {
            width,
            height,
            origin,
            cells,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.cells[row * self.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Plain-text grid: `#` marks an inside cell, `.` an outside cell, one row per line.
    pub fn parse_text(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::MaskParse("no rows".into()));
        }
        let width = rows[0].chars().count();
        let mut cells = Vec::with_capacity(width * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::MaskParse(format!(
                    "row {i} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for ch in row.chars() {
                match ch {
                    '#' => cells.push(true),
                    '.' => cells.push(false),
                    other => {
                        return Err(Error::MaskParse(format!("unexpected character {other:?}")))
                    }
                }
            }
        }
        Ok(Self {
            width,
            height: rows.len(),
            origin: [0.0, 0.0],
            cells,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(if self.get(row, col) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    /// Netpbm graymap, plain (`P2`) or raw (`P5`). Pixels brighter than half of
    /// the maximum gray value are inside.
    pub fn parse_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut header = Vec::with_capacity(4);
        while header.len() < 4 {
            // skip whitespace and comments
            while pos < bytes.len() {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else if bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::MaskParse("truncated PGM header".into()));
            }
            header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        let magic = header[0].as_str();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::MaskParse(format!("bad PGM header field {s:?}")))
        };
        let width = parse(&header[1])?;
        let height = parse(&header[2])?;
        let maxval = parse(&header[3])?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::MaskParse(format!("bad maxval {maxval}")));
        }
        let n = width * height;
        let mut values = Vec::with_capacity(n);
        match magic {
            "P2" => {
                let rest = std::str::from_utf8(&bytes[pos..])
                    .map_err(|_| Error::MaskParse("non-ASCII P2 body".into()))?;
                for tok in rest.split_ascii_whitespace().take(n) {
                    values.push(parse(tok)?);
                }
            }
            "P5" => {
                pos += 1; // single whitespace after maxval
                let bpp = if maxval < 256 { 1 } else { 2 };
                let body = &bytes[pos.min(bytes.len())..];
                if body.len() < n * bpp {
                    return Err(Error::MaskParse("truncated P5 body".into()));
                }
                for i in 0..n {
                    let v = if bpp == 1 {
                        body[i] as usize
                    } else {
                        ((body[2 * i] as usize) << 8) | body[2 * i + 1] as usize
                    };
                    values.push(v);
                }
            }
            other => return Err(Error::MaskParse(format!("unsupported magic {other:?}"))),
        }
        if values.len() != n {
            return Err(Error::MaskParse(format!(
                "expected {n} pixels, found {}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            origin: [0.0, 0.0],
            cells: values.into_iter().map(|v| 2 * v > maxval).collect(),
        })
    }
}

/// Per-cell density used to build vertex masses `μ(x) = weight(x) * h²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum WeightFn {
    Uniform {
        #[serde(default = "one")]
        value: f64,
    },
    /// `(|x - center| + offset)^exponent`, an admissible power weight.
    RadialPower {
        center: [f64; 2],
        exponent: f64,
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for WeightFn {
    fn default() -> Self {
        WeightFn::Uniform { value: 1.0 }
    }
}

impl WeightFn {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            WeightFn::Uniform { value } => value,
            WeightFn::RadialPower {
                center,
                exponent,
                offset,
            } => {
                let r = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
                (r + offset).powf(exponent)
            }
        }
    }
}

/// Ball `B(center, radius) = {y : d(center, y) < radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: VertexId,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: VertexId, radius: f64) -> Self {
        Self { center, radius }
    }

    /// `λB`: same center, radius scaled by `λ`.
    pub fn dilate(&self, lambda: f64) -> Self {
        Self {
            center: self.center,
            radius: lambda * self.radius,
        }
    }
}

/// Exponents of the Poincaré inequalities in play. The dilation constant is
/// always 1 on geodesic spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareParams {
    pub p: f64,
    pub q: f64,
    pub q_hat: f64,
    pub kappa: f64,
}

impl PoincareParams {
    pub fn new(p: f64, q: f64, q_hat: f64) -> Self {
        Self {
            p,
            q,
            q_hat,
            kappa: 1.0,
        }
    }

    /// Ordering for the visible-boundary construction: `t < q < p`, `p > 1`.
    pub fn check_visibility(&self, t: f64) -> Vec<String> {
        let mut errs = Vec::new();
        if self.p <= 1.0 {
            errs.push(format!("p = {} must exceed 1", self.p));
        }
        if !(t > 0.0 && t < self.q && self.q < self.p) {
            errs.push(format!(
                "visibility mode needs 0 < t < q < p (t = {t}, q = {}, p = {})",
                self.q, self.p
            ));
        }
        errs
    }

    /// Ordering for the trace theorem: `max(1, t) < p < q_hat < q`.
    pub fn check_trace(&self, t: f64) -> Vec<String> {
        let mut errs = Vec::new();
        if !(t.max(1.0) < self.p && self.p < self.q_hat && self.q_hat < self.q) {
            errs.push(format!(
                "trace mode needs max(1, t) < p < q_hat < q (t = {t}, p = {}, q_hat = {}, q = {})",
                self.p, self.q_hat, self.q
            ));
        }
        if self.kappa != 1.0 {
            errs.push(format!("Poincaré dilation must be 1, got {}", self.kappa));
        }
        errs
    }
}

#[derive(Debug, Clone, Serialize)]
struct GridIndex {
    width: usize,
    height: usize,
    vertex_of: Vec<Option<VertexId>>,
    cell_of: Vec<(usize, usize)>,
}

/// Immutable finite metric measure space.
#[derive(Debug, Clone, Serialize)]
pub struct SpaceGraph {
    coords: Vec<[f64; 2]>,
    mass: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    lengths: Vec<f64>,
    h: f64,
    grid: Option<GridIndex>,
    discarded: usize,
}

/// Result of a (multi-source) shortest-path search.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    pub pred: Vec<Option<VertexId>>,
    /// Source each vertex was reached from (its nearest source, ties by id).
    pub source: Vec<Option<VertexId>>,
}

impl ShortestPaths {
    /// Vertex sequence from the reaching source to `target`, or `None` if unreachable.
    pub fn path_to(&self, target: VertexId) -> Option<Vec<VertexId>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.pred[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: VertexId,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // min-heap on (dist, vertex)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const OFFSETS8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

impl SpaceGraph {
    /// 8-neighbour grid graph over the true cells of `mask`. Only the largest
    /// connected component is kept; [`SpaceGraph::discarded`] reports how many
    /// cells were dropped.
    pub fn build_grid(mask: &Mask, h: f64, weight: &WeightFn) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cell size must be positive, got {h}"
            )));
        }
        let total = mask.count();
        if total == 0 {
            return Err(Error::EmptySpace);
        }
        let (w, ht) = (mask.width, mask.height);
        // label components
        let mut comp = vec![usize::MAX; w * ht];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..w * ht {
            if !mask.cells[start] || comp[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0usize;
            comp[start] = id;
            stack.push(start);
            while let Some(c) = stack.pop() {
                size += 1;
                let (r, col) = (c / w, c % w);
                for (dr, dc) in OFFSETS8 {
                    let (nr, nc) = (r as isize + dr, col as isize + dc);
                    if nr < 0 || nc < 0 || nr >= ht as isize || nc >= w as isize {
                        continue;
                    }
                    let n = nr as usize * w + nc as usize;
                    if mask.cells[n] && comp[n] == usize::MAX {
                        comp[n] = id;
                        stack.push(n);
                    }
                }
            }
            sizes.push(size);
        }
        // first maximum wins, i.e. ties go to the component with the smallest cell index
        let (best, &best_size) =
            sizes.iter().enumerate().fold(
                (0, &0usize),
                |acc, (i, s)| if *s > *acc.1 { (i, s) } else { acc },
            );
        if best_size <= 1 {
            return Err(Error::DegenerateSpace);
        }
        let mut vertex_of = vec![None; w * ht];
        let mut cell_of = Vec::with_capacity(best_size);
        let mut coords = Vec::with_capacity(best_size);
        let mut mass = Vec::with_capacity(best_size);
        for c in 0..w * ht {
            if comp[c] == best {
                let (r, col) = (c / w, c % w);
                vertex_of[c] = Some(coords.len());
                cell_of.push((r, col));
                let p = [
                    mask.origin[0] + col as f64 * h,
                    mask.origin[1] + r as f64 * h,
                ];
                let wt = weight.eval(p);
                if !(wt > 0.0) || !wt.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "weight must be positive and finite, got {wt} at {p:?}"
                    )));
                }
                coords.push(p);
                mass.push(wt * h * h);
            }
        }
        let diag = std::f64::consts::SQRT_2 * h;
        let mut offsets = Vec::with_capacity(coords.len() + 1);
        let mut targets = Vec::with_capacity(coords.len() * 8);
        let mut lengths = Vec::with_capacity(coords.len() * 8);
        offsets.push(0);
        for &(r, col) in &cell_of {
            for (dr, dc) in OFFSETS8 {
                let (nr, nc) = (r as isize + dr, col as isize + dc);
                if nr < 0 || nc < 0 || nr >= ht as isize || nc >= w as isize {
                    continue;
                }
                if let Some(v) = vertex_of[nr as usize * w + nc as usize] {
                    targets.push(v);
                    lengths.push(if dr != 0 && dc != 0 { diag } else { h });
                }
            }
            offsets.push(targets.len());
        }
        Ok(Self {
            coords,
            mass,
            offsets,
            targets,
            lengths,
            h,
            grid: Some(GridIndex {
                width: w,
                height: ht,
                vertex_of,
                cell_of,
            }),
            discarded: total - best_size,
        })
    }

    /// General weighted graph. Edges are undirected `(a, b, length)`.
    pub fn from_edges(
        coords: Vec<[f64; 2]>,
        mass: Vec<f64>,
        edges: &[(VertexId, VertexId, f64)],
        h: f64,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if mass.len() != n {
            return Err(Error::InvalidInput("mass and coords lengths differ".into()));
        }
        if mass.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidInput("vertex masses must be positive".into()));
        }
        let mut adj: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n];
        for &(a, b, len) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidInput(format!("bad edge ({a}, {b})")));
            }
            if !(len > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) has length {len}"
                )));
            }
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut lengths = Vec::new();
        for list in &mut adj {
            list.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
            list.dedup_by_key(|e| e.0);
            for &(v, l) in list.iter() {
                targets.push(v);
                lengths.push(l);
            }
            offsets.push(targets.len());
        }
        let g = Self {
            coords,
            mass,
            offsets,
            targets,
            lengths,
            h,
            grid: None,
            discarded: 0,
        };
        if n > 1
            && g.geodesic_distance(&[0])?
                .dist
                .iter()
                .any(|d| !d.is_finite())
        {
            return Err(Error::InvalidInput("graph is not connected".into()));
        }
        if n == 1 {
            return Err(Error::DegenerateSpace);
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn coords(&self, v: VertexId) -> [f64; 2] {
        self.coords[v]
    }

    pub fn mass(&self, v: VertexId) -> f64 {
        self.mass[v]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mass_of(&self, set: &[VertexId]) -> f64 {
        set.iter().map(|&v| self.mass[v]).sum()
    }

    /// Neighbours of `v` with edge lengths, sorted by neighbour id for grids.
    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        let (a, b) = (self.offsets[v], self.offsets[v + 1]);
        self.targets[a..b]
            .iter()
            .copied()
            .zip(self.lengths[a..b].iter().copied())
    }

    pub fn edge_length(&self, a: VertexId, b: VertexId) -> Option<f64> {
        self.neighbors(a).find(|&(v, _)| v == b).map(|(_, l)| l)
    }

    /// Grid cell `(row, col)` of a vertex, when the space came from a raster.
    pub fn cell_of(&self, v: VertexId) -> Option<(usize, usize)> {
        self.grid.as_ref().map(|g| g.cell_of[v])
    }

    pub fn vertex_at(&self, row: usize, col: usize) -> Option<VertexId> {
        let g = self.grid.as_ref()?;
        if row >= g.height || col >= g.width {
            return None;
        }
        g.vertex_of[row * g.width + col]
    }

    pub fn grid_dims(&self) -> Option<(usize, usize)> {
        self.grid.as_ref().map(|g| (g.width, g.height))
    }

    /// Vertex whose coordinates are closest to `p` in the Euclidean sense (ties by id).
    pub fn nearest_vertex(&self, p: [f64; 2]) -> VertexId {
        let mut best = (f64::INFINITY, 0);
        for (i, c) in self.coords.iter().enumerate() {
            let d = (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Multi-source shortest paths over the whole graph. Unreachable vertices
    /// get `+∞`.
    pub fn geodesic_distance(&self, sources: &[VertexId]) -> Result<ShortestPaths> {
        if sources.is_empty() {
            return Err(Error::InvalidInput("source set is empty".into()));
        }
        Ok(self.shortest_paths_within(sources, |_| true, f64::INFINITY))
    }

    /// Shortest paths through vertices accepted by `allowed` (sources are always
    /// allowed), stopping at distance `cutoff`. Ties between equal-length paths
    /// go to the predecessor with the smaller id.
    pub fn shortest_paths_within(
        &self,
        sources: &[VertexId],
        allowed: impl Fn(VertexId) -> bool,
        cutoff: f64,
    ) -> ShortestPaths {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<VertexId>> = vec![None; n];
        let mut source: Vec<Option<VertexId>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let mut srcs = sources.to_vec();
        srcs.sort_unstable();
        srcs.dedup();
        for &s in &srcs {
            dist[s] = 0.0;
            source[s] = Some(s);
            heap.push(HeapItem {
                dist: 0.0,
                vertex: s,
            });
        }
        while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            for (v, len) in self.neighbors(u) {
                if done[v] || !allowed(v) {
                    continue;
                }
                let nd = d + len;
                if nd > cutoff {
                    continue;
                }
                let better = nd < dist[v] || (nd == dist[v] && pred[v].is_some_and(|p| u < p));
                if better {
                    dist[v] = nd;
                    pred[v] = Some(u);
                    source[v] = source[u];
                    heap.push(HeapItem {
                        dist: nd,
                        vertex: v,
                    });
                }
            }
        }
        ShortestPaths { dist, pred, source }
    }

    pub fn searcher(&self) -> BallSearcher<'_> {
        BallSearcher::new(self)
    }

    /// Exactly `{y : d(center, y) < radius}`, sorted by vertex id.
    pub fn ball_members(&self, ball: &Ball) -> Vec<VertexId> {
        let mut m: Vec<VertexId> = self
            .searcher()
            .within(ball.center, ball.radius)
            .iter()
            .filter(|&&(_, d)| d < ball.radius)
            .map(|&(v, _)| v)
            .collect();
        m.sort_unstable();
        m
    }

    pub fn ball_mass(&self, ball: &Ball) -> f64 {
        self.mass_of(&self.ball_members(ball))
    }

    /// Largest pairwise distance from vertex 0's eccentricity doubled: a cheap
    /// upper bound, and exact for the far vertex's eccentricity on trees.
    pub fn diameter_bound(&self) -> f64 {
        let sp = self.shortest_paths_within(&[0], |_| true, f64::INFINITY);
        let (far, _) =
            sp.dist.iter().enumerate().fold(
                (0, 0.0f64),
                |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
            );
        let sp2 = self.shortest_paths_within(&[far], |_| true, f64::INFINITY);
        sp2.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// Lower estimate of the doubling constant: the largest `μ(2B)/μ(B)` over
    /// the given samples. Samples with `μ(B) = 0` are skipped.
    pub fn doubling_constant(&self, samples: &[(VertexId, f64)]) -> DoublingEstimate {
        let mut s = self.searcher();
        let mut best = DoublingEstimate {
            ratio: 1.0,
            worst: None,
            samples: Vec::with_capacity(samples.len()),
        };
        for &(x, r) in samples {
            let found = s.within(x, 2.0 * r);
            let (mut inner, mut outer) = (0.0, 0.0);
            for &(v, d) in found {
                if d < 2.0 * r {
                    outer += self.mass[v];
                    if d < r {
                        inner += self.mass[v];
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
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingEstimate {
    pub ratio: f64,
    pub worst: Option<(VertexId, f64)>,
    pub samples: Vec<(VertexId, f64, f64)>,
}

/// Upper bound on the number of `separation`-separated points inside a ball
/// of radius `radius` in a space with doubling constant `c_d`.
pub fn packing_bound(c_d: f64, radius: f64, separation: f64) -> f64 {
    let steps = (4.0 * radius / separation + 1.0).log2().ceil().max(0.0);
    c_d.max(1.0).powf(steps)
}

/// Reusable scratch space for bounded Dijkstra searches on one graph.
pub struct BallSearcher<'a> {
    g: &'a SpaceGraph,
    dist: Vec<f64>,
    touched: Vec<VertexId>,
    settled: Vec<(VertexId, f64)>,
    heap: BinaryHeap<HeapItem>,
}

impl<'a> BallSearcher<'a> {
    pub fn new(g: &'a SpaceGraph) -> Self {
        Self {
            g,
            dist: vec![f64::INFINITY; g.len()],
            touched: Vec::new(),
            settled: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Vertices with `d(center, y) <= radius`, in nondecreasing distance order.
    pub fn within(&mut self, center: VertexId, radius: f64) -> &[(VertexId, f64)] {
        self.within_filtered(&[center], radius, |_| true)
    }

    /// Multi-source variant restricted to vertices accepted by `allowed`.
    pub fn within_filtered(
        &mut self,
        sources: &[VertexId],
        radius: f64,
        allowed: impl Fn(VertexId) -> bool,
    ) -> &[(VertexId, f64)] {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
        }
        self.touched.clear();
        self.settled.clear();
        self.heap.clear();
        for &s in sources {
            if self.dist[s] > 0.0 {
                self.dist[s] = 0.0;
                self.touched.push(s);
                self.heap.push(HeapItem {
                    dist: 0.0,
                    vertex: s,
                });
            }
        }
        while let Some(HeapItem { dist: d, vertex: u }) = self.heap.pop() {
            if d > self.dist[u] {
                continue;
            }
            // a vertex can be pushed twice with the same distance
            if self
                .settled
                .last()
                .is_some_and(|&(v, dv)| v == u && dv == d)
            {
                continue;
            }
            self.settled.push((u, d));
            for (v, len) in self.g.neighbors(u) {
                let nd = d + len;
                if nd > radius || nd >= self.dist[v] || !allowed(v) {
                    continue;
                }
                if self.dist[v].is_infinite() {
                    self.touched.push(v);
                }
                self.dist[v] = nd;
                self.heap.push(HeapItem {
                    dist: nd,
                    vertex: v,
                });
            }
        }
        &self.settled
    }

    /// `μ(B(center, radius))` for the open ball.
    pub fn ball_mass(&mut self, center: VertexId, radius: f64) -> f64 {
        let g = self.g;
        self.within(center, radius)
            .iter()
            .filter(|&&(_, d)| d < radius)
            .map(|&(v, _)| g.mass[v])
            .sum()
    }

    /// Distance from the last search's source to `v` (`+∞` if not reached).
    pub fn dist(&self, v: VertexId) -> f64 {
        self.dist[v]
    }
}
