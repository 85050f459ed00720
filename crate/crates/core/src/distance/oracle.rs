//! Graph shortest-path distance oracle.
//!
//! Nodes are the in-domain points of a square grid of spacing `h` plus the
//! boundary mesh. Grid nodes are joined along the primitive offsets of the
//! `k`-ring (32 offsets for `k = 3`); boundary nodes are joined to every node
//! within `k h`. Edge costs are Finsler lengths of straight segments, so
//! directed costs follow non-reversible norms. Dijkstra runs use any-angle
//! parent shortcuts: a node may also be reached by a straight segment from
//! the parent of the node being expanded. For norms that do not depend on
//! the base point this makes straight-line distances exact; in general every
//! reported value is the length of an admissible polygonal path.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::minkowski::FiberNorm;
use crate::numeric::{distance, GAUSS2};

/// Tolerance floor for oracle comparisons on curved metrics (relative).
pub const EPS_FLOOR: f64 = 2e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Grid spacing.
    pub h: f64,
    /// Neighborhood ring.
    #[serde(default = "default_ring")]
    pub ring: usize,
    #[serde(default = "default_true")]
    pub any_angle: bool,
}

fn default_ring() -> usize {
    3
}

fn default_true() -> bool {
    true
}

impl OracleOptions {
    pub fn new(h: f64) -> Self {
        OracleOptions {
            h,
            ring: 3,
            any_angle: true,
        }
    }
}

/// Which distance a run computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunDirection {
    /// `d(source, .)`
    Forward,
    /// `d(., target)`
    Backward,
}

/// Primitive offsets `(a, b)` with `max(|a|, |b|) <= ring`.
pub fn ring_offsets(ring: usize) -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let k = ring as i64;
    let mut out = Vec::new();
    for a in -k..=k {
        for b in -k..=k {
            if (a, b) != (0, 0) && gcd(a, b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
struct Csr {
    start: Vec<usize>,
    edges: Vec<(u32, f64)>,
}

impl Csr {
    fn build(n: usize, mut list: Vec<(u32, u32, f64)>) -> Self {
        list.sort_unstable_by_key(|e| (e.0, e.1));
        let mut start = vec![0usize; n + 1];
        for e in &list {
            start[e.0 as usize + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        Csr {
            start,
            edges: list.into_iter().map(|(_, b, c)| (b, c)).collect(),
        }
    }

    fn of(&self, u: usize) -> &[(u32, f64)] {
        &self.edges[self.start[u]..self.start[u + 1]]
    }
}

#[derive(Clone, Debug)]
pub struct DistanceOracle {
    norm: FiberNorm,
    domain: Domain,
    opts: OracleOptions,
    nodes: Vec<[f64; 2]>,
    origin: [f64; 2],
    nx: usize,
    ny: usize,
    grid: Vec<u32>,
    boundary: Vec<usize>,
    out: Csr,
    inc: Csr,
    homogeneous: bool,
    min_speed: f64,
    connect_radius: f64,
    eps: f64,
}

const NONE: u32 = u32::MAX;

#[derive(PartialEq)]
struct Item(f64, u32);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl DistanceOracle {
    pub fn new(norm: &FiberNorm, domain: &Domain, opts: OracleOptions) -> Result<Self> {
        if norm.dim() != 2 {
            return Err(Error::Input("the distance oracle is planar".into()));
        }
        if !(opts.h > 0.0) || opts.ring == 0 {
            return Err(Error::Input("oracle resolution must be positive".into()));
        }
        let h = opts.h;
        let (lo, hi) = domain.bounding_box();
        let nx = ((hi[0] - lo[0]) / h).ceil() as usize + 1;
        let ny = ((hi[1] - lo[1]) / h).ceil() as usize + 1;
        let origin = lo;
        let mut nodes = Vec::new();
        let mut grid = vec![NONE; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
                if domain.clearance(&p) > 1e-3 * h {
                    grid[j * nx + i] = nodes.len() as u32;
                    nodes.push(p);
                }
            }
        }
        let n_grid = nodes.len();
        let mut boundary = Vec::new();
        for b in domain.boundary_mesh() {
            boundary.push(nodes.len());
            nodes.push(b.point);
        }
        let homogeneous = norm.is_homogeneous_in_space();
        let min_speed = nodes
            .iter()
            .step_by((nodes.len() / 2000).max(1))
            .map(|x| norm.speed_bounds(x).0)
            .fold(f64::INFINITY, f64::min)
            * 0.9;
        let mut o = DistanceOracle {
            norm: norm.clone(),
            domain: domain.clone(),
            opts: opts.clone(),
            nodes,
            origin,
            nx,
            ny,
            grid,
            boundary,
            out: Csr {
                start: vec![],
                edges: vec![],
            },
            inc: Csr {
                start: vec![],
                edges: vec![],
            },
            homogeneous,
            min_speed,
            connect_radius: opts.ring as f64 * h * 1.01,
            eps: EPS_FLOOR,
        };
        let mut list: Vec<(u32, u32, f64)> = Vec::new();
        let offsets = ring_offsets(opts.ring);
        let offset_cost: Vec<f64> = offsets
            .iter()
            .map(|&(a, b)| norm.value(&[0.0, 0.0], &[a as f64 * h, b as f64 * h]))
            .collect();
        for j in 0..ny {
            for i in 0..nx {
                let u = o.grid[j * nx + i];
                if u == NONE {
                    continue;
                }
                for (k, &(a, b)) in offsets.iter().enumerate() {
                    let (ii, jj) = (i as i64 + a, j as i64 + b);
                    if ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    let v = o.grid[jj as usize * nx + ii as usize];
                    if v == NONE {
                        continue;
                    }
                    let (pu, pv) = (o.nodes[u as usize], o.nodes[v as usize]);
                    if !o.visible(&pu, &pv) {
                        continue;
                    }
                    let c = if homogeneous {
                        offset_cost[k]
                    } else {
                        o.segment_cost(&pu, &pv)
                    };
                    list.push((u, v, c));
                }
            }
        }
        for bi in 0..o.boundary.len() {
            let b = o.boundary[bi];
            let pb = o.nodes[b];
            let mut near = o.grid_near(&pb);
            near.extend(o.boundary.iter().copied().filter(|&c| c != b && distance(&o.nodes[c], &pb) <= o.connect_radius));
            for v in near {
                let pv = o.nodes[v];
                if !o.visible(&pb, &pv) {
                    continue;
                }
                list.push((b as u32, v as u32, o.segment_cost(&pb, &pv)));
                if v < n_grid {
                    list.push((v as u32, b as u32, o.segment_cost(&pv, &pb)));
                }
            }
        }
        if list.iter().any(|e| !(e.2 > 0.0)) {
            return Err(Error::Input("non-positive edge cost".into()));
        }
        let n = o.nodes.len();
        let rev: Vec<(u32, u32, f64)> = list.iter().map(|&(a, b, c)| (b, a, c)).collect();
        o.out = Csr::build(n, list);
        o.inc = Csr::build(n, rev);
        Ok(o)
    }

    pub fn norm(&self) -> &FiberNorm {
        &self.norm
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn options(&self) -> &OracleOptions {
        &self.opts
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.edges.len()
    }

    /// Relative tolerance `eps_or` used for comparisons against this oracle.
    pub fn tolerance(&self) -> f64 {
        self.eps
    }

    pub fn set_tolerance(&mut self, eps: f64) {
        self.eps = eps;
    }

    /// Absolute tolerance for a distance of size `d`.
    pub fn abs_tolerance(&self, d: f64) -> f64 {
        self.eps * d.abs() + 1e-9
    }

    /// Boundary node ids, in mesh order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    fn visible(&self, a: &[f64], b: &[f64]) -> bool {
        self.domain.segment_inside(a, b, 0.5 * self.opts.h, 0.1 * self.opts.h)
    }

    fn grid_near(&self, p: &[f64]) -> Vec<usize> {
        let h = self.opts.h;
        let r = self.connect_radius;
        let i0 = (((p[0] - r - self.origin[0]) / h).floor().max(0.0)) as usize;
        let j0 = (((p[1] - r - self.origin[1]) / h).floor().max(0.0)) as usize;
        let i1 = (((p[0] + r - self.origin[0]) / h).ceil() as usize).min(self.nx - 1);
        let j1 = (((p[1] + r - self.origin[1]) / h).ceil() as usize).min(self.ny - 1);
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let u = self.grid[j * self.nx + i];
                if u != NONE && distance(&self.nodes[u as usize], p) <= r {
                    out.push(u as usize);
                }
            }
        }
        out
    }

    /// Nodes (grid and boundary) within the connection radius of `p`.
    fn near(&self, p: &[f64]) -> Vec<usize> {
        let mut v = self.grid_near(p);
        v.extend(
            self.boundary
                .iter()
                .copied()
                .filter(|&b| distance(&self.nodes[b], p) <= self.connect_radius),
        );
        v
    }

    /// Finsler length of the straight segment `a -> b`: exact for
    /// homogeneous norms, two-point Gauss on pieces of length at most `4 h`
    /// otherwise.
    pub fn segment_cost(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = [b[0] - a[0], b[1] - a[1]];
        if self.homogeneous {
            return self.norm.value(a, &d);
        }
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let pieces = (len / (4.0 * self.opts.h)).ceil().max(1.0) as usize;
        let step = [d[0] / pieces as f64, d[1] / pieces as f64];
        let mut s = 0.0;
        for k in 0..pieces {
            for (t, w) in GAUSS2 {
                let tt = k as f64 + t;
                let x = [a[0] + tt * step[0], a[1] + tt * step[1]];
                s += w * self.norm.value(&x, &step);
            }
        }
        s
    }

    fn position(&self, id: u32, extra: &[[f64; 2]]) -> [f64; 2] {
        let i = id as usize;
        if i < self.nodes.len() {
            self.nodes[i]
        } else {
            extra[i - self.nodes.len()]
        }
    }

    fn run(&self, dir: RunDirection, seeds: Vec<(usize, f64, u32)>, extra: Vec<[f64; 2]>) -> SourceField {
        let n = self.nodes.len();
        let mut g = vec![f64::INFINITY; n + extra.len()];
        let mut parent = vec![NONE; n + extra.len()];
        for (k, _) in extra.iter().enumerate() {
            g[n + k] = 0.0;
            parent[n + k] = (n + k) as u32;
        }
        let mut heap = BinaryHeap::new();
        for (u, d, p) in seeds {
            if d < g[u] {
                g[u] = d;
                parent[u] = p;
                heap.push(Item(d, u as u32));
            }
        }
        let mut done = vec![false; n];
        while let Some(Item(d, u)) = heap.pop() {
            let u = u as usize;
            if done[u] || d > g[u] {
                continue;
            }
            done[u] = true;
            let pu = parent[u];
            let ppos = self.position(pu, &extra);
            let edges = match dir {
                RunDirection::Forward => self.out.of(u),
                RunDirection::Backward => self.inc.of(u),
            };
            for &(v, c) in edges {
                let vi = v as usize;
                if done[vi] {
                    continue;
                }
                let mut best = d + c;
                let mut bp = u as u32;
                if self.opts.any_angle && pu != u as u32 {
                    let gp = g[pu as usize];
                    let vpos = self.nodes[vi];
                    let lower = gp + self.min_speed * distance(&ppos, &vpos);
                    if lower < best && lower < g[vi] && self.visible(&ppos, &vpos) {
                        let alt = match dir {
                            RunDirection::Forward => gp + self.segment_cost(&ppos, &vpos),
                            RunDirection::Backward => gp + self.segment_cost(&vpos, &ppos),
                        };
                        if alt < best {
                            best = alt;
                            bp = pu;
                        }
                    }
                }
                if best < g[vi] {
                    g[vi] = best;
                    parent[vi] = bp;
                    heap.push(Item(best, v));
                }
            }
        }
        SourceField {
            dir,
            g,
            parent,
            extra,
        }
    }

    /// Distances from the point `x`.
    pub fn forward_from(&self, x: &[f64]) -> Result<SourceField> {
        self.point_run(RunDirection::Forward, x)
    }

    /// Distances to the point `x`.
    pub fn backward_to(&self, x: &[f64]) -> Result<SourceField> {
        self.point_run(RunDirection::Backward, x)
    }

    fn point_run(&self, dir: RunDirection, x: &[f64]) -> Result<SourceField> {
        if self.domain.clearance(x) < -1e-9 {
            return Err(Error::Input(format!("point {x:?} outside the domain")));
        }
        let p = [x[0], x[1]];
        let src = self.nodes.len() as u32;
        let seeds: Vec<(usize, f64, u32)> = self
            .near(&p)
            .into_iter()
            .filter(|&w| self.visible(&p, &self.nodes[w]))
            .map(|w| {
                let c = match dir {
                    RunDirection::Forward => self.segment_cost(&p, &self.nodes[w]),
                    RunDirection::Backward => self.segment_cost(&self.nodes[w], &p),
                };
                (w, c, src)
            })
            .collect();
        if seeds.is_empty() {
            return Err(Error::Topology(format!("point {x:?} not connected to the graph")));
        }
        Ok(self.run(dir, seeds, vec![p]))
    }

    /// Distances to the boundary mesh: `min_z d(., z)`.
    pub fn to_boundary(&self) -> SourceField {
        let seeds = self.boundary.iter().map(|&b| (b, 0.0, b as u32)).collect();
        self.run(RunDirection::Backward, seeds, vec![])
    }

    /// Directed distance `d(a, b)`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.forward_from(a)?.query(self, b)
    }
}

/// Result of one Dijkstra run; evaluates distances at arbitrary points.
#[derive(Clone, Debug)]
pub struct SourceField {
    pub dir: RunDirection,
    g: Vec<f64>,
    parent: Vec<u32>,
    extra: Vec<[f64; 2]>,
}

impl SourceField {
    /// Value at graph node `i`.
    pub fn at_node(&self, i: usize) -> f64 {
        self.g[i]
    }

    /// Values on the boundary mesh, in mesh order.
    pub fn boundary_values(&self, oracle: &DistanceOracle) -> Vec<f64> {
        oracle.boundary.iter().map(|&b| self.g[b]).collect()
    }

    /// Distance between the run's source set and the point `q`
    /// (`d(source, q)` forward, `d(q, target)` backward).
    pub fn query(&self, oracle: &DistanceOracle, q: &[f64]) -> Result<f64> {
        let p = [q[0], q[1]];
        let seg = |a: &[f64; 2], b: &[f64; 2]| match self.dir {
            RunDirection::Forward => oracle.segment_cost(a, b),
            RunDirection::Backward => oracle.segment_cost(b, a),
        };
        let mut best = f64::INFINITY;
        for s in &self.extra {
            if oracle.visible(s, &p) {
                best = best.min(seg(s, &p));
            }
        }
        let mut tried = std::collections::HashSet::new();
        for w in oracle.near(&p) {
            if !self.g[w].is_finite() || !oracle.visible(&oracle.nodes[w], &p) {
                continue;
            }
            best = best.min(self.g[w] + seg(&oracle.nodes[w], &p));
            let pw = self.parent[w];
            if oracle.opts.any_angle && pw != NONE && pw as usize != w && tried.insert(pw) {
                let pp = oracle.position(pw, &self.extra);
                let gp = self.g[pw as usize];
                if gp + oracle.min_speed * distance(&pp, &p) < best && oracle.visible(&pp, &p) {
                    best = best.min(gp + seg(&pp, &p));
                }
            }
        }
        if !best.is_finite() {
            return Err(Error::Topology(format!("point {q:?} unreachable in the oracle graph")));
        }
        Ok(best)
    }
}
