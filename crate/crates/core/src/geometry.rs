//! Domains, uniform grids and the Dirichlet–Neumann boundary partition.
//!
//! Rectangles are anchored at the origin, `[0, lx] × [0, ly]`. Each edge is
//! parametrized by arclength along its coordinate axis (`t = x` on the bottom
//! and top edges, `t = y` on the left and right edges). Internally the
//! boundary is also described by a single counterclockwise perimeter
//! coordinate starting at the origin, which is what makes nesting, merging
//! and interface detection one-dimensional interval bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when comparing boundary coordinates.
const COORD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Rectangle { .. } => 2,
        }
    }

    /// `|∂Ω|`: counting measure of `{a, b}` in 1D, perimeter in 2D.
    pub fn boundary_measure(&self) -> f64 {
        match *self {
            DomainSpec::Interval { .. } => 2.0,
            DomainSpec::Rectangle { lx, ly } => 2.0 * (lx + ly),
        }
    }

    /// Lebesgue measure `|Ω|`.
    pub fn volume(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { lx, ly } => lx * ly,
        }
    }

    pub fn edges(&self) -> &'static [Edge] {
        match self {
            DomainSpec::Interval { .. } => &[Edge::Left, Edge::Right],
            DomainSpec::Rectangle { .. } => &[Edge::Bottom, Edge::Right, Edge::Top, Edge::Left],
        }
    }

    /// Arclength of an edge; zero for the endpoints of an interval.
    pub fn edge_length(&self, edge: Edge) -> f64 {
        match *self {
            DomainSpec::Interval { .. } => 0.0,
            DomainSpec::Rectangle { lx, ly } => match edge {
                Edge::Bottom | Edge::Top => lx,
                Edge::Left | Edge::Right => ly,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DomainSpec::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && b > a) {
                    return Err(Error::InvalidDomain(format!("interval needs b > a, got a = {a}, b = {b}")));
                }
            }
            DomainSpec::Rectangle { lx, ly } => {
                if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "rectangle needs positive sides, got lx = {lx}, ly = {ly}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Counterclockwise perimeter coordinate of the point at arclength `t`
    /// on `edge` (rectangles only).
    fn perimeter_coord(&self, edge: Edge, t: f64) -> f64 {
        let DomainSpec::Rectangle { lx, ly } = *self else {
            return 0.0;
        };
        match edge {
            Edge::Bottom => t,
            Edge::Right => lx + t,
            Edge::Top => lx + ly + (lx - t),
            Edge::Left => 2.0 * lx + ly + (ly - t),
        }
    }

    /// Splits a perimeter interval `[p0, p1] ⊂ [0, P]` into edge arcs.
    fn arcs_from_perimeter(&self, p0: f64, p1: f64) -> Vec<BoundaryArc> {
        let DomainSpec::Rectangle { lx, ly } = *self else {
            return Vec::new();
        };
        let perimeter = self.boundary_measure();
        let breaks = [0.0, lx, lx + ly, 2.0 * lx + ly, perimeter];
        let edges = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];
        let mut out = Vec::new();
        for (k, &edge) in edges.iter().enumerate() {
            let lo = p0.max(breaks[k]);
            let hi = p1.min(breaks[k + 1]);
            if hi - lo <= COORD_EPS * perimeter {
                continue;
            }
            let (u0, u1) = (lo - breaks[k], hi - breaks[k]);
            let len = breaks[k + 1] - breaks[k];
            let (t0, t1) = match edge {
                Edge::Bottom | Edge::Right => (u0, u1),
                Edge::Top | Edge::Left => (len - u1, len - u0),
            };
            out.push(BoundaryArc {
                edge,
                t0: t0.max(0.0),
                t1: t1.min(len),
            });
        }
        out
    }
}

/// Validates a domain description.
pub fn make_domain(spec: DomainSpec) -> Result<DomainSpec> {
    spec.validate()?;
    Ok(spec)
}

/// Boundary piece identifier. For intervals only `Left` (the point `a`) and
/// `Right` (the point `b`) exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub fn name(self) -> &'static str {
        match self {
            Edge::Bottom => "bottom",
            Edge::Right => "right",
            Edge::Top => "top",
            Edge::Left => "left",
        }
    }

    pub fn parse(s: &str) -> Option<Edge> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bottom" | "b" => Some(Edge::Bottom),
            "right" | "r" => Some(Edge::Right),
            "top" | "t" => Some(Edge::Top),
            "left" | "l" => Some(Edge::Left),
            _ => None,
        }
    }
}

/// A closed piece `[t0, t1]` of one edge. On intervals an arc is a single
/// endpoint with `t0 = t1 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub edge: Edge,
    pub t0: f64,
    pub t1: f64,
}

impl BoundaryArc {
    pub fn new(edge: Edge, t0: f64, t1: f64) -> Self {
        BoundaryArc { edge, t0, t1 }
    }

    /// Endpoint of an interval.
    pub fn point(edge: Edge) -> Self {
        BoundaryArc { edge, t0: 0.0, t1: 0.0 }
    }

    /// The whole edge.
    pub fn full(domain: &DomainSpec, edge: Edge) -> Self {
        BoundaryArc {
            edge,
            t0: 0.0,
            t1: domain.edge_length(edge),
        }
    }

    fn measure(&self, domain: &DomainSpec) -> f64 {
        match domain {
            DomainSpec::Interval { .. } => 1.0,
            DomainSpec::Rectangle { .. } => self.t1 - self.t0,
        }
    }

    fn validate(&self, domain: &DomainSpec) -> Result<()> {
        match domain {
            DomainSpec::Interval { .. } => {
                if !matches!(self.edge, Edge::Left | Edge::Right) {
                    return Err(Error::InvalidPartition(format!(
                        "interval has no `{}` endpoint",
                        self.edge.name()
                    )));
                }
            }
            DomainSpec::Rectangle { .. } => {
                let len = domain.edge_length(self.edge);
                let ok = self.t0.is_finite()
                    && self.t1.is_finite()
                    && self.t0 >= -COORD_EPS * len
                    && self.t0 < self.t1
                    && self.t1 <= len * (1.0 + COORD_EPS);
                if !ok {
                    return Err(Error::InvalidPartition(format!(
                        "arc [{}, {}] on {} edge outside [0, {len}] or empty",
                        self.t0,
                        self.t1,
                        self.edge.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// `true` if `other` lies inside `self` (same edge, interval containment).
    pub fn contains(&self, other: &BoundaryArc, tol: f64) -> bool {
        self.edge == other.edge && self.t0 <= other.t0 + tol && other.t1 <= self.t1 + tol
    }
}

/// `Σ_D` as a list of closed arcs; `Σ_N` is the complement in `∂Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPartition {
    pub domain: DomainSpec,
    pub dirichlet: Vec<BoundaryArc>,
}

impl BoundaryPartition {
    /// Validates arcs against the domain. Empty and full Dirichlet sets are
    /// representable so the corresponding error paths downstream can be hit.
    pub fn new(domain: DomainSpec, dirichlet: Vec<BoundaryArc>) -> Result<Self> {
        domain.validate()?;
        for arc in &dirichlet {
            arc.validate(&domain)?;
        }
        for (i, a) in dirichlet.iter().enumerate() {
            for b in &dirichlet[i + 1..] {
                if a.edge != b.edge {
                    continue;
                }
                let overlap = a.t1.min(b.t1) - a.t0.max(b.t0);
                let dup_point = domain.dim() == 1;
                if dup_point || overlap > COORD_EPS * domain.boundary_measure() {
                    return Err(Error::InvalidPartition(format!(
                        "overlapping Dirichlet arcs on {} edge",
                        a.edge.name()
                    )));
                }
            }
        }
        Ok(BoundaryPartition { domain, dirichlet })
    }

    /// Pure Dirichlet data on the whole boundary.
    pub fn full(domain: DomainSpec) -> Result<Self> {
        let arcs = match domain {
            DomainSpec::Interval { .. } => vec![BoundaryArc::point(Edge::Left), BoundaryArc::point(Edge::Right)],
            DomainSpec::Rectangle { .. } => domain.edges().iter().map(|&e| BoundaryArc::full(&domain, e)).collect(),
        };
        BoundaryPartition::new(domain, arcs)
    }

    /// `|Σ_D|`, zero for an empty set.
    pub fn measure(&self) -> f64 {
        self.dirichlet.iter().map(|a| a.measure(&self.domain)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.dirichlet.is_empty()
    }

    pub fn is_full(&self) -> bool {
        let total = self.domain.boundary_measure();
        (self.measure() - total).abs() <= COORD_EPS * total * 10.0
    }

    pub fn has_endpoint(&self, edge: Edge) -> bool {
        self.dirichlet.iter().any(|a| a.edge == edge)
    }

    /// Dirichlet arcs as merged, sorted perimeter intervals (rectangles).
    fn perimeter_intervals(&self) -> Vec<(f64, f64)> {
        let mut iv: Vec<(f64, f64)> = self
            .dirichlet
            .iter()
            .map(|a| {
                let p0 = self.domain.perimeter_coord(a.edge, a.t0);
                let p1 = self.domain.perimeter_coord(a.edge, a.t1);
                (p0.min(p1), p0.max(p1))
            })
            .collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = COORD_EPS * self.domain.boundary_measure();
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (lo, hi) in iv {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + tol => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged
    }

    /// Perimeter distance from boundary coordinate `p` to the closed set `Σ_D`.
    fn perimeter_distance(&self, p: f64) -> f64 {
        let perimeter = self.domain.boundary_measure();
        let mut best = f64::INFINITY;
        for (lo, hi) in self.perimeter_intervals() {
            for shift in [-perimeter, 0.0, perimeter] {
                let q = p + shift;
                let d = if q < lo {
                    lo - q
                } else if q > hi {
                    q - hi
                } else {
                    0.0
                };
                best = best.min(d);
            }
        }
        best
    }

    /// The interface `Γ = Σ_D ∩ closure(Σ_N)`: endpoints of the merged
    /// Dirichlet arcs, as points in the plane. Empty in 1D and for the
    /// empty or full Dirichlet set.
    pub fn interface_points(&self) -> Vec<[f64; 2]> {
        let DomainSpec::Rectangle { .. } = self.domain else {
            return Vec::new();
        };
        if self.is_full() {
            return Vec::new();
        }
        let perimeter = self.domain.boundary_measure();
        let mut iv = self.perimeter_intervals();
        // wrap-around join at the origin
        if iv.len() > 1 {
            let first = iv[0];
            let last = *iv.last().unwrap();
            if first.0 <= COORD_EPS * perimeter && last.1 >= perimeter * (1.0 - COORD_EPS) {
                iv.pop();
                iv[0] = (last.0 - perimeter, first.1);
            }
        }
        let mut pts = Vec::new();
        for (lo, hi) in iv {
            pts.push(self.domain.perimeter_point(lo.rem_euclid(perimeter)));
            pts.push(self.domain.perimeter_point(hi.rem_euclid(perimeter)));
        }
        pts
    }
}

impl DomainSpec {
    /// Planar point at counterclockwise perimeter coordinate `p`.
    pub fn perimeter_point(&self, p: f64) -> [f64; 2] {
        match *self {
            DomainSpec::Interval { a, b } => [if p < 0.5 { a } else { b }, 0.0],
            DomainSpec::Rectangle { lx, ly } => {
                if p <= lx {
                    [p, 0.0]
                } else if p <= lx + ly {
                    [lx, p - lx]
                } else if p <= 2.0 * lx + ly {
                    [lx - (p - lx - ly), ly]
                } else {
                    [0.0, ly - (p - 2.0 * lx - ly)]
                }
            }
        }
    }
}

/// `|Σ_D|` of a partition; an empty Dirichlet set is rejected because the
/// measure must be positive.
pub fn boundary_measure(part: &BoundaryPartition) -> Result<f64> {
    if part.is_empty() {
        return Err(Error::InvalidPartition("Dirichlet set is empty; alpha must be positive".into()));
    }
    Ok(part.measure())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Clockwise,
    CounterClockwise,
}

/// Nested family `α ↦ Σ_D(α)`: a single arc of length `α` grown from a fixed
/// anchor point in a fixed direction along the perimeter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingFamily {
    pub domain: DomainSpec,
    pub anchor_edge: Edge,
    pub anchor_t: f64,
    pub direction: Direction,
    /// Lower end `ε` of the admissible measure range.
    pub epsilon: f64,
}

impl MovingFamily {
    pub fn new(domain: DomainSpec, anchor_edge: Edge, anchor_t: f64, direction: Direction, epsilon: f64) -> Result<Self> {
        domain.validate()?;
        if domain.dim() != 2 {
            return Err(Error::InvalidDomain("moving families are only defined on rectangles".into()));
        }
        let len = domain.edge_length(anchor_edge);
        if !(0.0..=len).contains(&anchor_t) {
            return Err(Error::InvalidPartition(format!("anchor t = {anchor_t} outside [0, {len}]")));
        }
        let total = domain.boundary_measure();
        if !(epsilon > 0.0 && epsilon <= total) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, {total}]")));
        }
        Ok(MovingFamily {
            domain,
            anchor_edge,
            anchor_t,
            direction,
            epsilon,
        })
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        (self.epsilon, self.domain.boundary_measure())
    }

    /// `Σ_D(α)` with `|Σ_D(α)| = α`.
    pub fn partition_at(&self, alpha: f64) -> Result<BoundaryPartition> {
        let (min, max) = self.alpha_range();
        if !(alpha >= min && alpha <= max * (1.0 + COORD_EPS)) {
            return Err(Error::AlphaOutOfRange { alpha, min, max });
        }
        if alpha >= max {
            return BoundaryPartition::full(self.domain);
        }
        let anchor = self.domain.perimeter_coord(self.anchor_edge, self.anchor_t);
        let (p0, p1) = match self.direction {
            Direction::CounterClockwise => (anchor, anchor + alpha),
            Direction::Clockwise => (anchor - alpha, anchor),
        };
        let mut arcs = Vec::new();
        // unwrap [p0, p1] into pieces of [0, P]
        for shift in [-max, 0.0, max] {
            let lo = (p0 + shift).max(0.0);
            let hi = (p1 + shift).min(max);
            if hi > lo {
                arcs.extend(self.domain.arcs_from_perimeter(lo, hi));
            }
        }
        // pieces split at the origin may land on the same edge; merge them
        arcs.sort_by(|a, b| (a.edge as u8, a.t0).partial_cmp(&(b.edge as u8, b.t0)).unwrap());
        let mut merged: Vec<BoundaryArc> = Vec::new();
        for arc in arcs {
            match merged.last_mut() {
                Some(last) if last.edge == arc.edge && arc.t0 <= last.t1 + COORD_EPS * max => {
                    last.t1 = last.t1.max(arc.t1)
                }
                _ => merged.push(arc),
            }
        }
        BoundaryPartition::new(self.domain, merged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeTag {
    Interior,
    Neumann,
    Dirichlet,
    /// Dirichlet node adjacent along the boundary to a Neumann node.
    Interface,
}

impl NodeTag {
    /// Interface nodes belong to the closed set `Σ_D` and are eliminated.
    pub fn is_dirichlet(self) -> bool {
        matches!(self, NodeTag::Dirichlet | NodeTag::Interface)
    }
}

/// Uniform tensor grid. Node `(ix, iy)` has index `ix + iy * nx`; in 1D
/// `ny = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: DomainSpec,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub tags: Vec<NodeTag>,
}

/// Uniform grid with `n` nodes per axis. Boundary nodes start out NEUMANN.
pub fn discretize(spec: DomainSpec, n: usize) -> Result<Grid> {
    spec.validate()?;
    if n < 3 {
        return Err(Error::TooCoarse { n });
    }
    let (nx, ny, hx, hy) = match spec {
        DomainSpec::Interval { a, b } => (n, 1, (b - a) / (n - 1) as f64, 0.0),
        DomainSpec::Rectangle { lx, ly } => (n, n, lx / (n - 1) as f64, ly / (n - 1) as f64),
    };
    let mut grid = Grid {
        domain: spec,
        nx,
        ny,
        hx,
        hy,
        tags: vec![NodeTag::Interior; nx * ny],
    };
    for i in 0..grid.len() {
        if grid.is_boundary(i) {
            grid.tags[i] = NodeTag::Neumann;
        }
    }
    Ok(grid)
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + iy * self.nx
    }

    pub fn coord(&self, i: usize) -> [f64; 2] {
        let (ix, iy) = (i % self.nx, i / self.nx);
        match self.domain {
            DomainSpec::Interval { a, .. } => [a + ix as f64 * self.hx, 0.0],
            DomainSpec::Rectangle { .. } => [ix as f64 * self.hx, iy as f64 * self.hy],
        }
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        let (ix, iy) = (i % self.nx, i / self.nx);
        match self.domain {
            DomainSpec::Interval { .. } => ix == 0 || ix == self.nx - 1,
            DomainSpec::Rectangle { .. } => ix == 0 || iy == 0 || ix == self.nx - 1 || iy == self.ny - 1,
        }
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    /// Nodes not eliminated by the Dirichlet condition.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.tags[i].is_dirichlet()).collect()
    }

    pub fn dirichlet_count(&self) -> usize {
        self.tags.iter().filter(|t| t.is_dirichlet()).count()
    }

    /// Largest grid spacing.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    /// Trapezoidal quadrature weights (also the lumped mass).
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let wx = trapezoid_1d(self.nx, self.hx);
        match self.domain {
            DomainSpec::Interval { .. } => wx,
            DomainSpec::Rectangle { .. } => {
                let wy = trapezoid_1d(self.ny, self.hy);
                let mut w = Vec::with_capacity(self.len());
                for wyj in &wy {
                    for wxi in &wx {
                        w.push(wxi * wyj);
                    }
                }
                w
            }
        }
    }

    /// Perimeter coordinate of a boundary node together with the snapping
    /// tolerance (half the spacing along its edge).
    fn boundary_coord(&self, i: usize) -> (f64, f64) {
        let [x, y] = self.coord(i);
        let DomainSpec::Rectangle { lx, ly } = self.domain else {
            return (0.0, 0.5 * self.hx);
        };
        let (ix, iy) = (i % self.nx, i / self.nx);
        let on_x_edge = iy == 0 || iy == self.ny - 1;
        let on_y_edge = ix == 0 || ix == self.nx - 1;
        let tol = match (on_x_edge, on_y_edge) {
            (true, true) => 0.5 * self.hx.min(self.hy),
            (true, false) => 0.5 * self.hx,
            _ => 0.5 * self.hy,
        };
        let p = if iy == 0 {
            x
        } else if ix == self.nx - 1 {
            lx + y
        } else if iy == self.ny - 1 {
            lx + ly + (lx - x)
        } else {
            2.0 * lx + ly + (ly - y)
        };
        (p, tol)
    }
}

fn trapezoid_1d(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 1 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    } else {
        w[0] = 1.0;
    }
    w
}

/// Tags every boundary node from the partition. A node within half a grid
/// spacing of `Σ_D` (ties included) is DIRICHLET; Dirichlet nodes with a
/// Neumann neighbour along the boundary become INTERFACE.
pub fn classify_boundary_nodes(grid: &Grid, part: &BoundaryPartition) -> Grid {
    let mut out = grid.clone();
    for i in out.boundary_nodes() {
        out.tags[i] = NodeTag::Neumann;
    }
    match grid.domain {
        DomainSpec::Interval { .. } => {
            let last = grid.nx - 1;
            if part.has_endpoint(Edge::Left) {
                out.tags[0] = NodeTag::Dirichlet;
            }
            if part.has_endpoint(Edge::Right) {
                out.tags[last] = NodeTag::Dirichlet;
            }
        }
        DomainSpec::Rectangle { .. } => {
            if part.is_empty() {
                return out;
            }
            let mut ring: Vec<(f64, usize)> = Vec::new();
            for i in grid.boundary_nodes() {
                let (p, tol) = grid.boundary_coord(i);
                if part.perimeter_distance(p) <= tol * (1.0 + 1e-9) {
                    out.tags[i] = NodeTag::Dirichlet;
                }
                ring.push((p, i));
            }
            ring.sort_by(|a, b| a.0.total_cmp(&b.0));
            let m = ring.len();
            let mut interface = Vec::new();
            for k in 0..m {
                let i = ring[k].1;
                if out.tags[i] != NodeTag::Dirichlet {
                    continue;
                }
                let prev = ring[(k + m - 1) % m].1;
                let next = ring[(k + 1) % m].1;
                if out.tags[prev] == NodeTag::Neumann || out.tags[next] == NodeTag::Neumann {
                    interface.push(i);
                }
            }
            for i in interface {
                out.tags[i] = NodeTag::Interface;
            }
        }
    }
    out
}

/// Nodal values on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction(pub Vec<f64>);

impl GridFunction {
    pub fn zeros(grid: &Grid) -> Self {
        GridFunction(vec![0.0; grid.len()])
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        GridFunction((0..grid.len()).map(|i| f(grid.coord(i))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction(self.0.iter().map(|v| c * v).collect())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Self {
        GridFunction(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    /// `max|self − other| / max|other|` (0 when both vanish).
    pub fn sup_relative_gap(&self, reference: &GridFunction) -> f64 {
        let num = self.0.iter().zip(&reference.0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let den = reference.max_abs();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> DomainSpec {
        DomainSpec::Rectangle { lx: PI, ly: PI }
    }

    #[test]
    fn make_domain_cases() {
        let d = make_domain(DomainSpec::Interval { a: 0.0, b: PI }).unwrap();
        assert_eq!(d.boundary_measure(), 2.0);
        let r = make_domain(square()).unwrap();
        assert!((r.boundary_measure() - 4.0 * PI).abs() < 1e-15);
        assert!(matches!(
            make_domain(DomainSpec::Interval { a: 1.0, b: 0.0 }),
            Err(Error::InvalidDomain(_))
        ));
        assert!(make_domain(DomainSpec::Rectangle { lx: 0.0, ly: 1.0 }).is_err());
    }

    #[test]
    fn discretize_cases() {
        let g = discretize(DomainSpec::Interval { a: 0.0, b: PI }, 5).unwrap();
        assert_eq!(g.len(), 5);
        for i in 0..5 {
            assert!((g.coord(i)[0] - i as f64 * PI / 4.0).abs() < 1e-15);
        }
        assert_eq!(g.boundary_nodes(), vec![0, 4]);
        let r = discretize(DomainSpec::Rectangle { lx: 1.0, ly: 1.0 }, 4).unwrap();
        assert_eq!(r.len(), 16);
        assert_eq!(r.boundary_nodes().len(), 12);
        assert!(matches!(discretize(square(), 2), Err(Error::TooCoarse { n: 2 })));
    }

    #[test]
    fn family_bottom_and_left() {
        // anchor at the bottom-right corner, growing clockwise: bottom edge
        // first, then up the left edge
        let fam = MovingFamily::new(square(), Edge::Bottom, PI, Direction::Clockwise, PI / 5.0).unwrap();
        let p = fam.partition_at(2.0 * PI).unwrap();
        assert_eq!(p.dirichlet.len(), 2);
        assert!(p.dirichlet.iter().any(|a| a.edge == Edge::Bottom && a.t0.abs() < 1e-12 && (a.t1 - PI).abs() < 1e-12));
        assert!(p.dirichlet.iter().any(|a| a.edge == Edge::Left && a.t0.abs() < 1e-12 && (a.t1 - PI).abs() < 1e-12));
        let full = fam.partition_at(4.0 * PI).unwrap();
        assert!(full.is_full());
        assert!(full.interface_points().is_empty());
        assert!(matches!(fam.partition_at(PI / 10.0), Err(Error::AlphaOutOfRange { .. })));
    }

    #[test]
    fn boundary_measure_cases() {
        let d = DomainSpec::Rectangle { lx: 1.0, ly: 1.0 };
        let p = BoundaryPartition::new(
            d,
            vec![BoundaryArc::new(Edge::Bottom, 0.1, 0.4), BoundaryArc::new(Edge::Top, 0.5, 0.7)],
        )
        .unwrap();
        assert!((boundary_measure(&p).unwrap() - 0.5).abs() < 1e-15);
        let empty = BoundaryPartition::new(d, vec![]).unwrap();
        assert!(boundary_measure(&empty).is_err());
        let full = BoundaryPartition::full(d).unwrap();
        assert!((boundary_measure(&full).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_arcs_rejected() {
        let d = DomainSpec::Rectangle { lx: 1.0, ly: 1.0 };
        let r = BoundaryPartition::new(
            d,
            vec![BoundaryArc::new(Edge::Bottom, 0.1, 0.4), BoundaryArc::new(Edge::Bottom, 0.3, 0.7)],
        );
        assert!(r.is_err());
        assert!(BoundaryPartition::new(d, vec![BoundaryArc::new(Edge::Left, 0.5, 1.5)]).is_err());
    }

    #[test]
    fn classify_1d() {
        let d = DomainSpec::Interval { a: 0.0, b: PI };
        let g = discretize(d, 9).unwrap();
        let p = BoundaryPartition::new(d, vec![BoundaryArc::point(Edge::Left)]).unwrap();
        let g = classify_boundary_nodes(&g, &p);
        assert_eq!(g.tags[0], NodeTag::Dirichlet);
        assert_eq!(g.tags[8], NodeTag::Neumann);
        assert_eq!(g.free_nodes().len(), 8);
    }

    #[test]
    fn classify_bottom_edge_closed() {
        let g = discretize(square(), 9).unwrap();
        let p = BoundaryPartition::new(square(), vec![BoundaryArc::full(&square(), Edge::Bottom)]).unwrap();
        let g = classify_boundary_nodes(&g, &p);
        for ix in 0..9 {
            assert!(g.tags[g.index(ix, 0)].is_dirichlet());
        }
        // corners shared with the side edges belong to the closed set
        assert!(g.tags[g.index(0, 0)].is_dirichlet());
        assert!(g.tags[g.index(8, 0)].is_dirichlet());
        assert_eq!(g.tags[g.index(0, 1)], NodeTag::Neumann);
        assert_eq!(g.tags[g.index(4, 8)], NodeTag::Neumann);
    }

    #[test]
    fn classify_half_bottom_interface() {
        let g = discretize(square(), 9).unwrap();
        let p = BoundaryPartition::new(square(), vec![BoundaryArc::new(Edge::Bottom, 0.0, PI / 2.0)]).unwrap();
        let g = classify_boundary_nodes(&g, &p);
        assert_eq!(g.tags[g.index(4, 0)], NodeTag::Interface);
        assert_eq!(g.tags[g.index(3, 0)], NodeTag::Dirichlet);
        assert_eq!(g.tags[g.index(5, 0)], NodeTag::Neumann);
        let pts = p.interface_points();
        assert!(pts.iter().any(|q| (q[0] - PI / 2.0).abs() < 1e-12 && q[1].abs() < 1e-12));
        // idempotent
        let again = classify_boundary_nodes(&g, &p);
        assert_eq!(again.tags, g.tags);
    }

    #[test]
    fn snapping_tie_goes_to_dirichlet() {
        // arc ends exactly half a spacing short of node 2
        let d = DomainSpec::Rectangle { lx: 1.0, ly: 1.0 };
        let g = discretize(d, 5).unwrap();
        let p = BoundaryPartition::new(d, vec![BoundaryArc::new(Edge::Bottom, 0.0, 0.375)]).unwrap();
        let g = classify_boundary_nodes(&g, &p);
        assert!(g.tags[g.index(2, 0)].is_dirichlet());
        assert_eq!(g.tags[g.index(3, 0)], NodeTag::Neumann);
    }

    #[test]
    fn quadrature_weights_sum_to_volume() {
        let g = discretize(DomainSpec::Rectangle { lx: 2.0, ly: 3.0 }, 7).unwrap();
        let s: f64 = g.quadrature_weights().iter().sum();
        assert!((s - 6.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn family() -> impl Strategy<Value = MovingFamily> {
            (0.5f64..3.0, 0.5f64..3.0, 0usize..4, 0.0f64..1.0, any::<bool>()).prop_map(|(lx, ly, e, frac, cw)| {
                let d = DomainSpec::Rectangle { lx, ly };
                let edge = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left][e];
                let dir = if cw { Direction::Clockwise } else { Direction::CounterClockwise };
                MovingFamily::new(d, edge, frac * d.edge_length(edge), dir, d.boundary_measure() / 20.0).unwrap()
            })
        }

        proptest! {
            #[test]
            fn measure_exact(fam in family(), u in 0.0f64..1.0) {
                let (lo, hi) = fam.alpha_range();
                let alpha = lo + u * (hi - lo);
                let p = fam.partition_at(alpha).unwrap();
                prop_assert!((boundary_measure(&p).unwrap() - alpha).abs() <= 1e-12 * hi);
            }

            #[test]
            fn nested(fam in family(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
                let (lo, hi) = fam.alpha_range();
                let (a1, a2) = (lo + u.min(v) * (hi - lo), lo + u.max(v) * (hi - lo));
                let small = fam.partition_at(a1).unwrap();
                let big = fam.partition_at(a2).unwrap();
                let tol = 1e-12 * hi;
                for arc in &small.dirichlet {
                    prop_assert!(big.dirichlet.iter().any(|b| b.contains(arc, tol)));
                }
            }

            #[test]
            fn classification_idempotent(fam in family(), u in 0.0f64..1.0, n in 3usize..12) {
                let (lo, hi) = fam.alpha_range();
                let p = fam.partition_at(lo + u * (hi - lo)).unwrap();
                let g = discretize(fam.domain, n).unwrap();
                let once = classify_boundary_nodes(&g, &p);
                let twice = classify_boundary_nodes(&once, &p);
                prop_assert_eq!(once.tags, twice.tags);
            }
        }
    }
}
