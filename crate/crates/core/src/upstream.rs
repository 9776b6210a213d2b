//! Upstream-cell geometry: the xi-eta edge transform, straight and
//! quadratic-curved edges, grid-line intersections, and the search for the
//! oriented outer and inner line segments that bound each overlap region.
//!
//! Robustness conventions:
//! - Traced vertices are snapped onto grid lines they pass very close to,
//!   so degenerate configurations (translation by whole cells, vertices on
//!   grid nodes) are handled as exact cases rather than near-misses.
//! - Every edge is built once and shared by its two adjacent upstream
//!   cells, which traverse it in opposite directions. Line integrals are
//!   always evaluated in the edge's canonical orientation and negated for
//!   the reversed traversal, so shared-edge contributions cancel exactly
//!   and total mass telescopes across the grid.
//! - Each segment is owned by the background cell on its left when walked
//!   counterclockwise around the upstream cell; ownership is decided by
//!   locating the segment midpoint nudged toward that side.

use crate::grid::{CellIndex, Grid2D, WrapShift};
use crate::{Point, Result, SldgError};

/// Lattice snap applied to traced vertices, relative to min(dx, dy).
const VERTEX_SNAP_REL: f64 = 1e-9;
/// Parameter-space window around an edge endpoint inside which a root is
/// treated as the endpoint itself.
const XI_ENDPOINT_TOL: f64 = 1e-9;
/// Sideways nudge used to decide segment ownership, relative to min(dx, dy).
const OWNER_NUDGE_REL: f64 = 1e-6;
/// Relative flatness threshold below which a quadratic edge degrades to a
/// straight one.
const FLAT_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Grid lines `x = const`.
    X,
    /// Grid lines `y = const`.
    Y,
}

/// Affine frame mapping an edge's endpoint feet to `(-1, 0)` and `(1, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct XiEtaTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub p1: Point,
    pub p3: Point,
}

impl XiEtaTransform {
    /// Builds the transform from the closed-form coefficients.
    pub fn build(p1: Point, p3: Point, eps_geom: f64) -> Result<Self> {
        let den = (p1.x - p3.x).powi(2) + (p1.y - p3.y).powi(2);
        if den.sqrt() <= eps_geom {
            return Err(SldgError::DegenerateEdge(format!(
                "coincident endpoints ({}, {}) and ({}, {})",
                p1.x, p1.y, p3.x, p3.y
            )));
        }
        Ok(Self {
            a: 2.0 * (p3.x - p1.x) / den,
            b: 2.0 * (p3.y - p1.y) / den,
            c: (p1.x * p1.x - p3.x * p3.x + p1.y * p1.y - p3.y * p3.y) / den,
            d: 2.0 * (p3.x * p1.y - p1.x * p3.y) / den,
            p1,
            p3,
        })
    }

    #[inline]
    pub fn forward(&self, p: Point) -> (f64, f64) {
        (
            self.a * p.x + self.b * p.y + self.c,
            self.b * p.x - self.a * p.y + self.d,
        )
    }

    #[inline]
    pub fn reverse(&self, xi: f64, eta: f64) -> Point {
        let hx = 0.5 * (self.p3.x - self.p1.x);
        let hy = 0.5 * (self.p3.y - self.p1.y);
        Point::new(
            hx * xi + hy * eta + 0.5 * (self.p3.x + self.p1.x),
            hy * xi - hx * eta + 0.5 * (self.p3.y + self.p1.y),
        )
    }

    /// Chord length `|p3 - p1|`; physical distances are `length / 2` per
    /// unit of xi or eta.
    pub fn length(&self) -> f64 {
        self.p1.dist(self.p3)
    }
}

#[derive(Clone, Debug)]
pub enum EdgeKind {
    Straight,
    Quadratic {
        transform: XiEtaTransform,
        xi2: f64,
        eta2: f64,
        /// Apex coefficient of the parabola `eta = q (xi^2 - 1)`.
        q: f64,
    },
}

/// One side of an upstream cell, parameterized by `xi` in `[-1, 1]` with
/// `x(xi) = ax xi^2 + bx xi + cx` (straight edges have `ax = ay = 0`).
#[derive(Clone, Debug)]
pub struct Edge {
    pub v_start: Point,
    pub v_end: Point,
    pub kind: EdgeKind,
    ax: f64,
    bx: f64,
    cx: f64,
    ay: f64,
    by: f64,
    cy: f64,
}

impl Edge {
    pub fn straight(a: Point, b: Point) -> Self {
        Self {
            v_start: a,
            v_end: b,
            kind: EdgeKind::Straight,
            ax: 0.0,
            bx: 0.5 * (b.x - a.x),
            cx: 0.5 * (a.x + b.x),
            ay: 0.0,
            by: 0.5 * (b.y - a.y),
            cy: 0.5 * (a.y + b.y),
        }
    }

    /// Parabolic edge through the traced feet of the side's endpoints and
    /// midpoint. Degrades to a straight edge when the sagitta is below the
    /// flatness threshold (rotations and translations map lines to lines).
    pub fn quadratic(p1: Point, mid: Point, p3: Point, eps_geom: f64, h: f64) -> Result<Self> {
        let tr = XiEtaTransform::build(p1, p3, eps_geom)?;
        let (xi2, eta2) = tr.forward(mid);
        if xi2.abs() >= 1.0 - 1e-12 {
            return Err(SldgError::DegenerateEdge(format!(
                "mid vertex at xi = {xi2} is not strictly between the endpoints"
            )));
        }
        // physical sagitta is |eta2| * L / 2
        if eta2.abs() * tr.length() * 0.5 < FLAT_REL * h {
            return Ok(Self::straight(p1, p3));
        }
        let q = eta2 / (xi2 * xi2 - 1.0);
        let hx = 0.5 * (p3.x - p1.x);
        let hy = 0.5 * (p3.y - p1.y);
        Ok(Self {
            v_start: p1,
            v_end: p3,
            kind: EdgeKind::Quadratic { transform: tr, xi2, eta2, q },
            ax: q * hy,
            bx: hx,
            cx: 0.5 * (p3.x + p1.x) - q * hy,
            ay: -q * hx,
            by: hy,
            cy: 0.5 * (p3.y + p1.y) + q * hx,
        })
    }

    pub fn is_curved(&self) -> bool {
        matches!(self.kind, EdgeKind::Quadratic { .. })
    }

    #[inline]
    pub fn point(&self, xi: f64) -> Point {
        Point::new(
            (self.ax * xi + self.bx) * xi + self.cx,
            (self.ay * xi + self.by) * xi + self.cy,
        )
    }

    #[inline]
    pub fn tangent(&self, xi: f64) -> (f64, f64) {
        (2.0 * self.ax * xi + self.bx, 2.0 * self.ay * xi + self.by)
    }

    fn coords(&self, axis: Axis) -> (f64, f64, f64) {
        match axis {
            Axis::X => (self.ax, self.bx, self.cx),
            Axis::Y => (self.ay, self.by, self.cy),
        }
    }

    /// Whether the whole edge lies on the line `axis = value`. Only
    /// straight edges can; curved ones always have nonzero sagitta.
    fn lies_on_line(&self, axis: Axis, value: f64, tol: f64) -> bool {
        if self.is_curved() {
            return false;
        }
        let (sa, sb) = match axis {
            Axis::X => (self.v_start.x, self.v_end.x),
            Axis::Y => (self.v_start.y, self.v_end.y),
        };
        (sa - value).abs() <= tol && (sb - value).abs() <= tol
    }

    /// Real roots of `coord(xi) = value` with `xi` in `[-1, 1]`, sorted.
    /// Tangential grazings (discriminant within the drop tolerance) yield
    /// no roots; roots inside the endpoint window are snapped to +-1.
    pub fn line_roots(&self, axis: Axis, value: f64) -> RootList {
        let (a, b, c) = self.coords(axis);
        let c = c - value;
        let scale = (b * b).max((4.0 * a * c).abs()).max(1e-300);
        let mut out = RootList::default();
        if a.abs() <= 1e-15 * scale.sqrt().max(b.abs()) {
            // straight in this coordinate
            if b.abs() <= 1e-15 * c.abs().max(1e-300) {
                return out; // parallel (possibly on-line; caller checks)
            }
            out.push_clamped(-c / b);
            return out;
        }
        let disc = b * b - 4.0 * a * c;
        if disc.abs() <= 1e-14 * scale {
            return out; // tangential grazing: no crossing
        }
        if disc < 0.0 {
            return out;
        }
        let sq = disc.sqrt();
        let qf = -0.5 * (b + b.signum() * sq);
        out.push_clamped(qf / a);
        out.push_clamped(c / qf);
        out.sort();
        out
    }

    /// Signed `int x dy` along the edge between two parameters; the
    /// integrand is cubic in `xi`, integrated exactly.
    pub fn area_integral(&self, xi0: f64, xi1: f64) -> f64 {
        // x(xi) y'(xi) expanded in powers of xi
        let c3 = 2.0 * self.ax * self.ay;
        let c2 = 2.0 * self.ay * self.bx + self.ax * self.by;
        let c1 = self.bx * self.by + 2.0 * self.ay * self.cx;
        let c0 = self.by * self.cx;
        let prim = |x: f64| ((c3 / 4.0 * x + c2 / 3.0) * x + c1 / 2.0) * x * x + c0 * x;
        prim(xi1) - prim(xi0)
    }
}

/// Up to two roots, kept inline.
#[derive(Clone, Copy, Debug, Default)]
pub struct RootList {
    n: usize,
    r: [f64; 2],
}

impl RootList {
    fn push_clamped(&mut self, xi: f64) {
        let xi = if xi.abs() > 1.0 - XI_ENDPOINT_TOL {
            if xi.abs() > 1.0 + XI_ENDPOINT_TOL {
                return;
            }
            xi.signum()
        } else {
            xi
        };
        self.r[self.n] = xi;
        self.n += 1;
    }

    fn sort(&mut self) {
        if self.n == 2 && self.r[0] > self.r[1] {
            self.r.swap(0, 1);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.r[..self.n]
    }
}

/// Grid-line intersections of an edge, as `(xi, point)` pairs sorted by
/// `xi`; endpoint hits are snapped to `xi = +-1`.
pub fn intersect_edge_gridline(edge: &Edge, axis: Axis, value: f64) -> Vec<(f64, Point)> {
    if edge.lies_on_line(axis, value, 0.0) {
        return Vec::new();
    }
    edge.line_roots(axis, value)
        .as_slice()
        .iter()
        .map(|&xi| {
            let mut p = edge.point(xi);
            match axis {
                Axis::X => p.x = value,
                Axis::Y => p.y = value,
            }
            (xi, p)
        })
        .collect()
}

/// Quadrature point counts for the Green's-theorem line integrals.
#[derive(Clone, Debug)]
pub struct SegmentRules {
    /// Nodes/weights for straight segments (`k + 3` points).
    pub straight: (Vec<f64>, Vec<f64>),
    /// Nodes/weights for quadratic outer segments (`k + 4` points).
    pub curved: (Vec<f64>, Vec<f64>),
}

impl SegmentRules {
    pub fn for_degree(k: usize) -> Self {
        Self {
            straight: crate::quadrature::gauss_legendre(k + 3),
            curved: crate::quadrature::gauss_legendre(k + 4),
        }
    }
}

/// A grid-line crossing on an edge.
#[derive(Clone, Copy, Debug)]
pub struct Crossing {
    pub axis: Axis,
    /// Unwrapped grid-line index.
    pub line: i64,
    pub xi: f64,
    pub point: Point,
}

/// One piece of an edge lying inside a single background cell, with
/// quadrature data precomputed in the canonical (increasing `xi`)
/// orientation.
#[derive(Clone, Debug)]
pub struct EdgePiece {
    pub xi0: f64,
    pub xi1: f64,
    pub start: Point,
    pub end: Point,
    /// Background cell owning this piece when traversed forward.
    pub left_owner: (CellIndex, WrapShift),
    /// Background cell owning this piece when traversed backward.
    pub right_owner: (CellIndex, WrapShift),
    /// `(point, w)` with `sum w Q(point) = int Q dy` in canonical
    /// orientation.
    pub gauss: Vec<(Point, f64)>,
    /// `int x dy` in canonical orientation.
    pub area_int: f64,
}

/// An edge subdivided against the grid, shared by its two adjacent
/// upstream cells.
#[derive(Clone, Debug)]
pub struct SharedEdge {
    pub edge: Edge,
    pub pieces: Vec<EdgePiece>,
    pub crossings: Vec<Crossing>,
    pub area_total: f64,
}

/// Builds the subdivision and quadrature tables of one edge.
pub fn build_shared_edge(edge: Edge, grid: &Grid2D, rules: &SegmentRules) -> Result<SharedEdge> {
    let mut crossings: Vec<Crossing> = Vec::new();

    // bounding range per axis, extended to the parabola's extremum
    let coord_range = |a: f64, b: f64, c: f64| -> (f64, f64) {
        let e0 = c - b + a; // xi = -1
        let e1 = c + b + a; // xi = +1
        let (mut lo, mut hi) = if e0 <= e1 { (e0, e1) } else { (e1, e0) };
        if a.abs() > 0.0 {
            let xi_e = -b / (2.0 * a);
            if xi_e.abs() < 1.0 {
                let v = (a * xi_e + b) * xi_e + c;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    };

    let eps = grid.eps_geom();
    for (axis, lo_coord, h) in [(Axis::X, grid.x_lo, grid.dx), (Axis::Y, grid.y_lo, grid.dy)] {
        let (a, b, c) = edge.coords(axis);
        let (lo, hi) = coord_range(a, b, c);
        let i_lo = ((lo - lo_coord) / h).floor() as i64 - 1;
        let i_hi = ((hi - lo_coord) / h).ceil() as i64 + 1;
        for line in i_lo..=i_hi {
            let value = lo_coord + line as f64 * h;
            if value < lo - eps || value > hi + eps {
                continue;
            }
            if edge.lies_on_line(axis, value, 0.0) {
                continue;
            }
            for (xi, point) in intersect_edge_gridline(&edge, axis, value) {
                if xi.abs() < 1.0 {
                    crossings.push(Crossing { axis, line, xi, point });
                }
            }
        }
    }
    crossings.sort_by(|a, b| a.xi.total_cmp(&b.xi));

    // breakpoints: crossing parameters, deduplicated (grid-node hits give
    // one x and one y crossing at the same xi)
    let mut breaks: Vec<f64> = vec![-1.0];
    for c in &crossings {
        if c.xi - breaks.last().unwrap() > XI_ENDPOINT_TOL {
            breaks.push(c.xi);
        }
    }
    if 1.0 - breaks.last().unwrap() <= XI_ENDPOINT_TOL {
        breaks.pop();
    }
    breaks.push(1.0);

    let nudge = OWNER_NUDGE_REL * grid.dx.min(grid.dy);
    let mut pieces = Vec::with_capacity(breaks.len() - 1);
    let mut area_total = 0.0;
    for w in breaks.windows(2) {
        let (xi0, xi1) = (w[0], w[1]);
        let mid = 0.5 * (xi0 + xi1);
        let pm = edge.point(mid);
        let (tx, ty) = edge.tangent(mid);
        let tl = tx.hypot(ty).max(1e-300);
        // unit left normal of the forward direction
        let (nx, ny) = (-ty / tl, tx / tl);
        let left_owner = grid.locate_wrapped(Point::new(pm.x + nudge * nx, pm.y + nudge * ny))?;
        let right_owner = grid.locate_wrapped(Point::new(pm.x - nudge * nx, pm.y - nudge * ny))?;

        let (nodes, weights) = if edge.is_curved() { &rules.curved } else { &rules.straight };
        let half = 0.5 * (xi1 - xi0);
        let gauss: Vec<(Point, f64)> = nodes
            .iter()
            .zip(weights)
            .map(|(&n, &w)| {
                let xi = mid + half * n;
                let (_, dy) = edge.tangent(xi);
                (edge.point(xi), w * dy * half)
            })
            .collect();
        let area_int = edge.area_integral(xi0, xi1);
        area_total += area_int;
        pieces.push(EdgePiece {
            xi0,
            xi1,
            start: edge.point(xi0),
            end: edge.point(xi1),
            left_owner,
            right_owner,
            gauss,
            area_int,
        });
    }

    Ok(SharedEdge { edge, pieces, crossings, area_total })
}

/// Snaps a traced vertex onto nearby grid lines so that degenerate
/// configurations become exact.
pub fn snap_vertex(p: Point, grid: &Grid2D) -> Point {
    let tol = VERTEX_SNAP_REL * grid.dx.min(grid.dy);
    let snap = |v: f64, lo: f64, h: f64| {
        let line = ((v - lo) / h).round();
        let lv = lo + line * h;
        if (v - lv).abs() <= tol {
            lv
        } else {
            v
        }
    };
    Point::new(snap(p.x, grid.x_lo, grid.dx), snap(p.y, grid.y_lo, grid.dy))
}

/// Shape approximation of the upstream cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellMode {
    /// Straight sides through the corner feet.
    Quad,
    /// Quadratic-curved sides through corner and midpoint feet.
    Qc,
}

/// An upstream cell: four sides ordered counterclockwise, each a reference
/// into the shared edge table together with its traversal direction.
#[derive(Clone, Debug)]
pub struct UpstreamCell {
    pub owner: CellIndex,
    /// Corner feet, counterclockwise from the cell's south-west corner.
    pub corners: [Point; 4],
    /// Side midpoint feet (qc mode).
    pub midpoints: Option<[Point; 4]>,
    /// `(edge index, forward)` per side, counterclockwise.
    pub sides: [(usize, bool); 4],
    pub signed_area: f64,
    pub centroid: Point,
    /// Signed area left the `[0.5, 1.5] dx dy` sanity band.
    pub area_flagged: bool,
}

/// Storage for shared edges; cells reference edges by index.
#[derive(Default, Debug)]
pub struct EdgeTable {
    pub edges: Vec<SharedEdge>,
}

impl EdgeTable {
    pub fn push(&mut self, e: SharedEdge) -> usize {
        self.edges.push(e);
        self.edges.len() - 1
    }
}

/// Builds an upstream cell from already-traced (and snapped) feet, creating
/// its own edges in `table`. `vertices` holds 4 corners in counterclockwise
/// order, or 9 points ordered corners, side midpoints, center (the center
/// participates only in the test-function fit, not in the geometry).
pub fn build_upstream_cell(
    owner: CellIndex,
    vertices: &[Point],
    mode: CellMode,
    grid: &Grid2D,
    rules: &SegmentRules,
    table: &mut EdgeTable,
) -> Result<UpstreamCell> {
    let corners: [Point; 4] = vertices[..4].try_into().expect("at least 4 vertices");
    let midpoints: Option<[Point; 4]> = match mode {
        CellMode::Quad => None,
        CellMode::Qc => {
            assert!(vertices.len() >= 8, "qc mode needs side midpoint feet");
            Some(vertices[4..8].try_into().unwrap())
        }
    };
    let mut sides = [(0usize, true); 4];
    for s in 0..4 {
        let a = corners[s];
        let b = corners[(s + 1) % 4];
        let edge = match midpoints {
            None => Edge::straight(a, b),
            Some(m) => Edge::quadratic(a, m[s], b, grid.eps_geom(), grid.dx.max(grid.dy))?,
        };
        let id = table.push(build_shared_edge(edge, grid, rules)?);
        sides[s] = (id, true);
    }
    finish_cell(owner, corners, midpoints, sides, grid, table)
}

/// Computes area and centroid and validates orientation.
pub fn finish_cell(
    owner: CellIndex,
    corners: [Point; 4],
    midpoints: Option<[Point; 4]>,
    sides: [(usize, bool); 4],
    grid: &Grid2D,
    table: &EdgeTable,
) -> Result<UpstreamCell> {
    let mut signed_area = 0.0;
    for &(id, fwd) in &sides {
        let a = table.edges[id].area_total;
        signed_area += if fwd { a } else { -a };
    }
    if signed_area <= 0.0 {
        return Err(SldgError::InvertedCell { cell: owner, time: f64::NAN, area: signed_area });
    }
    let cell_area = grid.cell_area();
    let area_flagged = !(0.5..=1.5).contains(&(signed_area / cell_area));
    let centroid = Point::new(
        corners.iter().map(|p| p.x).sum::<f64>() / 4.0,
        corners.iter().map(|p| p.y).sum::<f64>() / 4.0,
    );
    Ok(UpstreamCell {
        owner,
        corners,
        midpoints,
        sides,
        signed_area,
        centroid,
        area_flagged,
    })
}

/// An outer segment: one edge piece traversed in the given direction.
#[derive(Clone, Copy, Debug)]
pub struct OuterSeg {
    pub edge: usize,
    pub piece: usize,
    /// +1 traverses the piece canonically, -1 reversed.
    pub sign: f64,
    pub owner: CellIndex,
    pub shift: WrapShift,
}

/// An inner segment: a grid-aligned piece strictly inside the upstream
/// cell, one of the two opposite-orientation copies.
#[derive(Clone, Copy, Debug)]
pub struct InnerSeg {
    pub axis: Axis,
    /// Coordinate of the grid line the segment lies on.
    pub value: f64,
    /// Range along the line, `c0 < c1` (canonical orientation is toward
    /// increasing coordinate).
    pub c0: f64,
    pub c1: f64,
    pub sign: f64,
    pub owner: CellIndex,
    pub shift: WrapShift,
}

impl InnerSeg {
    pub fn start(&self) -> Point {
        match self.axis {
            Axis::X => Point::new(self.value, self.c0),
            Axis::Y => Point::new(self.c0, self.value),
        }
    }

    pub fn end(&self) -> Point {
        match self.axis {
            Axis::X => Point::new(self.value, self.c1),
            Axis::Y => Point::new(self.c1, self.value),
        }
    }
}

/// All segments of one upstream cell, grouped for assembly and validation.
#[derive(Clone, Debug, Default)]
pub struct SegmentSet {
    pub outer: Vec<OuterSeg>,
    pub inner: Vec<InnerSeg>,
}

/// Enumerates the oriented outer and inner segments of an upstream cell.
///
/// Outer segments are the grid-subdivided pieces of the four sides, owned
/// by the background cell to the left of the counterclockwise traversal.
/// Inner segments are found per grid line by collecting boundary crossings
/// (interior edge roots plus corner vertices where the boundary genuinely
/// crosses the line), pairing them by parity into super segments, splitting
/// those at perpendicular grid lines, and emitting every resulting piece
/// twice with opposite orientations for the two adjacent background cells.
pub fn find_segments(
    cell: &UpstreamCell,
    grid: &Grid2D,
    table: &EdgeTable,
) -> Result<SegmentSet> {
    let mut set = SegmentSet::default();

    // outer segments, counterclockwise
    for &(id, fwd) in &cell.sides {
        let pieces = &table.edges[id].pieces;
        let n = pieces.len();
        for k in 0..n {
            let idx = if fwd { k } else { n - 1 - k };
            let piece = &pieces[idx];
            let (owner, shift) = if fwd { piece.left_owner } else { piece.right_owner };
            set.outer.push(OuterSeg {
                edge: id,
                piece: idx,
                sign: if fwd { 1.0 } else { -1.0 },
                owner,
                shift,
            });
        }
    }

    // collect crossing points per grid line
    let mut lines: std::collections::BTreeMap<(u8, i64), Vec<f64>> = std::collections::BTreeMap::new();
    let axis_key = |axis: Axis| match axis {
        Axis::X => 0u8,
        Axis::Y => 1u8,
    };
    for &(id, _) in &cell.sides {
        for c in &table.edges[id].crossings {
            let along = match c.axis {
                Axis::X => c.point.y,
                Axis::Y => c.point.x,
            };
            lines.entry((axis_key(c.axis), c.line)).or_default().push(along);
        }
    }

    // corner vertices lying exactly on a grid line, registered when the two
    // adjacent sides leave toward opposite half-planes
    for s in 0..4 {
        let v = cell.corners[s];
        let (id_in, fwd_in) = cell.sides[(s + 3) % 4];
        let (id_out, fwd_out) = cell.sides[s];
        for (axis, lo, h) in [(Axis::X, grid.x_lo, grid.dx), (Axis::Y, grid.y_lo, grid.dy)] {
            let coord = match axis {
                Axis::X => v.x,
                Axis::Y => v.y,
            };
            let line = ((coord - lo) / h).round() as i64;
            if coord != lo + line as f64 * h {
                continue;
            }
            let side_in = arm_side(&table.edges[id_in].edge, axis, !fwd_in);
            let side_out = arm_side(&table.edges[id_out].edge, axis, fwd_out);
            if side_in * side_out < 0.0 {
                let along = match axis {
                    Axis::X => v.y,
                    Axis::Y => v.x,
                };
                lines.entry((axis_key(axis), line)).or_default().push(along);
            }
        }
    }

    // pair, split, and double each super segment
    for ((ak, line), mut pts) in lines {
        if pts.is_empty() {
            continue;
        }
        let axis = if ak == 0 { Axis::X } else { Axis::Y };
        pts.sort_by(f64::total_cmp);
        if pts.len() % 2 != 0 {
            return Err(SldgError::GeometryInconsistency {
                cell: cell.owner,
                detail: format!(
                    "odd crossing count {} on grid line {:?} {}",
                    pts.len(),
                    axis,
                    line
                ),
            });
        }
        let value = match axis {
            Axis::X => grid.node_x(line),
            Axis::Y => grid.node_y(line),
        };
        let (perp_lo, perp_h, perp_n) = match axis {
            Axis::X => (grid.y_lo, grid.dy, grid.ny as i64),
            Axis::Y => (grid.x_lo, grid.dx, grid.nx as i64),
        };
        let this_n = match axis {
            Axis::X => grid.nx as i64,
            Axis::Y => grid.ny as i64,
        };
        for pair in pts.chunks(2) {
            let (ya, yb) = (pair[0], pair[1]);
            if yb - ya <= grid.eps_geom() {
                continue;
            }
            // split at perpendicular grid lines strictly inside
            let j_lo = ((ya - perp_lo) / perp_h).floor() as i64;
            let j_hi = ((yb - perp_lo) / perp_h).ceil() as i64;
            let mut cuts = vec![ya];
            for j in j_lo..=j_hi {
                let c = perp_lo + j as f64 * perp_h;
                if c > ya && c < yb {
                    cuts.push(c);
                }
            }
            cuts.push(yb);
            for w in cuts.windows(2) {
                let (c0, c1) = (w[0], w[1]);
                if c1 - c0 <= 0.0 {
                    continue;
                }
                let mid = 0.5 * (c0 + c1);
                let row_raw = ((mid - perp_lo) / perp_h).floor() as i64;
                let row = row_raw.rem_euclid(perp_n);
                let row_shift = (row - row_raw) / perp_n;
                // owner columns on each side of the line
                let west_raw = line - 1;
                let east_raw = line;
                let mk = |col_raw: i64| -> (CellIndex, WrapShift) {
                    let col = col_raw.rem_euclid(this_n);
                    let col_shift = (col - col_raw) / this_n;
                    match axis {
                        Axis::X => (
                            CellIndex { i: col as usize, j: row as usize },
                            (col_shift, row_shift),
                        ),
                        Axis::Y => (
                            CellIndex { i: row as usize, j: col as usize },
                            (row_shift, col_shift),
                        ),
                    }
                };
                let (west_owner, west_shift) = mk(west_raw);
                let (east_owner, east_shift) = mk(east_raw);
                // canonical direction (increasing coordinate) is
                // counterclockwise for the lower-index side
                set.inner.push(InnerSeg {
                    axis,
                    value,
                    c0,
                    c1,
                    sign: 1.0,
                    owner: west_owner,
                    shift: west_shift,
                });
                set.inner.push(InnerSeg {
                    axis,
                    value,
                    c0,
                    c1,
                    sign: -1.0,
                    owner: east_owner,
                    shift: east_shift,
                });
            }
        }
    }

    validate_loops(cell, &set, grid, table)?;
    Ok(set)
}

/// Sign of the axis-coordinate motion when stepping from a vertex into an
/// edge; 0 when the arm runs along the line.
fn arm_side(edge: &Edge, axis: Axis, from_start: bool) -> f64 {
    let (a, b, _) = edge.coords(axis);
    let (xi, dir) = if from_start { (-1.0, 1.0) } else { (1.0, -1.0) };
    let slope = (2.0 * a * xi + b) * dir;
    if slope != 0.0 {
        slope.signum()
    } else if a != 0.0 {
        a.signum()
    } else {
        0.0
    }
}

/// Checks that the segments assigned to each background cell chain into
/// closed counterclockwise loops.
fn validate_loops(
    cell: &UpstreamCell,
    set: &SegmentSet,
    grid: &Grid2D,
    table: &EdgeTable,
) -> Result<()> {
    use std::collections::BTreeMap;
    // oriented (start, end, area) per segment, grouped by owner copy
    type Key = (usize, usize, i64, i64);
    let mut groups: BTreeMap<Key, Vec<(Point, Point, f64)>> = BTreeMap::new();
    for o in &set.outer {
        let piece = &table.edges[o.edge].pieces[o.piece];
        let (s, e) = if o.sign > 0.0 { (piece.start, piece.end) } else { (piece.end, piece.start) };
        groups
            .entry((o.owner.i, o.owner.j, o.shift.0, o.shift.1))
            .or_default()
            .push((s, e, o.sign * piece.area_int));
    }
    for i in &set.inner {
        let (s, e) = if i.sign > 0.0 { (i.start(), i.end()) } else { (i.end(), i.start()) };
        let area = i.sign
            * match i.axis {
                Axis::X => i.value * (i.c1 - i.c0),
                Axis::Y => 0.0,
            };
        groups
            .entry((i.owner.i, i.owner.j, i.shift.0, i.shift.1))
            .or_default()
            .push((s, e, area));
    }

    let gap_tol = 10.0 * grid.eps_geom();
    for (key, mut segs) in groups {
        let mut loop_area_total = 0.0;
        while let Some((start, mut cursor, area0)) = segs.pop() {
            let mut loop_area = area0;
            while cursor.dist(start) > gap_tol {
                let next = segs
                    .iter()
                    .position(|(s, _, _)| s.dist(cursor) <= gap_tol)
                    .ok_or_else(|| SldgError::GeometryInconsistency {
                        cell: cell.owner,
                        detail: format!(
                            "open chain in background cell ({}, {}) shift ({}, {}) at ({}, {})",
                            key.0, key.1, key.2, key.3, cursor.x, cursor.y
                        ),
                    })?;
                let (_, e, a) = segs.swap_remove(next);
                cursor = e;
                loop_area += a;
            }
            loop_area_total += loop_area;
        }
        if loop_area_total < -1e-9 * grid.cell_area() {
            return Err(SldgError::GeometryInconsistency {
                cell: cell.owner,
                detail: format!(
                    "negative overlap area {loop_area_total:e} in background cell ({}, {})",
                    key.0, key.1
                ),
            });
        }
    }
    Ok(())
}

/// Where a point lies relative to an upstream cell's boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointLoc {
    Inside,
    Boundary,
    Outside,
}

/// Crossing-number point-in-cell test; points within `eps` of the boundary
/// count as inside.
pub fn point_in_cell(p: Point, cell: &UpstreamCell, table: &EdgeTable, eps: f64) -> bool {
    locate_point(p, cell, table, eps) != PointLoc::Outside
}

pub fn locate_point(p: Point, cell: &UpstreamCell, table: &EdgeTable, eps: f64) -> PointLoc {
    // boundary proximity first
    for &(id, _) in &cell.sides {
        if edge_distance_below(&table.edges[id].edge, p, eps) {
            return PointLoc::Boundary;
        }
    }
    // horizontal ray toward +x, retried on degenerate hits
    let mut dy = 0.0;
    for attempt in 0..16 {
        match ray_crossings(p, dy, cell, table, eps) {
            Some(n) => {
                return if n % 2 == 1 { PointLoc::Inside } else { PointLoc::Outside };
            }
            None => {
                dy = (attempt as f64 + 1.0) * 7.3 * eps.max(1e-12);
            }
        }
    }
    PointLoc::Outside
}

fn ray_crossings(p: Point, dy: f64, cell: &UpstreamCell, table: &EdgeTable, eps: f64) -> Option<usize> {
    let y = p.y + dy;
    let mut count = 0usize;
    for &(id, _) in &cell.sides {
        let edge = &table.edges[id].edge;
        for &xi in edge.line_roots(Axis::Y, y).as_slice() {
            if xi.abs() >= 1.0 - XI_ENDPOINT_TOL {
                return None; // endpoint hit: perturb the ray
            }
            let q = edge.point(xi);
            if (q.x - p.x).abs() <= eps {
                return None;
            }
            if q.x > p.x {
                count += 1;
            }
        }
    }
    Some(count)
}

fn edge_distance_below(edge: &Edge, p: Point, eps: f64) -> bool {
    match &edge.kind {
        EdgeKind::Straight => {
            let (a, b) = (edge.v_start, edge.v_end);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
            let c = Point::new(a.x + t * dx, a.y + t * dy);
            p.dist(c) <= eps
        }
        EdgeKind::Quadratic { transform, q, .. } => {
            let (xi, eta) = transform.forward(p);
            let half = 0.5 * transform.length();
            if xi.abs() > 1.0 + eps / half {
                return p.dist(edge.v_start) <= eps || p.dist(edge.v_end) <= eps;
            }
            ((eta - q * (xi * xi - 1.0)) * half).abs() <= eps
        }
    }
}

/// Plain-text geometry trace of one upstream cell, used by the golden
/// geometry tests.
pub fn debug_dump(cell: &UpstreamCell, set: &SegmentSet, table: &EdgeTable) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "upstream cell {}", cell.owner).unwrap();
    writeln!(out, "signed_area {:.12e}", cell.signed_area).unwrap();
    for (s, p) in cell.corners.iter().enumerate() {
        writeln!(out, "corner {s} {:.12e} {:.12e}", p.x, p.y).unwrap();
    }
    if let Some(mids) = &cell.midpoints {
        for (s, p) in mids.iter().enumerate() {
            writeln!(out, "midpoint {s} {:.12e} {:.12e}", p.x, p.y).unwrap();
        }
    }
    for (s, &(id, fwd)) in cell.sides.iter().enumerate() {
        let e = &table.edges[id];
        writeln!(
            out,
            "side {s} {} fwd={} pieces={}",
            if e.edge.is_curved() { "quadratic" } else { "straight" },
            fwd,
            e.pieces.len()
        )
        .unwrap();
        for c in &e.crossings {
            writeln!(
                out,
                "  crossing {:?} line={} xi={:.12e} at {:.12e} {:.12e}",
                c.axis, c.line, c.xi, c.point.x, c.point.y
            )
            .unwrap();
        }
    }
    for o in &set.outer {
        let piece = &table.edges[o.edge].pieces[o.piece];
        writeln!(
            out,
            "outer edge={} xi=[{:.6}, {:.6}] sign={} owner=({}, {}) shift=({}, {})",
            o.edge, piece.xi0, piece.xi1, o.sign, o.owner.i, o.owner.j, o.shift.0, o.shift.1
        )
        .unwrap();
    }
    for i in &set.inner {
        writeln!(
            out,
            "inner {:?} value={:.12e} range=[{:.12e}, {:.12e}] sign={} owner=({}, {}) shift=({}, {})",
            i.axis, i.value, i.c0, i.c1, i.sign, i.owner.i, i.owner.j, i.shift.0, i.shift.1
        )
        .unwrap();
    }
    out
}
