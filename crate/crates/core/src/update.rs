//! The semi-Lagrangian DG update: test-function reconstruction, Green's
//! theorem moment assembly, and the 1D and 2D steps.
//!
//! For each Eulerian cell the weak form
//! `int_{A_j} u^{n+1} Psi = int_{A_j^*} u^n psi^*`
//! is evaluated by splitting the upstream cell boundary into the oriented
//! segment set of [`crate::upstream`], choosing `P = 0` and
//! `Q(x, y) = int_{x_ref}^x u psi^* dx'` per background cell (anchored at
//! that cell's center), and summing Gauss line integrals of `Q dy`. The
//! orthonormal basis turns the left-hand side into a diagonal scaling.

use crate::basis::{modal_to_poly, phi2d, BasisSpec};
use crate::field::{DGField1D, DGField2D};
use crate::flows::Flow;
use crate::grid::{CellIndex, Grid2D};
use crate::poly2::Poly2;
use crate::quadrature::{gauss_legendre, gauss_lobatto_nodes};
use crate::tracer::{trace_backward, TraceRequest};
use crate::upstream::{
    build_shared_edge, find_segments, finish_cell, snap_vertex, Axis, CellMode, Edge, EdgeTable,
    InnerSeg, SegmentRules, SegmentSet, UpstreamCell,
};
use crate::{Point, Result, SldgError};
use rayon::prelude::*;

/// Reference positions of the traced Eulerian vertices: four corners, then
/// side midpoints, then the center.
pub const REF_PTS_9: [(f64, f64); 9] = [
    (-1.0, -1.0),
    (1.0, -1.0),
    (1.0, 1.0),
    (-1.0, 1.0),
    (0.0, -1.0),
    (1.0, 0.0),
    (0.0, 1.0),
    (-1.0, 0.0),
    (0.0, 0.0),
];

/// Per-cell counters reported by a 2D step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    /// Upstream cells whose signed area left the `[0.5, 1.5] dx dy` band.
    pub area_flagged: usize,
}

/// The reconstructed test functions `psi^*` of one upstream cell: one
/// polynomial per basis function, in a frame centered at the upstream
/// centroid and scaled by its radius.
#[derive(Clone, Debug)]
pub struct TestFunctionStar {
    pub polys: Vec<Poly2>,
    pub x0: f64,
    pub y0: f64,
    pub scale: f64,
}

impl TestFunctionStar {
    /// Evaluates `psi^*_m` at a physical point.
    pub fn eval(&self, m: usize, p: Point) -> f64 {
        self.polys[m].eval((p.x - self.x0) / self.scale, (p.y - self.y0) / self.scale)
    }
}

/// Least-squares fit of every `psi^*_m` through `(foot_q, Psi_m(vertex_q))`.
/// `feet` and `ref_pts` pair up; 4 points determine `P^1`, 9 determine
/// `P^2`. The constant mode is the exact adjoint solution and bypasses the
/// solve, which keeps it bit-identical across neighboring cells.
pub fn reconstruct_test_functions(
    feet: &[Point],
    ref_pts: &[(f64, f64)],
    spec: BasisSpec,
    owner: CellIndex,
) -> Result<TestFunctionStar> {
    let dim = spec.dim_2d();
    let n = feet.len();
    assert!(n >= dim, "{n} feet cannot determine {dim} coefficients");
    assert_eq!(n, ref_pts.len());

    let x0 = feet.iter().map(|p| p.x).sum::<f64>() / n as f64;
    let y0 = feet.iter().map(|p| p.y).sum::<f64>() / n as f64;
    let scale = feet
        .iter()
        .map(|p| p.dist(Point::new(x0, y0)))
        .fold(0.0f64, f64::max)
        .max(1e-300);

    let mut polys = vec![Poly2::constant(0.5); dim];
    if dim == 1 {
        return Ok(TestFunctionStar { polys, x0, y0, scale });
    }

    let pairs = spec.pairs_2d();
    let mut a = Vec::with_capacity(n * dim);
    for foot in feet {
        let xs = (foot.x - x0) / scale;
        let ys = (foot.y - y0) / scale;
        for &(p, q) in pairs {
            a.push(xs.powi(p as i32) * ys.powi(q as i32));
        }
    }
    let qr = crate::lsq::QrLstSq::new(a, n, dim)
        .ok_or(SldgError::SingularGeometry { cell: owner })?;

    let mut b = vec![0.0; n];
    for (m, poly) in polys.iter_mut().enumerate().skip(1) {
        for (row, &(s, t)) in ref_pts.iter().enumerate() {
            b[row] = phi2d(spec, m, s, t);
        }
        let sol = qr.solve(&b);
        let mut pm = Poly2::zero(spec.degree);
        for (&(p, q), &c) in pairs.iter().zip(&sol) {
            pm.set(p, q, c);
        }
        *poly = pm;
    }
    Ok(TestFunctionStar { polys, x0, y0, scale })
}

/// `Q` with `dQ/dx = f` and `Q(x_ref, y) = 0`; the polynomial frame is
/// anchored so that `x = 0` is the reference abscissa (`P` is fixed to 0).
pub fn antiderivative_q(f: &Poly2) -> Poly2 {
    f.antiderivative_x()
}

/// Local frame of a (possibly periodically shifted) background cell:
/// `s = (x - cx) / hx`, `t = (y - cy) / hy` map the cell to `[-1, 1]^2`.
#[derive(Clone, Copy, Debug)]
pub struct OwnerFrame {
    pub cx: f64,
    pub cy: f64,
    pub hx: f64,
    pub hy: f64,
}

impl OwnerFrame {
    pub fn new(grid: &Grid2D, owner: CellIndex, shift: (i64, i64)) -> Self {
        let c = grid.cell_center(owner);
        let (lx, ly) = grid.period();
        Self {
            // the owner copy the segments actually touch is the wrapped
            // cell translated back by the wrap shift
            cx: c.x - shift.0 as f64 * lx,
            cy: c.y - shift.1 as f64 * ly,
            hx: 0.5 * grid.dx,
            hy: 0.5 * grid.dy,
        }
    }

    #[inline]
    pub fn to_ref(&self, p: Point) -> (f64, f64) {
        ((p.x - self.cx) / self.hx, (p.y - self.cy) / self.hy)
    }
}

/// `int Q dy` over one outer piece in the traversal direction `sign`,
/// with `q` expressed in the owner frame.
pub fn line_integral_outer(
    piece_gauss: &[(Point, f64)],
    sign: f64,
    frame: &OwnerFrame,
    q: &Poly2,
) -> f64 {
    let mut acc = 0.0;
    for &(p, w) in piece_gauss {
        let (s, t) = frame.to_ref(p);
        acc += w * q.eval(s, t);
    }
    // dy carries the physical measure; Q was integrated in s, so scale by hx
    sign * frame.hx * acc
}

/// `int Q dy` over one inner segment. Horizontal segments carry `dy = 0`
/// and vanish identically.
pub fn line_integral_inner(
    seg: &InnerSeg,
    rule: &(Vec<f64>, Vec<f64>),
    frame: &OwnerFrame,
    q: &Poly2,
) -> f64 {
    if seg.axis == Axis::Y {
        return 0.0;
    }
    let half = 0.5 * (seg.c1 - seg.c0);
    let mid = 0.5 * (seg.c0 + seg.c1);
    let s = (seg.value - frame.cx) / frame.hx;
    let mut acc = 0.0;
    for (&n, &w) in rule.0.iter().zip(&rule.1) {
        let t = (mid + half * n - frame.cy) / frame.hy;
        acc += w * q.eval(s, t);
    }
    seg.sign * frame.hx * acc * half
}

/// Weak-form right-hand side of one Eulerian cell: for every basis index,
/// the integral of `u^n psi^*_m` over the upstream cell, evaluated as
/// Green's-theorem line integrals over the segment set.
pub fn assemble_rhs(
    u: &DGField2D,
    cell: &UpstreamCell,
    set: &SegmentSet,
    star: &TestFunctionStar,
    table: &EdgeTable,
    rules: &SegmentRules,
) -> Vec<f64> {
    let cache = build_u_poly_cache(u);
    assemble_rhs_cached(u, cell, set, star, table, rules, &cache)
}

pub(crate) fn build_u_poly_cache(u: &DGField2D) -> Vec<Poly2> {
    let dim = u.dim();
    (0..u.grid.n_cells())
        .map(|f| modal_to_poly(u.spec, &u.coeffs[f * dim..(f + 1) * dim]))
        .collect()
}

fn assemble_rhs_cached(
    u: &DGField2D,
    cell: &UpstreamCell,
    set: &SegmentSet,
    star: &TestFunctionStar,
    table: &EdgeTable,
    rules: &SegmentRules,
    u_polys: &[Poly2],
) -> Vec<f64> {
    let grid = &u.grid;
    let dim = u.dim();
    let _ = cell;

    // group segments by owner copy, preserving a deterministic order
    type Key = (usize, usize, i64, i64);
    let mut groups: Vec<(Key, Vec<usize>, Vec<usize>)> = Vec::new();
    let find = |groups: &mut Vec<(Key, Vec<usize>, Vec<usize>)>, key: Key| -> usize {
        if let Some(i) = groups.iter().position(|(k, _, _)| *k == key) {
            i
        } else {
            groups.push((key, Vec::new(), Vec::new()));
            groups.len() - 1
        }
    };
    for (idx, o) in set.outer.iter().enumerate() {
        let g = find(&mut groups, (o.owner.i, o.owner.j, o.shift.0, o.shift.1));
        groups[g].1.push(idx);
    }
    for (idx, i) in set.inner.iter().enumerate() {
        if i.axis == Axis::Y {
            continue; // dy = 0
        }
        let g = find(&mut groups, (i.owner.i, i.owner.j, i.shift.0, i.shift.1));
        groups[g].2.push(idx);
    }

    let mut rhs = vec![0.0; dim];
    let mut gpts: Vec<(f64, f64, f64)> = Vec::new();
    for (key, outer_ids, inner_ids) in groups {
        let owner = CellIndex { i: key.0, j: key.1 };
        let frame = OwnerFrame::new(grid, owner, (key.2, key.3));

        // gauss nodes of this group's segments in the owner frame,
        // weights carrying sign and physical dy
        gpts.clear();
        for &idx in &outer_ids {
            let o = &set.outer[idx];
            for &(p, w) in &table.edges[o.edge].pieces[o.piece].gauss {
                let (s, t) = frame.to_ref(p);
                gpts.push((s, t, o.sign * w));
            }
        }
        for &idx in &inner_ids {
            let seg = &set.inner[idx];
            let half = 0.5 * (seg.c1 - seg.c0);
            let mid = 0.5 * (seg.c0 + seg.c1);
            let s = (seg.value - frame.cx) / frame.hx;
            for (&n, &w) in rules.straight.0.iter().zip(&rules.straight.1) {
                let t = (mid + half * n - frame.cy) / frame.hy;
                gpts.push((s, t, seg.sign * w * half));
            }
        }

        let u_poly = &u_polys[grid.flat(owner)];
        for m in 0..dim {
            // psi^*_m re-expressed in the owner frame
            let psi = star.polys[m].affine_sub(
                frame.hx / star.scale,
                (frame.cx - star.x0) / star.scale,
                frame.hy / star.scale,
                (frame.cy - star.y0) / star.scale,
            );
            let q = u_poly.mul(&psi).antiderivative_x();
            let mut acc = 0.0;
            for &(s, t, w) in &gpts {
                acc += w * q.eval(s, t);
            }
            rhs[m] += frame.hx * acc;
        }
    }
    rhs
}

/// One 2D SLDG step of size `dt`. Traced vertices are shared between
/// neighboring cells (corners once per grid node, side midpoints once per
/// edge), so adjacent upstream cells have bit-identical shared sides and
/// mass telescopes across the grid.
pub fn step2d(
    u: &DGField2D,
    dt: f64,
    field: &dyn Flow,
    mode: CellMode,
    trace_substeps: usize,
) -> Result<(DGField2D, StepStats)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SldgError::InvalidInput(format!("bad time step {dt}")));
    }
    let grid = u.grid.clone();
    let spec = u.spec;
    let k = spec.degree;
    let dim = spec.dim_2d();
    let (nx, ny) = (grid.nx, grid.ny);
    let t_next = u.time + dt;

    let need_mids = mode == CellMode::Qc || k >= 2;
    let need_centers = k >= 2;

    let trace = |p: Point| -> Result<Point> {
        let foot = trace_backward(TraceRequest {
            point: p,
            t_next,
            dt,
            field,
            substeps: trace_substeps,
        })?;
        Ok(snap_vertex(foot, &grid))
    };

    // phase 1: trace the extended node set
    let corner_feet: Vec<Point> = (0..(nx + 1) * (ny + 1))
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % (nx + 1), idx / (nx + 1));
            trace(Point::new(grid.node_x(i as i64), grid.node_y(j as i64)))
        })
        .collect::<Result<_>>()?;
    let corner = |i: usize, j: usize| corner_feet[j * (nx + 1) + i];

    let (vmid_feet, hmid_feet) = if need_mids {
        let v: Vec<Point> = (0..(nx + 1) * ny)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx % (nx + 1), idx / (nx + 1));
                trace(Point::new(
                    grid.node_x(i as i64),
                    grid.node_y(j as i64) + 0.5 * grid.dy,
                ))
            })
            .collect::<Result<_>>()?;
        let h: Vec<Point> = (0..nx * (ny + 1))
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx % nx, idx / nx);
                trace(Point::new(
                    grid.node_x(i as i64) + 0.5 * grid.dx,
                    grid.node_y(j as i64),
                ))
            })
            .collect::<Result<_>>()?;
        (v, h)
    } else {
        (Vec::new(), Vec::new())
    };
    let vmid = |i: usize, j: usize| vmid_feet[j * (nx + 1) + i];
    let hmid = |i: usize, j: usize| hmid_feet[j * nx + i];

    let center_feet: Vec<Point> = if need_centers {
        (0..nx * ny)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx % nx, idx / nx);
                trace(Point::new(
                    grid.node_x(i as i64) + 0.5 * grid.dx,
                    grid.node_y(j as i64) + 0.5 * grid.dy,
                ))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    // phase 2: shared edges, subdivided against the grid once each
    let rules = SegmentRules::for_degree(k);
    let curved = mode == CellMode::Qc;
    let h_scale = grid.dx.max(grid.dy);
    let make_edge = |a: Point, m: Option<Point>, b: Point| -> Result<Edge> {
        match m {
            Some(mid) if curved => Edge::quadratic(a, mid, b, grid.eps_geom(), h_scale),
            _ => Ok(Edge::straight(a, b)),
        }
    };
    let vertical: Vec<_> = (0..(nx + 1) * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % (nx + 1), idx / (nx + 1));
            let mid = if need_mids { Some(vmid(i, j)) } else { None };
            build_shared_edge(make_edge(corner(i, j), mid, corner(i, j + 1))?, &grid, &rules)
        })
        .collect::<Result<_>>()?;
    let horizontal: Vec<_> = (0..nx * (ny + 1))
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let mid = if need_mids { Some(hmid(i, j)) } else { None };
            build_shared_edge(make_edge(corner(i, j), mid, corner(i + 1, j))?, &grid, &rules)
        })
        .collect::<Result<_>>()?;
    let v_base = 0usize;
    let h_base = vertical.len();
    let mut table = EdgeTable::default();
    table.edges = vertical;
    table.edges.extend(horizontal);
    let v_id = |i: usize, j: usize| v_base + j * (nx + 1) + i;
    let h_id = |i: usize, j: usize| h_base + j * nx + i;

    // phase 3: per-cell geometry, test functions, and moment assembly
    let u_polys = build_u_poly_cache(u);
    let cell_results: Vec<(Vec<f64>, bool)> = (0..nx * ny)
        .into_par_iter()
        .map(|flat| -> Result<(Vec<f64>, bool)> {
            let cell_idx = grid.cell_at(flat);
            let (i, j) = (cell_idx.i, cell_idx.j);
            let corners = [
                corner(i, j),
                corner(i + 1, j),
                corner(i + 1, j + 1),
                corner(i, j + 1),
            ];
            let midpoints = if curved {
                Some([hmid(i, j), vmid(i + 1, j), hmid(i, j + 1), vmid(i, j)])
            } else {
                None
            };
            let sides = [
                (h_id(i, j), true),
                (v_id(i + 1, j), true),
                (h_id(i, j + 1), false),
                (v_id(i, j), false),
            ];
            let cell = finish_cell(cell_idx, corners, midpoints, sides, &grid, &table)
                .map_err(|e| match e {
                    SldgError::InvertedCell { cell, area, .. } => {
                        SldgError::InvertedCell { cell, time: t_next, area }
                    }
                    other => other,
                })?;

            let set = find_segments(&cell, &grid, &table)?;

            let star = if k >= 2 {
                let feet = [
                    corners[0],
                    corners[1],
                    corners[2],
                    corners[3],
                    hmid(i, j),
                    vmid(i + 1, j),
                    hmid(i, j + 1),
                    vmid(i, j),
                    center_feet[flat],
                ];
                reconstruct_test_functions(&feet, &REF_PTS_9, spec, cell_idx)?
            } else {
                reconstruct_test_functions(&corners, &REF_PTS_9[..4], spec, cell_idx)?
            };

            let rhs = assemble_rhs_cached(u, &cell, &set, &star, &table, &rules, &u_polys);
            Ok((rhs, cell.area_flagged))
        })
        .collect::<Result<_>>()?;

    // phase 4: diagonal mass solve
    let inv_mass = 4.0 / grid.cell_area();
    let mut coeffs = vec![0.0; nx * ny * dim];
    let mut stats = StepStats::default();
    for (flat, (rhs, flagged)) in cell_results.into_iter().enumerate() {
        for m in 0..dim {
            coeffs[flat * dim + m] = rhs[m] * inv_mass;
        }
        stats.area_flagged += flagged as usize;
    }

    Ok((
        DGField2D { grid, spec, coeffs, time: t_next },
        stats,
    ))
}

/// One 1D SLDG step: trace the Gauss-Lobatto nodes of each cell, build the
/// degree-k interpolant of the test function through the feet, split the
/// upstream interval at grid nodes, and integrate `u^n psi^*` exactly on
/// each sub-interval.
pub fn step1d(
    u: &DGField1D,
    dt: f64,
    field: &dyn Flow,
    trace_substeps: usize,
) -> Result<DGField1D> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SldgError::InvalidInput(format!("bad time step {dt}")));
    }
    let grid = u.grid.clone();
    let k = u.spec.degree;
    let dim = k + 1;
    let n = grid.n_cells;
    let t_next = u.time + dt;
    let snap_tol = 1e-9 * grid.dx;
    let snap = |x: f64| {
        let line = ((x - grid.x_lo) / grid.dx).round();
        let lv = grid.x_lo + line * grid.dx;
        if (x - lv).abs() <= snap_tol {
            lv
        } else {
            x
        }
    };

    let trace_x = |x: f64| -> Result<f64> {
        let foot = trace_backward(TraceRequest {
            point: Point::new(x, 0.0),
            t_next,
            dt,
            field,
            substeps: trace_substeps,
        })?;
        Ok(snap(foot.x))
    };

    // feet of the shared cell-boundary nodes (extended set)
    let node_feet: Vec<f64> = (0..=n)
        .map(|i| trace_x(grid.node_x(i as i64)))
        .collect::<Result<_>>()?;

    let lobatto = gauss_lobatto_nodes(dim);
    let (gx, gw) = gauss_legendre(dim);
    let mut coeffs = vec![0.0; n * dim];

    for i in 0..n {
        let (left, right) = (node_feet[i], node_feet[i + 1]);
        if right - left <= 0.0 {
            return Err(SldgError::InvertedInterval { cell: i, left, right });
        }

        // feet of the interpolation points; boundary nodes reuse the
        // shared feet so adjacent upstream intervals tile exactly
        let xc = grid.cell_center(i);
        let mut feet = [0.0f64; 4];
        for (q, &node) in lobatto.iter().enumerate() {
            feet[q] = if k == 0 {
                trace_x(xc)?
            } else if q == 0 {
                left
            } else if q == dim - 1 {
                right
            } else {
                trace_x(xc + 0.5 * grid.dx * node)?
            };
        }

        // Newton interpolation of psi^*_m through (foot_q, Psi_m(node_q))
        let mut newtons: Vec<[f64; 4]> = Vec::with_capacity(dim);
        for m in 0..dim {
            let mut c = [0.0f64; 4];
            for (q, &node) in lobatto.iter().enumerate() {
                c[q] = crate::basis::ell(m, node);
            }
            for level in 1..dim {
                for q in (level..dim).rev() {
                    c[q] = (c[q] - c[q - 1]) / (feet[q] - feet[q - level]);
                }
            }
            newtons.push(c);
        }
        let psi_eval = |c: &[f64; 4], x: f64| -> f64 {
            let mut acc = c[dim - 1];
            for q in (0..dim - 1).rev() {
                acc = acc * (x - feet[q]) + c[q];
            }
            acc
        };

        // split the upstream interval at grid nodes
        let j_lo = ((left - grid.x_lo) / grid.dx).floor() as i64;
        let j_hi = ((right - grid.x_lo) / grid.dx).ceil() as i64;
        let mut cuts = vec![left];
        for jn in j_lo..=j_hi {
            let xnode = grid.node_x(jn);
            if xnode > left && xnode < right {
                cuts.push(xnode);
            }
        }
        cuts.push(right);

        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let (bg, shift) = grid.locate_wrapped(mid)?;
            let bg_center = grid.cell_center(bg) - shift as f64 * grid.length();
            let bg_coeffs = u.cell_coeffs(bg);
            for (&node, &weight) in gx.iter().zip(&gw) {
                let x = mid + half * node;
                let s = 2.0 * (x - bg_center) / grid.dx;
                let uval = crate::basis::eval_modal_1d(bg_coeffs, s);
                for m in 0..dim {
                    coeffs[i * dim + m] += weight * half * uval * psi_eval(&newtons[m], x);
                }
            }
        }
    }

    // diagonal mass solve
    let inv_mass = 2.0 / grid.dx;
    for c in &mut coeffs {
        *c *= inv_mass;
    }

    Ok(DGField1D { grid, spec: u.spec, coeffs, time: t_next })
}
