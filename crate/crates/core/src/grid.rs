//! Uniform Cartesian meshes in 1D and 2D with periodic wrapping.
//!
//! All boundaries are periodic; compact-support problems run on a domain
//! large enough that the solution never reaches the seam. Points within a
//! snap tolerance of a grid line are treated as lying on it, and ties
//! resolve to the cell on the positive side, so that vertex classification
//! is consistent across edges.

use crate::{Point, Result, SldgError};

/// Relative snap tolerance: a coordinate within `EPS_GEOM_REL * max(dx, dy)`
/// of a grid line is treated as on it.
pub const EPS_GEOM_REL: f64 = 1e-12;

/// Index of a 2D cell after periodic wrap: `0 <= i < nx`, `0 <= j < ny`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

impl std::fmt::Display for CellIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Integer number of periods added to a point to wrap it into the domain.
pub type WrapShift = (i64, i64);

#[derive(Clone, Debug)]
pub struct Grid1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite()) || x_hi <= x_lo || n_cells == 0 {
            return Err(SldgError::InvalidInput(format!(
                "bad 1D grid: [{x_lo}, {x_hi}] with {n_cells} cells"
            )));
        }
        let dx = (x_hi - x_lo) / n_cells as f64;
        Ok(Self { x_lo, x_hi, n_cells, dx })
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn eps_geom(&self) -> f64 {
        EPS_GEOM_REL * self.dx
    }

    /// Left face of cell `i` (also valid for `i = n_cells` and unwrapped
    /// integer indices outside the fundamental range).
    pub fn node_x(&self, i: i64) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx
    }

    /// Wraps `x` into `[x_lo, x_hi)` and reports the shift in periods that
    /// was added, so `wrapped - shift * length` recovers `x`.
    pub fn wrap_x(&self, x: f64) -> (f64, i64) {
        let len = self.length();
        let k = ((x - self.x_lo) / len).floor();
        if k == 0.0 {
            return (x, 0);
        }
        (x - k * len, -k as i64)
    }

    /// Cell containing `x` (after periodic wrap), plus the applied shift.
    /// Coordinates within the snap tolerance of a face resolve to the cell
    /// on the positive side.
    pub fn locate_wrapped(&self, x: f64) -> Result<(usize, i64)> {
        if !x.is_finite() {
            return Err(SldgError::InvalidInput(format!("non-finite coordinate {x}")));
        }
        let i_raw = snap_floor(x, self.x_lo, self.dx, self.eps_geom());
        let n = self.n_cells as i64;
        let i = i_raw.rem_euclid(n);
        Ok((i as usize, (i - i_raw) / n))
    }

    pub fn locate(&self, x: f64) -> Result<usize> {
        self.locate_wrapped(x).map(|(i, _)| i)
    }
}

#[derive(Clone, Debug)]
pub struct Grid2D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    pub fn new(domain: [f64; 4], nx: usize, ny: usize) -> Result<Self> {
        let [x_lo, x_hi, y_lo, y_hi] = domain;
        if domain.iter().any(|v| !v.is_finite()) || x_hi <= x_lo || y_hi <= y_lo || nx == 0 || ny == 0 {
            return Err(SldgError::InvalidInput(format!(
                "bad 2D grid: [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] with {nx} x {ny} cells"
            )));
        }
        let dx = (x_hi - x_lo) / nx as f64;
        let dy = (y_hi - y_lo) / ny as f64;
        Ok(Self { x_lo, x_hi, y_lo, y_hi, nx, ny, dx, dy })
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn domain_area(&self) -> f64 {
        (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)
    }

    pub fn period(&self) -> (f64, f64) {
        (self.x_hi - self.x_lo, self.y_hi - self.y_lo)
    }

    pub fn eps_geom(&self) -> f64 {
        EPS_GEOM_REL * self.dx.max(self.dy)
    }

    /// Grid line `x = x_lo + i dx`; valid for unwrapped integer indices.
    pub fn node_x(&self, i: i64) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    /// Grid line `y = y_lo + j dy`; valid for unwrapped integer indices.
    pub fn node_y(&self, j: i64) -> f64 {
        self.y_lo + j as f64 * self.dy
    }

    pub fn cell_center(&self, cell: CellIndex) -> Point {
        Point::new(
            self.x_lo + (cell.i as f64 + 0.5) * self.dx,
            self.y_lo + (cell.j as f64 + 0.5) * self.dy,
        )
    }

    /// Flat storage index of a wrapped cell, row-major in `j`.
    pub fn flat(&self, cell: CellIndex) -> usize {
        debug_assert!(cell.i < self.nx && cell.j < self.ny);
        cell.j * self.nx + cell.i
    }

    pub fn cell_at(&self, flat: usize) -> CellIndex {
        CellIndex { i: flat % self.nx, j: flat / self.nx }
    }

    /// Translates `p` by integer multiples of the period into the
    /// fundamental domain. Idempotent on in-domain points.
    pub fn wrap_point(&self, p: Point) -> (Point, WrapShift) {
        let (lx, ly) = self.period();
        let kx = ((p.x - self.x_lo) / lx).floor();
        let ky = ((p.y - self.y_lo) / ly).floor();
        let wrapped = Point::new(
            if kx == 0.0 { p.x } else { p.x - kx * lx },
            if ky == 0.0 { p.y } else { p.y - ky * ly },
        );
        (wrapped, (-kx as i64, -ky as i64))
    }

    /// Cell whose half-open box contains the wrapped `p`, plus the wrap
    /// shift. Points within the snap tolerance of a grid line resolve to
    /// the cell on the positive side.
    pub fn locate_wrapped(&self, p: Point) -> Result<(CellIndex, WrapShift)> {
        if !p.is_finite() {
            return Err(SldgError::InvalidInput(format!(
                "non-finite point ({}, {})",
                p.x, p.y
            )));
        }
        let eps = self.eps_geom();
        let i_raw = snap_floor(p.x, self.x_lo, self.dx, eps);
        let j_raw = snap_floor(p.y, self.y_lo, self.dy, eps);
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        let i = i_raw.rem_euclid(nx);
        let j = j_raw.rem_euclid(ny);
        Ok((
            CellIndex { i: i as usize, j: j as usize },
            ((i - i_raw) / nx, (j - j_raw) / ny),
        ))
    }

    pub fn locate_cell(&self, p: Point) -> Result<CellIndex> {
        self.locate_wrapped(p).map(|(c, _)| c)
    }
}

/// Unwrapped cell index of coordinate `x` on the lattice `lo + i * h`,
/// snapping to the positive side within `eps` of a lattice line.
fn snap_floor(x: f64, lo: f64, h: f64, eps: f64) -> i64 {
    let u = (x - lo) / h;
    let near = u.round();
    if (x - (lo + near * h)).abs() <= eps {
        near as i64
    } else {
        u.floor() as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn locate_first_cell() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 10, 10).unwrap();
        let c = g.locate_cell(Point::new(0.05, 0.05)).unwrap();
        assert_eq!(c, CellIndex { i: 0, j: 0 });
    }

    #[test]
    fn locate_wraps_by_one_period() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 10, 10).unwrap();
        let (c, shift) = g.locate_wrapped(Point::new(1.05, 0.5)).unwrap();
        assert_eq!(c, CellIndex { i: 0, j: 5 });
        assert_eq!(shift, (-1, 0));
    }

    #[test]
    fn locate_snaps_to_positive_side() {
        let g = Grid2D::new([-PI, PI, -PI, PI], 80, 80).unwrap();
        let c = g.locate_cell(Point::new(0.0, 0.0)).unwrap();
        assert_eq!(c, CellIndex { i: 40, j: 40 });
    }

    #[test]
    fn locate_rejects_non_finite() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 4, 4).unwrap();
        assert!(g.locate_cell(Point::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn wrap_point_examples() {
        let g = Grid2D::new([0.0, 2.0 * PI, 0.0, 2.0 * PI], 8, 8).unwrap();
        let (w, s) = g.wrap_point(Point::new(2.0 * PI + 0.1, 0.0));
        assert!((w.x - 0.1).abs() < 1e-12 && w.y == 0.0);
        assert_eq!(s, (-1, 0));

        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 4, 4).unwrap();
        let (w, s) = g.wrap_point(Point::new(-0.3, -0.3));
        assert!((w.x - 0.7).abs() < 1e-12 && (w.y - 0.7).abs() < 1e-12);
        assert_eq!(s, (1, 1));

        let p = Point::new(0.25, 0.75);
        let (w, s) = g.wrap_point(p);
        assert_eq!((w, s), (p, (0, 0)));
    }

    #[test]
    fn cell_areas_sum_to_domain_area() {
        let g = Grid2D::new([-PI, PI, 0.0, 1.0], 17, 23).unwrap();
        let total: f64 = (0..g.n_cells()).map(|_| g.cell_area()).sum();
        assert!((total - g.domain_area()).abs() <= 1e-14 * g.domain_area());
    }

    proptest! {
        #[test]
        fn wrap_then_unshift_recovers_point(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let g = Grid2D::new([-2.0, 3.0, 1.0, 2.5], 7, 5).unwrap();
            let p = Point::new(x, y);
            let (w, (sx, sy)) = g.wrap_point(p);
            let (lx, ly) = g.period();
            prop_assert!((w.x - sx as f64 * lx - p.x).abs() <= 1e-12 * (1.0 + x.abs()));
            prop_assert!((w.y - sy as f64 * ly - p.y).abs() <= 1e-12 * (1.0 + y.abs()));
            // wrapping is idempotent on in-domain points
            let (w2, s2) = g.wrap_point(w);
            prop_assert_eq!(s2, (0, 0));
            prop_assert_eq!(w2, w);
        }

        #[test]
        fn located_cell_contains_point(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 9, 11).unwrap();
            let c = g.locate_cell(Point::new(x, y)).unwrap();
            let eps = g.eps_geom();
            let (x0, y0) = (g.node_x(c.i as i64), g.node_y(c.j as i64));
            prop_assert!(x >= x0 - eps && x <= x0 + g.dx + eps);
            prop_assert!(y >= y0 - eps && y <= y0 + g.dy + eps);
        }
    }
}
