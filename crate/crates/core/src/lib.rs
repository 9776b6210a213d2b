//! Conservative semi-Lagrangian discontinuous Galerkin (SLDG) transport solver.
//!
//! The scheme advances a modal DG solution of the linear transport equation
//! `u_t + div(a u) = 0` by tracing each Eulerian cell backward along
//! characteristics, intersecting the resulting upstream cell with the
//! background Cartesian grid, and evaluating the weak-form moments with
//! Green's theorem line integrals. Time steps are not CFL-restricted.
//!
//! Module map:
//! - [`grid`]: uniform Cartesian meshes with periodic wrapping
//! - [`basis`] / [`poly2`]: orthonormal modal Legendre bases and dense
//!   bivariate polynomial arithmetic
//! - [`field`]: DG fields, projection, norms, mass
//! - [`flows`]: the benchmark velocity fields and exact solutions
//! - [`tracer`]: fifth-order Runge-Kutta backward characteristic tracing
//! - [`upstream`]: upstream-cell geometry, grid intersections, segment search
//! - [`update`]: the 1D and 2D SLDG update
//! - [`limiters`]: bound-preserving filter and TVB minmod
//! - [`harness`]: benchmark driver, convergence sweeps, CSV output

pub mod basis;
pub mod error;
pub mod field;
pub mod flows;
pub mod grid;
pub mod harness;
pub mod limiters;
pub mod lsq;
pub mod poly2;
pub mod quadrature;
pub mod tracer;
pub mod update;
pub mod upstream;

pub use error::SldgError;

/// A point in the plane (1D code uses `y = 0`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

pub type Result<T> = std::result::Result<T, SldgError>;
