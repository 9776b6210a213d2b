//! Modal DG fields: projection of initial data, point evaluation, error
//! norms, and total mass.

use crate::basis::{eval_modal_1d, eval_modal_2d, phi2d, BasisSpec};
use crate::grid::{CellIndex, Grid1D, Grid2D};
use crate::quadrature::gauss_legendre;
use crate::{Point, Result, SldgError};

/// L1/L2/Linf error norms. L1 and L2 are reported in the mean sense, i.e.
/// scaled by the domain measure, matching the convention of the benchmark
/// tables this solver reproduces.
#[derive(Clone, Copy, Debug, Default)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Debug)]
pub struct DGField1D {
    pub grid: Grid1D,
    pub spec: BasisSpec,
    /// `n_cells * (k + 1)` modal coefficients, cell-major.
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl DGField1D {
    pub fn cell_coeffs(&self, i: usize) -> &[f64] {
        let dim = self.spec.dim_1d();
        &self.coeffs[i * dim..(i + 1) * dim]
    }

    /// Cell average; the degree-0 coefficient times `1/sqrt(2)`.
    pub fn cell_average(&self, i: usize) -> f64 {
        self.cell_coeffs(i)[0] / std::f64::consts::SQRT_2
    }

    pub fn evaluate(&self, i: usize, x: f64) -> Result<f64> {
        if i >= self.grid.n_cells {
            return Err(SldgError::InvalidInput(format!("cell {i} out of range")));
        }
        let s = 2.0 * (x - self.grid.cell_center(i)) / self.grid.dx;
        Ok(eval_modal_1d(self.cell_coeffs(i), s))
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum((0..self.grid.n_cells).map(|i| self.cell_average(i) * self.grid.dx))
    }

    pub fn error_norms(&self, exact: impl Fn(f64) -> f64) -> Norms {
        let (xs, ws) = gauss_legendre(self.spec.degree + 3);
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        let mut linf: f64 = 0.0;
        for i in 0..self.grid.n_cells {
            let xc = self.grid.cell_center(i);
            let coeffs = self.cell_coeffs(i);
            for (s, w) in xs.iter().zip(&ws) {
                let x = xc + 0.5 * self.grid.dx * s;
                let e = (eval_modal_1d(coeffs, *s) - exact(x)).abs();
                // physical measure dx/2 per unit reference weight
                l1 += w * e * 0.5 * self.grid.dx;
                l2 += w * e * e * 0.5 * self.grid.dx;
                linf = linf.max(e);
            }
        }
        let measure = self.grid.length();
        Norms { l1: l1 / measure, l2: (l2 / measure).sqrt(), linf }
    }
}

/// L2 projection of `f` onto the 1D DG space with a `(k+3)`-point Gauss
/// rule per cell; exact for polynomials of degree `<= k`.
pub fn project_1d(f: impl Fn(f64) -> f64, grid: &Grid1D, spec: BasisSpec) -> Result<DGField1D> {
    let dim = spec.dim_1d();
    let (xs, ws) = gauss_legendre(spec.degree + 3);
    let mut coeffs = vec![0.0; grid.n_cells * dim];
    for i in 0..grid.n_cells {
        let xc = grid.cell_center(i);
        for (s, w) in xs.iter().zip(&ws) {
            let v = f(xc + 0.5 * grid.dx * s);
            if !v.is_finite() {
                return Err(SldgError::InvalidInput(format!(
                    "initial data non-finite at x = {}",
                    xc + 0.5 * grid.dx * s
                )));
            }
            for m in 0..dim {
                coeffs[i * dim + m] += w * v * crate::basis::ell(m, *s);
            }
        }
    }
    Ok(DGField1D { grid: grid.clone(), spec, coeffs, time: 0.0 })
}

#[derive(Clone, Debug)]
pub struct DGField2D {
    pub grid: Grid2D,
    pub spec: BasisSpec,
    /// `nx * ny * dim` modal coefficients, cell-major with cells flattened
    /// row-major in `j`.
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl DGField2D {
    pub fn dim(&self) -> usize {
        self.spec.dim_2d()
    }

    pub fn cell_coeffs(&self, cell: CellIndex) -> &[f64] {
        let dim = self.dim();
        let f = self.grid.flat(cell);
        &self.coeffs[f * dim..(f + 1) * dim]
    }

    /// Cell average; the degree-0 coefficient times `1/2`.
    pub fn cell_average(&self, cell: CellIndex) -> f64 {
        self.cell_coeffs(cell)[0] * 0.5
    }

    pub fn evaluate(&self, cell: CellIndex, p: Point) -> Result<f64> {
        if cell.i >= self.grid.nx || cell.j >= self.grid.ny {
            return Err(SldgError::InvalidInput(format!("cell {cell} out of range")));
        }
        let c = self.grid.cell_center(cell);
        let s = 2.0 * (p.x - c.x) / self.grid.dx;
        let t = 2.0 * (p.y - c.y) / self.grid.dy;
        Ok(eval_modal_2d(self.spec, self.cell_coeffs(cell), s, t))
    }

    /// Deterministic compensated reduction of cell averages times areas.
    pub fn total_mass(&self) -> f64 {
        let area = self.grid.cell_area();
        let dim = self.dim();
        neumaier_sum(
            (0..self.grid.n_cells()).map(|f| self.coeffs[f * dim] * 0.5 * area),
        )
    }

    pub fn error_norms(&self, exact: impl Fn(f64, f64) -> f64) -> Norms {
        let (xs, ws) = gauss_legendre(self.spec.degree + 3);
        let cell_measure = 0.25 * self.grid.cell_area();
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        let mut linf: f64 = 0.0;
        for flat in 0..self.grid.n_cells() {
            let cell = self.grid.cell_at(flat);
            let c = self.grid.cell_center(cell);
            let coeffs = self.cell_coeffs(cell);
            for (s, wx) in xs.iter().zip(&ws) {
                for (t, wy) in xs.iter().zip(&ws) {
                    let x = c.x + 0.5 * self.grid.dx * s;
                    let y = c.y + 0.5 * self.grid.dy * t;
                    let e = (eval_modal_2d(self.spec, coeffs, *s, *t) - exact(x, y)).abs();
                    let w = wx * wy * cell_measure;
                    l1 += w * e;
                    l2 += w * e * e;
                    linf = linf.max(e);
                }
            }
        }
        let measure = self.grid.domain_area();
        Norms { l1: l1 / measure, l2: (l2 / measure).sqrt(), linf }
    }

    /// CSV snapshot: `i, j, cell_center_x, cell_center_y, cell_average,
    /// coeff_0..coeff_{dim-1}`.
    pub fn snapshot_csv(&self) -> String {
        use std::fmt::Write;
        let dim = self.dim();
        let mut out = String::new();
        out.push_str("i,j,cell_center_x,cell_center_y,cell_average");
        for m in 0..dim {
            write!(out, ",coeff_{m}").unwrap();
        }
        out.push('\n');
        for flat in 0..self.grid.n_cells() {
            let cell = self.grid.cell_at(flat);
            let c = self.grid.cell_center(cell);
            write!(
                out,
                "{},{},{},{},{}",
                cell.i,
                cell.j,
                fmt_e17(c.x),
                fmt_e17(c.y),
                fmt_e17(self.cell_average(cell))
            )
            .unwrap();
            for &v in self.cell_coeffs(cell) {
                write!(out, ",{}", fmt_e17(v)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// L2 projection of `f` onto the 2D DG space with a `(k+3)^2` tensor Gauss
/// rule per cell; exact for polynomials of total degree `<= k`.
pub fn project_2d(
    f: impl Fn(f64, f64) -> f64,
    grid: &Grid2D,
    spec: BasisSpec,
) -> Result<DGField2D> {
    if spec.degree > 2 {
        return Err(SldgError::InvalidInput(
            "2D basis degree is limited to k <= 2".into(),
        ));
    }
    let dim = spec.dim_2d();
    let (xs, ws) = gauss_legendre(spec.degree + 3);
    let mut coeffs = vec![0.0; grid.n_cells() * dim];
    for flat in 0..grid.n_cells() {
        let cell = grid.cell_at(flat);
        let c = grid.cell_center(cell);
        for (s, wx) in xs.iter().zip(&ws) {
            for (t, wy) in xs.iter().zip(&ws) {
                let x = c.x + 0.5 * grid.dx * s;
                let y = c.y + 0.5 * grid.dy * t;
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(SldgError::InvalidInput(format!(
                        "initial data non-finite at ({x}, {y})"
                    )));
                }
                let w = wx * wy * v;
                for m in 0..dim {
                    coeffs[flat * dim + m] += w * phi2d(spec, m, *s, *t);
                }
            }
        }
    }
    Ok(DGField2D { grid: grid.clone(), spec, coeffs, time: 0.0 })
}

/// 17-significant-digit scientific notation; round-trips every f64 and keeps
/// golden CSV files byte-stable.
pub fn fmt_e17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Neumaier compensated summation in the iterator's order.
pub fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_projects_to_pure_average() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 5, 4).unwrap();
        let u = project_2d(|_, _| 1.0, &g, BasisSpec::new(1).unwrap()).unwrap();
        for flat in 0..g.n_cells() {
            let cell = g.cell_at(flat);
            assert!((u.cell_average(cell) - 1.0).abs() < 1e-14);
            for &c in &u.cell_coeffs(cell)[1..] {
                assert!(c.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_reproduced_exactly() {
        let g = Grid1D::new(0.0, 1.0, 1).unwrap();
        let u = project_1d(|x| x, &g, BasisSpec::new(1).unwrap()).unwrap();
        assert!((u.evaluate(0, 0.5).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degree_two_product_reproduced_at_gauss_points() {
        let g = Grid2D::new([0.0, 2.0, -1.0, 1.0], 3, 3).unwrap();
        let u = project_2d(|x, y| x * y, &g, BasisSpec::new(2).unwrap()).unwrap();
        let (xs, _) = gauss_legendre(3);
        for flat in 0..g.n_cells() {
            let cell = g.cell_at(flat);
            let c = g.cell_center(cell);
            for &s in &xs {
                for &t in &xs {
                    let p = Point::new(c.x + 0.5 * g.dx * s, c.y + 0.5 * g.dy * t);
                    assert!((u.evaluate(cell, p).unwrap() - p.x * p.y).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn projection_error_of_smooth_data_is_small() {
        // sin(x+y) on a 20x20 grid with k=2 projects to within 1e-3 in L2
        let g = Grid2D::new([0.0, 2.0 * PI, 0.0, 2.0 * PI], 20, 20).unwrap();
        let u = project_2d(|x, y| (x + y).sin(), &g, BasisSpec::new(2).unwrap()).unwrap();
        let n = u.error_norms(|x, y| (x + y).sin());
        assert!(n.l2 > 0.0 && n.l2 < 1e-3, "L2 = {}", n.l2);
    }

    #[test]
    fn projection_is_idempotent() {
        let g = Grid2D::new([0.0, 2.0 * PI, 0.0, 2.0 * PI], 8, 8).unwrap();
        let spec = BasisSpec::new(2).unwrap();
        let u = project_2d(|x, y| (x * 0.8).sin() * (1.3 * y).cos(), &g, spec).unwrap();
        let v = project_2d(
            |x, y| {
                let cell = g.locate_cell(Point::new(x, y)).unwrap();
                u.evaluate(cell, Point::new(x, y)).unwrap()
            },
            &g,
            spec,
        )
        .unwrap();
        for (a, b) in u.coeffs.iter().zip(&v.coeffs) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn mass_of_unit_field_is_domain_area() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 7, 9).unwrap();
        let u = project_2d(|_, _| 1.0, &g, BasisSpec::new(2).unwrap()).unwrap();
        assert!((u.total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mass_of_sine_vanishes_by_symmetry() {
        let g = Grid1D::new(0.0, 2.0 * PI, 32).unwrap();
        let u = project_1d(|x| x.sin(), &g, BasisSpec::new(2).unwrap()).unwrap();
        assert!(u.total_mass().abs() < 1e-13);
    }

    #[test]
    fn norms_vanish_for_exact_representation() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 4, 4).unwrap();
        let u = project_2d(|x, y| 1.0 + x + y - x * y, &g, BasisSpec::new(2).unwrap()).unwrap();
        let n = u.error_norms(|x, y| 1.0 + x + y - x * y);
        assert!(n.l1 < 1e-13 && n.l2 < 1e-13 && n.linf < 1e-13);
    }
}
