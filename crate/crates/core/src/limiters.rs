//! Bound-preserving filter and a TVB minmod fallback for discontinuous
//! tests.

use crate::basis::modal_to_poly;
use crate::field::DGField2D;
use crate::grid::CellIndex;
use crate::poly2::Poly2;
use crate::{Result, SldgError};

/// Summary of one bound-preserving filter application.
#[derive(Clone, Copy, Debug, Default)]
pub struct FilterReport {
    pub cells_modified: usize,
    /// Certified candidate-set minimum before / after filtering.
    pub min_before: f64,
    pub min_after: f64,
    /// Largest `1 - theta` applied.
    pub max_theta_deviation: f64,
}

/// Candidate points where a `P^k` polynomial on the reference square can
/// attain its extrema: the four corners, the interior critical point of
/// each edge restriction, and the interior stationary point.
fn extremum_candidates(poly: &Poly2, k: usize) -> Vec<(f64, f64)> {
    let mut pts = vec![(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    if k < 2 {
        return pts;
    }
    let b10 = poly.coeff(1, 0);
    let b01 = poly.coeff(0, 1);
    let b20 = poly.coeff(2, 0);
    let b11 = poly.coeff(1, 1);
    let b02 = poly.coeff(0, 2);
    // edge restrictions t = +-1: quadratic in s
    for t in [-1.0, 1.0] {
        if b20.abs() > 0.0 {
            let s = -(b10 + b11 * t) / (2.0 * b20);
            if s.abs() < 1.0 {
                pts.push((s, t));
            }
        }
    }
    for s in [-1.0, 1.0] {
        if b02.abs() > 0.0 {
            let t = -(b01 + b11 * s) / (2.0 * b02);
            if t.abs() < 1.0 {
                pts.push((s, t));
            }
        }
    }
    // interior stationary point of the full quadratic
    let det = 4.0 * b20 * b02 - b11 * b11;
    if det.abs() > 1e-300 {
        let s = (-2.0 * b02 * b10 + b11 * b01) / det;
        let t = (-2.0 * b20 * b01 + b11 * b10) / det;
        if s.abs() <= 1.0 && t.abs() <= 1.0 {
            pts.push((s, t));
        }
    }
    pts
}

/// Certified minimum of one cell's polynomial over the candidate set.
pub fn candidate_min(u: &DGField2D, cell: CellIndex) -> f64 {
    let poly = modal_to_poly(u.spec, u.cell_coeffs(cell));
    extremum_candidates(&poly, u.spec.degree)
        .iter()
        .map(|&(s, t)| poly.eval(s, t))
        .fold(f64::INFINITY, f64::min)
}

/// Certified maximum over the candidate set.
pub fn candidate_max(u: &DGField2D, cell: CellIndex) -> f64 {
    let poly = modal_to_poly(u.spec, u.cell_coeffs(cell));
    extremum_candidates(&poly, u.spec.degree)
        .iter()
        .map(|&(s, t)| poly.eval(s, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Bound-preserving filter: within each cell, scales the deviation from
/// the cell average by `theta = min(|mean / (min - mean)|, 1)` so the
/// minimum over the candidate set becomes nonnegative. Cell averages are
/// preserved exactly.
pub fn bp_filter(u: &DGField2D) -> Result<(DGField2D, FilterReport)> {
    let dim = u.dim();
    let mut out = u.clone();
    let mut report = FilterReport {
        min_before: f64::INFINITY,
        min_after: f64::INFINITY,
        ..Default::default()
    };
    for flat in 0..u.grid.n_cells() {
        let cell = u.grid.cell_at(flat);
        let mean = u.cell_average(cell);
        if mean < -1e-13 {
            return Err(SldgError::ContractViolation(format!(
                "negative cell average {mean:e} in cell {cell} reached the BP filter"
            )));
        }
        let m_min = candidate_min(u, cell);
        report.min_before = report.min_before.min(m_min);
        if m_min >= 0.0 {
            report.min_after = report.min_after.min(m_min);
            continue;
        }
        let denom = m_min - mean;
        let theta = if denom.abs() > 0.0 {
            (mean / denom).abs().min(1.0)
        } else {
            1.0
        };
        if theta < 1.0 {
            for m in 1..dim {
                out.coeffs[flat * dim + m] *= theta;
            }
            report.cells_modified += 1;
            report.max_theta_deviation = report.max_theta_deviation.max(1.0 - theta);
        }
        report.min_after = report.min_after.min(candidate_min(&out, cell));
    }
    Ok((out, report))
}

fn minmod(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

fn minmod_tvb(a: f64, b: f64, c: f64, threshold: f64) -> f64 {
    if a.abs() <= threshold {
        a
    } else {
        minmod(a, b, c)
    }
}

/// Classic TVB minmod limiter on the linear modes, using the periodic
/// neighbor cell averages. Cells passing the TVB test are untouched;
/// limited cells keep their average, take the limited slopes, and drop
/// their higher modes.
pub fn minmod_limiter(u: &DGField2D, tvb_m: f64) -> DGField2D {
    let grid = &u.grid;
    let dim = u.dim();
    let mut out = u.clone();
    if u.spec.degree == 0 {
        return out;
    }
    let sqrt3_half = 0.75f64.sqrt();
    let avg = |i: i64, j: i64| {
        let cell = CellIndex {
            i: i.rem_euclid(grid.nx as i64) as usize,
            j: j.rem_euclid(grid.ny as i64) as usize,
        };
        u.cell_average(cell)
    };
    for flat in 0..grid.n_cells() {
        let cell = grid.cell_at(flat);
        let (i, j) = (cell.i as i64, cell.j as i64);
        let mean = u.cell_average(cell);
        let c = u.cell_coeffs(cell);
        // face-center deviation of the linear part
        let devx = sqrt3_half * c[1];
        let devy = sqrt3_half * c[2];
        let limx = minmod_tvb(
            devx,
            avg(i + 1, j) - mean,
            mean - avg(i - 1, j),
            tvb_m * grid.dx * grid.dx,
        );
        let limy = minmod_tvb(
            devy,
            avg(i, j + 1) - mean,
            mean - avg(i, j - 1),
            tvb_m * grid.dy * grid.dy,
        );
        let tol = 1e-14 * (devx.abs() + devy.abs() + mean.abs()).max(1e-300);
        if (limx - devx).abs() <= tol && (limy - devy).abs() <= tol {
            continue;
        }
        let slot = &mut out.coeffs[flat * dim..(flat + 1) * dim];
        slot[1] = limx / sqrt3_half;
        slot[2] = limy / sqrt3_half;
        for v in slot.iter_mut().skip(3) {
            *v = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use crate::field::project_2d;
    use crate::grid::Grid2D;

    fn small_grid() -> Grid2D {
        Grid2D::new([0.0, 1.0, 0.0, 1.0], 4, 4).unwrap()
    }

    #[test]
    fn nonnegative_linear_data_is_unchanged() {
        let g = small_grid();
        let u = project_2d(|x, y| 1.0 + 0.2 * x + 0.1 * y, &g, BasisSpec::new(1).unwrap()).unwrap();
        let (v, report) = bp_filter(&u).unwrap();
        assert_eq!(report.cells_modified, 0);
        assert_eq!(report.max_theta_deviation, 0.0);
        assert_eq!(u.coeffs, v.coeffs);
    }

    #[test]
    fn linear_cell_scales_by_half() {
        // single cell with mean 0.5 and corner minimum -0.5: theta = 0.5
        // and the filtered minimum lands exactly at zero
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 1, 1).unwrap();
        let spec = BasisSpec::new(1).unwrap();
        // mean = c0/2 = 0.5; slope picked so min over corners is -0.5
        let sqrt3_half = 0.75f64.sqrt();
        let coeffs = vec![1.0, 1.0 / sqrt3_half, 0.0];
        let u = DGField2D { grid: g.clone(), spec, coeffs, time: 0.0 };
        let cell = CellIndex { i: 0, j: 0 };
        assert!((candidate_min(&u, cell) + 0.5).abs() < 1e-13);
        let (v, report) = bp_filter(&u).unwrap();
        assert_eq!(report.cells_modified, 1);
        assert!((report.max_theta_deviation - 0.5).abs() < 1e-13);
        assert!(candidate_min(&v, cell).abs() < 1e-13);
        assert!((v.cell_average(cell) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_average_flattens_cell() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 1, 1).unwrap();
        let spec = BasisSpec::new(2).unwrap();
        let coeffs = vec![0.0, 0.3, -0.2, 0.1, 0.05, -0.4];
        let u = DGField2D { grid: g.clone(), spec, coeffs, time: 0.0 };
        let (v, _) = bp_filter(&u).unwrap();
        for &c in &v.coeffs {
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn negative_average_is_a_contract_violation() {
        let g = Grid2D::new([0.0, 1.0, 0.0, 1.0], 1, 1).unwrap();
        let spec = BasisSpec::new(1).unwrap();
        let u = DGField2D { grid: g, spec, coeffs: vec![-1.0, 0.0, 0.0], time: 0.0 };
        assert!(matches!(bp_filter(&u), Err(SldgError::ContractViolation(_))));
    }

    #[test]
    fn bp_filter_is_idempotent_and_mass_preserving() {
        let g = small_grid();
        let u = project_2d(
            |x, y| (8.0 * x).sin() * (5.0 * y).cos() + 0.3,
            &g,
            BasisSpec::new(2).unwrap(),
        )
        .unwrap();
        let mass0 = u.total_mass();
        let (v1, _) = bp_filter(&u).unwrap();
        let (v2, _) = bp_filter(&v1).unwrap();
        assert!((v1.total_mass() - mass0).abs() <= 1e-14 * mass0.abs().max(1.0));
        for (a, b) in v1.coeffs.iter().zip(&v2.coeffs) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn filtered_field_is_nonnegative_on_a_lattice() {
        let g = small_grid();
        let u = project_2d(
            |x, y| if (x - 0.5).hypot(y - 0.5) < 0.25 { 1.0 } else { 0.0 },
            &g,
            BasisSpec::new(2).unwrap(),
        )
        .unwrap();
        let (v, report) = bp_filter(&u).unwrap();
        assert!(report.min_after >= -1e-12);
        for flat in 0..g.n_cells() {
            let cell = g.cell_at(flat);
            let c = g.cell_center(cell);
            for a in 0..5 {
                for b in 0..5 {
                    let p = crate::Point::new(
                        c.x + g.dx * (a as f64 - 2.0) / 5.0,
                        c.y + g.dy * (b as f64 - 2.0) / 5.0,
                    );
                    assert!(v.evaluate(cell, p).unwrap() >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn smooth_data_passes_tvb_untouched() {
        let g = Grid2D::new([0.0, 2.0 * std::f64::consts::PI, 0.0, 2.0 * std::f64::consts::PI], 80, 80).unwrap();
        let u = project_2d(|x, y| (x + y).sin(), &g, BasisSpec::new(2).unwrap()).unwrap();
        let v = minmod_limiter(&u, 50.0);
        assert_eq!(u.coeffs, v.coeffs);
    }

    #[test]
    fn constant_data_is_unchanged_by_minmod() {
        let g = small_grid();
        let u = project_2d(|_, _| 2.5, &g, BasisSpec::new(2).unwrap()).unwrap();
        let v = minmod_limiter(&u, 1.0);
        assert_eq!(u.coeffs, v.coeffs);
    }

    #[test]
    fn minmod_preserves_cell_averages() {
        let g = small_grid();
        let u = project_2d(
            |x, y| if x + y < 1.0 { 2.0 } else { 0.0 },
            &g,
            BasisSpec::new(2).unwrap(),
        )
        .unwrap();
        let v = minmod_limiter(&u, 0.0);
        for flat in 0..g.n_cells() {
            let cell = g.cell_at(flat);
            assert!((u.cell_average(cell) - v.cell_average(cell)).abs() < 1e-15);
        }
    }
}
