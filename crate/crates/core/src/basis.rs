//! Orthonormal modal Legendre bases on the reference cell.
//!
//! 1D basis functions are `l_p(s) = sqrt((2p+1)/2) P_p(s)` on `[-1, 1]`, so
//! that `int l_p l_q ds = delta_pq` and the physical mass matrix is the
//! identity times `dx / 2`. The 2D space is the total-degree space `P^k`
//! spanned by tensor products `l_p(s) l_q(t)` with `p + q <= k`.

use crate::poly2::Poly2;
use crate::quadrature::legendre;
use crate::{Result, SldgError};

/// Polynomial degree of the approximation space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisSpec {
    pub degree: usize,
}

impl BasisSpec {
    /// Degrees up to 3 are supported in 1D and up to 2 in 2D.
    pub fn new(degree: usize) -> Result<Self> {
        if degree > 3 {
            return Err(SldgError::InvalidInput(format!(
                "basis degree {degree} out of range (max 3)"
            )));
        }
        Ok(Self { degree })
    }

    pub fn dim_1d(&self) -> usize {
        self.degree + 1
    }

    pub fn dim_2d(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    /// `(p, q)` exponent pairs of the 2D basis, ordered by total degree.
    pub fn pairs_2d(&self) -> &'static [(usize, usize)] {
        const PAIRS: [(usize, usize); 10] = [
            (0, 0),
            (1, 0),
            (0, 1),
            (2, 0),
            (1, 1),
            (0, 2),
            (3, 0),
            (2, 1),
            (1, 2),
            (0, 3),
        ];
        &PAIRS[..self.dim_2d()]
    }
}

/// Orthonormal scaled Legendre `l_p(s)`.
#[inline]
pub fn ell(p: usize, s: f64) -> f64 {
    ((2.0 * p as f64 + 1.0) / 2.0).sqrt() * legendre(p, s)
}

/// 2D basis function of index `m` at reference coordinates.
#[inline]
pub fn phi2d(spec: BasisSpec, m: usize, s: f64, t: f64) -> f64 {
    let (p, q) = spec.pairs_2d()[m];
    ell(p, s) * ell(q, t)
}

/// Modal sum in 1D reference coordinates.
#[inline]
pub fn eval_modal_1d(coeffs: &[f64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(p, &c)| c * ell(p, s))
        .sum()
}

/// Modal sum in 2D reference coordinates.
#[inline]
pub fn eval_modal_2d(spec: BasisSpec, coeffs: &[f64], s: f64, t: f64) -> f64 {
    let mut ls = [0.0; 4];
    let mut lt = [0.0; 4];
    for p in 0..=spec.degree {
        ls[p] = ell(p, s);
        lt[p] = ell(p, t);
    }
    spec.pairs_2d()
        .iter()
        .zip(coeffs)
        .map(|(&(p, q), &c)| c * ls[p] * lt[q])
        .sum()
}

/// Monomial coefficients of `P_p`, lowest power first.
fn legendre_monomials(p: usize) -> &'static [f64] {
    const P0: [f64; 1] = [1.0];
    const P1: [f64; 2] = [0.0, 1.0];
    const P2: [f64; 3] = [-0.5, 0.0, 1.5];
    const P3: [f64; 4] = [0.0, -1.5, 0.0, 2.5];
    match p {
        0 => &P0,
        1 => &P1,
        2 => &P2,
        3 => &P3,
        _ => panic!("Legendre monomial table only covers degrees <= 3"),
    }
}

/// The basis function `l_p(s) l_q(t)` as a bivariate polynomial in `(s, t)`.
pub fn basis_poly(p: usize, q: usize) -> Poly2 {
    let norm = |n: usize| ((2.0 * n as f64 + 1.0) / 2.0).sqrt();
    let cs = legendre_monomials(p);
    let ct = legendre_monomials(q);
    let mut out = Poly2::zero(p + q);
    for (i, &a) in cs.iter().enumerate() {
        for (j, &b) in ct.iter().enumerate() {
            if a != 0.0 && b != 0.0 {
                out.add_to(i, j, a * b * norm(p) * norm(q));
            }
        }
    }
    out
}

/// Expands a cell's modal coefficient vector into a single bivariate
/// polynomial in reference coordinates.
pub fn modal_to_poly(spec: BasisSpec, coeffs: &[f64]) -> Poly2 {
    let mut out = Poly2::zero(spec.degree);
    for (m, &(p, q)) in spec.pairs_2d().iter().enumerate() {
        if coeffs[m] != 0.0 {
            out.add_scaled(&basis_poly(p, q), coeffs[m]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn basis_is_orthonormal_on_reference_cell() {
        // numerically integrate phi_i phi_j with a (2k+2)-point tensor rule
        let spec = BasisSpec::new(2).unwrap();
        let (xs, ws) = gauss_legendre(2 * spec.degree + 2);
        let dim = spec.dim_2d();
        for a in 0..dim {
            for b in 0..dim {
                let mut acc = 0.0;
                for (s, wx) in xs.iter().zip(&ws) {
                    for (t, wy) in xs.iter().zip(&ws) {
                        acc += wx * wy * phi2d(spec, a, *s, *t) * phi2d(spec, b, *s, *t);
                    }
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-13, "({a},{b}): {acc}");
            }
        }
    }

    #[test]
    fn basis_poly_matches_pointwise_eval() {
        let spec = BasisSpec::new(2).unwrap();
        for (m, &(p, q)) in spec.pairs_2d().iter().enumerate() {
            let poly = basis_poly(p, q);
            for &(s, t) in &[(0.3, -0.8), (-1.0, 1.0), (0.0, 0.0), (0.9, 0.2)] {
                assert!((poly.eval(s, t) - phi2d(spec, m, s, t)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn modal_expansion_matches_modal_eval() {
        let spec = BasisSpec::new(2).unwrap();
        let coeffs = [0.7, -1.1, 0.4, 2.2, -0.6, 0.05];
        let poly = modal_to_poly(spec, &coeffs);
        for &(s, t) in &[(0.5, 0.5), (-0.2, 0.9), (1.0, -1.0)] {
            let reference = eval_modal_2d(spec, &coeffs, s, t);
            assert!((poly.eval(s, t) - reference).abs() < 1e-13);
        }
    }
}
