//! Dense bivariate polynomials on a triangular coefficient layout.
//!
//! Coefficient of `x^p y^q` lives at `tri_base(p + q) + q`, so blocks are
//! ordered by total degree. Degrees stay small (at most `2k + 1 <= 7`), so
//! everything is plain dense arithmetic.

#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    deg: usize,
    c: Vec<f64>,
}

#[inline]
fn tri_base(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn tri_len(deg: usize) -> usize {
    tri_base(deg + 1)
}

impl Poly2 {
    pub fn zero(deg: usize) -> Self {
        Self { deg, c: vec![0.0; tri_len(deg)] }
    }

    pub fn constant(v: f64) -> Self {
        Self { deg: 0, c: vec![v] }
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    #[inline]
    pub fn coeff(&self, p: usize, q: usize) -> f64 {
        if p + q > self.deg {
            0.0
        } else {
            self.c[tri_base(p + q) + q]
        }
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, v: f64) {
        assert!(p + q <= self.deg);
        self.c[tri_base(p + q) + q] = v;
    }

    #[inline]
    pub fn add_to(&mut self, p: usize, q: usize, v: f64) {
        assert!(p + q <= self.deg);
        self.c[tri_base(p + q) + q] += v;
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.c {
            *v *= s;
        }
    }

    pub fn add_scaled(&mut self, other: &Poly2, s: f64) {
        assert!(other.deg <= self.deg);
        for d in 0..=other.deg {
            for q in 0..=d {
                self.c[tri_base(d) + q] += s * other.c[tri_base(d) + q];
            }
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut xp = [1.0f64; 9];
        let mut yp = [1.0f64; 9];
        for i in 1..=self.deg {
            xp[i] = xp[i - 1] * x;
            yp[i] = yp[i - 1] * y;
        }
        let mut acc = 0.0;
        let mut idx = 0;
        for d in 0..=self.deg {
            for q in 0..=d {
                acc += self.c[idx] * xp[d - q] * yp[q];
                idx += 1;
            }
        }
        acc
    }

    pub fn mul(&self, other: &Poly2) -> Poly2 {
        let mut out = Poly2::zero(self.deg + other.deg);
        for d1 in 0..=self.deg {
            for q1 in 0..=d1 {
                let a = self.c[tri_base(d1) + q1];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=other.deg {
                    for q2 in 0..=d2 {
                        let b = other.c[tri_base(d2) + q2];
                        if b != 0.0 {
                            out.c[tri_base(d1 + d2) + q1 + q2] += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// The antiderivative `Q` with `dQ/dx = self` and `Q(0, y) = 0`; the
    /// frame's origin is the reference abscissa of the Green's-theorem
    /// construction.
    pub fn antiderivative_x(&self) -> Poly2 {
        let mut out = Poly2::zero(self.deg + 1);
        for d in 0..=self.deg {
            for q in 0..=d {
                let p = d - q;
                out.c[tri_base(d + 1) + q] = self.c[tri_base(d) + q] / (p as f64 + 1.0);
            }
        }
        out
    }

    /// Substitutes `x = ax * u + bx`, `y = ay * v + by`, returning the
    /// polynomial in the new variables `(u, v)`.
    pub fn affine_sub(&self, ax: f64, bx: f64, ay: f64, by: f64) -> Poly2 {
        // binomial expansions of (a u + b)^p per axis
        let expand = |a: f64, b: f64| -> Vec<Vec<f64>> {
            let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
            for p in 1..=self.deg {
                let prev = &rows[p - 1];
                let mut row = vec![0.0; p + 1];
                for (r, &cpr) in prev.iter().enumerate() {
                    row[r] += cpr * b;
                    row[r + 1] += cpr * a;
                }
                rows.push(row);
            }
            rows
        };
        let xr = expand(ax, bx);
        let yr = expand(ay, by);
        let mut out = Poly2::zero(self.deg);
        for d in 0..=self.deg {
            for q in 0..=d {
                let cpq = self.c[tri_base(d) + q];
                if cpq == 0.0 {
                    continue;
                }
                let p = d - q;
                for (r, &cx) in xr[p].iter().enumerate() {
                    for (s, &cy) in yr[q].iter().enumerate() {
                        out.c[tri_base(r + s) + s] += cpq * cx * cy;
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Poly2 {
        // 2 + 3x - y + 0.5 x y + x^2 - 2 y^2
        let mut p = Poly2::zero(2);
        p.set(0, 0, 2.0);
        p.set(1, 0, 3.0);
        p.set(0, 1, -1.0);
        p.set(1, 1, 0.5);
        p.set(2, 0, 1.0);
        p.set(0, 2, -2.0);
        p
    }

    #[test]
    fn eval_matches_direct_formula() {
        let p = sample();
        let (x, y) = (1.3, -0.7);
        let direct = 2.0 + 3.0 * x - y + 0.5 * x * y + x * x - 2.0 * y * y;
        assert!((p.eval(x, y) - direct).abs() < 1e-14);
    }

    #[test]
    fn product_evaluates_pointwise() {
        let p = sample();
        let mut q = Poly2::zero(1);
        q.set(0, 0, -1.0);
        q.set(1, 0, 2.0);
        q.set(0, 1, 4.0);
        let prod = p.mul(&q);
        for &(x, y) in &[(0.0, 0.0), (1.0, 2.0), (-0.3, 0.9), (2.2, -1.1)] {
            assert!((prod.eval(x, y) - p.eval(x, y) * q.eval(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_examples() {
        // f = 1 -> Q = x
        let q = Poly2::constant(1.0).antiderivative_x();
        assert!((q.eval(0.7, 3.0) - 0.7).abs() < 1e-15);
        // f = x y -> Q = x^2 y / 2
        let mut f = Poly2::zero(2);
        f.set(1, 1, 1.0);
        let q = f.antiderivative_x();
        assert!((q.eval(2.0, 3.0) - 6.0).abs() < 1e-14);
        // Q vanishes on the reference line x = 0
        assert_eq!(q.eval(0.0, 5.0), 0.0);
    }

    #[test]
    fn affine_substitution_composes() {
        let p = sample();
        let (ax, bx, ay, by) = (0.5, -1.2, 2.0, 0.3);
        let sub = p.affine_sub(ax, bx, ay, by);
        for &(u, v) in &[(0.0, 0.0), (1.0, -1.0), (0.4, 2.5)] {
            let expect = p.eval(ax * u + bx, ay * v + by);
            assert!((sub.eval(u, v) - expect).abs() < 1e-12);
        }
    }
}
