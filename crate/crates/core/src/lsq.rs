//! Householder-QR least squares for the small dense interpolation systems
//! of the test-function reconstruction (at most 9 x 6).

/// QR factorization of a row-major `m x n` matrix, `m >= n`.
pub struct QrLstSq {
    m: usize,
    n: usize,
    /// R in the upper triangle, Householder vectors below (v0 = 1 implied).
    a: Vec<f64>,
    tau: Vec<f64>,
}

impl QrLstSq {
    /// Factorizes `a`; returns `None` when R has a negligible diagonal
    /// entry relative to the matrix scale (rank-deficient system).
    pub fn new(mut a: Vec<f64>, m: usize, n: usize) -> Option<Self> {
        assert_eq!(a.len(), m * n);
        assert!(m >= n);
        let scale = a.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1e-300);
        let mut tau = vec![0.0; n];
        for k in 0..n {
            // norm of the k-th column below the diagonal
            let mut norm2 = 0.0;
            for i in k..m {
                norm2 += a[i * n + k] * a[i * n + k];
            }
            let norm = norm2.sqrt();
            if norm <= 1e-12 * scale {
                return None;
            }
            let akk = a[k * n + k];
            let alpha = if akk >= 0.0 { -norm } else { norm };
            let v0 = akk - alpha;
            // normalize so the stored vector has v0 = 1
            for i in (k + 1)..m {
                a[i * n + k] /= v0;
            }
            // tau = 2 / (v^T v) with v = (1, a[k+1.., k])
            let mut vtv = 1.0;
            for i in (k + 1)..m {
                vtv += a[i * n + k] * a[i * n + k];
            }
            tau[k] = 2.0 / vtv;
            a[k * n + k] = alpha;
            // apply the reflector to the remaining columns
            for j in (k + 1)..n {
                let mut dot = a[k * n + j];
                for i in (k + 1)..m {
                    dot += a[i * n + k] * a[i * n + j];
                }
                dot *= tau[k];
                a[k * n + j] -= dot;
                for i in (k + 1)..m {
                    a[i * n + j] -= dot * a[i * n + k];
                }
            }
        }
        // final rank check on the R diagonal
        let rmax = (0..n).fold(0.0f64, |acc, k| acc.max(a[k * n + k].abs()));
        for k in 0..n {
            if a[k * n + k].abs() <= 1e-12 * rmax {
                return None;
            }
        }
        Some(Self { m, n, a, tau })
    }

    /// Least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.m);
        let (m, n) = (self.m, self.n);
        let mut y = b.to_vec();
        for k in 0..n {
            let mut dot = y[k];
            for i in (k + 1)..m {
                dot += self.a[i * n + k] * y[i];
            }
            dot *= self.tau[k];
            y[k] -= dot;
            for i in (k + 1)..m {
                y[i] -= dot * self.a[i * n + k];
            }
        }
        // back substitution on R
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut acc = y[k];
            for j in (k + 1)..n {
                acc -= self.a[k * n + j] * x[j];
            }
            x[k] = acc / self.a[k * n + k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistent_square_system_is_solved_exactly() {
        // 3x3 Vandermonde at x = 0, 1, 2 fitting f(x) = 2 - x + 3x^2
        let a = vec![
            1.0, 0.0, 0.0, //
            1.0, 1.0, 1.0, //
            1.0, 2.0, 4.0,
        ];
        let qr = QrLstSq::new(a, 3, 3).unwrap();
        let b = [2.0, 4.0, 12.0];
        let x = qr.solve(&b);
        for (got, want) in x.iter().zip([2.0, -1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn overdetermined_consistent_system_has_zero_residual() {
        // fit a plane through 5 points that lie exactly on z = 1 + 2x - y
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, -0.3)];
        let mut a = Vec::new();
        let mut b = Vec::new();
        for &(x, y) in &pts {
            a.extend_from_slice(&[1.0, x, y]);
            b.push(1.0 + 2.0 * x - y);
        }
        let qr = QrLstSq::new(a, 5, 3).unwrap();
        let x = qr.solve(&b);
        for (got, want) in x.iter().zip([1.0, 2.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_minimizes_residual() {
        // inconsistent system: residual must be orthogonal to the columns
        let a = vec![
            1.0, 0.0, //
            1.0, 1.0, //
            1.0, 2.0, //
            1.0, 3.0,
        ];
        let b = [0.0, 1.0, 0.5, 2.0];
        let qr = QrLstSq::new(a.clone(), 4, 2).unwrap();
        let x = qr.solve(&b);
        for col in 0..2 {
            let mut dot = 0.0;
            for row in 0..4 {
                let r = a[row * 2] * x[0] + a[row * 2 + 1] * x[1] - b[row];
                dot += r * a[row * 2 + col];
            }
            assert!(dot.abs() < 1e-12, "residual not orthogonal: {dot}");
        }
    }

    #[test]
    fn rank_deficiency_is_detected() {
        // all points on a line: cannot determine a plane
        let mut a = Vec::new();
        for i in 0..4 {
            let x = i as f64;
            a.extend_from_slice(&[1.0, x, 2.0 * x]);
        }
        assert!(QrLstSq::new(a, 4, 3).is_none());
    }
}
