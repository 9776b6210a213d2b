//! Gauss-Legendre and Gauss-Lobatto rules on the reference interval [-1, 1].

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term
/// recurrence.
pub fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    // P'_n from the standard identity (1 - x^2) P'_n = n (P_{n-1} - x P_n)
    let dp = if (1.0 - x * x).abs() > 1e-14 {
        n as f64 * (p_prev - x * p) / (1.0 - x * x)
    } else {
        // endpoint value P'_n(+-1) = (+-1)^{n-1} n(n+1)/2
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 - 1) };
        sign * n as f64 * (n as f64 + 1.0) / 2.0
    };
    (p, dp)
}

pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_deriv(n, x).0
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule, exact for
/// polynomials of degree `2n - 1`. Nodes are found by Newton iteration from
/// the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "empty quadrature rule");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Lobatto interpolation nodes for up to cubic elements; the single
/// node of the `n = 1` rule is the midpoint.
pub fn gauss_lobatto_nodes(n: usize) -> &'static [f64] {
    const N1: [f64; 1] = [0.0];
    const N2: [f64; 2] = [-1.0, 1.0];
    const N3: [f64; 3] = [-1.0, 0.0, 1.0];
    // interior nodes at -+1/sqrt(5)
    const N4: [f64; 4] = [-1.0, -0.4472135954999579, 0.4472135954999579, 1.0];
    match n {
        1 => &N1,
        2 => &N2,
        3 => &N3,
        4 => &N4,
        _ => panic!("Gauss-Lobatto nodes only tabulated for n <= 4, got {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_monomials_exactly() {
        for n in 1..=12 {
            let (xs, ws) = gauss_legendre(n);
            for deg in 0..=(2 * n - 1) {
                let num: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!(
                    (num - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in 1..=16 {
            let (_, ws) = gauss_legendre(n);
            let s: f64 = ws.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn lobatto_interior_nodes_are_legendre_derivative_roots() {
        // interior Lobatto nodes of the 4-point rule are roots of P3'
        for &x in &gauss_lobatto_nodes(4)[1..3] {
            let (_, dp) = legendre_with_deriv(3, x);
            assert!(dp.abs() < 1e-12);
        }
    }
}
