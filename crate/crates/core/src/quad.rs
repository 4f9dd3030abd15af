//! Gauss–Legendre quadrature on composite panels.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over [a, b] split into `panels` equal pieces.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }
}

/// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let v = gl.integrate(-1.0, 2.0, 1, |x| x.powi(15));
        let exact = (2f64.powi(16) - 1.0) / 16.0;
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 16, 33] {
            let gl = GaussLegendre::new(n);
            let v = gl.integrate(0.0, 3.0, 4, |_| 1.0);
            assert!((v - 3.0).abs() < 1e-13, "n = {n}: {v}");
        }
    }

    #[test]
    fn smooth_oscillatory_integral() {
        let gl = GaussLegendre::new(16);
        let v = gl.integrate(0.0, PI, 16, |x| (7.0 * x).sin());
        assert!((v - 2.0 / 7.0).abs() < 1e-13);
    }
}
