//! Eigendecomposition of the real symmetric arrowhead matrix
//! `[[a, z^T], [z, diag(d)]]` with `d` strictly increasing and `z >= 0`.
//!
//! Eigenvalues solve the secular equation
//! `f(l) = l - a - sum_i z_i^2 / (l - d_i) = 0`, one root per gap between
//! poles plus one on each side. Every root is stored relative to its nearest
//! pole so that `l - d_i` is available without cancellation, and the border
//! is recomputed from the computed roots (Loewner formula), which keeps the
//! eigenvectors numerically orthogonal. Nothing is stored densely: eigenvector
//! entries are regenerated on demand in O(1) each.

/// One non-deflated eigenpair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    /// Eigenvalue.
    pub lambda: f64,
    /// Index of the reference pole.
    pub origin: usize,
    /// `lambda - d[origin]`.
    pub mu: f64,
    /// `1 / |(1, zhat / (lambda - d))|`.
    pub inv_norm: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Arrowhead {
    pub d: Vec<f64>,
    pub zhat: Vec<f64>,
    pub roots: Vec<Root>,
}

impl Arrowhead {
    /// `d` strictly increasing, every `z_i > 0`.
    pub fn solve(a: f64, d: &[f64], z: &[f64]) -> Self {
        assert_eq!(d.len(), z.len());
        assert!(!d.is_empty());
        let m = d.len();
        let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
        let znorm = z2.iter().sum::<f64>().sqrt();
        let mut roots = Vec::with_capacity(m + 1);

        // left outer root, below d[0]
        let lo = a.min(d[0]) - znorm - 1.0;
        roots.push(solve_in(a, d, &z2, 0, lo - d[0], 0.0));
        for k in 0..m - 1 {
            let gap = d[k + 1] - d[k];
            let mid = d[k] + 0.5 * gap;
            let fmid = secular(a, d, &z2, k, mid - d[k]);
            if fmid >= 0.0 {
                roots.push(solve_in(a, d, &z2, k, 0.0, 0.5 * gap));
            } else {
                roots.push(solve_in(a, d, &z2, k + 1, -0.5 * gap, 0.0));
            }
        }
        let hi = a.max(d[m - 1]) + znorm + 1.0;
        roots.push(solve_in(a, d, &z2, m - 1, 0.0, hi - d[m - 1]));

        let zhat = loewner(d, &roots, z);
        for r in &mut roots {
            let mut s = 1.0;
            let dk = d[r.origin];
            for i in 0..m {
                let v = zhat[i] / ((dk - d[i]) + r.mu);
                s += v * v;
            }
            r.inv_norm = 1.0 / s.sqrt();
        }
        Self { d: d.to_vec(), zhat, roots }
    }

    /// `1 / (lambda_j - d_i)` for all `i`, written into `out`.
    #[inline]
    pub fn inverse_gaps(&self, j: usize, out: &mut [f64]) {
        let r = self.roots[j];
        let dk = self.d[r.origin];
        for (o, di) in out.iter_mut().zip(&self.d) {
            *o = 1.0 / ((dk - di) + r.mu);
        }
        // exact at the reference pole
        out[r.origin] = 1.0 / r.mu;
    }
}

/// `f(d[k] + mu)` with the differences `d[k] - d[i]` formed first.
fn secular(a: f64, d: &[f64], z2: &[f64], k: usize, mu: f64) -> f64 {
    let dk = d[k];
    let mut s = 0.0;
    for i in 0..d.len() {
        if i == k {
            s += z2[i] / mu;
        } else {
            s += z2[i] / ((dk - d[i]) + mu);
        }
    }
    (dk - a) + mu - s
}

/// Root of `f(d[k] + mu)` for `mu` in `(lo, hi)`, where `f(lo) < 0 < f(hi)`
/// and the only pole near the bracket is `d[k]` (at `mu = 0`, an endpoint).
fn solve_in(a: f64, d: &[f64], z2: &[f64], k: usize, mut lo: f64, mut hi: f64) -> Root {
    let dk = d[k];
    let zk2 = z2[k];
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        // g(mu) = f(mu) + zk2 / mu is smooth on the bracket
        let mut s = 0.0;
        let mut ds = 0.0;
        for i in 0..d.len() {
            if i != k {
                let inv = 1.0 / ((dk - d[i]) + mu);
                let t = z2[i] * inv;
                s += t;
                ds += t * inv;
            }
        }
        let g = (dk - a) + mu - s;
        let dg = 1.0 + ds;
        let f = g - zk2 / mu;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        // Solve g + dg (nu - mu) - zk2 / nu = 0, i.e.
        // dg nu^2 + (g - dg mu) nu - zk2 = 0, root on the side of the bracket.
        let b = g - dg * mu;
        let disc = (b * b + 4.0 * dg * zk2).sqrt();
        let nu = if hi > 0.0 && lo >= 0.0 {
            // positive root, computed without cancellation
            if b <= 0.0 {
                (-b + disc) / (2.0 * dg)
            } else {
                2.0 * zk2 / (b + disc)
            }
        } else if b >= 0.0 {
            (-b - disc) / (2.0 * dg)
        } else {
            -2.0 * zk2 / (disc - b)
        };
        let next = if nu > lo && nu < hi { nu } else { 0.5 * (lo + hi) };
        let tol = 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
        if (next - mu).abs() <= tol || hi - lo <= tol {
            mu = next;
            break;
        }
        mu = next;
    }
    Root { lambda: dk + mu, origin: k, mu, inv_norm: 0.0 }
}

/// Border recomputed from the roots:
/// `zhat_i^2 = prod_j (lambda_j - d_i) / prod_{l != i} (d_l - d_i)`, evaluated
/// as sums of logarithms.
fn loewner(d: &[f64], roots: &[Root], z: &[f64]) -> Vec<f64> {
    let m = d.len();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let di = d[i];
        let mut logsum = 0.0;
        for r in roots {
            let diff = if r.origin == i { r.mu } else { (d[r.origin] - di) + r.mu };
            logsum += diff.abs().ln();
        }
        for (l, dl) in d.iter().enumerate() {
            if l != i {
                logsum -= (dl - di).abs().ln();
            }
        }
        let v = (0.5 * logsum).exp();
        out.push(if v.is_finite() && v > 0.0 { v } else { z[i] });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let ah = Arrowhead::solve(0.0, &[0.0], &[2.0]);
        let mut l: Vec<f64> = ah.roots.iter().map(|r| r.lambda).collect();
        l.sort_by(f64::total_cmp);
        assert!((l[0] + 2.0).abs() < 1e-14 && (l[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn secular_residual_small() {
        let n = 200;
        let d: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * (i as f64 + 0.5) / n as f64).collect();
        let z = vec![5.0 / (n as f64).sqrt(); n];
        let ah = Arrowhead::solve(0.1, &d, &z);
        assert_eq!(ah.roots.len(), n + 1);
        for w in ah.roots.windows(2) {
            assert!(w[1].lambda > w[0].lambda);
        }
        let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
        for r in &ah.roots {
            let f = secular(0.1, &d, &z2, r.origin, r.mu);
            let scale = 1.0 + z2.iter().enumerate().map(|(i, v)| {
                let g = if i == r.origin { r.mu } else { (d[r.origin] - d[i]) + r.mu };
                v / g.abs()
            }).sum::<f64>();
            assert!(f.abs() <= 1e-12 * scale, "residual {f}");
        }
        for (a, b) in ah.zhat.iter().zip(&z) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
