//! Discrete principal-value transform on a uniform grid.
//!
//! `H[g]_k = sum_{j odd} 2 g_{k-j} / j` approximates `P int g(w') / (w_k - w') dw'`
//! and is exact to high order for smooth `g`. The sum is evaluated as a
//! zero-padded linear convolution, so nothing wraps around the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct PvTransform {
    n: usize,
    m: usize,
    kernel: Vec<C64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PvTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PvTransform").field("n", &self.n).field("m", &self.m).finish()
    }
}

impl PvTransform {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "PV transform needs at least two samples");
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        // kernel offset j is stored at index j + n - 1
        let mut kernel = vec![C64::new(0.0, 0.0); m];
        for idx in 0..(2 * n - 1) {
            let j = idx as i64 - (n as i64 - 1);
            if j % 2 != 0 {
                kernel[idx] = C64::new(2.0 / j as f64, 0.0);
            }
        }
        forward.process(&mut kernel);
        Self { n, m, kernel, forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn apply(&self, g: &[C64]) -> Result<Vec<C64>> {
        if g.len() != self.n {
            return Err(Error::Dimension { expected: self.n, found: g.len() });
        }
        let mut buf = vec![C64::new(0.0, 0.0); self.m];
        buf[..self.n].copy_from_slice(g);
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        Ok(buf[self.n - 1..2 * self.n - 1].iter().map(|v| v * scale).collect())
    }

    pub fn apply_real(&self, g: &[f64]) -> Result<Vec<f64>> {
        let z: Vec<C64> = g.iter().map(|&v| C64::new(v, 0.0)).collect();
        Ok(self.apply(&z)?.into_iter().map(|v| v.re).collect())
    }

    /// Boundary value from above of the Cauchy integral,
    /// `g/2 - (i / 2 pi) H[g]`: keeps the part of `g` whose Fourier transform
    /// lives on positive times.
    pub fn causal_projection(&self, g: &[C64]) -> Result<Vec<C64>> {
        let h = self.apply(g)?;
        let c = C64::new(0.0, -1.0 / (2.0 * PI));
        Ok(g.iter().zip(h).map(|(gv, hv)| 0.5 * gv + c * hv).collect())
    }
}
