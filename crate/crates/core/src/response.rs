//! Frequency-domain response of the cavity to the ensemble: width `gamma_c`,
//! level shift `delta_c`, the cavity propagator branches `G_c+-` and the
//! traversal phase `phi`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::PvTransform;
use crate::quad::GaussLegendre;
use crate::spectral::SpectralDensity;

pub const DEFAULT_GRID_POINTS: usize = 8192;

/// Uniform grid `omega_k = -W + k dw`, `k = 0..n`, `dw = 2W/n`.
/// Index `n/2` is `omega = 0` and `omega_k = -omega_{n-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyGrid {
    n: usize,
    half_width: f64,
}

impl FrequencyGrid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 1024 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid.n must be a power of two >= 1024, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!("grid.W must be finite and positive, got {half_width}")));
        }
        Ok(Self { n, half_width })
    }

    /// 8192 points on `[-8 pi / T, 8 pi / T]`.
    pub fn default_for(t: f64) -> Result<Self> {
        Self::new(DEFAULT_GRID_POINTS, 8.0 * PI / t)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn omega(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.step()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.omega(k)).collect()
    }

    /// Index of the grid point nearest to `omega`, if inside the grid.
    pub fn nearest(&self, omega: f64) -> Option<usize> {
        let x = ((omega + self.half_width) / self.step()).round();
        if x < 0.0 || x > (self.n - 1) as f64 || !x.is_finite() {
            None
        } else {
            Some(x as usize)
        }
    }

    /// Samples of `f` on the grid.
    pub fn sample<T, F: FnMut(f64) -> T>(&self, mut f: F) -> Vec<T> {
        (0..self.n).map(|k| f(self.omega(k))).collect()
    }
}

fn check_covers(d: &SpectralDensity, grid: &FrequencyGrid) -> Result<()> {
    let (lo, hi) = d.support();
    let w = grid.half_width();
    if !(lo > -0.5 * w && hi < 0.5 * w) {
        return Err(Error::Config(format!(
            "grid half-width W = {w} too narrow: support [{lo}, {hi}] must lie strictly inside [-W/2, W/2]"
        )));
    }
    if w < 4.0 * PI / d.dephasing_time() * (1.0 - 1e-12) {
        return Err(Error::Config(format!("grid half-width W = {w} is below 4 pi / T")));
    }
    Ok(())
}

/// `(delta_c, gamma_c)` on the grid. `gamma_c = 2 pi rho_eff`, and `delta_c` is
/// the principal-value transform of `rho_eff`, so that the level-shift branches
/// are `Omega^2 (delta_c -+ i gamma_c / 2)`.
///
/// Jumps of `rho_eff` at the support edges are taken out first: the line `L`
/// through the two edge values has the closed-form transform
/// `L(w) ln|(w - a)/(w - b)| - q (b - a)`, and only the continuous remainder
/// goes through the discrete transform. Grid points exactly on an edge, where
/// the closed form diverges, keep the discrete value.
pub fn delta_gamma(d: &SpectralDensity, grid: &FrequencyGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    check_covers(d, grid)?;
    let (a, b) = d.support();
    let (pa, pb) = (d.eval(a), d.eval(b));
    let q = (pb - pa) / (b - a);
    let line = |w: f64| pa + q * (w - a);
    let line_sampled = |w: f64| {
        if w == a || w == b {
            0.5 * line(w)
        } else if w > a && w < b {
            line(w)
        } else {
            0.0
        }
    };
    let rho = grid.sample(|w| d.eval_sampled(w));
    let remainder: Vec<f64> = (0..grid.len()).map(|k| rho[k] - line_sampled(grid.omega(k))).collect();
    let pv = PvTransform::new(grid.len());
    let mut delta = pv.apply_real(&remainder)?;
    let edges = grid.sample(line_sampled);
    for (k, v) in delta.iter_mut().enumerate() {
        let w = grid.omega(k);
        if w == a || w == b {
            *v += discrete_pv_at(&edges, k);
        } else {
            *v += line(w) * ((w - a) / (w - b)).abs().ln() - q * (b - a);
        }
    }
    let gamma = rho.iter().map(|r| 2.0 * PI * r).collect();
    Ok((delta, gamma))
}

/// `sum_{j odd} 2 g_{k-j} / j` at a single index.
fn discrete_pv_at(g: &[f64], k: usize) -> f64 {
    g.iter()
        .enumerate()
        .filter(|(i, v)| **v != 0.0 && (k as i64 - *i as i64) % 2 != 0)
        .map(|(i, v)| 2.0 * v / (k as i64 - i as i64) as f64)
        .sum()
}

/// `delta_c(omega)` by direct quadrature with the singular part subtracted
/// analytically. Slow; meant for spot checks and the strong-coupling phase.
pub fn delta_c_direct(d: &SpectralDensity, omega: f64) -> f64 {
    let (lo, hi) = d.support();
    let rule = GaussLegendre::new(24);
    let panels = 64;
    let inside = omega > lo && omega < hi;
    let r0 = if inside { d.eval(omega) } else { 0.0 };
    let f = |x: f64| (d.eval(x) - r0) / (omega - x);
    let smooth = if inside {
        rule.integrate(lo, omega, panels, f) + rule.integrate(omega, hi, panels, f)
    } else {
        rule.integrate(lo, hi, panels, f)
    };
    let log_part = if inside { r0 * ((omega - lo) / (hi - omega)).ln() } else { 0.0 };
    smooth + log_part
}

fn denominator(omega: f64, delta: f64, gamma: f64, coupling: f64, omega_c: f64) -> C64 {
    let o2 = coupling * coupling;
    C64::new(omega - omega_c - o2 * delta, 0.5 * o2 * gamma)
}

fn check_conformable(delta: &[f64], gamma: &[f64], grid: &FrequencyGrid) -> Result<()> {
    if delta.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), found: delta.len() });
    }
    if gamma.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), found: gamma.len() });
    }
    Ok(())
}

/// `G_c+ = 1 / ([omega - omega_c - Omega^2 delta_c] + i Omega^2 gamma_c / 2)` and
/// `G_c- = conj(G_c+)`.
pub fn cavity_greens(
    delta: &[f64],
    gamma: &[f64],
    coupling: f64,
    omega_c: f64,
    grid: &FrequencyGrid,
) -> Result<(Vec<C64>, Vec<C64>)> {
    check_conformable(delta, gamma, grid)?;
    let mut gp = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let w = grid.omega(k);
        let den = denominator(w, delta[k], gamma[k], coupling, omega_c);
        if den == C64::new(0.0, 0.0) {
            return Err(Error::Singularity { omega: w });
        }
        gp.push(den.inv());
    }
    let gm = gp.iter().map(|g| g.conj()).collect();
    Ok((gp, gm))
}

/// Unwrapped traversal phase `phi = 2 arg(1 / G_c+)`, anchored at `phi(-W) = 0`
/// modulo `2 pi`.
pub fn phase(
    delta: &[f64],
    gamma: &[f64],
    coupling: f64,
    omega_c: f64,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    check_conformable(delta, gamma, grid)?;
    let mut raw = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let w = grid.omega(k);
        let den = denominator(w, delta[k], gamma[k], coupling, omega_c);
        if den == C64::new(0.0, 0.0) {
            return Err(Error::Singularity { omega: w });
        }
        raw.push(2.0 * den.im.atan2(den.re));
    }
    Ok(unwrap_anchored(&raw))
}

/// Remove jumps larger than `pi`, then shift by a multiple of `2 pi` so the
/// first sample is in `(-pi, pi]`.
pub fn unwrap_anchored(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &r in raw {
        if let Some(p) = prev {
            let mut jump = r - p;
            while jump > PI {
                offset -= 2.0 * PI;
                jump -= 2.0 * PI;
            }
            while jump < -PI {
                offset += 2.0 * PI;
                jump += 2.0 * PI;
            }
        }
        prev = Some(r);
        out.push(r + offset);
    }
    if let Some(&first) = out.first() {
        let shift = 2.0 * PI * (first / (2.0 * PI)).round();
        for v in &mut out {
            *v -= shift;
        }
    }
    out
}

/// `-2 atan2(gamma_c / 2, delta_c)`: the strong-coupling phase from sampled values.
pub fn strong_phase_value(delta: f64, gamma: f64, omega: f64) -> Result<f64> {
    if delta == 0.0 && gamma == 0.0 {
        return Err(Error::UndefinedPhase { omega });
    }
    Ok(-2.0 * (0.5 * gamma).atan2(delta))
}

/// Strong-coupling phase `phi_inf(omega)`, continuous across sign changes of
/// `delta_c`. It runs from `-2 pi` below the support to `0` above it, so it
/// matches `phi` modulo `2 pi`.
pub fn phase_strong(d: &SpectralDensity, omega: f64) -> Result<f64> {
    let gamma = 2.0 * PI * d.eval(omega);
    strong_phase_value(delta_c_direct(d, omega), gamma, omega)
}

/// Central finite-difference derivative of `phi_inf` at `omega`.
pub fn phase_strong_slope(d: &SpectralDensity, omega: f64, h: f64) -> Result<f64> {
    let hi = phase_strong(d, omega + h)?;
    let lo = phase_strong(d, omega - h)?;
    let mut diff = hi - lo;
    // both points on one continuous branch unless straddling the support edge
    diff -= 2.0 * PI * (diff / (2.0 * PI)).round();
    Ok(diff / (2.0 * h))
}

/// Least-squares line `phi ~ phi0 + omega * dt` over `|omega - omega0| <= halfwidth`.
/// Returns `(phi0, dt)`, with `phi0` the intercept at `omega = 0`. Windows with
/// fewer than five grid points are widened to the five points nearest `omega0`.
pub fn phase_slope(
    phi: &[f64],
    grid: &FrequencyGrid,
    omega0: f64,
    halfwidth: f64,
) -> Result<(f64, f64)> {
    if phi.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), found: phi.len() });
    }
    if !(halfwidth.is_finite() && halfwidth >= 0.0 && omega0.is_finite()) {
        return Err(Error::Argument(format!("invalid linearization window {omega0} +/- {halfwidth}")));
    }
    let (first, last) = (grid.omega(0), grid.omega(grid.len() - 1));
    if omega0 - halfwidth < first || omega0 + halfwidth > last {
        return Err(Error::Argument(format!(
            "window [{}, {}] outside grid [{first}, {last}]",
            omega0 - halfwidth,
            omega0 + halfwidth
        )));
    }
    let mut idx: Vec<usize> =
        (0..grid.len()).filter(|&k| (grid.omega(k) - omega0).abs() <= halfwidth).collect();
    if idx.len() < 5 {
        let c = grid.nearest(omega0).expect("omega0 inside grid");
        let start = c.saturating_sub(2).min(grid.len() - 5);
        idx = (start..start + 5).collect();
    }
    let m = idx.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &k in &idx {
        sx += grid.omega(k);
        sy += phi[k];
    }
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &k in &idx {
        let dx = grid.omega(k) - mx;
        sxx += dx * dx;
        sxy += dx * (phi[k] - my);
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// All response quantities for one `(rho_eff, Omega, omega_c)` on one grid.
#[derive(Debug, Clone)]
pub struct ResponseSpectrum {
    pub grid: FrequencyGrid,
    pub coupling: f64,
    pub omega_c: f64,
    pub gamma_c: Vec<f64>,
    pub delta_c: Vec<f64>,
    pub g_plus: Vec<C64>,
    pub g_minus: Vec<C64>,
    pub phi: Vec<f64>,
    /// Grid indices of exact real-axis poles. Only possible for `Omega = 0`,
    /// where `g_plus` is NaN at these points and `phi` is zero.
    pub poles: Vec<usize>,
}

impl ResponseSpectrum {
    pub fn compute(
        d: &SpectralDensity,
        grid: &FrequencyGrid,
        coupling: f64,
        omega_c: f64,
    ) -> Result<Self> {
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::Argument(format!("Omega must be finite and non-negative, got {coupling}")));
        }
        if !omega_c.is_finite() {
            return Err(Error::Argument(format!("omega_c must be finite, got {omega_c}")));
        }
        let (delta_c, gamma_c) = delta_gamma(d, grid)?;
        if coupling == 0.0 {
            let mut poles = Vec::new();
            let g_plus: Vec<C64> = (0..grid.len())
                .map(|k| {
                    let den = grid.omega(k) - omega_c;
                    if den == 0.0 {
                        poles.push(k);
                        C64::new(f64::NAN, f64::NAN)
                    } else {
                        C64::new(1.0 / den, 0.0)
                    }
                })
                .collect();
            let g_minus = g_plus.iter().map(|g| g.conj()).collect();
            return Ok(Self {
                grid: *grid,
                coupling,
                omega_c,
                gamma_c,
                delta_c,
                g_plus,
                g_minus,
                phi: vec![0.0; grid.len()],
                poles,
            });
        }
        let (g_plus, g_minus) = cavity_greens(&delta_c, &gamma_c, coupling, omega_c, grid)?;
        let phi = phase(&delta_c, &gamma_c, coupling, omega_c, grid)?;
        Ok(Self { grid: *grid, coupling, omega_c, gamma_c, delta_c, g_plus, g_minus, phi, poles: Vec::new() })
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.grid.omegas()
    }

    /// `exp(-i phi)` on the grid.
    pub fn phase_factor(&self) -> Vec<C64> {
        self.phi.iter().map(|p| C64::cis(-p)).collect()
    }

    /// `phi_inf` sampled from this spectrum's `delta_c` and `gamma_c`.
    /// Points where both vanish get `NaN`.
    pub fn strong_phase(&self) -> Vec<f64> {
        self.delta_c
            .iter()
            .zip(&self.gamma_c)
            .map(|(&d, &g)| strong_phase_value(d, g, 0.0).unwrap_or(f64::NAN))
            .collect()
    }

    /// Largest `|omega - omega_c| / (Omega^2 |delta_c + i gamma_c|)` over the
    /// points where `gamma_c > 0`. Small values mean the strong-coupling phase
    /// is a good approximation there.
    pub fn strong_coupling_ratio(&self) -> f64 {
        let o2 = self.coupling * self.coupling;
        let mut worst: f64 = 0.0;
        for k in 0..self.grid.len() {
            if self.gamma_c[k] > 0.0 {
                let den = o2 * C64::new(self.delta_c[k], self.gamma_c[k]).norm();
                worst = worst.max((self.grid.omega(k) - self.omega_c).abs() / den);
            }
        }
        worst
    }

    /// `max |phi - phi_inf|` (distance modulo `2 pi`) over grid points with
    /// `|omega| <= fraction * omega_max`.
    pub fn strong_phase_gap(&self, d: &SpectralDensity, fraction: f64) -> f64 {
        let (lo, hi) = d.support();
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) * fraction);
        let ps = self.strong_phase();
        (0..self.grid.len())
            .filter(|&k| (self.grid.omega(k) - c).abs() <= h)
            .map(|k| wrap_pi(self.phi[k] - ps[k]).abs())
            .fold(0.0, f64::max)
    }
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_pi(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DensityModel;

    fn uniform() -> SpectralDensity {
        SpectralDensity::new(DensityModel::Uniform, 1.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(1000, 10.0).is_err());
        assert!(FrequencyGrid::new(512, 10.0).is_err());
        assert!(FrequencyGrid::new(1024, -1.0).is_err());
        let g = FrequencyGrid::default_for(1.0).unwrap();
        assert_eq!(g.omega(g.len() / 2), 0.0);
        assert!((g.omega(1) + g.omega(g.len() - 1)).abs() < 1e-12);
    }

    #[test]
    fn narrow_grid_rejected() {
        let g = FrequencyGrid::new(1024, 1.5 * PI).unwrap();
        assert!(matches!(delta_gamma(&uniform(), &g), Err(Error::Config(_))));
    }

    #[test]
    fn uniform_delta_closed_form() {
        let g = FrequencyGrid::default_for(1.0).unwrap();
        let (d, gm) = delta_gamma(&uniform(), &g).unwrap();
        let k = g.nearest(PI / 2.0).unwrap();
        assert!((d[k] - 3f64.ln() / (2.0 * PI)).abs() < 1e-4);
        assert!(d[g.len() / 2].abs() < 1e-12);
        assert!((gm[g.len() / 2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn direct_delta_uniform() {
        let v = delta_c_direct(&uniform(), PI / 2.0);
        assert!((v - 3f64.ln() / (2.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn greens_at_band_center() {
        let g = FrequencyGrid::default_for(1.0).unwrap();
        let (d, gm) = delta_gamma(&uniform(), &g).unwrap();
        let om = 10.0 * PI;
        let (gp, gn) = cavity_greens(&d, &gm, om, 0.0, &g).unwrap();
        let k = g.len() / 2;
        let expect = C64::new(0.0, -2.0 / (100.0 * PI * PI));
        assert!((gp[k] - expect).norm() < 1e-15);
        assert_eq!(gn[k], gp[k].conj());
    }

    #[test]
    fn decoupled_greens_outside_support() {
        let g = FrequencyGrid::default_for(1.0).unwrap();
        let (d, gm) = delta_gamma(&uniform(), &g).unwrap();
        // omega_c = 0 is a grid point, where the decoupled propagator has a pole
        assert!(matches!(cavity_greens(&d, &gm, 0.0, 0.0, &g), Err(Error::Singularity { omega }) if omega == 0.0));
        let r = ResponseSpectrum::compute(&uniform(), &g, 0.0, 0.0).unwrap();
        let k = g.nearest(2.0 * PI).unwrap();
        assert_eq!(g.omega(k), 2.0 * PI);
        assert_eq!(r.g_plus[k], C64::new(1.0 / (2.0 * PI), 0.0));
    }

    #[test]
    fn phase_at_center_is_pi() {
        let g = FrequencyGrid::default_for(1.0).unwrap();
        let r = ResponseSpectrum::compute(&uniform(), &g, 10.0 * PI, 0.0).unwrap();
        assert!((r.phi[g.len() / 2] - PI).abs() < 1e-12);
        assert!(r.phi[0].abs() < 1e-12);
    }

    #[test]
    fn decoupled_spectrum_flags_pole() {
        let g = FrequencyGrid::default_for(1.0).unwrap();
        let r = ResponseSpectrum::compute(&uniform(), &g, 0.0, 0.0).unwrap();
        assert_eq!(r.poles, vec![g.len() / 2]);
        assert!(r.phi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn strong_phase_examples() {
        let u = uniform();
        assert!((phase_strong(&u, 1e-9).unwrap() + PI).abs() < 1e-6);
        let v = phase_strong(&u, PI / 2.0).unwrap();
        let expect = -2.0 * (1.0 / (2.0 * 3f64.ln() / (2.0 * PI))).atan();
        assert!((v - expect).abs() < 1e-12);
        assert!((v + 2.46878).abs() < 1e-5);
        assert!(wrap_pi(phase_strong(&u, 20.0).unwrap()).abs() < 1e-12);
        assert!(matches!(strong_phase_value(0.0, 0.0, 3.0), Err(Error::UndefinedPhase { .. })));
    }

    #[test]
    fn slope_of_exact_lines() {
        let g = FrequencyGrid::default_for(1.0).unwrap();
        let c = vec![1.7; g.len()];
        let (p0, dt) = phase_slope(&c, &g, 0.3, 0.5).unwrap();
        assert!((p0 - 1.7).abs() < 1e-12 && dt.abs() < 1e-12);
        let line = g.sample(|w| PI + w);
        let (p0, dt) = phase_slope(&line, &g, 0.3, 0.0).unwrap();
        assert!((p0 - PI).abs() < 1e-10 && (dt - 1.0).abs() < 1e-10);
        assert!(phase_slope(&line, &g, 25.0, 1.0).is_err());
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.0, 3.1, -3.1];
        let u = unwrap_anchored(&raw);
        for w in u.windows(2) {
            assert!((w[1] - w[0]).abs() <= PI);
        }
    }
}
