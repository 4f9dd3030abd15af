//! Bare-time states, wave packets and the dressed-time expansion.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dynamics::StateVector;
use crate::error::{Checked, Error, Result, Warning};
use crate::response::{FrequencyGrid, ResponseSpectrum};
use crate::spectral::{EnsembleRealization, SpectralDensity};

/// Envelope `psi(t)` described through its spectrum
/// `psi~(omega) = int exp(i omega t) psi(t) dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WavePacket {
    /// `psi(t) = delta(t)`, `psi~ = 1`.
    Delta,
    /// `psi~ = exp(-(omega - omega0)^2 / (2 bandwidth^2))`.
    Gaussian { omega0: f64, bandwidth: f64 },
    /// Indicator of `[omega0 - bandwidth, omega0 + bandwidth]`.
    BandLimited { omega0: f64, bandwidth: f64 },
    /// Linear interpolation of `(omega, psi~)` samples, zero outside.
    Tabulated { omegas: Vec<f64>, values: Vec<C64> },
}

/// How far the envelope `|psi(t)|` extends from `t = 0`, in units of
/// `1 / bandwidth`.
const ENVELOPE_EXTENT: f64 = 3.0;

impl WavePacket {
    pub fn gaussian(omega0: f64, bandwidth: f64) -> Result<Self> {
        check_band(omega0, bandwidth)?;
        Ok(WavePacket::Gaussian { omega0, bandwidth })
    }

    pub fn band_limited(omega0: f64, bandwidth: f64) -> Result<Self> {
        check_band(omega0, bandwidth)?;
        Ok(WavePacket::BandLimited { omega0, bandwidth })
    }

    pub fn tabulated(omegas: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::Dimension { expected: omegas.len(), found: values.len() });
        }
        if omegas.len() < 2 {
            return Err(Error::Argument("tabulated spectrum needs at least two samples".into()));
        }
        if omegas.windows(2).any(|w| !(w[1] > w[0])) || omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::Argument("tabulated frequencies must be finite and increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("tabulated spectrum has non-finite values".into()));
        }
        Ok(WavePacket::Tabulated { omegas, values })
    }

    /// Read a tabulated spectrum from CSV with columns `omega, re, im`
    /// (an optional header line and `#` comments are skipped).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut omegas = Vec::new();
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => {
                    omegas.push(v[0]);
                    values.push(C64::new(v[1], v[2]));
                }
                Ok(v) if v.len() == 2 => {
                    omegas.push(v[0]);
                    values.push(C64::new(v[1], 0.0));
                }
                Err(_) if omegas.is_empty() && values.is_empty() && i == 0 => continue,
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected 'omega,re,im', got '{line}'"),
                    })
                }
            }
        }
        Self::tabulated(omegas, values)
    }

    pub fn psi_tilde(&self, omega: f64) -> C64 {
        match self {
            WavePacket::Delta => C64::new(1.0, 0.0),
            WavePacket::Gaussian { omega0, bandwidth } => {
                C64::new((-0.5 * ((omega - omega0) / bandwidth).powi(2)).exp(), 0.0)
            }
            WavePacket::BandLimited { omega0, bandwidth } => {
                if (omega - omega0).abs() <= *bandwidth {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            WavePacket::Tabulated { omegas, values } => interpolate(omegas, values, omega),
        }
    }

    /// `psi~` sampled on the grid.
    pub fn sample(&self, grid: &FrequencyGrid) -> Vec<C64> {
        grid.sample(|w| self.psi_tilde(w))
    }

    pub fn carrier(&self) -> f64 {
        match self {
            WavePacket::Delta => 0.0,
            WavePacket::Gaussian { omega0, .. } | WavePacket::BandLimited { omega0, .. } => *omega0,
            WavePacket::Tabulated { omegas, values } => {
                let (m, s) = moments(omegas, values);
                if s > 0.0 {
                    m
                } else {
                    0.0
                }
            }
        }
    }

    /// Spectral halfwidth; `None` for the delta packet.
    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            WavePacket::Delta => None,
            WavePacket::Gaussian { bandwidth, .. } | WavePacket::BandLimited { bandwidth, .. } => {
                Some(*bandwidth)
            }
            WavePacket::Tabulated { omegas, values } => {
                let (_, s) = moments(omegas, values);
                (s > 0.0).then_some(s)
            }
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, WavePacket::Delta)
    }

    /// Replace `psi~ = 1` by the indicator of the density support. Only the
    /// values of `psi~` where `rho_eff > 0` matter, so this is the same
    /// physical state with a finite time envelope.
    pub fn regularized(&self, d: &SpectralDensity) -> Self {
        match self {
            WavePacket::Delta => {
                let (lo, hi) = d.support();
                WavePacket::BandLimited { omega0: 0.5 * (lo + hi), bandwidth: 0.5 * (hi - lo) }
            }
            other => other.clone(),
        }
    }

    /// `psi(t) = (1 / 2 pi) int exp(-i omega t) psi~(omega) d omega`; `None`
    /// for the delta packet.
    pub fn psi(&self, t: f64) -> Option<C64> {
        match self {
            WavePacket::Delta => None,
            WavePacket::Gaussian { omega0, bandwidth } => {
                let b = *bandwidth;
                let env = b / (2.0 * PI).sqrt() * (-0.5 * (b * t).powi(2)).exp();
                Some(C64::cis(-omega0 * t) * env)
            }
            WavePacket::BandLimited { omega0, bandwidth } => {
                let b = *bandwidth;
                let env = if (b * t).abs() < 1e-8 { b / PI } else { (b * t).sin() / (PI * t) };
                Some(C64::cis(-omega0 * t) * env)
            }
            WavePacket::Tabulated { omegas, values } => {
                // exact integral of the piecewise-linear spectrum
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..omegas.len() - 1 {
                    acc += linear_segment_ft(omegas[k], omegas[k + 1], values[k], values[k + 1], t);
                }
                Some(acc / (2.0 * PI))
            }
        }
    }

    /// How far `|psi(t)|` extends from `t = 0` (zero for the delta packet).
    pub fn time_extent(&self) -> f64 {
        match self.bandwidth() {
            None => 0.0,
            Some(b) => ENVELOPE_EXTENT / b,
        }
    }

    /// `psi(t)` on the time grid conjugate to `grid` (FFT), returned as
    /// `(times, values)` with `dt = pi / W` and times centered on zero.
    pub fn time_domain(&self, grid: &FrequencyGrid) -> (Vec<f64>, Vec<C64>) {
        let n = grid.len();
        let dw = grid.step();
        let dt = 2.0 * PI / (n as f64 * dw);
        let mut buf = self.sample(grid);
        // psi(t_m) = (dw / 2 pi) sum_k exp(-i w_k t_m) psi~_k, with w_k = -W + k dw
        // and t_m = (m - n/2) dt; the phases factor into a plain forward DFT.
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let w0 = grid.omega(0);
        let mut times = Vec::with_capacity(n);
        let mut vals = Vec::with_capacity(n);
        for m in 0..n {
            let j = (m + n / 2) % n;
            let t = (m as f64 - (n / 2) as f64) * dt;
            // exp(-i w_k t) = exp(-i w0 t) exp(-2 pi i k (m - n/2) / n)
            let v = buf[j] * C64::cis(-w0 * t) * (dw / (2.0 * PI));
            times.push(t);
            vals.push(v);
        }
        (times, vals)
    }
}

fn check_band(omega0: f64, bandwidth: f64) -> Result<()> {
    if !omega0.is_finite() {
        return Err(Error::Argument(format!("packet.omega0 must be finite, got {omega0}")));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Argument(format!("packet.bandwidth must be finite and positive, got {bandwidth}")));
    }
    Ok(())
}

fn interpolate(omegas: &[f64], values: &[C64], omega: f64) -> C64 {
    let n = omegas.len();
    if !(omega >= omegas[0] && omega <= omegas[n - 1]) {
        return C64::new(0.0, 0.0);
    }
    let k = omegas.partition_point(|&w| w <= omega).clamp(1, n - 1);
    let (w0, w1) = (omegas[k - 1], omegas[k]);
    let s = (omega - w0) / (w1 - w0);
    values[k - 1] * (1.0 - s) + values[k] * s
}

/// Mean and standard deviation of `|psi~|^2` over a table (trapezoid rule).
fn moments(omegas: &[f64], values: &[C64]) -> (f64, f64) {
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..omegas.len() - 1 {
        let h = omegas[k + 1] - omegas[k];
        for (w, v) in [(omegas[k], values[k]), (omegas[k + 1], values[k + 1])] {
            let p = 0.5 * h * v.norm_sqr();
            m0 += p;
            m1 += p * w;
            m2 += p * w * w;
        }
    }
    if m0 <= 0.0 {
        return (0.0, 0.0);
    }
    let mean = m1 / m0;
    (mean, (m2 / m0 - mean * mean).max(0.0).sqrt())
}

/// `int_a^b exp(-i t w) (va + (vb - va)(w - a)/(b - a)) dw`.
fn linear_segment_ft(a: f64, b: f64, va: C64, vb: C64, t: f64) -> C64 {
    let h = b - a;
    let x = t * h;
    let i = C64::new(0.0, 1.0);
    // e0 = int_0^1 exp(-i x s) ds, e1 = int_0^1 s exp(-i x s) ds
    let (e0, e1) = if x.abs() < 1e-4 {
        (
            C64::new(1.0 - x * x / 6.0, -x / 2.0 + x * x * x / 24.0),
            C64::new(0.5 - x * x / 8.0, -x / 3.0 + x * x * x / 30.0),
        )
    } else {
        let e = C64::cis(-x);
        ((1.0 - e) / (i * x), (e * (1.0 + i * x) - 1.0) / (x * x))
    };
    C64::cis(-t * a) * h * (va * e0 + (vb - va) * e1)
}

/// Spin amplitudes `alpha_j exp(-i omega_j tau)` of the bare-time state `|tau>`.
pub fn bare_time_coeffs(ens: &EnsembleRealization, tau: f64) -> Vec<C64> {
    ens.omegas().iter().zip(ens.alphas()).map(|(w, a)| a * C64::cis(-w * tau)).collect()
}

/// Finite-N state of a packet centered on the bare time `t0`: spin amplitudes
/// `alpha_j psi~(omega_j) exp(-i omega_j t0)`, no cavity amplitude, normalized.
/// Warns when the packet reaches above `threshold` (the asymptotic-past limit).
pub fn wavepacket_coeffs(
    ens: &EnsembleRealization,
    wp: &WavePacket,
    t0: f64,
    threshold: f64,
) -> Result<Checked<StateVector>> {
    let spins: Vec<C64> = ens
        .omegas()
        .iter()
        .zip(ens.alphas())
        .map(|(&w, a)| a * wp.psi_tilde(w) * C64::cis(-w * t0))
        .collect();
    let norm = spins.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Argument("wave packet has no weight on the ensemble frequencies".into()));
    }
    let mut amps = Vec::with_capacity(spins.len() + 1);
    amps.push(C64::new(0.0, 0.0));
    amps.extend(spins.into_iter().map(|c| c / norm));
    let state = StateVector::new(amps)?;
    let support_max = t0 + wp.time_extent();
    let mut warnings = Vec::new();
    if support_max > threshold {
        warnings.push(Warning::NotAsymptotic { support_max, threshold });
    }
    Ok(Checked { value: state, warnings })
}

/// Frequency-domain dressed-time expansion: the cavity component and the
/// phase factor acquired on the far side of the coupling region.
#[derive(Debug, Clone)]
pub struct DressedSpectrum {
    pub grid: FrequencyGrid,
    pub cavity_amp: Vec<C64>,
    pub phase_factor: Vec<C64>,
}

/// Tolerance for the two cavity-amplitude formulas to agree.
pub const IDENTITY_TOL: f64 = 1e-10;

impl DressedSpectrum {
    pub fn from_response(resp: &ResponseSpectrum) -> Result<Self> {
        let phase_factor = resp.phase_factor();
        let om = resp.coupling;
        if om == 0.0 {
            return Ok(Self {
                grid: resp.grid,
                cavity_amp: vec![C64::new(0.0, 0.0); resp.grid.len()],
                phase_factor,
            });
        }
        let i_over = C64::new(0.0, 1.0 / om);
        let mut cavity_amp = Vec::with_capacity(resp.grid.len());
        for k in 0..resp.grid.len() {
            let a = i_over * (phase_factor[k] - 1.0);
            let b = om * resp.g_plus[k] * resp.gamma_c[k];
            if (a - b).norm() > IDENTITY_TOL {
                return Err(Error::Identity(format!(
                    "cavity amplitude mismatch {} at omega = {}",
                    (a - b).norm(),
                    resp.grid.omega(k)
                )));
            }
            cavity_amp.push(a);
        }
        Ok(Self { grid: resp.grid, cavity_amp, phase_factor })
    }
}

pub fn dressed_spectrum(resp: &ResponseSpectrum) -> Result<DressedSpectrum> {
    DressedSpectrum::from_response(resp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample_ensemble, DensityModel};

    fn ens(model: DensityModel, n: usize) -> EnsembleRealization {
        let d = SpectralDensity::new(model, 1.0).unwrap();
        sample_ensemble(&d, n, 10.0 * PI, 0.0).unwrap()
    }

    #[test]
    fn bare_state_at_zero_is_superradiant() {
        let e = ens(DensityModel::Uniform, 64);
        assert_eq!(bare_time_coeffs(&e, 0.0), e.alphas().to_vec());
    }

    #[test]
    fn bare_state_decays_from_superradiant() {
        let e = ens(DensityModel::Uniform, 4096);
        let a = bare_time_coeffs(&e, 0.0);
        let b = bare_time_coeffs(&e, 8.0);
        let ov: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        assert!(ov.norm() <= 0.01);
    }

    #[test]
    fn delta_packet_is_bare_state() {
        let e = ens(DensityModel::HalfwaveCosSq, 128);
        let s = wavepacket_coeffs(&e, &WavePacket::Delta, -4.0, -4.0).unwrap();
        assert!(s.warnings.is_empty());
        let b = bare_time_coeffs(&e, -4.0);
        assert_eq!(s.value.amplitudes()[0], C64::new(0.0, 0.0));
        for (x, y) in s.value.amplitudes()[1..].iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn indicator_matches_delta_for_uniform() {
        let d = SpectralDensity::new(DensityModel::Uniform, 1.0).unwrap();
        let e = sample_ensemble(&d, 256, 1.0, 0.0).unwrap();
        let a = wavepacket_coeffs(&e, &WavePacket::Delta, -5.0, -4.0).unwrap().value;
        let reg = WavePacket::Delta.regularized(&d);
        let b = wavepacket_coeffs(&e, &reg, -5.0, -4.0).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn late_packet_warns() {
        let e = ens(DensityModel::Uniform, 64);
        let wp = WavePacket::gaussian(0.0, PI / 8.0).unwrap();
        let s = wavepacket_coeffs(&e, &wp, -4.0, -4.0).unwrap();
        assert!(matches!(s.warnings[0], Warning::NotAsymptotic { .. }));
    }

    #[test]
    fn analytic_envelopes_match_fft() {
        let grid = FrequencyGrid::new(4096, 8.0 * PI).unwrap();
        for wp in [
            WavePacket::gaussian(0.5, PI / 4.0).unwrap(),
            WavePacket::band_limited(-0.3, PI / 2.0).unwrap(),
        ] {
            let (ts, vs) = wp.time_domain(&grid);
            for m in (1800..2300).step_by(37) {
                let exact = wp.psi(ts[m]).unwrap();
                assert!((vs[m] - exact).norm() < 2e-3, "{wp:?} t = {}", ts[m]);
            }
        }
    }

    #[test]
    fn parseval_for_gaussian() {
        let grid = FrequencyGrid::new(4096, 8.0 * PI).unwrap();
        let wp = WavePacket::gaussian(0.2, 0.7).unwrap();
        let (ts, vs) = wp.time_domain(&grid);
        let dt = ts[1] - ts[0];
        let lhs: f64 = wp.sample(&grid).iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.step() / (2.0 * PI);
        let rhs: f64 = vs.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn tabulated_psi_matches_gaussian() {
        let g = WavePacket::gaussian(0.0, 0.5).unwrap();
        let omegas: Vec<f64> = (0..=2000).map(|k| -5.0 + k as f64 * 0.005).collect();
        let values = omegas.iter().map(|&w| g.psi_tilde(w)).collect();
        let t = WavePacket::tabulated(omegas, values).unwrap();
        for tt in [0.0, 0.7, 3.0] {
            assert!((t.psi(tt).unwrap() - g.psi(tt).unwrap()).norm() < 1e-5);
        }
        assert!((t.bandwidth().unwrap() - 0.5 / 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn dressed_identity_holds() {
        let d = SpectralDensity::new(DensityModel::Uniform, 1.0).unwrap();
        let grid = FrequencyGrid::default_for(1.0).unwrap();
        let r = ResponseSpectrum::compute(&d, &grid, 10.0 * PI, 0.0).unwrap();
        let ds = dressed_spectrum(&r).unwrap();
        let k = grid.len() / 2;
        assert!((ds.cavity_amp[k] - C64::new(0.0, -2.0 / (10.0 * PI))).norm() < 1e-12);
        assert!(ds.cavity_amp.iter().all(|c| c.norm() <= 2.0 / (10.0 * PI) + 1e-15));
    }
}
