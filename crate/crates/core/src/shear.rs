//! Bare-time expansion of a traversing wave packet, its linear shear
//! approximation and the shear fidelity.
//!
//! Two independent evolutions implement [`ReferenceOverlap`]:
//! [`AnalyticEvolution`] works on the frequency grid from the response
//! functions, [`OracleEvolution`] propagates a finite ensemble exactly.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::{project_bare, Mode, Propagator, SingleExcitationHamiltonian, StateVector};
use crate::error::{Checked, Error, Result, Warning};
use crate::hilbert::PvTransform;
use crate::response::{wrap_pi, FrequencyGrid, ResponseSpectrum};
use crate::spectral::SpectralDensity;
use crate::states::{wavepacket_coeffs, WavePacket};

/// Value of an amplitude that may be a point mass (delta packets).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chi {
    Value(C64),
    /// `weight * delta(tau - tau_query)`.
    Impulse { weight: C64 },
}

impl Chi {
    /// Finite value; impulses map to `None`.
    pub fn value(self) -> Option<C64> {
        match self {
            Chi::Value(v) => Some(v),
            Chi::Impulse { .. } => None,
        }
    }
}

fn envelope(wp: &WavePacket, s: f64, factor: C64) -> Chi {
    match wp.psi(s) {
        Some(v) => Chi::Value(factor * v),
        None if s == 0.0 => Chi::Impulse { weight: factor },
        None => Chi::Value(C64::new(0.0, 0.0)),
    }
}

/// Exact expansion coefficient `chi(tau, t)` on the grid of `resp`.
#[derive(Debug, Clone)]
pub struct ExactExpansion {
    wp: WavePacket,
    grid: FrequencyGrid,
    /// `psi~ exp(-i phi) dw / 2 pi`
    weights: Vec<C64>,
}

impl ExactExpansion {
    pub fn new(wp: &WavePacket, resp: &ResponseSpectrum) -> Self {
        let scale = resp.grid.step() / (2.0 * PI);
        let weights = wp
            .sample(&resp.grid)
            .into_iter()
            .zip(resp.phase_factor())
            .map(|(p, f)| p * f * scale)
            .collect();
        Self { wp: wp.clone(), grid: resp.grid, weights }
    }

    /// `tau <= 0`: free envelope `psi(t - tau)`. `tau > 0`:
    /// `(1/2 pi) int exp(-i [(t - tau) w + phi(w)]) psi~(w) dw`.
    pub fn at(&self, tau: f64, t: f64) -> Chi {
        if tau <= 0.0 {
            return envelope(&self.wp, t - tau, C64::new(1.0, 0.0));
        }
        let s = t - tau;
        let v = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * C64::cis(-s * self.grid.omega(k)))
            .sum();
        Chi::Value(v)
    }
}

pub fn chi_exact(wp: &WavePacket, resp: &ResponseSpectrum, tau: f64, t: f64) -> Chi {
    ExactExpansion::new(wp, resp).at(tau, t)
}

/// Linear shear approximation: `psi(t - tau)` below zero,
/// `exp(-i phi0) psi(t + dt - tau)` above.
pub fn chi_sheared(wp: &WavePacket, phi0: f64, dt: f64, tau: f64, t: f64) -> Chi {
    if tau <= 0.0 {
        envelope(wp, t - tau, C64::new(1.0, 0.0))
    } else {
        envelope(wp, t + dt - tau, C64::cis(-phi0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    Analytic,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Oracle => "oracle",
            Method::Analytic => "analytic",
        })
    }
}

/// Overlaps `<Psi0(t + dt)|Psi(t)>` of the evolved state with the freely
/// evolved initial packet, both of unit norm. For a delta packet this is the
/// bare-time overlap `<t + dt|Psi(t)>`.
pub trait ReferenceOverlap {
    fn reference_overlaps(&self, t: f64, dts: &[f64]) -> Result<Vec<C64>>;
    /// Bare-time overlaps `<tau|Psi(t)>`.
    fn bare_overlaps(&self, t: f64, taus: &[f64]) -> Result<Vec<C64>>;
    fn method(&self) -> Method;
}

/// Grid evolution of a packet prepared in the asymptotic past.
///
/// The spin amplitude density at time `t` is
/// `A(w, t) = exp(-i w t) psi~ + P[g]`, `g = exp(-i w t) psi~ (exp(-i phi) - 1)`,
/// where `P` is the causal projection; bare-time overlaps follow as
/// `<tau|Psi(t)> = int rho_eff exp(i w tau) A dw`.
#[derive(Debug)]
pub struct AnalyticEvolution {
    grid: FrequencyGrid,
    rho: Vec<f64>,
    psi: Vec<C64>,
    factor_minus_one: Vec<C64>,
    norm: f64,
    pv: PvTransform,
}

impl AnalyticEvolution {
    pub fn new(d: &SpectralDensity, resp: &ResponseSpectrum, wp: &WavePacket) -> Result<Self> {
        Self::with_phase(d, &resp.grid, &resp.phi, wp)
    }

    /// Use an arbitrary phase curve, e.g. the strong-coupling limit.
    /// Non-finite phase samples count as zero.
    pub fn with_phase(d: &SpectralDensity, grid: &FrequencyGrid, phi: &[f64], wp: &WavePacket) -> Result<Self> {
        if phi.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), found: phi.len() });
        }
        let rho = grid.sample(|w| d.eval_sampled(w));
        let psi = wp.sample(grid);
        let norm: f64 = rho.iter().zip(&psi).map(|(r, p)| r * p.norm_sqr()).sum::<f64>() * grid.step();
        if !(norm > 0.0) {
            return Err(Error::Argument("wave packet has no weight inside the density support".into()));
        }
        let factor_minus_one = phi
            .iter()
            .map(|&p| if p.is_finite() { C64::cis(-p) - 1.0 } else { C64::new(0.0, 0.0) })
            .collect();
        Ok(Self { grid: *grid, rho, psi, factor_minus_one, norm, pv: PvTransform::new(grid.len()) })
    }

    /// `int rho_eff |psi~|^2 dw`.
    pub fn norm_sqr(&self) -> f64 {
        self.norm
    }

    /// `A(w, t)` on the grid.
    pub fn amplitude(&self, t: f64) -> Result<Vec<C64>> {
        let free: Vec<C64> = (0..self.grid.len()).map(|k| C64::cis(-self.grid.omega(k) * t) * self.psi[k]).collect();
        let g: Vec<C64> = free.iter().zip(&self.factor_minus_one).map(|(f, e)| f * e).collect();
        let proj = self.pv.causal_projection(&g)?;
        Ok(free.into_iter().zip(proj).map(|(f, p)| f + p).collect())
    }

    fn weighted(&self, t: f64, with_conj_psi: bool, scale: f64) -> Result<Vec<C64>> {
        let a = self.amplitude(t)?;
        let dw = self.grid.step();
        Ok((0..self.grid.len())
            .map(|k| {
                let base = a[k] * self.rho[k] * dw * scale;
                if with_conj_psi {
                    base * self.psi[k].conj()
                } else {
                    base
                }
            })
            .collect())
    }

    fn transform(&self, weights: &[C64], times: impl Iterator<Item = f64>) -> Vec<C64> {
        times
            .map(|s| {
                weights
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| **w != C64::new(0.0, 0.0))
                    .map(|(k, w)| w * C64::cis(self.grid.omega(k) * s))
                    .sum()
            })
            .collect()
    }
}

impl ReferenceOverlap for AnalyticEvolution {
    fn reference_overlaps(&self, t: f64, dts: &[f64]) -> Result<Vec<C64>> {
        let w = self.weighted(t, true, 1.0 / self.norm)?;
        Ok(self.transform(&w, dts.iter().map(|dt| t + dt)))
    }

    fn bare_overlaps(&self, t: f64, taus: &[f64]) -> Result<Vec<C64>> {
        let w = self.weighted(t, false, 1.0 / self.norm.sqrt())?;
        Ok(self.transform(&w, taus.iter().copied()))
    }

    fn method(&self) -> Method {
        Method::Analytic
    }
}

/// Exact propagation of the finite-N packet state from `t_start`.
pub struct OracleEvolution<'h> {
    h: &'h SingleExcitationHamiltonian,
    prop: Propagator<'h>,
    t_start: f64,
    /// `alpha_j psi~(omega_j)`, normalized.
    reference: Vec<C64>,
}

impl<'h> OracleEvolution<'h> {
    pub fn new(
        h: &'h SingleExcitationHamiltonian,
        wp: &WavePacket,
        t_start: f64,
        threshold: f64,
    ) -> Result<Checked<Self>> {
        let init = wavepacket_coeffs(h.ensemble(), wp, t_start, threshold)?;
        let reference = wavepacket_coeffs(h.ensemble(), wp, 0.0, f64::INFINITY)?.value.spins().to_vec();
        let prop = Propagator::new(h, &init.value, Mode::Full)?;
        Ok(Checked { value: Self { h, prop, t_start, reference }, warnings: init.warnings })
    }

    pub fn state(&self, t: f64) -> StateVector {
        self.prop.at(t - self.t_start)
    }
}

impl ReferenceOverlap for OracleEvolution<'_> {
    fn reference_overlaps(&self, t: f64, dts: &[f64]) -> Result<Vec<C64>> {
        let s = self.state(t);
        let ens = self.h.ensemble();
        // weights r_j^* psi_j, then a phase exp(i w_j (t + dt)) per shift
        let w: Vec<C64> = self.reference.iter().zip(s.spins()).map(|(r, x)| r.conj() * x).collect();
        Ok(dts
            .iter()
            .map(|dt| {
                let s = t + dt;
                w.iter().zip(ens.omegas()).map(|(v, om)| v * C64::cis(om * s)).sum()
            })
            .collect())
    }

    fn bare_overlaps(&self, t: f64, taus: &[f64]) -> Result<Vec<C64>> {
        project_bare(self.h.ensemble(), &self.state(t), taus)
    }

    fn method(&self) -> Method {
        Method::Oracle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShearOptions {
    /// Finite stand-in for the asymptotic future.
    pub t_asym: f64,
    /// Shifts are scanned over `[-window, window]`.
    pub window: f64,
    pub step: f64,
    /// Second evaluation time for the convergence check.
    pub t_check: Option<f64>,
    /// Allowed fidelity change between `t_asym` and `t_check`.
    pub convergence_tol: f64,
}

impl ShearOptions {
    pub fn for_dephasing_time(t: f64) -> Self {
        Self { t_asym: 8.0 * t, window: 4.0 * t, step: t / 64.0, t_check: Some(12.0 * t), convergence_tol: 1e-3 }
    }
}

impl Default for ShearOptions {
    fn default() -> Self {
        Self::for_dephasing_time(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub dt: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShearResult {
    #[serde(rename = "F")]
    pub f: f64,
    pub dt_star: f64,
    /// `-arg <Psi0(t_asym + dt_star)|Psi(t_asym)>` in `(-pi, pi]`.
    pub phi0: f64,
    pub t_asym: f64,
    pub window: f64,
    pub method: Method,
    /// Both states in the overlap are unit vectors.
    pub normalization: &'static str,
    #[serde(skip)]
    pub scan: Vec<ScanPoint>,
}

/// `F = max_dt |<Psi0(t_asym + dt)|Psi(t_asym)>|`, scanned on a grid of step
/// `opts.step` and refined by a parabola through the best three samples.
pub fn shear_fidelity(src: &dyn ReferenceOverlap, opts: &ShearOptions) -> Result<Checked<ShearResult>> {
    if !(opts.window > 0.0 && opts.step > 0.0 && opts.window.is_finite() && opts.t_asym.is_finite()) {
        return Err(Error::Argument(format!("invalid shear window {} / step {}", opts.window, opts.step)));
    }
    let mut warnings = Vec::new();
    let (dt_star, ov, scan) = scan_max(src, opts.t_asym, opts, &mut warnings)?;
    if let Some(tc) = opts.t_check {
        let mut ignored = Vec::new();
        let (_, ov2, _) = scan_max(src, tc, opts, &mut ignored)?;
        let delta_f = (ov2.norm() - ov.norm()).abs();
        if delta_f > opts.convergence_tol {
            warnings.push(Warning::NotConverged { delta_f, t_asym: opts.t_asym, t_check: tc });
        }
    }
    let result = ShearResult {
        f: ov.norm(),
        dt_star,
        phi0: wrap_pi(-ov.arg()),
        t_asym: opts.t_asym,
        window: opts.window,
        method: src.method(),
        normalization: "unit",
        scan,
    };
    Ok(Checked { value: result, warnings })
}

fn scan_max(
    src: &dyn ReferenceOverlap,
    t: f64,
    opts: &ShearOptions,
    warnings: &mut Vec<Warning>,
) -> Result<(f64, C64, Vec<ScanPoint>)> {
    let n = (opts.window / opts.step).round() as i64;
    let dts: Vec<f64> = (-n..=n).map(|k| k as f64 * opts.step).collect();
    let ovs = src.reference_overlaps(t, &dts)?;
    let mags: Vec<f64> = ovs.iter().map(|v| v.norm()).collect();
    let mut best = 0;
    for (k, m) in mags.iter().enumerate() {
        if *m > mags[best] {
            best = k;
        }
    }
    let scan = dts.iter().zip(&mags).map(|(&dt, &overlap)| ScanPoint { dt, overlap }).collect();
    if best == 0 || best == dts.len() - 1 {
        warnings.push(Warning::WindowEdge { dt: dts[best], window: opts.window });
        return Ok((dts[best], ovs[best], scan));
    }
    let (y0, y1, y2) = (mags[best - 1], mags[best], mags[best + 1]);
    let curv = y0 - 2.0 * y1 + y2;
    let offset = if curv < 0.0 { (0.5 * (y0 - y2) / curv).clamp(-1.0, 1.0) } else { 0.0 };
    let dt_star = dts[best] + offset * opts.step;
    let ov = if offset == 0.0 { ovs[best] } else { src.reference_overlaps(t, &[dt_star])?[0] };
    Ok((dt_star, ov, scan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DensityModel;

    #[test]
    fn sheared_free_limit() {
        let wp = WavePacket::gaussian(0.3, 0.5).unwrap();
        for tau in [-2.0, 0.0, 1.5] {
            assert_eq!(chi_sheared(&wp, 0.0, 0.0, tau, 1.0).value(), wp.psi(1.0 - tau));
        }
    }

    #[test]
    fn sheared_delta_support() {
        let c = chi_sheared(&WavePacket::Delta, PI, 1.0, 5.0, 4.0);
        assert_eq!(c, Chi::Impulse { weight: C64::cis(-PI) });
        assert_eq!(chi_sheared(&WavePacket::Delta, PI, 1.0, 4.5, 4.0), Chi::Value(C64::new(0.0, 0.0)));
    }

    #[test]
    fn exact_without_phase_is_free() {
        let d = SpectralDensity::new(DensityModel::Uniform, 1.0).unwrap();
        let grid = FrequencyGrid::default_for(1.0).unwrap();
        let r = ResponseSpectrum::compute(&d, &grid, 0.0, 0.1).unwrap();
        let wp = WavePacket::gaussian(0.0, 0.8).unwrap();
        let ex = ExactExpansion::new(&wp, &r);
        for tau in [0.5, 2.0, 3.3] {
            let a = ex.at(tau, 2.0).value().unwrap();
            assert!((a - wp.psi(2.0 - tau).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn exact_with_linear_phase_is_shifted() {
        let d = SpectralDensity::new(DensityModel::Uniform, 1.0).unwrap();
        let grid = FrequencyGrid::default_for(1.0).unwrap();
        let mut r = ResponseSpectrum::compute(&d, &grid, 10.0 * PI, 0.0).unwrap();
        let (p0, dt) = (0.7, 1.2);
        r.phi = grid.sample(|w| p0 + w * dt);
        let wp = WavePacket::gaussian(0.2, 0.6).unwrap();
        let ex = ExactExpansion::new(&wp, &r);
        for tau in [0.5, 3.0, 5.2] {
            let a = ex.at(tau, 4.0).value().unwrap();
            let b = chi_sheared(&wp, p0, dt, tau, 4.0).value().unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn decoupled_fidelity_is_one() {
        let d = SpectralDensity::new(DensityModel::HalfwaveCosSq, 1.0).unwrap();
        let grid = FrequencyGrid::default_for(1.0).unwrap();
        let r = ResponseSpectrum::compute(&d, &grid, 0.0, 0.0).unwrap();
        let an = AnalyticEvolution::new(&d, &r, &WavePacket::Delta).unwrap();
        let res = shear_fidelity(&an, &ShearOptions::default()).unwrap();
        assert!(res.warnings.is_empty());
        let v = res.value;
        assert!((v.f - 1.0).abs() < 1e-9 && v.dt_star.abs() < 1e-9 && v.phi0.abs() < 1e-9, "{v:?}");
    }
}
