//! Effective spin densities, the bare-time overlap kernel and the
//! deterministic discretization of a density into a finite ensemble.
//!
//! Frequencies are angular frequencies in units of `1/T` and times are in
//! units of `T`, where `T` is the dephasing time carried by the density.
//! A bare-time argument `tau` corresponds to the spin-wave number `k = kappa * tau`
//! when the spin frequencies are set by a linear gradient `omega_j = -kappa z_j`;
//! nothing in this crate depends on `kappa`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

/// Default Gaussian truncation, in standard deviations.
pub const DEFAULT_SIGMA_TRUNC: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityModel {
    /// Flat density on `[-pi/T, pi/T]`.
    Uniform,
    /// `(T/pi) cos^2(omega T / 2)` on `[-pi/T, pi/T]` (halfwave stripline).
    HalfwaveCosSq,
    /// Normal density with variance `(pi^2 - 6) / (3 T^2)`, truncated and renormalized.
    Gaussian,
}

impl DensityModel {
    pub fn name(self) -> &'static str {
        match self {
            DensityModel::Uniform => "uniform",
            DensityModel::HalfwaveCosSq => "halfwave_cos_sq",
            DensityModel::Gaussian => "gaussian",
        }
    }

    pub const ALL: [DensityModel; 3] =
        [DensityModel::Uniform, DensityModel::HalfwaveCosSq, DensityModel::Gaussian];
}

impl fmt::Display for DensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(DensityModel::Uniform),
            "halfwave_cos_sq" | "halfwave" | "cos2" | "cos_sq" => Ok(DensityModel::HalfwaveCosSq),
            "gaussian" | "gauss" => Ok(DensityModel::Gaussian),
            other => Err(Error::Config(format!("unknown density model '{other}'"))),
        }
    }
}

/// An effective spin density `rho_eff(omega)`, normalized to unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralDensity {
    model: DensityModel,
    t: f64,
    sigma_trunc: f64,
}

impl SpectralDensity {
    pub fn new(model: DensityModel, t: f64) -> Result<Self> {
        Self::with_truncation(model, t, DEFAULT_SIGMA_TRUNC)
    }

    /// `sigma_trunc` only affects the Gaussian model.
    pub fn with_truncation(model: DensityModel, t: f64, sigma_trunc: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("density.T must be finite and positive, got {t}")));
        }
        if !(sigma_trunc.is_finite() && sigma_trunc >= 1.0) {
            return Err(Error::Config(format!(
                "density.sigma_trunc must be finite and >= 1, got {sigma_trunc}"
            )));
        }
        Ok(Self { model, t, sigma_trunc })
    }

    pub fn model(&self) -> DensityModel {
        self.model
    }

    /// Dephasing time `T`.
    pub fn dephasing_time(&self) -> f64 {
        self.t
    }

    pub fn sigma_trunc(&self) -> f64 {
        self.sigma_trunc
    }

    /// Standard deviation parameter of the Gaussian model, `sqrt((pi^2-6)/3) / T`.
    /// The halfwave density has exactly this standard deviation.
    pub fn gaussian_sigma(&self) -> f64 {
        ((PI * PI - 6.0) / 3.0).sqrt() / self.t
    }

    fn gaussian_norm(&self) -> f64 {
        libm::erf(self.sigma_trunc / std::f64::consts::SQRT_2)
    }

    /// Closed support interval `[omega_min, omega_max]`.
    pub fn support(&self) -> (f64, f64) {
        match self.model {
            DensityModel::Uniform | DensityModel::HalfwaveCosSq => (-PI / self.t, PI / self.t),
            DensityModel::Gaussian => {
                let a = self.sigma_trunc * self.gaussian_sigma();
                (-a, a)
            }
        }
    }

    pub fn contains(&self, omega: f64) -> bool {
        let (lo, hi) = self.support();
        omega >= lo && omega <= hi
    }

    /// `rho_eff(omega)`; zero outside the support.
    pub fn eval(&self, omega: f64) -> f64 {
        if !self.contains(omega) {
            return 0.0;
        }
        let t = self.t;
        match self.model {
            DensityModel::Uniform => t / (2.0 * PI),
            DensityModel::HalfwaveCosSq => {
                let c = (0.5 * omega * t).cos();
                t / PI * c * c
            }
            DensityModel::Gaussian => {
                let s = self.gaussian_sigma();
                (-0.5 * (omega / s).powi(2)).exp() / (s * (2.0 * PI).sqrt() * self.gaussian_norm())
            }
        }
    }

    /// Density value used when sampling on a grid: the mean of the one-sided
    /// limits, which halves the value on the support endpoints.
    pub fn eval_sampled(&self, omega: f64) -> f64 {
        let (lo, hi) = self.support();
        let v = self.eval(omega);
        if omega == lo || omega == hi {
            0.5 * v
        } else {
            v
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, omega: f64) -> f64 {
        let (lo, hi) = self.support();
        if omega <= lo {
            return 0.0;
        }
        if omega >= hi {
            return 1.0;
        }
        match self.model {
            DensityModel::Uniform => (omega * self.t + PI) / (2.0 * PI),
            DensityModel::HalfwaveCosSq => {
                let u = omega * self.t;
                (u + PI + u.sin()) / (2.0 * PI)
            }
            DensityModel::Gaussian => {
                let s = self.gaussian_sigma();
                0.5 * (1.0 + libm::erf(omega / (s * std::f64::consts::SQRT_2)) / self.gaussian_norm())
            }
        }
    }

    /// Quantile function. Closed form for the uniform model, bisection on the
    /// CDF otherwise.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Argument(format!("quantile level {p} outside [0, 1]")));
        }
        let (mut lo, mut hi) = self.support();
        if self.model == DensityModel::Uniform {
            return Ok(lo + (hi - lo) * p);
        }
        // Bisect until the bracket stops shrinking (well below 1e-12).
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 / self.t {
                return Ok(mid);
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    /// Variance of the (truncated) density.
    pub fn variance(&self) -> f64 {
        let t2 = self.t * self.t;
        match self.model {
            DensityModel::Uniform => PI * PI / (3.0 * t2),
            DensityModel::HalfwaveCosSq => (PI * PI - 6.0) / (3.0 * t2),
            DensityModel::Gaussian => {
                let s = self.gaussian_sigma();
                let k = self.sigma_trunc;
                let pdf = (-0.5 * k * k).exp() / (2.0 * PI).sqrt();
                s * s * (1.0 - 2.0 * k * pdf / self.gaussian_norm())
            }
        }
    }

    /// Bare-time overlap `<tau2|tau1> = int exp(-i omega dtau) rho_eff(omega) d omega`
    /// with `dtau = tau1 - tau2`.
    pub fn overlap_kernel(&self, dtau: f64) -> C64 {
        let x = dtau / self.t;
        match self.model {
            DensityModel::Uniform => C64::new(sinc(PI * x), 0.0),
            DensityModel::HalfwaveCosSq => {
                let v = sinc(PI * x) + 0.5 * (sinc(PI * (x - 1.0)) + sinc(PI * (x + 1.0)));
                C64::new(v, 0.0)
            }
            DensityModel::Gaussian => {
                // The density is even, so the kernel is real.
                let (lo, hi) = self.support();
                let panels = ((hi - lo) * dtau.abs() / PI).ceil() as usize + 8;
                let v = gauss_rule().integrate(lo, hi, panels, |w| self.eval(w) * (w * dtau).cos());
                C64::new(v, 0.0)
            }
        }
    }
}

fn gauss_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// `sin(y) / y`, continuous at zero.
pub fn sinc(y: f64) -> f64 {
    if y.abs() < 1e-5 {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// A finite spin ensemble: detunings `omega_j`, normalized couplings
/// `alpha_j = g_j / Omega`, the collective coupling `Omega` and the cavity
/// detuning `omega_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRealization {
    omegas: Vec<f64>,
    alphas: Vec<C64>,
    omega: f64,
    omega_c: f64,
}

impl EnsembleRealization {
    pub fn new(omegas: Vec<f64>, alphas: Vec<C64>, omega: f64, omega_c: f64) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::Argument("ensemble needs at least one spin".into()));
        }
        if omegas.len() != alphas.len() {
            return Err(Error::Dimension { expected: omegas.len(), found: alphas.len() });
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::Argument(format!("Omega must be finite and non-negative, got {omega}")));
        }
        if !omega_c.is_finite() {
            return Err(Error::Argument(format!("omega_c must be finite, got {omega_c}")));
        }
        if omegas.iter().any(|w| !w.is_finite()) || alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::Argument("non-finite spin parameters".into()));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("spin detunings must be strictly increasing".into()));
        }
        let mass: f64 = alphas.iter().map(|a| a.norm_sqr()).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("sum |alpha_j|^2 = {mass}, expected 1")));
        }
        Ok(Self { omegas, alphas, omega, omega_c })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    /// Collective coupling `Omega`.
    pub fn coupling(&self) -> f64 {
        self.omega
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// Empirical overlap `sum_j |alpha_j|^2 exp(-i omega_j dtau)`.
    pub fn empirical_overlap(&self, dtau: f64) -> C64 {
        self.omegas
            .iter()
            .zip(&self.alphas)
            .map(|(w, a)| a.norm_sqr() * C64::cis(-w * dtau))
            .sum()
    }
}

/// Discretize `density` into `n` equally weighted spins placed at the CDF
/// midpoints `Q((j - 1/2) / n)`.
pub fn sample_ensemble(
    density: &SpectralDensity,
    n: usize,
    omega: f64,
    omega_c: f64,
) -> Result<EnsembleRealization> {
    if n == 0 {
        return Err(Error::Argument("ensemble size N must be at least 1".into()));
    }
    let omegas = (0..n)
        .map(|j| density.quantile((j as f64 + 0.5) / n as f64))
        .collect::<Result<Vec<_>>>()?;
    let a = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    EnsembleRealization::new(omegas, vec![a; n], omega, omega_c)
}
