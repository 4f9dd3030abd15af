//! Exact finite-N propagation in the single-excitation subspace.
//!
//! Basis ordering: index 0 is the cavity photon `|c>`, index `j >= 1` is the
//! spin flip of spin `j - 1` in ensemble order.

mod arrowhead;
mod projector;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::EnsembleRealization;
use arrowhead::Arrowhead;

pub use projector::{project_bare, BareProjector};

/// Norm tolerance accepted by [`StateVector::new`].
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    /// Requires unit norm within [`NORM_TOL`].
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Argument("empty state vector".into()));
        }
        let norm = norm(&amps);
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::Argument(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps`.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n = norm(&amps);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Argument("cannot normalize a zero or non-finite state".into()));
        }
        for a in &mut amps {
            *a /= n;
        }
        Ok(Self { amps })
    }

    /// No cavity amplitude; spins normalized.
    pub fn from_spins(spins: &[C64]) -> Result<Self> {
        let mut amps = Vec::with_capacity(spins.len() + 1);
        amps.push(C64::new(0.0, 0.0));
        amps.extend_from_slice(spins);
        Self::normalized(amps)
    }

    pub fn cavity_only(n_spins: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); n_spins + 1];
        amps[0] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn cavity(&self) -> C64 {
        self.amps[0]
    }

    pub fn spins(&self) -> &[C64] {
        &self.amps[1..]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Multiply by a global phase.
    pub fn with_phase(&self, theta: f64) -> Self {
        let p = C64::cis(theta);
        Self { amps: self.amps.iter().map(|a| a * p).collect() }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Evolution under the uncoupled Hamiltonian.
    Free,
    /// Evolution including the cavity coupling.
    Full,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Free => "free",
            Mode::Full => "full",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(Mode::Free),
            "full" => Ok(Mode::Full),
            other => Err(Error::Config(format!("unknown mode '{other}', expected free or full"))),
        }
    }
}

/// Spectral data of the coupled Hamiltonian in the gauge where the couplings
/// are real: `H = P A P^dagger` with `P = diag(1, exp(i arg alpha_j))`.
#[derive(Debug)]
struct Eigen {
    /// Spins with non-zero coupling, in ensemble order.
    active: Vec<usize>,
    /// Spins with zero coupling; they are eigenvectors on their own.
    deflated: Vec<usize>,
    arrow: Arrowhead,
}

/// `H = H0 + V` restricted to one excitation: diagonal `(omega_c, omega_j)`,
/// `<j|H|c> = Omega alpha_j`, `<c|H|j> = Omega conj(alpha_j)`.
#[derive(Debug)]
pub struct SingleExcitationHamiltonian {
    ens: EnsembleRealization,
    gauge: Vec<C64>,
    eigen: OnceLock<Option<Eigen>>,
}

impl SingleExcitationHamiltonian {
    pub fn build(ens: EnsembleRealization) -> Result<Self> {
        let finite = ens.coupling().is_finite()
            && ens.omega_c().is_finite()
            && ens.omegas().iter().all(|w| w.is_finite())
            && ens.alphas().iter().all(|a| a.is_finite());
        if !finite {
            return Err(Error::Argument("non-finite Hamiltonian parameters".into()));
        }
        let gauge = ens
            .alphas()
            .iter()
            .map(|a| if a.norm() > 0.0 { a / a.norm() } else { C64::new(1.0, 0.0) })
            .collect();
        Ok(Self { ens, gauge, eigen: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.ens.len() + 1
    }

    pub fn ensemble(&self) -> &EnsembleRealization {
        &self.ens
    }

    pub fn is_decoupled(&self) -> bool {
        self.ens.coupling() == 0.0
    }

    /// Dense matrix, row-major. For tests and small ensembles.
    pub fn dense(&self) -> Vec<Vec<C64>> {
        let n = self.dim();
        let om = self.ens.coupling();
        let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
        m[0][0] = C64::new(self.ens.omega_c(), 0.0);
        for (j, (w, a)) in self.ens.omegas().iter().zip(self.ens.alphas()).enumerate() {
            m[j + 1][j + 1] = C64::new(*w, 0.0);
            m[j + 1][0] = om * a;
            m[0][j + 1] = om * a.conj();
        }
        m
    }

    /// `H x` in O(N).
    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: x.len() });
        }
        let om = self.ens.coupling();
        let mut out = Vec::with_capacity(x.len());
        let mut c = self.ens.omega_c() * x[0];
        for (j, a) in self.ens.alphas().iter().enumerate() {
            c += om * a.conj() * x[j + 1];
        }
        out.push(c);
        for (j, (w, a)) in self.ens.omegas().iter().zip(self.ens.alphas()).enumerate() {
            out.push(w * x[j + 1] + om * a * x[0]);
        }
        Ok(out)
    }

    /// `<psi|H|psi>`.
    pub fn energy(&self, state: &StateVector) -> Result<f64> {
        let hx = self.apply(state.amplitudes())?;
        Ok(state.amplitudes().iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum())
    }

    fn eigen(&self) -> Option<&Eigen> {
        self.eigen
            .get_or_init(|| {
                if self.is_decoupled() {
                    return None;
                }
                let om = self.ens.coupling();
                let (mut active, mut deflated) = (Vec::new(), Vec::new());
                for (j, a) in self.ens.alphas().iter().enumerate() {
                    if a.norm() > 0.0 {
                        active.push(j);
                    } else {
                        deflated.push(j);
                    }
                }
                let d: Vec<f64> = active.iter().map(|&j| self.ens.omegas()[j]).collect();
                let z: Vec<f64> = active.iter().map(|&j| om * self.ens.alphas()[j].norm()).collect();
                let arrow = Arrowhead::solve(self.ens.omega_c(), &d, &z);
                Some(Eigen { active, deflated, arrow })
            })
            .as_ref()
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self.eigen() {
            None => std::iter::once(self.ens.omega_c()).chain(self.ens.omegas().iter().copied()).collect(),
            Some(e) => e
                .arrow
                .roots
                .iter()
                .map(|r| r.lambda)
                .chain(e.deflated.iter().map(|&j| self.ens.omegas()[j]))
                .collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Force the eigendecomposition now rather than at first use.
    pub fn prepare(&self) {
        let _ = self.eigen();
    }

    pub fn propagate(&self, state: &StateVector, dt: f64, mode: Mode) -> Result<StateVector> {
        Ok(Propagator::new(self, state, mode)?.at(dt))
    }

    /// Reference propagation by repeated Taylor steps of length at most `step`.
    pub fn propagate_taylor(&self, state: &StateVector, dt: f64, step: f64) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: state.dim() });
        }
        if !(step > 0.0 && step.is_finite() && dt.is_finite()) {
            return Err(Error::Argument(format!("invalid Taylor step {step} for dt = {dt}")));
        }
        let n_steps = (dt.abs() / step).ceil().max(1.0) as usize;
        let h = dt / n_steps as f64;
        let mut x = state.amplitudes().to_vec();
        for _ in 0..n_steps {
            // exp(-i H h) x = sum_k (-i h H)^k x / k!
            let mut term = x.clone();
            let mut acc = x.clone();
            for k in 1..60 {
                let hx = self.apply(&term)?;
                let f = C64::new(0.0, -h / k as f64);
                for (t, v) in term.iter_mut().zip(hx) {
                    *t = f * v;
                }
                let mut size = 0.0;
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                    size += t.norm_sqr();
                }
                if size < 1e-36 {
                    break;
                }
            }
            x = acc;
        }
        Ok(StateVector { amps: x })
    }
}

/// A state expanded in the eigenbasis once, then evaluated at any time.
/// Shares the Hamiltonian read-only, so many propagators may run concurrently.
pub struct Propagator<'h> {
    h: &'h SingleExcitationHamiltonian,
    mode: Mode,
    initial: Vec<C64>,
    /// Coefficients on the non-deflated eigenvectors (full mode only).
    coeffs: Vec<C64>,
}

impl<'h> Propagator<'h> {
    pub fn new(h: &'h SingleExcitationHamiltonian, state: &StateVector, mode: Mode) -> Result<Self> {
        if state.dim() != h.dim() {
            return Err(Error::Dimension { expected: h.dim(), found: state.dim() });
        }
        let initial = state.amplitudes().to_vec();
        let mut coeffs = Vec::new();
        if mode == Mode::Full {
            if let Some(e) = h.eigen() {
                let phi = gauge_in(h, e, &initial);
                let m = e.active.len();
                let mut inv = vec![0.0; m];
                coeffs.reserve(m + 1);
                for (j, r) in e.arrow.roots.iter().enumerate() {
                    e.arrow.inverse_gaps(j, &mut inv);
                    let mut s = phi[0];
                    for i in 0..m {
                        s += phi[i + 1] * (e.arrow.zhat[i] * inv[i]);
                    }
                    coeffs.push(s * r.inv_norm);
                }
            }
        }
        Ok(Self { h, mode, initial, coeffs })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// State after time `t`.
    pub fn at(&self, t: f64) -> StateVector {
        let ens = &self.h.ens;
        let eigen = if self.mode == Mode::Full { self.h.eigen() } else { None };
        let Some(e) = eigen else {
            let mut amps = Vec::with_capacity(self.initial.len());
            amps.push(self.initial[0] * C64::cis(-ens.omega_c() * t));
            for (x, w) in self.initial[1..].iter().zip(ens.omegas()) {
                amps.push(x * C64::cis(-w * t));
            }
            return StateVector { amps };
        };
        let m = e.active.len();
        let mut out = vec![C64::new(0.0, 0.0); m + 1];
        let mut inv = vec![0.0; m];
        for (j, r) in e.arrow.roots.iter().enumerate() {
            let c = self.coeffs[j] * C64::cis(-r.lambda * t) * r.inv_norm;
            out[0] += c;
            e.arrow.inverse_gaps(j, &mut inv);
            for i in 0..m {
                out[i + 1] += c * (e.arrow.zhat[i] * inv[i]);
            }
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.initial.len()];
        amps[0] = out[0];
        for (i, &j) in e.active.iter().enumerate() {
            amps[j + 1] = out[i + 1] * self.h.gauge[j];
        }
        for &j in &e.deflated {
            amps[j + 1] = self.initial[j + 1] * C64::cis(-ens.omegas()[j] * t);
        }
        StateVector { amps }
    }
}

/// Components of `x` in the real gauge, restricted to cavity and active spins.
fn gauge_in(h: &SingleExcitationHamiltonian, e: &Eigen, x: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(e.active.len() + 1);
    out.push(x[0]);
    for &j in &e.active {
        out.push(x[j + 1] * h.gauge[j].conj());
    }
    out
}

/// Sampled evolution; optional bare-time projections per sample.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub taus: Vec<f64>,
    /// `projections[i][k] = <taus[k]|states[i]>` when requested.
    pub projections: Option<Vec<Vec<C64>>>,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Evolve `initial`, given at time `t0`, to each of `times` (strictly increasing).
pub fn evolve(
    h: &SingleExcitationHamiltonian,
    initial: &StateVector,
    t0: f64,
    times: &[f64],
    mode: Mode,
    projector: Option<&BareProjector>,
) -> Result<Trajectory> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("trajectory times must be strictly increasing".into()));
    }
    let prop = Propagator::new(h, initial, mode)?;
    let states: Vec<StateVector> = times.iter().map(|&t| prop.at(t - t0)).collect();
    let projections = match projector {
        Some(p) => Some(states.iter().map(|s| p.project(s)).collect::<Result<Vec<_>>>()?),
        None => None,
    };
    let taus = projector.map(|p| p.taus().to_vec()).unwrap_or_default();
    Ok(Trajectory { times: times.to_vec(), states, taus, projections })
}
