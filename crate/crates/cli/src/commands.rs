use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spinwave_core::dynamics::{BareProjector, Mode, Propagator, SingleExcitationHamiltonian, StateVector, Trajectory};
use spinwave_core::export::{write_phase_comparison_csv, write_response_csv, write_scan_csv, write_trajectory_csv};
use spinwave_core::response::{phase_slope, phase_strong_slope, wrap_pi, ResponseSpectrum};
use spinwave_core::shear::{shear_fidelity, AnalyticEvolution, OracleEvolution, ShearResult};
use spinwave_core::spectral::{sample_ensemble, SpectralDensity};
use spinwave_core::states::{dressed_spectrum, wavepacket_coeffs, WavePacket};
use spinwave_core::{Checked, Result, C64};

use crate::config::RunConfig;
use crate::output::{run_id, write_json, write_table, Sidecar};
use crate::plot;

/// Fraction of the density support treated as its interior.
pub const INTERIOR: f64 = 0.8;

/// What a command wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_id: String,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub mode: Mode,
    pub plot: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { mode: Mode::Full, plot: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub omega0: f64,
    pub halfwidth: f64,
    pub phi0: f64,
    pub dt: f64,
}

fn linearization(cfg: &RunConfig, resp: &ResponseSpectrum, wp: &WavePacket) -> Result<Linearization> {
    let omega0 = wp.carrier();
    let halfwidth = cfg.linearization_halfwidth(wp);
    let (phi0, dt) = phase_slope(&resp.phi, &resp.grid, omega0, halfwidth)?;
    Ok(Linearization { omega0, halfwidth, phi0: wrap_pi(phi0), dt })
}

fn strong_slope(d: &SpectralDensity, omega: f64) -> Option<f64> {
    phase_strong_slope(d, omega, 1e-4 / d.dephasing_time()).ok().filter(|v| v.is_finite())
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResponseSummary {
    pub strong_coupling_ratio: Option<f64>,
    /// Largest `|phi - phi_inf|` (mod 2 pi) over the interior support.
    pub phase_gap: Option<f64>,
    pub linearization: Linearization,
    pub strong_slope: Option<f64>,
    pub max_cavity_amplitude: f64,
}

pub fn response(cfg: &RunConfig) -> Result<(Outcome, ResponseSummary)> {
    cfg.validate()?;
    let id = run_id("response", cfg);
    let dir = &cfg.out_dir;
    let d = cfg.density()?;
    let resp = ResponseSpectrum::compute(&d, &cfg.grid()?, cfg.omega, cfg.omega_c)?;
    let dressed = dressed_spectrum(&resp)?;
    let wp = cfg.wave_packet()?;

    let mut files = Vec::new();
    let mut buf = Vec::new();
    write_response_csv(&mut buf, &resp)?;
    files.extend(write_table(dir, &format!("response_{id}"), &buf, cfg.formats)?);
    buf.clear();
    write_phase_comparison_csv(&mut buf, &resp)?;
    files.extend(write_table(dir, &format!("phase_{id}"), &buf, cfg.formats)?);

    let summary = ResponseSummary {
        strong_coupling_ratio: finite(resp.strong_coupling_ratio()),
        phase_gap: finite(resp.strong_phase_gap(&d, INTERIOR)),
        linearization: linearization(cfg, &resp, &wp)?,
        strong_slope: strong_slope(&d, wp.carrier()),
        max_cavity_amplitude: dressed.cavity_amp.iter().map(|c| c.norm()).fold(0.0, f64::max),
    };
    let side = Sidecar::new("response", &id, cfg, &summary).write(dir, &files, Vec::new())?;
    files.push(side);
    Ok((Outcome { run_id: id, files, warnings: Vec::new() }, summary))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub mode: String,
    pub times: usize,
    pub taus: usize,
    pub max_norm_drift: f64,
    /// `max_t |<0|Psi(t)>|^2`.
    pub max_superradiant_overlap: f64,
    /// `min_t (|<c|Psi(t)>|^2 + |<0|Psi(t)>|^2)`.
    pub min_frozen_population: f64,
}

pub fn evolve(cfg: &RunConfig, opts: &RunOptions) -> Result<(Outcome, EvolveSummary)> {
    cfg.validate()?;
    let id = run_id(&format!("evolve:{}", opts.mode), cfg);
    let dir = &cfg.out_dir;
    let d = cfg.density()?;
    let h = SingleExcitationHamiltonian::build(sample_ensemble(&d, cfg.n_spins, cfg.omega, cfg.omega_c)?)?;
    let wp = cfg.wave_packet()?;
    let Checked { value: init, warnings } = wavepacket_coeffs(h.ensemble(), &wp, cfg.t_past, cfg.t_threshold)?;
    let warnings: Vec<String> = warnings.iter().map(|w| w.to_string()).collect();

    let prop = Propagator::new(&h, &init, opts.mode)?;
    let times = cfg.times();
    let taus = cfg.taus();
    let projector = BareProjector::new(h.ensemble(), &taus);
    let origin = BareProjector::new(h.ensemble(), &[0.0]);
    let rows: Vec<(StateVector, Vec<C64>, C64)> = times
        .par_iter()
        .map(|&t| {
            let s = prop.at(t - cfg.t_past);
            let p = projector.project(&s)?;
            let z = origin.project(&s)?[0];
            Ok((s, p, z))
        })
        .collect::<Result<_>>()?;

    let mut summary = EvolveSummary {
        mode: opts.mode.to_string(),
        times: times.len(),
        taus: taus.len(),
        max_norm_drift: 0.0,
        max_superradiant_overlap: 0.0,
        min_frozen_population: f64::INFINITY,
    };
    let mut states = Vec::with_capacity(rows.len());
    let mut projections = Vec::with_capacity(rows.len());
    for (s, p, z) in rows {
        summary.max_superradiant_overlap = summary.max_superradiant_overlap.max(z.norm_sqr());
        summary.min_frozen_population = summary.min_frozen_population.min(z.norm_sqr() + s.cavity().norm_sqr());
        states.push(s);
        projections.push(p);
    }
    let traj = Trajectory { times, states, taus, projections: Some(projections) };
    summary.max_norm_drift = traj.max_norm_drift();

    let mut files = Vec::new();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &traj)?;
    files.extend(write_table(dir, &format!("traj_{id}"), &buf, cfg.formats)?);
    if opts.plot {
        let p = dir.join(format!("traj_{id}.pgm"));
        let rows: Vec<Vec<f64>> = traj.projections.iter().flatten().map(|r| r.iter().map(|c| c.norm_sqr()).collect()).collect();
        crate::output::write_atomic(&p, &plot::heat_map_pgm(&rows))?;
        files.push(p);
    }
    let side = Sidecar::new("evolve", &id, cfg, &summary).write(dir, &files, warnings.clone())?;
    files.push(side);
    Ok((Outcome { run_id: id, files, warnings }, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    #[serde(rename = "F")]
    pub f: f64,
    pub dt_star: f64,
    pub phi0: f64,
    pub t_asym: f64,
    pub window: f64,
    pub method: String,
    pub normalization: String,
}

impl From<&ShearResult> for Fidelity {
    fn from(r: &ShearResult) -> Self {
        Self {
            f: r.f,
            dt_star: r.dt_star,
            phi0: r.phi0,
            t_asym: r.t_asym,
            window: r.window,
            method: r.method.to_string(),
            normalization: r.normalization.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    #[serde(rename = "F")]
    pub f: f64,
    pub dt_star: f64,
    pub phi0: f64,
}

/// Contents of `shear_<id>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearReport {
    pub run_id: String,
    pub analytic: Fidelity,
    pub oracle: Fidelity,
    /// Analytic path with `phi` replaced by the strong-coupling phase.
    pub strong_limit: Fidelity,
    /// Oracle minus analytic; the phase difference is wrapped.
    pub discrepancy: Discrepancy,
    pub linearization: Linearization,
    pub strong_slope: Option<f64>,
    pub phase_gap: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn shear(cfg: &RunConfig) -> Result<(Outcome, ShearReport)> {
    cfg.validate()?;
    let id = run_id("shear", cfg);
    let dir = &cfg.out_dir;
    let d = cfg.density()?;
    let grid = cfg.grid()?;
    let resp = ResponseSpectrum::compute(&d, &grid, cfg.omega, cfg.omega_c)?;
    let wp = cfg.wave_packet()?;
    let opts = cfg.shear_options();

    let analytic_paths = || -> Result<_> {
        let an = shear_fidelity(&AnalyticEvolution::new(&d, &resp, &wp)?, &opts)?;
        let strong = AnalyticEvolution::with_phase(&d, &grid, &resp.strong_phase(), &wp)?;
        Ok((an, shear_fidelity(&strong, &opts)?))
    };
    let oracle_path = || -> Result<_> {
        let h = SingleExcitationHamiltonian::build(sample_ensemble(&d, cfg.n_spins, cfg.omega, cfg.omega_c)?)?;
        let ev = OracleEvolution::new(&h, &wp, cfg.t_past, cfg.t_threshold)?;
        let mut res = shear_fidelity(&ev.value, &opts)?;
        res.warnings.splice(0..0, ev.warnings);
        Ok(res)
    };
    let (analytic, oracle) = rayon::join(analytic_paths, oracle_path);
    let (analytic, strong) = analytic?;
    let oracle = oracle?;

    let mut warnings = Vec::new();
    for (tag, w) in [("analytic", &analytic.warnings), ("oracle", &oracle.warnings), ("strong_limit", &strong.warnings)] {
        warnings.extend(w.iter().map(|w| format!("{tag}: {w}")));
    }
    let (a, o) = (&analytic.value, &oracle.value);
    let report = ShearReport {
        run_id: id.clone(),
        analytic: a.into(),
        oracle: o.into(),
        strong_limit: (&strong.value).into(),
        discrepancy: Discrepancy { f: o.f - a.f, dt_star: o.dt_star - a.dt_star, phi0: wrap_pi(o.phi0 - a.phi0) },
        linearization: linearization(cfg, &resp, &wp)?,
        strong_slope: strong_slope(&d, wp.carrier()),
        phase_gap: finite(resp.strong_phase_gap(&d, INTERIOR)),
        warnings: warnings.clone(),
    };

    let mut files = Vec::new();
    for r in [a, o] {
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &r.scan)?;
        files.extend(write_table(dir, &format!("scan_{}_{id}", r.method), &buf, cfg.formats)?);
    }
    let side = Sidecar::new("shear", &id, cfg, ()).write(dir, &files, warnings.clone())?;
    files.push(side);
    // written last: its presence marks a completed run
    let p = dir.join(format!("shear_{id}.json"));
    write_json(&p, &report)?;
    files.push(p);
    Ok((Outcome { run_id: id, files, warnings }, report))
}

/// Quick internal consistency checks; returns `(name, passed, detail)`.
pub fn selftest() -> Vec<(&'static str, bool, String)> {
    use spinwave_core::dynamics::project_bare;
    use spinwave_core::response::FrequencyGrid;
    use spinwave_core::spectral::DensityModel;
    use spinwave_core::states::bare_time_coeffs;

    let mut out = Vec::new();
    let mut check = |name: &'static str, f: &dyn Fn() -> Result<(bool, String)>| {
        let (ok, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
        out.push((name, ok, detail));
    };
    let density = |m| SpectralDensity::new(m, 1.0);

    check("overlap kernels", &|| {
        let u = density(DensityModel::Uniform)?.overlap_kernel(0.5);
        let c = density(DensityModel::HalfwaveCosSq)?.overlap_kernel(1.0);
        let err = (u - 2.0 / PI).norm().max((c - 0.5).norm());
        Ok((err < 1e-12, format!("max error {err:.1e}")))
    });
    check("uniform level shift", &|| {
        let d = density(DensityModel::Uniform)?;
        let g = FrequencyGrid::default_for(1.0)?;
        let r = ResponseSpectrum::compute(&d, &g, PI, 0.0)?;
        let k = g.nearest(PI / 2.0).unwrap_or(0);
        let err = (r.delta_c[k] - 3f64.ln() / (2.0 * PI)).abs();
        Ok((err < 1e-4, format!("error {err:.1e}")))
    });
    check("response identities", &|| {
        let d = density(DensityModel::HalfwaveCosSq)?;
        let r = ResponseSpectrum::compute(&d, &FrequencyGrid::default_for(1.0)?, 10.0 * PI, 0.0)?;
        dressed_spectrum(&r)?;
        let err = r.phi.iter().zip(&r.g_plus).map(|(p, g)| wrap_pi(p + 2.0 * g.arg()).abs()).fold(0.0, f64::max);
        let conj = r.g_minus.iter().zip(&r.g_plus).all(|(m, p)| *m == p.conj());
        Ok((err < 1e-12 && conj, format!("phase error {err:.1e}")))
    });
    check("free translation", &|| {
        let e = sample_ensemble(&density(DensityModel::Uniform)?, 256, 10.0 * PI, 0.0)?;
        let h = SingleExcitationHamiltonian::build(e.clone())?;
        let s = h.propagate(&StateVector::from_spins(&bare_time_coeffs(&e, -4.0))?, 12.0, Mode::Free)?;
        let err = (project_bare(&e, &s, &[8.0])?[0].norm() - 1.0).abs();
        Ok((err < 1e-10, format!("error {err:.1e}")))
    });
    check("decoupled shear", &|| {
        let d = density(DensityModel::HalfwaveCosSq)?;
        let r = ResponseSpectrum::compute(&d, &FrequencyGrid::default_for(1.0)?, 0.0, 0.0)?;
        let res = shear_fidelity(&AnalyticEvolution::new(&d, &r, &WavePacket::Delta)?, &Default::default())?.value;
        let err = (res.f - 1.0).abs().max(res.dt_star.abs()).max(res.phi0.abs());
        Ok((err < 1e-9, format!("error {err:.1e}")))
    });
    check("eigen vs short steps", &|| {
        let e = sample_ensemble(&density(DensityModel::HalfwaveCosSq)?, 128, 10.0 * PI, 0.0)?;
        let h = SingleExcitationHamiltonian::build(e)?;
        let s = StateVector::cavity_only(128);
        let a = h.propagate(&s, 2.0, Mode::Full)?;
        let b = h.propagate_taylor(&s, 2.0, 1.0 / 256.0)?;
        let err = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        Ok((err < 1e-9, format!("error {err:.1e}")))
    });
    out
}
