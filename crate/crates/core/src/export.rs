//! CSV writers. Floats use the shortest round-trip representation, so equal
//! inputs give byte-identical files.

use std::io::Write;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::response::{wrap_pi, ResponseSpectrum};
use crate::shear::ScanPoint;

pub const RESPONSE_HEADER: &str = "omega,gamma_c,delta_c,re_g_plus,im_g_plus,phi";
pub const PHASE_HEADER: &str = "omega,phi,phi_inf,diff_mod_2pi";
pub const TRAJECTORY_HEADER: &str = "t,tau,re_chi,im_chi,abs_chi_sq";
pub const SCAN_HEADER: &str = "dt,overlap";

pub fn write_response_csv<W: Write>(mut w: W, resp: &ResponseSpectrum) -> Result<()> {
    writeln!(w, "{RESPONSE_HEADER}")?;
    for k in 0..resp.grid.len() {
        let g = resp.g_plus[k];
        writeln!(
            w,
            "{},{},{},{},{},{}",
            resp.grid.omega(k),
            resp.gamma_c[k],
            resp.delta_c[k],
            g.re,
            g.im,
            resp.phi[k]
        )?;
    }
    Ok(())
}

/// `phi` next to the strong-coupling phase and their difference modulo `2 pi`.
pub fn write_phase_comparison_csv<W: Write>(mut w: W, resp: &ResponseSpectrum) -> Result<()> {
    writeln!(w, "{PHASE_HEADER}")?;
    let inf = resp.strong_phase();
    for k in 0..resp.grid.len() {
        writeln!(w, "{},{},{},{}", resp.grid.omega(k), resp.phi[k], inf[k], wrap_pi(resp.phi[k] - inf[k]))?;
    }
    Ok(())
}

/// Long format, one row per `(t, tau)`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let proj = traj
        .projections
        .as_ref()
        .ok_or_else(|| Error::Argument("trajectory has no bare-time projections".into()))?;
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (t, row) in traj.times.iter().zip(proj) {
        for (tau, chi) in traj.taus.iter().zip(row) {
            writeln!(w, "{},{},{},{},{}", t, tau, chi.re, chi.im, chi.norm_sqr())?;
        }
    }
    Ok(())
}

pub fn write_scan_csv<W: Write>(mut w: W, scan: &[ScanPoint]) -> Result<()> {
    writeln!(w, "{SCAN_HEADER}")?;
    for p in scan {
        writeln!(w, "{},{}", p.dt, p.overlap)?;
    }
    Ok(())
}
