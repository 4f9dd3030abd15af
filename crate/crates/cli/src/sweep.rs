//! Parameter sweeps over the shear command.
//!
//! A manifest is an ordinary configuration file plus axis lines
//!
//! ```text
//! sweep.axis.cavity.Omega = pi, 10*pi, 100*pi
//! ```
//!
//! Each cell of the product of all axes is a complete shear run written to
//! `<output.dir>/cells`. Cells are named by the content hash of their
//! configuration, so a rerun reuses every finished cell.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use spinwave_core::{Error, Result};

use crate::commands::{shear, ShearReport};
use crate::config::{parse_document, RunConfig};
use crate::output::{run_id, write_atomic};

const AXIS_PREFIX: &str = "sweep.axis.";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub base: RunConfig,
    /// `(config key, values)` in file order.
    pub axes: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub index: Vec<usize>,
    pub config: RunConfig,
}

impl Cell {
    pub fn label(&self) -> String {
        self.index.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_document(text)?;
        let (axis_lines, base_lines): (Vec<_>, Vec<_>) = entries.into_iter().partition(|e| e.key.starts_with(AXIS_PREFIX));
        let base = RunConfig::from_entries(&base_lines)?;
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for e in axis_lines {
            let err = |message: String| Error::Parse { line: e.line, message };
            let key = &e.key[AXIS_PREFIX.len()..];
            if key.starts_with("output.") {
                return Err(err(format!("{key}: output settings cannot be swept")));
            }
            if axes.iter().any(|(k, _)| k == key) {
                return Err(err(format!("{key}: axis given twice")));
            }
            let values: Vec<String> = e.value.split(',').map(|v| v.trim().to_string()).collect();
            let mut probe = base.clone();
            for v in &values {
                if v.is_empty() {
                    return Err(err(format!("{key}: empty axis value")));
                }
                probe.set(key, v).map_err(err)?;
            }
            axes.push((key.to_string(), values));
        }
        Ok(Self { base, axes })
    }

    /// Cells in row-major order of the axes.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = vec![Cell { index: Vec::new(), config: self.base.clone() }];
        for (key, values) in &self.axes {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for c in &cells {
                for (i, v) in values.iter().enumerate() {
                    let mut cfg = c.config.clone();
                    cfg.set(key, v).map_err(Error::Config)?;
                    let mut index = c.index.clone();
                    index.push(i);
                    next.push(Cell { index, config: cfg });
                }
            }
            cells = next;
        }
        for c in &mut cells {
            c.config.out_dir = self.base.out_dir.join("cells");
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub total: usize,
    pub computed: usize,
    pub reused: usize,
    /// `(cell label, error)`.
    pub failed: Vec<(String, String)>,
    pub summary: PathBuf,
}

enum CellOutcome {
    Reused(ShearReport),
    Computed(ShearReport),
    Failed(String),
}

fn finished(cfg: &RunConfig) -> Option<ShearReport> {
    let id = run_id("shear", cfg);
    let text = std::fs::read_to_string(cfg.out_dir.join(format!("shear_{id}.json"))).ok()?;
    serde_json::from_str::<ShearReport>(&text).ok().filter(|r| r.run_id == id)
}

pub fn run(manifest: &Manifest) -> Result<SweepReport> {
    manifest.base.validate()?;
    let cells = manifest.cells()?;
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|c| match finished(&c.config) {
            Some(r) => CellOutcome::Reused(r),
            None => match c.config.validate().and_then(|_| shear(&c.config)) {
                Ok((_, r)) => CellOutcome::Computed(r),
                Err(e) => CellOutcome::Failed(e.to_string()),
            },
        })
        .collect();

    let mut csv = String::from("cell");
    for (k, _) in &manifest.axes {
        csv.push(',');
        csv.push_str(k);
    }
    csv.push_str(
        ",run_id,F_analytic,dt_star_analytic,phi0_analytic,F_oracle,dt_star_oracle,phi0_oracle,\
         delta_F,phase_gap,fidelity_gap,status\n",
    );
    let mut report = SweepReport {
        total: cells.len(),
        computed: 0,
        reused: 0,
        failed: Vec::new(),
        summary: manifest.base.out_dir.join("summary.csv"),
    };
    for (c, o) in cells.iter().zip(&outcomes) {
        csv.push_str(&c.label());
        for (k, _) in &manifest.axes {
            csv.push(',');
            csv.push_str(&c.config.get(k).unwrap_or_default());
        }
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        match o {
            CellOutcome::Reused(r) | CellOutcome::Computed(r) => {
                let (a, q) = (&r.analytic, &r.oracle);
                let _ = writeln!(
                    csv,
                    ",{},{},{},{},{},{},{},{},{},{},ok",
                    r.run_id,
                    a.f,
                    a.dt_star,
                    a.phi0,
                    q.f,
                    q.dt_star,
                    q.phi0,
                    r.discrepancy.f,
                    opt(r.phase_gap),
                    (a.f - r.strong_limit.f).abs()
                );
                if matches!(o, CellOutcome::Reused(_)) {
                    report.reused += 1;
                } else {
                    report.computed += 1;
                }
            }
            CellOutcome::Failed(msg) => {
                let _ = writeln!(csv, ",{},,,,,,,,,,failed: {}", run_id("shear", &c.config), msg.replace([',', '\n'], ";"));
                report.failed.push((c.label(), msg.clone()));
            }
        }
    }
    write_atomic(&report.summary, csv.as_bytes())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_the_axis_product() {
        let m = Manifest::parse(
            "ensemble.N = 128\nsweep.axis.cavity.Omega = pi, 2*pi, 3*pi\nsweep.axis.density.model = uniform, gaussian\n",
        )
        .unwrap();
        let cells = m.cells().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[1].label(), "0-1");
        assert_eq!(cells[5].config.omega, 3.0 * std::f64::consts::PI);
        assert!(cells.iter().all(|c| c.config.n_spins == 128));
    }

    #[test]
    fn bad_axes_are_rejected() {
        assert!(Manifest::parse("sweep.axis.cavity.Omega = 1, x").is_err());
        assert!(Manifest::parse("sweep.axis.nope = 1").is_err());
        assert!(Manifest::parse("sweep.axis.output.dir = a, b").is_err());
        assert!(Manifest::parse("sweep.axis.cavity.Omega = 1\nsweep.axis.cavity.Omega = 2").is_err());
    }
}
