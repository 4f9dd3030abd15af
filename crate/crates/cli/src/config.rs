//! Run configuration.
//!
//! The file format is line oriented:
//!
//! ```text
//! # comment
//! density.model = halfwave_cos_sq
//! cavity.Omega  = 10*pi          # trailing comments are allowed
//! ```
//!
//! Each non-blank line is `key = value`. Keys are dotted names from [`KEYS`];
//! unknown keys are rejected and later lines override earlier ones. Numeric
//! values are arithmetic expressions over `+ - * / ^`, parentheses and the
//! constant `pi`. String values run to the end of the line or the first `#`.
//! All times and frequencies are absolute (the defaults assume `T = 1`).

use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use nom::branch::alt;
use nom::bytes::complete::tag;
use nom::character::complete::{char, multispace0};
use nom::combinator::value;
use nom::number::complete::double;
use nom::sequence::{delimited, preceded};
use nom::{IResult, Parser};
use spinwave_core::response::FrequencyGrid;
use spinwave_core::shear::ShearOptions;
use spinwave_core::spectral::{DensityModel, SpectralDensity, DEFAULT_SIGMA_TRUNC};
use spinwave_core::states::WavePacket;
use spinwave_core::{Error, Result};

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "density.model",
    "density.T",
    "density.sigma_trunc",
    "cavity.Omega",
    "cavity.omega_c",
    "grid.n",
    "grid.W",
    "ensemble.N",
    "dynamics.t_past",
    "dynamics.t_threshold",
    "dynamics.t_asym",
    "dynamics.tau_min",
    "dynamics.tau_max",
    "dynamics.tau_step",
    "dynamics.t_step",
    "shear.window",
    "shear.step",
    "shear.t_check",
    "shear.tol",
    "packet.kind",
    "packet.omega0",
    "packet.bandwidth",
    "packet.file",
    "output.dir",
    "output.formats",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Delta,
    Gaussian,
    BandLimited,
    Tabulated,
}

impl PacketKind {
    pub fn name(self) -> &'static str {
        match self {
            PacketKind::Delta => "delta",
            PacketKind::Gaussian => "gaussian",
            PacketKind::BandLimited => "band_limited",
            PacketKind::Tabulated => "tabulated",
        }
    }
}

impl FromStr for PacketKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "delta" => Ok(PacketKind::Delta),
            "gaussian" | "gaussian_envelope" => Ok(PacketKind::Gaussian),
            "band_limited" | "bandlimited" => Ok(PacketKind::BandLimited),
            "tabulated" => Ok(PacketKind::Tabulated),
            _ => Err(format!("unknown packet kind '{s}'")),
        }
    }
}

/// Table formats to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut f = Formats { csv: false, json: false };
        for part in s.split(',').map(str::trim) {
            match part.to_ascii_lowercase().as_str() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                _ => return Err(format!("unknown format '{part}'")),
            }
        }
        Ok(f)
    }
}

impl std::fmt::Display for Formats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.csv, self.json) {
            (true, true) => f.write_str("csv,json"),
            (false, true) => f.write_str("json"),
            _ => f.write_str("csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: DensityModel,
    pub dephasing_time: f64,
    pub sigma_trunc: f64,
    pub omega: f64,
    pub omega_c: f64,
    pub grid_n: usize,
    /// `None`: `8 pi / T`.
    pub grid_w: Option<f64>,
    pub n_spins: usize,
    /// Time at which the initial packet is centered.
    pub t_past: f64,
    /// Packets reaching above this bare time are not in the asymptotic past.
    pub t_threshold: f64,
    pub t_asym: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    pub t_step: f64,
    pub window: f64,
    pub scan_step: f64,
    pub t_check: Option<f64>,
    pub tol: f64,
    pub packet: PacketKind,
    pub omega0: f64,
    pub bandwidth: f64,
    pub packet_file: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: DensityModel::HalfwaveCosSq,
            dephasing_time: 1.0,
            sigma_trunc: DEFAULT_SIGMA_TRUNC,
            omega: 10.0 * PI,
            omega_c: 0.0,
            grid_n: 8192,
            grid_w: None,
            n_spins: 4096,
            t_past: -4.0,
            t_threshold: -4.0,
            t_asym: 8.0,
            tau_min: -8.0,
            tau_max: 8.0,
            tau_step: 1.0 / 64.0,
            t_step: 1.0 / 8.0,
            window: 4.0,
            scan_step: 1.0 / 64.0,
            t_check: Some(12.0),
            tol: 1e-3,
            packet: PacketKind::Delta,
            omega0: 0.0,
            bandwidth: PI / 8.0,
            packet_file: None,
            out_dir: PathBuf::from("out"),
            formats: Formats { csv: true, json: false },
        }
    }
}

/// One `key = value` line of a configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Split a document into entries without interpreting keys.
pub fn parse_document(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let (key, val) = line.split_once('=').ok_or_else(|| parse_err(format!("expected 'key = value', got '{line}'")))?;
        let (key, val) = (key.trim(), val.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            return Err(parse_err(format!("invalid key '{key}'")));
        }
        if val.is_empty() {
            return Err(parse_err(format!("{key}: missing value")));
        }
        out.push(Entry { line: i + 1, key: key.to_string(), value: val.to_string() });
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(&parse_document(text)?)
    }

    pub fn from_entries(entries: &[Entry]) -> Result<Self> {
        let mut cfg = Self::default();
        for e in entries {
            cfg.set(&e.key, &e.value).map_err(|message| Error::Parse { line: e.line, message })?;
        }
        Ok(cfg)
    }

    /// Apply a `key=value` override given on the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set {kv}: expected key=value")))?;
        self.set(k.trim(), v.trim()).map_err(|m| Error::Config(format!("--set {kv}: {m}")))
    }

    pub fn set(&mut self, key: &str, raw: &str) -> std::result::Result<(), String> {
        let num = || eval_number(raw).map_err(|m| format!("{key}: {m}"));
        let count = || {
            let v = num()?;
            if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
                return Err(format!("{key}: expected a non-negative integer, got {raw}"));
            }
            Ok(v as usize)
        };
        let opt_num = || if raw.eq_ignore_ascii_case("none") { Ok(None) } else { num().map(Some) };
        let path = || {
            if raw.contains(['#', '\n']) {
                Err(format!("{key}: paths may not contain '#'"))
            } else {
                Ok(PathBuf::from(raw))
            }
        };
        match key {
            "density.model" => self.model = raw.parse().map_err(|e: Error| format!("{key}: {e}"))?,
            "density.T" => self.dephasing_time = num()?,
            "density.sigma_trunc" => self.sigma_trunc = num()?,
            "cavity.Omega" => self.omega = num()?,
            "cavity.omega_c" => self.omega_c = num()?,
            "grid.n" => self.grid_n = count()?,
            "grid.W" => self.grid_w = opt_num()?,
            "ensemble.N" => self.n_spins = count()?,
            "dynamics.t_past" => self.t_past = num()?,
            "dynamics.t_threshold" => self.t_threshold = num()?,
            "dynamics.t_asym" => self.t_asym = num()?,
            "dynamics.tau_min" => self.tau_min = num()?,
            "dynamics.tau_max" => self.tau_max = num()?,
            "dynamics.tau_step" => self.tau_step = num()?,
            "dynamics.t_step" => self.t_step = num()?,
            "shear.window" => self.window = num()?,
            "shear.step" => self.scan_step = num()?,
            "shear.t_check" => self.t_check = opt_num()?,
            "shear.tol" => self.tol = num()?,
            "packet.kind" => self.packet = raw.parse().map_err(|e| format!("{key}: {e}"))?,
            "packet.omega0" => self.omega0 = num()?,
            "packet.bandwidth" => self.bandwidth = num()?,
            "packet.file" => self.packet_file = if raw.eq_ignore_ascii_case("none") { None } else { Some(path()?) },
            "output.dir" => self.out_dir = path()?,
            "output.formats" => self.formats = raw.parse().map_err(|e| format!("{key}: {e}"))?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Canonical value text for `key`; re-parsing it gives the same value.
    pub fn get(&self, key: &str) -> Option<String> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        Some(match key {
            "density.model" => self.model.name().to_string(),
            "density.T" => self.dephasing_time.to_string(),
            "density.sigma_trunc" => self.sigma_trunc.to_string(),
            "cavity.Omega" => self.omega.to_string(),
            "cavity.omega_c" => self.omega_c.to_string(),
            "grid.n" => self.grid_n.to_string(),
            "grid.W" => opt(self.grid_w),
            "ensemble.N" => self.n_spins.to_string(),
            "dynamics.t_past" => self.t_past.to_string(),
            "dynamics.t_threshold" => self.t_threshold.to_string(),
            "dynamics.t_asym" => self.t_asym.to_string(),
            "dynamics.tau_min" => self.tau_min.to_string(),
            "dynamics.tau_max" => self.tau_max.to_string(),
            "dynamics.tau_step" => self.tau_step.to_string(),
            "dynamics.t_step" => self.t_step.to_string(),
            "shear.window" => self.window.to_string(),
            "shear.step" => self.scan_step.to_string(),
            "shear.t_check" => opt(self.t_check),
            "shear.tol" => self.tol.to_string(),
            "packet.kind" => self.packet.name().to_string(),
            "packet.omega0" => self.omega0.to_string(),
            "packet.bandwidth" => self.bandwidth.to_string(),
            "packet.file" => self.packet_file.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string()),
            "output.dir" => self.out_dir.display().to_string(),
            "output.formats" => self.formats.to_string(),
            _ => return None,
        })
    }

    /// Full document, one `key = value` line per key.
    pub fn to_text(&self) -> String {
        self.lines(|_| true)
    }

    /// Everything except `output.*`; this is what identifies a run.
    pub fn physics_text(&self) -> String {
        self.lines(|k| !k.starts_with("output."))
    }

    fn lines(&self, keep: impl Fn(&str) -> bool) -> String {
        let mut s = String::new();
        for k in KEYS.iter().filter(|k| keep(k)) {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&self.get(k).unwrap_or_default());
            s.push('\n');
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        let finite = [
            ("density.T", self.dephasing_time),
            ("density.sigma_trunc", self.sigma_trunc),
            ("cavity.Omega", self.omega),
            ("cavity.omega_c", self.omega_c),
            ("dynamics.t_past", self.t_past),
            ("dynamics.t_threshold", self.t_threshold),
            ("dynamics.t_asym", self.t_asym),
            ("dynamics.tau_min", self.tau_min),
            ("dynamics.tau_max", self.tau_max),
            ("dynamics.tau_step", self.tau_step),
            ("dynamics.t_step", self.t_step),
            ("shear.window", self.window),
            ("shear.step", self.scan_step),
            ("shear.tol", self.tol),
            ("packet.omega0", self.omega0),
            ("packet.bandwidth", self.bandwidth),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return bad(k, "must be finite");
            }
        }
        if let Some(w) = self.grid_w {
            if !(w.is_finite() && w > 0.0) {
                return bad("grid.W", "must be positive");
            }
        }
        if let Some(t) = self.t_check {
            if !(t.is_finite() && t > self.t_asym) {
                return bad("shear.t_check", "must be later than dynamics.t_asym");
            }
        }
        if self.dephasing_time <= 0.0 {
            return bad("density.T", "must be positive");
        }
        if self.n_spins < 64 {
            return bad("ensemble.N", "must be at least 64");
        }
        if !self.grid_n.is_power_of_two() || self.grid_n < 1024 {
            return bad("grid.n", "must be a power of two, at least 1024");
        }
        if self.tau_step <= 0.0 || self.tau_max <= self.tau_min {
            return bad("dynamics.tau_step", "need tau_step > 0 and tau_max > tau_min");
        }
        if self.t_step <= 0.0 || self.t_asym <= self.t_past {
            return bad("dynamics.t_step", "need t_step > 0 and t_asym > t_past");
        }
        if self.window <= 0.0 || self.scan_step <= 0.0 || self.scan_step > self.window {
            return bad("shear.step", "need 0 < step <= window");
        }
        if self.tol <= 0.0 {
            return bad("shear.tol", "must be positive");
        }
        match self.packet {
            PacketKind::Gaussian | PacketKind::BandLimited if self.bandwidth <= 0.0 => {
                bad("packet.bandwidth", "must be positive")
            }
            PacketKind::Tabulated if self.packet_file.is_none() => bad("packet.file", "required for tabulated packets"),
            _ => Ok(()),
        }
    }

    pub fn density(&self) -> Result<SpectralDensity> {
        SpectralDensity::with_truncation(self.model, self.dephasing_time, self.sigma_trunc)
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.grid_n, self.grid_w.unwrap_or(8.0 * PI / self.dephasing_time))
    }

    pub fn wave_packet(&self) -> Result<WavePacket> {
        match self.packet {
            PacketKind::Delta => Ok(WavePacket::Delta),
            PacketKind::Gaussian => WavePacket::gaussian(self.omega0, self.bandwidth),
            PacketKind::BandLimited => WavePacket::band_limited(self.omega0, self.bandwidth),
            PacketKind::Tabulated => {
                let p = self.packet_file.as_ref().ok_or_else(|| Error::Config("packet.file: missing".into()))?;
                WavePacket::read_csv(p)
            }
        }
    }

    /// Half-width of the frequency window used to fit `phi0` and `dt`:
    /// half the packet bandwidth, or `pi / 4T` for packets without one.
    pub fn linearization_halfwidth(&self, wp: &WavePacket) -> f64 {
        wp.bandwidth().map_or(PI / (4.0 * self.dephasing_time), |b| b / 2.0)
    }

    pub fn taus(&self) -> Vec<f64> {
        steps(self.tau_min, self.tau_max, self.tau_step)
    }

    pub fn times(&self) -> Vec<f64> {
        steps(self.t_past, self.t_asym, self.t_step)
    }

    pub fn shear_options(&self) -> ShearOptions {
        ShearOptions {
            t_asym: self.t_asym,
            window: self.window,
            step: self.scan_step,
            t_check: self.t_check,
            convergence_tol: self.tol,
        }
    }
}

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

/// Evaluate a numeric expression such as `-pi/4` or `2^13`.
pub fn eval_number(s: &str) -> std::result::Result<f64, String> {
    match delimited(multispace0, expr, multispace0).parse(s) {
        Ok(("", v)) if v.is_finite() => Ok(v),
        Ok(("", _)) => Err(format!("'{s}' is not finite")),
        _ => Err(format!("cannot read '{s}' as a number")),
    }
}

fn expr(i: &str) -> IResult<&str, f64> {
    let (mut i, mut acc) = term(i)?;
    loop {
        let (r, _) = multispace0(i)?;
        let op = r.chars().next();
        if !matches!(op, Some('+' | '-')) {
            return Ok((i, acc));
        }
        let (r, v) = term(&r[1..])?;
        acc = if op == Some('+') { acc + v } else { acc - v };
        i = r;
    }
}

fn term(i: &str) -> IResult<&str, f64> {
    let (mut i, mut acc) = unary(i)?;
    loop {
        let (r, _) = multispace0(i)?;
        let op = r.chars().next();
        if !matches!(op, Some('*' | '/')) {
            return Ok((i, acc));
        }
        let (r, v) = unary(&r[1..])?;
        acc = if op == Some('*') { acc * v } else { acc / v };
        i = r;
    }
}

fn unary(i: &str) -> IResult<&str, f64> {
    let (i, _) = multispace0(i)?;
    match i.strip_prefix('-') {
        Some(r) => unary(r).map(|(r, v)| (r, -v)),
        None => power(i),
    }
}

// right associative: 2^3^2 = 2^9
fn power(i: &str) -> IResult<&str, f64> {
    let (i, base) = atom(i)?;
    let (r, _) = multispace0(i)?;
    match r.strip_prefix('^') {
        Some(r) => unary(r).map(|(r, e)| (r, base.powf(e))),
        None => Ok((i, base)),
    }
}

fn atom(i: &str) -> IResult<&str, f64> {
    let (i, _) = multispace0(i)?;
    alt((value(PI, tag("pi")), delimited(char('('), expr, preceded(multispace0, char(')'))), double)).parse(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions() {
        let cases = [
            ("10*pi", 10.0 * PI),
            ("-pi/4", -PI / 4.0),
            ("1/64", 1.0 / 64.0),
            ("2^13", 8192.0),
            ("-2^2", -4.0),
            ("2^-1", 0.5),
            ("(1 + 2) * 3", 9.0),
            ("1e-3", 1e-3),
            (" 3 - 1 - 1 ", 1.0),
            ("pi/3", PI / 3.0),
        ];
        for (s, v) in cases {
            assert_eq!(eval_number(s), Ok(v), "{s}");
        }
        for s in ["", "pi pi", "1/0", "(1", "abc", "nan"] {
            assert!(eval_number(s).is_err(), "{s}");
        }
    }

    #[test]
    fn defaults_reproduce_the_documented_setup() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.model, DensityModel::HalfwaveCosSq);
        assert_eq!(c.omega, 10.0 * PI);
        assert_eq!(c.t_past, -4.0);
        assert_eq!(c.taus().len(), 1025);
        assert_eq!(c.times().first(), Some(&-4.0));
        assert_eq!(c.times().last(), Some(&8.0));
        c.validate().unwrap();
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = RunConfig::parse("# header\ncavity.Omega = 3\n\nnope.key = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = RunConfig::parse("cavity.Omega = ten").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(RunConfig::parse("just text").is_err());
    }

    #[test]
    fn validation_names_the_key() {
        let mut c = RunConfig::default();
        c.n_spins = 10;
        assert!(c.validate().unwrap_err().to_string().contains("ensemble.N"));
        let mut c = RunConfig::default();
        c.grid_n = 3000;
        assert!(c.validate().unwrap_err().to_string().contains("grid.n"));
    }
}
