//! Batch front-end behind the `tprabi` binary.
//!
//! A run is described by a TOML file (see `examples/configs/` and the README
//! for the schema). Results are computed in full before anything is written;
//! files are written to a temporary name and renamed into place, followed by
//! `manifest.json`.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{self, CircuitParams, FLUX_QUANTUM};
use crate::error::{Error, ErrorKind, Result};
use crate::liouville::LindbladConfig;
use crate::models::ModelSpec;
use crate::scattering::{self, DriveConfig, DriveTarget};
use crate::spectra::{self, LEVEL_TOL, STEADY_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    CouplingScan,
    TransmissionScan,
    BlockadeScan,
    Collapse,
    CircuitParams,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::CouplingScan => "coupling-scan",
            Command::TransmissionScan => "transmission-scan",
            Command::BlockadeScan => "blockade-scan",
            Command::Collapse => "collapse",
            Command::CircuitParams => "circuit-params",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub cutoff: Option<usize>,
    #[serde(default = "default_k")]
    pub k_levels: usize,
}

fn default_k() -> usize {
    10
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            cutoff: None,
            k_levels: default_k(),
        }
    }
}

/// Drive and dissipation. Frequencies in units of `omega_c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default = "default_target")]
    pub target: DriveTarget,
    pub omega_d: Option<f64>,
    pub intensity: Option<f64>,
    pub intensity_over_gamma: Option<f64>,
    pub gamma: f64,
    #[serde(default)]
    pub gamma_q: f64,
    #[serde(default)]
    pub gamma_phi: f64,
}

fn default_target() -> DriveTarget {
    DriveTarget::Cavity
}

/// A grid, either explicit or `points` evenly spaced values from `start` to `stop`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
}

impl ScanSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n >= 2 => {
                Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            }
            (None, Some(a), Some(_), Some(1)) => Ok(vec![a]),
            _ => Err(Error::validation(
                "scan",
                "give either `values` or all of `start`, `stop`, `points`",
            )),
        }
    }

    fn bracket(&self) -> Result<Option<(f64, f64)>> {
        match (&self.values, self.start, self.stop, self.points) {
            (None, None, None, None) => Ok(None),
            (None, Some(a), Some(b), None) => Ok(Some((a, b))),
            _ => Err(Error::validation("scan", "collapse takes only `start` and `stop`")),
        }
    }
}

/// Circuit parameters in lab units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub i_c_ua: f64,
    /// Either the capacitance or the target SQUID frequency.
    pub c_sq_ff: Option<f64>,
    pub squid_ghz: Option<f64>,
    pub mutual_ph: f64,
    pub i_p_na: f64,
    /// `Phi_DC / Phi_0`
    pub flux_dc: f64,
    /// Bias phase in radians, or derived from `i_b_ua` and `flux_sq`.
    pub phase_dc: Option<f64>,
    pub i_b_ua: Option<f64>,
    /// `Phi_SQ / Phi_0`, used with `i_b_ua`.
    pub flux_sq: Option<f64>,
}

impl CircuitSection {
    pub fn to_params(&self) -> Result<CircuitParams> {
        let i_c = self.i_c_ua * 1e-6;
        let phase_dc = match (self.phase_dc, self.i_b_ua) {
            (Some(_), Some(_)) => {
                return Err(Error::validation("circuit.phase_dc", "give phase_dc or i_b_ua, not both"));
            }
            (Some(p), None) => p,
            (None, Some(ib)) => circuit::phase_from_bias(ib * 1e-6, i_c, self.flux_sq.unwrap_or(0.0) * FLUX_QUANTUM)?,
            (None, None) => 0.0,
        };
        let mut p = CircuitParams {
            i_c,
            c_sq: 1.0,
            mutual: self.mutual_ph * 1e-12,
            i_p: self.i_p_na * 1e-9,
            flux_dc: self.flux_dc * FLUX_QUANTUM,
            phase_dc,
        };
        p.c_sq = match (self.c_sq_ff, self.squid_ghz) {
            (Some(c), None) => c * 1e-15,
            (None, Some(f)) => {
                if !(f > 0.0) {
                    return Err(Error::validation("circuit.squid_ghz", "must be > 0"));
                }
                circuit::capacitance_for_frequency(&p, 2.0 * std::f64::consts::PI * f * 1e9)?
            }
            _ => return Err(Error::validation("circuit.c_sq_ff", "give exactly one of c_sq_ff, squid_ghz")),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Optional; must match the subcommand when given.
    pub command: Option<Command>,
    pub model: Option<ModelSpec>,
    pub drive: Option<DriveSection>,
    #[serde(default)]
    pub numerics: Numerics,
    pub scan: Option<ScanSection>,
    pub circuit: Option<CircuitSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_owned)
                .unwrap_or_else(|| "config".into());
            Error::validation(field, e.to_string().trim().to_owned())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    fn model(&self) -> Result<ModelSpec> {
        let m = self.model.ok_or_else(|| Error::validation("model", "section required"))?;
        m.validate()?;
        Ok(m)
    }

    fn lindblad(&self) -> Result<(&DriveSection, LindbladConfig)> {
        let d = self.drive.as_ref().ok_or_else(|| Error::validation("drive", "section required"))?;
        let l = LindbladConfig::new(d.gamma, d.gamma_q, d.gamma_phi);
        l.validate()?;
        if d.gamma <= 0.0 {
            return Err(Error::validation("drive.gamma", format!("must be > 0, got {}", d.gamma)));
        }
        Ok((d, l))
    }

    fn scan(&self) -> Result<&ScanSection> {
        self.scan.as_ref().ok_or_else(|| Error::validation("scan", "section required"))
    }
}

/// Everything a finished run hands back, before and independent of writing.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub converged: bool,
    pub unconverged_points: usize,
    /// Command-specific summary copied into the manifest.
    pub summary: serde_json::Value,
}

fn to_json<T: Serialize>(x: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(x).map_err(|e| Error::Numerical(format!("serialization: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

fn scan_file(scan: &spectra::SpectrumScan, format: Format) -> Result<(String, Vec<u8>)> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            scan.write_csv(&mut buf)?;
            Ok(("spectrum.csv".into(), buf))
        }
        Format::Json => Ok(("spectrum.json".into(), to_json(scan)?)),
    }
}

fn points_file(name: &str, points: &[scattering::TransmissionPoint], format: Format) -> Result<(String, Vec<u8>)> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            scattering::write_points_csv(points, &mut buf)?;
            Ok((format!("{name}.csv"), buf))
        }
        Format::Json => Ok((format!("{name}.json"), to_json(&points)?)),
    }
}

/// Runs one command. Pure apart from the rayon pool it executes on.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<RunOutput> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(Error::validation(
                "command",
                format!("config is for `{}`, invoked as `{}`", c.name(), command.name()),
            ));
        }
    }
    let format = cfg.output.format;
    let k = cfg.numerics.k_levels;
    match command {
        Command::Spectrum | Command::CouplingScan => {
            let spec = cfg.model()?;
            let cutoff = cfg.numerics.cutoff.unwrap_or(60);
            let grid = if command == Command::Spectrum {
                if cfg.scan.is_some() {
                    return Err(Error::validation("scan", "not used by `spectrum`"));
                }
                vec![spec.coupling()]
            } else {
                cfg.scan()?.grid()?
            };
            let scan = spectra::coupling_scan(&spec, &grid, k, cutoff)?;
            let bad = scan.converged.iter().filter(|c| !**c).count();
            Ok(RunOutput {
                files: vec![scan_file(&scan, format)?],
                converged: bad == 0,
                unconverged_points: bad,
                summary: serde_json::json!({ "parameter": scan.parameter, "cutoff": cutoff, "points": grid.len() }),
            })
        }
        Command::TransmissionScan => {
            let spec = cfg.model()?;
            let (d, lindblad) = cfg.lindblad()?;
            if d.omega_d.is_some() {
                return Err(Error::validation("drive.omega_d", "set by the scan grid for `transmission-scan`"));
            }
            let intensity = match (d.intensity, d.intensity_over_gamma) {
                (Some(x), None) => x,
                (None, Some(x)) => x * d.gamma,
                _ => {
                    return Err(Error::validation(
                        "drive.intensity",
                        "give exactly one of intensity, intensity_over_gamma",
                    ))
                }
            };
            let grid = cfg.scan()?.grid()?;
            let drive = DriveConfig::new(d.target, grid[0].max(f64::MIN_POSITIVE), intensity, lindblad);
            let cutoff = cfg.numerics.cutoff.unwrap_or_else(|| scattering::default_cutoff(&drive));
            let points = scattering::transmission_scan(&spec, &drive, &grid, cutoff)?;
            let bad = points.iter().filter(|p| !p.converged).count();
            let peaks: Vec<_> = scattering::transmission_peaks(&points).into_iter().take(4).collect();
            Ok(RunOutput {
                files: vec![points_file("transmission", &points, format)?],
                converged: bad == 0,
                unconverged_points: bad,
                summary: serde_json::json!({ "cutoff": cutoff, "points": grid.len(), "peaks": peaks }),
            })
        }
        Command::BlockadeScan => {
            let spec = cfg.model()?;
            let (d, lindblad) = cfg.lindblad()?;
            if d.intensity.is_some() || d.intensity_over_gamma.is_some() {
                return Err(Error::validation(
                    "drive.intensity",
                    "set by the scan grid (units of gamma) for `blockade-scan`",
                ));
            }
            let omega_d = d.omega_d.unwrap_or_else(|| scattering::blockade_frequency(&spec));
            let grid: Vec<f64> = cfg.scan()?.grid()?.iter().map(|x| x * d.gamma).collect();
            let drive = DriveConfig::new(d.target, omega_d, grid[0], lindblad);
            let strongest = drive.with_intensity(grid.iter().cloned().fold(0.0, f64::max));
            let cutoff = cfg.numerics.cutoff.unwrap_or_else(|| scattering::default_cutoff(&strongest));
            let scan = scattering::blockade_scan(&spec, &drive, &grid, cutoff)?;
            let bad = scan.points.iter().filter(|p| !p.converged).count();
            Ok(RunOutput {
                files: vec![points_file("blockade", &scan.points, format)?],
                converged: bad == 0,
                unconverged_points: bad,
                summary: serde_json::json!({ "cutoff": cutoff, "omega_d": omega_d, "window": scan.window }),
            })
        }
        Command::Collapse => {
            let spec = cfg.model()?;
            let cutoff = cfg.numerics.cutoff.unwrap_or(spectra::COLLAPSE_CUTOFF);
            let bracket = match &cfg.scan {
                Some(s) => s.bracket()?,
                None => None,
            }
            .unwrap_or((0.02, 0.75));
            let est = spectra::detect_collapse(&spec, bracket, cutoff)?;
            Ok(RunOutput {
                files: vec![("collapse.json".into(), to_json(&est)?)],
                converged: true,
                unconverged_points: 0,
                summary: serde_json::json!({ "g_col": est.g_col }),
            })
        }
        Command::CircuitParams => {
            let c = cfg.circuit.as_ref().ok_or_else(|| Error::validation("circuit", "section required"))?;
            let report = circuit::circuit_report(&c.to_params()?)?;
            Ok(RunOutput {
                files: vec![("circuit.json".into(), to_json(&report)?)],
                converged: true,
                unconverged_points: 0,
                summary: serde_json::to_value(report).map_err(|e| Error::Numerical(e.to_string()))?,
            })
        }
    }
}

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    schema_version: u32,
    command: &'static str,
    config_sha256: String,
    workers: usize,
    seed: Option<u64>,
    level_tolerance: f64,
    steady_tolerance: f64,
    converged: bool,
    unconverged_points: usize,
    wall_time_s: f64,
    files: Vec<FileEntry>,
    summary: &'a serde_json::Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))
}

#[derive(Debug, Parser)]
#[command(name = "tprabi", version, about = "Two-photon quantum Rabi model simulations")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for scan points (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Reserved; no stochastic paths use it.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Outcome of [`run`]: the manifest path on success.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let start = Instant::now();
    let text = fs::read_to_string(&cli.config).map_err(|e| io_err(&cli.config, e))?;
    let cfg = RunConfig::parse(&text)?;
    let workers = match cli.workers {
        Some(0) => return Err(Error::validation("--workers", "must be >= 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let output = pool.install(|| execute(cli.command, &cfg))?;

    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    for (name, bytes) in &output.files {
        write_atomic(&dir, name, bytes)?;
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        command: cli.command.name(),
        config_sha256: sha256_hex(text.as_bytes()),
        workers,
        seed: cli.seed,
        level_tolerance: LEVEL_TOL,
        steady_tolerance: STEADY_TOL,
        converged: output.converged,
        unconverged_points: output.unconverged_points,
        wall_time_s: start.elapsed().as_secs_f64(),
        files: output
            .files
            .iter()
            .map(|(name, bytes)| FileEntry {
                name: name.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            })
            .collect(),
        summary: &output.summary,
    };
    write_atomic(&dir, "manifest.json", &to_json(&manifest)?)?;
    if cli.command == Command::CircuitParams {
        if let Some((_, bytes)) = output.files.first() {
            print!("{}", String::from_utf8_lossy(bytes));
        }
    }
    Ok(dir.join("manifest.json"))
}

pub fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

/// Structured error report written to stderr.
pub fn error_report(err: &Error) -> serde_json::Value {
    let kind = match err.kind() {
        ErrorKind::Validation => "validation",
        ErrorKind::Numerical => "numerical",
        ErrorKind::Io => "io",
    };
    let field = match err {
        Error::Validation { field, .. } => Some(field.clone()),
        _ => None,
    };
    serde_json::json!({ "error": { "kind": kind, "field": field, "message": err.to_string() } })
}

pub fn main_with(cli: Cli) -> ExitCode {
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_report(&e));
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
