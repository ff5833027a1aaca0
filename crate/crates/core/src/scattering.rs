//! Coherently driven, damped cavity: transmission and output photon statistics.
//!
//! Drives are treated in a frame rotating with the drive, where the Hamiltonian
//! is time independent. With drive frequency `wd` and intensity `D`:
//!
//! | model | drive | frame generator | Hamiltonian |
//! |---|---|---|---|
//! | two-photon JC | cavity | `wd (n + sigma_z)` | `(wc - wd) n + (wq/2 - wd) sigma_z + g2 (sigma_+ a^2 + h.c.) + D/2 (a + a^†)` |
//! | two-photon JC | qubit | `wd/2 (n + sigma_z)` | `(wc - wd/2) n + (wq - wd) sigma_z/2 + g2 (sigma_+ a^2 + h.c.) + D/2 (sigma_+ + sigma_-)` |
//! | JC | either | `wd (n + sigma_z/2)` | `(wc - wd) n + (wq - wd) sigma_z/2 + g (sigma_+ a + h.c.) + D/2 (a + a^† or sigma_+ + sigma_-)` |
//!
//! The amplitude `D/2` makes an empty resonant cavity hold `(D/gamma)^2`
//! photons. With input flux `n_in = D^2/gamma` and output flux
//! `n_out = gamma <a^† a>`, the transmission is `T = gamma^2 <a^† a> / D^2`, so
//! an empty cavity transmits `T = 1` on resonance. Qubit driving uses the same
//! normalization. Correlations are those of the field leaking through the
//! output port, which equal the intracavity ones.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_algebra::{embed, factor, HilbertSpace, OperatorMatrix, Pauli, C64};
use crate::liouville::{build_liouvillian, expectation, steady_state, DensityMatrix, LindbladConfig};
use crate::models::{ModelSpec, Variant};
use crate::spectra::{csv_err, fmt_f64, reference_cutoff, STEADY_TOL};

/// Largest coupling (in units of `omega_c`) for which the rotating frame is used.
pub const MAX_SC_COUPLING: f64 = 0.05;
/// Below this photon number correlations are reported as absent.
pub const MIN_PHOTONS: f64 = 1e-14;
/// Weak-drive default cutoff.
pub const WEAK_DRIVE_CUTOFF: usize = 20;
/// Strong-drive default cutoff.
pub const STRONG_DRIVE_CUTOFF: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveTarget {
    Cavity,
    Qubit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub target: DriveTarget,
    pub omega_d: f64,
    /// `D`, in the same units as the frequencies.
    pub intensity: f64,
    pub lindblad: LindbladConfig,
}

impl DriveConfig {
    pub fn new(target: DriveTarget, omega_d: f64, intensity: f64, lindblad: LindbladConfig) -> Self {
        Self {
            target,
            omega_d,
            intensity,
            lindblad,
        }
    }

    pub fn with_omega_d(mut self, omega_d: f64) -> Self {
        self.omega_d = omega_d;
        self
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = intensity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_d.is_finite() && self.omega_d > 0.0) {
            return Err(Error::validation("drive.omega_d", format!("must be > 0, got {}", self.omega_d)));
        }
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(Error::validation(
                "drive.intensity",
                format!("must be >= 0, got {}", self.intensity),
            ));
        }
        self.lindblad.validate()?;
        if self.lindblad.gamma <= 0.0 {
            return Err(Error::validation("drive.gamma", "must be > 0 to define transmission"));
        }
        Ok(())
    }
}

/// Default cutoff: [`WEAK_DRIVE_CUTOFF`] for `D <= gamma`, else [`STRONG_DRIVE_CUTOFF`].
pub fn default_cutoff(drive: &DriveConfig) -> usize {
    if drive.intensity <= drive.lindblad.gamma {
        WEAK_DRIVE_CUTOFF
    } else {
        STRONG_DRIVE_CUTOFF
    }
}

fn check_model(spec: &ModelSpec) -> Result<()> {
    spec.validate()?;
    if !matches!(spec.variant, Variant::Jc | Variant::TwoPhotonJc) {
        return Err(Error::UnsupportedVariant(spec.variant.to_string()));
    }
    let (field, value) = if spec.variant == Variant::Jc {
        ("model.g", spec.g)
    } else {
        ("model.g2", spec.g2)
    };
    if value.abs() > MAX_SC_COUPLING * spec.omega_c {
        return Err(Error::validation(
            field,
            format!("rotating-frame drive needs |coupling| <= {MAX_SC_COUPLING} omega_c, got {value}"),
        ));
    }
    Ok(())
}

/// Time-independent Hamiltonian in the frame co-rotating with the drive.
pub fn rotating_frame_hamiltonian(spec: &ModelSpec, drive: &DriveConfig, space: HilbertSpace) -> Result<OperatorMatrix> {
    check_model(spec)?;
    drive.validate()?;
    if space.n_qubits() != 1 || space.fock_cutoff() < 2 {
        return Err(Error::Configuration(format!(
            "driven models need one qubit and cutoff >= 2, got {space:?}"
        )));
    }
    let n_max = space.fock_cutoff();
    let (wc, wq, wd) = (spec.omega_c, spec.omega_q(), drive.omega_d);
    let two_photon = spec.variant == Variant::TwoPhotonJc;
    let (boson_det, qubit_det) = match (two_photon, drive.target) {
        (true, DriveTarget::Cavity) => (wc - wd, wq - 2.0 * wd),
        (true, DriveTarget::Qubit) => (wc - wd / 2.0, wq - wd),
        (false, _) => (wc - wd, wq - wd),
    };
    let scale = |m: &faer::Mat<C64>, s: f64| faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s);
    let id2 = factor::identity(2);
    let idb = factor::identity(space.boson_dim());
    let a = factor::annihilation(n_max);
    let ad = factor::creation(n_max);
    let sp = factor::pauli(Pauli::Plus);
    let sm = factor::pauli(Pauli::Minus);
    let one = |q: faer::Mat<C64>, b: faer::Mat<C64>| embed(space, &[Some(q)], b);

    let mut h = one(id2.clone(), scale(&factor::number(n_max), boson_det));
    h += &one(scale(&factor::pauli(Pauli::Z), qubit_det / 2.0), idb.clone());
    if two_photon {
        h += &one(scale(&sp, spec.g2), &a * &a);
        h += &one(scale(&sm, spec.g2), &ad * &ad);
    } else {
        h += &one(scale(&sp, spec.g), a.clone());
        h += &one(scale(&sm, spec.g), ad.clone());
    }
    let half_d = drive.intensity / 2.0;
    match drive.target {
        DriveTarget::Cavity => h += &one(id2, scale(&(&a + &ad), half_d)),
        DriveTarget::Qubit => h += &one(scale(&(&sp + &sm), half_d), idb),
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputObservables {
    /// Intracavity `<a^† a>`.
    pub photons: f64,
    /// `gamma <a^† a>`
    pub n_out: f64,
    /// `gamma^2 <a^† a> / D^2`; absent for `D = 0`.
    pub transmission: Option<f64>,
    pub g2: Option<f64>,
    pub g3: Option<f64>,
}

/// Output flux, transmission and equal-time correlations of a steady state.
///
/// The normally ordered moments `<a^†k a^k>` equal the factorial moments of
/// the photon-number distribution.
pub fn output_observables(rho: &DensityMatrix, gamma: f64, intensity: f64) -> OutputObservables {
    let space = rho.space();
    let mut m = [0.0f64; 3];
    for i in 0..space.total_dim() {
        let p = rho.entries()[(i, i)].re;
        let n = space.photons(i) as f64;
        m[0] += p * n;
        m[1] += p * n * (n - 1.0);
        m[2] += p * n * (n - 1.0) * (n - 2.0);
    }
    let photons = m[0];
    let defined = photons >= MIN_PHOTONS;
    OutputObservables {
        photons,
        n_out: gamma * photons,
        transmission: (intensity > 0.0).then(|| gamma * gamma * photons / (intensity * intensity)),
        g2: defined.then(|| m[1] / (photons * photons)),
        g3: defined.then(|| m[2] / photons.powi(3)),
    }
}

/// One row of a transmission or blockade scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionPoint {
    pub omega_d: f64,
    pub intensity: f64,
    pub transmission: Option<f64>,
    pub g2: Option<f64>,
    pub g3: Option<f64>,
    pub n_out: Option<f64>,
    pub converged: bool,
    /// Why the point failed, when it did.
    pub error: Option<String>,
}

impl TransmissionPoint {
    fn failed(drive: &DriveConfig, err: &Error) -> Self {
        Self {
            omega_d: drive.omega_d,
            intensity: drive.intensity,
            transmission: None,
            g2: None,
            g3: None,
            n_out: None,
            converged: false,
            error: Some(err.to_string()),
        }
    }
}

pub fn steady_state_at(spec: &ModelSpec, drive: &DriveConfig, cutoff: usize) -> Result<DensityMatrix> {
    let space = spec.space(cutoff);
    let h = rotating_frame_hamiltonian(spec, drive, space)?;
    let l = build_liouvillian(&h, &drive.lindblad)?;
    steady_state(&l)
}

/// Steady-state observables at a single cutoff, without certification.
pub fn steady_point(spec: &ModelSpec, drive: &DriveConfig, cutoff: usize) -> Result<OutputObservables> {
    let rho = steady_state_at(spec, drive, cutoff)?;
    Ok(output_observables(&rho, drive.lindblad.gamma, drive.intensity))
}

/// Largest relative change among `T`, `g2`, `g3`, `n_out`, with a `1e-6` floor.
/// A correlation present at one cutoff and absent at the other counts as infinite.
pub fn observable_change(a: &OutputObservables, b: &OutputObservables) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-6);
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => rel(x, y),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    [
        rel(a.n_out, b.n_out),
        opt(a.transmission, b.transmission),
        opt(a.g2, b.g2),
        opt(a.g3, b.g3),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Observables at `cutoff`, certified against `ceil(1.25 cutoff)`.
pub fn evaluate_point(spec: &ModelSpec, drive: &DriveConfig, cutoff: usize) -> Result<TransmissionPoint> {
    let a = steady_point(spec, drive, cutoff)?;
    let b = steady_point(spec, drive, reference_cutoff(cutoff))?;
    Ok(TransmissionPoint {
        omega_d: drive.omega_d,
        intensity: drive.intensity,
        transmission: a.transmission,
        g2: a.g2,
        g3: a.g3,
        n_out: Some(a.n_out),
        converged: observable_change(&a, &b) < STEADY_TOL,
        error: None,
    })
}

fn run_points(spec: &ModelSpec, drives: Vec<DriveConfig>, cutoff: usize) -> Vec<TransmissionPoint> {
    drives
        .par_iter()
        .map(|d| evaluate_point(spec, d, cutoff).unwrap_or_else(|e| TransmissionPoint::failed(d, &e)))
        .collect()
}

fn check_grid(grid: &[f64], field: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::validation(field, "must not be empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation(field, "must be finite and ascending"));
    }
    Ok(())
}

/// Observables versus drive frequency at fixed intensity.
///
/// Failing points are reported with `converged = false` and their error; the
/// scan carries on.
pub fn transmission_scan(
    spec: &ModelSpec,
    drive_template: &DriveConfig,
    omega_d_grid: &[f64],
    cutoff: usize,
) -> Result<Vec<TransmissionPoint>> {
    check_model(spec)?;
    drive_template.validate()?;
    check_grid(omega_d_grid, "omega_d_grid")?;
    let drives = omega_d_grid.iter().map(|&w| drive_template.with_omega_d(w)).collect();
    Ok(run_points(spec, drives, cutoff))
}

/// Drive frequency of the upper transmission peak used for blockade studies:
/// `omega_c + g` for the JC model, `2 omega_c + sqrt(2) g2` for the two-photon JC model.
pub fn blockade_frequency(spec: &ModelSpec) -> f64 {
    if spec.variant == Variant::TwoPhotonJc {
        2.0 * spec.omega_c + std::f64::consts::SQRT_2 * spec.g2
    } else {
        spec.omega_c + spec.g
    }
}

/// Contiguous run of intensities with `g2 >= 1` and `g3 < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockadeWindow {
    pub d_min: f64,
    pub d_max: f64,
    /// Largest `n_out / gamma` inside the window.
    pub max_photons: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockadeScan {
    pub points: Vec<TransmissionPoint>,
    /// The widest window, if any point qualifies.
    pub window: Option<BlockadeWindow>,
}

pub fn blockade_window(points: &[TransmissionPoint], gamma: f64) -> Option<BlockadeWindow> {
    let ok = |p: &TransmissionPoint| matches!((p.g2, p.g3), (Some(g2), Some(g3)) if g2 >= 1.0 && g3 < 1.0);
    let mut best: Option<BlockadeWindow> = None;
    let mut i = 0;
    while i < points.len() {
        if !ok(&points[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < points.len() && ok(&points[i]) {
            i += 1;
        }
        let run = &points[start..i];
        let w = BlockadeWindow {
            d_min: run[0].intensity,
            d_max: run[run.len() - 1].intensity,
            max_photons: run.iter().filter_map(|p| p.n_out).fold(0.0, f64::max) / gamma,
            points: run.len(),
        };
        if best.is_none_or(|b| w.points > b.points) {
            best = Some(w);
        }
    }
    best
}

/// Observables versus intensity with the drive frequency held fixed.
pub fn blockade_scan(spec: &ModelSpec, drive_template: &DriveConfig, d_grid: &[f64], cutoff: usize) -> Result<BlockadeScan> {
    check_model(spec)?;
    drive_template.validate()?;
    check_grid(d_grid, "d_grid")?;
    let drives = d_grid.iter().map(|&d| drive_template.with_intensity(d)).collect();
    let points = run_points(spec, drives, cutoff);
    let window = blockade_window(&points, drive_template.lindblad.gamma);
    Ok(BlockadeScan { points, window })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub omega_d: f64,
    pub transmission: f64,
}

/// Local maxima of `T` along the scan, refined by a parabola through the
/// neighbouring points, strongest first.
pub fn transmission_peaks(points: &[TransmissionPoint]) -> Vec<Peak> {
    let mut peaks = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let (Some(a), Some(b), Some(c)) = (
            points[i - 1].transmission,
            points[i].transmission,
            points[i + 1].transmission,
        ) else {
            continue;
        };
        if !(b > a && b >= c) {
            continue;
        }
        let (x0, x1, x2) = (points[i - 1].omega_d, points[i].omega_d, points[i + 1].omega_d);
        let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        let (mut xp, mut yp) = (x1, b);
        if denom != 0.0 {
            let ca = (x2 * (b - a) + x1 * (a - c) + x0 * (c - b)) / denom;
            let cb = (x2 * x2 * (a - b) + x1 * x1 * (c - a) + x0 * x0 * (b - c)) / denom;
            if ca < 0.0 {
                let v = -cb / (2.0 * ca);
                if v > x0 && v < x2 {
                    let cc = b - ca * x1 * x1 - cb * x1;
                    xp = v;
                    yp = ca * v * v + cb * v + cc;
                }
            }
        }
        peaks.push(Peak {
            omega_d: xp,
            transmission: yp,
        });
    }
    peaks.sort_by(|p, q| q.transmission.total_cmp(&p.transmission));
    peaks
}

/// Writes `omega_d, D, T, g2, g3, n_out, converged`; absent values are empty fields.
pub fn write_points_csv<W: Write>(points: &[TransmissionPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega_d", "D", "T", "g2", "g3", "n_out", "converged"])
        .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for p in points {
        w.write_record([
            fmt_f64(p.omega_d),
            fmt_f64(p.intensity),
            opt(p.transmission),
            opt(p.g2),
            opt(p.g3),
            opt(p.n_out),
            p.converged.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })
}

/// Empty-cavity transmission `(gamma/2)^2 / ((gamma/2)^2 + (omega_c - omega_d)^2)`.
pub fn empty_cavity_transmission(gamma: f64, detuning: f64) -> f64 {
    let hw = 0.25 * gamma * gamma;
    hw / (hw + detuning * detuning)
}

/// `<a>` in a steady state, for parity selection-rule checks.
pub fn field_amplitude(rho: &DensityMatrix) -> Result<C64> {
    let a = crate::fock_algebra::annihilation(rho.space())?;
    expectation(rho, &a)
}
