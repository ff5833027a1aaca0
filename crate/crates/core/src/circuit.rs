//! SQUID and flux-qubit circuit parameters mapped onto model couplings.
//!
//! Everything is SI: amperes, farads, henries, webers, radians, rad/s.
//!
//! The SQUID frequency is `omega_SQ = 1/sqrt(L_J C_SQ)`; the product form
//! without the inverse is not a frequency. The inductance inside the zero-point
//! phase amplitude `sqrt(hbar omega_SQ L / 2)` is taken to be `L_J`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnetic flux quantum `h / 2e` (Wb).
pub const FLUX_QUANTUM: f64 = 2.067833848e-15;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054571817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitParams {
    /// Junction critical current `I_C`.
    pub i_c: f64,
    /// Total SQUID capacitance `C_SQ`.
    pub c_sq: f64,
    /// Qubit-SQUID mutual inductance `M`.
    pub mutual: f64,
    /// Qubit persistent current `I_p`.
    pub i_p: f64,
    /// Static SQUID flux `Phi_DC`.
    pub flux_dc: f64,
    /// Static bias phase `phi_DC`.
    #[serde(default)]
    pub phase_dc: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be > 0, got {v}")))
            }
        };
        pos("circuit.i_c", self.i_c)?;
        pos("circuit.c_sq", self.c_sq)?;
        for (field, v) in [
            ("circuit.mutual", self.mutual),
            ("circuit.i_p", self.i_p),
            ("circuit.flux_dc", self.flux_dc),
            ("circuit.phase_dc", self.phase_dc),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(field, "must be finite"));
            }
        }
        if self.flux_dc.abs() / FLUX_QUANTUM >= 0.5 {
            return Err(Error::DivergentInductance(self.reduced_flux().cos() * self.phase_dc.cos()));
        }
        Ok(())
    }

    /// `pi Phi_DC / Phi_0`
    fn reduced_flux(&self) -> f64 {
        PI * self.flux_dc / FLUX_QUANTUM
    }

    /// Single-junction Josephson energy `E_J = I_C Phi_0 / 2 pi`.
    pub fn josephson_energy(&self) -> f64 {
        self.i_c * FLUX_QUANTUM / (2.0 * PI)
    }
}

/// `L_J = Phi_0 / [2 pi (2 I_C) cos(pi Phi_DC/Phi_0) cos(phi_DC)]`
pub fn josephson_inductance(p: &CircuitParams) -> Result<f64> {
    p.validate()?;
    let c = p.reduced_flux().cos() * p.phase_dc.cos();
    // cos(pi Phi/Phi_0) > 0 is guaranteed by validate; the bias phase can still kill it
    if c <= 1e-12 {
        return Err(Error::DivergentInductance(c));
    }
    Ok(FLUX_QUANTUM / (2.0 * PI * 2.0 * p.i_c * c))
}

/// `omega_SQ = 1 / sqrt(L_J C_SQ)`
pub fn squid_frequency(p: &CircuitParams) -> Result<f64> {
    Ok(1.0 / (josephson_inductance(p)? * p.c_sq).sqrt())
}

/// `g2 = -(pi/4) tan(pi Phi_DC/Phi_0) (M I_p / Phi_0) omega_SQ`, defined only without bias current.
pub fn two_photon_coupling(p: &CircuitParams) -> Result<f64> {
    if p.phase_dc != 0.0 {
        return Err(Error::Precondition(format!(
            "two-photon coupling needs phase_dc = 0, got {}",
            p.phase_dc
        )));
    }
    let w = squid_frequency(p)?;
    Ok(-(PI / 4.0) * p.reduced_flux().tan() * (p.mutual * p.i_p / FLUX_QUANTUM) * w)
}

/// `g1 = -4 E_J (pi/Phi_0)^2 sin(pi Phi_DC/Phi_0) sin(phi_DC) M I_p sqrt(hbar omega_SQ L_J / 2) / hbar`
pub fn one_photon_coupling(p: &CircuitParams) -> Result<f64> {
    let l = josephson_inductance(p)?;
    let w = 1.0 / (l * p.c_sq).sqrt();
    let k = PI / FLUX_QUANTUM;
    Ok(-4.0 * p.josephson_energy() * k * k * p.reduced_flux().sin() * p.phase_dc.sin() * p.mutual * p.i_p
        * (HBAR * w * l / 2.0).sqrt()
        / HBAR)
}

/// `|U_4P| / |U_TPR| = (1/24) (pi/Phi_0) hbar omega_SQ / [I_C cos(pi Phi_DC/Phi_0)]`
pub fn quartic_ratio(p: &CircuitParams) -> Result<f64> {
    let w = squid_frequency(p)?;
    Ok(quartic_ratio_at(p.i_c, w, p.flux_dc))
}

fn quartic_ratio_at(i_c: f64, omega_sq: f64, flux_dc: f64) -> f64 {
    (PI / FLUX_QUANTUM) * HBAR * omega_sq / (24.0 * i_c * (PI * flux_dc / FLUX_QUANTUM).cos())
}

/// `phi_DC = arcsin(I_B / [2 I_C cos(pi Phi_SQ/Phi_0)])`
pub fn phase_from_bias(i_b: f64, i_c: f64, flux_sq: f64) -> Result<f64> {
    if !(i_c > 0.0) {
        return Err(Error::validation("circuit.i_c", format!("must be > 0, got {i_c}")));
    }
    let max = 2.0 * i_c * (PI * flux_sq / FLUX_QUANTUM).cos();
    if !(max > 0.0) || !i_b.is_finite() || i_b.abs() > max {
        return Err(Error::validation(
            "circuit.i_b",
            format!("|I_B| must be <= 2 I_C cos(pi Phi_SQ/Phi_0) = {max:e}, got {i_b:e}"),
        ));
    }
    Ok((i_b / max).asin())
}

/// Effective couplings of a circuit, as printed by `circuit-params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitReport {
    pub l_j: f64,
    pub omega_sq: f64,
    pub g1: f64,
    /// Absent when the SQUID is current biased.
    pub g2: Option<f64>,
    /// `g4 / g2`, the quartic-to-two-photon ratio.
    pub quartic_ratio: f64,
}

pub fn circuit_report(p: &CircuitParams) -> Result<CircuitReport> {
    let g2 = match two_photon_coupling(p) {
        Ok(g) => Some(g),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(CircuitReport {
        l_j: josephson_inductance(p)?,
        omega_sq: squid_frequency(p)?,
        g1: one_photon_coupling(p)?,
        g2,
        quartic_ratio: quartic_ratio(p)?,
    })
}

/// `C_SQ` giving resonance `omega_sq` for the junction inductance of `p`.
pub fn capacitance_for_frequency(p: &CircuitParams, omega_sq: f64) -> Result<f64> {
    let l = josephson_inductance(p)?;
    Ok(1.0 / (omega_sq * omega_sq * l))
}

/// `M I_p` producing the two-photon coupling `g2` at the flux and frequency of `p`.
pub fn mutual_current_for_g2(p: &CircuitParams, g2: f64) -> Result<f64> {
    let unit = CircuitParams {
        mutual: FLUX_QUANTUM,
        i_p: 1.0,
        ..*p
    };
    // g2 is linear in M I_p; a unit flux gives the slope
    let slope = two_photon_coupling(&unit)? / FLUX_QUANTUM;
    if slope == 0.0 {
        return Err(Error::Precondition("Phi_DC = 0 switches the two-photon coupling off".into()));
    }
    Ok(g2 / slope)
}

/// Design targets for [`solve_for_targets`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitTargets {
    pub omega_sq: f64,
    pub g2: f64,
    pub quartic_ratio: f64,
}

/// Circuit realising a set of [`CircuitTargets`] for a given junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitSolution {
    pub flux_dc: f64,
    pub c_sq: f64,
    /// The product `M I_p`.
    pub mutual_current: f64,
}

/// Inverts `(omega_SQ, g2, g4/g2)` for `Phi_DC`, `C_SQ` and `M I_p` at fixed `I_C`.
///
/// The sign of `Phi_DC` is chosen so that `M I_p > 0`.
pub fn solve_for_targets(i_c: f64, t: &CircuitTargets) -> Result<CircuitSolution> {
    if !(i_c > 0.0) {
        return Err(Error::validation("circuit.i_c", "must be > 0"));
    }
    if !(t.omega_sq > 0.0 && t.quartic_ratio > 0.0) || !t.g2.is_finite() {
        return Err(Error::validation("targets", "omega_sq and quartic_ratio must be > 0"));
    }
    let cos = quartic_ratio_at(i_c, t.omega_sq, 0.0) / t.quartic_ratio;
    if !(cos > 0.0 && cos <= 1.0) {
        return Err(Error::validation(
            "targets.quartic_ratio",
            format!("needs cos(pi Phi_DC/Phi_0) = {cos} in (0, 1]"),
        ));
    }
    let flux = -t.g2.signum() * cos.acos() * FLUX_QUANTUM / PI;
    let mut p = CircuitParams {
        i_c,
        c_sq: 1.0,
        mutual: 0.0,
        i_p: 1.0,
        flux_dc: flux,
        phase_dc: 0.0,
    };
    p.c_sq = capacitance_for_frequency(&p, t.omega_sq)?;
    let mutual_current = if t.g2 == 0.0 { 0.0 } else { mutual_current_for_g2(&p, t.g2)? };
    Ok(CircuitSolution {
        flux_dc: flux,
        c_sq: p.c_sq,
        mutual_current,
    })
}
