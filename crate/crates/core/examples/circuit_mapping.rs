//! From SQUID parameters to model couplings and back.

use std::f64::consts::PI;

use two_photon_rabi::circuit::{
    capacitance_for_frequency, circuit_report, solve_for_targets, CircuitParams, CircuitTargets, FLUX_QUANTUM,
};

fn main() -> two_photon_rabi::Result<()> {
    let mut p = CircuitParams {
        i_c: 1e-6,
        c_sq: 1.0,
        mutual: 5e-12,
        i_p: 300e-9,
        flux_dc: 0.1 * FLUX_QUANTUM,
        phase_dc: 0.0,
    };
    p.c_sq = capacitance_for_frequency(&p, 2.0 * PI * 5e9)?;
    let r = circuit_report(&p)?;
    println!("{}", serde_json::to_string_pretty(&r).unwrap());

    // design for g2 = 0.01 omega_SQ at the same quartic ratio
    let t = CircuitTargets {
        omega_sq: r.omega_sq,
        g2: 0.01 * r.omega_sq,
        quartic_ratio: r.quartic_ratio,
    };
    let s = solve_for_targets(p.i_c, &t)?;
    println!("Phi_DC/Phi_0 = {:.6}, C_SQ = {:.4e} F, M I_p = {:.4e} Wb", s.flux_dc / FLUX_QUANTUM, s.c_sq, s.mutual_current);
    Ok(())
}
