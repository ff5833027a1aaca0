//! Relaxation of a driven two-photon JC system towards its steady state.

use two_photon_rabi::fock_algebra::number;
use two_photon_rabi::liouville::{build_liouvillian, evolve, expectation, steady_state, DensityMatrix, LindbladConfig};
use two_photon_rabi::models::{ModelSpec, Variant};
use two_photon_rabi::scattering::{rotating_frame_hamiltonian, DriveConfig, DriveTarget};

fn main() -> two_photon_rabi::Result<()> {
    let gamma = 1e-3;
    let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01);
    let drive = DriveConfig::new(DriveTarget::Cavity, 1.0, gamma, LindbladConfig::new(gamma, 1e-4, 5e-5));
    let space = spec.space(10);
    let l = build_liouvillian(&rotating_frame_hamiltonian(&spec, &drive, space)?, &drive.lindblad)?;
    let ss = steady_state(&l)?;
    let n = number(space);
    println!("steady <n> = {:.6e}", expectation(&ss, &n)?.re);

    let mut rho = DensityMatrix::ground(space);
    for _ in 0..8 {
        rho = evolve(&rho, &l, 5.0 / gamma, 1.0)?;
        println!(
            "<n> = {:.6e}   trace distance to steady state = {:.3e}",
            expectation(&rho, &n)?.re,
            rho.trace_distance(&ss)?
        );
    }
    Ok(())
}
