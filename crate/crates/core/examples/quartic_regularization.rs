//! Ground level of the three-qubit model across the collapse point, with and
//! without the quartic junction correction, at two cutoffs.

use two_photon_rabi::models::{build_spectral_hamiltonian, ModelSpec, Variant};
use two_photon_rabi::spectra::eigenspectrum;

fn ground(spec: &ModelSpec, cutoff: usize) -> two_photon_rabi::Result<f64> {
    Ok(eigenspectrum(&build_spectral_hamiltonian(spec, spec.space(cutoff))?, 1)?[0])
}

fn main() -> two_photon_rabi::Result<()> {
    println!("{:>8} {:>14} {:>14} {:>14} {:>14}", "g2", "pure c=100", "pure c=150", "quartic c=100", "quartic c=150");
    for g2 in [0.06, 0.08, 0.0875, 0.09, 0.1] {
        let pure = ModelSpec::resonant(Variant::MultiqubitTwoPhoton).with_n_qubits(3).with_g2(g2);
        let quartic = pure.with_g4(-1e-3 * g2);
        println!(
            "{g2:>8.4} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            ground(&pure, 100)?,
            ground(&pure, 150)?,
            ground(&quartic, 100)?,
            ground(&quartic, 150)?
        );
    }
    Ok(())
}
