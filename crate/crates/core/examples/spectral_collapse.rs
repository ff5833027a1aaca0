//! Locates the collapse coupling for the single-qubit and three-qubit models.

use two_photon_rabi::models::{ModelSpec, Variant};
use two_photon_rabi::spectra::{detect_collapse, COLLAPSE_CUTOFF};

fn main() -> two_photon_rabi::Result<()> {
    let cases = [
        ("pure coupling, N = 1", ModelSpec::resonant(Variant::TwoPhotonQrmPure)),
        ("full coupling, N = 1", ModelSpec::resonant(Variant::TwoPhotonQrmFull)),
        (
            "full coupling, N = 3",
            ModelSpec::resonant(Variant::MultiqubitTwoPhoton).with_n_qubits(3),
        ),
    ];
    for (name, spec) in cases {
        let est = detect_collapse(&spec, (0.02, 0.75), COLLAPSE_CUTOFF)?;
        println!("{name}: g_col = {:.5} (bracket [{:.6}, {:.6}])", est.g_col, est.lower, est.upper);
    }
    Ok(())
}
