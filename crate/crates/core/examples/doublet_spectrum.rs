//! Two-photon JC doublets from exact diagonalization, next to the closed form.

use two_photon_rabi::models::{analytic_doublet_energies, build_hamiltonian, ModelSpec, Variant};
use two_photon_rabi::spectra::eigenspectrum;

fn main() -> two_photon_rabi::Result<()> {
    let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01);
    let h = build_hamiltonian(&spec, spec.space(60))?;
    let e = eigenspectrum(&h, 12)?;
    println!("{:>3} {:>14} {:>14} {:>14} {:>14}", "n", "E- exact", "E- formula", "E+ exact", "E+ formula");
    for n in 0..5 {
        let d = analytic_doublet_energies(&spec, n);
        let (lo, hi) = (e[2 + 2 * n] - e[0], e[3 + 2 * n] - e[0]);
        println!("{n:>3} {lo:>14.10} {:>14.10} {hi:>14.10} {:>14.10}", d.e_minus, d.e_plus);
    }
    Ok(())
}
