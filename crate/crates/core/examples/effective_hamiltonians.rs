//! Perturbative shifts and the accuracy of the effective Hamiltonians.

use two_photon_rabi::models::{analytic_shifts, build_hamiltonian, ModelSpec, Variant};
use two_photon_rabi::spectra::eigenspectrum;

fn gaps(spec: &ModelSpec) -> two_photon_rabi::Result<Vec<f64>> {
    let e = eigenspectrum(&build_hamiltonian(spec, spec.space(40))?, 7)?;
    Ok(e[1..].iter().map(|x| x - e[0]).collect())
}

fn main() -> two_photon_rabi::Result<()> {
    let spec = ModelSpec::resonant(Variant::TwoPhotonQrmFull).with_g2(0.01).with_omega_q(3.0);
    println!("{:#?}", analytic_shifts(&spec).table());

    for g2 in [0.002, 0.005, 0.01, 0.02] {
        let at = |v: Variant, wq: f64| ModelSpec::resonant(v).with_g2(g2).with_omega_q(wq);
        let max_diff = |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let bs = max_diff(gaps(&at(Variant::TwoPhotonQrmFull, 2.0))?, gaps(&at(Variant::TwoPhotonBsEffective, 2.0))?);
        let disp = max_diff(gaps(&at(Variant::TwoPhotonJc, 3.0))?, gaps(&at(Variant::DispersiveTwoPhotonRwa, 3.0))?);
        println!("g2 = {g2:<6} |QRM - 2BS| = {bs:.3e}   |JC - dispersive| = {disp:.3e}");
    }
    Ok(())
}
