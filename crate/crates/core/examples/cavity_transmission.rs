//! Weak coherent cavity drive: transmission and g2 for one- and two-photon coupling.

use two_photon_rabi::liouville::LindbladConfig;
use two_photon_rabi::models::{ModelSpec, Variant};
use two_photon_rabi::scattering::{transmission_peaks, transmission_scan, DriveConfig, DriveTarget};

fn main() -> two_photon_rabi::Result<()> {
    let gamma = 1e-3;
    let drive = DriveConfig::new(DriveTarget::Cavity, 1.0, 0.01 * gamma, LindbladConfig::new(gamma, 1e-4, 5e-5));
    let grid: Vec<f64> = (0..=120).map(|i| 0.985 + 0.03 * i as f64 / 120.0).collect();
    for spec in [
        ModelSpec::resonant(Variant::Jc).with_g(0.01),
        ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01),
    ] {
        let points = transmission_scan(&spec, &drive, &grid, 20)?;
        let peaks: Vec<_> = transmission_peaks(&points).into_iter().take(2).collect();
        println!("{}: peaks {:?}", spec.variant, peaks);
        let mid = &points[points.len() / 2];
        println!("  at omega_d = {}: T = {:?}, g2 = {:?}", mid.omega_d, mid.transmission, mid.g2);
    }
    Ok(())
}
