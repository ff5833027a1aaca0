//! Qubit drive at the upper two-photon resonance: g2 and g3 versus drive
//! intensity, and the window where pairs pass but triples are suppressed.

use two_photon_rabi::liouville::LindbladConfig;
use two_photon_rabi::models::{ModelSpec, Variant};
use two_photon_rabi::scattering::{blockade_frequency, blockade_scan, write_points_csv, DriveConfig, DriveTarget};

fn main() -> two_photon_rabi::Result<()> {
    let gamma = 1e-3;
    let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01);
    let drive = DriveConfig::new(
        DriveTarget::Qubit,
        blockade_frequency(&spec),
        gamma,
        LindbladConfig::new(gamma, gamma, 5e-5),
    );
    let d: Vec<f64> = (0..25).map(|i| gamma * 10f64.powf(-1.5 + 0.1 * i as f64)).collect();
    let scan = blockade_scan(&spec, &drive, &d, 30)?;
    write_points_csv(&scan.points, std::io::stdout().lock())?;
    eprintln!("blockade window: {:?}", scan.window);
    Ok(())
}
