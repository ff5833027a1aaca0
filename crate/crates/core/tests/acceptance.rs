//! Exit criteria. Each test prints one `PASS`/`FAIL` line and asserts it.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use two_photon_rabi::circuit::{self, CircuitParams, FLUX_QUANTUM};
use two_photon_rabi::liouville::{build_liouvillian, evolve, steady_state, DensityMatrix, LindbladConfig};
use two_photon_rabi::models::{build_hamiltonian, build_spectral_hamiltonian, ModelSpec, Variant};
use two_photon_rabi::scattering::{
    blockade_frequency, blockade_scan, rotating_frame_hamiltonian, steady_point, transmission_peaks,
    transmission_scan, DriveConfig, DriveTarget, TransmissionPoint,
};
use two_photon_rabi::spectra::{detect_collapse, eigenspectrum};

const GAMMA: f64 = 1e-3;

fn report(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!("criterion {id} [{name}]: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn levels(spec: &ModelSpec, cutoff: usize, k: usize) -> Vec<f64> {
    eigenspectrum(&build_spectral_hamiltonian(spec, spec.space(cutoff)).unwrap(), k).unwrap()
}

fn gaps(spec: &ModelSpec, cutoff: usize, k: usize) -> Vec<f64> {
    let e = levels(spec, cutoff, k + 1);
    e[1..].iter().map(|x| x - e[0]).collect()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn nearest(points: &[TransmissionPoint], w: f64) -> &TransmissionPoint {
    points
        .iter()
        .min_by(|a, b| (a.omega_d - w).abs().total_cmp(&(b.omega_d - w).abs()))
        .unwrap()
}

#[test]
fn doublet_energies() {
    let start = Instant::now();
    let g2 = 0.01;
    let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(g2);
    let h = build_hamiltonian(&spec, spec.space(60)).unwrap();
    let e = eigenspectrum(&h, 2 + 2 * 21).unwrap();
    let mut want: Vec<f64> = (0..=20)
        .flat_map(|n| {
            let n = n as f64;
            let s = g2 * ((n + 1.0) * (n + 2.0)).sqrt();
            [n + 2.0 - s, n + 2.0 + s]
        })
        .collect();
    want.sort_by(f64::total_cmp);
    // the two uncoupled levels |g,0>, |g,1> come first; energies are measured from |g,0>
    let err = e[2..]
        .iter()
        .zip(&want)
        .map(|(x, w)| (x - e[0] - w).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = err < 1e-9 && elapsed < Duration::from_secs(5);
    assert!(report(1, "doublet energies", pass, format!("max error {err:.2e}, {elapsed:.2?}")));
}

#[test]
fn collapse_points() {
    let start = Instant::now();
    let cases = [
        ("pure N=1", ModelSpec::resonant(Variant::TwoPhotonQrmPure), 0.5),
        ("full N=1", ModelSpec::resonant(Variant::TwoPhotonQrmFull), 0.25),
        (
            "full N=3",
            ModelSpec::resonant(Variant::MultiqubitTwoPhoton).with_n_qubits(3),
            1.0 / 12.0,
        ),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, spec, want) in cases {
        let est = detect_collapse(&spec, (0.02, 0.75), 150).unwrap();
        let rel = (est.g_col / want - 1.0).abs();
        pass &= rel < 0.01;
        detail.push(format!("{name}: {:.5} (rel {rel:.1e})", est.g_col));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(600);
    assert!(report(2, "collapse points", pass, format!("{}; {elapsed:.2?}", detail.join(", "))));
}

#[test]
fn quartic_regularization() {
    // the quartic term of the junction expansion enters with the opposite sign of g2
    let ratio = -1e-3;
    let base = |g2: f64| ModelSpec::resonant(Variant::MultiqubitTwoPhoton).with_n_qubits(3).with_g2(g2);
    let mut worst: f64 = 0.0;
    for g2 in grid(0.005, 0.05, 10) {
        let pure = levels(&base(g2), 60, 10);
        let quartic = levels(&base(g2).with_g4(ratio * g2), 60, 10);
        let d = pure.iter().zip(&quartic).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    let g2 = 1.05 / 12.0;
    let spec = base(g2).with_g4(ratio * g2);
    let (e100, e150) = (levels(&spec, 100, 1)[0], levels(&spec, 150, 1)[0]);
    let drift = (e100 - e150).abs();
    let pass = worst < 1e-3 && drift < 1e-4 && e150.is_finite();
    assert!(report(
        3,
        "quartic regularization",
        pass,
        format!("max level shift for g2<=0.05: {worst:.2e} (limit 1e-3); ground drift 100->150 past collapse: {drift:.2e}")
    ));
}

fn fig3_lindblad() -> LindbladConfig {
    LindbladConfig::new(GAMMA, 1e-4, 5e-5)
}

#[test]
fn weak_cavity_drive() {
    let drive = DriveConfig::new(DriveTarget::Cavity, 1.0, 0.01 * GAMMA, fig3_lindblad());
    let w = grid(1.0 - 15.0 * GAMMA, 1.0 + 15.0 * GAMMA, 301);

    let start = Instant::now();
    let two = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01);
    let pts = transmission_scan(&two, &drive, &w, 20).unwrap();
    let t_two = start.elapsed();
    let peaks = transmission_peaks(&pts);
    let g2_center = nearest(&pts, 1.0).g2.unwrap();
    let two_ok = peaks.len() == 1 && (peaks[0].omega_d - 1.0).abs() < 0.2 * GAMMA && g2_center < 1.0;

    let start = Instant::now();
    let one = ModelSpec::resonant(Variant::Jc).with_g(0.01);
    let pts1 = transmission_scan(&one, &drive, &w, 20).unwrap();
    let t_one = start.elapsed();
    let mut p1: Vec<f64> = transmission_peaks(&pts1).iter().take(2).map(|p| p.omega_d).collect();
    p1.sort_by(f64::total_cmp);
    let one_ok = p1.len() == 2 && (p1[0] - 0.99).abs() < 0.2 * GAMMA && (p1[1] - 1.01).abs() < 0.2 * GAMMA;

    let converged = pts.iter().chain(&pts1).all(|p| p.converged);
    let fast = t_two.max(t_one) < Duration::from_secs(300);
    let pass = two_ok && one_ok && converged && fast;
    assert!(report(
        4,
        "weak cavity drive",
        pass,
        format!(
            "two-photon peaks {:?}, g2(wc) {g2_center:.3e}; one-photon peaks {p1:?}; converged {converged}; {t_two:.1?}/{t_one:.1?}",
            peaks.iter().map(|p| p.omega_d).collect::<Vec<_>>()
        )
    ));
}

#[test]
fn strong_cavity_drive() {
    let start = Instant::now();
    let g2 = 0.01;
    let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(g2);
    let drive = DriveConfig::new(DriveTarget::Cavity, 1.0, 2.0 * GAMMA, fig3_lindblad());
    let w = grid(1.0 - 15.0 * GAMMA, 1.0 + 15.0 * GAMMA, 121);
    let pts = transmission_scan(&spec, &drive, &w, 40).unwrap();
    let mut top: Vec<f64> = transmission_peaks(&pts).iter().take(2).map(|p| p.omega_d).collect();
    top.sort_by(f64::total_cmp);
    let located = top.len() == 2 && (top[0] - (1.0 - g2)).abs() < 0.3 * GAMMA && (top[1] - (1.0 + g2)).abs() < 0.3 * GAMMA;
    let g2_at: Vec<f64> = [1.0 - g2, 1.0 + g2]
        .iter()
        .map(|&wd| steady_point(&spec, &drive.with_omega_d(wd), 40).unwrap().g2.unwrap())
        .collect();
    let poissonian = g2_at.iter().all(|g| (g - 1.0).abs() < 0.15);
    let elapsed = start.elapsed();
    let pass = located && poissonian && elapsed < Duration::from_secs(1200);
    assert!(report(
        5,
        "strong cavity drive",
        pass,
        format!("two strongest maxima at {top:?} (want 1 -/+ {g2}); g2 at wc -/+ g2: {g2_at:?}; {elapsed:.1?}")
    ));
}

#[test]
fn qubit_drive_and_blockade() {
    let lindblad = LindbladConfig::new(GAMMA, GAMMA, 5e-5);
    let g2 = 0.01;
    let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(g2);
    let drive = DriveConfig::new(DriveTarget::Qubit, 2.0, 0.03 * GAMMA, lindblad);
    let w = grid(2.0 - 20.0 * GAMMA, 2.0 + 20.0 * GAMMA, 201);
    let pts = transmission_scan(&spec, &drive, &w, 20).unwrap();
    let mut top: Vec<f64> = transmission_peaks(&pts).iter().take(2).map(|p| p.omega_d).collect();
    top.sort_by(f64::total_cmp);
    let s = SQRT_2 * g2;
    let located = top.len() == 2 && (top[0] - (2.0 - s)).abs() < 0.3 * GAMMA && (top[1] - (2.0 + s)).abs() < 0.3 * GAMMA;
    let min_g2 = pts.iter().filter_map(|p| p.g2).fold(f64::INFINITY, f64::min);
    let bunched = min_g2 > 1.0 && pts.iter().all(|p| p.g2.is_some());

    let d: Vec<f64> = (0..40).map(|i| GAMMA * 10f64.powf(-2.0 + 0.075 * i as f64)).collect();
    let scan = blockade_scan(&spec, &drive.with_omega_d(blockade_frequency(&spec)), &d, 40).unwrap();
    let blockaded: Vec<f64> = scan
        .points
        .iter()
        .filter(|p| {
            matches!((p.g2, p.g3, p.n_out), (Some(a), Some(b), Some(n)) if a >= 1.0 && b < 1.0 && n / GAMMA < 0.1)
        })
        .map(|p| p.intensity / GAMMA)
        .collect();

    let one = ModelSpec::resonant(Variant::Jc).with_g(0.01);
    let one_drive = DriveConfig::new(DriveTarget::Qubit, blockade_frequency(&one), 0.03 * GAMMA, lindblad);
    let one_g2 = steady_point(&one, &one_drive, 20).unwrap().g2.unwrap();

    let converged = pts.iter().chain(&scan.points).all(|p| p.converged);
    let pass = located && bunched && !blockaded.is_empty() && one_g2 < 1.0 && converged;
    assert!(report(
        6,
        "qubit drive",
        pass,
        format!(
            "peaks {top:?} (want 2 -/+ {s:.5}); min g2 {min_g2:.3}; blockade D/gamma in [{:.3}, {:.3}]; one-photon g2 {one_g2:.3e}; converged {converged}",
            blockaded.first().copied().unwrap_or(f64::NAN),
            blockaded.last().copied().unwrap_or(f64::NAN)
        )
    ));
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn effective_hamiltonians() {
    let g: Vec<f64> = (0..6).map(|i| 0.001 * 20f64.powf(i as f64 / 5.0)).collect();
    let mut err = vec![Vec::new(); 6];
    for &g2 in &g {
        let exact = gaps(&ModelSpec::resonant(Variant::TwoPhotonQrmFull).with_g2(g2), 40, 6);
        let eff = gaps(&ModelSpec::resonant(Variant::TwoPhotonBsEffective).with_g2(g2), 40, 6);
        for i in 0..6 {
            err[i].push((exact[i] - eff[i]).abs());
        }
    }
    let slopes: Vec<f64> = err.iter().map(|e| loglog_slope(&g, e)).collect();
    let min_slope = slopes.iter().cloned().fold(f64::INFINITY, f64::min);

    // omega_q = 3 omega_c, so |2 omega_c - omega_q| = 1
    let mut disp_ok = true;
    let mut worst = Vec::new();
    for (eff, exact) in [
        (Variant::DispersiveTwoPhotonRwa, Variant::TwoPhotonJc),
        (Variant::DispersiveTwoPhotonFull, Variant::TwoPhotonQrmFull),
    ] {
        let mut ratio: f64 = 0.0;
        for &g2 in &g {
            let s = |v| ModelSpec::resonant(v).with_g2(g2).with_omega_q(3.0);
            let d = gaps(&s(exact), 40, 6)
                .iter()
                .zip(&gaps(&s(eff), 40, 6))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ratio = ratio.max(d / (5.0 * g2.powi(3)));
        }
        disp_ok &= ratio < 1.0;
        worst.push(format!("{eff}: worst error/bound {ratio:.3}"));
    }
    let pass = min_slope >= 3.0 && disp_ok;
    assert!(report(
        7,
        "effective Hamiltonians",
        pass,
        format!("2BS gap-error exponents {slopes:.4?} (need >= 3); {}", worst.join(", "))
    ));
}

#[test]
fn solver_cross_validation() {
    let fig3 = fig3_lindblad();
    let fig4 = LindbladConfig::new(GAMMA, GAMMA, 5e-5);
    let two = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01);
    let one = ModelSpec::resonant(Variant::Jc).with_g(0.01);
    let configs = [
        (two, DriveConfig::new(DriveTarget::Cavity, 1.0, 2.0 * GAMMA, fig3)),
        (two, DriveConfig::new(DriveTarget::Cavity, 1.01, 0.5 * GAMMA, fig3)),
        (two, DriveConfig::new(DriveTarget::Qubit, 2.0 + SQRT_2 * 0.01, 0.3 * GAMMA, fig4)),
        (one, DriveConfig::new(DriveTarget::Cavity, 1.01, 0.5 * GAMMA, fig3)),
        (one, DriveConfig::new(DriveTarget::Qubit, 1.01, 0.3 * GAMMA, fig4)),
    ];
    let mut worst: f64 = 0.0;
    for (spec, drive) in configs {
        let space = spec.space(12);
        let h = rotating_frame_hamiltonian(&spec, &drive, space).unwrap();
        let l = build_liouvillian(&h, &drive.lindblad).unwrap();
        let ss = steady_state(&l).unwrap();
        let late = evolve(&DensityMatrix::ground(space), &l, 100.0 / GAMMA, 1.0).unwrap();
        worst = worst.max(late.trace_distance(&ss).unwrap());
    }

    let empty = ModelSpec::resonant(Variant::Jc);
    let d = 0.3 * GAMMA;
    let o = steady_point(&empty, &DriveConfig::new(DriveTarget::Cavity, 1.0, d, fig3), 12).unwrap();
    let n_err = (o.photons - (d / GAMMA).powi(2)).abs();
    let t_err = (o.transmission.unwrap() - 1.0).abs();
    let pass = worst < 1e-6 && n_err < 1e-8 && t_err < 1e-8;
    assert!(report(
        8,
        "solver cross-validation",
        pass,
        format!("max trace distance {worst:.2e}; empty cavity |dn| {n_err:.1e}, |dT| {t_err:.1e}")
    ));
}

#[test]
fn circuit_numbers() {
    let mut p = CircuitParams {
        i_c: 1e-6,
        c_sq: 1.0,
        mutual: 5e-12,
        i_p: 300e-9,
        flux_dc: 0.0,
        phase_dc: 0.0,
    };
    p.c_sq = circuit::capacitance_for_frequency(&p, 2.0 * PI * 5e9).unwrap();
    let ratio = circuit::quartic_ratio(&p).unwrap();
    let g2_off = circuit::two_photon_coupling(&p).unwrap();
    let tuned = CircuitParams {
        flux_dc: 0.2 * FLUX_QUANTUM,
        ..p
    };
    let g1_off = circuit::one_photon_coupling(&tuned).unwrap();
    let pass = (5e-4..=5e-3).contains(&ratio) && g2_off == 0.0 && g1_off == 0.0;
    assert!(report(
        9,
        "circuit numbers",
        pass,
        format!("quartic ratio {ratio:.3e} (want [5e-4, 5e-3]); g2(Phi_DC=0) {g2_off}; g1(phi_DC=0) {g1_off}")
    ));
}
