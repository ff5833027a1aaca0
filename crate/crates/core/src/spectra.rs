//! Exact diagonalization, coupling scans, cutoff certification and collapse detection.

use std::io::Write;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock_algebra::{OperatorMatrix, C64, ZERO};
use crate::models::{build_spectral_hamiltonian, parity_symmetry, symmetry_operator, ModelSpec};
use crate::scattering::{self, DriveConfig};

/// Relative Hermiticity defect accepted by the eigensolvers.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on level changes for cutoff certification.
pub const LEVEL_TOL: f64 = 1e-6;
/// Tolerance on steady-state observable changes for cutoff certification.
pub const STEADY_TOL: f64 = 1e-4;
/// Ground-level drop between the two collapse-probe cutoffs that flags instability.
pub const COLLAPSE_DROP: f64 = 1e-3;
/// Default Fock cutoff for collapse studies.
pub const COLLAPSE_CUTOFF: usize = 150;

/// Eigenvalues closer than this (relative to `max(1, |E|)`) count as degenerate.
const TIE_TOL: f64 = 1e-10;

/// Connected components of the nonzero pattern of `h`, each sorted.
fn components(h: &Mat<C64>) -> Vec<Vec<usize>> {
    let d = h.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..d {
        for i in 0..j {
            if h[(i, j)] != ZERO || h[(j, i)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; d];
    for i in 0..d {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

struct BlockEigen {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: Option<Mat<C64>>,
}

fn solve_block(h: &Mat<C64>, indices: Vec<usize>, want_vectors: bool) -> Result<BlockEigen> {
    let m = indices.len();
    let real = indices
        .iter()
        .all(|&j| indices.iter().all(|&i| h[(i, j)].im == 0.0));
    let fail = |e| Error::Numerical(format!("eigensolver failed: {e:?}"));
    let (values, vectors) = if real {
        let sub = Mat::<f64>::from_fn(m, m, |i, j| h[(indices[i], indices[j])].re);
        if want_vectors {
            let evd = sub.self_adjoint_eigen(Side::Lower).map_err(fail)?;
            let vals = evd.S().column_vector().iter().copied().collect();
            let u = evd.U();
            (vals, Some(Mat::from_fn(m, m, |i, j| C64::new(u[(i, j)], 0.0))))
        } else {
            (sub.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?, None)
        }
    } else {
        let sub = Mat::<C64>::from_fn(m, m, |i, j| h[(indices[i], indices[j])]);
        if want_vectors {
            let evd = sub.self_adjoint_eigen(Side::Lower).map_err(fail)?;
            let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
            (vals, Some(evd.U().to_owned()))
        } else {
            (sub.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?, None)
        }
    };
    Ok(BlockEigen {
        indices,
        values,
        vectors,
    })
}

fn check_input(h: &OperatorMatrix, k: usize) -> Result<()> {
    if k == 0 || k > h.dim() {
        return Err(Error::validation(
            "k",
            format!("must lie in 1..={}, got {k}", h.dim()),
        ));
    }
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::validation(
            "hamiltonian",
            format!("not Hermitian (relative defect {defect:.3e})"),
        ));
    }
    Ok(())
}

/// Eigenvalues of every block, sorted ascending, with (block, column) provenance.
fn sorted_levels(h: &OperatorMatrix, want_vectors: bool) -> Result<(Vec<BlockEigen>, Vec<(f64, usize, usize)>)> {
    let blocks: Vec<BlockEigen> = components(h.entries())
        .into_iter()
        .map(|idx| solve_block(h.entries(), idx, want_vectors))
        .collect::<Result<_>>()?;
    let mut all: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| blk.values.iter().enumerate().map(move |(c, &v)| (v, b, c)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    Ok((blocks, all))
}

fn full_vector(h_dim: usize, blk: &BlockEigen, col: usize) -> Vec<C64> {
    let mut v = vec![ZERO; h_dim];
    let u = blk.vectors.as_ref().expect("vectors requested");
    for (r, &i) in blk.indices.iter().enumerate() {
        v[i] = u[(r, col)];
    }
    v
}

/// The `k` lowest eigenvalues of a Hermitian operator, ascending.
///
/// Decoupled blocks of the matrix (for instance parity sectors) are
/// diagonalized separately; real matrices use the real solver.
pub fn eigenspectrum(h: &OperatorMatrix, k: usize) -> Result<Vec<f64>> {
    check_input(h, k)?;
    let (_, all) = sorted_levels(h, false)?;
    Ok(all.into_iter().take(k).map(|x| x.0).collect())
}

/// Lowest `k` eigenpairs; `vectors[i]` is the normalized eigenvector of `values[i]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

pub fn eigenpairs(h: &OperatorMatrix, k: usize) -> Result<EigenPairs> {
    check_input(h, k)?;
    let (blocks, all) = sorted_levels(h, true)?;
    let picked = &all[..k];
    Ok(EigenPairs {
        values: picked.iter().map(|x| x.0).collect(),
        vectors: picked
            .iter()
            .map(|&(_, b, c)| full_vector(h.dim(), &blocks[b], c))
            .collect(),
    })
}

fn expectation_real(op: &OperatorMatrix, v: &[C64]) -> f64 {
    let ov = op.apply(v);
    v.iter().zip(&ov).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Lowest `k` levels with their parity labels `<v|P|v>`.
///
/// Degenerate levels are ordered by parity label, `+1` first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledLevels {
    pub values: Vec<f64>,
    pub parity: Vec<f64>,
}

pub fn labeled_spectrum(h: &OperatorMatrix, k: usize, parity: &OperatorMatrix) -> Result<LabeledLevels> {
    check_input(h, k)?;
    h.check_space(parity)?;
    let (blocks, all) = sorted_levels(h, true)?;
    // extend past k so ties straddling the cut are ordered before truncation
    let mut end = k;
    while end < all.len() && (all[end].0 - all[k - 1].0).abs() <= TIE_TOL * all[k - 1].0.abs().max(1.0) {
        end += 1;
    }
    let mut rows: Vec<(f64, f64)> = all[..end]
        .iter()
        .map(|&(v, b, c)| (v, expectation_real(parity, &full_vector(h.dim(), &blocks[b], c))))
        .collect();
    let mut start = 0;
    while start < rows.len() {
        let mut stop = start + 1;
        while stop < rows.len()
            && (rows[stop].0 - rows[start].0).abs() <= TIE_TOL * rows[start].0.abs().max(1.0)
        {
            stop += 1;
        }
        rows[start..stop].sort_by(|x, y| y.1.total_cmp(&x.1));
        start = stop;
    }
    rows.truncate(k);
    Ok(LabeledLevels {
        values: rows.iter().map(|r| r.0).collect(),
        parity: rows.iter().map(|r| r.1).collect(),
    })
}

/// What [`cutoff_convergence`] tracks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// The `k` lowest eigenvalues.
    Levels { k: usize },
    /// Steady-state `T`, `g2`, `g3` and `n_out` under the given drive.
    SteadyObservables(DriveConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub converged: bool,
    pub relative_change: f64,
    pub cutoff: usize,
    pub reference_cutoff: usize,
}

/// Cutoff used to certify results computed at `cutoff`.
pub fn reference_cutoff(cutoff: usize) -> usize {
    (cutoff * 5).div_ceil(4)
}

/// Largest `|a - b| / max(|b|, floor)` over paired entries.
pub fn max_relative_change(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}

fn lowest_levels(spec: &ModelSpec, cutoff: usize, k: usize) -> Result<Vec<f64>> {
    let h = build_spectral_hamiltonian(spec, spec.space(cutoff))?;
    eigenspectrum(&h, k.min(h.dim()))
}

/// Recomputes the tracked quantities at `ceil(1.25 cutoff)` and compares.
///
/// Levels are compared as `|dE| / max(|E|, 1)` against [`LEVEL_TOL`]; steady
/// observables as `|dx| / max(|x|, 1e-6)` against [`STEADY_TOL`]. Absent
/// correlations must be absent at both cutoffs.
pub fn cutoff_convergence(spec: &ModelSpec, observable: Observable, cutoff: usize) -> Result<Convergence> {
    if cutoff < 8 {
        return Err(Error::validation("cutoff", format!("must be >= 8, got {cutoff}")));
    }
    let reference = reference_cutoff(cutoff);
    let relative_change = match observable {
        Observable::Levels { k } => {
            let a = lowest_levels(spec, cutoff, k)?;
            let b = lowest_levels(spec, reference, k)?;
            max_relative_change(&a, &b, 1.0)
        }
        Observable::SteadyObservables(drive) => {
            let a = scattering::steady_point(spec, &drive, cutoff)?;
            let b = scattering::steady_point(spec, &drive, reference)?;
            scattering::observable_change(&a, &b)
        }
    };
    let tol = match observable {
        Observable::Levels { .. } => LEVEL_TOL,
        Observable::SteadyObservables(_) => STEADY_TOL,
    };
    Ok(Convergence {
        converged: relative_change < tol,
        relative_change,
        cutoff,
        reference_cutoff: reference,
    })
}

/// Lowest levels versus the coupling of the variant (`g2` for two-photon
/// models, `g` otherwise).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumScan {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub parity: Vec<Vec<f64>>,
    pub cutoff_used: usize,
    pub converged: Vec<bool>,
    pub relative_change: Vec<f64>,
}

impl SpectrumScan {
    pub fn k(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// CSV with columns `<parameter>, level_0.., parity_0.., converged`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.k();
        let mut header = vec![self.parameter.clone()];
        header.extend((0..k).map(|i| format!("level_{i}")));
        header.extend((0..k).map(|i| format!("parity_{i}")));
        header.push("converged".into());
        w.write_record(&header).map_err(csv_err)?;
        for (row, &x) in self.grid.iter().enumerate() {
            let mut rec = vec![fmt_f64(x)];
            rec.extend(self.levels[row].iter().map(|&v| fmt_f64(v)));
            rec.extend(self.parity[row].iter().map(|&v| fmt_f64(v)));
            rec.push(self.converged[row].to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv>".into(),
            source: e,
        })
    }
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// One labeled spectrum per grid point, each certified by [`cutoff_convergence`].
///
/// Grid points run in parallel on the current rayon pool; results are
/// assembled in grid order.
pub fn coupling_scan(template: &ModelSpec, grid: &[f64], k: usize, cutoff: usize) -> Result<SpectrumScan> {
    if grid.is_empty() {
        return Err(Error::validation("grid", "must not be empty"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("grid", "must be finite and ascending"));
    }
    template.validate()?;
    let space = template.space(cutoff);
    let parity = symmetry_operator(space, parity_symmetry(template.variant))?;
    let rows: Vec<(LabeledLevels, Convergence)> = grid
        .par_iter()
        .map(|&x| {
            let spec = template.with_coupling(x);
            let h = build_spectral_hamiltonian(&spec, space)?;
            let labeled = labeled_spectrum(&h, k, &parity)?;
            let reference = lowest_levels(&spec, reference_cutoff(cutoff), k)?;
            let change = max_relative_change(&labeled.values, &reference, 1.0);
            Ok((
                labeled,
                Convergence {
                    converged: cutoff >= 8 && change < LEVEL_TOL,
                    relative_change: change,
                    cutoff,
                    reference_cutoff: reference_cutoff(cutoff),
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumScan {
        parameter: if template.variant.is_two_photon() { "g2" } else { "g" }.into(),
        grid: grid.to_vec(),
        levels: rows.iter().map(|r| r.0.values.clone()).collect(),
        parity: rows.iter().map(|r| r.0.parity.clone()).collect(),
        cutoff_used: cutoff,
        converged: rows.iter().map(|r| r.1.converged).collect(),
        relative_change: rows.iter().map(|r| r.1.relative_change).collect(),
    })
}

/// Result of [`detect_collapse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseEstimate {
    pub g_col: f64,
    /// Final bracket: stable at `lower`, unstable at `upper`.
    pub lower: f64,
    pub upper: f64,
    pub low_cutoff: usize,
    pub high_cutoff: usize,
    pub iterations: usize,
}

/// Ground-level drop from `low_cutoff` to `high_cutoff`.
pub fn ground_drop(spec: &ModelSpec, low_cutoff: usize, high_cutoff: usize) -> Result<f64> {
    let lo = lowest_levels(spec, low_cutoff, 1)?[0];
    let hi = lowest_levels(spec, high_cutoff, 1)?[0];
    Ok(lo - hi)
}

/// Bisects the coupling at which the ground level becomes cutoff-unstable.
///
/// The indicator compares the ground level at `cutoff` with that at
/// `floor(cutoff / 1.5)` and fires when it dropped by more than
/// [`COLLAPSE_DROP`]. This is a finite-cutoff proxy for a spectrum unbounded
/// from below. The coupling swept is `g2`; `search` must bracket the switch.
pub fn detect_collapse(template: &ModelSpec, search: (f64, f64), cutoff: usize) -> Result<CollapseEstimate> {
    if !template.variant.can_collapse() {
        return Err(Error::Precondition(format!(
            "variant {} has no spectral collapse",
            template.variant
        )));
    }
    template.validate()?;
    let (mut lo, mut hi) = search;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::validation("search_interval", "need finite lo < hi"));
    }
    let low_cutoff = cutoff * 2 / 3;
    if low_cutoff < 8 {
        return Err(Error::validation("cutoff", format!("too small for collapse probing: {cutoff}")));
    }
    let unstable = |g: f64| -> Result<bool> {
        Ok(ground_drop(&template.with_g2(g), low_cutoff, cutoff)? > COLLAPSE_DROP)
    };
    let (a, b) = (unstable(lo)?, unstable(hi)?);
    if a || !b {
        return Err(Error::Interval { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > 1e-6 * hi.abs().max(1e-12) && iterations < 64 {
        let mid = 0.5 * (lo + hi);
        if unstable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(CollapseEstimate {
        g_col: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        low_cutoff,
        high_cutoff: cutoff,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_algebra::HilbertSpace;
    use crate::models::{build_hamiltonian, Variant};

    fn diag_op(vals: &[f64]) -> OperatorMatrix {
        let space = HilbertSpace::new(0, vals.len() - 1);
        OperatorMatrix::from_diagonal(space, |i| C64::new(vals[i], 0.0))
    }

    #[test]
    fn diagonal_input_sorted() {
        assert_eq!(eigenspectrum(&diag_op(&[3.0, 1.0, 2.0]), 3).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_bad_k_and_non_hermitian() {
        let h = diag_op(&[1.0, 2.0]);
        assert!(matches!(eigenspectrum(&h, 0), Err(Error::Validation { .. })));
        assert!(matches!(eigenspectrum(&h, 3), Err(Error::Validation { .. })));
        let mut m = h.entries().clone();
        m[(0, 1)] = C64::new(0.5, 0.0);
        let bad = OperatorMatrix::new(h.space(), m).unwrap();
        assert!(matches!(eigenspectrum(&bad, 1), Err(Error::Validation { .. })));
    }

    #[test]
    fn complex_block_path() {
        // sigma_y has eigenvalues -1, +1
        let space = HilbertSpace::new(0, 1);
        let mut m = Mat::zeros(2, 2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        let h = OperatorMatrix::new(space, m).unwrap();
        let p = eigenpairs(&h, 2).unwrap();
        assert!((p.values[0] + 1.0).abs() < 1e-14 && (p.values[1] - 1.0).abs() < 1e-14);
        let hv = h.apply(&p.vectors[0]);
        for (a, b) in hv.iter().zip(&p.vectors[0]) {
            assert!((a + b).norm() < 1e-14);
        }
    }

    #[test]
    fn doublet_levels_relative_to_ground() {
        let spec = ModelSpec::resonant(Variant::TwoPhotonJc).with_g2(0.01);
        let h = build_hamiltonian(&spec, spec.space(30)).unwrap();
        let ev = eigenspectrum(&h, 4).unwrap();
        let s = 2f64.sqrt() * 0.01;
        let want = [0.0, 1.0, 2.0 - s, 2.0 + s];
        for (e, w) in ev.iter().zip(want) {
            assert!((e - ev[0] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let spec = ModelSpec::resonant(Variant::TwoPhotonQrmFull).with_g2(0.1);
        let h = build_hamiltonian(&spec, spec.space(30)).unwrap();
        let p = eigenpairs(&h, 12).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let dot: C64 = p.vectors[i]
                    .iter()
                    .zip(&p.vectors[j])
                    .fold(ZERO, |acc, (a, b)| acc + a.conj() * b);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn parity_labels_and_tie_order() {
        // decoupled full model at omega_q = 2: |e,n> and |g,n+2> are degenerate
        // and share parity; |e,n> and |g,n+1> do not, so use omega_q = 1
        let spec = ModelSpec::resonant(Variant::TwoPhotonQrmFull).with_omega_q(1.0);
        let space = spec.space(10);
        let h = build_hamiltonian(&spec, space).unwrap();
        let p = symmetry_operator(space, crate::models::Symmetry::Pi2ph).unwrap();
        let l = labeled_spectrum(&h, 5, &p).unwrap();
        // levels: |g,0>=0, then |g,1>,|e,0> tie at 1, ...
        assert!((l.values[1] - l.values[2]).abs() < 1e-12);
        assert_eq!(l.parity[1], 1.0);
        assert_eq!(l.parity[2], -1.0);
        for x in &l.parity {
            assert!((x.abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn scan_with_zero_coupling_is_ladder() {
        let template = ModelSpec::resonant(Variant::TwoPhotonQrmFull);
        let scan = coupling_scan(&template, &[0.0], 4, 10).unwrap();
        assert!(scan.all_converged());
        // omega_c (n + 1/2) - 1 for the ground qubit: -0.5, 0.5, 1.5 (twice)
        let want = [-0.5, 0.5, 1.5, 1.5];
        for (a, b) in scan.levels[0].iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "g2,level_0,level_1,level_2,level_3,parity_0,parity_1,parity_2,parity_3,converged"
        );
        assert!(lines.next().unwrap().ends_with(",true"));
    }

    #[test]
    fn scan_rejects_bad_grid() {
        let t = ModelSpec::resonant(Variant::TwoPhotonJc);
        assert!(coupling_scan(&t, &[], 2, 10).is_err());
        assert!(coupling_scan(&t, &[0.2, 0.1], 2, 10).is_err());
    }

    #[test]
    fn convergence_of_decoupled_levels() {
        let spec = ModelSpec::resonant(Variant::TwoPhotonQrmFull);
        let c = cutoff_convergence(&spec, Observable::Levels { k: 6 }, 8).unwrap();
        assert!(c.converged);
        assert_eq!(c.reference_cutoff, 10);
        assert!(cutoff_convergence(&spec, Observable::Levels { k: 2 }, 7).is_err());
    }

    #[test]
    fn past_collapse_never_converges() {
        let spec = ModelSpec::resonant(Variant::TwoPhotonQrmFull).with_g2(0.26);
        let c = cutoff_convergence(&spec, Observable::Levels { k: 4 }, 80).unwrap();
        assert!(!c.converged);
    }

    #[test]
    fn collapse_rejects_rwa_and_constant_indicator() {
        let jc = ModelSpec::resonant(Variant::TwoPhotonJc);
        assert!(matches!(
            detect_collapse(&jc, (0.1, 0.4), 60),
            Err(Error::Precondition(_))
        ));
        let full = ModelSpec::resonant(Variant::TwoPhotonQrmFull);
        assert!(matches!(
            detect_collapse(&full, (0.01, 0.05), 60),
            Err(Error::Interval { .. })
        ));
    }

    #[test]
    fn reference_cutoff_rounds_up() {
        assert_eq!(reference_cutoff(8), 10);
        assert_eq!(reference_cutoff(20), 25);
        assert_eq!(reference_cutoff(21), 27);
    }
}
