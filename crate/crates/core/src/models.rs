//! Hamiltonians of the one- and two-photon Rabi family and their analytic companions.
//!
//! Energies are in units of a reference cavity frequency (`omega_c = 1` by default).
//! Per variant, the parameters read are:
//!
//! | variant | reads |
//! |---|---|
//! | `jc`, `qrm`, `bs_effective`, `dispersive_jc` | `omega_c`, `omega_q`, `g` |
//! | `two_photon_jc`, `two_photon_qrm_full`, `two_photon_qrm_pure`, `two_photon_bs_effective`, `dispersive_two_photon_rwa`, `dispersive_two_photon_full` | `omega_c`, `omega_q`, `g2` |
//! | `multiqubit_two_photon` | `omega_c`, `omega_q`, `g2`, `g4`, `j`, `n_qubits` |
//!
//! Everything else is ignored. Single-qubit variants put the qubit energy on
//! `sigma_z` and couple through `sigma_x`; the multi-qubit variant puts every
//! spin term on `sigma_x` (see [`crate::fock_algebra::qubit_hadamard`]).

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_algebra::{
    embed, factor, number, photon_parity, HilbertSpace, OperatorMatrix, Pauli, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Jc,
    Qrm,
    TwoPhotonJc,
    TwoPhotonQrmFull,
    TwoPhotonQrmPure,
    MultiqubitTwoPhoton,
    BsEffective,
    TwoPhotonBsEffective,
    DispersiveTwoPhotonRwa,
    DispersiveTwoPhotonFull,
    DispersiveJc,
}

impl Variant {
    pub const ALL: [Variant; 11] = [
        Variant::Jc,
        Variant::Qrm,
        Variant::TwoPhotonJc,
        Variant::TwoPhotonQrmFull,
        Variant::TwoPhotonQrmPure,
        Variant::MultiqubitTwoPhoton,
        Variant::BsEffective,
        Variant::TwoPhotonBsEffective,
        Variant::DispersiveTwoPhotonRwa,
        Variant::DispersiveTwoPhotonFull,
        Variant::DispersiveJc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Jc => "jc",
            Variant::Qrm => "qrm",
            Variant::TwoPhotonJc => "two_photon_jc",
            Variant::TwoPhotonQrmFull => "two_photon_qrm_full",
            Variant::TwoPhotonQrmPure => "two_photon_qrm_pure",
            Variant::MultiqubitTwoPhoton => "multiqubit_two_photon",
            Variant::BsEffective => "bs_effective",
            Variant::TwoPhotonBsEffective => "two_photon_bs_effective",
            Variant::DispersiveTwoPhotonRwa => "dispersive_two_photon_rwa",
            Variant::DispersiveTwoPhotonFull => "dispersive_two_photon_full",
            Variant::DispersiveJc => "dispersive_jc",
        }
    }

    /// Photon-pair exchange models; these conserve photon-number parity.
    pub fn is_two_photon(self) -> bool {
        !matches!(
            self,
            Variant::Jc | Variant::Qrm | Variant::BsEffective | Variant::DispersiveJc
        )
    }

    pub fn is_effective(self) -> bool {
        matches!(
            self,
            Variant::BsEffective
                | Variant::TwoPhotonBsEffective
                | Variant::DispersiveTwoPhotonRwa
                | Variant::DispersiveTwoPhotonFull
                | Variant::DispersiveJc
        )
    }

    pub fn is_dispersive(self) -> bool {
        matches!(
            self,
            Variant::DispersiveTwoPhotonRwa | Variant::DispersiveTwoPhotonFull | Variant::DispersiveJc
        )
    }

    /// Models whose coupling contains the full quadratic or pure pair term and
    /// can therefore collapse.
    pub fn can_collapse(self) -> bool {
        matches!(
            self,
            Variant::TwoPhotonQrmFull | Variant::TwoPhotonQrmPure | Variant::MultiqubitTwoPhoton
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::validation("model.variant", format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub variant: Variant,
    #[serde(default = "one")]
    pub omega_c: f64,
    /// Defaults to the resonance of the variant when absent from a config file.
    #[serde(default)]
    pub omega_q: Option<f64>,
    #[serde(default)]
    pub g: f64,
    #[serde(default)]
    pub g2: f64,
    #[serde(default)]
    pub g4: f64,
    #[serde(default)]
    pub j: f64,
    #[serde(default = "one_usize")]
    pub n_qubits: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

impl ModelSpec {
    /// Resonant defaults: `omega_c = 1`, `omega_q = 2` for two-photon variants
    /// and `1` otherwise, no coupling, one qubit.
    pub fn resonant(variant: Variant) -> Self {
        Self {
            variant,
            omega_c: 1.0,
            omega_q: None,
            g: 0.0,
            g2: 0.0,
            g4: 0.0,
            j: 0.0,
            n_qubits: 1,
        }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_g2(mut self, g2: f64) -> Self {
        self.g2 = g2;
        self
    }

    pub fn with_g4(mut self, g4: f64) -> Self {
        self.g4 = g4;
        self
    }

    pub fn with_j(mut self, j: f64) -> Self {
        self.j = j;
        self
    }

    pub fn with_omega_q(mut self, omega_q: f64) -> Self {
        self.omega_q = Some(omega_q);
        self
    }

    pub fn with_omega_c(mut self, omega_c: f64) -> Self {
        self.omega_c = omega_c;
        self
    }

    pub fn with_n_qubits(mut self, n: usize) -> Self {
        self.n_qubits = n;
        self
    }

    pub fn omega_q(&self) -> f64 {
        self.omega_q.unwrap_or(if self.variant.is_two_photon() {
            2.0 * self.omega_c
        } else {
            self.omega_c
        })
    }

    /// Number of qubit factors the Hilbert space must carry.
    pub fn space_qubits(&self) -> usize {
        if self.variant == Variant::MultiqubitTwoPhoton {
            self.n_qubits
        } else {
            1
        }
    }

    pub fn space(&self, fock_cutoff: usize) -> HilbertSpace {
        HilbertSpace::new(self.space_qubits(), fock_cutoff)
    }

    /// The coupling that sets the interaction scale of this variant.
    pub fn coupling(&self) -> f64 {
        if self.variant.is_two_photon() {
            self.g2
        } else {
            self.g
        }
    }

    pub fn with_coupling(self, value: f64) -> Self {
        if self.variant.is_two_photon() {
            self.with_g2(value)
        } else {
            self.with_g(value)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [("model.omega_c", self.omega_c), ("model.omega_q", self.omega_q())];
        for (field, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        let finite = [
            ("model.g", self.g),
            ("model.g2", self.g2),
            ("model.g4", self.g4),
            ("model.j", self.j),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::validation(field, format!("must be finite, got {v}")));
            }
        }
        if self.n_qubits == 0 {
            return Err(Error::validation("model.n_qubits", "must be >= 1"));
        }
        if self.variant != Variant::MultiqubitTwoPhoton && self.n_qubits != 1 {
            return Err(Error::validation(
                "model.n_qubits",
                format!("variant {} is single-qubit", self.variant),
            ));
        }
        Ok(())
    }

    fn check_space(&self, space: HilbertSpace) -> Result<()> {
        self.validate()?;
        if space.n_qubits() != self.space_qubits() {
            return Err(Error::Configuration(format!(
                "variant {} needs {} qubit(s), space has {}",
                self.variant,
                self.space_qubits(),
                space.n_qubits()
            )));
        }
        if space.fock_cutoff() < 2 {
            return Err(Error::Configuration(format!(
                "fock cutoff must be >= 2, got {}",
                space.fock_cutoff()
            )));
        }
        Ok(())
    }
}

fn term(space: HilbertSpace, qubit: Mat<C64>, boson: Mat<C64>) -> OperatorMatrix {
    embed(space, &[Some(qubit)], boson)
}

fn real_scale(m: &Mat<C64>, s: f64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// Builds the Hamiltonian selected by `spec.variant` on `space`.
///
/// Effective variants are forwarded to [`build_effective_hamiltonian`].
pub fn build_hamiltonian(spec: &ModelSpec, space: HilbertSpace) -> Result<OperatorMatrix> {
    spec.check_space(space)?;
    if spec.variant.is_effective() {
        return build_effective_hamiltonian(spec, space);
    }
    if spec.variant == Variant::MultiqubitTwoPhoton {
        return Ok(multiqubit(spec, space, Pauli::X));
    }
    let n_max = space.fock_cutoff();
    let dim_b = space.boson_dim();
    let (wc, wq) = (spec.omega_c, spec.omega_q());
    let id2 = factor::identity(2);
    let idb = factor::identity(dim_b);
    let a = factor::annihilation(n_max);
    let ad = factor::creation(n_max);
    let sz = factor::pauli(Pauli::Z);
    let sx = factor::pauli(Pauli::X);
    let sp = factor::pauli(Pauli::Plus);
    let sm = factor::pauli(Pauli::Minus);

    let mut h = term(space, id2.clone(), real_scale(&factor::number(n_max), wc));
    h += &term(space, real_scale(&sz, wq / 2.0), idb.clone());
    match spec.variant {
        Variant::Jc => {
            h += &term(space, real_scale(&sp, spec.g), a.clone());
            h += &term(space, real_scale(&sm, spec.g), ad.clone());
        }
        Variant::Qrm => {
            h += &term(space, real_scale(&sx, spec.g), &a + &ad);
        }
        Variant::TwoPhotonJc => {
            h += &term(space, real_scale(&sp, spec.g2), &a * &a);
            h += &term(space, real_scale(&sm, spec.g2), &ad * &ad);
        }
        Variant::TwoPhotonQrmFull => {
            h += &term(space, id2, real_scale(&idb, wc / 2.0));
            h += &term(space, real_scale(&sx, spec.g2), factor::quadrature_power(n_max, 2));
        }
        Variant::TwoPhotonQrmPure => {
            h += &term(space, id2, real_scale(&idb, wc / 2.0));
            h += &term(space, real_scale(&sx, spec.g2), &(&a * &a) + &(&ad * &ad));
        }
        _ => unreachable!("effective and multiqubit variants handled above"),
    }
    Ok(h)
}

/// Multi-qubit two-photon model with the spin operators taken along `spin`.
fn multiqubit(spec: &ModelSpec, space: HilbertSpace, spin: Pauli) -> OperatorMatrix {
    let n = space.n_qubits();
    let n_max = space.fock_cutoff();
    let s = factor::pauli(spin);
    let idb = factor::identity(space.boson_dim());
    let x2 = factor::quadrature_power(n_max, 2);
    let x4 = factor::quadrature_power(n_max, 4);
    let (wq, g2, g4) = (spec.omega_q(), spec.g2, spec.g4);

    let mut h = number(space).scale(spec.omega_c);
    let single = |i: usize| {
        let mut ops = vec![None; n];
        ops[i] = Some(s.clone());
        ops
    };
    for i in 0..n {
        let boson = &(&real_scale(&x2, g2) + &real_scale(&idb, wq / 2.0)) + &real_scale(&x4, g4);
        h += &embed(space, &single(i), boson);
    }
    if spec.j != 0.0 {
        for i in 0..n.saturating_sub(1) {
            let mut ops = vec![None; n];
            ops[i] = Some(s.clone());
            ops[i + 1] = Some(s.clone());
            h += &embed(space, &ops, real_scale(&idb, spec.j));
        }
    }
    h
}

/// Hamiltonian unitarily equivalent to [`build_hamiltonian`], arranged for fast
/// diagonalization.
///
/// For the multi-qubit model every qubit is rotated by a Hadamard, so each spin
/// term becomes diagonal and the matrix splits into independent spin sectors.
/// Other variants are returned unchanged. The Hadamard commutes with photon
/// parity, so parity labels carry over.
pub fn build_spectral_hamiltonian(spec: &ModelSpec, space: HilbertSpace) -> Result<OperatorMatrix> {
    if spec.variant == Variant::MultiqubitTwoPhoton {
        spec.check_space(space)?;
        Ok(multiqubit(spec, space, Pauli::Z))
    } else {
        build_hamiltonian(spec, space)
    }
}

/// Perturbative effective Hamiltonians, identity-proportional constants dropped.
///
/// The dispersive forms are second order (fourth order for `dispersive_jc`) in
/// the coupling over the detuning. Their sign conventions are fixed by direct
/// second-order perturbation theory on the exact models: with
/// `chi = 2 g2^2 / (2 omega_c - omega_q)` the pair-exchange shifts enter as `-chi`.
pub fn build_effective_hamiltonian(spec: &ModelSpec, space: HilbertSpace) -> Result<OperatorMatrix> {
    spec.check_space(space)?;
    let shifts = analytic_shifts(spec);
    let (wc, wq) = (spec.omega_c, spec.omega_q());
    // diagonal operator built from (sigma_z eigenvalue, photon number)
    let diag = |f: &dyn Fn(f64, f64) -> f64| {
        OperatorMatrix::from_diagonal(space, |i| {
            let sz = if space.qubit_state(i) == 0 { 1.0 } else { -1.0 };
            C64::new(f(sz, space.photons(i) as f64), 0.0)
        })
    };
    match spec.variant {
        Variant::BsEffective => {
            let bs = shifts.omega_bs()?;
            let jc = build_hamiltonian(&ModelSpec { variant: Variant::Jc, ..*spec }, space)?;
            Ok(&jc + &diag(&|sz, n| bs * sz / 2.0 + bs * sz * n))
        }
        Variant::TwoPhotonBsEffective => {
            let w2 = shifts.omega_2bs()?;
            let oq = shifts.omega_q_shift()?;
            let rwa = build_hamiltonian(&ModelSpec { variant: Variant::TwoPhotonJc, ..*spec }, space)?;
            let corr = diag(&|sz, n| {
                -w2 * n + (w2 + oq) * sz / 2.0 + (w2 / 2.0 + 2.0 * oq) * sz * (n + n * n)
            });
            Ok(&rwa + &corr)
        }
        Variant::DispersiveTwoPhotonRwa => {
            if 2.0 * wc - wq == 0.0 {
                return Err(Error::SingularDetuning { shift: "chi" });
            }
            let chi = shifts.chi()?;
            Ok(diag(&|sz, n| {
                (wc - chi) * n + (wq - chi) * sz / 2.0 - chi / 2.0 * sz * (n + n * n)
            }))
        }
        Variant::DispersiveTwoPhotonFull => {
            if 2.0 * wc - wq == 0.0 {
                return Err(Error::SingularDetuning { shift: "chi" });
            }
            let chi = shifts.chi()?;
            let w2 = shifts.omega_2bs()?;
            let oq = shifts.omega_q_shift()?;
            Ok(diag(&|sz, n| {
                (wc - w2 - chi) * n
                    + (wq + w2 + oq - chi) * sz / 2.0
                    + (w2 / 2.0 + 2.0 * oq - chi / 2.0) * sz * (n + n * n)
            }))
        }
        Variant::DispersiveJc => {
            if wc - wq == 0.0 {
                return Err(Error::SingularDetuning { shift: "chi_1" });
            }
            let chi1 = shifts.chi_1()?;
            let zeta = shifts.zeta()?;
            Ok(diag(&|sz, n| {
                (wc + zeta) * n + (wq - chi1 + zeta) * sz / 2.0 + (zeta - chi1) * sz * n + zeta * sz * n * n
            }))
        }
        other => Err(Error::Configuration(format!(
            "variant {other} has no effective Hamiltonian"
        ))),
    }
}

/// Perturbative frequency shifts, each evaluated on demand.
///
/// A shift with zero numerator is zero regardless of its denominator; a
/// nonzero numerator over a vanishing denominator is a
/// [`Error::SingularDetuning`] naming the shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticShifts {
    omega_c: f64,
    omega_q: f64,
    g: f64,
    g2: f64,
}

pub fn analytic_shifts(spec: &ModelSpec) -> AnalyticShifts {
    AnalyticShifts {
        omega_c: spec.omega_c,
        omega_q: spec.omega_q(),
        g: spec.g,
        g2: spec.g2,
    }
}

fn ratio(num: f64, den: f64, shift: &'static str) -> Result<f64> {
    if num == 0.0 {
        Ok(0.0)
    } else if den == 0.0 {
        Err(Error::SingularDetuning { shift })
    } else {
        Ok(num / den)
    }
}

impl AnalyticShifts {
    /// `2 g2^2 / (2 omega_c + omega_q)`
    pub fn omega_2bs(&self) -> Result<f64> {
        ratio(2.0 * self.g2 * self.g2, 2.0 * self.omega_c + self.omega_q, "omega_2bs")
    }

    /// `2 g2^2 / omega_q`
    pub fn omega_q_shift(&self) -> Result<f64> {
        ratio(2.0 * self.g2 * self.g2, self.omega_q, "omega_q_shift")
    }

    /// `2 g2^2 / (2 omega_c - omega_q)`
    pub fn chi(&self) -> Result<f64> {
        ratio(2.0 * self.g2 * self.g2, 2.0 * self.omega_c - self.omega_q, "chi")
    }

    /// `g^2 / (omega_c - omega_q)`
    pub fn chi_1(&self) -> Result<f64> {
        ratio(self.g * self.g, self.omega_c - self.omega_q, "chi_1")
    }

    /// `g^4 / (omega_c - omega_q)^3`
    pub fn zeta(&self) -> Result<f64> {
        ratio(self.g.powi(4), (self.omega_c - self.omega_q).powi(3), "zeta")
    }

    /// `g^2 / (omega_c + omega_q)`
    pub fn omega_bs(&self) -> Result<f64> {
        ratio(self.g * self.g, self.omega_c + self.omega_q, "omega_bs")
    }

    /// All six shifts, `None` where the denominator vanishes.
    pub fn table(&self) -> ShiftTable {
        ShiftTable {
            omega_2bs: self.omega_2bs().ok(),
            omega_q_shift: self.omega_q_shift().ok(),
            chi: self.chi().ok(),
            chi_1: self.chi_1().ok(),
            zeta: self.zeta().ok(),
            omega_bs: self.omega_bs().ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftTable {
    pub omega_2bs: Option<f64>,
    pub omega_q_shift: Option<f64>,
    pub chi: Option<f64>,
    pub chi_1: Option<f64>,
    pub zeta: Option<f64>,
    pub omega_bs: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubletEnergies {
    pub e_plus: f64,
    pub e_minus: f64,
    pub delta_plus: f64,
    pub delta_minus: f64,
}

/// Doublet energies of the resonant two-photon JC model relative to its ground
/// state, and the spacing to the previous doublet. Assumes `omega_q = 2 omega_c`.
pub fn analytic_doublet_energies(spec: &ModelSpec, n: usize) -> DoubletEnergies {
    let (wc, g2) = (spec.omega_c, spec.g2);
    let nf = n as f64;
    let root = ((nf + 1.0) * (nf + 2.0)).sqrt();
    let step = root - (nf * (nf + 1.0)).sqrt();
    DoubletEnergies {
        e_plus: wc * (nf + 2.0) + g2 * root,
        e_minus: wc * (nf + 2.0) - g2 * root,
        delta_plus: wc + g2 * step,
        delta_minus: wc - g2 * step,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Excitation number `a^dagger a + sigma_z / 2`.
    CJc,
    /// Weighted excitation number `a^dagger a + sigma_z`: a qubit excitation
    /// counts as two photons.
    C2ph,
    /// `sigma_z exp(i pi a^dagger a)`
    PiJc,
    /// `exp(i pi a^dagger a)`
    Pi2ph,
}

/// Conserved quantities of the single-qubit models. Defined on one-qubit spaces,
/// except `Pi2ph` which exists on any space.
pub fn symmetry_operator(space: HilbertSpace, which: Symmetry) -> Result<OperatorMatrix> {
    if which == Symmetry::Pi2ph {
        return Ok(photon_parity(space));
    }
    if space.n_qubits() != 1 {
        return Err(Error::InvalidSpace(format!(
            "{which:?} is defined for one qubit, space has {}",
            space.n_qubits()
        )));
    }
    Ok(OperatorMatrix::from_diagonal(space, |i| {
        let sz = if space.qubit_state(i) == 0 { 1.0 } else { -1.0 };
        let n = space.photons(i) as f64;
        let p = if space.photons(i).is_multiple_of(2) { 1.0 } else { -1.0 };
        C64::new(
            match which {
                Symmetry::CJc => n + sz / 2.0,
                Symmetry::C2ph => n + sz,
                Symmetry::PiJc => sz * p,
                Symmetry::Pi2ph => unreachable!(),
            },
            0.0,
        )
    }))
}

/// The discrete parity conserved by `variant`.
pub fn parity_symmetry(variant: Variant) -> Symmetry {
    if variant.is_two_photon() {
        Symmetry::Pi2ph
    } else {
        Symmetry::PiJc
    }
}
