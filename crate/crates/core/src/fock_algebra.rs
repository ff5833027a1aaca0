//! Elementary operators on a truncated qubits-plus-oscillator Hilbert space.
//!
//! Factor order is fixed: qubit 0, qubit 1, ..., qubit N-1, then the boson
//! mode. A composite basis index is `q * (n_max + 1) + n`, where `q` is the
//! qubit register state (qubit 0 most significant) and `n` the photon number.
//! Each qubit uses the basis `{|e>, |g>}` in that order, so `sigma_z = diag(+1, -1)`.
//!
//! Truncation: `a^dagger |n_max> = 0`. Operator products such as `(a + a^dagger)^2`
//! are formed from the truncated matrices, so the top Fock level is not exact.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = c64;

pub(crate) const ZERO: C64 = c64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = c64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    n_qubits: usize,
    fock_cutoff: usize,
}

impl HilbertSpace {
    pub fn new(n_qubits: usize, fock_cutoff: usize) -> Self {
        Self {
            n_qubits,
            fock_cutoff,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Largest photon number kept, `n_max`.
    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn boson_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn total_dim(&self) -> usize {
        self.qubit_dim() * self.boson_dim()
    }

    pub fn index(&self, qubit_state: usize, photons: usize) -> usize {
        debug_assert!(qubit_state < self.qubit_dim() && photons <= self.fock_cutoff);
        qubit_state * self.boson_dim() + photons
    }

    pub fn photons(&self, index: usize) -> usize {
        index % self.boson_dim()
    }

    pub fn qubit_state(&self, index: usize) -> usize {
        index / self.boson_dim()
    }

    /// Same qubit count with a different Fock cutoff.
    pub fn with_cutoff(&self, fock_cutoff: usize) -> Self {
        Self::new(self.n_qubits, fock_cutoff)
    }

    fn require_boson(&self) -> Result<()> {
        if self.fock_cutoff == 0 {
            return Err(Error::InvalidSpace(
                "boson operators need fock_cutoff >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Dense complex square matrix acting on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpace,
    entries: Mat<C64>,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpace, entries: Mat<C64>) -> Result<Self> {
        let d = space.total_dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::Shape(format!(
                "expected {d}x{d} matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { space, entries })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space,
            entries: Mat::zeros(d, d),
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self {
            space,
            entries: Mat::identity(d, d),
        }
    }

    pub fn from_diagonal(space: HilbertSpace, diag: impl Fn(usize) -> C64) -> Self {
        let mut op = Self::zeros(space);
        for i in 0..space.total_dim() {
            op.entries[(i, i)] = diag(i);
        }
        op
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Mat<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            entries: self.entries.adjoint().to_owned(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            space: self.space,
            entries: Mat::from_fn(self.dim(), self.dim(), |i, j| self.entries[(i, j)] * factor),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_space(rhs)?;
        Ok(Self {
            space: self.space,
            entries: &self.entries * &rhs.entries,
        })
    }

    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        Ok(&self.matmul(rhs)? - &rhs.matmul(self)?)
    }

    pub fn pow(&self, exponent: u32) -> Self {
        let mut out = Self::identity(self.space);
        for _ in 0..exponent {
            out.entries = &out.entries * &self.entries;
        }
        out
    }

    pub fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::Shape(format!(
                "operator spaces differ: {:?} vs {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                m = m.max(self.entries[(i, j)].norm());
            }
        }
        m
    }

    /// `max |H - H^dagger|` divided by the Frobenius norm (0 for the zero matrix).
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                let diff = self.entries[(i, j)] - self.entries[(j, i)].conj();
                worst = worst.max(diff.norm());
            }
        }
        let n = self.norm();
        if n == 0.0 {
            worst
        } else {
            worst / n
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol
    }

    pub fn is_real(&self) -> bool {
        let d = self.dim();
        (0..d).all(|j| (0..d).all(|i| self.entries[(i, j)].im == 0.0))
    }

    /// Real part of the diagonal, for operators known to be diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|j| (0..d).all(|i| i == j || self.entries[(i, j)] == ZERO))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).fold(ZERO, |acc, i| acc + self.entries[(i, i)])
    }

    pub fn apply(&self, vector: &[C64]) -> Vec<C64> {
        let d = self.dim();
        assert_eq!(vector.len(), d);
        (0..d)
            .map(|i| (0..d).fold(ZERO, |acc, j| acc + self.entries[(i, j)] * vector[j]))
            .collect()
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        OperatorMatrix {
            space: self.space,
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        OperatorMatrix {
            space: self.space,
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs).expect("operator spaces differ")
    }
}

impl Mul<&OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        rhs.scale(self)
    }
}

impl Mul<&OperatorMatrix> for C64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        let d = rhs.dim();
        OperatorMatrix {
            space: rhs.space,
            entries: Mat::from_fn(d, d, |i, j| rhs.entries[(i, j)] * self),
        }
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&OperatorMatrix> for OperatorMatrix {
    fn add_assign(&mut self, rhs: &OperatorMatrix) {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        self.entries += &rhs.entries;
    }
}

/// Pauli-type single-qubit operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for ja in 0..ac {
        for ia in 0..ar {
            let x = a[(ia, ja)];
            if x == ZERO {
                continue;
            }
            for jb in 0..bc {
                for ib in 0..br {
                    out[(ia * br + ib, ja * bc + jb)] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Matrices on a single factor (one qubit or the boson mode).
pub mod factor {
    use super::*;

    pub fn identity(dim: usize) -> Mat<C64> {
        Mat::identity(dim, dim)
    }

    pub fn pauli(which: Pauli) -> Mat<C64> {
        let i = c64::new(0.0, 1.0);
        let (a, b, c, d) = match which {
            Pauli::X => (ZERO, ONE, ONE, ZERO),
            Pauli::Y => (ZERO, -i, i, ZERO),
            Pauli::Z => (ONE, ZERO, ZERO, -ONE),
            Pauli::Plus => (ZERO, ONE, ZERO, ZERO),
            Pauli::Minus => (ZERO, ZERO, ONE, ZERO),
        };
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = a;
        m[(0, 1)] = b;
        m[(1, 0)] = c;
        m[(1, 1)] = d;
        m
    }

    /// Truncated annihilation operator on `n_max + 1` Fock levels.
    pub fn annihilation(n_max: usize) -> Mat<C64> {
        let mut m = Mat::zeros(n_max + 1, n_max + 1);
        for n in 1..=n_max {
            m[(n - 1, n)] = c64::new((n as f64).sqrt(), 0.0);
        }
        m
    }

    pub fn creation(n_max: usize) -> Mat<C64> {
        annihilation(n_max).adjoint().to_owned()
    }

    pub fn number(n_max: usize) -> Mat<C64> {
        Mat::from_fn(n_max + 1, n_max + 1, |i, j| {
            if i == j {
                c64::new(i as f64, 0.0)
            } else {
                ZERO
            }
        })
    }

    pub fn parity(n_max: usize) -> Mat<C64> {
        Mat::from_fn(n_max + 1, n_max + 1, |i, j| {
            if i != j {
                ZERO
            } else if i % 2 == 0 {
                ONE
            } else {
                -ONE
            }
        })
    }

    /// `(a + a^dagger)^power` built from truncated ladder matrices.
    pub fn quadrature_power(n_max: usize, power: u32) -> Mat<C64> {
        let x = &annihilation(n_max) + &creation(n_max);
        let mut out = identity(n_max + 1);
        for _ in 0..power {
            out = &out * &x;
        }
        out
    }
}

/// Kronecker product of per-factor operators in the fixed order
/// (qubit 0, ..., qubit N-1, boson).
pub fn tensor(space: HilbertSpace, factors: &[Mat<C64>]) -> Result<OperatorMatrix> {
    let expected = space.n_qubits() + 1;
    if factors.len() != expected {
        return Err(Error::Shape(format!(
            "expected {expected} factors (qubits then boson), got {}",
            factors.len()
        )));
    }
    for (k, f) in factors.iter().enumerate() {
        let want = if k + 1 == expected {
            space.boson_dim()
        } else {
            2
        };
        if f.nrows() != want || f.ncols() != want {
            return Err(Error::Shape(format!(
                "factor {k} is {}x{}, expected {want}x{want}",
                f.nrows(),
                f.ncols()
            )));
        }
    }
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    OperatorMatrix::new(space, acc)
}

/// `qubit_ops[i]` on qubit `i` (identity when `None`), tensored with `boson`.
pub(crate) fn embed(
    space: HilbertSpace,
    qubit_ops: &[Option<Mat<C64>>],
    boson: Mat<C64>,
) -> OperatorMatrix {
    debug_assert_eq!(qubit_ops.len(), space.n_qubits());
    let mut factors: Vec<Mat<C64>> = qubit_ops
        .iter()
        .map(|op| op.clone().unwrap_or_else(|| factor::identity(2)))
        .collect();
    factors.push(boson);
    tensor(space, &factors).expect("embed builds consistent factors")
}

fn boson_only(space: HilbertSpace, boson: Mat<C64>) -> OperatorMatrix {
    embed(space, &vec![None; space.n_qubits()], boson)
}

pub fn annihilation(space: HilbertSpace) -> Result<OperatorMatrix> {
    space.require_boson()?;
    Ok(boson_only(space, factor::annihilation(space.fock_cutoff())))
}

pub fn creation(space: HilbertSpace) -> Result<OperatorMatrix> {
    space.require_boson()?;
    Ok(boson_only(space, factor::creation(space.fock_cutoff())))
}

pub fn number(space: HilbertSpace) -> OperatorMatrix {
    boson_only(space, factor::number(space.fock_cutoff()))
}

/// `(a + a^dagger)^power`, identity on the qubits.
pub fn quadrature_power(space: HilbertSpace, power: u32) -> Result<OperatorMatrix> {
    space.require_boson()?;
    Ok(boson_only(
        space,
        factor::quadrature_power(space.fock_cutoff(), power),
    ))
}

/// Pauli operator on qubit `qubit_index`, identity elsewhere.
pub fn pauli(space: HilbertSpace, which: Pauli, qubit_index: usize) -> Result<OperatorMatrix> {
    if qubit_index >= space.n_qubits() {
        return Err(Error::InvalidIndex {
            index: qubit_index,
            n_qubits: space.n_qubits(),
        });
    }
    let mut ops = vec![None; space.n_qubits()];
    ops[qubit_index] = Some(factor::pauli(which));
    Ok(embed(space, &ops, factor::identity(space.boson_dim())))
}

/// Photon-number parity `exp(i pi a^dagger a)`.
pub fn photon_parity(space: HilbertSpace) -> OperatorMatrix {
    OperatorMatrix::from_diagonal(space, |i| {
        if space.photons(i).is_multiple_of(2) {
            ONE
        } else {
            -ONE
        }
    })
}

/// Total-excitation parity `sigma_z exp(i pi a^dagger a)` for a single qubit.
pub fn excitation_parity(space: HilbertSpace) -> Result<OperatorMatrix> {
    if space.n_qubits() != 1 {
        return Err(Error::InvalidSpace(
            "excitation parity is defined for one qubit".into(),
        ));
    }
    Ok(OperatorMatrix::from_diagonal(space, |i| {
        let sz = if space.qubit_state(i) == 0 { 1.0 } else { -1.0 };
        let p = if space.photons(i).is_multiple_of(2) { 1.0 } else { -1.0 };
        c64::new(sz * p, 0.0)
    }))
}

/// Hadamard on every qubit, identity on the boson: maps `sigma_z <-> sigma_x`.
///
/// Relates the `sigma_z`-diagonal qubit term of the single-qubit models to the
/// `sigma_x` spin term used by the multi-qubit model.
pub fn qubit_hadamard(space: HilbertSpace) -> OperatorMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = Mat::zeros(2, 2);
    h[(0, 0)] = c64::new(s, 0.0);
    h[(0, 1)] = c64::new(s, 0.0);
    h[(1, 0)] = c64::new(s, 0.0);
    h[(1, 1)] = c64::new(-s, 0.0);
    embed(
        space,
        &vec![Some(h); space.n_qubits()],
        factor::identity(space.boson_dim()),
    )
}

/// Basis vector `|qubit_state, photons>`.
pub fn basis_state(space: HilbertSpace, qubit_state: usize, photons: usize) -> Vec<C64> {
    let mut v = vec![ZERO; space.total_dim()];
    v[space.index(qubit_state, photons)] = ONE;
    v
}
