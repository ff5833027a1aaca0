//! Lindblad master equation: superoperators, steady states and time evolution.
//!
//! Density matrices are vectorized by stacking columns, `vec(rho)[i + j d] = rho[i, j]`,
//! so that `vec(A rho B) = (B^T ⊗ A) vec(rho)`. With `rho' = L rho` the generator is
//!
//! ```text
//! L = -i (I ⊗ H - H^T ⊗ I) + sum_k r_k (conj(O_k) ⊗ O_k - 1/2 I ⊗ O_k^† O_k - 1/2 (O_k^† O_k)^T ⊗ I)
//! ```
//!
//! Superoperators are stored sparse: at Fock cutoff 40 with one qubit the
//! vectorized space already has 6724 entries.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_algebra::{annihilation, pauli, HilbertSpace, OperatorMatrix, Pauli, C64, ONE, ZERO};

/// Uniqueness threshold on the smallest singular value of the bordered generator.
pub const GAP_THRESHOLD: f64 = 1e-10;
/// Steady-state residual bound, relative to the Frobenius norm of `L`.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Local error bound per accepted integration step.
pub const STEP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladConfig {
    /// Cavity decay, `gamma D[a]`.
    pub gamma: f64,
    /// Qubit decay, `gamma_q D[sigma_-]` on every qubit.
    #[serde(default)]
    pub gamma_q: f64,
    /// Pure dephasing, `gamma_phi D[sigma_z]` on every qubit.
    #[serde(default)]
    pub gamma_phi: f64,
}

impl LindbladConfig {
    pub fn new(gamma: f64, gamma_q: f64, gamma_phi: f64) -> Self {
        Self {
            gamma,
            gamma_q,
            gamma_phi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("drive.gamma", self.gamma),
            ("drive.gamma_q", self.gamma_q),
            ("drive.gamma_phi", self.gamma_phi),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::validation(field, format!("rate must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    entries: Mat<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validated density matrix.
    pub fn new(space: HilbertSpace, entries: Mat<C64>) -> Result<Self> {
        let op = OperatorMatrix::new(space, entries)?;
        let rho = Self {
            space,
            entries: op.into_entries(),
        };
        rho.validate()?;
        Ok(rho)
    }

    pub fn pure(space: HilbertSpace, state: &[C64]) -> Result<Self> {
        if state.len() != space.total_dim() {
            return Err(Error::Shape(format!(
                "state has length {}, space dimension is {}",
                state.len(),
                space.total_dim()
            )));
        }
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let d = state.len();
        Self::new(
            space,
            Mat::from_fn(d, d, |i, j| state[i] * state[j].conj() / (norm * norm)),
        )
    }

    /// Every qubit in `|g>`, cavity in vacuum.
    pub fn ground(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        let k = space.index(space.qubit_dim() - 1, 0);
        let mut m = Mat::zeros(d, d);
        m[(k, k)] = ONE;
        Self { space, entries: m }
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        let mut m = Mat::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::new(1.0 / d as f64, 0.0);
        }
        Self { space, entries: m }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn entries(&self) -> &Mat<C64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).fold(ZERO, |acc, i| acc + self.entries[(i, i)])
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let herm = hermitian_part(&self.entries);
        let ev = herm
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > Self::HERMITIAN_TOL {
            return Err(Error::validation("rho", format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(Error::validation("rho", format!("trace is {tr}, expected 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -Self::POSITIVITY_TOL {
            return Err(Error::validation("rho", format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `1/2 || rho - sigma ||_1`
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Shape("density matrices live on different spaces".into()));
        }
        let diff = hermitian_part(&(&self.entries - &other.entries));
        let ev = diff
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
        Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn vectorize(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d * d).map(|k| self.entries[(k % d, k / d)]).collect()
    }

    fn unvectorize(space: HilbertSpace, v: &[C64]) -> Mat<C64> {
        let d = space.total_dim();
        Mat::from_fn(d, d, |i, j| v[i + j * d])
    }
}

fn hermitian_part(m: &Mat<C64>) -> Mat<C64> {
    let d = m.nrows();
    Mat::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Superoperator on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: HilbertSpace,
    matrix: SparseColMat<usize, C64>,
}

type Entry = (usize, usize, C64);

fn nonzeros(m: &Mat<C64>) -> Vec<Entry> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Appends `scale * (outer ⊗ inner)` where each factor is a list of nonzeros.
fn push_kron(out: &mut Vec<Entry>, d: usize, outer: &[Entry], inner: &[Entry], scale: C64) {
    for &(p, q, x) in outer {
        let xs = x * scale;
        for &(r, s, y) in inner {
            out.push((p * d + r, q * d + s, xs * y));
        }
    }
}

fn identity_entries(d: usize) -> Vec<Entry> {
    (0..d).map(|i| (i, i, ONE)).collect()
}

fn assemble(n: usize, mut entries: Vec<Entry>) -> Result<SparseColMat<usize, C64>> {
    entries.sort_unstable_by_key(|a| (a.1, a.0));
    let mut merged: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match merged.last_mut() {
            Some(t) if t.row == r && t.col == c => t.val += v,
            _ => merged.push(Triplet::new(r, c, v)),
        }
    }
    merged.retain(|t| t.val != ZERO);
    SparseColMat::try_new_from_triplets(n, n, &merged)
        .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))
}

impl Liouvillian {
    pub fn zero(space: HilbertSpace) -> Self {
        let n = space.total_dim().pow(2);
        Self {
            space,
            matrix: assemble(n, Vec::new()).expect("empty assembly"),
        }
    }

    fn from_entries(space: HilbertSpace, entries: Vec<Entry>) -> Result<Self> {
        let n = space.total_dim().pow(2);
        Ok(Self {
            space,
            matrix: assemble(n, entries)?,
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    /// Side of the superoperator matrix, `total_dim^2`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.as_ref().val().len()
    }

    pub fn matrix(&self) -> &SparseColMat<usize, C64> {
        &self.matrix
    }

    fn entries(&self) -> Vec<Entry> {
        let m = self.matrix.as_ref();
        let sym = m.symbolic();
        let (cp, ri, val) = (sym.col_ptr(), sym.row_idx(), m.val());
        let mut out = Vec::with_capacity(val.len());
        for j in 0..self.dim() {
            for k in cp[j]..cp[j + 1] {
                out.push((ri[k], j, val[k]));
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::Shape("Liouvillians live on different spaces".into()));
        }
        let mut e = self.entries();
        e.extend(other.entries());
        Self::from_entries(self.space, e)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.as_ref().val().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `y = L x`
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let m = self.matrix.as_ref();
        let sym = m.symbolic();
        let (cp, ri, val) = (sym.col_ptr(), sym.row_idx(), m.val());
        y.iter_mut().for_each(|v| *v = ZERO);
        for (j, &xj) in x.iter().enumerate() {
            if xj == ZERO {
                continue;
            }
            for k in cp[j]..cp[j + 1] {
                y[ri[k]] += val[k] * xj;
            }
        }
    }

    pub fn apply_to(&self, rho: &DensityMatrix) -> Result<Mat<C64>> {
        if rho.space != self.space {
            return Err(Error::Shape("density matrix and Liouvillian spaces differ".into()));
        }
        Ok(DensityMatrix::unvectorize(self.space, &self.apply(&rho.vectorize())))
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }
}

fn check_rate(rate: f64, field: &str) -> Result<()> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::validation(field, format!("rate must be >= 0, got {rate}")));
    }
    Ok(())
}

fn dissipator_entries(out: &mut Vec<Entry>, op: &OperatorMatrix, rate: f64) {
    if rate == 0.0 {
        return;
    }
    let d = op.dim();
    let o = op.entries();
    let o_conj = Mat::from_fn(d, d, |i, j| o[(i, j)].conj());
    let odo = op.adjoint().entries() * o;
    let odo_t = odo.transpose().to_owned();
    let id = identity_entries(d);
    let r = C64::new(rate, 0.0);
    let half = C64::new(-0.5 * rate, 0.0);
    push_kron(out, d, &nonzeros(&o_conj), &nonzeros(o), r);
    push_kron(out, d, &id, &nonzeros(&odo), half);
    push_kron(out, d, &nonzeros(&odo_t), &id, half);
}

/// `rate * D[op]` with `D[O] rho = O rho O^† - 1/2 {O^† O, rho}`.
pub fn dissipator(op: &OperatorMatrix, rate: f64) -> Result<Liouvillian> {
    check_rate(rate, "rate")?;
    let mut e = Vec::new();
    dissipator_entries(&mut e, op, rate);
    Liouvillian::from_entries(op.space(), e)
}

/// `-i [H, .]` in superoperator form.
pub fn hamiltonian_part(h: &OperatorMatrix) -> Result<Liouvillian> {
    let mut e = Vec::new();
    hamiltonian_entries(&mut e, h);
    Liouvillian::from_entries(h.space(), e)
}

fn hamiltonian_entries(out: &mut Vec<Entry>, h: &OperatorMatrix) {
    let d = h.dim();
    let id = identity_entries(d);
    let hnz = nonzeros(h.entries());
    let ht: Vec<Entry> = hnz.iter().map(|&(i, j, v)| (j, i, v)).collect();
    push_kron(out, d, &id, &hnz, C64::new(0.0, -1.0));
    push_kron(out, d, &ht, &id, C64::new(0.0, 1.0));
}

/// Generator with an arbitrary list of `(collapse operator, rate)` pairs.
pub fn build_liouvillian_with(h: &OperatorMatrix, collapse: &[(OperatorMatrix, f64)]) -> Result<Liouvillian> {
    let defect = h.hermiticity_defect();
    if defect > crate::spectra::HERMITIAN_TOL {
        return Err(Error::validation(
            "hamiltonian",
            format!("not Hermitian (relative defect {defect:.3e})"),
        ));
    }
    let mut e = Vec::new();
    hamiltonian_entries(&mut e, h);
    for (op, rate) in collapse {
        h.check_space(op)?;
        check_rate(*rate, "rate")?;
        dissipator_entries(&mut e, op, *rate);
    }
    Liouvillian::from_entries(h.space(), e)
}

/// Collapse operators of the standard configuration: `a` at `gamma`, and on
/// every qubit `sigma_-` at `gamma_q` and `sigma_z` at `gamma_phi`.
pub fn collapse_operators(space: HilbertSpace, cfg: &LindbladConfig) -> Result<Vec<(OperatorMatrix, f64)>> {
    cfg.validate()?;
    let mut ops = Vec::new();
    if cfg.gamma > 0.0 {
        ops.push((annihilation(space)?, cfg.gamma));
    }
    for q in 0..space.n_qubits() {
        if cfg.gamma_q > 0.0 {
            ops.push((pauli(space, Pauli::Minus, q)?, cfg.gamma_q));
        }
        if cfg.gamma_phi > 0.0 {
            ops.push((pauli(space, Pauli::Z, q)?, cfg.gamma_phi));
        }
    }
    Ok(ops)
}

pub fn build_liouvillian(h: &OperatorMatrix, cfg: &LindbladConfig) -> Result<Liouvillian> {
    build_liouvillian_with(h, &collapse_operators(h.space(), cfg)?)
}

/// Generator with row 0 replaced by the trace functional.
fn bordered(l: &Liouvillian) -> Result<SparseColMat<usize, C64>> {
    let d = l.space.total_dim();
    let mut e: Vec<Entry> = l.entries().into_iter().filter(|t| t.0 != 0).collect();
    e.extend((0..d).map(|i| (0, i + i * d, ONE)));
    assemble(l.dim(), e)
}

fn spmv(m: &SparseColMat<usize, C64>, x: &[C64]) -> Vec<C64> {
    let r = m.as_ref();
    let sym = r.symbolic();
    let (cp, ri, val) = (sym.col_ptr(), sym.row_idx(), r.val());
    let mut y = vec![ZERO; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        for k in cp[j]..cp[j + 1] {
            y[ri[k]] += val[k] * xj;
        }
    }
    y
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn col(v: &[C64]) -> Mat<C64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn uncol(m: &Mat<C64>) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

/// Stationary state of `L` with a uniqueness check.
///
/// Solves the generator with one row traded for the trace condition by sparse
/// LU, followed by two steps of iterative refinement. The smallest singular
/// value of that bordered matrix, estimated by inverse iteration, serves as
/// the spectral-gap proxy: it vanishes exactly when the null space of `L` is
/// degenerate.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    Ok(steady_state_report(l)?.rho)
}

#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub rho: DensityMatrix,
    /// Smallest singular value of the bordered generator.
    pub gap: f64,
    /// `||L rho|| / ||L||`
    pub relative_residual: f64,
}

pub fn steady_state_report(l: &Liouvillian) -> Result<SteadyStateReport> {
    let n = l.dim();
    let m = bordered(l)?;
    let lu = match m.sp_lu() {
        Ok(lu) => lu,
        Err(_) => return Err(Error::NonUniqueSteadyState { gap: 0.0 }),
    };
    let mut b = vec![ZERO; n];
    b[0] = ONE;
    let mut x = col(&b);
    lu.solve_in_place_with_conj(Conj::No, x.as_mut());
    let mut xv = uncol(&x);
    if xv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonUniqueSteadyState { gap: 0.0 });
    }
    for _ in 0..2 {
        let mx = spmv(&m, &xv);
        let r: Vec<C64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
        let mut dx = col(&r);
        lu.solve_in_place_with_conj(Conj::No, dx.as_mut());
        for (xi, di) in xv.iter_mut().zip(uncol(&dx)) {
            *xi += di;
        }
    }

    // inverse iteration on (M^† M)^{-1} for the smallest singular value
    let mut v = col(&(0..n).map(|i| C64::new(1.0 + (i % 7) as f64 * 0.1, 0.05 * (i % 3) as f64)).collect::<Vec<_>>());
    let mut sigma_inv = 0.0;
    for _ in 0..6 {
        let nv = v.norm_l2();
        v = &v * faer::Scale(C64::new(1.0 / nv, 0.0));
        lu.solve_transpose_in_place_with_conj(Conj::Yes, v.as_mut());
        lu.solve_in_place_with_conj(Conj::No, v.as_mut());
        sigma_inv = v.norm_l2().sqrt();
    }
    let gap = if sigma_inv.is_finite() && sigma_inv > 0.0 {
        1.0 / sigma_inv
    } else {
        0.0
    };
    if !(gap > GAP_THRESHOLD) {
        return Err(Error::NonUniqueSteadyState { gap });
    }

    let raw = DensityMatrix::unvectorize(l.space, &xv);
    let mut rho = hermitian_part(&raw);
    let d = rho.nrows();
    let tr = (0..d).fold(ZERO, |acc, i| acc + rho[(i, i)]);
    rho = &rho * faer::Scale(C64::new(1.0, 0.0) / tr);
    let rho = DensityMatrix { space: l.space, entries: rho };
    let residual = vec_norm(&l.apply(&rho.vectorize()));
    let norm = l.norm();
    let relative_residual = if norm == 0.0 { residual } else { residual / norm };
    if relative_residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "steady-state residual {relative_residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )));
    }
    rho.validate()?;
    Ok(SteadyStateReport {
        rho,
        gap,
        relative_residual,
    })
}

// Dormand-Prince 5(4) tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = ZERO;
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `rho' = L rho` from `rho0` up to `t_final`.
///
/// Adaptive Dormand-Prince 5(4) started at step `dt`; a step is accepted when
/// its embedded error estimate (largest entry) is below [`STEP_TOL`]. The
/// anti-Hermitian part accumulated from step errors is dropped at the end.
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    if rho0.space != l.space {
        return Err(Error::Shape("density matrix and Liouvillian spaces differ".into()));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::validation("t_final", format!("must be finite and >= 0, got {t_final}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation("dt", format!("must be > 0, got {dt}")));
    }
    let n = l.dim();
    let mut y = rho0.vectorize();
    let mut t = 0.0;
    let mut h = dt.min(t_final.max(f64::MIN_POSITIVE));
    let mut k1 = vec![ZERO; n];
    let mut k2 = vec![ZERO; n];
    let mut k3 = vec![ZERO; n];
    let mut k4 = vec![ZERO; n];
    let mut k5 = vec![ZERO; n];
    let mut k6 = vec![ZERO; n];
    let mut k7 = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    l.apply_into(&y, &mut k1);
    while t < t_final {
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }
        axpy_into(&mut tmp, &y, h, &[(A21, &k1)]);
        l.apply_into(&tmp, &mut k2);
        axpy_into(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        l.apply_into(&tmp, &mut k3);
        axpy_into(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        l.apply_into(&tmp, &mut k4);
        axpy_into(&mut tmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        l.apply_into(&tmp, &mut k5);
        axpy_into(&mut tmp, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        l.apply_into(&tmp, &mut k6);
        axpy_into(&mut y_new, &y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        l.apply_into(&y_new, &mut k7);
        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            err = err.max(e.norm());
        }
        if err <= STEP_TOL {
            t = if last { t_final } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (STEP_TOL / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * t_final.max(1.0) && t < t_final {
            return Err(Error::Stiffness { t, dt: h });
        }
    }
    let rho = DensityMatrix {
        space: l.space,
        entries: hermitian_part(&DensityMatrix::unvectorize(l.space, &y)),
    };
    rho.validate()?;
    Ok(rho)
}

/// `tr(rho op)`
pub fn expectation(rho: &DensityMatrix, op: &OperatorMatrix) -> Result<C64> {
    if rho.space != op.space() {
        return Err(Error::Shape("density matrix and operator spaces differ".into()));
    }
    let d = rho.dim();
    let (r, o) = (rho.entries(), op.entries());
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += r[(i, j)] * o[(j, i)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_algebra::{basis_state, number, OperatorMatrix};
    use rand::{Rng, SeedableRng};

    fn random_rho(space: HilbertSpace, rng: &mut impl Rng) -> DensityMatrix {
        let d = space.total_dim();
        let a = Mat::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = &a * a.adjoint();
        let tr = (0..d).fold(ZERO, |acc, i| acc + m[(i, i)]);
        DensityMatrix::new(space, &m * faer::Scale(ONE / tr)).unwrap()
    }

    fn random_hermitian(space: HilbertSpace, rng: &mut impl Rng) -> OperatorMatrix {
        let d = space.total_dim();
        let a = Mat::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        OperatorMatrix::new(space, hermitian_part(&a)).unwrap()
    }

    #[test]
    fn zero_rate_dissipator_is_zero() {
        let s = HilbertSpace::new(1, 3);
        let d = dissipator(&annihilation(s).unwrap(), 0.0).unwrap();
        assert_eq!(d.nnz(), 0);
        assert!(dissipator(&annihilation(s).unwrap(), -1.0).is_err());
    }

    #[test]
    fn single_photon_decay() {
        let s = HilbertSpace::new(0, 3);
        let d = dissipator(&annihilation(s).unwrap(), 1.0).unwrap();
        let rho = DensityMatrix::pure(s, &basis_state(s, 0, 1)).unwrap();
        let out = d.apply_to(&rho).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = match (i, j) {
                    (0, 0) => 1.0,
                    (1, 1) => -1.0,
                    _ => 0.0,
                };
                assert!((out[(i, j)] - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dissipator_preserves_trace() {
        let s = HilbertSpace::new(1, 2);
        let d = dissipator(&pauli(s, Pauli::Minus, 0).unwrap(), 0.7).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let out = d.apply_to(&random_rho(s, &mut rng)).unwrap();
            let tr = (0..s.total_dim()).fold(ZERO, |acc, i| acc + out[(i, i)]);
            assert!(tr.norm() < 1e-14);
        }
    }

    #[test]
    fn matches_dense_definition() {
        let s = HilbertSpace::new(1, 2);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let h = random_hermitian(s, &mut rng);
        let cfg = LindbladConfig::new(0.3, 0.2, 0.1);
        let l = build_liouvillian(&h, &cfg).unwrap();
        let rho = random_rho(s, &mut rng);
        let got = l.apply_to(&rho).unwrap();
        let r = rho.entries();
        let hm = h.entries();
        let i = C64::new(0.0, 1.0);
        let mut want = (r * hm - hm * r) * faer::Scale(i);
        for (op, rate) in collapse_operators(s, &cfg).unwrap() {
            let o = op.entries();
            let od = o.adjoint().to_owned();
            let odo = &od * o;
            let term = o * r * &od - (&odo * r + r * &odo) * faer::Scale(C64::new(0.5, 0.0));
            want += term * faer::Scale(C64::new(rate, 0.0));
        }
        assert!((&got - &want).norm_max() < 1e-13);
    }

    #[test]
    fn trivial_generator_is_zero() {
        let s = HilbertSpace::new(1, 2);
        let l = build_liouvillian(&OperatorMatrix::zeros(s), &LindbladConfig::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(l.nnz(), 0);
        assert!(matches!(steady_state(&l), Err(Error::NonUniqueSteadyState { .. })));
    }

    #[test]
    fn spectrum_contracts() {
        let s = HilbertSpace::new(1, 2);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..5 {
            let h = random_hermitian(s, &mut rng);
            let l = build_liouvillian(&h, &LindbladConfig::new(0.4, 0.1, 0.05)).unwrap();
            let ev = l.to_dense().eigenvalues().unwrap();
            assert!(ev.iter().all(|z| z.re <= 1e-10));
        }
    }

    #[test]
    fn damped_cavity_relaxes_to_vacuum() {
        let s = HilbertSpace::new(1, 5);
        let h = number(s);
        let l = build_liouvillian(&h, &LindbladConfig::new(1.0, 0.5, 0.0)).unwrap();
        let rho = steady_state(&l).unwrap();
        assert!(rho.trace_distance(&DensityMatrix::ground(s)).unwrap() < 1e-12);
    }

    #[test]
    fn evolve_trivial_and_decay() {
        let s = HilbertSpace::new(0, 4);
        let rho0 = DensityMatrix::pure(s, &basis_state(s, 0, 1)).unwrap();
        let same = evolve(&rho0, &Liouvillian::zero(s), 3.0, 0.1).unwrap();
        assert!(same.trace_distance(&rho0).unwrap() < 1e-15);
        let l = build_liouvillian(&OperatorMatrix::zeros(s), &LindbladConfig::new(0.8, 0.0, 0.0)).unwrap();
        for t in [0.5, 1.0, 3.0] {
            let rho = evolve(&rho0, &l, t, 0.01).unwrap();
            let n = expectation(&rho, &number(s)).unwrap().re;
            assert!((n - (-0.8 * t).exp()).abs() < 1e-8, "{t}: {n}");
        }
    }

    #[test]
    fn expectation_basics() {
        let s = HilbertSpace::new(1, 3);
        let mixed = DensityMatrix::maximally_mixed(s);
        let id = OperatorMatrix::identity(s);
        assert!((expectation(&mixed, &id).unwrap() - ONE).norm() < 1e-15);
        assert!(expectation(&mixed, &pauli(s, Pauli::Z, 0).unwrap()).unwrap().norm() < 1e-15);
        let two = DensityMatrix::pure(s, &basis_state(s, 1, 2)).unwrap();
        assert!((expectation(&two, &number(s)).unwrap().re - 2.0).abs() < 1e-15);
        assert!(expectation(&two, &OperatorMatrix::identity(HilbertSpace::new(1, 4))).is_err());
    }

    #[test]
    fn density_matrix_invariants_enforced() {
        let s = HilbertSpace::new(0, 1);
        let mut m = Mat::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(s, m.clone()).is_err());
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(s, m.clone()).is_err());
        m[(1, 0)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(s, m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.9, 0.0);
        m[(1, 0)] = C64::new(0.9, 0.0);
        assert!(DensityMatrix::new(s, m).is_err());
    }

    #[test]
    fn config_rejects_negative_rates() {
        let err = LindbladConfig::new(-1e-3, 0.0, 0.0).validate().unwrap_err();
        assert!(err.to_string().contains("drive.gamma"));
    }
}
