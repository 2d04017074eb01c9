//! Dense complex linear algebra shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Hermitian eigendecompositions
//! are delegated to `faer`, which is an order of magnitude faster than the
//! nalgebra routine at the 2^12 dimensions reached by exact diagonalization.
//!
//! Tensor-product layout: a state on an ordered list of sites stores the digit
//! of the k-th site at place k (site 0 least significant). Local operators use
//! the ordinary Kronecker convention instead: the first listed site is the most
//! significant factor, so `kron(a, b)` acts as `a` on the first site. The
//! [`LocalAction`] helper translates between the two.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Environment variable overriding the default memory budget.
pub const BUDGET_ENV: &str = "ERGOSCOPE_BUDGET_BYTES";

/// Upper bound on memory used by dense vectors and matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub bytes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { bytes: 2 << 30 }
    }
}

impl Budget {
    pub fn new(bytes: u64) -> Self {
        Budget { bytes }
    }

    /// Default budget, overridden by `ERGOSCOPE_BUDGET_BYTES` when set.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(Budget::new)
            .unwrap_or_default()
    }

    /// Hilbert-space dimension `d^n`, or a budget error if it does not fit a vector.
    pub fn vector_dim(&self, d: usize, n: usize) -> Result<usize> {
        let dim = checked_dim(d, n).ok_or(Error::Budget {
            required: u128::MAX,
            budget: self.bytes,
        })?;
        let required = dim * 16;
        if required > self.bytes as u128 {
            return Err(Error::Budget {
                required,
                budget: self.bytes,
            });
        }
        Ok(dim as usize)
    }

    /// Like [`Budget::vector_dim`] but for a dense `dim x dim` matrix.
    pub fn matrix_dim(&self, d: usize, n: usize) -> Result<usize> {
        let dim = checked_dim(d, n).ok_or(Error::Budget {
            required: u128::MAX,
            budget: self.bytes,
        })?;
        let required = dim.saturating_mul(dim).saturating_mul(16);
        if required > self.bytes as u128 {
            return Err(Error::Budget {
                required,
                budget: self.bytes,
            });
        }
        Ok(dim as usize)
    }
}

fn checked_dim(d: usize, n: usize) -> Option<u128> {
    (d as u128).checked_pow(u32::try_from(n).ok()?)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Full Hermitian eigendecomposition. Only the lower triangle is read.
pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh needs a square matrix");
    if n == 0 {
        return Ok(Eigh {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    if is_real(m) {
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let evd = a
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        Ok(Eigh {
            values: (0..n).map(|k| s[k]).collect(),
            vectors: CMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)),
        })
    } else {
        let a = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| m[(i, j)]);
        let evd = a
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        Ok(Eigh {
            values: (0..n).map(|k| s[k].re).collect(),
            vectors: CMatrix::from_fn(n, n, |i, j| u[(i, j)]),
        })
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigvalsh needs a square matrix");
    if n == 0 {
        return Ok(vec![]);
    }
    let mut values = if is_real(m) {
        let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        a.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?
    } else {
        let a = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| m[(i, j)]);
        a.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Frobenius norm of `m - m†` relative to the Frobenius norm of `m`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut diff = 0.0;
    for j in 0..n {
        for i in 0..n {
            diff += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    let scale = m.norm();
    if scale == 0.0 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

/// Relative tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Validates Hermiticity and returns the symmetrized matrix `(m + m†)/2`.
pub fn symmetrize(m: &CMatrix, what: &str) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::arg(format!("{what} is not square")));
    }
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian {
            what: what.to_string(),
            deviation,
        });
    }
    if deviation > 0.0 {
        log::warn!("{what}: symmetrizing matrix with relative deviation {deviation:e}");
    }
    Ok((m + m.adjoint()) * C64::new(0.5, 0.0))
}

/// Largest deviation of `u† u` from the identity, entrywise.
pub fn unitary_deviation(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u;
    let n = p.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// Operator norm of a Hermitian matrix: largest absolute eigenvalue.
pub fn hermitian_norm(m: &CMatrix) -> Result<f64> {
    let values = eigvalsh(m)?;
    Ok(values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let e = eigh(h)?;
    let phases = CVector::from_iterator(e.values.len(), e.values.iter().map(|&v| C64::from_polar(1.0, -t * v)));
    let scaled = CMatrix::from_fn(e.vectors.nrows(), e.vectors.ncols(), |i, j| {
        e.vectors[(i, j)] * phases[j]
    });
    Ok(scaled * e.vectors.adjoint())
}

/// `V diag(f(λ)) V†` for a Hermitian matrix.
pub fn hermitian_function(e: &Eigh, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = e.vectors.nrows();
    let weights: Vec<f64> = e.values.iter().map(|&v| f(v)).collect();
    let scaled = CMatrix::from_fn(n, n, |i, j| e.vectors[(i, j)] * weights[j]);
    scaled * e.vectors.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Haar-random unitary of size `n` (QR of a Ginibre matrix with phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    CMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q[(i, j)] * phase
    })
}

/// Random Hermitian matrix with entries of order one (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Random full-rank density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    let m = m / C64::new(tr, 0.0);
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Index bookkeeping for an operator on a few sites acting inside a larger
/// tensor-product space.
///
/// `positions[m]` is the digit place of the operator's m-th factor in the
/// host space; the operator's local index follows the Kronecker convention.
#[derive(Debug, Clone)]
pub struct LocalAction {
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl LocalAction {
    pub fn new(d: usize, host_sites: usize, positions: &[usize]) -> Self {
        let k = positions.len();
        let sub = d.pow(k as u32);
        let dim = d.pow(host_sites as u32);
        let strides: Vec<usize> = positions.iter().map(|&p| d.pow(p as u32)).collect();
        let offsets = (0..sub)
            .map(|b| {
                let mut rest = b;
                let mut off = 0;
                for m in (0..k).rev() {
                    off += (rest % d) * strides[m];
                    rest /= d;
                }
                off
            })
            .collect();
        let bases = (0..dim)
            .filter(|&idx| strides.iter().all(|&s| (idx / s) % d == 0))
            .collect();
        LocalAction { offsets, bases }
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    /// `psi <- op psi` in place.
    pub fn apply(&self, op: &CMatrix, psi: &mut [C64]) {
        let sub = self.offsets.len();
        let mut gathered = vec![ZERO; sub];
        for &base in &self.bases {
            for (g, &off) in gathered.iter_mut().zip(&self.offsets) {
                *g = psi[base + off];
            }
            for (b, &off) in self.offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (a, g) in gathered.iter().enumerate() {
                    acc += op[(b, a)] * g;
                }
                psi[base + off] = acc;
            }
        }
    }

    /// `<psi| op |psi>`.
    pub fn expectation(&self, op: &CMatrix, psi: &[C64]) -> C64 {
        let sub = self.offsets.len();
        let mut gathered = vec![ZERO; sub];
        let mut total = ZERO;
        for &base in &self.bases {
            for (g, &off) in gathered.iter_mut().zip(&self.offsets) {
                *g = psi[base + off];
            }
            for b in 0..sub {
                let mut acc = ZERO;
                for (a, g) in gathered.iter().enumerate() {
                    acc += op[(b, a)] * g;
                }
                total += gathered[b].conj() * acc;
            }
        }
        total
    }

    /// `Tr(op rho)` with `rho` a density matrix of the host space.
    pub fn expectation_mixed(&self, op: &CMatrix, rho: &CMatrix) -> C64 {
        let mut total = ZERO;
        for &base in &self.bases {
            for (b, &ob) in self.offsets.iter().enumerate() {
                for (a, &oa) in self.offsets.iter().enumerate() {
                    total += op[(b, a)] * rho[(base + oa, base + ob)];
                }
            }
        }
        total
    }

    /// `target += embed(op)`.
    pub fn accumulate(&self, op: &CMatrix, target: &mut CMatrix) {
        for &base in &self.bases {
            for (b, &ob) in self.offsets.iter().enumerate() {
                for (a, &oa) in self.offsets.iter().enumerate() {
                    let v = op[(b, a)];
                    if v != ZERO {
                        target[(base + ob, base + oa)] += v;
                    }
                }
            }
        }
    }

    /// `rho <- op rho op†` in place.
    pub fn conjugate(&self, op: &CMatrix, rho: &mut CMatrix) {
        let n = rho.nrows();
        for j in 0..n {
            self.apply(op, rho.column_mut(j).as_mut_slice());
        }
        let mut t = rho.adjoint();
        for j in 0..n {
            self.apply(op, t.column_mut(j).as_mut_slice());
        }
        *rho = t.adjoint();
    }
}

/// Partial-trace index table: for a host of `n` sites of dimension `d`, maps
/// each host index to `(kept index, traced index)` where `keep` lists digit
/// places in ascending order.
pub(crate) fn split_indices(d: usize, n: usize, keep: &[usize]) -> Vec<(usize, usize)> {
    let dim = d.pow(n as u32);
    let keep_set: Vec<bool> = (0..n).map(|p| keep.contains(&p)).collect();
    (0..dim)
        .map(|idx| {
            let mut rest = idx;
            let (mut kept, mut traced) = (0usize, 0usize);
            let (mut kp, mut tp) = (1usize, 1usize);
            for &is_kept in &keep_set {
                let digit = rest % d;
                rest /= d;
                if is_kept {
                    kept += digit * kp;
                    kp *= d;
                } else {
                    traced += digit * tp;
                    tp *= d;
                }
            }
            (kept, traced)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn eigh_reconstructs_complex_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(7, &mut rng);
        let e = eigh(&h).unwrap();
        let back = hermitian_function(&e, |x| x);
        assert!((back - &h).norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary(5, &mut rng);
        assert!(unitary_deviation(&u) < 1e-12);
    }

    #[test]
    fn local_action_matches_kronecker_embedding() {
        // X on digit place 2 of a 3-qubit host equals X ⊗ 1 ⊗ 1 in kron order.
        let act = LocalAction::new(2, 3, &[2]);
        let mut full = CMatrix::zeros(8, 8);
        act.accumulate(&pauli_x(), &mut full);
        let id4 = CMatrix::identity(4, 4);
        assert!((full - kron(&pauli_x(), &id4)).norm() < 1e-15);

        // Two-site operator: first factor most significant.
        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let zx = kron(&z, &pauli_x());
        let act = LocalAction::new(2, 2, &[1, 0]);
        let mut full = CMatrix::zeros(4, 4);
        act.accumulate(&zx, &mut full);
        assert!((full - &zx).norm() < 1e-15);
    }

    #[test]
    fn budget_rejects_large_dense_matrix() {
        let budget = Budget::new(1 << 20);
        assert!(budget.matrix_dim(2, 8).is_ok());
        assert!(matches!(budget.matrix_dim(2, 10), Err(Error::Budget { .. })));
        assert!(Budget::default().vector_dim(2, 200).is_err());
    }

    #[test]
    fn propagator_of_pauli_x() {
        let u = unitary_propagator(&pauli_x(), std::f64::consts::FRAC_PI_2).unwrap();
        // exp(-i π/2 X) = -i X
        let expected = pauli_x() * C64::new(0.0, -1.0);
        assert!((u - expected).norm() < 1e-12);
    }
}
