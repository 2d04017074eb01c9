//! Pure and mixed states on site sets, reduced states, entropies and distances.
//!
//! Basis convention: `|0>` is the `s^z = +1` state. The digit of the k-th
//! site of a (sorted) support sits at place k, so in 1D site 1 is the least
//! significant digit of the global basis index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianOperator;
use crate::lattice::{Lattice, Site};
use crate::linalg::{self, split_indices, CMatrix, CVector, LocalAction, C64, ONE};

/// Pure vectors must have unit norm within this tolerance.
pub const NORM_TOL: f64 = 1e-10;
/// Eigenvalues of a density matrix above `-POSITIVITY_TOL` are clamped to zero.
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure {
        support: Vec<Site>,
        local_dim: usize,
        vector: CVector,
    },
    Mixed {
        support: Vec<Site>,
        local_dim: usize,
        matrix: CMatrix,
    },
}

fn check_support(support: &[Site], local_dim: usize, len: usize) -> Result<()> {
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidState("support must be strictly increasing".into()));
    }
    let dim = (local_dim as u128).checked_pow(support.len() as u32);
    if dim != Some(len as u128) {
        return Err(Error::InvalidState(format!(
            "dimension {len} does not match {} sites of dimension {local_dim}",
            support.len()
        )));
    }
    Ok(())
}

impl QuantumState {
    /// Pure state; the vector must be normalized within [`NORM_TOL`].
    pub fn pure(support: Vec<Site>, local_dim: usize, vector: CVector) -> Result<Self> {
        check_support(&support, local_dim, vector.len())?;
        let norm = vector.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("vector norm {norm} is not 1")));
        }
        Ok(QuantumState::Pure {
            support,
            local_dim,
            vector,
        })
    }

    /// Density matrix; checks Hermiticity, unit trace and positivity.
    pub fn mixed(support: Vec<Site>, local_dim: usize, matrix: CMatrix) -> Result<Self> {
        check_support(&support, local_dim, matrix.nrows())?;
        let matrix = linalg::symmetrize(&matrix, "density matrix").map_err(|e| Error::InvalidState(e.to_string()))?;
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = linalg::eigvalsh(&matrix)?.first().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(QuantumState::Mixed {
            support,
            local_dim,
            matrix,
        })
    }

    /// Density matrix built internally (already Hermitian, positive, normalized).
    pub(crate) fn mixed_trusted(support: Vec<Site>, local_dim: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(
            (local_dim as u128).checked_pow(support.len() as u32),
            Some(matrix.nrows() as u128)
        );
        QuantumState::Mixed {
            support,
            local_dim,
            matrix,
        }
    }

    /// Pure state of a single abstract system (support `[0]`, dimension = length).
    pub fn single_pure(vector: CVector) -> Result<Self> {
        let d = vector.len();
        QuantumState::pure(vec![0], d, vector)
    }

    /// Density matrix of a single abstract system.
    pub fn single_mixed(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        QuantumState::mixed(vec![0], d, matrix)
    }

    /// Computational basis state `|index>`.
    pub fn basis(support: Vec<Site>, local_dim: usize, index: usize) -> Result<Self> {
        let dim = local_dim.pow(support.len() as u32);
        if index >= dim {
            return Err(Error::InvalidState(format!("basis index {index} >= {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        QuantumState::pure(support, local_dim, v)
    }

    /// `|0...0>` on the whole lattice.
    pub fn all_zero(lattice: &Lattice, local_dim: usize) -> Result<Self> {
        QuantumState::basis((0..lattice.sites()).collect(), local_dim, 0)
    }

    /// `1 / dim` on the support.
    pub fn maximally_mixed(support: Vec<Site>, local_dim: usize) -> Self {
        let dim = local_dim.pow(support.len() as u32);
        let m = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        QuantumState::mixed_trusted(support, local_dim, m)
    }

    pub fn support(&self) -> &[Site] {
        match self {
            QuantumState::Pure { support, .. } | QuantumState::Mixed { support, .. } => support,
        }
    }

    pub fn local_dim(&self) -> usize {
        match self {
            QuantumState::Pure { local_dim, .. } | QuantumState::Mixed { local_dim, .. } => *local_dim,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure { vector, .. } => vector.len(),
            QuantumState::Mixed { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure { .. })
    }

    pub fn vector(&self) -> Option<&CVector> {
        match self {
            QuantumState::Pure { vector, .. } => Some(vector),
            QuantumState::Mixed { .. } => None,
        }
    }

    /// Density matrix representation (`|ψ><ψ|` for pure states).
    pub fn density_matrix(&self) -> CMatrix {
        match self {
            QuantumState::Pure { vector, .. } => vector * vector.adjoint(),
            QuantumState::Mixed { matrix, .. } => matrix.clone(),
        }
    }

    pub fn to_mixed(&self) -> QuantumState {
        QuantumState::mixed_trusted(self.support().to_vec(), self.local_dim(), self.density_matrix())
    }

    /// Digit places of `sites` within this state's support, in the given order.
    pub fn positions_of(&self, sites: &[Site]) -> Result<Vec<usize>> {
        let support = self.support();
        sites
            .iter()
            .map(|s| {
                support
                    .binary_search(s)
                    .map_err(|_| Error::SupportMismatch(format!("site {} is not in the state support", s + 1)))
            })
            .collect()
    }

    /// Reduced density matrix on `keep` (any order; the result is sorted).
    pub fn partial_trace(&self, keep: &[Site]) -> Result<QuantumState> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let positions = self.positions_of(&keep)?;
        let d = self.local_dim();
        let n = self.support().len();
        let dk = d.pow(keep.len() as u32);
        if keep.len() == n {
            return Ok(self.to_mixed());
        }
        let dr = self.dim() / dk;
        let split = split_indices(d, n, &positions);
        let reduced = match self {
            QuantumState::Pure { vector, .. } => {
                let mut psi = CMatrix::zeros(dk, dr);
                for (idx, &(k, r)) in split.iter().enumerate() {
                    psi[(k, r)] = vector[idx];
                }
                &psi * psi.adjoint()
            }
            QuantumState::Mixed { matrix, .. } => {
                let mut table = vec![0usize; dk * dr];
                for (idx, &(k, r)) in split.iter().enumerate() {
                    table[k * dr + r] = idx;
                }
                CMatrix::from_fn(dk, dk, |a, b| {
                    (0..dr).map(|r| matrix[(table[a * dr + r], table[b * dr + r])]).sum()
                })
            }
        };
        let reduced = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
        Ok(QuantumState::mixed_trusted(keep, d, reduced))
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(self)
    }

    /// `Tr(O ρ)` for an operator whose support is contained in the state's.
    pub fn expectation(&self, op: &HamiltonianOperator) -> Result<f64> {
        expectation(self, op)
    }

    /// `|<φ|ψ>|²` against a pure state on the same support.
    pub fn fidelity_with_pure(&self, target: &CVector) -> Result<f64> {
        if target.len() != self.dim() {
            return Err(Error::SupportMismatch("fidelity target dimension".into()));
        }
        Ok(match self {
            QuantumState::Pure { vector, .. } => target.dotc(vector).norm_sqr(),
            QuantumState::Mixed { matrix, .. } => (target.adjoint() * matrix * target)[(0, 0)].re,
        })
    }

    /// Applies a unitary on `sites` (Kronecker order) in place.
    pub fn apply_local_unitary(&mut self, sites: &[Site], unitary: &CMatrix) -> Result<()> {
        let positions = self.positions_of(sites)?;
        let d = self.local_dim();
        let n = self.support().len();
        if unitary.nrows() != d.pow(sites.len() as u32) {
            return Err(Error::arg("gate dimension does not match its sites"));
        }
        let action = LocalAction::new(d, n, &positions);
        match self {
            QuantumState::Pure { vector, .. } => action.apply(unitary, vector.as_mut_slice()),
            QuantumState::Mixed { matrix, .. } => action.conjugate(unitary, matrix),
        }
        Ok(())
    }

    /// Applies a unitary on the whole support.
    pub fn apply_unitary(&mut self, unitary: &CMatrix) -> Result<()> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::arg("global unitary dimension mismatch"));
        }
        match self {
            QuantumState::Pure { vector, .. } => *vector = unitary * &*vector,
            QuantumState::Mixed { matrix, .. } => *matrix = unitary * &*matrix * unitary.adjoint(),
        }
        Ok(())
    }
}

/// Reduced state; free-function form of [`QuantumState::partial_trace`].
pub fn partial_trace(state: &QuantumState, keep: &[Site]) -> Result<QuantumState> {
    state.partial_trace(keep)
}

/// Eigenvalues of a density matrix with tiny negative values clamped to zero.
pub fn spectrum(state: &QuantumState) -> Result<Vec<f64>> {
    match state {
        QuantumState::Pure { vector, .. } => {
            let mut p = vec![0.0; vector.len()];
            if let Some(last) = p.last_mut() {
                *last = 1.0;
            }
            Ok(p)
        }
        QuantumState::Mixed { matrix, .. } => linalg::eigvalsh(matrix)?
            .into_iter()
            .map(|p| {
                if p < -POSITIVITY_TOL {
                    Err(Error::NegativeEigenvalue(p))
                } else {
                    Ok(p.max(0.0))
                }
            })
            .collect(),
    }
}

/// `-Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

pub fn von_neumann_entropy(state: &QuantumState) -> Result<f64> {
    if state.is_pure() {
        return Ok(0.0);
    }
    // eigenvalues a rounding error above 1 would give -0 or -ε
    Ok(shannon_entropy(&spectrum(state)?).max(0.0))
}

/// Binary entropy `-λ ln λ - (1-λ) ln(1-λ)`.
pub fn binary_entropy(lambda: f64) -> f64 {
    shannon_entropy(&[lambda, 1.0 - lambda])
}

fn same_space(a: &QuantumState, b: &QuantumState) -> Result<()> {
    if a.support() != b.support() || a.local_dim() != b.local_dim() {
        return Err(Error::SupportMismatch(format!(
            "supports {:?} and {:?} differ",
            a.support(),
            b.support()
        )));
    }
    Ok(())
}

/// Schatten-1 norm `‖ρ - σ‖₁` (no factor ½), from the eigenvalues of the
/// Hermitian difference.
pub fn trace_distance(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    same_space(rho, sigma)?;
    let diff = rho.density_matrix() - sigma.density_matrix();
    Ok(linalg::eigvalsh(&diff)?.iter().map(|v| v.abs()).sum())
}

/// `Tr(O ρ)`; the imaginary part must vanish.
pub fn expectation(state: &QuantumState, op: &HamiltonianOperator) -> Result<f64> {
    if op.local_dim() != state.local_dim() {
        return Err(Error::SupportMismatch("local dimensions differ".into()));
    }
    let value = if op.support() == state.support() {
        match state {
            QuantumState::Pure { vector, .. } => vector.dotc(&(op.matrix() * vector)),
            QuantumState::Mixed { matrix, .. } => linalg::trace(&(op.matrix() * matrix)),
        }
    } else {
        let reduced = state.partial_trace(op.support())?;
        linalg::trace(&(op.matrix() * reduced.density_matrix()))
    };
    let scale = 1.0 + value.re.abs();
    if value.im.abs() > 1e-10 * scale {
        return Err(Error::InvalidState(format!(
            "expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Quantum relative entropy `D(σ‖ρ) = Tr σ (ln σ - ln ρ)`; `ρ` must be full rank.
pub fn relative_entropy(sigma: &QuantumState, rho: &QuantumState) -> Result<f64> {
    same_space(sigma, rho)?;
    let es = linalg::eigh(&sigma.density_matrix())?;
    let er = linalg::eigh(&rho.density_matrix())?;
    if er.values.first().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::InvalidState("reference state is not full rank".into()));
    }
    let s_term = -shannon_entropy(&es.values.iter().map(|p| p.max(0.0)).collect::<Vec<_>>());
    let log_rho = linalg::hermitian_function(&er, f64::ln);
    let cross = linalg::trace(&(sigma.density_matrix() * log_rho)).re;
    Ok(s_term - cross)
}

/// Product of two-site states `√(1-λ)|0>_i|0>_{i+l} + √λ|1>_i|1>_{i+l}` over
/// the sites `i` (1-based) with `⌊(i-1)/l⌋` even, on a chain with `2l | L`.
pub fn build_pair_family(lambda: f64, lattice: &Lattice, l: usize) -> Result<QuantumState> {
    if lattice.dim() != 1 {
        return Err(Error::arg("pair family needs a 1D lattice"));
    }
    let size = lattice.size();
    if l == 0 || !size.is_multiple_of(2 * l) {
        return Err(Error::arg(format!(
            "pair family needs L divisible by 2l (L = {size}, l = {l})"
        )));
    }
    if !(0.0..=0.5).contains(&lambda) {
        return Err(Error::arg(format!("pair weight {lambda} outside [0, 1/2]")));
    }
    let pairs = pair_family_pairs(size, l);
    let dim = crate::linalg::Budget::from_env().vector_dim(2, size)?;
    let (a0, a1) = ((1.0 - lambda).sqrt(), lambda.sqrt());
    let v = CVector::from_fn(dim, |idx, _| {
        let mut amp = 1.0;
        for &(i, j) in &pairs {
            let (bi, bj) = ((idx >> i) & 1, (idx >> j) & 1);
            amp *= match (bi, bj) {
                (0, 0) => a0,
                (1, 1) => a1,
                _ => 0.0,
            };
            if amp == 0.0 {
                break;
            }
        }
        C64::new(amp, 0.0)
    });
    QuantumState::pure((0..size).collect(), 2, v)
}

/// 0-based `(i, i + l)` pairs of the pair family on a chain of `size` sites.
pub fn pair_family_pairs(size: usize, l: usize) -> Vec<(Site, Site)> {
    (0..size)
        .filter(|i| (i / l).is_multiple_of(2))
        .map(|i| (i, i + l))
        .collect()
}

/// Closed-form energy per site of the pair family under
/// `-Σ s^z s^z - h Σ s^z` on a ring, valid for `l >= 2`.
pub fn pair_family_energy_density(lambda: f64, h: f64) -> f64 {
    let m = 1.0 - 2.0 * lambda;
    -m * m - h * m
}

/// Text form of a state: real and imaginary parts as JSON arrays.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateJson {
    /// 0-based site indices.
    pub support: Vec<Site>,
    pub local_dim: usize,
    pub kind: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl QuantumState {
    pub fn to_json(&self) -> StateJson {
        let (kind, re, im) = match self {
            QuantumState::Pure { vector, .. } => (
                "pure",
                vec![vector.iter().map(|z| z.re).collect()],
                vec![vector.iter().map(|z| z.im).collect()],
            ),
            QuantumState::Mixed { matrix, .. } => {
                let rows = |f: fn(&C64) -> f64| matrix.row_iter().map(|r| r.iter().map(f).collect()).collect();
                ("mixed", rows(|z| z.re), rows(|z| z.im))
            }
        };
        StateJson {
            support: self.support().to_vec(),
            local_dim: self.local_dim(),
            kind: kind.to_string(),
            re,
            im,
        }
    }

    pub fn from_json(j: &StateJson) -> Result<Self> {
        if j.re.len() != j.im.len() || j.re.iter().zip(&j.im).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::InvalidState("re/im shapes differ".into()));
        }
        match j.kind.as_str() {
            "pure" => {
                let (re, im) = (&j.re[0], &j.im[0]);
                let v = CVector::from_iterator(re.len(), re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)));
                QuantumState::pure(j.support.clone(), j.local_dim, v)
            }
            "mixed" => {
                let n = j.re.len();
                if j.re.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidState("density matrix is not square".into()));
                }
                let m = CMatrix::from_fn(n, n, |r, c| C64::new(j.re[r][c], j.im[r][c]));
                QuantumState::mixed(j.support.clone(), j.local_dim, m)
            }
            other => Err(Error::InvalidState(format!("unknown state kind {other:?}"))),
        }
    }
}
