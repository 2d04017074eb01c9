//! Two-body lattice Hamiltonians: model specification, the short-range decay
//! check, and dense assembly of full, block and residual operators.
//!
//! Pair terms are stored once per unordered pair `{i, j}` (with `i < j`) as a
//! `d² x d²` matrix in Kronecker order, site `i` first. A Hamiltonian written
//! as a sum over ordered pairs with `U_ij = U_ji` therefore maps to a stored
//! term `U_ij + U_ji = 2 U_ij`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{check_partition, Lattice, Partition, Site};
use crate::linalg::{self, Budget, CMatrix, LocalAction, C64, ONE, ZERO};
use crate::states::QuantumState;

/// Above this Hilbert-space dimension the residual operator norm is not
/// computed by diagonalization.
pub const EXACT_NORM_MAX_DIM: usize = 1024;

/// Constants of the decay condition `‖U_ij‖ <= U0 (1 + r_ij)^-(D + δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub u0: f64,
    pub delta: f64,
}

impl Default for Decay {
    fn default() -> Self {
        Decay { u0: 1.0, delta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermKey {
    Onsite(Site),
    Pair(Site, Site),
}

impl fmt::Display for TermKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermKey::Onsite(i) => write!(f, "onsite({})", i + 1),
            TermKey::Pair(i, j) => write!(f, "pair({},{})", i + 1, j + 1),
        }
    }
}

impl TermKey {
    pub fn sites(&self) -> Vec<Site> {
        match *self {
            TermKey::Onsite(i) => vec![i],
            TermKey::Pair(i, j) => vec![i, j],
        }
    }
}

/// On-site and two-body terms of a spin model with local dimension `d`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    local_dim: usize,
    onsite: BTreeMap<Site, CMatrix>,
    pairs: BTreeMap<(Site, Site), CMatrix>,
    decay: Decay,
}

fn swap_factors(m: &CMatrix, d: usize) -> CMatrix {
    let idx = |a: usize| (a % d) * d + a / d;
    CMatrix::from_fn(d * d, d * d, |r, c| m[(idx(r), idx(c))])
}

impl ModelSpec {
    pub fn new(local_dim: usize) -> Result<Self> {
        if local_dim < 2 {
            return Err(Error::arg(format!("local dimension must be >= 2, got {local_dim}")));
        }
        Ok(ModelSpec {
            local_dim,
            onsite: BTreeMap::new(),
            pairs: BTreeMap::new(),
            decay: Decay::default(),
        })
    }

    pub fn with_decay(mut self, decay: Decay) -> Self {
        self.decay = decay;
        self
    }

    pub fn set_decay(&mut self, decay: Decay) {
        self.decay = decay;
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    /// Adds `m` to the on-site term of `site`.
    pub fn add_onsite(&mut self, site: Site, m: &CMatrix) -> Result<()> {
        let d = self.local_dim;
        if m.shape() != (d, d) {
            return Err(Error::arg(format!(
                "on-site term at site {} has shape {:?}, expected {d}x{d}",
                site + 1,
                m.shape()
            )));
        }
        let m = linalg::symmetrize(m, &format!("on-site term at site {}", site + 1))?;
        *self.onsite.entry(site).or_insert_with(|| CMatrix::zeros(d, d)) += m;
        Ok(())
    }

    /// Adds `m` (Kronecker order: `i` first) to the unordered pair term `{i, j}`.
    pub fn add_pair(&mut self, i: Site, j: Site, m: &CMatrix) -> Result<()> {
        let d = self.local_dim;
        if i == j {
            return Err(Error::arg(format!("pair term on identical sites {}", i + 1)));
        }
        if m.shape() != (d * d, d * d) {
            return Err(Error::arg(format!(
                "pair term ({}, {}) has shape {:?}, expected {}x{}",
                i + 1,
                j + 1,
                m.shape(),
                d * d,
                d * d
            )));
        }
        let m = linalg::symmetrize(m, &format!("pair term ({}, {})", i + 1, j + 1))?;
        let (key, m) = if i < j {
            ((i, j), m)
        } else {
            ((j, i), swap_factors(&m, d))
        };
        *self.pairs.entry(key).or_insert_with(|| CMatrix::zeros(d * d, d * d)) += m;
        Ok(())
    }

    pub fn onsite_terms(&self) -> impl Iterator<Item = (Site, &CMatrix)> {
        self.onsite.iter().map(|(&s, m)| (s, m))
    }

    pub fn pair_terms(&self) -> impl Iterator<Item = ((Site, Site), &CMatrix)> {
        self.pairs.iter().map(|(&k, m)| (k, m))
    }

    /// All terms, on-site first, each with its site list in Kronecker order.
    pub fn terms(&self) -> impl Iterator<Item = (TermKey, &CMatrix)> {
        self.onsite
            .iter()
            .map(|(&s, m)| (TermKey::Onsite(s), m))
            .chain(self.pairs.iter().map(|(&(i, j), m)| (TermKey::Pair(i, j), m)))
    }

    pub fn term(&self, key: TermKey) -> Option<&CMatrix> {
        match key {
            TermKey::Onsite(s) => self.onsite.get(&s),
            TermKey::Pair(i, j) => self.pairs.get(&(i.min(j), i.max(j))),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.onsite.is_empty() && self.pairs.is_empty()
    }

    /// Largest site index referenced by any term.
    pub fn max_site(&self) -> Option<Site> {
        let a = self.onsite.keys().next_back().copied();
        let b = self.pairs.keys().map(|&(_, j)| j).max();
        a.max(b)
    }

    pub fn check_lattice(&self, lattice: &Lattice) -> Result<()> {
        if let Some(s) = self.max_site() {
            lattice.check_site(s)?;
        }
        Ok(())
    }

    /// Copy with every term multiplied by `coefficient(key)`.
    pub fn scaled(&self, coefficient: impl Fn(TermKey) -> f64) -> ModelSpec {
        let scale = |m: &CMatrix, c: f64| m * C64::new(c, 0.0);
        ModelSpec {
            local_dim: self.local_dim,
            onsite: self
                .onsite
                .iter()
                .map(|(&s, m)| (s, scale(m, coefficient(TermKey::Onsite(s)))))
                .collect(),
            pairs: self
                .pairs
                .iter()
                .map(|(&(i, j), m)| ((i, j), scale(m, coefficient(TermKey::Pair(i, j)))))
                .collect(),
            decay: self.decay,
        }
    }

    /// Hex digest of the term data, used as model provenance.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.local_dim as u64).to_le_bytes());
        for (key, m) in self.terms() {
            for s in key.sites() {
                h.update((s as u64).to_le_bytes());
            }
            for z in m.iter() {
                h.update(z.re.to_bits().to_le_bytes());
                h.update(z.im.to_bits().to_le_bytes());
            }
        }
        h.update(self.decay.u0.to_bits().to_le_bytes());
        h.update(self.decay.delta.to_bits().to_le_bytes());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `Tr(H ρ)` evaluated term by term, without a dense Hamiltonian.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        if state.local_dim() != self.local_dim {
            return Err(Error::SupportMismatch(format!(
                "state has local dimension {}, model {}",
                state.local_dim(),
                self.local_dim
            )));
        }
        let n = state.support().len();
        let mut total = ZERO;
        for (key, m) in self.terms() {
            let positions = state.positions_of(&key.sites())?;
            let action = LocalAction::new(self.local_dim, n, &positions);
            total += match state {
                QuantumState::Pure { vector, .. } => action.expectation(m, vector.as_slice()),
                QuantumState::Mixed { matrix, .. } => action.expectation_mixed(m, matrix),
            };
        }
        Ok(total.re)
    }
}

/// Dense Hermitian operator on `⊗_{i ∈ support} C^d`.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    support: Vec<Site>,
    local_dim: usize,
    matrix: CMatrix,
    norm: OnceLock<f64>,
}

impl HamiltonianOperator {
    /// Wraps a matrix, symmetrizing it within tolerance. `support` must be
    /// sorted; the matrix follows the state digit layout of that support.
    pub fn from_matrix(support: Vec<Site>, local_dim: usize, matrix: CMatrix) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("operator support must be strictly increasing"));
        }
        let dim = local_dim.pow(support.len() as u32);
        if matrix.shape() != (dim, dim) {
            return Err(Error::arg(format!(
                "operator shape {:?} does not match dimension {dim}",
                matrix.shape()
            )));
        }
        let matrix = linalg::symmetrize(&matrix, "Hamiltonian")?;
        Ok(HamiltonianOperator {
            support,
            local_dim,
            matrix,
            norm: OnceLock::new(),
        })
    }

    /// Operator on a single abstract system of dimension `dim`.
    pub fn single(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim < 1 {
            return Err(Error::arg("empty operator"));
        }
        HamiltonianOperator::from_matrix(vec![0], dim, matrix)
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Operator norm (largest absolute eigenvalue), cached.
    pub fn norm(&self) -> Result<f64> {
        if let Some(&n) = self.norm.get() {
            return Ok(n);
        }
        let n = linalg::hermitian_norm(&self.matrix)?;
        Ok(*self.norm.get_or_init(|| n))
    }

    pub fn eigh(&self) -> Result<linalg::Eigh> {
        linalg::eigh(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(&self.matrix)
    }
}

/// Outcome of the short-range decay check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub admissible: bool,
    /// Smallest `U0` for which every check passes at the configured `δ`.
    pub minimal_u0: f64,
    pub configured_u0: f64,
    pub delta: f64,
    /// Term attaining `minimal_u0`.
    pub binding_term: Option<String>,
}

/// Checks `‖h_i‖ <= U0` and `‖U_ij‖ (1 + r_ij)^(D+δ) <= U0` for every term.
pub fn verify_short_range(spec: &ModelSpec, lattice: &Lattice) -> Result<DecayReport> {
    spec.check_lattice(lattice)?;
    let exponent = lattice.dim() as f64 + spec.decay.delta;
    let mut minimal = 0.0f64;
    let mut binding = None;
    for (key, m) in spec.terms() {
        let norm = linalg::hermitian_norm(m)?;
        let required = match key {
            TermKey::Onsite(_) => norm,
            TermKey::Pair(i, j) => norm * (1.0 + lattice.distance(i, j)?).powf(exponent),
        };
        if required > minimal {
            minimal = required;
            binding = Some(key.to_string());
        }
    }
    let configured = spec.decay.u0;
    Ok(DecayReport {
        admissible: minimal <= configured * (1.0 + 1e-12),
        minimal_u0: minimal,
        configured_u0: configured,
        delta: spec.decay.delta,
        binding_term: binding,
    })
}

/// Dense operator containing every term fully supported in `support`.
pub fn assemble_on(spec: &ModelSpec, support: &[Site], budget: Budget) -> Result<HamiltonianOperator> {
    let mut support = support.to_vec();
    support.sort_unstable();
    support.dedup();
    let d = spec.local_dim;
    let dim = budget.matrix_dim(d, support.len())?;
    let mut matrix = CMatrix::zeros(dim, dim);
    for (key, m) in spec.terms() {
        let sites = key.sites();
        let Some(positions) = sites
            .iter()
            .map(|s| support.binary_search(s).ok())
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        LocalAction::new(d, support.len(), &positions).accumulate(m, &mut matrix);
    }
    HamiltonianOperator::from_matrix(support, d, matrix)
}

/// Full Hamiltonian `H = Σ h_i + Σ U_ij` on the whole lattice.
pub fn assemble_full(spec: &ModelSpec, lattice: &Lattice) -> Result<HamiltonianOperator> {
    assemble_full_with_budget(spec, lattice, Budget::from_env())
}

pub fn assemble_full_with_budget(spec: &ModelSpec, lattice: &Lattice, budget: Budget) -> Result<HamiltonianOperator> {
    spec.check_lattice(lattice)?;
    let sites: Vec<Site> = (0..lattice.sites()).collect();
    assemble_on(spec, &sites, budget)
}

/// Block Hamiltonian `H_A`: terms fully inside block `block` of the partition.
pub fn assemble_block(spec: &ModelSpec, partition: &Partition, block: usize) -> Result<HamiltonianOperator> {
    let sites = partition
        .block(block)
        .ok_or_else(|| Error::Partition(format!("no block with index {block}")))?;
    assemble_on(spec, sites, Budget::from_env())
}

/// Bound on `‖U^R‖` for a partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualBound {
    /// `pair_sum + remainder_onsite`.
    pub sum_bound: f64,
    /// Σ over cut pairs of the stored pair-term norm.
    pub pair_sum: f64,
    /// Σ of on-site norms of sites outside every block.
    pub remainder_onsite: f64,
    /// `‖U^R‖` by diagonalization, when the dimension allows it.
    pub exact_norm: Option<f64>,
}

fn is_cut(partition: &Partition, i: Site, j: Site) -> bool {
    match (partition.block_of(i), partition.block_of(j)) {
        (Some(a), Some(b)) => a != b,
        _ => true,
    }
}

/// Residual interaction `U^R = H - Σ_A H_A` as a model spec: every cut pair
/// plus the on-site terms of remainder sites.
pub fn residual_spec(spec: &ModelSpec, partition: &Partition) -> ModelSpec {
    let mut r = ModelSpec {
        local_dim: spec.local_dim,
        onsite: BTreeMap::new(),
        pairs: BTreeMap::new(),
        decay: spec.decay,
    };
    for (s, m) in spec.onsite_terms() {
        if partition.block_of(s).is_none() {
            r.onsite.insert(s, m.clone());
        }
    }
    for ((i, j), m) in spec.pair_terms() {
        if is_cut(partition, i, j) {
            r.pairs.insert((i, j), m.clone());
        }
    }
    r
}

pub fn residual_norm_bound(spec: &ModelSpec, partition: &Partition) -> Result<ResidualBound> {
    if let Some(s) = spec.max_site() {
        if s >= partition.sites() {
            return Err(Error::InvalidSite {
                site: s,
                sites: partition.sites(),
            });
        }
    }
    let residual = residual_spec(spec, partition);
    let mut pair_sum = 0.0;
    for (_, m) in residual.pair_terms() {
        pair_sum += linalg::hermitian_norm(m)?;
    }
    let mut remainder_onsite = 0.0;
    for (_, m) in residual.onsite_terms() {
        remainder_onsite += linalg::hermitian_norm(m)?;
    }
    let dim = (spec.local_dim as u128).checked_pow(partition.sites() as u32);
    let exact_norm = match dim {
        Some(dim) if dim <= EXACT_NORM_MAX_DIM as u128 => {
            let sites: Vec<Site> = (0..partition.sites()).collect();
            Some(assemble_on(&residual, &sites, Budget::default())?.norm()?)
        }
        _ => None,
    };
    Ok(ResidualBound {
        sum_bound: pair_sum + remainder_onsite,
        pair_sum,
        remainder_onsite,
        exact_norm,
    })
}

/// Per-block cut sums `U_A = Σ_{i ∈ A, j ∉ A} ‖U_ij‖`.
pub fn block_cut_sums(spec: &ModelSpec, lattice: &Lattice, partition: &Partition) -> Result<Vec<f64>> {
    check_partition(lattice, partition)?;
    spec.check_lattice(lattice)?;
    let mut sums = vec![0.0; partition.len()];
    for ((i, j), m) in spec.pair_terms() {
        let (a, b) = (partition.block_of(i), partition.block_of(j));
        if a == b {
            continue;
        }
        let norm = linalg::hermitian_norm(m)?;
        if let Some(a) = a {
            sums[a] += norm;
        }
        if let Some(b) = b {
            sums[b] += norm;
        }
    }
    Ok(sums)
}

/// Spin-½ operators in the basis `|0>` (s^z = +1), `|1>` (s^z = -1).
pub mod pauli {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn sy() -> CMatrix {
        let i = C64::new(0.0, 1.0);
        CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
    }
}

/// Named model families.
pub mod presets {
    use super::*;
    use crate::linalg::kron;

    /// `H = -Σ_<ij> s^z_i s^z_j - h Σ_i s^z_i`.
    pub fn ising_zz_field(lattice: &Lattice, h: f64) -> Result<ModelSpec> {
        mixed_field_ising(lattice, 1.0, 0.0, h)
    }

    /// `H = -J Σ_<ij> s^z_i s^z_j - g Σ_i s^x_i - h Σ_i s^z_i` with
    /// nearest-neighbour bonds. `U0` is set to the smallest admissible value
    /// at `δ = 1`.
    pub fn mixed_field_ising(lattice: &Lattice, j: f64, g: f64, h: f64) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(2)?;
        let zz = kron(&pauli::sz(), &pauli::sz()) * C64::new(-j, 0.0);
        let field = pauli::sz() * C64::new(-h, 0.0) + pauli::sx() * C64::new(-g, 0.0);
        if j != 0.0 {
            for (a, b) in lattice.nearest_neighbor_bonds() {
                spec.add_pair(a, b, &zz)?;
            }
        }
        if g != 0.0 || h != 0.0 {
            for s in 0..lattice.sites() {
                spec.add_onsite(s, &field)?;
            }
        }
        fit_decay(spec, lattice, 1.0)
    }

    /// Sets `U0` to the minimal admissible value at decay exponent `delta`.
    pub fn fit_decay(mut spec: ModelSpec, lattice: &Lattice, delta: f64) -> Result<ModelSpec> {
        spec.decay = Decay { u0: 0.0, delta };
        let report = verify_short_range(&spec, lattice)?;
        spec.decay.u0 = report.minimal_u0;
        Ok(spec)
    }
}
