//! Ergotropy of passive states, per-channel work, the CNOT protocol on the
//! pair family, and the finite-size bound reports.
//!
//! Work is positive when energy is extracted: `W_f = <H>_ρ - <H>_{f(ρ)}`.
//!
//! The verified inequality for a channel `f` is the exact finite-size chain
//!
//! ```text
//! W_f <= [<H>_ρ - Σ_A E_A(S(ρ_A))] + Σ_A [E_A(S(ρ_A)) - E_A(S(f(ρ)_A))] + Σ_cut ‖U_ij‖
//! ```
//!
//! which holds for every state and channel because `<H_A>_σ >= E_A(S(σ_A))`
//! and `‖U^R‖` is at most the cut sum.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    assemble_on, block_cut_sums, presets, residual_norm_bound, verify_short_range, HamiltonianOperator, ModelSpec,
};
use crate::lattice::{check_partition, Lattice, Partition, Site};
use crate::linalg::{self, Budget, CMatrix, C64, ONE, ZERO};
use crate::states::{self, QuantumState};
use crate::thermo::ThermoSpectrum;

/// Tolerance for unitarity of channel gates.
pub const UNITARY_TOL: f64 = 1e-10;
/// Absolute slack allowed when checking the finite-size chain numerically.
pub const VERIFY_TOL: f64 = 1e-9;

/// A unitary acting on the listed sites (Kronecker order).
#[derive(Debug, Clone)]
pub struct Gate {
    pub sites: Vec<Site>,
    pub unitary: CMatrix,
}

impl Gate {
    pub fn new(sites: Vec<Site>, unitary: CMatrix) -> Result<Self> {
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() || sites.is_empty() {
            return Err(Error::arg(format!(
                "gate sites {sites:?} must be distinct and nonempty"
            )));
        }
        let deviation = linalg::unitary_deviation(&unitary);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary {
                what: format!("gate on sites {sites:?}"),
                deviation,
            });
        }
        Ok(Gate { sites, unitary })
    }
}

#[derive(Debug, Clone)]
pub enum ChannelKind {
    Identity,
    GlobalUnitary(CMatrix),
    /// Gates applied in order.
    Circuit(Vec<Gate>),
    /// One unitary per listed site.
    OnsiteProduct(Vec<(Site, CMatrix)>),
}

/// A unitary channel with an optional declared duration (ℏ = 1).
#[derive(Debug, Clone)]
pub struct Channel {
    pub label: String,
    pub kind: ChannelKind,
    pub duration: Option<f64>,
}

impl Channel {
    pub fn identity() -> Self {
        Channel {
            label: "identity".into(),
            kind: ChannelKind::Identity,
            duration: Some(0.0),
        }
    }

    pub fn global_unitary(label: impl Into<String>, unitary: CMatrix) -> Result<Self> {
        let deviation = linalg::unitary_deviation(&unitary);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary {
                what: "global unitary".into(),
                deviation,
            });
        }
        Ok(Channel {
            label: label.into(),
            kind: ChannelKind::GlobalUnitary(unitary),
            duration: None,
        })
    }

    pub fn circuit(label: impl Into<String>, gates: Vec<Gate>) -> Self {
        Channel {
            label: label.into(),
            kind: ChannelKind::Circuit(gates),
            duration: None,
        }
    }

    pub fn onsite_product(label: impl Into<String>, unitaries: Vec<(Site, CMatrix)>) -> Result<Self> {
        for (s, u) in &unitaries {
            let deviation = linalg::unitary_deviation(u);
            if deviation > UNITARY_TOL {
                return Err(Error::NotUnitary {
                    what: format!("on-site unitary at site {}", s + 1),
                    deviation,
                });
            }
        }
        Ok(Channel {
            label: label.into(),
            kind: ChannelKind::OnsiteProduct(unitaries),
            duration: Some(0.0),
        })
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = Some(duration);
        self
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, ChannelKind::Identity)
    }

    /// `f(ρ)`.
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        let mut out = state.clone();
        match &self.kind {
            ChannelKind::Identity => {}
            ChannelKind::GlobalUnitary(u) => out.apply_unitary(u)?,
            ChannelKind::Circuit(gates) => {
                for g in gates {
                    out.apply_local_unitary(&g.sites, &g.unitary)?;
                }
            }
            ChannelKind::OnsiteProduct(us) => {
                for (s, u) in us {
                    out.apply_local_unitary(&[*s], u)?;
                }
            }
        }
        Ok(out)
    }
}

/// Passive state of `ρ` with respect to `H` and the global ergotropy.
#[derive(Debug, Clone)]
pub struct PassiveResult {
    pub passive: QuantumState,
    /// `<H>_ρ - Σ_k p_k↓ E_k↑`.
    pub work: f64,
}

/// Pairs the populations of `ρ` in descending order with the energies of `H`
/// in ascending order.
pub fn passive_state(rho: &QuantumState, h: &HamiltonianOperator) -> Result<PassiveResult> {
    if rho.support() != h.support() || rho.local_dim() != h.local_dim() {
        return Err(Error::SupportMismatch("state and Hamiltonian supports differ".into()));
    }
    let mut populations = states::spectrum(rho)?;
    populations.sort_by(|a, b| b.total_cmp(a));
    let e = h.eigh()?;
    let passive_energy: f64 = populations.iter().zip(&e.values).map(|(p, en)| p * en).sum();
    let work = (rho.expectation(h)? - passive_energy).max(0.0);
    let n = e.vectors.nrows();
    let scaled = CMatrix::from_fn(n, n, |i, j| e.vectors[(i, j)] * populations[j]);
    let m = &scaled * e.vectors.adjoint();
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(PassiveResult {
        passive: QuantumState::mixed_trusted(rho.support().to_vec(), rho.local_dim(), m),
        work,
    })
}

/// `<H>_ρ - <H>_{f(ρ)}` with a dense Hamiltonian.
pub fn channel_work(rho: &QuantumState, h: &HamiltonianOperator, f: &Channel) -> Result<f64> {
    let out = f.apply(rho)?;
    Ok(rho.expectation(h)? - out.expectation(h)?)
}

/// `<H>_ρ - <H>_{f(ρ)}` evaluated term by term.
pub fn channel_work_spec(rho: &QuantumState, spec: &ModelSpec, f: &Channel) -> Result<f64> {
    let out = f.apply(rho)?;
    Ok(spec.expectation(rho)? - spec.expectation(&out)?)
}

/// Result of the CNOT work-extraction protocol on the pair family.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub channel: Channel,
    pub initial_state: QuantumState,
    pub final_state: QuantumState,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub work: f64,
    /// `|<0...0|final>|²`.
    pub ground_fidelity: f64,
}

/// Closed-form work of the CNOT protocol on an `L`-site ring.
pub fn cnot_protocol_work(lambda: f64, size: usize, h: f64) -> f64 {
    let m = 1.0 - 2.0 * lambda;
    size as f64 * ((1.0 + h) - m * m - h * m)
}

/// CNOT (control `i + l`, target `i`) on every pair, then on each site
/// `i + l` the rotation taking `√(1-λ)|0> + √λ|1>` to `|0>`.
pub fn cnot_protocol_channel(lambda: f64, size: usize, l: usize) -> Result<Channel> {
    if !(0.0..=0.5).contains(&lambda) {
        return Err(Error::arg(format!("pair weight {lambda} outside [0, 1/2]")));
    }
    if l == 0 || !size.is_multiple_of(2 * l) {
        return Err(Error::arg(format!(
            "CNOT protocol needs L divisible by 2l (L = {size}, l = {l})"
        )));
    }
    // control first in Kronecker order: flips the second factor when the first is |1>
    let cnot = CMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, //
            ZERO, ONE, ZERO, ZERO, //
            ZERO, ZERO, ZERO, ONE, //
            ZERO, ZERO, ONE, ZERO,
        ],
    );
    let (c, s) = ((1.0 - lambda).sqrt(), lambda.sqrt());
    let rotation = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(c, 0.0)],
    );
    let pairs = states::pair_family_pairs(size, l);
    let mut gates = Vec::with_capacity(2 * pairs.len());
    for &(i, j) in &pairs {
        gates.push(Gate::new(vec![j, i], cnot.clone())?);
    }
    for &(_, j) in &pairs {
        gates.push(Gate::new(vec![j], rotation.clone())?);
    }
    Ok(Channel::circuit(format!("cnot_protocol(l={l})"), gates))
}

/// Runs the CNOT protocol on `|Ψ(λ)>` under `-Σ s^z s^z - h Σ s^z`.
pub fn cnot_protocol(lambda: f64, lattice: &Lattice, l: usize, h: f64) -> Result<ProtocolResult> {
    if h < 0.0 {
        return Err(Error::arg("field must be nonnegative"));
    }
    let spec = presets::ising_zz_field(lattice, h)?;
    let initial = states::build_pair_family(lambda, lattice, l)?;
    let channel = cnot_protocol_channel(lambda, lattice.size(), l)?;
    let final_state = channel.apply(&initial)?;
    let initial_energy = spec.expectation(&initial)?;
    let final_energy = spec.expectation(&final_state)?;
    let mut ground = linalg::CVector::zeros(final_state.dim());
    ground[0] = ONE;
    let ground_fidelity = final_state.fidelity_with_pure(&ground)?;
    Ok(ProtocolResult {
        channel,
        initial_state: initial,
        final_state,
        initial_energy,
        final_energy,
        work: initial_energy - final_energy,
        ground_fidelity,
    })
}

/// Spectra of every block Hamiltonian `H_A`, computed once.
#[derive(Debug, Clone)]
pub struct BlockSpectra {
    blocks: Vec<Vec<Site>>,
    spectra: Vec<ThermoSpectrum>,
    local_dim: usize,
}

/// Block entropies and canonical energies of one state.
#[derive(Debug, Clone)]
pub struct BlockEvaluation {
    pub reductions: Vec<QuantumState>,
    pub entropies: Vec<f64>,
    /// `E_A(S(σ_A))` per block.
    pub canonical_energies: Vec<f64>,
    /// `β_A(S(σ_A))` per block (`∞` ground regime, `0` max-entropy edge).
    pub betas: Vec<f64>,
}

impl BlockEvaluation {
    pub fn energy_sum(&self) -> f64 {
        self.canonical_energies.iter().sum()
    }
}

impl BlockSpectra {
    pub fn new(spec: &ModelSpec, partition: &Partition) -> Result<Self> {
        let spectra = partition
            .blocks()
            .par_iter()
            .map(|block| {
                let h = assemble_on(spec, block, Budget::from_env())?;
                ThermoSpectrum::from_operator(&h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockSpectra {
            blocks: partition.blocks().to_vec(),
            spectra,
            local_dim: spec.local_dim(),
        })
    }

    pub fn spectra(&self) -> &[ThermoSpectrum] {
        &self.spectra
    }

    pub fn blocks(&self) -> &[Vec<Site>] {
        &self.blocks
    }

    pub fn evaluate(&self, state: &QuantumState) -> Result<BlockEvaluation> {
        let reductions = reduce_blocks(state, &self.blocks)?;
        self.evaluate_reductions(reductions)
    }

    pub fn evaluate_reductions(&self, reductions: Vec<QuantumState>) -> Result<BlockEvaluation> {
        let mut entropies = Vec::with_capacity(reductions.len());
        let mut energies = Vec::with_capacity(reductions.len());
        let mut betas = Vec::with_capacity(reductions.len());
        for (r, spectrum) in reductions.iter().zip(&self.spectra) {
            if r.local_dim() != self.local_dim {
                return Err(Error::SupportMismatch("local dimension differs from model".into()));
            }
            let s = r.entropy()?.min(spectrum.ln_dim());
            let c = spectrum.canonical_energy(s)?;
            entropies.push(s);
            energies.push(c.energy);
            betas.push(c.beta);
        }
        Ok(BlockEvaluation {
            reductions,
            entropies,
            canonical_energies: energies,
            betas,
        })
    }
}

pub fn reduce_blocks(state: &QuantumState, blocks: &[Vec<Site>]) -> Result<Vec<QuantumState>> {
    blocks.iter().map(|b| state.partial_trace(b)).collect()
}

fn inverse(beta: f64) -> f64 {
    if beta.is_infinite() {
        0.0
    } else {
        1.0 / beta
    }
}

/// Local-athermality cap and its intermediate quantities.
#[derive(Debug, Clone, Serialize)]
pub struct AthermalityReport {
    /// `V β0⁻¹ ln(d) max_A ‖ρ^leq_A - ρ_A‖₁`.
    pub cap: f64,
    pub per_block_distance: Vec<f64>,
    pub max_distance: f64,
    /// `β_A(S(ρ^leq_A))` per block.
    pub leq_betas: Vec<f64>,
    /// `β_A^leq >= β0` for every block.
    pub condition_holds: bool,
    /// `Σ_A [E_A(S(ρ^leq_A)) - E_A(S(ρ_A))]`.
    pub first_term: f64,
    /// `Σ_A (β_A^leq)⁻¹ (S(ρ^leq_A) - S(ρ_A))`.
    pub convexity_sum: f64,
    /// `Σ_A (β_A^leq)⁻¹ [|A| ln(d) ‖ρ^leq_A - ρ_A‖₁ + 1/e]`.
    pub fannes_sum: f64,
    /// Some block distance exceeds `1/e`.
    pub fannes_advisory: bool,
}

pub(crate) fn athermality_from(
    leq: &BlockEvaluation,
    inp: &BlockEvaluation,
    blocks: &[Vec<Site>],
    sites: usize,
    local_dim: usize,
    beta0: f64,
) -> Result<AthermalityReport> {
    let distances = leq
        .reductions
        .iter()
        .zip(&inp.reductions)
        .map(|(a, b)| states::trace_distance(a, b))
        .collect::<Result<Vec<_>>>()?;
    let max_distance = distances.iter().fold(0.0f64, |a, &b| a.max(b));
    let ln_d = (local_dim as f64).ln();
    let mut convexity_sum = 0.0;
    let mut fannes_sum = 0.0;
    for (k, block) in blocks.iter().enumerate() {
        let t = inverse(leq.betas[k]);
        if t == 0.0 {
            continue;
        }
        convexity_sum += t * (leq.entropies[k] - inp.entropies[k]);
        fannes_sum += t * crate::thermo::fannes_bound(block.len(), local_dim, distances[k]);
    }
    Ok(AthermalityReport {
        cap: sites as f64 / beta0 * ln_d * max_distance,
        max_distance,
        condition_holds: leq.betas.iter().all(|&b| b >= beta0),
        leq_betas: leq.betas.clone(),
        first_term: leq.energy_sum() - inp.energy_sum(),
        convexity_sum,
        fannes_sum,
        fannes_advisory: distances.iter().any(|&t| t > (-1.0f64).exp()),
        per_block_distance: distances,
    })
}

/// Local-athermality bound of the ergotropy for a reference ensemble `ρ^leq`.
pub fn athermality_bound(
    rho: &QuantumState,
    rho_leq: &QuantumState,
    spec: &ModelSpec,
    lattice: &Lattice,
    partition: &Partition,
    beta0: f64,
) -> Result<AthermalityReport> {
    check_partition(lattice, partition)?;
    if !(beta0 > 0.0) {
        return Err(Error::arg("beta0 must be positive"));
    }
    let spectra = BlockSpectra::new(spec, partition)?;
    let leq = spectra.evaluate(rho_leq)?;
    let inp = spectra.evaluate(rho)?;
    athermality_from(&leq, &inp, partition.blocks(), lattice.sites(), spec.local_dim(), beta0)
}

/// All terms of the ergotropy bound for a state and a list of channels.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub energy_in: f64,
    /// `Σ_A E_A(S(ρ_A))`.
    pub block_energy_in: f64,
    /// `Σ_A E_A(S(ρ^leq_A))`.
    pub block_energy_leq: f64,
    /// `<H>_ρ - Σ_A E_A(S(ρ^leq_A))`.
    pub leq_term_slack: f64,
    /// `Σ_A [E_A(S(ρ^leq_A)) - E_A(S(ρ_A))]`.
    pub athermality_term: f64,
    /// `Σ_A [E_A(S(ρ_A)) - E_A(S(f(ρ)_A))]` per channel.
    pub entropy_terms: Vec<f64>,
    /// Local-athermality cap with `β0`.
    pub fannes_cap: f64,
    pub athermality: AthermalityReport,
    /// Cut-pair sum bounding `‖U^R‖`.
    pub residual_slack: f64,
    pub residual_exact_norm: Option<f64>,
    pub remainder_sites: usize,
    pub channels: Vec<String>,
    pub works: Vec<f64>,
    /// Right-hand side of the finite-size chain per channel.
    pub bounds: Vec<f64>,
    pub verified: Vec<bool>,
    /// Largest work over the channel list.
    pub best_work: f64,
    pub beta0: f64,
    pub beta1: Option<f64>,
    pub seed: Option<u64>,
}

impl BoundReport {
    pub fn all_verified(&self) -> bool {
        self.verified.iter().all(|&v| v)
    }
}

/// Per-channel outcome used by [`bound_report`] and the ETH scan.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChannelOutcome {
    pub work: f64,
    pub entropy_term: f64,
    pub bound: f64,
    pub verified: bool,
}

pub(crate) fn evaluate_channel(
    rho: &QuantumState,
    energy_in: f64,
    input: &BlockEvaluation,
    spectra: &BlockSpectra,
    spec: &ModelSpec,
    residual_slack: f64,
    channel: &Channel,
) -> Result<ChannelOutcome> {
    let out = channel.apply(rho)?;
    let energy_out = spec.expectation(&out)?;
    let work = energy_in - energy_out;
    let after = spectra.evaluate(&out)?;
    let entropy_term = input.energy_sum() - after.energy_sum();
    let bound = (energy_in - input.energy_sum()) + entropy_term + residual_slack;
    Ok(ChannelOutcome {
        work,
        entropy_term,
        bound,
        verified: work <= bound + VERIFY_TOL,
    })
}

/// Evaluates both bound terms and checks the finite-size chain per channel.
#[allow(clippy::too_many_arguments)]
pub fn bound_report(
    rho: &QuantumState,
    rho_leq: &QuantumState,
    spec: &ModelSpec,
    lattice: &Lattice,
    partition: &Partition,
    channels: &[Channel],
    beta0: f64,
    beta1: Option<f64>,
    seed: Option<u64>,
) -> Result<BoundReport> {
    check_partition(lattice, partition)?;
    spec.check_lattice(lattice)?;
    if !channels.iter().any(Channel::is_identity) {
        return Err(Error::MissingIdentityChannel);
    }
    if !(beta0 > 0.0) {
        return Err(Error::arg("beta0 must be positive"));
    }
    let spectra = BlockSpectra::new(spec, partition)?;
    let residual = residual_norm_bound(spec, partition)?;
    let energy_in = spec.expectation(rho)?;
    let input = spectra.evaluate(rho)?;
    let leq = spectra.evaluate(rho_leq)?;
    let athermality = athermality_from(
        &leq,
        &input,
        partition.blocks(),
        lattice.sites(),
        spec.local_dim(),
        beta0,
    )?;

    let outcomes = channels
        .par_iter()
        .map(|f| evaluate_channel(rho, energy_in, &input, &spectra, spec, residual.sum_bound, f))
        .collect::<Result<Vec<_>>>()?;

    Ok(BoundReport {
        energy_in,
        block_energy_in: input.energy_sum(),
        block_energy_leq: leq.energy_sum(),
        leq_term_slack: energy_in - leq.energy_sum(),
        athermality_term: leq.energy_sum() - input.energy_sum(),
        entropy_terms: outcomes.iter().map(|o| o.entropy_term).collect(),
        fannes_cap: athermality.cap,
        athermality,
        residual_slack: residual.sum_bound,
        residual_exact_norm: residual.exact_norm,
        remainder_sites: partition.remainder().len(),
        channels: channels.iter().map(|c| c.label.clone()).collect(),
        works: outcomes.iter().map(|o| o.work).collect(),
        bounds: outcomes.iter().map(|o| o.bound).collect(),
        verified: outcomes.iter().map(|o| o.verified).collect(),
        best_work: outcomes.iter().map(|o| o.work).fold(0.0, f64::max),
        beta0,
        beta1,
        seed,
    })
}

/// Default SIE constant `C̃_d = 4 ln d`.
pub fn default_c_tilde(local_dim: usize) -> f64 {
    4.0 * (local_dim as f64).ln()
}

/// Caps for local controls: the athermality cap and the entropy-change cap
/// `β1⁻¹ C̃_d T Σ_A U_A`, reported separately.
#[derive(Debug, Clone, Serialize)]
pub struct LocalControlReport {
    pub athermality_cap: f64,
    pub sie_entropy_cap: f64,
    pub cut_sum_total: f64,
    pub c_tilde: f64,
    pub duration: f64,
    /// `β_A(S(ρ_A))` per block.
    pub block_betas: Vec<f64>,
    /// `β_A(S(ρ_A)) >= β1` for every block.
    pub condition_holds: bool,
    /// `U0 T / l`.
    pub control_ratio: f64,
}

pub fn sie_entropy_cap(cut_sum_total: f64, beta1: f64, c_tilde: f64, duration: f64) -> f64 {
    c_tilde * duration * cut_sum_total / beta1
}

#[allow(clippy::too_many_arguments)]
pub fn local_control_bound(
    rho: &QuantumState,
    rho_leq: &QuantumState,
    spec: &ModelSpec,
    lattice: &Lattice,
    partition: &Partition,
    beta0: f64,
    beta1: f64,
    duration: f64,
    c_tilde: f64,
) -> Result<LocalControlReport> {
    if !(beta1 > 0.0) || duration < 0.0 {
        return Err(Error::arg("beta1 must be positive and the duration nonnegative"));
    }
    let spectra = BlockSpectra::new(spec, partition)?;
    let leq = spectra.evaluate(rho_leq)?;
    let inp = spectra.evaluate(rho)?;
    let ath = athermality_from(&leq, &inp, partition.blocks(), lattice.sites(), spec.local_dim(), beta0)?;
    let cut_sum_total: f64 = block_cut_sums(spec, lattice, partition)?.iter().sum();
    let u0 = verify_short_range(spec, lattice)?.minimal_u0;
    Ok(LocalControlReport {
        athermality_cap: ath.cap,
        sie_entropy_cap: sie_entropy_cap(cut_sum_total, beta1, c_tilde, duration),
        cut_sum_total,
        c_tilde,
        duration,
        condition_holds: inp.betas.iter().all(|&b| b >= beta1),
        block_betas: inp.betas,
        control_ratio: u0 * duration / partition.block_size() as f64,
    })
}

/// Seeded sampler of shallow brickwork circuits of Haar two-site gates on
/// nearest-neighbour bonds.
#[derive(Debug, Clone, Copy)]
pub struct CircuitSampler {
    pub depth: usize,
    /// Declared duration per layer.
    pub layer_time: f64,
}

impl Default for CircuitSampler {
    fn default() -> Self {
        CircuitSampler {
            depth: 2,
            layer_time: 1.0,
        }
    }
}

impl CircuitSampler {
    /// One circuit: each layer is a random maximal matching of bonds.
    pub fn sample<R: Rng + ?Sized>(&self, lattice: &Lattice, local_dim: usize, rng: &mut R, label: String) -> Channel {
        let mut bonds = lattice.nearest_neighbor_bonds();
        bonds.retain(|(a, b)| a != b);
        bonds.sort_unstable_by_key(|&(a, b)| (a.min(b), a.max(b)));
        bonds.dedup_by_key(|&mut (a, b)| (a.min(b), a.max(b)));
        let mut gates = Vec::new();
        for _ in 0..self.depth {
            bonds.shuffle(rng);
            let mut used = vec![false; lattice.sites()];
            for &(a, b) in &bonds {
                if used[a] || used[b] {
                    continue;
                }
                used[a] = true;
                used[b] = true;
                let u = linalg::haar_unitary(local_dim * local_dim, rng);
                gates.push(Gate {
                    sites: vec![a, b],
                    unitary: u,
                });
            }
        }
        Channel::circuit(label, gates).with_duration(self.depth as f64 * self.layer_time)
    }

    pub fn sample_many<R: Rng + ?Sized>(
        &self,
        lattice: &Lattice,
        local_dim: usize,
        count: usize,
        rng: &mut R,
    ) -> Vec<Channel> {
        (0..count)
            .map(|k| self.sample(lattice, local_dim, rng, format!("random_circuit_{k}")))
            .collect()
    }
}
