//! Exact diagonalization, microcanonical shells, the MITE indicator and
//! per-eigenstate scans of the local-control no-go statement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ergotropy::{athermality_from, evaluate_channel, BlockSpectra, CircuitSampler};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_full, residual_norm_bound, HamiltonianOperator, ModelSpec};
use crate::lattice::{check_partition, Lattice, Partition, Site};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::report::{format_float, CsvTable};
use crate::states::{self, QuantumState};
use crate::thermo::ThermoSpectrum;

/// Relative gap below which neighbouring eigenvalues count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Full eigendecomposition of a Hamiltonian with its provenance.
#[derive(Debug, Clone)]
pub struct SpectrumBundle {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column `k` belongs to `energies[k]`.
    pub vectors: CMatrix,
    pub support: Vec<Site>,
    pub local_dim: usize,
    /// Model fingerprint when built from a [`ModelSpec`].
    pub fingerprint: Option<String>,
    pub lattice: Option<Lattice>,
}

impl SpectrumBundle {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `max |E_k|`, the operator norm.
    pub fn norm(&self) -> f64 {
        self.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }

    pub fn eigenstate(&self, k: usize) -> Result<QuantumState> {
        if k >= self.dim() {
            return Err(Error::arg(format!("eigenstate index {k} out of range {}", self.dim())));
        }
        QuantumState::pure(
            self.support.clone(),
            self.local_dim,
            self.vectors.column(k).into_owned(),
        )
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        let tol = DEGENERACY_TOL * self.norm();
        let e = &self.energies;
        (k > 0 && (e[k] - e[k - 1]).abs() < tol) || (k + 1 < e.len() && (e[k + 1] - e[k]).abs() < tol)
    }

    /// `max_k ‖H v_k - E_k v_k‖`.
    pub fn max_residual(&self, h: &HamiltonianOperator) -> f64 {
        let hv = h.matrix() * &self.vectors;
        (0..self.dim())
            .map(|k| {
                let r = hv.column(k) - self.vectors.column(k) * C64::new(self.energies[k], 0.0);
                r.norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn thermo(&self) -> Result<ThermoSpectrum> {
        ThermoSpectrum::from_energies(self.energies.clone())
    }
}

pub fn diagonalize(h: &HamiltonianOperator) -> Result<SpectrumBundle> {
    let e = h.eigh()?;
    Ok(SpectrumBundle {
        energies: e.values,
        vectors: e.vectors,
        support: h.support().to_vec(),
        local_dim: h.local_dim(),
        fingerprint: None,
        lattice: None,
    })
}

/// Assembles the full Hamiltonian within the memory budget and diagonalizes it.
pub fn diagonalize_model(spec: &ModelSpec, lattice: &Lattice) -> Result<SpectrumBundle> {
    let h = assemble_full(spec, lattice)?;
    let mut bundle = diagonalize(&h)?;
    bundle.fingerprint = Some(spec.fingerprint());
    bundle.lattice = Some(lattice.clone());
    Ok(bundle)
}

/// Indices with `|E_k - center| <= half_width`.
pub fn shell_indices(bundle: &SpectrumBundle, center: f64, half_width: f64) -> Vec<usize> {
    bundle
        .energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| (e - center).abs() <= half_width)
        .map(|(k, _)| k)
        .collect()
}

/// Equal-weight mixture of the eigenstates in the energy shell.
pub fn microcanonical_state(bundle: &SpectrumBundle, center: f64, half_width: f64) -> Result<QuantumState> {
    let shell = shell_indices(bundle, center, half_width);
    if shell.is_empty() {
        return Err(Error::EmptyShell {
            lo: center - half_width,
            hi: center + half_width,
        });
    }
    let n = bundle.dim();
    let w = C64::new(1.0 / shell.len() as f64, 0.0);
    let mut rho = CMatrix::zeros(n, n);
    for &k in &shell {
        let v = bundle.vectors.column(k);
        rho += v * v.adjoint() * w;
    }
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    QuantumState::mixed(bundle.support.clone(), bundle.local_dim, rho)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiteDistance {
    pub per_block: Vec<f64>,
    pub max: f64,
}

/// Trace distances between block reductions of `state` and `reference`.
pub fn mite_distance(state: &QuantumState, partition: &Partition, reference: &QuantumState) -> Result<MiteDistance> {
    if state.support() != reference.support() || state.local_dim() != reference.local_dim() {
        return Err(Error::SupportMismatch("state and reference supports differ".into()));
    }
    let per_block = partition
        .blocks()
        .iter()
        .map(|b| states::trace_distance(&state.partial_trace(b)?, &reference.partial_trace(b)?))
        .collect::<Result<Vec<_>>>()?;
    let max = per_block.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(MiteDistance { per_block, max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePolicy {
    /// Global Gibbs state with `E_Gibbs = E_k`; negative `β` above the mean energy.
    #[default]
    CanonicalMatched,
    /// Equal-weight shell of half-width `ΔE` around `E_k`.
    MicrocanonicalWindow,
}

#[derive(Debug, Clone)]
pub struct EthScanConfig {
    pub policy: ReferencePolicy,
    /// Shell half-width; defaults to `0.05 √V · width / V`.
    pub window: Option<f64>,
    /// Eigenstate index band as fractions of the spectrum, e.g. `(0.4, 0.6)`.
    pub band: Option<(f64, f64)>,
    /// Sampled circuits per eigenstate.
    pub circuits: usize,
    pub sampler: CircuitSampler,
    pub seed: u64,
}

impl Default for EthScanConfig {
    fn default() -> Self {
        EthScanConfig {
            policy: ReferencePolicy::CanonicalMatched,
            window: None,
            band: None,
            circuits: 8,
            sampler: CircuitSampler::default(),
            seed: 0,
        }
    }
}

pub fn default_window(bundle: &SpectrumBundle, sites: usize) -> f64 {
    let width = bundle.energies[bundle.dim() - 1] - bundle.energies[0];
    let v = sites as f64;
    0.05 * v.sqrt() * width / v
}

/// Index range `[⌊lo N⌋, ⌈hi N⌉)` of a fractional band.
pub fn band_indices(n: usize, band: (f64, f64)) -> std::ops::Range<usize> {
    let lo = ((band.0.clamp(0.0, 1.0) * n as f64).floor() as usize).min(n);
    let hi = ((band.1.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
    lo..hi.max(lo)
}

#[derive(Debug, Clone, Serialize)]
pub struct EthScanRow {
    pub index: usize,
    pub energy: f64,
    pub energy_density: f64,
    pub per_block: Vec<f64>,
    pub max_trace_distance: f64,
    pub athermality_cap: f64,
    /// Largest work over the identity and the sampled circuits.
    pub best_work: f64,
    /// Smallest `bound - work` over the evaluated channels.
    pub min_margin: f64,
    /// Every evaluated channel satisfies the finite-size chain.
    pub verified: bool,
    /// `β` of the canonical reference, or `nan` for the shell policy.
    pub reference_beta: f64,
    pub shell_count: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EthScan {
    pub rows: Vec<EthScanRow>,
    pub policy: ReferencePolicy,
    pub window: Option<f64>,
    pub seed: u64,
    pub residual_slack: f64,
    pub fingerprint: Option<String>,
}

impl EthScan {
    pub const FIXED_COLUMNS: [&'static str; 6] = [
        "index",
        "energy",
        "energy_density",
        "max_trace_distance",
        "athermality_cap",
        "best_work",
    ];

    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.verified)
    }

    /// Median of `max_trace_distance` over the rows.
    pub fn median_max_distance(&self) -> Option<f64> {
        let mut d: Vec<f64> = self.rows.iter().map(|r| r.max_trace_distance).collect();
        if d.is_empty() {
            return None;
        }
        d.sort_by(f64::total_cmp);
        let m = d.len() / 2;
        Some(if d.len() % 2 == 1 {
            d[m]
        } else {
            0.5 * (d[m - 1] + d[m])
        })
    }

    pub fn to_table(&self) -> CsvTable {
        let blocks = self.rows.first().map_or(0, |r| r.per_block.len());
        let mut columns: Vec<String> = Self::FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        columns.extend((1..=blocks).map(|b| format!("distance_block{b}")));
        columns.extend(
            ["reference_beta", "shell_count", "min_margin", "verified", "degenerate"]
                .iter()
                .map(|s| s.to_string()),
        );
        let mut t = CsvTable::new(columns);
        for r in &self.rows {
            let mut row = vec![
                r.index.to_string(),
                format_float(r.energy),
                format_float(r.energy_density),
                format_float(r.max_trace_distance),
                format_float(r.athermality_cap),
                format_float(r.best_work),
            ];
            row.extend(r.per_block.iter().map(|&d| format_float(d)));
            row.push(format_float(r.reference_beta));
            row.push(r.shell_count.to_string());
            row.push(format_float(r.min_margin));
            row.push(r.verified.to_string());
            row.push(r.degenerate.to_string());
            t.push(row);
        }
        t
    }
}

/// Inverse temperature, possibly negative, with `E_Gibbs(β) = energy`.
fn signed_beta(up: &ThermoSpectrum, down: &ThermoSpectrum, energy: f64) -> f64 {
    if energy <= up.mean_energy() {
        up.beta_for_energy(energy)
    } else {
        -down.beta_for_energy(-energy)
    }
}

fn signed_gibbs_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    if beta == 0.0 {
        return vec![1.0 / energies.len() as f64; energies.len()];
    }
    let tol = DEGENERACY_TOL * energies.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let reference = if beta > 0.0 {
        energies[0]
    } else {
        energies[energies.len() - 1]
    };
    let w: Vec<f64> = if beta.is_infinite() {
        energies
            .iter()
            .map(|&e| if (e - reference).abs() <= tol { 1.0 } else { 0.0 })
            .collect()
    } else {
        energies.iter().map(|&e| (-beta * (e - reference)).exp()).collect()
    };
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn weighted_reductions(
    reductions: &[Vec<CMatrix>],
    weights: impl Iterator<Item = (usize, f64)>,
    blocks: usize,
) -> Vec<CMatrix> {
    let mut out: Vec<Option<CMatrix>> = vec![None; blocks];
    for (n, w) in weights {
        if w == 0.0 {
            continue;
        }
        for (b, r) in reductions[n].iter().enumerate() {
            let term = r * C64::new(w, 0.0);
            match &mut out[b] {
                Some(acc) => *acc += term,
                slot => *slot = Some(term),
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(b, m)| {
            m.unwrap_or_else(|| CMatrix::from_element(reductions[0][b].nrows(), reductions[0][b].ncols(), ZERO))
        })
        .collect()
}

/// Diagonalizes the model and scans its eigenstates.
pub fn eth_scan(spec: &ModelSpec, lattice: &Lattice, partition: &Partition, config: &EthScanConfig) -> Result<EthScan> {
    let bundle = diagonalize_model(spec, lattice)?;
    eth_scan_bundle(&bundle, spec, lattice, partition, config)
}

/// Per-eigenstate MITE distances, athermality caps and sampled work.
///
/// Rows are computed concurrently and returned in ascending energy order;
/// the circuit stream of row `k` is seeded by `(seed, k)` so the output does
/// not depend on scheduling.
pub fn eth_scan_bundle(
    bundle: &SpectrumBundle,
    spec: &ModelSpec,
    lattice: &Lattice,
    partition: &Partition,
    config: &EthScanConfig,
) -> Result<EthScan> {
    check_partition(lattice, partition)?;
    spec.check_lattice(lattice)?;
    if bundle.support != (0..lattice.sites()).collect::<Vec<_>>() {
        return Err(Error::SupportMismatch("spectrum does not cover the lattice".into()));
    }
    let d = spec.local_dim();
    let blocks = partition.blocks();
    let spectra = BlockSpectra::new(spec, partition)?;
    let residual = residual_norm_bound(spec, partition)?.sum_bound;
    let up = bundle.thermo()?;
    let down = ThermoSpectrum::from_energies(bundle.energies.iter().map(|e| -e).collect())?;
    let window = match config.policy {
        ReferencePolicy::MicrocanonicalWindow => {
            Some(config.window.unwrap_or_else(|| default_window(bundle, lattice.sites())))
        }
        ReferencePolicy::CanonicalMatched => None,
    };

    let reductions: Vec<Vec<CMatrix>> = (0..bundle.dim())
        .into_par_iter()
        .map(|k| {
            let psi = bundle.eigenstate(k)?;
            blocks
                .iter()
                .map(|b| Ok(psi.partial_trace(b)?.density_matrix()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let indices: Vec<usize> = match config.band {
        Some(band) => band_indices(bundle.dim(), band).collect(),
        None => (0..bundle.dim()).collect(),
    };
    let block_state = |m: CMatrix, b: usize| QuantumState::mixed_trusted(blocks[b].clone(), d, m);

    let rows = indices
        .par_iter()
        .map(|&k| {
            let energy = bundle.energies[k];
            let (reference, reference_beta, shell_count) = match window {
                None => {
                    let beta = signed_beta(&up, &down, energy);
                    let w = signed_gibbs_weights(&bundle.energies, beta);
                    let count = w.iter().filter(|&&x| x > 0.0).count();
                    (
                        weighted_reductions(&reductions, w.into_iter().enumerate(), blocks.len()),
                        beta,
                        count,
                    )
                }
                Some(dw) => {
                    let shell = shell_indices(bundle, energy, dw);
                    let w = 1.0 / shell.len() as f64;
                    let r = weighted_reductions(&reductions, shell.iter().map(|&n| (n, w)), blocks.len());
                    (r, f64::NAN, shell.len())
                }
            };
            let reference: Vec<QuantumState> = reference
                .into_iter()
                .enumerate()
                .map(|(b, m)| block_state(m, b))
                .collect();
            let own: Vec<QuantumState> = reductions[k]
                .iter()
                .cloned()
                .enumerate()
                .map(|(b, m)| block_state(m, b))
                .collect();
            let leq = spectra.evaluate_reductions(reference)?;
            let input = spectra.evaluate_reductions(own)?;
            let beta0 = leq.betas.iter().cloned().fold(f64::INFINITY, f64::min);
            let ath = athermality_from(&leq, &input, blocks, lattice.sites(), d, beta0)?;
            let cap = if ath.max_distance == 0.0 || beta0.is_infinite() {
                0.0
            } else {
                ath.cap
            };

            let psi = bundle.eigenstate(k)?;
            let energy_in = spec.expectation(&psi)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let mut channels = vec![crate::ergotropy::Channel::identity()];
            channels.extend(config.sampler.sample_many(lattice, d, config.circuits, &mut rng));
            let mut best_work = f64::NEG_INFINITY;
            let mut min_margin = f64::INFINITY;
            let mut verified = true;
            for f in &channels {
                let o = evaluate_channel(&psi, energy_in, &input, &spectra, spec, residual, f)?;
                best_work = best_work.max(o.work);
                min_margin = min_margin.min(o.bound - o.work);
                verified &= o.verified;
            }
            Ok(EthScanRow {
                index: k,
                energy,
                energy_density: energy / lattice.sites() as f64,
                max_trace_distance: ath.max_distance,
                per_block: ath.per_block_distance,
                athermality_cap: cap,
                best_work,
                min_margin,
                verified,
                reference_beta,
                shell_count,
                degenerate: bundle.is_degenerate(k),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EthScan {
        rows,
        policy: config.policy,
        window,
        seed: config.seed,
        residual_slack: residual,
        fingerprint: bundle.fingerprint.clone(),
    })
}
