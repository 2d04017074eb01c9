//! Canonical thermodynamics of a finite Hamiltonian.
//!
//! Everything here is a function of the spectrum only, so a [`ThermoSpectrum`]
//! is built once per Hamiltonian and reused across entropies and inverse
//! temperatures. Exponentials are always shifted by the ground energy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianOperator;
use crate::linalg::{self, CMatrix, C64};
use crate::states::{self, QuantumState};

/// `ln dim - S` below this counts as the infinite-temperature edge.
pub const MAX_ENTROPY_EDGE: f64 = 1e-9;
/// Relative spectral window for ground-state degeneracy.
pub const GROUND_DEGENERACY_TOL: f64 = 1e-9;
const BISECTION_STEPS: usize = 60;
const NEWTON_STEPS: usize = 3;
const BETA_LOW: f64 = 1e-6;
const BETA_CEILING: f64 = 1e15;

/// Thermodynamic functions at one inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoPoint {
    pub beta: f64,
    pub free_energy: f64,
    pub energy: f64,
    pub entropy: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Interior,
    /// `S <= ln d0`: the ground energy, `β = ∞`.
    Ground,
    /// `S` at `ln dim`: the infinite-temperature energy, `β = 0`.
    MaxEntropy,
}

/// Minimum energy compatible with a given entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalEnergyResult {
    pub energy: f64,
    /// `f64::INFINITY` in the ground regime, `0.0` at the max-entropy edge.
    pub beta: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone)]
pub struct ThermoSpectrum {
    energies: Vec<f64>,
    ground: f64,
    ground_degeneracy: usize,
    mean: f64,
}

impl ThermoSpectrum {
    pub fn from_energies(mut energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::arg("empty spectrum"));
        }
        energies.sort_by(f64::total_cmp);
        let ground = energies[0];
        let range = energies[energies.len() - 1] - ground;
        let window = GROUND_DEGENERACY_TOL * range;
        let ground_degeneracy = energies.iter().take_while(|&&e| e - ground <= window).count();
        let mean = energies.iter().sum::<f64>() / energies.len() as f64;
        Ok(ThermoSpectrum {
            energies,
            ground,
            ground_degeneracy,
            mean,
        })
    }

    pub fn from_operator(h: &HamiltonianOperator) -> Result<Self> {
        ThermoSpectrum::from_energies(h.eigenvalues()?)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.ground_degeneracy
    }

    /// `Tr H / dim`.
    pub fn mean_energy(&self) -> f64 {
        self.mean
    }

    pub fn ln_dim(&self) -> f64 {
        (self.dim() as f64).ln()
    }

    /// Normalized Gibbs weights in eigenvalue order.
    pub fn gibbs_weights(&self, beta: f64) -> Vec<f64> {
        if beta.is_infinite() {
            let g = self.ground_degeneracy as f64;
            return (0..self.dim())
                .map(|k| if k < self.ground_degeneracy { 1.0 / g } else { 0.0 })
                .collect();
        }
        let w: Vec<f64> = self
            .energies
            .iter()
            .map(|&e| (-beta * (e - self.ground)).exp())
            .collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// `F`, `E`, `S`, `σ²` at inverse temperature `beta > 0`.
    pub fn point(&self, beta: f64) -> ThermoPoint {
        let mut z = 0.0;
        let mut e1 = 0.0;
        for &e in &self.energies {
            let w = (-beta * (e - self.ground)).exp();
            z += w;
            e1 += w * (e - self.ground);
        }
        let shifted_mean = e1 / z;
        let mut var = 0.0;
        for &e in &self.energies {
            let w = (-beta * (e - self.ground)).exp() / z;
            let x = e - self.ground - shifted_mean;
            var += w * x * x;
        }
        let ln_z_shifted = z.ln();
        let energy = self.ground + shifted_mean;
        ThermoPoint {
            beta,
            free_energy: self.ground - ln_z_shifted / beta,
            energy,
            entropy: beta * shifted_mean + ln_z_shifted,
            variance: var,
        }
    }

    pub fn entropy_at(&self, beta: f64) -> f64 {
        self.point(beta).entropy
    }

    /// `E_H(S) = sup_β β⁻¹(S - ln Tr e^{-βH})`.
    pub fn canonical_energy(&self, entropy: f64) -> Result<CanonicalEnergyResult> {
        let ln_dim = self.ln_dim();
        if !(-1e-12..=ln_dim + 1e-12).contains(&entropy) || entropy.is_nan() {
            return Err(Error::EntropyOutOfRange { entropy, max: ln_dim });
        }
        if ln_dim - entropy < MAX_ENTROPY_EDGE {
            return Ok(self.max_entropy());
        }
        if entropy <= (self.ground_degeneracy as f64).ln() + 1e-15 {
            return Ok(self.ground_result());
        }
        match self.solve_beta(entropy) {
            Some(beta) => Ok(CanonicalEnergyResult {
                energy: self.point(beta).energy,
                beta,
                regime: Regime::Interior,
            }),
            None if entropy > 0.5 * ln_dim => Ok(self.max_entropy()),
            None => Ok(self.ground_result()),
        }
    }

    /// `β_H(S)`, with `∞` in the ground regime and `0` at the max-entropy edge.
    pub fn inverse_temperature(&self, entropy: f64) -> Result<f64> {
        Ok(self.canonical_energy(entropy)?.beta)
    }

    fn max_entropy(&self) -> CanonicalEnergyResult {
        CanonicalEnergyResult {
            energy: self.mean,
            beta: 0.0,
            regime: Regime::MaxEntropy,
        }
    }

    fn ground_result(&self) -> CanonicalEnergyResult {
        CanonicalEnergyResult {
            energy: self.ground,
            beta: f64::INFINITY,
            regime: Regime::Ground,
        }
    }

    /// Solves `S_H(β) = S` by log-space bisection followed by Newton polish.
    /// `None` when the root leaves the representable bracket.
    fn solve_beta(&self, entropy: f64) -> Option<f64> {
        let f = |b: f64| self.entropy_at(b) - entropy;
        let mut lo = BETA_LOW;
        while f(lo) <= 0.0 {
            lo /= 10.0;
            if lo < 1e-300 {
                return None;
            }
        }
        let mut hi = 1.0f64.max(lo * 2.0);
        while f(hi) >= 0.0 {
            hi *= 2.0;
            if hi > BETA_CEILING {
                return None;
            }
        }
        monotone_root(f, |b| -b * self.point(b).variance, lo, hi)
    }

    /// Inverse temperature with `E_H(β) = energy`; `0` at or above the
    /// infinite-temperature energy, `∞` at or below the ground energy.
    pub fn beta_for_energy(&self, energy: f64) -> f64 {
        let scale = 1.0 + self.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        if energy >= self.mean - 1e-14 * scale {
            return 0.0;
        }
        if energy <= self.ground + 1e-14 * scale {
            return f64::INFINITY;
        }
        let f = |b: f64| self.point(b).energy - energy;
        let mut lo = BETA_LOW;
        while f(lo) <= 0.0 {
            lo /= 10.0;
            if lo < 1e-300 {
                return 0.0;
            }
        }
        let mut hi = 1.0f64.max(lo * 2.0);
        while f(hi) >= 0.0 {
            hi *= 2.0;
            if hi > BETA_CEILING {
                return f64::INFINITY;
            }
        }
        monotone_root(f, |b| -self.point(b).variance, lo, hi).unwrap_or(f64::INFINITY)
    }
}

/// Root of a decreasing function on `[lo, hi]` with `f(lo) > 0 > f(hi)`.
fn monotone_root(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut b = (lo * hi).sqrt();
    for _ in 0..NEWTON_STEPS {
        let slope = df(b);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let next = b - f(b) / slope;
        if !(next >= lo && next <= hi) {
            break;
        }
        b = next;
    }
    Some(b)
}

/// Gibbs state `e^{-βH} / Tr e^{-βH}` on the operator's support.
pub fn gibbs_state(h: &HamiltonianOperator, beta: f64) -> Result<QuantumState> {
    if !(beta > 0.0) {
        return Err(Error::arg(format!("inverse temperature must be positive, got {beta}")));
    }
    let e = h.eigh()?;
    let spectrum = ThermoSpectrum::from_energies(e.values.clone())?;
    let w = spectrum.gibbs_weights(beta);
    Ok(gibbs_from_eigh(h, &e, &w))
}

pub(crate) fn gibbs_from_eigh(h: &HamiltonianOperator, e: &linalg::Eigh, weights: &[f64]) -> QuantumState {
    // eigenvalues of `e` are ascending, matching the weight order
    let n = e.vectors.nrows();
    let scaled = CMatrix::from_fn(n, n, |i, j| e.vectors[(i, j)] * weights[j]);
    let rho = &scaled * e.vectors.adjoint();
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    QuantumState::mixed_trusted(h.support().to_vec(), h.local_dim(), rho)
}

/// Tabulated `(β, F, E, S, σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoCurve {
    pub entries: Vec<ThermoPoint>,
}

impl ThermoCurve {
    pub const CSV_HEADER: &'static str = "beta,F,E,S,sigma2";

    pub fn to_table(&self) -> crate::report::CsvTable {
        use crate::report::format_float;
        let mut t = crate::report::CsvTable::new(Self::CSV_HEADER.split(',').map(String::from).collect());
        for p in &self.entries {
            t.push(
                [p.beta, p.free_energy, p.energy, p.entropy, p.variance]
                    .iter()
                    .map(|&x| format_float(x))
                    .collect(),
            );
        }
        t
    }
}

/// Thermodynamic functions on an ascending grid of positive `β`, all from a
/// single diagonalization.
pub fn thermo_curve(h: &HamiltonianOperator, betas: &[f64]) -> Result<ThermoCurve> {
    let spectrum = ThermoSpectrum::from_operator(h)?;
    thermo_curve_from(&spectrum, betas)
}

pub fn thermo_curve_from(spectrum: &ThermoSpectrum, betas: &[f64]) -> Result<ThermoCurve> {
    if betas.is_empty() {
        return Err(Error::arg("empty inverse-temperature grid"));
    }
    if betas.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::arg("inverse temperatures must be finite and positive"));
    }
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("inverse-temperature grid must be strictly ascending"));
    }
    Ok(ThermoCurve {
        entries: betas.iter().map(|&b| spectrum.point(b)).collect(),
    })
}

pub fn canonical_energy(h: &HamiltonianOperator, entropy: f64) -> Result<CanonicalEnergyResult> {
    ThermoSpectrum::from_operator(h)?.canonical_energy(entropy)
}

pub fn inverse_temperature(h: &HamiltonianOperator, entropy: f64) -> Result<f64> {
    ThermoSpectrum::from_operator(h)?.inverse_temperature(entropy)
}

/// `|A| ln(d) T1 + 1/e`.
pub fn fannes_bound(block_sites: usize, local_dim: usize, trace_norm: f64) -> f64 {
    block_sites as f64 * (local_dim as f64).ln() * trace_norm + (-1.0f64).exp()
}

/// The entropy-continuity bound evaluated both ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FannesReport {
    pub bound: f64,
    /// Sharper comparison value `T ln(D - 1) + H₂(T)` with `T = T1/2`.
    pub audenaert: f64,
    /// Set when `T1 > 1/e`, outside the usual validity range of the `1/e` form.
    pub advisory: bool,
}

pub fn fannes_report(block_sites: usize, local_dim: usize, trace_norm: f64) -> FannesReport {
    let dim = (local_dim as f64).powi(block_sites as i32);
    let t = (0.5 * trace_norm).min(1.0);
    let audenaert = if dim <= 1.0 {
        0.0
    } else if t >= 1.0 - 1.0 / dim {
        dim.ln()
    } else {
        t * (dim - 1.0).ln() + states::binary_entropy(t)
    };
    FannesReport {
        bound: fannes_bound(block_sites, local_dim, trace_norm),
        audenaert,
        advisory: trace_norm > (-1.0f64).exp(),
    }
}

/// `<H>_σ - E_H(S(σ))`, nonnegative by the minimum energy principle.
pub fn min_energy_gap(h: &HamiltonianOperator, sigma: &QuantumState) -> Result<f64> {
    let spectrum = ThermoSpectrum::from_operator(h)?;
    min_energy_gap_from(&spectrum, h, sigma)
}

pub fn min_energy_gap_from(spectrum: &ThermoSpectrum, h: &HamiltonianOperator, sigma: &QuantumState) -> Result<f64> {
    if sigma.support() != h.support() {
        return Err(Error::SupportMismatch("state and Hamiltonian supports differ".into()));
    }
    let s = sigma.entropy()?.min(spectrum.ln_dim());
    Ok(sigma.expectation(h)? - spectrum.canonical_energy(s)?.energy)
}
