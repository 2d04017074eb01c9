//! Trotterized evolution under time-dependent short-range Hamiltonians and
//! entanglement-rate diagnostics.
//!
//! One step of length `τ` at midpoint time `t_m` applies
//! `e^{-iO τ/2} · Π_rev e^{-iU τ/2} · Π_fwd e^{-iU τ/2} · e^{-iO τ/2}`
//! where `O` collects on-site terms and the products run over pair terms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{block_cut_sums, verify_short_range, ModelSpec, TermKey};
use crate::lattice::{Lattice, Partition, Site};
use crate::linalg::{self, Budget, CMatrix};
use crate::report::{format_float, CsvTable};
use crate::states::QuantumState;

/// Default Trotter step.
pub const DEFAULT_DT: f64 = 0.01;
/// Default output stride in steps.
pub const DEFAULT_STRIDE: usize = 5;
/// Points of the grid on which the decay condition is checked.
const DECAY_CHECK_POINTS: usize = 33;

/// Time-dependent coefficient multiplying one term of the base model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant {
        value: f64,
    },
    /// `start + slope · t`.
    Linear {
        start: f64,
        slope: f64,
    },
    /// `offset + amplitude · sin(omega · t + phase)`.
    Sine {
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Schedule {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant { value } => value,
            Schedule::Linear { start, slope } => start + slope * t,
            Schedule::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
        }
    }
}

/// Base model plus coefficient schedules; unscheduled terms keep weight 1.
#[derive(Debug, Clone)]
pub struct Drive {
    base: ModelSpec,
    schedules: BTreeMap<TermKey, Schedule>,
}

impl Drive {
    pub fn new(base: ModelSpec) -> Self {
        Drive {
            base,
            schedules: BTreeMap::new(),
        }
    }

    pub fn with_schedule(mut self, key: TermKey, schedule: Schedule) -> Result<Self> {
        self.add_schedule(key, schedule)?;
        Ok(self)
    }

    pub fn add_schedule(&mut self, key: TermKey, schedule: Schedule) -> Result<()> {
        if self.base.term(key).is_none() {
            return Err(Error::UnknownTerm(key.to_string()));
        }
        self.schedules.insert(key, schedule);
        Ok(())
    }

    pub fn base(&self) -> &ModelSpec {
        &self.base
    }

    pub fn is_time_independent(&self) -> bool {
        self.schedules.values().all(|s| matches!(s, Schedule::Constant { .. }))
    }

    pub fn spec_at(&self, t: f64) -> ModelSpec {
        if self.schedules.is_empty() {
            return self.base.clone();
        }
        self.base.scaled(|k| self.schedules.get(&k).map_or(1.0, |s| s.at(t)))
    }

    /// Checks the decay condition on an even grid over `[0, total_time]`.
    pub fn check_decay(&self, lattice: &Lattice, total_time: f64) -> Result<()> {
        let points = if self.is_time_independent() {
            1
        } else {
            DECAY_CHECK_POINTS
        };
        for k in 0..points {
            let t = if points == 1 {
                0.0
            } else {
                total_time * k as f64 / (points - 1) as f64
            };
            let report = verify_short_range(&self.spec_at(t), lattice)?;
            if !report.admissible {
                return Err(Error::DecayViolation {
                    time: t,
                    required: report.minimal_u0,
                    configured: report.configured_u0,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterOptions {
    pub dt: f64,
    /// Record every `stride` steps; the final time is always recorded.
    pub stride: usize,
}

impl Default for TrotterOptions {
    fn default() -> Self {
        TrotterOptions {
            dt: DEFAULT_DT,
            stride: DEFAULT_STRIDE,
        }
    }
}

/// Recorded pure states of an evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    /// `<H(t)>` at each recorded time.
    pub energies: Vec<f64>,
    /// Actual step length (`T / ⌈T / dt⌉`).
    pub step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_t |‖ψ(t)‖ - 1|`.
    pub fn norm_drift(&self) -> f64 {
        self.states
            .iter()
            .filter_map(|s| s.vector())
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_t |E(t) - E(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }
}

struct Layer {
    sites: Vec<Site>,
    unitary: CMatrix,
}

fn layers(spec: &ModelSpec, half_step: f64) -> Result<(Vec<Layer>, Vec<Layer>)> {
    let onsite = spec
        .onsite_terms()
        .map(|(s, m)| {
            Ok(Layer {
                sites: vec![s],
                unitary: linalg::unitary_propagator(m, half_step)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = spec
        .pair_terms()
        .map(|((i, j), m)| {
            Ok(Layer {
                sites: vec![i, j],
                unitary: linalg::unitary_propagator(m, half_step)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((onsite, pairs))
}

fn strang_step(psi: &mut QuantumState, onsite: &[Layer], pairs: &[Layer]) -> Result<()> {
    let seq = onsite
        .iter()
        .chain(pairs.iter())
        .chain(pairs.iter().rev())
        .chain(onsite.iter());
    for layer in seq {
        psi.apply_local_unitary(&layer.sites, &layer.unitary)?;
    }
    Ok(())
}

/// Second-order splitting of `e^{-i∫H(t)dt}` applied to a pure state.
pub fn trotter_evolve(
    initial: &QuantumState,
    drive: &Drive,
    lattice: &Lattice,
    total_time: f64,
    options: TrotterOptions,
) -> Result<Trajectory> {
    if !(options.dt > 0.0) || !(total_time >= 0.0) || options.stride == 0 {
        return Err(Error::arg("need dt > 0, T >= 0 and stride >= 1"));
    }
    if !initial.is_pure() {
        return Err(Error::InvalidState("Trotter evolution needs a pure state".into()));
    }
    let sites: Vec<Site> = (0..lattice.sites()).collect();
    if initial.support() != sites.as_slice() || initial.local_dim() != drive.base.local_dim() {
        return Err(Error::SupportMismatch("initial state must cover the lattice".into()));
    }
    Budget::from_env().vector_dim(initial.local_dim(), sites.len())?;
    drive.base.check_lattice(lattice)?;
    drive.check_decay(lattice, total_time)?;

    let steps = (total_time / options.dt - 1e-9).ceil().max(0.0) as usize;
    let step = if steps == 0 {
        options.dt
    } else {
        total_time / steps as f64
    };
    let mut psi = initial.clone();
    let mut times = vec![0.0];
    let mut energies = vec![drive.spec_at(0.0).expectation(&psi)?];
    let mut states = vec![psi.clone()];
    let fixed = if drive.is_time_independent() {
        Some(layers(&drive.spec_at(0.0), 0.5 * step)?)
    } else {
        None
    };
    for n in 0..steps {
        let midpoint = (n as f64 + 0.5) * step;
        match &fixed {
            Some((o, p)) => strang_step(&mut psi, o, p)?,
            None => {
                let (o, p) = layers(&drive.spec_at(midpoint), 0.5 * step)?;
                strang_step(&mut psi, &o, &p)?;
            }
        }
        if (n + 1) % options.stride == 0 || n + 1 == steps {
            let t = (n + 1) as f64 * step;
            times.push(t);
            energies.push(drive.spec_at(t).expectation(&psi)?);
            states.push(psi.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        energies,
        step,
    })
}

/// `S(ρ_A(t))` at every recorded time.
pub fn block_entropies(traj: &Trajectory, block: &[Site]) -> Result<Vec<f64>> {
    traj.states.iter().map(|s| s.partial_trace(block)?.entropy()).collect()
}

/// `(t, dS_A/dt)` by central differences, one-sided at the ends.
pub fn entropy_rate(traj: &Trajectory, block: &[Site]) -> Result<Vec<(f64, f64)>> {
    let s = block_entropies(traj, block)?;
    finite_difference(&traj.times, &s)
}

pub(crate) fn finite_difference(t: &[f64], y: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = t.len();
    if n < 3 {
        return Err(Error::arg(format!("entropy rate needs at least 3 points, got {n}")));
    }
    Ok((0..n)
        .map(|k| {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            (t[k], (y[b] - y[a]) / (t[b] - t[a]))
        })
        .collect())
}

/// Entanglement-rate audit of one trajectory against the block cut sums.
#[derive(Debug, Clone, Serialize)]
pub struct SieReport {
    pub block_size: usize,
    /// `max_t |dS_A/dt|` per block.
    pub max_rates: Vec<f64>,
    /// `U_A` per block.
    pub cut_sums: Vec<f64>,
    /// `max rate / U_A`; `0` when both vanish, `inf` for a rate with `U_A = 0`.
    pub ratios: Vec<f64>,
    pub max_rate: f64,
}

pub fn sie_diagnostic(
    traj: &Trajectory,
    partition: &Partition,
    spec: &ModelSpec,
    lattice: &Lattice,
) -> Result<SieReport> {
    let cut_sums = block_cut_sums(spec, lattice, partition)?;
    let max_rates = partition
        .blocks()
        .iter()
        .map(|b| Ok(entropy_rate(traj, b)?.iter().map(|&(_, r)| r.abs()).fold(0.0, f64::max)))
        .collect::<Result<Vec<f64>>>()?;
    let ratios = max_rates
        .iter()
        .zip(&cut_sums)
        .map(|(&r, &u)| {
            if u > 0.0 {
                r / u
            } else if r <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(SieReport {
        block_size: partition.block_size(),
        max_rate: max_rates.iter().cloned().fold(0.0, f64::max),
        max_rates,
        cut_sums,
        ratios,
    })
}

/// Least-squares slope of `ln rate` against `ln l`.
pub fn area_law_slope(block_sizes: &[f64], rates: &[f64]) -> Result<f64> {
    if block_sizes.len() != rates.len() || block_sizes.len() < 2 {
        return Err(Error::arg("slope fit needs at least two matching points"));
    }
    if block_sizes.iter().chain(rates).any(|&x| !(x > 0.0)) {
        return Err(Error::arg("slope fit needs positive block sizes and rates"));
    }
    let x: Vec<f64> = block_sizes.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = rates.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// `t,energy,S_block1..,rate_block1..`.
pub fn trajectory_table(traj: &Trajectory, partition: &Partition) -> Result<CsvTable> {
    let blocks = partition.blocks();
    let entropies = blocks
        .iter()
        .map(|b| block_entropies(traj, b))
        .collect::<Result<Vec<_>>>()?;
    let rates = entropies
        .iter()
        .map(|s| finite_difference(&traj.times, s))
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec!["t".to_string(), "energy".to_string()];
    columns.extend((1..=blocks.len()).map(|b| format!("S_block{b}")));
    columns.extend((1..=blocks.len()).map(|b| format!("rate_block{b}")));
    let mut table = CsvTable::new(columns);
    for k in 0..traj.len() {
        let mut row = vec![format_float(traj.times[k]), format_float(traj.energies[k])];
        row.extend(entropies.iter().map(|s| format_float(s[k])));
        row.extend(rates.iter().map(|r| format_float(r[k].1)));
        table.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{pauli, presets};
    use crate::lattice::Boundary;
    use crate::linalg::{kron, C64};
    use crate::states::binary_entropy;

    fn xx_pair() -> (Lattice, ModelSpec) {
        let lat = Lattice::chain(2, Boundary::Open).unwrap();
        let mut spec = ModelSpec::new(2).unwrap();
        spec.add_pair(0, 1, &kron(&pauli::sx(), &pauli::sx())).unwrap();
        let spec = presets::fit_decay(spec, &lat, 1.0).unwrap();
        (lat, spec)
    }

    #[test]
    fn empty_drive_keeps_state() {
        let lat = Lattice::chain(3, Boundary::Open).unwrap();
        let psi = QuantumState::basis((0..3).collect(), 2, 5).unwrap();
        let drive = Drive::new(ModelSpec::new(2).unwrap());
        let traj = trotter_evolve(&psi, &drive, &lat, 1.0, TrotterOptions::default()).unwrap();
        let last = traj.states.last().unwrap().vector().unwrap();
        assert!((last[5] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_state_from_xx() {
        let (lat, spec) = xx_pair();
        let psi = QuantumState::all_zero(&lat, 2).unwrap();
        let t = std::f64::consts::FRAC_PI_4;
        let traj = trotter_evolve(&psi, &Drive::new(spec), &lat, t, TrotterOptions { dt: 0.01, stride: 1 }).unwrap();
        let s = traj
            .states
            .last()
            .unwrap()
            .partial_trace(&[0])
            .unwrap()
            .entropy()
            .unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn bell_rate_matches_closed_form() {
        let (lat, spec) = xx_pair();
        let psi = QuantumState::all_zero(&lat, 2).unwrap();
        let traj = trotter_evolve(
            &psi,
            &Drive::new(spec),
            &lat,
            0.7,
            TrotterOptions { dt: 0.001, stride: 1 },
        )
        .unwrap();
        let rates = entropy_rate(&traj, &[0]).unwrap();
        // S(t) = H2(sin² t)
        let exact = |t: f64| {
            let p = t.sin().powi(2);
            (2.0 * t).sin() * ((1.0 - p) / p).ln()
        };
        for &(t, r) in rates.iter().skip(100).step_by(100).take(5) {
            assert!((r - exact(t)).abs() < 1e-4, "t = {t}: {r} vs {}", exact(t));
        }
        let peak = rates.iter().map(|x| x.1.abs()).fold(0.0, f64::max);
        assert!(peak <= 4.0 * 2f64.ln());
        assert!((binary_entropy(0.5) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn onsite_drive_creates_no_entanglement() {
        let lat = Lattice::chain(4, Boundary::Periodic).unwrap();
        let spec = presets::mixed_field_ising(&lat, 0.0, 1.0, 0.3).unwrap();
        let drive = Drive::new(spec)
            .with_schedule(
                TermKey::Onsite(0),
                Schedule::Sine {
                    offset: 1.0,
                    amplitude: 0.5,
                    omega: 2.0,
                    phase: 0.0,
                },
            )
            .unwrap();
        let mut drive = drive;
        drive.base.set_decay(crate::hamiltonian::Decay { u0: 10.0, delta: 1.0 });
        let psi = QuantumState::all_zero(&lat, 2).unwrap();
        let traj = trotter_evolve(&psi, &drive, &lat, 1.0, TrotterOptions::default()).unwrap();
        let r = entropy_rate(&traj, &[0, 1]).unwrap();
        assert!(r.iter().all(|x| x.1.abs() <= 1e-6));
    }

    #[test]
    fn unknown_schedule_term() {
        let (_, spec) = xx_pair();
        let err = Drive::new(spec)
            .with_schedule(TermKey::Onsite(0), Schedule::Constant { value: 1.0 })
            .unwrap_err();
        assert!(matches!(err, Error::UnknownTerm(_)));
    }

    #[test]
    fn decay_violation_detected() {
        let (lat, spec) = xx_pair();
        let drive = Drive::new(spec)
            .with_schedule(TermKey::Pair(0, 1), Schedule::Linear { start: 1.0, slope: 1.0 })
            .unwrap();
        let psi = QuantumState::all_zero(&lat, 2).unwrap();
        let err = trotter_evolve(&psi, &drive, &lat, 1.0, TrotterOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DecayViolation { .. }));
    }

    #[test]
    fn slope_of_power_law() {
        let l = [2.0, 3.0, 4.0];
        let r: Vec<f64> = l.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((area_law_slope(&l, &r).unwrap() - 0.7).abs() < 1e-12);
        assert!(area_law_slope(&l[..1], &r[..1]).is_err());
    }

    #[test]
    fn few_points_rejected() {
        assert!(finite_difference(&[0.0, 1.0], &[0.0, 1.0]).is_err());
        let r = finite_difference(&[0.0, 1.0, 2.0], &[0.0, 1.0, 4.0]).unwrap();
        assert_eq!(r, vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)]);
    }
}
