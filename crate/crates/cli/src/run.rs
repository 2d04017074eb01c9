use std::path::PathBuf;

use ergoscope_core::dynamics::{self, Drive, TrotterOptions};
use ergoscope_core::ergotropy::{self, Channel, CircuitSampler};
use ergoscope_core::eth::{self, EthScanConfig};
use ergoscope_core::hamiltonian::{assemble_block, assemble_full, pauli, presets, ModelSpec, TermKey};
use ergoscope_core::lattice::{partition_hypercubes, Lattice, Partition, PartitionMode};
use ergoscope_core::linalg::{self, CMatrix, CVector, C64};
use ergoscope_core::report::{format_float, CsvTable};
use ergoscope_core::states::{self, QuantumState};
use ergoscope_core::thermo::{self, ThermoSpectrum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{ChannelConfig, CurveTarget, Preset, ReferenceKind, ScenarioConfig, StateConfig};
use crate::output::Output;
use crate::CliError;

/// Tolerance of the figure cross-checks.
pub const FIG1_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fig1,
    Bound,
    Protocol,
    EthScan,
    Dynamics,
    ThermoCurve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fig1 => "fig1",
            Command::Bound => "bound",
            Command::Protocol => "protocol",
            Command::EthScan => "eth-scan",
            Command::Dynamics => "dynamics",
            Command::ThermoCurve => "thermo-curve",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub config_hash: String,
}

/// Runs one subcommand; outputs are written even when verification fails.
pub fn run_scenario(config: &ScenarioConfig, command: Command) -> Result<RunSummary, CliError> {
    config.validate().map_err(CliError::Validation)?;
    let hash = config.hash();
    let mut out = Output::new(&config.output, command.name(), &hash, config.seed)?;
    let verdict = match command {
        Command::Fig1 => fig1(config, &mut out).map(drop),
        Command::Bound => bound(config, &mut out).map(drop),
        Command::Protocol => protocol(config, &mut out).map(drop),
        Command::EthScan => eth_scan(config, &mut out).map(drop),
        Command::Dynamics => dynamics_cmd(config, &mut out).map(drop),
        Command::ThermoCurve => thermo_curve(config, &mut out).map(drop),
    };
    verdict?;
    Ok(RunSummary {
        files: out.into_written(),
        config_hash: hash,
    })
}

/// Tags a core error with the config key it came from; budget errors keep
/// their exit code.
fn at(key: &str, e: ergoscope_core::Error) -> CliError {
    match e {
        ergoscope_core::Error::Budget { .. } => CliError::Budget(format!("key `{key}`: {e}")),
        other => CliError::Validation(format!("key `{key}`: {other}")),
    }
}

pub fn build_lattice(c: &ScenarioConfig) -> Result<Lattice, CliError> {
    Lattice::new(c.lattice.dim, c.lattice.size, c.lattice.boundary).map_err(|e| at("lattice", e))
}

fn pauli_matrix(letter: char) -> CMatrix {
    match letter.to_ascii_lowercase() {
        'x' => pauli::sx(),
        'y' => pauli::sy(),
        'z' => pauli::sz(),
        _ => pauli::identity(),
    }
}

pub fn build_model(c: &ScenarioConfig, lattice: &Lattice) -> Result<ModelSpec, CliError> {
    let m = &c.model;
    let mut spec = match m.preset {
        Preset::IsingZzField => presets::ising_zz_field(lattice, m.h.unwrap_or(1.0))?,
        Preset::MixedFieldIsing => {
            presets::mixed_field_ising(lattice, m.j.unwrap_or(1.0), m.g.unwrap_or(1.05), m.h.unwrap_or(0.5))?
        }
        Preset::Explicit => {
            let mut spec = ModelSpec::new(2)?;
            for (k, t) in m.terms.iter().enumerate() {
                let key = |e| at(&format!("model.terms[{k}]"), e);
                let mats: Vec<CMatrix> = t.pauli.chars().map(pauli_matrix).collect();
                let sites: Vec<usize> = t.sites.iter().map(|s| s - 1).collect();
                let coefficient = C64::new(t.coefficient, 0.0);
                if sites.len() == 1 {
                    spec.add_onsite(sites[0], &(&mats[0] * coefficient)).map_err(key)?;
                } else {
                    spec.add_pair(sites[0], sites[1], &(linalg::kron(&mats[0], &mats[1]) * coefficient))
                        .map_err(key)?;
                }
            }
            spec.check_lattice(lattice).map_err(|e| at("model.terms", e))?;
            presets::fit_decay(spec, lattice, 1.0)?
        }
    };
    if let Some(decay) = m.decay {
        spec.set_decay(decay);
    }
    Ok(spec)
}

pub fn build_partition(c: &ScenarioConfig, lattice: &Lattice) -> Result<Partition, CliError> {
    partition_hypercubes(lattice, c.partition.l, c.partition.mode).map_err(|e| at("partition", e))
}

fn pair_distance(c: &ScenarioConfig) -> usize {
    match c.state {
        StateConfig::PairFamily { pair_distance, .. } => pair_distance.unwrap_or(c.partition.l),
        _ => c.partition.l,
    }
}

/// Product state with every spin rotated by `theta` about y.
pub fn tilted_state(lattice: &Lattice, theta: f64) -> Result<QuantumState, CliError> {
    let n = lattice.sites();
    let dim = linalg::Budget::from_env().vector_dim(2, n)?;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let v = CVector::from_fn(dim, |idx, _| {
        let ones = idx.count_ones() as i32;
        C64::new(c.powi(n as i32 - ones) * s.powi(ones), 0.0)
    });
    Ok(QuantumState::pure((0..n).collect(), 2, v)?)
}

pub fn build_state(c: &ScenarioConfig, lattice: &Lattice, spec: &ModelSpec) -> Result<QuantumState, CliError> {
    Ok(match &c.state {
        StateConfig::ProductZero => QuantumState::all_zero(lattice, spec.local_dim())?,
        StateConfig::PairFamily { lambda, .. } => {
            states::build_pair_family(*lambda, lattice, pair_distance(c)).map_err(|e| at("state", e))?
        }
        StateConfig::Eigenstate { index, fraction } => {
            let bundle = eth::diagonalize_model(spec, lattice)?;
            let k = match (index, fraction) {
                (Some(k), _) => *k,
                (None, Some(f)) => ((f * bundle.dim() as f64) as usize).min(bundle.dim() - 1),
                (None, None) => unreachable!("validated"),
            };
            bundle.eigenstate(k).map_err(|e| at("state.index", e))?
        }
        StateConfig::Gibbs { beta } => thermo::gibbs_state(&assemble_full(spec, lattice)?, *beta)?,
        StateConfig::Tilted { theta } => tilted_state(lattice, *theta)?,
    })
}

/// Reference ensemble `ρ^leq` for the bound.
pub fn build_reference(
    c: &ScenarioConfig,
    rho: &QuantumState,
    spec: &ModelSpec,
    lattice: &Lattice,
) -> Result<QuantumState, CliError> {
    Ok(match c.reference.policy {
        ReferenceKind::SelfReference => rho.clone(),
        ReferenceKind::Gibbs => thermo::gibbs_state(&assemble_full(spec, lattice)?, c.reference.beta.unwrap_or(1.0))?,
        ReferenceKind::CanonicalMatched => {
            let h = assemble_full(spec, lattice)?;
            let spectrum = ThermoSpectrum::from_operator(&h)?;
            let beta = spectrum.beta_for_energy(rho.expectation(&h)?);
            if beta == 0.0 {
                QuantumState::maximally_mixed(h.support().to_vec(), h.local_dim())
            } else {
                thermo::gibbs_state(&h, beta)?
            }
        }
        ReferenceKind::MicrocanonicalWindow => {
            let bundle = eth::diagonalize_model(spec, lattice)?;
            let energy = spec.expectation(rho)?;
            let window = c
                .reference
                .window
                .unwrap_or_else(|| eth::default_window(&bundle, lattice.sites()));
            eth::microcanonical_state(&bundle, energy, window)?
        }
    })
}

pub fn build_channels(c: &ScenarioConfig, lattice: &Lattice, local_dim: usize) -> Result<Vec<Channel>, CliError> {
    if c.channels.is_empty() {
        return Ok(vec![Channel::identity()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut channels = Vec::new();
    for (k, ch) in c.channels.iter().enumerate() {
        match ch {
            ChannelConfig::Identity => channels.push(Channel::identity()),
            ChannelConfig::CnotProtocol => {
                let StateConfig::PairFamily { lambda, .. } = c.state else {
                    return Err(CliError::Validation(format!(
                        "key `channels[{k}]`: cnot_protocol needs a pair_family state"
                    )));
                };
                let f = ergotropy::cnot_protocol_channel(lambda, lattice.size(), pair_distance(c))
                    .map_err(|e| at(&format!("channels[{k}]"), e))?;
                channels.push(f);
            }
            ChannelConfig::RandomCircuits {
                count,
                depth,
                layer_time,
            } => {
                let sampler = CircuitSampler {
                    depth: *depth,
                    layer_time: *layer_time,
                };
                channels.extend(sampler.sample_many(lattice, local_dim, *count, &mut rng));
            }
        }
    }
    Ok(channels)
}

fn seed_meta(c: &ScenarioConfig) -> Vec<(&'static str, String)> {
    vec![(
        "lattice",
        format!("D={} L={} {:?}", c.lattice.dim, c.lattice.size, c.lattice.boundary),
    )]
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig1Summary {
    pub max_closed_form_error: f64,
    pub max_ed_error: f64,
    /// `max (E_Gibbs(S) - E_λ(S)) / l`; nonpositive when the Gibbs curve is below.
    pub max_dominance_violation: f64,
}

/// Minimum-energy curve of the `l`-site ring and the pair-family curve.
pub fn fig1(c: &ScenarioConfig, out: &mut Output) -> Result<Fig1Summary, CliError> {
    let f = &c.fig1;
    let l = f.l;
    let ring = Lattice::chain(l, ergoscope_core::Boundary::Periodic)?;
    let h_block = assemble_full(&presets::ising_zz_field(&ring, f.h)?, &ring)?;
    let spectrum = ThermoSpectrum::from_operator(&h_block)?;
    let lf = l as f64;

    let mut gibbs = CsvTable::new(vec!["beta".into(), "s_density".into(), "e_density".into()]);
    for beta in f.betas.values() {
        let p = spectrum.point(beta);
        gibbs.push(vec![
            format_float(beta),
            format_float(p.entropy / lf),
            format_float(p.energy / lf),
        ]);
    }

    let ed: Vec<(usize, Lattice, ModelSpec)> = f
        .ed_l
        .iter()
        .map(|&m| {
            let lat = Lattice::chain(2 * m, ergoscope_core::Boundary::Periodic)?;
            let spec = presets::ising_zz_field(&lat, f.h)?;
            Ok((m, lat, spec))
        })
        .collect::<Result<_, CliError>>()?;
    let mut columns: Vec<String> = ["lambda", "s_density", "e_density", "e_gibbs_density"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for (m, _, _) in &ed {
        columns.push(format!("s_ed_l{m}"));
        columns.push(format!("e_ed_l{m}"));
    }
    let mut lambda_table = CsvTable::new(columns);
    let mut summary = Fig1Summary {
        max_closed_form_error: 0.0,
        max_ed_error: 0.0,
        max_dominance_violation: f64::NEG_INFINITY,
    };
    let n = f.lambda_points;
    for k in 0..n {
        let lambda = 0.5 * (k + 1) as f64 / n as f64;
        let s = states::binary_entropy(lambda);
        let e = states::pair_family_energy_density(lambda, f.h);
        let e_gibbs = spectrum.canonical_energy((lf * s).min(spectrum.ln_dim()))?.energy / lf;
        summary.max_dominance_violation = summary.max_dominance_violation.max(e_gibbs - e);
        let mut row = vec![
            format_float(lambda),
            format_float(s),
            format_float(e),
            format_float(e_gibbs),
        ];
        for (m, lat, spec) in &ed {
            let psi = states::build_pair_family(lambda, lat, *m)?;
            let block: Vec<usize> = (0..*m).collect();
            let s_ed = psi.partial_trace(&block)?.entropy()? / *m as f64;
            let e_ed = spec.expectation(&psi)? / lat.sites() as f64;
            summary.max_ed_error = summary.max_ed_error.max((s_ed - s).abs()).max((e_ed - e).abs());
            row.push(format_float(s_ed));
            row.push(format_float(e_ed));
        }
        lambda_table.push(row);
    }
    // the written columns are re-read as the closed-form check
    for row in &lambda_table.rows {
        let lambda: f64 = row[0].parse().expect("formatted float");
        let s: f64 = row[1].parse().expect("formatted float");
        let e: f64 = row[2].parse().expect("formatted float");
        let m = 1.0 - 2.0 * lambda;
        let s_ref = if lambda == 0.0 {
            0.0
        } else {
            -lambda * lambda.ln() - (1.0 - lambda) * (1.0 - lambda).ln()
        };
        let e_ref = -m * m - f.h * m;
        summary.max_closed_form_error = summary
            .max_closed_form_error
            .max((s - s_ref).abs())
            .max((e - e_ref).abs());
    }

    let mut meta = seed_meta(c);
    meta.push(("block_size", l.to_string()));
    meta.push(("h", format_float(f.h)));
    meta.push((
        "h_choice",
        "default h=1 is a choice, not a value fixed by the figure".into(),
    ));
    out.csv("fig1_gibbs.csv", &gibbs, &meta)?;
    meta.push(("max_dominance_violation", format_float(summary.max_dominance_violation)));
    out.csv("fig1_lambda.csv", &lambda_table, &meta)?;

    if summary.max_ed_error > FIG1_TOL || summary.max_closed_form_error > FIG1_TOL {
        return Err(CliError::Verification(format!(
            "fig1 cross-check error {:e} / closed form {:e}",
            summary.max_ed_error, summary.max_closed_form_error
        )));
    }
    if summary.max_dominance_violation > FIG1_TOL {
        return Err(CliError::Verification(format!(
            "Gibbs curve above the pair-family curve by {:e}",
            summary.max_dominance_violation
        )));
    }
    Ok(summary)
}

pub fn bound(c: &ScenarioConfig, out: &mut Output) -> Result<ergotropy::BoundReport, CliError> {
    let lattice = build_lattice(c)?;
    let spec = build_model(c, &lattice)?;
    let partition = build_partition(c, &lattice)?;
    let rho = build_state(c, &lattice, &spec)?;
    let leq = build_reference(c, &rho, &spec, &lattice)?;
    let channels = build_channels(c, &lattice, spec.local_dim())?;
    let report = ergotropy::bound_report(
        &rho,
        &leq,
        &spec,
        &lattice,
        &partition,
        &channels,
        c.thermo.beta0,
        c.thermo.beta1,
        Some(c.seed),
    )?;
    let c_tilde = c
        .thermo
        .c_tilde
        .unwrap_or_else(|| ergotropy::default_c_tilde(spec.local_dim()));
    let local_control = match c.thermo.beta1 {
        Some(beta1) => Some(ergotropy::local_control_bound(
            &rho,
            &leq,
            &spec,
            &lattice,
            &partition,
            c.thermo.beta0,
            beta1,
            c.thermo.duration,
            c_tilde,
        )?),
        None => None,
    };
    let extra = [
        ("model_fingerprint", json!(spec.fingerprint())),
        ("c_tilde", json!(c_tilde)),
        (
            "c_tilde_note",
            json!("entropy-change cap is relative to the configured C~_d"),
        ),
        (
            "local_control",
            serde_json::to_value(&local_control).expect("serializable"),
        ),
    ];
    out.json("bound_report.json", "report", &report, &extra)?;
    if !report.all_verified() {
        let bad: Vec<&str> = report
            .channels
            .iter()
            .zip(&report.verified)
            .filter(|(_, &v)| !v)
            .map(|(n, _)| n.as_str())
            .collect();
        return Err(CliError::Verification(format!("finite-size chain violated by {bad:?}")));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolSummary {
    pub lambda: f64,
    pub h: f64,
    pub pair_distance: usize,
    pub work: f64,
    pub closed_form_work: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub ground_fidelity: f64,
    pub block_entropies_after: Vec<f64>,
}

pub fn protocol(c: &ScenarioConfig, out: &mut Output) -> Result<ProtocolSummary, CliError> {
    let StateConfig::PairFamily { lambda, .. } = c.state else {
        return Err(CliError::Validation(
            "key `state`: protocol needs builder = \"pair_family\"".into(),
        ));
    };
    if c.model.preset != Preset::IsingZzField {
        return Err(CliError::Validation(
            "key `model.preset`: protocol runs on ising_zz_field".into(),
        ));
    }
    let lattice = build_lattice(c)?;
    let partition = build_partition(c, &lattice)?;
    let h = c.model.h.unwrap_or(1.0);
    let l = pair_distance(c);
    let r = ergotropy::cnot_protocol(lambda, &lattice, l, h).map_err(|e| at("state", e))?;
    let block_entropies_after = partition
        .blocks()
        .iter()
        .map(|b| r.final_state.partial_trace(b)?.entropy())
        .collect::<Result<Vec<_>, _>>()?;
    let summary = ProtocolSummary {
        lambda,
        h,
        pair_distance: l,
        work: r.work,
        closed_form_work: ergotropy::cnot_protocol_work(lambda, lattice.size(), h),
        initial_energy: r.initial_energy,
        final_energy: r.final_energy,
        ground_fidelity: r.ground_fidelity,
        block_entropies_after,
    };
    out.json("protocol.json", "protocol", &summary, &[])?;
    Ok(summary)
}

pub fn eth_scan(c: &ScenarioConfig, out: &mut Output) -> Result<eth::EthScan, CliError> {
    let lattice = build_lattice(c)?;
    let spec = build_model(c, &lattice)?;
    let partition = build_partition(c, &lattice)?;
    let cfg = EthScanConfig {
        policy: c.eth.policy,
        window: c.eth.window,
        band: c.eth.band,
        circuits: c.eth.circuits,
        sampler: CircuitSampler {
            depth: c.eth.depth,
            layer_time: 1.0,
        },
        seed: c.seed,
    };
    let scan = eth::eth_scan(&spec, &lattice, &partition, &cfg)?;
    let mut meta = seed_meta(c);
    meta.push(("policy", format!("{:?}", scan.policy)));
    meta.push(("window", scan.window.map_or("none".into(), format_float)));
    meta.push(("residual_slack", format_float(scan.residual_slack)));
    meta.push((
        "model",
        format!(
            "{:?} j={:?} g={:?} h={:?}",
            c.model.preset, c.model.j, c.model.g, c.model.h
        ),
    ));
    meta.push(("model_fingerprint", spec.fingerprint()));
    meta.push((
        "median_max_trace_distance",
        scan.median_max_distance().map_or("none".into(), format_float),
    ));
    out.csv("eth_scan.csv", &scan.to_table(), &meta)?;
    if !scan.all_verified() {
        return Err(CliError::Verification(
            "finite-size chain violated in the eigenstate scan".into(),
        ));
    }
    Ok(scan)
}

fn parse_term(text: &str) -> Option<TermKey> {
    let t = text.trim();
    let inner = |prefix: &str| t.strip_prefix(prefix)?.strip_suffix(')').map(str::to_string);
    if let Some(s) = inner("onsite(") {
        let i: usize = s.trim().parse().ok()?;
        return (i >= 1).then(|| TermKey::Onsite(i - 1));
    }
    if let Some(s) = inner("pair(") {
        let (a, b) = s.split_once(',')?;
        let (a, b): (usize, usize) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        if a == 0 || b == 0 || a == b {
            return None;
        }
        return Some(TermKey::Pair(a.min(b) - 1, a.max(b) - 1));
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsSummary {
    pub steps_recorded: usize,
    pub step: f64,
    pub energy_drift: f64,
    pub norm_drift: f64,
    pub sweep: Vec<dynamics::SieReport>,
    pub area_law_slope: Option<f64>,
    pub c_tilde: f64,
    pub max_ratio: f64,
}

pub fn dynamics_cmd(c: &ScenarioConfig, out: &mut Output) -> Result<DynamicsSummary, CliError> {
    let lattice = build_lattice(c)?;
    let spec = build_model(c, &lattice)?;
    let partition = build_partition(c, &lattice)?;
    let mut drive = Drive::new(spec.clone());
    for (k, s) in c.dynamics.schedules.iter().enumerate() {
        let key = parse_term(&s.term).ok_or_else(|| {
            CliError::Validation(format!("key `dynamics.schedules[{k}].term`: cannot parse `{}`", s.term))
        })?;
        drive
            .add_schedule(key, s.schedule)
            .map_err(|e| at(&format!("dynamics.schedules[{k}].term"), e))?;
    }
    let psi = build_state(c, &lattice, &spec)?;
    let traj = dynamics::trotter_evolve(
        &psi,
        &drive,
        &lattice,
        c.dynamics.total_time,
        TrotterOptions {
            dt: c.dynamics.dt,
            stride: c.dynamics.stride,
        },
    )?;
    let c_tilde = c
        .thermo
        .c_tilde
        .unwrap_or_else(|| ergotropy::default_c_tilde(spec.local_dim()));
    let mut sizes = c.dynamics.l_sweep.clone();
    if sizes.is_empty() {
        sizes.push(c.partition.l);
    }
    let sweep = sizes
        .iter()
        .map(|&l| {
            let p = partition_hypercubes(&lattice, l, PartitionMode::Strict).map_err(|e| at("dynamics.l_sweep", e))?;
            Ok(dynamics::sie_diagnostic(&traj, &p, &spec, &lattice)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let area_law_slope = if sweep.len() >= 2 && sweep.iter().all(|r| r.max_rate > 0.0) {
        let ls: Vec<f64> = sweep.iter().map(|r| r.block_size as f64).collect();
        let rates: Vec<f64> = sweep.iter().map(|r| r.max_rate).collect();
        Some(dynamics::area_law_slope(&ls, &rates)?)
    } else {
        None
    };
    let max_ratio = sweep.iter().flat_map(|r| r.ratios.iter().cloned()).fold(0.0, f64::max);

    let mut meta = seed_meta(c);
    meta.push(("dt", format_float(traj.step)));
    meta.push(("stride", c.dynamics.stride.to_string()));
    meta.push(("block_size", c.partition.l.to_string()));
    out.csv("dynamics.csv", &dynamics::trajectory_table(&traj, &partition)?, &meta)?;

    let mut sie = CsvTable::new(
        ["l", "max_rate", "cut_sum", "max_ratio"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for r in &sweep {
        let cut = r.cut_sums.iter().cloned().fold(0.0, f64::max);
        let ratio = r.ratios.iter().cloned().fold(0.0, f64::max);
        sie.push(vec![
            r.block_size.to_string(),
            format_float(r.max_rate),
            format_float(cut),
            format_float(ratio),
        ]);
    }
    meta.push(("area_law_slope", area_law_slope.map_or("none".into(), format_float)));
    meta.push(("c_tilde", format_float(c_tilde)));
    out.csv("sie_sweep.csv", &sie, &meta)?;

    let summary = DynamicsSummary {
        steps_recorded: traj.len(),
        step: traj.step,
        energy_drift: traj.energy_drift(),
        norm_drift: traj.norm_drift(),
        sweep,
        area_law_slope,
        c_tilde,
        max_ratio,
    };
    out.json("dynamics_summary.json", "dynamics", &summary, &[])?;
    Ok(summary)
}

pub fn thermo_curve(c: &ScenarioConfig, out: &mut Output) -> Result<thermo::ThermoCurve, CliError> {
    let lattice = build_lattice(c)?;
    let spec = build_model(c, &lattice)?;
    let h = match c.thermo_curve.target {
        CurveTarget::Full => assemble_full(&spec, &lattice)?,
        CurveTarget::Block => assemble_block(&spec, &build_partition(c, &lattice)?, 0)?,
    };
    let curve = thermo::thermo_curve(&h, &c.thermo_curve.betas.values())?;
    let mut meta = seed_meta(c);
    meta.push(("target", format!("{:?}", c.thermo_curve.target).to_lowercase()));
    out.csv("thermo_curve.csv", &curve.to_table(), &meta)?;
    Ok(curve)
}
