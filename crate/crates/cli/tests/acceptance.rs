//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the report stays readable.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use ergoscope::config::{BetaGrid, Fig1Config};
use ergoscope::run::tilted_state;
use ergoscope::{run_scenario, Command, ScenarioConfig};
use ergoscope_core::dynamics::{self, Drive, Schedule, TrotterOptions};
use ergoscope_core::ergotropy::{self, Channel, CircuitSampler};
use ergoscope_core::eth::{self, EthScanConfig, ReferencePolicy};
use ergoscope_core::hamiltonian::{assemble_full, pauli, presets};
use ergoscope_core::lattice::{partition_hypercubes, Boundary, Lattice, PartitionMode};
use ergoscope_core::linalg::{self, CMatrix, C64};
use ergoscope_core::states::{self, QuantumState};
use ergoscope_core::thermo::{self, ThermoSpectrum};
use ergoscope_core::{HamiltonianOperator, ModelSpec, TermKey};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Binary entropy in nats, written out independently of the library.
fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.ln() - (1.0 - x) * (1.0 - x).ln()
    }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn fig1() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = ScenarioConfig::from_toml("[lattice]\nsize = 20\n").unwrap();
    config.output = dir.path().to_path_buf();
    config.fig1 = Fig1Config {
        l: 10,
        h: 1.0,
        lambda_points: 50,
        betas: BetaGrid {
            min: 0.01,
            max: 20.0,
            points: 200,
            log: true,
        },
        ed_l: vec![2, 3, 4, 5],
    };
    run_scenario(&config, Command::Fig1).map_err(|e| e.to_string())?;
    let (header, rows) = read_csv(&dir.path().join("fig1_lambda.csv"));
    check(rows.len() == 50, format!("{} lambda rows", rows.len()))?;
    let (mut closed, mut ed) = (0.0f64, 0.0f64);
    for r in &rows {
        let m = 1.0 - 2.0 * r[0];
        let (s, e) = (h2(r[0]), -m * m - m);
        closed = closed.max((r[1] - s).abs()).max((r[2] - e).abs());
        for pair in r[4..].chunks(2) {
            ed = ed.max((pair[0] - s).abs()).max((pair[1] - e).abs());
        }
        check(
            r[3] <= r[2] + 1e-9,
            format!("Gibbs above lambda curve at lambda={}", r[0]),
        )?;
    }
    check(header.len() == 4 + 2 * 4, "missing ED columns")?;
    check(
        closed <= 1e-9 && ed <= 1e-9,
        format!("closed-form error {closed:e}, ED error {ed:e}"),
    )?;
    // each Gibbs point lies on or below the lambda curve at the same entropy
    let (_, gibbs) = read_csv(&dir.path().join("fig1_gibbs.csv"));
    let mut worst = f64::NEG_INFINITY;
    for g in &gibbs {
        let (s, e) = (g[1], g[2]);
        if s > 2f64.ln() {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h2(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m = 1.0 - 2.0 * lo;
        worst = worst.max(e - (-m * m - m));
    }
    check(worst <= 1e-9, format!("Gibbs point above lambda curve by {worst:e}"))?;
    Ok(format!(
        "closed form {closed:.1e}, ED {ed:.1e}, dominance margin {:.1e}",
        -worst
    ))
}

/// Best work over every permutation unitary between the two eigenbases.
fn permutation_oracle(rho: &CMatrix, h: &CMatrix) -> f64 {
    let n = rho.nrows();
    let er = linalg::eigh(rho).unwrap();
    let eh = linalg::eigh(h).unwrap();
    let e_in = linalg::trace(&(rho * h)).re;
    (0..n)
        .permutations(n)
        .map(|perm| {
            let mut u = CMatrix::zeros(n, n);
            for (k, &p) in perm.iter().enumerate() {
                u += eh.vectors.column(p) * er.vectors.column(k).adjoint();
            }
            e_in - linalg::trace(&(&u * rho * u.adjoint() * h)).re
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn ergotropy_oracle() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let dim = 2 + k % 5;
        let h = linalg::random_hermitian(dim, &mut r);
        let rho = linalg::random_density(dim, &mut r);
        let w = ergotropy::passive_state(
            &QuantumState::single_mixed(rho.clone()).unwrap(),
            &HamiltonianOperator::single(h.clone()).unwrap(),
        )
        .map_err(|e| e.to_string())?
        .work;
        worst = worst.max((w - permutation_oracle(&rho, &h)).abs());
    }
    check(worst <= 1e-12, format!("max difference {worst:e}"))?;
    Ok(format!("max difference {worst:.1e} over 200 pairs"))
}

fn gibbs_passivity() -> Outcome {
    let mut r = rng(3);
    let (mut global, mut channel) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..50 {
        let dim = 2 + k % 15;
        let h = HamiltonianOperator::single(linalg::random_hermitian(dim, &mut r)).unwrap();
        for beta in [0.2, 1.0, 5.0] {
            let g = thermo::gibbs_state(&h, beta).map_err(|e| e.to_string())?;
            global = global.max(ergotropy::passive_state(&g, &h).unwrap().work);
            for _ in 0..100 {
                let f = Channel::global_unitary("u", linalg::haar_unitary(dim, &mut r)).unwrap();
                channel = channel.max(ergotropy::channel_work(&g, &h, &f).unwrap());
            }
        }
    }
    check(
        global <= 1e-9 && channel <= 1e-9,
        format!("global {global:e}, channel {channel:e}"),
    )?;
    Ok(format!("max global work {global:.1e}, max channel work {channel:.1e}"))
}

fn finite_size_chain() -> Outcome {
    let mut evaluated = 0usize;
    let mut min_margin = f64::INFINITY;
    for size in [8usize, 10] {
        let lat = Lattice::chain(size, Boundary::Periodic).unwrap();
        let spec = presets::ising_zz_field(&lat, 1.0).unwrap();
        let h = assemble_full(&spec, &lat).unwrap();
        let spectrum = ThermoSpectrum::from_operator(&h).unwrap();
        let bundle = eth::diagonalize(&h).unwrap();
        for l in [2usize, 4] {
            let partition = partition_hypercubes(&lat, l, PartitionMode::Lenient).unwrap();
            let sep = if size % (2 * l) == 0 { l } else { size / 2 };
            let pair = states::build_pair_family(0.25, &lat, sep).unwrap();
            let mid = bundle.eigenstate(bundle.dim() / 2).unwrap();
            let gibbs = thermo::gibbs_state(&h, 1.0).unwrap();
            for (name, rho) in [("pair", pair), ("eigenstate", mid), ("gibbs", gibbs)] {
                let mut sampler_rng = rng(1000 * size as u64 + l as u64);
                let mut channels = vec![Channel::identity()];
                if name == "pair" {
                    channels.push(ergotropy::cnot_protocol_channel(0.25, size, sep).unwrap());
                }
                channels.extend(CircuitSampler::default().sample_many(&lat, 2, 200, &mut sampler_rng));
                let beta = spectrum.beta_for_energy(rho.expectation(&h).unwrap());
                let leq = if beta == 0.0 {
                    QuantumState::maximally_mixed((0..size).collect(), 2)
                } else {
                    thermo::gibbs_state(&h, beta).unwrap()
                };
                let report =
                    ergotropy::bound_report(&rho, &leq, &spec, &lat, &partition, &channels, 1.0, None, Some(7))
                        .map_err(|e| e.to_string())?;
                let at = format!("L={size} l={l} {name}");
                check(report.all_verified(), format!("violation at {at}"))?;
                // spot-check the reported work against a direct energy difference
                for k in [0, channels.len() - 1] {
                    let out = channels[k].apply(&rho).unwrap();
                    let direct = rho.expectation(&h).unwrap() - out.expectation(&h).unwrap();
                    check(
                        (direct - report.works[k]).abs() < 1e-9,
                        format!("work mismatch at {at}"),
                    )?;
                }
                for (w, b) in report.works.iter().zip(&report.bounds) {
                    min_margin = min_margin.min(b - w);
                }
                evaluated += channels.len();
            }
        }
    }
    check(min_margin >= -1e-9, format!("margin {min_margin:e}"))?;
    Ok(format!(
        "{evaluated} channel evaluations, zero violations, min margin {min_margin:.3e}"
    ))
}

fn cnot_saturation() -> Outcome {
    let lat = Lattice::chain(8, Boundary::Periodic).unwrap();
    let r = ergotropy::cnot_protocol(0.25, &lat, 2, 1.0).map_err(|e| e.to_string())?;
    // L[(1+h) - m^2 - h m] with m = 1/2, h = 1
    let expected = 8.0 * (2.0 - 0.25 - 0.5);
    let partition = partition_hypercubes(&lat, 2, PartitionMode::Strict).unwrap();
    let max_entropy = partition
        .blocks()
        .iter()
        .map(|b| r.final_state.partial_trace(b).unwrap().entropy().unwrap())
        .fold(0.0, f64::max);
    check((r.work - expected).abs() <= 1e-9, format!("work {}", r.work))?;
    check(
        r.ground_fidelity >= 1.0 - 1e-9,
        format!("fidelity {}", r.ground_fidelity),
    )?;
    check(max_entropy <= 1e-9, format!("block entropy {max_entropy:e}"))?;
    Ok(format!(
        "work {:.12}, fidelity 1-{:.1e}, max block entropy {max_entropy:.1e}",
        r.work,
        1.0 - r.ground_fidelity
    ))
}

fn thermo_module() -> Outcome {
    let mut r = rng(6);
    let betas: Vec<f64> = (0..100).map(|k| 0.01 * 1000f64.powf(k as f64 / 99.0)).collect();
    let mut round_trip = 0.0f64;
    let mut convexity = 0.0f64;
    for k in 0..20 {
        let dim = 2 + k % 7;
        let sp =
            ThermoSpectrum::from_energies(linalg::eigvalsh(&linalg::random_hermitian(dim, &mut r)).unwrap()).unwrap();
        for &b in &betas {
            let p = sp.point(b);
            round_trip = round_trip.max((sp.canonical_energy(p.entropy).unwrap().energy - p.energy).abs());
        }
        let n = 200;
        let ds = sp.ln_dim() / n as f64;
        let e: Vec<f64> = (1..n)
            .map(|j| sp.canonical_energy(j as f64 * ds).unwrap().energy)
            .collect();
        for w in e.windows(3) {
            convexity = convexity.min((w[2] - 2.0 * w[1] + w[0]) / (ds * ds));
        }
    }
    let mut lipschitz = f64::NEG_INFINITY;
    for k in 0..100 {
        let h = linalg::random_hermitian(4, &mut r);
        let dh = linalg::random_hermitian(4, &mut r) * C64::new(0.01 * (k + 1) as f64, 0.0);
        let a = ThermoSpectrum::from_energies(linalg::eigvalsh(&h).unwrap()).unwrap();
        let b = ThermoSpectrum::from_energies(linalg::eigvalsh(&(&h + &dh)).unwrap()).unwrap();
        let beta = r.gen_range(0.05..5.0);
        let gap = (a.point(beta).free_energy - b.point(beta).free_energy).abs();
        lipschitz = lipschitz.max(gap - linalg::hermitian_norm(&dh).unwrap());
    }
    let mut divergence = 0.0f64;
    for _ in 0..100 {
        let h = HamiltonianOperator::single(linalg::random_hermitian(4, &mut r)).unwrap();
        let sigma = QuantumState::single_mixed(linalg::random_density(4, &mut r)).unwrap();
        let beta = r.gen_range(0.1..2.0);
        let g = thermo::gibbs_state(&h, beta).unwrap();
        let direct = states::relative_entropy(&sigma, &g).unwrap();
        let p = ThermoSpectrum::from_operator(&h).unwrap().point(beta);
        let identity = p.entropy - sigma.entropy().unwrap() + beta * (sigma.expectation(&h).unwrap() - p.energy);
        divergence = divergence.max((direct - identity).abs());
    }
    check(round_trip <= 1e-8, format!("round trip {round_trip:e}"))?;
    check(convexity >= -1e-8, format!("second difference {convexity:e}"))?;
    check(lipschitz <= 1e-12, format!("|dF| exceeds |dH| by {lipschitz:e}"))?;
    check(divergence <= 1e-9, format!("divergence identity {divergence:e}"))?;
    Ok(format!(
        "round trip {round_trip:.1e}, min second difference {convexity:.1e}, divergence {divergence:.1e}"
    ))
}

fn eth_trend() -> Outcome {
    let mut medians = Vec::new();
    for size in [8usize, 10, 12] {
        let lat = Lattice::chain(size, Boundary::Periodic).unwrap();
        let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
        let partition = partition_hypercubes(&lat, 2, PartitionMode::Strict).unwrap();
        let cfg = EthScanConfig {
            policy: ReferencePolicy::CanonicalMatched,
            band: Some((0.4, 0.6)),
            seed: 5,
            ..EthScanConfig::default()
        };
        let scan = eth::eth_scan(&spec, &lat, &partition, &cfg).map_err(|e| e.to_string())?;
        check(scan.all_verified(), format!("chain violated at L={size}"))?;
        medians.push(scan.median_max_distance().unwrap());
    }
    check(medians.windows(2).all(|w| w[1] < w[0]), format!("medians {medians:?}"))?;
    Ok(format!(
        "median max trace distance {:.4} > {:.4} > {:.4}",
        medians[0], medians[1], medians[2]
    ))
}

fn dynamics_suite() -> Outcome {
    let lat = Lattice::chain(8, Boundary::Periodic).unwrap();
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let psi = tilted_state(&lat, 0.9).unwrap();
    let drive = Drive::new(spec);
    let drift = |dt: f64| {
        dynamics::trotter_evolve(&psi, &drive, &lat, 2.0, TrotterOptions { dt, stride: 1 })
            .unwrap()
            .energy_drift()
    };
    let ratio = drift(0.05) / drift(0.025);
    check((3.0..=5.0).contains(&ratio), format!("drift ratio {ratio}"))?;

    let mut onsite = ModelSpec::new(2).unwrap();
    for i in 0..lat.sites() {
        onsite
            .add_onsite(i, &(pauli::sx() + pauli::sz() * C64::new(0.3, 0.0)))
            .unwrap();
    }
    // decay constant sized for the drive's peak amplitude 1.5
    let peak = presets::fit_decay(onsite.scaled(|_| 1.5), &lat, 1.0).unwrap().decay();
    onsite.set_decay(peak);
    let mut drive = Drive::new(onsite);
    drive
        .add_schedule(
            TermKey::Onsite(0),
            Schedule::Sine {
                offset: 1.0,
                amplitude: 0.5,
                omega: 3.0,
                phase: 0.0,
            },
        )
        .unwrap();
    let traj = dynamics::trotter_evolve(&psi, &drive, &lat, 1.0, TrotterOptions::default()).unwrap();
    let partition = partition_hypercubes(&lat, 2, PartitionMode::Strict).unwrap();
    let mut onsite_rate = 0.0f64;
    for b in partition.blocks() {
        for (_, rate) in dynamics::entropy_rate(&traj, b).unwrap() {
            onsite_rate = onsite_rate.max(rate.abs());
        }
    }
    check(onsite_rate <= 1e-6, format!("on-site entropy rate {onsite_rate:e}"))?;

    let big = Lattice::chain(12, Boundary::Periodic).unwrap();
    let spec = presets::mixed_field_ising(&big, 1.0, 1.05, 0.5).unwrap();
    let traj = dynamics::trotter_evolve(
        &tilted_state(&big, 0.9).unwrap(),
        &Drive::new(spec.clone()),
        &big,
        1.0,
        TrotterOptions::default(),
    )
    .unwrap();
    let (mut ls, mut rates) = (Vec::new(), Vec::new());
    for l in [2usize, 3, 4] {
        let p = partition_hypercubes(&big, l, PartitionMode::Strict).unwrap();
        let report = dynamics::sie_diagnostic(&traj, &p, &spec, &big).unwrap();
        ls.push(l as f64);
        rates.push(report.max_rate);
    }
    let slope = dynamics::area_law_slope(&ls, &rates).unwrap();
    check(slope.abs() < 0.5, format!("slope {slope}"))?;
    Ok(format!(
        "drift ratio {ratio:.3}, on-site rate {onsite_rate:.1e}, area-law slope {slope:.4}"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("figure-1 reproduction", fig1),
        ("ergotropy permutation oracle", ergotropy_oracle),
        ("Gibbs passivity", gibbs_passivity),
        ("finite-size bound chain", finite_size_chain),
        ("CNOT saturation", cnot_saturation),
        ("thermodynamic identities", thermo_module),
        ("ETH trend", eth_trend),
        ("dynamics", dynamics_suite),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = Duration::as_secs_f64(&start.elapsed());
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {secs:.1}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {secs:.1}s)", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
