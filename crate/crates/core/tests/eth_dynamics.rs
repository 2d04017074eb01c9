use ergoscope_core::dynamics::{self, Drive, TrotterOptions};
use ergoscope_core::eth::{self, EthScanConfig, ReferencePolicy};
use ergoscope_core::hamiltonian::{assemble_full, presets};
use ergoscope_core::lattice::{partition_hypercubes, Boundary, Lattice, PartitionMode};
use ergoscope_core::linalg::{self, C64};
use ergoscope_core::QuantumState;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chain(size: usize) -> Lattice {
    Lattice::chain(size, Boundary::Periodic).unwrap()
}

/// Product state with every spin rotated by `theta` about y.
fn tilted(lat: &Lattice, theta: f64) -> QuantumState {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let n = lat.sites();
    let v = linalg::CVector::from_fn(1 << n, |idx, _| {
        let ones = idx.count_ones() as i32;
        C64::new(c.powi(n as i32 - ones) * s.powi(ones), 0.0)
    });
    QuantumState::pure((0..n).collect(), 2, v).unwrap()
}

#[test]
fn spectrum_bundle_residuals() {
    let lat = chain(8);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let h = assemble_full(&spec, &lat).unwrap();
    let b = eth::diagonalize(&h).unwrap();
    assert!(b.max_residual(&h) <= 1e-8 * b.norm());
    let overlap = b.vectors.adjoint() * &b.vectors - linalg::CMatrix::identity(b.dim(), b.dim());
    assert!(overlap.camax() <= 1e-10);
    assert!(b.energies.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn microcanonical_entropy_counts_the_shell() {
    let lat = chain(8);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let b = eth::diagonalize_model(&spec, &lat).unwrap();
    let e = &b.energies;
    let k = (100..200)
        .find(|&k| e[k] - e[k - 1] > 1e-6 && e[k + 5] - e[k + 4] > 1e-6)
        .expect("a separated run of five levels");
    let center = 0.5 * (e[k] + e[k + 4]);
    let half = 0.5 * (e[k + 4] - e[k]) + 1e-9;
    assert_eq!(eth::shell_indices(&b, center, half).len(), 5);
    let mc = eth::microcanonical_state(&b, center, half).unwrap();
    assert!((mc.entropy().unwrap() - 5f64.ln()).abs() < 1e-9);
    assert!((linalg::trace(&mc.density_matrix()).re - 1.0).abs() < 1e-12);
}

#[test]
fn mite_distance_refines_monotonically() {
    let lat = chain(8);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let b = eth::diagonalize_model(&spec, &lat).unwrap();
    let coarse = partition_hypercubes(&lat, 4, PartitionMode::Strict).unwrap();
    let mid = partition_hypercubes(&lat, 2, PartitionMode::Strict).unwrap();
    let fine = partition_hypercubes(&lat, 1, PartitionMode::Strict).unwrap();
    let reference = eth::microcanonical_state(&b, b.energies[128], 1.0).unwrap();
    for k in [60, 128, 190] {
        let psi = b.eigenstate(k).unwrap();
        let dc = eth::mite_distance(&psi, &coarse, &reference).unwrap();
        let dm = eth::mite_distance(&psi, &mid, &reference).unwrap();
        let df = eth::mite_distance(&psi, &fine, &reference).unwrap();
        for (i, &d) in dm.per_block.iter().enumerate() {
            assert!(d <= dc.per_block[i / 2] + 1e-12);
        }
        for (i, &d) in df.per_block.iter().enumerate() {
            assert!(d <= dm.per_block[i / 2] + 1e-12);
        }
        assert!(dc.per_block.iter().all(|&d| (0.0..=2.0 + 1e-12).contains(&d)));
    }
}

#[test]
fn eth_scan_is_deterministic() {
    let lat = chain(6);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let p = partition_hypercubes(&lat, 2, PartitionMode::Strict).unwrap();
    for policy in [ReferencePolicy::CanonicalMatched, ReferencePolicy::MicrocanonicalWindow] {
        let cfg = EthScanConfig {
            policy,
            circuits: 3,
            seed: 99,
            ..Default::default()
        };
        let a = eth::eth_scan(&spec, &lat, &p, &cfg).unwrap();
        let b = eth::eth_scan(&spec, &lat, &p, &cfg).unwrap();
        assert_eq!(a.to_table(), b.to_table());
        assert!(a.all_verified());
        assert_eq!(a.rows.len(), 64);
        for r in &a.rows {
            let max = r.per_block.iter().cloned().fold(0.0, f64::max);
            assert_eq!(max, r.max_trace_distance);
        }
    }
}

#[test]
fn nonintegrable_chain_thermalizes_better() {
    let lat = chain(10);
    let p = partition_hypercubes(&lat, 2, PartitionMode::Strict).unwrap();
    let cfg = EthScanConfig {
        band: Some((0.4, 0.6)),
        circuits: 1,
        ..Default::default()
    };
    let chaotic = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let integrable = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.0).unwrap();
    let a = eth::eth_scan(&chaotic, &lat, &p, &cfg)
        .unwrap()
        .median_max_distance()
        .unwrap();
    let b = eth::eth_scan(&integrable, &lat, &p, &cfg)
        .unwrap()
        .median_max_distance()
        .unwrap();
    assert!(a < b, "nonintegrable median {a} vs integrable {b}");
}

#[test]
fn trotter_error_is_second_order() {
    let lat = chain(6);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let psi = tilted(&lat, 0.9);
    let drive = Drive::new(spec);
    let drift = |dt: f64| {
        let traj = dynamics::trotter_evolve(&psi, &drive, &lat, 2.0, TrotterOptions { dt, stride: 1 }).unwrap();
        assert!(traj.norm_drift() < 1e-10);
        traj.energy_drift()
    };
    let (a, b) = (drift(0.05), drift(0.025));
    let ratio = a / b;
    assert!((3.0..=5.0).contains(&ratio), "drift ratio {ratio}");
}

#[test]
fn complementary_blocks_share_rates() {
    let lat = chain(6);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.05, 0.5).unwrap();
    let traj = dynamics::trotter_evolve(
        &tilted(&lat, 0.4),
        &Drive::new(spec),
        &lat,
        1.0,
        TrotterOptions::default(),
    )
    .unwrap();
    let a = dynamics::entropy_rate(&traj, &[0, 1]).unwrap();
    let b = dynamics::entropy_rate(&traj, &[2, 3, 4, 5]).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.1 - y.1).abs() < 1e-9);
    }
}

#[test]
fn random_mixed_state_is_rejected_by_trotter() {
    let lat = chain(3);
    let spec = presets::mixed_field_ising(&lat, 1.0, 1.0, 0.0).unwrap();
    let m = linalg::random_density(8, &mut ChaCha8Rng::seed_from_u64(3));
    let rho = QuantumState::mixed((0..3).collect(), 2, m).unwrap();
    assert!(dynamics::trotter_evolve(&rho, &Drive::new(spec), &lat, 1.0, TrotterOptions::default()).is_err());
}
