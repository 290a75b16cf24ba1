use num_complex::Complex64 as C64;
use proptest::prelude::*;

use pcs_sim::dynamics::{
    detect_steady_state, integrate_master_equation, mc_ensemble, mc_trajectory, quench_carrier, steady_residual,
    trajectory_seed, Model, Probes, QuenchInput, SimParams,
};
use pcs_sim::hamiltonian::{build_effective_hamiltonian, DriveParams, EffectiveParams};
use pcs_sim::observables::{inversion, SnapshotRequest};
use pcs_sim::states::{fock_state, motional_marginal, pcs_state, purity, PcsLabel};
use pcs_sim::{AtomLevel, DensityOperator, ErrorCategory, SpaceConfig, StateVector};

fn effective(alpha: f64, xi: f64) -> Model {
    Model::Effective(EffectiveParams::new(alpha, C64::new(xi, 0.0)).unwrap())
}

/// Model with every drive switched off: pure spontaneous decay.
fn no_drive() -> Model {
    Model::Full(DriveParams {
        omega0: 0.0,
        omega1: 0.0,
        omega2: 0.0,
        ..DriveParams::default()
    })
}

fn params(model: Model, gamma: f64, dt: f64, t_final: f64) -> SimParams {
    SimParams {
        model,
        gamma,
        dt,
        t_final,
        n_traj: 1,
        master_seed: 0,
        output_every: 10,
    }
}

fn rho(psi: &StateVector) -> DensityOperator {
    DensityOperator::from_pure(psi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn master_equation_preserves_state_properties(
        alpha in 0.05f64..0.3,
        xi in 0.0f64..1.5,
        gamma in 0.5f64..10.0,
        excited in any::<bool>(),
        n in 0usize..3,
        m in 0usize..3,
    ) {
        let space = SpaceConfig::new(8).unwrap();
        let s = if excited { AtomLevel::Excited } else { AtomLevel::Ground };
        let psi = fock_state(space, s, n, m).unwrap();
        let p = params(effective(alpha, xi), gamma, 0.005, 2.0);
        let run = integrate_master_equation(&rho(&psi), &p, &Probes::default()).unwrap();
        for &t in &run.series.trace {
            prop_assert!((t - 1.0).abs() < 1e-9);
        }
        for &pu in run.series.purity.as_ref().unwrap() {
            prop_assert!(pu <= 1.0 + 1e-9);
        }
        for &q in &run.series.q_mean {
            prop_assert!((q - (n as f64 - m as f64)).abs() < 1e-9);
        }
        prop_assert!(run.rho.hermitian_defect() < 1e-12);
        prop_assert!(run.rho.min_eigenvalue() > -1e-9);
        prop_assert!(run.leak <= 1e-6);
    }
}

#[test]
fn free_decay_follows_exponential_at_every_sample() {
    let space = SpaceConfig::new(1).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 0, 0).unwrap();
    let p = params(no_drive(), 10.0, 0.005, 0.5);
    let run = integrate_master_equation(&rho(&psi), &p, &Probes::default()).unwrap();
    for (t, sz) in run.series.times.iter().zip(&run.series.sz) {
        let exact = 2.0 * (-10.0 * t).exp() - 1.0;
        assert!((sz - exact).abs() < 1e-6, "t = {t}: {sz} vs {exact}");
    }
}

#[test]
fn rk4_error_shrinks_sixteenfold_when_dt_halves() {
    let space = SpaceConfig::new(4).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 2, 1).unwrap();
    let sz_at = |dt: f64| {
        let p = params(effective(0.2, 1.0), 10.0, dt, 1.0);
        inversion(&integrate_master_equation(&rho(&psi), &p, &Probes::default()).unwrap().rho).unwrap()
    };
    let (a, b, c) = (sz_at(0.008), sz_at(0.004), sz_at(0.002));
    let ratio = (a - b).abs() / (b - c).abs();
    assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
}

/// Kolmogorov-Smirnov distance between jump times of pure decay and the
/// exponential law `1 − e^{−Γt}`.
#[test]
fn jump_times_are_exponential() {
    let space = SpaceConfig::new(1).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 0, 0).unwrap();
    let gamma = 10.0;
    let p = SimParams {
        n_traj: 10_000,
        master_seed: 2024,
        output_every: 300,
        ..params(no_drive(), gamma, 0.005, 1.5)
    };
    let probes = Probes {
        keep_trajectories: 10_000,
        ..Probes::default()
    };
    let e = mc_ensemble(&psi, &p, &probes).unwrap();
    let mut times: Vec<f64> = e
        .trajectories
        .iter()
        .map(|t| {
            assert_eq!(t.jump_times.len(), 1);
            t.jump_times[0]
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    let d = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = 1.0 - (-gamma * t).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 0.02, "KS distance {d}");
    assert!(e.jump_counts.iter().all(|&k| k == 1));
}

#[test]
fn ensemble_error_scales_as_inverse_root_n() {
    let space = SpaceConfig::new(6).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 2, 1).unwrap();
    let base = SimParams {
        master_seed: 5,
        output_every: 40,
        ..params(effective(0.2, 1.0), 10.0, 0.005, 4.0)
    };
    let me = integrate_master_equation(&rho(&psi), &base, &Probes::default()).unwrap();
    let stats = |n: usize| {
        let e = mc_ensemble(&psi, &SimParams { n_traj: n, ..base }, &Probes::default()).unwrap();
        let k = e.stderr.sz.len() as f64;
        let mean_se = e.stderr.sz.iter().skip(1).sum::<f64>() / (k - 1.0);
        let rms = (e.mean.sz.iter().zip(&me.series.sz).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / k).sqrt();
        (mean_se, rms)
    };
    let (se_small, rms_small) = stats(100);
    let (se_large, rms_large) = stats(1600);
    let ratio = se_small / se_large;
    assert!((3.0..5.3).contains(&ratio), "stderr ratio {ratio}");
    assert!(rms_small < 3.0 * se_small && rms_large < 3.0 * se_large);
}

#[test]
fn trajectories_are_reproducible_and_independent() {
    let space = SpaceConfig::new(6).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 2, 1).unwrap();
    let p = SimParams {
        n_traj: 8,
        master_seed: 99,
        ..params(effective(0.2, 1.0), 10.0, 0.005, 2.0)
    };
    let probes = Probes {
        keep_trajectories: 8,
        ..Probes::default()
    };
    let a = mc_trajectory(&psi, &p, &probes, 3).unwrap();
    let b = mc_trajectory(&psi, &p, &probes, 3).unwrap();
    assert_eq!(a.jump_times, b.jump_times);
    assert_eq!(a.seed_used, trajectory_seed(99, 3));
    assert_eq!(a.final_state.amplitudes(), b.final_state.amplitudes());

    let e = mc_ensemble(&psi, &p, &probes).unwrap();
    assert_eq!(e.trajectories[3].jump_times, a.jump_times);
    assert_eq!(e.seeds, (0..8).map(|i| trajectory_seed(99, i)).collect::<Vec<_>>());
    let distinct: std::collections::BTreeSet<String> =
        e.trajectories.iter().map(|t| format!("{:?}", t.jump_times)).collect();
    assert!(distinct.len() > 4);
}

#[test]
fn single_trajectory_ensemble_has_zero_stderr() {
    let space = SpaceConfig::new(6).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 2, 1).unwrap();
    let p = params(effective(0.2, 1.0), 10.0, 0.005, 1.0);
    let e = mc_ensemble(&psi, &p, &Probes::default()).unwrap();
    assert!(e.stderr.sz.iter().chain(&e.stderr.q_mean).all(|&v| v == 0.0));
    assert!((purity(&e.density) - 1.0).abs() < 1e-12);
}

#[test]
fn without_decay_a_trajectory_matches_the_master_equation() {
    let space = SpaceConfig::new(10).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 3, 2).unwrap();
    let p = params(effective(0.2, 1.0), 0.0, 0.005, 5.0);
    let traj = mc_trajectory(&psi, &p, &Probes::default(), 0).unwrap();
    let me = integrate_master_equation(&rho(&psi), &p, &Probes::default()).unwrap();
    assert!(traj.jump_times.is_empty());
    for (a, b) in traj.series.sz.iter().zip(&me.series.sz) {
        assert!((a - b).abs() < 1e-9);
    }
    for &pu in me.series.purity.as_ref().unwrap() {
        assert!((pu - 1.0).abs() < 1e-9);
    }
}

#[test]
fn dark_state_is_detected_as_steady() {
    let space = SpaceConfig::new(20).unwrap();
    let xi = C64::new(2.0, 0.0);
    let dark = pcs_state(space, PcsLabel::new(xi, 1).unwrap(), AtomLevel::Ground).unwrap();
    let h = build_effective_hamiltonian(space, &EffectiveParams::new(0.2, xi).unwrap());
    let r = steady_residual(&rho(&dark), &h, 10.0).unwrap();
    assert!(r.rhs_max < 1e-9 && r.commutator_max < 1e-9, "{r:?}");

    let bright = fock_state(space, AtomLevel::Excited, 7, 6).unwrap();
    assert!(!detect_steady_state(&rho(&bright), &h, 10.0, 1e-4).unwrap());
}

#[test]
fn snapshot_at_zero_is_the_initial_distribution() {
    let space = SpaceConfig::new(8).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 3, 2).unwrap();
    let p = params(effective(0.2, 1.0), 10.0, 0.005, 1.0);
    let probes = Probes {
        snapshots: SnapshotRequest::new(vec![0.0, 1.0]),
        ..Probes::default()
    };
    let run = integrate_master_equation(&rho(&psi), &p, &probes).unwrap();
    assert_eq!(run.snapshots.len(), 2);
    assert_eq!(run.snapshots[0].distribution, motional_marginal(&psi));
    assert!(run.snapshots[1].distribution.off_charge(1) < 1e-12);
    assert!((run.snapshots[1].distribution.total() - 1.0).abs() < 1e-9);
}

#[test]
fn small_cutoff_reports_truncation() {
    let space = SpaceConfig::new(4).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 3, 2).unwrap();
    let p = params(effective(0.2, 2.0), 10.0, 0.005, 20.0);
    let err = integrate_master_equation(&rho(&psi), &p, &Probes::default()).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Truncation);
    let err = mc_trajectory(&psi, &p, &Probes::default(), 0).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Truncation);
}

#[test]
fn oversized_step_is_rejected() {
    let space = SpaceConfig::new(4).unwrap();
    let psi = fock_state(space, AtomLevel::Excited, 0, 0).unwrap();
    let p = params(effective(0.2, 1.0), 10.0, 0.02, 1.0);
    let err = integrate_master_equation(&rho(&psi), &p, &Probes::default()).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Input);
}

#[test]
fn quench_routes_by_input_kind() {
    let space = SpaceConfig::new(12).unwrap();
    let psi = pcs_state(space, PcsLabel::new(C64::new(1.0, 0.0), 0).unwrap(), AtomLevel::Ground).unwrap();
    let p = SimParams {
        n_traj: 20,
        ..params(effective(0.2, 1.0), 1.0, 0.005, 2.0)
    };
    let dens = quench_carrier(&QuenchInput::Density(rho(&psi)), &p, &Probes::default()).unwrap();
    assert!(dens.stderr.is_none() && dens.series.purity.is_some());
    let ens = quench_carrier(&QuenchInput::State(psi.clone()), &p, &Probes::default()).unwrap();
    assert!(ens.stderr.is_some());
    // with the carrier off the dark state is no longer dark
    assert!(dens.series.sz.iter().any(|&s| s > -0.99));
}
