use num_complex::Complex64 as C64;
use proptest::prelude::*;

use pcs_sim::dynamics::lindblad_rhs;
use pcs_sim::hamiltonian::{build_effective_hamiltonian, EffectiveParams};
use pcs_sim::hilbert::{apply_to_state, charge_op, ladder_op, pair_annihilation, Ladder, Mode};
use pcs_sim::observables::charge_stats;
use pcs_sim::states::{fidelity_state, fock_state, motional_marginal, pcs_state, PcsLabel};
use pcs_sim::{AtomLevel, DensityOperator, SpaceConfig, StateVector};

fn atom() -> impl Strategy<Value = AtomLevel> {
    prop_oneof![Just(AtomLevel::Ground), Just(AtomLevel::Excited)]
}

fn xi() -> impl Strategy<Value = C64> {
    (0.0f64..3.0, -3.2f64..3.2).prop_map(|(r, phi)| C64::from_polar(r, phi))
}

fn random_state(space: SpaceConfig, seed: &[(f64, f64)]) -> StateVector {
    let amps: Vec<C64> = (0..space.dim())
        .map(|i| {
            let (re, im) = seed[i % seed.len()];
            C64::new(re + 0.01 * i as f64, im)
        })
        .collect();
    let mut psi = StateVector::from_amplitudes(space, amps).unwrap();
    psi.normalize().unwrap();
    psi
}

proptest! {
    #[test]
    fn flat_index_round_trips(cutoff in 1usize..25, s in atom(), n in 0usize..25, m in 0usize..25) {
        let space = SpaceConfig::new(cutoff).unwrap();
        let idx = space.flat_index(s, n, m);
        if n <= cutoff && m <= cutoff {
            let idx = idx.unwrap();
            prop_assert!(idx < space.dim());
            prop_assert_eq!(space.unflat_index(idx).unwrap(), (s, n, m));
        } else {
            prop_assert!(idx.is_err());
        }
    }

    #[test]
    fn canonical_commutator_below_cutoff(cutoff in 2usize..8, s in atom(), n in 0usize..8, m in 0usize..8) {
        prop_assume!(n < cutoff && m < cutoff);
        let space = SpaceConfig::new(cutoff).unwrap();
        let psi = fock_state(space, s, n, m).unwrap();
        for mode in [Mode::A, Mode::B] {
            let a = ladder_op(space, mode, Ladder::Lower);
            let ad = ladder_op(space, mode, Ladder::Raise);
            let c = a.commutator(&ad).unwrap();
            let out = apply_to_state(&c, &psi).unwrap();
            for (x, y) in out.amplitudes().iter().zip(psi.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pcs_is_normalized_charge_eigenstate(z in xi(), q in 0i64..5, s in atom()) {
        let space = SpaceConfig::new(30).unwrap();
        let psi = pcs_state(space, PcsLabel::new(z, q).unwrap(), s).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let ab = apply_to_state(&pair_annihilation(space), &psi).unwrap();
        let residual: f64 = ab
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, p)| (a - z * p).norm_sqr())
            .sum::<f64>()
            .sqrt();
        prop_assert!(residual < 1e-8);
        let (mean, var) = charge_stats(&psi).unwrap();
        prop_assert!((mean - q as f64).abs() < 1e-12);
        prop_assert!(var.abs() < 1e-9);
        prop_assert!(motional_marginal(&psi).off_charge(q) < 1e-15);
    }

    #[test]
    fn effective_hamiltonian_is_hermitian_and_conserves_charge(alpha in 0.01f64..1.0, z in xi(), cutoff in 1usize..10) {
        let space = SpaceConfig::new(cutoff).unwrap();
        let h = build_effective_hamiltonian(space, &EffectiveParams::new(alpha, z).unwrap());
        prop_assert!(h.hermitian_defect() < 1e-14);
        prop_assert!(h.commutator(&charge_op(space)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
        b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
    ) {
        let space = SpaceConfig::new(2).unwrap();
        let (x, y) = (random_state(space, &a), random_state(space, &b));
        let f = fidelity_state(&x, &y).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity_state(&y, &x).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn lindblad_rhs_is_traceless_and_hermitian(
        alpha in 0.01f64..0.5,
        z in xi(),
        gamma in 0.0f64..20.0,
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
    ) {
        let space = SpaceConfig::new(3).unwrap();
        let psi = random_state(space, &amps);
        let h = build_effective_hamiltonian(space, &EffectiveParams::new(alpha, z).unwrap());
        let d = lindblad_rhs(&DensityOperator::from_pure(&psi), &h, gamma).unwrap();
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!(d.hermitian_defect() < 1e-12);
    }

    #[test]
    fn pure_density_spectrum_is_zero_and_one(
        amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        w in 0.0f64..1.0,
    ) {
        let space = SpaceConfig::new(2).unwrap();
        let psi = random_state(space, &amps);
        let rho = DensityOperator::from_pure(&psi);
        prop_assert!(rho.min_eigenvalue().abs() < 1e-12);
        let mut mixed = DensityOperator::maximally_mixed(space);
        let scale = 1.0 / space.dim() as f64;
        mixed.add_scaled(&rho, w).unwrap();
        // (1/d) I + w |ψ⟩⟨ψ| has smallest eigenvalue 1/d
        prop_assert!((mixed.min_eigenvalue() - scale).abs() < 1e-12);
    }
}
