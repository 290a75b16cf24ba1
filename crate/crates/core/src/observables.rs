//! Atomic inversion, polarization, and charge statistics.
//!
//! Polarization follows `re = ⟨σ₋ + σ₊⟩`, `im = i⟨σ₋ − σ₊⟩` with `σ₋` placed
//! in the `g` row / `e` column, so `(|g⟩ + i|e⟩)/√2` has `im = −1`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{atom_op, charge_op, AtomOp, QuantumState, SparseOperator};

/// Times at which excitation-number snapshots are taken.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRequest {
    pub times: Vec<f64>,
}

impl SnapshotRequest {
    pub fn new(times: Vec<f64>) -> Self {
        Self { times }
    }

    pub fn validate(&self, t_final: f64) -> Result<()> {
        for (k, t) in self.times.iter().enumerate() {
            if !(0.0..=t_final * (1.0 + 1e-12)).contains(t) {
                return Err(Error::validation(
                    format!("snapshots.times[{k}]"),
                    format!("{t} outside [0, {t_final}]"),
                ));
            }
            if k > 0 && self.times[k - 1] >= *t {
                return Err(Error::validation(
                    format!("snapshots.times[{k}]"),
                    "times must be strictly increasing",
                ));
            }
        }
        Ok(())
    }
}

/// `⟨σ_z⟩`
pub fn inversion<S: QuantumState + ?Sized>(x: &S) -> Result<f64> {
    let sz = atom_op(x.space(), AtomOp::SigmaZ);
    Ok(x.expect(&sz)?.re)
}

/// `(⟨σ₋ + σ₊⟩, i⟨σ₋ − σ₊⟩)`
pub fn polarization<S: QuantumState + ?Sized>(x: &S) -> Result<(f64, f64)> {
    let space = x.space();
    let minus = x.expect(&atom_op(space, AtomOp::SigmaMinus))?;
    let plus = x.expect(&atom_op(space, AtomOp::SigmaPlus))?;
    let re = minus + plus;
    let im = C64::i() * (minus - plus);
    debug_assert!(re.im.abs() < 1e-12 && im.im.abs() < 1e-12);
    Ok((re.re, im.re))
}

/// Mean and variance of the number difference `Q̂`.
pub fn charge_stats<S: QuantumState + ?Sized>(x: &S) -> Result<(f64, f64)> {
    let q = charge_op(x.space());
    let mean = x.expect(&q)?.re;
    let q2 = q.compose(&q)?;
    let second = x.expect(&q2)?.re;
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// Expectation of an arbitrary operator, real part only.
pub fn expect_real<S: QuantumState + ?Sized>(x: &S, op: &SparseOperator) -> Result<f64> {
    Ok(x.expect(op)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomLevel, DensityOperator, SpaceConfig, StateVector};
    use crate::states::{fock_state, pcs_state, PcsLabel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn atom_superposition(sp: SpaceConfig, cg: C64, ce: C64) -> StateVector {
        let mut psi = StateVector::zeros(sp);
        psi.amplitudes_mut()[sp.flat_index(AtomLevel::Ground, 0, 0).unwrap()] = cg;
        psi.amplitudes_mut()[sp.flat_index(AtomLevel::Excited, 0, 0).unwrap()] = ce;
        psi
    }

    #[test]
    fn inversion_of_basis_and_superposition() {
        let sp = SpaceConfig::new(3).unwrap();
        assert_eq!(inversion(&fock_state(sp, AtomLevel::Excited, 2, 1).unwrap()).unwrap(), 1.0);
        assert_eq!(inversion(&fock_state(sp, AtomLevel::Ground, 0, 3).unwrap()).unwrap(), -1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = atom_superposition(sp, C64::new(h, 0.0), C64::new(h, 0.0));
        assert_abs_diff_eq!(inversion(&psi).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn polarization_sign_convention() {
        let sp = SpaceConfig::new(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(polarization(&fock_state(sp, AtomLevel::Ground, 0, 0).unwrap()).unwrap(), (0.0, 0.0));
        let (re, im) = polarization(&atom_superposition(sp, C64::new(h, 0.0), C64::new(h, 0.0))).unwrap();
        assert_abs_diff_eq!(re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(im, 0.0, epsilon = 1e-15);
        let (re, im) = polarization(&atom_superposition(sp, C64::new(h, 0.0), C64::new(0.0, h))).unwrap();
        assert_abs_diff_eq!(re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn charge_statistics() {
        let sp = SpaceConfig::new(20).unwrap();
        assert_eq!(charge_stats(&fock_state(sp, AtomLevel::Excited, 7, 6).unwrap()).unwrap(), (1.0, 0.0));
        let pcs = pcs_state(sp, PcsLabel::new(C64::new(2.0, 0.0), 3).unwrap(), AtomLevel::Ground).unwrap();
        let (mean, var) = charge_stats(&pcs).unwrap();
        assert_abs_diff_eq!(mean, 3.0, epsilon = 1e-12);
        assert_eq!(var, 0.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = StateVector::zeros(sp);
        psi.amplitudes_mut()[sp.flat_index(AtomLevel::Ground, 1, 0).unwrap()] = C64::new(h, 0.0);
        psi.amplitudes_mut()[sp.flat_index(AtomLevel::Ground, 0, 1).unwrap()] = C64::new(h, 0.0);
        let (mean, var) = charge_stats(&psi).unwrap();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn snapshot_request_validation() {
        assert!(SnapshotRequest::new(vec![0.0, 1.0, 2.0]).validate(2.0).is_ok());
        assert!(SnapshotRequest::new(vec![0.0, 3.0]).validate(2.0).is_err());
        assert!(SnapshotRequest::new(vec![1.0, 1.0]).validate(2.0).is_err());
    }

    fn random_state(cutoff: usize, raw: &[(f64, f64)]) -> StateVector {
        let sp = SpaceConfig::new(cutoff).unwrap();
        let amps = (0..sp.dim())
            .map(|i| {
                let (a, b) = raw[i % raw.len()];
                C64::new(a * ((i * 7 + 3) % 5) as f64, b)
            })
            .collect();
        let mut psi = StateVector::from_amplitudes(sp, amps).unwrap();
        psi.normalize().unwrap();
        psi
    }

    proptest! {
        #[test]
        fn bloch_vector_bound(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12)) {
            prop_assume!(raw.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3));
            let psi = random_state(2, &raw);
            let z = inversion(&psi).unwrap();
            let (re, im) = polarization(&psi).unwrap();
            prop_assert!(z * z + re * re + im * im <= 1.0 + 1e-9);
        }

        #[test]
        fn pure_and_projector_agree(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..12)) {
            prop_assume!(raw.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3));
            let psi = random_state(2, &raw);
            let rho = DensityOperator::from_pure(&psi);
            prop_assert!((inversion(&psi).unwrap() - inversion(&rho).unwrap()).abs() < 1e-12);
            let (a, b) = polarization(&psi).unwrap();
            let (c, d) = polarization(&rho).unwrap();
            prop_assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
            let (m1, v1) = charge_stats(&psi).unwrap();
            let (m2, v2) = charge_stats(&rho).unwrap();
            prop_assert!((m1 - m2).abs() < 1e-12 && (v1 - v2).abs() < 1e-12);
        }
    }
}
