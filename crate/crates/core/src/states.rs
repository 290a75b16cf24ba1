//! Fock and pair coherent states, the modified Bessel normalization, and
//! state-comparison metrics.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AtomLevel, DensityOperator, QuantumState, SpaceConfig, StateVector};

/// Largest discarded probability tolerated when truncating a pair coherent
/// state to the Fock cutoff.
pub const PCS_TAIL_TOLERANCE: f64 = 1e-10;

/// Modified Bessel function of the first kind `I_q(x)` for integer order,
/// by direct summation of its power series.
///
/// Summation stops once a term drops below `1e-17` of the partial sum. The
/// series converges for all `x`, and for `x ≤ 50` the result is accurate to
/// about `1e-13` relative.
pub fn bessel_i(q: i64, x: f64) -> Result<f64> {
    if q < 0 {
        return Err(Error::Domain(format!("Bessel order must be nonnegative, got {q}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and nonnegative, got {x}")));
    }
    if x == 0.0 {
        return Ok(if q == 0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * x;
    let quarter_sq = half * half;
    // (x/2)^q / q! built up incrementally so large orders don't overflow
    let mut term = 1.0;
    for i in 1..=q {
        term *= half / i as f64;
    }
    let qf = q as f64;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= quarter_sq / (k * (k + qf));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    Ok(sum)
}

/// Label of a pair coherent state: `âb̂ ψ = ξ ψ`, `Q̂ ψ = q ψ`.
///
/// Only `q ≥ 0` is represented. A state with negative charge is the mirror
/// image under exchanging the two modes: build it with `|q|` and swap the
/// roles of `n` and `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcsLabel {
    pub xi: C64,
    pub q: u32,
}

impl PcsLabel {
    pub fn new(xi: C64, q: i64) -> Result<Self> {
        if q < 0 {
            return Err(Error::Parameter(format!(
                "charge q = {q} is negative; exchange modes a and b and use q = {}",
                -q
            )));
        }
        if !xi.re.is_finite() || !xi.im.is_finite() {
            return Err(Error::Parameter("xi must be finite".into()));
        }
        Ok(Self { xi, q: q as u32 })
    }

    /// `N_q² = |ξ|^q / I_q(2|ξ|)`, with the `ξ → 0` limit `q!`.
    pub fn normalization_sqr(&self) -> Result<f64> {
        let r = self.xi.norm();
        if r == 0.0 {
            return Ok((1..=self.q).map(f64::from).product());
        }
        Ok(r.powi(self.q as i32) / bessel_i(self.q as i64, 2.0 * r)?)
    }
}

/// Excitation-number distribution `P(n, m)` over both modes, `n`-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionalDistribution {
    cutoff: usize,
    probabilities: Vec<f64>,
}

impl MotionalDistribution {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.probabilities[n * (self.cutoff + 1) + m]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Probability outside the diagonal `n − m = q`.
    pub fn off_charge(&self, q: i64) -> f64 {
        let l = self.cutoff + 1;
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(i, _)| (i / l) as i64 - (i % l) as i64 != q)
            .map(|(_, p)| p)
            .sum()
    }

    /// `n,m,p` rows, one per nonzero entry, shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let l = self.cutoff + 1;
        let mut out = String::from("n,m,p\n");
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p != 0.0 {
                let _ = writeln!(out, "{},{},{:?}", i / l, i % l, p);
            }
        }
        out
    }

    pub(crate) fn from_probabilities(cutoff: usize, probabilities: Vec<f64>) -> Self {
        debug_assert_eq!(probabilities.len(), (cutoff + 1) * (cutoff + 1));
        Self {
            cutoff,
            probabilities,
        }
    }
}

/// Basis state `|s, n, m⟩`.
pub fn fock_state(space: SpaceConfig, s: AtomLevel, n: usize, m: usize) -> Result<StateVector> {
    let idx = space.flat_index(s, n, m)?;
    let mut psi = StateVector::zeros(space);
    psi.amplitudes_mut()[idx] = C64::new(1.0, 0.0);
    Ok(psi)
}

/// Pair coherent state `N_q Σ_l ξ^l / √(l!(l+q)!) |l+q, l⟩` with the given
/// atomic factor, truncated at the cutoff and renormalized.
///
/// Fails when the discarded tail exceeds [`PCS_TAIL_TOLERANCE`].
pub fn pcs_state(space: SpaceConfig, label: PcsLabel, atom: AtomLevel) -> Result<StateVector> {
    let q = label.q as usize;
    let cutoff = space.cutoff();
    if q > cutoff {
        return Err(Error::IndexBounds(format!(
            "charge {q} does not fit under cutoff {cutoff}"
        )));
    }
    let norm = label.normalization_sqr()?.sqrt();
    let mut c = C64::new(norm / factorial(q).sqrt(), 0.0);
    let mut psi = StateVector::zeros(space);
    let last = cutoff - q;
    for l in 0..=last {
        psi.amplitudes_mut()[space.index(atom, l + q, l)] = c;
        c *= label.xi / (((l + 1) * (l + 1 + q)) as f64).sqrt();
    }
    // c now holds the first discarded coefficient; continue the recurrence
    // for the tail until it no longer contributes.
    let mut tail = 0.0;
    let mut l = last + 1;
    loop {
        let w = c.norm_sqr();
        tail += w;
        if w <= 1e-18 * tail.max(f64::MIN_POSITIVE) || w == 0.0 || l > last + 10_000 {
            break;
        }
        c *= label.xi / (((l + 1) * (l + 1 + q)) as f64).sqrt();
        l += 1;
    }
    if tail >= PCS_TAIL_TOLERANCE {
        return Err(Error::PcsTail {
            tail,
            tolerance: PCS_TAIL_TOLERANCE,
            cutoff,
        });
    }
    psi.normalize()?;
    Ok(psi)
}

/// `|⟨ψ|φ⟩|²`
pub fn fidelity_state(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().min(1.0))
}

/// `⟨ψ|ρ|ψ⟩`
pub fn fidelity_density(rho: &DensityOperator, psi: &StateVector) -> Result<f64> {
    if rho.space() != psi.space() {
        return Err(Error::Dimension {
            expected: rho.dim(),
            found: psi.space().dim(),
        });
    }
    let d = rho.dim();
    let a = psi.amplitudes();
    let data = rho.as_slice();
    let mut s = C64::new(0.0, 0.0);
    for (i, ai) in a.iter().enumerate() {
        if *ai == C64::new(0.0, 0.0) {
            continue;
        }
        let row = &data[i * d..(i + 1) * d];
        let r: C64 = row.iter().zip(a).map(|(x, b)| x * b).sum();
        s += ai.conj() * r;
    }
    Ok(s.re.clamp(0.0, 1.0))
}

/// `Tr(ρ²)` as the sum of squared entry magnitudes (valid for Hermitian ρ).
pub fn purity(rho: &DensityOperator) -> f64 {
    rho.as_slice().iter().map(|v| v.norm_sqr()).sum()
}

/// `P(n, m) = Σ_s ⟨s,n,m|ρ|s,n,m⟩`
pub fn motional_marginal<S: QuantumState + ?Sized>(x: &S) -> MotionalDistribution {
    let space = x.space();
    let pops = x.populations();
    MotionalDistribution::from_probabilities(space.cutoff(), marginal_from_populations(space, &pops))
}

pub(crate) fn marginal_from_populations(space: SpaceConfig, pops: &[f64]) -> Vec<f64> {
    let md = space.motional_dim();
    (0..md).map(|k| pops[k] + pops[md + k]).collect()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{apply_to_state, charge_op, pair_annihilation};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use AtomLevel::{Excited, Ground};

    #[test]
    fn bessel_reference_values() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(bessel_i(1, 2.0).unwrap(), 1.590636855, epsilon = 1e-8);
        assert_abs_diff_eq!(bessel_i(1, 4.0).unwrap(), 9.759465154, epsilon = 1e-7);
        // high-precision reference values
        assert_relative_eq!(bessel_i(0, 50.0).unwrap(), 2.932553783849336e20, max_relative = 1e-12);
        assert_relative_eq!(bessel_i(10, 50.0).unwrap(), 1.071_597_159_477_637e20, max_relative = 1e-12);
        assert_relative_eq!(bessel_i(3, 0.5).unwrap(), 2.645_111_968_990_286e-3, max_relative = 1e-13);
    }

    #[test]
    fn bessel_domain_errors() {
        assert!(matches!(bessel_i(-1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_i(0, -0.1), Err(Error::Domain(_))));
        assert!(matches!(bessel_i(0, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn bessel_recurrence() {
        for q in 1..=10i64 {
            for k in 0..=40 {
                let x = 0.1 + k as f64 * (19.9 / 40.0);
                let lhs = bessel_i(q - 1, x).unwrap() - bessel_i(q + 1, x).unwrap();
                let rhs = 2.0 * q as f64 / x * bessel_i(q, x).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn negative_charge_rejected() {
        assert!(matches!(PcsLabel::new(C64::new(1.0, 0.0), -2), Err(Error::Parameter(_))));
    }

    #[test]
    fn fock_states() {
        let sp = SpaceConfig::new(20).unwrap();
        let psi = fock_state(sp, Ground, 0, 0).unwrap();
        assert_eq!(psi.amplitudes()[0], C64::new(1.0, 0.0));
        let psi = fock_state(sp, Excited, 7, 6).unwrap();
        assert_eq!(psi.norm_sqr(), 1.0);
        assert_eq!(psi.amplitude(Excited, 7, 6).unwrap().re, 1.0);
        assert!(fock_state(sp, Ground, 21, 0).is_err());
    }

    #[test]
    fn vacuum_pcs() {
        let sp = SpaceConfig::new(4).unwrap();
        let psi = pcs_state(sp, PcsLabel::new(C64::new(0.0, 0.0), 0).unwrap(), Ground).unwrap();
        assert_eq!(psi, fock_state(sp, Ground, 0, 0).unwrap());
        // ξ = 0 with charge q collapses onto |q, 0⟩
        let psi = pcs_state(sp, PcsLabel::new(C64::new(0.0, 0.0), 3).unwrap(), Excited).unwrap();
        assert_abs_diff_eq!(psi.amplitude(Excited, 3, 0).unwrap().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pcs_coefficient_ratio() {
        let sp = SpaceConfig::new(20).unwrap();
        let psi = pcs_state(sp, PcsLabel::new(C64::new(2.0, 0.0), 1).unwrap(), Ground).unwrap();
        for l in 0..15 {
            let c0 = psi.amplitude(Ground, l + 1, l).unwrap();
            let c1 = psi.amplitude(Ground, l + 2, l + 1).unwrap();
            let want = 2.0 / (((l + 1) * (l + 2)) as f64).sqrt();
            assert_relative_eq!((c1 / c0).re, want, max_relative = 1e-13);
        }
    }

    #[test]
    fn pcs_is_eigenstate() {
        let sp = SpaceConfig::new(30).unwrap();
        let xi = C64::new(2.0, 0.0);
        let psi = pcs_state(sp, PcsLabel::new(xi, 1).unwrap(), Ground).unwrap();
        let out = apply_to_state(&pair_annihilation(sp), &psi).unwrap();
        let resid: f64 = out
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| (a - xi * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(resid < 1e-8, "residual {resid}");

        let q = charge_op(sp);
        let qpsi = apply_to_state(&q, &psi).unwrap();
        for (a, b) in qpsi.amplitudes().iter().zip(psi.amplitudes()) {
            assert_eq!(*a, *b);
        }
    }

    #[test]
    fn pcs_complex_xi_eigenstate() {
        let sp = SpaceConfig::new(25).unwrap();
        let xi = C64::from_polar(1.5, 0.7);
        let psi = pcs_state(sp, PcsLabel::new(xi, 2).unwrap(), Excited).unwrap();
        let out = apply_to_state(&pair_annihilation(sp), &psi).unwrap();
        let resid: f64 = out
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| (a - xi * b).norm_sqr())
            .sum();
        assert!(resid.sqrt() < 1e-8);
    }

    #[test]
    fn pcs_tail_too_large() {
        let sp = SpaceConfig::new(5).unwrap();
        let err = pcs_state(sp, PcsLabel::new(C64::new(2.0, 0.0), 1).unwrap(), Ground).unwrap_err();
        assert!(matches!(err, Error::PcsTail { .. }));
        let sp = SpaceConfig::new(2).unwrap();
        assert!(pcs_state(sp, PcsLabel::new(C64::new(0.1, 0.0), 3).unwrap(), Ground).is_err());
    }

    #[test]
    fn pcs_marginal_matches_closed_form() {
        let sp = SpaceConfig::new(20).unwrap();
        let psi = pcs_state(sp, PcsLabel::new(C64::new(2.0, 0.0), 1).unwrap(), Ground).unwrap();
        let p = motional_marginal(&psi);
        // N₁² 4^l / (l!(l+1)!) with N₁² = 2 / I₁(4)
        let expected = [
            0.2049292628747027,
            0.4098585257494054,
            0.27323901716627027,
            0.09107967238875676,
        ];
        for (l, e) in expected.iter().enumerate() {
            assert_relative_eq!(p.get(l + 1, l), *e, max_relative = 1e-12);
        }
        assert_abs_diff_eq!(p.off_charge(1), 0.0);
        assert_abs_diff_eq!(p.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelities() {
        let sp = SpaceConfig::new(20).unwrap();
        let label = PcsLabel::new(C64::new(2.0, 0.0), 1).unwrap();
        let psi = pcs_state(sp, label, Ground).unwrap();
        assert_abs_diff_eq!(fidelity_state(&psi, &psi).unwrap(), 1.0, epsilon = 1e-14);
        let a = fock_state(sp, Ground, 1, 0).unwrap();
        let b = fock_state(sp, Ground, 0, 1).unwrap();
        assert_eq!(fidelity_state(&a, &b).unwrap(), 0.0);

        let big = SpaceConfig::new(30).unwrap();
        let reference = pcs_state(big, label, Ground).unwrap();
        let f = fidelity_state(&psi.embed(big).unwrap(), &reference).unwrap();
        assert!(f > 0.9999999, "{f}");

        let rho = DensityOperator::from_pure(&psi);
        assert_abs_diff_eq!(fidelity_density(&rho, &psi).unwrap(), 1.0, epsilon = 1e-12);
        let small = SpaceConfig::new(2).unwrap();
        let mixed = DensityOperator::maximally_mixed(small);
        let g = fock_state(small, Ground, 1, 1).unwrap();
        assert_abs_diff_eq!(fidelity_density(&mixed, &g).unwrap(), 1.0 / 18.0, epsilon = 1e-15);
        assert!(fidelity_density(&mixed, &psi).is_err());
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        let sp = SpaceConfig::new(3).unwrap();
        let a = fock_state(sp, Ground, 1, 0).unwrap();
        let b = fock_state(sp, Excited, 2, 2).unwrap();
        let mut rho = DensityOperator::from_pure(&a);
        assert_abs_diff_eq!(purity(&rho), 1.0, epsilon = 1e-12);
        rho.add_scaled(&DensityOperator::from_pure(&b), 1.0).unwrap();
        let half = {
            let mut r = DensityOperator::zeros(sp);
            r.add_scaled(&rho, 0.5).unwrap();
            r
        };
        assert_abs_diff_eq!(purity(&half), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn marginal_csv() {
        let sp = SpaceConfig::new(3).unwrap();
        let p = motional_marginal(&fock_state(sp, Excited, 2, 1).unwrap());
        assert_eq!(p.to_csv(), "n,m,p\n2,1,1.0\n");
        let rho = DensityOperator::from_pure(&fock_state(sp, Excited, 2, 1).unwrap());
        assert_eq!(motional_marginal(&rho), p);
    }
}
