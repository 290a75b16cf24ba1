//! Interaction Hamiltonians (ħ = 1).
//!
//! The effective model is `H = α(âb̂ − ξ)σ₊ + h.c.` with `α > 0`. The full
//! model keeps the Lamb-Dicke series of the two second-sideband drives along
//! the rotated axes plus the carrier drive along `x`:
//!
//! ```text
//! H = e^{−η²/2} [ Σ_j (iη)^{2j+2}/(j!(j+2)!) (Ω₁e^{iφ₁} Â^j Â†^{j+2} + Ω₂e^{iφ₂} B̂^j B̂†^{j+2})
//!               + Ω₀e^{iφ₀} Σ_j (iη)^{2j}/(j!)² â^j â†^j ] σ₋ + h.c.
//! ```
//!
//! Sign convention: with `φ₁ = 0`, `φ₂ = π`, `Ω₁ = Ω₂ = Ω` the `j = 0` part of
//! the full model equals `−H_eff(α, ξ)` for `α = Ωη²e^{−η²/2}` and
//! `ξ = Ω₀/(Ωη²)·e^{−iφ₀}`. The effective Hamiltonian is kept with `α > 0`
//! and [`reduction_check`] compares `H_full` against `−H_eff`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    atom_op, ladder_op, pair_annihilation, AtomOp, Ladder, Mode, SpaceConfig, SparseOperator,
};
use crate::states::factorial;

pub const DEFAULT_J_MAX: usize = 3;

/// Laser drive parameters of the full interaction-picture model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub omega0: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub eta: f64,
    pub j_max: usize,
}

impl Default for DriveParams {
    /// Sideband phases `(0, π)` with `η = 0.05` and a carrier strength that
    /// reproduces `α ≈ 0.2`, `ξ = 2`.
    fn default() -> Self {
        let eta = 0.05;
        let omega = 0.2 / (eta * eta * (-eta * eta / 2.0f64).exp());
        Self {
            omega0: 2.0 * omega * eta * eta,
            omega1: omega,
            omega2: omega,
            phi0: 0.0,
            phi1: 0.0,
            phi2: PI,
            eta,
            j_max: DEFAULT_J_MAX,
        }
    }
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Parameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        for (name, v) in [("omega0", self.omega0), ("omega1", self.omega1), ("omega2", self.omega2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        for (name, v) in [("phi0", self.phi0), ("phi1", self.phi1), ("phi2", self.phi2)] {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Magnitude `η^{2j+2}/(j!(j+2)!)` of the first sideband coefficient left
    /// out of the series.
    pub fn truncation_coefficient(&self) -> f64 {
        sideband_coefficient(self.eta, self.j_max + 1)
    }

    pub fn without_carrier(&self) -> Self {
        Self {
            omega0: 0.0,
            ..*self
        }
    }
}

/// Coupling and drive of the effective two-mode model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub alpha: f64,
    pub xi: C64,
}

impl EffectiveParams {
    pub fn new(alpha: f64, xi: C64) -> Result<Self> {
        let p = Self { alpha, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Parameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !self.xi.re.is_finite() || !self.xi.im.is_finite() {
            return Err(Error::Parameter("xi must be finite".into()));
        }
        Ok(())
    }

    /// `α = Ω₁η²e^{−η²/2}`, `ξ = Ω₀/(Ω₁η²)·e^{−iφ₀}`.
    pub fn from_drive(d: &DriveParams) -> Result<Self> {
        d.validate()?;
        if !(d.omega1 > 0.0) {
            return Err(Error::Parameter("omega1 must be positive to define alpha".into()));
        }
        let eta2 = d.eta * d.eta;
        let alpha = d.omega1 * eta2 * (-eta2 / 2.0).exp();
        let xi = C64::from_polar(d.omega0 / (d.omega1 * eta2), -d.phi0);
        Self::new(alpha, xi)
    }

    pub fn without_carrier(&self) -> Self {
        Self {
            xi: C64::new(0.0, 0.0),
            ..*self
        }
    }
}

/// `η^{2j+2}/(j!(j+2)!)`
pub fn sideband_coefficient(eta: f64, j: usize) -> f64 {
    eta.powi(2 * j as i32 + 2) / (factorial(j) * factorial(j + 2))
}

/// Ladder operators of the modes along the axes rotated by π/4:
/// `Â = (â + b̂)/√2`, `B̂ = (−â + b̂)/√2`.
pub fn rotated_mode_ops(space: SpaceConfig) -> (SparseOperator, SparseOperator) {
    let a = ladder_op(space, Mode::A, Ladder::Lower);
    let b = ladder_op(space, Mode::B, Ladder::Lower);
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let big_a = a.add(&b).expect("same space").scale(s);
    let big_b = b.sub(&a).expect("same space").scale(s);
    (big_a, big_b)
}

/// `α(âb̂ − ξ)σ₊ + h.c.`
pub fn build_effective_hamiltonian(space: SpaceConfig, p: &EffectiveParams) -> SparseOperator {
    let mut h = effective_matrix(space, p);
    let ext = SpaceConfig::new(space.cutoff() + 1).expect("cutoff ≥ 1");
    let ext_h = effective_matrix(ext, p);
    h.set_overflow(Some(boundary_overflow(space, ext, &ext_h)));
    h
}

fn effective_matrix(space: SpaceConfig, p: &EffectiveParams) -> SparseOperator {
    let drive = pair_annihilation(space)
        .sub(&SparseOperator::identity(space).scale(p.xi))
        .expect("same space")
        .scale(C64::new(p.alpha, 0.0));
    let up = drive
        .compose(&atom_op(space, AtomOp::SigmaPlus))
        .expect("same space");
    hermitian_sum(&up)
}

/// Full Lamb-Dicke series Hamiltonian truncated at `j_max`.
pub fn build_full_hamiltonian(space: SpaceConfig, d: &DriveParams) -> Result<SparseOperator> {
    d.validate()?;
    let mut h = full_matrix(space, d);
    let ext = SpaceConfig::new(space.cutoff() + d.j_max + 2)?;
    let ext_h = full_matrix(ext, d);
    h.set_overflow(Some(boundary_overflow(space, ext, &ext_h)));
    Ok(h)
}

fn full_matrix(space: SpaceConfig, d: &DriveParams) -> SparseOperator {
    let (big_a, big_b) = rotated_mode_ops(space);
    let big_ad = big_a.adjoint();
    let big_bd = big_b.adjoint();
    let a = ladder_op(space, Mode::A, Ladder::Lower);
    let ad = ladder_op(space, Mode::A, Ladder::Raise);
    let id = SparseOperator::identity(space);

    let eta2 = d.eta * d.eta;
    let w1 = C64::from_polar(d.omega1, d.phi1);
    let w2 = C64::from_polar(d.omega2, d.phi2);
    let w0 = C64::from_polar(d.omega0, d.phi0);

    // running powers: A^j, A†^{j+2}, B^j, B†^{j+2}, a^j, a†^j
    let mut a_pow = id.clone();
    let mut ad_pow2 = big_ad.compose(&big_ad).unwrap();
    let mut b_pow = id.clone();
    let mut bd_pow2 = big_bd.compose(&big_bd).unwrap();
    let mut low_pow = id.clone();
    let mut high_pow = id.clone();

    let mut motional = SparseOperator::zero(space);
    for j in 0..=d.j_max {
        // (iη)^{2j+2} = (−1)^{j+1} η^{2j+2}
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let c = C64::new(sign * sideband_coefficient(d.eta, j), 0.0);
        let side_a = a_pow.compose(&ad_pow2).unwrap().scale(w1);
        let side_b = b_pow.compose(&bd_pow2).unwrap().scale(w2);
        motional = motional
            .add_scaled(&side_a.add(&side_b).unwrap(), c)
            .unwrap();

        let carrier_sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let cc = carrier_sign * eta2.powi(j as i32) / (factorial(j) * factorial(j));
        let carrier = low_pow.compose(&high_pow).unwrap().scale(w0);
        motional = motional.add_scaled(&carrier, C64::new(cc, 0.0)).unwrap();

        if j < d.j_max {
            a_pow = a_pow.compose(&big_a).unwrap();
            ad_pow2 = ad_pow2.compose(&big_ad).unwrap();
            b_pow = b_pow.compose(&big_b).unwrap();
            bd_pow2 = bd_pow2.compose(&big_bd).unwrap();
            low_pow = low_pow.compose(&a).unwrap();
            high_pow = high_pow.compose(&ad).unwrap();
        }
    }
    let down = motional
        .scale(C64::new((-eta2 / 2.0).exp(), 0.0))
        .compose(&atom_op(space, AtomOp::SigmaMinus))
        .unwrap();
    hermitian_sum(&down)
}

/// `X + X†`, flagged Hermitian.
fn hermitian_sum(x: &SparseOperator) -> SparseOperator {
    let mut h = x.add(&x.adjoint()).expect("same space").mark_hermitian();
    h.set_overflow(None);
    h
}

/// Per-column weight that `ext` (the same operator built with a larger
/// cutoff) sends outside the box of `space`.
fn boundary_overflow(space: SpaceConfig, ext: SpaceConfig, ext_op: &SparseOperator) -> Vec<f64> {
    let mut overflow = vec![0.0; space.dim()];
    let cutoff = space.cutoff();
    for (i, j, v) in ext_op.entries() {
        let (s, n, m) = ext.unindex(j);
        if n > cutoff || m > cutoff {
            continue;
        }
        let (_, ni, mi) = ext.unindex(i);
        if ni > cutoff || mi > cutoff {
            overflow[space.index(s, n, m)] += v.norm_sqr();
        }
    }
    overflow
}

/// Largest entrywise difference between the `j = 0` full Hamiltonian and the
/// effective Hamiltonian with the derived `(α, ξ)`, after the sign convention
/// `H_full = −H_eff`.
///
/// Requires `φ₁ = 0`, `φ₂ = π` and `Ω₁ = Ω₂`.
pub fn reduction_check(space: SpaceConfig, d: &DriveParams) -> Result<f64> {
    d.validate()?;
    if d.phi1.abs() > 1e-12 {
        return Err(Error::Parameter(format!("reduction requires phi1 = 0, got {}", d.phi1)));
    }
    if (d.phi2 - PI).abs() > 1e-12 {
        return Err(Error::Parameter(format!("reduction requires phi2 = pi, got {}", d.phi2)));
    }
    if (d.omega1 - d.omega2).abs() > 1e-12 * d.omega1.max(1.0) {
        return Err(Error::Parameter(format!(
            "reduction requires omega1 = omega2, got {} and {}",
            d.omega1, d.omega2
        )));
    }
    let eff = EffectiveParams::from_drive(d)?;
    let leading = DriveParams { j_max: 0, ..*d };
    let full = full_matrix(space, &leading);
    let h_eff = effective_matrix(space, &eff);
    Ok(full.add(&h_eff)?.max_abs())
}
