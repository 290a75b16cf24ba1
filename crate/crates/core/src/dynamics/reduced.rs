//! Operators and observables restricted to the reachable subspace.

use num_complex::Complex64 as C64;

use crate::hilbert::{atom_op, AtomLevel, AtomOp, Csr, SpaceConfig, SparseOperator, StateVector, Subspace};

const ZERO: C64 = C64::new(0.0, 0.0);

pub(crate) struct ReducedModel {
    pub space: SpaceConfig,
    pub sub: Subspace,
    pub gamma: f64,
    /// Hamiltonian.
    pub h: Csr,
    /// `H − i(Γ/2)σ₊σ₋`
    pub h_eff: Csr,
    /// `σ₋`
    pub jump: Csr,
    sz: Vec<f64>,
    q: Vec<f64>,
    /// flat motional index `n·(N+1) + m` of each reduced basis element
    motional: Vec<usize>,
    overflow: Vec<f64>,
    target: Option<Vec<C64>>,
}

pub(crate) struct Observed {
    pub sz: f64,
    pub pol_re: f64,
    pub pol_im: f64,
    pub q_mean: f64,
    pub fidelity: Option<f64>,
}

impl ReducedModel {
    pub fn new(
        h: &SparseOperator,
        gamma: f64,
        seeds: impl IntoIterator<Item = usize>,
        target: Option<&StateVector>,
    ) -> Self {
        let space = h.space();
        let sm = atom_op(space, AtomOp::SigmaMinus);
        let sub = Subspace::closure(space.dim(), seeds, &[h.csr(), sm.csr()]);
        let h_r = h.restrict(&sub);
        let jump = sm.restrict(&sub);
        let decay = jump.adjoint().matmul(&jump);
        let h_eff = h_r.add_scaled(&decay, C64::new(0.0, -0.5 * gamma));

        let mut sz = Vec::with_capacity(sub.len());
        let mut q = Vec::with_capacity(sub.len());
        let mut motional = Vec::with_capacity(sub.len());
        for &i in sub.indices() {
            let (s, n, m) = space.unindex(i);
            sz.push(match s {
                AtomLevel::Ground => -1.0,
                AtomLevel::Excited => 1.0,
            });
            q.push(n as f64 - m as f64);
            motional.push(n * space.levels() + m);
        }
        let overflow = match h.overflow_weights() {
            Some(w) => sub.indices().iter().map(|&i| w[i]).collect(),
            None => vec![0.0; sub.len()],
        };
        let target = target.map(|t| sub.gather(t.amplitudes()));
        Self {
            space,
            sub,
            gamma,
            h: h_r,
            h_eff,
            jump,
            sz,
            q,
            motional,
            overflow,
            target,
        }
    }

    pub fn dim(&self) -> usize {
        self.sub.len()
    }

    pub fn has_target(&self) -> bool {
        self.target.is_some()
    }

    /// Observables of a normalized pure state.
    pub fn observe_pure(&self, psi: &[C64]) -> Observed {
        let mut sz = 0.0;
        let mut q = 0.0;
        for ((a, z), c) in psi.iter().zip(&self.sz).zip(&self.q) {
            let p = a.norm_sqr();
            sz += z * p;
            q += c * p;
        }
        let minus = self.jump.expect_pure(psi);
        let fidelity = self.target.as_ref().map(|t| {
            let ov: C64 = t.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
            ov.norm_sqr().min(1.0)
        });
        Observed {
            sz,
            pol_re: 2.0 * minus.re,
            pol_im: -2.0 * minus.im,
            q_mean: q,
            fidelity,
        }
    }

    /// Observables of a trace-normalized density matrix.
    pub fn observe_mixed(&self, rho: &[C64]) -> Observed {
        let d = self.dim();
        let mut sz = 0.0;
        let mut q = 0.0;
        for i in 0..d {
            let p = rho[i * d + i].re;
            sz += self.sz[i] * p;
            q += self.q[i] * p;
        }
        let minus = self.jump.expect_mixed(rho);
        let fidelity = self.target.as_ref().map(|t| {
            let mut s = ZERO;
            for (i, ti) in t.iter().enumerate() {
                if *ti == ZERO {
                    continue;
                }
                let row: C64 = rho[i * d..(i + 1) * d].iter().zip(t).map(|(r, b)| r * b).sum();
                s += ti.conj() * row;
            }
            s.re.clamp(0.0, 1.0)
        });
        Observed {
            sz,
            pol_re: 2.0 * minus.re,
            pol_im: -2.0 * minus.im,
            q_mean: q,
            fidelity,
        }
    }

    /// Norm of the amplitude the Hamiltonian pushes past the cutoff per unit
    /// time, `‖P_out H ψ‖`.
    pub fn leak_rate_pure(&self, psi: &[C64]) -> f64 {
        psi.iter()
            .zip(&self.overflow)
            .map(|(a, w)| w * a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn leak_rate_mixed(&self, rho: &[C64]) -> f64 {
        let d = self.dim();
        self.overflow
            .iter()
            .enumerate()
            .map(|(i, w)| w * rho[i * d + i].re.max(0.0))
            .sum::<f64>()
            .sqrt()
    }

    /// Motional marginal over the full `(N+1)²` grid from reduced populations.
    pub fn marginal(&self, pops: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.space.motional_dim()];
        for (p, &k) in pops.zip(&self.motional) {
            out[k] += p;
        }
        out
    }

    pub fn populations_mixed<'a>(&'a self, rho: &'a [C64]) -> impl Iterator<Item = f64> + 'a {
        let d = self.dim();
        (0..d).map(move |i| rho[i * d + i].re)
    }
}

/// Dense work buffers for the Lindblad right-hand side.
pub(crate) struct LindbladWork {
    x: Vec<C64>,
    xt: Vec<C64>,
}

impl LindbladWork {
    pub fn new(d: usize) -> Self {
        Self {
            x: vec![ZERO; d * d],
            xt: vec![ZERO; d * d],
        }
    }
}

/// `out = −i(H_eff ρ − ρ H_eff†) + Γ σ₋ ρ σ₊` for Hermitian `ρ`, which equals
/// `−i[H, ρ] + (Γ/2)(2σ₋ρσ₊ − σ₊σ₋ρ − ρσ₊σ₋)`.
pub(crate) fn lindblad_apply(
    h_eff: &Csr,
    jump: &Csr,
    gamma: f64,
    rho: &[C64],
    out: &mut [C64],
    work: &mut LindbladWork,
) {
    let d = h_eff.dim;
    h_eff.mul_dense(rho, &mut work.x);
    let mi = C64::new(0.0, -1.0);
    for i in 0..d {
        for j in i..d {
            let y_ij = mi * work.x[i * d + j];
            let y_ji = mi * work.x[j * d + i];
            out[i * d + j] = y_ij + y_ji.conj();
            out[j * d + i] = y_ji + y_ij.conj();
        }
    }
    if gamma != 0.0 {
        // σ₋ρσ₊ = σ₋ (σ₋ρ)†
        jump.mul_dense(rho, &mut work.x);
        transpose_conj_into(&work.x, &mut work.xt, d);
        jump.mul_dense(&work.xt, &mut work.x);
        for (o, v) in out.iter_mut().zip(&work.x) {
            *o += v * gamma;
        }
    }
}

/// `[H, ρ] = Hρ − (Hρ)†` for Hermitian `H` and `ρ`; returns the largest entry.
pub(crate) fn commutator_max(h: &Csr, rho: &[C64], work: &mut LindbladWork) -> f64 {
    let d = h.dim;
    h.mul_dense(rho, &mut work.x);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            let c = work.x[i * d + j] - work.x[j * d + i].conj();
            worst = worst.max(c.norm());
        }
    }
    worst
}

fn transpose_conj_into(m: &[C64], out: &mut [C64], d: usize) {
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = m[i * d + j].conj();
        }
    }
}

/// Buffers for the state-vector Runge-Kutta step.
pub(crate) struct StateWork {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl StateWork {
    pub fn new(d: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![ZERO; d]),
            tmp: vec![ZERO; d],
        }
    }
}

/// One RK4 step of `ψ' = −i H_eff ψ` of size `tau`, written to `out`.
pub(crate) fn rk4_state(h_eff: &Csr, psi: &[C64], tau: f64, out: &mut [C64], w: &mut StateWork) {
    let mi = C64::new(0.0, -1.0);
    let deriv = |x: &[C64], k: &mut [C64]| {
        h_eff.matvec(x, k);
        k.iter_mut().for_each(|v| *v *= mi);
    };
    let [k1, k2, k3, k4] = &mut w.k;
    deriv(psi, k1);
    for ((t, p), k) in w.tmp.iter_mut().zip(psi).zip(k1.iter()) {
        *t = p + k * (0.5 * tau);
    }
    deriv(&w.tmp, k2);
    for ((t, p), k) in w.tmp.iter_mut().zip(psi).zip(k2.iter()) {
        *t = p + k * (0.5 * tau);
    }
    deriv(&w.tmp, k3);
    for ((t, p), k) in w.tmp.iter_mut().zip(psi).zip(k3.iter()) {
        *t = p + k * tau;
    }
    deriv(&w.tmp, k4);
    let c = tau / 6.0;
    for i in 0..psi.len() {
        out[i] = psi[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
    }
}
