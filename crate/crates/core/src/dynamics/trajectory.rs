//! Quantum-jump unravelling of the Lindblad equation.
//!
//! Between jumps the unnormalized state follows `ψ' = −i H_eff ψ`; a jump
//! `ψ → σ₋ψ` fires when `‖ψ‖²` falls to a uniform threshold drawn after the
//! previous jump. Crossings inside a step are located by bisection to
//! `10⁻³ dt`, after which the remainder of the step is integrated from the
//! jumped state.

use num_complex::Complex64 as C64;

use super::reduced::{rk4_state, ReducedModel, StateWork};
use super::rng::{trajectory_seed, JumpRng};
use super::series::{ObservableSeries, Sample};
use super::{Probes, SimParams, Snapshot, LEAK_LIMIT};
use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::states::MotionalDistribution;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Bisection resolution of a jump time, in units of `dt`.
const JUMP_TIME_RESOLUTION: f64 = 1e-3;

/// One quantum-jump trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    /// Normalized state at `t_final`; its `leak` holds the truncation bound.
    pub final_state: StateVector,
    pub jump_times: Vec<f64>,
    pub series: ObservableSeries,
    pub snapshots: Vec<Snapshot>,
    pub seed_used: u64,
}

/// Step bookkeeping shared by every trajectory of a run.
pub(crate) struct Plan {
    pub dt: f64,
    pub steps: usize,
    pub sample_steps: Vec<usize>,
    pub snap_steps: Vec<usize>,
    pub keep_sample_states: bool,
}

pub(crate) struct TrajRun {
    pub psi: Vec<C64>,
    pub jumps: Vec<f64>,
    pub samples: Vec<Sample>,
    pub sample_states: Vec<Vec<C64>>,
    pub snap_pops: Vec<Vec<f64>>,
    pub leak: f64,
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

fn normalized(v: &[C64]) -> Vec<C64> {
    let s = 1.0 / norm_sqr(v).sqrt();
    v.iter().map(|a| a * s).collect()
}

fn check_finite(v: &[C64], t: f64) -> Result<()> {
    if v.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical {
            t,
            reason: "trajectory state became non-finite".into(),
        })
    }
}

pub(crate) fn run_trajectory(model: &ReducedModel, psi0: &[C64], plan: &Plan, seed: u64) -> Result<TrajRun> {
    let d = model.dim();
    let dt = plan.dt;
    let mut rng = JumpRng::new(seed);
    let mut threshold = rng.threshold();
    let mut psi = psi0.to_vec();
    let mut next = vec![ZERO; d];
    let mut w = StateWork::new(d);

    let mut jumps = Vec::new();
    let mut samples = Vec::with_capacity(plan.sample_steps.len());
    let mut sample_states = Vec::new();
    let mut snap_pops = Vec::with_capacity(plan.snap_steps.len());
    let mut leak_root = 0.0;
    let mut last_rate = model.leak_rate_pure(&psi);
    let mut next_sample = 0;
    let mut next_snap = 0;

    for step in 0..=plan.steps {
        let t = step as f64 * dt;
        if step > 0 {
            let mut t0 = t - dt;
            let mut remaining = dt;
            loop {
                rk4_state(&model.h_eff, &psi, remaining, &mut next, &mut w);
                check_finite(&next, t)?;
                // without decay there are no jumps; the norm only carries integrator error
                if model.gamma == 0.0 || norm_sqr(&next) > threshold {
                    std::mem::swap(&mut psi, &mut next);
                    break;
                }
                let (mut lo, mut hi) = (0.0, remaining);
                while hi - lo > JUMP_TIME_RESOLUTION * dt {
                    let mid = 0.5 * (lo + hi);
                    rk4_state(&model.h_eff, &psi, mid, &mut next, &mut w);
                    if norm_sqr(&next) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                rk4_state(&model.h_eff, &psi, tau, &mut next, &mut w);
                model.jump.matvec(&next, &mut psi);
                let n = norm_sqr(&psi);
                if !(n > 0.0) || !n.is_finite() {
                    return Err(Error::Numerical {
                        t: t0 + tau,
                        reason: "jump applied to a state without excited population".into(),
                    });
                }
                let s = 1.0 / n.sqrt();
                psi.iter_mut().for_each(|a| *a *= s);
                jumps.push(t0 + tau);
                threshold = rng.threshold();
                t0 += tau;
                remaining -= tau;
            }
            let unit = normalized(&psi);
            let rate = model.leak_rate_pure(&unit);
            leak_root += 0.5 * (rate + last_rate) * dt;
            last_rate = rate;
            let leak = leak_root * leak_root;
            if leak > LEAK_LIMIT {
                return Err(Error::Truncation {
                    leak,
                    limit: LEAK_LIMIT,
                    t,
                });
            }
        }

        let sample_now = plan.sample_steps.get(next_sample) == Some(&step);
        let snap_now = plan.snap_steps.get(next_snap) == Some(&step);
        if sample_now || snap_now {
            let unit = normalized(&psi);
            if sample_now {
                let o = model.observe_pure(&unit);
                samples.push(Sample {
                    t,
                    sz: o.sz,
                    pol_re: o.pol_re,
                    pol_im: o.pol_im,
                    trace: norm_sqr(&unit),
                    purity: None,
                    q_mean: o.q_mean,
                    leak: leak_root * leak_root,
                    fidelity: o.fidelity,
                });
                next_sample += 1;
                if plan.keep_sample_states {
                    sample_states.push(unit.clone());
                }
            }
            while plan.snap_steps.get(next_snap) == Some(&step) {
                snap_pops.push(unit.iter().map(|a| a.norm_sqr()).collect());
                next_snap += 1;
            }
        }
    }
    Ok(TrajRun {
        psi: normalized(&psi),
        jumps,
        samples,
        sample_states,
        snap_pops,
        leak: leak_root * leak_root,
    })
}

pub(crate) fn check_initial(psi0: &StateVector) -> Result<()> {
    let n = psi0.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("initial state has norm² {n}, expected 1")));
    }
    Ok(())
}

pub(crate) fn setup(psi0: &StateVector, p: &SimParams, probes: &Probes, keep_sample_states: bool) -> Result<(ReducedModel, Plan, Vec<C64>)> {
    check_initial(psi0)?;
    let space = psi0.space();
    if let Some(t) = &probes.target {
        space.check_same(&t.space())?;
    }
    let (h, steps) = p.prepare(space)?;
    let plan = Plan {
        dt: p.dt,
        steps,
        sample_steps: p.sample_steps(steps),
        snap_steps: probes.snapshot_steps(p, steps)?,
        keep_sample_states,
    };
    let support = psi0
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != ZERO)
        .map(|(i, _)| i);
    let model = ReducedModel::new(&h, p.gamma, support, probes.target.as_ref());
    let psi = model.sub.gather(psi0.amplitudes());
    Ok((model, plan, psi))
}

pub(crate) fn to_result(model: &ReducedModel, run: TrajRun, probes: &Probes, seed: u64) -> Result<TrajectoryResult> {
    let mut series = ObservableSeries::with_columns(false, false);
    for s in run.samples {
        series.push(s);
    }
    let snapshots = run
        .snap_pops
        .into_iter()
        .zip(&probes.snapshots.times)
        .map(|(pops, &time)| Snapshot {
            time,
            distribution: MotionalDistribution::from_probabilities(
                model.space.cutoff(),
                model.marginal(pops.into_iter()),
            ),
        })
        .collect();
    let mut final_state = StateVector::from_amplitudes(model.space, model.sub.scatter(&run.psi))?;
    final_state.set_leak(run.leak);
    Ok(TrajectoryResult {
        final_state,
        jump_times: run.jumps,
        series,
        snapshots,
        seed_used: seed,
    })
}

/// Runs trajectory `traj_index` of the ensemble defined by `p`. Its random
/// stream depends only on `(p.master_seed, traj_index)`.
pub fn mc_trajectory(psi0: &StateVector, p: &SimParams, probes: &Probes, traj_index: u64) -> Result<TrajectoryResult> {
    let (model, plan, psi) = setup(psi0, p, probes, false)?;
    let seed = trajectory_seed(p.master_seed, traj_index);
    let run = run_trajectory(&model, &psi, &plan, seed)?;
    to_result(&model, run, probes, seed)
}
