use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::reduced::ReducedModel;
use super::rng::trajectory_seed;
use super::series::{ObservableSeries, Sample};
use super::trajectory::{run_trajectory, setup, to_result, Plan, TrajRun, TrajectoryResult};
use super::{Probes, SimParams, Snapshot};
use crate::error::{Error, Result};
use crate::hilbert::{hermitize, DensityOperator, StateVector};
use crate::states::MotionalDistribution;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Memory budget for the per-sample averaged density matrices behind the
/// purity column.
const PURITY_BUDGET_BYTES: usize = 256 << 20;

/// Averages over a quantum-jump ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleResult {
    /// `(1/n) Σ |ψ_k⟩⟨ψ_k|` at `t_final`.
    pub density: DensityOperator,
    /// Ensemble means. The purity column is that of the averaged density
    /// matrix and is absent when it would not fit the memory budget.
    pub mean: ObservableSeries,
    /// Standard errors of the means (zero for a single trajectory); no purity
    /// column.
    pub stderr: ObservableSeries,
    pub snapshots: Vec<Snapshot>,
    pub jump_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Largest truncation bound over the trajectories.
    pub leak: f64,
    /// Full results of the leading `probes.keep_trajectories` trajectories.
    pub trajectories: Vec<TrajectoryResult>,
}

/// Running mean and sum of squared deviations, updated in trajectory order.
#[derive(Clone, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0) / self.n).sqrt()
        }
    }
}

#[derive(Clone, Default)]
struct SampleStats {
    sz: Welford,
    pol_re: Welford,
    pol_im: Welford,
    trace: Welford,
    q_mean: Welford,
    leak: Welford,
    fidelity: Welford,
}

struct Accumulator {
    d: usize,
    n: usize,
    stats: Vec<SampleStats>,
    rho_samples: Option<Vec<Vec<C64>>>,
    rho_final: Vec<C64>,
    snap_pops: Vec<Vec<f64>>,
    jump_counts: Vec<usize>,
    leak: f64,
}

impl Accumulator {
    fn add(&mut self, run: &TrajRun) {
        self.n += 1;
        for (st, s) in self.stats.iter_mut().zip(&run.samples) {
            st.sz.push(s.sz);
            st.pol_re.push(s.pol_re);
            st.pol_im.push(s.pol_im);
            st.trace.push(s.trace);
            st.q_mean.push(s.q_mean);
            st.leak.push(s.leak);
            if let Some(f) = s.fidelity {
                st.fidelity.push(f);
            }
        }
        if let Some(rhos) = self.rho_samples.as_mut() {
            for (acc, psi) in rhos.iter_mut().zip(&run.sample_states) {
                add_projector(acc, psi, self.d);
            }
        }
        add_projector(&mut self.rho_final, &run.psi, self.d);
        for (acc, pops) in self.snap_pops.iter_mut().zip(&run.snap_pops) {
            for (a, p) in acc.iter_mut().zip(pops) {
                *a += p;
            }
        }
        self.jump_counts.push(run.jumps.len());
        self.leak = self.leak.max(run.leak);
    }
}

fn add_projector(acc: &mut [C64], psi: &[C64], d: usize) {
    for (i, a) in psi.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let row = &mut acc[i * d..(i + 1) * d];
        for (r, b) in row.iter_mut().zip(psi) {
            *r += a * b.conj();
        }
    }
}

/// Runs `p.n_traj` trajectories in parallel and averages them.
///
/// Trajectory `k` draws from its own stream seeded by
/// [`trajectory_seed`]`(p.master_seed, k)`, and results are folded in index
/// order, so the output is bit-identical for any thread count.
pub fn mc_ensemble(psi0: &StateVector, p: &SimParams, probes: &Probes) -> Result<EnsembleResult> {
    let (model, plan, psi) = setup(psi0, p, probes, true)?;
    let d = model.dim();
    let n_samples = plan.sample_steps.len();
    let purity_bytes = d
        .saturating_mul(d)
        .saturating_mul(n_samples)
        .saturating_mul(std::mem::size_of::<C64>());
    let track_purity = purity_bytes <= PURITY_BUDGET_BYTES;
    let plan = Plan {
        keep_sample_states: track_purity,
        ..plan
    };

    let seeds: Vec<u64> = (0..p.n_traj as u64).map(|k| trajectory_seed(p.master_seed, k)).collect();
    let mut acc = Accumulator {
        d,
        n: 0,
        stats: vec![SampleStats::default(); plan.sample_steps.len()],
        rho_samples: track_purity.then(|| vec![vec![ZERO; d * d]; plan.sample_steps.len()]),
        rho_final: vec![ZERO; d * d],
        snap_pops: vec![vec![0.0; d]; plan.snap_steps.len()],
        jump_counts: Vec::with_capacity(p.n_traj),
        leak: 0.0,
    };
    let mut kept = Vec::new();

    let chunk = (rayon::current_num_threads() * 4).max(1);
    for start in (0..p.n_traj).step_by(chunk) {
        let end = (start + chunk).min(p.n_traj);
        let runs: Vec<Result<TrajRun>> = (start..end)
            .into_par_iter()
            .map(|k| run_trajectory(&model, &psi, &plan, seeds[k]))
            .collect();
        for (k, run) in (start..end).zip(runs) {
            let run = run.map_err(|e| Error::Trajectory {
                index: k,
                source: Box::new(e),
            })?;
            acc.add(&run);
            if k < probes.keep_trajectories {
                let mut run = run;
                run.sample_states.clear();
                kept.push(to_result(&model, run, probes, seeds[k])?);
            }
        }
    }

    finish(&model, acc, &plan.sample_steps, p, probes, seeds, kept)
}

fn finish(
    model: &ReducedModel,
    acc: Accumulator,
    sample_steps: &[usize],
    p: &SimParams,
    probes: &Probes,
    seeds: Vec<u64>,
    trajectories: Vec<TrajectoryResult>,
) -> Result<EnsembleResult> {
    let d = acc.d;
    let inv_n = 1.0 / acc.n as f64;
    let fidelity = model.has_target();
    let mut mean = ObservableSeries::with_columns(acc.rho_samples.is_some(), fidelity);
    let mut stderr = ObservableSeries::with_columns(false, fidelity);
    for (k, (st, &step)) in acc.stats.iter().zip(sample_steps).enumerate() {
        let t = step as f64 * p.dt;
        let purity = acc.rho_samples.as_ref().map(|r| {
            r[k].iter().map(|v| v.norm_sqr()).sum::<f64>() * inv_n * inv_n
        });
        mean.push(Sample {
            t,
            sz: st.sz.mean,
            pol_re: st.pol_re.mean,
            pol_im: st.pol_im.mean,
            trace: st.trace.mean,
            purity,
            q_mean: st.q_mean.mean,
            leak: st.leak.mean,
            fidelity: fidelity.then_some(st.fidelity.mean),
        });
        stderr.push(Sample {
            t,
            sz: st.sz.stderr(),
            pol_re: st.pol_re.stderr(),
            pol_im: st.pol_im.stderr(),
            trace: st.trace.stderr(),
            purity: None,
            q_mean: st.q_mean.stderr(),
            leak: st.leak.stderr(),
            fidelity: fidelity.then_some(st.fidelity.stderr()),
        });
    }

    let mut rho = acc.rho_final;
    rho.iter_mut().for_each(|v| *v *= inv_n);
    hermitize(&mut rho, d);
    let density = DensityOperator::from_matrix(model.space, model.sub.scatter_matrix(&rho))?;

    let snapshots = acc
        .snap_pops
        .into_iter()
        .zip(&probes.snapshots.times)
        .map(|(pops, &time)| Snapshot {
            time,
            distribution: MotionalDistribution::from_probabilities(
                model.space.cutoff(),
                model.marginal(pops.into_iter().map(|x| x * inv_n)),
            ),
        })
        .collect();

    Ok(EnsembleResult {
        density,
        mean,
        stderr,
        snapshots,
        jump_counts: acc.jump_counts,
        seeds,
        leak: acc.leak,
        trajectories,
    })
}
