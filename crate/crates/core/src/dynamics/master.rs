use num_complex::Complex64 as C64;

use super::reduced::{lindblad_apply, LindbladWork, ReducedModel};
use super::series::{ObservableSeries, Sample};
use super::steady::{reduced_residual, SteadyResidual};
use super::{Probes, SimParams, Snapshot, LEAK_LIMIT};
use crate::error::{Error, Result};
use crate::hilbert::{hermitize, DensityOperator, SpaceConfig, SparseOperator};
use crate::states::MotionalDistribution;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest per-step trace drift tolerated before renormalization.
const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Outcome of [`integrate_master_equation`].
#[derive(Clone, Debug)]
pub struct MasterRun {
    /// State at `t_final`.
    pub rho: DensityOperator,
    pub series: ObservableSeries,
    pub snapshots: Vec<Snapshot>,
    /// Bound on the population lost through the motional cutoff.
    pub leak: f64,
}

/// Outcome of [`settle_to_steady`].
#[derive(Clone, Debug)]
pub struct Settled {
    pub rho: DensityOperator,
    /// Extra time integrated beyond the starting state.
    pub elapsed: f64,
    /// Whether the steady-state test passed within the allotted time.
    pub reached: bool,
    pub residual: SteadyResidual,
    pub leak: f64,
}

/// `dρ/dt` of the Lindblad equation with Hamiltonian `h` and `σ₋` decay at
/// rate `gamma`.
pub fn lindblad_rhs(rho: &DensityOperator, h: &SparseOperator, gamma: f64) -> Result<DensityOperator> {
    rho.space().check_same(&h.space())?;
    let mut r = rho.clone();
    r.symmetrize();
    let support: Vec<usize> = (0..rho.dim()).filter(|&i| r.get(i, i).re != 0.0).collect();
    let model = ReducedModel::new(h, gamma, support, None);
    let d = model.dim();
    let rr = model.sub.gather_matrix(r.as_slice());
    let mut out = vec![ZERO; d * d];
    let mut work = LindbladWork::new(d);
    lindblad_apply(&model.h_eff, &model.jump, gamma, &rr, &mut out, &mut work);
    DensityOperator::from_matrix(rho.space(), model.sub.scatter_matrix(&out))
}

/// Fixed-step RK4 integrator for the density matrix on the reduced block.
struct Stepper {
    model: ReducedModel,
    rho: Vec<C64>,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
    work: LindbladWork,
    /// `∫ ‖P_out H ρ^{1/2}‖ dt`, whose square bounds the leaked population.
    leak_root: f64,
    last_rate: f64,
    last_trace: f64,
}

impl Stepper {
    fn new(model: ReducedModel, rho: Vec<C64>) -> Self {
        let d = model.dim();
        let last_rate = model.leak_rate_mixed(&rho);
        Self {
            model,
            rho,
            k: std::array::from_fn(|_| vec![ZERO; d * d]),
            tmp: vec![ZERO; d * d],
            work: LindbladWork::new(d),
            leak_root: 0.0,
            last_rate,
            last_trace: 1.0,
        }
    }

    fn rhs(model: &ReducedModel, rho: &[C64], out: &mut [C64], work: &mut LindbladWork) {
        lindblad_apply(&model.h_eff, &model.jump, model.gamma, rho, out, work);
    }

    fn step(&mut self, dt: f64, t: f64) -> Result<()> {
        let Self {
            model,
            rho,
            k,
            tmp,
            work,
            ..
        } = self;
        let [k1, k2, k3, k4] = k;
        Self::rhs(model, rho, k1, work);
        for ((x, r), a) in tmp.iter_mut().zip(rho.iter()).zip(k1.iter()) {
            *x = r + a * (0.5 * dt);
        }
        Self::rhs(model, tmp, k2, work);
        for ((x, r), a) in tmp.iter_mut().zip(rho.iter()).zip(k2.iter()) {
            *x = r + a * (0.5 * dt);
        }
        Self::rhs(model, tmp, k3, work);
        for ((x, r), a) in tmp.iter_mut().zip(rho.iter()).zip(k3.iter()) {
            *x = r + a * dt;
        }
        Self::rhs(model, tmp, k4, work);
        let c = dt / 6.0;
        for i in 0..rho.len() {
            rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
        }

        let d = model.dim();
        let trace: f64 = (0..d).map(|i| rho[i * d + i].re).sum();
        if !trace.is_finite() || rho.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical {
                t,
                reason: "density matrix became non-finite".into(),
            });
        }
        if (trace - 1.0).abs() > TRACE_DRIFT_LIMIT {
            return Err(Error::Integration {
                t,
                reason: format!("trace drifted to {trace} within one step"),
            });
        }
        self.last_trace = trace;
        let inv = 1.0 / trace;
        self.rho.iter_mut().for_each(|v| *v *= inv);
        hermitize(&mut self.rho, d);

        let rate = self.model.leak_rate_mixed(&self.rho);
        self.leak_root += 0.5 * (rate + self.last_rate) * dt;
        self.last_rate = rate;
        let leak = self.leak();
        if leak > LEAK_LIMIT {
            return Err(Error::Truncation {
                leak,
                limit: LEAK_LIMIT,
                t,
            });
        }
        Ok(())
    }

    fn leak(&self) -> f64 {
        self.leak_root * self.leak_root
    }

    fn sample(&self, t: f64) -> Sample {
        let o = self.model.observe_mixed(&self.rho);
        Sample {
            t,
            sz: o.sz,
            pol_re: o.pol_re,
            pol_im: o.pol_im,
            trace: self.last_trace,
            purity: Some(self.rho.iter().map(|v| v.norm_sqr()).sum()),
            q_mean: o.q_mean,
            leak: self.leak(),
            fidelity: o.fidelity,
        }
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let space = self.model.space;
        let probs = self.model.marginal(self.model.populations_mixed(&self.rho));
        Snapshot {
            time: t,
            distribution: MotionalDistribution::from_probabilities(space.cutoff(), probs),
        }
    }

    fn residual(&mut self) -> SteadyResidual {
        reduced_residual(&self.model, &self.rho, &mut self.work)
    }

    fn density(&self, space: SpaceConfig) -> Result<DensityOperator> {
        DensityOperator::from_matrix(space, self.model.sub.scatter_matrix(&self.rho))
    }
}

fn stepper_for(rho0: &DensityOperator, h: &SparseOperator, gamma: f64, probes: &Probes) -> Result<Stepper> {
    let space = rho0.space();
    let trace = rho0.trace();
    if (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-9 {
        return Err(Error::Domain(format!("initial density matrix has trace {trace}")));
    }
    if let Some(t) = &probes.target {
        space.check_same(&t.space())?;
    }
    let mut r = rho0.clone();
    r.symmetrize();
    let support: Vec<usize> = (0..r.dim()).filter(|&i| r.get(i, i).re != 0.0).collect();
    let model = ReducedModel::new(h, gamma, support, probes.target.as_ref());
    let rho = model.sub.gather_matrix(r.as_slice());
    Ok(Stepper::new(model, rho))
}

/// Integrates the Lindblad equation from `rho0` over `[0, t_final]`.
///
/// Samples are taken every `output_every` steps and at `t_final`; snapshots
/// at the probe times. Fails if the trace drifts by more than `1e-6` in one
/// step, if the state becomes non-finite, or if the truncation leak exceeds
/// [`LEAK_LIMIT`].
pub fn integrate_master_equation(rho0: &DensityOperator, p: &SimParams, probes: &Probes) -> Result<MasterRun> {
    let space = rho0.space();
    let (h, steps) = p.prepare(space)?;
    let snap_steps = probes.snapshot_steps(p, steps)?;
    let sample_steps = p.sample_steps(steps);
    let mut st = stepper_for(rho0, &h, p.gamma, probes)?;

    let mut series = ObservableSeries::with_columns(true, st.model.has_target());
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut next_sample = 0;
    let mut next_snap = 0;
    for step in 0..=steps {
        let t = step as f64 * p.dt;
        if step > 0 {
            st.step(p.dt, t)?;
        }
        if sample_steps.get(next_sample) == Some(&step) {
            series.push(st.sample(t));
            next_sample += 1;
        }
        while snap_steps.get(next_snap) == Some(&step) {
            snapshots.push(st.snapshot(probes.snapshots.times[next_snap]));
            next_snap += 1;
        }
    }
    Ok(MasterRun {
        rho: st.density(space)?,
        leak: st.leak(),
        series,
        snapshots,
    })
}

/// Continues the Lindblad evolution of `rho` until the steady-state test
/// passes at tolerance `tol` or `max_time` has elapsed. The test is evaluated
/// every `output_every` steps.
pub fn settle_to_steady(rho: &DensityOperator, p: &SimParams, tol: f64, max_time: f64) -> Result<Settled> {
    let space = rho.space();
    let (h, _) = p.prepare(space)?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("steady tolerance must be positive, got {tol}")));
    }
    if !(max_time >= 0.0) || !max_time.is_finite() {
        return Err(Error::Parameter(format!("settle time must be nonnegative, got {max_time}")));
    }
    let mut st = stepper_for(rho, &h, p.gamma, &Probes::default())?;
    let max_steps = (max_time / p.dt).round() as usize;
    let mut residual = st.residual();
    let mut step = 0;
    while !residual.is_steady(tol) && step < max_steps {
        let chunk = p.output_every.min(max_steps - step);
        for _ in 0..chunk {
            step += 1;
            st.step(p.dt, step as f64 * p.dt)?;
        }
        residual = st.residual();
    }
    Ok(Settled {
        rho: st.density(space)?,
        elapsed: step as f64 * p.dt,
        reached: residual.is_steady(tol),
        residual,
        leak: st.leak(),
    })
}
