//! Time evolution: Lindblad integration, quantum-jump trajectories, steady
//! state detection and the carrier quench.
//!
//! Both integrators use the classical fixed-step fourth-order Runge-Kutta
//! scheme. Before stepping, the problem is restricted to the smallest set of
//! basis states reachable from the initial support under the Hamiltonian and
//! the jump operator; amplitudes outside that set stay exactly zero, so the
//! restriction changes nothing but the cost.

mod ensemble;
mod master;
mod quench;
mod reduced;
mod rng;
mod series;
mod steady;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_effective_hamiltonian, build_full_hamiltonian, DriveParams, EffectiveParams};
use crate::hilbert::{SpaceConfig, SparseOperator, StateVector};
use crate::observables::SnapshotRequest;
use crate::states::MotionalDistribution;

pub use ensemble::{mc_ensemble, EnsembleResult};
pub use master::{integrate_master_equation, lindblad_rhs, settle_to_steady, MasterRun, Settled};
pub use quench::{quench_carrier, QuenchInput, QuenchRun};
pub use rng::trajectory_seed;
pub use series::ObservableSeries;
pub use steady::{detect_steady_state, steady_residual, SteadyResidual};
pub use trajectory::{mc_trajectory, TrajectoryResult};

/// Runs abort once the accumulated truncation leak exceeds this.
pub const LEAK_LIMIT: f64 = 1e-6;

/// Default tolerance on the max-entry norms used by steady-state detection.
pub const DEFAULT_STEADY_TOL: f64 = 1e-4;

/// Largest `dt · rate` accepted at run start.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Which Hamiltonian drives the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Effective(EffectiveParams),
    Full(DriveParams),
}

impl Model {
    pub fn hamiltonian(&self, space: SpaceConfig) -> Result<SparseOperator> {
        match self {
            Model::Effective(p) => {
                p.validate()?;
                Ok(build_effective_hamiltonian(space, p))
            }
            Model::Full(d) => build_full_hamiltonian(space, d),
        }
    }

    /// Same model with the carrier drive switched off.
    pub fn without_carrier(&self) -> Model {
        match self {
            Model::Effective(p) => Model::Effective(p.without_carrier()),
            Model::Full(d) => Model::Full(d.without_carrier()),
        }
    }

    /// Rate scale entering the stability guard: `α(N+1)` for the effective
    /// model, the largest absolute row sum of `H` for the full model.
    fn coupling_scale(&self, space: SpaceConfig, h: &SparseOperator) -> f64 {
        match self {
            Model::Effective(p) => p.alpha * space.levels() as f64,
            Model::Full(_) => {
                let csr = h.csr();
                (0..csr.dim)
                    .map(|i| csr.row(i).map(|(_, v)| v.norm()).sum::<f64>())
                    .fold(0.0, f64::max)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub model: Model,
    /// Spontaneous decay rate Γ.
    pub gamma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    /// Steps between recorded samples.
    pub output_every: usize,
}

impl SimParams {
    /// Number of fixed steps covering `[0, t_final]`.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::Parameter(format!("t_final must be positive, got {}", self.t_final)));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-6 * self.dt {
            return Err(Error::Parameter(format!(
                "t_final = {} is not a whole number of steps dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Checks parameters and the stability guard, returning the Hamiltonian.
    pub(crate) fn prepare(&self, space: SpaceConfig) -> Result<(SparseOperator, usize)> {
        let steps = self.n_steps()?;
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Parameter(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if self.output_every == 0 {
            return Err(Error::Parameter("output_every must be at least 1".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::Parameter("n_traj must be at least 1".into()));
        }
        let h = self.model.hamiltonian(space)?;
        let rate = self.gamma.max(self.model.coupling_scale(space, &h));
        if self.dt * rate >= STABILITY_LIMIT {
            return Err(Error::Parameter(format!(
                "step too large: dt·rate = {} ≥ {STABILITY_LIMIT}",
                self.dt * rate
            )));
        }
        Ok((h, steps))
    }

    pub fn validate(&self, space: SpaceConfig) -> Result<()> {
        self.prepare(space).map(|_| ())
    }

    pub(crate) fn sample_steps(&self, steps: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..=steps).step_by(self.output_every).collect();
        if *v.last().unwrap() != steps {
            v.push(steps);
        }
        v
    }
}

/// Optional quantities tracked during a run.
#[derive(Clone, Debug, Default)]
pub struct Probes {
    /// Reference state for the `fidelity_pcs` column.
    pub target: Option<StateVector>,
    pub snapshots: SnapshotRequest,
    /// Number of leading trajectories whose individual results an ensemble
    /// run keeps.
    pub keep_trajectories: usize,
}

impl Probes {
    pub(crate) fn snapshot_steps(&self, p: &SimParams, steps: usize) -> Result<Vec<usize>> {
        self.snapshots.validate(p.t_final)?;
        Ok(self
            .snapshots
            .times
            .iter()
            .map(|t| ((t / p.dt).round() as usize).min(steps))
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub distribution: MotionalDistribution,
}
