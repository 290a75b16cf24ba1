use super::ensemble::mc_ensemble;
use super::master::integrate_master_equation;
use super::trajectory::mc_trajectory;
use super::{Probes, SimParams};
use crate::error::Result;
use crate::hilbert::{DensityOperator, StateVector};
use super::series::ObservableSeries;

/// Starting point of a carrier quench.
#[derive(Clone, Debug)]
pub enum QuenchInput {
    Density(DensityOperator),
    State(StateVector),
}

/// Observables after switching off the carrier drive.
#[derive(Clone, Debug)]
pub struct QuenchRun {
    pub series: ObservableSeries,
    /// Standard errors when the series is a trajectory-ensemble mean.
    pub stderr: Option<ObservableSeries>,
}

/// Evolves `input` for `p.t_final` with the carrier term removed from
/// `p.model`, keeping `p.gamma`.
///
/// A density matrix is propagated with the master equation. A pure state is
/// propagated as a single trajectory when `p.gamma == 0` (the evolution is
/// then deterministic) and as a `p.n_traj` trajectory ensemble otherwise.
pub fn quench_carrier(input: &QuenchInput, p: &SimParams, probes: &Probes) -> Result<QuenchRun> {
    let q = SimParams {
        model: p.model.without_carrier(),
        ..*p
    };
    match input {
        QuenchInput::Density(rho) => Ok(QuenchRun {
            series: integrate_master_equation(rho, &q, probes)?.series,
            stderr: None,
        }),
        QuenchInput::State(psi) if q.gamma == 0.0 => Ok(QuenchRun {
            series: mc_trajectory(psi, &q, probes, 0)?.series,
            stderr: None,
        }),
        QuenchInput::State(psi) => {
            let e = mc_ensemble(psi, &q, probes)?;
            Ok(QuenchRun {
                series: e.mean,
                stderr: Some(e.stderr),
            })
        }
    }
}
