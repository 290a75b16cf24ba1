use num_complex::Complex64 as C64;
use serde::Serialize;

use super::reduced::{commutator_max, lindblad_apply, LindbladWork, ReducedModel};
use crate::error::Result;
use crate::hilbert::{DensityOperator, SparseOperator};

/// Max-entry norms of the Lindblad right-hand side and of `[H, ρ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SteadyResidual {
    pub rhs_max: f64,
    pub commutator_max: f64,
}

impl SteadyResidual {
    pub fn is_steady(&self, tol: f64) -> bool {
        self.rhs_max < tol && self.commutator_max < tol
    }
}

pub(crate) fn reduced_residual(model: &ReducedModel, rho: &[C64], work: &mut LindbladWork) -> SteadyResidual {
    let d = model.dim();
    let mut rhs = vec![Default::default(); d * d];
    lindblad_apply(&model.h_eff, &model.jump, model.gamma, rho, &mut rhs, work);
    SteadyResidual {
        rhs_max: rhs.iter().map(|v: &C64| v.norm()).fold(0.0, f64::max),
        commutator_max: commutator_max(&model.h, rho, work),
    }
}

fn support(rho: &DensityOperator) -> Vec<usize> {
    let d = rho.dim();
    (0..d).filter(|&i| rho.get(i, i).re != 0.0).collect()
}

/// Residuals of `ρ` under Hamiltonian `h` and decay rate `gamma`.
pub fn steady_residual(rho: &DensityOperator, h: &SparseOperator, gamma: f64) -> Result<SteadyResidual> {
    rho.space().check_same(&h.space())?;
    let model = ReducedModel::new(h, gamma, support(rho), None);
    let r = model.sub.gather_matrix(rho.as_slice());
    let mut work = LindbladWork::new(model.dim());
    Ok(reduced_residual(&model, &r, &mut work))
}

/// True when both the Lindblad right-hand side and `[H, ρ]` are below `tol`
/// in max-entry norm.
pub fn detect_steady_state(rho: &DensityOperator, h: &SparseOperator, gamma: f64, tol: f64) -> Result<bool> {
    Ok(steady_residual(rho, h, gamma)?.is_steady(tol))
}
