//! Scenario orchestration and output files.
//!
//! Every scenario renders its outputs in memory as `(file name, contents)`
//! pairs; [`run_scenario`] writes them into the configured directory. Outputs
//! contain no timestamps or host details, so identical configurations give
//! byte-identical files.

use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::{Format, InitialSpec, RunConfig, Scenario};
use crate::dynamics::{
    integrate_master_equation, Settled, mc_ensemble, quench_carrier, settle_to_steady, EnsembleResult, ObservableSeries,
    Probes, QuenchInput, SimParams, Snapshot,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_effective_hamiltonian, reduction_check, EffectiveParams};
use crate::hilbert::{apply_to_state, pair_annihilation, DensityOperator, StateVector};
use crate::observables::charge_stats;
use crate::states::{bessel_i, fidelity_density, motional_marginal, purity, PcsLabel};

/// Tolerance of the Hamiltonian reduction check relative to `max|H|`.
pub const REDUCTION_TOLERANCE: f64 = 1e-12;

/// Rendered outputs of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub files: Vec<(String, String)>,
    pub summary: Value,
}

impl ScenarioOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

/// Runs the configured scenario and writes its files into
/// `cfg.output.dir`, creating the directory if needed.
pub fn run_scenario(cfg: &RunConfig) -> Result<ScenarioOutput> {
    let out = render_scenario(cfg)?;
    write_outputs(&cfg.output.dir, &out)?;
    Ok(out)
}

pub fn write_outputs(dir: &Path, out: &ScenarioOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in &out.files {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Runs the configured scenario without touching the file system.
pub fn render_scenario(cfg: &RunConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let mut w = Writer::new(cfg);
    let summary = match cfg.scenario {
        Scenario::RelaxMe => relax_me(cfg, &mut w)?,
        Scenario::RelaxMc => relax_mc(cfg, &mut w)?,
        Scenario::Quench => quench(cfg, &mut w)?,
        Scenario::PcsBuild => pcs_build(cfg, &mut w)?,
        Scenario::ReductionCheck => reduction(cfg)?,
    };
    let mut summary = summary;
    summary["scenario"] = json!(cfg.scenario);
    summary["config"] = cfg.to_json();
    w.json("summary.json", &summary)?;
    Ok(ScenarioOutput {
        files: w.files,
        summary,
    })
}

struct Writer {
    csv: bool,
    json: bool,
    files: Vec<(String, String)>,
}

impl Writer {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            csv: cfg.output.formats.contains(&Format::Csv),
            json: cfg.output.formats.contains(&Format::Json),
            files: Vec::new(),
        }
    }

    fn csv(&mut self, name: String, contents: impl FnOnce() -> String) {
        if self.csv {
            self.files.push((name, contents()));
        }
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        if self.json {
            let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
            text.push('\n');
            self.files.push((name.to_owned(), text));
        }
        Ok(())
    }

    fn snapshots(&mut self, cfg: &RunConfig, snaps: &[Snapshot]) {
        for (label, s) in cfg.snapshot_labels().into_iter().zip(snaps) {
            self.csv(format!("pnm_{label}.csv"), || s.distribution.to_csv());
        }
    }
}

fn probes(cfg: &RunConfig) -> Result<Probes> {
    Ok(Probes {
        target: cfg.target_state()?,
        snapshots: cfg.snapshot_request(),
        keep_trajectories: cfg.output.trajectories.min(cfg.params.n_traj),
    })
}

fn last(col: &Option<Vec<f64>>) -> Option<f64> {
    col.as_ref().and_then(|c| c.last().copied())
}

fn final_block(series: &ObservableSeries) -> Value {
    json!({
        "t": series.times.last(),
        "sz": series.sz.last(),
        "pol_re": series.pol_re.last(),
        "pol_im": series.pol_im.last(),
        "trace": series.trace.last(),
        "purity": last(&series.purity),
        "q_mean": series.q_mean.last(),
        "fidelity_pcs": last(&series.fidelity_pcs),
    })
}

/// Probability outside the target's charge sector.
fn off_charge(cfg: &RunConfig, rho: &DensityOperator) -> Option<f64> {
    cfg.target
        .as_ref()
        .map(|t| motional_marginal(rho).off_charge(t.q))
}

fn steady_report(
    cfg: &RunConfig,
    s: &Settled,
    t_final: f64,
    fidelity: Option<f64>,
    off_charge: Option<f64>,
) -> Value {
    json!({
        "reached": s.reached,
        "tol": cfg.steady.tol,
        "t": t_final + s.elapsed,
        "settle_time": s.elapsed,
        "rhs_max": s.residual.rhs_max,
        "commutator_max": s.residual.commutator_max,
        "purity": purity(&s.rho),
        "fidelity_pcs": fidelity,
        "off_charge": off_charge,
    })
}

fn relax_me(cfg: &RunConfig, w: &mut Writer) -> Result<Value> {
    let p = cfg.sim_params();
    let probes = probes(cfg)?;
    let rho0 = DensityOperator::from_pure(&cfg.initial_state()?);
    let run = integrate_master_equation(&rho0, &p, &probes)?;
    let settled = settle_to_steady(&run.rho, &p, cfg.steady.tol, cfg.steady.settle_time)?;

    w.csv("series.csv".into(), || run.series.to_csv());
    w.snapshots(cfg, &run.snapshots);

    let target = probes.target.as_ref();
    let steady_fidelity = target.map(|t| fidelity_density(&settled.rho, t)).transpose()?;
    Ok(json!({
        "purity": last(&run.series.purity),
        "fidelity_pcs": last(&run.series.fidelity_pcs),
        "steady_state": settled.reached,
        "final": final_block(&run.series),
        "off_charge": off_charge(cfg, &run.rho),
        "steady": steady_report(cfg, &settled, p.t_final, steady_fidelity, off_charge(cfg, &settled.rho)),
        "leak": run.leak.max(settled.leak),
        "seeds": { "master_seed": p.master_seed },
    }))
}

fn jump_stats(e: &EnsembleResult) -> Value {
    let n = e.jump_counts.len() as f64;
    let total: usize = e.jump_counts.iter().sum();
    let mean = total as f64 / n;
    let var = if e.jump_counts.len() > 1 {
        e.jump_counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    json!({
        "total": total,
        "mean": mean,
        "std": var.sqrt(),
        "min": e.jump_counts.iter().min(),
        "max": e.jump_counts.iter().max(),
    })
}

fn relax_mc(cfg: &RunConfig, w: &mut Writer) -> Result<Value> {
    let p = cfg.sim_params();
    let probes = probes(cfg)?;
    let e = mc_ensemble(&cfg.initial_state()?, &p, &probes)?;

    w.csv("series.csv".into(), || e.mean.to_csv());
    w.csv("series_stderr.csv".into(), || e.stderr.to_csv());
    w.snapshots(cfg, &e.snapshots);
    for (k, t) in e.trajectories.iter().enumerate() {
        w.csv(format!("trajectory_{k:04}.csv"), || t.series.to_csv());
    }

    let h = p.model.hamiltonian(cfg.space)?;
    let residual = crate::dynamics::steady_residual(&e.density, &h, p.gamma)?;
    let fidelity = probes
        .target
        .as_ref()
        .map(|t| fidelity_density(&e.density, t))
        .transpose()?;
    Ok(json!({
        "purity": purity(&e.density),
        "fidelity_pcs": fidelity,
        "steady_state": residual.is_steady(cfg.steady.tol),
        "final": final_block(&e.mean),
        "off_charge": off_charge(cfg, &e.density),
        "steady": {
            "tol": cfg.steady.tol,
            "rhs_max": residual.rhs_max,
            "commutator_max": residual.commutator_max,
        },
        "jumps": jump_stats(&e),
        "leak": e.leak,
        "seeds": { "master_seed": p.master_seed, "trajectory_seeds": e.seeds },
    }))
}

fn quench(cfg: &RunConfig, w: &mut Writer) -> Result<Value> {
    let p = cfg.sim_params();
    let probes = probes(cfg)?;
    let psi0 = cfg.initial_state()?;
    let input = if cfg.quench.relax_time > 0.0 {
        let relax = SimParams {
            t_final: cfg.quench.relax_time,
            ..p
        };
        let rho = integrate_master_equation(&DensityOperator::from_pure(&psi0), &relax, &Probes::default())?.rho;
        QuenchInput::Density(rho)
    } else if p.gamma == 0.0 {
        QuenchInput::State(psi0)
    } else {
        QuenchInput::Density(DensityOperator::from_pure(&psi0))
    };
    let run = quench_carrier(&input, &p, &probes)?;
    w.csv("series.csv".into(), || run.series.to_csv());
    if let Some(se) = &run.stderr {
        w.csv("series_stderr.csv".into(), || se.to_csv());
    }
    let sz = &run.series.sz;
    Ok(json!({
        "purity": last(&run.series.purity),
        "fidelity_pcs": last(&run.series.fidelity_pcs),
        "final": final_block(&run.series),
        "sz_min": sz.iter().copied().fold(f64::INFINITY, f64::min),
        "sz_max": sz.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "seeds": { "master_seed": p.master_seed },
    }))
}

fn pcs_build(cfg: &RunConfig, w: &mut Writer) -> Result<Value> {
    let InitialSpec::Pcs { xi, q, .. } = cfg.initial else {
        return Err(Error::validation("initial.kind", "pcs_build needs a pcs initial state"));
    };
    let label = PcsLabel::new(xi, q)?;
    let psi = cfg.initial_state()?;
    let dist = motional_marginal(&psi);
    w.csv("pnm_pcs.csv".into(), || dist.to_csv());

    let residual = eigen_residual(&psi, xi)?;
    let (q_mean, q_var) = charge_stats(&psi)?;
    Ok(json!({
        "xi": { "re": xi.re, "im": xi.im },
        "q": q,
        "normalization_sqr": label.normalization_sqr()?,
        "bessel_i": bessel_i(q, 2.0 * xi.norm())?,
        "norm": psi.norm(),
        "eigen_residual": residual,
        "q_mean": q_mean,
        "q_var": q_var,
        "off_charge": dist.off_charge(q),
    }))
}

/// `‖âb̂ψ − ξψ‖`
fn eigen_residual(psi: &StateVector, xi: C64) -> Result<f64> {
    let ab = apply_to_state(&pair_annihilation(psi.space()), psi)?;
    Ok(ab
        .amplitudes()
        .iter()
        .zip(psi.amplitudes())
        .map(|(a, b)| (a - xi * b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn reduction(cfg: &RunConfig) -> Result<Value> {
    let d = cfg.drive;
    let eff = EffectiveParams::from_drive(&d)?;
    let diff = reduction_check(cfg.space, &d)?;
    let h_max = build_effective_hamiltonian(cfg.space, &eff).max_abs();
    Ok(json!({
        "max_abs_difference": diff,
        "h_max": h_max,
        "relative_difference": diff / h_max,
        "tolerance": REDUCTION_TOLERANCE,
        "pass": diff < REDUCTION_TOLERANCE * h_max,
        "alpha": eff.alpha,
        "xi": { "re": eff.xi.re, "im": eff.xi.im },
        "truncation_coefficient": d.truncation_coefficient(),
    }))
}
