//! C ABI over the `pcs-sim` library.
//!
//! Objects are exposed as opaque handles created by `*_new`-style functions
//! and released with the matching `*_free`. Every fallible function returns a
//! [`PcsStatus`]; on failure a description is available from
//! [`pcs_last_error_message`] on the same thread. Panics never cross the
//! boundary: they are caught and reported as [`PcsStatus::Panic`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use pcs_sim::config::Overrides;
use pcs_sim::dynamics::{integrate_master_equation, mc_ensemble, Model, ObservableSeries, Probes, SimParams};
use pcs_sim::hamiltonian::EffectiveParams;
use pcs_sim::observables::{charge_stats, inversion, polarization};
use pcs_sim::states::{bessel_i, fidelity_density, fidelity_state, fock_state, motional_marginal, pcs_state, purity, PcsLabel};
use pcs_sim::{AtomLevel, DensityOperator, Error, ErrorCategory, Scenario, SpaceConfig, StateVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Input = 3,
    Config = 4,
    Integration = 5,
    Truncation = 6,
    Io = 7,
    Panic = 8,
}

/// Atom level selector: `PCS_ATOM_G = 0`, `PCS_ATOM_E = 1`.
pub const PCS_ATOM_G: i32 = 0;
pub const PCS_ATOM_E: i32 = 1;

/// Columns of an observable series.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcsColumn {
    Time = 0,
    Sz = 1,
    PolRe = 2,
    PolIm = 3,
    Trace = 4,
    Purity = 5,
    QMean = 6,
    Leak = 7,
    FidelityPcs = 8,
}

/// Effective-model run parameters.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PcsRunParams {
    pub alpha: f64,
    pub xi_re: f64,
    pub xi_im: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: u64,
    pub master_seed: u64,
    pub output_every: u64,
}

/// Truncated Hilbert space.
pub struct PcsSpace(SpaceConfig);

/// Pure state.
pub struct PcsState(StateVector);

/// Density matrix.
pub struct PcsDensity(DensityOperator);

/// Sampled observables of a run.
pub struct PcsSeries(ObservableSeries);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn status_of(e: &Error) -> PcsStatus {
    match e.category() {
        ErrorCategory::Input => PcsStatus::Input,
        ErrorCategory::Config => PcsStatus::Config,
        ErrorCategory::Integration => PcsStatus::Integration,
        ErrorCategory::Truncation => PcsStatus::Truncation,
        ErrorCategory::Io => PcsStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PcsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PcsStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PcsStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            PcsStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PcsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    if len < need {
        return Err(Fail::Arg(format!("{what}: buffer holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

fn atom(a: i32) -> Result<AtomLevel, Fail> {
    match a {
        PCS_ATOM_G => Ok(AtomLevel::Ground),
        PCS_ATOM_E => Ok(AtomLevel::Excited),
        other => Err(Fail::Arg(format!("atom must be 0 (g) or 1 (e), got {other}"))),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn pcs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Spaces
// ---------------------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn pcs_space_new(cutoff: u64, out_space: *mut *mut PcsSpace) -> PcsStatus {
    guard(|| {
        let slot = out(out_space, "out_space")?;
        *slot = boxed(PcsSpace(SpaceConfig::new(cutoff as usize)?));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_space_free(space: *mut PcsSpace) {
    free(space)
}

/// Hilbert-space dimension `2(N+1)²`, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pcs_space_dim(space: *const PcsSpace) -> u64 {
    space.as_ref().map_or(0, |s| s.0.dim() as u64)
}

#[no_mangle]
pub unsafe extern "C" fn pcs_space_flat_index(
    space: *const PcsSpace,
    atom_level: i32,
    n: u64,
    m: u64,
    out_index: *mut u64,
) -> PcsStatus {
    guard(|| {
        let s = get(space, "space")?;
        let idx = s.0.flat_index(atom(atom_level)?, n as usize, m as usize)?;
        *out(out_index, "out_index")? = idx as u64;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn pcs_state_fock(
    space: *const PcsSpace,
    atom_level: i32,
    n: u64,
    m: u64,
    out_state: *mut *mut PcsState,
) -> PcsStatus {
    guard(|| {
        let s = get(space, "space")?;
        let psi = fock_state(s.0, atom(atom_level)?, n as usize, m as usize)?;
        *out(out_state, "out_state")? = boxed(PcsState(psi));
        Ok(())
    })
}

/// `|atom⟩ ⊗ |ξ, q⟩`.
#[no_mangle]
pub unsafe extern "C" fn pcs_state_pcs(
    space: *const PcsSpace,
    xi_re: f64,
    xi_im: f64,
    q: i64,
    atom_level: i32,
    out_state: *mut *mut PcsState,
) -> PcsStatus {
    guard(|| {
        let s = get(space, "space")?;
        let label = PcsLabel::new(C64::new(xi_re, xi_im), q)?;
        let psi = pcs_state(s.0, label, atom(atom_level)?)?;
        *out(out_state, "out_state")? = boxed(PcsState(psi));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_state_free(state: *mut PcsState) {
    free(state)
}

/// Number of amplitudes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pcs_state_len(state: *const PcsState) -> u64 {
    state.as_ref().map_or(0, |s| s.0.amplitudes().len() as u64)
}

/// Copies the amplitudes into `re` and `im`, each of capacity `len`.
#[no_mangle]
pub unsafe extern "C" fn pcs_state_amplitudes(state: *const PcsState, re: *mut f64, im: *mut f64, len: u64) -> PcsStatus {
    guard(|| {
        let s = get(state, "state")?;
        let amps = s.0.amplitudes();
        let re = out_slice(re, len as usize, amps.len(), "re")?;
        let im = out_slice(im, len as usize, amps.len(), "im")?;
        for ((r, i), a) in re.iter_mut().zip(im.iter_mut()).zip(amps) {
            *r = a.re;
            *i = a.im;
        }
        Ok(())
    })
}

/// Accumulated truncation leak of the state.
#[no_mangle]
pub unsafe extern "C" fn pcs_state_leak(state: *const PcsState, out_leak: *mut f64) -> PcsStatus {
    guard(|| {
        *out(out_leak, "out_leak")? = get(state, "state")?.0.leak();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_state_inversion(state: *const PcsState, out_sz: *mut f64) -> PcsStatus {
    guard(|| {
        *out(out_sz, "out_sz")? = inversion(&get(state, "state")?.0)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_state_polarization(state: *const PcsState, out_re: *mut f64, out_im: *mut f64) -> PcsStatus {
    guard(|| {
        let (re, im) = polarization(&get(state, "state")?.0)?;
        *out(out_re, "out_re")? = re;
        *out(out_im, "out_im")? = im;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_state_charge_stats(state: *const PcsState, out_mean: *mut f64, out_var: *mut f64) -> PcsStatus {
    guard(|| {
        let (mean, var) = charge_stats(&get(state, "state")?.0)?;
        *out(out_mean, "out_mean")? = mean;
        *out(out_var, "out_var")? = var;
        Ok(())
    })
}

/// `|⟨a|b⟩|²`
#[no_mangle]
pub unsafe extern "C" fn pcs_state_fidelity(a: *const PcsState, b: *const PcsState, out_fidelity: *mut f64) -> PcsStatus {
    guard(|| {
        *out(out_fidelity, "out_fidelity")? = fidelity_state(&get(a, "a")?.0, &get(b, "b")?.0)?;
        Ok(())
    })
}

/// Writes `P(n, m)` at `probs[n·(N+1) + m]`; `len` must be at least `(N+1)²`.
#[no_mangle]
pub unsafe extern "C" fn pcs_state_marginal(state: *const PcsState, probs: *mut f64, len: u64) -> PcsStatus {
    guard(|| {
        let d = motional_marginal(&get(state, "state")?.0);
        let p = d.probabilities();
        out_slice(probs, len as usize, p.len(), "probs")?.copy_from_slice(p);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn pcs_density_from_state(state: *const PcsState, out_density: *mut *mut PcsDensity) -> PcsStatus {
    guard(|| {
        let rho = DensityOperator::from_pure(&get(state, "state")?.0);
        *out(out_density, "out_density")? = boxed(PcsDensity(rho));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_density_free(density: *mut PcsDensity) {
    free(density)
}

#[no_mangle]
pub unsafe extern "C" fn pcs_density_purity(density: *const PcsDensity, out_purity: *mut f64) -> PcsStatus {
    guard(|| {
        *out(out_purity, "out_purity")? = purity(&get(density, "density")?.0);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_density_inversion(density: *const PcsDensity, out_sz: *mut f64) -> PcsStatus {
    guard(|| {
        *out(out_sz, "out_sz")? = inversion(&get(density, "density")?.0)?;
        Ok(())
    })
}

/// `⟨ψ|ρ|ψ⟩`
#[no_mangle]
pub unsafe extern "C" fn pcs_density_fidelity(
    density: *const PcsDensity,
    state: *const PcsState,
    out_fidelity: *mut f64,
) -> PcsStatus {
    guard(|| {
        *out(out_fidelity, "out_fidelity")? = fidelity_density(&get(density, "density")?.0, &get(state, "state")?.0)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_density_marginal(density: *const PcsDensity, probs: *mut f64, len: u64) -> PcsStatus {
    guard(|| {
        let d = motional_marginal(&get(density, "density")?.0);
        let p = d.probabilities();
        out_slice(probs, len as usize, p.len(), "probs")?.copy_from_slice(p);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Modified Bessel function of the first kind `I_q(x)`.
#[no_mangle]
pub unsafe extern "C" fn pcs_bessel_i(q: i64, x: f64, out_value: *mut f64) -> PcsStatus {
    guard(|| {
        *out(out_value, "out_value")? = bessel_i(q, x)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

fn sim_params(p: &PcsRunParams) -> Result<SimParams, Fail> {
    let eff = EffectiveParams::new(p.alpha, C64::new(p.xi_re, p.xi_im))?;
    Ok(SimParams {
        model: Model::Effective(eff),
        gamma: p.gamma,
        dt: p.dt,
        t_final: p.t_final,
        n_traj: p.n_traj as usize,
        master_seed: p.master_seed,
        output_every: p.output_every as usize,
    })
}

unsafe fn probes(target: *const PcsState) -> Probes {
    Probes {
        target: target.as_ref().map(|t| t.0.clone()),
        ..Probes::default()
    }
}

/// Integrates the master equation of the effective model from a pure state.
/// `target` may be null; when given, the series carries its fidelity.
/// `out_density` may be null if the final state is not wanted.
#[no_mangle]
pub unsafe extern "C" fn pcs_master_equation(
    initial: *const PcsState,
    params: *const PcsRunParams,
    target: *const PcsState,
    out_series: *mut *mut PcsSeries,
    out_density: *mut *mut PcsDensity,
) -> PcsStatus {
    guard(|| {
        let psi = get(initial, "initial")?;
        let p = sim_params(get(params, "params")?)?;
        let slot = out(out_series, "out_series")?;
        let run = integrate_master_equation(&DensityOperator::from_pure(&psi.0), &p, &probes(target))?;
        *slot = boxed(PcsSeries(run.series));
        if let Some(d) = out_density.as_mut() {
            *d = boxed(PcsDensity(run.rho));
        }
        Ok(())
    })
}

/// Quantum-jump ensemble of `params.n_traj` trajectories. `out_stderr` and
/// `out_density` may be null.
#[no_mangle]
pub unsafe extern "C" fn pcs_mc_ensemble(
    initial: *const PcsState,
    params: *const PcsRunParams,
    target: *const PcsState,
    out_mean: *mut *mut PcsSeries,
    out_stderr: *mut *mut PcsSeries,
    out_density: *mut *mut PcsDensity,
) -> PcsStatus {
    guard(|| {
        let psi = get(initial, "initial")?;
        let p = sim_params(get(params, "params")?)?;
        let slot = out(out_mean, "out_mean")?;
        let e = mc_ensemble(&psi.0, &p, &probes(target))?;
        *slot = boxed(PcsSeries(e.mean));
        if let Some(s) = out_stderr.as_mut() {
            *s = boxed(PcsSeries(e.stderr));
        }
        if let Some(d) = out_density.as_mut() {
            *d = boxed(PcsDensity(e.density));
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pcs_series_free(series: *mut PcsSeries) {
    free(series)
}

/// Number of samples, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn pcs_series_len(series: *const PcsSeries) -> u64 {
    series.as_ref().map_or(0, |s| s.0.len() as u64)
}

/// Whether the series has the given column (purity and fidelity are
/// optional).
#[no_mangle]
pub unsafe extern "C" fn pcs_series_has_column(series: *const PcsSeries, column: PcsColumn) -> bool {
    series.as_ref().is_some_and(|s| column_of(&s.0, column).is_some())
}

fn column_of(s: &ObservableSeries, c: PcsColumn) -> Option<&[f64]> {
    match c {
        PcsColumn::Time => Some(&s.times),
        PcsColumn::Sz => Some(&s.sz),
        PcsColumn::PolRe => Some(&s.pol_re),
        PcsColumn::PolIm => Some(&s.pol_im),
        PcsColumn::Trace => Some(&s.trace),
        PcsColumn::Purity => s.purity.as_deref(),
        PcsColumn::QMean => Some(&s.q_mean),
        PcsColumn::Leak => Some(&s.leak),
        PcsColumn::FidelityPcs => s.fidelity_pcs.as_deref(),
    }
}

/// Copies one column into `values` (capacity `len`).
#[no_mangle]
pub unsafe extern "C" fn pcs_series_column(
    series: *const PcsSeries,
    column: PcsColumn,
    values: *mut f64,
    len: u64,
) -> PcsStatus {
    guard(|| {
        let s = get(series, "series")?;
        let col = column_of(&s.0, column).ok_or_else(|| Fail::Arg(format!("series has no {column:?} column")))?;
        out_slice(values, len as usize, col.len(), "values")?.copy_from_slice(col);
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Runs a scenario as the command-line tool does. `config_text` (TOML or
/// JSON) and `out_dir` may be null; `out_dir` overrides the configured output
/// directory.
#[no_mangle]
pub unsafe extern "C" fn pcs_run_scenario(
    scenario: *const c_char,
    config_text: *const c_char,
    out_dir: *const c_char,
) -> PcsStatus {
    guard(|| {
        let name = c_str(scenario, "scenario")?;
        let text = if config_text.is_null() {
            ""
        } else {
            c_str(config_text, "config_text")?
        };
        let overrides = Overrides {
            scenario: Some(Scenario::parse(name)?),
            output_dir: if out_dir.is_null() {
                None
            } else {
                Some(PathBuf::from(c_str(out_dir, "out_dir")?))
            },
            ..Overrides::default()
        };
        let cfg = pcs_sim::parse_config(text)?.with_overrides(&overrides)?;
        pcs_sim::run_scenario(&cfg)?;
        Ok(())
    })
}
