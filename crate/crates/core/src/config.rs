//! Run configuration: parsing, defaults and validation.
//!
//! A configuration is a TOML document (JSON is accepted as well) with flat
//! sections:
//!
//! ```toml
//! scenario = "relax_me"      # relax_me | relax_mc | quench | pcs_build | reduction_check
//!
//! [space]
//! cutoff = 20
//!
//! [params]
//! model = "effective"        # effective | full
//! alpha = 0.2
//! xi = 2.0                   # or { re = 2.0, im = 0.0 } or { modulus = 2.0, phase = 0.0 }
//! gamma = 10.0
//! dt = 0.005
//! t_final = 200.0
//! n_traj = 1000
//! master_seed = 0
//! output_every = 100
//!
//! [drive]                    # laser parameters of the full model
//! omega0 = 0.04
//! omega1 = 8.0
//! omega2 = 8.0
//! phi0 = 0.0
//! phi1 = 0.0
//! phi2 = 3.141592653589793
//! eta = 0.05
//! j_max = 3
//!
//! [initial]
//! kind = "fock"              # fock { atom, n, m } | pcs { xi, q, atom }
//! atom = "e"
//! n = 7
//! m = 6
//!
//! [target]                   # reference state of the fidelity column
//! kind = "pcs"               # pcs { xi, q, atom } | none
//!
//! [snapshots]
//! gamma_times = [0, 125, 500, 2000]   # in units of 1/Γ, or `times` in units of t
//!
//! [steady]
//! tol = 1e-4
//! settle_time = 500.0
//!
//! [quench]
//! relax_time = 0.0
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "json"]
//! trajectories = 0
//! ```
//!
//! Every key is optional; missing keys take the defaults shown above, except
//! that the target defaults to `|g⟩` times the pair coherent state with the
//! run's `ξ` and the initial state's charge.

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dynamics::{Model, SimParams, DEFAULT_STEADY_TOL};
use crate::error::{Error, Result};
use crate::hamiltonian::{DriveParams, EffectiveParams};
use crate::hilbert::{AtomLevel, SpaceConfig, StateVector};
use crate::observables::SnapshotRequest;
use crate::states::{fock_state, pcs_state, PcsLabel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RelaxMe,
    RelaxMc,
    Quench,
    PcsBuild,
    ReductionCheck,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::RelaxMe => "relax_me",
            Scenario::RelaxMc => "relax_mc",
            Scenario::Quench => "quench",
            Scenario::PcsBuild => "pcs_build",
            Scenario::ReductionCheck => "reduction_check",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_owned())).map_err(|_| {
            Error::validation(
                "scenario",
                format!("unknown scenario `{s}`; expected relax_me, relax_mc, quench, pcs_build or reduction_check"),
            )
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Effective,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Simulation parameters as written in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamsConfig {
    pub model: ModelKind,
    pub alpha: f64,
    pub xi: C64,
    pub gamma: f64,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub output_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Fock { atom: AtomLevel, n: usize, m: usize },
    Pcs { xi: C64, q: i64, atom: AtomLevel },
}

impl InitialSpec {
    /// `n − m` of the state.
    pub fn charge(&self) -> i64 {
        match *self {
            InitialSpec::Fock { n, m, .. } => n as i64 - m as i64,
            InitialSpec::Pcs { q, .. } => q,
        }
    }

    pub fn build(&self, space: SpaceConfig) -> Result<StateVector> {
        match *self {
            InitialSpec::Fock { atom, n, m } => fock_state(space, atom, n, m),
            InitialSpec::Pcs { xi, q, atom } => pcs_state(space, PcsLabel::new(xi, q)?, atom),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub xi: C64,
    pub q: i64,
    pub atom: AtomLevel,
}

/// Snapshot times, either absolute or in units of `1/Γ`. The form chosen
/// decides the file labels (`pnm_t<t>.csv` or `pnm_gt<Γt>.csv`).
#[derive(Clone, Debug, PartialEq)]
pub enum SnapshotSpec {
    Times(Vec<f64>),
    GammaTimes(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyConfig {
    pub tol: f64,
    /// Longest extra integration allowed after `t_final` while waiting for the
    /// steady-state test to pass.
    pub settle_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuenchConfig {
    /// Master-equation relaxation with the carrier on before the quench.
    pub relax_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: BTreeSet<Format>,
    /// Number of leading trajectories whose own series are written.
    pub trajectories: usize,
}

/// A validated run description with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub space: SpaceConfig,
    pub params: ParamsConfig,
    pub drive: DriveParams,
    pub initial: InitialSpec,
    pub target: Option<TargetSpec>,
    pub snapshots: SnapshotSpec,
    pub steady: SteadyConfig,
    pub quench: QuenchConfig,
    pub output: OutputConfig,
}

const DEFAULT_GAMMA_TIMES: [f64; 4] = [0.0, 125.0, 500.0, 2000.0];

const SCHEMA: &[(&str, &[&str])] = &[
    ("space", &["cutoff"]),
    (
        "params",
        &[
            "model",
            "alpha",
            "xi",
            "gamma",
            "dt",
            "t_final",
            "n_traj",
            "master_seed",
            "output_every",
        ],
    ),
    (
        "drive",
        &["omega0", "omega1", "omega2", "phi0", "phi1", "phi2", "eta", "j_max"],
    ),
    ("initial", &["kind", "atom", "n", "m", "xi", "q"]),
    ("target", &["kind", "xi", "q", "atom"]),
    ("snapshots", &["times", "gamma_times"]),
    ("steady", &["tol", "settle_time"]),
    ("quench", &["relax_time"]),
    ("output", &["dir", "formats", "trajectories"]),
];

const XI_KEYS: &[&str] = &["re", "im", "modulus", "phase"];

fn unknown_keys(doc: &Map<String, Value>) -> Vec<String> {
    let mut unknown = Vec::new();
    for (key, value) in doc {
        if key == "scenario" {
            continue;
        }
        let Some((_, fields)) = SCHEMA.iter().find(|(s, _)| s == key) else {
            unknown.push(key.clone());
            continue;
        };
        let Value::Object(section) = value else {
            continue;
        };
        for (field, v) in section {
            if !fields.contains(&field.as_str()) {
                unknown.push(format!("{key}.{field}"));
            } else if field == "xi" {
                if let Value::Object(xi) = v {
                    unknown.extend(
                        xi.keys()
                            .filter(|k| !XI_KEYS.contains(&k.as_str()))
                            .map(|k| format!("{key}.xi.{k}")),
                    );
                }
            }
        }
    }
    unknown
}

/// Reads a TOML or JSON document into a generic tree.
fn parse_document(text: &str) -> Result<Map<String, Value>> {
    let trimmed = text.trim_start();
    let value: Value = if trimmed.starts_with('{') {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?
    } else {
        let t: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
        serde_json::to_value(t).map_err(|e| Error::Config(e.to_string()))?
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(Error::Config("configuration must be a table of sections".into())),
    }
}

/// Typed accessors over one section with field-path error messages.
struct Section<'a> {
    name: &'a str,
    map: Option<&'a Map<String, Value>>,
}

impl<'a> Section<'a> {
    fn of(doc: &'a Map<String, Value>, name: &'a str) -> Result<Self> {
        match doc.get(name) {
            None => Ok(Self { name, map: None }),
            Some(Value::Object(map)) => Ok(Self { name, map: Some(map) }),
            Some(_) => Err(Error::validation(name, "expected a table")),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.map.and_then(|m| m.get(key))
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::validation(self.path(key), "expected a number")),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::validation(self.path(key), "expected a nonnegative integer")),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        self.u64(key, default as u64).map(|v| v as usize)
    }

    fn i64(&self, key: &str, default: i64) -> Result<i64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .as_i64()
                .ok_or_else(|| Error::validation(self.path(key), "expected an integer")),
        }
    }

    fn str(&self, key: &str, default: &'a str) -> Result<&'a str> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .as_str()
                .ok_or_else(|| Error::validation(self.path(key), "expected a string")),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let arr = v
            .as_array()
            .ok_or_else(|| Error::validation(self.path(key), "expected an array of numbers"))?;
        arr.iter()
            .enumerate()
            .map(|(k, x)| {
                x.as_f64()
                    .ok_or_else(|| Error::validation(format!("{}[{k}]", self.path(key)), "expected a number"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn atom(&self, key: &str, default: AtomLevel) -> Result<AtomLevel> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| Error::validation(self.path(key), "expected \"g\" or \"e\"")),
        }
    }

    fn xi(&self, key: &str, default: C64) -> Result<C64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_xi(v, &self.path(key)),
        }
    }
}

/// `ξ` as a real number, `{re, im}`, or `{modulus, phase}`.
fn parse_xi(v: &Value, path: &str) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    let bad = || Error::validation(path, "expected a number, {re, im}, or {modulus, phase}");
    let obj = v.as_object().ok_or_else(bad)?;
    let get = |k: &str| -> Result<Option<f64>> {
        match obj.get(k) {
            None => Ok(None),
            Some(x) => x
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::validation(format!("{path}.{k}"), "expected a number")),
        }
    };
    match (get("re")?, get("im")?, get("modulus")?, get("phase")?) {
        (re, im, None, None) if re.is_some() || im.is_some() => {
            Ok(C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)))
        }
        (None, None, Some(r), phase) => {
            if r < 0.0 {
                return Err(Error::validation(format!("{path}.modulus"), "must be nonnegative"));
            }
            Ok(C64::from_polar(r, phase.unwrap_or(0.0)))
        }
        _ => Err(bad()),
    }
}

/// Parses and validates a configuration document, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc = parse_document(text)?;
    let unknown = unknown_keys(&doc);
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }

    let scenario = match doc.get("scenario") {
        None => Scenario::RelaxMe,
        Some(Value::String(s)) => Scenario::parse(s)?,
        Some(_) => return Err(Error::validation("scenario", "expected a string")),
    };

    let s = Section::of(&doc, "space")?;
    let cutoff = s.usize("cutoff", 20)?;
    let space = SpaceConfig::new(cutoff).map_err(|e| Error::validation("space.cutoff", e.to_string()))?;

    let s = Section::of(&doc, "params")?;
    let model = match s.str("model", "effective")? {
        "effective" => ModelKind::Effective,
        "full" => ModelKind::Full,
        other => {
            return Err(Error::validation(
                "params.model",
                format!("unknown model `{other}`; expected effective or full"),
            ))
        }
    };
    let params = ParamsConfig {
        model,
        alpha: s.f64("alpha", 0.2)?,
        xi: s.xi("xi", C64::new(2.0, 0.0))?,
        gamma: s.f64("gamma", 10.0)?,
        dt: s.f64("dt", 0.005)?,
        t_final: s.f64("t_final", 200.0)?,
        n_traj: s.usize("n_traj", 1000)?,
        master_seed: s.u64("master_seed", 0)?,
        output_every: s.usize("output_every", 100)?,
    };

    let s = Section::of(&doc, "drive")?;
    let base = DriveParams::default();
    let drive = DriveParams {
        omega0: s.f64("omega0", base.omega0)?,
        omega1: s.f64("omega1", base.omega1)?,
        omega2: s.f64("omega2", base.omega2)?,
        phi0: s.f64("phi0", base.phi0)?,
        phi1: s.f64("phi1", base.phi1)?,
        phi2: s.f64("phi2", base.phi2)?,
        eta: s.f64("eta", base.eta)?,
        j_max: s.usize("j_max", base.j_max)?,
    };

    let s = Section::of(&doc, "initial")?;
    let initial = match s.str("kind", "fock")? {
        "fock" => InitialSpec::Fock {
            atom: s.atom("atom", AtomLevel::Excited)?,
            n: s.usize("n", 7)?,
            m: s.usize("m", 6)?,
        },
        "pcs" => InitialSpec::Pcs {
            xi: s.xi("xi", params.xi)?,
            q: s.i64("q", 1)?,
            atom: s.atom("atom", AtomLevel::Ground)?,
        },
        other => {
            return Err(Error::validation(
                "initial.kind",
                format!("unknown initial state `{other}`; expected fock or pcs"),
            ))
        }
    };

    let run_xi = match model {
        ModelKind::Effective => params.xi,
        ModelKind::Full => EffectiveParams::from_drive(&drive)
            .map_err(|e| Error::validation("drive", e.to_string()))?
            .xi,
    };
    let s = Section::of(&doc, "target")?;
    let target = match s.str("kind", "pcs")? {
        "none" => None,
        "pcs" => {
            let q = s.i64("q", initial.charge())?;
            if s.raw("q").is_none() && q < 0 {
                None
            } else {
                Some(TargetSpec {
                    xi: s.xi("xi", run_xi)?,
                    q,
                    atom: s.atom("atom", AtomLevel::Ground)?,
                })
            }
        }
        other => {
            return Err(Error::validation(
                "target.kind",
                format!("unknown target `{other}`; expected pcs or none"),
            ))
        }
    };

    let s = Section::of(&doc, "snapshots")?;
    let snapshots = match (s.f64_list("times")?, s.f64_list("gamma_times")?) {
        (Some(_), Some(_)) => {
            return Err(Error::validation(
                "snapshots",
                "give either `times` or `gamma_times`, not both",
            ))
        }
        (Some(t), None) => SnapshotSpec::Times(t),
        (None, Some(g)) => SnapshotSpec::GammaTimes(g),
        (None, None) if params.gamma > 0.0 => SnapshotSpec::GammaTimes(
            DEFAULT_GAMMA_TIMES
                .iter()
                .copied()
                .filter(|g| g / params.gamma <= params.t_final * (1.0 + 1e-12))
                .collect(),
        ),
        (None, None) => SnapshotSpec::Times(vec![0.0]),
    };

    let s = Section::of(&doc, "steady")?;
    let steady = SteadyConfig {
        tol: s.f64("tol", DEFAULT_STEADY_TOL)?,
        settle_time: s.f64("settle_time", 500.0)?,
    };

    let s = Section::of(&doc, "quench")?;
    let quench = QuenchConfig {
        relax_time: s.f64("relax_time", 0.0)?,
    };

    let s = Section::of(&doc, "output")?;
    let formats = match s.raw("formats") {
        None => BTreeSet::from([Format::Csv, Format::Json]),
        Some(v) => serde_json::from_value::<BTreeSet<Format>>(v.clone())
            .map_err(|_| Error::validation("output.formats", "expected a list drawn from \"csv\", \"json\""))?,
    };
    let output = OutputConfig {
        dir: PathBuf::from(s.str("dir", "out")?),
        formats,
        trajectories: s.usize("trajectories", 0)?,
    };

    let cfg = RunConfig {
        scenario,
        space,
        params,
        drive,
        initial,
        target,
        snapshots,
        steady,
        quench,
        output,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Values that take precedence over a parsed configuration, as given on the
/// command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub master_seed: Option<u64>,
    pub n_traj: Option<usize>,
    pub cutoff: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("default configuration is valid")
    }
}

impl RunConfig {
    /// Checks the cross-field invariants, reporting the offending field path.
    pub fn validate(&self) -> Result<()> {
        let cutoff = self.space.cutoff();
        let p = &self.params;
        let sim = self.sim_params();

        if let InitialSpec::Fock { n, m, .. } = self.initial {
            for (key, v) in [("n", n), ("m", m)] {
                if v > cutoff {
                    return Err(Error::validation(
                        format!("initial.{key}"),
                        format!("{v} exceeds the cutoff {cutoff}"),
                    ));
                }
            }
        }
        self.initial
            .build(self.space)
            .map_err(|e| Error::validation("initial", e.to_string()))?;
        if let Some(t) = &self.target {
            self.target_state_for(t)
                .map_err(|e| Error::validation("target", e.to_string()))?;
        }

        if p.model == ModelKind::Effective && !(p.alpha > 0.0 && p.alpha.is_finite()) {
            return Err(Error::validation("params.alpha", "must be positive"));
        }
        if !(p.gamma >= 0.0 && p.gamma.is_finite()) {
            return Err(Error::validation("params.gamma", "must be nonnegative"));
        }
        if !(p.dt > 0.0 && p.dt.is_finite()) {
            return Err(Error::validation("params.dt", "must be positive"));
        }
        if !(p.t_final > 0.0 && p.t_final.is_finite()) {
            return Err(Error::validation("params.t_final", "must be positive"));
        }
        if sim.n_steps().is_err() {
            return Err(Error::validation("params.t_final", "must be a whole number of steps dt"));
        }
        if p.n_traj == 0 {
            return Err(Error::validation("params.n_traj", "must be at least 1"));
        }
        if p.output_every == 0 {
            return Err(Error::validation("params.output_every", "must be at least 1"));
        }
        if p.model == ModelKind::Full || self.scenario == Scenario::ReductionCheck {
            self.drive
                .validate()
                .map_err(|e| Error::validation("drive", e.to_string()))?;
        }
        if let SnapshotSpec::GammaTimes(_) = self.snapshots {
            if p.gamma == 0.0 {
                return Err(Error::validation(
                    "snapshots.gamma_times",
                    "needs gamma > 0; use `times` instead",
                ));
            }
        }
        self.snapshot_request()
            .validate(p.t_final)
            .map_err(|e| match e {
                Error::Validation { path, message } => {
                    let key = match self.snapshots {
                        SnapshotSpec::Times(_) => "times",
                        SnapshotSpec::GammaTimes(_) => "gamma_times",
                    };
                    Error::validation(path.replace("times", key), message)
                }
                other => other,
            })?;
        if !(self.steady.tol > 0.0) {
            return Err(Error::validation("steady.tol", "must be positive"));
        }
        if !(self.steady.settle_time >= 0.0 && self.steady.settle_time.is_finite()) {
            return Err(Error::validation("steady.settle_time", "must be nonnegative"));
        }
        if !(self.quench.relax_time >= 0.0 && self.quench.relax_time.is_finite()) {
            return Err(Error::validation("quench.relax_time", "must be nonnegative"));
        }
        if self.quench.relax_time > 0.0 {
            let relax = SimParams {
                t_final: self.quench.relax_time,
                ..sim
            };
            if relax.n_steps().is_err() {
                return Err(Error::validation(
                    "quench.relax_time",
                    "must be a whole number of steps dt",
                ));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::validation("output.formats", "must not be empty"));
        }
        if self.scenario == Scenario::PcsBuild && !matches!(self.initial, InitialSpec::Pcs { .. }) {
            return Err(Error::validation(
                "initial.kind",
                "pcs_build needs a pcs initial state",
            ));
        }
        if matches!(self.scenario, Scenario::RelaxMe | Scenario::RelaxMc | Scenario::Quench) {
            sim.validate(self.space).map_err(|e| Error::validation("params", e.to_string()))?;
        }
        Ok(())
    }

    pub fn model(&self) -> Model {
        match self.params.model {
            ModelKind::Effective => Model::Effective(EffectiveParams {
                alpha: self.params.alpha,
                xi: self.params.xi,
            }),
            ModelKind::Full => Model::Full(self.drive),
        }
    }

    pub fn sim_params(&self) -> SimParams {
        let p = &self.params;
        SimParams {
            model: self.model(),
            gamma: p.gamma,
            dt: p.dt,
            t_final: p.t_final,
            n_traj: p.n_traj,
            master_seed: p.master_seed,
            output_every: p.output_every,
        }
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        self.initial.build(self.space)
    }

    fn target_state_for(&self, t: &TargetSpec) -> Result<StateVector> {
        pcs_state(self.space, PcsLabel::new(t.xi, t.q)?, t.atom)
    }

    pub fn target_state(&self) -> Result<Option<StateVector>> {
        self.target.as_ref().map(|t| self.target_state_for(t)).transpose()
    }

    /// Snapshot times in units of `t`.
    pub fn snapshot_request(&self) -> SnapshotRequest {
        match &self.snapshots {
            SnapshotSpec::Times(t) => SnapshotRequest::new(t.clone()),
            SnapshotSpec::GammaTimes(g) => {
                SnapshotRequest::new(g.iter().map(|x| x / self.params.gamma).collect())
            }
        }
    }

    /// File label of each snapshot: `gt<Γt>` or `t<t>`.
    pub fn snapshot_labels(&self) -> Vec<String> {
        match &self.snapshots {
            SnapshotSpec::Times(t) => t.iter().map(|x| format!("t{x}")).collect(),
            SnapshotSpec::GammaTimes(g) => g.iter().map(|x| format!("gt{x}")).collect(),
        }
    }

    /// Applies `o` and re-validates the result.
    pub fn with_overrides(&self, o: &Overrides) -> Result<RunConfig> {
        let mut doc = self.to_json();
        if let Some(s) = o.scenario {
            doc["scenario"] = json!(s);
        }
        if let Some(seed) = o.master_seed {
            doc["params"]["master_seed"] = json!(seed);
        }
        if let Some(n) = o.n_traj {
            doc["params"]["n_traj"] = json!(n);
        }
        if let Some(n) = o.cutoff {
            doc["space"]["cutoff"] = json!(n);
        }
        if let Some(dir) = &o.output_dir {
            doc["output"]["dir"] = json!(dir.to_string_lossy());
        }
        parse_config(&doc.to_string())
    }

    /// The resolved configuration as a document `parse_config` accepts.
    pub fn to_json(&self) -> Value {
        let xi = |z: C64| json!({ "re": z.re, "im": z.im });
        let p = &self.params;
        let initial = match &self.initial {
            InitialSpec::Fock { atom, n, m } => json!({ "kind": "fock", "atom": atom, "n": n, "m": m }),
            InitialSpec::Pcs { xi: x, q, atom } => json!({ "kind": "pcs", "xi": xi(*x), "q": q, "atom": atom }),
        };
        let target = match &self.target {
            None => json!({ "kind": "none" }),
            Some(t) => json!({ "kind": "pcs", "xi": xi(t.xi), "q": t.q, "atom": t.atom }),
        };
        let snapshots = match &self.snapshots {
            SnapshotSpec::Times(t) => json!({ "times": t }),
            SnapshotSpec::GammaTimes(g) => json!({ "gamma_times": g }),
        };
        let d = &self.drive;
        json!({
            "scenario": self.scenario,
            "space": { "cutoff": self.space.cutoff() },
            "params": {
                "model": p.model,
                "alpha": p.alpha,
                "xi": xi(p.xi),
                "gamma": p.gamma,
                "dt": p.dt,
                "t_final": p.t_final,
                "n_traj": p.n_traj,
                "master_seed": p.master_seed,
                "output_every": p.output_every,
            },
            "drive": {
                "omega0": d.omega0,
                "omega1": d.omega1,
                "omega2": d.omega2,
                "phi0": d.phi0,
                "phi1": d.phi1,
                "phi2": d.phi2,
                "eta": d.eta,
                "j_max": d.j_max,
            },
            "initial": initial,
            "target": target,
            "snapshots": snapshots,
            "steady": { "tol": self.steady.tol, "settle_time": self.steady.settle_time },
            "quench": { "relax_time": self.quench.relax_time },
            "output": {
                "dir": self.output.dir.to_string_lossy(),
                "formats": self.output.formats,
                "trajectories": self.output.trajectories,
            },
        })
    }
}
