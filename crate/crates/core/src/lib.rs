//! Simulation of the dissipative preparation of two-mode pair coherent states
//! of a trapped ion's motion.
//!
//! The state space is one two-level atom times two truncated harmonic modes,
//! `|s, n, m⟩` with `s ∈ {g, e}` and `0 ≤ n, m ≤ N`. The effective model is
//! `H = α(âb̂ − ξ)σ₊ + h.c.` with spontaneous decay `σ₋` at rate `Γ`; its
//! dark steady state is `|g⟩` times the pair coherent state `|ξ, q⟩`.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod observables;
pub mod scenario;
pub mod states;

pub use error::{Error, ErrorCategory, Result};
pub use hilbert::{
    AtomLevel, AtomOp, DensityOperator, Ladder, Mode, QuantumState, SpaceConfig, SparseOperator, StateVector,
};
pub use config::{parse_config, RunConfig, Scenario};
pub use scenario::{render_scenario, run_scenario, ScenarioOutput};
