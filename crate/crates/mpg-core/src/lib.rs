//! Exact policy optimization for tabular Markov potential games.
//!
//! The crate evaluates every policy-dependent quantity of an n-agent
//! discounted stochastic game by direct linear solves (no sampling), runs
//! four logit-space update schemes — gradient play and natural gradient play,
//! each plain or with log-barrier regularization — and certifies what the
//! runs do: exact NE-gaps via best-response MDP solves, greedy-mass and
//! exploration constants, gradient-domination checks, per-step ascent
//! certificates, and brute-force pure-equilibrium enumeration.
//!
//! All numeric code is generic over [`scalar::Real`] (`f64` or `f32`);
//! the `*64` aliases below are the default-precision entry points.

pub mod diagnostics;
pub mod dynamics;
pub mod eval;
pub mod game;
pub mod linalg;
pub mod policy;
pub mod scalar;

pub use diagnostics::{AscentReport, DiagnosticsRecord};
pub use dynamics::{Algorithm, EtaSpec, InitSpec, RunConfig, RunOutcome};
pub use scalar::Real;

/// Default-precision aliases.
pub type GameSpec64 = game::GameSpec<f64>;
pub type PolicyParams64 = policy::PolicyParams<f64>;
pub type PolicyTable64 = policy::PolicyTable<f64>;
pub type EvalBundle64 = eval::EvalBundle<f64>;
pub type TrajectoryRecord64 = dynamics::TrajectoryRecord<f64>;

/// Single-precision aliases.
pub type GameSpec32 = game::GameSpec<f32>;
pub type PolicyParams32 = policy::PolicyParams<f32>;
pub type PolicyTable32 = policy::PolicyTable<f32>;
