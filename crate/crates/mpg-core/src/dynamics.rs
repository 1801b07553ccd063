//! The four update schemes (gradient play and natural gradient play, each
//! with and without log-barrier regularization), theory-prescribed stepsizes,
//! and the trajectory runner.
//!
//! All schemes update the logits directly. The natural-gradient schemes add
//! the closed-form exponent to theta and rely on softmax shift invariance, so
//! one parameter representation serves all four.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{ascent_check_with, AscentReport, DiagnosticsRecord, IterEval};
use crate::eval::{policy_gradient, regularized_gradient, EvalBundle, EvalError};
use crate::game::GameSpec;
use crate::policy::{softmax_policy, uniform_params, PolicyError, PolicyParams};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("run config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("non-finite parameters produced by {algorithm} step")]
    NonFinite { algorithm: Algorithm },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "gp")]
    Gp,
    #[serde(rename = "npg")]
    Npg,
    #[serde(rename = "gp-logbar")]
    GpLogBarrier,
    #[serde(rename = "npg-logbar")]
    NpgLogBarrier,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Gp,
        Algorithm::Npg,
        Algorithm::GpLogBarrier,
        Algorithm::NpgLogBarrier,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::Gp => "gp",
            Algorithm::Npg => "npg",
            Algorithm::GpLogBarrier => "gp-logbar",
            Algorithm::NpgLogBarrier => "npg-logbar",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// Stepsize: an explicit value or the theory-prescribed one for the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSpec {
    Value(f64),
    Theory,
}

/// Initial parameters: uniform (all-zero logits) or explicit.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Uniform,
    Theta(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub eta: EtaSpec,
    pub lambda: f64,
    /// Number of update steps T.
    pub iterations: usize,
    /// Per-entry clip bound on the additive theta update of the regularized
    /// natural-gradient scheme.
    pub truncation: Option<f64>,
    pub record_every: usize,
    pub init: InitSpec,
    /// Attach per-step ascent certificates to recorded rows.
    pub record_ascent: bool,
}

impl RunConfig {
    /// Defaults: lambda 0, record every iteration, uniform init, truncation
    /// 1.0 for the regularized natural-gradient scheme and absent otherwise.
    pub fn new(algorithm: Algorithm, eta: EtaSpec, iterations: usize) -> Self {
        RunConfig {
            algorithm,
            eta,
            lambda: 0.0,
            iterations,
            truncation: if algorithm == Algorithm::NpgLogBarrier {
                Some(1.0)
            } else {
                None
            },
            record_every: 1,
            init: InitSpec::Uniform,
            record_ascent: false,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if let EtaSpec::Value(eta) = self.eta {
            if !(eta > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!(
                    "eta must be positive, got {eta}"
                )));
            }
        }
        if self.iterations < 1 {
            return Err(DynamicsError::InvalidConfig("T must be at least 1".into()));
        }
        if self.lambda < 0.0 {
            return Err(DynamicsError::InvalidConfig(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if let Some(t) = self.truncation {
            if !(t > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!(
                    "truncation must be positive, got {t}"
                )));
            }
        }
        if self.record_every == 0 {
            return Err(DynamicsError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Run-config file format
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EtaFile {
    Value(f64),
    Keyword(String),
}

/// On-disk run configuration. `init` is `"uniform"` or a path to a policy
/// file; `game` is the path of the game file to load.
#[derive(Debug, Deserialize)]
pub struct RunConfigFile {
    pub game: Option<String>,
    algorithm: Algorithm,
    eta: EtaFile,
    #[serde(default)]
    lambda: f64,
    #[serde(rename = "T")]
    iterations: usize,
    #[serde(default)]
    truncation: Option<f64>,
    #[serde(default)]
    record_every: Option<usize>,
    #[serde(default)]
    init: Option<String>,
    #[serde(default)]
    record_ascent: bool,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, DynamicsError> {
        Ok(serde_json::from_str(text)?)
    }

    /// True when the file left the recording cadence to the caller's default.
    pub fn record_every_unset(&self) -> bool {
        self.record_every.is_none()
    }

    /// `"uniform"` or absent means the uniform policy; anything else is a
    /// path the caller must resolve into explicit parameters.
    pub fn init_path(&self) -> Option<&str> {
        match self.init.as_deref() {
            None | Some("uniform") => None,
            Some(path) => Some(path),
        }
    }

    pub fn build(&self, init: InitSpec) -> Result<RunConfig, DynamicsError> {
        let eta = match &self.eta {
            EtaFile::Value(v) => EtaSpec::Value(*v),
            EtaFile::Keyword(k) if k == "theory" => EtaSpec::Theory,
            EtaFile::Keyword(k) => {
                return Err(DynamicsError::InvalidConfig(format!(
                    "eta must be a number or \"theory\", got \"{k}\""
                )))
            }
        };
        let truncation = match (self.truncation, self.algorithm) {
            (Some(t), _) => Some(t),
            (None, Algorithm::NpgLogBarrier) => Some(1.0),
            (None, _) => None,
        };
        let config = RunConfig {
            algorithm: self.algorithm,
            eta,
            lambda: self.lambda,
            iterations: self.iterations,
            truncation,
            record_every: self.record_every.unwrap_or(1),
            init,
            record_ascent: self.record_ascent,
        };
        config.validate()?;
        Ok(config)
    }
}

// ---------------------------------------------------------------------------
// Theory stepsizes
// ---------------------------------------------------------------------------

/// Theory-prescribed stepsizes and smoothness constants for one game and
/// regularization weight.
#[derive(Debug, Clone, Serialize)]
pub struct StepsizeReport {
    pub eta_gp: f64,
    /// `None` when the potential is constant (the scheme is unconstrained).
    pub eta_npg: Option<f64>,
    pub eta_gp_logbar: f64,
    /// `None` when no exploration bound is available (rho not fully
    /// supported and no override given).
    pub eta_npg_logbar: Option<f64>,
    /// Smoothness constant of the total potential.
    pub beta: f64,
    /// Smoothness constant of the regularized potential.
    pub beta_reg: f64,
    pub m_used: Option<f64>,
    pub phi_min: f64,
    pub phi_max: f64,
    pub lambda: f64,
}

/// Computes all four stepsizes from the game's measured potential range. `m`
/// overrides the exploration constant (default: the rho-based bound).
pub fn theory_stepsizes<S: Real>(
    game: &GameSpec<S>,
    lambda: f64,
    m: Option<f64>,
) -> Result<StepsizeReport, DynamicsError> {
    let (phi_min, phi_max) = game
        .phi_range()
        .ok_or(EvalError::MissingPotential)
        .map_err(DynamicsError::Eval)?;
    let phi_min = phi_min.to_f64_lossy();
    let phi_max = phi_max.to_f64_lossy();
    let n = game.n_agents as f64;
    let gamma = game.gamma.to_f64_lossy();
    let one_minus = 1.0 - gamma;
    let amax = game.max_action_count() as f64;

    let eta_gp = one_minus.powi(3) / (6.0 * n);
    let range = phi_max - phi_min;
    let eta_npg = (range > 0.0).then(|| one_minus.powi(2) / (2.0 * n * range));
    let eta_gp_logbar = one_minus.powi(3) / (6.0 * n + 2.0 * lambda * amax * one_minus.powi(3));

    let m_used = m.or_else(|| game.m_bound().map(|v| v.to_f64_lossy()));
    let eta_npg_logbar = m_used.map(|m| {
        let first = 1.0 / (15.0 * (1.0 / one_minus.powi(2) + lambda * amax * m));
        let second = 1.0
            / (4.0
                * (4.0 * lambda * amax * m * m
                    + 4.0 * m / one_minus.powi(2)
                    + 3.0 * n * m / one_minus.powi(3)));
        first.min(second)
    });

    let beta = 6.0 * n / one_minus.powi(3);
    Ok(StepsizeReport {
        eta_gp,
        eta_npg,
        eta_gp_logbar,
        eta_npg_logbar,
        beta,
        beta_reg: beta + 2.0 * lambda * amax,
        m_used,
        phi_min,
        phi_max,
        lambda,
    })
}

fn resolve_eta<S: Real>(game: &GameSpec<S>, config: &RunConfig) -> Result<f64, DynamicsError> {
    match config.eta {
        EtaSpec::Value(v) => Ok(v),
        EtaSpec::Theory => {
            let report = theory_stepsizes(game, config.lambda, None)?;
            match config.algorithm {
                Algorithm::Gp => Ok(report.eta_gp),
                Algorithm::GpLogBarrier => Ok(report.eta_gp_logbar),
                Algorithm::Npg => report.eta_npg.ok_or_else(|| {
                    DynamicsError::InvalidConfig(
                        "theory stepsize is unconstrained for a constant potential; give eta explicitly"
                            .into(),
                    )
                }),
                Algorithm::NpgLogBarrier => report.eta_npg_logbar.ok_or_else(|| {
                    DynamicsError::InvalidConfig(
                        "no exploration bound available (rho not fully supported); give eta explicitly"
                            .into(),
                    )
                }),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Update schemes
// ---------------------------------------------------------------------------

fn check_finite<S: Real>(
    params: PolicyParams<S>,
    algorithm: Algorithm,
) -> Result<PolicyParams<S>, DynamicsError> {
    if params.is_finite() {
        Ok(params)
    } else {
        Err(DynamicsError::NonFinite { algorithm })
    }
}

/// One step shared by all four schemes, reusing a precomputed evaluation.
pub(crate) fn step_with_eval<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
    table: &crate::policy::PolicyTable<S>,
    bundle: &EvalBundle<S>,
    algorithm: Algorithm,
    eta: S,
    lambda: S,
    trunc: Option<S>,
) -> Result<PolicyParams<S>, DynamicsError> {
    let mut next = params.clone();
    match algorithm {
        Algorithm::Gp | Algorithm::GpLogBarrier => {
            for i in 0..game.n_agents {
                let g = if algorithm == Algorithm::Gp {
                    policy_gradient(game, table, bundle, i)
                } else {
                    regularized_gradient(game, table, bundle, i, lambda)
                };
                for (s, row) in g.iter().enumerate() {
                    for (a, &gv) in row.iter().enumerate() {
                        next.theta[i][s][a] += eta * gv;
                    }
                }
            }
        }
        Algorithm::Npg | Algorithm::NpgLogBarrier => {
            let inv = S::one() / (S::one() - game.gamma);
            for i in 0..game.n_agents {
                let k = S::c(game.actions[i].len() as f64);
                for s in 0..game.n_states() {
                    for a in 0..game.actions[i].len() {
                        let mut f = inv * bundle.abar[i][s][a];
                        if algorithm == Algorithm::NpgLogBarrier && lambda > S::zero() {
                            f = f + lambda / (bundle.d[s] * table.pi[i][s][a])
                                - lambda * k / bundle.d[s];
                        }
                        let mut e = eta * f;
                        if let Some(bound) = trunc {
                            e = e.min(bound).max(-bound);
                        }
                        next.theta[i][s][a] += e;
                    }
                }
            }
        }
    }
    check_finite(next, algorithm)
}

fn step_fresh<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
    algorithm: Algorithm,
    eta: S,
    lambda: S,
    trunc: Option<S>,
) -> Result<PolicyParams<S>, DynamicsError> {
    let table = softmax_policy(game, params)?;
    let bundle = EvalBundle::compute(game, &table)?;
    step_with_eval(game, params, &table, &bundle, algorithm, eta, lambda, trunc)
}

/// Plain gradient play: `theta_i += eta * grad J_i`.
pub fn gradient_play_step<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
    eta: S,
) -> Result<PolicyParams<S>, DynamicsError> {
    step_fresh(game, params, Algorithm::Gp, eta, S::zero(), None)
}

/// Natural gradient play in logit space: `theta += eta * abar / (1-gamma)`,
/// whose induced policies follow the multiplicative-weights closed form.
pub fn npg_step<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
    eta: S,
) -> Result<PolicyParams<S>, DynamicsError> {
    step_fresh(game, params, Algorithm::Npg, eta, S::zero(), None)
}

/// Gradient play on the log-barrier regularized objective.
pub fn log_barrier_gp_step<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
    eta: S,
    lambda: S,
) -> Result<PolicyParams<S>, DynamicsError> {
    step_fresh(game, params, Algorithm::GpLogBarrier, eta, lambda, None)
}

/// Natural gradient play on the regularized objective. The additive logit
/// update is clipped entrywise to `[-trunc, trunc]` when a bound is given.
pub fn log_barrier_npg_step<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
    eta: S,
    lambda: S,
    trunc: Option<S>,
) -> Result<PolicyParams<S>, DynamicsError> {
    step_fresh(game, params, Algorithm::NpgLogBarrier, eta, lambda, trunc)
}

// ---------------------------------------------------------------------------
// Trajectory runner
// ---------------------------------------------------------------------------

/// One recorded iterate: diagnostics, plus the certificate for the step that
/// produced it when ascent recording is on.
#[derive(Debug, Clone)]
pub struct TrajectoryRow {
    pub iter: usize,
    pub diag: DiagnosticsRecord,
    pub ascent: Option<AscentReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    /// The run was cut short because a quantity became non-finite; the rows
    /// recorded before the failure are preserved.
    BlowUp {
        iteration: usize,
        detail: String,
    },
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord<S> {
    pub rows: Vec<TrajectoryRow>,
    pub final_params: PolicyParams<S>,
    pub eta_used: f64,
    pub outcome: RunOutcome,
}

impl<S> TrajectoryRecord<S> {
    pub fn completed(&self) -> bool {
        self.outcome == RunOutcome::Completed
    }
}

/// Executes T steps of the configured scheme, recording diagnostics at the
/// configured cadence (iteration 0 and the final iterate are always
/// recorded). Deterministic given the config.
pub fn run_trajectory<S: Real>(
    game: &GameSpec<S>,
    config: &RunConfig,
) -> Result<TrajectoryRecord<S>, DynamicsError> {
    config.validate()?;
    if game.potential.is_none() {
        return Err(DynamicsError::InvalidConfig(
            "trajectory diagnostics need a potential; the game has none".into(),
        ));
    }
    let eta_f64 = resolve_eta(game, config)?;
    let eta = S::c(eta_f64);
    let lambda = S::c(config.lambda);
    let trunc = config.truncation.map(S::c);

    let mut params = match &config.init {
        InitSpec::Uniform => uniform_params(game),
        InitSpec::Theta(theta) => {
            let p = PolicyParams {
                theta: theta
                    .iter()
                    .map(|a| {
                        a.iter()
                            .map(|s| s.iter().map(|&v| S::c(v)).collect())
                            .collect()
                    })
                    .collect(),
            };
            if !p.shape_matches(game) {
                return Err(DynamicsError::InvalidConfig(
                    "initial theta shape does not match the game".into(),
                ));
            }
            p
        }
    };

    let mut rows: Vec<TrajectoryRow> = Vec::new();
    let mut prev: Option<IterEval<S>> = None;
    let blow_up =
        |rows: Vec<TrajectoryRow>, params: PolicyParams<S>, iteration: usize, detail: String| {
            Ok(TrajectoryRecord {
                rows,
                final_params: params,
                eta_used: eta_f64,
                outcome: RunOutcome::BlowUp { iteration, detail },
            })
        };

    for t in 0..=config.iterations {
        let evals = match IterEval::compute(game, &params) {
            Ok(e) => e,
            Err(err) if t > 0 => return blow_up(rows, params, t, err.to_string()),
            Err(err) => return Err(err.into()),
        };

        if t % config.record_every == 0 || t == config.iterations {
            let diag = match DiagnosticsRecord::compute(game, &evals, config.lambda) {
                Ok(d) => d,
                Err(err) if t > 0 => return blow_up(rows, params, t, err.to_string()),
                Err(err) => return Err(err.into()),
            };
            let ascent = match (&prev, config.record_ascent && t > 0) {
                (Some(p), true) => Some(ascent_check_with(
                    game,
                    p,
                    &evals,
                    config.algorithm,
                    eta_f64,
                    config.lambda,
                )),
                _ => None,
            };
            if !diag.is_finite() {
                return blow_up(
                    rows,
                    params,
                    t,
                    "recorded diagnostics contain non-finite values".into(),
                );
            }
            rows.push(TrajectoryRow {
                iter: t,
                diag,
                ascent,
            });
        }
        if t == config.iterations {
            break;
        }

        let next = match step_with_eval(
            game,
            &params,
            &evals.table,
            &evals.bundle,
            config.algorithm,
            eta,
            lambda,
            trunc,
        ) {
            Ok(p) => p,
            Err(err) => return blow_up(rows, params, t + 1, err.to_string()),
        };
        prev = Some(evals);
        params = next;
    }

    Ok(TrajectoryRecord {
        rows,
        final_params: params,
        eta_used: eta_f64,
        outcome: RunOutcome::Completed,
    })
}
