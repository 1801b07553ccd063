//! Softmax policy parameterization. Parameters are the source of truth;
//! probability tables are always derived from them (or constructed directly
//! for deterministic profiles used by the diagnostics).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::GameSpec;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("non-finite parameter at agent {agent}, state {state}, action {action}")]
    NonFinite {
        agent: usize,
        state: usize,
        action: usize,
    },
    #[error("parameter shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("policy file parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Softmax logits `theta[agent][state][action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<S> {
    pub theta: Vec<Vec<Vec<S>>>,
}

/// Per-agent per-state probability rows `pi[agent][state][action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable<S> {
    pub pi: Vec<Vec<Vec<S>>>,
}

impl<S: Real> PolicyParams<S> {
    /// All-zero parameters of the right shape (the uniform policy).
    pub fn zeros(game: &GameSpec<S>) -> Self {
        PolicyParams {
            theta: game
                .actions
                .iter()
                .map(|acts| vec![vec![S::zero(); acts.len()]; game.n_states()])
                .collect(),
        }
    }

    /// Logits that place almost all mass on the given per-agent, per-state
    /// actions (`gap` nats above the rest).
    pub fn near_deterministic(game: &GameSpec<S>, choice: &[Vec<usize>], gap: S) -> Self {
        let mut params = Self::zeros(game);
        for (i, per_state) in choice.iter().enumerate() {
            for (s, &a) in per_state.iter().enumerate() {
                params.theta[i][s][a] = gap;
            }
        }
        params
    }

    pub fn shape_matches(&self, game: &GameSpec<S>) -> bool {
        self.theta.len() == game.n_agents
            && self
                .theta
                .iter()
                .zip(&game.actions)
                .all(|(per_state, acts)| {
                    per_state.len() == game.n_states()
                        && per_state.iter().all(|row| row.len() == acts.len())
                })
    }

    pub fn is_finite(&self) -> bool {
        self.theta
            .iter()
            .all(|a| a.iter().all(|s| s.iter().all(|v| v.is_finite())))
    }
}

impl<S: Real> PolicyTable<S> {
    /// Point-mass rows for a deterministic joint profile
    /// (`choice[agent][state]` is the played action).
    pub fn deterministic(game: &GameSpec<S>, choice: &[Vec<usize>]) -> Self {
        let pi = choice
            .iter()
            .enumerate()
            .map(|(i, per_state)| {
                per_state
                    .iter()
                    .map(|&a| {
                        let mut row = vec![S::zero(); game.actions[i].len()];
                        row[a] = S::one();
                        row
                    })
                    .collect()
            })
            .collect();
        PolicyTable { pi }
    }

    /// Replaces one agent's rows, leaving the others untouched.
    pub fn with_agent_rows(&self, agent: usize, rows: Vec<Vec<S>>) -> Self {
        let mut out = self.clone();
        out.pi[agent] = rows;
        out
    }

    pub fn min_entry(&self) -> S {
        self.pi
            .iter()
            .flatten()
            .flatten()
            .fold(S::infinity(), |m, &v| m.min(v))
    }

    /// Probability of agent `i` playing `a` in state `s`.
    pub fn prob(&self, i: usize, s: usize, a: usize) -> S {
        self.pi[i][s][a]
    }

    /// Product over agents other than `i` for the given joint action.
    pub fn others_prob(&self, i: usize, s: usize, per_agent: &[usize]) -> S {
        let mut p = S::one();
        for (j, &a) in per_agent.iter().enumerate() {
            if j != i {
                p *= self.pi[j][s][a];
            }
        }
        p
    }
}

/// Softmax of the logits, stabilized by per-state max subtraction so rows
/// stay finite for any finite parameters.
pub fn softmax_policy<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
) -> Result<PolicyTable<S>, PolicyError> {
    if !params.shape_matches(game) {
        return Err(PolicyError::Shape(format!(
            "theta shape does not match game with {} agents, {} states",
            game.n_agents,
            game.n_states()
        )));
    }
    let mut pi = Vec::with_capacity(game.n_agents);
    for (i, per_state) in params.theta.iter().enumerate() {
        let mut agent_rows = Vec::with_capacity(per_state.len());
        for (s, row) in per_state.iter().enumerate() {
            for (a, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(PolicyError::NonFinite {
                        agent: i,
                        state: s,
                        action: a,
                    });
                }
            }
            let max = row.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
            let exps: Vec<S> = row.iter().map(|&v| (v - max).exp()).collect();
            let z: S = exps.iter().copied().sum();
            agent_rows.push(exps.into_iter().map(|e| e / z).collect());
        }
        pi.push(agent_rows);
    }
    Ok(PolicyTable { pi })
}

/// The all-zero parameters, i.e. the uniform random policy.
pub fn uniform_params<S: Real>(game: &GameSpec<S>) -> PolicyParams<S> {
    PolicyParams::zeros(game)
}

/// Joint probability of a flat joint action: the product of the per-agent
/// entries.
pub fn joint_action_prob<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    s: usize,
    flat: usize,
) -> Result<S, PolicyError> {
    let idx = game
        .joint_unflatten(flat)
        .map_err(|e| PolicyError::OutOfRange(e.to_string()))?;
    if s >= game.n_states() {
        return Err(PolicyError::OutOfRange(format!("state {s}")));
    }
    let mut p = S::one();
    for (i, &a) in idx.per_agent.iter().enumerate() {
        p *= table.pi[i][s][a];
    }
    Ok(p)
}

// ---------------------------------------------------------------------------
// Policy file format
// ---------------------------------------------------------------------------

/// On-disk policy schema. `theta` is authoritative; `pi` is included on save
/// for human inspection and ignored on load.
#[derive(Debug, Serialize, Deserialize)]
struct PolicyFile {
    theta: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pi: Option<Vec<Vec<Vec<f64>>>>,
}

pub fn load_policy<S: Real>(text: &str) -> Result<PolicyParams<S>, PolicyError> {
    let file: PolicyFile = serde_json::from_str(text)?;
    Ok(PolicyParams {
        theta: file
            .theta
            .iter()
            .map(|a| {
                a.iter()
                    .map(|s| s.iter().map(|&v| S::c(v)).collect())
                    .collect()
            })
            .collect(),
    })
}

pub fn save_policy<S: Real>(game: &GameSpec<S>, params: &PolicyParams<S>) -> String {
    let conv3 = |t: &Vec<Vec<Vec<S>>>| -> Vec<Vec<Vec<f64>>> {
        t.iter()
            .map(|a| {
                a.iter()
                    .map(|s| s.iter().map(|v| v.to_f64_lossy()).collect())
                    .collect()
            })
            .collect()
    };
    let pi = softmax_policy(game, params).ok().map(|t| conv3(&t.pi));
    let file = PolicyFile {
        theta: conv3(&params.theta),
        pi,
    };
    serde_json::to_string_pretty(&file).expect("policy serialization cannot fail")
}
