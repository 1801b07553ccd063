//! Tabular stochastic games and Markov potential games: representation,
//! validation, (de)serialization, and seeded generation of test games.
//!
//! Joint actions are flattened row-major with the LAST agent varying fastest;
//! the same order is used in game files.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Per-(state, joint action) tensor, indexed `[state][flat joint action]`.
pub type StageTensor<S> = Vec<Vec<S>>;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("game file parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("game validation failed: {0}")]
    Validation(String),
    #[error("action index {index} out of range for agent {agent} (|A|={len})")]
    ActionOutOfRange {
        agent: usize,
        index: usize,
        len: usize,
    },
    #[error("flat joint action {flat} out of range ({len} joint actions)")]
    FlatOutOfRange { flat: usize, len: usize },
}

/// A finite n-agent stochastic game with discounted rewards, plus an optional
/// potential tensor that makes it a Markov potential game.
#[derive(Debug, Clone)]
pub struct GameSpec<S> {
    pub n_agents: usize,
    pub states: Vec<String>,
    /// Per-agent action labels.
    pub actions: Vec<Vec<String>>,
    /// `transition[s][a][s']` = P(s'|s,a).
    pub transition: Vec<Vec<Vec<S>>>,
    /// Per-agent stage rewards `rewards[i][s][a]`.
    pub rewards: Vec<StageTensor<S>>,
    pub gamma: S,
    /// Initial state distribution.
    pub rho: Vec<S>,
    /// Stage potential, present for every MPG this library certifies.
    pub potential: Option<StageTensor<S>>,
    pub identical_interest: bool,
    /// Min/max of the potential tensor, recorded at construction.
    pub phi_min: Option<S>,
    pub phi_max: Option<S>,
}

/// Per-agent action indices together with the flattened scalar index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointActionIndex {
    pub per_agent: Vec<usize>,
    pub flat: usize,
}

/// Outcome of one validation check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Report produced by [`validate_game`]: individual invariant checks plus the
/// exploration bound and advisory notes.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `max_s 1/((1-gamma) rho(s))` when rho is fully supported, else `None`
    /// (the exploration constant cannot be bounded from rho alone).
    pub m_bound: Option<f64>,
    /// Minimum of the discounted visitation distribution at the uniform
    /// policy; a positive value is a proxy for exploration sufficiency.
    pub uniform_visitation_min: Option<f64>,
    pub advice: Vec<String>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl<S: Real> GameSpec<S> {
    /// Validates the tuple and normalizes it: for identical-interest games
    /// without an explicit potential, the shared reward becomes the potential.
    pub fn new(
        states: Vec<String>,
        actions: Vec<Vec<String>>,
        transition: Vec<Vec<Vec<S>>>,
        rewards: Vec<StageTensor<S>>,
        gamma: S,
        rho: Vec<S>,
        potential: Option<StageTensor<S>>,
        identical_interest: bool,
    ) -> Result<Self, GameError> {
        let mut game = GameSpec {
            n_agents: rewards.len(),
            states,
            actions,
            transition,
            rewards,
            gamma,
            rho,
            potential,
            identical_interest,
            phi_min: None,
            phi_max: None,
        };
        if game.identical_interest && game.potential.is_none() {
            game.potential = Some(game.rewards[0].clone());
        }
        if let Some(phi) = &game.potential {
            let mut lo = S::infinity();
            let mut hi = S::neg_infinity();
            for row in phi {
                for &v in row {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            game.phi_min = Some(lo);
            game.phi_max = Some(hi);
        }
        let report = validate_game(&game);
        if let Some(failed) = report.checks.iter().find(|c| !c.passed) {
            return Err(GameError::Validation(format!(
                "{}: {}",
                failed.name, failed.detail
            )));
        }
        Ok(game)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Sizes of the per-agent action sets.
    pub fn action_counts(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.len()).collect()
    }

    pub fn n_joint_actions(&self) -> usize {
        self.actions.iter().map(|a| a.len()).product()
    }

    pub fn max_action_count(&self) -> usize {
        self.actions.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    /// Flattens per-agent indices; the last agent varies fastest.
    pub fn joint_flatten(&self, per_agent: &[usize]) -> Result<JointActionIndex, GameError> {
        if per_agent.len() != self.n_agents {
            return Err(GameError::Validation(format!(
                "expected {} per-agent indices, got {}",
                self.n_agents,
                per_agent.len()
            )));
        }
        let mut flat = 0usize;
        for (agent, (&idx, acts)) in per_agent.iter().zip(&self.actions).enumerate() {
            if idx >= acts.len() {
                return Err(GameError::ActionOutOfRange {
                    agent,
                    index: idx,
                    len: acts.len(),
                });
            }
            flat = flat * acts.len() + idx;
        }
        Ok(JointActionIndex {
            per_agent: per_agent.to_vec(),
            flat,
        })
    }

    /// Inverse of [`GameSpec::joint_flatten`].
    pub fn joint_unflatten(&self, flat: usize) -> Result<JointActionIndex, GameError> {
        let total = self.n_joint_actions();
        if flat >= total {
            return Err(GameError::FlatOutOfRange { flat, len: total });
        }
        let mut per_agent = vec![0usize; self.n_agents];
        let mut rem = flat;
        for agent in (0..self.n_agents).rev() {
            let k = self.actions[agent].len();
            per_agent[agent] = rem % k;
            rem /= k;
        }
        Ok(JointActionIndex { per_agent, flat })
    }

    /// Iterates all joint actions in flat order, yielding per-agent indices.
    pub fn joint_actions(&self) -> impl Iterator<Item = JointActionIndex> + '_ {
        (0..self.n_joint_actions()).map(|flat| self.joint_unflatten(flat).expect("in range"))
    }

    /// Exploration bound `max_s 1/((1-gamma) rho(s))`; `None` when some state
    /// has zero initial mass.
    pub fn m_bound(&self) -> Option<S> {
        let one_minus_gamma = S::one() - self.gamma;
        let mut m = S::zero();
        for &r in &self.rho {
            if r <= S::zero() {
                return None;
            }
            m = m.max(S::one() / (one_minus_gamma * r));
        }
        Some(m)
    }

    pub fn phi_range(&self) -> Option<(S, S)> {
        match (self.phi_min, self.phi_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            _ => None,
        }
    }
}

/// Checks every type invariant and reports (rather than enforces) the
/// exploration-related quantities.
pub fn validate_game<S: Real>(game: &GameSpec<S>) -> ValidationReport {
    let mut checks = Vec::new();
    let mut advice = Vec::new();
    let eps = S::check_eps();
    let n_states = game.states.len();
    let n_joint = game.n_joint_actions();

    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    };

    push(
        "agents",
        game.n_agents >= 1 && game.actions.len() == game.n_agents,
        format!(
            "{} agents, {} action sets",
            game.n_agents,
            game.actions.len()
        ),
    );
    push(
        "gamma_range",
        game.gamma >= S::zero() && game.gamma < S::one(),
        format!("gamma = {}", game.gamma),
    );

    let shapes_ok = game.transition.len() == n_states
        && game
            .transition
            .iter()
            .all(|per_a| per_a.len() == n_joint && per_a.iter().all(|row| row.len() == n_states))
        && game
            .rewards
            .iter()
            .all(|r| r.len() == n_states && r.iter().all(|row| row.len() == n_joint))
        && game.rho.len() == n_states
        && game.potential.as_ref().map_or(true, |phi| {
            phi.len() == n_states && phi.iter().all(|row| row.len() == n_joint)
        });
    push(
        "tensor_shapes",
        shapes_ok,
        format!("|S|={}, |A|={}", n_states, n_joint),
    );

    let mut finite = true;
    for per_a in &game.transition {
        for row in per_a {
            finite &= row.iter().all(|v| v.is_finite());
        }
    }
    for r in &game.rewards {
        for row in r {
            finite &= row.iter().all(|v| v.is_finite());
        }
    }
    finite &= game.rho.iter().all(|v| v.is_finite());
    push("finite_entries", finite, String::new());

    if shapes_ok {
        let mut stochastic = true;
        let mut worst = S::zero();
        for per_a in &game.transition {
            for row in per_a {
                if row.iter().any(|&p| p < S::zero()) {
                    stochastic = false;
                }
                let sum: S = row.iter().copied().sum();
                let err = (sum - S::one()).abs();
                worst = worst.max(err);
                if err > eps {
                    stochastic = false;
                }
            }
        }
        push(
            "transition_rows_stochastic",
            stochastic,
            format!("max |row sum - 1| = {:.3e}", worst.to_f64_lossy()),
        );

        let rho_sum: S = game.rho.iter().copied().sum();
        let rho_ok = game.rho.iter().all(|&p| p >= S::zero()) && (rho_sum - S::one()).abs() <= eps;
        push(
            "rho_distribution",
            rho_ok,
            format!(
                "|sum - 1| = {:.3e}",
                (rho_sum - S::one()).abs().to_f64_lossy()
            ),
        );
    }

    let rewards_all_equal = game
        .rewards
        .iter()
        .all(|r| tensors_equal(r, &game.rewards[0], S::zero()));
    if game.identical_interest {
        push(
            "identical_interest_consistent",
            rewards_all_equal,
            "flag set requires element-wise equal reward tensors".to_string(),
        );
    } else if rewards_all_equal && game.n_agents > 1 {
        advice.push(
            "all reward tensors are element-wise equal; consider setting identical_interest"
                .to_string(),
        );
    }

    let m_bound = game.m_bound().map(|m| m.to_f64_lossy());
    if m_bound.is_none() {
        advice.push(
            "rho assigns zero mass to some state; exploration bound is unbounded".to_string(),
        );
    }

    // Proxy for exploration sufficiency: visitation at the uniform policy.
    let uniform_visitation_min = if checks.iter().all(|c| c.passed) {
        let params = crate::policy::uniform_params(game);
        let table = crate::policy::softmax_policy(game, &params).ok();
        table
            .and_then(|t| crate::eval::visitation(game, &t).ok())
            .map(|d| {
                d.iter()
                    .fold(S::infinity(), |m, &v| m.min(v))
                    .to_f64_lossy()
            })
    } else {
        None
    };
    if let Some(dm) = uniform_visitation_min {
        if dm <= 0.0 {
            advice.push(format!(
                "a state has visitation {dm:.3e} at the uniform policy; exploration may be insufficient"
            ));
        }
    }

    ValidationReport {
        checks,
        m_bound,
        uniform_visitation_min,
        advice,
    }
}

fn tensors_equal<S: Real>(a: &StageTensor<S>, b: &StageTensor<S>, tol: S) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(ra, rb)| {
            ra.len() == rb.len() && ra.iter().zip(rb).all(|(&x, &y)| (x - y).abs() <= tol)
        })
}

// ---------------------------------------------------------------------------
// Game file format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct AgentFile {
    actions: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RewardsFile {
    Identical(Vec<Vec<f64>>),
    PerAgent(Vec<Vec<Vec<f64>>>),
}

/// On-disk JSON schema for a game.
#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    gamma: f64,
    rho: Vec<f64>,
    states: Vec<String>,
    agents: Vec<AgentFile>,
    /// `[state][flat joint action][next state]`, last agent fastest.
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: RewardsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    potential: Option<Vec<Vec<f64>>>,
}

/// Parses and validates a game file.
pub fn load_game<S: Real>(text: &str) -> Result<GameSpec<S>, GameError> {
    let file: GameFile = serde_json::from_str(text)?;
    let conv2 = |t: &Vec<Vec<f64>>| -> Vec<Vec<S>> {
        t.iter()
            .map(|r| r.iter().map(|&v| S::c(v)).collect())
            .collect()
    };
    let n_agents = file.agents.len();
    let (rewards, identical) = match &file.rewards {
        RewardsFile::Identical(t) => (vec![conv2(t); n_agents], true),
        RewardsFile::PerAgent(ts) => (ts.iter().map(conv2).collect::<Vec<_>>(), false),
    };
    GameSpec::new(
        file.states,
        file.agents.into_iter().map(|a| a.actions).collect(),
        file.transitions.iter().map(conv2).collect(),
        rewards,
        S::c(file.gamma),
        file.rho.iter().map(|&v| S::c(v)).collect(),
        file.potential.as_ref().map(conv2),
        identical,
    )
}

/// Serializes a game back to the file schema.
pub fn save_game<S: Real>(game: &GameSpec<S>) -> String {
    let conv2 = |t: &Vec<Vec<S>>| -> Vec<Vec<f64>> {
        t.iter()
            .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
            .collect()
    };
    let rewards = if game.identical_interest {
        RewardsFile::Identical(conv2(&game.rewards[0]))
    } else {
        RewardsFile::PerAgent(game.rewards.iter().map(conv2).collect())
    };
    // An implied potential (identical-interest default) is not re-emitted.
    let potential = match (&game.potential, game.identical_interest) {
        (Some(phi), true) if tensors_equal(phi, &game.rewards[0], S::zero()) => None,
        (p, _) => p.as_ref().map(conv2),
    };
    let file = GameFile {
        gamma: game.gamma.to_f64_lossy(),
        rho: game.rho.iter().map(|v| v.to_f64_lossy()).collect(),
        states: game.states.clone(),
        agents: game
            .actions
            .iter()
            .map(|a| AgentFile { actions: a.clone() })
            .collect(),
        transitions: game.transition.iter().map(conv2).collect(),
        rewards,
        potential,
    };
    serde_json::to_string_pretty(&file).expect("game serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Generators and built-in games
// ---------------------------------------------------------------------------

/// Seeded identical-interest game with fully supported transitions and
/// initial distribution; rewards are uniform in [0,1] and the potential is
/// the shared reward.
pub fn random_identical_interest_game<S: Real>(
    seed: u64,
    n_agents: usize,
    n_states: usize,
    action_counts: &[usize],
    gamma: f64,
) -> GameSpec<S> {
    assert!(n_agents >= 1 && n_states >= 1);
    assert_eq!(action_counts.len(), n_agents);
    assert!(action_counts.iter().all(|&k| k >= 1));
    assert!((0.0..1.0).contains(&gamma));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_joint: usize = action_counts.iter().product();

    // Normalized positive draws keep every row fully supported.
    fn simplex_row<S: Real>(rng: &mut ChaCha8Rng, len: usize) -> Vec<S> {
        let raw: Vec<f64> = (0..len).map(|_| 0.1 + rng.random::<f64>()).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| S::c(v / sum)).collect()
    }

    let transition: Vec<Vec<Vec<S>>> = (0..n_states)
        .map(|_| {
            (0..n_joint)
                .map(|_| simplex_row(&mut rng, n_states))
                .collect()
        })
        .collect();
    let reward: StageTensor<S> = (0..n_states)
        .map(|_| (0..n_joint).map(|_| S::c(rng.random::<f64>())).collect())
        .collect();
    let rho = simplex_row(&mut rng, n_states);

    let states = (0..n_states).map(|s| format!("s{s}")).collect();
    let actions = action_counts
        .iter()
        .map(|&k| (0..k).map(|a| format!("a{a}")).collect())
        .collect();

    GameSpec::new(
        states,
        actions,
        transition,
        vec![reward; n_agents],
        S::c(gamma),
        rho,
        None,
        true,
    )
    .expect("generated game satisfies invariants by construction")
}

/// The built-in two-player identical-reward matrix game (one state, gamma=0,
/// action counts 3 and 2). Its unique pure Nash equilibrium is
/// (a1=3, a2=1) with value 0.2.
pub fn figure1_game<S: Real>() -> GameSpec<S> {
    let rewards: Vec<f64> = vec![-1.0, 0.14, 0.16, 0.15, 0.2, -1.0];
    let reward_tensor: StageTensor<S> = vec![rewards.iter().map(|&v| S::c(v)).collect()];
    GameSpec::new(
        vec!["s0".into()],
        vec![
            vec!["a1".into(), "a2".into(), "a3".into()],
            vec!["a1".into(), "a2".into()],
        ],
        vec![vec![vec![S::one()]; 6]],
        vec![reward_tensor; 2],
        S::zero(),
        vec![S::one()],
        None,
        true,
    )
    .expect("built-in game is valid")
}

/// Resolves a built-in game id. `figure1` is the two-player matrix game;
/// `example3` and `example8` are seeded identical-interest single-state games
/// with 3 and 8 agents.
pub fn builtin_game<S: Real>(id: &str) -> Option<GameSpec<S>> {
    match id {
        "figure1" => Some(figure1_game()),
        "example3" => Some(random_identical_interest_game(3, 3, 1, &[2, 2, 2], 0.0)),
        "example8" => Some(random_identical_interest_game(8, 8, 1, &[2; 8], 0.0)),
        _ => None,
    }
}
