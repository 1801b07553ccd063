//! Equilibrium and theory diagnostics: exact best responses and NE-gaps,
//! the policy-dependent Lojasiewicz quantities, brute-force pure-equilibrium
//! enumeration, potential-property validation, and per-step ascent
//! certificates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::Algorithm;
use crate::eval::{
    j_value, policy_gradient, potential_gradient, value_functions, EvalBundle, EvalError,
    PotentialEval,
};
use crate::game::GameSpec;
use crate::linalg::{solve, DMat};
use crate::policy::{softmax_policy, PolicyError, PolicyParams, PolicyTable};
use crate::scalar::Real;

/// Argmax tie tolerance used when collecting greedy actions for `c(theta)`.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Slack applied when asserting inequalities that are exact in real
/// arithmetic but carry linear-solve residuals in floating point.
pub const CERT_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("best-response policy iteration for agent {agent} did not stabilize after {iterations} rounds")]
    NoConvergence { agent: usize, iterations: usize },
    #[error("search space too large: {profiles:.3e} deterministic profiles exceeds the {limit:.0e} guard")]
    TooLarge { profiles: f64, limit: f64 },
    #[error("the game has no potential tensor")]
    MissingPotential,
}

// ---------------------------------------------------------------------------
// Shared per-iterate evaluation
// ---------------------------------------------------------------------------

/// Everything the diagnostics need about one iterate, computed once.
#[derive(Debug, Clone)]
pub struct IterEval<S> {
    pub table: PolicyTable<S>,
    pub bundle: EvalBundle<S>,
    pub pot: PotentialEval<S>,
}

impl<S: Real> IterEval<S> {
    pub fn compute(game: &GameSpec<S>, params: &PolicyParams<S>) -> Result<Self, EvalError> {
        let table = softmax_policy(game, params)?;
        let bundle = EvalBundle::compute(game, &table)?;
        let pot = PotentialEval::compute(game, &table)?;
        Ok(IterEval { table, bundle, pot })
    }
}

// ---------------------------------------------------------------------------
// Best response and NE-gap
// ---------------------------------------------------------------------------

/// Exact best response for one agent against the others' fixed policies:
/// value from the initial distribution plus an optimal deterministic policy.
///
/// The induced single-agent MDP is solved by policy iteration to exact
/// stability, so the result carries only linear-solve residual error.
pub fn best_response<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    i: usize,
) -> Result<(S, Vec<usize>), DiagnosticsError> {
    let n = game.n_states();
    let k = game.actions[i].len();

    // Induced rewards and transitions with the other agents integrated out.
    let mut r_tilde = vec![vec![S::zero(); k]; n];
    let mut p_tilde = vec![vec![vec![S::zero(); n]; k]; n];
    for s in 0..n {
        for idx in game.joint_actions() {
            let w = table.others_prob(i, s, &idx.per_agent);
            if w == S::zero() {
                continue;
            }
            let ai = idx.per_agent[i];
            r_tilde[s][ai] += w * game.rewards[i][s][idx.flat];
            for s2 in 0..n {
                p_tilde[s][ai][s2] += w * game.transition[s][idx.flat][s2];
            }
        }
    }

    let argmax = |row: &[S]| -> usize {
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    };

    let mut policy: Vec<usize> = (0..n).map(|s| argmax(&r_tilde[s])).collect();
    let max_rounds = 1000 + n * k;
    for _ in 0..max_rounds {
        // Evaluate the current deterministic policy.
        let mut a = DMat::zeros(n, n);
        for s in 0..n {
            for s2 in 0..n {
                a[(s, s2)] = if s == s2 { S::one() } else { S::zero() }
                    - game.gamma * p_tilde[s][policy[s]][s2];
            }
        }
        let rhs: Vec<S> = (0..n).map(|s| r_tilde[s][policy[s]]).collect();
        let v = solve(&a, &rhs).map_err(EvalError::from)?;

        // Greedy improvement; switch only on strict improvement so the
        // iteration terminates.
        let mut changed = false;
        for s in 0..n {
            let q = |ai: usize| -> S {
                let mut future = S::zero();
                for s2 in 0..n {
                    future += p_tilde[s][ai][s2] * v[s2];
                }
                r_tilde[s][ai] + game.gamma * future
            };
            let current = q(policy[s]);
            let mut best = policy[s];
            let mut best_q = current;
            for ai in 0..k {
                let qa = q(ai);
                if qa > best_q {
                    best_q = qa;
                    best = ai;
                }
            }
            if best != policy[s] && best_q > current {
                policy[s] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok((j_value(game, &v), policy));
        }
    }
    Err(DiagnosticsError::NoConvergence {
        agent: i,
        iterations: max_rounds,
    })
}

/// Per-agent and maximum NE-gap: how much each agent can gain by
/// best-responding to the others.
#[derive(Debug, Clone)]
pub struct NeGap<S> {
    pub per_agent: Vec<S>,
    pub max: S,
}

pub fn ne_gap<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
) -> Result<NeGap<S>, DiagnosticsError> {
    let mut per_agent = Vec::with_capacity(game.n_agents);
    for i in 0..game.n_agents {
        let (v, _, _) = value_functions(game, table, i)?;
        let current = j_value(game, &v);
        let (best, _) = best_response(game, table, i)?;
        per_agent.push(best - current);
    }
    let max = per_agent.iter().fold(S::neg_infinity(), |m, &g| m.max(g));
    Ok(NeGap { per_agent, max })
}

// ---------------------------------------------------------------------------
// Lojasiewicz quantities
// ---------------------------------------------------------------------------

fn c_from_qbar<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    qbar: &[Vec<Vec<S>>],
    tie_tol: S,
) -> (S, Vec<S>) {
    let mut per_agent = Vec::with_capacity(game.n_agents);
    for i in 0..game.n_agents {
        let mut c_i = S::infinity();
        for s in 0..game.n_states() {
            let row = &qbar[i][s];
            let top = row.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
            let mass: S = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v >= top - tie_tol)
                .map(|(a, _)| table.pi[i][s][a])
                .sum();
            c_i = c_i.min(mass);
        }
        per_agent.push(c_i);
    }
    let c = per_agent.iter().fold(S::infinity(), |m, &v| m.min(v));
    (c, per_agent)
}

/// Greedy-action probability mass `c(theta)`: for each agent, the minimum
/// over states of the policy mass on argmax actions of its averaged
/// Q-function; the scalar value is the minimum over agents.
pub fn c_theta<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    tie_tol: S,
) -> Result<(S, Vec<S>), DiagnosticsError> {
    let bundle = EvalBundle::compute(game, table)?;
    Ok(c_from_qbar(game, table, &bundle.qbar, tie_tol))
}

/// Exploration constant of the current policy: `max_s 1/d(s)`.
pub fn m_theta<S: Real>(game: &GameSpec<S>, table: &PolicyTable<S>) -> Result<S, DiagnosticsError> {
    let d = crate::eval::visitation(game, table)?;
    Ok(d.iter().fold(S::zero(), |m, &v| m.max(S::one() / v)))
}

/// One agent's gradient-domination check: `lhs` is the agent's NE-gap, `rhs`
/// is `sqrt(|A_i|) M(theta) / c_i(theta) * ||grad_i||_2`.
#[derive(Debug, Clone, Serialize)]
pub struct LojCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn loj_from_parts<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    bundle: &EvalBundle<S>,
    gaps: &[S],
    c_per_agent: &[S],
    m: S,
) -> Vec<LojCheck> {
    (0..game.n_agents)
        .map(|i| {
            let g = policy_gradient(game, table, bundle, i);
            let norm_sq: S = g.iter().flatten().map(|&v| v * v).sum();
            let k = S::c(game.actions[i].len() as f64);
            let rhs = k.sqrt() * m / c_per_agent[i] * norm_sq.sqrt();
            let lhs = gaps[i];
            LojCheck {
                lhs: lhs.to_f64_lossy(),
                rhs: rhs.to_f64_lossy(),
                holds: lhs.to_f64_lossy() <= rhs.to_f64_lossy() + CERT_SLACK,
            }
        })
        .collect()
}

/// Evaluates the per-agent gradient-domination inequality at one policy.
pub fn lojasiewicz_check<S: Real>(
    game: &GameSpec<S>,
    params: &PolicyParams<S>,
) -> Result<Vec<LojCheck>, DiagnosticsError> {
    let table = softmax_policy(game, params)?;
    let bundle = EvalBundle::compute(game, &table)?;
    let gaps = ne_gap(game, &table)?;
    let (_, c_per_agent) = c_from_qbar(game, &table, &bundle.qbar, S::c(DEFAULT_TIE_TOL));
    let m = bundle.d.iter().fold(S::zero(), |m, &v| m.max(S::one() / v));
    Ok(loj_from_parts(
        game,
        &table,
        &bundle,
        &gaps.per_agent,
        &c_per_agent,
        m,
    ))
}

// ---------------------------------------------------------------------------
// Per-iterate diagnostics record
// ---------------------------------------------------------------------------

/// Everything recorded about one iterate of a run.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRecord {
    pub ne_gap_per_agent: Vec<f64>,
    pub ne_gap_max: f64,
    pub c_theta: f64,
    pub c_per_agent: Vec<f64>,
    pub m_theta: f64,
    /// 2-norm of the full potential gradient (stacked over agents).
    pub grad_norm: f64,
    pub phi: f64,
    pub phi_reg: f64,
    pub lojasiewicz: Vec<LojCheck>,
    pub min_policy_entry: f64,
    pub min_policy_per_agent: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn compute<S: Real>(
        game: &GameSpec<S>,
        evals: &IterEval<S>,
        lambda: f64,
    ) -> Result<Self, DiagnosticsError> {
        let table = &evals.table;
        let bundle = &evals.bundle;
        let gaps = ne_gap(game, table)?;
        let (c, c_per_agent) = c_from_qbar(game, table, &bundle.qbar, S::c(DEFAULT_TIE_TOL));
        let m = bundle
            .d
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(S::one() / v));
        let mut grad_sq = S::zero();
        for i in 0..game.n_agents {
            for row in potential_gradient(game, table, &bundle.d, &evals.pot, i) {
                for v in row {
                    grad_sq += v * v;
                }
            }
        }
        let phi = evals.pot.phi;
        let phi_reg = if lambda == 0.0 {
            phi
        } else {
            let log_sum: S = table.pi.iter().flatten().flatten().map(|p| p.ln()).sum();
            phi + S::c(lambda) * log_sum
        };
        let lojasiewicz = loj_from_parts(game, table, bundle, &gaps.per_agent, &c_per_agent, m);
        let min_policy_per_agent: Vec<f64> = table
            .pi
            .iter()
            .map(|rows| {
                rows.iter()
                    .flatten()
                    .fold(S::infinity(), |acc, &p| acc.min(p))
                    .to_f64_lossy()
            })
            .collect();
        Ok(DiagnosticsRecord {
            ne_gap_per_agent: gaps.per_agent.iter().map(|g| g.to_f64_lossy()).collect(),
            ne_gap_max: gaps.max.to_f64_lossy(),
            c_theta: c.to_f64_lossy(),
            c_per_agent: c_per_agent.iter().map(|v| v.to_f64_lossy()).collect(),
            m_theta: m.to_f64_lossy(),
            grad_norm: grad_sq.sqrt().to_f64_lossy(),
            phi: phi.to_f64_lossy(),
            phi_reg: phi_reg.to_f64_lossy(),
            lojasiewicz,
            min_policy_entry: table.min_entry().to_f64_lossy(),
            min_policy_per_agent,
        })
    }

    pub fn is_finite(&self) -> bool {
        let mut vals = vec![
            self.ne_gap_max,
            self.c_theta,
            self.m_theta,
            self.grad_norm,
            self.phi,
            self.phi_reg,
            self.min_policy_entry,
        ];
        vals.extend(&self.ne_gap_per_agent);
        vals.extend(&self.c_per_agent);
        vals.extend(&self.min_policy_per_agent);
        vals.extend(self.lojasiewicz.iter().flat_map(|l| [l.lhs, l.rhs]));
        vals.iter().all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------
// Brute-force pure equilibria
// ---------------------------------------------------------------------------

/// A deterministic joint profile certified as a pure Nash equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct PureNe {
    /// `actions[agent][state]` is the played action index.
    pub actions: Vec<Vec<usize>>,
    /// Per-agent values from the initial distribution.
    pub values: Vec<f64>,
}

/// Enumerates all deterministic joint policies and keeps those where no
/// agent's best response improves on its current value (within the solver
/// tolerance). Guarded to at most 10^6 profiles.
pub fn brute_force_pure_ne<S: Real>(game: &GameSpec<S>) -> Result<Vec<PureNe>, DiagnosticsError> {
    const LIMIT: f64 = 1e6;
    let n_states = game.n_states();
    let profile_count: f64 = game
        .actions
        .iter()
        .map(|a| (a.len() as f64).powi(n_states as i32))
        .product();
    if profile_count > LIMIT {
        return Err(DiagnosticsError::TooLarge {
            profiles: profile_count,
            limit: LIMIT,
        });
    }

    let per_agent_counts: Vec<usize> = game
        .actions
        .iter()
        .map(|a| a.len().pow(n_states as u32))
        .collect();
    let decode = |agent: usize, mut code: usize| -> Vec<usize> {
        let k = game.actions[agent].len();
        let mut per_state = vec![0usize; n_states];
        for slot in per_state.iter_mut() {
            *slot = code % k;
            code /= k;
        }
        per_state
    };

    let tol = S::c(CERT_SLACK).max(S::check_eps());
    let mut found = Vec::new();
    let mut codes = vec![0usize; game.n_agents];
    loop {
        let choice: Vec<Vec<usize>> = codes
            .iter()
            .enumerate()
            .map(|(i, &code)| decode(i, code))
            .collect();
        let table = PolicyTable::deterministic(game, &choice);
        let mut is_ne = true;
        let mut values = Vec::with_capacity(game.n_agents);
        for i in 0..game.n_agents {
            let (v, _, _) = value_functions(game, &table, i)?;
            let current = j_value(game, &v);
            values.push(current.to_f64_lossy());
            let (best, _) = best_response(game, &table, i)?;
            if best - current > tol {
                is_ne = false;
                break;
            }
        }
        if is_ne {
            found.push(PureNe {
                actions: choice,
                values,
            });
        }

        // odometer over per-agent policy codes
        let mut pos = game.n_agents;
        loop {
            if pos == 0 {
                return Ok(found);
            }
            pos -= 1;
            codes[pos] += 1;
            if codes[pos] < per_agent_counts[pos] {
                break;
            }
            codes[pos] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Potential-property validation
// ---------------------------------------------------------------------------

/// Result of sampling-based validation of the potential property.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialPropertyReport {
    pub checks_run: usize,
    pub max_violation: f64,
    pub passed: bool,
}

/// Tolerance for the potential property check.
pub const POTENTIAL_PROPERTY_TOL: f64 = 1e-8;

fn potential_pair_violation<S: Real>(
    game: &GameSpec<S>,
    i: usize,
    base: &PolicyTable<S>,
    deviated: &PolicyTable<S>,
) -> Result<S, DiagnosticsError> {
    let (v_base, _, _) = value_functions(game, base, i)?;
    let (v_dev, _, _) = value_functions(game, deviated, i)?;
    let p_base = PotentialEval::compute(game, base)?;
    let p_dev = PotentialEval::compute(game, deviated)?;
    let mut worst = S::zero();
    for s in 0..game.n_states() {
        let lhs = v_dev[s] - v_base[s];
        let rhs = p_dev.v[s] - p_base.v[s];
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Checks the defining property of the potential on random unilateral
/// deviations plus (when the profile space is small) all deterministic
/// unilateral-deviation pairs. Per-initial-state value differences of the
/// deviating agent must match the potential-value differences.
pub fn validate_potential_property<S: Real>(
    game: &GameSpec<S>,
    samples: usize,
    seed: u64,
) -> Result<PotentialPropertyReport, DiagnosticsError> {
    if game.potential.is_none() {
        return Err(DiagnosticsError::MissingPotential);
    }
    let mut checks_run = 0usize;
    let mut worst = S::zero();

    // Random softmax deviations.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let i = rng.random_range(0..game.n_agents);
        let mut theta = PolicyParams::<S>::zeros(game);
        for a in theta.theta.iter_mut() {
            for row in a.iter_mut() {
                for v in row.iter_mut() {
                    *v = S::c(rng.random_range(-2.0..2.0));
                }
            }
        }
        let base = softmax_policy(game, &theta)?;
        let mut theta_dev = theta.clone();
        for row in theta_dev.theta[i].iter_mut() {
            for v in row.iter_mut() {
                *v = S::c(rng.random_range(-2.0..2.0));
            }
        }
        let deviated = softmax_policy(game, &theta_dev)?;
        worst = worst.max(potential_pair_violation(game, i, &base, &deviated)?);
        checks_run += 1;
    }

    // Exhaustive deterministic unilateral deviations on small games.
    let n_states = game.n_states();
    let profile_count: f64 = game
        .actions
        .iter()
        .map(|a| (a.len() as f64).powi(n_states as i32))
        .product();
    let deviations_per_profile: f64 = game
        .actions
        .iter()
        .map(|a| (a.len() as f64).powi(n_states as i32))
        .sum();
    if profile_count * deviations_per_profile <= 20_000.0 {
        let per_agent_counts: Vec<usize> = game
            .actions
            .iter()
            .map(|a| a.len().pow(n_states as u32))
            .collect();
        let decode = |agent: usize, mut code: usize| -> Vec<usize> {
            let k = game.actions[agent].len();
            (0..n_states)
                .map(|_| {
                    let a = code % k;
                    code /= k;
                    a
                })
                .collect()
        };
        let mut codes = vec![0usize; game.n_agents];
        'profiles: loop {
            let choice: Vec<Vec<usize>> = codes
                .iter()
                .enumerate()
                .map(|(i, &code)| decode(i, code))
                .collect();
            let base = PolicyTable::deterministic(game, &choice);
            for i in 0..game.n_agents {
                for alt_code in 0..per_agent_counts[i] {
                    if alt_code == codes[i] {
                        continue;
                    }
                    let mut alt_choice = choice.clone();
                    alt_choice[i] = decode(i, alt_code);
                    let deviated = PolicyTable::deterministic(game, &alt_choice);
                    worst = worst.max(potential_pair_violation(game, i, &base, &deviated)?);
                    checks_run += 1;
                }
            }
            let mut pos = game.n_agents;
            loop {
                if pos == 0 {
                    break 'profiles;
                }
                pos -= 1;
                codes[pos] += 1;
                if codes[pos] < per_agent_counts[pos] {
                    break;
                }
                codes[pos] = 0;
            }
        }
    }

    let max_violation = worst.to_f64_lossy();
    Ok(PotentialPropertyReport {
        checks_run,
        max_violation,
        passed: max_violation <= POTENTIAL_PROPERTY_TOL,
    })
}

// ---------------------------------------------------------------------------
// Ascent certificates
// ---------------------------------------------------------------------------

/// Certificate data for one step of a scheme: the actual potential change,
/// the scheme-specific lower bound, and the auxiliary ranges the proofs
/// constrain.
#[derive(Debug, Clone, Serialize)]
pub struct AscentReport {
    pub delta_phi: f64,
    /// Change of the regularized potential; equals `delta_phi` when
    /// lambda = 0.
    pub delta_phi_reg: f64,
    /// Scheme-specific lower bound on the (regularized) potential change;
    /// `None` where no exploration bound is available.
    pub bound: Option<f64>,
    pub min_z: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Actual change fell below the bound by more than the certification
    /// slack.
    pub violation: bool,
}

fn reg_potential_of<S: Real>(table: &PolicyTable<S>, phi: S, lambda: f64) -> S {
    if lambda == 0.0 {
        return phi;
    }
    let log_sum: S = table.pi.iter().flatten().flatten().map(|p| p.ln()).sum();
    phi + S::c(lambda) * log_sum
}

/// Certificate for the transition `before -> after`, reusing precomputed
/// evaluations.
pub(crate) fn ascent_check_with<S: Real>(
    game: &GameSpec<S>,
    before: &IterEval<S>,
    after: &IterEval<S>,
    algorithm: Algorithm,
    eta: f64,
    lambda: f64,
) -> AscentReport {
    let eta_s = S::c(eta);
    let lambda_s = S::c(lambda);
    let inv = S::one() / (S::one() - game.gamma);
    let barrier = lambda > 0.0
        && matches!(
            algorithm,
            Algorithm::GpLogBarrier | Algorithm::NpgLogBarrier
        );

    let delta_phi = after.pot.phi - before.pot.phi;
    let delta_phi_reg = reg_potential_of(&after.table, after.pot.phi, lambda)
        - reg_potential_of(&before.table, before.pot.phi, lambda);

    // f, Z, and the policy-ratio deviations, all on the before iterate.
    let mut min_z = S::infinity();
    let mut f_min = S::infinity();
    let mut f_max = S::neg_infinity();
    let mut delta_min = S::infinity();
    let mut delta_max = S::neg_infinity();
    let mut weighted_delta_sq = S::zero();
    let mut npg_bound_sum = S::zero();
    for i in 0..game.n_agents {
        let k = S::c(game.actions[i].len() as f64);
        for s in 0..game.n_states() {
            let d0 = before.bundle.d[s];
            let mut z = S::zero();
            for a in 0..game.actions[i].len() {
                let pi0 = before.table.pi[i][s][a];
                if pi0 == S::zero() {
                    continue;
                }
                let mut f = inv * before.pot.abar[i][s][a];
                if barrier {
                    f = f + lambda_s / (d0 * pi0) - lambda_s * k / d0;
                }
                f_min = f_min.min(f);
                f_max = f_max.max(f);
                z += pi0 * (eta_s * f).exp();
                let ratio = after.table.pi[i][s][a] / pi0;
                let dev = ratio - S::one();
                delta_min = delta_min.min(dev);
                delta_max = delta_max.max(dev);
                weighted_delta_sq += d0 * pi0 * dev * dev;
            }
            min_z = min_z.min(z);
            npg_bound_sum += after.bundle.d[s] * z.ln();
        }
    }

    let bound: Option<f64> = match algorithm {
        Algorithm::Gp | Algorithm::GpLogBarrier => {
            let mut grad_sq = S::zero();
            for i in 0..game.n_agents {
                let g = potential_gradient(game, &before.table, &before.bundle.d, &before.pot, i);
                let kk = S::c(game.actions[i].len() as f64);
                for (s, row) in g.iter().enumerate() {
                    for (a, &gv) in row.iter().enumerate() {
                        let v = if barrier {
                            gv + lambda_s - lambda_s * kk * before.table.pi[i][s][a]
                        } else {
                            gv
                        };
                        grad_sq += v * v;
                    }
                }
            }
            Some((S::c(eta / 2.0) * grad_sq).to_f64_lossy())
        }
        Algorithm::Npg => Some((npg_bound_sum / eta_s).to_f64_lossy()),
        Algorithm::NpgLogBarrier => game.m_bound().map(|m| {
            let n = S::c(game.n_agents as f64);
            let amax = S::c(game.max_action_count() as f64);
            let coeff = S::c(1.0 / (2.0 * eta))
                - S::c(4.0) * lambda_s * amax * m * m
                - S::c(4.0) * m * inv * inv
                - S::c(3.0) * n * m * inv * inv * inv;
            (coeff * weighted_delta_sq).to_f64_lossy()
        }),
    };

    let actual = match algorithm {
        Algorithm::Gp | Algorithm::Npg => delta_phi.to_f64_lossy(),
        Algorithm::GpLogBarrier | Algorithm::NpgLogBarrier => delta_phi_reg.to_f64_lossy(),
    };
    let violation = bound.map_or(false, |b| actual < b - CERT_SLACK);

    AscentReport {
        delta_phi: delta_phi.to_f64_lossy(),
        delta_phi_reg: delta_phi_reg.to_f64_lossy(),
        bound,
        min_z: min_z.to_f64_lossy(),
        delta_min: delta_min.to_f64_lossy(),
        delta_max: delta_max.to_f64_lossy(),
        f_min: f_min.to_f64_lossy(),
        f_max: f_max.to_f64_lossy(),
        violation,
    }
}

/// Certificate for consecutive iterates of the named scheme.
pub fn ascent_check<S: Real>(
    game: &GameSpec<S>,
    params_before: &PolicyParams<S>,
    params_after: &PolicyParams<S>,
    algorithm: Algorithm,
    eta: f64,
    lambda: f64,
) -> Result<AscentReport, DiagnosticsError> {
    let before = IterEval::compute(game, params_before)?;
    let after = IterEval::compute(game, params_after)?;
    Ok(ascent_check_with(
        game, &before, &after, algorithm, eta, lambda,
    ))
}
