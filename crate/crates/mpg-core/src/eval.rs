//! Exact evaluation of all policy-dependent quantities for a (game, policy)
//! pair: visitation, values, advantages, gradients, Fisher blocks, and
//! potentials. Everything is computed by direct dense linear solves; nothing
//! is sampled.

use thiserror::Error;

use crate::game::{GameSpec, StageTensor};
use crate::linalg::{pinv_sym, solve, DMat, LinAlgError};
use crate::policy::PolicyTable;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("linear solver failed: {0}")]
    Solver(#[from] LinAlgError),
    #[error("game has no potential tensor")]
    MissingPotential,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
}

/// Exact evaluation of one (game, policy) pair.
///
/// Indexing: `v[agent][state]`, `q`/`a` are `[agent][state][flat joint
/// action]`, `qbar`/`abar` are `[agent][state][own action]`.
#[derive(Debug, Clone)]
pub struct EvalBundle<S> {
    pub d: Vec<S>,
    pub v: Vec<Vec<S>>,
    pub q: Vec<StageTensor<S>>,
    pub a: Vec<StageTensor<S>>,
    pub qbar: Vec<Vec<Vec<S>>>,
    pub abar: Vec<Vec<Vec<S>>>,
}

/// Potential-side evaluation used by ascent certificates: state values of the
/// potential stage cost, their per-agent averaged advantages, and the total
/// potential from the initial distribution.
#[derive(Debug, Clone)]
pub struct PotentialEval<S> {
    pub v: Vec<S>,
    pub qbar: Vec<Vec<Vec<S>>>,
    pub abar: Vec<Vec<Vec<S>>>,
    pub phi: S,
}

/// Per-state Fisher information blocks `diag(pi) - pi pi^T` for one agent,
/// together with the visitation weights.
#[derive(Debug, Clone)]
pub struct FisherBlock<S> {
    pub per_state: Vec<DMat<S>>,
    pub weights: Vec<S>,
}

/// State-to-state transition matrix under the joint policy:
/// `P_pi(s'|s) = sum_a pi(a|s) P(s'|s,a)`.
fn policy_transition<S: Real>(game: &GameSpec<S>, table: &PolicyTable<S>) -> DMat<S> {
    let n = game.n_states();
    let mut p = DMat::zeros(n, n);
    for s in 0..n {
        for idx in game.joint_actions() {
            let mut w = S::one();
            for (i, &a) in idx.per_agent.iter().enumerate() {
                w *= table.pi[i][s][a];
            }
            if w == S::zero() {
                continue;
            }
            for s2 in 0..n {
                p[(s, s2)] += w * game.transition[s][idx.flat][s2];
            }
        }
    }
    p
}

/// Discounted state visitation distribution: the solution of
/// `(I - gamma P_pi^T) d = (1 - gamma) rho`.
pub fn visitation<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
) -> Result<Vec<S>, EvalError> {
    let n = game.n_states();
    let p = policy_transition(game, table);
    let mut a = DMat::zeros(n, n);
    for s in 0..n {
        for s2 in 0..n {
            a[(s, s2)] = if s == s2 { S::one() } else { S::zero() } - game.gamma * p[(s2, s)];
        }
    }
    let rhs: Vec<S> = game
        .rho
        .iter()
        .map(|&r| (S::one() - game.gamma) * r)
        .collect();
    Ok(solve(&a, &rhs)?)
}

/// State values for an arbitrary stage cost: solves `(I - gamma P_pi) V = c_bar`
/// with `c_bar(s) = sum_a pi(a|s) c(s,a)`.
fn stage_values<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    cost: &StageTensor<S>,
) -> Result<Vec<S>, EvalError> {
    let n = game.n_states();
    let p = policy_transition(game, table);
    let mut a = DMat::zeros(n, n);
    for s in 0..n {
        for s2 in 0..n {
            a[(s, s2)] = if s == s2 { S::one() } else { S::zero() } - game.gamma * p[(s, s2)];
        }
    }
    let mut cbar = vec![S::zero(); n];
    for s in 0..n {
        for idx in game.joint_actions() {
            let mut w = S::one();
            for (i, &ai) in idx.per_agent.iter().enumerate() {
                w *= table.pi[i][s][ai];
            }
            cbar[s] += w * cost[s][idx.flat];
        }
    }
    Ok(solve(&a, &cbar)?)
}

fn q_from_values<S: Real>(game: &GameSpec<S>, cost: &StageTensor<S>, v: &[S]) -> StageTensor<S> {
    let n = game.n_states();
    let n_joint = game.n_joint_actions();
    let mut q = vec![vec![S::zero(); n_joint]; n];
    for s in 0..n {
        for a in 0..n_joint {
            let mut future = S::zero();
            for s2 in 0..n {
                future += game.transition[s][a][s2] * v[s2];
            }
            q[s][a] = cost[s][a] + game.gamma * future;
        }
    }
    q
}

/// Marginalizes a per-(state, joint action) tensor over the other agents'
/// policies, yielding a per-(state, own action) tensor for agent `i`.
fn marginalize<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    i: usize,
    tensor: &StageTensor<S>,
) -> Vec<Vec<S>> {
    let n = game.n_states();
    let k = game.actions[i].len();
    let mut out = vec![vec![S::zero(); k]; n];
    for s in 0..n {
        for idx in game.joint_actions() {
            let w = table.others_prob(i, s, &idx.per_agent);
            out[s][idx.per_agent[i]] += w * tensor[s][idx.flat];
        }
    }
    out
}

/// `(V_i, Q_i, A_i)` for agent `i`, all by exact solves.
pub fn value_functions<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    i: usize,
) -> Result<(Vec<S>, StageTensor<S>, StageTensor<S>), EvalError> {
    let v = stage_values(game, table, &game.rewards[i])?;
    let q = q_from_values(game, &game.rewards[i], &v);
    let a = q
        .iter()
        .zip(&v)
        .map(|(row, &vs)| row.iter().map(|&qv| qv - vs).collect())
        .collect();
    Ok((v, q, a))
}

/// Averaged Q and advantage for agent `i`: the other agents' actions are
/// integrated out under their current policies. `abar` is marginalized from
/// `A_i` directly (so `abar = qbar - v` is a checkable identity, not a
/// definition).
pub fn averaged_functions<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    i: usize,
    q: &StageTensor<S>,
    a: &StageTensor<S>,
) -> (Vec<Vec<S>>, Vec<Vec<S>>) {
    (
        marginalize(game, table, i, q),
        marginalize(game, table, i, a),
    )
}

impl<S: Real> EvalBundle<S> {
    /// Debug view of the bundle as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        let v1 = |x: &Vec<S>| -> Vec<f64> { x.iter().map(|v| v.to_f64_lossy()).collect() };
        let v2 = |x: &Vec<Vec<S>>| -> Vec<Vec<f64>> { x.iter().map(&v1).collect() };
        let v3 = |x: &Vec<Vec<Vec<S>>>| -> Vec<Vec<Vec<f64>>> { x.iter().map(&v2).collect() };
        serde_json::json!({
            "d": v1(&self.d),
            "v": v2(&self.v),
            "q": v3(&self.q),
            "a": v3(&self.a),
            "qbar": v3(&self.qbar),
            "abar": v3(&self.abar),
        })
    }

    pub fn compute(game: &GameSpec<S>, table: &PolicyTable<S>) -> Result<Self, EvalError> {
        let d = visitation(game, table)?;
        let mut v = Vec::with_capacity(game.n_agents);
        let mut q = Vec::with_capacity(game.n_agents);
        let mut a = Vec::with_capacity(game.n_agents);
        let mut qbar = Vec::with_capacity(game.n_agents);
        let mut abar = Vec::with_capacity(game.n_agents);
        for i in 0..game.n_agents {
            let (vi, qi, ai) = value_functions(game, table, i)?;
            let (qb, ab) = averaged_functions(game, table, i, &qi, &ai);
            v.push(vi);
            q.push(qi);
            a.push(ai);
            qbar.push(qb);
            abar.push(ab);
        }
        Ok(EvalBundle {
            d,
            v,
            q,
            a,
            qbar,
            abar,
        })
    }
}

impl<S: Real> PotentialEval<S> {
    pub fn compute(game: &GameSpec<S>, table: &PolicyTable<S>) -> Result<Self, EvalError> {
        let phi_tensor = game.potential.as_ref().ok_or(EvalError::MissingPotential)?;
        let v = stage_values(game, table, phi_tensor)?;
        let q = q_from_values(game, phi_tensor, &v);
        let a: StageTensor<S> = q
            .iter()
            .zip(&v)
            .map(|(row, &vs)| row.iter().map(|&qv| qv - vs).collect())
            .collect();
        let mut qbar = Vec::with_capacity(game.n_agents);
        let mut abar = Vec::with_capacity(game.n_agents);
        for i in 0..game.n_agents {
            qbar.push(marginalize(game, table, i, &q));
            abar.push(marginalize(game, table, i, &a));
        }
        let phi = game.rho.iter().zip(&v).map(|(&r, &vs)| r * vs).sum();
        Ok(PotentialEval { v, qbar, abar, phi })
    }
}

/// Agent `i`'s total reward from the initial distribution.
pub fn j_value<S: Real>(game: &GameSpec<S>, v_i: &[S]) -> S {
    game.rho.iter().zip(v_i).map(|(&r, &v)| r * v).sum()
}

/// Total potential `Phi` from the initial distribution.
pub fn potential_value<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
) -> Result<S, EvalError> {
    let phi_tensor = game.potential.as_ref().ok_or(EvalError::MissingPotential)?;
    let v = stage_values(game, table, phi_tensor)?;
    Ok(j_value(game, &v))
}

/// Log-barrier regularized potential `Phi + lambda * sum log pi`. For
/// `lambda == 0` this is exactly `potential_value`.
pub fn regularized_potential<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    lambda: S,
) -> Result<S, EvalError> {
    let phi = potential_value(game, table)?;
    if lambda == S::zero() {
        return Ok(phi);
    }
    let mut log_sum = S::zero();
    for agent in &table.pi {
        for row in agent {
            for &p in row {
                log_sum += p.ln();
            }
        }
    }
    Ok(phi + lambda * log_sum)
}

/// Exact policy gradient of `J_i` with respect to agent `i`'s logits:
/// `d(s) pi_i(a_i|s) abar_i(s,a_i) / (1 - gamma)`.
pub fn policy_gradient<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    bundle: &EvalBundle<S>,
    i: usize,
) -> Vec<Vec<S>> {
    gradient_from_abar(game, table, &bundle.d, &bundle.abar[i], i)
}

/// Gradient of the total potential with respect to agent `i`'s logits; for an
/// exact MPG this coincides with [`policy_gradient`].
pub fn potential_gradient<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    d: &[S],
    pot: &PotentialEval<S>,
    i: usize,
) -> Vec<Vec<S>> {
    gradient_from_abar(game, table, d, &pot.abar[i], i)
}

fn gradient_from_abar<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    d: &[S],
    abar: &[Vec<S>],
    i: usize,
) -> Vec<Vec<S>> {
    let inv = S::one() / (S::one() - game.gamma);
    (0..game.n_states())
        .map(|s| {
            (0..game.actions[i].len())
                .map(|a| inv * d[s] * table.pi[i][s][a] * abar[s][a])
                .collect()
        })
        .collect()
}

/// Gradient of the log-barrier regularized objective: the unregularized
/// gradient plus `lambda - lambda |A_i| pi_i(a_i|s)` per entry. For
/// `lambda == 0` the result is exactly the unregularized gradient.
pub fn regularized_gradient<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    bundle: &EvalBundle<S>,
    i: usize,
    lambda: S,
) -> Vec<Vec<S>> {
    let mut g = policy_gradient(game, table, bundle, i);
    if lambda == S::zero() {
        return g;
    }
    let k = S::c(game.actions[i].len() as f64);
    for (s, row) in g.iter_mut().enumerate() {
        for (a, v) in row.iter_mut().enumerate() {
            *v = *v + lambda - lambda * k * table.pi[i][s][a];
        }
    }
    g
}

/// Per-state Fisher information blocks for agent `i`.
pub fn fisher_block<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    d: &[S],
    i: usize,
) -> FisherBlock<S> {
    let per_state = (0..game.n_states())
        .map(|s| {
            let row = &table.pi[i][s];
            let k = row.len();
            let mut f = DMat::zeros(k, k);
            for p in 0..k {
                for q in 0..k {
                    let outer = row[p] * row[q];
                    f[(p, q)] = if p == q { row[p] - outer } else { -outer };
                }
            }
            f
        })
        .collect();
    FisherBlock {
        per_state,
        weights: d.to_vec(),
    }
}

/// Applies the Moore-Penrose inverse of agent `i`'s full Fisher matrix (block
/// diagonal with visitation weights) to a per-(state, action) vector whose
/// rows each sum to zero.
///
/// This is the verification oracle for the closed-form natural gradient: the
/// result equals `g / (d * pi)` up to a per-state additive constant.
pub fn natural_direction_pinv<S: Real>(
    game: &GameSpec<S>,
    table: &PolicyTable<S>,
    d: &[S],
    i: usize,
    g: &[Vec<S>],
) -> Result<Vec<Vec<S>>, EvalError> {
    let tol = S::c(1e-8).max(S::check_eps());
    for (s, row) in g.iter().enumerate() {
        let sum: S = row.iter().copied().sum();
        if sum.abs() > tol {
            return Err(EvalError::Precondition(format!(
                "gradient row for state {s} sums to {:.3e}, expected 0",
                sum.to_f64_lossy()
            )));
        }
    }
    let fisher = fisher_block(game, table, d, i);
    let mut out = Vec::with_capacity(game.n_states());
    for s in 0..game.n_states() {
        let k = game.actions[i].len();
        let mut weighted = DMat::zeros(k, k);
        for p in 0..k {
            for q in 0..k {
                weighted[(p, q)] = d[s] * fisher.per_state[s][(p, q)];
            }
        }
        let pinv = pinv_sym(&weighted)?;
        out.push(pinv.matvec(&g[s]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{figure1_game, random_identical_interest_game, GameSpec};
    use crate::policy::{softmax_policy, uniform_params};

    fn uniform_table(game: &GameSpec<f64>) -> PolicyTable<f64> {
        softmax_policy(game, &uniform_params(game)).unwrap()
    }

    #[test]
    fn visitation_single_state() {
        let game = figure1_game::<f64>();
        let d = visitation(&game, &uniform_table(&game)).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn visitation_two_state_chain() {
        // deterministic s0 -> s1 -> s1, gamma = 0.5, rho = (1, 0)
        let game = GameSpec::<f64>::new(
            vec!["s0".into(), "s1".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]],
            vec![vec![vec![0.0], vec![0.0]]],
            0.5,
            vec![1.0, 0.0],
            None,
            true,
        )
        .unwrap();
        let d = visitation(&game, &uniform_table(&game)).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12);
        assert!((d[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn visitation_gamma_zero_is_rho() {
        let game: GameSpec<f64> = random_identical_interest_game(5, 2, 3, &[2, 2], 0.0);
        let d = visitation(&game, &uniform_table(&game)).unwrap();
        for (ds, rs) in d.iter().zip(&game.rho) {
            assert!((ds - rs).abs() < 1e-12);
        }
    }

    #[test]
    fn value_geometric_series() {
        let game = GameSpec::<f64>::new(
            vec!["s0".into()],
            vec![vec!["a".into()]],
            vec![vec![vec![1.0]]],
            vec![vec![vec![1.0]]],
            0.9,
            vec![1.0],
            None,
            true,
        )
        .unwrap();
        let (v, q, a) = value_functions(&game, &uniform_table(&game), 0).unwrap();
        assert!((v[0] - 10.0).abs() < 1e-9);
        assert!((q[0][0] - 10.0).abs() < 1e-9);
        assert!(a[0][0].abs() < 1e-9);
    }

    #[test]
    fn matrix_game_uniform_values_and_averages() {
        let game = figure1_game::<f64>();
        let table = uniform_table(&game);
        let bundle = EvalBundle::compute(&game, &table).unwrap();
        assert!((bundle.v[0][0] - (-0.225)).abs() < 1e-12);
        assert!((bundle.v[1][0] - (-0.225)).abs() < 1e-12);
        // gamma = 0: Q equals the stage reward
        for (qrow, rrow) in bundle.q[0].iter().zip(&game.rewards[0]) {
            for (q, r) in qrow.iter().zip(rrow) {
                assert_eq!(q, r);
            }
        }
        let expect_qbar1 = [-0.43, 0.155, -0.4];
        let expect_abar1 = [-0.205, 0.38, -0.175];
        for a in 0..3 {
            assert!((bundle.qbar[0][0][a] - expect_qbar1[a]).abs() < 1e-12);
            assert!((bundle.abar[0][0][a] - expect_abar1[a]).abs() < 1e-12);
        }
        let expect_qbar2 = [-0.64 / 3.0, -0.71 / 3.0];
        for a in 0..2 {
            assert!((bundle.qbar[1][0][a] - expect_qbar2[a]).abs() < 1e-12);
        }
        // identity abar = qbar - v
        for i in 0..2 {
            for a in 0..game.actions[i].len() {
                assert!(
                    (bundle.abar[i][0][a] - (bundle.qbar[i][0][a] - bundle.v[i][0])).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn single_agent_averaging_is_identity() {
        let game: GameSpec<f64> = random_identical_interest_game(7, 1, 2, &[3], 0.5);
        let table = uniform_table(&game);
        let bundle = EvalBundle::compute(&game, &table).unwrap();
        for s in 0..2 {
            for a in 0..3 {
                assert!((bundle.qbar[0][s][a] - bundle.q[0][s][a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matrix_game_gradient() {
        let game = figure1_game::<f64>();
        let table = uniform_table(&game);
        let bundle = EvalBundle::compute(&game, &table).unwrap();
        let g = policy_gradient(&game, &table, &bundle, 0);
        let expect = [-0.205 / 3.0, 0.38 / 3.0, -0.175 / 3.0];
        for a in 0..3 {
            assert!((g[0][a] - expect[a]).abs() < 1e-12);
        }
        let row_sum: f64 = g[0].iter().sum();
        assert!(row_sum.abs() < 1e-10);
    }

    #[test]
    fn constant_rewards_give_zero_gradient() {
        let game = GameSpec::<f64>::new(
            vec!["s0".into()],
            vec![vec!["a".into(), "b".into()], vec!["x".into(), "y".into()]],
            vec![vec![vec![1.0]; 4]],
            vec![vec![vec![0.7; 4]]; 2],
            0.0,
            vec![1.0],
            None,
            true,
        )
        .unwrap();
        let table = uniform_table(&game);
        let bundle = EvalBundle::compute(&game, &table).unwrap();
        for i in 0..2 {
            for v in &policy_gradient(&game, &table, &bundle, i)[0] {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn potentials_on_matrix_game() {
        let game = figure1_game::<f64>();
        let table = uniform_table(&game);
        assert!((potential_value(&game, &table).unwrap() - (-0.225)).abs() < 1e-12);

        // deterministic (a1=3, a2=1) has potential 0.2
        let det = PolicyTable::deterministic(&game, &[vec![2], vec![0]]);
        assert!((potential_value(&game, &det).unwrap() - 0.2).abs() < 1e-12);

        // regularized value at the uniform policy
        let reg = regularized_potential(&game, &table, 0.003).unwrap();
        let expect = -0.225 + 0.003 * (3.0 * (1f64 / 3.0).ln() + 2.0 * 0.5f64.ln());
        assert!((reg - expect).abs() < 1e-12);
        assert!((expect - (-0.239046)).abs() < 1e-6);
        assert!(reg < potential_value(&game, &table).unwrap());
        // lambda = 0 reduces exactly
        assert_eq!(
            regularized_potential(&game, &table, 0.0).unwrap(),
            potential_value(&game, &table).unwrap()
        );
    }

    #[test]
    fn missing_potential_is_an_error() {
        let game = GameSpec::<f64>::new(
            vec!["s0".into()],
            vec![vec!["a".into(), "b".into()], vec!["x".into()]],
            vec![vec![vec![1.0]; 2]],
            vec![vec![vec![0.1, 0.2]], vec![vec![0.3, 0.4]]],
            0.0,
            vec![1.0],
            None,
            false,
        )
        .unwrap();
        assert!(game.potential.is_none());
        let table = uniform_table(&game);
        assert!(matches!(
            potential_value(&game, &table),
            Err(EvalError::MissingPotential)
        ));
        assert!(matches!(
            PotentialEval::compute(&game, &table),
            Err(EvalError::MissingPotential)
        ));
    }

    #[test]
    fn potential_bounds_hold() {
        let game: GameSpec<f64> = random_identical_interest_game(3, 2, 3, &[2, 3], 0.9);
        let table = uniform_table(&game);
        let phi = potential_value(&game, &table).unwrap();
        let (lo, hi) = game.phi_range().unwrap();
        assert!(phi >= lo / (1.0 - 0.9) - 1e-9);
        assert!(phi <= hi / (1.0 - 0.9) + 1e-9);
    }

    #[test]
    fn regularizer_vanishes_at_uniform() {
        let game = figure1_game::<f64>();
        let table = uniform_table(&game);
        let bundle = EvalBundle::compute(&game, &table).unwrap();
        for i in 0..2 {
            let unreg = policy_gradient(&game, &table, &bundle, i);
            let reg = regularized_gradient(&game, &table, &bundle, i, 0.25);
            for (ru, rr) in unreg.iter().zip(&reg) {
                for (u, r) in ru.iter().zip(rr) {
                    assert!((u - r).abs() < 1e-15);
                }
            }
            // per-state sum still zero
            let sum: f64 = reg[0].iter().sum();
            assert!(sum.abs() < 1e-10);
        }
    }

    #[test]
    fn fisher_block_closed_form_and_kernel() {
        let game: GameSpec<f64> = random_identical_interest_game(2, 1, 1, &[2], 0.0);
        let table = uniform_table(&game);
        let d = visitation(&game, &table).unwrap();
        let fb = fisher_block(&game, &table, &d, 0);
        let f = &fb.per_state[0];
        assert!((f[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((f[(0, 1)] + 0.25).abs() < 1e-15);
        assert!((f[(1, 1)] - 0.25).abs() < 1e-15);

        // ones vector in the kernel and PSD for a random row
        let game: GameSpec<f64> = random_identical_interest_game(9, 1, 1, &[4], 0.0);
        let mut params = uniform_params(&game);
        params.theta[0][0] = vec![0.3, -1.2, 0.8, 2.0];
        let table = softmax_policy(&game, &params).unwrap();
        let d = visitation(&game, &table).unwrap();
        let fb = fisher_block(&game, &table, &d, 0);
        let f = &fb.per_state[0];
        let ones = vec![1.0; 4];
        for v in f.matvec(&ones) {
            assert!(v.abs() < 1e-12);
        }
        let (w, _) = crate::linalg::sym_eigen(f).unwrap();
        for ev in w {
            assert!(ev >= -1e-12);
        }
    }

    #[test]
    fn pinv_direction_examples() {
        // uniform 2-action, d = 1: g = [eps, -eps] maps to [2 eps, -2 eps]
        let game: GameSpec<f64> = random_identical_interest_game(2, 1, 1, &[2], 0.0);
        let table = uniform_table(&game);
        let d = vec![1.0];
        let eps = 1e-3;
        let dir = natural_direction_pinv(&game, &table, &d, 0, &[vec![eps, -eps]]).unwrap();
        assert!((dir[0][0] - 2.0 * eps).abs() < 1e-12);
        assert!((dir[0][1] + 2.0 * eps).abs() < 1e-12);

        // zero input maps to zero
        let dir = natural_direction_pinv(&game, &table, &d, 0, &[vec![0.0, 0.0]]).unwrap();
        assert!(dir[0][0].abs() < 1e-15 && dir[0][1].abs() < 1e-15);

        // precondition: rows must sum to zero
        assert!(matches!(
            natural_direction_pinv(&game, &table, &d, 0, &[vec![1.0, 1.0]]),
            Err(EvalError::Precondition(_))
        ));
    }

    #[test]
    fn pinv_direction_matches_closed_form_up_to_constant() {
        let game: GameSpec<f64> = random_identical_interest_game(4, 2, 2, &[3, 2], 0.5);
        let mut params = uniform_params(&game);
        for a in params.theta.iter_mut() {
            for row in a.iter_mut() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = 0.37 * (k as f64 + 1.0) - 0.5;
                }
            }
        }
        let table = softmax_policy(&game, &params).unwrap();
        let bundle = EvalBundle::compute(&game, &table).unwrap();
        for i in 0..2 {
            let g = policy_gradient(&game, &table, &bundle, i);
            let dir = natural_direction_pinv(&game, &table, &bundle.d, i, &g).unwrap();
            // dir(s, .) - abar(s, .) / (1 - gamma) must be constant per state
            for s in 0..game.n_states() {
                let diffs: Vec<f64> = (0..game.actions[i].len())
                    .map(|a| dir[s][a] - bundle.abar[i][s][a] / (1.0 - 0.5))
                    .collect();
                for w in diffs.windows(2) {
                    assert!((w[0] - w[1]).abs() < 1e-8, "not constant: {diffs:?}");
                }
            }
        }
    }

    #[test]
    fn bundle_invariants_on_random_games() {
        for seed in 0..10u64 {
            let game: GameSpec<f64> = random_identical_interest_game(seed, 2, 3, &[2, 3], 0.7);
            let mut params = uniform_params(&game);
            for (i, a) in params.theta.iter_mut().enumerate() {
                for (s, row) in a.iter_mut().enumerate() {
                    for (k, v) in row.iter_mut().enumerate() {
                        *v = ((seed as f64 + 1.0) * 0.31 + i as f64 * 0.7 - s as f64 * 0.43
                            + k as f64 * 0.91)
                            .sin();
                    }
                }
            }
            let table = softmax_policy(&game, &params).unwrap();
            let bundle = EvalBundle::compute(&game, &table).unwrap();

            // d sums to one and dominates (1-gamma) rho
            let total: f64 = bundle.d.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for (ds, rs) in bundle.d.iter().zip(&game.rho) {
                assert!(*ds >= (1.0 - 0.7) * rs - 1e-12);
            }
            // zero-mean averaged advantage and abar = qbar - v
            for i in 0..game.n_agents {
                for s in 0..game.n_states() {
                    let mean: f64 = (0..game.actions[i].len())
                        .map(|a| table.pi[i][s][a] * bundle.abar[i][s][a])
                        .sum();
                    assert!(mean.abs() < 1e-10);
                    for a in 0..game.actions[i].len() {
                        let direct = bundle.qbar[i][s][a] - bundle.v[i][s];
                        assert!((bundle.abar[i][s][a] - direct).abs() < 1e-12);
                    }
                }
            }
            // identical interest: agents share values
            for s in 0..game.n_states() {
                assert!((bundle.v[0][s] - bundle.v[1][s]).abs() < 1e-10);
            }
        }
    }
}
