use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::ExplorationNoise;
use super::replay::Transition;
use crate::error::{Error, Result};
use crate::nn::{Activation, Adam, Mlp, OptimizerKind, Trace};

/// Which critic supplies `dQ/da` for the actor update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorCritic {
    /// The slowly tracking target critic.
    Target,
    /// The critic being trained.
    Train,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdpgParams {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub actor_tau: f64,
    pub critic_tau: f64,
    pub discount: f64,
    pub optimizer: OptimizerKind,
    pub actor_gradient_critic: ActorCritic,
    /// L2 coefficient on both trained networks; 0 disables it.
    pub weight_decay: f64,
}

impl Default for DdpgParams {
    fn default() -> Self {
        Self {
            hidden: vec![80, 40],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            actor_tau: 1e-3,
            critic_tau: 1e-3,
            discount: 0.99,
            optimizer: OptimizerKind::Adam,
            actor_gradient_critic: ActorCritic::Target,
            weight_decay: 0.0,
        }
    }
}

impl DdpgParams {
    pub fn validate(&self, prefix: &str, problems: &mut Vec<String>) {
        if self.hidden.iter().any(|&h| h == 0) {
            problems.push(format!("{prefix}.hidden sizes must be positive"));
        }
        for (name, v) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr), ("weight_decay", self.weight_decay)] {
            if !(v.is_finite() && v >= 0.0) {
                problems.push(format!("{prefix}.{name} must be >= 0 (got {v})"));
            }
        }
        for (name, v) in [("actor_tau", self.actor_tau), ("critic_tau", self.critic_tau), ("discount", self.discount)] {
            if !(0.0..=1.0).contains(&v) {
                problems.push(format!("{prefix}.{name} must lie in [0, 1] (got {v})"));
            }
        }
    }
}

/// Actor and critic, each with a target copy, plus their optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetQuartet {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critic: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub params: DdpgParams,
}

pub(crate) fn diverged(detail: impl Into<String>) -> Error {
    Error::Divergence { episode: 0, detail: detail.into() }
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl NetQuartet {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, params: DdpgParams, rng: &mut R) -> Self {
        let actor = Mlp::new(
            &layer_sizes(state_dim, &params.hidden, action_dim),
            Activation::Relu,
            Activation::Tanh,
            rng,
        );
        let critic = Mlp::new(
            &layer_sizes(state_dim + action_dim, &params.hidden, 1),
            Activation::Relu,
            Activation::Identity,
            rng,
        );
        Self::from_networks(actor, critic, params)
    }

    /// Bundle with targets initialized as exact copies.
    pub fn from_networks(actor: Mlp, critic: Mlp, params: DdpgParams) -> Self {
        let mut actor_opt = Adam::new(params.optimizer, params.actor_lr, actor.num_params());
        let mut critic_opt = Adam::new(params.optimizer, params.critic_lr, critic.num_params());
        actor_opt.weight_decay = params.weight_decay;
        critic_opt.weight_decay = params.weight_decay;
        Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
            params,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let mut input = state.to_vec();
        input.extend_from_slice(action);
        Ok(self.critic.forward(&input)?[0])
    }

    /// Mean squared TD error on `batch` and its gradient w.r.t. the critic.
    /// Terminal transitions bootstrap nothing.
    pub fn critic_loss(&self, batch: &[&Transition]) -> Result<(f64, Vec<f64>)> {
        assert!(!batch.is_empty(), "empty batch");
        let n = batch.len() as f64;
        let mut grads = vec![0.0; self.critic.num_params()];
        let mut trace = Trace::default();
        let mut input = Vec::with_capacity(self.critic.input_dim());
        let mut loss = 0.0;
        for t in batch {
            let target = if t.done {
                t.reward
            } else {
                let next_action = self.actor_target.forward(&t.next_state)?;
                input.clear();
                input.extend_from_slice(&t.next_state);
                input.extend_from_slice(&next_action);
                t.reward + self.params.discount * self.critic_target.forward(&input)?[0]
            };
            input.clear();
            input.extend_from_slice(&t.state);
            input.extend_from_slice(&t.action);
            self.critic.forward_trace(&input, &mut trace)?;
            let err = trace.output()[0] - target;
            loss += err * err / n;
            self.critic.backward(&trace, &[2.0 * err / n], Some(&mut grads), None);
        }
        Ok((loss, grads))
    }

    /// Mean `Q(s, actor(s))` on the batch and the gradient of its negation
    /// w.r.t. the actor parameters (descending it ascends Q).
    pub fn actor_objective(&self, batch: &[&Transition], via: ActorCritic) -> Result<(f64, Vec<f64>)> {
        let critic = match via {
            ActorCritic::Target => &self.critic_target,
            ActorCritic::Train => &self.critic,
        };
        let sdim = self.state_dim();
        let mut trace = Trace::default();
        let mut input = Vec::with_capacity(critic.input_dim());
        let mut d_input = Vec::new();
        self.actor_objective_with(batch, |state, action| {
            input.clear();
            input.extend_from_slice(state);
            input.extend_from_slice(action);
            critic.forward_trace(&input, &mut trace)?;
            critic.backward(&trace, &[1.0], None, Some(&mut d_input));
            Ok((trace.output()[0], d_input[sdim..].to_vec()))
        })
    }

    /// Chain rule `dQ/da * da/dtheta` for an arbitrary critic given as a
    /// closure returning `(Q(s, a), dQ/da)`.
    pub fn actor_objective_with<F>(&self, batch: &[&Transition], mut critic: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnMut(&[f64], &[f64]) -> Result<(f64, Vec<f64>)>,
    {
        assert!(!batch.is_empty(), "empty batch");
        let n = batch.len() as f64;
        let mut grads = vec![0.0; self.actor.num_params()];
        let mut trace = Trace::default();
        let mut mean_q = 0.0;
        let mut d_action = Vec::with_capacity(self.action_dim());
        for t in batch {
            self.actor.forward_trace(&t.state, &mut trace)?;
            let (q, dq_da) = critic(&t.state, trace.output())?;
            mean_q += q / n;
            d_action.clear();
            d_action.extend(dq_da.iter().map(|g| -g / n));
            self.actor.backward(&trace, &d_action, Some(&mut grads), None);
        }
        Ok((mean_q, grads))
    }

    /// One optimizer step on the critic; returns the pre-step loss.
    pub fn update_critic(&mut self, batch: &[&Transition]) -> Result<f64> {
        let (loss, grads) = self.critic_loss(batch)?;
        if !loss.is_finite() {
            return Err(diverged(format!("critic loss {loss}")));
        }
        self.critic_opt
            .step(self.critic.params_mut(), &grads)
            .map_err(|e| diverged(format!("critic: {e}")))?;
        Ok(loss)
    }

    /// One optimizer step on the actor; returns the pre-step mean Q.
    pub fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64> {
        let (q, grads) = self.actor_objective(batch, self.params.actor_gradient_critic)?;
        self.apply_actor_step(q, &grads)
    }

    /// Actor step against a closure critic (see [`NetQuartet::actor_objective_with`]).
    pub fn update_actor_with<F>(&mut self, batch: &[&Transition], critic: F) -> Result<f64>
    where
        F: FnMut(&[f64], &[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let (q, grads) = self.actor_objective_with(batch, critic)?;
        self.apply_actor_step(q, &grads)
    }

    fn apply_actor_step(&mut self, q: f64, grads: &[f64]) -> Result<f64> {
        if !q.is_finite() {
            return Err(diverged(format!("actor objective {q}")));
        }
        self.actor_opt
            .step(self.actor.params_mut(), grads)
            .map_err(|e| diverged(format!("actor: {e}")))?;
        Ok(q)
    }

    /// `target <- tau * train + (1 - tau) * target` for both pairs.
    pub fn soft_update(&mut self) {
        self.critic_target.blend_from(&self.critic, self.params.critic_tau);
        self.actor_target.blend_from(&self.actor, self.params.actor_tau);
    }

    pub fn hard_update(&mut self) {
        self.critic_target.copy_from(&self.critic);
        self.actor_target.copy_from(&self.actor);
    }

    /// Actor output plus exploration noise, clamped to `[-1, 1]`.
    pub fn act<R: Rng + ?Sized>(&self, state: &[f64], noise: &ExplorationNoise, rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.actor.forward(state)?;
        noise.perturb(&mut a, rng);
        Ok(a)
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite()
    }
}
