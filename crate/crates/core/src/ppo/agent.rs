// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{Activation, DenseNet};
use crate::error::{Error, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub clip_lambda: f64,
    pub eta: f64,
    pub feature_height: usize,
    pub lr_policy: f64,
    pub lr_value: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub steps_per_trajectory: usize,
    pub stop_epsilon: f64,
    pub window: usize,
    pub max_total_steps: usize,
    pub entropy_coef: f64,
    /// Gradient L2-norm cap per network; 0 disables clipping.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    /// Keep actions that worsen the cost; when false they are undone and earn reward 0.
    pub keep_worse: bool,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_lambda: 0.2,
            eta: 0.95,
            feature_height: 6,
            lr_policy: 3e-4,
            lr_value: 1e-3,
            momentum: 0.9,
            epochs: 4,
            minibatch: 16,
            steps_per_trajectory: 64,
            stop_epsilon: 1e-4,
            window: 100,
            max_total_steps: 2500,
            entropy_coef: 0.0,
            max_grad_norm: 1.0,
            normalize_advantages: true,
            keep_worse: false,
            policy_hidden: vec![64, 64],
            value_hidden: vec![64, 64, 64],
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.clip_lambda > 0.0 && self.clip_lambda < 1.0) {
            return Err(ModelError::Config("clip lambda must lie in (0, 1)".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ModelError::Config("discount eta must lie in (0, 1]".into()));
        }
        if self.feature_height == 0 || self.epochs == 0 || self.minibatch == 0 || self.steps_per_trajectory == 0 {
            return Err(ModelError::Config("PPO sizes must be positive".into()));
        }
        if !(self.lr_policy >= 0.0 && self.lr_value >= 0.0 && (0.0..1.0).contains(&self.momentum)) {
            return Err(ModelError::Config("learning rates must be >= 0 and momentum in [0, 1)".into()));
        }
        if !(self.stop_epsilon > 0.0) || self.window == 0 {
            return Err(ModelError::Config("stop_epsilon and window must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub features: Vec<f64>,
    pub action: usize,
    /// Log-probability of `action` under the behavior policy.
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Trajectory {
    pub fn finish(&mut self, eta: f64) {
        let (a, r) = advantages(&self.steps, eta);
        self.advantages = a;
        self.returns = r;
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Discounted returns (terminal bootstrap 0) computed backward.
pub fn discounted_returns(rewards: &[f64], eta: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + eta * acc;
        out[t] = acc;
    }
    out
}

/// `(Â, V̂)` with `V̂_t = Σ_l η^l r_{t+l}` and `Â_t = V̂_t − V(s_t)`.
pub fn advantages(steps: &[Transition], eta: f64) -> (Vec<f64>, Vec<f64>) {
    let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
    let returns = discounted_returns(&rewards, eta);
    let adv = returns.iter().zip(steps).map(|(r, s)| r - s.value).collect();
    (adv, returns)
}

/// `min(p·Â, clip(p, 1−λ, 1+λ)·Â)`.
pub fn clip_surrogate(p: f64, adv: f64, lambda: f64) -> f64 {
    (p * adv).min(p.clamp(1.0 - lambda, 1.0 + lambda) * adv)
}

/// `∂/∂p` of [`clip_surrogate`]: `Â` where the unclipped branch is active, else 0.
pub fn clip_surrogate_dp(p: f64, adv: f64, lambda: f64) -> f64 {
    let clipped = p.clamp(1.0 - lambda, 1.0 + lambda);
    if p * adv <= clipped * adv {
        adv
    } else {
        0.0
    }
}

/// One training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub action: usize,
    pub log_prob_old: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Mean clipped surrogate (plus entropy bonus) over `batch`.
pub fn policy_objective(policy: &DenseNet, batch: &[Sample], lambda: f64, entropy_coef: f64) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for s in batch {
        let probs = policy.forward(&s.features)?;
        let p = (probs[s.action].ln() - s.log_prob_old).exp();
        total += clip_surrogate(p, s.advantage, lambda);
        if entropy_coef != 0.0 {
            total -= entropy_coef * probs.iter().map(|q| if *q > 0.0 { q * q.ln() } else { 0.0 }).sum::<f64>();
        }
    }
    Ok(total / batch.len() as f64)
}

/// Gradient of [`policy_objective`]; also returns the objective and the clipped fraction.
pub fn policy_gradient(policy: &DenseNet, batch: &[Sample], lambda: f64, entropy_coef: f64) -> Result<(Vec<f64>, f64, f64), ModelError> {
    let mut grad = vec![0.0; policy.n_params()];
    let n = batch.len() as f64;
    let (mut obj, mut clipped) = (0.0, 0usize);
    for s in batch {
        let trace = policy.trace(&s.features)?;
        let probs = trace.output();
        let pa = probs[s.action];
        let p = (pa.ln() - s.log_prob_old).exp();
        obj += clip_surrogate(p, s.advantage, lambda);
        if (p - 1.0).abs() > lambda {
            clipped += 1;
        }
        let mut d_out = vec![0.0; probs.len()];
        d_out[s.action] = clip_surrogate_dp(p, s.advantage, lambda) * p / pa;
        if entropy_coef != 0.0 {
            for (d, &q) in d_out.iter_mut().zip(probs) {
                if q > 0.0 {
                    obj -= entropy_coef * q * q.ln();
                    *d -= entropy_coef * (q.ln() + 1.0);
                }
            }
        }
        policy.backward(&trace, &d_out, 1.0 / n, &mut grad);
    }
    Ok((grad, obj / n, clipped as f64 / n))
}

/// Mean squared value error over `batch`.
pub fn value_loss(value: &DenseNet, batch: &[Sample]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for s in batch {
        let v = value.forward(&s.features)?[0];
        total += (v - s.ret).powi(2);
    }
    Ok(total / batch.len() as f64)
}

/// Gradient of [`value_loss`] and the loss.
pub fn value_gradient(value: &DenseNet, batch: &[Sample]) -> Result<(Vec<f64>, f64), ModelError> {
    let mut grad = vec![0.0; value.n_params()];
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for s in batch {
        let trace = value.trace(&s.features)?;
        let e = trace.output()[0] - s.ret;
        loss += e * e;
        value.backward(&trace, &[2.0 * e], 1.0 / n, &mut grad);
    }
    Ok((grad, loss / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub mean_surrogate: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
}

const CHECKPOINT_FORMAT: &str = "hfp-ppo-agent";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub policy: DenseNet,
    pub value: DenseNet,
    policy_velocity: Vec<f64>,
    value_velocity: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    agent: PpoAgent,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn clip_norm(g: &mut [f64], max: f64) {
    if max <= 0.0 {
        return;
    }
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        g.iter_mut().for_each(|x| *x *= s);
    }
}

impl PpoAgent {
    /// Policy `n_inputs → hidden → n_actions` (softmax) and value `n_inputs → hidden → 1`.
    pub fn new<R: Rng + ?Sized>(n_inputs: usize, n_actions: usize, cfg: &PpoConfig, rng: &mut R) -> Result<Self, ModelError> {
        let mut ps = vec![n_inputs];
        ps.extend(&cfg.policy_hidden);
        ps.push(n_actions);
        let mut policy = DenseNet::new(&ps, Activation::Relu, Activation::Softmax, rng)?;
        // near-uniform initial policy
        let last = policy.layers.last_mut().expect("nonempty");
        last.weights.iter_mut().for_each(|w| *w *= 0.01);
        let mut vs = vec![n_inputs];
        vs.extend(&cfg.value_hidden);
        vs.push(1);
        let value = DenseNet::new(&vs, Activation::Relu, Activation::Identity, rng)?;
        Ok(Self {
            policy_velocity: vec![0.0; policy.n_params()],
            value_velocity: vec![0.0; value.n_params()],
            policy,
            value,
        })
    }

    /// Squashes raw non-negative features with `ln(1 + x)`.
    pub fn preprocess(raw: &[f64]) -> Vec<f64> {
        raw.iter().map(|&x| x.max(0.0).ln_1p()).collect()
    }

    pub fn act<R: Rng + ?Sized>(&self, features: &[f64], rng: &mut R) -> Result<(usize, f64, f64), ModelError> {
        let probs = self.policy.forward(features)?;
        if !finite(&probs) {
            return Err(ModelError::NonFinite("policy output".into()));
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut action = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                action = i;
                break;
            }
        }
        let v = self.value.forward(features)?[0];
        Ok((action, probs[action].ln(), v))
    }

    /// PPO update over `batch`. On a non-finite gradient all parameters are restored
    /// and an error is returned.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &[Trajectory], cfg: &PpoConfig, rng: &mut R) -> Result<UpdateStats, ModelError> {
        let mut samples: Vec<Sample> = Vec::new();
        for t in batch {
            if t.advantages.len() != t.steps.len() || t.returns.len() != t.steps.len() {
                return Err(ModelError::State("trajectory advantages not computed".into()));
            }
            for (i, s) in t.steps.iter().enumerate() {
                if !s.reward.is_finite() {
                    return Err(ModelError::NonFinite("reward".into()));
                }
                samples.push(Sample {
                    features: s.features.clone(),
                    action: s.action,
                    log_prob_old: s.log_prob,
                    advantage: t.advantages[i],
                    ret: t.returns[i],
                });
            }
        }
        if samples.is_empty() {
            return Err(ModelError::State("empty PPO batch".into()));
        }
        if cfg.normalize_advantages && samples.len() > 1 {
            let n = samples.len() as f64;
            let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s.advantage - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 {
                samples.iter_mut().for_each(|s| s.advantage = (s.advantage - mean) / sd);
            }
        }

        let saved = self.clone();
        let mut stats = UpdateStats::default();
        let mut count = 0.0;
        let mut idx: Vec<usize> = (0..samples.len()).collect();
        for _ in 0..cfg.epochs {
            idx.shuffle(rng);
            for chunk in idx.chunks(cfg.minibatch) {
                let mb: Vec<Sample> = chunk.iter().map(|&i| samples[i].clone()).collect();
                let (mut gp, obj, frac) = policy_gradient(&self.policy, &mb, cfg.clip_lambda, cfg.entropy_coef)?;
                let (mut gv, loss) = value_gradient(&self.value, &mb)?;
                if !finite(&gp) || !finite(&gv) {
                    *self = saved;
                    return Err(ModelError::NonFinite("PPO gradient; update aborted".into()));
                }
                clip_norm(&mut gp, cfg.max_grad_norm);
                clip_norm(&mut gv, cfg.max_grad_norm);
                // ascent on the surrogate, descent on the value loss
                for (v, g) in self.policy_velocity.iter_mut().zip(&gp) {
                    *v = cfg.momentum * *v + cfg.lr_policy * g;
                }
                for (v, g) in self.value_velocity.iter_mut().zip(&gv) {
                    *v = cfg.momentum * *v - cfg.lr_value * g;
                }
                self.policy.apply_delta(&self.policy_velocity);
                self.value.apply_delta(&self.value_velocity);
                stats.mean_surrogate += obj;
                stats.value_loss += loss;
                stats.clip_fraction += frac;
                count += 1.0;
            }
        }
        if !finite(&self.policy.params()) || !finite(&self.value.params()) {
            *self = saved;
            return Err(ModelError::NonFinite("parameters after PPO update".into()));
        }
        stats.mean_surrogate /= count;
        stats.value_loss /= count;
        stats.clip_fraction /= count;
        Ok(stats)
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            agent: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(ModelError::Config(format!("unsupported checkpoint {} v{}", c.format, c.version)).into());
        }
        c.agent.policy.validate()?;
        c.agent.value.validate()?;
        if c.agent.policy_velocity.len() != c.agent.policy.n_params() || c.agent.value_velocity.len() != c.agent.value.n_params() {
            return Err(ModelError::Config("checkpoint optimizer state has the wrong length".into()).into());
        }
        Ok(c.agent)
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(reward: f64, value: f64) -> Transition {
        Transition {
            features: vec![0.0],
            action: 0,
            log_prob: 0.0,
            reward,
            value,
        }
    }

    #[test]
    fn advantage_examples() {
        let (a, r) = advantages(&[tr(0.0, 0.0), tr(0.0, 0.0)], 0.95);
        assert_eq!(a, vec![0.0, 0.0]);
        assert_eq!(r, vec![0.0, 0.0]);
        let (a, r) = advantages(&[tr(1.0, 0.0), tr(1.0, 0.0)], 0.95);
        assert_eq!(r, vec![1.95, 1.0]);
        assert_eq!(a, vec![1.95, 1.0]);
        let (a, _) = advantages(&[tr(1.0, 1.95), tr(1.0, 1.0)], 0.95);
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_surrogate(1.0, -3.5, 0.2), -3.5);
        assert!((clip_surrogate(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clip_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
    }

    fn small_agent(seed: u64) -> (PpoAgent, PpoConfig) {
        let cfg = PpoConfig {
            policy_hidden: vec![5],
            value_hidden: vec![4],
            ..PpoConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (PpoAgent::new(3, 4, &cfg, &mut rng).unwrap(), cfg)
    }

    fn batch(agent: &PpoAgent, adv: f64, seed: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Trajectory::default();
        for _ in 0..10 {
            let f: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.0)).collect();
            let (a, lp, v) = agent.act(&f, &mut rng).unwrap();
            t.steps.push(Transition {
                features: f,
                action: a,
                log_prob: lp,
                reward: 0.0,
                value: v,
            });
        }
        t.advantages = vec![adv; 10];
        t.returns = t.steps.iter().map(|s| s.value).collect();
        t
    }

    #[test]
    fn zero_advantage_and_exact_critic_leave_params() {
        let (mut agent, cfg) = small_agent(1);
        let b = batch(&agent, 0.0, 2);
        let before = agent.clone();
        let stats = agent.update(&[b], &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(agent.policy, before.policy);
        assert_eq!(agent.value, before.value);
        assert_eq!(stats.value_loss, 0.0);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let (mut agent, mut cfg) = small_agent(4);
        cfg.lr_policy = 0.0;
        cfg.lr_value = 0.0;
        let mut b = batch(&agent, 1.0, 5);
        b.returns.iter_mut().for_each(|r| *r += 3.0);
        b.advantages = (0..10).map(|i| i as f64 - 4.5).collect();
        let before = agent.clone();
        agent.update(&[b], &cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(agent, before);
    }

    #[test]
    fn update_keeps_a_distribution() {
        let (mut agent, mut cfg) = small_agent(7);
        cfg.lr_policy = 0.5;
        let mut b = batch(&agent, 1.0, 8);
        b.advantages = (0..10).map(|i| if i % 2 == 0 { 5.0 } else { -5.0 }).collect();
        agent.update(&[b], &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let p = agent.policy.forward(&[0.5, 1.0, 1.5]).unwrap();
        assert!(p.iter().all(|&q| q >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_round_trips_bit_exact() {
        let (agent, _) = small_agent(10);
        let back = PpoAgent::from_json(&agent.to_json().unwrap()).unwrap();
        assert_eq!(back, agent);
        let bits = |a: &PpoAgent| a.policy.params().iter().chain(&a.value.params()).map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&agent));
        assert!(PpoAgent::from_json("{\"format\":\"x\",\"version\":1}").is_err());
    }
}
