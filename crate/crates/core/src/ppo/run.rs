// SPDX-License-Identifier: Apache-2.0

//! Acting and training loop for PPO floorplanning on one die.

use rand::Rng;

use super::agent::{PpoAgent, PpoConfig, Trajectory, Transition, UpdateStats};
use crate::bstar::MoveKind;
use crate::error::ModelError;
use crate::floorplan::SearchEnv;
use crate::sa::{Convergence, StepOutcome};

/// Per-die episode state for a shared agent.
#[derive(Debug, Clone)]
pub struct RlStepper<S> {
    pub trajectory: Trajectory,
    /// Best state seen on this die and its cost when seen; restart point for new episodes.
    best: Option<(f64, S)>,
    pub episodes: usize,
    pub last_stats: Option<UpdateStats>,
    /// Completed episodes' total rewards and their start/end costs.
    pub episode_log: Vec<EpisodeRecord>,
    episode_start_cost: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub total_reward: f64,
    pub start_cost: f64,
    pub end_cost: f64,
}

impl<S: Clone> Default for RlStepper<S> {
    fn default() -> Self {
        Self {
            trajectory: Trajectory::default(),
            best: None,
            episodes: 0,
            last_stats: None,
            episode_log: Vec::new(),
            episode_start_cost: None,
        }
    }
}

impl<S: Clone> RlStepper<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the restart point, e.g. after the die's block set changed.
    pub fn invalidate(&mut self) {
        self.best = None;
    }

    /// One action: observe, sample a move kind, apply it (undoing it if it worsens the
    /// cost, unless `keep_worse`), record the reward `−(cost after − cost before)`. Every `steps_per_trajectory` actions the agent
    /// is updated and the die restarts from its best state.
    pub fn step<E, R>(&mut self, env: &mut E, agent: &mut PpoAgent, cfg: &PpoConfig, rng: &mut R) -> Result<StepOutcome, ModelError>
    where
        E: SearchEnv<Saved = S>,
        R: Rng + ?Sized,
    {
        let before = env.cost()?;
        if self.episode_start_cost.is_none() {
            self.episode_start_cost = Some(before);
        }
        let raw = env.features(cfg.feature_height)?;
        let features = PpoAgent::preprocess(&raw.values);
        let (action, log_prob, value) = agent.act(&features, rng)?;
        let after = match env.propose(MoveKind::ALL[action], rng) {
            Ok(()) => {
                let c = env.cost()?;
                if c > before && !cfg.keep_worse {
                    env.revert();
                    before
                } else {
                    c
                }
            }
            Err(_) => before,
        };
        let reward = before - after;
        if !reward.is_finite() {
            return Err(ModelError::NonFinite("reward".into()));
        }
        self.trajectory.steps.push(Transition {
            features,
            action,
            log_prob,
            reward,
            value,
        });
        if self.best.as_ref().is_none_or(|(c, _)| after < *c) {
            self.best = Some((after, env.save()));
        }
        if self.trajectory.steps.len() >= cfg.steps_per_trajectory {
            self.end_episode(env, agent, cfg, rng, after)?;
        }
        Ok(StepOutcome {
            accepted: true,
            delta: after - before,
            cost: after,
        })
    }

    fn end_episode<E, R>(&mut self, env: &mut E, agent: &mut PpoAgent, cfg: &PpoConfig, rng: &mut R, end_cost: f64) -> Result<(), ModelError>
    where
        E: SearchEnv<Saved = S>,
        R: Rng + ?Sized,
    {
        let mut traj = std::mem::take(&mut self.trajectory);
        traj.finish(cfg.eta);
        self.episode_log.push(EpisodeRecord {
            total_reward: traj.total_reward(),
            start_cost: self.episode_start_cost.take().unwrap_or(end_cost),
            end_cost,
        });
        self.last_stats = Some(agent.update(&[traj], cfg, rng)?);
        self.episodes += 1;
        if let Some((_, s)) = &self.best {
            if !env.load(s) {
                self.best = None;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlRun<S> {
    pub best: S,
    pub best_cost: f64,
    pub steps: usize,
    pub log: Vec<(usize, f64)>,
    pub episodes: Vec<EpisodeRecord>,
}

/// Runs PPO floorplanning on one environment until convergence or budget; the
/// environment is left in its best-seen state.
pub fn rl_run<E, R>(
    env: &mut E,
    agent: &mut PpoAgent,
    cfg: &PpoConfig,
    rng: &mut R,
    mut step_hook: impl FnMut(usize, &StepOutcome, &mut E),
) -> Result<RlRun<E::Saved>, ModelError>
where
    E: SearchEnv,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    if agent.policy.n_inputs() != 5 * cfg.feature_height || agent.policy.n_outputs() != MoveKind::ALL.len() {
        return Err(ModelError::Config("agent dimensions do not match 5·h features and 4 actions".into()));
    }
    let mut stepper: RlStepper<E::Saved> = RlStepper::new();
    let mut best_cost = env.cost()?;
    let mut best = env.save();
    let mut conv = Convergence::new(cfg.window, cfg.stop_epsilon);
    let mut log = Vec::new();
    let mut steps = 0;
    while steps < cfg.max_total_steps {
        let out = stepper.step(env, agent, cfg, rng)?;
        steps += 1;
        step_hook(steps, &out, env);
        if out.cost < best_cost {
            best_cost = out.cost;
            best = env.save();
        }
        log.push((steps, best_cost));
        if conv.push(best_cost) {
            break;
        }
    }
    env.load(&best);
    Ok(RlRun {
        best,
        best_cost,
        steps,
        log,
        episodes: stepper.episode_log,
    })
}
