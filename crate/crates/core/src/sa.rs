// SPDX-License-Identifier: Apache-2.0

//! Simulated annealing over one die's B*-tree.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bstar::MoveKind;
use crate::error::ModelError;
use crate::floorplan::SearchEnv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub t_initial: f64,
    pub cooling: f64,
    pub stop_epsilon: f64,
    pub moves_per_temperature: usize,
    pub max_total_steps: usize,
    /// Length of the best-objective improvement window.
    pub window: usize,
    pub moves: Vec<MoveKind>,
    /// Resamples of the move kind after a no-op before the step counts as rejected.
    pub max_resample: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            t_initial: 400.0,
            cooling: 0.85,
            stop_epsilon: 1e-4,
            moves_per_temperature: 30,
            max_total_steps: 2500,
            window: 100,
            moves: MoveKind::ALL.to_vec(),
            max_resample: 8,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(ModelError::Config("cooling must lie in (0, 1)".into()));
        }
        if !(self.stop_epsilon > 0.0) {
            return Err(ModelError::Config("stop_epsilon must be positive".into()));
        }
        if !(self.t_initial >= 0.0) {
            return Err(ModelError::Config("t_initial must be >= 0".into()));
        }
        if self.moves_per_temperature == 0 || self.window == 0 || self.moves.is_empty() {
            return Err(ModelError::Config("SA plateau, window and move set must be nonempty".into()));
        }
        Ok(())
    }
}

/// Metropolis acceptance probability.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if temperature <= 0.0 {
        0.0
    } else {
        (-delta / temperature).exp()
    }
}

/// Stops once the best objective improved by less than `epsilon` (relative) over the
/// last `window` observations.
#[derive(Debug, Clone)]
pub struct Convergence {
    window: usize,
    epsilon: f64,
    history: VecDeque<f64>,
}

impl Convergence {
    pub fn new(window: usize, epsilon: f64) -> Self {
        Self {
            window: window.max(1),
            epsilon,
            history: VecDeque::with_capacity(window + 1),
        }
    }

    /// Records the best-so-far value after one step; true when converged.
    pub fn push(&mut self, best: f64) -> bool {
        self.push_scaled(best, best)
    }

    /// As [`Convergence::push`], measuring improvement relative to `scale`
    /// (e.g. the unpenalized objective of the best state).
    pub fn push_scaled(&mut self, best: f64, scale: f64) -> bool {
        self.history.push_back(best);
        if self.history.len() <= self.window {
            return false;
        }
        let old = self.history.pop_front().expect("nonempty");
        (old - best) / scale.abs().max(f64::MIN_POSITIVE) < self.epsilon
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub delta: f64,
    /// Environment cost after the step.
    pub cost: f64,
}

/// One Metropolis step: sample a move kind, perturb, accept or revert.
pub fn sa_step<E: SearchEnv, R: Rng + ?Sized>(
    env: &mut E,
    temperature: f64,
    moves: &[MoveKind],
    max_resample: usize,
    rng: &mut R,
) -> Result<StepOutcome, ModelError> {
    let current = env.cost()?;
    for _ in 0..=max_resample {
        let kind = *moves.choose(rng).expect("nonempty move set");
        if env.propose(kind, rng).is_err() {
            continue;
        }
        let candidate = env.cost()?;
        let delta = candidate - current;
        let accept = delta <= 0.0 || rng.gen::<f64>() < acceptance_probability(delta, temperature);
        if accept {
            return Ok(StepOutcome {
                accepted: true,
                delta,
                cost: candidate,
            });
        }
        env.revert();
        return Ok(StepOutcome {
            accepted: false,
            delta,
            cost: current,
        });
    }
    Ok(StepOutcome {
        accepted: false,
        delta: 0.0,
        cost: current,
    })
}

/// Annealing schedule for one die, advanced one step at a time.
#[derive(Debug, Clone)]
pub struct SaStepper {
    pub temperature: f64,
    since_cooling: usize,
}

impl SaStepper {
    pub fn new(cfg: &SaConfig) -> Self {
        Self {
            temperature: cfg.t_initial,
            since_cooling: 0,
        }
    }

    pub fn step<E: SearchEnv, R: Rng + ?Sized>(&mut self, env: &mut E, cfg: &SaConfig, rng: &mut R) -> Result<StepOutcome, ModelError> {
        let out = sa_step(env, self.temperature, &cfg.moves, cfg.max_resample, rng)?;
        self.since_cooling += 1;
        if self.since_cooling == cfg.moves_per_temperature {
            self.since_cooling = 0;
            self.temperature *= cfg.cooling;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaRun<S> {
    pub best: S,
    pub best_cost: f64,
    pub steps: usize,
    /// `(step, best cost)` after every step.
    pub log: Vec<(usize, f64)>,
}

/// Runs annealing to convergence or budget. `snapshot` captures the environment's
/// state whenever a new best is seen; `step_hook` runs after every step.
pub fn sa_run<E, S, R>(
    env: &mut E,
    cfg: &SaConfig,
    rng: &mut R,
    mut snapshot: impl FnMut(&E) -> S,
    mut step_hook: impl FnMut(usize, &StepOutcome, &mut E),
) -> Result<SaRun<S>, ModelError>
where
    E: SearchEnv,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut stepper = SaStepper::new(cfg);
    let mut best_cost = env.cost()?;
    let mut best = snapshot(env);
    let mut conv = Convergence::new(cfg.window, cfg.stop_epsilon);
    let mut log = Vec::new();
    let mut steps = 0;
    while steps < cfg.max_total_steps {
        let out = stepper.step(env, cfg, rng)?;
        steps += 1;
        step_hook(steps, &out, env);
        let cost = env.cost()?;
        if cost < best_cost {
            best_cost = cost;
            best = snapshot(env);
        }
        log.push((steps, best_cost));
        if conv.push(best_cost) {
            break;
        }
    }
    Ok(SaRun {
        best,
        best_cost,
        steps,
        log,
    })
}
