// SPDX-License-Identifier: Apache-2.0

//! PPO floorplanning: dense networks, the clipped-surrogate agent and the acting loop.

pub mod agent;
pub mod net;
pub mod run;

pub use agent::{advantages, clip_surrogate, PpoAgent, PpoConfig, Trajectory, Transition, UpdateStats};
pub use net::{Activation, DenseNet};
pub use run::{rl_run, RlRun, RlStepper};
