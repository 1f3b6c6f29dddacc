// SPDX-License-Identifier: Apache-2.0

// `!(x > 0.0)` style guards reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod bench;
pub mod bstar;
pub mod cli;
pub mod error;
pub mod floorplan;
pub mod io;
pub mod model;
pub mod orchestrator;
pub mod partition;
pub mod ppo;
pub mod sa;
pub mod svg;
