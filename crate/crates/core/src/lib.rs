//! Simulation core for a four-legged crawling robot.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arena;
pub mod command;
pub mod controller;
pub mod gait;
pub mod kinematics;
pub mod report;
pub mod sensors;
pub mod sim;
mod units;
