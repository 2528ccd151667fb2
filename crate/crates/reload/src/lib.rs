//! Reinforcement-learning driven load testing.
//!
//! An agent learns, per episode, which transaction of a system under test to
//! scale up so that a target performance state (response time or error rate
//! above a threshold) is reached with as few virtual users as possible, then
//! reuses the learned policy as the test objective drifts.

pub mod actuator;
pub mod agent;
pub mod baselines;
pub mod domain;
pub mod harness;
pub mod http;
pub mod sim;
pub mod stub;
