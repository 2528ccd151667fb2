//! The learning agents: tabular Q-learning, a DQN variant, the episode loop
//! they share, and policy persistence for reuse across objectives.

pub mod dqn;
pub mod episode;
pub mod policy;
pub mod qtable;
pub mod schedule;

pub use dqn::{run_episode_dqn, run_initial_learning_dqn, DqnAgent, QNetwork};
pub use episode::{
    detect_convergence, drift_schedule, run_episode, run_initial_learning, run_transfer_learning,
    AgentError, EpisodeSetup, EpisodeStep, EpisodeTrace, LearnSetup, CONVERGENCE_TOL,
    CONVERGENCE_WINDOW, TRANSFER_EPSILON,
};
pub use policy::{load_policy, save_policy, PolicyError, PolicyKind, PolicySnapshot};
pub use qtable::{q_update, select_action, QTable};
pub use schedule::{AlphaSchedule, EpsilonSchedule, LearningParams};
