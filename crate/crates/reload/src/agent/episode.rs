//! The episode loop and the two learning phases: initial learning from a
//! zero-initialized table and transfer reuse of a stored policy across a
//! schedule of shifted objectives.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuator::{Actuator, ActuatorError, StepKey};
use crate::agent::policy::{PolicyKind, PolicySnapshot, SNAPSHOT_FORMAT_VERSION};
use crate::agent::qtable::{q_update, select_action, QTable};
use crate::agent::schedule::LearningParams;
use crate::domain::{
    apply_action, classify_state, objective_met, reward, ActionId, PerfMeasurement,
    StateThresholds, SutState, TestObjective, Workload,
};

/// Errors from running episodes.
#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("agent: episode {episode} step {step}: {source}")]
    Actuator {
        episode: u64,
        step: u64,
        #[source]
        source: ActuatorError,
    },
    #[error("agent: snapshot incompatible with environment: {0}")]
    CatalogMismatch(String),
    #[error("agent: invalid learning parameters: {0}")]
    InvalidParams(String),
}

/// One executed step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub state: SutState,
    pub action: ActionId,
    pub reward: f64,
    pub next_state: SutState,
    /// Total users of the workload this step executed.
    pub workload_total: u64,
    pub measurement: PerfMeasurement,
}

/// The record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode: u64,
    pub steps: Vec<EpisodeStep>,
    /// True iff the last measurement met the objective.
    pub terminal: bool,
    pub final_total_users: u64,
}

impl EpisodeTrace {
    /// True when the episode stopped on the step budget instead of the objective.
    pub fn budget_exhausted(&self) -> bool {
        !self.terminal
    }
}

/// Per-episode fixtures: what to reach, how to classify, where to start.
#[derive(Debug, Clone)]
pub struct EpisodeSetup {
    pub objective: TestObjective,
    pub thresholds: StateThresholds,
    pub initial: Workload,
    pub max_steps: usize,
}

impl EpisodeSetup {
    /// Default setup for an objective: derived thresholds, one user per
    /// transaction, sixty-step budget.
    pub fn for_objective(objective: TestObjective, transactions: usize) -> Self {
        Self {
            objective,
            thresholds: StateThresholds::for_objective(objective),
            initial: Workload::uniform(transactions, DEFAULT_INITIAL_USERS_PER_TX),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

/// Default starting load: one user on every transaction.
pub const DEFAULT_INITIAL_USERS_PER_TX: u32 = 1;

/// Default per-episode step budget.
pub const DEFAULT_MAX_STEPS: usize = 60;

/// Runs one episode: from the quiet state, repeatedly select an action, grow
/// and execute the workload, classify the new state, compute the reward and
/// update the table, until the objective is met or the step budget runs out
/// (the trace is then flagged non-terminal rather than an error).
///
/// The stopping check runs after each executed workload, so a starting load
/// that already violates the objective still yields a one-step trace.
pub fn run_episode<R: Rng>(
    env: &mut dyn Actuator,
    q: &mut QTable,
    params: &LearningParams,
    setup: &EpisodeSetup,
    episode: u64,
    rng: &mut R,
) -> Result<EpisodeTrace, AgentError> {
    let eps = params.epsilon.at(episode);
    let mut workload = setup.initial.clone();
    let mut state = classify_state(PerfMeasurement::zero(), setup.thresholds);
    let mut steps = Vec::new();
    let mut terminal = false;

    for step_i in 0..setup.max_steps {
        let action = select_action(q, state, eps, rng);
        let grown = apply_action(&workload, action);
        let key = StepKey { episode, step: step_i as u64 };
        let m = env
            .run(&grown, key)
            .map_err(|source| AgentError::Actuator { episode, step: key.step, source })?;
        let next_state = classify_state(m, setup.thresholds);
        let r = reward(m, setup.objective);
        let alpha = params.alpha.at(q.visits(state, action));
        q_update(q, state, action, r, next_state, alpha, params.gamma);
        steps.push(EpisodeStep {
            state,
            action,
            reward: r,
            next_state,
            workload_total: grown.total(),
            measurement: m,
        });
        workload = grown;
        state = next_state;
        if objective_met(m, setup.objective) {
            terminal = true;
            break;
        }
    }

    Ok(EpisodeTrace { episode, steps, terminal, final_total_users: workload.total() })
}

/// Learning-phase fixtures shared by all episodes of a run.
#[derive(Debug, Clone)]
pub struct LearnSetup {
    pub objective: TestObjective,
    /// Explicit class boundaries; derived from the objective when absent.
    pub thresholds: Option<StateThresholds>,
    pub initial_users_per_transaction: u32,
    pub max_steps: usize,
    pub seed: u64,
}

impl LearnSetup {
    pub fn new(objective: TestObjective, seed: u64) -> Self {
        Self {
            objective,
            thresholds: None,
            initial_users_per_transaction: DEFAULT_INITIAL_USERS_PER_TX,
            max_steps: DEFAULT_MAX_STEPS,
            seed,
        }
    }

    fn episode_setup(&self, objective: TestObjective, transactions: usize) -> EpisodeSetup {
        EpisodeSetup {
            objective,
            thresholds: self.thresholds.unwrap_or_else(|| StateThresholds::for_objective(objective)),
            initial: Workload::uniform(transactions, self.initial_users_per_transaction),
            max_steps: self.max_steps,
        }
    }
}

/// Initial learning: runs the episode budget from a zero table with the
/// configured ε schedule and returns the stored policy plus all traces.
/// With a fixed seed the result is bit-identical across runs.
pub fn run_initial_learning(
    env: &mut dyn Actuator,
    params: &LearningParams,
    setup: &LearnSetup,
    episodes_budget: u64,
) -> Result<(PolicySnapshot, Vec<EpisodeTrace>), AgentError> {
    params.validate().map_err(AgentError::InvalidParams)?;
    if episodes_budget == 0 {
        return Err(AgentError::InvalidParams("episodes budget must be at least 1".into()));
    }
    let transactions = env.catalog().len();
    let mut q = QTable::new(transactions);
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let episode_setup = setup.episode_setup(setup.objective, transactions);
    let mut traces = Vec::with_capacity(episodes_budget as usize);
    for episode in 0..episodes_budget {
        traces.push(run_episode(env, &mut q, params, &episode_setup, episode, &mut rng)?);
    }
    let snapshot = PolicySnapshot {
        format_version: SNAPSHOT_FORMAT_VERSION,
        policy: PolicyKind::Tabular { q_table: q },
        catalog: env.catalog().clone(),
        thresholds: episode_setup.thresholds,
        objective: setup.objective,
        episodes: episodes_budget,
    };
    Ok((snapshot, traces))
}

/// Transfer ε: low and fixed, so reuse is exploitation-dominant.
pub const TRANSFER_EPSILON: f64 = 0.05;

/// Transfer learning: resumes from a stored tabular policy and runs one
/// episode per objective in the schedule, continuing Q-updates throughout.
/// Thresholds are re-derived from each episode's objective unless the setup
/// pins explicit ones, so state classes track the drifting objective.
/// Returns the updated snapshot and the transfer traces.
pub fn run_transfer_learning(
    env: &mut dyn Actuator,
    snapshot: &PolicySnapshot,
    params_transfer: &LearningParams,
    schedule: &[TestObjective],
    setup: &LearnSetup,
) -> Result<(PolicySnapshot, Vec<EpisodeTrace>), AgentError> {
    params_transfer.validate().map_err(AgentError::InvalidParams)?;
    if snapshot.catalog != *env.catalog() {
        return Err(AgentError::CatalogMismatch(format!(
            "snapshot catalog ({} transactions) differs from environment catalog ({})",
            snapshot.catalog.len(),
            env.catalog().len()
        )));
    }
    let mut q = match &snapshot.policy {
        PolicyKind::Tabular { q_table } => q_table.clone(),
        PolicyKind::Dqn { .. } => {
            return Err(AgentError::InvalidParams(
                "transfer learning needs a tabular policy snapshot".into(),
            ))
        }
    };
    let transactions = env.catalog().len();
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed ^ TRANSFER_SEED_SALT);
    let mut traces = Vec::with_capacity(schedule.len());
    let mut last_thresholds = snapshot.thresholds;
    for (i, &objective) in schedule.iter().enumerate() {
        // Episode numbering continues after the stored run so noise keys stay fresh.
        let episode = snapshot.episodes + i as u64;
        let episode_setup = setup.episode_setup(objective, transactions);
        last_thresholds = episode_setup.thresholds;
        traces.push(run_episode(env, &mut q, params_transfer, &episode_setup, episode, &mut rng)?);
    }
    let updated = PolicySnapshot {
        format_version: SNAPSHOT_FORMAT_VERSION,
        policy: PolicyKind::Tabular { q_table: q },
        catalog: snapshot.catalog.clone(),
        thresholds: last_thresholds,
        objective: schedule.last().copied().unwrap_or(snapshot.objective),
        episodes: snapshot.episodes + schedule.len() as u64,
    };
    Ok((updated, traces))
}

/// Distinguishes the transfer RNG stream from the initial-learning stream
/// under the same user-facing seed.
const TRANSFER_SEED_SALT: u64 = 0x7452_414E_5346_4552;

/// Builds a drift schedule: `count` objectives stepping away from `initial`,
/// starting one step after it.
pub fn drift_schedule(
    initial: TestObjective,
    rt_step_ms: f64,
    er_step: f64,
    count: usize,
) -> Vec<TestObjective> {
    (1..=count)
        .map(|i| TestObjective {
            rt_threshold_ms: initial.rt_threshold_ms + rt_step_ms * i as f64,
            er_threshold: initial.er_threshold + er_step * i as f64,
        })
        .collect()
}

/// Default convergence window: episodes compared at a time.
pub const CONVERGENCE_WINDOW: usize = 5;

/// Default relative-range tolerance for convergence.
pub const CONVERGENCE_TOL: f64 = 0.15;

/// First episode index `e` whose trailing window of final totals has
/// (max − min) / mean ≤ tol; `None` if no window qualifies.
pub fn detect_convergence(traces: &[EpisodeTrace], window: usize, tol: f64) -> Option<usize> {
    let series: Vec<u64> = traces.iter().map(|t| t.final_total_users).collect();
    detect_convergence_in_series(&series, window, tol)
}

/// The same windowed relative-range rule on a bare series.
pub fn detect_convergence_in_series(series: &[u64], window: usize, tol: f64) -> Option<usize> {
    assert!(window >= 2, "window must be at least 2");
    if series.len() < window {
        return None;
    }
    for e in (window - 1)..series.len() {
        let slice = &series[e + 1 - window..=e];
        let max = *slice.iter().max().unwrap() as f64;
        let min = *slice.iter().min().unwrap() as f64;
        let mean = slice.iter().sum::<u64>() as f64 / window as f64;
        if mean > 0.0 && (max - min) / mean <= tol {
            return Some(e);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::schedule::{AlphaSchedule, EpsilonSchedule};
    use crate::sim::{calibrate_default, SimConfig, Simulator};
    use crate::domain::TransactionCatalog;

    fn default_objective() -> TestObjective {
        TestObjective { rt_threshold_ms: 1500.0, er_threshold: 0.20 }
    }

    fn sim_env(seed: u64) -> Simulator {
        Simulator::default_web_shop(seed)
    }

    fn tiny_capacity_env() -> Simulator {
        // Capacity so small the one-user-per-transaction load already violates.
        let cfg = SimConfig { capacity: 1.0, noise_amplitude: 0.0, ..calibrate_default() };
        Simulator::new(TransactionCatalog::default_web_shop(), cfg).unwrap()
    }

    #[test]
    fn immediate_violation_yields_one_terminal_step() {
        let mut env = tiny_capacity_env();
        let mut q = QTable::new(11);
        let params = LearningParams::default();
        let setup = EpisodeSetup::for_objective(default_objective(), 11);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = run_episode(&mut env, &mut q, &params, &setup, 0, &mut rng).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert!(trace.terminal);
        assert!(!trace.budget_exhausted());
    }

    #[test]
    fn step_budget_caps_the_trace() {
        let mut env = sim_env(3);
        let mut q = QTable::new(11);
        let params = LearningParams::default();
        let mut setup = EpisodeSetup::for_objective(default_objective(), 11);
        setup.max_steps = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trace = run_episode(&mut env, &mut q, &params, &setup, 0, &mut rng).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert!(!trace.terminal);
        assert!(trace.budget_exhausted());
    }

    #[test]
    fn workload_totals_strictly_increase_within_episodes() {
        for seed in 0..10 {
            let mut env = sim_env(seed);
            let mut q = QTable::new(11);
            let params = LearningParams::default();
            let setup = EpisodeSetup::for_objective(default_objective(), 11);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = run_episode(&mut env, &mut q, &params, &setup, 0, &mut rng).unwrap();
            for pair in trace.steps.windows(2) {
                assert!(pair[1].workload_total > pair[0].workload_total);
            }
            assert_eq!(
                trace.final_total_users,
                trace.steps.last().unwrap().workload_total
            );
        }
    }

    #[test]
    fn terminal_flag_matches_last_measurement() {
        let mut env = sim_env(4);
        let mut q = QTable::new(11);
        let params = LearningParams::default();
        let setup = EpisodeSetup::for_objective(default_objective(), 11);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trace = run_episode(&mut env, &mut q, &params, &setup, 0, &mut rng).unwrap();
        let last = trace.steps.last().unwrap();
        assert_eq!(trace.terminal, objective_met(last.measurement, setup.objective));
    }

    #[test]
    fn single_episode_budget_snapshot() {
        let mut env = sim_env(5);
        let params = LearningParams::default();
        let setup = LearnSetup::new(default_objective(), 5);
        let (snapshot, traces) = run_initial_learning(&mut env, &params, &setup, 1).unwrap();
        assert_eq!(snapshot.episodes, 1);
        assert_eq!(traces.len(), 1);
        assert_eq!(snapshot.catalog.len(), 11);
    }

    #[test]
    fn identical_seeds_give_bit_identical_snapshots() {
        let params = LearningParams::default();
        let setup = LearnSetup::new(default_objective(), 77);
        let mut env1 = sim_env(77);
        let (snap1, traces1) = run_initial_learning(&mut env1, &params, &setup, 15).unwrap();
        let mut env2 = sim_env(77);
        let (snap2, traces2) = run_initial_learning(&mut env2, &params, &setup, 15).unwrap();
        assert_eq!(snap1, snap2);
        assert_eq!(traces1, traces2);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let mut env = sim_env(1);
        let params = LearningParams::default();
        let setup = LearnSetup::new(default_objective(), 1);
        assert!(matches!(
            run_initial_learning(&mut env, &params, &setup, 0),
            Err(AgentError::InvalidParams(_))
        ));
    }

    #[test]
    fn drift_schedule_endpoints() {
        let schedule = drift_schedule(default_objective(), 100.0, 0.01, 10);
        assert_eq!(schedule.len(), 10);
        assert_eq!(schedule[0].rt_threshold_ms, 1600.0);
        assert!((schedule[0].er_threshold - 0.21).abs() < 1e-12);
        assert_eq!(schedule[9].rt_threshold_ms, 2500.0);
        assert!((schedule[9].er_threshold - 0.30).abs() < 1e-12);
    }

    #[test]
    fn transfer_runs_one_episode_per_objective() {
        let params = LearningParams::default();
        let setup = LearnSetup::new(default_objective(), 21);
        let mut env = sim_env(21);
        let (snapshot, _) = run_initial_learning(&mut env, &params, &setup, 10).unwrap();
        let schedule = drift_schedule(default_objective(), 100.0, 0.01, 10);
        let transfer_params = LearningParams {
            epsilon: EpsilonSchedule::Fixed(TRANSFER_EPSILON),
            ..params
        };
        let (updated, traces) =
            run_transfer_learning(&mut env, &snapshot, &transfer_params, &schedule, &setup).unwrap();
        assert_eq!(traces.len(), 10);
        assert_eq!(updated.episodes, 20);
        assert_eq!(updated.objective, schedule[9]);
        // Episode numbering continues after the stored run.
        assert_eq!(traces[0].episode, 10);
        assert_eq!(traces[9].episode, 19);
    }

    #[test]
    fn transfer_with_empty_schedule_is_empty() {
        let params = LearningParams::default();
        let setup = LearnSetup::new(default_objective(), 22);
        let mut env = sim_env(22);
        let (snapshot, _) = run_initial_learning(&mut env, &params, &setup, 3).unwrap();
        let (updated, traces) =
            run_transfer_learning(&mut env, &snapshot, &params, &[], &setup).unwrap();
        assert!(traces.is_empty());
        assert_eq!(updated.episodes, snapshot.episodes);
    }

    #[test]
    fn transfer_rejects_mismatched_catalog() {
        let params = LearningParams::default();
        let setup = LearnSetup::new(default_objective(), 23);
        let mut env = sim_env(23);
        let (snapshot, _) = run_initial_learning(&mut env, &params, &setup, 2).unwrap();
        let small_catalog = TransactionCatalog::new(["only", "two"]).unwrap();
        let cfg = SimConfig {
            base_demand_ms: vec![10.0, 20.0],
            ..calibrate_default()
        };
        let mut other_env = Simulator::new(small_catalog, cfg).unwrap();
        assert!(matches!(
            run_transfer_learning(&mut other_env, &snapshot, &params, &[], &setup),
            Err(AgentError::CatalogMismatch(_))
        ));
    }

    #[test]
    fn convergence_constant_series_fires_at_first_full_window() {
        let series = vec![50u64; 12];
        assert_eq!(detect_convergence_in_series(&series, 5, 0.15), Some(4));
    }

    #[test]
    fn convergence_doubling_series_never_fires() {
        let series: Vec<u64> = (0..12).map(|i| 10u64 << i).collect();
        assert_eq!(detect_convergence_in_series(&series, 5, 0.1), None);
    }

    #[test]
    fn convergence_matches_independent_window_scan() {
        // Second implementation of the same rule, written differently.
        fn oracle(series: &[u64], window: usize, tol: f64) -> Option<usize> {
            (0..series.len())
                .filter(|&e| e + 1 >= window)
                .find(|&e| {
                    let w: Vec<f64> =
                        series[e + 1 - window..=e].iter().map(|&x| x as f64).collect();
                    let max = w.iter().cloned().fold(f64::MIN, f64::max);
                    let min = w.iter().cloned().fold(f64::MAX, f64::min);
                    let mean = w.iter().sum::<f64>() / w.len() as f64;
                    (max - min) / mean <= tol
                })
        }
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(1..60);
            let series: Vec<u64> = (0..n).map(|_| rng.random_range(30..110)).collect();
            for window in [2usize, 3, 5, 8] {
                for tol in [0.05, 0.15, 0.4] {
                    assert_eq!(
                        detect_convergence_in_series(&series, window, tol),
                        oracle(&series, window, tol),
                        "series {series:?} window {window} tol {tol}"
                    );
                }
            }
        }
    }

    #[test]
    fn learning_on_the_simulator_converges_within_budget() {
        // Decaying-ε learning must stabilize inside a 40-episode budget.
        let params = LearningParams {
            alpha: AlphaSchedule::Fixed(0.5),
            gamma: 0.5,
            epsilon: EpsilonSchedule::decaying_default(),
        };
        let setup = LearnSetup::new(default_objective(), 42);
        let mut env = sim_env(42);
        let (_, traces) = run_initial_learning(&mut env, &params, &setup, 40).unwrap();
        let conv = detect_convergence(&traces, CONVERGENCE_WINDOW, CONVERGENCE_TOL);
        assert!(conv.is_some(), "no convergence within 40 episodes");
        assert!(conv.unwrap() <= 40);
    }
}
