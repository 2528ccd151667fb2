//! Non-learning comparison strategies: a standard baseline that grows every
//! transaction in lockstep, and random testing that grows one uniformly
//! chosen transaction per step.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actuator::{Actuator, ActuatorError, StepKey};
use crate::domain::{
    apply_action, grow_users, objective_met, ActionId, PerfMeasurement, TestObjective, Workload,
};

/// Both strategies are replayed against a fixed noise stream so that a rerun
/// is step-for-step identical: the standard baseline has no randomness at all,
/// and random testing's only randomness is its own seeded transaction choice.
const STRATEGY_NOISE_EPISODE: u64 = 0;

/// One executed step of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyStep {
    pub workload: Workload,
    pub measurement: PerfMeasurement,
}

/// A full strategy run: every executed workload with its measurement, in
/// order, ending either at the objective or at the step budget.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub steps: Vec<StrategyStep>,
    pub final_total_users: u64,
    pub terminal: bool,
}

impl StrategyRun {
    fn from_steps(steps: Vec<StrategyStep>, terminal: bool) -> Self {
        let final_total_users = steps.last().map(|s| s.workload.total()).unwrap_or(0);
        Self { steps, final_total_users, terminal }
    }
}

/// Grows the workload uniformly: one third more users on every transaction,
/// rounded up per entry.
fn grow_all(w: &Workload) -> Workload {
    Workload::new(w.users().iter().map(|&u| grow_users(u)).collect())
}

/// The standard baseline: start with the same user count on every transaction
/// and grow all of them by a third (ceiling-rounded) each step until the
/// objective is met or `max_steps` measurements have been taken. The initial
/// workload is executed before any growth.
pub fn run_standard_baseline(
    env: &mut dyn Actuator,
    objective: TestObjective,
    initial_per_tx: u32,
    max_steps: usize,
) -> Result<StrategyRun, ActuatorError> {
    assert!(initial_per_tx >= 1, "need at least one user per transaction");
    assert!(max_steps >= 1, "need at least one step");
    let mut workload = Workload::uniform(env.catalog().len(), initial_per_tx);
    let mut steps = Vec::new();
    let mut terminal = false;
    for step_i in 0..max_steps {
        if step_i > 0 {
            workload = grow_all(&workload);
        }
        let key = StepKey { episode: STRATEGY_NOISE_EPISODE, step: step_i as u64 };
        let m = env.run(&workload, key)?;
        steps.push(StrategyStep { workload: workload.clone(), measurement: m });
        if objective_met(m, objective) {
            terminal = true;
            break;
        }
    }
    Ok(StrategyRun::from_steps(steps, terminal))
}

/// Random testing: start uniform like the baseline, then grow one uniformly
/// chosen transaction per step (the shared growth rule) until the objective
/// is met or the step budget runs out. Fully reproducible from the seed.
pub fn run_random_testing(
    env: &mut dyn Actuator,
    objective: TestObjective,
    initial_per_tx: u32,
    max_steps: usize,
    seed: u64,
) -> Result<StrategyRun, ActuatorError> {
    assert!(initial_per_tx >= 1, "need at least one user per transaction");
    assert!(max_steps >= 1, "need at least one step");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transactions = env.catalog().len();
    let mut workload = Workload::uniform(transactions, initial_per_tx);
    let mut steps = Vec::new();
    let mut terminal = false;
    for step_i in 0..max_steps {
        if step_i > 0 {
            let k = rng.random_range(0..transactions);
            workload = apply_action(&workload, ActionId { k });
        }
        let key = StepKey { episode: STRATEGY_NOISE_EPISODE, step: step_i as u64 };
        let m = env.run(&workload, key)?;
        steps.push(StrategyStep { workload: workload.clone(), measurement: m });
        if objective_met(m, objective) {
            terminal = true;
            break;
        }
    }
    Ok(StrategyRun::from_steps(steps, terminal))
}
