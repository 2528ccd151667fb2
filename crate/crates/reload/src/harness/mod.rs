//! Experiment orchestration: runs the six techniques under identical budgets,
//! computes cost savings over post-convergence windows, replays the drifting
//! objective schedule for policy reuse, and sweeps the sensitivity grid.

pub mod report;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::actuator::{Actuator, ActuatorError};
use crate::agent::dqn::{run_initial_learning_dqn, DEFAULT_DQN_ALPHA};
use crate::agent::episode::{
    detect_convergence_in_series, drift_schedule, run_initial_learning, run_transfer_learning,
    AgentError, EpisodeTrace, LearnSetup, CONVERGENCE_TOL, CONVERGENCE_WINDOW, TRANSFER_EPSILON,
};
use crate::agent::schedule::{AlphaSchedule, EpsilonSchedule, LearningParams};
use crate::baselines::{run_random_testing, run_standard_baseline};
use crate::domain::{StateThresholds, TestObjective, TransactionCatalog};
use crate::http::script::{ScriptError, ScriptSet};
use crate::http::{HttpActuator, RunSpec};
use crate::sim::{calibrate_default, SimConfig, Simulator};

/// Savings are averaged over this many trailing episodes.
pub const POST_CONVERGENCE_WINDOW: usize = 10;

/// Default seed for studies; every figure in the docs is reproducible from it.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("actuator: {0}")]
    Actuator(#[from] ActuatorError),
    #[error("scripts: {0}")]
    Script(#[from] ScriptError),
    #[error("cost saving undefined: reference mean is not positive")]
    ZeroReference,
    #[error("{technique} produced no terminal episodes in the savings window")]
    NoTerminalEpisodes { technique: Technique },
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
}

/// The six workload-generation techniques under comparison: three tabular
/// exploration settings, the network agent, and the two non-learning
/// strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Technique {
    #[serde(rename = "eps-0.2")]
    EpsLow,
    #[serde(rename = "eps-0.5")]
    EpsHigh,
    #[serde(rename = "eps-decay")]
    EpsDecay,
    #[serde(rename = "dqn")]
    Dqn,
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "random")]
    Random,
}

impl Technique {
    pub fn all() -> [Technique; 6] {
        [
            Technique::EpsLow,
            Technique::EpsHigh,
            Technique::EpsDecay,
            Technique::Dqn,
            Technique::Baseline,
            Technique::Random,
        ]
    }

    pub fn label(self) -> &'static str {
        match self {
            Technique::EpsLow => "eps-0.2",
            Technique::EpsHigh => "eps-0.5",
            Technique::EpsDecay => "eps-decay",
            Technique::Dqn => "dqn",
            Technique::Baseline => "baseline",
            Technique::Random => "random",
        }
    }

    pub fn parse(text: &str) -> Option<Technique> {
        Technique::all().into_iter().find(|t| t.label() == text)
    }

    pub fn is_agent(self) -> bool {
        !matches!(self, Technique::Baseline | Technique::Random)
    }

    /// The exploration schedule this technique is defined by; None for the
    /// non-learning strategies.
    pub fn epsilon(self) -> Option<EpsilonSchedule> {
        match self {
            Technique::EpsLow => Some(EpsilonSchedule::Fixed(0.2)),
            Technique::EpsHigh => Some(EpsilonSchedule::Fixed(0.5)),
            Technique::EpsDecay | Technique::Dqn => Some(EpsilonSchedule::decaying_default()),
            Technique::Baseline | Technique::Random => None,
        }
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Which environment a plan runs against.
#[derive(Debug, Clone)]
pub enum ActuatorChoice {
    Sim {
        config: SimConfig,
    },
    Http {
        scripts_path: PathBuf,
        base_url: String,
        duration: Duration,
        ramp_up: Duration,
        timeout: Duration,
    },
}

impl ActuatorChoice {
    /// The calibrated simulator with its noise stream keyed by `seed`.
    pub fn sim_default(seed: u64) -> Self {
        ActuatorChoice::Sim { config: SimConfig { seed, ..calibrate_default() } }
    }

    fn build(&self, catalog: &TransactionCatalog) -> Result<Box<dyn Actuator>, HarnessError> {
        match self {
            ActuatorChoice::Sim { config } => {
                let sim = Simulator::new(catalog.clone(), config.clone())
                    .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
                Ok(Box::new(sim))
            }
            ActuatorChoice::Http { scripts_path, base_url, duration, ramp_up, timeout } => {
                let scripts = ScriptSet::load(scripts_path, catalog)?;
                let spec = RunSpec::new(base_url.clone())
                    .with_duration(*duration)
                    .with_ramp_up(*ramp_up)
                    .with_timeout(*timeout);
                spec.validate()?;
                Ok(Box::new(HttpActuator::new(scripts, spec)))
            }
        }
    }
}

/// One experiment: a technique, an episode budget, an objective (or a
/// drifting schedule of objectives), learning parameters, and an environment.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub technique: Technique,
    pub episodes: u64,
    pub objective: TestObjective,
    /// When present: for the strategies, one episode per listed objective;
    /// for the tabular agent, a transfer phase run after initial learning,
    /// reported on its own.
    pub schedule: Option<Vec<TestObjective>>,
    pub alpha: AlphaSchedule,
    pub gamma: f64,
    pub seed: u64,
    pub actuator: ActuatorChoice,
    pub catalog: TransactionCatalog,
    pub thresholds: Option<StateThresholds>,
    pub initial_users_per_transaction: u32,
    pub max_steps: usize,
}

impl ExperimentPlan {
    pub fn new(technique: Technique, objective: TestObjective, seed: u64) -> Self {
        Self {
            technique,
            episodes: 40,
            objective,
            schedule: None,
            alpha: AlphaSchedule::Fixed(0.5),
            gamma: 0.5,
            seed,
            actuator: ActuatorChoice::sim_default(seed),
            catalog: TransactionCatalog::default_web_shop(),
            thresholds: None,
            initial_users_per_transaction: 1,
            max_steps: 60,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::InvalidPlan("episode budget must be at least 1".into()));
        }
        if self.technique == Technique::Dqn && self.schedule.is_some() {
            return Err(HarnessError::InvalidPlan(
                "objective schedules need a tabular policy; the network agent cannot transfer"
                    .into(),
            ));
        }
        if self.technique.is_agent() {
            self.learning_params()
                .validate()
                .map_err(HarnessError::InvalidPlan)?;
        }
        if self.max_steps == 0 {
            return Err(HarnessError::InvalidPlan("max_steps must be at least 1".into()));
        }
        if self.initial_users_per_transaction == 0 {
            return Err(HarnessError::InvalidPlan(
                "initial users per transaction must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn learning_params(&self) -> LearningParams {
        LearningParams {
            alpha: self.alpha,
            gamma: self.gamma,
            epsilon: self.technique.epsilon().unwrap_or(EpsilonSchedule::Fixed(0.0)),
        }
    }

    fn learn_setup(&self) -> LearnSetup {
        let mut setup = LearnSetup::new(self.objective, self.seed);
        setup.thresholds = self.thresholds;
        setup.initial_users_per_transaction = self.initial_users_per_transaction;
        setup.max_steps = self.max_steps;
        setup
    }
}

/// One episode's outcome: the dependent variable (final total users), whether
/// the objective was reached, and the objective in force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub episode: u64,
    pub final_users: u64,
    pub terminal: bool,
    pub objective: TestObjective,
}

/// Per-technique result: every episode outcome plus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub technique: Technique,
    pub seed: u64,
    pub episodes: Vec<EpisodeOutcome>,
    /// First episode at which the trailing window of final totals is stable.
    pub convergence_episode: Option<u64>,
    /// Mean final users over terminal episodes in the trailing window.
    pub last_window_mean: Option<f64>,
    /// Spread over the same window. The source study reports only means;
    /// the deviation is an extension for context.
    pub last_window_stddev: Option<f64>,
    /// Episodes that hit the step budget without meeting the objective,
    /// over the whole run. These are excluded from savings.
    pub non_terminal_count: u64,
}

impl ExperimentReport {
    pub fn from_outcomes(technique: Technique, seed: u64, episodes: Vec<EpisodeOutcome>) -> Self {
        let series: Vec<u64> = episodes.iter().map(|e| e.final_users).collect();
        let convergence_episode =
            detect_convergence_in_series(&series, CONVERGENCE_WINDOW, CONVERGENCE_TOL)
                .map(|e| e as u64);
        let window_start = episodes.len().saturating_sub(POST_CONVERGENCE_WINDOW);
        let window_terminal: Vec<f64> = episodes[window_start..]
            .iter()
            .filter(|e| e.terminal)
            .map(|e| e.final_users as f64)
            .collect();
        let (last_window_mean, last_window_stddev) = if window_terminal.is_empty() {
            (None, None)
        } else {
            let n = window_terminal.len() as f64;
            let mean = window_terminal.iter().sum::<f64>() / n;
            let var = window_terminal.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (Some(mean), Some(var.sqrt()))
        };
        let non_terminal_count = episodes.iter().filter(|e| !e.terminal).count() as u64;
        Self {
            technique,
            seed,
            episodes,
            convergence_episode,
            last_window_mean,
            last_window_stddev,
            non_terminal_count,
        }
    }

    /// The dependent variable per episode, in order.
    pub fn final_users_series(&self) -> Vec<u64> {
        self.episodes.iter().map(|e| e.final_users).collect()
    }

    fn window_mean_or_err(&self) -> Result<f64, HarnessError> {
        self.last_window_mean
            .ok_or(HarnessError::NoTerminalEpisodes { technique: self.technique })
    }
}

fn outcomes_from_traces(
    traces: &[EpisodeTrace],
    objectives: impl Fn(usize) -> TestObjective,
) -> Vec<EpisodeOutcome> {
    traces
        .iter()
        .enumerate()
        .map(|(i, t)| EpisodeOutcome {
            episode: i as u64,
            final_users: t.final_total_users,
            terminal: t.terminal,
            objective: objectives(i),
        })
        .collect()
}

/// Decorrelates the per-episode seeds of the random strategy.
fn strategy_episode_seed(seed: u64, episode: u64) -> u64 {
    seed ^ (episode + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Executes one plan end to end and summarizes it. Fully deterministic for a
/// given plan on the simulator.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentReport, HarnessError> {
    plan.validate()?;
    let mut env = plan.actuator.build(&plan.catalog)?;
    run_plan_against(plan, env.as_mut())
}

/// As `run_plan`, against a caller-supplied environment (used by the studies
/// to share one simulator configuration, and by tests to inject stubs).
pub fn run_plan_against(
    plan: &ExperimentPlan,
    env: &mut dyn Actuator,
) -> Result<ExperimentReport, HarnessError> {
    plan.validate()?;
    let outcomes = match plan.technique {
        Technique::Baseline | Technique::Random => run_strategy(plan, env)?,
        Technique::Dqn => {
            let (_, traces) = run_initial_learning_dqn(
                env,
                &plan.learning_params(),
                &plan.learn_setup(),
                plan.episodes,
            )?;
            outcomes_from_traces(&traces, |_| plan.objective)
        }
        _ => match &plan.schedule {
            None => {
                let (_, traces) = run_initial_learning(
                    env,
                    &plan.learning_params(),
                    &plan.learn_setup(),
                    plan.episodes,
                )?;
                outcomes_from_traces(&traces, |_| plan.objective)
            }
            Some(schedule) => {
                let (snapshot, _) = run_initial_learning(
                    env,
                    &plan.learning_params(),
                    &plan.learn_setup(),
                    plan.episodes,
                )?;
                let transfer_params = LearningParams {
                    epsilon: EpsilonSchedule::Fixed(TRANSFER_EPSILON),
                    ..plan.learning_params()
                };
                let (_, traces) = run_transfer_learning(
                    env,
                    &snapshot,
                    &transfer_params,
                    schedule,
                    &plan.learn_setup(),
                )?;
                outcomes_from_traces(&traces, |i| schedule[i])
            }
        },
    };
    Ok(ExperimentReport::from_outcomes(plan.technique, plan.seed, outcomes))
}

fn run_strategy(
    plan: &ExperimentPlan,
    env: &mut dyn Actuator,
) -> Result<Vec<EpisodeOutcome>, HarnessError> {
    let objectives: Vec<TestObjective> = match &plan.schedule {
        Some(s) => s.clone(),
        None => vec![plan.objective; plan.episodes as usize],
    };
    let mut outcomes = Vec::with_capacity(objectives.len());
    for (i, &objective) in objectives.iter().enumerate() {
        let run = match plan.technique {
            Technique::Baseline => run_standard_baseline(
                env,
                objective,
                plan.initial_users_per_transaction,
                plan.max_steps,
            )?,
            Technique::Random => run_random_testing(
                env,
                objective,
                plan.initial_users_per_transaction,
                plan.max_steps,
                strategy_episode_seed(plan.seed, i as u64),
            )?,
            _ => unreachable!("run_strategy only handles the non-learning techniques"),
        };
        outcomes.push(EpisodeOutcome {
            episode: i as u64,
            final_users: run.final_total_users,
            terminal: run.terminal,
            objective,
        });
    }
    Ok(outcomes)
}

/// Fraction of reference cost avoided by the agent: (reference − agent) /
/// reference. Negative when the agent is more expensive.
pub fn cost_saving(agent_mean: f64, reference_mean: f64) -> Result<f64, HarnessError> {
    if reference_mean <= 0.0 {
        return Err(HarnessError::ZeroReference);
    }
    Ok((reference_mean - agent_mean) / reference_mean)
}

/// Study-wide configuration with the defaults every report in the docs uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub objective: TestObjective,
    pub alpha: AlphaSchedule,
    pub gamma: f64,
    /// Episode budget for the tabular agents and the strategies.
    pub episodes: u64,
    /// The network agent converges later and gets a slightly larger budget.
    pub dqn_episodes: u64,
    /// SGD step size for the network agent.
    pub dqn_alpha: f64,
    pub transfer_steps: usize,
    pub transfer_rt_step_ms: f64,
    pub transfer_er_step: f64,
    pub initial_users_per_transaction: u32,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            objective: TestObjective { rt_threshold_ms: 1500.0, er_threshold: 0.20 },
            alpha: AlphaSchedule::Fixed(0.5),
            gamma: 0.5,
            episodes: 40,
            dqn_episodes: 45,
            dqn_alpha: DEFAULT_DQN_ALPHA,
            transfer_steps: 10,
            transfer_rt_step_ms: 100.0,
            transfer_er_step: 0.01,
            initial_users_per_transaction: 1,
            max_steps: 60,
            seed: DEFAULT_SEED,
        }
    }
}

impl StudyConfig {
    /// The plan for one technique under this study's shared settings.
    pub fn plan_for(&self, technique: Technique) -> ExperimentPlan {
        let mut plan = ExperimentPlan::new(technique, self.objective, self.seed);
        plan.episodes = if technique == Technique::Dqn { self.dqn_episodes } else { self.episodes };
        plan.alpha = if technique == Technique::Dqn {
            AlphaSchedule::Fixed(self.dqn_alpha)
        } else {
            self.alpha
        };
        plan.gamma = self.gamma;
        plan.initial_users_per_transaction = self.initial_users_per_transaction;
        plan.max_steps = self.max_steps;
        plan
    }

    pub fn drift_schedule(&self) -> Vec<TestObjective> {
        drift_schedule(
            self.objective,
            self.transfer_rt_step_ms,
            self.transfer_er_step,
            self.transfer_steps,
        )
    }
}

/// Mean final users and savings of the decaying-ε agent against both
/// non-learning references over a matched window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavingsSummary {
    pub agent_mean: f64,
    pub baseline_mean: f64,
    pub random_mean: f64,
    pub saving_vs_baseline: f64,
    pub saving_vs_random: f64,
}

impl SavingsSummary {
    fn from_reports(
        agent: &ExperimentReport,
        baseline: &ExperimentReport,
        random: &ExperimentReport,
    ) -> Result<Self, HarnessError> {
        let agent_mean = agent.window_mean_or_err()?;
        let baseline_mean = baseline.window_mean_or_err()?;
        let random_mean = random.window_mean_or_err()?;
        Ok(Self {
            agent_mean,
            baseline_mean,
            random_mean,
            saving_vs_baseline: cost_saving(agent_mean, baseline_mean)?,
            saving_vs_random: cost_saving(agent_mean, random_mean)?,
        })
    }
}

/// The full efficiency study: six techniques on the initial objective, then
/// the drifting-objective transfer phase for the decaying-ε agent and both
/// references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyStudy {
    /// Order: eps-0.2, eps-0.5, eps-decay, dqn, baseline, random.
    pub initial: Vec<ExperimentReport>,
    pub initial_savings: SavingsSummary,
    /// Order: eps-decay (transfer), baseline, random; one episode per
    /// drifted objective.
    pub transfer: Vec<ExperimentReport>,
    pub transfer_savings: SavingsSummary,
}

impl EfficiencyStudy {
    pub fn initial_report(&self, technique: Technique) -> &ExperimentReport {
        self.initial.iter().find(|r| r.technique == technique).expect("all six present")
    }

    pub fn transfer_report(&self, technique: Technique) -> &ExperimentReport {
        self.transfer.iter().find(|r| r.technique == technique).expect("three present")
    }
}

/// Runs the six-technique comparison and the transfer phase.
pub fn run_efficiency_study(config: &StudyConfig) -> Result<EfficiencyStudy, HarnessError> {
    let mut initial = Vec::with_capacity(6);
    for technique in Technique::all() {
        initial.push(run_plan(&config.plan_for(technique))?);
    }
    let initial_savings = SavingsSummary::from_reports(
        &initial[2], // eps-decay
        &initial[4], // baseline
        &initial[5], // random
    )?;

    let schedule = config.drift_schedule();
    let mut transfer = Vec::with_capacity(3);
    for technique in [Technique::EpsDecay, Technique::Baseline, Technique::Random] {
        let mut plan = config.plan_for(technique);
        plan.schedule = Some(schedule.clone());
        transfer.push(run_plan(&plan)?);
    }
    let transfer_savings =
        SavingsSummary::from_reports(&transfer[0], &transfer[1], &transfer[2])?;

    Ok(EfficiencyStudy { initial, initial_savings, transfer, transfer_savings })
}

/// One sensitivity cell: a learning-rate/discount pairing with the
/// decaying-ε exploration schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCell {
    pub alpha: AlphaSchedule,
    pub gamma: f64,
    pub report: ExperimentReport,
}

/// The four-cell sensitivity sweep plus the matched-seed reference run
/// (α=0.5, γ=0.5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityStudy {
    pub cells: Vec<SensitivityCell>,
    pub reference: ExperimentReport,
}

/// Runs the sensitivity grid: {α=0.1, γ=0.5}, {α=visit-decay, γ=0.5},
/// {α=0.5, γ=0.1}, {α=0.5, γ=0.9}.
pub fn run_sensitivity_study(config: &StudyConfig) -> Result<SensitivityStudy, HarnessError> {
    let grid: [(AlphaSchedule, f64); 4] = [
        (AlphaSchedule::Fixed(0.1), 0.5),
        (AlphaSchedule::VisitDecay, 0.5),
        (AlphaSchedule::Fixed(0.5), 0.1),
        (AlphaSchedule::Fixed(0.5), 0.9),
    ];
    let mut cells = Vec::with_capacity(grid.len());
    for (alpha, gamma) in grid {
        let mut plan = config.plan_for(Technique::EpsDecay);
        plan.alpha = alpha;
        plan.gamma = gamma;
        let report = run_plan(&plan)?;
        cells.push(SensitivityCell { alpha, gamma, report });
    }
    let reference = run_plan(&config.plan_for(Technique::EpsDecay))?;
    Ok(SensitivityStudy { cells, reference })
}
