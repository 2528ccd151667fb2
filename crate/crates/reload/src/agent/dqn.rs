//! DQN variant of the agent: a small feedforward network over continuous
//! normalized (RT, ER) features replaces the Q-table, trained from an
//! experience replay buffer against a periodically synced target network.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actuator::{Actuator, StepKey};
use crate::agent::episode::{AgentError, EpisodeSetup, EpisodeStep, EpisodeTrace, LearnSetup};
use crate::agent::policy::{PolicyKind, PolicySnapshot, SNAPSHOT_FORMAT_VERSION};
use crate::agent::schedule::{AlphaSchedule, LearningParams};
use crate::domain::{
    apply_action, classify_state, objective_met, reward, ActionId, PerfMeasurement, TestObjective,
};

/// Default hidden-layer width.
pub const DEFAULT_HIDDEN_WIDTH: usize = 16;

/// Default number of hidden layers.
pub const DEFAULT_HIDDEN_LAYERS: usize = 2;

/// Default replay-buffer capacity.
pub const DEFAULT_REPLAY_CAPACITY: usize = 1_000;

/// Default training batch size.
pub const DEFAULT_BATCH_SIZE: usize = 32;

/// Default target-network sync period, in environment steps.
pub const DEFAULT_SYNC_PERIOD: usize = 25;

/// Default SGD step size for the network (the tabular default is far too
/// coarse for gradient descent on this scale of targets).
pub const DEFAULT_DQN_ALPHA: f64 = 0.02;

/// Architecture mismatch between two networks.
#[derive(Debug, thiserror::Error)]
#[error("network architectures differ: {a:?} vs {b:?}")]
pub struct ArchMismatch {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// Row-major `out x in` weight matrix.
    weights: Vec<f64>,
    biases: Vec<f64>,
    inputs: usize,
    outputs: usize,
}

impl Layer {
    fn zeroed(inputs: usize, outputs: usize) -> Self {
        Self { weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs], inputs, outputs }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.inputs);
        out.clear();
        for r in 0..self.outputs {
            let row = &self.weights[r * self.inputs..(r + 1) * self.inputs];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + self.biases[r];
            out.push(z);
        }
    }
}

/// Feedforward action-value network: rectifier hidden layers, identity output,
/// one output per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

impl QNetwork {
    /// A zero-weight network with the given layer sizes (input first).
    pub fn zeroed(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        let layers =
            sizes.windows(2).map(|pair| Layer::zeroed(pair[0], pair[1])).collect();
        Self { sizes: sizes.to_vec(), layers }
    }

    /// Seeded random initialization: uniform in ±1/sqrt(fan_in) per layer.
    pub fn random(sizes: &[usize], seed: u64) -> Self {
        let mut net = Self::zeroed(sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-bound..bound);
            }
            for b in &mut layer.biases {
                *b = rng.random_range(-bound..bound);
            }
        }
        net
    }

    /// The default architecture for this problem: 2 features in, two hidden
    /// layers, one Q-value out per action.
    pub fn default_for_actions(actions: usize, seed: u64) -> Self {
        let mut sizes = vec![2];
        sizes.extend(std::iter::repeat(DEFAULT_HIDDEN_WIDTH).take(DEFAULT_HIDDEN_LAYERS));
        sizes.push(actions);
        Self::random(&sizes, seed)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn actions(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// (outputs, inputs) of one layer.
    pub fn layer_dims(&self, layer: usize) -> (usize, usize) {
        (self.layers[layer].outputs, self.layers[layer].inputs)
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        let l = &self.layers[layer];
        l.weights[row * l.inputs + col]
    }

    pub fn set_weight(&mut self, layer: usize, row: usize, col: usize, v: f64) {
        let inputs = self.layers[layer].inputs;
        self.layers[layer].weights[row * inputs + col] = v;
    }

    pub fn bias(&self, layer: usize, row: usize) -> f64 {
        self.layers[layer].biases[row]
    }

    pub fn set_bias(&mut self, layer: usize, row: usize, v: f64) {
        self.layers[layer].biases[row] = v;
    }

    /// Deterministic forward pass.
    pub fn forward(&self, features: &[f64]) -> Vec<f64> {
        let mut current = features.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&current, &mut next);
            if i < last {
                for z in &mut next {
                    *z = z.max(0.0);
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// Forward pass keeping pre-activations and activations per layer, for
    /// backpropagation. Activation 0 is the input itself.
    fn forward_cached(&self, features: &[f64]) -> ForwardCache {
        let mut activations = vec![features.to_vec()];
        let mut pre = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(activations.last().unwrap(), &mut z);
            pre.push(z.clone());
            if i < last {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            activations.push(z);
        }
        ForwardCache { activations, pre }
    }

    fn apply_gradients(&mut self, grads: &NetGradients, step: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= step * gw;
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= step * gb;
            }
        }
    }
}

struct ForwardCache {
    /// activations[0] = input; activations[l+1] = output of layer l (post-ReLU
    /// on hidden layers).
    activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
}

/// Per-layer gradients of the batch loss.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl NetGradients {
    fn zeroed_like(net: &QNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize, inputs: usize) -> f64 {
        self.layers[layer].weights[row * inputs + col]
    }

    pub fn bias(&self, layer: usize, row: usize) -> f64 {
        self.layers[layer].biases[row]
    }
}

/// One replayable experience.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub features: [f64; 2],
    pub action: usize,
    pub reward: f64,
    pub next_features: [f64; 2],
    pub terminal: bool,
}

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    write: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { items: Vec::with_capacity(capacity), capacity, write: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform sample with replacement; reproducible under a seeded generator.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Vec<Transition> {
        assert!(!self.items.is_empty(), "cannot sample an empty buffer");
        (0..batch).map(|_| self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

/// Training targets for a batch: r + γ·max_a' Q_target(s', a'), or r alone on
/// terminal transitions.
pub fn batch_targets(target_net: &QNetwork, batch: &[Transition], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                t.reward
            } else {
                let next_q = target_net.forward(&t.next_features);
                t.reward + gamma * next_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

/// Mean squared error between Q(s_i, a_i) and the fixed targets.
pub fn loss_with_targets(net: &QNetwork, batch: &[Transition], targets: &[f64]) -> f64 {
    assert_eq!(batch.len(), targets.len());
    let n = batch.len() as f64;
    batch
        .iter()
        .zip(targets)
        .map(|(t, &y)| {
            let q = net.forward(&t.features)[t.action];
            (q - y) * (q - y)
        })
        .sum::<f64>()
        / n
}

/// Batch loss and its analytic gradients with respect to every weight and
/// bias, by backpropagation.
pub fn loss_and_gradients(
    net: &QNetwork,
    batch: &[Transition],
    targets: &[f64],
) -> (f64, NetGradients) {
    assert_eq!(batch.len(), targets.len());
    let mut grads = NetGradients::zeroed_like(net);
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let last = net.layers.len() - 1;

    for (t, &y) in batch.iter().zip(targets) {
        let cache = net.forward_cached(&t.features);
        let q = cache.activations[last + 1][t.action];
        let diff = q - y;
        loss += diff * diff / n;

        // Output delta: d(loss)/d(z_last); only the taken action is in the loss.
        let mut delta = vec![0.0; net.layers[last].outputs];
        delta[t.action] = 2.0 * diff / n;

        for l in (0..=last).rev() {
            let layer = &net.layers[l];
            let input = &cache.activations[l];
            let g = &mut grads.layers[l];
            for r in 0..layer.outputs {
                let d = delta[r];
                if d != 0.0 {
                    let row = &mut g.weights[r * layer.inputs..(r + 1) * layer.inputs];
                    for (gw, x) in row.iter_mut().zip(input) {
                        *gw += d * x;
                    }
                    g.biases[r] += d;
                }
            }
            if l > 0 {
                // Propagate through the weights, then gate by the rectifier
                // of the previous layer's pre-activation.
                let mut prev = vec![0.0; layer.inputs];
                for r in 0..layer.outputs {
                    let d = delta[r];
                    if d != 0.0 {
                        let row = &layer.weights[r * layer.inputs..(r + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                }
                for (p, &z) in prev.iter_mut().zip(&cache.pre[l - 1]) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    (loss, grads)
}

/// One SGD step on the replay batch against the target network; returns the
/// batch loss before the step.
pub fn train_step(
    net: &mut QNetwork,
    target_net: &QNetwork,
    batch: &[Transition],
    alpha: f64,
    gamma: f64,
) -> f64 {
    assert!(!batch.is_empty(), "train_step needs a nonempty batch");
    let targets = batch_targets(target_net, batch, gamma);
    let (loss, grads) = loss_and_gradients(net, batch, &targets);
    net.apply_gradients(&grads, alpha);
    loss
}

/// Copies the online weights into the target network.
pub fn sync_target(net: &QNetwork, target_net: &mut QNetwork) -> Result<(), ArchMismatch> {
    if net.sizes != target_net.sizes {
        return Err(ArchMismatch { a: net.sizes.clone(), b: target_net.sizes.clone() });
    }
    target_net.layers = net.layers.clone();
    Ok(())
}

/// The DQN agent: online and target networks, replay buffer, and counters.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    net: QNetwork,
    target: QNetwork,
    buffer: ReplayBuffer,
    batch_size: usize,
    sync_period: usize,
    env_steps: usize,
    sample_rng: ChaCha8Rng,
}

const DQN_INIT_SALT: u64 = 0x4451_4E49_4E49_5421;
const DQN_SAMPLE_SALT: u64 = 0x4451_4E53_414D_504C;

impl DqnAgent {
    /// Default agent for a catalog size, fully seeded.
    pub fn new(actions: usize, seed: u64) -> Self {
        let net = QNetwork::default_for_actions(actions, seed ^ DQN_INIT_SALT);
        let target = net.clone();
        Self {
            net,
            target,
            buffer: ReplayBuffer::new(DEFAULT_REPLAY_CAPACITY),
            batch_size: DEFAULT_BATCH_SIZE,
            sync_period: DEFAULT_SYNC_PERIOD,
            env_steps: 0,
            sample_rng: ChaCha8Rng::seed_from_u64(seed ^ DQN_SAMPLE_SALT),
        }
    }

    pub fn net(&self) -> &QNetwork {
        &self.net
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Continuous state features: metrics normalized by the objective thresholds.
    pub fn features(m: PerfMeasurement, objective: TestObjective) -> [f64; 2] {
        [m.avg_response_time_ms / objective.rt_threshold_ms, m.error_rate / objective.er_threshold]
    }
}

/// Runs one DQN episode: ε-greedy over the network's outputs, one buffer
/// append per environment step, one training step per environment step once
/// the buffer holds a batch, and a target sync every `sync_period` steps.
/// Returns the trace and the per-step training losses (empty while the buffer
/// is still below the batch size).
pub fn run_episode_dqn<R: Rng>(
    env: &mut dyn Actuator,
    agent: &mut DqnAgent,
    params: &LearningParams,
    setup: &EpisodeSetup,
    episode: u64,
    rng: &mut R,
) -> Result<(EpisodeTrace, Vec<f64>), AgentError> {
    let alpha = match params.alpha {
        AlphaSchedule::Fixed(a) => a,
        AlphaSchedule::VisitDecay => {
            return Err(AgentError::InvalidParams(
                "the network agent needs a fixed SGD step size".into(),
            ))
        }
    };
    let eps = params.epsilon.at(episode);
    let mut workload = setup.initial.clone();
    let mut measurement = PerfMeasurement::zero();
    let mut steps = Vec::new();
    let mut losses = Vec::new();
    let mut terminal = false;

    for step_i in 0..setup.max_steps {
        let features = DqnAgent::features(measurement, setup.objective);
        let state = classify_state(measurement, setup.thresholds);
        let action = if rng.random::<f64>() < eps {
            ActionId { k: rng.random_range(0..agent.net.actions()) }
        } else {
            let q_values = agent.net.forward(&features);
            let best = q_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let maximizers: Vec<usize> = q_values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == best)
                .map(|(k, _)| k)
                .collect();
            ActionId { k: maximizers[rng.random_range(0..maximizers.len())] }
        };

        let grown = apply_action(&workload, action);
        let key = StepKey { episode, step: step_i as u64 };
        let m = env
            .run(&grown, key)
            .map_err(|source| AgentError::Actuator { episode, step: key.step, source })?;
        let next_state = classify_state(m, setup.thresholds);
        let r = reward(m, setup.objective);
        let is_terminal = objective_met(m, setup.objective);

        agent.buffer.push(Transition {
            features,
            action: action.k,
            reward: r,
            next_features: DqnAgent::features(m, setup.objective),
            terminal: is_terminal,
        });
        agent.env_steps += 1;

        if agent.buffer.len() >= agent.batch_size {
            let batch = agent.buffer.sample(agent.batch_size, &mut agent.sample_rng);
            losses.push(train_step(&mut agent.net, &agent.target, &batch, alpha, params.gamma));
        }
        if agent.env_steps % agent.sync_period == 0 {
            sync_target(&agent.net, &mut agent.target).expect("twin networks share architecture");
        }

        steps.push(EpisodeStep {
            state,
            action,
            reward: r,
            next_state,
            workload_total: grown.total(),
            measurement: m,
        });
        workload = grown;
        measurement = m;
        if is_terminal {
            terminal = true;
            break;
        }
    }

    Ok((EpisodeTrace { episode, steps, terminal, final_total_users: workload.total() }, losses))
}

/// Initial learning with the network agent; the snapshot carries the trained
/// weights.
pub fn run_initial_learning_dqn(
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
    let mut agent = DqnAgent::new(transactions, setup.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    let objective = setup.objective;
    let episode_setup = EpisodeSetup {
        objective,
        thresholds: setup
            .thresholds
            .unwrap_or_else(|| crate::domain::StateThresholds::for_objective(objective)),
        initial: crate::domain::Workload::uniform(transactions, setup.initial_users_per_transaction),
        max_steps: setup.max_steps,
    };
    let mut traces = Vec::with_capacity(episodes_budget as usize);
    for episode in 0..episodes_budget {
        let (trace, _losses) =
            run_episode_dqn(env, &mut agent, params, &episode_setup, episode, &mut rng)?;
        traces.push(trace);
    }
    let snapshot = PolicySnapshot {
        format_version: SNAPSHOT_FORMAT_VERSION,
        policy: PolicyKind::Dqn { network: agent.net.clone() },
        catalog: env.catalog().clone(),
        thresholds: episode_setup.thresholds,
        objective,
        episodes: episodes_budget,
    };
    Ok((snapshot, traces))
}
