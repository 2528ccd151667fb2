//! The tabular action-value function and its two core operations: ε-greedy
//! selection and the incremental Q-update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ActionId, SutState, STATE_COUNT};

/// Action-value table over the six SUT states and one action per transaction.
/// Values and visit counts are stored row-major: row = state index, column =
/// action index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    actions: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    /// A zero-initialized table with one action per transaction.
    pub fn new(actions: usize) -> Self {
        assert!(actions > 0, "need at least one action");
        Self {
            actions,
            values: vec![0.0; STATE_COUNT * actions],
            visits: vec![0; STATE_COUNT * actions],
        }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    fn idx(&self, s: SutState, a: ActionId) -> usize {
        debug_assert!(a.k < self.actions);
        s.index() * self.actions + a.k
    }

    pub fn value(&self, s: SutState, a: ActionId) -> f64 {
        self.values[self.idx(s, a)]
    }

    pub fn visits(&self, s: SutState, a: ActionId) -> u64 {
        self.visits[self.idx(s, a)]
    }

    /// All action values for a state, indexed by action.
    pub fn row(&self, s: SutState) -> &[f64] {
        let start = s.index() * self.actions;
        &self.values[start..start + self.actions]
    }

    /// max_a Q(s, a).
    pub fn max_value(&self, s: SutState) -> f64 {
        self.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row-major values, for persistence and inspection.
    pub fn values_row_major(&self) -> &[f64] {
        &self.values
    }

    /// Row-major visit counts.
    pub fn visits_row_major(&self) -> &[u64] {
        &self.visits
    }

    fn set(&mut self, s: SutState, a: ActionId, v: f64) {
        let i = self.idx(s, a);
        self.values[i] = v;
    }
}

/// ε-greedy selection: with probability `eps` a uniformly random action, else
/// an action of maximal value with ties broken uniformly at random.
pub fn select_action<R: Rng>(q: &QTable, s: SutState, eps: f64, rng: &mut R) -> ActionId {
    debug_assert!((0.0..=1.0).contains(&eps));
    if rng.random::<f64>() < eps {
        return ActionId { k: rng.random_range(0..q.actions()) };
    }
    let row = q.row(s);
    let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<usize> =
        row.iter().enumerate().filter(|(_, &v)| v == best).map(|(k, _)| k).collect();
    ActionId { k: maximizers[rng.random_range(0..maximizers.len())] }
}

/// One incremental Q-update:
/// Q(s, a) ← (1 − α)·Q(s, a) + α·(r + γ·max_a' Q(s_next, a')).
/// Exactly one cell changes; its visit count is incremented.
pub fn q_update(
    q: &mut QTable,
    s: SutState,
    a: ActionId,
    r: f64,
    s_next: SutState,
    alpha: f64,
    gamma: f64,
) {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    debug_assert!((0.0..1.0).contains(&gamma));
    let target = r + gamma * q.max_value(s_next);
    let updated = (1.0 - alpha) * q.value(s, a) + alpha * target;
    q.set(s, a, updated);
    let i = q.idx(s, a);
    q.visits[i] += 1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(i: usize) -> SutState {
        SutState::from_index(i)
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn fresh_table_is_all_zero() {
        let q = QTable::new(11);
        for s in SutState::all() {
            for k in 0..11 {
                assert_eq!(q.value(s, ActionId { k }), 0.0);
                assert_eq!(q.visits(s, ActionId { k }), 0);
            }
        }
    }

    #[test]
    fn update_from_zero_table() {
        // (1 - 0.5)·0 + 0.5·(2 + 0.5·0) = 1.
        let mut q = QTable::new(4);
        q_update(&mut q, state(0), ActionId { k: 1 }, 2.0, state(3), 0.5, 0.5);
        assert_eq!(q.value(state(0), ActionId { k: 1 }), 1.0);
        assert_eq!(q.visits(state(0), ActionId { k: 1 }), 1);
    }

    #[test]
    fn zero_reward_zero_table_is_a_fixed_point() {
        let mut q = QTable::new(4);
        q_update(&mut q, state(2), ActionId { k: 0 }, 0.0, state(2), 0.9, 0.5);
        assert!(q.values_row_major().iter().all(|&v| v == 0.0));
        assert_eq!(q.visits(state(2), ActionId { k: 0 }), 1);
    }

    #[test]
    fn update_with_bootstrap_value() {
        // Q(s,a)=1, max next = 2, r=1: 0.5·1 + 0.5·(1 + 0.5·2) = 1.5.
        let mut q = QTable::new(3);
        q_update(&mut q, state(0), ActionId { k: 0 }, 1.0, state(5), 1.0, 0.0); // Q(s0,a0)=1
        q_update(&mut q, state(1), ActionId { k: 2 }, 2.0, state(5), 1.0, 0.0); // Q(s1,a2)=2
        q_update(&mut q, state(0), ActionId { k: 0 }, 1.0, state(1), 0.5, 0.5);
        assert_eq!(q.value(state(0), ActionId { k: 0 }), 1.5);
    }

    #[test]
    fn degenerate_gamma_zero_alpha_one_writes_reward() {
        let mut q = QTable::new(5);
        // Give the next state a big value to prove gamma = 0 ignores it.
        q_update(&mut q, state(1), ActionId { k: 3 }, 9.0, state(2), 1.0, 0.0);
        q_update(&mut q, state(0), ActionId { k: 2 }, 0.625, state(1), 1.0, 0.0);
        assert_eq!(q.value(state(0), ActionId { k: 2 }), 0.625);
    }

    #[test]
    fn update_touches_exactly_one_cell() {
        let mut q = QTable::new(7);
        let before = q.clone();
        q_update(&mut q, state(3), ActionId { k: 4 }, 1.25, state(0), 0.5, 0.5);
        let mut diffs = 0;
        for i in 0..before.values.len() {
            if q.values[i] != before.values[i] || q.visits[i] != before.visits[i] {
                diffs += 1;
            }
        }
        assert_eq!(diffs, 1);
    }

    #[test]
    fn matches_scalar_reference_on_randomized_tuples() {
        // Independent scalar statement of the update rule.
        fn reference(old: f64, max_next: f64, r: f64, alpha: f64, gamma: f64) -> f64 {
            (1.0 - alpha) * old + alpha * (r + gamma * max_next)
        }
        let mut rng = rng(11);
        for _ in 0..2_000 {
            let mut q = QTable::new(11);
            // Scatter random values.
            for s in SutState::all() {
                for k in 0..11 {
                    q_update(&mut q, s, ActionId { k }, rng.random_range(-5.0..5.0), s, 1.0, 0.0);
                }
            }
            let s = state(rng.random_range(0..STATE_COUNT));
            let a = ActionId { k: rng.random_range(0..11) };
            let s_next = state(rng.random_range(0..STATE_COUNT));
            let r = rng.random_range(-10.0..10.0);
            let alpha = rng.random_range(0.01..=1.0);
            let gamma = rng.random_range(0.0..0.999);
            let expected = reference(q.value(s, a), q.max_value(s_next), r, alpha, gamma);
            q_update(&mut q, s, a, r, s_next, alpha, gamma);
            let got = q.value(s, a);
            assert!(
                (got - expected).abs() <= 1e-12,
                "got {got}, reference {expected}"
            );
        }
    }

    #[test]
    fn pure_exploration_is_uniform() {
        let q = QTable::new(11);
        let mut counts = [0u32; 11];
        let mut r = rng(5);
        for _ in 0..10_000 {
            counts[select_action(&q, state(0), 1.0, &mut r).k] += 1;
        }
        for &c in &counts {
            let freq = f64::from(c) / 10_000.0;
            assert!((freq - 1.0 / 11.0).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn pure_exploitation_returns_the_unique_maximizer() {
        let mut q = QTable::new(11);
        q_update(&mut q, state(2), ActionId { k: 7 }, 3.0, state(2), 1.0, 0.0);
        let mut r = rng(6);
        for _ in 0..1_000 {
            assert_eq!(select_action(&q, state(2), 0.0, &mut r).k, 7);
        }
    }

    #[test]
    fn mixture_frequency_matches_analytic_value() {
        // P(maximizer) = (1 - eps) + eps/T = 0.5 + 0.5/11.
        let mut q = QTable::new(11);
        q_update(&mut q, state(1), ActionId { k: 4 }, 5.0, state(1), 1.0, 0.0);
        let mut r = rng(7);
        let mut hits = 0u32;
        for _ in 0..10_000 {
            if select_action(&q, state(1), 0.5, &mut r).k == 4 {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / 10_000.0;
        let expected = 0.5 + 0.5 / 11.0;
        assert!((freq - expected).abs() < 0.02, "freq {freq}, expected {expected}");
    }

    #[test]
    fn ties_break_uniformly_among_maximizers() {
        let mut q = QTable::new(6);
        q_update(&mut q, state(0), ActionId { k: 1 }, 4.0, state(0), 1.0, 0.0);
        q_update(&mut q, state(0), ActionId { k: 5 }, 4.0, state(0), 1.0, 0.0);
        let mut counts = [0u32; 6];
        let mut r = rng(8);
        for _ in 0..10_000 {
            counts[select_action(&q, state(0), 0.0, &mut r).k] += 1;
        }
        assert_eq!(counts[0] + counts[2] + counts[3] + counts[4], 0);
        for k in [1, 5] {
            let freq = f64::from(counts[k]) / 10_000.0;
            assert!((freq - 0.5).abs() < 0.02, "action {k} freq {freq}");
        }
    }

    #[test]
    fn positive_reward_scaling_preserves_argmax_sets() {
        // Identical trajectories with rewards scaled by c > 0 scale the whole
        // table by c and leave every per-state argmax unchanged.
        let scale = 3.75;
        let mut rng = rng(9);
        let mut q1 = QTable::new(11);
        let mut q2 = QTable::new(11);
        let mut trajectory = Vec::new();
        for _ in 0..500 {
            trajectory.push((
                rng.random_range(0..STATE_COUNT),
                rng.random_range(0..11),
                rng.random_range(0.0..2.0),
                rng.random_range(0..STATE_COUNT),
            ));
        }
        for &(s, k, r, sn) in &trajectory {
            q_update(&mut q1, state(s), ActionId { k }, r, state(sn), 0.5, 0.5);
            q_update(&mut q2, state(s), ActionId { k }, scale * r, state(sn), 0.5, 0.5);
        }
        for i in 0..q1.values_row_major().len() {
            let a = q1.values_row_major()[i] * scale;
            let b = q2.values_row_major()[i];
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "cell {i}: {a} vs {b}");
        }
        for s in SutState::all() {
            let argmax = |q: &QTable| -> usize {
                let row = q.row(s);
                let best = q.max_value(s);
                row.iter().position(|&v| v == best).unwrap()
            };
            assert_eq!(argmax(&q1), argmax(&q2), "argmax differs in state {:?}", s);
        }
    }
}
