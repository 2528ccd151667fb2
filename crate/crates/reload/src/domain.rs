//! Core data types shared by every agent and strategy: workloads, performance
//! measurements, state discretization, reward computation, and the action set.

use serde::{Deserialize, Serialize};

/// Errors from constructing or validating domain values.
#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("transaction catalog must contain at least one transaction")]
    EmptyCatalog,
    #[error("duplicate transaction name {0:?} in catalog")]
    DuplicateTransaction(String),
    #[error("transaction name must be nonempty")]
    EmptyTransactionName,
    #[error("invalid state thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid test objective: {0}")]
    InvalidObjective(String),
    #[error("workload length {got} does not match catalog length {expected}")]
    WorkloadLengthMismatch { got: usize, expected: usize },
}

/// One transaction type of the system under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionId {
    /// Position in the catalog; unique within it.
    pub index: usize,
    pub name: String,
}

/// Ordered set of the transactions a SUT supports. Workloads, actions and
/// Q-table columns are all indexed by position in this catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionCatalog {
    transactions: Vec<TransactionId>,
}

impl TransactionCatalog {
    /// Builds a catalog from transaction names. Names must be nonempty and unique.
    pub fn new<I, S>(names: I) -> Result<Self, DomainError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut transactions = Vec::new();
        for (index, name) in names.into_iter().enumerate() {
            let name = name.into();
            if name.is_empty() {
                return Err(DomainError::EmptyTransactionName);
            }
            if transactions.iter().any(|t: &TransactionId| t.name == name) {
                return Err(DomainError::DuplicateTransaction(name));
            }
            transactions.push(TransactionId { index, name });
        }
        if transactions.is_empty() {
            return Err(DomainError::EmptyCatalog);
        }
        Ok(Self { transactions })
    }

    /// The default web-shop catalog: eleven transactions covering browse,
    /// account, and checkout flows.
    pub fn default_web_shop() -> Self {
        Self::new([
            "Home",
            "Sign up page",
            "Sign up",
            "Login page",
            "Login",
            "Search page",
            "Select product",
            "Add to cart",
            "Payment",
            "Confirm",
            "Log out",
        ])
        .expect("static catalog is valid")
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[TransactionId] {
        &self.transactions
    }

    pub fn name(&self, k: usize) -> &str {
        &self.transactions[k].name
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.transactions.iter().map(|t| t.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.transactions.iter().position(|t| t.name == name)
    }
}

/// Per-transaction concurrent virtual-user counts; the agent's action target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    users: Vec<u32>,
}

impl Workload {
    pub fn new(users: Vec<u32>) -> Self {
        Self { users }
    }

    /// `per_tx` users on each of `len` transactions.
    pub fn uniform(len: usize, per_tx: u32) -> Self {
        Self { users: vec![per_tx; len] }
    }

    pub fn users(&self) -> &[u32] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Total virtual users across all transactions.
    pub fn total(&self) -> u64 {
        self.users.iter().map(|&u| u64::from(u)).sum()
    }
}

/// Aggregate observation after executing a workload: average response time
/// over all requests and the fraction of failed requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfMeasurement {
    pub avg_response_time_ms: f64,
    /// Fraction in [0, 1].
    pub error_rate: f64,
}

impl PerfMeasurement {
    /// The quiet measurement: nothing has run yet.
    pub fn zero() -> Self {
        Self { avg_response_time_ms: 0.0, error_rate: 0.0 }
    }
}

/// Class boundaries for state detection. Measurements exactly at a boundary
/// map to the upper class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateThresholds {
    /// Low/Normal response-time boundary, milliseconds.
    pub rt_low_ms: f64,
    /// Normal/High response-time boundary, milliseconds.
    pub rt_high_ms: f64,
    /// Low/High error-rate boundary, fraction.
    pub er_boundary: f64,
}

/// Default Low/Normal response-time boundary.
pub const DEFAULT_RT_LOW_MS: f64 = 500.0;

impl StateThresholds {
    /// Default thresholds for an objective: the High classes begin exactly at
    /// the objective thresholds, so terminal measurements land in
    /// distinguishable states.
    pub fn for_objective(obj: TestObjective) -> Self {
        Self {
            rt_low_ms: DEFAULT_RT_LOW_MS.min(obj.rt_threshold_ms / 2.0),
            rt_high_ms: obj.rt_threshold_ms,
            er_boundary: obj.er_threshold,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.rt_low_ms > 0.0 && self.rt_high_ms > self.rt_low_ms) {
            return Err(DomainError::InvalidThresholds(format!(
                "need 0 < rt_low < rt_high, got {} and {}",
                self.rt_low_ms, self.rt_high_ms
            )));
        }
        if !(self.er_boundary > 0.0 && self.er_boundary < 1.0) {
            return Err(DomainError::InvalidThresholds(format!(
                "need 0 < er_boundary < 1, got {}",
                self.er_boundary
            )));
        }
        Ok(())
    }
}

/// Response-time class of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RtClass {
    Low,
    Normal,
    High,
}

/// Error-rate class of a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErClass {
    Low,
    High,
}

/// One of the six discrete performance states of the SUT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SutState {
    pub rt: RtClass,
    pub er: ErClass,
}

/// Number of distinct SUT states.
pub const STATE_COUNT: usize = 6;

impl SutState {
    /// Fixed total order used for Q-table addressing.
    pub fn index(self) -> usize {
        let rt_rank = match self.rt {
            RtClass::Low => 0,
            RtClass::Normal => 1,
            RtClass::High => 2,
        };
        let er_rank = match self.er {
            ErClass::Low => 0,
            ErClass::High => 1,
        };
        2 * rt_rank + er_rank
    }

    /// Inverse of `index`; panics outside [0, 6).
    pub fn from_index(i: usize) -> Self {
        assert!(i < STATE_COUNT, "state index {i} out of range");
        let rt = match i / 2 {
            0 => RtClass::Low,
            1 => RtClass::Normal,
            _ => RtClass::High,
        };
        let er = if i % 2 == 0 { ErClass::Low } else { ErClass::High };
        Self { rt, er }
    }

    pub fn all() -> [SutState; STATE_COUNT] {
        [0, 1, 2, 3, 4, 5].map(Self::from_index)
    }
}

/// Violation thresholds defining episode termination and reward scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestObjective {
    pub rt_threshold_ms: f64,
    pub er_threshold: f64,
}

impl TestObjective {
    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.rt_threshold_ms > 0.0) {
            return Err(DomainError::InvalidObjective(format!(
                "rt_threshold must be positive, got {}",
                self.rt_threshold_ms
            )));
        }
        if !(self.er_threshold > 0.0 && self.er_threshold <= 1.0) {
            return Err(DomainError::InvalidObjective(format!(
                "er_threshold must be in (0, 1], got {}",
                self.er_threshold
            )));
        }
        Ok(())
    }
}

/// One workload-scaling action: grow transaction `k` by a third.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionId {
    pub k: usize,
}

/// Classifies a measurement into one of the six SUT states.
/// Boundary values map to the upper class.
pub fn classify_state(m: PerfMeasurement, th: StateThresholds) -> SutState {
    let rt = if m.avg_response_time_ms < th.rt_low_ms {
        RtClass::Low
    } else if m.avg_response_time_ms < th.rt_high_ms {
        RtClass::Normal
    } else {
        RtClass::High
    };
    let er = if m.error_rate < th.er_boundary { ErClass::Low } else { ErClass::High };
    SutState { rt, er }
}

/// Reward for a measurement under an objective: the sum of the squared ratios
/// of each metric to its threshold. Equals 2 exactly at the thresholds.
pub fn reward(m: PerfMeasurement, obj: TestObjective) -> f64 {
    let rt_ratio = m.avg_response_time_ms / obj.rt_threshold_ms;
    let er_ratio = m.error_rate / obj.er_threshold;
    rt_ratio * rt_ratio + er_ratio * er_ratio
}

/// The scalar growth rule shared by every workload-increasing strategy:
/// one third more users, rounded up (equivalently ceil(4u/3)), with a zero
/// count bootstrapped to one so growth is never a no-op.
pub fn grow_users(u: u32) -> u32 {
    if u == 0 {
        1
    } else {
        u + u.div_ceil(3)
    }
}

/// Grows transaction `a.k` by a third of its current users, rounded up.
/// A transaction at zero users is bootstrapped to one, so no action is ever a
/// no-op. Returns a new workload; the input is unmodified.
pub fn apply_action(w: &Workload, a: ActionId) -> Workload {
    let mut users = w.users.clone();
    users[a.k] = grow_users(users[a.k]);
    Workload::new(users)
}

/// True iff the measurement violates the objective: RT strictly above the RT
/// threshold, or ER strictly above the ER threshold.
pub fn objective_met(m: PerfMeasurement, obj: TestObjective) -> bool {
    m.avg_response_time_ms > obj.rt_threshold_ms || m.error_rate > obj.er_threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_thresholds() -> StateThresholds {
        StateThresholds { rt_low_ms: 500.0, rt_high_ms: 1500.0, er_boundary: 0.20 }
    }

    fn default_objective() -> TestObjective {
        TestObjective { rt_threshold_ms: 1500.0, er_threshold: 0.20 }
    }

    fn m(rt: f64, er: f64) -> PerfMeasurement {
        PerfMeasurement { avg_response_time_ms: rt, error_rate: er }
    }

    #[test]
    fn default_catalog_has_eleven_unique_transactions() {
        let cat = TransactionCatalog::default_web_shop();
        assert_eq!(cat.len(), 11);
        for (i, t) in cat.transactions().iter().enumerate() {
            assert_eq!(t.index, i);
            assert!(!t.name.is_empty());
        }
        assert_eq!(cat.index_of("Confirm"), Some(9));
        assert_eq!(cat.index_of("missing"), None);
    }

    #[test]
    fn catalog_rejects_duplicates_and_empty() {
        assert!(matches!(
            TransactionCatalog::new(["a", "a"]),
            Err(DomainError::DuplicateTransaction(_))
        ));
        assert!(matches!(
            TransactionCatalog::new(Vec::<String>::new()),
            Err(DomainError::EmptyCatalog)
        ));
        assert!(matches!(
            TransactionCatalog::new([""]),
            Err(DomainError::EmptyTransactionName)
        ));
    }

    #[test]
    fn classify_zero_measurement_is_low_low() {
        let s = classify_state(m(0.0, 0.0), default_thresholds());
        assert_eq!(s, SutState { rt: RtClass::Low, er: ErClass::Low });
    }

    #[test]
    fn classify_boundary_maps_to_upper_class() {
        let s = classify_state(m(1500.0, 0.20), default_thresholds());
        assert_eq!(s, SutState { rt: RtClass::High, er: ErClass::High });
        let s = classify_state(m(500.0, 0.0), default_thresholds());
        assert_eq!(s.rt, RtClass::Normal);
    }

    #[test]
    fn classify_interior_point() {
        // 500 <= 700 < 1500 and 0.05 < 0.20.
        let s = classify_state(m(700.0, 0.05), default_thresholds());
        assert_eq!(s, SutState { rt: RtClass::Normal, er: ErClass::Low });
    }

    #[test]
    fn state_index_is_a_bijection_over_six_states() {
        let mut seen = [false; STATE_COUNT];
        for s in SutState::all() {
            let i = s.index();
            assert!(!seen[i], "index {i} hit twice");
            seen[i] = true;
            assert_eq!(SutState::from_index(i), s);
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn reward_unit_ratio_is_two() {
        assert_eq!(reward(m(1500.0, 0.20), default_objective()), 2.0);
    }

    #[test]
    fn reward_zero_measurement_is_zero() {
        assert_eq!(reward(m(0.0, 0.0), default_objective()), 0.0);
    }

    #[test]
    fn reward_half_ratios() {
        // (750/1500)^2 + (0.1/0.2)^2 = 0.25 + 0.25.
        assert_eq!(reward(m(750.0, 0.1), default_objective()), 0.5);
    }

    #[test]
    fn apply_action_examples() {
        let w = Workload::new(vec![9, 0, 1, 5]);
        let grown = apply_action(&w, ActionId { k: 0 });
        assert_eq!(grown.users(), &[12, 0, 1, 5]);
        let grown = apply_action(&w, ActionId { k: 1 });
        assert_eq!(grown.users(), &[9, 1, 1, 5]);
        let grown = apply_action(&w, ActionId { k: 2 });
        assert_eq!(grown.users(), &[9, 0, 2, 5]);
        // Input untouched.
        assert_eq!(w.users(), &[9, 0, 1, 5]);
    }

    #[test]
    fn objective_met_is_strict() {
        let obj = default_objective();
        assert!(objective_met(m(1501.0, 0.0), obj));
        assert!(!objective_met(m(1500.0, 0.20), obj));
        assert!(objective_met(m(100.0, 0.21), obj));
    }

    #[test]
    fn thresholds_for_objective_track_it() {
        let th = StateThresholds::for_objective(default_objective());
        assert_eq!(th.rt_low_ms, 500.0);
        assert_eq!(th.rt_high_ms, 1500.0);
        assert_eq!(th.er_boundary, 0.20);
        th.validate().unwrap();
        // A very tight objective still yields valid ordered boundaries.
        let th = StateThresholds::for_objective(TestObjective {
            rt_threshold_ms: 300.0,
            er_threshold: 0.1,
        });
        th.validate().unwrap();
        assert!(th.rt_low_ms < th.rt_high_ms);
    }

    #[test]
    fn validation_rejects_malformed_values() {
        assert!(StateThresholds { rt_low_ms: 0.0, rt_high_ms: 1.0, er_boundary: 0.5 }
            .validate()
            .is_err());
        assert!(StateThresholds { rt_low_ms: 2.0, rt_high_ms: 1.0, er_boundary: 0.5 }
            .validate()
            .is_err());
        assert!(StateThresholds { rt_low_ms: 1.0, rt_high_ms: 2.0, er_boundary: 1.0 }
            .validate()
            .is_err());
        assert!(TestObjective { rt_threshold_ms: 0.0, er_threshold: 0.2 }.validate().is_err());
        assert!(TestObjective { rt_threshold_ms: 100.0, er_threshold: 1.5 }.validate().is_err());
        assert!(TestObjective { rt_threshold_ms: 100.0, er_threshold: 1.0 }.validate().is_ok());
    }

    proptest! {
        #[test]
        fn classification_is_total_and_monotone(
            rt1 in 0.0f64..5000.0,
            rt2 in 0.0f64..5000.0,
            er1 in 0.0f64..1.0,
            er2 in 0.0f64..1.0,
        ) {
            let th = default_thresholds();
            let (rt_lo, rt_hi) = if rt1 <= rt2 { (rt1, rt2) } else { (rt2, rt1) };
            let (er_lo, er_hi) = if er1 <= er2 { (er1, er2) } else { (er2, er1) };
            let a = classify_state(m(rt_lo, er_lo), th);
            let b = classify_state(m(rt_hi, er_hi), th);
            // Raising RT never lowers the RT class; same for ER.
            prop_assert!(rt_rank(a.rt) <= rt_rank(b.rt));
            prop_assert!(er_rank(a.er) <= er_rank(b.er));
            prop_assert!(a.index() < STATE_COUNT && b.index() < STATE_COUNT);
        }

        #[test]
        fn reward_is_strictly_increasing_in_each_argument(
            rt in 0.0f64..5000.0,
            er in 0.0f64..0.99,
            bump in 0.001f64..500.0,
        ) {
            let obj = default_objective();
            let base = reward(m(rt, er), obj);
            prop_assert!(reward(m(rt + bump, er), obj) > base);
            let er_bump = (bump / 1000.0).min(1.0 - er);
            if er_bump > 0.0 {
                prop_assert!(reward(m(rt, er + er_bump), obj) > base);
            }
        }

        #[test]
        fn violation_implies_reward_above_one(
            rt in 0.0f64..5000.0,
            er in 0.0f64..1.0,
        ) {
            let obj = default_objective();
            if objective_met(m(rt, er), obj) {
                prop_assert!(reward(m(rt, er), obj) > 1.0);
            }
        }

        #[test]
        fn apply_action_grows_exactly_one_coordinate(
            users in proptest::collection::vec(0u32..10_000, 1..16),
            k_raw in 0usize..16,
        ) {
            let k = k_raw % users.len();
            let w = Workload::new(users.clone());
            let grown = apply_action(&w, ActionId { k });
            prop_assert!(grown.total() > w.total());
            let mut changed = 0;
            for (j, (&before, &after)) in users.iter().zip(grown.users()).enumerate() {
                if j == k {
                    prop_assert!(after > before);
                    changed += 1;
                } else {
                    prop_assert_eq!(after, before);
                }
            }
            prop_assert_eq!(changed, 1);
        }

        #[test]
        fn apply_action_matches_scalar_rule(u in 0u32..1_000_000) {
            let w = Workload::new(vec![u]);
            let grown = apply_action(&w, ActionId { k: 0 });
            // Independent statement of the rule: +⌈u/3⌉, with 0 bootstrapped to 1.
            let expected = if u == 0 { 1 } else { u + (u as f64 / 3.0).ceil() as u32 };
            prop_assert_eq!(grown.users()[0], expected);
        }
    }

    fn rt_rank(c: RtClass) -> u8 {
        match c {
            RtClass::Low => 0,
            RtClass::Normal => 1,
            RtClass::High => 2,
        }
    }

    fn er_rank(c: ErClass) -> u8 {
        match c {
            ErClass::Low => 0,
            ErClass::High => 1,
        }
    }
}
