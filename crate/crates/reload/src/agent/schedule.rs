//! Learning-rate and exploration schedules.

use serde::{Deserialize, Serialize};

/// Exploration-rate schedule for ε-greedy selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonSchedule {
    /// The same ε every episode.
    Fixed(f64),
    /// ε_e = max(floor, start · decay^e): explore mainly in early episodes.
    Decaying { start: f64, decay: f64, floor: f64 },
}

impl EpsilonSchedule {
    /// The default decaying schedule: 0.9 · 0.9^e with floor 0.05.
    pub fn decaying_default() -> Self {
        Self::Decaying { start: 0.9, decay: 0.9, floor: 0.05 }
    }

    /// ε for the given episode index.
    pub fn at(&self, episode: u64) -> f64 {
        match *self {
            Self::Fixed(eps) => eps,
            Self::Decaying { start, decay, floor } => {
                let e = episode.min(i32::MAX as u64) as i32;
                (start * decay.powi(e)).max(floor)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Self::Fixed(eps) if !(0.0..=1.0).contains(&eps) => {
                Err(format!("fixed epsilon must be in [0, 1], got {eps}"))
            }
            Self::Decaying { start, decay, floor } => {
                if !(0.0..=1.0).contains(&start) {
                    return Err(format!("epsilon start must be in [0, 1], got {start}"));
                }
                if !(decay > 0.0 && decay <= 1.0) {
                    return Err(format!("epsilon decay must be in (0, 1], got {decay}"));
                }
                if !(0.0..=1.0).contains(&floor) {
                    return Err(format!("epsilon floor must be in [0, 1], got {floor}"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Learning-rate schedule for the Q-update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaSchedule {
    /// The same α for every update.
    Fixed(f64),
    /// α(s, a) = 1 / (1 + visits(s, a)): averages over repeat visits.
    VisitDecay,
}

impl AlphaSchedule {
    /// α for an update to a cell visited `visits` times so far.
    pub fn at(&self, visits: u64) -> f64 {
        match *self {
            Self::Fixed(alpha) => alpha,
            Self::VisitDecay => 1.0 / (1.0 + visits as f64),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Self::Fixed(alpha) if !(alpha > 0.0 && alpha <= 1.0) => {
                Err(format!("fixed alpha must be in (0, 1], got {alpha}"))
            }
            _ => Ok(()),
        }
    }
}

/// The agent's learning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub alpha: AlphaSchedule,
    /// Discount factor in [0, 1).
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            alpha: AlphaSchedule::Fixed(0.5),
            gamma: 0.5,
            epsilon: EpsilonSchedule::decaying_default(),
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<(), String> {
        self.alpha.validate()?;
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        self.epsilon.validate()
    }
}
