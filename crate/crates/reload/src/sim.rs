//! Deterministic, seedable performance simulator of a multi-transaction web
//! application: a congestion curve with a linear overload regime, plus a
//! utilization-driven error model. The environment for desk-scale experiments.

use serde::{Deserialize, Serialize};

use crate::actuator::{Actuator, ActuatorError, StepKey};
use crate::domain::{PerfMeasurement, TransactionCatalog, Workload};

/// Congestion gain of the response-time curve.
pub const CONGESTION_GAIN: f64 = 1.0;

/// Guard on (1 - utilization): below this remainder the curve switches to its
/// linear overload regime, which also covers utilization >= 1.
pub const UTILIZATION_GUARD: f64 = 0.01;

/// Simulator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Per-transaction base service demand, milliseconds. Length T.
    pub base_demand_ms: Vec<f64>,
    /// Effective concurrent-user capacity: the number of mean-demand users
    /// that saturates the system.
    pub capacity: f64,
    /// Utilization fraction at which errors begin.
    pub error_onset: f64,
    /// Error-rate growth per unit utilization beyond the onset.
    pub error_slope: f64,
    /// Multiplicative response-time noise amplitude, fraction in [0, 0.5].
    pub noise_amplitude: f64,
    /// Seed for the counter-based noise generator.
    pub seed: u64,
}

/// Errors from validating a simulator config.
#[derive(Debug, thiserror::Error)]
pub enum SimConfigError {
    #[error("base demands must be nonempty and strictly positive")]
    BadDemands,
    #[error("capacity must be positive, got {0}")]
    BadCapacity(f64),
    #[error("error_onset must be in (0, 1), got {0}")]
    BadErrorOnset(f64),
    #[error("error_slope must be >= 0, got {0}")]
    BadErrorSlope(f64),
    #[error("noise_amplitude must be in [0, 0.5], got {0}")]
    BadNoise(f64),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimConfigError> {
        if self.base_demand_ms.is_empty() || self.base_demand_ms.iter().any(|&d| !(d > 0.0)) {
            return Err(SimConfigError::BadDemands);
        }
        if !(self.capacity > 0.0) {
            return Err(SimConfigError::BadCapacity(self.capacity));
        }
        if !(self.error_onset > 0.0 && self.error_onset < 1.0) {
            return Err(SimConfigError::BadErrorOnset(self.error_onset));
        }
        if !(self.error_slope >= 0.0) {
            return Err(SimConfigError::BadErrorSlope(self.error_slope));
        }
        if !(0.0..=0.5).contains(&self.noise_amplitude) {
            return Err(SimConfigError::BadNoise(self.noise_amplitude));
        }
        Ok(())
    }

    /// Mean base demand over the catalog; the response-time scale and the
    /// demand unit of `capacity`.
    pub fn mean_demand_ms(&self) -> f64 {
        self.base_demand_ms.iter().sum::<f64>() / self.base_demand_ms.len() as f64
    }

    /// Utilization produced by a workload: total offered demand relative to
    /// what `capacity` mean-demand users would offer.
    pub fn utilization(&self, w: &Workload) -> f64 {
        let offered: f64 = w
            .users()
            .iter()
            .zip(&self.base_demand_ms)
            .map(|(&u, &d)| f64::from(u) * d)
            .sum();
        offered / (self.capacity * self.mean_demand_ms())
    }
}

/// Executes a workload against the simulated SUT.
///
/// Response time follows a congestion curve in utilization rho: below
/// saturation it grows like `scale * (1 + rho / (1 - rho))`; within
/// `UTILIZATION_GUARD` of saturation and beyond, the remainder is clamped to
/// the guard, which makes growth exactly linear in rho (the overload regime).
/// `scale` is the catalog-mean base demand, so response time depends on the
/// workload only through utilization and is strictly monotone in every
/// per-transaction count. The error rate is zero up to the onset utilization
/// and climbs linearly after it, capped at 1.
///
/// Multiplicative noise on the response time is drawn from a counter-based
/// generator keyed by (seed, episode, step): same key, same output,
/// regardless of call order.
pub fn simulate(w: &Workload, cfg: &SimConfig, key: StepKey) -> Result<PerfMeasurement, ActuatorError> {
    if w.total() == 0 {
        return Err(ActuatorError::EmptyWorkload);
    }
    if w.len() != cfg.base_demand_ms.len() {
        return Err(ActuatorError::CatalogMismatch {
            got: w.len(),
            expected: cfg.base_demand_ms.len(),
        });
    }

    let rho = cfg.utilization(w);
    let scale = cfg.mean_demand_ms();
    let remainder = (1.0 - rho).max(UTILIZATION_GUARD);
    let rt = scale * (1.0 + CONGESTION_GAIN * rho / remainder);

    let er = if rho <= cfg.error_onset {
        0.0
    } else {
        (cfg.error_slope * (rho - cfg.error_onset)).min(1.0)
    };

    let noise = noise_factor(cfg.seed, key, cfg.noise_amplitude);
    Ok(PerfMeasurement { avg_response_time_ms: rt * noise, error_rate: er })
}

/// Uniform factor in [1 - amplitude, 1 + amplitude], a pure function of
/// (seed, episode, step).
fn noise_factor(seed: u64, key: StepKey, amplitude: f64) -> f64 {
    if amplitude == 0.0 {
        return 1.0;
    }
    let unit = unit_from_counter(seed, key.episode, key.step);
    1.0 - amplitude + 2.0 * amplitude * unit
}

/// Counter-based uniform draw in [0, 1): three rounds of splitmix64 folding
/// in the key components. Stateless, so replay never depends on call order.
fn unit_from_counter(seed: u64, episode: u64, step: u64) -> f64 {
    let mut x = seed;
    for salt in [episode.wrapping_add(0x9E37_79B9_7F4A_7C15), step.wrapping_add(0xD1B5_4A32_D192_ED03)] {
        x = splitmix64(x ^ salt);
    }
    x = splitmix64(x);
    // Top 53 bits give a uniform double in [0, 1).
    (x >> 11) as f64 / (1u64 << 53) as f64
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The shipped default: an eleven-transaction web shop with heterogeneous
/// demands (heaviest is 8x the lightest), tuned so the standard baseline
/// strategy reaches the default objective (1500 ms / 0.20) at a total
/// workload inside [55, 99] users.
pub fn calibrate_default() -> SimConfig {
    SimConfig {
        base_demand_ms: vec![
            25.0,  // Home
            10.0,  // Sign up page
            50.0,  // Sign up
            10.0,  // Login page
            45.0,  // Login
            30.0,  // Search page
            50.0,  // Select product
            90.0,  // Add to cart
            85.0,  // Payment
            150.0, // Confirm
            5.0,   // Log out
        ],
        capacity: 90.0,
        error_onset: 0.77,
        error_slope: 1.0,
        noise_amplitude: 0.3,
        seed: 0,
    }
}

/// A simulated SUT bound to a transaction catalog.
#[derive(Debug, Clone)]
pub struct Simulator {
    catalog: TransactionCatalog,
    cfg: SimConfig,
}

impl Simulator {
    /// Builds a simulator; the config demand vector must match the catalog.
    pub fn new(catalog: TransactionCatalog, cfg: SimConfig) -> Result<Self, ActuatorError> {
        if catalog.len() != cfg.base_demand_ms.len() {
            return Err(ActuatorError::CatalogMismatch {
                got: cfg.base_demand_ms.len(),
                expected: catalog.len(),
            });
        }
        Ok(Self { catalog, cfg })
    }

    /// The default web shop on the calibrated config, with the given noise seed.
    pub fn default_web_shop(seed: u64) -> Self {
        let cfg = SimConfig { seed, ..calibrate_default() };
        Self::new(TransactionCatalog::default_web_shop(), cfg).expect("calibrated config matches catalog")
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }
}

impl Actuator for Simulator {
    fn catalog(&self) -> &TransactionCatalog {
        &self.catalog
    }

    fn run(&mut self, w: &Workload, key: StepKey) -> Result<PerfMeasurement, ActuatorError> {
        simulate(w, &self.cfg, key)
    }
}
