//! Concurrent virtual-user HTTP driver: executes a workload against a real
//! system under test and aggregates latencies and failures into the same
//! measurement type the simulator produces.

pub mod script;

use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use crate::actuator::{Actuator, ActuatorError, StepKey};
use crate::domain::{PerfMeasurement, TransactionCatalog, Workload};
use script::{HttpStep, ScriptSet, TransactionScript};

/// Default wall-clock duration of one measurement step.
pub const DEFAULT_STEP_DURATION: Duration = Duration::from_secs(30);

/// Default per-request timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// How one measurement step is run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub base_url: String,
    /// Wall-clock length of the step; every virtual user loops its script
    /// until this elapses.
    pub duration: Duration,
    /// Virtual-user starts are staggered evenly across this prefix of the run.
    pub ramp_up: Duration,
    /// Per-request timeout; a request exceeding it counts as an error with
    /// the timeout as its latency.
    pub timeout: Duration,
}

impl RunSpec {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            duration: DEFAULT_STEP_DURATION,
            ramp_up: Duration::ZERO,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_duration(mut self, duration: Duration) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_ramp_up(mut self, ramp_up: Duration) -> Self {
        self.ramp_up = ramp_up;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn validate(&self) -> Result<(), ActuatorError> {
        if self.duration.is_zero() {
            return Err(ActuatorError::Driver("run duration must be positive".into()));
        }
        if self.ramp_up > self.duration {
            return Err(ActuatorError::Driver("ramp-up cannot exceed the run duration".into()));
        }
        if self.timeout.is_zero() {
            return Err(ActuatorError::Driver("request timeout must be positive".into()));
        }
        Ok(())
    }
}

/// Exact request accounting for one run. All tallies are integers (latency in
/// whole microseconds), so the aggregate is identical no matter how the
/// concurrent per-user tallies interleave or merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HttpRunStats {
    pub issued: u64,
    pub completed: u64,
    pub failed: u64,
    pub timed_out: u64,
    /// Summed over every request that got a response or timed out.
    pub latency_micros_total: u128,
    pub latency_samples: u64,
}

impl HttpRunStats {
    fn merge(&mut self, other: &HttpRunStats) {
        self.issued += other.issued;
        self.completed += other.completed;
        self.failed += other.failed;
        self.timed_out += other.timed_out;
        self.latency_micros_total += other.latency_micros_total;
        self.latency_samples += other.latency_samples;
    }

    /// completed + failed + timed_out = issued, by construction.
    pub fn accounting_holds(&self) -> bool {
        self.completed + self.failed + self.timed_out == self.issued
    }

    pub fn measurement(&self) -> PerfMeasurement {
        let avg_response_time_ms = if self.latency_samples > 0 {
            self.latency_micros_total as f64 / self.latency_samples as f64 / 1000.0
        } else {
            0.0
        };
        let error_rate = if self.issued > 0 {
            (self.failed + self.timed_out) as f64 / self.issued as f64
        } else {
            0.0
        };
        PerfMeasurement { avg_response_time_ms, error_rate }
    }
}

enum StepOutcome {
    Completed { micros: u64, status: u16 },
    /// Got a response that failed the success predicate.
    FailedWithResponse { micros: u64, status: u16 },
    /// Transport-level failure before any response.
    FailedNoResponse,
    TimedOut,
}

impl HttpRunStats {
    fn record(&mut self, outcome: StepOutcome, timeout: Duration) {
        self.issued += 1;
        match outcome {
            StepOutcome::Completed { micros, .. } => {
                self.completed += 1;
                self.latency_micros_total += u128::from(micros);
                self.latency_samples += 1;
            }
            StepOutcome::FailedWithResponse { micros, .. } => {
                self.failed += 1;
                self.latency_micros_total += u128::from(micros);
                self.latency_samples += 1;
            }
            StepOutcome::FailedNoResponse => {
                self.failed += 1;
            }
            StepOutcome::TimedOut => {
                self.timed_out += 1;
                self.latency_micros_total += timeout.as_micros();
                self.latency_samples += 1;
            }
        }
    }
}

fn build_agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(timeout))
        .build()
        .into()
}

/// Checks TCP reachability of the base URL's host before starting any load.
fn probe(base_url: &str, timeout: Duration) -> Result<(), ActuatorError> {
    let fail = |reason: String| ActuatorError::ConnectFailure {
        url: base_url.to_string(),
        reason,
    };
    let rest = base_url
        .strip_prefix("http://")
        .or_else(|| base_url.strip_prefix("https://"))
        .ok_or_else(|| fail("base URL must start with http:// or https://".into()))?;
    let default_port = if base_url.starts_with("https://") { 443 } else { 80 };
    let authority = rest.split('/').next().unwrap_or("");
    let host_port = if authority.contains(':') {
        authority.to_string()
    } else {
        format!("{authority}:{default_port}")
    };
    let addrs = host_port
        .to_socket_addrs()
        .map_err(|e| fail(format!("cannot resolve {authority}: {e}")))?;
    let mut last = "no addresses resolved".to_string();
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, timeout) {
            Ok(_) => return Ok(()),
            Err(e) => last = format!("{addr}: {e}"),
        }
    }
    Err(fail(last))
}

fn run_step(
    agent: &ureq::Agent,
    base_url: &str,
    step: &HttpStep,
    user: usize,
    iteration: u64,
    started: Instant,
) -> StepOutcome {
    let url = format!(
        "{}{}",
        base_url.trim_end_matches('/'),
        HttpStep::substitute(&step.path, user, iteration)
    );
    let is_timeout = |e: &ureq::Error| matches!(e, ureq::Error::Timeout(_));

    let outcome = match step.method.as_str() {
        "GET" | "HEAD" | "DELETE" => {
            let mut req = match step.method.as_str() {
                "GET" => agent.get(&url),
                "HEAD" => agent.head(&url),
                _ => agent.delete(&url),
            };
            for (k, v) in &step.headers {
                req = req.header(k, v);
            }
            req.call()
        }
        method => {
            let mut req = match method {
                "POST" => agent.post(&url),
                "PUT" => agent.put(&url),
                _ => agent.patch(&url),
            };
            for (k, v) in &step.headers {
                req = req.header(k, v);
            }
            let body = step
                .body
                .as_deref()
                .map(|b| HttpStep::substitute(b, user, iteration))
                .unwrap_or_default();
            req.send(&body)
        }
    };

    match outcome {
        Ok(mut response) => {
            let status = response.status().as_u16();
            match response.body_mut().read_to_string() {
                Ok(text) => {
                    let micros = started.elapsed().as_micros() as u64;
                    if step.succeeded(status, &text) {
                        StepOutcome::Completed { micros, status }
                    } else {
                        StepOutcome::FailedWithResponse { micros, status }
                    }
                }
                Err(e) if is_timeout(&e) => StepOutcome::TimedOut,
                Err(_) => StepOutcome::FailedNoResponse,
            }
        }
        Err(e) if is_timeout(&e) => StepOutcome::TimedOut,
        Err(_) => StepOutcome::FailedNoResponse,
    }
}

/// Executes the workload: `users[j]` concurrent virtual users loop
/// transaction j's script until the run duration elapses. Returns the
/// aggregate measurement together with the exact request tallies.
pub fn execute_with_stats(
    w: &Workload,
    scripts: &ScriptSet,
    spec: &RunSpec,
) -> Result<(PerfMeasurement, HttpRunStats), ActuatorError> {
    spec.validate()?;
    if w.total() == 0 {
        return Err(ActuatorError::EmptyWorkload);
    }
    let catalog = scripts.catalog();
    if w.len() != catalog.len() {
        return Err(ActuatorError::CatalogMismatch { got: w.len(), expected: catalog.len() });
    }
    for (j, &users) in w.users().iter().enumerate() {
        if users > 0 && scripts.get(j).is_none() {
            return Err(ActuatorError::MissingScript { name: catalog.name(j).to_string() });
        }
    }
    probe(&spec.base_url, spec.timeout)?;

    let total_users = w.total();
    let deadline = Instant::now() + spec.duration;
    let mut handles = Vec::with_capacity(total_users as usize);
    let mut user_index = 0usize;
    for (j, &users) in w.users().iter().enumerate() {
        for _ in 0..users {
            let script: TransactionScript = scripts.get(j).unwrap().clone();
            let base_url = spec.base_url.clone();
            let timeout = spec.timeout;
            let user = user_index;
            let start_delay = if total_users > 1 {
                spec.ramp_up.mul_f64(user as f64 / (total_users - 1) as f64)
            } else {
                Duration::ZERO
            };
            user_index += 1;
            handles.push(std::thread::spawn(move || {
                virtual_user_loop(&script, &base_url, timeout, start_delay, deadline, user)
            }));
        }
    }

    let mut stats = HttpRunStats::default();
    for h in handles {
        let tally = h.join().map_err(|_| ActuatorError::Driver("virtual user panicked".into()))?;
        stats.merge(&tally);
    }
    Ok((stats.measurement(), stats))
}

fn virtual_user_loop(
    script: &TransactionScript,
    base_url: &str,
    timeout: Duration,
    start_delay: Duration,
    deadline: Instant,
    user: usize,
) -> HttpRunStats {
    if !start_delay.is_zero() {
        std::thread::sleep(start_delay);
    }
    let agent = build_agent(timeout);
    let mut tally = HttpRunStats::default();
    let mut iteration: u64 = 0;
    'run: loop {
        for step in &script.steps {
            if Instant::now() >= deadline {
                break 'run;
            }
            let started = Instant::now();
            let outcome = run_step(&agent, base_url, step, user, iteration, started);
            tally.record(outcome, timeout);
        }
        iteration += 1;
    }
    tally
}

/// Executes the workload and returns only the measurement.
pub fn execute(
    w: &Workload,
    scripts: &ScriptSet,
    spec: &RunSpec,
) -> Result<PerfMeasurement, ActuatorError> {
    execute_with_stats(w, scripts, spec).map(|(m, _)| m)
}

/// One step's result in a dry run.
#[derive(Debug, Clone)]
pub struct DryRunStep {
    pub transaction: String,
    pub step_index: usize,
    pub method: String,
    pub path: String,
    /// None when no response arrived (transport failure or timeout).
    pub status: Option<u16>,
    pub latency_ms: f64,
    pub ok: bool,
    pub detail: String,
}

/// Single-user smoke test of every script.
#[derive(Debug, Clone, Default)]
pub struct DryRunReport {
    pub steps: Vec<DryRunStep>,
}

impl DryRunReport {
    pub fn all_ok(&self) -> bool {
        self.steps.iter().all(|s| s.ok)
    }

    pub fn first_failure(&self) -> Option<&DryRunStep> {
        self.steps.iter().find(|s| !s.ok)
    }
}

/// Runs every script once with a single user and reports each step's status
/// and latency. Nothing else is mutated; this exists to validate scripts and
/// connectivity before an expensive learning run.
pub fn dry_run(scripts: &ScriptSet, spec: &RunSpec) -> Result<DryRunReport, ActuatorError> {
    spec.validate()?;
    probe(&spec.base_url, spec.timeout)?;
    let agent = build_agent(spec.timeout);
    let mut report = DryRunReport::default();
    for index in scripts.scripted_indices() {
        let script = scripts.get(index).unwrap();
        for (step_index, step) in script.steps.iter().enumerate() {
            let started = Instant::now();
            let outcome = run_step(&agent, &spec.base_url, step, 0, 0, started);
            let transport_latency_ms = started.elapsed().as_micros() as f64 / 1000.0;
            let (status, ok, detail, latency_ms) = match outcome {
                StepOutcome::Completed { micros, status } => {
                    (Some(status), true, "ok".to_string(), micros as f64 / 1000.0)
                }
                StepOutcome::FailedWithResponse { micros, status } => (
                    Some(status),
                    false,
                    "response failed the success predicate".to_string(),
                    micros as f64 / 1000.0,
                ),
                StepOutcome::FailedNoResponse => (
                    None,
                    false,
                    "transport failure before a response".to_string(),
                    transport_latency_ms,
                ),
                StepOutcome::TimedOut => (
                    None,
                    false,
                    format!("timed out after {} ms", spec.timeout.as_millis()),
                    spec.timeout.as_micros() as f64 / 1000.0,
                ),
            };
            report.steps.push(DryRunStep {
                transaction: script.name.clone(),
                step_index,
                method: step.method.clone(),
                path: HttpStep::substitute(&step.path, 0, 0),
                status,
                latency_ms,
                ok,
                detail,
            });
        }
    }
    Ok(report)
}

/// The HTTP environment as seen by the agent: scripts plus a run spec.
pub struct HttpActuator {
    scripts: ScriptSet,
    spec: RunSpec,
}

impl HttpActuator {
    pub fn new(scripts: ScriptSet, spec: RunSpec) -> Self {
        Self { scripts, spec }
    }

    pub fn spec(&self) -> &RunSpec {
        &self.spec
    }

    pub fn scripts(&self) -> &ScriptSet {
        &self.scripts
    }
}

impl Actuator for HttpActuator {
    fn catalog(&self) -> &TransactionCatalog {
        self.scripts.catalog()
    }

    /// The step key is ignored: a live system's variability is real, not
    /// replayed noise.
    fn run(&mut self, w: &Workload, _key: StepKey) -> Result<PerfMeasurement, ActuatorError> {
        execute(w, &self.scripts, &self.spec)
    }
}
