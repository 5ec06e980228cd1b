//! Solver drivers: the adaptive extragradient method with backtracking
//! step-constant search, its two slack-tolerant variants, and the fixed-step
//! baselines used for comparison.

use std::collections::BTreeMap;

use crate::vector::Vector;

mod adaptive;
mod baselines;
mod bounds;

pub use adaptive::{solve_adaptive, solve_adaptive_slack};
pub use baselines::{solve_classical_eg, solve_mirror_descent, solve_nonadaptive_eg};
pub use bounds::{
    multiplicative_limit_floor, theoretical_bound, trial_budget_check, uniform_rate_bound,
    TrialBudgetReport,
};

/// How the backtracking acceptance test treats the slack parameter `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackMode {
    /// Plain test: `lhs <= L (V(w,z) + V(z',w))`.
    None,
    /// `lhs <= L (V(w,z) + V(z',w)) + delta`.
    Additive,
    /// `lhs <= L (V(w,z) + V(z',w)) + L delta`.
    Multiplicative,
}

impl SlackMode {
    pub fn label(self) -> &'static str {
        match self {
            SlackMode::None => "adaptive",
            SlackMode::Additive => "adaptive-additive-slack",
            SlackMode::Multiplicative => "adaptive-multiplicative-slack",
        }
    }
}

/// Settings for the adaptive solver.
#[derive(Debug, Clone)]
pub struct AdaptiveConfig {
    /// Initial step constant `L_0`.
    pub l0: f64,
    /// Overrides the problem's strong-monotonicity modulus when set.
    pub mu_override: Option<f64>,
    pub max_iters: usize,
    /// Backtracking trials allowed within one iteration before giving up.
    pub max_trials_per_iter: usize,
    /// Stop once `V(z_{k+1}, z_k)` drops to this value; `0.0` disables early
    /// stopping.
    pub stop_tol: f64,
}

impl AdaptiveConfig {
    pub fn new(l0: f64, max_iters: usize) -> Self {
        AdaptiveConfig {
            l0,
            mu_override: None,
            max_iters,
            max_trials_per_iter: 60,
            stop_tol: 0.0,
        }
    }
}

/// Settings for the slack-tolerant adaptive variants.
#[derive(Debug, Clone)]
pub struct SlackConfig {
    pub base: AdaptiveConfig,
    pub delta: f64,
    pub mode: SlackMode,
}

impl SlackConfig {
    pub fn new(base: AdaptiveConfig, delta: f64, mode: SlackMode) -> Self {
        SlackConfig { base, delta, mode }
    }
}

/// Settings for the non-adaptive extragradient baseline (constant `L`).
#[derive(Debug, Clone)]
pub struct FixedStepConfig {
    pub l: f64,
    pub mu_override: Option<f64>,
    pub max_iters: usize,
    pub stop_tol: f64,
}

impl FixedStepConfig {
    pub fn new(l: f64, max_iters: usize) -> Self {
        FixedStepConfig {
            l,
            mu_override: None,
            max_iters,
            stop_tol: 0.0,
        }
    }
}

/// Settings for the classical Euclidean extragradient baseline.
#[derive(Debug, Clone)]
pub struct ClassicalConfig {
    /// Step size; when `None` it is set to `0.5 / Lhat` with `Lhat` a sampled
    /// Euclidean Lipschitz estimate.
    pub step: Option<f64>,
    pub max_iters: usize,
    pub stop_tol: f64,
    /// Sample pairs for the Lipschitz estimate when `step` is `None`.
    pub lipschitz_samples: usize,
    pub lipschitz_seed: u64,
}

impl ClassicalConfig {
    pub fn new(max_iters: usize) -> Self {
        ClassicalConfig {
            step: None,
            max_iters,
            stop_tol: 0.0,
            lipschitz_samples: 200,
            lipschitz_seed: 0,
        }
    }
}

/// Settings for plain mirror descent (unit step in the problem's geometry).
#[derive(Debug, Clone)]
pub struct MirrorDescentConfig {
    pub max_iters: usize,
    pub stop_tol: f64,
}

impl MirrorDescentConfig {
    pub fn new(max_iters: usize) -> Self {
        MirrorDescentConfig {
            max_iters,
            stop_tol: 0.0,
        }
    }
}

/// Everything a solver records about one run.
pub struct SolverRun {
    /// Label identifying the method, e.g. `"adaptive"` or `"classical-eg"`.
    pub solver: String,
    /// `z_0 ... z_N` (initial point included).
    pub iterates: Vec<Vector>,
    /// Extrapolation points `w_0 ... w_{N-1}`; empty for mirror descent.
    pub extrapolations: Vec<Vector>,
    /// Accepted step constant per iteration (`L_{k+1}`); the inverse step
    /// size for the classical baseline; `1` for mirror descent.
    pub l_sequence: Vec<f64>,
    /// Acceptance-test evaluations per iteration; `1` for the baselines.
    pub trials: Vec<u64>,
    /// Cumulative operator evaluations after each iteration.
    pub oracle_calls: Vec<u64>,
    pub wall_ms: f64,
    /// Metric traces indexed by name, filled by the experiment layer.
    pub metrics: BTreeMap<String, Vec<f64>>,
}

impl SolverRun {
    /// Completed iterations (may be fewer than configured when an early-stop
    /// tolerance triggered).
    pub fn iterations(&self) -> usize {
        self.l_sequence.len()
    }

    pub fn final_iterate(&self) -> &Vector {
        self.iterates.last().expect("a run records at least z_0")
    }

    pub fn total_trials(&self) -> u64 {
        self.trials.iter().sum()
    }

    pub fn total_oracle_calls(&self) -> u64 {
        self.oracle_calls.last().copied().unwrap_or(0)
    }
}
