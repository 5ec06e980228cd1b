//! Experiment configuration: a TOML schema with strict validation, plus the
//! built-in default configurations for each experiment family.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::DataDistribution;

/// Which experiment family a config drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BoxSimplex,
    Erm,
    Synthetic,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BoxSimplex => "box_simplex",
            ExperimentKind::Erm => "erm",
            ExperimentKind::Synthetic => "synthetic",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "box_simplex" => Ok(ExperimentKind::BoxSimplex),
            "erm" => Ok(ExperimentKind::Erm),
            "synthetic" => Ok(ExperimentKind::Synthetic),
            other => Err(Error::Config(format!(
                "unknown experiment '{other}' (expected box_simplex, erm, or synthetic)"
            ))),
        }
    }
}

/// Per-iterate quality measures a run can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Duality gap of the matrix game.
    Gap,
    /// Ridge objective value.
    Objective,
    /// Bregman distance to the known solution.
    Distance,
    /// Theoretical per-iterate bound from the realized step constants.
    Bound,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Gap => "gap",
            Metric::Objective => "objective",
            Metric::Distance => "distance",
            Metric::Bound => "bound",
        }
    }
}

/// Solver families selectable in a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Adaptive,
    AdaptiveAdditiveSlack,
    AdaptiveMultiplicativeSlack,
    NonadaptiveEg,
    ClassicalEg,
    MirrorDescent,
}

impl SolverKind {
    pub fn token(self) -> &'static str {
        match self {
            SolverKind::Adaptive => "adaptive",
            SolverKind::AdaptiveAdditiveSlack => "adaptive_additive_slack",
            SolverKind::AdaptiveMultiplicativeSlack => "adaptive_multiplicative_slack",
            SolverKind::NonadaptiveEg => "nonadaptive_eg",
            SolverKind::ClassicalEg => "classical_eg",
            SolverKind::MirrorDescent => "mirror_descent",
        }
    }

    fn is_adaptive(self) -> bool {
        matches!(
            self,
            SolverKind::Adaptive
                | SolverKind::AdaptiveAdditiveSlack
                | SolverKind::AdaptiveMultiplicativeSlack
        )
    }

    fn takes_slack(self) -> bool {
        matches!(
            self,
            SolverKind::AdaptiveAdditiveSlack | SolverKind::AdaptiveMultiplicativeSlack
        )
    }
}

/// One solver cell of the run grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub max_iters: usize,
    /// CSV/plot label; defaults to the kind token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Initial step constant for the adaptive kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    /// Slack parameter for the slack-tolerant kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Constant for the non-adaptive extragradient baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// Step size for the classical baseline; omitted means an automatic
    /// `0.5 / Lhat` from a sampled Lipschitz estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Overrides the problem's strong-monotonicity modulus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_override: Option<f64>,
    /// Injected bounded oracle noise for this cell (amplitude in 2-norm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_amplitude: Option<f64>,
    /// Early-stop tolerance; omitted or 0 disables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
    /// Backtracking trial budget per iteration for adaptive kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_trials: Option<usize>,
}

impl SolverSpec {
    pub fn effective_label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.kind.token().to_string())
    }

    fn validate(&self) -> Result<()> {
        let kind = self.kind;
        let token = kind.token();
        if self.max_iters == 0 {
            return Err(Error::Config(format!("solver '{token}': max_iters must be positive")));
        }
        if let Some(label) = &self.label {
            if label.is_empty()
                || !label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Config(format!(
                    "solver label '{label}' must be nonempty [A-Za-z0-9_-]"
                )));
            }
        }
        let positive = |name: &str, v: Option<f64>, required: bool| -> Result<()> {
            match v {
                Some(x) if x.is_finite() && x > 0.0 => Ok(()),
                Some(x) => Err(Error::Config(format!(
                    "solver '{token}': {name} must be positive and finite, got {x}"
                ))),
                None if required => {
                    Err(Error::Config(format!("solver '{token}': {name} is required")))
                }
                None => Ok(()),
            }
        };
        let absent = |name: &str, missing: bool| -> Result<()> {
            if missing {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "solver '{token}': {name} does not apply to this kind"
                )))
            }
        };

        positive("l0", self.l0, kind.is_adaptive())?;
        if !kind.is_adaptive() {
            absent("l0", self.l0.is_none())?;
            absent("max_trials", self.max_trials.is_none())?;
        }
        if kind.takes_slack() {
            match self.delta {
                Some(d) if d.is_finite() && d >= 0.0 => {}
                Some(d) => {
                    return Err(Error::Config(format!(
                        "solver '{token}': delta must be nonnegative, got {d}"
                    )))
                }
                None => return Err(Error::Config(format!("solver '{token}': delta is required"))),
            }
        } else {
            absent("delta", self.delta.is_none())?;
        }
        if kind == SolverKind::NonadaptiveEg {
            positive("l", self.l, true)?;
        } else {
            absent("l", self.l.is_none())?;
        }
        if kind == SolverKind::ClassicalEg {
            positive("step", self.step, false)?;
        } else {
            absent("step", self.step.is_none())?;
        }
        if kind == SolverKind::ClassicalEg || kind == SolverKind::MirrorDescent {
            absent("mu_override", self.mu_override.is_none())?;
        } else if let Some(m) = self.mu_override {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Config(format!(
                    "solver '{token}': mu_override must be nonnegative, got {m}"
                )));
            }
        }
        if let Some(a) = self.noise_amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::Config(format!(
                    "solver '{token}': noise_amplitude must be nonnegative, got {a}"
                )));
            }
        }
        if let Some(t) = self.stop_tol {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Config(format!(
                    "solver '{token}': stop_tol must be nonnegative, got {t}"
                )));
            }
        }
        if let Some(t) = self.max_trials {
            if t == 0 {
                return Err(Error::Config(format!(
                    "solver '{token}': max_trials must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Matrix-game experiment parameters; each `(mu_y, mu_z)` pair is one grid
/// variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSimplexParams {
    pub n: usize,
    pub mu_pairs: Vec<(f64, f64)>,
}

/// Ridge experiment parameters; each lambda is one grid variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErmParams {
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub lambdas: Vec<f64>,
    pub distribution: String,
    /// Overrides the similarity weight (default: spectral estimate for
    /// exponential data, fixed fallback for heavy-tailed data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Affine-instance parameters; a single variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    pub n: usize,
    pub mu: f64,
    pub l: f64,
}

/// A full experiment description as parsed from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    /// Metric selection; empty means the family default.
    #[serde(default)]
    pub metrics: Vec<Metric>,
    /// Plot vertical axis: logarithmic by default.
    #[serde(default = "default_true")]
    pub log_y: bool,
    /// Record wall time into the CSV `wall_ms` column (breaks byte-level
    /// reproducibility of artifacts; timing always lands in the manifest).
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_simplex: Option<BoxSimplexParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erm: Option<ErmParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticParams>,
    #[serde(rename = "solver")]
    pub solvers: Vec<SolverSpec>,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("cannot render config: {e}")))
    }

    /// Metric list with the family default applied when none was selected.
    pub fn effective_metrics(&self) -> Vec<Metric> {
        if !self.metrics.is_empty() {
            return self.metrics.clone();
        }
        match self.experiment {
            ExperimentKind::BoxSimplex => vec![Metric::Gap],
            ExperimentKind::Erm => vec![Metric::Objective],
            ExperimentKind::Synthetic => vec![Metric::Distance, Metric::Bound],
        }
    }

    /// Number of problem variants in the grid (mu pairs / lambdas / one).
    pub fn variant_count(&self) -> usize {
        match self.experiment {
            ExperimentKind::BoxSimplex => {
                self.box_simplex.as_ref().map_or(0, |p| p.mu_pairs.len())
            }
            ExperimentKind::Erm => self.erm.as_ref().map_or(0, |p| p.lambdas.len()),
            ExperimentKind::Synthetic => 1,
        }
    }

    /// Human-readable parameter summary of one variant, for manifests and
    /// plot titles.
    pub fn variant_description(&self, variant: usize) -> String {
        match self.experiment {
            ExperimentKind::BoxSimplex => {
                let p = self.box_simplex.as_ref().expect("validated");
                let (mu_y, mu_z) = p.mu_pairs[variant];
                format!("n={} mu_y={mu_y} mu_z={mu_z}", p.n)
            }
            ExperimentKind::Erm => {
                let p = self.erm.as_ref().expect("validated");
                format!(
                    "n={} s={} m={} lambda={} data={}",
                    p.n, p.s, p.m, p.lambdas[variant], p.distribution
                )
            }
            ExperimentKind::Synthetic => {
                let p = self.synthetic.as_ref().expect("validated");
                format!("n={} mu={} l={}", p.n, p.mu, p.l)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::Config("seeds contain duplicates".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("output_dir must not be empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("at least one [[solver]] is required".into()));
        }
        let mut labels = BTreeSet::new();
        for spec in &self.solvers {
            spec.validate()?;
            if !labels.insert(spec.effective_label()) {
                return Err(Error::Config(format!(
                    "duplicate solver label '{}' — set `label` to disambiguate",
                    spec.effective_label()
                )));
            }
        }

        let (family, allowed): (&str, &[Metric]) = match self.experiment {
            ExperimentKind::BoxSimplex => ("box_simplex", &[Metric::Gap]),
            ExperimentKind::Erm => ("erm", &[Metric::Objective]),
            ExperimentKind::Synthetic => ("synthetic", &[Metric::Distance, Metric::Bound]),
        };
        for m in &self.metrics {
            if !allowed.contains(m) {
                return Err(Error::Config(format!(
                    "metric '{}' does not apply to experiment '{family}'",
                    m.name()
                )));
            }
        }

        let expect_table = |present: bool, name: &str, wanted: bool| -> Result<()> {
            match (present, wanted) {
                (false, true) => Err(Error::Config(format!(
                    "experiment '{family}' needs a [{name}] table"
                ))),
                (true, false) => Err(Error::Config(format!(
                    "[{name}] table does not belong to experiment '{family}'"
                ))),
                _ => Ok(()),
            }
        };
        expect_table(
            self.box_simplex.is_some(),
            "box_simplex",
            self.experiment == ExperimentKind::BoxSimplex,
        )?;
        expect_table(self.erm.is_some(), "erm", self.experiment == ExperimentKind::Erm)?;
        expect_table(
            self.synthetic.is_some(),
            "synthetic",
            self.experiment == ExperimentKind::Synthetic,
        )?;

        match self.experiment {
            ExperimentKind::BoxSimplex => {
                let p = self.box_simplex.as_ref().expect("checked above");
                if p.n < 2 {
                    return Err(Error::Config(format!(
                        "box_simplex.n must be at least 2, got {}",
                        p.n
                    )));
                }
                if p.mu_pairs.is_empty() {
                    return Err(Error::Config("box_simplex.mu_pairs must not be empty".into()));
                }
                for (i, (mu_y, mu_z)) in p.mu_pairs.iter().enumerate() {
                    if !(mu_y.is_finite() && *mu_y > 0.0 && mu_z.is_finite() && *mu_z > 0.0) {
                        return Err(Error::Config(format!(
                            "box_simplex.mu_pairs[{i}] must be positive, got ({mu_y}, {mu_z})"
                        )));
                    }
                }
            }
            ExperimentKind::Erm => {
                let p = self.erm.as_ref().expect("checked above");
                if p.n == 0 || p.s == 0 || p.m == 0 {
                    return Err(Error::Config(format!(
                        "erm dimensions must be positive, got n={} s={} m={}",
                        p.n, p.s, p.m
                    )));
                }
                if p.lambdas.is_empty() {
                    return Err(Error::Config("erm.lambdas must not be empty".into()));
                }
                for (i, l) in p.lambdas.iter().enumerate() {
                    if !(l.is_finite() && *l > 0.0) {
                        return Err(Error::Config(format!(
                            "erm.lambdas[{i}] must be positive, got {l}"
                        )));
                    }
                }
                DataDistribution::from_tag(&p.distribution)
                    .map_err(|e| Error::Config(format!("erm.distribution: {e}")))?;
                if let Some(g) = p.gamma {
                    if !(g.is_finite() && g >= 0.0) {
                        return Err(Error::Config(format!(
                            "erm.gamma must be nonnegative, got {g}"
                        )));
                    }
                }
            }
            ExperimentKind::Synthetic => {
                let p = self.synthetic.as_ref().expect("checked above");
                if p.n == 0 {
                    return Err(Error::Config("synthetic.n must be positive".into()));
                }
                if !(p.mu.is_finite() && p.mu > 0.0 && p.l.is_finite() && p.mu <= p.l) {
                    return Err(Error::Config(format!(
                        "synthetic needs 0 < mu <= l, got mu={} l={}",
                        p.mu, p.l
                    )));
                }
                if p.n == 1 && p.mu < p.l {
                    return Err(Error::Config(
                        "synthetic.n = 1 requires mu = l (one eigenvalue)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The built-in configuration for a family, with the reference dimensions
    /// and iteration budgets.
    pub fn default_for(kind: ExperimentKind) -> ExperimentConfig {
        let solver = |kind: SolverKind, max_iters: usize| SolverSpec {
            kind,
            max_iters,
            label: None,
            l0: None,
            delta: None,
            l: None,
            step: None,
            mu_override: None,
            noise_amplitude: None,
            stop_tol: None,
            max_trials: None,
        };
        match kind {
            ExperimentKind::BoxSimplex => ExperimentConfig {
                experiment: kind,
                output_dir: PathBuf::from("runs/box_simplex"),
                seeds: vec![0],
                metrics: vec![],
                log_y: true,
                record_timing: false,
                box_simplex: Some(BoxSimplexParams {
                    n: 200,
                    mu_pairs: vec![(1e-2, 1e-2), (1e-6, 1e-2)],
                }),
                erm: None,
                synthetic: None,
                solvers: vec![
                    SolverSpec {
                        l0: Some(2.0),
                        ..solver(SolverKind::Adaptive, 500)
                    },
                    SolverSpec {
                        l: Some(1.0),
                        ..solver(SolverKind::NonadaptiveEg, 500)
                    },
                    solver(SolverKind::ClassicalEg, 500),
                ],
            },
            ExperimentKind::Erm => ExperimentConfig {
                experiment: kind,
                output_dir: PathBuf::from("runs/erm"),
                seeds: vec![0],
                metrics: vec![],
                log_y: true,
                record_timing: false,
                box_simplex: None,
                erm: Some(ErmParams {
                    n: 50,
                    s: 100,
                    m: 100,
                    lambdas: vec![1e-1, 1e-3],
                    distribution: "exponential".into(),
                    gamma: None,
                }),
                synthetic: None,
                solvers: vec![
                    SolverSpec {
                        l0: Some(2.0),
                        ..solver(SolverKind::Adaptive, 300)
                    },
                    SolverSpec {
                        l: Some(1.0),
                        ..solver(SolverKind::NonadaptiveEg, 300)
                    },
                    solver(SolverKind::MirrorDescent, 300),
                ],
            },
            ExperimentKind::Synthetic => ExperimentConfig {
                experiment: kind,
                output_dir: PathBuf::from("runs/synthetic"),
                seeds: vec![0],
                metrics: vec![],
                log_y: true,
                record_timing: false,
                box_simplex: None,
                erm: None,
                synthetic: Some(SyntheticParams {
                    n: 20,
                    mu: 1.0,
                    l: 10.0,
                }),
                solvers: vec![
                    SolverSpec {
                        l0: Some(20.0),
                        ..solver(SolverKind::Adaptive, 200)
                    },
                    SolverSpec {
                        l: Some(10.0),
                        ..solver(SolverKind::NonadaptiveEg, 200)
                    },
                ],
            },
        }
    }
}
