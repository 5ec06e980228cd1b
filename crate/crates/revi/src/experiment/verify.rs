//! Self-check suites behind the `verify` command: every closed-form
//! component is re-derived by an independent path (brute-force grids, vertex
//! enumeration, finite differences, sampled inequalities, recursion replays)
//! and compared at fixed tolerances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    BoxSimplexGeometry, BregmanGeometry, EuclideanGeometry, QuadraticGeometry,
    ScaledEntropyGeometry,
};
use crate::kernels::{
    BoxSimplexKernel, EntropySimplexKernel, QuadraticFormBallKernel, WeightedBoxKernel,
};
use crate::metrics::{self, oracle};
use crate::problems::{BoxSimplexInstance, DataDistribution, ErmInstance, SyntheticInstance};
use crate::set::FeasibleSet;
use crate::solvers::{
    multiplicative_limit_floor, solve_adaptive, solve_adaptive_slack, theoretical_bound,
    trial_budget_check, uniform_rate_bound, AdaptiveConfig, SlackConfig, SlackMode,
};
use crate::vector::Vector;
use crate::vi::{certify_relative_strong_monotonicity, estimate_relative_smoothness};

use nalgebra::DMatrix;

/// Comparison tolerances of the check suites. `scaled` tightens or loosens
/// all of them at once (used by the negative tests).
#[derive(Debug, Clone)]
pub struct VerifyTolerances {
    /// Max-norm distance between a kernel prox and the grid oracle.
    pub kernel_point: f64,
    /// Allowed prox-objective excess of either point over the other.
    pub kernel_objective: f64,
    /// Relative difference between the closed-form gap and enumeration.
    pub gap: f64,
    /// Worst relative finite-difference error of a gradient.
    pub gradient: f64,
    /// Allowed negative slack in sampled monotonicity inequalities.
    pub monotonicity: f64,
    /// Slack for distance-vs-bound comparisons, relative to `1 + V0`.
    pub theorem: f64,
    /// Absolute slack for single-step contraction checks.
    pub contraction: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            kernel_point: 1e-5,
            kernel_objective: 2e-5,
            gap: 1e-6,
            gradient: 1e-5,
            monotonicity: 1e-8,
            theorem: 1e-9,
            contraction: 1e-10,
        }
    }
}

impl VerifyTolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        VerifyTolerances {
            kernel_point: self.kernel_point * factor,
            kernel_objective: self.kernel_objective * factor,
            gap: self.gap * factor,
            gradient: self.gradient * factor,
            monotonicity: self.monotonicity * factor,
            theorem: self.theorem * factor,
            contraction: self.contraction * factor,
        }
    }
}

/// One named check with its outcome and a human-readable measurement.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(suite: &'static str, check: impl Into<String>, passed: bool, detail: String) -> Self {
        CheckOutcome {
            suite,
            check: check.into(),
            passed,
            detail,
        }
    }
}

pub const SUITE_NAMES: [&str; 6] = [
    "kernels",
    "gap",
    "gradients",
    "monotonicity",
    "theorems",
    "budget",
];

/// Runs all suites (or one selected by `filter`) at default tolerances.
pub fn run_suites(filter: Option<&str>) -> Result<Vec<CheckOutcome>> {
    run_suites_with(filter, &VerifyTolerances::default())
}

pub fn run_suites_with(filter: Option<&str>, tol: &VerifyTolerances) -> Result<Vec<CheckOutcome>> {
    if let Some(name) = filter {
        if !SUITE_NAMES.contains(&name) {
            return Err(Error::Config(format!(
                "unknown verify suite '{name}' (expected one of {})",
                SUITE_NAMES.join(", ")
            )));
        }
    }
    let selected = |name: &str| filter.map_or(true, |f| f == name);
    let mut outcomes = Vec::new();
    if selected("kernels") {
        kernels_suite(tol, &mut outcomes)?;
    }
    if selected("gap") {
        gap_suite(tol, &mut outcomes)?;
    }
    if selected("gradients") {
        gradients_suite(tol, &mut outcomes)?;
    }
    if selected("monotonicity") {
        monotonicity_suite(tol, &mut outcomes)?;
    }
    if selected("theorems") {
        theorems_suite(tol, &mut outcomes)?;
    }
    if selected("budget") {
        budget_suite(tol, &mut outcomes)?;
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------- helpers

/// Feasible sample pulled slightly toward a strictly interior reference, so
/// entropy terms stay away from the boundary.
fn interior_sample(set: &FeasibleSet, rng: &mut ChaCha8Rng) -> Vector {
    fn pull(set: &FeasibleSet, x: &[f64], out: &mut Vec<f64>) {
        match set {
            FeasibleSet::Ball { center, .. } => {
                for (xi, ci) in x.iter().zip(center.iter()) {
                    out.push(0.9 * xi + 0.1 * ci);
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for ((xi, lo), hi) in x.iter().zip(lower.iter()).zip(upper.iter()) {
                    out.push(0.9 * xi + 0.1 * 0.5 * (lo + hi));
                }
            }
            FeasibleSet::Simplex { dim } => {
                let c = 1.0 / *dim as f64;
                for xi in x {
                    out.push(0.9 * xi + 0.1 * c);
                }
            }
            FeasibleSet::Product(blocks) => {
                let mut offset = 0;
                for block in blocks {
                    pull(block, &x[offset..offset + block.dim()], out);
                    offset += block.dim();
                }
            }
        }
    }
    let raw = set.sample(rng);
    let mut out = Vec::with_capacity(raw.dim());
    pull(set, raw.as_slice(), &mut out);
    Vector::new(out).expect("convex mix of finite points")
}

struct ProxCase {
    linear: Vector,
    anchors: Vec<(f64, Vector)>,
}

fn random_prox_case(set: &FeasibleSet, rng: &mut ChaCha8Rng, anchor_count: usize) -> ProxCase {
    let dim = set.dim();
    let linear = Vector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .expect("finite draws");
    let anchors = (0..anchor_count)
        .map(|_| (rng.gen_range(0.5..2.0), interior_sample(set, rng)))
        .collect();
    ProxCase { linear, anchors }
}

fn borrow_anchors(anchors: &[(f64, Vector)]) -> Vec<(f64, &Vector)> {
    anchors.iter().map(|(w, x)| (*w, x)).collect()
}

fn max_abs_diff(a: &Vector, b: &Vector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Compares one kernel prox against the grid oracle; returns
/// `(point gap, objective excess of the kernel point over the oracle point)`.
fn compare_with_oracle(
    geometry: &dyn BregmanGeometry,
    set: &FeasibleSet,
    case: &ProxCase,
    kernel_point: &Vector,
    resolution: usize,
) -> Result<(f64, f64)> {
    let anchors = borrow_anchors(&case.anchors);
    let oracle_point = oracle::grid_prox_oracle(geometry, set, &case.linear, &anchors, resolution)?;
    let point_gap = max_abs_diff(kernel_point, &oracle_point);
    let kernel_obj = oracle::prox_objective(geometry, &case.linear, &anchors, kernel_point)?;
    let oracle_obj = oracle::prox_objective(geometry, &case.linear, &anchors, &oracle_point)?;
    Ok((point_gap, kernel_obj - oracle_obj))
}

fn push_kernel_outcome(
    outcomes: &mut Vec<CheckOutcome>,
    tol: &VerifyTolerances,
    kernel: &str,
    cases: usize,
    worst_point: f64,
    worst_obj: f64,
) {
    outcomes.push(CheckOutcome::new(
        "kernels",
        format!("{kernel} prox matches grid oracle"),
        worst_point <= tol.kernel_point && worst_obj <= tol.kernel_objective,
        format!(
            "{cases} cases: max point gap {worst_point:.2e} (tol {:.0e}), max objective excess \
             {worst_obj:.2e} (tol {:.0e})",
            tol.kernel_point, tol.kernel_objective
        ),
    ));
}

// ---------------------------------------------------------------- kernels

fn kernels_suite(tol: &VerifyTolerances, outcomes: &mut Vec<CheckOutcome>) -> Result<()> {
    // Entropy prox on the simplex vs brute force under the matching geometry.
    let mut worst_point = 0.0_f64;
    let mut worst_obj = f64::NEG_INFINITY;
    let mut cases = 0;
    for (i, dim) in [2usize, 3, 2, 3].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let scale = rng.gen_range(0.5..2.0);
        let set = FeasibleSet::simplex(dim)?;
        let case = random_prox_case(&set, &mut rng, 1 + i % 2);
        let kernel = EntropySimplexKernel::new(dim, scale)?;
        let point = kernel.prox(&case.linear, &borrow_anchors(&case.anchors))?;
        let geometry = ScaledEntropyGeometry::new(dim, scale)?;
        let (pg, og) = compare_with_oracle(&geometry, &set, &case, &point, 160)?;
        worst_point = worst_point.max(pg);
        worst_obj = worst_obj.max(og);
        cases += 1;
    }
    push_kernel_outcome(outcomes, tol, "entropy-simplex", cases, worst_point, worst_obj);

    // Weighted box prox vs brute force under a diagonal quadratic geometry
    // whose divergence is the same weighted squared distance.
    let mut worst_point = 0.0_f64;
    let mut worst_obj = f64::NEG_INFINITY;
    let mut cases = 0;
    for (i, dim) in [1usize, 2, 3, 2].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + i as u64);
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.3..2.0)).collect();
        let set = FeasibleSet::symmetric_unit_box(dim);
        let case = random_prox_case(&set, &mut rng, 1 + i % 2);
        let kernel = WeightedBoxKernel::new(weights.clone())?;
        let point = kernel.prox(
            &vec![-1.0; dim],
            &vec![1.0; dim],
            &case.linear,
            &borrow_anchors(&case.anchors),
        )?;
        let h = DMatrix::from_fn(dim, dim, |r, c| if r == c { 2.0 * weights[r] } else { 0.0 });
        let geometry = QuadraticGeometry::new(h, Vector::zeros(dim))?;
        let resolution = if dim == 3 { 100 } else { 160 };
        let (pg, og) = compare_with_oracle(&geometry, &set, &case, &point, resolution)?;
        worst_point = worst_point.max(pg);
        worst_obj = worst_obj.max(og);
        cases += 1;
    }
    push_kernel_outcome(outcomes, tol, "weighted-box", cases, worst_point, worst_obj);

    // Quadratic-form prox over a ball vs brute force in spherical coordinates.
    let mut worst_point = 0.0_f64;
    let mut worst_obj = f64::NEG_INFINITY;
    let mut cases = 0;
    for (i, dim) in [1usize, 2, 3, 2].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + i as u64);
        let b = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let h = &b * b.transpose() + DMatrix::identity(dim, dim);
        let radius = rng.gen_range(0.5..1.5);
        let set = FeasibleSet::ball(Vector::zeros(dim), radius)?;
        let case = random_prox_case(&set, &mut rng, 1 + i % 2);
        let kernel = QuadraticFormBallKernel::new(h.clone())?;
        let point = kernel
            .prox(
                &Vector::zeros(dim),
                radius,
                &case.linear,
                &borrow_anchors(&case.anchors),
            )?
            .point;
        let geometry = QuadraticGeometry::new(h, Vector::zeros(dim))?;
        let resolution = if dim == 3 { 100 } else { 160 };
        let (pg, og) = compare_with_oracle(&geometry, &set, &case, &point, resolution)?;
        worst_point = worst_point.max(pg);
        worst_obj = worst_obj.max(og);
        cases += 1;
    }
    push_kernel_outcome(outcomes, tol, "quadratic-ball", cases, worst_point, worst_obj);

    // Coupled box-simplex prox at n = 1 (one box coordinate, point simplex)
    // vs brute force under the coupled geometry.
    let mut worst_point = 0.0_f64;
    let mut worst_obj = f64::NEG_INFINITY;
    let mut cases = 0;
    for i in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + i);
        let a = DMatrix::from_element(1, 1, rng.gen_range(0.5..2.0));
        let set = FeasibleSet::product(vec![
            FeasibleSet::symmetric_unit_box(1),
            FeasibleSet::simplex(1)?,
        ])?;
        let case = random_prox_case(&set, &mut rng, 1 + (i % 2) as usize);
        let kernel = BoxSimplexKernel::new(a.clone(), None)?;
        let point = kernel
            .prox(&[-1.0], &[1.0], &case.linear, &borrow_anchors(&case.anchors))?
            .point;
        let geometry = BoxSimplexGeometry::new(a, None)?;
        let (pg, og) = compare_with_oracle(&geometry, &set, &case, &point, 160)?;
        worst_point = worst_point.max(pg);
        worst_obj = worst_obj.max(og);
        cases += 1;
    }
    push_kernel_outcome(outcomes, tol, "box-simplex-coupled", cases, worst_point, worst_obj);

    // The coupled solver's alternating block sweeps must never increase the
    // prox objective.
    let mut worst_increase = f64::NEG_INFINITY;
    let mut traced = 0;
    for (i, n) in [2usize, 3, 4].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(450 + i as u64);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
        let set = FeasibleSet::product(vec![
            FeasibleSet::symmetric_unit_box(n),
            FeasibleSet::simplex(n)?,
        ])?;
        let case = random_prox_case(&set, &mut rng, 2);
        let kernel = BoxSimplexKernel::new(a, None)?;
        let (_, trace) = kernel.prox_with_trace(
            &vec![-1.0; n],
            &vec![1.0; n],
            &case.linear,
            &borrow_anchors(&case.anchors),
        )?;
        for pair in trace.windows(2) {
            worst_increase = worst_increase.max(pair[1] - pair[0]);
        }
        traced += trace.len();
    }
    outcomes.push(CheckOutcome::new(
        "kernels",
        "box-simplex-coupled sweep objective is non-increasing",
        worst_increase <= 1e-12,
        format!("{traced} sweeps recorded, worst increase {worst_increase:.2e}"),
    ));
    Ok(())
}

// -------------------------------------------------------------------- gap

fn gap_suite(tol: &VerifyTolerances, outcomes: &mut Vec<CheckOutcome>) -> Result<()> {
    let mut worst_rel = 0.0_f64;
    let mut min_gap = f64::INFINITY;
    let mut cases = 0;
    for seed in 0..20u64 {
        let n = 2 + (seed as usize % 4);
        let instance = BoxSimplexInstance::generate(n, 1e-2, 1e-2, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        for _ in 0..3 {
            let x = interior_sample(&instance.set(), &mut rng);
            let closed = metrics::box_simplex_gap(&instance, &x)?;
            let enumerated = oracle::box_simplex_gap_oracle(&instance, &x)?;
            let rel = (closed - enumerated).abs() / enumerated.abs().max(1.0);
            worst_rel = worst_rel.max(rel);
            min_gap = min_gap.min(closed);
            cases += 1;
        }
    }
    outcomes.push(CheckOutcome::new(
        "gap",
        "closed-form gap matches best-response enumeration",
        worst_rel <= tol.gap,
        format!("{cases} points: max relative difference {worst_rel:.2e} (tol {:.0e})", tol.gap),
    ));
    outcomes.push(CheckOutcome::new(
        "gap",
        "gap is nonnegative at sampled feasible points",
        min_gap >= 0.0,
        format!("minimum sampled gap {min_gap:.2e}"),
    ));

    // One-coordinate instance solvable by hand: payoff 2, box target 1,
    // linear cost 1/2, evaluated at y = 0, z = 1.
    let hand = BoxSimplexInstance::from_parts(
        DMatrix::from_element(1, 1, 2.0),
        Vector::new(vec![1.0])?,
        Vector::new(vec![0.5])?,
        1e-2,
        1e-2,
        0,
    )?;
    let x = Vector::new(vec![0.0, 1.0])?;
    let gap = metrics::box_simplex_gap(&hand, &x)?;
    outcomes.push(CheckOutcome::new(
        "gap",
        "one-coordinate hand case",
        (gap - 2.5).abs() <= 1e-12,
        format!("gap {gap} (expected 2.5)"),
    ));
    Ok(())
}

// -------------------------------------------------------------- gradients

fn gradients_suite(tol: &VerifyTolerances, outcomes: &mut Vec<CheckOutcome>) -> Result<()> {
    let step = 1e-6;
    let mut push = |name: &str, worst: f64| {
        outcomes.push(CheckOutcome::new(
            "gradients",
            format!("{name} gradient matches finite differences"),
            worst <= tol.gradient,
            format!("worst relative error {worst:.2e} (tol {:.0e})", tol.gradient),
        ));
    };

    // Ridge objective vs its aggregated gradient.
    let erm = ErmInstance::generate(8, 12, 3, 0.1, DataDistribution::Exponential, 5, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let points: Vec<Vector> = (0..5)
        .map(|_| {
            Vector::new((0..8).map(|_| rng.gen_range(-0.3..0.3)).collect()).expect("finite")
        })
        .collect();
    let worst = oracle::finite_difference_check(
        |x| erm.objective(x),
        |x| erm.gradient(x),
        &points,
        step,
    )?;
    push("ridge objective", worst);

    // Affine operator vs the quadratic energy it is the gradient of.
    let synthetic = SyntheticInstance::generate(5, 1.0, 6.0, 3)?;
    let m = synthetic.matrix().clone();
    let star = synthetic.solution().clone();
    let energy = move |x: &Vector| -> Result<f64> {
        let d = x.to_dvector() - star.to_dvector();
        Ok(0.5 * (&m * &d).dot(&d))
    };
    let points: Vec<Vector> = (0..5)
        .map(|_| {
            Vector::new((0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
        })
        .collect();
    let worst = oracle::finite_difference_check(
        energy,
        |x| synthetic.operator_value(x),
        &points,
        step,
    )?;
    push("affine operator", worst);

    // Every distance generator's gradient against its value.
    let mut rng = ChaCha8Rng::seed_from_u64(2100);
    let euclid = EuclideanGeometry::new(3);
    let points: Vec<Vector> = (0..4)
        .map(|_| Vector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite"))
        .collect();
    let worst = oracle::finite_difference_check(
        |x| Ok(euclid.value(x)),
        |x| Ok(euclid.gradient(x)),
        &points,
        step,
    )?;
    push("euclidean generator", worst);

    let entropy = ScaledEntropyGeometry::new(3, 1.3)?;
    let simplex = FeasibleSet::simplex(3)?;
    let points: Vec<Vector> = (0..4).map(|_| interior_sample(&simplex, &mut rng)).collect();
    let worst = oracle::finite_difference_check(
        |x| Ok(entropy.value(x)),
        |x| Ok(entropy.gradient(x)),
        &points,
        step,
    )?;
    push("entropy generator", worst);

    let b = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    let h = &b * b.transpose() + DMatrix::identity(3, 3);
    let q = Vector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let quadratic = QuadraticGeometry::new(h, q)?;
    let points: Vec<Vector> = (0..4)
        .map(|_| Vector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite"))
        .collect();
    let worst = oracle::finite_difference_check(
        |x| Ok(quadratic.value(x)),
        |x| Ok(quadratic.gradient(x)),
        &points,
        step,
    )?;
    push("quadratic generator", worst);

    let abs_a = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(0.1..1.0));
    let coupled = BoxSimplexGeometry::new(abs_a, None)?;
    let stacked = FeasibleSet::product(vec![
        FeasibleSet::symmetric_unit_box(2),
        FeasibleSet::simplex(2)?,
    ])?;
    let points: Vec<Vector> = (0..4).map(|_| interior_sample(&stacked, &mut rng)).collect();
    let worst = oracle::finite_difference_check(
        |x| Ok(coupled.value(x)),
        |x| Ok(coupled.gradient(x)),
        &points,
        step,
    )?;
    push("coupled box-simplex generator", worst);
    Ok(())
}

// ----------------------------------------------------------- monotonicity

fn monotonicity_suite(tol: &VerifyTolerances, outcomes: &mut Vec<CheckOutcome>) -> Result<()> {
    let mut push = |name: &str, min_slack: f64, passed: bool| {
        outcomes.push(CheckOutcome::new(
            "monotonicity",
            name.to_string(),
            passed,
            format!("min slack {min_slack:.2e} over 200 pairs (tol {:.0e})", tol.monotonicity),
        ));
    };

    let game = BoxSimplexInstance::generate(6, 1e-2, 1e-2, 2)?.problem()?;
    let report = certify_relative_strong_monotonicity(&game, 200, 30)?;
    push(
        "matrix game is strongly monotone relative to its generator",
        report.min_slack,
        report.holds(tol.monotonicity),
    );

    let affine = SyntheticInstance::generate(8, 1.0, 10.0, 4)?.problem()?;
    let report = certify_relative_strong_monotonicity(&affine, 200, 31)?;
    push(
        "affine operator is strongly monotone at its declared modulus",
        report.min_slack,
        report.holds(tol.monotonicity),
    );

    let erm = ErmInstance::generate(10, 20, 4, 0.1, DataDistribution::Exponential, 6, None)?;
    let ridge = erm.problem()?;
    let report = certify_relative_strong_monotonicity(&ridge, 200, 32)?;
    push(
        "ridge gradient is strongly monotone relative to the local generator",
        report.min_slack,
        report.holds(tol.monotonicity),
    );

    // Negative control: an inflated modulus above the smoothness constant
    // must be caught as a violation.
    let smoothness = estimate_relative_smoothness(&ridge, 100, 33)?;
    let inflated = erm.problem_with_mu(1.5 * smoothness + 1.0)?;
    let report = certify_relative_strong_monotonicity(&inflated, 200, 34)?;
    push(
        "certification detects an inflated modulus",
        report.min_slack,
        !report.holds(tol.monotonicity),
    );
    Ok(())
}

// --------------------------------------------------------------- theorems

struct DecayRun {
    v: Vec<f64>,
    l_sequence: Vec<f64>,
    mu: f64,
}

fn distance_trace(
    problem: &crate::vi::VIProblem,
    run: &crate::solvers::SolverRun,
) -> Result<Vec<f64>> {
    run.iterates
        .iter()
        .map(|z| metrics::bregman_to_solution(problem, z))
        .collect()
}

fn theorems_suite(tol: &VerifyTolerances, outcomes: &mut Vec<CheckOutcome>) -> Result<()> {
    let (mu, l) = (1.0, 10.0);
    let instance = SyntheticInstance::generate(10, mu, l, 7)?;
    let problem = instance.problem()?;
    let config = AdaptiveConfig::new(2.0 * l, 100);
    let run = solve_adaptive(&problem, &config, None)?;
    let base = DecayRun {
        v: distance_trace(&problem, &run)?,
        l_sequence: run.l_sequence.clone(),
        mu,
    };
    let v0 = base.v[0];
    let slack = tol.theorem * (1.0 + v0);

    let bound = theoretical_bound(v0, base.mu, &base.l_sequence, 0.0, SlackMode::None);
    let worst = base
        .v
        .iter()
        .zip(&bound)
        .map(|(vk, bk)| vk - bk)
        .fold(f64::NEG_INFINITY, f64::max);
    outcomes.push(CheckOutcome::new(
        "theorems",
        "distance obeys the realized product bound",
        worst <= slack,
        format!("worst excess {worst:.2e} over {} iterates (slack {slack:.2e})", base.v.len()),
    ));

    let uniform = uniform_rate_bound(v0, mu, l, base.l_sequence.len());
    let worst = base
        .v
        .iter()
        .zip(&uniform)
        .map(|(vk, bk)| vk - bk)
        .fold(f64::NEG_INFINITY, f64::max);
    outcomes.push(CheckOutcome::new(
        "theorems",
        "distance obeys the uniform half-rate bound",
        worst <= slack,
        format!("worst excess {worst:.2e} (slack {slack:.2e})"),
    ));

    let worst = base
        .v
        .windows(2)
        .zip(&base.l_sequence)
        .map(|(pair, lk)| pair[1] - pair[0] / (1.0 + base.mu / lk))
        .fold(f64::NEG_INFINITY, f64::max);
    outcomes.push(CheckOutcome::new(
        "theorems",
        "every accepted step contracts the distance",
        worst <= tol.contraction,
        format!("worst per-step excess {worst:.2e} (tol {:.0e})", tol.contraction),
    ));

    // Slack variants under injected bounded noise: the per-step recursion
    // with the matching increment must absorb the perturbation.
    let delta = 1e-2;
    let noisy = instance.problem()?.with_noise(delta, 99)?;
    for (mode, label) in [
        (SlackMode::Additive, "additive"),
        (SlackMode::Multiplicative, "multiplicative"),
    ] {
        let config = SlackConfig::new(AdaptiveConfig::new(2.0 * l, 100), delta, mode);
        let run = solve_adaptive_slack(&noisy, &config, None)?;
        let v = distance_trace(&noisy, &run)?;
        let worst = v
            .windows(2)
            .zip(&run.l_sequence)
            .map(|(pair, lk)| {
                let increment = match mode {
                    SlackMode::Additive => delta / (lk + mu),
                    SlackMode::Multiplicative => delta,
                    SlackMode::None => 0.0,
                };
                pair[1] - (pair[0] / (1.0 + mu / lk) + increment)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        outcomes.push(CheckOutcome::new(
            "theorems",
            format!("{label}-slack step recursion holds under bounded noise"),
            worst <= tol.theorem,
            format!("noise {delta:.0e}: worst recursion excess {worst:.2e}"),
        ));
        if mode == SlackMode::Multiplicative {
            let floor = multiplicative_limit_floor(mu, l, delta);
            let tail = uniform_rate_bound(v0, mu, l, v.len() - 1);
            let final_ok = v
                .iter()
                .zip(&tail)
                .skip(v.len().saturating_sub(20))
                .all(|(vk, bk)| *vk <= bk + floor + tol.theorem);
            outcomes.push(CheckOutcome::new(
                "theorems",
                "noisy trace settles under the multiplicative floor",
                final_ok,
                format!(
                    "floor {floor:.3e}, final distance {:.3e}",
                    v.last().copied().unwrap_or(f64::NAN)
                ),
            ));
        }
    }

    // Zero slack must reproduce the plain method exactly.
    let mut bitwise = true;
    for mode in [SlackMode::Additive, SlackMode::Multiplicative] {
        let config = SlackConfig::new(AdaptiveConfig::new(2.0 * l, 50), 0.0, mode);
        let slack_run = solve_adaptive_slack(&problem, &config, None)?;
        let plain = solve_adaptive(&problem, &AdaptiveConfig::new(2.0 * l, 50), None)?;
        bitwise &= slack_run.iterates.len() == plain.iterates.len()
            && slack_run
                .iterates
                .iter()
                .zip(&plain.iterates)
                .all(|(a, b)| a.as_slice() == b.as_slice())
            && slack_run.l_sequence == plain.l_sequence;
    }
    outcomes.push(CheckOutcome::new(
        "theorems",
        "zero slack reduces to the plain method bitwise",
        bitwise,
        "iterates and step constants compared exactly".into(),
    ));
    Ok(())
}

// ----------------------------------------------------------------- budget

fn budget_suite(_tol: &VerifyTolerances, outcomes: &mut Vec<CheckOutcome>) -> Result<()> {
    let (mu, l) = (1.0, 10.0);
    let instance = SyntheticInstance::generate(10, mu, l, 7)?;
    let problem = instance.problem()?;
    let run = solve_adaptive(&problem, &AdaptiveConfig::new(2.0 * l, 100), None)?;
    let report = trial_budget_check(&run.trials, 2.0 * l, l);
    outcomes.push(CheckOutcome::new(
        "budget",
        "total acceptance-test evaluations stay within the doubling budget",
        report.holds,
        format!(
            "{} trials over {} iterations, budget {:.2}",
            report.total_trials, report.iterations, report.bound
        ),
    ));
    let mean = report.total_trials as f64 / report.iterations.max(1) as f64;
    outcomes.push(CheckOutcome::new(
        "budget",
        "mean trials per iteration is small",
        mean <= 3.0,
        format!("mean {mean:.3} (threshold 3)"),
    ));
    Ok(())
}
