//! Brute-force reference computations. These share no code with the closed
//! form or block-solve paths they audit: prox steps are checked against
//! exhaustive grid search over a feasibility-respecting parametrization, the
//! duality gap against vertex enumeration, and gradients against central
//! differences of the underlying scalar.

use crate::error::{Error, Result};
use crate::geometry::BregmanGeometry;
use crate::problems::BoxSimplexInstance;
use crate::set::FeasibleSet;
use crate::vector::Vector;

use super::clamp_gap;

/// Coordinate-refinement schedule after the grid pass: every sweep runs ten
/// ternary steps per parameter in a bracket recentered on the current best
/// point (so descent can walk along coupled valleys); once a sweep stops
/// improving, the bracket width shrinks fourfold. Fourteen shrinks bring the
/// window to ~4e-9 of a lattice cell.
const MAX_REFINE_SWEEPS: usize = 80;
const REFINE_STEPS: usize = 10;
const MAX_BRACKET_SHRINKS: usize = 14;

/// Largest game dimension for which box vertices are enumerated exactly.
const GAP_ORACLE_MAX_DIM: usize = 16;

/// The prox objective `<linear, x> + sum_k w_k V(x, x_k)` under an arbitrary
/// geometry.
pub fn prox_objective(
    geometry: &dyn BregmanGeometry,
    linear: &Vector,
    anchors: &[(f64, &Vector)],
    point: &Vector,
) -> Result<f64> {
    let mut obj = linear.dot(point);
    for (w, x) in anchors {
        obj += w * geometry.divergence(point, x)?;
    }
    Ok(obj)
}

/// Minimizes the prox objective by exhaustive search over a lattice in a
/// feasibility-preserving parametrization of the set (boxes keep their
/// coordinates, balls use polar coordinates, simplexes use stick-breaking),
/// then refines the best cell by coordinate ternary search. Only meant for
/// ambient dimension up to three.
pub fn grid_prox_oracle(
    geometry: &dyn BregmanGeometry,
    set: &FeasibleSet,
    linear: &Vector,
    anchors: &[(f64, &Vector)],
    resolution: usize,
) -> Result<Vector> {
    let dim = set.dim();
    if dim == 0 || dim > 3 {
        return Err(Error::InvalidArgument(format!(
            "grid oracle handles ambient dimension 1..=3, got {dim}"
        )));
    }
    if geometry.dim() != dim || linear.dim() != dim {
        return Err(Error::dim(dim, geometry.dim().min(linear.dim()), "grid oracle"));
    }
    if resolution < 100 {
        return Err(Error::InvalidArgument(format!(
            "grid oracle needs at least 100 points per axis, got {resolution}"
        )));
    }
    if anchors.is_empty() {
        return Err(Error::InvalidArgument("grid oracle needs anchors".into()));
    }
    for (w, x) in anchors {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "anchor weights must be positive, got {w}"
            )));
        }
        if x.dim() != dim {
            return Err(Error::dim(dim, x.dim(), "grid oracle anchor"));
        }
    }

    let chart = Chart::for_set(set)?;
    let objective = |params: &[f64]| -> Result<f64> {
        let point = chart.map(params);
        prox_objective(geometry, linear, anchors, &point)
    };

    // Lattice pass.
    let p = chart.params.len();
    if p == 0 {
        // Fully degenerate set (e.g. the one-point simplex).
        return Ok(chart.map(&[]));
    }
    let mut counts = vec![resolution; p];
    for (k, spec) in chart.params.iter().enumerate() {
        if spec.hi == spec.lo {
            counts[k] = 1;
        }
    }
    let total: usize = counts.iter().product();
    let mut best_params = vec![0.0; p];
    let mut best_value = f64::INFINITY;
    let mut params = vec![0.0; p];
    for flat in 0..total {
        let mut rest = flat;
        for k in 0..p {
            let i = rest % counts[k];
            rest /= counts[k];
            params[k] = chart.params[k].lattice_point(i, counts[k]);
        }
        let value = objective(&params)?;
        if value < best_value {
            best_value = value;
            best_params.copy_from_slice(&params);
        }
    }

    // Coordinate refinement around the winning cell.
    let mut widths: Vec<f64> = (0..p)
        .map(|k| chart.params[k].spacing(counts[k]))
        .collect();
    let mut shrinks = 0;
    for _ in 0..MAX_REFINE_SWEEPS {
        let before = best_value;
        for k in 0..p {
            if widths[k] == 0.0 {
                continue;
            }
            let (mut a, mut b) = chart.params[k].bracket(best_params[k], widths[k]);
            if b <= a {
                continue;
            }
            let mut trial = best_params.clone();
            for _ in 0..REFINE_STEPS {
                let third = (b - a) / 3.0;
                let m1 = a + third;
                let m2 = b - third;
                trial[k] = m1;
                let v1 = objective(&trial)?;
                trial[k] = m2;
                let v2 = objective(&trial)?;
                if v1 < best_value {
                    best_value = v1;
                    best_params[k] = m1;
                }
                if v2 < best_value {
                    best_value = v2;
                    best_params[k] = m2;
                }
                if v1 <= v2 {
                    b = m2;
                } else {
                    a = m1;
                }
            }
        }
        if best_value >= before - 1e-15 * (1.0 + before.abs()) {
            for w in &mut widths {
                *w *= 0.25;
            }
            shrinks += 1;
            if shrinks > MAX_BRACKET_SHRINKS {
                break;
            }
        }
    }
    Ok(chart.map(&best_params))
}

/// Central-difference audit of a gradient against its scalar. Returns the
/// worst relative error over all points and components, with the error of
/// component `i` measured against `max(1, |g_i|)`.
pub fn finite_difference_check<F, G>(
    scalar: F,
    gradient: G,
    points: &[Vector],
    step: f64,
) -> Result<f64>
where
    F: Fn(&Vector) -> Result<f64>,
    G: Fn(&Vector) -> Result<Vector>,
{
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "finite-difference check needs at least one point".into(),
        ));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut worst = 0.0_f64;
    for x in points {
        let g = gradient(x)?;
        if g.dim() != x.dim() {
            return Err(Error::dim(x.dim(), g.dim(), "gradient under audit"));
        }
        for i in 0..x.dim() {
            let mut up = x.as_slice().to_vec();
            let mut down = up.clone();
            up[i] += step;
            down[i] -= step;
            let fd = (scalar(&Vector::new(up)?)? - scalar(&Vector::new(down)?)?) / (2.0 * step);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Duality gap by explicit best response: enumerates the simplex vertices for
/// the max player and every box vertex for the min player, evaluating the
/// saddle objective itself rather than its rearranged closed form.
pub fn box_simplex_gap_oracle(instance: &BoxSimplexInstance, x: &Vector) -> Result<f64> {
    let n = instance.n();
    if n > GAP_ORACLE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "gap oracle enumerates 2^n box vertices; n = {n} is too large"
        )));
    }
    if x.dim() != 2 * n {
        return Err(Error::dim(2 * n, x.dim(), "gap oracle argument"));
    }
    if !instance.set().contains(x) {
        return Err(Error::InvalidArgument("gap oracle argument is infeasible".into()));
    }
    let (y, z) = x.split_at(n);

    let mut best_max = f64::NEG_INFINITY;
    let mut vertex_z = vec![0.0; n];
    for i in 0..n {
        vertex_z[i] = 1.0;
        best_max = best_max.max(instance.saddle_value(y, &vertex_z));
        vertex_z[i] = 0.0;
    }

    let mut best_min = f64::INFINITY;
    let mut vertex_y = vec![0.0; n];
    for mask in 0u64..(1u64 << n) {
        for (j, v) in vertex_y.iter_mut().enumerate() {
            *v = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
        }
        best_min = best_min.min(instance.saddle_value(&vertex_y, z));
    }

    clamp_gap(best_max - best_min)
}

/// One parameter axis of a set chart.
struct ParamSpec {
    lo: f64,
    hi: f64,
    /// Periodic axes (angles) wrap instead of clamping at the ends.
    periodic: bool,
}

impl ParamSpec {
    fn lattice_point(&self, i: usize, count: usize) -> f64 {
        if count <= 1 {
            return self.lo;
        }
        if self.periodic {
            // Exclude the duplicate endpoint.
            self.lo + (self.hi - self.lo) * i as f64 / count as f64
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (count - 1) as f64
        }
    }

    fn spacing(&self, count: usize) -> f64 {
        if count <= 1 {
            0.0
        } else if self.periodic {
            (self.hi - self.lo) / count as f64
        } else {
            (self.hi - self.lo) / (count - 1) as f64
        }
    }

    fn bracket(&self, center: f64, spacing: f64) -> (f64, f64) {
        if self.periodic {
            // cos/sin wrap naturally, so the bracket may cross the seam.
            (center - spacing, center + spacing)
        } else {
            ((center - spacing).max(self.lo), (center + spacing).min(self.hi))
        }
    }
}

/// Feasibility-preserving chart: blocks map parameter slices to ambient
/// coordinate slices, and every parameter choice lands inside the set.
enum ChartBlock {
    /// One box coordinate, identity map.
    Interval,
    /// 1-ball: center plus signed offset.
    Line { center: Vec<f64> },
    /// 2-ball in polar coordinates (radius, angle).
    Polar { center: Vec<f64> },
    /// 3-ball in spherical coordinates (radius, azimuth, inclination).
    Spherical { center: Vec<f64> },
    /// Simplex of dimension >= 2 by stick-breaking; sections along each
    /// parameter are affine paths inside the simplex.
    Stick { dim: usize },
    /// The one-point simplex {1}.
    PointSimplex,
}

impl ChartBlock {
    fn param_count(&self) -> usize {
        match self {
            ChartBlock::Interval => 1,
            ChartBlock::Line { .. } => 1,
            ChartBlock::Polar { .. } => 2,
            ChartBlock::Spherical { .. } => 3,
            ChartBlock::Stick { dim } => dim - 1,
            ChartBlock::PointSimplex => 0,
        }
    }
}

struct Chart {
    blocks: Vec<ChartBlock>,
    params: Vec<ParamSpec>,
}

impl Chart {
    fn for_set(set: &FeasibleSet) -> Result<Self> {
        let mut chart = Chart {
            blocks: Vec::new(),
            params: Vec::new(),
        };
        chart.push_set(set)?;
        Ok(chart)
    }

    fn push_set(&mut self, set: &FeasibleSet) -> Result<()> {
        match set {
            FeasibleSet::Box { lower, upper } => {
                for (l, u) in lower.iter().zip(upper.iter()) {
                    self.blocks.push(ChartBlock::Interval);
                    self.params.push(ParamSpec {
                        lo: *l,
                        hi: *u,
                        periodic: false,
                    });
                }
            }
            FeasibleSet::Ball { center, radius } => match center.dim() {
                1 => {
                    self.blocks.push(ChartBlock::Line {
                        center: center.as_slice().to_vec(),
                    });
                    self.params.push(ParamSpec {
                        lo: -radius,
                        hi: *radius,
                        periodic: false,
                    });
                }
                2 => {
                    self.blocks.push(ChartBlock::Polar {
                        center: center.as_slice().to_vec(),
                    });
                    self.params.push(ParamSpec {
                        lo: 0.0,
                        hi: *radius,
                        periodic: false,
                    });
                    self.params.push(ParamSpec {
                        lo: 0.0,
                        hi: std::f64::consts::TAU,
                        periodic: true,
                    });
                }
                3 => {
                    self.blocks.push(ChartBlock::Spherical {
                        center: center.as_slice().to_vec(),
                    });
                    self.params.push(ParamSpec {
                        lo: 0.0,
                        hi: *radius,
                        periodic: false,
                    });
                    self.params.push(ParamSpec {
                        lo: 0.0,
                        hi: std::f64::consts::TAU,
                        periodic: true,
                    });
                    self.params.push(ParamSpec {
                        lo: 0.0,
                        hi: std::f64::consts::PI,
                        periodic: false,
                    });
                }
                d => {
                    return Err(Error::InvalidArgument(format!(
                        "grid oracle has no ball chart in dimension {d}"
                    )))
                }
            },
            FeasibleSet::Simplex { dim } => {
                if *dim == 1 {
                    self.blocks.push(ChartBlock::PointSimplex);
                } else {
                    self.blocks.push(ChartBlock::Stick { dim: *dim });
                    for _ in 0..dim - 1 {
                        self.params.push(ParamSpec {
                            lo: 0.0,
                            hi: 1.0,
                            periodic: false,
                        });
                    }
                }
            }
            FeasibleSet::Product(blocks) => {
                for b in blocks {
                    self.push_set(b)?;
                }
            }
        }
        Ok(())
    }

    fn map(&self, params: &[f64]) -> Vector {
        debug_assert_eq!(
            params.len(),
            self.blocks.iter().map(ChartBlock::param_count).sum::<usize>()
        );
        let mut out = Vec::new();
        let mut offset = 0;
        for block in &self.blocks {
            let p = &params[offset..offset + block.param_count()];
            offset += block.param_count();
            match block {
                ChartBlock::Interval => out.push(p[0]),
                ChartBlock::Line { center } => out.push(center[0] + p[0]),
                ChartBlock::Polar { center } => {
                    let (rad, theta) = (p[0], p[1]);
                    out.push(center[0] + rad * theta.cos());
                    out.push(center[1] + rad * theta.sin());
                }
                ChartBlock::Spherical { center } => {
                    let (rad, theta, phi) = (p[0], p[1], p[2]);
                    out.push(center[0] + rad * phi.sin() * theta.cos());
                    out.push(center[1] + rad * phi.sin() * theta.sin());
                    out.push(center[2] + rad * phi.cos());
                }
                ChartBlock::Stick { dim } => {
                    let mut remaining = 1.0;
                    for &pi in p {
                        let z = pi * remaining;
                        out.push(z);
                        remaining -= z;
                    }
                    out.push(remaining.max(0.0));
                    debug_assert_eq!(p.len() + 1, *dim);
                }
                ChartBlock::PointSimplex => out.push(1.0),
            }
        }
        Vector::from_trusted(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EuclideanGeometry, QuadraticGeometry, ScaledEntropyGeometry};
    use crate::kernels::EntropySimplexKernel;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chart_points_are_always_feasible() {
        let sets = [
            FeasibleSet::symmetric_unit_box(3),
            FeasibleSet::ball(Vector::new(vec![0.5, -0.25]).unwrap(), 2.0).unwrap(),
            FeasibleSet::ball(Vector::zeros(3), 1.5).unwrap(),
            FeasibleSet::simplex(3).unwrap(),
            FeasibleSet::product(vec![
                FeasibleSet::symmetric_unit_box(1),
                FeasibleSet::simplex(1).unwrap(),
            ])
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for set in &sets {
            let chart = Chart::for_set(set).unwrap();
            let p: usize = chart.blocks.iter().map(ChartBlock::param_count).sum();
            for _ in 0..500 {
                let params: Vec<f64> = chart
                    .params
                    .iter()
                    .map(|spec| rng.gen_range(spec.lo..=spec.hi))
                    .collect();
                assert_eq!(params.len(), p);
                let x = chart.map(&params);
                assert!(set.contains(&x), "chart left the set: {:?}", x.as_slice());
            }
        }
    }

    #[test]
    fn euclidean_ball_oracle_matches_projection() {
        // With a single unit-weight anchor a and linear term g, the prox is
        // the projection of a - g onto the ball.
        let set = FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap();
        let geometry = EuclideanGeometry::new(2);
        let anchor = Vector::new(vec![0.4, -0.2]).unwrap();
        let linear = Vector::new(vec![-1.5, 0.9]).unwrap();
        let oracle = grid_prox_oracle(&geometry, &set, &linear, &[(1.0, &anchor)], 200).unwrap();
        let target = anchor.sub(&linear);
        let expected = target.scale(1.0 / target.norm2().max(1.0));
        assert!(oracle.dist2(&expected) < 2e-6, "oracle {:?}", oracle.as_slice());
    }

    #[test]
    fn entropy_simplex_oracle_matches_the_kernel() {
        let kernel = EntropySimplexKernel::new(3, 1.7).unwrap();
        let geometry = ScaledEntropyGeometry::new(3, 1.7).unwrap();
        let set = FeasibleSet::simplex(3).unwrap();
        let anchor = Vector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let linear = Vector::new(vec![0.8, -0.3, 0.1]).unwrap();
        let exact = kernel.prox(&linear, &[(1.0, &anchor)]).unwrap();
        let oracle = grid_prox_oracle(&geometry, &set, &linear, &[(1.0, &anchor)], 200).unwrap();
        assert!(exact.dist2(&oracle) < 2e-6, "kernel {:?} oracle {:?}", exact.as_slice(), oracle.as_slice());
    }

    #[test]
    fn quadratic_ball_oracle_matches_interior_minimum() {
        // H = I, q = 0: prox of anchor a with linear g is a - g when interior.
        let h = DMatrix::identity(3, 3);
        let geometry = QuadraticGeometry::new(h, Vector::zeros(3)).unwrap();
        let set = FeasibleSet::ball(Vector::zeros(3), 5.0).unwrap();
        let anchor = Vector::new(vec![0.3, -0.4, 0.2]).unwrap();
        let linear = Vector::new(vec![0.25, 0.1, -0.3]).unwrap();
        let expected = anchor.sub(&linear);
        let oracle = grid_prox_oracle(&geometry, &set, &linear, &[(1.0, &anchor)], 120).unwrap();
        assert!(oracle.dist2(&expected) < 1e-5, "oracle {:?}", oracle.as_slice());
    }

    #[test]
    fn oracle_validates_inputs() {
        let geometry = EuclideanGeometry::new(2);
        let set = FeasibleSet::symmetric_unit_box(2);
        let anchor = Vector::zeros(2);
        let linear = Vector::zeros(2);
        let anchors = [(1.0, &anchor)];
        assert!(grid_prox_oracle(&geometry, &set, &linear, &anchors, 50).is_err());
        assert!(grid_prox_oracle(&geometry, &set, &linear, &[], 200).is_err());
        let big = FeasibleSet::symmetric_unit_box(4);
        let big_linear = Vector::zeros(4);
        let big_anchor = Vector::zeros(4);
        assert!(grid_prox_oracle(
            &EuclideanGeometry::new(4),
            &big,
            &big_linear,
            &[(1.0, &big_anchor)],
            200
        )
        .is_err());
    }

    #[test]
    fn finite_differences_accept_true_gradients_and_flag_wrong_ones() {
        let scalar = |x: &Vector| Ok(0.5 * x.dot(x));
        let grad = |x: &Vector| Ok(x.clone());
        let wrong = |x: &Vector| Ok(x.scale(1.05));
        let points = vec![
            Vector::new(vec![0.3, -1.2]).unwrap(),
            Vector::new(vec![2.0, 0.7]).unwrap(),
        ];
        let ok = finite_difference_check(scalar, grad, &points, 1e-6).unwrap();
        assert!(ok < 1e-9, "relative error {ok}");
        let bad = finite_difference_check(scalar, wrong, &points, 1e-6).unwrap();
        assert!(bad > 1e-2, "wrong gradient slipped through: {bad}");
    }

    #[test]
    fn gap_oracle_agrees_with_the_closed_form() {
        let inst = BoxSimplexInstance::generate(5, 1e-2, 1e-2, 21).unwrap();
        let set = inst.set();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let x = set.sample(&mut rng);
            let closed = super::super::box_simplex_gap(&inst, &x).unwrap();
            let enumerated = box_simplex_gap_oracle(&inst, &x).unwrap();
            assert!(
                (closed - enumerated).abs() <= 1e-9 * closed.max(1.0),
                "closed {closed} vs enumerated {enumerated}"
            );
        }
    }

    #[test]
    fn gap_oracle_hand_case() {
        let inst = BoxSimplexInstance::from_parts(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            Vector::new(vec![1.0]).unwrap(),
            Vector::new(vec![0.5]).unwrap(),
            1e-2,
            1e-2,
            0,
        )
        .unwrap();
        let x = Vector::new(vec![0.0, 1.0]).unwrap();
        let gap = box_simplex_gap_oracle(&inst, &x).unwrap();
        assert!((gap - 2.5).abs() < 1e-15);
    }
}
