//! Bregman geometries: distance generators, divergences, and their prox
//! solvers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::entropy::ENTROPY_FLOOR;
use crate::kernels::{box_simplex, euclidean, BoxSimplexKernel, QuadraticFormBallKernel};
use crate::set::FeasibleSet;
use crate::vector::Vector;

/// Magnitudes below this are treated as exact zeros when a divergence is
/// evaluated through the cancellation-prone three-term formula.
pub const DIVERGENCE_ROUNDOFF: f64 = 1e-15;
/// Convexity allows divergences to dip this far below zero before the value
/// counts as a genuine numeric failure.
pub const DIVERGENCE_NEGATIVE_SLACK: f64 = 1e-12;

/// A distance generator `d` together with the machinery the solvers need:
/// its value, its gradient, the induced divergence
/// `V(y, x) = d(y) - d(x) - <grad d(x), y - x>`, and a prox solver for
/// `argmin_z <linear, z> + sum_k w_k V(z, x_k)` over a feasible set.
pub trait BregmanGeometry: Send + Sync {
    fn dim(&self) -> usize;

    /// Short tag used in diagnostics.
    fn name(&self) -> &'static str;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// `V(y, x)`. Implementations may specialize; the default evaluates the
    /// defining formula and applies the shared roundoff clamps.
    fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        if y.dim() != self.dim() {
            return Err(Error::dim(self.dim(), y.dim(), "divergence first argument"));
        }
        if x.dim() != self.dim() {
            return Err(Error::dim(self.dim(), x.dim(), "divergence second argument"));
        }
        let grad = self.gradient(x);
        let mut v = self.value(y) - self.value(x);
        for ((yi, xi), gi) in y.iter().zip(x.iter()).zip(grad.iter()) {
            v -= gi * (yi - xi);
        }
        // The three-term formula suffers subtractive cancellation, so
        // sub-roundoff magnitudes carry no information and are snapped to 0.
        if v.abs() < DIVERGENCE_ROUNDOFF {
            return Ok(0.0);
        }
        finish_divergence(v)
    }

    /// Solves the weighted prox step over `set`. Implementations reject set
    /// shapes they have no solver for.
    fn prox(
        &self,
        set: &FeasibleSet,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<Vector>;

    /// `argmin_{x in set} d(x)`, the canonical starting point.
    fn min_point(&self, set: &FeasibleSet) -> Result<Vector>;
}

/// Applies the shared clamps for specialized (cancellation-free) divergence
/// formulas: small negative values from roundoff become 0, anything more
/// negative or non-finite is an error. Positive values pass through
/// untouched, however small — a specialized formula computes tiny
/// divergences accurately and late solver iterations rely on them.
pub(crate) fn finish_divergence(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Numeric(format!("divergence evaluated to {v}")));
    }
    if v < 0.0 {
        if v > -DIVERGENCE_NEGATIVE_SLACK {
            return Ok(0.0);
        }
        return Err(Error::Numeric(format!(
            "divergence {v} below the convexity slack"
        )));
    }
    Ok(v)
}

/// `V(y, x)` under `geometry`, with the standard clamps.
pub fn divergence(geometry: &dyn BregmanGeometry, y: &Vector, x: &Vector) -> Result<f64> {
    geometry.divergence(y, x)
}

/// Weighted prox step `argmin_{z in set} <linear, z> + sum_k w_k V(z, x_k)`.
///
/// Validates dimensions and anchor weights before dispatching to the
/// geometry's kernel.
pub fn prox_step(
    geometry: &dyn BregmanGeometry,
    set: &FeasibleSet,
    linear: &Vector,
    anchors: &[(f64, &Vector)],
) -> Result<Vector> {
    if set.dim() != geometry.dim() {
        return Err(Error::dim(geometry.dim(), set.dim(), "prox feasible set"));
    }
    if linear.dim() != geometry.dim() {
        return Err(Error::dim(geometry.dim(), linear.dim(), "prox linear term"));
    }
    if anchors.is_empty() {
        return Err(Error::InvalidArgument("prox step needs at least one anchor".into()));
    }
    for (w, x) in anchors {
        if !(w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "anchor weights must be positive and finite, got {w}"
            )));
        }
        if x.dim() != geometry.dim() {
            return Err(Error::dim(geometry.dim(), x.dim(), "prox anchor"));
        }
    }
    geometry.prox(set, linear, anchors)
}

/// `d(x) = ||x||^2 / 2`: the classic Euclidean setup. Prox steps reduce to a
/// single projection of the weighted anchor mean.
#[derive(Debug, Clone)]
pub struct EuclideanGeometry {
    dim: usize,
}

impl EuclideanGeometry {
    pub fn new(dim: usize) -> Self {
        EuclideanGeometry { dim }
    }
}

impl BregmanGeometry for EuclideanGeometry {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "euclidean"
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        if y.dim() != self.dim || x.dim() != self.dim {
            return Err(Error::dim(self.dim, y.dim().min(x.dim()), "divergence"));
        }
        let d = y.dist2(x);
        finish_divergence(0.5 * d * d)
    }

    fn prox(
        &self,
        set: &FeasibleSet,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<Vector> {
        euclidean::euclidean_prox(set, linear, anchors)
    }

    fn min_point(&self, set: &FeasibleSet) -> Result<Vector> {
        euclidean::project(set, &Vector::zeros(self.dim))
    }
}

/// `d(z) = scale * sum_i z_i ln z_i` over the probability simplex.
#[derive(Debug, Clone)]
pub struct ScaledEntropyGeometry {
    dim: usize,
    scale: f64,
}

impl ScaledEntropyGeometry {
    pub fn new(dim: usize, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("entropy scale {scale}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("entropy geometry over zero dims".into()));
        }
        Ok(ScaledEntropyGeometry { dim, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn expect_simplex(&self, set: &FeasibleSet) -> Result<()> {
        match set {
            FeasibleSet::Simplex { dim } if *dim == self.dim => Ok(()),
            _ => Err(Error::UnsupportedGeometry(format!(
                "entropy geometry needs the {}-simplex",
                self.dim
            ))),
        }
    }
}

impl BregmanGeometry for ScaledEntropyGeometry {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &'static str {
        "entropy"
    }

    fn value(&self, x: &Vector) -> f64 {
        self.scale
            * x.iter()
                .map(|v| if *v > 0.0 { v * v.ln() } else { 0.0 })
                .sum::<f64>()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_trusted(
            x.iter()
                .map(|v| self.scale * (v.max(ENTROPY_FLOOR).ln() + 1.0))
                .collect(),
        )
    }

    fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        if y.dim() != self.dim || x.dim() != self.dim {
            return Err(Error::dim(self.dim, y.dim().min(x.dim()), "divergence"));
        }
        // scale * sum_i [y ln(y/x) - y + x]; on the simplex the trailing terms
        // cancel but keeping them makes the formula exact off the sum-one set.
        let mut v = 0.0;
        for (yi, xi) in y.iter().zip(x.iter()) {
            let xf = xi.max(ENTROPY_FLOOR);
            if *yi > 0.0 {
                v += yi * (yi.ln() - xf.ln()) - yi + xi;
            } else {
                v += xi;
            }
        }
        finish_divergence(self.scale * v)
    }

    fn prox(
        &self,
        set: &FeasibleSet,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<Vector> {
        self.expect_simplex(set)?;
        let kernel = crate::kernels::EntropySimplexKernel::new(self.dim, self.scale)?;
        kernel.prox(linear, anchors)
    }

    fn min_point(&self, set: &FeasibleSet) -> Result<Vector> {
        self.expect_simplex(set)?;
        Ok(Vector::from_trusted(vec![1.0 / self.dim as f64; self.dim]))
    }
}

/// `d(x) = x' H x / 2 + <q, x>` over a Euclidean ball. The linear part `q`
/// shifts gradients but cancels in the divergence.
pub struct QuadraticGeometry {
    h: DMatrix<f64>,
    q: Vector,
    kernel: QuadraticFormBallKernel,
}

impl QuadraticGeometry {
    pub fn new(h: DMatrix<f64>, q: Vector) -> Result<Self> {
        if q.dim() != h.nrows() {
            return Err(Error::dim(h.nrows(), q.dim(), "quadratic linear part"));
        }
        let kernel = QuadraticFormBallKernel::new(h.clone())?;
        Ok(QuadraticGeometry { h, q, kernel })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn kernel(&self) -> &QuadraticFormBallKernel {
        &self.kernel
    }

    fn expect_ball<'a>(&self, set: &'a FeasibleSet) -> Result<(&'a Vector, f64)> {
        match set {
            FeasibleSet::Ball { center, radius } if center.dim() == self.dim() => {
                Ok((center, *radius))
            }
            _ => Err(Error::UnsupportedGeometry(
                "quadratic geometry needs a Euclidean ball".into(),
            )),
        }
    }
}

impl BregmanGeometry for QuadraticGeometry {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn value(&self, x: &Vector) -> f64 {
        let xv = x.to_dvector();
        0.5 * (&self.h * &xv).dot(&xv) + self.q.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let g = &self.h * x.to_dvector();
        Vector::from_trusted(g.iter().zip(self.q.iter()).map(|(a, b)| a + b).collect())
    }

    fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        if y.dim() != self.dim() || x.dim() != self.dim() {
            return Err(Error::dim(self.dim(), y.dim().min(x.dim()), "divergence"));
        }
        let d = y.sub(x).to_dvector();
        finish_divergence(0.5 * (&self.h * &d).dot(&d))
    }

    fn prox(
        &self,
        set: &FeasibleSet,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<Vector> {
        let (center, radius) = self.expect_ball(set)?;
        Ok(self.kernel.prox(center, radius, linear, anchors)?.point)
    }

    fn min_point(&self, set: &FeasibleSet) -> Result<Vector> {
        let (center, radius) = self.expect_ball(set)?;
        // d(x) = V(x, x_u) + const with H x_u = -q, so the minimizer over the
        // ball is the prox of that unconstrained minimum.
        let chol = nalgebra::Cholesky::new(self.h.clone())
            .ok_or_else(|| Error::Numeric("quadratic matrix lost definiteness".into()))?;
        let x_u = Vector::from_dvector(&chol.solve(&(-self.q.to_dvector())))?;
        Ok(self
            .kernel
            .prox(center, radius, &Vector::zeros(self.dim()), &[(1.0, &x_u)])?
            .point)
    }
}

/// The coupled matrix-game geometry over box x simplex, backed by
/// `BoxSimplexKernel`.
pub struct BoxSimplexGeometry {
    kernel: BoxSimplexKernel,
}

impl BoxSimplexGeometry {
    pub fn new(abs_a: DMatrix<f64>, scale: Option<f64>) -> Result<Self> {
        Ok(BoxSimplexGeometry {
            kernel: BoxSimplexKernel::new(abs_a, scale)?,
        })
    }

    pub fn from_kernel(kernel: BoxSimplexKernel) -> Self {
        BoxSimplexGeometry { kernel }
    }

    pub fn kernel(&self) -> &BoxSimplexKernel {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    pub fn scale(&self) -> f64 {
        self.kernel.scale()
    }

    /// Accepts exactly `Box([-l, u]^n) x Simplex(n)` products and hands back
    /// the box bounds.
    fn expect_box_simplex<'a>(&self, set: &'a FeasibleSet) -> Result<(&'a [f64], &'a [f64])> {
        let n = self.n();
        if let FeasibleSet::Product(blocks) = set {
            if let [FeasibleSet::Box { lower, upper }, FeasibleSet::Simplex { dim }] =
                blocks.as_slice()
            {
                if lower.dim() == n && *dim == n {
                    return Ok((lower.as_slice(), upper.as_slice()));
                }
            }
        }
        Err(Error::UnsupportedGeometry(format!(
            "coupled geometry needs Box(n) x Simplex(n) with n = {n}"
        )))
    }
}

impl BregmanGeometry for BoxSimplexGeometry {
    fn dim(&self) -> usize {
        2 * self.kernel.n()
    }

    fn name(&self) -> &'static str {
        "box-simplex"
    }

    fn value(&self, x: &Vector) -> f64 {
        let (y, z) = x.split_at(self.n());
        self.kernel.value(y, z)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let (y, z) = x.split_at(self.n());
        let (gy, gz) = self.kernel.gradient(y, z);
        let mut g = gy;
        g.extend_from_slice(&gz);
        Vector::from_trusted(g)
    }

    fn divergence(&self, y: &Vector, x: &Vector) -> Result<f64> {
        if y.dim() != self.dim() || x.dim() != self.dim() {
            return Err(Error::dim(self.dim(), y.dim().min(x.dim()), "divergence"));
        }
        finish_divergence(self.kernel.divergence(y, x))
    }

    fn prox(
        &self,
        set: &FeasibleSet,
        linear: &Vector,
        anchors: &[(f64, &Vector)],
    ) -> Result<Vector> {
        let (lower, upper) = self.expect_box_simplex(set)?;
        Ok(self.kernel.prox(lower, upper, linear, anchors)?.point)
    }

    fn min_point(&self, set: &FeasibleSet) -> Result<Vector> {
        self.expect_box_simplex(set)?;
        let n = self.n();
        // y = 0 zeroes the nonnegative coupling term; uniform z minimizes the
        // entropy independently.
        let mut v = vec![0.0; n];
        v.extend(std::iter::repeat(1.0 / n as f64).take(n));
        Ok(Vector::from_trusted(v))
    }
}

pub use box_simplex::BoxSimplexProx as CoupledProx;

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &[f64]) -> Vector {
        Vector::new(s.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_divergence_hand_values() {
        let g = EuclideanGeometry::new(2);
        assert_eq!(g.divergence(&v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.5);
        assert_eq!(g.divergence(&v(&[0.3, -0.4]), &v(&[0.3, -0.4])).unwrap(), 0.0);
    }

    #[test]
    fn entropy_divergence_matches_kl_hand_value() {
        let g = ScaledEntropyGeometry::new(2, 1.0).unwrap();
        let val = g
            .divergence(&v(&[0.5, 0.5]), &v(&[0.25, 0.75]))
            .unwrap();
        let expected = 0.5 * (4.0f64 / 3.0).ln();
        assert!((val - expected).abs() < 1e-12, "{val} vs {expected}");
    }

    #[test]
    fn specialized_divergences_match_the_defining_formula() {
        // Each override must agree with d(y) - d(x) - <grad d(x), y - x>.
        let geoms: Vec<(Box<dyn BregmanGeometry>, Vector, Vector)> = vec![
            (
                Box::new(EuclideanGeometry::new(3)),
                v(&[0.3, -0.2, 0.9]),
                v(&[-0.1, 0.4, 0.2]),
            ),
            (
                Box::new(ScaledEntropyGeometry::new(3, 2.3).unwrap()),
                v(&[0.2, 0.3, 0.5]),
                v(&[0.6, 0.3, 0.1]),
            ),
            (
                Box::new(
                    QuadraticGeometry::new(
                        DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.1]),
                        v(&[0.3, -0.7]),
                    )
                    .unwrap(),
                ),
                v(&[0.4, 0.1]),
                v(&[-0.2, 0.6]),
            ),
        ];
        for (g, y, x) in &geoms {
            let grad = g.gradient(x);
            let direct = g.value(y) - g.value(x) - grad.dot(&y.sub(x));
            let special = g.divergence(y, x).unwrap();
            let scale = 1.0 + direct.abs();
            assert!(
                (direct - special).abs() <= 1e-10 * scale,
                "{}: {direct} vs {special}",
                g.name()
            );
        }
    }

    #[test]
    fn prox_step_validates_inputs() {
        let g = EuclideanGeometry::new(2);
        let set = FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap();
        let anchor = v(&[0.1, 0.1]);
        assert!(prox_step(&g, &set, &Vector::zeros(2), &[]).is_err());
        assert!(prox_step(&g, &set, &Vector::zeros(3), &[(1.0, &anchor)]).is_err());
        assert!(prox_step(&g, &set, &Vector::zeros(2), &[(-1.0, &anchor)]).is_err());
        let bad_anchor = v(&[0.1, 0.1, 0.1]);
        assert!(prox_step(&g, &set, &Vector::zeros(2), &[(1.0, &bad_anchor)]).is_err());
    }

    #[test]
    fn zero_linear_single_anchor_returns_anchor_across_geometries() {
        let ball = FeasibleSet::ball(Vector::zeros(2), 2.0).unwrap();
        let simplex = FeasibleSet::simplex(2).unwrap();
        let euclid = EuclideanGeometry::new(2);
        let entropy = ScaledEntropyGeometry::new(2, 1.4).unwrap();
        let quad = QuadraticGeometry::new(
            DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.9]),
            Vector::zeros(2),
        )
        .unwrap();

        let e_anchor = v(&[0.4, -0.3]);
        let s_anchor = v(&[0.7, 0.3]);
        for (g, set, anchor) in [
            (&euclid as &dyn BregmanGeometry, &ball, &e_anchor),
            (&entropy as &dyn BregmanGeometry, &simplex, &s_anchor),
            (&quad as &dyn BregmanGeometry, &ball, &e_anchor),
        ] {
            let out = prox_step(g, set, &Vector::zeros(2), &[(1.0, anchor)]).unwrap();
            for (a, b) in out.iter().zip(anchor.iter()) {
                assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", g.name());
            }
        }
    }

    #[test]
    fn mismatched_geometry_and_set_is_rejected() {
        let entropy = ScaledEntropyGeometry::new(2, 1.0).unwrap();
        let ball = FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap();
        let anchor = v(&[0.5, 0.5]);
        let err = prox_step(&entropy, &ball, &Vector::zeros(2), &[(1.0, &anchor)]);
        assert!(matches!(err, Err(Error::UnsupportedGeometry(_))));
    }

    #[test]
    fn min_points_minimize_d_over_samples() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let quad = QuadraticGeometry::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
            v(&[1.0, -2.0]),
        )
        .unwrap();
        let ball = FeasibleSet::ball(Vector::zeros(2), 1.0).unwrap();
        let star = quad.min_point(&ball).unwrap();
        let d_star = quad.value(&star);
        for _ in 0..500 {
            let x = ball.sample(&mut rng);
            assert!(quad.value(&x) >= d_star - 1e-9);
        }
    }
}
