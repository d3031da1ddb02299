//! Numerical layer on `N_R`: the log-sum-exp potential
//! `ũ(y) = log Σ_{v ∈ L(Δ)} exp<v, y>`, its piecewise linear envelope
//! `ū(y) = max_j <w_j, y>` over the vertices of `Δ`, the moment map, and the
//! integral and positivity estimates built on them.
//!
//! All evaluation is in double precision with the maximum exponent shifted
//! out before exponentiating.

mod integrate;
mod potential;

pub use integrate::{
    BoundCheck, IntegralEstimate, IntegralMethod, DEFAULT_QUADRATURE_TOLERANCE, DEFAULT_SAMPLES_PER_CONE,
};
pub use potential::{
    random_invariant_weights, AlphaReport, PositivityReport, Potential, ALPHA_IMPORTANCE_RATE,
    POSITIVITY_TOLERANCE,
};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeVector;
use crate::polytope::FanoPolytope;

/// Default seed for every seeded numerical routine.
pub const DEFAULT_SEED: u64 = 0x00EC_2024;

/// Floating point view of `Δ` and its fan.
#[derive(Debug, Clone)]
pub struct AnalyticData {
    dim: usize,
    lattice_points: Vec<LatticeVector>,
    points: Vec<Vec<f64>>,
    vertices: Vec<Vec<f64>>,
    /// index into `points` of each vertex
    vertex_index: Vec<usize>,
    normals: Vec<Vec<f64>>,
    /// generators of each maximal cone
    cones: Vec<Vec<Vec<f64>>>,
}

/// Sample locations for the pointwise checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SampleSpec {
    /// Regular grid on `[-radius, radius]^n`.
    Grid { radius: f64, spacing: f64 },
    /// Uniform random points in `[-radius, radius]^n`.
    Random { radius: f64, count: usize, seed: u64 },
}

impl SampleSpec {
    pub fn radius(&self) -> f64 {
        match *self {
            SampleSpec::Grid { radius, .. } | SampleSpec::Random { radius, .. } => radius,
        }
    }

    /// Materialize the sample points.
    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        match *self {
            SampleSpec::Grid { radius, spacing } => {
                let steps = (2.0 * radius / spacing).round() as usize;
                let axis: Vec<f64> = (0..=steps).map(|i| -radius + i as f64 * spacing).collect();
                let mut out = vec![Vec::with_capacity(dim)];
                for _ in 0..dim {
                    out = out
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |&x| {
                                let mut q = p.clone();
                                q.push(x);
                                q
                            })
                        })
                        .collect();
                }
                out
            }
            SampleSpec::Random { radius, count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect())
                    .collect()
            }
        }
    }
}

/// Maximum and the log of the shifted sum, for `log Σ exp(a_i + <v_i, y>)`.
/// Returns `(max, log1p(rest))` where `rest` excludes one maximizing term, so
/// that `value = max + log1p(rest)` and the excess over the max keeps full
/// relative precision.
fn shifted_lse(points: &[Vec<f64>], log_w: Option<&[f64]>, y: &[f64]) -> (f64, f64) {
    let exps: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, v)| dot(v, y) + log_w.map_or(0.0, |w| w[i]))
        .collect();
    let (arg, &max) = exps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty point set");
    let rest: f64 = exps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != arg)
        .map(|(_, e)| (e - max).exp())
        .sum();
    (max, rest.ln_1p())
}

/// Value, gradient and Hessian of a (weighted) log-sum-exp at `y`.
fn lse_moments(
    points: &[Vec<f64>],
    log_w: Option<&[f64]>,
    y: &[f64],
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = y.len();
    let exps: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, v)| dot(v, y) + log_w.map_or(0.0, |w| w[i]))
        .collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let probs: Vec<f64> = exps.iter().map(|e| (e - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    let mut mean = DVector::zeros(n);
    let mut second = DMatrix::zeros(n, n);
    for (v, p) in points.iter().zip(&probs) {
        let p = p / total;
        let v = DVector::from_column_slice(v);
        mean += &v * p;
        second += &v * v.transpose() * p;
    }
    let cov = second - &mean * mean.transpose();
    (max + total.ln(), mean, cov)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Extremes of `ũ - ū` over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub points: usize,
    pub min_gap: f64,
    pub max_gap: f64,
    /// `log |L(Δ)|`, the upper bound for the gap.
    pub gap_bound: f64,
    pub passed: bool,
    pub witness: Option<Vec<f64>>,
}

impl AnalyticData {
    pub fn new(delta: &FanoPolytope) -> Self {
        let points: Vec<Vec<f64>> = delta.lattice_points().iter().map(LatticeVector::to_f64).collect();
        let vertex_index = delta
            .vertices()
            .iter()
            .map(|w| delta.lattice_points().binary_search(w).expect("vertices are lattice points"))
            .collect();
        let normals: Vec<Vec<f64>> = delta.facet_normals().iter().map(LatticeVector::to_f64).collect();
        let cones = delta
            .max_cones()
            .iter()
            .map(|c| c.iter().map(|&r| normals[r].clone()).collect())
            .collect();
        AnalyticData {
            dim: delta.dim(),
            lattice_points: delta.lattice_points().to_vec(),
            points,
            vertices: delta.vertices().iter().map(LatticeVector::to_f64).collect(),
            vertex_index,
            normals,
            cones,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `v(Δ)`, which equals the number of maximal cones.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn lattice_points(&self) -> &[LatticeVector] {
        &self.lattice_points
    }

    pub fn lattice_point_count(&self) -> usize {
        self.points.len()
    }

    pub fn facet_normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub(crate) fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub(crate) fn vertex_indices(&self) -> &[usize] {
        &self.vertex_index
    }

    /// Generators of each maximal cone.
    pub fn cones(&self) -> &[Vec<Vec<f64>>] {
        &self.cones
    }

    fn check_dim(&self, y: &[f64]) {
        assert_eq!(y.len(), self.dim, "point has the wrong dimension");
    }

    pub fn u_tilde(&self, y: &[f64]) -> f64 {
        self.check_dim(y);
        let (max, excess) = shifted_lse(&self.points, None, y);
        max + excess
    }

    pub fn u_bar(&self, y: &[f64]) -> f64 {
        self.check_dim(y);
        self.vertices.iter().map(|w| dot(w, y)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ũ(y) - ū(y)` without cancellation.
    pub fn envelope_gap(&self, y: &[f64]) -> f64 {
        self.check_dim(y);
        shifted_lse(&self.points, None, y).1
    }

    /// Gradient of `ũ`: the softmax mean of `L(Δ)`.
    pub fn moment_map(&self, y: &[f64]) -> Vec<f64> {
        self.check_dim(y);
        lse_moments(&self.points, None, y).1.iter().copied().collect()
    }

    /// Hessian of `ũ`: the softmax covariance of `L(Δ)`.
    pub fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        self.check_dim(y);
        lse_moments(&self.points, None, y).2
    }

    /// Checks `ū < ũ <= ū + log |L(Δ)|` on the samples.
    pub fn envelope_check(&self, samples: &SampleSpec) -> EnvelopeReport {
        let bound = (self.points.len() as f64).ln();
        let mut report = EnvelopeReport {
            points: 0,
            min_gap: f64::INFINITY,
            max_gap: f64::NEG_INFINITY,
            gap_bound: bound,
            passed: true,
            witness: None,
        };
        for y in samples.points(self.dim) {
            let gap = self.envelope_gap(&y);
            report.points += 1;
            report.min_gap = report.min_gap.min(gap);
            report.max_gap = report.max_gap.max(gap);
            if !(gap > 0.0 && gap <= bound + 1e-12) && report.witness.is_none() {
                report.passed = false;
                report.witness = Some(y);
            }
        }
        report
    }

    /// `∫ exp(-τ ũ) dy` over `N_R`, compared with `v(Δ) / τ^n`.
    pub fn integral_exp(&self, tau: f64, method: IntegralMethod) -> Result<BoundCheck> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        let log_f = |y: &[f64]| -tau * self.u_tilde(y);
        let estimate = integrate::integrate_over_fan(self, &log_f, tau, method)?;
        let bound = self.vertex_count() as f64 / tau.powi(self.dim as i32);
        Ok(BoundCheck::new(estimate, bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::named_fan;
    use crate::polytope::polytope_from_fan;

    fn data(name: &str) -> AnalyticData {
        AnalyticData::new(&polytope_from_fan(&named_fan(name).unwrap()).unwrap())
    }

    #[test]
    fn u_tilde_values() {
        let p1 = data("P1");
        assert!((p1.u_tilde(&[0.0]) - 3f64.ln()).abs() < 1e-15);
        let direct = ((-5f64).exp() + 1.0 + 5f64.exp()).ln();
        assert!((p1.u_tilde(&[5.0]) - direct).abs() < 1e-12);
        assert!((p1.u_tilde(&[5.0]) - 5.00674).abs() < 1e-4);
        let p2 = data("P2");
        assert!((p2.u_tilde(&[0.0, 0.0]) - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn u_bar_values() {
        assert_eq!(data("P1").u_bar(&[2.0]), 2.0);
        let p2 = data("P2");
        assert_eq!(p2.u_bar(&[1.0, 0.0]), 1.0);
        assert_eq!(p2.u_bar(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn moments_at_origin() {
        let p1 = data("P1");
        assert!(p1.moment_map(&[0.0])[0].abs() < 1e-15);
        assert!((p1.hessian(&[0.0])[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p1.moment_map(&[60.0])[0] - 1.0).abs() < 1e-12);
        assert!((p1.moment_map(&[-60.0])[0] + 1.0).abs() < 1e-12);
        let p2 = data("P2");
        let g = p2.moment_map(&[0.0, 0.0]);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn envelope_gap_at_origin_is_log_count() {
        for name in ["P1", "P2", "Bl3P2"] {
            let d = data(name);
            let gap = d.envelope_gap(&vec![0.0; d.dim()]);
            assert!((gap - (d.lattice_point_count() as f64).ln()).abs() < 1e-14);
        }
        let r = data("P1").envelope_check(&SampleSpec::Grid { radius: 10.0, spacing: 0.02 });
        assert_eq!(r.points, 1001);
        assert!(r.passed && r.max_gap <= 3f64.ln() + 1e-12);
    }

    #[test]
    fn grid_points_cover_box() {
        let pts = SampleSpec::Grid { radius: 1.0, spacing: 0.5 }.points(2);
        assert_eq!(pts.len(), 25);
        assert!(pts.contains(&vec![-1.0, 1.0]));
    }

    #[test]
    fn invalid_tau() {
        assert!(data("P1").integral_exp(0.0, IntegralMethod::Auto).is_err());
        assert!(data("P1").integral_exp(-1.0, IntegralMethod::Auto).is_err());
    }
}
