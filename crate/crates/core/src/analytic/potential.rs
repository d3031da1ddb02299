//! Bounded perturbations `φ̃` of `ũ` from the weighted family
//!
//! ```text
//! φ̃_w(y) = log Σ w_v exp<v, y> - ũ(y) - c,
//! ```
//!
//! with `c = sup (ũ_w - ũ)`. Here `ũ + φ̃ = ũ_w - c` is convex, `|φ̃|` is
//! bounded by `max |log w_v| + |c|`, and `sup φ̃ = 0` up to the accuracy of
//! the estimate of `c`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::integrate::{integrate_over_fan, BoundCheck, IntegralMethod};
use super::{dot, lse_moments, shifted_lse, AnalyticData, SampleSpec};
use crate::error::{Error, Result};
use crate::symmetry::SymmetryGroup;

pub const POSITIVITY_TOLERANCE: f64 = 1e-9;
/// Importance rate for the alpha integral, whose integrand decays like `exp(-ū)`.
pub const ALPHA_IMPORTANCE_RATE: f64 = 1.0;

const SUP_GRID_RADIUS: f64 = 10.0;
const SUP_GRID_SPACING: f64 = 0.25;
/// Grid points times lattice points for the sup estimate.
const SUP_GRID_BUDGET: usize = 20_000_000;
const SUP_GRID_MAX_POINTS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Potential {
    /// `log w_v`, aligned with the sorted lattice points of `Δ`.
    pub log_weights: Vec<f64>,
    /// The shift `c`.
    pub shift: f64,
    pub invariant: bool,
}

impl Potential {
    /// `φ̃ ≡ 0`.
    pub fn zero(data: &AnalyticData) -> Self {
        Potential { log_weights: vec![0.0; data.lattice_point_count()], shift: 0.0, invariant: true }
    }

    /// Build `φ̃_w`. With `group` given the weights must be constant on the
    /// orbits of its contragredient action on `L(Δ)`.
    pub fn from_weights(data: &AnalyticData, weights: &[f64], group: Option<&SymmetryGroup>) -> Result<Self> {
        if weights.len() != data.lattice_point_count() {
            return Err(Error::DimensionMismatch {
                expected: data.lattice_point_count(),
                found: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::NonPositiveWeight(w));
        }
        if let Some(g) = group {
            for orbit in g.dual_orbits(data.lattice_points()) {
                let w0 = weights[orbit[0]];
                if orbit.iter().any(|&i| (weights[i] - w0).abs() > 1e-12 * w0) {
                    return Err(Error::NonInvariantWeights);
                }
            }
        }
        let log_weights: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let shift = estimate_sup(data, &log_weights);
        Ok(Potential { log_weights, shift, invariant: group.is_some() })
    }

    fn is_trivial(&self) -> bool {
        self.shift == 0.0 && self.log_weights.iter().all(|&w| w == 0.0)
    }

    /// `ũ_w(y) - c`, i.e. `ũ + φ̃`.
    pub fn total(&self, data: &AnalyticData, y: &[f64]) -> f64 {
        let (max, excess) = shifted_lse(data.points(), Some(&self.log_weights), y);
        max + excess - self.shift
    }

    pub fn value(&self, data: &AnalyticData, y: &[f64]) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        self.total(data, y) - data.u_tilde(y)
    }

    pub fn max_abs_log_weight(&self) -> f64 {
        self.log_weights.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// `sup (ũ_w - ũ)`: the largest of the per-vertex limits `log w_vertex`, a
/// grid maximum, and pattern-search refinements of the best grid points.
fn estimate_sup(data: &AnalyticData, log_w: &[f64]) -> f64 {
    let n = data.dim();
    let diff = |y: &[f64]| {
        let (a, ea) = shifted_lse(data.points(), Some(log_w), y);
        let (b, eb) = shifted_lse(data.points(), None, y);
        (a - b) + (ea - eb)
    };
    let mut best = data
        .vertex_indices()
        .iter()
        .map(|&i| log_w[i])
        .fold(f64::NEG_INFINITY, f64::max);

    let spacing = {
        let points = (SUP_GRID_BUDGET / data.lattice_point_count()).min(SUP_GRID_MAX_POINTS);
        let per_axis = (points as f64).powf(1.0 / n as f64).floor().max(3.0);
        (2.0 * SUP_GRID_RADIUS / (per_axis - 1.0)).max(SUP_GRID_SPACING)
    };
    let grid = SampleSpec::Grid { radius: SUP_GRID_RADIUS, spacing }.points(n);
    let mut scored: Vec<(f64, Vec<f64>)> = grid.into_iter().map(|y| (diff(&y), y)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (value, start) in scored.into_iter().take(4) {
        best = best.max(value);
        best = best.max(pattern_search(&diff, start, spacing));
    }
    best
}

/// Coordinate pattern search for a local maximum inside the sampling box.
/// Suprema approached at infinity are the vertex limits, handled separately,
/// so the search neither leaves the box nor chases them.
fn pattern_search(f: &dyn Fn(&[f64]) -> f64, mut y: Vec<f64>, mut step: f64) -> f64 {
    const MAX_SWEEPS: usize = 500;
    let mut best = f(&y);
    let mut sweeps = 0;
    while step > 1e-7 && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut improved = false;
        for i in 0..y.len() {
            for dir in [1.0, -1.0] {
                let old = y[i];
                let moved = old + dir * step;
                if moved.abs() > SUP_GRID_RADIUS {
                    continue;
                }
                y[i] = moved;
                let v = f(&y);
                if v > best {
                    best = v;
                    improved = true;
                } else {
                    y[i] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Random weights, constant on the orbits of `group` acting on `L(Δ)`, with
/// `log w` uniform on `[-log 4, log 4]`.
pub fn random_invariant_weights<R: Rng>(data: &AnalyticData, group: &SymmetryGroup, rng: &mut R) -> Vec<f64> {
    let bound = 4f64.ln();
    let mut weights = vec![0.0; data.lattice_point_count()];
    for orbit in group.dual_orbits(data.lattice_points()) {
        let w = rng.gen_range(-bound..=bound).exp();
        for i in orbit {
            weights[i] = w;
        }
    }
    weights
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    pub points: usize,
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub min_value: f64,
    #[serde(serialize_with = "crate::cli::ser::floats")]
    pub witness: Vec<f64>,
    pub passed: bool,
    /// Lower bound for `ũ + φ̃` outside the sampled box:
    /// `r · radius + min log w - c`, with `r` the inradius of `Δ`.
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub asymptotic_floor: f64,
    pub floor_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaReport {
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub lambda: f64,
    pub check: BoundCheck,
    /// `n / (n + 1)`
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub threshold: f64,
    pub exceeds_threshold: bool,
}

impl AnalyticData {
    pub fn make_test_potential(&self, weights: &[f64], group: Option<&SymmetryGroup>) -> Result<Potential> {
        Potential::from_weights(self, weights, group)
    }

    /// Minimum of `ũ + φ̃` over the samples, and the floor beyond them.
    pub fn positivity_check(&self, potential: &Potential, samples: &SampleSpec) -> PositivityReport {
        let points = samples.points(self.dim());
        let (min_value, witness) = points
            .par_iter()
            .map(|y| (potential.total(self, y), y))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(v, y)| (v, y.clone()))
            .expect("nonempty sample set");
        let inradius = self
            .facet_normals()
            .iter()
            .map(|e| 1.0 / dot(e, e).sqrt())
            .fold(f64::INFINITY, f64::min);
        let min_log_w = potential.log_weights.iter().copied().fold(f64::INFINITY, f64::min);
        let asymptotic_floor = inradius * samples.radius() + min_log_w - potential.shift;
        PositivityReport {
            points: points.len(),
            min_value,
            witness,
            passed: min_value >= -POSITIVITY_TOLERANCE,
            asymptotic_floor,
            floor_passed: asymptotic_floor >= -POSITIVITY_TOLERANCE,
        }
    }

    /// `∫ exp(-λ φ̃ - ũ) dy` against `v(Δ) / (1 - λ)^n`.
    pub fn alpha_integral(&self, lambda: f64, potential: &Potential, method: IntegralMethod) -> Result<AlphaReport> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        // -λ φ̃ - ũ = -λ (ũ_w - c) - (1 - λ) ũ
        let log_f = |y: &[f64]| -lambda * potential.total(self, y) - (1.0 - lambda) * self.u_tilde(y);
        let estimate = integrate_over_fan(self, &log_f, ALPHA_IMPORTANCE_RATE, method)?;
        let n = self.dim();
        let bound = self.vertex_count() as f64 / (1.0 - lambda).powi(n as i32);
        let threshold = n as f64 / (n as f64 + 1.0);
        Ok(AlphaReport {
            lambda,
            check: BoundCheck::new(estimate, bound),
            threshold,
            exceeds_threshold: lambda > threshold,
        })
    }

    /// `det Hess(ũ + φ̃)(y) - exp(-ũ(y) - t φ̃(y))`.
    pub fn ma_residual(&self, potential: &Potential, t: f64, y: &[f64]) -> f64 {
        let (_, _, hess) = lse_moments(self.points(), Some(&potential.log_weights), y);
        hess.determinant() - (-self.u_tilde(y) - t * potential.value(self, y)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::named_fan;
    use crate::polytope::polytope_from_fan;
    use crate::symmetry::fan_automorphisms;

    fn setup(name: &str) -> (AnalyticData, SymmetryGroup) {
        let fan = named_fan(name).unwrap();
        let d = AnalyticData::new(&polytope_from_fan(&fan).unwrap());
        (d, fan_automorphisms(&fan))
    }

    #[test]
    fn unit_weights_give_zero_potential() {
        let (d, g) = setup("P2");
        let p = d.make_test_potential(&[1.0; 10], Some(&g)).unwrap();
        assert_eq!(p.shift, 0.0);
        assert_eq!(p.value(&d, &[0.3, -1.2]), 0.0);
    }

    #[test]
    fn p1_bump_weights() {
        // lattice points sorted: -1, 0, 1
        let (d, g) = setup("P1");
        let p = d.make_test_potential(&[1.0, 2.0, 1.0], Some(&g)).unwrap();
        assert!((p.shift - (4.0f64 / 3.0).ln()).abs() < 1e-10, "{}", p.shift);
        assert!(p.value(&d, &[0.0]).abs() < 1e-10);
        assert!(p.value(&d, &[3.0]) < 0.0);
        let r = d.positivity_check(&p, &SampleSpec::Grid { radius: 10.0, spacing: 0.5 });
        assert!((r.min_value - 3f64.ln()).abs() < 1e-10);
        assert_eq!(r.witness, vec![0.0]);
        assert!(r.passed);
    }

    #[test]
    fn non_invariant_and_non_positive_weights() {
        let (d, g) = setup("P1");
        assert_eq!(d.make_test_potential(&[2.0, 1.0, 1.0], Some(&g)), Err(Error::NonInvariantWeights));
        assert!(d.make_test_potential(&[2.0, 1.0, 1.0], None).is_ok());
        assert_eq!(d.make_test_potential(&[0.0, 1.0, 1.0], None), Err(Error::NonPositiveWeight(0.0)));
    }

    #[test]
    fn positivity_of_zero_potential() {
        let (d, _) = setup("P1");
        let r = d.positivity_check(&Potential::zero(&d), &SampleSpec::Grid { radius: 10.0, spacing: 0.5 });
        assert!((r.min_value - 3f64.ln()).abs() < 1e-15);
        let (v1, _) = setup("Bl3P2");
        let r = v1.positivity_check(&Potential::zero(&v1), &SampleSpec::Grid { radius: 10.0, spacing: 0.5 });
        assert!((r.min_value - 7f64.ln()).abs() < 1e-14);
        assert!(r.floor_passed);
    }

    #[test]
    fn alpha_integral_examples() {
        let (d, g) = setup("P1");
        let exact = 2.0 * std::f64::consts::PI / (3.0 * 3f64.sqrt());
        let r = d.alpha_integral(0.5, &Potential::zero(&d), IntegralMethod::Auto).unwrap();
        assert!((r.check.estimate.value - exact).abs() < 1e-9);
        assert_eq!(r.check.bound, 4.0);
        assert!(r.check.holds);
        let bump = d.make_test_potential(&[1.0, 2.0, 1.0], Some(&g)).unwrap();
        assert!(d.alpha_integral(0.5, &bump, IntegralMethod::Auto).unwrap().check.holds);
        assert!(d.alpha_integral(1.0, &bump, IntegralMethod::Auto).is_err());
        assert!(d.alpha_integral(0.0, &bump, IntegralMethod::Auto).is_err());

        let (p2, _) = setup("P2");
        let r = p2.alpha_integral(0.75, &Potential::zero(&p2), IntegralMethod::Auto).unwrap();
        assert_eq!(r.check.bound, 48.0);
        assert!(r.check.holds && r.exceeds_threshold);
    }

    #[test]
    fn residual_examples() {
        let (d, _) = setup("P1");
        let zero = Potential::zero(&d);
        for t in [0.0, 0.5, 1.0] {
            assert!((d.ma_residual(&zero, t, &[0.0]) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(d.ma_residual(&zero, 0.0, &[200.0]).abs() < 1e-12);

        let (p2, _) = setup("P2");
        // covariance of the 10 lattice points under the uniform distribution
        let pts = p2.points();
        let mut cov = [[0.0; 2]; 2];
        for v in pts {
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += v[i] * v[j] / 10.0;
                }
            }
        }
        let expected = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0] - 0.1;
        assert!((p2.ma_residual(&Potential::zero(&p2), 1.0, &[0.0, 0.0]) - expected).abs() < 1e-14);
    }
}
