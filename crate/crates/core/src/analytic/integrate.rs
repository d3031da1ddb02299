//! Integration over `N_R` cone by cone.
//!
//! Every maximal cone is generated by a lattice basis, so `y = B s` with
//! `s ∈ R_{>=0}^n` maps the positive orthant onto the cone with unit
//! Jacobian. On the orthant `ū(B s) = s_1 + ... + s_n`, which is what makes
//! the exponential importance density exact to sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use super::AnalyticData;
use crate::error::{Error, Result};

pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-11;
pub const DEFAULT_SAMPLES_PER_CONE: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum IntegralMethod {
    /// Quadrature for `n <= 2`, Monte Carlo with the default seed otherwise.
    Auto,
    /// Iterated double-exponential quadrature, `n <= 2` only.
    Quadrature { tolerance: f64 },
    /// Importance sampling with density `∝ exp(-rate · ū)` on each cone.
    MonteCarlo { samples_per_cone: usize, seed: u64 },
}

impl IntegralMethod {
    pub fn monte_carlo(seed: u64) -> Self {
        IntegralMethod::MonteCarlo { samples_per_cone: DEFAULT_SAMPLES_PER_CONE, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralEstimate {
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub value: f64,
    /// Zero for quadrature.
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub standard_error: f64,
    pub method: String,
    /// Function evaluations for quadrature, samples for Monte Carlo.
    pub samples: u64,
    pub seed: Option<u64>,
}

/// An estimate compared against an upper bound with a three-sigma margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub estimate: IntegralEstimate,
    #[serde(serialize_with = "crate::cli::ser::float")]
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(estimate: IntegralEstimate, bound: f64) -> Self {
        let holds = estimate.value + 3.0 * estimate.standard_error <= bound;
        BoundCheck { estimate, bound, holds }
    }
}

/// `∫ exp(log_f(y)) dy` over `N_R`. `rate` is the decay of the importance
/// density for Monte Carlo and should match the decay of the integrand along
/// `ū`.
pub(crate) fn integrate_over_fan(
    data: &AnalyticData,
    log_f: &(dyn Fn(&[f64]) -> f64 + Sync),
    rate: f64,
    method: IntegralMethod,
) -> Result<IntegralEstimate> {
    let method = match method {
        IntegralMethod::Auto if data.dim() <= 2 => {
            IntegralMethod::Quadrature { tolerance: DEFAULT_QUADRATURE_TOLERANCE }
        }
        IntegralMethod::Auto => IntegralMethod::monte_carlo(super::DEFAULT_SEED),
        m => m,
    };
    match method {
        IntegralMethod::Quadrature { tolerance } => quadrature(data, log_f, tolerance),
        IntegralMethod::MonteCarlo { samples_per_cone, seed } => {
            if samples_per_cone < 2 {
                return Err(Error::InvalidParameter("need at least two samples per cone".into()));
            }
            Ok(monte_carlo(data, log_f, rate, samples_per_cone, seed))
        }
        IntegralMethod::Auto => unreachable!(),
    }
}

fn point_in_cone(gens: &[Vec<f64>], s: &[f64]) -> Vec<f64> {
    let n = gens.len();
    (0..n).map(|i| gens.iter().zip(s).map(|(g, si)| g[i] * si).sum()).collect()
}

/// `∫_0^∞ g(s) ds` through `s = t / (1 - t)`.
fn half_line<F: Fn(f64) -> f64>(g: F, tolerance: f64) -> (f64, u64) {
    let out = quadrature::double_exponential::integrate(
        |t| {
            let d = 1.0 - t;
            if d <= 0.0 {
                return 0.0;
            }
            let v = g(t / d) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tolerance,
    );
    (out.integral, out.num_function_evaluations as u64)
}

fn quadrature(
    data: &AnalyticData,
    log_f: &(dyn Fn(&[f64]) -> f64 + Sync),
    tolerance: f64,
) -> Result<IntegralEstimate> {
    let n = data.dim();
    if n > 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature supports dimension at most 2, got {n}"
        )));
    }
    let per_cone: Vec<(f64, u64)> = data
        .cones()
        .par_iter()
        .map(|gens| {
            if n == 1 {
                half_line(|s| log_f(&point_in_cone(gens, &[s])).exp(), tolerance)
            } else {
                let evals = std::sync::atomic::AtomicU64::new(0);
                let (value, outer) = half_line(
                    |s1| {
                        let (inner, k) =
                            half_line(|s2| log_f(&point_in_cone(gens, &[s1, s2])).exp(), tolerance);
                        evals.fetch_add(k, std::sync::atomic::Ordering::Relaxed);
                        inner
                    },
                    tolerance,
                );
                (value, outer + evals.into_inner())
            }
        })
        .collect();
    Ok(IntegralEstimate {
        value: per_cone.iter().map(|c| c.0).sum(),
        standard_error: 0.0,
        method: "quadrature".into(),
        samples: per_cone.iter().map(|c| c.1).sum(),
        seed: None,
    })
}

/// One independent stream per cone; per-cone means and variances are summed
/// in cone order, so the result does not depend on thread scheduling.
fn monte_carlo(
    data: &AnalyticData,
    log_f: &(dyn Fn(&[f64]) -> f64 + Sync),
    rate: f64,
    samples: usize,
    seed: u64,
) -> IntegralEstimate {
    let n = data.dim();
    let exp = Exp::new(rate).expect("positive rate");
    let log_norm = n as f64 * rate.ln();
    let per_cone: Vec<(f64, f64)> = data
        .cones()
        .par_iter()
        .enumerate()
        .map(|(c, gens)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut mean = 0.0;
            let mut m2 = 0.0;
            let mut s = vec![0.0; n];
            for k in 0..samples {
                for x in s.iter_mut() {
                    *x = exp.sample(&mut rng);
                }
                let sum: f64 = s.iter().sum();
                // f(y) / q(s) with q(s) = rate^n exp(-rate * sum)
                let w = (log_f(&point_in_cone(gens, &s)) + rate * sum - log_norm).exp();
                let delta = w - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (w - mean);
            }
            (mean, m2 / ((samples - 1) as f64 * samples as f64))
        })
        .collect();
    IntegralEstimate {
        value: per_cone.iter().map(|c| c.0).sum(),
        standard_error: per_cone.iter().map(|c| c.1).sum::<f64>().sqrt(),
        method: "monte-carlo".into(),
        samples: (samples * per_cone.len()) as u64,
        seed: Some(seed),
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
    fn half_line_of_exponential() {
        let (v, _) = half_line(|s| (-2.0 * s).exp(), 1e-12);
        assert!((v - 0.5).abs() < 1e-10);
    }

    #[test]
    fn p1_matches_closed_form() {
        // ∫ dy / (1 + 2 cosh y) = 2π / (3√3)
        let exact = 2.0 * std::f64::consts::PI / (3.0 * 3f64.sqrt());
        let r = data("P1").integral_exp(1.0, IntegralMethod::Auto).unwrap();
        assert!((r.estimate.value - exact).abs() < 1e-9, "{}", r.estimate.value);
        assert_eq!(r.estimate.standard_error, 0.0);
        assert!(r.holds && r.bound == 2.0);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature_on_p2() {
        let d = data("P2");
        let q = d.integral_exp(1.0, IntegralMethod::Auto).unwrap().estimate;
        let mc = d
            .integral_exp(1.0, IntegralMethod::MonteCarlo { samples_per_cone: 40_000, seed: 3 })
            .unwrap()
            .estimate;
        assert!((q.value - mc.value).abs() < 4.0 * mc.standard_error + 1e-12, "{q:?} {mc:?}");
        assert!(mc.standard_error > 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let d = data("P2");
        let m = IntegralMethod::MonteCarlo { samples_per_cone: 1000, seed: 11 };
        assert_eq!(d.integral_exp(2.0, m).unwrap(), d.integral_exp(2.0, m).unwrap());
    }

    #[test]
    fn quadrature_refuses_high_dimension() {
        let d = data("P3");
        let r = d.integral_exp(1.0, IntegralMethod::Quadrature { tolerance: 1e-8 });
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }
}
