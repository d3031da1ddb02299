//! Certification pipeline: validate the fan, build `Δ`, search the fan
//! automorphisms and decide whether they fix a nonzero character.
//!
//! A symmetric smooth toric Fano manifold is certified Einstein-Kähler. The
//! barycenter and `R(Δ)` conditions are necessary for any such metric and are
//! reported alongside; a symmetric fan failing them would indicate a bug.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    random_invariant_weights, AlphaReport, AnalyticData, BoundCheck, IntegralMethod, PositivityReport,
    Potential, SampleSpec, DEFAULT_SAMPLES_PER_CONE, DEFAULT_SEED,
};
use crate::error::{Error, Result};
use crate::fan::{validate_smooth_fano, Fan, ValidationReport};
use crate::polytope::{is_centrally_symmetric, polytope_from_fan, Barycenter, FanoPolytope};
use crate::symmetry::{fan_automorphisms, is_symmetric, SymmetryVerdict};

pub const VERDICT_YES: &str = "EK certificate: YES (symmetric toric Fano)";
pub const VERDICT_UNDECIDED: &str = "undecided by symmetric criterion";
pub const VERDICT_FAILS: &str = "fails necessary conditions";
pub const VERDICT_NOT_FANO: &str = "not a smooth toric Fano fan";
pub const VERDICT_NECESSARY_HOLD: &str = "necessary conditions hold, symmetry not checked";

/// Number of random invariant potentials in the analytic evidence.
pub const EVIDENCE_POTENTIALS: usize = 20;
pub const EVIDENCE_LAMBDA: f64 = 0.9;
const EVIDENCE_RANDOM_POINTS: usize = 20_000;
const EVIDENCE_BUDGET: usize = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    /// Barycenter and `R(Δ)` only, without the automorphism search.
    NecessaryOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyOptions {
    pub mode: Mode,
    pub analytic: bool,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { mode: Mode::Full, analytic: false, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NecessaryConditions {
    pub futaki_vanishes: bool,
    pub aut_reductive: bool,
}

impl NecessaryConditions {
    pub fn hold(&self) -> bool {
        self.futaki_vanishes && self.aut_reductive
    }
}

/// Futaki invariant vanishing (barycenter zero) and reductivity of the
/// automorphism group (`R(Δ)` centrally symmetric).
pub fn necessary_conditions(delta: &FanoPolytope) -> NecessaryConditions {
    NecessaryConditions {
        futaki_vanishes: delta.barycenter().is_zero(),
        aut_reductive: is_centrally_symmetric(delta.facet_interior_points()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivitySummary {
    pub potentials: usize,
    pub all_passed: bool,
    pub all_floors_passed: bool,
    /// Report for the potential with the smallest sampled minimum.
    pub worst: PositivityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticEvidence {
    pub seed: u64,
    /// `∫ exp(-ũ)` against `v(Δ)`.
    pub integral_exp: BoundCheck,
    pub positivity: PositivitySummary,
    /// Alpha integral for the first random invariant potential.
    pub alpha: AlphaReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub name: Option<String>,
    pub dim: usize,
    pub ray_count: usize,
    pub cone_count: usize,
    pub validation: ValidationReport,
    pub group_order: Option<usize>,
    pub symmetric: Option<SymmetryVerdict>,
    pub barycenter: Option<Barycenter>,
    pub vertex_count: Option<usize>,
    pub lattice_point_count: Option<usize>,
    pub r_delta_size: Option<usize>,
    pub r_centrally_symmetric: Option<bool>,
    pub futaki_vanishes: Option<bool>,
    pub aut_reductive: Option<bool>,
    pub ek_certified: bool,
    pub verdict: String,
    pub analytic_evidence: Option<AnalyticEvidence>,
}

impl CertificationReport {
    /// Plain text summary; the last line is the verdict.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(s, "fan: {name}");
        }
        let _ = writeln!(s, "dimension {}, {} rays, {} maximal cones", self.dim, self.ray_count, self.cone_count);
        let v = &self.validation;
        let _ = writeln!(
            s,
            "primitive {}, complete {}, regular {}, fano {}",
            yes_no(v.is_primitive_ok),
            yes_no(v.is_complete),
            yes_no(v.is_regular),
            yes_no(v.is_fano)
        );
        for d in &v.diagnostics {
            let _ = writeln!(s, "  {d}");
        }
        if let (Some(nv), Some(nl)) = (self.vertex_count, self.lattice_point_count) {
            let _ = writeln!(s, "polytope: {nv} vertices, {nl} lattice points");
        }
        if let Some(b) = &self.barycenter {
            let _ = writeln!(s, "barycenter {} (volume {})", b.point, b.total_volume);
        }
        if let (Some(size), Some(sym)) = (self.r_delta_size, self.r_centrally_symmetric) {
            let _ = writeln!(s, "R(Delta): {size} points, centrally symmetric {}", yes_no(sym));
        }
        if let Some(sym) = &self.symmetric {
            let _ = writeln!(s, "automorphism group order {}", sym.group_order);
            if sym.is_symmetric {
                let _ = writeln!(s, "no nonzero invariant character");
            } else {
                let basis: Vec<String> = sym.fixed_space_basis.iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "invariant characters spanned by {}", basis.join(", "));
            }
        }
        if let Some(ev) = &self.analytic_evidence {
            let ie = &ev.integral_exp;
            let _ = writeln!(
                s,
                "integral of exp(-u): {:.6} +- {:.2e} <= {} : {}",
                ie.estimate.value,
                ie.estimate.standard_error,
                ie.bound,
                yes_no(ie.holds)
            );
            let p = &ev.positivity;
            let _ = writeln!(
                s,
                "positivity over {} invariant potentials: min {:.6}, passed {}",
                p.potentials,
                p.worst.min_value,
                yes_no(p.all_passed && p.all_floors_passed)
            );
            let a = &ev.alpha;
            let _ = writeln!(
                s,
                "alpha integral at lambda {}: {:.6} +- {:.2e} <= {:.6} : {}",
                a.lambda,
                a.check.estimate.value,
                a.check.estimate.standard_error,
                a.check.bound,
                yes_no(a.check.holds)
            );
        }
        let _ = write!(s, "{}", self.verdict);
        s
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn certify(fan: &Fan, analytic: bool) -> Result<CertificationReport> {
    certify_with(fan, None, CertifyOptions { analytic, ..CertifyOptions::default() })
}

pub fn certify_with(fan: &Fan, name: Option<&str>, options: CertifyOptions) -> Result<CertificationReport> {
    let validation = validate_smooth_fano(fan);
    let mut report = CertificationReport {
        name: name.map(str::to_string),
        dim: fan.dim(),
        ray_count: fan.ray_count(),
        cone_count: fan.cone_count(),
        validation: validation.clone(),
        group_order: None,
        symmetric: None,
        barycenter: None,
        vertex_count: None,
        lattice_point_count: None,
        r_delta_size: None,
        r_centrally_symmetric: None,
        futaki_vanishes: None,
        aut_reductive: None,
        ek_certified: false,
        verdict: VERDICT_NOT_FANO.to_string(),
        analytic_evidence: None,
    };
    let smooth_fano =
        validation.is_primitive_ok && validation.is_complete && validation.is_regular && validation.is_fano;
    if !smooth_fano {
        return Ok(report);
    }

    let delta = polytope_from_fan(fan)?;
    let barycenter = delta.barycenter();
    let necessary = NecessaryConditions {
        futaki_vanishes: barycenter.is_zero(),
        aut_reductive: is_centrally_symmetric(delta.facet_interior_points()),
    };
    report.vertex_count = Some(delta.vertex_count());
    report.lattice_point_count = Some(delta.lattice_points().len());
    report.r_delta_size = Some(delta.facet_interior_points().len());
    report.r_centrally_symmetric = Some(necessary.aut_reductive);
    report.futaki_vanishes = Some(necessary.futaki_vanishes);
    report.aut_reductive = Some(necessary.aut_reductive);
    report.barycenter = Some(barycenter);

    if options.mode == Mode::NecessaryOnly {
        report.verdict =
            if necessary.hold() { VERDICT_NECESSARY_HOLD } else { VERDICT_FAILS }.to_string();
        return Ok(report);
    }

    let group = fan_automorphisms(fan);
    let verdict = is_symmetric(fan, &group);
    assert!(
        !verdict.is_symmetric || necessary.hold(),
        "symmetric fan violates the barycenter or R(Delta) condition"
    );
    report.ek_certified = verdict.is_symmetric;
    report.verdict = if verdict.is_symmetric {
        VERDICT_YES
    } else if necessary.hold() {
        VERDICT_UNDECIDED
    } else {
        VERDICT_FAILS
    }
    .to_string();
    report.group_order = Some(group.order());
    report.symmetric = Some(verdict);

    if options.analytic {
        let data = AnalyticData::new(&delta);
        let method = evidence_method(&data, options.seed);
        let integral_exp = data.integral_exp(1.0, method)?;

        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let potentials = (0..EVIDENCE_POTENTIALS)
            .map(|_| {
                let w = random_invariant_weights(&data, &group, &mut rng);
                data.make_test_potential(&w, Some(&group))
            })
            .collect::<Result<Vec<Potential>>>()?;
        let samples = match data.dim() {
            0..=2 => SampleSpec::Grid { radius: 10.0, spacing: 0.5 },
            _ => SampleSpec::Random { radius: 10.0, count: EVIDENCE_RANDOM_POINTS, seed: options.seed },
        };
        let reports: Vec<PositivityReport> =
            potentials.iter().map(|p| data.positivity_check(p, &samples)).collect();
        let positivity = PositivitySummary {
            potentials: reports.len(),
            all_passed: reports.iter().all(|r| r.passed),
            all_floors_passed: reports.iter().all(|r| r.floor_passed),
            worst: reports
                .iter()
                .min_by(|a, b| a.min_value.total_cmp(&b.min_value))
                .cloned()
                .expect("at least one potential"),
        };
        let alpha = data.alpha_integral(EVIDENCE_LAMBDA, &potentials[0], method)?;
        report.analytic_evidence = Some(AnalyticEvidence { seed: options.seed, integral_exp, positivity, alpha });
    }
    Ok(report)
}

/// Quadrature in low dimension; otherwise Monte Carlo with the samples per
/// cone scaled so one integral costs about `EVIDENCE_BUDGET` exponentials.
fn evidence_method(data: &AnalyticData, seed: u64) -> IntegralMethod {
    if data.dim() <= 2 {
        return IntegralMethod::Auto;
    }
    let per_sample = data.cones().len() * data.lattice_point_count();
    let samples_per_cone = (EVIDENCE_BUDGET / per_sample).clamp(1_000, DEFAULT_SAMPLES_PER_CONE);
    IntegralMethod::MonteCarlo { samples_per_cone, seed }
}

/// Certify independent fans on at most `jobs` threads; results follow the
/// input order.
pub fn certify_batch(
    fans: &[(String, Fan)],
    options: CertifyOptions,
    jobs: usize,
) -> Result<Vec<Result<CertificationReport>>> {
    if jobs == 0 {
        return Err(Error::InvalidParameter("jobs must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(pool.install(|| {
        fans.par_iter().map(|(name, fan)| certify_with(fan, Some(name), options)).collect()
    }))
}
