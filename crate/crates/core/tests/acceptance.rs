//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toric_ek::analytic::{random_invariant_weights, AnalyticData, IntegralMethod, Potential, SampleSpec};
use toric_ek::catalog::{
    enumerate_smooth_fano_surfaces, family_fan, family_witnesses, named_fan, surface_name, FamilySpec,
};
use toric_ek::certify::{certify, VERDICT_FAILS, VERDICT_UNDECIDED};
use toric_ek::lattice::fixed_subspace;
use toric_ek::polytope::is_centrally_symmetric;
use toric_ek::symmetry::{fan_automorphisms, verify_subgroup, SymmetryGroup};
use toric_ek::{polytope_from_fan, Fan};

const FAMILY_TIME_LIMIT: Duration = Duration::from_secs(60);
const SURFACE_TIME_LIMIT: Duration = Duration::from_secs(30);
const P1_INTEGRAL_TOLERANCE: f64 = 1e-4;
const POSITIVITY_TOLERANCE: f64 = 1e-9;
const POTENTIALS_PER_INSTANCE: usize = 100;
const RANDOM_POSITIVITY_POINTS: usize = 100_000;
const ALPHA_LAMBDAS: [f64; 3] = [0.5, 0.9, 0.99];
const DERIVATIVE_POINTS: usize = 100;
const FD_STEP: f64 = 1e-5;
const FD_RELATIVE_TOLERANCE: f64 = 1e-6;
const HESSIAN_EIGEN_FLOOR: f64 = -1e-12;
const EQUIVARIANCE_TOLERANCE: f64 = 1e-10;
const SEED: u64 = 0x00EC_2024;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

fn data(fan: &Fan) -> AnalyticData {
    AnalyticData::new(&polytope_from_fan(fan).unwrap())
}

/// Symmetric catalog instances of dimension at most `n`.
fn symmetric_up_to(n: usize) -> Vec<(String, Fan)> {
    common::catalog_up_to(n)
        .into_iter()
        .filter(|(_, f)| certify(f, false).map(|r| r.ek_certified).unwrap_or(false))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let specs = FamilySpec::desk_scale();
    for &spec in &specs {
        let fan = family_fan(spec).map_err(|e| format!("{spec}: {e}"))?;
        let report = certify(&fan, false).map_err(|e| format!("{spec}: {e}"))?;
        ensure(report.ek_certified, || format!("{spec} not certified: {}", report.verdict))?;
        let witnesses = family_witnesses(spec).map_err(|e| e.to_string())?;
        ensure(verify_subgroup(&fan, &witnesses).unwrap(), || format!("{spec} witnesses are not automorphisms"))?;
        let duals: Vec<_> = witnesses.iter().map(|g| g.dual()).collect();
        ensure(fixed_subspace(&duals).is_empty(), || format!("{spec} witnesses fix a character"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < FAMILY_TIME_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!("{} instances certified, witnesses verified", specs.len()))
}

fn criterion_2() -> Outcome {
    let specs = FamilySpec::desk_scale();
    for &spec in &specs {
        let delta = polytope_from_fan(&family_fan(spec).unwrap()).map_err(|e| e.to_string())?;
        ensure(delta.barycenter().is_zero(), || format!("{spec} barycenter {}", delta.barycenter().point))?;
        ensure(is_centrally_symmetric(delta.facet_interior_points()), || format!("{spec} R(Delta) not symmetric"))?;
    }
    Ok(format!("{} instances: exact barycenter 0 and R(Delta) = -R(Delta)", specs.len()))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let surfaces = enumerate_smooth_fano_surfaces();
    ensure(surfaces.len() == 5, || format!("{} classes", surfaces.len()))?;
    let mut symmetric = Vec::new();
    for fan in &surfaces {
        let name = surface_name(fan).ok_or("unnamed class")?;
        let r = certify(fan, false).map_err(|e| e.to_string())?;
        if r.ek_certified {
            symmetric.push(name);
        }
    }
    symmetric.sort();
    ensure(symmetric == ["Bl3P2", "P1xP1", "P2"], || format!("symmetric classes {symmetric:?}"))?;

    let bl1 = polytope_from_fan(&named_fan("Bl1P2").unwrap()).unwrap();
    let b1 = bl1.barycenter();
    ensure(b1.point.coords() == [q(-1, 12), q(-1, 12)], || format!("Bl1P2 barycenter {}", b1.point))?;
    ensure(!is_centrally_symmetric(bl1.facet_interior_points()), || "Bl1P2 R(Delta) symmetric".into())?;
    let b2 = polytope_from_fan(&named_fan("Bl2P2").unwrap()).unwrap().barycenter();
    ensure(!b2.is_zero(), || "Bl2P2 barycenter zero".into())?;

    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = toric_ek::cli::run(["toric-ek", "classify-surfaces"], &mut out, &mut err);
    let text = String::from_utf8(out).unwrap();
    ensure(code == 0 && text.trim_end().ends_with("5 classes, 3 symmetric"), || text.clone())?;
    let elapsed = start.elapsed();
    ensure(elapsed < SURFACE_TIME_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!("5 classes, symmetric {symmetric:?}, Bl1P2 barycenter {}, Bl2P2 barycenter {}", b1.point, b2.point))
}

fn criterion_4() -> Outcome {
    let p1 = data(&named_fan("P1").unwrap());
    let exact = 2.0 * std::f64::consts::PI / (3.0 * 3f64.sqrt());
    let r = p1.integral_exp(1.0, IntegralMethod::Auto).map_err(|e| e.to_string())?;
    let v = r.estimate.value;
    ensure((v - exact).abs() <= P1_INTEGRAL_TOLERANCE && v <= 2.0, || format!("P1 integral {v}"))?;

    let p2 = data(&named_fan("P2").unwrap());
    let r2 = p2.integral_exp(1.0, IntegralMethod::Auto).map_err(|e| e.to_string())?;
    ensure(r2.holds && r2.bound == 3.0, || format!("P2 {r2:?}"))?;

    let instances = common::catalog_up_to(4);
    for (name, fan) in &instances {
        let d = data(fan);
        let method = if d.dim() <= 2 {
            IntegralMethod::Auto
        } else {
            IntegralMethod::MonteCarlo { samples_per_cone: 5000, seed: SEED }
        };
        let mut values = Vec::new();
        for tau in [0.5, 1.0, 2.0, 4.0] {
            let r = d.integral_exp(tau, method).map_err(|e| e.to_string())?;
            ensure(r.holds, || format!("{name} tau {tau}: {r:?}"))?;
            values.push(r.estimate.value);
        }
        ensure(values.windows(2).all(|w| w[0] > w[1]), || format!("{name} not decreasing: {values:?}"))?;
    }
    Ok(format!(
        "P1 {v:.6} (|err| {:.1e}), P2 {:.6} <= 3, decreasing in tau on {} instances",
        (v - exact).abs(),
        r2.estimate.value,
        instances.len()
    ))
}

struct Potentials {
    name: String,
    data: AnalyticData,
    potentials: Vec<Potential>,
}

fn potentials_for(instances: &[(String, Fan)]) -> Vec<Potentials> {
    instances
        .iter()
        .map(|(name, fan)| {
            let d = data(fan);
            let group: SymmetryGroup = fan_automorphisms(fan);
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ name.len() as u64);
            let potentials = (0..POTENTIALS_PER_INSTANCE)
                .map(|_| {
                    let w = random_invariant_weights(&d, &group, &mut rng);
                    d.make_test_potential(&w, Some(&group)).unwrap()
                })
                .collect();
            Potentials { name: name.clone(), data: d, potentials }
        })
        .collect()
}

fn criterion_5(sets: &[Potentials]) -> Outcome {
    let mut overall = f64::INFINITY;
    for set in sets {
        let d = &set.data;
        let samples = if d.dim() <= 2 {
            SampleSpec::Grid { radius: 10.0, spacing: 0.5 }
        } else {
            SampleSpec::Random { radius: 10.0, count: RANDOM_POSITIVITY_POINTS, seed: SEED }
        };
        for p in &set.potentials {
            let r = d.positivity_check(p, &samples);
            overall = overall.min(r.min_value);
            ensure(r.min_value >= -POSITIVITY_TOLERANCE, || format!("{}: min {} at {:?}", set.name, r.min_value, r.witness))?;
        }
    }
    Ok(format!(
        "{} instances x {POTENTIALS_PER_INSTANCE} potentials, smallest minimum {overall:.6}",
        sets.len()
    ))
}

fn criterion_6(sets: &[Potentials]) -> Outcome {
    let mut count = 0;
    let mut worst_ratio: f64 = 0.0;
    for set in sets.iter().filter(|s| s.data.dim() <= 3) {
        let d = &set.data;
        let method = if d.dim() <= 2 {
            IntegralMethod::Quadrature { tolerance: 1e-9 }
        } else {
            IntegralMethod::MonteCarlo { samples_per_cone: 5000, seed: SEED }
        };
        for p in &set.potentials {
            for lambda in ALPHA_LAMBDAS {
                let a = d.alpha_integral(lambda, p, method).map_err(|e| e.to_string())?;
                let e = &a.check.estimate;
                ensure(a.check.holds, || format!("{} lambda {lambda}: {a:?}", set.name))?;
                worst_ratio = worst_ratio.max((e.value + 3.0 * e.standard_error) / a.check.bound);
                count += 1;
            }
        }
    }
    Ok(format!("{count} integrals within bound, largest (estimate + 3 sigma) / bound = {worst_ratio:.4}"))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn matrix_f64(m: &toric_ek::lattice::IntMatrix) -> Vec<Vec<f64>> {
    use num_traits::ToPrimitive;
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].to_f64().unwrap()).collect()).collect()
}

fn apply(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let instances = common::catalog();
    let mut worst_fd: f64 = 0.0;
    let mut worst_eq: f64 = 0.0;
    for (name, fan) in &instances {
        let d = data(fan);
        let n = d.dim();
        let group = fan_automorphisms(fan);
        let maps: Vec<_> = group.elements().iter().step_by((group.order() / 32).max(1)).collect();
        for k in 0..DERIVATIVE_POINTS {
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let grad = d.moment_map(&y);
            let hess = d.hessian(&y);
            for i in 0..n {
                let (mut p, mut m) = (y.clone(), y.clone());
                p[i] += FD_STEP;
                m[i] -= FD_STEP;
                let fd = (d.u_tilde(&p) - d.u_tilde(&m)) / (2.0 * FD_STEP);
                let rel = (fd - grad[i]).abs() / norm(&grad).max(1.0);
                let (gp, gm) = (d.moment_map(&p), d.moment_map(&m));
                let col: Vec<f64> = (0..n).map(|j| (gp[j] - gm[j]) / (2.0 * FD_STEP) - hess[(j, i)]).collect();
                let exact: Vec<f64> = (0..n).map(|j| hess[(j, i)]).collect();
                let rel_h = norm(&col) / norm(&exact).max(1.0);
                worst_fd = worst_fd.max(rel).max(rel_h);
                ensure(rel <= FD_RELATIVE_TOLERANCE && rel_h <= FD_RELATIVE_TOLERANCE, || {
                    format!("{name}: derivative error {rel:.2e} / {rel_h:.2e} at {y:?}")
                })?;
            }
            let eig = hess.clone().symmetric_eigenvalues();
            ensure(eig.iter().all(|&l| l >= HESSIAN_EIGEN_FLOOR), || format!("{name}: eigenvalues {eig:?}"))?;

            let wide: Vec<f64> = y.iter().map(|x| x * 3.0).collect();
            let z = d.moment_map(&wide);
            for e in d.facet_normals() {
                let s: f64 = e.iter().zip(&z).map(|(a, b)| a * b).sum();
                ensure(s < 1.0, || format!("{name}: moment map leaves the interior, <z, e> = {s}"))?;
            }
            let gap = d.envelope_gap(&wide);
            let bound = (d.lattice_point_count() as f64).ln();
            ensure(gap > 0.0 && gap <= bound, || format!("{name}: envelope gap {gap} at {wide:?}"))?;

            let g = maps[k % maps.len()];
            let (gm, dm) = (matrix_f64(g.matrix()), matrix_f64(g.dual().matrix()));
            let lhs = d.moment_map(&apply(&gm, &y));
            let rhs = apply(&dm, &grad);
            let err = norm(&lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
            worst_eq = worst_eq.max(err);
            ensure(err <= EQUIVARIANCE_TOLERANCE, || format!("{name}: equivariance error {err:.2e}"))?;
        }
    }
    Ok(format!(
        "{} instances x {DERIVATIVE_POINTS} points, max derivative error {worst_fd:.1e}, max equivariance error {worst_eq:.1e}",
        instances.len()
    ))
}

fn criterion_8() -> Outcome {
    let r = certify(&named_fan("Bl1P2").unwrap(), false).map_err(|e| e.to_string())?;
    let sym = r.symmetric.as_ref().ok_or("no symmetry verdict")?;
    ensure(!sym.is_symmetric, || "Bl1P2 reported symmetric".into())?;
    ensure(sym.fixed_space_basis.len() == 1 && sym.fixed_space_basis[0].coords() == [q(1, 1), q(1, 1)], || {
        format!("witness {:?}", sym.fixed_space_basis)
    })?;
    ensure(!r.ek_certified, || "Bl1P2 certified".into())?;
    ensure(r.verdict == VERDICT_FAILS && !r.verdict.contains(VERDICT_UNDECIDED), || r.verdict.clone())?;
    Ok(format!("symmetric false, witness {}, verdict \"{}\"", sym.fixed_space_basis[0], r.verdict))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut record = |id: usize, title: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (tag, detail) = match &outcome {
            Ok(s) => ("PASS", s.as_str()),
            Err(s) => ("FAIL", s.as_str()),
        };
        println!("{tag} [{id}] {title}: {detail} ({elapsed:.2?})");
        results.push((id, title, outcome, elapsed));
    };

    record(1, "family certification", &mut criterion_1);
    record(2, "barycenter and R(Delta) cross-check", &mut criterion_2);
    record(3, "surface classification", &mut criterion_3);
    record(4, "integral bound", &mut criterion_4);

    let start = Instant::now();
    let sets = potentials_for(&symmetric_up_to(4));
    println!("  built {} x {POTENTIALS_PER_INSTANCE} invariant potentials ({:.2?})", sets.len(), start.elapsed());
    record(5, "positivity", &mut || criterion_5(&sets));
    record(6, "alpha integral bound", &mut || criterion_6(&sets));
    record(7, "analytic sanity", &mut criterion_7);
    record(8, "negative control", &mut criterion_8);

    let passed = results.iter().filter(|r| r.2.is_ok()).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
