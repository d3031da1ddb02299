//! Complete simplicial fans in `N_R` and the smooth Fano checks.

use std::collections::{HashMap, HashSet};

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    inverse_rational, primitive, rational_kernel, solve_rational, IntMatrix, LatticeVector,
    RationalVector,
};

const PROBE_SEED: u64 = 0x5eed_fa11;
const DEFAULT_PROBES: usize = 256;

/// Primitive ray generators plus maximal cones, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    dim: usize,
    rays: Vec<LatticeVector>,
    max_cones: Vec<Vec<usize>>,
}

impl Fan {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[LatticeVector] {
        &self.rays
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn cone_count(&self) -> usize {
        self.max_cones.len()
    }

    /// Generator matrix of a maximal cone, rays as columns.
    pub fn cone_matrix(&self, cone: usize) -> IntMatrix {
        let gens: Vec<LatticeVector> =
            self.max_cones[cone].iter().map(|&i| self.rays[i].clone()).collect();
        IntMatrix::from_columns(&gens)
    }

    /// Number of maximal cones containing each ray.
    pub fn ray_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.rays.len()];
        for cone in &self.max_cones {
            for &i in cone {
                deg[i] += 1;
            }
        }
        deg
    }

    pub(crate) fn compact(&self) -> Result<CompactFan> {
        CompactFan::new(self)
    }
}

/// Build a fan from raw generators. Rays are made primitive and sorted;
/// without explicit cones the maximal cones are the facets of the ray hull.
pub fn build_fan(
    dim: usize,
    raw_rays: Vec<LatticeVector>,
    max_cones: Option<Vec<Vec<usize>>>,
) -> Result<Fan> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if raw_rays.is_empty() {
        return Err(Error::DegenerateRaySet);
    }
    for r in &raw_rays {
        if r.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
        }
    }
    let prim: Vec<LatticeVector> = raw_rays.iter().map(primitive).collect::<Result<_>>()?;
    {
        let mut seen = HashSet::new();
        for r in &prim {
            if !seen.insert(r) {
                return Err(Error::DuplicateRay(r.to_string()));
            }
        }
    }
    if IntMatrix::from_rows(&prim).rank() < dim {
        return Err(Error::DegenerateRaySet);
    }

    // canonical ray order, remembering where each input ray went
    let mut order: Vec<usize> = (0..prim.len()).collect();
    order.sort_by(|&a, &b| prim[a].cmp(&prim[b]));
    let mut new_index = vec![0; prim.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let rays: Vec<LatticeVector> = order.iter().map(|&i| prim[i].clone()).collect();

    let mut cones = match max_cones {
        Some(cones) => {
            let mut out = Vec::with_capacity(cones.len());
            for (k, cone) in cones.into_iter().enumerate() {
                if cone.len() != dim {
                    return Err(Error::ConeSize(k, dim));
                }
                let mut mapped = Vec::with_capacity(dim);
                for i in cone {
                    if i >= rays.len() {
                        return Err(Error::IndexOutOfRange(i));
                    }
                    mapped.push(new_index[i]);
                }
                mapped.sort_unstable();
                out.push(mapped);
            }
            out
        }
        None => {
            let cones = infer_facets(dim, &rays)?;
            if cones.is_empty() || !ridges_paired(dim, &cones) {
                return Err(Error::DegenerateRaySet);
            }
            cones
        }
    };
    cones.sort();
    Ok(Fan { dim, rays, max_cones: cones })
}

/// Every `dim`-subset whose affine hyperplane `<w, x> = 1` has all other rays
/// strictly below it.
fn infer_facets(dim: usize, rays: &[LatticeVector]) -> Result<Vec<Vec<usize>>> {
    let ones = vec![BigRational::one(); dim];
    let mut facets = Vec::new();
    for subset in (0..rays.len()).combinations(dim) {
        let rows: Vec<LatticeVector> = subset.iter().map(|&i| rays[i].clone()).collect();
        let Some(w) = solve_rational(&IntMatrix::from_rows(&rows), &ones) else {
            continue;
        };
        let mut extra_on_hyperplane = false;
        let mut supporting = true;
        for (i, r) in rays.iter().enumerate() {
            if subset.contains(&i) {
                continue;
            }
            let val = w.dot_lattice(r);
            if val > BigRational::one() {
                supporting = false;
                break;
            }
            if val.is_one() {
                extra_on_hyperplane = true;
            }
        }
        if supporting {
            if extra_on_hyperplane {
                return Err(Error::NonSimplicialFacet);
            }
            facets.push(subset);
        }
    }
    Ok(facets)
}

fn ridge_map(cones: &[Vec<usize>]) -> HashMap<Vec<usize>, Vec<usize>> {
    let mut ridges: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (k, cone) in cones.iter().enumerate() {
        for skip in 0..cone.len() {
            let mut ridge = cone.clone();
            ridge.remove(skip);
            ridges.entry(ridge).or_default().push(k);
        }
    }
    ridges
}

fn ridges_paired(_dim: usize, cones: &[Vec<usize>]) -> bool {
    ridge_map(cones).values().all(|c| c.len() == 2)
}

/// Outcome of [`validate_smooth_fano`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub is_primitive_ok: bool,
    pub is_complete: bool,
    pub is_regular: bool,
    pub is_fano: bool,
    pub diagnostics: Vec<String>,
}

pub fn validate_smooth_fano(fan: &Fan) -> ValidationReport {
    let mut diagnostics = Vec::new();

    let mut is_primitive_ok = true;
    let mut seen = HashSet::new();
    for (i, r) in fan.rays.iter().enumerate() {
        if primitive(r).map_or(true, |p| &p != r) {
            is_primitive_ok = false;
            diagnostics.push(format!("ray {i} {r} is not primitive"));
        }
        if !seen.insert(r) {
            is_primitive_ok = false;
            diagnostics.push(format!("ray {i} {r} is repeated"));
        }
    }

    let mut is_regular = true;
    let mut dets = Vec::with_capacity(fan.cone_count());
    for (k, cone) in fan.max_cones.iter().enumerate() {
        let distinct = cone.iter().collect::<HashSet<_>>().len() == fan.dim;
        let det = if distinct { fan.cone_matrix(k).determinant() } else { BigInt::zero() };
        if !det.abs().is_one() {
            is_regular = false;
            diagnostics.push(format!("cone {k} {cone:?} has determinant {det}"));
        }
        dets.push(det);
    }

    let mut is_complete = !fan.max_cones.is_empty();
    let degenerate = dets.iter().any(Zero::is_zero);
    if degenerate {
        is_complete = false;
        diagnostics.push("some maximal cone is not full-dimensional".into());
    } else {
        for (ridge, owners) in ridge_map(&fan.max_cones) {
            if owners.len() != 2 {
                is_complete = false;
                diagnostics.push(format!("ridge {ridge:?} lies in {} maximal cones", owners.len()));
                continue;
            }
            if !opposite_sides(fan, &ridge, owners[0], owners[1]) {
                is_complete = false;
                diagnostics.push(format!(
                    "cones {} and {} overlap across ridge {ridge:?}",
                    owners[0], owners[1]
                ));
            }
        }
        if is_complete {
            let failures = probe_completeness(fan, DEFAULT_PROBES, PROBE_SEED);
            if !failures.is_empty() {
                is_complete = false;
                for (d, hits) in failures.iter().take(3) {
                    diagnostics.push(format!("direction {d} lies in {hits} maximal cones"));
                }
            }
        }
    }

    let mut fano_ok = !degenerate;
    if !degenerate {
        for k in 0..fan.cone_count() {
            let w = match dual_vertex(fan, k) {
                Ok(w) => w,
                Err(_) => {
                    fano_ok = false;
                    continue;
                }
            };
            for (i, r) in fan.rays.iter().enumerate() {
                if fan.max_cones[k].contains(&i) {
                    continue;
                }
                if w.dot_lattice(r) >= BigRational::one() {
                    fano_ok = false;
                    diagnostics.push(format!(
                        "ray {i} {r} is not strictly below the facet of cone {k}"
                    ));
                }
            }
        }
    }
    let is_fano = fano_ok && is_primitive_ok && is_complete && is_regular;

    ValidationReport { is_primitive_ok, is_complete, is_regular, is_fano, diagnostics }
}

fn opposite_sides(fan: &Fan, ridge: &[usize], a: usize, b: usize) -> bool {
    let rows: Vec<LatticeVector> = ridge.iter().map(|&i| fan.rays[i].clone()).collect();
    let matrix = if rows.is_empty() {
        IntMatrix::zeros(0, fan.dim)
    } else {
        IntMatrix::from_rows(&rows)
    };
    let kernel = rational_kernel(&matrix);
    if kernel.len() != 1 {
        return false;
    }
    let normal = &kernel[0];
    let apex = |cone: usize| {
        let i = *fan.max_cones[cone].iter().find(|i| !ridge.contains(i)).unwrap();
        normal.dot_lattice(&fan.rays[i])
    };
    let (sa, sb) = (apex(a), apex(b));
    !sa.is_zero() && !sb.is_zero() && sa.is_positive() != sb.is_positive()
}

/// Indices of maximal cones whose interior contains direction `d`, or `None`
/// if `d` lies on the boundary of some cone.
pub fn locate_direction(fan: &Fan, d: &[i64]) -> Option<Vec<usize>> {
    let locator = ConeLocator::new(fan).expect("full-dimensional cones");
    locator.locate(d)
}

/// Random seeded directions that do not lie in exactly one maximal cone.
pub fn probe_completeness(fan: &Fan, probes: usize, seed: u64) -> Vec<(LatticeVector, usize)> {
    let Some(locator) = ConeLocator::new(fan) else {
        return vec![(LatticeVector::zero(fan.dim), 0)];
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut done = 0;
    while done < probes {
        let d: Vec<i64> = (0..fan.dim).map(|_| rng.gen_range(-1000..=1000)).collect();
        let Some(hits) = locator.locate(&d) else { continue };
        done += 1;
        if hits.len() != 1 {
            failures.push((LatticeVector::from_i64(&d), hits.len()));
        }
    }
    failures
}

/// Exact point location via adjugate matrices: `d` is inside cone `k` iff
/// `adj_k · d` has the sign of `det_k` in every coordinate.
struct ConeLocator {
    dim: usize,
    adjugates: Vec<(Vec<i128>, i128)>,
}

impl ConeLocator {
    fn new(fan: &Fan) -> Option<Self> {
        let mut adjugates = Vec::with_capacity(fan.cone_count());
        for k in 0..fan.cone_count() {
            let m = fan.cone_matrix(k);
            let det = m.determinant();
            let inv = inverse_rational(&m)?;
            let det_q = BigRational::from_integer(det.clone());
            let adj: Option<Vec<i128>> = inv
                .iter()
                .flatten()
                .map(|x| (x * &det_q).to_integer().to_i128())
                .collect();
            adjugates.push((adj?, det.to_i128()?));
        }
        Some(ConeLocator { dim: fan.dim, adjugates })
    }

    fn locate(&self, d: &[i64]) -> Option<Vec<usize>> {
        let mut hits = Vec::new();
        for (k, (adj, det)) in self.adjugates.iter().enumerate() {
            let mut inside = true;
            for i in 0..self.dim {
                let s: i128 = (0..self.dim).map(|j| adj[i * self.dim + j] * d[j] as i128).sum();
                if s == 0 {
                    return None;
                }
                if (s > 0) != (*det > 0) {
                    inside = false;
                }
            }
            if inside {
                hits.push(k);
            }
        }
        Some(hits)
    }
}

/// The vertex `w` of the dual polytope with `<w, e> = 1` on every generator of
/// the cone.
pub fn dual_vertex(fan: &Fan, cone: usize) -> Result<RationalVector> {
    if cone >= fan.cone_count() {
        return Err(Error::IndexOutOfRange(cone));
    }
    let rows: Vec<LatticeVector> = fan.max_cones[cone].iter().map(|&i| fan.rays[i].clone()).collect();
    let ones = vec![BigRational::one(); fan.dim];
    solve_rational(&IntMatrix::from_rows(&rows), &ones).ok_or(Error::IrregularCone)
}

/// Machine-integer view of a fan for the search-heavy code paths.
#[derive(Debug, Clone)]
pub(crate) struct CompactFan {
    pub dim: usize,
    pub rays: Vec<Vec<i64>>,
    pub index: HashMap<Vec<i64>, usize>,
    pub cones: Vec<Vec<usize>>,
    pub cone_set: HashSet<Vec<usize>>,
    pub degree: Vec<usize>,
}

impl CompactFan {
    fn new(fan: &Fan) -> Result<Self> {
        let rays: Vec<Vec<i64>> = fan.rays.iter().map(LatticeVector::to_i64).collect::<Result<_>>()?;
        let index = rays.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        Ok(CompactFan {
            dim: fan.dim,
            rays,
            index,
            cones: fan.max_cones.clone(),
            cone_set: fan.max_cones.iter().cloned().collect(),
            degree: fan.ray_degrees(),
        })
    }
}
