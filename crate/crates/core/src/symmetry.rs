//! The automorphism group `W(X)` of a fan and the "symmetric" predicate.
//!
//! A lattice automorphism of a complete regular fan is fixed by the images of
//! the generators of one maximal cone, which form a basis of `N`. The search
//! therefore enumerates (target cone, generator ordering) pairs and checks the
//! resulting matrix against the whole ray and cone structure.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fan::{CompactFan, Fan};
use crate::lattice::{
    fixed_subspace, inverse_rational, primitive, IntMatrix, LatticeVector, RationalVector,
    UnimodularMap,
};

pub const DEFAULT_CLOSURE_BOUND: usize = 1_000_000;

/// A finite group of unimodular maps acting on `N`.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    elements: Vec<UnimodularMap>,
    generators_used: Option<Vec<UnimodularMap>>,
}

impl SymmetryGroup {
    pub fn elements(&self) -> &[UnimodularMap] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators_used(&self) -> Option<&[UnimodularMap]> {
        self.generators_used.as_deref()
    }

    /// A generating set: the recorded generators, or every element.
    pub fn generating_set(&self) -> &[UnimodularMap] {
        self.generators_used.as_deref().unwrap_or(&self.elements)
    }

    pub fn contains(&self, g: &UnimodularMap) -> bool {
        self.elements.contains(g)
    }

    /// Orbits of the contragredient action on a finite point set that the
    /// group preserves. Returns point indices grouped by orbit.
    pub fn dual_orbits(&self, points: &[LatticeVector]) -> Vec<Vec<usize>> {
        let index: HashMap<&LatticeVector, usize> =
            points.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let duals: Vec<UnimodularMap> = self.generating_set().iter().map(UnimodularMap::dual).collect();
        let mut orbit_of = vec![usize::MAX; points.len()];
        let mut orbits = Vec::new();
        for start in 0..points.len() {
            if orbit_of[start] != usize::MAX {
                continue;
            }
            let id = orbits.len();
            let mut orbit = vec![start];
            orbit_of[start] = id;
            let mut k = 0;
            while k < orbit.len() {
                let p = &points[orbit[k]];
                for g in &duals {
                    let q = g.apply(p);
                    let j = *index.get(&q).expect("point set is invariant");
                    if orbit_of[j] == usize::MAX {
                        orbit_of[j] = id;
                        orbit.push(j);
                    }
                }
                k += 1;
            }
            orbit.sort_unstable();
            orbits.push(orbit);
        }
        orbits
    }
}

type Mat = Vec<i64>;

fn mat_mul(a: &[i64], b: &[i64], n: usize) -> Mat {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == 0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += x * b[k * n + j];
            }
        }
    }
    c
}

fn mat_vec(a: &[i64], v: &[i64], n: usize) -> Vec<i64> {
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

fn to_map(m: &[i64], n: usize) -> UnimodularMap {
    let rows: Vec<Vec<i64>> = m.chunks(n).map(<[i64]>::to_vec).collect();
    UnimodularMap::new_unchecked(IntMatrix::from_i64_rows(&rows))
}

/// Matrices `γ` with `γ(src) = dst` as fans.
fn isomorphisms(src: &CompactFan, dst: &CompactFan, first_only: bool) -> Vec<Mat> {
    let n = src.dim;
    if dst.dim != n || src.rays.len() != dst.rays.len() || src.cones.len() != dst.cones.len() {
        return Vec::new();
    }
    let mut src_deg = src.degree.clone();
    src_deg.sort_unstable();
    let mut dst_deg = dst.degree.clone();
    dst_deg.sort_unstable();
    if src_deg != dst_deg {
        return Vec::new();
    }

    // adjugate of the base cone matrix: B^{-1} = adj / det
    let base = &src.cones[0];
    let b_rows: Vec<Vec<i64>> =
        (0..n).map(|i| base.iter().map(|&r| src.rays[r][i]).collect()).collect();
    let b = IntMatrix::from_i64_rows(&b_rows);
    let det = b.determinant();
    let Some(inv) = inverse_rational(&b) else { return Vec::new() };
    let det_q = num_rational::BigRational::from_integer(det.clone());
    let adj: Vec<i128> = inv
        .iter()
        .flatten()
        .map(|x| (x * &det_q).to_integer().to_i128().expect("small adjugate"))
        .collect();
    let det = det.to_i128().expect("small determinant");

    let search = |target: &Vec<usize>| -> Vec<Mat> {
        let mut found = Vec::new();
        let mut chosen: Vec<usize> = Vec::with_capacity(n);
        let mut used = vec![false; n];
        assign(src, dst, base, target, &adj, det, &mut chosen, &mut used, &mut found, first_only);
        found
    };

    let mut all: Vec<Mat> = if first_only {
        dst.cones.iter().find_map(|t| search(t).into_iter().next()).into_iter().collect()
    } else {
        dst.cones.par_iter().flat_map_iter(search).collect()
    };
    all.sort();
    all.dedup();
    all
}

#[allow(clippy::too_many_arguments)]
fn assign(
    src: &CompactFan,
    dst: &CompactFan,
    base: &[usize],
    target: &[usize],
    adj: &[i128],
    det: i128,
    chosen: &mut Vec<usize>,
    used: &mut [bool],
    found: &mut Vec<Mat>,
    first_only: bool,
) {
    let n = src.dim;
    if first_only && !found.is_empty() {
        return;
    }
    if chosen.len() == n {
        if let Some(g) = candidate(src, dst, adj, det, chosen) {
            found.push(g);
        }
        return;
    }
    let pos = chosen.len();
    for slot in 0..n {
        let r = target[slot];
        if used[slot] || dst.degree[r] != src.degree[base[pos]] {
            continue;
        }
        used[slot] = true;
        chosen.push(r);
        assign(src, dst, base, target, adj, det, chosen, used, found, first_only);
        chosen.pop();
        used[slot] = false;
    }
}

/// `γ = T · B^{-1}` where `T` has the chosen target rays as columns; accepted
/// if integral, unimodular and a bijection of rays and maximal cones.
fn candidate(src: &CompactFan, dst: &CompactFan, adj: &[i128], det: i128, chosen: &[usize]) -> Option<Mat> {
    let n = src.dim;
    let mut g = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            let s: i128 = (0..n).map(|k| dst.rays[chosen[k]][i] as i128 * adj[k * n + j]).sum();
            if s % det != 0 {
                return None;
            }
            g[i * n + j] = i64::try_from(s / det).ok()?;
        }
    }
    let perm = ray_permutation(src, dst, &g)?;
    for cone in &src.cones {
        let mut image: Vec<usize> = cone.iter().map(|&r| perm[r]).collect();
        image.sort_unstable();
        if !dst.cone_set.contains(&image) {
            return None;
        }
    }
    let rows: Vec<Vec<i64>> = g.chunks(n).map(<[i64]>::to_vec).collect();
    if !IntMatrix::from_i64_rows(&rows).determinant().abs().to_i64().is_some_and(|d| d == 1) {
        return None;
    }
    Some(g)
}

fn ray_permutation(src: &CompactFan, dst: &CompactFan, g: &[i64]) -> Option<Vec<usize>> {
    let n = src.dim;
    let mut perm = Vec::with_capacity(src.rays.len());
    let mut hit = vec![false; dst.rays.len()];
    for r in &src.rays {
        let j = *dst.index.get(&mat_vec(g, r, n))?;
        if std::mem::replace(&mut hit[j], true) {
            return None;
        }
        perm.push(j);
    }
    Some(perm)
}

/// All unimodular maps preserving the ray set and the maximal cones.
pub fn fan_automorphisms(fan: &Fan) -> SymmetryGroup {
    let compact = fan.compact().expect("fan coordinates fit in 64 bits");
    let n = fan.dim();
    let mats = isomorphisms(&compact, &compact, false);
    let elements: Vec<UnimodularMap> = mats.iter().map(|m| to_map(m, n)).collect();
    let closure = group_closure(&elements, DEFAULT_CLOSURE_BOUND).expect("automorphisms are unimodular");
    let found: HashSet<&UnimodularMap> = elements.iter().collect();
    assert!(
        closure.order() == elements.len() && closure.elements.iter().all(|g| found.contains(g)),
        "automorphism search returned a set that is not a group"
    );
    SymmetryGroup { elements, generators_used: closure.generators_used }
}

/// A unimodular map sending `a` onto `b`, if one exists.
pub fn fan_isomorphism(a: &Fan, b: &Fan) -> Result<Option<UnimodularMap>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let (ca, cb) = (a.compact()?, b.compact()?);
    Ok(isomorphisms(&ca, &cb, true).first().map(|m| to_map(m, a.dim())))
}

/// Smallest group containing `maps`, generated by right multiplication.
pub fn group_closure(maps: &[UnimodularMap], bound: usize) -> Result<SymmetryGroup> {
    let Some(first) = maps.first() else {
        return Err(Error::InvalidParameter("group_closure needs at least one map".into()));
    };
    let n = first.dim();
    let mut small = Vec::with_capacity(maps.len());
    for g in maps {
        if g.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
        }
        if !g.matrix().determinant().abs().to_i64().is_some_and(|d| d == 1) {
            return Err(Error::NotUnimodular);
        }
        small.push(g.matrix().to_i64()?);
    }

    let identity = IntMatrix::identity(n).to_i64()?;
    let mut elements: Vec<Mat> = vec![identity.clone()];
    let mut set: HashSet<Mat> = HashSet::from([identity]);
    let mut gens: Vec<Mat> = Vec::new();
    for g in small {
        if set.contains(&g) {
            continue;
        }
        gens.push(g);
        let mut k = 0;
        while k < elements.len() {
            for h in &gens {
                let p = mat_mul(&elements[k], h, n);
                if set.insert(p.clone()) {
                    elements.push(p);
                    if elements.len() > bound {
                        return Err(Error::ClosureBoundExceeded(bound));
                    }
                }
            }
            k += 1;
        }
    }
    elements.sort();
    Ok(SymmetryGroup {
        elements: elements.iter().map(|m| to_map(m, n)).collect(),
        generators_used: Some(gens.iter().map(|m| to_map(m, n)).collect()),
    })
}

/// Whether the group fixes no nonzero character of `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetryVerdict {
    pub is_symmetric: bool,
    /// Basis of the invariant characters `M^W ⊗ Q`, empty iff symmetric.
    #[serde(serialize_with = "crate::cli::ser::rational_vectors")]
    pub fixed_space_basis: Vec<RationalVector>,
    pub group_order: usize,
}

pub fn is_symmetric(fan: &Fan, group: &SymmetryGroup) -> SymmetryVerdict {
    assert!(group.order() > 0);
    let maps = group.generating_set();
    assert!(maps.iter().all(|g| g.dim() == fan.dim()), "group acts on a different lattice");
    let duals: Vec<UnimodularMap> = maps.iter().map(UnimodularMap::dual).collect();
    let fixed_m = fixed_subspace(&duals);
    let fixed_n = fixed_subspace(maps);
    assert_eq!(fixed_m.len(), fixed_n.len(), "dual representations have equal invariants");
    SymmetryVerdict {
        is_symmetric: fixed_m.is_empty(),
        fixed_space_basis: fixed_m.iter().map(normalize).collect(),
        group_order: group.order(),
    }
}

/// Primitive integer representative with positive leading coordinate.
fn normalize(v: &RationalVector) -> RationalVector {
    let denom = v
        .coords()
        .iter()
        .fold(BigInt::from(1), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
    let ints = LatticeVector::new(
        v.coords().iter().map(|c| (c * num_rational::BigRational::from_integer(denom.clone())).to_integer()).collect(),
    );
    let mut p = primitive(&ints).expect("basis vectors are nonzero");
    if p.coords().iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative()) {
        p = p.neg();
    }
    p.to_rational()
}

/// True iff every map permutes the rays and the maximal cones of `fan`.
pub fn verify_subgroup(fan: &Fan, maps: &[UnimodularMap]) -> Result<bool> {
    let compact = fan.compact()?;
    let n = fan.dim();
    for g in maps {
        if g.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
        }
        let m = g.matrix().to_i64()?;
        let Some(perm) = ray_permutation(&compact, &compact, &m) else {
            return Ok(false);
        };
        for cone in &compact.cones {
            let mut image: Vec<usize> = cone.iter().map(|&r| perm[r]).collect();
            image.sort_unstable();
            if !compact.cone_set.contains(&image) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fan::build_fan;

    fn fan(dim: usize, rays: &[&[i64]]) -> Fan {
        build_fan(dim, rays.iter().map(|r| LatticeVector::from_i64(r)).collect(), None).unwrap()
    }

    fn map(rows: &[&[i64]]) -> UnimodularMap {
        UnimodularMap::from_i64_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn automorphism_orders() {
        let p1 = fan(1, &[&[1], &[-1]]);
        assert_eq!(fan_automorphisms(&p1).order(), 2);
        let p2 = fan(2, &[&[1, 0], &[0, 1], &[-1, -1]]);
        assert_eq!(fan_automorphisms(&p2).order(), 6);
        let v1 = fan(2, &[&[1, 0], &[-1, 0], &[0, 1], &[0, -1], &[1, 1], &[-1, -1]]);
        assert_eq!(fan_automorphisms(&v1).order(), 12);
    }

    #[test]
    fn closure_examples() {
        let rot = map(&[&[0, -1], &[1, 0]]);
        assert_eq!(group_closure(&[rot], DEFAULT_CLOSURE_BOUND).unwrap().order(), 4);
        let id = UnimodularMap::identity(3);
        assert_eq!(group_closure(&[id], DEFAULT_CLOSURE_BOUND).unwrap().order(), 1);
        let shear = map(&[&[1, 1], &[0, 1]]);
        assert_eq!(group_closure(&[shear], 50).unwrap_err(), Error::ClosureBoundExceeded(50));
    }

    #[test]
    fn closure_rejects_non_unimodular() {
        let m = UnimodularMap::new_unchecked(IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]));
        assert_eq!(group_closure(&[m], 10).unwrap_err(), Error::NotUnimodular);
    }

    #[test]
    fn verdicts() {
        let p2 = fan(2, &[&[1, 0], &[0, 1], &[-1, -1]]);
        assert!(is_symmetric(&p2, &fan_automorphisms(&p2)).is_symmetric);

        let v1 = fan(2, &[&[1, 0], &[-1, 0], &[0, 1], &[0, -1], &[1, 1], &[-1, -1]]);
        assert!(is_symmetric(&v1, &fan_automorphisms(&v1)).is_symmetric);

        let bl1 = fan(2, &[&[1, 0], &[0, 1], &[1, 1], &[-1, -1]]);
        let w = fan_automorphisms(&bl1);
        assert_eq!(w.order(), 2);
        let v = is_symmetric(&bl1, &w);
        assert!(!v.is_symmetric);
        assert_eq!(v.fixed_space_basis, vec![LatticeVector::from_i64(&[1, 1]).to_rational()]);
    }

    #[test]
    fn subgroup_checks() {
        let p2 = fan(2, &[&[1, 0], &[0, 1], &[-1, -1]]);
        let reflect = map(&[&[1, 0], &[0, -1]]);
        assert!(!verify_subgroup(&p2, &[reflect]).unwrap());
        let swap = map(&[&[0, 1], &[1, 0]]);
        assert!(verify_subgroup(&p2, &[swap]).unwrap());
        let id3 = UnimodularMap::identity(3);
        assert!(matches!(verify_subgroup(&p2, &[id3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn relabelled_fans_are_isomorphic() {
        let p2 = fan(2, &[&[1, 0], &[0, 1], &[-1, -1]]);
        let p2b = fan(2, &[&[0, 1], &[1, 0], &[-1, -1]]);
        let skew = fan(2, &[&[1, 0], &[1, 1], &[-2, -1]]);
        assert!(fan_isomorphism(&p2, &p2b).unwrap().is_some());
        let g = fan_isomorphism(&p2, &skew).unwrap().unwrap();
        for r in p2.rays() {
            assert!(skew.rays().contains(&g.apply(r)));
        }
        let p1p1 = fan(2, &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]);
        assert!(fan_isomorphism(&p2, &p1p1).unwrap().is_none());
    }

    #[test]
    fn dual_orbits_of_p2_lattice_points() {
        let p2 = fan(2, &[&[1, 0], &[0, 1], &[-1, -1]]);
        let delta = crate::polytope::polytope_from_fan(&p2).unwrap();
        let orbits = fan_automorphisms(&p2).dual_orbits(delta.lattice_points());
        let mut sizes: Vec<usize> = orbits.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        // origin, three vertices, six edge points
        assert_eq!(sizes, vec![1, 3, 6]);
    }
}
