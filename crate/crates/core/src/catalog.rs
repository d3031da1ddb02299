//! Generators for the V, S, X and W families of symmetric toric Fano
//! manifolds, named small fans, and an exhaustive enumeration of smooth toric
//! Fano surfaces.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fan::{build_fan, validate_smooth_fano, Fan};
use crate::lattice::{LatticeVector, UnimodularMap};
use crate::symmetry::fan_isomorphism;

/// One member of a family, with parameters checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FamilySpec {
    /// `V_k`, `n = 2k`, `k >= 1`.
    V { k: usize },
    /// `S_{m,k}`, `n = 2m + 1`, `1 <= k <= m`.
    S { m: usize, k: usize },
    /// `X_{m,k}`, `n = 2m + 2`, `0 <= k <= m`.
    X { m: usize, k: usize },
    /// `W_m`, `n = 2m`, `m >= 1`.
    W { m: usize },
}

impl FamilySpec {
    pub fn new(tag: &str, params: &[usize]) -> Result<Self> {
        let spec = match (tag.to_ascii_uppercase().as_str(), params) {
            ("V", &[k]) => FamilySpec::V { k },
            ("S", &[m, k]) => FamilySpec::S { m, k },
            ("X", &[m, k]) => FamilySpec::X { m, k },
            ("W", &[m]) => FamilySpec::W { m },
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown family {tag} with {} parameters",
                    params.len()
                )))
            }
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            FamilySpec::V { k } => k >= 1,
            FamilySpec::S { m, k } => 1 <= k && k <= m,
            FamilySpec::X { m, k } => k <= m && m >= 1,
            FamilySpec::W { m } => m >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("parameters out of range for {self}")))
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            FamilySpec::V { k } => 2 * k,
            FamilySpec::S { m, .. } => 2 * m + 1,
            FamilySpec::X { m, .. } => 2 * m + 2,
            FamilySpec::W { m } => 2 * m,
        }
    }

    /// Every instance within the bounds `V: k <= 3`, `S: m <= 3`,
    /// `X: m <= 2`, `W: m <= 3`.
    pub fn desk_scale() -> Vec<FamilySpec> {
        let mut out: Vec<FamilySpec> = (1..=3).map(|k| FamilySpec::V { k }).collect();
        for m in 1..=3 {
            out.extend((1..=m).map(|k| FamilySpec::S { m, k }));
        }
        for m in 1..=2 {
            out.extend((0..=m).map(|k| FamilySpec::X { m, k }));
        }
        out.extend((1..=3).map(|m| FamilySpec::W { m }));
        out
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FamilySpec::V { k } => write!(f, "V_{k}"),
            FamilySpec::S { m, k } => write!(f, "S_{{{m},{k}}}"),
            FamilySpec::X { m, k } => write!(f, "X_{{{m},{k}}}"),
            FamilySpec::W { m } => write!(f, "W_{m}"),
        }
    }
}

fn basis(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

fn neg(v: &[i64]) -> Vec<i64> {
    v.iter().map(|x| -x).collect()
}

/// `-(e_lo + ... + e_hi)` (0-based, inclusive) plus `shift` times `e_extra`.
fn neg_block(n: usize, lo: usize, hi: usize, extra: Option<(usize, i64)>) -> Vec<i64> {
    let mut v = vec![0; n];
    for x in &mut v[lo..=hi] {
        *x = -1;
    }
    if let Some((i, c)) = extra {
        v[i] += c;
    }
    v
}

/// Ray generators in the order they are usually listed for each family.
pub fn family_rays(spec: FamilySpec) -> Result<Vec<Vec<i64>>> {
    spec.check()?;
    let n = spec.dim();
    let mut rays = Vec::new();
    match spec {
        FamilySpec::V { .. } => {
            for i in 0..n {
                rays.push(basis(n, i));
                rays.push(neg(&basis(n, i)));
            }
            rays.push(vec![1; n]);
            rays.push(vec![-1; n]);
        }
        FamilySpec::S { m, k } => {
            let k = k as i64;
            rays.extend((0..2 * m).map(|i| basis(n, i)));
            rays.push(basis(n, 2 * m));
            rays.push(neg(&basis(n, 2 * m)));
            // -(e_1 + ... + e_m + k e_{2m+1}), -(e_{m+1} + ... + e_{2m} - k e_{2m+1})
            rays.push(neg_block(n, 0, m - 1, Some((2 * m, -k))));
            rays.push(neg_block(n, m, 2 * m - 1, Some((2 * m, k))));
        }
        FamilySpec::X { m, k } => {
            let k = k as i64;
            rays.extend((0..2 * m).map(|i| basis(n, i)));
            let mut diag = vec![0; n];
            diag[2 * m] = 1;
            diag[2 * m + 1] = 1;
            for v in [basis(n, 2 * m), basis(n, 2 * m + 1), diag] {
                rays.push(neg(&v));
                rays.push(v);
            }
            // -(e_1 + ... + e_m - k e_{2m+1}), -(e_{m+1} + ... + e_{2m} + k e_{2m+1})
            rays.push(neg_block(n, 0, m - 1, Some((2 * m, k))));
            rays.push(neg_block(n, m, 2 * m - 1, Some((2 * m, -k))));
        }
        FamilySpec::W { m } => {
            rays.extend((0..n).map(|i| basis(n, i)));
            rays.push(neg_block(n, 0, m - 1, None));
            rays.push(neg_block(n, m, n - 1, None));
            rays.push(neg_block(n, 0, n - 1, None));
            for i in 0..m {
                let mut v = basis(n, i);
                v[i + m] = 1;
                rays.push(v);
            }
        }
    }
    Ok(rays)
}

pub fn family_fan(spec: FamilySpec) -> Result<Fan> {
    let rays = family_rays(spec)?;
    build_fan(spec.dim(), rays.iter().map(|r| LatticeVector::from_i64(r)).collect(), None)
}

/// The explicit automorphisms whose common fixed space is zero: `-id` for
/// `V_k`, and the cyclic map `α` (order `m + 1`) with the involution `β`
/// for the other families.
pub fn family_witnesses(spec: FamilySpec) -> Result<Vec<UnimodularMap>> {
    spec.check()?;
    let n = spec.dim();
    let from_images = |images: Vec<Vec<i64>>| {
        UnimodularMap::from_images(&images.iter().map(|v| LatticeVector::from_i64(v)).collect::<Vec<_>>())
    };
    let (m, shift, fixed_tail) = match spec {
        FamilySpec::V { .. } => {
            return Ok(vec![from_images((0..n).map(|i| neg(&basis(n, i))).collect())?]);
        }
        // coefficient of e_{2m+1} in α(e_m); α(e_{2m}) carries the opposite sign
        FamilySpec::S { m, k } => (m, Some(-(k as i64)), 1),
        FamilySpec::X { m, k } => (m, Some(k as i64), 2),
        FamilySpec::W { m } => (m, None, 0),
    };
    let mut alpha = vec![Vec::new(); n];
    for i in 0..m - 1 {
        alpha[i] = basis(n, i + 1);
        alpha[i + m] = basis(n, i + m + 1);
    }
    alpha[m - 1] = neg_block(n, 0, m - 1, shift.map(|s| (2 * m, s)));
    alpha[2 * m - 1] = neg_block(n, m, 2 * m - 1, shift.map(|s| (2 * m, -s)));
    let mut beta = vec![Vec::new(); n];
    for i in 0..m {
        beta[i] = basis(n, i + m);
        beta[i + m] = basis(n, i);
    }
    for j in 2 * m..2 * m + fixed_tail {
        alpha[j] = basis(n, j);
        beta[j] = neg(&basis(n, j));
    }
    Ok(vec![from_images(alpha)?, from_images(beta)?])
}

pub fn lattice_equivalent(a: &Fan, b: &Fan) -> Result<bool> {
    Ok(fan_isomorphism(a, b)?.is_some())
}

/// Small named fans used throughout tests and the CLI.
pub fn named_fan(name: &str) -> Option<Fan> {
    let rays: &[&[i64]] = match name {
        "P1" => &[&[1], &[-1]],
        "P2" => &[&[1, 0], &[0, 1], &[-1, -1]],
        "P1xP1" => &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]],
        "Bl1P2" => &[&[1, 0], &[0, 1], &[1, 1], &[-1, -1]],
        "Bl2P2" => &[&[1, 0], &[0, 1], &[1, 1], &[-1, -1], &[0, -1]],
        "Bl3P2" => &[&[1, 0], &[0, 1], &[1, 1], &[-1, -1], &[0, -1], &[-1, 0]],
        "P3" => &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[-1, -1, -1]],
        _ => return None,
    };
    let dim = rays[0].len();
    build_fan(dim, rays.iter().map(|r| LatticeVector::from_i64(r)).collect(), None).ok()
}

/// Name of the del Pezzo class a smooth toric Fano surface belongs to.
pub fn surface_name(fan: &Fan) -> Option<&'static str> {
    ["P2", "P1xP1", "Bl1P2", "Bl2P2", "Bl3P2"].into_iter().find(|name| {
        named_fan(name).is_some_and(|f| lattice_equivalent(fan, &f).unwrap_or(false))
    })
}

/// Smooth toric Fano surfaces up to lattice equivalence, over primitive rays
/// with coordinates in `[-3, 3]`.
pub fn enumerate_smooth_fano_surfaces() -> Vec<Fan> {
    enumerate_smooth_fano_surfaces_within(3)
}

/// A complete regular 2-d fan is a counter-clockwise cycle of rays in which
/// consecutive rays form a lattice basis (`det = 1`) and the winding is one
/// full turn. The search walks such cycles from their lexicographically
/// smallest ray, pruning with the local Fano condition at every new ray.
pub fn enumerate_smooth_fano_surfaces_within(bound: i64) -> Vec<Fan> {
    let mut prims: Vec<[i64; 2]> = Vec::new();
    for x in -bound..=bound {
        for y in -bound..=bound {
            if num_integer::gcd(x, y) == 1 {
                prims.push([x, y]);
            }
        }
    }
    prims.sort();

    let mut cycles: Vec<Vec<[i64; 2]>> = Vec::new();
    for (s, &start) in prims.iter().enumerate() {
        let mut path = vec![start];
        extend_cycle(&prims[s + 1..], start, &mut path, 0.0, &mut cycles);
    }

    let mut classes: Vec<Fan> = Vec::new();
    for cycle in cycles {
        let len = cycle.len();
        let rays = cycle.iter().map(|r| LatticeVector::from_i64(r)).collect();
        let cones = (0..len).map(|i| vec![i, (i + 1) % len]).collect();
        let Ok(fan) = build_fan(2, rays, Some(cones)) else { continue };
        if !validate_smooth_fano(&fan).is_fano {
            continue;
        }
        if !classes.iter().any(|c| lattice_equivalent(c, &fan).unwrap_or(false)) {
            classes.push(fan);
        }
    }
    classes.sort_by_key(|f| (f.ray_count(), surface_name(f)));
    classes
}

fn det2(a: [i64; 2], b: [i64; 2]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn turn(a: [i64; 2], b: [i64; 2]) -> f64 {
    (det2(a, b) as f64).atan2((a[0] * b[0] + a[1] * b[1]) as f64)
}

/// Local strict convexity: `c` lies strictly below the line through `a` and
/// `b`, where `det(a, b) = 1`.
fn below_edge(a: [i64; 2], b: [i64; 2], c: [i64; 2]) -> bool {
    // w with <w,a> = <w,b> = 1 (det(a, b) = 1): w = (b_y - a_y, a_x - b_x)
    let w = [b[1] - a[1], a[0] - b[0]];
    w[0] * c[0] + w[1] * c[1] < 1
}

fn extend_cycle(
    candidates: &[[i64; 2]],
    start: [i64; 2],
    path: &mut Vec<[i64; 2]>,
    winding: f64,
    out: &mut Vec<Vec<[i64; 2]>>,
) {
    const FULL_TURN: f64 = std::f64::consts::TAU;
    let last = *path.last().unwrap();
    let len = path.len();
    if len >= 3 && det2(last, start) == 1 {
        let total = winding + turn(last, start);
        if (total - FULL_TURN).abs() < 1e-9
            && below_edge(path[len - 2], last, start)
            && below_edge(last, start, path[1])
        {
            out.push(path.clone());
        }
    }
    for &r in candidates {
        if det2(last, r) != 1 || path.contains(&r) {
            continue;
        }
        let w = winding + turn(last, r);
        if w >= FULL_TURN - 1e-9 {
            continue;
        }
        if len >= 2 && !below_edge(path[len - 2], last, r) {
            continue;
        }
        path.push(r);
        extend_cycle(candidates, start, path, w, out);
        path.pop();
    }
}
