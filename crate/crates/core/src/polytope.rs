//! The anticanonical polytope `Δ ⊂ M_R` of a smooth toric Fano fan and its
//! lattice data.

use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fan::{dual_vertex, validate_smooth_fano, Fan};
use crate::lattice::{IntMatrix, LatticeVector, RationalVector};

/// `Δ = { y : <y, e> <= 1 for every ray e }` together with its vertices,
/// lattice points and facet-interior lattice points.
#[derive(Debug, Clone)]
pub struct FanoPolytope {
    dim: usize,
    facet_normals: Vec<LatticeVector>,
    max_cones: Vec<Vec<usize>>,
    vertices: Vec<LatticeVector>,
    /// `cone_vertex[k]` indexes the vertex dual to maximal cone `k`.
    cone_vertex: Vec<usize>,
    lattice_points: Vec<LatticeVector>,
    facet_interior_points: Vec<LatticeVector>,
}

pub fn polytope_from_fan(fan: &Fan) -> Result<FanoPolytope> {
    let report = validate_smooth_fano(fan);
    if !report.is_fano {
        return Err(Error::NotSmoothFano(report.diagnostics.join("; ")));
    }
    let mut dual = Vec::with_capacity(fan.cone_count());
    for k in 0..fan.cone_count() {
        let w = dual_vertex(fan, k)?.to_lattice().ok_or(Error::IrregularCone)?;
        dual.push(w);
    }
    let mut vertices = dual.clone();
    vertices.sort();
    vertices.dedup();
    let cone_vertex = dual
        .iter()
        .map(|w| vertices.binary_search(w).expect("vertex present"))
        .collect();

    let facet_normals = fan.rays().to_vec();
    let lattice_points = enumerate_lattice_points(&facet_normals, &vertices)?;
    let facet_interior_points = lattice_points
        .iter()
        .filter(|v| saturation_count(v, &facet_normals) == 1)
        .cloned()
        .collect();

    Ok(FanoPolytope {
        dim: fan.dim(),
        facet_normals,
        max_cones: fan.max_cones().to_vec(),
        vertices,
        cone_vertex,
        lattice_points,
        facet_interior_points,
    })
}

fn saturation_count(v: &LatticeVector, normals: &[LatticeVector]) -> usize {
    let one = BigInt::from(1);
    normals.iter().filter(|e| v.dot(e) == one).count()
}

/// Integer points of `{ y : <y, e> <= 1 }` found by scanning the vertex
/// bounding box.
pub fn enumerate_lattice_points(
    normals: &[LatticeVector],
    vertices: &[LatticeVector],
) -> Result<Vec<LatticeVector>> {
    let dim = normals[0].dim();
    let normals: Vec<Vec<i64>> = normals.iter().map(LatticeVector::to_i64).collect::<Result<_>>()?;
    let verts: Vec<Vec<i64>> = vertices.iter().map(LatticeVector::to_i64).collect::<Result<_>>()?;
    let lo: Vec<i64> = (0..dim).map(|i| verts.iter().map(|v| v[i]).min().unwrap()).collect();
    let hi: Vec<i64> = (0..dim).map(|i| verts.iter().map(|v| v[i]).max().unwrap()).collect();

    let mut points = Vec::new();
    let mut cur = lo.clone();
    loop {
        if normals
            .iter()
            .all(|e| e.iter().zip(&cur).map(|(a, b)| a * b).sum::<i64>() <= 1)
        {
            points.push(LatticeVector::from_i64(&cur));
        }
        // odometer step, last coordinate fastest
        let mut i = dim;
        loop {
            if i == 0 {
                points.sort();
                return Ok(points);
            }
            i -= 1;
            if cur[i] < hi[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = lo[i];
        }
    }
}

pub fn is_centrally_symmetric(points: &[LatticeVector]) -> bool {
    let set: std::collections::HashSet<&LatticeVector> = points.iter().collect();
    points.iter().all(|v| set.contains(&v.neg()))
}

/// Exact centroid of `Δ` and its Euclidean volume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Barycenter {
    #[serde(serialize_with = "crate::cli::ser::rational_vector")]
    pub point: RationalVector,
    #[serde(serialize_with = "crate::cli::ser::rational")]
    pub total_volume: BigRational,
}

impl Barycenter {
    pub fn is_zero(&self) -> bool {
        self.point.is_zero()
    }
}

impl FanoPolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facet_normals(&self) -> &[LatticeVector] {
        &self.facet_normals
    }

    pub fn vertices(&self) -> &[LatticeVector] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    pub fn cone_vertex(&self, cone: usize) -> &LatticeVector {
        &self.vertices[self.cone_vertex[cone]]
    }

    /// `L(Δ)`, sorted.
    pub fn lattice_points(&self) -> &[LatticeVector] {
        &self.lattice_points
    }

    /// `R(Δ)`: lattice points in the relative interior of exactly one facet.
    /// In dimension one the facets are the two endpoints, which are included.
    pub fn facet_interior_points(&self) -> &[LatticeVector] {
        &self.facet_interior_points
    }

    pub fn contains(&self, v: &LatticeVector) -> bool {
        let one = BigInt::from(1);
        self.facet_normals.iter().all(|e| v.dot(e) <= one)
    }

    /// Centroid from a triangulation coned from the origin over a pulling
    /// triangulation of every facet. `Δ` is simple, so its faces are indexed
    /// by the cones of the fan: the face of cone `τ` has the vertices of the
    /// maximal cones containing `τ`.
    pub fn barycenter(&self) -> Barycenter {
        let n = self.dim;
        let mut tri = Triangulator { poly: self, memo: HashMap::new() };
        let mut weight_sum = BigInt::zero();
        let mut moment = vec![BigInt::zero(); n];
        for ray in 0..self.facet_normals.len() {
            for simplex in tri.triangulate(vec![ray]).iter() {
                let verts: Vec<LatticeVector> =
                    simplex.iter().map(|&k| self.cone_vertex(k).clone()).collect();
                let det = IntMatrix::from_rows(&verts).determinant().abs();
                for v in &verts {
                    for (m, c) in moment.iter_mut().zip(v.coords()) {
                        *m += &det * c;
                    }
                }
                weight_sum += det;
            }
        }
        // each simplex conv(0, v_1..v_n) has centroid (v_1 + ... + v_n) / (n + 1)
        let denom = &weight_sum * BigInt::from(n + 1);
        let point = RationalVector::new(
            moment.into_iter().map(|m| BigRational::new(m, denom.clone())).collect(),
        );
        let factorial: BigInt = (1..=n).map(BigInt::from).product();
        Barycenter { point, total_volume: BigRational::new(weight_sum, factorial) }
    }
}

struct Triangulator<'a> {
    poly: &'a FanoPolytope,
    memo: HashMap<Vec<usize>, Rc<Vec<Vec<usize>>>>,
}

impl Triangulator<'_> {
    /// Simplices (as lists of maximal-cone indices, i.e. vertices) of the
    /// face dual to cone `tau`.
    fn triangulate(&mut self, tau: Vec<usize>) -> Rc<Vec<Vec<usize>>> {
        if let Some(t) = self.memo.get(&tau) {
            return t.clone();
        }
        let poly = self.poly;
        let containing: Vec<usize> = (0..poly.max_cones.len())
            .filter(|&k| tau.iter().all(|r| poly.max_cones[k].contains(r)))
            .collect();
        let result = if tau.len() == poly.dim {
            vec![containing.clone()]
        } else {
            let apex = *containing
                .iter()
                .min_by(|&&a, &&b| poly.cone_vertex(a).cmp(poly.cone_vertex(b)))
                .unwrap();
            let mut extensions: Vec<usize> = containing
                .iter()
                .flat_map(|&k| poly.max_cones[k].iter().copied())
                .filter(|r| !tau.contains(r) && !poly.max_cones[apex].contains(r))
                .collect();
            extensions.sort_unstable();
            extensions.dedup();
            let mut out = Vec::new();
            for r in extensions {
                let mut sub = tau.clone();
                sub.push(r);
                sub.sort_unstable();
                for s in self.triangulate(sub).iter() {
                    let mut simplex = Vec::with_capacity(s.len() + 1);
                    simplex.push(apex);
                    simplex.extend_from_slice(s);
                    out.push(simplex);
                }
            }
            out
        };
        let result = Rc::new(result);
        self.memo.insert(tau, result.clone());
        result
    }
}
