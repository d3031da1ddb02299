#![allow(dead_code)]

use rand::Rng;
use toric_ek::catalog::{family_fan, named_fan, FamilySpec};
use toric_ek::{Fan, LatticeVector, UnimodularMap};

pub const NAMED: [&str; 7] = ["P1", "P2", "P1xP1", "Bl1P2", "Bl2P2", "Bl3P2", "P3"];

/// Named fans followed by every desk-scale family member.
pub fn catalog() -> Vec<(String, Fan)> {
    let mut out: Vec<(String, Fan)> =
        NAMED.iter().map(|n| (n.to_string(), named_fan(n).unwrap())).collect();
    out.extend(FamilySpec::desk_scale().into_iter().map(|s| (s.to_string(), family_fan(s).unwrap())));
    out
}

pub fn catalog_up_to(dim: usize) -> Vec<(String, Fan)> {
    catalog().into_iter().filter(|(_, f)| f.dim() <= dim).collect()
}

/// Product of random elementary matrices with small multipliers, and a sign
/// flip; always unimodular.
pub fn random_unimodular<R: Rng>(n: usize, rng: &mut R) -> UnimodularMap {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    if n > 1 {
        for _ in 0..2 * n {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let c = rng.gen_range(-2..=2);
            let source = m[j].clone();
            for (x, y) in m[i].iter_mut().zip(source) {
                *x += c * y;
            }
        }
    }
    if rng.gen_bool(0.5) {
        for x in m[0].iter_mut() {
            *x = -*x;
        }
    }
    UnimodularMap::from_i64_rows(&m).unwrap()
}

/// `g` applied to every ray; cones are inferred again.
pub fn transform_fan(fan: &Fan, g: &UnimodularMap) -> Fan {
    let rays: Vec<LatticeVector> = fan.rays().iter().map(|r| g.apply(r)).collect();
    toric_ek::build_fan(fan.dim(), rays, None).unwrap()
}
