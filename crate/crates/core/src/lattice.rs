//! Exact integer and rational linear algebra over the lattices `N` and `M`.
//!
//! Everything here is arbitrary precision. Hot loops elsewhere in the crate
//! convert to machine integers through [`LatticeVector::to_i64`], which fails
//! loudly instead of wrapping.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An integer point of `N` or `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVector(Vec<BigInt>);

impl LatticeVector {
    pub fn new(coords: Vec<BigInt>) -> Self {
        LatticeVector(coords)
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        LatticeVector(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        LatticeVector(vec![BigInt::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot(&self, other: &LatticeVector) -> BigInt {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn neg(&self) -> LatticeVector {
        LatticeVector(self.0.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: &BigInt) -> LatticeVector {
        LatticeVector(self.0.iter().map(|c| c * k).collect())
    }

    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn to_i64(&self) -> Result<Vec<i64>> {
        self.0
            .iter()
            .map(|c| c.to_i64().ok_or(Error::CoordinateOverflow))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_rational(&self) -> RationalVector {
        RationalVector(self.0.iter().cloned().map(BigRational::from_integer).collect())
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A point of `M_R` or `N_R` with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalVector(Vec<BigRational>);

impl RationalVector {
    pub fn new(coords: Vec<BigRational>) -> Self {
        RationalVector(coords)
    }

    pub fn zero(dim: usize) -> Self {
        RationalVector(vec![BigRational::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot_lattice(&self, v: &LatticeVector) -> BigRational {
        self.0
            .iter()
            .zip(v.coords())
            .map(|(a, b)| a * BigRational::from_integer(b.clone()))
            .sum()
    }

    /// The integer vector if every coordinate has denominator one.
    pub fn to_lattice(&self) -> Option<LatticeVector> {
        self.0
            .iter()
            .map(|c| c.is_integer().then(|| c.to_integer()))
            .collect::<Option<Vec<_>>>()
            .map(LatticeVector)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        IntMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().map(|&x| BigInt::from(x)).collect(),
        }
    }

    /// Matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[LatticeVector]) -> Self {
        let c = rows.first().map_or(0, LatticeVector::dim);
        IntMatrix {
            rows: rows.len(),
            cols: c,
            data: rows.iter().flat_map(|v| v.coords().iter().cloned()).collect(),
        }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[LatticeVector]) -> Self {
        IntMatrix::from_rows(cols).transpose()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> LatticeVector {
        LatticeVector(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn column(&self, j: usize) -> LatticeVector {
        LatticeVector((0..self.rows).map(|i| self[(i, j)].clone()).collect())
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut p = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    p[(i, j)] += a * &other[(k, j)];
                }
            }
        }
        p
    }

    pub fn mul_vec(&self, v: &LatticeVector) -> LatticeVector {
        assert_eq!(self.cols, v.dim(), "shape mismatch in product");
        LatticeVector((0..self.rows).map(|i| self.row(i).dot(v)).collect())
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[IntMatrix]) -> IntMatrix {
        let cols = blocks.first().map_or(0, |b| b.cols);
        assert!(blocks.iter().all(|b| b.cols == cols));
        IntMatrix {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            data: blocks.iter().flat_map(|b| b.data.iter().cloned()).collect(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn to_i64(&self) -> Result<Vec<i64>> {
        self.data
            .iter()
            .map(|c| c.to_i64().ok_or(Error::CoordinateOverflow))
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[target] += k * row[src]
    fn add_row_multiple(&mut self, target: usize, src: usize, k: &BigInt) {
        for j in 0..self.cols {
            let delta = k * &self[(src, j)];
            self[(target, j)] += delta;
        }
    }

    /// col[target] += k * col[src]
    fn add_col_multiple(&mut self, target: usize, src: usize, k: &BigInt) {
        for i in 0..self.rows {
            let delta = k * &self[(i, src)];
            self[(i, target)] += delta;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let x = -&self[(i, j)];
            self[(i, j)] = x;
        }
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&r| !a[(r, k)].is_zero()) {
                    Some(r) => {
                        a.swap_rows(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                    a[(i, j)] = v;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * &a[(n - 1, n - 1)]
    }

    pub fn rank(&self) -> usize {
        let snf = smith_normal_form(self);
        (0..self.rows.min(self.cols)).filter(|&i| !snf.s[(i, i)].is_zero()).count()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// An element of `GL(n, Z)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnimodularMap(IntMatrix);

impl UnimodularMap {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::DimensionMismatch { expected: matrix.rows(), found: matrix.cols() });
        }
        if !matrix.determinant().abs().is_one() {
            return Err(Error::NotUnimodular);
        }
        Ok(UnimodularMap(matrix))
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        UnimodularMap::new(IntMatrix::from_i64_rows(rows))
    }

    /// The map sending the standard basis vector `e_j` to `images[j]`.
    pub fn from_images(images: &[LatticeVector]) -> Result<Self> {
        UnimodularMap::new(IntMatrix::from_columns(images))
    }

    pub(crate) fn new_unchecked(matrix: IntMatrix) -> Self {
        UnimodularMap(matrix)
    }

    pub fn identity(n: usize) -> Self {
        UnimodularMap(IntMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.0
    }

    pub fn apply(&self, v: &LatticeVector) -> LatticeVector {
        self.0.mul_vec(v)
    }

    /// `self ∘ other`
    pub fn compose(&self, other: &UnimodularMap) -> UnimodularMap {
        UnimodularMap(self.0.mul(&other.0))
    }

    pub fn inverse(&self) -> UnimodularMap {
        let inv = inverse_rational(&self.0).expect("unimodular matrix is invertible");
        let n = self.dim();
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = inv[i][j].to_integer();
            }
        }
        UnimodularMap(m)
    }

    /// The contragredient action on the dual lattice: inverse transpose.
    pub fn dual(&self) -> UnimodularMap {
        UnimodularMap(self.inverse().0.transpose())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == IntMatrix::identity(self.dim())
    }

    pub fn order(&self) -> usize {
        let mut k = 1;
        let mut p = self.clone();
        while !p.is_identity() {
            p = p.compose(self);
            k += 1;
            assert!(k <= 1 << 20, "element of infinite order");
        }
        k
    }
}

impl fmt::Display for UnimodularMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Divide out the content of a nonzero vector.
pub fn primitive(v: &LatticeVector) -> Result<LatticeVector> {
    let g = v.coords().iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if g.is_zero() {
        return Err(Error::ZeroRay);
    }
    Ok(LatticeVector(v.coords().iter().map(|c| c / &g).collect()))
}

/// `u · a · v = s` with `s` diagonal and each diagonal entry dividing the next.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub u: UnimodularMap,
    pub s: IntMatrix,
    pub v: UnimodularMap,
}

impl SmithForm {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.s.rows().min(self.s.cols())).map(|i| self.s[(i, i)].clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }
}

pub fn smith_normal_form(a: &IntMatrix) -> SmithForm {
    let (m, n) = (a.rows(), a.cols());
    let mut s = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);

    for t in 0..m.min(n) {
        // Smallest nonzero entry of the trailing block goes to the pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if !s[(i, j)].is_zero()
                    && best.is_none_or(|(bi, bj)| s[(i, j)].abs() < s[(bi, bj)].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        s.swap_rows(t, pi);
        u.swap_rows(t, pi);
        s.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            // Bring the smallest nonzero entry of row t / column t to the pivot.
            let mut pivot_moved = true;
            while pivot_moved {
                pivot_moved = false;
                for i in t + 1..m {
                    if !s[(i, t)].is_zero() {
                        let q = s[(i, t)].div_floor(&s[(t, t)]);
                        s.add_row_multiple(i, t, &-&q);
                        u.add_row_multiple(i, t, &-&q);
                        if !s[(i, t)].is_zero() {
                            s.swap_rows(t, i);
                            u.swap_rows(t, i);
                            pivot_moved = true;
                        }
                    }
                }
                for j in t + 1..n {
                    if !s[(t, j)].is_zero() {
                        let q = s[(t, j)].div_floor(&s[(t, t)]);
                        s.add_col_multiple(j, t, &-&q);
                        v.add_col_multiple(j, t, &-&q);
                        if !s[(t, j)].is_zero() {
                            s.swap_cols(t, j);
                            v.swap_cols(t, j);
                            pivot_moved = true;
                        }
                    }
                }
            }
            // Divisibility: the pivot must divide the whole trailing block.
            let offender = (t + 1..m).find(|&i| {
                (t + 1..n).any(|j| !s[(i, j)].is_multiple_of(&s[(t, t)]))
            });
            match offender {
                Some(i) => {
                    s.add_row_multiple(t, i, &BigInt::one());
                    u.add_row_multiple(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }

    SmithForm {
        u: UnimodularMap::new_unchecked(u),
        s,
        v: UnimodularMap::new_unchecked(v),
    }
}

/// Basis of `{x : a·x = 0}` over `Q`. Empty when the kernel is trivial.
pub fn rational_kernel(a: &IntMatrix) -> Vec<RationalVector> {
    let snf = smith_normal_form(a);
    let rank = snf.rank();
    (rank..a.cols())
        .map(|j| snf.v.matrix().column(j).to_rational())
        .collect()
}

/// Rational basis of the common fixed space `∩ ker(γ - id)`.
pub fn fixed_subspace(maps: &[UnimodularMap]) -> Vec<RationalVector> {
    assert!(!maps.is_empty(), "fixed_subspace needs at least one map");
    let n = maps[0].dim();
    let id = IntMatrix::identity(n);
    let blocks: Vec<IntMatrix> = maps.iter().map(|g| g.matrix().sub(&id)).collect();
    rational_kernel(&IntMatrix::vstack(&blocks))
}

/// Inverse over `Q`, `None` when singular.
pub fn inverse_rational(a: &IntMatrix) -> Option<Vec<Vec<BigRational>>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut aug: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j < n {
                        BigRational::from_integer(a[(i, j)].clone())
                    } else if j - n == i {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    gauss_jordan(&mut aug, n)?;
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Solve the square system `a·x = b` over `Q`, `None` when singular.
pub fn solve_rational(a: &IntMatrix, b: &[BigRational]) -> Option<RationalVector> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut aug: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> =
                (0..n).map(|j| BigRational::from_integer(a[(i, j)].clone())).collect();
            row.push(b[i].clone());
            row
        })
        .collect();
    gauss_jordan(&mut aug, n)?;
    Some(RationalVector(aug.into_iter().map(|row| row[n].clone()).collect()))
}

fn gauss_jordan(aug: &mut [Vec<BigRational>], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        let p = aug[col][col].clone();
        for x in aug[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                let (src, dst) = if r < col {
                    let (lo, hi) = aug.split_at_mut(col);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = aug.split_at_mut(r);
                    (&lo[col], &mut hi[0])
                };
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d -= &f * s;
                }
            }
        }
    }
    Some(())
}
