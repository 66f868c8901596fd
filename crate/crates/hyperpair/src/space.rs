//! The model space `F^{n,1}`: the Hermitian form, point types, lifts, the
//! Bergman distance and isometries.
//!
//! The form matrix `H` has ones at the corners `(1, n+1)`, `(n+1, 1)` and the
//! identity in the middle block, and `<z, w> = w* H z`. Vectors carry the
//! right scalar action, so `<z a, w b> = conj(b) <z, w> a`.

use std::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quaternion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Quaternion,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Complex => "complex",
            Field::Quaternion => "quaternion",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complex" => Ok(Field::Complex),
            "quaternion" => Ok(Field::Quaternion),
            other => Err(Error::BadParams(format!("unknown field {other:?}"))),
        }
    }
}

/// `F^{n,1}` with its fixed Hermitian form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermitianSpace {
    pub n: usize,
    pub field: Field,
}

impl HermitianSpace {
    pub fn new(n: usize, field: Field) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadParams(format!("dimension n = {n} must be at least 2")));
        }
        Ok(HermitianSpace { n, field })
    }

    /// Number of homogeneous coordinates, `n + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// The form matrix `H`.
    pub fn form(&self) -> HMatrix {
        form_matrix(self.dim())
    }

    /// `e_{n+1}`, the lift of the origin.
    pub fn origin(&self) -> HVector {
        HVector::basis(self.dim(), self.n)
    }

    /// `e_1`, the lift of the point at infinity.
    pub fn infinity(&self) -> HVector {
        HVector::basis(self.dim(), 0)
    }

    pub fn check_vector(&self, v: &HVector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        if self.field == Field::Complex && !v.0.iter().all(|q| q.is_complex(0.0)) {
            return Err(Error::WrongField("complex"));
        }
        Ok(())
    }

    pub fn check_matrix(&self, m: &HMatrix) -> Result<()> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.dim() });
        }
        if self.field == Field::Complex && !m.data.iter().all(|q| q.is_complex(0.0)) {
            return Err(Error::WrongField("complex"));
        }
        Ok(())
    }

    /// Standard lift `(p_1, ..., p_n, 1)` of an affine point.
    pub fn standard_lift(&self, p: &[Quaternion]) -> Result<HVector> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: p.len() });
        }
        let mut v = p.to_vec();
        v.push(Quaternion::ONE);
        Ok(HVector(v))
    }
}

/// The form matrix of size `d = n + 1`.
pub fn form_matrix(d: usize) -> HMatrix {
    let mut h = HMatrix::zeros(d);
    h[(0, d - 1)] = Quaternion::ONE;
    h[(d - 1, 0)] = Quaternion::ONE;
    for i in 1..d - 1 {
        h[(i, i)] = Quaternion::ONE;
    }
    h
}

/// Column vector over the quaternions with right scalar action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HVector(pub Vec<Quaternion>);

impl HVector {
    pub fn zeros(d: usize) -> Self {
        HVector(vec![Quaternion::ZERO; d])
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = HVector::zeros(d);
        v.0[i] = Quaternion::ONE;
        v
    }

    pub fn from_reals(r: &[f64]) -> Self {
        HVector(r.iter().map(|&x| Quaternion::real(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `v * lambda`.
    pub fn scale_right(&self, lambda: Quaternion) -> HVector {
        HVector(self.0.iter().map(|&q| q * lambda).collect())
    }

    pub fn add(&self, o: &HVector) -> HVector {
        HVector(self.0.iter().zip(&o.0).map(|(&a, &b)| a + b).collect())
    }

    pub fn sub(&self, o: &HVector) -> HVector {
        HVector(self.0.iter().zip(&o.0).map(|(&a, &b)| a - b).collect())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    /// Euclidean pairing `o* self`.
    pub fn euclid_dot(&self, o: &HVector) -> Quaternion {
        self.0.iter().zip(&o.0).fold(Quaternion::ZERO, |acc, (&a, &b)| acc + b.conj() * a)
    }

    /// Index of the entry of largest modulus.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, q) in self.0.iter().enumerate() {
            if q.norm() > self.0[best].norm() {
                best = i;
            }
        }
        best
    }

    pub fn is_complex(&self, tol: f64) -> bool {
        self.0.iter().all(|q| q.is_complex(tol))
    }
}

impl Index<usize> for HVector {
    type Output = Quaternion;
    fn index(&self, i: usize) -> &Quaternion {
        &self.0[i]
    }
}

impl IndexMut<usize> for HVector {
    fn index_mut(&mut self, i: usize) -> &mut Quaternion {
        &mut self.0[i]
    }
}

/// Square quaternionic matrix acting on column vectors from the left.
#[derive(Clone, Debug, PartialEq)]
pub struct HMatrix {
    d: usize,
    data: Vec<Quaternion>,
}

impl Serialize for HMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Quaternion>>::deserialize(d)?;
        HMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl Index<(usize, usize)> for HMatrix {
    type Output = Quaternion;
    fn index(&self, (i, j): (usize, usize)) -> &Quaternion {
        &self.data[i * self.d + j]
    }
}

impl IndexMut<(usize, usize)> for HMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quaternion {
        &mut self.data[i * self.d + j]
    }
}

impl HMatrix {
    pub fn zeros(d: usize) -> Self {
        HMatrix { d, data: vec![Quaternion::ZERO; d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = HMatrix::zeros(d);
        for i in 0..d {
            m[(i, i)] = Quaternion::ONE;
        }
        m
    }

    pub fn diagonal(entries: &[Quaternion]) -> Self {
        let mut m = HMatrix::zeros(entries.len());
        for (i, &q) in entries.iter().enumerate() {
            m[(i, i)] = q;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Quaternion>]) -> Result<Self> {
        let d = rows.len();
        let mut data = Vec::with_capacity(d * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(HMatrix { d, data })
    }

    pub fn from_columns(cols: &[HVector]) -> Self {
        let d = cols.len();
        let mut m = HMatrix::zeros(d);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..d {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<Quaternion>> {
        self.data.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> HVector {
        HVector((0..self.d).map(|i| self[(i, j)]).collect())
    }

    pub fn mul(&self, o: &HMatrix) -> HMatrix {
        let d = self.d;
        let mut m = HMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == Quaternion::ZERO {
                    continue;
                }
                for j in 0..d {
                    m.data[i * d + j] += a * o.data[k * d + j];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &HVector) -> HVector {
        HVector(
            (0..self.d)
                .map(|i| (0..self.d).fold(Quaternion::ZERO, |acc, k| acc + self[(i, k)] * v[k]))
                .collect(),
        )
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> HMatrix {
        let mut m = HMatrix::zeros(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn sub(&self, o: &HMatrix) -> HMatrix {
        HMatrix { d: self.d, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }

    pub fn add(&self, o: &HMatrix) -> HMatrix {
        HMatrix { d: self.d, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }

    /// Every entry multiplied on the right by `q`.
    pub fn scale_right(&self, q: Quaternion) -> HMatrix {
        HMatrix { d: self.d, data: self.data.iter().map(|&a| a * q).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, o: &HMatrix) -> f64 {
        self.data.iter().zip(&o.data).map(|(&a, &b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_complex(&self, tol: f64) -> bool {
        self.data.iter().all(|q| q.is_complex(tol))
    }

    /// `H^{-1} A* H`, the inverse of an isometry.
    pub fn isometry_inverse(&self) -> HMatrix {
        let h = form_matrix(self.d);
        h.mul(&self.adjoint()).mul(&h)
    }

    /// General inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<HMatrix> {
        let d = self.d;
        let mut a = self.clone();
        let mut inv = HMatrix::identity(d);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..d {
            let mut piv = col;
            for r in col + 1..d {
                if a[(r, col)].norm() > a[(piv, col)].norm() {
                    piv = r;
                }
            }
            if a[(piv, col)].norm() <= 1e-14 * scale {
                return Err(Error::SingularBasis);
            }
            if piv != col {
                for j in 0..d {
                    a.data.swap(piv * d + j, col * d + j);
                    inv.data.swap(piv * d + j, col * d + j);
                }
            }
            let p_inv = a[(col, col)].inv();
            for j in 0..d {
                a[(col, j)] = p_inv * a[(col, j)];
                inv[(col, j)] = p_inv * inv[(col, j)];
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == Quaternion::ZERO {
                    continue;
                }
                for j in 0..d {
                    let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }
}

/// Solves `M c = b` over the quaternions, `M` given by rows.
pub(crate) fn solve(m: &[Vec<Quaternion>], b: &[Quaternion]) -> Result<Vec<Quaternion>> {
    let d = b.len();
    let mut a: Vec<Vec<Quaternion>> = m.to_vec();
    let mut rhs = b.to_vec();
    let scale = a.iter().flatten().map(|q| q.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..d {
        let mut piv = col;
        for r in col + 1..d {
            if a[r][col].norm() > a[piv][col].norm() {
                piv = r;
            }
        }
        if a[piv][col].norm() <= 1e-14 * scale {
            return Err(Error::SingularBasis);
        }
        a.swap(piv, col);
        rhs.swap(piv, col);
        let p_inv = a[col][col].inv();
        for j in col..d {
            a[col][j] = p_inv * a[col][j];
        }
        rhs[col] = p_inv * rhs[col];
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a[r][col];
            for j in col..d {
                let v = a[col][j];
                a[r][j] -= f * v;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    Ok(rhs)
}

/// `<z, w> = w* H z`.
pub fn inner(z: &HVector, w: &HVector) -> Result<Quaternion> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), got: w.len() });
    }
    Ok(form(z, w))
}

/// `<z, w>` without the dimension check.
pub(crate) fn form(z: &HVector, w: &HVector) -> Quaternion {
    let d = z.len();
    let mut acc = w[0].conj() * z[d - 1] + w[d - 1].conj() * z[0];
    for i in 1..d - 1 {
        acc += w[i].conj() * z[i];
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Positive,
    Negative,
    Null,
}

/// Sign of `<z, z>` with a null dead-band `|<z,z>| <= tol ||z||^2`.
pub fn classify_point(z: &HVector, tol: f64) -> Result<PointClass> {
    let n2 = z.norm().powi(2);
    if n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let q = form(z, z).re();
    Ok(if q.abs() <= tol * n2 {
        PointClass::Null
    } else if q > 0.0 {
        PointClass::Positive
    } else {
        PointClass::Negative
    })
}

/// Affine coordinates `z_i z_{n+1}^{-1}` of a lift with nonzero last entry.
pub fn project(z: &HVector) -> Result<Vec<Quaternion>> {
    let d = z.len();
    let last = z[d - 1];
    if last.norm() <= 1e-300 {
        return Err(Error::ZeroVector);
    }
    let li = last.inv();
    Ok(z.0[..d - 1].iter().map(|&q| q * li).collect())
}

/// Bergman distance between two negative vectors.
pub fn bergman_distance(z: &HVector, w: &HVector) -> Result<f64> {
    let zz = inner(z, z)?.re();
    let ww = inner(w, w)?.re();
    if zz >= 0.0 || ww >= 0.0 {
        return Err(Error::NotNegativeVector);
    }
    let zw = form(z, w).norm_sqr();
    let c2 = (zw / (zz * ww)).max(1.0);
    Ok(2.0 * c2.sqrt().acosh())
}

/// `||A* H A - H||_max`.
pub fn isometry_defect(a: &HMatrix) -> f64 {
    let h = form_matrix(a.dim());
    a.adjoint().mul(&h).mul(a).max_abs_diff(&h)
}

/// `||A* H A - H||_max <= tol`.
pub fn is_isometry(a: &HMatrix, tol: f64) -> bool {
    isometry_defect(a) <= tol
}

/// Isometry check with tolerance scaled by `max(1, ||A||^2)`.
pub(crate) fn check_isometry(a: &HMatrix, tol: f64) -> Result<()> {
    let defect = isometry_defect(a);
    let scale = a.max_abs().powi(2).max(1.0);
    if defect <= tol * scale {
        Ok(())
    } else {
        Err(Error::NotIsometry(defect))
    }
}

pub(crate) fn random_scalar<R: Rng>(rng: &mut R, field: Field) -> Quaternion {
    match field {
        Field::Complex => Quaternion::complex(rng.sample(StandardNormal), rng.sample(StandardNormal)),
        Field::Quaternion => Quaternion::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ),
    }
}

pub(crate) fn random_vector<R: Rng>(rng: &mut R, space: &HermitianSpace) -> HVector {
    HVector((0..space.dim()).map(|_| random_scalar(rng, space.field)).collect())
}

/// Random point of the boundary, as its standard lift.
pub fn random_boundary_point<R: Rng>(rng: &mut R, space: &HermitianSpace) -> HVector {
    let d = space.dim();
    let mut v = HVector::zeros(d);
    let mut sq = 0.0;
    for i in 1..d - 1 {
        v.0[i] = random_scalar(rng, space.field);
        sq += v.0[i].norm_sqr();
    }
    v.0[0] = random_scalar(rng, space.field).imag() + Quaternion::real(-0.5 * sq);
    v.0[d - 1] = Quaternion::ONE;
    v
}

/// Random unit scalar of the field.
pub fn random_unit<R: Rng>(rng: &mut R, field: Field) -> Quaternion {
    loop {
        let q = random_scalar(rng, field);
        if q.norm() > 1e-3 {
            return q.normalize();
        }
    }
}

const PIVOT_FLOOR: f64 = 1e-6;
const MAX_RESTARTS: usize = 64;

/// Random isometry from a seed.
pub fn random_isometry(space: &HermitianSpace, seed: u64) -> Result<HMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_isometry_with(space, &mut rng)
}

/// Random isometry drawn from an explicit generator.
///
/// Random vectors are H-orthonormalized, the `n` positive ones first and the
/// negative one last; a pivot below `1e-6` relative to the vector's norm
/// restarts the draw.
pub fn random_isometry_with<R: Rng>(space: &HermitianSpace, rng: &mut R) -> Result<HMatrix> {
    let d = space.dim();
    'restart: for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<HVector> = Vec::with_capacity(d);
        let mut signs: Vec<f64> = Vec::with_capacity(d);
        while basis.len() < d {
            let want_negative = basis.len() == d - 1;
            let mut accepted = false;
            for _ in 0..8 {
                let mut v = random_vector(rng, space);
                for (e, &s) in basis.iter().zip(&signs) {
                    // coefficient <e,e>^{-1} <v,e>
                    let c = form(&v, e) * s;
                    v = v.sub(&e.scale_right(c));
                }
                let g = form(&v, &v).re();
                let nrm = v.norm().powi(2);
                let ok = if want_negative { g < -PIVOT_FLOOR * nrm } else { g > PIVOT_FLOOR * nrm };
                if ok {
                    basis.push(v.scale_right(Quaternion::real(1.0 / g.abs().sqrt())));
                    signs.push(g.signum());
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                continue 'restart;
            }
        }
        // columns: positives then the negative; M* H M = diag(1,..,1,-1)
        let m = HMatrix::from_columns(&basis);
        return Ok(m.mul(&siegel_transition(d)));
    }
    Err(Error::GramSchmidtBreakdown(MAX_RESTARTS))
}

/// `K` with `K* diag(1,...,1,-1) K = H`.
fn siegel_transition(d: usize) -> HMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = HMatrix::zeros(d);
    // W = [(e1+ed)/sqrt2, e2..e_{d-1}, (e1-ed)/sqrt2], K = W^T
    w[(0, 0)] = Quaternion::real(s);
    w[(0, d - 1)] = Quaternion::real(s);
    w[(d - 1, 0)] = Quaternion::real(s);
    w[(d - 1, d - 1)] = Quaternion::real(-s);
    for i in 1..d - 1 {
        w[(i, i)] = Quaternion::ONE;
    }
    w
}
