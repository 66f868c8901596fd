//! Quaternion arithmetic and similarity classes.
//!
//! A quaternion `w + x i + y j + z k` is stored by its four real components.
//! Complex numbers are the quaternions with `y = z = 0`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default structural tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl From<Complex64> for Quaternion {
    fn from(c: Complex64) -> Self {
        Quaternion::new(c.re, c.im, 0.0, 0.0)
    }
}

impl From<f64> for Quaternion {
    fn from(r: f64) -> Self {
        Quaternion::real(r)
    }
}

impl fmt::Debug for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {:+}i {:+}j {:+}k)", self.w, self.x, self.y, self.z)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ONE: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const I: Quaternion = Quaternion { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
    pub const J: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
    pub const K: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    pub const fn complex(re: f64, im: f64) -> Self {
        Quaternion::new(re, im, 0.0, 0.0)
    }

    /// `r e^{i theta}`.
    pub fn polar(r: f64, theta: f64) -> Self {
        Quaternion::complex(r * theta.cos(), r * theta.sin())
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn re(self) -> f64 {
        self.w
    }

    /// Pure imaginary part as a quaternion.
    pub fn imag(self) -> Self {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn imag_vec(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn imag_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn inv(self) -> Self {
        let n = self.norm_sqr();
        let c = self.conj();
        Quaternion::new(c.w / n, c.x / n, c.y / n, c.z / n)
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Unit quaternion in the direction of `self`.
    pub fn normalize(self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn is_complex(self, tol: f64) -> bool {
        self.y.abs() <= tol && self.z.abs() <= tol
    }

    /// The `w + x i` part.
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.w, self.x)
    }

    /// Decomposition `self = c1 + j c2` used by the complex embedding.
    pub fn split_j_left(self) -> (Complex64, Complex64) {
        (Complex64::new(self.w, self.x), Complex64::new(self.y, -self.z))
    }

    /// Inverse of [`Quaternion::split_j_left`].
    pub fn from_j_left(c1: Complex64, c2: Complex64) -> Self {
        Quaternion::new(c1.re, c1.im, c2.re, -c2.im)
    }

    /// Decomposition `self = c1 + c2 j`.
    pub fn split_j_right(self) -> (Complex64, Complex64) {
        (Complex64::new(self.w, self.x), Complex64::new(self.y, self.z))
    }

    /// Inverse of [`Quaternion::split_j_right`].
    pub fn from_j_right(c1: Complex64, c2: Complex64) -> Self {
        Quaternion::new(c1.re, c1.im, c2.re, c2.im)
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// `mu^{-1} self mu` for a nonzero `mu`.
    pub fn conjugated_by(self, mu: Quaternion) -> Self {
        mu.inv() * self * mu
    }

    pub fn dist(self, other: Quaternion) -> f64 {
        (self - other).norm()
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, b: Quaternion) -> Quaternion {
        multiply(self, b)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        self.scale(1.0 / s)
    }
}

/// Hamilton product.
pub fn multiply(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

/// Canonical complex representative `r e^{i theta}` of a similarity class, `theta` in `[0, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityClass {
    pub representative: Complex64,
}

impl SimilarityClass {
    pub fn modulus(&self) -> f64 {
        self.representative.norm()
    }

    pub fn angle(&self) -> f64 {
        self.representative.im.atan2(self.representative.re)
    }

    pub fn as_quaternion(&self) -> Quaternion {
        Quaternion::from(self.representative)
    }
}

/// Returns `Re(q) + i |Im(q)|`.
pub fn similarity_representative(q: Quaternion) -> SimilarityClass {
    SimilarityClass { representative: Complex64::new(q.w, q.imag_norm()) }
}

/// Same real part and same modulus, within `tol`.
pub fn similar(a: Quaternion, b: Quaternion, tol: f64) -> bool {
    (a.re() - b.re()).abs() <= tol && (a.norm() - b.norm()).abs() <= tol
}

/// Unit `mu` with `mu^{-1} v mu = t` for unit pure quaternions `v`, `t`.
pub(crate) fn rotation_between(v: [f64; 3], t: [f64; 3]) -> Quaternion {
    let dot = v[0] * t[0] + v[1] * t[1] + v[2] * t[2];
    // nu = normalize(1 + v.t + v x t) satisfies nu v nu^{-1} = t; mu = conj(nu).
    let cross = [v[1] * t[2] - v[2] * t[1], v[2] * t[0] - v[0] * t[2], v[0] * t[1] - v[1] * t[0]];
    let nu = Quaternion::new(1.0 + dot, cross[0], cross[1], cross[2]);
    if nu.norm() < 1e-8 {
        // antipodal: rotate by pi about any axis orthogonal to v
        let pick = if v[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let axis = [
            v[1] * pick[2] - v[2] * pick[1],
            v[2] * pick[0] - v[0] * pick[2],
            v[0] * pick[1] - v[1] * pick[0],
        ];
        let a = Quaternion::new(0.0, axis[0], axis[1], axis[2]).normalize();
        return a.conj();
    }
    nu.normalize().conj()
}

/// Unit `mu` with `mu^{-1} q mu = target`.
pub fn conjugator_within_class(q: Quaternion, target: Quaternion) -> Result<Quaternion> {
    let scale = q.norm().max(target.norm()).max(1.0);
    if !similar(q, target, DEFAULT_TOL * scale) {
        return Err(Error::NotSimilar);
    }
    let iq = q.imag_norm();
    let it = target.imag_norm();
    if iq <= DEFAULT_TOL * scale || it <= DEFAULT_TOL * scale {
        return Ok(Quaternion::ONE);
    }
    let v = q.imag().scale(1.0 / iq).imag_vec();
    let t = target.imag().scale(1.0 / it).imag_vec();
    Ok(rotation_between(v, t))
}
