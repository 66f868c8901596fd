//! Eigenstructure of isometries.
//!
//! A quaternionic matrix `A = A1 + j A2` (with `A1`, `A2` complex) embeds as
//! the complex block matrix `[[A1, -conj(A2)], [A2, conj(A1)]]`. A quaternion
//! vector `v1 + j v2` corresponds to the complex column `(v1; v2)`.

mod frame;
mod poly;

pub use frame::{build_from_frame, eigen_frame, projective_point, LiftAnchor, LoxodromicFrame, ProjectivePoint, SpectralParams};
pub use poly::{char_poly_of, poly_roots, RootCluster, Roots};
pub(crate) use frame::point_of;
pub(crate) use poly::eigenvector;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quaternion;
use crate::space::{check_isometry, Field, HMatrix};

/// Structural tolerance for isometry checks inside the spectral code.
pub(crate) const ISOMETRY_TOL: f64 = 1e-9;
/// Palindrome tolerance on characteristic-polynomial coefficients.
pub const PALINDROME_TOL: f64 = 1e-8;

/// The complex matrix `A_C` of size `2(n+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexEmbedding(pub DMatrix<Complex64>);

pub fn complex_embedding(a: &HMatrix) -> ComplexEmbedding {
    let d = a.dim();
    let mut m = DMatrix::from_element(2 * d, 2 * d, Complex64::new(0.0, 0.0));
    for i in 0..d {
        for j in 0..d {
            let (a1, a2) = a[(i, j)].split_j_left();
            m[(i, j)] = a1;
            m[(i, j + d)] = -a2.conj();
            m[(i + d, j)] = a2;
            m[(i + d, j + d)] = a1.conj();
        }
    }
    ComplexEmbedding(m)
}

/// The complex part `A1` of a complex-field matrix.
pub(crate) fn complex_part(a: &HMatrix) -> DMatrix<Complex64> {
    let d = a.dim();
    DMatrix::from_fn(d, d, |i, j| a[(i, j)].to_complex())
}

/// Characteristic polynomial of the embedding, descending degree.
pub fn char_poly(m: &ComplexEmbedding) -> Vec<Complex64> {
    char_poly_of(&m.0)
}

/// `(a_1, ..., a_{n+1})` from `chi(x) = sum_j a_j x^{2(n+1)-j}`, `a_0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealTrace(pub Vec<f64>);

impl RealTrace {
    /// Full palindromic coefficient list `a_0, ..., a_{2(n+1)}`.
    pub fn full_coefficients(&self) -> Vec<f64> {
        let half = &self.0;
        let big_n = half.len();
        let mut out = Vec::with_capacity(2 * big_n + 1);
        out.push(1.0);
        out.extend_from_slice(half);
        for j in (0..big_n).rev() {
            out.push(if j == 0 { 1.0 } else { half[j - 1] });
        }
        out
    }

    pub fn max_abs_diff(&self, o: &RealTrace) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Largest deviation from `a_j = a_{2N-j}` and from reality, relative to
/// `max(1, max|a_j|)`.
pub fn palindrome_defect(c: &[Complex64]) -> f64 {
    let len = c.len();
    let scale = c.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let mut worst = 0.0f64;
    for j in 0..len {
        worst = worst.max((c[j] - c[len - 1 - j]).norm()).max(c[j].im.abs());
    }
    worst / scale
}

/// Real trace of an isometry.
pub fn real_trace(a: &HMatrix) -> Result<RealTrace> {
    check_isometry(a, ISOMETRY_TOL)?;
    real_trace_unchecked(a)
}

pub(crate) fn real_trace_unchecked(a: &HMatrix) -> Result<RealTrace> {
    let c = char_poly(&complex_embedding(a));
    let defect = palindrome_defect(&c);
    if defect > PALINDROME_TOL {
        return Err(Error::PalindromeViolation(defect));
    }
    let big_n = a.dim();
    Ok(RealTrace(c[1..=big_n].iter().map(|z| z.re).collect()))
}

/// `tr(A^j)` for `1 <= j <= floor((n+1)/2)`, complex field only.
pub fn complex_traces(a: &HMatrix) -> Result<Vec<Complex64>> {
    if !a.is_complex(0.0) {
        return Err(Error::WrongField("complex"));
    }
    let m = complex_part(a);
    let count = a.dim() / 2;
    let mut pow = m.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(pow.trace());
        pow = &pow * &m;
    }
    Ok(out)
}

/// `sigma = (tr(A)^2 - tr(A^2)) / 2`, the second elementary symmetric
/// function of the eigenvalues.
pub fn sigma(a: &HMatrix) -> Result<Complex64> {
    if !a.is_complex(0.0) {
        return Err(Error::WrongField("complex"));
    }
    let m = complex_part(a);
    let t1 = m.trace();
    let t2 = (&m * &m).trace();
    Ok((t1 * t1 - t2) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    RegularLoxodromic,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: ElementKind,
    /// Negative discriminant of the reduced polynomial `g`.
    pub discriminant: f64,
    pub real_trace: RealTrace,
    /// `chi(1)` and `chi(-1)`.
    pub chi_at_one: f64,
    pub chi_at_minus_one: f64,
}

/// Coefficients of `g` with `chi(x) = x^N g(x + 1/x)`, descending degree.
pub fn reduced_polynomial(t: &RealTrace) -> Vec<f64> {
    let full = t.full_coefficients();
    let big_n = t.0.len();
    // Dickson polynomials: x^m + x^-m = D_m(x + 1/x), D_0 = 2, D_1 = t
    let mut dickson: Vec<Vec<f64>> = vec![vec![2.0], vec![0.0, 1.0]];
    for m in 2..=big_n {
        let mut next = vec![0.0; m + 1];
        for (k, &v) in dickson[m - 1].iter().enumerate() {
            next[k + 1] += v;
        }
        for (k, &v) in dickson[m - 2].iter().enumerate() {
            next[k] -= v;
        }
        dickson.push(next);
    }
    // ascending coefficients of g
    let mut g = vec![0.0; big_n + 1];
    g[0] = full[big_n];
    for m in 1..=big_n {
        for (k, &v) in dickson[m].iter().enumerate() {
            g[k] += full[big_n - m] * v;
        }
    }
    g.reverse();
    g
}

fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let d = m.len();
    let mut det = 1.0;
    for c in 0..d {
        let p = (c..d).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..d {
            let f = m[r][c] / m[c][c];
            for k in c..d {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Discriminant of a real polynomial (descending coefficients) through the
/// Sylvester resultant of `g` and `g'`.
pub fn discriminant(g: &[f64]) -> f64 {
    let d = g.len() - 1;
    if d < 1 {
        return 0.0;
    }
    let dg: Vec<f64> = (0..d).map(|k| g[k] * (d - k) as f64).collect();
    let size = 2 * d - 1;
    let mut syl = vec![vec![0.0; size]; size];
    for r in 0..d - 1 {
        for (k, &v) in g.iter().enumerate() {
            syl[r][r + k] = v;
        }
    }
    for r in 0..d {
        for (k, &v) in dg.iter().enumerate() {
            syl[d - 1 + r][r + k] = v;
        }
    }
    let res = determinant(syl);
    let sign = if (d * (d - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    sign * res / g[0]
}

/// Relative threshold below which a discriminant counts as zero.
const DISCRIMINANT_TOL: f64 = 1e-12;
const SPECTRAL_GAP: f64 = 1e-7;

/// Regular loxodromic test from the real trace (quaternionic) or from the
/// spectrum of `A1` (complex field).
pub fn classify_element(a: &HMatrix, field: Field) -> Result<Classification> {
    check_isometry(a, ISOMETRY_TOL)?;
    if field == Field::Complex && !a.is_complex(0.0) {
        return Err(Error::WrongField("complex"));
    }
    let t = real_trace_unchecked(a)?;
    let g = reduced_polynomial(&t);
    let delta = -discriminant(&g);
    let full = t.full_coefficients();
    let chi_at_one: f64 = full.iter().sum();
    let chi_at_minus_one: f64 = full.iter().enumerate().map(|(k, &v)| if k % 2 == 0 { v } else { -v }).sum();
    let coeff_scale: f64 = full.iter().map(|v| v.abs()).sum();
    let d = g.len() - 1;
    let root_scale = (1..=d).map(|k| g[k].abs().powf(1.0 / k as f64)).fold(1.0, f64::max);
    let regular = if field == Field::Complex {
        complex_regular(a)?
    } else {
        delta > DISCRIMINANT_TOL * root_scale.powi(2 * d as i32 - 2)
            && chi_at_one.abs() > DISCRIMINANT_TOL * coeff_scale
            && chi_at_minus_one.abs() > DISCRIMINANT_TOL * coeff_scale
    };
    Ok(Classification {
        kind: if regular { ElementKind::RegularLoxodromic } else { ElementKind::Other },
        discriminant: delta,
        real_trace: t,
        chi_at_one,
        chi_at_minus_one,
    })
}

/// Distinct eigenvalues of `A1` with exactly one pair off the unit circle.
fn complex_regular(a: &HMatrix) -> Result<bool> {
    let roots = poly_roots(&char_poly_of(&complex_part(a)))?.roots;
    Ok(spectrum_is_regular(&roots))
}

pub(crate) fn spectrum_is_regular(roots: &[Complex64]) -> bool {
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() <= SPECTRAL_GAP * roots[i].norm().max(1.0) {
                return false;
            }
        }
    }
    let inside = roots.iter().filter(|z| z.norm() < 1.0 - SPECTRAL_GAP).count();
    let outside = roots.iter().filter(|z| z.norm() > 1.0 + SPECTRAL_GAP).count();
    inside == 1 && outside == 1
}

/// Diagonal `E(r, theta, phi_1, ..., phi_{n-1})`.
pub fn diagonal_element(params: &SpectralParams) -> HMatrix {
    let mut entries = Vec::with_capacity(params.phi.len() + 2);
    entries.push(Quaternion::polar(params.r, params.theta));
    entries.extend(params.phi.iter().map(|&p| Quaternion::polar(1.0, p)));
    entries.push(Quaternion::polar(1.0 / params.r, params.theta));
    HMatrix::diagonal(&entries)
}
