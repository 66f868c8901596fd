//! Eigenvector frames of regular loxodromic elements and projective points.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_isometry, classify_element, complex_embedding, complex_part, diagonal_element, eigenvector, poly_roots,
    ElementKind, ISOMETRY_TOL, SPECTRAL_GAP,
};
use crate::error::{Error, Result};
use crate::quat::{conjugator_within_class, Quaternion};
use crate::space::{form, Field, HMatrix, HVector};

/// `(r, theta, phi_1, ..., phi_{n-1})` of the diagonal form `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub r: f64,
    pub theta: f64,
    pub phi: Vec<f64>,
}

impl SpectralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::BadParams(format!("r = {} must lie in (0, 1)", self.r)));
        }
        let pi = std::f64::consts::PI;
        for &a in std::iter::once(&self.theta).chain(&self.phi) {
            if !(-pi..=pi).contains(&a) {
                return Err(Error::BadParams(format!("angle {a} outside [-pi, pi]")));
            }
        }
        Ok(())
    }
}

/// A point `(c1 : c2)` of the complex projective line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint(pub [Complex64; 2]);

impl ProjectivePoint {
    pub fn new(c1: Complex64, c2: Complex64) -> Self {
        ProjectivePoint([c1, c2])
    }

    /// The point of the eigenset `mu^{-1} C` inside the eigenline.
    pub(crate) fn from_conjugator(mu: Quaternion) -> Self {
        let (c1, c2) = mu.split_j_right();
        ProjectivePoint([c1, c2])
    }

    /// `c1 d2 - c2 d1 = 0` relative to the sizes of both points.
    pub fn equals(&self, o: &ProjectivePoint, tol: f64) -> bool {
        let [c1, c2] = self.0;
        let [d1, d2] = o.0;
        let scale = (c1.norm_sqr() + c2.norm_sqr()).sqrt() * (d1.norm_sqr() + d2.norm_sqr()).sqrt();
        (c1 * d2 - c2 * d1).norm() <= tol * scale
    }
}

/// How the attracting lift was scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftAnchor {
    /// Last coordinate equal to one.
    Standard,
    /// Attracting point at or near infinity: largest entry set to one.
    MaxEntry,
}

/// Labeled eigenvectors of a regular loxodromic element.
///
/// Vectors are ordered as the diagonal of `E`: attracting, the `n - 1`
/// positive ones by increasing angle, repelling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoxodromicFrame {
    pub field: Field,
    pub matrix: HMatrix,
    pub vectors: Vec<HVector>,
    /// Canonical class representatives (quaternionic) or eigenvalues of `A1`
    /// (complex field), in vector order.
    pub eigenvalues: Vec<Complex64>,
    /// `nu` with `A v = v nu` for each stored lift.
    pub lift_eigenvalues: Vec<Quaternion>,
    /// The shared point of the null pair, then one per positive class.
    pub projective_points: Vec<ProjectivePoint>,
    pub anchor: LiftAnchor,
}

const STANDARD_LIFT_FLOOR: f64 = 1e-8;
const NULL_SPACE_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-8;

impl LoxodromicFrame {
    pub fn n(&self) -> usize {
        self.vectors.len() - 1
    }

    pub fn attracting(&self) -> &HVector {
        &self.vectors[0]
    }

    pub fn repelling(&self) -> &HVector {
        &self.vectors[self.n()]
    }

    /// Positive eigenvectors `x_1, ..., x_{n-1}`.
    pub fn positive(&self) -> &[HVector] {
        &self.vectors[1..self.n()]
    }

    pub fn params(&self) -> SpectralParams {
        let a = self.eigenvalues[0];
        SpectralParams {
            r: a.norm(),
            theta: a.arg(),
            phi: self.eigenvalues[1..self.n()].iter().map(|z| z.arg()).collect(),
        }
    }

    /// `C_A` with `A = C_A E C_A^{-1}` and `E` diagonal complex.
    pub fn frame_matrix(&self) -> HMatrix {
        let mu_null = self.eigen_conjugator(0);
        let cols: Vec<HVector> = (0..=self.n())
            .map(|k| {
                let mu = if k == 0 || k == self.n() { mu_null } else { self.eigen_conjugator(k) };
                self.vectors[k].scale_right(mu)
            })
            .collect();
        HMatrix::from_columns(&cols)
    }

    /// `frame_matrix` with the null columns rescaled to equal Euclidean
    /// length; still an isometry conjugating `E` to `A`.
    pub fn balanced_frame_matrix(&self) -> HMatrix {
        let mut q = self.frame_matrix();
        let d = self.n() + 1;
        let s = (q.column(d - 1).norm() / q.column(0).norm()).sqrt();
        for i in 0..d {
            q[(i, 0)] = q[(i, 0)].scale(s);
            q[(i, d - 1)] = q[(i, d - 1)].scale(1.0 / s);
        }
        q
    }

    /// Unit `mu` with `mu^{-1} nu_k mu` equal to the stored eigenvalue.
    fn eigen_conjugator(&self, k: usize) -> Quaternion {
        conjugator_within_class(self.lift_eigenvalues[k], Quaternion::from(self.eigenvalues[k])).unwrap_or(Quaternion::ONE)
    }

    /// Largest `||A v - v nu|| / ||v||` over the stored eigenpairs.
    pub fn max_residual(&self) -> f64 {
        self.vectors
            .iter()
            .zip(&self.lift_eigenvalues)
            .map(|(v, &nu)| self.matrix.mul_vec(v).sub(&v.scale_right(nu)).norm() / v.norm())
            .fold(0.0, f64::max)
    }
}

/// Point of the eigenset selected by a lift with `A v = v nu`, where `lambda`
/// is the complex representative.
pub(crate) fn point_of(lambda: Complex64, nu: Quaternion) -> Result<ProjectivePoint> {
    if lambda.im.abs() <= SPECTRAL_GAP * lambda.norm().max(1.0) {
        return Err(Error::RealEigenvalueClass);
    }
    Ok(ProjectivePoint::from_conjugator(conjugator_within_class(Quaternion::from(lambda), nu)?))
}

/// Projective point of class `class_index` (0 for the null pair).
pub fn projective_point(frame: &LoxodromicFrame, class_index: usize) -> Result<ProjectivePoint> {
    if class_index >= frame.n() {
        return Err(Error::BadParams(format!("class index {class_index} out of range")));
    }
    point_of(frame.eigenvalues[class_index], frame.lift_eigenvalues[class_index])
}

struct Labeled {
    attracting: Complex64,
    repelling: Complex64,
    positive: Vec<Complex64>,
}

fn label(candidates: Vec<Complex64>) -> Result<Labeled> {
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if (candidates[i] - candidates[j]).norm() <= SPECTRAL_GAP {
                return Err(Error::DegenerateSpectrum(format!(
                    "eigenvalues {} and {} coincide",
                    candidates[i], candidates[j]
                )));
            }
        }
    }
    let mut attracting = None;
    let mut repelling = None;
    let mut positive = Vec::new();
    for z in candidates {
        let m = z.norm();
        if m < 1.0 - SPECTRAL_GAP {
            if attracting.replace(z).is_some() {
                return Err(Error::NotLoxodromic);
            }
        } else if m > 1.0 + SPECTRAL_GAP {
            if repelling.replace(z).is_some() {
                return Err(Error::NotLoxodromic);
            }
        } else {
            positive.push(z);
        }
    }
    positive.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    // the small root is poorly conditioned when the large one is big; the
    // isometry pairs them as lambda and 1 / conj(lambda)
    let positive = positive.into_iter().map(|z| z / z.norm()).collect();
    match (attracting, repelling) {
        (Some(_), Some(repelling)) => Ok(Labeled { attracting: repelling.conj().inv(), repelling, positive }),
        _ => Err(Error::NotLoxodromic),
    }
}

/// Eigenvector frame of a regular loxodromic isometry.
pub fn eigen_frame(a: &HMatrix, field: Field) -> Result<LoxodromicFrame> {
    let class = classify_element(a, field)?;
    if class.kind != ElementKind::RegularLoxodromic {
        return Err(Error::NotLoxodromic);
    }
    let d = a.dim();
    let complex = field == Field::Complex;
    let (labeled, raw): (Labeled, Vec<HVector>) = if complex {
        let m = complex_part(a);
        let roots = poly_roots(&super::char_poly_of(&m))?.roots;
        let labeled = label(roots)?;
        let raw = ordered(&labeled)
            .iter()
            .map(|&l| {
                let v = eigenvector(&m, l, NULL_SPACE_TOL)?;
                Ok(HVector(v.iter().map(|&c| Quaternion::from(c)).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        (labeled, raw)
    } else {
        let m = complex_embedding(a).0;
        let roots = poly_roots(&super::char_poly(&complex_embedding(a)))?.roots;
        let upper: Vec<Complex64> = roots.into_iter().filter(|z| z.im > 0.0).collect();
        if upper.len() != d || upper.iter().any(|z| z.im <= SPECTRAL_GAP * z.norm()) {
            return Err(Error::NotLoxodromic);
        }
        let labeled = label(upper)?;
        let raw = ordered(&labeled)
            .iter()
            .map(|&l| {
                let v = eigenvector(&m, l, NULL_SPACE_TOL)?;
                Ok(HVector((0..d).map(|i| Quaternion::from_j_left(v[i], v[i + d])).collect()))
            })
            .collect::<Result<Vec<_>>>()?;
        (labeled, raw)
    };
    let eigenvalues = ordered(&labeled);
    if eigenvalues.len() != d {
        return Err(Error::NotLoxodromic);
    }
    let scale = a.max_abs().max(1.0);
    for (v, &l) in raw.iter().zip(&eigenvalues) {
        let res = a.mul_vec(v).sub(&v.scale_right(Quaternion::from(l))).norm() / v.norm();
        if res > RESIDUAL_TOL * scale {
            return Err(Error::DegenerateSpectrum(format!("eigenvector residual {res:.3e} for {l}")));
        }
    }
    let mut nus: Vec<Quaternion> = eigenvalues.iter().map(|&l| Quaternion::from(l)).collect();
    let mut vectors = raw;

    let rescale = |v: &mut HVector, nu: &mut Quaternion, s: Quaternion| {
        *v = v.scale_right(s);
        *nu = s.inv() * *nu * s;
    };

    let last = vectors[0][d - 1];
    let anchor = if last.norm() >= STANDARD_LIFT_FLOOR * vectors[0].norm() {
        LiftAnchor::Standard
    } else {
        LiftAnchor::MaxEntry
    };
    let pivot = match anchor {
        LiftAnchor::Standard => last,
        LiftAnchor::MaxEntry => vectors[0][vectors[0].argmax()],
    };
    rescale(&mut vectors[0], &mut nus[0], pivot.inv());
    if anchor == LiftAnchor::Standard {
        vectors[0][d - 1] = Quaternion::ONE;
    }

    let ra = form(&vectors[d - 1], &vectors[0]);
    if ra.norm() <= 1e-12 * vectors[d - 1].norm() * vectors[0].norm() {
        return Err(Error::NotLoxodromic);
    }
    let (head, tail) = vectors.split_at_mut(d - 1);
    rescale(&mut tail[0], &mut nus[d - 1], ra.inv());
    let _ = head;

    for k in 1..d - 1 {
        let m = vectors[k][vectors[k].argmax()];
        rescale(&mut vectors[k], &mut nus[k], m.conj().scale(1.0 / m.norm()));
        let q = form(&vectors[k], &vectors[k]).re();
        if q <= 0.0 {
            return Err(Error::NotLoxodromic);
        }
        rescale(&mut vectors[k], &mut nus[k], Quaternion::real(1.0 / q.sqrt()));
    }

    let mut points = Vec::with_capacity(d - 1);
    if complex {
        points.resize(d - 1, ProjectivePoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
    } else {
        for k in 0..d - 1 {
            points.push(point_of(eigenvalues[k], nus[k])?);
        }
    }
    Ok(LoxodromicFrame {
        field: if complex { Field::Complex } else { Field::Quaternion },
        matrix: a.clone(),
        vectors,
        eigenvalues,
        lift_eigenvalues: nus,
        projective_points: points,
        anchor,
    })
}

fn ordered(l: &Labeled) -> Vec<Complex64> {
    let mut out = vec![l.attracting];
    out.extend_from_slice(&l.positive);
    out.push(l.repelling);
    out
}

/// `C E(params) C^{-1}` for an isometry `C`.
pub fn build_from_frame(c: &HMatrix, params: &SpectralParams) -> Result<HMatrix> {
    params.validate()?;
    if params.phi.len() + 2 != c.dim() {
        return Err(Error::BadParams(format!(
            "expected {} positive angles, got {}",
            c.dim() - 2,
            params.phi.len()
        )));
    }
    check_isometry(c, ISOMETRY_TOL)?;
    Ok(c.mul(&diagonal_element(params)).mul(&c.isometry_inverse()))
}
