//! Cross ratios, angular invariants and the invariant tuple of a pair.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genericity::{genericity_report, GENERICITY_TOL};
use crate::gram::{normalize_lifts, AssociatedTuple, FrameLifts, Gauge};
use crate::pair::PairAnalysis;
use crate::quat::{rotation_between, Quaternion};
use crate::space::{form, inner, Field, HVector};
use crate::spectral::{complex_traces, point_of, real_trace, sigma, LoxodromicFrame, ProjectivePoint, RealTrace};

/// Relative size below which a Hermitian product counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;

fn nonvanishing(z: &HVector, w: &HVector) -> Result<Quaternion> {
    let g = inner(z, w)?;
    if g.norm() <= DEGENERACY_TOL * z.norm() * w.norm() {
        return Err(Error::DegenerateConfiguration("vanishing Hermitian product".into()));
    }
    Ok(g)
}

/// Quaternionic cross ratio `<z3,z1><z3,z2>^{-1}<z4,z2><z4,z1>^{-1}`.
pub fn cross_ratio(z1: &HVector, z2: &HVector, z3: &HVector, z4: &HVector) -> Result<Quaternion> {
    let d32 = nonvanishing(z3, z2)?;
    let d41 = nonvanishing(z4, z1)?;
    Ok(inner(z3, z1)? * d32.inv() * inner(z4, z2)? * d41.inv())
}

/// Hermitian triple product `<z1,z2><z3,z1><z2,z3>`.
///
/// With `<z, w> = w* H z` this is the order in which rescaling the lifts
/// acts by a single conjugation, so its similarity class is lift-independent.
pub fn triple_product(z1: &HVector, z2: &HVector, z3: &HVector) -> Result<Quaternion> {
    Ok(inner(z1, z2)? * inner(z3, z1)? * inner(z2, z3)?)
}

/// Angular invariant `arccos(Re(-T) / |T|)` of the triple product `T`, in `[0, pi]`.
pub fn angular_invariant(z1: &HVector, z2: &HVector, z3: &HVector) -> Result<f64> {
    // no zero divisors: the product vanishes only if a factor does
    let t = nonvanishing(z1, z2)? * nonvanishing(z3, z1)? * nonvanishing(z2, z3)?;
    Ok((-t.re() / t.norm()).clamp(-1.0, 1.0).acos())
}

/// Conjugacy invariants of a (weakly) non-singular pair.
///
/// Positive eigenvectors are listed in the order of the associated tuple:
/// matched ones by increasing frame index, then the leftover one. The `j`
/// index runs over those of `A`, `k` over those of `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantTuple {
    pub field: Field,
    pub n: usize,
    pub real_trace_a: RealTrace,
    pub real_trace_b: RealTrace,
    /// `tr(A^m)` for `m = 1..=(n+1)/2` (complex field only).
    pub complex_traces_a: Option<Vec<Complex64>>,
    pub complex_traces_b: Option<Vec<Complex64>>,
    pub sigma_a: Option<Complex64>,
    pub sigma_b: Option<Complex64>,
    /// Angular invariants of `(a_A, r_A, a_B)`, `(a_A, r_A, r_B)`, `(r_A, a_B, r_B)`.
    pub angular: [f64; 3],
    /// `X(p1,p2,p3,p4)`, `X(p1,p3,p2,p4)`, `X(p2,p4,p3,p1)`.
    pub cross_ratios: [Quaternion; 3],
    /// `X(p1,p2,p3,p_k)`, also written `X_{2k}`.
    pub alpha: Vec<Quaternion>,
    /// `X(p3,p4,p1,p_j)`, also written `X_{4j}`.
    pub beta: Vec<Quaternion>,
    /// `X(p3,p_k,p2,p_j)`, indexed `[j][k]`.
    pub mixed: Vec<Vec<Quaternion>>,
    pub eta_a: Vec<Quaternion>,
    pub eta_b: Vec<Quaternion>,
    /// `nu_i` with `A p_i = p_i nu_i` (or `B`) for the normalized lifts.
    pub lift_eigenvalues: Vec<Quaternion>,
    /// Eigenset points of `A` then of `B`, null pair first.
    pub projective_points: Vec<ProjectivePoint>,
    pub matching: Vec<(usize, usize)>,
}

impl InvariantTuple {
    pub fn x_2k(&self) -> &[Quaternion] {
        &self.alpha
    }

    pub fn x_4j(&self) -> &[Quaternion] {
        &self.beta
    }

    /// Quaternion entries determined by the Gram matrix alone.
    pub fn numerical_entries(&self) -> Vec<Quaternion> {
        let mut out = self.cross_ratios.to_vec();
        out.extend(&self.alpha);
        out.extend(&self.beta);
        out.extend(self.mixed.iter().flatten());
        out.extend(&self.eta_a);
        out.extend(&self.eta_b);
        out
    }

    /// Numerical entries followed by the lift eigenvalues.
    pub fn quaternion_entries(&self) -> Vec<Quaternion> {
        let mut out = self.numerical_entries();
        out.extend(&self.lift_eigenvalues);
        out
    }

    /// Real-valued and complex-valued entries, which must agree exactly.
    fn scalar_entries(&self) -> Vec<f64> {
        let mut out = self.real_trace_a.0.clone();
        out.extend(&self.real_trace_b.0);
        out.extend(self.angular);
        for c in [&self.complex_traces_a, &self.complex_traces_b].into_iter().flatten() {
            out.extend(c.iter().flat_map(|z| [z.re, z.im]));
        }
        for z in [self.sigma_a, self.sigma_b].into_iter().flatten() {
            out.extend([z.re, z.im]);
        }
        out
    }
}

/// Invariants of the pair of frames; the pair must be weakly non-singular.
pub fn pair_invariants(a: &LoxodromicFrame, b: &LoxodromicFrame) -> Result<InvariantTuple> {
    let report = genericity_report(a, b, GENERICITY_TOL)?;
    if !report.weakly_nonsingular {
        return Err(Error::NotWeaklyNonsingular);
    }
    invariants_of(&PairAnalysis { a: a.clone(), b: b.clone(), report })
}

/// Invariants from an existing analysis.
pub fn invariants_of(analysis: &PairAnalysis) -> Result<InvariantTuple> {
    let (used_a, used_b) = analysis.report.used_indices().ok_or(Error::NotWeaklyNonsingular)?;
    let (a, b) = (&analysis.a, &analysis.b);
    let tuple = normalize_lifts(&FrameLifts::from(a), &FrameLifts::from(b), &used_a, &used_b, Gauge::Standard)?;
    let mut inv = invariants_from_tuple(&tuple)?;
    inv.real_trace_a = real_trace(&a.matrix)?;
    inv.real_trace_b = real_trace(&b.matrix)?;
    if a.field == Field::Complex {
        inv.complex_traces_a = Some(complex_traces(&a.matrix)?);
        inv.complex_traces_b = Some(complex_traces(&b.matrix)?);
        inv.sigma_a = Some(sigma(&a.matrix)?);
        inv.sigma_b = Some(sigma(&b.matrix)?);
    }
    inv.projective_points = tuple_points(&tuple, a, b)?;
    inv.matching = analysis.report.matching.clone().unwrap_or_default();
    Ok(inv)
}

fn tuple_points(t: &AssociatedTuple, a: &LoxodromicFrame, b: &LoxodromicFrame) -> Result<Vec<ProjectivePoint>> {
    let n = t.n;
    let one = ProjectivePoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    if t.field == Field::Complex {
        return Ok(vec![one; 2 * n]);
    }
    let mut out = Vec::with_capacity(2 * n);
    for (frame, null_index, positive, slots) in
        [(a, 0, &t.a_positive, t.a_slots()), (b, 2, &t.b_positive, t.b_slots())]
    {
        out.push(point_of(frame.eigenvalues[0], t.eigenvalues[null_index])?);
        // frame order of the positive classes
        let mut order: Vec<(usize, usize)> = positive.iter().copied().zip(slots).collect();
        order.sort_unstable();
        for (class, slot) in order {
            out.push(point_of(frame.eigenvalues[class + 1], t.eigenvalues[slot])?);
        }
    }
    Ok(out)
}

/// Gram-determined entries of the tuple; traces and points are left empty.
pub fn invariants_from_tuple(t: &AssociatedTuple) -> Result<InvariantTuple> {
    let p = &t.lifts;
    let (p1, p2, p3, p4) = (&p[0], &p[1], &p[2], &p[3]);
    let a_slots = t.a_slots();
    let b_slots = t.b_slots();
    let angular = [
        angular_invariant(p1, p2, p3)?,
        angular_invariant(p1, p2, p4)?,
        angular_invariant(p2, p3, p4)?,
    ];
    let cross_ratios = [cross_ratio(p1, p2, p3, p4)?, cross_ratio(p1, p3, p2, p4)?, cross_ratio(p2, p4, p3, p1)?];
    let alpha = b_slots.iter().map(|&k| cross_ratio(p1, p2, p3, &p[k])).collect::<Result<Vec<_>>>()?;
    let beta = a_slots.iter().map(|&j| cross_ratio(p3, p4, p1, &p[j])).collect::<Result<Vec<_>>>()?;
    let mixed = a_slots
        .iter()
        .map(|&j| b_slots.iter().map(|&k| cross_ratio(p3, &p[k], p2, &p[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let eta = |base: &HVector, far: &HVector, v: &HVector| -> Result<Quaternion> {
        let g = form(v, v);
        if g.norm() <= DEGENERACY_TOL * v.norm().powi(2) {
            return Err(Error::DegenerateConfiguration("null positive lift".into()));
        }
        Ok(inner(base, v)? * nonvanishing(base, far)?.inv() * inner(v, far)? * g.inv())
    };
    let eta_a = a_slots.iter().map(|&j| eta(p3, p4, &p[j])).collect::<Result<Vec<_>>>()?;
    let eta_b = b_slots.iter().map(|&k| eta(p1, p2, &p[k])).collect::<Result<Vec<_>>>()?;
    Ok(InvariantTuple {
        field: t.field,
        n: t.n,
        real_trace_a: RealTrace(Vec::new()),
        real_trace_b: RealTrace(Vec::new()),
        complex_traces_a: None,
        complex_traces_b: None,
        sigma_a: None,
        sigma_b: None,
        angular,
        cross_ratios,
        alpha,
        beta,
        mixed,
        eta_a,
        eta_b,
        lift_eigenvalues: t.eigenvalues.clone(),
        projective_points: Vec::new(),
        matching: Vec::new(),
    })
}

/// Best unit `mu` with `mu^{-1} e mu = e'` entrywise, with the largest
/// relative mismatch it leaves.
///
/// `mu` is fixed by the entry with the largest imaginary part and, about
/// that axis, by the entry with the largest orthogonal component.
pub fn sp1_fit(e1: &[Quaternion], e2: &[Quaternion], tol: f64) -> (Quaternion, f64) {
    if e1.len() != e2.len() {
        return (Quaternion::ONE, f64::INFINITY);
    }
    let mismatch = |mu: Quaternion| {
        e1.iter()
            .zip(e2)
            .map(|(x, y)| x.conjugated_by(mu).dist(*y) / x.norm().max(y.norm()).max(1.0))
            .fold(0.0, f64::max)
    };
    let argmax = |vals: Vec<f64>| vals.into_iter().enumerate().fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let (ri, rmax) = argmax(e1.iter().map(|q| q.imag_norm()).collect());
    if rmax <= tol * e1[ri].norm().max(1.0) {
        return (Quaternion::ONE, mismatch(Quaternion::ONE));
    }
    let im2 = e2[ri].imag_norm();
    if im2 <= tol * e2[ri].norm().max(1.0) {
        return (Quaternion::ONE, mismatch(Quaternion::ONE));
    }
    let v = e1[ri].imag().scale(1.0 / rmax).imag_vec();
    let t = e2[ri].imag().scale(1.0 / im2).imag_vec();
    let mu0 = rotation_between(v, t);
    let perp = |q: Quaternion| -> [f64; 3] {
        let w = q.imag_vec();
        let d = w[0] * t[0] + w[1] * t[1] + w[2] * t[2];
        [w[0] - d * t[0], w[1] - d * t[1], w[2] - d * t[2]]
    };
    let len = |w: [f64; 3]| (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let (si, smax) = argmax(e1.iter().map(|q| len(perp(q.conjugated_by(mu0)))).collect());
    if smax <= 1e-6 * rmax.max(1.0) {
        return (mu0, mismatch(mu0));
    }
    let w2 = perp(e2[si]);
    let l2 = len(w2);
    if l2 <= 1e-9 * smax {
        return (mu0, mismatch(mu0));
    }
    let w1 = perp(e1[si].conjugated_by(mu0)).map(|c| c / smax);
    let w2 = w2.map(|c| c / l2);
    let dot = w1[0] * w2[0] + w1[1] * w2[1] + w1[2] * w2[2];
    // rotation about the axis; the antipodal case is a half turn
    let rho = if dot < -1.0 + 1e-12 { Quaternion::new(0.0, t[0], t[1], t[2]) } else { rotation_between(w1, w2) };
    let mu = mu0 * rho;
    (mu, mismatch(mu))
}

/// Unit `mu` with `mu^{-1} e mu = e'` for every pair of entries, if any.
pub fn sp1_conjugator(e1: &[Quaternion], e2: &[Quaternion], tol: f64) -> Option<Quaternion> {
    let (mu, res) = sp1_fit(e1, e2, tol);
    (res <= tol).then_some(mu)
}

/// Whether two tuples lie in one orbit of the unit quaternions acting by
/// conjugation on every quaternion entry, with the remaining entries equal.
pub fn sp1_orbit_equal(t1: &InvariantTuple, t2: &InvariantTuple, tol: f64) -> Option<Quaternion> {
    if t1.field != t2.field || t1.n != t2.n {
        return None;
    }
    let s1 = t1.scalar_entries();
    let s2 = t2.scalar_entries();
    if s1.len() != s2.len() || s1.iter().zip(&s2).any(|(x, y)| (x - y).abs() > tol * x.abs().max(y.abs()).max(1.0)) {
        return None;
    }
    let e1 = t1.quaternion_entries();
    let e2 = t2.quaternion_entries();
    match t1.field {
        Field::Complex => e1.iter().zip(&e2).all(|(&x, &y)| x.dist(y) <= tol * x.norm().max(y.norm()).max(1.0)).then_some(Quaternion::ONE),
        Field::Quaternion => sp1_conjugator(&e1, &e2, tol),
    }
}
