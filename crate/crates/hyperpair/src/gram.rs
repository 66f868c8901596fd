//! Normalized lifts, their Gram matrix, congruence of lift tuples and the
//! constructive conjugacy test for pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genericity::{project_onto, GENERICITY_TOL};
use crate::invariants::{invariants_of, sp1_fit, InvariantTuple};
use crate::pair::{Mode, Pair, PairAnalysis};
use crate::quat::Quaternion;
use crate::space::{check_isometry, form, Field, HMatrix, HVector};
use crate::spectral::{char_poly_of, complex_part, real_trace, LoxodromicFrame};

/// Relative size below which a normalizing product counts as zero.
pub const NORMALIZE_TOL: f64 = 1e-10;
/// Default tolerance of the conjugacy test.
pub const CONJUGACY_TOL: f64 = 1e-7;

/// Lifts of the eigenvectors of one element, in frame order, with `nu`
/// such that `A v = v nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLifts {
    pub vectors: Vec<HVector>,
    pub eigenvalues: Vec<Quaternion>,
    pub field: Field,
}

impl From<&LoxodromicFrame> for FrameLifts {
    fn from(f: &LoxodromicFrame) -> Self {
        FrameLifts { vectors: f.vectors.clone(), eigenvalues: f.lift_eigenvalues.clone(), field: f.field }
    }
}

impl FrameLifts {
    /// Lifts `v_i s_i`, eigenvalues `s_i^{-1} nu_i s_i`.
    pub fn rescaled(&self, s: &[Quaternion]) -> FrameLifts {
        FrameLifts {
            vectors: self.vectors.iter().zip(s).map(|(v, &si)| v.scale_right(si)).collect(),
            eigenvalues: self.eigenvalues.iter().zip(s).map(|(&nu, &si)| si.inv() * nu * si).collect(),
            field: self.field,
        }
    }

    fn n(&self) -> usize {
        self.vectors.len() - 1
    }
}

/// How the lift of the attracting point of `A` is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// Standard lift (last coordinate real positive), then a real rescaling.
    Standard,
    /// Keep the given phase; only a real rescaling.
    Keep,
}

/// Normalized lifts `p_1, ..., p_{2n+2}` of the fixed points of a pair.
///
/// Slots (0-based): `0..4` hold `a_A, r_A, a_B, r_B`; `4..n+2` the matched
/// positive vectors of `A`; `n+2..2n` those of `B`; `2n` and `2n+1` the
/// leftover positive vectors of `A` and `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociatedTuple {
    pub n: usize,
    pub field: Field,
    pub lifts: Vec<HVector>,
    /// `nu_i` with `A p_i = p_i nu_i` (slots of `A`) or `B p_i = p_i nu_i`.
    pub eigenvalues: Vec<Quaternion>,
    /// Positive-vector index (0-based) of `A` held by each `A` slot.
    pub a_positive: Vec<usize>,
    pub b_positive: Vec<usize>,
    /// Slots that the two leftover vectors were normalized against.
    pub leftover_anchors: [usize; 2],
}

impl AssociatedTuple {
    /// Slots of the positive vectors of `A`, in tuple order.
    pub fn a_slots(&self) -> Vec<usize> {
        let n = self.n;
        (4..n + 2).chain(std::iter::once(2 * n)).collect()
    }

    pub fn b_slots(&self) -> Vec<usize> {
        let n = self.n;
        (n + 2..2 * n).chain(std::iter::once(2 * n + 1)).collect()
    }

    /// Basis of eigenvectors of `A`: `p_1`, its positive slots, `p_2`.
    pub fn a_basis(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.a_slots()).chain(std::iter::once(1)).collect()
    }

    pub fn gram(&self) -> Vec<Vec<Quaternion>> {
        gram_matrix(&self.lifts)
    }

    /// Checks the value and sparsity pattern of the normalized Gram matrix.
    pub fn check_pattern(&self, tol: f64) -> Result<()> {
        let g = self.gram();
        let n = self.n;
        let fail = |what: String| Err(Error::PatternViolation(what));
        let is = |i: usize, j: usize, v: f64| g[i][j].dist(Quaternion::real(v)) <= tol * (1.0 + v.abs());
        for i in 0..g.len() {
            for j in 0..g.len() {
                if g[i][j].dist(g[j][i].conj()) > tol * g[i][j].norm().max(1.0) {
                    return fail(format!("not Hermitian at ({i},{j})"));
                }
            }
        }
        for i in 0..4 {
            if !is(i, i, 0.0) {
                return fail(format!("g{0}{0} = {1}", i + 1, g[i][i]));
            }
        }
        for j in 1..4 {
            if !is(0, j, 1.0) {
                return fail(format!("g1{} = {}", j + 1, g[0][j]));
            }
        }
        if (g[1][2].norm() - 1.0).abs() > tol {
            return fail(format!("|g23| = {}", g[1][2].norm()));
        }
        for j in 4..n + 2 {
            if !(is(0, j, 0.0) && is(1, j, 0.0) && is(2, j, 1.0)) {
                return fail(format!("column {} of A", j + 1));
            }
        }
        for k in n + 2..2 * n {
            if !(is(0, k, 1.0) && is(2, k, 0.0) && is(3, k, 0.0)) {
                return fail(format!("column {} of B", k + 1));
            }
        }
        let (sa, sb) = (self.a_slots(), self.b_slots());
        for side in [&sa, &sb] {
            for &i in side.iter() {
                for &j in side.iter() {
                    if i != j && !is(i, j, 0.0) {
                        return fail(format!("g{}{} = {}", i + 1, j + 1, g[i][j]));
                    }
                }
            }
        }
        if !is(2 * n, self.leftover_anchors[0], 1.0) || !is(2 * n + 1, self.leftover_anchors[1], 1.0) {
            return fail("leftover normalization".into());
        }
        Ok(())
    }
}

/// `g_ij = <p_i, p_j>`.
pub fn gram_matrix(lifts: &[HVector]) -> Vec<Vec<Quaternion>> {
    lifts.iter().map(|pi| lifts.iter().map(|pj| form(pi, pj)).collect()).collect()
}

/// `v s` with `<p, v s> = 1`, that is `s = <v, p>^{-1}`; also the scale `s`.
fn anchored(v: &HVector, p: &HVector) -> Option<(HVector, Quaternion)> {
    let g = form(v, p);
    if g.norm() <= NORMALIZE_TOL * v.norm() * p.norm() {
        return None;
    }
    let s = g.inv();
    Some((v.scale_right(s), s))
}

/// Rescales the lifts of a pair to the normalized form, using the positive
/// vectors `used_a`, `used_b` (0-based, increasing) of the flag matching.
pub fn normalize_lifts(
    a: &FrameLifts,
    b: &FrameLifts,
    used_a: &[usize],
    used_b: &[usize],
    gauge: Gauge,
) -> Result<AssociatedTuple> {
    let n = a.n();
    if b.n() != n || used_a.len() != n.saturating_sub(2) || used_b.len() != used_a.len() {
        return Err(Error::BadParams("inconsistent frame sizes or matching".into()));
    }
    let impossible = |what: &str| Error::NormalizationImpossible(what.to_string());
    let leftover = |used: &[usize]| (0..n - 1).find(|k| !used.contains(k)).ok_or_else(|| impossible("no leftover vector"));
    let left_a = leftover(used_a)?;
    let left_b = leftover(used_b)?;

    let raw_a = &a.vectors[0];
    let phase = match gauge {
        Gauge::Keep => Quaternion::ONE,
        Gauge::Standard => {
            let last = raw_a[raw_a.len() - 1];
            let pick = if last.norm() >= 1e-8 * raw_a.norm() { last } else { raw_a[raw_a.argmax()] };
            pick.conj().scale(1.0 / pick.norm())
        }
    };
    let build = |t: f64| -> Result<Vec<(HVector, Quaternion)>> {
        let s1 = phase * t;
        let p1 = raw_a.scale_right(s1);
        let mut out = vec![(p1.clone(), s1)];
        for v in [&a.vectors[n], &b.vectors[0], &b.vectors[n]] {
            out.push(anchored(v, &p1).ok_or_else(|| impossible("fixed point orthogonal to a_A"))?);
        }
        Ok(out)
    };
    let first = build(1.0)?;
    let g23 = form(&first[1].0, &first[2].0).norm();
    if g23 <= NORMALIZE_TOL {
        return Err(impossible("r_A orthogonal to a_B"));
    }
    let nulls = build(g23.sqrt())?;
    let (p1, p3) = (nulls[0].0.clone(), nulls[2].0.clone());

    let mut lifts: Vec<HVector> = nulls.iter().map(|x| x.0.clone()).collect();
    let mut scales: Vec<Quaternion> = nulls.iter().map(|x| x.1).collect();
    let mut eig = vec![a.eigenvalues[0], a.eigenvalues[n], b.eigenvalues[0], b.eigenvalues[n]];
    for &j in used_a {
        let (v, s) = anchored(&a.vectors[j + 1], &p3).ok_or_else(|| impossible("matched vector of A orthogonal to a_B"))?;
        lifts.push(v);
        scales.push(s);
        eig.push(a.eigenvalues[j + 1]);
    }
    for &k in used_b {
        let (v, s) = anchored(&b.vectors[k + 1], &p1).ok_or_else(|| impossible("matched vector of B orthogonal to a_A"))?;
        lifts.push(v);
        scales.push(s);
        eig.push(b.eigenvalues[k + 1]);
    }
    // leftovers: first admissible anchor in a fixed order
    let a_anchor_order: Vec<usize> = [2, 3].into_iter().chain(n + 2..2 * n).collect();
    let b_anchor_order: Vec<usize> = [0, 1].into_iter().chain(4..n + 2).collect();
    let mut anchors = [0; 2];
    for (side, (frame, idx, order)) in [(a, left_a, &a_anchor_order), (b, left_b, &b_anchor_order)].into_iter().enumerate() {
        let v = &frame.vectors[idx + 1];
        let (slot, (w, s)) = order
            .iter()
            .find_map(|&slot| anchored(v, &lifts[slot]).map(|r| (slot, r)))
            .ok_or_else(|| impossible("leftover vector orthogonal to every anchor"))?;
        anchors[side] = slot;
        lifts.push(w);
        scales.push(s);
        eig.push(frame.eigenvalues[idx + 1]);
    }
    let eigenvalues = eig.iter().zip(&scales).map(|(&nu, &s)| s.inv() * nu * s).collect();
    let mut a_positive = used_a.to_vec();
    a_positive.push(left_a);
    let mut b_positive = used_b.to_vec();
    b_positive.push(left_b);
    Ok(AssociatedTuple { n, field: a.field, lifts, eigenvalues, a_positive, b_positive, leftover_anchors: anchors })
}

/// Normalized tuple of an analyzed pair.
pub fn associated_tuple(analysis: &PairAnalysis) -> Result<AssociatedTuple> {
    let (ua, ub) = analysis.report.used_indices().ok_or(Error::NotWeaklyNonsingular)?;
    normalize_lifts(&FrameLifts::from(&analysis.a), &FrameLifts::from(&analysis.b), &ua, &ub, Gauge::Standard)
}

fn euclid_residual(v: &HVector, basis: &[HVector]) -> HVector {
    let mut r = v.clone();
    for u in basis {
        let c = r.euclid_dot(u);
        r = r.sub(&u.scale_right(c));
    }
    r
}

/// H-orthonormal basis of the H-orthogonal complement of `span`.
fn orthonormal_complement(span: &[HVector], d: usize) -> Result<Vec<HVector>> {
    let mut out: Vec<HVector> = Vec::new();
    while span.len() + out.len() < d {
        let mut all: Vec<HVector> = span.to_vec();
        all.extend(out.iter().cloned());
        let mut best: Option<(f64, HVector)> = None;
        for m in 0..d {
            let e = HVector::basis(d, m);
            let x = e.sub(&project_onto(&e, &all)?);
            let q = form(&x, &x).re();
            if best.as_ref().is_none_or(|b| q > b.0) {
                best = Some((q, x));
            }
        }
        let (q, x) = best.ok_or(Error::SingularBasis)?;
        if q <= 1e-10 {
            return Err(Error::SingularBasis);
        }
        out.push(x.scale_right(Quaternion::real(1.0 / q.sqrt())));
    }
    Ok(out)
}

/// Isometry `C` with `C src_i = dst_i conj(mu)` for every `i`, if one exists.
///
/// A spanning subset of `src` is taken greedily in the given order and
/// completed by H-orthonormal complements. The result is verified as an
/// isometry and on every pair.
pub fn congruence_from_lifts(src: &[HVector], dst: &[HVector], mu: Quaternion, tol: f64) -> Result<Option<HMatrix>> {
    if src.is_empty() || src.len() != dst.len() {
        return Err(Error::BadParams("lift lists differ in length".into()));
    }
    let d = src[0].len();
    let mubar = mu.conj();
    let targets: Vec<HVector> = dst.iter().map(|w| w.scale_right(mubar)).collect();
    let mut ortho: Vec<HVector> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    for (i, v) in src.iter().enumerate() {
        if chosen.len() == d {
            break;
        }
        let r = euclid_residual(v, &ortho);
        let rn = r.norm();
        if rn > 1e-6 * v.norm() {
            ortho.push(r.scale_right(Quaternion::real(1.0 / rn)));
            chosen.push(i);
        }
    }
    let s_src: Vec<HVector> = chosen.iter().map(|&i| src[i].clone()).collect();
    let s_dst: Vec<HVector> = chosen.iter().map(|&i| targets[i].clone()).collect();
    let mut cols_src = s_src.clone();
    let mut cols_dst = s_dst.clone();
    if chosen.len() < d {
        cols_src.extend(orthonormal_complement(&s_src, d)?);
        cols_dst.extend(orthonormal_complement(&s_dst, d)?);
    }
    let p = HMatrix::from_columns(&cols_src);
    let q = HMatrix::from_columns(&cols_dst);
    let c = q.mul(&p.inverse()?);
    if check_isometry(&c, tol).is_err() {
        return Ok(None);
    }
    let ok = src
        .iter()
        .zip(&targets)
        .all(|(v, w)| c.mul_vec(v).sub(w).norm() <= tol * w.norm().max(v.norm()).max(1.0));
    Ok(ok.then_some(c))
}

fn gram_entries(t: &AssociatedTuple) -> Vec<Quaternion> {
    let g = t.gram();
    let mut out = Vec::new();
    for i in 0..g.len() {
        for j in i..g.len() {
            out.push(g[i][j]);
        }
    }
    out.extend(&t.eigenvalues);
    out
}

/// Isometry carrying the lifts of `t` onto those of `t2` (up to one unit
/// scalar), if the Gram matrices and lift eigenvalues lie in one orbit.
pub fn congruence_from_tuples(t: &AssociatedTuple, t2: &AssociatedTuple, tol: f64) -> Result<Option<HMatrix>> {
    if t.n != t2.n || t.field != t2.field {
        return Ok(None);
    }
    let e1 = gram_entries(t);
    let e2 = gram_entries(t2);
    let mu = match t.field {
        Field::Complex => Quaternion::ONE,
        Field::Quaternion => match sp1_fit(&e1, &e2, tol) {
            (mu, res) if res <= tol => mu,
            _ => return Ok(None),
        },
    };
    if e1.iter().zip(&e2).any(|(x, y)| x.conjugated_by(mu).dist(*y) > tol * x.norm().max(1.0)) {
        return Ok(None);
    }
    congruence_with(t, t2, mu, tol)
}

/// Congruence built on the eigenbasis of `A`, checked on every lift.
fn congruence_with(t: &AssociatedTuple, t2: &AssociatedTuple, mu: Quaternion, tol: f64) -> Result<Option<HMatrix>> {
    let order: Vec<usize> = t.a_basis().into_iter().chain(2..4).chain(t.b_slots()).collect();
    let src: Vec<HVector> = order.iter().map(|&i| t.lifts[i].clone()).collect();
    let dst: Vec<HVector> = order.iter().map(|&i| t2.lifts[i].clone()).collect();
    congruence_from_lifts(&src, &dst, mu, tol)
}

/// Lifts `p_1..p_4` with `<p_1, p_k> = 1` and `|<p_2, p_3>| = 1`.
pub fn normalize_quadruple(z: &[HVector; 4]) -> Result<[HVector; 4]> {
    let build = |t: f64| -> Result<[HVector; 4]> {
        let p1 = z[0].scale_right(Quaternion::real(t));
        let mut out = [p1.clone(), p1.clone(), p1.clone(), p1.clone()];
        for k in 1..4 {
            out[k] = anchored(&z[k], &p1)
                .ok_or_else(|| Error::DegenerateConfiguration("coincident boundary points".into()))?
                .0;
        }
        Ok(out)
    };
    let first = build(1.0)?;
    let g = form(&first[1], &first[2]).norm();
    if g <= NORMALIZE_TOL {
        return Err(Error::DegenerateConfiguration("coincident boundary points".into()));
    }
    build(g.sqrt())
}

/// Isometry `h` with `h(z_i) = w_i` projectively for two quadruples of
/// distinct boundary points, or `None` when their invariants differ.
pub fn quadruple_congruence(z: &[HVector; 4], w: &[HVector; 4], field: Field, tol: f64) -> Result<Option<HMatrix>> {
    let p = normalize_quadruple(z)?;
    let q = normalize_quadruple(w)?;
    let entries = |p: &[HVector; 4]| vec![form(&p[1], &p[2]), form(&p[1], &p[3]), form(&p[2], &p[3])];
    let (e1, e2) = (entries(&p), entries(&q));
    let mu = match field {
        Field::Complex => Quaternion::ONE,
        Field::Quaternion => sp1_fit(&e1, &e2, tol).0,
    };
    if e1.iter().zip(&e2).any(|(x, y)| x.conjugated_by(mu).dist(*y) > tol * x.norm().max(1.0)) {
        return Ok(None);
    }
    congruence_from_lifts(&p, &q, mu, tol)
}

/// Stage at which the conjugacy test stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    RealTrace,
    Tuple,
    ProjectivePoints,
    Congruence,
    Verified,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::RealTrace => "real-trace",
            Stage::Tuple => "tuple",
            Stage::ProjectivePoints => "projective-points",
            Stage::Congruence => "congruence",
            Stage::Verified => "verified",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyOutcome {
    pub conjugate: bool,
    pub conjugator: Option<HMatrix>,
    pub stage: Stage,
    /// Conjugation residual when conjugate; otherwise the mismatch that
    /// stopped the test.
    pub residual: f64,
}

impl ConjugacyOutcome {
    fn rejected(stage: Stage, residual: f64) -> Self {
        ConjugacyOutcome { conjugate: false, conjugator: None, stage, residual }
    }
}

fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() {
        return f64::INFINITY;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0)).fold(0.0, f64::max)
}

fn spectral_mismatch(p: &Pair, q: &Pair) -> Result<f64> {
    match p.space.field {
        Field::Quaternion => Ok(rel_diff(&real_trace(&p.a)?.0, &real_trace(&q.a)?.0)
            .max(rel_diff(&real_trace(&p.b)?.0, &real_trace(&q.b)?.0))),
        Field::Complex => {
            let coeffs = |m: &HMatrix| -> Vec<f64> {
                char_poly_of(&complex_part(m)).iter().flat_map(|z| [z.re, z.im]).collect()
            };
            Ok(rel_diff(&coeffs(&p.a), &coeffs(&q.a)).max(rel_diff(&coeffs(&p.b), &coeffs(&q.b))))
        }
    }
}

/// Quaternion entries compared in the tuple stage.
fn compared_entries(t: &InvariantTuple, mode: Mode) -> Vec<Quaternion> {
    match (t.field, mode) {
        (_, Mode::Weak) => t.numerical_entries(),
        (Field::Complex, Mode::Strong) => {
            let mut out = vec![t.cross_ratios[0], t.cross_ratios[1]];
            out.extend(&t.alpha[..t.n - 2]);
            out.extend(&t.beta[..t.n - 2]);
            out
        }
        (Field::Quaternion, Mode::Strong) => {
            let mut out = t.cross_ratios.to_vec();
            out.extend(&t.alpha[..t.n - 2]);
            out.extend(&t.beta[..t.n - 2]);
            out
        }
    }
}

fn compared_angles(t: &InvariantTuple, mode: Mode) -> Vec<f64> {
    match (t.field, mode) {
        (Field::Complex, Mode::Strong) => vec![t.angular[0]],
        _ => t.angular.to_vec(),
    }
}

/// Decides whether `(A', B')` is conjugate to `(A, B)`; when it is, returns a
/// verified conjugator `C` with `C A C^{-1} = A'` and `C B C^{-1} = B'`.
pub fn conjugacy_test(p: &Pair, q: &Pair, mode: Mode, tol: f64) -> Result<ConjugacyOutcome> {
    if p.space.n != q.space.n {
        return Err(Error::DimensionMismatch { expected: p.space.dim(), got: q.space.dim() });
    }
    if p.space.field != q.space.field {
        return Err(Error::WrongField(p.space.field.name()));
    }
    let first = p.analyze(GENERICITY_TOL)?;
    first.require(mode)?;
    let spectral = spectral_mismatch(p, q)?;
    if spectral > tol {
        return Ok(ConjugacyOutcome::rejected(Stage::RealTrace, spectral));
    }
    let second = match q.analyze(GENERICITY_TOL) {
        Ok(s) if s.satisfies(mode) => s,
        Ok(_) | Err(Error::NotLoxodromic) | Err(Error::DegenerateSpectrum(_)) => {
            return Ok(ConjugacyOutcome::rejected(Stage::Tuple, f64::INFINITY))
        }
        Err(e) => return Err(e),
    };
    let (t1, t2) = (invariants_of(&first)?, invariants_of(&second)?);
    if t1.matching != t2.matching {
        return Ok(ConjugacyOutcome::rejected(Stage::Tuple, f64::INFINITY));
    }
    let angles = rel_diff(&compared_angles(&t1, mode), &compared_angles(&t2, mode));
    if angles > tol {
        return Ok(ConjugacyOutcome::rejected(Stage::Tuple, angles));
    }
    let (e1, e2) = (compared_entries(&t1, mode), compared_entries(&t2, mode));
    let (mut mu, res) = match p.space.field {
        Field::Complex => (Quaternion::ONE, entry_mismatch(&e1, &e2, Quaternion::ONE)),
        Field::Quaternion => sp1_fit(&e1, &e2, tol),
    };
    if res > tol {
        return Ok(ConjugacyOutcome::rejected(Stage::Tuple, res));
    }
    if p.space.field == Field::Quaternion {
        let mut f1 = e1.clone();
        f1.extend(&t1.lift_eigenvalues);
        let mut f2 = e2.clone();
        f2.extend(&t2.lift_eigenvalues);
        let (m, res) = sp1_fit(&f1, &f2, tol);
        if res > tol {
            return Ok(ConjugacyOutcome::rejected(Stage::ProjectivePoints, res));
        }
        mu = m;
    }
    let (a1, a2) = (associated_tuple(&first)?, associated_tuple(&second)?);
    let c = congruence_with(&a1, &a2, mu, tol)?.ok_or(Error::VerificationFailed(f64::INFINITY))?;
    let c = polish_conjugator(&c, p, q);
    let ci = c.isometry_inverse();
    let residual = c.mul(&p.a).mul(&ci).max_abs_diff(&q.a).max(c.mul(&p.b).mul(&ci).max_abs_diff(&q.b));
    let scale = q.a.max_abs().max(q.b.max_abs()).max(1.0);
    if residual > tol * scale {
        return Err(Error::VerificationFailed(residual));
    }
    Ok(ConjugacyOutcome { conjugate: true, conjugator: Some(c), stage: Stage::Verified, residual })
}

/// Least-squares corrections of `C` toward `C A = A' C`, `C B = B' C`,
/// then the real rescaling that makes `C` an isometry.
///
/// Corrections are minimum-norm, so they do not move `C` along the
/// centralizer of the pair. Complex pairs keep complex entries.
fn polish_conjugator(c: &HMatrix, p: &Pair, q: &Pair) -> HMatrix {
    let d = c.dim();
    let units: &[Quaternion] = match p.space.field {
        Field::Complex => &[Quaternion::ONE, Quaternion::I],
        Field::Quaternion => &[Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K],
    };
    let residual = |m: &HMatrix| -> Vec<f64> {
        let ra = m.mul(&p.a).sub(&q.a.mul(m));
        let rb = m.mul(&p.b).sub(&q.b.mul(m));
        ra.entries().iter().chain(rb.entries()).flat_map(|x| [x.w, x.x, x.y, x.z]).collect()
    };
    let unknowns = units.len() * d * d;
    let rows = 8 * d * d;
    let mut jac = DMatrix::<f64>::zeros(rows, unknowns);
    let mut col = 0;
    for r in 0..d {
        for s in 0..d {
            for &u in units {
                let mut e = HMatrix::zeros(d);
                e[(r, s)] = u;
                // the map is linear, so the residual of `e` is its column
                for (row, v) in residual(&e).into_iter().enumerate() {
                    jac[(row, col)] = v;
                }
                col += 1;
            }
        }
    }
    let svd = jac.svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max();
    let mut cur = c.clone();
    for _ in 0..2 {
        let r = DVector::from_vec(residual(&cur));
        let Ok(delta) = svd.solve(&r, cutoff) else { return c.clone() };
        let mut next = cur.clone();
        let mut k = 0;
        for i in 0..d {
            for j in 0..d {
                for &u in units {
                    next[(i, j)] = next[(i, j)] - u * delta[k];
                    k += 1;
                }
            }
        }
        cur = next;
    }
    // C* H C = c^2 H for an intertwiner in the real centralizer direction
    let h = crate::space::form_matrix(d);
    let m = h.mul(&cur.adjoint()).mul(&h).mul(&cur);
    let scale2 = (0..d).map(|i| m[(i, i)].re()).sum::<f64>() / d as f64;
    if !(scale2 > 0.0) {
        return c.clone();
    }
    let out = cur.scale_right(Quaternion::real(1.0 / scale2.sqrt()));
    let before = c.mul(&p.a).mul(&c.isometry_inverse()).max_abs_diff(&q.a);
    let after = out.mul(&p.a).mul(&out.isometry_inverse()).max_abs_diff(&q.a);
    if after <= before { out } else { c.clone() }
}

fn entry_mismatch(e1: &[Quaternion], e2: &[Quaternion], mu: Quaternion) -> f64 {
    if e1.len() != e2.len() {
        return f64::INFINITY;
    }
    e1.iter()
        .zip(e2)
        .map(|(x, y)| x.conjugated_by(mu).dist(*y) / x.norm().max(y.norm()).max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{random_isometry, random_unit, HermitianSpace};
    use crate::spectral::{diagonal_element, SpectralParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_pair(n: usize, field: Field, seed: u64) -> Pair {
        let s = HermitianSpace::new(n, field).unwrap();
        let phi: Vec<f64> = (0..n - 1).map(|k| 0.4 + 0.9 * k as f64).collect();
        let ea = diagonal_element(&SpectralParams { r: 0.5, theta: 0.7, phi: phi.clone() });
        let eb = diagonal_element(&SpectralParams { r: 0.4, theta: 1.3, phi: phi.iter().map(|x| x + 0.2).collect() });
        let (q1, q2) = (random_isometry(&s, seed).unwrap(), random_isometry(&s, seed + 1000).unwrap());
        Pair::new(s, q1.mul(&ea).mul(&q1.isometry_inverse()), q2.mul(&eb).mul(&q2.isometry_inverse())).unwrap()
    }

    #[test]
    fn normalized_pattern_holds() {
        for (n, field) in [(2, Field::Quaternion), (3, Field::Quaternion), (4, Field::Quaternion), (3, Field::Complex)] {
            for seed in 0..5 {
                let a = sample_pair(n, field, seed).analyze(GENERICITY_TOL).unwrap();
                let t = associated_tuple(&a).unwrap();
                assert_eq!(t.lifts.len(), 2 * n + 2);
                t.check_pattern(1e-9).unwrap();
                // standard gauge: last coordinate of p1 real positive
                let last = t.lifts[0][n];
                assert!(last.imag_norm() < 1e-9 * last.norm() && last.re() > 0.0);
                // lift eigenvalues are eigenvalues of the normalized lifts
                for (i, v) in t.lifts.iter().enumerate() {
                    let m = if i < 2 || t.a_slots().contains(&i) { &a.a.matrix } else { &a.b.matrix };
                    assert!(m.mul_vec(v).sub(&v.scale_right(t.eigenvalues[i])).norm() < 1e-8 * v.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn normalization_is_idempotent() {
        let a = sample_pair(3, Field::Quaternion, 4).analyze(GENERICITY_TOL).unwrap();
        let t = associated_tuple(&a).unwrap();
        let lifts = |slots: [usize; 4], ev: &[Quaternion]| FrameLifts {
            vectors: slots.iter().map(|&i| t.lifts[i].clone()).collect(),
            eigenvalues: slots.iter().map(|&i| ev[i]).collect(),
            field: Field::Quaternion,
        };
        let (ua, ub) = a.report.used_indices().unwrap();
        // rebuild the frame order from the tuple slots
        let mut sa = [0, 0, 0, 1];
        let mut sb = [2, 0, 0, 3];
        for (pos, slot) in t.a_positive.iter().zip(t.a_slots()) {
            sa[pos + 1] = slot;
        }
        for (pos, slot) in t.b_positive.iter().zip(t.b_slots()) {
            sb[pos + 1] = slot;
        }
        let again =
            normalize_lifts(&lifts(sa, &t.eigenvalues), &lifts(sb, &t.eigenvalues), &ua, &ub, Gauge::Keep).unwrap();
        for (x, y) in t.lifts.iter().zip(&again.lifts) {
            assert!(x.sub(y).norm() < 1e-10 * x.norm().max(1.0));
        }
    }

    #[test]
    fn rescaled_lifts_renormalize_up_to_one_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..20 {
            let a = sample_pair(3, Field::Quaternion, seed).analyze(GENERICITY_TOL).unwrap();
            let (ua, ub) = a.report.used_indices().unwrap();
            let (la, lb) = (FrameLifts::from(&a.a), FrameLifts::from(&a.b));
            let base = normalize_lifts(&la, &lb, &ua, &ub, Gauge::Keep).unwrap();
            let sa: Vec<Quaternion> = (0..4).map(|_| random_unit(&mut rng, Field::Quaternion) * 1.9).collect();
            let sb: Vec<Quaternion> = (0..4).map(|_| random_unit(&mut rng, Field::Quaternion) * 0.6).collect();
            let moved = normalize_lifts(&la.rescaled(&sa), &lb.rescaled(&sb), &ua, &ub, Gauge::Keep).unwrap();
            // p'_1 = p_1 lambda for a single unit lambda
            let k = base.lifts[0].argmax();
            let lambda = base.lifts[0][k].inv() * moved.lifts[0][k];
            assert!((lambda.norm() - 1.0).abs() < 1e-10);
            for (x, y) in base.lifts.iter().zip(&moved.lifts) {
                assert!(x.scale_right(lambda).sub(y).norm() < 1e-10 * x.norm().max(1.0));
            }
        }
    }

    #[test]
    fn gram_of_conjugate_pair_is_unit_conjugate() {
        let s = HermitianSpace::new(3, Field::Quaternion).unwrap();
        let p = sample_pair(3, Field::Quaternion, 9);
        let t = associated_tuple(&p.analyze(GENERICITY_TOL).unwrap()).unwrap();
        let q = random_isometry(&s, 123).unwrap();
        let t2 = associated_tuple(&p.conjugate_by(&q).analyze(GENERICITY_TOL).unwrap()).unwrap();
        let (mu, res) = sp1_fit(&gram_entries(&t), &gram_entries(&t2), 1e-8);
        assert!(res < 1e-8, "{res}");
        let g1 = t.gram();
        let g2 = t2.gram();
        for i in 0..g1.len() {
            for j in 0..g1.len() {
                assert!(g1[i][j].conjugated_by(mu).dist(g2[i][j]) < 1e-8 * g1[i][j].norm().max(1.0));
            }
        }
    }

    #[test]
    fn congruence_of_tuples() {
        let s = HermitianSpace::new(3, Field::Quaternion).unwrap();
        let p = sample_pair(3, Field::Quaternion, 2);
        let t = associated_tuple(&p.analyze(GENERICITY_TOL).unwrap()).unwrap();
        let id = congruence_from_tuples(&t, &t, 1e-9).unwrap().unwrap();
        assert!(id.max_abs_diff(&HMatrix::identity(4)) < 1e-9);
        let q = random_isometry(&s, 55).unwrap();
        let t2 = associated_tuple(&p.conjugate_by(&q).analyze(GENERICITY_TOL).unwrap()).unwrap();
        let c = congruence_from_tuples(&t, &t2, 1e-8).unwrap().unwrap();
        assert!(check_isometry(&c, 1e-8).is_ok());
        // every lift, leftovers included, is carried to its partner line
        for (v, w) in t.lifts.iter().zip(&t2.lifts) {
            assert!(crate::genericity::same_point(&c.mul_vec(v), w, 1e-8));
        }
        let mut bad = t2.clone();
        bad.lifts[3] = bad.lifts[3].add(&bad.lifts[1].scale_right(Quaternion::real(1e-3)));
        assert!(congruence_from_tuples(&t, &bad, 1e-8).unwrap().is_none());
    }

    #[test]
    fn conjugacy_round_trip_and_rejection() {
        for (n, field) in [(3, Field::Quaternion), (2, Field::Quaternion), (3, Field::Complex), (4, Field::Complex)] {
            let s = HermitianSpace::new(n, field).unwrap();
            let p = sample_pair(n, field, 21);
            let same = conjugacy_test(&p, &p, Mode::Weak, CONJUGACY_TOL).unwrap();
            assert!(same.conjugate);
            let q = random_isometry(&s, 8).unwrap();
            for mode in [Mode::Weak, Mode::Strong] {
                let out = conjugacy_test(&p, &p.conjugate_by(&q), mode, CONJUGACY_TOL).unwrap();
                assert!(out.conjugate && out.residual <= 1e-7, "{n} {field:?} {mode:?}: {out:?}");
            }
            let other = sample_pair(n, field, 22);
            let out = conjugacy_test(&p, &other, Mode::Weak, CONJUGACY_TOL).unwrap();
            assert!(!out.conjugate);
            assert_eq!(out.stage, Stage::Tuple);
        }
    }

    #[test]
    fn quadruples_of_boundary_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for field in [Field::Quaternion, Field::Complex] {
            let s = HermitianSpace::new(4, field).unwrap();
            let z: [HVector; 4] = std::array::from_fn(|_| crate::space::random_boundary_point(&mut rng, &s));
            let q = random_isometry(&s, 31).unwrap();
            let w: [HVector; 4] = std::array::from_fn(|i| q.mul_vec(&z[i]).scale_right(random_unit(&mut rng, field)));
            let h = quadruple_congruence(&z, &w, field, 1e-8).unwrap().expect("congruent");
            for i in 0..4 {
                assert!(crate::genericity::same_point(&h.mul_vec(&z[i]), &w[i], 1e-8));
            }
            let mut w2 = w.clone();
            w2[3] = crate::space::random_boundary_point(&mut rng, &s);
            assert!(quadruple_congruence(&z, &w2, field, 1e-8).unwrap().is_none());
        }
    }
}
