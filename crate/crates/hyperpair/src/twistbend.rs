//! Twist-bend elements along a loxodromic boundary curve, gluing of pants
//! groups and assembly of surface-group representations (`n = 3`).

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genericity::{gram_rank, GENERICITY_TOL};
use crate::invariants::{angular_invariant, cross_ratio};
use crate::pair::{Mode, Pair};
use crate::quat::{similarity_representative, Quaternion};
use crate::space::{Field, HMatrix, HVector, HermitianSpace};
use crate::spectral::{diagonal_element, eigen_frame, point_of, LoxodromicFrame, ProjectivePoint, SpectralParams};

/// Tolerance for projective-point consistency and boundary compatibility.
pub const TWIST_TOL: f64 = 1e-8;

/// Twist-bend parameters `(t, psi, xi_1, xi_2, k_1, k_2, k_3)`.
///
/// `k` holds the points of the null pair and of the two positive classes,
/// in the order of the frame of the element the twist is oriented with.
/// When absent it is filled in from that frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistBendParams {
    pub t: f64,
    pub psi: f64,
    pub xi: [f64; 2],
    #[serde(default)]
    pub k: Option<[ProjectivePoint; 3]>,
}

impl TwistBendParams {
    /// Parameters with the projective points forced by `frame`.
    pub fn oriented(t: f64, psi: f64, xi: [f64; 2], frame: &LoxodromicFrame) -> Result<Self> {
        let bare = TwistBendParams { t, psi, xi, k: None };
        bare.validate()?;
        let k = complete_points(&bare, frame)?;
        Ok(TwistBendParams { k: Some(k), ..bare })
    }

    pub fn identity(frame: &LoxodromicFrame) -> Result<Self> {
        TwistBendParams::oriented(1.0, 0.0, [0.0, 0.0], frame)
    }

    /// Parameters of the inverse element, oriented with the same frame.
    pub fn inverse(&self, frame: &LoxodromicFrame) -> Result<Self> {
        TwistBendParams::oriented(1.0 / self.t, -self.psi, [-self.xi[0], -self.xi[1]], frame)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::BadParams(format!("t = {} must be positive", self.t)));
        }
        let pi = std::f64::consts::PI;
        for a in [self.psi, self.xi[0], self.xi[1]] {
            if !(-pi..=pi).contains(&a) {
                return Err(Error::BadParams(format!("angle {a} outside [-pi, pi]")));
            }
        }
        Ok(())
    }

    fn diagonal(&self) -> HMatrix {
        diagonal_element(&SpectralParams { r: self.t, theta: self.psi, phi: self.xi.to_vec() })
    }
}

fn require_three(n: usize) -> Result<()> {
    if n != 3 {
        return Err(Error::WrongDimension(n));
    }
    Ok(())
}

/// `Q E(t, psi, xi) Q^{-1}` with `Q` the frame matrix of `frame`.
fn raw_element(kappa: &TwistBendParams, frame: &LoxodromicFrame) -> HMatrix {
    let q = frame.frame_matrix();
    q.mul(&kappa.diagonal()).mul(&q.isometry_inverse())
}

/// Projective points of the twist element; `None` for real eigenvalue classes.
fn element_points(kappa: &TwistBendParams, frame: &LoxodromicFrame, k: &HMatrix) -> Result<[Option<ProjectivePoint>; 3]> {
    if frame.field == Field::Complex {
        let one = ProjectivePoint::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        return Ok([Some(one); 3]);
    }
    let entries = [Quaternion::polar(kappa.t, kappa.psi), Quaternion::polar(1.0, kappa.xi[0]), Quaternion::polar(1.0, kappa.xi[1])];
    let mut out = [None; 3];
    for (slot, d) in entries.into_iter().enumerate() {
        let rep = similarity_representative(d).representative;
        if rep.im <= 1e-12 * rep.norm().max(1.0) {
            continue;
        }
        let v = &frame.vectors[slot];
        let i = v.argmax();
        let nu = v[i].inv() * k.mul_vec(v)[i];
        out[slot] = Some(point_of(rep, nu)?);
    }
    Ok(out)
}

fn complete_points(kappa: &TwistBendParams, frame: &LoxodromicFrame) -> Result<[ProjectivePoint; 3]> {
    let k = raw_element(kappa, frame);
    let computed = element_points(kappa, frame, &k)?;
    // classes with a real eigenvalue carry the frame's own point
    Ok(std::array::from_fn(|s| computed[s].unwrap_or(frame.projective_points[s])))
}

/// Twist-bend element oriented consistently with the frame of `A`.
pub fn twist_bend_element(kappa: &TwistBendParams, frame: &LoxodromicFrame) -> Result<HMatrix> {
    require_three(frame.n())?;
    kappa.validate()?;
    let k = raw_element(kappa, frame);
    if let Some(given) = &kappa.k {
        let computed = element_points(kappa, frame, &k)?;
        for (g, c) in given.iter().zip(&computed) {
            if let Some(c) = c {
                if !g.equals(c, TWIST_TOL) {
                    return Err(Error::InconsistentProjectivePoints);
                }
            }
        }
    }
    Ok(k)
}

/// `X(a_A, r_A, a_B, K r_C)`, `X(a_A, K r_C, a_B, r_A)`, `X(r_A, K r_C, a_B, a_A)`,
/// `A(a_A, r_A, K r_C)` and `A(r_A, K r_C, a_B)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildeInvariants {
    pub cross_ratios: [Quaternion; 3],
    pub angular: [f64; 2],
}

impl TildeInvariants {
    /// Real parts and moduli of the cross ratios, then the two angles.
    pub fn similarity_vector(&self) -> [f64; 8] {
        let x = &self.cross_ratios;
        [x[0].re(), x[0].norm(), x[1].re(), x[1].norm(), x[2].re(), x[2].norm(), self.angular[0], self.angular[1]]
    }

    pub fn similar_to(&self, o: &TildeInvariants, tol: f64) -> bool {
        self.similarity_vector()
            .iter()
            .zip(o.similarity_vector())
            .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
    }
}

/// Twist invariants of `kappa` relative to `(A, B)` and the repelling point of `C`.
pub fn tilde_invariants(
    kappa: &TwistBendParams,
    a: &LoxodromicFrame,
    b: &LoxodromicFrame,
    c: &LoxodromicFrame,
) -> Result<TildeInvariants> {
    let (aa, ra, ab) = (a.attracting(), a.repelling(), b.attracting());
    let rc = c.repelling();
    for p in [ab, rc] {
        if gram_rank(&[aa.clone(), ra.clone(), p.clone()]) < 3 {
            return Err(Error::DegenerateConfiguration("point on the line through the fixed points of A".into()));
        }
    }
    let k = twist_bend_element(kappa, a)?;
    let krc = k.mul_vec(rc);
    twisted_invariants(aa, ra, ab, &krc)
}

fn twisted_invariants(aa: &HVector, ra: &HVector, ab: &HVector, krc: &HVector) -> Result<TildeInvariants> {
    Ok(TildeInvariants {
        cross_ratios: [cross_ratio(aa, ra, ab, krc)?, cross_ratio(aa, krc, ab, ra)?, cross_ratio(ra, krc, ab, aa)?],
        angular: [angular_invariant(aa, ra, krc)?, angular_invariant(ra, krc, ab)?],
    })
}

/// Gauss-Newton solve for `(t, psi, xi)` reproducing `target`, started at
/// `start` and oriented with the frame of `A`.
pub fn recover_twist_bend(
    target: &TildeInvariants,
    start: &TwistBendParams,
    a: &LoxodromicFrame,
    b: &LoxodromicFrame,
    c: &LoxodromicFrame,
) -> Result<TwistBendParams> {
    require_three(a.n())?;
    let eval = |x: &[f64; 4]| -> Result<DVector<f64>> {
        let kappa = TwistBendParams { t: x[0].exp(), psi: x[1], xi: [x[2], x[3]], k: None };
        let inv = tilde_invariants(&kappa, a, b, c)?;
        let s = inv.similarity_vector();
        let goal = target.similarity_vector();
        Ok(DVector::from_iterator(8, s.iter().zip(goal).map(|(x, y)| x - y)))
    };
    let mut x = [start.t.ln(), start.psi, start.xi[0], start.xi[1]];
    for _ in 0..60 {
        let r = eval(&x)?;
        let mut jac = DMatrix::<f64>::zeros(8, 4);
        for j in 0..4 {
            let h = 1e-6;
            let (mut xp, mut xm) = (x, x);
            xp[j] += h;
            xm[j] -= h;
            let col = (eval(&xp)? - eval(&xm)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac.svd(true, true).solve(&r, 1e-12).map_err(|e| Error::BadParams(e.to_string()))?;
        for j in 0..4 {
            x[j] -= step[j];
        }
        if step.norm() < 1e-14 {
            break;
        }
    }
    let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    TwistBendParams::oriented(x[0].exp(), wrap(x[1]), [wrap(x[2]), wrap(x[3])], a)
}

/// Generators `A`, `B` of a pants group; the third peripheral is `(AB)^{-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PantsGroup {
    pub space: HermitianSpace,
    pub a: HMatrix,
    pub b: HMatrix,
}

impl PantsGroup {
    /// Checks that all three peripherals are regular loxodromic and that
    /// `(A, B)` is non-singular.
    pub fn new(space: HermitianSpace, a: HMatrix, b: HMatrix) -> Result<Self> {
        let pair = Pair::new(space, a, b)?;
        pair.analyze(GENERICITY_TOL)?.require(Mode::Strong)?;
        let g = PantsGroup { space, a: pair.a, b: pair.b };
        eigen_frame(&g.peripheral(2), space.field)?;
        Ok(g)
    }

    /// Peripheral element in slot 0 (`A`), 1 (`B`) or 2 (`(AB)^{-1}`).
    pub fn peripheral(&self, slot: usize) -> HMatrix {
        match slot {
            0 => self.a.clone(),
            1 => self.b.clone(),
            _ => self.a.mul(&self.b).isometry_inverse(),
        }
    }

    fn conjugated(&self, g: &HMatrix) -> PantsGroup {
        let gi = g.isometry_inverse();
        PantsGroup { space: self.space, a: g.mul(&self.a).mul(&gi), b: g.mul(&self.b).mul(&gi) }
    }
}

/// Two pants `<A, T A^{-1} T^{-1}>` and `<T, A T^{-1} A^{-1}>` whose
/// boundaries pair up as in the standard genus-two chain.
pub fn genus_two_pants(space: HermitianSpace, a: &HMatrix, t: &HMatrix) -> Result<[PantsGroup; 2]> {
    let (ai, ti) = (a.isometry_inverse(), t.isometry_inverse());
    Ok([
        PantsGroup::new(space, a.clone(), t.mul(&ai).mul(&ti))?,
        PantsGroup::new(space, t.clone(), a.mul(&ti).mul(&ai))?,
    ])
}

/// Isometry `G` with `G x G^{-1} = y` for conjugate regular loxodromics.
pub fn element_conjugator(x: &HMatrix, y: &HMatrix, field: Field) -> Result<HMatrix> {
    let fx = eigen_frame(x, field)?;
    let fy = eigen_frame(y, field)?;
    let (px, py) = (fx.params(), fy.params());
    let close = |u: f64, v: f64| (u - v).abs() <= TWIST_TOL * u.abs().max(v.abs()).max(1.0);
    let same = close(px.r, py.r) && close(px.theta, py.theta) && px.phi.iter().zip(&py.phi).all(|(u, v)| close(*u, *v));
    if !same {
        return Err(Error::CompatibilityFailed("peripheral elements are not conjugate".into()));
    }
    let g = fy.balanced_frame_matrix().mul(&fx.balanced_frame_matrix().isometry_inverse());
    let residual = g.mul(x).mul(&g.isometry_inverse()).max_abs_diff(y);
    // rounding in G x G^{-1} grows with |G| |G^{-1}| |x|
    let scale = g.max_abs().powi(2) * x.max_abs().max(y.max_abs()).max(1.0);
    if residual > TWIST_TOL * scale {
        return Err(Error::VerificationFailed(residual));
    }
    Ok(g)
}

/// How two boundary components are glued.
#[derive(Clone, Copy, Debug)]
pub enum Gluing<'a> {
    /// Two pants `<A, B>` and `<D, C>` with `D = A^{-1}`: a four-holed sphere.
    Pants(&'a PantsGroup),
    /// The boundaries `A` and `B` of one pants, `B` conjugate to `A^{-1}`: a one-holed torus.
    Handle,
}

/// Generators of the glued group.
///
/// For two pants: `[A, B, K C K^{-1}]`. For a handle: `[A, B, K T]` with
/// `T B T^{-1} = A^{-1}`. `K` is the twist-bend oriented with `A`.
pub fn glue(g1: &PantsGroup, gluing: Gluing<'_>, kappa: &TwistBendParams) -> Result<Vec<HMatrix>> {
    require_three(g1.space.n)?;
    let field = g1.space.field;
    let fa = eigen_frame(&g1.a, field)?;
    let k = twist_bend_element(kappa, &fa)?;
    let ki = k.isometry_inverse();
    let out = match gluing {
        Gluing::Pants(g2) => {
            if g2.space != g1.space {
                return Err(Error::IncompatibleBoundary("different spaces".into()));
            }
            let d = g2.a.isometry_inverse();
            let mismatch = d.max_abs_diff(&g1.a);
            if mismatch > 1e-9 * g1.a.max_abs().max(1.0) {
                return Err(Error::IncompatibleBoundary(format!("A and D^-1 differ by {mismatch:.3e}")));
            }
            vec![g1.a.clone(), g1.b.clone(), k.mul(&g2.b).mul(&ki)]
        }
        Gluing::Handle => {
            let t = element_conjugator(&g1.b, &g1.a.isometry_inverse(), field)
                .map_err(|_| Error::IncompatibleBoundary("B is not conjugate to A^-1".into()))?;
            vec![g1.a.clone(), g1.b.clone(), k.mul(&t)]
        }
    };
    for g in &out {
        crate::space::check_isometry(g, 1e-8)?;
    }
    Ok(out)
}

/// One gluing: `(pants, slot, pants, slot, kappa)`. The twist is oriented
/// with the peripheral element of the first endpoint, as placed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingEdge(pub usize, pub usize, pub usize, pub usize, pub TwistBendParams);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingGraph {
    pub edges: Vec<GluingEdge>,
}

impl GluingGraph {
    /// Handle pants `0..g` glued to themselves along slots 0 and 1, joined
    /// by a chain of `g - 2` connector pants through slot 2.
    pub fn standard_chain(genus: usize, kappas: Vec<TwistBendParams>) -> Result<Self> {
        let layout = standard_layout(genus)?;
        if kappas.len() != layout.len() {
            return Err(Error::GraphInvalid(format!("expected {} twist-bends, got {}", layout.len(), kappas.len())));
        }
        Ok(GluingGraph { edges: layout.into_iter().zip(kappas).map(|((a, s, b, t), k)| GluingEdge(a, s, b, t, k)).collect() })
    }

    fn ends(&self) -> Vec<(usize, usize, usize, usize)> {
        self.edges.iter().map(|e| (e.0, e.1, e.2, e.3)).collect()
    }
}

fn standard_layout(genus: usize) -> Result<Vec<(usize, usize, usize, usize)>> {
    if genus < 2 {
        return Err(Error::GraphInvalid(format!("genus {genus} < 2")));
    }
    let g = genus;
    let mut out: Vec<(usize, usize, usize, usize)> = (0..g).map(|i| (i, 0, i, 1)).collect();
    if g == 2 {
        out.push((0, 2, 1, 2));
        return Ok(out);
    }
    out.push((0, 2, g, 0));
    out.push((1, 2, g, 1));
    for m in 1..g - 2 {
        out.push((g + m - 1, 2, g + m, 0));
        out.push((m + 1, 2, g + m, 1));
    }
    out.push((2 * g - 3, 2, g - 1, 2));
    Ok(out)
}

/// Real parameter count of a representation assembled from pants groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    pub genus: usize,
    pub per_pants: usize,
    pub per_boundary_constraint: usize,
    pub per_twist_bend: usize,
    pub total: usize,
}

/// `36 (2g - 2) - 10 g + 10 g` for `Sp(3,1)`, `15 (2g - 2) - 3 g + 3 g` for `SU(3,1)`.
pub fn parameter_count(genus: usize, field: Field) -> ParameterCount {
    let (per_pants, per_boundary, per_twist) = match field {
        Field::Quaternion => (36, 10, 10),
        Field::Complex => (15, 3, 3),
    };
    let total = per_pants * (2 * genus - 2) - per_boundary * genus + per_twist * genus;
    ParameterCount { genus, per_pants, per_boundary_constraint: per_boundary, per_twist_bend: per_twist, total }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRepresentation {
    pub genus: usize,
    pub field: Field,
    /// `[A, B]` of each pants after placement.
    pub pants_generators: Vec<[HMatrix; 2]>,
    /// `(edge index, s)` with `s Y s^{-1} = X^{-1}` for each gluing off the spanning tree.
    pub stable_letters: Vec<(usize, HMatrix)>,
    /// Standard generators `a_1, b_1, ..., a_g, b_g` for the standard chain.
    pub standard_generators: Option<Vec<[HMatrix; 2]>>,
    /// Largest defect of the gluing relations.
    pub gluing_residual: f64,
    /// `|| prod [a_i, b_i] - I ||` for the standard chain.
    pub surface_relation_residual: Option<f64>,
    pub parameters: ParameterCount,
}

fn validate_graph(pants: usize, graph: &GluingGraph) -> Result<usize> {
    if pants < 2 || pants % 2 != 0 {
        return Err(Error::GraphInvalid(format!("{pants} pants is not 2g - 2 for a genus g >= 2")));
    }
    let genus = pants / 2 + 1;
    if graph.edges.len() != 3 * genus - 3 {
        return Err(Error::GraphInvalid(format!("expected {} gluings, got {}", 3 * genus - 3, graph.edges.len())));
    }
    let mut used = vec![[false; 3]; pants];
    for &(a, s, b, t) in &graph.ends() {
        for (node, slot) in [(a, s), (b, t)] {
            if node >= pants || slot >= 3 {
                return Err(Error::GraphInvalid(format!("no boundary ({node}, {slot})")));
            }
            if std::mem::replace(&mut used[node][slot], true) {
                return Err(Error::GraphInvalid(format!("boundary ({node}, {slot}) glued twice")));
            }
        }
    }
    Ok(genus)
}

fn commutator(a: &HMatrix, b: &HMatrix) -> HMatrix {
    a.mul(b).mul(&a.isometry_inverse()).mul(&b.isometry_inverse())
}

/// Places every pants group by gluing along a breadth-first spanning tree
/// from pants 0, then closes the remaining gluings with stable letters.
pub fn assemble_surface_representation(
    pants: &[PantsGroup],
    graph: &GluingGraph,
) -> Result<SurfaceRepresentation> {
    let genus = validate_graph(pants.len(), graph)?;
    let space = pants[0].space;
    require_three(space.n)?;
    if pants.iter().any(|p| p.space != space) {
        return Err(Error::GraphInvalid("pants live in different spaces".into()));
    }
    let field = space.field;
    let twist = |kappa: &TwistBendParams, x: &HMatrix| -> Result<HMatrix> {
        let frame = eigen_frame(x, field)?;
        twist_bend_element(kappa, &frame).map_err(|e| match e {
            Error::InconsistentProjectivePoints => Error::CompatibilityFailed("twist-bend points do not match the boundary".into()),
            other => other,
        })
    };
    let compat = |e: Error| match e {
        Error::CompatibilityFailed(_) | Error::VerificationFailed(_) => e,
        other => Error::CompatibilityFailed(other.to_string()),
    };

    let mut placed: Vec<Option<PantsGroup>> = vec![None; pants.len()];
    placed[0] = Some(pants[0].clone());
    let mut tree = vec![false; graph.edges.len()];
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for (ei, e) in graph.edges.iter().enumerate() {
            let GluingEdge(a, s, b, t, kappa) = e;
            let (a, s, b, t) = (*a, *s, *b, *t);
            if tree[ei] || a == b || (a != u && b != u) {
                continue;
            }
            let other = if a == u { b } else { a };
            if placed[other].is_some() {
                continue;
            }
            let g = if a == u {
                // first endpoint placed: G Y G^{-1} = X^{-1}, twisted about X
                let x = placed[u].as_ref().map(|p| p.peripheral(s)).ok_or(Error::GraphInvalid("unplaced".into()))?;
                let y = pants[b].peripheral(t);
                let g = element_conjugator(&y, &x.isometry_inverse(), field).map_err(compat)?;
                twist(kappa, &x)?.mul(&g)
            } else {
                // second endpoint placed: G X0 G^{-1} = Y^{-1} is the placed X
                let y = placed[u].as_ref().map(|p| p.peripheral(t)).ok_or(Error::GraphInvalid("unplaced".into()))?;
                let x0 = pants[a].peripheral(s);
                let x = y.isometry_inverse();
                let g = element_conjugator(&x0, &x, field).map_err(compat)?;
                twist(kappa, &x)?.mul(&g)
            };
            placed[other] = Some(pants[other].conjugated(&g));
            tree[ei] = true;
            queue.push_back(other);
        }
    }
    let placed: Vec<PantsGroup> =
        placed.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| Error::GraphInvalid("gluing graph is disconnected".into()))?;

    let id = HMatrix::identity(space.dim());
    let mut residual: f64 = 0.0;
    let mut stable = Vec::new();
    for (ei, e) in graph.edges.iter().enumerate() {
        let GluingEdge(a, s, b, t, kappa) = e;
        let x = placed[*a].peripheral(*s);
        let y = placed[*b].peripheral(*t);
        if tree[ei] {
            residual = residual.max(x.mul(&y).max_abs_diff(&id));
            continue;
        }
        let tmat = element_conjugator(&y, &x.isometry_inverse(), field).map_err(compat)?;
        let letter = twist(kappa, &x)?.mul(&tmat);
        residual = residual.max(letter.mul(&y).mul(&letter.isometry_inverse()).mul(&x).max_abs_diff(&id));
        stable.push((ei, letter));
    }

    let standard = standard_layout(genus)?;
    let (standard_generators, surface_relation_residual) = if graph.ends() == standard {
        // the stable letter of handle i closes (i, 0) with (i, 1)
        let gens: Vec<[HMatrix; 2]> = (0..genus)
            .map(|i| {
                let letter = &stable.iter().find(|(ei, _)| *ei == i).expect("handle gluing is off the tree").1;
                [placed[i].a.clone(), letter.isometry_inverse()]
            })
            .collect();
        let product = gens.iter().fold(id.clone(), |acc, [a, b]| acc.mul(&commutator(a, b)));
        let r = product.max_abs_diff(&id);
        (Some(gens), Some(r))
    } else {
        (None, None)
    };
    Ok(SurfaceRepresentation {
        genus,
        field,
        pants_generators: placed.iter().map(|p| [p.a.clone(), p.b.clone()]).collect(),
        stable_letters: stable,
        standard_generators,
        gluing_residual: residual,
        surface_relation_residual,
        parameters: parameter_count(genus, field),
    })
}
