//! Flags, generic pairs of flags and the (weak) non-singularity of pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quaternion;
use crate::space::{form, solve, HMatrix, HVector};
use crate::spectral::{complex_embedding, LoxodromicFrame};

/// Default relative tolerance of the genericity predicates.
pub const GENERICITY_TOL: f64 = 1e-9;
/// Relative singular-value threshold of the fixed-point Gram rank.
pub const RANK_TOL: f64 = 1e-8;

/// Boundary point, line through it (by two spanning null lifts) and the
/// hyperplane orthogonal to `polar`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub point: HVector,
    pub line: [HVector; 2],
    pub polar: HVector,
}

/// `(a_A, L_A, x_j^perp)` for each positive eigenvector.
pub fn canonical_flags(frame: &LoxodromicFrame) -> Vec<Flag> {
    frame
        .positive()
        .iter()
        .map(|x| Flag {
            point: frame.attracting().clone(),
            line: [frame.attracting().clone(), frame.repelling().clone()],
            polar: x.clone(),
        })
        .collect()
}

/// H-orthogonal projection of `v` onto the span of `basis`.
pub(crate) fn project_onto(v: &HVector, basis: &[HVector]) -> Result<HVector> {
    let k = basis.len();
    let m: Vec<Vec<Quaternion>> = (0..k).map(|t| (0..k).map(|s| form(&basis[s], &basis[t])).collect()).collect();
    let b: Vec<Quaternion> = (0..k).map(|t| form(v, &basis[t])).collect();
    let c = solve(&m, &b)?;
    let mut out = HVector::zeros(v.len());
    for (z, &ci) in basis.iter().zip(&c) {
        out = out.add(&z.scale_right(ci));
    }
    Ok(out)
}

/// Whether the line spanned by `line` contains the projective point `p`.
pub(crate) fn line_contains(line: &[HVector; 2], p: &HVector, tol: f64) -> bool {
    match project_onto(p, line) {
        Ok(proj) => proj.sub(p).norm() <= tol * p.norm(),
        Err(_) => true,
    }
}

/// Whether the boundary of `line` meets the boundary of `polar^perp`.
fn line_meets_hyperplane(line: &[HVector; 2], polar: &HVector, tol: f64) -> bool {
    let [u, w] = line;
    let ux = form(u, polar);
    let wx = form(w, polar);
    let scale_u = tol * u.norm() * polar.norm();
    let scale_w = tol * w.norm() * polar.norm();
    if ux.norm() <= scale_u || wx.norm() <= scale_w {
        // a null spanning vector lies in the hyperplane
        return true;
    }
    // the kernel of v -> <v, x> inside the line is spanned by u s + w
    let s = -(ux.inv() * wx);
    let v = u.scale_right(s).add(w);
    form(&v, &v).re().abs() <= tol * v.norm().powi(2)
}

/// Whether two nonzero vectors span the same quaternionic line.
pub(crate) fn same_point(p: &HVector, q: &HVector, tol: f64) -> bool {
    let k = p.argmax();
    if q[k].norm() <= tol * q.norm() {
        return false;
    }
    let s = q[k].inv() * p[k];
    q.scale_right(s).sub(p).norm() <= tol * p.norm()
}

/// Definition of a generic pair of flags.
pub fn generic_pair(f: &Flag, g: &Flag, tol: f64) -> bool {
    !line_contains(&g.line, &f.point, tol)
        && !line_contains(&f.line, &g.point, tol)
        && !line_meets_hyperplane(&f.line, &g.polar, tol)
        && !line_meets_hyperplane(&g.line, &f.polar, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGenericityReport {
    pub weakly_nonsingular: bool,
    pub nonsingular: bool,
    /// Entry `[j][k]`: flags `F_{j,A}` and `F_{k,B}` form a generic pair.
    pub flag_pair_matrix: Vec<Vec<bool>>,
    /// First matching of size `n - 2` in lexicographic order, as `(j, k)`.
    pub matching: Option<Vec<(usize, usize)>>,
    pub multiple_matchings: bool,
    /// Quaternionic rank of the Gram matrix of the four null fixed points.
    pub fixed_point_rank: usize,
    pub failing_conditions: Vec<String>,
}

impl PairGenericityReport {
    /// Indices of the positive eigenvectors of A and of B used by the
    /// matching, each in increasing order.
    pub fn used_indices(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let m = self.matching.as_ref()?;
        let mut a: Vec<usize> = m.iter().map(|p| p.0).collect();
        let mut b: Vec<usize> = m.iter().map(|p| p.1).collect();
        a.sort_unstable();
        b.sort_unstable();
        Some((a, b))
    }
}

/// Enumerates matchings of the requested size; stops after two.
fn find_matchings(m: &[Vec<bool>], size: usize) -> (Option<Vec<(usize, usize)>>, bool) {
    fn rec(
        m: &[Vec<bool>],
        size: usize,
        start: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        found: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if found.len() >= 2 {
            return;
        }
        if cur.len() == size {
            found.push(cur.clone());
            return;
        }
        let rows = m.len();
        if rows - start < size - cur.len() {
            return;
        }
        for j in start..rows {
            for k in 0..m[j].len() {
                if m[j][k] && !used[k] {
                    used[k] = true;
                    cur.push((j, k));
                    rec(m, size, j + 1, used, cur, found);
                    cur.pop();
                    used[k] = false;
                }
            }
        }
    }
    let cols = m.first().map_or(0, |r| r.len());
    let mut found = Vec::new();
    rec(m, size, 0, &mut vec![false; cols], &mut Vec::new(), &mut found);
    let multiple = found.len() > 1;
    (found.into_iter().next(), multiple)
}

/// Quaternionic rank of the Gram matrix of unit-normalized lifts.
pub fn gram_rank(lifts: &[HVector]) -> usize {
    let unit: Vec<HVector> = lifts.iter().map(|v| v.scale_right(Quaternion::real(1.0 / v.norm()))).collect();
    let rows: Vec<Vec<Quaternion>> = unit.iter().map(|v| unit.iter().map(|w| form(w, v)).collect()).collect();
    let g = HMatrix::from_rows(&rows).expect("square Gram matrix");
    let sv = complex_embedding(&g).0.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    let count = sv.iter().filter(|&&s| s > RANK_TOL * top).count();
    count.div_ceil(2)
}

/// Weak and strong non-singularity of the pair of frames.
pub fn genericity_report(a: &LoxodromicFrame, b: &LoxodromicFrame, tol: f64) -> Result<PairGenericityReport> {
    if a.n() != b.n() || a.field != b.field {
        return Err(Error::DimensionMismatch { expected: a.n(), got: b.n() });
    }
    let n = a.n();
    let mut failing = Vec::new();

    let fixed_a = [a.attracting(), a.repelling()];
    let fixed_b = [b.attracting(), b.repelling()];
    let common = fixed_a.iter().any(|p| fixed_b.iter().any(|q| same_point(p, q, tol)));
    if common {
        failing.push("common fixed point".to_string());
    }

    let fa = canonical_flags(a);
    let fb = canonical_flags(b);
    let matrix: Vec<Vec<bool>> = fa.iter().map(|f| fb.iter().map(|g| generic_pair(f, g, tol)).collect()).collect();
    let (matching, multiple) = find_matchings(&matrix, n - 2);
    if matching.is_none() {
        failing.push(format!("no {} generic flag pairs", n - 2));
    }
    let weakly = !common && matching.is_some();

    let rank = gram_rank(&[a.attracting().clone(), a.repelling().clone(), b.attracting().clone(), b.repelling().clone()]);
    let needed = 4.min(n + 1);
    if rank < needed {
        failing.push(format!("fixed points span rank {rank} < {needed}"));
    }
    Ok(PairGenericityReport {
        weakly_nonsingular: weakly,
        nonsingular: weakly && rank >= needed,
        flag_pair_matrix: matrix,
        matching,
        multiple_matchings: multiple,
        fixed_point_rank: rank,
        failing_conditions: failing,
    })
}
