//! Characteristic polynomials, polynomial roots and complex null spaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::CDd;
use crate::error::{Error, Result};

/// Monic characteristic polynomial `det(x I - M)`, coefficients by
/// descending degree (`c[0] = 1`).
///
/// Faddeev-LeVerrier in double-double: the plain recurrence loses the
/// palindromic structure on ill-conditioned isometries.
pub fn char_poly_of(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let d = m.nrows();
    let a: Vec<CDd> = (0..d * d).map(|k| CDd::from_c64(m[(k / d, k % d)])).collect();
    let mut coeffs = vec![CDd::from_c64(Complex64::new(1.0, 0.0))];
    // mk = M_k, starting from M_1 = I
    let mut mk = vec![CDd::ZERO; d * d];
    for i in 0..d {
        mk[i * d + i] = coeffs[0];
    }
    for k in 1..=d {
        let mut am = vec![CDd::ZERO; d * d];
        for i in 0..d {
            for l in 0..d {
                let x = a[i * d + l];
                if x == CDd::ZERO {
                    continue;
                }
                for j in 0..d {
                    am[i * d + j] = am[i * d + j] + x * mk[l * d + j];
                }
            }
        }
        let mut tr = CDd::ZERO;
        for i in 0..d {
            tr = tr + am[i * d + i];
        }
        let c = (-tr).div_f64(k as f64);
        coeffs.push(c);
        for i in 0..d {
            am[i * d + i] = am[i * d + i] + c;
        }
        mk = am;
    }
    coeffs.into_iter().map(CDd::to_c64).collect()
}

/// A group of numerically coincident roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roots {
    pub roots: Vec<Complex64>,
    pub clusters: Vec<RootCluster>,
}

fn horner(c: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = c[0];
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = c[0].norm();
    let az = z.norm();
    for &ck in &c[1..] {
        dp = dp * z + p;
        p = p * z + ck;
        bound = bound * az + ck.norm();
    }
    (p, dp, bound)
}

const MAX_ITER: usize = 2000;

/// All complex roots by Aberth-Ehrlich iteration, coefficients by
/// descending degree.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Roots> {
    let lead = *coeffs.first().ok_or_else(|| Error::BadParams("empty polynomial".into()))?;
    if lead.norm() == 0.0 {
        return Err(Error::BadParams("leading coefficient is zero".into()));
    }
    let c: Vec<Complex64> = coeffs.iter().map(|&x| x / lead).collect();
    let d = c.len() - 1;
    if d == 0 {
        return Ok(Roots { roots: vec![], clusters: vec![] });
    }
    let cnorm = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let eps = f64::EPSILON;

    let radius = {
        let r = c[d].norm().powf(1.0 / d as f64);
        if r > 0.0 && r.is_finite() {
            r
        } else {
            1.0
        }
    };
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4))
        .collect();
    let mut done = vec![false; d];
    for _ in 0..MAX_ITER {
        if done.iter().all(|&x| x) {
            break;
        }
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (p, dp, bound) = horner(&c, z[i]);
            if p.norm() <= 4.0 * eps * bound {
                done[i] = true;
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..d {
                if j != i {
                    sum += (z[i] - z[j]).inv();
                }
            }
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if !w.re.is_finite() || !w.im.is_finite() {
                // derivative vanished or roots collided; nudge off
                let bump = Complex64::new(1e-8, 1e-8) * (1.0 + z[i].norm());
                z[i] += bump;
                continue;
            }
            z[i] -= w;
            if w.norm() <= 2.0 * eps * z[i].norm() {
                done[i] = true;
            }
        }
    }
    for &zi in &z {
        let (p, _, _) = horner(&c, zi);
        let scale = cnorm * zi.norm().max(1.0).powi(d as i32);
        if !(p.norm() <= 1e-9 * scale) {
            return Err(Error::NoConvergence);
        }
    }
    let clusters = cluster_roots(&c, &z);
    Ok(Roots { roots: z, clusters })
}

/// Groups roots whose inclusion disks overlap.
fn cluster_roots(c: &[Complex64], z: &[Complex64]) -> Vec<RootCluster> {
    let d = z.len();
    let eps = f64::EPSILON;
    let radii: Vec<f64> = (0..d)
        .map(|i| {
            let (p, _, bound) = horner(c, z[i]);
            let mut den = 1.0;
            for j in 0..d {
                if j != i {
                    den *= (z[i] - z[j]).norm();
                }
            }
            let r = d as f64 * (p.norm() + 4.0 * eps * bound) / den;
            if r.is_finite() {
                r
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..d {
        for j in i + 1..d {
            if (z[i] - z[j]).norm() <= radii[i] + radii[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..d {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, g)| {
            let sum: Complex64 = g.iter().map(|&i| z[i]).sum();
            let mean = sum / g.len() as f64;
            RootCluster { center: refine_center(c, mean, g.len()), multiplicity: g.len() }
        })
        .collect()
}

/// Newton on the `(m-1)`-th derivative, whose root is simple at an `m`-fold
/// root of `p`.
fn refine_center(c: &[Complex64], start: Complex64, m: usize) -> Complex64 {
    if m == 1 {
        return start;
    }
    let mut deriv = c.to_vec();
    for _ in 1..m {
        let d = deriv.len() - 1;
        deriv = (0..d).map(|k| deriv[k] * (d - k) as f64).collect();
    }
    if deriv.len() < 2 {
        return start;
    }
    let mut z = start;
    for _ in 0..50 {
        let (p, dp, _) = horner(&deriv, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            break;
        }
    }
    if (z - start).norm().is_finite() {
        z
    } else {
        start
    }
}

/// Null space basis of `m` by full-pivot elimination; pivots below
/// `rel_tol * max|m_ij|` count as zero.
pub(crate) fn null_space(m: &DMatrix<Complex64>, rel_tol: f64) -> Vec<DVector<Complex64>> {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let scale = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let thresh = rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut colperm: Vec<usize> = (0..cols).collect();
    let mut rank = 0;
    while rank < rows.min(cols) {
        let (mut pr, mut pc, mut best) = (rank, rank, -1.0);
        for i in rank..rows {
            for j in rank..cols {
                let v = a[(i, j)].norm();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        if best <= thresh {
            break;
        }
        a.swap_rows(rank, pr);
        a.swap_columns(rank, pc);
        colperm.swap(rank, pc);
        let piv = a[(rank, rank)];
        for j in rank..cols {
            a[(rank, j)] /= piv;
        }
        for i in 0..rows {
            if i == rank {
                continue;
            }
            let f = a[(i, rank)];
            if f.norm() == 0.0 {
                continue;
            }
            for j in rank..cols {
                let v = a[(rank, j)];
                a[(i, j)] -= f * v;
            }
        }
        rank += 1;
    }
    // reduced form [I F; 0 0]: null vectors are (-F e_k; e_k)
    (rank..cols)
        .map(|free| {
            let mut v = DVector::from_element(cols, Complex64::new(0.0, 0.0));
            v[colperm[free]] = Complex64::new(1.0, 0.0);
            for r in 0..rank {
                v[colperm[r]] = -a[(r, free)];
            }
            v
        })
        .collect()
}

/// Eigenvector of `m` for the (approximate) eigenvalue `lambda`: null space
/// extraction followed by inverse-iteration polishing.
pub(crate) fn eigenvector(m: &DMatrix<Complex64>, lambda: Complex64, rel_tol: f64) -> Result<DVector<Complex64>> {
    let d = m.nrows();
    let shifted = m - DMatrix::from_diagonal_element(d, d, lambda);
    let basis = null_space(&shifted, rel_tol);
    let mut v = match basis.len() {
        0 => return Err(Error::DegenerateSpectrum(format!("no eigenvector found for {lambda}"))),
        1 => basis.into_iter().next().unwrap(),
        k => return Err(Error::DegenerateSpectrum(format!("eigenspace of {lambda} has dimension {k}"))),
    };
    v /= Complex64::new(v.norm(), 0.0);
    let scale = m.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
    let nudge = lambda + Complex64::new(1.0, 1.0) * (1e-13 * scale);
    let polish = m - DMatrix::from_diagonal_element(d, d, nudge);
    let lu = polish.lu();
    for _ in 0..2 {
        match lu.solve(&v) {
            Some(w) if w.norm().is_finite() && w.norm() > 0.0 => {
                v = &w / Complex64::new(w.norm(), 0.0);
            }
            _ => break,
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn binomial_coeffs(n: usize) -> Vec<Complex64> {
        // (x - 1)^n
        let mut out = vec![c(1.0)];
        for _ in 0..n {
            let mut next = vec![c(0.0); out.len() + 1];
            for (i, &v) in out.iter().enumerate() {
                next[i] += v;
                next[i + 1] -= v;
            }
            out = next;
        }
        out
    }

    #[test]
    fn x_squared_plus_one() {
        let r = poly_roots(&[c(1.0), c(0.0), c(1.0)]).unwrap();
        let mut ims: Vec<f64> = r.roots.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
        assert!(r.roots.iter().all(|z| z.re.abs() < 1e-14));
        assert_eq!(r.clusters.len(), 2);
    }

    #[test]
    fn eightfold_root_is_one_cluster() {
        let r = poly_roots(&binomial_coeffs(8)).unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.clusters[0].multiplicity, 8);
        assert!((r.clusters[0].center - c(1.0)).norm() < 1e-6);
    }

    #[test]
    fn identity_char_poly_is_binomial() {
        let m = DMatrix::<Complex64>::identity(8, 8);
        let p = char_poly_of(&m);
        assert_eq!(p, binomial_coeffs(8));
    }

    #[test]
    fn char_poly_of_companion_like_matrix() {
        // triangular matrix: char poly is the product over the diagonal
        let diag = [c(2.0), Complex64::new(0.0, 1.0), c(-3.0)];
        let mut m = DMatrix::from_diagonal(&DVector::from_row_slice(&diag));
        m[(0, 1)] = c(5.0);
        m[(0, 2)] = Complex64::new(1.0, 1.0);
        let p = char_poly_of(&m);
        // (x-2)(x-i)(x+3) = x^3 + (1-i) x^2 + (-6-i) x + 6i
        let want = [c(1.0), Complex64::new(1.0, -1.0), Complex64::new(-6.0, -1.0), Complex64::new(0.0, 6.0)];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.len(), 1);
        let r = &m * &ns[0];
        assert!(r.norm() < 1e-14);
        assert!(null_space(&DMatrix::identity(3, 3), 1e-12).is_empty());
    }

    #[test]
    fn leading_zero_rejected() {
        assert!(matches!(poly_roots(&[c(0.0), c(1.0)]), Err(Error::BadParams(_))));
    }
}
