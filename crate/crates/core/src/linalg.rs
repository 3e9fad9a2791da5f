//! Eigen-decomposition of complex-symmetric tridiagonal matrices and a
//! dense matrix exponential.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::principal_sqrt;
use crate::params::C64;

const MAX_QL_SWEEPS: usize = 200;

/// Result of [`tridiagonal_symmetric_eigen`].
///
/// Eigenvectors are normalised with the bilinear form, `v^T v = 1`, so the
/// full matrix `Z` of eigenvectors satisfies `Z^T Z = I`. Only the rows that
/// were requested are kept.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<C64>,
    /// `rows[r][j]` is `(y_r^T Z)_j` for the requested start vectors `y_r`.
    pub rows: Vec<Vec<C64>>,
}

/// Implicit QL iteration for the complex-symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off` (`off[i]` couples `i` and `i+1`).
///
/// Each `tracked` vector `y` is carried through the rotations so that the
/// output row equals `y^T Z`. Passing the unit vectors yields rows of `Z`.
/// Complex rotations can break down when `f^2 + g^2` vanishes for nonzero
/// `f, g`; this is reported as an error so callers can fall back.
pub fn tridiagonal_symmetric_eigen(diag: &[C64], off: &[C64], tracked: Vec<Vec<C64>>) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if off.len() + 1 != n.max(1) {
        return Err(Error::DimensionMismatch {
            expected: n.saturating_sub(1),
            found: off.len(),
        });
    }
    if let Some(bad) = tracked.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let mut d = diag.to_vec();
    let mut e: Vec<C64> = off.to_vec();
    e.push(C64::new(0.0, 0.0));
    let mut rows = tracked;
    let scale = d.iter().chain(e.iter()).map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].norm() + d[m + 1].norm();
                if e[m].norm() <= f64::EPSILON * dd.max(f64::EPSILON * scale) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::Eigensolver(format!("QL iteration stalled at index {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = principal_sqrt(g * g + 1.0);
            let gr = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / gr;
            let (mut s, mut c, mut p) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0));
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                let rr = principal_sqrt(f * f + g * g);
                e[i + 1] = rr;
                if rr.norm() <= f64::EPSILON * (f.norm() + g.norm()) {
                    if f.norm() + g.norm() == 0.0 {
                        d[i + 1] -= p;
                        e[m] = C64::new(0.0, 0.0);
                        deflated = true;
                        break;
                    }
                    return Err(Error::Eigensolver("isotropic rotation in complex-symmetric QL".into()));
                }
                s = f / rr;
                c = g / rr;
                g = d[i + 1] - p;
                let r2 = (d[i] - g) * s + 2.0 * c * b;
                p = s * r2;
                d[i + 1] = g + p;
                g = c * r2 - b;
                for row in rows.iter_mut() {
                    let fz = row[i + 1];
                    row[i + 1] = s * row[i] + c * fz;
                    row[i] = c * row[i] - s * fz;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = C64::new(0.0, 0.0);
        }
    }
    if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    Ok(TridiagonalEigen { values: d, rows })
}

/// Unit vectors `e_0..e_{n-1}`; tracking them yields the full `Z`.
pub fn identity_rows(n: usize) -> Vec<Vec<C64>> {
    (0..n)
        .map(|i| {
            let mut r = vec![C64::new(0.0, 0.0); n];
            r[i] = C64::new(1.0, 0.0);
            r
        })
        .collect()
}

/// Dense complex-symmetric tridiagonal matrix.
pub fn tridiagonal_dense(diag: &[C64], off: &[C64]) -> DMatrix<C64> {
    let n = diag.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag[i];
        if i + 1 < n {
            m[(i, i + 1)] = off[i];
            m[(i + 1, i)] = off[i];
        }
    }
    m
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by Padé(13) scaling and squaring.
pub fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(squarings));
    let ident = DMatrix::<C64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| C64::new(B[k], 0.0);
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9));
    let u = &scaled * (u_inner + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &ident * c(1));
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &ident * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Eigensolver("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_tridiag(n: usize, seed: u64) -> (Vec<C64>, Vec<C64>) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let d = (0..n).map(|_| C64::new(2.0 + next(), next())).collect();
        let o = (0..n - 1).map(|_| C64::new(-1.0 + 0.3 * next(), 0.3 * next())).collect();
        (d, o)
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        for (n, seed) in [(2, 1), (7, 2), (40, 3)] {
            let (d, o) = random_tridiag(n, seed);
            let eig = tridiagonal_symmetric_eigen(&d, &o, identity_rows(n)).unwrap();
            let z = DMatrix::from_fn(n, n, |i, j| eig.rows[i][j]);
            let h = tridiagonal_dense(&d, &o);
            let hz = &h * &z;
            for j in 0..n {
                for i in 0..n {
                    assert!((hz[(i, j)] - z[(i, j)] * eig.values[j]).norm() < 1e-11);
                }
            }
            let ztz = z.transpose() * &z;
            assert!((ztz - DMatrix::identity(n, n)).iter().all(|v| v.norm() < 1e-11));
        }
    }

    #[test]
    fn tracked_projection_matches_full_rows() {
        let n = 12;
        let (d, o) = random_tridiag(n, 9);
        let y: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let mut tracked = identity_rows(n);
        tracked.push(y.clone());
        let eig = tridiagonal_symmetric_eigen(&d, &o, tracked).unwrap();
        for j in 0..n {
            let direct: C64 = (0..n).map(|i| y[i] * eig.rows[i][j]).sum();
            assert!((direct - eig.rows[n][j]).norm() < 1e-12);
        }
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let mut a = DMatrix::<C64>::zeros(3, 3);
        a[(0, 0)] = C64::new(0.0, -30.0);
        a[(1, 2)] = C64::new(1.0, 0.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)] - C64::new(0.0, -30.0).exp()).norm() < 1e-13);
        assert!((e[(1, 2)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn expm_agrees_with_eigen_route() {
        let n = 10;
        let (d, o) = random_tridiag(n, 5);
        let h = tridiagonal_dense(&d, &o);
        let t = 3.7;
        let e = expm(&h.map(|z| z * C64::new(0.0, -t))).unwrap();
        let eig = tridiagonal_symmetric_eigen(&d, &o, identity_rows(n)).unwrap();
        let z = DMatrix::from_fn(n, n, |i, j| eig.rows[i][j]);
        let phase = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (C64::new(0.0, -t) * eig.values[i]).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let via_eig = &z * phase * z.transpose();
        assert!((e - via_eig).iter().all(|v| v.norm() < 1e-10));
    }
}
