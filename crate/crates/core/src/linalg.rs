//! Small dense linear-algebra kernels used by the Fock-space oracle.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type CMatrix = DMatrix<Complex64>;

/// Matrix exponential by scaling-and-squaring with a [13/13] Padé
/// approximant (Higham 2005). Backward error is at machine level for the
/// matrix sizes used here (≤ a few hundred).
pub fn expm(a: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }

    const THETA_13: f64 = 5.371920351148152;
    #[rustfmt::skip]
    const B: [f64; 14] = [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ];

    let norm1 = one_norm(a);
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a * Complex64::new(0.5f64.powi(s as i32), 0.0);

    let b = |k: usize| Complex64::new(B[k], 0.0);
    let ident = CMatrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &ident * b(1);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &ident * b(0);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("Padé denominator is singular; input norm out of range");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Approximate eigenbasis of a unitary from its commuting Hermitian and
/// anti-Hermitian parts; returns (basis, basis† U basis).
fn two_step_basis(u: &CMatrix) -> (CMatrix, CMatrix) {
    let n = u.nrows();
    let udag = u.adjoint();
    let h1 = (u + &udag) * Complex64::new(0.5, 0.0);
    let h2 = (u - &udag) * Complex64::new(0.0, -0.5);

    let eig = h1.clone().symmetric_eigen();
    let mut basis = eig.eigenvectors;
    let cos_vals = eig.eigenvalues;

    // Group near-equal cosine eigenvalues and split each group with the sine
    // part; within a group the ±θ branches are distinguished by H2.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cos_vals[i].partial_cmp(&cos_vals[j]).unwrap());
    let tol = 1e-8;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cos_vals[order[end]] - cos_vals[order[start]]).abs() < tol {
            end += 1;
        }
        if end - start > 1 {
            let cols: Vec<usize> = order[start..end].to_vec();
            let sub = CMatrix::from_fn(n, cols.len(), |r, k| basis[(r, cols[k])]);
            let w = sub.adjoint() * &h2 * &sub;
            let sub_eig = w.symmetric_eigen();
            let rotated = &sub * &sub_eig.eigenvectors;
            for (k, &col) in cols.iter().enumerate() {
                basis.set_column(col, &rotated.column(k));
            }
        }
        start = end;
    }
    let t = basis.adjoint() * u * &basis;
    (basis, t)
}

/// Drive a near-diagonal normal matrix to diagonal form with 2×2 Schur
/// rotations, accumulating the rotations into `v`.
fn polish_normal(t: &mut CMatrix, v: &mut CMatrix) {
    let n = t.nrows();
    for _ in 0..20 * n.max(1) {
        if !polish_one(t, v) {
            break;
        }
    }
}

/// One targeted 2×2 Schur rotation on the worst off-diagonal pair. Returns
/// false when the matrix is diagonal to working precision.
fn polish_one(t: &mut CMatrix, v: &mut CMatrix) -> bool {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(1.0, f64::max);
    {
        let mut worst = (0usize, 0usize);
        let mut worst_mag = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let mag = t[(i, j)].norm() + t[(j, i)].norm();
                    if mag > worst_mag {
                        worst_mag = mag;
                        worst = (i.min(j), i.max(j));
                    }
                }
            }
        }
        if worst_mag < 1e-15 * scale {
            return false;
        }
        let (i, j) = worst;
        let (a, b, c, d) = (t[(i, i)], t[(i, j)], t[(j, i)], t[(j, j)]);
        // eigenvector of the 2×2 block for one of its eigenvalues
        let half = (a - d) * 0.5;
        let disc = (half * half + b * c).sqrt();
        let lam = (a + d) * 0.5 + if (half + disc).norm() >= (half - disc).norm() {
            disc
        } else {
            -disc
        };
        // Two algebraically equivalent eigenvector forms; (λ−a) and (λ−d)
        // carry absolute rounding noise, so use the form whose difference is
        // the large, well-conditioned one.
        let w1;
        let w2;
        if (lam - d).norm() >= (lam - a).norm() {
            w1 = lam - d;
            w2 = c;
        } else {
            w1 = b;
            w2 = lam - a;
        }
        let nrm = (w1.norm_sqr() + w2.norm_sqr()).sqrt();
        if nrm < 1e-300 {
            return false;
        }
        let (w1, w2) = (w1 / nrm, w2 / nrm);
        // unitary R = [[w1, -conj(w2)], [w2, conj(w1)]] acting on columns i, j
        for r in 0..n {
            let ti = t[(r, i)];
            let tj = t[(r, j)];
            t[(r, i)] = ti * w1 + tj * w2;
            t[(r, j)] = -ti * w2.conj() + tj * w1.conj();
        }
        for col in 0..n {
            let ti = t[(i, col)];
            let tj = t[(j, col)];
            t[(i, col)] = w1.conj() * ti + w2.conj() * tj;
            t[(j, col)] = -w2 * ti + w1 * tj;
        }
        for r in 0..n {
            let vi = v[(r, i)];
            let vj = v[(r, j)];
            v[(r, i)] = vi * w1 + vj * w2;
            v[(r, j)] = -vi * w2.conj() + vj * w1.conj();
        }
    }
    true
}

/// Hermitian matrix H with e^{iH} = U for a unitary U, eigenangles taken in
/// (−π, π].
///
/// U is normal, so its Hermitian and anti-Hermitian parts commute and share
/// an eigenbasis; diagonalizing the first and refining degenerate clusters
/// with the second recovers that basis without a general complex eigensolver.
pub fn log_unitary(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::input("log_unitary needs a square matrix"));
    }
    let (mut basis, mut t) = two_step_basis(u);
    // The two-step split leaves O(gap)-sized couplings between nearly
    // degenerate directions; polish them away with 2×2 Schur rotations.
    polish_normal(&mut t, &mut basis);

    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        let angle = t[(j, j)].arg();
        let v = basis.column(j).into_owned();
        let outer = &v * v.adjoint();
        h += outer * Complex64::new(angle, 0.0);
    }

    // Validate the reconstruction; a failure here indicates the input was
    // not unitary to working precision.
    let back = expm(&(&h * Complex64::new(0.0, 1.0)));
    let err = (&back - u).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if err > 1e-8 {
        return Err(Error::numerical(format!(
            "log of unitary did not converge (reconstruction error {err:.3e}); \
             is the input unitary?"
        )));
    }
    Ok(h)
}
