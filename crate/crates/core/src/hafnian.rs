//! Loop hafnian of a complex symmetric matrix.
//!
//! The loop hafnian sums, over all perfect matchings of the index set where a
//! vertex may be matched to itself, the product of matrix entries selected by
//! the matching: off-diagonal entries weight pair edges, diagonal entries
//! weight loops. It is the quantity that turns a Gaussian state's moment data
//! into photon-number amplitudes.
//!
//! Two evaluators are provided on purpose:
//!
//! * [`loop_hafnian_by_enumeration`] walks every matching explicitly and is
//!   the reference implementation,
//! * [`loop_hafnian`] uses inclusion–exclusion over a fixed pairing with
//!   power-trace generating functions and is the production path.
//!
//! They share no code beyond matrix access, so agreement between the two is a
//! strong check against sign and convention bugs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Reference evaluator: explicit enumeration of all single-pair/loop
/// matchings. Cost grows like the number of involutions of the index set;
/// fine for matrices up to ~12×12.
pub fn loop_hafnian_by_enumeration(a: &DMatrix<Complex64>) -> Complex64 {
    assert_eq!(a.nrows(), a.ncols(), "loop hafnian needs a square matrix");
    let n = a.nrows();
    let mut remaining: Vec<usize> = (0..n).collect();
    enumerate(a, &mut remaining)
}

fn enumerate(a: &DMatrix<Complex64>, remaining: &mut Vec<usize>) -> Complex64 {
    let Some(&v) = remaining.first() else {
        return Complex64::new(1.0, 0.0);
    };
    remaining.remove(0);
    // v takes its loop
    let mut total = a[(v, v)] * enumerate(a, remaining);
    // or pairs with any later vertex
    for pos in 0..remaining.len() {
        let u = remaining.remove(pos);
        total += a[(v, u)] * enumerate(a, remaining);
        remaining.insert(pos, u);
    }
    remaining.insert(0, v);
    total
}

/// Production evaluator: inclusion–exclusion over subsets of a fixed perfect
/// pairing, with cycle/path contributions accumulated through power traces.
///
/// For an n×n matrix (n = 2m after padding odd sizes with a unit loop), each
/// subset S of the m fixed pairs contributes the z^m coefficient of
/// exp(Σ_j c_j z^j) with
///
/// c_j = tr(B^j)/(2j) + (1/2)·vᵀ B^(j−1) X v,
///
/// where B = X·Ā, Ā is the submatrix on S with its diagonal zeroed, v is the
/// diagonal of the submatrix, and X swaps the two members of each pair. Cycle
/// terms count alternating cycles, path terms count loop-terminated
/// alternating paths; walks that revisit a pair cancel in the alternating-sign
/// sum over subsets.
pub fn loop_hafnian(a: &DMatrix<Complex64>) -> Complex64 {
    assert_eq!(a.nrows(), a.ncols(), "loop hafnian needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if n % 2 == 1 {
        // Pad with an isolated vertex whose loop weight is one; it must take
        // its loop in every matching, leaving the value unchanged.
        let mut padded = DMatrix::<Complex64>::zeros(n + 1, n + 1);
        padded.view_mut((0, 0), (n, n)).copy_from(a);
        padded[(n, n)] = Complex64::new(1.0, 0.0);
        return loop_hafnian(&padded);
    }
    let m = n / 2;
    assert!(
        m < 26,
        "loop hafnian of a {n}×{n} matrix needs 2^{m} subset terms; too large"
    );
    let mut total = Complex64::new(0.0, 0.0);
    for mask in 0u32..(1u32 << m) {
        let popcount = mask.count_ones() as usize;
        let f = subset_coefficient(a, mask, m);
        let sign = if (m - popcount).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += f * sign;
    }
    total
}

/// z^m coefficient of the generating function for the pair subset `mask`.
#[allow(clippy::needless_range_loop)] // j is the polynomial degree
fn subset_coefficient(a: &DMatrix<Complex64>, mask: u32, m: usize) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    if mask == 0 {
        // exp(0) has no z^m coefficient for m >= 1
        return zero;
    }
    let mut indices = Vec::with_capacity(2 * mask.count_ones() as usize);
    for pair in 0..m {
        if mask & (1 << pair) != 0 {
            indices.push(2 * pair);
            indices.push(2 * pair + 1);
        }
    }
    let s = indices.len();

    // Ā with zeroed diagonal, loop weights v, pair-swap X (applied implicitly
    // by row reordering: (XM)[row r] = M[partner(r)]).
    let mut abar = DMatrix::<Complex64>::zeros(s, s);
    let mut v = DVector::<Complex64>::zeros(s);
    for (r, &i) in indices.iter().enumerate() {
        v[r] = a[(i, i)];
        for (c, &j) in indices.iter().enumerate() {
            if r != c {
                abar[(r, c)] = a[(i, j)];
            }
        }
    }
    let partner = |r: usize| if r.is_multiple_of(2) { r + 1 } else { r - 1 };
    let mut b = DMatrix::<Complex64>::zeros(s, s);
    for r in 0..s {
        for c in 0..s {
            b[(r, c)] = abar[(partner(r), c)];
        }
    }
    let xv = DVector::<Complex64>::from_fn(s, |r, _| v[partner(r)]);

    // c_j for j = 1..m via running powers of B.
    let mut coeffs = vec![zero; m + 1];
    let mut b_power = DMatrix::<Complex64>::identity(s, s); // B^(j-1)
    for j in 1..=m {
        let path: Complex64 = v.dot(&(&b_power * &xv)); // bilinear, no conjugation
        b_power *= &b;
        let cycle = b_power.trace();
        coeffs[j] = cycle / (2.0 * j as f64) + 0.5 * path;
    }

    poly_exp_coefficient(&coeffs, m)
}

/// z^m coefficient of exp(Σ_{j>=1} c_j z^j), truncated at degree m.
fn poly_exp_coefficient(c: &[Complex64], m: usize) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = vec![zero; m + 1];
    acc[0] = Complex64::new(1.0, 0.0);
    let mut term = acc.clone(); // g^k / k!
    for k in 1..=m {
        // term <- term * g / k, truncated at degree m
        let mut next = vec![zero; m + 1];
        for d in 0..=m {
            if term[d] == zero {
                continue;
            }
            for j in 1..=(m - d) {
                next[d + j] += term[d] * c[j];
            }
        }
        for x in next.iter_mut() {
            *x /= k as f64;
        }
        term = next;
        for d in 0..=m {
            acc[d] += term[d];
        }
    }
    acc[m]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng, complex: bool) -> DMatrix<Complex64> {
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
                a[(i, j)] = Complex64::new(re, im);
                a[(j, i)] = a[(i, j)];
            }
        }
        a
    }

    #[test]
    fn empty_matrix_gives_one() {
        let a = DMatrix::<Complex64>::zeros(0, 0);
        assert_eq!(loop_hafnian(&a), c(1.0));
        assert_eq!(loop_hafnian_by_enumeration(&a), c(1.0));
    }

    #[test]
    fn two_by_two_by_hand() {
        // matchings: both loops (a·d) or the single pair (b)
        let a = DMatrix::<Complex64>::from_row_slice(2, 2, &[c(2.0), c(3.0), c(3.0), c(5.0)]);
        let expect = c(2.0 * 5.0 + 3.0);
        assert!((loop_hafnian(&a) - expect).norm() < 1e-14);
        assert!((loop_hafnian_by_enumeration(&a) - expect).norm() < 1e-14);
    }

    #[test]
    fn all_ones_counts_involutions() {
        // With every weight 1, the loop hafnian counts matchings-with-loops,
        // i.e. involutions: 1, 2, 4, 10, 26, 76 for n = 1..6.
        let counts = [1.0, 2.0, 4.0, 10.0, 26.0, 76.0];
        for (n, &expect) in counts.iter().enumerate() {
            let a = DMatrix::<Complex64>::from_element(n + 1, n + 1, c(1.0));
            let got = loop_hafnian(&a);
            assert!(
                (got - c(expect)).norm() < 1e-12,
                "n={} got {}",
                n + 1,
                got
            );
        }
    }

    #[test]
    fn zero_diagonal_counts_perfect_matchings() {
        // (n-1)!! perfect matchings for even n; zero for odd n.
        let mut a = DMatrix::<Complex64>::from_element(6, 6, c(1.0));
        for i in 0..6 {
            a[(i, i)] = c(0.0);
        }
        assert!((loop_hafnian(&a) - c(15.0)).norm() < 1e-12);
        let b = a.view((0, 0), (5, 5)).into_owned();
        assert!(loop_hafnian(&b).norm() < 1e-12);
    }

    #[test]
    fn enumeration_and_inclusion_exclusion_agree_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            for _ in 0..20 {
                let a = random_symmetric(n, &mut rng, true);
                let fast = loop_hafnian(&a);
                let slow = loop_hafnian_by_enumeration(&a);
                let scale = slow.norm().max(1.0);
                assert!(
                    (fast - slow).norm() / scale < 1e-12,
                    "n={n} fast={fast} slow={slow}"
                );
            }
        }
    }
}
