//! Walsh-function machinery: the dyadically ordered Walsh matrix, pointwise
//! Walsh function values, the operational matrix of integration, the XOR
//! permutation family, and the similarity-transformed triangular forms.
//!
//! Conventions: functions live on the normalized interval [0,1); values at
//! dyadic discontinuities are right-continuous; a basis of order k holds the
//! 2^k functions w_0 .. w_{2^k - 1}.

use std::io::Write;

use crate::error::{HillError, Result};
use crate::linalg::{lu_factor, Mat};

/// Maximum supported order exponent for dense constructions.
pub const MAX_K: u32 = 16;

fn check_k(k: u32) -> Result<()> {
    if !(1..=MAX_K).contains(&k) {
        return Err(HillError::Size(format!(
            "order exponent k={k} outside supported range 1..={MAX_K}"
        )));
    }
    Ok(())
}

/// Reverses the low `k` bits of `c`.
#[inline]
fn bit_reverse(c: usize, k: u32) -> usize {
    let mut out = 0usize;
    for bit in 0..k {
        out |= ((c >> bit) & 1) << (k - 1 - bit);
    }
    out
}

/// Sign of w_n on dyadic cell `c` of a 2^k grid: parity of the bit overlap
/// between n and the bit-reversed cell index. Rows built this way reproduce
/// the Rademacher products r_1^{b_0} r_2^{b_1} ... with r_m right-continuous.
#[inline]
pub(crate) fn walsh_cell_sign(n: usize, c: usize, k: u32) -> i64 {
    if (n & bit_reverse(c, k)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Value of the n-th dyadically ordered Walsh function at t in [0,1).
pub fn walsh_value(n: usize, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(HillError::Domain(format!(
            "walsh_value: t={t} outside [0,1)"
        )));
    }
    let k = usize::BITS - n.leading_zeros();
    if k > 32 {
        return Err(HillError::Domain(format!(
            "walsh_value: sequency {n} too large"
        )));
    }
    let k = k.max(1);
    let cell = (t * (1u64 << k) as f64) as usize;
    Ok(walsh_cell_sign(n, cell, k) as f64)
}

/// Dyadically ordered Walsh matrix of order 2^k. Entry (n, c) is the value of
/// w_n on cell c; symmetric, and W * W = 2^k * I.
pub fn walsh_matrix(k: u32) -> Result<Mat> {
    check_k(k)?;
    let n = 1usize << k;
    Ok(Mat::from_fn(n, n, |row, col| {
        walsh_cell_sign(row, col, k) as f64
    }))
}

/// Sequency of the product w_n * w_m: no-carry modulo-2 addition of indices.
pub fn dyadic_index(n: usize, m: usize) -> usize {
    n ^ m
}

/// Operational matrix of integration P of order 2^k, built by the block
/// recursion P_j = [[P_{j-1}, -c I], [c I, 0]] with c = 2^-(j+1) and base 1/2.
/// Maps Walsh coefficients of f to Walsh coefficients of the running integral
/// of f over [0,1].
pub fn integration_operator(k: u32) -> Result<Mat> {
    check_k(k)?;
    let mut p = Mat {
        rows: 1,
        cols: 1,
        data: vec![0.5],
    };
    for j in 1..=k {
        p = assemble_integration_block(&p, j);
    }
    Ok(p)
}

/// One doubling step of the integration-operator recursion; exposed for the
/// reassembly test.
pub fn assemble_integration_block(prev: &Mat, j: u32) -> Mat {
    let half = prev.rows;
    let c = 0.5f64.powi(j as i32 + 1);
    Mat::from_fn(2 * half, 2 * half, |i, l| {
        if i < half && l < half {
            prev.at(i, l)
        } else if i < half {
            if l - half == i {
                -c
            } else {
                0.0
            }
        } else if l < half {
            if i - half == l {
                c
            } else {
                0.0
            }
        } else {
            0.0
        }
    })
}

/// The 2^k symmetric involutive permutations that reindex a Walsh-function
/// vector under pointwise multiplication. Stored as index maps: applying
/// permutation i to a vector v gives w with w[j] = v[maps[i][j]].
#[derive(Debug, Clone)]
pub struct PermutationFamily {
    pub k: u32,
    maps: Vec<Vec<u32>>,
}

impl PermutationFamily {
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn map(&self, i: usize) -> &[u32] {
        &self.maps[i]
    }

    /// Applies permutation i to v.
    pub fn apply(&self, i: usize, v: &[f64]) -> Vec<f64> {
        self.maps[i].iter().map(|&src| v[src as usize]).collect()
    }

    /// Dense matrix form of permutation i, for tests and debugging.
    pub fn dense(&self, i: usize) -> Mat {
        let n = self.maps.len();
        Mat::from_fn(n, n, |r, c| {
            if self.maps[i][r] as usize == c {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Builds the permutation family by the half-size block recursion: the first
/// half of the family is block-diagonal in the half-size maps, the second
/// half is block-anti-diagonal.
pub fn permutation_family(k: u32) -> Result<PermutationFamily> {
    check_k(k)?;
    let mut maps: Vec<Vec<u32>> = vec![vec![0]];
    for _ in 0..k {
        let half = maps.len();
        let mut next: Vec<Vec<u32>> = Vec::with_capacity(2 * half);
        for old in &maps {
            let mut m = Vec::with_capacity(2 * half);
            m.extend(old.iter().copied());
            m.extend(old.iter().map(|&x| x + half as u32));
            next.push(m);
        }
        for old in &maps {
            let mut m = Vec::with_capacity(2 * half);
            m.extend(old.iter().map(|&x| x + half as u32));
            m.extend(old.iter().copied());
            next.push(m);
        }
        maps = next;
    }
    Ok(PermutationFamily { k, maps })
}

/// Matrix whose column j is permutation j applied to gamma. For gamma equal
/// to the Walsh coefficients of a function this is the sampling matrix that
/// post-factors the Walsh vector out of w w^T gamma.
pub fn lambda_of_vector(gamma: &[f64], family: &PermutationFamily) -> Result<Mat> {
    let n = family.len();
    if gamma.len() != n {
        return Err(HillError::Size(format!(
            "lambda_of_vector: gamma length {} != family size {}",
            gamma.len(),
            n
        )));
    }
    Ok(Mat::from_fn(n, n, |i, j| {
        gamma[family.maps[j][i] as usize]
    }))
}

/// A truncated Walsh series on [0,1]: 2^k coefficients.
#[derive(Debug, Clone)]
pub struct WalshSeries {
    pub k: u32,
    pub coeffs: Vec<f64>,
}

impl WalshSeries {
    /// Series value at t, summing coeff_n * w_n(t).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (n, &a) in self.coeffs.iter().enumerate() {
            if a != 0.0 {
                acc += a * walsh_value(n, t)?;
            }
        }
        Ok(acc)
    }
}

/// Walsh coefficients a_n of f by midpoint quadrature on the 2^k dyadic
/// cells; exact whenever f is constant on cells.
pub fn walsh_series_coeffs(f: impl Fn(f64) -> f64, k: u32) -> Result<WalshSeries> {
    check_k(k)?;
    let n = 1usize << k;
    let mut cell_values = Vec::with_capacity(n);
    for c in 0..n {
        let t = (c as f64 + 0.5) / n as f64;
        let v = f(t);
        if !v.is_finite() {
            return Err(HillError::Evaluation(format!(
                "walsh_series_coeffs: f({t}) is not finite"
            )));
        }
        cell_values.push(v);
    }
    let coeffs = coeffs_from_cell_values(&cell_values, k);
    Ok(WalshSeries { k, coeffs })
}

/// Coefficients of the step function taking `cell_values` on the dyadic cells.
pub(crate) fn coeffs_from_cell_values(cell_values: &[f64], k: u32) -> Vec<f64> {
    let n = cell_values.len();
    debug_assert_eq!(n, 1usize << k);
    let inv_n = 1.0 / n as f64;
    (0..n)
        .map(|row| {
            let mut acc = 0.0;
            for (c, &v) in cell_values.iter().enumerate() {
                acc += walsh_cell_sign(row, c, k) as f64 * v;
            }
            acc * inv_n
        })
        .collect()
}

/// Walsh basis of order 2^k: the Walsh matrix plus integration operator.
#[derive(Debug, Clone)]
pub struct WalshBasis {
    pub k: u32,
    pub n: usize,
    pub hadamard: Mat,
    pub integ_op: Mat,
    pub notes: String,
}

impl WalshBasis {
    pub fn new(k: u32) -> Result<Self> {
        Ok(WalshBasis {
            k,
            n: 1usize << k,
            hadamard: walsh_matrix(k)?,
            integ_op: integration_operator(k)?,
            notes: format!(
                "order 2^{k}; hadamard rows from Rademacher bit parity in dyadic order; \
                 integration operator from the block recursion with base 1/2"
            ),
        })
    }
}

/// Triangular similarity forms of the integration operator, with the scaling
/// constants measured by direct matrix products rather than assumed.
#[derive(Debug, Clone)]
pub struct PbarMatrices {
    /// W P W: upper triangular, 1/2 on the diagonal, 1 above.
    pub pbar: Mat,
    /// Companion with alternating signs: 1/2 diagonal, (-1)^(j-i) above.
    pub companion: Mat,
    /// Measured scalar s in pbar * companion = s * I (comes out 1/4).
    pub product_scalar: f64,
    /// Measured scalar r in W P^-1 W = r * companion (comes out 2^(2k+2)).
    pub inverse_transform_scale: f64,
}

/// Builds and cross-validates the triangular forms for order 2^k.
///
/// The constructed pbar must match the direct product W P W entrywise, and
/// the companion must be proportional to W P^-1 W; the proportionality
/// constants are measured and returned.
pub fn pbar_matrices(k: u32) -> Result<PbarMatrices> {
    check_k(k)?;
    let n = 1usize << k;
    let w = walsh_matrix(k)?;
    let p = integration_operator(k)?;

    let pbar = Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.5
        } else if j > i {
            1.0
        } else {
            0.0
        }
    });
    let companion = Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.5
        } else if j > i {
            if (j - i) % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        } else {
            0.0
        }
    });

    // All quantities involved are dyadic rationals, so these products are
    // exact in f64 and the comparisons use a tight tolerance.
    let wpw = w.mul(&p).mul(&w);
    let diff = wpw.max_abs_diff(&pbar);
    if diff > 1e-9 {
        return Err(HillError::Numeric(format!(
            "pbar validation failed: |W P W - pbar| = {diff:e}"
        )));
    }

    let prod = pbar.mul(&companion);
    let product_scalar = prod.at(0, 0);
    let off = prod.max_abs_diff(&Mat::identity(n).scale(product_scalar));
    if off > 1e-9 {
        return Err(HillError::Numeric(format!(
            "companion validation failed: pbar * companion deviates from scalar identity by {off:e}"
        )));
    }

    // W P^-1 W via an LU solve of P against the columns of W.
    let lu = lu_factor(&p)?;
    let mut pinv_w = Mat::zeros(n, n);
    for j in 0..n {
        let x = lu.solve(&w.col(j));
        for i in 0..n {
            pinv_w.set(i, j, x[i]);
        }
    }
    let wpinvw = w.mul(&pinv_w);
    let inverse_transform_scale = wpinvw.at(0, 0) / companion.at(0, 0);
    let scaled = companion.scale(inverse_transform_scale);
    let dev = wpinvw.max_abs_diff(&scaled) / inverse_transform_scale.abs();
    if dev > 1e-9 {
        return Err(HillError::Numeric(format!(
            "companion validation failed: W P^-1 W deviates from scaled companion by {dev:e} (relative)"
        )));
    }

    Ok(PbarMatrices {
        pbar,
        companion,
        product_scalar,
        inverse_transform_scale,
    })
}

/// Debug dump: plain decimal, one row per line, comma separated, no header.
pub fn write_matrix_csv<W: Write>(m: &Mat, out: &mut W) -> Result<()> {
    for i in 0..m.rows {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 8x8 Walsh matrix as printed, except row 5 which is corrected to
    /// the orthogonal Rademacher product r1*r3 (the printed row fails
    /// orthogonality against row 1 and is treated as a typo).
    const W8: [[i64; 8]; 8] = [
        [1, 1, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, -1, -1, -1, -1],
        [1, 1, -1, -1, 1, 1, -1, -1],
        [1, 1, -1, -1, -1, -1, 1, 1],
        [1, -1, 1, -1, 1, -1, 1, -1],
        [1, -1, 1, -1, -1, 1, -1, 1],
        [1, -1, -1, 1, 1, -1, -1, 1],
        [1, -1, -1, 1, -1, 1, 1, -1],
    ];

    #[test]
    fn matrix_matches_printed_eight_by_eight() {
        let w = walsh_matrix(3).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(w.at(i, j), W8[i][j] as f64, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn printed_row_five_is_not_orthogonal_but_ours_is() {
        let printed_row5: [i64; 8] = [1, -1, 1, -1, -1, -1, -1, 1];
        let dot: i64 = (0..8).map(|j| printed_row5[j] * W8[1][j]).sum();
        assert_ne!(dot, 0, "the printed row really is inconsistent");
        let w = walsh_matrix(3).unwrap();
        let dot: f64 = (0..8).map(|j| w.at(5, j) * w.at(1, j)).sum();
        assert_eq!(dot, 0.0);
    }

    #[test]
    fn matrix_symmetric_and_self_product_scaled_identity() {
        for k in 1..=6u32 {
            let n = 1usize << k;
            let w = walsh_matrix(k).unwrap();
            // exact integer arithmetic
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(w.at(i, j), w.at(j, i));
                    let dot: i64 = (0..n).map(|l| (w.at(i, l) * w.at(l, j)) as i64).sum();
                    let expect = if i == j { 1i64 << k } else { 0 };
                    assert_eq!(dot, expect, "k={k} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn matrix_orthogonality_up_to_k10() {
        // row-pair dot products in integer arithmetic; symmetry makes this
        // the full W * W = 2^k I statement
        for k in 7..=10u32 {
            let n = 1usize << k;
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|r| (0..n).map(|c| walsh_cell_sign(r, c, k)).collect())
                .collect();
            for i in 0..n {
                for j in i..n {
                    let dot: i64 = (0..n).map(|l| rows[i][l] * rows[j][l]).sum();
                    let expect = if i == j { 1i64 << k } else { 0 };
                    assert_eq!(dot, expect, "k={k} ({i},{j})");
                }
                assert_eq!(rows[i][0], 1, "first column is +1");
            }
        }
    }

    #[test]
    fn walsh_value_basics() {
        for &t in &[0.0, 0.1, 0.5, 0.75, 0.999] {
            assert_eq!(walsh_value(0, t).unwrap(), 1.0);
        }
        assert_eq!(walsh_value(1, 0.1).unwrap(), 1.0);
        assert_eq!(walsh_value(1, 0.9).unwrap(), -1.0);
        assert!(walsh_value(1, 1.0).is_err());
        assert!(walsh_value(1, -0.25).is_err());
    }

    #[test]
    fn walsh_value_consistent_with_matrix_at_midpoints() {
        for k in 1..=5u32 {
            let n = 1usize << k;
            let w = walsh_matrix(k).unwrap();
            for row in 0..n {
                for c in 0..n {
                    let t = (c as f64 + 0.5) / n as f64;
                    assert_eq!(walsh_value(row, t).unwrap(), w.at(row, c));
                }
            }
        }
    }

    #[test]
    fn walsh_value_left_of_half_matches_entry_3_3() {
        // w_3 just below 0.5 lands in cell 3 of the order-8 grid.
        let w = walsh_matrix(3).unwrap();
        assert_eq!(walsh_value(3, 0.5 - 1e-9).unwrap(), w.at(3, 3));
    }

    #[test]
    fn dyadic_index_examples() {
        assert_eq!(dyadic_index(7, 2), 5);
        assert_eq!(dyadic_index(2, 6), 4);
        assert_eq!(dyadic_index(5, 0), 5);
        assert_eq!(dyadic_index(0, 5), 5);
    }

    #[test]
    fn product_rule_exhaustive_small_orders() {
        for k in 1..=6u32 {
            let n = 1usize << k;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let lhs = walsh_cell_sign(a, c, k) * walsh_cell_sign(b, c, k);
                        let rhs = walsh_cell_sign(a ^ b, c, k);
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn integration_operator_order_one_and_two() {
        let p1 = integration_operator(1).unwrap();
        assert_eq!(p1.data, vec![0.5, -0.25, 0.25, 0.0]);

        let p2 = integration_operator(2).unwrap();
        let expect = [
            [0.5, -0.25, -0.125, 0.0],
            [0.25, 0.0, 0.0, -0.125],
            [0.125, 0.0, 0.0, 0.0],
            [0.0, 0.125, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p2.at(i, j), expect[i][j], "({i},{j})");
            }
        }
    }

    #[test]
    fn integration_operator_block_reassembly_bit_exact() {
        for k in 2..=6u32 {
            let direct = integration_operator(k).unwrap();
            let prev = integration_operator(k - 1).unwrap();
            let reassembled = assemble_integration_block(&prev, k);
            assert_eq!(direct.data, reassembled.data, "k={k}");
        }
    }

    #[test]
    fn integration_operator_first_row_is_ramp_coefficients() {
        // P applied to the constant-function coefficient vector e_1 gives the
        // Walsh coefficients of t; cross-check against midpoint quadrature.
        for k in 2..=6u32 {
            let p = integration_operator(k).unwrap();
            let n = 1usize << k;
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            // coefficients of the integral of 1 are the first COLUMN of P^T,
            // i.e. a^T = e1^T P, which is the first row of P.
            let ramp = walsh_series_coeffs(|t| t, k).unwrap();
            for j in 0..n {
                assert!(
                    (p.at(0, j) - ramp.coeffs[j]).abs() < 1e-14,
                    "k={k} coeff {j}: {} vs {}",
                    p.at(0, j),
                    ramp.coeffs[j]
                );
            }
        }
        let p = integration_operator(2).unwrap();
        assert_eq!(p.row(0), &[0.5, -0.25, -0.125, 0.0]);
    }

    #[test]
    fn integration_operator_determinant_measured() {
        // det(P) is sometimes quoted as 2^-k; the measured value is
        // 2^(-(k+1) 2^k). Only nonsingularity matters downstream.
        for k in 1..=6u32 {
            let p = integration_operator(k).unwrap();
            let n = 1usize << k;
            let mut log2_abs = 0.0f64;
            // determinant via plain elimination, summing log2 of the pivots
            // to dodge underflow at k = 6
            let mut a = p.clone();
            let mut sign = 1.0f64;
            for col in 0..n {
                let mut best = col;
                for r in col + 1..n {
                    if a.at(r, col).abs() > a.at(best, col).abs() {
                        best = r;
                    }
                }
                if best != col {
                    for j in 0..n {
                        let t = a.at(col, j);
                        a.set(col, j, a.at(best, j));
                        a.set(best, j, t);
                    }
                    sign = -sign;
                }
                let piv = a.at(col, col);
                assert!(piv != 0.0, "P must be nonsingular");
                log2_abs += piv.abs().log2();
                for r in col + 1..n {
                    let f = a.at(r, col) / piv;
                    for j in col..n {
                        a.set(r, j, a.at(r, j) - f * a.at(col, j));
                    }
                }
            }
            let expected = -((k as f64 + 1.0) * (1u64 << k) as f64);
            assert!(
                (log2_abs - expected).abs() < 1e-6,
                "k={k}: log2|det| = {log2_abs}, expected {expected}"
            );
            let _ = sign;
        }
    }

    #[test]
    fn permutation_family_small_orders() {
        let fam = permutation_family(2).unwrap();
        assert_eq!(fam.map(0), &[0, 1, 2, 3]);
        assert_eq!(fam.map(1), &[1, 0, 3, 2]);
        assert_eq!(fam.map(2), &[2, 3, 0, 1]);
        assert_eq!(fam.map(3), &[3, 2, 1, 0]);
    }

    #[test]
    fn permutation_family_involutions_and_transitive() {
        for k in 1..=8u32 {
            let n = 1usize << k;
            let fam = permutation_family(k).unwrap();
            assert_eq!(fam.len(), n);
            // closed form: map i sends j to i XOR j
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(fam.map(i)[j] as usize, i ^ j);
                }
                // involution
                for j in 0..n {
                    let once = fam.map(i)[j] as usize;
                    assert_eq!(fam.map(i)[once] as usize, j);
                }
            }
            // i -> (perm i applied to e1) enumerates all unit vectors once
            let mut seen = vec![false; n];
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            for i in 0..n {
                let v = fam.apply(i, &e1);
                let hot: Vec<usize> = (0..n).filter(|&j| v[j] == 1.0).collect();
                assert_eq!(hot.len(), 1);
                assert!(!seen[hot[0]]);
                seen[hot[0]] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn permutation_dense_is_symmetric() {
        let fam = permutation_family(3).unwrap();
        for i in 0..8 {
            let d = fam.dense(i);
            for r in 0..8 {
                for c in 0..8 {
                    assert_eq!(d.at(r, c), d.at(c, r));
                }
            }
        }
    }

    #[test]
    fn lambda_of_vector_unit_and_ones() {
        let fam = permutation_family(2).unwrap();
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let m = lambda_of_vector(&e1, &fam).unwrap();
        // column j of Lambda_gamma is permutation j applied to e1: unit at j
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.at(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let ones = [1.0; 4];
        let m = lambda_of_vector(&ones, &fam).unwrap();
        assert!(m.data.iter().all(|&v| v == 1.0));

        assert!(lambda_of_vector(&[1.0; 3], &fam).is_err());
    }

    #[test]
    fn lambda_of_vector_factors_walsh_outer_product() {
        // M(t) gamma = Lambda_gamma w(t) at the 64 midpoints of the order-64
        // grid, for gamma the Walsh coefficients of cos(2 pi t), k = 3.
        let k = 3u32;
        let n = 1usize << k;
        let gamma = walsh_series_coeffs(|t| (2.0 * std::f64::consts::PI * t).cos(), k)
            .unwrap()
            .coeffs;
        let fam = permutation_family(k).unwrap();
        let lam = lambda_of_vector(&gamma, &fam).unwrap();
        for s in 0..64 {
            let t = (s as f64 + 0.5) / 64.0;
            let wt: Vec<f64> = (0..n).map(|i| walsh_value(i, t).unwrap()).collect();
            // lhs: (w w^T gamma)[i] = w_i(t) * sum_j w_j(t) gamma_j
            let dot: f64 = wt.iter().zip(&gamma).map(|(a, b)| a * b).sum();
            let lhs: Vec<f64> = wt.iter().map(|wi| wi * dot).collect();
            let rhs = lam.mul_vec(&wt);
            for i in 0..n {
                assert!((lhs[i] - rhs[i]).abs() < 1e-12, "t={t} i={i}");
            }
        }
    }

    #[test]
    fn series_coeffs_examples() {
        let c = walsh_series_coeffs(|_| 1.0, 3).unwrap().coeffs;
        assert_eq!(c[0], 1.0);
        assert!(c[1..].iter().all(|&v| v == 0.0));

        let ramp = walsh_series_coeffs(|t| t, 2).unwrap().coeffs;
        assert_eq!(ramp, vec![0.5, -0.25, -0.125, 0.0]);

        let w5 = walsh_series_coeffs(|t| walsh_value(5, t).unwrap(), 3)
            .unwrap()
            .coeffs;
        for (i, &v) in w5.iter().enumerate() {
            assert_eq!(v, if i == 5 { 1.0 } else { 0.0 });
        }

        assert!(walsh_series_coeffs(|_| f64::NAN, 2).is_err());
    }

    #[test]
    fn operational_integration_error_shrinks() {
        // Reconstruction of the running integral of t^2 through coeffs^T P w
        // tightens as k grows.
        let mut prev_err = f64::INFINITY;
        for k in 4..=10u32 {
            let coeffs = walsh_series_coeffs(|t| t * t, k).unwrap();
            let p = integration_operator(k).unwrap();
            let n = 1usize << k;
            // integral coefficients: a^T P
            let int_coeffs: Vec<f64> = (0..n)
                .map(|j| (0..n).map(|i| coeffs.coeffs[i] * p.at(i, j)).sum())
                .collect();
            let series = WalshSeries {
                k,
                coeffs: int_coeffs,
            };
            // evaluation grid deliberately incommensurate with the dyadic
            // cells so no order k gets a resonant advantage
            let mut max_err = 0.0f64;
            for s in 0..777 {
                let t = (s as f64 + 0.5) / 777.0;
                let err = (series.eval(t).unwrap() - t * t * t / 3.0).abs();
                max_err = max_err.max(err);
            }
            assert!(
                max_err < prev_err,
                "k={k}: error {max_err} did not shrink from {prev_err}"
            );
            prev_err = max_err;
        }
    }

    #[test]
    fn pbar_matrices_validated_constants() {
        for k in 1..=4u32 {
            let pm = pbar_matrices(k).unwrap();
            assert_eq!(pm.product_scalar, 0.25, "k={k}");
            let expect = (1u64 << (2 * k + 2)) as f64;
            assert!(
                (pm.inverse_transform_scale - expect).abs() / expect < 1e-9,
                "k={k}: measured {} vs 2^(2k+2) = {expect}",
                pm.inverse_transform_scale
            );
            // displayed pattern: 1/2 diagonal, ones above
            let n = 1usize << k;
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j {
                        0.5
                    } else if j > i {
                        1.0
                    } else {
                        0.0
                    };
                    assert_eq!(pm.pbar.at(i, j), expect);
                }
            }
        }
    }

    #[test]
    fn whpw_direct_product_ratio_to_printed_pbar() {
        // W P W equals the printed triangular form exactly; the similarity
        // transform W^-1 P W is 2^-k of it.
        let k = 2u32;
        let w = walsh_matrix(k).unwrap();
        let p = integration_operator(k).unwrap();
        let wpw = w.mul(&p).mul(&w);
        let pm = pbar_matrices(k).unwrap();
        assert_eq!(wpw.max_abs_diff(&pm.pbar), 0.0);
        let similarity = wpw.scale(1.0 / (1u64 << k) as f64);
        assert!((similarity.at(0, 1) - pm.pbar.at(0, 1) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_csv_dump_format() {
        let m = Mat::from_fn(2, 2, |i, j| (i * 2 + j) as f64 + 0.5);
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.5,1.5\n2.5,3.5\n");
    }

    #[test]
    fn out_of_range_k_rejected() {
        assert!(walsh_matrix(0).is_err());
        assert!(walsh_matrix(17).is_err());
        assert!(integration_operator(0).is_err());
        assert!(permutation_family(17).is_err());
    }
}
