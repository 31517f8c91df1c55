//! Shared dense linear-algebra kernels: norms, numerical kernels via SVD,
//! orthonormalization and the matrix exponential.

use nalgebra::{Complex, DMatrix, DVector};

use crate::tol::Tolerances;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Largest entry modulus, `max_ij |a_ij|`. Zero for empty matrices.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// `max|A - A†|`, the entrywise deviation from Hermiticity.
pub fn hermitian_residual(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn is_hermitian(a: &CMatrix, tol: &Tolerances) -> bool {
    hermitian_residual(a) <= tol.herm_rel * max_abs(a).max(1.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Promote a real matrix to a complex one.
pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(cr)
}

/// Numerical kernel of a matrix together with the singular-value margins
/// around the rank cut, used by callers that must report borderline
/// decisions.
#[derive(Debug, Clone)]
pub struct Kernel {
    /// Orthonormal kernel basis, one column per kernel direction.
    pub basis: CMatrix,
    /// The singular-value threshold that produced the split.
    pub threshold: f64,
    /// Smallest singular value treated as nonzero, if any.
    pub smallest_retained: Option<f64>,
    /// Largest singular value assigned to the kernel, if any.
    pub largest_discarded: Option<f64>,
}

impl Kernel {
    /// Ratio of the smallest retained singular value to the threshold;
    /// `None` when everything fell in the kernel.
    pub fn retained_margin(&self) -> Option<f64> {
        self.smallest_retained
            .map(|s| if self.threshold > 0.0 { s / self.threshold } else { f64::INFINITY })
    }
}

/// Orthonormal basis of `ker A` from the right singular vectors whose
/// singular values fall at or below the rank threshold.
pub fn null_space(a: &CMatrix, tol: &Tolerances) -> Kernel {
    null_space_with_floor(a, tol, 0.0)
}

/// Like [`null_space`], but the rank threshold is computed against
/// `max(sigma_max, sigma_floor)`. Residual matrices that are *supposed* to
/// vanish need their parent operator's scale as the floor; otherwise a
/// pure-noise residual would be judged against its own noise level and
/// nothing would ever count as kernel.
pub fn null_space_with_floor(a: &CMatrix, tol: &Tolerances, sigma_floor: f64) -> Kernel {
    null_space_with_thresholds(a, tol, sigma_floor, 0.0)
}

/// Fully parameterized kernel split: the cut is the larger of the
/// relative rank threshold (against `max(sigma_max, sigma_floor)`) and an
/// absolute floor, used by iterative callers that must keep the cut above
/// an accumulated-contamination estimate.
pub fn null_space_with_thresholds(
    a: &CMatrix,
    tol: &Tolerances,
    sigma_floor: f64,
    abs_floor: f64,
) -> Kernel {
    let ncols = a.ncols();
    if ncols == 0 {
        return Kernel {
            basis: CMatrix::zeros(0, 0),
            threshold: 0.0,
            smallest_retained: None,
            largest_discarded: None,
        };
    }
    if a.nrows() == 0 {
        // A map out of C^k with no target rows annihilates everything.
        return Kernel {
            basis: CMatrix::identity(ncols, ncols),
            threshold: 0.0,
            smallest_retained: None,
            largest_discarded: None,
        };
    }

    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("SVD with V requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let threshold = tol
        .rank_threshold(sigma_max.max(sigma_floor), a.nrows().max(ncols))
        .max(abs_floor);

    // Singular values come back sorted in descending order; the kernel is
    // the tail at or below the cut plus any columns missing from a wide
    // factorization (nrows < ncols leaves ncols - nrows exact null
    // directions beyond the listed singular values).
    let listed = sigma.len();
    let mut rank = 0;
    while rank < listed && sigma[rank] > threshold {
        rank += 1;
    }

    let kernel_dim = ncols - rank;
    let mut basis = CMatrix::zeros(ncols, kernel_dim);
    for (out_col, row) in (rank..v_t.nrows()).enumerate() {
        for i in 0..ncols {
            basis[(i, out_col)] = v_t[(row, i)].conj();
        }
    }
    // Rows of V† only cover min(nrows, ncols); a wide matrix needs the
    // remaining null directions completed explicitly.
    if v_t.nrows() < ncols {
        let extra = complete_orthonormal(&v_t, ncols);
        let offset = v_t.nrows() - rank;
        for (j, col) in extra.column_iter().enumerate() {
            basis.set_column(offset + j, &col);
        }
    }

    Kernel {
        basis,
        threshold,
        smallest_retained: if rank > 0 { Some(sigma[rank - 1]) } else { None },
        largest_discarded: if rank < listed { Some(sigma[rank]) } else { None },
    }
}

/// Complete the rows of `v_t` (orthonormal, possibly fewer than `n`) to an
/// orthonormal basis of C^n and return the added vectors as columns.
fn complete_orthonormal(v_t: &CMatrix, n: usize) -> CMatrix {
    let have = v_t.nrows();
    let missing = n - have;
    let mut found: Vec<CVector> = Vec::with_capacity(missing);
    for k in 0..n {
        if found.len() == missing {
            break;
        }
        let mut cand = CVector::zeros(n);
        cand[k] = cr(1.0);
        // Project out the existing rows and previously found vectors.
        for row in 0..have {
            let mut dot = c(0.0, 0.0);
            for i in 0..n {
                dot += v_t[(row, i)] * cand[i];
            }
            for i in 0..n {
                cand[i] -= v_t[(row, i)].conj() * dot;
            }
        }
        for f in &found {
            let dot = f.dotc(&cand);
            cand -= f * dot;
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            found.push(cand / cr(norm));
        }
    }
    let mut out = CMatrix::zeros(n, missing);
    for (j, f) in found.iter().enumerate() {
        out.set_column(j, f);
    }
    out
}

/// Rank-revealing orthonormalization: the returned columns span the column
/// space of `b` with singular directions below the rank cut dropped.
pub fn orthonormalize(b: &CMatrix, tol: &Tolerances) -> CMatrix {
    orthonormalize_with_floor(b, tol, 0.0)
}

/// Like [`orthonormalize`] with the rank cut floored at `sigma_floor`; use
/// the input's natural column scale when `b` may be a pure-noise residual.
pub fn orthonormalize_with_floor(b: &CMatrix, tol: &Tolerances, sigma_floor: f64) -> CMatrix {
    if b.ncols() == 0 || b.nrows() == 0 {
        return b.clone();
    }
    let svd = b.clone().svd(true, false);
    let u = svd.u.expect("SVD with U requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let threshold = tol.rank_threshold(sigma_max.max(sigma_floor), b.nrows().max(b.ncols()));
    let rank = sigma.iter().take_while(|&&s| s > threshold).count();
    u.columns(0, rank).into_owned()
}

/// Dense matrix exponential (Padé approximation with scaling and squaring,
/// as provided by nalgebra).
pub fn expm(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn null_space_of_rank_one() {
        let tol = Tolerances::default();
        // rows proportional to (1, 1): kernel spanned by (1, -1)/sqrt(2)
        let a = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(2.0), cr(2.0)]);
        let ker = null_space(&a, &tol);
        assert_eq!(ker.basis.ncols(), 1);
        let v = ker.basis.column(0);
        assert!((v[0] + v[1]).norm() < 1e-12);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix_completes_basis() {
        let tol = Tolerances::default();
        // 1x3 row (1, 0, 0): kernel must be the full 2-dimensional complement.
        let a = CMatrix::from_row_slice(1, 3, &[cr(1.0), cr(0.0), cr(0.0)]);
        let ker = null_space(&a, &tol);
        assert_eq!(ker.basis.ncols(), 2);
        let gram = ker.basis.adjoint() * &ker.basis;
        assert!(max_abs(&(gram - CMatrix::identity(2, 2))) < 1e-12);
        let image = &a * &ker.basis;
        assert!(max_abs(&image) < 1e-12);
    }

    #[test]
    fn null_space_of_invertible_is_empty() {
        let tol = Tolerances::default();
        let a = CMatrix::identity(3, 3);
        let ker = null_space(&a, &tol);
        assert_eq!(ker.basis.ncols(), 0);
        assert_eq!(ker.retained_margin().map(|m| m.is_finite()), Some(true));
    }

    #[test]
    fn orthonormalize_drops_dependent_columns() {
        let tol = Tolerances::default();
        let mut b = CMatrix::zeros(3, 2);
        b[(0, 0)] = cr(1.0);
        b[(0, 1)] = cr(2.0); // second column parallel to the first
        let q = orthonormalize(&b, &tol);
        assert_eq!(q.ncols(), 1);
        assert_relative_eq!(q.column(0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_matches_diagonal_exponential() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 1.0), cr(-2.0)]));
        let e = expm(&a);
        assert!((e[(0, 0)] - c(1.0f64.cos(), 1.0f64.sin())).norm() < 1e-14);
        assert!((e[(1, 1)] - cr((-2.0f64).exp())).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_of_nilpotent_truncates() {
        // strictly upper triangular: exp(A) = I + A + A^2/2
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 1)] = cr(1.0);
        a[(1, 2)] = cr(1.0);
        let e = expm(&a);
        assert!((e[(0, 1)] - cr(1.0)).norm() < 1e-14);
        assert!((e[(0, 2)] - cr(0.5)).norm() < 1e-14);
        assert!((e[(2, 0)]).norm() < 1e-15);
    }
}
