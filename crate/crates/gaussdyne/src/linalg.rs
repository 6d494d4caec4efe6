//! Small dense-matrix helpers shared across the crate.
//!
//! Everything here delegates the heavy lifting (eigendecompositions, LU,
//! matrix exponentials) to nalgebra; these wrappers only add the shape and
//! symmetry bookkeeping the physics layers rely on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Max-norm of a matrix (0 for empty).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Max-norm of the difference of two equally sized matrices.
#[cfg_attr(not(test), allow(dead_code))]
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Largest deviation from symmetry, max |m - m^T|.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// (m + m^T) / 2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// (m - m^T) / 2.
pub fn antisymmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

/// Checks squareness and returns the dimension.
pub fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Checks for a square matrix of even dimension 2n and returns n.
pub fn check_phase_space(m: &DMatrix<f64>) -> Result<usize> {
    let dim = check_square(m)?;
    if dim % 2 != 0 || dim == 0 {
        return Err(Error::OddDimension(dim));
    }
    Ok(dim / 2)
}

/// Checks symmetry within `tol` and returns the symmetrized matrix.
pub fn checked_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_square(m)?;
    let dev = asymmetry(m);
    if dev > tol {
        return Err(Error::NotSymmetric(dev));
    }
    Ok(symmetrize(m))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues_sorted(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Minimum eigenvalue of the Hermitian matrix `re + i*im`, where `re` is
/// symmetric and `im` antisymmetric.
///
/// Uses the real embedding [[re, -im], [im, re]], which is symmetric and
/// carries the Hermitian spectrum with doubled multiplicity, so only real
/// symmetric eigensolvers are ever needed.
pub fn hermitian_min_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let d = re.nrows();
    debug_assert_eq!(re.shape(), im.shape());
    let mut emb = DMatrix::<f64>::zeros(2 * d, 2 * d);
    emb.view_mut((0, 0), (d, d)).copy_from(re);
    emb.view_mut((d, d), (d, d)).copy_from(re);
    emb.view_mut((0, d), (d, d)).copy_from(&(-im));
    emb.view_mut((d, 0), (d, d)).copy_from(im);
    emb.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

/// Inverse of a symmetric positive definite matrix via eigendecomposition.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = check_square(m)?;
    let eig = symmetrize(m).symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &x| acc.max(x.abs()))
        .max(1.0);
    let mut inv_vals = DVector::<f64>::zeros(dim);
    for i in 0..dim {
        let lam = eig.eigenvalues[i];
        if lam <= scale * 1e-300 {
            return Err(Error::Singular(format!(
                "eigenvalue {lam:.3e} in symmetric inverse"
            )));
        }
        inv_vals[i] = 1.0 / lam;
    }
    let v = &eig.eigenvectors;
    Ok(symmetrize(
        &(v * DMatrix::from_diagonal(&inv_vals) * v.transpose()),
    ))
}

/// Solves the linear system via LU with partial pivoting.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Singular("LU solve failed".into()))
}

/// Matrix exponential exp(a*t) together with its integral
/// int_0^t exp(a*s) ds, computed from one exponential of the block matrix
/// [[a, I], [0, 0]].
pub fn exp_with_integral(a: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = a.nrows();
    let mut block = DMatrix::<f64>::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&(a * t));
    block
        .view_mut((0, d), (d, d))
        .copy_from(&(DMatrix::identity(d, d) * t));
    let e = block.exp();
    let exp_at = e.view((0, 0), (d, d)).into_owned();
    let int_exp = e.view((0, d), (d, d)).into_owned();
    (exp_at, int_exp)
}

/// Solves the continuous Lyapunov equation a*x + x*a^T + q = 0 by Kronecker
/// vectorization. Intended for the small phase-space dimensions this crate
/// works at; no attempt at Bartels-Stewart.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = check_square(a)?;
    if q.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: q.nrows(),
        });
    }
    let eye = DMatrix::<f64>::identity(d, d);
    let coeff = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice((-q).as_slice());
    let x = lu_solve(&coeff, &rhs)?;
    Ok(symmetrize(&DMatrix::from_column_slice(d, d, x.as_slice())))
}

/// Pairwise (cascade) summation of vectors in index order; used for
/// reproducible ensemble reductions.
pub fn pairwise_sum_vectors(items: &[DVector<f64>]) -> DVector<f64> {
    fn go(items: &[DVector<f64>]) -> DVector<f64> {
        if items.len() <= 8 {
            let mut acc = items[0].clone();
            for v in &items[1..] {
                acc += v;
            }
            acc
        } else {
            let mid = items.len() / 2;
            go(&items[..mid]) + go(&items[mid..])
        }
    }
    assert!(!items.is_empty());
    go(items)
}

/// Pairwise summation of matrices in index order.
pub fn pairwise_sum_matrices(items: &[DMatrix<f64>]) -> DMatrix<f64> {
    fn go(items: &[DMatrix<f64>]) -> DMatrix<f64> {
        if items.len() <= 8 {
            let mut acc = items[0].clone();
            for v in &items[1..] {
                acc += v;
            }
            acc
        } else {
            let mid = items.len() / 2;
            go(&items[..mid]) + go(&items[mid..])
        }
    }
    assert!(!items.is_empty());
    go(items)
}
