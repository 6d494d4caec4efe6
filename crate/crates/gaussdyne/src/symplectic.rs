//! Symplectic phase-space structure: the form Omega, symplectic tests,
//! symplectic eigenvalues, canonical forms of antisymmetric matrices, PSD
//! square roots and symplectic basis completion.
//!
//! Phase-space ordering is xpxp throughout: the canonical vector is
//! (x1, p1, ..., xn, pn) and Omega is the direct sum of n copies of
//! [[0, 1], [-1, 0]]. The canonical antisymmetric form uses a two-block
//! (x..x p..p) ordering internally; [`block_ordering_permutation`] converts
//! between the two and is covered by its own test.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Clamp window for tiny negative eigenvalues in [`psd_sqrt`]: values in
/// (-PSD_CLAMP_TOL, 0) are treated as exact zeros. Downstream constraints
/// routinely produce borderline-singular PSD matrices.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

/// The symplectic form of `n` modes in xpxp ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    /// Builds Omega = omega ^ (+) n with omega = [[0, 1], [-1, 0]].
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "symplectic form needs at least one mode".into(),
            ));
        }
        Ok(Self {
            n,
            matrix: omega_matrix(2 * n),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// The symplectic form of `n` modes; alias-style constructor mirroring the
/// mathematical notation.
pub fn omega(n: usize) -> Result<SymplecticForm> {
    SymplecticForm::new(n)
}

/// Raw Omega matrix for a phase-space dimension `dim = 2n` (xpxp ordering).
pub(crate) fn omega_matrix(dim: usize) -> DMatrix<f64> {
    debug_assert!(dim.is_multiple_of(2));
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim / 2 {
        m[(2 * j, 2 * j + 1)] = 1.0;
        m[(2 * j + 1, 2 * j)] = -1.0;
    }
    m
}

/// True iff max |S Omega S^T - Omega| <= tol.
pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let n = linalg::check_phase_space(s)?;
    let om = omega_matrix(2 * n);
    let resid = s * &om * s.transpose() - &om;
    Ok(linalg::max_abs(&resid) <= tol)
}

/// Max-norm residual of the symplectic condition, for diagnostics.
pub fn symplectic_residual(s: &DMatrix<f64>) -> Result<f64> {
    let n = linalg::check_phase_space(s)?;
    let om = omega_matrix(2 * n);
    Ok(linalg::max_abs(&(s * &om * s.transpose() - &om)))
}

/// Symplectic eigenvalues of a symmetric positive definite matrix: the
/// moduli of the eigenvalues of i*Omega*sigma, paired down to n values and
/// sorted descending. For a physical covariance matrix all values are >= 1.
///
/// Computed through the Hermitian-equivalent problem: with W = sqrt(sigma),
/// the antisymmetric W*Omega*W is similar to Omega*sigma, and its singular
/// values carry the spectrum in pairs.
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = linalg::check_phase_space(sigma)?;
    let sym = linalg::checked_symmetric(sigma, 1e-8)?;
    let min_eig = linalg::symmetric_eigenvalues_sorted(&sym)[0];
    if min_eig <= 0.0 {
        return Err(Error::NotPositiveSemidefinite(min_eig));
    }
    let w = psd_sqrt(&sym)?;
    let a = linalg::antisymmetrize(&(&w * omega_matrix(2 * n) * &w));
    // Eigenvalues of A^T A are the squared symplectic eigenvalues, doubled.
    let k = a.transpose() * &a;
    let mut vals = linalg::symmetric_eigenvalues_sorted(&k);
    vals.reverse();
    let mut nu = Vec::with_capacity(n);
    for j in 0..n {
        let a2 = vals[2 * j].max(0.0);
        let b2 = vals[2 * j + 1].max(0.0);
        // Pair members agree up to roundoff; average them.
        nu.push(((a2.sqrt() + b2.sqrt()) / 2.0).abs());
    }
    Ok(nu)
}

/// Canonical form of a real antisymmetric matrix M: an orthogonal `rotation`
/// R and nonnegative `pair_values` d (descending) with
/// R M R^T = [[0, D], [-D, 0]] in the two-block ordering, D = diag(d).
#[derive(Debug, Clone)]
pub struct AntisymmetricCanonicalForm {
    pub rotation: DMatrix<f64>,
    pub pair_values: Vec<f64>,
}

impl AntisymmetricCanonicalForm {
    /// The canonical matrix [[0, D], [-D, 0]] this form rotates to.
    pub fn canonical_matrix(&self) -> DMatrix<f64> {
        let k = self.pair_values.len();
        let mut j = DMatrix::<f64>::zeros(2 * k, 2 * k);
        for (i, d) in self.pair_values.iter().enumerate() {
            j[(i, k + i)] = *d;
            j[(k + i, i)] = -*d;
        }
        j
    }
}

/// Brings a 2k x 2k real antisymmetric matrix to canonical form by an
/// orthogonal similarity, via repeated deflation of the dominant plane of
/// -M^2. `tol` bounds the accepted deviation from antisymmetry.
pub fn antisymmetric_canonical_form(
    m: &DMatrix<f64>,
    tol: f64,
) -> Result<AntisymmetricCanonicalForm> {
    let k = linalg::check_phase_space(m)?;
    let dev = linalg::max_abs(&(m + m.transpose()));
    if dev > tol {
        return Err(Error::NotAntisymmetric(dev));
    }
    let m = linalg::antisymmetrize(m);
    let dim = 2 * k;
    let scale = linalg::max_abs(&m).max(1.0);
    let zero_tol = scale * 1e-12;

    // Orthonormal basis of the not-yet-deflated subspace, as columns.
    let mut basis = DMatrix::<f64>::identity(dim, dim);
    let mut pairs: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(k);

    while basis.ncols() > 0 {
        let sub = basis.ncols();
        let m_red = linalg::antisymmetrize(&(basis.transpose() * &m * &basis));
        let gram = m_red.transpose() * &m_red;
        let eig = gram.symmetric_eigen();
        let (mut idx, mut lam) = (0usize, f64::NEG_INFINITY);
        for i in 0..sub {
            if eig.eigenvalues[i] > lam {
                lam = eig.eigenvalues[i];
                idx = i;
            }
        }
        let d = lam.max(0.0).sqrt();
        if d <= zero_tol {
            // Remaining subspace is (numerically) the kernel; pair the basis
            // columns as zero planes.
            let mut col = 0;
            while col + 1 < sub + 1 && col < sub {
                let e = basis.column(col).into_owned();
                let ep = basis.column(col + 1).into_owned();
                pairs.push((0.0, e, ep));
                col += 2;
            }
            break;
        }
        let mut e_red = eig.eigenvectors.column(idx).into_owned();
        canonicalize_sign(&mut e_red);
        let mut ep_red = -(&m_red * &e_red) / d;
        // Tidy up roundoff: enforce orthonormality of the pair.
        ep_red -= &e_red * e_red.dot(&ep_red);
        let norm = ep_red.norm();
        if norm <= 1e-12 {
            return Err(Error::Singular(
                "degenerate pair in antisymmetric canonical form".into(),
            ));
        }
        ep_red /= norm;

        let e = &basis * &e_red;
        let ep = &basis * &ep_red;
        pairs.push((d, e, ep));

        basis = deflate_basis(&basis, &[e_red, ep_red])?;
    }

    // Descending in d; ties broken by lexicographic comparison of the first
    // basis vector so the output is reproducible.
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            for (x, y) in a.1.iter().zip(b.1.iter()) {
                let c = x.total_cmp(y);
                if c != std::cmp::Ordering::Equal {
                    return c;
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let mut rotation = DMatrix::<f64>::zeros(dim, dim);
    let mut pair_values = Vec::with_capacity(k);
    for (i, (d, e, ep)) in pairs.iter().enumerate() {
        rotation.row_mut(i).copy_from(&e.transpose());
        rotation.row_mut(k + i).copy_from(&ep.transpose());
        pair_values.push(*d);
    }
    Ok(AntisymmetricCanonicalForm {
        rotation,
        pair_values,
    })
}

/// Flips the vector sign so its first significant component is positive.
fn canonicalize_sign(v: &mut DVector<f64>) {
    for x in v.iter() {
        if x.abs() > 1e-8 {
            if *x < 0.0 {
                *v *= -1.0;
            }
            return;
        }
    }
}

/// Orthonormal basis of the subspace of span(basis) orthogonal to the given
/// (already orthonormal, in reduced coordinates) vectors.
fn deflate_basis(basis: &DMatrix<f64>, remove: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let sub = basis.ncols();
    let keep = sub - remove.len();
    let mut selected: Vec<DVector<f64>> = Vec::with_capacity(keep);
    // Project the reduced-space identity columns and Gram-Schmidt with
    // pivoting on the residual norm.
    let mut candidates: Vec<DVector<f64>> = (0..sub)
        .map(|i| {
            let mut v = DVector::<f64>::zeros(sub);
            v[i] = 1.0;
            for r in remove {
                let c = r.dot(&v);
                v -= r * c;
            }
            v
        })
        .collect();
    while selected.len() < keep {
        // Pivot: largest remaining residual.
        let mut best = 0;
        let mut best_norm = -1.0;
        for (i, c) in candidates.iter().enumerate() {
            let n = c.norm();
            if n > best_norm {
                best_norm = n;
                best = i;
            }
        }
        if best_norm < 1e-8 {
            return Err(Error::Singular(
                "rank deficiency while deflating antisymmetric form".into(),
            ));
        }
        let v = candidates.swap_remove(best) / best_norm;
        for c in candidates.iter_mut() {
            let d = v.dot(c);
            *c -= &v * d;
        }
        selected.push(v);
    }
    let mut out = DMatrix::<f64>::zeros(sub, keep);
    for (i, v) in selected.iter().enumerate() {
        out.column_mut(i).copy_from(v);
    }
    Ok(basis * out)
}

/// Symmetric PSD square root. Eigenvalues in (-PSD_CLAMP_TOL, 0) are clamped
/// to zero; anything below that signals a genuinely non-PSD input.
pub fn psd_sqrt(y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = linalg::check_square(y)?;
    let sym = linalg::checked_symmetric(y, 1e-8)?;
    let eig = sym.symmetric_eigen();
    let mut vals = DVector::<f64>::zeros(dim);
    for i in 0..dim {
        let lam = eig.eigenvalues[i];
        if lam < -PSD_CLAMP_TOL {
            return Err(Error::NotPositiveSemidefinite(lam));
        }
        vals[i] = lam.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(linalg::symmetrize(
        &(v * DMatrix::from_diagonal(&vals) * v.transpose()),
    ))
}

/// Permutation P taking xpxp coordinates (x1, p1, ..., xk, pk) to two-block
/// coordinates (x1..xk, p1..pk): P Omega_xpxp P^T = [[0, I], [-I, 0]].
pub fn block_ordering_permutation(k: usize) -> DMatrix<f64> {
    let mut p = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for j in 0..k {
        p[(j, 2 * j)] = 1.0;
        p[(k + j, 2 * j + 1)] = 1.0;
    }
    p
}

/// Permutation Q taking two-block coordinates (u1..uk, v1..vk) to the paired
/// interleaving (u1, v1, u2, v2, ...): Q [[0,D],[-D,0]] Q^T = (+)_j d_j omega.
pub(crate) fn interleaving_permutation(k: usize) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for j in 0..k {
        q[(2 * j, j)] = 1.0;
        q[(2 * j + 1, k + j)] = 1.0;
    }
    q
}

/// Completes `2s` row vectors of length `2N` that already form a canonical
/// symplectic set (v_j omega v_k^T = (Omega_s)_jk within `tol`) to a full
/// 2N x 2N symplectic matrix whose first rows are the input.
///
/// The remaining rows are built by projecting the standard basis onto the
/// symplectic complement, orthonormalizing, bringing the residual pair
/// products to canonical form and rescaling each pair.
pub fn symplectic_complete(rows: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let total = rows.ncols();
    if !total.is_multiple_of(2) || total == 0 {
        return Err(Error::OddDimension(total));
    }
    let given = rows.nrows();
    if !given.is_multiple_of(2) {
        return Err(Error::OddDimension(given));
    }
    let big_n = total / 2;
    let s = given / 2;
    if s > big_n {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: given,
        });
    }
    if s == 0 {
        // Vacuous precondition; the identity is a valid completion.
        return Ok(DMatrix::identity(total, total));
    }
    let om = omega_matrix(total);
    let om_s = omega_matrix(given);

    let gram = rows * &om * rows.transpose();
    let pre_resid = linalg::max_abs(&(&gram - &om_s));
    if pre_resid > tol {
        return Err(Error::NotSymplectic(pre_resid));
    }

    if s == big_n {
        return Ok(rows.clone());
    }

    // Projection onto the symplectic complement of the row span:
    // u -> u - sum_{k,l} (Omega_s)_{kl} (u omega v_l^T) v_k.
    let proj = |u: &DVector<f64>| -> DVector<f64> {
        let c = (u.transpose() * &om * rows.transpose()).transpose();
        u - rows.transpose() * (&om_s * c)
    };

    // Gather a spanning set and extract an orthonormal basis of the
    // complement (dimension 2(N - s)) by pivoted Gram-Schmidt.
    let needed = 2 * (big_n - s);
    let mut candidates: Vec<DVector<f64>> = (0..total)
        .map(|i| {
            let mut e = DVector::<f64>::zeros(total);
            e[i] = 1.0;
            proj(&e)
        })
        .collect();
    let mut complement: Vec<DVector<f64>> = Vec::with_capacity(needed);
    while complement.len() < needed {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (i, c) in candidates.iter().enumerate() {
            let n = c.norm();
            if n > best_norm {
                best_norm = n;
                best = i;
            }
        }
        if best_norm < 1e-10 {
            return Err(Error::DegenerateCompletion(best_norm));
        }
        let v = candidates.swap_remove(best) / best_norm;
        for c in candidates.iter_mut() {
            let d = v.dot(c);
            *c -= &v * d;
        }
        complement.push(v);
    }

    let mut w = DMatrix::<f64>::zeros(needed, total);
    for (i, v) in complement.iter().enumerate() {
        w.row_mut(i).copy_from(&v.transpose());
    }

    // Symplectic products among the completed block, canonicalized and
    // rescaled pair by pair.
    let w_gram = linalg::antisymmetrize(&(&w * &om * w.transpose()));
    let canon = antisymmetric_canonical_form(&w_gram, 1e-8)?;
    let k = big_n - s;
    let rot = interleaving_permutation(k) * &canon.rotation;
    let mut w_new = rot * w;
    for (j, d) in canon.pair_values.iter().enumerate() {
        if *d < 1e-10 {
            return Err(Error::DegenerateCompletion(*d));
        }
        let f = 1.0 / d.sqrt();
        w_new.row_mut(2 * j).scale_mut(f);
        w_new.row_mut(2 * j + 1).scale_mut(f);
    }

    let mut full = DMatrix::<f64>::zeros(total, total);
    full.view_mut((0, 0), (given, total)).copy_from(rows);
    full.view_mut((given, 0), (needed, total)).copy_from(&w_new);
    Ok(full)
}
