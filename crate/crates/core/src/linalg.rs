//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::Cholesky;

use crate::{CMat, Error, Result, C64};

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Singular value decomposition `m = U diag(s) V^H` with singular values in
/// descending order. `U` is `rows x k`, `V` is `cols x k`, `k = min(rows, cols)`.
pub struct SortedSvd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^H").adjoint();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    SortedSvd {
        u: CMat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| s[i]).collect(),
        v: CMat::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]),
    }
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(m: &CMat) -> CMat {
    let SortedSvd { u, singular_values, v } = svd(m);
    let tol = singular_values.first().copied().unwrap_or(0.0) * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (k, &sv) in singular_values.iter().enumerate() {
        if sv > tol && sv > 0.0 {
            let vk = v.column(k);
            let uk = u.column(k);
            out += (vk * uk.adjoint()) * C64::new(1.0 / sv, 0.0);
        }
    }
    out
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

/// Eigenvalues of a Hermitian matrix (ascending).
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Hermitian positive semidefinite check with an absolute eigenvalue slack.
pub fn is_hermitian_psd(m: &CMat, tol: f64) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    is_hermitian(m, tol * scale) && hermitian_eigenvalues(m).first().is_none_or(|&lo| lo >= -tol * scale)
}

/// log2 det of a Hermitian positive-definite matrix via Cholesky.
///
/// Rejects matrices whose smallest pivot is negligible relative to the
/// largest, rather than returning a huge negative number.
pub fn log2_det_hpd(m: &CMat, what: &str) -> Result<f64> {
    let chol =
        Cholesky::new(hermitian_part(m)).ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..m.nrows()).map(|i| l[(i, i)].re).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || (min * min) < 1e-14 * max * max {
        return Err(Error::Singular(format!("{what} is numerically singular")));
    }
    Ok(diag.iter().map(|d| 2.0 * d.log2()).sum())
}

/// `log2 det(I + R_n^-1 R_y)` for Hermitian `R_n` (positive definite) and
/// `R_y` (positive semidefinite), evaluated as `log2 det(R_n + R_y) - log2 det(R_n)`.
pub fn log2_det_identity_plus(r_n: &CMat, r_y: &CMat) -> Result<f64> {
    if r_n.shape() != r_y.shape() || !r_n.is_square() {
        return Err(Error::shape(
            "log-det",
            format!("{:?}", r_n.shape()),
            format!("{:?}", r_y.shape()),
        ));
    }
    let noise = log2_det_hpd(r_n, "noise-plus-interference covariance")?;
    let total = log2_det_hpd(&(r_n + r_y), "received covariance")?;
    Ok((total - noise).max(0.0))
}

/// Entrywise unit-modulus projection `e^{j angle(m_ij)}`.
pub fn phase_only(m: &CMat) -> CMat {
    m.map(|z| C64::from_polar(1.0, z.arg()))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scaled_identity(n: usize, s: f64) -> CMat {
    CMat::identity(n, n) * C64::new(s, 0.0)
}
