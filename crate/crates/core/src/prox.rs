//! Proximal operators shared by both solvers: singular-value thresholding,
//! entrywise soft thresholding, and the masked soft threshold used for the
//! sampled sparse update.

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, SamplingMask};
use nalgebra::DMatrix;

/// Outcome of singular-value thresholding.
#[derive(Debug, Clone)]
pub struct SvtResult {
    /// `U diag(max(sigma - tau, 0)) V^T`.
    pub value: Matrix,
    /// Number of singular values strictly greater than `tau`.
    pub retained_rank: usize,
    /// Singular values of the input, descending.
    pub singular_values: Vec<f64>,
}

fn to_dmatrix(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.data())
}

/// Singular values of a matrix, sorted descending.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if !m.is_all_finite() {
        return Err(Error::NonFinite("singular value input"));
    }
    let svd = nalgebra::linalg::SVD::try_new(to_dmatrix(m), false, false, f64::EPSILON, 0)
        .ok_or(Error::SvdFailure)?;
    let mut sv: Vec<f64> = svd.singular_values.as_slice().to_vec();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    Ok(sv)
}

/// Singular-value thresholding `D_tau`: the proximal map of the nuclear norm,
/// minimizing `tau * ||X||_* + 1/2 * ||X - M||_F^2`.
///
/// A singular value exactly equal to `tau` shrinks to 0 and does not count
/// toward `retained_rank`.
pub fn svt(m: &Matrix, tau: f64) -> Result<SvtResult> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParam(format!("svt threshold must be >= 0, got {tau}")));
    }
    if !m.is_all_finite() {
        return Err(Error::NonFinite("svt input"));
    }
    let svd = nalgebra::linalg::SVD::try_new(to_dmatrix(m), true, true, f64::EPSILON, 0)
        .ok_or(Error::SvdFailure)?;
    let u = svd.u.as_ref().ok_or(Error::SvdFailure)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::SvdFailure)?;
    let sigma = svd.singular_values.as_slice();

    let mut scaled = u.clone();
    for (c, &s) in sigma.iter().enumerate() {
        let shrunk = (s - tau).max(0.0);
        scaled.column_mut(c).scale_mut(shrunk);
    }
    let rec = scaled * v_t;
    let value = Matrix::new(m.rows(), m.cols(), rec.as_slice().to_vec())?;

    let mut singular_values: Vec<f64> = sigma.to_vec();
    singular_values.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    let retained_rank = singular_values.iter().filter(|&&s| s > tau).count();
    Ok(SvtResult { value, retained_rank, singular_values })
}

/// Entrywise soft threshold `S_tau`: `sign(x) * max(|x| - tau, 0)`.
pub fn soft_threshold(x: &DenseTensor, tau: f64) -> DenseTensor {
    assert!(tau >= 0.0, "soft threshold must be >= 0, got {tau}");
    x.map(|v| shrink(v, tau))
}

#[inline]
fn shrink(v: f64, tau: f64) -> f64 {
    let mag = v.abs() - tau;
    if mag > 0.0 {
        v.signum() * mag
    } else {
        0.0
    }
}

/// Solution of `min_X 1/2 ||A_Omega(X - B)||^2 + tau ||X||_1`: soft threshold
/// applied to `P (*) B`. Entries outside the support are exactly zero.
pub fn masked_soft_threshold(
    b: &DenseTensor,
    mask: &SamplingMask,
    tau: f64,
) -> Result<DenseTensor> {
    assert!(tau >= 0.0, "soft threshold must be >= 0, got {tau}");
    let masked = mask.apply(b)?;
    Ok(soft_threshold(&masked, tau))
}
