//! Smeared delta and Heaviside functions of the level-set calculus.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Cosine-squared smeared delta of width `eps`.
///
/// Equals `(2/eps) cos^2(pi t / eps)` on `|t| < eps/2` and zero elsewhere. It
/// has unit mass and peaks at `2/eps`. The endpoints `|t| = eps/2` return an
/// exact zero rather than the rounding residue of `cos(pi/2)`.
pub fn smeared_delta(t: f64, eps: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite argument {t}")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta width must be positive, got {eps}"
        )));
    }
    Ok(smeared_delta_unchecked(t, eps))
}

#[inline]
pub(crate) fn smeared_delta_unchecked(t: f64, eps: f64) -> f64 {
    if t.abs() >= 0.5 * eps {
        return 0.0;
    }
    let c = (PI * t / eps).cos();
    2.0 / eps * c * c
}

/// Heaviside step with `H(0) = 0`, so `{H(phi) = 1}` is exactly `{phi > 0}`.
pub fn heaviside(t: f64) -> Result<u8> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite argument {t}")));
    }
    Ok(u8::from(t > 0.0))
}
