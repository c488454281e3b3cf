//! Second-order structure of a slice: Hessian by central differences and the
//! closed-form symmetric 2x2 eigen-decomposition.

use crate::error::{Error, Result};
use crate::field::{bilinear, bilinear_cell, ScalarField2D};
use crate::geom::Point2;
use crate::scalar::Real;

/// Per-pixel symmetric Hessian `[[fxx, fxy], [fxy, fyy]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianField2D<T> {
    pub nx: usize,
    pub ny: usize,
    pub spacing: [T; 2],
    pub origin: [T; 2],
    pub fxx: Vec<T>,
    pub fxy: Vec<T>,
    pub fyy: Vec<T>,
}

impl<T: Real> HessianField2D<T> {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (T, T, T) {
        let i = x + self.nx * y;
        (self.fxx[i], self.fxy[i], self.fyy[i])
    }
}

/// Central differences in physical units. Neighbors outside the slice are
/// replaced by the nearest edge pixel.
pub fn compute_hessian<T: Real>(field: &ScalarField2D<T>) -> Result<HessianField2D<T>> {
    let (nx, ny) = (field.nx, field.ny);
    if nx < 3 || ny < 3 {
        return Err(Error::FieldTooSmall { nx, ny });
    }
    let [sx, sy] = field.spacing;
    let two = T::lit(2.0);
    let (ixx, iyy, ixy) = (T::one() / (sx * sx), T::one() / (sy * sy), T::one() / (T::lit(4.0) * sx * sy));
    let n = nx * ny;
    let (mut fxx, mut fxy, mut fyy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..ny {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(ny - 1));
        for x in 0..nx {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(nx - 1));
            let c = field.get(x, y);
            fxx.push((field.get(xp, y) - two * c + field.get(xm, y)) * ixx);
            fyy.push((field.get(x, yp) - two * c + field.get(x, ym)) * iyy);
            fxy.push((field.get(xp, yp) - field.get(xp, ym) - field.get(xm, yp) + field.get(xm, ym)) * ixy);
        }
    }
    Ok(HessianField2D { nx, ny, spacing: field.spacing, origin: field.origin, fxx, fxy, fyy })
}

/// Bilinear interpolation of each Hessian entry at physical point `p`.
pub fn sample_hessian<T: Real>(hf: &HessianField2D<T>, p: Point2<T>) -> Result<(T, T, T)> {
    let u = [(p[0] - hf.origin[0]) / hf.spacing[0], (p[1] - hf.origin[1]) / hf.spacing[1]];
    let (x0, y0, x1, y1, fx, fy) =
        bilinear_cell(hf.nx, hf.ny, u).ok_or(Error::OutOfBounds { x: p[0].to_f64_lossy(), y: p[1].to_f64_lossy() })?;
    let idx = |x: usize, y: usize| x + hf.nx * y;
    let (i00, i10, i01, i11) = (idx(x0, y0), idx(x1, y0), idx(x0, y1), idx(x1, y1));
    let lerp = |v: &[T]| bilinear(v[i00], v[i10], v[i01], v[i11], fx, fy);
    Ok((lerp(&hf.fxx), lerp(&hf.fxy), lerp(&hf.fyy)))
}

/// Eigen-decomposition of a symmetric 2x2 matrix split by eigenvalue
/// magnitude. `v_trace` follows the ridge, `v_correct` crosses it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair2D<T> {
    pub lambda_min_abs: T,
    pub lambda_max_abs: T,
    pub v_trace: Point2<T>,
    pub v_correct: Point2<T>,
}

fn canonical_sign<T: Real>(v: Point2<T>) -> Point2<T> {
    let first = if v[0] != T::zero() { v[0] } else { v[1] };
    if first < T::zero() {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// One Jacobi rotation diagonalizes a symmetric 2x2 matrix exactly.
///
/// Equal magnitudes pick the eigenvector closer to the +x axis as `v_trace`.
/// Both vectors are returned with their first nonzero coordinate >= 0.
pub fn eigen2x2<T: Real>(fxx: T, fxy: T, fyy: T) -> EigenPair2D<T> {
    let (l1, v1, l2, v2) = if fxy == T::zero() {
        (fxx, [T::one(), T::zero()], fyy, [T::zero(), T::one()])
    } else {
        let theta = (fyy - fxx) / (T::lit(2.0) * fxy);
        let t = if theta.abs() > T::lit(1e150).min(T::max_value().sqrt()) {
            T::one() / (T::lit(2.0) * theta)
        } else {
            let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
            if theta < T::zero() {
                -mag
            } else {
                mag
            }
        };
        let c = T::one() / (t * t + T::one()).sqrt();
        let s = t * c;
        (fxx - t * fxy, [c, -s], fyy + t * fxy, [s, c])
    };
    let trace_first = match l1.abs().partial_cmp(&l2.abs()) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => v1[0].abs() >= v2[0].abs(),
    };
    let (lt, vt, lc, vc) = if trace_first { (l1, v1, l2, v2) } else { (l2, v2, l1, v1) };
    EigenPair2D { lambda_min_abs: lt, lambda_max_abs: lc, v_trace: canonical_sign(vt), v_correct: canonical_sign(vc) }
}
