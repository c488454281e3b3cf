//! Self-parameterized Gaussian smoothing of the distance field.

use crate::error::{Error, Result};
use crate::field::ScalarField3D;
use crate::scalar::Real;

/// Smooths `sdf` with a 3D Gaussian whose standard deviation is half the
/// field maximum. The result is the ridge height field traced per slice.
pub fn smooth_sdf<T: Real>(sdf: &ScalarField3D<T>) -> Result<ScalarField3D<T>> {
    let max = sdf.max_value();
    if max.is_nan() || max <= T::zero() {
        return Err(Error::NonPositiveField);
    }
    Ok(smooth_with_sigma(sdf, max * T::lit(0.5)))
}

/// Per-axis sampled Gaussian truncated at `2 * sigma + 1` (physical) and
/// renormalized to unit sum. Index `k` of the result is offset `k - radius`.
pub fn gaussian_kernel<T: Real>(sigma: T, spacing: T) -> Vec<T> {
    let reach = T::lit(2.0) * sigma + T::one();
    let radius = (reach / spacing).ceil().to_usize().unwrap_or(0);
    let denom = T::lit(2.0) * sigma * sigma;
    let mut w: Vec<T> = (0..=2 * radius)
        .map(|k| {
            let d = (T::from_usize_lossy(k) - T::from_usize_lossy(radius)) * spacing;
            (-(d * d) / denom).exp()
        })
        .collect();
    let sum: T = w.iter().copied().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable Gaussian convolution with zero extension outside the grid.
pub fn smooth_with_sigma<T: Real>(field: &ScalarField3D<T>, sigma: T) -> ScalarField3D<T> {
    let grid = field.grid;
    let [nx, ny, nz] = grid.dims;
    let strides = [1, nx, nx * ny];
    let mut cur = field.values.clone();
    let mut next = vec![T::zero(); cur.len()];
    let mut line = Vec::new();
    for axis in 0..3 {
        let kernel = gaussian_kernel(sigma, T::lit(grid.spacing[axis]));
        let radius = kernel.len() / 2;
        let n = grid.dims[axis];
        let stride = strides[axis];
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let dims = [nx, ny, nz];
        for j in 0..dims[b] {
            for i in 0..dims[a] {
                let base = i * strides[a] + j * strides[b];
                line.clear();
                line.extend((0..n).map(|k| cur[base + k * stride]));
                let at = |p: Option<usize>| p.filter(|&p| p < n).map_or(T::zero(), |p| line[p]);
                for q in 0..n {
                    // mirrored taps are added first so that reversing the line
                    // reverses the output bit for bit
                    let mut acc = kernel[radius] * line[q];
                    for j in 1..=radius {
                        acc += kernel[radius + j] * (at(q.checked_sub(j)) + at(Some(q + j)));
                    }
                    next[base + q * stride] = acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    ScalarField3D::new(grid, cur)
}
