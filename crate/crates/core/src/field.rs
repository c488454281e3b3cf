//! Scalar fields on voxel and pixel grids.

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::scalar::Real;
use crate::volume::Grid3;

/// Real value per voxel, on the same grid as the mask it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField3D<T> {
    pub grid: Grid3,
    pub values: Vec<T>,
}

impl<T: Real> ScalarField3D<T> {
    pub fn new(grid: Grid3, values: Vec<T>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self::new(grid, vec![T::zero(); grid.len()])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.values[self.grid.index(x, y, z)]
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// One z-plane of a [`ScalarField3D`], addressed in physical in-plane
/// coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D<T> {
    pub nx: usize,
    pub ny: usize,
    pub spacing: [T; 2],
    pub origin: [T; 2],
    pub slice_index: usize,
    pub values: Vec<T>,
}

impl<T: Real> ScalarField2D<T> {
    pub fn from_fn(nx: usize, ny: usize, spacing: [T; 2], mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                values.push(f(x, y));
            }
        }
        Self { nx, ny, spacing, origin: [T::zero(); 2], slice_index: 0, values }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[x + self.nx * y]
    }

    /// Physical position of pixel `(x, y)`.
    #[inline]
    pub fn position(&self, x: usize, y: usize) -> Point2<T> {
        [
            self.origin[0] + T::from_usize_lossy(x) * self.spacing[0],
            self.origin[1] + T::from_usize_lossy(y) * self.spacing[1],
        ]
    }

    /// Continuous pixel coordinates of a physical point.
    #[inline]
    pub fn to_pixel(&self, p: Point2<T>) -> Point2<T> {
        [(p[0] - self.origin[0]) / self.spacing[0], (p[1] - self.origin[1]) / self.spacing[1]]
    }

    /// Pixel whose cell contains `p` (nearest pixel center), if any.
    pub fn containing_pixel(&self, p: Point2<T>) -> (i64, i64) {
        let u = self.to_pixel(p);
        (u[0].round().to_i64().unwrap_or(i64::MIN), u[1].round().to_i64().unwrap_or(i64::MIN))
    }

    pub fn in_bounds(&self, p: Point2<T>) -> bool {
        let u = self.to_pixel(p);
        let eps = T::lit(1e-9);
        u[0] >= -eps
            && u[1] >= -eps
            && u[0] <= T::from_usize_lossy(self.nx - 1) + eps
            && u[1] <= T::from_usize_lossy(self.ny - 1) + eps
    }
}

/// Copy of plane `z`.
pub fn extract_slice<T: Real>(field: &ScalarField3D<T>, z: usize) -> Result<ScalarField2D<T>> {
    let [nx, ny, nz] = field.grid.dims;
    if z >= nz {
        return Err(Error::SliceOutOfRange { index: z, nz });
    }
    let start = field.grid.index(0, 0, z);
    Ok(ScalarField2D {
        nx,
        ny,
        spacing: [T::lit(field.grid.spacing[0]), T::lit(field.grid.spacing[1])],
        origin: [T::lit(field.grid.origin[0]), T::lit(field.grid.origin[1])],
        slice_index: z,
        values: field.values[start..start + nx * ny].to_vec(),
    })
}

/// Bilinear weights for a physical point: the lower-left pixel and the
/// fractional offsets inside its cell.
pub(crate) fn bilinear_cell<T: Real>(nx: usize, ny: usize, u: Point2<T>) -> Option<(usize, usize, usize, usize, T, T)> {
    let eps = T::lit(1e-9);
    let (fx_max, fy_max) = (T::from_usize_lossy(nx - 1), T::from_usize_lossy(ny - 1));
    if !(u[0] >= -eps && u[1] >= -eps && u[0] <= fx_max + eps && u[1] <= fy_max + eps) {
        return None;
    }
    let ux = u[0].max(T::zero()).min(fx_max);
    let uy = u[1].max(T::zero()).min(fy_max);
    let x0 = ux.floor().to_usize()?.min(nx.saturating_sub(2));
    let y0 = uy.floor().to_usize()?.min(ny.saturating_sub(2));
    let x1 = (x0 + 1).min(nx - 1);
    let y1 = (y0 + 1).min(ny - 1);
    Some((x0, y0, x1, y1, ux - T::from_usize_lossy(x0), uy - T::from_usize_lossy(y0)))
}

#[inline]
pub(crate) fn bilinear<T: Real>(v00: T, v10: T, v01: T, v11: T, fx: T, fy: T) -> T {
    let one = T::one();
    (one - fy) * ((one - fx) * v00 + fx * v10) + fy * ((one - fx) * v01 + fx * v11)
}

/// Bilinear interpolation of `field` at physical point `p`.
pub fn sample_field<T: Real>(field: &ScalarField2D<T>, p: Point2<T>) -> Result<T> {
    let (x0, y0, x1, y1, fx, fy) = bilinear_cell(field.nx, field.ny, field.to_pixel(p))
        .ok_or(Error::OutOfBounds { x: p[0].to_f64_lossy(), y: p[1].to_f64_lossy() })?;
    Ok(bilinear(field.get(x0, y0), field.get(x1, y0), field.get(x0, y1), field.get(x1, y1), fx, fy))
}

/// Catmull-Rom (cubic convolution, `a = -1/2`) interpolation of `field` at
/// physical point `p`, with edge pixels replicated. Unlike the bilinear
/// interpolant it has a continuous gradient, so crest maxima are not pulled
/// onto pixel centers.
pub fn sample_field_cubic<T: Real>(field: &ScalarField2D<T>, p: Point2<T>) -> Result<T> {
    let (x0, y0, _, _, fx, fy) = bilinear_cell(field.nx, field.ny, field.to_pixel(p))
        .ok_or(Error::OutOfBounds { x: p[0].to_f64_lossy(), y: p[1].to_f64_lossy() })?;
    let wx = catmull_rom_weights(fx);
    let wy = catmull_rom_weights(fy);
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut acc = T::zero();
    for (j, wyj) in wy.iter().enumerate() {
        let y = clamp(y0 as i64 + j as i64 - 1, field.ny);
        let mut row = T::zero();
        for (i, wxi) in wx.iter().enumerate() {
            row += *wxi * field.get(clamp(x0 as i64 + i as i64 - 1, field.nx), y);
        }
        acc += *wyj * row;
    }
    Ok(acc)
}

fn catmull_rom_weights<T: Real>(t: T) -> [T; 4] {
    let h = T::lit(0.5);
    let (t2, t3) = (t * t, t * t * t);
    [
        h * (-t3 + T::lit(2.0) * t2 - t),
        h * (T::lit(3.0) * t3 - T::lit(5.0) * t2 + T::lit(2.0)),
        h * (-T::lit(3.0) * t3 + T::lit(4.0) * t2 + t),
        h * (t3 - t2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ramp() -> ScalarField2D<f64> {
        ScalarField2D::from_fn(6, 5, [0.5, 2.0], |x, y| (x * x) as f64 + 3.0 * y as f64 + (x * y) as f64 * 0.25)
    }

    #[test]
    fn extract_slice_copies_plane() {
        let grid = Grid3::isotropic([4, 3, 5]);
        let values: Vec<f64> = (0..grid.len()).map(|i| i as f64 * 0.5).collect();
        let f = ScalarField3D::new(grid, values);
        let s = extract_slice(&f, 2).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(s.get(x, y), f.get(x, y, 2));
            }
        }
        assert!(matches!(extract_slice(&f, 5), Err(Error::SliceOutOfRange { .. })));
        let c = ScalarField3D::new(grid, vec![2.5; grid.len()]);
        assert!(extract_slice(&c, 0).unwrap().values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn sample_at_pixel_center_and_midpoint() {
        let f = ramp();
        assert_eq!(sample_field(&f, f.position(3, 2)).unwrap(), f.get(3, 2));
        let mid = [0.5 * (f.position(3, 2)[0] + f.position(4, 2)[0]), f.position(3, 2)[1]];
        assert!((sample_field(&f, mid).unwrap() - 0.5 * (f.get(3, 2) + f.get(4, 2))).abs() < 1e-12);
        assert!(sample_field(&f, [-0.1, 0.0]).is_err());
        assert!(sample_field(&f, [2.5, 8.01]).is_err());
        // far corner is inside
        assert!(sample_field(&f, [2.5, 8.0]).is_ok());
    }

    #[test]
    fn random_points_match_bilinear_formula() {
        let f = ramp();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..500 {
            let p: [f64; 2] = [rng.gen_range(0.0..2.5), rng.gen_range(0.0..8.0)];
            let (u, v) = (p[0] / 0.5, p[1] / 2.0);
            let (i, j) = ((u.floor() as usize).min(4), (v.floor() as usize).min(3));
            let (a, b) = (u - i as f64, v - j as f64);
            let expected = f.get(i, j) * (1.0 - a) * (1.0 - b)
                + f.get(i + 1, j) * a * (1.0 - b)
                + f.get(i, j + 1) * (1.0 - a) * b
                + f.get(i + 1, j + 1) * a * b;
            assert!((sample_field(&f, p).unwrap() - expected).abs() < 1e-12);
        }
    }
}
