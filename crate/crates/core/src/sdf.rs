//! Exact Euclidean distance transform.
//!
//! Separable lower-envelope-of-parabolas transform (one pass per axis) with
//! anisotropic spacing. Distances are measured between voxel centers.

use crate::error::{Error, Result};
use crate::field::ScalarField3D;
use crate::scalar::Real;
use crate::volume::BinaryMask3D;

/// Distance from every foreground voxel center to the nearest background
/// voxel center, in physical units; background voxels hold 0.
pub fn compute_sdf<T: Real>(mask: &BinaryMask3D) -> Result<ScalarField3D<T>> {
    let has_fg = mask.bits.iter().any(|&b| b);
    let has_bg = mask.bits.iter().any(|&b| !b);
    if !has_fg {
        return Err(Error::EmptyMask);
    }
    if !has_bg {
        return Err(Error::NoBackground);
    }
    let spacing = mask.grid.spacing.map(T::lit);
    let sq = squared_edt(mask.grid.dims, spacing, &mask.bits);
    Ok(ScalarField3D::new(mask.grid, sq.into_iter().map(|v| v.sqrt()).collect()))
}

/// Squared distance to the nearest `false` cell for every `true` cell of a
/// row-major grid; `false` cells are 0. Cells with no reachable background
/// stay `+inf`.
pub fn squared_edt<T: Real>(dims: [usize; 3], spacing: [T; 3], fg: &[bool]) -> Vec<T> {
    let [nx, ny, nz] = dims;
    assert_eq!(fg.len(), nx * ny * nz);
    let mut d: Vec<T> = fg.iter().map(|&b| if b { T::infinity() } else { T::zero() }).collect();
    let n_max = nx.max(ny).max(nz);
    let mut line = vec![T::zero(); n_max];
    let mut out = vec![T::zero(); n_max];
    let mut scratch = Envelope::with_capacity(n_max);

    let strides = [1, nx, nx * ny];
    for axis in 0..3 {
        let n = dims[axis];
        if n == 1 && axis > 0 {
            continue;
        }
        let stride = strides[axis];
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..dims[b] {
            for i in 0..dims[a] {
                let base = i * strides[a] + j * strides[b];
                for k in 0..n {
                    line[k] = d[base + k * stride];
                }
                scratch.transform(&line[..n], spacing[axis], &mut out[..n]);
                for k in 0..n {
                    d[base + k * stride] = out[k];
                }
            }
        }
    }
    d
}

struct Envelope<T> {
    v: Vec<usize>,
    z: Vec<T>,
}

impl<T: Real> Envelope<T> {
    fn with_capacity(n: usize) -> Self {
        Self { v: Vec::with_capacity(n), z: Vec::with_capacity(n + 1) }
    }

    /// `out[q] = min_p (f[p] + ((q - p) * s)^2)` over finite `f[p]`.
    fn transform(&mut self, f: &[T], s: T, out: &mut [T]) {
        self.v.clear();
        self.z.clear();
        let pos = |q: usize| T::from_usize_lossy(q) * s;
        let two = T::lit(2.0);
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            loop {
                let Some(&p) = self.v.last() else {
                    self.v.push(q);
                    self.z.push(T::neg_infinity());
                    break;
                };
                let (xq, xp) = (pos(q), pos(p));
                let cut = ((f[q] + xq * xq) - (f[p] + xp * xp)) / (two * (xq - xp));
                if cut <= *self.z.last().unwrap() {
                    self.v.pop();
                    self.z.pop();
                } else {
                    self.v.push(q);
                    self.z.push(cut);
                    break;
                }
            }
        }
        if self.v.is_empty() {
            out.iter_mut().for_each(|o| *o = T::infinity());
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let x = pos(q);
            while k + 1 < self.v.len() && self.z[k + 1] < x {
                k += 1;
            }
            let p = self.v[k];
            let dx = x - pos(p);
            *o = f[p] + dx * dx;
        }
    }
}
