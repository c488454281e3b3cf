//! Volume data model, connected components and single-pixel dilation.
//!
//! Objects are separated with 26-connectivity in 3D; in-slice components use
//! 8-connectivity. Every list returned here is ordered by the smallest linear
//! index of its members, so downstream output is reproducible.

use std::collections::VecDeque;

/// Voxel grid geometry. Voxel `(i, j, k)` has its center at
/// `origin + (i * sx, j * sy, k * sz)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Grid3 {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Self {
        assert!(dims.iter().all(|&n| n >= 1), "dims must be >= 1");
        assert!(spacing.iter().all(|&s| s > 0.0), "spacing must be > 0");
        Self { dims, spacing, origin }
    }

    pub fn isotropic(dims: [usize; 3]) -> Self {
        Self::new(dims, [1.0; 3], [0.0; 3])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let [nx, ny, _] = self.dims;
        (idx % nx, (idx / nx) % ny, idx / (nx * ny))
    }

    /// Physical position of a voxel center.
    pub fn position(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            self.origin[0] + x as f64 * self.spacing[0],
            self.origin[1] + y as f64 * self.spacing[1],
            self.origin[2] + z as f64 * self.spacing[2],
        ]
    }
}

/// Integer label per voxel; 0 is background.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVolume {
    pub grid: Grid3,
    pub data: Vec<u16>,
}

impl LabeledVolume {
    pub fn new(grid: Grid3, data: Vec<u16>) -> Self {
        assert_eq!(data.len(), grid.len(), "label data length must match dims");
        Self { grid, data }
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self::new(grid, vec![0; grid.len()])
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.data[self.grid.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, label: u16) {
        let i = self.grid.index(x, y, z);
        self.data[i] = label;
    }

    pub fn count(&self, label: u16) -> usize {
        self.data.iter().filter(|&&v| v == label).count()
    }
}

/// One isolated object's segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask3D {
    pub grid: Grid3,
    pub bits: Vec<bool>,
}

impl BinaryMask3D {
    pub fn new(grid: Grid3, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), grid.len(), "mask length must match dims");
        Self { grid, bits }
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(grid.len());
        for z in 0..grid.dims[2] {
            for y in 0..grid.dims[1] {
                for x in 0..grid.dims[0] {
                    bits.push(f(x, y, z));
                }
            }
        }
        Self { grid, bits }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.grid.index(x, y, z)]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Mirror across the plane orthogonal to x.
    pub fn mirrored_x(&self) -> Self {
        let nx = self.grid.dims[0];
        Self::from_fn(self.grid, |x, y, z| self.get(nx - 1 - x, y, z))
    }
}

/// Membership bitmap over a bounding box of a slice.
#[derive(Clone, Debug, PartialEq)]
struct BoxMask {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
    bits: Vec<bool>,
}

impl BoxMask {
    fn from_pixels(pixels: &[(usize, usize)]) -> Self {
        if pixels.is_empty() {
            return Self { x0: 0, y0: 0, w: 0, h: 0, bits: Vec::new() };
        }
        let x0 = pixels.iter().map(|p| p.0).min().unwrap();
        let x1 = pixels.iter().map(|p| p.0).max().unwrap();
        let y0 = pixels.iter().map(|p| p.1).min().unwrap();
        let y1 = pixels.iter().map(|p| p.1).max().unwrap();
        let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut bits = vec![false; w * h];
        for &(x, y) in pixels {
            bits[(x - x0) + w * (y - y0)] = true;
        }
        Self { x0, y0, w, h, bits }
    }

    #[inline]
    fn contains(&self, x: i64, y: i64) -> bool {
        let (dx, dy) = (x - self.x0 as i64, y - self.y0 as i64);
        if dx < 0 || dy < 0 || dx >= self.w as i64 || dy >= self.h as i64 {
            return false;
        }
        self.bits[dx as usize + self.w * dy as usize]
    }
}

/// An 8-connected foreground region of one z-slice together with its
/// one-pixel (3x3) dilation.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceComponent {
    pub slice_index: usize,
    pub component_id: usize,
    /// `(nx, ny)` of the slice the pixels live in; dilation is clipped to it.
    pub slice_dims: (usize, usize),
    /// `(x, y)` pixel indices, sorted by `(y, x)`.
    pub pixels: Vec<(usize, usize)>,
    /// Superset of `pixels`, sorted by `(y, x)`.
    pub dilated_pixels: Vec<(usize, usize)>,
    pixel_mask: BoxMask,
    dilated_mask: BoxMask,
}

impl SliceComponent {
    /// Builds a component from an arbitrary pixel set and precomputes its
    /// dilation. Pixels are deduplicated and sorted.
    pub fn new(
        slice_index: usize,
        component_id: usize,
        slice_dims: (usize, usize),
        mut pixels: Vec<(usize, usize)>,
    ) -> Self {
        pixels.sort_by_key(|&(x, y)| (y, x));
        pixels.dedup();
        let dilated_pixels = dilate_pixels(&pixels, slice_dims);
        Self {
            slice_index,
            component_id,
            slice_dims,
            pixel_mask: BoxMask::from_pixels(&pixels),
            dilated_mask: BoxMask::from_pixels(&dilated_pixels),
            pixels,
            dilated_pixels,
        }
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.pixel_mask.contains(x, y)
    }

    #[inline]
    pub fn dilated_contains(&self, x: i64, y: i64) -> bool {
        self.dilated_mask.contains(x, y)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Inclusive pixel bounding box `(x0, y0, x1, y1)`.
    pub fn bounds(&self) -> (usize, usize, usize, usize) {
        let m = &self.pixel_mask;
        (m.x0, m.y0, m.x0 + m.w.saturating_sub(1), m.y0 + m.h.saturating_sub(1))
    }
}

fn dilate_pixels(pixels: &[(usize, usize)], (nx, ny): (usize, usize)) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(pixels.len() * 3);
    for &(x, y) in pixels {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                if qx >= 0 && qy >= 0 && (qx as usize) < nx && (qy as usize) < ny {
                    out.push((qx as usize, qy as usize));
                }
            }
        }
    }
    out.sort_by_key(|&(x, y)| (y, x));
    out.dedup();
    out
}

/// Recomputes the dilated pixel set of `component` from its pixels.
pub fn dilate(component: &SliceComponent) -> SliceComponent {
    SliceComponent::new(component.slice_index, component.component_id, component.slice_dims, component.pixels.clone())
}

/// Splits `{voxels == label}` into 26-connected objects.
pub fn extract_objects(volume: &LabeledVolume, label: u16) -> Vec<BinaryMask3D> {
    let grid = volume.grid;
    let fg: Vec<bool> = volume.data.iter().map(|&v| label != 0 && v == label).collect();
    label_components(&grid, &fg, true)
        .into_iter()
        .map(|members| {
            let mut bits = vec![false; grid.len()];
            for i in members {
                bits[i] = true;
            }
            BinaryMask3D::new(grid, bits)
        })
        .collect()
}

/// 8-connected components of slice `z` of `mask`.
pub fn slice_components(mask: &BinaryMask3D, z: usize) -> Vec<SliceComponent> {
    let [nx, ny, nz] = mask.grid.dims;
    assert!(z < nz, "slice {z} out of range (nz = {nz})");
    let start = mask.grid.index(0, 0, z);
    let plane = &mask.bits[start..start + nx * ny];
    components_2d(plane, nx, ny)
        .into_iter()
        .enumerate()
        .map(|(id, pixels)| SliceComponent::new(z, id, (nx, ny), pixels))
        .collect()
}

/// 8-connected components of a row-major `nx * ny` bitmap, as `(x, y)` lists
/// ordered by their smallest `(y, x)` pixel.
pub fn components_2d(plane: &[bool], nx: usize, ny: usize) -> Vec<Vec<(usize, usize)>> {
    let grid = Grid3::isotropic([nx, ny, 1]);
    label_components(&grid, plane, false)
        .into_iter()
        .map(|members| members.into_iter().map(|i| (i % nx, i / nx)).collect())
        .collect()
}

/// Breadth-first labeling. `full` selects 26-connectivity (3x3x3 block);
/// otherwise the neighborhood is restricted to the z-plane (8-connectivity).
fn label_components(grid: &Grid3, fg: &[bool], full: bool) -> Vec<Vec<usize>> {
    let [nx, ny, nz] = grid.dims;
    let mut seen = vec![false; fg.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    let dz_range: &[i64] = if full { &[-1, 0, 1] } else { &[0] };

    for start in 0..fg.len() {
        if !fg[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let (x, y, z) = grid.coords(i);
            for &dz in dz_range {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (qx, qy, qz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                        if qx < 0 || qy < 0 || qz < 0 {
                            continue;
                        }
                        let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
                        if qx >= nx || qy >= ny || qz >= nz {
                            continue;
                        }
                        let j = grid.index(qx, qy, qz);
                        if fg[j] && !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}
