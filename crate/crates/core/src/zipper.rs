//! Stitching of mid-polylines on consecutive slices into triangles.
//!
//! Edges of two adjacent slices are matched by the distance between their
//! centers. Mutually nearest edges form a quad that is split along the
//! diagonal keeping the larger minimum angle; the remaining edges each get a
//! single triangle to the closest vertex of their nearest counterpart. Edges
//! with no counterpart within the hole threshold stay open, which keeps holes
//! in the segmentation open in the mesh.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{corner_angle3, dist3, dot3, double_area3, midpoint3, sub3, Point3};
use crate::mesh::MidSurfaceMesh;
use crate::scalar::Real;
use crate::trace::PolylineStack;

/// Where an edge came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSource {
    pub slice_index: usize,
    /// Position of the polyline within its slice.
    pub polyline: usize,
    pub segment: usize,
}

/// One polyline segment lifted to 3D, with the mesh indices of its endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZipEdge<T> {
    pub v1: Point3<T>,
    pub v2: Point3<T>,
    pub center: Point3<T>,
    pub i1: usize,
    pub i2: usize,
    pub source: EdgeSource,
}

impl<T: Real> ZipEdge<T> {
    pub fn new(v1: Point3<T>, v2: Point3<T>, i1: usize, i2: usize, source: EdgeSource) -> Self {
        Self { v1, v2, center: midpoint3(v1, v2), i1, i2, source }
    }
}

/// Classification of the edges of a lower slice `S_i` and an upper slice
/// `S_j`. Indices refer to the input slices; non-pair entries carry the index
/// of their nearest counterpart on the other slice.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairingResult {
    pub valid_pairs: Vec<(usize, usize)>,
    pub lower_non_pair: Vec<(usize, usize)>,
    pub upper_non_pair: Vec<(usize, usize)>,
    pub lower_skipped: Vec<usize>,
    pub upper_skipped: Vec<usize>,
}

/// Nearest edge found by a query; `unique` is false on an exact distance tie.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Nearest<T> {
    index: usize,
    dist_sq: T,
    unique: bool,
}

#[inline]
fn center_dist_sq<T: Real>(a: &ZipEdge<T>, b: &ZipEdge<T>) -> T {
    let d = sub3(a.center, b.center);
    dot3(d, d)
}

/// Uniform grid over edge centers (x, y). With cells as wide as the hole
/// threshold, every edge within the threshold of a query lies in the 3x3
/// block around it.
struct CenterGrid<'a, T> {
    edges: &'a [ZipEdge<T>],
    cell: T,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a, T: Real> CenterGrid<'a, T> {
    fn new(edges: &'a [ZipEdge<T>], cell: T) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            cells.entry(Self::key(e.center, cell)).or_default().push(i);
        }
        Self { edges, cell, cells }
    }

    fn key(p: Point3<T>, cell: T) -> (i64, i64) {
        let k = |v: T| (v / cell).floor().to_i64().unwrap_or(0);
        (k(p[0]), k(p[1]))
    }

    /// Nearest edge to `query` among those within `threshold`.
    fn nearest(&self, query: &ZipEdge<T>, threshold_sq: T) -> Option<Nearest<T>> {
        let (kx, ky) = Self::key(query.center, self.cell);
        let mut best: Option<Nearest<T>> = None;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) else {
                    continue;
                };
                for &i in ids {
                    let d = center_dist_sq(query, &self.edges[i]);
                    if d > threshold_sq {
                        continue;
                    }
                    best = Some(match best {
                        None => Nearest { index: i, dist_sq: d, unique: true },
                        Some(b) if d < b.dist_sq => Nearest { index: i, dist_sq: d, unique: true },
                        Some(b) if d == b.dist_sq => Nearest { index: b.index.min(i), dist_sq: d, unique: false },
                        Some(b) => b,
                    });
                }
            }
        }
        best
    }
}

/// Mutual-nearest classification of two adjacent slices' edges.
pub fn pair_edges<T: Real>(lower: &[ZipEdge<T>], upper: &[ZipEdge<T>], hole_threshold: T) -> PairingResult {
    let mut out = PairingResult::default();
    if lower.is_empty() || upper.is_empty() {
        out.lower_skipped = (0..lower.len()).collect();
        out.upper_skipped = (0..upper.len()).collect();
        return out;
    }
    let thr_sq = hole_threshold * hole_threshold;
    let grid_lower = CenterGrid::new(lower, hole_threshold);
    let grid_upper = CenterGrid::new(upper, hole_threshold);
    let up_of: Vec<Option<Nearest<T>>> = lower.iter().map(|e| grid_upper.nearest(e, thr_sq)).collect();
    let low_of: Vec<Option<Nearest<T>>> = upper.iter().map(|e| grid_lower.nearest(e, thr_sq)).collect();

    for (i, n) in up_of.iter().enumerate() {
        match n {
            None => out.lower_skipped.push(i),
            Some(n) => {
                let mutual = n.unique && low_of[n.index].is_some_and(|m| m.unique && m.index == i);
                if mutual {
                    out.valid_pairs.push((i, n.index));
                } else {
                    out.lower_non_pair.push((i, n.index));
                }
            }
        }
    }
    for (j, m) in low_of.iter().enumerate() {
        match m {
            None => out.upper_skipped.push(j),
            Some(m) => {
                let mutual = m.unique && up_of[m.index].is_some_and(|n| n.unique && n.index == j);
                if !mutual {
                    out.upper_non_pair.push((j, m.index));
                }
            }
        }
    }
    out
}

fn is_degenerate<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> bool {
    let longest = dist3(a, b).max(dist3(b, c)).max(dist3(c, a));
    double_area3(a, b, c) <= T::lit(64.0) * T::epsilon() * longest * longest
}

fn min_angle<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    if is_degenerate(a, b, c) {
        return T::zero();
    }
    corner_angle3(c, a, b).min(corner_angle3(a, b, c)).min(corner_angle3(b, c, a))
}

/// Splits the quad `v1 v2 v4 v3` (edge `v1 v2` below, `v3 v4` above, `v1`
/// facing `v3`) into two triangles, keeping the diagonal that leaves the
/// larger minimum interior angle. Ties go to diagonal `v2 v3`. Degenerate
/// triangles of the chosen split are dropped.
pub fn triangulate_quad<T: Real>(p: [Point3<T>; 4], idx: [usize; 4]) -> Vec<[usize; 3]> {
    const SPLITS: [[[usize; 3]; 2]; 2] = [[[0, 1, 2], [1, 3, 2]], [[0, 1, 3], [0, 3, 2]]];
    let score =
        |s: &[[usize; 3]; 2]| s.iter().map(|t| min_angle(p[t[0]], p[t[1]], p[t[2]])).fold(T::infinity(), T::min);
    let (a, b) = (score(&SPLITS[0]), score(&SPLITS[1]));
    let tol = T::lit(16.0) * T::epsilon();
    let chosen = if a + tol >= b { &SPLITS[0] } else { &SPLITS[1] };
    chosen
        .iter()
        .filter(|t| !is_degenerate(p[t[0]], p[t[1]], p[t[2]]))
        .map(|t| [idx[t[0]], idx[t[1]], idx[t[2]]])
        .collect()
}

/// Two triangles (fewer if degenerate) for a valid pair. The upper edge is
/// reversed first if its endpoints face the wrong lower endpoints, taking
/// the correspondence with shorter rungs, which never crosses.
pub fn triangulate_pair<T: Real>(lower: &ZipEdge<T>, upper: &ZipEdge<T>) -> Vec<[usize; 3]> {
    let (mut v3, mut v4, mut i3, mut i4) = (upper.v1, upper.v2, upper.i1, upper.i2);
    if dist3(lower.v1, v4) + dist3(lower.v2, v3) < dist3(lower.v1, v3) + dist3(lower.v2, v4) {
        std::mem::swap(&mut v3, &mut v4);
        std::mem::swap(&mut i3, &mut i4);
    }
    triangulate_quad([lower.v1, lower.v2, v3, v4], [lower.i1, lower.i2, i3, i4])
}

/// Endpoint of `nearest` closest to the center of `e`; ties go to `v1`.
fn closest_endpoint<T: Real>(e: &ZipEdge<T>, nearest: &ZipEdge<T>) -> (Point3<T>, usize) {
    if dist3(e.center, nearest.v2) < dist3(e.center, nearest.v1) {
        (nearest.v2, nearest.i2)
    } else {
        (nearest.v1, nearest.i1)
    }
}

/// Single triangle joining a non-pair edge to the closest vertex of its
/// nearest counterpart, wound like the quads of the strip: lower edges run
/// forward, upper edges against the lower direction.
pub fn triangulate_nonpair<T: Real>(e: &ZipEdge<T>, nearest: &ZipEdge<T>, e_is_upper: bool) -> Option<[usize; 3]> {
    let (u, iu) = closest_endpoint(e, nearest);
    if is_degenerate(e.v1, e.v2, u) {
        return None;
    }
    if !e_is_upper {
        return Some([e.i1, e.i2, iu]);
    }
    let along = dot3(sub3(e.v2, e.v1), sub3(nearest.v2, nearest.v1));
    Some(if along >= T::zero() { [iu, e.i2, e.i1] } else { [iu, e.i1, e.i2] })
}

/// Triangles between two adjacent slices.
///
/// Quads are emitted first, then lower and upper non-pair triangles. A
/// triangle that repeats a directed edge already emitted in the strip would
/// fold over its neighbor and is dropped; this also keeps every edge to at
/// most two triangles.
pub fn zip_slices<T: Real>(lower: &[ZipEdge<T>], upper: &[ZipEdge<T>], hole_threshold: T) -> Vec<[usize; 3]> {
    let pairing = pair_edges(lower, upper, hole_threshold);
    let mut candidates =
        Vec::with_capacity(2 * pairing.valid_pairs.len() + pairing.lower_non_pair.len() + pairing.upper_non_pair.len());
    for &(i, j) in &pairing.valid_pairs {
        candidates.extend(triangulate_pair(&lower[i], &upper[j]));
    }
    for &(i, j) in &pairing.lower_non_pair {
        candidates.extend(triangulate_nonpair(&lower[i], &upper[j], false));
    }
    for &(j, i) in &pairing.upper_non_pair {
        candidates.extend(triangulate_nonpair(&upper[j], &lower[i], true));
    }
    let mut directed = HashSet::new();
    let mut tris = Vec::with_capacity(candidates.len());
    for t in candidates {
        let sides = [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])];
        if sides.iter().any(|s| directed.contains(s)) {
            continue;
        }
        directed.extend(sides);
        tris.push(t);
    }
    tris
}

/// Largest center distance at which two edges may still be joined:
/// twice the diagonal of a step-by-slice cell.
pub fn hole_threshold<T: Real>(slice_spacing: T) -> T {
    let h = T::lit(2f64.sqrt()) * slice_spacing;
    T::lit(2.0) * (h * h + slice_spacing * slice_spacing).sqrt()
}

/// Meshes a polyline stack. Vertices are numbered by slice, then polyline,
/// then position along the polyline.
pub fn zip<T: Real>(stack: &PolylineStack<T>) -> Result<MidSurfaceMesh<T>> {
    if stack.is_empty() {
        return Err(Error::EmptyStack);
    }
    let mut vertices = Vec::with_capacity(stack.point_count());
    let mut vertex_slices = Vec::with_capacity(stack.point_count());
    let mut edges: Vec<Vec<ZipEdge<T>>> = Vec::with_capacity(stack.slices.len());
    for slice in &stack.slices {
        let z = stack.slice_z(slice.slice_index);
        let mut slice_edges = Vec::new();
        for (k, pl) in slice.polylines.iter().enumerate() {
            let base = vertices.len();
            for p in &pl.points {
                vertices.push([p[0], p[1], z]);
                vertex_slices.push(slice.slice_index);
            }
            for s in 0..pl.segment_count() {
                let (a, b) = pl.segment(s);
                let source = EdgeSource { slice_index: slice.slice_index, polyline: k, segment: s };
                slice_edges.push(ZipEdge::new(vertices[base + a], vertices[base + b], base + a, base + b, source));
            }
        }
        edges.push(slice_edges);
    }

    let threshold = hole_threshold(stack.slice_spacing);
    let per_pair: Vec<Vec<[usize; 3]>> = (1..stack.slices.len())
        .into_par_iter()
        .map(|k| {
            if stack.slices[k].slice_index != stack.slices[k - 1].slice_index + 1 {
                return Vec::new();
            }
            zip_slices(&edges[k - 1], &edges[k], threshold)
        })
        .collect();

    let mut seen = HashSet::new();
    let mut triangles = Vec::new();
    for t in per_pair.into_iter().flatten() {
        let mut key = t;
        key.sort_unstable();
        if seen.insert(key) {
            triangles.push(t);
        }
    }
    let mut mesh = MidSurfaceMesh::new(vertices, vertex_slices, triangles);
    mesh.single_slice = stack.slices.iter().filter(|s| !s.polylines.is_empty()).count() == 1;
    Ok(mesh)
}
