//! Triangle mesh of a mid-surface.

use std::collections::BTreeMap;

use crate::geom::Point3;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct MidSurfaceMesh<T> {
    pub vertices: Vec<Point3<T>>,
    /// Slice index each vertex was traced on.
    pub vertex_slices: Vec<usize>,
    pub triangles: Vec<[usize; 3]>,
    /// Set when the input stack held a single slice, so nothing could be zipped.
    pub single_slice: bool,
}

impl<T: Real> MidSurfaceMesh<T> {
    pub fn new(vertices: Vec<Point3<T>>, vertex_slices: Vec<usize>, triangles: Vec<[usize; 3]>) -> Self {
        assert_eq!(vertices.len(), vertex_slices.len());
        Self { vertices, vertex_slices, triangles, single_slice: false }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_points(&self, t: usize) -> [Point3<T>; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Undirected edges with the number of triangles bordering each.
    pub fn edge_map(&self) -> BTreeMap<(usize, usize), usize> {
        let mut edges = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Edges bordering exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_map().into_iter().filter(|&(_, n)| n == 1).map(|(e, _)| e).collect()
    }

    /// Largest number of triangles sharing one edge.
    pub fn max_edge_valence(&self) -> usize {
        self.edge_map().values().copied().max().unwrap_or(0)
    }

    /// Number of connected chains of boundary edges (rims and holes).
    pub fn boundary_loop_count(&self) -> usize {
        let edges = self.boundary_edges();
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut roots: Vec<usize> = edges.iter().map(|&(a, _)| find(&mut parent, a)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// True when no two triangles traverse a shared edge in the same direction.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut directed = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                if directed.insert((t[k], t[(k + 1) % 3]), ()).is_some() {
                    return false;
                }
            }
        }
        true
    }
}
