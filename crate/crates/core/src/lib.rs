//! Mid-surface extraction for thin-shell objects in segmented volumes.
//!
//! Each object is sliced along z. Every slice is traced along the crest of a
//! smoothed signed distance field, giving mid-polylines, and polylines on
//! adjacent slices are zipped into a triangle mesh.
//!
//! ```no_run
//! use midsurface::{extract_mid_surface, extract_objects, load_volume};
//!
//! let volume = load_volume("membranes.nrrd")?;
//! for mask in extract_objects(&volume, 1) {
//!     let out = extract_mid_surface::<f64>(&mask)?;
//!     println!("{} triangles", out.mesh.triangle_count());
//! }
//! # Ok::<(), midsurface::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod field;
pub mod geom;
pub mod hessian;
pub mod io;
pub mod mesh;
pub mod phantom;
pub mod pipeline;
pub mod quality;
pub mod scalar;
pub mod sdf;
pub mod smooth;
pub mod trace;
pub mod volume;
pub mod zipper;

pub use error::{Error, Result};
pub use field::{ScalarField2D, ScalarField3D};
pub use hessian::{EigenPair2D, HessianField2D};
pub use io::{load_volume, write_mesh, write_polylines, MeshFormat};
pub use mesh::MidSurfaceMesh;
pub use phantom::{generate_phantom, PhantomSpec};
pub use pipeline::{extract_mid_surface, Extraction};
pub use quality::{report, QualityReport};
pub use scalar::Real;
pub use trace::{MidPolyline, PolylineStack};
pub use volume::{extract_objects, BinaryMask3D, Grid3, LabeledVolume, SliceComponent};
pub use zipper::zip;

pub type Field3D = ScalarField3D<f64>;
pub type Field3D32 = ScalarField3D<f32>;
pub type Field2D = ScalarField2D<f64>;
pub type Field2D32 = ScalarField2D<f32>;
pub type Polyline = MidPolyline<f64>;
pub type Polyline32 = MidPolyline<f32>;
pub type Stack = PolylineStack<f64>;
pub type Stack32 = PolylineStack<f32>;
pub type Mesh = MidSurfaceMesh<f64>;
pub type Mesh32 = MidSurfaceMesh<f32>;
