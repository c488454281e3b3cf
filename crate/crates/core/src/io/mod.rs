//! File formats: label volumes in, meshes and polylines out.

mod mesh;
mod volume;

pub use mesh::{
    mesh_to_obj, mesh_to_ply, polylines_to_obj, read_obj, read_ply, read_polylines, write_mesh, write_polylines,
    MeshFormat, RawMesh, RawPolyline,
};
pub use volume::{load_volume, read_volume, write_mhd, write_nrrd, ScalarType, VolumeFormat, VolumeHeader};
