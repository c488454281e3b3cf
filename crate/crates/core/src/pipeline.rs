//! Whole-object extraction: ridge field, tracing and zipping.

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::mesh::MidSurfaceMesh;
use crate::scalar::Real;
use crate::sdf::compute_sdf;
use crate::smooth::smooth_sdf;
use crate::trace::{extract_stack, PolylineStack};
use crate::volume::BinaryMask3D;
use crate::zipper::zip;

/// Wall-clock time spent in each stage of one extraction.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    /// Distance transform and smoothing.
    pub ridge_field: Duration,
    pub tracing: Duration,
    pub zipping: Duration,
}

impl StageTimes {
    /// Mid-polyline generation plus meshing.
    pub fn total(&self) -> Duration {
        self.ridge_field + self.tracing + self.zipping
    }
}

#[derive(Clone, Debug)]
pub struct Extraction<T> {
    pub stack: PolylineStack<T>,
    pub mesh: MidSurfaceMesh<T>,
    pub times: StageTimes,
}

/// Runs the full pipeline on one object mask.
pub fn extract_mid_surface<T: Real>(mask: &BinaryMask3D) -> Result<Extraction<T>> {
    let t0 = Instant::now();
    let smoothed = smooth_sdf(&compute_sdf::<T>(mask)?)?;
    let t1 = Instant::now();
    let stack = extract_stack(mask, &smoothed)?;
    let t2 = Instant::now();
    let mesh = zip(&stack)?;
    let t3 = Instant::now();
    let times = StageTimes { ridge_field: t1 - t0, tracing: t2 - t1, zipping: t3 - t2 };
    Ok(Extraction { stack, mesh, times })
}
