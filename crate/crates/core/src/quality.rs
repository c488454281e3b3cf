//! Mesh quality metrics: triangle quality Q, angle statistics and valence.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geom::{dist3, double_area3, Point3};
use crate::mesh::MidSurfaceMesh;
use crate::scalar::Real;

pub const HISTOGRAM_BINS: usize = 180;

/// Summary of a mesh in the layout of the usual quality tables.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub q_min: f64,
    pub q_avg: f64,
    /// Mean over triangles of the smallest interior angle, degrees.
    pub theta_min_avg: f64,
    /// Percent of all interior angles below 30 degrees.
    pub frac_lt_30: f64,
    /// Percent of all interior angles above 120 degrees.
    pub frac_gt_120: f64,
    /// Percent of vertices with valence 5, 6 or 7.
    pub v567: f64,
    /// Interior angle counts in 1 degree bins; 180 lands in the last bin.
    pub angle_histogram: Vec<u64>,
}

/// `Q = (6 / sqrt 3) A / (p h)` with area `A`, half-perimeter `p` and longest
/// edge `h`. One for equilateral triangles, zero for degenerate ones.
pub fn triangle_quality<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    let (la, lb, lc) = (dist3(b, c), dist3(c, a), dist3(a, b));
    let area = double_area3(a, b, c) * T::lit(0.5);
    let p = (la + lb + lc) * T::lit(0.5);
    let h = la.max(lb).max(lc);
    if area <= T::zero() || p * h <= T::zero() {
        return T::zero();
    }
    (T::lit(6.0 / 3f64.sqrt()) * area / (p * h)).min(T::one())
}

/// Interior angles in degrees by the law of cosines; degenerate triangles
/// give `[0, 0, 180]`.
pub fn triangle_angles<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> [f64; 3] {
    let (la, lb, lc) = (dist3(b, c).to_f64_lossy(), dist3(c, a).to_f64_lossy(), dist3(a, b).to_f64_lossy());
    if double_area3(a, b, c) <= T::zero() || la * lb * lc <= 0.0 {
        return [0.0, 0.0, 180.0];
    }
    let angle = |opp: f64, s1: f64, s2: f64| {
        ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0).acos().to_degrees()
    };
    [angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)]
}

/// Angle aggregates of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleStats {
    pub theta_min_avg: f64,
    pub frac_lt_30: f64,
    pub frac_gt_120: f64,
    pub histogram: Vec<u64>,
}

pub fn angle_stats<T: Real>(mesh: &MidSurfaceMesh<T>) -> Result<AngleStats> {
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let (mut min_sum, mut lt30, mut gt120) = (0.0, 0usize, 0usize);
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangle_points(t);
        let angles = triangle_angles(a, b, c);
        min_sum += angles.iter().copied().fold(f64::INFINITY, f64::min);
        for &deg in &angles {
            histogram[(deg.floor() as usize).min(HISTOGRAM_BINS - 1)] += 1;
            lt30 += usize::from(deg < 30.0);
            gt120 += usize::from(deg > 120.0);
        }
    }
    let tris = mesh.triangle_count() as f64;
    Ok(AngleStats {
        theta_min_avg: min_sum / tris,
        frac_lt_30: 100.0 * lt30 as f64 / (3.0 * tris),
        frac_gt_120: 100.0 * gt120 as f64 / (3.0 * tris),
        histogram,
    })
}

/// Number of distinct edges at each vertex.
pub fn valences<T: Real>(mesh: &MidSurfaceMesh<T>) -> Vec<usize> {
    let mut valence = vec![0usize; mesh.vertex_count()];
    for (a, b) in mesh.edge_map().into_keys() {
        valence[a] += 1;
        valence[b] += 1;
    }
    valence
}

/// Percent of vertices (boundary and isolated ones included) with valence
/// 5, 6 or 7.
pub fn valence_stats<T: Real>(mesh: &MidSurfaceMesh<T>) -> f64 {
    if mesh.vertex_count() == 0 {
        return 0.0;
    }
    let hits = valences(mesh).into_iter().filter(|v| (5..=7).contains(v)).count();
    100.0 * hits as f64 / mesh.vertex_count() as f64
}

pub fn report<T: Real>(mesh: &MidSurfaceMesh<T>) -> Result<QualityReport> {
    let angles = angle_stats(mesh)?;
    let qs: Vec<f64> = (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            triangle_quality(a, b, c).to_f64_lossy()
        })
        .collect();
    Ok(QualityReport {
        vertex_count: mesh.vertex_count(),
        triangle_count: mesh.triangle_count(),
        q_min: qs.iter().copied().fold(f64::INFINITY, f64::min),
        q_avg: qs.iter().sum::<f64>() / qs.len() as f64,
        theta_min_avg: angles.theta_min_avg,
        frac_lt_30: angles.frac_lt_30,
        frac_gt_120: angles.frac_gt_120,
        v567: valence_stats(mesh),
        angle_histogram: angles.histogram,
    })
}

impl QualityReport {
    fn metrics(&self) -> [(&'static str, f64); 6] {
        [
            ("q_min", self.q_min),
            ("q_avg", self.q_avg),
            ("theta_min_avg", self.theta_min_avg),
            ("frac_lt_30", self.frac_lt_30),
            ("frac_gt_120", self.frac_gt_120),
            ("v567", self.v567),
        ]
    }

    /// `name = value` lines; non-empty histogram bins follow the metrics.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertex_count = {}", self.vertex_count);
        let _ = writeln!(s, "triangle_count = {}", self.triangle_count);
        for (name, v) in self.metrics() {
            let _ = writeln!(s, "{name} = {v:.4}");
        }
        for (deg, &n) in self.angle_histogram.iter().enumerate().filter(|(_, &n)| n > 0) {
            let _ = writeln!(s, "angle_hist_{deg} = {n}");
        }
        s
    }

    /// Flat JSON object with every histogram bin as `angle_hist_<deg>`.
    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert("vertex_count".into(), Value::from(self.vertex_count));
        m.insert("triangle_count".into(), Value::from(self.triangle_count));
        for (name, v) in self.metrics() {
            m.insert(name.into(), Value::from(v));
        }
        for (deg, &n) in self.angle_histogram.iter().enumerate() {
            m.insert(format!("angle_hist_{deg}"), Value::from(n));
        }
        serde_json::to_string_pretty(&Value::Object(m)).expect("plain numbers serialize")
    }
}
