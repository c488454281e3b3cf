//! Mid-polyline tracing on the slices of the ridge height field.
//!
//! Each slice component is traced from its field maximum along the
//! minimal-curvature line field with Euler steps of length `h = sqrt(2) * sz`.
//! After every step the point is pulled back onto the crest by a golden-section
//! search across the ridge. Tracing stops on loop closure or when the point
//! leaves the one-pixel dilation of the component; open traces are continued
//! backwards from the start. Parts of a component not explained by its
//! polyline are re-traced as components of their own.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{extract_slice, sample_field_cubic, ScalarField2D, ScalarField3D};
use crate::geom::{axpy2, dist2, dot2, norm2, scale2, sub2, Point2};
use crate::hessian::{compute_hessian, eigen2x2, sample_hessian, EigenPair2D, HessianField2D};
use crate::scalar::Real;
use crate::sdf::squared_edt;
use crate::volume::{components_2d, slice_components, BinaryMask3D, SliceComponent};

/// Maximum nesting of residue re-tracing.
pub const MAX_RESIDUE_DEPTH: usize = 8;

/// Coverage slack around the medial disks of a polyline, in pixels.
const COVERAGE_SLACK_PX: f64 = 1.5;

/// Ordered crest points of one slice component, in physical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MidPolyline<T> {
    pub slice_index: usize,
    pub points: Vec<Point2<T>>,
    /// Closed polylines have an implicit segment from the last point back to
    /// the first.
    pub closed: bool,
    pub component_id: usize,
    /// Nominal integration step `h`.
    pub step: T,
    /// Set when the step budget ran out before the trace terminated.
    pub truncated: bool,
}

impl<T: Real> MidPolyline<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of segments, including the closing one.
    pub fn segment_count(&self) -> usize {
        match (self.points.len(), self.closed) {
            (0 | 1, _) => 0,
            (n, true) => n,
            (n, false) => n - 1,
        }
    }

    /// Segment `i` as `(start, end)` point indices.
    pub fn segment(&self, i: usize) -> (usize, usize) {
        (i, (i + 1) % self.points.len())
    }

    pub fn arc_length(&self) -> T {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                dist2(self.points[a], self.points[b])
            })
            .sum()
    }

    /// Twice the signed area (positive for counter-clockwise loops).
    pub fn signed_area2(&self) -> T {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let (p, q) = (self.points[i], self.points[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum()
    }
}

/// Mid-polylines of one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SlicePolylines<T> {
    pub slice_index: usize,
    pub polylines: Vec<MidPolyline<T>>,
}

/// All mid-polylines of one object, by ascending slice index.
#[derive(Clone, Debug, PartialEq)]
pub struct PolylineStack<T> {
    /// Physical distance between slices.
    pub slice_spacing: T,
    /// Physical z of slice 0.
    pub z_origin: T,
    pub slices: Vec<SlicePolylines<T>>,
}

impl<T: Real> PolylineStack<T> {
    pub fn new(slice_spacing: T, z_origin: T) -> Self {
        Self { slice_spacing, z_origin, slices: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.slices.iter().all(|s| s.polylines.is_empty())
    }

    pub fn polyline_count(&self) -> usize {
        self.slices.iter().map(|s| s.polylines.len()).sum()
    }

    pub fn point_count(&self) -> usize {
        self.polylines().map(|p| p.len()).sum()
    }

    pub fn truncated_count(&self) -> usize {
        self.polylines().filter(|p| p.truncated).count()
    }

    pub fn polylines(&self) -> impl Iterator<Item = &MidPolyline<T>> {
        self.slices.iter().flat_map(|s| s.polylines.iter())
    }

    pub fn slice_z(&self, slice_index: usize) -> T {
        self.z_origin + T::from_usize_lossy(slice_index) * self.slice_spacing
    }

    /// Appends polylines of `slice_index`; slices must arrive in ascending order.
    pub fn push_slice(&mut self, slice_index: usize, polylines: Vec<MidPolyline<T>>) {
        if let Some(last) = self.slices.last() {
            assert!(last.slice_index < slice_index, "slices must be ascending");
        }
        assert!(polylines.iter().all(|p| p.slice_index == slice_index));
        self.slices.push(SlicePolylines { slice_index, polylines });
    }
}

/// Position and heading of an active trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceState<T> {
    pub point: Point2<T>,
    pub dir: Point2<T>,
}

/// Why a single step could not produce a new point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepError {
    ExitedField,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceOutcome<T> {
    Polyline(MidPolyline<T>),
    /// Disk-like component whose crest is too short to be a shell section.
    CapSkipped {
        arc_length: T,
        max_distance: T,
    },
}

/// Pixel center of the component pixel with the largest field value; ties go
/// to the smallest `(y, x)`.
pub fn find_seed<T: Real>(component: &SliceComponent, field: &ScalarField2D<T>) -> Point2<T> {
    let mut best = component.pixels[0];
    let mut best_v = field.get(best.0, best.1);
    for &(x, y) in &component.pixels[1..] {
        let v = field.get(x, y);
        if v > best_v {
            best = (x, y);
            best_v = v;
        }
    }
    field.position(best.0, best.1)
}

/// Maximizes the field along `p + t * dir` for `t` in `[-w, w]` (clipped to
/// the field) by golden-section search, `w` being one in-plane voxel.
pub fn golden_correct<T: Real>(field: &ScalarField2D<T>, p: Point2<T>, dir: Point2<T>) -> Point2<T> {
    let w = field.spacing[0].min(field.spacing[1]);
    let Some((lo, hi)) = clip_window(field, p, dir, w) else {
        return p;
    };
    let f = |t: T| sample_field_cubic(field, axpy2(p, t, dir)).unwrap_or(T::neg_infinity());
    let tol = w * T::lit(1e-3).min(T::lit(4.0) * T::epsilon().sqrt());
    let t = golden_max(f, lo, hi, tol);
    axpy2(p, t, dir)
}

/// Parameter range of `p + t * dir`, `|t| <= w`, that stays inside the field.
fn clip_window<T: Real>(field: &ScalarField2D<T>, p: Point2<T>, dir: Point2<T>, w: T) -> Option<(T, T)> {
    let (mut lo, mut hi) = (-w, w);
    let n = [field.nx, field.ny];
    for k in 0..2 {
        let min = field.origin[k];
        let max = field.origin[k] + T::from_usize_lossy(n[k] - 1) * field.spacing[k];
        if dir[k].abs() <= T::epsilon() {
            if p[k] < min || p[k] > max {
                return None;
            }
            continue;
        }
        let (t1, t2) = ((min - p[k]) / dir[k], (max - p[k]) / dir[k]);
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (lo <= hi).then_some((lo, hi))
}

fn golden_max<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T, tol: T) -> T {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iters = 0;
    while b - a > tol && iters < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let mut mid = (a + b) * T::lit(0.5);
    // golden section alone stalls near sqrt(eps); one parabolic step through
    // a tight stencil brings the maximizer down to rounding level
    let d = (hi - lo) * T::lit(1e-4);
    let (fm, fl, fr) = (f(mid), f(mid - d), f(mid + d));
    let curv = (fl + fr) - (fm + fm);
    if curv < T::zero() {
        let t = mid - d * (fr - fl) / (curv + curv);
        if t >= lo && t <= hi && (t - mid).abs() <= (b - a) + d {
            mid = t;
        }
    }
    // the window ends win for monotone profiles
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .fold((mid, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

/// Field, Hessian and step geometry of one slice.
pub struct SliceTracer<'a, T> {
    pub field: &'a ScalarField2D<T>,
    pub hessian: &'a HessianField2D<T>,
    /// Integration step `h`.
    pub step: T,
}

impl<'a, T: Real> SliceTracer<'a, T> {
    pub fn new(field: &'a ScalarField2D<T>, hessian: &'a HessianField2D<T>, slice_spacing: T) -> Self {
        Self { field, hessian, step: T::lit(2f64.sqrt()) * slice_spacing }
    }

    fn eigen_at(&self, p: Point2<T>) -> Option<EigenPair2D<T>> {
        sample_hessian(self.hessian, p).ok().map(|(a, b, c)| eigen2x2(a, b, c))
    }

    fn pixel_spacing(&self) -> T {
        self.field.spacing[0].min(self.field.spacing[1])
    }

    /// One Euler step along the line field followed by crest correction.
    pub fn step(&self, state: &TraceState<T>) -> Result<TraceState<T>, StepError> {
        let e = self.eigen_at(state.point).ok_or(StepError::ExitedField)?;
        let mut v = e.v_trace;
        if dot2(v, state.dir) < T::zero() {
            v = scale2(v, -T::one());
        }
        let candidate = axpy2(state.point, self.step, v);
        if !self.field.in_bounds(candidate) {
            return Err(StepError::ExitedField);
        }
        let across = self.eigen_at(candidate).ok_or(StepError::ExitedField)?.v_correct;
        let next = golden_correct(self.field, candidate, across);
        let delta = sub2(next, state.point);
        let len = norm2(delta);
        let dir = if len > T::zero() { scale2(delta, T::one() / len) } else { v };
        Ok(TraceState { point: next, dir })
    }

    fn inside(&self, component: &SliceComponent, p: Point2<T>) -> bool {
        let (x, y) = self.field.containing_pixel(p);
        component.dilated_contains(x, y)
    }

    /// Walks from `start` along `dir` until closure, exit, reversal or budget.
    fn walk(&self, component: &SliceComponent, start: Point2<T>, dir: Point2<T>, budget: &mut usize) -> Walk<T> {
        let close_radius = self.step * T::lit(0.5);
        let mut state = TraceState { point: start, dir };
        let mut points = Vec::new();
        let mut dirs = Vec::new();
        loop {
            if *budget == 0 {
                return Walk { points, end: WalkEnd::Budget };
            }
            *budget -= 1;
            let Ok(next) = self.step(&state) else {
                return Walk { points, end: WalkEnd::Exited };
            };
            if !self.inside(component, next.point) {
                return Walk { points, end: WalkEnd::Exited };
            }
            // the crest forks at free ends; following a branch into a corner
            // turns the walk back on itself
            if dot2(next.dir, state.dir) <= T::zero() {
                return Walk { points, end: WalkEnd::Exited };
            }
            if points.len() >= 2 && dist2(next.point, start) < close_radius {
                return Walk { points, end: WalkEnd::Closed(0) };
            }
            // a walk can also settle into an orbit that never revisits the start
            let older = points.len().saturating_sub(2);
            let orbit = (0..older)
                .find(|&k| dist2(next.point, points[k]) < close_radius && dot2(next.dir, dirs[k]) > T::zero());
            if let Some(k) = orbit {
                return Walk { points, end: WalkEnd::Closed(k + 1) };
            }
            points.push(next.point);
            dirs.push(next.dir);
            state = next;
        }
    }

    /// Starting point and initial heading for `component`. On odd slices the
    /// start is moved a quarter step along the crest so vertices of adjacent
    /// slices interleave instead of stacking. The heading points to +y (+x
    /// when level), which commutes with mirroring across x.
    fn start(&self, component: &SliceComponent) -> (Point2<T>, Point2<T>) {
        let seed = find_seed(component, self.field);
        let Some(e) = self.eigen_at(seed) else {
            return (seed, [T::one(), T::zero()]);
        };
        let start = golden_correct(self.field, seed, e.v_correct);
        let v = e.v_trace;
        let dir = if v[1] < T::zero() || (v[1] == T::zero() && v[0] < T::zero()) { scale2(v, -T::one()) } else { v };
        if component.slice_index.is_multiple_of(2) {
            return (start, dir);
        }
        let quarter = self.step * T::lit(0.25);
        let shifted = |s: T| {
            let q = axpy2(start, s * quarter, dir);
            let across = self.eigen_at(q).map(|e| e.v_correct)?;
            let q = golden_correct(self.field, q, across);
            self.inside(component, q).then_some(q)
        };
        (shifted(T::one()).or_else(|| shifted(-T::one())).unwrap_or(start), dir)
    }

    /// Traces the crest of one component without the cap test.
    pub fn trace_polyline(&self, component: &SliceComponent) -> MidPolyline<T> {
        let (start, dir) = self.start(component);
        let px = self.step / self.pixel_spacing();
        let mut budget =
            (T::lit(8.0) * T::from_usize_lossy(component.len()) / px).ceil().to_usize().unwrap_or(usize::MAX).max(16);

        let forward = self.walk(component, start, dir, &mut budget);
        let mut truncated = forward.end == WalkEnd::Budget;
        let closed = matches!(forward.end, WalkEnd::Closed(_));
        let mut points = Vec::with_capacity(forward.points.len() + 1);
        if let WalkEnd::Closed(k) = forward.end {
            points.push(start);
            points.extend(forward.points);
            points.drain(..k);
        } else {
            let backward = if truncated {
                Walk { points: Vec::new(), end: WalkEnd::Budget }
            } else {
                self.walk(component, start, scale2(dir, -T::one()), &mut budget)
            };
            truncated |= backward.end == WalkEnd::Budget;
            points.extend(backward.points.into_iter().rev());
            points.push(start);
            points.extend(forward.points);
        }

        let polyline = MidPolyline {
            slice_index: component.slice_index,
            points,
            closed,
            component_id: component.component_id,
            step: self.step,
            truncated,
        };
        if truncated {
            warn!(
                "slice {} component {}: step budget exhausted, polyline truncated",
                component.slice_index, component.component_id
            );
        }
        polyline
    }

    /// Traces one component. Components whose crest is shorter than four
    /// times their largest in-slice boundary distance are reported as caps.
    pub fn trace(&self, component: &SliceComponent) -> TraceOutcome<T> {
        let polyline = self.trace_polyline(component);
        let closed = polyline.closed;
        let max_distance = ComponentDistance::new(component, self.field.spacing).max();
        let arc_length = polyline.arc_length();
        let too_few = if closed { polyline.len() < 3 } else { polyline.len() < 2 };
        if too_few || arc_length < T::lit(4.0) * max_distance {
            return TraceOutcome::CapSkipped { arc_length, max_distance };
        }
        TraceOutcome::Polyline(polyline)
    }

    /// Components of `component` left unexplained by `polylines`.
    ///
    /// A pixel is explained when it lies within the medial disk of some
    /// polyline point (radius: in-slice boundary distance at that point) grown
    /// by 1.5 pixels. Unexplained regions larger than four times the
    /// component's maximal boundary distance (in pixels) are returned.
    pub fn coverage_residue(&self, component: &SliceComponent, polylines: &[MidPolyline<T>]) -> Vec<SliceComponent> {
        let dist = ComponentDistance::new(component, self.field.spacing);
        let (bx0, by0, bx1, by1) = component.bounds();
        let (bw, bh) = (bx1 - bx0 + 1, by1 - by0 + 1);
        let mut covered = vec![false; bw * bh];
        let ps = self.pixel_spacing();
        let slack = T::lit(COVERAGE_SLACK_PX) * ps;
        let sample = ps * T::lit(0.5);

        for pl in polylines {
            for i in 0..pl.segment_count().max(usize::from(pl.len() == 1)) {
                let (ia, ib) = if pl.len() == 1 { (0, 0) } else { pl.segment(i) };
                let (a, b) = (pl.points[ia], pl.points[ib]);
                let n = (dist2(a, b) / sample).ceil().to_usize().unwrap_or(1).max(1);
                for k in 0..=n {
                    let q = axpy2(a, T::from_usize_lossy(k) / T::from_usize_lossy(n), sub2(b, a));
                    let radius = dist.at_point(self.field, q) + slack;
                    self.mark_disk(&mut covered, (bx0, by0, bw, bh), q, radius);
                }
            }
        }

        let mut plane = vec![false; bw * bh];
        for &(x, y) in &component.pixels {
            let i = (x - bx0) + bw * (y - by0);
            plane[i] = !covered[i];
        }
        let threshold = T::lit(4.0) * dist.max() / ps;
        components_2d(&plane, bw, bh)
            .into_iter()
            .filter(|c| T::from_usize_lossy(c.len()) > threshold)
            .map(|c| {
                let pixels = c.into_iter().map(|(x, y)| (x + bx0, y + by0)).collect();
                SliceComponent::new(component.slice_index, component.component_id, component.slice_dims, pixels)
            })
            .collect()
    }

    fn mark_disk(
        &self,
        covered: &mut [bool],
        (bx0, by0, bw, bh): (usize, usize, usize, usize),
        q: Point2<T>,
        radius: T,
    ) {
        let u = self.field.to_pixel(q);
        let rx = (radius / self.field.spacing[0]).ceil().to_i64().unwrap_or(0);
        let ry = (radius / self.field.spacing[1]).ceil().to_i64().unwrap_or(0);
        let (cx, cy) = (u[0].round().to_i64().unwrap_or(0), u[1].round().to_i64().unwrap_or(0));
        for y in (cy - ry).max(by0 as i64)..=(cy + ry).min((by0 + bh) as i64 - 1) {
            for x in (cx - rx).max(bx0 as i64)..=(cx + rx).min((bx0 + bw) as i64 - 1) {
                let p = self.field.position(x as usize, y as usize);
                if dist2(p, q) <= radius {
                    covered[(x as usize - bx0) + bw * (y as usize - by0)] = true;
                }
            }
        }
    }

    /// Traces a component and, recursively, its untraced residues.
    pub fn trace_component(&self, component: &SliceComponent, next_id: &mut usize) -> Vec<MidPolyline<T>> {
        let mut out = Vec::new();
        let mut queue = vec![(component.clone(), 0usize)];
        while let Some((comp, depth)) = queue.pop() {
            let TraceOutcome::Polyline(pl) = self.trace(&comp) else {
                continue;
            };
            let residues = self.coverage_residue(&comp, std::slice::from_ref(&pl));
            out.push(pl);
            if residues.is_empty() {
                continue;
            }
            if depth + 1 > MAX_RESIDUE_DEPTH {
                warn!(
                    "slice {}: residue depth limit reached, dropping {} untraced region(s)",
                    comp.slice_index,
                    residues.len()
                );
                continue;
            }
            // reversed so the queue pops residues in their natural order
            for mut r in residues.into_iter().rev() {
                r.component_id = *next_id;
                *next_id += 1;
                queue.push((r, depth + 1));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WalkEnd {
    /// Loop closed onto the start (0) or onto `points[k - 1]` (k).
    Closed(usize),
    Exited,
    Budget,
}

struct Walk<T> {
    points: Vec<Point2<T>>,
    end: WalkEnd,
}

/// In-slice distance from component pixels to the nearest pixel outside the
/// component, over the component's bounding box.
struct ComponentDistance<T> {
    x0: i64,
    y0: i64,
    w: usize,
    h: usize,
    values: Vec<T>,
}

impl<T: Real> ComponentDistance<T> {
    fn new(component: &SliceComponent, spacing: [T; 2]) -> Self {
        let (bx0, by0, bx1, by1) = component.bounds();
        // one pixel of background margin on every side
        let (x0, y0) = (bx0 as i64 - 1, by0 as i64 - 1);
        let (w, h) = (bx1 - bx0 + 3, by1 - by0 + 3);
        let mut fg = vec![false; w * h];
        for &(x, y) in &component.pixels {
            fg[(x as i64 - x0) as usize + w * (y as i64 - y0) as usize] = true;
        }
        let sq = squared_edt([w, h, 1], [spacing[0], spacing[1], T::one()], &fg);
        Self { x0, y0, w, h, values: sq.into_iter().map(|v| v.sqrt()).collect() }
    }

    fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    fn at_point(&self, field: &ScalarField2D<T>, p: Point2<T>) -> T {
        let (x, y) = field.containing_pixel(p);
        let (dx, dy) = (x - self.x0, y - self.y0);
        if dx < 0 || dy < 0 || dx >= self.w as i64 || dy >= self.h as i64 {
            return T::zero();
        }
        self.values[dx as usize + self.w * dy as usize]
    }
}

/// Traces one component against precomputed slice data.
pub fn trace<T: Real>(
    component: &SliceComponent,
    field: &ScalarField2D<T>,
    hessian: &HessianField2D<T>,
    slice_spacing: T,
) -> TraceOutcome<T> {
    SliceTracer::new(field, hessian, slice_spacing).trace(component)
}

/// Polylines of every component of slice `z`.
pub fn trace_slice<T: Real>(mask: &BinaryMask3D, smoothed: &ScalarField3D<T>, z: usize) -> Result<Vec<MidPolyline<T>>> {
    let components = slice_components(mask, z);
    if components.is_empty() {
        return Ok(Vec::new());
    }
    let field = extract_slice(smoothed, z)?;
    let hessian = compute_hessian(&field)?;
    let tracer = SliceTracer::new(&field, &hessian, T::lit(mask.grid.spacing[2]));
    let mut next_id = components.len();
    let mut out = Vec::new();
    for comp in &components {
        for mut pl in tracer.trace_component(comp, &mut next_id) {
            if pl.closed && pl.signed_area2() < T::zero() {
                pl.points[1..].reverse();
            }
            out.push(pl);
        }
    }
    Ok(out)
}

/// Mid-polylines of every slice of `mask`, traced on `smoothed`.
///
/// Slices are processed in parallel; the result is ordered by slice.
pub fn extract_stack<T: Real>(mask: &BinaryMask3D, smoothed: &ScalarField3D<T>) -> Result<PolylineStack<T>> {
    if mask.grid.dims != smoothed.grid.dims {
        return Err(Error::DimensionMismatch(format!("mask {:?} vs field {:?}", mask.grid.dims, smoothed.grid.dims)));
    }
    let nz = mask.grid.dims[2];
    let per_slice: Vec<Vec<MidPolyline<T>>> =
        (0..nz).into_par_iter().map(|z| trace_slice(mask, smoothed, z)).collect::<Result<_>>()?;
    let mut stack = PolylineStack::new(T::lit(mask.grid.spacing[2]), T::lit(mask.grid.origin[2]));
    for (z, polylines) in per_slice.into_iter().enumerate() {
        if !polylines.is_empty() {
            stack.push_slice(z, polylines);
        }
    }
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdf::compute_sdf;
    use crate::smooth::smooth_sdf;
    use crate::volume::Grid3;

    fn extruded(n: usize, nz: usize, inside: impl Fn(f64, f64) -> bool) -> BinaryMask3D {
        let c = (n as f64 - 1.0) / 2.0;
        BinaryMask3D::from_fn(Grid3::isotropic([n, n, nz]), |x, y, _| inside(x as f64 - c, y as f64 - c))
    }

    fn traced(mask: &BinaryMask3D, z: usize) -> Vec<MidPolyline<f64>> {
        let sdf = compute_sdf::<f64>(mask).unwrap();
        let smoothed = smooth_sdf(&sdf).unwrap();
        trace_slice(mask, &smoothed, z).unwrap()
    }

    fn annulus(r_in: f64, r_out: f64) -> impl Fn(f64, f64) -> bool {
        move |x, y| {
            let r = x.hypot(y);
            r >= r_in && r <= r_out
        }
    }

    fn ridge_y(y0: f64) -> (ScalarField2D<f64>, HessianField2D<f64>) {
        let f = ScalarField2D::from_fn(40, 12, [1.0, 1.0], |_, y| -(y as f64 - y0).powi(2));
        let h = compute_hessian(&f).unwrap();
        (f, h)
    }

    fn hausdorff(a: &[Point2<f64>], b: &[Point2<f64>]) -> f64 {
        let one = |a: &[Point2<f64>], b: &[Point2<f64>]| {
            a.iter().map(|&p| b.iter().map(|&q| dist2(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        one(a, b).max(one(b, a))
    }

    #[test]
    fn seed_of_single_pixel() {
        let f = ScalarField2D::from_fn(8, 8, [1.0, 1.0], |x, y| (x + y) as f64);
        let c = SliceComponent::new(0, 0, (8, 8), vec![(3, 5)]);
        assert_eq!(find_seed(&c, &f), [3.0, 5.0]);
    }

    #[test]
    fn seed_tie_prefers_smallest_y_then_x() {
        let f = ScalarField2D::from_fn(
            8,
            8,
            [1.0, 1.0],
            |x, y| {
                if (x, y) == (6, 2) || (x, y) == (1, 4) {
                    5.0
                } else {
                    0.0
                }
            },
        );
        let c = SliceComponent::new(0, 0, (8, 8), (0..8).flat_map(|y| (0..8).map(move |x| (x, y))).collect());
        assert_eq!(find_seed(&c, &f), [6.0, 2.0]);
    }

    #[test]
    fn seed_near_mid_circle() {
        let mask = extruded(40, 5, annulus(10.0, 14.0));
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let smoothed = smooth_sdf(&sdf).unwrap();
        let field = extract_slice(&smoothed, 2).unwrap();
        let comp = &slice_components(&mask, 2)[0];
        let s = find_seed(comp, &field);
        let r = (s[0] - 19.5).hypot(s[1] - 19.5);
        assert!((r - 12.0).abs() <= 1.0, "seed radius {r}");
    }

    #[test]
    fn golden_finds_parabola_crest() {
        let (f, _) = ridge_y(2.3);
        let start = [5.0, 2.0];
        let p = golden_correct(&f, start, [0.0, 1.0]);
        assert!((p[1] - 2.3).abs() < 1e-3, "{p:?}");
        assert_eq!(p[0], 5.0);
        for k in 0..=20 {
            let y = 1.3 + k as f64 * 0.1;
            let p = golden_correct(&f, [7.5, y], [0.0, 1.0]);
            assert!((p[1] - 2.3).abs() < 1e-3, "from {y}: {p:?}");
        }
    }

    #[test]
    fn golden_keeps_symmetric_maximum() {
        let (f, _) = ridge_y(5.0);
        let p = golden_correct(&f, [4.0, 5.0], [0.0, 1.0]);
        assert!((p[1] - 5.0).abs() < 1e-3);
    }

    #[test]
    fn golden_monotone_hits_window_end() {
        let f = ScalarField2D::from_fn(10, 10, [1.0, 1.0], |x, _| x as f64);
        assert_eq!(golden_correct(&f, [4.0, 4.0], [1.0, 0.0]), [5.0, 4.0]);
        // clipped at the field edge
        assert_eq!(golden_correct(&f, [8.5, 4.0], [1.0, 0.0]), [9.0, 4.0]);
        assert_eq!(golden_correct(&f, [20.0, 4.0], [1.0, 0.0]), [20.0, 4.0]);
    }

    #[test]
    fn steps_follow_straight_ridge() {
        let (f, h) = ridge_y(5.0);
        let tracer = SliceTracer::new(&f, &h, 1.0);
        let mut state = TraceState { point: [3.0, 5.0], dir: [1.0, 0.0] };
        for _ in 0..10 {
            state = tracer.step(&state).unwrap();
        }
        assert!((state.point[0] - (3.0 + 10.0 * tracer.step)).abs() < 1e-9);
        assert!((state.point[1] - 5.0).abs() < 1e-3);
    }

    #[test]
    fn step_flips_against_previous_direction() {
        let (f, h) = ridge_y(5.0);
        let tracer = SliceTracer::new(&f, &h, 1.0);
        // eigen2x2 yields +x here; heading -x must flip it
        let state = TraceState { point: [20.0, 5.0], dir: [-1.0, 0.0] };
        let next = tracer.step(&state).unwrap();
        assert!(next.point[0] < 20.0);
        assert!((next.dir[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn step_exits_at_edge() {
        let (f, h) = ridge_y(5.0);
        let tracer = SliceTracer::new(&f, &h, 1.0);
        let state = TraceState { point: [38.5, 5.0], dir: [1.0, 0.0] };
        assert_eq!(tracer.step(&state), Err(StepError::ExitedField));
    }

    #[test]
    fn annulus_gives_closed_ring() {
        let mask = extruded(40, 5, annulus(10.0, 14.0));
        for z in [1, 2] {
            let pls = traced(&mask, z);
            assert_eq!(pls.len(), 1);
            let pl = &pls[0];
            assert!(pl.closed);
            assert!(pl.signed_area2() > 0.0);
            for p in &pl.points {
                let r = (p[0] - 19.5).hypot(p[1] - 19.5);
                assert!((r - 12.0).abs() <= 0.5, "radius {r}");
            }
        }
    }

    #[test]
    fn step_lengths_stay_within_bounds() {
        let mask = extruded(40, 5, annulus(9.0, 14.0));
        let mut broken = mask.clone();
        for y in 17..23 {
            for x in 30..40 {
                for z in 0..5 {
                    let i = broken.grid.index(x, y, z);
                    broken.bits[i] = false;
                }
            }
        }
        for m in [&mask, &broken] {
            for pl in traced(m, 2) {
                let h = pl.step;
                for i in 0..pl.segment_count() {
                    let (a, b) = pl.segment(i);
                    let d = dist2(pl.points[a], pl.points[b]);
                    assert!(d >= 0.25 * h && d <= 2.0 * h, "segment {i} length {d}");
                }
            }
        }
    }

    #[test]
    fn broken_ring_gives_open_polyline() {
        let mask = extruded(40, 5, |x, y| annulus(10.0, 14.0)(x, y) && !(x > 0.0 && y.abs() < 3.0));
        let pls = traced(&mask, 2);
        assert_eq!(pls.len(), 1);
        let pl = &pls[0];
        assert!(!pl.closed);
        let comp = &slice_components(&mask, 2)[0];
        for end in [pl.points[0], *pl.points.last().unwrap()] {
            let (x, y) = (end[0].round() as i64, end[1].round() as i64);
            assert!(comp.dilated_contains(x, y));
            // the ends sit at the cut, not part way round
            assert!(end[0] > 19.5 && (end[1] - 19.5).abs() < 8.0, "{end:?}");
        }
    }

    #[test]
    fn solid_disk_is_a_cap() {
        let mask = extruded(40, 31, |x, y| x.hypot(y) <= 7.0);
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let smoothed = smooth_sdf(&sdf).unwrap();
        let field = extract_slice(&smoothed, 15).unwrap();
        let hessian = compute_hessian(&field).unwrap();
        let comp = &slice_components(&mask, 15)[0];
        match trace(comp, &field, &hessian, 1.0) {
            TraceOutcome::CapSkipped { arc_length, max_distance } => assert!(arc_length < 4.0 * max_distance),
            TraceOutcome::Polyline(pl) => panic!("disk traced as {} points", pl.len()),
        }
        assert!(trace_slice(&mask, &smoothed, 15).unwrap().is_empty());
    }

    #[test]
    fn t_shape_branch_is_retraced() {
        // bar along x, stem hanging down from its middle
        let mask = extruded(48, 9, |x, y| {
            (x.abs() <= 18.0 && (y - 8.0).abs() <= 2.0) || (x.abs() <= 2.0 && (-18.0..=8.0).contains(&y))
        });
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let smoothed = smooth_sdf(&sdf).unwrap();
        let field = extract_slice(&smoothed, 4).unwrap();
        let hessian = compute_hessian(&field).unwrap();
        let tracer = SliceTracer::new(&field, &hessian, 1.0);
        let comp = &slice_components(&mask, 4)[0];
        let TraceOutcome::Polyline(first) = tracer.trace(comp) else { panic!("cap") };
        let residues = tracer.coverage_residue(comp, std::slice::from_ref(&first));
        assert_eq!(residues.len(), 1);
        let mut next_id = 1;
        let all = tracer.trace_component(comp, &mut next_id);
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].component_id, 1);
        assert_eq!(next_id, 2);
    }

    #[test]
    fn traced_ring_leaves_no_residue() {
        let mask = extruded(40, 5, annulus(10.0, 14.0));
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let smoothed = smooth_sdf(&sdf).unwrap();
        let field = extract_slice(&smoothed, 2).unwrap();
        let hessian = compute_hessian(&field).unwrap();
        let tracer = SliceTracer::new(&field, &hessian, 1.0);
        let comp = &slice_components(&mask, 2)[0];
        let TraceOutcome::Polyline(pl) = tracer.trace(comp) else { panic!("cap") };
        assert!(tracer.coverage_residue(comp, &[pl]).is_empty());
    }

    #[test]
    fn small_residue_is_ignored() {
        let mask = extruded(40, 5, annulus(10.0, 14.0));
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let smoothed = smooth_sdf(&sdf).unwrap();
        let field = extract_slice(&smoothed, 2).unwrap();
        let hessian = compute_hessian(&field).unwrap();
        let tracer = SliceTracer::new(&field, &hessian, 1.0);
        let comp = &slice_components(&mask, 2)[0];
        let TraceOutcome::Polyline(mut pl) = tracer.trace(comp) else { panic!("cap") };
        // dropping a few points uncovers only a sliver of the ring
        pl.points.truncate(pl.points.len() - 2);
        assert!(tracer.coverage_residue(comp, &[pl]).is_empty());
    }

    #[test]
    fn empty_mask_gives_empty_stack() {
        let grid = Grid3::isotropic([8, 8, 4]);
        let mask = BinaryMask3D::from_fn(grid, |_, _, _| false);
        let field = ScalarField3D::<f64>::zeros(grid);
        let stack = extract_stack(&mask, &field).unwrap();
        assert!(stack.is_empty());
        assert_eq!(stack.polyline_count(), 0);
    }

    #[test]
    fn stack_has_one_ring_per_slice() {
        let mask = BinaryMask3D::from_fn(Grid3::isotropic([40, 40, 20]), |x, y, z| {
            let r = (x as f64 - 19.5).hypot(y as f64 - 19.5);
            (2..18).contains(&z) && (10.0..=14.0).contains(&r)
        });
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let stack = extract_stack(&mask, &smooth_sdf(&sdf).unwrap()).unwrap();
        let indices: Vec<usize> = stack.slices.iter().map(|s| s.slice_index).collect();
        assert_eq!(indices, (2..18).collect::<Vec<_>>());
        for s in &stack.slices {
            assert_eq!(s.polylines.len(), 1);
            assert!(s.polylines[0].closed);
            assert!(s.polylines.iter().all(|p| p.slice_index == s.slice_index));
        }
    }

    #[test]
    fn mirror_equivariance() {
        let n = 40;
        let open = extruded(n, 5, |x, y| {
            annulus(9.0, 13.0)(x + 1.7, y) && !(x > 2.0 && y.abs() < 2.5) && !(y > 10.0 && x < -6.0)
        });
        let ring = extruded(n, 5, |x, y| annulus(9.0, 13.0)(x + 1.7, y - 0.6));
        let mirror = |p: &Point2<f64>| [(n - 1) as f64 - p[0], p[1]];
        for z in [1, 2] {
            let a = traced(&open, z);
            let b = traced(&open.mirrored_x(), z);
            assert_eq!(a.len(), b.len());
            for (pa, pb) in a.iter().zip(&b) {
                assert!(!pa.closed);
                let mut ma: Vec<Point2<f64>> = pa.points.iter().map(mirror).collect();
                if dist2(ma[0], pb.points[0]) > dist2(*ma.last().unwrap(), pb.points[0]) {
                    ma.reverse();
                }
                assert_eq!(ma.len(), pb.points.len());
                for (p, q) in ma.iter().zip(&pb.points) {
                    assert!(dist2(*p, *q) < 1e-6, "{p:?} vs {q:?}");
                }
            }
            // closed rings may be walked the other way round: same curve,
            // different samples
            let a = traced(&ring, z);
            let b = traced(&ring.mirrored_x(), z);
            assert_eq!(a.len(), 1);
            assert_eq!(b.len(), 1);
            let ma: Vec<Point2<f64>> = a[0].points.iter().map(mirror).collect();
            assert!(hausdorff(&ma, &b[0].points) < 0.5 * a[0].step);
        }
    }

    #[test]
    fn f32_traces_like_f64() {
        let mask = extruded(40, 5, annulus(10.0, 14.0));
        let sdf = compute_sdf::<f32>(&mask).unwrap();
        let pls = trace_slice(&mask, &smooth_sdf(&sdf).unwrap(), 2).unwrap();
        assert_eq!(pls.len(), 1);
        assert!(pls[0].closed);
        for p in &pls[0].points {
            let r = (p[0] - 19.5).hypot(p[1] - 19.5);
            assert!((r - 12.0).abs() <= 0.5);
        }
    }
}
