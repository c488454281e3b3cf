//! Small fixed-size vector helpers on `[T; N]`.

use crate::scalar::Real;

pub type Point2<T> = [T; 2];
pub type Point3<T> = [T; 3];

#[inline]
pub fn add2<T: Real>(a: Point2<T>, b: Point2<T>) -> Point2<T> {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub2<T: Real>(a: Point2<T>, b: Point2<T>) -> Point2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale2<T: Real>(a: Point2<T>, s: T) -> Point2<T> {
    [a[0] * s, a[1] * s]
}

/// `a + s * d`
#[inline]
pub fn axpy2<T: Real>(a: Point2<T>, s: T, d: Point2<T>) -> Point2<T> {
    [a[0] + s * d[0], a[1] + s * d[1]]
}

#[inline]
pub fn dot2<T: Real>(a: Point2<T>, b: Point2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm2<T: Real>(a: Point2<T>) -> T {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist2<T: Real>(a: Point2<T>, b: Point2<T>) -> T {
    norm2(sub2(a, b))
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_dist2<T: Real>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = sub2(b, a);
    let len2 = dot2(ab, ab);
    if len2 <= T::zero() {
        return dist2(p, a);
    }
    let t = (dot2(sub2(p, a), ab) / len2).max(T::zero()).min(T::one());
    dist2(p, axpy2(a, t, ab))
}

#[inline]
pub fn sub3<T: Real>(a: Point3<T>, b: Point3<T>) -> Point3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot3<T: Real>(a: Point3<T>, b: Point3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<T: Real>(a: Point3<T>, b: Point3<T>) -> Point3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm3<T: Real>(a: Point3<T>) -> T {
    dot3(a, a).sqrt()
}

#[inline]
pub fn dist3<T: Real>(a: Point3<T>, b: Point3<T>) -> T {
    norm3(sub3(a, b))
}

#[inline]
pub fn midpoint3<T: Real>(a: Point3<T>, b: Point3<T>) -> Point3<T> {
    let h = T::lit(0.5);
    [(a[0] + b[0]) * h, (a[1] + b[1]) * h, (a[2] + b[2]) * h]
}

/// Twice the area of triangle `abc`.
#[inline]
pub fn double_area3<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    norm3(cross3(sub3(b, a), sub3(c, a)))
}

/// Interior angle at `b` of the corner `a-b-c`, in radians. Zero-length legs
/// give zero.
pub fn corner_angle3<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> T {
    let u = sub3(a, b);
    let v = sub3(c, b);
    let (nu, nv) = (norm3(u), norm3(v));
    if nu <= T::zero() || nv <= T::zero() {
        return T::zero();
    }
    // atan2 form stays accurate near 0 and pi
    norm3(cross3(u, v)).atan2(dot3(u, v))
}
