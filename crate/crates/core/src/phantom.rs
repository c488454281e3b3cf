//! Analytic thin-shell phantoms with known mid-surfaces.
//!
//! Phantoms use unit spacing and a zero origin, so voxel indices are physical
//! coordinates. Shapes are centered at `(n - 1) / 2` along every axis.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::volume::{Grid3, LabeledVolume};

const MARGIN: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Tube around a line parallel to `axis`, open at both ends.
    CylinderShell {
        r_in: f64,
        r_out: f64,
        axis: Axis,
    },
    SphereShell {
        r_in: f64,
        r_out: f64,
    },
    /// Tube around a circle of radius `major` lying in the central z-plane.
    TorusShell {
        major: f64,
        r_in: f64,
        r_out: f64,
        axis: Axis,
    },
    /// Layer `thickness` voxels thick, normal to `axis`, spanning the other two.
    Slab {
        thickness: usize,
        axis: Axis,
    },
}

/// Half-open voxel box `[lo, hi)` forced to background.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HoleWindow {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl HoleWindow {
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x, y, z];
        (0..3).all(|a| p[a] >= self.lo[a] && p[a] < self.hi[a])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub shape: Shape,
    pub dims: [usize; 3],
    pub holes: Vec<HoleWindow>,
}

/// The analytic mid-surface of a phantom.
#[derive(Clone, Debug, PartialEq)]
pub enum MidSurface {
    Cylinder { center: [f64; 3], axis: Axis, radius: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    Torus { center: [f64; 3], axis: Axis, major: f64, minor: f64 },
    Plane { axis: Axis, offset: f64 },
}

impl MidSurface {
    /// Euclidean distance from `p` to the mid-surface.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        match *self {
            MidSurface::Cylinder { center, axis, radius } => {
                let a = axis.index();
                let r2: f64 = (0..3).filter(|&k| k != a).map(|k| (p[k] - center[k]).powi(2)).sum();
                (r2.sqrt() - radius).abs()
            }
            MidSurface::Sphere { center, radius } => {
                let r2: f64 = (0..3).map(|k| (p[k] - center[k]).powi(2)).sum();
                (r2.sqrt() - radius).abs()
            }
            MidSurface::Torus { center, axis, major, minor } => {
                (torus_tube_distance(p, center, axis, major) - minor).abs()
            }
            MidSurface::Plane { axis, offset } => (p[axis.index()] - offset).abs(),
        }
    }
}

/// Distance from `p` to the core circle of a torus centered at `c` whose
/// symmetry axis is parallel to `axis`.
fn torus_tube_distance(p: [f64; 3], c: [f64; 3], axis: Axis, major: f64) -> f64 {
    let a = axis.index();
    let rho = (0..3).filter(|&k| k != a).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>().sqrt();
    ((rho - major).powi(2) + (p[a] - c[a]).powi(2)).sqrt()
}

pub struct Phantom {
    pub volume: LabeledVolume,
    pub mid_surface: MidSurface,
}

impl PhantomSpec {
    pub fn new(shape: Shape, dims: [usize; 3]) -> Self {
        Self { shape, dims, holes: Vec::new() }
    }

    pub fn with_hole(mut self, lo: [usize; 3], hi: [usize; 3]) -> Self {
        self.holes.push(HoleWindow { lo, hi });
        self
    }

    fn center(&self) -> [f64; 3] {
        self.dims.map(|n| (n as f64 - 1.0) / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPhantom(msg));
        if self.dims.contains(&0) {
            return bad(format!("dims {:?} must be positive", self.dims));
        }
        let c = self.center();
        let half = |a: usize| c[a] - MARGIN;
        let check_radii = |r_in: f64, r_out: f64| -> Result<()> {
            if !(r_in >= 0.0 && r_in < r_out) {
                return Err(Error::InvalidPhantom(format!("need 0 <= r_in < r_out, got {r_in} / {r_out}")));
            }
            Ok(())
        };
        match self.shape {
            Shape::CylinderShell { r_in, r_out, axis } => {
                check_radii(r_in, r_out)?;
                let a = axis.index();
                for k in (0..3).filter(|&k| k != a) {
                    if r_out > half(k) {
                        return bad(format!("cylinder r_out {r_out} leaves less than 2 voxels margin on axis {k}"));
                    }
                }
                if self.dims[a] < 5 {
                    return bad("cylinder needs at least 5 voxels along its axis".into());
                }
            }
            Shape::SphereShell { r_in, r_out } => {
                check_radii(r_in, r_out)?;
                if (0..3).any(|k| r_out > half(k)) {
                    return bad(format!("sphere r_out {r_out} leaves less than 2 voxels margin"));
                }
            }
            Shape::TorusShell { major, r_in, r_out, axis } => {
                check_radii(r_in, r_out)?;
                if major <= r_out {
                    return bad(format!("torus major radius {major} must exceed r_out {r_out}"));
                }
                let a = axis.index();
                if (0..3).filter(|&k| k != a).any(|k| major + r_out > half(k)) || r_out > half(a) {
                    return bad("torus leaves less than 2 voxels margin".into());
                }
            }
            Shape::Slab { thickness, axis } => {
                if thickness == 0 || thickness + 2 * MARGIN as usize > self.dims[axis.index()] {
                    return bad(format!("slab thickness {thickness} does not fit with 2 voxels margin"));
                }
            }
        }
        for h in &self.holes {
            if (0..3).any(|a| h.lo[a] >= h.hi[a] || h.hi[a] > self.dims[a]) {
                return bad(format!("hole window {:?}..{:?} is empty or outside dims", h.lo, h.hi));
            }
        }
        Ok(())
    }

    /// Shell membership of a voxel center, ignoring hole windows.
    fn in_shell(&self, x: usize, y: usize, z: usize) -> bool {
        let c = self.center();
        let p = [x as f64, y as f64, z as f64];
        match self.shape {
            Shape::CylinderShell { r_in, r_out, axis } => {
                let a = axis.index();
                let along = p[a];
                if along < MARGIN || along > self.dims[a] as f64 - 1.0 - MARGIN {
                    return false;
                }
                let r = (0..3).filter(|&k| k != a).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>().sqrt();
                r_in <= r && r <= r_out
            }
            Shape::SphereShell { r_in, r_out } => {
                let r = (0..3).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>().sqrt();
                r_in <= r && r <= r_out
            }
            Shape::TorusShell { major, r_in, r_out, axis } => {
                let d = torus_tube_distance(p, c, axis, major);
                r_in <= d && d <= r_out
            }
            Shape::Slab { thickness, axis } => {
                let a = axis.index();
                let lo = (self.dims[a] - thickness) / 2;
                let i = [x, y, z][a];
                i >= lo && i < lo + thickness
            }
        }
    }

    pub fn mid_surface(&self) -> MidSurface {
        let center = self.center();
        match self.shape {
            Shape::CylinderShell { r_in, r_out, axis } => {
                MidSurface::Cylinder { center, axis, radius: 0.5 * (r_in + r_out) }
            }
            Shape::SphereShell { r_in, r_out } => MidSurface::Sphere { center, radius: 0.5 * (r_in + r_out) },
            Shape::TorusShell { major, r_in, r_out, axis } => {
                MidSurface::Torus { center, axis, major, minor: 0.5 * (r_in + r_out) }
            }
            Shape::Slab { thickness, axis } => {
                let lo = (self.dims[axis.index()] - thickness) / 2;
                MidSurface::Plane { axis, offset: lo as f64 + (thickness as f64 - 1.0) / 2.0 }
            }
        }
    }
}

/// Rasterizes `spec`: label 1 iff the voxel center lies in the shell and
/// outside every hole window.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let grid = Grid3::isotropic(spec.dims);
    let mut volume = LabeledVolume::zeros(grid);
    for z in 0..spec.dims[2] {
        for y in 0..spec.dims[1] {
            for x in 0..spec.dims[0] {
                if spec.in_shell(x, y, z) && !spec.holes.iter().any(|h| h.contains(x, y, z)) {
                    volume.set(x, y, z, 1);
                }
            }
        }
    }
    Ok(Phantom { volume, mid_surface: spec.mid_surface() })
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(Error::InvalidPhantom(format!("unknown axis '{s}'"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// Parses `shape:key=value,...`, e.g. `cylinder:r_in=10,r_out=14,dims=64`.
///
/// Keys: `r_in`, `r_out`, `major` (torus), `thickness` (slab), `axis`
/// (cylinder/slab/torus), `dims` (`N` or `NxMxK`) and any number of
/// `hole=x0:x1:y0:y1:z0:z1` half-open windows.
impl FromStr for PhantomSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidPhantom(msg);
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut r_in = None;
        let mut r_out = None;
        let mut major = None;
        let mut thickness = None;
        let mut axis = Axis::Z;
        let mut dims = [64usize; 3];
        let mut holes = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{item}'")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("'{key}' expects a number, got '{v}'")));
            match key {
                "r_in" => r_in = Some(num(value)?),
                "r_out" => r_out = Some(num(value)?),
                "major" => major = Some(num(value)?),
                "thickness" => {
                    thickness = Some(value.parse::<usize>().map_err(|_| bad(format!("bad thickness '{value}'")))?)
                }
                "axis" => axis = value.parse()?,
                "dims" => {
                    let parts: Vec<usize> = value
                        .split('x')
                        .map(|p| p.parse::<usize>().map_err(|_| bad(format!("bad dims '{value}'"))))
                        .collect::<Result<_>>()?;
                    dims = match parts.as_slice() {
                        [n] => [*n; 3],
                        [a, b, c] => [*a, *b, *c],
                        _ => return Err(bad(format!("bad dims '{value}'"))),
                    };
                }
                "hole" => {
                    let v: Vec<usize> = value
                        .split(':')
                        .map(|p| p.parse::<usize>().map_err(|_| bad(format!("bad hole '{value}'"))))
                        .collect::<Result<_>>()?;
                    if v.len() != 6 {
                        return Err(bad(format!("hole needs x0:x1:y0:y1:z0:z1, got '{value}'")));
                    }
                    holes.push(HoleWindow { lo: [v[0], v[2], v[4]], hi: [v[1], v[3], v[5]] });
                }
                _ => return Err(bad(format!("unknown phantom parameter '{key}'"))),
            }
        }
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| bad(format!("{kind} requires '{name}'")));
        let shape = match kind {
            "cylinder" => Shape::CylinderShell { r_in: need(r_in, "r_in")?, r_out: need(r_out, "r_out")?, axis },
            "sphere" => Shape::SphereShell { r_in: need(r_in, "r_in")?, r_out: need(r_out, "r_out")? },
            "torus" => Shape::TorusShell {
                major: need(major, "major")?,
                r_in: need(r_in, "r_in")?,
                r_out: need(r_out, "r_out")?,
                axis,
            },
            "slab" => {
                Shape::Slab { thickness: thickness.ok_or_else(|| bad("slab requires 'thickness'".into()))?, axis }
            }
            other => return Err(bad(format!("unknown phantom shape '{other}'"))),
        };
        let spec = PhantomSpec { shape, dims, holes };
        spec.validate()?;
        Ok(spec)
    }
}
