//! Riemann-sphere arithmetic.
//!
//! Points of the sphere are [`ExtComplex`] values. Distances are chordal,
//! measured on the unit sphere in R^3 via stereographic projection, so the
//! whole sphere has diameter 2. Areas are normalized so the sphere has total
//! area 1.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Chordal diameter of the sphere.
pub const SPHERE_DIAMETER: f64 = 2.0;

/// Finite points with modulus above this are treated as infinity in
/// containment tests. Arithmetic never uses it.
pub const INFINITY_MODULUS: f64 = 1e8;

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub const ZERO: ExtComplex = ExtComplex::Finite(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Self {
        ExtComplex::Finite(Complex64::new(re, im))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    /// Finite value, if any.
    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }

    /// Containment-test view: huge finite values count as infinity.
    pub fn is_effectively_infinite(&self) -> bool {
        match *self {
            ExtComplex::Finite(z) => z.norm().is_nan() || z.norm() > INFINITY_MODULUS,
            ExtComplex::Infinity => true,
        }
    }

    /// The antipodal point `-1/conj(z)`.
    pub fn antipode(&self) -> ExtComplex {
        match *self {
            ExtComplex::Infinity => ExtComplex::ZERO,
            ExtComplex::Finite(z) if z == Complex64::new(0.0, 0.0) => ExtComplex::Infinity,
            ExtComplex::Finite(z) => ExtComplex::Finite(-z.conj().inv()),
        }
    }

    /// Stereographic image on the unit sphere (north pole = infinity).
    pub fn to_unit_sphere(&self) -> [f64; 3] {
        match *self {
            ExtComplex::Infinity => [0.0, 0.0, 1.0],
            ExtComplex::Finite(z) => {
                let r2 = z.norm_sqr();
                if !r2.is_finite() {
                    return [0.0, 0.0, 1.0];
                }
                let d = 1.0 + r2;
                [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
            }
        }
    }
}

impl From<Complex64> for ExtComplex {
    fn from(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            ExtComplex::Finite(z)
        } else {
            ExtComplex::Infinity
        }
    }
}

impl From<f64> for ExtComplex {
    fn from(x: f64) -> Self {
        ExtComplex::from(Complex64::new(x, 0.0))
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtComplex::Finite(z) => write!(f, "{}", z),
            ExtComplex::Infinity => f.write_str("inf"),
        }
    }
}

/// Chordal distance on the sphere of diameter 2.
pub fn chordal_distance(a: ExtComplex, b: ExtComplex) -> f64 {
    match (a, b) {
        (ExtComplex::Infinity, ExtComplex::Infinity) => 0.0,
        (ExtComplex::Finite(z), ExtComplex::Infinity) | (ExtComplex::Infinity, ExtComplex::Finite(z)) => {
            let r2 = z.norm_sqr();
            if r2.is_finite() {
                2.0 / (1.0 + r2).sqrt()
            } else {
                0.0
            }
        }
        (ExtComplex::Finite(z), ExtComplex::Finite(w)) => {
            let (nz, nw) = (z.norm(), w.norm());
            // Far from the origin work in the 1/z chart to avoid overflow.
            if nz > 1.0 && nw > 1.0 {
                let (zi, wi) = (z.inv(), w.inv());
                let d = 2.0 * (zi - wi).norm() / ((1.0 + zi.norm_sqr()) * (1.0 + wi.norm_sqr())).sqrt();
                return d.min(SPHERE_DIAMETER);
            }
            let d = 2.0 * (z - w).norm() / ((1.0 + nz * nz) * (1.0 + nw * nw)).sqrt();
            if d.is_finite() {
                d.min(SPHERE_DIAMETER)
            } else {
                // one of the points overflowed; compare on the sphere
                euclid3(a.to_unit_sphere(), b.to_unit_sphere())
            }
        }
    }
}

fn euclid3(p: [f64; 3], q: [f64; 3]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

/// Density of normalized spherical area with respect to planar Lebesgue
/// measure at a finite point. Integrates to 1 over the plane.
pub fn area_density(z: Complex64) -> f64 {
    let d = 1.0 + z.norm_sqr();
    1.0 / (std::f64::consts::PI * d * d)
}

/// Hash-bucketed index of sphere points for nearest-neighbour and radius
/// queries in the chordal metric.
#[derive(Clone, Debug)]
pub struct SphereIndex {
    cell: f64,
    points: Vec<[f64; 3]>,
    buckets: HashMap<[i32; 3], Vec<usize>>,
}

impl SphereIndex {
    /// Builds an index whose bucket side is `cell` (chordal units).
    pub fn new(points: &[ExtComplex], cell: f64) -> Self {
        let cell = cell.clamp(1e-9, SPHERE_DIAMETER);
        let pts: Vec<[f64; 3]> = points.iter().map(|p| p.to_unit_sphere()).collect();
        let mut buckets: HashMap<[i32; 3], Vec<usize>> = HashMap::new();
        for (i, p) in pts.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        SphereIndex { cell, points: pts, buckets }
    }

    /// Chooses a bucket side from the point count, assuming points spread
    /// roughly along curves.
    pub fn auto(points: &[ExtComplex]) -> Self {
        let n = points.len().max(1) as f64;
        Self::new(points, (4.0 / n).max(1e-6))
    }

    fn key(p: &[f64; 3], cell: f64) -> [i32; 3] {
        [
            (p[0] / cell).floor() as i32,
            (p[1] / cell).floor() as i32,
            (p[2] / cell).floor() as i32,
        ]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Chordal distance from `q` to the nearest indexed point, skipping the
    /// point with index `skip`.
    pub fn nearest_distance(&self, q: ExtComplex, skip: Option<usize>) -> Option<f64> {
        if self.points.is_empty() || (self.points.len() == 1 && skip == Some(0)) {
            return None;
        }
        let qp = q.to_unit_sphere();
        let k = Self::key(&qp, self.cell);
        let mut best = f64::INFINITY;
        let mut ring: i32 = 0;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            for &i in ids {
                                if Some(i) == skip {
                                    continue;
                                }
                                best = best.min(euclid3(qp, self.points[i]));
                            }
                        }
                    }
                }
            }
            // Everything within `ring * cell` has been examined.
            if best <= ring as f64 * self.cell {
                break;
            }
            if ring >= 6 {
                // sparse neighbourhood: a linear scan beats growing shells
                best = self
                    .points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != skip)
                    .map(|(_, p)| euclid3(qp, *p))
                    .fold(f64::INFINITY, f64::min);
                break;
            }
            ring += 1;
        }
        best.is_finite().then_some(best)
    }

    /// Whether any indexed point lies within chordal distance `r` of `q`.
    pub fn any_within(&self, q: ExtComplex, r: f64) -> bool {
        self.nearest_distance(q, None).is_some_and(|d| d <= r)
    }
}
