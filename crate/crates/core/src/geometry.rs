//! Closed planar polylines and their arc-length parametrizations.
//!
//! A [`Curve`] is a list of vertices closed by an implicit edge from the last
//! vertex back to the first. [`parametrize`] turns it into a uniformly spaced
//! arc-length grid that starts at the base point and runs counterclockwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Smallest grid accepted by [`parametrize`].
pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    points: Vec<Point>,
    base_index: usize,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn lerp(a: Point, b: Point, s: f64) -> Point {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

impl Curve {
    /// Builds a curve, rejecting fewer than three points, non-finite
    /// coordinates and repeated consecutive points (the closing edge included).
    pub fn new(points: Vec<Point>, base_index: usize) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::DegenerateCurve(format!(
                "need at least 3 points, got {n}"
            )));
        }
        if base_index >= n {
            return Err(Error::DegenerateCurve(format!(
                "base index {base_index} out of range for {n} points"
            )));
        }
        if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::DegenerateCurve(format!("point {i} is not finite")));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if points[i] == points[j] {
                return Err(Error::DegenerateCurve(format!(
                    "points {i} and {j} coincide"
                )));
            }
        }
        Ok(Self { points, base_index })
    }

    /// Like [`Curve::new`] but also runs the O(n²) simplicity check.
    pub fn new_strict(points: Vec<Point>, base_index: usize) -> Result<Self> {
        let c = Self::new(points, base_index)?;
        c.check_simple()?;
        Ok(c)
    }

    /// Regular `n`-gon inscribed in the circle of the given radius, listed
    /// counterclockwise from angle 0.
    pub fn regular_polygon(n: usize, radius: f64, center: Point) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            })
            .collect();
        Self::new(pts, 0)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    pub fn base_point(&self) -> Point {
        self.points[self.base_index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of segment lengths including the closing edge.
    pub fn arc_length(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| dist(self.points[i], self.points[(i + 1) % n]))
            .sum()
    }

    /// Twice the signed area (shoelace sum).
    fn shoelace(&self) -> f64 {
        let n = self.points.len();
        // center on the first point to reduce cancellation
        let o = self.points[0];
        (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                (a[0] - o[0]) * (b[1] - o[1]) - (b[0] - o[0]) * (a[1] - o[1])
            })
            .sum()
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.shoelace()
    }

    /// Counterclockwise curves are positive.
    pub fn orientation(&self) -> Result<Orientation> {
        let a = self.shoelace();
        let l = self.arc_length();
        if a.abs() <= 1e-14 * l * l {
            return Err(Error::ZeroArea);
        }
        Ok(if a > 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        })
    }

    /// Same vertices in the opposite order; the base point is kept.
    pub fn reversed(&self) -> Self {
        let n = self.points.len();
        let points: Vec<Point> = self.points.iter().rev().copied().collect();
        Self {
            points,
            base_index: n - 1 - self.base_index,
        }
    }

    /// Applies `p ↦ R(angle)·p + shift` to every vertex.
    pub fn rigid_motion(&self, angle: f64, shift: Point) -> Self {
        let (s, c) = angle.sin_cos();
        let points = self
            .points
            .iter()
            .map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]])
            .collect();
        Self {
            points,
            base_index: self.base_index,
        }
    }

    /// Applies `p ↦ factor·p`.
    pub fn scaled(&self, factor: f64) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| [factor * p[0], factor * p[1]])
            .collect();
        Self {
            points,
            base_index: self.base_index,
        }
    }

    /// Errors if two edges of the polyline meet anywhere other than at the
    /// shared vertex of neighbouring edges.
    pub fn check_simple(&self) -> Result<()> {
        let n = self.points.len();
        for i in 0..n {
            let (a, b) = (self.points[i], self.points[(i + 1) % n]);
            for j in (i + 1)..n {
                let (c, d) = (self.points[j], self.points[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // neighbours share one vertex; they must not fold back onto each other
                    let shared_first = j == i + 1;
                    let (p, q, r) = if shared_first { (a, b, d) } else { (c, a, b) };
                    if cross(p, q, r) == 0.0 && dot_dir(p, q, r) < 0.0 {
                        return Err(Error::SelfIntersection(i, j));
                    }
                } else if segments_intersect(a, b, c, d) {
                    return Err(Error::SelfIntersection(i, j));
                }
            }
        }
        Ok(())
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

// direction of (q - p) dotted with (r - q): negative means r folds back toward p
fn dot_dir(p: Point, q: Point, r: Point) -> f64 {
    (q[0] - p[0]) * (r[0] - q[0]) + (q[1] - p[1]) * (r[1] - q[1])
}

fn on_segment(p: Point, q: Point, r: Point) -> bool {
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Uniform arc-length sampling of a curve, traversed counterclockwise from its
/// base point.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcLengthParam {
    length: f64,
    /// Polygon vertices in traversal order, starting at the base point.
    vertices: Vec<Point>,
    /// `cumulative[i]` is the arc length from the base point to `vertices[i]`;
    /// one extra trailing entry holds the total length.
    cumulative: Vec<f64>,
    samples: Vec<Point>,
    tangents: Vec<Point>,
    input_orientation: Orientation,
}

/// Samples `c` at `m` uniformly spaced arc-length abscissae `k·L/m`.
///
/// Negatively oriented input is traversed in reverse so that the result always
/// runs counterclockwise. Positions are linear interpolations along the
/// polyline; tangents are normalized periodic central differences of the
/// samples.
pub fn parametrize(c: &Curve, m: usize) -> Result<ArcLengthParam> {
    if m < MIN_GRID {
        return Err(Error::GridTooCoarse { got: m, min: MIN_GRID });
    }
    let orientation = c.orientation()?;
    let n = c.len();
    let b = c.base_index();
    let vertices: Vec<Point> = match orientation {
        Orientation::Positive => (0..n).map(|i| c.points()[(b + i) % n]).collect(),
        Orientation::Negative => (0..n).map(|i| c.points()[(b + n - i) % n]).collect(),
    };
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for i in 0..n {
        acc += dist(vertices[i], vertices[(i + 1) % n]);
        cumulative.push(acc);
    }
    let length = acc;

    let mut param = ArcLengthParam {
        length,
        vertices,
        cumulative,
        samples: Vec::with_capacity(m),
        tangents: Vec::with_capacity(m),
        input_orientation: orientation,
    };
    let step = length / m as f64;
    param.samples = (0..m).map(|k| param.point_at(k as f64 * step)).collect();
    param.samples[0] = param.vertices[0];
    param.tangents = (0..m)
        .map(|k| {
            let a = param.samples[(k + m - 1) % m];
            let z = param.samples[(k + 1) % m];
            let (dx, dy) = (z[0] - a[0], z[1] - a[1]);
            let r = dx.hypot(dy);
            [dx / r, dy / r]
        })
        .collect();
    Ok(param)
}

impl ArcLengthParam {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.samples.len() as f64
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn tangents(&self) -> &[Point] {
        &self.tangents
    }

    /// Arc-length abscissae `t_k = k·L/m`.
    pub fn abscissae(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.samples.len()).map(|k| k as f64 * h).collect()
    }

    pub fn base_point(&self) -> Point {
        self.vertices[0]
    }

    /// Orientation of the curve as it was given, before any reversal.
    pub fn input_orientation(&self) -> Orientation {
        self.input_orientation
    }

    /// Position at arc length `s` from the base point, counterclockwise.
    /// `s` is taken modulo the total length, so `point_at(L)` is the base point.
    pub fn point_at(&self, s: f64) -> Point {
        let mut s = s.rem_euclid(self.length);
        if s >= self.length {
            s = 0.0;
        }
        let n = self.vertices.len();
        // last index with cumulative[i] <= s
        let i = match self.cumulative[..n].binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        let frac = (s - self.cumulative[i]) / seg;
        lerp(self.vertices[i], self.vertices[(i + 1) % n], frac)
    }
}
