//! Planar primitives shared by every other module: points, lines in
//! (angle, offset) coordinates carrying the scaled Haar measure, convex
//! polygons, and the tolerance-governed predicates.
//!
//! Lines are parametrized as `(theta, p)` with `theta` in `[0, pi)` the
//! direction angle and `p` the signed offset along the normal
//! `(-sin theta, cos theta)`. The measure element is `(1/pi) dtheta dp`,
//! scaled so that the mass of lines hitting a convex set equals its
//! perimeter divided by pi.

use crate::real::Real;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("polygon is not convex")]
    NotConvex,
    #[error("zero-length direction vector")]
    ZeroDirection,
    #[error("points coincide within tolerance")]
    CoincidentPoints,
}

/// A point of the plane, also used as a 2-vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Real> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point<S>) -> S {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product `self x o`.
    pub fn cross(self, o: Point<S>) -> S {
        self.x * o.y - self.y * o.x
    }

    pub fn sub(self, o: Point<S>) -> Point<S> {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point<S>) -> Point<S> {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: S) -> Point<S> {
        Point::new(self.x * k, self.y * k)
    }

    pub fn norm(self) -> S {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Point<S>) -> S {
        self.sub(o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Absolute tolerances used by every geometric predicate.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance<S> {
    /// Length tolerance (same units as coordinates).
    pub eps_len: S,
    /// Angle tolerance in radians.
    pub eps_ang: S,
}

impl<S: Real> Tolerance<S> {
    pub fn new(eps_len: S, eps_ang: S) -> Self {
        assert!(
            eps_len > S::zero() && eps_ang > S::zero(),
            "tolerances must be positive"
        );
        Tolerance { eps_len, eps_ang }
    }

    /// Default tolerances scaled to a domain: `1e-9 * diameter` for lengths
    /// and `1e-9` radians for angles, widened for scalar types whose machine
    /// epsilon cannot resolve that (f32).
    pub fn for_domain(domain: &Polygon<S>) -> Self {
        let rel = S::of(1e-9).max(S::epsilon() * S::of(100.0));
        Tolerance::new(rel * domain.diameter(), rel)
    }
}

/// An undirected line in (direction angle, signed offset) coordinates.
///
/// `theta` lies in `[0, pi)`; the line is `{ q : n . q = p }` with normal
/// `n = (-sin theta, cos theta)` and direction `d = (cos theta, sin theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line<S> {
    pub theta: S,
    pub p: S,
}

impl<S: Real> Line<S> {
    pub fn new(theta: S, p: S) -> Self {
        let theta = normalize_angle(theta);
        Line { theta, p }
    }

    /// Supporting line through two distinct points.
    pub fn from_points(a: Point<S>, b: Point<S>, tol: &Tolerance<S>) -> Result<Self, GeomError> {
        let d = b.sub(a);
        if d.norm() <= tol.eps_len {
            return Err(GeomError::CoincidentPoints);
        }
        let theta = normalize_angle(d.y.atan2(d.x));
        let line = Line {
            theta,
            p: S::zero(),
        };
        let p = line.normal().dot(a);
        Ok(Line { theta, p })
    }

    /// Unit direction vector `(cos theta, sin theta)`.
    pub fn direction(self) -> Point<S> {
        Point::new(self.theta.cos(), self.theta.sin())
    }

    /// Unit normal vector `(-sin theta, cos theta)`.
    pub fn normal(self) -> Point<S> {
        Point::new(-self.theta.sin(), self.theta.cos())
    }

    /// Foot of the perpendicular from the origin.
    pub fn base_point(self) -> Point<S> {
        self.normal().scale(self.p)
    }

    /// Point at signed parameter `t` along the direction.
    pub fn point_at(self, t: S) -> Point<S> {
        self.base_point().add(self.direction().scale(t))
    }

    /// Signed parameter of the orthogonal projection of `q`.
    pub fn param_of(self, q: Point<S>) -> S {
        self.direction().dot(q)
    }

    /// Signed distance of `q` from the line (positive on the normal side).
    pub fn signed_distance(self, q: Point<S>) -> S {
        self.normal().dot(q) - self.p
    }

    /// Whether two parametrizations denote the same geometric line, within
    /// tolerance. Handles the wrap of `theta` at `pi`, where the normal and
    /// hence `p` change sign.
    pub fn approx_eq(self, other: Line<S>, tol: &Tolerance<S>) -> bool {
        let dt = (self.theta - other.theta).abs();
        let pi = S::PI();
        if dt <= tol.eps_ang {
            (self.p - other.p).abs() <= tol.eps_len
        } else if dt >= pi - tol.eps_ang {
            (self.p + other.p).abs() <= tol.eps_len
        } else {
            false
        }
    }

    /// Intersection point with another line; `None` for (near-)parallel pairs.
    pub fn intersection(self, other: Line<S>, tol: &Tolerance<S>) -> Option<Point<S>> {
        let d1 = self.direction();
        let d2 = other.direction();
        let denom = d1.cross(d2);
        if denom.abs() <= tol.eps_ang {
            return None;
        }
        // Solve base1 + t d1 with n2 . q = p2.
        let n2 = other.normal();
        let t = (other.p - n2.dot(self.base_point())) / n2.dot(d1);
        Some(self.point_at(t))
    }
}

fn normalize_angle<S: Real>(theta: S) -> S {
    let pi = S::PI();
    let mut t = theta % pi;
    if t < S::zero() {
        t += pi;
    }
    if t >= pi {
        t -= pi;
    }
    t
}

/// A simple polygon with counter-clockwise vertex order. Domains must be
/// convex with strictly convex corners; cell outlines built internally may
/// carry collinear (flat) vertices.
#[derive(Clone, Debug)]
pub struct Polygon<S> {
    vertices: Vec<Point<S>>,
}

impl<S: Real> Polygon<S> {
    /// Validating constructor for domains: at least 3 finite vertices,
    /// convex, strictly convex corners, positive area. Clockwise input is
    /// reversed to counter-clockwise.
    pub fn convex_domain(mut vertices: Vec<Point<S>>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::DegeneratePolygon("fewer than 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::DegeneratePolygon("non-finite coordinate".into()));
        }
        let area2 = signed_area_2(&vertices);
        if area2 < S::zero() {
            vertices.reverse();
        }
        let poly = Polygon { vertices };
        if poly.area() <= S::epsilon() * poly.diameter() * poly.diameter() {
            return Err(GeomError::DegeneratePolygon("area is not positive".into()));
        }
        let n = poly.vertices.len();
        for i in 0..n {
            let a = poly.vertices[i];
            let b = poly.vertices[(i + 1) % n];
            let c = poly.vertices[(i + 2) % n];
            let turn = b.sub(a).cross(c.sub(b));
            if turn <= S::zero() {
                return Err(GeomError::NotConvex);
            }
        }
        Ok(poly)
    }

    /// Build without validation; used for cell outlines which may contain
    /// collinear vertices.
    pub(crate) fn from_cycle(vertices: Vec<Point<S>>) -> Self {
        Polygon { vertices }
    }

    pub fn vertices(&self) -> &[Point<S>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> S {
        signed_area_2(&self.vertices) / S::of(2.0)
    }

    pub fn perimeter(&self) -> S {
        let n = self.vertices.len();
        let mut acc = S::zero();
        for i in 0..n {
            acc += self.vertices[i].dist(self.vertices[(i + 1) % n]);
        }
        acc
    }

    pub fn centroid(&self) -> Point<S> {
        // Area-weighted centroid; falls back to the vertex mean only for
        // degenerate outlines, which validated domains exclude.
        let n = self.vertices.len();
        let mut cx = S::zero();
        let mut cy = S::zero();
        let mut a2 = S::zero();
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a2 += w;
        }
        if a2.abs() <= S::epsilon() {
            let k = S::of(1.0 / n as f64);
            let mut m = Point::new(S::zero(), S::zero());
            for v in &self.vertices {
                m = m.add(*v);
            }
            return m.scale(k);
        }
        let k = S::one() / (S::of(3.0) * a2);
        Point::new(cx * k, cy * k)
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self) -> S {
        let mut best = S::zero();
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(a.dist(*b));
            }
        }
        best
    }

    /// Radius of a disk centered at `c` covering the polygon.
    pub fn covering_radius(&self, c: Point<S>) -> S {
        let mut best = S::zero();
        for v in &self.vertices {
            best = best.max(c.dist(*v));
        }
        best
    }

    pub fn contains(&self, q: Point<S>, tol: &Tolerance<S>) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if b.sub(a).cross(q.sub(a)) < -tol.eps_len * b.sub(a).norm() {
                return false;
            }
        }
        true
    }
}

/// Total scaled-Haar mass of lines hitting a convex polygon:
/// `perimeter / pi`. By Cauchy's formula this matches the integral of the
/// width over directions, divided by pi.
pub fn haar_mass_hitting<S: Real>(poly: &Polygon<S>) -> Result<S, GeomError> {
    let d = poly.diameter();
    if poly.area() <= S::epsilon() * d * d {
        return Err(GeomError::DegeneratePolygon("area is not positive".into()));
    }
    Ok(poly.perimeter() / S::PI())
}

/// Closed chord `line ∩ poly`, endpoints ordered along the line direction.
/// `None` when the intersection is empty or reduces to a tangent point of
/// length at most `eps_len`.
pub fn chord<S: Real>(
    line: Line<S>,
    poly: &Polygon<S>,
    tol: &Tolerance<S>,
) -> Option<(Point<S>, Point<S>)> {
    // Parametric clipping of q(t) = base + t*dir against the CCW half-planes.
    let dir = line.direction();
    let base = line.base_point();
    let n = poly.vertices().len();
    let mut t_lo = S::neg_infinity();
    let mut t_hi = S::infinity();
    for i in 0..n {
        let a = poly.vertices()[i];
        let b = poly.vertices()[(i + 1) % n];
        let e = b.sub(a);
        let e_len = e.norm();
        if e_len <= S::epsilon() {
            continue;
        }
        // Inside means cross(e, q - a) >= 0; linear in t.
        let denom = e.cross(dir);
        let num = e.cross(base.sub(a));
        if denom.abs() <= tol.eps_ang * e_len {
            // Line parallel to this side: either fully inside or fully out.
            if num < -tol.eps_len * e_len {
                return None;
            }
            continue;
        }
        let t = -num / denom;
        if denom > S::zero() {
            t_lo = t_lo.max(t);
        } else {
            t_hi = t_hi.min(t);
        }
    }
    if !(t_hi - t_lo > tol.eps_len) {
        return None;
    }
    Some((line.point_at(t_lo), line.point_at(t_hi)))
}

/// Acute angle in `[0, pi/2]` between two undirected directions.
pub fn acute_angle<S: Real>(d1: Point<S>, d2: Point<S>) -> Result<S, GeomError> {
    if d1.norm() <= S::epsilon() || d2.norm() <= S::epsilon() {
        return Err(GeomError::ZeroDirection);
    }
    Ok(d1.cross(d2).abs().atan2(d1.dot(d2).abs()))
}

/// Whether `c` lies within `eps_len` of the line through `a` and `b`.
pub fn collinear<S: Real>(
    a: Point<S>,
    b: Point<S>,
    c: Point<S>,
    tol: &Tolerance<S>,
) -> Result<bool, GeomError> {
    let ab = b.sub(a);
    let len = ab.norm();
    if len <= tol.eps_len {
        return Err(GeomError::CoincidentPoints);
    }
    Ok(ab.cross(c.sub(a)).abs() / len <= tol.eps_len)
}

/// Distance from `q` to the closed segment `[a, b]`.
pub fn dist_point_segment<S: Real>(q: Point<S>, a: Point<S>, b: Point<S>) -> S {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 <= S::epsilon() {
        return q.dist(a);
    }
    let t = ab.dot(q.sub(a)) / len2;
    let t = t.max(S::zero()).min(S::one());
    q.dist(a.add(ab.scale(t)))
}

fn signed_area_2<S: Real>(vs: &[Point<S>]) -> S {
    let n = vs.len();
    let mut acc = S::zero();
    for i in 0..n {
        acc += vs[i].cross(vs[(i + 1) % n]);
    }
    acc
}

/// Axis-aligned unit square `[0,1]^2`, the default test domain.
pub fn unit_square<S: Real>() -> Polygon<S> {
    Polygon::convex_domain(vec![
        Point::new(S::zero(), S::zero()),
        Point::new(S::one(), S::zero()),
        Point::new(S::one(), S::one()),
        Point::new(S::zero(), S::one()),
    ])
    .expect("unit square is a valid domain")
}
