//! Exact polygon primitives.
//!
//! Areas, centroids and second moments are integrated exactly over the
//! boundary (Green's theorem), so no quadrature error enters the covariance
//! spectrum even for extremely stretched elements.

mod kernel;
mod split;
mod triangulate;

pub use kernel::{chebyshev_center, star_kernel, StarKernel};
pub use split::{split_polygon_by_line, split_polygon_by_line_with_tol, CutEnd, PolygonSplit, SplitVertex};
pub use triangulate::{ear_clip, triangulate_polygon};

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Point2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Relative area below which an element counts as degenerate (scaled by h²).
pub const DEGENERATE_AREA_TOL: f64 = 1e-14;

/// Components below this magnitude are treated as zero when fixing the
/// sign of an eigenvector.
const SIGN_ZERO_TOL: f64 = 1e-14;

#[inline]
pub fn cross(a: &Point2, b: &Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counter-clockwise rotation by 90 degrees.
#[inline]
pub fn perp(a: &Point2) -> Point2 {
    Point2::new(-a.y, a.x)
}

#[inline]
fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    cross(&(b - a), &(c - a))
}

/// Area, centroid and central second moment of a polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub area: f64,
    pub centroid: Point2,
    /// `(1/|K|) ∫ (x - c)(x - c)ᵀ dx`
    pub second_moment: Mat2,
}

/// A simple, counter-clockwise polygon with cached moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    moments: Moments,
    diameter: f64,
}

impl Polygon {
    /// Builds a polygon from a counter-clockwise vertex loop.
    ///
    /// Fails if the loop has fewer than three vertices, repeats consecutive
    /// points, is clockwise, self-intersects or encloses (numerically) no area.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        Self::build(vertices, false)
    }

    /// Like [`Polygon::new`] but reverses clockwise loops instead of failing.
    pub fn from_unoriented(vertices: Vec<Point2>) -> Result<Self> {
        Self::build(vertices, true)
    }

    fn build(mut vertices: Vec<Point2>, reorient: bool) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("{n} vertices, need at least 3")));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite coordinate".into()));
        }
        for k in 0..n {
            if vertices[k] == vertices[(k + 1) % n] {
                return Err(Error::InvalidPolygon(format!("repeated consecutive vertex at {k}")));
            }
        }
        let diameter = diameter_of(&vertices);
        let signed = signed_area(&vertices);
        if signed.abs() <= DEGENERATE_AREA_TOL * diameter * diameter {
            return Err(Error::DegenerateElement(format!(
                "area {signed:e} is negligible for diameter {diameter:e}"
            )));
        }
        if signed < 0.0 {
            if reorient {
                vertices.reverse();
            } else {
                return Err(Error::InvalidPolygon("vertex loop is clockwise".into()));
            }
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidPolygon("boundary self-intersects".into()));
        }
        let moments = exact_moments(&vertices);
        Ok(Self { vertices, moments, diameter })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge `k` runs from vertex `k` to vertex `k + 1` (cyclically).
    pub fn edge(&self, k: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[k % n], self.vertices[(k + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        (0..self.len()).map(move |k| self.edge(k))
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn area(&self) -> f64 {
        self.moments.area
    }

    pub fn centroid(&self) -> Point2 {
        self.moments.centroid
    }

    pub fn covariance(&self) -> Mat2 {
        self.moments.second_moment
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn spectrum(&self) -> Result<CovarianceSpectrum> {
        covariance_spectrum(self)
    }

    pub fn reference_map(&self) -> Result<ReferenceMap> {
        reference_map(self)
    }

    /// Distance from `p` to the nearest boundary point.
    pub fn boundary_distance(&self, p: &Point2) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, &a, &b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Crossing-number point-in-polygon test. Points on the boundary may go
    /// either way; use [`Polygon::contains_strictly`] to exclude them.
    pub fn contains(&self, p: &Point2) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Inside and farther than `tol` from the boundary.
    pub fn contains_strictly(&self, p: &Point2, tol: f64) -> bool {
        self.contains(p) && self.boundary_distance(p) > tol
    }

    pub fn translated(&self, shift: &Point2) -> Polygon {
        let vertices = self.vertices.iter().map(|v| v + shift).collect();
        Polygon::new(vertices).expect("translation preserves validity")
    }

    /// Applies a linear map with positive determinant vertex-wise.
    pub fn transformed(&self, matrix: &Mat2) -> Result<Polygon> {
        let det = matrix.determinant();
        let vertices: Vec<Point2> = self.vertices.iter().map(|v| matrix * v).collect();
        if det > 0.0 {
            Polygon::new(vertices)
        } else {
            Polygon::from_unoriented(vertices)
        }
    }
}

pub fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let o = vertices[0];
    let mut twice = 0.0;
    for k in 1..n - 1 {
        twice += cross(&(vertices[k] - o), &(vertices[k + 1] - o));
    }
    0.5 * twice
}

fn diameter_of(vertices: &[Point2]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

pub(crate) fn segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let e = b - a;
    let len2 = e.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&e) / len2).clamp(0.0, 1.0);
    (p - (a + e * t)).norm()
}

fn segments_intersect(p1: &Point2, p2: &Point2, q1: &Point2, q2: &Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: &Point2, b: &Point2, c: &Point2, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// O(n²) simplicity check. Adjacent edges may be collinear (hanging nodes)
/// but must not fold back onto each other.
pub fn is_simple(vertices: &[Point2]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        // spike: next edge doubles back along this one
        if orient(&a, &b, &c) == 0.0 && (b - a).dot(&(c - b)) < 0.0 {
            return false;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let p = vertices[j];
            let q = vertices[(j + 1) % n];
            if segments_intersect(&a, &b, &p, &q) {
                return false;
            }
        }
    }
    true
}

/// Exact boundary integration of the polynomial moments up to degree two.
fn exact_moments(vertices: &[Point2]) -> Moments {
    let n = vertices.len();
    let origin = vertices[0];
    let (area, first) = first_moments(vertices, &origin);
    let centroid = origin + first / area;

    // second pass about the centroid keeps cancellation small
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for k in 0..n {
        let p = vertices[k] - centroid;
        let q = vertices[(k + 1) % n] - centroid;
        let c = p.x * q.y - q.x * p.y;
        sxx += (p.x * p.x + p.x * q.x + q.x * q.x) * c;
        syy += (p.y * p.y + p.y * q.y + q.y * q.y) * c;
        sxy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * c;
    }
    let cov = Mat2::new(sxx / 12.0, sxy / 24.0, sxy / 24.0, syy / 12.0) / area;
    Moments { area, centroid, second_moment: cov }
}

fn first_moments(vertices: &[Point2], origin: &Point2) -> (f64, Point2) {
    let n = vertices.len();
    let mut twice_area = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for k in 0..n {
        let p = vertices[k] - origin;
        let q = vertices[(k + 1) % n] - origin;
        let c = p.x * q.y - q.x * p.y;
        twice_area += c;
        sx += (p.x + q.x) * c;
        sy += (p.y + q.y) * c;
    }
    (0.5 * twice_area, Point2::new(sx, sy) / 6.0)
}

pub fn polygon_moments(polygon: &Polygon) -> Moments {
    polygon.moments()
}

/// Eigen decomposition of an element covariance matrix.
///
/// `lambda1 >= lambda2 > 0`; `u1` has its first nonzero component positive
/// and `u2` is `u1` rotated by +90°, so `U = [u1 u2]` is a proper rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub u1: Point2,
    pub u2: Point2,
    pub covariance: Mat2,
}

impl CovarianceSpectrum {
    pub fn ratio(&self) -> f64 {
        self.lambda1 / self.lambda2
    }

    /// Columns `u1`, `u2`.
    pub fn eigenvectors(&self) -> Mat2 {
        Mat2::from_columns(&[self.u1, self.u2])
    }

    pub fn lambdas(&self) -> [f64; 2] {
        [self.lambda1, self.lambda2]
    }
}

/// Closed-form eigen decomposition of a symmetric 2×2 matrix with the
/// canonical eigenvector orientation. Returns `(l1, l2, u1)` with `l1 >= l2`.
pub fn symmetric_eigen(m: &Mat2) -> (f64, f64, Point2) {
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let c = m[(1, 1)];
    let mean = 0.5 * (a + c);
    let half_gap = (0.5 * (a - c)).hypot(b);
    let l1 = mean + half_gap;
    // product form avoids cancellation for nearly singular matrices
    let det = a * c - b * b;
    let l2 = if l1 != 0.0 && l1.abs() > half_gap { det / l1 } else { mean - half_gap };
    let u1 = if half_gap == 0.0 {
        Point2::new(1.0, 0.0)
    } else {
        let theta = 0.5 * (2.0 * b).atan2(a - c);
        Point2::new(theta.cos(), theta.sin())
    };
    (l1, l2, canonical_sign(u1))
}

pub fn canonical_sign(u: Point2) -> Point2 {
    let first = if u.x.abs() > SIGN_ZERO_TOL { u.x } else { u.y };
    if first < 0.0 {
        -u
    } else {
        u
    }
}

pub fn covariance_spectrum(polygon: &Polygon) -> Result<CovarianceSpectrum> {
    let cov = polygon.covariance();
    let (_, _, first) = symmetric_eigen(&cov);
    // second pass in the first-pass eigenframe, where the moments are
    // nearly diagonal and the small eigenvalue keeps its relative accuracy
    let to_local = Mat2::from_columns(&[first, perp(&first)]).transpose();
    let c = polygon.centroid();
    let local: Vec<Point2> = polygon.vertices().iter().map(|v| to_local * (v - c)).collect();
    let (lambda1, lambda2, w) = symmetric_eigen(&exact_moments(&local).second_moment);
    let u1 = canonical_sign(to_local.transpose() * w);
    if !(lambda2 > DEGENERATE_AREA_TOL * lambda1) {
        return Err(Error::DegenerateElement(format!(
            "covariance is rank deficient (lambda1 = {lambda1:e}, lambda2 = {lambda2:e})"
        )));
    }
    Ok(CovarianceSpectrum { lambda1, lambda2, u1, u2: perp(&u1), covariance: cov })
}

/// The affine normalisation `x ↦ A x` with `A = α Λ^{-1/2} Uᵀ`, where `α`
/// scales the image to unit area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMap {
    pub matrix: Mat2,
    pub inverse: Mat2,
    pub alpha: f64,
}

impl ReferenceMap {
    pub fn from_spectrum(spectrum: &CovarianceSpectrum, area: f64) -> Self {
        let sl1 = spectrum.lambda1.sqrt();
        let sl2 = spectrum.lambda2.sqrt();
        let alpha = ((spectrum.lambda1 * spectrum.lambda2).sqrt() / area).sqrt();
        let (u1, u2) = (spectrum.u1, spectrum.u2);
        let matrix = Mat2::new(
            alpha * u1.x / sl1,
            alpha * u1.y / sl1,
            alpha * u2.x / sl2,
            alpha * u2.y / sl2,
        );
        let inverse = Mat2::new(
            sl1 * u1.x / alpha,
            sl2 * u2.x / alpha,
            sl1 * u1.y / alpha,
            sl2 * u2.y / alpha,
        );
        Self { matrix, inverse, alpha }
    }

    pub fn apply(&self, x: &Point2) -> Point2 {
        self.matrix * x
    }

    pub fn apply_inverse(&self, x: &Point2) -> Point2 {
        self.inverse * x
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// `A^{-T} = α^{-1} Λ^{1/2} Uᵀ`, the operator applied to gradients.
    pub fn inverse_transpose(&self) -> Mat2 {
        self.inverse.transpose()
    }
}

pub fn reference_map(polygon: &Polygon) -> Result<ReferenceMap> {
    let spectrum = covariance_spectrum(polygon)?;
    Ok(ReferenceMap::from_spectrum(&spectrum, polygon.area()))
}

pub fn map_polygon(polygon: &Polygon, map: &ReferenceMap) -> Result<Polygon> {
    polygon.transformed(&map.matrix)
}
