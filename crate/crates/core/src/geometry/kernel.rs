use super::{perp, Point2, Polygon};

/// Visibility kernel of a polygon and its largest inscribed circle.
#[derive(Debug, Clone, PartialEq)]
pub struct StarKernel {
    /// Convex kernel polygon (counter-clockwise), empty if the polygon is not
    /// star-shaped.
    pub kernel: Vec<Point2>,
    pub rho: f64,
    pub z: Point2,
}

impl StarKernel {
    pub fn is_star_shaped(&self) -> bool {
        !self.kernel.is_empty()
    }
}

/// Half-plane `n·x >= offset` with unit inward normal `n`.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    normal: Point2,
    offset: f64,
}

impl HalfPlane {
    fn slack(&self, p: &Point2) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

fn edge_half_planes(polygon: &Polygon) -> Vec<HalfPlane> {
    let h = polygon.diameter();
    let mut planes: Vec<HalfPlane> = Vec::with_capacity(polygon.len());
    for (a, b) in polygon.edges() {
        let normal = perp(&(b - a)).normalize();
        let plane = HalfPlane { normal, offset: normal.dot(&a) };
        // collinear edges (hanging nodes) give the same constraint
        let duplicate = planes.iter().any(|q| {
            (q.normal - plane.normal).norm() < 1e-12 && (q.offset - plane.offset).abs() < 1e-12 * h
        });
        if !duplicate {
            planes.push(plane);
        }
    }
    planes
}

/// Clips a convex polygon against one half-plane.
fn clip(poly: &[Point2], plane: &HalfPlane) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let sp = plane.slack(&p);
        let sq = plane.slack(&q);
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
            out.push(p + (q - p) * (sp / (sp - sq)));
        }
    }
    out
}

fn convex_area(poly: &[Point2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    super::signed_area(poly)
}

/// Intersection of the inward half-planes of all edges (O(n²) clipping),
/// plus the Chebyshev centre and radius of that kernel.
pub fn star_kernel(polygon: &Polygon) -> StarKernel {
    let planes = edge_half_planes(polygon);
    let (lo, hi) = polygon.bounding_box();
    let pad = polygon.diameter();
    let mut kernel = vec![
        Point2::new(lo.x - pad, lo.y - pad),
        Point2::new(hi.x + pad, lo.y - pad),
        Point2::new(hi.x + pad, hi.y + pad),
        Point2::new(lo.x - pad, hi.y + pad),
    ];
    for plane in &planes {
        kernel = clip(&kernel, plane);
        if kernel.is_empty() {
            break;
        }
    }
    let h = polygon.diameter();
    if convex_area(&kernel) <= 1e-14 * h * h {
        return StarKernel { kernel: Vec::new(), rho: 0.0, z: polygon.centroid() };
    }
    let kernel_planes: Vec<HalfPlane> = planes
        .iter()
        .copied()
        .filter(|pl| kernel.iter().filter(|v| pl.slack(v).abs() <= 1e-10 * h).count() >= 2)
        .collect();
    let (z, rho) = chebyshev(&kernel_planes, &kernel, h);
    StarKernel { kernel, rho, z }
}

/// Chebyshev centre of a convex polygon given by its vertices (CCW).
pub fn chebyshev_center(convex: &[Point2]) -> (Point2, f64) {
    let h = super::diameter_of(convex);
    let n = convex.len();
    let planes: Vec<HalfPlane> = (0..n)
        .map(|k| {
            let a = convex[k];
            let b = convex[(k + 1) % n];
            let normal = perp(&(b - a)).normalize();
            HalfPlane { normal, offset: normal.dot(&a) }
        })
        .collect();
    chebyshev(&planes, convex, h)
}

/// Solves `max r  s.t.  n_k·z - r >= offset_k` by enumerating the vertices of
/// the 3-variable feasible set, then centres `z` inside the optimal face.
fn chebyshev(planes: &[HalfPlane], kernel: &[Point2], h: f64) -> (Point2, f64) {
    let m = planes.len();
    let mut best: Option<(Point2, f64)> = None;
    let feas_tol = 1e-12 * h;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let Some((z, r)) = solve3(&planes[i], &planes[j], &planes[k]) else {
                    continue;
                };
                if r < 0.0 || !z.x.is_finite() {
                    continue;
                }
                if planes.iter().all(|p| p.slack(&z) >= r - feas_tol)
                    && best.map_or(true, |(_, rb)| r > rb)
                {
                    best = Some((z, r));
                }
            }
        }
    }
    let Some((z0, r_star)) = best else {
        let c = kernel.iter().fold(Point2::zeros(), |s, v| s + v) / kernel.len() as f64;
        return (c, 0.0);
    };
    // the optimum may be a segment (e.g. rectangles): take the middle of it
    let shrink = (r_star - 1e-9 * h).max(0.0);
    let mut face = kernel.to_vec();
    for p in planes {
        face = clip(&face, &HalfPlane { normal: p.normal, offset: p.offset + shrink });
        if face.is_empty() {
            return (z0, r_star);
        }
    }
    let z = face.iter().fold(Point2::zeros(), |s, v| s + v) / face.len() as f64;
    let r = planes.iter().map(|p| p.slack(&z)).fold(f64::INFINITY, f64::min);
    if r >= r_star - 1e-8 * h {
        (z, r.min(r_star).max(0.0))
    } else {
        (z0, r_star)
    }
}

fn solve3(a: &HalfPlane, b: &HalfPlane, c: &HalfPlane) -> Option<(Point2, f64)> {
    // n·z - r = offset for three planes
    let m = nalgebra::Matrix3::new(
        a.normal.x, a.normal.y, -1.0, b.normal.x, b.normal.y, -1.0, c.normal.x, c.normal.y, -1.0,
    );
    let rhs = nalgebra::Vector3::new(a.offset, b.offset, c.offset);
    let det = m.determinant();
    if det.abs() < 1e-13 {
        return None;
    }
    let sol = m.lu().solve(&rhs)?;
    Some((Point2::new(sol.x, sol.y), sol.z))
}
