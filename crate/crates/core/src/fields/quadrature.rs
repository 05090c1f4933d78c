use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::Result;
use crate::geometry::{cross, triangulate_polygon, Point2, Polygon};

/// Points and weights on the reference triangle `(0,0), (1,0), (0,1)`;
/// weights sum to its area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Total polynomial degree integrated exactly.
    pub order: usize,
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

/// Golub–Welsch for a monic three-term recurrence with diagonal `a`,
/// off-diagonal squares `b` and zeroth moment `mu0`.
fn golub_welsch(a: &[f64], b: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut jm = DMatrix::zeros(n, n);
    for i in 0..n {
        jm[(i, i)] = a[i];
        if i + 1 < n {
            let s = b[i + 1].sqrt();
            jm[(i, i + 1)] = s;
            jm[(i + 1, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
    nodes.into_iter().unzip()
}

/// Gauss–Jacobi nodes and weights for `(1-x)^alpha (1+x)^beta` on `[-1, 1]`.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let a: Vec<f64> = (0..n)
        .map(|k| {
            let k = k as f64;
            let s = 2.0 * k + ab;
            if s.abs() < 1e-300 || (s + 2.0).abs() < 1e-300 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            }
        })
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let k = k as f64;
            let s = 2.0 * k + ab;
            if k == 1.0 {
                // avoids 0/0 when alpha + beta = -1
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
            }
        })
        .collect();
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);
    golub_welsch(&a, &b, mu0)
}

fn gamma(x: f64) -> f64 {
    // only small non-negative integers and half-integers are needed here
    if x == x.round() && x > 0.0 {
        return (1..x as u64).map(|k| k as f64).product();
    }
    let mut v = std::f64::consts::PI.sqrt();
    let mut t = 0.5;
    while t < x - 1e-12 {
        v *= t;
        t += 1.0;
    }
    v
}

/// Gauss–Legendre with `n` points mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(n, 0.0, 0.0);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

impl QuadratureRule {
    /// Collapsed-square product of `n`-point Gauss rules, exact to degree `2n - 1`.
    pub fn conical(n: usize) -> Self {
        let (s, ws) = gauss_legendre(n);
        let (t, wt) = gauss_jacobi(n, 1.0, 0.0);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (ti, wti) in t.iter().zip(&wt) {
            let tt = 0.5 * (ti + 1.0);
            for (si, wsi) in s.iter().zip(&ws) {
                points.push(Point2::new(si * (1.0 - tt), tt));
                weights.push(wsi * wti / 4.0);
            }
        }
        QuadratureRule { order: 2 * n - 1, points, weights }
    }

    /// The default rule: 16 points, degree 7.
    pub fn degree7() -> &'static QuadratureRule {
        static RULE: OnceLock<QuadratureRule> = OnceLock::new();
        RULE.get_or_init(|| QuadratureRule::conical(4))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Subdivision depth that resolves layers of width about 1/60.
pub fn default_depth(diameter: f64) -> usize {
    let d = (60.0 * diameter).log2().ceil();
    if d.is_finite() && d > 2.0 {
        d as usize
    } else {
        2
    }
}

/// Visits every quadrature point of the polygon with its physical weight.
///
/// The polygon is cut into triangles (fan from the kernel centre, or ear
/// clipping), and each is split into `4^depth` congruent pieces.
pub fn for_each_quadrature_point(
    polygon: &Polygon,
    rule: &QuadratureRule,
    depth: usize,
    mut visit: impl FnMut(Point2, f64),
) -> Result<()> {
    for tri in triangulate_polygon(polygon)? {
        quadrature_on_triangle(&tri, rule, depth, &mut visit);
    }
    Ok(())
}

/// Visits the rule's points on the `4^depth` congruent pieces of a triangle.
pub fn quadrature_on_triangle(tri: &[Point2; 3], rule: &QuadratureRule, depth: usize, visit: &mut impl FnMut(Point2, f64)) {
    let m = 1usize << depth;
    let e1 = (tri[1] - tri[0]) / m as f64;
    let e2 = (tri[2] - tri[0]) / m as f64;
    let jac = cross(&e1, &e2).abs();
    if jac == 0.0 {
        return;
    }
    // reference points of an "up" sub-triangle and of a "down" one
    let up: Vec<Point2> = rule.points.iter().map(|q| e1 * q.x + e2 * q.y).collect();
    let down: Vec<Point2> = rule.points.iter().map(|q| e1 + e2 - e1 * q.x - e2 * q.y).collect();
    // rule weights sum to 1/2 and each sub-triangle has area jac / 2
    let weights: Vec<f64> = rule.weights.iter().map(|w| w * jac).collect();
    for j in 0..m {
        for i in 0..m - j {
            let base = tri[0] + e1 * i as f64 + e2 * j as f64;
            for (q, w) in up.iter().zip(&weights) {
                visit(base + q, *w);
            }
            if i + j + 1 < m {
                for (q, w) in down.iter().zip(&weights) {
                    visit(base + q, *w);
                }
            }
        }
    }
}

pub fn integrate_on_polygon(
    polygon: &Polygon,
    f: impl Fn(&Point2) -> f64,
    rule: &QuadratureRule,
    depth: usize,
) -> Result<f64> {
    let mut sum = 0.0;
    for_each_quadrature_point(polygon, rule, depth, |p, w| sum += w * f(&p))?;
    Ok(sum)
}

/// Gauss rule with `n` points on each of `pieces` equal sub-segments.
pub fn integrate_on_segment(a: &Point2, b: &Point2, f: impl Fn(&Point2) -> f64, n: usize, pieces: usize) -> f64 {
    let (t, w) = gauss_legendre(n);
    let len = (b - a).norm();
    let mut sum = 0.0;
    for k in 0..pieces {
        for (ti, wi) in t.iter().zip(&w) {
            let s = (k as f64 + ti) / pieces as f64;
            sum += wi * f(&(a + (b - a) * s));
        }
    }
    sum * len / pieces as f64
}
