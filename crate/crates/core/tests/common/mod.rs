#![allow(dead_code)]

use anisomesh::fields::ScalarField;
use anisomesh::geometry::{Mat2, Point2, Polygon};
use anisomesh::mesh::{build_mesh, BoundarySpec, PolyMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Star-shaped polygon with `n` vertices, stretched by `stretch` along a
/// random direction, so that `λ1/λ2` grows like `stretch²`.
pub fn random_polygon(rng: &mut impl Rng, n: usize, stretch: f64) -> Polygon {
    let mut angles: Vec<f64> = Vec::with_capacity(n);
    let slot = std::f64::consts::TAU / n as f64;
    for k in 0..n {
        angles.push(slot * (k as f64 + rng.gen_range(0.1..0.9)));
    }
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (c, s) = (theta.cos(), theta.sin());
    let shift = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let pts = angles
        .iter()
        .map(|a| {
            let r = rng.gen_range(0.4..1.0);
            let (x, y) = (stretch * r * a.cos(), r * a.sin());
            Point2::new(c * x - s * y, s * x + c * y) + shift
        })
        .collect();
    Polygon::new(pts).expect("star-shaped loop is simple")
}

/// Polygons with 3 to 12 vertices and `λ1/λ2` between 1 and `max_ratio`.
pub fn polygon_family(seed: u64, count: usize, max_ratio: f64) -> Vec<Polygon> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(3..=12);
            let stretch = 10f64.powf(rng.gen_range(0.0..=max_ratio.log10() / 2.0));
            random_polygon(&mut rng, n, stretch)
        })
        .collect()
}

pub struct MonteCarlo {
    pub area: (f64, f64),
    pub centroid: [(f64, f64); 2],
    /// xx, xy, yy with standard errors.
    pub covariance: [(f64, f64); 3],
}

/// Rejection sampling in the bounding box; every estimate carries its
/// standard error. Two passes over the same seeded stream, so no samples
/// are stored.
pub fn monte_carlo(polygon: &Polygon, samples: usize, seed: u64) -> MonteCarlo {
    let (lo, hi) = polygon.bounding_box();
    let box_area = (hi.x - lo.x) * (hi.y - lo.y);
    let stream = || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(move |_| Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y)))
            .filter(|p| polygon.contains(p))
    };
    let (mut m, mut sum) = (0usize, Point2::zeros());
    for p in stream() {
        m += 1;
        sum += p;
    }
    let mean = sum / m as f64;
    // mean and variance of x, y, (x-x̄)², (x-x̄)(y-ȳ), (y-ȳ)², shifted by the
    // first-pass mean to keep the sums well conditioned
    let mut s1 = [0.0; 5];
    let mut s2 = [0.0; 5];
    for p in stream() {
        let d = p - mean;
        let f = [d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y];
        for k in 0..5 {
            s1[k] += f[k];
            s2[k] += f[k] * f[k];
        }
    }
    let n = m as f64;
    let est = |k: usize| {
        let mu = s1[k] / n;
        let var = (s2[k] - n * mu * mu) / (n - 1.0);
        (mu, (var / n).sqrt())
    };
    let frac = n / samples as f64;
    let area = (frac * box_area, (frac * (1.0 - frac) / samples as f64).sqrt() * box_area);
    let shift = |(mu, se): (f64, f64), c: f64| (mu + c, se);
    MonteCarlo {
        area,
        centroid: [shift(est(0), mean.x), shift(est(1), mean.y)],
        covariance: [est(2), est(3), est(4)],
    }
}

/// Largest deviation of the exact moments from the Monte-Carlo estimate,
/// in standard errors.
pub fn moment_sigmas(polygon: &Polygon, mc: &MonteCarlo) -> f64 {
    let c = polygon.centroid();
    let m: Mat2 = polygon.covariance();
    let pairs = [
        (polygon.area(), mc.area),
        (c.x, mc.centroid[0]),
        (c.y, mc.centroid[1]),
        (m[(0, 0)], mc.covariance[0]),
        (m[(0, 1)], mc.covariance[1]),
        (m[(1, 1)], mc.covariance[2]),
    ];
    pairs.iter().map(|(exact, (est, se))| (exact - est).abs() / se).fold(0.0, f64::max)
}

pub fn rotation(theta: f64) -> Mat2 {
    Mat2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos())
}

/// Full cubic `Σ c_ij x^i y^j` with `i + j ≤ 3`.
#[derive(Debug, Clone)]
pub struct Cubic {
    /// Indexed by `(i, j)` in the order of [`Cubic::TERMS`].
    pub coeffs: [f64; 10],
}

impl Cubic {
    pub const TERMS: [(i32, i32); 10] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

    pub fn random(rng: &mut impl Rng) -> Self {
        let mut coeffs = [0.0; 10];
        for c in &mut coeffs {
            *c = rng.gen_range(-1.0..1.0);
        }
        Cubic { coeffs }
    }
}

fn pw(x: f64, k: i32) -> f64 {
    if k < 0 {
        0.0
    } else {
        x.powi(k)
    }
}

impl ScalarField for Cubic {
    fn value(&self, p: &Point2) -> f64 {
        Self::TERMS.iter().zip(&self.coeffs).map(|(&(i, j), c)| c * pw(p.x, i) * pw(p.y, j)).sum()
    }

    fn gradient(&self, p: &Point2) -> Point2 {
        let mut g = Point2::zeros();
        for (&(i, j), c) in Self::TERMS.iter().zip(&self.coeffs) {
            g.x += c * i as f64 * pw(p.x, i - 1) * pw(p.y, j);
            g.y += c * j as f64 * pw(p.x, i) * pw(p.y, j - 1);
        }
        g
    }

    fn hessian(&self, p: &Point2) -> Mat2 {
        let mut h = Mat2::zeros();
        for (&(i, j), c) in Self::TERMS.iter().zip(&self.coeffs) {
            let (fi, fj) = (i as f64, j as f64);
            h[(0, 0)] += c * fi * (fi - 1.0) * pw(p.x, i - 2) * pw(p.y, j);
            h[(1, 1)] += c * fj * (fj - 1.0) * pw(p.x, i) * pw(p.y, j - 2);
            let xy = c * fi * fj * pw(p.x, i - 1) * pw(p.y, j - 1);
            h[(0, 1)] += xy;
            h[(1, 0)] += xy;
        }
        h
    }

    fn label(&self) -> &str {
        "cubic"
    }
}

/// `x ↦ f(Rᵀ x)`, the field carried along by the rotation `R`.
pub struct Rotated<'a> {
    pub inner: &'a dyn ScalarField,
    pub r: Mat2,
}

impl ScalarField for Rotated<'_> {
    fn value(&self, p: &Point2) -> f64 {
        self.inner.value(&(self.r.transpose() * p))
    }

    fn gradient(&self, p: &Point2) -> Point2 {
        self.r * self.inner.gradient(&(self.r.transpose() * p))
    }

    fn hessian(&self, p: &Point2) -> Mat2 {
        self.r * self.inner.hessian(&(self.r.transpose() * p)) * self.r.transpose()
    }

    fn label(&self) -> &str {
        "rotated"
    }
}

/// Same topology and tags, nodes rotated about the origin.
pub fn rotate_mesh(mesh: &PolyMesh, r: &Mat2) -> PolyMesh {
    let coords = mesh.coords().iter().map(|p| r * p).collect();
    build_mesh(coords, mesh.loops(), BoundarySpec::NodeTags(mesh.tags())).unwrap()
}
