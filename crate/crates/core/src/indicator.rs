//! Gradient Gram matrices and the anisotropic error measure η.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::fields::{default_depth, for_each_quadrature_point, QuadratureRule, ScalarField};
use crate::geometry::{CovarianceSpectrum, Mat2, Point2, Polygon, ReferenceMap};
use crate::mesh::{MeshElement, PolyMesh};

/// Sub-triangle depth used for element integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadDepth {
    /// `default_depth(h_K)` per element.
    #[default]
    Auto,
    /// `default_depth(h_K) + n`.
    AutoPlus(usize),
    Fixed(usize),
}

impl QuadDepth {
    pub fn for_polygon(self, polygon: &Polygon) -> usize {
        match self {
            QuadDepth::Auto => default_depth(polygon.diameter()),
            QuadDepth::AutoPlus(n) => default_depth(polygon.diameter()) + n,
            QuadDepth::Fixed(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramDomain {
    Element(usize),
    Patch(usize),
}

/// `G = ∫ ∇v ∇vᵀ` over an element or a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramMatrix {
    pub matrix: Mat2,
    pub domain: GramDomain,
}

impl GramMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

pub fn gram_polygon(polygon: &Polygon, v: &dyn ScalarField, depth: usize) -> Result<Mat2> {
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for_each_quadrature_point(polygon, QuadratureRule::degree7(), depth, |p, w| {
        let g = v.gradient(&p);
        g11 += w * g.x * g.x;
        g12 += w * g.x * g.y;
        g22 += w * g.y * g.y;
    })?;
    Ok(Mat2::new(g11, g12, g12, g22))
}

pub fn gram_element(mesh: &PolyMesh, k: usize, v: &dyn ScalarField, depth: QuadDepth) -> Result<GramMatrix> {
    let polygon = &mesh.element(k).polygon;
    let matrix = gram_polygon(polygon, v, depth.for_polygon(polygon))?;
    Ok(GramMatrix { matrix, domain: GramDomain::Element(k) })
}

/// Sum of element Grams over ω_K.
pub fn gram_patch(mesh: &PolyMesh, k: usize, v: &dyn ScalarField, depth: QuadDepth) -> Result<GramMatrix> {
    let mut matrix = Mat2::zeros();
    for j in mesh.element_patch(k) {
        matrix += gram_element(mesh, j, v, depth)?.matrix;
    }
    Ok(GramMatrix { matrix, domain: GramDomain::Patch(k) })
}

/// `α⁻² (λ1 u1ᵀ G u1 + λ2 u2ᵀ G u2)`.
pub fn eta_from_gram(spectrum: &CovarianceSpectrum, alpha: f64, gram: &Mat2) -> f64 {
    let q1 = spectrum.u1.dot(&(gram * spectrum.u1));
    let q2 = spectrum.u2.dot(&(gram * spectrum.u2));
    ((spectrum.lambda1 * q1 + spectrum.lambda2 * q2) / (alpha * alpha)).max(0.0)
}

pub fn eta_local(element: &MeshElement, v: &dyn ScalarField, depth: QuadDepth) -> Result<f64> {
    let gram = gram_polygon(&element.polygon, v, depth.for_polygon(&element.polygon))?;
    Ok(eta_from_gram(&element.spectrum, element.map.alpha, &gram))
}

/// `∫_K |A_K^{-T} ∇v|²` evaluated pointwise, without forming the Gram matrix.
pub fn eta_direct(polygon: &Polygon, map: &ReferenceMap, v: &dyn ScalarField, depth: usize) -> Result<f64> {
    let m = map.inverse_transpose();
    let mut sum = 0.0;
    for_each_quadrature_point(polygon, QuadratureRule::degree7(), depth, |p, w| {
        sum += w * (m * v.gradient(&p)).norm_squared();
    })?;
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorReport {
    pub eta_local: Vec<f64>,
    pub eta_global: f64,
    /// Filled in by marking; empty otherwise.
    pub marked: Vec<usize>,
    pub gram: Vec<GramMatrix>,
}

impl IndicatorReport {
    pub fn len(&self) -> usize {
        self.eta_local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_local.is_empty()
    }

    /// Report rebuilt from local values alone (no Gram matrices).
    pub fn from_local(eta_local: Vec<f64>) -> Self {
        let eta_global = eta_local.iter().sum::<f64>().sqrt();
        IndicatorReport { eta_local, eta_global, marked: Vec::new(), gram: Vec::new() }
    }

    pub fn to_csv(&self, mesh: &PolyMesh) -> String {
        let mut out = String::from("element_id,eta,g11,g12,g22,lambda1,lambda2,alpha\n");
        for (k, elem) in mesh.elements().iter().enumerate() {
            let g = self.gram.get(k).map(|g| g.matrix).unwrap_or_else(Mat2::zeros);
            let _ = writeln!(
                out,
                "{k},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.eta_local[k],
                g[(0, 0)],
                g[(0, 1)],
                g[(1, 1)],
                elem.spectrum.lambda1,
                elem.spectrum.lambda2,
                elem.map.alpha
            );
        }
        out
    }
}

/// η_K for every element and η = (Σ η_K)^{1/2}; no marking.
pub fn eta_global(mesh: &PolyMesh, v: &dyn ScalarField, depth: QuadDepth) -> Result<IndicatorReport> {
    let grams: Vec<GramMatrix> = mesh
        .elements()
        .par_iter()
        .map(|elem| {
            let matrix = gram_polygon(&elem.polygon, v, depth.for_polygon(&elem.polygon))?;
            Ok(GramMatrix { matrix, domain: GramDomain::Element(elem.id) })
        })
        .collect::<Result<_>>()?;
    let eta_local: Vec<f64> = mesh
        .elements()
        .iter()
        .zip(&grams)
        .map(|(elem, g)| eta_from_gram(&elem.spectrum, elem.map.alpha, &g.matrix))
        .collect();
    let eta_global = eta_local.iter().sum::<f64>().sqrt();
    Ok(IndicatorReport { eta_local, eta_global, marked: Vec::new(), gram: grams })
}

/// Hessian diagnostics for pointwise interpolation estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianTerms {
    /// `L_ij = ∫_K (u_iᵀ H u_j)²`.
    pub l: Mat2,
    pub s0: f64,
    pub s1: f64,
    /// `α⁻⁴ S_ℓ Σ λ_i λ_j L_ij` for ℓ = 0, 1.
    pub rhs: [f64; 2],
}

pub fn hessian_terms(element: &MeshElement, v: &dyn ScalarField, depth: QuadDepth) -> Result<HessianTerms> {
    let s = &element.spectrum;
    let u = [s.u1, s.u2];
    let mut l = Mat2::zeros();
    let d = depth.for_polygon(&element.polygon);
    for_each_quadrature_point(&element.polygon, QuadratureRule::degree7(), d, |p, w| {
        let h = v.hessian(&p);
        for i in 0..2 {
            for j in 0..2 {
                let t = u[i].dot(&(h * u[j]));
                l[(i, j)] += w * t * t;
            }
        }
    })?;
    let lam = [s.lambda1, s.lambda2];
    let weighted: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| lam[i] * lam[j] * l[(i, j)]).sum();
    let s0 = 1.0;
    let s1 = (s.lambda1 / s.lambda2).sqrt() / element.polygon.area();
    let a4 = element.map.alpha.powi(4);
    Ok(HessianTerms { l, s0, s1, rhs: [s0 * weighted / a4, s1 * weighted / a4] })
}

/// `Λ^{1/2} Uᵀ H U Λ^{1/2}`, the Hessian seen from the reference element up to α⁻².
pub fn mapped_hessian(spectrum: &CovarianceSpectrum, h: &Mat2) -> Mat2 {
    let u = spectrum.eigenvectors();
    let sq = Mat2::new(spectrum.lambda1.sqrt(), 0.0, 0.0, spectrum.lambda2.sqrt());
    sq * u.transpose() * h * u * sq
}

/// Unit eigenvector of the largest eigenvalue of `gram` (x-axis on ties);
/// `None` if `gram` vanishes.
pub fn gram_major_axis(gram: &Mat2) -> Option<Point2> {
    let trace = gram.trace();
    if !(trace > 0.0) {
        return None;
    }
    let (l1, l2, u1) = crate::geometry::symmetric_eigen(gram);
    if (l1 - l2).abs() < 1e-12 * trace {
        return Some(Point2::new(1.0, 0.0));
    }
    Some(u1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{tanh_layer, Linear, Monomial};
    use crate::mesh::{grid, polygonal, unit_square};
    use approx::assert_relative_eq;

    #[test]
    fn gram_of_linear_fields() {
        let m = unit_square();
        let g = gram_element(&m, 0, &Linear::new(0.0, 1.0, 0.0), QuadDepth::Fixed(0)).unwrap();
        assert_relative_eq!(g.matrix, Mat2::new(1.0, 0.0, 0.0, 0.0), epsilon = 1e-14);
        let g = gram_element(&m, 0, &Linear::new(0.0, 1.0, 1.0), QuadDepth::Fixed(0)).unwrap();
        assert_relative_eq!(g.matrix, Mat2::new(1.0, 1.0, 1.0, 1.0), epsilon = 1e-14);
        let g = gram_element(&m, 0, &Linear::constant(3.0), QuadDepth::Fixed(0)).unwrap();
        assert_eq!(g.matrix, Mat2::zeros());
    }

    #[test]
    fn eta_examples() {
        let m = unit_square();
        let e = eta_local(m.element(0), &Linear::new(0.0, 1.0, 0.0), QuadDepth::Fixed(1)).unwrap();
        assert_relative_eq!(e, 1.0, epsilon = 1e-13);
        assert_eq!(eta_local(m.element(0), &Linear::constant(1.0), QuadDepth::Fixed(1)).unwrap(), 0.0);

        let r = eta_global(&unit_square(), &Linear::new(0.0, 1.0, 0.0), QuadDepth::Auto).unwrap();
        assert_relative_eq!(r.eta_global, r.eta_local[0].sqrt(), epsilon = 1e-15);

        let r = eta_global(&grid(2, 2).unwrap(), &Linear::new(0.0, 1.0, 0.0), QuadDepth::Auto).unwrap();
        for e in &r.eta_local {
            assert_relative_eq!(*e, r.eta_local[0], max_relative = 1e-13);
        }
        assert_relative_eq!(r.eta_global.powi(2), 4.0 * r.eta_local[0], max_relative = 1e-13);
    }

    #[test]
    fn gram_and_direct_paths_agree() {
        let m = polygonal(4, 4, 0.4, 9).unwrap();
        let v = tanh_layer();
        for elem in m.elements() {
            let d = default_depth(elem.polygon.diameter());
            let a = eta_local(elem, &v, QuadDepth::Fixed(d)).unwrap();
            let b = eta_direct(&elem.polygon, &elem.map, &v, d).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn tanh_eta_stable_under_deeper_quadrature() {
        let m = grid(4, 4).unwrap();
        let v = tanh_layer();
        let a = eta_global(&m, &v, QuadDepth::Auto).unwrap();
        let b = eta_global(&m, &v, QuadDepth::AutoPlus(1)).unwrap();
        assert!((a.eta_global - b.eta_global).abs() <= 1e-4 * b.eta_global);
        assert_relative_eq!(a.eta_global.powi(2), a.eta_local.iter().sum::<f64>(), max_relative = 1e-12);
    }

    #[test]
    fn hessian_examples() {
        let m = unit_square();
        let t = hessian_terms(m.element(0), &Monomial::new(0.5, 2, 0), QuadDepth::Fixed(0)).unwrap();
        assert_relative_eq!(t.l[(0, 0)], 1.0, epsilon = 1e-13);
        assert_relative_eq!(t.l[(1, 1)], 0.0, epsilon = 1e-13);
        assert_relative_eq!(t.s1, 1.0, epsilon = 1e-12);
        let t = hessian_terms(m.element(0), &Linear::new(1.0, 2.0, 3.0), QuadDepth::Fixed(0)).unwrap();
        assert_eq!(t.l, Mat2::zeros());
    }

    #[test]
    fn frobenius_identity() {
        let m = polygonal(3, 3, 0.5, 2).unwrap();
        let v = tanh_layer();
        for elem in m.elements() {
            let p = elem.polygon.centroid();
            let h = v.hessian(&p);
            let s = &elem.spectrum;
            let mapped = mapped_hessian(s, &h);
            let u = [s.u1, s.u2];
            let lam = [s.lambda1, s.lambda2];
            let mut sum = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    sum += lam[i] * lam[j] * u[i].dot(&(h * u[j])).powi(2);
                }
            }
            assert_relative_eq!(mapped.norm_squared(), sum, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_gram_has_no_axis() {
        assert_eq!(gram_major_axis(&Mat2::zeros()), None);
        assert_eq!(gram_major_axis(&Mat2::identity()), Some(Point2::new(1.0, 0.0)));
        let a = gram_major_axis(&Mat2::new(0.0, 0.0, 0.0, 2.0)).unwrap();
        assert_relative_eq!(a, Point2::new(0.0, 1.0));
    }
}
