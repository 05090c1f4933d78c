//! Regularity audits of anisotropic meshes: per element, per neighbour
//! pair and per mapped patch.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{map_polygon, star_kernel, Mat2, Point2, Polygon, ReferenceMap};
use crate::mesh::{MeshElement, PolyMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementRegularity {
    pub rho: f64,
    pub z: Point2,
    pub diameter: f64,
    /// `h / rho`; infinite when the polygon is not star-shaped.
    pub aspect: f64,
    /// Largest `h / |e|` over the (topological) edges.
    pub min_edge_ratio: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_ratio: f64,
    pub alpha: f64,
    pub area: f64,
    pub n_nodes: usize,
}

pub fn audit_polygon(polygon: &Polygon) -> Result<ElementRegularity> {
    let spectrum = polygon.spectrum()?;
    let map = ReferenceMap::from_spectrum(&spectrum, polygon.area());
    let kernel = star_kernel(polygon);
    let h = polygon.diameter();
    let shortest = polygon.edges().map(|(a, b)| (b - a).norm()).fold(f64::INFINITY, f64::min);
    Ok(ElementRegularity {
        rho: kernel.rho,
        z: kernel.z,
        diameter: h,
        aspect: if kernel.rho > 0.0 { h / kernel.rho } else { f64::INFINITY },
        min_edge_ratio: h / shortest,
        lambda1: spectrum.lambda1,
        lambda2: spectrum.lambda2,
        lambda_ratio: spectrum.ratio(),
        alpha: map.alpha,
        area: polygon.area(),
        n_nodes: polygon.len(),
    })
}

/// Records for an element and for its reference configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementAudit {
    pub physical: ElementRegularity,
    pub mapped: ElementRegularity,
}

pub fn audit_element(element: &MeshElement) -> Result<ElementAudit> {
    let physical = audit_polygon(&element.polygon)?;
    let mapped = audit_polygon(&map_polygon(&element.polygon, &element.map)?)?;
    Ok(ElementAudit { physical, mapped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighbourRegularity {
    pub pair: (usize, usize),
    /// `δ_j = λ_{K2,j} / λ_{K1,j} - 1`.
    pub delta: [f64; 2],
    pub delta_max: f64,
    /// Rotation angle of `R = U_{K2} U_{K1}ᵀ`, in `(-π/2, π/2]`.
    pub angle: f64,
    /// `‖R - I‖₂`.
    pub rotation_norm: f64,
    /// `‖R - I‖₂ (λ_{K1,1} / λ_{K1,2})^{1/2}`.
    pub rotation_term: f64,
    pub lambda_ratio_k1: f64,
    pub alpha_ratio: f64,
    pub area_ratio: f64,
}

impl NeighbourRegularity {
    pub fn rotation(&self) -> Mat2 {
        let (s, c) = self.angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// Pairwise constant `(α_{K1}/α_{K2}) (1 + δ_max)^{1/2} (1 + rotation_term)`, bounding
    /// `‖A_{K2}^{-T}∇v‖_{L2(K1)} / ‖A_{K1}^{-T}∇v‖_{L2(K1)}`.
    pub fn gradient_bound(&self) -> f64 {
        self.alpha_ratio * (1.0 + self.delta_max).sqrt() * (1.0 + self.rotation_term)
    }

    /// Factor by which mapping `K2` with `F_{K1}` can worsen the aspect of `K̂2`.
    pub fn aspect_factor(&self) -> f64 {
        let hi = self.delta.iter().map(|d| 1.0 + d).fold(f64::NEG_INFINITY, f64::max);
        let lo = self.delta.iter().map(|d| 1.0 + d).fold(f64::INFINITY, f64::min);
        (hi / lo).sqrt() * (1.0 + self.rotation_term).powi(2)
    }
}

/// Compares the spectra of `k1` and `k2`. The sign of `U_{K2}` is not
/// determined by the spectrum, so the sign giving the smaller rotation is used.
pub fn neighbour_regularity(k1: &MeshElement, k2: &MeshElement) -> NeighbourRegularity {
    let (s1, s2) = (&k1.spectrum, &k2.spectrum);
    let delta = [s2.lambda1 / s1.lambda1 - 1.0, s2.lambda2 / s1.lambda2 - 1.0];
    let mut angle = s2.u1.y.atan2(s2.u1.x) - s1.u1.y.atan2(s1.u1.x);
    angle = angle.rem_euclid(std::f64::consts::PI);
    if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    let rotation_norm = 2.0 * (0.5 * angle).sin().abs();
    let ratio = s1.ratio();
    NeighbourRegularity {
        pair: (k1.id, k2.id),
        delta,
        delta_max: delta[0].abs().max(delta[1].abs()),
        angle,
        rotation_norm,
        rotation_term: rotation_norm * ratio.sqrt(),
        lambda_ratio_k1: ratio,
        alpha_ratio: k1.map.alpha / k2.map.alpha,
        area_ratio: k2.polygon.area() / k1.polygon.area(),
    }
}

pub fn audit_neighbours(mesh: &PolyMesh) -> Vec<NeighbourRegularity> {
    mesh.neighbour_pairs()
        .par_iter()
        .map(|&(a, b)| neighbour_regularity(mesh.element(a), mesh.element(b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedPatchAudit {
    pub element: usize,
    /// `(K', record of F_K(K'))` for every `K'` in ω_K.
    pub records: Vec<(usize, ElementRegularity)>,
    /// Diameter of `F_K(ω_K)`.
    pub patch_diameter: f64,
    pub max_area_ratio: f64,
    pub min_area_ratio: f64,
}

pub fn audit_mapped_patch(mesh: &PolyMesh, k: usize) -> Result<MappedPatchAudit> {
    let elem = mesh.element(k);
    let mut records = Vec::new();
    let mut mapped_points: Vec<Point2> = Vec::new();
    let (mut max_ratio, mut min_ratio) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in mesh.element_patch(k) {
        let other = mesh.element(j);
        let mapped = map_polygon(&other.polygon, &elem.map)?;
        mapped_points.extend_from_slice(mapped.vertices());
        records.push((j, audit_polygon(&mapped)?));
        let r = other.polygon.area() / elem.polygon.area();
        max_ratio = max_ratio.max(r);
        min_ratio = min_ratio.min(r);
    }
    let mut diameter: f64 = 0.0;
    for (i, p) in mapped_points.iter().enumerate() {
        for q in &mapped_points[i + 1..] {
            diameter = diameter.max((p - q).norm());
        }
    }
    Ok(MappedPatchAudit { element: k, records, patch_diameter: diameter, max_area_ratio: max_ratio, min_area_ratio: min_ratio })
}

/// `sqrt((1 + c_δ) / (1 - c_δ)) (1 + c_R)² σ`; infinite when `c_δ >= 1`.
pub fn perturbed_aspect_bound(c_delta: f64, c_r: f64, sigma: f64) -> f64 {
    if c_delta >= 1.0 {
        return f64::INFINITY;
    }
    ((1.0 + c_delta) / (1.0 - c_delta)).sqrt() * (1.0 + c_r).powi(2) * sigma
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Bin edges, one more than `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        let mut counts = vec![0; bins];
        for v in values {
            if !v.is_finite() {
                continue;
            }
            let i = (((v - lo) / (hi - lo)) * bins as f64).floor();
            let i = i.clamp(0.0, (bins - 1) as f64) as usize;
            counts[i] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityAudit {
    pub elements: Vec<ElementAudit>,
    pub pairs: Vec<NeighbourRegularity>,
    /// Largest aspect of the reference configurations (σ of the anisotropic definition).
    pub sigma: f64,
    /// Largest edge ratio of the reference configurations.
    pub c_k: f64,
    pub sigma_physical: f64,
    pub c_k_physical: f64,
    pub c_delta: f64,
    pub c_r: f64,
    pub max_lambda_ratio: f64,
    pub alpha_range: (f64, f64),
    pub max_node_valence: usize,
    /// Histogram of log10(λ1/λ2).
    pub lambda_histogram: Histogram,
    pub alpha_histogram: Histogram,
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

pub fn audit_mesh(mesh: &PolyMesh) -> Result<RegularityAudit> {
    let elements: Vec<ElementAudit> = mesh.elements().par_iter().map(audit_element).collect::<Result<_>>()?;
    let pairs = audit_neighbours(mesh);
    let alpha_lo = elements.iter().map(|e| e.physical.alpha).fold(f64::INFINITY, f64::min);
    let alpha_hi = max_of(elements.iter().map(|e| e.physical.alpha));
    let max_ratio = max_of(elements.iter().map(|e| e.physical.lambda_ratio));
    Ok(RegularityAudit {
        sigma: max_of(elements.iter().map(|e| e.mapped.aspect)),
        c_k: max_of(elements.iter().map(|e| e.mapped.min_edge_ratio)),
        sigma_physical: max_of(elements.iter().map(|e| e.physical.aspect)),
        c_k_physical: max_of(elements.iter().map(|e| e.physical.min_edge_ratio)),
        c_delta: max_of(pairs.iter().map(|p| p.delta_max)),
        c_r: max_of(pairs.iter().map(|p| p.rotation_term)),
        max_lambda_ratio: max_ratio,
        alpha_range: (alpha_lo, alpha_hi),
        max_node_valence: mesh.max_node_valence(),
        lambda_histogram: Histogram::new(
            elements.iter().map(|e| e.physical.lambda_ratio.log10()),
            0.0,
            max_ratio.log10().ceil().max(1.0),
            20,
        ),
        alpha_histogram: Histogram::new(elements.iter().map(|e| e.physical.alpha), 0.25, 0.35, 20),
        elements,
        pairs,
    })
}

impl RegularityAudit {
    fn element_rows(records: impl Iterator<Item = ElementRegularity>) -> String {
        let mut out = String::from("element_id,lambda1,lambda2,ratio,alpha,rho,aspect,min_edge_ratio,n_nodes\n");
        for (k, r) in records.enumerate() {
            let _ = writeln!(
                out,
                "{k},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                r.lambda1, r.lambda2, r.lambda_ratio, r.alpha, r.rho, r.aspect, r.min_edge_ratio, r.n_nodes
            );
        }
        out
    }

    /// Element records of the physical elements.
    pub fn elements_csv(&self) -> String {
        Self::element_rows(self.elements.iter().map(|e| e.physical))
    }

    /// Element records of the reference configurations.
    pub fn mapped_elements_csv(&self) -> String {
        Self::element_rows(self.elements.iter().map(|e| e.mapped))
    }

    pub fn pairs_csv(&self) -> String {
        let mut out = String::from("pair,k1,k2,delta_max,rotation_term\n");
        for (i, p) in self.pairs.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{:.12e},{:.12e}", p.pair.0, p.pair.1, p.delta_max, p.rotation_term);
        }
        out
    }
}
