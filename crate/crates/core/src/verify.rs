//! Empirical checks of the interpolation inequalities.
//!
//! Constants are never known, so every check reports the ratio of the two
//! sides without the constant. Only the H¹ mapping sandwich and the
//! neighbour gradient bound are exact and can fail.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{integrate_on_polygon, integrate_on_segment, tanh_layer, Monomial, QuadratureRule, ScalarField, TanhLayer};
use crate::geometry::{map_polygon, Mat2, Point2, Polygon, ReferenceMap};
use crate::mesh::{MeshElement, PolyMesh};
use crate::regularity::neighbour_regularity;

/// Slack on the exact inequalities.
pub const EXACT_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs_without_constant: f64,
    /// `lhs / rhs`, zero when `lhs` is.
    pub ratio: f64,
    pub context: String,
}

impl InequalityRecord {
    pub fn new(name: &str, lhs: f64, rhs: f64, context: impl Into<String>) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        InequalityRecord { name: name.to_string(), lhs, rhs_without_constant: rhs, ratio, context: context.into() }
    }

    pub fn is_valid(&self) -> bool {
        self.ratio.is_finite() && self.ratio >= 0.0 && (self.lhs <= 0.0 || self.rhs_without_constant > 0.0)
    }
}

/// `v(x) = inner((x - lo) ⊘ (hi - lo))` with the unit square as the
/// inner field's domain: a field pulled back onto a bounding box.
#[derive(Debug, Clone)]
pub struct Pullback<F> {
    pub inner: F,
    lo: Point2,
    size: Point2,
    label: String,
}

impl<F: ScalarField> Pullback<F> {
    pub fn new(inner: F, lo: Point2, hi: Point2) -> Self {
        let label = format!("{}@box", inner.label());
        Pullback { inner, lo, size: hi - lo, label }
    }

    pub fn onto(inner: F, polygon: &Polygon) -> Self {
        let (lo, hi) = polygon.bounding_box();
        Self::new(inner, lo, hi)
    }

    fn local(&self, p: &Point2) -> Point2 {
        (p - self.lo).component_div(&self.size)
    }
}

impl<F: ScalarField> ScalarField for Pullback<F> {
    fn value(&self, p: &Point2) -> f64 {
        self.inner.value(&self.local(p))
    }

    fn gradient(&self, p: &Point2) -> Point2 {
        self.inner.gradient(&self.local(p)).component_div(&self.size)
    }

    fn hessian(&self, p: &Point2) -> Mat2 {
        let h = self.inner.hessian(&self.local(p));
        let s = Mat2::from_diagonal(&self.size.map(|x| 1.0 / x));
        s * h * s
    }

    fn label(&self) -> &str {
        &self.label
    }
}

fn integrate(polygon: &Polygon, depth: usize, f: impl Fn(&Point2) -> f64) -> f64 {
    integrate_on_polygon(polygon, f, QuadratureRule::degree7(), depth).expect("valid polygon triangulates")
}

/// `‖A^{-T}∇v‖²_{L2(domain)}`.
fn mapped_gradient_sq(domain: &Polygon, map: &ReferenceMap, v: &dyn ScalarField, depth: usize) -> f64 {
    let ait = map.inverse_transpose();
    integrate(domain, depth, |p| (ait * v.gradient(p)).norm_squared())
}

/// `‖v‖²_{L2(E)} ≤ c (|E|/|K|) (‖v‖²_{L2(K)} + ‖A_K^{-T}∇v‖²_{L2(K)})` for edge `edge` of `polygon`.
pub fn check_trace(polygon: &Polygon, edge: usize, v: &dyn ScalarField, depth: usize) -> Result<InequalityRecord> {
    let map = polygon.reference_map()?;
    let (a, b) = polygon.edge(edge);
    let len = (b - a).norm();
    let lhs = integrate_on_segment(&a, &b, |p| v.value(p).powi(2), 4, 1 << depth);
    let l2 = integrate(polygon, depth, |p| v.value(p).powi(2));
    let grad = mapped_gradient_sq(polygon, &map, v, depth);
    let rhs = len / polygon.area() * (l2 + grad);
    Ok(InequalityRecord::new("trace", lhs, rhs, format!("edge={edge}")))
}

/// `‖v - Π_ω v‖_{L2(ω)} ≤ c ‖A_K^{-T}∇v‖_{L2(ω)}` with `ω` the union of `pieces`.
pub fn check_poincare_on(pieces: &[&Polygon], map: &ReferenceMap, v: &dyn ScalarField, depth: usize) -> InequalityRecord {
    let area: f64 = pieces.iter().map(|p| p.area()).sum();
    let mean = pieces.iter().map(|p| integrate(p, depth, |x| v.value(x))).sum::<f64>() / area;
    let lhs = pieces.iter().map(|p| integrate(p, depth, |x| (v.value(x) - mean).powi(2))).sum::<f64>().sqrt();
    let rhs = pieces.iter().map(|p| mapped_gradient_sq(p, map, v, depth)).sum::<f64>().sqrt();
    // a vanishing gradient means v is constant and the left side is rounding
    let lhs = if rhs == 0.0 { 0.0 } else { lhs };
    InequalityRecord::new("poincare", lhs, rhs, format!("pieces={}", pieces.len()))
}

/// Poincaré check on a patch of mesh elements with the map of element `k`.
pub fn check_poincare(mesh: &PolyMesh, patch: &[usize], k: usize, v: &dyn ScalarField, depth: usize) -> InequalityRecord {
    let pieces: Vec<&Polygon> = patch.iter().map(|&j| &mesh.element(j).polygon).collect();
    let mut r = check_poincare_on(&pieces, &mesh.element(k).map, v, depth);
    r.context = format!("element={k};patch={}", patch.len());
    r
}

/// `sqrt(λ2/λ1) |v̂|² ≤ |v|² ≤ sqrt(λ1/λ2) |v̂|²`, where `|v̂|²` is
/// integrated over the mapped polygon.
pub fn check_h1_mapping(polygon: &Polygon, v: &dyn ScalarField, depth: usize) -> Result<InequalityRecord> {
    let spectrum = polygon.spectrum()?;
    let map = ReferenceMap::from_spectrum(&spectrum, polygon.area());
    let mapped = map_polygon(polygon, &map)?;
    let physical = integrate(polygon, depth, |p| v.gradient(p).norm_squared());
    let ait = map.inverse_transpose();
    let reference = integrate(&mapped, depth, |xh| (ait * v.gradient(&map.apply_inverse(xh))).norm_squared());
    let root = (spectrum.lambda1 / spectrum.lambda2).sqrt();
    let lower = reference / root;
    let upper = reference * root;
    let slack = EXACT_SLACK * upper.abs().max(f64::MIN_POSITIVE);
    if physical < lower - slack || physical > upper + slack {
        return Err(Error::SandwichViolated { lower, value: physical, upper });
    }
    Ok(InequalityRecord::new("h1_mapping", physical, reference, format!("ratio={:.3e}", spectrum.ratio())))
}

/// `‖A_K^{-T}∇v‖_{L2(K')} ≤ c ‖A_{K'}^{-T}∇v‖_{L2(K')}`, returned together
/// with the audited pairwise constant bounding the ratio.
pub fn check_neighbour_gradient(
    k: &MeshElement,
    k_prime: &MeshElement,
    v: &dyn ScalarField,
    depth: usize,
) -> (InequalityRecord, f64) {
    let lhs = mapped_gradient_sq(&k_prime.polygon, &k.map, v, depth).sqrt();
    let rhs = mapped_gradient_sq(&k_prime.polygon, &k_prime.map, v, depth).sqrt();
    let bound = neighbour_regularity(k_prime, k).gradient_bound();
    let record = InequalityRecord::new("neighbour_gradient", lhs, rhs, format!("K={};K'={}", k.id, k_prime.id));
    (record, bound)
}

/// All ordered neighbour pairs of a mesh; fails on the first pair whose
/// ratio exceeds its audited constant.
pub fn neighbour_gradient_sweep(mesh: &PolyMesh, v: &dyn ScalarField, depth: usize) -> Result<Vec<(InequalityRecord, f64)>> {
    let out: Vec<(InequalityRecord, f64)> = mesh
        .neighbour_pairs()
        .par_iter()
        .map(|&(a, b)| check_neighbour_gradient(mesh.element(a), mesh.element(b), v, depth))
        .collect();
    for (r, bound) in &out {
        if r.ratio > bound * (1.0 + EXACT_SLACK) {
            return Err(Error::SandwichViolated { lower: 0.0, value: r.ratio, upper: *bound });
        }
    }
    Ok(out)
}

/// `[0, s] × [0, 1]`.
pub fn rectangle(s: f64) -> Polygon {
    Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(s, 0.0), Point2::new(s, 1.0), Point2::new(0.0, 1.0)])
        .expect("rectangle is simple")
}

/// Monomials `x1^a x2^b` with `1 ≤ a + b ≤ max_degree`.
pub fn monomials(max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for d in 1..=max_degree {
        for a in (0..=d).rev() {
            out.push(Monomial::new(1.0, a, d - a));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub field: String,
    pub scale: f64,
    pub record: InequalityRecord,
}

/// Trace and Poincaré ratios over the stretched rectangles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalingSweep {
    pub entries: Vec<SweepEntry>,
}

impl ScalingSweep {
    /// Largest over smallest ratio across scales, per field, for one
    /// inequality. Fields whose ratio is identically zero give 1.
    pub fn spread(&self, name: &str) -> BTreeMap<String, f64> {
        let mut range: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for e in self.entries.iter().filter(|e| e.record.name == name) {
            let r = range.entry(e.field.clone()).or_insert((f64::INFINITY, 0.0));
            r.0 = r.0.min(e.record.ratio);
            r.1 = r.1.max(e.record.ratio);
        }
        range
            .into_iter()
            .map(|(f, (lo, hi))| (f, if hi == 0.0 { 1.0 } else { hi / lo }))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,context,ratio\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},field={};s={};{},{:.12e}", e.record.name, e.field, e.scale, e.record.context, e.record.ratio);
        }
        out
    }
}

/// For every scale and field: the worst edge of the trace inequality and
/// the Poincaré ratio with `ω = K`. Polynomial fields use the raw
/// coordinates; the tanh field is pulled back onto the rectangle.
pub fn scaling_sweep(scales: &[f64], max_degree: u32, include_tanh: bool, depth: usize) -> Result<ScalingSweep> {
    let jobs: Vec<(f64, usize)> = scales
        .iter()
        .flat_map(|&s| (0..monomials(max_degree).len() + include_tanh as usize).map(move |f| (s, f)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(s, f)| -> Result<Vec<SweepEntry>> {
            let rect = rectangle(s);
            let polys = monomials(max_degree);
            let pulled;
            let v: &dyn ScalarField = if f < polys.len() {
                &polys[f]
            } else {
                pulled = Pullback::<TanhLayer>::onto(tanh_layer(), &rect);
                &pulled
            };
            let mut worst: Option<InequalityRecord> = None;
            for e in 0..rect.len() {
                let r = check_trace(&rect, e, v, depth)?;
                if worst.as_ref().map_or(true, |w| r.ratio > w.ratio) {
                    worst = Some(r);
                }
            }
            let trace = worst.expect("rectangle has edges");
            let map = rect.reference_map()?;
            let poincare = check_poincare_on(&[&rect], &map, v, depth);
            let field = v.label().to_string();
            Ok(vec![
                SweepEntry { field: field.clone(), scale: s, record: trace },
                SweepEntry { field, scale: s, record: poincare },
            ])
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(ScalingSweep { entries })
}

pub fn records_csv(records: &[InequalityRecord]) -> String {
    let mut out = String::from("name,context,ratio\n");
    for r in records {
        let _ = writeln!(out, "{},{},{:.12e}", r.name, r.context, r.ratio);
    }
    out
}
