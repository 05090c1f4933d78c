//! Harmonic nodal basis on polygons and the interpolants built on it.
//!
//! Each `ψ_i` is approximated by linear finite elements on an auxiliary
//! triangulation of its element, with the hat function of node `i` as
//! boundary data.

mod subtri;

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use sprs::{FillInReduction, SymmetryCheck, TriMat};
use sprs_ldl::Ldl;

pub use subtri::SubTriangulation;

use crate::error::{Error, Result};
use crate::fields::{default_depth, integrate_on_polygon, integrate_on_segment, QuadratureRule, ScalarField};
use crate::geometry::{Point2, Polygon};
use crate::indicator::QuadDepth;
use crate::mesh::{BoundaryTag, PolyMesh};

/// Red-refinement rounds never exceed this.
pub const MAX_BASIS_DEPTH: usize = 5;
const MAX_SUB_TRIANGLES: usize = 1 << 15;

/// `max(3, ceil(log2(λ1/λ2) / 2))`, capped at [`MAX_BASIS_DEPTH`].
pub fn basis_depth(lambda_ratio: f64) -> usize {
    let wanted = (lambda_ratio.max(1.0).log2() / 2.0).ceil() as usize;
    wanted.max(3).min(MAX_BASIS_DEPTH)
}

/// Discrete harmonic functions for every vertex of one polygon.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub sub: SubTriangulation,
    pub depth: usize,
    n_loop: usize,
    /// `values[node * n_loop + i]` is `ψ_i` at sub-node `node`.
    values: Vec<f64>,
}

impl HarmonicBasis {
    pub fn n_functions(&self) -> usize {
        self.n_loop
    }

    pub fn value_at_node(&self, i: usize, node: usize) -> f64 {
        self.values[node * self.n_loop + i]
    }

    pub fn node_values(&self, node: usize) -> &[f64] {
        &self.values[node * self.n_loop..(node + 1) * self.n_loop]
    }

    /// `Σ c_i ψ_i` at every sub-node.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.n_loop);
        (0..self.sub.len())
            .map(|node| self.node_values(node).iter().zip(coeffs).map(|(p, c)| p * c).sum())
            .collect()
    }

    /// `Σ c_i ψ_i(p)`, or `None` outside the polygon.
    pub fn eval(&self, coeffs: &[f64], p: &Point2) -> Option<f64> {
        let (t, l) = self.sub.locate(p)?;
        let tri = self.sub.triangles[t];
        let mut sum = 0.0;
        for k in 0..3 {
            let vals = self.node_values(tri[k]);
            sum += l[k] * vals.iter().zip(coeffs).map(|(p, c)| p * c).sum::<f64>();
        }
        Some(sum)
    }

    pub fn eval_basis(&self, i: usize, p: &Point2) -> Option<f64> {
        let mut e = vec![0.0; self.n_loop];
        e[i] = 1.0;
        self.eval(&e, p)
    }
}

/// Solves the discrete Laplace problems of all vertices of `polygon`.
pub fn build_basis(polygon: &Polygon, depth: usize) -> Result<HarmonicBasis> {
    let initial = SubTriangulation::new(polygon, 0)?.triangles.len();
    let mut depth = depth;
    while depth > 0 && initial << (2 * depth) > MAX_SUB_TRIANGLES {
        depth -= 1;
    }
    let sub = SubTriangulation::new(polygon, depth)?;
    sub.check()?;
    let n_loop = sub.n_loop();
    let n_sub = sub.len();

    let mut unknown = vec![usize::MAX; n_sub];
    let mut n_int = 0;
    for (node, b) in sub.boundary.iter().enumerate() {
        if b.is_none() {
            unknown[node] = n_int;
            n_int += 1;
        }
    }

    let mut values = vec![0.0; n_sub * n_loop];
    for node in 0..n_sub {
        if let Some(w) = sub.boundary_weights(node) {
            for (i, wi) in w {
                values[node * n_loop + i] += wi;
            }
        }
    }
    if n_int > 0 {
        let mut stiffness = TriMat::new((n_int, n_int));
        let mut rhs = vec![vec![0.0; n_int]; n_loop];
        for t in 0..sub.triangles.len() {
            let tri = sub.triangles[t];
            let area = sub.area(t);
            let e: [Point2; 3] =
                std::array::from_fn(|k| sub.nodes[tri[(k + 2) % 3]] - sub.nodes[tri[(k + 1) % 3]]);
            for a in 0..3 {
                let ia = unknown[tri[a]];
                if ia == usize::MAX {
                    continue;
                }
                for b in 0..3 {
                    let kab = e[a].dot(&e[b]) / (4.0 * area);
                    let ib = unknown[tri[b]];
                    if ib != usize::MAX {
                        stiffness.add_triplet(ia, ib, kab);
                    } else {
                        let vals = &values[tri[b] * n_loop..(tri[b] + 1) * n_loop];
                        for (i, g) in vals.iter().enumerate() {
                            if *g != 0.0 {
                                rhs[i][ia] -= kab * g;
                            }
                        }
                    }
                }
            }
        }
        let matrix = stiffness.to_csc::<usize>();
        let ldl = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .numeric(matrix.view())
            .map_err(|e| Error::SolveFailed(format!("{e:?}")))?;
        if ldl.d().iter().any(|d| !(*d > 0.0)) {
            return Err(Error::SolveFailed("stiffness matrix is not positive definite".into()));
        }
        for (i, b) in rhs.iter().enumerate() {
            let x: Vec<f64> = ldl.solve(&b[..]);
            for (node, &u) in unknown.iter().enumerate() {
                if u != usize::MAX {
                    values[node * n_loop + i] = x[u];
                }
            }
        }
    }
    Ok(HarmonicBasis { sub, depth, n_loop, values })
}

/// Harmonic basis of one mesh element, labelled with global node ids.
#[derive(Debug, Clone)]
pub struct LocalHarmonicBasis {
    pub element: usize,
    pub nodes: Vec<usize>,
    pub basis: Arc<HarmonicBasis>,
}

impl LocalHarmonicBasis {
    fn local_coeffs(&self, coeffs: &InterpolantCoefficients) -> Vec<f64> {
        self.nodes.iter().map(|&n| coeffs.values[n]).collect()
    }
}

/// Bases keyed by element geometry and depth, so that elements surviving a
/// refinement step unchanged are not solved again.
#[derive(Debug, Default)]
pub struct BasisCache {
    map: Mutex<HashMap<u64, Arc<HarmonicBasis>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

fn geometry_key(polygon: &Polygon, depth: usize) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    depth.hash(&mut h);
    for v in polygon.vertices() {
        v.x.to_bits().hash(&mut h);
        v.y.to_bits().hash(&mut h);
    }
    h.finish()
}

impl BasisCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, polygon: &Polygon, depth: usize) -> Result<Arc<HarmonicBasis>> {
        let key = geometry_key(polygon, depth);
        if let Some(b) = self.map.lock().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(b.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let built = Arc::new(build_basis(polygon, depth)?);
        self.map.lock().expect("cache lock").insert(key, built.clone());
        Ok(built)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().expect("cache lock").clear();
    }
}

/// Basis of element `k`; `depth` defaults to [`basis_depth`] of its anisotropy.
pub fn element_basis(
    mesh: &PolyMesh,
    k: usize,
    depth: Option<usize>,
    cache: Option<&BasisCache>,
) -> Result<LocalHarmonicBasis> {
    let element = mesh.element(k);
    let depth = depth.unwrap_or_else(|| basis_depth(element.spectrum.ratio()));
    let basis = match cache {
        Some(c) => c.get_or_build(&element.polygon, depth)?,
        None => Arc::new(build_basis(&element.polygon, depth)?),
    };
    Ok(LocalHarmonicBasis { element: k, nodes: element.nodes.clone(), basis })
}

/// Bases of all elements of a mesh.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub bases: Vec<LocalHarmonicBasis>,
}

impl BasisSet {
    pub fn build(mesh: &PolyMesh, depth: Option<usize>, cache: Option<&BasisCache>) -> Result<Self> {
        let bases = (0..mesh.n_elements())
            .into_par_iter()
            .map(|k| element_basis(mesh, k, depth, cache))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisSet { bases })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Pointwise,
    Clement,
    ScottZhang,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Pointwise => "pointwise",
            Scheme::Clement => "clement",
            Scheme::ScottZhang => "scott_zhang",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pointwise" => Ok(Scheme::Pointwise),
            "clement" => Ok(Scheme::Clement),
            "scott_zhang" | "scottzhang" => Ok(Scheme::ScottZhang),
            other => Err(Error::InvalidConfig(format!("unknown interpolation scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolantCoefficients {
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

/// Edge used for the Scott-Zhang mean at `node`: Dirichlet edges for nodes
/// on the closed Dirichlet boundary, other edges otherwise. The longest
/// admissible edge wins, ties going to the lower id.
pub fn scott_zhang_edge(mesh: &PolyMesh, node: usize) -> Result<usize> {
    let on_dirichlet = mesh.node(node).tag == BoundaryTag::Dirichlet;
    let mut best: Option<(usize, f64)> = None;
    for k in mesh.node_patch(node) {
        for &e in &mesh.element(k).edges {
            let edge = mesh.edge(e);
            if (edge.nodes.0 != node && edge.nodes.1 != node) || (edge.tag == BoundaryTag::Dirichlet) != on_dirichlet {
                continue;
            }
            let len = (mesh.node(edge.nodes.0).coords - mesh.node(edge.nodes.1).coords).norm();
            let better = match best {
                None => true,
                Some((be, bl)) => len > bl || (len == bl && e < be),
            };
            if better {
                best = Some((e, len));
            }
        }
    }
    best.map(|(e, _)| e).ok_or(Error::NoAdmissibleEdge { node })
}

/// Gauss points per sub-segment and number of sub-segments for edge means.
fn segment_pieces(len: f64) -> usize {
    (1usize << default_depth(len).saturating_sub(2)).max(1)
}

pub fn edge_mean(mesh: &PolyMesh, e: usize, v: &dyn ScalarField) -> f64 {
    let (a, b) = mesh.edge(e).nodes;
    let (pa, pb) = (mesh.node(a).coords, mesh.node(b).coords);
    let len = (pb - pa).norm();
    integrate_on_segment(&pa, &pb, |p| v.value(p), 4, segment_pieces(len)) / len
}

/// `∫_K v` for every element.
pub fn element_integrals(mesh: &PolyMesh, v: &dyn ScalarField, depth: QuadDepth) -> Result<Vec<f64>> {
    let rule = QuadratureRule::degree7();
    mesh.elements()
        .par_iter()
        .map(|k| integrate_on_polygon(&k.polygon, |p| v.value(p), rule, depth.for_polygon(&k.polygon)))
        .collect()
}

pub fn coefficients(mesh: &PolyMesh, v: &dyn ScalarField, scheme: Scheme) -> Result<InterpolantCoefficients> {
    let values = match scheme {
        Scheme::Pointwise => mesh.nodes().iter().map(|n| v.value(&n.coords)).collect(),
        Scheme::Clement => {
            let integrals = element_integrals(mesh, v, QuadDepth::Auto)?;
            mesh.nodes()
                .iter()
                .map(|n| {
                    if n.tag == BoundaryTag::Dirichlet {
                        return 0.0;
                    }
                    let patch = mesh.node_patch(n.id);
                    let area: f64 = patch.iter().map(|&k| mesh.element(k).polygon.area()).sum();
                    patch.iter().map(|&k| integrals[k]).sum::<f64>() / area
                })
                .collect()
        }
        Scheme::ScottZhang => (0..mesh.n_nodes())
            .into_par_iter()
            .map(|i| scott_zhang_edge(mesh, i).map(|e| edge_mean(mesh, e, v)))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(InterpolantCoefficients { values, scheme })
}

/// `ℑv(p)`, locating `p` in the mesh and then in the element's sub-triangulation.
pub fn interpolant_value(mesh: &PolyMesh, set: &BasisSet, coeffs: &InterpolantCoefficients, p: &Point2) -> Result<f64> {
    let k = mesh.locate(p).ok_or(Error::PointOutsideMesh { x: p.x, y: p.y })?;
    let local = &set.bases[k];
    local
        .basis
        .eval(&local.local_coeffs(coeffs), p)
        .ok_or(Error::PointOutsideMesh { x: p.x, y: p.y })
}

/// `∫_K (v - ℑv)²` with the element's basis.
pub fn element_l2_error_sq(
    mesh: &PolyMesh,
    local: &LocalHarmonicBasis,
    v: &dyn ScalarField,
    coeffs: &InterpolantCoefficients,
) -> f64 {
    let basis = &local.basis;
    let nodal = basis.combine(&local.local_coeffs(coeffs));
    // quadrature pieces per sub-triangle so that the total resolution
    // matches what the element would get on its own
    let h = mesh.element(local.element).polygon.diameter();
    let extra = default_depth(h).saturating_sub(basis.depth);
    let rule = QuadratureRule::degree7();
    let mut sum = 0.0;
    for t in &basis.sub.triangles {
        let p: [Point2; 3] = std::array::from_fn(|k| basis.sub.nodes[t[k]]);
        let (u0, u1, u2) = (nodal[t[0]], nodal[t[1]], nodal[t[2]]);
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let det = crate::geometry::cross(&e1, &e2);
        // gradient of the linear interpolant on this triangle
        let g = Point2::new(
            ((u1 - u0) * e2.y - (u2 - u0) * e1.y) / det,
            ((u2 - u0) * e1.x - (u1 - u0) * e2.x) / det,
        );
        crate::fields::quadrature_on_triangle(&p, rule, extra, &mut |q, w| {
            let d = v.value(&q) - (u0 + g.dot(&(q - p[0])));
            sum += w * d * d;
        });
    }
    sum
}

/// `(Σ_K ∫_K (v - ℑv)²)^{1/2}`.
pub fn l2_error(mesh: &PolyMesh, v: &dyn ScalarField, coeffs: &InterpolantCoefficients, depth: Option<usize>) -> Result<f64> {
    l2_error_with(mesh, v, coeffs, depth, None)
}

pub fn l2_error_with(
    mesh: &PolyMesh,
    v: &dyn ScalarField,
    coeffs: &InterpolantCoefficients,
    depth: Option<usize>,
    cache: Option<&BasisCache>,
) -> Result<f64> {
    let parts = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| element_basis(mesh, k, depth, cache).map(|b| element_l2_error_sq(mesh, &b, v, coeffs)))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}
