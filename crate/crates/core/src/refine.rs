//! Marking and bisection of polygonal elements.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::{perp, split_polygon_by_line_with_tol, CutEnd, Mat2, Point2, Polygon, SplitVertex};
use crate::indicator::{eta_global, gram_major_axis, IndicatorReport, QuadDepth};
use crate::mesh::{build_mesh, BoundarySpec, BoundaryTag, MeshElement, PolyMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Bisect every element along its covariance axes.
    Uniform,
    /// Bisect marked elements orthogonally to their largest covariance eigenvector.
    Isotropic,
    /// Bisect marked elements orthogonally to the largest eigenvector of their Gram matrix.
    Anisotropic,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Isotropic => "isotropic",
            Strategy::Anisotropic => "anisotropic",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Strategy::Uniform),
            "isotropic" => Ok(Strategy::Isotropic),
            "anisotropic" => Ok(Strategy::Anisotropic),
            other => Err(Error::InvalidConfig(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub strategy: Strategy,
    pub marking_factor: f64,
    pub max_levels: usize,
    /// Cut endpoints closer than `snap_tol * h_K` to a vertex snap onto it.
    pub snap_tol: f64,
    pub depth: QuadDepth,
}

impl RefineConfig {
    pub fn new(strategy: Strategy, max_levels: usize) -> Self {
        RefineConfig { strategy, marking_factor: 0.9, max_levels, snap_tol: 1e-9, depth: QuadDepth::Auto }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.marking_factor > 0.0 && self.marking_factor <= 1.0) {
            return Err(Error::InvalidConfig(format!("marking factor {} outside (0, 1]", self.marking_factor)));
        }
        if self.max_levels < 1 {
            return Err(Error::InvalidConfig("max_levels must be at least 1".into()));
        }
        if !(self.snap_tol >= 0.0 && self.snap_tol < 0.5) {
            return Err(Error::InvalidConfig(format!("snap tolerance {} outside [0, 0.5)", self.snap_tol)));
        }
        Ok(())
    }
}

/// Elements with `η_K > factor · η² / n`.
pub fn mark(report: &IndicatorReport, n_elements: usize, factor: f64) -> Vec<usize> {
    if n_elements == 0 {
        return Vec::new();
    }
    let eta2: f64 = report.eta_local.iter().sum();
    let threshold = factor * eta2 / n_elements as f64;
    report
        .eta_local
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > threshold)
        .map(|(k, _)| k)
        .collect()
}

/// Direction of the cut line for `element`. `gram` is only used by the
/// anisotropic strategy; a missing or vanishing Gram falls back to the
/// isotropic direction.
pub fn split_direction(element: &MeshElement, gram: Option<&Mat2>, strategy: Strategy) -> Point2 {
    let axis = match strategy {
        Strategy::Anisotropic => gram.and_then(gram_major_axis).unwrap_or(element.spectrum.u1),
        Strategy::Uniform | Strategy::Isotropic => element.spectrum.u1,
    };
    perp(&axis)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefinementStep {
    pub level: usize,
    /// Parent id in the old mesh → its two children in the new mesh.
    pub children: BTreeMap<usize, [usize; 2]>,
    /// Parent id in the new mesh for every element (identity for unsplit ones).
    pub parent_of: Vec<usize>,
    pub new_nodes: Vec<usize>,
    /// Cut-line direction actually used per split parent.
    pub directions: BTreeMap<usize, Point2>,
    /// Marked elements that could not be bisected.
    pub skipped: Vec<usize>,
}

struct Workspace {
    coords: Vec<Point2>,
    tags: Vec<BoundaryTag>,
    loops: Vec<Vec<usize>>,
    /// Directed edge → index into `loops`.
    owner: HashMap<(usize, usize), usize>,
}

impl Workspace {
    fn new(mesh: &PolyMesh) -> Self {
        let loops = mesh.loops();
        let mut owner = HashMap::new();
        for (i, lp) in loops.iter().enumerate() {
            for k in 0..lp.len() {
                owner.insert((lp[k], lp[(k + 1) % lp.len()]), i);
            }
        }
        Workspace { coords: mesh.coords(), tags: mesh.tags(), loops, owner }
    }

    fn polygon(&self, slot: usize) -> Result<Polygon> {
        Polygon::new(self.loops[slot].iter().map(|&v| self.coords[v]).collect())
    }

    /// Adds `q` as a node on the edge `a → b` of `slot`, also inserting it
    /// into the loop on the other side of the edge.
    fn insert_on_edge(&mut self, a: usize, b: usize, q: Point2) -> usize {
        let n = self.coords.len();
        self.coords.push(q);
        let tag = match self.owner.get(&(b, a)).copied() {
            Some(other) => {
                let lp = &mut self.loops[other];
                let m = lp.len();
                let pos = (0..m).find(|&i| lp[i] == b && lp[(i + 1) % m] == a).expect("twin edge present");
                lp.insert(pos + 1, n);
                self.owner.remove(&(b, a));
                self.owner.insert((b, n), other);
                self.owner.insert((n, a), other);
                BoundaryTag::Interior
            }
            None if self.tags[a] == BoundaryTag::Dirichlet && self.tags[b] == BoundaryTag::Dirichlet => {
                BoundaryTag::Dirichlet
            }
            None => BoundaryTag::Neumann,
        };
        self.tags.push(tag);
        n
    }

    fn set_loop(&mut self, slot: usize, lp: Vec<usize>) {
        for k in 0..lp.len() {
            self.owner.insert((lp[k], lp[(k + 1) % lp.len()]), slot);
        }
        self.loops[slot] = lp;
    }

    fn remove_edges(&mut self, slot: usize) {
        let lp = &self.loops[slot];
        for k in 0..lp.len() {
            self.owner.remove(&(lp[k], lp[(k + 1) % lp.len()]));
        }
    }
}

/// Bisects the marked elements (every element for `Uniform`) through their
/// centroids, inserting the cut endpoints into neighbouring loops as
/// hanging nodes. Elements are processed in ascending id order.
pub fn refine(
    mesh: &PolyMesh,
    marked: &[usize],
    strategy: Strategy,
    report: Option<&IndicatorReport>,
    snap_tol: f64,
) -> Result<(PolyMesh, RefinementStep)> {
    let mut targets: Vec<usize> = match strategy {
        Strategy::Uniform => (0..mesh.n_elements()).collect(),
        _ => marked.to_vec(),
    };
    targets.sort_unstable();
    targets.dedup();
    if let Some(&bad) = targets.iter().find(|&&k| k >= mesh.n_elements()) {
        return Err(Error::InvalidConfig(format!("marked element {bad} does not exist")));
    }

    let mut ws = Workspace::new(mesh);
    // slots of each original element, in output order
    let mut slots: Vec<Vec<usize>> = (0..mesh.n_elements()).map(|k| vec![k]).collect();
    let mut step = RefinementStep::default();

    for &k in &targets {
        let element = mesh.element(k);
        let gram = report.and_then(|r| r.gram.get(k)).map(|g| &g.matrix);
        let primary = split_direction(element, gram, strategy);
        let polygon = ws.polygon(k)?;
        let anchor = element.polygon.centroid();

        let mut result = None;
        for dir in [primary, perp(&primary)] {
            match split_polygon_by_line_with_tol(&polygon, anchor, dir, snap_tol) {
                Ok(split) => {
                    result = Some((split, dir));
                    break;
                }
                Err(err) => log::debug!("element {k}: cut along {dir:?} failed: {err}"),
            }
        }
        let Some((split, dir)) = result else {
            log::warn!("element {k} could not be bisected; left unrefined");
            step.skipped.push(k);
            continue;
        };

        let lp = ws.loops[k].clone();
        let m = lp.len();
        let mut cut_nodes = [0usize; 2];
        for (e, end) in split.ends.iter().enumerate() {
            cut_nodes[e] = match *end {
                CutEnd::Vertex(i) => lp[i],
                CutEnd::Edge(..) => 0, // resolved below
            };
        }
        ws.remove_edges(k);
        for (e, end) in split.ends.iter().enumerate() {
            if let CutEnd::Edge(i, q) = *end {
                // the slot's own edges are gone, so only the neighbour side is touched
                cut_nodes[e] = ws.insert_on_edge(lp[i], lp[(i + 1) % m], q);
            }
        }
        let child_loop = |pieces: &[SplitVertex]| -> Vec<usize> {
            pieces
                .iter()
                .map(|v| match *v {
                    SplitVertex::Original(i) => lp[i],
                    SplitVertex::Cut(e) => cut_nodes[e],
                })
                .collect()
        };
        let first = child_loop(&split.loops[0]);
        let second = child_loop(&split.loops[1]);
        let new_slot = ws.loops.len();
        ws.loops.push(Vec::new());
        ws.set_loop(k, first);
        ws.set_loop(new_slot, second);
        slots[k].push(new_slot);
        step.directions.insert(k, dir);
    }

    let n_old_nodes = mesh.n_nodes();
    let mut loops = Vec::with_capacity(ws.loops.len());
    for (parent, group) in slots.iter().enumerate() {
        let first_id = loops.len();
        for &slot in group {
            loops.push(std::mem::take(&mut ws.loops[slot]));
            step.parent_of.push(parent);
        }
        if group.len() == 2 {
            step.children.insert(parent, [first_id, first_id + 1]);
        }
    }
    step.new_nodes = (n_old_nodes..ws.coords.len()).collect();
    let refined = build_mesh(ws.coords, loops, BoundarySpec::NodeTags(ws.tags))?;
    Ok((refined, step))
}

/// One level of an adaptive run.
#[derive(Debug, Clone)]
pub struct Level {
    pub level: usize,
    pub mesh: PolyMesh,
    /// Indicators with `marked` filled in.
    pub report: IndicatorReport,
    /// The refinement that produced this level (none for level 0).
    pub step: Option<RefinementStep>,
}

/// Indicators for one level, with the set that the strategy will refine.
pub fn evaluate_level(mesh: &PolyMesh, v: &dyn ScalarField, config: &RefineConfig) -> Result<IndicatorReport> {
    let mut report = eta_global(mesh, v, config.depth)?;
    report.marked = match config.strategy {
        Strategy::Uniform => (0..mesh.n_elements()).collect(),
        _ => mark(&report, mesh.n_elements(), config.marking_factor),
    };
    Ok(report)
}

/// Estimate, mark, refine, repeated until `max_levels` or until nothing is marked.
pub fn adaptive_loop(initial: PolyMesh, v: &dyn ScalarField, config: &RefineConfig) -> Result<Vec<Level>> {
    adaptive_loop_with(initial, v, config, |_| {})
}

/// As [`adaptive_loop`], calling `on_level` as soon as each level is ready.
pub fn adaptive_loop_with(
    initial: PolyMesh,
    v: &dyn ScalarField,
    config: &RefineConfig,
    mut on_level: impl FnMut(&Level),
) -> Result<Vec<Level>> {
    config.validate()?;
    let mut levels = Vec::new();
    let mut mesh = initial;
    let mut step = None;
    for level in 0..=config.max_levels {
        let report = evaluate_level(&mesh, v, config)?;
        let current = Level { level, mesh, report, step: step.take() };
        on_level(&current);
        let done = level == config.max_levels || current.report.marked.is_empty();
        if !done {
            let (next, mut s) =
                refine(&current.mesh, &current.report.marked, config.strategy, Some(&current.report), config.snap_tol)?;
            s.level = level + 1;
            if s.children.is_empty() {
                levels.push(current);
                break;
            }
            mesh = next;
            step = Some(s);
            levels.push(current);
        } else {
            levels.push(current);
            break;
        }
    }
    Ok(levels)
}
