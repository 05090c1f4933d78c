//! Polygonal meshes with hanging nodes, patches and a plain text format.

mod generate;
mod io;

use std::collections::HashMap;

pub use generate::{grid, polygonal, unit_square};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

use crate::error::{Error, Result};
use crate::geometry::{cross, CovarianceSpectrum, Point2, Polygon, ReferenceMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Interior = 0,
    Neumann = 1,
    Dirichlet = 2,
}

impl BoundaryTag {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BoundaryTag::Interior),
            1 => Some(BoundaryTag::Neumann),
            2 => Some(BoundaryTag::Dirichlet),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// How boundary tags are assigned when a mesh is built.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    /// Every boundary node gets this tag, interior nodes get `Interior`.
    Uniform(BoundaryTag),
    /// Explicit per-node tags, checked against the topology.
    NodeTags(Vec<BoundaryTag>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshNode {
    pub id: usize,
    pub coords: Point2,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshEdge {
    pub id: usize,
    /// Endpoints, smaller id first.
    pub nodes: (usize, usize),
    /// One element for boundary edges, two for interior edges.
    pub elements: Vec<usize>,
    pub tag: BoundaryTag,
}

impl MeshEdge {
    pub fn is_boundary(&self) -> bool {
        self.elements.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct MeshElement {
    pub id: usize,
    /// Counter-clockwise node ids, hanging nodes included.
    pub nodes: Vec<usize>,
    /// `edges[k]` joins `nodes[k]` and `nodes[k + 1]`.
    pub edges: Vec<usize>,
    pub polygon: Polygon,
    pub spectrum: CovarianceSpectrum,
    pub map: ReferenceMap,
}

#[derive(Debug, Clone)]
pub struct PolyMesh {
    nodes: Vec<MeshNode>,
    edges: Vec<MeshEdge>,
    elements: Vec<MeshElement>,
    node_elements: Vec<Vec<usize>>,
    edge_index: HashMap<(usize, usize), usize>,
    domain_area: f64,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds and validates a mesh from node coordinates and element loops.
pub fn build_mesh(coords: Vec<Point2>, loops: Vec<Vec<usize>>, boundary: BoundarySpec) -> Result<PolyMesh> {
    let n_nodes = coords.len();
    if let Some(p) = coords.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidTopology(format!("non-finite node coordinates {p:?}")));
    }
    if loops.is_empty() {
        return Err(Error::InvalidTopology("mesh has no elements".into()));
    }

    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<MeshEdge> = Vec::new();
    let mut elements: Vec<MeshElement> = Vec::with_capacity(loops.len());
    let mut node_elements: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];

    for (id, lp) in loops.into_iter().enumerate() {
        if lp.len() < 3 {
            return Err(Error::InvalidTopology(format!("element {id} has fewer than 3 nodes")));
        }
        if let Some(&v) = lp.iter().find(|&&v| v >= n_nodes) {
            return Err(Error::InvalidTopology(format!("element {id} references missing node {v}")));
        }
        let mut seen = lp.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTopology(format!("element {id} repeats a node")));
        }
        let verts: Vec<Point2> = lp.iter().map(|&v| coords[v]).collect();
        let polygon = Polygon::new(verts).map_err(|err| match err {
            Error::DegenerateElement(m) => Error::DegenerateElement(format!("element {id}: {m}")),
            Error::InvalidPolygon(m) => Error::InvalidTopology(format!("element {id}: {m}")),
            other => other,
        })?;
        let spectrum = polygon.spectrum()?;
        let map = ReferenceMap::from_spectrum(&spectrum, polygon.area());

        let m = lp.len();
        let mut elem_edges = Vec::with_capacity(m);
        for k in 0..m {
            let (a, b) = (lp[k], lp[(k + 1) % m]);
            if directed.insert((a, b), id).is_some() {
                return Err(Error::InvalidTopology(format!(
                    "directed edge {a}->{b} used twice (overlap or orientation mismatch)"
                )));
            }
            let e = *edge_index.entry(key(a, b)).or_insert_with(|| {
                edges.push(MeshEdge {
                    id: edges.len(),
                    nodes: key(a, b),
                    elements: Vec::new(),
                    tag: BoundaryTag::Interior,
                });
                edges.len() - 1
            });
            edges[e].elements.push(id);
            elem_edges.push(e);
            node_elements[a].push(id);
        }
        elements.push(MeshElement { id, nodes: lp, edges: elem_edges, polygon, spectrum, map });
    }

    let mut on_boundary = vec![false; n_nodes];
    let mut degree = vec![0i64; n_nodes];
    let mut domain_area = 0.0;
    for e in &edges {
        if e.is_boundary() {
            let (a, b) = e.nodes;
            let (from, to) = if directed.contains_key(&(a, b)) { (a, b) } else { (b, a) };
            on_boundary[a] = true;
            on_boundary[b] = true;
            degree[from] += 1;
            degree[to] -= 1;
            domain_area += 0.5 * cross(&coords[from], &coords[to]);
        }
    }
    if let Some(v) = degree.iter().position(|&d| d != 0) {
        return Err(Error::InvalidTopology(format!("boundary is not closed at node {v}")));
    }

    let tags: Vec<BoundaryTag> = match boundary {
        BoundarySpec::Uniform(tag) => {
            if tag == BoundaryTag::Interior {
                return Err(Error::InvalidTopology("boundary tag cannot be interior".into()));
            }
            on_boundary.iter().map(|&b| if b { tag } else { BoundaryTag::Interior }).collect()
        }
        BoundarySpec::NodeTags(tags) => {
            if tags.len() != n_nodes {
                return Err(Error::InvalidTopology(format!("{} tags for {} nodes", tags.len(), n_nodes)));
            }
            for (v, (&t, &b)) in tags.iter().zip(&on_boundary).enumerate() {
                if b == (t == BoundaryTag::Interior) {
                    return Err(Error::InvalidTopology(format!("node {v} tag {t:?} does not match its position")));
                }
            }
            tags
        }
    };
    for e in edges.iter_mut().filter(|e| e.is_boundary()) {
        let both = tags[e.nodes.0] == BoundaryTag::Dirichlet && tags[e.nodes.1] == BoundaryTag::Dirichlet;
        e.tag = if both { BoundaryTag::Dirichlet } else { BoundaryTag::Neumann };
    }

    let nodes = coords
        .into_iter()
        .zip(tags)
        .enumerate()
        .map(|(id, (coords, tag))| MeshNode { id, coords, tag })
        .collect();
    let mesh = PolyMesh { nodes, edges, elements, node_elements, edge_index, domain_area };
    mesh.check_invariants()?;
    Ok(mesh)
}

impl PolyMesh {
    pub fn nodes(&self) -> &[MeshNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn elements(&self) -> &[MeshElement] {
        &self.elements
    }

    pub fn node(&self, i: usize) -> &MeshNode {
        &self.nodes[i]
    }

    pub fn edge(&self, e: usize) -> &MeshEdge {
        &self.edges[e]
    }

    pub fn element(&self, k: usize) -> &MeshElement {
        &self.elements[k]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Nodes not on the Dirichlet boundary.
    pub fn ndof(&self) -> usize {
        self.nodes.iter().filter(|n| n.tag != BoundaryTag::Dirichlet).count()
    }

    pub fn coords(&self) -> Vec<Point2> {
        self.nodes.iter().map(|n| n.coords).collect()
    }

    pub fn loops(&self) -> Vec<Vec<usize>> {
        self.elements.iter().map(|k| k.nodes.clone()).collect()
    }

    pub fn tags(&self) -> Vec<BoundaryTag> {
        self.nodes.iter().map(|n| n.tag).collect()
    }

    /// Area enclosed by the boundary edges.
    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    pub fn total_element_area(&self) -> f64 {
        self.elements.iter().map(|k| k.polygon.area()).sum()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }

    /// ω_i: elements whose closure contains node `i`.
    pub fn node_patch(&self, i: usize) -> Vec<usize> {
        self.node_elements[i].clone()
    }

    pub fn edge_patch(&self, e: usize) -> Vec<usize> {
        let (a, b) = self.edges[e].nodes;
        self.union_of_patches([a, b].into_iter())
    }

    pub fn element_patch(&self, k: usize) -> Vec<usize> {
        self.union_of_patches(self.elements[k].nodes.iter().copied())
    }

    fn union_of_patches(&self, nodes: impl Iterator<Item = usize>) -> Vec<usize> {
        let mut out: Vec<usize> = nodes.flat_map(|i| self.node_elements[i].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Largest number of elements sharing one node.
    pub fn max_node_valence(&self) -> usize {
        self.node_elements.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Ordered pairs `(k1, k2)`, `k1 != k2`, of elements sharing a node.
    pub fn neighbour_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for k in 0..self.elements.len() {
            for j in self.element_patch(k) {
                if j != k {
                    pairs.push((k, j));
                }
            }
        }
        pairs
    }

    /// Index of the element containing `p`, if any.
    pub fn locate(&self, p: &Point2) -> Option<usize> {
        self.elements.iter().position(|k| {
            let (lo, hi) = k.polygon.bounding_box();
            let tol = 1e-12 * k.polygon.diameter();
            p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol && k.polygon.contains(p)
        })
    }

    /// Re-checks every structural invariant; `build_mesh` calls this too.
    pub fn check_invariants(&self) -> Result<()> {
        for (k, elem) in self.elements.iter().enumerate() {
            let m = elem.nodes.len();
            for (j, &e) in elem.edges.iter().enumerate() {
                let edge = &self.edges[e];
                if edge.nodes != key(elem.nodes[j], elem.nodes[(j + 1) % m]) || !edge.elements.contains(&k) {
                    return Err(Error::InvalidTopology(format!("element {k} and edge {e} disagree")));
                }
            }
        }
        for edge in &self.edges {
            if edge.elements.is_empty() || edge.elements.len() > 2 {
                return Err(Error::InvalidTopology(format!("edge {} has {} elements", edge.id, edge.elements.len())));
            }
            for &k in &edge.elements {
                if !self.elements[k].edges.contains(&edge.id) {
                    return Err(Error::InvalidTopology(format!("edge {} not listed by element {k}", edge.id)));
                }
            }
            let boundary_tag = edge.tag != BoundaryTag::Interior;
            if boundary_tag != edge.is_boundary() {
                return Err(Error::InvalidTopology(format!("edge {} has tag {:?}", edge.id, edge.tag)));
            }
        }
        for (i, patch) in self.node_elements.iter().enumerate() {
            if patch.is_empty() {
                return Err(Error::InvalidTopology(format!("node {i} belongs to no element")));
            }
            if patch.iter().any(|&k| !self.elements[k].nodes.contains(&i)) {
                return Err(Error::InvalidTopology(format!("node {i} incidence is inconsistent")));
            }
        }
        let total = self.total_element_area();
        if (total - self.domain_area).abs() > 1e-10 * self.domain_area.abs() {
            return Err(Error::InvalidTopology(format!(
                "element areas sum to {total} but the boundary encloses {}",
                self.domain_area
            )));
        }
        self.check_no_t_junctions()
    }

    /// Every node lying inside an edge must be a vertex of that edge's
    /// elements, i.e. hanging nodes are present in all adjacent loops.
    fn check_no_t_junctions(&self) -> Result<()> {
        let n = self.nodes.len();
        let (mut lo, mut hi) = (self.nodes[0].coords, self.nodes[0].coords);
        for node in &self.nodes {
            lo = lo.inf(&node.coords);
            hi = hi.sup(&node.coords);
        }
        let extent = (hi - lo).max().max(f64::MIN_POSITIVE);
        let cells = ((n as f64).sqrt().ceil() as usize).clamp(1, 2048);
        let size = extent / cells as f64 * (1.0 + 1e-9);
        let cell_of = |p: &Point2| {
            let cx = (((p.x - lo.x) / size) as usize).min(cells - 1);
            let cy = (((p.y - lo.y) / size) as usize).min(cells - 1);
            (cx, cy)
        };
        let mut buckets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for node in &self.nodes {
            buckets.entry(cell_of(&node.coords)).or_default().push(node.id);
        }
        let mut visited: Vec<(usize, usize)> = Vec::new();
        for edge in &self.edges {
            let (a, b) = edge.nodes;
            let (pa, pb) = (self.nodes[a].coords, self.nodes[b].coords);
            let len = (pb - pa).norm();
            let tol = 1e-10 * len;
            let steps = ((len / size) * 2.0).ceil() as usize + 1;
            visited.clear();
            for s in 0..=steps {
                let (cx, cy) = cell_of(&(pa + (pb - pa) * (s as f64 / steps as f64)));
                for dx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                    for dy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
                        visited.push((dx, dy));
                    }
                }
            }
            visited.sort_unstable();
            visited.dedup();
            for cell in &visited {
                let Some(ids) = buckets.get(cell) else { continue };
                for &i in ids {
                    if i == a || i == b {
                        continue;
                    }
                    let p = self.nodes[i].coords;
                    let t = (p - pa).dot(&(pb - pa)) / (len * len);
                    if t <= 0.0 || t >= 1.0 {
                        continue;
                    }
                    let dist = cross(&(pb - pa), &(p - pa)).abs() / len;
                    if dist <= tol {
                        return Err(Error::InvalidTopology(format!(
                            "node {i} lies on edge {a}-{b} but is missing from its loops"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(p: &[(f64, f64)]) -> Vec<Point2> {
        p.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn single_square() {
        let m = unit_square();
        assert_eq!((m.n_nodes(), m.edges().len(), m.n_elements()), (4, 4, 1));
        assert!(m.edges().iter().all(MeshEdge::is_boundary));
        assert_eq!(m.node_patch(2), vec![0]);
        assert_eq!(m.edge_patch(3), vec![0]);
    }

    #[test]
    fn grid_counts_and_patches() {
        let m = grid(2, 2).unwrap();
        assert_eq!((m.n_nodes(), m.edges().len(), m.n_elements()), (9, 12, 4));
        assert_eq!(m.node_patch(4), vec![0, 1, 2, 3]);
        let interior: Vec<_> = m.edges().iter().filter(|e| !e.is_boundary()).collect();
        assert_eq!(interior.len(), 4);
        for e in interior {
            assert_eq!(m.edge_patch(e.id), vec![0, 1, 2, 3]);
        }
        for k in 0..4 {
            assert!(m.element_patch(k).contains(&k));
        }
        assert_eq!(m.node(4).tag, BoundaryTag::Interior);
        assert_eq!(m.node(0).tag, BoundaryTag::Neumann);
    }

    #[test]
    fn hanging_node_in_neighbour() {
        // left square split at x = 0.5, right square carries node (1, 0.5)
        let coords = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (2.0, 0.0), (2.0, 1.0), (1.0, 0.5)]);
        let loops = vec![vec![0, 1, 6, 2, 3], vec![1, 4, 5, 2, 6]];
        let m = build_mesh(coords.clone(), loops, BoundarySpec::Uniform(BoundaryTag::Neumann)).unwrap();
        assert_eq!(m.element(1).nodes.len(), 5);
        assert_eq!(m.node_patch(6), vec![0, 1]);

        // same but the right element forgot the hanging node
        let loops = vec![vec![0, 1, 6, 2, 3], vec![1, 4, 5, 2]];
        assert!(build_mesh(coords, loops, BoundarySpec::Uniform(BoundaryTag::Neumann)).is_err());
    }

    #[test]
    fn rejects_bad_topology() {
        let coords = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let neu = BoundarySpec::Uniform(BoundaryTag::Neumann);
        // clockwise
        assert!(build_mesh(coords.clone(), vec![vec![0, 3, 2, 1]], neu.clone()).is_err());
        // duplicated element
        assert!(build_mesh(coords.clone(), vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]], neu.clone()).is_err());
        // overlapping triangles with consistent orientation
        let coords5 = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]);
        let loops = vec![vec![0, 1, 2, 3], vec![0, 1, 4]];
        assert!(build_mesh(coords5, loops, neu.clone()).is_err());
        // orphan node
        let mut more = coords.clone();
        more.push(Point2::new(5.0, 5.0));
        assert!(build_mesh(more, vec![vec![0, 1, 2, 3]], neu).is_err());
        // interior tag on a boundary node
        let tags = BoundarySpec::NodeTags(vec![BoundaryTag::Interior; 4]);
        assert!(build_mesh(coords, vec![vec![0, 1, 2, 3]], tags).is_err());
    }

    #[test]
    fn edge_tags_follow_nodes() {
        use BoundaryTag::*;
        let coords = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let tags = BoundarySpec::NodeTags(vec![Dirichlet, Dirichlet, Neumann, Neumann]);
        let m = build_mesh(coords, vec![vec![0, 1, 2, 3]], tags).unwrap();
        assert_eq!(m.edge(m.edge_between(0, 1).unwrap()).tag, Dirichlet);
        assert_eq!(m.edge(m.edge_between(1, 2).unwrap()).tag, Neumann);
        assert_eq!(m.ndof(), 2);
    }
}
