//! Auxiliary triangulations of a single polygon.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{cross, ear_clip, star_kernel, Point2, Polygon};

/// Triangulation of one polygon whose boundary nodes remember where they
/// sit on the polygon's loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTriangulation {
    pub nodes: Vec<Point2>,
    /// Counter-clockwise triangles.
    pub triangles: Vec<[usize; 3]>,
    /// `j + t` for a node on edge `j` of the loop at parameter `t`; `None` inside.
    pub boundary: Vec<Option<f64>>,
    n_loop: usize,
}

fn orient(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    cross(&(b - a), &(c - a))
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `abc`, with a relative tolerance.
fn in_circle(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let (ad, bd, cd) = (a - d, b - d, c - d);
    let (la, lb, lc) = (ad.norm_squared(), bd.norm_squared(), cd.norm_squared());
    let t1 = la * cross(&bd, &cd);
    let t2 = lb * cross(&cd, &ad);
    let t3 = lc * cross(&ad, &bd);
    let det = t1 + t2 + t3;
    det > 1e-10 * (t1.abs() + t2.abs() + t3.abs())
}

impl SubTriangulation {
    /// Fan from the kernel centre for star-shaped polygons, ear clipping
    /// otherwise; then `depth` rounds of red refinement, each followed by
    /// Lawson flips back to a constrained Delaunay triangulation.
    pub fn new(polygon: &Polygon, depth: usize) -> Result<Self> {
        let verts = polygon.vertices();
        let n = verts.len();
        let mut nodes: Vec<Point2> = verts.to_vec();
        let mut boundary: Vec<Option<f64>> = (0..n).map(|j| Some(j as f64)).collect();
        let kernel = star_kernel(polygon);
        let triangles = if kernel.is_star_shaped() && kernel.rho > 1e-12 * polygon.diameter() {
            nodes.push(kernel.z);
            boundary.push(None);
            (0..n).map(|j| [n, j, (j + 1) % n]).collect()
        } else {
            ear_clip(verts)?
        };
        let mut sub = SubTriangulation { nodes, triangles, boundary, n_loop: n };
        sub.lawson();
        for _ in 0..depth {
            sub.refine_red();
            sub.lawson();
        }
        Ok(sub)
    }

    pub fn n_loop(&self) -> usize {
        self.n_loop
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * orient(&self.nodes[a], &self.nodes[b], &self.nodes[c])
    }

    /// Loop vertices and weights of the piecewise-linear hat data at a boundary node.
    pub fn boundary_weights(&self, node: usize) -> Option<[(usize, f64); 2]> {
        let s = self.boundary[node]?;
        let j = s.floor() as usize % self.n_loop;
        let t = s - s.floor();
        Some([(j, 1.0 - t), ((j + 1) % self.n_loop, t)])
    }

    fn refine_red(&mut self) {
        let mut count: HashMap<(usize, usize), u8> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(count.len());
        let n = self.n_loop as f64;
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        let old = std::mem::take(&mut self.triangles);
        for t in &old {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let id = self.nodes.len();
                    self.nodes.push((self.nodes[a] + self.nodes[b]) * 0.5);
                    let on_boundary = count[&key] == 1;
                    let s = match (on_boundary, self.boundary[a], self.boundary[b]) {
                        (true, Some(sa), Some(sb)) => {
                            let (mut lo, mut hi) = (sa.min(sb), sa.max(sb));
                            if hi - lo > 1.0 {
                                // edge closing the loop
                                std::mem::swap(&mut lo, &mut hi);
                                hi += n;
                            }
                            Some(((lo + hi) * 0.5) % n)
                        }
                        _ => None,
                    };
                    self.boundary.push(s);
                    id
                });
            }
            let [a, b, c] = *t;
            tris.push([a, m[0], m[2]]);
            tris.push([m[0], b, m[1]]);
            tris.push([m[2], m[1], c]);
            tris.push([m[0], m[1], m[2]]);
        }
        self.triangles = tris;
    }

    /// Flips interior edges until every one is locally Delaunay.
    fn lawson(&mut self) {
        let mut owner: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                owner.insert((t[k], t[(k + 1) % 3]), i);
            }
        }
        let mut stack: Vec<(usize, usize)> = owner.keys().copied().filter(|&(a, b)| a < b).collect();
        stack.sort_unstable();
        let limit = 50 * self.triangles.len() + 100;
        let mut flips = 0;
        while let Some((a, b)) = stack.pop() {
            let (Some(&t1), Some(&t2)) = (owner.get(&(a, b)), owner.get(&(b, a))) else {
                continue;
            };
            let c = third(&self.triangles[t1], a, b);
            let d = third(&self.triangles[t2], b, a);
            let p = &self.nodes;
            if !in_circle(&p[a], &p[b], &p[c], &p[d]) {
                continue;
            }
            let scale = (p[a] - p[b]).norm_squared() + (p[c] - p[d]).norm_squared();
            if orient(&p[a], &p[d], &p[c]) <= 1e-12 * scale || orient(&p[d], &p[b], &p[c]) <= 1e-12 * scale {
                continue;
            }
            flips += 1;
            if flips > limit {
                log::warn!("Lawson flips did not settle after {limit} flips");
                break;
            }
            for (x, y) in [(a, b), (b, c), (c, a), (b, a), (a, d), (d, b)] {
                owner.remove(&(x, y));
            }
            self.triangles[t1] = [a, d, c];
            self.triangles[t2] = [d, b, c];
            for (x, y, t) in [(a, d, t1), (d, c, t1), (c, a, t1), (d, b, t2), (b, c, t2), (c, d, t2)] {
                owner.insert((x, y), t);
            }
            stack.extend([(a, d), (d, b), (b, c), (c, a)]);
        }
    }

    /// Triangle containing `p` with its barycentric coordinates.
    pub fn locate(&self, p: &Point2) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for (i, t) in self.triangles.iter().enumerate() {
            let l = barycentric(&self.nodes[t[0]], &self.nodes[t[1]], &self.nodes[t[2]], p);
            let worst = l.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((i, l));
            }
            if best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((i, l, worst));
            }
        }
        // points on an edge can miss by rounding
        best.filter(|&(_, _, w)| w > -1e-10).map(|(i, l, _)| (i, l))
    }

    pub fn check(&self) -> Result<()> {
        for (i, t) in self.triangles.iter().enumerate() {
            if self.area(i) <= 0.0 {
                return Err(Error::TriangulationFailed(format!("sub-triangle {i} {t:?} is not counter-clockwise")));
            }
        }
        Ok(())
    }
}

fn third(t: &[usize; 3], a: usize, b: usize) -> usize {
    for k in 0..3 {
        if t[k] == a && t[(k + 1) % 3] == b {
            return t[(k + 2) % 3];
        }
    }
    unreachable!("edge not in triangle")
}

pub(crate) fn barycentric(a: &Point2, b: &Point2, c: &Point2, p: &Point2) -> [f64; 3] {
    let det = orient(a, b, c);
    let l1 = orient(p, b, c) / det;
    let l2 = orient(a, p, c) / det;
    [l1, l2, 1.0 - l1 - l2]
}
