use super::{perp, Point2, Polygon};
use crate::error::{Error, Result};

/// Default snapping tolerance relative to the polygon diameter.
pub const DEFAULT_SNAP_TOL: f64 = 1e-9;

/// Where a cut endpoint sits on the boundary of the input polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutEnd {
    /// Snapped onto existing vertex `k`.
    Vertex(usize),
    /// Interior of edge `k` (from vertex `k` to `k + 1`).
    Edge(usize, Point2),
}

impl CutEnd {
    fn point(&self, polygon: &Polygon) -> Point2 {
        match *self {
            CutEnd::Vertex(k) => polygon.vertices()[k],
            CutEnd::Edge(_, p) => p,
        }
    }
}

/// Vertex of a split piece, expressed relative to the input polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitVertex {
    Original(usize),
    /// New vertex created by cut end 0 or 1.
    Cut(usize),
}

#[derive(Debug, Clone)]
pub struct PolygonSplit {
    pub pieces: [Polygon; 2],
    pub cut: (Point2, Point2),
    pub ends: [CutEnd; 2],
    pub loops: [Vec<SplitVertex>; 2],
}

pub fn split_polygon_by_line(polygon: &Polygon, point: Point2, direction: Point2) -> Result<PolygonSplit> {
    split_polygon_by_line_with_tol(polygon, point, direction, DEFAULT_SNAP_TOL)
}

/// Bisects `polygon` with the line through `point` along `direction`.
///
/// For non-convex polygons the line may cross the boundary several times;
/// the interior chord containing `point` is used, or the longest interior
/// chord when `point` is not inside. Cut endpoints closer than
/// `snap_tol * diameter` to a vertex are snapped onto it.
pub fn split_polygon_by_line_with_tol(
    polygon: &Polygon,
    point: Point2,
    direction: Point2,
    snap_tol: f64,
) -> Result<PolygonSplit> {
    let dir = direction.normalize();
    if !dir.x.is_finite() {
        return Err(Error::CutMissesPolygon);
    }
    let normal = perp(&dir);
    let verts = polygon.vertices();
    let n = verts.len();
    let tol = snap_tol * polygon.diameter();

    let side: Vec<f64> = verts
        .iter()
        .map(|v| {
            let s = normal.dot(&(v - point));
            if s.abs() <= tol {
                0.0
            } else {
                s
            }
        })
        .collect();

    let mut candidates: Vec<(f64, CutEnd)> = Vec::new();
    let push = |end: CutEnd, candidates: &mut Vec<(f64, CutEnd)>| {
        if let CutEnd::Vertex(k) = end {
            if candidates.iter().any(|(_, c)| *c == CutEnd::Vertex(k)) {
                return;
            }
        }
        let t = dir.dot(&(end.point(polygon) - point));
        candidates.push((t, end));
    };
    for k in 0..n {
        let j = (k + 1) % n;
        if side[k] == 0.0 {
            push(CutEnd::Vertex(k), &mut candidates);
        }
        if side[k] * side[j] < 0.0 {
            let q = verts[k] + (verts[j] - verts[k]) * (side[k] / (side[k] - side[j]));
            let end = if (q - verts[k]).norm() <= tol {
                CutEnd::Vertex(k)
            } else if (q - verts[j]).norm() <= tol {
                CutEnd::Vertex(j)
            } else {
                CutEnd::Edge(k, q)
            };
            push(end, &mut candidates);
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    // elementary intervals whose midpoint is strictly inside
    let mut interior: Vec<usize> = Vec::new();
    for i in 0..candidates.len().saturating_sub(1) {
        let (t0, _) = candidates[i];
        let (t1, _) = candidates[i + 1];
        if t1 - t0 <= tol {
            continue;
        }
        let mid = point + dir * (0.5 * (t0 + t1));
        if polygon.contains_strictly(&mid, tol) {
            interior.push(i);
        }
    }
    let longest = |ids: &[usize]| {
        ids.iter()
            .copied()
            .max_by(|&a, &b| {
                let la = candidates[a + 1].0 - candidates[a].0;
                let lb = candidates[b + 1].0 - candidates[b].0;
                la.total_cmp(&lb).then(b.cmp(&a))
            })
    };
    let containing: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|&i| candidates[i].0 < -tol && candidates[i + 1].0 > tol)
        .collect();
    let chosen = match containing.first() {
        Some(&i) => i,
        None => {
            // anchor on the boundary or outside: fall back to the longest chord
            let touching: Vec<usize> = interior
                .iter()
                .copied()
                .filter(|&i| candidates[i].0 <= tol && candidates[i + 1].0 >= -tol)
                .collect();
            longest(&touching).or_else(|| longest(&interior)).ok_or(Error::CutMissesPolygon)?
        }
    };
    let ends = [candidates[chosen].1, candidates[chosen + 1].1];

    let mut augmented: Vec<SplitVertex> = Vec::with_capacity(n + 2);
    for k in 0..n {
        augmented.push(SplitVertex::Original(k));
        for (e, end) in ends.iter().enumerate() {
            if let CutEnd::Edge(edge, _) = end {
                if *edge == k {
                    augmented.push(SplitVertex::Cut(e));
                }
            }
        }
    }
    let position = |e: usize| -> usize {
        let target = match ends[e] {
            CutEnd::Vertex(k) => SplitVertex::Original(k),
            CutEnd::Edge(..) => SplitVertex::Cut(e),
        };
        augmented.iter().position(|v| *v == target).expect("cut end is in loop")
    };
    let (ia, ib) = (position(0), position(1));
    let m = augmented.len();
    let walk = |from: usize, to: usize| -> Vec<SplitVertex> {
        let mut out = Vec::new();
        let mut i = from;
        loop {
            out.push(augmented[i]);
            if i == to {
                break;
            }
            i = (i + 1) % m;
        }
        out
    };
    let loops = [walk(ia, ib), walk(ib, ia)];
    let coords = |v: &SplitVertex| match *v {
        SplitVertex::Original(k) => verts[k],
        SplitVertex::Cut(e) => ends[e].point(polygon),
    };
    let make = |lp: &[SplitVertex]| -> Result<Polygon> {
        if lp.len() < 3 {
            return Err(Error::NonSimpleResult);
        }
        Polygon::new(lp.iter().map(coords).collect()).map_err(|err| match err {
            Error::DegenerateElement(msg) => Error::DegenerateElement(msg),
            _ => Error::NonSimpleResult,
        })
    };
    let pieces = [make(&loops[0])?, make(&loops[1])?];
    let cut = (ends[0].point(polygon), ends[1].point(polygon));
    if (cut.1 - cut.0).norm() <= tol {
        return Err(Error::CutMissesPolygon);
    }
    Ok(PolygonSplit { pieces, cut, ends, loops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly(points: &[(f64, f64)]) -> Polygon {
        Polygon::new(points.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn square_vertical_cut() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let s = split_polygon_by_line(&p, Point2::new(0.5, 0.5), Point2::new(0.0, 1.0)).unwrap();
        for piece in &s.pieces {
            assert_relative_eq!(piece.area(), 0.5, epsilon = 1e-15);
            let (lo, hi) = piece.bounding_box();
            assert_relative_eq!(hi.x - lo.x, 0.5, epsilon = 1e-15);
            assert_relative_eq!(hi.y - lo.y, 1.0, epsilon = 1e-15);
        }
        assert!(matches!(s.ends[0], CutEnd::Edge(0, _)));
        assert!(matches!(s.ends[1], CutEnd::Edge(2, _)));
    }

    #[test]
    fn rectangle_cut_orthogonal_to_major_axis() {
        let p = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]);
        let u1 = p.spectrum().unwrap().u1;
        let s = split_polygon_by_line(&p, p.centroid(), perp(&u1)).unwrap();
        for piece in &s.pieces {
            assert_relative_eq!(piece.area(), 1.0, epsilon = 1e-14);
            assert_relative_eq!(piece.spectrum().unwrap().ratio(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cut_through_vertices_snaps() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let d = Point2::new(1.0, 1.0);
        let s = split_polygon_by_line(&p, Point2::new(0.5, 0.5 + 1e-12), d).unwrap();
        assert_eq!(s.ends, [CutEnd::Vertex(0), CutEnd::Vertex(2)]);
        assert_eq!(s.pieces[0].len(), 3);
        assert_eq!(s.pieces[1].len(), 3);
    }

    #[test]
    fn l_shape_uses_chord_through_anchor() {
        // horizontal line y = 1.5 crosses x in [0,1] only; y = 0.5 crosses [0,2]
        let p = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
        let s = split_polygon_by_line(&p, Point2::new(0.5, 1.5), Point2::new(1.0, 0.0)).unwrap();
        let total: f64 = s.pieces.iter().map(|q| q.area()).sum();
        assert_relative_eq!(total, p.area(), max_relative = 1e-12);
        assert_relative_eq!(s.pieces.iter().map(|q| q.area()).fold(f64::INFINITY, f64::min), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn u_shape_four_crossings() {
        // a U: line y = 1.5 crosses the boundary four times
        let p = poly(&[
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 2.0),
            (2.0, 2.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 2.0),
            (0.0, 2.0),
        ]);
        let s = split_polygon_by_line(&p, Point2::new(2.5, 1.5), Point2::new(1.0, 0.0)).unwrap();
        let areas: Vec<f64> = s.pieces.iter().map(|q| q.area()).collect();
        assert_relative_eq!(areas[0] + areas[1], p.area(), max_relative = 1e-12);
        assert_relative_eq!(areas[0].min(areas[1]), 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.cut.0.x.min(s.cut.1.x), 2.0, epsilon = 1e-12);

        // anchor in the notch (outside): longest interior chord is used
        let s = split_polygon_by_line(&p, Point2::new(1.5, 1.5), Point2::new(1.0, 0.0)).unwrap();
        let total: f64 = s.pieces.iter().map(|q| q.area()).sum();
        assert_relative_eq!(total, p.area(), max_relative = 1e-12);
    }

    #[test]
    fn line_missing_polygon() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let err = split_polygon_by_line(&p, Point2::new(0.5, 3.0), Point2::new(1.0, 0.0)).unwrap_err();
        assert_eq!(err, Error::CutMissesPolygon);
        // along an edge
        let err = split_polygon_by_line(&p, Point2::new(0.5, 0.0), Point2::new(1.0, 0.0)).unwrap_err();
        assert_eq!(err, Error::CutMissesPolygon);
    }

    #[test]
    fn pieces_reuse_vertices() {
        let p = poly(&[(0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (1.0, 2.0), (-0.5, 1.0)]);
        let s = split_polygon_by_line(&p, p.centroid(), Point2::new(0.3, 1.0)).unwrap();
        for (piece, lp) in s.pieces.iter().zip(&s.loops) {
            for (v, sv) in piece.vertices().iter().zip(lp) {
                match sv {
                    SplitVertex::Original(k) => assert_eq!(*v, p.vertices()[*k]),
                    SplitVertex::Cut(e) => assert!(*v == s.cut.0 || *v == s.cut.1, "{e}"),
                }
            }
        }
    }
}
