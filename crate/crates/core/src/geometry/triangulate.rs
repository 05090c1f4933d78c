use super::{cross, star_kernel, Point2, Polygon};
use crate::error::{Error, Result};

/// Triangles covering the polygon: a fan from the kernel's Chebyshev centre
/// when the polygon is star-shaped, ear clipping otherwise.
pub fn triangulate_polygon(polygon: &Polygon) -> Result<Vec<[Point2; 3]>> {
    let kernel = star_kernel(polygon);
    if kernel.is_star_shaped() && kernel.rho > 1e-12 * polygon.diameter() {
        let z = kernel.z;
        let tris = polygon.edges().map(|(a, b)| [z, a, b]).collect();
        return Ok(tris);
    }
    let verts = polygon.vertices();
    Ok(ear_clip(verts)?
        .into_iter()
        .map(|[a, b, c]| [verts[a], verts[b], verts[c]])
        .collect())
}

/// Ear clipping of a simple counter-clockwise loop, returning index triples.
pub fn ear_clip(verts: &[Point2]) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..verts.len()).collect();
    let mut out = Vec::with_capacity(verts.len().saturating_sub(2));
    let area_scale = {
        let (mut lo, mut hi) = (verts[0], verts[0]);
        for v in verts {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm_squared()
    };
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        // prefer the best-shaped ear among the valid ones
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            let (a, b, c) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (pa, pb, pc) = (verts[a], verts[b], verts[c]);
            let twice = cross(&(pb - pa), &(pc - pa));
            if twice <= 1e-14 * area_scale {
                continue;
            }
            let blocked = idx.iter().any(|&k| {
                if k == a || k == b || k == c {
                    return false;
                }
                let p = verts[k];
                cross(&(pb - pa), &(p - pa)) >= 0.0
                    && cross(&(pc - pb), &(p - pb)) >= 0.0
                    && cross(&(pa - pc), &(p - pc)) >= 0.0
            });
            if blocked {
                continue;
            }
            let perim2 = (pb - pa).norm_squared() + (pc - pb).norm_squared() + (pa - pc).norm_squared();
            let quality = twice / perim2;
            if best.map_or(true, |(_, q)| quality > q) {
                best = Some((i, quality));
            }
        }
        if let Some((i, _)) = best {
            let m = idx.len();
            out.push([idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]]);
            idx.remove(i);
            clipped = true;
        }
        if !clipped {
            return Err(Error::TriangulationFailed("no ear found; loop is not simple".into()));
        }
    }
    let (pa, pb, pc) = (verts[idx[0]], verts[idx[1]], verts[idx[2]]);
    if cross(&(pb - pa), &(pc - pa)) <= 0.0 {
        return Err(Error::TriangulationFailed("degenerate final ear".into()));
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}
