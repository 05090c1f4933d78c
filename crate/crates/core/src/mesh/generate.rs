use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_mesh, BoundarySpec, BoundaryTag, PolyMesh};
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// One-element mesh of the unit square.
pub fn unit_square() -> PolyMesh {
    grid(1, 1).expect("unit square is valid")
}

fn grid_nodes(nx: usize, ny: usize) -> Vec<Point2> {
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            coords.push(Point2::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    coords
}

/// `nx × ny` quadrilaterals on the unit square, Neumann boundary.
pub fn grid(nx: usize, ny: usize) -> Result<PolyMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidConfig("grid needs nx, ny >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut loops = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            loops.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build_mesh(grid_nodes(nx, ny), loops, BoundarySpec::Uniform(BoundaryTag::Neumann))
}

/// Jittered grid on the unit square with some cells merged with their right
/// neighbour (hexagons) and some cut along a diagonal (triangles).
///
/// `jitter` in `[0, 1)` is the largest node displacement in half-cells.
/// Boundary nodes slide along the boundary, corners stay fixed.
pub fn polygonal(nx: usize, ny: usize, jitter: f64, seed: u64) -> Result<PolyMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidConfig("polygonal needs nx, ny >= 1".into()));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::InvalidConfig(format!("jitter {jitter} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dx, dy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut coords = grid_nodes(nx, ny);
    for j in 0..=ny {
        for i in 0..=nx {
            let sx: f64 = rng.gen_range(-0.5..0.5);
            let sy: f64 = rng.gen_range(-0.5..0.5);
            let p = &mut coords[j * (nx + 1) + i];
            if i != 0 && i != nx {
                p.x += jitter * dx * sx;
            }
            if j != 0 && j != ny {
                p.y += jitter * dy * sy;
            }
        }
    }

    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut loops = Vec::new();
    for j in 0..ny {
        let mut i = 0;
        while i < nx {
            let (bl, br, tr, tl) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let r: f64 = rng.gen();
            if r < 0.25 && i + 1 < nx {
                loops.push(vec![bl, br, id(i + 2, j), id(i + 2, j + 1), tr, tl]);
                i += 2;
                continue;
            }
            if r < 0.5 {
                if rng.gen::<bool>() {
                    loops.push(vec![bl, br, tr]);
                    loops.push(vec![bl, tr, tl]);
                } else {
                    loops.push(vec![bl, br, tl]);
                    loops.push(vec![br, tr, tl]);
                }
            } else {
                loops.push(vec![bl, br, tr, tl]);
            }
            i += 1;
        }
    }
    build_mesh(coords, loops, BoundarySpec::Uniform(BoundaryTag::Neumann))
}

impl PolyMesh {
    /// Same geometry with different boundary tags.
    pub fn with_boundary(&self, boundary: BoundarySpec) -> Result<PolyMesh> {
        build_mesh(self.coords(), self.loops(), boundary)
    }
}
