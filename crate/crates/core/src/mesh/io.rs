use std::fmt::Write as _;
use std::path::Path;

use super::{build_mesh, BoundarySpec, BoundaryTag, PolyMesh};
use crate::error::{Error, Result};
use crate::geometry::Point2;

const VERSION: u32 = 1;

/// Text form of the mesh; coordinates carry 17 significant digits so that
/// reading them back is bit-exact.
pub fn write_mesh(mesh: &PolyMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "polymesh 2 {VERSION}");
    let _ = writeln!(out, "{}", mesh.n_nodes());
    for node in mesh.nodes() {
        let _ = writeln!(out, "{:.16e} {:.16e} {}", node.coords.x, node.coords.y, node.tag.code());
    }
    let _ = writeln!(out, "{}", mesh.n_elements());
    for elem in mesh.elements() {
        let _ = write!(out, "{}", elem.nodes.len());
        for v in &elem.nodes {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

pub fn save_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty line with comments stripped, plus its 1-based number.
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let text = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = text.split_whitespace().collect();
            if !tokens.is_empty() {
                return Ok((i + 1, tokens));
            }
        }
        Err(Error::Parse { line: self.last + 1, message: format!("unexpected end of file, expected {what}") })
    }
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("cannot read {what} from '{token}'") })
}

fn single<T: std::str::FromStr>(lines: &mut Lines, what: &str) -> Result<T> {
    let (line, tokens) = lines.next_tokens(what)?;
    if tokens.len() != 1 {
        return Err(Error::Parse { line, message: format!("expected {what} alone on the line") });
    }
    parse_num(tokens[0], line, what)
}

pub fn parse_mesh(text: &str) -> Result<PolyMesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, header) = lines.next_tokens("header")?;
    if header.len() != 3 || header[0] != "polymesh" || header[1] != "2" {
        return Err(Error::Parse { line, message: "expected header 'polymesh 2 <version>'".into() });
    }
    let version: u32 = parse_num(header[2], line, "version")?;
    if version != VERSION {
        return Err(Error::Parse { line, message: format!("unsupported version {version}") });
    }

    let n_nodes: usize = single(&mut lines, "node count")?;
    let mut coords = Vec::with_capacity(n_nodes);
    let mut tags = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, tokens) = lines.next_tokens("node line")?;
        if tokens.len() != 3 {
            return Err(Error::Parse { line, message: "expected 'x y tag'".into() });
        }
        let x: f64 = parse_num(tokens[0], line, "x")?;
        let y: f64 = parse_num(tokens[1], line, "y")?;
        let code: u8 = parse_num(tokens[2], line, "tag")?;
        let tag = BoundaryTag::from_code(code)
            .ok_or_else(|| Error::Parse { line, message: format!("unknown tag {code}") })?;
        coords.push(Point2::new(x, y));
        tags.push(tag);
    }

    let n_elements: usize = single(&mut lines, "element count")?;
    let mut loops = Vec::with_capacity(n_elements);
    for _ in 0..n_elements {
        let (line, tokens) = lines.next_tokens("element line")?;
        let k: usize = parse_num(tokens[0], line, "vertex count")?;
        if tokens.len() != k + 1 {
            return Err(Error::Parse { line, message: format!("expected {k} node ids") });
        }
        let ids = tokens[1..]
            .iter()
            .map(|t| {
                let v: usize = parse_num(t, line, "node id")?;
                if v >= n_nodes {
                    return Err(Error::Parse { line, message: format!("node id {v} out of range") });
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        loops.push(ids);
    }
    if let Ok((line, _)) = lines.next_tokens("") {
        return Err(Error::Parse { line, message: "trailing content".into() });
    }
    build_mesh(coords, loops, BoundarySpec::NodeTags(tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{grid, polygonal, unit_square};

    fn same(a: &PolyMesh, b: &PolyMesh) {
        assert_eq!(a.coords(), b.coords());
        assert_eq!(a.loops(), b.loops());
        assert_eq!(a.tags(), b.tags());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for m in [unit_square(), grid(2, 2).unwrap(), polygonal(5, 4, 0.3, 7).unwrap()] {
            let back = parse_mesh(&write_mesh(&m)).unwrap();
            same(&m, &back);
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# a mesh\npolymesh 2 1\n\n4 # nodes\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n1\n4 0 1 2 3\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.n_elements(), 1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_mesh("polymesh 2 1\n4\n0 0 1\n1 0 1\n1 x 1\n0 1 1\n1\n4 0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err:?}");
        let err = parse_mesh("polymesh 2 1\n4\n0 0 1\n1 0 1\n1 1 1\n0 1 1\n1\n4 0 1 2 9\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 8, .. }), "{err:?}");
        let err = parse_mesh("polymesh 3 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_mesh("polymesh 2 1\n4\n0 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mesh");
        let m = polygonal(3, 3, 0.2, 1).unwrap();
        save_mesh(&m, &path).unwrap();
        same(&m, &load_mesh(&path).unwrap());
    }
}
