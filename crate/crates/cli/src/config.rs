//! Experiment configuration: `key = value` lines or a flat JSON object.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use anisomesh::indicator::QuadDepth;
use anisomesh::mesh::{grid, load_mesh, polygonal, BoundarySpec, BoundaryTag, PolyMesh};
use anisomesh::refine::Strategy;

/// Where the initial mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Grid { nx: usize, ny: usize },
    Polygonal { nx: usize, ny: usize, jitter: f64, seed: u64 },
    File(PathBuf),
}

impl MeshSource {
    pub fn build(&self, boundary: BoundaryTag) -> Result<PolyMesh> {
        let mesh = match self {
            MeshSource::Grid { nx, ny } => grid(*nx, *ny)?,
            MeshSource::Polygonal { nx, ny, jitter, seed } => polygonal(*nx, *ny, *jitter, *seed)?,
            MeshSource::File(path) => {
                return load_mesh(path).with_context(|| format!("loading {}", path.display()));
            }
        };
        Ok(mesh.with_boundary(BoundarySpec::Uniform(boundary))?)
    }
}

impl FromStr for MeshSource {
    type Err = anyhow::Error;

    /// `grid NX NY`, `polygonal NX NY JITTER SEED`, or a mesh file path.
    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<&str> {
            words.get(i).copied().ok_or_else(|| anyhow!("mesh spec '{s}' is missing argument {i}"))
        };
        match words.first().copied() {
            Some("grid") if words.len() == 3 => Ok(MeshSource::Grid { nx: num(1)?.parse()?, ny: num(2)?.parse()? }),
            Some("polygonal") if words.len() == 5 => Ok(MeshSource::Polygonal {
                nx: num(1)?.parse()?,
                ny: num(2)?.parse()?,
                jitter: num(3)?.parse()?,
                seed: num(4)?.parse()?,
            }),
            Some("grid") | Some("polygonal") => bail!("malformed mesh generator '{s}'"),
            Some(_) => Ok(MeshSource::File(PathBuf::from(s.trim()))),
            None => bail!("empty mesh spec"),
        }
    }
}

/// One strategy, or all three side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    One(Strategy),
    Compare,
}

impl StrategyChoice {
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyChoice::One(s) => vec![s],
            StrategyChoice::Compare => vec![Strategy::Uniform, Strategy::Isotropic, Strategy::Anisotropic],
        }
    }
}

impl FromStr for StrategyChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("compare") {
            return Ok(StrategyChoice::Compare);
        }
        Ok(StrategyChoice::One(s.parse()?))
    }
}

pub fn parse_quad_depth(s: &str) -> Result<QuadDepth> {
    let s = s.trim().to_ascii_lowercase();
    if s == "auto" {
        return Ok(QuadDepth::Auto);
    }
    if let Some(extra) = s.strip_prefix("auto+") {
        return Ok(QuadDepth::AutoPlus(extra.trim().parse()?));
    }
    s.parse().map(QuadDepth::Fixed).map_err(|_| anyhow!("quadrature depth must be auto, auto+N or N, got '{s}'"))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => bail!("{key}: expected a boolean, got '{other}'"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Registry label or expression in `x1`, `x2`.
    pub field: String,
    pub mesh: MeshSource,
    pub boundary: BoundaryTag,
    pub strategy: StrategyChoice,
    pub levels: usize,
    pub marking_factor: f64,
    pub quad_depth: QuadDepth,
    /// Sub-triangulation depth of the harmonic basis; by anisotropy if unset.
    pub basis_depth: Option<usize>,
    pub output: PathBuf,
    /// Write a `# generated ...` header line and real wall times.
    pub timestamp: bool,
    pub l2: bool,
    pub svg: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            field: "tanh_layer".into(),
            mesh: MeshSource::Grid { nx: 4, ny: 4 },
            boundary: BoundaryTag::Neumann,
            strategy: StrategyChoice::One(Strategy::Anisotropic),
            levels: 8,
            marking_factor: 0.9,
            quad_depth: QuadDepth::Auto,
            basis_depth: None,
            output: PathBuf::from("out"),
            timestamp: true,
            l2: true,
            svg: true,
        }
    }
}

impl ExperimentConfig {
    /// Parses either format; JSON is recognised by a leading `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = if text.trim_start().starts_with('{') { json_pairs(text)? } else { line_pairs(text)? };
        let mut config = ExperimentConfig::default();
        for (key, value) in &pairs {
            config.set(key, value)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "field" => self.field = v.to_string(),
            "mesh" => self.mesh = v.parse()?,
            "boundary" => {
                self.boundary = match v.to_ascii_lowercase().as_str() {
                    "neumann" => BoundaryTag::Neumann,
                    "dirichlet" => BoundaryTag::Dirichlet,
                    other => bail!("boundary must be neumann or dirichlet, got '{other}'"),
                }
            }
            "strategy" => self.strategy = v.parse()?,
            "levels" => self.levels = v.parse().context("levels")?,
            "marking_factor" => self.marking_factor = v.parse().context("marking_factor")?,
            "quad_depth" => self.quad_depth = parse_quad_depth(v)?,
            "basis_depth" => {
                self.basis_depth = if v.eq_ignore_ascii_case("auto") { None } else { Some(v.parse().context("basis_depth")?) }
            }
            "output" => self.output = PathBuf::from(v),
            "timestamp" => self.timestamp = parse_bool(key, v)?,
            "l2" => self.l2 = parse_bool(key, v)?,
            "svg" => self.svg = parse_bool(key, v)?,
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.marking_factor > 0.0 && self.marking_factor <= 1.0) {
            bail!("marking_factor must lie in (0, 1], got {}", self.marking_factor);
        }
        if self.levels == 0 {
            bail!("levels must be at least 1");
        }
        if let MeshSource::File(path) = &self.mesh {
            if !path.exists() {
                bail!("mesh file {} does not exist", path.display());
            }
        }
        Ok(())
    }
}

fn line_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn json_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let value: serde_json::Value = serde_json::from_str(text).context("parsing JSON config")?;
    let object = value.as_object().ok_or_else(|| anyhow!("JSON config must be an object"))?;
    object
        .iter()
        .map(|(k, v)| {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => bail!("{k}: unsupported value {other}"),
            };
            Ok((k.clone(), s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_formats_agree() {
        let text = "# tanh run\nfield = tanh_layer\nmesh = polygonal 6 5 0.3 7\nstrategy = isotropic\nlevels = 3\nquad_depth = auto+1\n";
        let json = r#"{"field": "tanh_layer", "mesh": "polygonal 6 5 0.3 7", "strategy": "isotropic", "levels": 3, "quad_depth": "auto+1"}"#;
        let a = ExperimentConfig::parse(text).unwrap();
        assert_eq!(a, ExperimentConfig::parse(json).unwrap());
        assert_eq!(a.mesh, MeshSource::Polygonal { nx: 6, ny: 5, jitter: 0.3, seed: 7 });
        assert_eq!(a.strategy, StrategyChoice::One(Strategy::Isotropic));
        assert_eq!(a.quad_depth, QuadDepth::AutoPlus(1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("levels").is_err());
        assert!(ExperimentConfig::parse("mesh = grid 4").is_err());
        assert!(ExperimentConfig::parse("{\"levels\": [1]}").is_err());
        let mut c = ExperimentConfig::parse("marking_factor = 1.5").unwrap();
        assert!(c.validate().is_err());
        c = ExperimentConfig::parse("mesh = /does/not/exist.mesh").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn strategy_choices() {
        assert_eq!("compare".parse::<StrategyChoice>().unwrap().strategies().len(), 3);
        assert_eq!(parse_quad_depth("4").unwrap(), QuadDepth::Fixed(4));
        assert!(parse_quad_depth("deep").is_err());
    }
}
