//! `audit`, `render` and `verify` subcommands.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use anisomesh::fields::{tanh_layer, ScalarField};
use anisomesh::geometry::Point2;
use anisomesh::mesh::{load_mesh, polygonal, PolyMesh};
use anisomesh::regularity::{audit_mesh, RegularityAudit};
use anisomesh::verify::{
    check_h1_mapping, monomials, neighbour_gradient_sweep, rectangle, records_csv, scaling_sweep, InequalityRecord,
    Pullback,
};

use crate::svg::{render_svg, RenderOptions};

pub const SWEEP_SCALES: [f64; 5] = [1.0, 1e1, 1e2, 1e3, 1e4];

/// User limits on the audited constants; `None` means unchecked.
#[derive(Debug, Clone, Default)]
pub struct Thresholds {
    pub sigma: Option<f64>,
    pub c_k: Option<f64>,
    pub c_delta: Option<f64>,
    pub c_r: Option<f64>,
}

impl Thresholds {
    /// Names and values of the exceeded limits.
    pub fn violations(&self, audit: &RegularityAudit) -> Vec<String> {
        let checks = [
            ("sigma", self.sigma, audit.sigma),
            ("c_k", self.c_k, audit.c_k),
            ("c_delta", self.c_delta, audit.c_delta),
            ("c_r", self.c_r, audit.c_r),
        ];
        checks
            .iter()
            .filter_map(|&(name, limit, value)| match limit {
                Some(l) if value > l => Some(format!("{name} = {value:.4e} exceeds {l:.4e}")),
                _ => None,
            })
            .collect()
    }
}

pub fn audit_summary(audit: &RegularityAudit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "elements            {}", audit.elements.len());
    let _ = writeln!(s, "neighbour pairs     {}", audit.pairs.len());
    let _ = writeln!(s, "sigma (mapped)      {:.4}", audit.sigma);
    let _ = writeln!(s, "c_K (mapped)        {:.4}", audit.c_k);
    let _ = writeln!(s, "sigma (physical)    {:.4}", audit.sigma_physical);
    let _ = writeln!(s, "c_K (physical)      {:.4}", audit.c_k_physical);
    let _ = writeln!(s, "c_delta             {:.4e}", audit.c_delta);
    let _ = writeln!(s, "c_R                 {:.4e}", audit.c_r);
    let _ = writeln!(s, "max lambda1/lambda2 {:.4e}", audit.max_lambda_ratio);
    let _ = writeln!(s, "alpha range         ({:.4}, {:.4})", audit.alpha_range.0, audit.alpha_range.1);
    let _ = writeln!(s, "max node valence    {}", audit.max_node_valence);
    s
}

/// Audits a mesh file; writes CSVs into `out` if given. Fails if a threshold is exceeded.
pub fn audit(mesh_path: &Path, out: Option<&Path>, thresholds: &Thresholds) -> Result<String> {
    let mesh = load_mesh(mesh_path).with_context(|| format!("loading {}", mesh_path.display()))?;
    let audit = audit_mesh(&mesh)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("audit.csv"), audit.elements_csv())?;
        std::fs::write(dir.join("audit_mapped.csv"), audit.mapped_elements_csv())?;
        std::fs::write(dir.join("pairs.csv"), audit.pairs_csv())?;
    }
    let summary = audit_summary(&audit);
    let violations = thresholds.violations(&audit);
    if !violations.is_empty() {
        bail!("{summary}{}", violations.join("\n"));
    }
    Ok(summary)
}

/// Reads column `column` of a CSV with one row per element, in element order.
pub fn element_values(csv: &str, column: &str, n_elements: usize) -> Result<Vec<f64>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().context("empty CSV")?;
    let idx = header
        .split(',')
        .position(|h| h.trim() == column)
        .with_context(|| format!("column '{column}' not in header '{header}'"))?;
    let values = lines
        .map(|l| {
            let cell = l.split(',').nth(idx).with_context(|| format!("short row '{l}'"))?;
            cell.trim().parse::<f64>().with_context(|| format!("bad number '{cell}'"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n_elements {
        bail!("CSV has {} rows, mesh has {n_elements} elements", values.len());
    }
    Ok(values)
}

pub fn render(mesh: &PolyMesh, values: Option<&[f64]>, options: &RenderOptions) -> String {
    render_svg(mesh, values, options)
}

pub fn parse_viewport(s: &str) -> Result<(Point2, Point2)> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?;
    if v.len() != 4 || v[2] <= v[0] || v[3] <= v[1] {
        bail!("viewport must be x0,y0,x1,y1 with x0 < x1 and y0 < y1");
    }
    Ok((Point2::new(v[0], v[1]), Point2::new(v[2], v[3])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Trace,
    Poincare,
    H1,
    Neighbour,
}

impl std::str::FromStr for Sweep {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "trace" => Sweep::Trace,
            "poincare" => Sweep::Poincare,
            "h1" => Sweep::H1,
            "neighbour" | "neighbor" => Sweep::Neighbour,
            other => bail!("unknown sweep '{other}' (trace, poincare, h1, neighbour)"),
        })
    }
}

/// `name,context,ratio` rows for one sweep.
pub fn verify(sweep: Sweep, mesh: Option<&PolyMesh>) -> Result<String> {
    match sweep {
        Sweep::Trace | Sweep::Poincare => {
            let name = if sweep == Sweep::Trace { "trace" } else { "poincare" };
            let mut s = scaling_sweep(&SWEEP_SCALES, 3, true, 4)?;
            s.entries.retain(|e| e.record.name == name);
            Ok(s.to_csv())
        }
        Sweep::H1 => {
            let mut records = Vec::new();
            for &s in &SWEEP_SCALES {
                let rect = rectangle(s);
                for m in monomials(3) {
                    let mut r = check_h1_mapping(&rect, &m, 0)?;
                    r.context = format!("field={};s={s};{}", m.label(), r.context);
                    records.push(r);
                }
                let layer = Pullback::onto(tanh_layer(), &rect);
                let mut r = check_h1_mapping(&rect, &layer, 5)?;
                r.context = format!("field={};s={s};{}", layer.label(), r.context);
                records.push(r);
            }
            Ok(records_csv(&records))
        }
        Sweep::Neighbour => {
            let default;
            let mesh = match mesh {
                Some(m) => m,
                None => {
                    default = polygonal(6, 6, 0.3, 1)?;
                    &default
                }
            };
            let records: Vec<InequalityRecord> = neighbour_gradient_sweep(mesh, &tanh_layer(), 3)?
                .into_iter()
                .map(|(mut r, bound)| {
                    r.context = format!("{};bound={bound:.6e}", r.context);
                    r
                })
                .collect();
            Ok(records_csv(&records))
        }
    }
}
