//! Strategy runs with per-level artifacts and `convergence.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use anisomesh::fields::{FieldRegistry, ScalarField};
use anisomesh::interp::{coefficients, l2_error_with, BasisCache, Scheme};
use anisomesh::mesh::{save_mesh, PolyMesh};
use anisomesh::refine::{adaptive_loop_with, Level, RefineConfig, Strategy};
use anisomesh::regularity::audit_mesh;

use crate::config::ExperimentConfig;
use crate::svg::{render_svg, RenderOptions};

pub const CONVERGENCE_HEADER: &str = "level,ndof,nelem,eta,l2_pointwise,l2_clement,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub ndof: usize,
    pub nelem: usize,
    pub eta: f64,
    pub l2_pointwise: Option<f64>,
    pub l2_clement: Option<f64>,
    pub wall_ms: u128,
}

impl ConvergenceRow {
    fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        format!(
            "{},{},{},{:.12e},{},{},{}",
            self.level,
            self.ndof,
            self.nelem,
            self.eta,
            opt(self.l2_pointwise),
            opt(self.l2_clement),
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub rows: Vec<ConvergenceRow>,
    pub directory: PathBuf,
}

pub fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("generated at unix time {secs}")
}

fn header(config: &ExperimentConfig) -> String {
    if config.timestamp {
        format!("# {}\n", timestamp_line())
    } else {
        String::new()
    }
}

pub fn convergence_csv(rows: &[ConvergenceRow], header_line: &str) -> String {
    let mut out = String::from(header_line);
    out.push_str(CONVERGENCE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn l2_pair(
    mesh: &PolyMesh,
    v: &dyn ScalarField,
    config: &ExperimentConfig,
    cache: &BasisCache,
) -> Result<(Option<f64>, Option<f64>)> {
    if !config.l2 {
        return Ok((None, None));
    }
    let mut out = [None, None];
    for (slot, scheme) in out.iter_mut().zip([Scheme::Pointwise, Scheme::Clement]) {
        let c = coefficients(mesh, v, scheme)?;
        *slot = Some(l2_error_with(mesh, v, &c, config.basis_depth, Some(cache))?);
    }
    Ok((out[0], out[1]))
}

fn write_level(dir: &Path, level: &Level, config: &ExperimentConfig, head: &str) -> Result<()> {
    let stem = format!("level_{:02}", level.level);
    save_mesh(&level.mesh, dir.join(format!("{stem}.mesh")))?;
    let audit = audit_mesh(&level.mesh)?;
    write(&dir.join(format!("{stem}_audit.csv")), &format!("{head}{}", audit.elements_csv()))?;
    write(&dir.join(format!("{stem}_pairs.csv")), &format!("{head}{}", audit.pairs_csv()))?;
    write(&dir.join(format!("{stem}_indicator.csv")), &format!("{head}{}", level.report.to_csv(&level.mesh)))?;
    if config.svg {
        let mut opts = RenderOptions::new();
        opts.log_scale = true;
        opts.header = config.timestamp.then(timestamp_line);
        let svg = render_svg(&level.mesh, Some(&level.report.eta_local), &opts);
        write(&dir.join(format!("{stem}.svg")), &svg)?;
    }
    Ok(())
}

/// Runs one strategy into `dir`; returns the convergence rows.
pub fn run_strategy(config: &ExperimentConfig, strategy: Strategy, dir: &Path) -> Result<StrategyRun> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let field = FieldRegistry::default().resolve(&config.field)?;
    let initial = config.mesh.build(config.boundary)?;
    let mut refine = RefineConfig::new(strategy, config.levels);
    refine.marking_factor = config.marking_factor;
    refine.depth = config.quad_depth;

    let head = header(config);
    let cache = BasisCache::new();
    let mut rows = Vec::new();
    let mut failure = None;
    let mut clock = Instant::now();
    adaptive_loop_with(initial, field.as_ref(), &refine, |level| {
        if failure.is_some() {
            return;
        }
        let wall_ms = if config.timestamp { clock.elapsed().as_millis() } else { 0 };
        let result = l2_pair(&level.mesh, field.as_ref(), config, &cache).and_then(|(pw, cl)| {
            write_level(dir, level, config, &head)?;
            Ok(ConvergenceRow {
                level: level.level,
                ndof: level.mesh.ndof(),
                nelem: level.mesh.n_elements(),
                eta: level.report.eta_global,
                l2_pointwise: pw,
                l2_clement: cl,
                wall_ms,
            })
        });
        match result {
            Ok(row) => {
                log::info!("{} level {}: ndof {} eta {:.4e}", strategy.name(), row.level, row.ndof, row.eta);
                rows.push(row);
            }
            Err(e) => failure = Some(e),
        }
        clock = Instant::now();
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    write(&dir.join("convergence.csv"), &convergence_csv(&rows, &head))?;
    Ok(StrategyRun { strategy, rows, directory: dir.to_path_buf() })
}

/// Runs every configured strategy. With more than one, each gets its own
/// subdirectory and `comparison.csv` merges the rows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<StrategyRun>> {
    config.validate()?;
    let strategies = config.strategy.strategies();
    fs::create_dir_all(&config.output).with_context(|| format!("creating {}", config.output.display()))?;
    let mut runs = Vec::new();
    for &s in &strategies {
        let dir = if strategies.len() == 1 { config.output.clone() } else { config.output.join(s.name()) };
        runs.push(run_strategy(config, s, &dir)?);
    }
    if runs.len() > 1 {
        let mut out = header(config);
        let _ = writeln!(out, "strategy,{CONVERGENCE_HEADER}");
        for run in &runs {
            for row in &run.rows {
                let _ = writeln!(out, "{},{}", run.strategy.name(), row.csv());
            }
        }
        write(&config.output.join("comparison.csv"), &out)?;
    }
    Ok(runs)
}
