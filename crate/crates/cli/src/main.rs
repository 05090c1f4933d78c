use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use anisomesh::mesh::load_mesh;
use anisomesh_cli::commands::{self, Sweep, Thresholds};
use anisomesh_cli::svg::RenderOptions;
use anisomesh_cli::{experiment, init_threads, ExperimentConfig};

#[derive(Parser)]
#[command(name = "anisomesh", version, about = "Anisotropic polygonal mesh adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an adaptive experiment from a config file (key = value or JSON).
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Omit timestamp lines and wall times, for byte-identical reruns.
        #[arg(long)]
        no_timestamp: bool,
        /// Extra `key=value` settings applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Regularity audit of a mesh file.
    Audit {
        mesh: PathBuf,
        /// Write audit.csv, audit_mapped.csv and pairs.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_sigma: Option<f64>,
        #[arg(long)]
        max_c_k: Option<f64>,
        #[arg(long)]
        max_c_delta: Option<f64>,
        #[arg(long)]
        max_c_r: Option<f64>,
    },
    /// Render a mesh as SVG, optionally coloured by a per-element CSV column.
    Render {
        mesh: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value = "eta")]
        column: String,
        #[arg(long)]
        log: bool,
        /// Crop to x0,y0,x1,y1.
        #[arg(long)]
        zoom: Option<String>,
        #[arg(long, default_value_t = 800.0)]
        width: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Inequality sweeps as `name,context,ratio` CSV.
    Verify {
        #[arg(long, default_value = "trace")]
        sweep: String,
        /// Mesh for the neighbour sweep.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output, no_timestamp, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            for kv in &overrides {
                let (k, v) = kv.split_once('=').ok_or_else(|| anyhow::anyhow!("--set expects KEY=VALUE, got '{kv}'"))?;
                cfg.set(k.trim(), v)?;
            }
            if let Some(o) = output {
                cfg.output = o;
            }
            if no_timestamp {
                cfg.timestamp = false;
            }
            for run in experiment::run_experiment(&cfg)? {
                let last = run.rows.last();
                println!(
                    "{}: {} levels, final ndof {}, eta {:.4e} -> {}",
                    run.strategy.name(),
                    run.rows.len(),
                    last.map_or(0, |r| r.ndof),
                    last.map_or(f64::NAN, |r| r.eta),
                    run.directory.display()
                );
            }
        }
        Command::Audit { mesh, out, max_sigma, max_c_k, max_c_delta, max_c_r } => {
            let t = Thresholds { sigma: max_sigma, c_k: max_c_k, c_delta: max_c_delta, c_r: max_c_r };
            print!("{}", commands::audit(&mesh, out.as_deref(), &t)?);
        }
        Command::Render { mesh, field, column, log, zoom, width, out } => {
            let m = load_mesh(&mesh)?;
            let values = match field {
                Some(p) => Some(commands::element_values(&std::fs::read_to_string(&p)?, &column, m.n_elements())?),
                None => None,
            };
            let mut opts = RenderOptions::new();
            opts.log_scale = log;
            opts.width = width;
            opts.viewport = zoom.as_deref().map(commands::parse_viewport).transpose()?;
            emit(&commands::render(&m, values.as_deref(), &opts), out.as_ref())?;
        }
        Command::Verify { sweep, mesh, out } => {
            let sweep: Sweep = sweep.parse()?;
            let m = mesh.map(load_mesh).transpose()?;
            emit(&commands::verify(sweep, m.as_ref())?, out.as_ref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
