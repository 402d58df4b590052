use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use coaforge_core::evaluate::Weights;
use coaforge_core::ipb::terrain::LayerKind;
use coaforge_core::pipeline::{PipelineError, PlanningConfig};
use coaforge_core::scenario::load_scenario;
use coaforge_core::util::digest;

use crate::session::{ConfigOverrides, SessionError, SessionStore};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

pub const DEFAULT_DATA_DIR: &str = "coaforge-data";

#[derive(Debug, Parser)]
#[command(
    name = "coaforge",
    version,
    about = "Course-of-action planning from an order and a scenario"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the whole planning pipeline once.
    Plan(PlanArgs),
    /// Start the HTTP planning service.
    Serve(ServeArgs),
}

#[derive(Debug, clap::Args)]
pub struct PlanArgs {
    /// Scenario and order files, in either order.
    #[arg(num_args = 2, value_names = ["SCENARIO", "OPORD"])]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub k_enemy: usize,
    #[arg(long, default_value_t = 200)]
    pub replications: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Five weights, or criterion=weight pairs, comma separated.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report path; `.txt` writes the text form, anything else JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for terrain layer rasters and the enemy situation map.
    #[arg(long)]
    pub layers_out: Option<PathBuf>,
    /// Persist the run as a session under this directory.
    #[arg(long, env = "COAFORGE_DATA")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "COAFORGE_DATA", default_value = DEFAULT_DATA_DIR)]
    pub data: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Pipeline(_) => EXIT_PIPELINE,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.stage.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Pipeline(e.to_string())
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Pipeline(p) => p.into(),
            SessionError::Invalid(m) => CliError::Validation(m),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))
}

/// Returns (scenario, opord) sources. The scenario is whichever input loads
/// as one; the first input is assumed otherwise so its error is reported.
pub fn order_inputs(a: String, b: String) -> (String, String) {
    if load_scenario(&a).is_err() && load_scenario(&b).is_ok() {
        (b, a)
    } else {
        (a, b)
    }
}

impl PlanArgs {
    pub fn config(&self) -> Result<PlanningConfig, CliError> {
        let weights = match &self.weights {
            Some(w) => Weights::parse(w).map_err(|e| CliError::Validation(e.to_string()))?,
            None => Weights::default(),
        };
        Ok(PlanningConfig {
            k: self.k,
            k_enemy: self.k_enemy,
            replications: self.replications,
            seed: self.seed,
            weights,
            threads: self.threads,
        })
    }
}

/// Runs `plan` and returns what would go to stdout.
pub fn run_plan(args: &PlanArgs) -> Result<String, CliError> {
    let config = args.config()?;
    let [a, b] = &args.inputs[..] else {
        return Err(CliError::Validation(
            "expected a scenario and an order".into(),
        ));
    };
    let (scenario, opord) = order_inputs(read(a)?, read(b)?);

    // Unpersisted runs get an id derived from their inputs so reruns print identically.
    let handle = match &args.data {
        Some(dir) => SessionStore::open(dir)?
            .with_defaults(config)
            .create(&scenario, &opord)?,
        None => {
            let id = format!("plan-{}", digest(&(&scenario, &opord, &config)));
            SessionStore::in_memory()
                .with_defaults(config)
                .create_with_id(&id, &scenario, &opord)?
        }
    };
    let mut session = handle.lock().expect("session lock");
    let report = session.replan(&ConfigOverrides::default())?.clone();

    if let Some(dir) = &args.layers_out {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Pipeline(format!("{}: {e}", dir.display())))?;
        let terrain = &session.prepared.terrain;
        for kind in LayerKind::ALL {
            write(
                &dir.join(format!("{}.txt", kind.as_str())),
                &terrain.export_raster(kind),
            )?;
        }
        write(&dir.join("overlay.txt"), &terrain.export_overlay())?;
        let esm = serde_json::to_string_pretty(session.esm()).expect("serializable");
        write(&dir.join("esm.json"), &(esm + "\n"))?;
    }

    let text = report.to_text();
    match &args.out {
        Some(path) => {
            let is_text = path.extension().is_some_and(|e| e == "txt");
            write(path, &if is_text { text } else { report.to_json() })?;
            Ok(format!(
                "recommended {} ({} CoAs); report written to {}\n",
                report.recommended,
                report.coas.len(),
                path.display()
            ))
        }
        None => Ok(text),
    }
}
