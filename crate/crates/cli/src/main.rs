mod commands;
mod output;
mod svg;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "safelat", version, about = "Uncertainty-aware state lattice planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a path and write path.json, stats.jsonl and plan.svg.
    Plan(PlanArgs),
    /// Plan, then execute the path under noise many times.
    Simulate(SimulateArgs),
    /// Generate a motion primitive file.
    Primgen(PrimgenArgs),
    /// Compare heuristic grid initialization at several minimum cell sizes (CSV).
    BenchHeuristic(BenchArgs),
    /// Summarize the map of a scenario.
    MapInfo(MapInfoArgs),
}

/// Overrides for scenario fields.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Disable the free-space lookup heuristic.
    #[arg(long)]
    pub no_fsh: bool,
    /// Disable the multi-resolution grid heuristic.
    #[arg(long)]
    pub no_h2dmr: bool,
    /// Expand every primitive instead of using graduated fidelity.
    #[arg(long)]
    pub no_gf: bool,
    #[arg(long)]
    pub epsilon0: Option<f64>,
    #[arg(long)]
    pub epsilon_decay: Option<f64>,
    /// Sample ring radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Occupancy threshold for PGM maps.
    #[arg(long)]
    pub occ_threshold: Option<f64>,
    /// Where free-space heuristic tables are cached.
    #[arg(long, env = "SAFELAT_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlanArgs {
    pub scenario: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PrimgenArgs {
    /// Take model, lattice and lengths from this scenario instead of the flags.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "unicycle")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 1.0)]
    pub v_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_turn_radius: f64,
    #[arg(long, default_value_t = 0.125)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.5)]
    pub resolution: f64,
    #[arg(long, default_value_t = 16)]
    pub headings: u16,
    #[arg(long, value_delimiter = ',', default_value = "0.5,4.0")]
    pub lengths: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum ModelArg {
    Unicycle,
    Ackermann,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Use this scenario's map; otherwise an empty square map is used.
    #[arg(long, conflicts_with = "empty")]
    pub scenario: Option<PathBuf>,
    /// Side of the empty map in meters.
    #[arg(long, default_value_t = 50.0)]
    pub empty: f64,
    /// Finest cell of the empty map.
    #[arg(long, default_value_t = 0.1)]
    pub cell: f64,
    #[arg(long)]
    pub f_plus: Option<f64>,
    /// Minimum cell sizes C+, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.8,1.6,3.2,6.4,12.8")]
    pub caps: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub start: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub goal: Option<Vec<f64>>,
    /// Clearance disc radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct MapInfoArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub occ_threshold: Option<f64>,
    /// Also draw the map leaves.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => commands::plan(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Primgen(a) => commands::primgen(&a),
        Command::BenchHeuristic(a) => commands::bench_heuristic(&a),
        Command::MapInfo(a) => commands::map_info(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
