//! `eprl`: batch runner for the epistemic-core experiments.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage or
//! configuration errors.

mod classify;
mod constructions;
mod leep;
mod output;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::{exit_code, Outcome};

#[derive(Parser)]
#[command(name = "eprl", version, about = "Exact experiments on epistemic POMDPs and linked ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form values of the analytic constructions against exact evaluation.
    Constructions(constructions::ConstructionsArgs),
    /// Guessing policies on a label dataset.
    Classify(classify::ClassifyArgs),
    /// Train LEEP and its baselines on the maze suite from a config file.
    Leep(leep::LeepArgs),
    /// Numerical property suites.
    Verify(verify::VerifyArgs),
    /// Optimal policies for a posterior file.
    Solve(solve::SolveArgs),
    /// Maze utilities.
    #[command(subcommand)]
    Maze(MazeCommand),
}

#[derive(Subcommand)]
enum MazeCommand {
    /// Write generated mazes as text grids.
    Export(MazeExportArgs),
}

#[derive(Args)]
struct MazeExportArgs {
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn maze_export(args: &MazeExportArgs) -> anyhow::Result<Outcome> {
    use epistemic_core::worlds::{make_contextual_maze, shortest_path_length};
    let suite = make_contextual_maze(args.count, args.count, args.width, args.height, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let mut index = String::from("maze,file,shortest_path\n");
    for m in &suite.mazes {
        let name = format!("maze_{:04}.txt", m.id);
        std::fs::write(args.out.join(&name), m.to_grid())?;
        let len = shortest_path_length(m).map_or_else(|| "none".to_string(), |l| l.to_string());
        index.push_str(&format!("{},{name},{len}\n", m.id));
    }
    std::fs::write(args.out.join("index.csv"), index)?;
    eprintln!("wrote {} mazes to {}", suite.mazes.len(), args.out.display());
    Ok(Outcome::Pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Constructions(a) => constructions::run(a),
        Command::Classify(a) => classify::run(a),
        Command::Leep(a) => leep::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Solve(a) => solve::run(a),
        Command::Maze(MazeCommand::Export(a)) => maze_export(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
