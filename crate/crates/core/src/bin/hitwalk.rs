use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hitwalk::cli::{self, Command, Engine, Format, Request};
use hitwalk::graph_spec::GraphSpec;
use hitwalk::HitError;

/// Hitting-time distributions, moments and simulations for random walks on graphs.
#[derive(Parser, Debug)]
#[command(name = "hitwalk", version)]
struct Args {
    /// pmf, moments, ctime, simulate, compare or gf
    #[arg(value_enum)]
    command: Command,
    /// JSON graph-spec file
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    graph: Option<PathBuf>,
    /// Preset as NAME:ARGS, e.g. hypercube:3 or bipartite:2,3
    #[arg(long)]
    preset: Option<String>,
    /// Start node (index or label)
    #[arg(long)]
    from: Option<String>,
    /// Target node (index or label); defaults to 0
    #[arg(long)]
    to: Option<String>,
    #[arg(long, default_value_t = cli::DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(long, value_enum, default_value_t = Engine::Auto)]
    engine: Engine,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = cli::DEFAULT_TRIALS)]
    trials: u64,
    /// Simulation threads; output does not depend on this
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Time grid a:b:steps for ctime
    #[arg(long)]
    t_grid: Option<String>,
    /// Poisson tail tolerance for ctime
    #[arg(long, default_value_t = cli::DEFAULT_CT_TOL)]
    tol: f64,
}

fn load_spec(args: &Args) -> Result<GraphSpec, HitError> {
    match (&args.graph, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HitError::Parse(format!("cannot read {}: {e}", path.display())))?;
            GraphSpec::from_json_str(&text)
        }
        (None, Some(p)) => GraphSpec::from_preset_str(p),
        (None, None) => Err(HitError::Parse(
            "one of --graph or --preset is required".into(),
        )),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load_spec(&args).and_then(|graph| {
        let req = Request {
            command: args.command,
            graph,
            from: args.from.clone(),
            to: args.to.clone(),
            horizon: args.horizon,
            engine: args.engine,
            format: args.format,
            seed: args.seed,
            trials: args.trials,
            workers: args.workers,
            t_grid: args.t_grid.clone(),
            tol: args.tol,
        };
        cli::run(&req)
    });
    match result {
        Ok(doc) => {
            for w in &doc.metadata.warnings {
                eprintln!("warning: {w}");
            }
            let mut text = doc.render(args.format);
            if args.format == Format::Json {
                text.push('\n');
            }
            // A closed pipe on the reader side is not our failure.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
