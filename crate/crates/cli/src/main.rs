use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coarselab_cli::{list_instances, run, ExperimentSpec, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "coarselab",
    version,
    about = "Run coarse-geometry and operator experiments from TOML specs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV reports.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; overrides the spec and the environment.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Parse and validate a spec without running it.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// List named instances usable in specs.
    List,
}

fn load(path: &Path) -> Result<ExperimentSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ExperimentSpec::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for e in list_instances() {
                println!("{:<15} {:<28} {}", e.category, e.key, e.description);
            }
            Ok(())
        }
        Command::Validate { spec } => load(&spec).map(|s| {
            println!(
                "ok: {} ({}) spec-hash {}",
                s.name,
                s.kind.as_str(),
                s.hash()
            )
        }),
        Command::Run { spec, out, jobs } => (|| {
            let s = load(&spec)?;
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build_global()
                    .map_err(|e| format!("cannot configure {n} worker threads: {e}"))?;
            }
            let dir = out
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .or_else(|| s.output.clone())
                .unwrap_or_else(|| PathBuf::from("coarselab-out").join(&s.name));
            let report = run(&s, &dir).map_err(|e| e.to_string())?;
            print!("{}", report.summary());
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
