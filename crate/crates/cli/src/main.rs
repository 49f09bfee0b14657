//! `holonomic`: config-driven experiments on holonomic measures over the flat torus.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{Context, Failure};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "holonomic", version, about = "Variations and minimization of holonomic measures on the flat torus")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for the artifacts (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = "holonomic-out")]
    out: PathBuf,
    /// Seed of every random battery; overrides `seed` in the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Verification tolerance; overrides the config values.
    #[arg(long, global = true, value_name = "REAL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the discretized action-minimization LP and verify its output.
    Minimize,
    /// Scan a measure against a random generator battery.
    CheckCritical,
    /// Finite-difference check of variation families against their distributions.
    Variation,
    /// Finite-difference weights for a derivative of a Dirac at given nodes.
    Stencil {
        /// Derivative orders per axis, e.g. `2` or `1,1`.
        #[arg(long, value_delimiter = ',')]
        index: Option<Vec<u32>>,
        /// Nodes separated by `,`, coordinates within a node by `:`.
        #[arg(long, allow_hyphen_values = true)]
        nodes: Option<String>,
        /// Node spacing.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Energy defect per atom and energy constants per support component.
    Energy,
    /// Weak-KAM fit and Hamilton-Jacobi residual.
    WeakKam,
    /// Recover a transport field from a distribution.
    Transport,
    /// Round the corner of the two-loop curve and show it is not critical.
    CornerDemo,
}

fn parse_nodes(s: &str) -> Result<Vec<Vec<f64>>, Failure> {
    s.split(',')
        .map(|node| {
            node.split(':')
                .map(|c| c.trim().parse::<f64>().map_err(|e| Failure::Input(format!("node coordinate {c:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn load_config(path: Option<&PathBuf>) -> Result<(Config, PathBuf), Failure> {
    let Some(path) = path else {
        return Ok((Config::default(), PathBuf::from(".")));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
    let config: Config =
        toml::from_str(&text).map_err(|e| Failure::Input(format!("config {}: {e}", path.display())))?;
    let dir = path.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    Ok((config, dir))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (config, base_dir) = load_config(cli.config.as_ref())?;
    let ctx = Context {
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
        base_dir,
        out: cli.out,
        tol_flag: cli.tol,
    };
    match cli.command {
        Command::Minimize => commands::minimize(&ctx),
        Command::CheckCritical => commands::check_critical(&ctx),
        Command::Variation => commands::variation(&ctx),
        Command::Stencil { index, nodes, h } => {
            let nodes = nodes.as_deref().map(parse_nodes).transpose()?;
            commands::stencil_weights(&ctx, index, nodes, h)
        }
        Command::Energy => commands::energy(&ctx),
        Command::WeakKam => commands::weak_kam(&ctx),
        Command::Transport => commands::transport(&ctx),
        Command::CornerDemo => commands::corner_demo(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::Input(e.kind().to_string() + ": " + e.to_string().lines().next().unwrap_or(""));
            return report(&f);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}

fn report(f: &Failure) -> ExitCode {
    let err = serde_json::json!({
        "error": f.kind(),
        "message": f.message(),
        "exit_code": f.exit_code(),
    });
    eprintln!("{err}");
    ExitCode::from(f.exit_code())
}
