use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cpdual_cli::commands::{self, CliError, DualFilter};
use cpdual_cli::config::{Format, RunConfig};
use cpdual_cli::report::Report;
use cpdual_core::exec::Execution;

#[derive(Parser)]
#[command(name = "cpdual", version, about = "K-theory and duality checks for graph algebras")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    exec: Option<ExecArg>,
    /// Floating-point tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

#[derive(Subcommand)]
enum Cmd {
    /// K-theory and K-homology of O_E and its dual candidates.
    Kgroups { graph: PathBuf },
    /// Duality ladders, theta certificates and cap products.
    Duality {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        dual: DualFilter,
        /// Add 1 to one rung entry and report the failing squares.
        #[arg(long)]
        perturb_rung: bool,
    },
    /// Assumption 1 and the super-strong condition, per length.
    Assumptions {
        graph: PathBuf,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Truncated Fock-space and Kasparov-module checks.
    FockVerify {
        #[arg(required_unless_present = "graph_flag")]
        graph: Option<PathBuf>,
        #[arg(long = "graph", conflicts_with = "graph")]
        graph_flag: Option<PathBuf>,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Index pairing of a generator word in the graded truncation.
    Index {
        /// Word such as "U", "U^2", "W" or "z".
        word: String,
        /// Rotation angle as a fraction of a full turn.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Everything, over a directory of graph files.
    Report {
        #[arg(default_value = "fixtures")]
        dir: PathBuf,
    },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(e) = cli.exec {
        cfg.execution = match e {
            ExecArg::Sequential => Execution::Sequential,
            ExecArg::Parallel => Execution::Parallel,
        };
    }
    if let Some(t) = cli.tol {
        cfg.tolerances.float = t;
    }
    match &cli.cmd {
        Cmd::Assumptions { k_max, n_max, .. } => {
            cfg.asymptotics.k_max = k_max.unwrap_or(cfg.asymptotics.k_max);
            cfg.asymptotics.n_max = n_max.unwrap_or(cfg.asymptotics.n_max);
        }
        Cmd::FockVerify { level: Some(l), .. } => cfg.truncation.fock_level = *l,
        Cmd::Index { theta, modes, window, .. } => {
            if let Some(t) = theta {
                cfg.truncation.theta = t.clone();
            }
            cfg.truncation.modes = modes.unwrap_or(cfg.truncation.modes);
            cfg.truncation.window = window.unwrap_or(cfg.truncation.window);
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let cfg = resolve(cli)?;
    let single = |name: &str, graph: &PathBuf, f: &dyn Fn(&commands::GraphInput) -> Result<Vec<_>, CliError>| {
        let input = commands::load_graph(graph)?;
        let sections = f(&input)?;
        Ok(Report::new(name, &cfg, vec![input.info], sections))
    };
    match &cli.cmd {
        Cmd::Kgroups { graph } => single("kgroups", graph, &commands::kgroups),
        Cmd::Duality { graph, dual, perturb_rung } => single("duality", graph, &|i| commands::duality(i, &cfg, *dual, *perturb_rung)),
        Cmd::Assumptions { graph, .. } => single("assumptions", graph, &|i| commands::assumptions(i, &cfg)),
        Cmd::FockVerify { graph, graph_flag, .. } => {
            let path = graph.as_ref().or(graph_flag.as_ref()).expect("clap requires a graph");
            single("fock-verify", path, &|i| commands::fock_verify(i, &cfg))
        }
        Cmd::Index { word, .. } => Ok(Report::new("index", &cfg, Vec::new(), commands::index(&cfg, word)?)),
        Cmd::Report { dir } => commands::report(dir, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = report.render(report.config.format);
            match &cli.output {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, &text) {
                        eprintln!("error: cannot write `{}`: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
