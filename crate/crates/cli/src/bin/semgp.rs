use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semgp::{parse_config, run_campaign, Method, Overrides, SemanticSetting};

#[derive(Parser)]
#[command(name = "semgp", version, about = "Multi-objective GP for imbalanced binary classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign of repeated runs and write CSV results.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Delimited data file with a header row and the class label last.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Label of the minority class.
    #[arg(long)]
    minority: Option<String>,
    /// Decomposition method (repeatable): wgt, tch or pbi.
    #[arg(long = "method")]
    methods: Vec<Method>,
    /// Semantic neighbour ordering: on, off or both.
    #[arg(long)]
    semantic: Option<SemanticSetting>,
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run i uses seed XOR i.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel runs (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (falls back to $SEMGP_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG scatter plots for every run.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Neighbourhood size T.
    #[arg(long)]
    neighborhood: Option<usize>,
    /// Semantic similarity threshold.
    #[arg(long)]
    ubss: Option<f64>,
    /// PBI penalty.
    #[arg(long)]
    theta: Option<f64>,
    /// Mating tournament size within the neighbourhood (0 = uniform).
    #[arg(long)]
    tournament: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run(args) = Cli::parse().command;
    let flags = Overrides {
        dataset: args.dataset,
        minority: args.minority,
        methods: args.methods,
        semantic: args.semantic,
        runs: args.runs,
        seed: args.seed,
        jobs: args.jobs,
        out: args.out,
        svg: args.svg,
        population: args.population,
        generations: args.generations,
        neighborhood: args.neighborhood,
        ubss: args.ubss,
        theta: args.theta,
        tournament: args.tournament,
    };
    let cfg = match parse_config(args.config.as_deref(), &flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("semgp: {e}");
            return ExitCode::from(1);
        }
    };
    match run_campaign(&cfg) {
        Ok(summary) => {
            print!("{}", summary.table());
            println!("results in {}", summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("semgp: {e}");
            ExitCode::from(2)
        }
    }
}
