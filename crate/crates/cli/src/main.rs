use clap::{Args, Parser, Subcommand};
use evh_cli::{
    execute, parse_ladder, Experiment, ExperimentConfig, Ladder, EXIT_INTERNAL, EXIT_OK,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "evh",
    version,
    about = "Material-law certification, homogenization and causal solves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; flags override the config file.
    Run(RunArgs),
    /// List preset ids.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    experiment: Option<Experiment>,
    /// TOML experiment description.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    law: Option<PathBuf>,
    /// Comma-separated law files.
    #[arg(long, value_delimiter = ',')]
    laws: Option<Vec<PathBuf>>,
    #[arg(long)]
    operator: Option<PathBuf>,
    #[arg(long)]
    split: Option<usize>,
    #[arg(long)]
    kappa: Option<String>,
    /// `4..64` (doubling) or `4,8,16`.
    #[arg(long, value_parser = ladder_arg)]
    ladder: Option<LadderArg>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long = "d")]
    d: Option<f64>,
    /// Truncation time of the causality check.
    #[arg(long)]
    at: Option<f64>,
    #[arg(long)]
    probes: Option<usize>,
    /// Skip the fine-scale solves of heat_sweep.
    #[arg(long)]
    no_solve: bool,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone)]
struct LadderArg(Vec<usize>);

fn ladder_arg(s: &str) -> Result<LadderArg, String> {
    parse_ladder(s).map(LadderArg).map_err(|e| e.to_string())
}

impl RunArgs {
    fn config(self) -> Result<ExperimentConfig, evh_cli::ConfigError> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let seed = self.seed;
        let flags = ExperimentConfig {
            experiment: self.experiment,
            preset: self.preset,
            law: self.law,
            laws: self.laws,
            operator: self.operator,
            split: self.split,
            kappa: self.kappa,
            ladder: self.ladder.map(|l| Ladder::List(l.0)),
            grid: self.grid,
            n: self.n,
            samples: self.samples,
            nu: self.nu,
            c: self.c,
            d: self.d,
            at: self.at,
            probes: self.probes,
            solve: self.no_solve.then_some(false),
            output: self.out,
            ..Default::default()
        };
        let mut cfg = base.overlay(flags);
        if let Some(s) = seed {
            cfg.rng_seed = s;
        }
        Ok(cfg)
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("EVH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // fails only if a pool exists already
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INTERNAL
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    init_threads();
    match cli.command {
        Command::Presets => {
            for id in evh::models::preset_ids() {
                println!("{id}");
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => {
            let cfg = match args.config() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INTERNAL as u8);
                }
            };
            let (code, outcome) = execute(&cfg);
            let dir = cfg.output_dir();
            match outcome {
                Ok(o) => {
                    for t in &o.tables {
                        println!(
                            "{}",
                            dir.join("tables").join(format!("{}.csv", t.name)).display()
                        );
                    }
                    println!("{}", dir.join("result.json").display());
                }
                Err(e) => match e.violated_condition() {
                    Some(c) => eprintln!("hypothesis violated [{c}]: {e}"),
                    None => eprintln!("error: {e}"),
                },
            }
            ExitCode::from(code as u8)
        }
    }
}
