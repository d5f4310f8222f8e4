use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use rhythmic::config::ExperimentConfig;
use rhythmic::experiment::run_experiment;
use rhythmic::plotdata;
use rhythmic::verify::{self, VerifyOptions};

#[derive(Parser)]
#[command(name = "rhythmic", version, about = "Rhythmic control experiments on one-way grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file or bundled preset.
    Run {
        /// Config path or preset name (table1, appendixB, scenario1_sweep, rhythm_sweep, speed_curves).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Replaces the config's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn a results CSV into per-figure series tables.
    Plotdata {
        #[arg(long)]
        results: PathBuf,
        /// Figure id or "all".
        #[arg(long, default_value = "all")]
        figure: String,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Check the acceptance criteria and print one line per criterion.
    Verify {
        /// Full-size Monte Carlo instead of the smoke run.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        /// Comma-separated criterion ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, jobs, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let s = run_experiment(&cfg, &out, jobs, seed)?;
            print!("{}", s.table);
            println!("{} rows written to {}", s.rows, s.results.display());
        }
        Command::Plotdata { results, figure, out } => {
            for p in plotdata::emit(&results, &figure, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Verify { full, seed, jobs, only } => {
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                b = b.num_threads(j.max(1));
            }
            let pool = b.build()?;
            let ids: Vec<u8> = if only.is_empty() { (1..=12).collect() } else { only };
            let opts = VerifyOptions { full, seed };
            let mut failed = 0;
            for id in ids {
                let c = pool.install(|| verify::check(id, &opts))?;
                println!("{c}");
                failed += usize::from(!c.pass);
            }
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
