use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irsrl::compare::{compare_variants, SweepAxis};
use irsrl::experiment::{run_experiment, RunOptions};
use irsrl::oracle::{run_oracle_suite, OracleOptions};
use irsrl::plot::plot_curves;
use irsrl::{load_config, ExperimentConfig, HarnessError, Variant};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(name = "irsrl", version, about = "IRS phase-shift actor-critic trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write metrics, checkpoints and a manifest.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        variant: Option<Variant>,
        /// Train only this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one axis and report the final-performance statistic per setting.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sweep: SweepAxis,
        /// Comma-separated values for the window or irs-size axes.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render learning curves from metrics files as SVG.
    Plot {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the signal model against its oracles on random channels.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
    },
}

/// An error plus the exit status it maps to.
struct Failure(HarnessError, u8);

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUN };
        Failure(e, code)
    }
}

/// Any failure to produce a config, including an unreadable file, is a
/// config error.
fn load(path: &std::path::Path) -> Result<ExperimentConfig, Failure> {
    load_config(path).map_err(|e| Failure(e, EXIT_CONFIG))
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Train {
            config,
            variant,
            seed,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(v) = variant {
                cfg.variant = v;
            }
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(o) = out {
                cfg.out_dir = o.display().to_string();
            }
            let summary = run_experiment(&cfg, &RunOptions::default())?;
            for s in &summary.seeds {
                match &s.error {
                    Some(e) => println!("seed {}: failed: {e}", s.seed),
                    None => println!(
                        "seed {}: {} ({} episodes), final mean SNR {:.3} dB",
                        s.seed,
                        s.status(),
                        s.rows.len(),
                        s.final_snr_db()
                    ),
                }
            }
            println!("variant {}: final mean SNR {:.3} dB", cfg.variant, summary.final_snr_db());
            println!("wrote {}", summary.out_dir.display());
            let any_failed = summary.seeds.iter().any(|s| s.error.is_some());
            Ok(if any_failed { ExitCode::from(EXIT_RUN) } else { ExitCode::SUCCESS })
        }
        Command::Compare {
            config,
            sweep,
            values,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(o) = out {
                cfg.out_dir = o.display().to_string();
            }
            let cmp = compare_variants(&cfg, sweep, values.as_deref(), &RunOptions::default())?;
            print!("{}", cmp.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { inputs, out } => {
            let paths: Vec<&std::path::Path> = inputs.iter().map(PathBuf::as_path).collect();
            plot_curves(&paths, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { config, instances } => {
            let cfg = load(&config)?;
            let opts = OracleOptions {
                seed: cfg.seeds[0],
                instances,
                max_grid_elements: cfg.irs_elements.min(4),
                irs_elements: cfg.irs_elements,
                antennas: cfg.antennas,
                ..OracleOptions::default()
            };
            let report = run_oracle_suite(&opts)?;
            print!("{report}");
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_ORACLE)
            })
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching config errors.
    let cli = Cli::parse();
    run(cli).unwrap_or_else(|Failure(e, code)| {
        eprintln!("error: {e}");
        ExitCode::from(code)
    })
}
