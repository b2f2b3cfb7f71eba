use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polarpo::cache::{render_ppm, sweep_csv, Cache, CachedInputs};
use polarpo::construction::{
    construct_with, gamma_sweep_n_with, gamma_sweep_rate_with, relation_matrix,
    ConstructOptions, ConstructionError,
};
use polarpo::dimension_reduction::DrError;
use polarpo::order::{OrderError, Source};
use polarpo::reliability::{import_ranking, ChannelModel, ReliabilityRanking};

/// Polar code construction with channel-independent partial orders and
/// dimension reduction.
#[derive(Parser)]
#[command(name = "polarpo", version)]
struct Cli {
    /// Cache directory (defaults to $POLARPO_CACHE_DIR; no caching if unset)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build (or load) the partial-order relation matrix and summarize it
    Relation {
        #[arg(short = 'n')]
        n: u32,
    },
    /// Classify bit channels into information, frozen and undetermined sets
    Construct(ConstructArgs),
    /// Sweep gamma over code rates or block lengths and write CSV
    Sweep {
        #[command(subcommand)]
        mode: SweepMode,
    },
    /// Render the relation matrix as a binary PPM image
    Render {
        #[arg(short = 'n')]
        n: u32,
        #[command(flatten)]
        dr: DrArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the built-in ranking of a channel in the JSON exchange format
    Rank {
        #[arg(long)]
        channel: ChannelModel,
        /// Block exponent of the ranked channels
        #[arg(long)]
        nu: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DrArgs {
    /// Channel spec: bec:<erasure> or awgn:<snr_db>
    #[arg(long)]
    channel: Option<ChannelModel>,
    /// Apply dimension reduction (implied by --channel for render)
    #[arg(long)]
    dr: bool,
    /// Upper part size for dimension reduction (default n - 3)
    #[arg(long)]
    nu: Option<u32>,
    /// Run a transitive closure pass after dimension reduction
    #[arg(long)]
    closure: bool,
    /// Ranking file for the upper part, replacing the built-in evaluator
    #[arg(long)]
    ranking: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(short = 'n')]
    n: u32,
    /// Code rate; K = floor(N R)
    #[arg(short = 'R')]
    rate: f64,
    #[command(flatten)]
    dr: DrArgs,
    /// Resolve the undetermined set with the full-length metric
    #[arg(long)]
    resolve: bool,
    /// Full-length ranking file used by --resolve
    #[arg(long)]
    full_ranking: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SweepMode {
    /// gamma as a function of the code rate at fixed n
    Rate {
        #[arg(short = 'n')]
        n: u32,
        /// Comma-separated rates (default 0.05, 0.10, ..., 0.95)
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[command(flatten)]
        dr: DrArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// gamma as a function of n at fixed rate
    Blocklength {
        #[arg(short = 'R')]
        rate: f64,
        #[arg(long, default_value_t = 4)]
        n_min: u32,
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[command(flatten)]
        dr: DrArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Consistency(String),
    Other(String),
}

impl From<ConstructionError> for Failure {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Dr(
                DrError::Contradiction { .. } | DrError::Conflict { .. } | DrError::Order(OrderError::Cycle { .. }),
            )
            | ConstructionError::Order(OrderError::Cycle { .. }) => Failure::Consistency(e.to_string()),
            ConstructionError::Rate(_) | ConstructionError::MissingChannel(_) => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Other(e.to_string()),
        }
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn read_ranking(path: &Path) -> Result<ReliabilityRanking, Failure> {
    let file = File::open(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    import_ranking(file).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::Other(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(bytes).map_err(other),
    }
}

impl DrArgs {
    fn options(&self, implied: bool) -> Result<ConstructOptions, Failure> {
        let use_dr = self.dr || (implied && self.channel.is_some());
        if use_dr && self.channel.is_none() && self.ranking.is_none() {
            return Err(Failure::Usage(
                "dimension reduction needs --channel or --ranking".into(),
            ));
        }
        let upper_ranking = self.ranking.as_deref().map(read_ranking).transpose()?;
        Ok(ConstructOptions {
            use_dr,
            upper_levels: self.nu,
            closure: self.closure,
            upper_ranking,
            ..Default::default()
        })
    }
}

fn default_rates() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut inputs = CachedInputs::new(Cache::locate(cli.cache_dir));
    match cli.command {
        Command::Relation { n } => {
            let m = polarpo::construction::Inputs::po_matrix(&mut inputs, n)?;
            println!(
                "n={} N={} determined={} pairs={} density={:.6}",
                n,
                m.block_length(),
                m.determined_count(),
                m.pair_count(),
                m.density()
            );
        }
        Command::Construct(args) => {
            let mut opts = args.dr.options(false)?;
            opts.resolve = args.resolve;
            opts.full_ranking = args.full_ranking.as_deref().map(read_ranking).transpose()?;
            if opts.resolve && opts.full_ranking.is_none() && args.dr.channel.is_none() {
                return Err(Failure::Usage("--resolve needs --channel or --full-ranking".into()));
            }
            let c = construct_with(&mut inputs, args.n, args.rate, args.dr.channel, &opts)?;
            emit(args.out.as_deref(), c.to_json().as_bytes())?;
        }
        Command::Sweep { mode } => {
            let (points, out) = match mode {
                SweepMode::Rate { n, rates, dr, out } => {
                    let opts = dr.options(false)?;
                    let rates = rates.unwrap_or_else(default_rates);
                    let model = dr.channel;
                    (
                        gamma_sweep_rate_with(&mut inputs, n, model, &opts, &rates)?,
                        out,
                    )
                }
                SweepMode::Blocklength {
                    rate,
                    n_min,
                    n_max,
                    dr,
                    out,
                } => {
                    if n_min == 0 || n_min > n_max {
                        return Err(Failure::Usage(format!("empty block length range {n_min}..={n_max}")));
                    }
                    let opts = dr.options(false)?;
                    let ns: Vec<u32> = (n_min..=n_max).collect();
                    (
                        gamma_sweep_n_with(&mut inputs, &ns, rate, dr.channel, &opts)?,
                        out,
                    )
                }
            };
            emit(out.as_deref(), sweep_csv(&points).as_bytes())?;
        }
        Command::Render { n, dr, out } => {
            if n > 12 {
                return Err(Failure::Usage(format!("render supports n <= 12, got {n}")));
            }
            let opts = dr.options(true)?;
            let m = relation_matrix(&mut inputs, n, dr.channel, &opts)?;
            emit(Some(&out), &render_ppm(&m))?;
            eprintln!(
                "{}: {} PO pixels, {} DR pixels",
                out.display(),
                m.count_by_source(Source::Po),
                m.count_by_source(Source::Dr)
            );
        }
        Command::Rank { channel, nu, out } => {
            let r = polarpo::construction::Inputs::ranking(&mut inputs, channel, nu)?;
            emit(out.as_deref(), r.to_json().as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Consistency(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
