use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use racetrack_betree::baseline::write_count_experiment;
use racetrack_betree::bench::{self, Format};
use racetrack_betree::config::RunConfig;
use racetrack_betree::layout::Mapping;
use racetrack_betree::strategy::Strategy;
use racetrack_betree::workload::WorkloadId;

#[derive(Parser)]
#[command(name = "rtbench", version, about = "Racetrack-memory B-epsilon tree experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay one workload and compare against the naive baseline.
    Run(RunArgs),
    /// Compare B-tree and B-epsilon tree key-value pair writes.
    WriteCounts(WriteCountArgs),
    /// Naive versus optimized over dataset sizes and word sizes.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl From<Toggle> for bool {
    fn from(t: Toggle) -> bool {
        matches!(t, Toggle::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workload: Option<String>,
    /// word | bit
    #[arg(long)]
    mapping: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run-phase operations (defaults to the entry count).
    #[arg(long)]
    ops: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

impl Common {
    fn base_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(w) = &self.workload {
            cfg.workload = w.parse::<WorkloadId>()?;
        }
        if let Some(m) = &self.mapping {
            cfg.mapping = m.parse::<Mapping>()?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.ops {
            cfg.ops = Some(o);
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// naive | dcw | pw | bcw
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long, value_enum)]
    encoding: Option<Toggle>,
    #[arg(long, value_enum)]
    parallel_ports: Option<Toggle>,
    /// Shorthand for `--strategy bcw --encoding on --parallel-ports on`.
    #[arg(long, conflicts_with_all = ["strategy", "encoding", "parallel_ports"])]
    optimized: bool,
    #[arg(long)]
    entries: Option<u64>,
    #[arg(long)]
    word_bytes: Option<u32>,
    /// Run every variant of the mapping's comparison set.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct WriteCountArgs {
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    node_capacity: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [1_000u64, 10_000, 100_000, 1_000_000])]
    entries: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 8, 16, 32])]
    word_bytes: Vec<u32>,
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.common.base_config()?;
    if args.optimized {
        cfg.strategy = Strategy::Bcw;
        cfg.encoding = true;
        cfg.parallel_ports = true;
    }
    if let Some(s) = &args.strategy {
        cfg.strategy = s.parse()?;
    }
    if let Some(e) = args.encoding {
        cfg.encoding = e.into();
    }
    if let Some(p) = args.parallel_ports {
        cfg.parallel_ports = p.into();
    }
    if let Some(e) = args.entries {
        cfg.entries = e;
    }
    if let Some(w) = args.word_bytes {
        cfg.word_bits = 8 * w;
    }
    cfg.validate()?;
    let records = if args.compare {
        bench::run_comparison(&cfg)?
    } else {
        bench::run_experiment(&cfg)?
    };
    bench::emit(&records, args.common.format.into(), args.common.out.as_deref())?;
    Ok(())
}

fn write_counts(args: WriteCountArgs) -> Result<()> {
    let points = write_count_experiment(args.n, args.seed, args.node_capacity)?;
    bench::emit_write_counts(&points, args.format.into(), args.out.as_deref())?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    if args.entries.is_empty() || args.word_bytes.is_empty() {
        bail!("sweep needs at least one entry count and one word size");
    }
    let cfg = args.common.base_config()?;
    let records = bench::sweep(&cfg, &args.entries, &args.word_bytes)?;
    bench::emit(&records, args.common.format.into(), args.common.out.as_deref())?;
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::WriteCounts(a) => write_counts(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
