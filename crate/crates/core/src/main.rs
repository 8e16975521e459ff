use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cylstereo::asymptotics::{BandwidthConfig, BandwidthScale};
use cylstereo::cli::{cmd_estimate, cmd_simulate, cmd_table3, Command, GridSpec, RunConfig, Schema, Target};
use cylstereo::simulation::SimulationMode;
use cylstereo::{Error, Result};

/// Size distributions of oriented cylinders from planar sections.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Width,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Slice,
}

impl From<ModeArg> for SimulationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Direct => SimulationMode::Direct2D,
            ModeArg::Slice => SimulationMode::Slice3D,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate CDFs, moments and covariance from a CSV of rectangles.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "z")]
        schema: SchemaArg,
        /// Comma-separated: vol, surf, ratio, sqradius, height.
        #[arg(long, default_value = "vol,surf,ratio,sqradius,height")]
        kinds: String,
        /// MIN:MAX:POINTS[:lin|log]; empty bounds follow the data.
        #[arg(long)]
        grid: Option<String>,
        /// Bandwidth constant, relative to the median of Z.
        #[arg(long, default_value_t = 1.0)]
        cb: f64,
        /// Use the bandwidth constant in the units of Z instead.
        #[arg(long)]
        cb_absolute: bool,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic observation CSV.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "direct")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicated covariance estimation at several sample sizes.
    Table3 {
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "50,500,5000,50000")]
        sizes: Vec<usize>,
        #[arg(long, value_enum, default_value = "direct")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1.0)]
        cb: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn bandwidth(cb: f64, absolute: bool) -> Result<BandwidthConfig> {
    let scale = if absolute { BandwidthScale::Absolute } else { BandwidthScale::MedianZ };
    BandwidthConfig::new(cb, scale)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Estimate {
            input,
            schema,
            kinds,
            grid,
            cb,
            cb_absolute,
            out,
        } => {
            let mut cfg = RunConfig::new(Command::Estimate, out);
            cfg.input = Some(input);
            cfg.schema = match schema {
                SchemaArg::Width => Schema::Width,
                SchemaArg::Z => Schema::Z,
            };
            cfg.kinds = Target::parse_list(&kinds)?;
            if let Some(g) = grid {
                cfg.grid = g.parse::<GridSpec>()?;
            }
            cfg.bandwidth = bandwidth(cb, cb_absolute)?;
            for path in cmd_estimate(&cfg)? {
                println!("{}", path.display());
            }
        }
        Cmd::Simulate { n, seed, mode, out } => {
            let mut cfg = RunConfig::new(Command::Simulate, out);
            cfg.n = n;
            cfg.seed = seed;
            cfg.mode = mode.into();
            println!("{}", cmd_simulate(&cfg)?.display());
        }
        Cmd::Table3 {
            replicates,
            seed,
            sizes,
            mode,
            cb,
            out,
        } => {
            let mut cfg = RunConfig::new(Command::Table3, out);
            cfg.replicates = replicates;
            cfg.seed = seed;
            cfg.sizes = sizes;
            cfg.mode = mode.into();
            cfg.bandwidth = bandwidth(cb, false)?;
            println!("{}", cmd_table3(&cfg)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CYLSTEREO_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
