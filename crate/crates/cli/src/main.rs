use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdconv::sim::Arch;
use sdconv::{Error, SparsityMode};
use sdconv_cli::commands::{self, CliError, CliResult, Faults, Format, RunMethod, SimulateArgs};
use sdconv_cli::NetworkConfig;

/// Split deconvolution toolkit: convert, verify, count and cost strided
/// transposed convolutions.
#[derive(Parser)]
#[command(name = "sdconv", version)]
struct Cli {
    /// Seed for generated test data.
    #[arg(long, global = true, env = "SDCONV_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a filter file into stride-squared sub-filters.
    Split {
        filter: PathBuf,
        #[arg(long)]
        stride: usize,
        /// Output crop of the layer, folded into the reported merge offsets.
        #[arg(long, default_value_t = 0)]
        crop: usize,
        /// Output path prefix; defaults to the filter path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check oracle, zero-insertion and split results agree exactly.
    Verify {
        #[arg(required_unless_present = "grid", conflicts_with = "grid")]
        config: Option<PathBuf>,
        /// Use the built-in small-instance grid instead of a config.
        #[arg(long)]
        grid: bool,
        #[command(flatten)]
        net: NetFlags,
        #[arg(long, hide = true)]
        inject_crop_fault: bool,
    },
    /// MAC and weight-parameter census.
    Analyze {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[command(flatten)]
        net: NetFlags,
    },
    /// Cycle estimates on the processor models.
    Simulate {
        config: PathBuf,
        /// Architecture; both when omitted.
        #[arg(long, value_enum)]
        arch: Option<ArchArg>,
        /// Comma-separated sparsity modes; all supported when omitted.
        #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
        modes: Vec<SparsityMode>,
        /// Zero-insertion baseline may only skip all-zero window rows.
        #[arg(long)]
        line_skip: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[command(flatten)]
        net: NetFlags,
    },
    /// Run a network end to end and write the output tensor.
    Run {
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// One filter file per layer, in order.
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        filters: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Sd)]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct NetFlags {
    /// Require each layer's output shape to be the next layer's input shape.
    #[arg(long)]
    chained: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Dot,
    Grid2d,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Oracle,
    Nzp,
    Sd,
}

fn parse_mode(s: &str) -> Result<SparsityMode, String> {
    SparsityMode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (dense, asparse, wsparse, awsparse)"))
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Markdown => Format::Markdown,
        }
    }
}

fn load(path: &Path, net: &NetFlags) -> CliResult<NetworkConfig> {
    let cfg = NetworkConfig::read(path).map_err(|e| match e {
        Error::Parse { line, msg } => CliError::Usage(format!("{}:{line}: {msg}", path.display())),
        other => other.into(),
    })?;
    if net.chained {
        cfg.check_chained()?;
    }
    Ok(cfg)
}

/// Output text and whether the command succeeded.
fn dispatch(cli: Cli) -> CliResult<(String, bool)> {
    let seed = cli.seed;
    match cli.command {
        Command::Split { filter, stride, crop, out } => {
            let base = out.unwrap_or_else(|| filter.clone());
            Ok((commands::split(&filter, stride, crop, &base)?, true))
        }
        Command::Verify { config, grid, net, inject_crop_fault } => {
            let faults = Faults { crop: inject_crop_fault };
            match config {
                Some(path) if !grid => commands::verify_config(&load(&path, &net)?, seed, faults),
                _ => commands::verify_grid(seed, faults),
            }
        }
        Command::Analyze { config, format, net } => Ok((commands::analyze(&load(&config, &net)?, format.into()), true)),
        Command::Simulate { config, arch, modes, line_skip, format, net } => {
            let args = SimulateArgs {
                archs: arch
                    .map(|a| match a {
                        ArchArg::Dot => Arch::DotArray,
                        ArchArg::Grid2d => Arch::Grid2D,
                    })
                    .into_iter()
                    .collect(),
                modes,
                line_skip,
                format: format.into(),
            };
            Ok((commands::simulate(&load(&config, &net)?, &args)?, true))
        }
        Command::Run { config, input, filters, method, out } => {
            let method = match method {
                MethodArg::Oracle => RunMethod::Oracle,
                MethodArg::Nzp => RunMethod::Nzp,
                MethodArg::Sd => RunMethod::Sd,
            };
            let cfg = load(&config, &NetFlags { chained: false })?;
            commands::run_files(&cfg, &input, &filters, method, &out)?;
            Ok((String::new(), true))
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok((text, ok)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            if ok {
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
