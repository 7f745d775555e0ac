//! Batch front-end: load a TOML experiment, run one subcommand (optionally
//! over a parameter sweep) and write a CSV or JSON table.
//!
//! Exit codes: 0 on success, 1 on a numerical failure (including any failed
//! sweep point), 2 on a configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod run;
pub mod table;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::RunError;
pub use config::{ConfigError, ExperimentConfig, Subcommand};
pub use run::{run, Outcome};
pub use table::{Cell, Metadata, ResultTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sawtrap", version, about = "Run SAW trapping experiments from a TOML config")]
pub struct Args {
    /// Experiment config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the result file; stdout when neither this nor `output` is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and grids.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the subcommand in the config.
    #[arg(long, value_enum)]
    pub subcommand: Option<Subcommand>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Load the config named by `args` and apply the command-line overrides.
pub fn resolve_config(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(sub) = args.subcommand {
        cfg.subcommand = sub;
    }
    if args.seed.is_some() || args.subcommand.is_some() {
        cfg.validate()?;
    }
    Ok(cfg)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match resolve_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    let outcome = match args.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| run(&cfg)),
            Err(e) => {
                eprintln!("error: cannot start {n} worker threads: {e}");
                return EXIT_NUMERIC;
            }
        },
        None => run(&cfg),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NUMERIC;
        }
    };

    let written = match args.out.as_ref().or(cfg.output.as_ref()) {
        Some(dir) => {
            let path = dir.join(format!("{}.{}", cfg.subcommand.name(), args.format.extension()));
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::File::create(&path))
                .and_then(|f| write_table(&outcome.table, args.format, std::io::BufWriter::new(f)))
                .map(|_| eprintln!("wrote {}", path.display()))
        }
        None => write_table(&outcome.table, args.format, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        // A closed downstream pipe (`| head`) is not a failure.
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return EXIT_OK;
        }
        eprintln!("error: cannot write results: {e}");
        return EXIT_NUMERIC;
    }
    if outcome.failed_points > 0 {
        eprintln!("error: {} sweep point(s) failed; see the `error` column", outcome.failed_points);
        return EXIT_NUMERIC;
    }
    EXIT_OK
}

fn write_table<W: Write>(table: &ResultTable, format: Format, mut out: W) -> std::io::Result<()> {
    match format {
        Format::Csv => table.write_csv(&mut out)?,
        Format::Json => table.write_json(&mut out)?,
    }
    out.flush()
}
