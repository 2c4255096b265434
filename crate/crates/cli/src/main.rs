use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncycle::io::read_json;
use ncycle::report::{
    bounds_csv, bounds_text, cmd_analyze, cmd_bounds, cmd_figure3, cmd_simulate, cmd_table1,
    figure3_csv, table1_csv, table1_text, write_report, Format, Mode, RunConfig, StateSpec,
    VIOLATION_SIGMAS,
};
use ncycle::Error;

/// Exit status when the analysis ran but some n did not violate at 3σ.
const EXIT_NO_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_COVERAGE: u8 = 3;
const EXIT_RESOLUTION: u8 = 4;
const EXIT_STATISTICS: u8 = 5;
const EXIT_IO: u8 = 6;
const EXIT_RESOURCE: u8 = 7;
const EXIT_INTERNAL: u8 = 8;

#[derive(Parser, Debug)]
#[command(name = "ncycle", version, about = "n-cycle noncontextuality: bounds, scan simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Noncontextual (brute force) and quantum bounds per n.
    Bounds(Common),
    /// Simulate a coincidence scan and write scan.csv + scan.config.json.
    Simulate(Common),
    /// Analyse a grid CSV for each requested n.
    Analyze {
        /// Grid CSV written by `simulate` (or external data in that format).
        grid: PathBuf,
        /// Optics config of the grid; defaults to the `<stem>.config.json` sidecar.
        #[arg(long)]
        grid_config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate and analyse all n in one scan, Table 1 layout.
    Table1(Common),
    /// Game probabilities (Ω+n)/2n for experimental, noncontextual and quantum values.
    Figure3(Common),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; fields not given keep their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated even n values, e.g. 4,6,8.
    #[arg(long = "n", value_delimiter = ',', value_name = "LIST")]
    n_list: Option<Vec<usize>>,
    #[arg(long = "out", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output formats (repeat or comma-separate).
    #[arg(long = "format", value_enum, value_delimiter = ',')]
    formats: Option<Vec<FormatArg>>,
    /// Replace the diffraction envelope by 1.
    #[arg(long)]
    flat_envelope: bool,
    /// Prepare p·φ⁺ + (1−p)·I/4 instead of φ⁺.
    #[arg(long, value_name = "FLOAT")]
    mixed_p: Option<f64>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

impl Common {
    fn resolve(&self, mode: Mode) -> Result<RunConfig, Error> {
        let mut cfg: RunConfig = match &self.config {
            Some(path) => read_json(path)?,
            None => RunConfig::default(),
        };
        cfg.mode = mode;
        if let Some(seed) = self.seed {
            cfg.optics.seed = seed;
        }
        if let Some(n) = &self.n_list {
            cfg.n_list = n.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(f) = &self.formats {
            cfg.formats = f
                .iter()
                .map(|f| match f {
                    FormatArg::Csv => Format::Csv,
                    FormatArg::Json => Format::Json,
                })
                .collect();
        }
        if self.flat_envelope {
            cfg.optics.flat_envelope = true;
        }
        if let Some(p) = self.mixed_p {
            cfg.state = StateSpec::Mixed { p };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::InsufficientCoverage(_) => EXIT_COVERAGE,
        Error::Resolution(_) => EXIT_RESOLUTION,
        Error::UndefinedCorrelation { .. } => EXIT_STATISTICS,
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        Error::ResourceLimit(_) => EXIT_RESOURCE,
        Error::Internal(_) => EXIT_INTERNAL,
    }
}

fn print_config(cfg: &RunConfig) -> Result<u8, Error> {
    print!("{}", ncycle::io::to_json_string(cfg)?);
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Bounds(common) => {
            let cfg = common.resolve(Mode::Bounds)?;
            if common.print_config {
                return print_config(&cfg);
            }
            let rows = cmd_bounds(&cfg.n_list)?;
            print!("{}", bounds_text(&rows));
            write_report(&cfg, "bounds", &rows, &bounds_csv(&rows))?;
            Ok(0)
        }
        Command::Simulate(common) => {
            let cfg = common.resolve(Mode::Simulate)?;
            if common.print_config {
                return print_config(&cfg);
            }
            let (grid, path) = cmd_simulate(&cfg)?;
            println!(
                "wrote {} ({} points, {} counts)",
                path.display(),
                grid.counts().len(),
                grid.total_counts()
            );
            Ok(0)
        }
        Command::Analyze { grid, grid_config, common } => {
            let cfg = common.resolve(Mode::Analyze)?;
            if common.print_config {
                return print_config(&cfg);
            }
            let results = cmd_analyze(&grid, grid_config.as_deref(), &cfg)?;
            let mut all = true;
            for r in &results {
                let ok = r.violates(VIOLATION_SIGMAS);
                all &= ok;
                println!(
                    "n = {:>2}: Ω = {:.4} ± {:.4} (NCHV {}, quantum {:.4}, angles {:.4}) {:.1}σ{}",
                    r.n,
                    r.omega,
                    r.sigma_omega,
                    r.nchv_bound,
                    r.quantum_bound,
                    r.omega_bd_angles,
                    r.violation_sigmas(),
                    if ok { "" } else { "  no violation" }
                );
            }
            Ok(if all { 0 } else { EXIT_NO_VIOLATION })
        }
        Command::Table1(common) => {
            let cfg = common.resolve(Mode::Table1)?;
            if common.print_config {
                return print_config(&cfg);
            }
            let rows = cmd_table1(&cfg)?;
            print!("{}", table1_text(&rows));
            write_report(&cfg, "table1", &rows, &table1_csv(&rows))?;
            Ok(if rows.iter().all(|r| r.violated) { 0 } else { EXIT_NO_VIOLATION })
        }
        Command::Figure3(common) => {
            let cfg = common.resolve(Mode::Figure3)?;
            if common.print_config {
                return print_config(&cfg);
            }
            let rows = cmd_figure3(&cfg)?;
            let csv = figure3_csv(&rows);
            print!("{csv}");
            write_report(&cfg, "figure3", &rows, &csv)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
