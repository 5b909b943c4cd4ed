//! `qssrate`: key rates, parameter sweeps and figure data for multi-user
//! continuous-variable secret sharing through a measuring relay.
//!
//! Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 internal
//! consistency failure.

mod config;
mod plot;
mod selftest;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qss_core::figures::{figure, run_figure, FIGURE_IDS};
use qss_core::output::{format_number, write_comment_block, write_curves_csv, write_sweep_csv};
use qss_core::schemes::{plob_reference, run_sweep, RowOutcome};
use qss_core::Error;

use config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
    Consistency(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Io(_) => 3,
            Failure::Consistency(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Io(m) | Failure::Consistency(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(m) => Failure::Validation(m),
            Error::Domain(m) | Error::Consistency(m) => Failure::Consistency(m),
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

const AFTER_HELP: &str = "\
Units: covariance matrices and modulation in shot-noise units (vacuum = 1),
rates in bits per channel use, distances in km of fiber at 0.2 dB/km.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 internal consistency failure.";

#[derive(Debug, Parser)]
#[command(name = "qssrate", version, about = "Secret-sharing key rates through a measuring relay", after_help = AFTER_HELP)]
struct Cli {
    /// TOML run configuration (see `rate --help` for the layout).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file (`rate`, `sweep`) or directory (`figure`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, env = "QSSRATE_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Add the repeaterless point-to-point bound for the weakest link.
    #[arg(long, global = true)]
    plob: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rate for the `[protocol]` table, at `mu` or optimized over it.
    ///
    /// Config layout:
    ///   [protocol]  total_users, mu (optional), tau, xi, relay = "joint" | "switch", mu_max
    ///   [[protocol.groups]]  ports | share, dummies, distance_km | eta, omega
    ///   [sweep]     axis, from, to, points, spacing, quantity, moving, cap_km
    ///   [output]    path, plob
    Rate,
    /// Evaluates the `[sweep]` grid and writes one CSV row per point.
    Sweep,
    /// Regenerates a built-in figure as CSV plus SVG.
    Figure {
        /// One of: fig3 fig4 fig5 fig6a fig6b fig8 fig8-noisy fig10 fig12 fig13
        id: String,
    },
    /// Checks the closed-form states and rates against the brute-force pipeline.
    Selftest,
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Err(Failure::Validation("--config PATH is required".into())),
    }
}

/// Opens the destination before any work so a bad path fails fast.
fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(io_failure(p))?))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn cmd_rate(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let out_path = cli.out.as_deref().or(cfg.output.path.as_deref());
    let mut out = open_out(out_path)?;
    let (mu_star, r) = cfg.protocol.evaluate()?;
    let mut text = String::new();
    let mut line = |k: &str, v: String| text.push_str(&format!("{k} = {v}\n"));
    line("rate_bits_per_use", format_number(r.rate));
    line("mutual_information", format_number(r.mutual_information));
    line("holevo", format_number(r.holevo));
    line("nu_plus", format_number(r.nu_plus));
    line("nu_minus", format_number(r.nu_minus));
    line("nu_cond", format_number(r.nu_cond));
    line("mu_star", format_number(mu_star));
    line("mode", format!("\"{}\"", r.mode.as_str()));
    line("status", format!("\"{}\"", r.status.as_str()));
    if cli.plob || cfg.output.plob {
        let eta = cfg.protocol.to_config()?.weakest_pair_transmissivity();
        line("plob", format_number(plob_reference(eta).unwrap_or(f64::NAN)));
    }
    let p = out_path.unwrap_or(Path::new("stdout"));
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io_failure(p))
}

/// Row failures are kept in the CSV; the exit code reports the worst one.
fn row_failures<'a>(rows: impl Iterator<Item = &'a RowOutcome>) -> Result<(), Failure> {
    let mut total = 0;
    let mut failed = Vec::new();
    for o in rows {
        total += 1;
        if let RowOutcome::Failed(e) = o {
            failed.push(e.clone());
        }
    }
    if let Some(e) = failed.iter().find(|e| !matches!(e, Error::Validation(_))) {
        return Err(Failure::from(e.clone()));
    }
    if let Some(e) = failed.first() {
        eprintln!("warning: {} of {total} points failed; first: {e}", failed.len());
        if failed.len() == total {
            return Err(Failure::from(e.clone()));
        }
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Validation("config has no [sweep] table".into()))?;
    let out_path = cli.out.as_deref().or(cfg.output.path.as_deref());
    let mut out = open_out(out_path)?;
    let result = run_sweep(&cfg.protocol, spec, cli.jobs)?;
    let p = out_path.unwrap_or(Path::new("stdout"));
    write_sweep_csv(&mut out, &result, Some(&cfg.echo()), cli.plob || cfg.output.plob).map_err(io_failure(p))?;
    row_failures(result.rows.iter().map(|r| &r.outcome))
}

fn cmd_figure(cli: &Cli, id: &str) -> Result<(), Failure> {
    let fig = figure(id)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(io_failure(&dir))?;
    let csv_path = dir.join(format!("{id}.csv"));
    let mut out = open_out(Some(&csv_path))?;
    let result = run_figure(&fig, cli.jobs)?;
    let mut echo = Vec::new();
    write_comment_block(&mut echo, &format!("figure = \"{id}\"\ntitle = \"{}\"", fig.title)).expect("in-memory write");
    out.write_all(&echo).map_err(io_failure(&csv_path))?;
    write_curves_csv(&mut out, &result.curves, None, cli.plob).map_err(io_failure(&csv_path))?;
    drop(out);
    plot::write_svg(&result, &dir.join(format!("{id}.svg")))?;
    row_failures(result.curves.iter().flat_map(|c| c.1.rows.iter().map(|r| &r.outcome)))
}

fn cmd_selftest() -> Result<(), Failure> {
    let checks = selftest::run()?;
    let mut bad = 0;
    for c in &checks {
        let verdict = if c.passed() { "ok  " } else { "FAIL" };
        println!("{verdict} {}: error {:e} (tol {:e})", c.name, c.error, c.tol);
        bad += usize::from(!c.passed());
    }
    if bad > 0 {
        return Err(Failure::Consistency(format!("{bad} of {} checks failed", checks.len())));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Rate => cmd_rate(&cli),
        Command::Sweep => cmd_sweep(&cli),
        Command::Figure { id } => {
            if FIGURE_IDS.contains(&id.as_str()) {
                cmd_figure(&cli, id)
            } else {
                Err(Failure::Validation(format!("unknown figure {id:?}; valid ids: {}", FIGURE_IDS.join(", "))))
            }
        }
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
