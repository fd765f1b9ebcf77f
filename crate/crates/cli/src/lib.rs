//! `proplane` command line.
//!
//! Exit codes: 0 intervention, 2 non-intervention, 3 out of plane, 1 error.
//! Commands that do not produce a verdict exit 0 on success.

use std::ffi::OsString;
use std::io::{self, Write as _};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use proplane_api::AppState;
use proplane_core::render::{render_plane, to_svg};
use proplane_core::store::{write_exclusive, BUILTIN_SOURCES};
use proplane_core::sweep::{sweep, SweepVariable};
use proplane_core::{
    assess, load_scenario, render_assessment, Assessment, CulturalContext, Overall, ParsedScenario,
};

pub const EXIT_INTERVENTION: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NON_INTERVENTION: i32 = 2;
pub const EXIT_OUT_OF_PLANE: i32 = 3;

pub fn exit_code(overall: Overall) -> i32 {
    match overall {
        Overall::Intervention => EXIT_INTERVENTION,
        Overall::NonIntervention => EXIT_NON_INTERVENTION,
        Overall::OutOfPlane => EXIT_OUT_OF_PLANE,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "proplane",
    version,
    about = "Proportionality assessment of face-recognition deployments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assess a scenario; the exit code carries the verdict.
    Assess {
        #[arg(long)]
        scenario: PathBuf,
        /// tolerant, moderate, conservative or a numeric H/W ratio.
        #[arg(long)]
        ratio: Option<String>,
        /// Write the document here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate block decisions while one parameter varies.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_parser = ["w", "t", "ratio"])]
        vary: String,
        /// `A:B`, inclusive.
        #[arg(long)]
        range: String,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        ratio: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the plane for a scenario.
    ExportPlane {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Vector)]
        format: Format,
        #[arg(long)]
        ratio: Option<String>,
    },
    /// Write the bundled case-study scenarios into a directory.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the local HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Directory of additional `<name>.toml` scenarios.
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// SVG image.
    Vector,
    /// JSON drawing instructions.
    Document,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own usage code (2) would read as a verdict
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure(message)) => {
            eprintln!("proplane: {message}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Assess {
            scenario,
            ratio,
            out,
        } => {
            let a = assess_file(&scenario, ratio.as_deref())?;
            emit(out.as_deref(), render_assessment(&a).as_bytes())?;
            Ok(exit_code(a.overall))
        }
        Command::Sweep {
            scenario,
            vary,
            range,
            steps,
            ratio,
            out,
        } => {
            let parsed = load(&scenario, ratio.as_deref())?;
            let variable: SweepVariable = vary.parse()?;
            let (lo, hi) = parse_range(&range)?;
            let table = sweep(&parsed.scenario, &parsed.tables, variable, lo, hi, steps)?;
            emit(out.as_deref(), table.to_tsv().as_bytes())?;
            Ok(0)
        }
        Command::ExportPlane {
            scenario,
            out,
            format,
            ratio,
        } => {
            let a = assess_file(&scenario, ratio.as_deref())?;
            let plane = render_plane(&a);
            let bytes = match format {
                Format::Vector => to_svg(&plane),
                Format::Document => {
                    let mut s = serde_json::to_string_pretty(&plane)?;
                    s.push('\n');
                    s
                }
            };
            write_exclusive(&out, bytes.as_bytes())?;
            Ok(0)
        }
        Command::Fixtures { out } => {
            std::fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for (name, src) in BUILTIN_SOURCES {
                let path = out.join(format!("{name}.toml"));
                write_exclusive(&path, src.as_bytes())?;
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Serve { bind, scenario_dir } => {
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("proplane: listening on http://{bind}");
            runtime.block_on(proplane_api::serve(bind, AppState { scenario_dir }))?;
            Ok(0)
        }
    }
}

fn load(path: &Path, ratio: Option<&str>) -> Result<ParsedScenario, Failure> {
    let mut parsed = load_scenario(path)?;
    if let Some(r) = ratio {
        parsed.scenario.context = CulturalContext::parse(r)?;
    }
    Ok(parsed)
}

fn assess_file(path: &Path, ratio: Option<&str>) -> Result<Assessment, Failure> {
    let parsed = load(path, ratio)?;
    Ok(assess(&parsed.scenario, &parsed.tables)?)
}

fn parse_range(range: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure(format!("invalid range {range:?}, expected A:B"));
    let (a, b) = range.split_once(':').ok_or_else(bad)?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    Ok((parse(a)?, parse(b)?))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => Ok(write_exclusive(path, bytes)?),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_cover_every_verdict() {
        assert_eq!(exit_code(Overall::Intervention), 0);
        assert_eq!(exit_code(Overall::NonIntervention), 2);
        assert_eq!(exit_code(Overall::OutOfPlane), 3);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.1:0.9").ok(), Some((0.1, 0.9)));
        assert!(parse_range("0.1").is_err());
        assert!(parse_range("a:b").is_err());
    }

    #[test]
    fn usage_errors_are_not_verdicts() {
        assert_eq!(run(["proplane", "assess"]), EXIT_ERROR);
        assert_eq!(run(["proplane", "frobnicate"]), EXIT_ERROR);
        assert_eq!(run(["proplane", "--help"]), 0);
    }
}
