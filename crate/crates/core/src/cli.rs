//! Command-line front end.
//!
//! Exit codes: 0 success (certificate issued, witness found, verification
//! passed), 1 usage or input error, 2 inconclusive certification, 3 no
//! falsifying orbit found, 4 verification ratio below 1.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::constants::{verify_expansion, Probe};
use crate::cover::{build_cover, CoverConfig, CoverOutcome};
use crate::document::{expansion_report_json, from_json, report_json, to_json, witness_json};
use crate::error::{Error, Result};
use crate::falsify::falsify_total_probability;
use crate::measure::lyapunov_table;
use crate::observable::{CenterSign, Observable, Which};
use crate::splitting::{Line, Splitting, DEFAULT_ITERATIONS, DEFAULT_TOLERANCE};
use crate::system::{parse_param, MapSystem, GALLERY};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hypercert", version, about = "Certify or refute uniform expansion of circle and torus maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct SystemArgs {
    /// Gallery system id (see `hypercert gallery`).
    #[arg(long)]
    system: String,
    /// System parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
}

impl SystemArgs {
    fn build(&self) -> Result<MapSystem> {
        let params = self
            .params
            .iter()
            .map(|p| parse_param(p))
            .collect::<Result<Vec<_>>>()?;
        MapSystem::from_id(&self.system, &params)
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ObservableArg {
    Lambda,
    Cu,
    Cs,
    Center,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LineArg {
    Unstable,
    Stable,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SignArg {
    Expanding,
    Contracting,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SplittingArg {
    /// Closed form when available, otherwise estimated.
    Auto,
    Exact,
    Estimated,
}

#[derive(clap::Args, Debug)]
struct ObservableArgs {
    #[arg(long, value_enum, default_value = "lambda")]
    observable: ObservableArg,
    /// Which splitting line is the center direction.
    #[arg(long, value_enum, default_value = "unstable")]
    center_line: LineArg,
    #[arg(long, value_enum, default_value = "expanding")]
    center_sign: SignArg,
    #[arg(long, value_enum, default_value = "auto")]
    splitting: SplittingArg,
    /// Power-iteration length for estimated splittings.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iterations: usize,
}

impl ObservableArgs {
    fn build(&self, system: &MapSystem) -> Result<Observable> {
        let which = match self.observable {
            ObservableArg::Lambda => return Ok(Observable::Lambda),
            ObservableArg::Cu => Which::Cu,
            ObservableArg::Cs => Which::Cs,
            ObservableArg::Center => Which::Center(match self.center_sign {
                SignArg::Expanding => CenterSign::Expanding,
                SignArg::Contracting => CenterSign::Contracting,
            }),
        };
        let mut s = match self.splitting {
            SplittingArg::Auto => Splitting::for_system(system, self.iterations)?,
            SplittingArg::Exact => Splitting::exact(system)?,
            SplittingArg::Estimated => Splitting::estimated(self.iterations, DEFAULT_TOLERANCE),
        };
        if let Which::Center(_) = which {
            s = s.with_center(match self.center_line {
                LineArg::Unstable => Line::Unstable,
                LineArg::Stable => Line::Stable,
            });
        }
        Ok(Observable::directional(which, s))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a cover certificate.
    Certify {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        observable: ObservableArgs,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Certificate (or inconclusive report) path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search periodic orbits for a nonnegative observable average.
    Falsify {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        observable: ObservableArgs,
        #[arg(long)]
        period_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerically probe a certificate's expansion inequality.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 60)]
        nmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit running Birkhoff averages and Lyapunov exponent estimates as CSV.
    Lyapunov {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 16)]
        orbits: usize,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        /// Number of CSV rows; defaults to min(100, length).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List gallery systems and parameter domains.
    Gallery,
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn certify(
    system: &SystemArgs,
    observable: &ObservableArgs,
    rate: f64,
    nmax: usize,
    depth: usize,
    out: Option<&PathBuf>,
) -> Result<i32> {
    let sys = system.build()?;
    let phi = observable.build(&sys)?;
    if let Some(s) = phi.splitting() {
        let residual = crate::splitting::max_invariance_residual(&sys, s, 64)?;
        if s.is_conditional() {
            eprintln!("note: estimated splitting (residual {residual:.3e}); certificate is conditional");
        }
    }
    match build_cover(&sys, &phi, &CoverConfig::new(rate, nmax, depth))? {
        CoverOutcome::Certified(cert) => {
            let k = &cert.constants;
            eprintln!(
                "certified {sys} ({}): boxes={} Nbar={} c={} alpha={} sigma={:.6} C={:.6}",
                cert.observable,
                cert.entries.len(),
                k.nbar,
                k.c,
                k.alpha,
                k.sigma,
                k.big_c
            );
            emit(out, &to_json(&cert)?)?;
            Ok(EXIT_OK)
        }
        CoverOutcome::Inconclusive(report) => {
            eprintln!(
                "inconclusive for {sys}: {} failing cells in {} regions at depth {}",
                report.failing_cells,
                report.witnesses.len(),
                report.depth_reached
            );
            emit(out, &report_json(&report))?;
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

fn falsify(system: &SystemArgs, observable: &ObservableArgs, period_max: usize, out: Option<&PathBuf>) -> Result<i32> {
    let sys = system.build()?;
    let phi = observable.build(&sys)?;
    match falsify_total_probability(&sys, &phi, period_max)? {
        Some(w) => {
            eprintln!("witness of period {} with average {}", w.period, w.average);
            emit(out, &witness_json(&sys, &phi.kind_name(), &w))?;
            Ok(EXIT_OK)
        }
        None => {
            eprintln!("no periodic orbit of period <= {period_max} has a nonnegative average");
            Ok(EXIT_NOT_FOUND)
        }
    }
}

fn verify(cert: &PathBuf, samples: usize, nmax: usize, seed: u64) -> Result<i32> {
    let text = std::fs::read_to_string(cert)?;
    let c = from_json(&text)?;
    let splitting = c.splitting.map(|r| r.splitting);
    let probe = match (c.observable.as_str(), splitting) {
        ("lambda", _) => Probe::AllDirections,
        ("cu", Some(s)) => Probe::Expanding { splitting: s, line: Line::Unstable },
        ("cs", Some(s)) => Probe::Contracting { splitting: s, line: Line::Stable },
        ("center-expanding", Some(s)) => Probe::Expanding { splitting: s, line: s.center_line() },
        ("center-contracting", Some(s)) => Probe::Contracting { splitting: s, line: s.center_line() },
        (o, _) => return Err(Error::Unsupported(format!("cannot verify observable `{o}`"))),
    };
    let report = verify_expansion(&c.system, &c.constants, probe, samples, nmax, seed)?;
    emit(None, &expansion_report_json(&report))?;
    eprintln!("min ratio {} at n={} ({})", report.min_ratio, report.argmin_n, report.argmin_point);
    Ok(if report.min_ratio >= 1.0 { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// CSV with header `n,average,exponent`.
pub fn lyapunov_csv(rows: &[crate::measure::LyapunovRow]) -> String {
    let mut s = String::from("n,average,exponent\n");
    for r in rows {
        writeln!(s, "{},{},{}", r.n, r.average, r.exponent).expect("write to string");
    }
    s
}

fn gallery() -> String {
    let mut s = String::new();
    for g in GALLERY {
        let params: Vec<String> = g
            .params
            .iter()
            .map(|p| format!("{}={} ({})", p.name, p.default, p.domain))
            .collect();
        let params = if params.is_empty() { "-".to_string() } else { params.join(", ") };
        writeln!(s, "{:<20} {:<9} {:<32} {}", g.id, format!("{:?}", g.space), params, g.summary)
            .expect("write to string");
    }
    s
}

fn dispatch(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Certify {
            system,
            observable,
            rate,
            nmax,
            depth,
            out,
        } => certify(system, observable, *rate, *nmax, *depth, out.as_ref()),
        Command::Falsify {
            system,
            observable,
            period_max,
            out,
        } => falsify(system, observable, *period_max, out.as_ref()),
        Command::Verify {
            cert,
            samples,
            nmax,
            seed,
        } => verify(cert, *samples, *nmax, *seed),
        Command::Lyapunov {
            system,
            orbits,
            length,
            samples,
            seed,
            csv,
        } => {
            let sys = system.build()?;
            let samples = samples.unwrap_or((*length).min(100));
            let rows = lyapunov_table(&sys, *orbits, *length, samples, *seed)?;
            emit(csv.as_ref(), &lyapunov_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Gallery => {
            emit(None, &gallery())?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["hypercert", "certify"]), EXIT_USAGE);
        assert_eq!(run(["hypercert", "bogus"]), EXIT_USAGE);
        assert_eq!(
            run(["hypercert", "falsify", "--system", "nope", "--period-max", "2"]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["hypercert", "falsify", "--system", "doubling", "--param", "a", "--period-max", "2"]),
            EXIT_USAGE
        );
    }

    #[test]
    fn csv_header() {
        let rows = [crate::measure::LyapunovRow { n: 1, average: -0.5, exponent: 0.5 }];
        assert_eq!(lyapunov_csv(&rows), "n,average,exponent\n1,-0.5,0.5\n");
    }

    #[test]
    fn gallery_lists_every_system() {
        let g = gallery();
        for e in GALLERY {
            assert!(g.contains(e.id));
        }
    }
}
