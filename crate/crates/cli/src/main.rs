use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elfving_cli::commands::{self, GlmArgs, Globals, VerifyMethod};
use elfving_cli::problem::{read_problem_file, Target};
use elfving_cli::table::{cmd_table, KRange};
use elfving_cli::{CliError, Format, DEFAULT_PRECISION, EXIT_OK, EXIT_OPTIMIZATION, EXIT_PARSE};
use elfving_core::SolveSettings;

#[derive(Parser)]
#[command(name = "elfving", version, about = "c-optimal experimental designs from closed-form Elfving weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed of the multi-start search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of random starts.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Suppress progress and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem in a TOML or JSON problem file.
    Solve { problem: PathBuf },
    /// Optimal weights on the support listed in a problem file.
    Weights {
        support: PathBuf,
        /// Target vector `a,b,...` or `e<j>`; overrides the file's c.
        #[arg(long, value_parser = Target::parse_arg, allow_hyphen_values = true)]
        c: Option<Target>,
    },
    /// Certify a result document with an independent oracle.
    Verify {
        result: PathBuf,
        #[arg(long, value_enum, default_value = "lp")]
        method: VerifyMethod,
        /// Grid points on the domain (lp) or lattice resolution (grid).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Polynomial designs for every basis target over a range of k.
    Table {
        #[arg(long, default_value = "6..10")]
        k_range: KRange,
    },
    /// Locally optimal design for quadratic logistic regression.
    Glm {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "turning_point", conflicts_with = "turning_point")]
        c: Option<Vec<f64>>,
        /// Target the turning point of the fitted curve.
        #[arg(long)]
        turning_point: bool,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        domain: Option<Vec<f64>>,
        /// Write sampled curves x(u), g(u) and -g(u) as CSV.
        #[arg(long)]
        emit_curves: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let globals = Globals { seed: cli.seed, starts: cli.starts };
    let warn = |lines: &[String]| {
        if !cli.quiet {
            lines.iter().for_each(|w| eprintln!("warning: {w}"));
        }
    };
    match cli.command {
        Command::Solve { problem } => {
            let file = read_problem_file(&problem)?;
            let doc = commands::solve_file(&file, "solve", &globals)?;
            let format = cli.format.or(file.output.format).unwrap_or(Format::Json);
            emit(&cli.out, &doc.render(format, file.output.precision.unwrap_or(DEFAULT_PRECISION)))?;
        }
        Command::Weights { support, c } => {
            let doc = commands::cmd_weights(&support, c.as_ref())?;
            warn(&doc.warnings);
            let format = cli.format.or(doc.input.output.format).unwrap_or(Format::Json);
            emit(&cli.out, &doc.render(format, doc.input.output.precision.unwrap_or(DEFAULT_PRECISION)))?;
        }
        Command::Verify { result, method, grid } => {
            let report = commands::cmd_verify(&result, method, grid)?;
            emit(&cli.out, &report.render(cli.format.unwrap_or(Format::Json), DEFAULT_PRECISION))?;
            return Ok(if report.pass { EXIT_OK } else { EXIT_OPTIMIZATION });
        }
        Command::Table { k_range } => {
            let d = SolveSettings::default();
            let settings = SolveSettings {
                seed: cli.seed.unwrap_or(d.seed),
                starts: cli.starts.unwrap_or(d.starts),
                ..d
            };
            let table = cmd_table(k_range, &settings, |row| {
                if !cli.quiet {
                    let psi = row.psi.map_or("-".into(), |p| elfving_cli::fmt_sig(p, 6));
                    eprintln!("k={} j={} {} psi={psi} time={:.3}s", row.k, row.j, row.status, row.seconds);
                }
            })?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => table.to_csv(),
                Format::Json => table.to_json(),
                Format::Text => table.to_text(),
            };
            emit(&cli.out, &text)?;
            if table.failed() > 0 {
                return Err(CliError::new(EXIT_OPTIMIZATION, format!("{} table cell(s) failed", table.failed())));
            }
        }
        Command::Glm { theta, c, turning_point, domain, emit_curves } => {
            let domain = match domain.as_deref() {
                None => None,
                Some(&[lo, hi]) => Some([lo, hi]),
                Some(_) => return Err(CliError::input("--domain takes two numbers lo,hi")),
            };
            let args = GlmArgs { theta, c, turning_point, domain };
            let (doc, file) = commands::cmd_glm(&args, &globals)?;
            if let Some(path) = emit_curves {
                let csv = commands::curves_csv(&file)?;
                std::fs::write(&path, csv).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            }
            emit(&cli.out, &doc.render(cli.format.unwrap_or(Format::Json), DEFAULT_PRECISION))?;
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE as u8 } else { EXIT_OK as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
