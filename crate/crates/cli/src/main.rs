//! `hesscraft` command-line driver.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hesscraft::bench::{run_bench, seeded_point, write_csv, Family, Phase, DEFAULT_REPEATS};
use hesscraft::check::{cross_validate, CheckConfig};
use hesscraft::graph::{
    build_folded_graph, folded_to_dot, snapshots_to_dot, tape_to_dot, DotOptions,
};
use hesscraft::oracles::DEFAULT_DENSE_CAP;
use hesscraft::{edge_pushing_hessian, reverse_gradient, EdgePushingOptions, HessError, Tape};

const DENSE_CAP_VAR: &str = "HESSCRAFT_DENSE_CAP";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] HessError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("oracle cross-validation found a mismatch")]
    Mismatch,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine(
                HessError::UnknownFamily(_)
                | HessError::DimensionTooSmall { .. }
                | HessError::DimensionMismatch { .. }
                | HessError::Parse { .. },
            ) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "hesscraft",
    version,
    about = "Values, gradients and sparse Hessians of taped functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print f(x).
    Eval(PointArgs),
    /// Print the gradient.
    Grad {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = Format::Plain)]
        format: Format,
    },
    /// Write the lower triangle of the Hessian.
    Hess {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = Format::Mm)]
        format: Format,
        /// Drop entries with magnitude below this value.
        #[arg(long, default_value_t = 0.0, value_parser = non_negative, allow_negative_numbers = true)]
        drop_tol: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Time the Hessian sweep on test families and write CSV rows.
    Bench {
        /// Family names, comma separated, or `all`.
        #[arg(long, value_delimiter = ',', required = true)]
        function: Vec<String>,
        /// Dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_REPEATS, value_parser = positive)]
        repeats: usize,
        #[arg(long, default_value = "hessian-only", value_parser = parse_phase)]
        phase: Phase,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a graph as DOT.
    ExportGraph {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = View::Computational)]
        view: View,
        /// Label arcs with their weights.
        #[arg(long)]
        weights: bool,
        /// In the sweep view, keep arcs already pushed (drawn dotted).
        #[arg(long)]
        keep_pushed: bool,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Cross-validate the Hessian against independent oracles on random tapes.
    Check {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 8, value_parser = positive)]
        max_n: usize,
        #[arg(long, default_value_t = 40, value_parser = positive)]
        max_ell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct PointArgs {
    /// Family name or path to a tape file.
    #[arg(long)]
    function: String,
    /// Dimension; required for families.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    x: PointSource,
}

#[derive(Args)]
#[group(multiple = false)]
struct PointSource {
    /// File of whitespace-separated reals.
    #[arg(long)]
    x_file: Option<PathBuf>,
    /// Every coordinate set to this value.
    #[arg(long, allow_hyphen_values = true)]
    x_const: Option<f64>,
    /// Coordinates uniform in [0.5, 1.5] from this seed (default 0).
    #[arg(long)]
    x_seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Mm,
    Csv,
    Dot,
    Plain,
}

#[derive(Clone, Copy, ValueEnum)]
enum View {
    Computational,
    Folded,
    Sweep,
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err("must be a non-negative number".into())
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_phase(s: &str) -> Result<Phase, String> {
    s.parse()
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Mm => "mm",
        Format::Csv => "csv",
        Format::Dot => "dot",
        Format::Plain => "plain",
    }
}

fn require_format(command: &str, format: Format, allowed: &[Format]) -> CliResult<()> {
    if allowed.contains(&format) {
        return Ok(());
    }
    let names: Vec<_> = allowed.iter().map(|&f| format_name(f)).collect();
    Err(CliError::Usage(format!(
        "`{command}` does not support format `{}` (expected {})",
        format_name(format),
        names.join(" or ")
    )))
}

fn load_tape(function: &str, n: Option<usize>) -> CliResult<Tape> {
    if let Ok(family) = function.parse::<Family>() {
        let n =
            n.ok_or_else(|| CliError::Usage(format!("`--n` is required for family `{family}`")))?;
        return Ok(family.build(n)?);
    }
    let path = Path::new(function);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "`{function}` is neither a known family nor a tape file"
        )));
    }
    let tape: Tape = fs::read_to_string(path)?.parse()?;
    if let Some(n) = n {
        if n != tape.n() {
            return Err(CliError::Usage(format!(
                "`--n {n}` does not match the tape's {} inputs",
                tape.n()
            )));
        }
    }
    Ok(tape)
}

fn load_point(source: &PointSource, n: usize) -> CliResult<Vec<f64>> {
    let x = match (&source.x_file, source.x_const, source.x_seed) {
        (Some(path), _, _) => fs::read_to_string(path)?
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!("`{t}` in {} is not a number", path.display()))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?,
        (None, Some(c), _) => vec![c; n],
        (None, None, seed) => seeded_point(n, seed.unwrap_or(0)),
    };
    if x.len() != n {
        return Err(CliError::Usage(format!(
            "point has {} coordinates, expected {n}",
            x.len()
        )));
    }
    Ok(x)
}

fn swept(point: &PointArgs) -> CliResult<Tape> {
    let mut tape = load_tape(&point.function, point.n)?;
    let x = load_point(&point.x, tape.n())?;
    tape.forward_sweep(&x)?;
    Ok(tape)
}

fn join(values: &[f64], sep: &str) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dense_cap() -> CliResult<usize> {
    match std::env::var(DENSE_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{DENSE_CAP_VAR}=`{v}` is not a node count"))),
        Err(_) => Ok(DEFAULT_DENSE_CAP),
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Eval(point) => {
            let tape = swept(&point)?;
            println!("{}", tape.value()?);
        }
        Command::Grad { point, format } => {
            require_format("grad", format, &[Format::Plain, Format::Csv])?;
            let g = reverse_gradient(&swept(&point)?)?.gradient;
            match format {
                Format::Csv => {
                    let mut out = String::from("index,value\n");
                    for (k, v) in g.iter().enumerate() {
                        out.push_str(&format!("{},{v}\n", k + 1));
                    }
                    emit(None, &out)?;
                }
                _ => println!("{}", join(&g, " ")),
            }
        }
        Command::Hess {
            point,
            format,
            drop_tol,
            output,
        } => {
            require_format("hess", format, &[Format::Mm, Format::Csv, Format::Plain])?;
            let tape = swept(&point)?;
            let opts = EdgePushingOptions {
                drop_tol,
                ..Default::default()
            };
            let h = edge_pushing_hessian(&tape, &opts)?.hessian;
            let text = match format {
                Format::Mm => h.to_matrix_market(),
                Format::Csv => {
                    let mut out = String::from("row,col,value\n");
                    for &(r, c, v) in h.entries() {
                        out.push_str(&format!("{},{},{v}\n", r + 1, c + 1));
                    }
                    out
                }
                _ => h
                    .to_dense()
                    .chunks(h.n().max(1))
                    .map(|row| join(row, " ") + "\n")
                    .collect(),
            };
            emit(output.as_deref(), &text)?;
        }
        Command::Bench {
            function,
            n,
            repeats,
            phase,
            format,
            output,
        } => {
            require_format("bench", format, &[Format::Csv])?;
            let families: Vec<Family> = if function.iter().any(|f| f == "all") {
                Family::ALL.to_vec()
            } else {
                function
                    .iter()
                    .map(|f| f.parse())
                    .collect::<Result<_, _>>()?
            };
            let mut records = Vec::new();
            for &family in &families {
                for &dim in &n {
                    records.push(run_bench(family, dim, repeats, phase)?);
                }
            }
            let mut buf = Vec::new();
            write_csv(&mut buf, &records).map_err(io::Error::other)?;
            emit(output.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
        Command::ExportGraph {
            point,
            view,
            weights,
            keep_pushed,
            format,
            output,
        } => {
            require_format("export-graph", format, &[Format::Dot])?;
            let tape = swept(&point)?;
            let opts = DotOptions {
                weights,
                keep_pushed,
            };
            let dot = match view {
                View::Computational => tape_to_dot(&tape, &opts),
                View::Folded => {
                    let adjoints = reverse_gradient(&tape)?.adjoints;
                    folded_to_dot(&tape, &build_folded_graph(&tape, &adjoints)?, &opts)
                }
                View::Sweep => {
                    let out = edge_pushing_hessian(
                        &tape,
                        &EdgePushingOptions {
                            record_snapshots: true,
                            ..Default::default()
                        },
                    )?;
                    snapshots_to_dot(&tape, &out.snapshots, &opts)
                }
            };
            emit(output.as_deref(), &dot)?;
        }
        Command::Check {
            trials,
            max_n,
            max_ell,
            seed,
        } => {
            let config = CheckConfig {
                trials,
                max_n,
                max_ell,
                seed,
                dense_cap: dense_cap()?,
            };
            let r = cross_validate(&config)?;
            let verdict = if r.passed() { "ok" } else { "MISMATCH" };
            println!(
                "check {verdict}: {} tapes, max oracle discrepancy {:e} (dense {:e}, paths {:e} on {} tapes, hvp {:e}), fd {:e}, symmetry violations {}, block-support violations {}",
                r.trials,
                r.max_exact_diff(),
                r.max_dense_diff,
                r.max_path_diff,
                r.path_trials,
                r.max_hvp_diff,
                r.max_fd_diff,
                r.accumulator_symmetry_violations,
                r.accumulator_block_violations + r.dense_block_violations,
            );
            if !r.passed() {
                return Err(CliError::Mismatch);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("hesscraft: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
