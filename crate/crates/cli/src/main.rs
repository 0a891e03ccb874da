//! `atsp`: generate instances, solve them, export MIP models, drive an
//! external cut loop, benchmark, and draw.
//!
//! Exit codes: 0 ok, 2 usage, 3 non-optimal termination, skipped bench
//! cells or oracle disagreement, 4 I/O, 5 malformed input.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use atsp_core::bench::{self, SuiteSpec};
use atsp_core::exact::{solve_exact, solve_with_warm_start, SolveLimits, SolveReport};
use atsp_core::heuristic::{warm_start, TabuParams};
use atsp_core::instance::{self, generate, parse_any, write_tsplib};
use atsp_core::model_export::{
    count_model, cut_loop_step, emit_lp, parse_solution, CutLoopState, CutLoopStatus, Formulation,
};
use atsp_core::oracle::{brute_force, held_karp, BRUTE_FORCE_CAP, HELD_KARP_CAP};
use atsp_core::report::{circular_layout, render_route, render_scaling, Axes, RouteOptions};
use atsp_core::{CostMatrix, CostRange, Error, GenMode, GenSpec, NodeLayout, Tour};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

const EXIT_USAGE: u8 = 2;
const EXIT_NOT_OPTIMAL: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_FORMAT: u8 = 5;

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CliResult<T = ()> = Result<T, Failure>;

fn fail(code: u8, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::TooFewNodes(_)
        | Error::InvalidRange { .. }
        | Error::InvalidScale(_)
        | Error::SizeCap { .. }
        | Error::IndexOutOfRange { .. }
        | Error::InvalidMove(_)
        | Error::UndefinedGap(_)
        | Error::Fit(_)
        | Error::Render(_) => EXIT_USAGE,
        _ => EXIT_FORMAT,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fail(core_code(&e), e)
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_IO, anyhow!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| fail(EXIT_IO, anyhow!("{}: {e}", path.display())))
}

fn malformed(path: &Path, e: impl Display) -> Failure {
    fail(EXIT_FORMAT, anyhow!("{}: {e}", path.display()))
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn thousands(value: u64) -> String {
    let digits = value.to_string();
    let mut out = String::new();
    for (k, ch) in digits.chars().enumerate() {
        if k > 0 && (digits.len() - k).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

#[derive(Parser, Debug)]
#[command(name = "atsp", version, about = "Asymmetric TSP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Warm start plus exact branch-and-bound.
    Solve(SolveArgs),
    /// Nearest neighbor improved by tabu search.
    Warmstart(WarmstartArgs),
    /// Write a MIP model in LP format, or only count its size.
    ExportModel(ExportArgs),
    /// One round of the subtour cut loop with an external MIP solver.
    Cutloop(CutloopArgs),
    /// Run a benchmark suite and write CSV.
    Bench(BenchArgs),
    /// Render SVG figures.
    #[command(subcommand)]
    Plot(PlotCommand),
    /// Exhaustive reference solvers.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Uniform,
    Euclidean,
}

impl From<Mode> for GenMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Uniform => GenMode::UniformMatrix,
            Mode::Euclidean => GenMode::EuclideanAsymmetric,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct GenFlags {
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inclusive cost range as lo:hi.
    #[arg(long, default_value = "1:10", value_parser = parse_range)]
    range: CostRange,
    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    mode: Mode,
}

fn parse_range(s: &str) -> Result<CostRange, String> {
    s.parse()
        .map_err(|_| format!("expected lo:hi with 1 <= lo <= hi, got {s:?}"))
}

impl GenFlags {
    fn spec(&self) -> CliResult<GenSpec> {
        let n = self
            .n
            .ok_or_else(|| fail(EXIT_USAGE, anyhow!("--n is required")))?;
        let spec = GenSpec {
            n,
            seed: self.seed,
            cost_range: self.range,
            mode: self.mode.into(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// An instance read from a file or generated from flags.
#[derive(Args, Debug, Clone)]
struct Source {
    /// TSPLIB or CSV instance file.
    #[arg(long = "in", conflicts_with = "n")]
    input: Option<PathBuf>,
    #[command(flatten)]
    gen: GenFlags,
}

impl Source {
    fn load(&self) -> CliResult<(CostMatrix, Option<NodeLayout>)> {
        match &self.input {
            Some(path) => {
                let text = read(path)?;
                let m = parse_any(&text).map_err(|e| malformed(path, e))?;
                Ok((m, None))
            }
            None => {
                let inst = generate(&self.gen.spec()?)?;
                Ok((inst.matrix, inst.layout))
            }
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FileFormat {
    Tsplib,
    Csv,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    gen: GenFlags,
    #[arg(long, value_enum, default_value_t = FileFormat::Tsplib)]
    format: FileFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    warmstart: Switch,
    /// Wall-clock limit in milliseconds, 0 for none.
    #[arg(long, env = "ATSP_TIME_LIMIT_MS", default_value_t = 0)]
    time_limit: u64,
    /// Explored-node limit, 0 for none.
    #[arg(long, default_value_t = 0)]
    node_limit: u64,
    /// Where to write the SolveReport JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WarmstartArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    tenure: Option<usize>,
    #[arg(long)]
    max_stall: Option<usize>,
    /// Tabu wall-clock limit in milliseconds, 0 for none.
    #[arg(long, default_value_t = 0)]
    time_limit: u64,
    #[arg(long)]
    no_reversal: bool,
    /// Where to write the tour JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "dfj")]
    formulation: Formulation,
    /// Print variable and constraint counts without building the model.
    #[arg(long)]
    count_only: bool,
    #[arg(long, required_unless_present = "count_only")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CutloopArgs {
    #[command(flatten)]
    source: Source,
    /// Loop state JSON; created on the first round.
    #[arg(long)]
    state: PathBuf,
    /// Solution file from the external solver for the last written model.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Where to write the next LP model.
    #[arg(long)]
    lp_out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Suite JSON; every field is optional.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Run cells concurrently; records are flagged parallel-timed.
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand, Debug)]
enum PlotCommand {
    /// Draw a tour over the instance's layout, or a circle if it has none.
    Route(RouteArgs),
    /// Runtime against n from a bench CSV.
    Scaling(ScalingArgs),
}

#[derive(Args, Debug)]
struct RouteArgs {
    #[command(flatten)]
    source: Source,
    /// Tour JSON, SolveReport JSON, or a line of node ids.
    #[arg(long)]
    tour: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "loglog")]
    axes: Axes,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OracleMethod {
    Compare,
    BruteForce,
    HeldKarp,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    source: Source,
    #[arg(value_enum, default_value_t = OracleMethod::Compare)]
    method: OracleMethod,
}

fn cmd_generate(args: &GenerateArgs) -> CliResult {
    let inst = generate(&args.gen.spec()?)?;
    let text = match args.format {
        FileFormat::Tsplib => write_tsplib(&inst.matrix),
        FileFormat::Csv => instance::write_csv(&inst.matrix),
    };
    write(&args.out, &text)?;
    println!("{} sha256:{}", args.out.display(), digest(text.as_bytes()));
    Ok(())
}

fn print_report(report: &SolveReport) {
    println!(
        "cost {} gap {:.4}% nodes {} status {} wall {} ms",
        report.optimal_cost,
        report.gap_percent,
        report.bnb_nodes_explored,
        serde_json::to_value(report.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        report.wall_time_ms
    );
}

fn cmd_solve(args: &SolveArgs) -> CliResult {
    let (m, _) = args.source.load()?;
    let limits = SolveLimits {
        time_limit_ms: args.time_limit,
        node_limit: args.node_limit,
    };
    let report = match args.warmstart {
        Switch::On => {
            let params = TabuParams {
                time_limit_ms: args.time_limit,
                ..TabuParams::for_size(m.n())
            };
            solve_with_warm_start(&m, &params, limits)?
        }
        Switch::Off => solve_exact(&m, None, limits)?,
    };
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write(path, &(json + "\n"))?;
    }
    print_report(&report);
    if !report.optimal {
        return Err(fail(
            EXIT_NOT_OPTIMAL,
            anyhow!("stopped by limit with gap {:.4}%", report.gap_percent),
        ));
    }
    Ok(())
}

fn cmd_warmstart(args: &WarmstartArgs) -> CliResult {
    let (m, _) = args.source.load()?;
    let defaults = TabuParams::for_size(m.n());
    let params = TabuParams {
        tenure: args.tenure.unwrap_or(defaults.tenure).max(1),
        max_stall: args.max_stall.unwrap_or(defaults.max_stall).max(1),
        time_limit_ms: args.time_limit,
        enable_reversal: !args.no_reversal,
        ..defaults
    };
    let out = warm_start(&m, &params)?;
    if let Some(path) = &args.out {
        let json = serde_json::to_string(&out.tour).expect("tour serializes");
        write(path, &(json + "\n"))?;
    }
    println!(
        "cost {} iterations {}{}",
        out.tour.cost,
        out.iterations,
        if out.timed_out { " (time limit)" } else { "" }
    );
    println!("{}", out.tour.to_line());
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> CliResult {
    if args.count_only {
        let n = match (&args.source.input, args.source.gen.n) {
            (None, Some(n)) if n >= 2 => n,
            (None, _) => return Err(fail(EXIT_USAGE, anyhow!("--count-only needs --n >= 2"))),
            (Some(_), _) => args.source.load()?.0.n(),
        };
        let counts = count_model(n, args.formulation);
        println!(
            "{} binaries, {} continuous, {} constraints",
            thousands(counts.binaries as u64),
            thousands(counts.continuous as u64),
            thousands(counts.constraints as u64)
        );
        return Ok(());
    }
    let (m, _) = args.source.load()?;
    let lp = emit_lp(&m, args.formulation, &[]);
    let out = args.out.as_ref().expect("clap requires --out");
    write(out, &lp)?;
    println!("{} sha256:{}", out.display(), digest(lp.as_bytes()));
    Ok(())
}

fn cmd_cutloop(args: &CutloopArgs) -> CliResult {
    let (m, _) = args.source.load()?;
    let n = m.n();
    let state = if args.state.exists() {
        let text = read(&args.state)?;
        serde_json::from_str(&text).map_err(|e| malformed(&args.state, e))?
    } else {
        CutLoopState::default()
    };
    let state = match &args.solution {
        Some(path) => {
            let arcs = parse_solution(&read(path)?, n).map_err(|e| malformed(path, e))?;
            cut_loop_step(&state, n, &arcs)?
        }
        None => state,
    };
    let json = serde_json::to_string_pretty(&state).expect("state serializes");
    write(&args.state, &(json + "\n"))?;

    if state.status == CutLoopStatus::TourFound {
        let tour = state.tour(&m).ok_or_else(|| {
            fail(
                EXIT_FORMAT,
                anyhow!("solution is not a tour of the instance"),
            )
        })?;
        println!("done round {} cost {}", state.round, tour.cost);
        println!("{}", tour.to_line());
        return Ok(());
    }
    let lp = emit_lp(&m, Formulation::Dfj, &state.cuts);
    write(&args.lp_out, &lp)?;
    println!(
        "solve {} round {} cuts {}",
        args.lp_out.display(),
        state.round,
        state.cuts.len()
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CliResult {
    let mut spec: SuiteSpec = match &args.suite {
        Some(path) => serde_json::from_str(&read(path)?).map_err(|e| malformed(path, e))?,
        None => SuiteSpec::default(),
    };
    spec.parallel |= args.parallel;
    let outcome = bench::run_suite(&spec)?;
    write(&args.out, &bench::write_csv(&outcome.records)?)?;
    println!(
        "{} records -> {}",
        outcome.records.len(),
        args.out.display()
    );
    for algorithm in &spec.algorithms {
        let rows: Vec<_> = outcome
            .records
            .iter()
            .filter(|r| r.algorithm == *algorithm)
            .cloned()
            .collect();
        if let Ok(fit) = bench::fit_exponent(&rows) {
            println!(
                "{algorithm}: runtime ~ n^{:.3} (r^2 {:.3})",
                fit.exponent, fit.r_squared
            );
        }
    }
    for cell in &outcome.skipped {
        println!(
            "skipped {} n {} seed {} range {}: {}",
            cell.algorithm, cell.n, cell.seed, cell.range, cell.reason
        );
    }
    if !outcome.skipped.is_empty() {
        return Err(fail(
            EXIT_NOT_OPTIMAL,
            anyhow!("{} cells skipped", outcome.skipped.len()),
        ));
    }
    Ok(())
}

fn load_tour(m: &CostMatrix, path: &Path) -> CliResult<Tour> {
    let text = read(path)?;
    let tour = match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(mut value) => {
            if let Some(inner) = value.get_mut("tour") {
                value = inner.take();
            }
            let tour: Tour = serde_json::from_value(value).map_err(|e| malformed(path, e))?;
            Tour::new(m, tour.order)
        }
        Err(_) => Tour::from_line(m, text.trim()),
    };
    tour.map_err(|e| malformed(path, e))
}

fn cmd_plot(command: &PlotCommand) -> CliResult {
    let (svg, out) = match command {
        PlotCommand::Route(args) => {
            let (m, layout) = args.source.load()?;
            let tour = load_tour(&m, &args.tour)?;
            let layout = layout.unwrap_or_else(|| circular_layout(m.n()));
            let options = RouteOptions {
                title: args.title.clone(),
                ..RouteOptions::default()
            };
            (render_route(&layout, &tour, &options)?, &args.out)
        }
        PlotCommand::Scaling(args) => {
            let records =
                bench::read_csv(&read(&args.csv)?).map_err(|e| malformed(&args.csv, e))?;
            (render_scaling(&records, args.axes)?, &args.out)
        }
    };
    write(out, &svg)?;
    println!("{} sha256:{}", out.display(), digest(svg.as_bytes()));
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> CliResult {
    let (m, _) = args.source.load()?;
    let n = m.n();
    let mut results = Vec::new();
    let want_bf = args.method != OracleMethod::HeldKarp;
    let want_hk = args.method != OracleMethod::BruteForce;
    if want_bf && (n <= BRUTE_FORCE_CAP || args.method == OracleMethod::BruteForce) {
        results.push(("brute_force", brute_force(&m)?));
    }
    if want_hk && (n <= HELD_KARP_CAP || args.method == OracleMethod::HeldKarp) {
        results.push(("held_karp", held_karp(&m)?));
    }
    if results.is_empty() {
        return Err(fail(
            EXIT_USAGE,
            anyhow!("n = {n} exceeds every oracle cap"),
        ));
    }
    for (name, tour) in &results {
        println!("{name} cost {} tour {}", tour.cost, tour.to_line());
    }
    let costs: Vec<i64> = results.iter().map(|(_, t)| t.cost).collect();
    if costs.windows(2).any(|w| w[0] != w[1]) {
        return Err(fail(
            EXIT_NOT_OPTIMAL,
            anyhow!("oracles disagree: {costs:?}"),
        ));
    }
    if results.len() > 1 {
        println!("agree");
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Warmstart(a) => cmd_warmstart(a),
        Command::ExportModel(a) => cmd_export(a),
        Command::Cutloop(a) => cmd_cutloop(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Plot(c) => cmd_plot(c),
        Command::Oracle(a) => cmd_oracle(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_millis()
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
