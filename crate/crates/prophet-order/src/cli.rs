//! Command-line front end over the library.
//!
//! One thin binary dispatches to the library modules: scheme construction
//! and adverseness checks, Monte Carlo dominance runs, closed-form
//! constants and certified bounds, the random-arrival hardness ratio, and
//! finite-support duality certification. Reports are JSON (CSV for curve
//! exports) and carry a schema version plus the full invocation, so every
//! number in an output file can be regenerated from the file alone.
//!
//! Exit codes: 0 on success, 1 when a computation or verification fails,
//! 2 on usage errors.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    certified_bounds, compute_pt_constants, iid_prophet_constant, wrapup_bound,
    CertifiedBounds, GammaConstants, PTConstants, WrapupBound, GAMMA_PRIME,
};
use crate::distributions::{Instance, TimeGrid};
use crate::lp_asd::{certify_instance, FiniteInstance, Setting};
use crate::scheme::{
    arrival_density_general, build_two_scheme, refined_schedule, weakly_adverse_check,
    BuiltScheme, SchemeId, SchemeParams, DEFAULT_C, DEFAULT_EPSILON, GAMMA_STAR,
};
use crate::secretary::{hardness_ratio, hardness_ratio_direct, HardnessInstance};
use crate::simulator::{estimate_asd, SimulationConfig, SimulationReport};
use crate::tolerances::{DEFAULT_GRID_RESOLUTION, WELL_DEFINED_SLACK};

/// Version tag carried by every emitted report.
pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable supplying the default worker count.
pub const WORKERS_ENV: &str = "PROPHET_ORDER_WORKERS";

#[derive(Parser)]
#[command(
    name = "prophet-order",
    version,
    about = "Order-selection stopping schemes, dominance checks, and duality tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build arrival-time schemes for a continuous instance.
    Scheme {
        #[command(subcommand)]
        command: SchemeCommand,
    },
    /// Run a seeded Monte Carlo dominance check of a built scheme.
    Simulate(SimulateArgs),
    /// Closed-form constants, certified bounds, and the wrap-up bound.
    Analysis {
        #[command(subcommand)]
        command: AnalysisCommand,
    },
    /// Optimal-stopping ratio of the random-arrival hard instance.
    SecretaryHardness(HardnessArgs),
    /// Certify a finite-support instance's dominance ratio by the dual
    /// program pair.
    LpAsd(LpArgs),
}

#[derive(Subcommand)]
enum SchemeCommand {
    /// Build the scheme and report per-item arrival-law diagnostics.
    Build(SchemeBuildArgs),
    /// Report each item's adverseness diagnostics without building.
    CheckAdverse(CheckAdverseArgs),
}

#[derive(Args)]
struct SchemeBuildArgs {
    /// Instance description (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Competitiveness target.
    #[arg(long, default_value_t = GAMMA_STAR)]
    gamma: f64,
    /// Base time-grid resolution.
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    resolution: usize,
    /// Head cutoff of the reshaping map.
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    /// Kink parameter of the reshaping map.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json for the summary report, csv for the tabulated curves.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct CheckAdverseArgs {
    /// Instance description (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Competitiveness target.
    #[arg(long, default_value_t = GAMMA_STAR)]
    gamma: f64,
    /// Base time-grid resolution.
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    resolution: usize,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance description (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Competitiveness target.
    #[arg(long, default_value_t = GAMMA_STAR)]
    gamma: f64,
    /// Base time-grid resolution.
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    resolution: usize,
    /// Trial count.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// Base RNG seed; trial chunks derive their streams from it.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of dominance probe points.
    #[arg(long, default_value_t = 20)]
    probes: usize,
    /// Worker threads; falls back to PROPHET_ORDER_WORKERS, then the
    /// global pool.
    #[arg(long)]
    workers: Option<usize>,
    /// Largest tolerated |discrepancy| / stderr before the run counts as
    /// a failure.
    #[arg(long, default_value_t = 4.0)]
    max_z: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalysisCommand {
    /// Critical constants of the single-threshold scheme and the crossing
    /// points at the pinned competitiveness levels.
    Constants(OutArgs),
    /// Evaluate every certified bracket, cap, and kernel integral.
    #[command(alias = "verify-lemma8")]
    VerifyBounds(OutArgs),
    /// Evaluate the wrap-up bound on the special item's arrival mass.
    Wrapup(WrapupArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WrapupArgs {
    /// Competitiveness target.
    #[arg(long, default_value_t = GAMMA_STAR)]
    gamma: f64,
    /// Head cutoff.
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HardnessArgs {
    /// Number of iid items; one deterministic item is added on top.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Finite tail probability; omitted means the vanishing-tail limit.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Run the quadratic per-position recursion instead of the orbit
    /// method (cross-check; identical output).
    #[arg(long)]
    direct: bool,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LpArgs {
    /// Finite-support instance (JSON).
    #[arg(long)]
    instance: PathBuf,
    /// Which arrival-order game to certify.
    #[arg(long, value_enum, default_value_t = SettingArg::OrderSelection)]
    setting: SettingArg,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    OrderSelection,
    ProphetSecretary,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Setting {
        match s {
            SettingArg::OrderSelection => Setting::OrderSelection,
            SettingArg::ProphetSecretary => Setting::OrderAwareSecretary,
        }
    }
}

/// Parse arguments and dispatch; the binary's whole main.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl Failure {
    fn usage(err: impl Display) -> Self {
        Failure::Usage(err.to_string())
    }

    fn run(err: impl Display) -> Self {
        Failure::Run(err.to_string())
    }
}

/// Everything a report file needs to be reproduced: schema version, tool
/// build, and the verbatim invocation.
#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: u32,
    tool: &'static str,
    build: &'static str,
    command: Vec<String>,
    payload: T,
}

fn envelope<T: Serialize>(payload: T) -> Envelope<T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        tool: concat!("prophet-order ", env!("CARGO_PKG_VERSION")),
        build: option_env!("PROPHET_ORDER_BUILD_ID").unwrap_or("dev"),
        command: std::env::args().collect(),
        payload,
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, payload: T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(&envelope(payload))
        .map_err(|e| Failure::run(format!("serializing report: {e}")))?;
    emit_text(out, &text)
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::run(format!("writing {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), Failure> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Failure::Usage(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    Ok(())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_json(&read_file(path)?).map_err(Failure::usage)
}

fn default_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Scheme { command: SchemeCommand::Build(args) } => scheme_build(args),
        Command::Scheme { command: SchemeCommand::CheckAdverse(args) } => check_adverse(args),
        Command::Simulate(args) => simulate(args),
        Command::Analysis { command: AnalysisCommand::Constants(args) } => constants(args),
        Command::Analysis { command: AnalysisCommand::VerifyBounds(args) } => verify_bounds(args),
        Command::Analysis { command: AnalysisCommand::Wrapup(args) } => wrapup(args),
        Command::SecretaryHardness(args) => secretary_hardness(args),
        Command::LpAsd(args) => lp_asd(args),
    }
}

// ---------------------------------------------------------------------------
// scheme
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SchemeItemReport {
    item: usize,
    slot: usize,
    /// Arrival-law mass before the atom at 1 takes the remainder.
    integral: f64,
    accept_prob: f64,
    atom_at_one: f64,
}

#[derive(Serialize)]
struct SchemeBuildReport {
    params: SchemeParams,
    scheme: SchemeId,
    grid_nodes: usize,
    adverse_item: Option<usize>,
    adverse_items: Vec<usize>,
    items: Vec<SchemeItemReport>,
    /// Sum of per-item acceptance probabilities; the overall stop rate.
    accept_total: f64,
}

fn scheme_params(gamma: f64, c: f64, epsilon: f64, resolution: usize) -> Result<SchemeParams, Failure> {
    check_gamma(gamma)?;
    if resolution < 3 {
        return Err(Failure::Usage(format!("resolution {resolution} is too small")));
    }
    Ok(SchemeParams { gamma, c, epsilon, grid: TimeGrid::refined(resolution) })
}

fn built_report(inst: &Instance, built: &BuiltScheme) -> SchemeBuildReport {
    let items: Vec<SchemeItemReport> = (0..inst.n())
        .map(|item| SchemeItemReport {
            item,
            slot: built.tables.slot_of(item),
            integral: built.integral(item),
            accept_prob: built.tables.accept_prob(item),
            atom_at_one: built.law(item).atom_at_one,
        })
        .collect();
    let accept_total = items.iter().map(|r| r.accept_prob).sum();
    SchemeBuildReport {
        params: built.params.clone(),
        scheme: built.scheme_id,
        grid_nodes: built.grid().len(),
        adverse_item: built.adverse_item,
        adverse_items: built.adverse_items.clone(),
        items,
        accept_total,
    }
}

fn scheme_build(args: SchemeBuildArgs) -> Result<(), Failure> {
    let params = scheme_params(args.gamma, args.c, args.epsilon, args.resolution)?;
    let inst = load_instance(&args.instance)?;
    let built = build_two_scheme(&inst, params).map_err(Failure::run)?;
    match args.format {
        Format::Json => emit_json(args.out.as_deref(), built_report(&inst, &built)),
        Format::Csv => emit_text(args.out.as_deref(), &curves_csv(&inst, &built)),
    }
}

/// Tabulated curves for plotting: thresholds, densities, and cumulative
/// arrival mass per item over the grid.
fn curves_csv(inst: &Instance, built: &BuiltScheme) -> String {
    let grid = built.grid();
    let mut header = String::from("t,gbar");
    for item in 0..inst.n() {
        header.push_str(&format!(",tau_{item},density_{item},cumulative_{item}"));
    }
    let mut lines = vec![header];
    for (idx, &t) in grid.nodes().iter().enumerate() {
        let mut line = format!("{t},{}", built.tables.gbar[idx]);
        for item in 0..inst.n() {
            let law = built.law(item);
            line.push_str(&format!(
                ",{},{},{}",
                built.schedule.tau(item)[idx],
                law.density[idx],
                law.cumulative[idx]
            ));
        }
        lines.push(line);
    }
    lines.join("\n")
}

#[derive(Serialize)]
struct ItemAdverseReport {
    item: usize,
    /// Surrogate lower-bound mass; above 1 flags weak adverseness.
    ghat: f64,
    weakly_adverse: bool,
    /// Exact common-schedule arrival mass.
    integral: f64,
    adverse: bool,
}

#[derive(Serialize)]
struct CheckAdverseReport {
    gamma: f64,
    grid_nodes: usize,
    items: Vec<ItemAdverseReport>,
    any_adverse: bool,
}

fn check_adverse(args: CheckAdverseArgs) -> Result<(), Failure> {
    let params = scheme_params(args.gamma, DEFAULT_C, DEFAULT_EPSILON, args.resolution)?;
    let inst = load_instance(&args.instance)?;
    let (_, schedule) = refined_schedule(&inst, &params, None).map_err(Failure::run)?;
    let tables = arrival_density_general(&schedule, params.gamma).map_err(Failure::run)?;
    let mut items = Vec::with_capacity(inst.n());
    for item in 0..inst.n() {
        let weak = weakly_adverse_check(&inst, item, args.gamma).map_err(Failure::run)?;
        let integral = tables.integral(item);
        items.push(ItemAdverseReport {
            item,
            ghat: weak.ghat,
            weakly_adverse: weak.weakly_adverse,
            integral,
            adverse: integral > 1.0 + WELL_DEFINED_SLACK,
        });
    }
    let any_adverse = items.iter().any(|r| r.adverse);
    let report = CheckAdverseReport {
        gamma: args.gamma,
        grid_nodes: schedule.grid().len(),
        items,
        any_adverse,
    };
    emit_json(args.out.as_deref(), report)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulatePayload {
    scheme: SchemeId,
    max_z: f64,
    within_noise: bool,
    report: SimulationReport,
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let params = scheme_params(args.gamma, DEFAULT_C, DEFAULT_EPSILON, args.resolution)?;
    let inst = load_instance(&args.instance)?;
    let built = build_two_scheme(&inst, params).map_err(Failure::run)?;
    let config = SimulationConfig {
        trials: args.trials,
        seed: args.seed,
        probes: args.probes,
        workers: args.workers.or_else(default_workers),
    };
    let report = estimate_asd(&inst, &built, &config).map_err(Failure::run)?;
    let payload = SimulatePayload {
        scheme: built.scheme_id,
        max_z: args.max_z,
        within_noise: report.worst_z <= args.max_z,
        report,
    };
    let ok = payload.within_noise;
    emit_json(args.out.as_deref(), payload)?;
    if !ok {
        return Err(Failure::Run(format!(
            "dominance discrepancy exceeded {} standard errors",
            args.max_z
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analysis
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ConstantsReport {
    single_threshold: PTConstants,
    primary: GammaConstants,
    secondary: GammaConstants,
    /// Critical constant of the iid version, for context.
    iid_constant: f64,
}

fn constants(args: OutArgs) -> Result<(), Failure> {
    let report = ConstantsReport {
        single_threshold: compute_pt_constants().map_err(Failure::run)?,
        primary: GammaConstants::compute(GAMMA_STAR).map_err(Failure::run)?,
        secondary: GammaConstants::compute(GAMMA_PRIME).map_err(Failure::run)?,
        iid_constant: iid_prophet_constant().map_err(Failure::run)?,
    };
    emit_json(args.out.as_deref(), report)
}

#[derive(Serialize)]
struct VerifyBoundsReport {
    pass: bool,
    bounds: CertifiedBounds,
}

fn verify_bounds(args: OutArgs) -> Result<(), Failure> {
    let bounds = certified_bounds().map_err(Failure::run)?;
    let pass = bounds.pass();
    emit_json(args.out.as_deref(), VerifyBoundsReport { pass, bounds })?;
    if !pass {
        return Err(Failure::Run("a certified bound failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct WrapupReport {
    pass: bool,
    bound: WrapupBound,
}

fn wrapup(args: WrapupArgs) -> Result<(), Failure> {
    check_gamma(args.gamma)?;
    let bound = wrapup_bound(args.gamma, args.c).map_err(Failure::run)?;
    let pass = bound.sub_probability;
    let value = bound.bound;
    emit_json(args.out.as_deref(), WrapupReport { pass, bound })?;
    if !pass {
        return Err(Failure::Run(format!("wrap-up bound {value} does not stay below 1")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// secretary-hardness
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct HardnessPayload {
    n: usize,
    epsilon: Option<f64>,
    method: &'static str,
    expected_max: f64,
    opt: f64,
    ratio: f64,
}

fn secretary_hardness(args: HardnessArgs) -> Result<(), Failure> {
    let inst = HardnessInstance { epsilon: args.epsilon, ..HardnessInstance::reference(args.n) };
    inst.validate().map_err(Failure::usage)?;
    let (method, report) = if args.direct {
        ("direct", hardness_ratio_direct(&inst).map_err(Failure::run)?)
    } else {
        ("orbit", hardness_ratio(&inst).map_err(Failure::run)?)
    };
    let payload = HardnessPayload {
        n: report.n,
        epsilon: report.epsilon,
        method,
        expected_max: report.expected_max,
        opt: report.opt,
        ratio: report.ratio,
    };
    emit_json(args.out.as_deref(), payload)
}

// ---------------------------------------------------------------------------
// lp-asd
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LpSupportEntry {
    order: Vec<usize>,
    /// Threshold values per position; null never accepts.
    thresholds: Vec<Option<f64>>,
    weight: f64,
}

#[derive(Serialize)]
struct LpReport {
    setting: Setting,
    alpha: f64,
    mu: f64,
    certificate: Vec<f64>,
    max_survival: Vec<f64>,
    mixture_exceedance: Vec<f64>,
    residuals: Vec<f64>,
    expected_value: f64,
    expected_max: f64,
    support: Vec<LpSupportEntry>,
}

fn lp_asd(args: LpArgs) -> Result<(), Failure> {
    let setting: Setting = args.setting.into();
    let inst = FiniteInstance::from_json(&read_file(&args.instance)?).map_err(Failure::usage)?;
    let (family, solution, mixture) = certify_instance(&inst, setting).map_err(|e| match e {
        e @ (crate::lp_asd::LpError::Invalid(_) | crate::lp_asd::LpError::CapExceeded { .. }) => {
            Failure::usage(e)
        }
        e => Failure::run(e),
    })?;
    let support = mixture
        .support
        .iter()
        .map(|&(col, weight)| {
            let alg = &family.algorithms[col];
            LpSupportEntry {
                order: alg.order.clone(),
                thresholds: alg
                    .thresholds
                    .iter()
                    .map(|th| th.map(|j| inst.values[j]))
                    .collect(),
                weight,
            }
        })
        .collect();
    let report = LpReport {
        setting,
        alpha: solution.alpha,
        mu: solution.mu,
        certificate: solution.certificate,
        max_survival: solution.max_survival,
        mixture_exceedance: mixture.exceedance,
        residuals: mixture.residuals,
        expected_value: mixture.expected_value,
        expected_max: mixture.expected_max,
        support,
    };
    emit_json(args.out.as_deref(), report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_shapes_parse() {
        Cli::try_parse_from(["prophet-order", "analysis", "constants"]).expect("parses");
        Cli::try_parse_from([
            "prophet-order",
            "scheme",
            "build",
            "--instance",
            "inst.json",
            "--gamma",
            "0.7258",
            "--format",
            "csv",
        ])
        .expect("parses");
        Cli::try_parse_from([
            "prophet-order",
            "simulate",
            "--instance",
            "inst.json",
            "--trials",
            "1000",
            "--seed",
            "3",
        ])
        .expect("parses");
        Cli::try_parse_from(["prophet-order", "secretary-hardness", "--n", "1000"])
            .expect("parses");
        Cli::try_parse_from([
            "prophet-order",
            "lp-asd",
            "--instance",
            "fi.json",
            "--setting",
            "prophet-secretary",
        ])
        .expect("parses");
    }

    #[test]
    fn bound_verification_answers_to_both_names() {
        Cli::try_parse_from(["prophet-order", "analysis", "verify-bounds"]).expect("parses");
        Cli::try_parse_from(["prophet-order", "analysis", "verify-lemma8"]).expect("parses");
    }

    #[test]
    fn out_of_range_gamma_is_a_usage_error() {
        let cli = Cli::try_parse_from([
            "prophet-order",
            "scheme",
            "build",
            "--instance",
            "/nonexistent.json",
            "--gamma",
            "1.5",
        ])
        .expect("parses");
        match dispatch(cli.command) {
            Err(Failure::Usage(_)) => {}
            other => panic!("expected a usage failure, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn missing_instance_path_is_a_usage_error() {
        let cli = Cli::try_parse_from([
            "prophet-order",
            "simulate",
            "--instance",
            "/definitely/not/here.json",
        ])
        .expect("parses");
        assert!(matches!(dispatch(cli.command), Err(Failure::Usage(_))));
    }
}
