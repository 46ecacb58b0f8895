//! `muscle` — batch front end for the pouch-muscle statics model.
//!
//! Subcommands load actuator descriptions and operating conditions from JSON
//! files, run the solvers and design tools, and emit CSV/JSON/SVG results.
//! Every command is a pure function of its inputs: output bodies carry no
//! timestamps, so repeated runs are byte-identical.
//!
//! Conventions:
//! * flags and files at the boundary use kPa, mm and N; internals are SI;
//! * result content goes to stdout, progress notes and errors to stderr;
//! * exit code 0 = success, 1 = solver failure, 2 = input/schema error;
//! * every subcommand accepts `--config <json>` whose keys mirror the long
//!   flag names (dashes as underscores); explicit flags win over the file.

use std::fmt;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use muscle_core::metrics::{compute_metrics, MeasurementContext, MetricsReport};
use muscle_core::modes::{enumerate_modes, ModeClass, OperationMode};
use muscle_core::multilayer::{contraction_limit_row, contraction_table, percent_one_decimal};
use muscle_core::types::{kpa_to_pa, pa_to_kpa};
use muscle_core::{
    blocked_point, fit_kr, io, plot, trace_curve, Curve, PressureCondition, ResistanceModel,
    SolverSettings, DEFAULT_LINEAR_THRESHOLD, STANDARD_GRAVITY,
};

// ============================================================================
// Top-level command grammar
// ============================================================================

#[derive(Parser)]
#[command(
    name = "muscle",
    version,
    about = "Forward model and design tools for hybrid positive/negative-pressure pouch muscles",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace one force–contraction curve and plot it
    Curve(CurveArgs),
    /// Output force at zero contraction for one pressure pair
    Blocked(BlockedArgs),
    /// Trace curves over a pressure grid and collect the blocked-force matrix
    Sweep(SweepArgs),
    /// Design-bound contraction table over layer/column ranges
    Table(TableArgs),
    /// Performance metrics from a recorded time series
    Metrics(MetricsArgs),
    /// Calibrate the fold-resistance coefficient from pull-test records
    #[command(name = "fit-kr")]
    FitKr(FitKrArgs),
    /// Enumerate, filter and explain the two-chamber operation modes
    Modes(ModesArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(a) => cmd_curve(a),
        Command::Blocked(a) => cmd_blocked(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Table(a) => cmd_table(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::FitKr(a) => cmd_fit_kr(a),
        Command::Modes(a) => cmd_modes(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

// ============================================================================
// Exit-code contract
// ============================================================================

/// A numerical failure of the engine (exit code 1), as opposed to an
/// input/schema problem (exit code 2).
#[derive(Debug)]
struct SolverFailure(String);

impl fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SolverFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use muscle_core::Error as E;
    if err.downcast_ref::<SolverFailure>().is_some() {
        return 1;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::NoConvergence { .. }
            | E::NoBlockedState(_)
            | E::InvalidVariant { .. }
            | E::VolumeCollapse { .. },
        ) => 1,
        _ => 2,
    }
}

// ============================================================================
// Shared plumbing
// ============================================================================

/// Fill unset options from a JSON config file; flags given on the command
/// line keep their values.
macro_rules! merge_from_config {
    ($self:ident, $cfg:ident; opts: [$($o:ident),* $(,)?]; bools: [$($b:ident),* $(,)?]) => {
        $( if $self.$o.is_none() { $self.$o = $cfg.$o; } )*
        $( $self.$b = $self.$b || $cfg.$b; )*
    };
}

fn read_config<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

fn require<T>(value: Option<T>, what: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| anyhow!("missing {what}: give it as a flag or as a --config key"))
}

fn load_spec(path: &Path) -> anyhow::Result<muscle_core::ActuatorSpec> {
    io::read_spec_json(path)
        .with_context(|| format!("loading actuator description {}", path.display()))
}

fn load_resistance(path: Option<&Path>) -> anyhow::Result<ResistanceModel> {
    match path {
        Some(p) => io::read_model_json(p)
            .with_context(|| format!("loading resistance model {}", p.display())),
        None => Ok(ResistanceModel::zero()),
    }
}

/// Build the operating condition from boundary-unit (kPa) flags.
fn build_condition(
    dp1_kpa: Option<f64>,
    dp2_kpa: f64,
    closed: bool,
    initial_dp1_kpa: Option<f64>,
) -> anyhow::Result<PressureCondition> {
    let dp2 = kpa_to_pa(dp2_kpa);
    if closed {
        let charge_kpa = initial_dp1_kpa
            .or(dp1_kpa)
            .ok_or_else(|| anyhow!("sealed runs need --initial-dp1 (or --dp1) for the charge"))?;
        Ok(PressureCondition::closed(kpa_to_pa(charge_kpa), dp2))
    } else {
        if initial_dp1_kpa.is_some() {
            bail!("--initial-dp1 only applies together with --closed");
        }
        let dp1 = require(dp1_kpa, "the pouch gauge pressure --dp1")?;
        Ok(PressureCondition::constant(kpa_to_pa(dp1), dp2))
    }
}

/// Shortest decimal rendering of a boundary-unit number (30.0 → "30").
fn fmt_kpa(x: f64) -> String {
    format!("{x}")
}

fn condition_label(closed: bool, dp1_kpa: f64, dp2_kpa: f64) -> String {
    if closed {
        format!("sealed charge {} kPa, skin {} kPa", fmt_kpa(dp1_kpa), fmt_kpa(dp2_kpa))
    } else {
        format!("pouch {} kPa, skin {} kPa", fmt_kpa(dp1_kpa), fmt_kpa(dp2_kpa))
    }
}

fn ensure_parent_dir(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    Ok(())
}

/// Write `<prefix>.csv` and `<prefix>.svg` for a traced curve and return the
/// two paths.
fn write_curve_outputs(
    curve: &Curve,
    prefix: &Path,
    label: &str,
) -> anyhow::Result<(PathBuf, PathBuf)> {
    let csv_path = prefix.with_extension("csv");
    let svg_path = prefix.with_extension("svg");
    ensure_parent_dir(&csv_path)?;
    io::write_curve_csv(&csv_path, curve)
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let mut figure = plot::Plot::force_curve(label);
    figure.add_curve(label, curve);
    figure
        .write_svg(&svg_path)
        .with_context(|| format!("writing {}", svg_path.display()))?;
    Ok((csv_path, svg_path))
}

// ============================================================================
// curve
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CurveArgs {
    /// Actuator description (JSON)
    #[arg(value_name = "SPEC_JSON")]
    spec: Option<PathBuf>,
    /// Pouch (skeleton) gauge pressure [kPa]
    #[arg(long, allow_negative_numbers = true)]
    dp1: Option<f64>,
    /// Skin (envelope) gauge pressure [kPa], zero or negative
    #[arg(long, allow_negative_numbers = true)]
    dp2: Option<f64>,
    /// Seal the skeleton after charging instead of holding its pressure
    #[arg(long)]
    closed: bool,
    /// Charge gauge at sealing [kPa]; defaults to --dp1 (needs --closed)
    #[arg(long)]
    initial_dp1: Option<f64>,
    /// Fold-resistance model (JSON); omitted = frictionless
    #[arg(long, value_name = "MODEL_JSON")]
    kr_file: Option<PathBuf>,
    /// Output path prefix: writes <prefix>.csv and <prefix>.svg
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl CurveArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: CurveArgs = read_config(&path)?;
            merge_from_config!(self, cfg;
                opts: [spec, dp1, dp2, initial_dp1, kr_file, out];
                bools: [closed]);
        }
        Ok(self)
    }
}

fn cmd_curve(args: CurveArgs) -> anyhow::Result<()> {
    let a = args.merged()?;
    let spec_path = require(a.spec, "the actuator description file")?;
    let dp2_kpa = require(a.dp2, "the skin gauge pressure --dp2")?;
    let out = require(a.out, "the output prefix --out")?;

    let spec = load_spec(&spec_path)?;
    let resistance = load_resistance(a.kr_file.as_deref())?;
    let cond = build_condition(a.dp1, dp2_kpa, a.closed, a.initial_dp1)?;
    let label_dp1 = a.initial_dp1.or(a.dp1).unwrap_or(0.0);
    let label = condition_label(a.closed, label_dp1, dp2_kpa);

    let curve = trace_curve(&spec, &cond, &resistance, &SolverSettings::default())?;
    let (csv_path, svg_path) = write_curve_outputs(&curve, &out, &label)?;
    eprintln!("wrote: {}", csv_path.display());
    eprintln!("wrote: {}", svg_path.display());

    let first = curve.points.first().expect("a traced curve has at least the blocked point");
    let last = curve.points.last().expect("non-empty curve");
    println!("condition: {label}");
    println!("points: {}", curve.points.len());
    println!("blocked_force_f0_n: {:.6}", first.output_force_f);
    println!("terminal_contraction_pct: {:.4}", curve.terminal_cr_max * 100.0);
    println!("final_skeleton_gauge_dp1_kpa: {:.4}", pa_to_kpa(last.skeleton_gauge_dp1));
    println!("truncated: {}", curve.truncated);

    if curve.truncated {
        let reason = curve.truncation_reason.as_deref().unwrap_or("unknown");
        return Err(anyhow::Error::new(SolverFailure(format!(
            "curve truncated at contraction {:.2} % ({reason}); partial results kept in {} and {}",
            curve.terminal_cr_max * 100.0,
            csv_path.display(),
            svg_path.display(),
        ))));
    }
    Ok(())
}

// ============================================================================
// blocked
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BlockedArgs {
    /// Actuator description (JSON)
    #[arg(value_name = "SPEC_JSON")]
    spec: Option<PathBuf>,
    /// Pouch (skeleton) gauge pressure [kPa]
    #[arg(long, allow_negative_numbers = true)]
    dp1: Option<f64>,
    /// Skin (envelope) gauge pressure [kPa], zero or negative
    #[arg(long, allow_negative_numbers = true)]
    dp2: Option<f64>,
    /// Seal the skeleton after charging instead of holding its pressure
    #[arg(long)]
    closed: bool,
    /// Charge gauge at sealing [kPa]; defaults to --dp1 (needs --closed)
    #[arg(long)]
    initial_dp1: Option<f64>,
    /// Emit the result as JSON instead of aligned text
    #[arg(long)]
    json: bool,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl BlockedArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: BlockedArgs = read_config(&path)?;
            merge_from_config!(self, cfg;
                opts: [spec, dp1, dp2, initial_dp1];
                bools: [closed, json]);
        }
        Ok(self)
    }
}

fn cmd_blocked(args: BlockedArgs) -> anyhow::Result<()> {
    let a = args.merged()?;
    let spec_path = require(a.spec, "the actuator description file")?;
    let dp2_kpa = require(a.dp2, "the skin gauge pressure --dp2")?;

    let spec = load_spec(&spec_path)?;
    let cond = build_condition(a.dp1, dp2_kpa, a.closed, a.initial_dp1)?;
    // Fold resistance vanishes at zero contraction, so no model is needed.
    let point = blocked_point(&spec, &cond, &ResistanceModel::zero(), &SolverSettings::default())?;

    if a.json {
        let value = serde_json::json!({
            "blocked_force_f0_n": point.output_force_f,
            "skeleton_gauge_dp1_kpa": pa_to_kpa(point.skeleton_gauge_dp1),
            "dp2_kpa": dp2_kpa,
            "variant": point.state.model_variant.letter(),
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        println!("blocked_force_f0_n: {:.6}", point.output_force_f);
        println!("skeleton_gauge_dp1_kpa: {:.4}", pa_to_kpa(point.skeleton_gauge_dp1));
        println!("variant: {}", point.state.model_variant.letter());
    }
    Ok(())
}

// ============================================================================
// sweep
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepArgs {
    /// Actuator description (JSON)
    #[arg(value_name = "SPEC_JSON")]
    spec: Option<PathBuf>,
    /// Pouch gauge pressures [kPa], comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dp1_list: Option<Vec<f64>>,
    /// Skin gauge pressures [kPa], comma separated, zero or negative
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dp2_list: Option<Vec<f64>>,
    /// Seal the skeleton at each cell's dp1 instead of holding it constant
    #[arg(long)]
    closed: bool,
    /// Fold-resistance model (JSON); omitted = frictionless
    #[arg(long, value_name = "MODEL_JSON")]
    kr_file: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run the cells one by one instead of in parallel
    #[arg(long)]
    serial: bool,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl SweepArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: SweepArgs = read_config(&path)?;
            merge_from_config!(self, cfg;
                opts: [spec, dp1_list, dp2_list, kr_file, out];
                bools: [closed, serial]);
        }
        Ok(self)
    }
}

/// Everything one grid cell produces; the reducer assembles the matrices.
struct CellOutcome {
    row: usize,
    col: usize,
    dp1_kpa: f64,
    dp2_kpa: f64,
    blocked_f: Option<f64>,
    truncated: bool,
    error: Option<String>,
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let a = args.merged()?;
    let spec_path = require(a.spec, "the actuator description file")?;
    let dp1_list = require(a.dp1_list, "the pouch pressure list --dp1-list")?;
    let dp2_list = require(a.dp2_list, "the skin pressure list --dp2-list")?;
    let dir = require(a.out, "the output directory --out")?;
    if dp1_list.is_empty() || dp2_list.is_empty() {
        bail!("pressure lists must be nonempty");
    }

    let spec = load_spec(&spec_path)?;
    let resistance = load_resistance(a.kr_file.as_deref())?;
    fs::create_dir_all(&dir).with_context(|| format!("creating directory {}", dir.display()))?;

    let cells: Vec<(usize, usize, f64, f64)> = dp1_list
        .iter()
        .enumerate()
        .flat_map(|(i, &p1)| dp2_list.iter().enumerate().map(move |(j, &p2)| (i, j, p1, p2)))
        .collect();

    // Each cell owns its curve files; only the reducer below touches the
    // shared matrices, so parallel and serial runs emit identical bytes.
    let run_cell = |&(row, col, dp1_kpa, dp2_kpa): &(usize, usize, f64, f64)| -> CellOutcome {
        let mut outcome = CellOutcome {
            row,
            col,
            dp1_kpa,
            dp2_kpa,
            blocked_f: None,
            truncated: false,
            error: None,
        };
        let cond = match build_condition(Some(dp1_kpa), dp2_kpa, a.closed, None) {
            Ok(c) => c,
            Err(e) => {
                outcome.error = Some(format!("{e:#}"));
                return outcome;
            }
        };
        let label = condition_label(a.closed, dp1_kpa, dp2_kpa);
        let prefix = dir.join(format!("curve_dp1_{}_dp2_{}", fmt_kpa(dp1_kpa), fmt_kpa(dp2_kpa)));
        match trace_curve(&spec, &cond, &resistance, &SolverSettings::default()) {
            Ok(curve) => {
                outcome.blocked_f = curve.points.first().map(|p| p.output_force_f);
                outcome.truncated = curve.truncated;
                if let Err(e) = write_curve_outputs(&curve, &prefix, &label) {
                    outcome.error = Some(format!("{e:#}"));
                }
            }
            Err(e) => outcome.error = Some(format!("{e:#}")),
        }
        outcome
    };

    let outcomes: Vec<CellOutcome> = if a.serial {
        cells.iter().map(run_cell).collect()
    } else {
        cells.par_iter().map(run_cell).collect()
    };

    // Single-threaded reducer: blocked-force matrix and per-cell errors.
    let mut matrix = vec![vec![None::<f64>; dp2_list.len()]; dp1_list.len()];
    let mut errors: Vec<&CellOutcome> = Vec::new();
    let mut truncated = 0usize;
    for o in &outcomes {
        matrix[o.row][o.col] = o.blocked_f;
        if o.error.is_some() {
            errors.push(o);
        }
        if o.truncated {
            truncated += 1;
        }
    }

    let matrix_path = dir.join("blocked_force.csv");
    let mut text = String::from("# blocked force F0 [N]; rows: dp1 [kPa]; columns: dp2 [kPa]\n");
    text.push_str("dp1_kpa");
    for p2 in &dp2_list {
        text.push_str(&format!(",{}", fmt_kpa(*p2)));
    }
    text.push('\n');
    for (i, p1) in dp1_list.iter().enumerate() {
        text.push_str(&fmt_kpa(*p1));
        for cell in &matrix[i] {
            match cell {
                Some(f) => text.push_str(&format!(",{f:.6}")),
                None => text.push(','),
            }
        }
        text.push('\n');
    }
    fs::write(&matrix_path, text)
        .with_context(|| format!("writing {}", matrix_path.display()))?;

    let errors_path = dir.join("errors.csv");
    let mut text = String::from("dp1_kpa,dp2_kpa,error\n");
    for o in &errors {
        let msg = o.error.as_deref().unwrap_or("");
        text.push_str(&format!(
            "{},{},{}\n",
            fmt_kpa(o.dp1_kpa),
            fmt_kpa(o.dp2_kpa),
            csv_quote(msg)
        ));
    }
    fs::write(&errors_path, text)
        .with_context(|| format!("writing {}", errors_path.display()))?;

    eprintln!("wrote: {}", matrix_path.display());
    eprintln!("wrote: {}", errors_path.display());
    println!(
        "cells: {} ({} dp1 x {} dp2), ok: {}, truncated: {}, failed: {}",
        cells.len(),
        dp1_list.len(),
        dp2_list.len(),
        cells.len() - errors.len(),
        truncated,
        errors.len()
    );

    if !errors.is_empty() {
        return Err(anyhow::Error::new(SolverFailure(format!(
            "{} of {} cells failed; details in {}",
            errors.len(),
            cells.len(),
            errors_path.display()
        ))));
    }
    Ok(())
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ============================================================================
// table
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TableArgs {
    /// Layer-count range, inclusive (e.g. 2..6 or 4)
    #[arg(long, value_name = "RANGE")]
    m: Option<String>,
    /// Column-count range, inclusive (e.g. 1..5 or 7)
    #[arg(long, value_name = "RANGE")]
    n: Option<String>,
    /// Also write the matrix as CSV to this path
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl TableArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: TableArgs = read_config(&path)?;
            merge_from_config!(self, cfg; opts: [m, n, out]; bools: []);
        }
        Ok(self)
    }
}

fn parse_inclusive_range(text: &str, what: &str) -> anyhow::Result<RangeInclusive<u32>> {
    let text = text.trim();
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (text, text),
    };
    let lo: u32 = lo.parse().with_context(|| format!("parsing {what} range {text:?}"))?;
    let hi: u32 = hi.parse().with_context(|| format!("parsing {what} range {text:?}"))?;
    if lo > hi {
        bail!("{what} range {text:?} is empty");
    }
    Ok(lo..=hi)
}

fn cmd_table(args: TableArgs) -> anyhow::Result<()> {
    let a = args.merged()?;
    let m_range = parse_inclusive_range(a.m.as_deref().unwrap_or("2..6"), "layer")?;
    let n_range = parse_inclusive_range(a.n.as_deref().unwrap_or("1..5"), "column")?;

    let rows = contraction_table(m_range, n_range.clone())?;
    let limit_row = contraction_limit_row(n_range.clone());

    // Assemble labels and one-decimal percent cells, then align columns.
    let headers: Vec<String> = n_range.clone().map(|n| format!("n={n}")).collect();
    let mut body: Vec<(String, Vec<String>)> = rows
        .iter()
        .map(|(m, row)| {
            let cells = row.iter().map(|v| format!("{:.1}", percent_one_decimal(*v))).collect();
            (format!("m={m}"), cells)
        })
        .collect();
    body.push((
        "m=inf".to_string(),
        limit_row.iter().map(|v| format!("{:.1}", percent_one_decimal(*v))).collect(),
    ));

    let label_width = body.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let col_widths: Vec<usize> = headers
        .iter()
        .enumerate()
        .map(|(j, h)| body.iter().map(|(_, cells)| cells[j].len()).chain([h.len()]).max().unwrap())
        .collect();

    let mut line = format!("{:label_width$}", "");
    for (h, w) in headers.iter().zip(&col_widths) {
        line.push_str(&format!("  {h:>w$}"));
    }
    println!("{line}");
    for (label, cells) in &body {
        let mut line = format!("{label:<label_width$}");
        for (c, w) in cells.iter().zip(&col_widths) {
            line.push_str(&format!("  {c:>w$}"));
        }
        println!("{line}");
    }

    if let Some(csv_path) = a.out {
        ensure_parent_dir(&csv_path)?;
        let mut text = String::from("m");
        for h in &headers {
            text.push(',');
            text.push_str(h);
        }
        text.push('\n');
        for (label, cells) in &body {
            text.push_str(label.strip_prefix("m=").unwrap_or(label));
            for c in cells {
                text.push(',');
                text.push_str(c);
            }
            text.push('\n');
        }
        fs::write(&csv_path, text).with_context(|| format!("writing {}", csv_path.display()))?;
        eprintln!("wrote: {}", csv_path.display());
    }
    Ok(())
}

// ============================================================================
// metrics
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MetricsArgs {
    /// Actuator description (JSON)
    #[arg(value_name = "SPEC_JSON")]
    spec: Option<PathBuf>,
    /// Recorded time series (CSV; header names the channels)
    #[arg(long, value_name = "CSV")]
    data: Option<PathBuf>,
    /// Lifted load mass [kg]
    #[arg(long)]
    load_mass: Option<f64>,
    /// Load-bearing cross-section area [mm^2]
    #[arg(long)]
    area_mm2: Option<f64>,
    /// Characteristic supply gauge pressure [kPa]
    #[arg(long)]
    supply_kpa: Option<f64>,
    /// Gravitational acceleration [m/s^2]
    #[arg(long)]
    g: Option<f64>,
    /// Smooth every channel with a centered 5-sample moving average
    #[arg(long)]
    smooth: bool,
    /// Emit the report as JSON instead of aligned text
    #[arg(long)]
    json: bool,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl MetricsArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: MetricsArgs = read_config(&path)?;
            merge_from_config!(self, cfg;
                opts: [spec, data, load_mass, area_mm2, supply_kpa, g];
                bools: [smooth, json]);
        }
        Ok(self)
    }
}

fn cmd_metrics(args: MetricsArgs) -> anyhow::Result<()> {
    let a = args.merged()?;
    let spec_path = require(a.spec, "the actuator description file")?;
    let data_path = require(a.data, "the time-series file --data")?;

    let spec = load_spec(&spec_path)?;
    let trace = io::read_timeseries_csv(&data_path)
        .with_context(|| format!("loading time series {}", data_path.display()))?;
    let ctx = MeasurementContext {
        load_mass: a.load_mass,
        cross_section_area: a.area_mm2.map(|v| v * 1e-6),
        supply_gauge_dp: a.supply_kpa.map(kpa_to_pa),
        smooth: a.smooth,
    };
    let g = a.g.unwrap_or(STANDARD_GRAVITY);
    let report = compute_metrics(&spec, &ctx, &trace, g)?;

    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_metrics_text(&report);
    }
    Ok(())
}

fn print_metrics_text(report: &MetricsReport) {
    // (name, value scaled to the display unit, unit label)
    let mut lines: Vec<(&str, f64, &str)> = Vec::new();
    let push = |lines: &mut Vec<(&str, f64, &str)>, name, v: Option<f64>, scale: f64, unit| {
        if let Some(x) = v {
            lines.push((name, x * scale, unit));
        }
    };
    push(&mut lines, "strain", report.strain, 100.0, "%");
    push(&mut lines, "peak_strain_rate", report.peak_strain_rate, 100.0, "%/s");
    push(&mut lines, "actuation_stress", report.actuation_stress, 1e-3, "kPa");
    push(&mut lines, "force_to_weight", report.force_to_weight, 1.0, "N/kg");
    push(&mut lines, "specific_force", report.specific_force, 1.0, "kN/(kg*kPa)");
    push(&mut lines, "force_to_volume", report.force_to_volume, 1e-3, "kN/m^3");
    push(&mut lines, "specific_force_to_volume", report.specific_force_to_volume, 1.0, "kN/(m^3*kPa)");
    push(&mut lines, "peak_power", report.peak_power, 1.0, "W");
    push(&mut lines, "power_to_weight", report.power_to_weight, 1.0, "W/kg");
    push(&mut lines, "power_to_volume", report.power_to_volume, 1e-3, "kW/m^3");
    push(&mut lines, "specific_work", report.specific_work, 1.0, "J/kg");
    push(&mut lines, "work_density", report.work_density, 1e-3, "kJ/m^3");
    push(&mut lines, "efficiency", report.efficiency, 100.0, "%");

    if lines.is_empty() && report.efficiency_vs_stroke.is_none() {
        println!("no metrics computable from the provided channels and context");
        return;
    }
    let width = lines
        .iter()
        .map(|(n, _, _)| n.len())
        .chain(report.efficiency_vs_stroke.iter().map(|_| "efficiency_vs_stroke".len()))
        .max()
        .unwrap_or(0);
    for (name, value, unit) in &lines {
        println!("{name:<width$}  {value:>12.4} {unit}");
    }
    if let Some(curve) = &report.efficiency_vs_stroke {
        let tail = curve.last().map(|(_, e)| e * 100.0).unwrap_or(0.0);
        println!(
            "{:<width$}  {:>12} samples (final {:.4} %)",
            "efficiency_vs_stroke",
            curve.len(),
            tail
        );
    }
}

// ============================================================================
// fit-kr
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FitKrArgs {
    /// Actuator description (JSON)
    #[arg(value_name = "SPEC_JSON")]
    spec: Option<PathBuf>,
    /// Pull-test record as KPA=CSV (repeatable), e.g. --data 60=pull60.csv
    #[arg(long, value_name = "KPA=CSV")]
    data: Option<Vec<String>>,
    /// Linear-region displacement threshold [mm]
    #[arg(long)]
    threshold_mm: Option<f64>,
    /// Write the fitted resistance model (JSON) here
    #[arg(long, value_name = "MODEL_JSON")]
    out: Option<PathBuf>,
    /// Emit the fitted model as JSON on stdout instead of a fit table
    #[arg(long)]
    json: bool,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl FitKrArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: FitKrArgs = read_config(&path)?;
            merge_from_config!(self, cfg;
                opts: [spec, data, threshold_mm, out];
                bools: [json]);
        }
        Ok(self)
    }
}

fn cmd_fit_kr(args: FitKrArgs) -> anyhow::Result<()> {
    let a = args.merged()?;
    let spec_path = require(a.spec, "the actuator description file")?;
    let data = require(a.data, "at least one pull-test record --data")?;
    if data.is_empty() {
        bail!("at least one --data KPA=CSV record is required");
    }
    let spec = load_spec(&spec_path)?;
    let threshold = a.threshold_mm.map_or(DEFAULT_LINEAR_THRESHOLD, |mm| mm * 1e-3);

    let mut samples = Vec::new();
    let mut table = Vec::new();
    for entry in &data {
        let (kpa_text, path_text) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("--data expects KPA=CSV, got {entry:?}"))?;
        let dp1_kpa: f64 = kpa_text
            .trim()
            .parse()
            .with_context(|| format!("parsing pressure in --data {entry:?}"))?;
        let path = PathBuf::from(path_text.trim());
        let record = io::read_resistance_csv(&path)
            .with_context(|| format!("loading pull-test record {}", path.display()))?;
        let fit = fit_kr(&record, &spec, threshold)
            .with_context(|| format!("fitting the {dp1_kpa} kPa record"))?;
        samples.push((kpa_to_pa(dp1_kpa), fit.kr));
        table.push((dp1_kpa, fit));
    }
    let model = ResistanceModel::new(samples)?;

    if a.json {
        println!("{}", io::model_to_json_str(&model));
    } else {
        println!(
            "{:>8}  {:>10}  {:>12}  {:>12}  {:>9}  {:>7}",
            "dp1_kpa", "kr_n_per_m", "slope_n_per_m", "intercept_n", "r_squared", "samples"
        );
        for (dp1_kpa, fit) in &table {
            println!(
                "{:>8}  {:>10.4}  {:>12.4}  {:>12.4}  {:>9.6}  {:>7}",
                fmt_kpa(*dp1_kpa),
                fit.kr,
                fit.slope,
                fit.intercept,
                fit.r_squared,
                fit.samples_used
            );
        }
    }
    if let Some(out) = a.out {
        ensure_parent_dir(&out)?;
        io::write_model_json(&out, &model)
            .with_context(|| format!("writing {}", out.display()))?;
        eprintln!("wrote: {}", out.display());
    }
    Ok(())
}

// ============================================================================
// modes
// ============================================================================

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModesArgs {
    /// List every operation mode (the default)
    #[arg(long)]
    list: bool,
    /// Keep only one class: studied, non-functional or untested
    #[arg(long, value_name = "CLASS")]
    filter: Option<String>,
    /// Explain one mode code, e.g. IPC1-OV2-N
    #[arg(long, value_name = "CODE")]
    explain: Option<String>,
    /// Emit JSON instead of text
    #[arg(long)]
    json: bool,
    /// JSON file supplying any of the other keys
    #[arg(long, value_name = "JSON")]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl ModesArgs {
    fn merged(mut self) -> anyhow::Result<Self> {
        if let Some(path) = self.config.take() {
            let cfg: ModesArgs = read_config(&path)?;
            merge_from_config!(self, cfg; opts: [filter, explain]; bools: [list, json]);
        }
        Ok(self)
    }
}

fn parse_mode_class(text: &str) -> anyhow::Result<ModeClass> {
    match text.to_ascii_lowercase().as_str() {
        "studied" => Ok(ModeClass::Studied),
        "non-functional" | "nonfunctional" => Ok(ModeClass::NonFunctional),
        "untested" => Ok(ModeClass::Untested),
        other => bail!("unknown mode class {other:?}: expected studied, non-functional or untested"),
    }
}

fn cmd_modes(args: ModesArgs) -> anyhow::Result<()> {
    let a = args.merged()?;

    if let Some(code) = &a.explain {
        let mode = OperationMode::parse(code)?;
        if a.json {
            let value = serde_json::json!({
                "code": mode.code(),
                "class": mode.classify().to_string(),
                "description": mode.describe(),
            });
            println!("{}", serde_json::to_string_pretty(&value)?);
        } else {
            println!("{}: {}", mode.code(), mode.describe());
        }
        return Ok(());
    }

    let class_filter = a.filter.as_deref().map(parse_mode_class).transpose()?;
    let selected: Vec<OperationMode> = enumerate_modes()
        .into_iter()
        .filter(|m| class_filter.map_or(true, |c| m.classify() == c))
        .collect();

    if a.json {
        let items: Vec<serde_json::Value> = selected
            .iter()
            .map(|m| {
                serde_json::json!({
                    "code": m.code(),
                    "class": m.classify().to_string(),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&items)?);
    } else {
        // One line per mode and nothing else, so `muscle modes --list | wc -l`
        // counts the family directly.
        for m in &selected {
            println!("{:<12} {}", m.code(), m.classify());
        }
    }
    Ok(())
}

// ============================================================================
// Unit tests for the small pure helpers
// ============================================================================
