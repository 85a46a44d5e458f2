//! Commands behind the `rotocool` binary.
//!
//! Each command reads a TOML run configuration, writes its tables into the
//! output directory and returns a process exit code (see [`exit`]).

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rotocool::cavity::confocal_geometry;
use rotocool::config::{InitialState, OutputFormat, SweepAxis};
use rotocool::dynamics::{metrics, simulate};
use rotocool::planner::{build_plan, validate_plan, ValidationReport};
use rotocool::spectroscopy::{enumerate_states, rotational_energy, thermal_state};
use rotocool::units::codata;
use rotocool::{parse_config, Error, Plan, Population, RoState, RunConfig, Simulation, Species};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const VALIDATION: u8 = 3;
}

/// Environment variable that overrides `--out`.
pub const OUT_ENV: &str = "ROTOCOOL_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "rotocool",
    version,
    about = "Cavity-assisted rotational cooling planner and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Output directory (overridden by ROTOCOOL_OUT).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotational level table with thermal weights.
    Levels(Common),
    /// Tuning schedule with fields, rates and durations.
    Plan(Common),
    /// Population dynamics through the plan.
    Simulate(Common),
    /// One plan + simulation summary per value of a config key.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    #[value(name = "q_factor")]
    QFactor,
    #[value(name = "temperature_k")]
    TemperatureK,
    #[value(name = "jmax_x2")]
    JmaxX2,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::QFactor => SweepAxis::QFactor,
            AxisArg::TemperatureK => SweepAxis::TemperatureK,
            AxisArg::JmaxX2 => SweepAxis::JmaxX2,
        }
    }
}

/// A command failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code_for(&e),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: exit::CONFIG,
            message: format!("i/o: {e}"),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self {
            code: exit::CONFIG,
            message: format!("csv: {e}"),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: exit::CONFIG,
            message: format!("json: {e}"),
        }
    }
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InfeasibleTransition { .. } => exit::INFEASIBLE,
        Error::ExceedsFieldLimit { .. } => exit::VALIDATION,
        _ => exit::CONFIG,
    }
}

pub type CmdResult = Result<u8, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// `env_out` is the value of [`OUT_ENV`], if set.
pub fn run<I, S>(args: I, env_out: Option<PathBuf>) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            };
        }
    };
    let (common, sweep) = match &cli.command {
        Command::Levels(c) | Command::Plan(c) | Command::Simulate(c) => (c, None),
        Command::Sweep {
            common,
            axis,
            values,
        } => (common, Some((*axis, values.as_slice()))),
    };
    let result = load(common, env_out).and_then(|(cfg, out, format)| match (&cli.command, sweep) {
        (Command::Levels(_), _) => cmd_levels(&cfg, &out, format),
        (Command::Plan(_), _) => cmd_plan(&cfg, &out, format),
        (Command::Simulate(_), _) => cmd_simulate(&cfg, &out, format),
        (Command::Sweep { .. }, Some((axis, values))) => {
            cmd_sweep(&cfg, axis.into(), values, &out, format)
        }
        (Command::Sweep { .. }, None) => unreachable!(),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    }
}

fn load(
    common: &Common,
    env_out: Option<PathBuf>,
) -> Result<(RunConfig, PathBuf, OutputFormat), Failure> {
    let path = &common.config;
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: exit::CONFIG,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg = parse_config(&text).map_err(|e| Failure {
        code: exit::CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    let out = env_out
        .filter(|p| !p.as_os_str().is_empty())
        .or_else(|| common.out.clone())
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let format = match common.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Json) => OutputFormat::Json,
        None => cfg.format,
    };
    Ok((cfg, out, format))
}

fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn table_name(stem: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    }
}

fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_csv(
    path: &Path,
    header: &[&str],
    records: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

// ---- levels ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub two_j: i32,
    pub two_m: i32,
    pub energy_j: f64,
    pub energy_cm: f64,
    pub thermal_weight: f64,
}

pub const LEVEL_HEADER: [&str; 5] = ["two_j", "two_m", "energy_j", "energy_cm", "thermal_weight"];

impl LevelRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.two_j.to_string(),
            self.two_m.to_string(),
            sci(self.energy_j),
            sci(self.energy_cm),
            sci(self.thermal_weight),
        ]
    }
}

pub fn level_rows(cfg: &RunConfig) -> Result<Vec<LevelRow>, Failure> {
    let species = cfg.species()?;
    let pop = thermal_state(&species, cfg.temperature_k, cfg.two_j_max)?;
    let hc = codata::H * codata::C;
    Ok(pop
        .weights()
        .iter()
        .map(|(state, &w)| {
            let e = rotational_energy(&species, state);
            LevelRow {
                two_j: state.two_j,
                two_m: state.two_m,
                energy_j: e,
                energy_cm: e / hc / codata::PER_CM,
                thermal_weight: w,
            }
        })
        .collect())
}

pub fn read_levels_csv(path: &Path) -> Result<Vec<LevelRow>, Failure> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn cmd_levels(cfg: &RunConfig, out: &Path, format: OutputFormat) -> CmdResult {
    let rows = level_rows(cfg)?;
    fs::create_dir_all(out)?;
    let path = out.join(table_name("levels", format));
    match format {
        OutputFormat::Csv => write_csv(&path, &LEVEL_HEADER, rows.iter().map(LevelRow::record))?,
        OutputFormat::Json => write_json(&path, &rows)?,
    }
    announce(&path);
    Ok(exit::OK)
}

// ---- plan ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub step_index: usize,
    pub two_j_upper: i32,
    pub two_m_upper: i32,
    pub q: i8,
    pub lambda_c_m: f64,
    pub e_field_v_per_m: f64,
    pub delta_f: f64,
    pub gamma_free_per_s: f64,
    pub eta: f64,
    pub gamma_cav_per_s: f64,
    pub duration_s: f64,
}

pub const PLAN_HEADER: [&str; 11] = [
    "step_index",
    "two_j_upper",
    "two_m_upper",
    "q",
    "lambda_c_m",
    "e_field_v_per_m",
    "delta_f",
    "gamma_free_per_s",
    "eta",
    "gamma_cav_per_s",
    "duration_s",
];

impl PlanRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.step_index.to_string(),
            self.two_j_upper.to_string(),
            self.two_m_upper.to_string(),
            self.q.to_string(),
            sci(self.lambda_c_m),
            sci(self.e_field_v_per_m),
            sci(self.delta_f),
            sci(self.gamma_free_per_s),
            sci(self.eta),
            sci(self.gamma_cav_per_s),
            sci(self.duration_s),
        ]
    }
}

/// One row per step, keyed on the step's representative transition.
pub fn plan_rows(plan: &Plan) -> Vec<PlanRow> {
    plan.steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let t = step.representative();
            PlanRow {
                step_index: i,
                two_j_upper: t.upper.two_j,
                two_m_upper: t.upper.two_m,
                q: t.q,
                lambda_c_m: step.lambda_c,
                e_field_v_per_m: step.e_field,
                delta_f: step.delta_f,
                gamma_free_per_s: step.gamma_free,
                eta: step.eta,
                gamma_cav_per_s: step.gamma_cavity,
                duration_s: step.duration,
            }
        })
        .collect()
}

pub fn read_plan_csv(path: &Path) -> Result<Vec<PlanRow>, Failure> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavitySummary {
    pub role: String,
    pub s: u32,
    pub q_factor: f64,
    pub lambda_c_m: f64,
    pub length_m: f64,
    pub waist_m: f64,
    pub volume_m3: f64,
    pub diameter_m: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub scheme: String,
    pub species: String,
    pub jmax_x2: i32,
    pub steps: usize,
    pub total_time_s: f64,
    pub max_field_v_per_m: f64,
    pub cavities: Vec<CavitySummary>,
    pub validation_flags: Vec<String>,
}

pub fn plan_summary(plan: &Plan, report: &ValidationReport) -> PlanSummary {
    PlanSummary {
        scheme: plan.scheme.as_str().to_owned(),
        species: plan.species.name.clone(),
        jmax_x2: plan.two_j_max,
        steps: plan.steps.len(),
        total_time_s: plan.total_duration(),
        max_field_v_per_m: plan.max_field(),
        cavities: plan
            .cavities
            .iter()
            .map(|(role, cfg)| {
                let g = confocal_geometry(cfg);
                CavitySummary {
                    role: role.to_string(),
                    s: cfg.s,
                    q_factor: cfg.q_factor,
                    lambda_c_m: cfg.lambda_c,
                    length_m: g.length,
                    waist_m: g.waist,
                    volume_m3: g.volume,
                    diameter_m: g.diameter,
                    eta: g.eta,
                }
            })
            .collect(),
        validation_flags: report.flags(),
    }
}

/// Builds the plan without a field cap, then validates it against the
/// configured limit so a failing plan is still written out.
pub fn plan_for(cfg: &RunConfig) -> Result<(Species, Plan, ValidationReport), Failure> {
    let species = cfg.species()?;
    let plan = build_plan(&species, cfg.scheme, cfg.two_j_max, &cfg.plan_options())?;
    let report = validate_plan(&plan, cfg.efield_max, cfg.temperature_k);
    Ok((species, plan, report))
}

fn report_code(report: &ValidationReport) -> u8 {
    for flag in report.flags() {
        eprintln!("validation: {flag}");
    }
    if report.failed() {
        exit::VALIDATION
    } else {
        exit::OK
    }
}

pub fn cmd_plan(cfg: &RunConfig, out: &Path, format: OutputFormat) -> CmdResult {
    let (_, plan, report) = plan_for(cfg)?;
    let rows = plan_rows(&plan);
    fs::create_dir_all(out)?;
    let path = out.join(table_name("plan", format));
    match format {
        OutputFormat::Csv => write_csv(&path, &PLAN_HEADER, rows.iter().map(PlanRow::record))?,
        OutputFormat::Json => write_json(&path, &rows)?,
    }
    announce(&path);
    let summary = out.join("plan_summary.json");
    write_json(&summary, &plan_summary(&plan, &report))?;
    announce(&summary);
    Ok(report_code(&report))
}

// ---- simulate ----

/// Timeline in column form: one weight per state per snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub columns: Vec<String>,
    pub rows: Vec<TimelineRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub stage_index: usize,
    pub time_s: f64,
    pub weights: Vec<f64>,
}

pub fn state_column(s: &RoState) -> String {
    format!("J{}M{:+}", s.two_j, s.two_m)
}

/// Inverse of [`state_column`].
pub fn parse_state_column(name: &str, two_omega: i32) -> Option<RoState> {
    let rest = name.strip_prefix('J')?;
    let (j, m) = rest.split_once('M')?;
    RoState::new(0, j.parse().ok()?, m.parse().ok()?, two_omega)
}

pub fn timeline(sim: &Simulation) -> Timeline {
    let states: Vec<RoState> = sim
        .timeline
        .first()
        .map(|s| s.population.states().copied().collect())
        .unwrap_or_default();
    Timeline {
        columns: states.iter().map(state_column).collect(),
        rows: sim
            .timeline
            .iter()
            .map(|snap| TimelineRow {
                stage_index: snap.stage_index,
                time_s: snap.time,
                weights: states.iter().map(|s| snap.population.weight(s)).collect(),
            })
            .collect(),
    }
}

pub fn read_timeline_csv(path: &Path) -> Result<Timeline, Failure> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let columns: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let bad = |what: &str| Failure {
        code: exit::CONFIG,
        message: format!("{}: malformed {what}", path.display()),
    };
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let stage_index = record
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("stage_index"))?;
        let time_s = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("time_s"))?;
        let weights = record
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>().map_err(|_| bad("weight")))
            .collect::<Result<_, _>>()?;
        rows.push(TimelineRow {
            stage_index,
            time_s,
            weights,
        });
    }
    Ok(Timeline { columns, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub scheme: String,
    pub total_time_s: f64,
    pub ground_fraction: f64,
    pub per_stage_residuals: Vec<Option<f64>>,
    pub validation_flags: Vec<String>,
    pub mean_rotational_energy_j: f64,
    pub entropy: f64,
}

pub fn initial_population(cfg: &RunConfig, species: &Species) -> Result<Population, Failure> {
    match cfg.initial {
        InitialState::Thermal => Ok(thermal_state(species, cfg.temperature_k, cfg.two_j_max)?),
        InitialState::Top => {
            let states = enumerate_states(species, cfg.two_j_max)?;
            let top: Vec<RoState> = states
                .iter()
                .filter(|s| s.two_j == cfg.two_j_max)
                .copied()
                .collect();
            let lowest = top.iter().map(|s| s.two_m.abs()).min().unwrap_or(0);
            let occupied: Vec<RoState> = top
                .into_iter()
                .filter(|s| s.two_m.abs() == lowest)
                .collect();
            Ok(Population::uniform_over(&states, &occupied).expect("top states are enumerated"))
        }
    }
}

pub fn run_simulation(cfg: &RunConfig) -> Result<(Plan, ValidationReport, Simulation), Failure> {
    let (species, plan, report) = plan_for(cfg)?;
    let init = initial_population(cfg, &species)?;
    let sim = simulate(&plan, &init, &cfg.sim_options())?;
    Ok((plan, report, sim))
}

pub fn sim_summary(plan: &Plan, report: &ValidationReport, sim: &Simulation) -> SimSummary {
    let m = metrics(sim.final_state(), &plan.species);
    SimSummary {
        scheme: plan.scheme.as_str().to_owned(),
        total_time_s: sim.total_time,
        ground_fraction: sim.ground_fraction,
        per_stage_residuals: sim
            .per_stage
            .iter()
            .map(|r| r.residual_fraction())
            .collect(),
        validation_flags: report.flags(),
        mean_rotational_energy_j: m.mean_rotational_energy,
        entropy: m.entropy,
    }
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, format: OutputFormat) -> CmdResult {
    let (plan, report, sim) = run_simulation(cfg)?;
    let table = timeline(&sim);
    fs::create_dir_all(out)?;
    let path = out.join(table_name("timeline", format));
    match format {
        OutputFormat::Csv => {
            let mut header = vec!["stage_index", "time_s"];
            header.extend(table.columns.iter().map(String::as_str));
            let records = table.rows.iter().map(|row| {
                let mut r = vec![row.stage_index.to_string(), sci(row.time_s)];
                r.extend(row.weights.iter().map(|w| sci(*w)));
                r
            });
            write_csv(&path, &header, records)?;
        }
        OutputFormat::Json => write_json(&path, &table)?,
    }
    announce(&path);
    let summary = out.join("summary.json");
    write_json(&summary, &sim_summary(&plan, &report, &sim))?;
    announce(&summary);
    Ok(report_code(&report))
}

// ---- sweep ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub scheme: String,
    pub steps: Option<usize>,
    pub total_time_s: Option<f64>,
    pub ground_fraction: Option<f64>,
    pub max_field_v_per_m: Option<f64>,
    pub exit_code: u8,
}

pub const SWEEP_HEADER: [&str; 8] = [
    "axis",
    "value",
    "scheme",
    "steps",
    "total_time_s",
    "ground_fraction",
    "max_field_v_per_m",
    "exit_code",
];

impl SweepRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.axis.clone(),
            sci(self.value),
            self.scheme.clone(),
            self.steps.map(|s| s.to_string()).unwrap_or_default(),
            opt_sci(self.total_time_s),
            opt_sci(self.ground_fraction),
            opt_sci(self.max_field_v_per_m),
            self.exit_code.to_string(),
        ]
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, Failure> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn sweep_point(cfg: &RunConfig, axis: SweepAxis, value: f64) -> SweepRow {
    let mut row = SweepRow {
        axis: axis.as_str().to_owned(),
        value,
        scheme: cfg.scheme.as_str().to_owned(),
        steps: None,
        total_time_s: None,
        ground_fraction: None,
        max_field_v_per_m: None,
        exit_code: exit::OK,
    };
    match run_simulation(cfg) {
        Ok((plan, report, sim)) => {
            row.steps = Some(plan.steps.len());
            row.total_time_s = Some(sim.total_time);
            row.ground_fraction = Some(sim.ground_fraction);
            row.max_field_v_per_m = Some(plan.max_field());
            if report.failed() {
                row.exit_code = exit::VALIDATION;
            }
        }
        Err(f) => row.exit_code = f.code,
    }
    row
}

/// Evaluates every value independently (in parallel); rows keep input order.
pub fn sweep_rows(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>, Failure> {
    if values.is_empty() {
        return Err(Failure {
            code: exit::CONFIG,
            message: "sweep needs at least one value".into(),
        });
    }
    let configs = values
        .iter()
        .map(|&v| cfg.with_axis(axis, v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure {
            code: exit::CONFIG,
            message: e.to_string(),
        })?;
    Ok(configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(c, &v)| sweep_point(c, axis, v))
        .collect())
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
    format: OutputFormat,
) -> CmdResult {
    let rows = sweep_rows(cfg, axis, values)?;
    fs::create_dir_all(out)?;
    let path = out.join(table_name("sweep", format));
    match format {
        OutputFormat::Csv => write_csv(&path, &SWEEP_HEADER, rows.iter().map(SweepRow::record))?,
        OutputFormat::Json => write_json(&path, &rows)?,
    }
    announce(&path);
    Ok(rows.iter().map(|r| r.exit_code).max().unwrap_or(exit::OK))
}
