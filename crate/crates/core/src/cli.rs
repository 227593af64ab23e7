//! Command-line front end.
//!
//! Output goes to `--out`; relative paths resolve against the directory named
//! by `DETUNED_CNOT_OUT_DIR` when it is set. `--out -` writes to stdout, and
//! omitting `--out` uses a per-command default file name.

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::equivclass::{
    cnot_distance, makhlin_invariants, weyl_coordinates, weyl_trajectory, write_trajectory_csv,
    InvariantPair, TrajectorySample, WeylPoint, DEFAULT_TRAJECTORY_SAMPLES,
};
use crate::error::{Error, Result};
use crate::fmt::fixed6;
use crate::model::SystemParams;
use crate::optimize::{
    calibrate_single_step, calibrate_two_step, detuning_grid, CalibrationResult,
};
use crate::propagate::{entangling_u_frame1, entangling_u_frame2};
use crate::qmat::Operator4;
use crate::sequences::{
    canonical_cnot, entangling_product, fidelity, fit_local_rotations_with, single_step_u,
    two_step_time, two_step_trajectory, FitOptions, Frame, GateKind, GateRecipe, GateRecipeJson,
};
use crate::verify::{run_suite, VerifyReport};

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_ENV: &str = "DETUNED_CNOT_OUT_DIR";

/// Highest detuning with a single-step column in the calibration table.
const TABLE1_SINGLE_STEP_LIMIT: f64 = 1.0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Gate times and drive amplitudes for ideal CNOT, delta/g = 0.0..2.0.
    Table1,
    /// Best single-step parameters and invariants, delta/g = 1.0..2.0.
    Table2,
    /// Assemble and fit one gate; JSON report.
    Gate,
    /// Weyl-chamber steering trajectory.
    Trajectory,
    /// Run the property suite.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    OneStep,
    TwoStep,
}

impl From<Mode> for GateKind {
    fn from(m: Mode) -> GateKind {
        match m {
            Mode::OneStep => GateKind::SingleStep,
            Mode::TwoStep => GateKind::TwoStep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "detuned-cnot",
    version,
    about = "CNOT calibration for detuned, weakly coupled qubits"
)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Detuning delta/g.
    #[arg(long = "delta", default_value_t = 1.0, allow_negative_numbers = true)]
    pub delta_over_g: f64,
    #[arg(long, value_enum, default_value = "one-step")]
    pub mode: Mode,
    /// Rotating frame of the two-step propagator (1 or 2).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub frame: u8,
    /// Trajectory sample count (at least 2).
    #[arg(long, default_value_t = DEFAULT_TRAJECTORY_SAMPLES)]
    pub samples: usize,
    /// Output path; `-` for stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to csv for tables and trajectories, json for gates and verify.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Seed for the rotation-fit restarts and the property-suite draws.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the resonant (delta = 0) trajectory next to the main one.
    #[arg(long)]
    pub with_resonant_trace: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> RunConfig {
        RunConfig::parse_from([
            "detuned-cnot",
            command.to_possible_value().unwrap().get_name(),
        ])
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Command::Gate | Command::Verify => Format::Json,
            _ => Format::Csv,
        })
    }

    fn default_name(&self) -> String {
        let ext = match self.format() {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let stem = match self.command {
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::Gate => "gate",
            Command::Trajectory => "trajectory",
            Command::Verify => "verify",
        };
        format!("{stem}.{ext}")
    }

    /// Where the main output goes; `None` means stdout.
    pub fn output_path(&self) -> Option<PathBuf> {
        let name = match &self.out {
            Some(p) if p.as_os_str() == "-" => return None,
            Some(p) => p.clone(),
            None if self.command == Command::Verify => return None,
            None => PathBuf::from(self.default_name()),
        };
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if name.is_relative() => Some(Path::new(&dir).join(name)),
            _ => Some(name),
        }
    }
}

/// `trajectory.csv` -> `trajectory_resonant.csv`.
pub fn resonant_companion(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trajectory");
    let mut name = format!("{stem}_resonant");
    if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
        name.push('.');
        name.push_str(ext);
    }
    path.with_file_name(name)
}

enum Sink {
    Stdout(io::Stdout),
    File(PathBuf, BufWriter<File>),
}

impl Sink {
    fn open(path: Option<&Path>) -> Result<Sink> {
        match path {
            None => Ok(Sink::Stdout(io::stdout())),
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let f = File::create(p).map_err(|e| Error::io(p, e))?;
                Ok(Sink::File(p.to_path_buf(), BufWriter::new(f)))
            }
        }
    }

    fn label(&self) -> PathBuf {
        match self {
            Sink::Stdout(_) => PathBuf::from("<stdout>"),
            Sink::File(p, _) => p.clone(),
        }
    }

    fn finish(mut self) -> Result<()> {
        let label = self.label();
        self.flush().map_err(|e| Error::io(label, e))
    }
}

impl Write for Sink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Sink::Stdout(s) => s.write(buf),
            Sink::File(_, f) => f.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Sink::Stdout(s) => s.flush(),
            Sink::File(_, f) => f.flush(),
        }
    }
}

/// csv errors wrapping an I/O failure are reported against the output path.
fn tag_io(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => Error::io(path, source),
            _ => unreachable!(),
        },
        Error::Json(j) if j.is_io() => Error::io(path, io::Error::from(j.io_error_kind().unwrap())),
        other => other,
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut sink = Sink::open(path)?;
    let label = sink.label();
    serde_json::to_writer_pretty(&mut sink, value).map_err(|e| tag_io(e.into(), &label))?;
    writeln!(sink).map_err(|e| Error::io(&label, e))?;
    sink.finish()
}

fn write_csv_rows(header: &[&str], rows: &[Vec<String>], path: Option<&Path>) -> Result<()> {
    let sink = Sink::open(path)?;
    let label = sink.label();
    let mut w = csv::Writer::from_writer(sink);
    let mut body = || -> Result<()> {
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    };
    body().map_err(|e| tag_io(e, &label))
}

fn opt6(x: Option<f64>) -> String {
    x.map(fixed6).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub delta_over_g: f64,
    pub t2: f64,
    pub t1: Option<f64>,
    pub omega1_over_g: Option<f64>,
}

pub fn table1_rows() -> Result<Vec<Table1Row>> {
    detuning_grid(0.0, 2.0, 0.1)
        .into_iter()
        .map(|d| {
            let two = calibrate_two_step(d)?;
            let one = if d <= TABLE1_SINGLE_STEP_LIMIT {
                Some(calibrate_single_step(d)?)
            } else {
                None
            };
            Ok(Table1Row {
                delta_over_g: d,
                t2: two.t_units,
                t1: one.as_ref().map(|r| r.t_units),
                omega1_over_g: one.as_ref().map(|r| r.omega1_over_g),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub delta_over_g: f64,
    pub t1: f64,
    pub omega1_over_g: f64,
    pub g1: f64,
    pub g2: f64,
    pub d2: f64,
}

pub fn table2_rows() -> Result<Vec<Table2Row>> {
    detuning_grid(1.0, 2.0, 0.1)
        .into_iter()
        .map(|d| {
            let r = calibrate_single_step(d)?;
            Ok(Table2Row {
                delta_over_g: d,
                t1: r.t_units,
                omega1_over_g: r.omega1_over_g,
                // Real for single-step gates at gtilde = 0.
                g1: r.invariants.g1.re,
                g2: r.invariants.g2,
                d2: r.distance,
            })
        })
        .collect()
}

fn cmd_table1(cfg: &RunConfig) -> Result<()> {
    let rows = table1_rows()?;
    let path = cfg.output_path();
    match cfg.format() {
        Format::Json => write_json(&rows, path.as_deref()),
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fixed6(r.delta_over_g),
                        fixed6(r.t2),
                        opt6(r.t1),
                        opt6(r.omega1_over_g),
                    ]
                })
                .collect();
            write_csv_rows(
                &["delta_over_g", "T2", "T1", "omega1_over_g"],
                &body,
                path.as_deref(),
            )
        }
    }
}

fn cmd_table2(cfg: &RunConfig) -> Result<()> {
    let rows = table2_rows()?;
    let path = cfg.output_path();
    match cfg.format() {
        Format::Json => write_json(&rows, path.as_deref()),
        Format::Csv => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        fixed6(r.delta_over_g),
                        fixed6(r.t1),
                        fixed6(r.omega1_over_g),
                        fixed6(r.g1),
                        fixed6(r.g2),
                    ]
                })
                .collect();
            write_csv_rows(
                &["delta_over_g", "T1", "omega1_over_g", "G1", "G2"],
                &body,
                path.as_deref(),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantsJson {
    pub g1: [f64; 2],
    pub g2: f64,
    pub d2: f64,
}

impl From<InvariantPair> for InvariantsJson {
    fn from(inv: InvariantPair) -> Self {
        InvariantsJson {
            g1: [inv.g1.re, inv.g1.im],
            g2: inv.g2,
            d2: cnot_distance(&inv),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylJson {
    /// Radians.
    pub c: [f64; 3],
    /// Units of `pi/2`.
    pub c_over_half_pi: [f64; 3],
}

impl From<WeylPoint> for WeylJson {
    fn from(w: WeylPoint) -> Self {
        let c = w.as_array();
        WeylJson {
            c,
            c_over_half_pi: c.map(|v| v / FRAC_PI_2),
        }
    }
}

/// Everything the `gate` command reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub recipe: GateRecipeJson,
    /// `U(t)` for the entangling segment.
    pub propagator: Operator4,
    /// `U e^{-pi X1} U` (two-step) or `U` (single-step).
    pub entangling: Operator4,
    pub gate: Operator4,
    pub invariants: InvariantsJson,
    pub weyl: WeylJson,
    /// `|gate - CNOT|_F` after fitting.
    pub distance: f64,
    /// `None` when the gate is too far from CNOT for the fidelity to be defined.
    pub fidelity: Option<f64>,
}

/// Calibrates (single-step) or times (two-step) the sequence, fits the local rotations
/// against the canonical CNOT and assembles the gate.
pub fn build_gate(
    kind: GateKind,
    delta_over_g: f64,
    frame: Frame,
    seed: u64,
) -> Result<GateReport> {
    let (params, t, propagator, entangling) = match kind {
        GateKind::TwoStep => {
            let p = SystemParams::detuned(delta_over_g);
            let t = two_step_time(&p)?;
            let u = match frame {
                Frame::Doubly => entangling_u_frame1(t, &p),
                Frame::Individual => entangling_u_frame2(t, &p),
            };
            (p, t, u, entangling_product(t, &p, frame))
        }
        GateKind::SingleStep => {
            let cal: CalibrationResult = calibrate_single_step(delta_over_g)?;
            let p = cal.params();
            let t = cal.time(kind);
            let u = single_step_u(t, &p)?;
            (p, t, u, u)
        }
    };
    let target = canonical_cnot();
    let fit = fit_local_rotations_with(
        &entangling,
        &target,
        &FitOptions {
            seed,
            ..FitOptions::default()
        },
    )?;
    let recipe = GateRecipe::new(kind, params, t, frame, fit.rotations)?;
    let gate = recipe.realize()?;
    let invariants = makhlin_invariants(&entangling)?;
    Ok(GateReport {
        recipe: recipe.to_json(),
        propagator,
        entangling,
        gate,
        invariants: invariants.into(),
        weyl: weyl_coordinates(&entangling)?.into(),
        distance: fit.distance,
        fidelity: fidelity(&gate, &target).ok(),
    })
}

fn cmd_gate(cfg: &RunConfig) -> Result<()> {
    if cfg.format() != Format::Json {
        return Err(Error::InvalidArgument("gate output is JSON only".into()));
    }
    let report = build_gate(
        cfg.mode.into(),
        cfg.delta_over_g,
        Frame::from_index(cfg.frame)?,
        cfg.seed,
    )?;
    write_json(&report, cfg.output_path().as_deref())
}

/// Trajectory of the configured sequence: the calibrated single-step evolution, or the
/// two-step product `U(t) e^{-pi X1} U(t)` up to the gate time.
pub fn trajectory_for(
    kind: GateKind,
    delta_over_g: f64,
    frame: Frame,
    samples: usize,
) -> Result<Vec<TrajectorySample>> {
    match kind {
        GateKind::SingleStep => {
            let (p, t) = if delta_over_g == 0.0 {
                (SystemParams::new(0.0, 0.0, 15f64.sqrt()), FRAC_PI_2)
            } else {
                let cal = calibrate_single_step(delta_over_g)?;
                (cal.params(), cal.time(kind))
            };
            weyl_trajectory(&p, t, samples)
        }
        GateKind::TwoStep => {
            let p = SystemParams::detuned(delta_over_g);
            two_step_trajectory(&p, frame, two_step_time(&p)?, samples)
        }
    }
}

#[derive(Serialize)]
struct TrajectoryRowJson {
    t: f64,
    c1: f64,
    c2: f64,
    c3: f64,
}

fn write_trajectory(
    samples: &[TrajectorySample],
    format: Format,
    path: Option<&Path>,
) -> Result<()> {
    match format {
        Format::Json => {
            let rows: Vec<TrajectoryRowJson> = samples
                .iter()
                .map(|s| TrajectoryRowJson {
                    t: s.t / FRAC_PI_2,
                    c1: s.point.c1 / FRAC_PI_2,
                    c2: s.point.c2 / FRAC_PI_2,
                    c3: s.point.c3 / FRAC_PI_2,
                })
                .collect();
            write_json(&rows, path)
        }
        Format::Csv => {
            let sink = Sink::open(path)?;
            let label = sink.label();
            write_trajectory_csv(samples, sink).map_err(|e| tag_io(e, &label))
        }
    }
}

fn cmd_trajectory(cfg: &RunConfig) -> Result<()> {
    if cfg.samples < 2 {
        return Err(Error::InvalidArgument(
            "--samples must be at least 2".into(),
        ));
    }
    let kind: GateKind = cfg.mode.into();
    let frame = Frame::from_index(cfg.frame)?;
    let path = cfg.output_path();
    let companion = if cfg.with_resonant_trace {
        match &path {
            Some(p) => Some(resonant_companion(p)),
            None => {
                return Err(Error::InvalidArgument(
                    "--with-resonant-trace needs a file output, not stdout".into(),
                ))
            }
        }
    } else {
        None
    };
    let samples = trajectory_for(kind, cfg.delta_over_g, frame, cfg.samples)?;
    write_trajectory(&samples, cfg.format(), path.as_deref())?;
    if let Some(c) = companion {
        let resonant = trajectory_for(kind, 0.0, frame, cfg.samples)?;
        write_trajectory(&resonant, cfg.format(), Some(&c))?;
    }
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let report = run_suite(cfg.seed)?;
    eprintln!("{report}");
    if cfg.format.is_some() || cfg.out.is_some() {
        match cfg.format() {
            Format::Json => write_json(&report, cfg.output_path().as_deref())?,
            Format::Csv => {
                let body: Vec<Vec<String>> = report
                    .checks
                    .iter()
                    .map(|c| {
                        vec![
                            c.name.to_string(),
                            c.passed.to_string(),
                            format!("{:e}", c.worst),
                            format!("{:e}", c.tolerance),
                        ]
                    })
                    .collect();
                write_csv_rows(
                    &["check", "passed", "worst", "tolerance"],
                    &body,
                    cfg.output_path().as_deref(),
                )?;
            }
        }
    }
    Ok(report)
}

/// Runs one command and returns the process exit code.
pub fn run(cfg: &RunConfig) -> Result<i32> {
    match cfg.command {
        Command::Table1 => cmd_table1(cfg)?,
        Command::Table2 => cmd_table2(cfg)?,
        Command::Gate => cmd_gate(cfg)?,
        Command::Trajectory => cmd_trajectory(cfg)?,
        Command::Verify => {
            let report = cmd_verify(cfg)?;
            if !report.all_passed() {
                for c in report.failures() {
                    eprintln!("failed: {}", c.name);
                }
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Exit code for an error: 2 for bad parameters, 3 for I/O and serialization.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_domain_error() {
        EXIT_DOMAIN
    } else {
        EXIT_IO
    }
}

/// Entry point shared by the binary: parse, run, report.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_DOMAIN } else { EXIT_OK };
        }
    };
    match run(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
