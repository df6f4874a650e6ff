//! Command-line surface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{load_config, Config};
use crate::error::Error;
use crate::pipeline::{
    build_plan, compile_maneuver, config_for, run_demo, simulate_maneuver, validate_maneuver, Maneuver,
    ManeuverRequest, SimulationOutcome,
};
use crate::planners::AmplitudeMode;
use crate::types::PayloadVariant;

#[derive(Debug, Parser)]
#[command(
    name = "cdpr",
    version,
    about = "Three-cable suspended robot: plan, simulate, compile stepper pulses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the sampled reference trajectory.
    Plan(CommonArgs),
    /// Simulate the maneuver through the cable dynamics.
    Simulate(CommonArgs),
    /// Compile the maneuver into per-motor pulse schedules.
    Compile(CommonArgs),
    /// Check speed, pulse-rate and torque limits (all maneuvers if none given).
    Validate(CommonArgs),
    /// Run all four maneuvers and compare the laws.
    Demo(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ManeuverArg {
    VerticalConstant,
    VerticalSinusoidal,
    HorizontalConstant,
    HorizontalPendulum,
}

impl From<ManeuverArg> for Maneuver {
    fn from(m: ManeuverArg) -> Self {
        match m {
            ManeuverArg::VerticalConstant => Maneuver::VerticalConstant,
            ManeuverArg::VerticalSinusoidal => Maneuver::VerticalSinusoidal,
            ManeuverArg::HorizontalConstant => Maneuver::HorizontalConstant,
            ManeuverArg::HorizontalPendulum => Maneuver::HorizontalPendulum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayloadArg {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PendulumModeArg {
    Fixed,
    Solved,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML rig/simulation configuration; defaults to the built-in rig.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub maneuver: Option<ManeuverArg>,
    /// Travel in metres.
    #[arg(long, value_name = "M")]
    pub distance: Option<f64>,
    /// Maneuver time in seconds.
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    #[arg(long, value_enum)]
    pub payload: Option<PayloadArg>,
    #[arg(long, value_enum, default_value = "solved")]
    pub pendulum_mode: PendulumModeArg,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

/// Failure class, mapped to the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureClass {
    Usage,
    Config,
    Workspace,
    Limits,
    Io,
}

impl FailureClass {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureClass::Usage => 64,
            FailureClass::Config => 2,
            FailureClass::Workspace => 3,
            FailureClass::Limits => 4,
            FailureClass::Io => 5,
        }
    }

    fn label(self) -> &'static str {
        match self {
            FailureClass::Usage => "usage",
            FailureClass::Config => "config",
            FailureClass::Workspace => "workspace",
            FailureClass::Limits => "limits",
            FailureClass::Io => "io",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub class: FailureClass,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // single line, whatever the message contains
        write!(f, "error[{}]: {}", self.class.label(), self.message.replace('\n', "; "))
    }
}

fn classify(err: &Error) -> FailureClass {
    match err.root() {
        Error::Parse(_) | Error::Validation(_) => FailureClass::Config,
        Error::Workspace(_)
        | Error::DegenerateCable { .. }
        | Error::InfeasibleLengths(_)
        | Error::NoConvergence(_)
        | Error::Singular => FailureClass::Workspace,
        Error::InvalidArgument(_) => FailureClass::Usage,
        Error::Io { .. } => FailureClass::Io,
        Error::AtTime { .. } => unreachable!("root strips timestamps"),
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let class = classify(&err);
        CliError {
            class,
            message: err.to_string(),
        }
    }
}

fn config_error(err: Error) -> CliError {
    let class = match err {
        Error::Io { .. } | Error::Parse(_) | Error::Validation(_) => FailureClass::Config,
        ref other => classify(other),
    };
    CliError {
        class,
        message: err.to_string(),
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        class: FailureClass::Usage,
        message: message.into(),
    }
}

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub report: String,
}

struct Context {
    base: Option<Config>,
    args: CommonArgs,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let base = match &args.config {
            Some(path) => Some(load_config(path).map_err(config_error)?),
            None => None,
        };
        for (name, v) in [("distance", args.distance), ("duration", args.duration)] {
            if let Some(x) = v {
                if !x.is_finite() {
                    return Err(usage(format!("--{name} must be finite")));
                }
            }
        }
        if let Some(d) = args.duration {
            if d <= 0.0 {
                return Err(usage("--duration must be positive"));
            }
        }
        Ok(Self {
            base,
            args: args.clone(),
        })
    }

    fn payload(&self) -> Option<PayloadVariant> {
        self.args.payload.map(|p| match p {
            PayloadArg::A => PayloadVariant::A,
            PayloadArg::B => PayloadVariant::B,
        })
    }

    fn request(&self, maneuver: Maneuver) -> ManeuverRequest {
        let mut req = ManeuverRequest::new(maneuver);
        if let Some(d) = self.args.distance {
            req.distance = d;
        }
        if let Some(t) = self.args.duration {
            req.duration = t;
        }
        req.pendulum_mode = match self.args.pendulum_mode {
            PendulumModeArg::Fixed => AmplitudeMode::Fixed,
            PendulumModeArg::Solved => AmplitudeMode::Solved,
        };
        req
    }

    fn config(&self, maneuver: Maneuver) -> Config {
        config_for(self.base.as_ref(), maneuver, self.payload())
    }

    fn required_maneuver(&self, sub: &str) -> Result<Maneuver, CliError> {
        self.args
            .maneuver
            .map(Maneuver::from)
            .ok_or_else(|| usage(format!("{sub} requires --maneuver")))
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        let dir = self.args.out.as_path();
        fs::create_dir_all(dir).map_err(|source| {
            CliError::from(Error::Io {
                path: dir.to_path_buf(),
                source,
            })
        })?;
        Ok(dir)
    }
}

fn write_text(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|source| {
        CliError::from(Error::Io {
            path: path.clone(),
            source,
        })
    })?;
    files.push(path);
    Ok(())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

pub fn run(cli: &Cli) -> Result<RunOutput, CliError> {
    match &cli.command {
        Command::Plan(args) => {
            let ctx = Context::new(args)?;
            let m = ctx.required_maneuver("plan")?;
            let plan = build_plan(&ctx.request(m), &ctx.config(m))?;
            let dir = ctx.out_dir()?;
            let path = dir.join("plan.csv");
            plan.save_csv(&path)?;
            Ok(RunOutput {
                report: format!("{m}: {} samples over {} s\n", plan.len(), plan.duration()),
                files: vec![path],
            })
        }
        Command::Simulate(args) => {
            let ctx = Context::new(args)?;
            let m = ctx.required_maneuver("simulate")?;
            let outcome = simulate_maneuver(&ctx.request(m), &ctx.config(m))?;
            let dir = ctx.out_dir()?;
            let mut files = Vec::new();
            let trace_path = dir.join("trace.csv");
            outcome.trace.save_csv(&trace_path)?;
            files.push(trace_path);
            let plan_path = dir.join("plan.csv");
            outcome.plan.save_csv(&plan_path)?;
            files.push(plan_path);
            let report = outcome.summary.to_string();
            write_text(dir.join("summary.txt"), &report, &mut files)?;
            write_text(dir.join("summary.json"), &json(&outcome.summary), &mut files)?;
            Ok(RunOutput { files, report })
        }
        Command::Compile(args) => {
            let ctx = Context::new(args)?;
            let m = ctx.required_maneuver("compile")?;
            let cfg = ctx.config(m);
            let compiled = compile_maneuver(&ctx.request(m), &cfg)?;
            let dir = ctx.out_dir()?;
            compiled.schedule.save_csv_dir(dir, cfg.rig.geometry.drum_radius)?;
            let files = (1..=3).map(|i| dir.join(format!("pulses_motor{i}.csv"))).collect();
            let steps: Vec<i64> = (0..3).map(|i| compiled.schedule.total_steps(i)).collect();
            Ok(RunOutput {
                files,
                report: format!(
                    "{m}: ppr {}, net steps per motor {:?}, peak pulse rate {:.1} Hz\n",
                    compiled.schedule.ppr,
                    steps,
                    compiled.schedule.peak_frequency()
                ),
            })
        }
        Command::Validate(args) => {
            let ctx = Context::new(args)?;
            let maneuvers: Vec<Maneuver> = match ctx.args.maneuver {
                Some(m) => vec![m.into()],
                None => Maneuver::ALL.to_vec(),
            };
            let dir = ctx.out_dir()?.to_path_buf();
            let mut files = Vec::new();
            let mut text = String::new();
            let mut reports = Vec::new();
            let mut failing = Vec::new();
            for m in maneuvers {
                let (report, _, _) = validate_maneuver(&ctx.request(m), &ctx.config(m))?;
                text.push_str(&format!("== {m}\n{report}"));
                if !report.ok() {
                    failing.push(m.name());
                }
                reports.push(serde_json::json!({ "maneuver": m, "ok": report.ok(), "report": report }));
            }
            write_text(dir.join("limits_report.txt"), &text, &mut files)?;
            write_text(dir.join("limits_report.json"), &json(&reports), &mut files)?;
            if failing.is_empty() {
                Ok(RunOutput { files, report: text })
            } else {
                Err(CliError {
                    class: FailureClass::Limits,
                    message: format!(
                        "motor limits exceeded for {} (see {})",
                        failing.join(", "),
                        dir.join("limits_report.txt").display()
                    ),
                })
            }
        }
        Command::Demo(args) => {
            let ctx = Context::new(args)?;
            let outcomes = match (&ctx.base, ctx.payload()) {
                (None, None) => run_demo(None)?,
                _ => Maneuver::ALL
                    .into_iter()
                    .map(|m| simulate_maneuver(&ctx.request(m), &ctx.config(m)))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let dir = ctx.out_dir()?;
            let mut files = Vec::new();
            for o in &outcomes {
                let path = dir.join(format!("trace_{}.csv", o.summary.maneuver));
                o.trace.save_csv(&path)?;
                files.push(path);
            }
            let table = demo_table(&outcomes);
            write_text(dir.join("demo_table.csv"), &table.csv, &mut files)?;
            Ok(RunOutput {
                files,
                report: table.text,
            })
        }
    }
}

struct DemoTable {
    csv: String,
    text: String,
}

fn demo_table(outcomes: &[SimulationOutcome]) -> DemoTable {
    let mut csv = String::from("maneuver,law,payload,residual_oscillation_m,final_position_error_m,peak_tension_n\n");
    let mut text = format!(
        "{:<22} {:<14} {:>7} {:>16} {:>16} {:>12}\n",
        "maneuver", "law", "payload", "residual [m]", "final err [m]", "peak T [N]"
    );
    for o in outcomes {
        let s = &o.summary;
        let law = if s.maneuver.is_smooth() {
            "smooth"
        } else {
            "discontinuous"
        };
        csv.push_str(&format!(
            "{},{},{},{:.9e},{:.9e},{:.9e}\n",
            s.maneuver, law, s.payload, s.residual_oscillation, s.final_position_error, s.peak_tension
        ));
        text.push_str(&format!(
            "{:<22} {:<14} {:>7} {:>16.6e} {:>16.6e} {:>12.3}\n",
            s.maneuver.name(),
            law,
            s.payload.to_string(),
            s.residual_oscillation,
            s.final_position_error,
            s.peak_tension
        ));
    }
    let residual = |m: Maneuver| {
        outcomes
            .iter()
            .find(|o| o.summary.maneuver == m)
            .map(|o| o.summary.residual_oscillation)
    };
    for (rough, smooth) in [
        (Maneuver::VerticalConstant, Maneuver::VerticalSinusoidal),
        (Maneuver::HorizontalConstant, Maneuver::HorizontalPendulum),
    ] {
        if let (Some(r), Some(s)) = (residual(rough), residual(smooth)) {
            text.push_str(&format!(
                "{smooth} vs {rough}: residual ratio {:.1}x ({})\n",
                r / s,
                if s < r {
                    "smooth law wins"
                } else {
                    "smooth law does NOT win"
                }
            ));
        }
    }
    DemoTable { csv, text }
}
