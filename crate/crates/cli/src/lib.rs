//! Command-line driver for `pondera-core`: config loading, sweep dispatch,
//! CSV/SVG output and figure recipes.

pub mod args;
pub mod output;
pub mod plot;
pub mod recipes;
pub mod run;

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use clap::Parser;
use pondera_core::params::{apply_override, load_config_value, parse_document, REFERENCE_DOCUMENT};
use pondera_core::sweeps::SweepAxis;
use pondera_core::{Engine, PhysicalConfig};
use serde_json::{json, Value};

use args::{AxisSpec, Cli, Command, ConfigArgs, RunArgs, SweepKind};
use recipes::Recipe;
use run::{EmitContext, Job, RunSettings};

pub const SEED_ENV: &str = "PONDERA_SEED";

/// Why a command stopped, mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or config (exit 2).
    Usage(String),
    /// Nothing stable to report (exit 3).
    Unstable(String),
    /// Filesystem trouble (exit 1).
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Unstable(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Unstable(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<pondera_core::Error> for Failure {
    fn from(e: pondera_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Parses `argv` and runs it, returning the process exit code.
pub fn main_with(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli, &argv) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

pub fn run(cli: Cli, argv: &[String]) -> Result<(), Failure> {
    match cli.command {
        Command::Point(a) => cmd_point(&a.config, a.out.as_deref(), argv),
        Command::Sweep { kind } => cmd_sweep(kind, argv),
        Command::Reproduce(a) => cmd_reproduce(&Recipe::bundled(a.figure), &a.run, argv),
    }
}

/// Loads the config (bundled reference point by default) and applies overrides,
/// then `--r` and `--temp`, before validation.
pub fn build_config(args: &ConfigArgs) -> Result<PhysicalConfig, Failure> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?,
        None => REFERENCE_DOCUMENT.to_string(),
    };
    let mut doc = parse_document(&text)?;
    for o in &args.overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(r) = args.r {
        let squeezers = doc
            .get_mut("squeezers")
            .and_then(Value::as_array_mut)
            .ok_or_else(|| Failure::Usage("--r needs a `squeezers` array in the config".into()))?;
        for s in squeezers {
            let obj = s
                .as_object_mut()
                .ok_or_else(|| Failure::Usage("squeezer entries must be objects".into()))?;
            obj.remove("mu");
            obj.remove("pump_power_W");
            obj.insert("r".into(), json!(r));
        }
    }
    if let Some(t) = args.temp {
        let obj = doc
            .as_object_mut()
            .ok_or_else(|| Failure::Usage("config must be a JSON object".into()))?;
        obj.insert("temperature_K".into(), json!(t));
    }
    Ok(load_config_value(doc, args.lenient)?)
}

/// `--seed`, else `$PONDERA_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} is not an unsigned integer: `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn resolve_settings(run: &RunArgs, mc_samples: usize) -> Result<RunSettings, Failure> {
    let threads = match run.threads {
        Some(0) => return Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    Ok(RunSettings {
        threads,
        seed: resolve_seed(run.seed)?,
        mc_samples,
    })
}

fn linear_axis(name: &str, unit: &str, spec: AxisSpec) -> Result<SweepAxis, Failure> {
    Ok(SweepAxis::linspace(name, unit, spec.start, spec.stop, spec.count)?)
}

fn angle_axis(name: &str, spec: Option<AxisSpec>) -> Result<SweepAxis, Failure> {
    match spec {
        Some(s) => linear_axis(name, "rad", s),
        None => Ok(SweepAxis::periodic(name, 2.0 * std::f64::consts::PI, 32)?),
    }
}

fn angle_job(a: args::AngleArgs, noise_ratio: bool) -> Result<(ConfigArgs, RunArgs, Job), Failure> {
    let job = Job::Angles {
        theta1: angle_axis("theta1", a.theta1)?,
        theta2: angle_axis("theta2", a.theta2)?,
        noise_ratio,
    };
    Ok((a.config, a.run, job))
}

fn cmd_point(cfg_args: &ConfigArgs, out: Option<&Path>, argv: &[String]) -> Result<(), Failure> {
    let started = run::started_now();
    let cfg = build_config(cfg_args)?;
    let engine = Engine::new(cfg.clone())?;
    let record = engine.point();
    let text = serde_json::to_string_pretty(&record).expect("record serializes");
    println!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("record.json"), text + "\n")?;
        output::write_config_snapshot(&dir.join("config.json"), &cfg)?;
        let omega_source = serde_json::to_value(engine.omega_source())
            .ok()
            .and_then(|v| v.as_str().map(String::from));
        let manifest = output::RunManifest {
            command_line: argv.to_vec(),
            config_sha256: output::config_hash(&cfg),
            engine_version: pondera_core::ENGINE_VERSION.into(),
            csv_schema_version: output::CSV_SCHEMA_VERSION,
            started_unix_s: started.0,
            wall_clock_s: started.1.elapsed().as_secs_f64(),
            seed: 0,
            threads: 1,
            mc_samples: 0,
            analysis_omega: Some(engine.omega()),
            omega_source,
            output_loss: engine.rates().output_loss,
            outputs: vec!["record.json".into(), "config.json".into(), "manifest.json".into()],
            plots: Vec::new(),
            recipe: None,
        };
        manifest.write(dir)?;
    }
    if !record.stable {
        return Err(Failure::Unstable("configuration is unstable; metrics are NaN".into()));
    }
    Ok(())
}

fn cmd_sweep(kind: SweepKind, argv: &[String]) -> Result<(), Failure> {
    let (cfg_args, run_args, job) = match kind {
        SweepKind::Angles(a) => angle_job(a, false)?,
        SweepKind::NoiseRatio(a) => angle_job(a, true)?,
        SweepKind::Strength(a) => {
            let job = Job::Strength {
                mu: linear_axis("mu", "W^-1/2", a.mu)?,
                angles: (a.angle1, a.angle2),
                optimize: None,
            };
            (a.config, a.run, job)
        }
        SweepKind::Frequency(a) => {
            let s = a.omega;
            let omega = if a.linear {
                linear_axis("omega", "rad/s", s)?
            } else {
                SweepAxis::logspace("omega", "rad/s", s.start, s.stop, s.count)?
            };
            (a.config, a.run, Job::Frequency { omega, optimize: None })
        }
        SweepKind::Compare(a) => {
            let job = Job::Compare {
                mu: linear_axis("mu", "W^-1/2", a.mu)?,
            };
            (a.config, a.run, job)
        }
    };
    let started = run::started_now();
    let cfg = build_config(&cfg_args)?;
    let settings = resolve_settings(&run_args, run_args.mc_samples)?;
    let out = run::execute(&job, cfg.clone(), settings)?;
    let title = format!("sweep {}", job.kind());
    run::emit(
        &run_args.out,
        &out,
        EmitContext {
            command_line: argv,
            config: &cfg,
            settings,
            plots: run_args.plot.then(|| job.default_plots()),
            title: &title,
            recipe: None,
            started,
        },
    )?;
    if run::all_unstable(&out) {
        return Err(Failure::Unstable("every grid point is unstable".into()));
    }
    Ok(())
}

/// Runs a bundled recipe. Plots are always drawn; `--mc-samples` overrides
/// the recipe's sample count when nonzero.
pub fn cmd_reproduce(recipe: &Recipe, run_args: &RunArgs, argv: &[String]) -> Result<(), Failure> {
    let started = run::started_now();
    let cfg = recipe.physical_config()?;
    let job = recipe.job()?;
    let mc = if run_args.mc_samples > 0 {
        run_args.mc_samples
    } else {
        recipe.mc_samples
    };
    let settings = resolve_settings(run_args, mc)?;
    let out = run::execute(&job, cfg.clone(), settings)?;
    run::emit(
        &run_args.out,
        &out,
        EmitContext {
            command_line: argv,
            config: &cfg,
            settings,
            plots: Some(recipe.plots.clone()),
            title: &recipe.title,
            recipe: Some(serde_json::to_value(recipe).expect("recipe serializes")),
            started,
        },
    )?;
    if run::all_unstable(&out) {
        return Err(Failure::Unstable("every grid point is unstable".into()));
    }
    Ok(())
}
