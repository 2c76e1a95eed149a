//! Sweep execution and output emission shared by `sweep` and `reproduce`.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use pondera_core::sweeps::{
    compare_conventional, noise_ratio_map, optimize_angles, strength_squeezers, sweep_angles, sweep_frequency,
    sweep_strength, AngleObjective, SweepAxis,
};
use pondera_core::{Engine, MetricGrid, PhysicalConfig, ENGINE_VERSION};
use serde_json::{json, Map, Value};

use crate::output::{config_hash, write_config_snapshot, write_grid_csv, PlotInfo, RunManifest, CSV_SCHEMA_VERSION};
use crate::plot;
use crate::Failure;

/// Plot-only derived metric: Duan value minus its unsqueezed baseline.
pub const DUAN_EXCESS: &str = "duan_excess";

/// A fully specified sweep.
#[derive(Debug, Clone)]
pub enum Job {
    Angles {
        theta1: SweepAxis,
        theta2: SweepAxis,
        noise_ratio: bool,
    },
    Strength {
        mu: SweepAxis,
        angles: (f64, f64),
        /// Re-optimize the angles at the given μ before sweeping.
        optimize: Option<(AngleObjective, f64)>,
    },
    Frequency {
        omega: SweepAxis,
        optimize: Option<AngleObjective>,
    },
    Compare {
        mu: SweepAxis,
    },
}

impl Job {
    pub fn kind(&self) -> &'static str {
        match self {
            Job::Angles { noise_ratio: false, .. } => "angles",
            Job::Angles { noise_ratio: true, .. } => "noise-ratio",
            Job::Strength { .. } => "strength",
            Job::Frequency { .. } => "frequency",
            Job::Compare { .. } => "compare",
        }
    }

    pub fn default_plots(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Job::Angles { noise_ratio: false, .. } => &["e_n", "duan", "genoni_delta", "kappa_literal"],
            Job::Angles { noise_ratio: true, .. } => &["noise_ratio", "quantum_noise_trace", "thermal_noise_trace"],
            Job::Strength { .. } => &["e_n", "duan", "delta_diff", "kappa_literal"],
            Job::Frequency { .. } => &["delta_diff", DUAN_EXCESS, "e_n"],
            Job::Compare { .. } => &["e_n", "duan"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunSettings {
    pub threads: usize,
    pub seed: u64,
    pub mc_samples: usize,
}

/// Grids produced by a job, with their output file names.
#[derive(Debug)]
pub struct JobOutput {
    pub grids: Vec<(String, MetricGrid)>,
    /// Choices made while running, such as optimized angles.
    pub details: Map<String, Value>,
}

pub fn execute(job: &Job, cfg: PhysicalConfig, settings: RunSettings) -> pondera_core::Result<JobOutput> {
    let engine = Engine::new(cfg)?
        .with_monte_carlo(settings.mc_samples, settings.seed)
        .with_threads(Some(settings.threads));
    let mut details = Map::new();
    details.insert("kind".into(), job.kind().into());
    let single = |g: MetricGrid| vec![("grid.csv".to_string(), g)];
    let grids = match job {
        Job::Angles {
            theta1,
            theta2,
            noise_ratio,
        } => {
            let g = if *noise_ratio {
                noise_ratio_map(&engine, theta1, theta2)?
            } else {
                sweep_angles(&engine, theta1, theta2)?
            };
            single(g)
        }
        Job::Strength { mu, angles, optimize } => {
            let angles = match optimize {
                Some((objective, at_mu)) => {
                    let template = strength_squeezers(engine.config(), *at_mu, (0.0, 0.0));
                    details.insert("optimized_at_mu".into(), json!(at_mu));
                    optimize_angles(&engine, &template, *objective)
                }
                None => *angles,
            };
            details.insert("angles".into(), json!([angles.0, angles.1]));
            single(sweep_strength(&engine, mu, angles)?)
        }
        Job::Frequency { omega, optimize } => match optimize {
            Some(objective) => {
                let (a, b) = optimize_angles(&engine, &engine.config().squeezers, *objective);
                details.insert("angles".into(), json!([a, b]));
                details.insert("angles_chosen_at_omega".into(), json!(engine.omega()));
                let mut cfg = engine.config().clone();
                cfg.squeezers[0].angle = a;
                cfg.squeezers[1].angle = b;
                let tuned = Engine::with_omega(cfg, engine.omega())?
                    .with_monte_carlo(settings.mc_samples, settings.seed)
                    .with_threads(Some(settings.threads));
                single(sweep_frequency(&tuned, omega)?)
            }
            None => single(sweep_frequency(&engine, omega)?),
        },
        Job::Compare { mu } => {
            let c = compare_conventional(&engine, mu)?;
            vec![
                ("grid_conventional.csv".into(), c.conventional),
                ("grid_omc.csv".into(), c.omc),
                ("grid_omc_coupled.csv".into(), c.omc_coupled),
            ]
        }
    };
    Ok(JobOutput { grids, details })
}

/// Values of `metric` over a grid, including plot-only derived metrics.
pub fn metric_series(grid: &MetricGrid, metric: &str) -> Option<Vec<f64>> {
    if metric == DUAN_EXCESS {
        return Some(grid.records.iter().map(|r| r.duan - r.baseline_duan).collect());
    }
    grid.records.iter().map(|r| r.metric(metric)).collect()
}

fn axis_label(axis: &SweepAxis) -> String {
    if axis.unit.is_empty() {
        axis.name.clone()
    } else {
        format!("{} ({})", axis.name, axis.unit)
    }
}

fn draw_plots(dir: &Path, out: &JobOutput, metrics: &[String], title: &str) -> Result<Vec<PlotInfo>, Failure> {
    let mut infos = Vec::new();
    let first = &out.grids[0].1;
    for metric in metrics {
        let file = format!("{metric}.svg");
        let plot_title = format!("{title}: {metric}");
        let (svg, info) = if first.meta.axes.len() == 2 {
            let Some(values) = metric_series(first, metric) else {
                return Err(Failure::Usage(format!("unknown metric `{metric}`")));
            };
            let (a, b) = (&first.meta.axes[0], &first.meta.axes[1]);
            plot::heatmap(&file, &plot_title, metric, b.values(), a.values(), &axis_label(b), &axis_label(a), &values)
        } else {
            let axis = &first.meta.axes[0];
            let mut series = Vec::new();
            for (_, g) in &out.grids {
                let values = metric_series(g, metric).ok_or_else(|| Failure::Usage(format!("unknown metric `{metric}`")))?;
                series.push((g.meta.label.clone(), values));
            }
            let log_x = axis.name == "omega";
            plot::line_plot(&file, &plot_title, metric, axis.values(), &axis_label(axis), log_x, &series)
        };
        fs::write(dir.join(&file), svg)?;
        infos.push(info);
    }
    Ok(infos)
}

/// Everything `emit` needs beyond the job output.
pub struct EmitContext<'a> {
    pub command_line: &'a [String],
    pub config: &'a PhysicalConfig,
    pub settings: RunSettings,
    pub plots: Option<Vec<String>>,
    pub title: &'a str,
    pub recipe: Option<Value>,
    pub started: (u64, Instant),
}

pub fn started_now() -> (u64, Instant) {
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    (unix, Instant::now())
}

/// Writes CSVs, the config snapshot, plots and the manifest into `dir`.
pub fn emit(dir: &Path, out: &JobOutput, ctx: EmitContext<'_>) -> Result<RunManifest, Failure> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for (name, grid) in &out.grids {
        write_grid_csv(&dir.join(name), grid)?;
        outputs.push(name.clone());
    }
    write_config_snapshot(&dir.join("config.json"), ctx.config)?;
    outputs.push("config.json".into());
    let plots = match &ctx.plots {
        Some(metrics) => draw_plots(dir, out, metrics, ctx.title)?,
        None => Vec::new(),
    };
    outputs.extend(plots.iter().map(|p| p.file.clone()));
    outputs.push("manifest.json".into());

    let meta = &out.grids[0].1.meta;
    let mut recipe = ctx.recipe.unwrap_or_else(|| Value::Object(Map::new()));
    if let Value::Object(map) = &mut recipe {
        map.extend(out.details.clone());
    }
    let manifest = RunManifest {
        command_line: ctx.command_line.to_vec(),
        config_sha256: config_hash(ctx.config),
        engine_version: ENGINE_VERSION.into(),
        csv_schema_version: CSV_SCHEMA_VERSION,
        started_unix_s: ctx.started.0,
        wall_clock_s: ctx.started.1.elapsed().as_secs_f64(),
        seed: ctx.settings.seed,
        threads: ctx.settings.threads,
        mc_samples: ctx.settings.mc_samples,
        analysis_omega: meta.analysis_omega,
        omega_source: serde_json::to_value(meta.omega_source)
            .ok()
            .and_then(|v| v.as_str().map(String::from)),
        output_loss: meta.output_loss,
        outputs,
        plots,
        recipe: Some(recipe),
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// True when every point of every cavity grid is unstable.
pub fn all_unstable(out: &JobOutput) -> bool {
    out.grids
        .iter()
        .filter(|(_, g)| g.meta.label != "conventional")
        .all(|(_, g)| g.all_unstable())
}
