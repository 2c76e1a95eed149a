//! Canned figure recipes bundled with the binary.

use pondera_core::params::load_config_value;
use pondera_core::sweeps::{AngleObjective, SweepAxis};
use pondera_core::PhysicalConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Figure;
use crate::run::Job;

const FIG2: &str = include_str!("../configs/fig2.json");
const FIG3: &str = include_str!("../configs/fig3.json");
const FIG4: &str = include_str!("../configs/fig4.json");
const FIG5: &str = include_str!("../configs/fig5.json");
const FIG6: &str = include_str!("../configs/fig6.json");
const FIG7: &str = include_str!("../configs/fig7.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxLogNegativity,
    MinDeltaDiff,
}

impl From<Objective> for AngleObjective {
    fn from(o: Objective) -> Self {
        match o {
            Objective::MaxLogNegativity => AngleObjective::MaxLogNegativity,
            Objective::MinDeltaDiff => AngleObjective::MinDeltaDiff,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RecipeSweep {
    Angles {
        count: usize,
        period: f64,
    },
    NoiseRatio {
        count: usize,
        period: f64,
    },
    Compare {
        mu: [f64; 2],
        count: usize,
    },
    Frequency {
        omega: [f64; 2],
        count: usize,
        log: bool,
        #[serde(default)]
        angle_objective: Option<Objective>,
    },
    Strength {
        mu: [f64; 2],
        count: usize,
        #[serde(default)]
        angle_objective: Option<Objective>,
        #[serde(default)]
        optimize_at_mu: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub figure: String,
    pub title: String,
    pub config: Value,
    pub sweep: RecipeSweep,
    #[serde(default)]
    pub mc_samples: usize,
    pub plots: Vec<String>,
}

impl Recipe {
    pub fn bundled(figure: Figure) -> Self {
        let text = match figure {
            Figure::Fig2 => FIG2,
            Figure::Fig3 => FIG3,
            Figure::Fig4 => FIG4,
            Figure::Fig5 => FIG5,
            Figure::Fig6 => FIG6,
            Figure::Fig7 => FIG7,
        };
        serde_json::from_str(text).expect("bundled recipe parses")
    }

    pub fn physical_config(&self) -> pondera_core::Result<PhysicalConfig> {
        load_config_value(self.config.clone(), false)
    }

    pub fn job(&self) -> pondera_core::Result<Job> {
        Ok(match &self.sweep {
            RecipeSweep::Angles { count, period } | RecipeSweep::NoiseRatio { count, period } => Job::Angles {
                theta1: SweepAxis::periodic("theta1", *period, *count)?,
                theta2: SweepAxis::periodic("theta2", *period, *count)?,
                noise_ratio: matches!(self.sweep, RecipeSweep::NoiseRatio { .. }),
            },
            RecipeSweep::Compare { mu, count } => Job::Compare {
                mu: SweepAxis::linspace("mu", "W^-1/2", mu[0], mu[1], *count)?,
            },
            RecipeSweep::Frequency {
                omega,
                count,
                log,
                angle_objective,
            } => {
                let axis = if *log {
                    SweepAxis::logspace("omega", "rad/s", omega[0], omega[1], *count)?
                } else {
                    SweepAxis::linspace("omega", "rad/s", omega[0], omega[1], *count)?
                };
                Job::Frequency {
                    omega: axis,
                    optimize: angle_objective.map(Into::into),
                }
            }
            RecipeSweep::Strength {
                mu,
                count,
                angle_objective,
                optimize_at_mu,
            } => Job::Strength {
                mu: SweepAxis::linspace("mu", "W^-1/2", mu[0], mu[1], *count)?,
                angles: (0.0, 0.0),
                optimize: angle_objective.map(|o| (o.into(), optimize_at_mu.unwrap_or(mu[1]))),
            },
        })
    }
}
