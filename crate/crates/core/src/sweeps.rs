//! Parameter sweeps over squeezing angle, strength and sideband frequency.
//!
//! Every grid point is a pure function of the engine and its coordinates,
//! so points are evaluated in parallel and collected in index order.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    apply_loss, beamsplitter_mix, build_coupling_matrix, decompose_noise_contributions, input_noise_parts,
    output_covariance, CouplingMatrix, CovMatrix,
};
use crate::entanglement::{self, log_negativity};
use crate::error::{Error, Result};
use crate::gaussianity::{
    self, bch_angle_coefficient, fourth_cumulant, kappa_magnitude, point_seed, CumulantEstimator, CumulantSource,
};
use crate::params::{
    derive_rates, squeeze_strength, ConfigDocument, DerivedRates, PhysicalConfig, SqueezeStrength, SqueezerSetting,
};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Input-coupling efficiency of the lossy arm in [`compare_conventional`].
pub const POOR_COUPLING_EFFICIENCY: f64 = 50e-6;

/// Points in the analysis-frequency pre-scan.
const PRESCAN_POINTS: usize = 121;

/// One sweep coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub unit: String,
    values: Vec<f64>,
}

impl SweepAxis {
    /// Values must be finite, non-empty and strictly monotone.
    pub fn new(name: impl Into<String>, unit: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::Argument(format!("axis `{name}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("axis `{name}` has non-finite values")));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Argument(format!("axis `{name}` is not strictly monotone")));
        }
        Ok(Self {
            name,
            unit: unit.into(),
            values,
        })
    }

    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(name: &str, unit: &str, start: f64, stop: f64, count: usize) -> Result<Self> {
        let values = match count {
            0 => Vec::new(),
            1 => vec![start],
            n => (0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(name, unit, values)
    }

    /// `count` values on `[0, period)`, excluding the endpoint.
    ///
    /// Values are snapped to the float spacing at `period`, and for even
    /// counts the second half is the first half plus `period / 2`. That sum
    /// is then exact, so points half a period apart reduce to the same
    /// angle bit for bit.
    pub fn periodic(name: &str, period: f64, count: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Argument(format!("axis `{name}` needs a positive period")));
        }
        let q = period.next_up() - period;
        let mut values: Vec<f64> = (0..count)
            .map(|i| (period * i as f64 / count as f64 / q).round() * q)
            .collect();
        if count % 2 == 0 {
            let half = count / 2;
            for i in half..count {
                values[i] = values[i - half] + period / 2.0;
            }
        }
        Self::new(name, "rad", values)
    }

    /// `count` log-spaced values from `start` to `stop` inclusive.
    pub fn logspace(name: &str, unit: &str, start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && stop > 0.0) {
            return Err(Error::Argument(format!("log axis `{name}` needs positive bounds")));
        }
        let lin = Self::linspace(name, unit, start.ln(), stop.ln(), count)?;
        Self::new(name, unit, lin.values.iter().map(|v| v.exp()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// All metrics at one grid point. Unstable or failed points carry NaN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRecord {
    pub coords: Vec<f64>,
    pub stable: bool,
    pub r1: f64,
    pub r2: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Sideband frequency (rad/s).
    pub omega: f64,
    pub e_n: f64,
    /// Duan value with optimized gain.
    pub duan: f64,
    pub duan_unit_gain: f64,
    pub genoni_delta: f64,
    pub delta_diff: f64,
    pub kappa_literal: f64,
    pub kappa_true: f64,
    /// Literal δ_κ minus its unsqueezed value.
    pub kappa_diff: f64,
    pub quantum_noise_trace: f64,
    pub thermal_noise_trace: f64,
    /// Quantum over thermal trace; `inf` when the thermal trace is zero.
    pub noise_ratio: f64,
    pub bch_coefficient: f64,
    pub baseline_e_n: f64,
    pub baseline_duan: f64,
    /// Literal δ_κ from homodyne sampling, when requested.
    pub kappa_literal_mc: Option<f64>,
}

impl MetricRecord {
    /// Metric columns after the axis columns, in output order.
    pub const COLUMNS: [&'static str; 20] = [
        "stable",
        "r1",
        "r2",
        "theta1",
        "theta2",
        "omega",
        "e_n",
        "duan",
        "duan_unit_gain",
        "genoni_delta",
        "delta_diff",
        "kappa_literal",
        "kappa_true",
        "kappa_diff",
        "quantum_noise_trace",
        "thermal_noise_trace",
        "noise_ratio",
        "bch_coefficient",
        "baseline_e_n",
        "baseline_duan",
    ];
    pub const MC_COLUMN: &'static str = "kappa_literal_mc";

    fn empty(coords: Vec<f64>, settings: &[SqueezerSetting], omega: f64) -> Self {
        let nan = f64::NAN;
        Self {
            coords,
            stable: false,
            r1: settings.first().map_or(nan, squeeze_strength),
            r2: settings.get(1).map_or(nan, squeeze_strength),
            theta1: settings.first().map_or(nan, |s| s.angle),
            theta2: settings.get(1).map_or(nan, |s| s.angle),
            omega,
            e_n: nan,
            duan: nan,
            duan_unit_gain: nan,
            genoni_delta: nan,
            delta_diff: nan,
            kappa_literal: nan,
            kappa_true: nan,
            kappa_diff: nan,
            quantum_noise_trace: nan,
            thermal_noise_trace: nan,
            noise_ratio: nan,
            bch_coefficient: nan,
            baseline_e_n: nan,
            baseline_duan: nan,
            kappa_literal_mc: None,
        }
    }

    /// Values in [`COLUMNS`](Self::COLUMNS) order, `stable` as 0/1.
    pub fn metric_values(&self) -> Vec<f64> {
        vec![
            if self.stable { 1.0 } else { 0.0 },
            self.r1,
            self.r2,
            self.theta1,
            self.theta2,
            self.omega,
            self.e_n,
            self.duan,
            self.duan_unit_gain,
            self.genoni_delta,
            self.delta_diff,
            self.kappa_literal,
            self.kappa_true,
            self.kappa_diff,
            self.quantum_noise_trace,
            self.thermal_noise_trace,
            self.noise_ratio,
            self.bch_coefficient,
            self.baseline_e_n,
            self.baseline_duan,
        ]
    }

    /// Inverse of [`metric_values`](Self::metric_values).
    pub fn from_values(coords: Vec<f64>, values: &[f64], mc: Option<f64>) -> Result<Self> {
        if values.len() != Self::COLUMNS.len() {
            return Err(Error::Dimension(format!(
                "{} metric values, expected {}",
                values.len(),
                Self::COLUMNS.len()
            )));
        }
        let v = values;
        Ok(Self {
            coords,
            stable: v[0] != 0.0,
            r1: v[1],
            r2: v[2],
            theta1: v[3],
            theta2: v[4],
            omega: v[5],
            e_n: v[6],
            duan: v[7],
            duan_unit_gain: v[8],
            genoni_delta: v[9],
            delta_diff: v[10],
            kappa_literal: v[11],
            kappa_true: v[12],
            kappa_diff: v[13],
            quantum_noise_trace: v[14],
            thermal_noise_trace: v[15],
            noise_ratio: v[16],
            bch_coefficient: v[17],
            baseline_e_n: v[18],
            baseline_duan: v[19],
            kappa_literal_mc: mc,
        })
    }

    /// Bitwise equality, so NaN matches NaN.
    pub fn identical(&self, other: &Self) -> bool {
        let bits = |xs: &[f64]| xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        bits(&self.coords) == bits(&other.coords)
            && bits(&self.metric_values()) == bits(&other.metric_values())
            && self.kappa_literal_mc.map(f64::to_bits) == other.kappa_literal_mc.map(f64::to_bits)
    }

    /// Named metric by column name.
    pub fn metric(&self, name: &str) -> Option<f64> {
        if name == Self::MC_COLUMN {
            return self.kappa_literal_mc;
        }
        let i = Self::COLUMNS.iter().position(|c| *c == name)?;
        Some(self.metric_values()[i])
    }
}

/// Where the analysis frequency came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSource {
    Config,
    Prescan,
    /// Varied along a sweep axis.
    Axis,
    Inherited,
}

/// Serializable description of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub kind: String,
    pub label: String,
    pub axes: Vec<SweepAxis>,
    pub engine_version: String,
    /// Analysis sideband frequency (rad/s); `None` for frequency sweeps.
    pub analysis_omega: Option<f64>,
    pub omega_source: OmegaSource,
    pub output_loss: f64,
    pub seed: u64,
    pub mc_samples: usize,
    pub config: ConfigDocument,
}

#[derive(Debug, Clone)]
pub struct MetricGrid {
    pub meta: GridMetadata,
    pub records: Vec<MetricRecord>,
}

impl MetricGrid {
    pub fn new(meta: GridMetadata, records: Vec<MetricRecord>) -> Result<Self> {
        let expected: usize = meta.axes.iter().map(SweepAxis::len).product();
        if meta.axes.is_empty() || meta.axes.len() > 2 {
            return Err(Error::Dimension(format!("{} axes, expected 1 or 2", meta.axes.len())));
        }
        if records.len() != expected {
            return Err(Error::Dimension(format!("{} records for {expected} grid points", records.len())));
        }
        Ok(Self { meta, records })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.meta.axes.iter().map(SweepAxis::len).collect()
    }

    /// Record at `(i, j)`; the last axis varies fastest.
    pub fn at(&self, i: usize, j: usize) -> &MetricRecord {
        let cols = self.meta.axes.get(1).map_or(1, SweepAxis::len);
        &self.records[i * cols + j]
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.metric(name)).collect()
    }

    pub fn has_monte_carlo(&self) -> bool {
        self.records.iter().any(|r| r.kappa_literal_mc.is_some())
    }

    pub fn all_unstable(&self) -> bool {
        self.records.iter().all(|r| !r.stable)
    }

    pub fn identical(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| a.identical(b))
    }
}

/// Output state at one point, before metrics.
#[derive(Debug, Clone)]
pub struct OutputState {
    /// Output covariance after loss.
    pub covariance: CovMatrix,
    pub quantum_trace: f64,
    pub thermal_trace: f64,
}

/// Cached rates, drift matrix and analysis frequency for one config.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: PhysicalConfig,
    rates: DerivedRates,
    drift: CouplingMatrix,
    omega: f64,
    omega_source: OmegaSource,
    baseline: Option<CovMatrix>,
    mc_samples: usize,
    seed: u64,
    threads: Option<usize>,
}

impl Engine {
    /// Validates `cfg` and fixes the analysis frequency, from the config or
    /// by pre-scan.
    pub fn new(cfg: PhysicalConfig) -> Result<Self> {
        cfg.validate()?;
        let rates = derive_rates(&cfg)?;
        let drift = build_coupling_matrix(&rates, &cfg)?;
        let mut engine = Self {
            cfg,
            rates,
            drift,
            omega: f64::NAN,
            omega_source: OmegaSource::Config,
            baseline: None,
            mc_samples: 0,
            seed: 0,
            threads: None,
        };
        match engine.cfg.sideband_freq() {
            Some(omega) => engine.set_omega(omega, OmegaSource::Config),
            None => {
                let omega = engine.prescan_frequency();
                engine.set_omega(omega, OmegaSource::Prescan);
            }
        }
        Ok(engine)
    }

    /// Like [`new`](Self::new) with the analysis frequency given.
    pub fn with_omega(cfg: PhysicalConfig, omega: f64) -> Result<Self> {
        let mut engine = Self::new(PhysicalConfig {
            sideband_freq_hz: Some(omega / (2.0 * PI)),
            ..cfg
        })?;
        engine.set_omega(omega, OmegaSource::Inherited);
        Ok(engine)
    }

    fn set_omega(&mut self, omega: f64, source: OmegaSource) {
        self.omega = omega;
        self.omega_source = source;
        let base = self.cfg.unsqueezed();
        self.baseline = self.output_state(&base.squeezers, omega).ok().map(|s| s.covariance);
    }

    /// Homodyne Monte-Carlo samples per point for the sampled δ_κ column;
    /// 0 disables it.
    pub fn with_monte_carlo(mut self, samples: usize, seed: u64) -> Self {
        self.mc_samples = samples;
        self.seed = seed;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Caps the worker pool; `None` uses the global pool.
    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.cfg
    }

    pub fn rates(&self) -> &DerivedRates {
        &self.rates
    }

    pub fn drift(&self) -> &CouplingMatrix {
        &self.drift
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_source(&self) -> OmegaSource {
        self.omega_source
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_stable(&self) -> bool {
        self.drift.is_stable()
    }

    fn install<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }

    /// First maximum of the unsqueezed E_N on a log grid from
    /// `10⁻⁶·min Ω_m` to `10·γ_c`. Values within 1e-9 relative of the
    /// maximum count as ties and the lowest frequency wins.
    fn prescan_frequency(&self) -> f64 {
        let om_min = self.rates.mech_freqs.iter().copied().fold(f64::INFINITY, f64::min);
        let lo = 1e-6 * om_min;
        let hi = 10.0 * self.rates.cavity_decay;
        let grid = SweepAxis::logspace("omega", "rad/s", lo, hi, PRESCAN_POINTS).expect("valid prescan bounds");
        if !self.is_stable() {
            return grid.values()[0];
        }
        let base = self.cfg.unsqueezed();
        let e: Vec<f64> = grid
            .values()
            .iter()
            .map(|&w| self.log_negativity_at(&base.squeezers, w))
            .collect();
        let best = e.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if !(best > 0.0) {
            return grid.values()[0];
        }
        let idx = e.iter().position(|x| *x >= best * (1.0 - 1e-9)).unwrap_or(0);
        grid.values()[idx]
    }

    fn config_with(&self, squeezers: &[SqueezerSetting]) -> PhysicalConfig {
        let mut cfg = self.cfg.clone();
        cfg.squeezers = squeezers.to_vec();
        cfg
    }

    /// Output covariance (after loss) and noise traces (before loss).
    pub fn output_state(&self, squeezers: &[SqueezerSetting], omega: f64) -> Result<OutputState> {
        if !self.is_stable() {
            return Err(Error::Unphysical("drift matrix is unstable".into()));
        }
        let cfg = self.config_with(squeezers);
        let parts = input_noise_parts(&cfg, &self.rates, cfg.noise_mode);
        let gc = self.rates.cavity_decay;
        let split = decompose_noise_contributions(&self.drift, &[parts.quantum(), parts.thermal()], omega, gc)?;
        let total = output_covariance(&self.drift, &parts.total(), omega, gc)?;
        let covariance = apply_loss(&total, self.rates.output_loss)?;
        Ok(OutputState {
            covariance,
            quantum_trace: split[0].trace(),
            thermal_trace: split[1].trace(),
        })
    }

    /// E_N only, NaN on failure. Used by angle searches.
    pub fn log_negativity_at(&self, squeezers: &[SqueezerSetting], omega: f64) -> f64 {
        self.output_state(squeezers, omega)
            .and_then(|s| log_negativity(&s.covariance))
            .unwrap_or(f64::NAN)
    }

    fn baseline_at(&self, omega: f64) -> Result<CovMatrix> {
        if omega.to_bits() == self.omega.to_bits() {
            if let Some(b) = &self.baseline {
                return Ok(b.clone());
            }
        }
        let base = self.cfg.unsqueezed();
        Ok(self.output_state(&base.squeezers, omega)?.covariance)
    }

    /// Full record for the given squeezers at `omega`. `index` seeds the
    /// Monte-Carlo column.
    pub fn record(&self, coords: Vec<f64>, squeezers: &[SqueezerSetting], omega: f64, index: u64) -> MetricRecord {
        let mut rec = MetricRecord::empty(coords, squeezers, omega);
        let Ok(state) = self.output_state(squeezers, omega) else {
            return rec;
        };
        rec.stable = true;
        rec.quantum_noise_trace = state.quantum_trace;
        rec.thermal_noise_trace = state.thermal_trace;
        rec.noise_ratio = noise_ratio(state.quantum_trace, state.thermal_trace);
        rec.bch_coefficient = bch_for(squeezers);
        let baseline = self.baseline_at(omega).ok();
        fill_metrics(&mut rec, &state.covariance, baseline.as_ref());
        if self.mc_samples > 0 {
            let src = CumulantSource::MonteCarlo {
                n_samples: self.mc_samples,
                seed: point_seed(self.seed, index),
            };
            rec.kappa_literal_mc = Some(
                fourth_cumulant(&state.covariance, CumulantEstimator::PaperLiteral, src)
                    .map(|k| kappa_magnitude(&k))
                    .unwrap_or(f64::NAN),
            );
        }
        rec
    }

    /// Record for the configured squeezers at the analysis frequency.
    pub fn point(&self) -> MetricRecord {
        self.record(Vec::new(), &self.cfg.squeezers, self.omega, 0)
    }

    fn metadata(&self, kind: &str, label: &str, axes: Vec<SweepAxis>, omega: Option<f64>) -> GridMetadata {
        GridMetadata {
            kind: kind.into(),
            label: label.into(),
            axes,
            engine_version: ENGINE_VERSION.into(),
            analysis_omega: omega,
            omega_source: if omega.is_some() { self.omega_source } else { OmegaSource::Axis },
            output_loss: self.rates.output_loss,
            seed: self.seed,
            mc_samples: self.mc_samples,
            config: self.cfg.to_document(),
        }
    }
}

fn noise_ratio(quantum: f64, thermal: f64) -> f64 {
    if thermal > 0.0 {
        quantum / thermal
    } else {
        f64::INFINITY
    }
}

/// The squeeze phase is twice the quadrature angle, so the coefficient is
/// taken at `2θ`.
fn bch_for(squeezers: &[SqueezerSetting]) -> f64 {
    match squeezers {
        [a, b, ..] => bch_angle_coefficient(
            squeeze_strength(a),
            2.0 * a.angle.rem_euclid(PI),
            squeeze_strength(b),
            2.0 * b.angle.rem_euclid(PI),
        ),
        _ => 0.0,
    }
}

fn fill_metrics(rec: &mut MetricRecord, v: &CovMatrix, baseline: Option<&CovMatrix>) {
    if let Ok(ent) = entanglement::evaluate(v) {
        rec.e_n = ent.log_negativity;
        rec.duan = ent.duan_value;
        rec.duan_unit_gain = ent.duan_unit_gain;
    }
    if let Some(b) = baseline {
        if let Ok(ent) = entanglement::evaluate(b) {
            rec.baseline_e_n = ent.log_negativity;
            rec.baseline_duan = ent.duan_value;
        }
        if let Ok(g) = gaussianity::evaluate(v, b) {
            rec.genoni_delta = g.genoni_delta;
            rec.delta_diff = g.delta_diff;
            rec.kappa_literal = g.kappa_magnitude;
            rec.kappa_true = g.kappa_true;
            rec.kappa_diff = g.kappa_diff;
        }
    }
}

fn with_angles(template: &[SqueezerSetting], t1: f64, t2: f64) -> Vec<SqueezerSetting> {
    let mut s = template.to_vec();
    s[0].angle = t1;
    s[1].angle = t2;
    s
}

fn require_two_squeezers(engine: &Engine) -> Result<()> {
    if engine.cfg.squeezers.len() != 2 {
        return Err(Error::invalid("squeezers", "exactly two squeezers are required"));
    }
    Ok(())
}

/// Metrics over a `(θ₁, θ₂)` grid at the configured strengths.
pub fn sweep_angles(engine: &Engine, theta1: &SweepAxis, theta2: &SweepAxis) -> Result<MetricGrid> {
    require_two_squeezers(engine)?;
    let template = &engine.cfg.squeezers;
    let n2 = theta2.len();
    let points: Vec<(usize, f64, f64)> = theta1
        .values()
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| theta2.values().iter().enumerate().map(move |(j, &b)| (i * n2 + j, a, b)))
        .collect();
    let records = engine.install(|| {
        points
            .par_iter()
            .map(|&(idx, a, b)| engine.record(vec![a, b], &with_angles(template, a, b), engine.omega, idx as u64))
            .collect::<Vec<_>>()
    })?;
    let meta = engine.metadata("angles", "omc", vec![theta1.clone(), theta2.clone()], Some(engine.omega));
    MetricGrid::new(meta, records)
}

/// Same grid as [`sweep_angles`]; the noise columns carry the quantum and
/// thermal output traces, with mechanical zero-point counted as quantum.
pub fn noise_ratio_map(engine: &Engine, theta1: &SweepAxis, theta2: &SweepAxis) -> Result<MetricGrid> {
    let mut grid = sweep_angles(engine, theta1, theta2)?;
    grid.meta.kind = "noise-ratio".into();
    Ok(grid)
}

/// Squeezers with `r_j = μ√P_j` at fixed angles, pumped at each field's
/// input power.
pub fn strength_squeezers(cfg: &PhysicalConfig, mu: f64, angles: (f64, f64)) -> Vec<SqueezerSetting> {
    [angles.0, angles.1]
        .iter()
        .zip(&cfg.fields)
        .map(|(&angle, field)| SqueezerSetting {
            strength: SqueezeStrength::Nonlinear {
                mu,
                pump_power: field.input_power,
            },
            angle,
        })
        .collect()
}

pub fn sweep_strength(engine: &Engine, mu: &SweepAxis, angles: (f64, f64)) -> Result<MetricGrid> {
    require_two_squeezers(engine)?;
    if mu.values().iter().any(|m| *m < 0.0) {
        return Err(Error::Argument("μ axis must be nonnegative".into()));
    }
    let records = engine.install(|| {
        mu.values()
            .par_iter()
            .enumerate()
            .map(|(i, &m)| engine.record(vec![m], &strength_squeezers(&engine.cfg, m, angles), engine.omega, i as u64))
            .collect::<Vec<_>>()
    })?;
    let meta = engine.metadata("strength", "omc", vec![mu.clone()], Some(engine.omega));
    MetricGrid::new(meta, records)
}

/// Metrics versus sideband frequency (rad/s) at the configured squeezers.
pub fn sweep_frequency(engine: &Engine, omega: &SweepAxis) -> Result<MetricGrid> {
    if omega.values().iter().any(|w| *w <= 0.0) {
        return Err(Error::Argument("frequency axis must be positive".into()));
    }
    let records = engine.install(|| {
        omega
            .values()
            .par_iter()
            .enumerate()
            .map(|(i, &w)| engine.record(vec![w], &engine.cfg.squeezers, w, i as u64))
            .collect::<Vec<_>>()
    })?;
    let meta = engine.metadata("frequency", "omc", vec![omega.clone()], None);
    MetricGrid::new(meta, records)
}

/// What an angle search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleObjective {
    MaxLogNegativity,
    /// Most negative Δδ (squeezing makes the output more Gaussian).
    MinDeltaDiff,
}

fn objective_value(engine: &Engine, squeezers: &[SqueezerSetting], objective: AngleObjective) -> f64 {
    match objective {
        AngleObjective::MaxLogNegativity => engine.log_negativity_at(squeezers, engine.omega),
        AngleObjective::MinDeltaDiff => {
            let Ok(state) = engine.output_state(squeezers, engine.omega) else {
                return f64::NAN;
            };
            let Ok(base) = engine.baseline_at(engine.omega) else {
                return f64::NAN;
            };
            gaussianity::delta_difference(&state.covariance, &base)
                .map(|d| -d)
                .unwrap_or(f64::NAN)
        }
    }
}

/// Best angle pair for `template` strengths: a 32² grid over `[0, π)²`,
/// then a 16² grid spanning one coarse step around the winner. Ties keep
/// the first point in row-major order.
pub fn optimize_angles(engine: &Engine, template: &[SqueezerSetting], objective: AngleObjective) -> (f64, f64) {
    const COARSE: usize = 32;
    const FINE: usize = 16;
    let step = PI / COARSE as f64;
    let search = |pairs: Vec<(f64, f64)>| {
        let mut best = (f64::NEG_INFINITY, pairs[0]);
        for (a, b) in pairs {
            let v = objective_value(engine, &with_angles(template, a, b), objective);
            if v > best.0 {
                best = (v, (a, b));
            }
        }
        best.1
    };
    let coarse: Vec<(f64, f64)> = (0..COARSE)
        .flat_map(|i| (0..COARSE).map(move |j| (i as f64 * step, j as f64 * step)))
        .collect();
    let (a0, b0) = search(coarse);
    let offsets: Vec<f64> = (0..FINE)
        .map(|k| -step + 2.0 * step * k as f64 / (FINE - 1) as f64)
        .collect();
    let fine: Vec<(f64, f64)> = offsets
        .iter()
        .flat_map(|&da| offsets.iter().map(move |&db| (a0 + da, b0 + db)))
        .collect();
    search(fine)
}

/// The three arms of the resource comparison.
#[derive(Debug, Clone)]
pub struct Comparison {
    /// Two squeezed vacua on a 50:50 beamsplitter, `r = μ√(P₁+P₂)`.
    pub conventional: MetricGrid,
    /// Squeezed injection into the cavity, `r_j = μ√P_j`, best angles.
    pub omc: MetricGrid,
    /// As `omc` with [`POOR_COUPLING_EFFICIENCY`] on the squeezed inputs.
    pub omc_coupled: MetricGrid,
}

fn conventional_record(mu: f64, cfg: &PhysicalConfig, omega: f64) -> MetricRecord {
    let p: f64 = cfg.fields.iter().map(|f| f.input_power).sum();
    let r = mu * p.sqrt();
    let settings = [SqueezerSetting::direct(r, FRAC_PI_2), SqueezerSetting::direct(r, 0.0)];
    let mut rec = MetricRecord::empty(vec![mu], &settings, omega);
    let inputs = CovMatrix::squeezed_vacuum(r, FRAC_PI_2).direct_sum(&CovMatrix::squeezed_vacuum(r, 0.0));
    let Ok(v) = beamsplitter_mix(&inputs, 0.5) else {
        return rec;
    };
    rec.stable = true;
    rec.bch_coefficient = bch_for(&settings);
    fill_metrics(&mut rec, &v, Some(&CovMatrix::vacuum(2)));
    rec
}

fn omc_arm(engine: &Engine, mu: &SweepAxis, label: &str) -> Result<MetricGrid> {
    let records = engine.install(|| {
        mu.values()
            .par_iter()
            .enumerate()
            .map(|(i, &m)| {
                let template = strength_squeezers(&engine.cfg, m, (0.0, 0.0));
                let (a, b) = if m == 0.0 {
                    (0.0, 0.0)
                } else {
                    optimize_angles(engine, &template, AngleObjective::MaxLogNegativity)
                };
                engine.record(vec![m], &with_angles(&template, a, b), engine.omega, i as u64)
            })
            .collect::<Vec<_>>()
    })?;
    let meta = engine.metadata("compare", label, vec![mu.clone()], Some(engine.omega));
    MetricGrid::new(meta, records)
}

/// Conventional beamsplitter entanglement against the cavity, with and
/// without poor input coupling.
pub fn compare_conventional(engine: &Engine, mu: &SweepAxis) -> Result<Comparison> {
    require_two_squeezers(engine)?;
    if mu.values().iter().any(|m| *m < 0.0) {
        return Err(Error::Argument("μ axis must be nonnegative".into()));
    }
    let conv_records = mu
        .values()
        .iter()
        .map(|&m| conventional_record(m, &engine.cfg, engine.omega))
        .collect();
    let conv_meta = engine.metadata("compare", "conventional", vec![mu.clone()], Some(engine.omega));
    let conventional = MetricGrid::new(conv_meta, conv_records)?;

    let omc = omc_arm(engine, mu, "omc")?;

    let mut coupled_cfg = engine.cfg.clone();
    coupled_cfg.input_coupling_efficiency = POOR_COUPLING_EFFICIENCY;
    let coupled = Engine::with_omega(coupled_cfg, engine.omega)?
        .with_monte_carlo(engine.mc_samples, engine.seed)
        .with_threads(engine.threads);
    let omc_coupled = omc_arm(&coupled, mu, "omc_coupled")?;
    Ok(Comparison {
        conventional,
        omc,
        omc_coupled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_engine(r: f64) -> Engine {
        Engine::new(PhysicalConfig::reference().with_squeezing(r, (0.0, 0.0))).unwrap()
    }

    #[test]
    fn periodic_axis_half_shift_is_exact() {
        for n in [16, 32, 64, 100] {
            let a = SweepAxis::periodic("t", 2.0 * PI, n).unwrap();
            let v = a.values();
            for i in 0..n / 2 {
                assert_eq!(v[i + n / 2].rem_euclid(PI).to_bits(), v[i].to_bits());
                assert!((v[i] - 2.0 * PI * i as f64 / n as f64).abs() < 1e-15);
            }
        }
        assert!(SweepAxis::periodic("t", 0.0, 4).is_err());
    }

    #[test]
    fn axis_validation() {
        assert!(SweepAxis::new("x", "", vec![]).is_err());
        assert!(SweepAxis::new("x", "", vec![1.0, 1.0]).is_err());
        assert!(SweepAxis::new("x", "", vec![1.0, 2.0, 1.5]).is_err());
        assert!(SweepAxis::new("x", "", vec![3.0, 2.0]).is_ok());
        assert!(SweepAxis::linspace("x", "", 0.0, 0.0, 0).is_err());
        assert_eq!(SweepAxis::linspace("x", "", 0.0, 1.0, 5).unwrap().values()[4], 1.0);
        let p = SweepAxis::periodic("t", 2.0 * PI, 4).unwrap();
        assert_eq!(p.values(), &[0.0, FRAC_PI_2, PI, 1.5 * PI]);
        let l = SweepAxis::logspace("w", "rad/s", 1.0, 100.0, 3).unwrap();
        assert!((l.values()[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn prescan_picks_the_low_frequency_plateau() {
        let e = reference_engine(0.0);
        assert_eq!(e.omega_source(), OmegaSource::Prescan);
        assert!(e.omega() < 1e3, "{}", e.omega());
        let rec = e.point();
        assert!(rec.stable && rec.e_n > 0.0);
    }

    #[test]
    fn configured_frequency_is_used() {
        let mut cfg = PhysicalConfig::reference();
        cfg.sideband_freq_hz = Some(10.0);
        let e = Engine::new(cfg).unwrap();
        assert_eq!(e.omega_source(), OmegaSource::Config);
        assert!((e.omega() - 20.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn single_point_grid_matches_baseline() {
        let e = reference_engine(0.0);
        let a = SweepAxis::new("theta1", "rad", vec![0.0]).unwrap();
        let b = SweepAxis::new("theta2", "rad", vec![0.0]).unwrap();
        let g = sweep_angles(&e, &a, &b).unwrap();
        let point = e.record(vec![0.0, 0.0], &e.config().squeezers, e.omega(), 0);
        assert!(g.records[0].identical(&point));
        assert!((g.records[0].e_n - g.records[0].baseline_e_n).abs() == 0.0);
        assert_eq!(g.records[0].delta_diff, 0.0);
    }

    #[test]
    fn angle_records_are_pi_periodic() {
        let e = reference_engine(0.8);
        let a = SweepAxis::periodic("theta1", 2.0 * PI, 8).unwrap();
        let g = sweep_angles(&e, &a, &a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let p = g.at(i, j).metric_values();
                for (di, dj) in [(4, 0), (0, 4)] {
                    let q = g.at(i + di, j + dj).metric_values();
                    // skip the angle columns themselves
                    for c in 5..p.len() {
                        let scale = p[c].abs().max(1.0);
                        assert!((p[c] - q[c]).abs() / scale < 1e-9, "{}", MetricRecord::COLUMNS[c]);
                    }
                }
            }
        }
    }

    #[test]
    fn evaluation_order_does_not_matter() {
        let e = reference_engine(0.0);
        let fwd = SweepAxis::new("mu", "", vec![0.0, 5.0, 10.0]).unwrap();
        let rev = SweepAxis::new("mu", "", vec![10.0, 5.0, 0.0]).unwrap();
        let g1 = sweep_strength(&e, &fwd, (0.3, 1.2)).unwrap();
        let g2 = sweep_strength(&e, &rev, (0.3, 1.2)).unwrap();
        for k in 0..3 {
            assert!(g1.records[k].identical(&g2.records[2 - k]));
        }
        // μ = 0 is the unsqueezed baseline
        assert_eq!(g1.records[0].e_n, g1.records[0].baseline_e_n);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let e = reference_engine(0.5).with_monte_carlo(2000, 9);
        let a = SweepAxis::periodic("theta", PI, 4).unwrap();
        let g1 = sweep_angles(&e.clone().with_threads(Some(1)), &a, &a).unwrap();
        let g4 = sweep_angles(&e.with_threads(Some(4)), &a, &a).unwrap();
        assert!(g1.identical(&g4));
        assert!(g1.has_monte_carlo());
    }

    #[test]
    fn high_frequency_kills_entanglement() {
        let e = reference_engine(0.0);
        let gc = e.rates().cavity_decay;
        let axis = SweepAxis::new("omega", "rad/s", vec![1e3 * gc]).unwrap();
        let g = sweep_frequency(&e, &axis).unwrap();
        assert!(g.records[0].e_n < 1e-6);
        assert!(g.meta.analysis_omega.is_none());
    }

    #[test]
    fn zero_temperature_ratio_is_infinite() {
        let mut cfg = PhysicalConfig::reference();
        cfg.temperature = 0.0;
        let rec = Engine::new(cfg).unwrap().point();
        assert_eq!(rec.thermal_noise_trace, 0.0);
        assert_eq!(rec.noise_ratio, f64::INFINITY);
    }

    #[test]
    fn unstable_config_records_nan() {
        let mut cfg = PhysicalConfig::reference();
        for f in &mut cfg.fields {
            f.circulating_power *= 1e4;
        }
        let e = Engine::new(cfg).unwrap();
        assert!(!e.is_stable());
        let rec = e.point();
        assert!(!rec.stable && rec.e_n.is_nan());
    }

    #[test]
    fn conventional_arm_is_tmsv() {
        let cfg = PhysicalConfig::reference();
        let rec = conventional_record(0.0, &cfg, 1.0);
        assert_eq!(rec.e_n, 0.0);
        assert!(rec.duan.abs() < 1e-12);
        let mu = 10.0;
        let r = mu * (cfg.fields[0].input_power + cfg.fields[1].input_power).sqrt();
        let rec = conventional_record(mu, &cfg, 1.0);
        assert!((rec.e_n - 2.0 * r).abs() < 1e-9);
    }

    #[test]
    fn record_values_round_trip() {
        let rec = reference_engine(0.3).point();
        let back = MetricRecord::from_values(rec.coords.clone(), &rec.metric_values(), None).unwrap();
        assert!(rec.identical(&back));
    }
}
