//! Experiment configuration and the physical rates derived from it.
//!
//! Configurations are JSON documents (see [`ConfigDocument`] for the key
//! names). Values are kept in the units of the document where a unit
//! conversion would not round-trip exactly (frequencies are stored in Hz and
//! exposed in rad/s through accessor methods).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::NoiseMode;
use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Reference operating point bundled with the crate.
pub const REFERENCE_DOCUMENT: &str = include_str!("../configs/reference.json");

/// Input-coupler transmission used when a document does not set one. Chosen
/// so the carrier's resonant build-up matches the ratio of its circulating
/// power to its input power.
pub const DEFAULT_INPUT_TRANSMISSION_PPM: f64 = 550.0;
pub const DEFAULT_WAVELENGTH_M: f64 = 1.064e-6;
pub const DEFAULT_MODE_FREQ_HZ: f64 = 1.0e5;
pub const DEFAULT_MODE_Q: f64 = 17_000.0;
pub const DEFAULT_MODE_MASS_KG: f64 = 5.0e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalFieldSpec {
    /// Power circulating inside the cavity (W).
    pub circulating_power: f64,
    /// Power incident on the input coupler (W).
    pub input_power: f64,
    /// Detuning in units of the cavity half-linewidth.
    pub detuning_coeff: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
}

impl OpticalFieldSpec {
    /// Optical angular frequency (rad/s).
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.wavelength
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanicalModeSpec {
    pub freq_hz: f64,
    pub quality_factor: f64,
    /// Effective mass (kg).
    pub effective_mass: f64,
}

impl MechanicalModeSpec {
    /// Resonance frequency Ω_m (rad/s).
    pub fn resonance_freq(&self) -> f64 {
        2.0 * PI * self.freq_hz
    }
}

impl Default for MechanicalModeSpec {
    fn default() -> Self {
        Self {
            freq_hz: DEFAULT_MODE_FREQ_HZ,
            quality_factor: DEFAULT_MODE_Q,
            effective_mass: DEFAULT_MODE_MASS_KG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SqueezeStrength {
    /// Squeezing parameter given directly.
    Direct { r: f64 },
    /// Crystal nonlinearity μ (W^-1/2) and pump power (W); r = μ√P.
    Nonlinear { mu: f64, pump_power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezerSetting {
    pub strength: SqueezeStrength,
    /// Squeezing angle θ (rad).
    pub angle: f64,
}

impl SqueezerSetting {
    pub fn direct(r: f64, angle: f64) -> Self {
        Self {
            strength: SqueezeStrength::Direct { r },
            angle,
        }
    }

    pub fn unsqueezed() -> Self {
        Self::direct(0.0, 0.0)
    }

    pub fn r(&self) -> f64 {
        squeeze_strength(self)
    }
}

/// Squeezing parameter r for a squeezer setting.
pub fn squeeze_strength(setting: &SqueezerSetting) -> f64 {
    match setting.strength {
        SqueezeStrength::Direct { r } => r,
        SqueezeStrength::Nonlinear { mu, pump_power } => mu * pump_power.sqrt(),
    }
}

/// Mechanical loss model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DampingModel {
    /// γ_m = Ω_m / Q, frequency independent.
    #[default]
    Viscous,
    /// Loss angle 1/Q: damping and thermal force scale as Ω_m/|Ω|.
    Structural,
}

/// How the round-trip loss degrades the detected output fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputLossModel {
    /// Broadband beamsplitter loss of `loss_ppm · 10⁻⁶` on both fields.
    #[default]
    Direct,
    /// Loss fraction `L_s / (T_in + L_s)`, the share of the intracavity
    /// field that leaves through the loss channel instead of the coupler.
    EscapeEfficiency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub fields: Vec<OpticalFieldSpec>,
    pub mech_modes: Vec<MechanicalModeSpec>,
    pub squeezers: Vec<SqueezerSetting>,
    /// Bath temperature (K).
    pub temperature: f64,
    /// Intracavity round-trip loss (ppm).
    pub loss_ppm: f64,
    /// Cavity length (m).
    pub cavity_length: f64,
    /// Input-coupler power transmission (ppm).
    pub input_transmission_ppm: f64,
    /// Analysis sideband frequency (Hz). `None` selects it by pre-scan.
    pub sideband_freq_hz: Option<f64>,
    /// Fraction of each squeezer's output that reaches the cavity.
    pub input_coupling_efficiency: f64,
    pub damping: DampingModel,
    pub noise_mode: NoiseMode,
    pub output_loss_model: OutputLossModel,
}

impl PhysicalConfig {
    /// The bundled reference configuration with unsqueezed inputs.
    pub fn reference() -> Self {
        load_config(REFERENCE_DOCUMENT, false).expect("bundled config is valid")
    }

    /// Analysis sideband frequency in rad/s, if fixed by the config.
    pub fn sideband_freq(&self) -> Option<f64> {
        self.sideband_freq_hz.map(|f| 2.0 * PI * f)
    }

    /// Copy with both squeezers switched off.
    pub fn unsqueezed(&self) -> Self {
        let mut cfg = self.clone();
        for s in &mut cfg.squeezers {
            *s = SqueezerSetting::unsqueezed();
        }
        cfg
    }

    /// Copy with both squeezers set to `r` at the given angles.
    pub fn with_squeezing(&self, r: f64, angles: (f64, f64)) -> Self {
        let mut cfg = self.clone();
        cfg.squeezers = vec![
            SqueezerSetting::direct(r, angles.0),
            SqueezerSetting::direct(r, angles.1),
        ];
        cfg
    }

    /// Loss fraction applied to the output covariance.
    pub fn output_loss(&self) -> f64 {
        match self.output_loss_model {
            OutputLossModel::Direct => self.loss_ppm / 1e6,
            OutputLossModel::EscapeEfficiency => {
                let total = self.input_transmission_ppm + self.loss_ppm;
                if total > 0.0 {
                    self.loss_ppm / total
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        finite_nonneg("temperature_K", self.temperature)?;
        finite_nonneg("loss_ppm", self.loss_ppm)?;
        if self.loss_ppm >= 1e6 {
            return Err(Error::invalid("loss_ppm", "must be below 1e6"));
        }
        finite_nonneg("input_transmission_ppm", self.input_transmission_ppm)?;
        if self.input_transmission_ppm >= 1e6 {
            return Err(Error::invalid("input_transmission_ppm", "must be below 1e6"));
        }
        finite_pos("cavity_length_m", self.cavity_length)?;
        if let Some(f) = self.sideband_freq_hz {
            finite_pos("sideband_freq_hz", f)?;
        }
        let eta = self.input_coupling_efficiency;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid("input_coupling_efficiency", "must lie in [0, 1]"));
        }
        if self.fields.len() != 2 {
            return Err(Error::invalid("fields", "must list exactly 2 optical fields"));
        }
        for (j, f) in self.fields.iter().enumerate() {
            finite_nonneg(&format!("fields[{j}].circulating_power_W"), f.circulating_power)?;
            finite_nonneg(&format!("fields[{j}].input_power_W"), f.input_power)?;
            finite_pos(&format!("fields[{j}].wavelength_m"), f.wavelength)?;
            if !f.detuning_coeff.is_finite() {
                return Err(Error::invalid(
                    format!("fields[{j}].detuning_coeff"),
                    "must be finite",
                ));
            }
        }
        if self.mech_modes.is_empty() {
            return Err(Error::invalid("mech_modes", "must list at least one mode"));
        }
        for (k, m) in self.mech_modes.iter().enumerate() {
            finite_pos(&format!("mech_modes[{k}].freq_hz"), m.freq_hz)?;
            finite_pos(&format!("mech_modes[{k}].quality_factor"), m.quality_factor)?;
            finite_pos(&format!("mech_modes[{k}].mass_kg"), m.effective_mass)?;
        }
        if self.squeezers.len() != 2 {
            return Err(Error::invalid("squeezers", "must list exactly 2 squeezers"));
        }
        for (j, s) in self.squeezers.iter().enumerate() {
            match s.strength {
                SqueezeStrength::Direct { r } => finite_nonneg(&format!("squeezers[{j}].r"), r)?,
                SqueezeStrength::Nonlinear { mu, pump_power } => {
                    finite_nonneg(&format!("squeezers[{j}].mu"), mu)?;
                    finite_nonneg(&format!("squeezers[{j}].pump_power_W"), pump_power)?;
                }
            }
            if !s.angle.is_finite() {
                return Err(Error::invalid(format!("squeezers[{j}].theta_rad"), "must be finite"));
            }
        }
        Ok(())
    }

    /// The JSON document form of this config.
    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            temperature_k: Some(self.temperature),
            loss_ppm: Some(self.loss_ppm),
            cavity_length_m: Some(self.cavity_length),
            input_transmission_ppm: Some(self.input_transmission_ppm),
            sideband_freq_hz: self.sideband_freq_hz,
            input_coupling_efficiency: Some(self.input_coupling_efficiency),
            structural_damping: Some(self.damping == DampingModel::Structural),
            noise_mode: Some(self.noise_mode),
            output_loss_model: Some(self.output_loss_model),
            fields: Some(
                self.fields
                    .iter()
                    .map(|f| FieldDocument {
                        circulating_power_w: Some(f.circulating_power),
                        input_power_w: Some(f.input_power),
                        detuning_coeff: Some(f.detuning_coeff),
                        wavelength_m: Some(f.wavelength),
                    })
                    .collect(),
            ),
            mech_modes: Some(
                self.mech_modes
                    .iter()
                    .map(|m| ModeDocument {
                        freq_hz: Some(m.freq_hz),
                        quality_factor: Some(m.quality_factor),
                        mass_kg: Some(m.effective_mass),
                    })
                    .collect(),
            ),
            squeezers: Some(
                self.squeezers
                    .iter()
                    .map(|s| match s.strength {
                        SqueezeStrength::Direct { r } => SqueezerDocument {
                            r: Some(r),
                            mu: None,
                            pump_power_w: None,
                            theta_rad: Some(s.angle),
                        },
                        SqueezeStrength::Nonlinear { mu, pump_power } => SqueezerDocument {
                            r: None,
                            mu: Some(mu),
                            pump_power_w: Some(pump_power),
                            theta_rad: Some(s.angle),
                        },
                    })
                    .collect(),
            ),
        }
    }

    /// Canonical JSON text (fixed key order, shortest round-trip floats).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("config serializes")
    }
}

fn finite_nonneg(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and >= 0 (got {v})")))
    }
}

fn finite_pos(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0 (got {v})")))
    }
}

/// On-disk configuration schema. Every key is optional at the serde level so
/// that missing required keys surface as validation errors naming the key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(rename = "temperature_K", skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_ppm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavity_length_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_transmission_ppm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sideband_freq_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_coupling_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural_damping: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_mode: Option<NoiseMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_loss_model: Option<OutputLossModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<FieldDocument>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mech_modes: Option<Vec<ModeDocument>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeezers: Option<Vec<SqueezerDocument>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    #[serde(rename = "circulating_power_W", skip_serializing_if = "Option::is_none")]
    pub circulating_power_w: Option<f64>,
    #[serde(rename = "input_power_W", skip_serializing_if = "Option::is_none")]
    pub input_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_coeff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezerDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "pump_power_W", skip_serializing_if = "Option::is_none")]
    pub pump_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<f64>,
}

const TOP_KEYS: &[&str] = &[
    "temperature_K",
    "loss_ppm",
    "cavity_length_m",
    "input_transmission_ppm",
    "sideband_freq_hz",
    "input_coupling_efficiency",
    "structural_damping",
    "noise_mode",
    "output_loss_model",
    "fields",
    "mech_modes",
    "squeezers",
];
const FIELD_KEYS: &[&str] = &[
    "circulating_power_W",
    "input_power_W",
    "detuning_coeff",
    "wavelength_m",
];
const MODE_KEYS: &[&str] = &["freq_hz", "quality_factor", "mass_kg"];
const SQUEEZER_KEYS: &[&str] = &["r", "mu", "pump_power_W", "theta_rad"];

/// Parses JSON text into an untyped document.
pub fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Removes keys the schema does not know. Returns the dropped key paths.
pub fn prune_unknown_keys(doc: &mut Value) -> Vec<String> {
    fn prune(obj: &mut Value, allowed: &[&str], prefix: &str, dropped: &mut Vec<String>) {
        if let Value::Object(map) = obj {
            let unknown: Vec<String> = map
                .keys()
                .filter(|k| !allowed.contains(&k.as_str()))
                .cloned()
                .collect();
            for k in unknown {
                map.remove(&k);
                dropped.push(format!("{prefix}{k}"));
            }
        }
    }
    let mut dropped = Vec::new();
    prune(doc, TOP_KEYS, "", &mut dropped);
    for (list, keys) in [
        ("fields", FIELD_KEYS),
        ("mech_modes", MODE_KEYS),
        ("squeezers", SQUEEZER_KEYS),
    ] {
        if let Some(Value::Array(items)) = doc.get_mut(list) {
            for (i, item) in items.iter_mut().enumerate() {
                prune(item, keys, &format!("{list}[{i}]."), &mut dropped);
            }
        }
    }
    dropped
}

/// Applies a dotted-path assignment such as `squeezers[0].r=0.3`.
///
/// The right-hand side is read as JSON when it parses, otherwise as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Argument(format!("override `{assignment}` lacks `=`")))?;
    let value: Value =
        serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));

    let mut cursor = doc;
    let segments: Vec<&str> = path.trim().split('.').collect();
    for (n, seg) in segments.iter().enumerate() {
        let last = n + 1 == segments.len();
        let (key, index) = match seg.split_once('[') {
            Some((k, rest)) => {
                let idx = rest
                    .strip_suffix(']')
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::Argument(format!("bad index in `{seg}`")))?;
                (k, Some(idx))
            }
            None => (*seg, None),
        };
        if key.is_empty() {
            return Err(Error::Argument(format!("empty key in `{path}`")));
        }
        let map = cursor
            .as_object_mut()
            .ok_or_else(|| Error::Argument(format!("`{key}` is not inside an object")))?;
        match index {
            None if last => {
                map.insert(key.to_string(), value);
                return Ok(());
            }
            None => {
                cursor = map
                    .entry(key.to_string())
                    .or_insert_with(|| Value::Object(Default::default()));
            }
            Some(i) => {
                let arr = map
                    .get_mut(key)
                    .and_then(Value::as_array_mut)
                    .ok_or_else(|| Error::Argument(format!("`{key}` is not an array")))?;
                let len = arr.len();
                let slot = arr
                    .get_mut(i)
                    .ok_or_else(|| Error::Argument(format!("`{key}[{i}]` out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                cursor = slot;
            }
        }
    }
    Ok(())
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str, lenient: bool) -> Result<PhysicalConfig> {
    load_config_value(parse_document(text)?, lenient)
}

/// Validates an already-parsed (and possibly overridden) document.
pub fn load_config_value(mut doc: Value, lenient: bool) -> Result<PhysicalConfig> {
    if lenient {
        prune_unknown_keys(&mut doc);
    }
    let doc: ConfigDocument = serde_json::from_value(doc).map_err(|e| Error::Parse(e.to_string()))?;
    from_document(&doc)
}

fn required<T: Copy>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(field, "is required"))
}

pub fn from_document(doc: &ConfigDocument) -> Result<PhysicalConfig> {
    let fields = doc
        .fields
        .as_ref()
        .ok_or_else(|| Error::invalid("fields", "is required"))?
        .iter()
        .enumerate()
        .map(|(j, f)| {
            Ok(OpticalFieldSpec {
                circulating_power: required(
                    f.circulating_power_w,
                    &format!("fields[{j}].circulating_power_W"),
                )?,
                input_power: f.input_power_w.unwrap_or(0.0),
                detuning_coeff: required(f.detuning_coeff, &format!("fields[{j}].detuning_coeff"))?,
                wavelength: f.wavelength_m.unwrap_or(DEFAULT_WAVELENGTH_M),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mech_modes = match &doc.mech_modes {
        None => vec![MechanicalModeSpec::default()],
        Some(list) => list
            .iter()
            .map(|m| {
                let d = MechanicalModeSpec::default();
                MechanicalModeSpec {
                    freq_hz: m.freq_hz.unwrap_or(d.freq_hz),
                    quality_factor: m.quality_factor.unwrap_or(d.quality_factor),
                    effective_mass: m.mass_kg.unwrap_or(d.effective_mass),
                }
            })
            .collect(),
    };

    let squeezers = doc
        .squeezers
        .as_ref()
        .ok_or_else(|| Error::invalid("squeezers", "is required"))?
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let strength = match (s.r, s.mu) {
                (Some(r), None) => {
                    if s.pump_power_w.is_some() {
                        return Err(Error::invalid(
                            format!("squeezers[{j}].pump_power_W"),
                            "only applies to the `mu` form",
                        ));
                    }
                    SqueezeStrength::Direct { r }
                }
                (None, Some(mu)) => {
                    let pump_power = match s.pump_power_w {
                        Some(p) => p,
                        None => fields.get(j).map(|f| f.input_power).ok_or_else(|| {
                            Error::invalid(format!("squeezers[{j}].pump_power_W"), "is required")
                        })?,
                    };
                    SqueezeStrength::Nonlinear { mu, pump_power }
                }
                (Some(_), Some(_)) => {
                    return Err(Error::invalid(
                        format!("squeezers[{j}]"),
                        "must give exactly one of `r` or `mu`",
                    ))
                }
                (None, None) => {
                    return Err(Error::invalid(
                        format!("squeezers[{j}]"),
                        "needs one of `r` or `mu`",
                    ))
                }
            };
            Ok(SqueezerSetting {
                strength,
                angle: s.theta_rad.unwrap_or(0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cfg = PhysicalConfig {
        fields,
        mech_modes,
        squeezers,
        temperature: required(doc.temperature_k, "temperature_K")?,
        loss_ppm: required(doc.loss_ppm, "loss_ppm")?,
        cavity_length: required(doc.cavity_length_m, "cavity_length_m")?,
        input_transmission_ppm: doc
            .input_transmission_ppm
            .unwrap_or(DEFAULT_INPUT_TRANSMISSION_PPM),
        sideband_freq_hz: doc.sideband_freq_hz,
        input_coupling_efficiency: doc.input_coupling_efficiency.unwrap_or(1.0),
        damping: if doc.structural_damping.unwrap_or(false) {
            DampingModel::Structural
        } else {
            DampingModel::Viscous
        },
        noise_mode: doc.noise_mode.unwrap_or_default(),
        output_loss_model: doc.output_loss_model.unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Rates and amplitudes consumed by the drift matrix and noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Cavity amplitude decay rate γ_c (rad/s).
    pub cavity_decay: f64,
    /// Per-field detuning Δ_j = d_j γ_c (rad/s).
    pub detunings: Vec<f64>,
    /// Per-field coherent amplitude α_j (√photons), taken real.
    pub amplitudes: Vec<f64>,
    /// Coupling g_jk (rad/s), indexed `[field][mode]`.
    pub couplings: Vec<Vec<f64>>,
    /// Per-mode resonance Ω_m (rad/s).
    pub mech_freqs: Vec<f64>,
    /// Per-mode damping γ_m = Ω_m/Q (rad/s).
    pub mech_damping: Vec<f64>,
    /// Per-mode thermal occupancy n̄.
    pub occupancy: Vec<f64>,
    /// Per-mode zero-point amplitude x_zpf (m).
    pub zero_point: Vec<f64>,
    /// Detection loss fraction applied to the output covariance.
    pub output_loss: f64,
}

/// Bose-Einstein occupancy of a mode at angular frequency `omega`.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (BOLTZMANN * temperature)).exp_m1()
}

pub fn derive_rates(cfg: &PhysicalConfig) -> Result<DerivedRates> {
    let l = cfg.cavity_length;
    if !(l > 0.0) {
        return Err(Error::Degenerate(format!("cavity length {l} m")));
    }
    let transmission = (cfg.input_transmission_ppm + cfg.loss_ppm) * 1e-6;
    let cavity_decay = SPEED_OF_LIGHT * transmission / (4.0 * l);
    if !(cavity_decay > 0.0) || !cavity_decay.is_finite() {
        return Err(Error::Degenerate(format!(
            "cavity decay rate {cavity_decay} (input transmission plus loss must be > 0)"
        )));
    }

    let detunings: Vec<f64> = cfg.fields.iter().map(|f| f.detuning_coeff * cavity_decay).collect();
    let amplitudes: Vec<f64> = cfg
        .fields
        .iter()
        .map(|f| {
            let photons =
                2.0 * f.circulating_power * l / (HBAR * f.angular_frequency() * SPEED_OF_LIGHT);
            photons.sqrt()
        })
        .collect();

    let mech_freqs: Vec<f64> = cfg.mech_modes.iter().map(|m| m.resonance_freq()).collect();
    let zero_point: Vec<f64> = cfg
        .mech_modes
        .iter()
        .zip(&mech_freqs)
        .map(|(m, &om)| (HBAR / (2.0 * m.effective_mass * om)).sqrt())
        .collect();
    let mech_damping: Vec<f64> = cfg
        .mech_modes
        .iter()
        .zip(&mech_freqs)
        .map(|(m, &om)| om / m.quality_factor)
        .collect();
    let occupancy: Vec<f64> = mech_freqs
        .iter()
        .map(|&om| thermal_occupancy(om, cfg.temperature))
        .collect();

    let couplings: Vec<Vec<f64>> = cfg
        .fields
        .iter()
        .zip(&amplitudes)
        .map(|(f, &alpha)| {
            zero_point
                .iter()
                .map(|&x| f.angular_frequency() / l * x * alpha)
                .collect()
        })
        .collect();

    let rates = DerivedRates {
        cavity_decay,
        detunings,
        amplitudes,
        couplings,
        mech_freqs,
        mech_damping,
        occupancy,
        zero_point,
        output_loss: cfg.output_loss(),
    };
    let all_finite = rates.detunings.iter().all(|v| v.is_finite())
        && rates.amplitudes.iter().all(|v| v.is_finite())
        && rates.couplings.iter().flatten().all(|v| v.is_finite())
        && rates.mech_damping.iter().all(|v| v.is_finite() && *v > 0.0)
        && rates.occupancy.iter().all(|v| v.is_finite() && *v >= 0.0)
        && rates.zero_point.iter().all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::Degenerate("non-finite derived rate".into()));
    }
    Ok(rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_doc() -> Value {
        parse_document(REFERENCE_DOCUMENT).unwrap()
    }

    #[test]
    fn reference_values() {
        let cfg = PhysicalConfig::reference();
        assert_eq!(cfg.temperature, 4.0);
        assert_eq!(cfg.fields[0].circulating_power, 0.2816);
        assert_eq!(cfg.fields[1].circulating_power, 0.2238);
        assert_eq!(cfg.loss_ppm, 25.0);
        assert_eq!(cfg.fields[0].detuning_coeff, 0.3);
        assert_eq!(cfg.fields[1].detuning_coeff, -1.5);
        assert_eq!(cfg.mech_modes[0].quality_factor, 17000.0);
        assert_eq!(cfg.cavity_length, 0.01);
    }

    #[test]
    fn missing_temperature_is_validation_error() {
        let mut doc = reference_doc();
        doc.as_object_mut().unwrap().remove("temperature_K");
        match load_config_value(doc, false) {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "temperature_K"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn negative_loss_is_rejected() {
        let mut doc = reference_doc();
        apply_override(&mut doc, "loss_ppm=-1").unwrap();
        match load_config_value(doc, false) {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "loss_ppm"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(load_config("{ nope", false), Err(Error::Parse(_))));
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let mut doc = reference_doc();
        apply_override(&mut doc, "colour=\"blue\"").unwrap();
        apply_override(&mut doc, "squeezers[1].phase=2").unwrap();
        assert!(load_config_value(doc.clone(), false).is_err());
        let mut pruned = doc.clone();
        let dropped = prune_unknown_keys(&mut pruned);
        assert_eq!(dropped, vec!["colour".to_string(), "squeezers[1].phase".to_string()]);
        assert_eq!(load_config_value(doc, true).unwrap(), PhysicalConfig::reference());
    }

    #[test]
    fn overrides_hit_nested_paths() {
        let mut doc = reference_doc();
        apply_override(&mut doc, "squeezers[0].r=0.3").unwrap();
        apply_override(&mut doc, "squeezers[1].theta_rad=1.5").unwrap();
        apply_override(&mut doc, "mech_modes[0].quality_factor=34000").unwrap();
        let cfg = load_config_value(doc.clone(), false).unwrap();
        assert_eq!(cfg.squeezers[0].r(), 0.3);
        assert_eq!(cfg.squeezers[1].angle, 1.5);
        assert_eq!(cfg.mech_modes[0].quality_factor, 34000.0);
        assert!(apply_override(&mut doc, "squeezers[5].r=1").is_err());
        assert!(apply_override(&mut doc, "no_equals").is_err());
    }

    #[test]
    fn document_round_trip() {
        let mut doc = reference_doc();
        apply_override(&mut doc, "squeezers[1]={\"mu\": 2.0, \"theta_rad\": 0.25}").unwrap();
        let cfg = load_config_value(doc, false).unwrap();
        let back = load_config(&cfg.to_canonical_json(), false).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn squeeze_strength_forms() {
        assert_eq!(squeeze_strength(&SqueezerSetting::direct(0.3, 0.0)), 0.3);
        let zero_mu = SqueezerSetting {
            strength: SqueezeStrength::Nonlinear { mu: 0.0, pump_power: 1.1e-3 },
            angle: 0.0,
        };
        assert_eq!(squeeze_strength(&zero_mu), 0.0);
        let mu = 7.5;
        let s = SqueezerSetting {
            strength: SqueezeStrength::Nonlinear { mu, pump_power: 46.24e-6 },
            angle: 0.0,
        };
        assert_eq!(squeeze_strength(&s), mu * 46.24e-6f64.sqrt());
        assert_eq!(
            squeeze_strength(&s),
            squeeze_strength(&SqueezerSetting::direct(mu * 46.24e-6f64.sqrt(), 0.0))
        );
    }

    #[test]
    fn mu_form_defaults_pump_to_field_input_power() {
        let mut doc = reference_doc();
        apply_override(&mut doc, "squeezers[0]={\"mu\": 3.0}").unwrap();
        let cfg = load_config_value(doc, false).unwrap();
        assert_eq!(cfg.squeezers[0].r(), 3.0 * 4.624e-5f64.sqrt());
    }

    #[test]
    fn zero_temperature_has_no_thermal_phonons() {
        let mut cfg = PhysicalConfig::reference();
        cfg.temperature = 0.0;
        cfg.mech_modes.push(MechanicalModeSpec {
            freq_hz: 3.1e5,
            ..Default::default()
        });
        let rates = derive_rates(&cfg).unwrap();
        assert!(rates.occupancy.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn damping_from_quality_factor() {
        let cfg = PhysicalConfig::reference();
        let rates = derive_rates(&cfg).unwrap();
        assert_eq!(rates.mech_damping[0], 2.0 * PI * 1e5 / 17000.0);

        let mut doubled = cfg.clone();
        doubled.mech_modes[0].quality_factor *= 2.0;
        let r2 = derive_rates(&doubled).unwrap();
        assert_eq!(r2.mech_damping[0], rates.mech_damping[0] / 2.0);
    }

    #[test]
    fn occupancy_matches_bose_einstein() {
        // 40-digit evaluation of 1/(exp(ħΩ/kT) - 1) at T = 4 K, Ω = 2π·10⁵ rad/s
        // and at T = 77 K.
        let n4 = thermal_occupancy(2.0 * PI * 1e5, 4.0);
        assert_relative_eq!(n4, 833_464.265_443_882_760_51, max_relative = 1e-12);
        let n77 = thermal_occupancy(2.0 * PI * 1e5, 77.0);
        assert_relative_eq!(n77, 16_044_196.234_792_823_637, max_relative = 1e-12);
    }

    #[test]
    fn reference_rates() {
        let rates = derive_rates(&PhysicalConfig::reference()).unwrap();
        assert_relative_eq!(rates.cavity_decay, 4_309_516.583_749_999, max_relative = 1e-14);
        assert_relative_eq!(rates.couplings[0][0], 2_300_702.736_710_409, max_relative = 1e-12);
        assert_relative_eq!(rates.couplings[1][0], 2_051_040.447_502_982, max_relative = 1e-12);
        assert_relative_eq!(rates.detunings[0], 0.3 * rates.cavity_decay);
        assert_relative_eq!(rates.output_loss, 25e-6);
    }

    #[test]
    fn escape_efficiency_loss_model() {
        let mut v = parse_document(REFERENCE_DOCUMENT).unwrap();
        v["output_loss_model"] = serde_json::json!("escape_efficiency");
        let cfg = load_config_value(v, false).unwrap();
        assert_eq!(cfg.output_loss_model, OutputLossModel::EscapeEfficiency);
        assert_relative_eq!(cfg.output_loss(), 25.0 / 575.0);
    }

    #[test]
    fn zero_transmission_cavity_is_degenerate() {
        let mut cfg = PhysicalConfig::reference();
        cfg.loss_ppm = 0.0;
        cfg.input_transmission_ppm = 0.0;
        assert!(matches!(derive_rates(&cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn occupancy_monotonicity() {
        let om = 2.0 * PI * 1e5;
        let mut last = 0.0;
        for t in [0.01, 0.1, 1.0, 4.0, 77.0, 300.0] {
            let n = thermal_occupancy(om, t);
            assert!(n > last);
            last = n;
        }
        let mut last = f64::INFINITY;
        for f in [1e3, 1e4, 1e5, 1e6] {
            let n = thermal_occupancy(2.0 * PI * f, 4.0);
            assert!(n < last);
            last = n;
        }
    }
}
