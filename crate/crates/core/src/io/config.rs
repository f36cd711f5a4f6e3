//! JSON run configuration. Every physical quantity carries its unit in the key
//! name (`_mhz`, `_us`, `_t`, `_ghz`); unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::program::{Handedness, Timings};
use crate::spectroscopy::FitBounds;
use crate::system::{
    larmor_frequency, Branch, HyperfineCoupling, NuclearSpin, SystemModel, C13_GYROMAGNETIC_MHZ_PER_T,
    REFERENCE_B_FIELD_T, REFERENCE_ELECTRON_SPLITTING_GHZ,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinConfig {
    pub label: String,
    pub a_par_mhz: f64,
    pub a_perp_mhz: f64,
}

fn default_b_field() -> f64 {
    REFERENCE_B_FIELD_T
}
fn default_gyromagnetic() -> f64 {
    C13_GYROMAGNETIC_MHZ_PER_T
}
fn default_splitting() -> f64 {
    REFERENCE_ELECTRON_SPLITTING_GHZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Falls back to `gyromagnetic_mhz_per_t × b_field_t` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_larmor_mhz: Option<f64>,
    #[serde(default = "default_b_field")]
    pub b_field_t: f64,
    #[serde(default = "default_gyromagnetic")]
    pub gyromagnetic_mhz_per_t: f64,
    #[serde(default = "default_splitting")]
    pub electron_splitting_ghz: f64,
    pub spins: Vec<SpinConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_us: f64,
    pub stop_us: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.start_us];
        }
        (0..self.points)
            .map(|k| self.start_us + (self.stop_us - self.start_us) * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceConfig {
    pub n_pulses: usize,
    pub tau_us: f64,
    pub n_init: usize,
    pub tau_prime_us: f64,
    pub handedness: Handedness,
    pub tau_grid: GridConfig,
    pub n_prime_list: Vec<usize>,
    pub ramsey_grid: GridConfig,
    pub echo_grid: GridConfig,
    pub scan_window_us: [f64; 2],
    pub scan_steps: usize,
    pub trace_n_pulses: usize,
    pub trace_tau_us: f64,
    pub trace_initial: Branch,
    pub samples_per_delay: usize,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            n_pulses: 16,
            tau_us: 1.569,
            n_init: 16,
            tau_prime_us: 1.578,
            handedness: Handedness::Positive,
            tau_grid: GridConfig {
                start_us: 0.1,
                stop_us: 3.0,
                points: 1501,
            },
            n_prime_list: (0..=8).map(|k| 8 * k).collect(),
            ramsey_grid: GridConfig {
                start_us: 0.0,
                stop_us: 10.0,
                points: 501,
            },
            echo_grid: GridConfig {
                start_us: 0.0,
                stop_us: 10_000.0,
                points: 51,
            },
            scan_window_us: [1.55, 1.60],
            scan_steps: 51,
            trace_n_pulses: 8,
            trace_tau_us: 0.169,
            trace_initial: Branch::Down,
            samples_per_delay: crate::engine::DEFAULT_SAMPLES_PER_DELAY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Spectrum CSV to fit; defaults to `spectrum.csv` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_csv: Option<String>,
    pub a_par_mhz: [f64; 2],
    pub a_perp_mhz: [f64; 2],
    pub f_larmor_mhz: [f64; 2],
    /// Tie-break target; defaults to `gyromagnetic_mhz_per_t × b_field_t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_f_larmor_mhz: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let b = FitBounds::default();
        Self {
            input_csv: None,
            a_par_mhz: [b.a_par.0, b.a_par.1],
            a_perp_mhz: [b.a_perp.0, b.a_perp.1],
            f_larmor_mhz: [b.f_larmor.0, b.f_larmor.1],
            reference_f_larmor_mhz: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub shots: usize,
    pub mean_bright_counts: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    pub system: SystemModel,
    /// Provenance notes for values that were derived rather than given.
    pub notes: Vec<String>,
}

impl ResolvedConfig {
    pub fn timings(&self) -> Timings {
        let s = &self.config.sequence;
        Timings {
            tau_init_us: s.tau_us,
            n_init: s.n_init,
            tau_prime_us: s.tau_prime_us,
            handedness: s.handedness,
        }
    }

    pub fn fit_bounds(&self) -> FitBounds {
        let f = &self.config.fit;
        FitBounds {
            a_par: (f.a_par_mhz[0], f.a_par_mhz[1]),
            a_perp: (f.a_perp_mhz[0], f.a_perp_mhz[1]),
            f_larmor: (f.f_larmor_mhz[0], f.f_larmor_mhz[1]),
            reference_f_larmor: Some(f.reference_f_larmor_mhz.unwrap_or_else(|| self.system.field_larmor())),
        }
    }

    /// Resolved configuration as compact JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.config).unwrap_or_default()
    }
}

const UNIT_SUFFIXES: [&str; 5] = ["_mhz", "_us", "_t", "_ghz", "_mhz_per_t"];

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Rewrites serde's unknown-field message when the key is a known key with
/// its unit suffix dropped.
fn explain(message: String) -> String {
    let Some(rest) = message.strip_prefix("unknown field `") else {
        return message;
    };
    let Some((field, expected)) = rest.split_once('`') else {
        return message;
    };
    for suffix in UNIT_SUFFIXES {
        let candidate = format!("`{field}{suffix}`");
        if expected.contains(&candidate) {
            return format!("missing unit suffix: `{field}` should be {candidate}");
        }
    }
    message
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_error(path, format!("must be positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(config_error(path, format!("must be non-negative, got {v}")))
    }
}

fn multiple_of_8(path: &str, n: usize, allow_zero: bool) -> Result<()> {
    if n.is_multiple_of(8) && (allow_zero || n > 0) {
        Ok(())
    } else {
        Err(config_error(path, format!("must be a positive multiple of 8, got {n}")))
    }
}

fn check_grid(path: &str, g: &GridConfig, strictly_positive: bool) -> Result<()> {
    if strictly_positive {
        positive(&format!("{path}.start_us"), g.start_us)?;
    } else {
        non_negative(&format!("{path}.start_us"), g.start_us)?;
    }
    if !(g.stop_us.is_finite() && g.stop_us >= g.start_us) {
        return Err(config_error(format!("{path}.stop_us"), "must be finite and not below start_us"));
    }
    if g.points == 0 {
        return Err(config_error(format!("{path}.points"), "must be at least 1"));
    }
    Ok(())
}

fn check_range(path: &str, r: [f64; 2]) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(config_error(path, format!("[{}, {}] is not a finite interval", r[0], r[1])))
    }
}

pub fn parse_config(document: &str) -> Result<ResolvedConfig> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(path, explain(e.into_inner().to_string()))
    })?;

    let sys = &config.system;
    non_negative("system.b_field_t", sys.b_field_t)?;
    positive("system.gyromagnetic_mhz_per_t", sys.gyromagnetic_mhz_per_t)?;
    non_negative("system.electron_splitting_ghz", sys.electron_splitting_ghz)?;
    if sys.spins.is_empty() {
        return Err(config_error("system.spins", "at least one nuclear spin is required"));
    }
    let mut spins = Vec::with_capacity(sys.spins.len());
    for (i, s) in sys.spins.iter().enumerate() {
        let hf = HyperfineCoupling::new(s.a_par_mhz, s.a_perp_mhz)
            .map_err(|e| config_error(format!("system.spins[{i}]"), e.to_string()))?;
        spins.push(NuclearSpin::new(s.label.clone(), hf));
    }
    let mut notes = Vec::new();
    let f_larmor = match sys.f_larmor_mhz {
        Some(f) => {
            positive("system.f_larmor_mhz", f)?;
            f
        }
        None => {
            let f = larmor_frequency(sys.b_field_t, sys.gyromagnetic_mhz_per_t)
                .map_err(|e| config_error("system.b_field_t", e.to_string()))?;
            positive("system.f_larmor_mhz", f)?;
            notes.push(format!(
                "f_larmor_mhz defaulted to gyromagnetic_mhz_per_t x b_field_t = {} x {} = {f} MHz",
                sys.gyromagnetic_mhz_per_t, sys.b_field_t
            ));
            f
        }
    };
    let mut system =
        SystemModel::new(f_larmor, spins).map_err(|e| config_error("system.spins", e.to_string()))?;
    system.b_field_t = sys.b_field_t;
    system.gyromagnetic_mhz_per_t = sys.gyromagnetic_mhz_per_t;
    system.electron_splitting_ghz = sys.electron_splitting_ghz;
    config.system.f_larmor_mhz = Some(f_larmor);

    let seq = &config.sequence;
    multiple_of_8("sequence.n_pulses", seq.n_pulses, false)?;
    multiple_of_8("sequence.n_init", seq.n_init, false)?;
    multiple_of_8("sequence.trace_n_pulses", seq.trace_n_pulses, false)?;
    for (i, &n) in seq.n_prime_list.iter().enumerate() {
        multiple_of_8(&format!("sequence.n_prime_list[{i}]"), n, true)?;
    }
    positive("sequence.tau_us", seq.tau_us)?;
    positive("sequence.tau_prime_us", seq.tau_prime_us)?;
    positive("sequence.trace_tau_us", seq.trace_tau_us)?;
    check_grid("sequence.tau_grid", &seq.tau_grid, true)?;
    check_grid("sequence.ramsey_grid", &seq.ramsey_grid, false)?;
    check_grid("sequence.echo_grid", &seq.echo_grid, false)?;
    positive("sequence.scan_window_us[0]", seq.scan_window_us[0])?;
    check_range("sequence.scan_window_us", seq.scan_window_us)?;
    if seq.scan_steps < 3 && seq.scan_window_us[0] != seq.scan_window_us[1] {
        return Err(config_error("sequence.scan_steps", "must be at least 3"));
    }
    if seq.samples_per_delay == 0 {
        return Err(config_error("sequence.samples_per_delay", "must be at least 1"));
    }

    let fit = &config.fit;
    check_range("fit.a_par_mhz", fit.a_par_mhz)?;
    check_range("fit.a_perp_mhz", fit.a_perp_mhz)?;
    non_negative("fit.a_perp_mhz[0]", fit.a_perp_mhz[0])?;
    check_range("fit.f_larmor_mhz", fit.f_larmor_mhz)?;
    positive("fit.f_larmor_mhz[0]", fit.f_larmor_mhz[0])?;
    if let Some(f) = fit.reference_f_larmor_mhz {
        positive("fit.reference_f_larmor_mhz", f)?;
    }

    if let Some(mc) = &config.monte_carlo {
        if mc.shots == 0 {
            return Err(config_error("monte_carlo.shots", "must be at least 1"));
        }
        positive("monte_carlo.mean_bright_counts", mc.mean_bright_counts)?;
    }

    Ok(ResolvedConfig { config, system, notes })
}
