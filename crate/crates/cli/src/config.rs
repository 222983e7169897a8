//! Run configuration: subcommand, per-subcommand parameters and sweeps.

use std::fmt;
use std::path::PathBuf;

use gaugelink_core::contact::{OddDerivative, SpinContactCouplings};
use gaugelink_core::doublewell::DoubleWellParams;
use gaugelink_core::fourlevel::{self, Tuning};
use gaugelink_core::lattice::{Branch, InitialState, LatticeConfig, Solver};
use gaugelink_core::meanfield::{GridSpec, MeanFieldConfig, PhaseConvention, Pulse, PulseSign};
use gaugelink_core::tdse::{ImpurityMode, Scenario, TdseOptions};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Spectrum,
    Fourlevel,
    Tdse,
    LatticeSpectrum,
    LatticeQuench,
    Josephson,
    Meanfield,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Fourlevel => "fourlevel",
            Subcommand::Tdse => "tdse",
            Subcommand::LatticeSpectrum => "lattice-spectrum",
            Subcommand::LatticeQuench => "lattice-quench",
            Subcommand::Josephson => "josephson",
            Subcommand::Meanfield => "meanfield",
        }
    }

    pub fn all() -> [Subcommand; 7] {
        use Subcommand::*;
        [Spectrum, Fourlevel, Tdse, LatticeSpectrum, LatticeQuench, Josephson, Meanfield]
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Parameter path, dotted for nested keys (`well.delta`).
    pub key: String,
    pub values: Vec<Value>,
}

/// The document read from `--config`, before parameter validation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub subcommand: Option<Subcommand>,
    #[serde(default)]
    pub parameters: Option<Value>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A validated run: parameters with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub parameters: Value,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    pub output_dir: PathBuf,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse { line: usize, column: usize, message: String },
    Invalid { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse { line, column, message } => {
                write!(f, "parse error at line {line}, column {column}: {message}")
            }
            ConfigError::Invalid { key, message } => write!(f, "invalid `{key}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

/// Pulls the offending key out of serde's "unknown field `x`" and "missing field `x`" texts.
fn serde_invalid(prefix: &str, err: serde_json::Error) -> ConfigError {
    let text = err.to_string();
    let key = text
        .split('`')
        .nth(1)
        .filter(|_| text.contains("field"))
        .map(|k| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") })
        .unwrap_or_else(|| prefix.to_string());
    invalid(&key, text)
}

/// Double-well geometry; `d_L` follows from continuity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellSpec {
    pub d_r: f64,
    pub r: f64,
    pub delta: f64,
}

impl WellSpec {
    pub fn reference() -> Self {
        WellSpec {
            d_r: 2.0,
            r: 1.0,
            delta: 0.5,
        }
    }

    pub fn params(&self) -> Result<DoubleWellParams, ConfigError> {
        DoubleWellParams::from_geometry(self.d_r, self.r, self.delta).map_err(|e| invalid("well", e.to_string()))
    }
}

impl Default for WellSpec {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    pub well: WellSpec,
    pub n_levels: usize,
    /// Static-impurity contact strengths; both zero gives the bare well.
    pub g_e: f64,
    pub g_o: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            well: WellSpec::reference(),
            n_levels: 4,
            g_e: 0.0,
            g_o: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourLevelParams {
    pub well: WellSpec,
    pub couplings: SpinContactCouplings,
    pub tuning: Tuning,
    pub t_final: f64,
    pub dt_out: f64,
}

impl Default for FourLevelParams {
    fn default() -> Self {
        FourLevelParams {
            well: WellSpec::reference(),
            couplings: fourlevel::green_couplings(),
            tuning: Tuning::Shifted,
            t_final: 400.0,
            dt_out: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TdseParams {
    pub initial_well: WellSpec,
    pub evolve_well: WellSpec,
    pub couplings: SpinContactCouplings,
    pub mass_ratio: f64,
    pub impurity: ImpurityMode,
    /// Drive frequency; `null` tunes to the shifted resonance.
    pub omega_r: Option<f64>,
    pub n_particle_basis: usize,
    pub n_impurity_basis: usize,
    pub odd_derivative: OddDerivative,
    pub t_final: f64,
    pub options: TdseOptions,
}

impl Default for TdseParams {
    fn default() -> Self {
        let s = Scenario::static_reference();
        TdseParams {
            initial_well: WellSpec::reference(),
            evolve_well: WellSpec::reference(),
            couplings: s.couplings,
            mass_ratio: s.mass_ratio,
            impurity: s.impurity,
            omega_r: None,
            n_particle_basis: s.n_particle_basis,
            n_impurity_basis: s.n_impurity_basis,
            odd_derivative: s.odd_derivative,
            t_final: 150.0,
            options: TdseOptions {
                dt_out: 0.5,
                ..Default::default()
            },
        }
    }
}

impl TdseParams {
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        Ok(Scenario {
            initial_well: self.initial_well.params()?,
            evolve_well: self.evolve_well.params()?,
            couplings: self.couplings,
            mass_ratio: self.mass_ratio,
            impurity: self.impurity,
            omega_r: self.omega_r.unwrap_or(f64::NAN),
            n_particle_basis: self.n_particle_basis,
            n_impurity_basis: self.n_impurity_basis,
            odd_derivative: self.odd_derivative,
        })
    }

}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSpectrumParams {
    pub lattice: LatticeConfig,
    pub n_levels: usize,
    pub solver: Solver,
}

impl Default for LatticeSpectrumParams {
    fn default() -> Self {
        LatticeSpectrumParams {
            lattice: LatticeConfig::new(6, true, 1.0, 0.0),
            n_levels: 3,
            solver: Solver::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeQuenchParams {
    pub lattice: LatticeConfig,
    pub initial: InitialState,
    pub t_final: f64,
    pub dt_out: f64,
    pub solver: Solver,
}

impl Default for LatticeQuenchParams {
    fn default() -> Self {
        LatticeQuenchParams {
            lattice: LatticeConfig::new(6, true, 1.0, 1.0),
            initial: InitialState::GPlus,
            t_final: 50.0,
            dt_out: 0.05,
            solver: Solver::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JosephsonParams {
    pub particle_numbers: Vec<usize>,
    pub theta: f64,
    pub j_z: f64,
    pub branch: Branch,
}

impl Default for JosephsonParams {
    fn default() -> Self {
        JosephsonParams {
            particle_numbers: vec![4, 8, 16, 32, 64],
            theta: 0.0,
            j_z: 1.0,
            branch: Branch::Plus,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeanFieldParams {
    pub n_particles: usize,
    pub g: f64,
    pub well: WellSpec,
    pub couplings: SpinContactCouplings,
    pub grid: GridSpec,
    pub tol: f64,
    pub phase: PhaseConvention,
    pub pulse: Pulse,
    pub t_final: f64,
    pub dt_out: f64,
}

impl Default for MeanFieldParams {
    fn default() -> Self {
        let c = MeanFieldConfig::condensate_reference();
        MeanFieldParams {
            n_particles: c.n_particles,
            g: c.g,
            well: WellSpec::reference(),
            couplings: c.couplings,
            grid: c.grid,
            tol: c.tol,
            phase: c.phase,
            pulse: Pulse::Compensating { sign: PulseSign::Verbatim },
            t_final: 150.0,
            dt_out: 0.5,
        }
    }
}

impl MeanFieldParams {
    pub fn config(&self) -> Result<MeanFieldConfig, ConfigError> {
        let c = MeanFieldConfig {
            n_particles: self.n_particles,
            g: self.g,
            well: self.well.params()?,
            couplings: self.couplings,
            grid: self.grid,
            tol: self.tol,
            phase: self.phase,
        };
        c.validate().map_err(|e| invalid("parameters", e.to_string()))?;
        Ok(c)
    }
}

/// Parameters of one subcommand after defaults and validation.
#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Spectrum(SpectrumParams),
    Fourlevel(FourLevelParams),
    Tdse(TdseParams),
    LatticeSpectrum(LatticeSpectrumParams),
    LatticeQuench(LatticeQuenchParams),
    Josephson(JosephsonParams),
    Meanfield(MeanFieldParams),
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn time_grid(t_final: f64, dt_out: f64) -> Result<(), ConfigError> {
    positive("t_final", t_final)?;
    positive("dt_out", dt_out)?;
    if dt_out > t_final {
        return Err(invalid("dt_out", "must not exceed t_final"));
    }
    Ok(())
}

impl Params {
    pub fn defaults(sub: Subcommand) -> Params {
        match sub {
            Subcommand::Spectrum => Params::Spectrum(Default::default()),
            Subcommand::Fourlevel => Params::Fourlevel(Default::default()),
            Subcommand::Tdse => Params::Tdse(Default::default()),
            Subcommand::LatticeSpectrum => Params::LatticeSpectrum(Default::default()),
            Subcommand::LatticeQuench => Params::LatticeQuench(Default::default()),
            Subcommand::Josephson => Params::Josephson(Default::default()),
            Subcommand::Meanfield => Params::Meanfield(Default::default()),
        }
    }

    pub fn from_value(sub: Subcommand, v: &Value) -> Result<Params, ConfigError> {
        fn de<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T, ConfigError> {
            serde_json::from_value(v.clone()).map_err(|e| serde_invalid("parameters", e))
        }
        let p = match sub {
            Subcommand::Spectrum => Params::Spectrum(de(v)?),
            Subcommand::Fourlevel => Params::Fourlevel(de(v)?),
            Subcommand::Tdse => Params::Tdse(de(v)?),
            Subcommand::LatticeSpectrum => Params::LatticeSpectrum(de(v)?),
            Subcommand::LatticeQuench => Params::LatticeQuench(de(v)?),
            Subcommand::Josephson => Params::Josephson(de(v)?),
            Subcommand::Meanfield => Params::Meanfield(de(v)?),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            Params::Spectrum(p) => serde_json::to_value(p),
            Params::Fourlevel(p) => serde_json::to_value(p),
            Params::Tdse(p) => serde_json::to_value(p),
            Params::LatticeSpectrum(p) => serde_json::to_value(p),
            Params::LatticeQuench(p) => serde_json::to_value(p),
            Params::Josephson(p) => serde_json::to_value(p),
            Params::Meanfield(p) => serde_json::to_value(p),
        };
        v.expect("parameter types serialize")
    }

    /// Checks every physical value against the module invariants without running anything heavy.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Params::Spectrum(p) => {
                p.well.params()?;
                if p.n_levels == 0 || p.n_levels > gaugelink_core::doublewell::MAX_LEVELS {
                    return Err(invalid("n_levels", format!("must be in 1..={}", gaugelink_core::doublewell::MAX_LEVELS)));
                }
                if !(p.g_e.is_finite() && p.g_o.is_finite()) {
                    return Err(invalid("g_e", "couplings must be finite"));
                }
            }
            Params::Fourlevel(p) => {
                p.well.params()?;
                if !p.couplings.is_finite() {
                    return Err(invalid("couplings", "must be finite"));
                }
                if let Tuning::Fixed(w) = p.tuning {
                    positive("tuning.fixed", w)?;
                }
                time_grid(p.t_final, p.dt_out)?;
            }
            Params::Tdse(p) => {
                p.scenario()?;
                if !p.couplings.is_finite() {
                    return Err(invalid("couplings", "must be finite"));
                }
                positive("mass_ratio", p.mass_ratio)?;
                if let Some(w) = p.omega_r {
                    positive("omega_r", w)?;
                }
                if p.n_particle_basis < 2 || p.n_particle_basis > gaugelink_core::doublewell::MAX_LEVELS {
                    return Err(invalid("n_particle_basis", "must be in 2..=40"));
                }
                if p.n_impurity_basis == 0 {
                    return Err(invalid("n_impurity_basis", "must be at least 1"));
                }
                p.impurity.basis_frequency().map_err(|e| invalid("impurity", e.to_string()))?;
                time_grid(p.t_final, p.options.dt_out)?;
                positive("options.rtol", p.options.rtol)?;
                positive("options.atol", p.options.atol)?;
            }
            Params::LatticeSpectrum(p) => {
                p.lattice.validate().map_err(|e| invalid("lattice", e.to_string()))?;
                if p.n_levels == 0 {
                    return Err(invalid("n_levels", "must be at least 1"));
                }
            }
            Params::LatticeQuench(p) => {
                p.lattice.validate().map_err(|e| invalid("lattice", e.to_string()))?;
                time_grid(p.t_final, p.dt_out)?;
            }
            Params::Josephson(p) => {
                if p.particle_numbers.is_empty() {
                    return Err(invalid("particle_numbers", "must not be empty"));
                }
                if let Some(n) = p.particle_numbers.iter().find(|&&n| n == 0 || n % 2 != 0 || n > 128) {
                    return Err(invalid("particle_numbers", format!("{n} must be even and in 2..=128")));
                }
                if !(p.j_z.is_finite() && p.j_z != 0.0) {
                    return Err(invalid("j_z", "must be finite and non-zero"));
                }
                if !p.theta.is_finite() {
                    return Err(invalid("theta", "must be finite"));
                }
            }
            Params::Meanfield(p) => {
                p.config()?;
                if let Pulse::Constant { omega } = p.pulse {
                    if !omega.is_finite() {
                        return Err(invalid("pulse.omega", "must be finite"));
                    }
                }
                time_grid(p.t_final, p.dt_out)?;
            }
        }
        Ok(())
    }
}

fn parse_error(err: serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Reads and validates a config document. `cli_sub` wins only when the document names none.
pub fn parse_config_str(text: &str, cli_sub: Option<Subcommand>) -> Result<RunConfig, ConfigError> {
    // syntax first, so malformed documents report a position
    let doc: Value = serde_json::from_str(text).map_err(parse_error)?;
    let raw: RawConfig = serde_json::from_value(doc).map_err(|e| serde_invalid("", e))?;
    let sub = match (raw.subcommand, cli_sub) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid("subcommand", format!("config names `{a}` but `{b}` was requested")));
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(invalid("subcommand", "missing")),
    };
    let params = match raw.parameters {
        None => Params::defaults(sub),
        Some(Value::Null) => Params::defaults(sub),
        Some(v) if v.is_object() => Params::from_value(sub, &v)?,
        Some(_) => return Err(invalid("parameters", "must be an object")),
    };
    let filled = params.to_value();
    for axis in &raw.sweep {
        if axis.values.is_empty() {
            return Err(invalid(&format!("sweep.{}", axis.key), "no values"));
        }
        for v in &axis.values {
            let mut trial = filled.clone();
            set_path(&mut trial, &axis.key, v.clone())?;
            Params::from_value(sub, &trial)?;
        }
    }
    Ok(RunConfig {
        subcommand: sub,
        parameters: filled,
        sweep: raw.sweep,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("output")),
    })
}

pub fn parse_config(path: &std::path::Path, cli_sub: Option<Subcommand>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, cli_sub)
}

/// Sets a dotted key, refusing keys that the defaults do not already contain.
pub fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| invalid(key, "sweep key does not name a parameter"))?;
        if i + 1 == parts.len() {
            if !obj.contains_key(*part) {
                return Err(invalid(key, "unknown sweep key"));
            }
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.get_mut(*part).ok_or_else(|| invalid(key, "unknown sweep key"))?;
    }
    unreachable!("split yields at least one part")
}

/// One concrete parameter set of a run, labelled by its swept values.
#[derive(Clone, Debug)]
pub struct Entry {
    pub label: Vec<(String, Value)>,
    pub params: Params,
}

impl Entry {
    /// `key=value` pieces joined by `_`, empty for unswept runs.
    pub fn suffix(&self) -> String {
        self.label
            .iter()
            .map(|(k, v)| format!("{k}={}", value_text(v)))
            .collect::<Vec<_>>()
            .join("_")
    }
}

pub fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl RunConfig {
    /// Cartesian product of the sweep axes, first axis slowest.
    pub fn entries(&self) -> Result<Vec<Entry>, ConfigError> {
        let mut docs = vec![(Vec::new(), self.parameters.clone())];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(docs.len() * axis.values.len());
            for (label, doc) in &docs {
                for v in &axis.values {
                    let mut d = doc.clone();
                    set_path(&mut d, &axis.key, v.clone())?;
                    let mut l: Vec<(String, Value)> = label.clone();
                    l.push((axis.key.clone(), v.clone()));
                    next.push((l, d));
                }
            }
            docs = next;
        }
        docs.into_iter()
            .map(|(label, d)| {
                Ok(Entry {
                    label,
                    params: Params::from_value(self.subcommand, &d)?,
                })
            })
            .collect()
    }
}
