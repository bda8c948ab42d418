//! Per-subcommand options.
//!
//! Every option is an `Option` so that flags, a JSON config file and
//! defaults can be layered: flags win over the file, the file wins over
//! defaults. The fully resolved options are what the manifest records, and a
//! manifest is itself a valid config file.

use std::path::Path;

use clap::Args;
use helson::{Alpha, EntryDistribution, PatternMap};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ConfigError;

/// Options that can be layered and then completed with defaults.
pub trait Layered: Serialize + DeserializeOwned + Default {
    fn fill_defaults(&mut self);
}

/// Overlays `cli` onto the `config` object of `file` (or the whole file when
/// it is not a manifest) and fills defaults.
pub fn resolve<T: Layered>(subcommand: &str, cli: &T, file: Option<&Path>) -> Result<T, ConfigError> {
    let mut base = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError(format!("config {} is not valid JSON: {e}", path.display())))?;
            config_object(subcommand, v)?
        }
        None => serde_json::Map::new(),
    };
    let overlay = match serde_json::to_value(cli).expect("options serialize") {
        Value::Object(m) => m,
        _ => unreachable!("options are a struct"),
    };
    base.extend(overlay);
    let mut merged: T = serde_json::from_value(Value::Object(base))
        .map_err(|e| ConfigError(format!("invalid config for `{subcommand}`: {e}")))?;
    merged.fill_defaults();
    Ok(merged)
}

fn config_object(subcommand: &str, v: Value) -> Result<serde_json::Map<String, Value>, ConfigError> {
    let Value::Object(mut obj) = v else {
        return Err(ConfigError("config file must hold a JSON object".into()));
    };
    if let Some(sub) = obj.get("subcommand") {
        if sub.as_str() != Some(subcommand) {
            return Err(ConfigError(format!(
                "config file is for subcommand {sub}, not `{subcommand}`"
            )));
        }
        return match obj.remove("config") {
            Some(Value::Object(c)) => Ok(c),
            _ => Err(ConfigError("manifest has no `config` object".into())),
        };
    }
    Ok(obj)
}

fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| ConfigError(format!("missing required option --{name}")))
}

pub fn parse_map(kind: &str, alpha: Option<&str>, alpha_irrational: bool) -> Result<PatternMap, ConfigError> {
    let map = match kind {
        "mul" | "helson" => PatternMap::Mul,
        "additive" | "hankel" => PatternMap::Additive,
        "salpha" => {
            let a = alpha.ok_or_else(|| ConfigError("--map salpha needs --alpha".into()))?;
            let alpha = if alpha_irrational {
                let v: f64 = a
                    .parse()
                    .map_err(|_| ConfigError(format!("--alpha {a:?} is not a number")))?;
                Alpha::irrational(v)
            } else {
                Alpha::parse_decimal(a)
            }
            .map_err(|e| ConfigError(e.to_string()))?;
            PatternMap::SAlpha(alpha)
        }
        other => {
            return Err(ConfigError(format!(
                "unknown map {other:?}; expected mul, salpha or additive"
            )))
        }
    };
    if alpha.is_some() && !matches!(map, PatternMap::SAlpha(_)) {
        return Err(ConfigError(format!("--alpha only applies to --map salpha, not {kind}")));
    }
    Ok(map)
}

pub fn parse_dist(kind: &str, eps0: Option<f64>, trunc_u: Option<f64>) -> Result<EntryDistribution, ConfigError> {
    let base = match kind {
        "gaussian" => EntryDistribution::Gaussian,
        "rademacher" => EntryDistribution::Rademacher,
        "uniform" => EntryDistribution::Uniform,
        "heavytail" | "heavy-tail" => EntryDistribution::HeavyTail {
            eps0: eps0.ok_or_else(|| ConfigError("--dist heavytail needs --eps0".into()))?,
        },
        other => {
            return Err(ConfigError(format!(
                "unknown distribution {other:?}; expected gaussian, rademacher, uniform or heavytail"
            )))
        }
    };
    if eps0.is_some() && !matches!(base, EntryDistribution::HeavyTail { .. }) {
        return Err(ConfigError("--eps0 only applies to --dist heavytail".into()));
    }
    let dist = match trunc_u {
        Some(u) => base.truncated(u),
        None => base,
    };
    dist.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(dist)
}

fn nonempty<T>(v: &[T], name: &str) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(ConfigError(format!("--{name} must not be empty")))
    } else {
        Ok(())
    }
}

/// Output formats to emit; the manifest is always written.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

pub fn parse_formats(list: &[String]) -> Result<Formats, ConfigError> {
    let mut f = Formats::default();
    for s in list {
        match s.as_str() {
            "csv" => f.csv = true,
            "json" => f.json = true,
            "svg" => f.svg = true,
            other => return Err(ConfigError(format!("unknown format {other:?}; expected csv, json or svg"))),
        }
    }
    Ok(f)
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into(), "svg".into()]
}

macro_rules! default {
    ($field:expr, $value:expr) => {
        if $field.is_none() {
            $field = Some($value);
        }
    };
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// Pattern map: mul, salpha or additive.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map: Option<String>,
    /// Coefficient for salpha, as a decimal.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<String>,
    /// Treat --alpha as an irrational value.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_irrational: Option<bool>,
    /// Entry distribution: gaussian, rademacher, uniform or heavytail.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dist: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps0: Option<f64>,
    /// Truncate and restandardize entries at this level.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trunc_u: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bins: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hi: Option<f64>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for SimulateArgs {
    fn fill_defaults(&mut self) {
        default!(self.map, "mul".into());
        default!(self.alpha_irrational, false);
        default!(self.dist, "gaussian".into());
        default!(self.n, 200);
        default!(self.reps, 4);
        default!(self.seed, 0);
        default!(self.bins, 50);
        default!(self.lo, -2.5);
        default!(self.hi, 2.5);
        default!(self.formats, default_formats());
    }
}

/// Validated simulate options.
pub struct Simulate {
    pub map: PatternMap,
    pub dist: EntryDistribution,
    pub n: u64,
    pub reps: usize,
    pub seed: u64,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    pub formats: Formats,
}

impl SimulateArgs {
    pub fn validate(&self) -> Result<Simulate, ConfigError> {
        let reps = need(&self.reps, "reps")?;
        if reps == 0 {
            return Err(ConfigError("--reps must be positive".into()));
        }
        let (lo, hi) = (need(&self.lo, "lo")?, need(&self.hi, "hi")?);
        if !(lo < hi) {
            return Err(ConfigError(format!("need --lo < --hi, got {lo} and {hi}")));
        }
        let bins = need(&self.bins, "bins")?;
        if bins == 0 {
            return Err(ConfigError("--bins must be positive".into()));
        }
        Ok(Simulate {
            map: parse_map(&need(&self.map, "map")?, self.alpha.as_deref(), self.alpha_irrational == Some(true))?,
            dist: parse_dist(&need(&self.dist, "dist")?, self.eps0, self.trunc_u)?,
            n: need(&self.n, "n")?,
            reps,
            seed: need(&self.seed, "seed")?,
            bins,
            lo,
            hi,
            formats: parse_formats(&need(&self.formats, "formats")?)?,
        })
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_irrational: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dist: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trunc_u: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_grid: Option<Vec<u64>>,
    /// Moment orders.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<Vec<u32>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bins: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for MomentsArgs {
    fn fill_defaults(&mut self) {
        default!(self.map, "mul".into());
        default!(self.alpha_irrational, false);
        default!(self.dist, "gaussian".into());
        default!(self.n_grid, vec![50, 100, 200]);
        default!(self.r, vec![2, 3, 4]);
        default!(self.reps, 8);
        default!(self.seed, 0);
        default!(self.bins, 50);
        default!(self.formats, default_formats());
    }
}

pub struct Moments {
    pub map: PatternMap,
    pub dist: EntryDistribution,
    pub n_grid: Vec<u64>,
    pub r: Vec<u32>,
    pub reps: usize,
    pub seed: u64,
    pub bins: usize,
    pub formats: Formats,
}

impl MomentsArgs {
    pub fn validate(&self) -> Result<Moments, ConfigError> {
        let n_grid = need(&self.n_grid, "n-grid")?;
        nonempty(&n_grid, "n-grid")?;
        let r = need(&self.r, "r")?;
        nonempty(&r, "r")?;
        let reps = need(&self.reps, "reps")?;
        if reps < 8 {
            return Err(ConfigError("--reps must be at least 8 for the variance table".into()));
        }
        let bins = need(&self.bins, "bins")?;
        if bins == 0 {
            return Err(ConfigError("--bins must be positive".into()));
        }
        Ok(Moments {
            map: parse_map(&need(&self.map, "map")?, self.alpha.as_deref(), self.alpha_irrational == Some(true))?,
            dist: parse_dist(&need(&self.dist, "dist")?, self.eps0, self.trunc_u)?,
            n_grid,
            r,
            reps,
            seed: need(&self.seed, "seed")?,
            bins,
            formats: parse_formats(&need(&self.formats, "formats")?)?,
        })
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternCheckArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_irrational: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for PatternCheckArgs {
    fn fill_defaults(&mut self) {
        default!(self.map, "mul".into());
        default!(self.alpha_irrational, false);
        default!(self.n_grid, vec![20, 40, 80]);
        default!(self.formats, default_formats());
    }
}

pub struct PatternCheck {
    pub map: PatternMap,
    pub n_grid: Vec<u64>,
    pub formats: Formats,
}

impl PatternCheckArgs {
    pub fn validate(&self) -> Result<PatternCheck, ConfigError> {
        let n_grid = need(&self.n_grid, "n-grid")?;
        if n_grid.len() < 2 {
            return Err(ConfigError("--n-grid needs at least two sizes for the trend".into()));
        }
        Ok(PatternCheck {
            map: parse_map(&need(&self.map, "map")?, self.alpha.as_deref(), self.alpha_irrational == Some(true))?,
            n_grid,
            formats: parse_formats(&need(&self.formats, "formats")?)?,
        })
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordsArgs {
    /// Enumerate all partition words of length 2k.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    /// Classify these words instead of enumerating.
    #[arg(long, num_args = 1..)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub word: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for WordsArgs {
    fn fill_defaults(&mut self) {
        if self.word.is_none() {
            default!(self.k, 3);
        }
        default!(self.formats, default_formats());
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitsArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub word: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_irrational: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_grid: Option<Vec<u64>>,
    /// solver or brute.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for CircuitsArgs {
    fn fill_defaults(&mut self) {
        default!(self.map, "mul".into());
        default!(self.alpha_irrational, false);
        default!(self.n_grid, vec![4, 8, 16]);
        default!(self.mode, "solver".into());
        default!(self.formats, default_formats());
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumtheoryArgs {
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for NumtheoryArgs {
    fn fill_defaults(&mut self) {
        default!(self.n_grid, vec![16, 32, 64, 128, 256]);
        default!(self.eps, 0.5);
        default!(self.formats, default_formats());
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha_irrational: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dist: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub u_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formats: Option<Vec<String>>,
}

impl Layered for TruncationArgs {
    fn fill_defaults(&mut self) {
        default!(self.map, "mul".into());
        default!(self.alpha_irrational, false);
        default!(self.dist, "heavytail".into());
        if self.dist.as_deref() == Some("heavytail") {
            default!(self.eps0, 0.5);
        }
        default!(self.u_grid, vec![5.0, 10.0, 20.0, 40.0]);
        default!(self.n_grid, vec![200]);
        default!(self.reps, 4);
        default!(self.seed, 0);
        default!(self.formats, vec!["csv".into(), "json".into()]);
    }
}

pub struct Truncation {
    pub map: PatternMap,
    pub dist: EntryDistribution,
    pub u_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    pub formats: Formats,
}

impl TruncationArgs {
    pub fn validate(&self) -> Result<Truncation, ConfigError> {
        let u_grid = need(&self.u_grid, "u-grid")?;
        nonempty(&u_grid, "u-grid")?;
        if let Some(u) = u_grid.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
            return Err(ConfigError(format!("--u-grid values must be positive, got {u}")));
        }
        let n_grid = need(&self.n_grid, "n-grid")?;
        nonempty(&n_grid, "n-grid")?;
        let reps = need(&self.reps, "reps")?;
        if reps == 0 {
            return Err(ConfigError("--reps must be positive".into()));
        }
        Ok(Truncation {
            map: parse_map(&need(&self.map, "map")?, self.alpha.as_deref(), self.alpha_irrational == Some(true))?,
            dist: parse_dist(&need(&self.dist, "dist")?, self.eps0, None)?,
            u_grid,
            n_grid,
            reps,
            seed: need(&self.seed, "seed")?,
            formats: parse_formats(&need(&self.formats, "formats")?)?,
        })
    }
}

pub fn formats_of(list: &Option<Vec<String>>) -> Result<Formats, ConfigError> {
    parse_formats(&need(list, "formats")?)
}

pub fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T, ConfigError> {
    need(v, name)
}
