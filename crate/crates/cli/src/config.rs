//! Flat JSON run configuration. Unknown keys are rejected and every error names its field.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError { field: field.into(), reason: reason.into() }
}

/// A value that may be given as the string "auto".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: Serialize> Serialize for Auto<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => v.serialize(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFamily {
    Zero,
    Gauge,
    Stable,
    Mixed,
    Random,
    Mode,
    Exact,
    Gaussian,
}

impl DataFamily {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "zero" => DataFamily::Zero,
            "gauge" => DataFamily::Gauge,
            "stable" => DataFamily::Stable,
            "mixed" => DataFamily::Mixed,
            "random" => DataFamily::Random,
            "mode" => DataFamily::Mode,
            "exact" => DataFamily::Exact,
            "gaussian" => DataFamily::Gaussian,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub p: u32,
    pub k: Auto<usize>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_coarse")]
    pub n_coarse: Option<usize>,
    #[serde(rename = "T")]
    pub t_blowup: f64,
    pub h: f64,
    pub tau_max: f64,
    pub delta: Auto<f64>,
    /// None selects the subcommand's default family.
    pub data: Option<DataFamily>,
    /// Eigenmode label for data = "mode", e.g. "1+" or "0-".
    pub mode: Option<String>,
    pub amplitude: Option<f64>,
    pub data_path: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub tol: f64,
    pub max_iter: usize,
    pub pairs: usize,
    pub dr: f64,
    pub r_margin: f64,
    pub r_max: f64,
    pub t_limit: f64,
    pub tau_window: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub snapshot_every: usize,
}

pub const KEYS: &[&str] = &[
    "p", "k", "N", "N_coarse", "T", "h", "tau_max", "delta", "data", "mode", "amplitude", "data_path", "seed",
    "out_dir", "tol", "max_iter", "pairs", "dr", "r_margin", "r_max", "t_limit", "tau_window", "n_train", "n_valid",
    "snapshot_every",
];

fn take<T: DeserializeOwned>(map: &Map<String, Value>, key: &str) -> Result<Option<T>, ConfigError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| err(key, e.to_string())),
    }
}

fn take_auto<T: DeserializeOwned>(map: &Map<String, Value>, key: &str) -> Result<Option<Auto<T>>, ConfigError> {
    match map.get(key) {
        Some(Value::String(s)) if s == "auto" => Ok(Some(Auto::Auto)),
        Some(Value::String(s)) => Err(err(key, format!("expected a number or \"auto\", got \"{s}\""))),
        _ => Ok(take(map, key)?.map(Auto::Value)),
    }
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(err(field, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn data_or(&self, default: DataFamily) -> DataFamily {
        self.data.unwrap_or(default)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| err("<document>", e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(err("<document>", "expected a flat JSON object"));
        };
        for (key, v) in &map {
            if !KEYS.contains(&key.as_str()) {
                return Err(err(key, "unknown key"));
            }
            if v.is_object() || v.is_array() {
                return Err(err(key, "nested values are not allowed"));
            }
        }
        let p: u32 = take(&map, "p")?.ok_or_else(|| err("p", "required"))?;
        let data = match take::<String>(&map, "data")? {
            None => None,
            Some(s) => Some(DataFamily::parse(&s).ok_or_else(|| {
                err("data", format!("unknown family \"{s}\" (zero, gauge, stable, mixed, random, mode, exact, gaussian)"))
            })?),
        };
        let cfg = RunConfig {
            p,
            k: take_auto(&map, "k")?.unwrap_or(Auto::Auto),
            n: take(&map, "N")?.unwrap_or(48),
            n_coarse: take(&map, "N_coarse")?,
            t_blowup: positive("T", take(&map, "T")?.unwrap_or(1.0))?,
            h: positive("h", take(&map, "h")?.unwrap_or(0.05))?,
            tau_max: positive("tau_max", take(&map, "tau_max")?.unwrap_or(12.0))?,
            delta: take_auto(&map, "delta")?.unwrap_or(Auto::Auto),
            data,
            mode: take(&map, "mode")?,
            amplitude: take(&map, "amplitude")?,
            data_path: take(&map, "data_path")?,
            seed: take(&map, "seed")?.unwrap_or(0),
            out_dir: take(&map, "out_dir")?,
            tol: positive("tol", take(&map, "tol")?.unwrap_or(1e-13))?,
            max_iter: take(&map, "max_iter")?.unwrap_or(100),
            pairs: take(&map, "pairs")?.unwrap_or(20),
            dr: positive("dr", take(&map, "dr")?.unwrap_or(1e-3))?,
            r_margin: positive("r_margin", take(&map, "r_margin")?.unwrap_or(1.5))?,
            r_max: positive("r_max", take(&map, "r_max")?.unwrap_or(8.0))?,
            t_limit: positive("t_limit", take(&map, "t_limit")?.unwrap_or(10.0))?,
            tau_window: positive("tau_window", take(&map, "tau_window")?.unwrap_or(2.0))?,
            n_train: take(&map, "n_train")?.unwrap_or(250),
            n_valid: take(&map, "n_valid")?.unwrap_or(250),
            snapshot_every: take(&map, "snapshot_every")?.unwrap_or(0),
        };
        if let Auto::Value(d) = cfg.delta {
            positive("delta", d)?;
        }
        if let Some(a) = cfg.amplitude {
            if !(a.is_finite() && a >= 0.0) {
                return Err(err("amplitude", format!("must be finite and non-negative, got {a}")));
            }
        }
        if cfg.data == Some(DataFamily::Mode) && cfg.mode.is_none() {
            return Err(err("mode", "required when data = \"mode\""));
        }
        if cfg.pairs == 0 {
            return Err(err("pairs", "must be at least 1"));
        }
        if cfg.n_train == 0 || cfg.n_valid == 0 {
            return Err(err(if cfg.n_train == 0 { "n_train" } else { "n_valid" }, "must be at least 1"));
        }
        Ok(cfg)
    }

    /// Coarse grid order for the refinement filter: 2N/3 rounded down to even.
    pub fn coarse_order(&self) -> usize {
        self.n_coarse.unwrap_or((2 * self.n / 3) & !1)
    }

    /// Parses "j+" / "j-" from the `mode` key.
    pub fn mode_label(&self) -> Result<(usize, bool), ConfigError> {
        let s = self.mode.as_deref().unwrap_or("");
        let (num, sign) = s.split_at(s.len().saturating_sub(1));
        let plus = match sign {
            "+" => true,
            "-" => false,
            _ => return Err(err("mode", format!("expected e.g. \"1+\" or \"0-\", got \"{s}\""))),
        };
        let j = num.parse().map_err(|_| err("mode", format!("expected e.g. \"1+\" or \"0-\", got \"{s}\"")))?;
        Ok((j, plus))
    }
}
