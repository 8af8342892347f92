//! Flat `key=value` run configuration. File values are read first, command-line
//! flags override them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use magnon::format::sci;
use magnon::spinwave::{BoundConstants, Regime};
use magnon::Boundary;
use serde_json::{json, Value};

use crate::CliError;

pub const KEYS: &[&str] = &[
    "d",
    "ell",
    "two_s",
    "beta_tilde",
    "boundary",
    "n_max",
    "quad_tolerance",
    "thread_count",
    "output_path",
    "output_format",
    "regime",
    "bound",
    "c_finite_size",
    "c_projector_tail",
    "c_remainder",
    "c_correction_finite_size",
    "c_r_d",
    "force",
    "zero_mode",
    "only",
    "perturb_epsilon",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Theorem,
    Preliminary,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub d: Option<usize>,
    pub ell: Option<usize>,
    pub two_s: Option<u32>,
    pub beta_tilde: Vec<f64>,
    pub boundary: Boundary,
    pub n_max: usize,
    pub quad_tolerance: f64,
    pub thread_count: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub output_format: Format,
    pub regime: Regime,
    pub bound: BoundKind,
    pub constants: BoundConstants,
    pub force: bool,
    pub only: Vec<String>,
    pub perturb_epsilon: f64,
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key=value, got {line:?}", n + 1)))?;
        out.insert(normalize_key(k.trim()), v.trim().to_string());
    }
    Ok(out)
}

fn normalize_key(k: &str) -> String {
    k.replace('-', "_")
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_kv(&text, &path.display().to_string())
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Usage(format!("invalid value for {key}: {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value for {key}: {v:?}"))),
    }
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    let vals: Vec<f64> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse::<f64>(key, s))
        .collect::<Result<_, _>>()?;
    if vals.is_empty() {
        return Err(CliError::Usage(format!("{key} list is empty")));
    }
    Ok(vals)
}

impl RunConfig {
    /// `defaults` fill keys missing from `merged`; unknown keys are rejected.
    pub fn resolve(mut merged: BTreeMap<String, String>, defaults: &[(&str, &str)]) -> Result<Self, CliError> {
        for (k, v) in defaults {
            merged.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        if let Some(k) = merged.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown config key {k:?}")));
        }
        let get = |k: &str| merged.get(k).map(String::as_str);
        let opt = |k: &str| get(k).filter(|v| !v.is_empty());

        let d = opt("d").map(|v| parse::<usize>("d", v)).transpose()?;
        let ell = opt("ell").map(|v| parse::<usize>("ell", v)).transpose()?;
        let two_s = opt("two_s").map(|v| parse::<u32>("two_s", v)).transpose()?;
        let beta_tilde = opt("beta_tilde").map(|v| parse_list("beta_tilde", v)).transpose()?.unwrap_or_default();
        if let Some(b) = beta_tilde.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(CliError::Usage(format!("beta_tilde must be positive and finite, got {b}")));
        }
        if two_s == Some(0) {
            return Err(CliError::Usage("two_s must be at least 1".into()));
        }
        let boundary = match opt("boundary").unwrap_or("dirichlet") {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            v => return Err(CliError::Usage(format!("boundary must be dirichlet or periodic, got {v:?}"))),
        };
        let output_format = match opt("output_format").unwrap_or("json") {
            "json" => Format::Json,
            "csv" => Format::Csv,
            v => return Err(CliError::Usage(format!("output_format must be csv or json, got {v:?}"))),
        };
        let regime = match opt("regime").unwrap_or("low_temperature") {
            "low_temperature" => Regime::LowTemperature,
            "small_beta" => Regime::SmallBeta,
            v => return Err(CliError::Usage(format!("regime must be low_temperature or small_beta, got {v:?}"))),
        };
        let bound = match opt("bound").unwrap_or("theorem") {
            "theorem" => BoundKind::Theorem,
            "preliminary" => BoundKind::Preliminary,
            v => return Err(CliError::Usage(format!("bound must be theorem or preliminary, got {v:?}"))),
        };
        match opt("zero_mode").unwrap_or("exclude") {
            "exclude" => {}
            "include" => return Err(CliError::Usage(
                "zero_mode=include is not supported: the k = 0 Bose factor is infinite; only exclude is implemented"
                    .into(),
            )),
            v => return Err(CliError::Usage(format!("zero_mode must be exclude, got {v:?}"))),
        }
        let mut constants = BoundConstants::default();
        for (key, slot) in [
            ("c_finite_size", &mut constants.finite_size),
            ("c_projector_tail", &mut constants.projector_tail),
            ("c_remainder", &mut constants.remainder),
            ("c_correction_finite_size", &mut constants.correction_finite_size),
            ("c_r_d", &mut constants.r_d),
        ] {
            if let Some(v) = opt(key) {
                *slot = parse(key, v)?;
                if !(*slot >= 0.0 && slot.is_finite()) {
                    return Err(CliError::Usage(format!("{key} must be a finite nonnegative number")));
                }
            }
        }
        let quad_tolerance = parse("quad_tolerance", opt("quad_tolerance").unwrap_or("1e-8"))?;
        if !(quad_tolerance > 0.0 && quad_tolerance < 1.0) {
            return Err(CliError::Usage("quad_tolerance must lie in (0, 1)".into()));
        }
        let thread_count = opt("thread_count").map(|v| parse::<usize>("thread_count", v)).transpose()?;
        if thread_count == Some(0) {
            return Err(CliError::Usage("thread_count must be positive".into()));
        }
        Ok(Self {
            d,
            ell,
            two_s,
            beta_tilde,
            boundary,
            n_max: parse("n_max", opt("n_max").unwrap_or("12"))?,
            quad_tolerance,
            thread_count,
            output_path: opt("output_path").map(PathBuf::from),
            output_format,
            regime,
            bound,
            constants,
            force: opt("force").map(|v| parse_bool("force", v)).transpose()?.unwrap_or(false),
            only: opt("only")
                .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
                .unwrap_or_default(),
            perturb_epsilon: parse("perturb_epsilon", opt("perturb_epsilon").unwrap_or("0"))?,
        })
    }

    pub fn require_d(&self) -> Result<usize, CliError> {
        self.d.ok_or_else(|| CliError::Usage("d is required".into()))
    }

    pub fn require_ell(&self) -> Result<usize, CliError> {
        self.ell.ok_or_else(|| CliError::Usage("ell is required".into()))
    }

    pub fn require_two_s(&self) -> Result<u32, CliError> {
        self.two_s.ok_or_else(|| CliError::Usage("two_s is required".into()))
    }

    pub fn require_betas(&self) -> Result<&[f64], CliError> {
        if self.beta_tilde.is_empty() {
            return Err(CliError::Usage("beta_tilde is required".into()));
        }
        Ok(&self.beta_tilde)
    }

    /// Every resolved setting, defaults included, as stored in output files. The
    /// output path is left out so that identical runs written to different files
    /// match byte for byte.
    pub fn resolved(&self) -> BTreeMap<&'static str, String> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "unset".into());
        let c = &self.constants;
        BTreeMap::from([
            ("d", opt(self.d.map(|v| v.to_string()))),
            ("ell", opt(self.ell.map(|v| v.to_string()))),
            ("two_s", opt(self.two_s.map(|v| v.to_string()))),
            ("beta_tilde", self.beta_tilde.iter().map(|b| sci(*b)).collect::<Vec<_>>().join(",")),
            (
                "boundary",
                match self.boundary {
                    Boundary::Dirichlet => "dirichlet".into(),
                    Boundary::Periodic => "periodic".into(),
                },
            ),
            ("n_max", self.n_max.to_string()),
            ("quad_tolerance", sci(self.quad_tolerance)),
            ("thread_count", self.thread_count.map_or("auto".into(), |n| n.to_string())),
            (
                "output_format",
                match self.output_format {
                    Format::Csv => "csv".into(),
                    Format::Json => "json".into(),
                },
            ),
            (
                "regime",
                match self.regime {
                    Regime::LowTemperature => "low_temperature".into(),
                    Regime::SmallBeta => "small_beta".into(),
                },
            ),
            (
                "bound",
                match self.bound {
                    BoundKind::Theorem => "theorem".into(),
                    BoundKind::Preliminary => "preliminary".into(),
                },
            ),
            ("c_finite_size", sci(c.finite_size)),
            ("c_projector_tail", sci(c.projector_tail)),
            ("c_remainder", sci(c.remainder)),
            ("c_correction_finite_size", sci(c.correction_finite_size)),
            ("c_r_d", sci(c.r_d)),
            ("force", self.force.to_string()),
            ("zero_mode", "exclude".into()),
            ("only", self.only.join(",")),
            ("perturb_epsilon", sci(self.perturb_epsilon)),
        ])
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.resolved().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
    }

    pub fn to_comment(&self) -> String {
        self.resolved().into_iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}
