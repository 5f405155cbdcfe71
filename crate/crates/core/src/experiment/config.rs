//! Scenario files: `key = value` lines, `#` comments, bracketed lists.
//!
//! ```text
//! # all nodes 10 m apart
//! distance_m = 10
//! p_bar_grid_w = [0.1, 1, 10]
//! schemes = [JOPTA, OPA, FPTA]
//! ```
//!
//! Omitted keys take the defaults of [`ScenarioConfig::default`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::opa::LambdaRoute;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Jopta,
    Opa,
    Fpta,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Jopta, Scheme::Opa, Scheme::Fpta];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Jopta => "JOPTA",
            Scheme::Opa => "OPA",
            Scheme::Fpta => "FPTA",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "JOPTA" => Ok(Scheme::Jopta),
            "OPA" => Ok(Scheme::Opa),
            "FPTA" => Ok(Scheme::Fpta),
            other => Err(format!("unknown scheme `{other}` (expected JOPTA, OPA or FPTA)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateUnits {
    Nats,
    Bits,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub channel: ChannelParams,
    /// Average relay power budgets to sweep, ascending.
    pub p_bar_grid: Vec<f64>,
    pub epochs_m: usize,
    pub seed: u64,
    /// Selected schemes in canonical order.
    pub schemes: Vec<Scheme>,
    pub opa_lambda_route: LambdaRoute,
    pub rate_units: RateUnits,
    pub output_dir: PathBuf,
    /// Time fraction for the benchmark when OPA is not run.
    pub fpta_tau0: Option<f64>,
}

pub const DEFAULT_DISTANCE_M: f64 = 10.0;
pub const DEFAULT_PATHLOSS_EXPONENT: f64 = 3.0;
pub const DEFAULT_REF_PATHLOSS_DB: f64 = 40.0;
/// -150 dBm/Hz over 1 MHz.
pub const DEFAULT_NOISE_POWER_W: f64 = 1e-12;
pub const DEFAULT_EPOCHS: usize = 100_000;
pub const DEFAULT_P_BAR_GRID: [f64; 5] = [0.1, 0.3, 1.0, 3.0, 10.0];

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            channel: ChannelParams::from_pathloss(
                DEFAULT_DISTANCE_M,
                DEFAULT_PATHLOSS_EXPONENT,
                DEFAULT_REF_PATHLOSS_DB,
                DEFAULT_NOISE_POWER_W,
            )
            .expect("default geometry is valid"),
            p_bar_grid: DEFAULT_P_BAR_GRID.to_vec(),
            epochs_m: DEFAULT_EPOCHS,
            seed: 0,
            schemes: Scheme::ALL.to_vec(),
            opa_lambda_route: LambdaRoute::Samples,
            rate_units: RateUnits::Both,
            output_dir: PathBuf::from("results"),
            fpta_tau0: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate().map_err(|e| field_err("channel", e.to_string()))?;
        if self.p_bar_grid.is_empty() {
            return Err(field_err("p_bar_grid_w", "must not be empty"));
        }
        if let Some(bad) = self.p_bar_grid.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(field_err("p_bar_grid_w", format!("entries must be positive, got {bad}")));
        }
        if self.p_bar_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field_err("p_bar_grid_w", "must be sorted ascending without repeats"));
        }
        if self.epochs_m == 0 {
            return Err(field_err("epochs_m", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(field_err("schemes", "select at least one scheme"));
        }
        if let Some(t) = self.fpta_tau0 {
            if !(t > 0.0 && t < 1.0) {
                return Err(field_err("fpta_tau0", format!("must lie in (0, 1), got {t}")));
            }
        }
        if self.schemes.contains(&Scheme::Fpta)
            && !self.schemes.contains(&Scheme::Opa)
            && self.fpta_tau0.is_none()
        {
            return Err(field_err(
                "schemes",
                "FPTA takes its time fraction from OPA; add OPA or set fpta_tau0",
            ));
        }
        Ok(())
    }
}

fn field_err(field: &str, msg: impl Into<String>) -> Error {
    Error::ConfigField {
        field: field.to_string(),
        msg: msg.into(),
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[derive(Debug)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    let mut distance = DEFAULT_DISTANCE_M;
    let mut exponent = DEFAULT_PATHLOSS_EXPONENT;
    let mut ref_db = DEFAULT_REF_PATHLOSS_DB;
    let mut noise = DEFAULT_NOISE_POWER_W;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::ConfigParse { line: line_no, msg };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if seen.iter().any(|k| k == key) {
            return Err(parse_err(format!("duplicate key `{key}`")));
        }
        seen.push(key.to_string());
        let value = parse_value(value.trim()).map_err(parse_err)?;

        match key {
            "distance_m" => distance = number(&value).map_err(parse_err)?,
            "pathloss_exponent" => exponent = number(&value).map_err(parse_err)?,
            "ref_pathloss_db" => ref_db = number(&value).map_err(parse_err)?,
            "noise_power_w" => noise = number(&value).map_err(parse_err)?,
            "epochs_m" => cfg.epochs_m = integer(&value).map_err(parse_err)?,
            "seed" => cfg.seed = integer(&value).map_err(parse_err)?,
            "p_bar_grid_w" => {
                cfg.p_bar_grid = list(&value)
                    .iter()
                    .map(|s| parse_f64(s))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(parse_err)?
            }
            "schemes" => {
                let mut schemes = list(&value)
                    .iter()
                    .map(|s| s.parse::<Scheme>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(parse_err)?;
                schemes.sort();
                schemes.dedup();
                cfg.schemes = schemes;
            }
            "opa_lambda_route" => {
                cfg.opa_lambda_route = match scalar(&value).map_err(parse_err)?.to_ascii_uppercase().as_str() {
                    "SAMPLES" => LambdaRoute::Samples,
                    "QUADRATURE" => LambdaRoute::Quadrature,
                    other => return Err(parse_err(format!("unknown lambda route `{other}`"))),
                }
            }
            "rate_units" => {
                cfg.rate_units = match scalar(&value).map_err(parse_err)?.to_ascii_uppercase().as_str() {
                    "NATS" => RateUnits::Nats,
                    "BITS" => RateUnits::Bits,
                    "BOTH" => RateUnits::Both,
                    other => return Err(parse_err(format!("unknown rate units `{other}`"))),
                }
            }
            "output_dir" => cfg.output_dir = PathBuf::from(scalar(&value).map_err(parse_err)?),
            "fpta_tau0" => cfg.fpta_tau0 = Some(number(&value).map_err(parse_err)?),
            other => return Err(parse_err(format!("unknown key `{other}`"))),
        }
    }

    cfg.channel = ChannelParams::from_pathloss(distance, exponent, ref_db, noise).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => field_err(config_key(name), reason),
        other => other,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn config_key(param: &str) -> &str {
    match param {
        "noise_power" => "noise_power_w",
        other => other,
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    s.strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .unwrap_or(s)
        .to_string()
}

fn parse_value(raw: &str) -> std::result::Result<Value, String> {
    if raw.is_empty() {
        return Err("missing value".into());
    }
    if let Some(rest) = raw.strip_prefix('[') {
        let inner = rest
            .strip_suffix(']')
            .ok_or_else(|| "unterminated list (missing `]`)".to_string())?;
        let items: Vec<String> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(unquote).collect()
        };
        if items.iter().any(|s| s.is_empty()) {
            return Err("empty list element".into());
        }
        return Ok(Value::List(items));
    }
    Ok(Value::Scalar(unquote(raw)))
}

fn scalar(v: &Value) -> std::result::Result<&str, String> {
    match v {
        Value::Scalar(s) => Ok(s),
        Value::List(_) => Err("expected a single value, got a list".into()),
    }
}

fn list(v: &Value) -> Vec<String> {
    match v {
        Value::Scalar(s) => vec![s.clone()],
        Value::List(items) => items.clone(),
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn number(v: &Value) -> std::result::Result<f64, String> {
    parse_f64(scalar(v)?)
}

fn integer<T: FromStr>(v: &Value) -> std::result::Result<T, String> {
    let s = scalar(v)?;
    if let Ok(n) = s.parse::<T>() {
        return Ok(n);
    }
    // Allow `1e5`-style integers.
    match s.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => {
            format!("{}", f as u64).parse::<T>().map_err(|_| format!("`{s}` is out of range"))
        }
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}
