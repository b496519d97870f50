use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use polyharm::{RadialExpr, RadialProfile, SampledProfile, SmoothPlateau};

pub const SCHEMA_VERSION: u32 = 1;

pub enum Outcome {
    Decisive,
    Fail(String),
    Inconclusive,
}

/// Everything that determines a run, echoed into each report.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub command: &'static str,
    pub input: Option<String>,
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: &'a ResolvedConfig,
    pub result: T,
}

/// Reads a JSON input, checks `schema_version` when present and parses the
/// rest as `T`.
pub fn read_input<T: DeserializeOwned>(path: Option<&Path>) -> anyhow::Result<T> {
    let path = path.context("--input is required for this command")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    if let Value::Object(map) = &mut value {
        if let Some(v) = map.remove("schema_version") {
            match v.as_u64() {
                Some(x) if x == SCHEMA_VERSION as u64 => {}
                _ => bail!("schema_version mismatch: input has {v}, this build reads {SCHEMA_VERSION}"),
            }
        }
    }
    serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))
}

/// Unwraps the `result` of a report produced by `command`, or takes the
/// value as is.
pub fn unwrap_report(value: Value, command: &str) -> anyhow::Result<Value> {
    match value {
        Value::Object(mut map) if map.contains_key("result") => {
            if let Some(c) = map.get("command").and_then(Value::as_str) {
                if c != command {
                    bail!("input is a `{c}` report, expected `{command}`");
                }
            }
            Ok(map.remove("result").expect("checked"))
        }
        other => Ok(other),
    }
}

pub fn to_json<T: Serialize>(report: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Writes the report to `output`, or prints it.
pub fn emit<T: Serialize>(config: &ResolvedConfig, output: Option<&Path>, result: T) -> anyhow::Result<()> {
    let report = Report { schema_version: SCHEMA_VERSION, command: config.command, config, result };
    let text = to_json(&report)?;
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// `report.json` → `report<suffix>.csv`, or `None` when writing to stdout.
pub fn sibling(output: Option<&Path>, suffix: &str) -> Option<PathBuf> {
    output.map(|p| {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
        p.with_file_name(format!("{stem}{suffix}.csv"))
    })
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Radial profile given in an input file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// Closed form: a list of `{coeff, j, a, s}` terms.
    Expr { terms: RadialExpr },
    /// Smooth plateau, 1 on `[0, radius]` and 0 beyond `2·radius`.
    Plateau { radius: f64 },
    /// Samples with optional derivatives and tail exponent.
    Sampled(SampledProfile),
    /// `radius,value` CSV file.
    Csv { path: PathBuf, tail_exponent: Option<f64> },
}

pub enum LoadedProfile {
    Expr(RadialExpr),
    Plateau(SmoothPlateau),
    Sampled(SampledProfile),
}

impl ProfileSpec {
    pub fn load(&self) -> anyhow::Result<LoadedProfile> {
        Ok(match self {
            ProfileSpec::Expr { terms } => LoadedProfile::Expr(terms.clone()),
            ProfileSpec::Plateau { radius } => LoadedProfile::Plateau(SmoothPlateau::new(*radius)?),
            ProfileSpec::Sampled(p) => {
                p.validate()?;
                LoadedProfile::Sampled(p.clone())
            }
            ProfileSpec::Csv { path, tail_exponent } => LoadedProfile::Sampled(
                SampledProfile::read_csv(path, *tail_exponent).with_context(|| format!("reading {}", path.display()))?,
            ),
        })
    }
}

impl LoadedProfile {
    pub fn as_profile(&self) -> &dyn RadialProfile {
        match self {
            LoadedProfile::Expr(e) => e,
            LoadedProfile::Plateau(p) => p,
            LoadedProfile::Sampled(s) => s,
        }
    }
}
