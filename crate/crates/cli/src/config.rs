//! Run configuration: a TOML file of sections, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use radshock::evans::{ConditionOptions, EvansOptions};
use radshock::model::ModelSpec;
use radshock::profile::ProfileOptions;
use radshock::simulate::SimOptions;
use serde::{Deserialize, Serialize};

/// Model selection: a preset name with `eps`, or inline coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Option<String>,
    pub eps: f64,
    pub name: Option<String>,
    /// Coefficients of `f` in increasing degree.
    pub f: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
    pub l: Option<f64>,
    pub u_minus: Option<f64>,
    pub u_plus: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            preset: None,
            eps: 0.2,
            name: None,
            f: None,
            m: None,
            l: None,
            u_minus: None,
            u_plus: None,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> Result<ModelSpec> {
        let inline = self.f.is_some() || self.m.is_some();
        match (&self.preset, inline) {
            (Some(_), true) => bail!("model: give either `preset` or inline coefficients, not both"),
            (Some(p), false) => Ok(ModelSpec::preset(p, self.eps)?),
            (None, true) => {
                let need = |v: Option<f64>, what: &str| v.ok_or_else(|| anyhow!("model: inline model needs `{what}`"));
                Ok(ModelSpec::new(
                    self.name.clone().unwrap_or_else(|| "custom".into()),
                    self.f.clone().ok_or_else(|| anyhow!("model: inline model needs `f`"))?,
                    self.m.clone().ok_or_else(|| anyhow!("model: inline model needs `m`"))?,
                    need(self.l, "l")?,
                    need(self.u_minus, "u_minus")?,
                    need(self.u_plus, "u_plus")?,
                )?)
            }
            (None, false) => bail!("no model selected: set `model.preset` or inline coefficients"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write every `profile_stride`-th profile node to the CSV.
    pub profile_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("radshock-out"), profile_stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `profile` also builds at half the step and reports the largest node
    /// change.
    pub refine: bool,
    pub model: ModelConfig,
    pub profile: ProfileOptions,
    pub evans: EvansOptions,
    pub condition: ConditionOptions,
    pub simulate: SimOptions,
    pub output: OutputConfig,
}

/// Parses `key.path=value`, reading the value as TOML and falling back to
/// a bare string.
fn parse_override(s: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = s.split_once('=').ok_or_else(|| anyhow!("override `{s}` is not of the form key=value"))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        bail!("override `{s}` has an empty key segment");
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut table = root;
    for p in parents {
        let entry = table.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| anyhow!("`{p}` is not a section"))?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Reads `file` (if any), applies `overrides` in order and deserializes.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut root = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (path, value) = parse_override(o)?;
            apply_override(&mut root, &path, value)?;
        }
        RunConfig::deserialize(toml::Value::Table(root)).map_err(|e| anyhow!("invalid configuration: {e}"))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_as_toml_values() {
        let (p, v) = parse_override("simulate.t_final=100").unwrap();
        assert_eq!(p, ["simulate", "t_final"]);
        assert_eq!(v, toml::Value::Integer(100));
        let (_, v) = parse_override("model.preset=burgers-linear").unwrap();
        assert_eq!(v, toml::Value::String("burgers-linear".into()));
        assert!(parse_override("novalue").is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = RunConfig::load(None, &["model.preset=burgers-cubicM".into(), "simulate.h=0.01".into()]).unwrap();
        assert_eq!(cfg.simulate.h, 0.01);
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::load(None, &["simulate.tfinal=3".into()]).is_err());
    }
}
