//! Key-value config files.
//!
//! A config file is TOML with flat keys named after [`TrainConfig`] fields:
//!
//! ```toml
//! k = 50
//! alpha = 5
//! loss = "cross_entropy"
//! ```
//!
//! Keys prefixed `wsabie.` or `leml.` set the baseline configs. Unknown keys
//! are rejected so typos do not pass silently.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::rbl::{LemlConfig, WarpConfig};
use crate::training::TrainConfig;

/// Every section a config file can set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileConfig {
    pub train: TrainConfig,
    pub wsabie: WarpConfig,
    pub leml: LemlConfig,
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (key, value) in table {
        let full = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match value {
            Value::Table(t) => flatten(&full, t, out),
            v => out.push((full, v.clone())),
        }
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Config(format!("{key}: expected a nonnegative integer, got {v}"))),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    as_usize(key, v).map(|x| x as u64)
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("{key}: expected a number, got {v}"))),
    }
}

fn as_parsed<T: std::str::FromStr>(key: &str, v: &Value) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match v {
        Value::String(s) => s.parse().map_err(|e| Error::Config(format!("{key}: {e}"))),
        _ => Err(Error::Config(format!("{key}: expected a string, got {v}"))),
    }
}

fn set_train(c: &mut TrainConfig, key: &str, v: &Value) -> Result<bool> {
    match key {
        "k" => c.k = as_usize(key, v)?,
        "alpha" => c.alpha = as_usize(key, v)?,
        "lambda" => c.lambda = as_f64(key, v)?,
        "eta" => c.eta = as_f64(key, v)?,
        "epsilon" => c.epsilon = as_f64(key, v)?,
        "batch_size" => c.batch_size = as_usize(key, v)?,
        "epochs" => c.epochs = as_usize(key, v)?,
        "loss" => c.loss = as_parsed(key, v)?,
        "theta" => c.theta = as_parsed(key, v)?,
        "seed" => c.seed = as_u64(key, v)?,
        "init_scale" => c.init_scale = as_f64(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_wsabie(c: &mut WarpConfig, key: &str, v: &Value) -> Result<bool> {
    match key {
        "k" => c.k = as_usize(key, v)?,
        "eta" => c.eta = as_f64(key, v)?,
        "epochs" => c.epochs = as_usize(key, v)?,
        "margin" => c.margin = as_f64(key, v)?,
        "max_trials" => c.max_trials = Some(as_usize(key, v)?),
        "seed" => c.seed = as_u64(key, v)?,
        "init_scale" => c.init_scale = as_f64(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn set_leml(c: &mut LemlConfig, key: &str, v: &Value) -> Result<bool> {
    match key {
        "k" => c.k = as_usize(key, v)?,
        "lambda" => c.lambda = as_f64(key, v)?,
        "sweeps" => c.sweeps = as_usize(key, v)?,
        "seed" => c.seed = as_u64(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut flat = Vec::new();
    flatten("", &table, &mut flat);
    let mut cfg = FileConfig::default();
    for (key, value) in &flat {
        let known = if let Some(rest) = key.strip_prefix("wsabie.") {
            set_wsabie(&mut cfg.wsabie, rest, value)?
        } else if let Some(rest) = key.strip_prefix("leml.") {
            set_leml(&mut cfg.leml, rest, value)?
        } else {
            set_train(&mut cfg.train, key, value)?
        };
        if !known {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
    }
    cfg.train.validate()?;
    cfg.wsabie.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
