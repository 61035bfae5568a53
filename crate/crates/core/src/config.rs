//! Pipeline parameters and the flat `key = value` config file format.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pedigree::PedigreeConfig;
use crate::prospects::DEFAULT_LOOKBACK_DAYS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("{key}: invalid value {value:?}")]
    Value { key: String, value: String },
}

pub const DEFAULT_MIN_MATCH_LEN: usize = 30;
pub const DEFAULT_SIM_CLASS_THRESHOLD: f64 = 0.80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub min_match_len: usize,
    pub theta_s: f64,
    pub theta_t_days: i64,
    pub sim_class_threshold: f64,
    pub alive_lookback_days: i64,
    /// 0 lets the thread pool pick.
    pub worker_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pedigree = PedigreeConfig::default();
        RunConfig {
            min_match_len: DEFAULT_MIN_MATCH_LEN,
            theta_s: pedigree.theta_s,
            theta_t_days: pedigree.theta_t_days,
            sim_class_threshold: DEFAULT_SIM_CLASS_THRESHOLD,
            alive_lookback_days: DEFAULT_LOOKBACK_DAYS,
            worker_count: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl RunConfig {
    pub fn pedigree(&self) -> PedigreeConfig {
        PedigreeConfig {
            theta_s: self.theta_s,
            theta_t_days: self.theta_t_days,
        }
    }

    /// Sets one key. Accepts both the long names and the CLI flag spellings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Option<ConfigError>> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "min_match_len" | "min_match" => self.min_match_len = parse(key, value)?,
            "theta_s" => self.theta_s = parse(key, value)?,
            "theta_t_days" => self.theta_t_days = parse(key, value)?,
            "sim_class_threshold" | "sim_threshold" => {
                self.sim_class_threshold = parse(key, value)?
            }
            "alive_lookback_days" | "lookback_days" => {
                self.alive_lookback_days = parse(key, value)?
            }
            "worker_count" | "workers" => self.worker_count = parse(key, value)?,
            _ => return Err(None),
        }
        Ok(())
    }

    /// Applies a config file on top of `self`. `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: line_no })?;
            self.set(key, value).map_err(|e| {
                e.unwrap_or_else(|| ConfigError::UnknownKey {
                    line: line_no,
                    key: key.trim().to_string(),
                })
            })?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String| {
            Err(ConfigError::Value {
                key: key.into(),
                value,
            })
        };
        if self.min_match_len == 0 {
            return bad("min_match_len", "0".into());
        }
        if self.theta_s.is_nan() || self.theta_s < 0.0 {
            return bad("theta_s", self.theta_s.to_string());
        }
        if self.theta_t_days < 0 {
            return bad("theta_t_days", self.theta_t_days.to_string());
        }
        if !(0.0..=1.0).contains(&self.sim_class_threshold) {
            return bad("sim_class_threshold", self.sim_class_threshold.to_string());
        }
        if self.alive_lookback_days < 0 {
            return bad("alive_lookback_days", self.alive_lookback_days.to_string());
        }
        Ok(())
    }
}
