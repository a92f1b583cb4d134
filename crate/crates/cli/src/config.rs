use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Common;

/// Values from `--config`, consulted when a flag is absent.
#[derive(Debug, Default)]
pub struct FileLayer {
    table: toml::Table,
}

impl FileLayer {
    /// Load `path` and reject keys the command does not know.
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!("config {}: unknown key '{key}' (allowed: {})", path.display(), allowed.join(", "));
            }
        }
        Ok(Self { table })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.table
            .get(key)
            .map(|v| v.clone().try_into().with_context(|| format!("config key '{key}'")))
            .transpose()
    }

    /// Flag, else config file, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

pub const COMMON_KEYS: [&str; 7] = ["seed", "max_iter", "rel_tol", "tol_stat", "relaxation", "out", "jobs"];

pub const DEFAULT_SEED: u64 = 1;

/// Solver settings as logged in every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub tol_stat: f64,
    pub relaxation: f64,
}

impl SolverConfig {
    pub fn resolve(common: &Common, file: &FileLayer) -> Result<Self> {
        let d = plauth::Options::default();
        let cfg = Self {
            max_iter: file.pick(common.max_iter, "max_iter", d.max_iter)?,
            rel_tol: file.pick(common.rel_tol, "rel_tol", d.rel_tol)?,
            tol_stat: file.pick(common.tol_stat, "tol_stat", d.tol_stat)?,
            relaxation: file.pick(common.relaxation, "relaxation", d.relaxation)?,
        };
        if !(cfg.rel_tol > 0.0 && cfg.tol_stat > 0.0) {
            bail!("rel_tol and tol_stat must be positive");
        }
        if !(cfg.relaxation > 0.0 && cfg.relaxation <= 1.0) {
            bail!("relaxation must lie in (0, 1], got {}", cfg.relaxation);
        }
        Ok(cfg)
    }

    pub fn options(&self) -> plauth::Options {
        plauth::Options {
            max_iter: self.max_iter,
            rel_tol: self.rel_tol,
            tol_stat: self.tol_stat,
            relaxation: self.relaxation,
            ..Default::default()
        }
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        vec![
            ("max_iter".into(), self.max_iter.to_string()),
            ("rel_tol".into(), self.rel_tol.to_string()),
            ("tol_stat".into(), self.tol_stat.to_string()),
            ("relaxation".into(), self.relaxation.to_string()),
        ]
    }
}
