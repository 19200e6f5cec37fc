//! Pipeline configuration: defaults, `key=value` files, and flag overrides.

use std::path::Path;

use crate::aknn::CshParams;
use crate::error::{MatteError, Result};
use crate::sparse_matte::MatteParams;
use crate::temporal_nlm::NlmConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub radius: f64,
    pub patch: usize,
    pub k: usize,
    pub gamma: f64,
    /// Superpixels per known region; `None` derives the count from the region area.
    pub superpixels: Option<usize>,
    pub compactness: f64,
    pub csh_tables: usize,
    pub csh_bits: u32,
    pub csh_iterations: usize,
    pub csh_kernels: usize,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub skip_nlm: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let csh = CshParams::default();
        Self {
            lambda: 0.1,
            radius: 50.0,
            patch: 8,
            k: 5,
            gamma: 0.9,
            superpixels: None,
            compactness: 10.0,
            csh_tables: csh.tables,
            csh_bits: csh.bits,
            csh_iterations: csh.iterations,
            csh_kernels: csh.kernels,
            threads: 0,
            skip_nlm: false,
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "radius",
    "patch",
    "k",
    "gamma",
    "superpixels",
    "compactness",
    "csh_tables",
    "csh_bits",
    "csh_iterations",
    "csh_kernels",
    "threads",
    "skip_nlm",
    "seed",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| MatteError::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(MatteError::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

impl PipelineConfig {
    /// Applies one `key=value` setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "lambda" => self.lambda = parse_value(key, value)?,
            "radius" => self.radius = parse_value(key, value)?,
            "patch" => self.patch = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "superpixels" => {
                self.superpixels = if value == "auto" { None } else { Some(parse_value(key, value)?) }
            }
            "compactness" => self.compactness = parse_value(key, value)?,
            "csh_tables" => self.csh_tables = parse_value(key, value)?,
            "csh_bits" => self.csh_bits = parse_value(key, value)?,
            "csh_iterations" => self.csh_iterations = parse_value(key, value)?,
            "csh_kernels" => self.csh_kernels = parse_value(key, value)?,
            "threads" => self.threads = parse_value(key, value)?,
            "skip_nlm" => self.skip_nlm = parse_bool(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            other => return Err(MatteError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` document on top of `self`. `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| MatteError::Config(format!("line {}: expected `key=value`", n + 1)))?;
            self.set(key, value)
                .map_err(|e| MatteError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_str_validated(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults, then the file (if any), then `overrides` in order; validated at the end.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| MatteError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            cfg.apply_str(&text)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MatteError::Config(msg));
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if self.patch < 2 || !self.patch.is_power_of_two() {
            return bad(format!("patch must be a power of two >= 2, got {}", self.patch));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.superpixels == Some(0) {
            return bad("superpixels must be positive or `auto`".into());
        }
        if !(self.compactness.is_finite() && self.compactness > 0.0) {
            return bad(format!("compactness must be positive, got {}", self.compactness));
        }
        if self.csh_tables == 0 || self.csh_iterations == 0 || self.csh_bits == 0 {
            return bad("csh_tables, csh_bits and csh_iterations must be positive".into());
        }
        if self.csh_bits > 64 {
            return bad(format!("csh_bits must be at most 64, got {}", self.csh_bits));
        }
        if self.csh_kernels == 0 || self.csh_kernels > self.patch * self.patch {
            return bad(format!(
                "csh_kernels must lie in 1..={}, got {}",
                self.patch * self.patch,
                self.csh_kernels
            ));
        }
        Ok(())
    }

    pub fn matte_params(&self) -> MatteParams {
        MatteParams {
            lambda: self.lambda,
            radius: self.radius,
            superpixels: self.superpixels,
            compactness: self.compactness,
            ..MatteParams::default()
        }
    }

    pub fn nlm_config(&self) -> NlmConfig {
        NlmConfig {
            gamma: self.gamma,
            patch: self.patch,
            csh: CshParams {
                k: self.k,
                tables: self.csh_tables,
                bits: self.csh_bits,
                iterations: self.csh_iterations,
                kernels: self.csh_kernels,
                seed: self.seed,
                ..CshParams::default()
            },
        }
    }

    /// The effective configuration as a `key=value` document that [`apply_str`](Self::apply_str) accepts.
    pub fn to_key_values(&self) -> String {
        let superpixels = self.superpixels.map_or_else(|| "auto".to_string(), |n| n.to_string());
        format!(
            "lambda={}\nradius={}\npatch={}\nk={}\ngamma={}\nsuperpixels={}\ncompactness={}\n\
             csh_tables={}\ncsh_bits={}\ncsh_iterations={}\ncsh_kernels={}\nthreads={}\nskip_nlm={}\nseed={}\n",
            self.lambda,
            self.radius,
            self.patch,
            self.k,
            self.gamma,
            superpixels,
            self.compactness,
            self.csh_tables,
            self.csh_bits,
            self.csh_iterations,
            self.csh_kernels,
            self.threads,
            self.skip_nlm,
            self.seed
        )
    }
}
