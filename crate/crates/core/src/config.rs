//! Run configuration: a flat `key = value` file mirroring the CLI flags,
//! with CLI flags taking precedence, plus the seed fallback from the
//! `HOLONOMY_LAB_SEED` environment variable.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::dynamics::IntegratorSettings;
use crate::rep::{Family, RepSpec};
use crate::scalar::Rat;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config error: {0}")]
    Invalid(String),
    #[error("config io error: {0}")]
    Io(#[from] std::io::Error),
}

pub const SEED_ENV: &str = "HOLONOMY_LAB_SEED";
pub const DEFAULT_SEED: u64 = 20260809;
pub const DEFAULT_RANK_POINTS: usize = 64;
pub const DEFAULT_ODE_GRID: usize = 21;

/// All tunables of a run. `None` means "not configured"; the accessors
/// apply defaults and validate.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub family: Option<String>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    pub n: Option<u32>,
    pub field: Option<String>,
    pub center: Option<bool>,
    pub c: Option<Rat>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub grid: Option<usize>,
    pub rtol: Option<f64>,
    pub initial_step: Option<f64>,
    pub max_time: Option<f64>,
    pub blowup_threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn from_file(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let body = std::fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Invalid(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut cfg = RunConfig::default();
        for (key, value) in map {
            cfg.set(&key, &value)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let parse_u32 = |v: &str| {
            v.parse::<u32>()
                .map_err(|_| ConfigError::Invalid(format!("{key}: expected an integer, got {v}")))
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| ConfigError::Invalid(format!("{key}: expected a float, got {v}")))
        };
        match key {
            "family" => self.family = Some(value.to_string()),
            "p" => self.p = Some(parse_u32(value)?),
            "q" => self.q = Some(parse_u32(value)?),
            "n" => self.n = Some(parse_u32(value)?),
            "field" => self.field = Some(value.to_string()),
            "center" => {
                self.center = Some(value.parse::<bool>().map_err(|_| {
                    ConfigError::Invalid(format!("center: expected true/false, got {value}"))
                })?)
            }
            "c" => {
                self.c = Some(Rat::parse(value).ok_or_else(|| {
                    ConfigError::Invalid(format!("c: expected a rational like -3/2, got {value}"))
                })?)
            }
            "seed" => {
                self.seed = Some(value.parse::<u64>().map_err(|_| {
                    ConfigError::Invalid(format!("seed: expected an integer, got {value}"))
                })?)
            }
            "points" => self.points = Some(parse_u32(value)? as usize),
            "grid" => self.grid = Some(parse_u32(value)? as usize),
            "rtol" => self.rtol = Some(parse_f64(value)?),
            "initial-step" => self.initial_step = Some(parse_f64(value)?),
            "max-time" => self.max_time = Some(parse_f64(value)?),
            "blowup-threshold" => self.blowup_threshold = Some(parse_f64(value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "csv" => self.csv = Some(PathBuf::from(value)),
            other => {
                return Err(ConfigError::Invalid(format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }

    /// Overlays `self` (CLI values) on top of `base` (config-file values).
    pub fn overlay(self, base: RunConfig) -> RunConfig {
        RunConfig {
            family: self.family.or(base.family),
            p: self.p.or(base.p),
            q: self.q.or(base.q),
            n: self.n.or(base.n),
            field: self.field.or(base.field),
            center: self.center.or(base.center),
            c: self.c.or(base.c),
            seed: self.seed.or(base.seed),
            points: self.points.or(base.points),
            grid: self.grid.or(base.grid),
            rtol: self.rtol.or(base.rtol),
            initial_step: self.initial_step.or(base.initial_step),
            max_time: self.max_time.or(base.max_time),
            blowup_threshold: self.blowup_threshold.or(base.blowup_threshold),
            out: self.out.or(base.out),
            csv: self.csv.or(base.csv),
        }
    }

    /// The representation spec; errors when the family is missing or the
    /// parameters are inconsistent.
    pub fn rep_spec(&self) -> Result<RepSpec, ConfigError> {
        let family = self
            .family
            .as_deref()
            .ok_or_else(|| ConfigError::Invalid("missing `family`".to_string()))?;
        let complex_field = match self.field.as_deref() {
            None => None,
            Some("real") => Some(false),
            Some("complex") => Some(true),
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "field: expected real|complex, got {other}"
                )))
            }
        };
        let family = match family {
            "tensor-real" => {
                let p = self
                    .p
                    .ok_or_else(|| ConfigError::Invalid("tensor-real needs `p`".to_string()))?;
                let q = self
                    .q
                    .ok_or_else(|| ConfigError::Invalid("tensor-real needs `q`".to_string()))?;
                Family::TensorReal { p, q }
            }
            "tensor-complex" => {
                let n = self
                    .n
                    .ok_or_else(|| ConfigError::Invalid("tensor-complex needs `n`".to_string()))?;
                Family::TensorComplex { n }
            }
            "binary-cubic" => Family::BinaryCubic {
                complex: complex_field.unwrap_or(false),
            },
            "binary-quadratic" => Family::BinaryQuadratic {
                complex: complex_field.unwrap_or(false),
            },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown family `{other}` (expected tensor-real, tensor-complex, \
                     binary-cubic, or binary-quadratic)"
                )))
            }
        };
        let spec = RepSpec {
            family,
            include_center: self.center.unwrap_or(false),
        };
        spec.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }

    /// The sigma coefficient; defaults to 1.
    pub fn c_value(&self) -> Rat {
        self.c.clone().unwrap_or_else(Rat::one)
    }

    /// Seed precedence: explicit > HOLONOMY_LAB_SEED > default.
    pub fn seed_value(&self) -> u64 {
        if let Some(s) = self.seed {
            return s;
        }
        if let Ok(env) = std::env::var(SEED_ENV) {
            if let Ok(parsed) = env.parse::<u64>() {
                return parsed;
            }
        }
        DEFAULT_SEED
    }

    pub fn points_value(&self) -> usize {
        self.points.unwrap_or(DEFAULT_RANK_POINTS)
    }

    pub fn grid_value(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_ODE_GRID)
    }

    pub fn integrator(&self) -> IntegratorSettings {
        let mut s = IntegratorSettings::default();
        if let Some(r) = self.rtol {
            s.rel_tol = r;
        }
        if let Some(h) = self.initial_step {
            s.initial_step = h;
        }
        if let Some(t) = self.max_time {
            s.max_time = t;
        }
        if let Some(b) = self.blowup_threshold {
            s.blowup_threshold = b;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parse_and_overlay() {
        let dir = std::env::temp_dir().join("holonomy-lab-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment\nfamily = tensor-real\np = 2\nq = 1\nc = -3/2").unwrap();
        drop(f);
        let file_cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(file_cfg.c.as_ref().unwrap().to_string_exact(), "-3/2");

        let mut cli = RunConfig::default();
        cli.set("q", "2").unwrap();
        let merged = cli.overlay(file_cfg);
        let spec = merged.rep_spec().unwrap();
        assert_eq!(spec, RepSpec::tensor_real(2, 2));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_family_is_config_error() {
        let cfg = RunConfig::default();
        assert!(matches!(cfg.rep_spec(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn bad_keys_and_values_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("frobnicate", "1").is_err());
        assert!(cfg.set("p", "x").is_err());
        assert!(cfg.set("c", "1/0").is_err());
        let mut cfg = RunConfig::default();
        cfg.set("family", "tensor-real").unwrap();
        cfg.set("p", "0").unwrap();
        cfg.set("q", "3").unwrap();
        assert!(cfg.rep_spec().is_err());
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert!(cfg.c_value().is_one());
        assert_eq!(cfg.points_value(), DEFAULT_RANK_POINTS);
        assert_eq!(cfg.grid_value(), DEFAULT_ODE_GRID);
        let s = cfg.integrator();
        assert_eq!(s.rel_tol, 1e-10);
    }
}
