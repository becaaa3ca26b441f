//! Run configuration.
//!
//! A config is a TOML document. It may name a `preset`; the preset's values
//! are loaded first and the document's own tables are merged over them key by
//! key. See `README.md` for the full key list.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{ServerDistSpec, SizeDistSpec};
use crate::error::{Error, Result};
use crate::policy::{PolicyConfig, PolicyKind};
use crate::workload::{ArrivalModel, SessionModel};

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "VODCACHE_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub catalog: CatalogSource,
    pub workload: WorkloadConfig,
    pub policy: PolicyConfig,
    pub cache: CacheConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<CatalogGenSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogGenSpec {
    pub num_videos: usize,
    pub num_servers: usize,
    #[serde(default)]
    pub size: SizeDistSpec,
    #[serde(default)]
    pub servers: ServerDistSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Replay this trace file instead of generating one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    #[serde(default)]
    pub arrival: ArrivalModel,
    /// Zipf-like exponent of video selection.
    pub alpha: f64,
    /// Seed for shuffling the popularity ranking; identity order when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_ranks_seed: Option<u64>,
    #[serde(default)]
    pub session: SessionModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_buckets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_requests: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_bytes: Option<u64>,
    /// Fraction of the total catalog bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_fraction: Option<f64>,
    #[serde(default)]
    pub hit_latency_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub eviction_log: bool,
    /// Check cache invariants after every event.
    #[serde(default)]
    pub audit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 1000 videos, λ = 15, N = 27, α = 0.77, sessions truncated at 0.70 /
    /// 20 min, 100,000 requests, RV with default parameters, 10% capacity.
    Paper,
    /// The paper preset swept over λ = 1..=15.
    LightToHeavySweep,
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().replace(' ', "-").as_str() {
            "paper" => Ok(Preset::Paper),
            "light-to-heavy-sweep" | "light-to-heavy" => Ok(Preset::LightToHeavySweep),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::LightToHeavySweep => "light-to-heavy sweep",
        }
    }

    pub fn config(self) -> SimConfig {
        let mut cfg = SimConfig {
            preset: Some(self.name().to_string()),
            seed: 42,
            catalog: CatalogSource {
                path: None,
                generate: Some(CatalogGenSpec {
                    num_videos: 1000,
                    num_servers: 10,
                    size: SizeDistSpec::default(),
                    servers: ServerDistSpec::default(),
                }),
            },
            workload: WorkloadConfig {
                trace_path: None,
                arrival: ArrivalModel::default(),
                alpha: 0.77,
                shuffle_ranks_seed: None,
                session: SessionModel::enabled(),
                num_buckets: None,
                num_requests: Some(100_000),
            },
            policy: PolicyConfig::new(PolicyKind::Rv),
            cache: CacheConfig {
                capacity_bytes: None,
                capacity_fraction: Some(0.10),
                hit_latency_s: 0.0,
            },
            output: OutputConfig::default(),
        };
        if self == Preset::LightToHeavySweep {
            cfg.workload.arrival.lambda = 1.0;
        }
        cfg
    }

    /// Sweep values that belong to the preset, if any.
    pub fn lambda_values(self) -> Option<Vec<f64>> {
        match self {
            Preset::Paper => None,
            Preset::LightToHeavySweep => Some((1..=15).map(f64::from).collect()),
        }
    }
}

impl SimConfig {
    pub fn paper() -> Self {
        Preset::Paper.config()
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            message,
        };
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
        let merged = match user.get("preset") {
            Some(toml::Value::String(name)) => {
                let base = Preset::from_name(name)?.config();
                let mut base = toml::Table::try_from(&base)
                    .map_err(|e| Error::Serialize(e.to_string()))?;
                clear_exclusive_siblings(&mut base, &user);
                merge_tables(&mut base, user);
                base
            }
            Some(other) => return Err(Error::Config(format!("preset must be a string, got {other}"))),
            None => user,
        };
        let cfg: SimConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.catalog.path, &self.catalog.generate) {
            (Some(_), None) => {}
            (None, Some(g)) => {
                if g.num_videos == 0 || g.num_servers == 0 {
                    return Err(Error::Config(
                        "catalog.generate needs at least one video and one server".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::Config(
                    "catalog needs exactly one of `path` or `generate`".into(),
                ))
            }
        }

        let w = &self.workload;
        if w.trace_path.is_none() {
            match (w.num_buckets, w.num_requests) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => {
                    return Err(Error::Config(
                        "workload needs exactly one of `num_buckets` or `num_requests`".into(),
                    ))
                }
            }
            w.arrival.validate()?;
            w.session.validate()?;
            if !(w.alpha > 0.0 && w.alpha <= 2.0) {
                return Err(Error::Config(format!(
                    "workload.alpha must lie in (0, 2], got {}",
                    w.alpha
                )));
            }
        }

        match (self.cache.capacity_bytes, self.cache.capacity_fraction) {
            (Some(_), None) => {}
            (None, Some(f)) if f > 0.0 && f <= 1.0 => {}
            (None, Some(f)) => {
                return Err(Error::Config(format!(
                    "cache.capacity_fraction must lie in (0, 1], got {f}"
                )))
            }
            _ => {
                return Err(Error::Config(
                    "cache needs exactly one of `capacity_bytes` or `capacity_fraction`".into(),
                ))
            }
        }
        if !(self.cache.hit_latency_s >= 0.0 && self.cache.hit_latency_s.is_finite()) {
            return Err(Error::Config("cache.hit_latency_s must be non-negative".into()));
        }

        self.policy.validate()
    }

    /// Sets the capacity as a fraction, clearing any absolute capacity.
    pub fn set_capacity_fraction(&mut self, fraction: f64) {
        self.cache.capacity_fraction = Some(fraction);
        self.cache.capacity_bytes = None;
    }

    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Keys that exclude each other: setting one in the overlay drops the other
/// from the preset.
const EXCLUSIVE_KEYS: [(&str, &str, &str); 4] = [
    ("catalog", "path", "generate"),
    ("workload", "num_buckets", "num_requests"),
    ("workload", "trace_path", "num_requests"),
    ("cache", "capacity_bytes", "capacity_fraction"),
];

fn clear_exclusive_siblings(base: &mut toml::Table, overlay: &toml::Table) {
    for (table, a, b) in EXCLUSIVE_KEYS {
        let (Some(toml::Value::Table(o)), Some(toml::Value::Table(t))) =
            (overlay.get(table), base.get_mut(table))
        else {
            continue;
        };
        if o.contains_key(a) && !o.contains_key(b) {
            t.remove(b);
        } else if o.contains_key(b) && !o.contains_key(a) {
            t.remove(a);
        }
    }
}

fn merge_tables(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
