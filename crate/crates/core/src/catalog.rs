//! Video corpus and origin-server cost parameters.
//!
//! A [`Catalog`] is immutable once built and validated. The on-disk form is a
//! TOML document with two arrays of tables, `servers` and `videos`:
//!
//! ```toml
//! [[servers]]
//! server_id = 0
//! connect_time_s = 0.5
//! bandwidth_Bps = 1000000.0
//!
//! [[videos]]
//! video_id = 1
//! size_bytes = 250000000
//! duration_s = 500.0
//! server_id = 0
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MB: f64 = 1_000_000.0;
pub const GB: f64 = 1_000_000_000.0;

/// Default playback bitrate used to derive durations: 4 Mbit/s.
pub const DEFAULT_BITRATE_BPS: f64 = 4_000_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VideoId(pub u64);

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServerId(pub u32);

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: VideoId,
    pub size_bytes: u64,
    pub duration_s: f64,
    pub server_id: ServerId,
}

/// Origin server: connection setup time and link bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerProfile {
    pub server_id: ServerId,
    pub connect_time_s: f64,
    #[serde(rename = "bandwidth_Bps")]
    pub bandwidth_bps: f64,
}

impl ServerProfile {
    /// Seconds to fetch `bytes` from this server, including connection setup.
    pub fn fetch_time_s(&self, bytes: u64) -> f64 {
        self.connect_time_s + bytes as f64 / self.bandwidth_bps
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogFile {
    servers: Vec<ServerProfile>,
    videos: Vec<VideoMeta>,
}

/// A validated video corpus. Field `videos.len()` is the corpus size used by
/// the popularity model.
#[derive(Debug, Clone)]
pub struct Catalog {
    videos: Vec<VideoMeta>,
    servers: Vec<ServerProfile>,
    video_index: HashMap<VideoId, usize>,
    server_index: HashMap<ServerId, usize>,
}

impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.videos == other.videos && self.servers == other.servers
    }
}

impl Catalog {
    pub fn new(servers: Vec<ServerProfile>, videos: Vec<VideoMeta>) -> Result<Self> {
        if videos.is_empty() {
            return Err(Error::Validation("catalog has no videos".into()));
        }
        if servers.is_empty() {
            return Err(Error::Validation("catalog has no servers".into()));
        }

        let mut server_index = HashMap::with_capacity(servers.len());
        for (i, s) in servers.iter().enumerate() {
            if !(s.bandwidth_bps > 0.0 && s.bandwidth_bps.is_finite()) {
                return Err(Error::Validation(format!(
                    "server {}: bandwidth_Bps must be positive, got {}",
                    s.server_id, s.bandwidth_bps
                )));
            }
            if !(s.connect_time_s >= 0.0 && s.connect_time_s.is_finite()) {
                return Err(Error::Validation(format!(
                    "server {}: connect_time_s must be non-negative, got {}",
                    s.server_id, s.connect_time_s
                )));
            }
            if server_index.insert(s.server_id, i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate server_id {}",
                    s.server_id
                )));
            }
        }

        let mut video_index = HashMap::with_capacity(videos.len());
        for (i, v) in videos.iter().enumerate() {
            if v.size_bytes == 0 {
                return Err(Error::Validation(format!(
                    "video {}: size_bytes must be at least 1",
                    v.video_id
                )));
            }
            if !(v.duration_s > 0.0 && v.duration_s.is_finite()) {
                return Err(Error::Validation(format!(
                    "video {}: duration_s must be positive, got {}",
                    v.video_id, v.duration_s
                )));
            }
            if !server_index.contains_key(&v.server_id) {
                return Err(Error::Validation(format!(
                    "video {}: unknown server_id {}",
                    v.video_id, v.server_id
                )));
            }
            if video_index.insert(v.video_id, i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate video_id {}",
                    v.video_id
                )));
            }
        }

        Ok(Catalog {
            videos,
            servers,
            video_index,
            server_index,
        })
    }

    pub fn videos(&self) -> &[VideoMeta] {
        &self.videos
    }

    pub fn servers(&self) -> &[ServerProfile] {
        &self.servers
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn video(&self, id: VideoId) -> Option<&VideoMeta> {
        self.video_index.get(&id).map(|&i| &self.videos[i])
    }

    pub fn server(&self, id: ServerId) -> Option<&ServerProfile> {
        self.server_index.get(&id).map(|&i| &self.servers[i])
    }

    /// Origin server of a video. Both lookups are guaranteed by validation
    /// for ids that exist in the catalog.
    pub fn origin_of(&self, video: &VideoMeta) -> &ServerProfile {
        self.server(video.server_id)
            .expect("validated catalog references known servers")
    }

    pub fn total_bytes(&self) -> u64 {
        self.videos.iter().map(|v| v.size_bytes).sum()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = CatalogFile {
            servers: self.servers.clone(),
            videos: self.videos.clone(),
        };
        toml::to_string(&file).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        Catalog::new(file.servers, file.videos)
    }
}

pub fn save_catalog(catalog: &Catalog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, catalog.to_toml_string()?).map_err(|e| Error::io(path, e))
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Catalog::from_toml_str(&text, path)
}

/// A scalar distribution used by the catalog generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDist {
    Fixed { value: f64 },
    Uniform { min: f64, max: f64 },
    LogUniform { min: f64, max: f64 },
}

impl ValueDist {
    fn validate(&self, what: &str, allow_zero: bool) -> Result<()> {
        let ok_point = |v: f64| v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
        let ok = match *self {
            ValueDist::Fixed { value } => ok_point(value),
            ValueDist::Uniform { min, max } => ok_point(min) && ok_point(max) && min <= max,
            // log-uniform needs a strictly positive lower bound
            ValueDist::LogUniform { min, max } => {
                min > 0.0 && min.is_finite() && max.is_finite() && min <= max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid {what} distribution: {self:?}")))
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ValueDist::Fixed { value } => value,
            ValueDist::Uniform { min, max } => {
                let u: f64 = rng.random();
                min + (max - min) * u
            }
            ValueDist::LogUniform { min, max } => {
                let u: f64 = rng.random();
                let (lo, hi) = (min.ln(), max.ln());
                (lo + (hi - lo) * u).exp().clamp(min, max)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerAssignment {
    #[default]
    Uniform,
    RoundRobin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerDistSpec {
    pub connect_time_s: ValueDist,
    #[serde(rename = "bandwidth_Bps")]
    pub bandwidth_bps: ValueDist,
    #[serde(default)]
    pub assignment: ServerAssignment,
}

impl Default for ServerDistSpec {
    fn default() -> Self {
        ServerDistSpec {
            connect_time_s: ValueDist::LogUniform { min: 0.05, max: 2.0 },
            bandwidth_bps: ValueDist::LogUniform {
                min: 1.0 * MB,
                max: 50.0 * MB,
            },
            assignment: ServerAssignment::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDistSpec {
    pub size_bytes: ValueDist,
    /// Playback bitrate in bits per second; durations are `size * 8 / bitrate`.
    #[serde(default = "default_bitrate")]
    pub bitrate_bps: f64,
}

fn default_bitrate() -> f64 {
    DEFAULT_BITRATE_BPS
}

impl Default for SizeDistSpec {
    fn default() -> Self {
        SizeDistSpec {
            size_bytes: ValueDist::LogUniform {
                min: 10.0 * MB,
                max: 2.0 * GB,
            },
            bitrate_bps: DEFAULT_BITRATE_BPS,
        }
    }
}

impl SizeDistSpec {
    pub fn fixed(bytes: u64) -> Self {
        SizeDistSpec {
            size_bytes: ValueDist::Fixed {
                value: bytes as f64,
            },
            bitrate_bps: DEFAULT_BITRATE_BPS,
        }
    }
}

/// Generates a synthetic catalog. Video ids run `1..=num_videos` and server
/// ids `0..num_servers`.
pub fn generate_catalog(
    num_videos: usize,
    num_servers: usize,
    size_dist: &SizeDistSpec,
    server_dist: &ServerDistSpec,
    seed: u64,
) -> Result<Catalog> {
    if num_videos == 0 {
        return Err(Error::Config("num_videos must be at least 1".into()));
    }
    if num_servers == 0 {
        return Err(Error::Config("num_servers must be at least 1".into()));
    }
    size_dist.size_bytes.validate("size_bytes", false)?;
    if !(size_dist.bitrate_bps > 0.0 && size_dist.bitrate_bps.is_finite()) {
        return Err(Error::Config(format!(
            "bitrate_bps must be positive, got {}",
            size_dist.bitrate_bps
        )));
    }
    server_dist.connect_time_s.validate("connect_time_s", true)?;
    server_dist.bandwidth_bps.validate("bandwidth_Bps", false)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let servers: Vec<ServerProfile> = (0..num_servers)
        .map(|i| ServerProfile {
            server_id: ServerId(i as u32),
            connect_time_s: server_dist.connect_time_s.sample(&mut rng),
            bandwidth_bps: server_dist.bandwidth_bps.sample(&mut rng),
        })
        .collect();

    let bytes_per_s = size_dist.bitrate_bps / 8.0;
    let videos = (0..num_videos)
        .map(|i| {
            let size_bytes = (size_dist.size_bytes.sample(&mut rng).round() as u64).max(1);
            let server = match server_dist.assignment {
                ServerAssignment::Uniform => rng.random_range(0..num_servers),
                ServerAssignment::RoundRobin => i % num_servers,
            };
            VideoMeta {
                video_id: VideoId(i as u64 + 1),
                size_bytes,
                duration_s: size_bytes as f64 / bytes_per_s,
                server_id: ServerId(server as u32),
            }
        })
        .collect();

    Catalog::new(servers, videos)
}
