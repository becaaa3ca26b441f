//! Replacement scoring.
//!
//! Every policy assigns each resident entry a key; the cache evicts the entry
//! with the smallest key, breaking ties by least recent access. Keys are
//! computed when an entry is admitted and refreshed when it is hit.
//!
//! The rank-value policy scores an entry as
//!
//! ```text
//! RV   = Age + (Cost / Size) * Pv
//! Age  = t_stay / (t_cur - t_ref)          (0 at admission)
//! Cost = C_s + k / B_s
//! Pv   = p^(1/α) / log10(Size)^b,   p = V_(i+1) / V_i
//! ```
//!
//! where `V_i` counts videos requested at least `i` times so far and `i` is
//! the request count of the scored video.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cache::CacheEntry;
use crate::catalog::{ServerProfile, VideoId, VideoMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "RV")]
    Rv,
    #[serde(rename = "LRU")]
    Lru,
    #[serde(rename = "LFU")]
    Lfu,
    #[serde(rename = "LFU_AGING")]
    LfuAging,
    #[serde(rename = "LFUDA")]
    Lfuda,
    #[serde(rename = "FIFO")]
    Fifo,
    #[serde(rename = "RAND")]
    Rand,
    #[serde(rename = "GDS")]
    Gds,
    /// Reference-count GreedyDual variant, `H = L + freq * cost / size`.
    #[serde(rename = "GDS_AGING", alias = "GDS_F")]
    GdsAging,
    #[serde(rename = "LRU_K")]
    LruK,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 10] = [
        PolicyKind::Rv,
        PolicyKind::Lru,
        PolicyKind::Lfu,
        PolicyKind::LfuAging,
        PolicyKind::Lfuda,
        PolicyKind::Fifo,
        PolicyKind::Rand,
        PolicyKind::Gds,
        PolicyKind::GdsAging,
        PolicyKind::LruK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Rv => "RV",
            PolicyKind::Lru => "LRU",
            PolicyKind::Lfu => "LFU",
            PolicyKind::LfuAging => "LFU_AGING",
            PolicyKind::Lfuda => "LFUDA",
            PolicyKind::Fifo => "FIFO",
            PolicyKind::Rand => "RAND",
            PolicyKind::Gds => "GDS",
            PolicyKind::GdsAging => "GDS_AGING",
            PolicyKind::LruK => "LRU_K",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        if norm == "GDS_F" {
            return Ok(PolicyKind::GdsAging);
        }
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown policy kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RvParams {
    /// Zipf-like exponent in the re-access correction.
    pub alpha: f64,
    /// Weight of the size penalty.
    pub b: f64,
    /// Transfer-cost numerator, bytes.
    pub k: f64,
    /// Lower clamp on the Age denominator.
    pub epsilon_ms: u64,
}

impl Default for RvParams {
    fn default() -> Self {
        RvParams {
            alpha: 0.77,
            b: 1.0,
            k: 1_000_000.0,
            epsilon_ms: 1,
        }
    }
}

impl RvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("rv.alpha must be positive, got {}", self.alpha)));
        }
        if self.epsilon_ms < 1 {
            return Err(Error::Config("rv.epsilon_ms must be at least 1".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("rv.k must be positive, got {}", self.k)));
        }
        if !self.b.is_finite() {
            return Err(Error::Config(format!("rv.b must be finite, got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LruKParams {
    pub k: usize,
    /// Retained-information period: history older than this is forgotten.
    pub rp_ms: u64,
}

impl Default for LruKParams {
    fn default() -> Self {
        LruKParams {
            k: 2,
            rp_ms: 3_600_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LfuAgingParams {
    pub max_count: u64,
    pub interval_events: u64,
}

impl Default for LfuAgingParams {
    fn default() -> Self {
        LfuAgingParams {
            max_count: 255,
            interval_events: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default)]
    pub rv: RvParams,
    #[serde(default)]
    pub lru_k: LruKParams,
    #[serde(default)]
    pub lfu_aging: LfuAgingParams,
    /// Seed for RAND victim selection.
    #[serde(default)]
    pub seed: u64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        PolicyConfig {
            kind,
            rv: RvParams::default(),
            lru_k: LruKParams::default(),
            lfu_aging: LfuAgingParams::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rv.validate()?;
        if self.lru_k.k == 0 || self.lru_k.rp_ms == 0 {
            return Err(Error::Config("lru_k.k and lru_k.rp_ms must be positive".into()));
        }
        if self.lfu_aging.max_count == 0 || self.lfu_aging.interval_events == 0 {
            return Err(Error::Config(
                "lfu_aging.max_count and lfu_aging.interval_events must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Scoring strategy plugged into the cache.
///
/// `observe` sees every request before the cache looks the video up. Key
/// methods receive the entry with its access metadata already updated and
/// `stored_key` still holding the previous key.
pub trait ReplacementPolicy: Send {
    fn kind(&self) -> PolicyKind;

    /// Returns `true` when every resident key must be recomputed with
    /// [`ReplacementPolicy::rekey`].
    fn observe(&mut self, _video: &VideoMeta, _now_ms: u64) -> bool {
        false
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, now_ms: u64) -> f64;

    fn hit_key(&mut self, entry: &mut CacheEntry, now_ms: u64) -> f64;

    fn rekey(&mut self, entry: &CacheEntry) -> f64 {
        entry.stored_key
    }

    fn on_evict(&mut self, _victim: &CacheEntry) {}

    /// Index of a uniformly chosen victim, for policies that ignore keys.
    fn random_victim(&mut self, _residents: usize) -> Option<usize> {
        None
    }

    /// How many recent access times the cache keeps per entry.
    fn history_depth(&self) -> usize {
        1
    }

    /// Global inflation value (GreedyDual `L`, LFUDA cache age) if any.
    fn inflation(&self) -> Option<f64> {
        None
    }
}

pub fn build_policy(cfg: &PolicyConfig) -> Result<Box<dyn ReplacementPolicy>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        PolicyKind::Rv => Box::new(RankValue::new(cfg.rv)),
        PolicyKind::Lru => Box::new(Lru),
        PolicyKind::Lfu => Box::new(Lfu),
        PolicyKind::LfuAging => Box::new(LfuAging::new(cfg.lfu_aging)),
        PolicyKind::Lfuda => Box::new(Lfuda::default()),
        PolicyKind::Fifo => Box::new(Fifo),
        PolicyKind::Rand => Box::new(RandomEviction::new(cfg.seed)),
        PolicyKind::Gds => Box::new(GreedyDual::new(cfg.rv.k, false)),
        PolicyKind::GdsAging => Box::new(GreedyDual::new(cfg.rv.k, true)),
        PolicyKind::LruK => Box::new(LruK::new(cfg.lru_k)),
    })
}

// ---------------------------------------------------------------------------
// Rank value

/// Staying time over the last inter-reference gap.
pub fn age(entry: &CacheEntry, now_ms: u64, epsilon_ms: u64) -> f64 {
    let stay = now_ms.saturating_sub(entry.admit_time_ms) as f64;
    let gap = entry.t_cur_ms.saturating_sub(entry.t_ref_ms).max(epsilon_ms);
    stay / gap as f64
}

/// Seconds to connect and move `k` bytes from `server`.
pub fn transfer_cost(server: &ServerProfile, k: f64) -> f64 {
    server.connect_time_s + k / server.bandwidth_bps
}

/// Frequency histogram: `V_i` is the number of distinct videos requested at
/// least `i` times.
#[derive(Debug, Clone, Default)]
pub struct PopularityEstimator {
    counts: HashMap<VideoId, u64>,
    at_least: Vec<u64>,
}

impl PopularityEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an estimator whose videos have the given request counts.
    pub fn from_counts(counts: impl IntoIterator<Item = (VideoId, u64)>) -> Self {
        let mut est = Self::new();
        for (id, n) in counts {
            for _ in 0..n {
                est.observe(id);
            }
        }
        est
    }

    pub fn observe(&mut self, id: VideoId) -> u64 {
        let c = self.counts.entry(id).or_insert(0);
        *c += 1;
        let i = *c as usize;
        if i > self.at_least.len() {
            self.at_least.push(1);
        } else {
            self.at_least[i - 1] += 1;
        }
        *c
    }

    pub fn count(&self, id: VideoId) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    /// `V_i`, zero for `i == 0` or beyond the highest observed count.
    pub fn v(&self, i: u64) -> u64 {
        if i == 0 {
            return 0;
        }
        self.at_least.get(i as usize - 1).copied().unwrap_or(0)
    }

    /// Number of frequency levels with `V_i > 0`.
    pub fn support(&self) -> usize {
        self.at_least.len()
    }

    /// `V_(i+1) / V_i`, or `1 / (1 + support)` when `V_i = 0`.
    pub fn reaccess_ratio(&self, i: u64) -> f64 {
        let vi = self.v(i);
        if vi == 0 {
            1.0 / (1.0 + self.support() as f64)
        } else {
            self.v(i + 1) as f64 / vi as f64
        }
    }

    pub fn histogram(&self) -> &[u64] {
        &self.at_least
    }
}

/// Zipf-corrected, size-penalized re-access probability.
pub fn reaccess_probability(
    est: &PopularityEstimator,
    video_freq: u64,
    size_bytes: u64,
    params: &RvParams,
) -> f64 {
    let p = est.reaccess_ratio(video_freq);
    let size_term = (size_bytes.max(1) as f64).log10().max(1.0);
    p.powf(1.0 / params.alpha) / size_term.powf(params.b)
}

/// Rank value of a resident entry. The entry's origin supplies the transfer
/// cost; its estimator count (or, failing that, its cache frequency) selects
/// the histogram level.
pub fn rank_value(
    entry: &CacheEntry,
    server: &ServerProfile,
    est: &PopularityEstimator,
    now_ms: u64,
    params: &RvParams,
    at_admission: bool,
) -> f64 {
    let age = if at_admission {
        0.0
    } else {
        age(entry, now_ms, params.epsilon_ms)
    };
    let freq = match est.count(entry.video_id) {
        0 => entry.freq_count,
        n => n,
    };
    let pv = reaccess_probability(est, freq, entry.size_bytes, params);
    age + transfer_cost(server, params.k) / entry.size_bytes as f64 * pv
}

#[derive(Debug)]
pub struct RankValue {
    params: RvParams,
    estimator: PopularityEstimator,
}

impl RankValue {
    pub fn new(params: RvParams) -> Self {
        RankValue {
            params,
            estimator: PopularityEstimator::new(),
        }
    }

    pub fn estimator(&self) -> &PopularityEstimator {
        &self.estimator
    }
}

impl ReplacementPolicy for RankValue {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Rv
    }

    fn observe(&mut self, video: &VideoMeta, _now_ms: u64) -> bool {
        self.estimator.observe(video.video_id);
        false
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, now_ms: u64) -> f64 {
        rank_value(entry, &entry.origin, &self.estimator, now_ms, &self.params, true)
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, now_ms: u64) -> f64 {
        rank_value(entry, &entry.origin, &self.estimator, now_ms, &self.params, false)
    }
}

// ---------------------------------------------------------------------------
// Baselines

#[derive(Debug, Default)]
pub struct Lru;

impl ReplacementPolicy for Lru {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lru
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.t_cur_ms as f64
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.t_cur_ms as f64
    }
}

#[derive(Debug, Default)]
pub struct Fifo;

impl ReplacementPolicy for Fifo {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Fifo
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.admit_time_ms as f64
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.stored_key
    }
}

#[derive(Debug, Default)]
pub struct Lfu;

impl ReplacementPolicy for Lfu {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lfu
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.freq_count as f64
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.freq_count as f64
    }
}

/// LFU over capped counts that are halved every `interval_events` requests.
/// The aged count lives in the entry's key.
#[derive(Debug)]
pub struct LfuAging {
    params: LfuAgingParams,
    events: u64,
}

impl LfuAging {
    pub fn new(params: LfuAgingParams) -> Self {
        LfuAging { params, events: 0 }
    }
}

impl ReplacementPolicy for LfuAging {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LfuAging
    }

    fn observe(&mut self, _video: &VideoMeta, _now_ms: u64) -> bool {
        self.events += 1;
        self.events.is_multiple_of(self.params.interval_events)
    }

    fn admit_key(&mut self, _entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        1.0f64.min(self.params.max_count as f64)
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        (entry.stored_key + 1.0).min(self.params.max_count as f64)
    }

    fn rekey(&mut self, entry: &CacheEntry) -> f64 {
        (entry.stored_key / 2.0).floor()
    }
}

/// LFU with dynamic aging: key = frequency + cache age, where the cache age
/// is raised to each victim's key.
#[derive(Debug, Default)]
pub struct Lfuda {
    cache_age: f64,
}

impl ReplacementPolicy for Lfuda {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lfuda
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.freq_count as f64 + self.cache_age
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        entry.freq_count as f64 + self.cache_age
    }

    fn on_evict(&mut self, victim: &CacheEntry) {
        self.cache_age = victim.stored_key;
    }

    fn inflation(&self) -> Option<f64> {
        Some(self.cache_age)
    }
}

/// GreedyDual-Size. Cost is the origin transfer cost with the configured
/// `k`. With `by_frequency`, the cost/size term is scaled by the entry's
/// reference count.
#[derive(Debug)]
pub struct GreedyDual {
    k: f64,
    by_frequency: bool,
    inflation: f64,
}

impl GreedyDual {
    pub fn new(k: f64, by_frequency: bool) -> Self {
        GreedyDual {
            k,
            by_frequency,
            inflation: 0.0,
        }
    }

    fn key(&self, entry: &CacheEntry) -> f64 {
        let unit = transfer_cost(&entry.origin, self.k) / entry.size_bytes as f64;
        let weight = if self.by_frequency {
            entry.freq_count as f64
        } else {
            1.0
        };
        self.inflation + weight * unit
    }
}

impl ReplacementPolicy for GreedyDual {
    fn kind(&self) -> PolicyKind {
        if self.by_frequency {
            PolicyKind::GdsAging
        } else {
            PolicyKind::Gds
        }
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        self.key(entry)
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        self.key(entry)
    }

    fn on_evict(&mut self, victim: &CacheEntry) {
        self.inflation = victim.stored_key;
    }

    fn inflation(&self) -> Option<f64> {
        Some(self.inflation)
    }
}

#[derive(Debug)]
pub struct RandomEviction {
    rng: ChaCha8Rng,
}

impl RandomEviction {
    pub fn new(seed: u64) -> Self {
        RandomEviction {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ReplacementPolicy for RandomEviction {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Rand
    }

    fn admit_key(&mut self, _entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        0.0
    }

    fn hit_key(&mut self, _entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        0.0
    }

    fn random_victim(&mut self, residents: usize) -> Option<usize> {
        (residents > 0).then(|| self.rng.random_range(0..residents))
    }
}

/// Key for entries with fewer than K recorded accesses; they go first, in
/// LRU order via the cache's tie-break.
const LRU_K_INCOMPLETE: f64 = -1.0;

/// LRU-K with a retained-information period. History survives eviction so a
/// re-admitted video keeps its recent references, until it goes unreferenced
/// for longer than `rp_ms`.
#[derive(Debug)]
pub struct LruK {
    params: LruKParams,
    history: HashMap<VideoId, VecDeque<u64>>,
    observed: u64,
}

impl LruK {
    pub fn new(params: LruKParams) -> Self {
        LruK {
            params,
            history: HashMap::new(),
            observed: 0,
        }
    }

    pub fn history_of(&self, id: VideoId) -> Option<&VecDeque<u64>> {
        self.history.get(&id)
    }

    fn key_from_history(&self, entry: &mut CacheEntry) -> f64 {
        let Some(rec) = self.history.get(&entry.video_id) else {
            return LRU_K_INCOMPLETE;
        };
        entry.k_access_times = rec.clone();
        if rec.len() < self.params.k {
            LRU_K_INCOMPLETE
        } else {
            // oldest of the last K references
            rec[rec.len() - self.params.k] as f64
        }
    }
}

impl ReplacementPolicy for LruK {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LruK
    }

    fn observe(&mut self, video: &VideoMeta, now_ms: u64) -> bool {
        let rp = self.params.rp_ms;
        let rec = self.history.entry(video.video_id).or_default();
        if rec.back().is_some_and(|&last| now_ms.saturating_sub(last) > rp) {
            rec.clear();
        }
        rec.push_back(now_ms);
        while rec.len() > self.params.k {
            rec.pop_front();
        }

        self.observed += 1;
        if self.observed.is_multiple_of(100_000) {
            self.history
                .retain(|_, r| r.back().is_some_and(|&last| now_ms.saturating_sub(last) <= rp));
        }
        false
    }

    fn admit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        self.key_from_history(entry)
    }

    fn hit_key(&mut self, entry: &mut CacheEntry, _now_ms: u64) -> f64 {
        self.key_from_history(entry)
    }

    fn history_depth(&self) -> usize {
        self.params.k
    }
}
