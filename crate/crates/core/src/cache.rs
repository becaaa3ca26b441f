//! Byte-capacity proxy cache with whole-object admission.
//!
//! On a miss the object is always admitted unless it is larger than the whole
//! cache. Victims are taken one at a time, smallest policy key first, until
//! the object fits. Ties on the key go to the least recently used entry, then
//! to the earliest admission.

use std::collections::{BTreeSet, HashMap, VecDeque};

use ordered_float::OrderedFloat;

use crate::catalog::{ServerProfile, VideoId, VideoMeta};
use crate::error::{Error, Result};
use crate::policy::{PolicyKind, ReplacementPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub video_id: VideoId,
    pub size_bytes: u64,
    pub origin: ServerProfile,
    /// Start of the entry's stay in the cache.
    pub admit_time_ms: u64,
    /// Previous reference time.
    pub t_ref_ms: u64,
    /// Most recent reference time.
    pub t_cur_ms: u64,
    pub freq_count: u64,
    /// The policy's key as of the last admit, hit or aging pass.
    pub stored_key: f64,
    pub k_access_times: VecDeque<u64>,
    seq: u64,
}

impl CacheEntry {
    pub fn new(video: &VideoMeta, origin: ServerProfile, now_ms: u64) -> Self {
        CacheEntry {
            video_id: video.video_id,
            size_bytes: video.size_bytes,
            origin,
            admit_time_ms: now_ms,
            t_ref_ms: now_ms,
            t_cur_ms: now_ms,
            freq_count: 1,
            stored_key: 0.0,
            k_access_times: VecDeque::from([now_ms]),
            seq: 0,
        }
    }

    fn victim_key(&self) -> VictimKey {
        VictimKey {
            score: OrderedFloat(self.stored_key),
            last_access_ms: self.t_cur_ms,
            seq: self.seq,
            video_id: self.video_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct VictimKey {
    score: OrderedFloat<f64>,
    last_access_ms: u64,
    seq: u64,
    video_id: VideoId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eviction {
    pub timestamp_ms: u64,
    pub video_id: VideoId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmitOutcome {
    Admitted { evicted: Vec<Eviction> },
    /// Larger than the whole cache; served from origin without touching the
    /// cache.
    NonCacheable,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Access {
    Hit,
    Miss { evicted: Vec<Eviction> },
    NonCacheable,
}

impl Access {
    pub fn is_hit(&self) -> bool {
        matches!(self, Access::Hit)
    }
}

/// Invariant violations seen while auditing is enabled.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub checks: u64,
    pub capacity: u64,
    pub accounting: u64,
    pub victim_not_minimal: u64,
    /// Inflation value went down between evictions.
    pub inflation_decreased: u64,
    /// Inflation value exceeded some resident key right after an eviction.
    pub inflation_above_min: u64,
}

impl AuditReport {
    pub fn violations(&self) -> u64 {
        self.capacity
            + self.accounting
            + self.victim_not_minimal
            + self.inflation_decreased
            + self.inflation_above_min
    }
}

pub struct Cache {
    capacity_bytes: u64,
    used_bytes: u64,
    entries: HashMap<VideoId, CacheEntry>,
    index: BTreeSet<VictimKey>,
    // dense resident list for uniform victim choice
    residents: Vec<VideoId>,
    positions: HashMap<VideoId, usize>,
    policy: Box<dyn ReplacementPolicy>,
    next_seq: u64,
    audit: Option<AuditReport>,
    last_inflation: Option<f64>,
}

impl std::fmt::Debug for Cache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cache")
            .field("policy", &self.policy.kind())
            .field("capacity_bytes", &self.capacity_bytes)
            .field("used_bytes", &self.used_bytes)
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl Cache {
    /// A zero capacity makes every object non-cacheable.
    pub fn new(capacity_bytes: u64, policy: Box<dyn ReplacementPolicy>) -> Self {
        Cache {
            capacity_bytes,
            used_bytes: 0,
            entries: HashMap::new(),
            index: BTreeSet::new(),
            residents: Vec::new(),
            positions: HashMap::new(),
            policy,
            next_seq: 0,
            audit: None,
            last_inflation: None,
        }
    }

    /// Turns on per-operation invariant checks (linear in the resident count).
    pub fn with_audit(mut self) -> Self {
        self.audit = Some(AuditReport::default());
        self
    }

    pub fn audit_report(&self) -> Option<&AuditReport> {
        self.audit.as_ref()
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }

    pub fn used_bytes(&self) -> u64 {
        self.used_bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn policy_kind(&self) -> PolicyKind {
        self.policy.kind()
    }

    pub fn policy(&self) -> &dyn ReplacementPolicy {
        self.policy.as_ref()
    }

    pub fn contains(&self, id: VideoId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn entry(&self, id: VideoId) -> Option<&CacheEntry> {
        self.entries.get(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }

    /// `(video_id, stored_key)` for every resident, ordered by id.
    pub fn resident_set(&self) -> Vec<(VideoId, f64)> {
        let mut out: Vec<_> = self
            .entries
            .values()
            .map(|e| (e.video_id, e.stored_key))
            .collect();
        out.sort_by_key(|(id, _)| *id);
        out
    }

    /// Feeds one request to the policy before lookup. Aging policies may
    /// rewrite every resident key here.
    pub fn observe(&mut self, video: &VideoMeta, now_ms: u64) {
        if self.policy.observe(video, now_ms) {
            self.rekey_all();
        }
    }

    fn rekey_all(&mut self) {
        let mut ids: Vec<VideoId> = self.entries.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let entry = self.entries.get_mut(&id).expect("listed id");
            self.index.remove(&entry.victim_key());
            entry.stored_key = self.policy.rekey(entry);
            self.index.insert(entry.victim_key());
        }
    }

    /// Returns whether `video_id` is resident. A hit refreshes the entry's
    /// reference times, count and key; a miss changes nothing.
    pub fn lookup(&mut self, video_id: VideoId, now_ms: u64) -> bool {
        let depth = self.policy.history_depth().max(1);
        let Some(entry) = self.entries.get_mut(&video_id) else {
            return false;
        };
        self.index.remove(&entry.victim_key());
        entry.t_ref_ms = entry.t_cur_ms;
        entry.t_cur_ms = now_ms;
        entry.freq_count += 1;
        entry.k_access_times.push_back(now_ms);
        while entry.k_access_times.len() > depth {
            entry.k_access_times.pop_front();
        }
        entry.stored_key = self.policy.hit_key(entry, now_ms);
        self.index.insert(entry.victim_key());
        self.check_accounting();
        true
    }

    /// Admits a non-resident video, evicting as needed.
    pub fn admit(
        &mut self,
        video: &VideoMeta,
        origin: ServerProfile,
        now_ms: u64,
    ) -> Result<AdmitOutcome> {
        if self.entries.contains_key(&video.video_id) {
            return Err(Error::Domain(format!(
                "video {} is already resident",
                video.video_id
            )));
        }
        if video.size_bytes > self.capacity_bytes {
            self.check_accounting();
            return Ok(AdmitOutcome::NonCacheable);
        }

        let mut evicted = Vec::new();
        while self.used_bytes + video.size_bytes > self.capacity_bytes {
            let victim = self.pick_victim();
            let entry = self.remove(victim);
            self.policy.on_evict(&entry);
            evicted.push(Eviction {
                timestamp_ms: now_ms,
                video_id: entry.video_id,
                score: entry.stored_key,
            });
            self.check_inflation();
        }

        let mut entry = CacheEntry::new(video, origin, now_ms);
        entry.seq = self.next_seq;
        self.next_seq += 1;
        entry.stored_key = self.policy.admit_key(&mut entry, now_ms);

        self.used_bytes += entry.size_bytes;
        self.index.insert(entry.victim_key());
        self.positions.insert(entry.video_id, self.residents.len());
        self.residents.push(entry.video_id);
        self.entries.insert(entry.video_id, entry);

        self.check_accounting();
        Ok(AdmitOutcome::Admitted { evicted })
    }

    /// Observe, look up, and admit on miss.
    pub fn request(&mut self, video: &VideoMeta, origin: ServerProfile, now_ms: u64) -> Access {
        self.observe(video, now_ms);
        if self.lookup(video.video_id, now_ms) {
            return Access::Hit;
        }
        match self
            .admit(video, origin, now_ms)
            .expect("lookup missed, so the video is not resident")
        {
            AdmitOutcome::Admitted { evicted } => Access::Miss { evicted },
            AdmitOutcome::NonCacheable => Access::NonCacheable,
        }
    }

    fn pick_victim(&mut self) -> VideoId {
        if let Some(i) = self.policy.random_victim(self.residents.len()) {
            return self.residents[i];
        }
        let chosen = *self.index.first().expect("cache non-empty while over capacity");
        if let Some(audit) = self.audit.as_mut() {
            // independent linear scan over residents
            let min = self
                .entries
                .values()
                .min_by(|a, b| {
                    a.stored_key
                        .total_cmp(&b.stored_key)
                        .then(a.t_cur_ms.cmp(&b.t_cur_ms))
                        .then(a.seq.cmp(&b.seq))
                })
                .expect("non-empty");
            if min.video_id != chosen.video_id {
                audit.victim_not_minimal += 1;
            }
        }
        chosen.video_id
    }

    fn remove(&mut self, id: VideoId) -> CacheEntry {
        let entry = self.entries.remove(&id).expect("victim is resident");
        self.index.remove(&entry.victim_key());
        self.used_bytes -= entry.size_bytes;
        let pos = self.positions.remove(&id).expect("resident has a position");
        self.residents.swap_remove(pos);
        if let Some(moved) = self.residents.get(pos) {
            self.positions.insert(*moved, pos);
        }
        entry
    }

    fn check_accounting(&mut self) {
        let Some(audit) = self.audit.as_mut() else {
            return;
        };
        audit.checks += 1;
        if self.used_bytes > self.capacity_bytes {
            audit.capacity += 1;
        }
        let sum: u64 = self.entries.values().map(|e| e.size_bytes).sum();
        if sum != self.used_bytes
            || self.index.len() != self.entries.len()
            || self.residents.len() != self.entries.len()
        {
            audit.accounting += 1;
        }
    }

    fn check_inflation(&mut self) {
        let Some(audit) = self.audit.as_mut() else {
            return;
        };
        let Some(current) = self.policy.inflation() else {
            return;
        };
        if let Some(prev) = self.last_inflation {
            if current < prev {
                audit.inflation_decreased += 1;
            }
        }
        self.last_inflation = Some(current);
        if self.entries.values().any(|e| e.stored_key < current) {
            audit.inflation_above_min += 1;
        }
    }
}
