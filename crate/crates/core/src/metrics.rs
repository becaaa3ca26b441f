//! Hit ratio, byte volume transferred, and latency.
//!
//! A cacheable miss fetches the whole object from origin, so with truncated
//! sessions `bytes_from_server` can exceed `bytes_requested`. The report keeps
//! both raw counts and floors `byte_hit_ratio` at zero.

use serde::{Deserialize, Serialize};

use crate::catalog::{ServerProfile, VideoMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestOutcome {
    Hit,
    Miss,
    NonCacheable,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub requests: u64,
    pub hits: u64,
    pub bytes_requested: u64,
    pub bytes_from_server: u64,
    pub evictions: u64,
    pub non_cacheable: u64,
    pub latencies_s: Vec<f64>,
    hit_latency_s: f64,
}

impl MetricsAccumulator {
    pub fn new(hit_latency_s: f64) -> Self {
        MetricsAccumulator {
            hit_latency_s,
            ..Default::default()
        }
    }

    pub fn record_event(
        &mut self,
        outcome: RequestOutcome,
        video: &VideoMeta,
        bytes_requested: u64,
        server: &ServerProfile,
    ) {
        self.requests += 1;
        self.bytes_requested += bytes_requested;
        let latency = match outcome {
            RequestOutcome::Hit => {
                self.hits += 1;
                self.hit_latency_s
            }
            RequestOutcome::Miss => {
                self.bytes_from_server += video.size_bytes;
                server.fetch_time_s(video.size_bytes)
            }
            RequestOutcome::NonCacheable => {
                self.non_cacheable += 1;
                self.bytes_from_server += bytes_requested;
                server.fetch_time_s(bytes_requested)
            }
        };
        self.latencies_s.push(latency);
    }

    pub fn record_evictions(&mut self, n: u64) {
        self.evictions += n;
    }

    /// Field-wise sum plus concatenated latency samples.
    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.requests += other.requests;
        self.hits += other.hits;
        self.bytes_requested += other.bytes_requested;
        self.bytes_from_server += other.bytes_from_server;
        self.evictions += other.evictions;
        self.non_cacheable += other.non_cacheable;
        self.latencies_s.extend_from_slice(&other.latencies_s);
    }

    pub fn finalize(&self) -> SimReport {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let byte_volume_ratio = ratio(self.bytes_from_server, self.bytes_requested);
        let empty = self.requests == 0;

        let mut sorted = self.latencies_s.clone();
        sorted.sort_by(f64::total_cmp);
        let latency_mean_s = if sorted.is_empty() {
            0.0
        } else {
            sorted.iter().sum::<f64>() / sorted.len() as f64
        };

        SimReport {
            requests: self.requests,
            hits: self.hits,
            hit_ratio: ratio(self.hits, self.requests),
            bytes_requested: self.bytes_requested,
            bytes_from_server: self.bytes_from_server,
            byte_volume_ratio,
            byte_hit_ratio: if empty {
                0.0
            } else {
                (1.0 - byte_volume_ratio).max(0.0)
            },
            latency_mean_s,
            latency_p50_s: nearest_rank(&sorted, 50.0),
            latency_p95_s: nearest_rank(&sorted, 95.0),
            evictions: self.evictions,
            non_cacheable: self.non_cacheable,
            empty,
        }
    }
}

/// Nearest-rank percentile of an ascending slice; 0 when empty.
pub fn nearest_rank(sorted: &[f64], percentile: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub requests: u64,
    pub hits: u64,
    pub hit_ratio: f64,
    pub bytes_requested: u64,
    pub bytes_from_server: u64,
    pub byte_volume_ratio: f64,
    pub byte_hit_ratio: f64,
    pub latency_mean_s: f64,
    pub latency_p50_s: f64,
    pub latency_p95_s: f64,
    pub evictions: u64,
    pub non_cacheable: u64,
    pub empty: bool,
}
