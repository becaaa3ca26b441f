//! Synthetic request traces.
//!
//! Per-bucket request counts follow the modified Poisson model: a count `x`
//! has mass proportional to `e^-λ λ^(N-x) / (N-x)!` on `0..=N`, renormalized
//! over that support. Each request picks a video by Zipf-like popularity
//! rank and, optionally, a truncated viewing session.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, VideoId, VideoMeta};
use crate::error::{Error, Result};

/// Per-bucket arrival model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalModel {
    /// Mean of the underlying Poisson.
    pub lambda: f64,
    /// Maximum number of arrivals per bucket.
    pub n_max: u32,
    /// Bucket length in seconds.
    #[serde(default = "default_bucket_s")]
    pub bucket_s: f64,
}

fn default_bucket_s() -> f64 {
    60.0
}

impl Default for ArrivalModel {
    fn default() -> Self {
        ArrivalModel {
            lambda: 15.0,
            n_max: 27,
            bucket_s: 60.0,
        }
    }
}

impl ArrivalModel {
    pub fn new(lambda: f64, n_max: u32) -> Result<Self> {
        let m = ArrivalModel {
            lambda,
            n_max,
            bucket_s: 60.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "arrival lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.n_max == 0 {
            return Err(Error::Config("arrival n_max must be at least 1".into()));
        }
        if !(self.bucket_s > 0.0 && self.bucket_s.is_finite()) {
            return Err(Error::Config(format!(
                "bucket_s must be positive, got {}",
                self.bucket_s
            )));
        }
        Ok(())
    }

    /// Non-fatal advisories about the parameters.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lambda > self.n_max as f64 {
            out.push(format!(
                "lambda {} exceeds n_max {}: most Poisson draws will be rejected",
                self.lambda, self.n_max
            ));
        }
        out
    }

    pub fn bucket_ms(&self) -> u64 {
        ((self.bucket_s * 1000.0).round() as u64).max(1)
    }

    /// Renormalized masses of the underlying Poisson over `y = 0..=N`,
    /// indexed by `y` (so `x = N - y`).
    fn truncated_poisson(&self) -> Vec<f64> {
        let n = self.n_max as usize;
        let ln_lambda = self.lambda.ln();
        let mut ln_fact = 0.0;
        let log_terms: Vec<f64> = (0..=n)
            .map(|y| {
                if y > 0 {
                    ln_fact += (y as f64).ln();
                }
                -self.lambda + y as f64 * ln_lambda - ln_fact
            })
            .collect();
        let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_terms.iter().map(|t| (t - peak).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Masses of `x = 0..=N`, indexed by `x`.
    pub fn pmf_table(&self) -> Vec<f64> {
        let mut by_y = self.truncated_poisson();
        by_y.reverse();
        by_y
    }

    /// Expected arrivals per bucket.
    pub fn mean_arrivals(&self) -> f64 {
        self.pmf_table()
            .iter()
            .enumerate()
            .map(|(x, p)| x as f64 * p)
            .sum()
    }
}

pub fn modified_poisson_pmf(x: i64, model: &ArrivalModel) -> f64 {
    if x < 0 || x > model.n_max as i64 {
        return 0.0;
    }
    model.pmf_table()[x as usize]
}

/// Draws per-bucket arrival counts: `y ~ Poisson(λ)`, reject `y > N`,
/// return `N - y`.
pub fn sample_arrivals<R: Rng + ?Sized>(
    model: &ArrivalModel,
    num_buckets: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let sampler = ArrivalSampler::new(model)?;
    Ok((0..num_buckets).map(|_| sampler.sample(rng)).collect())
}

struct ArrivalSampler {
    poisson: Poisson<f64>,
    n_max: u32,
}

impl ArrivalSampler {
    fn new(model: &ArrivalModel) -> Result<Self> {
        model.validate()?;
        let poisson = Poisson::new(model.lambda)
            .map_err(|e| Error::Config(format!("poisson({}): {e}", model.lambda)))?;
        Ok(ArrivalSampler {
            poisson,
            n_max: model.n_max,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        loop {
            let y = self.poisson.sample(rng);
            if y <= self.n_max as f64 {
                return self.n_max - y as u32;
            }
        }
    }
}

/// Zipf-like popularity over a catalog: rank `i` is requested with
/// probability `i^-α / Σ_j j^-α`.
#[derive(Debug, Clone)]
pub struct SelectionModel {
    alpha: f64,
    /// `rank_map[r - 1]` is the video at popularity rank `r`.
    rank_map: Vec<VideoId>,
    cumulative: Vec<f64>,
    normalizer: f64,
}

impl SelectionModel {
    pub fn new(alpha: f64, rank_map: Vec<VideoId>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Config(format!(
                "zipf alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if rank_map.is_empty() {
            return Err(Error::Config("selection model needs at least one video".into()));
        }
        let mut seen = HashSet::with_capacity(rank_map.len());
        if let Some(dup) = rank_map.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::Config(format!("rank map repeats video {dup}")));
        }

        let weights: Vec<f64> = (1..=rank_map.len())
            .map(|i| (i as f64).powf(-alpha))
            .collect();
        // smallest terms first
        let normalizer: f64 = weights.iter().rev().sum();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();

        Ok(SelectionModel {
            alpha,
            rank_map,
            cumulative,
            normalizer,
        })
    }

    /// Ranks the catalog by ascending video id (id order = popularity order),
    /// or by a seeded shuffle when `shuffle_seed` is given.
    pub fn for_catalog(catalog: &Catalog, alpha: f64, shuffle_seed: Option<u64>) -> Result<Self> {
        let mut ids: Vec<VideoId> = catalog.videos().iter().map(|v| v.video_id).collect();
        ids.sort_unstable();
        if let Some(seed) = shuffle_seed {
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        SelectionModel::new(alpha, ids)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> usize {
        self.rank_map.len()
    }

    pub fn rank_map(&self) -> &[VideoId] {
        &self.rank_map
    }

    pub fn pmf(&self, rank: usize) -> Result<f64> {
        if rank == 0 || rank > self.m() {
            return Err(Error::Domain(format!(
                "rank {rank} outside 1..={}",
                self.m()
            )));
        }
        Ok((rank as f64).powf(-self.alpha) / self.normalizer)
    }

    /// Draws a popularity rank in `1..=M`.
    pub fn sample_rank<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let target = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        idx.min(self.m() - 1) + 1
    }

    pub fn sample_video<R: Rng + ?Sized>(&self, rng: &mut R) -> VideoId {
        self.rank_map[self.sample_rank(rng) - 1]
    }
}

pub fn zipf_like_pmf(rank: usize, model: &SelectionModel) -> Result<f64> {
    model.pmf(rank)
}

pub fn sample_video<R: Rng + ?Sized>(model: &SelectionModel, rng: &mut R) -> VideoId {
    model.sample_video(rng)
}

/// Early session termination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionModel {
    pub enabled: bool,
    #[serde(default = "default_quit_prob")]
    pub early_quit_prob: f64,
    #[serde(default = "default_early_window")]
    pub early_window_s: f64,
}

fn default_quit_prob() -> f64 {
    0.70
}

fn default_early_window() -> f64 {
    1200.0
}

impl Default for SessionModel {
    fn default() -> Self {
        SessionModel {
            enabled: false,
            early_quit_prob: default_quit_prob(),
            early_window_s: default_early_window(),
        }
    }
}

impl SessionModel {
    pub fn enabled() -> Self {
        SessionModel {
            enabled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.early_quit_prob) {
            return Err(Error::Config(format!(
                "early_quit_prob must lie in [0, 1], got {}",
                self.early_quit_prob
            )));
        }
        if !(self.early_window_s > 0.0 && self.early_window_s.is_finite()) {
            return Err(Error::Config(format!(
                "early_window_s must be positive, got {}",
                self.early_window_s
            )));
        }
        Ok(())
    }
}

/// Seconds watched in one session, or `None` when truncation is disabled.
pub fn sample_watch_time<R: Rng + ?Sized>(
    video: &VideoMeta,
    session: &SessionModel,
    rng: &mut R,
) -> Option<f64> {
    if !session.enabled {
        return None;
    }
    let duration = video.duration_s;
    let window = session.early_window_s;
    let quits_early = rng.random::<f64>() < session.early_quit_prob;
    // 1 - u maps [0, 1) onto (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let watched = if quits_early {
        duration.min(window) * u
    } else if duration > window {
        window + (duration - window) * u
    } else {
        duration
    };
    Some(watched)
}

pub fn sample_bytes<R: Rng + ?Sized>(
    video: &VideoMeta,
    session: &SessionModel,
    rng: &mut R,
) -> u64 {
    match sample_watch_time(video, session, rng) {
        None => video.size_bytes,
        Some(watched) => {
            let bytes = (video.size_bytes as f64 * watched / video.duration_s).ceil();
            (bytes as u64).clamp(1, video.size_bytes)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestamp_ms: u64,
    pub video_id: VideoId,
    pub bytes_requested: u64,
}

/// Stream ids keep each sampler's draws independent of the others.
const STREAM_ARRIVALS: u64 = 1;
const STREAM_TIMESTAMPS: u64 = 2;
const STREAM_SELECTION: u64 = 3;
const STREAM_SESSION: u64 = 4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct TraceGenerator<'a> {
    catalog: &'a Catalog,
    selection: &'a SelectionModel,
    session: SessionModel,
    arrivals: ArrivalSampler,
    bucket_ms: u64,
    next_bucket: u64,
    arrival_rng: ChaCha8Rng,
    time_rng: ChaCha8Rng,
    select_rng: ChaCha8Rng,
    session_rng: ChaCha8Rng,
}

impl<'a> TraceGenerator<'a> {
    fn new(
        catalog: &'a Catalog,
        arrival: &ArrivalModel,
        selection: &'a SelectionModel,
        session: &SessionModel,
        seed: u64,
    ) -> Result<Self> {
        session.validate()?;
        if selection.m() != catalog.len() {
            return Err(Error::Config(format!(
                "selection model covers {} videos but catalog has {}",
                selection.m(),
                catalog.len()
            )));
        }
        if let Some(id) = selection
            .rank_map()
            .iter()
            .find(|id| catalog.video(**id).is_none())
        {
            return Err(Error::Config(format!(
                "selection model references video {id} missing from catalog"
            )));
        }
        Ok(TraceGenerator {
            catalog,
            selection,
            session: *session,
            arrivals: ArrivalSampler::new(arrival)?,
            bucket_ms: arrival.bucket_ms(),
            next_bucket: 0,
            arrival_rng: stream_rng(seed, STREAM_ARRIVALS),
            time_rng: stream_rng(seed, STREAM_TIMESTAMPS),
            select_rng: stream_rng(seed, STREAM_SELECTION),
            session_rng: stream_rng(seed, STREAM_SESSION),
        })
    }

    fn push_bucket(&mut self, out: &mut Vec<TraceEvent>) {
        let count = self.arrivals.sample(&mut self.arrival_rng);
        let start = self.next_bucket * self.bucket_ms;
        self.next_bucket += 1;

        let mut offsets: Vec<u64> = (0..count)
            .map(|_| self.time_rng.random_range(0..self.bucket_ms))
            .collect();
        offsets.sort_unstable();

        for offset in offsets {
            let video_id = self.selection.sample_video(&mut self.select_rng);
            let video = self.catalog.video(video_id).expect("checked in new");
            let bytes_requested = sample_bytes(video, &self.session, &mut self.session_rng);
            out.push(TraceEvent {
                timestamp_ms: start + offset,
                video_id,
                bytes_requested,
            });
        }
    }
}

/// Generates `num_buckets` buckets worth of requests.
pub fn generate_trace(
    catalog: &Catalog,
    arrival: &ArrivalModel,
    selection: &SelectionModel,
    session: &SessionModel,
    num_buckets: usize,
    seed: u64,
) -> Result<Vec<TraceEvent>> {
    let mut gen = TraceGenerator::new(catalog, arrival, selection, session, seed)?;
    let mut out = Vec::with_capacity((num_buckets as f64 * arrival.mean_arrivals()) as usize);
    for _ in 0..num_buckets {
        gen.push_bucket(&mut out);
    }
    Ok(out)
}

/// Generates whole buckets until at least `num_requests` events exist, then
/// truncates to exactly `num_requests`.
pub fn generate_trace_with_requests(
    catalog: &Catalog,
    arrival: &ArrivalModel,
    selection: &SelectionModel,
    session: &SessionModel,
    num_requests: usize,
    seed: u64,
) -> Result<Vec<TraceEvent>> {
    let mut gen = TraceGenerator::new(catalog, arrival, selection, session, seed)?;
    let mut out = Vec::with_capacity(num_requests + arrival.n_max as usize);
    while out.len() < num_requests {
        gen.push_bucket(&mut out);
    }
    out.truncate(num_requests);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    TimestampDecreased { previous_ms: u64, timestamp_ms: u64 },
    UnknownVideo(VideoId),
    BytesOutOfRange { bytes_requested: u64, size_bytes: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceViolation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl std::fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ViolationKind::TimestampDecreased {
                previous_ms,
                timestamp_ms,
            } => write!(
                f,
                "event {}: timestamp {timestamp_ms} precedes {previous_ms}",
                self.index
            ),
            ViolationKind::UnknownVideo(id) => {
                write!(f, "event {}: video {id} not in catalog", self.index)
            }
            ViolationKind::BytesOutOfRange {
                bytes_requested,
                size_bytes,
            } => write!(
                f,
                "event {}: bytes_requested {bytes_requested} outside 1..={size_bytes}",
                self.index
            ),
        }
    }
}

/// Lists every problem in `trace`; an empty result means the trace is valid.
pub fn validate_trace(trace: &[TraceEvent], catalog: &Catalog) -> Vec<TraceViolation> {
    let mut out = Vec::new();
    let mut previous: Option<u64> = None;
    for (index, ev) in trace.iter().enumerate() {
        if let Some(prev) = previous {
            if ev.timestamp_ms < prev {
                out.push(TraceViolation {
                    index,
                    kind: ViolationKind::TimestampDecreased {
                        previous_ms: prev,
                        timestamp_ms: ev.timestamp_ms,
                    },
                });
            }
        }
        previous = Some(ev.timestamp_ms);

        match catalog.video(ev.video_id) {
            None => out.push(TraceViolation {
                index,
                kind: ViolationKind::UnknownVideo(ev.video_id),
            }),
            Some(v) if ev.bytes_requested == 0 || ev.bytes_requested > v.size_bytes => {
                out.push(TraceViolation {
                    index,
                    kind: ViolationKind::BytesOutOfRange {
                        bytes_requested: ev.bytes_requested,
                        size_bytes: v.size_bytes,
                    },
                })
            }
            Some(_) => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStats {
    pub events: usize,
    pub distinct_videos: usize,
    pub span_ms: u64,
    pub bytes_requested: u64,
    /// Fraction of requests that went to the single most requested video.
    pub top_video_share: f64,
}

pub fn trace_stats(trace: &[TraceEvent]) -> TraceStats {
    let mut counts: std::collections::HashMap<VideoId, usize> = Default::default();
    for ev in trace {
        *counts.entry(ev.video_id).or_default() += 1;
    }
    let span_ms = match (trace.first(), trace.last()) {
        (Some(a), Some(b)) => b.timestamp_ms.saturating_sub(a.timestamp_ms),
        _ => 0,
    };
    let top = counts.values().copied().max().unwrap_or(0);
    TraceStats {
        events: trace.len(),
        distinct_videos: counts.len(),
        span_ms,
        bytes_requested: trace.iter().map(|e| e.bytes_requested).sum(),
        top_video_share: if trace.is_empty() {
            0.0
        } else {
            top as f64 / trace.len() as f64
        },
    }
}

/// Writes `timestamp_ms,video_id,bytes_requested` lines, preceded by an
/// optional `#` header line.
pub fn write_trace(path: impl AsRef<Path>, trace: &[TraceEvent], header: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    if let Some(h) = header {
        writeln!(w, "# {h}").map_err(io)?;
    }
    for ev in trace {
        writeln!(w, "{},{},{}", ev.timestamp_ms, ev.video_id.0, ev.bytes_requested).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a trace file. Returns the events and the header text, if any.
pub fn read_trace(path: impl AsRef<Path>) -> Result<(Vec<TraceEvent>, Option<String>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut events = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if header.is_none() {
                header = Some(h.trim().to_string());
            }
            continue;
        }
        let parse_err = |field: &str, detail: String| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: field `{field}`: {detail}", lineno + 1),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                "record",
                format!("expected 3 comma-separated fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize, name: &str| -> Result<u64> {
            fields[i]
                .trim()
                .parse::<u64>()
                .map_err(|e| parse_err(name, e.to_string()))
        };
        events.push(TraceEvent {
            timestamp_ms: num(0, "timestamp_ms")?,
            video_id: VideoId(num(1, "video_id")?),
            bytes_requested: num(2, "bytes_requested")?,
        });
    }
    Ok((events, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generate_catalog, ServerDistSpec, ServerId, SizeDistSpec};

    fn video(size: u64, duration_s: f64) -> VideoMeta {
        VideoMeta {
            video_id: VideoId(1),
            size_bytes: size,
            duration_s,
            server_id: ServerId(0),
        }
    }

    fn small_catalog(n: usize) -> Catalog {
        generate_catalog(n, 2, &SizeDistSpec::default(), &ServerDistSpec::default(), 3).unwrap()
    }

    #[test]
    fn pmf_at_n_is_renormalized_zero_term() {
        let m = ArrivalModel::new(15.0, 27).unwrap();
        // e^-15 / Z, Z = P(Poisson(15) <= 27); reference value from a
        // 40-digit series evaluation
        let expected = 3.064_280_848_797_448e-7;
        let got = modified_poisson_pmf(27, &m);
        assert!((got - expected).abs() / expected < 1e-10, "{got}");
    }

    #[test]
    fn pmf_out_of_support() {
        let m = ArrivalModel::new(15.0, 27).unwrap();
        assert_eq!(modified_poisson_pmf(28, &m), 0.0);
        assert_eq!(modified_poisson_pmf(-1, &m), 0.0);
    }

    #[test]
    fn pmf_mode_value() {
        let m = ArrivalModel::new(15.0, 27).unwrap();
        // integer lambda: y = 14 and y = 15 tie for the mode
        let expected = 0.102_611_926_557_199_02;
        let at_12 = modified_poisson_pmf(12, &m);
        let at_13 = modified_poisson_pmf(13, &m);
        assert!((at_12 - expected).abs() < 1e-12, "{at_12}");
        assert!((at_13 - expected).abs() < 1e-12, "{at_13}");
        let max = m.pmf_table().into_iter().fold(0.0, f64::max);
        assert!((max - expected).abs() < 1e-15);
    }

    #[test]
    fn pmf_sums_to_one() {
        for lambda in [1.0, 15.0, 100.0] {
            for n in [5, 27, 200] {
                let m = ArrivalModel::new(lambda, n).unwrap();
                let total: f64 = (0..=n as i64).map(|x| modified_poisson_pmf(x, &m)).sum();
                assert!((total - 1.0).abs() < 1e-9, "lambda={lambda} n={n}: {total}");
            }
        }
    }

    #[test]
    fn lambda_above_n_warns() {
        let m = ArrivalModel::new(40.0, 27).unwrap();
        assert_eq!(m.warnings().len(), 1);
        assert!(ArrivalModel::default().warnings().is_empty());
        assert!(ArrivalModel::new(0.0, 27).is_err());
        assert!(ArrivalModel::new(1.0, 0).is_err());
    }

    #[test]
    fn arrival_mean_matches_truncated_poisson() {
        let m = ArrivalModel::new(15.0, 27).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs = sample_arrivals(&m, 1_000_000, &mut rng).unwrap();
        assert!(xs.iter().all(|&x| x <= 27));
        let mean_y = xs.iter().map(|&x| (27 - x) as f64).sum::<f64>() / xs.len() as f64;
        // truncated-Poisson mean 14.976017..., from direct series evaluation
        assert!((mean_y - 14.976017136837883).abs() < 0.05, "{mean_y}");
        assert!((mean_y - 15.0).abs() < 0.05);
    }

    #[test]
    fn near_zero_lambda_gives_n() {
        let m = ArrivalModel::new(1e-9, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs = sample_arrivals(&m, 10_000, &mut rng).unwrap();
        assert!(xs.iter().filter(|&&x| x == 1).count() >= 9_999);
    }

    #[test]
    fn arrivals_deterministic() {
        let m = ArrivalModel::default();
        let a = sample_arrivals(&m, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = sample_arrivals(&m, 500, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    fn identity(m: usize) -> Vec<VideoId> {
        (1..=m as u64).map(VideoId).collect()
    }

    #[test]
    fn zipf_hand_value() {
        let s = SelectionModel::new(1.0, identity(3)).unwrap();
        assert!((zipf_like_pmf(1, &s).unwrap() - 6.0 / 11.0).abs() < 1e-15);
        assert!(zipf_like_pmf(0, &s).is_err());
        assert!(zipf_like_pmf(4, &s).is_err());
    }

    #[test]
    fn zipf_uniform_limit() {
        let s = SelectionModel::new(1e-12, identity(50)).unwrap();
        for r in [1, 17, 50] {
            assert!((s.pmf(r).unwrap() - 1.0 / 50.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zipf_sums_to_one_and_decreases() {
        for alpha in [0.2, 0.64, 0.77, 0.83, 1.0] {
            for m in [10, 1000] {
                let s = SelectionModel::new(alpha, identity(m)).unwrap();
                let total: f64 = (1..=m).map(|r| s.pmf(r).unwrap()).sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
            let s = SelectionModel::new(alpha, identity(1000)).unwrap();
            for r in 1..1000 {
                assert!(s.pmf(r).unwrap() > s.pmf(r + 1).unwrap());
            }
        }
    }

    #[test]
    fn zipf_rejects_bad_alpha() {
        assert!(SelectionModel::new(0.0, identity(3)).is_err());
        assert!(SelectionModel::new(2.5, identity(3)).is_err());
        assert!(SelectionModel::new(1.0, vec![VideoId(1), VideoId(1)]).is_err());
    }

    #[test]
    fn single_video_always_selected() {
        let s = SelectionModel::new(0.77, vec![VideoId(9)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| s.sample_video(&mut rng) == VideoId(9)));
    }

    #[test]
    fn rank_frequency_slope() {
        let s = SelectionModel::new(0.77, identity(1000)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = vec![0u64; 1001];
        for _ in 0..1_000_000 {
            counts[s.sample_rank(&mut rng)] += 1;
        }
        let pts: Vec<(f64, f64)> = (1..=100)
            .map(|r| ((r as f64).ln(), (counts[r] as f64).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 0.77).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn sample_video_deterministic() {
        let s = SelectionModel::new(0.77, identity(100)).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200).map(|_| s.sample_video(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn shuffled_rank_map_is_permutation() {
        let c = small_catalog(50);
        let s = SelectionModel::for_catalog(&c, 0.77, Some(9)).unwrap();
        let mut ids = s.rank_map().to_vec();
        ids.sort();
        assert_eq!(ids, identity(50));
        let plain = SelectionModel::for_catalog(&c, 0.77, None).unwrap();
        assert_eq!(plain.rank_map(), identity(50).as_slice());
    }

    #[test]
    fn disabled_session_requests_whole_video() {
        let v = video(1_000, 600.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_bytes(&v, &SessionModel::default(), &mut rng), 1_000);
    }

    #[test]
    fn short_video_early_branch_clamped() {
        let v = video(1_000, 600.0);
        let session = SessionModel {
            enabled: true,
            early_quit_prob: 1.0,
            early_window_s: 1200.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let w = sample_watch_time(&v, &session, &mut rng).unwrap();
            assert!(w > 0.0 && w <= 600.0);
            let b = sample_bytes(&v, &session, &mut rng);
            assert!((1..=1_000).contains(&b));
        }
    }

    #[test]
    fn early_quit_fraction() {
        let v = video(3_600_000_000, 7200.0);
        let session = SessionModel::enabled();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let early = (0..n)
            .filter(|_| sample_watch_time(&v, &session, &mut rng).unwrap() <= 1200.0)
            .count();
        let frac = early as f64 / n as f64;
        assert!((frac - 0.70).abs() < 0.01, "{frac}");
    }

    #[test]
    fn empty_trace_for_zero_buckets() {
        let c = small_catalog(20);
        let s = SelectionModel::for_catalog(&c, 0.77, None).unwrap();
        let t = generate_trace(&c, &ArrivalModel::default(), &s, &SessionModel::default(), 0, 1)
            .unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn generated_trace_is_valid_and_sized() {
        let c = small_catalog(200);
        let s = SelectionModel::for_catalog(&c, 0.77, None).unwrap();
        let arrival = ArrivalModel::default();
        let t = generate_trace(&c, &arrival, &s, &SessionModel::enabled(), 1000, 8).unwrap();
        assert!(validate_trace(&t, &c).is_empty());
        // E[x] = 27 - 14.976017 = 12.023983 from the series oracle
        let expected = 1000.0 * 12.023982863162117;
        let got = t.len() as f64;
        assert!((got - expected).abs() / expected < 0.05, "{got}");
        assert!((arrival.mean_arrivals() - 12.023982863162117).abs() < 1e-9);
    }

    #[test]
    fn trace_with_exact_request_count() {
        let c = small_catalog(30);
        let s = SelectionModel::for_catalog(&c, 0.77, None).unwrap();
        let t = generate_trace_with_requests(
            &c,
            &ArrivalModel::default(),
            &s,
            &SessionModel::default(),
            1234,
            4,
        )
        .unwrap();
        assert_eq!(t.len(), 1234);
        assert!(validate_trace(&t, &c).is_empty());
    }

    #[test]
    fn mismatched_selection_rejected() {
        let c = small_catalog(20);
        let s = SelectionModel::new(0.77, identity(10)).unwrap();
        let r = generate_trace(&c, &ArrivalModel::default(), &s, &SessionModel::default(), 3, 1);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn validation_reports_violations() {
        let c = small_catalog(5);
        let size = c.video(VideoId(1)).unwrap().size_bytes;
        let trace = vec![
            TraceEvent { timestamp_ms: 10, video_id: VideoId(1), bytes_requested: size },
            TraceEvent { timestamp_ms: 20, video_id: VideoId(1), bytes_requested: size + 1 },
            TraceEvent { timestamp_ms: 5, video_id: VideoId(2), bytes_requested: 1 },
            TraceEvent { timestamp_ms: 30, video_id: VideoId(99), bytes_requested: 1 },
        ];
        let v = validate_trace(&trace, &c);
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].index, 1);
        assert!(matches!(v[0].kind, ViolationKind::BytesOutOfRange { .. }));
        assert!(matches!(v[1].kind, ViolationKind::TimestampDecreased { .. }));
        assert_eq!(v[2].kind, ViolationKind::UnknownVideo(VideoId(99)));
        assert!(validate_trace(&trace[..1], &c).is_empty());
    }

    #[test]
    fn trace_file_round_trip() {
        let c = small_catalog(40);
        let s = SelectionModel::for_catalog(&c, 0.77, None).unwrap();
        let t = generate_trace(&c, &ArrivalModel::default(), &s, &SessionModel::enabled(), 20, 2)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace(&p, &t, Some("seed=2")).unwrap();
        let (back, header) = read_trace(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(header.as_deref(), Some("seed=2"));
    }

    #[test]
    fn bad_trace_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "# h\n1,2,3\n4,x,6\n").unwrap();
        let msg = read_trace(&p).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("video_id"), "{msg}");
    }
}
