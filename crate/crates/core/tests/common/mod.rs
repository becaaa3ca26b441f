#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vodcache::catalog::{Catalog, ServerId, ServerProfile, VideoId, VideoMeta};
use vodcache::metrics::RequestOutcome;
use vodcache::policy::{PolicyConfig, PolicyKind};
use vodcache::sim::{simulate, RunOptions, Workload};
use vodcache::workload::TraceEvent;

pub const UNIT: u64 = 1_000;

pub fn servers() -> Vec<ServerProfile> {
    vec![
        ServerProfile {
            server_id: ServerId(0),
            connect_time_s: 0.5,
            bandwidth_bps: 1e6,
        },
        ServerProfile {
            server_id: ServerId(1),
            connect_time_s: 0.05,
            bandwidth_bps: 2e7,
        },
    ]
}

/// 20-video catalog with sizes of 1..=4 units; mean object ~2.5 units.
pub fn micro_catalog(rng: &mut ChaCha8Rng, videos: u64) -> Catalog {
    let list = (1..=videos)
        .map(|id| VideoMeta {
            video_id: VideoId(id),
            size_bytes: rng.random_range(1..=4) * UNIT,
            duration_s: 60.0,
            server_id: ServerId((id % 2) as u32),
        })
        .collect();
    Catalog::new(servers(), list).unwrap()
}

/// Non-decreasing timestamps with frequent ties.
pub fn micro_trace(rng: &mut ChaCha8Rng, catalog: &Catalog, events: usize) -> Vec<TraceEvent> {
    let mut t = 0u64;
    (0..events)
        .map(|_| {
            t += rng.random_range(0..3) * 1_000;
            let id = VideoId(rng.random_range(1..=catalog.len() as u64));
            let size = catalog.video(id).unwrap().size_bytes;
            TraceEvent {
                timestamp_ms: t,
                video_id: id,
                bytes_requested: rng.random_range(1..=size),
            }
        })
        .collect()
}

pub fn micro_workload(seed: u64) -> Workload {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let catalog = micro_catalog(&mut rng, 20);
    let trace = micro_trace(&mut rng, &catalog, 200);
    Workload::new(catalog, trace).unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub outcomes: Vec<RequestOutcome>,
    /// `(timestamp_ms, video_id)` per eviction, in order.
    pub evictions: Vec<(u64, VideoId)>,
}

pub fn replay(workload: &Workload, kind: PolicyKind, capacity: u64) -> Replay {
    let opts = RunOptions {
        eviction_log: true,
        record_outcomes: true,
        ..Default::default()
    };
    let r = simulate(workload, &PolicyConfig::new(kind), capacity, opts).unwrap();
    Replay {
        outcomes: r.outcomes,
        evictions: r
            .evictions
            .iter()
            .map(|e| (e.timestamp_ms, e.video_id))
            .collect(),
    }
}

struct Slot {
    id: VideoId,
    size: u64,
    admitted: u64,
    last: u64,
    freq: u64,
    order: u64,
}

/// Reference simulator: a plain vector of residents and a full scan per
/// victim. Ties on the policy key fall to the older last access, then to
/// the earlier admission.
pub fn reference(workload: &Workload, kind: PolicyKind, capacity: u64) -> Replay {
    let key = |s: &Slot| -> (u64, u64, u64) {
        match kind {
            PolicyKind::Lru => (s.last, s.last, s.order),
            PolicyKind::Lfu => (s.freq, s.last, s.order),
            PolicyKind::Fifo => (s.admitted, s.last, s.order),
            other => panic!("no reference model for {other}"),
        }
    };
    let mut slots: Vec<Slot> = Vec::new();
    let mut used = 0u64;
    let mut order = 0u64;
    let mut out = Replay {
        outcomes: Vec::new(),
        evictions: Vec::new(),
    };
    for ev in &workload.trace {
        let size = workload.catalog.video(ev.video_id).unwrap().size_bytes;
        if let Some(s) = slots.iter_mut().find(|s| s.id == ev.video_id) {
            s.last = ev.timestamp_ms;
            s.freq += 1;
            out.outcomes.push(RequestOutcome::Hit);
            continue;
        }
        if size > capacity {
            out.outcomes.push(RequestOutcome::NonCacheable);
            continue;
        }
        while used + size > capacity {
            let mut best = 0;
            for i in 1..slots.len() {
                if key(&slots[i]) < key(&slots[best]) {
                    best = i;
                }
            }
            let gone = slots.remove(best);
            used -= gone.size;
            out.evictions.push((ev.timestamp_ms, gone.id));
        }
        slots.push(Slot {
            id: ev.video_id,
            size,
            admitted: ev.timestamp_ms,
            last: ev.timestamp_ms,
            freq: 1,
            order,
        });
        order += 1;
        used += size;
        out.outcomes.push(RequestOutcome::Miss);
    }
    out
}

/// Runs the oracle comparison over `traces` micro-traces; returns the number
/// of mismatching traces per policy.
pub fn oracle_mismatches(traces: u64) -> Vec<(PolicyKind, u64)> {
    let kinds = [PolicyKind::Lru, PolicyKind::Lfu, PolicyKind::Fifo];
    let mut bad = vec![0u64; kinds.len()];
    for seed in 0..traces {
        let w = micro_workload(seed);
        // about five average objects, varied a little per trace
        let capacity = (10 + seed % 6) * UNIT + (seed % 3) * 500;
        for (i, &kind) in kinds.iter().enumerate() {
            if replay(&w, kind, capacity) != reference(&w, kind, capacity) {
                bad[i] += 1;
            }
        }
    }
    kinds.into_iter().zip(bad).collect()
}
