mod common;

use common::{micro_workload, reference, replay, UNIT};
use vodcache::catalog::{Catalog, ServerId, VideoId, VideoMeta};
use vodcache::policy::PolicyKind;
use vodcache::sim::Workload;
use vodcache::workload::TraceEvent;

#[test]
fn lru_lfu_fifo_match_linear_scan_reference() {
    for (kind, bad) in common::oracle_mismatches(1_000) {
        assert_eq!(bad, 0, "{kind} diverged from the reference on {bad} traces");
    }
}

#[test]
fn lru_hand_trace() {
    // v1@10, v2@20, v1@30 with room for two; v3@40 pushes out v2.
    let videos = (1..=3)
        .map(|id| VideoMeta {
            video_id: VideoId(id),
            size_bytes: UNIT,
            duration_s: 1.0,
            server_id: ServerId(0),
        })
        .collect();
    let catalog = Catalog::new(common::servers(), videos).unwrap();
    let trace = [(10, 1), (20, 2), (30, 1), (40, 3)]
        .map(|(t, id)| TraceEvent {
            timestamp_ms: t,
            video_id: VideoId(id),
            bytes_requested: UNIT,
        })
        .to_vec();
    let w = Workload::new(catalog, trace).unwrap();
    let r = replay(&w, PolicyKind::Lru, 2 * UNIT);
    assert_eq!(r.evictions, vec![(40, VideoId(2))]);
    assert_eq!(r, reference(&w, PolicyKind::Lru, 2 * UNIT));
}

#[test]
fn tiny_capacity_bypasses_everything() {
    let w = micro_workload(3);
    let r = replay(&w, PolicyKind::Lru, UNIT / 2);
    assert!(r.evictions.is_empty());
    assert!(r
        .outcomes
        .iter()
        .all(|o| *o == vodcache::metrics::RequestOutcome::NonCacheable));
    assert_eq!(r, reference(&w, PolicyKind::Lru, UNIT / 2));
}
