//! Simulation driver, sweeps, and policy comparison.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{Access, AuditReport, Cache, Eviction};
use crate::catalog::{generate_catalog, load_catalog, Catalog};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{MetricsAccumulator, RequestOutcome, SimReport};
use crate::policy::{build_policy, PolicyConfig, PolicyKind};
use crate::workload::{
    generate_trace, generate_trace_with_requests, read_trace, validate_trace, SelectionModel,
    TraceEvent,
};

/// Catalog plus materialized trace, shared by every run that compares
/// policies on the same workload.
#[derive(Debug, Clone)]
pub struct Workload {
    pub catalog: Catalog,
    pub trace: Vec<TraceEvent>,
    pub trace_digest: String,
}

impl Workload {
    pub fn new(catalog: Catalog, trace: Vec<TraceEvent>) -> Result<Self> {
        let violations = validate_trace(&trace, &catalog);
        if let Some(first) = violations.first() {
            return Err(Error::Validation(format!(
                "trace has {} violation(s); first: {first}",
                violations.len()
            )));
        }
        let trace_digest = trace_digest(&trace);
        Ok(Workload {
            catalog,
            trace,
            trace_digest,
        })
    }
}

/// SHA-256 over the trace events, hex encoded.
pub fn trace_digest(trace: &[TraceEvent]) -> String {
    let mut h = Sha256::new();
    for ev in trace {
        h.update(ev.timestamp_ms.to_le_bytes());
        h.update(ev.video_id.0.to_le_bytes());
        h.update(ev.bytes_requested.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn build_catalog(config: &SimConfig) -> Result<Catalog> {
    match (&config.catalog.path, &config.catalog.generate) {
        (Some(path), None) => load_catalog(path),
        (None, Some(spec)) => generate_catalog(
            spec.num_videos,
            spec.num_servers,
            &spec.size,
            &spec.servers,
            config.seed,
        ),
        _ => Err(Error::Config(
            "catalog needs exactly one of `path` or `generate`".into(),
        )),
    }
}

pub fn build_trace(config: &SimConfig, catalog: &Catalog) -> Result<Vec<TraceEvent>> {
    let w = &config.workload;
    if let Some(path) = &w.trace_path {
        return Ok(read_trace(path)?.0);
    }
    let selection = SelectionModel::for_catalog(catalog, w.alpha, w.shuffle_ranks_seed)?;
    match (w.num_buckets, w.num_requests) {
        (Some(b), None) => generate_trace(catalog, &w.arrival, &selection, &w.session, b, config.seed),
        (None, Some(n)) => {
            generate_trace_with_requests(catalog, &w.arrival, &selection, &w.session, n, config.seed)
        }
        _ => Err(Error::Config(
            "workload needs exactly one of `num_buckets` or `num_requests`".into(),
        )),
    }
}

/// Provenance line written at the top of generated trace files.
pub fn trace_header(config: &SimConfig) -> String {
    let w = &config.workload;
    format!(
        "vodcache-trace seed={} lambda={} n_max={} bucket_s={} alpha={} shuffle_ranks_seed={} session={} early_quit_prob={} early_window_s={}",
        config.seed,
        w.arrival.lambda,
        w.arrival.n_max,
        w.arrival.bucket_s,
        w.alpha,
        w.shuffle_ranks_seed.map_or("none".to_string(), |s| s.to_string()),
        if w.session.enabled { "on" } else { "off" },
        w.session.early_quit_prob,
        w.session.early_window_s,
    )
}

pub fn prepare_workload(config: &SimConfig) -> Result<Workload> {
    config.validate()?;
    let catalog = build_catalog(config)?;
    let trace = build_trace(config, &catalog)?;
    Workload::new(catalog, trace)
}

pub fn capacity_bytes(config: &SimConfig, catalog: &Catalog) -> Result<u64> {
    match (config.cache.capacity_bytes, config.cache.capacity_fraction) {
        (Some(b), None) => Ok(b),
        (None, Some(f)) if f > 0.0 && f <= 1.0 => Ok((f * catalog.total_bytes() as f64).floor() as u64),
        _ => Err(Error::Config(
            "cache needs exactly one of `capacity_bytes` or `capacity_fraction` in (0, 1]".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub hit_latency_s: f64,
    pub eviction_log: bool,
    pub audit: bool,
    /// Keep the per-event outcome sequence.
    pub record_outcomes: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: SimReport,
    pub capacity_bytes: u64,
    pub evictions: Vec<Eviction>,
    pub outcomes: Vec<RequestOutcome>,
    pub audit: Option<AuditReport>,
    pub trace_digest: String,
}

/// Replays `workload` through one cache. The seed only drives RAND.
pub fn simulate(
    workload: &Workload,
    policy: &PolicyConfig,
    capacity_bytes: u64,
    options: RunOptions,
) -> Result<RunResult> {
    let mut cache = Cache::new(capacity_bytes, build_policy(policy)?);
    if options.audit {
        cache = cache.with_audit();
    }
    let mut metrics = MetricsAccumulator::new(options.hit_latency_s);
    let mut evictions = Vec::new();
    let mut outcomes = Vec::new();

    for ev in &workload.trace {
        let video = workload
            .catalog
            .video(ev.video_id)
            .ok_or_else(|| Error::Validation(format!("video {} not in catalog", ev.video_id)))?;
        let origin = *workload.catalog.origin_of(video);

        let outcome = match cache.request(video, origin, ev.timestamp_ms) {
            Access::Hit => RequestOutcome::Hit,
            Access::NonCacheable => RequestOutcome::NonCacheable,
            Access::Miss { evicted } => {
                metrics.record_evictions(evicted.len() as u64);
                if options.eviction_log {
                    evictions.extend(evicted);
                }
                RequestOutcome::Miss
            }
        };
        metrics.record_event(outcome, video, ev.bytes_requested, &origin);
        if options.record_outcomes {
            outcomes.push(outcome);
        }
    }

    Ok(RunResult {
        report: metrics.finalize(),
        capacity_bytes,
        evictions,
        outcomes,
        audit: cache.audit_report().cloned(),
        trace_digest: workload.trace_digest.clone(),
    })
}

fn effective_policy(config: &SimConfig) -> PolicyConfig {
    let mut p = config.policy;
    p.seed = config.seed.wrapping_add(p.seed);
    p
}

fn run_options(config: &SimConfig) -> RunOptions {
    RunOptions {
        hit_latency_s: config.cache.hit_latency_s,
        eviction_log: config.output.eviction_log,
        audit: config.output.audit,
        record_outcomes: false,
    }
}

pub fn run_on_workload(config: &SimConfig, workload: &Workload) -> Result<(RunRecord, RunResult)> {
    config.validate()?;
    let capacity = capacity_bytes(config, &workload.catalog)?;
    let result = simulate(workload, &effective_policy(config), capacity, run_options(config))?;
    Ok((RunRecord::new(config, &result), result))
}

pub fn run_simulation(config: &SimConfig) -> Result<(RunRecord, RunResult)> {
    let workload = prepare_workload(config)?;
    run_on_workload(config, &workload)
}

/// One run's report plus the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: PolicyKind,
    pub seed: u64,
    pub capacity_bytes: u64,
    pub capacity_fraction: Option<f64>,
    pub workload_alpha: f64,
    pub lambda: f64,
    pub n_max: u32,
    pub session_enabled: bool,
    pub rv_alpha: f64,
    pub rv_b: f64,
    pub rv_k: f64,
    pub trace_digest: String,
    #[serde(flatten)]
    pub report: SimReport,
}

pub const RECORD_COLUMNS: [&str; 25] = [
    "policy",
    "seed",
    "capacity_bytes",
    "capacity_fraction",
    "workload_alpha",
    "lambda",
    "n_max",
    "session_enabled",
    "rv_alpha",
    "rv_b",
    "rv_k",
    "trace_digest",
    "requests",
    "hits",
    "hit_ratio",
    "bytes_requested",
    "bytes_from_server",
    "byte_volume_ratio",
    "byte_hit_ratio",
    "latency_mean_s",
    "latency_p50_s",
    "latency_p95_s",
    "evictions",
    "non_cacheable",
    "empty",
];

impl RunRecord {
    pub fn new(config: &SimConfig, result: &RunResult) -> Self {
        RunRecord {
            policy: config.policy.kind,
            seed: config.seed,
            capacity_bytes: result.capacity_bytes,
            capacity_fraction: config.cache.capacity_fraction,
            workload_alpha: config.workload.alpha,
            lambda: config.workload.arrival.lambda,
            n_max: config.workload.arrival.n_max,
            session_enabled: config.workload.session.enabled,
            rv_alpha: config.policy.rv.alpha,
            rv_b: config.policy.rv.b,
            rv_k: config.policy.rv.k,
            trace_digest: result.trace_digest.clone(),
            report: result.report.clone(),
        }
    }

    pub fn csv_values(&self) -> Vec<String> {
        let r = &self.report;
        vec![
            self.policy.to_string(),
            self.seed.to_string(),
            self.capacity_bytes.to_string(),
            self.capacity_fraction.map_or(String::new(), |f| f.to_string()),
            self.workload_alpha.to_string(),
            self.lambda.to_string(),
            self.n_max.to_string(),
            self.session_enabled.to_string(),
            self.rv_alpha.to_string(),
            self.rv_b.to_string(),
            self.rv_k.to_string(),
            self.trace_digest.clone(),
            r.requests.to_string(),
            r.hits.to_string(),
            r.hit_ratio.to_string(),
            r.bytes_requested.to_string(),
            r.bytes_from_server.to_string(),
            r.byte_volume_ratio.to_string(),
            r.byte_hit_ratio.to_string(),
            r.latency_mean_s.to_string(),
            r.latency_p50_s.to_string(),
            r.latency_p95_s.to_string(),
            r.evictions.to_string(),
            r.non_cacheable.to_string(),
            r.empty.to_string(),
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record(r.csv_values())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_eviction_log(path: &Path, evictions: &[Eviction]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for e in evictions {
        writeln!(w, "{},{},{}", e.timestamp_ms, e.video_id.0, e.score).map_err(|err| Error::io(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CapacityFraction,
    Alpha,
    Lambda,
    Policy,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "capacity_fraction" | "capacity" => Ok(SweepAxis::CapacityFraction),
            "alpha" => Ok(SweepAxis::Alpha),
            "lambda" => Ok(SweepAxis::Lambda),
            "policy" => Ok(SweepAxis::Policy),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxisValues {
    CapacityFraction(Vec<f64>),
    /// Zipf-like exponent of the workload.
    Alpha(Vec<f64>),
    Lambda(Vec<f64>),
    Policy(Vec<PolicyKind>),
}

impl AxisValues {
    pub fn axis(&self) -> SweepAxis {
        match self {
            AxisValues::CapacityFraction(_) => SweepAxis::CapacityFraction,
            AxisValues::Alpha(_) => SweepAxis::Alpha,
            AxisValues::Lambda(_) => SweepAxis::Lambda,
            AxisValues::Policy(_) => SweepAxis::Policy,
        }
    }

    pub fn parse(axis: SweepAxis, values: &[String]) -> Result<Self> {
        let nums = || -> Result<Vec<f64>> {
            values
                .iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("sweep value `{v}`: {e}")))
                })
                .collect()
        };
        Ok(match axis {
            SweepAxis::CapacityFraction => AxisValues::CapacityFraction(nums()?),
            SweepAxis::Alpha => AxisValues::Alpha(nums()?),
            SweepAxis::Lambda => AxisValues::Lambda(nums()?),
            SweepAxis::Policy => AxisValues::Policy(
                values.iter().map(|v| v.parse()).collect::<Result<_>>()?,
            ),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub axis: SweepAxis,
    pub axis_value: String,
    pub config: SimConfig,
    pub outcome: std::result::Result<RunRecord, String>,
}

struct CellPlan {
    axis_value: String,
    config: SimConfig,
    // cells with the same workload group share one trace
    workload_group: usize,
}

/// Runs one simulation per axis value, crossed with `policies` when the axis
/// is numeric and `policies` is non-empty. Cells are independent and run in
/// parallel; a failing cell is reported, not propagated.
pub fn run_sweep(base: &SimConfig, axis: &AxisValues, policies: &[PolicyKind]) -> Vec<SweepCell> {
    let policy_list: Vec<Option<PolicyKind>> = if policies.is_empty() {
        vec![None]
    } else {
        policies.iter().copied().map(Some).collect()
    };
    let with_policy = |mut cfg: SimConfig, p: Option<PolicyKind>| {
        if let Some(kind) = p {
            cfg.policy.kind = kind;
        }
        cfg
    };

    let mut plans = Vec::new();
    match axis {
        AxisValues::Policy(kinds) => {
            for &k in kinds {
                plans.push(CellPlan {
                    axis_value: k.to_string(),
                    config: with_policy(base.clone(), Some(k)),
                    workload_group: 0,
                });
            }
        }
        AxisValues::CapacityFraction(vals) => {
            for &v in vals {
                for &p in &policy_list {
                    let mut cfg = with_policy(base.clone(), p);
                    cfg.set_capacity_fraction(v);
                    plans.push(CellPlan {
                        axis_value: v.to_string(),
                        config: cfg,
                        workload_group: 0,
                    });
                }
            }
        }
        AxisValues::Alpha(vals) | AxisValues::Lambda(vals) => {
            let is_alpha = matches!(axis, AxisValues::Alpha(_));
            for (group, &v) in vals.iter().enumerate() {
                for &p in &policy_list {
                    let mut cfg = with_policy(base.clone(), p);
                    if is_alpha {
                        cfg.workload.alpha = v;
                    } else {
                        cfg.workload.arrival.lambda = v;
                    }
                    plans.push(CellPlan {
                        axis_value: v.to_string(),
                        config: cfg,
                        workload_group: group,
                    });
                }
            }
        }
    }

    let groups: Vec<usize> = {
        let mut seen = HashSet::new();
        plans
            .iter()
            .map(|p| p.workload_group)
            .filter(|g| seen.insert(*g))
            .collect()
    };
    let workloads: Vec<(usize, std::result::Result<Workload, String>)> = groups
        .par_iter()
        .map(|&g| {
            let cfg = &plans.iter().find(|p| p.workload_group == g).expect("group").config;
            (g, prepare_workload(cfg).map_err(|e| e.to_string()))
        })
        .collect();

    let axis_kind = axis.axis();
    plans
        .into_par_iter()
        .map(|plan| {
            let workload = &workloads
                .iter()
                .find(|(g, _)| *g == plan.workload_group)
                .expect("prepared")
                .1;
            let outcome = match workload {
                Ok(w) => run_on_workload(&plan.config, w)
                    .map(|(record, _)| record)
                    .map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            SweepCell {
                axis: axis_kind,
                axis_value: plan.axis_value,
                config: plan.config,
                outcome,
            }
        })
        .collect()
}

pub fn write_sweep_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["axis", "axis_value", "status"];
    header.extend(RECORD_COLUMNS);
    w.write_record(&header)?;
    for cell in cells {
        let axis = serde_json::to_value(cell.axis)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let mut row = vec![axis, cell.axis_value.clone()];
        match &cell.outcome {
            Ok(rec) => {
                row.push("ok".into());
                row.extend(rec.csv_values());
            }
            Err(e) => {
                row.push(format!("failed: {e}"));
                row.extend(std::iter::repeat_n(String::new(), RECORD_COLUMNS.len()));
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub policy: PolicyKind,
    pub capacity_bytes: u64,
    pub hit_ratio: f64,
    pub byte_hit_ratio: f64,
    pub byte_volume_ratio: f64,
    pub latency_mean_s: f64,
    pub delta_hit_ratio: f64,
    pub delta_byte_hit_ratio: f64,
    pub delta_byte_volume_ratio: f64,
    pub delta_latency_mean_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub baseline: PolicyKind,
    pub rows: Vec<ComparisonRow>,
}

impl std::fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<10} {:>14} {:>9} {:>9} {:>9} {:>10} {:>9} {:>9} {:>9} {:>10}",
            "policy", "capacity", "hit", "bytehit", "volume", "latency", "d_hit", "d_bytehit", "d_volume", "d_latency"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:>14} {:>9.4} {:>9.4} {:>9.4} {:>10.3} {:>+9.4} {:>+9.4} {:>+9.4} {:>+10.3}",
                r.policy.name(),
                r.capacity_bytes,
                r.hit_ratio,
                r.byte_hit_ratio,
                r.byte_volume_ratio,
                r.latency_mean_s,
                r.delta_hit_ratio,
                r.delta_byte_hit_ratio,
                r.delta_byte_volume_ratio,
                r.delta_latency_mean_s,
            )?;
        }
        Ok(())
    }
}

/// Metric deltas of every report against the `baseline` report at the same
/// capacity. All reports must come from the same trace.
pub fn compare(reports: &[RunRecord], baseline: PolicyKind) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::Validation("compare needs at least two reports".into()));
    }
    let digest = &reports[0].trace_digest;
    if let Some(other) = reports.iter().find(|r| &r.trace_digest != digest) {
        return Err(Error::Validation(format!(
            "reports come from different traces ({} vs {})",
            digest, other.trace_digest
        )));
    }

    let rows = reports
        .iter()
        .map(|r| {
            let base = reports
                .iter()
                .find(|b| b.policy == baseline && b.capacity_bytes == r.capacity_bytes)
                .ok_or_else(|| {
                    Error::Validation(format!(
                        "no {baseline} report at capacity {} bytes",
                        r.capacity_bytes
                    ))
                })?;
            let (a, b) = (&r.report, &base.report);
            Ok(ComparisonRow {
                policy: r.policy,
                capacity_bytes: r.capacity_bytes,
                hit_ratio: a.hit_ratio,
                byte_hit_ratio: a.byte_hit_ratio,
                byte_volume_ratio: a.byte_volume_ratio,
                latency_mean_s: a.latency_mean_s,
                delta_hit_ratio: a.hit_ratio - b.hit_ratio,
                delta_byte_hit_ratio: a.byte_hit_ratio - b.byte_hit_ratio,
                delta_byte_volume_ratio: a.byte_volume_ratio - b.byte_volume_ratio,
                delta_latency_mean_s: a.latency_mean_s - b.latency_mean_s,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ComparisonTable { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ServerDistSpec, SizeDistSpec};

    fn small_config() -> SimConfig {
        let mut cfg = SimConfig::paper();
        let gen = cfg.catalog.generate.as_mut().unwrap();
        gen.num_videos = 100;
        cfg.workload.num_requests = Some(3_000);
        cfg.workload.session.enabled = false;
        cfg
    }

    #[test]
    fn full_capacity_only_compulsory_misses() {
        let mut cfg = small_config();
        cfg.set_capacity_fraction(1.0);
        cfg.policy.kind = PolicyKind::Lru;
        let w = prepare_workload(&cfg).unwrap();
        let distinct = w.trace.iter().map(|e| e.video_id).collect::<HashSet<_>>().len() as u64;
        let (rec, _) = run_on_workload(&cfg, &w).unwrap();
        assert_eq!(rec.report.requests - rec.report.hits, distinct);
        assert_eq!(rec.report.evictions, 0);
    }

    #[test]
    fn single_video_five_times() {
        let catalog = generate_catalog(
            1,
            1,
            &SizeDistSpec::fixed(1_000),
            &ServerDistSpec::default(),
            1,
        )
        .unwrap();
        let id = catalog.videos()[0].video_id;
        let trace = (0..5)
            .map(|t| TraceEvent {
                timestamp_ms: t * 10,
                video_id: id,
                bytes_requested: 1_000,
            })
            .collect();
        let w = Workload::new(catalog, trace).unwrap();
        for kind in PolicyKind::ALL {
            let r = simulate(&w, &PolicyConfig::new(kind), 1_000, RunOptions::default()).unwrap();
            assert_eq!(r.report.hit_ratio, 0.8, "{kind}");
        }
    }

    #[test]
    fn invalid_trace_is_a_validation_error() {
        let catalog = generate_catalog(2, 1, &SizeDistSpec::fixed(10), &ServerDistSpec::default(), 1)
            .unwrap();
        let trace = vec![TraceEvent {
            timestamp_ms: 0,
            video_id: crate::catalog::VideoId(77),
            bytes_requested: 1,
        }];
        assert!(matches!(Workload::new(catalog, trace), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_sweep() {
        let cells = run_sweep(&small_config(), &AxisValues::CapacityFraction(vec![]), &[]);
        assert!(cells.is_empty());
    }

    #[test]
    fn policy_axis_shares_trace() {
        let cells = run_sweep(
            &small_config(),
            &AxisValues::Policy(vec![PolicyKind::Rv, PolicyKind::Lru]),
            &[],
        );
        let digests: Vec<_> = cells
            .iter()
            .map(|c| c.outcome.as_ref().unwrap().trace_digest.clone())
            .collect();
        assert_eq!(digests.len(), 2);
        assert_eq!(digests[0], digests[1]);
    }

    #[test]
    fn failed_cell_does_not_abort_sweep() {
        let cells = run_sweep(
            &small_config(),
            &AxisValues::CapacityFraction(vec![0.1, 1.5]),
            &[PolicyKind::Lru],
        );
        assert_eq!(cells.len(), 2);
        assert!(cells[0].outcome.is_ok());
        assert!(cells[1].outcome.is_err());
    }

    #[test]
    fn sweep_cell_equals_isolated_run() {
        let base = small_config();
        let cells = run_sweep(
            &base,
            &AxisValues::Alpha(vec![0.6, 0.9]),
            &[PolicyKind::Rv, PolicyKind::Gds],
        );
        assert_eq!(cells.len(), 4);
        for cell in &cells {
            let (alone, _) = run_simulation(&cell.config).unwrap();
            assert_eq!(cell.outcome.as_ref().unwrap(), &alone);
        }
    }

    #[test]
    fn compare_deltas() {
        let cells = run_sweep(
            &small_config(),
            &AxisValues::Policy(vec![PolicyKind::Lru, PolicyKind::Rv]),
            &[],
        );
        let recs: Vec<RunRecord> = cells.into_iter().map(|c| c.outcome.unwrap()).collect();
        let t = compare(&recs, PolicyKind::Lru).unwrap();
        assert_eq!(t.rows[0].delta_hit_ratio, 0.0);
        assert_eq!(t.rows[0].delta_latency_mean_s, 0.0);
        let same = compare(&[recs[1].clone(), recs[1].clone()], PolicyKind::Rv).unwrap();
        assert!(same.rows.iter().all(|r| r.delta_hit_ratio == 0.0 && r.delta_byte_hit_ratio == 0.0));

        let mut other = recs[1].clone();
        other.trace_digest = "different".into();
        assert!(compare(&[recs[0].clone(), other], PolicyKind::Lru).is_err());
        assert!(compare(&recs[..1], PolicyKind::Lru).is_err());
    }

    #[test]
    fn record_json_round_trip() {
        let (rec, _) = run_simulation(&small_config()).unwrap();
        let back = RunRecord::from_json(&rec.to_json().unwrap(), Path::new("x")).unwrap();
        assert_eq!(back, rec);
        assert_eq!(rec.csv_values().len(), RECORD_COLUMNS.len());
    }
}
