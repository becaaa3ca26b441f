use vodcache::config::SimConfig;
use vodcache::policy::PolicyKind;
use vodcache::sim::{prepare_workload, run_on_workload, run_sweep, AxisValues};

fn small_config() -> SimConfig {
    let mut cfg = SimConfig::paper();
    cfg.workload.num_requests = Some(20_000);
    cfg
}

#[test]
fn lru_hit_ratio_grows_with_capacity() {
    let cfg = small_config();
    let fractions = vec![0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
    let cells = run_sweep(&cfg, &AxisValues::CapacityFraction(fractions), &[PolicyKind::Lru]);
    let ratios: Vec<f64> = cells
        .iter()
        .map(|c| c.outcome.as_ref().unwrap().report.hit_ratio)
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] <= w[1]), "{ratios:?}");
}

#[test]
fn audited_runs_have_no_violations() {
    let mut cfg = small_config();
    cfg.output.audit = true;
    let workload = prepare_workload(&cfg).unwrap();
    for kind in PolicyKind::ALL {
        for fraction in [0.05, 0.2] {
            cfg.policy.kind = kind;
            cfg.set_capacity_fraction(fraction);
            let (record, result) = run_on_workload(&cfg, &workload).unwrap();
            let audit = result.audit.unwrap();
            assert_eq!(audit.violations(), 0, "{kind} at {fraction}: {audit:?}");
            assert!(audit.checks > 0);
            assert_eq!(record.report.requests, 20_000);
        }
    }
}

#[test]
fn runs_are_reproducible_in_process() {
    let cfg = small_config();
    let a = vodcache::run_simulation(&cfg).unwrap().0;
    let b = vodcache::run_simulation(&cfg).unwrap().0;
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(vodcache::run_simulation(&other).unwrap().0.trace_digest, a.trace_digest);
}
