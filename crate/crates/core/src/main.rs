use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vodcache::catalog::save_catalog;
use vodcache::config::{Preset, SimConfig};
use vodcache::error::{Error, Result};
use vodcache::policy::PolicyKind;
use vodcache::sim::{
    self, build_catalog, build_trace, compare, run_on_workload, run_sweep, trace_header,
    write_eviction_log, write_records_csv, write_sweep_csv, AxisValues, RunRecord, SweepAxis,
};
use vodcache::workload::{trace_stats, write_trace};

#[derive(Parser)]
#[command(name = "vodcache", version, about = "Video-on-demand proxy cache replacement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset used when no config file is given.
    #[arg(long, default_value = "paper")]
    preset: String,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path)?,
            None => Preset::from_name(&self.preset)?.config(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunOverrides {
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long, conflicts_with = "capacity_bytes")]
    capacity_fraction: Option<f64>,
    #[arg(long)]
    capacity_bytes: Option<u64>,
    /// Catalog file to use instead of the configured source.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Trace file to replay instead of generating one.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl RunOverrides {
    fn apply(&self, cfg: &mut SimConfig) {
        if let Some(p) = self.policy {
            cfg.policy.kind = p;
        }
        if let Some(f) = self.capacity_fraction {
            cfg.set_capacity_fraction(f);
        }
        if let Some(b) = self.capacity_bytes {
            cfg.cache.capacity_bytes = Some(b);
            cfg.cache.capacity_fraction = None;
        }
        if let Some(c) = &self.catalog {
            cfg.catalog.path = Some(c.clone());
            cfg.catalog.generate = None;
        }
        if let Some(t) = &self.trace {
            cfg.workload.trace_path = Some(t.clone());
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a catalog file.
    GenCatalog {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "catalog.toml")]
        out: PathBuf,
    },
    /// Generate a trace file.
    GenTrace {
        #[command(flatten)]
        common: Common,
        /// Catalog file to draw videos from.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Run one simulation and write report.json / report.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: RunOverrides,
        /// Write evictions.csv alongside the report.
        #[arg(long)]
        eviction_log: bool,
        /// Check cache invariants after every event.
        #[arg(long)]
        audit: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run a parameter sweep and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: RunOverrides,
        /// capacity_fraction, alpha, lambda or policy.
        #[arg(long)]
        axis: Option<SweepAxis>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Policies crossed with a numeric axis.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<PolicyKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare run reports (JSON) against a baseline policy.
    Compare {
        #[arg(long, default_value = "LRU")]
        baseline: PolicyKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn warn_config(cfg: &SimConfig) {
    for w in cfg.workload.arrival.warnings() {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCatalog { common, out } => {
            let cfg = common.load()?;
            let catalog = build_catalog(&cfg)?;
            save_catalog(&catalog, &out)?;
            println!(
                "wrote {} videos, {} servers, {} bytes to {}",
                catalog.len(),
                catalog.servers().len(),
                catalog.total_bytes(),
                out.display()
            );
        }
        Command::GenTrace {
            common,
            catalog,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(c) = catalog {
                cfg.catalog.path = Some(c);
                cfg.catalog.generate = None;
            }
            cfg.workload.trace_path = None;
            cfg.validate()?;
            warn_config(&cfg);
            let catalog = build_catalog(&cfg)?;
            let trace = build_trace(&cfg, &catalog)?;
            write_trace(&out, &trace, Some(&trace_header(&cfg)))?;
            let stats = trace_stats(&trace);
            println!(
                "wrote {} events ({} distinct videos) to {}",
                stats.events,
                stats.distinct_videos,
                out.display()
            );
        }
        Command::Simulate {
            common,
            overrides,
            eviction_log,
            audit,
            out_dir,
        } => {
            let mut cfg = common.load()?;
            overrides.apply(&mut cfg);
            cfg.output.eviction_log |= eviction_log;
            cfg.output.audit |= audit;
            if let Some(d) = out_dir {
                cfg.output.dir = Some(d);
            }
            cfg.validate()?;
            warn_config(&cfg);

            let workload = sim::prepare_workload(&cfg)?;
            let (record, result) = run_on_workload(&cfg, &workload)?;
            if let Some(a) = &result.audit {
                if a.violations() > 0 {
                    return Err(Error::Validation(format!("cache invariant violations: {a:?}")));
                }
            }

            let dir = cfg.output_dir();
            ensure_dir(&dir)?;
            write_file(&dir.join("report.json"), &record.to_json()?)?;
            write_records_csv(&dir.join("report.csv"), std::slice::from_ref(&record))?;
            if cfg.output.eviction_log {
                write_eviction_log(&dir.join("evictions.csv"), &result.evictions)?;
            }
            let r = &record.report;
            println!(
                "{} capacity={} requests={} hit_ratio={:.4} byte_hit_ratio={:.4} byte_volume_ratio={:.4} latency_mean_s={:.3}",
                record.policy,
                record.capacity_bytes,
                r.requests,
                r.hit_ratio,
                r.byte_hit_ratio,
                r.byte_volume_ratio,
                r.latency_mean_s
            );
        }
        Command::Sweep {
            common,
            overrides,
            axis,
            values,
            policies,
            out,
        } => {
            let mut cfg = common.load()?;
            overrides.apply(&mut cfg);
            warn_config(&cfg);
            let preset = cfg.preset.as_deref().map(Preset::from_name).transpose()?;
            let axis_values = match (axis, preset.and_then(|p| p.lambda_values())) {
                (Some(axis), _) => AxisValues::parse(axis, &values)?,
                (None, Some(lambdas)) => AxisValues::Lambda(lambdas),
                (None, None) => {
                    return Err(Error::Config("sweep needs --axis and --values".into()));
                }
            };
            let cells = run_sweep(&cfg, &axis_values, &policies);
            let out = match out {
                Some(p) => p,
                None => {
                    let dir = cfg.output_dir();
                    ensure_dir(&dir)?;
                    dir.join("sweep.csv")
                }
            };
            write_sweep_csv(&out, &cells)?;
            let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
            println!("wrote {} cells ({} failed) to {}", cells.len(), failed, out.display());
            for c in cells.iter().filter_map(|c| c.outcome.as_ref().err().map(|e| (c, e))) {
                eprintln!("cell {}={} failed: {}", c.0.axis_value, c.0.config.policy.kind, c.1);
            }
        }
        Command::Compare {
            baseline,
            out,
            reports,
        } => {
            let records = reports
                .iter()
                .map(|p| {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    RunRecord::from_json(&text, p)
                })
                .collect::<Result<Vec<_>>>()?;
            let table = compare(&records, baseline)?;
            print!("{table}");
            if let Some(out) = out {
                let mut w = csv::Writer::from_path(&out)?;
                for row in &table.rows {
                    w.serialize(row)?;
                }
                w.flush().map_err(|e| Error::io(&out, e))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
