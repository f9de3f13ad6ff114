use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalsuite::{for_metric, fsr_metric, gt_costmap, trial_outcome, unknown_fraction, GroundTruthCostmap, TrialOutcome};
use crate::frame::Severity;
use crate::gridfusion::Costmap;
use crate::pnm;
use crate::reliability::drm::DrmModel;
use crate::scenegen::{ScenarioConfig, Trial};

use super::config::{ExperimentConfig, Method};
use super::pipeline::{run_method, FrameTiming, SensorMetrics};
use super::report::{aggregate, write_json, write_text, Aggregate};
use super::{corruption_seed, simulate_scenario};

/// Outcome of one `(severity, method, seed)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub severity: Severity,
    pub method: Method,
    pub seed: u64,
    /// Scalar metrics by name; absent when undefined for the run.
    pub metrics: BTreeMap<String, f64>,
    pub trials: Vec<TrialOutcome>,
    pub sensor: SensorMetrics,
    /// Mean per-frame milliseconds: reliability, update, total.
    #[serde(skip)]
    pub timing_ms: [f64; 3],
}

/// One row of the costmap/navigation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub severity: Severity,
    pub method: Method,
    pub n: usize,
    pub metrics: BTreeMap<String, Aggregate>,
    /// Success-conditioned, pooled over every successful trial.
    pub plr: Option<Aggregate>,
    pub success_rate: Option<f64>,
    pub detour_rate: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub config_hash: String,
    pub f1_threshold: f64,
    pub records: Vec<RunRecord>,
    pub table: Vec<TableRow>,
    /// Side-by-side costmaps per severity for the first seed, ground truth
    /// first, then methods in config order.
    #[serde(skip)]
    pub panels: Vec<(Severity, u64, Vec<Costmap>)>,
}

fn put(m: &mut BTreeMap<String, f64>, k: &str, v: Option<f64>) {
    if let Some(v) = v {
        m.insert(k.to_string(), v);
    }
}

/// Map-level metrics (`for`, `fsr`, `unknown`, `success`) and the trial
/// outcomes of one costmap against the ground truth.
pub fn costmap_metrics(costmap: &Costmap, gt: &GroundTruthCostmap, trials: &[Trial]) -> Result<(BTreeMap<String, f64>, Vec<TrialOutcome>)> {
    let mut metrics = BTreeMap::new();
    put(&mut metrics, "for", Some(for_metric(costmap, gt)?));
    put(&mut metrics, "fsr", Some(fsr_metric(costmap, gt)?));
    put(&mut metrics, "unknown", Some(unknown_fraction(costmap, gt)?));
    let outcomes = trials
        .iter()
        .map(|t| trial_outcome(costmap, gt, t.start, t.goal))
        .collect::<Result<Vec<_>>>()?;
    let counted: Vec<&TrialOutcome> = outcomes.iter().filter(|t| !matches!(t, TrialOutcome::Excluded)).collect();
    if !counted.is_empty() {
        let ok = counted.iter().filter(|t| t.is_success()).count();
        put(&mut metrics, "success", Some(ok as f64 / counted.len() as f64));
    }
    Ok((metrics, outcomes))
}

/// Sensor metrics flattened under their report names.
pub fn sensor_metric_map(s: &SensorMetrics) -> BTreeMap<String, f64> {
    let mut metrics = BTreeMap::new();
    put(&mut metrics, "raw_hole_rate", Some(s.raw.hole_rate));
    put(&mut metrics, "raw_spike_rate", Some(s.raw.spike_rate));
    put(&mut metrics, "raw_rmse", s.raw.rmse);
    put(&mut metrics, "accepted_hole_rate", Some(s.accepted.hole_rate));
    put(&mut metrics, "accepted_spike_rate", Some(s.accepted.spike_rate));
    put(&mut metrics, "accepted_rmse", s.accepted.rmse);
    let frac = if s.raw.pixels == 0 { 0.0 } else { s.accepted.pixels as f64 / s.raw.pixels as f64 };
    put(&mut metrics, "accepted_fraction", Some(frac));
    if let Some(pr) = s.pr {
        put(&mut metrics, "auprc", pr.auprc);
        put(&mut metrics, "f1", Some(pr.f1));
    }
    metrics
}

/// Scores one finished run: costmap metrics, trials, sensor metrics and
/// mean timing.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_run(
    severity: Severity,
    method: Method,
    seed: u64,
    costmap: &Costmap,
    sensor: &SensorMetrics,
    timings: &[FrameTiming],
    gt: &GroundTruthCostmap,
    trials: &[Trial],
) -> Result<RunRecord> {
    let (mut metrics, trials) = costmap_metrics(costmap, gt, trials)?;
    metrics.extend(sensor_metric_map(sensor));
    let n = timings.len().max(1) as f64;
    let mut timing_ms = [0.0; 3];
    for t in timings {
        timing_ms[0] += t.reliability_ms / n;
        timing_ms[1] += t.update_ms / n;
        timing_ms[2] += t.total_ms / n;
    }
    Ok(RunRecord {
        severity,
        method,
        seed,
        metrics,
        trials,
        sensor: *sensor,
        timing_ms,
    })
}

/// One table row per `(severity, method)` pair, in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<TableRow> {
    let mut keys: Vec<(Severity, Method)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.severity, r.method)) {
            keys.push((r.severity, r.method));
        }
    }
    keys.into_iter()
        .map(|(severity, method)| {
            let rs: Vec<&RunRecord> = records.iter().filter(|r| r.severity == severity && r.method == method).collect();
            table_row(severity, method, &rs)
        })
        .collect()
}

fn table_row(severity: Severity, method: Method, records: &[&RunRecord]) -> TableRow {
    let mut names: Vec<&String> = records.iter().flat_map(|r| r.metrics.keys()).collect();
    names.sort();
    names.dedup();
    let metrics = names
        .into_iter()
        .filter_map(|k| {
            let vals: Vec<f64> = records.iter().filter_map(|r| r.metrics.get(k).copied()).collect();
            aggregate(&vals).map(|a| (k.clone(), a))
        })
        .collect();
    let mut plrs = Vec::new();
    let mut detours = 0usize;
    let mut counted = 0usize;
    for r in records {
        for t in &r.trials {
            match t {
                TrialOutcome::Excluded => {}
                TrialOutcome::Failure { .. } => counted += 1,
                TrialOutcome::Success { plr, detour, .. } => {
                    counted += 1;
                    plrs.push(*plr);
                    detours += usize::from(*detour);
                }
            }
        }
    }
    TableRow {
        severity,
        method,
        n: records.len(),
        metrics,
        plr: aggregate(&plrs),
        success_rate: (counted > 0).then(|| plrs.len() as f64 / counted as f64),
        detour_rate: (!plrs.is_empty()).then(|| detours as f64 / plrs.len() as f64),
        trials: counted,
    }
}

fn resolve_model(cfg: &ExperimentConfig) -> Result<Option<DrmModel>> {
    if !cfg.methods.contains(&Method::DrmRgf) {
        return Ok(None);
    }
    if let Some(p) = &cfg.drm_model {
        return DrmModel::load(p).map(Some);
    }
    match &cfg.train {
        Some(setup) => super::train_from_setup(setup).map(|t| Some(t.model)),
        None => Err(Error::config("drm_model", "drm_rgf needs a model path or a train section")),
    }
}

/// Runs the whole `severity x seed x method` matrix. `model` overrides the
/// model named by the config.
pub fn run_experiment(cfg: &ExperimentConfig, model: Option<&DrmModel>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let config_hash = cfg.fairness_hash()?;
    let owned;
    let model = match model {
        Some(m) => Some(m),
        None => {
            owned = resolve_model(cfg)?;
            owned.as_ref()
        }
    };
    let scenario = ScenarioConfig::load(&cfg.scenario)?;
    let shared = &cfg.shared;
    let base_world = crate::scenegen::build_world(&scenario)?;
    let gt = gt_costmap(&base_world, &shared.grid, shared.inflation_radius)?;
    let mut records = Vec::new();
    let mut panels = Vec::new();
    for &severity in &cfg.severities {
        for (k, &seed) in cfg.seeds.iter().enumerate() {
            let (_, frames) = simulate_scenario(&scenario, Some(severity), corruption_seed(severity, seed), cfg.frames)?;
            let mut panel = vec![gt.as_costmap()];
            for &method in &cfg.methods {
                let out = run_method(&frames, &scenario.camera, method, model, &cfg.shared_for(method)?, false)?;
                records.push(evaluate_run(severity, method, seed, &out.costmap, &out.sensor, &out.timings, &gt, &scenario.trials)?);
                if k == 0 {
                    panel.push(out.costmap);
                }
            }
            if k == 0 {
                panels.push((severity, seed, panel));
            }
        }
    }
    let mut table = Vec::new();
    for &severity in &cfg.severities {
        for &method in &cfg.methods {
            let rs: Vec<&RunRecord> = records.iter().filter(|r| r.severity == severity && r.method == method).collect();
            table.push(table_row(severity, method, &rs));
        }
    }
    Ok(ExperimentReport {
        scenario: scenario.name.clone(),
        config_hash,
        f1_threshold: shared.fusion.tau,
        records,
        table,
        panels,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn row(&self, severity: Severity, method: Method) -> Option<&TableRow> {
        self.table.iter().find(|r| r.severity == severity && r.method == method)
    }

    /// Per-seed values of one metric.
    pub fn values(&self, severity: Severity, method: Method, metric: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.severity == severity && r.method == method)
            .filter_map(|r| r.metrics.get(metric).copied())
            .collect()
    }

    pub fn runs_csv(&self) -> String {
        let mut out = String::from("config_hash,scenario,severity,method,seed,metric,value\n");
        for r in &self.records {
            for (k, v) in &r.metrics {
                writeln!(out, "{},{},{},{},{},{k},{v}", self.config_hash, self.scenario, r.severity, r.method, r.seed).expect("writing to a String");
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("config_hash,scenario,severity,method,metric,mean,std,n\n");
        for row in &self.table {
            for (k, a) in &row.metrics {
                writeln!(out, "{},{},{},{},{k},{},{},{}", self.config_hash, self.scenario, row.severity, row.method, a.mean, a.std, a.n)
                    .expect("writing to a String");
            }
        }
        out
    }

    /// Costmap and navigation columns, one row per severity and method.
    pub fn table_csv(&self) -> String {
        let mut out = String::from(
            "config_hash,scenario,severity,method,n,for_mean,for_std,fsr_mean,fsr_std,success_rate,plr_mean,plr_std,detour_rate,trials\n",
        );
        for row in &self.table {
            let m = |k: &str| row.metrics.get(k);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.config_hash,
                self.scenario,
                row.severity,
                row.method,
                row.n,
                opt(m("for").map(|a| a.mean)),
                opt(m("for").map(|a| a.std)),
                opt(m("fsr").map(|a| a.mean)),
                opt(m("fsr").map(|a| a.std)),
                opt(row.success_rate),
                opt(row.plr.map(|a| a.mean)),
                opt(row.plr.map(|a| a.std)),
                opt(row.detour_rate),
                row.trials
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("severity,method,seed,reliability_ms,update_ms,total_ms\n");
        for r in &self.records {
            let [a, b, c] = r.timing_ms;
            writeln!(out, "{},{},{},{a:.4},{b:.4},{c:.4}", r.severity, r.method, r.seed).expect("writing to a String");
        }
        out
    }

    /// Writes every artifact into `dir` and returns the paths written.
    /// `timing.csv` is the only file whose content varies between reruns.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        let mut emit = |name: &str, text: &str| -> Result<()> {
            let p = dir.join(name);
            write_text(&p, text)?;
            paths.push(p);
            Ok(())
        };
        emit("runs.csv", &self.runs_csv())?;
        emit("summary.csv", &self.summary_csv())?;
        emit("table.csv", &self.table_csv())?;
        emit("timing.csv", &self.timing_csv())?;
        let summary = dir.join("summary.json");
        write_json(&summary, self)?;
        paths.push(summary);
        for (severity, seed, maps) in &self.panels {
            let p = dir.join("images").join(format!("costmaps_{severity}_seed{seed}.pgm"));
            write_panel(&p, maps)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Horizontal strip of costmaps separated by 4-pixel mid-gray bars.
fn write_panel(path: &Path, maps: &[Costmap]) -> Result<()> {
    const GAP: usize = 4;
    let Some(first) = maps.first() else {
        return Err(Error::Empty("no costmaps for the panel".into()));
    };
    let (w, h) = (first.spec.nx(), first.spec.ny());
    let total = maps.len() * w + (maps.len() - 1) * GAP;
    let mut data = vec![128u8; total * h];
    for (k, m) in maps.iter().enumerate() {
        if (m.spec.nx(), m.spec.ny()) != (w, h) {
            return Err(Error::SpecMismatch("panel costmaps differ in size".into()));
        }
        let x0 = k * (w + GAP);
        for (i, s) in m.states().iter().enumerate() {
            data[(i / w) * total + x0 + i % w] = s.gray();
        }
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    pnm::write_pgm8(path, total, h, &data)
}
