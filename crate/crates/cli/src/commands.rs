use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context as _;
use rgf_core::evalsuite::gt_costmap;
use rgf_core::harness::{
    evaluate_run, read_run, run_experiment, run_method, samples_at, summarize, write_run, ExperimentConfig, ExperimentReport, Method,
    RunManifest, SharedConfig,
};
use rgf_core::reliability::drm::{drm_train, DrmModel, TrainConfig};
use rgf_core::reliability::TargetMode;
use rgf_core::scenegen::{build_world, generate_sequence, load_dataset, resample, ScenarioConfig, Trial};
use rgf_core::{Error, Severity};
use sha2::{Digest, Sha256};

use crate::{CompareArgs, EvalArgs, RunArgs, SimgenArgs, TrainArgs};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// An error tagged with the exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Fairness(_) | Error::SpecMismatch(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: code_of(&e),
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        // Keep the usage class of a core error under added context.
        let code = error.downcast_ref::<Error>().map_or(EXIT_RUNTIME, code_of);
        Self { code, error }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// A scenario that cannot be read is a usage error naming what was asked for.
fn load_scenario(name: &str) -> std::result::Result<ScenarioConfig, Failure> {
    ScenarioConfig::load(name).map_err(|e| Failure::usage(anyhow::Error::new(e).context(format!("cannot load scenario `{name}`"))))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> std::result::Result<T, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {what} {}", path.display()))
        .map_err(Failure::usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid {what} {}", path.display()))
        .map_err(Failure::usage)
}

fn parse_severity(s: &str) -> std::result::Result<Severity, Failure> {
    s.parse::<Severity>().map_err(Failure::from)
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn simgen(a: &SimgenArgs) -> CmdResult {
    let scenario = load_scenario(&a.scenario)?;
    let severity = a.severity.as_deref().map(parse_severity).transpose()?;
    if a.frames == Some(0) {
        return Err(Failure::usage(anyhow::anyhow!("--frames must be positive")));
    }
    let base = build_world(&scenario)?;
    let world = match severity {
        Some(l) => base.with_patch_severity(l),
        None => base,
    };
    let mut poses = scenario.poses()?;
    if let Some(n) = a.frames {
        poses = resample(&poses, n);
    }
    let mut params = scenario.corruption.clone();
    if let Some(seed) = a.seed {
        params = params.with_seed(seed);
    }
    generate_sequence(&a.out, &scenario, &world, &poses, severity, &params)?;
    println!("{}", a.out.join("manifest.json").display());
    Ok(())
}

fn parse_resolution(s: &str) -> std::result::Result<[usize; 2], Failure> {
    let bad = || Failure::usage(anyhow::anyhow!("--resolution `{s}` is not WIDTHxHEIGHT"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    Ok([w, h])
}

pub fn train(a: &TrainArgs) -> CmdResult {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_json(p, "training config")?,
        None => TrainConfig::default(),
    };
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(t) = &a.target {
        cfg.target_mode = t.parse::<TargetMode>()?;
    }
    if let Some(r) = &a.resolution {
        cfg.working_resolution = parse_resolution(r)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let mut samples = Vec::new();
    for dir in &a.datasets {
        let ds = load_dataset(dir).with_context(|| format!("cannot load dataset {}", dir.display()))?;
        let all: Vec<usize> = (0..ds.frames.len()).collect();
        samples.extend(samples_at(&ds.frames, &all, &cfg)?);
    }
    let trained = drm_train(&samples, &cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let model_path = a.out.join("model.drm");
    trained.model.save(&model_path)?;
    let mut csv = String::from("epoch,loss\n");
    for (e, l) in trained.loss_curve.iter().enumerate() {
        writeln!(csv, "{e},{l}").expect("writing to a String");
    }
    let loss_path = a.out.join("loss.csv");
    fs::write(&loss_path, csv).with_context(|| format!("cannot write {}", loss_path.display()))?;
    println!("{}", model_path.display());
    Ok(())
}

pub fn run(a: &RunArgs) -> CmdResult {
    let method: Method = a.method.parse()?;
    let shared: SharedConfig = match &a.config {
        Some(p) => read_json(p, "shared config")?,
        None => SharedConfig::default(),
    };
    shared.validate()?;
    let (model, model_sha256) = match (method, &a.model) {
        (Method::DrmRgf, Some(p)) => (Some(DrmModel::load(p)?), Some(sha256_file(p)?)),
        (Method::DrmRgf, None) => return Err(Failure::usage(anyhow::anyhow!("drm_rgf needs --model"))),
        _ => (None, None),
    };
    let ds = load_dataset(&a.dataset).with_context(|| format!("cannot load dataset {}", a.dataset.display()))?;
    let out = run_method(&ds.frames, &ds.manifest.intrinsics, method, model.as_ref(), &shared, a.dump_reliability)?;
    let severity = ds
        .manifest
        .patch_severity
        .or_else(|| ds.manifest.frames.iter().map(|f| f.max_severity).max())
        .unwrap_or(Severity::L0);
    let mut manifest = RunManifest {
        method,
        scenario: ds.manifest.scenario.clone(),
        severity,
        seed: ds.manifest.params.seed,
        frames: ds.frames.len(),
        config_hash: shared.hash(),
        shared,
        model_sha256,
        sensor: out.sensor,
        artifacts: Vec::new(),
    };
    write_run(&a.out, &out, &mut manifest)?;
    println!("{}", a.out.join("run.json").display());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> CmdResult {
    let custom: Option<Vec<Trial>> = a.trials.as_deref().map(|p| read_json(p, "trial list")).transpose()?;
    let mut records = Vec::new();
    let mut hash: Option<String> = None;
    let mut scenarios: Vec<String> = Vec::new();
    let mut tau = None;
    for dir in &a.runs {
        let run = read_run(dir).with_context(|| format!("cannot read run {}", dir.display()))?;
        let m = &run.manifest;
        match &hash {
            None => hash = Some(m.config_hash.clone()),
            Some(h) if *h != m.config_hash => {
                return Err(Error::Fairness(format!("{} was built with shared config {} but earlier runs with {}", dir.display(), m.config_hash, h)).into())
            }
            Some(_) => {}
        }
        if !scenarios.contains(&m.scenario.name) {
            scenarios.push(m.scenario.name.clone());
        }
        tau = Some(m.shared.fusion.tau);
        let world = build_world(&m.scenario)?;
        let gt = gt_costmap(&world, &m.shared.grid, m.shared.inflation_radius)?;
        gt.check_spec(&run.costmap.spec)?;
        let trials = custom.as_deref().unwrap_or(&m.scenario.trials);
        records.push(evaluate_run(m.severity, m.method, m.seed, &run.costmap, &m.sensor, &run.timings, &gt, trials)?);
    }
    let report = ExperimentReport {
        scenario: scenarios.join("+"),
        config_hash: hash.unwrap_or_default(),
        f1_threshold: tau.unwrap_or_default(),
        table: summarize(&records),
        records,
        panels: Vec::new(),
    };
    for p in report.write(&a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn compare(a: &CompareArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
    if a.model.is_some() {
        cfg.drm_model = a.model.clone();
    }
    // Refuse unfair or malformed configs before any work.
    cfg.validate()?;
    load_scenario(&cfg.scenario)?;
    let report = run_experiment(&cfg, None)?;
    for p in report.write(&cfg.output_dir)? {
        println!("{}", p.display());
    }
    Ok(())
}
