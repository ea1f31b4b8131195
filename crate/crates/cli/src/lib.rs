//! Batch front-end for the `cheeger` crate.
//!
//! A scenario file describes a domain, weights and options. Each stage
//! writes its artifacts under one output directory; see `docs/scenario.md`.

pub mod pipeline;
pub mod scenario;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use pipeline::{run_scenario, Stage};
pub use scenario::Scenario;

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "CHEEGER_OUT";

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("io error: {0}")]
    Io(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl Failure {
    pub fn stage(stage: Stage, e: impl std::fmt::Display) -> Self {
        Failure::Stage { stage, message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Stage { stage, .. } => stage.exit_code(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// One scenario of a batch, with its resolved output directory.
#[derive(Debug, Clone)]
pub struct Job {
    pub path: PathBuf,
    pub scenario: Scenario,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub out: Option<PathBuf>,
    pub env_out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub stage: Stage,
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into())
}

/// Loads every scenario and picks its output directory:
/// `--out`, then the environment, then `[output] dir`, then `out`.
/// With several scenarios the first, second and last choices get a
/// per-scenario subdirectory named after the file stem.
pub fn plan(paths: &[PathBuf], opts: &BatchOptions) -> Result<Vec<Job>, Failure> {
    if paths.is_empty() {
        return Err(Failure::Config("no --scenario given".into()));
    }
    let many = paths.len() > 1;
    let mut jobs = Vec::with_capacity(paths.len());
    for path in paths {
        let mut scenario = Scenario::load(path)?;
        if let Some(seed) = opts.seed {
            scenario.verify.seed = Some(seed);
        }
        let shared = opts.out.clone().or_else(|| opts.env_out.clone());
        let out = match (shared, &scenario.output.dir) {
            (Some(d), _) if many => d.join(stem(path)),
            (Some(d), _) => d,
            (None, Some(d)) => d.clone(),
            (None, None) if many => PathBuf::from("out").join(stem(path)),
            (None, None) => PathBuf::from("out"),
        };
        jobs.push(Job { path: path.clone(), scenario, out });
    }
    for (i, a) in jobs.iter().enumerate() {
        if jobs[..i].iter().any(|b| b.out == a.out) {
            return Err(Failure::Config(format!(
                "two scenarios write to {}; give them distinct file names or [output] dirs",
                a.out.display()
            )));
        }
    }
    Ok(jobs)
}

/// Runs all jobs concurrently; results keep the input order.
pub fn run_batch(jobs: &[Job], stage: Stage) -> Vec<Result<(), Failure>> {
    jobs.par_iter()
        .map(|j| {
            log::info!("running {} -> {}", j.path.display(), j.out.display());
            run_scenario(&j.scenario, stage, &j.out)
        })
        .collect()
}
