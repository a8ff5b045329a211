//! Executes resolved commands and writes their artifacts and manifests.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use pathinf::evaluate::{cross_validate, diff, grid, sweep, SweepOptions};
use pathinf::infer::greedy_infer_with;
use pathinf::pipeline::PipelineConfig;
use pathinf::simulate::{generate, SimulationConfig};
use pathinf::summarize::{fit, prune, MissingnessPrior, SolverOptions};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, CommonArgs, PriorArgs, RuleArgs, SolverArgs};
use crate::codec::{self, SolverInfo};
use crate::config;
use crate::error::{CliError, CliResult, StageExt};

/// One file produced by a command, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact { name: name.to_owned(), contents }
}

/// Artifacts plus the text printed on stdout.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub report: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved arguments, defaults included.
    pub config: Value,
    pub seed: u64,
    pub threads: Option<usize>,
    pub inputs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub outputs: Vec<OutputRecord>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn file_name(subcommand: &str) -> String {
        format!("{subcommand}.manifest.json")
    }

    pub fn command(&self) -> CliResult<Command> {
        serde_json::from_value(json!({ "subcommand": self.subcommand, "config": self.config }))
            .map_err(|e| CliError::Parse(format!("manifest /config: {e}")))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn prior(p: &PriorArgs) -> CliResult<MissingnessPrior> {
    Ok(MissingnessPrior::with_negative(p.p_miss_pos, p.p_miss_neg)?)
}

fn solver(s: &SolverArgs, seed: u64) -> SolverOptions {
    SolverOptions {
        tol: s.tol,
        max_iters: s.max_iters,
        init: s.init,
        seed,
        candidate_cap: s.candidate_cap,
        ..Default::default()
    }
}

fn pipeline_config(p: &PriorArgs, s: &SolverArgs, r: &RuleArgs, seed: u64) -> CliResult<PipelineConfig> {
    let cfg = PipelineConfig {
        prior: prior(p)?,
        solver: solver(s, seed),
        prune_eps: s.eps_prune,
        pair_rule: r.pair_rule,
    };
    cfg.solver.validate()?;
    Ok(cfg)
}

fn written(artifacts: &[Artifact]) -> String {
    artifacts.iter().map(|a| format!("wrote {}\n", a.name)).collect()
}

fn graph_artifacts(out: &mut Vec<Artifact>, graph: &pathinf::infer::PathGraph, trace: &pathinf::infer::InferenceTrace) {
    out.push(artifact("graph.json", codec::graph_json(graph)));
    out.push(artifact("graph.dot", codec::graph_dot(graph, Some(trace))));
    out.push(artifact("trace.json", codec::trace_json(graph.labels(), trace)));
}

/// Runs `command` without touching the filesystem beyond reading inputs.
pub fn execute(command: &Command, seed: u64) -> CliResult<Outcome> {
    let mut artifacts = Vec::new();
    let report = match command {
        Command::Simulate(a) => {
            let cfg = SimulationConfig {
                n_nodes: a.n_nodes,
                n_edges: a.n_edges,
                n_samples: a.n_samples,
                poisson_lambda: a.poisson_lambda,
                p_miss_pos: a.p_miss_pos,
                p_miss_neg: a.p_miss_neg,
                seed,
            };
            let data = generate(&cfg).stage("simulate")?;
            let labels = data.observations.labels().to_vec();
            let metadata = json!({
                "config": cfg,
                "dag_law": "uniform random topological order, then n_edges distinct forward pairs uniformly without replacement",
                "weight_law": "independent Uniform(0, 1]",
                "sources": data.truth.sources(),
            });
            let complete = pathinf::ObservationMatrix::new(
                labels.clone(),
                data.complete
                    .iter()
                    .map(|r| r.iter().map(|&b| pathinf::Cell::from_bool(b)).collect())
                    .collect(),
            )?;
            artifacts.push(artifact("observations.csv", codec::write_observations(&data.observations)));
            artifacts.push(artifact("complete.csv", codec::write_observations(&complete)));
            artifacts.push(artifact("ground_truth.json", codec::ground_truth_json(&labels, &data.truth, metadata)));
            written(&artifacts)
        }
        Command::Summarize(a) => {
            let obs = codec::parse_observations(&read(&a.input)?).stage("summarize")?;
            let opts = solver(&a.solver, seed);
            let dist = fit(&obs, &prior(&a.prior)?, &opts).stage("summarize")?;
            let sm = prune(&dist, a.solver.eps_prune).stage("summarize")?;
            let info = SolverInfo { iters: dist.iterations, converged: dist.converged };
            artifacts.push(artifact("states.json", codec::state_matrix_json(&sm, Some(dist.objective), Some(info))));
            written(&artifacts)
        }
        Command::Infer(a) => {
            let sm = codec::parse_state_matrix(&read(&a.input)?).stage("infer")?;
            let (graph, trace) = greedy_infer_with(&sm, a.rule.pair_rule).stage("infer")?;
            graph_artifacts(&mut artifacts, &graph, &trace);
            written(&artifacts)
        }
        Command::Pipeline(a) => {
            let obs = codec::parse_observations(&read(&a.input)?).stage("summarize")?;
            let cfg = pipeline_config(&a.prior, &a.solver, &a.rule, seed)?;
            let dist = fit(&obs, &cfg.prior, &cfg.solver).stage("summarize")?;
            let sm = prune(&dist, cfg.prune_eps).stage("summarize")?;
            let (graph, trace) = greedy_infer_with(&sm, cfg.pair_rule).stage("infer")?;
            let info = SolverInfo { iters: dist.iterations, converged: dist.converged };
            artifacts.push(artifact("states.json", codec::state_matrix_json(&sm, Some(dist.objective), Some(info))));
            graph_artifacts(&mut artifacts, &graph, &trace);
            written(&artifacts)
        }
        Command::Evaluate(a) => {
            let graph = codec::parse_graph(&read(&a.graph)?).stage("evaluate")?;
            let (labels, truth) = codec::parse_ground_truth(&read(&a.truth)?).stage("evaluate")?;
            if labels != graph.labels() {
                return Err(CliError::Validation(format!(
                    "evaluate: graph labels {:?} differ from ground-truth nodes {:?}",
                    graph.labels(),
                    labels
                )));
            }
            let d = diff(&graph, &truth).stage("evaluate")?;
            artifacts.push(artifact("evaluation.json", codec::to_json(&d)));
            codec::diff_table(&d)
        }
        Command::Crossval(a) => {
            let obs = codec::parse_observations(&read(&a.input)?).stage("crossval")?;
            let cfg = pipeline_config(&a.prior, &a.solver, &a.rule, seed)?;
            let report = cross_validate(&obs, a.fraction, a.repeats, &cfg, seed).stage("crossval")?;
            artifacts.push(artifact("stability.csv", codec::stability_csv(obs.labels(), &report)));
            artifacts.push(artifact("graph.json", codec::graph_json(&report.full_graph)));
            codec::stability_table(obs.labels(), &report)
        }
        Command::Sweep(a) => {
            let base = SimulationConfig {
                n_nodes: a.n_nodes,
                n_samples: a.n_samples,
                poisson_lambda: a.poisson_lambda,
                p_miss_neg: a.p_miss_neg,
                ..Default::default()
            };
            let cells = grid(&base, &a.edges, &a.p_values);
            let fallback = MissingnessPrior::new(a.fallback_prior)?;
            let opts = SweepOptions {
                repeats: a.repeats,
                fallback_prior: a.fallback_prior,
                pipeline: PipelineConfig {
                    prior: fallback,
                    solver: solver(&a.solver, seed),
                    prune_eps: a.solver.eps_prune,
                    pair_rule: a.rule.pair_rule,
                },
            };
            let results = sweep(&cells, &opts, seed).stage("sweep")?;
            artifacts.push(artifact("sweep.csv", codec::sweep_grid_csv(&results)));
            artifacts.push(artifact("sweep_cells.csv", codec::sweep_cells_csv(&results)));
            artifacts.push(artifact("sweep_runs.csv", codec::sweep_runs_csv(&results)));
            codec::sweep_table(&results)
        }
        Command::Replay(_) => {
            return Err(CliError::Internal("replay cannot be executed as a job".into()));
        }
    };
    Ok(Outcome { artifacts, report })
}

fn canonical(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

/// Makes input paths absolute so the manifest can be replayed from anywhere.
fn resolve_inputs(command: &mut Command) -> CliResult<Vec<PathBuf>> {
    let mut inputs = Vec::new();
    let mut fix = |p: &mut PathBuf| -> CliResult<()> {
        *p = canonical(p)?;
        inputs.push(p.clone());
        Ok(())
    };
    match command {
        Command::Summarize(a) => fix(&mut a.input)?,
        Command::Infer(a) => fix(&mut a.input)?,
        Command::Pipeline(a) => fix(&mut a.input)?,
        Command::Crossval(a) => fix(&mut a.input)?,
        Command::Evaluate(a) => {
            fix(&mut a.graph)?;
            fix(&mut a.truth)?;
        }
        Command::Replay(a) => fix(&mut a.manifest)?,
        Command::Simulate(_) | Command::Sweep(_) => {}
    }
    Ok(inputs)
}

/// Applies a config file to the command's fields and the shared flags.
fn apply_config(common: &mut CommonArgs, command: &mut Command, path: &Path) -> CliResult<()> {
    let entries = config::parse(&read(path)?)?;
    let mut tree = serde_json::to_value(&*command).expect("serializable");
    let fields = tree
        .get_mut("config")
        .and_then(Value::as_object_mut)
        .expect("adjacently tagged");
    let mut used = config::apply(fields, &entries)?;
    let mut shared = serde_json::to_value(&*common).expect("serializable");
    let shared_fields = shared.as_object_mut().expect("struct");
    shared_fields.remove("config");
    used.extend(config::apply(shared_fields, &entries)?);
    if let Some(unknown) = entries.keys().find(|k| !used.contains(k)) {
        return Err(CliError::Validation(format!(
            "config key {unknown:?} is not an option of {}",
            command.name()
        )));
    }
    *command = serde_json::from_value(tree).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    let config = common.config.take();
    *common = serde_json::from_value(shared).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    common.config = config;
    Ok(())
}

fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> CliResult<Vec<OutputRecord>> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = out_dir.join(&a.name);
            fs::write(&path, &a.contents).map_err(|e| CliError::io(&path, e))?;
            Ok(OutputRecord {
                path: a.name.clone(),
                sha256: sha256_hex(a.contents.as_bytes()),
                bytes: a.contents.len(),
            })
        })
        .collect()
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Executes `command`, writes artifacts and manifest, returns the manifest.
fn run_job(command: &Command, common: &CommonArgs, inputs: Vec<PathBuf>) -> CliResult<(RunManifest, String)> {
    let out_dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let start = Instant::now();
    let outcome = in_pool(common.threads, || execute(command, common.seed))??;
    let outputs = write_artifacts(&out_dir, &outcome.artifacts)?;
    let tree = serde_json::to_value(command).expect("serializable");
    let manifest = RunManifest {
        tool: "pathinf".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: command.name().into(),
        config: tree["config"].clone(),
        seed: common.seed,
        threads: common.threads,
        inputs,
        out_dir: canonical(&out_dir)?,
        outputs,
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out_dir.join(RunManifest::file_name(command.name()));
    fs::write(&path, codec::to_json(&manifest)).map_err(|e| CliError::io(&path, e))?;
    Ok((manifest, outcome.report))
}

fn replay(manifest_path: &Path, common: &CommonArgs) -> CliResult<String> {
    let recorded: RunManifest = serde_json::from_str(&read(manifest_path)?)
        .map_err(|e| CliError::Parse(format!("manifest {}: {e}", manifest_path.display())))?;
    let command = recorded.command()?;
    if matches!(command, Command::Replay(_)) {
        return Err(CliError::Validation("manifest records a replay".into()));
    }
    let replay_common = CommonArgs {
        seed: recorded.seed,
        threads: common.threads,
        config: None,
        out_dir: Some(common.out_dir.clone().unwrap_or_else(|| recorded.out_dir.clone())),
    };
    let (fresh, report) = run_job(&command, &replay_common, recorded.inputs.clone())?;
    let mismatched: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|r| !fresh.outputs.contains(r))
        .map(|r| r.path.as_str())
        .collect();
    if !mismatched.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::Internal(format!(
            "replay of {} differs from its manifest: {}",
            recorded.subcommand,
            mismatched.join(", ")
        )));
    }
    Ok(format!(
        "{report}replayed {} into {}: {} outputs identical\n",
        recorded.subcommand,
        fresh.out_dir.display(),
        fresh.outputs.len()
    ))
}

/// Parses `args` and runs the command; returns the text for stdout.
pub fn run_cli(cli: Cli) -> CliResult<String> {
    let Cli { mut common, mut command } = cli;
    if let Some(path) = common.config.clone() {
        apply_config(&mut common, &mut command, &path)?;
    }
    let inputs = resolve_inputs(&mut command)?;
    match &command {
        Command::Replay(a) => replay(&a.manifest, &common),
        _ => Ok(run_job(&command, &common, inputs)?.1),
    }
}

/// Entry point shared by the binary and tests. Clap errors (including
/// `--help`) are returned as `Err` with the formatted message and code.
pub fn run_args<I, T>(args: I) -> Result<String, (i32, String)>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| (e.exit_code(), e.render().to_string()))?;
    run_cli(cli).map_err(|e| (e.exit_code(), format!("error: {e}\n")))
}
