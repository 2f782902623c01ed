use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ctl_core::budget::AllocationScheme;
use ctl_core::cascade::{mean_and_std, write_per_task_csv, InitKind};
use ctl_core::distances::{compute_distance_matrix, write_distance_csv, DistanceParams, Metric};
use ctl_core::graph::{medoid, mst, random_spanning_tree, root_tree, save_tree_csv, star_tree};
use ctl_core::rng::derive_seed;
use ctl_core::tasks::{generate_synthetic, load_train_only, save_collection, SyntheticConfig};
use ctl_core::theory::{random_chain_configs, verify_bounds, ChainConfig, RandomChains, VerificationReport};
use ctl_core::{run_experiment, ExperimentConfig, Method};

use crate::manifest::RunManifest;
use crate::{Cli, CliError, Command, TreeKind};

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display())).map_err(usage)?;
    serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display())).map_err(usage)
}

fn parse_metric(name: &str) -> Result<Metric, CliError> {
    name.parse::<Metric>().map_err(CliError::from)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display())).map_err(runtime)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).with_context(|| format!("cannot create {}", path.display())).map_err(runtime)
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes") + "\n"
}

fn float(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen { config, out } => gen(cli.seed, config, out),
        Command::Dist { data, metric, out, params } => dist(cli.seed, data, metric, out, params.as_deref()),
        Command::Tree { data, kind, metric, out, params } => tree(cli.seed, data, *kind, metric, out, params.as_deref()),
        Command::Run { config, out, budget, num_seeds, method, metric } => {
            let mut cfg: ExperimentConfig = read_config(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(b) = budget {
                cfg.budget = *b;
            }
            if let Some(n) = num_seeds {
                cfg.num_seeds = *n;
            }
            if let Some(m) = method {
                cfg.method = m.parse().map_err(CliError::from)?;
            }
            if let Some(m) = metric {
                cfg.metric = Some(parse_metric(m)?);
            }
            run(cfg, config, out)
        }
        Command::Verify { config, out } => verify(cli.seed, config.as_deref(), out),
        Command::Bench { config, out } => {
            let mut cfg: BenchConfig = read_config(config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            bench(&cfg, config, out)
        }
    }
}

fn gen(seed: Option<u64>, config: &Path, out: &Path) -> Result<(), CliError> {
    let mut cfg: SyntheticConfig = read_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut manifest = RunManifest::start("gen", Some(config), cfg.seed, out);
    let (collection, truth) = generate_synthetic(&cfg)?;
    create_dir(out)?;
    save_collection(&collection, out)?;
    write_file(&out.join("ground_truth.json"), pretty(&truth))?;
    manifest.outputs.push("manifest.json".into());
    manifest.outputs.push("ground_truth.json".into());
    manifest.finish().map_err(runtime)
}

fn distance_params(seed: Option<u64>, params: Option<&Path>) -> Result<DistanceParams, CliError> {
    let mut p: DistanceParams = match params {
        Some(path) => read_config(path)?,
        None => DistanceParams::default(),
    };
    if let Some(s) = seed {
        p.seed = s;
    }
    p.validate()?;
    Ok(p)
}

fn dist(seed: Option<u64>, data: &Path, metric: &str, out: &Path, params: Option<&Path>) -> Result<(), CliError> {
    let metric = parse_metric(metric)?;
    let params = distance_params(seed, params)?;
    let collection = load_train_only(data)?;
    let matrix = compute_distance_matrix(&collection, metric, &params)?;
    write_distance_csv(&matrix, out)?;
    Ok(())
}

fn tree(seed: Option<u64>, data: &Path, kind: TreeKind, metric: &str, out: &Path, params: Option<&Path>) -> Result<(), CliError> {
    let metric = parse_metric(metric)?;
    let params = distance_params(seed, params)?;
    let collection = load_train_only(data)?;
    let dist = compute_distance_matrix(&collection, metric, &params)?;
    let root = medoid(&dist);
    let t = collection.len();
    let tree = match kind {
        TreeKind::Mst => root_tree(&mst(&dist)?, root, &dist)?,
        TreeKind::Star => star_tree(t, root, Some(&dist))?,
        TreeKind::Random => root_tree(&random_spanning_tree(t, derive_seed(seed.unwrap_or(0), "random_tree")), root, &dist)?,
    };
    save_tree_csv(&tree, &collection.ids(), out)?;
    Ok(())
}

/// `report.json` contents; file references are relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub num_tasks: usize,
    pub seeds: Vec<u64>,
    pub per_seed_mean_rmse: Vec<f64>,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    pub per_task_csv: String,
    pub trees: Vec<String>,
}

fn run(cfg: ExperimentConfig, config: &Path, out: &Path) -> Result<(), CliError> {
    cfg.validate()?;
    let mut manifest = RunManifest::start("run", Some(config), cfg.seed, out);
    let outcome = run_experiment(&cfg)?;
    create_dir(out)?;

    let mut per_task = Vec::new();
    write_per_task_csv(&outcome, &mut per_task).map_err(runtime)?;
    write_file(&out.join("per_task.csv"), per_task)?;

    let mut trees = Vec::new();
    for (r, result) in outcome.runs.iter().enumerate() {
        if let Some(tree) = result.structure.tree() {
            create_dir(&out.join("trees"))?;
            let name = format!("trees/seed_{r:03}.csv");
            save_tree_csv(tree, &result.ids, &out.join(&name))?;
            trees.push(name);
        }
    }
    let report = RunReport {
        config: cfg.clone(),
        num_tasks: outcome.runs[0].ids.len(),
        seeds: outcome.seeds.clone(),
        per_seed_mean_rmse: outcome.per_seed_mean.clone(),
        mean_rmse: outcome.mean,
        std_rmse: outcome.std,
        per_task_csv: "per_task.csv".into(),
        trees: trees.clone(),
    };
    write_file(&out.join("report.json"), pretty(&report))?;
    manifest.outputs.extend(["report.json".to_string(), "per_task.csv".to_string()]);
    manifest.outputs.extend(trees);
    manifest.finish().map_err(runtime)
}

/// Explicit chains plus an optional batch of random ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub chains: Vec<ChainConfig>,
    #[serde(default)]
    pub random: Option<RandomChains>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { chains: Vec::new(), random: Some(RandomChains::default()) }
    }
}

fn verify(seed: Option<u64>, config: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mut cfg = match config {
        Some(p) => read_config::<VerifyConfig>(p)?,
        None => VerifyConfig::default(),
    };
    if let (Some(s), Some(r)) = (seed, cfg.random.as_mut()) {
        r.seed = s;
    }
    let mut chains = cfg.chains.clone();
    if let Some(r) = &cfg.random {
        chains.extend(random_chain_configs(r)?);
    }
    if chains.is_empty() {
        return Err(usage(anyhow!("verification config names no chains")));
    }
    for c in &chains {
        c.validate()?;
    }
    let reports: Vec<VerificationReport> = chains.par_iter().map(verify_bounds).collect::<ctl_core::Result<_>>()?;
    write_file(out, pretty(&reports))?;
    let noisy_misses = reports.iter().filter(|r| r.noisy && !r.satisfied).count();
    if noisy_misses > 0 {
        eprintln!("warning: {noisy_misses} noisy chain(s) exceeded the bound beyond two standard errors");
    }
    let violations = reports.iter().filter(|r| !r.noisy && !r.satisfied).count();
    if violations > 0 {
        return Err(runtime(anyhow!("{violations} noiseless chain(s) violated the path bound")));
    }
    Ok(())
}

/// Sweep over methods x metrics x budgets; metrics apply to `mst` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    pub budgets: Vec<u64>,
    #[serde(default = "one")]
    pub num_seeds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    #[serde(default = "yes")]
    pub resplit: bool,
    #[serde(default)]
    pub scheme: AllocationScheme,
    #[serde(default)]
    pub distance: DistanceParams,
    #[serde(default)]
    pub init: InitKind,
}

fn default_metrics() -> Vec<Metric> {
    vec!["gradient".parse().expect("known metric")]
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl BenchConfig {
    pub fn experiments(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &method in &self.methods {
            let metrics: Vec<Option<Metric>> =
                if method == Method::Mst { self.metrics.iter().copied().map(Some).collect() } else { vec![None] };
            for metric in metrics {
                for &budget in &self.budgets {
                    out.push(ExperimentConfig {
                        method,
                        metric,
                        budget,
                        scheme: self.scheme,
                        num_seeds: self.num_seeds,
                        seed: self.seed,
                        synthetic: self.synthetic.clone(),
                        data_path: self.data_path.clone(),
                        resplit: self.resplit,
                        distance: self.distance.clone(),
                        init: self.init,
                    });
                }
            }
        }
        out
    }
}

pub const BENCH_HEADER: &str = "method,metric,B,seed,mean_rmse";
pub const SUMMARY_HEADER: &str = "method,metric,B,mean_rmse,std_rmse,num_seeds";

fn bench(cfg: &BenchConfig, config: &Path, out: &Path) -> Result<(), CliError> {
    if cfg.methods.is_empty() || cfg.budgets.is_empty() {
        return Err(usage(anyhow!("bench needs at least one method and one budget")));
    }
    let experiments = cfg.experiments();
    for e in &experiments {
        e.validate()?;
    }
    let mut manifest = RunManifest::start("bench", Some(config), cfg.seed, out);
    let mut rows = format!("{BENCH_HEADER}\n");
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for e in &experiments {
        let outcome = run_experiment(e)?;
        let metric = e.metric.map_or("", Metric::name);
        for (r, m) in outcome.per_seed_mean.iter().enumerate() {
            writeln!(rows, "{},{metric},{},{r},{}", e.method, e.budget, float(*m)).expect("string write");
        }
        let (mean, std) = mean_and_std(&outcome.per_seed_mean);
        writeln!(summary, "{},{metric},{},{},{},{}", e.method, e.budget, float(mean), float(std), outcome.per_seed_mean.len())
            .expect("string write");
    }
    create_dir(out)?;
    write_file(&out.join("bench.csv"), rows)?;
    write_file(&out.join("summary.csv"), summary)?;
    manifest.outputs.extend(["bench.csv".to_string(), "summary.csv".to_string()]);
    manifest.finish().map_err(runtime)
}
