//! Resolution of run settings: built-in defaults, then the `--scaled` preset,
//! then an optional TOML config file, then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use imbagp::eval::DEFAULT_SWEEP_SIZES;
use imbagp::{EvolutionParams, FitnessKind};
use serde::Deserialize;

/// Number of independent runs per fitness function by default.
pub const DEFAULT_RUNS: usize = 30;
/// Runs per fitness function under `--scaled`.
pub const SCALED_RUNS: usize = 10;

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Dataset profile (TOML) naming the data file, label column, minority value and split fractions.
    #[arg(long, value_name = "PROFILE")]
    pub dataset: Option<PathBuf>,

    /// Run settings file (TOML); flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Fitness function: equal, errors, errors-mean, errors-median; a comma list or `all`.
    #[arg(long, value_name = "KIND")]
    pub fitness: Option<String>,

    /// Base seed; run i uses seed + i for its split and its evolution.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Population size [default: 500].
    #[arg(long)]
    pub population: Option<usize>,

    /// Number of generations [default: 1000].
    #[arg(long)]
    pub generations: Option<usize>,

    /// Independent runs per fitness function [default: 30].
    #[arg(long)]
    pub n_runs: Option<usize>,

    /// Crossover probability [default: 0.9]; mutation probability becomes 1 minus this unless --mutation is given.
    #[arg(long)]
    pub crossover: Option<f64>,

    /// Mutation probability [default: 0.1].
    #[arg(long)]
    pub mutation: Option<f64>,

    /// Tournament size [default: 3].
    #[arg(long)]
    pub tournament: Option<usize>,

    /// Maximum tree depth after any genetic operation [default: 17].
    #[arg(long)]
    pub max_depth: Option<usize>,

    /// Individuals copied unchanged into the next generation [default: 1].
    #[arg(long)]
    pub elitism: Option<usize>,

    /// Output directory [default: results].
    #[arg(long, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Worker threads for runs and fitness evaluation (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,

    /// Use one train/test split (drawn with the base seed) for every run.
    #[arg(long)]
    pub fixed_split: bool,

    /// Quick preset: population 100, 100 generations, 10 runs. Not the reference setting.
    #[arg(long)]
    pub scaled: bool,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<PathBuf>,
    fitness: Option<String>,
    seed: Option<u64>,
    population_size: Option<usize>,
    generations: Option<usize>,
    n_runs: Option<usize>,
    p_crossover: Option<f64>,
    p_mutation: Option<f64>,
    tournament_size: Option<usize>,
    max_depth: Option<usize>,
    init_depth_range: Option<(usize, usize)>,
    elitism_count: Option<usize>,
    output: Option<PathBuf>,
    fixed_split: Option<bool>,
    sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset_profile: PathBuf,
    pub fitness: Vec<FitnessKind>,
    pub params: EvolutionParams,
    pub n_runs: usize,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub fixed_split: bool,
    pub sizes: Vec<usize>,
}

pub fn parse_kinds(text: &str) -> Result<Vec<FitnessKind>> {
    if text == "all" {
        return Ok(FitnessKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for part in text.split(',').map(str::trim) {
        let kind: FitnessKind = part.parse().context("--fitness")?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    kinds.sort();
    Ok(kinds)
}

pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .with_context(|| format!("--sizes: {s:?} is not a population size"))
        })
        .collect()
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("--config: {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("--config: {}", path.display()))
}

impl RunConfig {
    pub fn resolve(
        args: &CommonArgs,
        sizes_flag: Option<&str>,
        default_kind: &str,
    ) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };

        let mut params = if args.scaled {
            EvolutionParams::scaled()
        } else {
            EvolutionParams::default()
        };
        let mut n_runs = if args.scaled {
            SCALED_RUNS
        } else {
            DEFAULT_RUNS
        };

        // config file layer
        if let Some(v) = file.seed {
            params.seed = v;
        }
        if let Some(v) = file.population_size {
            params.population_size = v;
        }
        if let Some(v) = file.generations {
            params.generations = v;
        }
        if let Some(v) = file.p_crossover {
            params.p_crossover = v;
            params.p_mutation = 1.0 - v;
        }
        if let Some(v) = file.p_mutation {
            params.p_mutation = v;
        }
        if let Some(v) = file.tournament_size {
            params.tournament_size = v;
        }
        if let Some(v) = file.max_depth {
            params.max_depth = v;
        }
        if let Some(v) = file.init_depth_range {
            params.init_depth_range = v;
        }
        if let Some(v) = file.elitism_count {
            params.elitism_count = v;
        }
        if let Some(v) = file.n_runs {
            n_runs = v;
        }

        // flag layer
        if let Some(v) = args.seed {
            params.seed = v;
        }
        if let Some(v) = args.population {
            params.population_size = v;
        }
        if let Some(v) = args.generations {
            params.generations = v;
        }
        if let Some(v) = args.crossover {
            params.p_crossover = v;
            params.p_mutation = 1.0 - v;
        }
        if let Some(v) = args.mutation {
            params.p_mutation = v;
        }
        if let Some(v) = args.tournament {
            params.tournament_size = v;
        }
        if let Some(v) = args.max_depth {
            params.max_depth = v;
        }
        if let Some(v) = args.elitism {
            params.elitism_count = v;
        }
        if let Some(v) = args.n_runs {
            n_runs = v;
        }

        let dataset_profile = match args.dataset.clone().or(file.dataset) {
            Some(p) => p,
            None => bail!("--dataset: a dataset profile is required"),
        };
        if !dataset_profile.is_file() {
            bail!(
                "--dataset: profile {} does not exist",
                dataset_profile.display()
            );
        }
        let fitness = parse_kinds(
            args.fitness
                .as_deref()
                .or(file.fitness.as_deref())
                .unwrap_or(default_kind),
        )?;
        let sizes = match sizes_flag {
            Some(text) => parse_sizes(text)?,
            None => file.sizes.unwrap_or_else(|| DEFAULT_SWEEP_SIZES.to_vec()),
        };
        if sizes.is_empty() || sizes.contains(&0) {
            bail!("--sizes: population sizes must be positive");
        }
        if n_runs == 0 {
            bail!("--n-runs: must be at least 1");
        }
        params
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid evolution parameters: {e}"))?;

        Ok(RunConfig {
            dataset_profile,
            fitness,
            params,
            n_runs,
            output_dir: args
                .output
                .clone()
                .or(file.output)
                .unwrap_or_else(|| PathBuf::from("results")),
            jobs: args.jobs,
            fixed_split: args.fixed_split || file.fixed_split.unwrap_or(false),
            sizes,
        })
    }
}
