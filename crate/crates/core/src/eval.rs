//! Test-set metrics, the multi-run experiment protocol, the population-size
//! sweep and result files.
//!
//! Run `i` of a protocol uses seed `base + i` for both its stratified split
//! and its evolution, so any single run can be re-executed in isolation.
//! With `fixed_split` every run shares the split drawn with the base seed.
//!
//! Output directory layout:
//!
//! ```text
//! summary.csv        fitness,tp_rate,tn_rate,accuracy (3 decimals, half-up)
//! summary.txt        the same table, aligned
//! runs.csv           per-run seed, counts and full-precision metrics
//! runs/run_<i>.csv   generation,best_fitness,mean_fitness
//! runs/run_<i>.tree  best tree as an s-expression
//! sweep.csv          size,generation,mean_best_fitness
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::{normalize, stratified_split, ClassFractions, Dataset, Profile, SplitSpec};
use crate::engine::evolve;
use crate::error::{Error, Result};
use crate::fitness::{collect_outcomes, ConfusionCounts, FitnessKind};
use crate::params::EvolutionParams;
use crate::scalar::Scalar;
use crate::sexpr::to_sexpr;
use crate::tree::ExprTree;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics<T> {
    pub tp_rate: T,
    pub tn_rate: T,
    pub accuracy: T,
}

impl<T: Scalar> Metrics<T> {
    pub fn from_counts(c: &ConfusionCounts) -> Result<Self> {
        Ok(Metrics {
            tp_rate: c.tp_rate()?,
            tn_rate: c.tn_rate()?,
            accuracy: T::lit((c.tp + c.tn) as f64) / T::lit(c.total() as f64),
        })
    }

    /// Component-wise arithmetic mean.
    pub fn mean(all: &[Metrics<T>]) -> Option<Self> {
        if all.is_empty() {
            return None;
        }
        let n = T::lit(all.len() as f64);
        Some(Metrics {
            tp_rate: all.iter().map(|m| m.tp_rate).sum::<T>() / n,
            tn_rate: all.iter().map(|m| m.tn_rate).sum::<T>() / n,
            accuracy: all.iter().map(|m| m.accuracy).sum::<T>() / n,
        })
    }
}

/// TP rate, TN rate and accuracy of `tree` on `test`.
pub fn metrics<T: Scalar>(
    tree: &ExprTree<T>,
    test: &Dataset<T>,
) -> Result<(Metrics<T>, ConfusionCounts)> {
    let (counts, _) = collect_outcomes(tree, test)?;
    Ok((Metrics::from_counts(&counts)?, counts))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord<T> {
    pub run_index: usize,
    pub seed: u64,
    pub fitness_kind: FitnessKind,
    pub best_tree: ExprTree<T>,
    pub train_fitness: T,
    /// Per generation: best and mean training fitness.
    pub trace: Vec<(T, T)>,
    pub test_counts: ConfusionCounts,
    pub test_metrics: Metrics<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary<T> {
    pub dataset: String,
    pub fitness_kind: FitnessKind,
    pub params: EvolutionParams,
    pub runs: Vec<RunRecord<T>>,
    pub mean: Metrics<T>,
}

/// A normalized dataset plus the split fractions its runs use.
#[derive(Clone, Debug)]
pub struct Experiment<T> {
    pub name: String,
    pub data: Dataset<T>,
    pub minority: ClassFractions,
    pub majority: ClassFractions,
    pub fixed_split: bool,
}

impl<T: Scalar> Experiment<T> {
    /// Loads the profile's data and min-max normalizes it over all rows,
    /// before any splitting.
    pub fn from_profile(profile: &Profile) -> Result<Self> {
        let raw: Dataset<T> = profile.load_dataset()?;
        let (data, _) = normalize(&raw);
        Ok(Experiment {
            name: profile.display_name(),
            data,
            minority: profile.minority,
            majority: profile.majority,
            fixed_split: false,
        })
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            minority: self.minority,
            majority: self.majority,
            seed,
        }
    }

    /// Train/test split used by run `run_index` under `base_seed`.
    pub fn split_for_run(
        &self,
        base_seed: u64,
        run_index: usize,
    ) -> Result<(Dataset<T>, Dataset<T>)> {
        let seed = if self.fixed_split {
            base_seed
        } else {
            run_seed(base_seed, run_index)
        };
        stratified_split(&self.data, &self.split_spec(seed))
    }

    pub fn run_once(
        &self,
        kind: FitnessKind,
        params: &EvolutionParams,
        run_index: usize,
    ) -> Result<RunRecord<T>> {
        let seed = run_seed(params.seed, run_index);
        let (train, test) = self.split_for_run(params.seed, run_index)?;
        let outcome = evolve(&train, kind, &params.with_seed(seed))?;
        let (test_metrics, test_counts) = metrics(outcome.best.tree(), &test)?;
        Ok(RunRecord {
            run_index,
            seed,
            fitness_kind: kind,
            train_fitness: outcome.best.fitness(),
            best_tree: outcome.best.into_tree(),
            trace: outcome.trace,
            test_counts,
            test_metrics,
        })
    }

    /// Runs `n_runs` independent evolutions and averages their test metrics.
    /// Runs execute in parallel; records are ordered by run index.
    pub fn run_protocol(
        &self,
        kind: FitnessKind,
        params: &EvolutionParams,
        n_runs: usize,
    ) -> Result<ExperimentSummary<T>> {
        if n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        params.validate()?;
        let runs: Vec<RunRecord<T>> = (0..n_runs)
            .into_par_iter()
            .map(|i| self.run_once(kind, params, i))
            .collect::<Result<_>>()?;
        let per_run: Vec<Metrics<T>> = runs.iter().map(|r| r.test_metrics).collect();
        Ok(ExperimentSummary {
            dataset: self.name.clone(),
            fitness_kind: kind,
            params: params.clone(),
            mean: Metrics::mean(&per_run).expect("at least one run"),
            runs,
        })
    }

    /// For each population size, averages best-so-far training fitness per
    /// generation over `n_runs` runs.
    pub fn sweep(
        &self,
        kind: FitnessKind,
        sizes: &[usize],
        params: &EvolutionParams,
        n_runs: usize,
    ) -> Result<Vec<SweepSeries<T>>> {
        if sizes.is_empty() {
            return Err(Error::Config(
                "sweep needs at least one population size".into(),
            ));
        }
        sizes
            .iter()
            .map(|&size| {
                let p = EvolutionParams {
                    population_size: size,
                    ..params.clone()
                };
                let summary = self.run_protocol(kind, &p, n_runs)?;
                Ok(SweepSeries::from_runs(size, &summary.runs))
            })
            .collect()
    }
}

pub fn run_seed(base: u64, run_index: usize) -> u64 {
    base.wrapping_add(run_index as u64)
}

/// Population sizes swept by default.
pub const DEFAULT_SWEEP_SIZES: [usize; 5] = [100, 200, 300, 400, 500];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSeries<T> {
    pub population_size: usize,
    /// Mean over runs of the best fitness found up to each generation.
    pub mean_best: Vec<T>,
}

impl<T: Scalar> SweepSeries<T> {
    fn from_runs(population_size: usize, runs: &[RunRecord<T>]) -> Self {
        let generations = runs.iter().map(|r| r.trace.len()).min().unwrap_or(0);
        let n = T::lit(runs.len() as f64);
        let mut sums = vec![T::zero(); generations];
        for run in runs {
            let mut so_far = T::neg_infinity();
            for (g, &(best, _)) in run.trace.iter().take(generations).enumerate() {
                so_far = so_far.max(best);
                sums[g] = sums[g] + so_far;
            }
        }
        SweepSeries {
            population_size,
            mean_best: sums.into_iter().map(|s| s / n).collect(),
        }
    }

    /// Mean best-of-run fitness after the final generation.
    pub fn final_mean(&self) -> T {
        *self.mean_best.last().expect("non-empty series")
    }
}

/// Rounds to three decimals, ties away from zero, on the shortest decimal
/// representation of `x` (so `0.7565` gives `0.757`).
pub fn format_rate(x: f64) -> String {
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let digits: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    let mut thousandths: u64 = int_part.parse::<u64>().expect("finite rate") * 1000
        + digits
            .iter()
            .take(3)
            .enumerate()
            .map(|(i, &d)| d as u64 * 10u64.pow(2 - i as u32))
            .sum::<u64>();
    if digits.get(3).is_some_and(|&d| d >= 5) {
        thousandths += 1;
    }
    let sign = if x < 0.0 && thousandths > 0 { "-" } else { "" };
    format!("{sign}{}.{:03}", thousandths / 1000, thousandths % 1000)
}

/// `tp,tn,acc` at three decimals.
pub fn metrics_row<T: Scalar>(m: &Metrics<T>) -> String {
    format!(
        "{},{},{}",
        format_rate(m.tp_rate.as_f64()),
        format_rate(m.tn_rate.as_f64()),
        format_rate(m.accuracy.as_f64())
    )
}

/// Result table as `(csv, aligned text)`; one row per summary, in the order given.
pub fn emit_table<T: Scalar>(summaries: &[ExperimentSummary<T>]) -> Result<(String, String)> {
    if summaries.is_empty() {
        return Err(Error::Usage("no summaries to tabulate".into()));
    }
    let mut csv = String::from("fitness,tp_rate,tn_rate,accuracy\n");
    let mut text = String::new();
    let mut datasets: Vec<&str> = summaries.iter().map(|s| s.dataset.as_str()).collect();
    datasets.dedup();
    let runs = summaries[0].runs.len();
    writeln!(
        text,
        "{} ({} runs per fitness function)",
        datasets.join(", "),
        runs
    )
    .unwrap();
    writeln!(
        text,
        "{:<16}{:>9}{:>9}{:>10}",
        "Fitness", "TP Rate", "TN Rate", "Accuracy"
    )
    .unwrap();
    for s in summaries {
        writeln!(csv, "{},{}", s.fitness_kind, metrics_row(&s.mean)).unwrap();
        writeln!(
            text,
            "{:<16}{:>9}{:>9}{:>10}",
            s.fitness_kind.name(),
            format_rate(s.mean.tp_rate.as_f64()),
            format_rate(s.mean.tn_rate.as_f64()),
            format_rate(s.mean.accuracy.as_f64())
        )
        .unwrap();
    }
    Ok((csv, text))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn trace_csv<T: Scalar>(trace: &[(T, T)]) -> String {
    let mut out = String::from("generation,best_fitness,mean_fitness\n");
    for (g, (best, mean)) in trace.iter().enumerate() {
        writeln!(out, "{g},{best},{mean}").unwrap();
    }
    out
}

pub fn runs_csv<T: Scalar>(runs: &[RunRecord<T>]) -> String {
    let mut out = String::from(
        "run,seed,train_fitness,tp,fn,tn,fp,tp_rate,tn_rate,accuracy,tree_size,tree_depth\n",
    );
    for r in runs {
        let c = r.test_counts;
        let m = r.test_metrics;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.run_index,
            r.seed,
            r.train_fitness,
            c.tp,
            c.fn_,
            c.tn,
            c.fp,
            m.tp_rate,
            m.tn_rate,
            m.accuracy,
            r.best_tree.size(),
            r.best_tree.depth()
        )
        .unwrap();
    }
    out
}

/// Writes `summary.csv`, `summary.txt`, `runs.csv` and `runs/` for one fitness kind.
pub fn write_summary_dir<T: Scalar>(dir: &Path, summary: &ExperimentSummary<T>) -> Result<()> {
    let runs_dir = dir.join("runs");
    create_dir(&runs_dir)?;
    let (csv, text) = emit_table(std::slice::from_ref(summary))?;
    write(&dir.join("summary.csv"), &csv)?;
    write(&dir.join("summary.txt"), &text)?;
    write(&dir.join("runs.csv"), &runs_csv(&summary.runs))?;
    for r in &summary.runs {
        write(
            &runs_dir.join(format!("run_{}.csv", r.run_index)),
            &trace_csv(&r.trace),
        )?;
        write(
            &runs_dir.join(format!("run_{}.tree", r.run_index)),
            &format!("{}\n", to_sexpr(&r.best_tree)),
        )?;
    }
    Ok(())
}

pub fn sweep_csv<T: Scalar>(series: &[SweepSeries<T>]) -> String {
    let mut out = String::from("size,generation,mean_best_fitness\n");
    for s in series {
        for (g, v) in s.mean_best.iter().enumerate() {
            writeln!(out, "{},{g},{v}", s.population_size).unwrap();
        }
    }
    out
}

pub fn write_sweep<T: Scalar>(dir: &Path, series: &[SweepSeries<T>]) -> Result<()> {
    create_dir(dir)?;
    write(&dir.join("sweep.csv"), &sweep_csv(series))
}
