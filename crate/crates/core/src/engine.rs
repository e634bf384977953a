//! Tree generation, genetic operators, tournament selection and the
//! generational loop.
//!
//! Breeding draws from a single [`GpRng`] stream in a fixed order; only
//! fitness evaluation runs in parallel, so a run's output depends on
//! `(seed, params, dataset)` alone.

use rand::Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fitness::{self, FitnessKind};
use crate::params::EvolutionParams;
use crate::scalar::Scalar;
use crate::tree::{ExprTree, Node, Op};
use crate::GpRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMethod {
    /// Every branch reaches exactly the target depth.
    Full,
    /// Branches stop early at random; depth is at most the target.
    Grow,
}

/// Probability that a non-maximal-depth node of a grown tree is a terminal.
const GROW_TERMINAL_PROB: f64 = 0.5;

/// Feature index or an ephemeral constant uniform in `[-1, 1]`, each of the
/// `n_features + 1` terminal kinds equally likely.
fn random_terminal<T: Scalar>(n_features: usize, rng: &mut GpRng) -> Node<T> {
    let pick = rng.gen_range(0..=n_features);
    if pick < n_features {
        Node::Feature(pick)
    } else {
        Node::Const(T::lit(rng.gen_range(-1.0..=1.0)))
    }
}

fn random_op(rng: &mut GpRng) -> Op {
    Op::ALL[rng.gen_range(0..Op::ALL.len())]
}

pub fn full_tree<T: Scalar>(depth: usize, n_features: usize, rng: &mut GpRng) -> Node<T> {
    if depth == 0 {
        return random_terminal(n_features, rng);
    }
    let op = random_op(rng);
    let a = full_tree(depth - 1, n_features, rng);
    let b = full_tree(depth - 1, n_features, rng);
    Node::func(op, a, b)
}

pub fn grow_tree<T: Scalar>(max_depth: usize, n_features: usize, rng: &mut GpRng) -> Node<T> {
    if max_depth == 0 || rng.gen_bool(GROW_TERMINAL_PROB) {
        return random_terminal(n_features, rng);
    }
    let op = random_op(rng);
    let a = grow_tree(max_depth - 1, n_features, rng);
    let b = grow_tree(max_depth - 1, n_features, rng);
    Node::func(op, a, b)
}

/// A random tree with depth drawn uniformly from `params.init_depth_range`.
pub fn generate_tree<T: Scalar>(
    params: &EvolutionParams,
    n_features: usize,
    method: InitMethod,
    rng: &mut GpRng,
) -> ExprTree<T> {
    let (lo, hi) = params.init_depth_range;
    let depth = rng.gen_range(lo..=hi);
    ExprTree::new(match method {
        InitMethod::Full => full_tree(depth, n_features, rng),
        InitMethod::Grow => grow_tree(depth, n_features, rng),
    })
}

/// Ramped half-and-half: individual `i` gets depth `lo + (i / 2) % span` and
/// alternates full (even `i`) and grow (odd `i`).
pub fn ramped_half_and_half<T: Scalar>(
    params: &EvolutionParams,
    n_features: usize,
    rng: &mut GpRng,
) -> Vec<ExprTree<T>> {
    let (lo, hi) = params.init_depth_range;
    let span = hi - lo + 1;
    (0..params.population_size)
        .map(|i| {
            let depth = lo + (i / 2) % span;
            ExprTree::new(if i % 2 == 0 {
                full_tree(depth, n_features, rng)
            } else {
                grow_tree(depth, n_features, rng)
            })
        })
        .collect()
}

/// `None` when the offspring would exceed `max_depth`.
fn try_crossover<T: Scalar>(
    a: &ExprTree<T>,
    b: &ExprTree<T>,
    max_depth: usize,
    rng: &mut GpRng,
) -> Option<ExprTree<T>> {
    let i = rng.gen_range(0..a.size());
    let j = rng.gen_range(0..b.size());
    let (_, depth_at) = a.subtree(i).expect("index within tree size");
    let (donor, _) = b.subtree(j).expect("index within tree size");
    if depth_at + donor.depth() > max_depth {
        return None;
    }
    Some(a.with_replaced(i, donor.clone())).filter(|c| c.depth() <= max_depth)
}

fn try_mutation<T: Scalar>(
    a: &ExprTree<T>,
    params: &EvolutionParams,
    n_features: usize,
    rng: &mut GpRng,
) -> Option<ExprTree<T>> {
    let i = rng.gen_range(0..a.size());
    let fresh = grow_tree(params.init_depth_range.1, n_features, rng);
    let (_, depth_at) = a.subtree(i).expect("index within tree size");
    if depth_at + fresh.depth() > params.max_depth {
        return None;
    }
    Some(a.with_replaced(i, fresh)).filter(|c| c.depth() <= params.max_depth)
}

/// Replaces a uniformly chosen subtree of `a` with a uniformly chosen subtree
/// of `b`. Returns a copy of `a` if the result would exceed `max_depth`.
pub fn subtree_crossover<T: Scalar>(
    a: &ExprTree<T>,
    b: &ExprTree<T>,
    max_depth: usize,
    rng: &mut GpRng,
) -> ExprTree<T> {
    try_crossover(a, b, max_depth, rng).unwrap_or_else(|| a.clone())
}

/// Replaces a uniformly chosen subtree of `a` with a freshly grown tree of
/// depth at most `params.init_depth_range.1`, with the same depth-limit
/// fallback as crossover.
pub fn subtree_mutation<T: Scalar>(
    a: &ExprTree<T>,
    params: &EvolutionParams,
    n_features: usize,
    rng: &mut GpRng,
) -> ExprTree<T> {
    try_mutation(a, params, n_features, rng).unwrap_or_else(|| a.clone())
}

/// A tree with its training fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual<T> {
    tree: ExprTree<T>,
    fitness: T,
}

impl<T: Scalar> Individual<T> {
    pub fn evaluate(tree: ExprTree<T>, kind: FitnessKind, data: &Dataset<T>) -> Result<Self> {
        let fitness = fitness::evaluate(kind, &tree, data)?;
        Ok(Individual { tree, fitness })
    }

    /// Pairs a tree with an externally computed fitness. The caller is
    /// responsible for the fitness matching the tree.
    pub fn with_fitness(tree: ExprTree<T>, fitness: T) -> Self {
        Individual { tree, fitness }
    }

    pub fn tree(&self) -> &ExprTree<T> {
        &self.tree
    }

    pub fn fitness(&self) -> T {
        self.fitness
    }

    pub fn into_tree(self) -> ExprTree<T> {
        self.tree
    }
}

/// Samples `k` individuals uniformly with replacement and returns the fittest;
/// ties go to the earliest sample.
pub fn tournament_select<'a, T: Scalar>(
    pop: &'a [Individual<T>],
    k: usize,
    rng: &mut GpRng,
) -> Result<&'a Individual<T>> {
    if pop.is_empty() {
        return Err(Error::Usage("tournament over an empty population".into()));
    }
    if k == 0 || k > pop.len() {
        return Err(Error::Usage(format!(
            "tournament size {k} outside 1..={}",
            pop.len()
        )));
    }
    let mut best = &pop[rng.gen_range(0..pop.len())];
    for _ in 1..k {
        let challenger = &pop[rng.gen_range(0..pop.len())];
        if challenger.fitness > best.fitness {
            best = challenger;
        }
    }
    Ok(best)
}

/// Result of one evolutionary run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome<T> {
    /// Highest training fitness seen; ties keep the earliest discovery.
    pub best: Individual<T>,
    /// Per generation (initial population first): best and mean fitness.
    pub trace: Vec<(T, T)>,
}

fn evaluate_all<T: Scalar>(
    trees: Vec<ExprTree<T>>,
    kind: FitnessKind,
    data: &Dataset<T>,
) -> Result<Vec<Individual<T>>> {
    trees
        .into_par_iter()
        .map(|t| Individual::evaluate(t, kind, data))
        .collect()
}

fn generation_stats<T: Scalar>(pop: &[Individual<T>]) -> (T, T) {
    let best = pop
        .iter()
        .map(|i| i.fitness)
        .fold(T::neg_infinity(), T::max);
    let mean = pop.iter().map(|i| i.fitness).sum::<T>() / T::lit(pop.len() as f64);
    (best, mean)
}

/// Index of the first individual with the maximum fitness.
fn fittest<T: Scalar>(pop: &[Individual<T>]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        if ind.fitness > pop[best].fitness {
            best = i;
        }
    }
    best
}

enum Pending<T> {
    /// Operator fell back to the unchanged parent; fitness is reused.
    Copy(Individual<T>),
    New(ExprTree<T>),
}

/// Evolves a classifier on `train` under fitness `kind`.
///
/// Generation 0 is a ramped half-and-half population. Each later generation
/// keeps the `elitism_count` fittest individuals and fills the rest with
/// offspring of tournament-selected parents, each made by crossover with
/// probability `p_crossover` and by mutation otherwise.
pub fn evolve<T: Scalar>(
    train: &Dataset<T>,
    kind: FitnessKind,
    params: &EvolutionParams,
) -> Result<RunOutcome<T>> {
    params.validate()?;
    train.require_both_classes()?;
    let n_features = train.attribute_count();
    let mut rng = GpRng::seed_from_u64(params.seed);

    let initial = ramped_half_and_half(params, n_features, &mut rng);
    let mut pop = evaluate_all(initial, kind, train)?;
    let mut trace = vec![generation_stats(&pop)];
    let mut best = pop[fittest(&pop)].clone();

    for _ in 0..params.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| {
            pop[b]
                .fitness
                .partial_cmp(&pop[a].fitness)
                .expect("finite fitness")
        });
        let mut next: Vec<Individual<T>> = order[..params.elitism_count]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();

        let mut pending = Vec::with_capacity(params.population_size - next.len());
        while next.len() + pending.len() < params.population_size {
            let child = if rng.gen::<f64>() < params.p_crossover {
                let a = tournament_select(&pop, params.tournament_size, &mut rng)?;
                let b = tournament_select(&pop, params.tournament_size, &mut rng)?;
                match try_crossover(&a.tree, &b.tree, params.max_depth, &mut rng) {
                    Some(t) => Pending::New(t),
                    None => Pending::Copy(a.clone()),
                }
            } else {
                let a = tournament_select(&pop, params.tournament_size, &mut rng)?;
                match try_mutation(&a.tree, params, n_features, &mut rng) {
                    Some(t) => Pending::New(t),
                    None => Pending::Copy(a.clone()),
                }
            };
            pending.push(child);
        }

        let evaluated: Vec<Individual<T>> = pending
            .into_par_iter()
            .map(|p| match p {
                Pending::Copy(ind) => Ok(ind),
                Pending::New(t) => Individual::evaluate(t, kind, train),
            })
            .collect::<Result<_>>()?;
        next.extend(evaluated);
        pop = next;

        trace.push(generation_stats(&pop));
        let i = fittest(&pop);
        if pop[i].fitness > best.fitness {
            best = pop[i].clone();
        }
    }

    Ok(RunOutcome { best, trace })
}
