use serde::Deserialize;

use crate::error::{Error, Result};

/// Evolutionary run settings. Defaults are 500 individuals, 1000
/// generations, crossover 0.9 / mutation 0.1 and tournaments of 3.
///
/// Each offspring is produced by exactly one operator: crossover with
/// probability `p_crossover`, otherwise mutation, so the two probabilities
/// must sum to 1.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionParams {
    pub population_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub tournament_size: usize,
    /// Depth limit (edges from root) enforced after every genetic operation.
    pub max_depth: usize,
    /// Inclusive `(min, max)` depths for ramped half-and-half initialization.
    pub init_depth_range: (usize, usize),
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            population_size: 500,
            generations: 1000,
            p_crossover: 0.9,
            p_mutation: 0.1,
            tournament_size: 3,
            max_depth: 17,
            init_depth_range: (2, 6),
            elitism_count: 1,
            seed: 0,
        }
    }
}

impl EvolutionParams {
    /// Reduced settings for quick runs: population 100, 100 generations.
    pub fn scaled() -> Self {
        EvolutionParams {
            population_size: 100,
            generations: 100,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EvolutionParams {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.population_size == 0 {
            return fail("population_size", "must be positive".into());
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return fail(
                "tournament_size",
                format!("must be in 1..={}", self.population_size),
            );
        }
        for (name, p) in [
            ("p_crossover", self.p_crossover),
            ("p_mutation", self.p_mutation),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(name, format!("{p} is not a probability"));
            }
        }
        if (self.p_crossover + self.p_mutation - 1.0).abs() > 1e-9 {
            return fail(
                "p_mutation",
                format!(
                    "p_crossover + p_mutation must equal 1 (got {} + {})",
                    self.p_crossover, self.p_mutation
                ),
            );
        }
        let (lo, hi) = self.init_depth_range;
        if lo > hi {
            return fail("init_depth_range", format!("min {lo} exceeds max {hi}"));
        }
        if hi > self.max_depth {
            return fail(
                "init_depth_range",
                format!("max {hi} exceeds max_depth {}", self.max_depth),
            );
        }
        if self.elitism_count > self.population_size {
            return fail("elitism_count", "exceeds population_size".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = EvolutionParams::default();
        p.validate().unwrap();
        assert_eq!(
            (p.population_size, p.generations, p.tournament_size),
            (500, 1000, 3)
        );
        assert_eq!((p.p_crossover, p.p_mutation), (0.9, 0.1));
        EvolutionParams::scaled().validate().unwrap();
    }

    #[test]
    fn rejects_bad_fields() {
        let base = EvolutionParams::default();
        let cases = [
            (
                EvolutionParams {
                    population_size: 0,
                    ..base.clone()
                },
                "population_size",
            ),
            (
                EvolutionParams {
                    tournament_size: 501,
                    ..base.clone()
                },
                "tournament_size",
            ),
            (
                EvolutionParams {
                    p_mutation: 0.2,
                    ..base.clone()
                },
                "p_mutation",
            ),
            (
                EvolutionParams {
                    init_depth_range: (4, 2),
                    ..base.clone()
                },
                "init_depth_range",
            ),
            (
                EvolutionParams {
                    init_depth_range: (2, 18),
                    ..base.clone()
                },
                "init_depth_range",
            ),
            (
                EvolutionParams {
                    elitism_count: 600,
                    ..base.clone()
                },
                "elitism_count",
            ),
        ];
        for (p, field) in cases {
            let msg = p.validate().unwrap_err().to_string();
            assert!(msg.contains(field), "{msg}");
        }
    }
}
