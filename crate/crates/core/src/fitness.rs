//! Confusion counts, per-class error estimates and the four fitness
//! functions.
//!
//! The minority class is the positive class. An output `>= 0` predicts the
//! minority class. For each misclassified example the magnitude of its output
//! is squashed into `[0, 1)` by [`scale_error`] and filed under the example's
//! true class; the three error estimators summarize those lists.

use std::fmt;
use std::str::FromStr;

use crate::dataset::{Class, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::ExprTree;

/// Sign rule: non-negative output predicts the minority class.
#[inline]
pub fn classify_output<T: Scalar>(gpout: T) -> Class {
    if gpout >= T::zero() {
        Class::Minority
    } else {
        Class::Majority
    }
}

pub fn classify<T: Scalar>(tree: &ExprTree<T>, x: &[T]) -> Result<Class> {
    tree.eval(x).map(classify_output)
}

/// Tallies with minority = positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionCounts {
    pub fn minority(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn majority(&self) -> usize {
        self.tn + self.fp
    }

    pub fn total(&self) -> usize {
        self.minority() + self.majority()
    }

    fn check(&self) -> Result<()> {
        if self.minority() == 0 || self.majority() == 0 {
            return Err(Error::Config(format!(
                "both classes must be present (minority {}, majority {})",
                self.minority(),
                self.majority()
            )));
        }
        Ok(())
    }

    pub fn tp_rate<T: Scalar>(&self) -> Result<T> {
        self.check()?;
        Ok(ratio(self.tp, self.minority()))
    }

    pub fn tn_rate<T: Scalar>(&self) -> Result<T> {
        self.check()?;
        Ok(ratio(self.tn, self.majority()))
    }
}

fn ratio<T: Scalar>(num: usize, den: usize) -> T {
    T::lit(num as f64) / T::lit(den as f64)
}

/// Scaled magnitudes of incorrect outputs, split by true class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSamples<T> {
    pub minority: Vec<T>,
    pub majority: Vec<T>,
}

/// Squashes an output magnitude into `[0, 1)` via `|x| / (1 + |x|)`.
#[inline]
pub fn scale_error<T: Scalar>(gpout: T) -> T {
    let m = gpout.abs();
    m / (T::one() + m)
}

/// Tallies outcomes from precomputed outputs and matching labels.
pub fn outcomes_from_outputs<T: Scalar>(
    outputs: &[T],
    labels: &[Class],
) -> Result<(ConfusionCounts, ErrorSamples<T>)> {
    if outputs.len() != labels.len() {
        return Err(Error::Structure(format!(
            "{} outputs for {} labels",
            outputs.len(),
            labels.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    let mut samples = ErrorSamples {
        minority: Vec::new(),
        majority: Vec::new(),
    };
    for (&out, &label) in outputs.iter().zip(labels) {
        match (label, classify_output(out)) {
            (Class::Minority, Class::Minority) => counts.tp += 1,
            (Class::Minority, Class::Majority) => {
                counts.fn_ += 1;
                samples.minority.push(scale_error(out));
            }
            (Class::Majority, Class::Majority) => counts.tn += 1,
            (Class::Majority, Class::Minority) => {
                counts.fp += 1;
                samples.majority.push(scale_error(out));
            }
        }
    }
    counts.check()?;
    Ok((counts, samples))
}

/// Applies `tree` to every row of `data` and tallies the outcomes.
pub fn collect_outcomes<T: Scalar>(
    tree: &ExprTree<T>,
    data: &Dataset<T>,
) -> Result<(ConfusionCounts, ErrorSamples<T>)> {
    let outputs = tree.eval_columns(data.columns(), data.len())?;
    outcomes_from_outputs(&outputs, data.labels())
}

/// Balanced accuracy sum, `TP/(TP+FN) + TN/(TN+FP)`, in `[0, 2]`.
pub fn f_equal<T: Scalar>(c: &ConfusionCounts) -> Result<T> {
    Ok(c.tp_rate::<T>()? + c.tn_rate::<T>()?)
}

/// Midpoint of the largest and smallest sample; 0 for an empty list.
pub fn err_range<T: Scalar>(samples: &[T]) -> T {
    let mut it = samples.iter().copied();
    let Some(first) = it.next() else {
        return T::zero();
    };
    let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (hi + lo) / T::lit(2.0)
}

/// Arithmetic mean; 0 for an empty list.
pub fn err_mean<T: Scalar>(samples: &[T]) -> T {
    if samples.is_empty() {
        return T::zero();
    }
    samples.iter().copied().sum::<T>() / T::lit(samples.len() as f64)
}

/// Median of the ascending-sorted samples, averaging the two middle values
/// for even lengths; 0 for an empty list.
pub fn err_median<T: Scalar>(samples: &[T]) -> T {
    if samples.is_empty() {
        return T::zero();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("error samples are finite"));
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / T::lit(2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FitnessKind {
    Equal,
    Errors,
    ErrorsMean,
    ErrorsMedian,
}

impl FitnessKind {
    /// Declaration order, which is also the reporting order.
    pub const ALL: [FitnessKind; 4] = [
        FitnessKind::Equal,
        FitnessKind::Errors,
        FitnessKind::ErrorsMean,
        FitnessKind::ErrorsMedian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitnessKind::Equal => "equal",
            FitnessKind::Errors => "errors",
            FitnessKind::ErrorsMean => "errors-mean",
            FitnessKind::ErrorsMedian => "errors-median",
        }
    }

    /// Upper bound of the fitness range; the lower bound is 0.
    pub fn max_value(self) -> f64 {
        match self {
            FitnessKind::Equal => 2.0,
            _ => 4.0,
        }
    }

    /// Error estimator for the error-based kinds.
    pub fn estimator<T: Scalar>(self) -> Option<fn(&[T]) -> T> {
        match self {
            FitnessKind::Equal => None,
            FitnessKind::Errors => Some(err_range::<T>),
            FitnessKind::ErrorsMean => Some(err_mean::<T>),
            FitnessKind::ErrorsMedian => Some(err_median::<T>),
        }
    }
}

impl fmt::Display for FitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitnessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitnessKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown fitness kind {s:?} (expected equal, errors, errors-mean or errors-median)"
                ))
            })
    }
}

/// `f_equal` for [`FitnessKind::Equal`]; otherwise
/// `f_equal + (1 - Err_min) + (1 - Err_maj)` with the kind's estimator.
pub fn fitness<T: Scalar>(
    kind: FitnessKind,
    c: &ConfusionCounts,
    e: &ErrorSamples<T>,
) -> Result<T> {
    let base = f_equal::<T>(c)?;
    Ok(match kind.estimator::<T>() {
        None => base,
        Some(err) => base + (T::one() - err(&e.minority)) + (T::one() - err(&e.majority)),
    })
}

/// Training fitness of `tree` on `data`.
pub fn evaluate<T: Scalar>(kind: FitnessKind, tree: &ExprTree<T>, data: &Dataset<T>) -> Result<T> {
    let (c, e) = collect_outcomes(tree, data)?;
    fitness(kind, &c, &e)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::tree::Node;

    fn counts(tp: usize, fn_: usize, tn: usize, fp: usize) -> ConfusionCounts {
        ConfusionCounts { tp, fn_, tn, fp }
    }

    #[test]
    fn sign_rule_includes_zero() {
        assert_eq!(classify_output(0.0), Class::Minority);
        assert_eq!(classify_output(-0.0), Class::Minority);
        assert_eq!(classify_output(-0.001), Class::Majority);
        assert_eq!(classify_output(3.7), Class::Minority);
    }

    #[test]
    fn scale_error_examples() {
        assert_eq!(scale_error(0.0), 0.0);
        assert_eq!(scale_error(-1.0), 0.5);
        assert_abs_diff_eq!(scale_error(9.0), 0.9, epsilon = 1e-15);
        assert!(scale_error(1e12) < 1.0);
    }

    #[test]
    fn f_equal_examples() {
        assert_eq!(f_equal::<f64>(&counts(5, 5, 5, 5)).unwrap(), 1.0);
        assert_eq!(f_equal::<f64>(&counts(7, 0, 3, 0)).unwrap(), 2.0);
        // all-minority classifier: balanced score 1 despite 30% accuracy
        assert_eq!(f_equal::<f64>(&counts(150, 0, 0, 350)).unwrap(), 1.0);
    }

    #[test]
    fn zero_denominator_is_config_error() {
        assert!(matches!(
            f_equal::<f64>(&counts(0, 0, 3, 1)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            f_equal::<f64>(&counts(2, 1, 0, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn err_range_examples() {
        assert_eq!(err_range::<f64>(&[]), 0.0);
        assert_eq!(err_range(&[0.3]), 0.3);
        assert_abs_diff_eq!(err_range(&[0.1, 0.5, 0.9]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn err_mean_examples() {
        assert_eq!(err_mean::<f64>(&[]), 0.0);
        assert_abs_diff_eq!(err_mean(&[0.2, 0.4, 0.6]), 0.4, epsilon = 1e-15);
        let skewed = [0.99, 0.01, 0.01, 0.01];
        assert_abs_diff_eq!(err_mean(&skewed), 0.255, epsilon = 1e-15);
        assert_abs_diff_eq!(err_range(&skewed), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn err_median_examples() {
        assert_eq!(err_median::<f64>(&[]), 0.0);
        assert_eq!(err_median(&[0.9, 0.1, 0.5]), 0.5);
        assert_abs_diff_eq!(err_median(&[0.2, 0.8, 0.4, 0.6]), 0.5, epsilon = 1e-15);
        assert_eq!(err_median(&[0.01, 0.01, 0.01, 0.99]), 0.01);
    }

    #[test]
    fn perfect_classifier_hits_maximum() {
        let c = counts(4, 0, 6, 0);
        let e = ErrorSamples::<f64>::default();
        assert_eq!(fitness(FitnessKind::Equal, &c, &e).unwrap(), 2.0);
        for kind in &FitnessKind::ALL[1..] {
            assert_eq!(fitness(*kind, &c, &e).unwrap(), 4.0);
        }
    }

    #[test]
    fn composed_fitness_examples() {
        // hand composition: f_equal = 0.5 + 0.5, Err_min from [0.2, 0.4, 0.6], Err_maj = 0.8
        let c = counts(5, 5, 5, 5);
        let e = ErrorSamples {
            minority: vec![0.2, 0.4, 0.6],
            majority: vec![0.8],
        };
        let expected = 1.0 + (1.0 - 0.4) + (1.0 - 0.8);
        for kind in [
            FitnessKind::ErrorsMean,
            FitnessKind::Errors,
            FitnessKind::ErrorsMedian,
        ] {
            assert_abs_diff_eq!(fitness(kind, &c, &e).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in FitnessKind::ALL {
            assert_eq!(kind.name().parse::<FitnessKind>().unwrap(), kind);
        }
        assert!("errors_mean".parse::<FitnessKind>().is_err());
    }

    fn toy() -> Dataset<f64> {
        // labels: min, min, maj, maj
        Dataset::from_rows(
            vec![
                vec![0.9, 0.1],
                vec![0.2, 0.6],
                vec![0.4, 0.4],
                vec![0.1, 0.8],
            ],
            vec![
                Class::Minority,
                Class::Minority,
                Class::Majority,
                Class::Majority,
            ],
        )
        .unwrap()
    }

    #[test]
    fn collect_outcomes_by_hand() {
        // GPout = x0 - x1 per row: 0.8, -0.4, 0.0, -0.7
        // row 1: minority, predicted majority -> fn, |−0.4| / 1.4
        // row 2: majority, output 0 -> predicted minority -> fp, 0 / 1
        let tree = ExprTree::new(Node::sub(Node::Feature(0), Node::Feature(1)));
        let (c, e) = collect_outcomes(&tree, &toy()).unwrap();
        assert_eq!(c, counts(1, 1, 1, 1));
        assert_eq!(e.minority.len(), 1);
        assert_abs_diff_eq!(e.minority[0], 0.4 / 1.4, epsilon = 1e-15);
        assert_eq!(e.majority, vec![0.0]);
    }

    #[test]
    fn constant_positive_classifier() {
        let tree = ExprTree::new(Node::Const(1.0));
        let (c, e) = collect_outcomes(&tree, &toy()).unwrap();
        assert_eq!(c, counts(2, 0, 0, 2));
        assert!(e.minority.is_empty());
        assert_eq!(e.majority, vec![0.5, 0.5]);
    }

    #[test]
    fn single_class_data_is_config_error() {
        let out = outcomes_from_outputs(&[1.0, -1.0], &[Class::Minority, Class::Minority]);
        assert!(matches!(out, Err(Error::Config(_))));
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    proptest! {
        #[test]
        fn estimators_stay_in_unit_interval(v in prop::collection::vec(unit(), 0..20)) {
            for est in [err_range::<f64>, err_mean::<f64>, err_median::<f64>] {
                let e = est(&v);
                prop_assert!((0.0..=1.0).contains(&e));
            }
        }

        #[test]
        fn estimators_agree_on_singletons(x in unit()) {
            prop_assert_eq!(err_range(&[x]), x);
            prop_assert_eq!(err_mean(&[x]), x);
            prop_assert_eq!(err_median(&[x]), x);
        }

        #[test]
        fn estimators_ignore_order(v in prop::collection::vec(unit(), 1..12), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = v.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(err_range(&v), err_range(&shuffled));
            prop_assert_eq!(err_median(&v), err_median(&shuffled));
            prop_assert!((err_mean(&v) - err_mean(&shuffled)).abs() < 1e-12);
        }

        #[test]
        fn shrinking_a_sample_never_lowers_fitness(
            min in prop::collection::vec(unit(), 1..8),
            maj in prop::collection::vec(unit(), 0..8),
            pick in any::<prop::sample::Index>(),
            factor in 0.0..=1.0f64,
        ) {
            let c = counts(3, min.len(), 4, maj.len());
            let before = ErrorSamples { minority: min.clone(), majority: maj.clone() };
            let mut smaller = min.clone();
            let i = pick.index(smaller.len());
            smaller[i] *= factor;
            let after = ErrorSamples { minority: smaller, majority: maj };
            for kind in &FitnessKind::ALL[1..] {
                let f0 = fitness(*kind, &c, &before).unwrap();
                let f1 = fitness(*kind, &c, &after).unwrap();
                prop_assert!(f1 >= f0 - 1e-12, "{kind}: {f1} < {f0}");
            }
        }
    }
}
