//! Labeled tabular data: CSV ingestion, min-max normalization and
//! per-class (stratified) train/test splitting.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::GpRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    /// Positive (fraud / bad / risk) class.
    Minority,
    Majority,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Minority => "minority",
            Class::Majority => "majority",
        }
    }
}

/// Feature matrix (stored column-major) with one binary label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    columns: Vec<Vec<T>>,
    labels: Vec<Class>,
    pub minority_label: String,
    pub majority_label: String,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from row vectors. Every row must have the same width.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<Class>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let width = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); width];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Schema(format!(
                    "row {} has {} attributes, expected {width}",
                    i + 1,
                    row.len()
                )));
            }
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(*v);
            }
        }
        Ok(Dataset {
            columns,
            labels,
            minority_label: Class::Minority.name().to_string(),
            majority_label: Class::Majority.name().to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn attribute_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn class_count(&self, class: Class) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    /// Fails unless both classes have at least one row.
    pub fn require_both_classes(&self) -> Result<()> {
        let (min, maj) = (
            self.class_count(Class::Minority),
            self.class_count(Class::Majority),
        );
        if min == 0 || maj == 0 {
            return Err(Error::Config(format!(
                "dataset must contain both classes (minority {min}, majority {maj})"
            )));
        }
        Ok(())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            minority_label: self.minority_label.clone(),
            majority_label: self.majority_label.clone(),
        }
    }

    pub fn label_name(&self, class: Class) -> &str {
        match class {
            Class::Minority => &self.minority_label,
            Class::Majority => &self.majority_label,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delimiter {
    /// Any run of spaces or tabs.
    Whitespace,
    Byte(u8),
}

impl Delimiter {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(Delimiter::Whitespace),
            "comma" | "," => Ok(Delimiter::Byte(b',')),
            "tab" | "\t" => Ok(Delimiter::Byte(b'\t')),
            "semicolon" | ";" => Ok(Delimiter::Byte(b';')),
            s if s.len() == 1 => Ok(Delimiter::Byte(s.as_bytes()[0])),
            _ => Err(Error::Config(format!("unknown delimiter {s:?}"))),
        }
    }
}

/// Layout of a delimited text file.
#[derive(Clone, Copy, Debug)]
pub struct CsvFormat {
    pub delimiter: Delimiter,
    pub header: bool,
}

impl Default for CsvFormat {
    fn default() -> Self {
        CsvFormat {
            delimiter: Delimiter::Byte(b','),
            header: false,
        }
    }
}

/// Reads the raw cells of a delimited file. Returns `(line number, cells)` per record.
fn read_records(path: &Path, format: CsvFormat) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    match format.delimiter {
        Delimiter::Whitespace => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                records.push((i + 1, line.split_whitespace().map(str::to_string).collect()));
            }
        }
        Delimiter::Byte(d) => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .delimiter(d)
                .trim(csv::Trim::All)
                .flexible(true)
                .from_reader(text.as_bytes());
            for rec in reader.records() {
                let rec = rec.map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
                let line = rec.position().map_or(0, |p| p.line() as usize);
                if rec.iter().all(str::is_empty) {
                    continue;
                }
                records.push((line, rec.iter().map(str::to_string).collect()));
            }
        }
    }
    if format.header && !records.is_empty() {
        records.remove(0);
    }
    Ok(records)
}

/// Loads a labeled dataset. Rows keep file order.
///
/// The label column must hold exactly two distinct values, one of which is
/// `minority_value`. All other cells must parse as finite reals.
pub fn load_csv<T: Scalar>(
    path: &Path,
    format: CsvFormat,
    label_column: usize,
    minority_value: &str,
) -> Result<Dataset<T>> {
    let records = read_records(path, format)?;
    let width = match records.first() {
        Some((_, cells)) => cells.len(),
        None => return Err(Error::Schema(format!("{}: no data rows", path.display()))),
    };
    if label_column >= width {
        return Err(Error::Schema(format!(
            "label column {label_column} out of range for {width} columns"
        )));
    }
    let mut rows = Vec::with_capacity(records.len());
    let mut raw_labels = Vec::with_capacity(records.len());
    for (line, cells) in &records {
        if cells.len() != width {
            return Err(Error::Schema(format!(
                "row {line} has {} columns, expected {width}",
                cells.len()
            )));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, cell) in cells.iter().enumerate() {
            if j == label_column {
                continue;
            }
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(T::from_f64)
                .ok_or_else(|| Error::Parse {
                    row: *line,
                    column: j + 1,
                    value: cell.clone(),
                })?;
            row.push(v);
        }
        rows.push(row);
        raw_labels.push(cells[label_column].as_str());
    }

    let mut distinct: Vec<&str> = Vec::new();
    for l in &raw_labels {
        if !distinct.contains(l) {
            distinct.push(l);
        }
    }
    if distinct.len() != 2 {
        return Err(Error::Schema(format!(
            "label column {label_column} has {} distinct values {distinct:?}, expected 2",
            distinct.len()
        )));
    }
    if !distinct.contains(&minority_value) {
        return Err(Error::Schema(format!(
            "minority value {minority_value:?} not found in label column (values {distinct:?})"
        )));
    }
    let majority_value = distinct
        .iter()
        .find(|&&l| l != minority_value)
        .expect("two distinct labels")
        .to_string();
    let labels = raw_labels
        .iter()
        .map(|&l| {
            if l == minority_value {
                Class::Minority
            } else {
                Class::Majority
            }
        })
        .collect();
    let mut data = Dataset::from_rows(rows, labels)?;
    data.minority_label = minority_value.to_string();
    data.majority_label = majority_value;
    Ok(data)
}

/// Reads an unlabeled numeric matrix, one row per record.
pub fn load_features<T: Scalar>(path: &Path, format: CsvFormat) -> Result<Vec<Vec<T>>> {
    let records = read_records(path, format)?;
    let width = records.first().map_or(0, |(_, cells)| cells.len());
    records
        .iter()
        .map(|(line, cells)| {
            if cells.len() != width {
                return Err(Error::Schema(format!(
                    "row {line} has {} columns, expected {width}",
                    cells.len()
                )));
            }
            cells
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .and_then(T::from_f64)
                        .ok_or_else(|| Error::Parse {
                            row: *line,
                            column: j + 1,
                            value: cell.clone(),
                        })
                })
                .collect()
        })
        .collect()
}

/// Per-attribute `(min, max)` from the data the statistics were fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats<T> {
    pub ranges: Vec<(T, T)>,
}

impl<T: Scalar> NormStats<T> {
    pub fn fit(d: &Dataset<T>) -> Self {
        let ranges = d
            .columns
            .iter()
            .map(|c| {
                c.iter()
                    .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .collect();
        NormStats { ranges }
    }

    /// Maps `v` to `(v - min) / (max - min)`; constant attributes map to 0.
    pub fn apply(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        if d.attribute_count() != self.ranges.len() {
            return Err(Error::Schema(format!(
                "normalization fitted on {} attributes, data has {}",
                self.ranges.len(),
                d.attribute_count()
            )));
        }
        let columns = d
            .columns
            .iter()
            .zip(&self.ranges)
            .map(|(c, &(lo, hi))| {
                if hi > lo {
                    let span = hi - lo;
                    c.iter().map(|&v| (v - lo) / span).collect()
                } else {
                    vec![T::zero(); c.len()]
                }
            })
            .collect();
        Ok(Dataset {
            columns,
            labels: d.labels.clone(),
            minority_label: d.minority_label.clone(),
            majority_label: d.majority_label.clone(),
        })
    }
}

/// Min-max normalizes every attribute into `[0, 1]` using statistics of `d` itself.
pub fn normalize<T: Scalar>(d: &Dataset<T>) -> (Dataset<T>, NormStats<T>) {
    let stats = NormStats::fit(d);
    let out = stats.apply(d).expect("stats fitted on the same dataset");
    (out, stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassFractions {
    pub train_fraction: f64,
    pub test_fraction: f64,
}

impl ClassFractions {
    pub fn new(train_fraction: f64, test_fraction: f64) -> Self {
        ClassFractions {
            train_fraction,
            test_fraction,
        }
    }

    fn validate(&self, class: Class) -> Result<()> {
        let ok = |f: f64| (0.0..=1.0).contains(&f);
        if !ok(self.train_fraction) || !ok(self.test_fraction) {
            return Err(Error::Config(format!(
                "{} fractions must lie in [0, 1]",
                class.name()
            )));
        }
        if self.train_fraction + self.test_fraction > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "{} train_fraction + test_fraction exceeds 1",
                class.name()
            )));
        }
        Ok(())
    }
}

/// Per-class train/test fractions plus the shuffle seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub minority: ClassFractions,
    pub majority: ClassFractions,
    pub seed: u64,
}

impl SplitSpec {
    fn fractions(&self, class: Class) -> ClassFractions {
        match class {
            Class::Minority => self.minority,
            Class::Majority => self.majority,
        }
    }
}

/// `floor(n * fraction)`, tolerant of representation error just below an integer.
fn take_count(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction + 1e-9).floor() as usize
}

/// Row indices of a stratified split, each list ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class (minority first), shuffles that class's row indices with the
/// seeded generator, assigns the first `floor(n_c * train_fraction)` rows to
/// train and the next `floor(n_c * test_fraction)` to test, and discards the rest.
pub fn split_indices<T: Scalar>(d: &Dataset<T>, spec: &SplitSpec) -> Result<SplitIndices> {
    let mut rng = GpRng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Class::Minority, Class::Majority] {
        let fr = spec.fractions(class);
        fr.validate(class)?;
        let mut idx: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_train = take_count(idx.len(), fr.train_fraction);
        let n_test = take_count(idx.len(), fr.test_fraction);
        if n_train == 0 || n_test == 0 {
            return Err(Error::Config(format!(
                "{} class ({} rows) yields {n_train} train and {n_test} test rows; both must be at least 1",
                class.name(),
                idx.len()
            )));
        }
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..n_train + n_test]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn stratified_split<T: Scalar>(
    d: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let idx = split_indices(d, spec)?;
    Ok((d.subset(&idx.train), d.subset(&idx.test)))
}

/// Dataset profile file (TOML).
///
/// ```toml
/// name = "german"
/// path = "german.data-numeric"
/// delimiter = "whitespace"
/// header = false
/// label_column = 24
/// minority_value = "2"
///
/// [minority]
/// train_fraction = 0.5
/// test_fraction = 0.5
///
/// [majority]
/// train_fraction = 0.5
/// test_fraction = 0.5
/// ```
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub name: Option<String>,
    pub path: PathBuf,
    #[serde(default)]
    pub delimiter: Option<String>,
    #[serde(default)]
    pub header: bool,
    pub label_column: usize,
    pub minority_value: String,
    pub minority: ClassFractions,
    pub majority: ClassFractions,
}

impl Profile {
    /// Parses a profile; a relative `path` is resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut p: Profile =
            toml::from_str(text).map_err(|e| Error::Config(format!("dataset profile: {e}")))?;
        if p.path.is_relative() {
            p.path = base_dir.join(&p.path);
        }
        p.minority.validate(Class::Minority)?;
        p.majority.validate(Class::Majority)?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Identifier used in reports; falls back to the data file stem.
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path.file_stem().map_or_else(
                || "dataset".to_string(),
                |s| s.to_string_lossy().into_owned(),
            )
        })
    }

    pub fn format(&self) -> Result<CsvFormat> {
        Ok(CsvFormat {
            delimiter: match &self.delimiter {
                Some(d) => Delimiter::parse(d)?,
                None => Delimiter::Byte(b','),
            },
            header: self.header,
        })
    }

    /// Raw, unnormalized data.
    pub fn load_dataset<T: Scalar>(&self) -> Result<Dataset<T>> {
        load_csv(
            &self.path,
            self.format()?,
            self.label_column,
            &self.minority_value,
        )
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            minority: self.minority,
            majority: self.majority,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use proptest::prelude::*;

    use super::*;

    fn write_temp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn labeled(n_min: usize, n_maj: usize) -> Dataset<f64> {
        let n = n_min + n_maj;
        let rows = (0..n).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let labels = (0..n)
            .map(|i| {
                if i < n_min {
                    Class::Minority
                } else {
                    Class::Majority
                }
            })
            .collect();
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn load_two_row_csv() {
        let f = write_temp("a,b,label\n0.5,-2,yes\n3,4.25,no\n");
        let fmt = CsvFormat {
            delimiter: Delimiter::Byte(b','),
            header: true,
        };
        let d: Dataset<f64> = load_csv(f.path(), fmt, 2, "yes").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(0), vec![0.5, -2.0]);
        assert_eq!(d.row(1), vec![3.0, 4.25]);
        assert_eq!(d.labels(), &[Class::Minority, Class::Majority]);
        assert_eq!(d.majority_label, "no");
    }

    #[test]
    fn label_column_may_be_first() {
        let f = write_temp("1 0.1 0.2\n0   0.3 0.4\n");
        let fmt = CsvFormat {
            delimiter: Delimiter::Whitespace,
            header: false,
        };
        let d: Dataset<f64> = load_csv(f.path(), fmt, 0, "1").unwrap();
        assert_eq!(d.row(1), vec![0.3, 0.4]);
        assert_eq!(d.class_count(Class::Minority), 1);
    }

    #[test]
    fn unparseable_cell_reports_position() {
        let f = write_temp("1,2,a\n3,oops,b\n");
        let err = load_csv::<f64>(f.path(), CsvFormat::default(), 2, "a").unwrap_err();
        match err {
            Error::Parse { row, column, value } => {
                assert_eq!((row, column, value.as_str()), (2, 2, "oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn label_schema_errors() {
        let three = write_temp("1,a\n2,b\n3,c\n");
        assert!(matches!(
            load_csv::<f64>(three.path(), CsvFormat::default(), 1, "a"),
            Err(Error::Schema(_))
        ));
        let one = write_temp("1,a\n2,a\n");
        assert!(matches!(
            load_csv::<f64>(one.path(), CsvFormat::default(), 1, "a"),
            Err(Error::Schema(_))
        ));
        let two = write_temp("1,a\n2,b\n");
        assert!(matches!(
            load_csv::<f64>(two.path(), CsvFormat::default(), 1, "z"),
            Err(Error::Schema(_))
        ));
        let ragged = write_temp("1,2,a\n2,b\n");
        assert!(matches!(
            load_csv::<f64>(ragged.path(), CsvFormat::default(), 2, "a"),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn missing_file_is_io_error_with_path() {
        let err = load_csv::<f64>(
            Path::new("/nonexistent/x.csv"),
            CsvFormat::default(),
            0,
            "a",
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.csv"));
    }

    #[test]
    fn normalize_examples() {
        let d = Dataset::from_rows(
            vec![
                vec![2.0, 5.0, 0.0],
                vec![4.0, 5.0, 1.0],
                vec![6.0, 5.0, 0.25],
            ],
            vec![Class::Minority, Class::Majority, Class::Majority],
        )
        .unwrap();
        let (n, stats) = normalize(&d);
        assert_eq!(n.columns()[0], vec![0.0, 0.5, 1.0]);
        assert_eq!(n.columns()[1], vec![0.0, 0.0, 0.0]);
        assert_eq!(n.columns()[2], vec![0.0, 1.0, 0.25]);
        assert_eq!(stats.ranges[1], (5.0, 5.0));
    }

    #[test]
    fn split_floor_counts() {
        let d = labeled(307, 383);
        let spec = SplitSpec {
            minority: ClassFractions::new(0.3, 0.3),
            majority: ClassFractions::new(0.5, 0.5),
            seed: 3,
        };
        let (train, test) = stratified_split(&d, &spec).unwrap();
        for part in [&train, &test] {
            assert_eq!(part.class_count(Class::Minority), 92);
            assert_eq!(part.class_count(Class::Majority), 191);
        }
    }

    #[test]
    fn split_without_test_rows_is_rejected() {
        let d = labeled(10, 10);
        let spec = SplitSpec {
            minority: ClassFractions::new(1.0, 0.0),
            majority: ClassFractions::new(1.0, 0.0),
            seed: 0,
        };
        assert!(matches!(stratified_split(&d, &spec), Err(Error::Config(_))));
        let bad = SplitSpec {
            minority: ClassFractions::new(0.7, 0.7),
            ..spec
        };
        assert!(matches!(stratified_split(&d, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn profile_parsing_resolves_relative_path() {
        let text = r#"
            path = "data.csv"
            label_column = 3
            minority_value = "bad"
            [minority]
            train_fraction = 0.3
            test_fraction = 0.3
            [majority]
            train_fraction = 0.5
            test_fraction = 0.5
        "#;
        let p = Profile::from_toml(text, Path::new("/srv/profiles")).unwrap();
        assert_eq!(p.path, PathBuf::from("/srv/profiles/data.csv"));
        assert_eq!(p.display_name(), "data");
        assert_eq!(p.format().unwrap().delimiter, Delimiter::Byte(b','));
        assert_eq!(p.split_spec(9).minority, ClassFractions::new(0.3, 0.3));

        let typo = text.replace("label_column", "label_col");
        assert!(matches!(
            Profile::from_toml(&typo, Path::new(".")),
            Err(Error::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn split_is_disjoint_exact_and_deterministic(
            n_min in 4usize..60, n_maj in 4usize..90,
            tr in 0.5f64..0.6, te in 0.3f64..0.4, seed in any::<u64>(),
        ) {
            let d = labeled(n_min, n_maj);
            let spec = SplitSpec {
                minority: ClassFractions::new(tr, te),
                majority: ClassFractions::new(te, tr),
                seed,
            };
            let a = split_indices(&d, &spec).unwrap();
            prop_assert_eq!(&a, &split_indices(&d, &spec).unwrap());
            prop_assert!(a.train.iter().all(|i| !a.test.contains(i)));
            let count = |idx: &[usize], c: Class| idx.iter().filter(|&&i| d.labels()[i] == c).count();
            prop_assert_eq!(count(&a.train, Class::Minority), take_count(n_min, tr));
            prop_assert_eq!(count(&a.test, Class::Minority), take_count(n_min, te));
            prop_assert_eq!(count(&a.train, Class::Majority), take_count(n_maj, te));
            prop_assert_eq!(count(&a.test, Class::Majority), take_count(n_maj, tr));
        }

        #[test]
        fn normalization_range_and_idempotence(
            rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..30)
        ) {
            let labels = (0..rows.len()).map(|i| if i % 2 == 0 { Class::Minority } else { Class::Majority }).collect();
            let d = Dataset::from_rows(rows, labels).unwrap();
            let (once, _) = normalize(&d);
            for col in once.columns() {
                prop_assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            let (twice, _) = normalize(&once);
            for (a, b) in once.columns().iter().flatten().zip(twice.columns().iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
