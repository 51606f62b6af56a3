//! Labeled datasets and delimited-text I/O.
//!
//! Labels are stored as 0-based class indices. When a dataset is read from a
//! file the original label strings are kept as `class_names`, encoded in
//! order of first appearance.

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MssaError, Result};

/// `n` feature vectors in `d` dimensions with class labels in `0..m_classes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: Vec<usize>,
    m_classes: usize,
    class_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Builds a dataset from row vectors, checking every invariant.
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        m_classes: usize,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(MssaError::domain(format!(
                "row {i} has {} features, expected {d}",
                r.len()
            )));
        }
        let n = rows.len();
        Self::from_flat(
            rows.into_iter().flatten().collect(),
            n,
            d,
            labels,
            m_classes,
            class_names,
        )
    }

    /// Builds a dataset from a row-major `n × d` buffer.
    pub fn from_flat(
        features: Vec<f64>,
        n: usize,
        d: usize,
        labels: Vec<usize>,
        m_classes: usize,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(MssaError::domain("dataset must contain at least one point"));
        }
        if d == 0 {
            return Err(MssaError::domain("feature dimension must be at least 1"));
        }
        if m_classes < 2 {
            return Err(MssaError::domain(format!(
                "need at least 2 classes, got {m_classes}"
            )));
        }
        if features.len() != n * d {
            return Err(MssaError::domain(format!(
                "feature buffer has {} values, expected {n}×{d}",
                features.len()
            )));
        }
        if labels.len() != n {
            return Err(MssaError::domain(format!(
                "{} labels for {n} points",
                labels.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(MssaError::domain(format!(
                "non-finite feature at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= m_classes) {
            return Err(MssaError::domain(format!(
                "label {bad} out of range for {m_classes} classes"
            )));
        }
        if let Some(names) = &class_names {
            if names.len() != m_classes {
                return Err(MssaError::domain(format!(
                    "{} class names for {m_classes} classes",
                    names.len()
                )));
            }
            let mut seen = HashMap::new();
            for (i, name) in names.iter().enumerate() {
                if let Some(j) = seen.insert(name.as_str(), i) {
                    return Err(MssaError::domain(format!(
                        "class name {name:?} repeated at positions {j} and {i}"
                    )));
                }
            }
        }
        Ok(Self {
            features,
            n,
            d,
            labels,
            m_classes,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn m_classes(&self) -> usize {
        self.m_classes
    }

    /// Row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.d)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Display name of class `m`: its original label string, or the index.
    pub fn class_name(&self, m: usize) -> String {
        match &self.class_names {
            Some(names) => names[m].clone(),
            None => m.to_string(),
        }
    }

    /// Same points with labels replaced; used for surrogate-label experiments.
    pub fn with_labels(&self, labels: Vec<usize>, m_classes: usize) -> Result<Self> {
        Self::from_flat(
            self.features.clone(),
            self.n,
            self.d,
            labels,
            m_classes,
            None,
        )
    }

    /// Dataset restricted to the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(MssaError::domain(format!("row {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::from_flat(
            features,
            indices.len(),
            self.d,
            labels,
            self.m_classes,
            self.class_names.clone(),
        )
    }
}

/// Where the label lives in a delimited file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    /// Header name; requires a header row.
    Name(String),
    /// 0-based column index.
    Index(usize),
    /// The last column of each row.
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub label_column: LabelColumn,
    pub has_header: bool,
    delimiter: u8,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            label_column: LabelColumn::Last,
            has_header: true,
            delimiter: b',',
        }
    }
}

impl DatasetSchema {
    pub fn new(label_column: LabelColumn, has_header: bool, delimiter: char) -> Result<Self> {
        if !delimiter.is_ascii() || delimiter.is_ascii_control() && delimiter != '\t' {
            return Err(MssaError::domain(format!(
                "delimiter {delimiter:?} must be a single printable ASCII character"
            )));
        }
        if delimiter == '"'
            || delimiter.is_ascii_alphanumeric()
            || delimiter == '.'
            || delimiter == '-'
        {
            return Err(MssaError::domain(format!(
                "delimiter {delimiter:?} would be ambiguous inside numbers or quotes"
            )));
        }
        Ok(Self {
            label_column,
            has_header,
            delimiter: delimiter as u8,
        })
    }

    pub fn delimiter(&self) -> char {
        self.delimiter as char
    }

    fn resolve_label_index(
        &self,
        header: Option<&csv::StringRecord>,
        width: usize,
    ) -> Result<usize> {
        let idx = match &self.label_column {
            LabelColumn::Last => width
                .checked_sub(1)
                .ok_or_else(|| MssaError::domain("rows have no columns"))?,
            LabelColumn::Index(i) => *i,
            LabelColumn::Name(name) => {
                let header = header.ok_or_else(|| {
                    MssaError::domain(format!(
                        "label column {name:?} selected by name but the file has no header"
                    ))
                })?;
                header.iter().position(|h| h == name).ok_or_else(|| {
                    MssaError::domain(format!("label column {name:?} not found in header"))
                })?
            }
        };
        if idx >= width {
            return Err(MssaError::domain(format!(
                "label column {idx} out of range for {width} columns"
            )));
        }
        Ok(idx)
    }

    fn reader(&self, path: &Path) -> Result<csv::Reader<File>> {
        let file = File::open(path).map_err(|source| MssaError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(csv::ReaderBuilder::new()
            .delimiter(self.delimiter)
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file))
    }
}

/// Raw table: optional header plus records, each tagged with its 1-based row
/// number in the file.
struct RawTable {
    header: Option<csv::StringRecord>,
    records: Vec<(usize, csv::StringRecord)>,
    width: usize,
}

fn read_table(path: &Path, schema: &DatasetSchema) -> Result<RawTable> {
    let mut reader = schema.reader(path)?;
    let mut header = None;
    let mut records = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|source| MssaError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(MssaError::Parse {
                    row,
                    message: format!("expected {w} fields, found {}", rec.len()),
                })
            }
            _ => {}
        }
        if schema.has_header && header.is_none() {
            header = Some(rec);
        } else {
            records.push((row, rec));
        }
    }
    Ok(RawTable {
        header,
        records,
        width: width.unwrap_or(0),
    })
}

fn parse_cell(row: usize, column: usize, value: &str) -> Result<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(MssaError::BadCell {
            row,
            column,
            value: value.to_string(),
        }),
    }
}

/// Reads a labeled dataset. Labels are re-encoded to `0..M` in first-appearance
/// order and the original strings become the class names.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<LabeledDataset> {
    ingest_inner(path.as_ref(), schema, None)
}

/// Reads a labeled dataset whose labels must come from an existing label
/// space, e.g. a test set encoded consistently with its training set.
pub fn ingest_csv_with_classes(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    class_names: &[String],
) -> Result<LabeledDataset> {
    ingest_inner(path.as_ref(), schema, Some(class_names))
}

fn ingest_inner(
    path: &Path,
    schema: &DatasetSchema,
    known: Option<&[String]>,
) -> Result<LabeledDataset> {
    let table = read_table(path, schema)?;
    if table.records.is_empty() {
        return Err(MssaError::domain(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let label_idx = schema.resolve_label_index(table.header.as_ref(), table.width)?;
    let d = table.width - 1;
    if d == 0 {
        return Err(MssaError::domain("no feature columns besides the label"));
    }

    let mut codes: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    if let Some(known) = known {
        for (i, name) in known.iter().enumerate() {
            codes.insert(name.clone(), i);
        }
        names = known.to_vec();
    }

    let mut features = Vec::with_capacity(table.records.len() * d);
    let mut labels = Vec::with_capacity(table.records.len());
    for (row, rec) in &table.records {
        for (col, cell) in rec.iter().enumerate() {
            if col != label_idx {
                features.push(parse_cell(*row, col, cell)?);
            }
        }
        let raw = &rec[label_idx];
        let code = match codes.get(raw) {
            Some(&c) => c,
            None if known.is_some() => {
                return Err(MssaError::domain(format!(
                    "row {row}: label {raw:?} is not in the training label space"
                )))
            }
            None => {
                let c = names.len();
                codes.insert(raw.to_string(), c);
                names.push(raw.to_string());
                c
            }
        };
        labels.push(code);
    }
    if names.len() < 2 {
        return Err(MssaError::domain(format!(
            "{}: need at least 2 distinct labels, found {}",
            path.display(),
            names.len()
        )));
    }
    let n = labels.len();
    let m = names.len();
    LabeledDataset::from_flat(features, n, d, labels, m, Some(names))
}

/// Reads an unlabeled feature table (every column numeric). Returns the
/// row-major buffer and the dimension.
pub fn ingest_features_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    delimiter: char,
) -> Result<(Vec<f64>, usize)> {
    let path = path.as_ref();
    let schema = DatasetSchema::new(LabelColumn::Last, has_header, delimiter)?;
    let table = read_table(path, &schema)?;
    if table.records.is_empty() {
        return Err(MssaError::domain(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let mut features = Vec::with_capacity(table.records.len() * table.width);
    for (row, rec) in &table.records {
        for (col, cell) in rec.iter().enumerate() {
            features.push(parse_cell(*row, col, cell)?);
        }
    }
    Ok((features, table.width))
}

/// Writes the dataset so that [`ingest_csv`] with the same schema reads it back.
///
/// Features are rendered with the shortest decimal that parses back to the
/// identical `f64`. The label column holds class names when present; names
/// are read back with surrounding whitespace trimmed.
pub fn emit_csv(
    dataset: &LabeledDataset,
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
) -> Result<()> {
    let path = path.as_ref();
    if dataset.is_empty() {
        return Err(MssaError::domain("refusing to write an empty dataset"));
    }
    let d = dataset.dim();
    let (label_pos, label_header) = match &schema.label_column {
        LabelColumn::Last => (d, "label".to_string()),
        LabelColumn::Name(name) => (d, name.clone()),
        LabelColumn::Index(i) if *i <= d => (*i, "label".to_string()),
        LabelColumn::Index(i) => {
            return Err(MssaError::domain(format!(
                "label column {i} out of range for {} columns",
                d + 1
            )))
        }
    };
    if matches!(schema.label_column, LabelColumn::Name(_)) && !schema.has_header {
        return Err(MssaError::domain("a named label column requires a header"));
    }

    let csv_err = |source| MssaError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|source| MssaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(file);

    let assemble = |mut cols: Vec<String>, label: String| {
        cols.insert(label_pos, label);
        cols
    };
    if schema.has_header {
        let cols = (0..d).map(|j| format!("x{j}")).collect();
        writer
            .write_record(assemble(cols, label_header))
            .map_err(csv_err)?;
    }
    for (row, &label) in dataset.rows().zip(dataset.labels()) {
        let cols = row.iter().map(|v| format!("{v:?}")).collect();
        writer
            .write_record(assemble(cols, dataset.class_name(label)))
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|source| MssaError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    fn named(name: &str) -> DatasetSchema {
        DatasetSchema::new(LabelColumn::Name(name.into()), true, ',').unwrap()
    }

    #[test]
    fn ingest_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,label\n0,0,a\n1,0,a\n0,1,b\n1,1,b\n");
        let ds = ingest_csv(&p, &named("label")).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.m_classes(), 2);
        assert_eq!(ds.labels(), &[0, 0, 1, 1]);
        assert_eq!(ds.row(2), &[0.0, 1.0]);
        assert_eq!(
            ds.class_names().unwrap(),
            &["a".to_string(), "b".to_string()]
        );
    }

    #[test]
    fn first_appearance_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "z,1\nb,2\nz,3\n");
        let schema = DatasetSchema::new(LabelColumn::Index(0), false, ',').unwrap();
        let ds = ingest_csv(&p, &schema).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_name(0), "z");
    }

    #[test]
    fn arity_mismatch_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "1,2\n1,2,3\n");
        let schema = DatasetSchema::new(LabelColumn::Last, false, ',').unwrap();
        match ingest_csv(&p, &schema) {
            Err(MssaError::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,l\n1,2,a\n3,oops,b\n");
        match ingest_csv(&p, &named("l")) {
            Err(MssaError::BadCell { row, column, value }) => {
                assert_eq!((row, column, value.as_str()), (3, 1, "oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_nan_and_inf() {
        let dir = tempfile::tempdir().unwrap();
        for bad in ["NaN", "inf", "-inf"] {
            let p = write(&dir, "a.csv", &format!("x,l\n1,a\n{bad},b\n"));
            assert!(matches!(
                ingest_csv(&p, &named("l")),
                Err(MssaError::BadCell { .. })
            ));
        }
    }

    #[test]
    fn single_label_is_domain_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,l\n1,a\n2,a\n");
        assert!(matches!(
            ingest_csv(&p, &named("l")),
            Err(MssaError::Domain(_))
        ));
    }

    #[test]
    fn missing_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,l\n1,a\n2,b\n");
        assert!(ingest_csv(&p, &named("species")).is_err());
        let no_header = DatasetSchema::new(LabelColumn::Name("l".into()), false, ',').unwrap();
        assert!(ingest_csv(&p, &no_header).is_err());
        let idx = DatasetSchema::new(LabelColumn::Index(5), true, ',').unwrap();
        assert!(ingest_csv(&p, &idx).is_err());
    }

    #[test]
    fn missing_file_carries_path() {
        let err = ingest_csv("/nonexistent/x.csv", &DatasetSchema::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.csv"));
    }

    #[test]
    fn semicolon_delimiter_and_label_in_front() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "a;0.5;1\nb;1.5;2\n");
        let schema = DatasetSchema::new(LabelColumn::Index(0), false, ';').unwrap();
        let ds = ingest_csv(&p, &schema).unwrap();
        assert_eq!(ds.features(), &[0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn rejects_bad_delimiters() {
        for c in ['\n', '"', '7', 'é'] {
            assert!(
                DatasetSchema::new(LabelColumn::Last, true, c).is_err(),
                "{c:?}"
            );
        }
        assert!(DatasetSchema::new(LabelColumn::Last, true, '\t').is_ok());
    }

    #[test]
    fn emit_round_trip_with_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,label\n0,0,a\n1,0,a\n0,1,b\n1,1,b\n");
        let schema = named("label");
        let ds = ingest_csv(&p, &schema).unwrap();
        let out = dir.path().join("b.csv");
        emit_csv(&ds, &out, &schema).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",a"));
        let back = ingest_csv(&out, &schema).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn emit_without_names_writes_indices() {
        let dir = tempfile::tempdir().unwrap();
        let ds = LabeledDataset::new(vec![vec![0.1], vec![0.2]], vec![0, 1], 2, None).unwrap();
        let out = dir.path().join("b.csv");
        emit_csv(&ds, &out, &DatasetSchema::default()).unwrap();
        assert_eq!(
            std::fs::read_to_string(&out).unwrap(),
            "x0,label\n0.1,0\n0.2,1\n"
        );
    }

    #[test]
    fn emit_into_missing_dir_reports_path() {
        let ds = LabeledDataset::new(vec![vec![0.1], vec![0.2]], vec![0, 1], 2, None).unwrap();
        let err = emit_csv(&ds, "/nonexistent/dir/out.csv", &DatasetSchema::default()).unwrap_err();
        assert!(matches!(err, MssaError::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }

    #[test]
    fn dataset_invariants() {
        assert!(LabeledDataset::new(vec![], vec![], 2, None).is_err());
        assert!(LabeledDataset::new(vec![vec![]], vec![0], 2, None).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![0], 1, None).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![2], 2, None).is_err());
        assert!(LabeledDataset::new(vec![vec![f64::NAN]], vec![0], 2, None).is_err());
        assert!(LabeledDataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1], 2, None).is_err());
        let dup = Some(vec!["a".to_string(), "a".to_string()]);
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![0], 2, dup).is_err());
        let short = Some(vec!["a".to_string()]);
        assert!(LabeledDataset::new(vec![vec![1.0]], vec![0], 2, short).is_err());
    }

    #[test]
    fn test_set_shares_training_label_space() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "x,l\n1,b\n2,b\n");
        let classes = vec!["a".to_string(), "b".to_string()];
        let ds = ingest_csv_with_classes(&p, &named("l"), &classes).unwrap();
        assert_eq!(ds.labels(), &[1, 1]);
        assert_eq!(ds.m_classes(), 2);
        let p = write(&dir, "u.csv", "x,l\n1,c\n");
        assert!(matches!(
            ingest_csv_with_classes(&p, &named("l"), &classes),
            Err(MssaError::Domain(_))
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn emit_then_ingest_is_identity_up_to_relabeling(
            rows in proptest::collection::vec(
                (proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 3), 0usize..4),
                2..40,
            ),
            names in proptest::collection::hash_set("[a-zA-Z0-9_,;\"-]([a-zA-Z0-9 _,;\"-]{0,6}[a-zA-Z0-9_,;\"-])?", 4),
        ) {
            let names: Vec<String> = names.into_iter().collect();
            let mut labels: Vec<usize> = rows.iter().map(|r| r.1).collect();
            labels[0] = 0;
            labels[1] = 1;
            let ds = LabeledDataset::new(rows.iter().map(|r| r.0.clone()).collect(), labels, 4, Some(names)).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path().join("ds.csv");
            emit_csv(&ds, &out, &DatasetSchema::default()).unwrap();
            let back = ingest_csv(&out, &DatasetSchema::default()).unwrap();
            proptest::prop_assert_eq!(back.features(), ds.features());
            for i in 0..ds.len() {
                proptest::prop_assert_eq!(back.class_name(back.labels()[i]), ds.class_name(ds.labels()[i]));
            }
            // Codes and names correspond one to one.
            let seen: std::collections::HashSet<usize> = back.labels().iter().copied().collect();
            proptest::prop_assert_eq!(seen.len(), back.m_classes());
            let distinct: std::collections::HashSet<&String> = back.class_names().unwrap().iter().collect();
            proptest::prop_assert_eq!(distinct.len(), back.m_classes());
        }
    }
}
