use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{0}` appears twice")]
    DuplicateColumn(String),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("column `{name}` has {got} rows, expected {expected}")]
    RaggedColumn {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("config line {line}: {msg}")]
    BadConfig { line: usize, msg: String },
    #[error("column `{column}`: level `{level}` was not seen when fitting")]
    UnknownLevel { column: String, level: String },
    #[error("column `{0}` must be categorical")]
    NotCategorical(String),
    #[error("dataset is empty")]
    Empty,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnKind {
    Continuous,
    /// Values are codes `0..levels.len()`.
    Categorical { levels: Vec<String> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub values: Vec<f64>,
}

impl Column {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Continuous,
            values,
        }
    }

    /// Categorical column with levels named `0..card`.
    pub fn categorical(name: impl Into<String>, card: usize, codes: Vec<usize>) -> Self {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical {
                levels: (0..card).map(|i| i.to_string()).collect(),
            },
            values: codes.into_iter().map(|c| c as f64).collect(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ColumnKind::Categorical { .. })
    }

    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            ColumnKind::Categorical { levels } => Some(levels.len()),
            ColumnKind::Continuous => None,
        }
    }

    pub fn code(&self, row: usize) -> usize {
        self.values[row] as usize
    }
}

/// Sidecar settings for reading a CSV file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetConfig {
    pub categorical: Vec<String>,
    pub environment: Option<String>,
}

impl DatasetConfig {
    /// Parses `key=value` lines: `categorical=A,B` and `environment=env`.
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut cfg = DatasetConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(DataError::BadConfig {
                    line: i + 1,
                    msg: format!("expected key=value, found `{line}`"),
                });
            };
            let list = || -> Vec<String> {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            };
            match k.trim() {
                "categorical" => cfg.categorical.extend(list()),
                "environment" => cfg.environment = Some(v.trim().to_string()),
                other => {
                    return Err(DataError::BadConfig {
                        line: i + 1,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Column-oriented table of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    environment: Option<String>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        let mut seen = BTreeSet::new();
        let expected = columns.first().map_or(0, |c| c.values.len());
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            if c.values.len() != expected {
                return Err(DataError::RaggedColumn {
                    name: c.name.clone(),
                    got: c.values.len(),
                    expected,
                });
            }
        }
        Ok(Dataset {
            columns,
            environment: None,
        })
    }

    /// Marks a column as the environment label.
    pub fn with_environment(mut self, name: &str) -> Result<Self, DataError> {
        self.column(name)?;
        self.environment = Some(name.to_string());
        Ok(self)
    }

    pub fn environment(&self) -> Option<&str> {
        self.environment.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Result<&Column, DataError> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Result<&[f64], DataError> {
        Ok(&self.column(name)?.values)
    }

    /// Rows at the given indices, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    kind: c.kind.clone(),
                    values: rows.iter().map(|&r| c.values[r]).collect(),
                })
                .collect(),
            environment: self.environment.clone(),
        }
    }

    /// The named columns, in that order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset, DataError> {
        let columns = names
            .iter()
            .map(|n| self.column(n.as_ref()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let environment = self
            .environment
            .clone()
            .filter(|e| names.iter().any(|n| n.as_ref() == e));
        Ok(Dataset { columns, environment })
    }

    /// Splits into the first `k` rows and the rest.
    pub fn split_at(&self, k: usize) -> (Dataset, Dataset) {
        let k = k.min(self.n_rows());
        let a: Vec<usize> = (0..k).collect();
        let b: Vec<usize> = (k..self.n_rows()).collect();
        (self.select_rows(&a), self.select_rows(&b))
    }

    /// Rows whose environment column equals `value`.
    pub fn environment_rows(&self, value: f64) -> Result<Dataset, DataError> {
        let env = self
            .environment
            .as_deref()
            .ok_or_else(|| DataError::MissingColumn("<environment>".into()))?;
        let col = self.column(env)?;
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&r| col.values[r] == value).collect();
        Ok(self.select_rows(&rows))
    }

    /// Stacks datasets with identical schemas.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset, DataError> {
        let first = parts.first().ok_or(DataError::Empty)?;
        let mut out = first.clone();
        for p in &parts[1..] {
            for c in &mut out.columns {
                let other = p.column(&c.name)?;
                c.values.extend_from_slice(&other.values);
            }
        }
        Ok(out)
    }

    /// Reads a CSV file with a header row.
    pub fn read_csv(path: &Path, cfg: &DatasetConfig) -> Result<Dataset, DataError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, cfg)
    }

    pub fn from_reader<R: std::io::Read>(reader: R, cfg: &DatasetConfig) -> Result<Dataset, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
        for c in cfg.categorical.iter().chain(cfg.environment.iter()) {
            if !headers.contains(c) {
                return Err(DataError::MissingColumn(c.clone()));
            }
        }
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (i, field) in rec.iter().enumerate() {
                raw[i].push(field.to_string());
            }
        }
        let mut columns = Vec::with_capacity(headers.len());
        for (name, cells) in headers.iter().zip(raw) {
            let categorical =
                cfg.categorical.contains(name) || cfg.environment.as_deref() == Some(name.as_str());
            columns.push(if categorical {
                categorical_from_strings(name, &cells)
            } else {
                let mut values = Vec::with_capacity(cells.len());
                for (row, s) in cells.iter().enumerate() {
                    values.push(s.parse::<f64>().map_err(|_| DataError::BadNumber {
                        row: row + 1,
                        column: name.clone(),
                        value: s.clone(),
                    })?);
                }
                Column::continuous(name.clone(), values)
            });
        }
        let ds = Dataset::new(columns)?;
        match &cfg.environment {
            Some(e) => ds.with_environment(e),
            None => Ok(ds),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), DataError> {
        let file = std::fs::File::create(path)?;
        self.to_writer(file)
    }

    pub fn to_writer<W: std::io::Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.names())?;
        for r in 0..self.n_rows() {
            let rec: Vec<String> = self
                .columns
                .iter()
                .map(|c| match &c.kind {
                    ColumnKind::Categorical { levels } => levels[c.code(r)].clone(),
                    ColumnKind::Continuous => format_number(c.values[r]),
                })
                .collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// The sidecar describing this dataset's categorical and environment columns.
    pub fn config(&self) -> DatasetConfig {
        DatasetConfig {
            categorical: self
                .columns
                .iter()
                .filter(|c| c.is_categorical() && Some(c.name.as_str()) != self.environment())
                .map(|c| c.name.clone())
                .collect(),
            environment: self.environment.clone(),
        }
    }

    /// Recodes the named categorical columns onto fixed level lists.
    pub fn recode_to(&self, levels: &BTreeMap<String, Vec<String>>) -> Result<Dataset, DataError> {
        let mut out = self.clone();
        for c in &mut out.columns {
            let Some(target) = levels.get(&c.name) else { continue };
            let ColumnKind::Categorical { levels: old } = &c.kind else {
                return Err(DataError::NotCategorical(c.name.clone()));
            };
            let remap = old
                .iter()
                .map(|l| {
                    target.iter().position(|t| t == l).ok_or_else(|| DataError::UnknownLevel {
                        column: c.name.clone(),
                        level: l.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            for v in &mut c.values {
                *v = remap[*v as usize] as f64;
            }
            c.kind = ColumnKind::Categorical { levels: target.clone() };
        }
        Ok(out)
    }

    /// Recodes categorical columns of several datasets onto a shared level set.
    pub fn harmonize(sets: &mut [&mut Dataset]) {
        let Some(first) = sets.first() else { return };
        let names: Vec<String> = first
            .columns
            .iter()
            .filter(|c| c.is_categorical())
            .map(|c| c.name.clone())
            .collect();
        for name in names {
            let mut all: BTreeSet<String> = BTreeSet::new();
            for d in sets.iter() {
                if let Ok(Column {
                    kind: ColumnKind::Categorical { levels },
                    ..
                }) = d.column(&name)
                {
                    all.extend(levels.iter().cloned());
                }
            }
            let levels = sort_levels(all.into_iter().collect());
            let index: BTreeMap<&String, usize> =
                levels.iter().enumerate().map(|(i, l)| (l, i)).collect();
            for d in sets.iter_mut() {
                if let Some(c) = d.columns.iter_mut().find(|c| c.name == name) {
                    if let ColumnKind::Categorical { levels: old } = &c.kind {
                        let remap: Vec<usize> = old.iter().map(|l| index[l]).collect();
                        for v in &mut c.values {
                            *v = remap[*v as usize] as f64;
                        }
                        c.kind = ColumnKind::Categorical {
                            levels: levels.clone(),
                        };
                    }
                }
            }
        }
    }
}

fn sort_levels(mut levels: Vec<String>) -> Vec<String> {
    if levels.iter().all(|l| l.parse::<i64>().is_ok()) {
        levels.sort_by_key(|l| l.parse::<i64>().unwrap());
    } else {
        levels.sort();
    }
    levels
}

fn categorical_from_strings(name: &str, cells: &[String]) -> Column {
    let levels = sort_levels(cells.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect());
    let index: BTreeMap<&String, usize> = levels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    Column {
        name: name.to_string(),
        values: cells.iter().map(|c| index[c] as f64).collect(),
        kind: ColumnKind::Categorical { levels },
    }
}

/// Shortest representation that parses back to the same `f64`.
fn format_number(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_with_sidecar() {
        let cfg = DatasetConfig::parse("categorical=T\nenvironment=env\n").unwrap();
        let text = "T,A,env\n1,0.5,e1\n0,-1.25,e2\n10,3,e1\n";
        let d = Dataset::from_reader(text.as_bytes(), &cfg).unwrap();
        assert_eq!(d.n_rows(), 3);
        let t = d.column("T").unwrap();
        assert_eq!(t.cardinality(), Some(3));
        assert_eq!(t.values, vec![1.0, 0.0, 2.0]);
        assert_eq!(d.environment(), Some("env"));
        assert_eq!(d.environment_rows(0.0).unwrap().n_rows(), 2);
        let mut out = Vec::new();
        d.to_writer(&mut out).unwrap();
        let back = Dataset::from_reader(out.as_slice(), &d.config()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn bad_inputs_are_reported() {
        let cfg = DatasetConfig::default();
        let err = Dataset::from_reader("A\nx\n".as_bytes(), &cfg).unwrap_err();
        assert!(matches!(err, DataError::BadNumber { row: 1, .. }));
        assert!(DatasetConfig::parse("colour=red").is_err());
        let cfg = DatasetConfig::parse("categorical=Z").unwrap();
        assert!(Dataset::from_reader("A\n1\n".as_bytes(), &cfg).is_err());
    }

    #[test]
    fn harmonize_aligns_levels() {
        let cfg = DatasetConfig::parse("categorical=T").unwrap();
        let mut a = Dataset::from_reader("T\n0\n2\n".as_bytes(), &cfg).unwrap();
        let mut b = Dataset::from_reader("T\n1\n2\n".as_bytes(), &cfg).unwrap();
        Dataset::harmonize(&mut [&mut a, &mut b]);
        assert_eq!(a.column("T").unwrap().values, vec![0.0, 2.0]);
        assert_eq!(b.column("T").unwrap().values, vec![1.0, 2.0]);
        assert_eq!(b.column("T").unwrap().cardinality(), Some(3));
    }

    #[test]
    fn recode_maps_labels_and_rejects_unseen_levels() {
        let cfg = DatasetConfig::parse("categorical=T").unwrap();
        let d = Dataset::from_reader("T\nb\nc\n".as_bytes(), &cfg).unwrap();
        let mut levels = BTreeMap::new();
        levels.insert("T".to_string(), vec!["a".into(), "b".into(), "c".into()]);
        assert_eq!(d.recode_to(&levels).unwrap().column("T").unwrap().values, vec![1.0, 2.0]);
        levels.insert("T".to_string(), vec!["b".into()]);
        assert!(matches!(d.recode_to(&levels), Err(DataError::UnknownLevel { .. })));
    }
}
