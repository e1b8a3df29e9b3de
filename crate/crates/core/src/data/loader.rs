//! CSV ingestion driven by a JSON schema.
//!
//! The schema names the sensitive and label columns together with the
//! raw values that map to 1, lists continuous columns (kept as numbers and
//! later z-scored on the training split) and categorical columns (one-hot
//! encoded, optionally with a fixed level list). Columns not mentioned are
//! ignored. Rows with an empty field in a used column are dropped.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{FairError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    /// Whether the first record is a header row.
    #[serde(default = "default_true")]
    pub header: bool,
    /// Column names, required when there is no header row.
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub sensitive: SensitiveSpec,
    pub label: LabelSpec,
    #[serde(default)]
    pub continuous: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<CategoricalColumn>,
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveSpec {
    pub column: String,
    /// Raw values mapped to `s = 1`; everything else is `s = 0`.
    pub positive: Vec<String>,
    /// Also feed the binarized attribute to the network as an input column.
    #[serde(default = "default_true")]
    pub as_feature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub column: String,
    /// Raw values mapped to `y = 1`.
    pub positive: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub column: String,
    /// Fixed level order. When empty the sorted set of observed values is used.
    #[serde(default)]
    pub levels: Vec<String>,
}

impl Schema {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

enum Role {
    Continuous,
    Categorical(usize),
    Sensitive,
}

/// Reads `path` according to `schema`. Continuous columns are left
/// unscaled; see [`super::Standardizer`].
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.header)
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;

    let names: Vec<String> = if schema.header {
        reader.headers()?.iter().map(|s| s.to_string()).collect()
    } else {
        if schema.columns.is_empty() {
            return Err(FairError::invalid("schema without header must list `columns`"));
        }
        schema.columns.clone()
    };
    let position: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let col = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| FairError::MissingColumn(name.to_string()))
    };

    let sens_col = col(&schema.sensitive.column)?;
    let label_col = col(&schema.label.column)?;
    let mut roles: Vec<(usize, Role)> = Vec::new();
    for c in &schema.continuous {
        roles.push((col(c)?, Role::Continuous));
    }
    for (k, c) in schema.categorical.iter().enumerate() {
        roles.push((col(&c.column)?, Role::Categorical(k)));
    }
    if schema.sensitive.as_feature {
        roles.push((sens_col, Role::Sensitive));
    }
    // encoded feature order follows the file's column order
    roles.sort_by_key(|(c, _)| *c);
    let used: BTreeSet<usize> = roles.iter().map(|(c, _)| *c).chain([sens_col, label_col]).collect();

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 1 + schema.header as usize;
        let record = record.map_err(|e| FairError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() < names.len() {
            return Err(FairError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        if used.iter().any(|&c| record[c].is_empty()) {
            continue;
        }
        rows.push((line, record.iter().map(|s| s.to_string()).collect()));
    }

    let mut levels: Vec<Vec<String>> = Vec::with_capacity(schema.categorical.len());
    for c in &schema.categorical {
        if c.levels.is_empty() {
            let j = col(&c.column)?;
            let seen: BTreeSet<&str> = rows.iter().map(|(_, r)| r[j].as_str()).collect();
            levels.push(seen.into_iter().map(str::to_string).collect());
        } else {
            levels.push(c.levels.clone());
        }
    }

    let mut feature_names = Vec::new();
    let mut continuous = Vec::new();
    for (c, role) in &roles {
        match role {
            Role::Continuous => {
                continuous.push(feature_names.len());
                feature_names.push(names[*c].clone());
            }
            Role::Categorical(k) => {
                for level in &levels[*k] {
                    feature_names.push(format!("{}={}", names[*c], level));
                }
            }
            Role::Sensitive => feature_names.push(names[*c].clone()),
        }
    }

    let width = feature_names.len();
    let mut features = Array2::zeros((rows.len(), width));
    let mut sensitive = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (i, (line, r)) in rows.iter().enumerate() {
        let parse_err = |message: String| FairError::Parse {
            path: path.to_path_buf(),
            line: *line,
            message,
        };
        let s = schema.sensitive.positive.iter().any(|p| p == &r[sens_col]) as u8;
        let y = schema.label.positive.iter().any(|p| p == &r[label_col]) as u8;
        let mut j = 0;
        for (c, role) in &roles {
            match role {
                Role::Continuous => {
                    let v: f64 = r[*c]
                        .parse()
                        .map_err(|_| parse_err(format!("column `{}`: `{}` is not a number", names[*c], r[*c])))?;
                    if !v.is_finite() {
                        return Err(parse_err(format!("column `{}` is not finite", names[*c])));
                    }
                    features[[i, j]] = v;
                    j += 1;
                }
                Role::Categorical(k) => {
                    let lv = &levels[*k];
                    let pos = lv
                        .iter()
                        .position(|l| l == &r[*c])
                        .ok_or_else(|| parse_err(format!("column `{}`: unknown level `{}`", names[*c], r[*c])))?;
                    features[[i, j + pos]] = 1.0;
                    j += lv.len();
                }
                Role::Sensitive => {
                    features[[i, j]] = s as f64;
                    j += 1;
                }
            }
        }
        sensitive.push(s);
        labels.push(y);
    }

    Dataset::with_columns(
        schema.name.clone(),
        features,
        feature_names,
        continuous,
        sensitive,
        labels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> Schema {
        serde_json::from_str(
            r#"{
                "name": "toy",
                "sensitive": {"column": "sex", "positive": ["M"]},
                "label": {"column": "y", "positive": ["yes"]},
                "continuous": ["age", "hours"],
                "categorical": [{"column": "job"}]
            }"#,
        )
        .unwrap()
    }

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn one_hot_width() {
        let f = write("age,job,sex,hours,y\n30,a,M,40,yes\n41,b,F,20,no\n22,a,F,35,yes\n");
        let d = load_csv(f.path(), &schema()).unwrap();
        // 2 continuous + 2 levels + sensitive column
        assert_eq!(d.width(), 5);
        assert_eq!(d.feature_names, ["age", "job=a", "job=b", "sex", "hours"]);
        assert_eq!(d.continuous, vec![0, 4]);
        assert_eq!(d.sensitive, vec![1, 0, 0]);
        assert_eq!(d.labels, vec![1, 0, 1]);
        assert_eq!(d.features.row(1).to_vec(), vec![41.0, 0.0, 1.0, 0.0, 20.0]);
    }

    #[test]
    fn bad_number_reports_line() {
        let f = write("age,job,sex,hours,y\n30,a,M,40,yes\n4x,b,F,20,no\n");
        match load_csv(f.path(), &schema()) {
            Err(FairError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_reported() {
        let f = write("age,job,sex,y\n30,a,M,yes\n");
        assert!(matches!(load_csv(f.path(), &schema()), Err(FairError::MissingColumn(c)) if c == "hours"));
    }

    #[test]
    fn empty_group_rejected() {
        let f = write("age,job,sex,hours,y\n30,a,M,40,yes\n41,b,M,20,no\n");
        assert!(matches!(
            load_csv(f.path(), &schema()),
            Err(FairError::InvalidDataset(_))
        ));
    }

    #[test]
    fn rows_with_missing_fields_dropped() {
        let f = write("age,job,sex,hours,y\n30,a,M,40,yes\n,b,F,20,no\n22,a,F,35,yes\n");
        assert_eq!(load_csv(f.path(), &schema()).unwrap().len(), 2);
    }
}
