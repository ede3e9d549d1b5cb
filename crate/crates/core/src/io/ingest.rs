use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop any row with a missing or unparseable field.
    #[default]
    DropRow,
    /// Fill missing feature fields with the column mode; rows missing the
    /// target or sensitive value are still dropped.
    ImputeMode,
}

/// How to turn a CSV file into a [`Dataset`].
///
/// Column names are matched case-insensitively, ignoring punctuation and
/// spaces, and may list alternatives separated by `|` (`"sex|gender"`).
/// `numeric_columns = ["*"]` takes every column not named elsewhere.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSchema {
    pub target_column: String,
    /// Target literals mapped to `Y = 1`; every other value is `Y = 0`.
    pub positive_values: Vec<String>,
    pub sensitive_column: String,
    /// Sensitive literals mapped to `S = 0`. Exactly one of this and
    /// `majority_values` is non-empty.
    #[serde(default)]
    pub minority_values: Vec<String>,
    /// Sensitive literals mapped to `S = 1`; everything else is `S = 0`.
    #[serde(default)]
    pub majority_values: Vec<String>,
    #[serde(default)]
    pub numeric_columns: Vec<String>,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default = "default_markers")]
    pub missing_markers: Vec<String>,
    /// Column names to use when the file has no header row.
    #[serde(default)]
    pub header: Option<Vec<String>>,
    /// Lines starting with this byte are skipped.
    #[serde(default)]
    pub comment: Option<char>,
}

fn default_markers() -> Vec<String> {
    vec!["?".into(), String::new()]
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Shipped schemas for the two public benchmark files and for datasets
/// written by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Census Income ("Adult"): income above 50K is desirable, women are
    /// the minority group.
    Adult,
    /// Two-year recidivism: no re-offence is desirable, non-Caucasian
    /// defendants are the minority group.
    Recidivism,
    /// Files written by [`write_dataset_csv`]: every column except `S` and
    /// `Y` is a numeric feature.
    Synthetic,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adult" | "census" | "census_income" => Ok(Preset::Adult),
            "recidivism" | "compas" => Ok(Preset::Recidivism),
            "synthetic" | "generic" => Ok(Preset::Synthetic),
            other => Err(Error::InvalidArgument(format!("unknown schema preset `{other}`"))),
        }
    }
}

impl Preset {
    pub fn schema(self) -> IngestSchema {
        match self {
            Preset::Adult => IngestSchema {
                target_column: "income|class|salary".into(),
                positive_values: strings(&[">50K", ">50K."]),
                sensitive_column: "sex|gender".into(),
                minority_values: strings(&["Female"]),
                majority_values: Vec::new(),
                numeric_columns: strings(&[
                    "age",
                    "fnlwgt",
                    "education-num|educational-num",
                    "capital-gain",
                    "capital-loss",
                    "hours-per-week",
                ]),
                categorical_columns: strings(&[
                    "workclass",
                    "education",
                    "marital-status",
                    "occupation",
                    "relationship",
                    "race",
                    "native-country",
                ]),
                missing_policy: MissingPolicy::DropRow,
                missing_markers: default_markers(),
                header: Some(strings(&[
                    "age",
                    "workclass",
                    "fnlwgt",
                    "education",
                    "education-num",
                    "marital-status",
                    "occupation",
                    "relationship",
                    "race",
                    "sex",
                    "capital-gain",
                    "capital-loss",
                    "hours-per-week",
                    "native-country",
                    "income",
                ])),
                comment: Some('|'),
            },
            Preset::Recidivism => IngestSchema {
                target_column: "two_year_recid".into(),
                positive_values: strings(&["0"]),
                sensitive_column: "race".into(),
                minority_values: Vec::new(),
                majority_values: strings(&["Caucasian"]),
                numeric_columns: strings(&[
                    "age",
                    "juv_fel_count",
                    "juv_misd_count",
                    "juv_other_count",
                    "priors_count",
                ]),
                categorical_columns: strings(&["sex", "c_charge_degree"]),
                missing_policy: MissingPolicy::DropRow,
                missing_markers: default_markers(),
                header: None,
                comment: None,
            },
            Preset::Synthetic => IngestSchema {
                target_column: "Y".into(),
                positive_values: strings(&["1"]),
                sensitive_column: "S".into(),
                minority_values: strings(&["0"]),
                majority_values: Vec::new(),
                numeric_columns: strings(&["*"]),
                categorical_columns: Vec::new(),
                missing_policy: MissingPolicy::DropRow,
                missing_markers: default_markers(),
                header: None,
                comment: None,
            },
        }
    }
}

impl IngestSchema {
    /// A preset name or the path of a TOML schema file.
    pub fn resolve(arg: &str) -> Result<Self> {
        if let Ok(preset) = arg.parse::<Preset>() {
            return Ok(preset.schema());
        }
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.into(),
            reason: e.to_string(),
        })?;
        let schema: IngestSchema = toml::from_str(&text).map_err(|e| Error::Config {
            path: path.into(),
            reason: e.to_string(),
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.minority_values.is_empty() == self.majority_values.is_empty() {
            return Err(Error::InvalidArgument(
                "schema needs exactly one of minority_values and majority_values".into(),
            ));
        }
        if self.positive_values.is_empty() {
            return Err(Error::InvalidArgument("schema needs at least one positive value".into()));
        }
        if normalize(&self.target_column) == normalize(&self.sensitive_column) {
            return Err(Error::InvalidArgument("target and sensitive columns must differ".into()));
        }
        Ok(())
    }

    fn sensitive_bit(&self, value: &str) -> u8 {
        if self.majority_values.is_empty() {
            u8::from(!self.minority_values.iter().any(|m| m == value))
        } else {
            u8::from(self.majority_values.iter().any(|m| m == value))
        }
    }
}

fn normalize(name: &str) -> String {
    name.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

fn find(header: &[String], spec: &str) -> Option<usize> {
    spec.split('|').map(normalize).find_map(|want| header.iter().position(|h| normalize(h) == want))
}

fn require(header: &[String], spec: &str) -> Result<usize> {
    find(header, spec).ok_or_else(|| Error::MissingColumn(spec.to_string()))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadReport {
    /// Data rows in the file (header and comment lines excluded).
    pub rows_read: usize,
    pub rows_kept: usize,
    /// `(line number, reason)` for each dropped row.
    pub dropped: Vec<(u64, String)>,
    /// Feature fields filled by mode imputation.
    pub imputed: usize,
}

impl LoadReport {
    pub fn rows_dropped(&self) -> usize {
        self.dropped.len()
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub data: Dataset,
    pub report: LoadReport,
}

impl Loaded {
    /// Share of kept rows with `Y = 1`.
    pub fn positive_share(&self) -> f64 {
        self.data.positive_rate()
    }

    /// Share of the rarer class among kept rows.
    pub fn minority_class_share(&self) -> f64 {
        let p = self.data.positive_rate();
        p.min(1.0 - p)
    }
}

enum Field {
    Num(f64),
    Cat(String),
    Missing,
}

struct Parsed {
    line: u64,
    y: u8,
    s: u8,
    fields: Vec<Field>,
}

fn open(path: &Path) -> Result<std::io::BufReader<File>> {
    File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Reads `path` under `schema`. Categorical columns are one-hot encoded
/// with categories in sorted order and named `column=value`; numeric
/// columns pass through unscaled.
pub fn load_csv(path: impl AsRef<Path>, schema: &IngestSchema) -> Result<Loaded> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(schema.comment.map(|c| c as u8))
        .from_reader(open(path.as_ref())?);
    let mut records = reader.records();

    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::EmptyAfterFiltering),
    };
    let first_names: Vec<String> = first.iter().map(str::to_string).collect();
    let (header, pending) = match &schema.header {
        Some(default) if find(&first_names, &schema.target_column).is_none() => (default.clone(), Some(first)),
        _ => (first_names, None),
    };

    let target = require(&header, &schema.target_column)?;
    let sensitive = require(&header, &schema.sensitive_column)?;
    let categorical: Vec<usize> = schema
        .categorical_columns
        .iter()
        .map(|c| require(&header, c))
        .collect::<Result<_>>()?;
    let numeric: Vec<usize> = if schema.numeric_columns.iter().any(|c| c == "*") {
        (0..header.len())
            .filter(|j| *j != target && *j != sensitive && !categorical.contains(j))
            .collect()
    } else {
        schema
            .numeric_columns
            .iter()
            .map(|c| require(&header, c))
            .collect::<Result<_>>()?
    };
    let columns: Vec<usize> = numeric.iter().chain(&categorical).copied().collect();

    let is_missing = |v: &str| schema.missing_markers.iter().any(|m| m == v);
    let mut report = LoadReport::default();
    let mut rows: Vec<Parsed> = Vec::new();
    let all = pending.into_iter().map(Ok).chain(records);
    for record in all {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        report.rows_read += 1;
        let problem = |reason: String, report: &mut LoadReport| -> Result<()> {
            match schema.missing_policy {
                MissingPolicy::DropRow => {
                    report.dropped.push((line, reason));
                    Ok(())
                }
                MissingPolicy::ImputeMode => Err(Error::UnparseableRow { line, reason }),
            }
        };
        if record.len() != header.len() {
            problem(format!("expected {} fields, found {}", header.len(), record.len()), &mut report)?;
            continue;
        }
        let (yv, sv) = (&record[target], &record[sensitive]);
        if is_missing(yv) || is_missing(sv) {
            report.dropped.push((line, "missing target or sensitive value".into()));
            continue;
        }
        let mut fields = Vec::with_capacity(columns.len());
        let mut bad = None;
        for (k, &j) in columns.iter().enumerate() {
            let v = &record[j];
            if is_missing(v) {
                fields.push(Field::Missing);
            } else if k < numeric.len() {
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => fields.push(Field::Num(x)),
                    _ => {
                        bad = Some(format!("column `{}`: `{v}` is not a number", header[j]));
                        break;
                    }
                }
            } else {
                fields.push(Field::Cat(v.to_string()));
            }
        }
        if let Some(reason) = bad {
            problem(reason, &mut report)?;
            continue;
        }
        if schema.missing_policy == MissingPolicy::DropRow && fields.iter().any(|f| matches!(f, Field::Missing)) {
            report.dropped.push((line, "missing feature value".into()));
            continue;
        }
        rows.push(Parsed {
            line,
            y: u8::from(schema.positive_values.iter().any(|p| p == yv)),
            s: schema.sensitive_bit(sv),
            fields,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterFiltering);
    }
    report.rows_kept = rows.len();
    report.imputed = impute(&mut rows, numeric.len());

    let levels: Vec<Vec<String>> = (numeric.len()..columns.len())
        .map(|k| {
            let set: BTreeSet<&str> = rows
                .iter()
                .filter_map(|r| match &r.fields[k] {
                    Field::Cat(v) => Some(v.as_str()),
                    _ => None,
                })
                .collect();
            set.into_iter().map(str::to_string).collect()
        })
        .collect();
    let mut names: Vec<String> = numeric.iter().map(|&j| header[j].clone()).collect();
    for (c, &j) in categorical.iter().enumerate() {
        names.extend(levels[c].iter().map(|v| format!("{}={v}", header[j])));
    }
    let lookup: Vec<HashMap<&str, usize>> = levels
        .iter()
        .map(|l| l.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect())
        .collect();

    let width = names.len();
    let mut features = Vec::with_capacity(rows.len() * width);
    for r in &rows {
        let start = features.len();
        features.resize(start + width, 0.0);
        let row = &mut features[start..];
        let mut offset = numeric.len();
        for (k, f) in r.fields.iter().enumerate() {
            match f {
                Field::Num(x) => row[k] = *x,
                Field::Cat(v) => {
                    let c = k - numeric.len();
                    row[offset + lookup[c][v.as_str()]] = 1.0;
                }
                Field::Missing => unreachable!("missing values are imputed or dropped"),
            }
            if k >= numeric.len() {
                offset += levels[k - numeric.len()].len();
            }
        }
    }
    let target_v: Vec<u8> = rows.iter().map(|r| r.y).collect();
    let sensitive_v: Vec<u8> = rows.iter().map(|r| r.s).collect();
    log::debug!(
        "loaded {} of {} rows (first kept line {})",
        report.rows_kept,
        report.rows_read,
        rows[0].line
    );
    let data = Dataset::from_flat(names, features, target_v, sensitive_v)?;
    Ok(Loaded { data, report })
}

/// Fills `Missing` fields with the column mode (ties to the smallest value)
/// and returns how many were filled.
fn impute(rows: &mut [Parsed], n_numeric: usize) -> usize {
    let width = rows.first().map_or(0, |r| r.fields.len());
    let mut filled = 0;
    for k in 0..width {
        if !rows.iter().any(|r| matches!(r.fields[k], Field::Missing)) {
            continue;
        }
        let fill = if k < n_numeric {
            let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for r in rows.iter() {
                if let Field::Num(x) = r.fields[k] {
                    counts.entry(x.to_bits()).or_insert((x, 0)).1 += 1;
                }
            }
            counts
                .values()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
                .map(|&(x, _)| Field::Num(x))
        } else {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in rows.iter() {
                if let Field::Cat(v) = &r.fields[k] {
                    *counts.entry(v.as_str()).or_insert(0) += 1;
                }
            }
            counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(v, _)| v.to_string())
                .map(Field::Cat)
        };
        // A column with no observed values at all keeps nothing to copy;
        // such rows cannot be encoded.
        let fill = fill.unwrap_or(Field::Num(0.0));
        for r in rows.iter_mut() {
            if matches!(r.fields[k], Field::Missing) {
                r.fields[k] = match &fill {
                    Field::Num(x) => Field::Num(*x),
                    Field::Cat(v) => Field::Cat(v.clone()),
                    Field::Missing => unreachable!(),
                };
                filled += 1;
            }
        }
    }
    filled
}

/// Writes features, then `S`, then `Y`, with shortest round-trip numbers.
pub fn write_dataset_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(File::create(path)?));
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.extend(["S", "Y"]);
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..d.n() {
        record.clear();
        record.extend(d.row(i).iter().map(|x| x.to_string()));
        record.push(d.sensitive()[i].to_string());
        record.push(d.target()[i].to_string());
        w.write_record(&record)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(())
}

/// Reads a file written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    Ok(load_csv(path, &Preset::Synthetic.schema())?.data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let path = dir.path().join("in.csv");
        std::fs::write(&path, text).unwrap();
        path
    }

    fn schema() -> IngestSchema {
        IngestSchema {
            target_column: "y".into(),
            positive_values: vec!["yes".into()],
            sensitive_column: "group".into(),
            minority_values: vec!["b".into()],
            majority_values: Vec::new(),
            numeric_columns: vec!["x".into()],
            categorical_columns: vec!["colour".into()],
            missing_policy: MissingPolicy::DropRow,
            missing_markers: default_markers(),
            header: None,
            comment: None,
        }
    }

    #[test]
    fn bad_row_is_dropped_and_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x,colour,group,y\n1.5,red,a,yes\noops,blue,b,no\n2,blue,b,yes\n");
        let loaded = load_csv(&p, &schema()).unwrap();
        assert_eq!(loaded.data.n(), 2);
        assert_eq!(loaded.report.rows_read, 3);
        assert_eq!(loaded.report.dropped.len(), 1);
        assert_eq!(loaded.report.dropped[0].0, 3);
        assert_eq!(loaded.data.target(), &[1, 1]);
        assert_eq!(loaded.data.sensitive(), &[1, 0]);
    }

    #[test]
    fn one_hot_columns_sum_to_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x,colour,group,y\n1,red,a,yes\n2,blue,b,no\n3,green,a,no\n4,red,b,yes\n");
        let d = load_csv(&p, &schema()).unwrap().data;
        assert_eq!(d.feature_names(), &["x", "colour=blue", "colour=green", "colour=red"]);
        for i in 0..d.n() {
            assert_eq!(d.row(i)[1..].iter().sum::<f64>(), 1.0);
        }
        assert_eq!(d.row(0), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn impute_mode_fills_features_and_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = schema();
        s.missing_policy = MissingPolicy::ImputeMode;
        let p = write(&dir, "x,colour,group,y\n1,red,a,yes\n?,blue,b,no\n1,?,a,no\n5,red,?,yes\n");
        let loaded = load_csv(&p, &s).unwrap();
        assert_eq!(loaded.data.n(), 3);
        assert_eq!(loaded.report.imputed, 2);
        assert_eq!(loaded.data.row(1)[0], 1.0);
        assert_eq!(loaded.data.feature_names()[2], "colour=red");
        // red and blue tie; ties go to the smallest value
        assert_eq!(loaded.data.row(2)[1], 1.0);

        let p = write(&dir, "x,colour,group,y\n1,red,a,yes\nzz,blue,b,no\n");
        assert!(matches!(load_csv(&p, &s), Err(Error::UnparseableRow { line: 3, .. })));
    }

    #[test]
    fn missing_column_and_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "x,group,y\n1,a,yes\n");
        assert!(matches!(load_csv(&p, &schema()), Err(Error::MissingColumn(c)) if c == "colour"));
        let p = write(&dir, "x,colour,group,y\n?,red,a,yes\n");
        assert!(matches!(load_csv(&p, &schema()), Err(Error::EmptyAfterFiltering)));
    }

    #[test]
    fn headerless_file_uses_default_names() {
        let dir = tempfile::tempdir().unwrap();
        let line = "39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K";
        let text = format!("|1x3 comment\n{line}\n{}\n", line.replace("Male", "Female").replace("<=50K", ">50K."));
        let p = write(&dir, &text);
        let loaded = load_csv(&p, &Preset::Adult.schema()).unwrap();
        assert_eq!(loaded.report.rows_read, 2);
        assert_eq!(loaded.data.target(), &[0, 1]);
        assert_eq!(loaded.data.sensitive(), &[1, 0]);
        assert_eq!(loaded.data.row(0)[..6], [39.0, 77516.0, 13.0, 2174.0, 0.0, 40.0]);
    }

    #[test]
    fn majority_rule_and_aliases() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "id,sex,age,race,juv_fel_count,juv_misd_count,juv_other_count,priors_count,c_charge_degree,Two_Year_Recid\n\
             1,Male,30,Caucasian,0,0,0,2,F,1\n2,Female,25,African-American,0,1,0,0,M,0\n",
        );
        let d = load_csv(&p, &Preset::Recidivism.schema()).unwrap().data;
        assert_eq!(d.sensitive(), &[1, 0]);
        assert_eq!(d.target(), &[0, 1]);
        assert_eq!(d.n_features(), 5 + 2 + 2);
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let d = crate::synth::generate(&crate::SynthConfig {
            n: 200,
            ..crate::SynthConfig::new(0.3, 0.4, 9)
        })
        .unwrap();
        let d = crate::synth::inject_noise(&d, &crate::NoiseSpec { sigma: 0.3, seed: 1 }).unwrap();
        let p = dir.path().join("d.csv");
        write_dataset_csv(&d, &p).unwrap();
        assert_eq!(read_dataset_csv(&p).unwrap(), d);
    }

    #[test]
    fn schema_files_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.toml");
        std::fs::write(
            &p,
            "target_column = \"y\"\npositive_values = [\"1\"]\nsensitive_column = \"s\"\nmajority_values = [\"m\"]\nnumeric_columns = [\"*\"]\nmissing_policy = \"impute_mode\"\n",
        )
        .unwrap();
        let s = IngestSchema::resolve(p.to_str().unwrap()).unwrap();
        assert_eq!(s.missing_policy, MissingPolicy::ImputeMode);
        assert_eq!(s.missing_markers, default_markers());
        std::fs::write(&p, "target_column = \"y\"\npositive_values = [\"1\"]\nsensitive_column = \"y\"\nminority_values = [\"0\"]\n").unwrap();
        assert!(IngestSchema::resolve(p.to_str().unwrap()).is_err());
        assert!(matches!(IngestSchema::resolve("/no/such/file.toml"), Err(Error::Config { .. })));
    }
}
