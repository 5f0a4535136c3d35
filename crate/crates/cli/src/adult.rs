//! Adult Income (UCI census) ingestion.
//!
//! Expected file shape: comma-separated with a header row naming the 15
//! standard columns (`age, workclass, fnlwgt, education, education-num,
//! marital-status, occupation, relationship, race, sex, capital-gain,
//! capital-loss, hours-per-week, native-country, income`). Values may carry
//! surrounding whitespace; a `?` value marks a missing field and drops the
//! row (the drop count is reported).
//!
//! The 9-feature recipe: `age`, `education-num`, `capital-gain`,
//! `capital-loss`, `hours-per-week` kept continuous (standardized on the
//! train split after splitting); `workclass`, `occupation`, `relationship`,
//! `race` ordinal-encoded against the lexicographically sorted vocabulary
//! observed in the file. The sensitive attribute is `sex`
//! (Female = 0, Male = 1); the label is `income > 50K`.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use federate_core::data::{split_dataset, standardize_columns, Dataset, SplitSummary};
use federate_core::mat::Matrix;

pub const EXPECTED_HEADER: [&str; 15] = [
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
];

/// Output feature order. The first five are continuous and get
/// standardized; the last four are ordinal codes.
pub const FEATURE_NAMES: [&str; 9] = [
    "age",
    "education-num",
    "capital-gain",
    "capital-loss",
    "hours-per-week",
    "workclass",
    "occupation",
    "relationship",
    "race",
];

pub const CONTINUOUS_COLUMNS: [usize; 5] = [0, 1, 2, 3, 4];

const COL_AGE: usize = 0;
const COL_WORKCLASS: usize = 1;
const COL_EDUCATION_NUM: usize = 4;
const COL_OCCUPATION: usize = 6;
const COL_RELATIONSHIP: usize = 7;
const COL_RACE: usize = 8;
const COL_SEX: usize = 9;
const COL_CAPITAL_GAIN: usize = 10;
const COL_CAPITAL_LOSS: usize = 11;
const COL_HOURS: usize = 12;
const COL_INCOME: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdultLoadReport {
    pub rows_kept: usize,
    pub rows_dropped_missing: usize,
}

/// One raw row after trimming, before encoding.
struct RawRow {
    values: Vec<String>,
}

fn read_rows(path: &Path) -> Result<Vec<RawRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers().context("missing header row")?.clone();
    let got: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if got != EXPECTED_HEADER {
        bail!(
            "unexpected header: got {:?}, expected the 15 standard column names {:?}",
            got,
            EXPECTED_HEADER
        );
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed row at line {}", idx + 2))?;
        if record.len() == 1 && record[0].is_empty() {
            continue; // trailing blank line
        }
        if record.len() != EXPECTED_HEADER.len() {
            bail!(
                "row at line {} has {} fields, expected {}",
                idx + 2,
                record.len(),
                EXPECTED_HEADER.len()
            );
        }
        rows.push(RawRow { values: record.iter().map(|v| v.trim().to_string()).collect() });
    }
    Ok(rows)
}

fn is_missing(value: &str) -> bool {
    value == "?"
}

/// Sorted vocabulary of one categorical column over non-missing rows.
fn vocabulary(rows: &[&RawRow], column: usize) -> Vec<String> {
    let set: BTreeSet<String> = rows.iter().map(|r| r.values[column].clone()).collect();
    set.into_iter().collect()
}

/// Ordinal code of `value` in a fixed vocabulary; unknown categories are an
/// ingestion error (they arise when encoding new rows against a vocabulary
/// fixed earlier, e.g. from a cached dataset).
pub fn ordinal_code(vocab: &[String], column_name: &str, value: &str) -> Result<f64> {
    match vocab.binary_search_by(|v| v.as_str().cmp(value)) {
        Ok(idx) => Ok(idx as f64),
        Err(_) => bail!("unknown category '{value}' for column '{column_name}'"),
    }
}

fn parse_numeric(row_line: usize, name: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .with_context(|| format!("line {row_line}: column '{name}' has non-numeric value '{value}'"))
}

/// Parses and encodes the file without splitting or standardizing. All rows
/// come back tagged train; rows with any missing value are dropped and
/// counted.
pub fn load_adult_csv(path: &Path) -> Result<(Dataset, AdultLoadReport)> {
    let rows = read_rows(path)?;
    let total = rows.len();
    let complete: Vec<&RawRow> =
        rows.iter().filter(|r| !r.values.iter().any(|v| is_missing(v))).collect();
    let dropped = total - complete.len();
    if complete.is_empty() {
        bail!("no complete rows in {}", path.display());
    }

    let vocab_workclass = vocabulary(&complete, COL_WORKCLASS);
    let vocab_occupation = vocabulary(&complete, COL_OCCUPATION);
    let vocab_relationship = vocabulary(&complete, COL_RELATIONSHIP);
    let vocab_race = vocabulary(&complete, COL_RACE);

    let mut features = Matrix::zeros(complete.len(), FEATURE_NAMES.len());
    let mut labels = Vec::with_capacity(complete.len());
    let mut sensitive = Vec::with_capacity(complete.len());
    for (i, row) in complete.iter().enumerate() {
        let line = i + 2; // approximate: post-drop index is close enough for diagnostics
        let v = &row.values;
        let out = features.row_mut(i);
        out[0] = parse_numeric(line, "age", &v[COL_AGE])?;
        out[1] = parse_numeric(line, "education-num", &v[COL_EDUCATION_NUM])?;
        out[2] = parse_numeric(line, "capital-gain", &v[COL_CAPITAL_GAIN])?;
        out[3] = parse_numeric(line, "capital-loss", &v[COL_CAPITAL_LOSS])?;
        out[4] = parse_numeric(line, "hours-per-week", &v[COL_HOURS])?;
        out[5] = ordinal_code(&vocab_workclass, "workclass", &v[COL_WORKCLASS])?;
        out[6] = ordinal_code(&vocab_occupation, "occupation", &v[COL_OCCUPATION])?;
        out[7] = ordinal_code(&vocab_relationship, "relationship", &v[COL_RELATIONSHIP])?;
        out[8] = ordinal_code(&vocab_race, "race", &v[COL_RACE])?;
        sensitive.push(match v[COL_SEX].as_str() {
            "Female" => 0usize,
            "Male" => 1usize,
            other => bail!("unknown sex value '{other}'"),
        });
        // The census test file variant suffixes labels with a period.
        labels.push(match v[COL_INCOME].trim_end_matches('.') {
            "<=50K" => 0usize,
            ">50K" => 1usize,
            other => bail!("unknown income value '{other}'"),
        });
    }

    let dataset = Dataset::new(
        features,
        labels,
        sensitive,
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((dataset, AdultLoadReport { rows_kept: complete.len(), rows_dropped_missing: dropped }))
}

/// Full pipeline: parse and encode, split 60/20/20 stratified by `(y, z)`,
/// then standardize the continuous columns on train statistics.
pub fn load_adult(
    path: &Path,
    split: [f64; 3],
    seed: u64,
) -> Result<(Dataset, AdultLoadReport, SplitSummary)> {
    let (mut dataset, report) = load_adult_csv(path)?;
    let summary = split_dataset(&mut dataset, split, seed).map_err(|e| anyhow::anyhow!("{e}"))?;
    standardize_columns(&mut dataset, &CONTINUOUS_COLUMNS).map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((dataset, report, summary))
}
