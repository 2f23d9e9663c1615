//! File formats: results matrices (CSV), per-attempt signals (JSONL),
//! category label maps (JSON) and analysis reports (JSON / TSV).
//!
//! Report floats are rounded to 12 significant digits before printing, and
//! fields appear in declaration order, so equal inputs give equal bytes.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bootstrap::{ConvergenceDistribution, TauCurve};
use crate::error::{Error, Result};
use crate::model::{validate_matrix, PosteriorSummary, ResultsMatrix};
use crate::ranking::RankTable;
use crate::rubric::{AttemptSignals, SignalRecord, ThresholdSet};
use crate::simulate::{SchemeComparison, SeparationCurve};

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// Category names to indices, read from a JSON object such as `{"wrong": 0, "right": 1}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap(BTreeMap<String, u32>);

impl LabelMap {
    pub fn new(labels: BTreeMap<String, u32>) -> Self {
        LabelMap(labels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| json_error(&source_name(path), 0, &e))
    }

    pub fn index(&self, label: &str) -> Option<u32> {
        self.0.get(label).copied()
    }

    pub fn label(&self, index: u32) -> Option<&str> {
        self.0.iter().find(|(_, &v)| v == index).map(|(k, _)| k.as_str())
    }

    /// Largest index in the map.
    pub fn max_category(&self) -> Option<u32> {
        self.0.values().copied().max()
    }
}

/// Loads a `question_id,t1,...,tN` CSV.
///
/// `max_category` is C; when `None` it is the largest cell seen (at least 1).
/// With a label map, cells may be category names as well as integers.
pub fn load_results_csv(
    path: &Path,
    max_category: Option<u32>,
    labels: Option<&LabelMap>,
) -> Result<ResultsMatrix> {
    read_results_csv(File::open(path)?, &source_name(path), max_category, labels)
}

pub fn read_results_csv<R: Read>(
    reader: R,
    source: &str,
    max_category: Option<u32>,
    labels: Option<&LabelMap>,
) -> Result<ResultsMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, column: u64, message: String| Error::Parse {
        source_name: source.to_string(),
        line,
        column,
        message,
    };
    let header = rdr
        .headers()
        .map_err(|e| parse_err(csv_line(&e), 1, e.to_string()))?
        .clone();
    if header.get(0) != Some("question_id") {
        return Err(parse_err(
            1,
            1,
            format!("header must start with `question_id`, found {:?}", header.get(0).unwrap_or("")),
        ));
    }
    let trials = header.len() - 1;

    let mut ids = Vec::new();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| parse_err(csv_line(&e), 1, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::RaggedRows {
                row: rows.len(),
                expected: trials,
                found: record.len().saturating_sub(1),
            });
        }
        ids.push(record[0].to_string());
        let row = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, cell)| {
                cell.parse::<i64>()
                    .ok()
                    .or_else(|| labels.and_then(|l| l.index(cell)).map(i64::from))
                    .ok_or_else(|| {
                        parse_err(line, col as u64 + 1, format!("{cell:?} is not a category"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let max = max_category
        .or_else(|| labels.and_then(LabelMap::max_category))
        .unwrap_or_else(|| rows.iter().flatten().copied().max().unwrap_or(1).clamp(1, u32::MAX as i64) as u32);
    validate_matrix(&rows, max)?.with_question_ids(ids)
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

/// Writes the matrix in the format [`read_results_csv`] reads. Questions
/// without ids are written as `q1`, `q2`, ...
pub fn write_results_csv<W: Write>(matrix: &ResultsMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["question_id".to_string()];
    header.extend((1..=matrix.trials()).map(|t| format!("t{t}")));
    w.write_record(&header).map_err(csv_io)?;
    for (i, row) in matrix.rows().enumerate() {
        let id = match matrix.question_ids() {
            Some(ids) => ids[i].clone(),
            None => format!("q{}", i + 1),
        };
        let mut rec = vec![id];
        rec.extend(row.iter().map(u32::to_string));
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn json_error(source: &str, line: u64, e: &serde_json::Error) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line: if line == 0 { e.line() as u64 } else { line },
        column: e.column() as u64,
        message: e.to_string(),
    }
}

const VERIFIER_FIELDS: [&str; 3] = ["compass_context_A", "compass_context_B", "compass_context_C"];

pub fn load_signals_jsonl(path: &Path) -> Result<Vec<SignalRecord>> {
    read_signals_jsonl(BufReader::new(File::open(path)?), &source_name(path))
}

/// One record per non-blank line. Verifier probabilities may be omitted
/// (all three together); they then default to 0 and the record is flagged.
pub fn read_signals_jsonl<R: BufRead>(reader: R, source: &str) -> Result<Vec<SignalRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| json_error(source, line_no, &e))?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            source_name: source.to_string(),
            line: line_no,
            column: 1,
            message: "expected a JSON object".into(),
        })?;
        let record = parse_signal(obj, source, line_no)?;
        if !seen.insert((record.question_id.clone(), record.trial)) {
            return Err(Error::DuplicateCell {
                source_name: source.to_string(),
                line: line_no,
                question: record.question_id,
                trial: record.trial,
            });
        }
        out.push(record);
    }
    Ok(out)
}

fn parse_signal(obj: &Map<String, Value>, source: &str, line: u64) -> Result<SignalRecord> {
    let missing = |field: &str| Error::MissingField {
        source_name: source.to_string(),
        line,
        field: field.to_string(),
    };
    let range = |field: &str, value: f64, allowed: &'static str| Error::RangeViolation {
        source_name: source.to_string(),
        line,
        field: field.to_string(),
        value,
        allowed,
    };
    let wrong_type = |field: &str, expected: &str| Error::Parse {
        source_name: source.to_string(),
        line,
        column: 1,
        message: format!("field `{field}` must be {expected}"),
    };
    let number = |field: &str| -> Result<f64> {
        let v = obj.get(field).ok_or_else(|| missing(field))?;
        let x = v.as_f64().ok_or_else(|| wrong_type(field, "a number"))?;
        if !x.is_finite() {
            return Err(range(field, x, "finite"));
        }
        Ok(x)
    };
    let unit = |field: &str| -> Result<f64> {
        let x = number(field)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(range(field, x, "[0, 1]"));
        }
        Ok(x)
    };
    let non_negative = |field: &str| -> Result<f64> {
        let x = number(field)?;
        if x < 0.0 {
            return Err(range(field, x, ">= 0"));
        }
        Ok(x)
    };

    let question_id = match obj.get("question_id").ok_or_else(|| missing("question_id"))? {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(wrong_type("question_id", "a string or number")),
    };
    let trial = obj
        .get("trial")
        .ok_or_else(|| missing("trial"))?
        .as_u64()
        .ok_or_else(|| wrong_type("trial", "a non-negative integer"))?;
    let repeated = number("repeated_pattern")?;
    if repeated != 0.0 && repeated != 1.0 {
        return Err(range("repeated_pattern", repeated, "0 or 1"));
    }

    let present = VERIFIER_FIELDS.iter().filter(|f| obj.contains_key(**f)).count();
    let verifier_defaulted = present == 0;
    let [a, b, c] = if verifier_defaulted {
        [0.0; 3]
    } else {
        [unit(VERIFIER_FIELDS[0])?, unit(VERIFIER_FIELDS[1])?, unit(VERIFIER_FIELDS[2])?]
    };

    Ok(SignalRecord {
        question_id,
        trial,
        signals: AttemptSignals {
            has_box: unit("has_box")?,
            is_correct: unit("is_correct")?,
            token_ratio: non_negative("token_ratio")?,
            repeated_pattern: repeated as u8,
            prompt_bpt: non_negative("prompt_bpt")?,
            completion_bpt: non_negative("completion_bpt")?,
            verifier_a: a,
            verifier_b: b,
            verifier_c: c,
        },
        verifier_defaulted,
    })
}

/// Writes records in the format [`read_signals_jsonl`] reads. Defaulted
/// verifier fields are left out again.
pub fn write_signals_jsonl<W: Write>(records: &[SignalRecord], mut writer: W) -> Result<()> {
    for r in records {
        let s = &r.signals;
        let mut obj = Map::new();
        obj.insert("question_id".into(), Value::from(r.question_id.clone()));
        obj.insert("trial".into(), Value::from(r.trial));
        obj.insert("has_box".into(), Value::from(s.has_box));
        obj.insert("is_correct".into(), Value::from(s.is_correct));
        obj.insert("token_ratio".into(), Value::from(s.token_ratio));
        obj.insert("repeated_pattern".into(), Value::from(s.repeated_pattern));
        obj.insert("prompt_bpt".into(), Value::from(s.prompt_bpt));
        obj.insert("completion_bpt".into(), Value::from(s.completion_bpt));
        if !r.verifier_defaulted {
            for (f, v) in VERIFIER_FIELDS.iter().zip([s.verifier_a, s.verifier_b, s.verifier_c]) {
                obj.insert((*f).into(), Value::from(v));
            }
        }
        serde_json::to_writer(&mut writer, &Value::Object(obj))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Tsv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "tsv" => Ok(ReportFormat::Tsv),
            _ => Err(Error::Parse {
                source_name: "format".into(),
                line: 1,
                column: 1,
                message: format!("unknown report format {s:?} (json | tsv)"),
            }),
        }
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Anything that can be written as a JSON or TSV report.
pub trait Report {
    fn to_json(&self) -> Value;
    fn to_tsv(&self) -> String;
}

/// Serializes a report; JSON output is one document followed by a newline.
pub fn emit_report<R: Report + ?Sized>(report: &R, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&round_value(report.to_json()))
                .expect("JSON values always serialize");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Tsv => report.to_tsv().into_bytes(),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn tsv_row(out: &mut String, cells: &[&str]) {
    out.push_str(&cells.join("\t"));
    out.push('\n');
}

impl Report for PosteriorSummary {
    fn to_json(&self) -> Value {
        to_value(self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["mu", "sigma", "M", "N", "C", "D"]);
        tsv_row(
            &mut out,
            &[
                &fmt_num(self.mu),
                &fmt_num(self.sigma),
                &self.questions.to_string(),
                &self.trials.to_string(),
                &self.max_category.to_string(),
                &self.prior_depth.to_string(),
            ],
        );
        out
    }
}

impl Report for RankTable {
    fn to_json(&self) -> Value {
        to_value(self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["rank", "model_id", "mu", "sigma"]);
        for e in &self.entries {
            tsv_row(&mut out, &[&e.rank.to_string(), &e.model_id, &fmt_num(e.mu), &fmt_num(e.sigma)]);
        }
        out
    }
}

impl Report for TauCurve {
    fn to_json(&self) -> Value {
        to_value(self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["N", "value", "stderr"]);
        for p in &self.points {
            tsv_row(&mut out, &[&p.n.to_string(), &fmt_num(p.mean), &fmt_num(p.stderr)]);
        }
        out
    }
}

/// Several τ curves in one long-format table.
impl Report for [TauCurve] {
    fn to_json(&self) -> Value {
        to_value(&self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["method", "N", "value", "stderr"]);
        for c in self {
            for p in &c.points {
                tsv_row(&mut out, &[&c.method, &p.n.to_string(), &fmt_num(p.mean), &fmt_num(p.stderr)]);
            }
        }
        out
    }
}

impl Report for ConvergenceDistribution {
    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("method".into(), Value::from(self.method.clone()));
        obj.insert("n_max".into(), Value::from(self.n_max));
        obj.insert("replicates".into(), Value::from(self.replicates));
        obj.insert("censored".into(), Value::from(self.censored));
        obj.insert("censored_mass".into(), Value::from(self.censored_mass()));
        obj.insert("mean".into(), self.mean().map_or(Value::Null, Value::from));
        obj.insert("counts".into(), to_value(&self.counts));
        obj.insert("pmf".into(), to_value(&self.pmf()));
        obj.insert("cdf".into(), to_value(&self.cdf()));
        Value::Object(obj)
    }

    /// One row per `N`, then a `censored` row with the remaining mass.
    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["N", "pmf", "cdf"]);
        for (i, (p, c)) in self.pmf().iter().zip(self.cdf()).enumerate() {
            tsv_row(&mut out, &[&(i + 1).to_string(), &fmt_num(*p), &fmt_num(c)]);
        }
        tsv_row(&mut out, &["censored", &fmt_num(self.censored_mass()), "1"]);
        out
    }
}

impl Report for SeparationCurve {
    fn to_json(&self) -> Value {
        to_value(self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["N", "p_correct", "mean_z"]);
        for p in &self.points {
            tsv_row(&mut out, &[&p.n.to_string(), &fmt_num(p.p_correct), &fmt_num(p.mean_z)]);
        }
        out
    }
}

impl Report for SchemeComparison {
    fn to_json(&self) -> Value {
        to_value(self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["N", "col_mean", "row_mean", "diff", "stderr"]);
        for g in &self.gaps {
            tsv_row(
                &mut out,
                &[&g.n.to_string(), &fmt_num(g.col_mean), &fmt_num(g.row_mean), &fmt_num(g.diff), &fmt_num(g.stderr)],
            );
        }
        out
    }
}

impl Report for ThresholdSet {
    fn to_json(&self) -> Value {
        to_value(self)
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["threshold", "value"]);
        if let Value::Object(map) = to_value(self) {
            for (k, v) in map {
                tsv_row(&mut out, &[&k, &fmt_num(v.as_f64().unwrap_or(f64::NAN))]);
            }
        }
        out
    }
}

/// Free-form reports built by callers. TSV lists top-level fields as
/// `key<TAB>value`, with nested values written as compact JSON.
impl Report for Value {
    fn to_json(&self) -> Value {
        self.clone()
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        tsv_row(&mut out, &["key", "value"]);
        if let Value::Object(map) = self {
            for (k, v) in map {
                let cell = match v {
                    Value::Number(n) => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(s) => s.clone(),
                    other => {
                        let mut s = String::new();
                        let _ = write!(s, "{}", round_value(other.clone()));
                        s
                    }
                };
                tsv_row(&mut out, &[k, &cell]);
            }
        }
        out
    }
}
