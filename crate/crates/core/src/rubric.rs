//! Rubric engine: per-attempt signals to categorical outcomes.
//!
//! Signals are reduced to boolean rubric variables against per-dataset
//! thresholds. A [`Schema`] is an ordered list of rules, each a conjunction
//! of (possibly negated) variables; the first matching rule gives the
//! category. `invalid` always maps to category 0 before any rule is tried.
//!
//! Percentiles use linear interpolation between closest ranks
//! (see [`crate::numeric::percentile_linear`]).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ResultsMatrix, WeightVector};
use crate::numeric::percentile_linear;

/// Raw per-attempt signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttemptSignals {
    pub has_box: f64,
    pub is_correct: f64,
    /// Completion tokens / 32768.
    pub token_ratio: f64,
    pub repeated_pattern: u8,
    pub prompt_bpt: f64,
    pub completion_bpt: f64,
    /// Verifier probability of correct.
    pub verifier_a: f64,
    /// Verifier probability of wrong.
    pub verifier_b: f64,
    /// Verifier probability of invalid / off-task.
    pub verifier_c: f64,
}

impl AttemptSignals {
    /// A clean attempt: stopped normally, no verifier signal, median-ish everything else.
    pub fn binary(correct: bool) -> Self {
        AttemptSignals {
            has_box: 1.0,
            is_correct: if correct { 1.0 } else { 0.0 },
            token_ratio: 0.1,
            repeated_pattern: 0,
            prompt_bpt: 1.0,
            completion_bpt: 1.0,
            verifier_a: 0.0,
            verifier_b: 0.0,
            verifier_c: 0.0,
        }
    }

    fn correct(&self) -> bool {
        self.is_correct >= 0.5
    }
}

/// Per-dataset thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    /// 40th percentile of completion_bpt.
    pub tau_high: f64,
    /// 60th percentile of completion_bpt among wrong attempts.
    pub tau_low_wrong: f64,
    /// 90th percentile of prompt_bpt.
    pub tau_prompt: f64,
    pub len_p33: f64,
    pub len_p66: f64,
    /// 33rd / 66th percentiles of completion_bpt among correct attempts.
    pub corr_p33: f64,
    pub corr_p66: f64,
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn compute_thresholds(signals: &[AttemptSignals]) -> Result<ThresholdSet> {
    if signals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let completion = sorted(signals.iter().map(|s| s.completion_bpt));
    let prompt = sorted(signals.iter().map(|s| s.prompt_bpt));
    let length = sorted(signals.iter().map(|s| s.token_ratio));
    let wrong = sorted(signals.iter().filter(|s| !s.correct()).map(|s| s.completion_bpt));
    let right = sorted(signals.iter().filter(|s| s.correct()).map(|s| s.completion_bpt));
    if wrong.is_empty() {
        return Err(Error::NoWrongItems);
    }
    if right.is_empty() {
        return Err(Error::NoCorrectItems);
    }
    Ok(ThresholdSet {
        tau_high: percentile_linear(&completion, 40.0),
        tau_low_wrong: percentile_linear(&wrong, 60.0),
        tau_prompt: percentile_linear(&prompt, 90.0),
        len_p33: percentile_linear(&length, 33.0),
        len_p66: percentile_linear(&length, 66.0),
        corr_p33: percentile_linear(&right, 33.0),
        corr_p66: percentile_linear(&right, 66.0),
    })
}

/// Boolean rubric variables of one attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RubricVars {
    pub invalid: bool,
    pub correct: bool,
    pub high_conf: bool,
    pub wrong_high_conf: bool,
    pub ood: bool,
    pub economical: bool,
    pub moderate: bool,
    pub boxed: bool,
    pub a_high: bool,
    /// Correct-item confidence band: `corr_p33 < completion_bpt <= corr_p66`.
    pub mid: bool,
    /// C is the largest verifier probability.
    pub high_c: bool,
}

pub fn derive_variables(s: &AttemptSignals, t: &ThresholdSet) -> RubricVars {
    let correct = s.correct();
    RubricVars {
        invalid: s.repeated_pattern == 1 || s.verifier_c >= 0.5,
        correct,
        high_conf: s.completion_bpt <= t.tau_high,
        wrong_high_conf: !correct && s.completion_bpt <= t.tau_low_wrong,
        ood: s.prompt_bpt >= t.tau_prompt,
        economical: s.token_ratio <= t.len_p33,
        moderate: t.len_p33 < s.token_ratio && s.token_ratio <= t.len_p66,
        boxed: s.has_box >= 0.5,
        a_high: s.verifier_a >= 0.6,
        mid: t.corr_p33 < s.completion_bpt && s.completion_bpt <= t.corr_p66,
        high_c: s.verifier_c >= s.verifier_a && s.verifier_c >= s.verifier_b,
    }
}

/// A rubric variable usable in schema rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Correct,
    Wrong,
    HighConf,
    LowConf,
    WrongHighConf,
    Ood,
    Ind,
    Economical,
    Moderate,
    Verbose,
    Boxed,
    Unboxed,
    AHigh,
    Mid,
    HighC,
}

const VAR_NAMES: [(&str, Var); 15] = [
    ("correct", Var::Correct),
    ("wrong", Var::Wrong),
    ("high_conf", Var::HighConf),
    ("low_conf", Var::LowConf),
    ("wrong_high_conf", Var::WrongHighConf),
    ("ood", Var::Ood),
    ("ind", Var::Ind),
    ("economical", Var::Economical),
    ("moderate", Var::Moderate),
    ("verbose", Var::Verbose),
    ("boxed", Var::Boxed),
    ("unboxed", Var::Unboxed),
    ("a_high", Var::AHigh),
    ("mid", Var::Mid),
    ("high_c", Var::HighC),
];

impl Var {
    pub fn eval(self, v: &RubricVars) -> bool {
        match self {
            Var::Correct => v.correct,
            Var::Wrong => !v.correct,
            Var::HighConf => v.high_conf,
            Var::LowConf => !v.high_conf,
            Var::WrongHighConf => v.wrong_high_conf,
            Var::Ood => v.ood,
            Var::Ind => !v.ood,
            Var::Economical => v.economical,
            Var::Moderate => v.moderate,
            Var::Verbose => !v.economical && !v.moderate,
            Var::Boxed => v.boxed,
            Var::Unboxed => !v.boxed,
            Var::AHigh => v.a_high,
            Var::Mid => v.mid,
            Var::HighC => v.high_c,
        }
    }

    fn name(self) -> &'static str {
        VAR_NAMES.iter().find(|(_, v)| *v == self).expect("every var is named").0
    }
}

/// A variable or its negation, written `name` or `!name`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: Var,
    pub negated: bool,
}

impl FromStr for Literal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (negated, name) = match s.strip_prefix('!') {
            Some(rest) => (true, rest.trim()),
            None => (false, s),
        };
        let var = VAR_NAMES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidSchema(format!("unknown rubric variable {name:?}")))?;
        Ok(Literal { var, negated })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        f.write_str(self.var.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub category: u32,
    pub when: Vec<Literal>,
}

impl Rule {
    fn matches(&self, v: &RubricVars) -> bool {
        self.when.iter().all(|l| l.var.eval(v) != l.negated)
    }
}

/// Ordered decision rules over rubric variables, plus default weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    name: String,
    categories: u32,
    rules: Vec<Rule>,
    weights: WeightVector,
}

/// JSON form of a schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaDef {
    pub name: String,
    /// Number of categories, C + 1.
    pub categories: u32,
    pub weights: Vec<f64>,
    pub rules: Vec<RuleDef>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDef {
    pub category: u32,
    pub when: Vec<String>,
}

impl Schema {
    pub fn new(name: impl Into<String>, categories: u32, rules: Vec<Rule>, weights: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if categories < 2 {
            return Err(Error::InvalidSchema(format!("{name}: needs at least 2 categories")));
        }
        if weights.len() != categories as usize {
            return Err(Error::InvalidSchema(format!(
                "{name}: {} weights for {categories} categories",
                weights.len()
            )));
        }
        if let Some(r) = rules.iter().find(|r| r.category == 0 || r.category >= categories) {
            return Err(Error::InvalidSchema(format!(
                "{name}: rule category {} outside 1..{categories}",
                r.category
            )));
        }
        let weights = WeightVector::new(weights)?;
        Ok(Schema {
            name,
            categories,
            rules,
            weights,
        })
    }

    pub fn from_def(def: &SchemaDef) -> Result<Self> {
        let rules = def
            .rules
            .iter()
            .map(|r| {
                Ok(Rule {
                    category: r.category,
                    when: r.when.iter().map(|l| l.parse()).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Schema::new(def.name.clone(), def.categories, rules, def.weights.clone())
    }

    pub fn to_def(&self) -> SchemaDef {
        SchemaDef {
            name: self.name.clone(),
            categories: self.categories,
            weights: self.weights.as_slice().to_vec(),
            rules: self
                .rules
                .iter()
                .map(|r| RuleDef {
                    category: r.category,
                    when: r.when.iter().map(Literal::to_string).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Schema::from_def(&serde_json::from_str(text)?)
    }

    /// One of the built-in schemata by name.
    pub fn builtin(name: &str) -> Result<Self> {
        let def = BUILTIN
            .iter()
            .find(|d| d.0 == name)
            .ok_or_else(|| Error::UnknownSchema {
                name: name.to_string(),
                known: builtin_names().join(", "),
            })?;
        let rules = def
            .2
            .iter()
            .map(|(category, lits)| Rule {
                category: *category,
                when: lits.iter().map(|l| l.parse().expect("built-in literal")).collect(),
            })
            .collect();
        Schema::new(def.0, def.1, rules, def.3.to_vec())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// C + 1.
    pub fn categories(&self) -> u32 {
        self.categories
    }

    pub fn max_category(&self) -> u32 {
        self.categories - 1
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Category of an attempt from its rubric variables.
    pub fn classify(&self, v: &RubricVars) -> Result<u32> {
        if v.invalid {
            return Ok(0);
        }
        self.rules
            .iter()
            .find(|r| r.matches(v))
            .map(|r| r.category)
            .ok_or_else(|| Error::UncoveredCase {
                schema: self.name.clone(),
            })
    }

    /// Checks every point of the variable lattice; returns the first uncovered one.
    pub fn check_total(&self) -> std::result::Result<(), RubricVars> {
        variable_lattice().into_iter().try_for_each(|v| match self.classify(&v) {
            Ok(_) => Ok(()),
            Err(_) => Err(v),
        })
    }
}

pub fn categorize(s: &AttemptSignals, schema: &Schema, t: &ThresholdSet) -> Result<u32> {
    schema.classify(&derive_variables(s, t))
}

/// Every combination of the independent conditions behind the rubric variables:
/// invalid, correct, boxed, ood, a_high, high_c, high_conf, wrong-item confidence
/// (2 each), length band and correct-item confidence band (3 each). 2304 points.
pub fn variable_lattice() -> Vec<RubricVars> {
    let mut out = Vec::with_capacity(2304);
    let b = [false, true];
    for invalid in b {
        for correct in b {
            for boxed in b {
                for ood in b {
                    for a_high in b {
                        for high_c in b {
                            for high_conf in b {
                                for below_wrong in b {
                                    for length in 0..3 {
                                        for band in 0..3 {
                                            out.push(RubricVars {
                                                invalid,
                                                correct,
                                                high_conf,
                                                wrong_high_conf: !correct && below_wrong,
                                                ood,
                                                economical: length == 0,
                                                moderate: length == 1,
                                                boxed,
                                                a_high,
                                                mid: band == 1,
                                                high_c,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

type BuiltinDef = (&'static str, u32, &'static [(u32, &'static [&'static str])], &'static [f64]);

const BUILTIN: [BuiltinDef; 12] = [
    (
        "exact-match",
        3,
        &[(1, &["wrong"]), (2, &["correct"])],
        &[0.0, 0.0, 1.0],
    ),
    (
        "format-aware",
        5,
        &[
            (1, &["wrong", "unboxed"]),
            (2, &["wrong", "boxed"]),
            (3, &["correct", "unboxed"]),
            (4, &["correct", "boxed"]),
        ],
        &[0.0, 0.0, 1.0, 2.0, 3.0],
    ),
    (
        "conf-calibrated",
        6,
        &[
            (2, &["wrong_high_conf"]),
            (1, &["wrong"]),
            (4, &["correct", "mid"]),
            (5, &["correct", "high_conf"]),
            (3, &["correct", "low_conf"]),
        ],
        &[0.0, 0.0, -1.0, 1.0, 2.0, 3.0],
    ),
    (
        "ood-robustness",
        5,
        &[
            (1, &["ood", "wrong"]),
            (2, &["ind", "wrong"]),
            (3, &["ood", "correct"]),
            (4, &["ind", "correct"]),
        ],
        &[0.0, 0.0, 0.0, 1.5, 1.0],
    ),
    (
        "strict-compliance",
        3,
        &[(1, &["wrong"]), (1, &["correct", "unboxed"]), (2, &["correct", "boxed"])],
        &[0.0, 0.0, 1.0],
    ),
    (
        "conf-wrong-penalty",
        4,
        &[(1, &["wrong_high_conf"]), (2, &["wrong"]), (3, &["correct"])],
        &[0.0, -1.0, 0.0, 1.0],
    ),
    (
        "verifier-only",
        4,
        &[(3, &["a_high"]), (1, &["high_c"]), (2, &["!high_c"])],
        &[0.0, 0.0, 0.0, 1.0],
    ),
    (
        "format-confidence",
        8,
        &[
            (1, &["wrong", "unboxed"]),
            (2, &["wrong", "boxed", "low_conf"]),
            (3, &["wrong", "boxed", "high_conf"]),
            (4, &["correct", "unboxed", "low_conf"]),
            (5, &["correct", "unboxed", "high_conf"]),
            (6, &["correct", "boxed", "low_conf"]),
            (7, &["correct", "boxed", "high_conf"]),
        ],
        &[0.0, 0.0, 0.1, -0.5, 0.5, 0.6, 0.9, 1.0],
    ),
    (
        "length-robust",
        3,
        &[(1, &["wrong"]), (2, &["correct"])],
        &[0.0, 0.0, 1.0],
    ),
    (
        "verifier-probe",
        5,
        &[
            (1, &["wrong", "a_high"]),
            (2, &["wrong", "!a_high"]),
            (3, &["correct", "!a_high"]),
            (4, &["correct", "a_high"]),
        ],
        &[0.0, -0.5, 0.0, 0.75, 1.0],
    ),
    (
        "efficiency-adjusted",
        7,
        &[
            (1, &["wrong", "economical"]),
            (2, &["wrong", "moderate"]),
            (3, &["wrong", "verbose"]),
            (4, &["correct", "economical"]),
            (5, &["correct", "moderate"]),
            (6, &["correct", "verbose"]),
        ],
        &[0.0, 0.0, -0.25, -0.5, 1.0, 0.75, 0.5],
    ),
    (
        "concise-high-conf",
        6,
        &[
            (1, &["wrong"]),
            (5, &["correct", "economical", "high_conf"]),
            (4, &["correct", "economical"]),
            (3, &["correct", "moderate"]),
            (2, &["correct", "verbose"]),
        ],
        &[0.0, 0.0, 0.5, 0.75, 0.9, 1.0],
    ),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|d| d.0).collect()
}

/// One attempt's signals at a grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalRecord {
    pub question_id: String,
    pub trial: u64,
    pub signals: AttemptSignals,
    /// Verifier fields were absent and defaulted to 0.
    pub verifier_defaulted: bool,
}

/// Categorical matrix for `schema`, questions in first-appearance order and
/// trials in ascending trial-id order, plus the thresholds used.
pub fn build_matrix(records: &[SignalRecord], schema: &Schema) -> Result<(ResultsMatrix, ThresholdSet)> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let signals: Vec<AttemptSignals> = records.iter().map(|r| r.signals).collect();
    let thresholds = compute_thresholds(&signals)?;

    let mut question_index: HashMap<&str, usize> = HashMap::new();
    let mut question_ids: Vec<String> = Vec::new();
    for r in records {
        question_index.entry(&r.question_id).or_insert_with(|| {
            question_ids.push(r.question_id.clone());
            question_ids.len() - 1
        });
    }
    let trial_ids: Vec<u64> = records.iter().map(|r| r.trial).collect::<BTreeSet<_>>().into_iter().collect();
    let trial_index: HashMap<u64, usize> = trial_ids.iter().enumerate().map(|(i, &t)| (t, i)).collect();

    let n = trial_ids.len();
    let mut cells: Vec<Option<u32>> = vec![None; question_ids.len() * n];
    for (line, r) in records.iter().enumerate() {
        let cell = &mut cells[question_index[r.question_id.as_str()] * n + trial_index[&r.trial]];
        if cell.is_some() {
            return Err(Error::DuplicateCell {
                source_name: "records".into(),
                line: line as u64 + 1,
                question: r.question_id.clone(),
                trial: r.trial,
            });
        }
        *cell = Some(categorize(&r.signals, schema, &thresholds)?);
    }
    let mut out = Vec::with_capacity(cells.len());
    for (i, c) in cells.into_iter().enumerate() {
        match c {
            Some(v) => out.push(v),
            None => {
                return Err(Error::IncompleteGrid {
                    question: question_ids[i / n].clone(),
                    trial: trial_ids[i % n],
                })
            }
        }
    }
    let matrix = ResultsMatrix::from_cells(question_ids.len(), n, schema.max_category(), out)
        .with_question_ids(question_ids)?;
    Ok((matrix, thresholds))
}
