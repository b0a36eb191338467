//! Registry of named numerical checks, each binding one result to computed and
//! expected values, plus the JSON/CSV report writer.
//!
//! Checks are deterministic given [`VerifyConfig::seed`]; only `runtime_ms`
//! varies between runs.

mod checks;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::constructions::{ConstructionResult, Relation, SampleConfig};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Replaces every comparison tolerance when set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    /// Execution mode; results do not depend on it, so it is not reported.
    #[serde(skip)]
    pub exec: Exec,
}

impl VerifyConfig {
    pub fn with_seed(seed: u64) -> Self {
        VerifyConfig { seed, ..Default::default() }
    }

    fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn sample_config(&self, default: usize) -> SampleConfig {
        SampleConfig { samples: self.samples_or(default), seed: self.seed, exec: self.exec }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub paper_anchor: String,
    pub params: BTreeMap<String, Value>,
    pub computed: BTreeMap<String, f64>,
    pub expected: BTreeMap<String, f64>,
    /// How each computed value is compared with its expected value.
    pub relations: BTreeMap<String, Relation>,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    pub runtime_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Static description of one check.
#[derive(Clone, Copy)]
pub struct CheckInfo {
    pub id: &'static str,
    pub description: &'static str,
    /// Short statement of the result being checked.
    pub anchor: &'static str,
    /// Headline tolerance reported when no override is given.
    pub tolerance: f64,
    run: fn(&VerifyConfig, &mut Recorder) -> Result<()>,
}

impl std::fmt::Debug for CheckInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CheckInfo").field("id", &self.id).finish()
    }
}

/// Collects comparisons for one check.
pub(crate) struct Recorder {
    tol_override: Option<f64>,
    params: BTreeMap<String, Value>,
    computed: BTreeMap<String, f64>,
    expected: BTreeMap<String, f64>,
    relations: BTreeMap<String, Relation>,
    failed: bool,
}

impl Recorder {
    fn new(tol_override: Option<f64>) -> Self {
        Recorder {
            tol_override,
            params: BTreeMap::new(),
            computed: BTreeMap::new(),
            expected: BTreeMap::new(),
            relations: BTreeMap::new(),
            failed: false,
        }
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol_override.unwrap_or(default)
    }

    pub(crate) fn param(&mut self, name: &str, value: impl Serialize) {
        self.params.insert(name.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn record(&mut self, name: &str, computed: f64, expected: f64, relation: Relation, pass: bool) {
        self.computed.insert(name.into(), computed);
        self.expected.insert(name.into(), expected);
        self.relations.insert(name.into(), relation);
        self.failed |= !pass;
    }

    /// `|computed − expected| ≤ tol`.
    pub(crate) fn equal(&mut self, name: &str, computed: f64, expected: f64, tol: f64) {
        let pass = (computed - expected).abs() <= self.tol(tol);
        self.record(name, computed, expected, Relation::Equals, pass);
    }

    pub(crate) fn at_most(&mut self, name: &str, computed: f64, bound: f64, slack: f64) {
        let pass = computed <= bound + self.tol(slack);
        self.record(name, computed, bound, Relation::AtMost, pass);
    }

    pub(crate) fn at_least(&mut self, name: &str, computed: f64, bound: f64, slack: f64) {
        let pass = computed >= bound - self.tol(slack);
        self.record(name, computed, bound, Relation::AtLeast, pass);
    }

    pub(crate) fn below(&mut self, name: &str, computed: f64, bound: f64) {
        self.record(name, computed, bound, Relation::Below, computed < bound);
    }

    pub(crate) fn above(&mut self, name: &str, computed: f64, bound: f64) {
        self.record(name, computed, bound, Relation::Above, computed > bound);
    }

    /// Exact count comparison, independent of the tolerance override.
    pub(crate) fn count(&mut self, name: &str, computed: usize, expected: usize) {
        self.record(name, computed as f64, expected as f64, Relation::Equals, computed == expected);
    }

    pub(crate) fn holds(&mut self, name: &str, ok: bool) {
        self.record(name, f64::from(u8::from(ok)), 1.0, Relation::Equals, ok);
    }

    /// Folds in every side condition of a construction, under `prefix`.
    pub(crate) fn side_conditions(&mut self, prefix: &str, r: &ConstructionResult) {
        for c in &r.side_conditions {
            let name = format!("{prefix}.{}", c.name);
            let pass = match self.tol_override {
                Some(t) => c.relation.holds(c.value, c.bound, t),
                None => c.pass,
            };
            self.record(&name, c.value, c.bound, c.relation, pass);
        }
    }
}

pub fn list_checks() -> &'static [CheckInfo] {
    checks::REGISTRY
}

pub fn find_check(id: &str) -> Result<&'static CheckInfo> {
    checks::REGISTRY.iter().find(|c| c.id == id).ok_or_else(|| Error::UnknownCheck(id.into()))
}

/// Runs one check. Parameter combinations the check rejects come back as
/// `Err(InvalidParameter)`; numerical errors are recorded in the result.
pub fn run_check(id: &str, cfg: &VerifyConfig) -> Result<CheckResult> {
    match run_info(find_check(id)?, cfg) {
        (_, Some(e @ Error::InvalidParameter(_))) => Err(e),
        (r, _) => Ok(r),
    }
}

fn run_info(info: &CheckInfo, cfg: &VerifyConfig) -> (CheckResult, Option<Error>) {
    let start = Instant::now();
    let mut rec = Recorder::new(cfg.tol);
    let outcome = (info.run)(cfg, &mut rec).err();
    let error = outcome.as_ref().map(|e| e.to_string());
    let result = CheckResult {
        check_id: info.id.into(),
        paper_anchor: info.anchor.into(),
        pass: !rec.failed && error.is_none() && !rec.computed.is_empty(),
        params: rec.params,
        computed: rec.computed,
        expected: rec.expected,
        relations: rec.relations,
        tolerance: cfg.tol.unwrap_or(info.tolerance),
        seed: cfg.seed,
        runtime_ms: start.elapsed().as_millis() as u64,
        error,
    };
    (result, outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: VerifyConfig,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: VerifyConfig, mut results: Vec<CheckResult>) -> Self {
        results.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        let summary = Summary { total: results.len(), passed: results.iter().filter(|r| r.pass).count() };
        Report { config, results, summary }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.passed == self.summary.total
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per computed value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check_id,quantity,relation,computed,expected,tolerance,check_pass\n");
        for r in &self.results {
            for (name, value) in &r.computed {
                let relation = r.relations.get(name).map(|x| x.as_str()).unwrap_or("equals");
                let expected = r.expected.get(name).copied().unwrap_or(f64::NAN);
                let _ = writeln!(out, "{},{name},{relation},{value:e},{expected:e},{:e},{}", r.check_id, r.tolerance, r.pass);
            }
        }
        out
    }
}

/// Runs every registered check (in parallel when enabled), sorted by id.
pub fn run_all(cfg: &VerifyConfig) -> Report {
    let results = par::map_slice(cfg.exec, checks::REGISTRY, |info| run_info(info, cfg).0);
    Report::new(cfg.clone(), results)
}

/// Plain-language names of the results that must each have at least one check.
pub fn coverage() -> &'static [(&'static str, &'static [&'static str])] {
    checks::COVERAGE
}
