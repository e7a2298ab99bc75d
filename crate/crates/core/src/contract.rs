//! Evaluation contracts: one task's grading policy.
//!
//! A contract document is a single JSON object whose top-level keys follow
//! the portable bundle vocabulary (`task_prompt`, `reference_file`,
//! `criteria`, `passThreshold`, `metadata`). Unknown top-level keys are kept
//! in `metadata` so nothing authored in a bundle is silently lost.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Tolerance on the normalized weight total.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

/// Total weight of a normalized contract.
pub const SCORE_SCALE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContractError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("bad grader_type `{0}` (expected ExactMatch or llm-judge)")]
    BadGraderType(String),
    #[error("field `{field}` must be {expected}")]
    WrongType { field: String, expected: &'static str },
    #[error("criterion weights sum to zero")]
    ZeroTotalWeight,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("no contract documents found in {0}")]
    EmptyBundle(String),
    #[error("duplicate task_id `{0}` in bundle set")]
    DuplicateTaskId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraderType {
    ExactMatch,
    LlmJudge,
}

impl GraderType {
    pub fn as_str(self) -> &'static str {
        match self {
            GraderType::ExactMatch => "ExactMatch",
            GraderType::LlmJudge => "llm-judge",
        }
    }
}

impl fmt::Display for GraderType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraderType {
    type Err = ContractError;

    /// Case-insensitive; both bundle stylings are accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match folded.as_str() {
            "exactmatch" => Ok(GraderType::ExactMatch),
            "llmjudge" => Ok(GraderType::LlmJudge),
            _ => Err(ContractError::BadGraderType(s.to_string())),
        }
    }
}

impl Serialize for GraderType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for GraderType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Image,
    Document,
    Text,
}

impl FromStr for MediaKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "image" => Ok(MediaKind::Image),
            "document" => Ok(MediaKind::Document),
            "text" => Ok(MediaKind::Text),
            other => Err(other.to_string()),
        }
    }
}

/// A reference supplied alongside the task. Traces carry the path and the
/// content hash, never the bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub name: String,
    pub kind: MediaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

impl ReferenceFile {
    /// Hash of the inline content, or the recorded hash for path references.
    pub fn content_hash(&self) -> Option<String> {
        match (&self.sha256, &self.content) {
            (Some(h), _) => Some(h.clone()),
            (None, Some(c)) => Some(sha256_hex(c.as_bytes())),
            (None, None) => None,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub criterion_id: String,
    pub grader_type: GraderType,
    /// Reference lookup value for ExactMatch, judging instruction for llm-judge.
    #[serde(rename = "semanticPrompt")]
    pub semantic_prompt: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationContract {
    pub task_id: String,
    pub task_prompt: String,
    #[serde(rename = "reference_file", default)]
    pub reference_files: Vec<ReferenceFile>,
    pub criteria: Vec<Criterion>,
    #[serde(rename = "passThreshold")]
    pub pass_threshold: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, Value>,
}

impl EvaluationContract {
    pub fn criterion(&self, criterion_id: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.criterion_id == criterion_id)
    }

    pub fn total_weight(&self) -> f64 {
        self.criteria.iter().map(|c| c.weight).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("contract serializes")
    }

    /// Rescale weights so they sum to 100, preserving order and ratios.
    ///
    /// A contract already on the 0–100 scale is returned unchanged so that
    /// the operation is exactly idempotent.
    pub fn normalized(mut self) -> Result<Self, ContractError> {
        normalize_weights_in_place(&mut self)?;
        Ok(self)
    }
}

pub fn normalize_weights(contract: EvaluationContract) -> Result<EvaluationContract, ContractError> {
    contract.normalized()
}

fn normalize_weights_in_place(contract: &mut EvaluationContract) -> Result<(), ContractError> {
    let total = contract.total_weight();
    if !total.is_finite() || total <= 0.0 {
        return Err(ContractError::ZeroTotalWeight);
    }
    if (total - SCORE_SCALE).abs() <= 1e-9 {
        return Ok(());
    }
    for c in &mut contract.criteria {
        c.weight = SCORE_SCALE * c.weight / total;
    }
    Ok(())
}

const KNOWN_KEYS: &[&str] = &[
    "task_id",
    "task_prompt",
    "reference_file",
    "reference_files",
    "criteria",
    "passThreshold",
    "pass_threshold",
    "metadata",
];

/// Parse one contract document.
pub fn parse_bundle(raw: &str) -> Result<EvaluationContract, ContractError> {
    let value: Value =
        serde_json::from_str(raw).map_err(|e| ContractError::MalformedDocument(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(ContractError::MalformedDocument("top level must be an object".into()));
    };

    let task_id = take_string(&mut obj, &["task_id"], "task_id")?;
    let task_prompt = take_string(&mut obj, &["task_prompt"], "task_prompt")?;
    let pass_threshold = take_number(&mut obj, &["passThreshold", "pass_threshold"], "pass_threshold")?;

    let criteria_raw = take_any(&mut obj, &["criteria"]).ok_or_else(|| ContractError::MissingField("criteria".into()))?;
    let Value::Array(items) = criteria_raw else {
        return Err(ContractError::WrongType { field: "criteria".into(), expected: "an array" });
    };
    let criteria = items
        .into_iter()
        .enumerate()
        .map(|(i, item)| parse_criterion(i, item))
        .collect::<Result<Vec<_>, _>>()?;

    let reference_files = match take_any(&mut obj, &["reference_file", "reference_files"]) {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| parse_reference(&format!("reference_file[{i}]"), v))
            .collect::<Result<Vec<_>, _>>()?,
        Some(v @ Value::Object(_)) => vec![parse_reference("reference_file", v)?],
        Some(_) => {
            return Err(ContractError::WrongType {
                field: "reference_file".into(),
                expected: "an object or an array of objects",
            })
        }
    };

    let mut metadata = match take_any(&mut obj, &["metadata"]) {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(Value::Object(m)) => m.into_iter().collect(),
        Some(_) => return Err(ContractError::WrongType { field: "metadata".into(), expected: "an object" }),
    };
    for (k, v) in obj {
        debug_assert!(!KNOWN_KEYS.contains(&k.as_str()));
        metadata.entry(k).or_insert(v);
    }

    Ok(EvaluationContract { task_id, task_prompt, reference_files, criteria, pass_threshold, metadata })
}

fn parse_criterion(index: usize, value: Value) -> Result<Criterion, ContractError> {
    let prefix = format!("criteria[{index}]");
    let Value::Object(mut obj) = value else {
        return Err(ContractError::WrongType { field: prefix, expected: "an object" });
    };
    let criterion_id = take_string(&mut obj, &["criterion_id", "id"], &format!("{prefix}.criterion_id"))?;
    let grader_raw = take_string(&mut obj, &["grader_type"], &format!("{prefix}.grader_type"))?;
    let grader_type = grader_raw.parse()?;
    let semantic_prompt =
        take_string(&mut obj, &["semanticPrompt", "semantic_prompt"], &format!("{prefix}.semanticPrompt"))?;
    let weight = take_number(&mut obj, &["weight"], &format!("{prefix}.weight"))?;
    Ok(Criterion { criterion_id, grader_type, semantic_prompt, weight })
}

fn parse_reference(field: &str, value: Value) -> Result<ReferenceFile, ContractError> {
    let Value::Object(mut obj) = value else {
        return Err(ContractError::WrongType { field: field.into(), expected: "an object" });
    };
    let name = take_string(&mut obj, &["name"], &format!("{field}.name"))?;
    let kind_raw = take_string(&mut obj, &["kind", "media_kind"], &format!("{field}.kind"))?;
    let kind = kind_raw.parse().map_err(|_| ContractError::WrongType {
        field: format!("{field}.kind"),
        expected: "one of image, document, text",
    })?;
    let path = take_opt_string(&mut obj, "path", field)?;
    let content = take_opt_string(&mut obj, "content", field)?;
    let sha256 = take_opt_string(&mut obj, "sha256", field)?;
    Ok(ReferenceFile { name, kind, path, content, sha256 })
}

fn take_any(obj: &mut Map<String, Value>, keys: &[&str]) -> Option<Value> {
    let mut found = None;
    for k in keys {
        if let Some(v) = obj.remove(*k) {
            found.get_or_insert(v);
        }
    }
    found
}

fn take_string(obj: &mut Map<String, Value>, keys: &[&str], field: &str) -> Result<String, ContractError> {
    match take_any(obj, keys) {
        None | Some(Value::Null) => Err(ContractError::MissingField(field.to_string())),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ContractError::WrongType { field: field.to_string(), expected: "a string" }),
    }
}

fn take_opt_string(obj: &mut Map<String, Value>, key: &str, parent: &str) -> Result<Option<String>, ContractError> {
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(ContractError::WrongType { field: format!("{parent}.{key}"), expected: "a string" }),
    }
}

fn take_number(obj: &mut Map<String, Value>, keys: &[&str], field: &str) -> Result<f64, ContractError> {
    match take_any(obj, keys) {
        None | Some(Value::Null) => Err(ContractError::MissingField(field.to_string())),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| ContractError::WrongType { field: field.to_string(), expected: "a finite number" }),
        Some(_) => Err(ContractError::WrongType { field: field.to_string(), expected: "a number" }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every violated invariant of one contract. Empty means runnable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub task_id: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_runnable(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }
}

pub fn validate_contract(contract: &EvaluationContract) -> ValidationReport {
    let mut report = ValidationReport { task_id: contract.task_id.clone(), violations: Vec::new() };

    if contract.task_id.trim().is_empty() {
        report.push("task_id", "task_id is empty");
    } else if contract.task_id.contains(['/', '\\']) || contract.task_id == "." || contract.task_id == ".." {
        report.push("task_id", "task_id must not contain path separators");
    }
    if contract.task_prompt.trim().is_empty() {
        report.push("task_prompt", "task_prompt is empty");
    }
    if !contract.pass_threshold.is_finite() || !(0.0..=SCORE_SCALE).contains(&contract.pass_threshold) {
        report.push("pass_threshold", format!("pass_threshold out of [0,100]: {}", contract.pass_threshold));
    }
    if contract.criteria.is_empty() {
        report.push("criteria", "contract has no criteria");
    }

    let mut seen = HashSet::new();
    for (i, c) in contract.criteria.iter().enumerate() {
        let label = if c.criterion_id.is_empty() { format!("criteria[{i}]") } else { c.criterion_id.clone() };
        if c.criterion_id.trim().is_empty() {
            report.push(format!("criteria[{i}].criterion_id"), "criterion_id is empty");
        } else if !seen.insert(c.criterion_id.as_str()) {
            report.push(format!("criteria[{i}].criterion_id"), format!("duplicate criterion_id {label}"));
        }
        if c.semantic_prompt.trim().is_empty() {
            report.push(format!("criteria[{i}].semanticPrompt"), format!("criterion {label} has an empty semanticPrompt"));
        }
        if !c.weight.is_finite() || c.weight < 0.0 {
            report.push(format!("criteria[{i}].weight"), format!("criterion {label} has invalid weight {}", c.weight));
        }
    }
    if !contract.criteria.is_empty() && !contract.criteria.iter().any(|c| c.weight > 0.0) {
        report.push("criteria", "no criterion has positive weight");
    }

    for (i, r) in contract.reference_files.iter().enumerate() {
        if r.path.is_none() && r.content.is_none() {
            report.push(format!("reference_file[{i}]"), format!("reference {} has neither path nor content", r.name));
        }
    }
    report
}

/// Validate a set of contracts, including cross-contract task_id uniqueness.
pub fn validate_bundle_set(contracts: &[EvaluationContract]) -> Vec<ValidationReport> {
    let mut seen = HashSet::new();
    contracts
        .iter()
        .map(|c| {
            let mut report = validate_contract(c);
            if !seen.insert(c.task_id.as_str()) {
                report.push("task_id", format!("duplicate task_id {} in bundle set", c.task_id));
            }
            report
        })
        .collect()
}

/// A contract together with the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedContract {
    pub source: PathBuf,
    pub contract: EvaluationContract,
}

/// Load a bundle from a single contract file or a bundle directory.
///
/// A directory holds one `*.json` contract per task plus an optional
/// `references/` subdirectory; relative reference paths resolve against it
/// and their content hashes are recorded.
pub fn load_bundle(path: &Path) -> Result<Vec<LoadedContract>, ContractError> {
    let io_err = |p: &Path, e: std::io::Error| ContractError::Io { path: p.display().to_string(), message: e.to_string() };
    let meta = fs::metadata(path).map_err(|e| io_err(path, e))?;

    let (files, base) = if meta.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| io_err(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        (files, path.to_path_buf())
    } else {
        (vec![path.to_path_buf()], path.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    if files.is_empty() {
        return Err(ContractError::EmptyBundle(path.display().to_string()));
    }

    let references_dir = base.join("references");
    files
        .into_iter()
        .map(|file| {
            let raw = fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
            let mut contract = parse_bundle(&raw).map_err(|e| match e {
                ContractError::MalformedDocument(m) => ContractError::MalformedDocument(format!("{}: {m}", file.display())),
                other => other,
            })?;
            for r in &mut contract.reference_files {
                if let (Some(rel), None) = (&r.path, &r.sha256) {
                    let candidate = Path::new(rel);
                    let resolved =
                        if candidate.is_absolute() { candidate.to_path_buf() } else { references_dir.join(candidate) };
                    let bytes = fs::read(&resolved).map_err(|e| io_err(&resolved, e))?;
                    r.sha256 = Some(sha256_hex(&bytes));
                }
            }
            Ok(LoadedContract { source: file, contract })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
        "task_id": "t1",
        "task_prompt": "What is six times seven?",
        "criteria": [
            {"criterion_id": "c1", "grader_type": "ExactMatch", "semanticPrompt": "42", "weight": 1}
        ],
        "passThreshold": 100
    }"#;

    fn contract_with_weights(weights: &[f64]) -> EvaluationContract {
        EvaluationContract {
            task_id: "t".into(),
            task_prompt: "p".into(),
            reference_files: vec![],
            criteria: weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Criterion {
                    criterion_id: format!("c{i}"),
                    grader_type: GraderType::LlmJudge,
                    semantic_prompt: "judge it".into(),
                    weight: w,
                })
                .collect(),
            pass_threshold: 50.0,
            metadata: BTreeMap::new(),
        }
    }

    fn weights_of(c: &EvaluationContract) -> Vec<f64> {
        c.criteria.iter().map(|c| c.weight).collect()
    }

    #[test]
    fn minimal_bundle_parses() {
        let c = parse_bundle(MINIMAL).unwrap();
        assert_eq!(c.criteria.len(), 1);
        assert_eq!(c.criteria[0].grader_type, GraderType::ExactMatch);
        assert_eq!(c.pass_threshold, 100.0);
        assert!(c.reference_files.is_empty());
        assert!(validate_contract(&c).is_runnable());
    }

    #[test]
    fn missing_pass_threshold() {
        let raw = MINIMAL.replace(r#""passThreshold": 100"#, r#""other": 1"#);
        assert_eq!(parse_bundle(&raw).unwrap_err(), ContractError::MissingField("pass_threshold".into()));
    }

    #[test]
    fn snake_case_threshold_accepted() {
        let raw = MINIMAL.replace("passThreshold", "pass_threshold");
        assert_eq!(parse_bundle(&raw).unwrap().pass_threshold, 100.0);
    }

    #[test]
    fn grader_type_spellings() {
        for s in ["llm-judge", "LlmJudge", "LLM_JUDGE", "llmjudge"] {
            assert_eq!(s.parse::<GraderType>().unwrap(), GraderType::LlmJudge, "{s}");
        }
        for s in ["ExactMatch", "exact-match", "EXACT_MATCH"] {
            assert_eq!(s.parse::<GraderType>().unwrap(), GraderType::ExactMatch, "{s}");
        }
        let raw = MINIMAL.replace(r#""ExactMatch""#, r#""llm-judge""#);
        assert_eq!(parse_bundle(&raw).unwrap().criteria[0].grader_type, GraderType::LlmJudge);
        let raw = MINIMAL.replace(r#""ExactMatch""#, r#""rubric""#);
        assert_eq!(parse_bundle(&raw).unwrap_err(), ContractError::BadGraderType("rubric".into()));
    }

    #[test]
    fn malformed_and_missing_criterion_field() {
        assert!(matches!(parse_bundle("{not json"), Err(ContractError::MalformedDocument(_))));
        assert!(matches!(parse_bundle("[]"), Err(ContractError::MalformedDocument(_))));
        let raw = MINIMAL.replace(r#""weight": 1"#, r#""w": 1"#);
        assert_eq!(parse_bundle(&raw).unwrap_err(), ContractError::MissingField("criteria[0].weight".into()));
    }

    #[test]
    fn unknown_fields_land_in_metadata() {
        let raw = MINIMAL.replace(r#""passThreshold": 100"#, r#""passThreshold": 100, "author": "x", "metadata": {"suite": "s"}"#);
        let c = parse_bundle(&raw).unwrap();
        assert_eq!(c.metadata["author"], Value::String("x".into()));
        assert_eq!(c.metadata["suite"], Value::String("s".into()));
    }

    #[test]
    fn single_reference_object() {
        let raw = MINIMAL.replace(
            r#""passThreshold": 100"#,
            r#""passThreshold": 100, "reference_file": {"name": "fig", "kind": "image", "path": "fig.png"}"#,
        );
        let c = parse_bundle(&raw).unwrap();
        assert_eq!(c.reference_files.len(), 1);
        assert_eq!(c.reference_files[0].kind, MediaKind::Image);
    }

    #[test]
    fn normalize_examples() {
        let n = contract_with_weights(&[1.0, 1.0, 1.0, 1.0]).normalized().unwrap();
        assert_eq!(weights_of(&n), vec![25.0; 4]);
        let n = contract_with_weights(&[40.0, 60.0]).normalized().unwrap();
        assert_eq!(weights_of(&n), vec![40.0, 60.0]);
        // 100·w/Σw with Σw = 10
        let n = contract_with_weights(&[2.0, 3.0, 5.0]).normalized().unwrap();
        assert_eq!(weights_of(&n), vec![20.0, 30.0, 50.0]);
        assert_eq!(contract_with_weights(&[0.0, 0.0]).normalized().unwrap_err(), ContractError::ZeroTotalWeight);
    }

    #[test]
    fn validation_entries() {
        let mut c = contract_with_weights(&[50.0, 50.0]);
        assert!(validate_contract(&c).is_runnable());
        c.pass_threshold = 150.0;
        c.criteria[1].semantic_prompt = "  ".into();
        let report = validate_contract(&c);
        assert_eq!(report.violations.len(), 2);
        assert_eq!(report.violations[0].path, "pass_threshold");
        assert!(report.violations[0].message.contains("pass_threshold out of [0,100]"));
        assert!(report.violations[1].message.contains("c1"));
    }

    #[test]
    fn validation_zero_weights_and_duplicates() {
        let mut c = contract_with_weights(&[0.0, 0.0]);
        c.criteria[1].criterion_id = "c0".into();
        let report = validate_contract(&c);
        assert!(report.violations.iter().any(|v| v.message.contains("positive weight")));
        assert!(report.violations.iter().any(|v| v.message.contains("duplicate criterion_id")));

        let reports = validate_bundle_set(&[contract_with_weights(&[1.0]), contract_with_weights(&[1.0])]);
        assert!(reports[0].is_runnable());
        assert!(!reports[1].is_runnable());
    }

    #[test]
    fn load_directory_resolves_references() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("references")).unwrap();
        fs::write(dir.path().join("references/notes.txt"), b"hello").unwrap();
        let raw = MINIMAL.replace(
            r#""passThreshold": 100"#,
            r#""passThreshold": 100, "reference_file": [{"name": "notes", "kind": "text", "path": "notes.txt"}]"#,
        );
        fs::write(dir.path().join("t1.json"), raw).unwrap();
        let loaded = load_bundle(dir.path()).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].contract.reference_files[0].sha256.as_deref(), Some(sha256_hex(b"hello").as_str()));

        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_bundle(empty.path()), Err(ContractError::EmptyBundle(_))));
    }

    fn arb_contract() -> impl Strategy<Value = EvaluationContract> {
        (
            "[a-z0-9]{1,8}",
            ".{1,40}",
            proptest::collection::vec((any::<bool>(), "[a-zA-Z ]{1,20}", 0.0f64..1000.0), 1..8),
            0.0f64..=100.0,
        )
            .prop_map(|(task_id, task_prompt, crits, tau)| EvaluationContract {
                task_id,
                task_prompt,
                reference_files: vec![],
                criteria: crits
                    .into_iter()
                    .enumerate()
                    .map(|(i, (exact, prompt, w))| Criterion {
                        criterion_id: format!("c{i}"),
                        grader_type: if exact { GraderType::ExactMatch } else { GraderType::LlmJudge },
                        semantic_prompt: prompt,
                        weight: w,
                    })
                    .collect(),
                pass_threshold: tau,
                metadata: BTreeMap::new(),
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(c in arb_contract()) {
            prop_assert_eq!(parse_bundle(&c.to_json()).unwrap(), c);
        }

        #[test]
        fn normalization_idempotent_and_ratio_preserving(
            weights in proptest::collection::vec(0.0f64..1000.0, 1..12).prop_filter("positive", |w| w.iter().sum::<f64>() > 1e-3)
        ) {
            let once = contract_with_weights(&weights).normalized().unwrap();
            let twice = once.clone().normalized().unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!((once.total_weight() - 100.0).abs() <= WEIGHT_SUM_TOLERANCE);
            let w1 = weights_of(&once);
            for i in 0..weights.len() {
                for j in 0..weights.len() {
                    if weights[j] > 0.0 && w1[j] > 0.0 {
                        let before = weights[i] / weights[j];
                        let after = w1[i] / w1[j];
                        prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1e-300));
                    }
                }
            }
        }
    }
}
