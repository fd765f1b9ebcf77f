//! Scenario documents, built-in case studies and assessment output.
//!
//! Scenario files are TOML with a strict, versioned schema: unknown fields
//! are rejected and `schema_version` must equal [`SCHEMA_VERSION`]. The
//! same schema is accepted as JSON by the HTTP service. Assessments are
//! written as pretty-printed JSON with areas rounded to 12 significant
//! digits, so output is byte-stable for identical input.

use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::classification::{ContextKind, CulturalContext, LevelTables};
use crate::compliance::ComplianceReport;
use crate::domain::{
    Assessment, Decision, DomainError, DynamicFunction, HarmLevel, LadderRecommendation, Overall,
    PrivacyLevel, Scenario, SitePolicy, TMode, ThreatCategory, ThreatClass,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{} is locked by another writer", .0.display())]
    Busy(PathBuf),
}

impl StoreError {
    fn validation(field: impl Into<String>, reason: impl ToString) -> Self {
        Self::Validation {
            field: field.into(),
            reason: reason.to_string(),
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Offending field for validation errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Scenario documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub schema_version: u32,
    pub scenario: ScenarioRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<OverridesRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub density: u8,
    pub site_cost: u8,
    pub threat: Vec<ThreatRecord>,
    pub threat_category: ThreatCategory,
    #[serde(default)]
    pub qualifying_offence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ContextRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy_levels: Option<Vec<u8>>,
    #[serde(default)]
    pub site_policy: SitePolicy,
    #[serde(default)]
    pub authorization_obtained: bool,
    #[serde(default)]
    pub registration_done: bool,
    pub function: FunctionRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionRecord {
    pub w: f64,
    pub r: f64,
    pub t: f64,
    #[serde(default)]
    pub t_mode: TMode,
}

/// `2`, `3` or `"material-only"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThreatRecord {
    Level(i64),
    Tag(String),
}

/// A preset name or a numeric H/W ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContextRecord {
    Ratio(f64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverridesRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<TablesRecord>,
}

/// `privacy[d-1][c-1]` is a privacy index 1..=3; `harm` entries are
/// `"h1"`, `"h2"` or `"none"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesRecord {
    pub privacy: Vec<Vec<u8>>,
    pub harm: HarmTableRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmTableRecord {
    pub l2: String,
    pub l3: String,
}

/// A validated scenario together with the level tables it is assessed
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub scenario: Scenario,
    pub tables: LevelTables,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, StoreError> {
    parse_scenario_document(text).map(|p| p.scenario)
}

pub fn parse_scenario_document(text: &str) -> Result<ParsedScenario, StoreError> {
    validate_document(&read_document(text)?)
}

/// The TOML document as written, checked for syntax and unknown fields
/// but not yet validated.
pub fn read_document(text: &str) -> Result<ScenarioDocument, StoreError> {
    toml::from_str(text).map_err(|e| StoreError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })
}

/// The scenario schema carried as JSON, e.g. in HTTP bodies.
pub fn parse_scenario_json(bytes: &[u8]) -> Result<ParsedScenario, StoreError> {
    let doc: ScenarioDocument = serde_json::from_slice(bytes).map_err(|e| StoreError::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    validate_document(&doc)
}

pub fn load_scenario(path: &Path) -> Result<ParsedScenario, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    parse_scenario_document(&text)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn validate_document(doc: &ScenarioDocument) -> Result<ParsedScenario, StoreError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(StoreError::validation(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                doc.schema_version
            ),
        ));
    }
    let s = &doc.scenario;
    if s.id.trim().is_empty() {
        return Err(StoreError::validation("scenario.id", "must not be empty"));
    }

    let tables = match doc.overrides.as_ref().and_then(|o| o.tables.as_ref()) {
        Some(t) => tables_from_record(t)?,
        None => LevelTables::default(),
    };
    let default_privacy = tables
        .classify_privacy(s.density, s.site_cost)
        .map_err(|e| {
            let field = if (1..=3).contains(&s.density) {
                "scenario.site_cost"
            } else {
                "scenario.density"
            };
            StoreError::validation(field, e)
        })?;

    let threat = s
        .threat
        .iter()
        .map(|t| match t {
            ThreatRecord::Level(l @ 2..=3) => Ok(ThreatClass::Level(*l as u8)),
            ThreatRecord::Tag(tag) if tag == "material-only" => Ok(ThreatClass::MaterialOnly),
            ThreatRecord::Level(l) => Err(StoreError::validation(
                "scenario.threat",
                format!("unknown harm class {l}, expected 2, 3 or \"material-only\""),
            )),
            ThreatRecord::Tag(tag) => Err(StoreError::validation(
                "scenario.threat",
                format!("unknown harm class {tag:?}, expected 2, 3 or \"material-only\""),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let f = &s.function;
    let function = DynamicFunction::with_mode(f.w, f.r, f.t, f.t_mode).map_err(|e| match e {
        DomainError::OutOfRange { field, .. } => {
            StoreError::validation(format!("scenario.function.{field}"), e)
        }
        other => StoreError::validation("scenario.function", other),
    })?;

    let mut context = match &s.context {
        None => CulturalContext::default(),
        Some(ContextRecord::Ratio(r)) => CulturalContext::custom(*r)
            .map_err(|e| StoreError::validation("scenario.context", e))?,
        Some(ContextRecord::Name(name)) => match name.as_str() {
            "tolerant" => CulturalContext::tolerant(),
            "moderate" => CulturalContext::moderate(),
            "conservative" => CulturalContext::conservative(),
            other => {
                return Err(StoreError::validation(
                    "scenario.context",
                    format!("unknown context {other:?}"),
                ))
            }
        },
    };
    if let Some(ratio) = doc.overrides.as_ref().and_then(|o| o.ratio) {
        context = CulturalContext::custom(ratio)
            .map_err(|e| StoreError::validation("overrides.ratio", e))?;
    }

    let privacy_levels: BTreeSet<PrivacyLevel> = match &s.privacy_levels {
        None => [default_privacy].into_iter().collect(),
        Some(levels) => {
            if levels.is_empty() {
                return Err(StoreError::validation(
                    "scenario.privacy_levels",
                    DomainError::NoPrivacyLevels,
                ));
            }
            levels
                .iter()
                .map(|n| {
                    PrivacyLevel::from_index(*n).ok_or_else(|| {
                        StoreError::validation(
                            "scenario.privacy_levels",
                            format!("unknown privacy level {n}, expected 1..=3"),
                        )
                    })
                })
                .collect::<Result<_, _>>()?
        }
    };

    Ok(ParsedScenario {
        scenario: Scenario {
            id: s.id.clone(),
            description: s.description.clone(),
            density: s.density,
            site_cost: s.site_cost,
            threat,
            threat_category: s.threat_category,
            qualifying_offence: s.qualifying_offence,
            function,
            context,
            privacy_levels,
            site_policy: s.site_policy,
            authorization_obtained: s.authorization_obtained,
            registration_done: s.registration_done,
        },
        tables,
    })
}

fn tables_from_record(t: &TablesRecord) -> Result<LevelTables, StoreError> {
    let field = "overrides.tables.privacy";
    if t.privacy.len() != 3 || t.privacy.iter().any(|row| row.len() != 3) {
        return Err(StoreError::validation(field, "expected a 3x3 matrix"));
    }
    let mut privacy = [[PrivacyLevel::P1; 3]; 3];
    for (d, row) in t.privacy.iter().enumerate() {
        for (c, n) in row.iter().enumerate() {
            privacy[d][c] = PrivacyLevel::from_index(*n).ok_or_else(|| {
                StoreError::validation(field, format!("unknown privacy level {n}"))
            })?;
        }
    }
    let harm_entry = |field: &str, v: &str| match v {
        "h1" => Ok(Some(HarmLevel::H1)),
        "h2" => Ok(Some(HarmLevel::H2)),
        "none" => Ok(None),
        other => Err(StoreError::validation(
            field,
            format!("expected \"h1\", \"h2\" or \"none\", got {other:?}"),
        )),
    };
    let harm = [
        harm_entry("overrides.tables.harm.l2", &t.harm.l2)?,
        harm_entry("overrides.tables.harm.l3", &t.harm.l3)?,
    ];
    LevelTables::new(privacy, harm).map_err(|e| StoreError::validation("overrides.tables", e))
}

pub fn scenario_document(scenario: &Scenario) -> ScenarioDocument {
    let f = &scenario.function;
    let context = match scenario.context.kind() {
        ContextKind::Custom => ContextRecord::Ratio(scenario.context.hw_ratio()),
        kind => ContextRecord::Name(kind.name().to_string()),
    };
    ScenarioDocument {
        schema_version: SCHEMA_VERSION,
        scenario: ScenarioRecord {
            id: scenario.id.clone(),
            description: scenario.description.clone(),
            density: scenario.density,
            site_cost: scenario.site_cost,
            threat: scenario
                .threat
                .iter()
                .map(|t| match t {
                    ThreatClass::MaterialOnly => ThreatRecord::Tag("material-only".into()),
                    ThreatClass::Level(l) => ThreatRecord::Level(i64::from(*l)),
                })
                .collect(),
            threat_category: scenario.threat_category,
            qualifying_offence: scenario.qualifying_offence,
            context: Some(context),
            privacy_levels: Some(scenario.privacy_levels.iter().map(|p| p.index()).collect()),
            site_policy: scenario.site_policy,
            authorization_obtained: scenario.authorization_obtained,
            registration_done: scenario.registration_done,
            function: FunctionRecord {
                w: f.w(),
                r: f.r(),
                t: f.t(),
                t_mode: f.mode(),
            },
        },
        overrides: None,
    }
}

/// TOML text that [`parse_scenario`] turns back into the same scenario.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    toml::to_string(&scenario_document(scenario)).expect("scenario records always serialize")
}

// ---------------------------------------------------------------------------
// Built-in case studies

const MET_TOML: &str = include_str!("../fixtures/met.toml");
const LONDON_TOML: &str = include_str!("../fixtures/london.toml");
const BRONDBY_TOML: &str = include_str!("../fixtures/brondby.toml");

/// `(name, TOML source)` of the bundled case studies.
pub const BUILTIN_SOURCES: [(&str, &str); 3] = [
    ("met", MET_TOML),
    ("london", LONDON_TOML),
    ("brondby", BRONDBY_TOML),
];

/// Metropolitan Police live trials, London escapee search, Brøndby stadium.
pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_SOURCES
        .iter()
        .map(|(name, src)| {
            parse_scenario(src).unwrap_or_else(|e| panic!("bundled fixture {name} is invalid: {e}"))
        })
        .collect()
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse_scenario(src).expect("bundled fixtures are valid"))
}

// ---------------------------------------------------------------------------
// Assessment output

fn sig12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig12(*x))
}

/// Rounds to 12 significant decimal digits.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentDocument {
    pub schema_version: u32,
    pub scenario_id: String,
    pub context: ContextOut,
    pub function: FunctionOut,
    pub privacy_levels: Vec<PrivacyLevel>,
    pub harm_levels: Vec<HarmLevel>,
    pub grid: Vec<BlockOut>,
    pub splits: Vec<SplitOut>,
    pub overall: Overall,
    pub ladder: LadderRecommendation,
    pub compliance: ComplianceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextOut {
    pub name: String,
    #[serde(serialize_with = "sig12")]
    pub hw_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionOut {
    pub w: f64,
    pub r: f64,
    pub t: f64,
    pub t_mode: TMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockOut {
    pub privacy: PrivacyLevel,
    pub harm: HarmLevel,
    #[serde(serialize_with = "sig12")]
    pub h_lo: f64,
    #[serde(serialize_with = "sig12")]
    pub h_hi: f64,
    #[serde(serialize_with = "sig12")]
    pub p_lo: f64,
    #[serde(serialize_with = "sig12")]
    pub p_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOut {
    pub privacy: PrivacyLevel,
    pub harm: HarmLevel,
    #[serde(serialize_with = "sig12")]
    pub area: f64,
    #[serde(serialize_with = "sig12")]
    pub b_l: f64,
    #[serde(serialize_with = "sig12")]
    pub b_r: f64,
    pub decision: Decision,
}

impl From<&crate::domain::Block> for BlockOut {
    fn from(b: &crate::domain::Block) -> Self {
        Self {
            privacy: b.privacy(),
            harm: b.harm(),
            h_lo: b.h_lo(),
            h_hi: b.h_hi(),
            p_lo: b.p_lo(),
            p_hi: b.p_hi(),
        }
    }
}

pub fn assessment_document(a: &Assessment) -> AssessmentDocument {
    AssessmentDocument {
        schema_version: SCHEMA_VERSION,
        scenario_id: a.scenario_id.clone(),
        context: ContextOut {
            name: a.grid.context_label().to_string(),
            hw_ratio: a.grid.hw_ratio(),
        },
        function: FunctionOut {
            w: a.function.w(),
            r: a.function.r(),
            t: a.function.t(),
            t_mode: a.function.mode(),
        },
        privacy_levels: a.privacy_levels.iter().copied().collect(),
        harm_levels: a.harm_levels.iter().copied().collect(),
        grid: a.grid.blocks().iter().map(BlockOut::from).collect(),
        splits: a
            .splits
            .iter()
            .map(|s| SplitOut {
                privacy: s.block.privacy(),
                harm: s.block.harm(),
                area: s.block.area(),
                b_l: s.b_l,
                b_r: s.b_r,
                decision: s.decision,
            })
            .collect(),
        overall: a.overall,
        ladder: a.ladder_fallback.clone(),
        compliance: a.compliance.clone(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn render_assessment(a: &Assessment) -> String {
    let mut out =
        serde_json::to_string_pretty(&assessment_document(a)).expect("documents always serialize");
    out.push('\n');
    out
}

pub fn write_assessment(a: &Assessment, destination: &Path) -> Result<(), StoreError> {
    write_exclusive(destination, render_assessment(a).as_bytes())
}

/// Writes `bytes` to `destination` through a sibling lock file. A second
/// writer that finds the lock fails with [`StoreError::Busy`] instead of
/// racing the first.
pub fn write_exclusive(destination: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let lock_path = sibling(destination, ".lock");
    let lock = match OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&lock_path)
    {
        Ok(file) => LockGuard {
            path: lock_path,
            _file: file,
        },
        Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
            return Err(StoreError::Busy(destination.to_path_buf()))
        }
        Err(e) => return Err(StoreError::io(destination, e)),
    };

    let tmp = sibling(destination, ".tmp");
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, destination)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    drop(lock);
    result.map_err(|e| StoreError::io(destination, e))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

struct LockGuard {
    path: PathBuf,
    _file: fs::File,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
