//! Proportionality assessment of face-recognition deployments on a
//! Privacy Loss x Security Harm plane.
//!
//! A scenario is placed on a grid of blocks (three privacy levels by two
//! harm levels) whose height/width ratio encodes the cultural context. The
//! implementation curve `s(h) = w * h^r - t` splits each block into an area
//! above the curve (`b_l`) and below it (`b_r`); recognition is
//! proportional for a block iff `b_r > b_l`.
//!
//! ```
//! use proplane_core::{assess, builtin_scenario, LevelTables, Overall};
//!
//! let london = builtin_scenario("london").unwrap();
//! let verdict = assess(&london, &LevelTables::default()).unwrap();
//! assert_eq!(verdict.overall, Overall::Intervention);
//! ```

pub mod assessment;
pub mod classification;
pub mod compliance;
pub mod domain;
pub mod geometry;
pub mod render;
pub mod store;
pub mod sweep;

pub use assessment::{assess, ladder_fallback};
pub use classification::{
    build_grid, classify_harm, classify_privacy, ClassificationError, ContextKind, CulturalContext,
    LevelTables,
};
pub use compliance::{build_report, match_objective, ComplianceReport, Objective, Verdict};
pub use domain::{
    make_dynamic_function, Assessment, Block, BlockSplit, Decision, DomainError, DynamicFunction,
    HarmLevel, LadderLevel, LadderRecommendation, Overall, PlaneGrid, PrivacyLevel, Scenario,
    SitePolicy, TMode, ThreatCategory, ThreatClass, DISCRETE_T, MAX_T,
};
pub use geometry::{
    crossing, decision_matrix, deployment_frontier_w, eval_s, integral_s, split_block, Crossing,
    Frontier, GeometryError,
};
pub use store::{
    builtin_scenario, builtin_scenarios, load_scenario, parse_scenario, parse_scenario_document,
    parse_scenario_json, read_document, render_assessment, serialize_scenario, write_assessment,
    ParsedScenario, StoreError, SCHEMA_VERSION,
};
