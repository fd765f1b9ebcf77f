//! Shared value types for the proportionality plane.
//!
//! Everything in here is an immutable value. Constructors validate their
//! inputs and nothing else; evaluation lives in [`crate::geometry`],
//! [`crate::classification`] and [`crate::assessment`].

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::CulturalContext;
use crate::compliance::ComplianceReport;

/// Discrete deployment-duration penalties: under a week, a couple of weeks,
/// more than a month.
pub const DISCRETE_T: [f64; 3] = [0.0, 0.25, 0.5];

/// Largest accepted duration penalty in continuous mode.
pub const MAX_T: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{field} out of range: {value} ({expected})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid block extents: {0}")]
    InvalidBlock(String),
    #[error("scenario must name at least one applicable privacy level")]
    NoPrivacyLevels,
}

/// How strictly the duration penalty `t` is validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TMode {
    /// Only the three values in [`DISCRETE_T`].
    #[default]
    Discrete,
    /// Anything in `[0, MAX_T]`; used by interactive sliders and sweeps.
    Continuous,
}

/// Parameters of the implementation curve `s(h) = w * h^r - t`.
///
/// `w` is the probability that a watchlist subject appears at the site,
/// `r` the reliability of the recognition system (think F1-score) and `t`
/// the penalty for long deployments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicFunction {
    w: f64,
    r: f64,
    t: f64,
    mode: TMode,
}

impl DynamicFunction {
    /// Validates in [`TMode::Discrete`].
    pub fn new(w: f64, r: f64, t: f64) -> Result<Self, DomainError> {
        Self::with_mode(w, r, t, TMode::Discrete)
    }

    pub fn with_mode(w: f64, r: f64, t: f64, mode: TMode) -> Result<Self, DomainError> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(DomainError::OutOfRange {
                field: "w",
                value: w,
                expected: "0 < w <= 1",
            });
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(DomainError::OutOfRange {
                field: "r",
                value: r,
                expected: "0 < r <= 1",
            });
        }
        let t_ok = match mode {
            TMode::Discrete => DISCRETE_T.contains(&t),
            TMode::Continuous => (0.0..=MAX_T).contains(&t),
        };
        if !t_ok {
            return Err(DomainError::OutOfRange {
                field: "t",
                value: t,
                expected: match mode {
                    TMode::Discrete => "t in {0, 0.25, 0.5}",
                    TMode::Continuous => "0 <= t <= 0.5",
                },
            });
        }
        Ok(Self { w, r, t, mode })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn mode(&self) -> TMode {
        self.mode
    }
}

/// Validating constructor for [`DynamicFunction`] in discrete-`t` mode.
pub fn make_dynamic_function(w: f64, r: f64, t: f64) -> Result<DynamicFunction, DomainError> {
    DynamicFunction::new(w, r, t)
}

/// Ordinate levels of the plane, ordered by increasing privacy concern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrivacyLevel {
    P1 = 1,
    P2 = 2,
    P3 = 3,
}

impl PrivacyLevel {
    pub const ALL: [PrivacyLevel; 3] = [PrivacyLevel::P1, PrivacyLevel::P2, PrivacyLevel::P3];

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Self::P1),
            2 => Some(Self::P2),
            3 => Some(Self::P3),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Typical crowd-density concern class for this level.
    pub fn density_class(self) -> u8 {
        self.index()
    }

    /// Typical site-cost concern class for this level.
    pub fn site_cost_class(self) -> u8 {
        self.index()
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::P1 => "public open space, moderate people flow",
            Self::P2 => "indoor space with restricted access",
            Self::P3 => "critical infrastructure, high people flow",
        }
    }
}

/// Abscissa levels of the plane, ordered by increasing harm severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarmLevel {
    H1 = 1,
    H2 = 2,
}

impl HarmLevel {
    pub const ALL: [HarmLevel; 2] = [HarmLevel::H1, HarmLevel::H2];

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Self::H1),
            2 => Some(Self::H2),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Threat concern class `l` that maps onto this level by default.
    pub fn harm_class(self) -> u8 {
        self.index() + 1
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::H1 => "threat to human life (murder, kidnapping, missing people)",
            Self::H2 => "terrorist attack endangering many lives",
        }
    }
}

impl fmt::Display for PrivacyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.index())
    }
}

impl fmt::Display for HarmLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.index())
    }
}

/// Axis-aligned rectangle of the plane tagged with its level coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    privacy: PrivacyLevel,
    harm: HarmLevel,
    h_lo: f64,
    h_hi: f64,
    p_lo: f64,
    p_hi: f64,
}

impl Block {
    /// Extents must be finite, non-negative and non-degenerate; the plane
    /// only covers the first quadrant.
    pub fn new(
        privacy: PrivacyLevel,
        harm: HarmLevel,
        h_lo: f64,
        h_hi: f64,
        p_lo: f64,
        p_hi: f64,
    ) -> Result<Self, DomainError> {
        let finite = [h_lo, h_hi, p_lo, p_hi].iter().all(|v| v.is_finite());
        if !finite {
            return Err(DomainError::InvalidBlock("non-finite extent".into()));
        }
        if h_lo < 0.0 || p_lo < 0.0 {
            return Err(DomainError::InvalidBlock(format!(
                "block must lie in the first quadrant (h_lo={h_lo}, p_lo={p_lo})"
            )));
        }
        if !(h_lo < h_hi) || !(p_lo < p_hi) {
            return Err(DomainError::InvalidBlock(format!(
                "empty block [{h_lo}, {h_hi}] x [{p_lo}, {p_hi}]"
            )));
        }
        Ok(Self {
            privacy,
            harm,
            h_lo,
            h_hi,
            p_lo,
            p_hi,
        })
    }

    pub fn privacy(&self) -> PrivacyLevel {
        self.privacy
    }

    pub fn harm(&self) -> HarmLevel {
        self.harm
    }

    pub fn h_lo(&self) -> f64 {
        self.h_lo
    }

    pub fn h_hi(&self) -> f64 {
        self.h_hi
    }

    pub fn p_lo(&self) -> f64 {
        self.p_lo
    }

    pub fn p_hi(&self) -> f64 {
        self.p_hi
    }

    pub fn width(&self) -> f64 {
        self.h_hi - self.h_lo
    }

    pub fn height(&self) -> f64 {
        self.p_hi - self.p_lo
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// The discretized plane: two harm columns by three privacy rows, all
/// blocks sharing one width and one height.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneGrid {
    // row-major: (p1,h1), (p1,h2), (p2,h1), (p2,h2), (p3,h1), (p3,h2)
    blocks: Vec<Block>,
    hw_ratio: f64,
    context_label: String,
}

impl PlaneGrid {
    /// Tiles the first quadrant from the origin with blocks of the given
    /// width and `width * hw_ratio` height.
    pub(crate) fn tiled(width: f64, hw_ratio: f64, context_label: String) -> Self {
        let height = width * hw_ratio;
        let mut blocks = Vec::with_capacity(6);
        for (row, privacy) in PrivacyLevel::ALL.iter().enumerate() {
            for (col, harm) in HarmLevel::ALL.iter().enumerate() {
                let (h_lo, p_lo) = (col as f64 * width, row as f64 * height);
                blocks.push(Block {
                    privacy: *privacy,
                    harm: *harm,
                    h_lo,
                    h_hi: h_lo + width,
                    p_lo,
                    p_hi: p_lo + height,
                });
            }
        }
        Self {
            blocks,
            hw_ratio,
            context_label,
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, privacy: PrivacyLevel, harm: HarmLevel) -> Block {
        let row = privacy.index() as usize - 1;
        let col = harm.index() as usize - 1;
        self.blocks[row * HarmLevel::ALL.len() + col]
    }

    pub fn hw_ratio(&self) -> f64 {
        self.hw_ratio
    }

    pub fn context_label(&self) -> &str {
        &self.context_label
    }

    pub fn h_max(&self) -> f64 {
        self.blocks.iter().map(Block::h_hi).fold(0.0, f64::max)
    }

    pub fn p_max(&self) -> f64 {
        self.blocks.iter().map(Block::p_hi).fold(0.0, f64::max)
    }
}

/// Threat descriptor `l` as supplied with a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ThreatClass {
    /// Robbery, property damage and the like. Never placed on the plane.
    MaterialOnly,
    /// Ordinal concern class; 2 is `l++`, 3 is `l+++`.
    Level(u8),
}

impl fmt::Display for ThreatClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MaterialOnly => f.write_str("material-only"),
            Self::Level(l) => write!(f, "l{}", "+".repeat(*l as usize)),
        }
    }
}

/// Kind of search the watchlist serves, used to match an AI Act objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThreatCategory {
    MissingPerson,
    ImminentThreat,
    CriminalSuspect,
    Other,
}

/// Fallback intervention when recognition is off the table for a scenario
/// that still has a security need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SitePolicy {
    #[default]
    Cctv,
    OnSiteAgent,
}

/// A deployment case to be assessed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    /// Crowd-density concern class `d` (1..=3).
    pub density: u8,
    /// Site-cost concern class `c` (1..=3).
    pub site_cost: u8,
    /// Candidate threat classes. Several levels mean the harm of the
    /// watchlist is undetermined and every candidate is evaluated; empty
    /// means there is no security need at all.
    pub threat: Vec<ThreatClass>,
    pub threat_category: ThreatCategory,
    /// Offence carries a custodial sentence of at least four years.
    pub qualifying_offence: bool,
    pub function: DynamicFunction,
    pub context: CulturalContext,
    pub privacy_levels: BTreeSet<PrivacyLevel>,
    pub site_policy: SitePolicy,
    pub authorization_obtained: bool,
    pub registration_done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Deploy,
    NotDeploy,
}

impl Decision {
    /// Strict rule; ties do not deploy.
    pub fn from_areas(b_l: f64, b_r: f64) -> Self {
        if b_r > b_l {
            Self::Deploy
        } else {
            Self::NotDeploy
        }
    }
}

/// A block cut by the implementation curve. `b_r` lies under the curve
/// (the deploy side), `b_l` above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSplit {
    pub block: Block,
    pub b_l: f64,
    pub b_r: f64,
    pub decision: Decision,
}

impl BlockSplit {
    pub fn fill_fraction(&self) -> f64 {
        self.b_r / self.block.area()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    Intervention,
    NonIntervention,
    OutOfPlane,
}

/// Escalation ladder of interventions, least to most invasive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderLevel {
    NoIntervention,
    OnSiteAgent,
    Cctv,
    FaceRecognition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRecommendation {
    pub level: LadderLevel,
    pub rationale: String,
}

/// Verdict for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub scenario_id: String,
    pub grid: PlaneGrid,
    pub function: DynamicFunction,
    pub harm_levels: BTreeSet<HarmLevel>,
    pub privacy_levels: BTreeSet<PrivacyLevel>,
    /// Row-major over (privacy, harm); empty when out of plane.
    pub splits: Vec<BlockSplit>,
    pub overall: Overall,
    pub ladder_fallback: LadderRecommendation,
    pub compliance: ComplianceReport,
}
