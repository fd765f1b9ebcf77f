//! Mapping of site and threat descriptors onto plane levels, and canonical
//! grids for cultural contexts.

use std::fmt;

use thiserror::Error;

use crate::domain::{HarmLevel, PlaneGrid, PrivacyLevel, ThreatClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassificationError {
    #[error("unknown {what} class {value}")]
    UnknownClass { what: &'static str, value: String },
    #[error("level table is not monotone: {0}")]
    NonMonotone(String),
    #[error("H/W ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextKind {
    Tolerant,
    Moderate,
    Conservative,
    Custom,
}

impl ContextKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tolerant => "tolerant",
            Self::Moderate => "moderate",
            Self::Conservative => "conservative",
            Self::Custom => "custom",
        }
    }
}

/// A society's privacy-vs-security stance, encoded as the height/width
/// ratio of plane blocks. Taller blocks make deployment harder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CulturalContext {
    kind: ContextKind,
    hw_ratio: f64,
}

impl CulturalContext {
    pub const fn tolerant() -> Self {
        Self {
            kind: ContextKind::Tolerant,
            hw_ratio: 3.0 / 13.0,
        }
    }

    pub const fn moderate() -> Self {
        Self {
            kind: ContextKind::Moderate,
            hw_ratio: 3.0 / 9.0,
        }
    }

    pub const fn conservative() -> Self {
        Self {
            kind: ContextKind::Conservative,
            hw_ratio: 3.0 / 5.0,
        }
    }

    pub fn custom(hw_ratio: f64) -> Result<Self, ClassificationError> {
        if !(hw_ratio > 0.0 && hw_ratio.is_finite()) {
            return Err(ClassificationError::InvalidRatio(hw_ratio));
        }
        Ok(Self {
            kind: ContextKind::Custom,
            hw_ratio,
        })
    }

    pub fn presets() -> [Self; 3] {
        [Self::tolerant(), Self::moderate(), Self::conservative()]
    }

    /// Parses a preset name or a positive number.
    pub fn parse(spec: &str) -> Result<Self, ClassificationError> {
        match spec.trim() {
            "tolerant" => Ok(Self::tolerant()),
            "moderate" => Ok(Self::moderate()),
            "conservative" => Ok(Self::conservative()),
            other => match other.parse::<f64>() {
                Ok(v) => Self::custom(v),
                Err(_) => Err(ClassificationError::UnknownClass {
                    what: "cultural context",
                    value: other.to_string(),
                }),
            },
        }
    }

    pub fn kind(&self) -> ContextKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn hw_ratio(&self) -> f64 {
        self.hw_ratio
    }
}

impl Default for CulturalContext {
    fn default() -> Self {
        Self::moderate()
    }
}

impl fmt::Display for CulturalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ContextKind::Custom => write!(f, "custom({})", self.hw_ratio),
            kind => write!(f, "{} ({})", kind.name(), self.hw_ratio),
        }
    }
}

/// Lookup tables for `p = f(d, c)` and `h = g(d, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTables {
    // privacy[d - 1][c - 1]
    privacy: [[PrivacyLevel; 3]; 3],
    // harm[l - 2] for l in {2, 3}; None keeps the threat off the plane
    harm: [Option<HarmLevel>; 2],
}

impl Default for LevelTables {
    /// Diagonal of the site table as published, off-diagonal pairs take
    /// the larger concern; `l++` is `h1` and `l+++` is `h2`.
    fn default() -> Self {
        let mut privacy = [[PrivacyLevel::P1; 3]; 3];
        for (d, row) in privacy.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = PrivacyLevel::from_index(d.max(c) as u8 + 1).expect("index in 1..=3");
            }
        }
        Self {
            privacy,
            harm: [Some(HarmLevel::H1), Some(HarmLevel::H2)],
        }
    }
}

impl LevelTables {
    /// Rejects tables where a higher concern maps to a lower level.
    pub fn new(
        privacy: [[PrivacyLevel; 3]; 3],
        harm: [Option<HarmLevel>; 2],
    ) -> Result<Self, ClassificationError> {
        for d in 0..3 {
            for c in 0..3 {
                let here = privacy[d][c];
                if d + 1 < 3 && privacy[d + 1][c] < here {
                    return Err(ClassificationError::NonMonotone(format!(
                        "privacy(d={}, c={}) < privacy(d={}, c={})",
                        d + 2,
                        c + 1,
                        d + 1,
                        c + 1
                    )));
                }
                if c + 1 < 3 && privacy[d][c + 1] < here {
                    return Err(ClassificationError::NonMonotone(format!(
                        "privacy(d={}, c={}) < privacy(d={}, c={})",
                        d + 1,
                        c + 2,
                        d + 1,
                        c + 1
                    )));
                }
            }
        }
        // None ranks lowest: once l++ is on the plane, l+++ must be too
        match harm {
            [Some(a), Some(b)] if b < a => {
                return Err(ClassificationError::NonMonotone(
                    "harm(l=3) < harm(l=2)".into(),
                ))
            }
            [Some(_), None] => {
                return Err(ClassificationError::NonMonotone(
                    "harm(l=3) off the plane while harm(l=2) is on it".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { privacy, harm })
    }

    pub fn privacy_table(&self) -> &[[PrivacyLevel; 3]; 3] {
        &self.privacy
    }

    pub fn harm_table(&self) -> &[Option<HarmLevel>; 2] {
        &self.harm
    }

    pub fn classify_privacy(&self, d: u8, c: u8) -> Result<PrivacyLevel, ClassificationError> {
        let d_idx = concern_index(d, "density")?;
        let c_idx = concern_index(c, "site cost")?;
        Ok(self.privacy[d_idx][c_idx])
    }

    /// `None` means the threat is not placed on the plane. The default table
    /// does not depend on the density class.
    pub fn classify_harm(
        &self,
        d: u8,
        l: ThreatClass,
    ) -> Result<Option<HarmLevel>, ClassificationError> {
        concern_index(d, "density")?;
        match l {
            ThreatClass::MaterialOnly => Ok(None),
            ThreatClass::Level(level @ 2..=3) => Ok(self.harm[level as usize - 2]),
            ThreatClass::Level(other) => Err(ClassificationError::UnknownClass {
                what: "harm",
                value: other.to_string(),
            }),
        }
    }
}

fn concern_index(value: u8, what: &'static str) -> Result<usize, ClassificationError> {
    match value {
        1..=3 => Ok(value as usize - 1),
        _ => Err(ClassificationError::UnknownClass {
            what,
            value: value.to_string(),
        }),
    }
}

pub fn classify_privacy(d: u8, c: u8) -> Result<PrivacyLevel, ClassificationError> {
    LevelTables::default().classify_privacy(d, c)
}

pub fn classify_harm(d: u8, l: ThreatClass) -> Result<Option<HarmLevel>, ClassificationError> {
    LevelTables::default().classify_harm(d, l)
}

/// Canonical grid: unit-width harm columns `h1 = [0,1]`, `h2 = [1,2]` and
/// privacy rows of height `H = hw_ratio` stacked from the origin.
pub fn build_grid(context: &CulturalContext) -> PlaneGrid {
    PlaneGrid::tiled(1.0, context.hw_ratio(), context.name().to_string())
}
