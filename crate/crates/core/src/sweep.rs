//! One-parameter sweeps over a scenario.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::assessment::assess;
use crate::classification::{build_grid, ClassificationError, CulturalContext, LevelTables};
use crate::domain::{
    Decision, DynamicFunction, HarmLevel, Overall, PrivacyLevel, Scenario, TMode, MAX_T,
};
use crate::geometry::decision_matrix;
use crate::store::round_sig12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("range error: {0}")]
    Range(String),
    #[error(transparent)]
    Classification(#[from] ClassificationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    W,
    T,
    Ratio,
}

impl FromStr for SweepVariable {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "w" => Ok(Self::W),
            "t" => Ok(Self::T),
            "ratio" => Ok(Self::Ratio),
            other => Err(SweepError::Range(format!(
                "unknown sweep variable {other:?}"
            ))),
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::W => "w",
            Self::T => "t",
            Self::Ratio => "ratio",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    /// All six blocks in grid order.
    pub decisions: Vec<(PrivacyLevel, HarmLevel, Decision)>,
    pub overall: Overall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Tab-separated, one row per sample.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("index\t{}", self.variable);
        if let Some(first) = self.rows.first() {
            for (p, h, _) in &first.decisions {
                let _ = write!(out, "\t{p}{h}");
            }
        }
        out.push_str("\toverall\n");
        for row in &self.rows {
            let _ = write!(out, "{}\t{}", row.index, row.value);
            for (_, _, d) in &row.decisions {
                out.push_str(match d {
                    Decision::Deploy => "\tdeploy",
                    Decision::NotDeploy => "\tnot-deploy",
                });
            }
            out.push_str(match row.overall {
                Overall::Intervention => "\tintervention\n",
                Overall::NonIntervention => "\tnon-intervention\n",
                Overall::OutOfPlane => "\tout-of-plane\n",
            });
        }
        out
    }
}

/// Evenly spaced sample values, rounded to 12 significant digits so a
/// printed value reproduces its row exactly.
pub fn sample_values(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![round_sig12(lo)];
    }
    (0..steps)
        .map(|i| round_sig12(lo + (hi - lo) * i as f64 / (steps - 1) as f64))
        .collect()
}

/// Scenario with one parameter replaced.
pub fn with_value(
    scenario: &Scenario,
    variable: SweepVariable,
    value: f64,
) -> Result<Scenario, SweepError> {
    let f = &scenario.function;
    let mut s = scenario.clone();
    match variable {
        SweepVariable::W => {
            s.function = DynamicFunction::with_mode(value, f.r(), f.t(), f.mode())
                .map_err(|e| SweepError::Range(e.to_string()))?
        }
        SweepVariable::T => {
            s.function = DynamicFunction::with_mode(f.w(), f.r(), value, TMode::Continuous)
                .map_err(|e| SweepError::Range(e.to_string()))?
        }
        SweepVariable::Ratio => s.context = CulturalContext::custom(value)?,
    }
    Ok(s)
}

pub fn sweep(
    scenario: &Scenario,
    tables: &LevelTables,
    variable: SweepVariable,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<SweepTable, SweepError> {
    if steps == 0 {
        return Err(SweepError::Range("steps must be at least 1".into()));
    }
    if !(lo <= hi) {
        return Err(SweepError::Range(format!("empty range {lo}:{hi}")));
    }
    let in_domain = match variable {
        SweepVariable::W => lo > 0.0 && hi <= 1.0,
        SweepVariable::T => lo >= 0.0 && hi <= MAX_T,
        SweepVariable::Ratio => lo > 0.0 && hi.is_finite(),
    };
    if !in_domain {
        let domain = match variable {
            SweepVariable::W => "(0, 1]",
            SweepVariable::T => "[0, 0.5]",
            SweepVariable::Ratio => "(0, inf)",
        };
        return Err(SweepError::Range(format!(
            "{variable} range {lo}:{hi} leaves the domain {domain}"
        )));
    }

    let rows = sample_values(lo, hi, steps)
        .into_par_iter()
        .enumerate()
        .map(|(index, value)| {
            let s = with_value(scenario, variable, value)?;
            let grid = build_grid(&s.context);
            let decisions = decision_matrix(&grid, &s.function)
                .into_iter()
                .map(|split| (split.block.privacy(), split.block.harm(), split.decision))
                .collect();
            let overall = assess(&s, tables)?.overall;
            Ok(SweepRow {
                index,
                value,
                decisions,
                overall,
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    Ok(SweepTable { variable, rows })
}
