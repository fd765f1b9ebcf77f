//! AI Act Article 5 checklist for a real-time remote biometric
//! identification deployment.
//!
//! This records which conditions hold. It is input for the authorising
//! judicial or administrative body, not a legal judgment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{
    Assessment, HarmLevel, Overall, PrivacyLevel, Scenario, TMode, ThreatCategory,
};

/// Article 5(1)(h) objectives that may justify the use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// (i) victims of abduction, trafficking or sexual exploitation, and
    /// missing persons.
    VictimSearch,
    /// (ii) specific, substantial and imminent threat to life, or a
    /// terrorist attack.
    ImminentThreat,
    /// (iii) suspects of Annex II offences carrying at least four years.
    SuspectLocalisation,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PermittedSubjectToAuthorization,
    Prohibited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub objective: Objective,
    /// Article 5(2)(a): seriousness, probability and scale of the harm.
    pub element_a_note: String,
    /// Article 5(2)(b): consequences for the rights of persons concerned.
    pub element_b_note: String,
    pub authorization_obtained: bool,
    pub registration_done: bool,
    pub verdict: Verdict,
    /// Unmet conditions; a permitted verdict still requires all of these
    /// to be cleared before deployment.
    pub blocking_preconditions: Vec<String>,
}

impl ComplianceReport {
    /// Rebuilds the report for an existing assessment, e.g. to check the
    /// effect of a pending authorisation.
    pub fn for_assessment(
        scenario: &Scenario,
        assessment: &Assessment,
        authorization_obtained: bool,
        registration_done: bool,
    ) -> Self {
        build_report(
            scenario,
            assessment.overall,
            &assessment.harm_levels,
            authorization_obtained,
            registration_done,
        )
    }
}

pub fn match_objective(scenario: &Scenario) -> Objective {
    match scenario.threat_category {
        ThreatCategory::MissingPerson => Objective::VictimSearch,
        ThreatCategory::ImminentThreat => Objective::ImminentThreat,
        ThreatCategory::CriminalSuspect if scenario.qualifying_offence => {
            Objective::SuspectLocalisation
        }
        ThreatCategory::CriminalSuspect | ThreatCategory::Other => Objective::None,
    }
}

pub fn build_report(
    scenario: &Scenario,
    overall: Overall,
    harm_levels: &BTreeSet<HarmLevel>,
    authorization_obtained: bool,
    registration_done: bool,
) -> ComplianceReport {
    let objective = match_objective(scenario);
    let f = &scenario.function;

    let element_a_note = if harm_levels.is_empty() {
        format!(
            "no security harm level assignable (threat: {}); watchlist appearance probability w={}",
            threat_summary(scenario),
            f.w()
        )
    } else {
        let levels: Vec<String> = harm_levels
            .iter()
            .map(|h| format!("{h} ({})", h.label()))
            .collect();
        format!(
            "security harm {}; watchlist appearance probability w={}; system reliability r={}",
            levels.join(", "),
            f.w(),
            f.r()
        )
    };
    let element_b_note = format!(
        "privacy loss {}; deployment duration t={} ({})",
        privacy_summary(&scenario.privacy_levels),
        f.t(),
        duration_label(f.t(), f.mode())
    );

    let mut blocking = Vec::new();
    if objective == Objective::None {
        blocking.push("no Article 5(1)(h) objective matches the watchlist purpose".to_string());
    }
    match overall {
        Overall::Intervention => {}
        Overall::NonIntervention => {
            blocking.push("proportionality not established on the privacy/harm plane".into())
        }
        Overall::OutOfPlane => {
            blocking.push("threat is not placed on the privacy/harm plane".into())
        }
    }
    if !authorization_obtained {
        blocking.push(
            "prior express and specific authorisation by a judicial or independent administrative authority not obtained"
                .into(),
        );
    }
    if !registration_done {
        blocking.push(
            "fundamental rights impact assessment and registration in the EU database not completed"
                .into(),
        );
    }

    let verdict = if objective != Objective::None && overall == Overall::Intervention {
        Verdict::PermittedSubjectToAuthorization
    } else {
        Verdict::Prohibited
    };

    ComplianceReport {
        objective,
        element_a_note,
        element_b_note,
        authorization_obtained,
        registration_done,
        verdict,
        blocking_preconditions: blocking,
    }
}

fn threat_summary(scenario: &Scenario) -> String {
    if scenario.threat.is_empty() {
        return "none declared".into();
    }
    scenario
        .threat
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn privacy_summary(levels: &BTreeSet<PrivacyLevel>) -> String {
    levels
        .iter()
        .map(|p| format!("{p} ({})", p.label()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn duration_label(t: f64, mode: TMode) -> &'static str {
    match (mode, t) {
        (TMode::Discrete, 0.0) => "less than one week",
        (TMode::Discrete, 0.25) => "a couple of weeks",
        (TMode::Discrete, _) => "more than one month",
        (TMode::Continuous, _) => "continuous duration penalty",
    }
}
