//! Scenario verdicts: classification, block splits and the fallback ladder.

use std::collections::BTreeSet;

use crate::classification::{build_grid, ClassificationError, LevelTables};
use crate::compliance::build_report;
use crate::domain::{
    Assessment, Decision, HarmLevel, LadderLevel, LadderRecommendation, Overall, Scenario,
    SitePolicy,
};
use crate::geometry::split_block;

/// Assesses a scenario on the grid of its cultural context.
///
/// Every (privacy level, harm level) pair the scenario touches is split;
/// intervention requires all of them to deploy.
pub fn assess(
    scenario: &Scenario,
    tables: &LevelTables,
) -> Result<Assessment, ClassificationError> {
    let grid = build_grid(&scenario.context);

    let mut harm_levels = BTreeSet::new();
    for l in &scenario.threat {
        if let Some(h) = tables.classify_harm(scenario.density, *l)? {
            harm_levels.insert(h);
        }
    }
    // validates d and c even when the applicable set is given explicitly
    tables.classify_privacy(scenario.density, scenario.site_cost)?;

    let splits: Vec<_> = scenario
        .privacy_levels
        .iter()
        .flat_map(|p| harm_levels.iter().map(move |h| (*p, *h)))
        .map(|(p, h)| split_block(&grid.block(p, h), &scenario.function))
        .collect();

    let overall = if harm_levels.is_empty() {
        Overall::OutOfPlane
    } else if splits.iter().all(|s| s.decision == Decision::Deploy) {
        Overall::Intervention
    } else {
        Overall::NonIntervention
    };

    let ladder = ladder_fallback(overall, &harm_levels, scenario);
    let compliance = build_report(
        scenario,
        overall,
        &harm_levels,
        scenario.authorization_obtained,
        scenario.registration_done,
    );

    Ok(Assessment {
        scenario_id: scenario.id.clone(),
        grid,
        function: scenario.function,
        harm_levels,
        privacy_levels: scenario.privacy_levels.clone(),
        splits,
        overall,
        ladder_fallback: ladder,
        compliance,
    })
}

pub fn ladder_fallback(
    overall: Overall,
    harm_levels: &BTreeSet<HarmLevel>,
    scenario: &Scenario,
) -> LadderRecommendation {
    let (level, rationale) = match overall {
        Overall::Intervention => (
            LadderLevel::FaceRecognition,
            "every applicable block lies on the deploy side of the implementation curve".into(),
        ),
        Overall::NonIntervention => {
            let levels: Vec<String> = harm_levels.iter().map(ToString::to_string).collect();
            (
                LadderLevel::Cctv,
                format!(
                    "harm placed at {} but at least one applicable block fails the deploy rule",
                    levels.join(", ")
                ),
            )
        }
        Overall::OutOfPlane if scenario.threat.is_empty() => (
            LadderLevel::NoIntervention,
            "no security need declared for the site".into(),
        ),
        Overall::OutOfPlane => match scenario.site_policy {
            SitePolicy::Cctv => (
                LadderLevel::Cctv,
                "threat carries no harm level on the plane; face recognition is not proportional"
                    .into(),
            ),
            SitePolicy::OnSiteAgent => (
                LadderLevel::OnSiteAgent,
                "threat carries no harm level on the plane; site policy prefers on-site agents"
                    .into(),
            ),
        },
    };
    LadderRecommendation { level, rationale }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classification::CulturalContext;
    use crate::domain::{DynamicFunction, PrivacyLevel, ThreatCategory, ThreatClass};

    fn scenario(threat: Vec<ThreatClass>) -> Scenario {
        Scenario {
            id: "unit".into(),
            description: String::new(),
            density: 1,
            site_cost: 1,
            threat,
            threat_category: ThreatCategory::Other,
            qualifying_offence: false,
            function: DynamicFunction::new(0.5, 1.0, 0.0).unwrap(),
            context: CulturalContext::moderate(),
            privacy_levels: [PrivacyLevel::P1].into_iter().collect(),
            site_policy: SitePolicy::Cctv,
            authorization_obtained: false,
            registration_done: false,
        }
    }

    #[test]
    fn no_threat_means_no_intervention() {
        let a = assess(&scenario(vec![]), &LevelTables::default()).unwrap();
        assert_eq!(a.overall, Overall::OutOfPlane);
        assert_eq!(a.ladder_fallback.level, LadderLevel::NoIntervention);
        assert!(a.splits.is_empty());
    }

    #[test]
    fn material_only_follows_site_policy() {
        let mut s = scenario(vec![ThreatClass::MaterialOnly]);
        let a = assess(&s, &LevelTables::default()).unwrap();
        assert_eq!(a.ladder_fallback.level, LadderLevel::Cctv);
        s.site_policy = SitePolicy::OnSiteAgent;
        let a = assess(&s, &LevelTables::default()).unwrap();
        assert_eq!(a.overall, Overall::OutOfPlane);
        assert_eq!(a.ladder_fallback.level, LadderLevel::OnSiteAgent);
    }

    #[test]
    fn non_intervention_falls_back_to_cctv() {
        let mut s = scenario(vec![ThreatClass::Level(2)]);
        s.privacy_levels = [PrivacyLevel::P3].into_iter().collect();
        let a = assess(&s, &LevelTables::default()).unwrap();
        assert_eq!(a.overall, Overall::NonIntervention);
        assert_eq!(a.ladder_fallback.level, LadderLevel::Cctv);
        assert_eq!(a.splits.len(), 1);
    }

    #[test]
    fn intervention_recommends_recognition() {
        let s = scenario(vec![ThreatClass::Level(3)]);
        let a = assess(&s, &LevelTables::default()).unwrap();
        assert_eq!(a.overall, Overall::Intervention);
        assert_eq!(a.ladder_fallback.level, LadderLevel::FaceRecognition);
    }

    #[test]
    fn any_failing_block_blocks_intervention() {
        let mut s = scenario(vec![ThreatClass::Level(2), ThreatClass::Level(3)]);
        s.privacy_levels = PrivacyLevel::ALL.into_iter().collect();
        let a = assess(&s, &LevelTables::default()).unwrap();
        assert_eq!(a.splits.len(), 6);
        assert!(a.splits.iter().any(|x| x.decision == Decision::Deploy));
        assert_eq!(a.overall, Overall::NonIntervention);
    }

    #[test]
    fn classification_errors_propagate() {
        let s = scenario(vec![ThreatClass::Level(1)]);
        assert!(matches!(
            assess(&s, &LevelTables::default()),
            Err(ClassificationError::UnknownClass { what: "harm", .. })
        ));
        let mut s = scenario(vec![ThreatClass::Level(2)]);
        s.site_cost = 9;
        assert!(assess(&s, &LevelTables::default()).is_err());
    }

    #[test]
    fn assess_is_deterministic() {
        let mut s = scenario(vec![ThreatClass::Level(2), ThreatClass::Level(3)]);
        s.function = DynamicFunction::new(0.37, 0.61, 0.25).unwrap();
        let a = assess(&s, &LevelTables::default()).unwrap();
        let b = assess(&s, &LevelTables::default()).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.splits.iter().zip(&b.splits) {
            assert_eq!(x.b_r.to_bits(), y.b_r.to_bits());
        }
    }

    #[test]
    fn raising_w_never_revokes_intervention() {
        let mut s = scenario(vec![ThreatClass::Level(2), ThreatClass::Level(3)]);
        s.privacy_levels = [PrivacyLevel::P1, PrivacyLevel::P2].into_iter().collect();
        let mut seen_intervention = false;
        for i in 1..=100 {
            s.function = DynamicFunction::new(i as f64 / 100.0, 0.8, 0.0).unwrap();
            let a = assess(&s, &LevelTables::default()).unwrap();
            if seen_intervention {
                assert_eq!(a.overall, Overall::Intervention, "w={}", i as f64 / 100.0);
            }
            seen_intervention |= a.overall == Overall::Intervention;
        }
        assert!(seen_intervention);
    }
}
