//! Hazard analysis, findings, safety arguments and the gap report.
//!
//! The hazard table is the work-as-imagined: flows analysed under five
//! guidewords, each hazard with its causes, detections and effects. Causes
//! may link pairs of study variables they expect to be dependent; the
//! findings module judges those expectations against a learnt structure,
//! and the argument and gap-report modules present the outcome.

mod argument;
mod findings;
mod gaps;

pub use argument::{
    build_argument, gsn_from_dot, gsn_to_dot, ArgumentGraph, ArgumentTemplate, GsnKind, GsnNode,
};
pub use findings::{
    extract_findings, findings_from_csv, findings_to_csv, unanticipated_adjacencies, Finding,
    FindingKind,
};
pub use gaps::{gap_report, GapEntry, GapReport};

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// The five deviation guidewords, in checklist order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Guideword {
    Omission,
    Commission,
    Early,
    Late,
    Incorrect,
}

impl Guideword {
    pub const ALL: [Guideword; 5] = [
        Guideword::Omission,
        Guideword::Commission,
        Guideword::Early,
        Guideword::Late,
        Guideword::Incorrect,
    ];

    fn interpretation(self) -> &'static str {
        match self {
            Guideword::Omission => "fail to occur",
            Guideword::Commission => "occur when it was not intended",
            Guideword::Early => "occur earlier than intended",
            Guideword::Late => "occur later than intended",
            Guideword::Incorrect => "occur with the wrong content, form or dose",
        }
    }
}

impl fmt::Display for Guideword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Guideword::Omission => "Omission",
            Guideword::Commission => "Commission",
            Guideword::Early => "Early",
            Guideword::Late => "Late",
            Guideword::Incorrect => "Incorrect",
        };
        write!(f, "{name}")
    }
}

/// What kind of factor a cause is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Clinical,
    Organisational,
    Technical,
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FactorKind::Clinical => "clinical",
            FactorKind::Organisational => "organisational",
            FactorKind::Technical => "technical",
        };
        write!(f, "{name}")
    }
}

/// One possible cause of a hazard.
///
/// `decision_labels` point into the decision-making model (labels A..G);
/// `linked_variables` are pairs of study variables the cause expects to be
/// directly dependent, checkable against a learnt structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cause {
    pub cause_id: String,
    pub description: String,
    pub decision_labels: Vec<char>,
    pub factor_kind: FactorKind,
    pub linked_variables: Vec<(String, String)>,
}

/// One guideword deviation with its causes, detections and effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HazardRow {
    pub hazard_id: String,
    pub guideword: Guideword,
    pub deviation: String,
    pub causes: Vec<Cause>,
    pub detections: Vec<String>,
    pub effects: Vec<String>,
}

/// Structured guideword prompts: `|flows| x 5` rows in fixed order
/// (flows in input order, guidewords in checklist order).
pub fn guideword_checklist(flows: &[&str]) -> Result<Vec<(String, Guideword, String)>> {
    if flows.is_empty() {
        return Err(Error::Input("checklist needs at least one flow".into()));
    }
    let mut prompts = Vec::with_capacity(flows.len() * Guideword::ALL.len());
    for flow in flows {
        for guideword in Guideword::ALL {
            prompts.push((
                flow.to_string(),
                guideword,
                format!(
                    "Apply '{guideword}' to flow '{flow}': could the flow {}? Record the deviation, its causes, detections and effects.",
                    guideword.interpretation()
                ),
            ));
        }
    }
    Ok(prompts)
}

#[derive(Deserialize)]
struct RawHazardFile {
    hazards: Vec<RawHazard>,
}

#[derive(Deserialize)]
struct RawHazard {
    hazard_id: String,
    guideword: String,
    deviation: String,
    #[serde(default)]
    causes: Vec<RawCause>,
    #[serde(default)]
    detections: Vec<String>,
    #[serde(default)]
    effects: Vec<String>,
}

#[derive(Deserialize)]
struct RawCause {
    cause_id: String,
    description: String,
    #[serde(default)]
    decision_labels: Vec<String>,
    factor_kind: FactorKind,
    #[serde(default)]
    linked_variables: Vec<(String, String)>,
}

/// Loads and validates a hazard table file (TOML-syntax structured text,
/// one record per hazard with nested causes).
pub fn load_hazard_table(path: &Path) -> Result<Vec<HazardRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hazard_table(&text).map_err(|e| match e {
        Error::Input(message) => Error::file(path, message),
        other => other,
    })
}

pub fn parse_hazard_table(text: &str) -> Result<Vec<HazardRow>> {
    let raw: RawHazardFile =
        toml::from_str(text).map_err(|e| Error::Input(format!("hazard table: {e}")))?;
    let mut seen_hazards = BTreeSet::new();
    let mut seen_causes = BTreeSet::new();
    let mut hazards = Vec::with_capacity(raw.hazards.len());
    for hazard in raw.hazards {
        if !seen_hazards.insert(hazard.hazard_id.clone()) {
            return Err(Error::Input(format!("duplicate hazard_id '{}'", hazard.hazard_id)));
        }
        let guideword = match hazard.guideword.as_str() {
            "Omission" => Guideword::Omission,
            "Commission" => Guideword::Commission,
            "Early" => Guideword::Early,
            "Late" => Guideword::Late,
            "Incorrect" => Guideword::Incorrect,
            other => {
                return Err(Error::Input(format!(
                    "hazard '{}': unknown guideword '{}'",
                    hazard.hazard_id, other
                )))
            }
        };
        if hazard.causes.is_empty() {
            return Err(Error::Input(format!(
                "hazard '{}' needs at least one cause",
                hazard.hazard_id
            )));
        }
        if hazard.effects.is_empty() {
            return Err(Error::Input(format!(
                "hazard '{}' needs at least one effect",
                hazard.hazard_id
            )));
        }
        let mut causes = Vec::with_capacity(hazard.causes.len());
        for cause in hazard.causes {
            if !seen_causes.insert(cause.cause_id.clone()) {
                return Err(Error::Input(format!("duplicate cause_id '{}'", cause.cause_id)));
            }
            let mut labels = Vec::with_capacity(cause.decision_labels.len());
            for label in &cause.decision_labels {
                let mut chars = label.chars();
                match (chars.next(), chars.next()) {
                    (Some(c @ 'A'..='G'), None) => labels.push(c),
                    _ => {
                        return Err(Error::Input(format!(
                            "cause '{}': decision label '{}' is not one of A..G",
                            cause.cause_id, label
                        )))
                    }
                }
            }
            causes.push(Cause {
                cause_id: cause.cause_id,
                description: cause.description,
                decision_labels: labels,
                factor_kind: cause.factor_kind,
                linked_variables: cause.linked_variables,
            });
        }
        hazards.push(HazardRow {
            hazard_id: hazard.hazard_id,
            guideword,
            deviation: hazard.deviation,
            causes,
            detections: hazard.detections,
            effects: hazard.effects,
        });
    }
    Ok(hazards)
}

/// Every variable pair anticipated by any cause, as sorted code pairs.
pub fn anticipated_pairs(hazards: &[HazardRow]) -> BTreeSet<(String, String)> {
    let mut pairs = BTreeSet::new();
    for hazard in hazards {
        for cause in &hazard.causes {
            for (a, b) in &cause.linked_variables {
                pairs.insert(ordered_pair(a, b));
            }
        }
    }
    pairs
}

pub(crate) fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Path of the hazard table bundled with the crate.
pub fn bundled_hazards_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/hazards/beta_blocker.hz")
}

/// Path of the argument template bundled with the crate.
pub fn bundled_template_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets/templates/af_prevention.toml")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checklist_is_flows_times_five() {
        let prompts = guideword_checklist(&["administer"]).unwrap();
        assert_eq!(prompts.len(), 5);
        let prompts = guideword_checklist(&["prescribe", "dispense", "administer"]).unwrap();
        assert_eq!(prompts.len(), 15);
        assert!(prompts
            .iter()
            .any(|(flow, gw, _)| flow == "administer" && *gw == Guideword::Omission));
        assert!(guideword_checklist(&[]).is_err());
    }

    #[test]
    fn checklist_ordering_is_stable() {
        let a = guideword_checklist(&["x", "y"]).unwrap();
        let b = guideword_checklist(&["x", "y"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].0, "x");
        assert_eq!(a[0].1, Guideword::Omission);
        assert_eq!(a[4].1, Guideword::Incorrect);
        assert_eq!(a[5].0, "y");
    }

    #[test]
    fn bundled_hazard_table_matches_the_shipped_analysis() {
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        assert_eq!(hazards.len(), 5);
        let guidewords: Vec<Guideword> = hazards.iter().map(|h| h.guideword).collect();
        assert_eq!(
            guidewords,
            vec![
                Guideword::Omission,
                Guideword::Commission,
                Guideword::Incorrect,
                Guideword::Incorrect,
                Guideword::Incorrect,
            ]
        );
        let h1 = &hazards[0];
        assert_eq!(h1.hazard_id, "H1");
        assert_eq!(h1.effects, vec!["AF".to_string()]);
        assert_eq!(h1.causes.len(), 5);
        assert!(h1
            .causes
            .iter()
            .any(|c| c.factor_kind == FactorKind::Organisational
                && c.description.contains("Understaffing")));
        assert!(h1
            .causes
            .iter()
            .any(|c| c.factor_kind == FactorKind::Technical
                && c.description.contains("Complete failure of IV device or infusion pump")));
        // the hypotension cause anticipates both dependencies
        let hypotension_cause = &h1.causes[0];
        assert!(hypotension_cause
            .linked_variables
            .contains(&("Hypotension".to_string(), "Post_beta".to_string())));
        assert!(hypotension_cause
            .linked_variables
            .contains(&("Epidural".to_string(), "Hypotension".to_string())));
    }

    #[test]
    fn unknown_guideword_is_a_closed_enum_error() {
        let text = r#"
[[hazards]]
hazard_id = "H9"
guideword = "Sometimes"
deviation = "x"
effects = ["y"]
[[hazards.causes]]
cause_id = "H9-C1"
description = "d"
factor_kind = "clinical"
"#;
        let err = parse_hazard_table(text).unwrap_err();
        assert!(err.to_string().contains("Sometimes"));
    }

    #[test]
    fn duplicate_ids_and_dangling_labels_are_rejected() {
        let duplicate = r#"
[[hazards]]
hazard_id = "H1"
guideword = "Omission"
deviation = "x"
effects = ["y"]
[[hazards.causes]]
cause_id = "C1"
description = "d"
factor_kind = "clinical"

[[hazards]]
hazard_id = "H1"
guideword = "Commission"
deviation = "x"
effects = ["y"]
[[hazards.causes]]
cause_id = "C2"
description = "d"
factor_kind = "clinical"
"#;
        assert!(parse_hazard_table(duplicate)
            .unwrap_err()
            .to_string()
            .contains("duplicate hazard_id"));

        let dangling = r#"
[[hazards]]
hazard_id = "H1"
guideword = "Omission"
deviation = "x"
effects = ["y"]
[[hazards.causes]]
cause_id = "C1"
description = "d"
decision_labels = ["Q"]
factor_kind = "clinical"
"#;
        assert!(parse_hazard_table(dangling)
            .unwrap_err()
            .to_string()
            .contains("not one of A..G"));
    }

    #[test]
    fn anticipated_pairs_are_order_normalized() {
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        let pairs = anticipated_pairs(&hazards);
        assert!(pairs.contains(&("Hypotension".to_string(), "Post_beta".to_string())));
        assert!(pairs.contains(&("Epidural".to_string(), "Hypotension".to_string())));
    }
}
