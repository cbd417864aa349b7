//! Findings: what the learnt models say about the hazard analysis.
//!
//! Edge findings judge each variable pair anticipated by a cause against
//! the CPDAG *skeleton* of the learnt structure. Adjacency, not arrow
//! direction, is the unit of comparison: learnt directions outside the
//! compelled set are statistical artefacts and must not be read causally.

use std::collections::BTreeSet;
use std::path::Path;

use crate::assurance::{anticipated_pairs, ordered_pair, HazardRow};
use crate::bn::{to_cpdag, Dag, RiskReport};
use crate::error::{Error, Result};
use crate::procmine::DfgModel;
use crate::records::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingKind {
    EdgePresent,
    EdgeAbsent,
    RiskDelta,
    DfgArc,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::EdgePresent => "edge_present",
            FindingKind::EdgeAbsent => "edge_absent",
            FindingKind::RiskDelta => "risk_delta",
            FindingKind::DfgArc => "dfg_arc",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        match text {
            "edge_present" => Ok(FindingKind::EdgePresent),
            "edge_absent" => Ok(FindingKind::EdgeAbsent),
            "risk_delta" => Ok(FindingKind::RiskDelta),
            "dfg_arc" => Ok(FindingKind::DfgArc),
            other => Err(Error::Input(format!("unknown finding kind '{other}'"))),
        }
    }
}

/// One observation extracted from a learnt model.
///
/// Payload by kind: edge findings carry the variable pair in `(a, b)`
/// (sorted); risk deltas carry `(exposure, outcome)` with the ARR in
/// `value` and the context in `detail`; directly-follows arcs carry
/// `(from, to)` with the count in `value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub finding_id: String,
    pub kind: FindingKind,
    pub a: String,
    pub b: String,
    pub value: Option<f64>,
    pub source: String,
    pub detail: String,
}

impl Finding {
    pub fn pair(&self) -> (String, String) {
        ordered_pair(&self.a, &self.b)
    }
}

/// Judges every anticipated variable pair on the learnt CPDAG skeleton,
/// records one risk-delta finding per risk report, and one arc finding per
/// anticipated pair observed as a directly-follows arc.
pub fn extract_findings(
    dag: &Dag,
    schema: &Schema,
    hazards: &[HazardRow],
    risk_reports: &[RiskReport],
    dfg: Option<&DfgModel>,
) -> Result<Vec<Finding>> {
    let pairs = anticipated_pairs(hazards);
    for (a, b) in &pairs {
        for code in [a, b] {
            if schema.index_of(code).is_none() {
                return Err(Error::Input(format!(
                    "cause links unknown variable '{code}'"
                )));
            }
        }
    }
    let cpdag = to_cpdag(dag);
    let mut findings = Vec::new();
    for (a, b) in &pairs {
        let ia = schema.index_of(a).expect("validated above");
        let ib = schema.index_of(b).expect("validated above");
        let present = cpdag.is_adjacent(ia, ib);
        findings.push(Finding {
            finding_id: format!("edge:{a}--{b}"),
            kind: if present {
                FindingKind::EdgePresent
            } else {
                FindingKind::EdgeAbsent
            },
            a: a.clone(),
            b: b.clone(),
            value: None,
            source: "structure-learning".to_string(),
            detail: String::new(),
        });
    }
    for report in risk_reports {
        findings.push(Finding {
            finding_id: format!("risk:{}->{}", report.exposure, report.outcome),
            kind: FindingKind::RiskDelta,
            a: report.exposure.clone(),
            b: report.outcome.clone(),
            value: Some(report.absolute_risk_reduction),
            source: "inference".to_string(),
            detail: report.context.display(schema),
        });
    }
    if let Some(dfg) = dfg {
        for (a, b) in &pairs {
            for (from, to) in [(a, b), (b, a)] {
                let count = dfg.arc_count(from, to);
                if count > 0 {
                    findings.push(Finding {
                        finding_id: format!("dfg:{from}->{to}"),
                        kind: FindingKind::DfgArc,
                        a: from.clone(),
                        b: to.clone(),
                        value: Some(count as f64),
                        source: "process-mining".to_string(),
                        detail: String::new(),
                    });
                }
            }
        }
    }
    Ok(findings)
}

/// Edge-present findings for learnt adjacencies no cause anticipated: the
/// observed-but-unimagined half of the gap report.
pub fn unanticipated_adjacencies(
    dag: &Dag,
    schema: &Schema,
    hazards: &[HazardRow],
) -> Vec<Finding> {
    let anticipated = anticipated_pairs(hazards);
    let cpdag = to_cpdag(dag);
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for (ia, ib) in cpdag.skeleton_pairs() {
        pairs.insert(ordered_pair(schema.code(ia), schema.code(ib)));
    }
    pairs
        .into_iter()
        .filter(|pair| !anticipated.contains(pair))
        .map(|(a, b)| Finding {
            finding_id: format!("edge:{a}--{b}"),
            kind: FindingKind::EdgePresent,
            a,
            b,
            value: None,
            source: "structure-learning".to_string(),
            detail: String::new(),
        })
        .collect()
}

/// CSV serialization: `finding_id,kind,a,b,value,source,detail`.
pub fn findings_to_csv(findings: &[Finding]) -> String {
    let mut out = String::from("finding_id,kind,a,b,value,source,detail\n");
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    for finding in findings {
        writer
            .write_record([
                finding.finding_id.as_str(),
                finding.kind.as_str(),
                finding.a.as_str(),
                finding.b.as_str(),
                &finding.value.map(|v| format!("{v:.12}")).unwrap_or_default(),
                finding.source.as_str(),
                finding.detail.as_str(),
            ])
            .expect("writing to a Vec cannot fail");
    }
    out.push_str(&String::from_utf8(writer.into_inner().expect("flushed")).expect("utf8"));
    out
}

pub fn findings_from_csv(path: &Path) -> Result<Vec<Finding>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::file(path, e.to_string()))?;
    let mut findings = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::file(path, e.to_string()))?;
        if row.len() < 7 {
            return Err(Error::row(path, i + 2, "expected 7 columns"));
        }
        let value = if row[4].is_empty() {
            None
        } else {
            Some(
                row[4]
                    .parse()
                    .map_err(|_| Error::row(path, i + 2, format!("bad value '{}'", &row[4])))?,
            )
        };
        findings.push(Finding {
            finding_id: row[0].to_string(),
            kind: FindingKind::parse(&row[1]).map_err(|e| Error::row(path, i + 2, e.to_string()))?,
            a: row[2].to_string(),
            b: row[3].to_string(),
            value,
            source: row[5].to_string(),
            detail: row[6].to_string(),
        });
    }
    Ok(findings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::{load_hazard_table, bundled_hazards_path};
    use crate::bn::{risk_report, Evidence};
    use crate::synth::planted_study_net;
    use std::io::Write;

    fn planted_findings() -> Vec<Finding> {
        let net = planted_study_net();
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        extract_findings(&net.dag, &net.schema, &hazards, &[], None).unwrap()
    }

    #[test]
    fn planted_structure_confirms_hypotension_but_not_epidural() {
        let findings = planted_findings();
        assert!(findings.iter().any(|f| f.kind == FindingKind::EdgePresent
            && f.pair() == ("Hypotension".to_string(), "Post_beta".to_string())));
        assert!(findings.iter().any(|f| f.kind == FindingKind::EdgeAbsent
            && f.pair() == ("Epidural".to_string(), "Hypotension".to_string())));
    }

    #[test]
    fn no_linked_variables_yields_only_risk_and_dfg_findings() {
        let net = planted_study_net();
        let mut hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        for hazard in &mut hazards {
            for cause in &mut hazard.causes {
                cause.linked_variables.clear();
            }
        }
        let context = Evidence::new().with("Surgery", 2).with("Pre_beta", 1);
        let report = risk_report(&net, &context, "Post_beta", "AF").unwrap();
        let findings = extract_findings(&net.dag, &net.schema, &hazards, &[report], None).unwrap();
        assert!(findings.iter().all(|f| f.kind == FindingKind::RiskDelta));
        assert_eq!(findings.len(), 1);
    }

    #[test]
    fn dfg_arcs_are_reported_for_anticipated_pairs() {
        let net = planted_study_net();
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        let mut dfg = DfgModel::default();
        dfg.arc_counts
            .insert(("Epidural".to_string(), "Hypotension".to_string()), 88);
        dfg.arc_counts
            .insert(("Surgery".to_string(), "AF".to_string()), 3); // not anticipated
        let findings = extract_findings(&net.dag, &net.schema, &hazards, &[], Some(&dfg)).unwrap();
        let arcs: Vec<&Finding> = findings
            .iter()
            .filter(|f| f.kind == FindingKind::DfgArc)
            .collect();
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].a, "Epidural");
        assert_eq!(arcs[0].b, "Hypotension");
        assert_eq!(arcs[0].value, Some(88.0));
    }

    #[test]
    fn unknown_linked_variable_is_rejected() {
        let net = planted_study_net();
        let mut hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        hazards[0].causes[0]
            .linked_variables
            .push(("Hypotension".to_string(), "Ward_load".to_string()));
        let err = extract_findings(&net.dag, &net.schema, &hazards, &[], None).unwrap_err();
        assert!(err.to_string().contains("Ward_load"));
    }

    #[test]
    fn unanticipated_adjacencies_complement_the_expected_set() {
        let net = planted_study_net();
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        let extra = unanticipated_adjacencies(&net.dag, &net.schema, &hazards);
        // planted skeleton has 7 edges; one (Hypotension-Post_beta) is anticipated
        assert_eq!(extra.len(), 6);
        assert!(extra
            .iter()
            .all(|f| f.pair() != ("Hypotension".to_string(), "Post_beta".to_string())));
        assert!(extra.iter().all(|f| f.kind == FindingKind::EdgePresent));
    }

    #[test]
    fn csv_round_trip() {
        let findings = planted_findings();
        let csv = findings_to_csv(&findings);
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(csv.as_bytes()).unwrap();
        let back = findings_from_csv(file.path()).unwrap();
        assert_eq!(back, findings);
    }
}
