//! The work-as-imagined vs work-as-observed gap report.
//!
//! Findings partition into four buckets: expected dependencies the data did
//! not show (section i), observations nothing in the hazard analysis
//! anticipated (section ii), risk deltas (section iii), and confirmations
//! (observations matching an expectation). Every finding lands in exactly
//! one bucket.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::assurance::{anticipated_pairs, Finding, FindingKind, HazardRow};

/// One expected-but-absent dependency with the causes that expected it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub finding: Finding,
    pub expected_by: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapReport {
    /// (i) expected dependencies not present in the learnt structure.
    pub expected_absent: Vec<GapEntry>,
    /// (ii) observations not anticipated by any cause.
    pub unanticipated: Vec<Finding>,
    /// (iii) risk deltas.
    pub risk: Vec<Finding>,
    /// Observations matching an expectation.
    pub confirming: Vec<Finding>,
}

/// Partitions findings against the hazard table. Ordering within each
/// section follows the input finding order, which is deterministic.
pub fn gap_report(hazards: &[HazardRow], findings: &[Finding]) -> GapReport {
    let anticipated = anticipated_pairs(hazards);
    // map each pair to the causes that anticipate it
    let mut expecting: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for hazard in hazards {
        for cause in &hazard.causes {
            for (a, b) in &cause.linked_variables {
                expecting
                    .entry(crate::assurance::ordered_pair(a, b))
                    .or_default()
                    .push(cause.cause_id.clone());
            }
        }
    }

    let mut report = GapReport::default();
    for finding in findings {
        match finding.kind {
            FindingKind::EdgeAbsent => report.expected_absent.push(GapEntry {
                expected_by: expecting.get(&finding.pair()).cloned().unwrap_or_default(),
                finding: finding.clone(),
            }),
            FindingKind::EdgePresent | FindingKind::DfgArc => {
                if anticipated.contains(&finding.pair()) {
                    report.confirming.push(finding.clone());
                } else {
                    report.unanticipated.push(finding.clone());
                }
            }
            FindingKind::RiskDelta => report.risk.push(finding.clone()),
        }
    }
    report
}

fn percent(value: f64) -> i64 {
    (value * 100.0).round() as i64
}

impl GapReport {
    /// Human-readable rendering. Risk lines show ARR as a rounded percent
    /// and NNT rounded to the nearest whole number.
    pub fn to_text(&self) -> String {
        let mut out = String::from("GAP REPORT\n==========\n");

        out.push_str("\n(i) Expected dependencies not observed\n");
        if self.expected_absent.is_empty() {
            out.push_str("  none\n");
        }
        for entry in &self.expected_absent {
            let (a, b) = entry.finding.pair();
            let _ = writeln!(
                out,
                "  - ({a}, {b}): expected by {}; no direct dependency in the learnt structure",
                if entry.expected_by.is_empty() {
                    "no recorded cause".to_string()
                } else {
                    entry.expected_by.join(", ")
                }
            );
        }

        out.push_str("\n(ii) Observed but not anticipated\n");
        if self.unanticipated.is_empty() {
            out.push_str("  none\n");
        }
        for finding in &self.unanticipated {
            match finding.kind {
                FindingKind::DfgArc => {
                    let _ = writeln!(
                        out,
                        "  - {} directly followed by {} ({} times) [{}]",
                        finding.a,
                        finding.b,
                        finding.value.unwrap_or(0.0) as u64,
                        finding.source
                    );
                }
                _ => {
                    let (a, b) = finding.pair();
                    let _ = writeln!(
                        out,
                        "  - ({a}, {b}): learnt dependency with no matching cause [{}]",
                        finding.source
                    );
                }
            }
        }

        out.push_str("\n(iii) Risk deltas\n");
        if self.risk.is_empty() {
            out.push_str("  none\n");
        }
        for finding in &self.risk {
            let arr = finding.value.unwrap_or(0.0);
            let context = if finding.detail.is_empty() {
                String::new()
            } else {
                format!(" within {{{}}}", finding.detail)
            };
            if arr == 0.0 {
                let _ = writeln!(
                    out,
                    "  - {} on {}{}: ARR 0%, NNT undefined",
                    finding.a, finding.b, context
                );
            } else {
                let _ = writeln!(
                    out,
                    "  - {} on {}{}: ARR {}%, NNT {}",
                    finding.a,
                    finding.b,
                    context,
                    percent(arr),
                    (1.0 / arr.abs()).round() as i64
                );
            }
        }

        out.push_str("\nConfirmations\n");
        if self.confirming.is_empty() {
            out.push_str("  none\n");
        }
        for finding in &self.confirming {
            match finding.kind {
                FindingKind::DfgArc => {
                    let _ = writeln!(
                        out,
                        "  - {} directly followed by {} ({} times) [{}]",
                        finding.a,
                        finding.b,
                        finding.value.unwrap_or(0.0) as u64,
                        finding.source
                    );
                }
                _ => {
                    let (a, b) = finding.pair();
                    let _ = writeln!(
                        out,
                        "  - ({a}, {b}): direct dependency present as anticipated [{}]",
                        finding.source
                    );
                }
            }
        }
        out
    }

    /// CSV rendering: `section,finding_id,kind,a,b,value,source,detail`.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        writer
            .write_record(["section", "finding_id", "kind", "a", "b", "value", "source", "detail"])
            .expect("vec write");
        let mut write = |section: &str, finding: &Finding, detail: &str| {
            writer
                .write_record([
                    section,
                    finding.finding_id.as_str(),
                    finding.kind.as_str(),
                    finding.a.as_str(),
                    finding.b.as_str(),
                    &finding.value.map(|v| format!("{v:.12}")).unwrap_or_default(),
                    finding.source.as_str(),
                    detail,
                ])
                .expect("vec write");
        };
        for entry in &self.expected_absent {
            write("expected_absent", &entry.finding, &entry.expected_by.join(";"));
        }
        for finding in &self.unanticipated {
            write("unanticipated", finding, &finding.detail);
        }
        for finding in &self.risk {
            write("risk", finding, &finding.detail);
        }
        for finding in &self.confirming {
            write("confirming", finding, &finding.detail);
        }
        String::from_utf8(writer.into_inner().expect("flushed")).expect("utf8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::{bundled_hazards_path, extract_findings, load_hazard_table};
    use crate::synth::planted_study_net;

    fn study_report(with_risk: bool) -> GapReport {
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        let net = planted_study_net();
        let reports = if with_risk {
            let context = crate::bn::Evidence::new().with("Surgery", 2).with("Pre_beta", 1);
            vec![crate::bn::risk_report(&net, &context, "Post_beta", "AF").unwrap()]
        } else {
            Vec::new()
        };
        let findings = extract_findings(&net.dag, &net.schema, &hazards, &reports, None).unwrap();
        gap_report(&hazards, &findings)
    }

    #[test]
    fn section_one_lists_the_epidural_hypotension_gap() {
        let report = study_report(false);
        assert_eq!(report.expected_absent.len(), 1);
        let entry = &report.expected_absent[0];
        assert_eq!(
            entry.finding.pair(),
            ("Epidural".to_string(), "Hypotension".to_string())
        );
        assert!(entry.expected_by.contains(&"H1-C1".to_string()));
        let text = report.to_text();
        assert!(text.contains("(Epidural, Hypotension)"));
    }

    #[test]
    fn matching_findings_leave_sections_empty() {
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        // keep only the expectation that the planted model confirms
        let mut trimmed = hazards.clone();
        for hazard in &mut trimmed {
            for cause in &mut hazard.causes {
                cause
                    .linked_variables
                    .retain(|(a, b)| (a.as_str(), b.as_str()) == ("Hypotension", "Post_beta"));
            }
        }
        let net = planted_study_net();
        let findings = extract_findings(&net.dag, &net.schema, &trimmed, &[], None).unwrap();
        let report = gap_report(&trimmed, &findings);
        assert!(report.expected_absent.is_empty());
        assert!(report.unanticipated.is_empty());
        assert_eq!(report.confirming.len(), 1);
    }

    #[test]
    fn risk_delta_renders_percent_and_rounded_nnt() {
        let report = study_report(true);
        assert_eq!(report.risk.len(), 1);
        let text = report.to_text();
        assert!(text.contains("ARR 11%, NNT 9"), "{text}");
    }

    #[test]
    fn partition_is_exhaustive_and_exclusive() {
        let hazards = load_hazard_table(&bundled_hazards_path()).unwrap();
        let net = planted_study_net();
        let context = crate::bn::Evidence::new().with("Surgery", 2).with("Pre_beta", 1);
        let risk = crate::bn::risk_report(&net, &context, "Post_beta", "AF").unwrap();
        let mut dfg = crate::procmine::DfgModel::default();
        dfg.arc_counts
            .insert(("Epidural".to_string(), "Hypotension".to_string()), 88);
        let mut findings =
            extract_findings(&net.dag, &net.schema, &hazards, &[risk], Some(&dfg)).unwrap();
        findings.extend(crate::assurance::unanticipated_adjacencies(
            &net.dag,
            &net.schema,
            &hazards,
        ));
        let report = gap_report(&hazards, &findings);
        let total = report.expected_absent.len()
            + report.unanticipated.len()
            + report.risk.len()
            + report.confirming.len();
        assert_eq!(total, findings.len());
        // the directly-follows arc over an anticipated pair confirms it
        assert!(report
            .confirming
            .iter()
            .any(|f| f.kind == FindingKind::DfgArc));
        let text = report.to_text();
        assert!(text.contains("directly followed by"));
    }

    #[test]
    fn csv_lists_sections() {
        let report = study_report(true);
        let csv = report.to_csv();
        assert!(csv.starts_with("section,finding_id,kind,a,b,value,source,detail"));
        assert!(csv.contains("expected_absent,edge:Epidural--Hypotension"));
        assert!(csv.contains("risk,risk:Post_beta->AF"));
    }
}
