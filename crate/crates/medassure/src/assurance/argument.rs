//! Goal-structured safety arguments generated from hazards and findings.
//!
//! The argument shape is data, not code: a template file names the top
//! goal, the phase breakdown strategy, which decision labels belong to
//! which phase, per-hazard placement, and verbatim statements for specific
//! leaf goals. Developing a further hazard is a template edit.
//!
//! Construction rules, per developed hazard:
//!
//! - a cause whose decision labels all point to *other* phases is routed to
//!   those phase branches instead of the hazard's branch;
//! - a cause whose every anticipated dependency came back `edge_absent` is
//!   excluded entirely (the gap report carries it);
//! - remaining causes become leaf goals under the hazard; a leaf with a
//!   confirming finding gains a Solution child and counts as developed,
//!   otherwise it is marked undeveloped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::assurance::{Cause, Finding, FindingKind, HazardRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsnKind {
    Goal,
    Strategy,
    Context,
    Solution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GsnNode {
    pub node_id: String,
    pub kind: GsnKind,
    pub statement: String,
    /// An undeveloped node renders with the diamond adornment.
    pub developed: bool,
}

/// Nodes plus the supported-by / in-context-of relations and trace links
/// back to hazards, causes and findings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArgumentGraph {
    pub nodes: Vec<GsnNode>,
    pub supported_by: Vec<(String, String)>,
    pub in_context_of: Vec<(String, String)>,
    pub trace_links: Vec<(String, String)>,
}

impl ArgumentGraph {
    pub fn node(&self, node_id: &str) -> Option<&GsnNode> {
        self.nodes.iter().find(|n| n.node_id == node_id)
    }

    pub fn children_of(&self, node_id: &str) -> Vec<&GsnNode> {
        self.supported_by
            .iter()
            .filter(|(parent, _)| parent == node_id)
            .filter_map(|(_, child)| self.node(child))
            .collect()
    }

    pub fn trace_of(&self, node_id: &str) -> Option<&str> {
        self.trace_links
            .iter()
            .find(|(node, _)| node == node_id)
            .map(|(_, target)| target.as_str())
    }

    /// Kahn check over `supported_by`.
    pub fn is_acyclic(&self) -> bool {
        let mut in_degree: BTreeMap<&str, usize> =
            self.nodes.iter().map(|n| (n.node_id.as_str(), 0)).collect();
        for (_, child) in &self.supported_by {
            if let Some(d) = in_degree.get_mut(child.as_str()) {
                *d += 1;
            }
        }
        let mut queue: Vec<&str> = in_degree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut visited = 0;
        while let Some(id) = queue.pop() {
            visited += 1;
            for (parent, child) in &self.supported_by {
                if parent == id {
                    let d = in_degree.get_mut(child.as_str()).expect("validated link");
                    *d -= 1;
                    if *d == 0 {
                        queue.push(child);
                    }
                }
            }
        }
        visited == self.nodes.len()
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.node_id.as_str()) {
                return Err(Error::Internal(format!("duplicate GSN node id '{}'", node.node_id)));
            }
            if node.kind == GsnKind::Solution && !node.developed {
                return Err(Error::Internal(format!(
                    "solution '{}' cannot be undeveloped",
                    node.node_id
                )));
            }
        }
        for (parent, child) in self.supported_by.iter().chain(&self.in_context_of) {
            if self.node(parent).is_none() || self.node(child).is_none() {
                return Err(Error::Internal(format!("dangling GSN link {parent} -> {child}")));
            }
        }
        if !self.is_acyclic() {
            return Err(Error::Internal("supported_by relation has a cycle".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct TemplatePhase {
    pub name: String,
    pub goal: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TemplateHazardGoal {
    pub hazard_id: String,
    pub phase: String,
    #[serde(default)]
    pub statement: Option<String>,
    #[serde(default)]
    pub developed: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TemplateLeafStatement {
    pub cause_id: String,
    pub statement: String,
}

/// Argument shape, loaded from a small structured file.
#[derive(Debug, Clone, Deserialize)]
pub struct ArgumentTemplate {
    pub template_id: String,
    pub top_goal: String,
    #[serde(default)]
    pub contexts: Vec<String>,
    pub strategy: String,
    pub phases: Vec<TemplatePhase>,
    #[serde(default)]
    pub hazard_goals: Vec<TemplateHazardGoal>,
    #[serde(default)]
    pub leaf_statements: Vec<TemplateLeafStatement>,
}

impl ArgumentTemplate {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let template: ArgumentTemplate =
            toml::from_str(&text).map_err(|e| Error::file(path, format!("argument template: {e}")))?;
        template.validate()?;
        Ok(template)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::Input("argument template needs at least one phase".into()));
        }
        for hazard_goal in &self.hazard_goals {
            if !self.phases.iter().any(|p| p.name == hazard_goal.phase) {
                return Err(Error::Input(format!(
                    "hazard '{}' placed in unknown phase '{}'",
                    hazard_goal.hazard_id, hazard_goal.phase
                )));
            }
        }
        Ok(())
    }

    fn phase_of_label(&self, label: char) -> Option<&str> {
        self.phases
            .iter()
            .find(|p| p.labels.iter().any(|l| l.starts_with(label)))
            .map(|p| p.name.as_str())
    }

    fn hazard_goal(&self, hazard_id: &str) -> Option<&TemplateHazardGoal> {
        self.hazard_goals.iter().find(|h| h.hazard_id == hazard_id)
    }

    fn leaf_statement(&self, cause_id: &str, description: &str) -> String {
        self.leaf_statements
            .iter()
            .find(|l| l.cause_id == cause_id)
            .map(|l| l.statement.clone())
            .unwrap_or_else(|| format!("{description} controlled"))
    }
}

/// How a cause of a developed hazard was placed.
#[derive(Debug, Clone, PartialEq, Eq)]
enum CausePlacement {
    Leaf,
    PhaseRouted(Vec<String>),
    GapExcluded,
}

fn place_cause(
    cause: &Cause,
    home_phase: &str,
    template: &ArgumentTemplate,
    findings: &[Finding],
) -> CausePlacement {
    if !cause.linked_variables.is_empty() {
        let mut any_absent = false;
        let mut any_present = false;
        for (a, b) in &cause.linked_variables {
            let pair = crate::assurance::ordered_pair(a, b);
            for finding in findings {
                match finding.kind {
                    FindingKind::EdgeAbsent if finding.pair() == pair => any_absent = true,
                    FindingKind::EdgePresent if finding.pair() == pair => any_present = true,
                    _ => {}
                }
            }
        }
        if any_absent && !any_present {
            return CausePlacement::GapExcluded;
        }
    }
    if !cause.decision_labels.is_empty() {
        let mut phases: Vec<String> = Vec::new();
        let mut points_home = false;
        for &label in &cause.decision_labels {
            match template.phase_of_label(label) {
                Some(phase) if phase == home_phase => points_home = true,
                Some(phase) if !phases.iter().any(|p| p == phase) => {
                    phases.push(phase.to_string());
                }
                _ => {}
            }
        }
        if !points_home && !phases.is_empty() {
            return CausePlacement::PhaseRouted(phases);
        }
    }
    CausePlacement::Leaf
}

/// Solutions supporting a leaf cause: confirming structure findings plus
/// any directly-follows arcs over the cause's anticipated pairs.
fn evidence_for(cause: &Cause, findings: &[Finding]) -> Vec<Finding> {
    let pairs: BTreeSet<(String, String)> = cause
        .linked_variables
        .iter()
        .map(|(a, b)| crate::assurance::ordered_pair(a, b))
        .collect();
    findings
        .iter()
        .filter(|f| match f.kind {
            FindingKind::EdgePresent | FindingKind::DfgArc => pairs.contains(&f.pair()),
            _ => false,
        })
        .cloned()
        .collect()
}

/// Builds the full argument graph. Deterministic: node ids and ordering are
/// a pure function of the inputs.
pub fn build_argument(
    hazards: &[HazardRow],
    findings: &[Finding],
    template: &ArgumentTemplate,
) -> Result<ArgumentGraph> {
    if hazards.is_empty() {
        return Err(Error::Input("argument needs at least one hazard".into()));
    }
    template.validate()?;
    let mut graph = ArgumentGraph::default();

    graph.nodes.push(GsnNode {
        node_id: "G-top".into(),
        kind: GsnKind::Goal,
        statement: template.top_goal.clone(),
        developed: true,
    });
    for (i, context) in template.contexts.iter().enumerate() {
        let id = format!("C-{}", i + 1);
        graph.nodes.push(GsnNode {
            node_id: id.clone(),
            kind: GsnKind::Context,
            statement: context.clone(),
            developed: true,
        });
        graph.in_context_of.push(("G-top".into(), id));
    }
    graph.nodes.push(GsnNode {
        node_id: "S-phases".into(),
        kind: GsnKind::Strategy,
        statement: template.strategy.clone(),
        developed: true,
    });
    graph.supported_by.push(("G-top".into(), "S-phases".into()));

    for phase in &template.phases {
        let id = format!("G-phase-{}", phase.name);
        graph.nodes.push(GsnNode {
            node_id: id.clone(),
            kind: GsnKind::Goal,
            statement: phase.goal.clone(),
            developed: true, // revisited below once children are known
        });
        graph.supported_by.push(("S-phases".into(), id));
    }

    // Hazard goals, in hazard-table order.
    for hazard in hazards {
        let placement = template.hazard_goal(&hazard.hazard_id);
        let phase = placement
            .map(|p| p.phase.clone())
            .unwrap_or_else(|| template.phases[0].name.clone());
        let statement = placement
            .and_then(|p| p.statement.clone())
            .unwrap_or_else(|| format!("{} controlled", hazard.deviation));
        let developed = placement.map(|p| p.developed).unwrap_or(false);
        let hazard_node = format!("G-{}", hazard.hazard_id);
        graph.nodes.push(GsnNode {
            node_id: hazard_node.clone(),
            kind: GsnKind::Goal,
            statement,
            developed,
        });
        graph
            .supported_by
            .push((format!("G-phase-{phase}"), hazard_node.clone()));
        graph
            .trace_links
            .push((hazard_node.clone(), hazard.hazard_id.clone()));

        if !developed {
            continue;
        }

        let mut leaves = 0usize;
        let mut routed = 0usize;
        let mut excluded = 0usize;
        for cause in &hazard.causes {
            match place_cause(cause, &phase, template, findings) {
                CausePlacement::GapExcluded => excluded += 1,
                CausePlacement::PhaseRouted(phases) => {
                    routed += 1;
                    for other in phases {
                        let id = format!("G-{}-{}", cause.cause_id, other);
                        graph.nodes.push(GsnNode {
                            node_id: id.clone(),
                            kind: GsnKind::Goal,
                            statement: template.leaf_statement(&cause.cause_id, &cause.description),
                            developed: false,
                        });
                        graph.supported_by.push((format!("G-phase-{other}"), id.clone()));
                        graph.trace_links.push((id, cause.cause_id.clone()));
                    }
                }
                CausePlacement::Leaf => {
                    leaves += 1;
                    let id = format!("G-{}", cause.cause_id);
                    let evidence = evidence_for(cause, findings);
                    graph.nodes.push(GsnNode {
                        node_id: id.clone(),
                        kind: GsnKind::Goal,
                        statement: template.leaf_statement(&cause.cause_id, &cause.description),
                        developed: !evidence.is_empty(),
                    });
                    graph.supported_by.push((hazard_node.clone(), id.clone()));
                    graph.trace_links.push((id.clone(), cause.cause_id.clone()));
                    for finding in evidence {
                        let solution_id = format!("Sn-{}", finding.finding_id);
                        if graph.node(&solution_id).is_none() {
                            graph.nodes.push(GsnNode {
                                node_id: solution_id.clone(),
                                kind: GsnKind::Solution,
                                statement: solution_statement(&finding),
                                developed: true,
                            });
                            graph
                                .trace_links
                                .push((solution_id.clone(), finding.finding_id.clone()));
                        }
                        graph.supported_by.push((id.clone(), solution_id));
                    }
                }
            }
        }
        if leaves + routed + excluded != hazard.causes.len() {
            return Err(Error::Internal(format!(
                "hazard '{}': {} causes placed as {leaves} leaves + {routed} routed + {excluded} excluded",
                hazard.hazard_id,
                hazard.causes.len()
            )));
        }
    }

    // A phase branch with nothing under it is itself undeveloped.
    for phase in &template.phases {
        let id = format!("G-phase-{}", phase.name);
        if graph.children_of(&id).is_empty() {
            if let Some(node) = graph.nodes.iter_mut().find(|n| n.node_id == id) {
                node.developed = false;
            }
        }
    }

    graph.validate()?;
    Ok(graph)
}

fn solution_statement(finding: &Finding) -> String {
    match finding.kind {
        FindingKind::EdgePresent => format!(
            "Learnt structure shows a direct dependency between {} and {}",
            finding.a, finding.b
        ),
        FindingKind::DfgArc => format!(
            "Process model: {} directly followed by {} ({} times)",
            finding.a,
            finding.b,
            finding.value.unwrap_or(0.0) as u64
        ),
        FindingKind::RiskDelta => format!(
            "Risk query: ARR {:.2} for {} on {}",
            finding.value.unwrap_or(0.0),
            finding.a,
            finding.b
        ),
        FindingKind::EdgeAbsent => format!(
            "No direct dependency between {} and {} in the learnt structure",
            finding.a, finding.b
        ),
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

fn unescape(text: &str) -> String {
    text.replace("\\\"", "\"").replace("\\\\", "\\")
}

/// DOT rendering. Shapes: Goal = box, Strategy = parallelogram, Context =
/// rounded box, Solution = circle; an undeveloped goal gets a small diamond
/// child. `supported_by` is a solid arrow, `in_context_of` a dashed arrow
/// with an open head. Output order follows graph order and is
/// deterministic.
pub fn gsn_to_dot(graph: &ArgumentGraph) -> String {
    let mut out = String::from("digraph argument {\n  rankdir=TB;\n");
    for node in &graph.nodes {
        let shape = match node.kind {
            GsnKind::Goal => "shape=box",
            GsnKind::Strategy => "shape=parallelogram",
            GsnKind::Context => "shape=box, style=rounded",
            GsnKind::Solution => "shape=circle",
        };
        let _ = writeln!(
            out,
            "  \"{}\" [{shape}, label=\"{}\"];",
            escape(&node.node_id),
            escape(&node.statement)
        );
        if !node.developed {
            let _ = writeln!(
                out,
                "  \"{}__undeveloped\" [shape=diamond, label=\"\", width=0.3, height=0.3];",
                escape(&node.node_id)
            );
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}__undeveloped\" [arrowhead=none];",
                escape(&node.node_id),
                escape(&node.node_id)
            );
        }
    }
    for (parent, child) in &graph.supported_by {
        let _ = writeln!(out, "  \"{}\" -> \"{}\";", escape(parent), escape(child));
    }
    for (node, context) in &graph.in_context_of {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [style=dashed, arrowhead=empty];",
            escape(node),
            escape(context)
        );
    }
    out.push_str("}\n");
    out
}

/// Parses the subset of DOT emitted by [`gsn_to_dot`] back into a graph.
/// Trace links are not part of the DOT output, so they come back empty.
pub fn gsn_from_dot(text: &str) -> Result<ArgumentGraph> {
    let mut graph = ArgumentGraph::default();
    let mut undeveloped: BTreeSet<String> = BTreeSet::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty()
            || line.starts_with("digraph")
            || line.starts_with('}')
            || line.starts_with("rankdir")
        {
            continue;
        }
        let line = line.strip_suffix(';').unwrap_or(line);
        if let Some((left, right)) = split_edge(line) {
            if let Some(id) = right.strip_suffix("__undeveloped") {
                undeveloped.insert(id.to_string());
            } else if line.contains("style=dashed") {
                graph.in_context_of.push((left, right));
            } else {
                graph.supported_by.push((left, right));
            }
            continue;
        }
        // node line: "id" [attrs]
        let (id, attrs) = parse_quoted(line)
            .ok_or_else(|| Error::Input(format!("unparseable DOT line '{line}'")))?;
        if id.ends_with("__undeveloped") {
            continue;
        }
        let attrs = attrs.trim();
        let kind = if attrs.contains("style=rounded") {
            GsnKind::Context
        } else if attrs.contains("shape=box") {
            GsnKind::Goal
        } else if attrs.contains("shape=parallelogram") {
            GsnKind::Strategy
        } else if attrs.contains("shape=circle") {
            GsnKind::Solution
        } else {
            return Err(Error::Input(format!("unknown node shape in '{line}'")));
        };
        let statement = attrs
            .split_once("label=\"")
            .and_then(|(_, rest)| read_quoted_tail(rest))
            .ok_or_else(|| Error::Input(format!("missing label in '{line}'")))?;
        graph.nodes.push(GsnNode {
            node_id: id,
            kind,
            statement: unescape(&statement),
            developed: true,
        });
    }
    for id in undeveloped {
        if let Some(node) = graph.nodes.iter_mut().find(|n| n.node_id == id) {
            node.developed = false;
        }
    }
    // drop the marker edges: they point at helper nodes, not real ones
    graph
        .supported_by
        .retain(|(_, child)| !child.ends_with("__undeveloped"));
    Ok(graph)
}

/// Splits `"a" -> "b" [...]` into the two unescaped ids.
fn split_edge(line: &str) -> Option<(String, String)> {
    let (left, rest) = parse_quoted(line)?;
    let rest = rest.trim_start();
    let rest = rest.strip_prefix("->")?;
    let (right, _) = parse_quoted(rest.trim_start())?;
    Some((left, right))
}

/// Reads a leading `"quoted"` chunk, returning (content, remainder).
fn parse_quoted(text: &str) -> Option<(String, &str)> {
    let rest = text.strip_prefix('"')?;
    let mut content = String::new();
    let mut chars = rest.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => {
                let (_, next) = chars.next()?;
                content.push(next);
            }
            '"' => return Some((content, &rest[i + 1..])),
            other => content.push(other),
        }
    }
    None
}

/// Reads quoted content given text positioned just after an opening quote.
fn read_quoted_tail(text: &str) -> Option<String> {
    let mut content = String::new();
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                content.push('\\');
                content.push(chars.next()?);
            }
            '"' => return Some(content),
            other => content.push(other),
        }
    }
    None
}
