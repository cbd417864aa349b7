//! Parameterized Bayesian network and its text format.
//!
//! The text format is line oriented:
//!
//! ```text
//! bn v1 <node count>
//! node <code> states <r> parents <code> <code> ...
//! <r probabilities for parent configuration 0>
//! <r probabilities for parent configuration 1>
//! ...
//! ```
//!
//! CPT rows appear in the canonical mixed-radix configuration order (sorted
//! parents, lowest parent index most significant). Probabilities are written
//! as plain decimals with 17 fractional digits so parsing them back
//! reproduces the stored values. A structure-only file is the same format
//! with every CPT block omitted.

use std::fmt::Write as _;

use crate::bn::counts::config_count;
use crate::bn::dag::Dag;
use crate::error::{Error, Result};
use crate::records::{Schema, VariableSpec};

pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// A DAG plus one conditional probability table per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    pub dag: Dag,
    pub schema: Schema,
    /// `cpts[node][j * r + k] = P(node = k | parent configuration j)`.
    cpts: Vec<Vec<f64>>,
}

impl BayesNet {
    pub fn new(dag: Dag, schema: Schema, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let net = BayesNet { dag, schema, cpts };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        if !self.dag.is_acyclic() {
            return Err(Error::CyclicGraph);
        }
        if self.dag.node_count() != self.schema.len() || self.cpts.len() != self.schema.len() {
            return Err(Error::Input("network size does not match schema".into()));
        }
        for node in 0..self.schema.len() {
            let r = self.schema.cardinality(node);
            let q = config_count(self.dag.parents(node), &self.schema);
            let table = &self.cpts[node];
            if table.len() != q * r {
                return Err(Error::Input(format!(
                    "CPT of '{}' has {} entries, expected {}",
                    self.schema.code(node),
                    table.len(),
                    q * r
                )));
            }
            for j in 0..q {
                let row = &table[j * r..(j + 1) * r];
                if row.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::Input(format!(
                        "CPT of '{}' has a negative or non-finite probability",
                        self.schema.code(node)
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::Input(format!(
                        "CPT row {} of '{}' sums to {}, not 1",
                        j,
                        self.schema.code(node),
                        sum
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.schema.len()
    }

    /// CPT row of `node` for parent configuration `j`.
    pub fn cpt_row(&self, node: usize, config: usize) -> &[f64] {
        let r = self.schema.cardinality(node);
        &self.cpts[node][config * r..(config + 1) * r]
    }

    pub fn probability(&self, node: usize, config: usize, state: usize) -> f64 {
        self.cpts[node][config * self.schema.cardinality(node) + state]
    }

    pub fn config_count(&self, node: usize) -> usize {
        config_count(self.dag.parents(node), &self.schema)
    }

    /// Serializes the full network.
    pub fn to_text(&self) -> String {
        header_and_nodes(&self.dag, &self.schema, |node, out| {
            for j in 0..self.config_count(node) {
                for (k, p) in self.cpt_row(node, j).iter().enumerate() {
                    if k > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{p:.17}");
                }
                out.push('\n');
            }
        })
    }

    /// Parses a full network. State labels are not stored in the format, so
    /// the reconstructed schema names states `0..r-1`.
    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = parse(text)?;
        let schema = parsed.schema()?;
        let dag = parsed.dag(&schema)?;
        let mut cpts = Vec::with_capacity(schema.len());
        for (node, decl) in parsed.nodes.iter().enumerate() {
            let q = config_count(dag.parents(node), &schema);
            if decl.cpt_rows.len() != q {
                return Err(Error::Input(format!(
                    "node '{}' has {} CPT rows, expected {}",
                    decl.code,
                    decl.cpt_rows.len(),
                    q
                )));
            }
            let mut table = Vec::with_capacity(q * decl.states);
            for row in &decl.cpt_rows {
                if row.len() != decl.states {
                    return Err(Error::Input(format!(
                        "node '{}' has a CPT row of width {}, expected {}",
                        decl.code,
                        row.len(),
                        decl.states
                    )));
                }
                table.extend_from_slice(row);
            }
            cpts.push(table);
        }
        BayesNet::new(dag, schema, cpts)
    }
}

/// Serializes a structure without parameters.
pub fn structure_to_text(dag: &Dag, schema: &Schema) -> String {
    header_and_nodes(dag, schema, |_, _| {})
}

/// Parses either a structure-only file or a full network file, returning
/// only the structure. Codes are mapped onto `schema`, which must contain
/// every code in the file.
pub fn structure_from_text(text: &str, schema: &Schema) -> Result<Dag> {
    let parsed = parse(text)?;
    let mut parent_sets = vec![Vec::new(); schema.len()];
    for decl in &parsed.nodes {
        let node = schema
            .index_of(&decl.code)
            .ok_or_else(|| Error::Input(format!("unknown variable '{}' in structure file", decl.code)))?;
        let mut parents = Vec::with_capacity(decl.parent_codes.len());
        for code in &decl.parent_codes {
            parents.push(schema.index_of(code).ok_or_else(|| {
                Error::Input(format!("unknown parent '{code}' in structure file"))
            })?);
        }
        parents.sort_unstable();
        parent_sets[node] = parents;
    }
    Dag::from_parent_sets(parent_sets)
}

fn header_and_nodes(
    dag: &Dag,
    schema: &Schema,
    mut write_cpt: impl FnMut(usize, &mut String),
) -> String {
    let mut out = format!("bn v1 {}\n", schema.len());
    for node in 0..schema.len() {
        let spec = schema.variable(node);
        let _ = write!(out, "node {} states {} parents", spec.code, spec.cardinality());
        for &parent in dag.parents(node) {
            let _ = write!(out, " {}", schema.code(parent));
        }
        out.push('\n');
        write_cpt(node, &mut out);
    }
    out
}

struct ParsedNode {
    code: String,
    states: usize,
    parent_codes: Vec<String>,
    cpt_rows: Vec<Vec<f64>>,
}

struct ParsedFile {
    nodes: Vec<ParsedNode>,
}

impl ParsedFile {
    fn schema(&self) -> Result<Schema> {
        Schema::new(
            self.nodes
                .iter()
                .map(|decl| {
                    let labels: Vec<String> = (0..decl.states).map(|s| s.to_string()).collect();
                    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                    VariableSpec::new(&decl.code, &decl.code, &refs)
                })
                .collect(),
        )
    }

    fn dag(&self, schema: &Schema) -> Result<Dag> {
        let mut parent_sets = vec![Vec::new(); self.nodes.len()];
        for (node, decl) in self.nodes.iter().enumerate() {
            let mut parents = Vec::with_capacity(decl.parent_codes.len());
            for code in &decl.parent_codes {
                parents.push(
                    schema
                        .index_of(code)
                        .ok_or_else(|| Error::Input(format!("unknown parent '{code}'")))?,
                );
            }
            parents.sort_unstable();
            parent_sets[node] = parents;
        }
        Dag::from_parent_sets(parent_sets)
    }
}

fn parse(text: &str) -> Result<ParsedFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input("empty network file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("bn") || parts.next() != Some("v1") {
        return Err(Error::Input("expected 'bn v1 <n>' header".into()));
    }
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Input("bad node count in header".into()))?;

    let mut nodes = Vec::with_capacity(n);
    while let Some(line) = lines.next() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("node") {
            return Err(Error::Input(format!("expected 'node' line, got '{line}'")));
        }
        let code = parts
            .next()
            .ok_or_else(|| Error::Input("node line missing code".into()))?
            .to_string();
        if parts.next() != Some("states") {
            return Err(Error::Input(format!("malformed node line '{line}'")));
        }
        let states: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Input(format!("bad state count in '{line}'")))?;
        if parts.next() != Some("parents") {
            return Err(Error::Input(format!("malformed node line '{line}'")));
        }
        let parent_codes: Vec<String> = parts.map(str::to_string).collect();

        let mut cpt_rows = Vec::new();
        while let Some(next) = lines.peek() {
            if next.trim_start().starts_with("node ") {
                break;
            }
            let row_line = lines.next().unwrap();
            let row: std::result::Result<Vec<f64>, _> =
                row_line.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|_| Error::Input(format!("bad CPT row '{row_line}'")))?;
            cpt_rows.push(row);
        }
        nodes.push(ParsedNode {
            code,
            states,
            parent_codes,
            cpt_rows,
        });
    }
    if nodes.len() != n {
        return Err(Error::Input(format!(
            "header declares {n} nodes but file has {}",
            nodes.len()
        )));
    }
    Ok(ParsedFile { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::study_schema;

    fn tiny_net() -> BayesNet {
        let schema = study_schema();
        let dag = Dag::from_edges(6, &[(0, 1), (2, 5)]).unwrap();
        let cpts = vec![
            vec![0.45, 0.25, 0.30],
            vec![0.8, 0.2, 0.5, 0.5, 0.25, 0.75],
            vec![0.6, 0.4],
            vec![0.5375, 0.4625],
            vec![0.61, 0.39],
            vec![0.7, 0.3, 0.51, 0.49],
        ];
        BayesNet::new(dag, schema, cpts).unwrap()
    }

    #[test]
    fn rejects_bad_row_sum() {
        let schema = study_schema();
        let dag = Dag::empty(6);
        let mut cpts: Vec<Vec<f64>> = schema
            .variables()
            .iter()
            .map(|v| vec![1.0 / v.cardinality() as f64; v.cardinality()])
            .collect();
        cpts[1] = vec![0.6, 0.6];
        assert!(BayesNet::new(dag, schema, cpts).is_err());
    }

    #[test]
    fn rejects_wrong_table_size() {
        let schema = study_schema();
        let dag = Dag::from_edges(6, &[(0, 1)]).unwrap();
        let mut cpts: Vec<Vec<f64>> = schema
            .variables()
            .iter()
            .map(|v| vec![1.0 / v.cardinality() as f64; v.cardinality()])
            .collect();
        cpts[1] = vec![0.5, 0.5]; // needs 3 configurations x 2 states
        assert!(BayesNet::new(dag, schema, cpts).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let net = tiny_net();
        let text = net.to_text();
        let back = BayesNet::from_text(&text).unwrap();
        assert_eq!(back.dag, net.dag);
        for node in 0..net.node_count() {
            for j in 0..net.config_count(node) {
                assert_eq!(back.cpt_row(node, j), net.cpt_row(node, j));
            }
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn header_names_parents_by_code() {
        let net = tiny_net();
        let text = net.to_text();
        assert!(text.starts_with("bn v1 6\n"));
        assert!(text.contains("node Pre_beta states 2 parents Surgery\n"));
        assert!(text.contains("node AF states 2 parents Post_beta\n"));
    }

    #[test]
    fn structure_only_round_trip() {
        let schema = study_schema();
        let dag = Dag::from_edges(6, &[(0, 3), (3, 2), (1, 2)]).unwrap();
        let text = structure_to_text(&dag, &schema);
        assert!(!text.contains('.')); // no probabilities anywhere
        let back = structure_from_text(&text, &schema).unwrap();
        assert_eq!(back, dag);
    }

    #[test]
    fn structure_reader_accepts_full_net_files() {
        let net = tiny_net();
        let dag = structure_from_text(&net.to_text(), &net.schema).unwrap();
        assert_eq!(dag, net.dag);
    }

    #[test]
    fn parser_rejects_missing_rows() {
        let text = "bn v1 1\nnode A states 2 parents\n";
        assert!(BayesNet::from_text(text).is_err());
    }
}
