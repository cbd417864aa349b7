//! Parameter estimation and exact posterior inference.
//!
//! Two independent query routes are kept side by side: variable elimination
//! (the default) and full-joint enumeration (exact but exponential, capped
//! at 12 variables). Tests hold them to agreement within 1e-12.

use std::collections::BTreeMap;

use crate::bn::counts::{count_family, parent_config_index};
use crate::bn::dag::Dag;
use crate::bn::net::BayesNet;
use crate::bn::score::BdeuParams;
use crate::error::{Error, Result};
use crate::metrics::{confusion_from_scored, ClassifierMetrics};
use crate::records::{EncounterRecord, Schema};
use crate::rng::Rng;

/// Observed variable states, keyed by variable code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    entries: BTreeMap<String, u8>,
}

impl Evidence {
    pub fn new() -> Self {
        Evidence::default()
    }

    pub fn with(mut self, code: &str, state: u8) -> Self {
        self.entries.insert(code.to_string(), state);
        self
    }

    pub fn set(&mut self, code: &str, state: u8) {
        self.entries.insert(code.to_string(), state);
    }

    pub fn contains(&self, code: &str) -> bool {
        self.entries.contains_key(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u8)> {
        self.entries.iter().map(|(code, &state)| (code.as_str(), state))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `Code=state,Code=state` pairs against a schema.
    pub fn parse(text: &str, schema: &Schema) -> Result<Evidence> {
        let mut evidence = Evidence::new();
        for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (code, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Query(format!("expected Code=state, got '{token}'")))?;
            let index = schema
                .index_of(code.trim())
                .ok_or_else(|| Error::Query(format!("unknown variable '{}'", code.trim())))?;
            let state: u8 = value
                .trim()
                .parse()
                .map_err(|_| Error::Query(format!("bad state '{}' in '{token}'", value.trim())))?;
            if state as usize >= schema.cardinality(index) {
                return Err(Error::Query(format!(
                    "state {} out of range for '{}'",
                    state,
                    code.trim()
                )));
            }
            evidence.set(code.trim(), state);
        }
        Ok(evidence)
    }

    /// Per-index view against a schema; errors on unknown codes or states.
    fn to_states(&self, schema: &Schema) -> Result<Vec<Option<u8>>> {
        let mut states = vec![None; schema.len()];
        for (code, state) in self.iter() {
            let index = schema
                .index_of(code)
                .ok_or_else(|| Error::Query(format!("unknown variable '{code}'")))?;
            if state as usize >= schema.cardinality(index) {
                return Err(Error::Query(format!("state {state} out of range for '{code}'")));
            }
            states[index] = Some(state);
        }
        Ok(states)
    }

    /// Render as `Code=state;Code=state` in schema order.
    pub fn display(&self, schema: &Schema) -> String {
        let mut parts = Vec::new();
        for index in 0..schema.len() {
            let code = schema.code(index);
            if let Some(&state) = self.entries.get(code) {
                parts.push(format!("{code}={state}"));
            }
        }
        parts.join(";")
    }
}

/// Exact conditional distribution of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub target: String,
    pub probabilities: Vec<f64>,
}

impl Posterior {
    pub fn probability(&self, state: u8) -> f64 {
        self.probabilities[state as usize]
    }
}

/// Posterior-mean parameter fit with the scoring-consistent Dirichlet
/// prior: `theta = (n_jk + alpha/(q r)) / (n_j + alpha/q)`.
pub fn fit_parameters(
    dag: &Dag,
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
) -> Result<BayesNet> {
    if !dag.is_acyclic() {
        return Err(Error::CyclicGraph);
    }
    let mut cpts = Vec::with_capacity(schema.len());
    for node in 0..schema.len() {
        let fc = count_family(node, dag.parents(node), records, schema);
        let q = fc.config_count as f64;
        let r = fc.state_count as f64;
        let a_j = params.alpha / q;
        let a_jk = params.alpha / (q * r);
        let mut table = Vec::with_capacity(fc.config_count * fc.state_count);
        for j in 0..fc.config_count {
            let denominator = fc.row_total(j) as f64 + a_j;
            for k in 0..fc.state_count {
                table.push((fc.count(j, k) as f64 + a_jk) / denominator);
            }
        }
        cpts.push(table);
    }
    BayesNet::new(dag.clone(), schema.clone(), cpts)
}

/// Discrete factor over a sorted list of variables.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    fn constant(value: f64) -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            table: vec![value],
        }
    }

    fn from_family(net: &BayesNet, node: usize) -> Self {
        let parents = net.dag.parents(node);
        let mut vars: Vec<usize> = parents.to_vec();
        vars.push(node);
        vars.sort_unstable();
        let cards: Vec<usize> = vars.iter().map(|&v| net.schema.cardinality(v)).collect();
        let size: usize = cards.iter().product();
        let mut table = vec![0.0; size];
        let mut assignment = vec![0u8; net.schema.len()];
        for (flat, value) in table.iter_mut().enumerate() {
            // decode flat index into states of `vars`
            let mut rest = flat;
            for pos in (0..vars.len()).rev() {
                assignment[vars[pos]] = (rest % cards[pos]) as u8;
                rest /= cards[pos];
            }
            let j = parent_config_index(parents, &net.schema, &assignment);
            *value = net.probability(node, j, assignment[node] as usize);
        }
        Factor { vars, cards, table }
    }

    fn index_of(&self, assignment: &[u8]) -> usize {
        let mut index = 0;
        for (pos, &var) in self.vars.iter().enumerate() {
            index = index * self.cards[pos] + assignment[var] as usize;
        }
        index
    }

    /// Fix `var = state`, dropping it from scope.
    fn reduce(&self, var: usize, state: u8) -> Factor {
        let pos = match self.vars.binary_search(&var) {
            Ok(pos) => pos,
            Err(_) => return self.clone(),
        };
        let mut vars = self.vars.clone();
        vars.remove(pos);
        let mut cards = self.cards.clone();
        let removed_card = cards.remove(pos);
        let size: usize = cards.iter().product();
        let mut table = vec![0.0; size];
        let trailing: usize = self.cards[pos + 1..].iter().product();
        for (flat, value) in table.iter_mut().enumerate() {
            let high = flat / trailing;
            let low = flat % trailing;
            let src = (high * removed_card + state as usize) * trailing + low;
            *value = self.table[src];
        }
        Factor { vars, cards, table }
    }

    fn multiply(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        for &v in &other.vars {
            if vars.binary_search(&v).is_err() {
                let pos = vars.binary_search(&v).unwrap_err();
                vars.insert(pos, v);
            }
        }
        let cards: Vec<usize> = vars
            .iter()
            .map(|&v| {
                self.vars
                    .binary_search(&v)
                    .map(|p| self.cards[p])
                    .or_else(|_| other.vars.binary_search(&v).map(|p| other.cards[p]))
                    .expect("var comes from one of the operands")
            })
            .collect();
        let size: usize = cards.iter().product();
        let mut table = vec![0.0; size];
        let max_var = vars.last().map_or(0, |&v| v + 1);
        let mut assignment = vec![0u8; max_var];
        for (flat, value) in table.iter_mut().enumerate() {
            let mut rest = flat;
            for pos in (0..vars.len()).rev() {
                assignment[vars[pos]] = (rest % cards[pos]) as u8;
                rest /= cards[pos];
            }
            *value = self.table[self.index_of(&assignment)] * other.table[other.index_of(&assignment)];
        }
        Factor { vars, cards, table }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let pos = self
            .vars
            .binary_search(&var)
            .expect("summed variable must be in scope");
        let mut vars = self.vars.clone();
        vars.remove(pos);
        let mut cards = self.cards.clone();
        let removed_card = cards.remove(pos);
        let size: usize = cards.iter().product();
        let mut table = vec![0.0; size];
        let trailing: usize = self.cards[pos + 1..].iter().product();
        for (flat, value) in table.iter_mut().enumerate() {
            let high = flat / trailing;
            let low = flat % trailing;
            let mut sum = 0.0;
            for state in 0..removed_card {
                sum += self.table[(high * removed_card + state) * trailing + low];
            }
            *value = sum;
        }
        Factor { vars, cards, table }
    }
}

/// Exact `P(target | evidence)` by variable elimination with a min-degree
/// elimination order (ties by variable index).
pub fn infer(net: &BayesNet, evidence: &Evidence, target: &str) -> Result<Posterior> {
    let schema = &net.schema;
    let target_index = schema
        .index_of(target)
        .ok_or_else(|| Error::Query(format!("unknown variable '{target}'")))?;
    if evidence.contains(target) {
        return Err(Error::Query(format!("target '{target}' is part of the evidence")));
    }
    let states = evidence.to_states(schema)?;

    let mut factors: Vec<Factor> = (0..schema.len())
        .map(|node| {
            let mut factor = Factor::from_family(net, node);
            for (var, state) in states.iter().enumerate() {
                if let Some(state) = state {
                    factor = factor.reduce(var, *state);
                }
            }
            factor
        })
        .collect();

    let mut to_eliminate: Vec<usize> = (0..schema.len())
        .filter(|&v| v != target_index && states[v].is_none())
        .collect();

    while !to_eliminate.is_empty() {
        // Min-degree: eliminate the variable whose product factor has the
        // fewest other variables in scope; ties by variable index.
        let degree = |v: usize| {
            let mut neighbors: Vec<usize> = Vec::new();
            for factor in factors.iter().filter(|f| f.vars.contains(&v)) {
                for &u in &factor.vars {
                    if u != v && !neighbors.contains(&u) {
                        neighbors.push(u);
                    }
                }
            }
            neighbors.len()
        };
        let var = *to_eliminate
            .iter()
            .min_by_key(|&&v| (degree(v), v))
            .expect("to_eliminate is non-empty");

        let (with_var, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        let product = with_var
            .into_iter()
            .reduce(|a, b| a.multiply(&b))
            .unwrap_or_else(|| Factor::constant(1.0));
        factors = rest;
        factors.push(product.sum_out(var));
        to_eliminate.retain(|&v| v != var);
    }

    let product = factors
        .into_iter()
        .reduce(|a, b| a.multiply(&b))
        .unwrap_or_else(|| Factor::constant(1.0));
    let r = schema.cardinality(target_index);
    let mut probabilities = vec![0.0; r];
    let max_var = product.vars.last().map_or(target_index + 1, |&v| (v + 1).max(target_index + 1));
    let mut assignment = vec![0u8; max_var];
    for (state, slot) in probabilities.iter_mut().enumerate() {
        assignment[target_index] = state as u8;
        *slot = product.table[product.index_of(&assignment)];
    }
    normalize(probabilities, target)
}

/// Exact `P(target | evidence)` by summing the full joint. Capped at 12
/// variables; serves as the independent oracle for variable elimination.
pub fn infer_by_enumeration(net: &BayesNet, evidence: &Evidence, target: &str) -> Result<Posterior> {
    let schema = &net.schema;
    if schema.len() > 12 {
        return Err(Error::Input(format!(
            "joint enumeration is limited to 12 variables ({} given)",
            schema.len()
        )));
    }
    let target_index = schema
        .index_of(target)
        .ok_or_else(|| Error::Query(format!("unknown variable '{target}'")))?;
    if evidence.contains(target) {
        return Err(Error::Query(format!("target '{target}' is part of the evidence")));
    }
    let states = evidence.to_states(schema)?;

    let r = schema.cardinality(target_index);
    let mut probabilities = vec![0.0; r];
    let mut assignment = vec![0u8; schema.len()];
    enumerate_assignments(net, &states, 0, &mut assignment, &mut |assignment| {
        probabilities[assignment[target_index] as usize] += joint_probability(net, assignment);
    });
    normalize(probabilities, target)
}

fn enumerate_assignments(
    net: &BayesNet,
    fixed: &[Option<u8>],
    node: usize,
    assignment: &mut Vec<u8>,
    sink: &mut impl FnMut(&[u8]),
) {
    if node == net.schema.len() {
        sink(assignment);
        return;
    }
    let states: Vec<u8> = match fixed[node] {
        Some(state) => vec![state],
        None => (0..net.schema.cardinality(node) as u8).collect(),
    };
    for state in states {
        assignment[node] = state;
        enumerate_assignments(net, fixed, node + 1, assignment, sink);
    }
}

fn joint_probability(net: &BayesNet, assignment: &[u8]) -> f64 {
    let mut p = 1.0;
    for node in 0..net.schema.len() {
        let j = parent_config_index(net.dag.parents(node), &net.schema, assignment);
        p *= net.probability(node, j, assignment[node] as usize);
    }
    p
}

fn normalize(mut probabilities: Vec<f64>, target: &str) -> Result<Posterior> {
    let total: f64 = probabilities.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }
    for p in &mut probabilities {
        *p /= total;
    }
    Ok(Posterior {
        target: target.to_string(),
        probabilities,
    })
}

/// Confusion-matrix evaluation of the network as a classifier for `target`:
/// each record is scored with `P(target = 1 | every other variable)`.
pub fn evaluate_classifier(
    net: &BayesNet,
    test_records: &[EncounterRecord],
    target: &str,
    threshold: f64,
) -> Result<ClassifierMetrics> {
    if test_records.is_empty() {
        return Err(Error::Input("classifier evaluation needs a non-empty test set".into()));
    }
    let schema = &net.schema;
    let target_index = schema
        .index_of(target)
        .ok_or_else(|| Error::Query(format!("unknown variable '{target}'")))?;
    if schema.cardinality(target_index) != 2 {
        return Err(Error::Query(format!("classification target '{target}' must be binary")));
    }
    let mut scored = Vec::with_capacity(test_records.len());
    for record in test_records {
        let mut evidence = Evidence::new();
        for index in 0..schema.len() {
            if index != target_index {
                evidence.set(schema.code(index), record.values[index]);
            }
        }
        let posterior = infer(net, &evidence, target)?;
        scored.push((record.values[target_index] == 1, posterior.probability(1)));
    }
    Ok(confusion_from_scored(&scored, threshold))
}

/// Absolute risk reduction between the two exposure arms.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub context: Evidence,
    pub exposure: String,
    pub outcome: String,
    /// `P(outcome = 1 | context, exposure = 0)`.
    pub p_outcome_reference: f64,
    /// `P(outcome = 1 | context, exposure = 1)`.
    pub p_outcome_treated: f64,
    /// `p_reference - p_treated`.
    pub absolute_risk_reduction: f64,
    /// `1 / |ARR|`; absent when the arms are indistinguishable.
    pub number_needed_to_treat: Option<f64>,
}

impl RiskReport {
    /// Display NNT rounded up to a whole number of patients alongside the
    /// exact value.
    pub fn to_text(&self, schema: &Schema) -> String {
        let mut out = format!(
            "P({} = 1 | {}, {} = 0) = {:.4}\nP({} = 1 | {}, {} = 1) = {:.4}\nARR = {:.4}\n",
            self.outcome,
            self.context.display(schema),
            self.exposure,
            self.p_outcome_reference,
            self.outcome,
            self.context.display(schema),
            self.exposure,
            self.p_outcome_treated,
            self.absolute_risk_reduction,
        );
        match self.number_needed_to_treat {
            Some(nnt) => out.push_str(&format!("NNT = {:.4} (round up: {} patients)\n", nnt, nnt.ceil() as i64)),
            None => out.push_str("NNT undefined (ARR is zero)\n"),
        }
        out
    }
}

/// Two posterior queries on `outcome`, one per exposure arm.
pub fn risk_report(
    net: &BayesNet,
    context: &Evidence,
    exposure: &str,
    outcome: &str,
) -> Result<RiskReport> {
    let schema = &net.schema;
    for code in [exposure, outcome] {
        let index = schema
            .index_of(code)
            .ok_or_else(|| Error::Query(format!("unknown variable '{code}'")))?;
        if schema.cardinality(index) != 2 {
            return Err(Error::Query(format!("'{code}' must be binary for a risk report")));
        }
        if context.contains(code) {
            return Err(Error::Query(format!("'{code}' cannot appear in the risk context")));
        }
    }
    if exposure == outcome {
        return Err(Error::Query("exposure and outcome must differ".into()));
    }
    let reference = infer(net, &context.clone().with(exposure, 0), outcome)?;
    let treated = infer(net, &context.clone().with(exposure, 1), outcome)?;
    let p_reference = reference.probability(1);
    let p_treated = treated.probability(1);
    let arr = p_reference - p_treated;
    Ok(RiskReport {
        context: context.clone(),
        exposure: exposure.to_string(),
        outcome: outcome.to_string(),
        p_outcome_reference: p_reference,
        p_outcome_treated: p_treated,
        absolute_risk_reduction: arr,
        number_needed_to_treat: if arr == 0.0 { None } else { Some(1.0 / arr.abs()) },
    })
}

/// Seeded shuffle followed by an exact split: the training side takes
/// `ceil(fraction * n)` records.
pub fn train_test_split(
    records: &[EncounterRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<EncounterRecord>, Vec<EncounterRecord>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Input(format!("split fraction must be in (0, 1), got {fraction}")));
    }
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut indices);
    let train_size = (fraction * records.len() as f64).ceil() as usize;
    let train = indices[..train_size]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    let test = indices[train_size..]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    Ok((train, test))
}
