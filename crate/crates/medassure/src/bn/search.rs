//! Greedy search-and-score over DAG space.
//!
//! The climber starts from the empty graph and repeatedly applies the single
//! edge move (add, delete or reverse) with the strictly best score
//! improvement, stopping at a local optimum. For four or fewer variables an
//! exhaustive enumeration of all DAGs is available as an oracle.

use std::fmt;

use crate::bn::dag::Dag;
use crate::bn::score::{bdeu_score, family_score_cached, BdeuParams, ScoreCache};
use crate::error::{Error, Result};
use crate::records::{EncounterRecord, Schema};
use crate::rng::Rng;

/// Kinds of single-edge moves, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveKind::Add => write!(f, "add"),
            MoveKind::Delete => write!(f, "delete"),
            MoveKind::Reverse => write!(f, "reverse"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub source: usize,
    pub target: usize,
}

/// Search settings. `max_parents` caps the in-degree a move may create.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_parents: usize,
    pub use_add: bool,
    pub use_delete: bool,
    pub use_reverse: bool,
    pub max_iterations: usize,
    /// Extra random-start climbs after the empty-graph one.
    pub restarts: usize,
    /// Seed for the random starts; unused when `restarts` is zero.
    pub restart_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_parents: 3,
            use_add: true,
            use_delete: true,
            use_reverse: true,
            max_iterations: 1000,
            restarts: 0,
            restart_seed: 0,
        }
    }
}

/// One accepted move in the climb.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub iteration: usize,
    pub applied: Move,
    pub score_before: f64,
    pub score_after: f64,
}

/// The accepted-move log of one search run. Scores strictly increase.
#[derive(Debug, Clone, Default)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    /// CSV with header `iter,move,src,dst,score_before,score_after`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,move,src,dst,score_before,score_after\n");
        for step in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{:.12},{:.12}\n",
                step.iteration,
                step.applied.kind,
                step.applied.source,
                step.applied.target,
                step.score_before,
                step.score_after
            ));
        }
        out
    }
}

/// Greedy hill climb from the empty graph (plus optional random restarts).
pub fn hill_climb(
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
    cfg: &SearchConfig,
) -> Result<(Dag, SearchTrace)> {
    if records.is_empty() {
        return Err(Error::Input("hill climb needs a non-empty dataset".into()));
    }
    if !(cfg.use_add || cfg.use_delete || cfg.use_reverse) {
        return Err(Error::Input("move set must not be empty".into()));
    }
    let mut cache = ScoreCache::new();
    let (mut best_dag, mut best_trace) =
        climb_from(Dag::empty(schema.len()), records, schema, params, cfg, &mut cache)?;
    let mut best_score = bdeu_score(&best_dag, records, schema, params, &mut cache)?;

    if cfg.restarts > 0 {
        let mut rng = Rng::new(cfg.restart_seed);
        for _ in 0..cfg.restarts {
            let start = random_dag(schema, cfg.max_parents, &mut rng);
            let (dag, trace) = climb_from(start, records, schema, params, cfg, &mut cache)?;
            let score = bdeu_score(&dag, records, schema, params, &mut cache)?;
            if score > best_score {
                best_score = score;
                best_dag = dag;
                best_trace = trace;
            }
        }
    }
    Ok((best_dag, best_trace))
}

fn climb_from(
    start: Dag,
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
    cfg: &SearchConfig,
    cache: &mut ScoreCache,
) -> Result<(Dag, SearchTrace)> {
    let mut dag = start;
    let mut score = bdeu_score(&dag, records, schema, params, cache)?;
    let mut trace = SearchTrace::default();
    for iteration in 0..cfg.max_iterations {
        match best_move(&dag, records, schema, params, cfg, cache) {
            Some((mv, delta)) if delta > 0.0 => {
                apply_move(&mut dag, mv);
                let after = score + delta;
                trace.steps.push(TraceStep {
                    iteration,
                    applied: mv,
                    score_before: score,
                    score_after: after,
                });
                score = after;
            }
            _ => break,
        }
    }
    Ok((dag, trace))
}

/// Scans every legal move in tie-break order (kind, source, target) and
/// returns the first one attaining the maximal score delta.
fn best_move(
    dag: &Dag,
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
    cfg: &SearchConfig,
    cache: &mut ScoreCache,
) -> Option<(Move, f64)> {
    let mut best: Option<(Move, f64)> = None;
    for mv in legal_moves(dag, cfg) {
        let delta = move_delta(dag, mv, records, schema, params, cache);
        if best.as_ref().is_none_or(|&(_, d)| delta > d) {
            best = Some((mv, delta));
        }
    }
    best
}

fn legal_moves(dag: &Dag, cfg: &SearchConfig) -> Vec<Move> {
    let n = dag.node_count();
    let mut moves = Vec::new();
    if cfg.use_add {
        for source in 0..n {
            for target in 0..n {
                if source == target
                    || dag.has_edge(source, target)
                    || dag.has_edge(target, source)
                {
                    continue;
                }
                if dag.parents(target).len() >= cfg.max_parents {
                    continue;
                }
                if dag.would_create_cycle(source, target) {
                    continue;
                }
                moves.push(Move {
                    kind: MoveKind::Add,
                    source,
                    target,
                });
            }
        }
    }
    if cfg.use_delete {
        for source in 0..n {
            for target in 0..n {
                if dag.has_edge(source, target) {
                    moves.push(Move {
                        kind: MoveKind::Delete,
                        source,
                        target,
                    });
                }
            }
        }
    }
    if cfg.use_reverse {
        for source in 0..n {
            for target in 0..n {
                if !dag.has_edge(source, target) {
                    continue;
                }
                if dag.parents(source).len() >= cfg.max_parents {
                    continue;
                }
                let mut trial = dag.clone();
                trial.remove_edge(source, target);
                if trial.would_create_cycle(target, source) {
                    continue;
                }
                moves.push(Move {
                    kind: MoveKind::Reverse,
                    source,
                    target,
                });
            }
        }
    }
    moves
}

/// Score change of a move, computed from the affected families only.
fn move_delta(
    dag: &Dag,
    mv: Move,
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
    cache: &mut ScoreCache,
) -> f64 {
    let mut family = |node: usize, parents: &[usize]| {
        family_score_cached(node, parents, records, schema, params, cache)
    };
    match mv.kind {
        MoveKind::Add => {
            let mut parents = dag.parents(mv.target).to_vec();
            let pos = parents.binary_search(&mv.source).unwrap_err();
            parents.insert(pos, mv.source);
            family(mv.target, &parents) - family(mv.target, dag.parents(mv.target))
        }
        MoveKind::Delete => {
            let mut parents = dag.parents(mv.target).to_vec();
            let pos = parents.binary_search(&mv.source).unwrap();
            parents.remove(pos);
            family(mv.target, &parents) - family(mv.target, dag.parents(mv.target))
        }
        MoveKind::Reverse => {
            let mut target_parents = dag.parents(mv.target).to_vec();
            let pos = target_parents.binary_search(&mv.source).unwrap();
            target_parents.remove(pos);
            let mut source_parents = dag.parents(mv.source).to_vec();
            let pos = source_parents.binary_search(&mv.target).unwrap_err();
            source_parents.insert(pos, mv.target);
            family(mv.target, &target_parents) + family(mv.source, &source_parents)
                - family(mv.target, dag.parents(mv.target))
                - family(mv.source, dag.parents(mv.source))
        }
    }
}

fn apply_move(dag: &mut Dag, mv: Move) {
    match mv.kind {
        MoveKind::Add => dag.add_edge(mv.source, mv.target),
        MoveKind::Delete => dag.remove_edge(mv.source, mv.target),
        MoveKind::Reverse => {
            dag.remove_edge(mv.source, mv.target);
            dag.add_edge(mv.target, mv.source);
        }
    }
}

/// Verifies that no legal single move improves on `dag`; used by tests and
/// by the local-optimality assertions.
pub fn is_local_optimum(
    dag: &Dag,
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
    cfg: &SearchConfig,
) -> bool {
    let mut cache = ScoreCache::new();
    best_move(dag, records, schema, params, cfg, &mut cache)
        .is_none_or(|(_, delta)| delta <= 0.0)
}

fn random_dag(schema: &Schema, max_parents: usize, rng: &mut Rng) -> Dag {
    let n = schema.len();
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut dag = Dag::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.next_unit_f64() < 0.3 && dag.parents(order[j]).len() < max_parents {
                dag.add_edge(order[i], order[j]);
            }
        }
    }
    dag
}

/// Every DAG over at most four variables, scored exhaustively. Ties are
/// broken by fewest edges, then by lexicographic edge list.
pub fn exhaustive_best(
    records: &[EncounterRecord],
    schema: &Schema,
    params: &BdeuParams,
) -> Result<(Dag, f64)> {
    if schema.len() > 4 {
        return Err(Error::Input(format!(
            "exhaustive search supports at most 4 variables ({} given); use hill_climb instead",
            schema.len()
        )));
    }
    let mut cache = ScoreCache::new();
    let mut best: Option<(Dag, f64)> = None;
    for dag in enumerate_dags(schema.len()) {
        let score = bdeu_score(&dag, records, schema, params, &mut cache)?;
        let better = match &best {
            None => true,
            Some((incumbent, best_score)) => {
                score > *best_score
                    || (score == *best_score
                        && (dag.edge_count(), dag.edges()) < (incumbent.edge_count(), incumbent.edges()))
            }
        };
        if better {
            best = Some((dag, score));
        }
    }
    best.ok_or_else(|| Error::Internal("DAG enumeration produced nothing".into()))
}

/// All DAGs on `n <= 4` nodes, by assigning each unordered pair one of
/// {no edge, forward, backward} and keeping the acyclic results.
pub fn enumerate_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut dags = Vec::new();
    let mut assignment = vec![0u8; pairs.len()];
    loop {
        let mut edges = Vec::new();
        for (&(i, j), &choice) in pairs.iter().zip(&assignment) {
            match choice {
                1 => edges.push((i, j)),
                2 => edges.push((j, i)),
                _ => {}
            }
        }
        let dag = Dag::from_edges(n, &edges).expect("pairwise edges are valid");
        if dag.is_acyclic() {
            dags.push(dag);
        }
        // next mixed-radix assignment
        let mut pos = 0;
        loop {
            if pos == assignment.len() {
                return dags;
            }
            assignment[pos] += 1;
            if assignment[pos] < 3 {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::score::bdeu_score;
    use crate::records::{EncounterRecord, Schema, VariableSpec};
    use crate::rng::Rng;

    fn binary_schema(n: usize) -> Schema {
        Schema::new(
            (0..n)
                .map(|i| VariableSpec::new(&format!("V{i}"), &format!("V{i}"), &["0", "1"]))
                .collect(),
        )
        .unwrap()
    }

    fn record(values: &[u8]) -> EncounterRecord {
        EncounterRecord {
            encounter_id: String::new(),
            values: values.to_vec(),
        }
    }

    // Independent count of labelled DAGs: a(n) = sum_k (-1)^(k+1) C(n,k) 2^(k(n-k)) a(n-k).
    fn dag_count(n: usize) -> u64 {
        fn choose(n: u64, k: u64) -> u64 {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        if n == 0 {
            return 1;
        }
        let mut total: i64 = 0;
        for k in 1..=n {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            total += sign
                * choose(n as u64, k as u64) as i64
                * 2i64.pow((k * (n - k)) as u32)
                * dag_count(n - k) as i64;
        }
        total as u64
    }

    #[test]
    fn enumeration_counts_match_recurrence() {
        assert_eq!(enumerate_dags(1).len() as u64, dag_count(1));
        assert_eq!(enumerate_dags(2).len() as u64, dag_count(2));
        assert_eq!(enumerate_dags(3).len() as u64, dag_count(3));
        assert_eq!(enumerate_dags(4).len() as u64, dag_count(4));
        assert_eq!(enumerate_dags(3).len(), 25);
        assert_eq!(enumerate_dags(4).len(), 543);
    }

    #[test]
    fn single_variable_enumeration_is_the_empty_dag() {
        let dags = enumerate_dags(1);
        assert_eq!(dags.len(), 1);
        assert_eq!(dags[0].edge_count(), 0);
    }

    fn coupled_records(n: usize, seed: u64, flip: f64) -> Vec<EncounterRecord> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| {
                let a = u8::from(rng.next_unit_f64() < 0.5);
                let b = if rng.next_unit_f64() < flip { 1 - a } else { a };
                record(&[a, b])
            })
            .collect()
    }

    #[test]
    fn exhaustive_best_picks_an_edge_for_dependent_data() {
        let schema = binary_schema(2);
        let records = coupled_records(400, 3, 0.1);
        let (dag, score) = exhaustive_best(&records, &schema, &BdeuParams::default()).unwrap();
        assert_eq!(dag.edge_count(), 1);
        let mut cache = ScoreCache::new();
        let empty = bdeu_score(&Dag::empty(2), &records, &schema, &BdeuParams::default(), &mut cache)
            .unwrap();
        assert!(score > empty);
    }

    #[test]
    fn exhaustive_refuses_more_than_four_variables() {
        let schema = binary_schema(5);
        let err = exhaustive_best(&[record(&[0; 5])], &schema, &BdeuParams::default()).unwrap_err();
        assert!(err.to_string().contains("hill_climb"));
    }

    fn independent_records(n: usize, seed: u64) -> Vec<EncounterRecord> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| {
                record(&[
                    u8::from(rng.next_unit_f64() < 0.5),
                    u8::from(rng.next_unit_f64() < 0.5),
                ])
            })
            .collect()
    }

    #[test]
    fn independent_coins_keep_the_empty_graph() {
        let schema = binary_schema(2);
        let records = independent_records(2000, 41);
        let params = BdeuParams::default();
        let (dag, trace) =
            hill_climb(&records, &schema, &params, &SearchConfig::default()).unwrap();
        assert_eq!(dag.edge_count(), 0);
        assert!(trace.steps.is_empty());
        // Direct verification: the empty graph outscores both one-edge graphs.
        let mut cache = ScoreCache::new();
        let empty = bdeu_score(&Dag::empty(2), &records, &schema, &params, &mut cache).unwrap();
        for edges in [[(0, 1)], [(1, 0)]] {
            let one = bdeu_score(
                &Dag::from_edges(2, &edges).unwrap(),
                &records,
                &schema,
                &params,
                &mut cache,
            )
            .unwrap();
            assert!(empty > one);
        }
    }

    fn chain_records(n: usize, seed: u64) -> Vec<EncounterRecord> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| {
                let a = u8::from(rng.next_unit_f64() < 0.5);
                let b = if rng.next_unit_f64() < 0.85 { a } else { 1 - a };
                let c = if rng.next_unit_f64() < 0.85 { b } else { 1 - b };
                record(&[a, b, c])
            })
            .collect()
    }

    #[test]
    fn recovers_chain_skeleton_without_shortcut_edge() {
        let schema = binary_schema(3);
        let records = chain_records(20000, 11);
        let (dag, _) =
            hill_climb(&records, &schema, &BdeuParams::default(), &SearchConfig::default()).unwrap();
        let skeleton = dag.skeleton();
        assert!(skeleton[0].contains(&1), "A-B missing: {skeleton:?}");
        assert!(skeleton[1].contains(&2), "B-C missing: {skeleton:?}");
        assert!(!skeleton[0].contains(&2), "spurious A-C edge: {skeleton:?}");
        // The exhaustive oracle agrees this equivalence class is optimal.
        let (best, _) = exhaustive_best(&records, &schema, &BdeuParams::default()).unwrap();
        assert_eq!(best.skeleton(), skeleton);
    }

    #[test]
    fn trace_scores_strictly_increase_and_optimum_is_local() {
        let schema = binary_schema(3);
        let records = chain_records(5000, 23);
        let params = BdeuParams::default();
        let cfg = SearchConfig::default();
        let (dag, trace) = hill_climb(&records, &schema, &params, &cfg).unwrap();
        for step in &trace.steps {
            assert!(step.score_after > step.score_before);
        }
        for pair in trace.steps.windows(2) {
            assert!(pair[1].score_before == pair[0].score_after);
        }
        assert!(is_local_optimum(&dag, &records, &schema, &params, &cfg));
    }

    #[test]
    fn identical_inputs_give_identical_results() {
        let schema = binary_schema(3);
        let records = chain_records(3000, 8);
        let params = BdeuParams::default();
        let cfg = SearchConfig::default();
        let (dag_a, trace_a) = hill_climb(&records, &schema, &params, &cfg).unwrap();
        let (dag_b, trace_b) = hill_climb(&records, &schema, &params, &cfg).unwrap();
        assert_eq!(dag_a, dag_b);
        assert_eq!(trace_a.to_csv(), trace_b.to_csv());
    }

    #[test]
    fn max_parents_is_respected() {
        let schema = binary_schema(4);
        let mut rng = Rng::new(17);
        // child 3 depends on all of 0..2 so the climber wants many parents
        let records: Vec<EncounterRecord> = (0..8000)
            .map(|_| {
                let a = u8::from(rng.next_unit_f64() < 0.5);
                let b = u8::from(rng.next_unit_f64() < 0.5);
                let c = u8::from(rng.next_unit_f64() < 0.5);
                let p = 0.05 + 0.3 * (a + b + c) as f64;
                record(&[a, b, c, u8::from(rng.next_unit_f64() < p)])
            })
            .collect();
        let cfg = SearchConfig {
            max_parents: 2,
            ..SearchConfig::default()
        };
        let (dag, _) = hill_climb(&records, &schema, &BdeuParams::default(), &cfg).unwrap();
        for node in 0..4 {
            assert!(dag.parents(node).len() <= 2);
        }
    }

    #[test]
    fn trace_csv_has_expected_header() {
        let trace = SearchTrace {
            steps: vec![TraceStep {
                iteration: 0,
                applied: Move {
                    kind: MoveKind::Add,
                    source: 0,
                    target: 1,
                },
                score_before: -10.0,
                score_after: -9.5,
            }],
        };
        let csv = trace.to_csv();
        assert!(csv.starts_with("iter,move,src,dst,score_before,score_after\n"));
        assert!(csv.contains("0,add,0,1,"));
    }
}
