//! Completed partially directed acyclic graphs.
//!
//! A CPDAG represents a Markov equivalence class: the shared skeleton, with
//! an edge directed exactly when every DAG in the class orients it the same
//! way. Learnt arrow directions outside the compelled set carry no meaning,
//! so downstream consumers (findings, gap reports) compare adjacency on the
//! CPDAG skeleton rather than on raw edges.

use std::collections::BTreeSet;

use crate::bn::dag::Dag;
use crate::records::Schema;

/// Partially directed graph: directed edges `(from, to)` plus undirected
/// edges `{a, b}` stored as `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpdag {
    n: usize,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.undirected.contains(&key)
            || self.directed.contains(&(a, b))
            || self.directed.contains(&(b, a))
    }

    /// Unordered adjacent pairs, `a < b`.
    pub fn skeleton_pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut pairs = self.undirected.clone();
        for &(a, b) in &self.directed {
            pairs.insert((a.min(b), a.max(b)));
        }
        pairs
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    /// Structural Hamming distance: skeleton insertions/deletions count one
    /// each, and a shared edge whose mark differs (direction flip, or
    /// directed vs undirected) counts one.
    pub fn shd(&self, other: &Cpdag) -> usize {
        let mine = self.skeleton_pairs();
        let theirs = other.skeleton_pairs();
        let mut distance = mine.symmetric_difference(&theirs).count();
        for &(a, b) in mine.intersection(&theirs) {
            let our_mark = self.mark(a, b);
            let their_mark = other.mark(a, b);
            if our_mark != their_mark {
                distance += 1;
            }
        }
        distance
    }

    fn mark(&self, a: usize, b: usize) -> u8 {
        if self.directed.contains(&(a, b)) {
            1
        } else if self.directed.contains(&(b, a)) {
            2
        } else {
            0
        }
    }

    /// DOT rendering: compelled edges as arrows, reversible edges with
    /// `dir=none`; deterministic ordering.
    pub fn to_dot(&self, schema: &Schema) -> String {
        let mut out = String::from("digraph cpdag {\n");
        for i in 0..self.n {
            out.push_str(&format!("  \"{}\";\n", schema.code(i)));
        }
        let mut directed: Vec<_> = self.directed.iter().collect();
        directed.sort_by_key(|&&(a, b)| (schema.code(a).to_string(), schema.code(b).to_string()));
        for &(a, b) in directed {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", schema.code(a), schema.code(b)));
        }
        let mut undirected: Vec<_> = self.undirected.iter().collect();
        undirected.sort_by_key(|&&(a, b)| (schema.code(a).to_string(), schema.code(b).to_string()));
        for &(a, b) in undirected {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [dir=none];\n",
                schema.code(a),
                schema.code(b)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// The CPDAG of `dag`: v-structures stay directed, Meek rules propagate the
/// remaining compelled orientations, everything else is undirected.
pub fn to_cpdag(dag: &Dag) -> Cpdag {
    let n = dag.node_count();
    let skeleton = dag.skeleton();
    let adjacent = |a: usize, b: usize| skeleton[a].binary_search(&b).is_ok();

    // Directed part starts from the v-structures a -> c <- b with a !~ b.
    let mut directed = BTreeSet::new();
    for child in 0..n {
        let parents = dag.parents(child);
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                if !adjacent(a, b) {
                    directed.insert((a, child));
                    directed.insert((b, child));
                }
            }
        }
    }
    let mut undirected: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (child, parents) in dag.parent_sets().iter().enumerate() {
        for &parent in parents {
            if !directed.contains(&(parent, child)) {
                undirected.insert((parent.min(child), parent.max(child)));
            }
        }
    }

    meek_closure(n, &mut directed, &mut undirected, &adjacent);
    Cpdag {
        n,
        directed,
        undirected,
    }
}

/// Meek rules R1-R3, applied until no rule fires. Starting from the
/// v-structures of a DAG these three rules reach the full compelled set.
fn meek_closure(
    n: usize,
    directed: &mut BTreeSet<(usize, usize)>,
    undirected: &mut BTreeSet<(usize, usize)>,
    adjacent: &dyn Fn(usize, usize) -> bool,
) {
    loop {
        let mut oriented: Option<(usize, usize)> = None;

        'scan: for &(a, b) in undirected.iter() {
            for (x, y) in [(a, b), (b, a)] {
                // R1: z -> x, x - y, z !~ y  =>  x -> y
                for z in 0..n {
                    if directed.contains(&(z, x)) && !adjacent(z, y) {
                        oriented = Some((x, y));
                        break 'scan;
                    }
                }
                // R2: x -> w -> y with x - y  =>  x -> y
                for w in 0..n {
                    if directed.contains(&(x, w)) && directed.contains(&(w, y)) {
                        oriented = Some((x, y));
                        break 'scan;
                    }
                }
                // R3: x - y, x - c, x - d, c -> y, d -> y, c !~ d  =>  x -> y
                let into_y: Vec<usize> = (0..n).filter(|&c| directed.contains(&(c, y))).collect();
                for (i, &c) in into_y.iter().enumerate() {
                    for &d in &into_y[i + 1..] {
                        let x_c = undirected.contains(&(x.min(c), x.max(c)));
                        let x_d = undirected.contains(&(x.min(d), x.max(d)));
                        if x_c && x_d && !adjacent(c, d) {
                            oriented = Some((x, y));
                            break 'scan;
                        }
                    }
                }
            }
        }

        match oriented {
            Some((x, y)) => {
                undirected.remove(&(x.min(y), x.max(y)));
                directed.insert((x, y));
            }
            None => break,
        }
    }
}
