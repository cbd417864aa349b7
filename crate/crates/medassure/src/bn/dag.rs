//! Directed graph over schema variables, stored as per-node parent sets.

use crate::error::{Error, Result};
use crate::records::Schema;

/// A directed graph on `n` nodes. Parent sets are kept sorted ascending.
///
/// The constructor rejects self-loops and unsorted input but deliberately
/// allows cycles, so that callers whose contracts demand acyclicity can
/// detect and report it themselves (see [`Dag::topological_order`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    n: usize,
    parent_sets: Vec<Vec<usize>>,
}

impl Dag {
    /// The empty graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Dag {
            n,
            parent_sets: vec![Vec::new(); n],
        }
    }

    pub fn from_parent_sets(parent_sets: Vec<Vec<usize>>) -> Result<Self> {
        let n = parent_sets.len();
        for (node, parents) in parent_sets.iter().enumerate() {
            for window in parents.windows(2) {
                if window[0] >= window[1] {
                    return Err(Error::Input(format!(
                        "parent set of node {node} must be sorted and duplicate-free"
                    )));
                }
            }
            for &p in parents {
                if p == node {
                    return Err(Error::Input(format!("node {node} lists itself as a parent")));
                }
                if p >= n {
                    return Err(Error::Input(format!(
                        "node {node} lists out-of-range parent {p}"
                    )));
                }
            }
        }
        Ok(Dag { n, parent_sets })
    }

    /// Convenience constructor from directed edges `(parent, child)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parent_sets = vec![Vec::new(); n];
        for &(parent, child) in edges {
            if parent >= n || child >= n {
                return Err(Error::Input(format!("edge ({parent},{child}) out of range")));
            }
            parent_sets[child].push(parent);
        }
        for parents in &mut parent_sets {
            parents.sort_unstable();
            parents.dedup();
        }
        Dag::from_parent_sets(parent_sets)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parent_sets[node]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parent_sets
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.parent_sets[child].binary_search(&parent).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parent_sets.iter().map(Vec::len).sum()
    }

    /// Directed edges `(parent, child)` in (child, parent) index order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (child, parents) in self.parent_sets.iter().enumerate() {
            for &parent in parents {
                edges.push((parent, child));
            }
        }
        edges
    }

    pub fn add_edge(&mut self, parent: usize, child: usize) {
        if let Err(pos) = self.parent_sets[child].binary_search(&parent) {
            self.parent_sets[child].insert(pos, parent);
        }
    }

    pub fn remove_edge(&mut self, parent: usize, child: usize) {
        if let Ok(pos) = self.parent_sets[child].binary_search(&parent) {
            self.parent_sets[child].remove(pos);
        }
    }

    /// Kahn's algorithm. `Err` if the graph has a directed cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut remaining: Vec<usize> = self.parent_sets.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); self.n];
        for (child, parents) in self.parent_sets.iter().enumerate() {
            for &parent in parents {
                children[parent].push(child);
            }
        }
        // Smallest-index-first queue keeps the order deterministic.
        let mut ready: Vec<usize> = (0..self.n).filter(|&i| remaining[i] == 0).collect();
        ready.sort_unstable_by(|a, b| b.cmp(a));
        let mut order = Vec::with_capacity(self.n);
        while let Some(node) = ready.pop() {
            order.push(node);
            for &child in &children[node] {
                remaining[child] -= 1;
                if remaining[child] == 0 {
                    let pos = ready.binary_search_by(|x| child.cmp(x)).unwrap_or_else(|p| p);
                    ready.insert(pos, child);
                }
            }
        }
        if order.len() == self.n {
            Ok(order)
        } else {
            Err(Error::CyclicGraph)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// True if adding `parent -> child` would close a directed cycle, i.e.
    /// `child` already reaches `parent`.
    pub fn would_create_cycle(&self, parent: usize, child: usize) -> bool {
        if parent == child {
            return true;
        }
        let mut children = vec![Vec::new(); self.n];
        for (c, parents) in self.parent_sets.iter().enumerate() {
            for &p in parents {
                children[p].push(c);
            }
        }
        let mut stack = vec![child];
        let mut seen = vec![false; self.n];
        while let Some(node) = stack.pop() {
            if node == parent {
                return true;
            }
            if std::mem::replace(&mut seen[node], true) {
                continue;
            }
            stack.extend_from_slice(&children[node]);
        }
        false
    }

    /// Undirected adjacency sets (the skeleton).
    pub fn skeleton(&self) -> Vec<Vec<usize>> {
        let mut adjacency = vec![Vec::new(); self.n];
        for (child, parents) in self.parent_sets.iter().enumerate() {
            for &parent in parents {
                adjacency[child].push(parent);
                adjacency[parent].push(child);
            }
        }
        for neighbors in &mut adjacency {
            neighbors.sort_unstable();
            neighbors.dedup();
        }
        adjacency
    }

    /// DOT digraph with variable codes as node labels; node and edge lines
    /// are emitted in deterministic order.
    pub fn to_dot(&self, schema: &Schema) -> String {
        let mut out = String::from("digraph structure {\n");
        for i in 0..self.n {
            out.push_str(&format!("  \"{}\";\n", schema.code(i)));
        }
        for (parent, child) in self.edges_sorted_by_code(schema) {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", schema.code(parent), schema.code(child)));
        }
        out.push_str("}\n");
        out
    }

    fn edges_sorted_by_code(&self, schema: &Schema) -> Vec<(usize, usize)> {
        let mut edges = self.edges();
        edges.sort_by(|a, b| {
            (schema.code(a.0), schema.code(a.1)).cmp(&(schema.code(b.0), schema.code(b.1)))
        });
        edges
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::study_schema;

    #[test]
    fn rejects_self_loop_and_unsorted_parents() {
        assert!(Dag::from_parent_sets(vec![vec![0]]).is_err());
        assert!(Dag::from_parent_sets(vec![vec![], vec![], vec![1, 0]]).is_err());
        assert!(Dag::from_parent_sets(vec![vec![], vec![0, 0]]).is_err());
    }

    #[test]
    fn topological_order_on_chain() {
        let dag = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(dag.topological_order().unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn cycle_is_detected() {
        let dag = Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(!dag.is_acyclic());
        assert!(matches!(dag.topological_order(), Err(Error::CyclicGraph)));
    }

    #[test]
    fn would_create_cycle_looks_along_descendants() {
        let dag = Dag::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        assert!(dag.would_create_cycle(2, 0));
        assert!(!dag.would_create_cycle(0, 3));
        assert!(dag.would_create_cycle(0, 0));
    }

    // Independent oracle: a digraph is acyclic iff nodes can be repeatedly
    // removed once they have no remaining parents.
    fn acyclic_by_elimination(n: usize, edges: &[(usize, usize)]) -> bool {
        let mut remaining: Vec<(usize, usize)> = edges.to_vec();
        let mut alive: Vec<bool> = vec![true; n];
        loop {
            let next = (0..n).find(|&v| alive[v] && remaining.iter().all(|&(_, c)| c != v));
            match next {
                Some(v) => {
                    alive[v] = false;
                    remaining.retain(|&(p, c)| p != v && c != v);
                }
                None => break,
            }
        }
        alive.iter().all(|&a| !a)
    }

    #[test]
    fn acyclicity_matches_elimination_oracle_on_all_three_node_digraphs() {
        let pairs = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
        let mut dag_count = 0;
        for mask in 0u32..64 {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect();
            let dag = Dag::from_edges(3, &edges).unwrap();
            assert_eq!(dag.is_acyclic(), acyclic_by_elimination(3, &edges), "mask {mask}");
            if dag.is_acyclic() {
                dag_count += 1;
            }
        }
        assert_eq!(dag_count, 25); // the 25 three-node DAGs among all 64 digraphs
    }

    #[test]
    fn dot_output_is_deterministic_and_labelled() {
        let schema = study_schema();
        let dag = Dag::from_edges(6, &[(2, 5), (0, 5)]).unwrap();
        let dot = dag.to_dot(&schema);
        assert!(dot.contains("\"Post_beta\" -> \"AF\";"));
        assert!(dot.contains("\"Surgery\" -> \"AF\";"));
        assert_eq!(dot, dag.to_dot(&schema));
        let post = dot.find("\"Post_beta\" -> \"AF\"").unwrap();
        let surgery = dot.find("\"Surgery\" -> \"AF\"").unwrap();
        assert!(post < surgery);
    }
}
