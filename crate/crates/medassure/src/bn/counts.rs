//! Sufficient statistics for one node/parent-set family.

use crate::records::{EncounterRecord, Schema};

/// Count table for a family: `n(j, k)` tallies records with the child in
/// state `k` while the sorted parents take configuration `j`.
///
/// Parent configurations are indexed in mixed-radix order over the sorted
/// parent list, most significant digit first (lowest parent index), so two
/// implementations walking the same records produce identical tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCounts {
    pub node: usize,
    pub parents: Vec<usize>,
    /// Number of parent configurations `q`.
    pub config_count: usize,
    /// Number of child states `r`.
    pub state_count: usize,
    /// Flattened `q x r` table, row-major by configuration.
    counts: Vec<u64>,
    row_totals: Vec<u64>,
}

impl FamilyCounts {
    pub fn count(&self, config: usize, state: usize) -> u64 {
        self.counts[config * self.state_count + state]
    }

    pub fn row_total(&self, config: usize) -> u64 {
        self.row_totals[config]
    }

    pub fn row(&self, config: usize) -> &[u64] {
        &self.counts[config * self.state_count..(config + 1) * self.state_count]
    }

    pub fn total(&self) -> u64 {
        self.row_totals.iter().sum()
    }
}

/// Mixed-radix index of a record's parent configuration.
pub fn parent_config_index(parents: &[usize], schema: &Schema, values: &[u8]) -> usize {
    let mut index = 0;
    for &parent in parents {
        index = index * schema.cardinality(parent) + values[parent] as usize;
    }
    index
}

/// Number of parent configurations (1 for the empty parent set).
pub fn config_count(parents: &[usize], schema: &Schema) -> usize {
    parents.iter().map(|&p| schema.cardinality(p)).product()
}

/// Exact tally of `records` for the family `(node | parents)`.
pub fn count_family(
    node: usize,
    parents: &[usize],
    records: &[EncounterRecord],
    schema: &Schema,
) -> FamilyCounts {
    debug_assert!(parents.windows(2).all(|w| w[0] < w[1]), "parents must be sorted");
    let q = config_count(parents, schema);
    let r = schema.cardinality(node);
    let mut counts = vec![0u64; q * r];
    for record in records {
        let j = parent_config_index(parents, schema, &record.values);
        counts[j * r + record.values[node] as usize] += 1;
    }
    let row_totals = (0..q).map(|j| counts[j * r..(j + 1) * r].iter().sum()).collect();
    FamilyCounts {
        node,
        parents: parents.to_vec(),
        config_count: q,
        state_count: r,
        counts,
        row_totals,
    }
}
