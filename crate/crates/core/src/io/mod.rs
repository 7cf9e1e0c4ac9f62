//! Parsers, serializers and DOT export.
//!
//! Formats:
//! - gene trees: a Newick dialect with `gene@species` leaves and
//!   mandatory `S`/`D` inner labels;
//! - networks: extended Newick with `#H` hybrid tags, the root arc
//!   written as a top-level single child; repeating a hybrid reference
//!   under one parent encodes parallel arcs;
//! - MUL-trees: Newick with species-labeled leaves (repeats allowed)
//!   and single-child groups for degree-(1,1) vertices;
//! - reconciliation maps: tab-separated records
//!   `<gene-vertex> TAB vertex|arc TAB <target>` with arcs written as
//!   `tail>head#index`;
//! - triple sets: one `a b | c` per line.
//!
//! Serialized inner vertices carry `[id=N]` comments with preorder
//! numbers; the parsers assign vertex ids in the same preorder, so
//! names in map files resolve against re-parsed documents.

pub mod dot;
pub mod map;
pub mod newick;

use std::collections::BTreeMap;

use crate::digraph::{Digraph, VertexId};
use crate::phylo::{GeneTree, MULTree, Network};

/// Deterministic preorder numbering: DFS from the root, children in
/// arc insertion order, each vertex numbered at first visit.
pub(crate) fn preorder_numbers(g: &Digraph) -> BTreeMap<VertexId, u32> {
    let mut order = BTreeMap::new();
    let Some(root) = g.root() else {
        return order;
    };
    let mut stack = vec![root];
    let mut next = 0u32;
    while let Some(v) = stack.pop() {
        if order.contains_key(&v) {
            continue;
        }
        order.insert(v, next);
        next += 1;
        for a in g.out(v).iter().rev() {
            stack.push(a.head);
        }
    }
    order
}

/// Two-way naming of a document's vertices as used in map files and
/// DOT output.
pub struct Naming {
    pub of: BTreeMap<VertexId, String>,
    pub back: BTreeMap<String, VertexId>,
}

impl Naming {
    fn from_pairs(pairs: impl IntoIterator<Item = (VertexId, String)>) -> Naming {
        let of: BTreeMap<VertexId, String> = pairs.into_iter().collect();
        let back = of.iter().map(|(&v, s)| (s.clone(), v)).collect();
        Naming { of, back }
    }
}

/// Gene-tree naming: leaves by gene name, inner vertices `v<preorder>`.
pub fn gene_tree_naming(t: &GeneTree) -> Naming {
    let nums = preorder_numbers(t.graph());
    Naming::from_pairs(t.graph().vertices().map(|v| {
        let name = match t.gene_name(v) {
            Some(g) => g.to_string(),
            None => format!("v{}", nums[&v]),
        };
        (v, name)
    }))
}

/// Network naming: leaves by species, inner vertices `v<preorder>`.
pub fn network_naming(n: &Network) -> Naming {
    let nums = preorder_numbers(n.graph());
    Naming::from_pairs(n.graph().vertices().map(|v| {
        let name = match n.species_of(v) {
            Some(s) => s.to_string(),
            None => format!("v{}", nums[&v]),
        };
        (v, name)
    }))
}

/// MUL-tree naming: every vertex `v<preorder>` (leaf species repeat,
/// so species names cannot identify leaves).
pub fn mul_tree_naming(m: &MULTree) -> Naming {
    let nums = preorder_numbers(m.graph());
    Naming::from_pairs(
        m.graph()
            .vertices()
            .map(|v| (v, format!("v{}", nums[&v]))),
    )
}
