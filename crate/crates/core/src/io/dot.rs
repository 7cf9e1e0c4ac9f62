//! Deterministic Graphviz DOT export with optional reconciliation
//! annotations (preimage gene vertices listed on their targets).

use std::collections::BTreeMap;

use crate::axioms::ReconMap;
use crate::digraph::{Digraph, Item};
use crate::io::{gene_tree_naming, mul_tree_naming, network_naming, Naming};
use crate::phylo::{GeneTree, MULTree, Network};

/// Preimages of every target item under a reconciliation, rendered as
/// gene-vertex names.
fn annotations(mu: &ReconMap, t: &GeneTree) -> BTreeMap<Item, Vec<String>> {
    let gn = gene_tree_naming(t);
    let mut out: BTreeMap<Item, Vec<String>> = BTreeMap::new();
    for (v, img) in mu.iter() {
        out.entry(img).or_default().push(gn.of[&v].clone());
    }
    out
}

fn write_graph(
    g: &Digraph,
    naming: &Naming,
    notes: &BTreeMap<Item, Vec<String>>,
    out: &mut String,
) {
    out.push_str("digraph reconet {\n");
    out.push_str("  rankdir=TB;\n  node [shape=ellipse, fontsize=10];\n");
    for v in g.vertices() {
        let mut label = naming.of[&v].clone();
        if let Some(pre) = notes.get(&Item::Vertex(v)) {
            label.push_str("\\n<- ");
            label.push_str(&pre.join(","));
        }
        out.push_str(&format!("  n{} [label=\"{}\"];\n", v.0, label));
    }
    for a in g.arcs() {
        match notes.get(&Item::Arc(a)) {
            Some(pre) => out.push_str(&format!(
                "  n{} -> n{} [label=\"<- {}\"];\n",
                a.tail.0,
                a.head.0,
                pre.join(",")
            )),
            None => out.push_str(&format!("  n{} -> n{};\n", a.tail.0, a.head.0)),
        }
    }
    out.push_str("}\n");
}

pub fn export_gene_tree(t: &GeneTree) -> String {
    let naming = gene_tree_naming(t);
    // Decorate inner vertices with their events.
    let naming = Naming {
        of: naming
            .of
            .iter()
            .map(|(&v, s)| {
                let label = match t.event(v) {
                    Some(e) => format!("{s} [{e}]"),
                    None => format!("{s} ({})", t.species_of(v).unwrap_or("?")),
                };
                (v, label)
            })
            .collect(),
        back: naming.back,
    };
    let mut out = String::new();
    write_graph(t.graph(), &naming, &BTreeMap::new(), &mut out);
    out
}

pub fn export_network(n: &Network, annotated: Option<(&GeneTree, &ReconMap)>) -> String {
    let naming = network_naming(n);
    let notes = annotated
        .map(|(t, mu)| annotations(mu, t))
        .unwrap_or_default();
    let mut out = String::new();
    write_graph(n.graph(), &naming, &notes, &mut out);
    out
}

pub fn export_mul_tree(m: &MULTree, annotated: Option<(&GeneTree, &ReconMap)>) -> String {
    let naming = mul_tree_naming(m);
    let naming = Naming {
        of: naming
            .of
            .iter()
            .map(|(&v, s)| match m.species_of(v) {
                Some(sp) => (v, format!("{s} ({sp})")),
                None => (v, s.clone()),
            })
            .collect(),
        back: naming.back,
    };
    let notes = annotated
        .map(|(t, mu)| annotations(mu, t))
        .unwrap_or_default();
    let mut out = String::new();
    write_graph(m.graph(), &naming, &notes, &mut out);
    out
}
