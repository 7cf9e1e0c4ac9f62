//! Phylogenetic domain types over [`Digraph`]: species networks,
//! event-labeled gene trees and (pseudo-)MUL-trees, with full
//! structural validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::digraph::{ArcId, Digraph, DigraphBuilder, SubdivisionMap, VertexId};
use crate::error::{Error, Result};

/// Speciation or duplication.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Event {
    Speciation,
    Duplication,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Speciation => write!(f, "S"),
            Event::Duplication => write!(f, "D"),
        }
    }
}

/// One violated structural axiom, with a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralViolation {
    pub axiom: String,
    pub witness: String,
    pub message: String,
}

impl fmt::Display for StructuralViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] at {}: {}", self.axiom, self.witness, self.message)
    }
}

fn report(violations: Vec<StructuralViolation>) -> Error {
    Error::Validation(
        violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
    )
}

/// A species network per the (N1)-(N3) axioms: single outdegree-1 root,
/// leaves are exactly the species, every other vertex a tree vertex or
/// hybrid vertex. Multi-arcs are allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    graph: Digraph,
    root: VertexId,
    leaf_label: BTreeMap<VertexId, String>,
    label_leaf: BTreeMap<String, VertexId>,
}

impl Network {
    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    /// The unique child of the root (the first tree vertex).
    pub fn root_child(&self) -> VertexId {
        self.graph.out(self.root)[0].head
    }

    pub fn species(&self) -> impl Iterator<Item = &str> {
        self.label_leaf.keys().map(|s| s.as_str())
    }

    pub fn num_species(&self) -> usize {
        self.label_leaf.len()
    }

    pub fn leaf_of(&self, species: &str) -> Option<VertexId> {
        self.label_leaf.get(species).copied()
    }

    pub fn species_of(&self, leaf: VertexId) -> Option<&str> {
        self.leaf_label.get(&leaf).map(|s| s.as_str())
    }

    pub fn is_hybrid(&self, v: VertexId) -> bool {
        self.graph.indeg(v) > 1 && self.graph.outdeg(v) == 1
    }

    pub fn is_tree_vertex(&self, v: VertexId) -> bool {
        self.graph.indeg(v) == 1 && self.graph.outdeg(v) > 1
    }

    pub fn hybrid_vertices(&self) -> Vec<VertexId> {
        self.graph.vertices().filter(|&v| self.is_hybrid(v)).collect()
    }

    pub fn is_multi_arc_free(&self) -> bool {
        !self.graph.has_multi_arcs()
    }

    /// A multi-arc free network without hybrid vertices.
    pub fn is_phylogenetic_tree(&self) -> bool {
        self.is_multi_arc_free() && self.hybrid_vertices().is_empty()
    }

    /// Species below a vertex, sorted.
    pub fn species_below(&self, v: VertexId) -> Result<BTreeSet<String>> {
        Ok(self
            .graph
            .leaves_below(v)?
            .into_iter()
            .map(|l| self.leaf_label[&l].clone())
            .collect())
    }

    /// Total number of vertices plus arcs (the search-size measure).
    pub fn num_elements(&self) -> usize {
        self.graph.num_vertices() + self.graph.num_arcs()
    }
}

/// Validate (N1)-(N3) and the leaf labeling; returns a structured
/// report naming each violated axiom and its witness vertex.
pub fn validate_network(graph: Digraph, labels: BTreeMap<VertexId, String>) -> Result<Network> {
    let mut violations = Vec::new();
    let root = match graph.root() {
        Some(r) => r,
        None => {
            return Err(report(vec![StructuralViolation {
                axiom: "N1".into(),
                witness: "-".into(),
                message: "graph has no root".into(),
            }]))
        }
    };
    if graph.outdeg(root) != 1 {
        violations.push(StructuralViolation {
            axiom: "N1".into(),
            witness: root.to_string(),
            message: format!("root must have outdegree 1, has {}", graph.outdeg(root)),
        });
    } else {
        let child = graph.out(root)[0].head;
        if graph.indeg(child) != 1 || graph.outdeg(child) < 2 {
            violations.push(StructuralViolation {
                axiom: "N1".into(),
                witness: child.to_string(),
                message: format!(
                    "root child must have indegree 1 and outdegree >= 2, has ({}, {})",
                    graph.indeg(child),
                    graph.outdeg(child)
                ),
            });
        }
    }
    for v in graph.vertices() {
        let (ind, outd) = (graph.indeg(v), graph.outdeg(v));
        let labeled = labels.contains_key(&v);
        if outd == 0 {
            if ind != 1 {
                violations.push(StructuralViolation {
                    axiom: "N2".into(),
                    witness: v.to_string(),
                    message: format!("leaf must have indegree 1, has {ind}"),
                });
            }
            if !labeled {
                violations.push(StructuralViolation {
                    axiom: "N2".into(),
                    witness: v.to_string(),
                    message: "leaf carries no species label".into(),
                });
            }
        } else {
            if labeled {
                violations.push(StructuralViolation {
                    axiom: "N2".into(),
                    witness: v.to_string(),
                    message: "non-leaf vertex carries a species label".into(),
                });
            }
            if v != root {
                let tree = ind == 1 && outd > 1;
                let hybrid = ind > 1 && outd == 1;
                if !tree && !hybrid {
                    violations.push(StructuralViolation {
                        axiom: "N3".into(),
                        witness: v.to_string(),
                        message: format!(
                            "inner vertex must be a tree vertex or hybrid vertex, degrees ({ind}, {outd})"
                        ),
                    });
                }
            }
        }
    }
    let mut label_leaf = BTreeMap::new();
    for (&v, name) in &labels {
        if label_leaf.insert(name.clone(), v).is_some() {
            violations.push(StructuralViolation {
                axiom: "N2".into(),
                witness: name.clone(),
                message: "duplicate species label".into(),
            });
        }
    }
    if labels.len() < 2 {
        violations.push(StructuralViolation {
            axiom: "N2".into(),
            witness: "-".into(),
            message: format!("a network needs at least two species, found {}", labels.len()),
        });
    }
    if !violations.is_empty() {
        return Err(report(violations));
    }
    Ok(Network {
        graph,
        root,
        leaf_label: labels,
        label_leaf,
    })
}

/// An event-labeled gene tree `(T; t, σ)`: a reduced tree (root of
/// outdegree >= 2, every inner vertex of outdegree >= 2) on genes, with
/// an event at every inner vertex and a gene-to-species map σ whose
/// image has at least two species.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneTree {
    graph: Digraph,
    root: VertexId,
    events: BTreeMap<VertexId, Event>,
    gene_label: BTreeMap<VertexId, String>,
    label_gene: BTreeMap<String, VertexId>,
    sigma: BTreeMap<VertexId, String>,
}

impl GeneTree {
    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn event(&self, v: VertexId) -> Option<Event> {
        self.events.get(&v).copied()
    }

    pub fn is_gene_leaf(&self, v: VertexId) -> bool {
        self.gene_label.contains_key(&v)
    }

    pub fn gene_name(&self, v: VertexId) -> Option<&str> {
        self.gene_label.get(&v).map(|s| s.as_str())
    }

    pub fn gene_vertex(&self, name: &str) -> Option<VertexId> {
        self.label_gene.get(name).copied()
    }

    pub fn genes(&self) -> impl Iterator<Item = (VertexId, &str)> {
        self.gene_label.iter().map(|(&v, s)| (v, s.as_str()))
    }

    /// σ of a gene leaf.
    pub fn species_of(&self, leaf: VertexId) -> Option<&str> {
        self.sigma.get(&leaf).map(|s| s.as_str())
    }

    /// The species set S (image of σ), sorted.
    pub fn species(&self) -> BTreeSet<String> {
        self.sigma.values().cloned().collect()
    }

    pub fn inner_vertices(&self) -> Vec<VertexId> {
        self.graph
            .vertices()
            .filter(|&v| !self.graph.is_leaf(v))
            .collect()
    }

    pub fn is_binary(&self) -> bool {
        self.inner_vertices()
            .iter()
            .all(|&v| self.graph.outdeg(v) == 2)
    }

    /// σ(L(v)): the species of the gene leaves weakly below `v`.
    pub fn species_below(&self, v: VertexId) -> Result<BTreeSet<String>> {
        Ok(self
            .graph
            .leaves_below(v)?
            .into_iter()
            .map(|l| self.sigma[&l].clone())
            .collect())
    }
}

/// Validate the gene-tree axioms; see [`GeneTree`].
pub fn validate_gene_tree(
    graph: Digraph,
    events: BTreeMap<VertexId, Event>,
    sigma_by_gene: BTreeMap<VertexId, (String, String)>,
) -> Result<GeneTree> {
    let mut violations = Vec::new();
    let root = match graph.root() {
        Some(r) => r,
        None => {
            return Err(report(vec![StructuralViolation {
                axiom: "gene-tree".into(),
                witness: "-".into(),
                message: "graph has no root".into(),
            }]))
        }
    };
    if !graph.is_tree() {
        violations.push(StructuralViolation {
            axiom: "gene-tree".into(),
            witness: "-".into(),
            message: "underlying graph is not a rooted tree".into(),
        });
    }
    if graph.has_multi_arcs() {
        violations.push(StructuralViolation {
            axiom: "gene-tree".into(),
            witness: "-".into(),
            message: "gene trees have no multi-arcs".into(),
        });
    }
    for v in graph.vertices() {
        if graph.is_leaf(v) {
            if !sigma_by_gene.contains_key(&v) {
                violations.push(StructuralViolation {
                    axiom: "sigma".into(),
                    witness: v.to_string(),
                    message: "gene leaf without a gene name / species".into(),
                });
            }
        } else {
            if graph.outdeg(v) < 2 {
                violations.push(StructuralViolation {
                    axiom: "gene-tree".into(),
                    witness: v.to_string(),
                    message: "inner vertices of a reduced tree have outdegree >= 2".into(),
                });
            }
            if !events.contains_key(&v) {
                violations.push(StructuralViolation {
                    axiom: "events".into(),
                    witness: v.to_string(),
                    message: "inner vertex without an event label".into(),
                });
            }
        }
    }
    let mut gene_label = BTreeMap::new();
    let mut label_gene = BTreeMap::new();
    let mut sigma = BTreeMap::new();
    for (&v, (gene, species)) in &sigma_by_gene {
        gene_label.insert(v, gene.clone());
        if label_gene.insert(gene.clone(), v).is_some() {
            violations.push(StructuralViolation {
                axiom: "sigma".into(),
                witness: gene.clone(),
                message: "duplicate gene name".into(),
            });
        }
        sigma.insert(v, species.clone());
    }
    let species: BTreeSet<&String> = sigma.values().collect();
    if species.len() < 2 {
        violations.push(StructuralViolation {
            axiom: "sigma".into(),
            witness: "-".into(),
            message: "genes must come from at least two distinct species".into(),
        });
    }
    if !violations.is_empty() {
        return Err(report(violations));
    }
    Ok(GeneTree {
        graph,
        root,
        events,
        gene_label,
        label_gene,
        sigma,
    })
}

/// A speciation vertex is degenerate when all of its children carry the
/// same σ-leaf-set; a gene tree is well behaved when no speciation
/// vertex is degenerate.
pub fn is_well_behaved(tree: &GeneTree) -> bool {
    for v in tree.inner_vertices() {
        if tree.event(v) != Some(Event::Speciation) {
            continue;
        }
        let sets: Vec<BTreeSet<String>> = tree
            .graph()
            .children(v)
            .iter()
            .map(|&c| tree.species_below(c).expect("child exists"))
            .collect();
        for (i, si) in sets.iter().enumerate() {
            if !sets.iter().enumerate().any(|(j, sj)| j != i && sj != si) {
                return false;
            }
        }
    }
    true
}

/// A (pseudo-)MUL-tree `(M, χ)`: a phylogenetic tree whose leaves are
/// partitioned by species via χ. Pseudo MUL-trees additionally permit
/// vertices with in- and outdegree one (the set D¹).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MULTree {
    graph: Digraph,
    root: VertexId,
    chi: BTreeMap<String, BTreeSet<VertexId>>,
    leaf_species: BTreeMap<VertexId, String>,
    pseudo: bool,
    d1: BTreeSet<VertexId>,
}

impl MULTree {
    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn is_pseudo(&self) -> bool {
        self.pseudo
    }

    pub fn d1(&self) -> &BTreeSet<VertexId> {
        &self.d1
    }

    pub fn chi(&self) -> &BTreeMap<String, BTreeSet<VertexId>> {
        &self.chi
    }

    pub fn chi_of(&self, species: &str) -> Option<&BTreeSet<VertexId>> {
        self.chi.get(species)
    }

    pub fn species_of(&self, leaf: VertexId) -> Option<&str> {
        self.leaf_species.get(&leaf).map(|s| s.as_str())
    }

    pub fn species(&self) -> impl Iterator<Item = &str> {
        self.chi.keys().map(|s| s.as_str())
    }

    /// Species multiset below a vertex, as sorted species names with
    /// multiplicity.
    pub fn species_multiset_below(&self, v: VertexId) -> Result<Vec<String>> {
        let mut out: Vec<String> = self
            .graph
            .leaves_below(v)?
            .into_iter()
            .map(|l| self.leaf_species[&l].clone())
            .collect();
        out.sort();
        Ok(out)
    }

    pub fn species_set_below(&self, v: VertexId) -> Result<BTreeSet<String>> {
        Ok(self.species_multiset_below(v)?.into_iter().collect())
    }
}

/// Validate a (pseudo-)MUL-tree. With `allow_pseudo = false` any
/// degree-(1,1) vertex is a violation.
pub fn validate_mul_tree(
    graph: Digraph,
    labels: BTreeMap<VertexId, String>,
    allow_pseudo: bool,
) -> Result<MULTree> {
    let mut violations = Vec::new();
    let root = match graph.root() {
        Some(r) => r,
        None => {
            return Err(report(vec![StructuralViolation {
                axiom: "mul".into(),
                witness: "-".into(),
                message: "graph has no root".into(),
            }]))
        }
    };
    if !graph.is_tree() {
        violations.push(StructuralViolation {
            axiom: "mul".into(),
            witness: "-".into(),
            message: "MUL-trees are trees".into(),
        });
    }
    if graph.outdeg(root) != 1 {
        violations.push(StructuralViolation {
            axiom: "mul".into(),
            witness: root.to_string(),
            message: format!("MUL root must have outdegree 1, has {}", graph.outdeg(root)),
        });
    }
    let mut d1 = BTreeSet::new();
    for v in graph.vertices() {
        let outd = graph.outdeg(v);
        if outd == 0 {
            if !labels.contains_key(&v) {
                violations.push(StructuralViolation {
                    axiom: "chi".into(),
                    witness: v.to_string(),
                    message: "leaf without a species label".into(),
                });
            }
        } else if v != root && outd == 1 {
            if allow_pseudo {
                d1.insert(v);
            } else {
                violations.push(StructuralViolation {
                    axiom: "mul".into(),
                    witness: v.to_string(),
                    message: "degree-(1,1) vertex in a plain MUL-tree".into(),
                });
            }
        }
    }
    let species: BTreeSet<&String> = labels.values().collect();
    if species.len() < 2 {
        violations.push(StructuralViolation {
            axiom: "chi".into(),
            witness: "-".into(),
            message: "a MUL-tree needs at least two species".into(),
        });
    }
    if !violations.is_empty() {
        return Err(report(violations));
    }
    let mut chi: BTreeMap<String, BTreeSet<VertexId>> = BTreeMap::new();
    for (&v, s) in &labels {
        chi.entry(s.clone()).or_default().insert(v);
    }
    let pseudo = !d1.is_empty();
    Ok(MULTree {
        graph,
        root,
        chi,
        leaf_species: labels,
        pseudo,
        d1,
    })
}

/// Output of [`simple_subdivision`]: the pseudo MUL-tree plus how old
/// arcs map to new paths and which fresh vertex sits on each
/// subdivided leaf arc.
#[derive(Clone, Debug)]
pub struct SimpleSubdivision {
    pub tree: MULTree,
    pub map: SubdivisionMap,
    /// Fresh interior vertex -> the original leaf arc it subdivides.
    pub interior_of_arc: BTreeMap<VertexId, ArcId>,
}

/// Subdivide once every arc into a leaf whose species class has at
/// least two members. Leaf set and χ are unchanged.
pub fn simple_subdivision(m: &MULTree) -> Result<SimpleSubdivision> {
    if m.is_pseudo() {
        return Err(Error::argument(
            "simple_subdivision expects a plain MUL-tree, not a pseudo one",
        ));
    }
    let mut plan = BTreeMap::new();
    for (species, class) in m.chi() {
        if class.len() < 2 {
            continue;
        }
        for &leaf in class {
            let arc = m
                .graph()
                .unique_in_arc(leaf)
                .ok_or_else(|| Error::structure(format!("leaf of {species} without parent")))?;
            plan.insert(arc, 2u32);
        }
    }
    let (graph, map) = m.graph().subdivide(&plan)?;
    let labels: BTreeMap<VertexId, String> = m
        .graph()
        .vertices()
        .filter_map(|v| m.species_of(v).map(|s| (v, s.to_string())))
        .collect();
    let tree = validate_mul_tree(graph, labels, true)?;
    let mut interior_of_arc = BTreeMap::new();
    for (arc, fresh) in &map.interior {
        for &v in fresh {
            interior_of_arc.insert(v, *arc);
        }
    }
    Ok(SimpleSubdivision {
        tree,
        map,
        interior_of_arc,
    })
}

fn canonical_form(m: &MULTree, v: VertexId, cache: &mut BTreeMap<VertexId, String>) -> String {
    if let Some(s) = cache.get(&v) {
        return s.clone();
    }
    let s = if m.graph().is_leaf(v) {
        format!("L:{}", m.species_of(v).unwrap_or("?"))
    } else {
        let mut parts: Vec<String> = m
            .graph()
            .out(v)
            .iter()
            .map(|a| canonical_form(m, a.head, cache))
            .collect();
        parts.sort();
        format!("({})", parts.join(","))
    };
    cache.insert(v, s.clone());
    s
}

/// Label-respecting rooted isomorphism of (pseudo-)MUL-trees via
/// canonical forms.
pub fn mul_isomorphic(m1: &MULTree, m2: &MULTree) -> bool {
    let mut c1 = BTreeMap::new();
    let mut c2 = BTreeMap::new();
    canonical_form(m1, m1.root(), &mut c1) == canonical_form(m2, m2.root(), &mut c2)
}

/// Canonicalized rooted triple `ab|c` (unordered in `{a, b}`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Triple {
    ab: (String, String),
    c: String,
}

impl Triple {
    pub fn new(a: impl Into<String>, b: impl Into<String>, c: impl Into<String>) -> Result<Triple> {
        let (a, b, c) = (a.into(), b.into(), c.into());
        if a == b || a == c || b == c {
            return Err(Error::argument(format!(
                "triple labels must be pairwise distinct: {a}, {b}, {c}"
            )));
        }
        let ab = if a <= b { (a, b) } else { (b, a) };
        Ok(Triple { ab, c })
    }

    pub fn a(&self) -> &str {
        &self.ab.0
    }

    pub fn b(&self) -> &str {
        &self.ab.1
    }

    pub fn c(&self) -> &str {
        &self.c
    }

    pub fn labels(&self) -> [&str; 3] {
        [self.a(), self.b(), self.c()]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} | {}", self.a(), self.b(), self.c())
    }
}

/// Convenience builders used across tests and the generators.
pub mod build {
    use super::*;

    /// Build a network from parent->children adjacency given as label
    /// strings; leaves are the labels not appearing as keys.
    /// Repeating a child under one parent creates parallel arcs.
    pub fn network_from_adjacency(root: &str, adj: &[(&str, &[&str])]) -> Result<Network> {
        let mut b = DigraphBuilder::new();
        let mut ids: BTreeMap<String, VertexId> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut intern = |b: &mut DigraphBuilder, name: &str| -> VertexId {
            if let Some(&v) = ids.get(name) {
                return v;
            }
            let v = b.add_vertex();
            ids.insert(name.to_string(), v);
            order.push(name.to_string());
            v
        };
        let r = intern(&mut b, root);
        for (parent, children) in adj {
            let p = intern(&mut b, parent);
            for child in *children {
                let c = intern(&mut b, child);
                b.add_arc(p, c)?;
            }
        }
        b.set_root(r);
        let g = b.build()?;
        let labels: BTreeMap<VertexId, String> = ids
            .iter()
            .filter(|(_, &v)| g.is_leaf(v))
            .map(|(name, &v)| (v, name.clone()))
            .collect();
        validate_network(g, labels)
    }

    /// Recursive gene-tree node description.
    #[derive(Clone, Debug)]
    pub enum GNode {
        Leaf { gene: String, species: String },
        Inner { event: Event, children: Vec<GNode> },
    }

    pub fn leaf(gene: &str, species: &str) -> GNode {
        GNode::Leaf {
            gene: gene.into(),
            species: species.into(),
        }
    }

    pub fn inner(event: Event, children: Vec<GNode>) -> GNode {
        GNode::Inner { event, children }
    }

    pub fn gene_tree(root: GNode) -> Result<GeneTree> {
        let mut b = DigraphBuilder::new();
        let mut events = BTreeMap::new();
        let mut sigma = BTreeMap::new();
        let r = add_gnode(&mut b, &root, &mut events, &mut sigma)?;
        b.set_root(r);
        validate_gene_tree(b.build()?, events, sigma)
    }

    fn add_gnode(
        b: &mut DigraphBuilder,
        node: &GNode,
        events: &mut BTreeMap<VertexId, Event>,
        sigma: &mut BTreeMap<VertexId, (String, String)>,
    ) -> Result<VertexId> {
        let v = b.add_vertex();
        match node {
            GNode::Leaf { gene, species } => {
                sigma.insert(v, (gene.clone(), species.clone()));
            }
            GNode::Inner { event, children } => {
                events.insert(v, *event);
                for child in children {
                    let c = add_gnode(b, child, events, sigma)?;
                    b.add_arc(v, c)?;
                }
            }
        }
        Ok(v)
    }
}
