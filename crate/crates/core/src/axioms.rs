//! Machine-checkable verifiers for the reconciliation and folding
//! axiom systems, the binary-map conversion, and brute-force
//! existence oracles at desk scale.
//!
//! Verifiers are pure and collect *all* violations instead of failing
//! fast, so corpora can be diffed. For the ancestor constraints the
//! event map is undefined on leaves; any comparable pair involving a
//! leaf uses the strict clause.

use std::collections::BTreeMap;
use std::fmt;

use crate::digraph::{ArcId, Item, VertexId};
use crate::error::{Error, Result};
use crate::phylo::{Event, GeneTree, MULTree, Network};

/// What a reconciliation map points into.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TargetKind {
    Network,
    MulTree,
}

/// A total assignment from gene-tree vertices to vertices-or-arcs of a
/// network or MUL-tree. One representation serves the R-, R*- and
/// M-axiom verifiers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReconMap {
    pub target: TargetKind,
    map: BTreeMap<VertexId, Item>,
}

impl ReconMap {
    pub fn new(target: TargetKind) -> Self {
        ReconMap {
            target,
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, v: VertexId, image: impl Into<Item>) {
        self.map.insert(v, image.into());
    }

    pub fn get(&self, v: VertexId) -> Option<Item> {
        self.map.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Item)> + '_ {
        self.map.iter().map(|(&v, &i)| (v, i))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Pair of maps `(α₁, α₂)` for binary gene trees and binary networks.
#[derive(Clone, Debug)]
pub struct BiTreeNetMap {
    pub alpha1: BTreeMap<VertexId, VertexId>,
    pub alpha2: BTreeMap<VertexId, AlphaEvent>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AlphaEvent {
    Speciation,
    Duplication,
    Contemporary,
}

/// Pair of surjections from a pseudo MUL-tree onto a network.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FoldingMap {
    pub f_v: BTreeMap<VertexId, VertexId>,
    pub f_e: BTreeMap<ArcId, ArcId>,
}

/// One axiom violation with rendered witnesses.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AxiomViolation {
    pub axiom: String,
    pub witnesses: Vec<String>,
    pub message: String,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} ({})",
            self.axiom,
            self.message,
            self.witnesses.join(", ")
        )
    }
}

/// Result of running a verifier: ok iff no violations.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, axiom: &str, witnesses: Vec<String>, message: impl Into<String>) {
        self.violations.push(AxiomViolation {
            axiom: axiom.to_string(),
            witnesses,
            message: message.into(),
        });
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

fn gname(t: &GeneTree, v: VertexId) -> String {
    t.gene_name(v).map(str::to_string).unwrap_or_else(|| v.to_string())
}

fn require_total(t: &GeneTree, mu: &ReconMap) -> Result<()> {
    for v in t.graph().vertices() {
        if mu.get(v).is_none() {
            return Err(Error::argument(format!(
                "map is not total: no image for {}",
                gname(t, v)
            )));
        }
    }
    Ok(())
}

/// Comparable gene-tree pairs `(x, y)` with `x` strictly below `y`.
fn comparable_pairs(t: &GeneTree) -> Vec<(VertexId, VertexId)> {
    let g = t.graph();
    let mut out = Vec::new();
    for y in g.vertices() {
        for x in g.vertices() {
            if x != y && g.le_unchecked(x.into(), y.into()) {
                out.push((x, y));
            }
        }
    }
    out
}

fn both_duplications(t: &GeneTree, x: VertexId, y: VertexId) -> bool {
    t.event(x) == Some(Event::Duplication) && t.event(y) == Some(Event::Duplication)
}

/// Verify the TreeNet axioms (R1), (R2.i), (R2.ii) and (R3) of a map
/// `μ` from `(T;t,σ)` into a species network.
pub fn check_treenet(t: &GeneTree, n: &Network, mu: &ReconMap) -> Result<AxiomReport> {
    require_total(t, mu)?;
    for (v, img) in mu.iter() {
        if !n.graph().contains_item(img) {
            return Err(Error::argument(format!(
                "image {img} of {} does not exist in the target network",
                gname(t, v)
            )));
        }
    }
    let mut rep = AxiomReport::default();
    let g = t.graph();
    let ng = n.graph();

    // (R1) leaf constraint.
    for (leaf, _gene) in t.genes() {
        let want = t
            .species_of(leaf)
            .and_then(|s| n.leaf_of(s))
            .map(Item::Vertex);
        if want != Some(mu.get(leaf).unwrap()) {
            rep.push(
                "R1",
                vec![gname(t, leaf)],
                format!(
                    "leaf must map to species {}, maps to {}",
                    t.species_of(leaf).unwrap_or("?"),
                    mu.get(leaf).unwrap()
                ),
            );
        }
    }

    // (R2) event constraint.
    for x in t.inner_vertices() {
        let img = mu.get(x).unwrap();
        match t.event(x).unwrap() {
            Event::Speciation => {
                let children: Vec<Item> =
                    g.children(x).iter().map(|&c| mu.get(c).unwrap()).collect();
                let targets: Vec<VertexId> = children.iter().map(|it| it.head_vertex()).collect();
                let z = match img {
                    Item::Vertex(z) => z,
                    Item::Arc(_) => {
                        rep.push(
                            "R2.i",
                            vec![gname(t, x), img.to_string()],
                            "speciation image must be a vertex",
                        );
                        continue;
                    }
                };
                let mut separated = false;
                'outer: for i in 0..targets.len() {
                    for j in i..targets.len() {
                        if ng.separates(z, targets[i], targets[j]) {
                            separated = true;
                            break 'outer;
                        }
                    }
                }
                if !separated {
                    rep.push(
                        "R2.i",
                        vec![gname(t, x), img.to_string()],
                        "speciation image separates no pair of child images",
                    );
                }
            }
            Event::Duplication => {
                if img.as_arc().is_none() {
                    rep.push(
                        "R2.ii",
                        vec![gname(t, x), img.to_string()],
                        "duplication image must be an arc",
                    );
                }
            }
        }
    }

    // (R3) ancestor constraint over every comparable pair.
    for (x, y) in comparable_pairs(t) {
        let (ix, iy) = (mu.get(x).unwrap(), mu.get(y).unwrap());
        if both_duplications(t, x, y) {
            if !ng.le(ix, iy)? {
                rep.push(
                    "R3.i",
                    vec![gname(t, x), gname(t, y)],
                    format!("{ix} must lie weakly below {iy}"),
                );
            }
        } else if !ng.lt(ix, iy)? {
            rep.push(
                "R3.ii",
                vec![gname(t, x), gname(t, y)],
                format!("{ix} must lie strictly below {iy}"),
            );
        }
    }
    Ok(rep)
}

/// Verify the relaxed tree reconciliation axioms (R1), (R2.i*),
/// (R2.ii), (R3) of a map into a species *tree*; with `strict` also
/// (R2.iii), giving a full tree reconciliation map.
pub fn check_relaxed_tree(
    t: &GeneTree,
    s: &Network,
    mu: &ReconMap,
    strict: bool,
) -> Result<AxiomReport> {
    if !s.is_phylogenetic_tree() {
        return Err(Error::structure(
            "relaxed tree reconciliation needs a species tree (no hybrids, no multi-arcs)",
        ));
    }
    require_total(t, mu)?;
    for (_, img) in mu.iter() {
        if !s.graph().contains_item(img) {
            return Err(Error::argument(format!("image {img} not in the species tree")));
        }
    }
    let mut rep = AxiomReport::default();
    let g = t.graph();
    let sg = s.graph();

    for (leaf, _gene) in t.genes() {
        let want = t
            .species_of(leaf)
            .and_then(|sp| s.leaf_of(sp))
            .map(Item::Vertex);
        if want != Some(mu.get(leaf).unwrap()) {
            rep.push(
                "R1",
                vec![gname(t, leaf)],
                format!("leaf must map to its species {}", t.species_of(leaf).unwrap_or("?")),
            );
        }
    }

    for x in t.inner_vertices() {
        let img = mu.get(x).unwrap();
        match t.event(x).unwrap() {
            Event::Speciation => {
                let species = t.species_below(x)?;
                let leaves: Vec<VertexId> = species
                    .iter()
                    .filter_map(|sp| s.leaf_of(sp))
                    .collect();
                if leaves.len() != species.len() {
                    rep.push(
                        "R2.i*",
                        vec![gname(t, x)],
                        "some species below this vertex is missing from the species tree",
                    );
                    continue;
                }
                let lca = sg.lca(&leaves)?;
                if img != Item::Vertex(lca) {
                    rep.push(
                        "R2.i*",
                        vec![gname(t, x), img.to_string()],
                        format!("speciation image must be the species-tree lca {lca}"),
                    );
                }
                if strict {
                    let kids = g.children(x);
                    for i in 0..kids.len() {
                        for j in i + 1..kids.len() {
                            let (a, b) = (mu.get(kids[i]).unwrap(), mu.get(kids[j]).unwrap());
                            if sg.comparable(a, b)? {
                                rep.push(
                                    "R2.iii",
                                    vec![gname(t, kids[i]), gname(t, kids[j])],
                                    "images of distinct speciation children must be incomparable",
                                );
                            }
                        }
                    }
                }
            }
            Event::Duplication => {
                if img.as_arc().is_none() {
                    rep.push(
                        "R2.ii",
                        vec![gname(t, x), img.to_string()],
                        "duplication image must be an arc",
                    );
                }
            }
        }
    }

    for (x, y) in comparable_pairs(t) {
        let (ix, iy) = (mu.get(x).unwrap(), mu.get(y).unwrap());
        if both_duplications(t, x, y) {
            if !sg.le(ix, iy)? {
                rep.push(
                    "R3.i",
                    vec![gname(t, x), gname(t, y)],
                    format!("{ix} must lie weakly below {iy}"),
                );
            }
        } else if !sg.lt(ix, iy)? {
            rep.push(
                "R3.ii",
                vec![gname(t, x), gname(t, y)],
                format!("{ix} must lie strictly below {iy}"),
            );
        }
    }
    Ok(rep)
}

/// Verify the MUL-reconciliation axioms (M1), (M2.i), (M2.ii), (M3)
/// of a map `κ` into a (pseudo-)MUL-tree. Vertex images must avoid D¹.
pub fn check_mul(t: &GeneTree, m: &MULTree, kappa: &ReconMap) -> Result<AxiomReport> {
    require_total(t, kappa)?;
    for (v, img) in kappa.iter() {
        if !m.graph().contains_item(img) {
            return Err(Error::argument(format!(
                "image {img} of {} does not exist in the MUL-tree",
                gname(t, v)
            )));
        }
    }
    let mut rep = AxiomReport::default();
    let g = t.graph();
    let mg = m.graph();

    for (v, img) in kappa.iter() {
        if let Item::Vertex(w) = img {
            if m.d1().contains(&w) {
                rep.push(
                    "M-domain",
                    vec![gname(t, v), w.to_string()],
                    "vertex images must avoid degree-(1,1) vertices",
                );
            }
        }
    }

    // (M1)
    for (leaf, _gene) in t.genes() {
        let img = kappa.get(leaf).unwrap();
        let ok = match img {
            Item::Vertex(w) => t
                .species_of(leaf)
                .and_then(|sp| m.chi_of(sp))
                .is_some_and(|class| class.contains(&w)),
            Item::Arc(_) => false,
        };
        if !ok {
            rep.push(
                "M1",
                vec![gname(t, leaf), img.to_string()],
                format!(
                    "gene leaf must map to a leaf in chi({})",
                    t.species_of(leaf).unwrap_or("?")
                ),
            );
        }
    }

    // (M2)
    for x in t.inner_vertices() {
        let img = kappa.get(x).unwrap();
        match t.event(x).unwrap() {
            Event::Speciation => {
                let w = match img {
                    Item::Vertex(w) if !mg.is_leaf(w) => w,
                    _ => {
                        rep.push(
                            "M2.i",
                            vec![gname(t, x), img.to_string()],
                            "speciation image must be an inner vertex of the MUL-tree",
                        );
                        continue;
                    }
                };
                // In a tree the directed path to each child image is
                // unique; its first arc is the arc into the unique
                // child of w lying weakly above the target.
                let kids = g.children(x);
                let firsts: Vec<Option<ArcId>> = kids
                    .iter()
                    .map(|&c| first_arc_towards(m, w, kappa.get(c).unwrap()))
                    .collect();
                let mut found = false;
                'outer: for i in 0..firsts.len() {
                    for j in i + 1..firsts.len() {
                        if let (Some(a), Some(b)) = (firsts[i], firsts[j]) {
                            if !mg.comparable(a.into(), b.into())? {
                                found = true;
                                break 'outer;
                            }
                        }
                    }
                }
                if !found {
                    rep.push(
                        "M2.i",
                        vec![gname(t, x), img.to_string()],
                        "no two children are reached along incomparable first arcs",
                    );
                }
            }
            Event::Duplication => {
                if img.as_arc().is_none() {
                    rep.push(
                        "M2.ii",
                        vec![gname(t, x), img.to_string()],
                        "duplication image must be an arc",
                    );
                }
            }
        }
    }

    // (M3)
    for (x, y) in comparable_pairs(t) {
        let (ix, iy) = (kappa.get(x).unwrap(), kappa.get(y).unwrap());
        if both_duplications(t, x, y) {
            if !mg.le(ix, iy)? {
                rep.push(
                    "M3.i",
                    vec![gname(t, x), gname(t, y)],
                    format!("{ix} must lie weakly below {iy}"),
                );
            }
        } else if !mg.lt(ix, iy)? {
            rep.push(
                "M3.ii",
                vec![gname(t, x), gname(t, y)],
                format!("{ix} must lie strictly below {iy}"),
            );
        }
    }
    Ok(rep)
}

/// First arc on the unique directed path in the MUL-tree from vertex
/// `from` towards the item `target`; `None` when no such path exists.
fn first_arc_towards(m: &MULTree, from: VertexId, target: Item) -> Option<ArcId> {
    let goal = target.head_vertex();
    if goal == from {
        return None;
    }
    m.graph()
        .out(from)
        .iter()
        .find(|a| m.graph().le_unchecked(goal.into(), a.head.into()))
        .copied()
}

/// Verify a folding map: surjectivity of both components plus the
/// incidence (F1), leaf (F2) and unique-lifting (F3) properties.
pub fn check_folding(m: &MULTree, n: &Network, f: &FoldingMap) -> Result<AxiomReport> {
    let mg = m.graph();
    let ng = n.graph();
    for v in mg.vertices() {
        if !f.f_v.contains_key(&v) {
            return Err(Error::argument(format!("f_V is not total: missing {v}")));
        }
    }
    for a in mg.arcs() {
        if !f.f_e.contains_key(&a) {
            return Err(Error::argument(format!("f_E is not total: missing {a}")));
        }
    }
    for (&v, &w) in &f.f_v {
        if !mg.contains_vertex(v) || !ng.contains_vertex(w) {
            return Err(Error::argument(format!("f_V entry {v} -> {w} out of range")));
        }
    }
    for (&a, &b) in &f.f_e {
        if !mg.contains_arc(a) || !ng.contains_arc(b) {
            return Err(Error::argument(format!("f_E entry {a} -> {b} out of range")));
        }
    }
    let mut rep = AxiomReport::default();

    for w in ng.vertices() {
        if !f.f_v.values().any(|&x| x == w) {
            rep.push("surjective-V", vec![w.to_string()], "network vertex has no preimage");
        }
    }
    for b in ng.arcs() {
        if !f.f_e.values().any(|&x| x == b) {
            rep.push("surjective-E", vec![b.to_string()], "network arc has no preimage");
        }
    }

    for a in mg.arcs() {
        let img = f.f_e[&a];
        if img.tail != f.f_v[&a.tail] || img.head != f.f_v[&a.head] {
            rep.push(
                "F1",
                vec![a.to_string(), img.to_string()],
                "arc image must connect the images of tail and head",
            );
        }
    }

    for (species, class) in m.chi() {
        let want = n.leaf_of(species);
        for &leaf in class {
            if Some(f.f_v[&leaf]) != want {
                rep.push(
                    "F2",
                    vec![leaf.to_string()],
                    format!("leaf labeled {species} must map to that species leaf"),
                );
            }
        }
    }

    for b in ng.arcs() {
        for v in mg.vertices() {
            if f.f_v[&v] != b.tail {
                continue;
            }
            let lifts: Vec<ArcId> = mg
                .out(v)
                .iter()
                .filter(|a| f.f_e[a] == b)
                .copied()
                .collect();
            if lifts.len() != 1 {
                rep.push(
                    "F3",
                    vec![b.to_string(), v.to_string()],
                    format!("expected exactly one lifting, found {}", lifts.len()),
                );
            }
        }
    }
    Ok(rep)
}

/// Verify the (A1)-(A3) axioms of a binary-map pair against the gene
/// tree's own event labeling.
pub fn check_bitreenet(t: &GeneTree, n: &Network, alpha: &BiTreeNetMap) -> Result<AxiomReport> {
    let g = t.graph();
    let ng = n.graph();
    for v in g.vertices() {
        if !alpha.alpha1.contains_key(&v) || !alpha.alpha2.contains_key(&v) {
            return Err(Error::argument(format!("alpha is not total: missing {}", gname(t, v))));
        }
        if !ng.contains_vertex(alpha.alpha1[&v]) {
            return Err(Error::argument(format!("alpha1 image of {} out of range", gname(t, v))));
        }
    }
    let mut rep = AxiomReport::default();

    for v in g.vertices() {
        let a2 = alpha.alpha2[&v];
        let is_leaf = t.is_gene_leaf(v);
        if (a2 == AlphaEvent::Contemporary) != is_leaf {
            rep.push(
                "A1",
                vec![gname(t, v)],
                "alpha2 is the contemporary event exactly on gene leaves",
            );
        }
        if is_leaf {
            let want = t.species_of(v).and_then(|sp| n.leaf_of(sp));
            if Some(alpha.alpha1[&v]) != want {
                rep.push("A1", vec![gname(t, v)], "leaf must map to its species leaf");
            }
        } else {
            let expect = match t.event(v).unwrap() {
                Event::Speciation => AlphaEvent::Speciation,
                Event::Duplication => AlphaEvent::Duplication,
            };
            if a2 != expect {
                rep.push(
                    "A1",
                    vec![gname(t, v)],
                    "alpha2 disagrees with the event labeling",
                );
            }
        }
    }

    for u in t.inner_vertices() {
        if alpha.alpha2[&u] != AlphaEvent::Speciation {
            continue;
        }
        let kids = g.children(u);
        if kids.len() != 2 {
            rep.push("A2", vec![gname(t, u)], "binary gene tree expected");
            continue;
        }
        let (c1, c2) = (alpha.alpha1[&kids[0]], alpha.alpha1[&kids[1]]);
        if !ng.separates(alpha.alpha1[&u], c1, c2) {
            rep.push(
                "A2",
                vec![gname(t, u)],
                "speciation image must separate the child images",
            );
        }
    }

    for (v, u) in comparable_pairs(t) {
        let (av, au) = (alpha.alpha1[&v], alpha.alpha1[&u]);
        if alpha.alpha2[&u] == AlphaEvent::Duplication {
            if !ng.le(av.into(), au.into())? {
                rep.push("A3", vec![gname(t, v), gname(t, u)], "weak ancestor violation");
            }
        } else if !ng.lt(av.into(), au.into())? {
            rep.push("A3", vec![gname(t, v), gname(t, u)], "strict ancestor violation");
        }
    }
    Ok(rep)
}

/// Convert a valid biTreeNet map on binary inputs into a TreeNet
/// reconciliation map: speciations and leaves keep their vertex image,
/// duplications move onto the incoming arc of their image (or the
/// unique outgoing arc when the image is a hybrid vertex, or the root
/// arc when the image is the network root, which has no incoming arc).
pub fn alpha_to_mu(t: &GeneTree, n: &Network, alpha: &BiTreeNetMap) -> Result<ReconMap> {
    if !t.is_binary() {
        return Err(Error::argument("alpha_to_mu expects a binary gene tree"));
    }
    let binary_network = n.graph().vertices().all(|v| {
        let (ind, outd) = (n.graph().indeg(v), n.graph().outdeg(v));
        outd == 0 || v == n.root() || (ind == 1 && outd == 2) || (ind == 2 && outd == 1)
    });
    if !binary_network {
        return Err(Error::argument("alpha_to_mu expects a binary network"));
    }
    let rep = check_bitreenet(t, n, alpha)?;
    if !rep.ok() {
        return Err(Error::Validation(rep.to_string()));
    }
    let mut mu = ReconMap::new(TargetKind::Network);
    for v in t.graph().vertices() {
        let a1 = alpha.alpha1[&v];
        let image: Item = match alpha.alpha2[&v] {
            AlphaEvent::Speciation | AlphaEvent::Contemporary => a1.into(),
            AlphaEvent::Duplication => {
                if n.is_hybrid(a1) {
                    n.graph()
                        .unique_out_arc(a1)
                        .expect("hybrid vertices have outdegree one")
                        .into()
                } else if let Some(e) = n.graph().unique_in_arc(a1) {
                    e.into()
                } else if a1 == n.root() {
                    n.graph().out(a1)[0].into()
                } else {
                    return Err(Error::structure(format!(
                        "duplication image {a1} has no usable arc"
                    )));
                }
            }
        };
        mu.insert(v, image);
    }
    Ok(mu)
}

/// Size limits for the brute-force searches.
#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    /// Maximum number of internal gene-tree vertices.
    pub max_internal: usize,
    /// Maximum `|W| + |F|` of the target network.
    pub max_target: usize,
    /// Maximum vertex+arc count of a MUL-tree target.
    pub max_mul_elements: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_internal: 8,
            max_target: 40,
            max_mul_elements: 4000,
        }
    }
}

struct Search<'a> {
    t: &'a GeneTree,
    /// Internal vertices in assignment order: duplications first, then
    /// speciations, each group in preorder.
    order: Vec<VertexId>,
    /// Candidate images per ordered vertex, height-descending.
    candidates: Vec<Vec<Item>>,
    /// Comparable pairs among (leaf ∪ internal), with strictness.
    assigned: BTreeMap<VertexId, Item>,
}

fn preorder(t: &GeneTree) -> Vec<VertexId> {
    let mut out = Vec::new();
    let mut stack = vec![t.root()];
    while let Some(v) = stack.pop() {
        out.push(v);
        for a in t.graph().out(v).iter().rev() {
            stack.push(a.head);
        }
    }
    out
}

fn assignment_order(t: &GeneTree) -> Vec<VertexId> {
    let pre = preorder(t);
    let dups: Vec<VertexId> = pre
        .iter()
        .copied()
        .filter(|&v| t.event(v) == Some(Event::Duplication))
        .collect();
    let specs: Vec<VertexId> = pre
        .iter()
        .copied()
        .filter(|&v| t.event(v) == Some(Event::Speciation))
        .collect();
    dups.into_iter().chain(specs).collect()
}

impl<'a> Search<'a> {
    /// Checks the ancestor clause of `v` against every already
    /// assigned comparable vertex.
    fn ancestor_ok<F>(&self, v: VertexId, img: Item, le: F) -> bool
    where
        F: Fn(Item, Item) -> bool,
    {
        let g = self.t.graph();
        for (&w, &iw) in &self.assigned {
            if w == v {
                continue;
            }
            if g.le_unchecked(w.into(), v.into()) {
                // w strictly below v
                if both_duplications(self.t, w, v) {
                    if !le(iw, img) {
                        return false;
                    }
                } else if !(le(iw, img) && iw != img) {
                    return false;
                }
            } else if g.le_unchecked(v.into(), w.into()) {
                if both_duplications(self.t, v, w) {
                    if !le(img, iw) {
                        return false;
                    }
                } else if !(le(img, iw) && img != iw) {
                    return false;
                }
            }
        }
        true
    }

    /// Speciation constraint for any vertex whose children are all
    /// assigned (checked for `v` and for its parent after assigning `v`).
    fn separation_ok<S>(&self, x: VertexId, separates: S) -> bool
    where
        S: Fn(VertexId, VertexId, VertexId) -> bool,
    {
        if self.t.event(x) != Some(Event::Speciation) {
            return true;
        }
        let Some(&Item::Vertex(z)) = self.assigned.get(&x) else {
            return true;
        };
        let kids = self.t.graph().children(x);
        let mut targets = Vec::with_capacity(kids.len());
        for c in kids {
            match self.assigned.get(&c) {
                Some(img) => targets.push(img.head_vertex()),
                None => return true, // incomplete; defer
            }
        }
        for i in 0..targets.len() {
            for j in i..targets.len() {
                if separates(z, targets[i], targets[j]) {
                    return true;
                }
            }
        }
        false
    }
}

/// Exhaustive search for a TreeNet reconciliation map from `t` to `n`,
/// or `None` when no map exists. Deterministic: internal vertices are
/// assigned duplications-first in preorder, candidates tried from the
/// highest network element downward.
pub fn exists_treenet_map(
    t: &GeneTree,
    n: &Network,
    limits: &SearchLimits,
) -> Result<Option<ReconMap>> {
    let internal = t.inner_vertices();
    if internal.len() > limits.max_internal {
        return Err(Error::resource(format!(
            "gene tree has {} internal vertices (limit {})",
            internal.len(),
            limits.max_internal
        )));
    }
    if n.num_elements() > limits.max_target {
        return Err(Error::resource(format!(
            "network has {} elements (limit {})",
            n.num_elements(),
            limits.max_target
        )));
    }
    let ng = n.graph();
    // R1 pins every leaf; a missing species means no map at all.
    let mut assigned = BTreeMap::new();
    for (leaf, _) in t.genes() {
        match t.species_of(leaf).and_then(|sp| n.leaf_of(sp)) {
            Some(w) => {
                assigned.insert(leaf, Item::Vertex(w));
            }
            None => return Ok(None),
        }
    }

    let order = assignment_order(t);
    let mut candidates: Vec<Vec<Item>> = Vec::with_capacity(order.len());
    for &x in &order {
        let species = t.species_below(x)?;
        let mut cands: Vec<(u32, Item)> = Vec::new();
        match t.event(x).unwrap() {
            Event::Duplication => {
                for e in ng.arcs() {
                    let ok = species
                        .iter()
                        .all(|sp| ng.le_unchecked(Item::Vertex(n.leaf_of(sp).unwrap()), e.into()));
                    if ok {
                        cands.push((ng.height(e.tail), e.into()));
                    }
                }
            }
            Event::Speciation => {
                for z in ng.vertices() {
                    if ng.outdeg(z) < 2 {
                        continue;
                    }
                    let ok = species.iter().all(|sp| {
                        ng.le_unchecked(Item::Vertex(n.leaf_of(sp).unwrap()), z.into())
                    });
                    if ok {
                        cands.push((ng.height(z), z.into()));
                    }
                }
            }
        }
        cands.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        candidates.push(cands.into_iter().map(|(_, it)| it).collect());
    }

    let mut search = Search {
        t,
        order,
        candidates,
        assigned,
    };
    let le = |a: Item, b: Item| ng.le_unchecked(a, b);
    let sep = |z: VertexId, x: VertexId, y: VertexId| ng.separates(z, x, y);
    if !dfs_assign(&mut search, 0, &le, &sep) {
        return Ok(None);
    }
    let mut mu = ReconMap::new(TargetKind::Network);
    for (&v, &img) in &search.assigned {
        mu.insert(v, img);
    }
    // The incremental constraints are equivalent to the axioms, so the
    // verifier gate can only fail on an implementation bug.
    let rep = check_treenet(t, n, &mu)?;
    if !rep.ok() {
        return Err(Error::structure(format!(
            "internal: the search produced a map the verifier rejects:\n{rep}"
        )));
    }
    Ok(Some(mu))
}

fn dfs_assign<F, S>(search: &mut Search<'_>, depth: usize, le: &F, sep: &S) -> bool
where
    F: Fn(Item, Item) -> bool,
    S: Fn(VertexId, VertexId, VertexId) -> bool,
{
    if depth == search.order.len() {
        // All assigned; every separation constraint was checked when
        // its last participant got its image.
        return true;
    }
    let v = search.order[depth];
    let cands = search.candidates[depth].clone();
    for img in cands {
        if !search.ancestor_ok(v, img, le) {
            continue;
        }
        search.assigned.insert(v, img);
        let parent = search.t.graph().inn(v).first().map(|a| a.tail);
        let sep_ok = search.separation_ok(v, sep)
            && parent.is_none_or(|p| search.separation_ok(p, sep));
        if sep_ok && dfs_assign(search, depth + 1, le, sep) {
            return true;
        }
        search.assigned.remove(&v);
    }
    false
}

/// Exhaustive search for a MUL-reconciliation map from `t` into a
/// (pseudo-)MUL-tree, or `None`. Gene leaves range over their χ-class;
/// the assignment order puts internal vertices first.
pub fn exists_mul_map(
    t: &GeneTree,
    m: &MULTree,
    limits: &SearchLimits,
) -> Result<Option<ReconMap>> {
    let internal = t.inner_vertices();
    if internal.len() > limits.max_internal {
        return Err(Error::resource(format!(
            "gene tree has {} internal vertices (limit {})",
            internal.len(),
            limits.max_internal
        )));
    }
    let elements = m.graph().num_vertices() + m.graph().num_arcs();
    if elements > limits.max_mul_elements {
        return Err(Error::resource(format!(
            "MUL-tree has {elements} elements (limit {})",
            limits.max_mul_elements
        )));
    }
    let mg = m.graph();
    for species in t.species() {
        if m.chi_of(&species).is_none() {
            return Ok(None);
        }
    }

    // Species sets below every MUL vertex, for candidate filtering.
    let mut below: BTreeMap<VertexId, std::collections::BTreeSet<String>> = BTreeMap::new();
    for v in mg.vertices() {
        below.insert(v, m.species_set_below(v)?);
    }

    let mut order = assignment_order(t);
    let leaf_order: Vec<VertexId> = preorder(t)
        .into_iter()
        .filter(|&v| t.is_gene_leaf(v))
        .collect();
    order.extend(leaf_order);

    let mut candidates: Vec<Vec<Item>> = Vec::with_capacity(order.len());
    for &x in &order {
        let mut cands: Vec<(u32, Item)> = Vec::new();
        if t.is_gene_leaf(x) {
            let class = m.chi_of(t.species_of(x).unwrap()).unwrap();
            for &leaf in class {
                cands.push((0, leaf.into()));
            }
        } else {
            let species = t.species_below(x)?;
            match t.event(x).unwrap() {
                Event::Speciation => {
                    for v in mg.vertices() {
                        if mg.is_leaf(v) || m.d1().contains(&v) || v == m.root() {
                            continue;
                        }
                        if species.iter().all(|sp| below[&v].contains(sp)) {
                            cands.push((mg.height(v), v.into()));
                        }
                    }
                    // The MUL root also qualifies structurally when it
                    // is not a leaf; exclude it only because its
                    // outdegree is one, so it can separate nothing.
                }
                Event::Duplication => {
                    for e in mg.arcs() {
                        if species.iter().all(|sp| below[&e.head].contains(sp)) {
                            cands.push((mg.height(e.tail), e.into()));
                        }
                    }
                }
            }
        }
        cands.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        candidates.push(cands.into_iter().map(|(_, it)| it).collect());
    }

    let mut search = Search {
        t,
        order,
        candidates,
        assigned: BTreeMap::new(),
    };
    let le = |a: Item, b: Item| mg.le_unchecked(a, b);
    let sep = |z: VertexId, x: VertexId, y: VertexId| mg.separates(z, x, y);
    if !dfs_assign(&mut search, 0, &le, &sep) {
        return Ok(None);
    }
    let mut kappa = ReconMap::new(TargetKind::MulTree);
    for (&v, &img) in &search.assigned {
        kappa.insert(v, img);
    }
    // On tree targets the first arc towards each image is unique, so
    // the distinct-arc separation used while searching is exactly
    // (M2.i); the gate can only fail on an implementation bug.
    let rep = check_mul(t, m, &kappa)?;
    if !rep.ok() {
        return Err(Error::structure(format!(
            "internal: the search produced a map the verifier rejects:\n{rep}"
        )));
    }
    Ok(Some(kappa))
}
