//! Rooted-triple machinery: triple extraction from trees, informative
//! species triples of event-labeled gene trees, BUILD compatibility,
//! species-tree reconciliation, and triple display in networks.

use std::collections::{BTreeMap, BTreeSet};

use crate::axioms::{check_relaxed_tree, ReconMap, TargetKind};
use crate::digraph::{Digraph, DigraphBuilder, VertexId};
use crate::error::{Error, Result};
use crate::phylo::{validate_network, Event, GeneTree, Network, Triple};

/// A set of triples over a label universe.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TripleSet {
    pub triples: BTreeSet<Triple>,
    pub universe: BTreeSet<String>,
}

impl TripleSet {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let universe = triples
            .iter()
            .flat_map(|t| t.labels().map(str::to_string))
            .collect();
        TripleSet { triples, universe }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.triples.contains(t)
    }
}

/// `R(T)` of a tree-shaped network: all triples `ab|c` over leaf
/// labels with `lca(a,b) ≺ lca(a,b,c)`.
pub fn displayed_triples(n: &Network) -> Result<TripleSet> {
    if !n.is_phylogenetic_tree() {
        return Err(Error::structure(
            "displayed_triples expects a tree; use displays() for networks",
        ));
    }
    let g = n.graph();
    let leaves: Vec<VertexId> = g.leaves();
    let mut triples = BTreeSet::new();
    for (i, &a) in leaves.iter().enumerate() {
        for &b in leaves.iter().skip(i + 1) {
            for &c in &leaves {
                if c == a || c == b {
                    continue;
                }
                let lab = g.lca(&[a, b])?;
                let labc = g.lca(&[a, b, c])?;
                if lab != labc {
                    triples.insert(Triple::new(
                        n.species_of(a).unwrap(),
                        n.species_of(b).unwrap(),
                        n.species_of(c).unwrap(),
                    )?);
                }
            }
        }
    }
    let universe = n.species().map(str::to_string).collect();
    Ok(TripleSet { triples, universe })
}

/// The informative species triples `S(T;t,σ)`: σ-images of gene
/// triples whose joint lca is a speciation and whose species are
/// pairwise distinct.
pub fn informative_triples(t: &GeneTree) -> Result<TripleSet> {
    let g = t.graph();
    let leaves: Vec<VertexId> = g.leaves();
    let mut triples = BTreeSet::new();
    for (i, &a) in leaves.iter().enumerate() {
        for &b in leaves.iter().skip(i + 1) {
            for &c in &leaves {
                if c == a || c == b {
                    continue;
                }
                let (sa, sb, sc) = (
                    t.species_of(a).unwrap(),
                    t.species_of(b).unwrap(),
                    t.species_of(c).unwrap(),
                );
                if sa == sb || sa == sc || sb == sc {
                    continue;
                }
                let lab = g.lca(&[a, b])?;
                let labc = g.lca(&[a, b, c])?;
                if lab != labc && t.event(labc) == Some(Event::Speciation) {
                    triples.insert(Triple::new(sa, sb, sc)?);
                }
            }
        }
    }
    Ok(TripleSet {
        triples,
        universe: t.species(),
    })
}

/// BUILD (the Aho et al. recursion): returns a species tree displaying
/// every triple of `r`, or `None` when `r` is incompatible.
pub fn is_compatible(r: &TripleSet) -> Result<Option<Network>> {
    if r.universe.len() < 2 {
        return Err(Error::argument("triple compatibility needs at least two labels"));
    }
    let labels: Vec<String> = r.universe.iter().cloned().collect();
    let mut b = DigraphBuilder::new();
    let rho = b.add_vertex();
    let mut leaf_labels = BTreeMap::new();
    let Some(top) = build_rec(&labels, &r.triples, &mut b, &mut leaf_labels)? else {
        return Ok(None);
    };
    b.add_arc(rho, top)?;
    b.set_root(rho);
    let g = b.build()?;
    Ok(Some(validate_network(g, leaf_labels)?))
}

fn build_rec(
    labels: &[String],
    triples: &BTreeSet<Triple>,
    b: &mut DigraphBuilder,
    leaf_labels: &mut BTreeMap<VertexId, String>,
) -> Result<Option<VertexId>> {
    if labels.len() == 1 {
        let v = b.add_vertex();
        leaf_labels.insert(v, labels[0].clone());
        return Ok(Some(v));
    }
    // Aho graph: connect a and b for every ab|c fully inside `labels`.
    let index: BTreeMap<&str, usize> = labels.iter().map(|s| s.as_str()).zip(0..).collect();
    let mut dsu: Vec<usize> = (0..labels.len()).collect();
    fn find(dsu: &mut Vec<usize>, x: usize) -> usize {
        if dsu[x] != x {
            let r = find(dsu, dsu[x]);
            dsu[x] = r;
        }
        dsu[x]
    }
    for t in triples {
        if let (Some(&a), Some(&b2), Some(_)) = (
            index.get(t.a()),
            index.get(t.b()),
            index.get(t.c()),
        ) {
            let (ra, rb) = (find(&mut dsu, a), find(&mut dsu, b2));
            if ra != rb {
                dsu[ra] = rb;
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        components
            .entry(find(&mut dsu, i))
            .or_default()
            .push(label.clone());
    }
    if components.len() < 2 {
        return Ok(None);
    }
    let v = b.add_vertex();
    // Components in sorted order of their smallest label for determinism.
    let mut comps: Vec<Vec<String>> = components.into_values().collect();
    comps.sort_by(|a, b| a[0].cmp(&b[0]));
    for comp in comps {
        let sub: BTreeSet<Triple> = triples
            .iter()
            .filter(|t| t.labels().iter().all(|l| comp.contains(&l.to_string())))
            .cloned()
            .collect();
        match build_rec(&comp, &sub, b, leaf_labels)? {
            Some(child) => {
                b.add_arc(v, child)?;
            }
            None => return Ok(None),
        }
    }
    Ok(Some(v))
}

/// Construct a species tree and the canonical lca-based reconciliation
/// map for a gene tree, when its informative triples are compatible.
/// The candidate map is verified before it is returned; verification
/// failure yields a sound `None`.
pub fn reconcile_to_tree(t: &GeneTree) -> Result<Option<(Network, ReconMap)>> {
    let s_t = informative_triples(t)?;
    let mut universe = s_t.universe.clone();
    universe.extend(t.species());
    let full = TripleSet {
        triples: s_t.triples.clone(),
        universe,
    };
    let Some(species_tree) = is_compatible(&full)? else {
        return Ok(None);
    };
    let sg = species_tree.graph();
    let mut mu = ReconMap::new(TargetKind::Network);
    for v in t.graph().vertices() {
        if let Some(sp) = t.species_of(v) {
            mu.insert(v, species_tree.leaf_of(sp).expect("σ species present"));
            continue;
        }
        let below: Vec<VertexId> = t
            .species_below(v)?
            .iter()
            .map(|sp| species_tree.leaf_of(sp).expect("σ species present"))
            .collect();
        let lca = sg.lca(&below)?;
        match t.event(v).unwrap() {
            Event::Speciation => mu.insert(v, lca),
            Event::Duplication => match sg.unique_in_arc(lca) {
                Some(e) => mu.insert(v, e),
                None => return Ok(None), // duplication above the root arc: no placement
            },
        }
    }
    // When every speciation has pairwise σ-disjoint children the
    // construction promises a full tree reconciliation map, otherwise
    // only a relaxed one.
    let strict = speciation_children_disjoint(t)?;
    let rep = check_relaxed_tree(t, &species_tree, &mu, strict)?;
    if !rep.ok() {
        return Ok(None);
    }
    Ok(Some((species_tree, mu)))
}

/// Do all speciation vertices have pairwise σ-disjoint child leaf sets?
pub fn speciation_children_disjoint(t: &GeneTree) -> Result<bool> {
    for v in t.inner_vertices() {
        if t.event(v) != Some(Event::Speciation) {
            continue;
        }
        let kids = t.graph().children(v);
        let sets: Vec<BTreeSet<String>> = kids
            .iter()
            .map(|&c| t.species_below(c))
            .collect::<Result<_>>()?;
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if sets[i].intersection(&sets[j]).next().is_some() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Limits for the display search.
#[derive(Clone, Copy, Debug)]
pub struct DisplayLimits {
    pub max_vertices: usize,
}

impl Default for DisplayLimits {
    fn default() -> Self {
        DisplayLimits { max_vertices: 200 }
    }
}

/// Does the network display the triple `ab|c`? Searches for vertices
/// `u ≻ v` and four pairwise internally-vertex-disjoint directed paths
/// `u⇝v`, `v⇝a`, `v⇝b`, `u⇝c`.
pub fn displays(n: &Network, triple: &Triple, limits: &DisplayLimits) -> Result<bool> {
    let g = n.graph();
    if g.num_vertices() > limits.max_vertices {
        return Err(Error::resource(format!(
            "network has {} vertices (limit {})",
            g.num_vertices(),
            limits.max_vertices
        )));
    }
    let la = n
        .leaf_of(triple.a())
        .ok_or_else(|| Error::argument(format!("species {} not in network", triple.a())))?;
    let lb = n
        .leaf_of(triple.b())
        .ok_or_else(|| Error::argument(format!("species {} not in network", triple.b())))?;
    let lc = n
        .leaf_of(triple.c())
        .ok_or_else(|| Error::argument(format!("species {} not in network", triple.c())))?;

    for v in g.vertices() {
        if !g.separates(v, la, lb) {
            continue;
        }
        for u in g.vertices() {
            if u == v
                || !g.le_unchecked(v.into(), u.into())
                || !g.le_unchecked(Item::from(lc), u.into())
            {
                continue;
            }
            if embed(g, u, v, la, lb, lc) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

use crate::digraph::Item;

/// Backtracking embedding: P2 = v⇝a, P3 = v⇝b, P1 = u⇝v, P4 = u⇝c with
/// the required vertex-disjointness.
fn embed(g: &Digraph, u: VertexId, v: VertexId, a: VertexId, b: VertexId, c: VertexId) -> bool {
    let paths_va = g.all_paths(v, a);
    for p2 in &paths_va {
        let mut used2: BTreeSet<VertexId> = p2.vertices.iter().copied().collect();
        used2.remove(&v);
        // P3 shares only v with P2.
        let p3s = disjoint_paths(g, v, b, &used2);
        for p3 in &p3s {
            let mut used23 = used2.clone();
            used23.extend(p3.iter().copied().filter(|&x| x != v));
            // P1 from u to v avoiding everything on P2/P3 except v itself.
            let mut block1 = used23.clone();
            block1.insert(v); // endpoint allowed; handled by target
            block1.remove(&v);
            let p1s = disjoint_paths(g, u, v, &block1);
            for p1 in &p1s {
                let mut all: BTreeSet<VertexId> = used23.clone();
                all.insert(v);
                all.extend(p1.iter().copied());
                all.remove(&u);
                // P4 from u to c sharing only u with the rest.
                if !disjoint_paths(g, u, c, &all).is_empty() {
                    return true;
                }
            }
        }
    }
    false
}

/// All paths `from ⇝ to` avoiding `blocked` (endpoints not blocked).
fn disjoint_paths(
    g: &Digraph,
    from: VertexId,
    to: VertexId,
    blocked: &BTreeSet<VertexId>,
) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut cur = vec![from];
    fn rec(
        g: &Digraph,
        cur: &mut Vec<VertexId>,
        to: VertexId,
        blocked: &BTreeSet<VertexId>,
        out: &mut Vec<Vec<VertexId>>,
    ) {
        let last = *cur.last().unwrap();
        if last == to {
            out.push(cur.clone());
            return;
        }
        for child in g.children(last) {
            if blocked.contains(&child) || cur.contains(&child) {
                continue;
            }
            if !g.le_unchecked(to.into(), child.into()) {
                continue;
            }
            cur.push(child);
            rec(g, cur, to, blocked, out);
            cur.pop();
        }
    }
    if !blocked.contains(&from) && !blocked.contains(&to) {
        rec(g, &mut cur, to, blocked, &mut out);
    }
    out
}

/// Star-of-triples gene tree used to realize an arbitrary triple set
/// as a network: a duplication root whose children are the given
/// triples with fresh, pairwise disjoint leaf copies mapped back to
/// the original labels.
pub fn star_of_triples(r: &TripleSet) -> Result<GeneTree> {
    use crate::phylo::build::{gene_tree, inner, leaf};
    if r.is_empty() {
        return Err(Error::argument("star_of_triples needs a non-empty set"));
    }
    let mut children = Vec::new();
    for (i, t) in r.triples.iter().enumerate() {
        let cherry = inner(
            Event::Speciation,
            vec![
                leaf(&format!("g{i}_1"), t.a()),
                leaf(&format!("g{i}_2"), t.b()),
            ],
        );
        children.push(inner(
            Event::Speciation,
            vec![cherry, leaf(&format!("g{i}_3"), t.c())],
        ));
    }
    if children.len() == 1 {
        // A root needs outdegree >= 2; the single triple already is a
        // valid reduced tree with a speciation root.
        let only = children.pop().unwrap();
        return gene_tree(only);
    }
    gene_tree(inner(Event::Duplication, children))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylo::build::{gene_tree, inner, leaf, network_from_adjacency};

    fn caterpillar_all_spec() -> GeneTree {
        // (((a,b)z, c)y, d)x with all events speciation
        gene_tree(inner(
            Event::Speciation,
            vec![
                inner(
                    Event::Speciation,
                    vec![
                        inner(Event::Speciation, vec![leaf("a", "A"), leaf("b", "B")]),
                        leaf("c", "C"),
                    ],
                ),
                leaf("d", "D"),
            ],
        ))
        .unwrap()
    }

    #[test]
    fn cherry_has_no_triples() {
        let n = network_from_adjacency("r", &[("r", &["p"]), ("p", &["A", "B"])]).unwrap();
        assert!(displayed_triples(&n).unwrap().is_empty());
    }

    #[test]
    fn caterpillar_triples() {
        let s = network_from_adjacency(
            "r",
            &[
                ("r", &["x"]),
                ("x", &["y", "D"]),
                ("y", &["z", "C"]),
                ("z", &["A", "B"]),
            ],
        )
        .unwrap();
        let got = displayed_triples(&s).unwrap();
        let want: BTreeSet<Triple> = [
            Triple::new("A", "B", "C").unwrap(),
            Triple::new("A", "B", "D").unwrap(),
            Triple::new("A", "C", "D").unwrap(),
            Triple::new("B", "C", "D").unwrap(),
        ]
        .into_iter()
        .collect();
        assert_eq!(got.triples, want);
    }

    #[test]
    fn informative_triples_of_caterpillar() {
        let t = caterpillar_all_spec();
        let got = informative_triples(&t).unwrap();
        assert_eq!(got.len(), 4);
        assert!(got.contains(&Triple::new("A", "B", "C").unwrap()));
        assert!(got.contains(&Triple::new("B", "C", "D").unwrap()));
    }

    #[test]
    fn duplication_root_filters_triples() {
        // Same caterpillar with the root relabeled as a duplication:
        // triples through the root lose informativeness.
        let t = gene_tree(inner(
            Event::Duplication,
            vec![
                inner(
                    Event::Speciation,
                    vec![
                        inner(Event::Speciation, vec![leaf("a", "A"), leaf("b", "B")]),
                        leaf("c", "C"),
                    ],
                ),
                leaf("d", "D"),
            ],
        ))
        .unwrap();
        let got = informative_triples(&t).unwrap();
        let want: BTreeSet<Triple> = [Triple::new("A", "B", "C").unwrap()].into_iter().collect();
        assert_eq!(got.triples, want);
    }

    #[test]
    fn incompatible_pairs_are_rejected() {
        for (x, y) in [(("A", "B", "C"), ("B", "C", "A")), (("A", "B", "D"), ("B", "D", "A"))] {
            let r = TripleSet::from_triples([
                Triple::new(x.0, x.1, x.2).unwrap(),
                Triple::new(y.0, y.1, y.2).unwrap(),
            ]);
            assert!(is_compatible(&r).unwrap().is_none(), "{r:?}");
        }
    }

    #[test]
    fn compatible_set_yields_a_displaying_tree() {
        let r = TripleSet::from_triples([
            Triple::new("A", "B", "C").unwrap(),
            Triple::new("A", "B", "D").unwrap(),
            Triple::new("A", "C", "D").unwrap(),
            Triple::new("B", "C", "D").unwrap(),
        ]);
        let tree = is_compatible(&r).unwrap().expect("compatible");
        let shown = displayed_triples(&tree).unwrap();
        for t in &r.triples {
            assert!(shown.contains(t), "missing {t}");
        }
    }

    #[test]
    fn cherry_reconciles() {
        let t = gene_tree(inner(
            Event::Speciation,
            vec![leaf("a", "A"), leaf("b", "B")],
        ))
        .unwrap();
        let (s, mu) = reconcile_to_tree(&t).unwrap().expect("reconcilable");
        assert_eq!(s.num_species(), 2);
        assert_eq!(mu.get(t.root()), Some(Item::Vertex(s.root_child())));
    }

    #[test]
    fn tree_displays_equals_membership() {
        let s = network_from_adjacency(
            "r",
            &[
                ("r", &["x"]),
                ("x", &["y", "D"]),
                ("y", &["z", "C"]),
                ("z", &["A", "B"]),
            ],
        )
        .unwrap();
        let shown = displayed_triples(&s).unwrap();
        let lim = DisplayLimits::default();
        assert!(displays(&s, &Triple::new("A", "B", "C").unwrap(), &lim).unwrap());
        assert!(!displays(&s, &Triple::new("A", "C", "B").unwrap(), &lim).unwrap());
        for t in &shown.triples {
            assert!(displays(&s, t, &lim).unwrap());
        }
    }
}
