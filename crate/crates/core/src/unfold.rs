//! Network unfolding `U*(N)` / `U(N)`, the universal folding, and the
//! lifting of a TreeNet reconciliation onto the unfolding.

use std::collections::BTreeMap;

use crate::axioms::{
    check_treenet, exists_mul_map, exists_treenet_map, FoldingMap, ReconMap, SearchLimits,
    TargetKind,
};
use crate::digraph::{ArcId, DigraphBuilder, Item, Path, VertexId};
use crate::error::{Error, Result};
use crate::phylo::{validate_mul_tree, Event, GeneTree, MULTree, Network};

/// The unfolding of a network: a pseudo MUL-tree whose vertices are
/// the directed root paths of the network, identified by their arc
/// sequences.
#[derive(Clone, Debug)]
pub struct Unfolding {
    pub mul: MULTree,
    /// Arc sequence (in the network) of every unfolding vertex.
    paths: Vec<Vec<ArcId>>,
    index: BTreeMap<Vec<ArcId>, VertexId>,
    network_root: VertexId,
}

impl Unfolding {
    /// The unfolding vertex for a network root path, if enumerated.
    pub fn vertex_of(&self, arcs: &[ArcId]) -> Option<VertexId> {
        self.index.get(arcs).copied()
    }

    pub fn arcs_of(&self, v: VertexId) -> &[ArcId] {
        &self.paths[v.idx()]
    }

    /// The last network vertex of the path behind an unfolding vertex.
    pub fn network_end(&self, v: VertexId) -> VertexId {
        self.paths[v.idx()]
            .last()
            .map(|a| a.head)
            .unwrap_or(self.network_root)
    }

    /// The unfolding arc from a path to its one-arc extension.
    fn extension_arc(&self, v: VertexId, by: ArcId) -> Result<(ArcId, VertexId)> {
        let mut key = self.paths[v.idx()].clone();
        key.push(by);
        let head = self
            .vertex_of(&key)
            .ok_or_else(|| Error::structure(format!("missing unfolding vertex for {by}")))?;
        let arc = self
            .mul
            .graph()
            .unique_in_arc(head)
            .expect("non-root unfolding vertices have one parent");
        Ok((arc, head))
    }
}

/// Construct `(U*(N), χ*)`: vertices are directed paths starting at
/// the root (identity: the arc sequence), arcs extend a path by one
/// network arc, and `χ*(x)` collects the paths ending in the leaf `x`.
/// Fails with a resource error when more than `limit` paths appear.
pub fn unfold_star(n: &Network, limit: usize) -> Result<Unfolding> {
    let g = n.graph();
    let mut b = DigraphBuilder::new();
    let root = b.add_vertex();
    let mut paths: Vec<Vec<ArcId>> = vec![vec![]];
    let mut index: BTreeMap<Vec<ArcId>, VertexId> = BTreeMap::new();
    index.insert(vec![], root);
    let mut labels: BTreeMap<VertexId, String> = BTreeMap::new();
    let mut queue = vec![root];
    let mut qi = 0;
    while qi < queue.len() {
        let v = queue[qi];
        qi += 1;
        let end = paths[v.idx()].last().map(|a| a.head).unwrap_or(n.root());
        if let Some(species) = n.species_of(end) {
            labels.insert(v, species.to_string());
        }
        for &a in g.out(end) {
            let mut key = paths[v.idx()].clone();
            key.push(a);
            if paths.len() >= limit {
                return Err(Error::resource(format!(
                    "unfolding exceeds {limit} path vertices"
                )));
            }
            let w = b.add_vertex();
            paths.push(key.clone());
            index.insert(key, w);
            b.add_arc(v, w)?;
            queue.push(w);
        }
    }
    b.set_root(root);
    let graph = b.build()?;
    let mul = validate_mul_tree(graph, labels, true)?;
    Ok(Unfolding {
        mul,
        paths,
        index,
        network_root: n.root(),
    })
}

/// `U(N)`: suppress every degree-(1,1) vertex of `U*(N)`.
pub fn unfold(n: &Network, limit: usize) -> Result<MULTree> {
    let star = unfold_star(n, limit)?;
    suppress_d1(&star.mul)
}

/// Suppress all degree-(1,1) vertices of a pseudo MUL-tree.
pub fn suppress_d1(m: &MULTree) -> Result<MULTree> {
    let g = m.graph();
    let keep: Vec<VertexId> = g.vertices().filter(|v| !m.d1().contains(v)).collect();
    let mut b = DigraphBuilder::new();
    let mut map: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for &v in &keep {
        map.insert(v, b.add_vertex());
    }
    for &v in &keep {
        for a in g.out(v) {
            let mut end = a.head;
            while m.d1().contains(&end) {
                end = g.out(end)[0].head;
            }
            b.add_arc(map[&v], map[&end])?;
        }
    }
    b.set_root(map[&m.root()]);
    let graph = b.build()?;
    let labels: BTreeMap<VertexId, String> = keep
        .iter()
        .filter_map(|&v| m.species_of(v).map(|s| (map[&v], s.to_string())))
        .collect();
    validate_mul_tree(graph, labels, false)
}

/// The universal folding `f*` of a multi-arc free network: every
/// unfolding vertex maps to its last network vertex, every unfolding
/// arc to its corresponding network arc.
pub fn universal_folding(n: &Network, limit: usize) -> Result<(Unfolding, FoldingMap)> {
    if !n.is_multi_arc_free() {
        return Err(Error::argument(
            "the universal folding is defined for multi-arc free networks",
        ));
    }
    let star = unfold_star(n, limit)?;
    let mut f = FoldingMap::default();
    for v in star.mul.graph().vertices() {
        f.f_v.insert(v, star.network_end(v));
    }
    for a in star.mul.graph().arcs() {
        let net_arc = *star.paths[a.head.idx()]
            .last()
            .expect("non-root unfolding vertices have non-empty paths");
        f.f_e.insert(a, net_arc);
    }
    Ok((star, f))
}

/// Lift a TreeNet reconciliation `μ: T -> N` to a MUL-reconciliation
/// `κ: T -> U*(N)` along the universal folding, choosing, per vertex,
/// the lexicographically smallest qualifying network path. Duplication
/// images are lifted so that their path ends with the arc `μ(v)`
/// itself whenever a qualifying choice exists, which makes the
/// composition with the universal folding reproduce `μ` pointwise.
pub fn lift_mu(
    t: &GeneTree,
    n: &Network,
    mu: &ReconMap,
    limit: usize,
) -> Result<(Unfolding, ReconMap)> {
    if !n.is_multi_arc_free() {
        return Err(Error::argument("lift_mu requires a multi-arc free network"));
    }
    let pre = check_treenet(t, n, mu)?;
    if !pre.ok() {
        return Err(Error::Validation(format!(
            "lift_mu requires a valid TreeNet reconciliation:\n{pre}"
        )));
    }
    let star = unfold_star(n, limit)?;
    let g = t.graph();
    let ng = n.graph();

    // Forced first network arcs, planned once per speciation parent so
    // that some pair of children leaves along distinct arcs.
    let mut forced: BTreeMap<VertexId, Option<ArcId>> = BTreeMap::new();
    let mut loose: BTreeMap<VertexId, bool> = BTreeMap::new();
    for w in t.inner_vertices() {
        if t.event(w) != Some(Event::Speciation) {
            continue;
        }
        let zw = mu
            .get(w)
            .and_then(Item::as_vertex)
            .expect("speciation images are vertices in a valid map");
        let kids = g.children(w);
        // Feasible first arcs per child under the faithful constraint.
        let feasible: Vec<Vec<ArcId>> = kids
            .iter()
            .map(|&c| faithful_first_arcs(ng, zw, mu.get(c).unwrap()))
            .collect();
        let mut plan: Option<(usize, usize, ArcId, ArcId)> = None;
        'pairs: for i in 0..kids.len() {
            for j in i + 1..kids.len() {
                for &a in &feasible[i] {
                    for &b in &feasible[j] {
                        if a != b {
                            plan = Some((i, j, a, b));
                            break 'pairs;
                        }
                    }
                }
            }
        }
        match plan {
            Some((i, j, a, barc)) => {
                forced.insert(kids[i], Some(a));
                forced.insert(kids[j], Some(barc));
            }
            None => {
                // Pathological case: no faithful pair exists. Fall back
                // to head-reaching paths for one pair, which always
                // admit distinct first arcs by (R2.i).
                let heads: Vec<VertexId> = kids
                    .iter()
                    .map(|&c| mu.get(c).unwrap().head_vertex())
                    .collect();
                'loose: for i in 0..kids.len() {
                    for j in i + 1..kids.len() {
                        let fi = loose_first_arcs(ng, zw, heads[i]);
                        let fj = loose_first_arcs(ng, zw, heads[j]);
                        for &a in &fi {
                            for &bb in &fj {
                                if a != bb {
                                    forced.insert(kids[i], Some(a));
                                    forced.insert(kids[j], Some(bb));
                                    loose.insert(kids[i], true);
                                    loose.insert(kids[j], true);
                                    break 'loose;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let mut kappa = ReconMap::new(TargetKind::MulTree);
    let order = preorder(t);
    for v in order {
        let img = mu.get(v).unwrap();
        let parent = g.inn(v).first().map(|a| a.tail);
        let image: Item = match parent {
            None => match img {
                // Root of T.
                Item::Vertex(target) => {
                    let p = ng
                        .lex_min_path(n.root(), target, None)
                        .ok_or_else(|| Error::structure("root image unreachable"))?;
                    path_vertex(&star, &p.arcs)?.into()
                }
                Item::Arc(e) => {
                    let p = ng
                        .lex_min_path(n.root(), e.tail, None)
                        .ok_or_else(|| Error::structure("root image unreachable"))?;
                    let base = path_vertex(&star, &p.arcs)?;
                    star.extension_arc(base, e)?.0.into()
                }
            },
            Some(w) => {
                if mu.get(w) == Some(img) {
                    // Equal images propagate (both duplications).
                    kappa.get(w).expect("parent handled first")
                } else {
                    let base = base_vertex(&star, kappa.get(w).expect("parent handled first"));
                    let start = star.network_end(base);
                    let first = forced.get(&v).copied().flatten();
                    if loose.get(&v).copied().unwrap_or(false) {
                        // Loose lift: walk to the image head and lift
                        // whatever last arc the path uses.
                        let target = img.head_vertex();
                        let p = ng.lex_min_path(start, target, first).ok_or_else(|| {
                            Error::structure("no qualifying loose path")
                        })?;
                        extend_loose(&star, base, &p, img)?
                    } else {
                        match img {
                            Item::Vertex(target) => {
                                let p = ng.lex_min_path(start, target, first).ok_or_else(|| {
                                    Error::structure("child image unreachable from parent image")
                                })?;
                                extend_by(&star, base, &p.arcs)?.into()
                            }
                            Item::Arc(e) => {
                                // When the image arc leaves the parent
                                // image directly there is no stem walk;
                                // a forced first arc can only be `e`.
                                let stem = if e.tail == start {
                                    base
                                } else {
                                    let p = ng.lex_min_path(start, e.tail, first).ok_or_else(
                                        || {
                                            Error::structure(
                                                "duplication tail unreachable from parent image",
                                            )
                                        },
                                    )?;
                                    extend_by(&star, base, &p.arcs)?
                                };
                                star.extension_arc(stem, e)?.0.into()
                            }
                        }
                    }
                }
            }
        };
        kappa.insert(v, image);
    }
    Ok((star, kappa))
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

/// First arcs out of `z` that can start a faithful path towards the
/// image: for vertex images any arc whose head reaches the image, for
/// arc images any arc whose head reaches the image's tail (or the
/// image itself when its tail is `z`).
fn faithful_first_arcs(
    ng: &crate::digraph::Digraph,
    z: VertexId,
    img: Item,
) -> Vec<ArcId> {
    match img {
        Item::Vertex(target) => ng
            .out(z)
            .iter()
            .filter(|a| ng.le_unchecked(target.into(), a.head.into()))
            .copied()
            .collect(),
        Item::Arc(e) => {
            if e.tail == z {
                vec![e]
            } else {
                ng.out(z)
                    .iter()
                    .filter(|a| ng.le_unchecked(Item::Vertex(e.tail), a.head.into()))
                    .copied()
                    .collect()
            }
        }
    }
}

fn loose_first_arcs(ng: &crate::digraph::Digraph, z: VertexId, head: VertexId) -> Vec<ArcId> {
    ng.out(z)
        .iter()
        .filter(|a| ng.le_unchecked(head.into(), a.head.into()))
        .copied()
        .collect()
}

/// Unfolding vertex of an explicit root path.
fn path_vertex(star: &Unfolding, arcs: &[ArcId]) -> Result<VertexId> {
    star.vertex_of(arcs)
        .ok_or_else(|| Error::structure("network path missing from the unfolding"))
}

/// The path vertex behind an image: the vertex itself, or the head of
/// an unfolding arc.
fn base_vertex(_star: &Unfolding, img: Item) -> VertexId {
    match img {
        Item::Vertex(v) => v,
        Item::Arc(e) => e.head,
    }
}

/// Extend the path behind `base` by the given network arcs.
fn extend_by(star: &Unfolding, base: VertexId, by: &[ArcId]) -> Result<VertexId> {
    let mut cur = base;
    for &a in by {
        cur = star.extension_arc(cur, a)?.1;
    }
    Ok(cur)
}

/// Loose extension: walk the whole network path; for vertex images
/// return the final path vertex, for arc images the final unfolding arc.
fn extend_loose(star: &Unfolding, base: VertexId, p: &Path, img: Item) -> Result<Item> {
    match img {
        Item::Vertex(_) => Ok(extend_by(star, base, &p.arcs)?.into()),
        Item::Arc(_) => {
            let (stem_arcs, last) = p
                .arcs
                .split_at(p.arcs.len().checked_sub(1).ok_or_else(|| {
                    Error::structure("loose duplication lift needs a non-trivial path")
                })?);
            let stem = extend_by(star, base, stem_arcs)?;
            Ok(star.extension_arc(stem, last[0])?.0.into())
        }
    }
}

/// Outcome of the two-sided existence check behind the equivalence
/// "N is a species network for T iff U*(N) is a pseudo-MUL-tree for T".
#[derive(Clone, Debug)]
pub struct RoundtripOutcome {
    pub treenet: Option<ReconMap>,
    pub mul: Option<ReconMap>,
}

impl RoundtripOutcome {
    /// Both sides agree (both witnesses found, or both absent).
    pub fn agree(&self) -> bool {
        self.treenet.is_some() == self.mul.is_some()
    }
}

/// Run both brute-force searches and report whether the equivalence
/// holds on this instance.
pub fn roundtrip_check(
    t: &GeneTree,
    n: &Network,
    limits: &SearchLimits,
    unfold_limit: usize,
) -> Result<RoundtripOutcome> {
    if !n.is_multi_arc_free() {
        return Err(Error::argument("roundtrip_check requires a multi-arc free network"));
    }
    let treenet = exists_treenet_map(t, n, limits)?;
    let star = unfold_star(n, unfold_limit)?;
    let mul = exists_mul_map(t, &star.mul, limits)?;
    Ok(RoundtripOutcome { treenet, mul })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{check_folding, check_mul};
    use crate::construct::pipeline;
    use crate::phylo::build::{gene_tree, inner, leaf, network_from_adjacency};
    use crate::phylo::mul_isomorphic;

    fn two_leaf_network() -> Network {
        network_from_adjacency("r", &[("r", &["p"]), ("p", &["A", "B"])]).unwrap()
    }

    #[test]
    fn unfolding_a_tree_is_isomorphic_to_it() {
        let n = two_leaf_network();
        let star = unfold_star(&n, 1000).unwrap();
        assert_eq!(star.mul.graph().num_vertices(), 4);
        assert!(!star.mul.is_pseudo());
        let u = unfold(&n, 1000).unwrap();
        assert!(mul_isomorphic(&star.mul, &u));
    }

    #[test]
    fn hybrid_doubles_the_leaf_class() {
        // One hybrid above B: chi*(B) must have two members.
        let n = network_from_adjacency(
            "r",
            &[
                ("r", &["s"]),
                ("s", &["u", "v"]),
                ("u", &["A", "h"]),
                ("v", &["h", "C"]),
                ("h", &["B"]),
            ],
        )
        .unwrap();
        let star = unfold_star(&n, 1000).unwrap();
        assert_eq!(star.mul.chi_of("B").unwrap().len(), 2);
        assert_eq!(star.mul.chi_of("A").unwrap().len(), 1);
        // D1 vertices: the two path copies ending at the hybrid.
        assert_eq!(star.mul.d1().len(), 2);
        let plain = unfold(&n, 1000).unwrap();
        assert!(!plain.is_pseudo());
    }

    #[test]
    fn unfold_limit_is_enforced() {
        let n = two_leaf_network();
        assert!(matches!(unfold_star(&n, 2), Err(Error::Resource(_))));
    }

    #[test]
    fn universal_folding_passes_the_folding_axioms() {
        let n = network_from_adjacency(
            "r",
            &[
                ("r", &["s"]),
                ("s", &["u", "v"]),
                ("u", &["A", "h"]),
                ("v", &["h", "C"]),
                ("h", &["B"]),
            ],
        )
        .unwrap();
        let (star, f) = universal_folding(&n, 1000).unwrap();
        let rep = check_folding(&star.mul, &n, &f).unwrap();
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn lift_of_a_tree_map_verifies_and_recomposes() {
        let t = gene_tree(inner(
            Event::Speciation,
            vec![leaf("a", "A"), leaf("b", "B")],
        ))
        .unwrap();
        let result = pipeline(&t).unwrap();
        let nstar = result.final_network().clone();
        let mu = result.final_map().clone();
        let (star, kappa) = lift_mu(&t, &nstar, &mu, 10_000).unwrap();
        let rep = check_mul(&t, &star.mul, &kappa).unwrap();
        assert!(rep.ok(), "{rep}");
        // Composing with the universal folding recovers mu pointwise.
        let (_, f) = universal_folding(&nstar, 10_000).unwrap();
        let recomposed = crate::construct::compose_reconciliation(&kappa, &f).unwrap();
        assert_eq!(recomposed, mu);
    }

    #[test]
    fn roundtrip_on_the_cherry() {
        let t = gene_tree(inner(
            Event::Speciation,
            vec![leaf("a", "A"), leaf("b", "B")],
        ))
        .unwrap();
        let n = two_leaf_network();
        let out = roundtrip_check(&t, &n, &SearchLimits::default(), 10_000).unwrap();
        assert!(out.treenet.is_some());
        assert!(out.mul.is_some());
        assert!(out.agree());
    }
}
