//! Constructive procedures: MUL-tree association, the trivial
//! reconciliation, subdivision lifting, folding a MUL-tree into a
//! network, map composition, star sets, multi-arc elimination, the
//! end-to-end pipeline, and the triples-to-network construction.

use std::collections::{BTreeMap, BTreeSet};

use crate::axioms::{FoldingMap, ReconMap, TargetKind};
use crate::digraph::{ArcId, DigraphBuilder, Item, SubdivisionMap, VertexId};
use crate::error::{Error, Result};
use crate::phylo::{
    is_well_behaved, simple_subdivision, validate_mul_tree, validate_network, Event, GeneTree,
    MULTree, Network,
};
use crate::triples::{star_of_triples, TripleSet};

/// Everything produced by folding a MUL-tree into a network: the input
/// tree, its simple subdivision, the network, the folding map from the
/// subdivision onto the network, and the layer correspondences.
#[derive(Clone, Debug)]
pub struct FoldArtifacts {
    pub mul: MULTree,
    pub subdivided: MULTree,
    pub network: Network,
    /// Folding from `subdivided` onto `network`.
    pub folding: FoldingMap,
    /// Old arc of `mul` -> its replacement path in `subdivided`.
    pub subdivision: SubdivisionMap,
}

/// Build `M(T;t,σ)`: replace every leaf by its species class and add
/// an incoming root arc. Gene-tree vertex ids are preserved in the
/// MUL-tree; the fresh root is the last vertex. Returns the MUL-tree
/// together with the trivial reconciliation: leaves and speciations
/// map to their own copies, duplications to their unique incoming arc.
pub fn associate_mul(t: &GeneTree) -> Result<(MULTree, ReconMap)> {
    let g = t.graph();
    let mut b = DigraphBuilder::new();
    b.add_vertices(g.num_vertices());
    for arc in g.arcs() {
        b.add_arc(arc.tail, arc.head)?;
    }
    let rho = b.add_vertex();
    b.add_arc(rho, t.root())?;
    b.set_root(rho);
    let graph = b.build()?;
    let labels: BTreeMap<VertexId, String> = t
        .genes()
        .map(|(v, _)| (v, t.species_of(v).unwrap().to_string()))
        .collect();
    let mul = validate_mul_tree(graph, labels, false)?;

    let mut kappa = ReconMap::new(TargetKind::MulTree);
    for v in g.vertices() {
        if t.is_gene_leaf(v) {
            kappa.insert(v, v);
        } else {
            match t.event(v).unwrap() {
                Event::Speciation => kappa.insert(v, v),
                Event::Duplication => kappa.insert(
                    v,
                    mul.graph()
                        .unique_in_arc(v)
                        .expect("every MUL-tree vertex below the root has one parent"),
                ),
            }
        }
    }
    Ok((mul, kappa))
}

/// Lift a reconciliation along a subdivision: vertex images stay,
/// arc images become the last arc of their replacement path.
pub fn lift_kappa_to_subdivision(
    kappa: &ReconMap,
    m: &MULTree,
    msub: &MULTree,
    correspondence: &SubdivisionMap,
) -> Result<ReconMap> {
    let mut out = ReconMap::new(TargetKind::MulTree);
    for (v, img) in kappa.iter() {
        let lifted: Item = match img {
            Item::Vertex(w) => {
                if !m.graph().contains_vertex(w) || !msub.graph().contains_vertex(w) {
                    return Err(Error::argument(format!(
                        "vertex {w} is not shared between the MUL-tree and its subdivision"
                    )));
                }
                w.into()
            }
            Item::Arc(e) => match correspondence.arc_paths.get(&e) {
                Some(path) => (*path.last().expect("paths are non-empty")).into(),
                None => {
                    return Err(Error::argument(format!(
                        "arc {e} has no image in the subdivision correspondence"
                    )))
                }
            },
        };
        out.insert(v, lifted);
    }
    Ok(out)
}

/// Fold a MUL-tree into a network: subdivide once above every
/// multiply-labeled leaf, then identify, per species, all subdivided
/// leaf arcs into the unique arc `(par(x), x)`. Parallel arcs appear
/// exactly where one MUL vertex is adjacent to several leaves of the
/// same species.
pub fn fold_mul_to_network(m: &MULTree) -> Result<FoldArtifacts> {
    let sub = simple_subdivision(m)?;
    let msub = &sub.tree;
    let mg = msub.graph();

    let mut b = DigraphBuilder::new();
    let mut vmap: BTreeMap<VertexId, VertexId> = BTreeMap::new();

    // Carry over every vertex that is neither a subdivision point nor a
    // leaf of a multiply-labeled class, in id order.
    for v in mg.vertices() {
        if sub.interior_of_arc.contains_key(&v) {
            continue;
        }
        if let Some(species) = msub.species_of(v) {
            if msub.chi_of(species).map(BTreeSet::len).unwrap_or(0) >= 2 {
                continue;
            }
        }
        vmap.insert(v, b.add_vertex());
    }
    // One hybrid (the identified subdivision points) and one leaf per
    // multiply-labeled species, in species order.
    let mut leaf_labels: BTreeMap<VertexId, String> = BTreeMap::new();
    for (species, class) in m.chi() {
        if class.len() >= 2 {
            let par = b.add_vertex();
            let leaf = b.add_vertex();
            leaf_labels.insert(leaf, species.clone());
            for &l in class {
                vmap.insert(l, leaf);
                let arc = m.graph().unique_in_arc(l).expect("leaf parent");
                for &ve in &sub.map.interior[&arc] {
                    vmap.insert(ve, par);
                }
            }
        } else {
            let l = *class.iter().next().expect("chi classes are non-empty");
            leaf_labels.insert(vmap[&l], species.clone());
        }
    }

    // Arcs in insertion order; per species the identified leaf arc is
    // created once and shared by every preimage.
    let mut f_e: BTreeMap<ArcId, ArcId> = BTreeMap::new();
    let mut species_leaf_arc: BTreeMap<String, ArcId> = BTreeMap::new();
    for arc in mg.arcs() {
        let head_species_multi = msub
            .species_of(arc.head)
            .filter(|s| m.chi_of(s).map(BTreeSet::len).unwrap_or(0) >= 2)
            .map(str::to_string);
        if let Some(species) = head_species_multi {
            let shared = match species_leaf_arc.get(&species) {
                Some(&a) => a,
                None => {
                    let a = b.add_arc(vmap[&arc.tail], vmap[&arc.head])?;
                    species_leaf_arc.insert(species.clone(), a);
                    a
                }
            };
            f_e.insert(arc, shared);
        } else {
            let a = b.add_arc(vmap[&arc.tail], vmap[&arc.head])?;
            f_e.insert(arc, a);
        }
    }
    b.set_root(vmap[&msub.root()]);
    let graph = b.build()?;
    let network = validate_network(graph, leaf_labels)?;

    let folding = FoldingMap {
        f_v: vmap,
        f_e,
    };
    Ok(FoldArtifacts {
        mul: m.clone(),
        subdivided: msub.clone(),
        network,
        folding,
        subdivision: sub.map,
    })
}

/// Compose a MUL-reconciliation with a folding map.
pub fn compose_reconciliation(kappa: &ReconMap, f: &FoldingMap) -> Result<ReconMap> {
    let mut mu = ReconMap::new(TargetKind::Network);
    for (v, img) in kappa.iter() {
        let image: Item = match img {
            Item::Vertex(w) => match f.f_v.get(&w) {
                Some(&x) => x.into(),
                None => return Err(Error::argument(format!("folding has no image for {w}"))),
            },
            Item::Arc(e) => match f.f_e.get(&e) {
                Some(&x) => x.into(),
                None => return Err(Error::argument(format!("folding has no image for {e}"))),
            },
        };
        mu.insert(v, image);
    }
    Ok(mu)
}

/// The species-pure ancestor structure of a network: per species `x`
/// the set `W_x` of vertices strictly above `x` whose leaf set is
/// exactly `{x}`, its boundary parents `V_x`, the vertex partition
/// `W1 / W2`, and the arc set `F1` inside `W1`.
#[derive(Clone, Debug)]
pub struct StarSets {
    pub w: BTreeMap<String, BTreeSet<VertexId>>,
    pub v: BTreeMap<String, BTreeSet<VertexId>>,
    pub w1: BTreeSet<VertexId>,
    pub w2: BTreeSet<VertexId>,
    pub f1: BTreeSet<ArcId>,
}

pub fn star_sets(n: &Network) -> Result<StarSets> {
    let g = n.graph();
    let mut w: BTreeMap<String, BTreeSet<VertexId>> = BTreeMap::new();
    let mut v: BTreeMap<String, BTreeSet<VertexId>> = BTreeMap::new();
    for species in n.species() {
        let leaf = n.leaf_of(species).unwrap();
        let mut wx = BTreeSet::new();
        for cand in g.vertices() {
            if cand == leaf {
                continue;
            }
            if g.le_unchecked(leaf.into(), cand.into()) {
                let below = n.species_below(cand)?;
                if below.len() == 1 && below.contains(species) {
                    wx.insert(cand);
                }
            }
        }
        let mut vx = BTreeSet::new();
        for arc in g.arcs() {
            if wx.contains(&arc.head) && !wx.contains(&arc.tail) {
                vx.insert(arc.tail);
            }
        }
        w.insert(species.to_string(), wx);
        v.insert(species.to_string(), vx);
    }
    let mut w2 = BTreeSet::new();
    for (species, wx) in &w {
        if !wx.is_empty() {
            w2.extend(wx.iter().copied());
            w2.insert(n.leaf_of(species).unwrap());
        }
    }
    let w1: BTreeSet<VertexId> = g.vertices().filter(|x| !w2.contains(x)).collect();
    let f1 = g
        .arcs()
        .filter(|a| w1.contains(&a.tail) && w1.contains(&a.head))
        .collect();
    Ok(StarSets { w, v, w1, w2, f1 })
}

/// Correspondence between a network and its multi-arc free form.
#[derive(Clone, Debug)]
pub struct NstarMap {
    /// Surviving vertex -> its id in N*.
    pub vertex: BTreeMap<VertexId, VertexId>,
    /// Surviving arc -> its id in N*.
    pub arc: BTreeMap<ArcId, ArcId>,
    /// Species processed in Case (II)/(III) -> the fresh arc into the
    /// species leaf in N*.
    pub species_arc: BTreeMap<String, ArcId>,
    /// Species processed in Case (III) -> the fresh hybrid `w_x`.
    pub hybrid: BTreeMap<String, VertexId>,
    pub stars: StarSets,
}

/// Replace every non-empty species-pure region `W_x` by a direct arc
/// (`|V_x| = 1`) or a fresh hybrid `w_x` (`|V_x| > 1`), yielding a
/// multi-arc free network. Proven correct for networks folded from
/// simple subdivisions; the output is revalidated and the operation
/// fails loudly otherwise.
pub fn eliminate_multiarcs(n: &Network) -> Result<(Network, NstarMap)> {
    let stars = star_sets(n)?;
    let g = n.graph();
    let removed: BTreeSet<VertexId> = stars.w.values().flatten().copied().collect();

    let mut b = DigraphBuilder::new();
    let mut vertex: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for old in g.vertices() {
        if !removed.contains(&old) {
            vertex.insert(old, b.add_vertex());
        }
    }
    let mut arc: BTreeMap<ArcId, ArcId> = BTreeMap::new();
    for a in g.arcs() {
        if !removed.contains(&a.tail) && !removed.contains(&a.head) {
            arc.insert(a, b.add_arc(vertex[&a.tail], vertex[&a.head])?);
        }
    }
    let mut species_arc = BTreeMap::new();
    let mut hybrid = BTreeMap::new();
    // Case (II) species in ascending name order, then Case (III).
    for (species, wx) in &stars.w {
        if wx.is_empty() || stars.v[species].len() != 1 {
            continue;
        }
        let z = *stars.v[species].iter().next().unwrap();
        let x = n.leaf_of(species).unwrap();
        species_arc.insert(species.clone(), b.add_arc(vertex[&z], vertex[&x])?);
    }
    for (species, wx) in &stars.w {
        if wx.is_empty() || stars.v[species].len() <= 1 {
            continue;
        }
        let wx_new = b.add_vertex();
        hybrid.insert(species.clone(), wx_new);
        for &z in &stars.v[species] {
            b.add_arc(vertex[&z], wx_new)?;
        }
        let x = n.leaf_of(species).unwrap();
        species_arc.insert(species.clone(), b.add_arc(wx_new, vertex[&x])?);
    }
    b.set_root(vertex[&n.root()]);
    let graph = b.build()?;
    let labels: BTreeMap<VertexId, String> = n
        .species()
        .map(|s| (vertex[&n.leaf_of(s).unwrap()], s.to_string()))
        .collect();
    let nstar = validate_network(graph, labels)?;
    if !nstar.is_multi_arc_free() {
        return Err(Error::structure(
            "multi-arc elimination left parallel arcs; the input violates the construction hypothesis",
        ));
    }
    Ok((
        nstar,
        NstarMap {
            vertex,
            arc,
            species_arc,
            hybrid,
            stars,
        },
    ))
}

/// Adjust a reconciliation into `N` to one into `N*`: images of
/// leaves, speciations and duplications on `F1` arcs survive
/// unchanged; any other duplication lands on the fresh arc into the
/// species whose pure region swallowed its image.
pub fn build_mu_star(
    t: &GeneTree,
    mu: &ReconMap,
    n: &Network,
    _nstar: &Network,
    map: &NstarMap,
) -> Result<ReconMap> {
    if !is_well_behaved(t) {
        return Err(Error::argument(
            "the multi-arc free adjustment requires a well-behaved gene tree",
        ));
    }
    let stars = &map.stars;
    let mut out = ReconMap::new(TargetKind::Network);
    for (v, img) in mu.iter() {
        let keep = t.is_gene_leaf(v)
            || t.event(v) == Some(Event::Speciation)
            || matches!(img, Item::Arc(e) if stars.f1.contains(&e));
        if keep {
            let translated: Item = match img {
                Item::Vertex(w) => match map.vertex.get(&w) {
                    Some(&nw) => nw.into(),
                    None => {
                        return Err(Error::structure(format!(
                            "image {w} was removed but must survive"
                        )))
                    }
                },
                Item::Arc(e) => match map.arc.get(&e) {
                    Some(&ne) => ne.into(),
                    None => {
                        return Err(Error::structure(format!(
                            "arc image {e} was removed but must survive"
                        )))
                    }
                },
            };
            out.insert(v, translated);
            continue;
        }
        let e = img.as_arc().ok_or_else(|| {
            Error::argument(format!("duplication image of {v} must be an arc"))
        })?;
        let head = e.head;
        let species = match n.species_of(head) {
            Some(s) => s.to_string(),
            None => stars
                .w
                .iter()
                .find(|(_, wx)| wx.contains(&head))
                .map(|(s, _)| s.clone())
                .ok_or_else(|| {
                    Error::structure(format!(
                        "image head {head} is neither a leaf nor inside any pure region"
                    ))
                })?,
        };
        let arc = map.species_arc.get(&species).ok_or_else(|| {
            Error::structure(format!("no replacement arc recorded for species {species}"))
        })?;
        out.insert(v, *arc);
    }
    Ok(out)
}

/// Result of the end-to-end construction. When the input is not
/// well-behaved the multi-arc free stage is skipped and the (possibly
/// multi-arc) folded network is the final result.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub fold: FoldArtifacts,
    /// Trivial reconciliation into the unsubdivided MUL-tree.
    pub kappa: ReconMap,
    /// Its lift onto the simple subdivision.
    pub kappa_sub: ReconMap,
    /// Composed reconciliation into the folded network.
    pub mu: ReconMap,
    pub stars: StarSets,
    pub well_behaved: bool,
    /// Present exactly when the input is well-behaved.
    pub multiarc_free: Option<(Network, NstarMap, ReconMap)>,
}

impl PipelineResult {
    /// The final network: `N*` when available, otherwise `N`.
    pub fn final_network(&self) -> &Network {
        match &self.multiarc_free {
            Some((nstar, _, _)) => nstar,
            None => &self.fold.network,
        }
    }

    pub fn final_map(&self) -> &ReconMap {
        match &self.multiarc_free {
            Some((_, _, mu_star)) => mu_star,
            None => &self.mu,
        }
    }
}

/// Run the full chain: associate the MUL-tree, subdivide, lift the
/// trivial reconciliation, fold, compose, and (for well-behaved input)
/// eliminate multi-arcs and adjust the map.
pub fn pipeline(t: &GeneTree) -> Result<PipelineResult> {
    let (mul, kappa) = associate_mul(t)?;
    let fold = fold_mul_to_network(&mul)?;
    let kappa_sub = lift_kappa_to_subdivision(&kappa, &mul, &fold.subdivided, &fold.subdivision)?;
    let mu = compose_reconciliation(&kappa_sub, &fold.folding)?;
    let stars = star_sets(&fold.network)?;
    let well_behaved = is_well_behaved(t);
    let multiarc_free = if well_behaved {
        let (nstar, map) = eliminate_multiarcs(&fold.network)?;
        let mu_star = build_mu_star(t, &mu, &fold.network, &nstar, &map)?;
        Some((nstar, map, mu_star))
    } else {
        None
    };
    Ok(PipelineResult {
        fold,
        kappa,
        kappa_sub,
        mu,
        stars,
        well_behaved,
        multiarc_free,
    })
}

/// Build a multi-arc free network displaying every triple of `r` by
/// running the pipeline on the star-of-triples gene tree. Returns
/// `None` for the empty set (any network displays all zero triples;
/// there is nothing to build).
pub fn network_from_triples(r: &TripleSet) -> Result<Option<Network>> {
    if r.is_empty() {
        return Ok(None);
    }
    let tree = star_of_triples(r)?;
    let result = pipeline(&tree)?;
    debug_assert!(result.well_behaved, "star-of-triples trees are well-behaved");
    match result.multiarc_free {
        Some((nstar, _, _)) => Ok(Some(nstar)),
        None => Err(Error::structure(
            "star-of-triples tree unexpectedly not well-behaved",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{check_folding, check_mul, check_treenet};
    use crate::phylo::build::{gene_tree, inner, leaf};
    use crate::phylo::Triple;

    fn cherry() -> GeneTree {
        gene_tree(inner(
            Event::Speciation,
            vec![leaf("a", "A"), leaf("b", "B")],
        ))
        .unwrap()
    }

    #[test]
    fn associate_mul_of_cherry() {
        let t = cherry();
        let (m, kappa) = associate_mul(&t).unwrap();
        assert_eq!(m.graph().num_vertices(), 4); // rho, root, two leaves
        assert_eq!(kappa.get(t.root()), Some(Item::Vertex(t.root())));
        let rep = check_mul(&t, &m, &kappa).unwrap();
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn fold_single_copies_is_isomorphic() {
        let t = cherry();
        let (m, _) = associate_mul(&t).unwrap();
        let fold = fold_mul_to_network(&m).unwrap();
        assert!(fold.network.is_phylogenetic_tree());
        let rep = check_folding(&fold.subdivided, &fold.network, &fold.folding).unwrap();
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn pipeline_cherry_gives_two_leaf_tree() {
        let t = cherry();
        let result = pipeline(&t).unwrap();
        assert!(result.well_behaved);
        let nstar = result.final_network();
        assert_eq!(nstar.num_species(), 2);
        assert!(nstar.is_phylogenetic_tree());
        let rep = check_treenet(&t, nstar, result.final_map()).unwrap();
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn duplication_produces_multiarcs_then_nstar_removes_them() {
        // Root speciation over a duplication of two A-genes and a B leaf:
        // the fold has a double arc above A's parent.
        let t = gene_tree(inner(
            Event::Speciation,
            vec![
                inner(Event::Duplication, vec![leaf("a", "A"), leaf("a2", "A")]),
                leaf("b", "B"),
            ],
        ))
        .unwrap();
        let result = pipeline(&t).unwrap();
        assert!(!result.fold.network.is_multi_arc_free());
        let rep = check_treenet(&t, &result.fold.network, &result.mu).unwrap();
        assert!(rep.ok(), "{rep}");
        assert!(result.well_behaved);
        let (nstar, _, mu_star) = result.multiarc_free.as_ref().unwrap();
        assert!(nstar.is_multi_arc_free());
        let rep = check_treenet(&t, nstar, mu_star).unwrap();
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn non_well_behaved_input_degrades_to_the_fold() {
        // Speciation root with two children of equal species sets.
        let t = gene_tree(inner(
            Event::Speciation,
            vec![
                inner(Event::Speciation, vec![leaf("a", "A"), leaf("b", "B")]),
                inner(Event::Speciation, vec![leaf("a2", "A"), leaf("b2", "B")]),
            ],
        ))
        .unwrap();
        let result = pipeline(&t).unwrap();
        assert!(!result.well_behaved);
        assert!(result.multiarc_free.is_none());
        let rep = check_treenet(&t, result.final_network(), result.final_map()).unwrap();
        assert!(rep.ok(), "{rep}");
    }

    #[test]
    fn mu_star_requires_well_behaved_input() {
        let t = gene_tree(inner(
            Event::Speciation,
            vec![
                inner(Event::Speciation, vec![leaf("a", "A"), leaf("b", "B")]),
                inner(Event::Speciation, vec![leaf("a2", "A"), leaf("b2", "B")]),
            ],
        ))
        .unwrap();
        let (mul, kappa) = associate_mul(&t).unwrap();
        let fold = fold_mul_to_network(&mul).unwrap();
        let kappa_sub =
            lift_kappa_to_subdivision(&kappa, &mul, &fold.subdivided, &fold.subdivision).unwrap();
        let mu = compose_reconciliation(&kappa_sub, &fold.folding).unwrap();
        let (nstar, map) = eliminate_multiarcs(&fold.network).unwrap();
        let err = build_mu_star(&t, &mu, &fold.network, &nstar, &map).unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err}");
    }

    #[test]
    fn singly_labeled_fold_adds_nothing() {
        let t = gene_tree(inner(
            Event::Speciation,
            vec![leaf("a", "A"), leaf("b", "B"), leaf("c", "C")],
        ))
        .unwrap();
        let (m, _) = associate_mul(&t).unwrap();
        let fold = fold_mul_to_network(&m).unwrap();
        assert_eq!(
            fold.network.graph().num_vertices(),
            m.graph().num_vertices()
        );
        assert_eq!(fold.network.graph().num_arcs(), m.graph().num_arcs());
        assert!(fold.network.hybrid_vertices().is_empty());
    }

    #[test]
    fn triples_to_network_displays_inputs() {
        use crate::triples::{displays, DisplayLimits};
        let r = TripleSet::from_triples([
            Triple::new("A", "B", "C").unwrap(),
            Triple::new("B", "C", "A").unwrap(),
        ]);
        let n = network_from_triples(&r).unwrap().expect("non-empty");
        assert!(n.is_multi_arc_free());
        for tr in &r.triples {
            assert!(displays(&n, tr, &DisplayLimits::default()).unwrap(), "{tr}");
        }
        let empty = TripleSet::default();
        assert!(network_from_triples(&empty).unwrap().is_none());
    }
}
