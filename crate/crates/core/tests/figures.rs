//! Reproduction of the hand-sized counterexamples and worked instances
//! that pin down the boundary of the theory: where relaxed maps exist
//! but strict ones do not, where triple display and reconcilability
//! diverge, and how multi-arc elimination rewires a folded network.

mod common;

use common::*;
use reconet::axioms::{
    check_mul, check_relaxed_tree, check_treenet, exists_treenet_map, ReconMap, SearchLimits,
    TargetKind,
};
use reconet::construct::{compose_reconciliation, pipeline, star_sets};
use reconet::digraph::Item;
use reconet::phylo::{Event, Triple};
use reconet::triples::{
    displays, informative_triples, is_compatible, reconcile_to_tree, DisplayLimits,
};
use reconet::unfold::{lift_mu, universal_folding};

#[test]
fn fig1_relaxed_map_exists_into_the_caterpillar() {
    let t = fig1_tree();
    let s = fig1_species_tree();
    let mu = fig1_relaxed_map(&t, &s);
    let relaxed = check_relaxed_tree(&t, &s, &mu, false).unwrap();
    assert!(relaxed.ok(), "{relaxed}");
    // The same map is a TreeNet reconciliation (the tree-target equivalence).
    let treenet = check_treenet(&t, &s, &mu).unwrap();
    assert!(treenet.ok(), "{treenet}");
    // But it is not strict: one speciation has comparable child images.
    let strict = check_relaxed_tree(&t, &s, &mu, true).unwrap();
    assert!(strict.violations.iter().any(|v| v.axiom == "R2.iii"));
}

/// Exhaustive strict-map search into one species tree: speciation
/// images are forced to the lca by (R2.i*), duplications range over
/// all arcs.
fn strict_map_exists(
    t: &reconet::phylo::GeneTree,
    s: &reconet::phylo::Network,
) -> bool {
    let sg = s.graph();
    let mut forced = ReconMap::new(TargetKind::Network);
    let mut dups = Vec::new();
    for v in t.graph().vertices() {
        if let Some(sp) = t.species_of(v) {
            match s.leaf_of(sp) {
                Some(l) => forced.insert(v, l),
                None => return false,
            }
            continue;
        }
        match t.event(v).unwrap() {
            Event::Speciation => {
                let leaves: Vec<_> = t
                    .species_below(v)
                    .unwrap()
                    .iter()
                    .filter_map(|sp| s.leaf_of(sp))
                    .collect();
                if leaves.len() != t.species_below(v).unwrap().len() {
                    return false;
                }
                forced.insert(v, sg.lca(&leaves).unwrap());
            }
            Event::Duplication => dups.push(v),
        }
    }
    let arcs: Vec<_> = sg.arcs().collect();
    let mut assignment = vec![0usize; dups.len()];
    loop {
        let mut mu = forced.clone();
        for (i, &d) in dups.iter().enumerate() {
            mu.insert(d, arcs[assignment[i]]);
        }
        if check_relaxed_tree(t, s, &mu, true).unwrap().ok() {
            return true;
        }
        // Next assignment.
        let mut i = 0;
        loop {
            if i == dups.len() {
                return false;
            }
            assignment[i] += 1;
            if assignment[i] < arcs.len() {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn fig1_no_strict_map_into_any_species_tree() {
    let t = fig1_tree();
    let s_t = informative_triples(&t).unwrap();
    assert!(s_t.contains(&Triple::new("A", "B", "C").unwrap()));
    assert!(s_t.contains(&Triple::new("B", "C", "A").unwrap()));
    assert!(is_compatible(&s_t).unwrap().is_none());
    let trees = all_species_trees(&["A", "B", "C", "D"]);
    assert_eq!(trees.len(), 26);
    for s in &trees {
        assert!(!strict_map_exists(&t, s));
    }
}

#[test]
fn fig2_tree_has_incompatible_triples_and_no_tree_target() {
    let t = fig2_tree();
    assert!(t.is_binary());
    let s_t = informative_triples(&t).unwrap();
    assert!(s_t.contains(&Triple::new("A", "B", "C").unwrap()));
    assert!(s_t.contains(&Triple::new("B", "C", "A").unwrap()));
    assert!(reconcile_to_tree(&t).unwrap().is_none());
    // No TreeNet reconciliation into any species tree on {A,B,C,D}.
    let limits = SearchLimits::default();
    for s in all_species_trees(&["A", "B", "C", "D"]) {
        assert!(exists_treenet_map(&t, &s, &limits).unwrap().is_none());
    }
}

#[test]
fn fig2_network_displays_bc_a_but_not_ab_c() {
    let n = fig2_network();
    let limits = DisplayLimits::default();
    assert!(displays(&n, &Triple::new("B", "C", "A").unwrap(), &limits).unwrap());
    assert!(!displays(&n, &Triple::new("A", "B", "C").unwrap(), &limits).unwrap());
}

#[test]
fn fig3_network_displays_all_triples_yet_admits_no_map() {
    let t = fig3_tree();
    let n = fig3_network();
    let s_t = informative_triples(&t).unwrap();
    let want: Vec<Triple> = ["C", "D"]
        .iter()
        .map(|c| Triple::new("A", "B", *c).unwrap())
        .chain([
            Triple::new("A", "C", "D").unwrap(),
            Triple::new("B", "C", "D").unwrap(),
        ])
        .collect();
    assert_eq!(s_t.len(), 4);
    let limits = DisplayLimits::default();
    for tr in &want {
        assert!(s_t.contains(tr));
        assert!(displays(&n, tr, &limits).unwrap(), "{tr} not displayed");
    }
    // The caterpillar's triples are compatible...
    assert!(is_compatible(&s_t).unwrap().is_some());
    // ...while the network admits no TreeNet reconciliation.
    assert!(exists_treenet_map(&t, &n, &SearchLimits::default())
        .unwrap()
        .is_none());
}

#[test]
fn fig3_roundtrip_agrees_with_both_sides_absent() {
    let t = fig3_tree();
    let n = fig3_network();
    let out = reconet::unfold::roundtrip_check(&t, &n, &SearchLimits::default(), 100_000).unwrap();
    assert!(out.treenet.is_none());
    assert!(out.mul.is_none());
    assert!(out.agree());
}

#[test]
fn fig4_fold_produces_the_two_double_arcs() {
    let m = fig4_mul();
    let arts = reconet::construct::fold_mul_to_network(&m).unwrap();
    let n = &arts.network;
    assert!(!n.is_multi_arc_free());
    let g = n.graph();
    // Exactly two parallel pairs: one above par(B), one above par(C).
    let doubled: Vec<_> = g.arcs().filter(|a| a.index == 1).collect();
    assert_eq!(doubled.len(), 2);
    let b_parent = g.inn(n.leaf_of("B").unwrap())[0].tail;
    let c_parent = g.inn(n.leaf_of("C").unwrap())[0].tail;
    assert_eq!(g.indeg(b_parent), 3);
    assert_eq!(g.indeg(c_parent), 2);
    assert!(doubled.iter().any(|a| a.head == b_parent));
    assert!(doubled.iter().any(|a| a.head == c_parent));
    // The vertex with the doubled arc separates B from itself.
    let b_leaf = n.leaf_of("B").unwrap();
    let q = g
        .separation_set(b_leaf.into(), b_leaf.into())
        .unwrap();
    let a_vertex = doubled
        .iter()
        .find(|a| a.head == b_parent)
        .unwrap()
        .tail;
    assert!(q.contains(&a_vertex));
    assert!(q.contains(&n.root_child()));
}

#[test]
fn fig5_fold_is_multi_arc_free_with_three_hybrids() {
    let t = fig5_tree();
    let result = pipeline(&t).unwrap();
    let n = &result.fold.network;
    assert!(n.is_multi_arc_free());
    assert_eq!(n.hybrid_vertices().len(), 3);
    let rep = check_treenet(&t, n, &result.mu).unwrap();
    assert!(rep.ok(), "{rep}");
    let rep = check_mul(&t, &result.fold.subdivided, &result.kappa_sub).unwrap();
    assert!(rep.ok(), "{rep}");
}

#[test]
fn fig6_lift_reproduces_mu_after_folding_back() {
    let t = fig5_tree();
    let result = pipeline(&t).unwrap();
    let (nstar, _, mu_star) = result.multiarc_free.as_ref().unwrap();
    let (star, kappa) = lift_mu(&t, nstar, mu_star, 100_000).unwrap();
    let rep = check_mul(&t, &star.mul, &kappa).unwrap();
    assert!(rep.ok(), "{rep}");
    let (_, f) = universal_folding(nstar, 100_000).unwrap();
    let recomposed = compose_reconciliation(&kappa, &f).unwrap();
    assert_eq!(&recomposed, mu_star);
}

#[test]
fn fig7_star_sets_match_the_worked_example() {
    let t = fig7_tree();
    let result = pipeline(&t).unwrap();
    let n = &result.fold.network;
    let stars = star_sets(n).unwrap();
    let (v2, v3, v4) = fig7_mixed_vertices(&t);
    // Gene-tree vertex ids survive into the fold unchanged.
    let f = &result.fold.folding;
    let (n2, n3, n4) = (f.f_v[&v2], f.f_v[&v3], f.f_v[&v4]);

    assert!(stars.w["A"].is_empty());
    for sp in ["B", "C", "D", "E"] {
        assert!(!stars.w[sp].is_empty(), "W_{sp} should be non-empty");
    }
    assert_eq!(stars.v["B"], [n2, n3].into_iter().collect());
    assert_eq!(stars.v["C"], [n3].into_iter().collect());
    assert_eq!(stars.v["D"], [n3, n4].into_iter().collect());
    assert_eq!(stars.v["E"], [n4].into_iter().collect());
    // W1 holds the root, the three mixed vertices, and the lone A leaf.
    let non_leaves: std::collections::BTreeSet<_> = stars
        .w1
        .iter()
        .filter(|v| !n.graph().is_leaf(**v))
        .copied()
        .collect();
    assert_eq!(non_leaves, [n.root(), n2, n3, n4].into_iter().collect());

    // N*: fresh hybrids for B and D (case III), direct arcs for C and E.
    let (nstar, map, mu_star) = result.multiarc_free.as_ref().unwrap();
    assert!(nstar.is_multi_arc_free());
    assert_eq!(
        map.hybrid.keys().cloned().collect::<Vec<_>>(),
        vec!["B".to_string(), "D".to_string()]
    );
    assert_eq!(map.species_arc.len(), 4);
    let rep = check_treenet(&t, nstar, mu_star).unwrap();
    assert!(rep.ok(), "{rep}");

    // The duplication over the two B-copies lands on the fresh (w_B, B) arc.
    let u_b = *t
        .graph()
        .children(t.root())
        .iter()
        .find(|&&c| t.event(c) == Some(Event::Duplication))
        .unwrap();
    assert_eq!(mu_star.get(u_b), Some(Item::Arc(map.species_arc["B"])));

    // All informative triples are displayed by N*.
    let limits = DisplayLimits::default();
    for tr in &informative_triples(&t).unwrap().triples {
        assert!(displays(nstar, tr, &limits).unwrap(), "{tr}");
    }
}
