//! Shared fixtures and independent oracles for the integration suite.
//!
//! The figure fixtures rebuild the instances discussed in the source
//! material from their stated properties; every assertion made about
//! them in the test files is one of those properties.

#![allow(dead_code)]

use std::collections::BTreeMap;

use reconet::axioms::{ReconMap, TargetKind};
use reconet::digraph::{Digraph, DigraphBuilder, VertexId};
use reconet::io::newick::{parse_gene_tree, parse_mul_tree, parse_network};
use reconet::phylo::{validate_network, GeneTree, MULTree, Network};

// ---------------------------------------------------------------------------
// Figure fixtures
// ---------------------------------------------------------------------------

/// Non-binary event-labeled gene tree with a duplication root over two
/// ternary speciations. Its informative triples are
/// {AB|C, AB|D, BC|A, BC|D} (incompatible), every speciation has
/// pairwise σ-disjoint children, and a relaxed — but no strict — tree
/// reconciliation map exists into [`fig1_species_tree`].
pub fn fig1_tree() -> GeneTree {
    parse_gene_tree(
        "(((a@A,b@B)S,c@C,d@D)S,((b2@B,c2@C)S,a2@A,d2@D)S)D;",
        None,
    )
    .unwrap()
}

/// The caterpillar species tree (((A,B),C),D).
pub fn fig1_species_tree() -> Network {
    parse_network("((((A,B),C),D));").unwrap().0
}

/// The relaxed tree reconciliation map from [`fig1_tree`] into
/// [`fig1_species_tree`]: speciations to the lca of their species,
/// the duplication root to the root arc.
pub fn fig1_relaxed_map(t: &GeneTree, s: &Network) -> ReconMap {
    let sg = s.graph();
    let mut mu = ReconMap::new(TargetKind::Network);
    for v in t.graph().vertices() {
        if let Some(sp) = t.species_of(v) {
            mu.insert(v, s.leaf_of(sp).unwrap());
            continue;
        }
        let leaves: Vec<VertexId> = t
            .species_below(v)
            .unwrap()
            .iter()
            .map(|sp| s.leaf_of(sp).unwrap())
            .collect();
        let lca = sg.lca(&leaves).unwrap();
        if v == t.root() {
            mu.insert(v, sg.unique_in_arc(lca).unwrap());
        } else {
            mu.insert(v, lca);
        }
    }
    mu
}

/// Binary gene tree on eight genes over {A,B,C,D} whose informative
/// triples contain both AB|C and BC|A, hence are incompatible: no
/// (relaxed) tree or TreeNet reconciliation map to any species tree.
pub fn fig2_tree() -> GeneTree {
    parse_gene_tree(
        "((((a@A,b@B)S,c@C)S,((b2@B,c2@C)S,a2@A)S)D,(c3@C,d@D)S)S;",
        None,
    )
    .unwrap()
}

/// Network on {A,B,C,D} with one hybrid above D that displays BC|A
/// but does not display AB|C.
pub fn fig2_network() -> Network {
    parse_network("((((B,C),A,(D)#H1),#H1));").unwrap().0
}

/// The all-speciation caterpillar (((a,b),c),d) with σ injective.
pub fn fig3_tree() -> GeneTree {
    parse_gene_tree("(((a@A,b@B)S,c@C)S,d@D)S;", None).unwrap()
}

/// Network on {A,B,C,D} displaying all four triples of the caterpillar
/// — yet admitting no TreeNet reconciliation from it: the only vertex
/// above A, B and C below the top tree vertex separates no pair of A
/// and B images strictly below itself.
pub fn fig3_network() -> Network {
    parse_network("((((A,(C)#H1),B),(D,#H1)));").unwrap().0
}

/// MUL-tree with χ(B) of size three (two copies under one vertex) and
/// χ(C) of size two under one vertex: its fold has a double arc into
/// the B-parent and into the C-parent.
pub fn fig4_mul() -> MULTree {
    parse_mul_tree("(((B,B),(C,C),B));").unwrap().0
}

/// Gene tree whose fold identifies three leaf-arc pairs into three
/// hybrid vertices (one per species) and stays multi-arc free.
pub fn fig5_tree() -> GeneTree {
    parse_gene_tree(
        "(((a@A,b@B)S,d@D)S,((a2@A,b2@B)S,d2@D)S)D;",
        None,
    )
    .unwrap()
}

/// Gene tree over five species whose fold exhibits the star-set sizes
/// V_B = {2,3}, V_C = {3}, V_D = {3,4}, V_E = {4} and W_A = ∅, where
/// 2, 3, 4 are the three mixed speciation vertices from the root down.
pub fn fig7_tree() -> GeneTree {
    parse_gene_tree(
        "(a@A,(b1@B,b2@B)D,(b3@B,(c1@C,c2@C)D,d3@D,((d1@D,d2@D)D,(e1@E,e2@E)D)S)S)S;",
        None,
    )
    .unwrap()
}

/// The three mixed vertices of [`fig7_tree`] from the root down
/// ("2", "3", "4" in the discussion).
pub fn fig7_mixed_vertices(t: &GeneTree) -> (VertexId, VertexId, VertexId) {
    let root = t.root();
    let v3 = *t
        .graph()
        .children(root)
        .iter()
        .find(|&&c| {
            !t.is_gene_leaf(c) && t.species_below(c).unwrap().len() > 1
        })
        .expect("vertex 3 exists");
    let v4 = *t
        .graph()
        .children(v3)
        .iter()
        .find(|&&c| !t.is_gene_leaf(c) && t.species_below(c).unwrap().len() > 1)
        .expect("vertex 4 exists");
    (root, v3, v4)
}

// ---------------------------------------------------------------------------
// Species-tree enumeration
// ---------------------------------------------------------------------------

enum TreeShape {
    Leaf(String),
    Node(Vec<TreeShape>),
}

fn partitions(items: &[String]) -> Vec<Vec<Vec<String>>> {
    // All set partitions via restricted growth strings.
    let n = items.len();
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let blocks = rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut part: Vec<Vec<String>> = vec![Vec::new(); blocks];
        for (i, &b) in rgs.iter().enumerate() {
            part[b].push(items[i].clone());
        }
        out.push(part);
        // Next RGS.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            let max_prefix = rgs[..i].iter().copied().max().map_or(0, |m| m + 1);
            if i > 0 && rgs[i] <= max_prefix.saturating_sub(0) && rgs[i] < max_prefix {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
        }
    }
}

fn shapes(labels: &[String]) -> Vec<TreeShape> {
    if labels.len() == 1 {
        return vec![TreeShape::Leaf(labels[0].clone())];
    }
    let mut out = Vec::new();
    for part in partitions(labels) {
        if part.len() < 2 {
            continue;
        }
        // Cartesian product of the blocks' subtree choices.
        let per_block: Vec<Vec<TreeShape>> = part.iter().map(|b| shapes(b)).collect();
        let mut acc: Vec<Vec<usize>> = vec![vec![]];
        for block in &per_block {
            let mut next = Vec::new();
            for prefix in &acc {
                for i in 0..block.len() {
                    let mut p = prefix.clone();
                    p.push(i);
                    next.push(p);
                }
            }
            acc = next;
        }
        for choice in acc {
            let children: Vec<TreeShape> = choice
                .iter()
                .enumerate()
                .map(|(bi, &si)| clone_shape(&per_block[bi][si]))
                .collect();
            out.push(TreeShape::Node(children));
        }
    }
    out
}

fn clone_shape(s: &TreeShape) -> TreeShape {
    match s {
        TreeShape::Leaf(l) => TreeShape::Leaf(l.clone()),
        TreeShape::Node(c) => TreeShape::Node(c.iter().map(clone_shape).collect()),
    }
}

fn shape_to_network(shape: &TreeShape) -> Network {
    fn add(b: &mut DigraphBuilder, s: &TreeShape, labels: &mut BTreeMap<VertexId, String>) -> VertexId {
        let v = b.add_vertex();
        match s {
            TreeShape::Leaf(l) => {
                labels.insert(v, l.clone());
            }
            TreeShape::Node(children) => {
                for c in children {
                    let cv = add(b, c, labels);
                    b.add_arc(v, cv).unwrap();
                }
            }
        }
        v
    }
    let mut b = DigraphBuilder::new();
    let rho = b.add_vertex();
    let mut labels = BTreeMap::new();
    let top = add(&mut b, shape, &mut labels);
    b.add_arc(rho, top).unwrap();
    b.set_root(rho);
    validate_network(b.build().unwrap(), labels).unwrap()
}

/// Every rooted phylogenetic tree (as a species network with its root
/// arc) on the given labels. 26 trees on four labels.
pub fn all_species_trees(labels: &[&str]) -> Vec<Network> {
    let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    shapes(&labels)
        .iter()
        .map(shape_to_network)
        .collect()
}

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

/// Floyd-Warshall reflexive-transitive closure over vertices.
pub fn closure_oracle(g: &Digraph) -> Vec<Vec<bool>> {
    let n = g.num_vertices();
    let mut m = vec![vec![false; n]; n];
    for v in g.vertices() {
        m[v.idx()][v.idx()] = true;
    }
    for a in g.arcs() {
        m[a.tail.idx()][a.head.idx()] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                let via: Vec<usize> = (0..n).filter(|&j| m[k][j]).collect();
                for j in via {
                    m[i][j] = true;
                }
            }
        }
    }
    m
}

/// All directed paths `from ⇝ to` as arc sequences, by naive DFS.
pub fn paths_oracle(
    g: &Digraph,
    from: VertexId,
    to: VertexId,
) -> Vec<Vec<reconet::digraph::ArcId>> {
    fn rec(
        g: &Digraph,
        at: VertexId,
        to: VertexId,
        seen: &mut Vec<VertexId>,
        arcs: &mut Vec<reconet::digraph::ArcId>,
        out: &mut Vec<Vec<reconet::digraph::ArcId>>,
    ) {
        if at == to {
            out.push(arcs.clone());
            return;
        }
        for &a in g.out(at) {
            if seen.contains(&a.head) {
                continue;
            }
            seen.push(a.head);
            arcs.push(a);
            rec(g, a.head, to, seen, arcs, out);
            arcs.pop();
            seen.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, from, to, &mut vec![from], &mut Vec::new(), &mut out);
    out
}

/// Exhaustive separation oracle: `z ∈ Q(x, y)` iff some pair of paths
/// from `z` to the two targets starts with distinct arcs.
pub fn separation_oracle(g: &Digraph, tx: VertexId, ty: VertexId) -> Vec<VertexId> {
    let mut out = Vec::new();
    for z in g.vertices() {
        let px = paths_oracle(g, z, tx);
        let py = paths_oracle(g, z, ty);
        let mut hit = false;
        'outer: for p in &px {
            for q in &py {
                if let (Some(a), Some(b)) = (p.first(), q.first()) {
                    if a != b {
                        hit = true;
                        break 'outer;
                    }
                }
            }
        }
        if hit {
            out.push(z);
        }
    }
    out
}

/// lca oracle on trees: the ⪯-minimal common ancestor via the closure.
pub fn lca_oracle(g: &Digraph, set: &[VertexId]) -> VertexId {
    let closure = closure_oracle(g);
    let common: Vec<VertexId> = g
        .vertices()
        .filter(|v| set.iter().all(|u| closure[v.idx()][u.idx()]))
        .collect();
    *common
        .iter()
        .find(|v| {
            common
                .iter()
                .all(|w| w == *v || !closure[v.idx()][w.idx()])
        })
        .expect("trees have a common ancestor")
}
