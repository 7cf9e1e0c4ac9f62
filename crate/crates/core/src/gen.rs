//! Seeded random generators for gene trees, MUL-trees, rooted DAGs and
//! rooted trees. All output is a pure function of the seed.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::digraph::{Digraph, DigraphBuilder, VertexId};
use crate::error::{Error, Result};
use crate::phylo::{
    is_well_behaved, validate_gene_tree, validate_mul_tree, Event, GeneTree, MULTree,
};

/// Parameters for [`gen_gene_tree`].
#[derive(Clone, Debug)]
pub struct GeneTreeParams {
    pub max_leaves: usize,
    pub species_count: usize,
    pub dup_prob: f64,
    pub force_well_behaved: bool,
    /// Restrict inner vertices to two children.
    pub binary: bool,
}

impl Default for GeneTreeParams {
    fn default() -> Self {
        GeneTreeParams {
            max_leaves: 10,
            species_count: 4,
            dup_prob: 0.3,
            force_well_behaved: false,
            binary: false,
        }
    }
}

pub fn species_name(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("S{i}")
    }
}

#[derive(Clone)]
struct Shape {
    /// children[i] empty means leaf.
    children: Vec<Vec<usize>>,
    root: usize,
}

fn random_shape(rng: &mut ChaCha8Rng, leaves: usize, binary: bool) -> Shape {
    let mut children: Vec<Vec<usize>> = (0..leaves).map(|_| Vec::new()).collect();
    let mut open: Vec<usize> = (0..leaves).collect();
    while open.len() > 1 {
        let arity = if binary || open.len() == 2 {
            2
        } else {
            2 + rng.random_range(0..=usize::min(2, open.len() - 2))
        };
        let mut picked = Vec::with_capacity(arity);
        for _ in 0..arity {
            let i = rng.random_range(0..open.len());
            picked.push(open.swap_remove(i));
        }
        picked.sort();
        let node = children.len();
        children.push(picked);
        open.push(node);
    }
    Shape {
        root: open[0],
        children,
    }
}

fn build_gene_tree(
    shape: &Shape,
    leaf_species: &[usize],
    events: &[Event],
) -> Result<GeneTree> {
    let mut b = DigraphBuilder::new();
    let ids: Vec<VertexId> = (0..shape.children.len()).map(|_| b.add_vertex()).collect();
    for (i, kids) in shape.children.iter().enumerate() {
        for &k in kids {
            b.add_arc(ids[i], ids[k])?;
        }
    }
    b.set_root(ids[shape.root]);
    let graph = b.build()?;
    let mut event_map = BTreeMap::new();
    let mut sigma = BTreeMap::new();
    let mut leaf_no = 0usize;
    let mut inner_no = 0usize;
    for (i, kids) in shape.children.iter().enumerate() {
        if kids.is_empty() {
            sigma.insert(
                ids[i],
                (format!("g{leaf_no}"), species_name(leaf_species[i])),
            );
            leaf_no += 1;
        } else {
            event_map.insert(ids[i], events[inner_no]);
            inner_no += 1;
        }
    }
    validate_gene_tree(graph, event_map, sigma)
}

/// Generate a valid event-labeled gene tree. With
/// `force_well_behaved`, rejection-samples and then repairs by
/// relabeling one child subtree per degenerate speciation vertex.
pub fn gen_gene_tree(seed: u64, params: &GeneTreeParams) -> Result<GeneTree> {
    if params.species_count < 2 {
        return Err(Error::argument("need at least two species"));
    }
    if params.max_leaves < 2 {
        return Err(Error::argument("need at least two leaves"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..50 {
        let leaves = rng.random_range(2..=params.max_leaves);
        let shape = random_shape(&mut rng, leaves, params.binary);
        let mut leaf_species: Vec<usize> = vec![0; shape.children.len()];
        for (i, kids) in shape.children.iter().enumerate() {
            if kids.is_empty() {
                leaf_species[i] = rng.random_range(0..params.species_count);
            }
        }
        // Guarantee at least two distinct species.
        let leaf_ids: Vec<usize> = shape
            .children
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_empty())
            .map(|(i, _)| i)
            .collect();
        if leaf_ids.iter().all(|&i| leaf_species[i] == leaf_species[leaf_ids[0]]) {
            let flip = leaf_ids[rng.random_range(0..leaf_ids.len())];
            leaf_species[flip] = (leaf_species[flip] + 1) % params.species_count;
        }
        let inner_count = shape.children.iter().filter(|k| !k.is_empty()).count();
        let mut events: Vec<Event> = (0..inner_count)
            .map(|_| {
                if rng.random_bool(params.dup_prob) {
                    Event::Duplication
                } else {
                    Event::Speciation
                }
            })
            .collect();
        if !events.contains(&Event::Speciation) && params.dup_prob < 1.0 {
            events[0] = Event::Speciation;
        }
        let tree = build_gene_tree(&shape, &leaf_species, &events)?;
        if !params.force_well_behaved || is_well_behaved(&tree) {
            return Ok(tree);
        }
        if let Some(fixed) = repair_well_behaved(&shape, &mut leaf_species, &events, params)? {
            return Ok(fixed);
        }
    }
    Err(Error::resource(
        "could not generate a well-behaved tree within the attempt budget",
    ))
}

/// Relabel the first child subtree of each degenerate speciation, then
/// revalidate. Returns `None` when the repair loop fails to converge.
fn repair_well_behaved(
    shape: &Shape,
    leaf_species: &mut [usize],
    events: &[Event],
    params: &GeneTreeParams,
) -> Result<Option<GeneTree>> {
    fn leaves_under(shape: &Shape, node: usize, out: &mut Vec<usize>) {
        if shape.children[node].is_empty() {
            out.push(node);
        } else {
            for &k in &shape.children[node] {
                leaves_under(shape, k, out);
            }
        }
    }
    for _round in 0..100 {
        let tree = build_gene_tree(shape, leaf_species, events)?;
        if is_well_behaved(&tree) {
            return Ok(Some(tree));
        }
        // Locate one degenerate speciation in shape order.
        let mut inner_no = 0usize;
        let mut repaired = false;
        for kids in &shape.children {
            if kids.is_empty() {
                continue;
            }
            let ev = events[inner_no];
            inner_no += 1;
            if ev != Event::Speciation {
                continue;
            }
            let mut sets: Vec<std::collections::BTreeSet<usize>> = Vec::new();
            for &k in kids {
                let mut ls = Vec::new();
                leaves_under(shape, k, &mut ls);
                sets.push(ls.iter().map(|&l| leaf_species[l]).collect());
            }
            if sets.iter().all(|s| *s == sets[0]) {
                let target = if sets[0].len() >= 2 {
                    *sets[0].iter().next().unwrap()
                } else {
                    (sets[0].iter().next().unwrap() + 1) % params.species_count
                };
                let mut ls = Vec::new();
                leaves_under(shape, kids[0], &mut ls);
                for l in ls {
                    leaf_species[l] = target;
                }
                repaired = true;
                break;
            }
        }
        if !repaired {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Parameters for [`gen_mul_tree`].
#[derive(Clone, Debug)]
pub struct MulTreeParams {
    pub max_leaves: usize,
    pub species_count: usize,
}

impl Default for MulTreeParams {
    fn default() -> Self {
        MulTreeParams {
            max_leaves: 10,
            species_count: 4,
        }
    }
}

/// Generate a MUL-tree: a random shape with a root arc and random,
/// possibly repeating, species labels covering at least two species.
pub fn gen_mul_tree(seed: u64, params: &MulTreeParams) -> Result<MULTree> {
    if params.species_count < 2 {
        return Err(Error::argument("need at least two species"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4d55_4c54);
    let leaves = rng.random_range(2..=params.max_leaves.max(2));
    let shape = random_shape(&mut rng, leaves, false);
    let mut b = DigraphBuilder::new();
    let ids: Vec<VertexId> = (0..shape.children.len()).map(|_| b.add_vertex()).collect();
    for (i, kids) in shape.children.iter().enumerate() {
        for &k in kids {
            b.add_arc(ids[i], ids[k])?;
        }
    }
    let rho = b.add_vertex();
    b.add_arc(rho, ids[shape.root])?;
    b.set_root(rho);
    let graph = b.build()?;
    let mut labels = BTreeMap::new();
    let leaf_ids: Vec<VertexId> = shape
        .children
        .iter()
        .enumerate()
        .filter(|(_, k)| k.is_empty())
        .map(|(i, _)| ids[i])
        .collect();
    let mut used = Vec::new();
    for &v in &leaf_ids {
        let s = rng.random_range(0..params.species_count);
        used.push(s);
        labels.insert(v, species_name(s));
    }
    if used.iter().all(|&s| s == used[0]) {
        let v = leaf_ids[rng.random_range(0..leaf_ids.len())];
        labels.insert(v, species_name((used[0] + 1) % params.species_count));
    }
    validate_mul_tree(graph, labels, false)
}

/// Random rooted DAG for oracle testing: vertex 0 is the root, every
/// later vertex picks one or two parents among earlier vertices, and a
/// few parallel arcs are sprinkled in when `multi_arcs` is set.
pub fn gen_rooted_dag(seed: u64, max_vertices: usize, multi_arcs: bool) -> Result<Digraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0da6_0da6);
    let n = rng.random_range(2..=max_vertices.max(2));
    let mut b = DigraphBuilder::new();
    let ids = b.add_vertices(n);
    for i in 1..n {
        let parents = 1 + usize::from(rng.random_bool(0.3));
        for _ in 0..parents {
            let p = rng.random_range(0..i);
            b.add_arc(ids[p], ids[i])?;
        }
        if multi_arcs && rng.random_bool(0.1) {
            let p = rng.random_range(0..i);
            b.add_arc(ids[p], ids[i])?;
        }
    }
    b.set_root(ids[0]);
    b.build()
}

/// Random rooted tree on `n` vertices (vertex 0 the root).
pub fn gen_rooted_tree(seed: u64, max_vertices: usize) -> Result<Digraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7265_6532);
    let n = rng.random_range(2..=max_vertices.max(2));
    let mut b = DigraphBuilder::new();
    let ids = b.add_vertices(n);
    for i in 1..n {
        let p = rng.random_range(0..i);
        b.add_arc(ids[p], ids[i])?;
    }
    b.set_root(ids[0]);
    b.build()
}
