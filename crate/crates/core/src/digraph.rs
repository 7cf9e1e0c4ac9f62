//! Rooted directed multigraph substrate.
//!
//! All higher layers (trees, networks, MUL-trees) are thin views over
//! [`Digraph`]. Graphs are immutable once built; every query is pure.
//! The ancestor order `a ⪯ b` ("a is a descendant of b, or equal") is
//! extended to arcs: for an arc `e = (u, v)` we have `x ⪯ e` iff
//! `x ⪯ v`, `e ⪯ x` iff `u ⪯ x`, and for arcs `e, f` we have `e ⪯ f`
//! iff `e = f` or `tail(e) ⪯ head(f)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Opaque vertex identifier, dense within one graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Arc identifier. Parallel arcs between the same ordered pair are
/// disambiguated by `index` (0-based, in insertion order).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ArcId {
    pub tail: VertexId,
    pub head: VertexId,
    pub index: u32,
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}#{}", self.tail, self.head, self.index)
    }
}

/// Either a vertex or an arc; the common domain of the ancestor order
/// and of reconciliation images.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Item {
    Vertex(VertexId),
    Arc(ArcId),
}

impl Item {
    /// The vertex a query path must reach: the item itself, or the
    /// head of an arc (the convention used for separation sets).
    pub fn head_vertex(self) -> VertexId {
        match self {
            Item::Vertex(v) => v,
            Item::Arc(e) => e.head,
        }
    }

    /// The vertex used for lca queries: the item itself, or the tail
    /// of an arc.
    pub fn tail_vertex(self) -> VertexId {
        match self {
            Item::Vertex(v) => v,
            Item::Arc(e) => e.tail,
        }
    }

    pub fn as_vertex(self) -> Option<VertexId> {
        match self {
            Item::Vertex(v) => Some(v),
            Item::Arc(_) => None,
        }
    }

    pub fn as_arc(self) -> Option<ArcId> {
        match self {
            Item::Arc(e) => Some(e),
            Item::Vertex(_) => None,
        }
    }
}

impl From<VertexId> for Item {
    fn from(v: VertexId) -> Self {
        Item::Vertex(v)
    }
}

impl From<ArcId> for Item {
    fn from(e: ArcId) -> Self {
        Item::Arc(e)
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Vertex(v) => write!(f, "{v}"),
            Item::Arc(e) => write!(f, "{e}"),
        }
    }
}

/// Dense bitset rows used for reachability.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
struct BitMatrix {
    words: usize,
    rows: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMatrix {
            words,
            rows: vec![0; words * n],
        }
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize) {
        self.rows[row * self.words + col / 64] |= 1u64 << (col % 64);
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row * self.words + col / 64] >> (col % 64) & 1 == 1
    }

    fn or_into(&mut self, dst: usize, src: usize) {
        let (d, s) = (dst * self.words, src * self.words);
        for w in 0..self.words {
            let v = self.rows[s + w];
            self.rows[d + w] |= v;
        }
    }
}

/// A directed path: vertices plus the arcs connecting them (one fewer).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Path {
    pub vertices: Vec<VertexId>,
    pub arcs: Vec<ArcId>,
}

impl Path {
    pub fn single(v: VertexId) -> Self {
        Path {
            vertices: vec![v],
            arcs: vec![],
        }
    }

    pub fn last(&self) -> VertexId {
        *self.vertices.last().expect("paths are non-empty")
    }

    pub fn push(&mut self, arc: ArcId) {
        debug_assert_eq!(arc.tail, self.last());
        self.vertices.push(arc.head);
        self.arcs.push(arc);
    }
}

/// Immutable rooted DAG with multi-arcs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Digraph {
    n: u32,
    out: Vec<Vec<ArcId>>,
    inn: Vec<Vec<ArcId>>,
    arcs: Vec<ArcId>,
    root: Option<VertexId>,
    reach: BitMatrix,
    topo: Vec<VertexId>,
    height: Vec<u32>,
}

/// Single-owner construction handle; validation happens in [`DigraphBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct DigraphBuilder {
    out: Vec<Vec<ArcId>>,
    inn: Vec<Vec<ArcId>>,
    arcs: Vec<ArcId>,
    root: Option<VertexId>,
}

impl DigraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let id = VertexId(self.out.len() as u32);
        self.out.push(Vec::new());
        self.inn.push(Vec::new());
        id
    }

    pub fn add_vertices(&mut self, k: usize) -> Vec<VertexId> {
        (0..k).map(|_| self.add_vertex()).collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    pub fn add_arc(&mut self, tail: VertexId, head: VertexId) -> Result<ArcId> {
        let n = self.out.len() as u32;
        if tail.0 >= n {
            return Err(Error::UnknownVertex(tail.0));
        }
        if head.0 >= n {
            return Err(Error::UnknownVertex(head.0));
        }
        let index = self.out[tail.idx()]
            .iter()
            .filter(|a| a.head == head)
            .count() as u32;
        let arc = ArcId { tail, head, index };
        self.out[tail.idx()].push(arc);
        self.inn[head.idx()].push(arc);
        self.arcs.push(arc);
        Ok(arc)
    }

    pub fn set_root(&mut self, root: VertexId) {
        self.root = Some(root);
    }

    /// Validates acyclicity (and root reachability when a root is set)
    /// and freezes the graph, precomputing reachability and heights.
    pub fn build(self) -> Result<Digraph> {
        let n = self.out.len();
        // Kahn toposort.
        let mut indeg: Vec<usize> = self.inn.iter().map(|v| v.len()).collect();
        let mut queue: Vec<VertexId> = (0..n as u32)
            .map(VertexId)
            .filter(|v| indeg[v.idx()] == 0)
            .collect();
        let mut topo = Vec::with_capacity(n);
        let mut qi = 0;
        while qi < queue.len() {
            let v = queue[qi];
            qi += 1;
            topo.push(v);
            for a in &self.out[v.idx()] {
                indeg[a.head.idx()] -= 1;
                if indeg[a.head.idx()] == 0 {
                    queue.push(a.head);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::Cyclic);
        }
        if let Some(root) = self.root {
            if root.0 >= n as u32 {
                return Err(Error::UnknownVertex(root.0));
            }
            if !self.inn[root.idx()].is_empty() {
                return Err(Error::structure(format!("root {root} has incoming arcs")));
            }
        }
        // Reachability closure in reverse topological order.
        let mut reach = BitMatrix::new(n);
        for &v in topo.iter().rev() {
            reach.set(v.idx(), v.idx());
            // Collect first to appease the borrow checker cheaply.
            let succ: Vec<usize> = self.out[v.idx()].iter().map(|a| a.head.idx()).collect();
            for h in succ {
                reach.or_into(v.idx(), h);
            }
        }
        if let Some(root) = self.root {
            for v in 0..n {
                if !reach.get(root.idx(), v) {
                    return Err(Error::structure(format!(
                        "vertex v{v} is not reachable from the root"
                    )));
                }
            }
        }
        let mut height = vec![0u32; n];
        for &v in topo.iter().rev() {
            let h = self.out[v.idx()]
                .iter()
                .map(|a| height[a.head.idx()] + 1)
                .max()
                .unwrap_or(0);
            height[v.idx()] = h;
        }
        Ok(Digraph {
            n: n as u32,
            out: self.out,
            inn: self.inn,
            arcs: self.arcs,
            root: self.root,
            reach,
            topo,
            height,
        })
    }
}

/// Correspondence produced by [`Digraph::subdivide`].
#[derive(Clone, Debug, Default)]
pub struct SubdivisionMap {
    /// Old arc -> replacement path (new arc ids, in path order).
    pub arc_paths: BTreeMap<ArcId, Vec<ArcId>>,
    /// Old arc -> fresh interior vertices, in path order (empty when untouched).
    pub interior: BTreeMap<ArcId, Vec<VertexId>>,
}

impl SubdivisionMap {
    /// The last arc on the replacement path of `e` ("e*" in lifting).
    pub fn last_arc(&self, e: ArcId) -> ArcId {
        *self.arc_paths[&e].last().expect("paths are non-empty")
    }
}

impl Digraph {
    pub fn num_vertices(&self) -> usize {
        self.n as usize
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n).map(VertexId)
    }

    /// Arcs in insertion order (deterministic).
    pub fn arcs(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.arcs.iter().copied()
    }

    pub fn root(&self) -> Option<VertexId> {
        self.root
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        v.0 < self.n
    }

    pub fn contains_arc(&self, e: ArcId) -> bool {
        self.contains_vertex(e.tail)
            && self
                .out(e.tail)
                .iter()
                .any(|a| a.head == e.head && a.index == e.index)
    }

    pub fn contains_item(&self, it: Item) -> bool {
        match it {
            Item::Vertex(v) => self.contains_vertex(v),
            Item::Arc(e) => self.contains_arc(e),
        }
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if self.contains_vertex(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.0))
        }
    }

    fn check_item(&self, it: Item) -> Result<()> {
        match it {
            Item::Vertex(v) => self.check_vertex(v),
            Item::Arc(e) => {
                if self.contains_arc(e) {
                    Ok(())
                } else {
                    Err(Error::UnknownArc(e.to_string()))
                }
            }
        }
    }

    pub fn out(&self, v: VertexId) -> &[ArcId] {
        &self.out[v.idx()]
    }

    pub fn inn(&self, v: VertexId) -> &[ArcId] {
        &self.inn[v.idx()]
    }

    pub fn outdeg(&self, v: VertexId) -> usize {
        self.out[v.idx()].len()
    }

    pub fn indeg(&self, v: VertexId) -> usize {
        self.inn[v.idx()].len()
    }

    /// Distinct children in first-seen (insertion) order.
    pub fn children(&self, v: VertexId) -> Vec<VertexId> {
        let mut seen = Vec::new();
        for a in &self.out[v.idx()] {
            if !seen.contains(&a.head) {
                seen.push(a.head);
            }
        }
        seen
    }

    /// Distinct parents in first-seen order.
    pub fn parents(&self, v: VertexId) -> Vec<VertexId> {
        let mut seen = Vec::new();
        for a in &self.inn[v.idx()] {
            if !seen.contains(&a.tail) {
                seen.push(a.tail);
            }
        }
        seen
    }

    /// Number of parallel arcs from `tail` to `head`.
    pub fn multiplicity(&self, tail: VertexId, head: VertexId) -> usize {
        self.out[tail.idx()].iter().filter(|a| a.head == head).count()
    }

    pub fn has_multi_arcs(&self) -> bool {
        self.vertices().any(|v| {
            let outs = self.out(v);
            outs.iter().any(|a| a.index > 0)
        })
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.outdeg(v) == 0
    }

    pub fn leaves(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.is_leaf(v)).collect()
    }

    /// The unique incoming arc of `v`, when indegree is exactly one.
    pub fn unique_in_arc(&self, v: VertexId) -> Option<ArcId> {
        match self.inn(v) {
            [a] => Some(*a),
            _ => None,
        }
    }

    /// The unique outgoing arc of `v`, when outdegree is exactly one.
    pub fn unique_out_arc(&self, v: VertexId) -> Option<ArcId> {
        match self.out(v) {
            [a] => Some(*a),
            _ => None,
        }
    }

    /// Rooted tree test: a root exists and every other vertex has indegree 1.
    pub fn is_tree(&self) -> bool {
        match self.root {
            None => false,
            Some(r) => self
                .vertices()
                .all(|v| if v == r { self.indeg(v) == 0 } else { self.indeg(v) == 1 }),
        }
    }

    pub fn topo_order(&self) -> &[VertexId] {
        &self.topo
    }

    /// Longest arc-count distance from `v` down to a sink.
    pub fn height(&self, v: VertexId) -> u32 {
        self.height[v.idx()]
    }

    #[inline]
    fn reaches(&self, from: VertexId, to: VertexId) -> bool {
        self.reach.get(from.idx(), to.idx())
    }

    /// `a ⪯ b` under the order of the module docs (`is_ancestor(a, b)`
    /// in the operation vocabulary: `b` lies weakly above `a`).
    pub fn le(&self, a: Item, b: Item) -> Result<bool> {
        self.check_item(a)?;
        self.check_item(b)?;
        Ok(self.le_unchecked(a, b))
    }

    pub(crate) fn le_unchecked(&self, a: Item, b: Item) -> bool {
        match (a, b) {
            (Item::Vertex(x), Item::Vertex(y)) => self.reaches(y, x),
            (Item::Vertex(x), Item::Arc(e)) => self.reaches(e.head, x),
            (Item::Arc(e), Item::Vertex(x)) => self.reaches(x, e.tail),
            (Item::Arc(e), Item::Arc(f)) => e == f || self.reaches(f.head, e.tail),
        }
    }

    /// Strict order `a ≺ b`.
    pub fn lt(&self, a: Item, b: Item) -> Result<bool> {
        Ok(self.le(a, b)? && a != b)
    }

    pub fn comparable(&self, a: Item, b: Item) -> Result<bool> {
        Ok(self.le(a, b)? || self.le_unchecked(b, a))
    }

    /// Leaves weakly below `x` (`L(x)`).
    pub fn leaves_below(&self, x: VertexId) -> Result<Vec<VertexId>> {
        self.check_vertex(x)?;
        Ok(self
            .vertices()
            .filter(|&l| self.is_leaf(l) && self.reaches(x, l))
            .collect())
    }

    /// All vertices weakly below `x`, sorted by id.
    pub fn descendants(&self, x: VertexId) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.reaches(x, v)).collect()
    }

    /// All vertices weakly above `x`, sorted by id.
    pub fn ancestors(&self, x: VertexId) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.reaches(v, x)).collect()
    }

    fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.inn(v).first().map(|a| a.tail)
    }

    fn depth_in_tree(&self, mut v: VertexId) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent(v) {
            v = p;
            d += 1;
        }
        d
    }

    /// Least common ancestor of a non-empty vertex set in a tree.
    pub fn lca(&self, set: &[VertexId]) -> Result<VertexId> {
        if !self.is_tree() {
            return Err(Error::structure("lca requires a tree"));
        }
        let (&first, rest) = set
            .split_first()
            .ok_or_else(|| Error::argument("lca of an empty set"))?;
        self.check_vertex(first)?;
        let mut acc = first;
        for &v in rest {
            self.check_vertex(v)?;
            acc = self.lca2(acc, v);
        }
        Ok(acc)
    }

    fn lca2(&self, mut a: VertexId, mut b: VertexId) -> VertexId {
        let (mut da, mut db) = (self.depth_in_tree(a), self.depth_in_tree(b));
        while da > db {
            a = self.parent(a).unwrap();
            da -= 1;
        }
        while db > da {
            b = self.parent(b).unwrap();
            db -= 1;
        }
        while a != b {
            a = self.parent(a).unwrap();
            b = self.parent(b).unwrap();
        }
        a
    }

    /// lca extended to arcs (arcs are replaced by their tails).
    pub fn lca_items(&self, set: &[Item]) -> Result<VertexId> {
        let vs: Vec<VertexId> = set.iter().map(|it| it.tail_vertex()).collect();
        self.lca(&vs)
    }

    /// True iff two distinct arcs out of `z` start paths to `x` and to
    /// `y` — the "separated by z" test on head vertices. Parallel arcs
    /// count as distinct path starts (a vertex can separate a leaf
    /// from itself through a multi-arc).
    pub fn separates(&self, z: VertexId, x: VertexId, y: VertexId) -> bool {
        let outs = self.out(z);
        if outs.len() < 2 {
            return false;
        }
        let to_x: Vec<bool> = outs.iter().map(|a| self.reaches(a.head, x)).collect();
        let to_y: Vec<bool> = outs.iter().map(|a| self.reaches(a.head, y)).collect();
        for (i, &tx) in to_x.iter().enumerate() {
            for (j, &ty) in to_y.iter().enumerate() {
                if i != j && tx && ty {
                    return true;
                }
            }
        }
        false
    }

    /// Separation set `Q(x, y)`: vertices `z` from which directed paths
    /// through two distinct children reach (the head vertices of) `x`
    /// and `y`. Symmetric in its arguments; sorted by vertex id.
    pub fn separation_set(&self, x: Item, y: Item) -> Result<Vec<VertexId>> {
        self.check_item(x)?;
        self.check_item(y)?;
        let tx = x.head_vertex();
        let ty = y.head_vertex();
        Ok(self
            .vertices()
            .filter(|&z| self.separates(z, tx, ty))
            .collect())
    }

    /// `Q²(x₁,…,x_k)`: union of `Q(x_i, x_j)` over all `i ≤ j`.
    pub fn separation_set_multi(&self, xs: &[Item]) -> Result<Vec<VertexId>> {
        if xs.is_empty() {
            return Err(Error::argument("separation_set_multi of an empty sequence"));
        }
        let mut acc: Vec<VertexId> = Vec::new();
        for i in 0..xs.len() {
            for j in i..xs.len() {
                for z in self.separation_set(xs[i], xs[j])? {
                    if !acc.contains(&z) {
                        acc.push(z);
                    }
                }
            }
        }
        acc.sort();
        Ok(acc)
    }

    /// Replace each arc `a` in the plan by a path with `plan[a] - 1`
    /// fresh interior vertices. Original vertex ids are preserved.
    pub fn subdivide(&self, plan: &BTreeMap<ArcId, u32>) -> Result<(Digraph, SubdivisionMap)> {
        for (arc, &k) in plan {
            if !self.contains_arc(*arc) {
                return Err(Error::UnknownArc(arc.to_string()));
            }
            if k == 0 {
                return Err(Error::argument(format!(
                    "subdivision count for {arc} must be positive"
                )));
            }
        }
        let mut b = DigraphBuilder::new();
        b.add_vertices(self.num_vertices());
        if let Some(r) = self.root {
            b.set_root(r);
        }
        let mut map = SubdivisionMap::default();
        for arc in self.arcs() {
            let k = plan.get(&arc).copied().unwrap_or(1);
            if k == 1 {
                let new = b.add_arc(arc.tail, arc.head)?;
                map.arc_paths.insert(arc, vec![new]);
                map.interior.insert(arc, vec![]);
            } else {
                let interior = b.add_vertices((k - 1) as usize);
                let mut path = Vec::with_capacity(k as usize);
                let mut prev = arc.tail;
                for &w in &interior {
                    path.push(b.add_arc(prev, w)?);
                    prev = w;
                }
                path.push(b.add_arc(prev, arc.head)?);
                map.arc_paths.insert(arc, path);
                map.interior.insert(arc, interior);
            }
        }
        Ok((b.build()?, map))
    }

    /// Enumerate every directed path from `from` to `to`, for test
    /// oracles and the display search. Deterministic order (arcs in
    /// insertion order at each step).
    pub fn all_paths(&self, from: VertexId, to: VertexId) -> Vec<Path> {
        let mut out = Vec::new();
        let mut cur = Path::single(from);
        self.paths_rec(&mut cur, to, &mut out);
        out
    }

    fn paths_rec(&self, cur: &mut Path, to: VertexId, out: &mut Vec<Path>) {
        let last = cur.last();
        if last == to {
            out.push(cur.clone());
            return;
        }
        for &a in self.out(last) {
            if self.reaches(a.head, to) {
                cur.push(a);
                self.paths_rec(cur, to, out);
                cur.vertices.pop();
                cur.arcs.pop();
            }
        }
    }

    /// Lexicographically smallest arc sequence among directed paths
    /// `from ⇝ to`, optionally forced to start with `first_arc`.
    pub fn lex_min_path(
        &self,
        from: VertexId,
        to: VertexId,
        first_arc: Option<ArcId>,
    ) -> Option<Path> {
        if !self.reaches(from, to) {
            return None;
        }
        let mut path = Path::single(from);
        if let Some(a) = first_arc {
            if a.tail != from || !self.reaches(a.head, to) {
                return None;
            }
            path.push(a);
        }
        loop {
            let last = path.last();
            if last == to {
                return Some(path);
            }
            let next = self
                .out(last)
                .iter()
                .filter(|a| self.reaches(a.head, to))
                .min()
                .copied()?;
            path.push(next);
        }
    }
}
