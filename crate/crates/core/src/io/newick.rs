//! Recursive-descent Newick / eNewick parsing with line:column errors,
//! and the matching deterministic serializers.

use std::collections::BTreeMap;

use crate::digraph::{DigraphBuilder, VertexId};
use crate::error::{Error, Result};
use crate::io::preorder_numbers;
use crate::phylo::{
    validate_gene_tree, validate_mul_tree, validate_network, Event, GeneTree, MULTree, Network,
};

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.bump();
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(got) if got == c => {
                self.bump();
                Ok(())
            }
            Some(got) => Err(self.err(format!(
                "expected '{}', found '{}'",
                c as char, got as char
            ))),
            None => Err(self.err(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn is_name_byte(c: u8) -> bool {
        c.is_ascii_alphanumeric() || matches!(c, b'_' | b'.' | b'-' | b'\'' | b'@')
    }

    fn name(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(Cursor::is_name_byte) {
            self.bump();
        }
        if self.pos == start {
            None
        } else {
            Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        }
    }

    /// `[id=N]` comment, if present.
    fn id_comment(&mut self) -> Result<Option<u32>> {
        self.skip_ws();
        if self.peek() != Some(b'[') {
            return Ok(None);
        }
        self.bump();
        let key = self.name();
        if key.as_deref() != Some("id") {
            return Err(self.err("expected 'id' inside a comment"));
        }
        self.expect(b'=')?;
        let num = self
            .name()
            .ok_or_else(|| self.err("expected a number after 'id='"))?;
        let id: u32 = num
            .parse()
            .map_err(|_| self.err(format!("invalid id '{num}'")))?;
        self.expect(b']')?;
        Ok(Some(id))
    }
}

#[derive(Debug)]
struct Ast {
    children: Vec<Ast>,
    /// Leaf name or inner label (event letter for gene trees).
    label: Option<String>,
    hybrid: Option<String>,
    id: Option<u32>,
    line: usize,
    col: usize,
}

fn parse_node(cur: &mut Cursor<'_>) -> Result<Ast> {
    cur.skip_ws();
    let (line, col) = (cur.line, cur.col);
    let mut children = Vec::new();
    if cur.peek() == Some(b'(') {
        cur.bump();
        loop {
            children.push(parse_node(cur)?);
            cur.skip_ws();
            match cur.peek() {
                Some(b',') => {
                    cur.bump();
                }
                Some(b')') => {
                    cur.bump();
                    break;
                }
                Some(c) => return Err(cur.err(format!("expected ',' or ')', found '{}'", c as char))),
                None => return Err(cur.err("unclosed '('")),
            }
        }
    }
    cur.skip_ws();
    let (label_line, label_col) = (cur.line, cur.col);
    let label = cur.name();
    let mut hybrid = None;
    cur.skip_ws();
    if cur.peek() == Some(b'#') {
        cur.bump();
        hybrid = Some(
            cur.name()
                .ok_or_else(|| cur.err("expected a hybrid tag after '#'"))?,
        );
    }
    let id = cur.id_comment()?;
    if children.is_empty() && label.is_none() && hybrid.is_none() {
        return Err(cur.err("expected a subtree or a name"));
    }
    let (line, col) = if label.is_some() {
        (label_line, label_col)
    } else {
        (line, col)
    };
    Ok(Ast {
        children,
        label,
        hybrid,
        id,
        line,
        col,
    })
}

fn parse_document(text: &str) -> Result<Ast> {
    let mut cur = Cursor::new(text);
    let ast = parse_node(&mut cur)?;
    cur.skip_ws();
    if cur.peek() == Some(b';') {
        cur.bump();
    }
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(cur.err("trailing input after ';'"));
    }
    Ok(ast)
}

fn check_id(node: &Ast, actual: VertexId) -> Result<()> {
    match node.id {
        Some(id) if id != actual.0 => Err(Error::Parse {
            line: node.line,
            col: node.col,
            msg: format!("inconsistent id: file says {id}, preorder gives {}", actual.0),
        }),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Gene trees
// ---------------------------------------------------------------------------

/// Parse the gene-tree dialect. Leaves are `gene@species` or bare
/// `gene` resolved through `sigma`; inner labels are mandatory `S`/`D`.
pub fn parse_gene_tree(text: &str, sigma: Option<&BTreeMap<String, String>>) -> Result<GeneTree> {
    let mut ast = parse_document(text)?;
    // A single-child unlabeled top group is the root-arc convention of
    // the network dialect; unwrap it, gene trees are reduced.
    if ast.children.len() == 1 && ast.label.is_none() {
        ast = ast.children.pop().unwrap();
    }
    let mut b = DigraphBuilder::new();
    let mut events = BTreeMap::new();
    let mut genes = BTreeMap::new();
    let root = build_gene(&ast, &mut b, &mut events, &mut genes, sigma)?;
    b.set_root(root);
    validate_gene_tree(b.build()?, events, genes)
}

fn build_gene(
    node: &Ast,
    b: &mut DigraphBuilder,
    events: &mut BTreeMap<VertexId, Event>,
    genes: &mut BTreeMap<VertexId, (String, String)>,
    sigma: Option<&BTreeMap<String, String>>,
) -> Result<VertexId> {
    if node.hybrid.is_some() {
        return Err(Error::Parse {
            line: node.line,
            col: node.col,
            msg: "hybrid tags are not allowed in gene trees".into(),
        });
    }
    let v = b.add_vertex();
    check_id(node, v)?;
    if node.children.is_empty() {
        let raw = node.label.as_ref().expect("leaves carry names");
        let (gene, species) = match raw.split_once('@') {
            Some((g, s)) if !g.is_empty() && !s.is_empty() => (g.to_string(), s.to_string()),
            Some(_) => {
                return Err(Error::Parse {
                    line: node.line,
                    col: node.col,
                    msg: format!("malformed leaf '{raw}'"),
                })
            }
            None => {
                let species = sigma.and_then(|m| m.get(raw)).ok_or_else(|| Error::Parse {
                    line: node.line,
                    col: node.col,
                    msg: format!("leaf '{raw}' has no species; use gene@species or --sigma"),
                })?;
                (raw.clone(), species.clone())
            }
        };
        genes.insert(v, (gene, species));
    } else {
        let event = match node.label.as_deref() {
            Some(l) if l.eq_ignore_ascii_case("s") => Event::Speciation,
            Some(l) if l.eq_ignore_ascii_case("d") => Event::Duplication,
            Some(l) => {
                return Err(Error::Parse {
                    line: node.line,
                    col: node.col,
                    msg: format!("inner label must be S or D, found '{l}'"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: node.line,
                    col: node.col,
                    msg: "inner vertices of gene trees need an S or D label".into(),
                })
            }
        };
        events.insert(v, event);
        for child in &node.children {
            let c = build_gene(child, b, events, genes, sigma)?;
            b.add_arc(v, c)?;
        }
    }
    Ok(v)
}

/// Serialize a gene tree; inner vertices carry `[id=N]` preorder ids.
pub fn serialize_gene_tree(t: &GeneTree) -> String {
    let nums = preorder_numbers(t.graph());
    let mut out = String::new();
    write_gene(t, t.root(), &nums, &mut out);
    out.push(';');
    out
}

fn write_gene(t: &GeneTree, v: VertexId, nums: &BTreeMap<VertexId, u32>, out: &mut String) {
    if let Some(gene) = t.gene_name(v) {
        out.push_str(gene);
        out.push('@');
        out.push_str(t.species_of(v).unwrap_or("?"));
        return;
    }
    out.push('(');
    for (i, a) in t.graph().out(v).iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_gene(t, a.head, nums, out);
    }
    out.push(')');
    out.push_str(&t.event(v).expect("inner vertices are labeled").to_string());
    out.push_str(&format!("[id={}]", nums[&v]));
}

// ---------------------------------------------------------------------------
// Networks (eNewick)
// ---------------------------------------------------------------------------

/// Parse an eNewick network. A top-level single child is the explicit
/// root arc; otherwise one is synthesized with a warning.
pub fn parse_network(text: &str) -> Result<(Network, Vec<String>)> {
    let ast = parse_document(text)?;
    let mut warnings = Vec::new();
    let mut b = DigraphBuilder::new();
    let mut tags: BTreeMap<String, VertexId> = BTreeMap::new();
    let mut defined: BTreeMap<String, bool> = BTreeMap::new();
    let mut labels: BTreeMap<VertexId, String> = BTreeMap::new();
    let root;
    if ast.children.len() == 1 && ast.label.is_none() && ast.hybrid.is_none() {
        root = build_net(&ast, &mut b, &mut tags, &mut defined, &mut labels)?;
    } else {
        warnings.push("top level has no single child; synthesizing the root arc".to_string());
        root = b.add_vertex();
        let child = build_net(&ast, &mut b, &mut tags, &mut defined, &mut labels)?;
        b.add_arc(root, child)?;
    }
    for (tag, was_defined) in &defined {
        if !was_defined {
            return Err(Error::Parse {
                line: 0,
                col: 0,
                msg: format!("unresolved hybrid tag #{tag}"),
            });
        }
    }
    b.set_root(root);
    let network = validate_network(b.build()?, labels)?;
    Ok((network, warnings))
}

fn build_net(
    node: &Ast,
    b: &mut DigraphBuilder,
    tags: &mut BTreeMap<String, VertexId>,
    defined: &mut BTreeMap<String, bool>,
    labels: &mut BTreeMap<VertexId, String>,
) -> Result<VertexId> {
    let v = match &node.hybrid {
        Some(tag) => {
            let v = match tags.get(tag) {
                Some(&v) => v,
                None => {
                    let v = b.add_vertex();
                    tags.insert(tag.clone(), v);
                    v
                }
            };
            let e = defined.entry(tag.clone()).or_insert(false);
            if !node.children.is_empty() {
                if *e {
                    return Err(Error::Parse {
                        line: node.line,
                        col: node.col,
                        msg: format!("hybrid tag #{tag} defined twice"),
                    });
                }
                *e = true;
            }
            v
        }
        None => b.add_vertex(),
    };
    check_id(node, v)?;
    if node.children.is_empty() {
        if node.hybrid.is_none() {
            let name = node.label.as_ref().ok_or_else(|| Error::Parse {
                line: node.line,
                col: node.col,
                msg: "leaf without a species name".into(),
            })?;
            labels.insert(v, name.clone());
        }
    } else {
        for child in &node.children {
            let c = build_net(child, b, tags, defined, labels)?;
            b.add_arc(v, c)?;
        }
    }
    Ok(v)
}

/// Serialize a network as eNewick with the root arc as a top-level
/// single child and `[id=N]` comments on inner vertices.
pub fn serialize_network(n: &Network) -> String {
    let nums = preorder_numbers(n.graph());
    // Hybrid tags in preorder discovery order.
    let mut hybrid_tag: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut order: Vec<(u32, VertexId)> = n
        .hybrid_vertices()
        .into_iter()
        .map(|v| (nums[&v], v))
        .collect();
    order.sort();
    for (i, (_, v)) in order.into_iter().enumerate() {
        hybrid_tag.insert(v, i + 1);
    }
    let mut out = String::new();
    let mut visited = BTreeMap::new();
    out.push('(');
    write_net(n, n.root_child(), &nums, &hybrid_tag, &mut visited, &mut out);
    out.push(')');
    out.push_str(&format!("[id={}]", nums[&n.root()]));
    out.push(';');
    out
}

fn write_net(
    n: &Network,
    v: VertexId,
    nums: &BTreeMap<VertexId, u32>,
    hybrid_tag: &BTreeMap<VertexId, usize>,
    visited: &mut BTreeMap<VertexId, bool>,
    out: &mut String,
) {
    if let Some(tag) = hybrid_tag.get(&v) {
        if visited.contains_key(&v) {
            out.push_str(&format!("#H{tag}"));
            return;
        }
        visited.insert(v, true);
        out.push('(');
        for (i, a) in n.graph().out(v).iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_net(n, a.head, nums, hybrid_tag, visited, out);
        }
        out.push(')');
        out.push_str(&format!("#H{tag}[id={}]", nums[&v]));
        return;
    }
    if let Some(species) = n.species_of(v) {
        out.push_str(species);
        return;
    }
    out.push('(');
    for (i, a) in n.graph().out(v).iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_net(n, a.head, nums, hybrid_tag, visited, out);
    }
    out.push(')');
    out.push_str(&format!("[id={}]", nums[&v]));
}

// ---------------------------------------------------------------------------
// MUL-trees
// ---------------------------------------------------------------------------

/// Parse a (pseudo-)MUL-tree: species-labeled leaves, unlabeled inner
/// vertices, single-child groups for degree-(1,1) vertices.
pub fn parse_mul_tree(text: &str) -> Result<(MULTree, Vec<String>)> {
    let ast = parse_document(text)?;
    let mut warnings = Vec::new();
    let mut b = DigraphBuilder::new();
    let mut labels = BTreeMap::new();
    let root;
    if ast.children.len() == 1 && ast.label.is_none() {
        root = build_mul(&ast, &mut b, &mut labels)?;
    } else {
        warnings.push("top level has no single child; synthesizing the root arc".to_string());
        root = b.add_vertex();
        let child = build_mul(&ast, &mut b, &mut labels)?;
        b.add_arc(root, child)?;
    }
    b.set_root(root);
    let tree = validate_mul_tree(b.build()?, labels, true)?;
    Ok((tree, warnings))
}

fn build_mul(
    node: &Ast,
    b: &mut DigraphBuilder,
    labels: &mut BTreeMap<VertexId, String>,
) -> Result<VertexId> {
    if node.hybrid.is_some() {
        return Err(Error::Parse {
            line: node.line,
            col: node.col,
            msg: "hybrid tags are not allowed in MUL-trees".into(),
        });
    }
    let v = b.add_vertex();
    check_id(node, v)?;
    if node.children.is_empty() {
        let name = node.label.as_ref().ok_or_else(|| Error::Parse {
            line: node.line,
            col: node.col,
            msg: "leaf without a species name".into(),
        })?;
        labels.insert(v, name.clone());
    } else {
        if node.label.is_some() {
            return Err(Error::Parse {
                line: node.line,
                col: node.col,
                msg: "inner vertices of MUL-trees are unlabeled".into(),
            });
        }
        for child in &node.children {
            let c = build_mul(child, b, labels)?;
            b.add_arc(v, c)?;
        }
    }
    Ok(v)
}

/// Serialize a (pseudo-)MUL-tree; every vertex carries its preorder id.
pub fn serialize_mul_tree(m: &MULTree) -> String {
    let nums = preorder_numbers(m.graph());
    let mut out = String::new();
    write_mul(m, m.root(), &nums, &mut out);
    out.push(';');
    out
}

fn write_mul(m: &MULTree, v: VertexId, nums: &BTreeMap<VertexId, u32>, out: &mut String) {
    if let Some(species) = m.species_of(v) {
        out.push_str(species);
        out.push_str(&format!("[id={}]", nums[&v]));
        return;
    }
    out.push('(');
    for (i, a) in m.graph().out(v).iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_mul(m, a.head, nums, out);
    }
    out.push(')');
    out.push_str(&format!("[id={}]", nums[&v]));
}

// ---------------------------------------------------------------------------
// Sigma sidecar and triple sets
// ---------------------------------------------------------------------------

/// Parse a `gene TAB species` sidecar.
pub fn parse_sigma(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(g), Some(s), None) => {
                out.insert(g.to_string(), s.to_string());
            }
            _ => {
                return Err(Error::Parse {
                    line: no + 1,
                    col: 1,
                    msg: "expected 'gene<TAB>species'".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Parse a triple set, one `a b | c` per line (the bar is optional).
pub fn parse_triples(text: &str) -> Result<crate::triples::TripleSet> {
    use crate::phylo::Triple;
    let mut triples = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == '|')
            .filter(|s| !s.is_empty())
            .collect();
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line: no + 1,
                col: 1,
                msg: format!("expected 'a b | c', found '{line}'"),
            });
        }
        triples.push(
            Triple::new(tokens[0], tokens[1], tokens[2]).map_err(|e| Error::Parse {
                line: no + 1,
                col: 1,
                msg: e.to_string(),
            })?,
        );
    }
    Ok(crate::triples::TripleSet::from_triples(triples))
}

pub fn serialize_triples(set: &crate::triples::TripleSet) -> String {
    let mut out = String::new();
    for t in &set.triples {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_cherry_with_wrapper() {
        let t = parse_gene_tree("((a@A,b@B)S);", None).unwrap();
        assert_eq!(t.genes().count(), 2);
        assert_eq!(t.event(t.root()), Some(Event::Speciation));
    }

    #[test]
    fn parses_duplication_under_speciation() {
        let t = parse_gene_tree("((a@A,a2@A)D,b@B)S;", None).unwrap();
        assert_eq!(t.genes().count(), 3);
        let kids = t.graph().children(t.root());
        assert_eq!(t.event(kids[0]), Some(Event::Duplication));
    }

    #[test]
    fn sigma_sidecar_resolves_bare_leaves() {
        let sigma = parse_sigma("a\tA\nb\tB\n").unwrap();
        let t = parse_gene_tree("((a,b)S);", Some(&sigma)).unwrap();
        assert_eq!(t.species().len(), 2);
        assert!(parse_gene_tree("((a,b)S);", None).is_err());
    }

    #[test]
    fn gene_tree_round_trips() {
        let t = parse_gene_tree("(((a@A,a2@A)D,b@B)S,(c@C,d@D)S)S;", None).unwrap();
        let text = serialize_gene_tree(&t);
        let t2 = parse_gene_tree(&text, None).unwrap();
        assert_eq!(t, t2);
        assert_eq!(text, serialize_gene_tree(&t2));
    }

    #[test]
    fn parses_two_leaf_network() {
        let (n, warnings) = parse_network("((A,B));").unwrap();
        assert!(warnings.is_empty());
        assert_eq!(n.num_species(), 2);
    }

    #[test]
    fn synthesizes_missing_root_arc_with_warning() {
        let (n, warnings) = parse_network("(A,B);").unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(n.num_species(), 2);
    }

    #[test]
    fn parses_hybrid_network() {
        let (n, _) = parse_network("(((A,(B)#H1),(#H1,C)));").unwrap();
        assert_eq!(n.hybrid_vertices().len(), 1);
        assert_eq!(n.num_species(), 3);
    }

    #[test]
    fn repeated_hybrid_reference_is_a_multi_arc() {
        let (n, _) = parse_network("(((A,(B)#H1,#H1),C));").unwrap();
        assert!(!n.is_multi_arc_free());
    }

    #[test]
    fn network_round_trips() {
        let (n, _) = parse_network("(((A,(B)#H1),(#H1,C)));").unwrap();
        let text = serialize_network(&n);
        let (n2, warnings) = parse_network(&text).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(n, n2);
        assert_eq!(text, serialize_network(&n2));
    }

    #[test]
    fn unresolved_hybrid_tag_is_an_error() {
        let err = parse_network("((A,#H1));").unwrap_err();
        assert!(err.to_string().contains("unresolved"), "{err}");
    }

    #[test]
    fn mul_tree_round_trips_with_d1_vertices() {
        let (m, _) = parse_mul_tree("((A,(A),B));").unwrap();
        assert!(m.is_pseudo());
        assert_eq!(m.d1().len(), 1);
        let text = serialize_mul_tree(&m);
        let (m2, _) = parse_mul_tree(&text).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_gene_tree("((a@A,\n b@B)X);", None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn triples_parse_and_serialize() {
        let set = parse_triples("A B | C\nB C A\n").unwrap();
        assert_eq!(set.len(), 2);
        let text = serialize_triples(&set);
        let set2 = parse_triples(&text).unwrap();
        assert_eq!(set, set2);
    }
}
