//! Reconciliation-map and folding-map files: line-oriented TSV records
//! naming vertices through the documents' stable naming.

use crate::axioms::{FoldingMap, ReconMap, TargetKind};
use crate::digraph::{ArcId, Item};
use crate::error::{Error, Result};
use crate::io::{gene_tree_naming, mul_tree_naming, network_naming, Naming};
use crate::phylo::{GeneTree, MULTree, Network};

/// The document a map points into.
#[derive(Clone, Copy)]
pub enum MapTarget<'a> {
    Network(&'a Network),
    Mul(&'a MULTree),
}

impl<'a> MapTarget<'a> {
    fn naming(&self) -> Naming {
        match self {
            MapTarget::Network(n) => network_naming(n),
            MapTarget::Mul(m) => mul_tree_naming(m),
        }
    }

    fn kind(&self) -> TargetKind {
        match self {
            MapTarget::Network(_) => TargetKind::Network,
            MapTarget::Mul(_) => TargetKind::MulTree,
        }
    }

    fn contains(&self, item: Item) -> bool {
        match self {
            MapTarget::Network(n) => n.graph().contains_item(item),
            MapTarget::Mul(m) => m.graph().contains_item(item),
        }
    }
}

fn arc_name(e: ArcId, naming: &Naming) -> String {
    format!("{}>{}#{}", naming.of[&e.tail], naming.of[&e.head], e.index)
}

fn parse_arc_name(token: &str, naming: &Naming, line: usize) -> Result<ArcId> {
    let err = |msg: String| Error::Parse { line, col: 1, msg };
    let (pair, index) = token
        .rsplit_once('#')
        .ok_or_else(|| err(format!("arc '{token}' lacks '#index'")))?;
    let (tail, head) = pair
        .split_once('>')
        .ok_or_else(|| err(format!("arc '{token}' lacks 'tail>head'")))?;
    let index: u32 = index
        .parse()
        .map_err(|_| err(format!("bad arc index in '{token}'")))?;
    let tail = *naming
        .back
        .get(tail)
        .ok_or_else(|| err(format!("unknown vertex '{tail}'")))?;
    let head = *naming
        .back
        .get(head)
        .ok_or_else(|| err(format!("unknown vertex '{head}'")))?;
    Ok(ArcId { tail, head, index })
}

/// Serialize a reconciliation map as
/// `<gene-vertex> TAB vertex|arc TAB <target-id>` records, one line
/// per gene-tree vertex in preorder.
pub fn serialize_map(mu: &ReconMap, t: &GeneTree, target: MapTarget<'_>) -> String {
    let gn = gene_tree_naming(t);
    let tn = target.naming();
    let nums = crate::io::preorder_numbers(t.graph());
    let mut rows: Vec<(u32, String)> = Vec::new();
    for (v, img) in mu.iter() {
        let (kind, name) = match img {
            Item::Vertex(w) => ("vertex", tn.of[&w].clone()),
            Item::Arc(e) => ("arc", arc_name(e, &tn)),
        };
        rows.push((nums[&v], format!("{}\t{}\t{}\n", gn.of[&v], kind, name)));
    }
    rows.sort();
    rows.into_iter().map(|(_, line)| line).collect()
}

/// Parse a reconciliation map against its two documents.
pub fn parse_map(text: &str, t: &GeneTree, target: MapTarget<'_>) -> Result<ReconMap> {
    let gn = gene_tree_naming(t);
    let tn = target.naming();
    let mut mu = ReconMap::new(target.kind());
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        let [gene, kind, name] = parts.as_slice() else {
            return Err(Error::Parse {
                line: no + 1,
                col: 1,
                msg: "expected '<gene-vertex> TAB vertex|arc TAB <target>'".into(),
            });
        };
        let v = *gn.back.get(*gene).ok_or_else(|| Error::Parse {
            line: no + 1,
            col: 1,
            msg: format!("unknown gene-tree vertex '{gene}'"),
        })?;
        let img: Item = match *kind {
            "vertex" => (*tn.back.get(*name).ok_or_else(|| Error::Parse {
                line: no + 1,
                col: 1,
                msg: format!("unknown target vertex '{name}'"),
            })?)
            .into(),
            "arc" => parse_arc_name(name, &tn, no + 1)?.into(),
            other => {
                return Err(Error::Parse {
                    line: no + 1,
                    col: 1,
                    msg: format!("expected 'vertex' or 'arc', found '{other}'"),
                })
            }
        };
        if !target.contains(img) {
            return Err(Error::Parse {
                line: no + 1,
                col: 1,
                msg: format!("dangling reference '{name}'"),
            });
        }
        mu.insert(v, img);
    }
    Ok(mu)
}

/// Serialize a folding map as `V`/`E` records between a MUL-tree and a
/// network.
pub fn serialize_folding(f: &FoldingMap, m: &MULTree, n: &Network) -> String {
    let mn = mul_tree_naming(m);
    let nn = network_naming(n);
    let mut out = String::new();
    for (&v, &w) in &f.f_v {
        out.push_str(&format!("V\t{}\t{}\n", mn.of[&v], nn.of[&w]));
    }
    for (&a, &b) in &f.f_e {
        out.push_str(&format!("E\t{}\t{}\n", arc_name(a, &mn), arc_name(b, &nn)));
    }
    out
}

/// Parse a folding map against its two documents.
pub fn parse_folding(text: &str, m: &MULTree, n: &Network) -> Result<FoldingMap> {
    let mn = mul_tree_naming(m);
    let nn = network_naming(n);
    let mut f = FoldingMap::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        let [kind, src, dst] = parts.as_slice() else {
            return Err(Error::Parse {
                line: no + 1,
                col: 1,
                msg: "expected 'V|E TAB <source> TAB <target>'".into(),
            });
        };
        match *kind {
            "V" => {
                let v = *mn.back.get(*src).ok_or_else(|| Error::Parse {
                    line: no + 1,
                    col: 1,
                    msg: format!("unknown MUL vertex '{src}'"),
                })?;
                let w = *nn.back.get(*dst).ok_or_else(|| Error::Parse {
                    line: no + 1,
                    col: 1,
                    msg: format!("unknown network vertex '{dst}'"),
                })?;
                f.f_v.insert(v, w);
            }
            "E" => {
                let a = parse_arc_name(src, &mn, no + 1)?;
                let b = parse_arc_name(dst, &nn, no + 1)?;
                f.f_e.insert(a, b);
            }
            other => {
                return Err(Error::Parse {
                    line: no + 1,
                    col: 1,
                    msg: format!("expected 'V' or 'E', found '{other}'"),
                })
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::check_treenet;
    use crate::io::newick::{parse_gene_tree, parse_network};

    #[test]
    fn map_round_trips_and_verifies() {
        let t = parse_gene_tree("((a@A,b@B)S);", None).unwrap();
        let (n, _) = parse_network("((A,B));").unwrap();
        let mut mu = ReconMap::new(TargetKind::Network);
        mu.insert(t.gene_vertex("a").unwrap(), n.leaf_of("A").unwrap());
        mu.insert(t.gene_vertex("b").unwrap(), n.leaf_of("B").unwrap());
        mu.insert(t.root(), n.root_child());
        let text = serialize_map(&mu, &t, MapTarget::Network(&n));
        assert_eq!(text.lines().count(), 3);
        let back = parse_map(&text, &t, MapTarget::Network(&n)).unwrap();
        assert_eq!(mu, back);
        assert!(check_treenet(&t, &n, &back).unwrap().ok());
    }

    #[test]
    fn dangling_references_are_rejected() {
        let t = parse_gene_tree("((a@A,b@B)S);", None).unwrap();
        let (n, _) = parse_network("((A,B));").unwrap();
        let err = parse_map("a\tvertex\tZ\n", &t, MapTarget::Network(&n)).unwrap_err();
        assert!(err.to_string().contains("unknown target vertex"), "{err}");
    }
}
