//! Plain-text dump of an assembly instance, for replaying solver runs.
//!
//! ```text
//! qga-instance 1
//! vertex-set e:12 e:13 c:4
//! vertex-set free
//! edge-set 7 8
//! w <set> <member> <set> <member> <edge-set> <weight> <predicate> <F|B>
//! ```
//!
//! Weights are written with round-trip precision, so a parsed dump rebuilds
//! the same graph bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{CandidateSets, CondensedBipartiteGraph, EdgeSet, Endpoint, Vertex, VertexSet};
use crate::embedding::{CondensedCost, Direction};
use crate::error::{Error, Result};
use crate::store::ItemId;

const MAGIC: &str = "qga-instance 1";

pub fn format_instance(graph: &CondensedBipartiteGraph) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    for set in &graph.sets.vertex_sets {
        out.push_str("vertex-set");
        for v in &set.members {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    for set in &graph.sets.edge_sets {
        out.push_str("edge-set");
        for p in &set.predicates {
            write!(out, " {}", p.0).unwrap();
        }
        out.push('\n');
    }
    let mut edges: Vec<_> = graph.edges.iter().collect();
    edges.sort_by_key(|e| (e.left, e.right));
    for e in edges {
        let node = graph.left_nodes[e.left];
        let dir = match e.direction {
            Direction::Forward => 'F',
            Direction::Backward => 'B',
        };
        writeln!(
            out,
            "w {} {} {} {} {} {} {} {dir}",
            node.first.0,
            node.first.1,
            node.second.0,
            node.second.1,
            e.right,
            e.weight,
            e.predicate.0
        )
        .unwrap();
    }
    out
}

fn parse_vertex(tok: &str, line: usize) -> Result<Vertex> {
    if tok == "free" {
        return Ok(Vertex::Free);
    }
    let (tag, id) = tok
        .split_once(':')
        .ok_or_else(|| Error::parse(line, format!("bad vertex `{tok}`")))?;
    let id = ItemId(
        id.parse()
            .map_err(|_| Error::parse(line, format!("bad vertex id `{id}`")))?,
    );
    match tag {
        "e" => Ok(Vertex::Entity(id)),
        "c" => Ok(Vertex::Class(id)),
        _ => Err(Error::parse(line, format!("bad vertex tag `{tag}`"))),
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad number `{tok}`")))
}

pub fn parse_instance(text: &str) -> Result<CondensedBipartiteGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((n, _)) => return Err(Error::parse(n, format!("expected `{MAGIC}`"))),
        None => return Err(Error::parse(0, "empty instance")),
    }
    let mut sets = CandidateSets::default();
    let mut weights: HashMap<(Endpoint, Endpoint, usize), CondensedCost> = HashMap::new();
    for (n, line) in lines {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("vertex-set") => sets.vertex_sets.push(VertexSet {
                members: toks.map(|t| parse_vertex(t, n)).collect::<Result<_>>()?,
                term: None,
            }),
            Some("edge-set") => sets.edge_sets.push(EdgeSet {
                predicates: toks.map(|t| num(t, n).map(ItemId)).collect::<Result<_>>()?,
                term: None,
            }),
            Some("w") => {
                let f: Vec<&str> = toks.collect();
                if f.len() != 8 {
                    return Err(Error::parse(n, "weight rows have 8 fields"));
                }
                let direction = match f[7] {
                    "F" => Direction::Forward,
                    "B" => Direction::Backward,
                    other => return Err(Error::parse(n, format!("bad direction `{other}`"))),
                };
                let key = (
                    (num(f[0], n)?, num(f[1], n)?),
                    (num(f[2], n)?, num(f[3], n)?),
                    num(f[4], n)?,
                );
                let cost = CondensedCost {
                    cost: num(f[5], n)?,
                    predicate: ItemId(num(f[6], n)?),
                    direction,
                };
                weights.insert(key, cost);
            }
            Some(other) => return Err(Error::parse(n, format!("unknown record `{other}`"))),
            None => {}
        }
    }
    CondensedBipartiteGraph::from_weights(sets, |_, node, j| {
        weights
            .get(&(node.first, node.second, j))
            .copied()
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "no weight for pair {:?}-{:?} and edge set {j}",
                    node.first, node.second
                ))
            })
    })
}
