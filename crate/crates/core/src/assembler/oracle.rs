//! Exhaustive reference solver.
//!
//! Enumerates one member per vertex set and, for each such choice, every
//! injective placement of the edge sets onto vertex-set pairs. It shares no
//! code with the branch and bound beyond the graph's weight table.

use std::collections::{HashMap, HashSet};

use super::bounds::SearchState;
use super::{CondensedBipartiteGraph, Endpoint};
use crate::error::{Error, Result};

pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `None` when the instance is infeasible.
    pub cost: Option<f64>,
    pub matching: Option<Vec<usize>>,
    /// Number of complete assignments enumerated.
    pub combinations: u64,
}

struct Lookup {
    edge_at: HashMap<(Endpoint, Endpoint, usize), usize>,
}

impl Lookup {
    fn new(graph: &CondensedBipartiteGraph) -> Self {
        let edge_at = graph
            .edges
            .iter()
            .enumerate()
            .map(|(idx, e)| {
                let node = graph.left_nodes[e.left];
                ((node.first, node.second, e.right), idx)
            })
            .collect();
        Lookup { edge_at }
    }
}

struct Search<'a> {
    graph: &'a CondensedBipartiteGraph,
    lookup: &'a Lookup,
    allowed: Option<&'a HashSet<usize>>,
    pairs: Vec<(usize, usize)>,
    rights: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    combinations: u64,
}

impl Search<'_> {
    fn place(
        &mut self,
        choice: &[usize],
        depth: usize,
        used: &mut Vec<bool>,
        acc: f64,
        picked: &mut Vec<usize>,
    ) {
        if depth == self.rights.len() {
            self.combinations += 1;
            if self.best.as_ref().is_none_or(|(c, _)| acc < *c) {
                self.best = Some((acc, picked.clone()));
            }
            return;
        }
        let j = self.rights[depth];
        for p in 0..self.pairs.len() {
            if used[p] {
                continue;
            }
            let (i1, i2) = self.pairs[p];
            let key = ((i1, choice[i1]), (i2, choice[i2]), j);
            let e = self.lookup.edge_at[&key];
            if self.allowed.is_some_and(|a| !a.contains(&e)) {
                continue;
            }
            used[p] = true;
            picked.push(e);
            self.place(
                choice,
                depth + 1,
                used,
                acc + self.graph.edges[e].weight,
                picked,
            );
            picked.pop();
            used[p] = false;
        }
    }
}

fn falling(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n.saturating_sub(i)))
}

/// Minimum over every assignment; `cap` bounds the number of assignments.
pub fn brute_force_oracle(graph: &CondensedBipartiteGraph, cap: u64) -> Result<OracleResult> {
    let n = graph.n();
    let m = graph.m();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let choices: u64 = graph
        .sets
        .vertex_sets
        .iter()
        .fold(1u64, |acc, v| acc.saturating_mul(v.members.len() as u64));
    let total = choices.saturating_mul(falling(pairs.len() as u64, m as u64));
    if total > cap {
        return Err(Error::ResourceLimit(format!(
            "oracle would enumerate {total} assignments (cap {cap})"
        )));
    }
    if m == 0 {
        return Ok(OracleResult {
            cost: Some(0.0),
            matching: Some(Vec::new()),
            combinations: 1,
        });
    }
    let lookup = Lookup::new(graph);
    let fixed = vec![None; n];
    let mut search = Search {
        graph,
        lookup: &lookup,
        allowed: None,
        pairs,
        rights: (0..m).collect(),
        best: None,
        combinations: 0,
    };
    run(&mut search, &fixed);
    Ok(OracleResult {
        cost: search.best.as_ref().map(|b| b.0),
        matching: search.best.map(|b| b.1),
        combinations: search.combinations,
    })
}

fn run(search: &mut Search<'_>, fixed: &[Option<usize>]) {
    let sizes: Vec<usize> = search
        .graph
        .sets
        .vertex_sets
        .iter()
        .map(|v| v.members.len())
        .collect();
    let mut choice: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    let mut used = vec![false; search.pairs.len()];
    let mut picked = Vec::new();
    loop {
        search.place(&choice, 0, &mut used, 0.0, &mut picked);
        // odometer over the sets that are not pinned
        let mut k = 0;
        loop {
            if k == free.len() {
                return;
            }
            let s = free[k];
            choice[s] += 1;
            if choice[s] < sizes[s] {
                break;
            }
            choice[s] = 0;
            k += 1;
        }
    }
}

/// Cheapest completion of `state` using only edges from `state.compatible`:
/// returns `cost(M)` plus the optimal addition, or `None` if no completion
/// exists.
pub fn optimal_completion(graph: &CondensedBipartiteGraph, state: &SearchState) -> Option<f64> {
    let n = graph.n();
    let mut fixed = vec![None; n];
    let mut used_pairs = HashSet::new();
    let mut used_rights = vec![false; graph.m()];
    for &e in &state.matched {
        let edge = &graph.edges[e];
        let node = graph.left_nodes[edge.left];
        fixed[node.first.0] = Some(node.first.1);
        fixed[node.second.0] = Some(node.second.1);
        used_pairs.insert((node.first.0, node.second.0));
        used_rights[edge.right] = true;
    }
    let rights: Vec<usize> = (0..graph.m()).filter(|&j| !used_rights[j]).collect();
    if rights.is_empty() {
        return Some(state.cost);
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|p| !used_pairs.contains(p))
        .collect();
    let allowed: HashSet<usize> = state.compatible.iter().copied().collect();
    let lookup = Lookup::new(graph);
    let mut search = Search {
        graph,
        lookup: &lookup,
        allowed: Some(&allowed),
        pairs,
        rights,
        best: None,
        combinations: 0,
    };
    run(&mut search, &fixed);
    search.best.map(|(c, _)| state.cost + c)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{ids, pinned, running_sets};
    use super::super::{CandidateSets, EdgeSet, Vertex, VertexSet};
    use super::*;
    use crate::store::ItemId;

    #[test]
    fn running_example_optimum() {
        let cls = |i| Vertex::Class(ItemId(i));
        let ent = |i| Vertex::Entity(ItemId(i));
        let g = pinned(
            running_sets(),
            &[
                ((cls(0), cls(1), 0), 0.8),
                ((cls(1), ent(3), 1), 0.96),
                ((cls(0), ent(2), 1), 1.66),
            ],
        );
        let r = brute_force_oracle(&g, DEFAULT_ORACLE_CAP).unwrap();
        assert!((r.cost.unwrap() - 1.76).abs() < 1e-12);
        // 2 vertex choices × 3·2 placements
        assert_eq!(r.combinations, 12);
    }

    #[test]
    fn contradictory_instance_is_infeasible() {
        let sets = CandidateSets {
            vertex_sets: (0..2)
                .map(|i| VertexSet {
                    members: vec![Vertex::Entity(ItemId(i))],
                    term: None,
                })
                .collect(),
            edge_sets: (0..2)
                .map(|j| EdgeSet {
                    predicates: ids(&[10 + j]),
                    term: None,
                })
                .collect(),
        };
        let g = pinned(sets, &[]);
        assert_eq!(
            brute_force_oracle(&g, DEFAULT_ORACLE_CAP).unwrap().cost,
            None
        );
    }

    #[test]
    fn no_edge_sets_costs_nothing() {
        let mut sets = running_sets();
        sets.edge_sets.clear();
        let g = pinned(sets, &[]);
        assert_eq!(
            brute_force_oracle(&g, DEFAULT_ORACLE_CAP).unwrap().cost,
            Some(0.0)
        );
    }

    #[test]
    fn cap_is_enforced() {
        let g = pinned(running_sets(), &[]);
        assert!(matches!(
            brute_force_oracle(&g, 3),
            Err(Error::ResourceLimit(_))
        ));
    }
}
