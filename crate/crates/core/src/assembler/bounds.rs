//! Lower bounds on the cheapest completion of a partial matching.

use std::fmt;
use std::str::FromStr;

use super::hungarian::hungarian_min_assignment;
use super::CondensedBipartiteGraph;
use crate::error::Error;

/// A node of the best-first search: partial matching `matched`, the edges
/// `compatible` with it that may still be added (weight order), the matched
/// cost and the lower bound on any completion.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub matched: Vec<usize>,
    pub compatible: Vec<usize>,
    pub cost: f64,
    pub lower_bound: f64,
}

impl SearchState {
    fn remaining(&self, m: usize) -> usize {
        m.saturating_sub(self.matched.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LowerBound {
    Naive,
    Km,
    Greedy,
}

impl LowerBound {
    pub const ALL: [LowerBound; 3] = [LowerBound::Naive, LowerBound::Km, LowerBound::Greedy];

    pub fn evaluate(self, graph: &CondensedBipartiteGraph, state: &SearchState, m: usize) -> f64 {
        match self {
            LowerBound::Naive => naive_lb(graph, state, m),
            LowerBound::Km => km_lb(graph, state, m),
            LowerBound::Greedy => greedy_lb(graph, state, m),
        }
    }
}

impl fmt::Display for LowerBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LowerBound::Naive => "naive",
            LowerBound::Km => "km",
            LowerBound::Greedy => "greedy",
        })
    }
}

impl FromStr for LowerBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(LowerBound::Naive),
            "km" => Ok(LowerBound::Km),
            "greedy" => Ok(LowerBound::Greedy),
            other => Err(Error::Config(format!(
                "unknown lower bound `{other}` (expected naive, km or greedy)"
            ))),
        }
    }
}

/// `cost(M)` plus the `m - |M|` smallest weights in `Z`, ignoring all
/// conflicts.
pub fn naive_lb(graph: &CondensedBipartiteGraph, state: &SearchState, m: usize) -> f64 {
    let need = state.remaining(m);
    if state.compatible.len() < need {
        return f64::INFINITY;
    }
    state.cost
        + state.compatible[..need]
            .iter()
            .map(|&e| graph.edges[e].weight)
            .sum::<f64>()
}

/// `cost(M)` plus the exact minimum-weight assignment of the unmatched edge
/// sets to distinct vertex pairs using edges of `Z`; conflicts between
/// vertex sets are ignored.
pub fn km_lb(graph: &CondensedBipartiteGraph, state: &SearchState, m: usize) -> f64 {
    let need = state.remaining(m);
    if need == 0 {
        return state.cost;
    }
    let mut row_of = vec![None; graph.m()];
    for &e in &state.matched {
        row_of[graph.edges[e].right] = Some(usize::MAX);
    }
    let mut rows = 0;
    for slot in row_of.iter_mut().filter(|s| s.is_none()) {
        *slot = Some(rows);
        rows += 1;
    }
    debug_assert_eq!(rows, need);

    let mut col_of = vec![usize::MAX; graph.left_nodes.len()];
    let mut cols = 0;
    for &e in &state.compatible {
        let left = graph.edges[e].left;
        if col_of[left] == usize::MAX {
            col_of[left] = cols;
            cols += 1;
        }
    }
    if cols < rows {
        return f64::INFINITY;
    }
    let mut matrix = vec![vec![f64::INFINITY; cols]; rows];
    for &e in &state.compatible {
        let edge = &graph.edges[e];
        match row_of[edge.right] {
            Some(r) if r != usize::MAX => {
                let c = &mut matrix[r][col_of[edge.left]];
                *c = c.min(edge.weight);
            }
            _ => {}
        }
    }
    match hungarian_min_assignment(&matrix) {
        Some((_, total)) => state.cost + total,
        None => f64::INFINITY,
    }
}

/// Greedy scan of `Z` in weight order keeping edges that share neither a
/// vertex pair nor an edge set with kept edges, stopping after `limit`.
pub(crate) fn greedy_matching(
    graph: &CondensedBipartiteGraph,
    z: &[usize],
    limit: usize,
) -> Vec<usize> {
    let mut left_used = vec![false; graph.left_nodes.len()];
    let mut right_used = vec![false; graph.m()];
    let mut kept = Vec::with_capacity(limit);
    for &e in z {
        if kept.len() == limit {
            break;
        }
        let edge = &graph.edges[e];
        if left_used[edge.left] || right_used[edge.right] {
            continue;
        }
        left_used[edge.left] = true;
        right_used[edge.right] = true;
        kept.push(e);
    }
    kept
}

/// `cost(M)` plus half the greedy matching cost, capped by a bound that is
/// always admissible.
///
/// Halving alone is not admissible for minimum-weight matchings: with
/// `Z = {(L1,R1,.1), (L1,R2,.1), (L2,R1,.1), (L2,R2,1)}` greedy keeps
/// `.1 + 1`, half of which exceeds the optimal `.1 + .1`. The cap comes from
/// charging every edge of an optimal completion to a kept edge that blocked
/// it (or to itself): each kept edge absorbs at most two such edges, one per
/// endpoint, and is never heavier than them. So the optimum is at least the
/// first `m - |M|` terms of `k1, k1, k2, k2, ...`, and if fewer than half the
/// required edges were kept no completion exists at all.
pub fn greedy_lb(graph: &CondensedBipartiteGraph, state: &SearchState, m: usize) -> f64 {
    let need = state.remaining(m);
    if need == 0 {
        return state.cost;
    }
    let kept = greedy_matching(graph, &state.compatible, need);
    if 2 * kept.len() < need {
        return f64::INFINITY;
    }
    let weights: Vec<f64> = kept.iter().map(|&e| graph.edges[e].weight).collect();
    let halved = weights.iter().sum::<f64>() / 2.0;
    let charged: f64 = weights.iter().flat_map(|&w| [w, w]).take(need).sum();
    state.cost + halved.min(charged)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{ids, pinned};
    use super::super::{CandidateSets, EdgeSet, Vertex, VertexSet};
    use super::*;
    use crate::store::ItemId;

    fn state(graph: &CondensedBipartiteGraph, matched: Vec<usize>, z: Vec<usize>) -> SearchState {
        let cost = matched.iter().map(|&e| graph.edges[e].weight).sum();
        SearchState {
            matched,
            compatible: z,
            cost,
            lower_bound: 0.0,
        }
    }

    fn singletons(n: u32, m: u32) -> CandidateSets {
        CandidateSets {
            vertex_sets: (0..n)
                .map(|i| VertexSet {
                    members: vec![Vertex::Entity(ItemId(i))],
                    term: None,
                })
                .collect(),
            edge_sets: (0..m)
                .map(|j| EdgeSet {
                    predicates: ids(&[100 + j]),
                    term: None,
                })
                .collect(),
        }
    }

    fn e(i: u32) -> Vertex {
        Vertex::Entity(ItemId(i))
    }

    /// Edge index with the given left node and right node.
    fn at(g: &CondensedBipartiteGraph, left: usize, right: usize) -> usize {
        g.edges
            .iter()
            .position(|x| x.left == left && x.right == right)
            .unwrap()
    }

    #[test]
    fn naive_sums_smallest_remaining() {
        // 3 vertex sets → 3 pairs; weights 0.1, 0.2, 0.5 on edge set 0
        let g = pinned(
            singletons(3, 2),
            &[
                ((e(0), e(1), 0), 0.1),
                ((e(0), e(2), 0), 0.2),
                ((e(1), e(2), 0), 0.5),
            ],
        );
        let z = vec![at(&g, 0, 0), at(&g, 1, 0), at(&g, 2, 0)];
        let s = state(&g, vec![], z);
        assert!((naive_lb(&g, &s, 2) - 0.3).abs() < 1e-12);
        let done = state(&g, vec![at(&g, 0, 0)], vec![]);
        assert_eq!(naive_lb(&g, &done, 1), done.cost);
        assert_eq!(naive_lb(&g, &done, 2), f64::INFINITY);
    }

    #[test]
    fn km_solves_the_assignment() {
        // two pairs (left 0, 1), two edge sets: [[1,2],[3,1]] by right node
        let g = pinned(
            CandidateSets {
                vertex_sets: singletons(3, 2).vertex_sets,
                edge_sets: singletons(3, 2).edge_sets,
            },
            &[
                ((e(0), e(1), 0), 1.0),
                ((e(0), e(2), 0), 2.0),
                ((e(0), e(1), 1), 3.0),
                ((e(0), e(2), 1), 1.0),
            ],
        );
        let z = vec![at(&g, 0, 0), at(&g, 1, 0), at(&g, 0, 1), at(&g, 1, 1)];
        let mut z = z;
        z.sort();
        let s = state(&g, vec![], z);
        assert_eq!(km_lb(&g, &s, 2), 2.0);
        assert!(km_lb(&g, &s, 2) >= naive_lb(&g, &s, 2));
    }

    #[test]
    fn km_with_one_remaining_equals_naive() {
        let g = pinned(
            singletons(3, 2),
            &[
                ((e(0), e(1), 1), 0.3),
                ((e(0), e(2), 1), 0.2),
                ((e(1), e(2), 1), 0.7),
            ],
        );
        let first = at(&g, 2, 0);
        let z: Vec<usize> = (0..g.edges.len())
            .filter(|&x| !g.conflicts(first, x))
            .collect();
        let s = state(&g, vec![first], z);
        assert_eq!(km_lb(&g, &s, 2), naive_lb(&g, &s, 2));
    }

    #[test]
    fn greedy_trace_skips_blocked_edge() {
        // e1 (L1,R1,1), e2 (L1,R2,2), e3 (L2,R2,3)
        let g = pinned(
            singletons(3, 2),
            &[
                ((e(0), e(1), 0), 1.0),
                ((e(0), e(1), 1), 2.0),
                ((e(0), e(2), 1), 3.0),
            ],
        );
        let z = vec![at(&g, 0, 0), at(&g, 0, 1), at(&g, 1, 1)];
        assert_eq!(greedy_matching(&g, &z, 2), vec![at(&g, 0, 0), at(&g, 1, 1)]);
        let s = state(&g, vec![], z);
        assert_eq!(greedy_lb(&g, &s, 2), 2.0);
    }

    #[test]
    fn greedy_on_disjoint_edges_halves_the_cheapest() {
        let g = pinned(
            singletons(4, 2),
            &[
                ((e(0), e(1), 0), 0.1),
                ((e(2), e(3), 1), 0.2),
                ((e(0), e(2), 0), 0.9),
            ],
        );
        let z = vec![at(&g, 0, 0), at(&g, 5, 1)];
        let s = state(&g, vec![], z);
        assert!((greedy_lb(&g, &s, 2) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn plain_halving_can_overshoot_and_is_capped() {
        // pairs L1 = (0,1), L2 = (0,2); edge sets R1, R2
        let g = pinned(
            singletons(3, 2),
            &[
                ((e(0), e(1), 0), 0.1),
                ((e(0), e(1), 1), 0.1),
                ((e(0), e(2), 0), 0.1),
                ((e(0), e(2), 1), 1.0),
                ((e(1), e(2), 0), 9.0),
                ((e(1), e(2), 1), 9.0),
            ],
        );
        let z: Vec<usize> = (0..g.edges.len()).collect();
        let kept = greedy_matching(&g, &z, 2);
        let halved: f64 = kept.iter().map(|&x| g.edges[x].weight).sum::<f64>() / 2.0;
        let optimum = 0.2;
        assert!(halved > optimum);
        let s = state(&g, vec![], z);
        assert!(greedy_lb(&g, &s, 2) <= optimum + 1e-12);
    }

    #[test]
    fn bound_names_parse() {
        for b in LowerBound::ALL {
            assert_eq!(b.to_string().parse::<LowerBound>().unwrap(), b);
        }
        assert!("best".parse::<LowerBound>().is_err());
    }
}
