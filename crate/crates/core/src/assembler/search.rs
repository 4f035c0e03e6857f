//! Best-first branch and bound over partial matchings.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::bounds::{LowerBound, SearchState};
use super::{CondensedBipartiteGraph, QueryGraph};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SearchStats {
    pub states_pushed: u64,
    pub states_popped: u64,
    /// Children discarded at generation because their bound reached the
    /// incumbent (or was infinite).
    pub states_pruned: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Edge indices into `graph.edges`, in the order they were matched.
    pub matching: Vec<usize>,
    pub cost: f64,
    pub query: QueryGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// `None` when no conflict-free matching covers every edge set.
    pub solution: Option<Solution>,
    pub stats: SearchStats,
}

struct Node {
    matched: Vec<usize>,
    cost: f64,
    lower_bound: f64,
    seq: u64,
}

impl Node {
    /// Min-heap key: bound, then cost, then deeper first, then FIFO.
    fn priority(&self, other: &Self) -> Ordering {
        self.lower_bound
            .total_cmp(&other.lower_bound)
            .then(self.cost.total_cmp(&other.cost))
            .then(other.matched.len().cmp(&self.matched.len()))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.priority(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.priority(self)
    }
}

/// Edges after the last matched one (in weight order) that conflict with
/// nothing in `matched`.
fn compatible_edges(graph: &CondensedBipartiteGraph, matched: &[usize]) -> Vec<usize> {
    let start = matched.last().map_or(0, |&e| e + 1);
    (start..graph.edges.len())
        .filter(|&f| matched.iter().all(|&e| !graph.conflicts(e, f)))
        .collect()
}

pub fn solve_qga(graph: &CondensedBipartiteGraph, bound: LowerBound) -> SolveOutcome {
    solve_qga_observed(graph, bound, |_| {})
}

/// [`solve_qga`] that reports every expanded state to `observe`.
pub fn solve_qga_observed<F>(
    graph: &CondensedBipartiteGraph,
    bound: LowerBound,
    mut observe: F,
) -> SolveOutcome
where
    F: FnMut(&SearchState),
{
    let m = graph.m();
    let mut stats = SearchStats::default();
    if m == 0 {
        return SolveOutcome {
            solution: Some(Solution {
                matching: Vec::new(),
                cost: 0.0,
                query: graph.realize(&[]),
            }),
            stats,
        };
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node {
        matched: Vec::new(),
        cost: 0.0,
        lower_bound: 0.0,
        seq,
    });
    stats.states_pushed += 1;

    let mut theta = f64::INFINITY;
    let mut best: Option<(Vec<usize>, f64)> = None;

    while let Some(node) = heap.pop() {
        if node.lower_bound >= theta {
            break;
        }
        stats.states_popped += 1;
        let z = compatible_edges(graph, &node.matched);
        observe(&SearchState {
            matched: node.matched.clone(),
            compatible: z.clone(),
            cost: node.cost,
            lower_bound: node.lower_bound,
        });

        for (pos, &e) in z.iter().enumerate() {
            let mut matched = node.matched.clone();
            matched.push(e);
            let cost = node.cost + graph.edges[e].weight;
            if matched.len() == m {
                if cost < theta {
                    theta = cost;
                    best = Some((matched, cost));
                }
                continue;
            }
            let compatible: Vec<usize> = z[pos + 1..]
                .iter()
                .copied()
                .filter(|&f| !graph.conflicts(e, f))
                .collect();
            let mut child = SearchState {
                matched,
                compatible,
                cost,
                lower_bound: 0.0,
            };
            child.lower_bound = bound.evaluate(graph, &child, m);
            if child.lower_bound >= theta {
                stats.states_pruned += 1;
                continue;
            }
            seq += 1;
            heap.push(Node {
                matched: child.matched,
                cost: child.cost,
                lower_bound: child.lower_bound,
                seq,
            });
            stats.states_pushed += 1;
        }
    }

    SolveOutcome {
        solution: best.map(|(matching, cost)| Solution {
            query: graph.realize(&matching),
            matching,
            cost,
        }),
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{ids, pinned, running_sets};
    use super::super::{CandidateSets, EdgeSet, Vertex, VertexSet};
    use super::*;
    use crate::store::ItemId;

    fn cls(i: u32) -> Vertex {
        Vertex::Class(ItemId(i))
    }

    fn ent(i: u32) -> Vertex {
        Vertex::Entity(ItemId(i))
    }

    #[test]
    fn picks_the_cheaper_of_two_assemblies() {
        // Q1: Scientist-almaMater-University, University-country-United_States
        // Q2: Scientist-almaMater-University, Scientist-country-USA_Today
        let g = pinned(
            running_sets(),
            &[
                ((cls(0), cls(1), 0), 0.8),
                ((cls(1), ent(3), 1), 0.96),
                ((cls(0), ent(2), 1), 1.66),
            ],
        );
        for bound in LowerBound::ALL {
            let out = solve_qga(&g, bound);
            let sol = out.solution.unwrap();
            assert!((sol.cost - 1.76).abs() < 1e-12, "{bound}");
            assert_eq!(sol.query.vertices[2].vertex, ent(3));
        }
    }

    #[test]
    fn single_edge_instance() {
        let sets = CandidateSets {
            vertex_sets: vec![
                VertexSet {
                    members: vec![ent(0)],
                    term: None,
                },
                VertexSet {
                    members: vec![ent(1)],
                    term: None,
                },
            ],
            edge_sets: vec![EdgeSet {
                predicates: ids(&[2]),
                term: None,
            }],
        };
        let g = pinned(sets, &[((ent(0), ent(1), 0), 0.42)]);
        let out = solve_qga(&g, LowerBound::Greedy);
        assert_eq!(out.solution.unwrap().cost, 0.42);
        assert_eq!(out.stats.states_popped, 1);
    }

    #[test]
    fn two_edge_sets_on_one_pair_is_infeasible() {
        let sets = CandidateSets {
            vertex_sets: vec![
                VertexSet {
                    members: vec![ent(0)],
                    term: None,
                },
                VertexSet {
                    members: vec![ent(1)],
                    term: None,
                },
            ],
            edge_sets: vec![
                EdgeSet {
                    predicates: ids(&[2]),
                    term: None,
                },
                EdgeSet {
                    predicates: ids(&[3]),
                    term: None,
                },
            ],
        };
        let g = pinned(sets, &[]);
        for bound in LowerBound::ALL {
            assert!(solve_qga(&g, bound).solution.is_none());
        }
    }

    #[test]
    fn no_edge_sets_is_trivially_solved() {
        let mut sets = running_sets();
        sets.edge_sets.clear();
        let g = pinned(sets, &[]);
        let out = solve_qga(&g, LowerBound::Naive);
        let sol = out.solution.unwrap();
        assert_eq!(sol.cost, 0.0);
        assert!(sol.query.edges.is_empty());
        assert_eq!(sol.query.vertices.len(), 3);
    }

    #[test]
    fn observed_states_respect_invariants() {
        let g = pinned(
            running_sets(),
            &[((cls(0), cls(1), 0), 0.3), ((cls(1), ent(2), 1), 0.2)],
        );
        let mut seen = 0;
        solve_qga_observed(&g, LowerBound::Km, |s| {
            seen += 1;
            assert!(s.lower_bound >= s.cost - 1e-12);
            for &a in &s.matched {
                for &b in &s.matched {
                    assert!(a == b || !g.conflicts(a, b));
                }
                for &z in &s.compatible {
                    assert!(!g.conflicts(a, z));
                }
            }
        });
        assert!(seen >= 1);
    }
}
