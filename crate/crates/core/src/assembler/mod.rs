//! Query graph assembly.
//!
//! Every entity/class term contributes a vertex set and every relation term
//! an edge set of candidate predicates. Assembly picks one vertex per vertex
//! set and wires each edge set onto a distinct vertex pair so that the summed
//! triple assembly cost is minimal.
//!
//! The problem is solved as a constrained matching on the condensed bipartite
//! graph: left nodes are vertex pairs drawn from two different vertex sets,
//! right nodes are whole edge sets, and the crossing edge weight is the
//! cheapest member predicate for that pair.

mod bounds;
mod hungarian;
mod instance;
mod oracle;
mod random;
mod reduction;
mod search;

pub use bounds::{greedy_lb, km_lb, naive_lb, LowerBound, SearchState};
pub use hungarian::hungarian_min_assignment;
pub use instance::{format_instance, parse_instance};
pub use oracle::{brute_force_oracle, optimal_completion, OracleResult, DEFAULT_ORACLE_CAP};
pub use random::{random_instance, InstanceShape};
pub use reduction::{parse_dimacs, reduce_3sat, Cnf};
pub use search::{solve_qga, solve_qga_observed, SearchStats, Solution, SolveOutcome};

use std::fmt;

use crate::embedding::{condensed_edge_weight, CondensedCost, Direction, EmbeddingTable};
use crate::error::{Error, Result};
use crate::lexicon::{AnnotatedQuery, Character};
use crate::store::ItemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Entity(ItemId),
    /// Becomes a typed variable in the emitted query.
    Class(ItemId),
    /// Synthetic untyped variable; assembles with anything at zero cost.
    Free,
}

impl Vertex {
    pub fn item(&self) -> Option<ItemId> {
        match *self {
            Vertex::Entity(id) | Vertex::Class(id) => Some(id),
            Vertex::Free => None,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Entity(id) => write!(f, "e:{}", id.0),
            Vertex::Class(id) => write!(f, "c:{}", id.0),
            Vertex::Free => f.write_str("free"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    pub members: Vec<Vertex>,
    /// Index of the originating term in its annotated query.
    pub term: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    pub predicates: Vec<ItemId>,
    pub term: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSets {
    pub vertex_sets: Vec<VertexSet>,
    pub edge_sets: Vec<EdgeSet>,
}

impl CandidateSets {
    pub fn n(&self) -> usize {
        self.vertex_sets.len()
    }

    pub fn m(&self) -> usize {
        self.edge_sets.len()
    }
}

/// Splits an annotated query into vertex sets and edge sets (both in term
/// order). A query with relations but at most one vertex term gets an extra
/// free-variable vertex set so the relation has somewhere to attach.
pub fn build_candidate_sets(aq: &AnnotatedQuery) -> Result<CandidateSets> {
    if aq.terms.is_empty() {
        return Err(Error::Invalid("annotated query has no terms".into()));
    }
    let mut sets = CandidateSets::default();
    for (idx, term) in aq.terms.iter().enumerate() {
        match term.character {
            Character::Entity => sets.vertex_sets.push(VertexSet {
                members: term.items().map(Vertex::Entity).collect(),
                term: Some(idx),
            }),
            Character::Class => sets.vertex_sets.push(VertexSet {
                members: term.items().map(Vertex::Class).collect(),
                term: Some(idx),
            }),
            Character::Relation => sets.edge_sets.push(EdgeSet {
                predicates: term.items().collect(),
                term: Some(idx),
            }),
        }
    }
    if sets.m() >= 1 && sets.n() <= 1 {
        sets.vertex_sets.push(VertexSet {
            members: vec![Vertex::Free],
            term: None,
        });
    }
    Ok(sets)
}

/// Supplies condensed crossing-edge weights.
pub trait EdgeCostSource {
    fn edge_cost(&self, a: &Vertex, b: &Vertex, predicates: &[ItemId]) -> Result<CondensedCost>;
}

impl EdgeCostSource for EmbeddingTable {
    fn edge_cost(&self, a: &Vertex, b: &Vertex, predicates: &[ItemId]) -> Result<CondensedCost> {
        match (a.item(), b.item()) {
            (Some(x), Some(y)) => condensed_edge_weight(self, x, y, predicates),
            _ => {
                let predicate = predicates
                    .iter()
                    .min()
                    .copied()
                    .ok_or_else(|| Error::Invalid("empty predicate set".into()))?;
                Ok(CondensedCost {
                    cost: 0.0,
                    predicate,
                    direction: Direction::Forward,
                })
            }
        }
    }
}

/// `(vertex set index, member index)`.
pub type Endpoint = (usize, usize);

/// A vertex pair drawn from two distinct vertex sets, `first.0 < second.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LeftNode {
    pub first: Endpoint,
    pub second: Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEdge {
    pub left: usize,
    /// Edge set index.
    pub right: usize,
    pub weight: f64,
    pub predicate: ItemId,
    pub direction: Direction,
}

#[derive(Debug, Clone)]
pub struct CondensedBipartiteGraph {
    pub sets: CandidateSets,
    pub left_nodes: Vec<LeftNode>,
    /// Sorted by weight, ties by (left, right).
    pub edges: Vec<CrossingEdge>,
}

pub fn build_condensed_graph(
    sets: CandidateSets,
    source: &impl EdgeCostSource,
) -> Result<CondensedBipartiteGraph> {
    CondensedBipartiteGraph::from_weights(sets, |sets, node, j| {
        let a = &sets.vertex_sets[node.first.0].members[node.first.1];
        let b = &sets.vertex_sets[node.second.0].members[node.second.1];
        source.edge_cost(a, b, &sets.edge_sets[j].predicates)
    })
}

impl CondensedBipartiteGraph {
    /// Builds the graph, asking `weight` for every (left node, edge set).
    pub fn from_weights<F>(sets: CandidateSets, mut weight: F) -> Result<Self>
    where
        F: FnMut(&CandidateSets, &LeftNode, usize) -> Result<CondensedCost>,
    {
        if sets.m() >= 1 && sets.n() < 2 {
            return Err(Error::Invalid(format!(
                "{} edge set(s) need at least two vertex sets, found {}",
                sets.m(),
                sets.n()
            )));
        }
        if let Some(i) = sets.vertex_sets.iter().position(|v| v.members.is_empty()) {
            return Err(Error::Invalid(format!("vertex set {i} is empty")));
        }
        if let Some(j) = sets.edge_sets.iter().position(|e| e.predicates.is_empty()) {
            return Err(Error::Invalid(format!("edge set {j} is empty")));
        }

        let mut left_nodes = Vec::new();
        for i1 in 0..sets.n() {
            for i2 in i1 + 1..sets.n() {
                for a in 0..sets.vertex_sets[i1].members.len() {
                    for b in 0..sets.vertex_sets[i2].members.len() {
                        left_nodes.push(LeftNode {
                            first: (i1, a),
                            second: (i2, b),
                        });
                    }
                }
            }
        }

        let mut edges = Vec::with_capacity(left_nodes.len() * sets.m());
        for (left, node) in left_nodes.iter().enumerate() {
            for right in 0..sets.m() {
                let c = weight(&sets, node, right)?;
                if !(c.cost.is_finite() && c.cost >= 0.0) {
                    return Err(Error::Invalid(format!(
                        "crossing edge weight {} is not a finite nonnegative number",
                        c.cost
                    )));
                }
                edges.push(CrossingEdge {
                    left,
                    right,
                    weight: c.cost,
                    predicate: c.predicate,
                    direction: c.direction,
                });
            }
        }
        // stable: equal weights keep (left, right) creation order
        edges.sort_by(|a, b| a.weight.total_cmp(&b.weight));

        Ok(CondensedBipartiteGraph {
            sets,
            left_nodes,
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.sets.n()
    }

    pub fn m(&self) -> usize {
        self.sets.m()
    }

    pub fn endpoints(&self, e: &CrossingEdge) -> [Endpoint; 2] {
        let node = self.left_nodes[e.left];
        [node.first, node.second]
    }

    /// Conflict test between edges by index.
    pub fn conflicts(&self, e: usize, f: usize) -> bool {
        conflicts(self, &self.edges[e], &self.edges[f])
    }

    /// Chosen member per vertex set implied by a conflict-free matching;
    /// sets the matching does not touch fall back to their first member.
    pub fn vertex_choice(&self, matching: &[usize]) -> Vec<usize> {
        let mut choice = vec![0; self.n()];
        for &e in matching {
            for (set, member) in self.endpoints(&self.edges[e]) {
                choice[set] = member;
            }
        }
        choice
    }

    /// Turns a matching (edge indices) into a query graph.
    pub fn realize(&self, matching: &[usize]) -> QueryGraph {
        let choice = self.vertex_choice(matching);
        let vertices = choice
            .iter()
            .enumerate()
            .map(|(set, &member)| QueryVertex {
                set,
                vertex: self.sets.vertex_sets[set].members[member],
            })
            .collect();
        let mut edges: Vec<QueryEdge> = matching
            .iter()
            .map(|&e| {
                let edge = &self.edges[e];
                let [a, b] = self.endpoints(edge);
                let (from, to) = match edge.direction {
                    Direction::Forward => (a.0, b.0),
                    Direction::Backward => (b.0, a.0),
                };
                QueryEdge {
                    from,
                    to,
                    predicate: edge.predicate,
                    weight: edge.weight,
                    edge_set: Some(edge.right),
                }
            })
            .collect();
        edges.sort_by_key(|e| e.edge_set);
        let total_cost = edges.iter().map(|e| e.weight).sum();
        QueryGraph {
            vertices,
            edges,
            predicted_edges: Vec::new(),
            total_cost,
        }
    }
}

/// Two crossing edges conflict when they pick different members of one
/// vertex set, target the same edge set, or share a vertex pair.
pub fn conflicts(graph: &CondensedBipartiteGraph, e: &CrossingEdge, f: &CrossingEdge) -> bool {
    if e.right == f.right || e.left == f.left {
        return true;
    }
    let ea = graph.endpoints(e);
    let fa = graph.endpoints(f);
    ea.iter()
        .any(|&(s, m)| fa.iter().any(|&(t, n)| s == t && m != n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryVertex {
    pub set: usize,
    pub vertex: Vertex,
}

/// Directed edge between two query vertices (indices into
/// [`QueryGraph::vertices`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryEdge {
    pub from: usize,
    pub to: usize,
    pub predicate: ItemId,
    pub weight: f64,
    /// Edge set this edge realizes; `None` for predicted edges.
    pub edge_set: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGraph {
    /// One vertex per vertex set, in set order.
    pub vertices: Vec<QueryVertex>,
    pub edges: Vec<QueryEdge>,
    pub predicted_edges: Vec<QueryEdge>,
    /// Sum of assembled edge weights.
    pub total_cost: f64,
}

impl QueryGraph {
    /// Edgeless graph taking the first member of every vertex set.
    pub fn vertices_only(sets: &CandidateSets) -> Self {
        QueryGraph {
            vertices: sets
                .vertex_sets
                .iter()
                .enumerate()
                .map(|(set, v)| QueryVertex {
                    set,
                    vertex: v.members[0],
                })
                .collect(),
            edges: Vec::new(),
            predicted_edges: Vec::new(),
            total_cost: 0.0,
        }
    }

    pub fn all_edges(&self) -> impl Iterator<Item = (&QueryEdge, bool)> {
        self.edges
            .iter()
            .map(|e| (e, false))
            .chain(self.predicted_edges.iter().map(|e| (e, true)))
    }

    pub fn predicted_cost(&self) -> f64 {
        self.predicted_edges.iter().map(|e| e.weight).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len() + self.predicted_edges.len()
    }
}
