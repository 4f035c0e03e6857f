//! Connects a disconnected query graph with predicted predicates: one
//! cheapest triple per pair of components, then a minimum spanning tree.

use crate::assembler::{EdgeCostSource, QueryEdge, QueryGraph, Vertex};
use crate::embedding::Direction;
use crate::error::{Error, Result};
use crate::store::ItemId;

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns false when already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // keep the smaller index as root so component order is stable
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Vertex indices of `q` grouped by undirected reachability over assembled
/// and predicted edges. Components are ordered by their smallest vertex and
/// list vertices in ascending order.
pub fn connected_components(q: &QueryGraph) -> Vec<Vec<usize>> {
    let n = q.vertices.len();
    let mut dsu = DisjointSets::new(n);
    for (e, _) in q.all_edges() {
        dsu.union(e.from, e.to);
    }
    let mut slot = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let root = dsu.find(v);
        if slot[root] == usize::MAX {
            slot[root] = out.len();
            out.push(Vec::new());
        }
        out[slot[root]].push(v);
    }
    out
}

/// Cheapest triple joining components `a < b`. `from`/`to` are vertex
/// indices of the query graph, already oriented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionEdge {
    pub a: usize,
    pub b: usize,
    pub from: usize,
    pub to: usize,
    pub predicate: ItemId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGraph {
    pub components: Vec<Vec<usize>>,
    /// Complete graph over the components, ordered by `(a, b)`.
    pub edges: Vec<PredictionEdge>,
}

impl PredictionGraph {
    pub fn r(&self) -> usize {
        self.components.len()
    }
}

/// Builds the complete prediction graph. Free-variable vertices carry no
/// vector and are skipped; ties go to the lower vertex index, then the lower
/// predicate id.
pub fn build_prediction_graph(
    components: Vec<Vec<usize>>,
    q: &QueryGraph,
    source: &impl EdgeCostSource,
    predicates: &[ItemId],
) -> Result<PredictionGraph> {
    if predicates.is_empty() {
        return Err(Error::Invalid(
            "relation prediction needs a nonempty predicate catalog".into(),
        ));
    }
    let mut catalog = predicates.to_vec();
    catalog.sort_unstable();
    catalog.dedup();
    let grounded: Vec<Vec<usize>> = components
        .iter()
        .map(|c| {
            c.iter()
                .copied()
                .filter(|&v| q.vertices[v].vertex != Vertex::Free)
                .collect()
        })
        .collect();
    if let Some(i) = grounded.iter().position(Vec::is_empty) {
        return Err(Error::Invalid(format!(
            "component {i} has only free-variable vertices"
        )));
    }

    let mut edges = Vec::new();
    for a in 0..components.len() {
        for b in a + 1..components.len() {
            let mut best: Option<PredictionEdge> = None;
            for &vi in &grounded[a] {
                for &vj in &grounded[b] {
                    let c = source.edge_cost(
                        &q.vertices[vi].vertex,
                        &q.vertices[vj].vertex,
                        &catalog,
                    )?;
                    if best.is_none_or(|e| c.cost < e.weight) {
                        let (from, to) = match c.direction {
                            Direction::Forward => (vi, vj),
                            Direction::Backward => (vj, vi),
                        };
                        best = Some(PredictionEdge {
                            a,
                            b,
                            from,
                            to,
                            predicate: c.predicate,
                            weight: c.cost,
                        });
                    }
                }
            }
            edges.extend(best);
        }
    }
    Ok(PredictionGraph { components, edges })
}

/// Adds the minimum spanning tree of `p` to `q` as predicted edges. A graph
/// with a single component is returned unchanged.
pub fn mst_connect(p: &PredictionGraph, q: &QueryGraph) -> QueryGraph {
    let mut out = q.clone();
    if p.r() < 2 {
        return out;
    }
    let mut order: Vec<&PredictionEdge> = p.edges.iter().collect();
    order.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then((x.a, x.b).cmp(&(y.a, y.b)))
    });
    let mut dsu = DisjointSets::new(p.r());
    for e in order {
        if dsu.union(e.a, e.b) {
            out.predicted_edges.push(QueryEdge {
                from: e.from,
                to: e.to,
                predicate: e.predicate,
                weight: e.weight,
                edge_set: None,
            });
        }
    }
    out
}

/// Components → prediction graph → MST, skipping work for connected graphs.
pub fn predict_relations(
    q: &QueryGraph,
    source: &impl EdgeCostSource,
    predicates: &[ItemId],
) -> Result<QueryGraph> {
    let components = connected_components(q);
    if components.len() < 2 {
        return Ok(q.clone());
    }
    let p = build_prediction_graph(components, q, source, predicates)?;
    Ok(mst_connect(&p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::QueryVertex;
    use crate::embedding::CondensedCost;
    use std::collections::HashMap;

    fn ent(i: u32) -> Vertex {
        Vertex::Entity(ItemId(i))
    }

    fn graph(vertices: &[Vertex], edges: &[(usize, usize)]) -> QueryGraph {
        QueryGraph {
            vertices: vertices
                .iter()
                .enumerate()
                .map(|(set, &vertex)| QueryVertex { set, vertex })
                .collect(),
            edges: edges
                .iter()
                .map(|&(from, to)| QueryEdge {
                    from,
                    to,
                    predicate: ItemId(99),
                    weight: 0.5,
                    edge_set: Some(0),
                })
                .collect(),
            predicted_edges: Vec::new(),
            total_cost: 0.5 * edges.len() as f64,
        }
    }

    /// Cost table keyed by (vertex item, vertex item, predicate); missing
    /// entries cost 9.
    struct Table(HashMap<(u32, u32, u32), f64>);

    impl EdgeCostSource for Table {
        fn edge_cost(
            &self,
            a: &Vertex,
            b: &Vertex,
            predicates: &[ItemId],
        ) -> Result<CondensedCost> {
            let (x, y) = (a.item().unwrap().0, b.item().unwrap().0);
            let mut best: Option<CondensedCost> = None;
            for &p in predicates {
                let cost = *self.0.get(&(x, y, p.0)).unwrap_or(&9.0);
                if best.is_none_or(|c| cost < c.cost) {
                    best = Some(CondensedCost {
                        cost,
                        predicate: p,
                        direction: Direction::Forward,
                    });
                }
            }
            best.ok_or_else(|| Error::Invalid("empty".into()))
        }
    }

    #[test]
    fn components_follow_edges() {
        let q = graph(&[ent(0), ent(1), ent(2)], &[(0, 1)]);
        assert_eq!(connected_components(&q), vec![vec![0, 1], vec![2]]);
        let q = graph(&[ent(0), ent(1), ent(2)], &[]);
        assert_eq!(connected_components(&q).len(), 3);
        let q = graph(&[ent(0), ent(1), ent(2)], &[(2, 0), (1, 2)]);
        assert_eq!(connected_components(&q), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn picks_cheapest_predicate() {
        let q = graph(&[ent(0), ent(1)], &[]);
        let t = Table(HashMap::from([((0, 1, 5), 0.3), ((0, 1, 6), 0.7)]));
        let p = build_prediction_graph(connected_components(&q), &q, &t, &[ItemId(6), ItemId(5)])
            .unwrap();
        assert_eq!(p.edges.len(), 1);
        assert_eq!(p.edges[0].predicate, ItemId(5));
        assert_eq!(p.edges[0].weight, 0.3);
        let out = mst_connect(&p, &q);
        assert_eq!(out.predicted_edges.len(), 1);
        assert_eq!(connected_components(&out).len(), 1);
        assert!(build_prediction_graph(connected_components(&q), &q, &t, &[]).is_err());
    }

    #[test]
    fn three_components_give_three_edges_and_a_two_edge_tree() {
        let q = graph(&[ent(0), ent(1), ent(2)], &[]);
        let t = Table(HashMap::from([
            ((0, 1, 5), 0.1),
            ((1, 2, 5), 0.2),
            ((0, 2, 5), 0.05),
        ]));
        let p = build_prediction_graph(connected_components(&q), &q, &t, &[ItemId(5)]).unwrap();
        assert_eq!(p.edges.len(), 3);
        let out = mst_connect(&p, &q);
        assert_eq!(out.predicted_edges.len(), 2);
        assert!((out.predicted_cost() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn connected_graph_is_untouched() {
        let q = graph(&[ent(0), ent(1)], &[(0, 1)]);
        let t = Table(HashMap::new());
        assert_eq!(predict_relations(&q, &t, &[ItemId(5)]).unwrap(), q);
    }

    #[test]
    fn free_vertices_are_not_endpoints() {
        let q = graph(&[Vertex::Free, ent(1), ent(2)], &[(0, 1)]);
        let t = Table(HashMap::from([((1, 2, 5), 0.4)]));
        let out = predict_relations(&q, &t, &[ItemId(5)]).unwrap();
        assert_eq!(out.predicted_edges[0].from, 1);
        assert_eq!(out.predicted_edges[0].to, 2);
    }
}
