use std::ops::RangeInclusive;

use rand::Rng;

use super::{CandidateSets, CondensedBipartiteGraph, EdgeSet, Vertex, VertexSet};
use crate::embedding::{CondensedCost, Direction};
use crate::store::ItemId;

/// Shape of synthetic assembly instances. Every set gets between 1 and `k`
/// members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceShape {
    pub vertex_sets: RangeInclusive<usize>,
    pub edge_sets: RangeInclusive<usize>,
    pub k: usize,
}

impl InstanceShape {
    pub fn new(
        vertex_sets: RangeInclusive<usize>,
        edge_sets: RangeInclusive<usize>,
        k: usize,
    ) -> Self {
        InstanceShape {
            vertex_sets,
            edge_sets,
            k,
        }
    }
}

/// Random instance with condensed weights drawn uniformly from `[0, 1)`.
/// At least two vertex sets are generated whenever there is an edge set.
pub fn random_instance(rng: &mut impl Rng, shape: &InstanceShape) -> CondensedBipartiteGraph {
    let k = shape.k.max(1);
    let m = rng.gen_range(shape.edge_sets.clone());
    let mut n = rng.gen_range(shape.vertex_sets.clone());
    if m > 0 {
        n = n.max(2);
    }
    let mut next_id = 0u32;
    let mut fresh = || {
        next_id += 1;
        ItemId(next_id - 1)
    };
    let vertex_sets = (0..n)
        .map(|_| {
            let size = rng.gen_range(1..=k);
            VertexSet {
                members: (0..size).map(|_| Vertex::Entity(fresh())).collect(),
                term: None,
            }
        })
        .collect();
    let edge_sets = (0..m)
        .map(|_| {
            let size = rng.gen_range(1..=k);
            EdgeSet {
                predicates: (0..size).map(|_| fresh()).collect(),
                term: None,
            }
        })
        .collect();
    let sets = CandidateSets {
        vertex_sets,
        edge_sets,
    };
    CondensedBipartiteGraph::from_weights(sets, |sets, _, j| {
        let preds = &sets.edge_sets[j].predicates;
        Ok(CondensedCost {
            cost: rng.gen::<f64>(),
            predicate: preds[rng.gen_range(0..preds.len())],
            direction: if rng.gen_bool(0.5) {
                Direction::Forward
            } else {
                Direction::Backward
            },
        })
    })
    .expect("generated sets are well formed")
}
