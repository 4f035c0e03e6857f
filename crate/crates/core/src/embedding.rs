//! Translation embeddings and the triple assembly cost.
//!
//! Items (entities, classes and predicates alike) are embedded in the same
//! `d`-dimensional space so that `s + p ≈ o` for stored triples. The cost of
//! assembling two vertices with a predicate is the smaller of the two directed
//! L2 residuals, `min(|v1 + p - v2|, |v2 + p - v1|)`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::store::{ItemId, ItemKind, KnowledgeGraph, Triple};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Vec<f64>,
    present: Vec<bool>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, capacity: usize) -> Self {
        EmbeddingTable {
            dim,
            data: vec![0.0; dim * capacity],
            present: vec![false; capacity],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of items that carry a vector.
    pub fn len(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.present.get(id.index()).copied().unwrap_or(false)
    }

    pub fn vector(&self, id: ItemId) -> Result<&[f64]> {
        if !self.contains(id) {
            return Err(Error::MissingVector(id));
        }
        let at = id.index() * self.dim;
        Ok(&self.data[at..at + self.dim])
    }

    pub fn set(&mut self, id: ItemId, values: &[f64]) {
        assert_eq!(values.len(), self.dim, "vector length must equal dim");
        let idx = id.index();
        if idx >= self.present.len() {
            self.present.resize(idx + 1, false);
            self.data.resize((idx + 1) * self.dim, 0.0);
        }
        self.present[idx] = true;
        self.data[idx * self.dim..(idx + 1) * self.dim].copy_from_slice(values);
    }

    fn slot_mut(&mut self, id: ItemId) -> &mut [f64] {
        let at = id.index() * self.dim;
        &mut self.data[at..at + self.dim]
    }

    fn normalize(&mut self, id: ItemId) {
        let v = self.slot_mut(id);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| ItemId(i as u32))
    }
}

/// Which way the cheaper residual points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `v1 -p-> v2`
    Forward,
    /// `v2 -p-> v1`
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyCost {
    pub cost: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondensedCost {
    pub cost: f64,
    pub predicate: ItemId,
    pub direction: Direction,
}

fn residual_norm(from: &[f64], p: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .zip(p)
        .zip(to)
        .map(|((a, b), c)| {
            let r = a + b - c;
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

pub fn triple_assembly_cost(
    table: &EmbeddingTable,
    v1: ItemId,
    v2: ItemId,
    p: ItemId,
) -> Result<AssemblyCost> {
    let (a, b, r) = (table.vector(v1)?, table.vector(v2)?, table.vector(p)?);
    let forward = residual_norm(a, r, b);
    let backward = residual_norm(b, r, a);
    Ok(if forward <= backward {
        AssemblyCost {
            cost: forward,
            direction: Direction::Forward,
        }
    } else {
        AssemblyCost {
            cost: backward,
            direction: Direction::Backward,
        }
    })
}

/// Cheapest member of a predicate set for the pair `(v1, v2)`; ties go to the
/// smaller predicate id.
pub fn condensed_edge_weight(
    table: &EmbeddingTable,
    v1: ItemId,
    v2: ItemId,
    predicates: &[ItemId],
) -> Result<CondensedCost> {
    let mut sorted = predicates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best: Option<CondensedCost> = None;
    for p in sorted {
        let c = triple_assembly_cost(table, v1, v2, p)?;
        if best.is_none_or(|b| c.cost < b.cost) {
            best = Some(CondensedCost {
                cost: c.cost,
                predicate: p,
                direction: c.direction,
            });
        }
    }
    best.ok_or_else(|| Error::Invalid("empty predicate set".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub seed: u64,
    /// Resample corruptions that happen to be stored triples.
    pub filtered: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 32,
            epochs: 200,
            learning_rate: 0.01,
            margin: 1.0,
            seed: 7,
            filtered: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config("dim must be at least 2".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(Error::Config("margin must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    /// Mean hinge loss over the last epoch (0 when no epoch ran).
    pub final_loss: f64,
}

/// Directed translation distance `|s + p - o|`.
pub fn translation_distance(table: &EmbeddingTable, t: Triple) -> Result<f64> {
    Ok(residual_norm(
        table.vector(t.subject)?,
        table.vector(t.predicate)?,
        table.vector(t.object)?,
    ))
}

/// `max(0, margin + d(pos) - d(neg))`.
pub fn margin_loss(table: &EmbeddingTable, pos: Triple, neg: Triple, margin: f64) -> Result<f64> {
    let l = margin + translation_distance(table, pos)? - translation_distance(table, neg)?;
    Ok(l.max(0.0))
}

/// Analytic gradient of [`margin_loss`] with respect to every vector it
/// touches. Empty when the hinge is inactive.
pub fn margin_loss_gradient(
    table: &EmbeddingTable,
    pos: Triple,
    neg: Triple,
    margin: f64,
) -> Result<Vec<(ItemId, Vec<f64>)>> {
    if margin_loss(table, pos, neg, margin)? <= 0.0 {
        return Ok(Vec::new());
    }
    let dim = table.dim();
    let unit_residual = |t: Triple| -> Result<Vec<f64>> {
        let (s, p, o) = (
            table.vector(t.subject)?,
            table.vector(t.predicate)?,
            table.vector(t.object)?,
        );
        let r: Vec<f64> = (0..dim).map(|i| s[i] + p[i] - o[i]).collect();
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(if norm > 0.0 {
            r.into_iter().map(|x| x / norm).collect()
        } else {
            vec![0.0; dim]
        })
    };
    let gp = unit_residual(pos)?;
    let gn = unit_residual(neg)?;

    let mut grads: Vec<(ItemId, Vec<f64>)> = Vec::with_capacity(6);
    let mut add = |id: ItemId, g: &[f64], sign: f64| {
        let slot = match grads.iter().position(|(k, _)| *k == id) {
            Some(i) => i,
            None => {
                grads.push((id, vec![0.0; dim]));
                grads.len() - 1
            }
        };
        for (acc, x) in grads[slot].1.iter_mut().zip(g) {
            *acc += sign * x;
        }
    };
    add(pos.subject, &gp, 1.0);
    add(pos.predicate, &gp, 1.0);
    add(pos.object, &gp, -1.0);
    add(neg.subject, &gn, -1.0);
    add(neg.predicate, &gn, -1.0);
    add(neg.object, &gn, 1.0);
    Ok(grads)
}

/// Margin-ranking SGD with uniform head/tail corruption. Entity and class
/// vectors are renormalized to unit length after every epoch.
pub fn train_transe(
    kg: &KnowledgeGraph,
    config: &TrainConfig,
) -> Result<(EmbeddingTable, TrainReport)> {
    config.validate()?;
    if kg.is_empty() {
        return Err(Error::Invalid(
            "cannot train on a graph with no triples".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.dim;
    let mut table = EmbeddingTable::new(dim, kg.item_count());
    let bound = 6.0 / (dim as f64).sqrt();
    let mut buf = vec![0.0; dim];
    for id in kg.items() {
        buf.iter_mut()
            .for_each(|x| *x = rng.gen_range(-bound..bound));
        table.set(id, &buf);
        table.normalize(id);
    }

    let nodes: Vec<ItemId> = kg
        .items()
        .filter(|&id| kg.kind(id).is_ok_and(|k| k != ItemKind::Predicate))
        .collect();
    let triples: Vec<Triple> = kg.triples().collect();
    let known: HashSet<Triple> = triples.iter().copied().collect();
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut final_loss = 0.0;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let pos = triples[i];
            let neg = corrupt(pos, &nodes, &known, config.filtered, &mut rng);
            let loss = margin_loss(&table, pos, neg, config.margin)?;
            if loss <= 0.0 {
                continue;
            }
            total += loss;
            for (id, g) in margin_loss_gradient(&table, pos, neg, config.margin)? {
                for (x, d) in table.slot_mut(id).iter_mut().zip(&g) {
                    *x -= config.learning_rate * d;
                }
            }
        }
        for &id in &nodes {
            table.normalize(id);
        }
        final_loss = total / triples.len() as f64;
    }

    Ok((
        table,
        TrainReport {
            epochs: config.epochs,
            final_loss,
        },
    ))
}

fn corrupt(
    t: Triple,
    nodes: &[ItemId],
    known: &HashSet<Triple>,
    filtered: bool,
    rng: &mut impl Rng,
) -> Triple {
    const MAX_TRIES: usize = 16;
    let mut candidate = t;
    for _ in 0..MAX_TRIES {
        let replacement = nodes[rng.gen_range(0..nodes.len())];
        candidate = if rng.gen_bool(0.5) {
            Triple::new(replacement, t.predicate, t.object)
        } else {
            Triple::new(t.subject, t.predicate, replacement)
        };
        if !filtered || !known.contains(&candidate) {
            break;
        }
    }
    candidate
}

/// Writes `dim=<d>` followed by one `iri\tf1 f2 ... fd` row per vector.
pub fn save_table(
    table: &EmbeddingTable,
    kg: &KnowledgeGraph,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_table(table, kg)?).map_err(|e| Error::io(path, e))
}

pub fn format_table(table: &EmbeddingTable, kg: &KnowledgeGraph) -> Result<String> {
    let mut out = format!("dim={}\n", table.dim());
    for id in table.ids() {
        let v = table.vector(id)?;
        out.push_str(kg.iri(id)?);
        out.push('\t');
        for (i, x) in v.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            // `{}` on f64 is the shortest representation that round-trips
            write!(out, "{x}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn load_table(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, kg)
}

pub fn parse_table(text: &str, kg: &KnowledgeGraph) -> Result<EmbeddingTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("missing `dim=<d>` header".into()))?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::Format(format!("bad header `{header}`")))?;
    let mut table = EmbeddingTable::new(dim, kg.item_count());
    let mut row = Vec::with_capacity(dim);
    for (idx, line) in lines {
        let (iri, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::Format(format!("line {}: missing tab", idx + 1)))?;
        row.clear();
        for tok in values.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad number `{tok}`", idx + 1)))?;
            row.push(x);
        }
        if row.len() != dim {
            return Err(Error::Format(format!(
                "line {}: expected {dim} values, found {}",
                idx + 1,
                row.len()
            )));
        }
        table.set(kg.resolve(iri)?, &row);
    }
    Ok(table)
}
