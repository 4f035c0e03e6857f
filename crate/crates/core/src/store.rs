//! Dictionary-encoded, fully indexed in-memory triple store.
//!
//! Every IRI or literal is interned once and receives a dense [`ItemId`].
//! Items are partitioned into three kinds: predicates (anything used in the
//! predicate position), classes (objects of the configured type predicate and
//! literal datatypes) and entities (everything else, literals included).
//!
//! Triples are kept in three sorted orderings (SPO, POS, OSP) so that any
//! combination of bound positions resolves to a single range scan.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::ops::Bound;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_TYPE_PREDICATE: &str = "rdf:type";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemKind {
    Entity,
    Class,
    Predicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: ItemId,
    pub predicate: ItemId,
    pub object: ItemId,
}

impl Triple {
    pub fn new(subject: ItemId, predicate: ItemId, object: ItemId) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

type Key = (u32, u32, u32);

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    iris: Vec<String>,
    kinds: Vec<ItemKind>,
    by_iri: HashMap<String, ItemId>,
    spo: BTreeSet<Key>,
    pos: BTreeSet<Key>,
    osp: BTreeSet<Key>,
    types: BTreeMap<ItemId, BTreeSet<ItemId>>,
    type_predicate_iri: String,
    type_predicate: Option<ItemId>,
}

/// Reads a tab-separated triple file (`S\tP\tO` per line, `#` comments).
pub fn load_triples(path: impl AsRef<Path>, type_predicate: &str) -> Result<KnowledgeGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    KnowledgeGraph::parse(&text, type_predicate)
}

fn is_literal(term: &str) -> bool {
    term.starts_with('"')
}

/// Datatype of a typed literal such as `"1954-06-07"^^xsd:date`.
fn literal_datatype(term: &str) -> Option<&str> {
    let close = term.rfind('"')?;
    term[close + 1..]
        .strip_prefix("^^")
        .filter(|dt| !dt.is_empty())
}

impl KnowledgeGraph {
    pub fn parse(text: &str, type_predicate: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    idx + 1,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let fields: Vec<&str> = fields.iter().map(|f| f.trim()).collect();
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::parse(idx + 1, "empty field"));
            }
            rows.push((fields[0], fields[1], fields[2]));
        }
        Self::from_triples(rows, type_predicate)
    }

    pub fn from_triples<'a, I>(triples: I, type_predicate: &str) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let rows: Vec<_> = triples.into_iter().collect();

        let predicates: BTreeSet<&str> = rows.iter().map(|r| r.1).collect();
        let mut classes: BTreeSet<&str> = BTreeSet::new();
        for &(s, p, o) in &rows {
            for term in [s, o] {
                if predicates.contains(term) {
                    return Err(Error::KindConflict {
                        iri: term.to_string(),
                    });
                }
            }
            if p == type_predicate && !is_literal(o) {
                classes.insert(o);
            }
            if let Some(dt) = literal_datatype(o) {
                if predicates.contains(dt) {
                    return Err(Error::KindConflict {
                        iri: dt.to_string(),
                    });
                }
                classes.insert(dt);
            }
        }

        let mut kg = KnowledgeGraph {
            iris: Vec::new(),
            kinds: Vec::new(),
            by_iri: HashMap::new(),
            spo: BTreeSet::new(),
            pos: BTreeSet::new(),
            osp: BTreeSet::new(),
            types: BTreeMap::new(),
            type_predicate_iri: type_predicate.to_string(),
            type_predicate: None,
        };
        let kind_of = |term: &str| {
            if predicates.contains(term) {
                ItemKind::Predicate
            } else if classes.contains(term) {
                ItemKind::Class
            } else {
                ItemKind::Entity
            }
        };

        for &(s, p, o) in &rows {
            let s_id = kg.intern(s, kind_of(s));
            let p_id = kg.intern(p, ItemKind::Predicate);
            let o_id = kg.intern(o, kind_of(o));
            if let Some(dt) = literal_datatype(o) {
                let dt_id = kg.intern(dt, ItemKind::Class);
                kg.types.entry(o_id).or_default().insert(dt_id);
            }
            if p == type_predicate {
                kg.types.entry(s_id).or_default().insert(o_id);
            }
            kg.insert(Triple::new(s_id, p_id, o_id));
        }
        kg.type_predicate = kg.by_iri.get(type_predicate).copied();
        Ok(kg)
    }

    fn intern(&mut self, iri: &str, kind: ItemKind) -> ItemId {
        if let Some(&id) = self.by_iri.get(iri) {
            return id;
        }
        let id = ItemId(self.iris.len() as u32);
        self.iris.push(iri.to_string());
        self.kinds.push(kind);
        self.by_iri.insert(iri.to_string(), id);
        id
    }

    fn insert(&mut self, t: Triple) {
        let (s, p, o) = (t.subject.0, t.predicate.0, t.object.0);
        if self.spo.insert((s, p, o)) {
            self.pos.insert((p, o, s));
            self.osp.insert((o, s, p));
        }
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    pub fn item_count(&self) -> usize {
        self.iris.len()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.iris.len() as u32).map(ItemId)
    }

    pub fn lookup(&self, iri: &str) -> Option<ItemId> {
        self.by_iri.get(iri).copied()
    }

    pub fn resolve(&self, iri: &str) -> Result<ItemId> {
        self.lookup(iri)
            .ok_or_else(|| Error::UnknownIri(iri.to_string()))
    }

    pub fn iri(&self, id: ItemId) -> Result<&str> {
        self.iris
            .get(id.index())
            .map(String::as_str)
            .ok_or(Error::UnknownId(id))
    }

    pub fn kind(&self, id: ItemId) -> Result<ItemKind> {
        self.kinds
            .get(id.index())
            .copied()
            .ok_or(Error::UnknownId(id))
    }

    fn check(&self, id: ItemId) -> Result<()> {
        self.kind(id).map(|_| ())
    }

    /// All items of `kind`, in id order.
    pub fn catalog(&self, kind: ItemKind) -> Vec<ItemId> {
        self.items()
            .filter(|&id| self.kinds[id.index()] == kind)
            .collect()
    }

    pub fn entities(&self) -> Vec<ItemId> {
        self.catalog(ItemKind::Entity)
    }

    pub fn classes(&self) -> Vec<ItemId> {
        self.catalog(ItemKind::Class)
    }

    pub fn predicates(&self) -> Vec<ItemId> {
        self.catalog(ItemKind::Predicate)
    }

    pub fn type_predicate_iri(&self) -> &str {
        &self.type_predicate_iri
    }

    /// Id of the type predicate, if it occurs in the data.
    pub fn type_predicate(&self) -> Option<ItemId> {
        self.type_predicate
    }

    /// Classes an entity (or literal) is declared to belong to.
    pub fn types_of(&self, id: ItemId) -> impl Iterator<Item = ItemId> + '_ {
        self.types.get(&id).into_iter().flatten().copied()
    }

    pub fn has_triple(&self, s: ItemId, p: ItemId, o: ItemId) -> Result<bool> {
        self.check(s)?;
        self.check(p)?;
        self.check(o)?;
        Ok(self.spo.contains(&(s.0, p.0, o.0)))
    }

    /// Every triple matching the bound positions (`None` is a wildcard).
    pub fn match_pattern(
        &self,
        s: Option<ItemId>,
        p: Option<ItemId>,
        o: Option<ItemId>,
    ) -> Result<Box<dyn Iterator<Item = Triple> + '_>> {
        for id in [s, p, o].into_iter().flatten() {
            self.check(id)?;
        }
        let it: Box<dyn Iterator<Item = Triple> + '_> = match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let hit = self.spo.contains(&(s.0, p.0, o.0));
                Box::new(hit.then(|| Triple::new(s, p, o)).into_iter())
            }
            (Some(s), Some(p), None) => {
                Box::new(prefix2(&self.spo, s.0, p.0).map(|&(s, p, o)| spo_triple(s, p, o)))
            }
            (Some(s), None, None) => {
                Box::new(prefix1(&self.spo, s.0).map(|&(s, p, o)| spo_triple(s, p, o)))
            }
            (None, Some(p), Some(o)) => {
                Box::new(prefix2(&self.pos, p.0, o.0).map(|&(p, o, s)| spo_triple(s, p, o)))
            }
            (None, Some(p), None) => {
                Box::new(prefix1(&self.pos, p.0).map(|&(p, o, s)| spo_triple(s, p, o)))
            }
            (Some(s), None, Some(o)) => {
                Box::new(prefix2(&self.osp, o.0, s.0).map(|&(o, s, p)| spo_triple(s, p, o)))
            }
            (None, None, Some(o)) => {
                Box::new(prefix1(&self.osp, o.0).map(|&(o, s, p)| spo_triple(s, p, o)))
            }
            (None, None, None) => Box::new(self.spo.iter().map(|&(s, p, o)| spo_triple(s, p, o))),
        };
        Ok(it)
    }

    /// Iterates all triples in SPO order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&(s, p, o)| spo_triple(s, p, o))
    }
}

fn spo_triple(s: u32, p: u32, o: u32) -> Triple {
    Triple::new(ItemId(s), ItemId(p), ItemId(o))
}

fn prefix1(set: &BTreeSet<Key>, a: u32) -> impl Iterator<Item = &Key> {
    set.range((
        Bound::Included((a, 0, 0)),
        Bound::Included((a, u32::MAX, u32::MAX)),
    ))
}

fn prefix2(set: &BTreeSet<Key>, a: u32, b: u32) -> impl Iterator<Item = &Key> {
    set.range((
        Bound::Included((a, b, 0)),
        Bound::Included((a, b, u32::MAX)),
    ))
}
