//! SPARQL rendering of query graphs and a small basic-graph-pattern
//! evaluator over the in-memory store.

use std::collections::BTreeSet;
use std::fmt;

use crate::assembler::{QueryGraph, Vertex};
use crate::error::{Error, Result};
use crate::store::{ItemId, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    /// Variable name without the leading `?`.
    Var(String),
}

impl Term {
    pub fn var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Iri(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    /// Came from relation prediction rather than assembly.
    pub predicted: bool,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        TriplePattern {
            subject,
            predicate,
            object,
            predicted: false,
        }
    }

    fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryForm {
    Select,
    Ask,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredQuery {
    pub form: QueryForm,
    /// The first variable is the answer variable.
    pub select_vars: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub text: String,
}

impl StructuredQuery {
    /// Builds a query and its canonical text. Every variable is selected, in
    /// order of first appearance; without variables the query is an ASK.
    pub fn from_patterns(patterns: Vec<TriplePattern>) -> Self {
        let mut select_vars: Vec<String> = Vec::new();
        for t in patterns.iter().flat_map(|p| p.terms()) {
            if let Some(v) = t.var() {
                if !select_vars.iter().any(|s| s == v) {
                    select_vars.push(v.to_string());
                }
            }
        }
        let form = if select_vars.is_empty() {
            QueryForm::Ask
        } else {
            QueryForm::Select
        };
        let mut sq = StructuredQuery {
            form,
            select_vars,
            patterns,
            text: String::new(),
        };
        sq.text = sq.render(None);
        sq
    }

    pub fn answer_var(&self) -> Option<&str> {
        self.select_vars.first().map(String::as_str)
    }

    fn render(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str(&format!("# {c}\n"));
        }
        match self.form {
            QueryForm::Select => {
                out.push_str("SELECT");
                for v in &self.select_vars {
                    out.push_str(&format!(" ?{v}"));
                }
                out.push_str(" WHERE {");
            }
            QueryForm::Ask => out.push_str("ASK {"),
        }
        if self.patterns.is_empty() {
            out.push_str(" }\n");
            return out;
        }
        out.push('\n');
        for p in &self.patterns {
            out.push_str(&format!("  {} {} {} .", p.subject, p.predicate, p.object));
            if p.predicted {
                out.push_str(" # predicted");
            }
            out.push('\n');
        }
        out.push_str("}\n");
        out
    }
}

/// Class vertices become `?v<i>` with a type pattern, the free vertex an
/// untyped `?v<i>`, entities their IRI. Type patterns come first, then
/// assembled edges, then predicted ones.
pub fn emit_sparql(q: &QueryGraph, kg: &KnowledgeGraph) -> Result<StructuredQuery> {
    if q.vertices.is_empty() {
        return Err(Error::Invalid(
            "cannot emit SPARQL for an empty query graph".into(),
        ));
    }
    let type_iri = kg.type_predicate_iri().to_string();
    let mut terms = Vec::with_capacity(q.vertices.len());
    let mut patterns = Vec::new();
    for (i, qv) in q.vertices.iter().enumerate() {
        let var = Term::Var(format!("v{i}"));
        match qv.vertex {
            Vertex::Entity(id) => terms.push(Term::Iri(kg.iri(id)?.to_string())),
            Vertex::Class(c) => {
                patterns.push(TriplePattern::new(
                    var.clone(),
                    Term::Iri(type_iri.clone()),
                    Term::Iri(kg.iri(c)?.to_string()),
                ));
                terms.push(var);
            }
            Vertex::Free => terms.push(var),
        }
    }
    for (e, predicted) in q.all_edges() {
        patterns.push(TriplePattern {
            subject: terms[e.from].clone(),
            predicate: Term::Iri(kg.iri(e.predicate)?.to_string()),
            object: terms[e.to].clone(),
            predicted,
        });
    }
    let mut sq = StructuredQuery::from_patterns(patterns);
    if sq.patterns.is_empty() {
        // a lone entity: nothing to match, the entity is the answer
        if let Term::Iri(iri) = &terms[0] {
            sq.text = sq.render(Some(&format!("entity: <{iri}>")));
        }
    }
    Ok(sq)
}

/// Result rows; each row holds one id per entry of `vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bindings {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<ItemId>>,
}

impl Bindings {
    /// True for an ASK that matched, or a SELECT with at least one row.
    pub fn holds(&self) -> bool {
        !self.rows.is_empty()
    }

    /// Values of one variable, in row order.
    pub fn column(&self, var: &str) -> Option<Vec<ItemId>> {
        let i = self.vars.iter().position(|v| v == var)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Tab-separated, header line of variable names, IRIs as values.
    pub fn to_tsv(&self, kg: &KnowledgeGraph) -> Result<String> {
        let mut out = self
            .vars
            .iter()
            .map(|v| format!("?{v}"))
            .collect::<Vec<_>>()
            .join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<&str> = row.iter().map(|&id| kg.iri(id)).collect::<Result<_>>()?;
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Fixed(ItemId),
    Var(usize),
}

struct Matcher<'a> {
    kg: &'a KnowledgeGraph,
    patterns: Vec<[Slot; 3]>,
    binding: Vec<Option<ItemId>>,
    done: Vec<bool>,
    rows: BTreeSet<Vec<ItemId>>,
}

impl Matcher<'_> {
    fn value(&self, s: Slot) -> Option<ItemId> {
        match s {
            Slot::Fixed(id) => Some(id),
            Slot::Var(v) => self.binding[v],
        }
    }

    /// Unprocessed pattern with the most bound positions; lowest index wins
    /// ties.
    fn next_pattern(&self) -> Option<usize> {
        (0..self.patterns.len())
            .filter(|&i| !self.done[i])
            .max_by_key(|&i| {
                let bound = self.patterns[i]
                    .iter()
                    .filter(|&&s| self.value(s).is_some())
                    .count();
                (bound, std::cmp::Reverse(i))
            })
    }

    fn search(&mut self) -> Result<()> {
        let Some(i) = self.next_pattern() else {
            self.rows.insert(
                self.binding
                    .iter()
                    .map(|b| b.expect("all variables bound"))
                    .collect(),
            );
            return Ok(());
        };
        let slots = self.patterns[i];
        let [s, p, o] = slots.map(|x| self.value(x));
        let hits: Vec<_> = self.kg.match_pattern(s, p, o)?.collect();
        self.done[i] = true;
        for t in hits {
            let saved = self.binding.clone();
            let ok = [
                (slots[0], t.subject),
                (slots[1], t.predicate),
                (slots[2], t.object),
            ]
            .into_iter()
            .all(|(slot, id)| match slot {
                Slot::Fixed(f) => f == id,
                Slot::Var(v) => match self.binding[v] {
                    Some(b) => b == id,
                    None => {
                        self.binding[v] = Some(id);
                        true
                    }
                },
            });
            if ok {
                self.search()?;
            }
            self.binding = saved;
        }
        self.done[i] = false;
        Ok(())
    }
}

/// All solutions of the pattern set, sorted by bound ids. Columns follow
/// `select_vars` (every variable is selected). An ASK yields one empty row
/// when it holds and none otherwise.
pub fn evaluate_bgp(sq: &StructuredQuery, kg: &KnowledgeGraph) -> Result<Bindings> {
    let mut vars: Vec<String> = sq.select_vars.clone();
    let mut slot_of = |t: &Term| -> Result<Slot> {
        match t {
            Term::Iri(iri) => kg.resolve(iri).map(Slot::Fixed),
            Term::Var(v) => Ok(Slot::Var(match vars.iter().position(|x| x == v) {
                Some(i) => i,
                None => {
                    vars.push(v.clone());
                    vars.len() - 1
                }
            })),
        }
    };
    let patterns = sq
        .patterns
        .iter()
        .map(|p| {
            Ok([
                slot_of(&p.subject)?,
                slot_of(&p.predicate)?,
                slot_of(&p.object)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = Matcher {
        kg,
        done: vec![false; patterns.len()],
        patterns,
        binding: vec![None; vars.len()],
        rows: BTreeSet::new(),
    };
    m.search()?;
    Ok(Bindings {
        vars,
        rows: m.rows.into_iter().collect(),
    })
}
