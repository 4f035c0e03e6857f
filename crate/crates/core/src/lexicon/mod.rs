//! Phase-I: lexical matching of keyword spans against graph items, followed
//! by segmentation into annotated queries.
//!
//! Matching is purely lexical. Each item is reachable through its explicit
//! labels, relation paraphrases and an automatic label derived from the local
//! name of its IRI (`dbo:deathDate` is reachable as "death date"). A span
//! matches exactly (score 1.0) or, when fuzzy matching is on, with at most one
//! edit per word (score 0.8).

mod segment;

pub use segment::{
    build_term_graph, enumerate_maximal_cliques, maximal_cliques, rank_segmentations,
    AnnotatedQuery, TermGraph, DEFAULT_CLIQUE_NODE_CAP,
};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::store::{ItemId, ItemKind, KnowledgeGraph};

pub const EXACT_SCORE: f64 = 1.0;
pub const FUZZY_SCORE: f64 = 0.8;
/// Words shorter than this only ever match exactly.
const FUZZY_MIN_WORD_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Character {
    Entity,
    Class,
    Relation,
}

impl Character {
    pub fn of_kind(kind: ItemKind) -> Self {
        match kind {
            ItemKind::Entity => Character::Entity,
            ItemKind::Class => Character::Class,
            ItemKind::Predicate => Character::Relation,
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Character::Entity => "entity",
            Character::Class => "class",
            Character::Relation => "relation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub surface: String,
    pub item: ItemId,
    pub character: Character,
    pub match_score: f64,
}

/// Half-open token interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTerm {
    pub span: Span,
    pub text: String,
    pub character: Character,
    /// At most `k` `(item, score)` pairs, score-descending then id-ascending.
    pub candidates: Vec<(ItemId, f64)>,
}

impl CandidateTerm {
    pub fn best_score(&self) -> f64 {
        self.candidates.first().map_or(0.0, |c| c.1)
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.candidates.iter().map(|c| c.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<LexiconEntry>>,
    max_words: usize,
}

/// Lowercases and collapses whitespace.
pub fn normalize(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits keyword text into tokens, trimming punctuation at token edges.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn stopwords() -> &'static BTreeSet<String> {
    static WORDS: OnceLock<BTreeSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| {
        include_str!("../../data/stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(&token.to_lowercase())
}

/// Human-readable label from the local name of an IRI: `dbo:deathDate` →
/// "death date", `res:USA_Today` → "usa today".
pub fn auto_label(iri: &str) -> Option<String> {
    if iri.starts_with('"') {
        return None;
    }
    let local = iri.rsplit(['/', '#', ':']).next().unwrap_or(iri);
    let chars: Vec<char> = local.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '_' | '-' | '.') || c.is_whitespace() {
            out.push(' ');
            continue;
        }
        if c.is_uppercase() && i > 0 {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.push(c);
    }
    let label = normalize(&out);
    (!label.is_empty()).then_some(label)
}

/// Builds the lexicon from the store's items, an optional label file
/// (`itemIRI\tlabel`) and an optional paraphrase file (`phrase\tpredicateIRI`).
pub fn build_lexicon(
    kg: &KnowledgeGraph,
    labels_path: Option<&Path>,
    paraphrase_path: Option<&Path>,
) -> Result<Lexicon> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let labels = labels_path.map(read).transpose()?;
    let paraphrases = paraphrase_path.map(read).transpose()?;
    Lexicon::from_sources(
        kg,
        labels.as_deref().unwrap_or(""),
        paraphrases.as_deref().unwrap_or(""),
    )
}

fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Result<(&str, &str)>)> {
    text.lines().enumerate().filter_map(|(idx, raw)| {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            return None;
        }
        let mut parts = line.split('\t');
        let row = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                Ok((a.trim(), b.trim()))
            }
            _ => Err(Error::parse(idx + 1, "expected 2 tab-separated fields")),
        };
        Some((idx + 1, row))
    })
}

impl Lexicon {
    pub fn from_sources(kg: &KnowledgeGraph, labels: &str, paraphrases: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for id in kg.items() {
            if let Some(label) = auto_label(kg.iri(id)?) {
                lex.add(&label, id, Character::of_kind(kg.kind(id)?));
            }
        }
        for (line, row) in tsv_rows(labels) {
            let (iri, label) = row?;
            let id = kg
                .lookup(iri)
                .ok_or_else(|| Error::parse(line, format!("unknown IRI `{iri}`")))?;
            lex.add(label, id, Character::of_kind(kg.kind(id)?));
        }
        for (line, row) in tsv_rows(paraphrases) {
            let (phrase, iri) = row?;
            let id = kg
                .lookup(iri)
                .ok_or_else(|| Error::parse(line, format!("unknown IRI `{iri}`")))?;
            if kg.kind(id)? != ItemKind::Predicate {
                return Err(Error::parse(line, format!("`{iri}` is not a predicate")));
            }
            lex.add(phrase, id, Character::Relation);
        }
        Ok(lex)
    }

    pub fn add(&mut self, surface: &str, item: ItemId, character: Character) {
        let surface = normalize(surface);
        if surface.is_empty() {
            return;
        }
        self.max_words = self.max_words.max(surface.split(' ').count());
        let list = self.entries.entry(surface.clone()).or_default();
        if !list
            .iter()
            .any(|e| e.item == item && e.character == character)
        {
            list.push(LexiconEntry {
                surface,
                item,
                character,
                match_score: EXACT_SCORE,
            });
        }
    }

    pub fn get(&self, surface: &str) -> &[LexiconEntry] {
        self.entries
            .get(&normalize(surface))
            .map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn fuzzy_matches<'a>(&'a self, words: &'a [String]) -> impl Iterator<Item = &'a LexiconEntry> {
        self.entries
            .iter()
            .filter(move |(surface, _)| words_within_one_edit(words, surface))
            .flat_map(|(_, list)| list.iter())
    }
}

fn words_within_one_edit(words: &[String], surface: &str) -> bool {
    let mut n = 0;
    let mut differs = false;
    for (i, s) in surface.split(' ').enumerate() {
        n += 1;
        let Some(w) = words.get(i) else {
            return false;
        };
        if w == s {
            continue;
        }
        if w.chars().count() < FUZZY_MIN_WORD_LEN || s.chars().count() < FUZZY_MIN_WORD_LEN {
            return false;
        }
        if !within_one_edit(w, s) {
            return false;
        }
        differs = true;
    }
    differs && n == words.len()
}

/// Levenshtein distance ≤ 1.
fn within_one_edit(a: &str, b: &str) -> bool {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() {
        (&a, &b)
    } else {
        (&b, &a)
    };
    if long.len() - short.len() > 1 {
        return false;
    }
    let prefix = short
        .iter()
        .zip(long.iter())
        .take_while(|(x, y)| x == y)
        .count();
    if short.len() == long.len() {
        prefix == short.len() || short[prefix + 1..] == long[prefix + 1..]
    } else {
        short[prefix..] == long[prefix + 1..]
    }
}

/// Emits one candidate term per (span, character) that matches the lexicon,
/// keeping at most `k` candidates each. Spans made only of stopwords are
/// skipped.
pub fn generate_candidate_terms(
    tokens: &[String],
    lexicon: &Lexicon,
    k: usize,
    fuzzy: bool,
) -> Vec<CandidateTerm> {
    let words: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut out = Vec::new();
    for start in 0..words.len() {
        let max_end = words.len().min(start + lexicon.max_words.max(1));
        for end in start + 1..=max_end {
            let span_words = &words[start..end];
            if span_words.iter().all(|w| is_stopword(w)) {
                continue;
            }
            let surface = span_words.join(" ");
            let mut hits: HashMap<(Character, ItemId), f64> = HashMap::new();
            for e in lexicon.get(&surface) {
                hits.insert((e.character, e.item), e.match_score);
            }
            if fuzzy {
                for e in lexicon.fuzzy_matches(span_words) {
                    hits.entry((e.character, e.item)).or_insert(FUZZY_SCORE);
                }
            }
            let mut by_char: BTreeMap<Character, Vec<(ItemId, f64)>> = BTreeMap::new();
            for ((c, item), score) in hits {
                by_char.entry(c).or_default().push((item, score));
            }
            for (character, mut candidates) in by_char {
                candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                candidates.truncate(k);
                if candidates.is_empty() {
                    continue;
                }
                out.push(CandidateTerm {
                    span: Span::new(start, end),
                    text: tokens[start..end].join(" "),
                    character,
                    candidates,
                });
            }
        }
    }
    out
}
