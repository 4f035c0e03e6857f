//! Candidate term graph, maximal-clique segmentation and ranking.

use std::cmp::Ordering;

use super::{is_stopword, CandidateTerm, Character, Span};
use crate::error::{Error, Result};

pub const DEFAULT_CLIQUE_NODE_CAP: usize = 64;

/// Nodes are candidate terms; two terms are adjacent iff their spans share no
/// token.
#[derive(Debug, Clone)]
pub struct TermGraph {
    pub nodes: Vec<CandidateTerm>,
    adjacency: Vec<Vec<bool>>,
}

impl TermGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a][b]
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }
}

pub fn build_term_graph(candidates: Vec<CandidateTerm>) -> TermGraph {
    let n = candidates.len();
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let apart = !candidates[i].span.overlaps(&candidates[j].span);
            adjacency[i][j] = apart;
            adjacency[j][i] = apart;
        }
    }
    TermGraph {
        nodes: candidates,
        adjacency,
    }
}

pub fn enumerate_maximal_cliques(graph: &TermGraph, node_cap: usize) -> Result<Vec<Vec<usize>>> {
    if graph.len() > node_cap {
        return Err(Error::ResourceLimit(format!(
            "{} candidate terms exceed the clique node cap of {node_cap}; \
             tighten matching (e.g. disable fuzzy matching) or lower k",
            graph.len()
        )));
    }
    Ok(maximal_cliques(graph.adjacency()))
}

/// Bron–Kerbosch with Tomita pivoting over a symmetric adjacency matrix.
/// Cliques come back with ascending members, sorted lexicographically.
pub fn maximal_cliques(adjacency: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut r = Vec::new();
    bron_kerbosch(adjacency, &mut r, (0..n).collect(), Vec::new(), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn bron_kerbosch(
    adj: &[Vec<bool>],
    r: &mut Vec<usize>,
    mut p: Vec<usize>,
    mut x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    // pivot maximizing |P ∩ N(u)|
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| (p.iter().filter(|&&v| adj[u][v]).count(), usize::MAX - u))
        .expect("P is nonempty");
    let todo: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
    for v in todo {
        let next_p = p.iter().copied().filter(|&w| adj[v][w]).collect();
        let next_x = x.iter().copied().filter(|&w| adj[v][w]).collect();
        r.push(v);
        bron_kerbosch(adj, r, next_p, next_x, out);
        r.pop();
        p.retain(|&w| w != v);
        x.push(v);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedQuery {
    /// Terms in span order.
    pub terms: Vec<CandidateTerm>,
    pub segmentation_score: f64,
    /// Entity/class term count.
    pub n: usize,
    /// Relation term count.
    pub m: usize,
}

impl AnnotatedQuery {
    pub fn new(mut terms: Vec<CandidateTerm>, segmentation_score: f64) -> Self {
        terms.sort_by(|a, b| a.span.cmp(&b.span).then(a.character.cmp(&b.character)));
        let m = terms
            .iter()
            .filter(|t| t.character == Character::Relation)
            .count();
        AnnotatedQuery {
            n: terms.len() - m,
            m,
            terms,
            segmentation_score,
        }
    }

    pub fn covered_tokens(&self) -> usize {
        self.terms.iter().map(|t| t.span.len()).sum()
    }

    fn spans(&self) -> Vec<(Span, Character)> {
        self.terms.iter().map(|t| (t.span, t.character)).collect()
    }

    /// Compact `"text":character` listing.
    pub fn describe(&self) -> String {
        self.terms
            .iter()
            .map(|t| format!("\"{}\":{}", t.text, t.character))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Coverage of non-stopword tokens plus the mean best match score of the
/// chosen terms.
pub fn segmentation_score(terms: &[&CandidateTerm], tokens: &[String]) -> f64 {
    let content: Vec<usize> = (0..tokens.len())
        .filter(|&i| !is_stopword(&tokens[i]))
        .collect();
    let coverage = if content.is_empty() {
        0.0
    } else {
        let covered = content
            .iter()
            .filter(|&&i| terms.iter().any(|t| t.span.start <= i && i < t.span.end))
            .count();
        covered as f64 / content.len() as f64
    };
    let quality = if terms.is_empty() {
        0.0
    } else {
        terms.iter().map(|t| t.best_score()).sum::<f64>() / terms.len() as f64
    };
    coverage + quality
}

fn rank_order(a: &AnnotatedQuery, b: &AnnotatedQuery) -> Ordering {
    b.segmentation_score
        .total_cmp(&a.segmentation_score)
        .then(b.covered_tokens().cmp(&a.covered_tokens()))
        .then(a.terms.len().cmp(&b.terms.len()))
        .then_with(|| a.spans().cmp(&b.spans()))
}

pub fn rank_segmentations(
    cliques: &[Vec<usize>],
    candidates: &[CandidateTerm],
    tokens: &[String],
    top_n: usize,
) -> Vec<AnnotatedQuery> {
    let mut ranked: Vec<AnnotatedQuery> = cliques
        .iter()
        .filter(|c| !c.is_empty())
        .map(|clique| {
            let terms: Vec<&CandidateTerm> = clique.iter().map(|&i| &candidates[i]).collect();
            let score = segmentation_score(&terms, tokens);
            AnnotatedQuery::new(terms.into_iter().cloned().collect(), score)
        })
        .collect();
    ranked.sort_by(rank_order);
    ranked.truncate(top_n);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ItemId;

    fn term(start: usize, end: usize, character: Character, score: f64) -> CandidateTerm {
        CandidateTerm {
            span: Span::new(start, end),
            text: format!("t{start}{end}"),
            character,
            candidates: vec![(ItemId(start as u32), score)],
        }
    }

    fn adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; n]; n];
        for &(i, j) in edges {
            a[i][j] = true;
            a[j][i] = true;
        }
        a
    }

    #[test]
    fn overlapping_terms_are_not_adjacent() {
        let g = build_term_graph(vec![
            term(3, 4, Character::Class, 1.0),
            term(3, 6, Character::Entity, 1.0),
            term(0, 1, Character::Class, 1.0),
            term(1, 2, Character::Relation, 1.0),
        ]);
        assert!(!g.adjacent(0, 1));
        assert!(g.adjacent(2, 3));
        let single = build_term_graph(vec![term(0, 1, Character::Class, 1.0)]);
        assert_eq!(single.len(), 1);
        assert!(!single.adjacent(0, 0));
    }

    #[test]
    fn small_clique_cases() {
        assert_eq!(
            maximal_cliques(&adj(3, &[(0, 1), (1, 2)])),
            vec![vec![0, 1], vec![1, 2]]
        );
        assert_eq!(
            maximal_cliques(&adj(3, &[(0, 1), (1, 2), (0, 2)])),
            vec![vec![0, 1, 2]]
        );
        assert_eq!(
            maximal_cliques(&adj(3, &[])),
            vec![vec![0], vec![1], vec![2]]
        );
        assert!(maximal_cliques(&[]).is_empty());
    }

    #[test]
    fn node_cap_is_enforced() {
        let terms: Vec<_> = (0..5)
            .map(|i| term(i, i + 1, Character::Class, 1.0))
            .collect();
        let g = build_term_graph(terms);
        assert!(matches!(
            enumerate_maximal_cliques(&g, 4),
            Err(Error::ResourceLimit(_))
        ));
        assert_eq!(enumerate_maximal_cliques(&g, 5).unwrap().len(), 1);
    }

    #[test]
    fn coverage_dominates_ranking() {
        let tokens: Vec<String> = ["a1", "b1", "c1", "d1", "e1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let candidates = vec![
            term(0, 5, Character::Entity, 1.0),
            term(0, 3, Character::Entity, 1.0),
        ];
        let cliques = vec![vec![0], vec![1]];
        let top = rank_segmentations(&cliques, &candidates, &tokens, 1);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].terms[0].span, Span::new(0, 5));
    }

    #[test]
    fn single_term_gives_one_query() {
        let tokens = vec!["x".to_string()];
        let candidates = vec![term(0, 1, Character::Entity, 1.0)];
        let top = rank_segmentations(&[vec![0]], &candidates, &tokens, 5);
        assert_eq!(top.len(), 1);
        assert_eq!((top[0].n, top[0].m), (1, 0));
        assert!(rank_segmentations(&[], &candidates, &tokens, 5).is_empty());
    }

    #[test]
    fn stopwords_do_not_penalize() {
        let tokens: Vec<String> = ["graduate", "from"].iter().map(|s| s.to_string()).collect();
        let t = term(0, 1, Character::Relation, 1.0);
        assert_eq!(segmentation_score(&[&t], &tokens), 2.0);
    }
}
