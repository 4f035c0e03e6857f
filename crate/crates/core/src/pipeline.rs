//! Keywords to answers, plus the lower-bound benchmark harness.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembler::{
    build_candidate_sets, build_condensed_graph, random_instance, solve_qga, CandidateSets,
    CondensedBipartiteGraph, EdgeCostSource, InstanceShape, LowerBound, QueryGraph, SearchStats,
    Vertex,
};
use crate::error::{Error, Result};
use crate::lexicon::{
    build_term_graph, enumerate_maximal_cliques, generate_candidate_terms, rank_segmentations,
    AnnotatedQuery, Lexicon, DEFAULT_CLIQUE_NODE_CAP,
};
use crate::predictor::predict_relations;
use crate::sparql::{emit_sparql, evaluate_bgp, Bindings, QueryForm, StructuredQuery};
use crate::store::{ItemId, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Candidates kept per term.
    pub k: usize,
    /// Annotated queries carried into assembly.
    pub top_n: usize,
    pub bound: LowerBound,
    pub predict: bool,
    pub fuzzy: bool,
    pub clique_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 10,
            top_n: 5,
            bound: LowerBound::Greedy,
            predict: true,
            fuzzy: true,
            clique_cap: DEFAULT_CLIQUE_NODE_CAP,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.top_n == 0 {
            return Err(Error::Config("top-n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Top-N segmentations of `tokens`. With fuzzy matching on and too many
/// candidate terms for clique enumeration, falls back to exact matching;
/// the flag in the result says whether fuzzy matches were used.
pub fn annotate(
    tokens: &[String],
    lexicon: &Lexicon,
    config: &PipelineConfig,
) -> Result<(Vec<AnnotatedQuery>, bool)> {
    let run = |fuzzy: bool| -> Result<Vec<AnnotatedQuery>> {
        let candidates = generate_candidate_terms(tokens, lexicon, config.k, fuzzy);
        let graph = build_term_graph(candidates);
        let cliques = enumerate_maximal_cliques(&graph, config.clique_cap)?;
        Ok(rank_segmentations(
            &cliques,
            &graph.nodes,
            tokens,
            config.top_n,
        ))
    };
    if config.fuzzy {
        match run(true) {
            Ok(aqs) => return Ok((aqs, true)),
            Err(Error::ResourceLimit(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((run(false)?, false))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AqReport {
    pub aq: AnnotatedQuery,
    pub sets: Option<CandidateSets>,
    pub stats: Option<SearchStats>,
    /// Edges of the assembled graph that conflict with the chosen matching.
    pub conflicts_resolved: usize,
    /// Assembled, then predicted.
    pub query: Option<QueryGraph>,
    pub normalized_cost: Option<f64>,
    /// Why this annotated query produced no query graph.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub fuzzy_used: bool,
    pub reports: Vec<AqReport>,
    /// Index into `reports`.
    pub winner: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub query: QueryGraph,
    pub sparql: StructuredQuery,
    pub bindings: Bindings,
    pub diagnostics: Diagnostics,
}

impl Answer {
    /// Answer set as strings: distinct IRIs of the answer variable, the
    /// entity itself for a lone-entity query, or `true`/`false` for an ASK.
    pub fn answers(&self, kg: &KnowledgeGraph) -> Result<Vec<String>> {
        match self.sparql.form {
            QueryForm::Select => {
                let var = self.sparql.answer_var().expect("select has variables");
                let mut out: Vec<String> = self
                    .bindings
                    .column(var)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|id| kg.iri(id).map(str::to_string))
                    .collect::<Result<_>>()?;
                out.sort();
                out.dedup();
                Ok(out)
            }
            QueryForm::Ask if self.sparql.patterns.is_empty() => {
                match self.query.vertices[0].vertex {
                    Vertex::Entity(id) => Ok(vec![kg.iri(id)?.to_string()]),
                    _ => Ok(Vec::new()),
                }
            }
            QueryForm::Ask => Ok(vec![self.bindings.holds().to_string()]),
        }
    }
}

/// Per-edge cost of a finished query graph; an edgeless graph costs 0.
fn normalized_cost(q: &QueryGraph) -> f64 {
    let edges = q.edge_count();
    if edges == 0 {
        0.0
    } else {
        (q.total_cost + q.predicted_cost()) / edges as f64
    }
}

fn assemble(
    aq: &AnnotatedQuery,
    kg: &KnowledgeGraph,
    costs: &impl EdgeCostSource,
    config: &PipelineConfig,
) -> Result<AqReport> {
    let mut report = AqReport {
        aq: aq.clone(),
        sets: None,
        stats: None,
        conflicts_resolved: 0,
        query: None,
        normalized_cost: None,
        failure: None,
    };
    let sets = match build_candidate_sets(aq) {
        Ok(s) => s,
        Err(e) => {
            report.failure = Some(e.to_string());
            return Ok(report);
        }
    };
    report.sets = Some(sets.clone());
    if sets.n() == 0 || (sets.m() >= 1 && sets.n() < 2) {
        report.failure = Some("no entity or class term to attach relations to".into());
        return Ok(report);
    }
    // missing vectors are a resource error, not an infeasible reading
    let graph = build_condensed_graph(sets, costs)?;
    let outcome = solve_qga(&graph, config.bound);
    report.stats = Some(outcome.stats);
    let Some(solution) = outcome.solution else {
        report.failure = Some(format!(
            "no conflict-free assembly of {} relation(s) over {} vertex set(s)",
            graph.m(),
            graph.n()
        ));
        return Ok(report);
    };
    report.conflicts_resolved = count_conflicts(&graph, &solution.matching);
    let query = if config.predict {
        match predict_untouched(
            &graph,
            &solution.matching,
            solution.query,
            costs,
            &prediction_catalog(kg),
        ) {
            Ok(q) => q,
            Err(e) => {
                report.failure = Some(format!("relation prediction failed: {e}"));
                return Ok(report);
            }
        }
    } else {
        solution.query
    };
    report.normalized_cost = Some(normalized_cost(&query));
    report.query = Some(query);
    Ok(report)
}

/// Predicates relation prediction may add. The type predicate is left out:
/// class vertices already become typed variables, so a predicted type edge
/// into one asks a variable to be both an instance and a class.
pub fn prediction_catalog(kg: &KnowledgeGraph) -> Vec<ItemId> {
    let ty = kg.type_predicate();
    kg.predicates()
        .into_iter()
        .filter(|&p| Some(p) != ty)
        .collect()
}

/// Member combinations tried for vertex sets no assembled edge touches.
const UNTOUCHED_CHOICE_CAP: usize = 256;

/// Relation prediction where vertex sets left untouched by the matching are
/// still ambiguous: every member combination (up to a cap, in odometer order)
/// is connected and the one with the cheapest predicted edges is kept.
fn predict_untouched(
    graph: &CondensedBipartiteGraph,
    matching: &[usize],
    assembled: QueryGraph,
    costs: &impl EdgeCostSource,
    predicates: &[ItemId],
) -> Result<QueryGraph> {
    let mut touched = vec![false; graph.n()];
    for &e in matching {
        for (set, _) in graph.endpoints(&graph.edges[e]) {
            touched[set] = true;
        }
    }
    let open: Vec<usize> = (0..graph.n())
        .filter(|&s| !touched[s] && graph.sets.vertex_sets[s].members.len() > 1)
        .collect();
    let mut choice = vec![0usize; open.len()];
    let mut best: Option<QueryGraph> = None;
    for _ in 0..UNTOUCHED_CHOICE_CAP {
        let mut q = assembled.clone();
        for (&s, &c) in open.iter().zip(&choice) {
            q.vertices[s].vertex = graph.sets.vertex_sets[s].members[c];
        }
        let q = predict_relations(&q, costs, predicates)?;
        if best
            .as_ref()
            .is_none_or(|b| q.predicted_cost() < b.predicted_cost())
        {
            best = Some(q);
        }
        let mut i = 0;
        while i < open.len() {
            choice[i] += 1;
            if choice[i] < graph.sets.vertex_sets[open[i]].members.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == open.len() {
            break;
        }
    }
    Ok(best.expect("at least one combination"))
}

fn count_conflicts(graph: &CondensedBipartiteGraph, matching: &[usize]) -> usize {
    (0..graph.edges.len())
        .filter(|f| !matching.contains(f))
        .filter(|&f| matching.iter().any(|&e| graph.conflicts(e, f)))
        .count()
}

/// Phase I, assembly and prediction for each of the top-N annotated queries,
/// then the cheapest per-edge graph wins (higher segmentation score on ties).
pub fn answer_keywords(
    tokens: &[String],
    kg: &KnowledgeGraph,
    lexicon: &Lexicon,
    costs: &impl EdgeCostSource,
    config: &PipelineConfig,
) -> Result<Answer> {
    config.validate()?;
    let (aqs, fuzzy_used) = annotate(tokens, lexicon, config)?;
    if aqs.is_empty() {
        return Err(Error::Uninterpretable(format!(
            "no keyword of `{}` matches the lexicon",
            tokens.join(" ")
        )));
    }
    let reports = aqs
        .iter()
        .map(|aq| assemble(aq, kg, costs, config))
        .collect::<Result<Vec<_>>>()?;

    let mut winner: Option<usize> = None;
    for (i, r) in reports.iter().enumerate() {
        let Some(cost) = r.normalized_cost else {
            continue;
        };
        let better = match winner {
            None => true,
            Some(w) => {
                let best = reports[w].normalized_cost.unwrap();
                cost < best
                    || (cost == best && r.aq.segmentation_score > reports[w].aq.segmentation_score)
            }
        };
        if better {
            winner = Some(i);
        }
    }
    let Some(winner) = winner else {
        return Err(Error::Infeasible {
            reasons: reports
                .iter()
                .map(|r| {
                    format!(
                        "[{}] {}",
                        r.aq.describe(),
                        r.failure.as_deref().unwrap_or("?")
                    )
                })
                .collect(),
        });
    };
    let query = reports[winner].query.clone().expect("winner has a query");
    let sparql = emit_sparql(&query, kg)?;
    let bindings = evaluate_bgp(&sparql, kg)?;
    Ok(Answer {
        query,
        sparql,
        bindings,
        diagnostics: Diagnostics {
            fuzzy_used,
            reports,
            winner,
        },
    })
}

fn vertex_name(v: &Vertex, kg: &KnowledgeGraph) -> String {
    match v.item() {
        Some(id) => kg
            .iri(id)
            .map(str::to_string)
            .unwrap_or_else(|_| id.to_string()),
        None => "?free".into(),
    }
}

/// Human-readable account of every annotated query: candidate sets, solver
/// counters, conflicts ruled out and the chosen edges.
pub fn explain(diag: &Diagnostics, kg: &KnowledgeGraph) -> String {
    let mut out = String::new();
    if diag.fuzzy_used {
        out.push_str("fuzzy matching on\n");
    }
    for (i, r) in diag.reports.iter().enumerate() {
        let mark = if i == diag.winner { " (chosen)" } else { "" };
        writeln!(
            out,
            "AQ {}{mark}: {} score={:.4}",
            i + 1,
            r.aq.describe(),
            r.aq.segmentation_score
        )
        .unwrap();
        if let Some(sets) = &r.sets {
            for (j, v) in sets.vertex_sets.iter().enumerate() {
                let names: Vec<String> = v.members.iter().map(|m| vertex_name(m, kg)).collect();
                writeln!(out, "  V{j} = {{{}}}", names.join(", ")).unwrap();
            }
            for (j, e) in sets.edge_sets.iter().enumerate() {
                let names: Vec<String> = e
                    .predicates
                    .iter()
                    .map(|&p| kg.iri(p).unwrap_or("?").to_string())
                    .collect();
                writeln!(out, "  E{j} = {{{}}}", names.join(", ")).unwrap();
            }
        }
        if let Some(s) = r.stats {
            writeln!(
                out,
                "  states popped={} pushed={} pruned={}; conflicts resolved={}",
                s.states_popped, s.states_pushed, s.states_pruned, r.conflicts_resolved
            )
            .unwrap();
        }
        if let Some(q) = &r.query {
            for (e, predicted) in q.all_edges() {
                writeln!(
                    out,
                    "  {} {} {}  w={:.4}{}",
                    vertex_name(&q.vertices[e.from].vertex, kg),
                    kg.iri(e.predicate).unwrap_or("?"),
                    vertex_name(&q.vertices[e.to].vertex, kg),
                    e.weight,
                    if predicted { " predicted" } else { "" }
                )
                .unwrap();
            }
            writeln!(
                out,
                "  normalized cost={:.6}",
                r.normalized_cost.unwrap_or(f64::NAN)
            )
            .unwrap();
        }
        if let Some(f) = &r.failure {
            writeln!(out, "  infeasible: {f}").unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    pub instance: usize,
    pub bound: LowerBound,
    pub n: usize,
    pub m: usize,
    pub states_popped: u64,
    pub states_pushed: u64,
    pub cost: Option<f64>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn k_values(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.rows.iter().map(|r| r.k).collect();
        ks.dedup();
        ks
    }

    /// Mean states popped for one `(k, bound)`.
    pub fn mean_popped(&self, k: usize, bound: LowerBound) -> f64 {
        self.mean(k, bound, |r| r.states_popped as f64)
    }

    pub fn mean_pushed(&self, k: usize, bound: LowerBound) -> f64 {
        self.mean(k, bound, |r| r.states_pushed as f64)
    }

    fn mean(&self, k: usize, bound: LowerBound, f: impl Fn(&BenchRow) -> f64) -> f64 {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.k == k && r.bound == bound)
            .map(f)
            .collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("k\tinstance\tbound\tn\tm\tstates_popped\tstates_pushed\tcost\tmicros\n");
        for r in &self.rows {
            let cost = r.cost.map_or("inf".to_string(), |c| c.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{cost}\t{}",
                r.k,
                r.instance,
                r.bound,
                r.n,
                r.m,
                r.states_popped,
                r.states_pushed,
                r.elapsed.as_micros()
            )
            .unwrap();
        }
        out
    }

    /// Mean states per k and bound.
    pub fn summary(&self) -> String {
        let mut out = String::from("k\tbound\tmean_popped\tmean_pushed\n");
        for k in self.k_values() {
            for b in LowerBound::ALL {
                writeln!(
                    out,
                    "{k}\t{b}\t{:.2}\t{:.2}",
                    self.mean_popped(k, b),
                    self.mean_pushed(k, b)
                )
                .unwrap();
            }
        }
        out
    }
}

/// Instance shape used by the benchmark CLI and the pruning-trend checks.
pub const BENCH_VERTEX_SETS: RangeInclusive<usize> = 3..=5;
pub const BENCH_EDGE_SETS: RangeInclusive<usize> = 2..=4;

/// Solves `instances` random instances per k under every bound. Each k gets
/// its own stream seeded from `seed + k`, so the suite for one k does not
/// depend on which other k values are run.
pub fn bench_lower_bounds(
    instances: usize,
    n_range: RangeInclusive<usize>,
    m_range: RangeInclusive<usize>,
    k_values: &[usize],
    seed: u64,
) -> Result<BenchReport> {
    if instances == 0
        || k_values.is_empty()
        || k_values.contains(&0)
        || n_range.is_empty()
        || m_range.is_empty()
    {
        return Err(Error::Config(
            "benchmark parameters must be positive".into(),
        ));
    }
    let mut rows = Vec::new();
    for &k in k_values {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let shape = InstanceShape::new(n_range.clone(), m_range.clone(), k);
        for instance in 0..instances {
            let graph = random_instance(&mut rng, &shape);
            let mut reference: Option<Option<f64>> = None;
            for bound in LowerBound::ALL {
                let start = Instant::now();
                let out = solve_qga(&graph, bound);
                let elapsed = start.elapsed();
                let cost = out.solution.map(|s| s.cost);
                match reference {
                    None => reference = Some(cost),
                    Some(r) => {
                        let agree = match (r, cost) {
                            (Some(a), Some(b)) => {
                                (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
                            }
                            (None, None) => true,
                            _ => false,
                        };
                        if !agree {
                            return Err(Error::Invalid(format!(
                                "bounds disagree on instance {instance} (k={k}): {r:?} vs {bound} {cost:?}"
                            )));
                        }
                    }
                }
                rows.push(BenchRow {
                    k,
                    instance,
                    bound,
                    n: graph.n(),
                    m: graph.m(),
                    states_popped: out.stats.states_popped,
                    states_pushed: out.stats.states_pushed,
                    cost,
                    elapsed,
                });
            }
        }
    }
    Ok(BenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingTable;
    use crate::lexicon::tokenize;

    fn setup() -> (KnowledgeGraph, Lexicon, EmbeddingTable) {
        let kg = KnowledgeGraph::from_triples(
            [
                ("Einstein", "rdf:type", "Scientist"),
                ("ETH", "rdf:type", "University"),
                ("Einstein", "almaMater", "ETH"),
                ("ETH", "country", "Switzerland"),
            ],
            "rdf:type",
        )
        .unwrap();
        let lex = Lexicon::from_sources(&kg, "", "graduate from\talmaMater\n").unwrap();
        let mut table = EmbeddingTable::new(2, kg.item_count());
        for (i, id) in kg.items().enumerate() {
            table.set(id, &[i as f64 * 0.1, 0.0]);
        }
        (kg, lex, table)
    }

    #[test]
    fn lone_entity_answers_itself() {
        let (kg, lex, table) = setup();
        let a = answer_keywords(
            &tokenize("Einstein"),
            &kg,
            &lex,
            &table,
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(a.answers(&kg).unwrap(), vec!["Einstein"]);
        assert_eq!(a.sparql.form, QueryForm::Ask);
    }

    #[test]
    fn gibberish_is_uninterpretable() {
        let (kg, lex, table) = setup();
        let err = answer_keywords(
            &tokenize("qwzx vvvk"),
            &kg,
            &lex,
            &table,
            &PipelineConfig::default(),
        );
        assert!(matches!(err, Err(Error::Uninterpretable(_))));
    }

    #[test]
    fn relation_query_answers_class_variable() {
        let (kg, lex, table) = setup();
        let a = answer_keywords(
            &tokenize("scientist graduate from university"),
            &kg,
            &lex,
            &table,
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(a.answers(&kg).unwrap(), vec!["Einstein"]);
        assert!(explain(&a.diagnostics, &kg).contains("(chosen)"));
    }

    #[test]
    fn config_is_validated() {
        let (kg, lex, table) = setup();
        let cfg = PipelineConfig {
            k: 0,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            answer_keywords(&tokenize("Einstein"), &kg, &lex, &table, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bench_is_deterministic_and_bounds_agree() {
        let strip = |r: &BenchReport| -> Vec<_> {
            r.rows
                .iter()
                .map(|x| {
                    (
                        x.k,
                        x.instance,
                        x.bound,
                        x.states_popped,
                        x.states_pushed,
                        x.cost,
                    )
                })
                .collect()
        };
        let a = bench_lower_bounds(1, 3..=4, 2..=3, &[5], 7).unwrap();
        let b = bench_lower_bounds(1, 3..=4, 2..=3, &[5], 7).unwrap();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.rows.len(), 3);
        assert!(a.to_tsv().lines().count() == 4);
        assert!(bench_lower_bounds(0, 3..=4, 2..=3, &[5], 7).is_err());
    }
}
