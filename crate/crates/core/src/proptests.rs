//! Randomized invariants across modules.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembler::{
    format_instance, optimal_completion, parse_dimacs, parse_instance, random_instance,
    solve_qga_observed, Cnf, InstanceShape,
};
use crate::embedding::{condensed_edge_weight, triple_assembly_cost};
use crate::lexicon::maximal_cliques;
use crate::sparql::emit_sparql;
use crate::{EmbeddingTable, ItemId, ItemKind, KnowledgeGraph, LowerBound, Triple};

fn store_lines() -> impl Strategy<Value = Vec<(u8, u8, u8, bool)>> {
    prop::collection::vec((0u8..10, 0u8..4, 0u8..10, any::<bool>()), 1..40)
}

fn build_store(
    lines: &[(u8, u8, u8, bool)],
) -> (KnowledgeGraph, BTreeSet<(String, String, String)>) {
    let mut want = BTreeSet::new();
    let text: Vec<String> = lines
        .iter()
        .map(|&(s, p, o, typed)| {
            let t = if typed {
                (
                    format!("ex:s{s}"),
                    "rdf:type".to_string(),
                    format!("ex:C{o}"),
                )
            } else {
                (format!("ex:s{s}"), format!("ex:p{p}"), format!("ex:s{o}"))
            };
            let line = format!("{}\t{}\t{}", t.0, t.1, t.2);
            want.insert(t);
            line
        })
        .collect();
    (
        KnowledgeGraph::parse(&text.join("\n"), "rdf:type").unwrap(),
        want,
    )
}

fn iri_triple(kg: &KnowledgeGraph, t: Triple) -> (String, String, String) {
    (
        kg.iri(t.subject).unwrap().to_string(),
        kg.iri(t.predicate).unwrap().to_string(),
        kg.iri(t.object).unwrap().to_string(),
    )
}

fn shape() -> InstanceShape {
    InstanceShape::new(2..=4, 1..=3, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn store_round_trips_triples(lines in store_lines()) {
        let (kg, want) = build_store(&lines);
        let got: BTreeSet<_> = kg.triples().map(|t| iri_triple(&kg, t)).collect();
        prop_assert_eq!(got, want.clone());
        prop_assert_eq!(kg.len(), want.len());
    }

    #[test]
    fn pattern_matches_agree_with_scan(lines in store_lines(), mask in 0u8..8, pick in 0usize..64) {
        let (kg, _) = build_store(&lines);
        let all: Vec<Triple> = kg.triples().collect();
        let probe = all[pick % all.len()];
        let s = (mask & 1 != 0).then_some(probe.subject);
        let p = (mask & 2 != 0).then_some(probe.predicate);
        let o = (mask & 4 != 0).then_some(probe.object);
        let got: BTreeSet<Triple> = kg.match_pattern(s, p, o).unwrap().collect();
        let want: BTreeSet<Triple> = all
            .iter()
            .copied()
            .filter(|t| s.is_none_or(|x| x == t.subject)
                && p.is_none_or(|x| x == t.predicate)
                && o.is_none_or(|x| x == t.object))
            .collect();
        prop_assert!(got.contains(&probe));
        prop_assert_eq!(got, want);
        prop_assert!(kg.has_triple(probe.subject, probe.predicate, probe.object).unwrap());
    }

    #[test]
    fn catalogs_partition_items(lines in store_lines()) {
        let (kg, _) = build_store(&lines);
        let mut seen = BTreeSet::new();
        for kind in [ItemKind::Entity, ItemKind::Class, ItemKind::Predicate] {
            for id in kg.catalog(kind) {
                prop_assert_eq!(kg.kind(id).unwrap(), kind);
                prop_assert!(seen.insert(id));
            }
        }
        prop_assert_eq!(seen.len(), kg.item_count());
        for t in kg.triples() {
            if Some(t.predicate) == kg.type_predicate() {
                prop_assert_eq!(kg.kind(t.object).unwrap(), ItemKind::Class);
            }
        }
    }

    #[test]
    fn cliques_are_maximal_and_cover_every_node(
        n in 1usize..10,
        bits in prop::collection::vec(any::<bool>(), 45),
    ) {
        let mut adj = vec![vec![false; n]; n];
        for (k, (i, j)) in (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).enumerate() {
            adj[i][j] = bits[k];
            adj[j][i] = bits[k];
        }
        let cliques = maximal_cliques(&adj);
        let mut covered = vec![false; n];
        for c in &cliques {
            for (x, &a) in c.iter().enumerate() {
                covered[a] = true;
                for &b in &c[x + 1..] {
                    prop_assert!(adj[a][b]);
                }
            }
            for v in (0..n).filter(|v| !c.contains(v)) {
                prop_assert!(!c.iter().all(|&u| adj[u][v]), "clique {:?} extends by {}", c, v);
            }
        }
        prop_assert!(covered.iter().all(|&c| c));
        let distinct: BTreeSet<_> = cliques.iter().collect();
        prop_assert_eq!(distinct.len(), cliques.len());
    }

    #[test]
    fn assembly_cost_is_symmetric_nonnegative_and_condenses_to_the_minimum(
        dim in 1usize..12,
        values in prop::collection::vec(-2.0f64..2.0, 5 * 12),
        cut in 1usize..4,
    ) {
        let mut table = EmbeddingTable::new(dim, 5);
        for i in 0..5 {
            table.set(ItemId(i as u32), &values[i * 12..i * 12 + dim]);
        }
        let (a, b) = (ItemId(0), ItemId(1));
        let preds = [ItemId(2), ItemId(3), ItemId(4)];
        for p in preds {
            let ab = triple_assembly_cost(&table, a, b, p).unwrap().cost;
            let ba = triple_assembly_cost(&table, b, a, p).unwrap().cost;
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
        }
        let part = condensed_edge_weight(&table, a, b, &preds[..cut]).unwrap();
        let whole = condensed_edge_weight(&table, a, b, &preds).unwrap();
        prop_assert!(whole.cost <= part.cost);
        prop_assert_eq!(whole.cost, triple_assembly_cost(&table, a, b, whole.predicate).unwrap().cost);
    }

    #[test]
    fn bounds_are_ordered_and_admissible(seed in any::<u64>()) {
        let g = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &shape());
        let m = g.m();
        let mut bad = Vec::new();
        solve_qga_observed(&g, LowerBound::Km, |state| {
            let naive = LowerBound::Naive.evaluate(&g, state, m);
            let km = LowerBound::Km.evaluate(&g, state, m);
            let greedy = LowerBound::Greedy.evaluate(&g, state, m);
            if naive > km + 1e-9 {
                bad.push(format!("naive {naive} > km {km}"));
            }
            if let Some(best) = optimal_completion(&g, state) {
                for lb in [naive, km, greedy] {
                    if lb > best + 1e-9 {
                        bad.push(format!("bound {lb} > completion {best}"));
                    }
                }
            }
        });
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn solutions_are_conflict_free_covers(seed in any::<u64>()) {
        let g = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &shape());
        for bound in LowerBound::ALL {
            let Some(sol) = crate::solve_qga(&g, bound).solution else { continue };
            prop_assert_eq!(sol.matching.len(), g.m());
            let sets: BTreeSet<usize> = sol.matching.iter().map(|&e| g.edges[e].right).collect();
            prop_assert_eq!(sets.len(), g.m());
            for (i, &e) in sol.matching.iter().enumerate() {
                for &f in &sol.matching[i + 1..] {
                    prop_assert!(!g.conflicts(e, f));
                }
            }
            let total: f64 = sol.matching.iter().map(|&e| g.edges[e].weight).sum();
            prop_assert!((total - sol.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn instance_dump_round_trips(seed in any::<u64>()) {
        let g = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &shape());
        let text = format_instance(&g);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(format_instance(&back), text);
        prop_assert_eq!(back.edges, g.edges);
    }

    #[test]
    fn dimacs_round_trips(
        p in 1usize..7,
        lits in prop::collection::vec((1i32..7, any::<bool>()), 3..24),
    ) {
        let clauses: Vec<[i32; 3]> = lits
            .chunks_exact(3)
            .map(|c| [0, 1, 2].map(|i| {
                let v = (c[i].0 - 1) % p as i32 + 1;
                if c[i].1 { v } else { -v }
            }))
            .collect();
        let cnf = Cnf::new(p, clauses.clone()).unwrap();
        let mut text = format!("c generated\np cnf {p} {}\n", clauses.len());
        for c in &clauses {
            text.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        prop_assert_eq!(parse_dimacs(&text).unwrap(), cnf);
    }

    #[test]
    fn emitted_queries_are_deterministic(seed in any::<u64>()) {
        let kg = KnowledgeGraph::parse(
            &(0..12).map(|i| format!("ex:e{i}\tex:p{}\tex:e{}", i % 3, (i + 1) % 12)).collect::<Vec<_>>().join("\n"),
            "rdf:type",
        )
        .unwrap();
        let g = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &shape());
        let Some(sol) = crate::solve_qga(&g, LowerBound::Greedy).solution else { return Ok(()) };
        // random instances use small ids; map them onto the store's items
        let mut q = sol.query.clone();
        let items: Vec<ItemId> = kg.entities();
        let preds = kg.predicates();
        for v in &mut q.vertices {
            if let crate::Vertex::Entity(id) | crate::Vertex::Class(id) = v.vertex {
                v.vertex = crate::Vertex::Entity(items[id.index() % items.len()]);
            }
        }
        for e in &mut q.edges {
            e.predicate = preds[e.predicate.index() % preds.len()];
        }
        let a = emit_sparql(&q, &kg).unwrap();
        let b = emit_sparql(&q.clone(), &kg).unwrap();
        prop_assert_eq!(&a, &b);
        let ea = crate::sparql::evaluate_bgp(&a, &kg).unwrap();
        let eb = crate::sparql::evaluate_bgp(&b, &kg).unwrap();
        prop_assert_eq!(ea, eb);
    }
}
