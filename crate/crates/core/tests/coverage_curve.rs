// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use cast_retrieval::baselines::EmbeddingTable;
use cast_retrieval::corpus::{read_corpus, CorpusEntry};
use cast_retrieval::harness::{coverage_curve, curve_to_csv, PreparedQuery, Strategy, StrategyContext};
use cast_retrieval::index::{build_database, ExemplarDatabase};
use cast_retrieval::selector::SelectionConfig;
use cast_retrieval::tree::AdapterRegistry;

mod support;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn desk() -> (ExemplarDatabase, Vec<CorpusEntry>, EmbeddingTable) {
    let (db, _) = build_database(
        read_corpus(data("desk_corpus.jsonl")).unwrap(),
        &AdapterRegistry::with_defaults(),
    )
    .unwrap();
    let queries = read_corpus(data("desk_queries.jsonl")).unwrap();
    (db, queries, EmbeddingTable::load(data("desk_embeddings.txt")).unwrap())
}

fn prepared(ctx: &StrategyContext<'_>, queries: &[CorpusEntry]) -> Vec<PreparedQuery> {
    ctx.prepare_all(queries.to_vec(), &AdapterRegistry::with_defaults())
        .unwrap()
}

const SHOTS: [usize; 6] = [1, 3, 5, 10, 15, 20];

#[test]
fn nested_strategies_are_monotone() {
    let (db, queries, emb) = desk();
    let ctx = StrategyContext::new(&db, SelectionConfig::default(), 42)
        .unwrap()
        .with_embeddings(emb)
        .unwrap();
    let qs = prepared(&ctx, &queries);
    let strategies = [
        Strategy::CastF,
        Strategy::CastA,
        Strategy::Ld,
        Strategy::Bm25,
        Strategy::Embed,
        Strategy::Fixed,
    ];
    let rows = coverage_curve(&ctx, &qs, &strategies, &SHOTS).unwrap();
    for chunk in rows.chunks(SHOTS.len()) {
        for w in chunk.windows(2) {
            assert!(w[0].mean_cast <= w[1].mean_cast + 1e-12, "{:?} -> {:?}", w[0], w[1]);
        }
    }
}

#[test]
fn non_nested_strategies_best_of_seeds_is_monotone() {
    let (db, queries, emb) = desk();
    for strategy in [Strategy::Random, Strategy::Diversity] {
        // best[q][s]: best final coverage for query q at shot s over five seeds
        let mut best = vec![vec![0.0f64; SHOTS.len()]; queries.len()];
        for seed in 0..5 {
            let ctx = StrategyContext::new(&db, SelectionConfig::default(), seed)
                .unwrap()
                .with_embeddings(emb.clone())
                .unwrap();
            let qs = prepared(&ctx, &queries);
            for (qi, q) in qs.iter().enumerate() {
                for (si, &shot) in SHOTS.iter().enumerate() {
                    let c = ctx.select(q, strategy, shot).unwrap().final_cast();
                    best[qi][si] = best[qi][si].max(c);
                }
            }
        }
        let means: Vec<f64> = (0..SHOTS.len())
            .map(|s| best.iter().map(|b| b[s]).sum::<f64>() / best.len() as f64)
            .collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1]), "{strategy}: {means:?}");
    }
}

#[test]
fn cast_f_at_corpus_size_reaches_the_coverage_ceiling() {
    let (db, queries, _) = desk();
    let small: Vec<_> = db.records()[..12].to_vec();
    let small = ExemplarDatabase::from_records(small).unwrap();
    let ctx = StrategyContext::new(&small, SelectionConfig::default(), 1).unwrap();
    let qs = prepared(&ctx, &queries[..10]);
    for q in &qs {
        let all = ctx.select(q, Strategy::CastF, small.len()).unwrap();
        // ceiling: nodes of the query whose subtree occurs anywhere in the corpus
        let trees: Vec<_> = small.records().iter().map(|r| &r.tree).collect();
        let naive = support::naive_matrix(&trees, &q.tree);
        let covered = (0..q.tree.node_count())
            .filter(|&c| naive.iter().any(|row| row[c]))
            .count();
        assert_eq!(all.final_cast(), covered as f64 / q.tree.node_count() as f64);
    }
}

#[test]
fn csv_is_stable_across_runs() {
    let (db, queries, emb) = desk();
    let run = || {
        let ctx = StrategyContext::new(&db, SelectionConfig::default(), 11)
            .unwrap()
            .with_embeddings(emb.clone())
            .unwrap();
        let qs = prepared(&ctx, &queries);
        curve_to_csv(
            &coverage_curve(
                &ctx,
                &qs,
                &[Strategy::Random, Strategy::Diversity, Strategy::CastF],
                &[1, 5],
            )
            .unwrap(),
        )
    };
    assert_eq!(run(), run());
}
