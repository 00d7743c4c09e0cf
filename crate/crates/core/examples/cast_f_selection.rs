// SPDX-License-Identifier: Apache-2.0

//! Fixed-size selection for one desk query, step by step.

use cast_retrieval::corpus::read_corpus;
use cast_retrieval::index::build_database;
use cast_retrieval::selector::{cast_f_pipeline, SelectionConfig};
use cast_retrieval::tree::{AdapterRegistry, ParserAdapter};

fn main() -> cast_retrieval::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let adapter = AdapterRegistry::with_defaults();
    let (db, _) = build_database(read_corpus(data.join("desk_corpus.jsonl"))?, &adapter)?;
    let query = &read_corpus(data.join("desk_queries.jsonl"))?[3];
    let tree = adapter.parse(&query.source, &query.source_lang)?;

    let cfg = SelectionConfig::with_k(5);
    let out = cast_f_pipeline(&db, &query.source, &tree, &cfg)?;
    println!("query {} ({} nodes)\n{}", query.id, tree.node_count(), query.source);
    println!("shortlisted {} candidates by edit distance", out.candidates.len());
    for (step, pos) in out.result.selected.iter().enumerate() {
        println!(
            "  step {}: {:<7} +{:<3} covered {:.3}",
            step + 1,
            db.records()[*pos].id,
            out.result.gains[step],
            out.result.cast_after[step]
        );
    }
    if out.result.filled_by_fallback > 0 {
        println!(
            "  ({} slot(s) filled after coverage saturated)",
            out.result.filled_by_fallback
        );
    }
    Ok(())
}
