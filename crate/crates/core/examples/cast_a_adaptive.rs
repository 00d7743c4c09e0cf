// SPDX-License-Identifier: Apache-2.0

//! Threshold-terminated selection: how many exemplars each desk query needs
//! at a few coverage targets.

use cast_retrieval::corpus::read_corpus;
use cast_retrieval::index::build_database;
use cast_retrieval::selector::{cast_a_pipeline, SelectionConfig};
use cast_retrieval::tree::{AdapterRegistry, ParserAdapter};

fn main() -> cast_retrieval::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let adapter = AdapterRegistry::with_defaults();
    let (db, _) = build_database(read_corpus(data.join("desk_corpus.jsonl"))?, &adapter)?;
    let queries = read_corpus(data.join("desk_queries.jsonl"))?;

    println!(
        "{:>5}  {:>10}  {:>10}  {:>8}",
        "tau", "mean shots", "mean CAST", "reached"
    );
    for tau in [0.7, 0.8, 0.9, 0.98] {
        let cfg = SelectionConfig {
            tau,
            k_max: 20,
            ..SelectionConfig::default()
        };
        let (mut shots, mut cast, mut reached) = (0usize, 0.0, 0usize);
        for q in &queries {
            let tree = adapter.parse(&q.source, &q.source_lang)?;
            let r = cast_a_pipeline(&db, &q.source, &tree, &cfg)?.result;
            shots += r.len();
            cast += r.final_cast();
            reached += usize::from(r.threshold_met == Some(true));
        }
        let n = queries.len() as f64;
        println!(
            "{tau:>5.2}  {:>10.2}  {:>10.4}  {:>4}/{}",
            shots as f64 / n,
            cast / n,
            reached,
            queries.len()
        );
    }
    Ok(())
}
