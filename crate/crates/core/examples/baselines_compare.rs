// SPDX-License-Identifier: Apache-2.0

//! Every selection strategy on the same query, with the coverage each one
//! reaches at five shots.

use cast_retrieval::baselines::EmbeddingTable;
use cast_retrieval::corpus::read_corpus;
use cast_retrieval::harness::{Strategy, StrategyContext};
use cast_retrieval::index::build_database;
use cast_retrieval::selector::SelectionConfig;
use cast_retrieval::tree::AdapterRegistry;

fn main() -> cast_retrieval::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let adapter = AdapterRegistry::with_defaults();
    let (db, _) = build_database(read_corpus(data.join("desk_corpus.jsonl"))?, &adapter)?;
    let ctx = StrategyContext::new(&db, SelectionConfig::default(), 42)?
        .with_embeddings(EmbeddingTable::load(data.join("desk_embeddings.txt"))?)?;
    let entry = read_corpus(data.join("desk_queries.jsonl"))?.remove(0);
    let q = ctx.prepare(entry, &adapter)?;

    for strategy in Strategy::ALL {
        let sel = ctx.select(&q, strategy, 5)?;
        let ids: Vec<&str> = sel.positions.iter().map(|&p| db.records()[p].id.as_str()).collect();
        println!("{:<10} {:.3}  {}", strategy.as_str(), sel.final_cast(), ids.join(" "));
    }
    Ok(())
}
