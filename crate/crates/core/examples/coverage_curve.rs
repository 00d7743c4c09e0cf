// SPDX-License-Identifier: Apache-2.0

//! Mean coverage against shot count for several strategies on the desk
//! corpus. Writes `coverage.csv` and `coverage.svg` to the temp directory.

use cast_retrieval::baselines::EmbeddingTable;
use cast_retrieval::corpus::read_corpus;
use cast_retrieval::harness::{coverage_curve, curve_to_csv, curve_to_svg, Strategy, StrategyContext};
use cast_retrieval::index::build_database;
use cast_retrieval::selector::SelectionConfig;
use cast_retrieval::tree::AdapterRegistry;

fn main() -> cast_retrieval::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let adapter = AdapterRegistry::with_defaults();
    let (db, _) = build_database(read_corpus(data.join("desk_corpus.jsonl"))?, &adapter)?;
    let ctx = StrategyContext::new(&db, SelectionConfig::default(), 42)?
        .with_embeddings(EmbeddingTable::load(data.join("desk_embeddings.txt"))?)?;
    let queries = ctx.prepare_all(read_corpus(data.join("desk_queries.jsonl"))?, &adapter)?;

    let strategies = [
        Strategy::CastF,
        Strategy::Ld,
        Strategy::Bm25,
        Strategy::Embed,
        Strategy::Random,
    ];
    let rows = coverage_curve(&ctx, &queries, &strategies, &[1, 3, 5, 10, 15, 20])?;
    let csv = curve_to_csv(&rows);
    print!("{csv}");

    let out = std::env::temp_dir();
    std::fs::write(out.join("coverage.csv"), csv)?;
    std::fs::write(out.join("coverage.svg"), curve_to_svg(&rows))?;
    println!("wrote {}", out.join("coverage.svg").display());
    Ok(())
}
