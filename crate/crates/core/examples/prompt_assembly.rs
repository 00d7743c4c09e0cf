// SPDX-License-Identifier: Apache-2.0

//! Selects three exemplars and renders the prompt with the default template
//! and with a custom one.

use cast_retrieval::corpus::read_corpus;
use cast_retrieval::harness::{exact_match, PromptTemplate, Strategy, StrategyContext};
use cast_retrieval::index::build_database;
use cast_retrieval::selector::SelectionConfig;
use cast_retrieval::tree::AdapterRegistry;

const TERSE: &str = r##"
version = "terse-1"
header = "# {source_lang} -> {target_lang}\n"
exemplar = "{source}\n--\n{target}\n==\n"
query = "{source}\n--\n"
"##;

fn main() -> cast_retrieval::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let adapter = AdapterRegistry::with_defaults();
    let (db, _) = build_database(read_corpus(data.join("desk_corpus.jsonl"))?, &adapter)?;
    let ctx = StrategyContext::new(&db, SelectionConfig::with_k(3), 42)?;
    let entry = read_corpus(data.join("desk_queries.jsonl"))?.remove(7);
    let gold = entry.target.clone();
    let q = ctx.prepare(entry, &adapter)?;

    let sel = ctx.select(&q, Strategy::CastF, 3)?;
    let trace = ctx.trace(&q, &sel, 3, false)?;
    println!("{}", trace.prompt(&db, &PromptTemplate::default(), None)?);
    println!("---- terse template ----");
    print!("{}", trace.prompt(&db, &PromptTemplate::from_toml(TERSE)?, None)?);

    // scoring a model answer against the reference
    let answer = format!("{gold}\n\n");
    println!(
        "---- exact match of a padded copy of the reference: {}",
        exact_match(&answer, &gold)
    );
    Ok(())
}
