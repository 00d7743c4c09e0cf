// SPDX-License-Identifier: Apache-2.0

//! Regenerates the shipped data files under `data/`.
//!
//! ```text
//! cargo run --example make_desk_corpus [-- <output dir>]
//! ```

use std::path::PathBuf;

use cast_retrieval::corpus::write_corpus;
use cast_retrieval::synth::{desk_corpus, desk_embeddings, synthetic_sexpr_corpus, DESK_SEED, SYNTHETIC_SEXPR_COUNT};

fn main() -> cast_retrieval::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;

    let (exemplars, queries) = desk_corpus(DESK_SEED);
    write_corpus(dir.join("desk_corpus.jsonl"), &exemplars)?;
    write_corpus(dir.join("desk_queries.jsonl"), &queries)?;
    let table = desk_embeddings(exemplars.iter().chain(&queries))?;
    std::fs::write(dir.join("desk_embeddings.txt"), table.to_text())?;

    let synthetic = synthetic_sexpr_corpus(DESK_SEED, SYNTHETIC_SEXPR_COUNT);
    write_corpus(dir.join("synthetic_sexpr.jsonl"), &synthetic)?;

    println!(
        "wrote {} exemplars, {} queries, {} embeddings (dim {}), {} synthetic trees to {}",
        exemplars.len(),
        queries.len(),
        table.len(),
        table.dim(),
        synthetic.len(),
        dir.display()
    );
    Ok(())
}
