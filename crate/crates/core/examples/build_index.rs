// SPDX-License-Identifier: Apache-2.0

//! Builds an index from the desk corpus, saves it, loads it back and looks
//! up a posting list.

use cast_retrieval::corpus::read_corpus;
use cast_retrieval::fingerprint::fingerprint_node_type;
use cast_retrieval::index::{build_database, ExemplarDatabase};
use cast_retrieval::tree::{AdapterRegistry, NodeType};

fn main() -> cast_retrieval::Result<()> {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let corpus = read_corpus(data.join("desk_corpus.jsonl"))?;
    let (db, report) = build_database(corpus, &AdapterRegistry::with_defaults())?;
    for w in report.warnings() {
        eprintln!("warning: {w}");
    }

    let dir = std::env::temp_dir().join("cast-example-index");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("desk.idx");
    db.save(&path)?;
    let loaded = ExemplarDatabase::load(&path)?;
    assert_eq!(loaded, db);

    println!(
        "{} records, {} distinct subtree fingerprints, {} bytes on disk",
        loaded.len(),
        loaded.distinct_fingerprints(),
        std::fs::metadata(&path)?.len()
    );
    // a lone `(integer)` leaf is a whole subtree too
    let leaf = fingerprint_node_type(&NodeType::new("integer")?);
    println!("fingerprint of (integer) leaf label: {leaf}");
    let root_of_first = loaded.records()[0].profile.root();
    println!(
        "root subtree of {} appears in {} record(s)",
        loaded.records()[0].id,
        loaded.postings(root_of_first).len()
    );
    Ok(())
}
