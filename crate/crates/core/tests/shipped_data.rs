// SPDX-License-Identifier: Apache-2.0

//! The files under `data/` are exactly what the generators produce.

use std::path::{Path, PathBuf};

use cast_retrieval::corpus::{read_corpus, CorpusEntry};
use cast_retrieval::fingerprint::{fingerprint_node_type, fingerprint_tree};
use cast_retrieval::synth::{desk_corpus, desk_embeddings, synthetic_sexpr_corpus, DESK_SEED, SYNTHETIC_SEXPR_COUNT};
use cast_retrieval::tree::{parse_sexpr, NodeType};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn jsonl(entries: &[CorpusEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).unwrap() + "\n")
        .collect()
}

#[test]
fn desk_files_match_generator() {
    let (exemplars, queries) = desk_corpus(DESK_SEED);
    assert_eq!(
        std::fs::read_to_string(data("desk_corpus.jsonl")).unwrap(),
        jsonl(&exemplars)
    );
    assert_eq!(
        std::fs::read_to_string(data("desk_queries.jsonl")).unwrap(),
        jsonl(&queries)
    );
    let table = desk_embeddings(exemplars.iter().chain(&queries)).unwrap();
    assert_eq!(
        std::fs::read_to_string(data("desk_embeddings.txt")).unwrap(),
        table.to_text()
    );
    assert_eq!(read_corpus(data("desk_corpus.jsonl")).unwrap(), exemplars);
}

#[test]
fn synthetic_file_matches_generator() {
    let expected = synthetic_sexpr_corpus(DESK_SEED, SYNTHETIC_SEXPR_COUNT);
    assert_eq!(
        std::fs::read_to_string(data("synthetic_sexpr.jsonl")).unwrap(),
        jsonl(&expected)
    );
}

#[test]
fn desk_queries_are_held_out() {
    let ex = read_corpus(data("desk_corpus.jsonl")).unwrap();
    let qs = read_corpus(data("desk_queries.jsonl")).unwrap();
    assert!(ex.len() >= 150 && qs.len() >= 30);
    assert!(qs.iter().all(|q| ex.iter().all(|e| e.source != q.source)));
}

#[test]
fn fingerprint_vectors() {
    let text = std::fs::read_to_string(data("fingerprint_vectors.tsv")).unwrap();
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (input, hex) = line.split_once('\t').unwrap();
        let expected = u64::from_str_radix(hex, 16).unwrap();
        let got = if input.starts_with('(') {
            fingerprint_tree(&parse_sexpr(input).unwrap()).root().value()
        } else {
            fingerprint_node_type(&NodeType::new(input).unwrap()).value()
        };
        assert_eq!(got, expected, "{input}");
        checked += 1;
    }
    assert_eq!(checked, 11);
}
