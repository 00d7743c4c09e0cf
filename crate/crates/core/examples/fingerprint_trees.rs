// SPDX-License-Identifier: Apache-2.0

//! Fingerprints every rooted subtree of two small trees and shows which
//! subtrees they share.

use cast_retrieval::fingerprint::fingerprint_tree;
use cast_retrieval::tree::{parse_sexpr, to_sexpr};

fn main() -> cast_retrieval::Result<()> {
    let query = parse_sexpr(
        "(if_statement (binary_expression (identifier) (op) (integer)) (block (return_statement (identifier))))",
    )?;
    let exemplar = parse_sexpr(
        "(while_statement (binary_expression (identifier) (op) (integer)) (block (expression_statement (identifier))))",
    )?;

    let q = fingerprint_tree(&query);
    let e = fingerprint_tree(&exemplar);
    println!(
        "query: {} nodes, {} distinct subtrees",
        query.node_count(),
        q.set().len()
    );

    let mut shared = 0;
    for (col, &node) in q.postorder().iter().enumerate() {
        let fp = q.by_postorder()[col];
        let hit = e.contains(fp);
        shared += usize::from(hit);
        println!(
            "  col {col:>2}  {fp}  {}  {}",
            if hit { "shared" } else { "      " },
            to_sexpr(&query.subtree(node))
        );
    }
    println!("exemplar covers {shared}/{} query nodes", query.node_count());
    Ok(())
}
