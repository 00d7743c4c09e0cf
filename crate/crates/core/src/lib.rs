// SPDX-License-Identifier: Apache-2.0

//! Exemplar retrieval for in-context code translation by maximizing the
//! coverage of the query's abstract syntax tree.
//!
//! The pipeline:
//!
//! 1. Parse source code into a type-only [`TypedTree`] ([`tree`], [`exprlang`]).
//! 2. Fingerprint every rooted subtree in one post-order pass ([`fingerprint`]).
//! 3. Index exemplar fingerprints and build a query-by-candidate co-occurrence
//!    matrix ([`index`]).
//! 4. Greedily pick the exemplars that cover the most query nodes
//!    ([`selector`]), or compare with the classical strategies in [`baselines`].
//! 5. Assemble prompts, score exact match and sweep coverage curves ([`harness`]).
//!
//! ```
//! use cast_retrieval::prelude::*;
//!
//! let corpus = vec![
//!     CorpusEntry {
//!         id: "add".into(),
//!         source_lang: "expr".into(),
//!         target_lang: "py".into(),
//!         source: "fn add(a, b) { return a + b; }".into(),
//!         target: "def add(a, b):\n    return a + b\n".into(),
//!         sexpr: None,
//!     },
//! ];
//! let adapter = AdapterRegistry::with_defaults();
//! let (db, _report) = build_database(corpus, &adapter).unwrap();
//! let query = "fn sum(x, y) { return x + y; }";
//! let picked = select_cast_f(&db, query, "expr", &SelectionConfig::with_k(1), &adapter).unwrap();
//! assert_eq!(picked.selected, [0]);
//! assert_eq!(picked.final_cast(), 1.0);
//! ```

pub mod baselines;
pub mod bits;
pub mod corpus;
pub mod error;
pub mod exprlang;
pub mod fingerprint;
pub mod harness;
pub mod index;
pub mod selector;
pub mod synth;
pub mod tree;

pub use error::{Error, ParseError, Result};
pub use tree::TypedTree;

pub mod prelude {
    pub use crate::bits::BitVec;
    pub use crate::corpus::{read_corpus, CorpusEntry};
    pub use crate::error::{Error, ParseError, Result};
    pub use crate::fingerprint::{fingerprint_tree, Fingerprint, FingerprintProfile};
    pub use crate::index::{build_cooccurrence, build_database, CoMatrix, ExemplarDatabase};
    pub use crate::selector::{
        greedy_select, select_cast_a, select_cast_f, SelectionConfig, SelectionResult, TieBreak,
    };
    pub use crate::tree::{parse_sexpr, to_sexpr, AdapterRegistry, ParserAdapter, TypedTree};
}
