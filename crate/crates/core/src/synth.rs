// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic data: random trees and the desk corpus.
//!
//! The desk corpus is a set of small `expr` programs assembled from a pool of
//! common idioms (accumulation loops, bounds checks, swaps, gcd loops, ...)
//! with randomized identifier names, constants and operators, paired with
//! their Python rendering. Held-out queries are drawn from the same
//! distribution with a different stream of the same seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::EmbeddingTable;
use crate::corpus::CorpusEntry;
use crate::error::Result;
use crate::exprlang::{BinOp, Else, Expr, ExprAdapter, Function, Program, Stmt, UnOp, LANGUAGE_ID};
use crate::tree::{to_sexpr, Node, NodeType, TypedTree};

pub const DESK_SEED: u64 = 20_250_101;
pub const DESK_EXEMPLARS: usize = 200;
pub const DESK_QUERIES: usize = 40;
pub const SYNTHETIC_SEXPR_COUNT: usize = 200;

/// Random ordered tree with `1..=max_nodes` nodes labelled `t0..t{vocab-1}`.
///
/// Each new node attaches to a uniformly chosen earlier node, appended after
/// that node's existing children.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize, vocab: usize) -> TypedTree {
    let n = rng.gen_range(1..=max_nodes.max(1));
    random_tree_exact(rng, n, vocab)
}

pub fn random_tree_exact<R: Rng + ?Sized>(rng: &mut R, n: usize, vocab: usize) -> TypedTree {
    let mut nodes: Vec<Node> = Vec::with_capacity(n);
    for i in 0..n.max(1) {
        let kind = NodeType::new(format!("t{}", rng.gen_range(0..vocab.max(1)))).expect("valid label");
        nodes.push(Node {
            kind,
            children: Vec::new(),
        });
        if i > 0 {
            // bias toward recent nodes so trees get some depth
            let parent = if rng.gen_bool(0.5) {
                rng.gen_range(i.saturating_sub(3)..i)
            } else {
                rng.gen_range(0..i)
            };
            nodes[parent].children.push(i);
        }
    }
    TypedTree::from_nodes(nodes, 0).expect("construction yields a valid tree")
}

/// Copy of `tree` with one random edit: relabel, swap two siblings, or drop a leaf.
pub fn mutate_tree<R: Rng + ?Sized>(rng: &mut R, tree: &TypedTree, vocab: usize) -> TypedTree {
    let mut nodes: Vec<Node> = tree.nodes().to_vec();
    let n = nodes.len();
    match rng.gen_range(0..3) {
        0 => {
            let i = rng.gen_range(0..n);
            nodes[i].kind = NodeType::new(format!("t{}", rng.gen_range(0..vocab.max(1)))).expect("valid");
        }
        1 => {
            let parents: Vec<usize> = (0..n).filter(|&i| nodes[i].children.len() >= 2).collect();
            if let Some(&p) = parents.choose(rng) {
                let len = nodes[p].children.len();
                let a = rng.gen_range(0..len);
                let b = rng.gen_range(0..len);
                nodes[p].children.swap(a, b);
            }
        }
        _ => {
            let leaves: Vec<usize> = (1..n).filter(|&i| nodes[i].children.is_empty()).collect();
            if let Some(&leaf) = leaves.choose(rng) {
                for node in &mut nodes {
                    node.children.retain(|&c| c != leaf);
                }
                // leave the orphan unreachable, then rebuild without it
                let keep: Vec<usize> = (0..n).filter(|&i| i != leaf).collect();
                let mut remap = vec![usize::MAX; n];
                for (new, &old) in keep.iter().enumerate() {
                    remap[old] = new;
                }
                nodes = keep
                    .iter()
                    .map(|&old| Node {
                        kind: nodes[old].kind.clone(),
                        children: nodes[old].children.iter().map(|&c| remap[c]).collect(),
                    })
                    .collect();
            }
        }
    }
    TypedTree::from_nodes(nodes, 0).expect("edits keep the tree valid")
}

// ---------------------------------------------------------------------------
// Desk corpus

const NAME_POOL: [&str; 40] = [
    "a", "b", "c", "n", "m", "x", "y", "z", "i", "j", "k", "lo", "hi", "acc", "sum", "total", "count", "best", "limit",
    "value", "items", "values", "data", "buf", "arr", "xs", "ys", "tmp", "left", "right", "mid", "step", "delta",
    "score", "width", "height", "index", "result", "flag", "seen",
];

const FN_POOL: [&str; 24] = [
    "solve",
    "compute",
    "process",
    "helper",
    "check",
    "update",
    "scan",
    "reduce",
    "transform",
    "measure",
    "evaluate",
    "build",
    "count_items",
    "find_best",
    "sum_range",
    "clamp_value",
    "normalize",
    "apply",
    "walk",
    "merge",
    "split_at",
    "gcd",
    "fib",
    "search",
];

const CALLEE_POOL: [&str; 8] = ["abs", "min", "max", "len", "push", "emit", "check", "visit"];

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Gen<'_> {
    fn name(&mut self) -> String {
        let base = *NAME_POOL.choose(self.rng).expect("non-empty");
        if self.rng.gen_bool(0.25) {
            format!("{base}{}", self.rng.gen_range(0..10))
        } else {
            base.to_owned()
        }
    }

    fn var(&mut self) -> Expr {
        Expr::Var(self.name())
    }

    fn int(&mut self) -> Expr {
        Expr::Int(self.rng.gen_range(0..100))
    }

    fn cmp_op(&mut self) -> BinOp {
        *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]
            .choose(self.rng)
            .expect("non-empty")
    }

    fn arith_op(&mut self) -> BinOp {
        *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem]
            .choose(self.rng)
            .expect("non-empty")
    }

    fn atom(&mut self) -> Expr {
        match self.rng.gen_range(0..10) {
            0..=4 => self.var(),
            5..=7 => self.int(),
            8 => Expr::index(self.var(), self.var()),
            _ => Expr::Call(
                CALLEE_POOL.choose(self.rng).expect("non-empty").to_string(),
                vec![self.var()],
            ),
        }
    }

    /// Arithmetic expression of bounded depth.
    fn arith(&mut self, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.atom();
        }
        let op = self.arith_op();
        let l = self.arith(depth - 1);
        let r = self.arith(depth - 1);
        Expr::binary(op, l, r)
    }

    fn cond(&mut self) -> Expr {
        let op = self.cmp_op();
        let l = self.arith(1);
        let r = self.atom();
        let base = Expr::binary(op, l, r);
        match self.rng.gen_range(0..6) {
            0 => {
                let op2 = self.cmp_op();
                let other = Expr::binary(op2, self.var(), self.int());
                Expr::binary(BinOp::And, base, other)
            }
            1 => {
                let other = Expr::unary(UnOp::Not, self.var());
                Expr::binary(BinOp::Or, base, other)
            }
            _ => base,
        }
    }

    fn range(&mut self, lo: Expr, hi: Expr) -> Expr {
        Expr::Call("range".into(), vec![lo, hi])
    }

    fn idiom(&mut self) -> Vec<Stmt> {
        let g = self;
        match g.rng.gen_range(0..14) {
            // accumulate over an array
            0 => {
                let (acc, i, xs, n) = (g.name(), g.name(), g.name(), g.name());
                let zero = Expr::Int(0);
                let body_op = *[BinOp::Add, BinOp::Mul, BinOp::Sub].choose(g.rng).unwrap();
                let elem = Expr::index(Expr::Var(xs), Expr::Var(i.clone()));
                vec![
                    Stmt::Let(acc.clone(), zero),
                    Stmt::For(
                        i,
                        g.range(Expr::Int(0), Expr::Var(n)),
                        vec![Stmt::Assign(
                            Expr::Var(acc.clone()),
                            Expr::binary(body_op, Expr::Var(acc), elem),
                        )],
                    ),
                ]
            }
            // count matching elements
            1 => {
                let (c, i, xs, n) = (g.name(), g.name(), g.name(), g.name());
                let op = g.cmp_op();
                let t = g.atom();
                let elem = Expr::index(Expr::Var(xs), Expr::Var(i.clone()));
                vec![
                    Stmt::Let(c.clone(), Expr::Int(0)),
                    Stmt::For(
                        i,
                        g.range(Expr::Int(0), Expr::Var(n)),
                        vec![Stmt::If(
                            Expr::binary(op, elem, t),
                            vec![Stmt::Assign(
                                Expr::Var(c.clone()),
                                Expr::binary(BinOp::Add, Expr::Var(c), Expr::Int(1)),
                            )],
                            None,
                        )],
                    ),
                ]
            }
            // running maximum
            2 => {
                let (best, i, xs, n) = (g.name(), g.name(), g.name(), g.name());
                let op = if g.rng.gen_bool(0.5) { BinOp::Gt } else { BinOp::Lt };
                let elem = || Expr::index(Expr::Var(xs.clone()), Expr::Var(i.clone()));
                vec![
                    Stmt::Let(best.clone(), Expr::index(Expr::Var(xs.clone()), Expr::Int(0))),
                    Stmt::For(
                        i.clone(),
                        g.range(Expr::Int(1), Expr::Var(n)),
                        vec![Stmt::If(
                            Expr::binary(op, elem(), Expr::Var(best.clone())),
                            vec![Stmt::Assign(Expr::Var(best), elem())],
                            None,
                        )],
                    ),
                ]
            }
            // euclid
            3 => {
                let (a, b, t) = (g.name(), g.name(), g.name());
                vec![Stmt::While(
                    Expr::binary(BinOp::Ne, Expr::Var(b.clone()), Expr::Int(0)),
                    vec![
                        Stmt::Let(t.clone(), Expr::Var(b.clone())),
                        Stmt::Assign(
                            Expr::Var(b.clone()),
                            Expr::binary(BinOp::Rem, Expr::Var(a.clone()), Expr::Var(b)),
                        ),
                        Stmt::Assign(Expr::Var(a), Expr::Var(t)),
                    ],
                )]
            }
            // clamp
            4 => {
                let (x, lo, hi) = (g.name(), g.name(), g.name());
                let else_part = if g.rng.gen_bool(0.6) {
                    Some(Else::If(Box::new(Stmt::If(
                        Expr::binary(BinOp::Gt, Expr::Var(x.clone()), Expr::Var(hi.clone())),
                        vec![Stmt::Assign(Expr::Var(x.clone()), Expr::Var(hi))],
                        None,
                    ))))
                } else {
                    Some(Else::Block(vec![Stmt::Assign(
                        Expr::Var(x.clone()),
                        Expr::binary(BinOp::Add, Expr::Var(x.clone()), Expr::Int(1)),
                    )]))
                };
                vec![Stmt::If(
                    Expr::binary(BinOp::Lt, Expr::Var(x.clone()), Expr::Var(lo.clone())),
                    vec![Stmt::Assign(Expr::Var(x), Expr::Var(lo))],
                    else_part,
                )]
            }
            // swap two slots
            5 => {
                let (t, xs, i, j) = (g.name(), g.name(), g.name(), g.name());
                let at = |k: &str| Expr::index(Expr::Var(xs.clone()), Expr::Var(k.to_owned()));
                vec![
                    Stmt::Let(t.clone(), at(&i)),
                    Stmt::Assign(at(&i), at(&j)),
                    Stmt::Assign(at(&j), Expr::Var(t)),
                ]
            }
            // guard clause
            6 => {
                let n = g.name();
                let op = g.cmp_op();
                let ret = if g.rng.gen_bool(0.5) {
                    Some(Expr::Var(n.clone()))
                } else {
                    Some(g.int())
                };
                vec![Stmt::If(
                    Expr::binary(op, Expr::Var(n), g.int()),
                    vec![Stmt::Return(ret)],
                    None,
                )]
            }
            // digit loop
            7 => {
                let (k, x) = (g.name(), g.name());
                let base = Expr::Int(*[2, 10, 16].choose(g.rng).unwrap());
                vec![
                    Stmt::Let(k.clone(), Expr::Int(0)),
                    Stmt::While(
                        Expr::binary(BinOp::Gt, Expr::Var(x.clone()), Expr::Int(0)),
                        vec![
                            Stmt::Assign(Expr::Var(x.clone()), Expr::binary(BinOp::Div, Expr::Var(x), base)),
                            Stmt::Assign(
                                Expr::Var(k.clone()),
                                Expr::binary(BinOp::Add, Expr::Var(k), Expr::Int(1)),
                            ),
                        ],
                    ),
                ]
            }
            // nested pair loop
            8 => {
                let (s, i, j, xs, n) = (g.name(), g.name(), g.name(), g.name(), g.name());
                let prod = Expr::binary(
                    BinOp::Mul,
                    Expr::index(Expr::Var(xs.clone()), Expr::Var(i.clone())),
                    Expr::index(Expr::Var(xs), Expr::Var(j.clone())),
                );
                vec![Stmt::For(
                    i.clone(),
                    g.range(Expr::Int(0), Expr::Var(n)),
                    vec![Stmt::For(
                        j,
                        g.range(Expr::Int(0), Expr::Var(i)),
                        vec![Stmt::Assign(
                            Expr::Var(s.clone()),
                            Expr::binary(BinOp::Add, Expr::Var(s), prod),
                        )],
                    )],
                )]
            }
            // midpoint / arithmetic let
            9 => {
                let m = g.name();
                let e = g.arith(2);
                vec![Stmt::Let(m, e)]
            }
            // side-effecting call
            10 => {
                let callee = CALLEE_POOL.choose(g.rng).unwrap().to_string();
                let args = (0..g.rng.gen_range(1..=2)).map(|_| g.atom()).collect();
                vec![Stmt::Expr(Expr::Call(callee, args))]
            }
            // conditional update with else
            11 => {
                let c = g.cond();
                let (v, w) = (g.name(), g.name());
                let e1 = g.arith(1);
                let e2 = g.arith(1);
                vec![Stmt::If(
                    c,
                    vec![Stmt::Assign(Expr::Var(v), e1)],
                    Some(Else::Block(vec![Stmt::Assign(Expr::Var(w), e2)])),
                )]
            }
            // binary search step
            12 => {
                let (lo, hi, mid, xs, key) = (g.name(), g.name(), g.name(), g.name(), g.name());
                vec![Stmt::While(
                    Expr::binary(BinOp::Lt, Expr::Var(lo.clone()), Expr::Var(hi.clone())),
                    vec![
                        Stmt::Let(
                            mid.clone(),
                            Expr::binary(
                                BinOp::Div,
                                Expr::binary(BinOp::Add, Expr::Var(lo.clone()), Expr::Var(hi.clone())),
                                Expr::Int(2),
                            ),
                        ),
                        Stmt::If(
                            Expr::binary(
                                BinOp::Lt,
                                Expr::index(Expr::Var(xs), Expr::Var(mid.clone())),
                                Expr::Var(key),
                            ),
                            vec![Stmt::Assign(
                                Expr::Var(lo),
                                Expr::binary(BinOp::Add, Expr::Var(mid.clone()), Expr::Int(1)),
                            )],
                            Some(Else::Block(vec![Stmt::Assign(Expr::Var(hi), Expr::Var(mid))])),
                        ),
                    ],
                )]
            }
            // boolean flag
            _ => {
                let f = g.name();
                let c = g.cond();
                vec![Stmt::Let(f, c)]
            }
        }
    }

    fn function(&mut self) -> Function {
        let name = FN_POOL.choose(self.rng).expect("non-empty").to_string();
        let params = (0..self.rng.gen_range(1..=3)).map(|_| self.name()).collect();
        let mut body = Vec::new();
        for _ in 0..self.rng.gen_range(2..=4) {
            body.extend(self.idiom());
        }
        let ret = match self.rng.gen_range(0..4) {
            0 => self.var(),
            1 => self.arith(2),
            2 => {
                let callee = name.clone();
                let arg = Expr::binary(BinOp::Sub, self.var(), Expr::Int(1));
                Expr::binary(
                    BinOp::Add,
                    Expr::Call(callee.clone(), vec![arg.clone()]),
                    Expr::Call(callee, vec![arg]),
                )
            }
            _ => self.cond(),
        };
        body.push(Stmt::Return(Some(ret)));
        Function { name, params, body }
    }
}

pub fn desk_program(rng: &mut ChaCha8Rng) -> Program {
    Program {
        functions: vec![Gen { rng }.function()],
    }
}

fn desk_entries(rng: &mut ChaCha8Rng, prefix: &str, count: usize) -> Vec<CorpusEntry> {
    (0..count)
        .map(|i| {
            let p = desk_program(rng);
            CorpusEntry {
                id: format!("{prefix}{i:04}"),
                source_lang: LANGUAGE_ID.into(),
                target_lang: "py".into(),
                source: p.render(),
                target: p.render_python(),
                sexpr: None,
            }
        })
        .collect()
}

/// The desk corpus: `(exemplars, held-out queries)`.
pub fn desk_corpus(seed: u64) -> (Vec<CorpusEntry>, Vec<CorpusEntry>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let exemplars = desk_entries(&mut rng, "ex", DESK_EXEMPLARS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let queries = desk_entries(&mut rng, "q", DESK_QUERIES);
    (exemplars, queries)
}

/// 200 entries whose trees are given as S-expressions, drawn over a 12-type vocabulary.
pub fn synthetic_sexpr_corpus(seed: u64, count: usize) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<TypedTree> = Vec::new();
    (0..count)
        .map(|i| {
            // reuse whole earlier trees as subtrees now and then so rows are not all sparse
            let fresh = random_tree(&mut rng, 40, 12);
            let tree = match pool.choose(&mut rng) {
                Some(prev) if rng.gen_bool(0.4) => {
                    TypedTree::with_children(fresh.kind(0).clone(), vec![fresh.clone(), prev.clone()])
                }
                _ => fresh,
            };
            if tree.node_count() < 60 {
                pool.push(tree.clone());
            }
            let text = to_sexpr(&tree);
            CorpusEntry {
                id: format!("s{i:04}"),
                source_lang: "sexpr".into(),
                target_lang: "sexpr".into(),
                source: text.clone(),
                target: text.clone(),
                sexpr: Some(text),
            }
        })
        .collect()
}

/// Node-type histogram, L2-normalized, over a fixed vocabulary.
///
/// Stands in for a learned code embedding when exercising the
/// embedding-based baselines.
pub fn type_histogram_embedding(tree: &TypedTree, vocabulary: &[&str]) -> Vec<f64> {
    let counts = tree.type_counts();
    let mut v: Vec<f64> = vocabulary
        .iter()
        .map(|t| counts.get(t).copied().unwrap_or(0) as f64)
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Type-histogram vectors for `expr` entries, keyed by entry id.
pub fn desk_embeddings<'a>(entries: impl IntoIterator<Item = &'a CorpusEntry>) -> Result<EmbeddingTable> {
    let vocab = expr_vocabulary();
    let mut table = EmbeddingTable::new(vocab.len());
    for e in entries {
        let tree = e.tree(&ExprAdapter)?;
        table.insert(e.id.clone(), type_histogram_embedding(&tree, &vocab))?;
    }
    Ok(table)
}

/// Every node type the `expr` adapter can emit, in a fixed order.
pub fn expr_vocabulary() -> Vec<&'static str> {
    let mut v = vec![
        "program",
        "function_definition",
        "parameters",
        "block",
        "let_declaration",
        "assignment",
        "if_statement",
        "else_clause",
        "while_statement",
        "for_statement",
        "return_statement",
        "expression_statement",
        "binary_expression",
        "unary_expression",
        "call_expression",
        "arguments",
        "index_expression",
        "parenthesized_expression",
        "identifier",
        "integer",
        "boolean",
    ];
    v.extend(BinOp::ALL.iter().map(|op| op.token()));
    v.push(UnOp::Not.token());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse_program;

    #[test]
    fn random_trees_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let t = random_tree(&mut rng, 30, 5);
            assert!((1..=30).contains(&t.node_count()));
            let m = mutate_tree(&mut rng, &t, 5);
            assert!(m.node_count() + 1 >= t.node_count());
        }
    }

    #[test]
    fn desk_programs_round_trip_through_parser() {
        let (ex, q) = desk_corpus(7);
        assert_eq!(ex.len(), DESK_EXEMPLARS);
        assert_eq!(q.len(), DESK_QUERIES);
        let vocab = expr_vocabulary();
        for e in ex.iter().chain(&q).take(60) {
            let p = parse_program(&e.source).unwrap_or_else(|err| panic!("{err}\n{}", e.source));
            assert_eq!(p.render(), e.source);
            let tree = p.typed_tree();
            for n in tree.nodes() {
                assert!(vocab.contains(&n.kind.as_str()), "{}", n.kind);
            }
        }
    }

    #[test]
    fn desk_corpus_is_deterministic() {
        assert_eq!(desk_corpus(3), desk_corpus(3));
        assert_ne!(desk_corpus(3).0[0], desk_corpus(4).0[0]);
    }

    #[test]
    fn histogram_is_unit_norm() {
        let tree = crate::tree::parse_sexpr("(program (identifier) (identifier))").unwrap();
        let v = type_histogram_embedding(&tree, &["program", "identifier", "integer"]);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(v[2], 0.0);
    }
}
