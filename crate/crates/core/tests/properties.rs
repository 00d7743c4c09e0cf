// SPDX-License-Identifier: Apache-2.0

mod support;

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::sample::select;

use cast_retrieval::baselines::{
    select_ast_ed, select_bm25, select_ld, select_random, tree_edit_distance, EmbeddingTable,
};
use cast_retrieval::bits::BitVec;
use cast_retrieval::fingerprint::{fingerprint_tree, fingerprint_tree_with};
use cast_retrieval::harness::{exact_match, normalize_for_match};
use cast_retrieval::index::{build_cooccurrence, CoMatrix, ExemplarDatabase, ExemplarRecord};
use cast_retrieval::selector::{coverage_value, greedy_select, greedy_until, marginal_gain, prerecall_ld, TieBreak};
use cast_retrieval::tree::{parse_sexpr, to_sexpr, NodeType};
use cast_retrieval::TypedTree;

use support::{brute_force_ted, canonical, canonical_root, naive_matrix, postorder, subtree_set};

fn arb_tree(labels: &'static [&'static str], max_nodes: u32) -> impl Strategy<Value = TypedTree> {
    let label = select(labels);
    let leaf = label.clone().prop_map(|l| TypedTree::leaf(NodeType::new(l).unwrap()));
    leaf.prop_recursive(8, max_nodes, 4, move |inner| {
        (label.clone(), prop::collection::vec(inner, 0..4))
            .prop_map(|(l, kids)| TypedTree::with_children(NodeType::new(l).unwrap(), kids))
    })
}

const LABELS: &[&str] = &["A", "B", "C", "D", "if_statement", "identifier"];
const FEW: &[&str] = &["A", "B"];

fn arb_matrix() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (1usize..10, 1usize..80)
        .prop_flat_map(|(rows, cols)| prop::collection::vec(prop::collection::vec(any::<bool>(), cols), rows))
}

fn to_matrix(rows: &[Vec<bool>]) -> CoMatrix {
    let cols = rows[0].len();
    CoMatrix::new(
        rows.iter().map(|r| BitVec::from_bools(r.iter().copied())).collect(),
        cols,
        (0..rows.len()).collect(),
    )
    .unwrap()
}

fn db_of(trees: &[TypedTree]) -> ExemplarDatabase {
    let records = trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let text = to_sexpr(t);
            ExemplarRecord::new(format!("r{i}"), "sexpr", "sexpr", text.clone(), text, t.clone())
        })
        .collect();
    ExemplarDatabase::from_records(records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sexpr_round_trip(t in arb_tree(LABELS, 200)) {
        let text = to_sexpr(&t);
        let back = parse_sexpr(&text).unwrap();
        prop_assert_eq!(back.node_count(), t.node_count());
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(to_sexpr(&back), text);
    }

    #[test]
    fn fingerprint_equality_matches_structure(a in arb_tree(FEW, 12), b in arb_tree(FEW, 12)) {
        let same_fp = fingerprint_tree(&a).root() == fingerprint_tree(&b).root();
        prop_assert_eq!(same_fp, canonical_root(&a) == canonical_root(&b));
    }

    #[test]
    fn fingerprinting_visits_each_node_once(t in arb_tree(LABELS, 200)) {
        let mut seen = vec![0u32; t.node_count()];
        let profile = fingerprint_tree_with(&t, |node, _| seen[node] += 1);
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert_eq!(profile.by_postorder().len(), t.node_count());
        // one fingerprint per distinct rooted subtree
        prop_assert_eq!(profile.set().len(), subtree_set(&t).len());
        let oracle_order = postorder(&t);
        prop_assert_eq!(profile.postorder(), oracle_order.as_slice());
    }

    #[test]
    fn matrix_matches_naive_scan(
        trees in prop::collection::vec(arb_tree(FEW, 15), 1..8),
        q in arb_tree(FEW, 20),
    ) {
        let db = db_of(&trees);
        let all: Vec<usize> = (0..db.len()).collect();
        let m = build_cooccurrence(&db, &all, &fingerprint_tree(&q)).unwrap();
        let refs: Vec<&TypedTree> = trees.iter().collect();
        let naive = naive_matrix(&refs, &q);
        for (r, row) in naive.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                prop_assert_eq!(m.get(r, c), v, "row {} col {}", r, c);
            }
        }
    }

    #[test]
    fn rows_are_closed_under_descendants(
        trees in prop::collection::vec(arb_tree(FEW, 15), 1..6),
        q in arb_tree(FEW, 20),
    ) {
        let db = db_of(&trees);
        let profile = fingerprint_tree(&q);
        let m = build_cooccurrence(&db, &(0..db.len()).collect::<Vec<_>>(), &profile).unwrap();
        let order = profile.postorder();
        let mut col = vec![0; order.len()];
        for (c, &n) in order.iter().enumerate() {
            col[n] = c;
        }
        for r in 0..m.row_count() {
            for (c, &n) in order.iter().enumerate() {
                if m.get(r, c) {
                    for d in q.descendants(n) {
                        prop_assert!(m.get(r, col[d]));
                    }
                }
            }
        }
    }

    #[test]
    fn database_persistence_round_trip(trees in prop::collection::vec(arb_tree(LABELS, 40), 1..6)) {
        let db = db_of(&trees);
        let mut bytes = Vec::new();
        db.write_to(&mut bytes).unwrap();
        prop_assert_eq!(&ExemplarDatabase::read_from(bytes.as_slice()).unwrap(), &db);
        let dump = db.to_json_dump();
        prop_assert_eq!(&ExemplarDatabase::from_json_dump(&dump).unwrap(), &db);
    }

    #[test]
    fn marginal_gain_forms(rows in arb_matrix(), mask_seed in prop::collection::vec(any::<bool>(), 80)) {
        let m = to_matrix(&rows);
        let cols = m.column_count();
        let mask = BitVec::from_bools(mask_seed[..cols].iter().copied());
        for i in 0..m.row_count() {
            let x = m.row(i).unwrap();
            let g = marginal_gain(&m, &mask, i).unwrap();
            prop_assert_eq!(g, mask.or(x).count_ones() - mask.count_ones());
            prop_assert_eq!(g, x.count_ones() - x.and(&mask).count_ones());
        }
    }

    #[test]
    fn coverage_is_monotone_submodular(rows in arb_matrix(), picks in prop::collection::vec(0u8..3, 10)) {
        // picks[i]: 0 = outside B, 1 = in B only, 2 = in A (and so in B)
        let m = to_matrix(&rows);
        let n = m.row_count();
        let a: Vec<usize> = (0..n).filter(|&i| picks[i] == 2).collect();
        let b: Vec<usize> = (0..n).filter(|&i| picks[i] >= 1).collect();
        let f = |s: &[usize]| coverage_value(&m, s).unwrap();
        prop_assert_eq!(f(&[]), 0);
        prop_assert!(f(&a) <= f(&b));
        for x in (0..n).filter(|&i| picks[i] == 0) {
            let mut ax = a.clone();
            ax.push(x);
            let mut bx = b.clone();
            bx.push(x);
            prop_assert!(f(&ax) - f(&a) >= f(&bx) - f(&b));
        }
    }

    #[test]
    fn greedy_trace_invariants(rows in arb_matrix(), k in 1usize..12) {
        let m = to_matrix(&rows);
        let r = greedy_select(&m, k, TieBreak::PrerecallRank).unwrap();
        prop_assert_eq!(r.len(), k.min(m.row_count()));
        prop_assert_eq!(r.shortfall, k.saturating_sub(m.row_count()));
        let distinct: HashSet<_> = r.rows.iter().collect();
        prop_assert_eq!(distinct.len(), r.rows.len());
        prop_assert!(r.gains.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(r.cast_after.windows(2).all(|w| w[0] <= w[1]));
        for step in 1..=r.rows.len() {
            let covered = coverage_value(&m, &r.rows[..step]).unwrap();
            prop_assert_eq!(covered, r.gains[..step].iter().sum::<usize>());
        }
        prop_assert_eq!(r.coverage_mask.count_ones(), coverage_value(&m, &r.rows).unwrap());
        let zero_gain_steps = r.gains.iter().filter(|&&g| g == 0).count();
        prop_assert_eq!(r.filled_by_fallback, zero_gain_steps);
    }

    #[test]
    fn threshold_selection_stops_correctly(rows in arb_matrix(), tau in 0.05f64..=1.0, k_max in 1usize..12) {
        let m = to_matrix(&rows);
        let r = greedy_until(&m, tau, k_max, TieBreak::PrerecallRank).unwrap();
        prop_assert!(r.len() <= k_max);
        prop_assert!(r.gains.iter().all(|&g| g > 0));
        // every step but the last was below tau
        for c in r.cast_after.iter().rev().skip(1) {
            prop_assert!(*c < tau);
        }
        prop_assert_eq!(r.threshold_met, Some(r.final_cast() >= tau));
    }

    #[test]
    fn tree_edit_distance_agrees_with_search(a in arb_tree(FEW, 7), b in arb_tree(FEW, 7)) {
        prop_assume!(a.node_count() <= 7 && b.node_count() <= 7);
        prop_assert_eq!(tree_edit_distance(&a, &b), brute_force_ted(&a, &b));
    }

    #[test]
    fn tree_edit_distance_metric(a in arb_tree(LABELS, 30), b in arb_tree(LABELS, 30), c in arb_tree(LABELS, 30)) {
        let d = |x: &TypedTree, y: &TypedTree| tree_edit_distance(x, y);
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &b) == 0, canonical(&a, 0) == canonical(&b, 0));
    }

    #[test]
    fn selectors_return_distinct_in_range(
        trees in prop::collection::vec(arb_tree(LABELS, 12), 1..10),
        q in arb_tree(LABELS, 12),
        k in 1usize..10,
        seed in any::<u64>(),
    ) {
        let db = db_of(&trees);
        let k = k.min(db.len());
        let qs = to_sexpr(&q);
        let outs = [
            select_ld(&db, &qs, k).unwrap(),
            select_bm25(&db, &qs, k).unwrap(),
            select_random(&db, k, seed).unwrap(),
            select_ast_ed(&db, &q, k).unwrap(),
        ];
        for o in &outs {
            prop_assert_eq!(o.len(), k);
            prop_assert!(o.iter().all(|&p| p < db.len()));
            prop_assert_eq!(o.iter().collect::<HashSet<_>>().len(), k);
        }
        prop_assert_eq!(&outs[0], &prerecall_ld(&db, &qs, k).unwrap());
    }

    #[test]
    fn exact_match_normalization(s in "[a-z \t\n]{0,40}") {
        prop_assert!(exact_match(&s, &s));
        let n = normalize_for_match(&s);
        prop_assert_eq!(normalize_for_match(&n), n.clone());
        let padded = s.clone() + "\n\n";
        prop_assert!(exact_match(&padded, &s));
    }

    #[test]
    fn embedding_text_round_trip(vs in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..8)) {
        let mut t = EmbeddingTable::new(3);
        for (i, v) in vs.iter().enumerate() {
            t.insert(format!("e{i}"), v.clone()).unwrap();
        }
        prop_assert_eq!(EmbeddingTable::parse(&t.to_text(), "mem").unwrap(), t);
    }
}
