// SPDX-License-Identifier: Apache-2.0

//! Independent reference implementations used as test oracles. None of these
//! call into the library beyond reading tree structure.

#![allow(dead_code)]

use std::collections::HashSet;

use cast_retrieval::TypedTree;

/// Bracketed serialization built by plain recursion, distinct in format
/// from the library's S-expression writer.
pub fn canonical(tree: &TypedTree, node: usize) -> String {
    let kids: Vec<String> = tree.children(node).iter().map(|&c| canonical(tree, c)).collect();
    format!("{}[{}]", tree.kind(node).as_str(), kids.join(","))
}

pub fn canonical_root(tree: &TypedTree) -> String {
    canonical(tree, tree.root())
}

/// Node indices in post-order by recursion.
pub fn postorder(tree: &TypedTree) -> Vec<usize> {
    fn go(t: &TypedTree, n: usize, out: &mut Vec<usize>) {
        for &c in t.children(n) {
            go(t, c, out);
        }
        out.push(n);
    }
    let mut out = Vec::new();
    go(tree, tree.root(), &mut out);
    out
}

/// Canonical strings of every rooted subtree.
pub fn subtree_set(tree: &TypedTree) -> HashSet<String> {
    (0..tree.node_count()).map(|n| canonical(tree, n)).collect()
}

/// `rows[c][j]`: does candidate `c` contain the subtree rooted at the test
/// tree's `j`-th post-order node?
pub fn naive_matrix(candidates: &[&TypedTree], test: &TypedTree) -> Vec<Vec<bool>> {
    let cols: Vec<String> = postorder(test).into_iter().map(|n| canonical(test, n)).collect();
    candidates
        .iter()
        .map(|c| {
            let set = subtree_set(c);
            cols.iter().map(|s| set.contains(s)).collect()
        })
        .collect()
}

/// Full-table Levenshtein distance.
pub fn dp_levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

struct Flat {
    labels: Vec<String>,
    /// pre-order index -> number of nodes in its subtree
    size: Vec<usize>,
}

fn flatten(tree: &TypedTree) -> Flat {
    fn go(t: &TypedTree, n: usize, labels: &mut Vec<String>, size: &mut Vec<usize>) -> usize {
        let me = labels.len();
        labels.push(t.kind(n).as_str().to_owned());
        size.push(0);
        let mut s = 1;
        for &c in t.children(n) {
            s += go(t, c, labels, size);
        }
        size[me] = s;
        s
    }
    let (mut labels, mut size) = (Vec::new(), Vec::new());
    go(tree, tree.root(), &mut labels, &mut size);
    Flat { labels, size }
}

type SearchCtx<'a> = (
    usize,
    usize,
    &'a dyn Fn(usize, usize) -> bool,
    &'a dyn Fn(usize, usize) -> bool,
    &'a dyn Fn(usize, usize) -> usize,
);

/// Minimum edit cost over all ordered (Tai) mappings, by exhaustive search.
/// Exponential; intended for trees of at most about seven nodes.
pub fn brute_force_ted(a: &TypedTree, b: &TypedTree) -> usize {
    let fa = flatten(a);
    let fb = flatten(b);
    let anc = |f: &Flat, x: usize, y: usize| x < y && y < x + f.size[x];
    let n1 = fa.labels.len();
    let n2 = fb.labels.len();

    fn search(i: usize, pairs: &mut Vec<(usize, usize)>, relabels: usize, best: &mut usize, ctx: &SearchCtx<'_>) {
        let (n1, n2, anc1, anc2, relabel) = *ctx;
        if i == n1 {
            let cost = relabels + (n1 - pairs.len()) + (n2 - pairs.len());
            *best = (*best).min(cost);
            return;
        }
        // leave node i unmapped (deleted)
        search(i + 1, pairs, relabels, best, ctx);
        let start = pairs.last().map_or(0, |p| p.1 + 1);
        for j in start..n2 {
            if pairs.iter().all(|&(pi, pj)| anc1(pi, i) == anc2(pj, j)) {
                pairs.push((i, j));
                search(i + 1, pairs, relabels + relabel(i, j), best, ctx);
                pairs.pop();
            }
        }
    }

    let anc1 = |x: usize, y: usize| anc(&fa, x, y);
    let anc2 = |x: usize, y: usize| anc(&fb, x, y);
    let relabel = |x: usize, y: usize| usize::from(fa.labels[x] != fb.labels[y]);
    let mut best = n1 + n2;
    search(0, &mut Vec::new(), 0, &mut best, &(n1, n2, &anc1, &anc2, &relabel));
    best
}

/// Largest union size over subsets of at most `k` rows, rows as bitmasks.
pub fn brute_force_optimum(rows: &[u64], k: usize) -> u32 {
    let n = rows.len();
    let mut best = 0;
    for subset in 0u32..(1u32 << n) {
        if subset.count_ones() as usize > k {
            continue;
        }
        let mut acc = 0u64;
        for (i, r) in rows.iter().enumerate() {
            if subset >> i & 1 == 1 {
                acc |= r;
            }
        }
        best = best.max(acc.count_ones());
    }
    best
}
