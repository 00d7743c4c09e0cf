// SPDX-License-Identifier: Apache-2.0

//! Reference exemplar selectors.
//!
//! Each selector returns database positions, best first. Scores that tie
//! are broken by ascending position.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::ExemplarDatabase;
use crate::selector::rank_by_levenshtein;
use crate::tree::{NodeType, TypedTree};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

const KMEANS_MAX_ITERS: usize = 100;
const KMEANS_TOLERANCE: f64 = 1e-9;

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the {n} available exemplars")));
    }
    Ok(())
}

/// `k` distinct positions drawn uniformly without replacement.
pub fn select_random(db: &ExemplarDatabase, k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(k, db.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, db.len(), k).into_vec())
}

/// The same positions for every query.
pub fn select_fixed(db: &ExemplarDatabase, ids: &[impl AsRef<str>]) -> Result<Vec<usize>> {
    let mut seen = BTreeSet::new();
    ids.iter()
        .map(|id| {
            let id = id.as_ref();
            let pos = db.position_of(id).ok_or_else(|| Error::UnknownId(id.to_owned()))?;
            if !seen.insert(pos) {
                return Err(Error::DuplicateId(id.to_owned()));
            }
            Ok(pos)
        })
        .collect()
}

/// `k` nearest sources by byte-level Levenshtein distance.
pub fn select_ld(db: &ExemplarDatabase, query_source: &str, k: usize) -> Result<Vec<usize>> {
    check_k(k, db.len())?;
    Ok(rank_by_levenshtein(db, query_source)
        .into_iter()
        .take(k)
        .map(|(_, pos)| pos)
        .collect())
}

// ---------------------------------------------------------------------------
// BM25

/// Maximal runs of ASCII alphanumerics and `_`, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

/// `ln((n - df + 0.5) / (df + 0.5) + 1)`.
pub fn bm25_idf(df: usize, n: usize) -> f64 {
    ((n as f64 - df as f64 + 0.5) / (df as f64 + 0.5) + 1.0).ln()
}

/// Precomputed term statistics over the database sources.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    doc_tf: Vec<HashMap<String, usize>>,
    doc_len: Vec<usize>,
    df: HashMap<String, usize>,
    avg_len: f64,
}

impl Bm25Index {
    pub fn new(db: &ExemplarDatabase) -> Self {
        Self::from_texts(db.records().iter().map(|r| r.source.as_str()))
    }

    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut doc_tf = Vec::new();
        let mut doc_len = Vec::new();
        let mut df: HashMap<String, usize> = HashMap::new();
        for text in texts {
            let toks = tokenize(text);
            doc_len.push(toks.len());
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in toks {
                *tf.entry(t).or_insert(0) += 1;
            }
            for t in tf.keys() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
            doc_tf.push(tf);
        }
        let avg_len = if doc_len.is_empty() {
            0.0
        } else {
            doc_len.iter().sum::<usize>() as f64 / doc_len.len() as f64
        };
        Bm25Index {
            doc_tf,
            doc_len,
            df,
            avg_len,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_tf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_tf.is_empty()
    }

    /// Score of every document against the distinct terms of `query`.
    pub fn scores(&self, query: &str) -> Result<Vec<f64>> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        if terms.is_empty() {
            return Err(Error::invalid("query has no BM25 tokens"));
        }
        let n = self.len();
        let idf: Vec<(&String, f64)> = terms
            .iter()
            .map(|t| (t, bm25_idf(self.df.get(t).copied().unwrap_or(0), n)))
            .collect();
        Ok((0..n)
            .map(|d| {
                let norm = 1.0 - BM25_B + BM25_B * self.doc_len[d] as f64 / self.avg_len.max(f64::MIN_POSITIVE);
                idf.iter()
                    .map(|(t, idf)| {
                        let tf = self.doc_tf[d].get(*t).copied().unwrap_or(0) as f64;
                        idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm)
                    })
                    .sum()
            })
            .collect())
    }

    pub fn top_k(&self, query: &str, k: usize) -> Result<Vec<usize>> {
        check_k(k, self.len())?;
        Ok(rank_desc(&self.scores(query)?).into_iter().take(k).collect())
    }
}

pub fn select_bm25(db: &ExemplarDatabase, query_source: &str, k: usize) -> Result<Vec<usize>> {
    Bm25Index::new(db).top_k(query_source, k)
}

/// Positions sorted by descending score, ties by ascending position.
fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

// ---------------------------------------------------------------------------
// Tree edit distance

/// Post-order view of a tree for the Zhang–Shasha recurrence.
struct ZsTree<'a> {
    labels: Vec<&'a NodeType>,
    /// Leftmost leaf descendant, as a post-order index.
    lld: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> ZsTree<'a> {
    fn new(tree: &'a TypedTree) -> Self {
        let order = tree.postorder();
        let mut post_of = vec![0usize; tree.node_count()];
        for (p, &node) in order.iter().enumerate() {
            post_of[node] = p;
        }
        let mut lld = vec![0usize; order.len()];
        for (p, &node) in order.iter().enumerate() {
            lld[p] = match tree.children(node).first() {
                Some(&first) => lld[post_of[first]],
                None => p,
            };
        }
        let mut last_with: HashMap<usize, usize> = HashMap::new();
        for (p, &l) in lld.iter().enumerate() {
            last_with.insert(l, p);
        }
        let mut keyroots: Vec<usize> = last_with.into_values().collect();
        keyroots.sort_unstable();
        ZsTree {
            labels: order.iter().map(|&n| tree.kind(n)).collect(),
            lld,
            keyroots,
        }
    }
}

/// Ordered tree edit distance with unit insert, delete and relabel costs
/// (relabelling to an equal type is free).
pub fn tree_edit_distance(a: &TypedTree, b: &TypedTree) -> usize {
    let t1 = ZsTree::new(a);
    let t2 = ZsTree::new(b);
    let (n1, n2) = (t1.labels.len(), t2.labels.len());
    let mut td = vec![vec![0usize; n2]; n1];
    let mut fd = vec![vec![0usize; n2 + 1]; n1 + 1];
    for &i in &t1.keyroots {
        for &j in &t2.keyroots {
            let (li, lj) = (t1.lld[i], t2.lld[j]);
            let (rows, cols) = (i - li + 2, j - lj + 2);
            fd[0][0] = 0;
            for x in 1..rows {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..cols {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..rows {
                let xn = li + x - 1;
                for y in 1..cols {
                    let yn = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if t1.lld[xn] == li && t2.lld[yn] == lj {
                        let relabel = usize::from(t1.labels[xn] != t2.labels[yn]);
                        let v = del.min(ins).min(fd[x - 1][y - 1] + relabel);
                        fd[x][y] = v;
                        td[xn][yn] = v;
                    } else {
                        let px = t1.lld[xn] - li;
                        let py = t2.lld[yn] - lj;
                        fd[x][y] = del.min(ins).min(fd[px][py] + td[xn][yn]);
                    }
                }
            }
        }
    }
    td[n1 - 1][n2 - 1]
}

/// `k` nearest exemplar trees by ordered tree edit distance.
pub fn select_ast_ed(db: &ExemplarDatabase, query_tree: &TypedTree, k: usize) -> Result<Vec<usize>> {
    check_k(k, db.len())?;
    let mut scored: Vec<(usize, usize)> = db
        .records()
        .par_iter()
        .enumerate()
        .map(|(pos, r)| (tree_edit_distance(query_tree, &r.tree), pos))
        .collect();
    scored.sort_unstable();
    Ok(scored.into_iter().take(k).map(|(_, p)| p).collect())
}

// ---------------------------------------------------------------------------
// Embeddings

/// Externally computed vectors keyed by exemplar or query id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    by_id: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            by_id: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.by_id.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.by_id.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Table whose row `i` is the vector of database record `i`. Extra ids
    /// (e.g. query vectors) are dropped; a missing record is an error.
    pub fn for_database(&self, db: &ExemplarDatabase) -> Result<EmbeddingTable> {
        let mut out = EmbeddingTable::new(self.dim);
        for r in db.records() {
            let v = self.get(&r.id).ok_or_else(|| Error::UnknownId(r.id.clone()))?;
            out.insert(r.id.clone(), v.to_vec())?;
        }
        Ok(out)
    }

    /// Parses `dim d` followed by `id v1 ... vd` lines.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Format {
            path: origin.to_owned(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing `dim` header".into()))?;
        let dim = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["dim", d] => d.parse::<usize>().map_err(|e| err(hline + 1, e.to_string()))?,
            _ => return Err(err(hline + 1, "expected `dim <d>`".into())),
        };
        let mut table = EmbeddingTable::new(dim);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let id = parts.next().expect("non-blank line");
            let v = parts
                .map(|p| p.parse::<f64>().map_err(|e| err(i + 1, format!("{p:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            table.insert(id, v).map_err(|e| err(i + 1, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, &path.display().to_string())
    }

    /// Writes the text format; floats use Rust's shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dim);
        for (id, v) in self.ids.iter().zip(&self.vectors) {
            out.push_str(id);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine of each table row with `query`. Zero-norm rows score `-inf` so
/// they rank last; a zero query scores every other row 0.
pub fn cosine_scores(table: &EmbeddingTable, query: &[f64]) -> Result<Vec<f64>> {
    if query.len() != table.dim {
        return Err(Error::DimensionMismatch {
            expected: table.dim,
            actual: query.len(),
        });
    }
    let qn = norm(query);
    Ok(table
        .vectors
        .iter()
        .map(|v| {
            let vn = norm(v);
            if vn == 0.0 {
                f64::NEG_INFINITY
            } else if qn == 0.0 {
                0.0
            } else {
                dot(v, query) / (vn * qn)
            }
        })
        .collect())
}

/// Top `k` rows by cosine similarity. Row indices equal database positions
/// when the table comes from [`EmbeddingTable::for_database`].
pub fn select_embed_topk(table: &EmbeddingTable, query: &[f64], k: usize) -> Result<Vec<usize>> {
    check_k(k, table.len())?;
    Ok(rank_desc(&cosine_scores(table, query)?).into_iter().take(k).collect())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means with k-means++ seeding. Returns the cluster of each point.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(k, points.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();

    let mut centroids: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(points[next].clone());
        let c = centroids.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }

    let assign = |centroids: &[Vec<f64>]| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let mut best = (f64::INFINITY, 0);
                for (ci, c) in centroids.iter().enumerate() {
                    let d = sq_dist(p, c);
                    if d < best.0 {
                        best = (d, ci);
                    }
                }
                best.1
            })
            .collect()
    };

    let dim = points[0].len();
    let mut labels = assign(&centroids);
    for _ in 0..KMEANS_MAX_ITERS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            // an empty cluster keeps its previous centroid
            if counts[c] > 0 {
                let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                shift = shift.max(sq_dist(&updated, &centroids[c]).sqrt());
                centroids[c] = updated;
            }
        }
        labels = assign(&centroids);
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    Ok(labels)
}

/// Clusters the table into `k` groups and takes, from each, the member most
/// similar to the query. Empty clusters are backfilled with the best
/// remaining rows by global cosine. Output is ordered by descending cosine.
pub fn select_diversity(table: &EmbeddingTable, query: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    check_k(k, table.len())?;
    let scores = cosine_scores(table, query)?;
    let labels = kmeans(&table.vectors, k, seed)?;
    let mut best_in: Vec<Option<usize>> = vec![None; k];
    for (i, &l) in labels.iter().enumerate() {
        let better = match best_in[l] {
            None => true,
            Some(b) => scores[i] > scores[b],
        };
        if better {
            best_in[l] = Some(i);
        }
    }
    let mut picked: Vec<usize> = best_in.into_iter().flatten().collect();
    if picked.len() < k {
        let taken: BTreeSet<usize> = picked.iter().copied().collect();
        let fill: Vec<usize> = rank_desc(&scores)
            .into_iter()
            .filter(|i| !taken.contains(i))
            .take(k - picked.len())
            .collect();
        picked.extend(fill);
    }
    picked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(picked)
}
