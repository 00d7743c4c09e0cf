// SPDX-License-Identifier: Apache-2.0

//! Coverage-maximizing exemplar selection.
//!
//! The objective for a set `S` of matrix rows is
//! `f(S) = popcount(OR of M[s] for s in S)`, the number of query nodes whose
//! rooted subtree appears in at least one selected exemplar. `f` is
//! non-negative, monotone and submodular, so picking the row with the largest
//! marginal gain `popcount(M[i] AND NOT mask)` at each step is within a factor
//! `1 - (1 - 1/k)^k` of the best `k`-subset.
//!
//! Two pipelines sit on top of the greedy core:
//!
//! * [`select_cast_f`] picks exactly `k` exemplars.
//! * [`select_cast_a`] stops once the covered fraction reaches `tau`.
//!
//! Both first shortlist `floor(t * k)` candidates by Levenshtein distance of
//! the raw source bytes, then build the matrix over that shortlist only.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::fingerprint::fingerprint_tree;
use crate::index::{build_cooccurrence, CoMatrix, ExemplarDatabase};
use crate::tree::{ParserAdapter, TypedTree};

pub const DEFAULT_PRERECALL_FACTOR: f64 = 2.0;
pub const DEFAULT_TAU: f64 = 0.98;
pub const DEFAULT_K_MAX: usize = 20;

/// Order among candidates with equal marginal gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Earlier matrix row (better pre-recall rank) wins.
    #[default]
    PrerecallRank,
    /// Lower database position wins.
    LowestPosition,
}

/// Order of exemplar blocks in an assembled prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptOrder {
    #[default]
    Selection,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    pub t: f64,
    pub tau: f64,
    pub k_max: usize,
    pub tie_break: TieBreak,
    pub prompt_order: PromptOrder,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: 4,
            t: DEFAULT_PRERECALL_FACTOR,
            tau: DEFAULT_TAU,
            k_max: DEFAULT_K_MAX,
            tie_break: TieBreak::default(),
            prompt_order: PromptOrder::default(),
        }
    }
}

impl SelectionConfig {
    pub fn with_k(k: usize) -> Self {
        SelectionConfig { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if !(self.t >= 1.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!("pre-recall factor t = {} must be >= 1", self.t)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::invalid(format!("tau = {} must lie in (0, 1]", self.tau)));
        }
        Ok(())
    }
}

/// `floor(t * k)`, never below `k`.
pub fn prerecall_size(t: f64, k: usize) -> usize {
    ((t * k as f64).floor() as usize).max(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Database positions in selection order.
    pub selected: Vec<usize>,
    /// Matrix rows in selection order.
    pub rows: Vec<usize>,
    /// Newly covered columns at each step.
    pub gains: Vec<usize>,
    /// Covered fraction after each step.
    pub cast_after: Vec<f64>,
    /// Slots filled after every remaining gain was zero.
    pub filled_by_fallback: usize,
    /// Requested slots that could not be filled because the matrix ran out of rows.
    pub shortfall: usize,
    pub coverage_mask: BitVec,
    /// Set by threshold-terminated selection: whether `tau` was reached.
    pub threshold_met: Option<bool>,
}

impl SelectionResult {
    pub fn column_count(&self) -> usize {
        self.coverage_mask.len()
    }

    pub fn final_cast(&self) -> f64 {
        cast_ratio(&self.coverage_mask, self.coverage_mask.len())
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Popcount of the OR of the selected rows.
pub fn coverage_value(m: &CoMatrix, rows: &[usize]) -> Result<usize> {
    let mut acc = BitVec::zeros(m.column_count());
    for &i in rows {
        acc.or_assign(m.row(i)?);
    }
    Ok(acc.count_ones())
}

/// Number of columns row `i` would newly cover given `mask`.
pub fn marginal_gain(m: &CoMatrix, mask: &BitVec, i: usize) -> Result<usize> {
    if mask.len() != m.column_count() {
        return Err(Error::WidthMismatch {
            expected: m.column_count(),
            actual: mask.len(),
        });
    }
    Ok(m.row(i)?.count_and_not(mask))
}

/// Covered fraction of the query tree. Zero columns count as nothing covered.
pub fn cast_ratio(mask: &BitVec, column_count: usize) -> f64 {
    if column_count == 0 {
        return 0.0;
    }
    mask.count_ones() as f64 / column_count as f64
}

struct Greedy<'a> {
    m: &'a CoMatrix,
    tie_break: TieBreak,
    parallel: bool,
    taken: Vec<bool>,
    result: SelectionResult,
}

impl<'a> Greedy<'a> {
    fn new(m: &'a CoMatrix, tie_break: TieBreak, parallel: bool) -> Self {
        Greedy {
            m,
            tie_break,
            parallel,
            taken: vec![false; m.row_count()],
            result: SelectionResult {
                selected: Vec::new(),
                rows: Vec::new(),
                gains: Vec::new(),
                cast_after: Vec::new(),
                filled_by_fallback: 0,
                shortfall: 0,
                coverage_mask: BitVec::zeros(m.column_count()),
                threshold_met: None,
            },
        }
    }

    /// Smaller key wins among equal gains.
    fn tie_key(&self, row: usize) -> usize {
        match self.tie_break {
            TieBreak::PrerecallRank => row,
            TieBreak::LowestPosition => self.m.candidate_ids()[row],
        }
    }

    fn better(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        // (gain, row)
        a.0 > b.0 || (a.0 == b.0 && self.tie_key(a.1) < self.tie_key(b.1))
    }

    /// Best untaken row and its gain.
    fn best(&self) -> Option<(usize, usize)> {
        let mask = &self.result.coverage_mask;
        let rows = self.m.rows();
        let score = |i: usize| (rows[i].count_and_not(mask), i);
        let pick = |a: Option<(usize, usize)>, b: Option<(usize, usize)>| match (a, b) {
            (Some(a), Some(b)) => Some(if self.better(b, a) { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        };
        if self.parallel {
            (0..rows.len())
                .into_par_iter()
                .filter(|&i| !self.taken[i])
                .map(|i| Some(score(i)))
                .reduce(|| None, pick)
        } else {
            (0..rows.len())
                .filter(|&i| !self.taken[i])
                .map(|i| Some(score(i)))
                .fold(None, pick)
        }
    }

    fn take(&mut self, row: usize, gain: usize) {
        self.taken[row] = true;
        self.result.coverage_mask.or_assign(&self.m.rows()[row]);
        self.result.rows.push(row);
        self.result.selected.push(self.m.candidate_ids()[row]);
        self.result.gains.push(gain);
        let cast = cast_ratio(&self.result.coverage_mask, self.m.column_count());
        self.result.cast_after.push(cast);
    }

    fn fill_remaining(&mut self, k: usize) {
        let mut row = 0;
        while self.result.rows.len() < k && row < self.taken.len() {
            if !self.taken[row] {
                self.take(row, 0);
                self.result.filled_by_fallback += 1;
            }
            row += 1;
        }
    }
}

/// Fixed-size greedy selection of `k` rows.
///
/// Once no remaining row adds coverage, the rest of the `k` slots are filled
/// in row (pre-recall) order and counted in `filled_by_fallback`.
pub fn greedy_select(m: &CoMatrix, k: usize, tie_break: TieBreak) -> Result<SelectionResult> {
    greedy_fixed(m, k, tie_break, false)
}

/// [`greedy_select`] with the per-row gain scan spread over the rayon pool.
/// Produces the same result.
pub fn greedy_select_par(m: &CoMatrix, k: usize, tie_break: TieBreak) -> Result<SelectionResult> {
    greedy_fixed(m, k, tie_break, true)
}

fn greedy_fixed(m: &CoMatrix, k: usize, tie_break: TieBreak, parallel: bool) -> Result<SelectionResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut g = Greedy::new(m, tie_break, parallel);
    let target = k.min(m.row_count());
    while g.result.rows.len() < target {
        match g.best() {
            Some((gain, row)) if gain > 0 => g.take(row, gain),
            _ => break,
        }
    }
    g.fill_remaining(target);
    g.result.shortfall = k - target;
    Ok(g.result)
}

/// Greedy selection that stops at the first step whose covered fraction is
/// at least `tau`, when no row adds coverage, or after `k_max` rows.
pub fn greedy_until(m: &CoMatrix, tau: f64, k_max: usize, tie_break: TieBreak) -> Result<SelectionResult> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau = {tau} must lie in (0, 1]")));
    }
    let mut g = Greedy::new(m, tie_break, false);
    let columns = m.column_count();
    let reached = |g: &Greedy<'_>| cast_ratio(&g.result.coverage_mask, columns) >= tau;
    while g.result.rows.len() < k_max && !reached(&g) {
        match g.best() {
            Some((gain, row)) if gain > 0 => g.take(row, gain),
            _ => break,
        }
    }
    g.result.threshold_met = Some(reached(&g));
    Ok(g.result)
}

/// True optimum of `max f(S)` over subsets of size `min(k, rows)`, by
/// enumeration. The witness is the lexicographically smallest optimal subset.
pub fn exhaustive_optimal(m: &CoMatrix, k: usize) -> Result<(usize, Vec<usize>)> {
    const LIMIT: u128 = 1_000_000;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = m.row_count();
    let r = k.min(n);
    let combinations = binomial(n, r);
    if combinations > LIMIT {
        return Err(Error::SearchTooLarge {
            combinations,
            limit: LIMIT,
        });
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut best = (coverage_value(m, &idx)?, idx.clone());
    // step to the next combination in lexicographic order
    while let Some(i) = (0..r).rev().find(|&i| idx[i] != i + n - r) {
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
        let v = coverage_value(m, &idx)?;
        if v > best.0 {
            best = (v, idx.clone());
        }
    }
    Ok(best)
}

fn binomial(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

/// Edit distance over bytes with unit insert, delete and substitute costs.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

/// Database positions ordered by ascending Levenshtein distance to `query`, ties by position.
pub fn rank_by_levenshtein(db: &ExemplarDatabase, query: &str) -> Vec<(usize, usize)> {
    let q = query.as_bytes();
    let mut scored: Vec<(usize, usize)> = db
        .records()
        .par_iter()
        .enumerate()
        .map(|(pos, r)| (levenshtein(r.source.as_bytes(), q), pos))
        .collect();
    scored.sort_unstable();
    scored
}

/// The `m` positions nearest to `query` by source-text edit distance.
pub fn prerecall_ld(db: &ExemplarDatabase, query_source: &str, m: usize) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::invalid("pre-recall size must be at least 1"));
    }
    Ok(rank_by_levenshtein(db, query_source)
        .into_iter()
        .take(m)
        .map(|(_, pos)| pos)
        .collect())
}

/// Timings of the pipeline stages, for traces.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub prerecall: Duration,
    pub matrix: Duration,
    pub greedy: Duration,
}

/// A selection together with the intermediate shortlist and matrix.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub result: SelectionResult,
    pub candidates: Vec<usize>,
    pub matrix: CoMatrix,
    pub timings: StageTimings,
}

fn shortlist_matrix(
    db: &ExemplarDatabase,
    query_source: &str,
    query_tree: &TypedTree,
    m: usize,
) -> Result<(Vec<usize>, CoMatrix, StageTimings)> {
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let mut timings = StageTimings::default();
    let start = Instant::now();
    let candidates = prerecall_ld(db, query_source, m)?;
    timings.prerecall = start.elapsed();
    let start = Instant::now();
    let matrix = build_cooccurrence(db, &candidates, &fingerprint_tree(query_tree))?;
    timings.matrix = start.elapsed();
    Ok((candidates, matrix, timings))
}

/// Fixed-size pipeline on an already parsed query.
pub fn cast_f_pipeline(
    db: &ExemplarDatabase,
    query_source: &str,
    query_tree: &TypedTree,
    cfg: &SelectionConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (candidates, matrix, mut timings) =
        shortlist_matrix(db, query_source, query_tree, prerecall_size(cfg.t, cfg.k))?;
    let start = Instant::now();
    let result = greedy_select(&matrix, cfg.k, cfg.tie_break)?;
    timings.greedy = start.elapsed();
    Ok(PipelineOutput {
        result,
        candidates,
        matrix,
        timings,
    })
}

/// Threshold-terminated pipeline on an already parsed query.
pub fn cast_a_pipeline(
    db: &ExemplarDatabase,
    query_source: &str,
    query_tree: &TypedTree,
    cfg: &SelectionConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (candidates, matrix, mut timings) =
        shortlist_matrix(db, query_source, query_tree, prerecall_size(cfg.t, cfg.k_max))?;
    let start = Instant::now();
    let result = greedy_until(&matrix, cfg.tau, cfg.k_max, cfg.tie_break)?;
    timings.greedy = start.elapsed();
    Ok(PipelineOutput {
        result,
        candidates,
        matrix,
        timings,
    })
}

/// Parses the query, shortlists `floor(t * k)` candidates and greedily picks `k`.
pub fn select_cast_f(
    db: &ExemplarDatabase,
    query_source: &str,
    query_lang: &str,
    cfg: &SelectionConfig,
    adapter: &dyn ParserAdapter,
) -> Result<SelectionResult> {
    let tree = adapter.parse(query_source, query_lang)?;
    Ok(cast_f_pipeline(db, query_source, &tree, cfg)?.result)
}

/// Parses the query, shortlists `floor(t * k_max)` candidates and picks until
/// the covered fraction reaches `tau`.
pub fn select_cast_a(
    db: &ExemplarDatabase,
    query_source: &str,
    query_lang: &str,
    cfg: &SelectionConfig,
    adapter: &dyn ParserAdapter,
) -> Result<SelectionResult> {
    let tree = adapter.parse(query_source, query_lang)?;
    Ok(cast_a_pipeline(db, query_source, &tree, cfg)?.result)
}
