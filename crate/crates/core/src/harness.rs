// SPDX-License-Identifier: Apache-2.0

//! Prompt assembly, exact-match scoring, strategy dispatch and
//! coverage-convergence curves.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    select_ast_ed, select_diversity, select_embed_topk, select_fixed, select_random, Bm25Index, EmbeddingTable,
};
use crate::bits::BitVec;
use crate::corpus::CorpusEntry;
use crate::error::{Error, Result};
use crate::fingerprint::{fingerprint_tree, hash_bytes, FingerprintProfile};
use crate::index::{build_cooccurrence, ExemplarDatabase};
use crate::selector::{
    cast_ratio, greedy_select, greedy_until, prerecall_size, rank_by_levenshtein, PromptOrder, SelectionConfig,
    SelectionResult, StageTimings,
};
use crate::tree::{ParserAdapter, TypedTree};

/// Seed used when neither a flag nor `CAST_SEED` provides one.
pub const DEFAULT_SEED: u64 = 42;

/// Identifier of the built-in prompt template. Bump when its bytes change.
pub const DEFAULT_TEMPLATE_VERSION: &str = "default-v1";

// ---------------------------------------------------------------------------
// Prompt templates

/// Three text blocks with `{name}` placeholders.
///
/// Header and query blocks may use `{source_lang}` and `{target_lang}`; the
/// query block also gets `{source}`. Exemplar blocks get all of those plus
/// `{target}`. A `{` that does not open an identifier followed by `}` is
/// copied literally, so code inside a template needs no escaping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    #[serde(default)]
    pub version: Option<String>,
    pub header: String,
    pub exemplar: String,
    pub query: String,
}

const HEADER_VARS: &[&str] = &["source_lang", "target_lang"];
const QUERY_VARS: &[&str] = &["source_lang", "target_lang", "source"];
const EXEMPLAR_VARS: &[&str] = &["source_lang", "target_lang", "source", "target"];

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            version: Some(DEFAULT_TEMPLATE_VERSION.to_owned()),
            header: "Translate the following {source_lang} code into {target_lang}.\n\n".to_owned(),
            exemplar: "### Source ({source_lang})\n```{source_lang}\n{source}\n```\n\
                       ### Target ({target_lang})\n```{target_lang}\n{target}\n```\n\n"
                .to_owned(),
            query: "### Source ({source_lang})\n```{source_lang}\n{source}\n```\n\
                    ### Target ({target_lang})\n```{target_lang}\n"
                .to_owned(),
        }
    }
}

impl PromptTemplate {
    /// Reads a TOML table with `header`, `exemplar`, `query` and an optional
    /// `version`. Placeholders are checked up front.
    pub fn from_toml(text: &str) -> Result<Self> {
        let t: PromptTemplate = toml::from_str(text).map_err(|e| Error::invalid(format!("prompt template: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        check_placeholders(&self.header, HEADER_VARS)?;
        check_placeholders(&self.exemplar, EXEMPLAR_VARS)?;
        check_placeholders(&self.query, QUERY_VARS)
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

enum Segment<'t> {
    Literal(&'t str),
    Var(&'t str),
}

/// Splits `text` into literal runs and placeholder names.
fn scan_template(text: &str) -> Vec<Segment<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut lit_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len() && is_ident_byte(bytes[j]) {
                j += 1;
            }
            let name_ok = j > i + 1 && !bytes[i + 1].is_ascii_digit();
            if name_ok && j < bytes.len() && bytes[j] == b'}' {
                out.push(Segment::Literal(&text[lit_start..i]));
                out.push(Segment::Var(&text[i + 1..j]));
                i = j + 1;
                lit_start = i;
                continue;
            }
        }
        i += 1;
    }
    out.push(Segment::Literal(&text[lit_start..]));
    out
}

fn check_placeholders(text: &str, allowed: &[&str]) -> Result<()> {
    for seg in scan_template(text) {
        if let Segment::Var(name) = seg {
            if !allowed.contains(&name) {
                return Err(Error::UnknownPlaceholder(name.to_owned()));
            }
        }
    }
    Ok(())
}

fn render(text: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for seg in scan_template(text) {
        match seg {
            Segment::Literal(l) => out.push_str(l),
            Segment::Var(name) => {
                let value = vars
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::UnknownPlaceholder(name.to_owned()))?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}

/// Query side of a prompt.
#[derive(Debug, Clone, Copy)]
pub struct QueryText<'a> {
    pub source_lang: &'a str,
    pub target_lang: &'a str,
    pub source: &'a str,
}

impl<'a> From<&'a CorpusEntry> for QueryText<'a> {
    fn from(e: &'a CorpusEntry) -> Self {
        QueryText {
            source_lang: &e.source_lang,
            target_lang: &e.target_lang,
            source: &e.source,
        }
    }
}

/// Header, one block per selected exemplar, then the query block.
///
/// Code values are inserted with trailing newlines removed; the template
/// decides the line structure around them.
pub fn assemble_prompt(
    selected: &[usize],
    db: &ExemplarDatabase,
    query: QueryText<'_>,
    template: &PromptTemplate,
    order: PromptOrder,
) -> Result<String> {
    if selected.is_empty() {
        return Err(Error::invalid("cannot assemble a prompt without exemplars"));
    }
    let mut out = render(
        &template.header,
        &[("source_lang", query.source_lang), ("target_lang", query.target_lang)],
    )?;
    let mut positions = selected.to_vec();
    if order == PromptOrder::Reversed {
        positions.reverse();
    }
    for pos in positions {
        let r = db.record(pos)?;
        out.push_str(&render(
            &template.exemplar,
            &[
                ("source_lang", &r.source_lang),
                ("target_lang", &r.target_lang),
                ("source", r.source.trim_end_matches(['\n', '\r'])),
                ("target", r.target.trim_end_matches(['\n', '\r'])),
            ],
        )?);
    }
    out.push_str(&render(
        &template.query,
        &[
            ("source_lang", query.source_lang),
            ("target_lang", query.target_lang),
            ("source", query.source.trim_end_matches(['\n', '\r'])),
        ],
    )?);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exact match

/// Trailing whitespace removed from every line, then trailing empty lines
/// dropped. Line endings become `\n`.
pub fn normalize_for_match(text: &str) -> String {
    let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

pub fn exact_match(prediction: &str, gold: &str) -> bool {
    normalize_for_match(prediction) == normalize_for_match(gold)
}

// ---------------------------------------------------------------------------
// Strategies

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    CastF,
    CastA,
    Ld,
    Random,
    Bm25,
    Fixed,
    AstEd,
    Embed,
    Diversity,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::CastF,
        Strategy::CastA,
        Strategy::Ld,
        Strategy::Random,
        Strategy::Bm25,
        Strategy::Fixed,
        Strategy::AstEd,
        Strategy::Embed,
        Strategy::Diversity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::CastF => "cast_f",
            Strategy::CastA => "cast_a",
            Strategy::Ld => "ld",
            Strategy::Random => "random",
            Strategy::Bm25 => "bm25",
            Strategy::Fixed => "fixed",
            Strategy::AstEd => "ast_ed",
            Strategy::Embed => "embed",
            Strategy::Diversity => "diversity",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, Strategy::Embed | Strategy::Diversity)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))
    }
}

/// A parsed query with its fingerprints and Levenshtein ranking over one
/// database, reusable across strategies and shot counts.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    pub entry: CorpusEntry,
    pub tree: TypedTree,
    pub profile: FingerprintProfile,
    ranking: Vec<usize>,
    ranking_time: Duration,
    tree_ranking: OnceLock<Vec<usize>>,
}

impl PreparedQuery {
    /// Database positions by ascending source edit distance.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }
}

/// One strategy's picks for one query, with the coverage trajectory.
#[derive(Debug, Clone)]
pub struct Selection {
    pub strategy: Strategy,
    pub positions: Vec<usize>,
    pub gains: Vec<usize>,
    pub cast_after: Vec<f64>,
    /// Present for the coverage-driven strategies.
    pub greedy: Option<SelectionResult>,
    pub timings: StageTimings,
}

impl Selection {
    pub fn final_cast(&self) -> f64 {
        self.cast_after.last().copied().unwrap_or(0.0)
    }
}

/// Newly covered nodes and covered fraction after each position in turn.
pub fn coverage_trajectory(
    db: &ExemplarDatabase,
    positions: &[usize],
    profile: &FingerprintProfile,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let m = build_cooccurrence(db, positions, profile)?;
    let mut mask = BitVec::zeros(m.column_count());
    let mut gains = Vec::with_capacity(positions.len());
    let mut cast = Vec::with_capacity(positions.len());
    for row in m.rows() {
        gains.push(row.count_and_not(&mask));
        mask.or_assign(row);
        cast.push(cast_ratio(&mask, m.column_count()));
    }
    Ok((gains, cast))
}

/// Everything the strategies need besides the query.
pub struct StrategyContext<'a> {
    db: &'a ExemplarDatabase,
    cfg: SelectionConfig,
    seed: u64,
    fixed_ids: Option<Vec<String>>,
    embeddings: Option<(EmbeddingTable, EmbeddingTable)>,
    bm25: Bm25Index,
}

impl<'a> StrategyContext<'a> {
    pub fn new(db: &'a ExemplarDatabase, cfg: SelectionConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if db.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        Ok(StrategyContext {
            db,
            cfg,
            seed,
            fixed_ids: None,
            embeddings: None,
            bm25: Bm25Index::new(db),
        })
    }

    /// Exemplars used by the fixed strategy, in prompt order. Without this
    /// the fixed strategy takes the first database positions.
    pub fn with_fixed_ids(mut self, ids: Vec<String>) -> Result<Self> {
        select_fixed(self.db, &ids)?;
        self.fixed_ids = Some(ids);
        Ok(self)
    }

    /// Vectors for every database record and for each query id.
    pub fn with_embeddings(mut self, table: EmbeddingTable) -> Result<Self> {
        let aligned = table.for_database(self.db)?;
        self.embeddings = Some((table, aligned));
        Ok(self)
    }

    pub fn db(&self) -> &ExemplarDatabase {
        self.db
    }

    pub fn config(&self) -> &SelectionConfig {
        &self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn prepare(&self, entry: CorpusEntry, adapter: &dyn ParserAdapter) -> Result<PreparedQuery> {
        let tree = entry.tree(adapter)?;
        let profile = fingerprint_tree(&tree);
        let start = Instant::now();
        let ranking = rank_by_levenshtein(self.db, &entry.source)
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        Ok(PreparedQuery {
            entry,
            tree,
            profile,
            ranking,
            ranking_time: start.elapsed(),
            tree_ranking: OnceLock::new(),
        })
    }

    pub fn prepare_all(&self, entries: Vec<CorpusEntry>, adapter: &dyn ParserAdapter) -> Result<Vec<PreparedQuery>> {
        entries.into_par_iter().map(|e| self.prepare(e, adapter)).collect()
    }

    /// Seed for per-query randomness: the context seed mixed with the query id.
    pub fn query_seed(&self, q: &PreparedQuery) -> u64 {
        self.seed ^ hash_bytes(q.entry.id.as_bytes())
    }

    fn query_vector<'q>(&'q self, q: &PreparedQuery) -> Result<(&'q EmbeddingTable, &'q [f64])> {
        let (full, aligned) = self
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::invalid("this strategy needs an embedding table"))?;
        let v = full
            .get(&q.entry.id)
            .ok_or_else(|| Error::UnknownId(format!("{} (no query embedding)", q.entry.id)))?;
        Ok((aligned, v))
    }

    fn greedy(&self, q: &PreparedQuery, k: usize, adaptive: bool) -> Result<(SelectionResult, StageTimings)> {
        let m = prerecall_size(self.cfg.t, k).min(self.db.len());
        let mut timings = StageTimings {
            prerecall: q.ranking_time,
            ..StageTimings::default()
        };
        let start = Instant::now();
        let matrix = build_cooccurrence(self.db, &q.ranking[..m], &q.profile)?;
        timings.matrix = start.elapsed();
        let start = Instant::now();
        let result = if adaptive {
            greedy_until(&matrix, self.cfg.tau, k, self.cfg.tie_break)?
        } else {
            greedy_select(&matrix, k, self.cfg.tie_break)?
        };
        timings.greedy = start.elapsed();
        Ok((result, timings))
    }

    /// Runs `strategy` with `k` shots; for `cast_a`, `k` is the shot cap.
    pub fn select(&self, q: &PreparedQuery, strategy: Strategy, k: usize) -> Result<Selection> {
        let n = self.db.len();
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if k > n {
            return Err(Error::invalid(format!("k = {k} exceeds the {n} available exemplars")));
        }
        let mut timings = StageTimings::default();
        let mut greedy = None;
        let positions = match strategy {
            Strategy::CastF | Strategy::CastA => {
                let (r, t) = self.greedy(q, k, strategy == Strategy::CastA)?;
                timings = t;
                let p = r.selected.clone();
                greedy = Some(r);
                p
            }
            Strategy::Ld => q.ranking[..k].to_vec(),
            Strategy::Random => select_random(self.db, k, self.query_seed(q))?,
            Strategy::Bm25 => self.bm25.top_k(&q.entry.source, k)?,
            Strategy::Fixed => match &self.fixed_ids {
                Some(ids) if k > ids.len() => {
                    return Err(Error::invalid(format!(
                        "k = {k} exceeds the {} fixed exemplars",
                        ids.len()
                    )));
                }
                Some(ids) => select_fixed(self.db, &ids[..k])?,
                None => (0..k).collect(),
            },
            Strategy::AstEd => {
                let all = match q.tree_ranking.get() {
                    Some(r) => r,
                    None => {
                        let r = select_ast_ed(self.db, &q.tree, n)?;
                        q.tree_ranking.get_or_init(|| r)
                    }
                };
                all[..k].to_vec()
            }
            Strategy::Embed => {
                let (table, v) = self.query_vector(q)?;
                select_embed_topk(table, v, k)?
            }
            Strategy::Diversity => {
                let (table, v) = self.query_vector(q)?;
                select_diversity(table, v, k, self.seed)?
            }
        };
        let (gains, cast_after) = match &greedy {
            Some(r) => (r.gains.clone(), r.cast_after.clone()),
            None => coverage_trajectory(self.db, &positions, &q.profile)?,
        };
        Ok(Selection {
            strategy,
            positions,
            gains,
            cast_after,
            greedy,
            timings,
        })
    }

    /// Serializable record of a selection.
    pub fn trace(&self, q: &PreparedQuery, sel: &Selection, k: usize, with_timing: bool) -> Result<SelectionTrace> {
        let ids = sel
            .positions
            .iter()
            .map(|&p| Ok(self.db.record(p)?.id.clone()))
            .collect::<Result<Vec<_>>>()?;
        let mut query = q.entry.clone();
        query.target.clear();
        Ok(SelectionTrace {
            strategy: sel.strategy,
            query,
            query_nodes: q.tree.node_count(),
            selected_ids: ids,
            selected_positions: sel.positions.clone(),
            gains: sel.gains.clone(),
            cast_after: sel.cast_after.clone(),
            final_cast: sel.final_cast(),
            filled_by_fallback: sel.greedy.as_ref().map(|r| r.filled_by_fallback),
            shortfall: sel.greedy.as_ref().map(|r| r.shortfall),
            threshold_met: sel.greedy.as_ref().and_then(|r| r.threshold_met),
            config: TraceConfig {
                selection: SelectionConfig { k, ..self.cfg.clone() },
                seed: self.seed,
                fixed_ids: self.fixed_ids.clone(),
            },
            timing_ms: with_timing.then(|| TimingEcho::from(sel.timings)),
        })
    }
}

// ---------------------------------------------------------------------------
// Traces

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    #[serde(flatten)]
    pub selection: SelectionConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingEcho {
    pub prerecall: f64,
    pub matrix: f64,
    pub greedy: f64,
}

impl From<StageTimings> for TimingEcho {
    fn from(t: StageTimings) -> Self {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        TimingEcho {
            prerecall: ms(t.prerecall),
            matrix: ms(t.matrix),
            greedy: ms(t.greedy),
        }
    }
}

/// JSON written by `cast select` and read back by `cast prompt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub strategy: Strategy,
    /// The query entry, target omitted.
    pub query: CorpusEntry,
    pub query_nodes: usize,
    pub selected_ids: Vec<String>,
    pub selected_positions: Vec<usize>,
    pub gains: Vec<usize>,
    pub cast_after: Vec<f64>,
    pub final_cast: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filled_by_fallback: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortfall: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_met: Option<bool>,
    pub config: TraceConfig,
    /// Milliseconds per stage; only written on request so traces stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<TimingEcho>,
}

impl SelectionTrace {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Positions of the selected ids in `db`, which may differ from the one
    /// the trace was made against as long as the ids exist.
    pub fn positions_in(&self, db: &ExemplarDatabase) -> Result<Vec<usize>> {
        self.selected_ids
            .iter()
            .map(|id| db.position_of(id).ok_or_else(|| Error::UnknownId(id.clone())))
            .collect()
    }

    pub fn prompt(
        &self,
        db: &ExemplarDatabase,
        template: &PromptTemplate,
        order: Option<PromptOrder>,
    ) -> Result<String> {
        assemble_prompt(
            &self.positions_in(db)?,
            db,
            QueryText::from(&self.query),
            template,
            order.unwrap_or(self.config.selection.prompt_order),
        )
    }
}

// ---------------------------------------------------------------------------
// Coverage curves

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub strategy: Strategy,
    pub shot: usize,
    pub mean_cast: f64,
    /// Average number of exemplars actually selected.
    pub mean_shots: f64,
}

/// Mean covered fraction over `queries` for every strategy and shot count.
pub fn coverage_curve(
    ctx: &StrategyContext<'_>,
    queries: &[PreparedQuery],
    strategies: &[Strategy],
    shots: &[usize],
) -> Result<Vec<CurveRow>> {
    if queries.is_empty() {
        return Err(Error::invalid("no queries"));
    }
    if shots.is_empty() || strategies.is_empty() {
        return Err(Error::invalid("need at least one strategy and one shot count"));
    }
    if shots[0] == 0 || shots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("shot counts must be positive and strictly ascending"));
    }
    let n = ctx.db().len();
    if let Some(&big) = shots.iter().find(|&&s| s > n) {
        return Err(Error::invalid(format!("shot {big} exceeds the corpus size {n}")));
    }
    let mut rows = Vec::with_capacity(strategies.len() * shots.len());
    for &strategy in strategies {
        for &shot in shots {
            let per_query = queries
                .par_iter()
                .map(|q| {
                    ctx.select(q, strategy, shot)
                        .map(|s| (s.final_cast(), s.positions.len()))
                })
                .collect::<Result<Vec<_>>>()?;
            let count = per_query.len() as f64;
            rows.push(CurveRow {
                strategy,
                shot,
                mean_cast: per_query.iter().map(|p| p.0).sum::<f64>() / count,
                mean_shots: per_query.iter().map(|p| p.1 as f64).sum::<f64>() / count,
            });
        }
    }
    Ok(rows)
}

pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("strategy,shot,mean_cast,mean_shots\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.6},{:.6}", r.strategy, r.shot, r.mean_cast, r.mean_shots);
    }
    out
}

const PALETTE: [&str; 9] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

/// Line chart of mean coverage against shot count, one line per strategy.
pub fn curve_to_svg(rows: &[CurveRow]) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let max_shot = rows.iter().map(|r| r.shot).max().unwrap_or(1).max(1) as f64;
    let x = |shot: usize| left + pw * shot as f64 / max_shot;
    let y = |v: f64| top + ph * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{yy:.2}" x2="{x2:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{v:.1}</text>"##,
            yy = y(v),
            x2 = left + pw,
            tx = left - 6.0,
            ty = y(v) + 4.0,
        );
    }
    let mut shots: Vec<usize> = rows.iter().map(|r| r.shot).collect();
    shots.sort_unstable();
    shots.dedup();
    for &shot in &shots {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{shot}</text>"#,
            x(shot),
            top + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">shots</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">mean CAST</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    let mut strategies: Vec<Strategy> = Vec::new();
    for r in rows {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
    }
    for (i, st) in strategies.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = rows
            .iter()
            .filter(|r| r.strategy == *st)
            .map(|r| format!("{:.2},{:.2}", x(r.shot), y(r.mean_cast)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = w - right + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{st}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ExemplarRecord;
    use crate::tree::{parse_sexpr, SexprAdapter};

    fn entry(id: &str, sexpr: &str) -> CorpusEntry {
        CorpusEntry {
            id: id.into(),
            source_lang: "sexpr".into(),
            target_lang: "t".into(),
            source: sexpr.into(),
            target: format!("target of {id}\n"),
            sexpr: None,
        }
    }

    fn db(trees: &[&str]) -> ExemplarDatabase {
        let records = trees
            .iter()
            .enumerate()
            .map(|(i, s)| {
                ExemplarRecord::new(
                    format!("e{i}"),
                    "sexpr",
                    "t",
                    *s,
                    format!("target of e{i}\n"),
                    parse_sexpr(s).unwrap(),
                )
            })
            .collect();
        ExemplarDatabase::from_records(records).unwrap()
    }

    fn minimal() -> PromptTemplate {
        PromptTemplate {
            version: None,
            header: "H[{source_lang}>{target_lang}]".into(),
            exemplar: "<{source}|{target}>".into(),
            query: "Q[{source}]".into(),
        }
    }

    #[test]
    fn one_exemplar_concatenation() {
        let d = db(&["(A)"]);
        let q = QueryText {
            source_lang: "x",
            target_lang: "y",
            source: "(B)\n",
        };
        let p = assemble_prompt(&[0], &d, q, &minimal(), PromptOrder::Selection).unwrap();
        assert_eq!(p, "H[x>y]<(A)|target of e0>Q[(B)]");
    }

    #[test]
    fn reversed_order_only_swaps_blocks() {
        let d = db(&["(A)", "(B)", "(C)"]);
        let q = QueryText {
            source_lang: "x",
            target_lang: "y",
            source: "(Q)",
        };
        let fwd = assemble_prompt(&[2, 0, 1], &d, q, &minimal(), PromptOrder::Selection).unwrap();
        let rev = assemble_prompt(&[2, 0, 1], &d, q, &minimal(), PromptOrder::Reversed).unwrap();
        assert_eq!(
            fwd,
            "H[x>y]<(C)|target of e2><(A)|target of e0><(B)|target of e1>Q[(Q)]"
        );
        assert_eq!(
            rev,
            "H[x>y]<(B)|target of e1><(A)|target of e0><(C)|target of e2>Q[(Q)]"
        );
        assert!(assemble_prompt(&[], &d, q, &minimal(), PromptOrder::Selection).is_err());
    }

    #[test]
    fn placeholders() {
        assert_eq!(render("a{x}b{ c}{1}{}{", &[("x", "X")]).unwrap(), "aXb{ c}{1}{}{");
        assert!(matches!(render("{nope}", &[]), Err(Error::UnknownPlaceholder(n)) if n == "nope"));
        let bad = "header = \"{source}\"\nexemplar = \"\"\nquery = \"\"\n";
        assert!(matches!(
            PromptTemplate::from_toml(bad),
            Err(Error::UnknownPlaceholder(_))
        ));
        let good = "header = \"h\"\nexemplar = \"{source}=>{target}\"\nquery = \"{source}\"\n";
        assert_eq!(PromptTemplate::from_toml(good).unwrap().exemplar, "{source}=>{target}");
        PromptTemplate::default().validate().unwrap();
    }

    #[test]
    fn default_template_shape() {
        let d = db(&["(A)"]);
        let q = QueryText {
            source_lang: "sexpr",
            target_lang: "t",
            source: "(Q)\n",
        };
        let p = assemble_prompt(&[0], &d, q, &PromptTemplate::default(), PromptOrder::Selection).unwrap();
        assert_eq!(
            p,
            "Translate the following sexpr code into t.\n\n\
             ### Source (sexpr)\n```sexpr\n(A)\n```\n### Target (t)\n```t\ntarget of e0\n```\n\n\
             ### Source (sexpr)\n```sexpr\n(Q)\n```\n### Target (t)\n```t\n"
        );
    }

    #[test]
    fn exact_match_normalization() {
        assert!(exact_match("x = 1\n", "x = 1\n"));
        assert!(!exact_match("x = 1", "y = 1"));
        assert!(exact_match("x = 1", "x = 1\n\n"));
        assert!(exact_match("x = 1   \ny\r\n", "x = 1\ny"));
        assert!(!exact_match("  x", "x"));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
        assert!("bogus".parse::<Strategy>().is_err());
    }

    #[test]
    fn trace_ids_follow_gain_order() {
        let d = db(&["(R (B) (C))", "(R (A))", "(R (A) (B (C)))", "(Z)"]);
        let ctx = StrategyContext::new(&d, SelectionConfig::with_k(3), 7).unwrap();
        let q = ctx.prepare(entry("q", "(R (A) (B (C)) (D))"), &SexprAdapter).unwrap();
        let sel = ctx.select(&q, Strategy::CastF, 3).unwrap();
        let trace = ctx.trace(&q, &sel, 3, false).unwrap();
        assert!(trace.gains.windows(2).all(|w| w[0] >= w[1]));
        let prompt = trace.prompt(&d, &PromptTemplate::default(), None).unwrap();
        let at: Vec<usize> = trace
            .selected_ids
            .iter()
            .map(|id| prompt.find(&format!("target of {id}\n")).unwrap())
            .collect();
        assert!(at.windows(2).all(|w| w[0] < w[1]), "{at:?}");
        let back: SelectionTrace = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
        assert_eq!(back, trace);
        assert!(trace.to_json().unwrap().find("timing").is_none());
    }

    #[test]
    fn identical_exemplars_give_full_coverage() {
        let d = db(&["(A (B))", "(A (B))"]);
        let ctx = StrategyContext::new(&d, SelectionConfig::default(), 1).unwrap();
        let qs = ctx.prepare_all(vec![entry("q", "(A (B))")], &SexprAdapter).unwrap();
        let rows = coverage_curve(&ctx, &qs, &[Strategy::CastF, Strategy::Ld, Strategy::Random], &[1]).unwrap();
        assert!(rows.iter().all(|r| r.mean_cast == 1.0 && r.mean_shots == 1.0));
        assert!(coverage_curve(&ctx, &qs, &[Strategy::Ld], &[3]).is_err());
        assert!(coverage_curve(&ctx, &qs, &[Strategy::Ld], &[2, 1]).is_err());
        assert!(coverage_curve(&ctx, &qs, &[Strategy::Embed], &[1]).is_err());
    }

    #[test]
    fn csv_and_svg() {
        let rows = [
            CurveRow {
                strategy: Strategy::CastF,
                shot: 1,
                mean_cast: 0.5,
                mean_shots: 1.0,
            },
            CurveRow {
                strategy: Strategy::CastF,
                shot: 3,
                mean_cast: 2.0 / 3.0,
                mean_shots: 3.0,
            },
        ];
        assert_eq!(
            curve_to_csv(&rows),
            "strategy,shot,mean_cast,mean_shots\ncast_f,1,0.500000,1.000000\ncast_f,3,0.666667,3.000000\n"
        );
        let svg = curve_to_svg(&rows);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
