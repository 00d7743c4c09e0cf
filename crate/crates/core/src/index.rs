// SPDX-License-Identifier: Apache-2.0

//! Exemplar database, inverted fingerprint index and co-occurrence matrices.
//!
//! The database keeps every exemplar's source tree and fingerprint profile,
//! plus an inverted index from fingerprint to the sorted positions of the
//! records containing it. For a query tree, [`build_cooccurrence`] fetches
//! one posting list per distinct query fingerprint and scatters it into a
//! packed bit matrix with one row per candidate and one column per query
//! node (post-order).
//!
//! # Index file
//!
//! All integers little-endian.
//!
//! ```text
//! "CASTIDX1"                    magic
//! u32                           version (1)
//! u64                           record count
//! record table, per record:
//!   6 x (u64 offset, u64 len)   id, source_lang, target_lang, source, target, tree
//!                               (byte ranges into the string pool; tree is an S-expression)
//!   u32 n, n x u64              per-node fingerprints in post-order
//! u64 len, bytes                string pool
//! u64 count                     posting lists, ascending fingerprint:
//!   u64 fingerprint, u32 len, len x LEB128 varint position deltas
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitVec;
use crate::corpus::CorpusEntry;
use crate::error::{Error, ParseError, Result};
use crate::fingerprint::{fingerprint_tree, Fingerprint, FingerprintProfile};
use crate::tree::{parse_sexpr, to_sexpr, ParserAdapter, TypedTree};

pub const INDEX_MAGIC: &[u8; 8] = b"CASTIDX1";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarRecord {
    pub id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub source: String,
    pub target: String,
    pub tree: TypedTree,
    pub profile: FingerprintProfile,
}

impl ExemplarRecord {
    pub fn new(
        id: impl Into<String>,
        source_lang: impl Into<String>,
        target_lang: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        tree: TypedTree,
    ) -> Self {
        let profile = fingerprint_tree(&tree);
        ExemplarRecord {
            id: id.into(),
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            source: source.into(),
            target: target.into(),
            tree,
            profile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedEntry {
    pub id: String,
    pub error: ParseError,
}

/// Outcome of a corpus build besides the database itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub skipped: Vec<SkippedEntry>,
}

impl BuildReport {
    pub fn warnings(&self) -> impl Iterator<Item = String> + '_ {
        self.skipped.iter().map(|s| format!("skipped {:?}: {}", s.id, s.error))
    }

    pub fn skipped_ids(&self) -> Vec<&str> {
        self.skipped.iter().map(|s| s.id.as_str()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExemplarDatabase {
    records: Vec<ExemplarRecord>,
    inverted: HashMap<Fingerprint, Vec<u32>>,
    by_id: HashMap<String, usize>,
}

impl ExemplarDatabase {
    pub fn from_records(records: Vec<ExemplarRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (pos, r) in records.iter().enumerate() {
            if by_id.insert(r.id.clone(), pos).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        let mut inverted: HashMap<Fingerprint, Vec<u32>> = HashMap::new();
        for (pos, r) in records.iter().enumerate() {
            for &fp in r.profile.set() {
                inverted.entry(fp).or_default().push(pos as u32);
            }
        }
        Ok(ExemplarDatabase {
            records,
            inverted,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ExemplarRecord] {
        &self.records
    }

    pub fn record(&self, position: usize) -> Result<&ExemplarRecord> {
        self.records.get(position).ok_or(Error::PositionOutOfRange {
            position,
            len: self.records.len(),
        })
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Sorted positions of records whose profile contains `fp`.
    pub fn postings(&self, fp: Fingerprint) -> &[u32] {
        self.inverted.get(&fp).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn distinct_fingerprints(&self) -> usize {
        self.inverted.len()
    }

    fn sorted_postings(&self) -> Vec<(Fingerprint, &[u32])> {
        let mut v: Vec<_> = self.inverted.iter().map(|(fp, p)| (*fp, p.as_slice())).collect();
        v.sort_unstable_by_key(|(fp, _)| *fp);
        v
    }
}

/// Parses and fingerprints every corpus entry.
///
/// Entries carrying an `sexpr` tree skip the adapter. Entries that fail to
/// parse are left out and listed in the report; duplicate ids fail the build.
pub fn build_database(
    corpus: Vec<CorpusEntry>,
    adapter: &dyn ParserAdapter,
) -> Result<(ExemplarDatabase, BuildReport)> {
    let mut seen = HashMap::new();
    for e in &corpus {
        if seen.insert(e.id.as_str(), ()).is_some() {
            return Err(Error::DuplicateId(e.id.clone()));
        }
    }
    let parsed: Vec<(CorpusEntry, std::result::Result<TypedTree, ParseError>)> = corpus
        .into_par_iter()
        .map(|e| {
            let tree = e.tree(adapter);
            (e, tree)
        })
        .collect();

    let mut records = Vec::with_capacity(parsed.len());
    let mut report = BuildReport::default();
    for (e, tree) in parsed {
        match tree {
            Ok(tree) => records.push(ExemplarRecord::new(
                e.id,
                e.source_lang,
                e.target_lang,
                e.source,
                e.target,
                tree,
            )),
            Err(error) => report.skipped.push(SkippedEntry { id: e.id, error }),
        }
    }
    Ok((ExemplarDatabase::from_records(records)?, report))
}

/// Binary matrix with `M[i][j] = 1` iff query node `j`'s subtree occurs in candidate `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoMatrix {
    rows: Vec<BitVec>,
    columns: usize,
    candidate_ids: Vec<usize>,
}

impl CoMatrix {
    pub fn new(rows: Vec<BitVec>, columns: usize, candidate_ids: Vec<usize>) -> Result<Self> {
        if rows.len() != candidate_ids.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} candidate ids",
                rows.len(),
                candidate_ids.len()
            )));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != columns) {
            return Err(Error::WidthMismatch {
                expected: columns,
                actual: bad.len(),
            });
        }
        Ok(CoMatrix {
            rows,
            columns,
            candidate_ids,
        })
    }

    /// Matrix from `0`/`1` strings; candidate ids are the row indices.
    pub fn from_bit_strs(rows: &[&str]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|s| BitVec::from_bit_str(s).ok_or_else(|| Error::invalid(format!("bad bit row {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let columns = parsed.first().map_or(0, BitVec::len);
        let ids = (0..parsed.len()).collect();
        Self::new(parsed, columns, ids)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns
    }

    pub fn row(&self, i: usize) -> Result<&BitVec> {
        self.rows.get(i).ok_or(Error::RowOutOfRange {
            row: i,
            rows: self.rows.len(),
        })
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    /// Database position for each row.
    pub fn candidate_ids(&self) -> &[usize] {
        &self.candidate_ids
    }

    pub fn get(&self, row: usize, column: usize) -> bool {
        self.rows[row].get(column)
    }
}

/// Builds the co-occurrence matrix column-wise from the inverted index.
pub fn build_cooccurrence(
    db: &ExemplarDatabase,
    candidates: &[usize],
    test_profile: &FingerprintProfile,
) -> Result<CoMatrix> {
    let columns = test_profile.by_postorder().len();
    if columns == 0 {
        return Err(Error::invalid("test profile is empty"));
    }
    let mut row_of = vec![u32::MAX; db.len()];
    for (row, &pos) in candidates.iter().enumerate() {
        let slot = row_of.get_mut(pos).ok_or(Error::PositionOutOfRange {
            position: pos,
            len: db.len(),
        })?;
        if *slot != u32::MAX {
            return Err(Error::invalid(format!("candidate position {pos} listed twice")));
        }
        *slot = row as u32;
    }

    let mut columns_of: BTreeMap<Fingerprint, Vec<usize>> = BTreeMap::new();
    for (col, &fp) in test_profile.by_postorder().iter().enumerate() {
        columns_of.entry(fp).or_default().push(col);
    }

    let mut rows = vec![BitVec::zeros(columns); candidates.len()];
    for (fp, cols) in &columns_of {
        for &pos in db.postings(*fp) {
            let row = row_of[pos as usize];
            if row != u32::MAX {
                for &c in cols {
                    rows[row as usize].set(c);
                }
            }
        }
    }
    CoMatrix::new(rows, columns, candidates.to_vec())
}

// ---------------------------------------------------------------------------
// Persistence

const STRINGS_PER_RECORD: usize = 6;

impl ExemplarDatabase {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut pool = Vec::new();
        let mut table = Vec::new();
        for r in &self.records {
            let tree = to_sexpr(&r.tree);
            for s in [&r.id, &r.source_lang, &r.target_lang, &r.source, &r.target, &tree] {
                table.extend_from_slice(&(pool.len() as u64).to_le_bytes());
                table.extend_from_slice(&(s.len() as u64).to_le_bytes());
                pool.extend_from_slice(s.as_bytes());
            }
            let fps = r.profile.by_postorder();
            table.extend_from_slice(&(fps.len() as u32).to_le_bytes());
            for fp in fps {
                table.extend_from_slice(&fp.0.to_le_bytes());
            }
        }

        w.write_all(INDEX_MAGIC)?;
        w.write_all(&INDEX_VERSION.to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        w.write_all(&table)?;
        w.write_all(&(pool.len() as u64).to_le_bytes())?;
        w.write_all(&pool)?;

        let postings = self.sorted_postings();
        let mut buf = Vec::new();
        buf.extend_from_slice(&(postings.len() as u64).to_le_bytes());
        for (fp, list) in postings {
            buf.extend_from_slice(&fp.0.to_le_bytes());
            buf.extend_from_slice(&(list.len() as u32).to_le_bytes());
            let mut prev = 0u32;
            for &p in list {
                write_varint(&mut buf, u64::from(p - prev));
                prev = p;
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut cur = Cursor { bytes: &bytes, pos: 0 };

        if cur.take(8)? != INDEX_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = cur.u32()?;
        if version != INDEX_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let count = usize::try_from(cur.u64()?).map_err(|_| corrupt("record count overflow"))?;

        struct RawRecord {
            strings: [(u64, u64); STRINGS_PER_RECORD],
            fps: Vec<Fingerprint>,
        }
        let mut raw = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let mut strings = [(0, 0); STRINGS_PER_RECORD];
            for s in &mut strings {
                *s = (cur.u64()?, cur.u64()?);
            }
            let n = cur.u32()? as usize;
            let fps = (0..n).map(|_| cur.u64().map(Fingerprint)).collect::<Result<Vec<_>>>()?;
            raw.push(RawRecord { strings, fps });
        }
        let pool_len = usize::try_from(cur.u64()?).map_err(|_| corrupt("pool length overflow"))?;
        let pool = cur.take(pool_len)?;
        let text = |(off, len): (u64, u64)| -> Result<String> {
            let start = usize::try_from(off).map_err(|_| corrupt("string offset overflow"))?;
            let end = start
                .checked_add(usize::try_from(len).map_err(|_| corrupt("string length overflow"))?)
                .filter(|&e| e <= pool.len())
                .ok_or_else(|| corrupt("string out of pool bounds"))?;
            String::from_utf8(pool[start..end].to_vec()).map_err(|_| corrupt("string is not UTF-8"))
        };

        let mut records = Vec::with_capacity(raw.len());
        for rr in raw {
            let [id, sl, tl, src, tgt, tree] = rr.strings.map(text);
            let (id, tree_text) = (id?, tree?);
            let tree = parse_sexpr(&tree_text).map_err(|e| corrupt(format!("record {id:?}: {e}")))?;
            let profile = FingerprintProfile::from_parts(rr.fps, &tree)
                .ok_or_else(|| corrupt(format!("record {id:?}: fingerprint count mismatch")))?;
            if profile != fingerprint_tree(&tree) {
                return Err(corrupt(format!("record {id:?}: fingerprints do not match tree")));
            }
            records.push(ExemplarRecord {
                id,
                source_lang: sl?,
                target_lang: tl?,
                source: src?,
                target: tgt?,
                tree,
                profile,
            });
        }

        let db = ExemplarDatabase::from_records(records)?;
        let n_postings = cur.u64()?;
        if n_postings != db.inverted.len() as u64 {
            return Err(corrupt("posting list count does not match records"));
        }
        for _ in 0..n_postings {
            let fp = Fingerprint(cur.u64()?);
            let len = cur.u32()? as usize;
            let mut list = Vec::with_capacity(len.min(db.len()));
            let mut prev = 0u64;
            for _ in 0..len {
                prev += cur.varint()?;
                list.push(u32::try_from(prev).map_err(|_| corrupt("posting overflow"))?);
            }
            if db.postings(fp) != list.as_slice() {
                return Err(corrupt(format!("posting list for {fp} does not match records")));
            }
        }
        if cur.pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(db)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(io::BufReader::new(fs::File::open(path)?))
    }

    /// Human-readable mirror of the binary index.
    pub fn to_json_dump(&self) -> IndexDump {
        IndexDump {
            magic: String::from_utf8_lossy(INDEX_MAGIC).into_owned(),
            version: INDEX_VERSION,
            records: self
                .records
                .iter()
                .map(|r| DumpRecord {
                    id: r.id.clone(),
                    source_lang: r.source_lang.clone(),
                    target_lang: r.target_lang.clone(),
                    source: r.source.clone(),
                    target: r.target.clone(),
                    tree: to_sexpr(&r.tree),
                    fingerprints: r.profile.by_postorder().iter().map(|f| f.to_string()).collect(),
                })
                .collect(),
            postings: self
                .sorted_postings()
                .into_iter()
                .map(|(fp, list)| DumpPosting {
                    fingerprint: fp.to_string(),
                    positions: list.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_json_dump(dump: &IndexDump) -> Result<Self> {
        if dump.magic.as_bytes() != INDEX_MAGIC || dump.version != INDEX_VERSION {
            return Err(corrupt("bad dump header"));
        }
        let mut records = Vec::with_capacity(dump.records.len());
        for d in &dump.records {
            let tree = parse_sexpr(&d.tree).map_err(|e| corrupt(format!("record {:?}: {e}", d.id)))?;
            let fps = d
                .fingerprints
                .iter()
                .map(|h| u64::from_str_radix(h, 16).map(Fingerprint))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| corrupt(e.to_string()))?;
            let profile = FingerprintProfile::from_parts(fps, &tree)
                .filter(|p| *p == fingerprint_tree(&tree))
                .ok_or_else(|| corrupt(format!("record {:?}: fingerprints do not match tree", d.id)))?;
            records.push(ExemplarRecord {
                id: d.id.clone(),
                source_lang: d.source_lang.clone(),
                target_lang: d.target_lang.clone(),
                source: d.source.clone(),
                target: d.target.clone(),
                tree,
                profile,
            });
        }
        let db = ExemplarDatabase::from_records(records)?;
        if db.to_json_dump().postings != dump.postings {
            return Err(corrupt("posting lists do not match records"));
        }
        Ok(db)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexDump {
    pub magic: String,
    pub version: u32,
    pub records: Vec<DumpRecord>,
    pub postings: Vec<DumpPosting>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpRecord {
    pub id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub source: String,
    pub target: String,
    pub tree: String,
    pub fingerprints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpPosting {
    pub fingerprint: String,
    pub positions: Vec<u32>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptIndex(msg.into())
}

fn write_varint(buf: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt("unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.take(1)?[0];
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(corrupt("varint too long"))
    }
}
