//! Running-Karp-Rabin Greedy String Tiling over character sequences.
//!
//! Tiles are chosen strictly greedily: at every step the longest common
//! substring of the still unmarked regions is taken (ties go to the smallest
//! offset in A, then in B), marked in both documents, and the search repeats.
//! Matches never cross a file boundary.
//!
//! The engine records every maximal diagonal run of length `>= min_match_len`
//! once, using Karp-Rabin window hashes joined across the two documents, and
//! then replays the greedy selection over a priority queue. A run that was
//! partially covered by an earlier tile is split into its unmarked pieces and
//! re-queued, which keeps the result identical to the exhaustive definition
//! implemented by [`tiling_oracle`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::RepoDocument;

/// A matched substring pair. Offsets index characters of the concatenated files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Tile {
    pub offset_a: usize,
    pub offset_b: usize,
    pub length: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingResult {
    /// Tiles in selection order (non-increasing length).
    pub tiles: Vec<Tile>,
    pub matched_chars: usize,
}

impl TilingResult {
    fn push(&mut self, tile: Tile) {
        self.matched_chars += tile.length;
        self.tiles.push(tile);
    }
}

const MODULUS: u64 = (1 << 61) - 1;
const BASE: u64 = 0x1f3d_5b79_a2c4_e681 % MODULUS;

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let product = a as u128 * b as u128;
    let folded = (product & MODULUS as u128) as u64 + (product >> 61) as u64;
    if folded >= MODULUS {
        folded - MODULUS
    } else {
        folded
    }
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MODULUS {
        s - MODULUS
    } else {
        s
    }
}

/// A document flattened to characters with file segments and sorted window hashes.
///
/// Preparing is independent of the other side of a comparison, so a document
/// can be prepared once and tiled against many others.
#[derive(Debug, Clone)]
pub struct PreparedDocument {
    chars: Vec<char>,
    /// Half-open `[start, end)` ranges of each non-empty file.
    segments: Vec<(usize, usize)>,
    /// `(hash, start)` of every in-segment window of `window` chars, sorted.
    windows: Vec<(u64, u32)>,
    window: usize,
}

impl PreparedDocument {
    pub fn new(doc: &RepoDocument, min_match_len: usize) -> Self {
        Self::from_segments(doc.files.iter().map(|f| f.text.as_str()), min_match_len)
    }

    pub fn from_segments<'a>(
        files: impl IntoIterator<Item = &'a str>,
        min_match_len: usize,
    ) -> Self {
        assert!(min_match_len >= 1, "min_match_len must be positive");
        let mut chars = Vec::new();
        let mut segments = Vec::new();
        for text in files {
            let start = chars.len();
            chars.extend(text.chars());
            if chars.len() > start {
                segments.push((start, chars.len()));
            }
        }
        assert!(chars.len() < u32::MAX as usize, "document too large");

        let window = min_match_len;
        let mut top_power = 1u64;
        for _ in 1..window {
            top_power = mul_mod(top_power, BASE);
        }
        let mut windows = Vec::with_capacity(chars.len());
        for &(start, end) in &segments {
            if end - start < window {
                continue;
            }
            let mut hash = 0u64;
            for &c in &chars[start..start + window] {
                hash = add_mod(mul_mod(hash, BASE), c as u64);
            }
            windows.push((hash, start as u32));
            for pos in start + 1..=end - window {
                let outgoing = mul_mod(chars[pos - 1] as u64, top_power);
                hash = add_mod(hash, MODULUS - outgoing);
                hash = add_mod(mul_mod(hash, BASE), chars[pos + window - 1] as u64);
                windows.push((hash, pos as u32));
            }
        }
        windows.sort_unstable();
        PreparedDocument {
            chars,
            segments,
            windows,
            window,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn min_match_len(&self) -> usize {
        self.window
    }

    fn segment(&self, pos: usize) -> (usize, usize) {
        let idx = self.segments.partition_point(|&(start, _)| start <= pos) - 1;
        self.segments[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    len: usize,
    a: usize,
    b: usize,
}

impl Ord for Run {
    // Max-heap order: longest first, then smallest a, then smallest b.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

impl PartialOrd for Run {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Every maximal diagonal run of length `>= window` between the two documents.
fn maximal_runs(a: &PreparedDocument, b: &PreparedDocument) -> Vec<Run> {
    let window = a.window;
    let (wa, wb) = (&a.windows, &b.windows);
    let mut runs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < wa.len() && j < wb.len() {
        let (ha, hb) = (wa[i].0, wb[j].0);
        if ha < hb {
            i += 1;
            continue;
        }
        if hb < ha {
            j += 1;
            continue;
        }
        let i_end = i + wa[i..].partition_point(|w| w.0 == ha);
        let j_end = j + wb[j..].partition_point(|w| w.0 == ha);
        for &(_, pa) in &wa[i..i_end] {
            let pa = pa as usize;
            let (seg_a_start, seg_a_end) = a.segment(pa);
            for &(_, pb) in &wb[j..j_end] {
                let pb = pb as usize;
                let (seg_b_start, seg_b_end) = b.segment(pb);
                // only the left-maximal start of a run is recorded
                if pa > seg_a_start && pb > seg_b_start && a.chars[pa - 1] == b.chars[pb - 1] {
                    continue;
                }
                if a.chars[pa..pa + window] != b.chars[pb..pb + window] {
                    continue;
                }
                let mut len = window;
                while pa + len < seg_a_end
                    && pb + len < seg_b_end
                    && a.chars[pa + len] == b.chars[pb + len]
                {
                    len += 1;
                }
                runs.push(Run { len, a: pa, b: pb });
            }
        }
        i = i_end;
        j = j_end;
    }
    runs
}

/// Greedy tiling of two prepared documents. Both must use the same `min_match_len`.
pub fn tile_prepared(a: &PreparedDocument, b: &PreparedDocument) -> TilingResult {
    assert_eq!(
        a.window, b.window,
        "documents prepared with different min_match_len"
    );
    let min = a.window;
    let mut result = TilingResult::default();
    if a.is_empty() || b.is_empty() {
        return result;
    }
    let mut heap = BinaryHeap::from(maximal_runs(a, b));
    let mut marked_a = vec![false; a.len()];
    let mut marked_b = vec![false; b.len()];

    while let Some(run) = heap.pop() {
        let free = |k: usize| !marked_a[run.a + k] && !marked_b[run.b + k];
        if (0..run.len).all(free) {
            marked_a[run.a..run.a + run.len].fill(true);
            marked_b[run.b..run.b + run.len].fill(true);
            result.push(Tile {
                offset_a: run.a,
                offset_b: run.b,
                length: run.len,
            });
            continue;
        }
        // re-queue the unmarked pieces of a partially covered run
        let mut k = 0;
        while k < run.len {
            if !free(k) {
                k += 1;
                continue;
            }
            let start = k;
            while k < run.len && free(k) {
                k += 1;
            }
            if k - start >= min {
                heap.push(Run {
                    len: k - start,
                    a: run.a + start,
                    b: run.b + start,
                });
            }
        }
    }
    result
}

/// Greedy string tiling of two repository documents.
pub fn rkr_gst(doc_a: &RepoDocument, doc_b: &RepoDocument, min_match_len: usize) -> TilingResult {
    let a = PreparedDocument::new(doc_a, min_match_len);
    let b = PreparedDocument::new(doc_b, min_match_len);
    tile_prepared(&a, &b)
}

/// Exhaustive reference implementation of the tiling contract for small inputs.
///
/// Each round scans all `(a, b)` starting pairs for the longest unmarked
/// common run, so it costs roughly `O(|A| * |B| * L)` per tile.
pub fn tiling_oracle(text_a: &str, text_b: &str, min_match_len: usize) -> TilingResult {
    tiling_oracle_files(&[text_a], &[text_b], min_match_len)
}

pub fn tiling_oracle_files(
    files_a: &[&str],
    files_b: &[&str],
    min_match_len: usize,
) -> TilingResult {
    assert!(min_match_len >= 1, "min_match_len must be positive");
    let flatten = |files: &[&str]| {
        let mut chars = Vec::new();
        let mut file_of = Vec::new();
        for (idx, f) in files.iter().enumerate() {
            for c in f.chars() {
                chars.push(c);
                file_of.push(idx);
            }
        }
        (chars, file_of)
    };
    let (a, file_a) = flatten(files_a);
    let (b, file_b) = flatten(files_b);
    let mut marked_a = vec![false; a.len()];
    let mut marked_b = vec![false; b.len()];
    let mut result = TilingResult::default();
    loop {
        let mut best: Option<Tile> = None;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut k = 0;
                while i + k < a.len()
                    && j + k < b.len()
                    && file_a[i + k] == file_a[i]
                    && file_b[j + k] == file_b[j]
                    && !marked_a[i + k]
                    && !marked_b[j + k]
                    && a[i + k] == b[j + k]
                {
                    k += 1;
                }
                if k >= min_match_len && best.is_none_or(|t| k > t.length) {
                    best = Some(Tile {
                        offset_a: i,
                        offset_b: j,
                        length: k,
                    });
                }
            }
        }
        let Some(tile) = best else { break };
        marked_a[tile.offset_a..tile.offset_a + tile.length].fill(true);
        marked_b[tile.offset_b..tile.offset_b + tile.length].fill(true);
        result.push(tile);
    }
    result
}

fn file_at(doc: &RepoDocument, offset: usize) -> &str {
    let mut start = 0;
    for f in &doc.files {
        if offset < start + f.char_count {
            return &f.relative_path;
        }
        start += f.char_count;
    }
    ""
}

/// Debug dump: `offset_a,offset_b,length,file_a,file_b`.
pub fn write_tiles_csv<W: Write>(
    result: &TilingResult,
    doc_a: &RepoDocument,
    doc_b: &RepoDocument,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "offset_a,offset_b,length,file_a,file_b")?;
    for t in &result.tiles {
        writeln!(
            out,
            "{},{},{},{},{}",
            t.offset_a,
            t.offset_b,
            t.length,
            file_at(doc_a, t.offset_a),
            file_at(doc_b, t.offset_b)
        )?;
    }
    Ok(())
}
