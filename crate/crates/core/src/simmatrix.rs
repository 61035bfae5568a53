//! Size-normalized clone similarity between repositories and coins, and the
//! chronologically ordered coin-by-coin matrix built from it.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusSnapshot, RepoDocument};
use crate::tiling::{tile_prepared, PreparedDocument};

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("coin index {index} out of range for {len} coins")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("bucket width {0} does not divide 1")]
    BucketWidth(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Decimal places kept in matrix values, in memory and on disk alike.
pub const VALUE_DECIMALS: i32 = 6;

fn quantize(value: f64) -> f64 {
    let scale = 10f64.powi(VALUE_DECIMALS);
    (value * scale).round() / scale
}

/// `2 * matched / (|A| + |B|)`, with sizes in characters.
///
/// Arguments are put in canonical `(coin_id, repo_name)` order before tiling,
/// so the result does not depend on the call order.
pub fn repo_similarity(doc_a: &RepoDocument, doc_b: &RepoDocument, min_match_len: usize) -> f64 {
    let (first, second) = canonical(doc_a, doc_b);
    let a = PreparedDocument::new(first, min_match_len);
    let b = PreparedDocument::new(second, min_match_len);
    similarity_from_prepared(&a, &b)
}

fn canonical<'a>(
    doc_a: &'a RepoDocument,
    doc_b: &'a RepoDocument,
) -> (&'a RepoDocument, &'a RepoDocument) {
    if (&doc_a.coin_id, &doc_a.repo_name) <= (&doc_b.coin_id, &doc_b.repo_name) {
        (doc_a, doc_b)
    } else {
        (doc_b, doc_a)
    }
}

fn similarity_from_prepared(a: &PreparedDocument, b: &PreparedDocument) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    let matched = tile_prepared(a, b).matched_chars;
    2.0 * matched as f64 / total as f64
}

/// Highest repository similarity over all cross pairs; 0 if either side has no documents.
pub fn coin_similarity(
    coin_a: &[RepoDocument],
    coin_b: &[RepoDocument],
    min_match_len: usize,
) -> f64 {
    coin_a
        .iter()
        .flat_map(|a| {
            coin_b
                .iter()
                .map(move |b| repo_similarity(a, b, min_match_len))
        })
        .fold(0.0, f64::max)
}

/// Symmetric matrix over coins in chronological order.
///
/// The diagonal is 1 for coins with code and 0 for code-less coins, which is
/// how a persisted matrix remembers which coins carry no lineage signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub snapshot_label: String,
    pub coin_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub min_match_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrior {
    pub index: usize,
    pub best_value: f64,
    pub best_index: usize,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.coin_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coin_ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn is_code_less(&self, i: usize) -> bool {
        self.values[i][i] == 0.0
    }

    pub fn index_of(&self, coin_id: &str) -> Option<usize> {
        self.coin_ids.iter().position(|c| c == coin_id)
    }

    /// Builds a matrix from raw values, quantizing and symmetrizing from the upper triangle.
    pub fn from_values(
        snapshot_label: impl Into<String>,
        coin_ids: Vec<String>,
        mut values: Vec<Vec<f64>>,
        min_match_len: usize,
    ) -> Self {
        let n = coin_ids.len();
        assert!(
            values.len() == n && values.iter().all(|r| r.len() == n),
            "matrix must be square"
        );
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            values[i][i] = quantize(values[i][i]);
            for j in i + 1..n {
                let v = quantize(values[i][j]);
                values[i][j] = v;
                values[j][i] = v;
            }
        }
        SimilarityMatrix {
            snapshot_label: snapshot_label.into(),
            coin_ids,
            values,
            min_match_len,
        }
    }

    /// Rows and columns reordered so that new position `k` holds old coin `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        SimilarityMatrix {
            snapshot_label: self.snapshot_label.clone(),
            coin_ids: order.iter().map(|&i| self.coin_ids[i].clone()).collect(),
            values: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
            min_match_len: self.min_match_len,
        }
    }

    /// Best similarity against strictly earlier coins with code.
    ///
    /// `None` for code-less coins and for coins with no earlier coin that has code.
    /// Ties go to the earliest coin.
    pub fn max_prior(&self, i: usize) -> Result<Option<MaxPrior>, MatrixError> {
        if i >= self.len() {
            return Err(MatrixError::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        if self.is_code_less(i) {
            return Ok(None);
        }
        let mut best: Option<MaxPrior> = None;
        for j in (0..i).filter(|&j| !self.is_code_less(j)) {
            let v = self.values[j][i];
            if best.is_none_or(|b| v > b.best_value) {
                best = Some(MaxPrior {
                    index: i,
                    best_value: v,
                    best_index: j,
                });
            }
        }
        Ok(best)
    }

    pub fn max_priors(&self) -> Vec<Option<MaxPrior>> {
        (0..self.len())
            .map(|i| self.max_prior(i).expect("index in range"))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(self.to_csv_string().as_bytes())
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# snapshot={} min_match_len={}",
            self.snapshot_label, self.min_match_len
        );
        s.push_str("coin_id");
        for id in &self.coin_ids {
            s.push(',');
            s.push_str(id);
        }
        s.push('\n');
        for (id, row) in self.coin_ids.iter().zip(&self.values) {
            s.push_str(id);
            for v in row {
                let _ = write!(s, ",{:.*}", VALUE_DECIMALS as usize, v);
            }
            s.push('\n');
        }
        s
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, MatrixError> {
        let mut snapshot_label = String::new();
        let mut min_match_len = 0;
        let mut coin_ids: Option<Vec<String>> = None;
        let mut values = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let parse_err = |reason: String| MatrixError::Parse {
                line: line_no,
                reason,
            };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("snapshot=") {
                        snapshot_label = v.to_string();
                    } else if let Some(v) = field.strip_prefix("min_match_len=") {
                        min_match_len = v.parse().map_err(|e| parse_err(format!("{e}")))?;
                    }
                }
                continue;
            }
            let mut cells = line.split(',');
            let first = cells.next().unwrap_or_default();
            match &coin_ids {
                None => {
                    if first != "coin_id" {
                        return Err(parse_err("expected header starting with coin_id".into()));
                    }
                    coin_ids = Some(cells.map(str::to_string).collect());
                }
                Some(ids) => {
                    let row_idx = values.len();
                    if ids.get(row_idx).map(String::as_str) != Some(first) {
                        return Err(parse_err(format!(
                            "row label {first:?} does not match header"
                        )));
                    }
                    let row = cells
                        .map(|c| {
                            c.parse::<f64>()
                                .map_err(|e| parse_err(format!("{c:?}: {e}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if row.len() != ids.len() {
                        return Err(parse_err(format!(
                            "expected {} values, got {}",
                            ids.len(),
                            row.len()
                        )));
                    }
                    if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(parse_err("similarity outside [0, 1]".into()));
                    }
                    values.push(row);
                }
            }
        }
        let coin_ids = coin_ids.ok_or(MatrixError::Parse {
            line: 0,
            reason: "missing header".into(),
        })?;
        if values.len() != coin_ids.len() {
            return Err(MatrixError::Parse {
                line: 0,
                reason: format!("expected {} rows, got {}", coin_ids.len(), values.len()),
            });
        }
        let n = coin_ids.len();
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in 0..i {
                if values[i][j] != values[j][i] {
                    return Err(MatrixError::Parse {
                        line: i + 3,
                        reason: format!("matrix not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        Ok(SimilarityMatrix {
            snapshot_label,
            coin_ids,
            values,
            min_match_len,
        })
    }
}

/// Free-function form of [`SimilarityMatrix::max_prior`].
pub fn max_prior_similarity(
    matrix: &SimilarityMatrix,
    i: usize,
) -> Result<Option<MaxPrior>, MatrixError> {
    matrix.max_prior(i)
}

/// `coin_id,best_value,best_coin_id`; fields stay empty when there is no earlier coin.
pub fn write_max_prior_csv<W: Write>(matrix: &SimilarityMatrix, mut out: W) -> io::Result<()> {
    writeln!(out, "coin_id,best_value,best_coin_id")?;
    for (i, prior) in matrix.max_priors().into_iter().enumerate() {
        match prior {
            Some(p) => writeln!(
                out,
                "{},{:.*},{}",
                matrix.coin_ids[i],
                VALUE_DECIMALS as usize,
                p.best_value,
                matrix.coin_ids[p.best_index]
            )?,
            None => writeln!(out, "{},,", matrix.coin_ids[i])?,
        }
    }
    Ok(())
}

/// Computes every unordered coin pair on `workers` threads (0 = rayon default).
pub fn build_matrix(
    snapshot: &CorpusSnapshot,
    min_match_len: usize,
    workers: usize,
) -> Result<SimilarityMatrix, MatrixError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| MatrixError::Pool(e.to_string()))?;
    Ok(pool.install(|| build_matrix_in_pool(snapshot, min_match_len)))
}

fn build_matrix_in_pool(snapshot: &CorpusSnapshot, min_match_len: usize) -> SimilarityMatrix {
    let n = snapshot.coins.len();
    // documents are already sorted by repo name inside each coin
    let prepared: Vec<Vec<(&RepoDocument, PreparedDocument)>> = snapshot
        .coins
        .par_iter()
        .map(|coin| {
            coin.documents
                .iter()
                .map(|d| (d, PreparedDocument::new(d, min_match_len)))
                .collect()
        })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let sims: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut best = 0.0f64;
            for (doc_x, px) in &prepared[i] {
                for (doc_y, py) in &prepared[j] {
                    let x_first =
                        (&doc_x.coin_id, &doc_x.repo_name) <= (&doc_y.coin_id, &doc_y.repo_name);
                    let s = if x_first {
                        similarity_from_prepared(px, py)
                    } else {
                        similarity_from_prepared(py, px)
                    };
                    best = best.max(s);
                }
            }
            best
        })
        .collect();

    let mut values = vec![vec![0.0; n]; n];
    for (i, coin) in snapshot.coins.iter().enumerate() {
        values[i][i] = if coin.code_less { 0.0 } else { 1.0 };
    }
    for (&(i, j), s) in pairs.iter().zip(sims) {
        values[i][j] = s;
        values[j][i] = s;
    }
    SimilarityMatrix::from_values(
        snapshot.label.clone(),
        snapshot
            .coins
            .iter()
            .map(|c| c.meta.coin_id.clone())
            .collect(),
        values,
        min_match_len,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Counts coins by their [`MaxPrior`] value in buckets `[k*w, (k+1)*w)`, the top bucket closed.
pub fn similarity_histogram(
    matrix: &SimilarityMatrix,
    bucket_width: f64,
) -> Result<Vec<HistogramBucket>, MatrixError> {
    let buckets = (1.0 / bucket_width).round();
    if !(bucket_width > 0.0 && bucket_width <= 1.0) || ((buckets * bucket_width) - 1.0).abs() > 1e-9
    {
        return Err(MatrixError::BucketWidth(bucket_width));
    }
    let buckets = buckets as usize;
    let mut counts = vec![0usize; buckets];
    for prior in matrix.max_priors().into_iter().flatten() {
        let k = ((prior.best_value * buckets as f64) + 1e-9).floor() as usize;
        counts[k.min(buckets - 1)] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBucket {
            lower: k as f64 / buckets as f64,
            upper: (k + 1) as f64 / buckets as f64,
            count,
        })
        .collect())
}

pub fn write_histogram_csv<W: Write>(buckets: &[HistogramBucket], mut out: W) -> io::Result<()> {
    writeln!(out, "lower,upper,count")?;
    for b in buckets {
        writeln!(out, "{:.2},{:.2},{}", b.lower, b.upper, b.count)?;
    }
    Ok(())
}
