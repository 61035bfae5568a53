//! Repository metadata in GitHub API shape: fork and source relations,
//! language/time statistics, and a small client that fills the metadata
//! directory from an API endpoint.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForkGraphError {
    #[error("failed to read metadata directory {path}: {source}")]
    Dir {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed repository metadata: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("repository {0} not found")]
    NotFound(String),
    #[error("rate limited; retry after {}", describe_reset(*.reset_at, *.retry_after_secs))]
    RateLimited {
        /// Unix time when the quota resets (`x-ratelimit-reset`).
        reset_at: Option<i64>,
        /// Seconds from a `retry-after` header.
        retry_after_secs: Option<u64>,
    },
    #[error("unexpected HTTP status {status} for {url}")]
    Status { status: u16, url: String },
    #[error("transport error: {0}")]
    Transport(#[from] ureq::Error),
    #[error("failed to persist response: {0}")]
    Persist(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ForkGraphError),
}

fn describe_reset(reset_at: Option<i64>, retry_after: Option<u64>) -> String {
    match (reset_at, retry_after) {
        (Some(t), _) => DateTime::from_timestamp(t, 0).map_or(t.to_string(), |d| d.to_rfc3339()),
        (None, Some(s)) => format!("{s}s"),
        (None, None) => "an unknown time".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMeta {
    pub full_name: String,
    pub created_at: DateTime<Utc>,
    pub language: Option<String>,
    pub parent_full_name: Option<String>,
    pub source_full_name: Option<String>,
}

#[derive(Deserialize)]
struct ApiRepo {
    full_name: String,
    created_at: DateTime<Utc>,
    #[serde(default)]
    language: Option<String>,
    #[serde(default)]
    parent: Option<ApiRef>,
    #[serde(default)]
    source: Option<ApiRef>,
}

#[derive(Deserialize)]
struct ApiRef {
    full_name: String,
}

/// Parses one API response body, keeping only the fields the analysis uses.
pub fn parse_repo_meta(bytes: &[u8]) -> Result<RepoMeta, ForkGraphError> {
    let api: ApiRepo =
        serde_json::from_slice(bytes).map_err(|e| ForkGraphError::Malformed(e.to_string()))?;
    if api.parent.is_some() && api.source.is_none() {
        return Err(ForkGraphError::Malformed(format!(
            "{} has a parent but no source",
            api.full_name
        )));
    }
    if !api.full_name.contains('/') {
        return Err(ForkGraphError::Malformed(format!(
            "full_name {:?} is not owner/repo",
            api.full_name
        )));
    }
    Ok(RepoMeta {
        full_name: api.full_name,
        created_at: api.created_at,
        language: api.language,
        parent_full_name: api.parent.map(|p| p.full_name),
        source_full_name: api.source.map(|s| s.full_name),
    })
}

#[derive(Debug, Clone, Default)]
pub struct RepoMetaLoad {
    /// Sorted by full_name.
    pub metas: Vec<RepoMeta>,
    pub warnings: Vec<String>,
}

/// Reads every `*.json` file of `dir` in file-name order; the first record of
/// a `full_name` wins.
pub fn load_repo_meta(dir: impl AsRef<Path>) -> Result<RepoMetaLoad, ForkGraphError> {
    let dir = dir.as_ref();
    let dir_err = |source| ForkGraphError::Dir {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(dir_err)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();

    let mut load = RepoMetaLoad::default();
    let mut by_name: BTreeMap<String, RepoMeta> = BTreeMap::new();
    for path in files {
        let parsed = fs::read(&path)
            .map_err(|e| ForkGraphError::Malformed(e.to_string()))
            .and_then(|bytes| parse_repo_meta(&bytes));
        match parsed {
            Ok(meta) => {
                if by_name.contains_key(&meta.full_name) {
                    load.warnings.push(format!(
                        "{}: duplicate record for {}, ignored",
                        path.display(),
                        meta.full_name
                    ));
                } else {
                    by_name.insert(meta.full_name.clone(), meta);
                }
            }
            Err(e) => load.warnings.push(format!("{}: {e}", path.display())),
        }
    }
    load.metas = by_name.into_values().collect();
    Ok(load)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkCount {
    pub full_name: String,
    /// Repositories whose `parent` is this one.
    pub direct_fork_count: usize,
    /// Repositories whose `source` is this one.
    pub source_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkStats {
    /// Most directly forked first, then most sourced, then by name.
    pub leaderboard: Vec<ForkCount>,
}

impl ForkStats {
    pub fn get(&self, full_name: &str) -> Option<&ForkCount> {
        self.leaderboard.iter().find(|c| c.full_name == full_name)
    }
}

/// Counts over every repository that appears in `metas`, either as a record or as a referenced parent/source.
pub fn fork_stats(metas: &[RepoMeta]) -> ForkStats {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for m in metas {
        counts.entry(&m.full_name).or_default();
        if let Some(p) = &m.parent_full_name {
            counts.entry(p).or_default().0 += 1;
        }
        if let Some(s) = &m.source_full_name {
            counts.entry(s).or_default().1 += 1;
        }
    }
    let mut leaderboard: Vec<ForkCount> = counts
        .into_iter()
        .map(|(name, (direct, source))| ForkCount {
            full_name: name.to_string(),
            direct_fork_count: direct,
            source_count: source,
        })
        .collect();
    leaderboard.sort_by(|a, b| {
        b.direct_fork_count
            .cmp(&a.direct_fork_count)
            .then(b.source_count.cmp(&a.source_count))
            .then_with(|| a.full_name.cmp(&b.full_name))
    });
    ForkStats { leaderboard }
}

pub fn write_leaderboard_csv<W: Write>(stats: &ForkStats, mut out: W) -> io::Result<()> {
    writeln!(out, "full_name,direct_forks,source_of")?;
    for c in &stats.leaderboard {
        writeln!(
            out,
            "{},{},{}",
            c.full_name, c.direct_fork_count, c.source_count
        )?;
    }
    Ok(())
}

pub const UNLABELED_LANGUAGE: &str = "unlabeled";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguagePeriodCount {
    pub language: String,
    pub period_start: NaiveDate,
    pub period_end: NaiveDate,
    pub count: usize,
}

/// Repository counts per primary language and creation period `[edges[k], edges[k+1])`.
/// Only non-zero cells are returned, ordered by language then period.
pub fn language_time_stats(
    metas: &[RepoMeta],
    period_edges: &[NaiveDate],
) -> Vec<LanguagePeriodCount> {
    let mut cells: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for m in metas {
        let day = m.created_at.date_naive();
        let k = period_edges.partition_point(|e| *e <= day);
        if k == 0 || k == period_edges.len() {
            continue;
        }
        let language = m
            .language
            .clone()
            .filter(|l| !l.is_empty())
            .unwrap_or_else(|| UNLABELED_LANGUAGE.to_string());
        *cells.entry((language, k - 1)).or_default() += 1;
    }
    cells
        .into_iter()
        .map(|((language, k), count)| LanguagePeriodCount {
            language,
            period_start: period_edges[k],
            period_end: period_edges[k + 1],
            count,
        })
        .collect()
}

pub fn write_language_stats_csv<W: Write>(
    rows: &[LanguagePeriodCount],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "language,period_start,period_end,count")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.language, r.period_start, r.period_end, r.count
        )?;
    }
    Ok(())
}

/// File name used when persisting the metadata of `owner/repo`.
pub fn meta_file_name(full_name: &str) -> String {
    format!("{}.json", full_name.replace('/', "__"))
}

/// Minimal GitHub REST client for `/repos/{owner}/{repo}`.
///
/// Requests are spaced at least `min_interval` apart; a quota exhaustion is
/// reported as [`FetchError::RateLimited`] instead of being retried.
pub struct GithubClient {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
    min_interval: Duration,
    last_request: Option<Instant>,
}

pub const GITHUB_API: &str = "https://api.github.com";

impl GithubClient {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        GithubClient {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            token,
            agent,
            min_interval: Duration::from_millis(750),
            last_request: None,
        }
    }

    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = interval;
        self
    }

    fn wait_turn(&mut self) {
        if let Some(prev) = self.last_request {
            if let Some(wait) = (prev + self.min_interval).checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        self.last_request = Some(Instant::now());
    }

    /// Raw response body of a single GET.
    pub fn fetch_raw(&mut self, full_name: &str) -> Result<Vec<u8>, FetchError> {
        self.wait_turn();
        let url = format!("{}/repos/{}", self.endpoint, full_name);
        let mut request = self
            .agent
            .get(&url)
            .header("Accept", "application/vnd.github+json")
            .header("User-Agent", "coinlineage");
        if let Some(token) = &self.token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.call()?;
        let status = response.status().as_u16();
        let header = |name: &str| {
            response
                .headers()
                .get(name)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        };
        match status {
            200 => Ok(response.body_mut().read_to_vec()?),
            404 => Err(FetchError::NotFound(full_name.to_string())),
            403 | 429 => {
                let remaining = header("x-ratelimit-remaining");
                let retry_after = header("retry-after").and_then(|v| v.parse().ok());
                if remaining.as_deref() == Some("0") || retry_after.is_some() || status == 429 {
                    Err(FetchError::RateLimited {
                        reset_at: header("x-ratelimit-reset").and_then(|v| v.parse().ok()),
                        retry_after_secs: retry_after,
                    })
                } else {
                    Err(FetchError::Status { status, url })
                }
            }
            _ => Err(FetchError::Status { status, url }),
        }
    }

    pub fn fetch_repo_meta(&mut self, full_name: &str) -> Result<RepoMeta, FetchError> {
        let bytes = self.fetch_raw(full_name)?;
        Ok(parse_repo_meta(&bytes)?)
    }

    /// Fetches and writes the body verbatim into `dir`, so offline loading sees the same bytes.
    pub fn fetch_and_persist(
        &mut self,
        full_name: &str,
        dir: impl AsRef<Path>,
    ) -> Result<RepoMeta, FetchError> {
        let bytes = self.fetch_raw(full_name)?;
        let meta = parse_repo_meta(&bytes)?;
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(meta_file_name(full_name)), &bytes)?;
        Ok(meta)
    }
}

/// Repositories that are referenced as parent or source but have no own record.
pub fn missing_references(metas: &[RepoMeta]) -> BTreeSet<String> {
    let known: HashSet<&str> = metas.iter().map(|m| m.full_name.as_str()).collect();
    metas
        .iter()
        .flat_map(|m| [&m.parent_full_name, &m.source_full_name])
        .flatten()
        .filter(|n| !known.contains(n.as_str()))
        .cloned()
        .collect()
}
