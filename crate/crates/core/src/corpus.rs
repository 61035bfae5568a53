//! Snapshot loading: per-coin metadata plus filtered, normalized source documents.
//!
//! A snapshot directory looks like
//!
//! ```text
//! <root>/snapshot.json                    {"label": "D1", "cut_date": "2018-03-28"}
//! <root>/coins/<coin_id>/meta.json        {"id", "name", "release_time", "has_code_link", "repos"}
//! <root>/coins/<coin_id>/repos/<name>/**  source tree
//! ```

use std::cmp::Ordering;
use std::fs;
use std::path::{Component, Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus: no coin directories under {0}")]
    EmptyCorpus(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid metadata in {path}: {reason}")]
    InvalidMeta { path: PathBuf, reason: String },
}

/// Market-listing metadata of one coin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinMeta {
    #[serde(rename = "id")]
    pub coin_id: String,
    #[serde(rename = "name")]
    pub display_name: String,
    pub release_time: NaiveDate,
    pub has_code_link: bool,
    #[serde(rename = "repos", default)]
    pub repo_names: Vec<String>,
}

impl CoinMeta {
    /// Total chronological order used everywhere: release date, then coin id.
    pub fn chronological_cmp(&self, other: &CoinMeta) -> Ordering {
        self.release_time
            .cmp(&other.release_time)
            .then_with(|| self.coin_id.cmp(&other.coin_id))
    }
}

/// One source file after filtering and normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub relative_path: String,
    pub text: String,
    pub char_count: usize,
}

/// Normalized text of one repository, the unit of clone detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoDocument {
    pub coin_id: String,
    pub repo_name: String,
    /// Sorted by `relative_path`, byte-wise.
    pub files: Vec<SourceFile>,
    pub total_chars: usize,
}

impl RepoDocument {
    /// Builds a document, sorting files and computing character counts.
    pub fn new(
        coin_id: impl Into<String>,
        repo_name: impl Into<String>,
        files: impl IntoIterator<Item = (String, String)>,
    ) -> Self {
        let mut files: Vec<SourceFile> = files
            .into_iter()
            .map(|(relative_path, text)| SourceFile {
                char_count: text.chars().count(),
                relative_path,
                text,
            })
            .collect();
        files.sort_by(|a, b| a.relative_path.as_bytes().cmp(b.relative_path.as_bytes()));
        let total_chars = files.iter().map(|f| f.char_count).sum();
        RepoDocument {
            coin_id: coin_id.into(),
            repo_name: repo_name.into(),
            files,
            total_chars,
        }
    }

    /// Single-file document, mostly useful in tests.
    pub fn from_text(coin_id: &str, repo_name: &str, text: &str) -> Self {
        RepoDocument::new(
            coin_id,
            repo_name,
            [("main.cpp".to_string(), text.to_string())],
        )
    }

    pub fn is_empty(&self) -> bool {
        self.total_chars == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinEntry {
    pub meta: CoinMeta,
    pub documents: Vec<RepoDocument>,
    /// No included source characters in any repository.
    pub code_less: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSnapshot {
    pub label: String,
    pub cut_date: NaiveDate,
    /// Sorted by (release_time, coin_id).
    pub coins: Vec<CoinEntry>,
}

impl CorpusSnapshot {
    /// Assembles a snapshot from in-memory parts, applying the ordering invariants.
    pub fn from_coins(
        label: impl Into<String>,
        cut_date: NaiveDate,
        coins: impl IntoIterator<Item = (CoinMeta, Vec<RepoDocument>)>,
    ) -> Self {
        let mut coins: Vec<CoinEntry> = coins
            .into_iter()
            .map(|(meta, mut documents)| {
                documents.sort_by(|a, b| a.repo_name.cmp(&b.repo_name));
                let code_less = documents.iter().all(RepoDocument::is_empty);
                CoinEntry {
                    meta,
                    documents,
                    code_less,
                }
            })
            .collect();
        coins.sort_by(|a, b| a.meta.chronological_cmp(&b.meta));
        CorpusSnapshot {
            label: label.into(),
            cut_date,
            coins,
        }
    }

    pub fn metas(&self) -> Vec<CoinMeta> {
        self.coins.iter().map(|c| c.meta.clone()).collect()
    }
}

/// A per-coin problem that did not abort the load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadWarning {
    pub coin_dir: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SnapshotLoad {
    pub snapshot: CorpusSnapshot,
    pub warnings: Vec<LoadWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterConfig {
    /// Lower-case extensions without the dot.
    pub extensions: Vec<String>,
    /// Case-insensitive file name prefixes that are always excluded.
    pub excluded_name_prefixes: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            extensions: ["c", "cc", "cpp", "cxx", "h", "hh", "hpp", "hxx"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            excluded_name_prefixes: ["readme", "license", "changelog"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileDecision {
    Include,
    Exclude,
}

impl FilterConfig {
    pub fn filter_file(&self, relative_path: &Path) -> FileDecision {
        let mut components = Vec::new();
        for component in relative_path.components() {
            match component {
                Component::Normal(part) => components.push(part.to_string_lossy()),
                // absolute or parent-relative paths never come out of a repo walk
                _ => return FileDecision::Exclude,
            }
        }
        let Some(file_name) = components.last() else {
            return FileDecision::Exclude;
        };
        if components.iter().any(|c| c.starts_with('.')) {
            return FileDecision::Exclude;
        }
        let lower = file_name.to_lowercase();
        if self
            .excluded_name_prefixes
            .iter()
            .any(|prefix| lower.starts_with(prefix.as_str()))
        {
            return FileDecision::Exclude;
        }
        let extension = Path::new(lower.as_str())
            .extension()
            .map(|e| e.to_string_lossy().into_owned());
        match extension {
            Some(ext) if self.extensions.contains(&ext) => FileDecision::Include,
            _ => FileDecision::Exclude,
        }
    }
}

/// Applies the default C/C++ inclusion rules.
pub fn filter_file(relative_path: impl AsRef<Path>) -> FileDecision {
    FilterConfig::default().filter_file(relative_path.as_ref())
}

/// Lossy UTF-8 decode with CRLF and lone CR folded to LF. Nothing else changes.
pub fn normalize_text(raw: &[u8]) -> String {
    let decoded = String::from_utf8_lossy(raw);
    if !decoded.contains('\r') {
        return decoded.into_owned();
    }
    decoded.replace("\r\n", "\n").replace('\r', "\n")
}

#[derive(Debug, Deserialize)]
struct SnapshotHeader {
    label: String,
    cut_date: NaiveDate,
}

pub fn load_snapshot(
    root: impl AsRef<Path>,
    config: &FilterConfig,
) -> Result<SnapshotLoad, CorpusError> {
    let root = root.as_ref();
    let coins_dir = root.join("coins");
    let mut coin_dirs: Vec<PathBuf> = match fs::read_dir(&coins_dir) {
        Ok(entries) => entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(source) => {
            return Err(CorpusError::Io {
                path: coins_dir,
                source,
            })
        }
    };
    if coin_dirs.is_empty() {
        return Err(CorpusError::EmptyCorpus(root.to_path_buf()));
    }
    coin_dirs.sort();

    let header_path = root.join("snapshot.json");
    let header_bytes = fs::read(&header_path).map_err(|source| CorpusError::Io {
        path: header_path.clone(),
        source,
    })?;
    let header: SnapshotHeader =
        serde_json::from_slice(&header_bytes).map_err(|source| CorpusError::Json {
            path: header_path,
            source,
        })?;

    let results: Vec<(String, Result<LoadedCoin, CorpusError>)> = coin_dirs
        .par_iter()
        .map(|dir| {
            let name = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            (name, load_coin(dir, config))
        })
        .collect();

    let mut warnings = Vec::new();
    let mut coins = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (coin_dir, result) in results {
        match result {
            Ok((meta, docs, notes)) => {
                warnings.extend(notes.into_iter().map(|message| LoadWarning {
                    coin_dir: coin_dir.clone(),
                    message,
                }));
                if !seen.insert(meta.coin_id.clone()) {
                    warnings.push(LoadWarning {
                        coin_dir,
                        message: format!("duplicate coin id {:?}, skipped", meta.coin_id),
                    });
                    continue;
                }
                coins.push((meta, docs));
            }
            Err(e) => {
                log::warn!("skipping coin {coin_dir}: {e}");
                warnings.push(LoadWarning {
                    coin_dir,
                    message: e.to_string(),
                });
            }
        }
    }

    Ok(SnapshotLoad {
        snapshot: CorpusSnapshot::from_coins(header.label, header.cut_date, coins),
        warnings,
    })
}

/// Metadata, documents and per-coin warnings.
type LoadedCoin = (CoinMeta, Vec<RepoDocument>, Vec<String>);

fn load_coin(dir: &Path, config: &FilterConfig) -> Result<LoadedCoin, CorpusError> {
    let meta_path = dir.join("meta.json");
    let bytes = fs::read(&meta_path).map_err(|source| CorpusError::Io {
        path: meta_path.clone(),
        source,
    })?;
    let meta: CoinMeta = serde_json::from_slice(&bytes).map_err(|source| CorpusError::Json {
        path: meta_path.clone(),
        source,
    })?;
    if meta.coin_id.trim().is_empty() {
        return Err(CorpusError::InvalidMeta {
            path: meta_path,
            reason: "empty coin id".into(),
        });
    }

    let mut notes = Vec::new();
    let mut documents = Vec::new();
    for repo_name in &meta.repo_names {
        let repo_dir = dir.join("repos").join(repo_name);
        if !repo_dir.is_dir() {
            notes.push(format!("repository {repo_name:?} listed but missing"));
            continue;
        }
        documents.push(load_repo(&meta.coin_id, repo_name, &repo_dir, config)?);
    }
    Ok((meta, documents, notes))
}

fn load_repo(
    coin_id: &str,
    repo_name: &str,
    repo_dir: &Path,
    config: &FilterConfig,
) -> Result<RepoDocument, CorpusError> {
    let mut files = Vec::new();
    for entry in WalkDir::new(repo_dir).follow_links(false) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: repo_dir.to_path_buf(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let Ok(relative) = entry.path().strip_prefix(repo_dir) else {
            continue;
        };
        if config.filter_file(relative) == FileDecision::Exclude {
            continue;
        }
        let raw = fs::read(entry.path()).map_err(|source| CorpusError::Io {
            path: entry.path().to_path_buf(),
            source,
        })?;
        let relative_path = relative
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push((relative_path, normalize_text(&raw)));
    }
    Ok(RepoDocument::new(coin_id, repo_name, files))
}

/// Index written by ingestion: coin list with per-repository file and character counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub label: String,
    pub cut_date: NaiveDate,
    pub coins: Vec<ManifestCoin>,
    #[serde(default)]
    pub warnings: Vec<LoadWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCoin {
    #[serde(flatten)]
    pub meta: CoinMeta,
    pub code_less: bool,
    pub documents: Vec<ManifestRepo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRepo {
    pub name: String,
    pub file_count: usize,
    pub total_chars: usize,
}

impl CorpusManifest {
    pub fn new(snapshot: &CorpusSnapshot, warnings: &[LoadWarning]) -> Self {
        CorpusManifest {
            label: snapshot.label.clone(),
            cut_date: snapshot.cut_date,
            coins: snapshot
                .coins
                .iter()
                .map(|c| ManifestCoin {
                    meta: c.meta.clone(),
                    code_less: c.code_less,
                    documents: c
                        .documents
                        .iter()
                        .map(|d| ManifestRepo {
                            name: d.repo_name.clone(),
                            file_count: d.files.len(),
                            total_chars: d.total_chars,
                        })
                        .collect(),
                })
                .collect(),
            warnings: warnings.to_vec(),
        }
    }

    pub fn metas(&self) -> Vec<CoinMeta> {
        self.coins.iter().map(|c| c.meta.clone()).collect()
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
