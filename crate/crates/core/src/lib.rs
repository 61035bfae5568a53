//! Code-innovation analysis for cryptocurrency repositories.
//!
//! The pipeline loads a snapshot of per-coin source trees ([`corpus`]),
//! measures pairwise clone similarity with greedy string tiling ([`tiling`],
//! [`simmatrix`]), clusters coins into family pedigrees in release order
//! ([`pedigree`]), matches pedigrees between two snapshots ([`matcher`]) and
//! relates cohorts to market survival and capitalization ([`prospects`]).
//! [`forkgraph`] covers GitHub fork metadata.

pub mod config;
pub mod corpus;
pub mod forkgraph;
pub mod matcher;
pub mod pedigree;
pub mod prospects;
pub mod simmatrix;
pub mod tiling;

pub use config::RunConfig;
pub use corpus::{
    filter_file, load_snapshot, normalize_text, CoinEntry, CoinMeta, CorpusManifest,
    CorpusSnapshot, FileDecision, FilterConfig, RepoDocument,
};
pub use forkgraph::{
    fork_stats, language_time_stats, load_repo_meta, ForkStats, GithubClient, RepoMeta,
};
pub use matcher::{match_pedigrees, prune, MatchReport, TreeMatch};
pub use pedigree::{
    build_forest, family_first_release, family_sizes, forest_to_dot, PedigreeConfig,
    PedigreeForest, PedigreeNode, Relation,
};
pub use prospects::{
    alive_at, family_prospects, mccr, ncr, partition_by_similarity, Cohort, CohortDefinition,
    MarketSeries, ProspectReport, ProspectWindow,
};
pub use simmatrix::{
    build_matrix, coin_similarity, max_prior_similarity, repo_similarity, similarity_histogram,
    MaxPrior, SimilarityMatrix,
};
pub use tiling::{rkr_gst, tiling_oracle, Tile, TilingResult};
