use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::warn;

use coinlineage_core::corpus::{load_snapshot, CoinMeta, CorpusManifest, FilterConfig};
use coinlineage_core::forkgraph::{self, GithubClient};
use coinlineage_core::matcher::{match_pedigrees, write_matches_csv};
use coinlineage_core::pedigree::{build_forest, family_sizes, forest_to_dot, PedigreeForest};
use coinlineage_core::prospects::{
    family_cohorts, partition_by_code_link, partition_by_similarity, prospect_report,
    write_prospects_csv, Cohort, MarketSeries, ProspectWindow, HALF_YEAR_DAYS, WHOLE_YEAR_DAYS,
};
use coinlineage_core::simmatrix::{
    build_matrix, similarity_histogram, write_histogram_csv, write_max_prior_csv, SimilarityMatrix,
};
use coinlineage_core::RunConfig;

#[derive(Parser)]
#[command(
    name = "coinlineage",
    version,
    about = "Clone similarity, family pedigrees and market prospects of cryptocurrency code"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the similarity matrix (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Minimum tile length in characters.
    #[arg(long, global = true)]
    min_match: Option<usize>,
    #[arg(long, global = true)]
    theta_s: Option<f64>,
    #[arg(long, global = true)]
    theta_t_days: Option<i64>,
    /// Similarity separating the high and low similarity cohorts.
    #[arg(long, global = true)]
    sim_threshold: Option<f64>,
    /// Days a market datum stays valid when deciding whether a coin is alive.
    #[arg(long, global = true)]
    lookback_days: Option<i64>,
}

impl GlobalArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            config
                .apply_file_text(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        if let Some(v) = self.workers {
            config.worker_count = v;
        }
        if let Some(v) = self.min_match {
            config.min_match_len = v;
        }
        if let Some(v) = self.theta_s {
            config.theta_s = v;
        }
        if let Some(v) = self.theta_t_days {
            config.theta_t_days = v;
        }
        if let Some(v) = self.sim_threshold {
            config.sim_class_threshold = v;
        }
        if let Some(v) = self.lookback_days {
            config.alive_lookback_days = v;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a snapshot directory and write its index manifest.
    Ingest {
        snapshot_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the coin similarity matrix and best-prior similarities.
    Similarity {
        snapshot_dir: PathBuf,
        #[arg(long)]
        out_sim: PathBuf,
        #[arg(long)]
        out_maxprior: PathBuf,
        /// Also write best-prior similarity bucket counts.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        bucket_width: f64,
    },
    /// Build family pedigrees from a similarity matrix.
    Pedigree {
        #[arg(long)]
        sim: PathBuf,
        /// Ingest manifest, or a snapshot directory.
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        out_json: PathBuf,
        #[arg(long)]
        out_dot: PathBuf,
        /// Optional per-family size and first-release table.
        #[arg(long)]
        families_csv: Option<PathBuf>,
    },
    /// Match the pedigrees of an earlier snapshot to a later one.
    Match {
        #[arg(long)]
        fp1: PathBuf,
        #[arg(long)]
        fp2: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Number and market-cap change ratios of cohorts.
    Prospects {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        t0: NaiveDate,
        /// Horizon in days; repeatable. Defaults to 182 and 365.
        #[arg(long = "horizon-days")]
        horizons: Vec<i64>,
        /// Explicit end date; repeatable.
        #[arg(long = "end")]
        ends: Vec<NaiveDate>,
        /// Adds with_code / without_code cohorts.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Adds high / low similarity cohorts.
        #[arg(long)]
        sim: Option<PathBuf>,
        /// Adds one cohort per family plus `single`.
        #[arg(long)]
        forest: Option<PathBuf>,
        /// JSON object mapping cohort label to member coin ids.
        #[arg(long)]
        cohorts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fork leaderboard (and optionally language/period counts) from repository metadata.
    Forkstats {
        meta_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        language_out: Option<PathBuf>,
        /// Comma separated period edges, e.g. 2017-11-30,2018-06-01.
        #[arg(long, value_delimiter = ',')]
        period_edges: Vec<NaiveDate>,
    },
    /// Download repository metadata into a directory for offline use.
    Fetch {
        #[arg(long, default_value = forkgraph::GITHUB_API)]
        endpoint: String,
        #[arg(long, env = "GITHUB_TOKEN", hide_env_values = true)]
        token: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
        /// owner/repo names.
        #[arg(required = true)]
        repos: Vec<String>,
    },
}

fn write_output(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_matrix(path: &Path) -> Result<SimilarityMatrix> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    SimilarityMatrix::read_csv(BufReader::new(file))
        .with_context(|| format!("parsing {}", path.display()))
}

fn read_forest(path: &Path) -> Result<PedigreeForest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PedigreeForest::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_manifest(path: &Path) -> Result<CorpusManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Coin metadata from an ingest manifest or straight from a snapshot directory.
fn read_metas(path: &Path) -> Result<Vec<CoinMeta>> {
    if path.is_dir() {
        let load = load_snapshot(path, &FilterConfig::default())?;
        Ok(load.snapshot.metas())
    } else {
        Ok(read_manifest(path)?.metas())
    }
}

fn cmd_ingest(snapshot_dir: &Path, out: &Path) -> Result<()> {
    let load = load_snapshot(snapshot_dir, &FilterConfig::default())?;
    for w in &load.warnings {
        warn!("{}: {}", w.coin_dir, w.message);
    }
    if load.snapshot.coins.is_empty() {
        bail!(
            "empty corpus: no coin could be loaded from {}",
            snapshot_dir.display()
        );
    }
    let manifest = CorpusManifest::new(&load.snapshot, &load.warnings);
    write_output(out, manifest.to_json_string())?;
    eprintln!(
        "ingested {} coins ({} warnings)",
        manifest.coins.len(),
        manifest.warnings.len()
    );
    Ok(())
}

fn cmd_similarity(
    config: &RunConfig,
    snapshot_dir: &Path,
    out_sim: &Path,
    out_maxprior: &Path,
    histogram: Option<&Path>,
    bucket_width: f64,
) -> Result<()> {
    let load = load_snapshot(snapshot_dir, &FilterConfig::default())?;
    for w in &load.warnings {
        warn!("{}: {}", w.coin_dir, w.message);
    }
    if load.snapshot.coins.is_empty() {
        bail!(
            "empty corpus: no coin could be loaded from {}",
            snapshot_dir.display()
        );
    }
    let matrix = build_matrix(&load.snapshot, config.min_match_len, config.worker_count)?;
    write_output(out_sim, matrix.to_csv_string())?;
    write_output(
        out_maxprior,
        csv_bytes(|b| write_max_prior_csv(&matrix, b))?,
    )?;
    if let Some(path) = histogram {
        let buckets = similarity_histogram(&matrix, bucket_width)?;
        write_output(path, csv_bytes(|b| write_histogram_csv(&buckets, b))?)?;
    }
    Ok(())
}

fn cmd_pedigree(
    config: &RunConfig,
    sim: &Path,
    meta: &Path,
    out_json: &Path,
    out_dot: &Path,
    families_csv: Option<&Path>,
) -> Result<()> {
    let matrix = read_matrix(sim)?;
    let metas = read_metas(meta)?;
    let forest = build_forest(&matrix, &metas, config.pedigree())?;
    write_output(out_json, forest.to_json_string())?;
    write_output(out_dot, forest_to_dot(&forest))?;
    if let Some(path) = families_csv {
        let mut text = String::from("representative,member_count,first_release\n");
        for (rep, count) in family_sizes(&forest) {
            let date = forest
                .node(&rep)
                .map(|n| n.release_time.to_string())
                .unwrap_or_default();
            text.push_str(&format!("{rep},{count},{date}\n"));
        }
        write_output(path, text)?;
    }
    eprintln!(
        "{} coins in {} families",
        forest.nodes.len(),
        forest.families.len()
    );
    Ok(())
}

fn cmd_match(fp1: &Path, fp2: &Path, out: &Path) -> Result<()> {
    let report = match_pedigrees(&read_forest(fp1)?, &read_forest(fp2)?);
    write_output(out, csv_bytes(|b| write_matches_csv(&report, b))?)
}

struct ProspectInputs<'a> {
    market: &'a Path,
    t0: NaiveDate,
    horizons: &'a [i64],
    ends: &'a [NaiveDate],
    manifest: Option<&'a Path>,
    sim: Option<&'a Path>,
    forest: Option<&'a Path>,
    cohorts: Option<&'a Path>,
    out: &'a Path,
}

fn cmd_prospects(config: &RunConfig, inputs: ProspectInputs<'_>) -> Result<()> {
    let text = fs::read_to_string(inputs.market)
        .with_context(|| format!("reading {}", inputs.market.display()))?;
    let series = MarketSeries::from_json_str(&text)
        .with_context(|| format!("parsing {}", inputs.market.display()))?;

    // (cohort, skip when its ratio is undefined)
    let mut cohorts: Vec<(Cohort, bool)> = Vec::new();
    if let Some(path) = inputs.manifest {
        let (with, without) = partition_by_code_link(&read_manifest(path)?.metas());
        cohorts.push((with, false));
        cohorts.push((without, false));
    }
    if let Some(path) = inputs.sim {
        let (high, low) = partition_by_similarity(&read_matrix(path)?, config.sim_class_threshold);
        cohorts.push((high, false));
        cohorts.push((low, false));
    }
    if let Some(path) = inputs.forest {
        // a family that is already gone at t0 has no ratio
        cohorts.extend(
            family_cohorts(&read_forest(path)?)
                .into_iter()
                .map(|c| (c, true)),
        );
    }
    if let Some(path) = inputs.cohorts {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let listed: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cohorts.extend(
            listed
                .into_iter()
                .map(|(label, members)| (Cohort::listed(label, members), false)),
        );
    }
    if cohorts.is_empty() {
        bail!("no cohorts: pass at least one of --manifest, --sim, --forest, --cohorts");
    }

    let mut windows: Vec<ProspectWindow> = inputs
        .horizons
        .iter()
        .map(|&h| ProspectWindow::new(inputs.t0, h))
        .chain(
            inputs
                .ends
                .iter()
                .map(|&e| ProspectWindow::until(inputs.t0, e)),
        )
        .collect();
    if windows.is_empty() {
        windows = vec![
            ProspectWindow::new(inputs.t0, HALF_YEAR_DAYS),
            ProspectWindow::new(inputs.t0, WHOLE_YEAR_DAYS),
        ];
    }
    for w in &mut windows {
        w.lookback_days = config.alive_lookback_days;
        if w.horizon_days < 0 {
            bail!("end date before t0");
        }
    }

    let mut reports = Vec::new();
    for (cohort, skippable) in &cohorts {
        for &window in &windows {
            match prospect_report(cohort, &series, window) {
                Ok(r) => reports.push(r),
                Err(e) if *skippable => warn!("skipping family cohort {}: {e}", cohort.label),
                Err(e) => return Err(e.into()),
            }
        }
    }
    write_output(inputs.out, csv_bytes(|b| write_prospects_csv(&reports, b))?)
}

fn cmd_forkstats(
    meta_dir: &Path,
    out: &Path,
    language_out: Option<&Path>,
    edges: &[NaiveDate],
) -> Result<()> {
    let load = forkgraph::load_repo_meta(meta_dir)?;
    for w in &load.warnings {
        warn!("{w}");
    }
    let stats = forkgraph::fork_stats(&load.metas);
    write_output(
        out,
        csv_bytes(|b| forkgraph::write_leaderboard_csv(&stats, b))?,
    )?;
    if let Some(path) = language_out {
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            bail!("--period-edges must be strictly increasing");
        }
        let rows = forkgraph::language_time_stats(&load.metas, edges);
        write_output(
            path,
            csv_bytes(|b| forkgraph::write_language_stats_csv(&rows, b))?,
        )?;
    }
    Ok(())
}

fn cmd_fetch(
    endpoint: &str,
    token: Option<String>,
    out_dir: &Path,
    repos: &[String],
) -> Result<()> {
    let mut client = GithubClient::new(endpoint, token);
    for name in repos {
        let meta = client
            .fetch_and_persist(name, out_dir)
            .with_context(|| format!("fetching {name}"))?;
        eprintln!("fetched {}", meta.full_name);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.global.resolve()?;
    match &cli.command {
        Command::Ingest { snapshot_dir, out } => cmd_ingest(snapshot_dir, out),
        Command::Similarity {
            snapshot_dir,
            out_sim,
            out_maxprior,
            histogram,
            bucket_width,
        } => cmd_similarity(
            &config,
            snapshot_dir,
            out_sim,
            out_maxprior,
            histogram.as_deref(),
            *bucket_width,
        ),
        Command::Pedigree {
            sim,
            meta,
            out_json,
            out_dot,
            families_csv,
        } => cmd_pedigree(
            &config,
            sim,
            meta,
            out_json,
            out_dot,
            families_csv.as_deref(),
        ),
        Command::Match { fp1, fp2, out } => cmd_match(fp1, fp2, out),
        Command::Prospects {
            market,
            t0,
            horizons,
            ends,
            manifest,
            sim,
            forest,
            cohorts,
            out,
        } => cmd_prospects(
            &config,
            ProspectInputs {
                market,
                t0: *t0,
                horizons,
                ends,
                manifest: manifest.as_deref(),
                sim: sim.as_deref(),
                forest: forest.as_deref(),
                cohorts: cohorts.as_deref(),
                out,
            },
        ),
        Command::Forkstats {
            meta_dir,
            out,
            language_out,
            period_edges,
        } => cmd_forkstats(meta_dir, out, language_out.as_deref(), period_edges),
        Command::Fetch {
            endpoint,
            token,
            out_dir,
            repos,
        } => cmd_fetch(endpoint, token.clone(), out_dir, repos),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
