//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{rngs::StdRng, seq::SliceRandom, Rng, SeedableRng};

use coinlineage_core::corpus::{CoinMeta, CorpusSnapshot, RepoDocument};
use coinlineage_core::forkgraph::{fork_stats, load_repo_meta, parse_repo_meta};
use coinlineage_core::matcher::{match_pedigrees, prune};
use coinlineage_core::pedigree::{
    build_forest, forest_to_dot, PedigreeConfig, PedigreeForest, PedigreeNode, Relation,
};
use coinlineage_core::prospects::{mccr, ncr, Cohort, MarketPoint, MarketSeries, ProspectWindow};
use coinlineage_core::simmatrix::{build_matrix, repo_similarity, SimilarityMatrix};
use coinlineage_core::tiling::{rkr_gst, tiling_oracle, tiling_oracle_files};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+));
        }
    }};
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

fn meta(id: &str, day: i64) -> CoinMeta {
    CoinMeta {
        coin_id: id.into(),
        display_name: id.into(),
        release_time: date("2014-01-01") + chrono::Duration::days(day),
        has_code_link: true,
        repo_names: vec!["r".into()],
    }
}

fn ac1_tiling_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..500 {
        let text = |rng: &mut StdRng| -> String {
            let n = rng.gen_range(0..=60);
            (0..n)
                .map(|_| *b"abcd".choose(rng).unwrap() as char)
                .collect()
        };
        let a = text(&mut rng);
        let b = text(&mut rng);
        let fast = rkr_gst(
            &RepoDocument::from_text("x", "r", &a),
            &RepoDocument::from_text("y", "r", &b),
            4,
        );
        if fast != tiling_oracle(&a, &b, 4) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(
        mismatches == 0,
        "{mismatches} of 500 pairs differ from the oracle"
    );
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("500 pairs, 0 mismatches, {elapsed:.2?}"))
}

fn ac2_similarity_properties() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let random_doc = |rng: &mut StdRng, id: &str| -> (RepoDocument, Vec<String>) {
        let files: Vec<String> = (0..rng.gen_range(1..4))
            .map(|_| {
                let n = rng.gen_range(1..80);
                (0..n)
                    .map(|_| *b"abc".choose(rng).unwrap() as char)
                    .collect()
            })
            .collect();
        let doc = RepoDocument::new(
            id,
            "r",
            files
                .iter()
                .enumerate()
                .map(|(k, t)| (format!("f{k}.c"), t.clone())),
        );
        (doc, files)
    };
    for case in 0..200 {
        let (da, fa) = random_doc(&mut rng, "a");
        let (db, fb) = random_doc(&mut rng, "b");
        let min = rng.gen_range(2..10);
        let s = repo_similarity(&da, &db, min);
        ensure!(
            (0.0..=1.0).contains(&s),
            "case {case}: sim {s} out of range"
        );
        // independent value from the exhaustive tiler
        let ra: Vec<&str> = fa.iter().map(String::as_str).collect();
        let rb: Vec<&str> = fb.iter().map(String::as_str).collect();
        let oracle = tiling_oracle_files(&ra, &rb, min).matched_chars as f64 * 2.0
            / (da.total_chars + db.total_chars) as f64;
        ensure!(
            (s - oracle).abs() < 1e-12,
            "case {case}: sim {s} vs oracle {oracle}"
        );
        let self_sim = repo_similarity(&da, &da, min);
        let all_long = fa.iter().all(|f| f.chars().count() >= min);
        ensure!(
            (self_sim == 1.0) == all_long,
            "case {case}: sim(A,A) = {self_sim}, all files long: {all_long}"
        );
        for larger in min + 1..min + 4 {
            ensure!(
                repo_similarity(&da, &db, larger) <= s,
                "case {case}: not monotone at min {larger}"
            );
        }
        let snapshot = CorpusSnapshot::from_coins(
            "p",
            date("2018-03-28"),
            vec![
                (meta("a", 0), vec![da.clone()]),
                (meta("b", 1), vec![db.clone()]),
            ],
        );
        let m = build_matrix(&snapshot, min, 1).map_err(|e| e.to_string())?;
        ensure!(
            m.get(0, 1) == m.get(1, 0),
            "case {case}: matrix not symmetric"
        );
    }
    Ok("200 pairs: bounds, oracle value, self-similarity, symmetry, monotonicity".into())
}

fn forest_fixture(
    days: &[(&str, i64)],
    sims: &[(&str, &str, f64)],
) -> (SimilarityMatrix, Vec<CoinMeta>) {
    let ids: Vec<String> = days.iter().map(|(id, _)| id.to_string()).collect();
    let n = ids.len();
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let pos = |id: &str| ids.iter().position(|x| x == id).unwrap();
    for (a, b, v) in sims {
        values[pos(a)][pos(b)] = *v;
        values[pos(b)][pos(a)] = *v;
    }
    let metas = days.iter().map(|(id, d)| meta(id, *d)).collect();
    (SimilarityMatrix::from_values("g", ids, values, 30), metas)
}

fn relations(forest: &PedigreeForest) -> Vec<String> {
    forest
        .nodes
        .iter()
        .map(|n| match &n.relation {
            Relation::Root => format!("{}:root", n.coin_id),
            Relation::FatherIs(j) => format!("{}:father:{j}", n.coin_id),
            Relation::BrotherIs(j) => format!("{}:brother:{j}", n.coin_id),
        })
        .collect()
}

fn families(forest: &PedigreeForest) -> Vec<String> {
    forest
        .families
        .iter()
        .map(|f| f.members.join("+"))
        .collect()
}

fn ac3_pedigree_goldens() -> Outcome {
    let cfg = PedigreeConfig::default();
    type Golden<'a> = (
        &'a [(&'a str, i64)],
        &'a [(&'a str, &'a str, f64)],
        &'a [&'a str],
        &'a [&'a str],
    );
    let goldens: [(&str, Golden); 3] = [
        (
            "hand trace",
            (
                &[("coin1", 0), ("coin2", 30), ("coin3", 180)],
                &[
                    ("coin1", "coin2", 0.9),
                    ("coin1", "coin3", 0.8),
                    ("coin2", "coin3", 0.6),
                ],
                &["coin1:root", "coin2:brother:coin1", "coin3:father:coin1"],
                &["coin1+coin2+coin3"],
            ),
        ),
        (
            "sub-threshold root",
            (
                &[("a", 0), ("b", 200), ("c", 250), ("d", 260), ("e", 600)],
                &[
                    ("a", "b", 0.5),
                    ("a", "c", 0.75),
                    ("b", "c", 0.72),
                    ("b", "d", 0.9),
                    ("c", "d", 0.3),
                    ("d", "e", 0.7),
                    ("a", "e", 0.69),
                ],
                &[
                    "a:root",
                    "b:root",
                    "c:father:a",
                    "d:brother:b",
                    "e:father:d",
                ],
                &["a+c", "b+d+e"],
            ),
        ),
        (
            "brother of root",
            (
                &[("r", 0), ("s", 10), ("t", 20), ("u", 200)],
                &[
                    ("r", "s", 0.8),
                    ("r", "t", 0.7),
                    ("s", "t", 0.9),
                    ("t", "u", 0.85),
                    ("r", "u", 0.85),
                ],
                &["r:root", "s:brother:r", "t:brother:s", "u:father:r"],
                &["r+s+t+u"],
            ),
        ),
    ];
    let mut rng = StdRng::seed_from_u64(3);
    for (name, (days, sims, want_rel, want_fam)) in goldens {
        let (matrix, metas) = forest_fixture(days, sims);
        let forest = build_forest(&matrix, &metas, cfg).map_err(|e| e.to_string())?;
        ensure!(
            relations(&forest) == want_rel,
            "{name}: relations {:?}",
            relations(&forest)
        );
        ensure!(
            families(&forest) == want_fam,
            "{name}: families {:?}",
            families(&forest)
        );
        let json = forest.to_json_string();
        let dot = forest_to_dot(&forest);
        for run in 0..10 {
            let mut order: Vec<usize> = (0..matrix.len()).collect();
            order.shuffle(&mut rng);
            let mut shuffled_metas = metas.clone();
            shuffled_metas.shuffle(&mut rng);
            let again = build_forest(&matrix.permuted(&order), &shuffled_metas, cfg)
                .map_err(|e| e.to_string())?;
            ensure!(
                again.to_json_string() == json,
                "{name}: shuffled run {run} differs"
            );
            ensure!(
                forest_to_dot(&again) == dot,
                "{name}: shuffled run {run} DOT differs"
            );
        }
    }
    // brother of a root has no parent of its own: both are tree roots
    let (matrix, metas) = forest_fixture(goldens[2].1 .0, goldens[2].1 .1);
    let forest = build_forest(&matrix, &metas, cfg).map_err(|e| e.to_string())?;
    ensure!(
        forest.tree_parent("s").is_none() && forest.tree_parent("t").is_none(),
        "co-roots have parents"
    );
    let (matrix, metas) = forest_fixture(goldens[0].1 .0, goldens[0].1 .1);
    let dot = forest_to_dot(&build_forest(&matrix, &metas, cfg).map_err(|e| e.to_string())?);
    ensure!(
        dot.matches("style=dashed").count() == 1 && dot.matches("style=solid").count() == 1,
        "hand trace DOT edges"
    );
    Ok("3 golden forests reproduced, 10 shuffled runs each identical".into())
}

fn star_forest(groups: &[(&str, i64, Vec<String>)]) -> PedigreeForest {
    let mut nodes = Vec::new();
    for (root, day, members) in groups {
        nodes.push(PedigreeNode {
            coin_id: root.to_string(),
            display_name: root.to_string(),
            release_time: date("2013-01-01") + chrono::Duration::days(*day),
            relation: Relation::Root,
        });
        for (k, m) in members.iter().enumerate() {
            nodes.push(PedigreeNode {
                coin_id: m.clone(),
                display_name: m.clone(),
                release_time: date("2013-01-01") + chrono::Duration::days(*day + 1 + k as i64),
                relation: Relation::FatherIs(root.to_string()),
            });
        }
    }
    PedigreeForest::from_nodes(PedigreeConfig::default(), nodes).unwrap()
}

fn ac4_split_fixture() -> Outcome {
    let names = |prefix: &str, range: std::ops::Range<usize>| -> Vec<String> {
        range.map(|k| format!("{prefix}{k:03}")).collect()
    };
    // D1: Bitcoin family of 63 (bitcoin, terracoin, 61 others) and a Litecoin family of 10
    let mut btc1 = vec!["terracoin".to_string()];
    btc1.extend(names("b", 0..61));
    let fp1 = star_forest(&[("bitcoin", 0, btc1), ("litecoin", 100, names("l", 0..9))]);
    // D2: Bitcoin keeps 19 old members (20 with itself) and gains 20 new; Terracoin
    // takes 37 old members (38 with itself), 5 Litecoin members and 26 new coins
    let mut btc2 = names("b", 0..19);
    btc2.extend(names("n", 0..20));
    let mut terra2 = names("b", 19..56);
    terra2.extend(names("l", 0..5));
    terra2.extend(names("t", 0..26));
    let fp2 = star_forest(&[
        ("bitcoin", 0, btc2),
        ("terracoin", 1, terra2),
        ("fresh", 900, names("f", 0..3)),
    ]);

    let sizes: Vec<usize> = fp1.families.iter().map(|f| f.members.len()).collect();
    ensure!(sizes == [63, 10], "fp1 sizes {sizes:?}");
    let sizes: Vec<usize> = fp2.families.iter().map(|f| f.members.len()).collect();
    ensure!(sizes == [40, 69, 4], "fp2 sizes {sizes:?}");

    let report = match_pedigrees(&fp1, &fp2);
    let rows: Vec<(String, String, usize)> = report
        .matches
        .iter()
        .map(|m| {
            (
                m.fp1_representative.clone(),
                m.fp2_representative.clone(),
                m.shared_count,
            )
        })
        .collect();
    let want = vec![
        ("bitcoin".to_string(), "bitcoin".to_string(), 20),
        ("bitcoin".to_string(), "terracoin".to_string(), 38),
    ];
    ensure!(rows == want, "matches {rows:?}");
    ensure!(
        report.unmatched_fp2 == ["fresh"],
        "unmatched {:?}",
        report.unmatched_fp2
    );

    let mut rng = StdRng::seed_from_u64(4);
    for case in 0..200 {
        let forest = |rng: &mut StdRng| {
            let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for k in 0..40 {
                if rng.gen_bool(0.7) {
                    groups
                        .entry(rng.gen_range(0..6))
                        .or_default()
                        .push(format!("c{k:02}"));
                }
            }
            let groups: Vec<(&str, i64, Vec<String>)> = groups
                .into_values()
                .map(|mut g| {
                    let root = g.remove(0);
                    (Box::leak(root.into_boxed_str()) as &str, 0, g)
                })
                .collect();
            star_forest(&groups)
        };
        let f1 = forest(&mut rng);
        let f2 = forest(&mut rng);
        for (tree, family) in prune(&f1, &f2).iter().zip(&f2.families) {
            ensure!(
                tree.members
                    .iter()
                    .all(|m| family.members.contains(m) && f1.node(m).is_some()),
                "case {case}: pruned tree {} not a subset",
                tree.representative
            );
        }
    }
    Ok(
        "63 -> 40 (20 shared) + 69 (38 shared); prune subset holds on 200 random forest pairs"
            .into(),
    )
}

/// Cohort of `n0` coins with `n1`/`n2` alive at the two later dates and caps
/// summing to the given totals.
fn table_series(
    n0: usize,
    counts: [usize; 2],
    caps: [f64; 3],
    dates: [NaiveDate; 3],
) -> (MarketSeries, Cohort) {
    let mut map = BTreeMap::new();
    let alive = [n0, counts[0], counts[1]];
    for k in 0..n0 {
        let points: Vec<MarketPoint> = (0..3)
            .filter(|&p| k < alive[p])
            .map(|p| MarketPoint {
                date: dates[p],
                close_price_usd: 1.0,
                market_cap_usd: caps[p] / alive[p] as f64,
            })
            .collect();
        map.insert(format!("coin{k:04}"), points);
    }
    let members = map.keys().cloned().collect();
    (
        MarketSeries::new(map).unwrap(),
        Cohort::listed("t", members),
    )
}

fn ac5_ratios() -> Outcome {
    let d1 = [date("2018-03-28"), date("2018-09-28"), date("2019-03-28")];
    let d2 = [date("2018-09-28"), date("2019-03-28"), date("2019-09-28")];
    // (label, dates, n0, [n_ha, n_wa], caps, published [ncr_ha, mccr_ha, ncr_wa, mccr_wa])
    type Row<'a> = (
        &'a str,
        [NaiveDate; 3],
        usize,
        [usize; 2],
        [f64; 3],
        [f64; 4],
    );
    let rows: [Row; 6] = [
        (
            "D1 with code",
            d1,
            644,
            [514, 453],
            [2.26e11, 1.99e11, 1.20e11],
            [0.80, 0.88, 0.70, 0.53],
        ),
        (
            "D1 without code",
            d1,
            223,
            [143, 115],
            [5.02e8, 4.63e8, 2.66e8],
            [0.64, 0.92, 0.52, 0.53],
        ),
        (
            "D1 >=80%",
            d1,
            408,
            [313, 268],
            [1.04e10, 6.34e9, 5.24e9],
            [0.77, 0.61, 0.66, 0.50],
        ),
        (
            "D1 <80%",
            d1,
            60,
            [51, 46],
            [1.80e11, 1.67e11, 1.03e11],
            [0.85, 0.93, 0.77, 0.57],
        ),
        (
            "D2 with code",
            d2,
            676,
            [596, 566],
            [2.06e11, 1.26e11, 1.96e11],
            [0.88, 0.61, 0.84, 0.95],
        ),
        (
            "D2 without code",
            d2,
            151,
            [121, 108],
            [1.15e9, 5.89e8, 7.47e8],
            [0.80, 0.51, 0.72, 0.65],
        ),
    ];
    let mut detail = Vec::new();
    for (label, dates, n0, counts, caps, published) in rows {
        let (series, cohort) = table_series(n0, counts, caps, dates);
        let ha = ProspectWindow::until(dates[0], dates[1]);
        let wa = ProspectWindow::until(dates[0], dates[2]);
        let got = [
            ncr(&cohort, &series, ha).map_err(|e| e.to_string())?,
            mccr(&cohort, &series, ha).map_err(|e| e.to_string())?,
            ncr(&cohort, &series, wa).map_err(|e| e.to_string())?,
            mccr(&cohort, &series, wa).map_err(|e| e.to_string())?,
        ];
        for (g, p) in got.iter().zip(published) {
            ensure!((g - p).abs() <= 0.005, "{label}: {got:?} vs {published:?}");
        }
        if label == "D1 with code" {
            detail.push(format!(
                "with code {:.3}/{:.3} {:.3}/{:.3}",
                got[0], got[1], got[2], got[3]
            ));
        }
    }
    let dm = [date("2018-03-28"), date("2018-09-28"), date("2019-03-28")];
    let (series, cohort) = table_series(45, [41, 41], [1.44e8, 3.72e7, 3.72e7], dm);
    let w = ProspectWindow::until(dm[0], dm[1]);
    let n = ncr(&cohort, &series, w).map_err(|e| e.to_string())?;
    let m = mccr(&cohort, &series, w).map_err(|e| e.to_string())?;
    ensure!((n - 0.91).abs() <= 0.005, "Deutsche eMark ncr {n}");
    ensure!(
        (m - 3.72e7 / 1.44e8).abs() < 1e-9,
        "Deutsche eMark mccr {m}"
    );
    detail.push(format!("Deutsche eMark {n:.3}/{m:.3}"));
    Ok(detail.join("; "))
}

/// Code-like text: 10 families of 10 variants, each variant a mutated copy of its family base.
fn synthetic_corpus(repos: usize, bytes: usize) -> CorpusSnapshot {
    let mut rng = StdRng::seed_from_u64(6);
    let idents = [
        "value", "count", "block", "hash", "tx", "nonce", "height", "index", "buf", "peer",
    ];
    let line = |rng: &mut StdRng| -> String {
        let a = idents.choose(rng).unwrap();
        let b = idents.choose(rng).unwrap();
        match rng.gen_range(0..4) {
            0 => format!(
                "    {a}_{} = {b}_{} + {};\n",
                rng.gen_range(0..500),
                rng.gen_range(0..500),
                rng.gen_range(0..99999)
            ),
            1 => format!(
                "    if ({a}.size() > {}) {{ return {b}; }}\n",
                rng.gen_range(0..10000)
            ),
            2 => format!("static int {a}_{}(int {b}) {{\n", rng.gen_range(0..100000)),
            _ => format!("    // {a} {b} {}\n", rng.gen_range(0..1_000_000)),
        }
    };
    let text = |rng: &mut StdRng| {
        let mut s = String::new();
        while s.len() < bytes {
            s.push_str(&line(rng));
        }
        s.truncate(bytes);
        s
    };
    let families = repos.div_ceil(10);
    let bases: Vec<String> = (0..families).map(|_| text(&mut rng)).collect();
    let mut coins = Vec::new();
    for k in 0..repos {
        let base = &bases[k % families];
        let mut lines: Vec<String> = base.split_inclusive('\n').map(str::to_string).collect();
        let edits = rng.gen_range(0..lines.len() / 3);
        for _ in 0..edits {
            let at = rng.gen_range(0..lines.len());
            lines[at] = line(&mut rng);
        }
        let mut body: String = lines.concat();
        body.truncate(bytes);
        let id = format!("coin{k:03}");
        let half = body.len() / 2;
        let split = body[..half].rfind('\n').map_or(half, |p| p + 1);
        let doc = RepoDocument::new(
            id.as_str(),
            "r",
            vec![
                ("src/a.cpp".to_string(), body[..split].to_string()),
                ("src/b.cpp".to_string(), body[split..].to_string()),
            ],
        );
        coins.push((meta(&id, k as i64), vec![doc]));
    }
    CorpusSnapshot::from_coins("perf", date("2018-03-28"), coins)
}

fn ac6_performance() -> Outcome {
    let snapshot = synthetic_corpus(100, 50 * 1024);
    let mut reference: Option<String> = None;
    let mut times = Vec::new();
    for workers in [1, 4, 8] {
        let start = Instant::now();
        let m = build_matrix(&snapshot, 30, workers).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure!(
            elapsed < Duration::from_secs(300),
            "{workers} workers took {elapsed:?}"
        );
        times.push(format!("{workers}w {elapsed:.1?}"));
        let csv = m.to_csv_string();
        match &reference {
            None => {
                let spread = (0..m.len())
                    .flat_map(|i| (0..i).map(move |j| (i, j)))
                    .filter(|&(i, j)| m.get(i, j) > 0.5)
                    .count();
                ensure!(spread > 0, "synthetic corpus produced no similar pairs");
                reference = Some(csv);
            }
            Some(r) => ensure!(*r == csv, "{workers} workers produced a different matrix"),
        }
    }
    Ok(format!(
        "4950 pairs on {} available core(s): {}",
        thread::available_parallelism().map_or(1, |n| n.get()),
        times.join(", ")
    ))
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_coinlineage"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn run_pipeline(dir: &Path) -> Result<(), String> {
    let fx = fixtures();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let corpus = fx.join("mini_corpus").to_string_lossy().into_owned();
    let market = fx.join("market.json").to_string_lossy().into_owned();
    cli(&["ingest", &corpus, "--out", &p("manifest.json")])?;
    cli(&[
        "similarity",
        &corpus,
        "--out-sim",
        &p("sim.csv"),
        "--out-maxprior",
        &p("maxprior.csv"),
    ])?;
    cli(&[
        "pedigree",
        "--sim",
        &p("sim.csv"),
        "--meta",
        &p("manifest.json"),
        "--out-json",
        &p("forest.json"),
        "--out-dot",
        &p("forest.dot"),
    ])?;
    cli(&[
        "prospects",
        "--market",
        &market,
        "--t0",
        "2015-01-01",
        "--manifest",
        &p("manifest.json"),
        "--sim",
        &p("sim.csv"),
        "--forest",
        &p("forest.json"),
        "--out",
        &p("prospects.csv"),
    ])
}

fn ac7_end_to_end() -> Outcome {
    let golden = fixtures().join("golden");
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for run in &runs {
        run_pipeline(run.path())?;
    }
    let files = [
        "manifest.json",
        "sim.csv",
        "maxprior.csv",
        "forest.json",
        "forest.dot",
        "prospects.csv",
    ];
    for name in files {
        let want = fs::read(golden.join(name)).map_err(|e| format!("{name}: {e}"))?;
        for (k, run) in runs.iter().enumerate() {
            let got = fs::read(run.path().join(name)).map_err(|e| e.to_string())?;
            ensure!(got == want, "run {k}: {name} differs from golden");
        }
    }
    Ok(format!(
        "{} outputs byte-identical to goldens in 2 runs",
        files.len()
    ))
}

fn serve_once(body: Vec<u8>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        if let Some(Ok(mut stream)) = listener.incoming().next() {
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap_or(0) > 0 && line != "\r\n" {
                line.clear();
            }
            let head = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(&body);
        }
    });
    format!("http://{addr}")
}

fn ac8_forkgraph() -> Outcome {
    let forks = fixtures().join("forks");
    let load = load_repo_meta(&forks).map_err(|e| e.to_string())?;
    let stats = fork_stats(&load.metas);
    let a = stats.get("alpha/coin").ok_or("alpha/coin missing")?;
    ensure!(
        (a.direct_fork_count, a.source_count) == (1, 2),
        "alpha/coin {}/{}",
        a.direct_fork_count,
        a.source_count
    );

    let bytes = fs::read(forks.join("beta__coin.json")).map_err(|e| e.to_string())?;
    let endpoint = serve_once(bytes.clone());
    let out = tempfile::tempdir().unwrap();
    let out_dir = out.path().to_string_lossy().into_owned();
    cli(&[
        "fetch",
        "--endpoint",
        &endpoint,
        "--out-dir",
        &out_dir,
        "beta/coin",
    ])?;
    let stored = fs::read(out.path().join("beta__coin.json")).map_err(|e| e.to_string())?;
    ensure!(stored == bytes, "persisted body differs from served bytes");
    let offline = load_repo_meta(out.path()).map_err(|e| e.to_string())?;
    let direct = parse_repo_meta(&bytes).map_err(|e| e.to_string())?;
    ensure!(
        offline.metas == vec![direct],
        "fetched metadata differs from offline load"
    );
    Ok("alpha/coin 1/2; fetch round-trip identical".into())
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("AC1", ac1_tiling_oracle),
        ("AC2", ac2_similarity_properties),
        ("AC3", ac3_pedigree_goldens),
        ("AC4", ac4_split_fixture),
        ("AC5", ac5_ratios),
        ("AC6", ac6_performance),
        ("AC7", ac7_end_to_end),
        ("AC8", ac8_forkgraph),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("[PASS] {name} {detail}"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {name} {reason}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
