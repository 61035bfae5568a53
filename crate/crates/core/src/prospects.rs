//! Market prospects of coin cohorts: survival-count ratio (NCR) and
//! market-cap ratio (MCCR) between a start date and a later date.

use std::collections::BTreeMap;
use std::io::{self, Write};

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CoinMeta;
use crate::pedigree::PedigreeForest;
use crate::simmatrix::SimilarityMatrix;

#[derive(Debug, Error)]
pub enum ProspectError {
    #[error("cohort {cohort:?}: {what} at {date} is zero")]
    ZeroDenominator {
        cohort: String,
        what: &'static str,
        date: NaiveDate,
    },
    #[error("market series for {coin:?}: {reason}")]
    InvalidSeries { coin: String, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const DEFAULT_LOOKBACK_DAYS: i64 = 14;
pub const HALF_YEAR_DAYS: i64 = 182;
pub const WHOLE_YEAR_DAYS: i64 = 365;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketPoint {
    pub date: NaiveDate,
    pub close_price_usd: f64,
    pub market_cap_usd: f64,
}

/// Per-coin daily market data, dates strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarketSeries {
    series: BTreeMap<String, Vec<MarketPoint>>,
}

impl MarketSeries {
    pub fn new(series: BTreeMap<String, Vec<MarketPoint>>) -> Result<Self, ProspectError> {
        for (coin, points) in &series {
            let invalid = |reason: &str| ProspectError::InvalidSeries {
                coin: coin.clone(),
                reason: reason.to_string(),
            };
            if points.windows(2).any(|w| w[0].date >= w[1].date) {
                return Err(invalid("dates must be strictly increasing"));
            }
            if points
                .iter()
                .any(|p| !(p.market_cap_usd.ge(&0.0) && p.close_price_usd.ge(&0.0)))
            {
                return Err(invalid("negative or NaN value"));
            }
        }
        Ok(MarketSeries { series })
    }

    /// Parses `market.json`: `{coin_id: [{date, close_price_usd, market_cap_usd}, ...]}`.
    pub fn from_json_str(text: &str) -> Result<Self, ProspectError> {
        let raw: BTreeMap<String, Vec<MarketPoint>> = serde_json::from_str(text)?;
        MarketSeries::new(raw)
    }

    pub fn coins(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// Latest point in `[date - lookback_days, date]`.
    pub fn latest_point(
        &self,
        coin: &str,
        date: NaiveDate,
        lookback_days: i64,
    ) -> Option<&MarketPoint> {
        let points = self.series.get(coin)?;
        let idx = points.partition_point(|p| p.date <= date);
        let point = points.get(idx.checked_sub(1)?)?;
        (date - point.date <= Duration::days(lookback_days)).then_some(point)
    }

    /// Market cap counted for the coin on `date`; 0 when not alive.
    pub fn cap_at(&self, coin: &str, date: NaiveDate, lookback_days: i64) -> f64 {
        self.latest_point(coin, date, lookback_days)
            .map_or(0.0, |p| p.market_cap_usd)
    }
}

/// A coin is alive when its latest point within the lookback window has a positive cap.
pub fn alive_at(series: &MarketSeries, coin: &str, date: NaiveDate, lookback_days: i64) -> bool {
    series
        .latest_point(coin, date, lookback_days)
        .is_some_and(|p| p.market_cap_usd > 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CohortDefinition {
    WithCode,
    WithoutCode,
    SimAtLeast(f64),
    SimBelow(f64),
    Family(String),
    /// Explicit member list, e.g. from a cohort file or the aggregate of singleton families.
    Listed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub label: String,
    pub members: Vec<String>,
    pub definition: CohortDefinition,
}

impl Cohort {
    pub fn listed(label: impl Into<String>, members: Vec<String>) -> Self {
        Cohort {
            label: label.into(),
            members,
            definition: CohortDefinition::Listed,
        }
    }
}

/// Splits coins by whether their listing links to source code.
pub fn partition_by_code_link(metas: &[CoinMeta]) -> (Cohort, Cohort) {
    let (with, without): (Vec<_>, Vec<_>) = metas.iter().partition(|m| m.has_code_link);
    let ids = |v: Vec<&CoinMeta>| v.into_iter().map(|m| m.coin_id.clone()).collect();
    (
        Cohort {
            label: "with_code".into(),
            members: ids(with),
            definition: CohortDefinition::WithCode,
        },
        Cohort {
            label: "without_code".into(),
            members: ids(without),
            definition: CohortDefinition::WithoutCode,
        },
    )
}

/// High cohort: best similarity with an earlier coin `>= threshold`. Everything
/// else with code is low, including the first coin. Code-less coins are in neither.
pub fn partition_by_similarity(matrix: &SimilarityMatrix, threshold: f64) -> (Cohort, Cohort) {
    let mut high = Vec::new();
    let mut low = Vec::new();
    for (i, prior) in matrix.max_priors().into_iter().enumerate() {
        if matrix.is_code_less(i) {
            continue;
        }
        let id = matrix.coin_ids[i].clone();
        match prior {
            Some(p) if p.best_value >= threshold => high.push(id),
            _ => low.push(id),
        }
    }
    (
        Cohort {
            label: format!("sim>={threshold:.2}"),
            members: high,
            definition: CohortDefinition::SimAtLeast(threshold),
        },
        Cohort {
            label: format!("sim<{threshold:.2}"),
            members: low,
            definition: CohortDefinition::SimBelow(threshold),
        },
    )
}

/// One cohort per multi-member family, labeled by its earliest member, plus
/// a `single` cohort gathering all one-coin families.
pub fn family_cohorts(forest: &PedigreeForest) -> Vec<Cohort> {
    let mut cohorts = Vec::new();
    let mut singles = Vec::new();
    for family in &forest.families {
        if family.members.len() == 1 {
            singles.push(family.representative.clone());
        } else {
            cohorts.push(Cohort {
                label: family.representative.clone(),
                members: family.members.clone(),
                definition: CohortDefinition::Family(family.representative.clone()),
            });
        }
    }
    if !singles.is_empty() {
        cohorts.push(Cohort::listed("single", singles));
    }
    cohorts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProspectWindow {
    pub t0: NaiveDate,
    pub horizon_days: i64,
    pub lookback_days: i64,
}

impl ProspectWindow {
    pub fn new(t0: NaiveDate, horizon_days: i64) -> Self {
        ProspectWindow {
            t0,
            horizon_days,
            lookback_days: DEFAULT_LOOKBACK_DAYS,
        }
    }

    /// Window ending on a calendar date rather than after a day count.
    pub fn until(t0: NaiveDate, end: NaiveDate) -> Self {
        ProspectWindow::new(t0, (end - t0).num_days())
    }

    pub fn t1(&self) -> NaiveDate {
        self.t0 + Duration::days(self.horizon_days)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProspectReport {
    pub cohort: String,
    pub t0: NaiveDate,
    pub horizon_days: i64,
    pub number_t0: usize,
    pub number_t1: usize,
    pub ncr: f64,
    pub marketcap_t0: f64,
    pub marketcap_t1: f64,
    pub mccr: f64,
}

fn count_alive(
    cohort: &Cohort,
    series: &MarketSeries,
    date: NaiveDate,
    lookback_days: i64,
) -> usize {
    cohort
        .members
        .iter()
        .filter(|c| alive_at(series, c, date, lookback_days))
        .count()
}

fn total_cap(cohort: &Cohort, series: &MarketSeries, date: NaiveDate, lookback_days: i64) -> f64 {
    cohort
        .members
        .iter()
        .map(|c| series.cap_at(c, date, lookback_days))
        .sum()
}

/// `Number(t0 + T) / Number(t0)`.
pub fn ncr(
    cohort: &Cohort,
    series: &MarketSeries,
    window: ProspectWindow,
) -> Result<f64, ProspectError> {
    let before = count_alive(cohort, series, window.t0, window.lookback_days);
    if before == 0 {
        return Err(ProspectError::ZeroDenominator {
            cohort: cohort.label.clone(),
            what: "number of live coins",
            date: window.t0,
        });
    }
    let after = count_alive(cohort, series, window.t1(), window.lookback_days);
    Ok(after as f64 / before as f64)
}

/// `MarketCap(t0 + T) / MarketCap(t0)`, dead or missing coins contributing 0.
pub fn mccr(
    cohort: &Cohort,
    series: &MarketSeries,
    window: ProspectWindow,
) -> Result<f64, ProspectError> {
    let before = total_cap(cohort, series, window.t0, window.lookback_days);
    if before <= 0.0 {
        return Err(ProspectError::ZeroDenominator {
            cohort: cohort.label.clone(),
            what: "market cap",
            date: window.t0,
        });
    }
    Ok(total_cap(cohort, series, window.t1(), window.lookback_days) / before)
}

pub fn prospect_report(
    cohort: &Cohort,
    series: &MarketSeries,
    window: ProspectWindow,
) -> Result<ProspectReport, ProspectError> {
    let t1 = window.t1();
    Ok(ProspectReport {
        cohort: cohort.label.clone(),
        t0: window.t0,
        horizon_days: window.horizon_days,
        number_t0: count_alive(cohort, series, window.t0, window.lookback_days),
        number_t1: count_alive(cohort, series, t1, window.lookback_days),
        ncr: ncr(cohort, series, window)?,
        marketcap_t0: total_cap(cohort, series, window.t0, window.lookback_days),
        marketcap_t1: total_cap(cohort, series, t1, window.lookback_days),
        mccr: mccr(cohort, series, window)?,
    })
}

/// Reports for every family cohort (see [`family_cohorts`]). Families with no
/// live member or no market cap at `t0` have no defined ratio and are skipped.
pub fn family_prospects(
    forest: &PedigreeForest,
    series: &MarketSeries,
    window: ProspectWindow,
) -> Vec<ProspectReport> {
    family_cohorts(forest)
        .iter()
        .filter_map(|c| prospect_report(c, series, window).ok())
        .collect()
}

pub const PROSPECTS_HEADER: &str =
    "cohort,t0,horizon_days,number_t0,number_t1,ncr,cap_t0,cap_t1,mccr";

pub fn write_prospects_csv<W: Write>(reports: &[ProspectReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{PROSPECTS_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:e},{:e},{:.6}",
            r.cohort,
            r.t0,
            r.horizon_days,
            r.number_t0,
            r.number_t1,
            r.ncr,
            r.marketcap_t0,
            r.marketcap_t1,
            r.mccr
        )?;
    }
    Ok(())
}
