//! Matching the family pedigrees of an earlier snapshot to a later one by shared members.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::pedigree::PedigreeForest;

/// A later-snapshot tree restricted to coins that also exist in the earlier snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrunedTree {
    pub representative: String,
    pub members: Vec<String>,
    /// True when no member survived pruning.
    pub emptied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeMatch {
    pub fp1_representative: String,
    pub fp2_representative: String,
    pub shared_coins: BTreeSet<String>,
    pub shared_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matches: Vec<TreeMatch>,
    /// Representatives of later trees that share nothing with the earlier forest.
    pub unmatched_fp2: Vec<String>,
}

pub fn prune(fp1: &PedigreeForest, fp2: &PedigreeForest) -> Vec<PrunedTree> {
    let known: HashSet<&str> = fp1.nodes.iter().map(|n| n.coin_id.as_str()).collect();
    fp2.families
        .iter()
        .map(|f| {
            let members: Vec<String> = f
                .members
                .iter()
                .filter(|m| known.contains(m.as_str()))
                .cloned()
                .collect();
            PrunedTree {
                representative: f.representative.clone(),
                emptied: members.is_empty(),
                members,
            }
        })
        .collect()
}

/// Each later tree goes to the earlier tree it shares most coins with.
///
/// Ties prefer the earlier tree whose first member was released first, then
/// the smaller representative id. Several later trees may land on the same
/// earlier tree, which is how family splits show up.
pub fn match_pedigrees(fp1: &PedigreeForest, fp2: &PedigreeForest) -> MatchReport {
    let family_index: HashMap<&str, usize> = fp1
        .families
        .iter()
        .enumerate()
        .flat_map(|(k, f)| f.members.iter().map(move |m| (m.as_str(), k)))
        .collect();
    let first_release = |k: usize| {
        let rep = &fp1.families[k].representative;
        (fp1.node(rep).map(|n| n.release_time), rep.clone())
    };

    let mut report = MatchReport::default();
    for tree in prune(fp1, fp2) {
        if tree.emptied {
            report.unmatched_fp2.push(tree.representative);
            continue;
        }
        let mut shared: HashMap<usize, BTreeSet<String>> = HashMap::new();
        for m in &tree.members {
            shared
                .entry(family_index[m.as_str()])
                .or_default()
                .insert(m.clone());
        }
        let (best, coins) = shared
            .into_iter()
            .min_by(|(ka, sa), (kb, sb)| {
                sb.len()
                    .cmp(&sa.len())
                    .then_with(|| first_release(*ka).cmp(&first_release(*kb)))
            })
            .expect("pruned tree is non-empty");
        report.matches.push(TreeMatch {
            fp1_representative: fp1.families[best].representative.clone(),
            fp2_representative: tree.representative,
            shared_count: coins.len(),
            shared_coins: coins,
        });
    }
    report
}

/// `fp1_rep,fp2_rep,shared_count,shared_coins`; unmatched later trees follow with empty fp1_rep.
pub fn write_matches_csv<W: Write>(report: &MatchReport, mut out: W) -> io::Result<()> {
    writeln!(out, "fp1_rep,fp2_rep,shared_count,shared_coins")?;
    for m in &report.matches {
        let coins: Vec<&str> = m.shared_coins.iter().map(String::as_str).collect();
        writeln!(
            out,
            "{},{},{},{}",
            m.fp1_representative,
            m.fp2_representative,
            m.shared_count,
            coins.join(";")
        )?;
    }
    for rep in &report.unmatched_fp2 {
        writeln!(out, ",{rep},0,")?;
    }
    Ok(())
}
