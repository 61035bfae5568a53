//! Temporal clustering of coins into family pedigrees.
//!
//! Coins are visited in release order. A coin whose best similarity with an
//! earlier coin stays below `theta_s` starts a new tree. Otherwise it attaches
//! to that most similar earlier coin, as a son when the release gap exceeds
//! `theta_t` and as a brother when it does not. Families are the connected
//! components of the father and brother edges.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CoinMeta;
use crate::simmatrix::SimilarityMatrix;

#[derive(Debug, Error)]
pub enum PedigreeError {
    #[error("matrix has {matrix} coins but {metas} metadata records were given")]
    SizeMismatch { matrix: usize, metas: usize },
    #[error("coin {0:?} appears in the matrix but has no metadata")]
    UnknownCoin(String),
    #[error("coin {0:?} has more than one metadata record")]
    DuplicateCoin(String),
    #[error("invalid pedigree config: {0}")]
    InvalidConfig(String),
    #[error("inconsistent forest: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedigreeConfig {
    /// Similarity needed to join an existing family.
    pub theta_s: f64,
    /// Release gaps above this many days make a father relation, otherwise a brother one.
    pub theta_t_days: i64,
}

impl Default for PedigreeConfig {
    fn default() -> Self {
        PedigreeConfig {
            theta_s: 0.70,
            theta_t_days: 90,
        }
    }
}

impl PedigreeConfig {
    /// `theta_s` above 1 is accepted and simply means no coin can join a family.
    pub fn validate(&self) -> Result<(), PedigreeError> {
        if self.theta_s.is_nan() || self.theta_s < 0.0 {
            return Err(PedigreeError::InvalidConfig(format!(
                "theta_s {} must be >= 0",
                self.theta_s
            )));
        }
        if self.theta_t_days < 0 {
            return Err(PedigreeError::InvalidConfig(format!(
                "theta_t_days {} must be >= 0",
                self.theta_t_days
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Relation {
    Root,
    FatherIs(String),
    BrotherIs(String),
}

impl Relation {
    pub fn related(&self) -> Option<&str> {
        match self {
            Relation::Root => None,
            Relation::FatherIs(c) | Relation::BrotherIs(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NodeRecord", into = "NodeRecord")]
pub struct PedigreeNode {
    pub coin_id: String,
    pub display_name: String,
    pub release_time: NaiveDate,
    pub relation: Relation,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    coin_id: String,
    display_name: String,
    release_time: NaiveDate,
    relation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    related_coin_id: Option<String>,
}

impl From<PedigreeNode> for NodeRecord {
    fn from(n: PedigreeNode) -> Self {
        let (relation, related_coin_id) = match n.relation {
            Relation::Root => ("root", None),
            Relation::FatherIs(c) => ("father", Some(c)),
            Relation::BrotherIs(c) => ("brother", Some(c)),
        };
        NodeRecord {
            coin_id: n.coin_id,
            display_name: n.display_name,
            release_time: n.release_time,
            relation: relation.to_string(),
            related_coin_id,
        }
    }
}

impl TryFrom<NodeRecord> for PedigreeNode {
    type Error = String;

    fn try_from(r: NodeRecord) -> Result<Self, Self::Error> {
        let relation = match (r.relation.as_str(), r.related_coin_id) {
            ("root", None) => Relation::Root,
            ("father", Some(c)) => Relation::FatherIs(c),
            ("brother", Some(c)) => Relation::BrotherIs(c),
            (other, related) => {
                return Err(format!(
                    "coin {}: bad relation {other:?} with related coin {related:?}",
                    r.coin_id
                ))
            }
        };
        Ok(PedigreeNode {
            coin_id: r.coin_id,
            display_name: r.display_name,
            release_time: r.release_time,
            relation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    /// Earliest-released member.
    pub representative: String,
    /// Chronological.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedigreeForest {
    pub config: PedigreeConfig,
    /// Chronological.
    pub nodes: Vec<PedigreeNode>,
    /// Ordered by the representative's position in `nodes`.
    pub families: Vec<Family>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // keep the smaller index as root so roots are the earliest member
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
    }
}

impl PedigreeForest {
    /// Assembles a forest from chronological nodes, deriving families from the edges.
    pub fn from_nodes(
        config: PedigreeConfig,
        mut nodes: Vec<PedigreeNode>,
    ) -> Result<Self, PedigreeError> {
        nodes.sort_by(|a, b| {
            a.release_time
                .cmp(&b.release_time)
                .then_with(|| a.coin_id.cmp(&b.coin_id))
        });
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.coin_id.clone(), i).is_some() {
                return Err(PedigreeError::DuplicateCoin(n.coin_id.clone()));
            }
        }
        let mut uf = UnionFind::new(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if let Some(other) = n.relation.related() {
                let j = *index.get(other).ok_or_else(|| {
                    PedigreeError::Inconsistent(format!("{} relates to unknown {other}", n.coin_id))
                })?;
                uf.union(i, j);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..nodes.len() {
            groups.entry(uf.find(i)).or_default().push(i);
        }
        let families = groups
            .into_values()
            .map(|members| Family {
                representative: nodes[members[0]].coin_id.clone(),
                members: members.iter().map(|&m| nodes[m].coin_id.clone()).collect(),
            })
            .collect();
        Ok(PedigreeForest {
            config,
            nodes,
            families,
        })
    }

    pub fn node(&self, coin_id: &str) -> Option<&PedigreeNode> {
        self.nodes.iter().find(|n| n.coin_id == coin_id)
    }

    pub fn family_of(&self, coin_id: &str) -> Option<&Family> {
        self.families
            .iter()
            .find(|f| f.members.iter().any(|m| m == coin_id))
    }

    /// Tree parent: the father, or for a brother the brother's own parent.
    /// Brothers of a root are co-roots and have no parent.
    pub fn tree_parent(&self, coin_id: &str) -> Option<&str> {
        let mut current = self.node(coin_id)?;
        loop {
            match &current.relation {
                Relation::Root => return None,
                Relation::FatherIs(f) => return Some(f),
                Relation::BrotherIs(b) => current = self.node(b)?,
            }
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("forest serializes");
        s.push('\n');
        s
    }

    /// Parses `forest.json` and checks that the families match the edges.
    pub fn from_json_str(text: &str) -> Result<Self, PedigreeError> {
        let parsed: PedigreeForest = serde_json::from_str(text)?;
        let rebuilt = PedigreeForest::from_nodes(parsed.config, parsed.nodes.clone())?;
        if rebuilt.nodes != parsed.nodes || rebuilt.families != parsed.families {
            return Err(PedigreeError::Inconsistent(
                "families or node order do not match the relations".into(),
            ));
        }
        Ok(parsed)
    }
}

/// Runs the temporal clustering pass over a similarity matrix.
///
/// The matrix may list coins in any order; it is re-sorted by
/// (release_time, coin_id) from `metas` before the pass.
pub fn build_forest(
    matrix: &SimilarityMatrix,
    metas: &[CoinMeta],
    config: PedigreeConfig,
) -> Result<PedigreeForest, PedigreeError> {
    config.validate()?;
    if matrix.len() != metas.len() {
        return Err(PedigreeError::SizeMismatch {
            matrix: matrix.len(),
            metas: metas.len(),
        });
    }
    let mut by_id: HashMap<&str, &CoinMeta> = HashMap::new();
    for m in metas {
        if by_id.insert(m.coin_id.as_str(), m).is_some() {
            return Err(PedigreeError::DuplicateCoin(m.coin_id.clone()));
        }
    }
    let mut ordered: Vec<(usize, &CoinMeta)> = matrix
        .coin_ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            by_id
                .get(id.as_str())
                .map(|m| (i, *m))
                .ok_or_else(|| PedigreeError::UnknownCoin(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    ordered.sort_by(|a, b| a.1.chronological_cmp(b.1));
    let order: Vec<usize> = ordered.iter().map(|(i, _)| *i).collect();
    let matrix = matrix.permuted(&order);
    let metas: Vec<&CoinMeta> = ordered.into_iter().map(|(_, m)| m).collect();

    let mut nodes = Vec::with_capacity(metas.len());
    for (i, meta) in metas.iter().enumerate() {
        let prior = matrix.max_prior(i).expect("index in range");
        let relation = match prior {
            Some(p) if p.best_value >= config.theta_s => {
                let elder = metas[p.best_index];
                let gap = (meta.release_time - elder.release_time).num_days().abs();
                if gap > config.theta_t_days {
                    Relation::FatherIs(elder.coin_id.clone())
                } else {
                    Relation::BrotherIs(elder.coin_id.clone())
                }
            }
            _ => Relation::Root,
        };
        nodes.push(PedigreeNode {
            coin_id: meta.coin_id.clone(),
            display_name: meta.display_name.clone(),
            release_time: meta.release_time,
            relation,
        });
    }
    PedigreeForest::from_nodes(config, nodes)
}

/// `(representative, member_count)` by descending size; equal sizes keep family order.
pub fn family_sizes(forest: &PedigreeForest) -> Vec<(String, usize)> {
    let mut sizes: Vec<(String, usize)> = forest
        .families
        .iter()
        .map(|f| (f.representative.clone(), f.members.len()))
        .collect();
    sizes.sort_by_key(|s| std::cmp::Reverse(s.1));
    sizes
}

/// `(member_count, first_release)` per family, by descending size then date.
pub fn family_first_release(forest: &PedigreeForest) -> Vec<(usize, NaiveDate)> {
    let mut rows: Vec<(usize, NaiveDate)> = forest
        .families
        .iter()
        .filter_map(|f| {
            forest
                .node(&f.representative)
                .map(|n| (f.members.len(), n.release_time))
        })
        .collect();
    rows.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    rows
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz rendering: one cluster per family, solid father arrows pointing
/// down the tree, dashed undirected brother edges pinned to the same rank.
pub fn forest_to_dot(forest: &PedigreeForest) -> String {
    let mut s = String::new();
    s.push_str("digraph pedigree {\n");
    s.push_str("  rankdir=TB;\n");
    s.push_str("  node [shape=box];\n");
    for (k, family) in forest.families.iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_{k} {{");
        let _ = writeln!(s, "    label={};", dot_quote(&family.representative));
        for member in &family.members {
            let name = forest
                .node(member)
                .map_or(member.as_str(), |n| n.display_name.as_str());
            let _ = writeln!(s, "    {} [label={}];", dot_quote(member), dot_quote(name));
        }
        s.push_str("  }\n");
    }
    for node in &forest.nodes {
        match &node.relation {
            Relation::Root => {}
            Relation::FatherIs(f) => {
                let _ = writeln!(
                    s,
                    "  {} -> {} [style=solid];",
                    dot_quote(f),
                    dot_quote(&node.coin_id)
                );
            }
            Relation::BrotherIs(b) => {
                let _ = writeln!(
                    s,
                    "  {} -> {} [style=dashed, dir=none, constraint=false];",
                    dot_quote(b),
                    dot_quote(&node.coin_id)
                );
                let _ = writeln!(
                    s,
                    "  {{ rank=same; {}; {}; }}",
                    dot_quote(b),
                    dot_quote(&node.coin_id)
                );
            }
        }
    }
    s.push_str("}\n");
    s
}
