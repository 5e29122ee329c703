//! Exhaustive enumeration of small weighted plane trees: the exact laws
//! every sampler is checked against.

use std::collections::BTreeMap;
use std::io::Write;

use crate::distributions::{OffspringSource, OmegaSet};
use crate::error::{GwError, Result};
use crate::sampler::PlaneTree;
use crate::treeops;

pub use crate::stats::goodness_of_fit;

/// Largest enumerable size; there are Catalan(11) = 58786 trees with 12 vertices.
pub const MAX_CAP: usize = 12;

/// All plane trees with at most `cap` vertices and their Galton–Watson probabilities.
#[derive(Debug, Clone)]
pub struct WeightedTreeTable {
    pub entries: Vec<(PlaneTree, f64)>,
    pub cap: usize,
}

impl WeightedTreeTable {
    /// `P(|T| ≤ cap)`.
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    /// Writes `degrees,weight` rows, degrees space separated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "degrees,weight")?;
        for (tree, w) in &self.entries {
            writeln!(out, "{tree},{w:.16e}")?;
        }
        Ok(())
    }
}

/// Enumerates trees by size, then lexicographically by DFS outdegree list.
pub fn enumerate_trees<S: OffspringSource>(law: &S, cap: usize) -> Result<WeightedTreeTable> {
    if cap == 0 || cap > MAX_CAP {
        return Err(GwError::InvalidParameter(format!("enumeration cap must lie in 1..={MAX_CAP}, got {cap}")));
    }
    let pmf: Vec<f64> = (0..cap as u64).map(|k| law.pmf(k)).collect();
    let mut entries = Vec::new();
    for size in 1..=cap {
        let mut degrees = Vec::with_capacity(size);
        extend(&mut degrees, size, 1, 1.0, &pmf, &mut entries);
    }
    Ok(WeightedTreeTable { entries, cap })
}

/// Appends every completion of the prefix `degrees` with `open` unfilled child slots.
fn extend(degrees: &mut Vec<u64>, size: usize, open: usize, weight: f64, pmf: &[f64], out: &mut Vec<(PlaneTree, f64)>) {
    let left = size - degrees.len();
    if left == 0 {
        if open == 0 {
            out.push((PlaneTree::from_degrees_unchecked(degrees.clone()), weight));
        }
        return;
    }
    if open == 0 {
        return;
    }
    // after this vertex `open - 1 + d` slots remain for `left - 1` vertices,
    // and the walk may only close at the last vertex
    let max_d = left - open;
    for d in 0..=max_d {
        let next = open - 1 + d;
        if next == 0 && left > 1 {
            continue;
        }
        degrees.push(d as u64);
        extend(degrees, size, next, weight * pmf[d], pmf, out);
        degrees.pop();
    }
}

/// Law of the tree conditioned on `n` vertices with outdegree in Ω and on `|T| ≤ cap`.
pub fn exact_conditional_law(table: &WeightedTreeTable, omega: &OmegaSet, n: usize) -> Result<Vec<(PlaneTree, f64)>> {
    let kept: Vec<(PlaneTree, f64)> = table
        .entries
        .iter()
        .filter(|(t, _)| t.count_outdegrees(|d| omega.contains(d)) == n)
        .cloned()
        .collect();
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    if kept.is_empty() || total <= 0.0 {
        return Err(GwError::ImpossibleConditioning(format!(
            "no tree with at most {} vertices has {n} outdegrees in {omega}",
            table.cap
        )));
    }
    Ok(kept.into_iter().map(|(t, w)| (t, w / total)).collect())
}

/// Tree statistics with exact laws available from the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statistic {
    MaxDegree,
    SecondDegree,
    Height,
    Size,
    Pattern(PlaneTree),
}

impl Statistic {
    pub fn evaluate(&self, tree: &PlaneTree) -> u64 {
        match self {
            Statistic::MaxDegree => treeops::max_outdegree(tree),
            Statistic::SecondDegree => treeops::top_outdegrees(tree, 2).get(1).copied().unwrap_or(0),
            Statistic::Height => treeops::height(tree) as u64,
            Statistic::Size => tree.size() as u64,
            Statistic::Pattern(p) => treeops::count_pattern(tree, p) as u64,
        }
    }
}

/// Pushforward of a conditional law through a statistic.
pub fn exact_statistic_law(law: &[(PlaneTree, f64)], statistic: &Statistic) -> BTreeMap<u64, f64> {
    let mut out = BTreeMap::new();
    for (t, p) in law {
        *out.entry(statistic.evaluate(t)).or_insert(0.0) += p;
    }
    out
}
