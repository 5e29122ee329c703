//! Random plane trees: conditioned degree sequences, cycle-lemma rotation,
//! chain decorations with the blow-up bijection, and unconditioned and
//! marked limit trees.

mod blowup;
mod limit;
mod sequence;

use std::fmt;
use std::str::FromStr;

use crate::error::{GwError, Result};

pub use blowup::{Decoration, blow_up, contract, sample_decoration, sample_decoration_parts};
pub use limit::{DEFAULT_SIZE_CAP, sample_marked_limit_tree, sample_unconditioned};
pub use sequence::{
    DEFAULT_DRAW_BUDGET, ExactAlgorithm, SamplingMode, SequenceSampler, TreeSampler, bigjump_sequence,
    exact_conditioned_sequence, rotate_to_tree, sample_tree, sample_tree_omega,
};

/// Outdegrees in an arbitrary order, not necessarily a tree encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    pub degrees: Vec<u64>,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<u64>) -> Self {
        DegreeSequence { degrees }
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

/// Whether `degrees` is the depth-first outdegree list of a plane tree.
pub fn is_lukasiewicz(degrees: &[u64]) -> bool {
    if degrees.is_empty() {
        return false;
    }
    let mut open: i64 = 1;
    for (i, &d) in degrees.iter().enumerate() {
        open += d as i64 - 1;
        if open == 0 {
            return i + 1 == degrees.len();
        }
    }
    false
}

/// A rooted ordered tree stored as its depth-first outdegree list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaneTree {
    degrees: Vec<u64>,
}

impl PlaneTree {
    pub fn from_degrees(degrees: Vec<u64>) -> Result<Self> {
        if !is_lukasiewicz(&degrees) {
            return Err(GwError::NotATree(format!("{degrees:?}")));
        }
        Ok(PlaneTree { degrees })
    }

    pub(crate) fn from_degrees_unchecked(degrees: Vec<u64>) -> Self {
        debug_assert!(is_lukasiewicz(&degrees));
        PlaneTree { degrees }
    }

    pub fn leaf() -> Self {
        PlaneTree { degrees: vec![0] }
    }

    /// Root with `k` leaf children.
    pub fn star(k: usize) -> Self {
        let mut degrees = vec![0; k + 1];
        degrees[0] = k as u64;
        PlaneTree { degrees }
    }

    /// Path with `n` vertices.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        let mut degrees = vec![1; n];
        degrees[n - 1] = 0;
        PlaneTree { degrees }
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn into_degrees(self) -> Vec<u64> {
        self.degrees
    }

    pub fn size(&self) -> usize {
        self.degrees.len()
    }

    /// Number of vertices whose outdegree satisfies `pred`.
    pub fn count_outdegrees<F: Fn(u64) -> bool>(&self, pred: F) -> usize {
        self.degrees.iter().filter(|&&d| pred(d)).count()
    }
}

impl fmt::Display for PlaneTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.degrees {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for PlaneTree {
    type Err = GwError;

    fn from_str(line: &str) -> Result<Self> {
        let degrees = line
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|_| GwError::NotATree(format!("bad outdegree '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        PlaneTree::from_degrees(degrees)
    }
}

/// A plane tree with one distinguished vertex, given by its DFS index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkedTree {
    pub tree: PlaneTree,
    pub mark: usize,
}

impl MarkedTree {
    pub fn new(tree: PlaneTree, mark: usize) -> Result<Self> {
        if mark >= tree.size() {
            return Err(GwError::InvalidParameter(format!("mark {mark} outside tree of size {}", tree.size())));
        }
        Ok(MarkedTree { tree, mark })
    }

    /// Edge distance from the root to the marked vertex.
    pub fn mark_depth(&self) -> usize {
        crate::treeops::depths(self.tree.degrees())[self.mark]
    }
}

impl fmt::Display for MarkedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.tree, self.mark)
    }
}

impl FromStr for MarkedTree {
    type Err = GwError;

    fn from_str(line: &str) -> Result<Self> {
        let (tree, mark) = line
            .split_once('|')
            .ok_or_else(|| GwError::NotATree(format!("missing mark separator in '{line}'")))?;
        let mark = mark
            .trim()
            .parse::<usize>()
            .map_err(|_| GwError::NotATree(format!("bad mark index in '{line}'")))?;
        MarkedTree::new(tree.parse()?, mark)
    }
}
