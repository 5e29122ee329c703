//! Single-pass statistics on depth-first outdegree lists.

use crate::distributions::OmegaSet;
use crate::error::{GwError, Result};
use crate::sampler::{MarkedTree, PlaneTree};

pub fn max_outdegree(tree: &PlaneTree) -> u64 {
    tree.degrees().iter().copied().max().unwrap_or(0)
}

/// The `k` largest outdegrees in descending order (fewer if the tree is smaller).
pub fn top_outdegrees(tree: &PlaneTree, k: usize) -> Vec<u64> {
    let mut top: Vec<u64> = Vec::with_capacity(k + 1);
    for &d in tree.degrees() {
        if top.len() < k || d > *top.last().unwrap() {
            let pos = top.partition_point(|&x| x >= d);
            top.insert(pos, d);
            top.truncate(k);
        }
    }
    top
}

/// `i`-th largest outdegree, counting from 1.
pub fn kth_outdegree(tree: &PlaneTree, i: usize) -> Result<u64> {
    if i == 0 || i > tree.size() {
        return Err(GwError::InvalidParameter(format!("rank {i} outside 1..={}", tree.size())));
    }
    if i <= 16 {
        return Ok(top_outdegrees(tree, i)[i - 1]);
    }
    let mut degrees = tree.degrees().to_vec();
    let (_, nth, _) = degrees.select_nth_unstable_by(i - 1, |a, b| b.cmp(a));
    Ok(*nth)
}

/// Depth of every vertex, in depth-first order.
pub fn depths(degrees: &[u64]) -> Vec<usize> {
    let mut out = Vec::with_capacity(degrees.len());
    walk_depths(degrees, |depth| out.push(depth));
    out
}

fn walk_depths<F: FnMut(usize)>(degrees: &[u64], mut visit: F) {
    // remaining unvisited children of each ancestor of the current vertex
    let mut open: Vec<u64> = Vec::new();
    for &d in degrees {
        visit(open.len());
        if let Some(top) = open.last_mut() {
            *top -= 1;
        }
        if d > 0 {
            open.push(d);
        } else {
            while open.last() == Some(&0) {
                open.pop();
            }
        }
    }
}

pub fn height(tree: &PlaneTree) -> usize {
    let mut h = 0;
    walk_depths(tree.degrees(), |depth| h = h.max(depth));
    h
}

/// End (exclusive) of the fringe subtree rooted at `start`.
pub fn subtree_end(degrees: &[u64], start: usize) -> usize {
    let mut open: u64 = 1;
    let mut i = start;
    while open > 0 {
        open = open - 1 + degrees[i];
        i += 1;
    }
    i
}

/// DFS index of the first vertex of maximal outdegree.
pub fn first_max_index(degrees: &[u64]) -> usize {
    let mut best = 0;
    for (i, &d) in degrees.iter().enumerate() {
        if d > degrees[best] {
            best = i;
        }
    }
    best
}

/// A tree split at its first vertex of maximal outdegree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FringeDecomposition {
    /// The tree with the subtree below the split vertex cut away, split vertex marked.
    pub f0: MarkedTree,
    fringe_degrees: Vec<u64>,
    /// `fringe i` occupies `fringe_degrees[bounds[i]..bounds[i + 1]]`.
    bounds: Vec<usize>,
}

impl FringeDecomposition {
    /// Number of fringe subtrees, the maximal outdegree.
    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Outdegree list of the `i`-th fringe subtree (0-based, left to right).
    pub fn fringe_degrees(&self, i: usize) -> &[u64] {
        &self.fringe_degrees[self.bounds[i]..self.bounds[i + 1]]
    }

    pub fn fringe(&self, i: usize) -> PlaneTree {
        PlaneTree::from_degrees_unchecked(self.fringe_degrees(i).to_vec())
    }

    pub fn fringes(&self) -> impl Iterator<Item = PlaneTree> + '_ {
        (0..self.len()).map(|i| self.fringe(i))
    }

    pub fn fringe_size(&self, i: usize) -> usize {
        self.bounds[i + 1] - self.bounds[i]
    }

    pub fn fringe_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.bounds.windows(2).map(|w| w[1] - w[0])
    }

    /// Grafts the fringes back under the marked vertex.
    pub fn reassemble(&self) -> PlaneTree {
        let f0 = self.f0.tree.degrees();
        let mark = self.f0.mark;
        let mut out = Vec::with_capacity(f0.len() + self.fringe_degrees.len());
        out.extend_from_slice(&f0[..mark]);
        out.push(self.len() as u64);
        out.extend_from_slice(&self.fringe_degrees);
        out.extend_from_slice(&f0[mark + 1..]);
        PlaneTree::from_degrees_unchecked(out)
    }
}

pub fn fringe_decomposition(tree: &PlaneTree) -> FringeDecomposition {
    let degrees = tree.degrees();
    let j0 = first_max_index(degrees);
    let delta = degrees[j0] as usize;
    let end = subtree_end(degrees, j0);
    let mut bounds = Vec::with_capacity(delta + 1);
    bounds.push(0);
    let mut pos = j0 + 1;
    for _ in 0..delta {
        pos = subtree_end(degrees, pos);
        bounds.push(pos - j0 - 1);
    }
    debug_assert_eq!(pos, end);
    let mut f0 = Vec::with_capacity(degrees.len() - (end - j0) + 1);
    f0.extend_from_slice(&degrees[..j0]);
    f0.push(0);
    f0.extend_from_slice(&degrees[end..]);
    FringeDecomposition {
        f0: MarkedTree { tree: PlaneTree::from_degrees_unchecked(f0), mark: j0 },
        fringe_degrees: degrees[j0 + 1..end].to_vec(),
        bounds,
    }
}

/// Number of fringe subtrees of `tree` equal to `pattern`.
///
/// Counts occurrences of the pattern's outdegree list in the outdegree list
/// of the tree. An occurrence is always a complete fringe subtree, and
/// occurrences never overlap or wrap around the end.
pub fn count_pattern(tree: &PlaneTree, pattern: &PlaneTree) -> usize {
    let hay = tree.degrees();
    let needle = pattern.degrees();
    if needle == [0] {
        return hay.iter().filter(|&&d| d == 0).count();
    }
    if needle.len() > hay.len() {
        return 0;
    }
    hay.windows(needle.len()).filter(|w| *w == needle).count()
}

/// One cut of the rotated outdegree list: a run of outdegrees outside Ω
/// closed by an outdegree in Ω.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub run: Vec<u64>,
    pub omega_degree: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentDecomposition {
    /// Index of the first vertex of maximal outdegree.
    pub giant_index: usize,
    pub giant_degree: u64,
    pub segments: Vec<Segment>,
    /// Outdegrees outside Ω left after the last segment.
    pub tail: Vec<u64>,
}

impl SegmentDecomposition {
    /// The rotated list `d_{j0+1}, ..., d_N, d_1, ..., d_{j0}` rebuilt from the pieces.
    pub fn concatenate(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for s in &self.segments {
            out.extend_from_slice(&s.run);
            out.push(s.omega_degree);
        }
        out.extend_from_slice(&self.tail);
        out.push(self.giant_degree);
        out
    }
}

/// Cuts the outdegree list, read cyclically from just after the first
/// maximal-outdegree vertex and stopping before it, into segments.
pub fn segment_decomposition(tree: &PlaneTree, omega: &OmegaSet) -> SegmentDecomposition {
    let degrees = tree.degrees();
    let j0 = first_max_index(degrees);
    let mut segments = Vec::new();
    let mut run = Vec::new();
    for &d in degrees[j0 + 1..].iter().chain(&degrees[..j0]) {
        if omega.contains(d) {
            segments.push(Segment { run: std::mem::take(&mut run), omega_degree: d });
        } else {
            run.push(d);
        }
    }
    SegmentDecomposition { giant_index: j0, giant_degree: degrees[j0], segments, tail: run }
}

/// `Σ_{i ≤ ⌊Δ t⌋} |F_i|` for each `t` in `grid`.
pub fn lukasiewicz_partial_sums(decomp: &FringeDecomposition, grid: &[f64]) -> Vec<usize> {
    let delta = decomp.len();
    let mut prefix = Vec::with_capacity(delta + 1);
    prefix.push(0usize);
    for s in decomp.fringe_sizes() {
        prefix.push(prefix.last().unwrap() + s);
    }
    grid.iter()
        .map(|&t| {
            let idx = ((delta as f64) * t).floor().clamp(0.0, delta as f64) as usize;
            prefix[idx]
        })
        .collect()
}
