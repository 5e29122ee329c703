use rand::RngCore;

use super::PlaneTree;
use crate::distributions::{CompositionView, OmegaSet, OmegaSplit, uniform01};
use crate::error::{GwError, Result};

/// How one vertex of the contracted tree expands into a chain.
///
/// The chain read from the top has outdegrees `x_ℓ + 1, ..., x_1 + 1, y`;
/// the first child of every chain vertex continues the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decoration {
    /// Outdegree of the bottom vertex, an element of Ω.
    pub y: u64,
    /// `x_1, ..., x_ℓ`, each with `x_i + 1` outside Ω.
    pub xs: Vec<u64>,
}

impl Decoration {
    pub fn plain(k: u64) -> Self {
        Decoration { y: k, xs: Vec::new() }
    }

    /// Outdegree of the contracted vertex.
    pub fn total(&self) -> u64 {
        self.y + self.xs.iter().sum::<u64>()
    }

    /// Product of the generating-function coefficients along the chain.
    pub fn weight(&self, split: &OmegaSplit) -> f64 {
        self.xs.iter().fold(split.phi_omega(self.y), |w, &x| w * split.phi_star(x))
    }

    fn push_chain(&self, out: &mut Vec<u64>) {
        out.extend(self.xs.iter().rev().map(|x| x + 1));
        out.push(self.y);
    }
}

/// Samples the bottom outdegree, pushing the parts `x_1, x_2, ...` onto `parts`.
pub fn sample_decoration_parts<R: RngCore + ?Sized>(
    split: &OmegaSplit,
    view: &CompositionView<'_>,
    k: u64,
    rng: &mut R,
    parts: &mut Vec<u64>,
) -> u64 {
    let k_us = k as usize;
    // bottom vertex: y ∝ φ_Ω(y) r(k - y)
    let y = match split.omega() {
        OmegaSet::Finite(set) => {
            let weights = || set.iter().take_while(|&&y| y <= k).map(|&y| (y, split.phi_omega(y) * view.r(k_us - y as usize)));
            pick(weights, rng)
        }
        OmegaSet::Cofinite(_) => {
            let weights = || (0..=k).map(|y| (y, split.phi_omega(y) * view.r(k_us - y as usize)));
            pick(weights, rng)
        }
    };
    let mut m = (k - y) as usize;
    loop {
        // stop with weight 1{m = 0}, part x with weight φ*_x r(m - x); these sum to r(m)
        let mut t = uniform01(rng) * view.r(m);
        if m == 0 {
            if t < 1.0 {
                break;
            }
            t -= 1.0;
        }
        let mut last = None;
        let mut chosen = None;
        for x in 0..=m {
            let w = view.phi_star(x) * view.r(m - x);
            if w > 0.0 {
                last = Some(x);
                if t < w {
                    chosen = Some(x);
                    break;
                }
                t -= w;
            }
        }
        let x = match chosen.or(last) {
            Some(x) => x,
            None if m == 0 => break,
            None => unreachable!("no decoration for remainder {m}"),
        };
        parts.push(x as u64);
        m -= x;
    }
    y
}

/// Inverse-CDF choice among `(value, weight)` pairs, produced twice by `weights`.
fn pick<I, F, R>(weights: F, rng: &mut R) -> u64
where
    I: Iterator<Item = (u64, f64)>,
    F: Fn() -> I,
    R: RngCore + ?Sized,
{
    let total: f64 = weights().map(|(_, w)| w).sum();
    let mut t = uniform01(rng) * total;
    let mut last = None;
    for (v, w) in weights() {
        if w > 0.0 {
            last = Some(v);
            if t < w {
                return v;
            }
            t -= w;
        }
    }
    last.expect("decoration set is non-empty")
}

/// Draws a decoration of a vertex with contracted outdegree `k`, with
/// probability proportional to its weight.
pub fn sample_decoration<R: RngCore + ?Sized>(split: &OmegaSplit, k: u64, rng: &mut R) -> Decoration {
    if split.omega().is_everything() {
        return Decoration::plain(k);
    }
    let view = split.compositions(k as usize);
    let mut xs = Vec::new();
    let y = sample_decoration_parts(split, &view, k, rng, &mut xs);
    Decoration { y, xs }
}

/// Samples a decoration and appends its chain outdegrees (top-down) to `out`.
pub(crate) fn chain_into<R: RngCore + ?Sized>(
    split: &OmegaSplit,
    view: &CompositionView<'_>,
    k: u64,
    rng: &mut R,
    parts: &mut Vec<u64>,
    out: &mut Vec<u64>,
) {
    parts.clear();
    let y = sample_decoration_parts(split, view, k, rng, parts);
    out.extend(parts.iter().rev().map(|x| x + 1));
    out.push(y);
}

/// Replaces every vertex of `tree` by the chain of its decoration.
///
/// Original children fill the free slots of the chain in depth-first order:
/// first the `y` slots of the bottom vertex, then the level of `x_1`, up to
/// the top level. In the outdegree encoding this is the concatenation of the
/// chains in depth-first order.
pub fn blow_up(tree: &PlaneTree, decorations: &[Decoration], omega: &OmegaSet) -> Result<PlaneTree> {
    if decorations.len() != tree.size() {
        return Err(GwError::InvalidParameter(format!(
            "{} decorations for a tree with {} vertices",
            decorations.len(),
            tree.size()
        )));
    }
    let mut out = Vec::with_capacity(tree.size());
    for (i, (&k, dec)) in tree.degrees().iter().zip(decorations).enumerate() {
        if dec.total() != k {
            return Err(GwError::InvalidParameter(format!(
                "decoration of vertex {i} sums to {} but its outdegree is {k}",
                dec.total()
            )));
        }
        if !omega.contains(dec.y) || dec.xs.iter().any(|&x| omega.contains(x + 1)) {
            return Err(GwError::InvalidParameter(format!("decoration of vertex {i} does not respect the outdegree set")));
        }
        dec.push_chain(&mut out);
    }
    PlaneTree::from_degrees(out)
}

/// Inverse of [`blow_up`]: cuts the outdegree list after every Ω-outdegree.
pub fn contract(tree: &PlaneTree, omega: &OmegaSet) -> (PlaneTree, Vec<Decoration>) {
    let mut degrees = Vec::new();
    let mut decorations = Vec::new();
    let mut run: Vec<u64> = Vec::new();
    for &d in tree.degrees() {
        if omega.contains(d) {
            let xs: Vec<u64> = run.iter().rev().map(|v| v - 1).collect();
            let dec = Decoration { y: d, xs };
            degrees.push(dec.total());
            decorations.push(dec);
            run.clear();
        } else {
            run.push(d);
        }
    }
    // a tree ends with a leaf and 0 ∈ Ω, so no run is left over
    debug_assert!(run.is_empty());
    (PlaneTree::from_degrees_unchecked(degrees), decorations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::OffspringLaw;
    use crate::sampler::{DegreeSequence, rotate_to_tree};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn law_a() -> OffspringLaw {
        OffspringLaw::power_law(1.5, 0.5).unwrap()
    }

    fn split(omega: &str) -> OmegaSplit {
        OmegaSplit::new(law_a(), omega.parse().unwrap()).unwrap()
    }

    #[test]
    fn identity_decorations() {
        let s = split("all");
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_decoration(&s, 5, &mut rng), Decoration::plain(5));
        let t: PlaneTree = "2 1 0 0".parse().unwrap();
        let decs: Vec<_> = t.degrees().iter().map(|&k| Decoration::plain(k)).collect();
        assert_eq!(blow_up(&t, &decs, s.omega()).unwrap(), t);
        let (back, decs2) = contract(&t, s.omega());
        assert_eq!(back, t);
        assert_eq!(decs2, decs);
    }

    #[test]
    fn chain_over_a_leaf() {
        let omega: OmegaSet = "0".parse().unwrap();
        let dec = Decoration { y: 0, xs: vec![0, 0] };
        let t = blow_up(&PlaneTree::leaf(), &[dec.clone()], &omega).unwrap();
        assert_eq!(t, PlaneTree::path(3));
        let (tilted, decs) = contract(&t, &omega);
        assert_eq!(tilted, PlaneTree::leaf());
        assert_eq!(decs, vec![dec]);
    }

    #[test]
    fn blow_up_rejects_mismatch() {
        let omega: OmegaSet = "0".parse().unwrap();
        assert!(blow_up(&PlaneTree::leaf(), &[Decoration { y: 0, xs: vec![1] }], &omega).is_err());
        assert!(blow_up(&PlaneTree::leaf(), &[], &omega).is_err());
        // x = 0 would be a chain vertex of outdegree 1, which lies in Ω = {0, 1}
        let omega: OmegaSet = "0,1".parse().unwrap();
        assert!(blow_up(&PlaneTree::leaf(), &[Decoration { y: 0, xs: vec![0] }], &omega).is_err());
    }

    #[test]
    fn leaf_decoration_parts_are_geometric() {
        let s = split("0");
        let q = s.law().pmf(1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 400_000;
        let mut counts = [0u64; 5];
        for _ in 0..n {
            let d = sample_decoration(&s, 0, &mut rng);
            assert!(d.xs.iter().all(|&x| x == 0));
            if d.xs.len() < 5 {
                counts[d.xs.len()] += 1;
            }
        }
        for (l, &c) in counts.iter().enumerate() {
            let p = (1.0 - q) * q.powi(l as i32);
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - p).abs() < 4.0 * sd, "l={l}");
        }
    }

    /// All decorations of total `k` for a finite-complement or finite Ω, up to `max_parts` parts.
    fn enumerate_decorations(s: &OmegaSplit, k: u64, max_parts: usize) -> Vec<(Decoration, f64)> {
        fn rec(s: &OmegaSplit, rem: u64, xs: &mut Vec<u64>, max_parts: usize, out: &mut Vec<Vec<u64>>) {
            out.push(xs.clone());
            if xs.len() == max_parts {
                return;
            }
            for x in 0..=rem {
                if s.phi_star(x) > 0.0 {
                    xs.push(x);
                    rec(s, rem - x, xs, max_parts, out);
                    xs.pop();
                }
            }
        }
        let mut out = Vec::new();
        for y in 0..=k {
            if s.phi_omega(y) == 0.0 {
                continue;
            }
            let mut lists = Vec::new();
            rec(s, k - y, &mut Vec::new(), max_parts, &mut lists);
            for xs in lists {
                if y + xs.iter().sum::<u64>() == k {
                    let d = Decoration { y, xs };
                    let w = d.weight(s);
                    out.push((d, w));
                }
            }
        }
        out
    }

    #[test]
    fn decoration_law_matches_enumeration() {
        let s = split("0,2");
        let k = 3;
        // parts with x = 0 repeat geometrically; 12 parts leaves a negligible remainder
        let all = enumerate_decorations(&s, k, 12);
        let total: f64 = all.iter().map(|(_, w)| w).sum();
        assert!((total / s.tilted_pmf(k) - 1.0).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000u64;
        let mut counts: HashMap<Decoration, u64> = HashMap::new();
        for _ in 0..n {
            *counts.entry(sample_decoration(&s, k, &mut rng)).or_default() += 1;
        }
        let mut chi2 = 0.0;
        let mut cells = 0usize;
        let mut pooled_obs = 0.0;
        let mut pooled_exp = 0.0;
        for (d, w) in &all {
            let e = w / total * n as f64;
            let o = *counts.get(d).unwrap_or(&0) as f64;
            if e >= 5.0 {
                chi2 += (o - e).powi(2) / e;
                cells += 1;
            } else {
                pooled_obs += o;
                pooled_exp += e;
            }
        }
        if pooled_exp > 0.0 {
            chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
            cells += 1;
        }
        let p = crate::special::gamma_q((cells - 1) as f64 / 2.0, chi2 / 2.0);
        assert!(p > 1e-3, "chi2 {chi2} cells {cells} p {p}");
    }

    fn arb_tilted_tree() -> impl Strategy<Value = PlaneTree> {
        proptest::collection::vec(0u64..5, 1..40).prop_map(|mut degrees| {
            let n = degrees.len() as u64;
            let mut sum: u64 = degrees.iter().sum();
            while sum > n - 1 {
                let i = degrees.iter().position(|&d| d > 0).unwrap();
                degrees[i] -= 1;
                sum -= 1;
            }
            degrees[0] += n - 1 - sum;
            rotate_to_tree(&DegreeSequence::new(degrees)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn blow_up_contract_round_trip(tree in arb_tilted_tree(), seed in any::<u64>(), which in 0usize..3) {
            let s = split(["0", "0,1", "all-2"][which]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let decs: Vec<_> = tree.degrees().iter().map(|&k| sample_decoration(&s, k, &mut rng)).collect();
            let big = blow_up(&tree, &decs, s.omega()).unwrap();
            prop_assert_eq!(big.count_outdegrees(|d| s.omega().contains(d)), tree.size());
            let (back, decs2) = contract(&big, s.omega());
            prop_assert_eq!(back, tree);
            prop_assert_eq!(decs2, decs);
        }
    }
}
