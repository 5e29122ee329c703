use rand::RngCore;

use super::{MarkedTree, PlaneTree};
use crate::distributions::{OffspringSource, SizeBiasedLaw};

/// Default vertex cap for unconditioned and limit-tree sampling.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// Appends an unconditioned tree to `out`; false once `out` would exceed `cap`.
fn grow<S: OffspringSource, R: RngCore + ?Sized>(source: &S, rng: &mut R, cap: usize, out: &mut Vec<u64>) -> bool {
    let mut open: u64 = 1;
    while open > 0 {
        if out.len() >= cap {
            return false;
        }
        let d = source.draw(rng);
        out.push(d);
        open = open - 1 + d;
    }
    true
}

/// A Galton–Watson tree generated in depth-first order; `None` when it
/// would have more than `cap` vertices.
pub fn sample_unconditioned<S: OffspringSource, R: RngCore + ?Sized>(
    source: &S,
    rng: &mut R,
    cap: usize,
) -> Option<PlaneTree> {
    let mut out = Vec::new();
    grow(source, rng, cap, &mut out).then(|| PlaneTree::from_degrees_unchecked(out))
}

/// The limit tree with a marked leaf: size-biased outdegrees along a spine
/// ending at the mark, independent unconditioned trees everywhere else.
///
/// Returns `None` when the tree would have more than `cap` vertices.
pub fn sample_marked_limit_tree<R: RngCore + ?Sized>(
    law: &SizeBiasedLaw,
    rng: &mut R,
    cap: usize,
) -> Option<MarkedTree> {
    let base = law.base();
    let spine = sample_spine(law, rng);
    let mut out = Vec::new();
    for &(k, pos) in &spine {
        if out.len() >= cap {
            return None;
        }
        out.push(k);
        for _ in 0..pos {
            if !grow(base, rng, cap, &mut out) {
                return None;
            }
        }
    }
    let mark = out.len();
    out.push(0);
    // right subtrees come after the whole spine subtree, deepest level first
    for &(k, pos) in spine.iter().rev() {
        for _ in 0..k - 1 - pos {
            if !grow(base, rng, cap, &mut out) {
                return None;
            }
        }
    }
    Some(MarkedTree { tree: PlaneTree::from_degrees_unchecked(out), mark })
}

/// Spine outdegrees with the position of the spine child among the children.
fn sample_spine<R: RngCore + ?Sized>(law: &SizeBiasedLaw, rng: &mut R) -> Vec<(u64, u64)> {
    let mut spine = Vec::new();
    while let Some(k) = law.draw(rng) {
        let pos = ((crate::distributions::uniform01(rng) * k as f64) as u64).min(k - 1);
        spine.push((k, pos));
    }
    spine
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::OffspringLaw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn law_a() -> OffspringLaw {
        OffspringLaw::power_law(1.5, 0.5).unwrap()
    }

    fn within(freq: f64, p: f64, n: usize, z: f64) -> bool {
        (freq - p).abs() < z * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn unconditioned_small_sizes_and_mean() {
        let law = law_a();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 1_000_000;
        let mut sizes = [0usize; 3];
        let mut total = 0usize;
        let mut capped = 0;
        for _ in 0..n {
            match sample_unconditioned(&law, &mut rng, DEFAULT_SIZE_CAP) {
                Some(t) => {
                    total += t.size();
                    if t.size() <= 2 {
                        sizes[t.size()] += 1;
                    }
                }
                None => capped += 1,
            }
        }
        assert!(within(sizes[1] as f64 / n as f64, 0.743_244, n, 4.0));
        assert!(within(sizes[2] as f64 / n as f64, 0.142_254, n, 4.0));
        // E|T| = 1 / (1 - mean) = 2; the size has infinite variance so the check is loose
        let mean = total as f64 / (n - capped) as f64;
        assert!((mean - 2.0).abs() < 0.06, "{mean}");
    }

    #[test]
    fn cap_is_reported() {
        let law = law_a();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut saw_cap = false;
        for _ in 0..10_000 {
            if let Some(t) = sample_unconditioned(&law, &mut rng, 3) {
                assert!(t.size() <= 3);
            } else {
                saw_cap = true;
            }
        }
        assert!(saw_cap);
    }

    #[test]
    fn marked_tree_small_shapes_and_spine() {
        let sb = SizeBiasedLaw::new(law_a());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 400_000;
        let mut single = 0;
        let mut edge = 0;
        let mut depth = [0usize; 4];
        // trees over the cap are large, so they count as neither shape
        let mut capped = 0;
        for _ in 0..n {
            let h = sample_spine(&sb, &mut rng).len();
            if h < 4 {
                depth[h] += 1;
            }
            let Some(m) = sample_marked_limit_tree(&sb, &mut rng, DEFAULT_SIZE_CAP) else {
                capped += 1;
                continue;
            };
            assert_eq!(m.tree.degrees()[m.mark], 0);
            if m.tree.size() == 1 {
                single += 1;
            }
            if m.tree.degrees() == [1, 0] && m.mark == 1 {
                edge += 1;
            }
            assert!(m.mark_depth() < m.tree.size());
        }
        assert!(capped < n / 200, "{capped}");
        assert!(within(single as f64 / n as f64, 0.5, n, 4.0));
        assert!(within(edge as f64 / n as f64, 0.095_698, n, 4.0));
        for (k, &c) in depth.iter().enumerate() {
            let p = 0.5f64.powi(k as i32) * 0.5;
            assert!(within(c as f64 / n as f64, p, n, 4.0), "depth {k}");
        }
    }
}
