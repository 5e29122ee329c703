//! Inverse-survival sampling for integer laws with an explicit head and a
//! power-law tail described by a Hurwitz zeta closed form.

use rand::RngCore;

use crate::special::hurwitz_zeta;

/// Survival tail `P(X > k) = coef * ζ(exponent, k + offset)` beyond the head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTail {
    pub coef: f64,
    pub exponent: f64,
    pub offset: f64,
}

impl PowerTail {
    #[inline]
    pub fn survival(&self, k: u64) -> f64 {
        self.coef * hurwitz_zeta(self.exponent, k as f64 + self.offset)
    }
}

/// Outcome of a draw from a law that may put mass at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Draw {
    Finite(u64),
    Infinite,
}

/// Exact sampler for a law on `{0, 1, ...} ∪ {∞}`.
///
/// The head stores survival values `S(k) = P(X > k)` (including the mass at
/// infinity); draws land on the smallest `k` with `S(k) < V` for a uniform
/// `V` in `(0, 1]`. Beyond the head the survival function is evaluated in
/// closed form and searched by doubling then bisection.
#[derive(Debug, Clone)]
pub struct TabulatedSampler {
    survival: Vec<f64>,
    tail: Option<PowerTail>,
    defect: f64,
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform on `(0, 1]` with extra resolution near zero.
#[inline]
pub fn uniform_open0<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u = rng.next_u64() >> 11;
    if u >= 1 << 20 {
        (u as f64 + 1.0) * TWO_POW_M53
    } else {
        let w = ((rng.next_u64() >> 11) as f64 + 1.0) * TWO_POW_M53;
        (u as f64 + w) * TWO_POW_M53
    }
}

/// Uniform on `[0, 1)`.
#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_M53
}

impl TabulatedSampler {
    /// `head[k]` is `P(X = k)` for `k < head.len()`; `tail` gives the survival
    /// beyond the head and `defect` the mass at infinity.
    pub fn new(head: &[f64], tail: Option<PowerTail>, defect: f64) -> Self {
        assert!(!head.is_empty());
        let last = head.len() as u64 - 1;
        let mut s = defect + tail.map_or(0.0, |t| t.survival(last));
        let mut survival = vec![0.0; head.len()];
        for k in (0..head.len()).rev() {
            survival[k] = s;
            s += head[k];
        }
        TabulatedSampler { survival, tail, defect }
    }

    /// Finite law on `0..head.len()`, normalized internally.
    pub fn finite(head: &[f64]) -> Self {
        let total: f64 = head.iter().sum();
        let normalized: Vec<f64> = head.iter().map(|p| p / total).collect();
        Self::new(&normalized, None, 0.0)
    }

    pub fn head_len(&self) -> usize {
        self.survival.len()
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// `P(X > k)` for finite `k`, counting the mass at infinity.
    pub fn survival(&self, k: u64) -> f64 {
        match self.survival.get(k as usize) {
            Some(&s) => s,
            None => self.defect + self.tail.map_or(0.0, |t| t.survival(k)),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Draw {
        let v = uniform_open0(rng);
        self.locate(v)
    }

    /// Finite draws only; panics when the law has mass at infinity.
    #[inline]
    pub fn sample_finite<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.sample(rng) {
            Draw::Finite(k) => k,
            Draw::Infinite => unreachable!("law has no mass at infinity"),
        }
    }

    fn locate(&self, v: f64) -> Draw {
        if v <= self.defect {
            return Draw::Infinite;
        }
        let s = &self.survival;
        if v > s[0] {
            return Draw::Finite(0);
        }
        let idx = s.partition_point(|&x| x >= v);
        if idx < s.len() {
            return Draw::Finite(idx as u64);
        }
        let Some(tail) = self.tail else {
            // rounding left a sliver above the last head value
            return Draw::Finite(s.len() as u64 - 1);
        };
        let surv = |k: u64| self.defect + tail.survival(k);
        let mut lo = s.len() as u64 - 1;
        let mut hi = 2 * s.len() as u64;
        while surv(hi) >= v {
            lo = hi;
            hi = hi.saturating_mul(2);
            if hi == u64::MAX {
                return Draw::Finite(hi);
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if surv(mid) >= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Draw::Finite(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn locate_follows_survival_steps() {
        let t = TabulatedSampler::finite(&[0.5, 0.0, 0.25, 0.25]);
        assert_eq!(t.locate(1.0), Draw::Finite(0));
        assert_eq!(t.locate(0.5000001), Draw::Finite(0));
        assert_eq!(t.locate(0.5), Draw::Finite(2));
        assert_eq!(t.locate(0.26), Draw::Finite(2));
        assert_eq!(t.locate(0.25), Draw::Finite(3));
        assert_eq!(t.locate(1e-300), Draw::Finite(3));
    }

    #[test]
    fn defect_mass_is_infinite() {
        let t = TabulatedSampler::new(&[0.25, 0.25], None, 0.5);
        assert_eq!(t.locate(0.5), Draw::Infinite);
        assert_eq!(t.locate(0.6), Draw::Finite(1));
        assert_eq!(t.locate(0.8), Draw::Finite(0));
    }

    #[test]
    fn tail_search_matches_closed_form() {
        // P(X = k) ∝ k^{-3} on k ≥ 1, with a tiny head
        let z = crate::special::zeta(3.0f64);
        let head: Vec<f64> = (0..4).map(|k| if k == 0 { 0.0 } else { (k as f64).powi(-3) / z }).collect();
        let tail = PowerTail { coef: 1.0 / z, exponent: 3.0, offset: 1.0 };
        let t = TabulatedSampler::new(&head, Some(tail), 0.0);
        for &k in &[3u64, 4, 10, 1000, 123_456] {
            let upper = t.survival(k - 1);
            let lower = t.survival(k);
            assert!(upper > lower);
            let v = 0.5 * (upper + lower);
            assert_eq!(t.locate(v), Draw::Finite(k), "k={k}");
        }
    }

    #[test]
    fn uniforms_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let v = uniform_open0(&mut rng);
            assert!(v > 0.0 && v <= 1.0);
            let u = uniform01(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
