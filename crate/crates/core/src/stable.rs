//! The spectrally positive stable law with Laplace transform `E e^{-λX} = e^{λ^θ}`,
//! and the normalizing sequences of the random walks that converge to it.
//!
//! Densities come from the Fourier inversion
//! `h(x) = (1/π) ∫_0^∞ exp(t^θ cos(πθ/2)) cos(xt + t^θ sin(πθ/2)) dt`
//! on Gauss–Legendre panels, and the distribution function from the
//! Gil-Pelaez formula on the same panels. For large `x` both switch to the
//! convergent-in-practice asymptotic series of the upper tail.

use std::sync::OnceLock;

use crate::distributions::{OffspringLaw, OmegaSplit};
use crate::error::{GwError, Result};
use crate::num::Real;
use crate::special::{GaussLegendre, gamma};

const RULE_POINTS: usize = 16;
/// Number of dyadic panels refining `[0, w]` where `t^θ` is not smooth.
const GRADED_LEVELS: usize = 40;
/// Start of the asymptotic upper-tail expansion for `θ < 2`.
const SERIES_FROM: f64 = 30.0;
const SERIES_TERMS: usize = 40;
const CACHE_STEP: f64 = 0.02;

/// Spectrally positive θ-stable law, `θ ∈ (1, 2]`.
#[derive(Debug)]
pub struct StableLaw<T: Real> {
    theta: T,
    cos_part: T,
    sin_part: T,
    cutoff: T,
    rule: GaussLegendre<T>,
    /// `(b_k, |b_k / sin(πkθ)|)` with `h(x) ~ Σ_k b_k x^{-kθ-1}`.
    series: Vec<(T, T)>,
    cache: OnceLock<CdfCache<T>>,
}

#[derive(Debug)]
struct CdfCache<T> {
    lo: T,
    step: T,
    cdf: Vec<T>,
    density: Vec<T>,
}

impl<T: Real> Clone for StableLaw<T> {
    fn clone(&self) -> Self {
        StableLaw::build(self.theta)
    }
}

impl<T: Real> StableLaw<T> {
    pub fn new(theta: T) -> Result<Self> {
        if !(theta > T::one() && theta <= T::lit(2.0)) {
            return Err(GwError::InvalidParameter(format!("stable index must lie in (1, 2], got {theta}")));
        }
        Ok(Self::build(theta))
    }

    fn build(theta: T) -> Self {
        let half_turn = T::PI() * theta / T::lit(2.0);
        let cos_part = half_turn.cos();
        let sin_part = if theta == T::lit(2.0) { T::zero() } else { half_turn.sin() };
        // exp(t^θ cos) < 1e-12 beyond the cutoff
        let cutoff = (T::lit(27.7) / -cos_part).powf(theta.recip());
        let series = if theta < T::lit(2.0) {
            let th = theta.as_f64();
            let mut log_fact = 0.0;
            (1..=SERIES_TERMS)
                .map(|k| {
                    log_fact += (k as f64).ln();
                    let kt = k as f64 * th;
                    let size = (crate::special::ln_gamma(kt + 1.0) - log_fact).exp() / std::f64::consts::PI;
                    (T::lit(-size * (std::f64::consts::PI * kt).sin()), T::lit(size))
                })
                .collect()
        } else {
            Vec::new()
        };
        StableLaw { theta, cos_part, sin_part, cutoff, rule: GaussLegendre::new(RULE_POINTS), series, cache: OnceLock::new() }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    fn is_gaussian(&self) -> bool {
        self.theta == T::lit(2.0)
    }

    /// Integrates `f(t)` over `(0, cutoff)` on panels short enough for the
    /// phase `xt + t^θ sin(πθ/2)` to turn by at most π per panel.
    fn fourier<F: Fn(T) -> T>(&self, x: T, f: F) -> T {
        let rate = x.abs()
            + self.theta * self.cutoff.powf(self.theta - T::one()) * self.sin_part.abs()
            + T::one();
        let width = (T::PI() / rate).min(T::lit(0.5));
        let mut acc = T::zero();
        let mut upper = width;
        for _ in 0..GRADED_LEVELS {
            let lower = upper / T::lit(2.0);
            acc = acc + self.rule.integrate(lower, upper, &f);
            upper = lower;
        }
        let panels = (self.cutoff / width).ceil().to_usize().unwrap_or(1).max(1);
        for j in 1..panels {
            let a = width * T::from_usize(j).unwrap();
            acc = acc + self.rule.integrate(a, a + width, &f);
        }
        acc
    }

    /// Density by numerical Fourier inversion, for every `θ`.
    pub fn fourier_density(&self, x: T) -> T {
        let (c, s, th) = (self.cos_part, self.sin_part, self.theta);
        let integral = self.fourier(x, |t| {
            let p = t.powf(th);
            (p * c).exp() * (x * t + p * s).cos()
        });
        integral / T::PI()
    }

    /// Distribution function by the Gil-Pelaez inversion formula.
    pub fn fourier_cdf(&self, x: T) -> T {
        let (c, s, th) = (self.cos_part, self.sin_part, self.theta);
        let integral = self.fourier(x, |t| {
            let p = t.powf(th);
            (p * c).exp() * (x * t + p * s).sin() / t
        });
        clamp01(T::lit(0.5) + integral / T::PI())
    }

    fn series_from(&self) -> T {
        if self.is_gaussian() { T::infinity() } else { T::lit(SERIES_FROM) }
    }

    /// Sums `Σ_k b_k w_k x^{-kθ}` until the term sizes, ignoring the
    /// oscillating sine factor, stop shrinking.
    fn tail_series<W: Fn(T) -> T>(&self, x: T, weight: W) -> T {
        let mut acc = T::zero();
        let step = x.powf(-self.theta);
        let mut power = T::one();
        let mut previous = T::infinity();
        for (k, &(b, size)) in self.series.iter().enumerate() {
            power = power * step;
            let kt = T::from_usize(k + 1).unwrap() * self.theta;
            let scale = weight(kt) * power;
            let bound = size * scale.abs();
            if bound > previous {
                break;
            }
            acc = acc + b * scale;
            previous = bound;
            if bound < T::epsilon() * acc.abs() * T::lit(1e-3) {
                break;
            }
        }
        acc
    }

    /// Asymptotic expansion of the density, accurate for `x ≥ 30`.
    pub fn density_series(&self, x: T) -> T {
        self.tail_series(x, |_| T::one()) / x
    }

    /// Asymptotic expansion of `P(X > x)`.
    pub fn upper_tail_series(&self, x: T) -> T {
        self.tail_series(x, |kt| kt.recip())
    }

    /// Asymptotic expansion of `∫_x^∞ y h(y) dy`.
    pub fn upper_first_moment_series(&self, x: T) -> T {
        self.tail_series(x, |kt| (kt - T::one()).recip()) * x
    }

    /// Left end of the cached grid; below it the distribution function is
    /// smaller than `e^{-40}`.
    pub fn lower_limit(&self) -> T {
        let th = self.theta;
        -(th * (T::lit(40.0) / (th - T::one())).powf((th - T::one()) / th))
    }

    /// The stable density `h(x)`.
    pub fn density(&self, x: T) -> T {
        if self.is_gaussian() {
            return (-x * x / T::lit(4.0)).exp() / (T::lit(2.0) * T::PI().sqrt());
        }
        if x >= self.series_from() {
            return self.density_series(x);
        }
        self.fourier_density(x).max(T::zero())
    }

    fn cache(&self) -> &CdfCache<T> {
        self.cache.get_or_init(|| {
            let lo = self.lower_limit();
            let hi = if self.is_gaussian() { -lo } else { self.series_from() };
            let step = T::lit(CACHE_STEP);
            let len = ((hi - lo) / step).ceil().to_usize().unwrap() + 1;
            let mut cdf = Vec::with_capacity(len);
            let mut density = Vec::with_capacity(len);
            for i in 0..len {
                let x = lo + step * T::from_usize(i).unwrap();
                let mut f = self.fourier_cdf(x);
                if let Some(&last) = cdf.last() {
                    f = f.max(last);
                }
                cdf.push(f);
                density.push(self.fourier_density(x).max(T::zero()));
            }
            CdfCache { lo, step, cdf, density }
        })
    }

    /// The distribution function, by cubic Hermite interpolation of a cached
    /// grid of Gil-Pelaez values using the density as derivative.
    pub fn cdf(&self, x: T) -> T {
        if x.is_nan() {
            return x;
        }
        if !self.is_gaussian() && x >= self.series_from() {
            return clamp01(T::one() - self.upper_tail_series(x));
        }
        let cache = self.cache();
        if x <= cache.lo {
            return T::zero();
        }
        let pos = (x - cache.lo) / cache.step;
        let i = pos.floor().to_usize().unwrap();
        if i + 1 >= cache.cdf.len() {
            return *cache.cdf.last().unwrap();
        }
        let u = pos - T::from_usize(i).unwrap();
        let (f0, f1) = (cache.cdf[i], cache.cdf[i + 1]);
        let (d0, d1) = (cache.density[i] * cache.step, cache.density[i + 1] * cache.step);
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let value = (two * u3 - three * u2 + T::one()) * f0
            + (u3 - two * u2 + u) * d0
            + (three * u2 - two * u3) * f1
            + (u3 - u2) * d1;
        // the Hermite cubic can overshoot by rounding; keep it inside the cell
        value.max(f0).min(f1)
    }

    /// The `p`-quantile by bisection on the distribution function.
    pub fn quantile(&self, p: T) -> T {
        let (mut lo, mut hi) = (self.lower_limit(), T::one());
        while self.cdf(hi) < p {
            hi = hi * T::lit(2.0);
        }
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * (T::one() + mid.abs()) {
                break;
            }
        }
        (lo + hi) / T::lit(2.0)
    }
}

fn clamp01<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// `(c Γ(-α) n)^{1/α}`: the scale under which sums of i.i.d. variables with
/// tail `P(ξ = k) ~ c k^{-1-α}`, `1 < α < 2`, converge to the stable law.
pub fn stable_scale<T: Real>(c: T, alpha: T, n: T) -> T {
    (c * gamma(-alpha) * n).powf(alpha.recip())
}

/// `sqrt(n Var / 2)`: the scale for the Gaussian limit with variance 2.
pub fn gaussian_scale<T: Real>(variance: T, n: T) -> T {
    (n * variance / T::lit(2.0)).sqrt()
}

/// Normalizing sequence `a_n` of `S_n - n E[ξ]` for the offspring law.
pub fn scaling_sequence(law: &OffspringLaw, n: f64) -> Result<f64> {
    scale_for(law.alpha(), law.c(), law.variance(), n)
}

/// Normalizing sequence of sums of the tilted law.
pub fn tilted_scaling_sequence(split: &OmegaSplit, n: f64) -> Result<f64> {
    scale_for(split.law().alpha(), split.tilted_c(), split.tilted_variance(), n)
}

fn scale_for(alpha: f64, c: f64, variance: Option<f64>, n: f64) -> Result<f64> {
    if alpha < 2.0 {
        Ok(stable_scale(c, alpha, n))
    } else if alpha > 2.0 {
        Ok(gaussian_scale(variance.expect("finite variance above 2"), n))
    } else {
        Err(GwError::InvalidParameter("α = 2 has logarithmic corrections".into()))
    }
}

/// Local limit prediction for the largest outdegree of the tree conditioned
/// on `n` vertices with outdegree in Ω.
#[derive(Debug, Clone)]
pub struct LocalLimit {
    /// `n (1 - E[ξ]) / P(ξ ∈ Ω)`.
    pub center: f64,
    /// Scale of the tilted walk at `n`.
    pub scale: f64,
    pub law: StableLaw<f64>,
}

impl LocalLimit {
    pub fn new(split: &OmegaSplit, n: u64) -> Result<Self> {
        let base = split.law();
        let center = n as f64 * (1.0 - base.mean()) / split.p_omega();
        let scale = tilted_scaling_sequence(split, n as f64)?;
        Ok(LocalLimit { center, scale, law: StableLaw::new(base.theta())? })
    }

    /// `(center - Δ) / scale`, asymptotically distributed as the stable law.
    pub fn standardize(&self, delta: f64) -> f64 {
        (self.center - delta) / self.scale
    }

    /// Predicted `P(Δ = ℓ)`.
    pub fn prediction(&self, ell: f64) -> f64 {
        self.law.density(self.standardize(ell)) / self.scale
    }
}

/// Predicted `P(Δ = ℓ)` for the tree with `n` vertices of outdegree in Ω.
pub fn llt_prediction(split: &OmegaSplit, n: u64, ell: u64) -> Result<f64> {
    Ok(LocalLimit::new(split, n)?.prediction(ell as f64))
}
