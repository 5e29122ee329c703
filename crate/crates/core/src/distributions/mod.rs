//! Offspring laws, their split by an outdegree set Ω, the tilted law of the
//! contracted tree and the size-biased law driving the spine of the limit tree.

mod table;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock, RwLockReadGuard};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{GwError, Result};
use crate::special::{hurwitz_zeta, zeta};

pub use table::{Draw, PowerTail, TabulatedSampler, uniform_open0, uniform01};

/// Number of explicitly tabulated head values in the samplers.
pub const HEAD_LEN: usize = 1 << 14;

/// A law on outdegrees that can be evaluated and sampled.
pub trait OffspringSource: Sync {
    fn pmf(&self, k: u64) -> f64;
    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64;
}

/// Subcritical power law `P(ξ = k) = c k^{-1-α}` for `k ≥ 1`, free mass at zero.
#[derive(Clone)]
pub struct OffspringLaw {
    alpha: f64,
    mean: f64,
    c: f64,
    p0: f64,
    pmf_head: Arc<Vec<f64>>,
    sampler: Arc<TabulatedSampler>,
}

impl fmt::Debug for OffspringLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OffspringLaw")
            .field("alpha", &self.alpha)
            .field("mean", &self.mean)
            .field("c", &self.c)
            .field("p0", &self.p0)
            .finish()
    }
}

impl PartialEq for OffspringLaw {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha && self.mean == other.mean
    }
}

impl OffspringLaw {
    /// Builds the law with tail exponent `alpha` and expectation `mean`.
    pub fn power_law(alpha: f64, mean: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(GwError::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
        }
        if alpha == 2.0 {
            return Err(GwError::InvalidParameter(
                "alpha = 2 carries logarithmic corrections and is not supported".into(),
            ));
        }
        if !(mean > 0.0 && mean < 1.0) {
            return Err(GwError::InvalidParameter(format!("mean must lie in (0, 1), got {mean}")));
        }
        let c = mean / zeta(alpha);
        let p0 = 1.0 - c * zeta(alpha + 1.0);
        if !(p0 > 0.0) {
            return Err(GwError::InvalidParameter(format!(
                "alpha = {alpha}, mean = {mean} leaves no mass at zero (p0 = {p0})"
            )));
        }
        let pmf_head: Vec<f64> = (0..HEAD_LEN)
            .map(|k| if k == 0 { p0 } else { c * (k as f64).powf(-1.0 - alpha) })
            .collect();
        let tail = PowerTail { coef: c, exponent: alpha + 1.0, offset: 1.0 };
        let sampler = TabulatedSampler::new(&pmf_head, Some(tail), 0.0);
        Ok(OffspringLaw {
            alpha,
            mean,
            c,
            p0,
            pmf_head: Arc::new(pmf_head),
            sampler: Arc::new(sampler),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Tail constant `c`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Stability index `min(α, 2)` of the limit law.
    pub fn theta(&self) -> f64 {
        self.alpha.min(2.0)
    }

    /// `P(ξ = k)`.
    #[inline]
    pub fn pmf(&self, k: u64) -> f64 {
        match self.pmf_head.get(k as usize) {
            Some(&p) => p,
            None => self.c * (k as f64).powf(-1.0 - self.alpha),
        }
    }

    /// `P(ξ > k)`.
    pub fn tail(&self, k: u64) -> f64 {
        self.c * hurwitz_zeta(self.alpha + 1.0, k as f64 + 1.0)
    }

    /// Finite only for `α > 2`.
    pub fn variance(&self) -> Option<f64> {
        (self.alpha > 2.0).then(|| self.c * zeta(self.alpha - 1.0) - self.mean * self.mean)
    }

    pub fn sampler(&self) -> &TabulatedSampler {
        &self.sampler
    }
}

impl OffspringSource for OffspringLaw {
    #[inline]
    fn pmf(&self, k: u64) -> f64 {
        OffspringLaw::pmf(self, k)
    }

    #[inline]
    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler.sample_finite(rng)
    }
}

/// An outdegree set containing 0 with a finite side stored explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OmegaSet {
    /// Ω itself is finite.
    Finite(BTreeSet<u64>),
    /// Ω is everything except the listed (finite) complement.
    Cofinite(BTreeSet<u64>),
}

impl OmegaSet {
    /// All non-negative integers.
    pub fn all() -> Self {
        OmegaSet::Cofinite(BTreeSet::new())
    }

    pub fn finite<I: IntoIterator<Item = u64>>(elems: I) -> Result<Self> {
        let set: BTreeSet<u64> = elems.into_iter().collect();
        let omega = OmegaSet::Finite(set);
        omega.validate()?;
        Ok(omega)
    }

    pub fn all_except<I: IntoIterator<Item = u64>>(elems: I) -> Result<Self> {
        let omega = OmegaSet::Cofinite(elems.into_iter().collect());
        omega.validate()?;
        Ok(omega)
    }

    fn validate(&self) -> Result<()> {
        if !self.contains(0) {
            return Err(GwError::InvalidParameter("the outdegree set must contain 0".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, k: u64) -> bool {
        match self {
            OmegaSet::Finite(s) => s.contains(&k),
            OmegaSet::Cofinite(s) => !s.contains(&k),
        }
    }

    pub fn is_everything(&self) -> bool {
        matches!(self, OmegaSet::Cofinite(s) if s.is_empty())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, OmegaSet::Finite(_))
    }

    /// One past the largest element of the explicitly stored side.
    fn stored_bound(&self) -> u64 {
        match self {
            OmegaSet::Finite(s) | OmegaSet::Cofinite(s) => s.iter().next_back().map_or(0, |m| m + 1),
        }
    }
}

impl fmt::Display for OmegaSet {
    /// `all`, `all-1,3` for a cofinite set, `0,2` for a finite one.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &BTreeSet<u64>| s.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self {
            OmegaSet::Finite(s) => write!(f, "{}", join(s)),
            OmegaSet::Cofinite(s) if s.is_empty() => write!(f, "all"),
            OmegaSet::Cofinite(s) => write!(f, "all-{}", join(s)),
        }
    }
}

impl FromStr for OmegaSet {
    type Err = GwError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let parse_list = |body: &str| -> Result<BTreeSet<u64>> {
            body.split(',')
                .map(|t| {
                    t.trim().parse::<u64>().map_err(|_| {
                        GwError::InvalidParameter(format!("bad outdegree '{t}' in set '{text}'"))
                    })
                })
                .collect()
        };
        if text == "all" || text == "N0" {
            return Ok(OmegaSet::all());
        }
        if let Some(rest) = text.strip_prefix("all-") {
            return OmegaSet::all_except(parse_list(rest)?);
        }
        OmegaSet::finite(parse_list(text)?)
    }
}

impl Serialize for OmegaSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OmegaSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Lazily extended coefficient table of `1 / (1 - φ*(z))`.
#[derive(Debug)]
struct CompositionTable {
    r: Vec<f64>,
    /// `reversed[cap - x] = φ*_x` for `1 ≤ x ≤ cap`.
    reversed: Vec<f64>,
    phi_star: Vec<f64>,
}

/// Read access to the composition counts and `φ*` coefficients.
pub struct CompositionView<'a> {
    guard: RwLockReadGuard<'a, CompositionTable>,
}

impl CompositionView<'_> {
    /// `r(m)` for `m` within the prepared range.
    #[inline]
    pub fn r(&self, m: usize) -> f64 {
        self.guard.r[m]
    }

    /// `φ*_x` for `x` within the prepared range.
    #[inline]
    pub fn phi_star(&self, x: usize) -> f64 {
        self.guard.phi_star[x]
    }

    pub fn len(&self) -> usize {
        self.guard.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guard.r.is_empty()
    }
}

/// A law split by Ω, with the tilted law of the contracted tree.
///
/// Writing `φ_Ω(y) = P(ξ = y) 1{y ∈ Ω}` and `φ*_x = P(ξ = x + 1) 1{x + 1 ∉ Ω}`,
/// the tilted law has generating function `φ_Ω(z) / (1 - φ*(z))`. Draws use
/// the identity `ξ̃ = Y + X_1 + ... + X_L` with `Y ~ (ξ | ξ ∈ Ω)`,
/// `L` geometric with ratio `P(ξ ∉ Ω)` and `X ~ (ξ - 1 | ξ ∉ Ω)`.
pub struct OmegaSplit {
    law: OffspringLaw,
    omega: OmegaSet,
    p_omega: f64,
    p_omega_c: f64,
    in_omega: TabulatedSampler,
    outside: Option<TabulatedSampler>,
    compositions: RwLock<CompositionTable>,
}

impl fmt::Debug for OmegaSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OmegaSplit")
            .field("law", &self.law)
            .field("omega", &self.omega.to_string())
            .field("p_omega", &self.p_omega)
            .finish()
    }
}

impl OmegaSplit {
    pub fn new(law: OffspringLaw, omega: OmegaSet) -> Result<Self> {
        omega.validate()?;
        let bound = omega.stored_bound();
        let (p_omega, p_omega_c) = match &omega {
            OmegaSet::Finite(s) => {
                let p: f64 = s.iter().map(|&k| law.pmf(k)).sum();
                (p, 1.0 - p)
            }
            OmegaSet::Cofinite(s) => {
                let q: f64 = s.iter().map(|&k| law.pmf(k)).sum();
                (1.0 - q, q)
            }
        };
        if !(p_omega > 0.0) {
            return Err(GwError::ImpossibleConditioning("P(ξ ∈ Ω) = 0".into()));
        }
        let in_omega = if omega.is_everything() {
            law.sampler().clone()
        } else {
            match &omega {
                OmegaSet::Finite(s) => {
                    let head: Vec<f64> = (0..bound)
                        .map(|y| if s.contains(&y) { law.pmf(y) } else { 0.0 })
                        .collect();
                    TabulatedSampler::finite(&head)
                }
                OmegaSet::Cofinite(s) => {
                    let len = HEAD_LEN.max(bound as usize + 1);
                    let head: Vec<f64> = (0..len as u64)
                        .map(|y| if s.contains(&y) { 0.0 } else { law.pmf(y) / p_omega })
                        .collect();
                    let tail = PowerTail { coef: law.c() / p_omega, exponent: law.alpha() + 1.0, offset: 1.0 };
                    TabulatedSampler::new(&head, Some(tail), 0.0)
                }
            }
        };
        let outside = if p_omega_c > 0.0 {
            Some(match &omega {
                OmegaSet::Cofinite(s) => {
                    let head: Vec<f64> = (0..bound - 1)
                        .map(|x| if s.contains(&(x + 1)) { law.pmf(x + 1) } else { 0.0 })
                        .collect();
                    TabulatedSampler::finite(&head)
                }
                OmegaSet::Finite(s) => {
                    let len = HEAD_LEN.max(bound as usize + 1);
                    let head: Vec<f64> = (0..len as u64)
                        .map(|x| if s.contains(&(x + 1)) { 0.0 } else { law.pmf(x + 1) / p_omega_c })
                        .collect();
                    let tail =
                        PowerTail { coef: law.c() / p_omega_c, exponent: law.alpha() + 1.0, offset: 2.0 };
                    TabulatedSampler::new(&head, Some(tail), 0.0)
                }
            })
        } else {
            None
        };
        let split = OmegaSplit {
            law,
            omega,
            p_omega,
            p_omega_c,
            in_omega,
            outside,
            compositions: RwLock::new(CompositionTable { r: Vec::new(), reversed: Vec::new(), phi_star: Vec::new() }),
        };
        split.prepare(64);
        Ok(split)
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn omega(&self) -> &OmegaSet {
        &self.omega
    }

    /// `P(ξ ∈ Ω)`.
    pub fn p_omega(&self) -> f64 {
        self.p_omega
    }

    /// `P(ξ ∉ Ω)`.
    pub fn p_omega_c(&self) -> f64 {
        self.p_omega_c
    }

    /// Closed-form expectation of the tilted law.
    pub fn tilted_mean(&self) -> f64 {
        (self.law.mean() - self.p_omega_c) / (1.0 - self.p_omega_c)
    }

    /// Ratio of the tilted tail to the original tail.
    pub fn c_omega(&self) -> f64 {
        match self.omega {
            OmegaSet::Finite(_) => self.p_omega / (1.0 - self.p_omega_c).powi(2),
            OmegaSet::Cofinite(_) => 1.0 / (1.0 - self.p_omega_c),
        }
    }

    /// Tail constant of the tilted law.
    pub fn tilted_c(&self) -> f64 {
        self.c_omega() * self.law.c()
    }

    /// Variance of the tilted law, finite only when `α > 2`.
    ///
    /// Differentiates `φ̃ = A / (1 - B)` twice at 1 with `A = φ_Ω`, `B = φ*`.
    pub fn tilted_variance(&self) -> Option<f64> {
        let second = self.law.variance()? + self.law.mean().powi(2);
        // Σ_{d ∈ Ω} g(d) P(ξ = d) for g(d) = a + b d + e d²
        let over_omega = |a: f64, b: f64, e: f64| {
            let g = |d: u64| {
                let d = d as f64;
                (a + b * d + e * d * d) * self.law.pmf(d as u64)
            };
            match &self.omega {
                OmegaSet::Finite(s) => s.iter().map(|&d| g(d)).sum::<f64>(),
                OmegaSet::Cofinite(s) => a + b * self.law.mean() + e * second - s.iter().map(|&d| g(d)).sum::<f64>(),
            }
        };
        let total = |a: f64, b: f64, e: f64| a + b * self.law.mean() + e * second;
        let a0 = self.p_omega;
        let a1 = over_omega(0.0, 1.0, 0.0);
        let a2 = over_omega(0.0, -1.0, 1.0);
        // Ω^c never contains 0, so x = d - 1 terms are totals minus the Ω part
        let b1 = total(-1.0, 1.0, 0.0) - over_omega(-1.0, 1.0, 0.0);
        let b2 = total(2.0, -3.0, 1.0) - over_omega(2.0, -3.0, 1.0);
        let q = 1.0 - self.p_omega_c;
        let d1 = a1 / q + a0 * b1 / (q * q);
        let d2 = a2 / q + 2.0 * a1 * b1 / (q * q) + a0 * b2 / (q * q) + 2.0 * a0 * b1 * b1 / (q * q * q);
        Some(d2 + d1 - d1 * d1)
    }

    #[inline]
    pub fn phi_omega(&self, y: u64) -> f64 {
        if self.omega.contains(y) { self.law.pmf(y) } else { 0.0 }
    }

    #[inline]
    pub fn phi_star(&self, x: u64) -> f64 {
        if self.omega.contains(x + 1) { 0.0 } else { self.law.pmf(x + 1) }
    }

    /// Sampler of `ξ | ξ ∈ Ω`.
    pub fn in_omega_sampler(&self) -> &TabulatedSampler {
        &self.in_omega
    }

    /// Sampler of `ξ - 1 | ξ ∉ Ω`, absent when Ω is everything.
    pub fn outside_sampler(&self) -> Option<&TabulatedSampler> {
        self.outside.as_ref()
    }

    /// Extends the composition table to cover indices `0..=upto`.
    pub fn prepare(&self, upto: usize) {
        if self.compositions.read().unwrap().r.len() > upto {
            return;
        }
        let mut guard = self.compositions.write().unwrap();
        let table = &mut *guard;
        let have = table.r.len();
        if have > upto {
            return;
        }
        if table.phi_star.len() <= upto {
            let cap = (upto + 1).max(2 * table.phi_star.len()).max(64);
            table.phi_star = (0..=cap as u64).map(|x| self.phi_star(x)).collect();
            table.reversed = (0..cap).map(|j| table.phi_star[cap - j]).collect();
        }
        let cap = table.reversed.len();
        let scale = 1.0 / (1.0 - table.phi_star[0]);
        let sparse_end = match &self.omega {
            OmegaSet::Cofinite(s) => Some(s.iter().next_back().copied().unwrap_or(0) as usize),
            OmegaSet::Finite(_) => None,
        };
        for m in have..=upto {
            let mut acc = if m == 0 { 1.0 } else { 0.0 };
            if m > 0 {
                acc += match sparse_end {
                    Some(end) => (1..=m.min(end)).map(|x| table.phi_star[x] * table.r[m - x]).sum::<f64>(),
                    None => dot(&table.r[..m], &table.reversed[cap - m..cap]),
                };
            }
            table.r.push(acc * scale);
        }
    }

    /// Composition counts and `φ*` coefficients on `0..=upto`.
    pub fn compositions(&self, upto: usize) -> CompositionView<'_> {
        self.prepare(upto);
        CompositionView { guard: self.compositions.read().unwrap() }
    }

    /// `r(m) = [z^m] 1 / (1 - φ*(z))`.
    pub fn r(&self, m: usize) -> f64 {
        self.compositions(m).r(m)
    }

    /// `P(ξ̃ = k)` by convolving `φ_Ω` with the composition counts.
    pub fn tilted_pmf(&self, k: u64) -> f64 {
        if self.omega.is_everything() {
            return self.law.pmf(k);
        }
        match &self.omega {
            OmegaSet::Finite(s) => {
                let view = self.compositions(k as usize);
                s.iter().take_while(|&&y| y <= k).map(|&y| self.law.pmf(y) * view.r((k - y) as usize)).sum()
            }
            OmegaSet::Cofinite(_) => self.tilted_table(k as usize + 1)[k as usize],
        }
    }

    /// `P(ξ̃ = k)` for `k` in `0..len`.
    pub fn tilted_table(&self, len: usize) -> Vec<f64> {
        if len == 0 {
            return Vec::new();
        }
        match &self.omega {
            OmegaSet::Finite(_) => {
                self.prepare(len - 1);
                (0..len as u64).map(|k| self.tilted_pmf(k)).collect()
            }
            OmegaSet::Cofinite(excluded) => {
                // (1 - φ*) is a polynomial here, so the tilted coefficients obey a short recursion
                let end = excluded.iter().next_back().copied().unwrap_or(0) as usize;
                let star: Vec<f64> = (0..=end as u64).map(|x| self.phi_star(x)).collect();
                let scale = 1.0 / (1.0 - star[0]);
                let mut out: Vec<f64> = Vec::with_capacity(len);
                for k in 0..len {
                    let mut acc = self.phi_omega(k as u64);
                    for x in 1..=end.min(k) {
                        acc += star[x] * out[k - x];
                    }
                    out.push(acc * scale);
                }
                out
            }
        }
    }

    /// Draws `ξ̃` together with the chain that produced it: the Ω-outdegree
    /// `y` is returned and the parts `x_i` are appended to `parts`.
    pub fn draw_composed<R: RngCore + ?Sized>(&self, rng: &mut R, parts: &mut Vec<u64>) -> u64 {
        let y = self.in_omega.sample_finite(rng);
        if let Some(outside) = &self.outside {
            while uniform01(rng) < self.p_omega_c {
                parts.push(outside.sample_finite(rng));
            }
        }
        y
    }
}

impl OffspringSource for OmegaSplit {
    fn pmf(&self, k: u64) -> f64 {
        self.tilted_pmf(k)
    }

    #[inline]
    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.omega.is_everything() {
            return self.law.draw(rng);
        }
        let mut total = self.in_omega.sample_finite(rng);
        if let Some(outside) = &self.outside {
            while uniform01(rng) < self.p_omega_c {
                total += outside.sample_finite(rng);
            }
        }
        total
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut total = acc.iter().sum::<f64>();
    for (x, y) in ra.iter().zip(rb) {
        total += x * y;
    }
    total
}

/// `ξ̂` with `P(ξ̂ = k) = k P(ξ = k)` and `P(ξ̂ = ∞) = 1 - E[ξ]`.
#[derive(Debug, Clone)]
pub struct SizeBiasedLaw {
    base: OffspringLaw,
    sampler: TabulatedSampler,
}

impl SizeBiasedLaw {
    pub fn new(base: OffspringLaw) -> Self {
        let head: Vec<f64> = (0..HEAD_LEN as u64).map(|k| k as f64 * base.pmf(k)).collect();
        let tail = PowerTail { coef: base.c(), exponent: base.alpha(), offset: 1.0 };
        let sampler = TabulatedSampler::new(&head, Some(tail), 1.0 - base.mean());
        SizeBiasedLaw { base, sampler }
    }

    pub fn base(&self) -> &OffspringLaw {
        &self.base
    }

    pub fn p_infinity(&self) -> f64 {
        1.0 - self.base.mean()
    }

    /// `P(ξ̂ = k)` for finite `k`.
    pub fn pmf(&self, k: u64) -> f64 {
        k as f64 * self.base.pmf(k)
    }

    /// `None` stands for the value infinity.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> Option<u64> {
        match self.sampler.sample(rng) {
            Draw::Finite(k) => Some(k),
            Draw::Infinite => None,
        }
    }
}
