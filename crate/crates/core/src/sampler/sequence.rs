use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::blowup::chain_into;
use super::{DegreeSequence, PlaneTree};
use crate::distributions::{OffspringSource, OmegaSplit, uniform01};
use crate::error::{GwError, Result};

/// Default cap on proposal draws for the rejection sampler.
pub const DEFAULT_DRAW_BUDGET: u64 = 100_000_000;

/// Largest size accepted by the convolution sampler (its table is quadratic in `n`).
const CONVOLUTION_MAX_N: usize = 4096;

/// Sizes up to this use rejection under [`ExactAlgorithm::Auto`].
const AUTO_REJECTION_MAX_N: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactAlgorithm {
    Auto,
    /// i.i.d. proposals with a forced last coordinate.
    Rejection,
    /// Sequential coordinates from partial-sum convolution tables.
    Convolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Exact,
    Bigjump,
}

enum Strategy {
    Rejection { max_pmf: f64, budget: u64 },
    Convolution(ConvolutionTable),
    BigJump,
}

/// Degree sequences of `n` i.i.d. outdegrees conditioned on summing to `n - 1`.
pub struct SequenceSampler<'a, S> {
    source: &'a S,
    n: usize,
    strategy: Strategy,
}

impl<'a, S: OffspringSource> SequenceSampler<'a, S> {
    pub fn exact(source: &'a S, n: usize, algorithm: ExactAlgorithm) -> Result<Self> {
        if n == 0 {
            return Err(GwError::InvalidParameter("tree size must be at least 1".into()));
        }
        let algorithm = match algorithm {
            ExactAlgorithm::Auto if n <= AUTO_REJECTION_MAX_N => ExactAlgorithm::Rejection,
            ExactAlgorithm::Auto => ExactAlgorithm::Convolution,
            other => other,
        };
        let strategy = match algorithm {
            ExactAlgorithm::Rejection => Strategy::Rejection {
                max_pmf: (0..n as u64).map(|k| source.pmf(k)).fold(0.0, f64::max),
                budget: DEFAULT_DRAW_BUDGET,
            },
            _ => {
                if n > CONVOLUTION_MAX_N {
                    return Err(GwError::InvalidParameter(format!(
                        "exact convolution sampling supports n <= {CONVOLUTION_MAX_N}, got {n}; use the big-jump sampler"
                    )));
                }
                Strategy::Convolution(ConvolutionTable::new(source, n))
            }
        };
        Ok(SequenceSampler { source, n, strategy })
    }

    pub fn bigjump(source: &'a S, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GwError::InvalidParameter("big-jump sampling needs n >= 2".into()));
        }
        Ok(SequenceSampler { source, n, strategy: Strategy::BigJump })
    }

    pub fn new(source: &'a S, n: usize, mode: SamplingMode) -> Result<Self> {
        match mode {
            SamplingMode::Exact => Self::exact(source, n, ExactAlgorithm::Auto),
            SamplingMode::Bigjump => Self::bigjump(source, n),
        }
    }

    /// Overrides the proposal budget of the rejection strategy.
    pub fn with_budget(mut self, draws: u64) -> Self {
        if let Strategy::Rejection { budget, .. } = &mut self.strategy {
            *budget = draws;
        }
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_bigjump(&self) -> bool {
        matches!(self.strategy, Strategy::BigJump)
    }

    /// `Ok(None)` is the invalid outcome of the big-jump sampler.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Option<DegreeSequence>> {
        match &self.strategy {
            Strategy::Rejection { max_pmf, budget } => rejection(self.source, self.n, *max_pmf, *budget, rng).map(Some),
            Strategy::Convolution(table) => Ok(Some(table.sample(rng))),
            Strategy::BigJump => Ok(bigjump(self.source, self.n, rng)),
        }
    }
}

fn rejection<S: OffspringSource, R: RngCore + ?Sized>(
    source: &S,
    n: usize,
    max_pmf: f64,
    budget: u64,
    rng: &mut R,
) -> Result<DegreeSequence> {
    let target = n as u64 - 1;
    let mut degrees = Vec::with_capacity(n);
    let mut used = 0u64;
    loop {
        degrees.clear();
        let mut sum = 0u64;
        let mut overshoot = false;
        for _ in 0..n - 1 {
            if used >= budget {
                return Err(GwError::BudgetExhausted(used));
            }
            used += 1;
            let d = source.draw(rng);
            sum = sum.saturating_add(d);
            if sum > target {
                overshoot = true;
                break;
            }
            degrees.push(d);
        }
        if overshoot {
            continue;
        }
        let forced = target - sum;
        let ratio = source.pmf(forced) / max_pmf;
        debug_assert!(ratio <= 1.0 + 1e-9);
        if uniform01(rng) < ratio.min(1.0) {
            degrees.push(forced);
            return Ok(DegreeSequence::new(degrees));
        }
        if used >= budget {
            return Err(GwError::BudgetExhausted(used));
        }
    }
}

fn bigjump<S: OffspringSource, R: RngCore + ?Sized>(source: &S, n: usize, rng: &mut R) -> Option<DegreeSequence> {
    let mut degrees = Vec::with_capacity(n);
    degrees.push(0);
    let mut sum = 0u64;
    for _ in 0..n - 1 {
        let d = source.draw(rng);
        sum = sum.saturating_add(d);
        degrees.push(d);
    }
    let giant = (n as u64 - 1).checked_sub(sum)?;
    degrees[0] = giant;
    Some(DegreeSequence::new(degrees))
}

/// Row-normalized partial-sum laws `P(S_j = s)` for `s < n`.
struct ConvolutionTable {
    n: usize,
    pmf: Vec<f64>,
    /// `rows[j][s] = P(S_j = s) / κ_j`.
    rows: Vec<Vec<f64>>,
    /// `ratios[j] = κ_j / κ_{j-1}`.
    ratios: Vec<f64>,
}

impl ConvolutionTable {
    fn new<S: OffspringSource>(source: &S, n: usize) -> Self {
        let pmf: Vec<f64> = (0..n as u64).map(|k| source.pmf(k)).collect();
        let mut rows = Vec::with_capacity(n + 1);
        let mut ratios = vec![1.0];
        let mut first = vec![0.0; n];
        first[0] = 1.0;
        rows.push(first);
        for j in 1..=n {
            let prev: &Vec<f64> = &rows[j - 1];
            let mut row = vec![0.0; n];
            for (s, slot) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in 0..=s {
                    acc += pmf[k] * prev[s - k];
                }
                *slot = acc;
            }
            let scale = row.iter().cloned().fold(0.0, f64::max);
            row.iter_mut().for_each(|v| *v /= scale);
            ratios.push(scale);
            rows.push(row);
        }
        ConvolutionTable { n, pmf, rows, ratios }
    }

    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> DegreeSequence {
        let mut degrees = Vec::with_capacity(self.n);
        let mut remaining = self.n - 1;
        for j in (1..=self.n).rev() {
            let prev = &self.rows[j - 1];
            let total = self.ratios[j] * self.rows[j][remaining];
            let mut t = uniform01(rng) * total;
            let mut last = None;
            let mut chosen = None;
            for k in 0..=remaining {
                let w = self.pmf[k] * prev[remaining - k];
                if w > 0.0 {
                    last = Some(k);
                    if t < w {
                        chosen = Some(k);
                        break;
                    }
                    t -= w;
                }
            }
            let k = chosen.or(last).expect("conditioning event has positive probability");
            degrees.push(k as u64);
            remaining -= k;
        }
        debug_assert_eq!(remaining, 0);
        DegreeSequence::new(degrees)
    }
}

/// Draws `n` i.i.d. outdegrees conditioned on summing to `n - 1`.
pub fn exact_conditioned_sequence<S: OffspringSource, R: RngCore + ?Sized>(
    source: &S,
    n: usize,
    rng: &mut R,
) -> Result<DegreeSequence> {
    let sampler = SequenceSampler::exact(source, n, ExactAlgorithm::Auto)?;
    Ok(sampler.sample(rng)?.expect("exact samplers never return the invalid outcome"))
}

/// Giant outdegree `n - 1 - S_{n-1}` followed by `n - 1` free draws; `None` when negative.
pub fn bigjump_sequence<S: OffspringSource, R: RngCore + ?Sized>(
    source: &S,
    n: usize,
    rng: &mut R,
) -> Option<DegreeSequence> {
    assert!(n >= 2, "big-jump sampling needs n >= 2");
    bigjump(source, n, rng)
}

/// Cyclic shift of a sequence with `Σ (d_i - 1) = -1` into a depth-first tree encoding.
///
/// With `k0` the first index attaining the minimal prefix sum of `d_i - 1`,
/// the shift starts right after `k0` (or at the start when `k0` is last).
pub fn rotate_to_tree(seq: &DegreeSequence) -> Result<PlaneTree> {
    let start = rotation_start(&seq.degrees)?;
    let mut degrees = Vec::with_capacity(seq.len());
    degrees.extend_from_slice(&seq.degrees[start..]);
    degrees.extend_from_slice(&seq.degrees[..start]);
    Ok(PlaneTree::from_degrees_unchecked(degrees))
}

/// Zero-based start index of the admissible rotation.
pub(crate) fn rotation_start(degrees: &[u64]) -> Result<usize> {
    let n = degrees.len();
    let total: u64 = degrees.iter().sum();
    if n == 0 || total + 1 != n as u64 {
        return Err(GwError::NotATree(format!("outdegrees sum to {total} for {n} vertices")));
    }
    let mut prefix: i64 = 0;
    let mut min = i64::MAX;
    let mut argmin = 0;
    for (i, &d) in degrees.iter().enumerate() {
        prefix += d as i64 - 1;
        if prefix < min {
            min = prefix;
            argmin = i;
        }
    }
    Ok(if argmin + 1 == n { 0 } else { argmin + 1 })
}

/// Conditioned tree with `n` vertices for the law `source`; `None` only in big-jump mode.
pub fn sample_tree<S: OffspringSource, R: RngCore + ?Sized>(
    source: &S,
    n: usize,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<Option<PlaneTree>> {
    let sampler = SequenceSampler::new(source, n, mode)?;
    match sampler.sample(rng)? {
        Some(seq) => Ok(Some(rotate_to_tree(&seq)?)),
        None => Ok(None),
    }
}

/// Conditioned tree with exactly `n` vertices of outdegree in Ω.
pub fn sample_tree_omega<R: RngCore + ?Sized>(
    split: &OmegaSplit,
    n: usize,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<Option<PlaneTree>> {
    TreeSampler::new(split, n, mode)?.sample(rng)
}

/// Samples `T_n^Ω` by drawing the contracted tree and blowing up every vertex.
pub struct TreeSampler<'a> {
    split: &'a OmegaSplit,
    sequences: SequenceSampler<'a, OmegaSplit>,
}

impl<'a> TreeSampler<'a> {
    pub fn new(split: &'a OmegaSplit, n: usize, mode: SamplingMode) -> Result<Self> {
        Self::from_sequences(split, SequenceSampler::new(split, n, mode)?)
    }

    pub fn from_sequences(split: &'a OmegaSplit, sequences: SequenceSampler<'a, OmegaSplit>) -> Result<Self> {
        if !split.omega().is_everything() {
            // the giant can take any degree below n
            split.prepare(sequences.n());
        }
        Ok(TreeSampler { split, sequences })
    }

    pub fn split(&self) -> &OmegaSplit {
        self.split
    }

    pub fn n(&self) -> usize {
        self.sequences.n()
    }

    /// The contracted tree with `n` vertices.
    pub fn sample_contracted<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Option<PlaneTree>> {
        match self.sequences.sample(rng)? {
            Some(seq) => Ok(Some(rotate_to_tree(&seq)?)),
            None => Ok(None),
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Option<PlaneTree>> {
        let Some(tilted) = self.sample_contracted(rng)? else {
            return Ok(None);
        };
        if self.split.omega().is_everything() {
            return Ok(Some(tilted));
        }
        let max = tilted.degrees().iter().copied().max().unwrap_or(0) as usize;
        let view = self.split.compositions(max);
        let mut out = Vec::with_capacity(tilted.size() * 2);
        let mut parts = Vec::new();
        for &k in tilted.degrees() {
            chain_into(self.split, &view, k, rng, &mut parts, &mut out);
        }
        Ok(Some(PlaneTree::from_degrees_unchecked(out)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{OffspringLaw, OmegaSet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn law_a() -> OffspringLaw {
        OffspringLaw::power_law(1.5, 0.5).unwrap()
    }

    /// Deterministic stub law used to pin down degenerate cases.
    struct PointMass(u64);

    impl OffspringSource for PointMass {
        fn pmf(&self, k: u64) -> f64 {
            if k == self.0 { 1.0 } else { 0.0 }
        }
        fn draw<R: RngCore + ?Sized>(&self, _rng: &mut R) -> u64 {
            self.0
        }
    }

    #[test]
    fn rotation_examples() {
        let t = rotate_to_tree(&DegreeSequence::new(vec![2, 0, 0, 1])).unwrap();
        assert_eq!(t.degrees(), &[1, 2, 0, 0]);
        let t = rotate_to_tree(&DegreeSequence::new(vec![1, 2, 0, 0])).unwrap();
        assert_eq!(t.degrees(), &[1, 2, 0, 0]);
        assert!(rotate_to_tree(&DegreeSequence::new(vec![1, 1, 0, 0])).is_err());
    }

    #[test]
    fn bigjump_with_point_mass_gives_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seq = bigjump_sequence(&PointMass(0), 7, &mut rng).unwrap();
        assert_eq!(seq.degrees, vec![6, 0, 0, 0, 0, 0, 0]);
        assert_eq!(rotate_to_tree(&seq).unwrap(), PlaneTree::star(6));
        assert!(bigjump_sequence(&PointMass(2), 7, &mut rng).is_none());
    }

    #[test]
    fn single_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let law = law_a();
        for algo in [ExactAlgorithm::Rejection, ExactAlgorithm::Convolution] {
            let s = SequenceSampler::exact(&law, 1, algo).unwrap();
            assert_eq!(s.sample(&mut rng).unwrap().unwrap().degrees, vec![0]);
        }
    }

    #[test]
    fn two_vertices_split_evenly() {
        let law = law_a();
        for algo in [ExactAlgorithm::Rejection, ExactAlgorithm::Convolution] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let s = SequenceSampler::exact(&law, 2, algo).unwrap();
            let n = 200_000;
            let first_one = (0..n).filter(|_| s.sample(&mut rng).unwrap().unwrap().degrees == vec![1, 0]).count();
            assert!((first_one as f64 / n as f64 - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
        }
    }

    /// Ordered vectors of length 3 summing to 2 weighted by pmf products.
    fn three_vertex_oracle(law: &OffspringLaw) -> HashMap<Vec<u64>, f64> {
        let mut w = HashMap::new();
        for a in 0..=2u64 {
            for b in 0..=2 - a {
                let c = 2 - a - b;
                w.insert(vec![a, b, c], law.pmf(a) * law.pmf(b) * law.pmf(c));
            }
        }
        let total: f64 = w.values().sum();
        w.values_mut().for_each(|v| *v /= total);
        w
    }

    #[test]
    fn three_vertex_law() {
        let law = law_a();
        let oracle = three_vertex_oracle(&law);
        // the unnormalized weights of a cherry order and a path order
        assert!((law.pmf(2) * law.pmf(0).powi(2) - 0.018_690_547).abs() < 1e-9);
        assert!((law.pmf(1).powi(2) * law.pmf(0) - 0.027_227_022).abs() < 1e-9);
        let cherry_orders = [vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]];
        let p_cherry: f64 = cherry_orders.iter().map(|v| oracle[v]).sum();
        assert!((p_cherry - 0.407_045_654).abs() < 1e-9);
        assert!((oracle[&vec![2, 0, 0]] - 0.135_681_885).abs() < 1e-9);
        for algo in [ExactAlgorithm::Rejection, ExactAlgorithm::Convolution] {
            let s = SequenceSampler::exact(&law, 3, algo).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let n = 300_000;
            let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
            for _ in 0..n {
                *counts.entry(s.sample(&mut rng).unwrap().unwrap().degrees).or_default() += 1;
            }
            for (v, &p) in &oracle {
                let f = *counts.get(v).unwrap_or(&0) as f64 / n as f64;
                assert!((f - p).abs() < 4.5 * (p * (1.0 - p) / n as f64).sqrt(), "{algo:?} {v:?}");
            }
        }
    }

    #[test]
    fn conditioned_trees_of_size_three() {
        let law = law_a();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 200_000;
        let paths = (0..n)
            .filter(|_| sample_tree(&law, 3, SamplingMode::Exact, &mut rng).unwrap().unwrap() == PlaneTree::path(3))
            .count();
        let p = 0.592_954_346;
        assert!((paths as f64 / n as f64 - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    /// `P(S_n = n - 1)` by repeated convolution.
    fn sum_probability(law: &OffspringLaw, n: usize) -> f64 {
        let pmf: Vec<f64> = (0..n as u64).map(|k| law.pmf(k)).collect();
        let mut dist = vec![0.0; n];
        dist[0] = 1.0;
        for _ in 0..n {
            let mut next = vec![0.0; n];
            for s in 0..n {
                for k in 0..=s {
                    next[s] += pmf[k] * dist[s - k];
                }
            }
            dist = next;
        }
        dist[n - 1]
    }

    #[test]
    fn rejection_acceptance_rate() {
        let law = law_a();
        let n = 100;
        let target = sum_probability(&law, n) / law.p0();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 200_000u64;
        let mut accepted = 0u64;
        for _ in 0..trials {
            let mut sum = 0u64;
            for _ in 0..n - 1 {
                sum += law.draw(&mut rng);
            }
            if sum <= n as u64 - 1 && uniform01(&mut rng) < law.pmf(n as u64 - 1 - sum) / law.p0() {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        let sd = (target * (1.0 - target) / trials as f64).sqrt();
        assert!((rate - target).abs() < 3.0 * sd, "rate {rate} target {target}");
    }

    #[test]
    fn budget_is_enforced() {
        let law = law_a();
        let s = SequenceSampler::exact(&law, 30, ExactAlgorithm::Rejection).unwrap().with_budget(10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(s.sample(&mut rng), Err(GwError::BudgetExhausted(_))));
    }

    #[test]
    fn convolution_and_rejection_agree_on_tilted_law() {
        let split = OmegaSplit::new(law_a(), OmegaSet::finite([0]).unwrap()).unwrap();
        let n = 12;
        let a = SequenceSampler::exact(&split, n, ExactAlgorithm::Rejection).unwrap();
        let b = SequenceSampler::exact(&split, n, ExactAlgorithm::Convolution).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let reps = 100_000;
        let mut ha = vec![0u64; n];
        let mut hb = vec![0u64; n];
        for _ in 0..reps {
            ha[*a.sample(&mut rng).unwrap().unwrap().degrees.iter().max().unwrap() as usize] += 1;
            hb[*b.sample(&mut rng).unwrap().unwrap().degrees.iter().max().unwrap() as usize] += 1;
        }
        let mut chi2 = 0.0;
        let mut cells = 0;
        for (x, y) in ha.iter().zip(&hb) {
            if x + y >= 10 {
                let (x, y) = (*x as f64, *y as f64);
                chi2 += (x - y).powi(2) / (x + y);
                cells += 1;
            }
        }
        assert!(chi2 < cells as f64 + 5.0 * (2.0 * cells as f64).sqrt(), "chi2 {chi2} cells {cells}");
    }

    #[test]
    fn omega_trees_have_n_omega_vertices() {
        for omega in ["0", "0,2", "all-1"] {
            let split = OmegaSplit::new(law_a(), omega.parse().unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for (n, mode) in [(1, SamplingMode::Exact), (40, SamplingMode::Exact), (2000, SamplingMode::Bigjump)] {
                let sampler = TreeSampler::new(&split, n, mode).unwrap();
                for _ in 0..50 {
                    if let Some(t) = sampler.sample(&mut rng).unwrap() {
                        assert_eq!(t.count_outdegrees(|d| split.omega().contains(d)), n);
                        assert!(super::super::is_lukasiewicz(t.degrees()));
                    }
                }
            }
        }
    }

    #[test]
    fn identity_omega_is_bitwise_identical() {
        let law = law_a();
        let split = OmegaSplit::new(law.clone(), OmegaSet::all()).unwrap();
        for mode in [SamplingMode::Exact, SamplingMode::Bigjump] {
            let mut r1 = ChaCha8Rng::seed_from_u64(77);
            let mut r2 = ChaCha8Rng::seed_from_u64(77);
            for _ in 0..20 {
                let a = sample_tree(&law, 200, mode, &mut r1).unwrap();
                let b = sample_tree_omega(&split, 200, mode, &mut r2).unwrap();
                assert_eq!(a, b);
            }
        }
    }
}
