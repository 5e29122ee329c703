use std::collections::BTreeMap;
use std::time::Instant;

use super::config::{Experiment, ExperimentConfig, ExtremeStatistic, mode_for};
use super::output::{RunOutput, Table};
use super::runner::{Replicates, Runner, replicate_rng, sample_replicates, stream_seed};
use super::summary::{KS_BUDGET, RunSummary, TestRecord};
use crate::distributions::{OffspringSource, OmegaSet, OmegaSplit, SizeBiasedLaw};
use crate::error::{GwError, Result};
use crate::oracle::{enumerate_trees, exact_conditional_law};
use crate::sampler::{
    DEFAULT_SIZE_CAP, PlaneTree, SamplingMode, TreeSampler, sample_marked_limit_tree, sample_unconditioned,
};
use crate::stable::{LocalLimit, StableLaw, gaussian_scale, scaling_sequence, stable_scale};
use crate::stats::{
    MIN_EXPECTED, fit_line, frechet_cdf, gamma_cdf, geometric_pmf, goodness_of_fit, histogram, iqr, kendall_trend_test,
    ks_statistic, median, negative_binomial_pmf, two_sample_chi_square,
};
use crate::treeops;

/// Fringe subtrees compared jointly by the shape experiment.
pub const WINDOW: usize = 5;

/// Batches per grid point for the height spread trend test.
pub const HEIGHT_BATCHES: usize = 10;

/// Permutations of the height spread trend test.
pub const TREND_PERMUTATIONS: usize = 9999;

/// Acceptance level of the height spread trend test.
pub const TREND_LEVEL: f64 = 0.05;

/// Largest relative error of the fitted height slope.
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// Largest fraction of trees whose last fringes exceed the tail bound.
pub const TAIL_FREQUENCY_LIMIT: f64 = 0.05;

/// KS budget per grid point of the Łukasiewicz functional.
pub const LUKASIEWICZ_KS_BUDGET: f64 = 0.06;

/// KS budget of the Monte Carlo check of the scaling constant.
pub const SCALING_KS_BUDGET: f64 = 0.03;

/// Largest deviation of a normalized fringe count from its limit.
pub const FRINGE_TOLERANCE: f64 = 0.05;

/// Smallest fraction of trees with the predicted number of segments.
pub const BLOCK_FRACTION: f64 = 0.99;

/// Largest relative error of the mean tree size.
pub const SIZE_MEAN_TOLERANCE: f64 = 0.01;

/// Outdegrees tabulated explicitly by the segment frequency tests.
const DEGREE_CELLS: u64 = 4096;

/// Runs the experiment named in the config.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Maxdeg | Experiment::Extremes | Experiment::Shape | Experiment::Lukasiewicz => {
            Ok(run_shared(std::slice::from_ref(cfg))?.remove(0))
        }
        Experiment::Height => run_height(cfg),
        Experiment::Size => run_size_law(cfg),
        Experiment::Fringe => run_fringe_counts(cfg),
        Experiment::Segments => run_segments(cfg),
        Experiment::Crossval => run_crossval(cfg),
        Experiment::Scaling => run_scaling(cfg),
        Experiment::Oracle => run_oracle(cfg),
    }
}

/// One tree drawn with the config's law, set, size and seed.
pub fn sample_one(cfg: &ExperimentConfig) -> Result<Option<PlaneTree>> {
    let split = cfg.split()?;
    let sampler = TreeSampler::new(&split, cfg.n as usize, cfg.resolved_mode())?;
    sampler.sample(&mut replicate_rng(cfg.seed, 0))
}

/// `x,h` rows of the stable density on a grid.
pub fn stable_density_table(theta: f64, from: f64, to: f64, step: f64) -> Result<Table> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(GwError::InvalidParameter(format!("bad grid from {from} to {to} step {step}")));
    }
    let law = StableLaw::new(theta)?;
    let mut table = Table::new(&["x", "h"]);
    let steps = ((to - from) / step + 1e-9).floor() as u64;
    for i in 0..=steps {
        let x = from + i as f64 * step;
        table.push(vec![x.into(), law.density(x).into()]);
    }
    Ok(table)
}

fn elapsed(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

fn finish(mut summary: RunSummary, tables: Vec<Table>, start: Instant) -> RunOutput {
    summary.finish(elapsed(start));
    RunOutput { summary, tables }
}

fn note_failures<T>(summary: &mut RunSummary, reps: &Replicates<T>) {
    summary.count(reps.total(), reps.invalid, reps.failed);
    if let Some(e) = &reps.first_error {
        summary.notes.push(format!("{} replicates failed, first error: {e}", reps.failed));
    }
}

/// `n (1 - E[ξ]) / P(ξ ∈ Ω)`, the asymptotic number of fringe subtrees.
fn fringe_count(split: &OmegaSplit, n: u64) -> f64 {
    n as f64 * (1.0 - split.law().mean()) / split.p_omega()
}

/// `⌊ln ln n⌋ ∨ 2`.
pub fn t_n(n: u64) -> usize {
    ((n as f64).ln().ln().floor().max(0.0) as usize).max(2)
}

// ---------------------------------------------------------------------------
// shared pass for the statistics of one large conditioned tree

/// What to read off each tree.
#[derive(Debug, Clone, Default)]
struct SnapshotPlan {
    top: usize,
    fringes: bool,
    cap: usize,
    t_n: usize,
    t_grid: Vec<f64>,
}

/// Statistics of one conditioned tree.
#[derive(Debug, Clone, Default)]
struct Snapshot {
    delta: u64,
    /// Largest outdegrees, descending, zero padded.
    top: Vec<u64>,
    max_fringe: usize,
    /// `F_0` when it has at most `cap` vertices.
    f0: Option<String>,
    window: Vec<String>,
    tail_sum: usize,
    partials: Vec<usize>,
}

fn small_key(degrees: &[u64], cap: usize) -> String {
    if degrees.len() > cap { "big".into() } else { PlaneTree::from_degrees_unchecked(degrees.to_vec()).to_string() }
}

fn take_snapshot(tree: &PlaneTree, plan: &SnapshotPlan) -> Snapshot {
    let mut top = treeops::top_outdegrees(tree, plan.top.max(1));
    top.resize(plan.top.max(1), 0);
    let mut snap = Snapshot { delta: top[0], top, ..Snapshot::default() };
    if plan.fringes {
        let decomp = treeops::fringe_decomposition(tree);
        let delta = decomp.len();
        snap.max_fringe = decomp.fringe_sizes().max().unwrap_or(0);
        if decomp.f0.tree.size() <= plan.cap {
            snap.f0 = Some(decomp.f0.to_string());
        }
        snap.window = (0..WINDOW)
            .map(|i| if i < delta { small_key(decomp.fringe_degrees(i), plan.cap) } else { "none".into() })
            .collect();
        // fringes Δ - t_n, ..., Δ counted from one
        let first = delta.saturating_sub(plan.t_n + 1);
        snap.tail_sum = (first..delta).map(|i| decomp.fringe_size(i)).sum();
        snap.partials = treeops::lukasiewicz_partial_sums(&decomp, &plan.t_grid);
    }
    snap
}

fn same_sample(a: &ExperimentConfig, b: &ExperimentConfig) -> bool {
    a.alpha == b.alpha
        && a.mean == b.mean
        && a.omega == b.omega
        && a.n == b.n
        && a.reps == b.reps
        && a.seed == b.seed
        && a.resolved_mode() == b.resolved_mode()
}

/// Runs maxdeg, extremes, shape and Łukasiewicz checks on one shared
/// sample of trees. Each output equals the one of running its config alone.
pub fn run_shared(configs: &[ExperimentConfig]) -> Result<Vec<RunOutput>> {
    let start = Instant::now();
    let Some(first) = configs.first() else {
        return Ok(Vec::new());
    };
    let mut plan = SnapshotPlan { top: 1, t_n: t_n(first.n), ..SnapshotPlan::default() };
    let mut cap = None;
    let mut grid = None;
    for cfg in configs {
        cfg.validate()?;
        if !same_sample(first, cfg) {
            return Err(GwError::InvalidParameter("shared runs need identical law, set, size, reps, seed and mode".into()));
        }
        match cfg.experiment {
            Experiment::Maxdeg => {}
            Experiment::Extremes => match cfg.statistic {
                ExtremeStatistic::SecondDegree => plan.top = plan.top.max(2),
                ExtremeStatistic::KthDegree(i) => plan.top = plan.top.max(i),
                ExtremeStatistic::MaxFringe => plan.fringes = true,
            },
            Experiment::Shape => {
                plan.fringes = true;
                if cap.replace(cfg.cap).is_some_and(|c| c != cfg.cap) {
                    return Err(GwError::InvalidParameter("shared shape runs need one cap".into()));
                }
            }
            Experiment::Lukasiewicz => {
                plan.fringes = true;
                if grid.replace(cfg.t_grid.clone()).is_some_and(|g| g != cfg.t_grid) {
                    return Err(GwError::InvalidParameter("shared Łukasiewicz runs need one t-grid".into()));
                }
            }
            other => return Err(GwError::InvalidParameter(format!("{other} cannot share a sample"))),
        }
    }
    plan.cap = cap.unwrap_or(0);
    plan.t_grid = grid.unwrap_or_default();

    let split = first.split()?;
    let mode = first.resolved_mode();
    let runner = Runner::new(first.workers)?;
    let sampler = TreeSampler::new(&split, first.n as usize, mode)?;
    let reps = sample_replicates(&runner, &sampler, first.seed, first.reps, |t| take_snapshot(t, &plan));
    let sampling = elapsed(start);

    let mut outputs = Vec::with_capacity(configs.len());
    for cfg in configs {
        let own = Instant::now();
        let mut out = match cfg.experiment {
            Experiment::Maxdeg => analyze_maxdeg(cfg, &split, mode, &reps, own)?,
            Experiment::Extremes => analyze_extremes(cfg, &split, mode, &reps, own)?,
            Experiment::Shape => analyze_shape(cfg, &split, mode, &runner, &reps, own)?,
            _ => analyze_lukasiewicz(cfg, &split, mode, &reps, own)?,
        };
        out.summary.wall_seconds += sampling;
        outputs.push(out);
    }
    Ok(outputs)
}

fn analyze_maxdeg(
    cfg: &ExperimentConfig,
    split: &OmegaSplit,
    mode: SamplingMode,
    reps: &Replicates<Snapshot>,
    start: Instant,
) -> Result<RunOutput> {
    let mut summary = RunSummary::new(cfg, Experiment::Maxdeg, Some(mode));
    note_failures(&mut summary, reps);
    let llt = LocalLimit::new(split, cfg.n)?;
    let mut table = Table::new(&["rep", "delta", "delta_std"]);
    let mut standardized = Vec::with_capacity(reps.values.len());
    for (rep, s) in &reps.values {
        let z = llt.standardize(s.delta as f64);
        standardized.push(z);
        table.push(vec![(*rep).into(), s.delta.into(), z.into()]);
    }
    let ks = ks_statistic(&standardized, |x| llt.law.cdf(x));
    summary.tests.push(TestRecord::at_most("ks_stable", ks, KS_BUDGET, standardized.len()));
    summary.estimate("center", llt.center);
    summary.estimate("scale", llt.scale);
    summary.estimate("theta", split.law().theta());

    // binned P(Δ = ℓ) against the local limit integrated over each bin
    let mut hist = Table::sidecar("llt", &["ell_lo", "ell_hi", "count", "empirical", "prediction"]);
    if let (Some(lo), Some(hi)) = (reps.iter().map(|s| s.delta).min(), reps.iter().map(|s| s.delta).max()) {
        let width = (llt.scale / 5.0).round().max(1.0) as u64;
        let counts = histogram(reps.iter().map(|s| (s.delta - lo) / width));
        let total = standardized.len() as f64;
        for b in 0..=(hi - lo) / width {
            let (a, z) = (lo + b * width, lo + b * width + width - 1);
            let count = counts.get(&b).copied().unwrap_or(0);
            let mass = llt.law.cdf(llt.standardize(a as f64 - 0.5)) - llt.law.cdf(llt.standardize(z as f64 + 0.5));
            hist.push(vec![
                a.into(),
                z.into(),
                count.into(),
                (count as f64 / (total * width as f64)).into(),
                (mass / width as f64).into(),
            ]);
        }
    }
    Ok(finish(summary, vec![table, hist], start))
}

/// Scale `s_n` with `M · P(X ≥ s_n x) → x^{-α}` for `M` i.i.d. copies of a
/// variable with tail `P(X = k) ~ c_* k^{-1-α}`.
pub fn extreme_scale(split: &OmegaSplit, n: u64, statistic: ExtremeStatistic) -> f64 {
    let law = split.law();
    let (alpha, m) = (law.alpha(), law.mean());
    let c_star = match statistic {
        ExtremeStatistic::MaxFringe => law.c() * (1.0 - m).powf(-1.0 - alpha),
        _ => law.c() / (1.0 - m),
    };
    (fringe_count(split, n) * c_star / alpha).powf(1.0 / alpha)
}

fn analyze_extremes(
    cfg: &ExperimentConfig,
    split: &OmegaSplit,
    mode: SamplingMode,
    reps: &Replicates<Snapshot>,
    start: Instant,
) -> Result<RunOutput> {
    let mut summary = RunSummary::new(cfg, Experiment::Extremes, Some(mode));
    note_failures(&mut summary, reps);
    let alpha = split.law().alpha();
    let scale = extreme_scale(split, cfg.n, cfg.statistic);
    let mut table = Table::new(&["rep", "value", "standardized", "transformed"]);
    let (mut standardized, mut transformed) = (Vec::new(), Vec::new());
    for (rep, s) in &reps.values {
        let value = match cfg.statistic {
            ExtremeStatistic::SecondDegree => s.top[1],
            ExtremeStatistic::KthDegree(i) => s.top[i - 1],
            ExtremeStatistic::MaxFringe => s.max_fringe as u64,
        };
        let w = value as f64 / scale;
        let v = w.powf(-alpha);
        standardized.push(w);
        transformed.push(v);
        table.push(vec![(*rep).into(), value.into(), w.into(), v.into()]);
    }
    let samples = standardized.len();
    match cfg.statistic {
        ExtremeStatistic::KthDegree(i) => {
            let shape = (i - 1) as f64;
            let ks = ks_statistic(&transformed, |x| gamma_cdf(x, shape));
            summary.tests.push(TestRecord::at_most("ks_gamma", ks, KS_BUDGET, samples));
        }
        _ => {
            let ks = ks_statistic(&standardized, |x| frechet_cdf(x, alpha));
            summary.tests.push(TestRecord::at_most("ks_frechet", ks, KS_BUDGET, samples));
        }
    }
    summary.estimate("scale", scale);
    Ok(finish(summary, vec![table], start))
}

fn analyze_shape(
    cfg: &ExperimentConfig,
    split: &OmegaSplit,
    mode: SamplingMode,
    runner: &Runner,
    reps: &Replicates<Snapshot>,
    start: Instant,
) -> Result<RunOutput> {
    let mut summary = RunSummary::new(cfg, Experiment::Shape, Some(mode));
    note_failures(&mut summary, reps);
    let law = split.law();
    let cap = cfg.cap;
    let t = t_n(cfg.n);
    let bound = 4.0 * t as f64 / (1.0 - split.tilted_mean());

    let mut table = Table::new(&["rep", "f0", "window", "tail_sum"]);
    for (rep, s) in &reps.values {
        let f0 = s.f0.clone().unwrap_or_else(|| "big".into());
        table.push(vec![(*rep).into(), f0.into(), s.window.join(";").into(), s.tail_sum.into()]);
    }

    let biased = SizeBiasedLaw::new(law.clone());
    let limit_seed = stream_seed(cfg.seed, "limit");
    let limit = runner.map(cfg.reps, |rep| {
        sample_marked_limit_tree(&biased, &mut replicate_rng(limit_seed, rep), cap).map(|t| t.to_string())
    });
    let free_seed = stream_seed(cfg.seed, "unconditioned");
    let free = runner.map(cfg.reps, |rep| {
        let mut rng = replicate_rng(free_seed, rep);
        (0..WINDOW)
            .map(|_| sample_unconditioned(law, &mut rng, cap).map_or_else(|| "big".to_string(), |t| t.to_string()))
            .collect::<Vec<_>>()
    });

    let f0 = two_sample_chi_square(
        &histogram(reps.iter().filter_map(|s| s.f0.clone())),
        &histogram(limit.iter().flatten().cloned()),
        MIN_EXPECTED,
    );
    summary.tests.push(TestRecord::chi_square("f0_vs_limit", &f0, reps.values.len()));
    let joint = two_sample_chi_square(
        &histogram(reps.iter().map(|s| s.window.join(";"))),
        &histogram(free.iter().map(|w| w.join(";"))),
        MIN_EXPECTED,
    );
    summary.tests.push(TestRecord::chi_square("window_vs_independent", &joint, reps.values.len()));
    let small = |k: &String| k != "big" && k != "none";
    let first = two_sample_chi_square(
        &histogram(reps.iter().map(|s| &s.window[0]).filter(|k| small(k)).cloned()),
        &histogram(free.iter().map(|w| &w[0]).filter(|k| small(k)).cloned()),
        MIN_EXPECTED,
    );
    summary.tests.push(TestRecord::chi_square("first_fringe_vs_unconditioned", &first, reps.values.len()));
    let over = reps.iter().filter(|s| s.tail_sum as f64 >= bound).count();
    let frequency = over as f64 / reps.values.len().max(1) as f64;
    summary.tests.push(TestRecord::at_most("tail_sum_frequency", frequency, TAIL_FREQUENCY_LIMIT, reps.values.len()));
    summary.estimate("t_n", t as f64);
    summary.estimate("tail_bound", bound);
    summary.estimate("limit_capped", limit.iter().filter(|t| t.is_none()).count() as f64);
    Ok(finish(summary, vec![table], start))
}

/// Scale of the sum of `m` i.i.d. unconditioned tree sizes.
pub fn tree_size_scale(split: &OmegaSplit, n: u64) -> Result<f64> {
    let law = split.law();
    let (alpha, m) = (law.alpha(), law.mean());
    let count = fringe_count(split, n);
    if alpha < 2.0 {
        Ok(stable_scale(law.c() * (1.0 - m).powf(-1.0 - alpha), alpha, count))
    } else if alpha > 2.0 {
        let var = law.variance().expect("finite variance above 2") / (1.0 - m).powi(3);
        Ok(gaussian_scale(var, count))
    } else {
        Err(GwError::InvalidParameter("α = 2 has logarithmic corrections".into()))
    }
}

fn analyze_lukasiewicz(
    cfg: &ExperimentConfig,
    split: &OmegaSplit,
    mode: SamplingMode,
    reps: &Replicates<Snapshot>,
    start: Instant,
) -> Result<RunOutput> {
    let mut summary = RunSummary::new(cfg, Experiment::Lukasiewicz, Some(mode));
    note_failures(&mut summary, reps);
    let law = split.law();
    let stable = StableLaw::new(law.theta())?;
    let b_n = tree_size_scale(split, cfg.n)?;
    let centering = 1.0 / (1.0 - law.mean());
    let mut table = Table::new(&["rep", "t", "partial", "standardized"]);
    let mut columns = vec![Vec::with_capacity(reps.values.len()); cfg.t_grid.len()];
    for (rep, s) in &reps.values {
        for (j, &t) in cfg.t_grid.iter().enumerate() {
            let z = (s.partials[j] as f64 - s.delta as f64 * t * centering) / (b_n * t.powf(1.0 / law.theta()));
            columns[j].push(z);
            table.push(vec![(*rep).into(), t.into(), s.partials[j].into(), z.into()]);
        }
    }
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let ks = ks_statistic(&columns[j], |x| stable.cdf(x));
        summary.tests.push(TestRecord::at_most(&format!("ks_stable_t{t}"), ks, LUKASIEWICZ_KS_BUDGET, columns[j].len()));
    }
    summary.estimate("b_n", b_n);
    Ok(finish(summary, vec![table], start))
}

// ---------------------------------------------------------------------------
// standalone experiments

pub fn run_maxdeg(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run(&ExperimentConfig { experiment: Experiment::Maxdeg, ..cfg.clone() })
}

pub fn run_extremes(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run(&ExperimentConfig { experiment: Experiment::Extremes, ..cfg.clone() })
}

pub fn run_shape(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run(&ExperimentConfig { experiment: Experiment::Shape, ..cfg.clone() })
}

pub fn run_lukasiewicz(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run(&ExperimentConfig { experiment: Experiment::Lukasiewicz, ..cfg.clone() })
}

pub fn run_height(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Height, ..cfg.clone() };
    cfg.validate()?;
    let split = cfg.split()?;
    let runner = Runner::new(cfg.workers)?;
    let mut summary = RunSummary::new(cfg, Experiment::Height, None);
    let m = cfg.mean;
    let rate = (1.0 / m).ln();
    let grid = cfg.height_grid();

    let mut table = Table::new(&["n", "rep", "height"]);
    let (mut log_n, mut medians) = (Vec::new(), Vec::new());
    let (mut batch_x, mut batch_iqr) = (Vec::new(), Vec::new());
    for &n in &grid {
        let sampler = TreeSampler::new(&split, n as usize, mode_for(cfg.mode, n))?;
        let reps = sample_replicates(&runner, &sampler, stream_seed(cfg.seed, &format!("height-{n}")), cfg.reps, |t| {
            treeops::height(t)
        });
        note_failures(&mut summary, &reps);
        for (rep, h) in &reps.values {
            table.push(vec![n.into(), (*rep).into(), (*h).into()]);
        }
        let heights: Vec<f64> = reps.iter().map(|&h| h as f64).collect();
        if heights.is_empty() {
            continue;
        }
        let med = median(&heights);
        log_n.push((n as f64).ln());
        medians.push(med);
        summary.estimate(&format!("median_n{n}"), med);
        let centered: Vec<f64> = heights.iter().map(|h| h - (n as f64).ln() / rate).collect();
        summary.estimate(&format!("centered_iqr_n{n}"), iqr(&centered));
        let per = centered.len() / HEIGHT_BATCHES;
        if per >= 4 {
            for chunk in centered.chunks_exact(per).take(HEIGHT_BATCHES) {
                batch_x.push((n as f64).ln());
                batch_iqr.push(iqr(chunk));
            }
        }
    }

    let target = 1.0 / rate;
    if log_n.len() >= 2 {
        let (slope, _) = fit_line(&log_n, &medians);
        summary.estimate("slope", slope);
        summary.estimate("slope_target", target);
        summary.tests.push(TestRecord::at_most("slope_relative_error", (slope / target - 1.0).abs(), SLOPE_TOLERANCE, log_n.len()));
    }
    if !batch_x.is_empty() {
        let mut rng = replicate_rng(stream_seed(cfg.seed, "trend"), 0);
        let (tau, p) = kendall_trend_test(&batch_x, &batch_iqr, TREND_PERMUTATIONS, &mut rng);
        summary.tests.push(TestRecord::p_value_above("centered_spread_trend", tau, p, TREND_LEVEL, batch_x.len()));
    }

    // depth of the marked leaf in the limit tree is Geometric(1 - E[ξ])
    let biased = SizeBiasedLaw::new(split.law().clone());
    let spine_seed = stream_seed(cfg.seed, "spine");
    let depths = runner.map(cfg.reps, |rep| {
        sample_marked_limit_tree(&biased, &mut replicate_rng(spine_seed, rep), DEFAULT_SIZE_CAP).map(|t| t.mark_depth() as u64)
    });
    let mut spine = Table::sidecar("spine", &["rep", "depth"]);
    for (rep, d) in depths.iter().enumerate() {
        if let Some(d) = d {
            spine.push(vec![rep.into(), (*d).into()]);
        }
    }
    let observed = histogram(depths.iter().flatten().copied());
    let pmf: BTreeMap<u64, f64> = (0..200).map(|k| (k, geometric_pmf(k, m))).collect();
    let chi = goodness_of_fit(&observed, &pmf, MIN_EXPECTED);
    summary.tests.push(TestRecord::chi_square("spine_geometric", &chi, observed.values().sum::<u64>() as usize));
    summary.estimate("spine_capped", depths.iter().filter(|d| d.is_none()).count() as f64);
    summary.notes.push("the Gumbel location constant of the height is not estimated".into());
    Ok(finish(summary, vec![table, spine], start))
}

/// Offset and number of successes of the negative binomial size law.
pub fn size_law_parameters(omega: &OmegaSet, n: u64) -> (u64, u64) {
    if omega.is_finite() { (n + 1, n + 1) } else { (n, n) }
}

pub fn run_size_law(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Size, ..cfg.clone() };
    cfg.validate()?;
    let split = cfg.split()?;
    let runner = Runner::new(cfg.workers)?;
    let mode = cfg.resolved_mode();
    let mut summary = RunSummary::new(cfg, Experiment::Size, Some(mode));
    let sampler = TreeSampler::new(&split, cfg.n as usize, mode)?;
    let reps = sample_replicates(&runner, &sampler, cfg.seed, cfg.reps, |t| t.size() as u64);
    note_failures(&mut summary, &reps);

    let mut table = Table::new(&["rep", "treesize"]);
    for (rep, s) in &reps.values {
        table.push(vec![(*rep).into(), (*s).into()]);
    }
    let (offset, r) = size_law_parameters(&cfg.omega, cfg.n);
    let p = split.p_omega();
    let mean = r as f64 * (1.0 - p) / p;
    let sd = (r as f64 * (1.0 - p)).sqrt() / p;
    let top = (mean + 20.0 * sd + 50.0).ceil() as i64;
    let pmf: BTreeMap<i64, f64> = (0..=top).map(|k| (k, negative_binomial_pmf(k as u64, r, p))).collect();
    let observed = histogram(reps.iter().map(|&s| s as i64 - offset as i64));
    let chi = goodness_of_fit(&observed, &pmf, MIN_EXPECTED);
    summary.tests.push(TestRecord::chi_square("negative_binomial", &chi, reps.values.len()));
    let sizes: Vec<f64> = reps.iter().map(|&s| s as f64).collect();
    if !sizes.is_empty() {
        let avg = sizes.iter().sum::<f64>() / sizes.len() as f64;
        let expected = cfg.n as f64 / p;
        summary.estimate("mean_size", avg);
        summary.estimate("expected_mean_size", expected);
        summary.tests.push(TestRecord::at_most("mean_relative_error", (avg / expected - 1.0).abs(), SIZE_MEAN_TOLERANCE, sizes.len()));
    }
    Ok(finish(summary, vec![table], start))
}

pub fn run_fringe_counts(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Fringe, ..cfg.clone() };
    cfg.validate()?;
    let split = cfg.split()?;
    let runner = Runner::new(cfg.workers)?;
    let pattern = cfg.pattern_tree()?;
    let target: f64 = pattern.degrees().iter().map(|&d| split.law().pmf(d)).product();
    let mut summary = RunSummary::new(cfg, Experiment::Fringe, Some(cfg.resolved_mode()));
    summary.estimate("target", target);

    let mut grid = cfg.n_grid.clone();
    if !grid.contains(&cfg.n) {
        grid.push(cfg.n);
    }
    grid.sort_unstable();
    let mut table = Table::new(&["rep", "n", "count", "ratio"]);
    let mut mean_deviation = Vec::new();
    for &n in &grid {
        let sampler = TreeSampler::new(&split, n as usize, mode_for(cfg.mode, n))?;
        let master = if n == cfg.n { cfg.seed } else { stream_seed(cfg.seed, &format!("fringe-{n}")) };
        let reps = sample_replicates(&runner, &sampler, master, cfg.reps, |t| treeops::count_pattern(t, &pattern));
        note_failures(&mut summary, &reps);
        let denominator = n as f64 / split.p_omega();
        let mut deviations = Vec::with_capacity(reps.values.len());
        for (rep, c) in &reps.values {
            let ratio = *c as f64 / denominator;
            deviations.push((ratio - target).abs());
            table.push(vec![(*rep).into(), n.into(), (*c).into(), ratio.into()]);
        }
        let avg = deviations.iter().sum::<f64>() / deviations.len().max(1) as f64;
        summary.estimate(&format!("mean_deviation_n{n}"), avg);
        mean_deviation.push(avg);
        if n == cfg.n {
            let worst = deviations.iter().copied().fold(0.0, f64::max);
            summary.tests.push(TestRecord::at_most("max_deviation", worst, FRINGE_TOLERANCE, deviations.len()));
        }
    }
    if mean_deviation.len() >= 2 {
        let shrink = mean_deviation[mean_deviation.len() - 1] / mean_deviation[0];
        summary.tests.push(TestRecord::at_most("mean_deviation_shrinks", shrink, 1.0, grid.len()));
    }
    Ok(finish(summary, vec![table], start))
}

#[derive(Debug, Default)]
struct SegmentCounts {
    blocks: usize,
    runs: BTreeMap<u64, u64>,
    outside: BTreeMap<u64, u64>,
    inside: BTreeMap<u64, u64>,
}

/// Number of segments predicted for `n` vertices with outdegree in Ω.
pub fn expected_blocks(omega: &OmegaSet, n: u64) -> u64 {
    // with a finite complement the giant has its outdegree in Ω
    if omega.is_finite() { n } else { n - 1 }
}

/// `ξ` conditioned on landing inside (or outside) Ω, on explicit cells.
fn conditional_pmf(split: &OmegaSplit, inside: bool) -> BTreeMap<u64, f64> {
    let mass = if inside { split.p_omega() } else { split.p_omega_c() };
    let cells: Vec<u64> = match (split.omega(), inside) {
        (OmegaSet::Finite(s), true) | (OmegaSet::Cofinite(s), false) => s.iter().copied().collect(),
        (omega, _) => (0..DEGREE_CELLS).filter(|&d| omega.contains(d) == inside).collect(),
    };
    cells.into_iter().map(|d| (d, split.law().pmf(d) / mass)).collect()
}

pub fn run_segments(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Segments, ..cfg.clone() };
    cfg.validate()?;
    let split = cfg.split()?;
    let runner = Runner::new(cfg.workers)?;
    let mode = cfg.resolved_mode();
    let mut summary = RunSummary::new(cfg, Experiment::Segments, Some(mode));
    let sampler = TreeSampler::new(&split, cfg.n as usize, mode)?;
    let omega = &cfg.omega;
    let reps = sample_replicates(&runner, &sampler, cfg.seed, cfg.reps, |t| {
        let decomp = treeops::segment_decomposition(t, omega);
        let mut counts = SegmentCounts { blocks: decomp.segments.len(), ..Default::default() };
        let runs = decomp.segments.iter().map(|s| &s.run).chain(std::iter::once(&decomp.tail));
        for run in runs {
            *counts.runs.entry(run.len() as u64).or_insert(0) += 1;
            for &d in run {
                *counts.outside.entry(d).or_insert(0) += 1;
            }
        }
        for s in &decomp.segments {
            *counts.inside.entry(s.omega_degree).or_insert(0) += 1;
        }
        counts
    });
    note_failures(&mut summary, &reps);

    let expected = expected_blocks(omega, cfg.n);
    let mut table = Table::new(&["rep", "blocks", "runs", "outside_vertices"]);
    let (mut runs, mut outside, mut inside) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    let mut matching = 0usize;
    for (rep, c) in &reps.values {
        matching += usize::from(c.blocks as u64 == expected);
        let outside_vertices: u64 = c.outside.values().sum();
        table.push(vec![(*rep).into(), c.blocks.into(), c.runs.values().sum::<u64>().into(), outside_vertices.into()]);
        for (into, from) in [(&mut runs, &c.runs), (&mut outside, &c.outside), (&mut inside, &c.inside)] {
            for (k, v) in from {
                *into.entry(*k).or_insert(0) += v;
            }
        }
    }
    let samples = reps.values.len();
    let fraction = matching as f64 / samples.max(1) as f64;
    summary.tests.push(TestRecord::at_least("block_count", fraction, BLOCK_FRACTION, samples));
    summary.estimate("expected_blocks", expected as f64);

    let q = split.p_omega_c();
    if q > 0.0 {
        let top = ((1e-16f64).ln() / q.ln()).ceil().max(1.0) as u64;
        let pmf: BTreeMap<u64, f64> = (0..=top).map(|k| (k, geometric_pmf(k, q))).collect();
        let chi = goodness_of_fit(&runs, &pmf, MIN_EXPECTED);
        summary.tests.push(TestRecord::chi_square("run_length_geometric", &chi, runs.values().sum::<u64>() as usize));
        let chi = goodness_of_fit(&outside, &conditional_pmf(&split, false), MIN_EXPECTED);
        summary.tests.push(TestRecord::chi_square("outside_degrees", &chi, outside.values().sum::<u64>() as usize));
    } else {
        summary.notes.push("every run is empty when Ω holds every outdegree".into());
    }
    let chi = goodness_of_fit(&inside, &conditional_pmf(&split, true), MIN_EXPECTED);
    summary.tests.push(TestRecord::chi_square("inside_degrees", &chi, inside.values().sum::<u64>() as usize));
    Ok(finish(summary, vec![table], start))
}

/// Exact against big-jump sampling on the joint law of (Δ, height).
pub fn run_crossval(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Crossval, ..cfg.clone() };
    cfg.validate()?;
    let split = cfg.split()?;
    let runner = Runner::new(cfg.workers)?;
    let mut summary = RunSummary::new(cfg, Experiment::Crossval, None);
    let n = cfg.n as usize;
    let key = |t: &PlaneTree| (treeops::max_outdegree(t), treeops::height(t) as u64);
    let exact = TreeSampler::new(&split, n, SamplingMode::Exact)?;
    let a = sample_replicates(&runner, &exact, cfg.seed, cfg.reps, key);
    let bigjump = TreeSampler::new(&split, n, SamplingMode::Bigjump)?;
    let b = sample_replicates(&runner, &bigjump, stream_seed(cfg.seed, "bigjump"), cfg.reps, key);
    note_failures(&mut summary, &a);
    note_failures(&mut summary, &b);

    let mut table = Table::new(&["rep", "mode", "delta", "height"]);
    for (label, reps) in [("exact", &a), ("bigjump", &b)] {
        for (rep, (d, h)) in &reps.values {
            table.push(vec![(*rep).into(), label.into(), (*d).into(), (*h).into()]);
        }
    }
    let chi = two_sample_chi_square(&histogram(a.iter().copied()), &histogram(b.iter().copied()), MIN_EXPECTED);
    summary.tests.push(TestRecord::chi_square("delta_height_two_sample", &chi, a.values.len() + b.values.len()));
    Ok(finish(summary, vec![table], start))
}

/// Monte Carlo check of the scaling sequence: centered sums of `n`
/// outdegrees divided by `a_n` against the stable law.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Scaling, ..cfg.clone() };
    cfg.validate()?;
    let law = cfg.law()?;
    let runner = Runner::new(cfg.workers)?;
    let mut summary = RunSummary::new(cfg, Experiment::Scaling, None);
    let a_n = scaling_sequence(&law, cfg.n as f64)?;
    let stable = StableLaw::new(law.theta())?;
    let shift = cfg.n as f64 * law.mean();
    let sums = runner.map(cfg.reps, |rep| {
        let mut rng = replicate_rng(cfg.seed, rep);
        let total: u64 = (0..cfg.n).map(|_| law.draw(&mut rng)).sum();
        (total as f64 - shift) / a_n
    });
    summary.count(sums.len(), 0, 0);
    let mut table = Table::new(&["rep", "standardized"]);
    for (rep, z) in sums.iter().enumerate() {
        table.push(vec![rep.into(), (*z).into()]);
    }
    let ks = ks_statistic(&sums, |x| stable.cdf(x));
    summary.tests.push(TestRecord::at_most("ks_stable", ks, SCALING_KS_BUDGET, sums.len()));
    summary.estimate("a_n", a_n);
    summary.estimate("median", median(&sums));
    summary.estimate("stable_median", stable.quantile(0.5));
    Ok(finish(summary, vec![table], start))
}

/// Sampler draws restricted to `|T| ≤ cap` against the enumerated exact law.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &ExperimentConfig { experiment: Experiment::Oracle, ..cfg.clone() };
    cfg.validate()?;
    let split = cfg.split()?;
    let runner = Runner::new(cfg.workers)?;
    let mode = cfg.resolved_mode();
    let mut summary = RunSummary::new(cfg, Experiment::Oracle, Some(mode));
    let table = enumerate_trees(split.law(), cfg.cap)?;
    let exact = exact_conditional_law(&table, &cfg.omega, cfg.n as usize)?;
    let sampler = TreeSampler::new(&split, cfg.n as usize, mode)?;
    let cap = cfg.cap;
    let reps = sample_replicates(&runner, &sampler, cfg.seed, cfg.reps, |t| (t.size(), (t.size() <= cap).then(|| t.clone())));
    note_failures(&mut summary, &reps);

    let mut main = Table::new(&["rep", "size", "tree"]);
    for (rep, (size, tree)) in &reps.values {
        let text = tree.as_ref().map(ToString::to_string).unwrap_or_default();
        main.push(vec![(*rep).into(), (*size).into(), text.into()]);
    }
    let observed = histogram(reps.iter().filter_map(|(_, t)| t.clone()));
    let pmf: BTreeMap<PlaneTree, f64> = exact.iter().cloned().collect();
    let chi = goodness_of_fit(&observed, &pmf, MIN_EXPECTED);
    let kept = observed.values().sum::<u64>() as usize;
    summary.tests.push(TestRecord::chi_square("exact_law", &chi, kept));
    summary.estimate("kept", kept as f64);

    let mut law = Table::sidecar("law", &["tree", "probability", "observed"]);
    for (tree, p) in &exact {
        law.push(vec![tree.to_string().into(), (*p).into(), observed.get(tree).copied().unwrap_or(0).into()]);
    }
    Ok(finish(summary, vec![main, law], start))
}
