use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{OffspringLaw, OmegaSet, OmegaSplit};
use crate::error::{GwError, Result};
use crate::oracle::MAX_CAP;
use crate::sampler::{PlaneTree, SamplingMode};

/// Sizes up to this default to the exact sampler.
pub const EXACT_MODE_MAX_N: u64 = 500;

/// Largest pattern accepted by the fringe-count experiment.
pub const MAX_PATTERN_SIZE: usize = 8;

/// Largest truncation cap for the shape experiment.
pub const MAX_SHAPE_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Maxdeg,
    Height,
    Extremes,
    Size,
    Fringe,
    Segments,
    Shape,
    Lukasiewicz,
    Crossval,
    Scaling,
    Oracle,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Maxdeg,
        Experiment::Height,
        Experiment::Extremes,
        Experiment::Size,
        Experiment::Fringe,
        Experiment::Segments,
        Experiment::Shape,
        Experiment::Lukasiewicz,
        Experiment::Crossval,
        Experiment::Scaling,
        Experiment::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Maxdeg => "maxdeg",
            Experiment::Height => "height",
            Experiment::Extremes => "extremes",
            Experiment::Size => "size",
            Experiment::Fringe => "fringe",
            Experiment::Segments => "segments",
            Experiment::Shape => "shape",
            Experiment::Lukasiewicz => "lukasiewicz",
            Experiment::Crossval => "crossval",
            Experiment::Scaling => "scaling",
            Experiment::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = GwError;

    fn from_str(text: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == text).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            GwError::InvalidParameter(format!("unknown experiment '{text}', expected one of {}", names.join(", ")))
        })
    }
}

/// Extreme statistic examined by the extremes experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ExtremeStatistic {
    SecondDegree,
    MaxFringe,
    /// The `i`-th largest outdegree, `i ≥ 2`.
    KthDegree(usize),
}

impl fmt::Display for ExtremeStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtremeStatistic::SecondDegree => f.write_str("second-degree"),
            ExtremeStatistic::MaxFringe => f.write_str("max-fringe"),
            ExtremeStatistic::KthDegree(i) => write!(f, "kth-degree:{i}"),
        }
    }
}

impl FromStr for ExtremeStatistic {
    type Err = GwError;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "second-degree" => Ok(ExtremeStatistic::SecondDegree),
            "max-fringe" => Ok(ExtremeStatistic::MaxFringe),
            _ => text
                .strip_prefix("kth-degree:")
                .and_then(|i| i.parse().ok())
                .map(ExtremeStatistic::KthDegree)
                .ok_or_else(|| {
                    GwError::InvalidParameter(format!(
                        "unknown statistic '{text}', expected second-degree, max-fringe or kth-degree:<i>"
                    ))
                }),
        }
    }
}

impl TryFrom<String> for ExtremeStatistic {
    type Error = GwError;

    fn try_from(text: String) -> Result<Self> {
        text.parse()
    }
}

impl From<ExtremeStatistic> for String {
    fn from(s: ExtremeStatistic) -> String {
        s.to_string()
    }
}

/// Everything a run depends on. Echoed verbatim into its JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub alpha: f64,
    pub mean: f64,
    pub omega: OmegaSet,
    pub n: u64,
    /// Sizes for the height and fringe-count experiments.
    pub n_grid: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    /// `None` picks exact up to [`EXACT_MODE_MAX_N`] and bigjump above.
    pub mode: Option<SamplingMode>,
    pub statistic: ExtremeStatistic,
    /// Pattern tree for fringe counts, as a DFS outdegree list.
    pub pattern: String,
    /// Truncation cap for the shape and oracle experiments.
    pub cap: usize,
    pub t_grid: Vec<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::Maxdeg,
            alpha: 1.5,
            mean: 0.5,
            omega: OmegaSet::all(),
            n: 1000,
            n_grid: Vec::new(),
            reps: 1000,
            seed: 0,
            mode: None,
            statistic: ExtremeStatistic::SecondDegree,
            pattern: "0".into(),
            cap: 6,
            t_grid: vec![0.25, 0.5, 0.75, 1.0],
            workers: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn law(&self) -> Result<OffspringLaw> {
        OffspringLaw::power_law(self.alpha, self.mean)
    }

    pub fn split(&self) -> Result<OmegaSplit> {
        OmegaSplit::new(self.law()?, self.omega.clone())
    }

    pub fn resolved_mode(&self) -> SamplingMode {
        mode_for(self.mode, self.n)
    }

    pub fn pattern_tree(&self) -> Result<PlaneTree> {
        self.pattern.parse()
    }

    /// The height grid, defaulting to three decades ending at `n`.
    pub fn height_grid(&self) -> Vec<u64> {
        if self.n_grid.is_empty() {
            vec![(self.n / 100).max(1), (self.n / 10).max(1), self.n]
        } else {
            self.n_grid.clone()
        }
    }

    /// Checks every precondition that can be checked before sampling.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GwError::InvalidParameter(msg));
        self.law()?;
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        match self.experiment {
            Experiment::Height => {
                let grid = self.height_grid();
                let (lo, hi) = (grid.iter().min().copied().unwrap_or(0), grid.iter().max().copied().unwrap_or(0));
                if grid.len() < 3 || lo == 0 || hi < 10 * lo {
                    return bad(format!("the height grid needs at least 3 positive sizes spanning a decade, got {grid:?}"));
                }
            }
            Experiment::Extremes => {
                if let ExtremeStatistic::KthDegree(i) = self.statistic
                    && i < 2
                {
                    return bad(format!("kth-degree needs i ≥ 2, got {i}"));
                }
            }
            Experiment::Fringe => {
                let pattern = self.pattern_tree()?;
                if pattern.size() > MAX_PATTERN_SIZE {
                    return bad(format!("pattern has {} vertices, at most {MAX_PATTERN_SIZE} allowed", pattern.size()));
                }
                if self.n_grid.contains(&0) {
                    return bad("grid sizes must be positive".into());
                }
            }
            Experiment::Shape => {
                if self.cap == 0 || self.cap > MAX_SHAPE_CAP {
                    return bad(format!("shape cap must lie in 1..={MAX_SHAPE_CAP}, got {}", self.cap));
                }
            }
            Experiment::Lukasiewicz => {
                if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
                    return bad(format!("t-grid must be a non-empty subset of (0, 1], got {:?}", self.t_grid));
                }
            }
            Experiment::Oracle => {
                if self.cap == 0 || self.cap > MAX_CAP {
                    return bad(format!("oracle cap must lie in 1..={MAX_CAP}, got {}", self.cap));
                }
            }
            Experiment::Scaling => {
                if self.alpha == 2.0 {
                    return bad("α = 2 has no plain power scaling".into());
                }
            }
            _ => {}
        }
        if matches!(self.experiment, Experiment::Maxdeg | Experiment::Lukasiewicz) && self.alpha == 2.0 {
            return bad("α = 2 has no plain power scaling".into());
        }
        Ok(())
    }
}

pub(crate) fn mode_for(mode: Option<SamplingMode>, n: u64) -> SamplingMode {
    mode.unwrap_or(if n <= EXACT_MODE_MAX_N { SamplingMode::Exact } else { SamplingMode::Bigjump })
}
