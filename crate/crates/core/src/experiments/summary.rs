use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use crate::sampler::SamplingMode;
use crate::stats::ChiSquare;

/// Version of the JSON summary layout.
pub const SCHEMA: u32 = 1;

/// Largest tolerated fraction of INVALID or failed replicates.
pub const INVALID_LIMIT: f64 = 0.05;

/// Default chi-square acceptance level.
pub const CHI_SQUARE_LEVEL: f64 = 1e-3;

/// Default KS acceptance budget.
pub const KS_BUDGET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    StatisticAtMost,
    StatisticAtLeast,
    PValueAbove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub dof: Option<usize>,
    pub threshold: f64,
    pub rule: Rule,
    /// Observations behind the statistic.
    pub samples: usize,
    pub pass: bool,
}

impl TestRecord {
    fn new(name: &str, statistic: f64, p_value: Option<f64>, dof: Option<usize>, threshold: f64, rule: Rule, samples: usize) -> Self {
        let mut record = TestRecord { name: name.into(), statistic, p_value, dof, threshold, rule, samples, pass: false };
        record.pass = record.verdict();
        record
    }

    pub fn at_most(name: &str, statistic: f64, threshold: f64, samples: usize) -> Self {
        Self::new(name, statistic, None, None, threshold, Rule::StatisticAtMost, samples)
    }

    pub fn at_least(name: &str, statistic: f64, threshold: f64, samples: usize) -> Self {
        Self::new(name, statistic, None, None, threshold, Rule::StatisticAtLeast, samples)
    }

    pub fn chi_square(name: &str, test: &ChiSquare, samples: usize) -> Self {
        Self::new(name, test.statistic, Some(test.p_value), Some(test.dof), CHI_SQUARE_LEVEL, Rule::PValueAbove, samples)
    }

    pub fn p_value_above(name: &str, statistic: f64, p_value: f64, threshold: f64, samples: usize) -> Self {
        Self::new(name, statistic, Some(p_value), None, threshold, Rule::PValueAbove, samples)
    }

    /// The pass flag recomputed from the recorded numbers; NaN never passes.
    pub fn verdict(&self) -> bool {
        match self.rule {
            Rule::StatisticAtMost => self.statistic <= self.threshold,
            Rule::StatisticAtLeast => self.statistic >= self.threshold,
            Rule::PValueAbove => self.p_value.is_some_and(|p| p > self.threshold),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    TestFailure,
    /// Too many INVALID or failed replicates; the statistics are not trusted.
    InvalidRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    /// Sampler actually used, `None` when the run mixes or needs none.
    pub mode: Option<SamplingMode>,
    pub replicates: usize,
    pub invalid: usize,
    /// Replicates whose sampler returned an error.
    pub failed: usize,
    pub invalid_rate: f64,
    pub invalid_limit: f64,
    pub tests: Vec<TestRecord>,
    pub estimates: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub status: RunStatus,
    pub pass: bool,
    pub wall_seconds: f64,
}

impl RunSummary {
    pub(crate) fn new(config: &ExperimentConfig, experiment: Experiment, mode: Option<SamplingMode>) -> Self {
        RunSummary {
            schema: SCHEMA,
            experiment,
            config: config.clone(),
            mode,
            replicates: 0,
            invalid: 0,
            failed: 0,
            invalid_rate: 0.0,
            invalid_limit: INVALID_LIMIT,
            tests: Vec::new(),
            estimates: BTreeMap::new(),
            notes: Vec::new(),
            status: RunStatus::Pass,
            pass: true,
            wall_seconds: 0.0,
        }
    }

    pub(crate) fn count(&mut self, replicates: usize, invalid: usize, failed: usize) {
        self.replicates += replicates;
        self.invalid += invalid;
        self.failed += failed;
    }

    pub(crate) fn estimate(&mut self, key: &str, value: f64) {
        self.estimates.insert(key.into(), value);
    }

    pub fn test(&self, name: &str) -> Option<&TestRecord> {
        self.tests.iter().find(|t| t.name == name)
    }

    /// Status recomputed from the recorded counts and tests.
    pub fn verdict(&self) -> RunStatus {
        let rate = if self.replicates == 0 { 0.0 } else { (self.invalid + self.failed) as f64 / self.replicates as f64 };
        if rate >= self.invalid_limit {
            RunStatus::InvalidRate
        } else if self.tests.iter().all(TestRecord::verdict) {
            RunStatus::Pass
        } else {
            RunStatus::TestFailure
        }
    }

    pub(crate) fn finish(&mut self, wall_seconds: f64) {
        self.invalid_rate =
            if self.replicates == 0 { 0.0 } else { (self.invalid + self.failed) as f64 / self.replicates as f64 };
        self.status = self.verdict();
        self.pass = self.status == RunStatus::Pass;
        self.wall_seconds = wall_seconds;
    }
}
