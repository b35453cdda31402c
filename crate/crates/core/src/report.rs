//! Verdicts and pairwise slack summaries shared by the checks.

use serde::{Deserialize, Serialize};

use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// Within tolerance of an equality case.
    Marginal,
    Fail,
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        self != Verdict::Fail
    }
}

/// The pair realizing the minimum slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub x: Point,
    pub y: Point,
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackQuantiles {
    pub q0: f64,
    pub q1: f64,
    pub q50: f64,
    pub q100: f64,
}

/// Summary of an inequality evaluated over many node pairs. Slack is
/// "left side minus right side" oriented so that the inequality holds when
/// slack is nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub inequality: String,
    pub pair_count: usize,
    /// Pairs dropped because their separation reached the tangent pole.
    pub excluded_pairs: usize,
    pub min_slack: f64,
    pub argmin: PairWitness,
    pub quantiles: SlackQuantiles,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl SlackReport {
    /// Aggregates per-pair slacks, in pair order. `slacks` must be non-empty
    /// and `witness(k)` returns the geometry of pair `k`.
    pub fn from_slacks(
        inequality: &str,
        slacks: &[f64],
        excluded_pairs: usize,
        tolerance: f64,
        witness: impl Fn(usize) -> PairWitness,
    ) -> SlackReport {
        assert!(!slacks.is_empty(), "slack report over zero pairs");
        let mut arg = 0;
        for (k, s) in slacks.iter().enumerate() {
            if *s < slacks[arg] {
                arg = k;
            }
        }
        let mut sorted = slacks.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).floor() as usize];
        let min_slack = sorted[0];
        SlackReport {
            inequality: inequality.to_string(),
            pair_count: slacks.len(),
            excluded_pairs,
            min_slack,
            argmin: witness(arg),
            quantiles: SlackQuantiles {
                q0: q(0.0),
                q1: q(0.01),
                q50: q(0.5),
                q100: q(1.0),
            },
            tolerance,
            verdict: if min_slack >= -tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    /// Largest `|slack|` among the evaluated pairs.
    pub fn max_abs_slack(&self) -> f64 {
        self.quantiles.q0.abs().max(self.quantiles.q100.abs())
    }
}
