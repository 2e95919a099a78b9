//! Perception error metrics, mission outcome classification and success-rate
//! aggregation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPair {
    pub detected: Pose2,
    pub ground_truth: Pose2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("empty input")]
pub struct EmptyInput;

/// |a − b| folded into [0, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

fn mean_of(pairs: &[DetectionPair], f: impl Fn(&DetectionPair) -> f64) -> Result<f64, EmptyInput> {
    if pairs.is_empty() {
        return Err(EmptyInput);
    }
    Ok(pairs.iter().map(f).sum::<f64>() / pairs.len() as f64)
}

/// Mean Euclidean distance between detected and true centers.
pub fn position_error(pairs: &[DetectionPair]) -> Result<f64, EmptyInput> {
    mean_of(pairs, |p| (p.detected.x - p.ground_truth.x).hypot(p.detected.y - p.ground_truth.y))
}

/// Mean wrapped absolute heading difference.
pub fn orientation_error(pairs: &[DetectionPair]) -> Result<f64, EmptyInput> {
    mean_of(pairs, |p| angle_diff(p.detected.theta, p.ground_truth.theta))
}

/// Mean plain absolute heading difference, without wrapping.
pub fn orientation_error_raw(pairs: &[DetectionPair]) -> Result<f64, EmptyInput> {
    mean_of(pairs, |p| (p.detected.theta - p.ground_truth.theta).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Success,
    Collision,
    OffLane,
    Timeout,
    Aborted,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Success => "success",
            OutcomeKind::Collision => "collision",
            OutcomeKind::OffLane => "off_lane",
            OutcomeKind::Timeout => "timeout",
            OutcomeKind::Aborted => "aborted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Success, Self::Collision, Self::OffLane, Self::Timeout, Self::Aborted]
            .into_iter()
            .find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionOutcome {
    pub kind: OutcomeKind,
    pub time_of_event: f64,
}

impl MissionOutcome {
    pub fn aborted(time: f64) -> Self {
        Self { kind: OutcomeKind::Aborted, time_of_event: time }
    }

    pub fn is_success(&self) -> bool {
        self.kind == OutcomeKind::Success
    }
}

/// One tick of the ego's progress and the events raised during it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceStep {
    pub time: f64,
    pub progress: f64,
    pub collision: bool,
    pub off_lane: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionGoal {
    pub target_s: f64,
    pub timeout: f64,
}

/// First terminal condition wins. Within one step a collision outranks
/// off-lane, and either outranks reaching the target.
pub fn classify_mission(trace: &[TraceStep], goal: &MissionGoal) -> MissionOutcome {
    let mut last = f64::NEG_INFINITY;
    for step in trace {
        if !(step.time >= last) || !step.progress.is_finite() {
            return MissionOutcome::aborted(step.time);
        }
        last = step.time;
        if step.time > goal.timeout {
            break;
        }
        if step.collision {
            return MissionOutcome { kind: OutcomeKind::Collision, time_of_event: step.time };
        }
        if step.off_lane {
            return MissionOutcome { kind: OutcomeKind::OffLane, time_of_event: step.time };
        }
        if step.progress >= goal.target_s {
            return MissionOutcome { kind: OutcomeKind::Success, time_of_event: step.time };
        }
    }
    MissionOutcome { kind: OutcomeKind::Timeout, time_of_event: goal.timeout }
}

pub const WILSON_Z: f64 = 1.959964;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessAggregate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SuccessAggregate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson(successes, trials);
        Self { successes, trials, rate: successes as f64 / trials as f64, ci_low, ci_high }
    }

    /// Whether this rate lies below `other` by more than both intervals allow.
    pub fn strictly_below(&self, other: &SuccessAggregate) -> bool {
        self.ci_high < other.ci_low
    }
}

pub fn aggregate(outcomes: &[MissionOutcome]) -> Result<SuccessAggregate, EmptyInput> {
    if outcomes.is_empty() {
        return Err(EmptyInput);
    }
    let k = outcomes.iter().filter(|o| o.is_success()).count() as u64;
    Ok(SuccessAggregate::from_counts(k, outcomes.len() as u64))
}

/// Percentage with two decimals, e.g. `99.58%`.
pub fn format_rate(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(d: (f64, f64, f64), g: (f64, f64, f64)) -> DetectionPair {
        DetectionPair { detected: Pose2::new(d.0, d.1, d.2), ground_truth: Pose2::new(g.0, g.1, g.2) }
    }

    #[test]
    fn position_examples() {
        assert_eq!(position_error(&[pair((3.0, 4.0, 0.0), (0.0, 0.0, 0.0))]).unwrap(), 5.0);
        let two = [pair((1.0, 0.0, 0.0), (0.0, 0.0, 0.0)), pair((0.0, 3.0, 0.0), (0.0, 0.0, 0.0))];
        assert_eq!(position_error(&two).unwrap(), 2.0);
        assert_eq!(position_error(&[]), Err(EmptyInput));
    }

    #[test]
    fn orientation_examples() {
        assert!((orientation_error(&[pair((0.0, 0.0, 0.1), (0.0, 0.0, -0.1))]).unwrap() - 0.2).abs() < 1e-15);
        let w = orientation_error(&[pair((0.0, 0.0, 3.04), (0.0, 0.0, -3.04))]).unwrap();
        assert!((w - (2.0 * PI - 6.08)).abs() < 1e-12);
        assert!((w - 0.203185).abs() < 1e-6);
        let raw = orientation_error_raw(&[pair((0.0, 0.0, 3.04), (0.0, 0.0, -3.04))]).unwrap();
        assert!((raw - 6.08).abs() < 1e-12);
        assert_eq!(orientation_error(&[pair((0.0, 0.0, 1.3), (0.0, 0.0, 1.3))]).unwrap(), 0.0);
    }

    fn goal() -> MissionGoal {
        MissionGoal { target_s: 100.0, timeout: 60.0 }
    }

    fn step(time: f64, progress: f64) -> TraceStep {
        TraceStep { time, progress, ..Default::default() }
    }

    #[test]
    fn classify_examples() {
        let clean: Vec<TraceStep> = (0..=31).map(|t| step(t as f64, t as f64 * 100.0 / 31.0)).collect();
        assert_eq!(
            classify_mission(&clean, &goal()),
            MissionOutcome { kind: OutcomeKind::Success, time_of_event: 31.0 }
        );

        let mut tr: Vec<TraceStep> = (0..20).map(|t| step(t as f64, t as f64)).collect();
        tr[12].collision = true;
        tr[13].off_lane = true;
        assert_eq!(classify_mission(&tr, &goal()).kind, OutcomeKind::Collision);
        assert_eq!(classify_mission(&tr, &goal()).time_of_event, 12.0);

        let slow: Vec<TraceStep> = (0..=60).map(|t| step(t as f64, t as f64)).collect();
        assert_eq!(classify_mission(&slow, &goal()).kind, OutcomeKind::Timeout);

        let mut tie = vec![step(0.0, 0.0), step(1.0, 150.0)];
        tie[1].off_lane = true;
        assert_eq!(classify_mission(&tie, &goal()).kind, OutcomeKind::OffLane);

        let late = vec![step(0.0, 0.0), step(61.0, 150.0)];
        assert_eq!(classify_mission(&late, &goal()).kind, OutcomeKind::Timeout);

        let bad = vec![step(1.0, 0.0), step(0.5, 0.0)];
        assert_eq!(classify_mission(&bad, &goal()).kind, OutcomeKind::Aborted);
    }

    #[test]
    fn wilson_and_format() {
        let a = SuccessAggregate::from_counts(239, 240);
        assert_eq!(format_rate(a.rate), "99.58%");
        assert_eq!(format_rate(233.0 / 240.0), "97.08%");
        assert_eq!(format_rate(0.0), "0.00%");
        let z = SuccessAggregate::from_counts(0, 10);
        assert_eq!((z.rate, z.ci_low), (0.0, 0.0));
        assert!((z.ci_high - 0.2775328030260577).abs() < 1e-12);
        let full = SuccessAggregate::from_counts(240, 240);
        assert_eq!(full.ci_high, 1.0);
        assert!(full.ci_low < 1.0);
        assert_eq!(aggregate(&[]), Err(EmptyInput));
    }

    #[test]
    fn outcome_strings() {
        assert_eq!(serde_json::to_string(&OutcomeKind::OffLane).unwrap(), "\"off_lane\"");
        assert_eq!(OutcomeKind::parse("off_lane"), Some(OutcomeKind::OffLane));
    }
}
