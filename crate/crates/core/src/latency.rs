//! Workload-dependent compute latency and its summary statistics.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::NodeId;

pub const DEADLINE_MS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Latency is recorded but never affects the loop.
    #[default]
    #[value(name = "record")]
    RecordOnly,
    /// A cycle that misses the deadline applies its command one period late.
    #[value(name = "delay")]
    DelayCommand,
}

/// `(alpha + beta·n_obj)·exp(sigma·Z)` milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeLatency {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl NodeLatency {
    pub fn median(&self, n_obj: usize) -> f64 {
        self.alpha + self.beta * n_obj as f64
    }

    pub fn sample<R: Rng>(&self, n_obj: usize, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.median(n_obj) * (self.sigma * z).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub perception: NodeLatency,
    pub planning: NodeLatency,
    pub control: NodeLatency,
    pub deadline_ms: f64,
    pub coupling: CouplingMode,
}

impl Default for LatencyModel {
    /// Medians sum to 20 ms + 2 ms per object, so the 100 ms deadline is
    /// crossed at 40 objects.
    fn default() -> Self {
        Self {
            perception: NodeLatency { alpha: 12.0, beta: 1.5, sigma: 0.2 },
            planning: NodeLatency { alpha: 5.0, beta: 0.4, sigma: 0.2 },
            control: NodeLatency { alpha: 3.0, beta: 0.1, sigma: 0.2 },
            deadline_ms: DEADLINE_MS,
            coupling: CouplingMode::RecordOnly,
        }
    }
}

impl LatencyModel {
    pub fn node(&self, node: NodeId) -> &NodeLatency {
        match node {
            NodeId::Perception => &self.perception,
            NodeId::Planning => &self.planning,
            NodeId::Control => &self.control,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.perception.sigma = sigma;
        self.planning.sigma = sigma;
        self.control.sigma = sigma;
        self
    }

    /// One end-to-end cycle: each node is sampled in pipeline order.
    pub fn sample_cycle<R: Rng>(&self, tick: u64, n_obj: usize, rng: &mut R) -> LatencySample {
        let perception = self.perception.sample(n_obj, rng);
        let planning = self.planning.sample(n_obj, rng);
        let control = self.control.sample(n_obj, rng);
        let e2e = perception + planning + control;
        LatencySample {
            tick,
            perception,
            planning,
            control,
            e2e,
            n_obj,
            violated: check_deadline(e2e, self.deadline_ms),
        }
    }
}

pub fn sample_node_latency<R: Rng>(model: &LatencyModel, node: NodeId, n_obj: usize, rng: &mut R) -> f64 {
    model.node(node).sample(n_obj, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub tick: u64,
    pub perception: f64,
    pub planning: f64,
    pub control: f64,
    pub e2e: f64,
    pub n_obj: usize,
    pub violated: bool,
}

pub fn check_deadline(e2e: f64, deadline_ms: f64) -> bool {
    e2e > deadline_ms
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub best: f64,
    pub mean: f64,
    pub p99: f64,
    pub violation_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no samples")]
pub struct EmptyInput;

/// Value at 1-based rank ⌈q·n⌉ of the sorted samples.
pub fn nearest_rank(sorted: &[f64], q_percent: u32) -> f64 {
    let n = sorted.len();
    let rank = (q_percent as usize * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn stats(samples: &[f64], deadline_ms: f64) -> Result<LatencyStats, EmptyInput> {
    if samples.is_empty() {
        return Err(EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let violations = samples.iter().filter(|&&x| check_deadline(x, deadline_ms)).count();
    Ok(LatencyStats {
        count: n,
        best: sorted[0],
        mean,
        p99: nearest_rank(&sorted, 99),
        violation_rate: violations as f64 / n as f64,
    })
}

pub const KL_EPSILON: f64 = 1e-9;

fn histogram(samples: &[f64], lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    for &x in samples {
        let i = if width > 0.0 { ((x - lo) / width).floor() as usize } else { 0 };
        counts[i.min(bins - 1)] += 1.0;
    }
    let n = samples.len() as f64;
    let mut p: Vec<f64> = counts.iter().map(|c| c / n + KL_EPSILON).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// KL(P‖Q) in nats between equal-width histograms over the shared range.
pub fn kl_divergence(p_samples: &[f64], q_samples: &[f64], bin_count: usize) -> f64 {
    assert!(!p_samples.is_empty() && !q_samples.is_empty(), "kl_divergence needs samples");
    assert!(bin_count >= 2, "kl_divergence needs at least two bins");
    let all = p_samples.iter().chain(q_samples);
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bin_count as f64;
    let p = histogram(p_samples, lo, width, bin_count);
    let q = histogram(q_samples, lo, width, bin_count);
    p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn degenerate_and_anchor() {
        let mut rng = stream_rng(0, Stream::Latency, 0);
        let flat = NodeLatency { alpha: 5.0, beta: 0.0, sigma: 0.0 };
        for n in [0, 10, 100] {
            assert_eq!(flat.sample(n, &mut rng), 5.0);
        }
        let anchor = NodeLatency { alpha: 20.0, beta: 2.0, sigma: 0.0 };
        assert_eq!(anchor.sample(40, &mut rng), 100.0);
        let d = LatencyModel::default();
        let medians: f64 = NodeId::ALL.iter().map(|&n| d.node(n).median(40)).sum();
        assert_eq!(medians, 100.0);
    }

    #[test]
    fn lognormal_median() {
        let m = NodeLatency { alpha: 10.0, beta: 1.0, sigma: 0.1 };
        let mut rng = stream_rng(42, Stream::Latency, 0);
        let mut xs: Vec<f64> = (0..100_000).map(|_| m.sample(10, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let med = xs[xs.len() / 2];
        assert!((med - 20.0).abs() / 20.0 < 0.01, "{med}");
    }

    #[test]
    fn stats_examples() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = stats(&xs, DEADLINE_MS).unwrap();
        assert_eq!((s.best, s.mean, s.p99), (1.0, 50.5, 99.0));
        let s = stats(&[7.0], DEADLINE_MS).unwrap();
        assert_eq!((s.best, s.mean, s.p99), (7.0, 7.0, 7.0));
        assert_eq!(stats(&[120.0; 5], DEADLINE_MS).unwrap().violation_rate, 1.0);
        assert_eq!(stats(&[100.0; 5], DEADLINE_MS).unwrap().violation_rate, 0.0);
        assert_eq!(stats(&[], DEADLINE_MS), Err(EmptyInput));
    }

    #[test]
    fn deadline_tie() {
        assert!(!check_deadline(99.9, DEADLINE_MS));
        assert!(!check_deadline(100.0, DEADLINE_MS));
        assert!(check_deadline(100.1, DEADLINE_MS));
    }

    #[test]
    fn kl_cases() {
        let p = [0.0, 1.0];
        let q = [0.0, 1.0, 1.0, 1.0];
        let want = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl_divergence(&p, &q, 2) - want).abs() < 1e-6);
        assert!((kl_divergence(&p, &q, 2) - 0.143841).abs() < 1e-6);
        assert!((kl_divergence(&q, &p, 2) - kl_divergence(&p, &q, 2)).abs() > 1e-3);
        assert!(kl_divergence(&p, &p, 2).abs() < 1e-12);
        assert!(kl_divergence(&[3.0, 3.0], &[3.0], 4).abs() < 1e-12);
    }
}
