//! Bit-flip and stuck-at faults on registered pipeline state.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{Banks, ManifestEntry, NodeId, StateHook};

/// The bit pattern of `value` with bit `bit` inverted.
pub fn flip_bit(value: f64, bit: u32) -> f64 {
    f64::from_bits(value.to_bits() ^ (1u64 << bit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FaultMode {
    Flip,
    Stuck { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub node: NodeId,
    pub state_index: u32,
    pub bit: u32,
    pub trigger_tick: u64,
    #[serde(flatten)]
    pub mode: FaultMode,
}

/// One executed injection. Values are kept as raw bit patterns so NaN
/// payloads survive serialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultLogEntry {
    pub tick: u64,
    pub node: NodeId,
    pub state_index: u32,
    pub bit: u32,
    pub mode: String,
    pub before_bits: u64,
    pub after_bits: u64,
    pub before: String,
    pub after: String,
}

impl FaultLogEntry {
    pub fn value_before(&self) -> f64 {
        f64::from_bits(self.before_bits)
    }

    pub fn value_after(&self) -> f64 {
        f64::from_bits(self.after_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultError {
    #[error("no register {index} in the {node:?} manifest")]
    InvalidAddress { node: NodeId, index: u32 },
    #[error("bit {0} is outside [0, 63]")]
    BadBit(u32),
    #[error("the {0:?} manifest is empty")]
    EmptyManifest(NodeId),
}

fn check(banks: &Banks, spec: &FaultSpec) -> Result<(), FaultError> {
    if spec.bit > 63 {
        return Err(FaultError::BadBit(spec.bit));
    }
    if banks.get(spec.node, spec.state_index as usize).is_none() {
        return Err(FaultError::InvalidAddress { node: spec.node, index: spec.state_index });
    }
    Ok(())
}

/// Applies one fault to the banks and returns its log entry.
pub fn inject(banks: &mut Banks, spec: &FaultSpec, tick: u64) -> Result<FaultLogEntry, FaultError> {
    check(banks, spec)?;
    let slot = banks.get_mut(spec.node, spec.state_index as usize).expect("checked");
    let before = *slot;
    let (after, mode) = match spec.mode {
        FaultMode::Flip => (flip_bit(before, spec.bit), "flip"),
        FaultMode::Stuck { value } => (value, "stuck"),
    };
    *slot = after;
    Ok(FaultLogEntry {
        tick,
        node: spec.node,
        state_index: spec.state_index,
        bit: spec.bit,
        mode: mode.to_string(),
        before_bits: before.to_bits(),
        after_bits: after.to_bits(),
        before: before.to_string(),
        after: after.to_string(),
    })
}

/// `count` flips on `node` with uniformly drawn register, bit and tick.
pub fn schedule_faults<R: Rng>(
    node: NodeId,
    count: u32,
    tick_range: (u64, u64),
    rng: &mut R,
    manifest: &[ManifestEntry],
) -> Result<Vec<FaultSpec>, FaultError> {
    let regs: Vec<u32> = manifest.iter().filter(|e| e.node == node).map(|e| e.index).collect();
    if count == 0 {
        return Ok(Vec::new());
    }
    if regs.is_empty() {
        return Err(FaultError::EmptyManifest(node));
    }
    let (lo, hi) = tick_range;
    Ok((0..count)
        .map(|_| FaultSpec {
            node,
            state_index: regs[rng.random_range(0..regs.len())],
            bit: rng.random_range(0..64),
            trigger_tick: rng.random_range(lo..=hi),
            mode: FaultMode::Flip,
        })
        .collect())
}

/// Executes a fault schedule during a trial: injections happen at the start
/// of their trigger tick; stuck-at values are re-asserted at every tick start
/// and after every node from then on.
#[derive(Debug, Clone, Default)]
pub struct Injector {
    pending: Vec<FaultSpec>,
    next: usize,
    stuck: Vec<(NodeId, usize, f64)>,
    pub log: Vec<FaultLogEntry>,
}

impl Injector {
    /// Validates every address against the banks up front.
    pub fn new(mut specs: Vec<FaultSpec>, banks: &Banks) -> Result<Self, FaultError> {
        for s in &specs {
            check(banks, s)?;
        }
        specs.sort_by_key(|s| s.trigger_tick);
        Ok(Self { pending: specs, ..Default::default() })
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    fn enforce(&self, banks: &mut Banks, node: Option<NodeId>) {
        for &(n, i, v) in &self.stuck {
            if node.is_none_or(|x| x == n) {
                if let Some(slot) = banks.get_mut(n, i) {
                    *slot = v;
                }
            }
        }
    }
}

impl StateHook for Injector {
    fn before_tick(&mut self, tick: u64, banks: &mut Banks) {
        while self.next < self.pending.len() && self.pending[self.next].trigger_tick <= tick {
            let spec = self.pending[self.next];
            self.next += 1;
            if spec.trigger_tick < tick {
                continue;
            }
            let entry = inject(banks, &spec, tick).expect("validated at construction");
            if let FaultMode::Stuck { value } = spec.mode {
                self.stuck.push((spec.node, spec.state_index as usize, value));
            }
            self.log.push(entry);
        }
        self.enforce(banks, None);
    }

    fn after_node(&mut self, _tick: u64, node: NodeId, banks: &mut Banks) {
        self.enforce(banks, Some(node));
    }
}
