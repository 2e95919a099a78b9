use crate::scenario::{serialize, ResolvedConfig};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 step: advance by the golden gamma, then mix.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, config_hash: u64, trial_index: u64) -> u64 {
    splitmix64(master ^ config_hash ^ trial_index.wrapping_mul(GOLDEN))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of the canonical text of the resolved scenario.
pub fn config_hash(config: &ResolvedConfig) -> u64 {
    fnv1a64(serialize(&config.scenario).as_bytes())
}
