//! Counter-based seed derivation.
//!
//! Every random quantity in the crate is drawn from a stream whose seed is a
//! pure function of a master seed, a component tag and a tuple of indices.
//! Nothing depends on the order in which streams are consumed, so parallel and
//! sequential executions produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Component tags keeping the seed domains of different consumers disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Tag {
    Codeword = 0x636f_6465_776f_7264,
    JammerKey = 0x6a61_6d6d_6572_6b79,
    TrialJammer = 0x7472_6a61_6d6d_6572,
    TrialKey = 0x7472_6b65_7900_0000,
    TrialNoise = 0x7472_6e6f_6973_6500,
    TrialEnsemble = 0x7472_656e_7365_6d62,
    TrialMessage = 0x7472_6d65_7373_6167,
    MessageSample = 0x6d73_6773_616d_706c,
    Sweep = 0x7377_6565_7000_0000,
    Search = 0x7365_6172_6368_0000,
    Verify = 0x7665_7269_6679_0000,
    Experiment = 0x6578_7065_7269_6d74,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed, a tag and a list of indices into a 64-bit seed.
pub fn derive_seed(master: u64, tag: Tag, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(tag as u64));
    for &w in indices {
        h = splitmix64(h ^ splitmix64(w.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    h
}

/// Splits a 128-bit index into two mixing words.
#[inline]
pub fn wide(index: u128) -> [u64; 2] {
    [index as u64, (index >> 64) as u64]
}

/// Opens the stream identified by `(master, tag, indices)`.
pub fn stream(master: u64, tag: Tag, indices: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, tag, indices))
}
