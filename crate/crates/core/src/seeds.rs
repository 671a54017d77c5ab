//! Seed mixing shared by generators and the trial harness.

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on `u64`.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`:
/// `splitmix64(master ^ splitmix64(index))`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// Independent sub-stream of a trial seed, e.g. `stream = 1` for the
/// algorithm's RNG when `stream = 0` built the instance.
pub fn substream(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}
