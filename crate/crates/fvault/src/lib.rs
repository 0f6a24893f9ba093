//! Files, datasets, evaluation runs and timed attacks on top of
//! [`fvault_core`].

pub mod attack;
pub mod codec;
pub mod format;
pub mod harness;
pub mod synth;
pub mod tables;

/// Mixes a list of integers into one seed (splitmix64 finalizer over a
/// running state), so per-trial seeds depend only on their indices.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        state = splitmix(state ^ p);
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker pool of `cores` threads (at least one).
pub fn pool(cores: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cores.max(1))
        .build()
        .expect("thread pool")
}
