//! WAV loading with path context, seed derivation and an order-preserving
//! parallel map.

use std::path::Path;

use aec_core::frontend::AudioSegment;
use aec_core::Fingerprint;

use crate::error::{Error, Result};
use crate::wav;

pub fn read(path: &Path) -> Result<AudioSegment> {
    wav::read_wav(path).map_err(|e| Error::wav(path, e))
}

pub fn write(path: &Path, seg: &AudioSegment) -> Result<()> {
    wav::write_wav(path, seg).map_err(|e| Error::wav(path, e))
}

/// Independent seed for one unit of work, derived by hashing.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut b = Fingerprint::builder().u64(seed);
    for &p in parts {
        b = b.u64(p);
    }
    u64::from_le_bytes(b.finish().0)
}

/// Maps `f` over `items` on up to `workers` threads. Output order matches
/// input order, so results do not depend on the worker count.
pub fn par_map<T: Sync, U: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<U>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Lowercase ASCII alphanumerics, everything else mapped to `_`.
pub fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}
