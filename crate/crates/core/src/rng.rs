//! Counter-based random streams.
//!
//! A ChaCha key is derived from `(master seed, replicate, domain)`; within a
//! replicate, chunk `c` of a noise tensor is drawn from ChaCha stream `c`.
//! Any piece of any replicate can therefore be regenerated independently of
//! evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::exec::Execution;

/// Normals drawn per ChaCha stream.
pub const NOISE_CHUNK: usize = 4096;

/// Stream domains, so unrelated consumers of one seed never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    SheetNoise = 0x5348_4545_544e_4f49,
}

pub fn stream_key(seed: u64, replicate: u64, domain: Domain) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    key[16..24].copy_from_slice(&(domain as u64).to_le_bytes());
    key[24..].copy_from_slice(b"sheetchg");
    key
}

/// The generator for stream `stream` of `(seed, replicate, domain)`.
pub fn stream_rng(seed: u64, replicate: u64, domain: Domain, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(stream_key(seed, replicate, domain));
    rng.set_stream(stream);
    rng
}

/// Fills `out` with iid standard normals for `(seed, replicate)`.
pub fn fill_standard_normal(seed: u64, replicate: u64, out: &mut [f64], exec: Execution) {
    exec.for_each_chunk(out, NOISE_CHUNK, |c, chunk| {
        let mut rng = stream_rng(seed, replicate, Domain::SheetNoise, c as u64);
        for v in chunk.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    });
}
