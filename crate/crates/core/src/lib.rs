//! Multi-domain recommendation on a heterogeneous user–item graph.
//!
//! Users are shared by every domain while each item lives in exactly one
//! domain. Each convolutional layer computes two representations per node: a
//! domain-specific one that only sees neighbours from the node's own domain
//! and a domain-shared one that aggregates neighbours from every domain. The
//! two are summed at the output and scored by dot product, trained with a
//! pairwise BPR objective.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem lives in the `hgdr` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod numeric;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Direction, HeteroGraph, RelationId};
pub use model::{ModelConfig, ModelParams, Variant};
pub use numeric::Matrix;

/// Independent ChaCha8 stream `stream` of the generator seeded by `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
