//! The disentangled heterogeneous-graph network.
//!
//! Per layer `l` and domain `d` the domain-specific path computes
//!
//! ```text
//! h_u[d, l+1] = ReLU(h_u[d, l] · W_UU[d, l] + Σ_{i ∈ N_u^d} h_i[d, l] · W_IU[d, l])
//! h_i[d, l+1] = ReLU(h_i[d, l] · W_II[d, l] + Σ_{u ∈ N_i^d} h_u[d, l] · W_UI[d, l])
//! ```
//!
//! while the domain-shared path keeps one user representation fed by every
//! domain:
//!
//! ```text
//! g_u[l+1]    = ReLU(g_u[l] · S_UU[l] + Σ_d Σ_{i ∈ N_u^d} g_i[d, l] · S_IU[d, l])
//! g_i[d, l+1] = ReLU(g_i[d, l] · S_II[l] + Σ_{u ∈ N_i^d} g_u[l] · S_UI[d, l])
//! ```
//!
//! Outputs are `o_u^d = (h_u[d, L] + g_u[L]) · W_out[d]` and
//! `o_i^d = h_i[d, L] + g_i[d, L]`; a user–item score is `o_u^d · o_i^d`.
//! Both paths start from the same ID embeddings.

mod backward;
mod forward;
mod params;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use backward::backward;
pub use forward::{
    aggregate, forward, forward_output, forward_shared_layer, forward_specific_layer, score,
    Activations, SharedLayerOutput, SpecificLayerOutput,
};
pub use params::{init_params, ModelParams, ParamKind, ParamName, RelationWeights, SharedWeights};

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;

/// Which parts of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Specific and shared paths, fused at the output.
    Full,
    /// Per-domain relational message passing only (no shared path).
    SpecificOnly,
    /// Shared path only.
    SharedOnly,
    /// Independent per-domain matrix factorisation, no graph.
    Mf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::SpecificOnly,
        Variant::SharedOnly,
        Variant::Mf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::SpecificOnly => "specific_only",
            Variant::SharedOnly => "shared_only",
            Variant::Mf => "mf",
        }
    }

    pub fn has_specific(self) -> bool {
        matches!(self, Variant::Full | Variant::SpecificOnly)
    }

    pub fn has_shared(self) -> bool {
        matches!(self, Variant::Full | Variant::SharedOnly)
    }

    pub fn is_graph(self) -> bool {
        self != Variant::Mf
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub num_users: usize,
    pub items_per_domain: Vec<usize>,
    /// Embedding dimension `K`.
    pub dim: usize,
    /// Number of convolutional layers `L`.
    pub layers: usize,
    pub variant: Variant,
    /// Reuse the specific path's IU/UI matrices inside the shared path.
    pub tie_relation_weights: bool,
    /// Divide each neighbour sum by the target's degree in that relation.
    pub mean_aggregation: bool,
}

impl ModelConfig {
    pub const DEFAULT_DIM: usize = 128;
    pub const DEFAULT_LAYERS: usize = 2;

    pub fn new(num_users: usize, items_per_domain: Vec<usize>) -> Self {
        Self {
            num_users,
            items_per_domain,
            dim: Self::DEFAULT_DIM,
            layers: Self::DEFAULT_LAYERS,
            variant: Variant::Full,
            tie_relation_weights: false,
            mean_aggregation: false,
        }
    }

    pub fn for_graph(graph: &HeteroGraph) -> Self {
        Self::new(graph.num_users(), graph.items_per_domain().to_vec())
    }

    pub fn num_domains(&self) -> usize {
        self.items_per_domain.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.items_per_domain.is_empty() {
            return Err(Error::Config("at least one domain is required".into()));
        }
        if self.tie_relation_weights && self.variant == Variant::SharedOnly {
            return Err(Error::Config(
                "tie_relation_weights needs the specific path; not available in shared_only".into(),
            ));
        }
        Ok(())
    }

    pub fn check_graph(&self, graph: &HeteroGraph) -> Result<()> {
        if graph.num_users() != self.num_users || graph.items_per_domain() != &self.items_per_domain[..]
        {
            return Err(Error::Data(format!(
                "graph has {} users / items {:?}, model expects {} / {:?}",
                graph.num_users(),
                graph.items_per_domain(),
                self.num_users,
                self.items_per_domain
            )));
        }
        Ok(())
    }
}
