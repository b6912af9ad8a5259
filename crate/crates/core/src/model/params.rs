use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, Variant};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Specific-path weights of one (layer, domain).
#[derive(Debug, Clone, PartialEq)]
pub struct RelationWeights {
    /// `W_UU`, user self-transform.
    pub user_self: Matrix,
    /// `W_IU`, applied to item messages arriving at users.
    pub item_to_user: Matrix,
    /// `W_II`, item self-transform.
    pub item_self: Matrix,
    /// `W_UI`, applied to user messages arriving at items.
    pub user_to_item: Matrix,
}

/// Shared-path weights of one layer. The per-domain relation matrices are
/// empty when the model ties them to the specific path.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedWeights {
    pub user_self: Matrix,
    pub item_self: Matrix,
    pub item_to_user: Vec<Matrix>,
    pub user_to_item: Vec<Matrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    UserEmbedding,
    ItemEmbedding,
    SpecificUserSelf,
    SpecificItemToUser,
    SpecificItemSelf,
    SpecificUserToItem,
    SharedUserSelf,
    SharedItemSelf,
    SharedItemToUser,
    SharedUserToItem,
    Output,
}

impl ParamKind {
    pub fn is_shared_path(self) -> bool {
        matches!(
            self,
            ParamKind::SharedUserSelf
                | ParamKind::SharedItemSelf
                | ParamKind::SharedItemToUser
                | ParamKind::SharedUserToItem
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamName {
    pub kind: ParamKind,
    pub layer: Option<usize>,
    pub domain: Option<usize>,
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            ParamKind::UserEmbedding => "user_emb",
            ParamKind::ItemEmbedding => "item_emb",
            ParamKind::SpecificUserSelf => "spec.UU",
            ParamKind::SpecificItemToUser => "spec.IU",
            ParamKind::SpecificItemSelf => "spec.II",
            ParamKind::SpecificUserToItem => "spec.UI",
            ParamKind::SharedUserSelf => "shared.UU",
            ParamKind::SharedItemSelf => "shared.II",
            ParamKind::SharedItemToUser => "shared.IU",
            ParamKind::SharedUserToItem => "shared.UI",
            ParamKind::Output => "out",
        };
        f.write_str(label)?;
        if let Some(l) = self.layer {
            write!(f, "[l{l}]")?;
        }
        if let Some(d) = self.domain {
            write!(f, "[d{d}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// One shared table for graph variants, one per domain for MF.
    pub user_embeddings: Vec<Matrix>,
    /// One table per domain.
    pub item_embeddings: Vec<Matrix>,
    /// Indexed `[layer][domain]`; empty without the specific path.
    pub specific: Vec<Vec<RelationWeights>>,
    /// Indexed by layer; empty without the shared path.
    pub shared: Vec<SharedWeights>,
    /// User output transforms, one per domain; empty for MF.
    pub output: Vec<Matrix>,
}

impl ModelParams {
    /// All-zero parameters with the layout implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let k = config.dim;
        let nd = config.num_domains();
        let sq = || Matrix::zeros(k, k);
        let user_tables = if config.variant == Variant::Mf { nd } else { 1 };
        let user_embeddings = (0..user_tables)
            .map(|_| Matrix::zeros(config.num_users, k))
            .collect();
        let item_embeddings = config
            .items_per_domain
            .iter()
            .map(|&n| Matrix::zeros(n, k))
            .collect();
        let graph_layers = if config.variant.is_graph() {
            config.layers
        } else {
            0
        };
        let specific = if config.variant.has_specific() {
            (0..graph_layers)
                .map(|_| {
                    (0..nd)
                        .map(|_| RelationWeights {
                            user_self: sq(),
                            item_to_user: sq(),
                            item_self: sq(),
                            user_to_item: sq(),
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let per_domain_shared = if config.tie_relation_weights { 0 } else { nd };
        let shared = if config.variant.has_shared() {
            (0..graph_layers)
                .map(|_| SharedWeights {
                    user_self: sq(),
                    item_self: sq(),
                    item_to_user: (0..per_domain_shared).map(|_| sq()).collect(),
                    user_to_item: (0..per_domain_shared).map(|_| sq()).collect(),
                })
                .collect()
        } else {
            Vec::new()
        };
        let output = if config.variant.is_graph() {
            (0..nd).map(|_| sq()).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            config: config.clone(),
            user_embeddings,
            item_embeddings,
            specific,
            shared,
            output,
        })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|_, m| m.fill(0.0));
        z
    }

    /// Every matrix in the canonical order used by checkpoints and the
    /// optimiser: user embeddings, item embeddings, specific weights by
    /// (layer, domain, UU/IU/II/UI), shared weights by layer (UU, II, IU per
    /// domain, UI per domain), output transforms.
    pub fn entries(&self) -> Vec<(ParamName, &Matrix)> {
        use ParamKind::*;
        let name = |kind, layer, domain| ParamName {
            kind,
            layer,
            domain,
        };
        let mut out = Vec::new();
        let per_domain_users = self.user_embeddings.len() > 1;
        for (d, m) in self.user_embeddings.iter().enumerate() {
            out.push((name(UserEmbedding, None, per_domain_users.then_some(d)), m));
        }
        for (d, m) in self.item_embeddings.iter().enumerate() {
            out.push((name(ItemEmbedding, None, Some(d)), m));
        }
        for (l, layer) in self.specific.iter().enumerate() {
            for (d, w) in layer.iter().enumerate() {
                out.push((name(SpecificUserSelf, Some(l), Some(d)), &w.user_self));
                out.push((name(SpecificItemToUser, Some(l), Some(d)), &w.item_to_user));
                out.push((name(SpecificItemSelf, Some(l), Some(d)), &w.item_self));
                out.push((name(SpecificUserToItem, Some(l), Some(d)), &w.user_to_item));
            }
        }
        for (l, s) in self.shared.iter().enumerate() {
            out.push((name(SharedUserSelf, Some(l), None), &s.user_self));
            out.push((name(SharedItemSelf, Some(l), None), &s.item_self));
            for (d, m) in s.item_to_user.iter().enumerate() {
                out.push((name(SharedItemToUser, Some(l), Some(d)), m));
            }
            for (d, m) in s.user_to_item.iter().enumerate() {
                out.push((name(SharedUserToItem, Some(l), Some(d)), m));
            }
        }
        for (d, m) in self.output.iter().enumerate() {
            out.push((name(Output, None, Some(d)), m));
        }
        out
    }

    /// Mutable twin of [`ModelParams::entries`], same order.
    pub fn entries_mut(&mut self) -> Vec<(ParamName, &mut Matrix)> {
        use ParamKind::*;
        let name = |kind, layer, domain| ParamName {
            kind,
            layer,
            domain,
        };
        let mut out = Vec::new();
        let per_domain_users = self.user_embeddings.len() > 1;
        for (d, m) in self.user_embeddings.iter_mut().enumerate() {
            out.push((name(UserEmbedding, None, per_domain_users.then_some(d)), m));
        }
        for (d, m) in self.item_embeddings.iter_mut().enumerate() {
            out.push((name(ItemEmbedding, None, Some(d)), m));
        }
        for (l, layer) in self.specific.iter_mut().enumerate() {
            for (d, w) in layer.iter_mut().enumerate() {
                out.push((name(SpecificUserSelf, Some(l), Some(d)), &mut w.user_self));
                out.push((name(SpecificItemToUser, Some(l), Some(d)), &mut w.item_to_user));
                out.push((name(SpecificItemSelf, Some(l), Some(d)), &mut w.item_self));
                out.push((name(SpecificUserToItem, Some(l), Some(d)), &mut w.user_to_item));
            }
        }
        for (l, s) in self.shared.iter_mut().enumerate() {
            out.push((name(SharedUserSelf, Some(l), None), &mut s.user_self));
            out.push((name(SharedItemSelf, Some(l), None), &mut s.item_self));
            for (d, m) in s.item_to_user.iter_mut().enumerate() {
                out.push((name(SharedItemToUser, Some(l), Some(d)), m));
            }
            for (d, m) in s.user_to_item.iter_mut().enumerate() {
                out.push((name(SharedUserToItem, Some(l), Some(d)), m));
            }
        }
        for (d, m) in self.output.iter_mut().enumerate() {
            out.push((name(Output, None, Some(d)), m));
        }
        out
    }

    pub fn for_each(&self, mut f: impl FnMut(ParamName, &Matrix)) {
        for (n, m) in self.entries() {
            f(n, m);
        }
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(ParamName, &mut Matrix)) {
        for (n, m) in self.entries_mut() {
            f(n, m);
        }
    }

    pub fn matrices(&self) -> Vec<&Matrix> {
        self.entries().into_iter().map(|(_, m)| m).collect()
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        self.entries_mut().into_iter().map(|(_, m)| m).collect()
    }

    pub fn names(&self) -> Vec<ParamName> {
        let mut out = Vec::new();
        self.for_each(|n, _| out.push(n));
        out
    }

    pub fn num_matrices(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, _| n += 1);
        n
    }

    pub fn num_scalars(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, m| n += m.as_slice().len());
        n
    }

    /// `‖θ‖²` over every parameter.
    pub fn squared_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each(|_, m| acc += m.squared_norm());
        acc
    }

    /// `self += alpha · other` for a parameter set of the same layout.
    pub fn axpy(&mut self, alpha: f64, other: &ModelParams) -> Result<()> {
        let others = other.matrices();
        let mine = self.matrices_mut();
        if mine.len() != others.len() {
            return Err(Error::Data("parameter layouts differ".into()));
        }
        for (m, o) in mine.into_iter().zip(others) {
            m.axpy(alpha, o)?;
        }
        Ok(())
    }

    /// Matrix shapes in canonical order.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.for_each(|_, m| out.push(m.shape()));
        out
    }

    /// Zeroes every shared-path matrix (the untied relation and self
    /// transforms of the shared convolution).
    pub fn zero_shared_path(&mut self) {
        self.for_each_mut(|n, m| {
            if n.kind.is_shared_path() {
                m.fill(0.0);
            }
        });
    }

    pub fn validate(&self) -> Result<()> {
        let reference = ModelParams::zeros(&self.config)?;
        if reference.shapes() != self.shapes() {
            return Err(Error::Data("parameter shapes do not match configuration".into()));
        }
        self.matrices().into_iter().try_for_each(Matrix::validate)
    }
}

/// Embeddings ~ U(−1/√K, 1/√K); weight matrices ~ U(−b, b) with
/// `b = √(6 / (K + K))`. Draws follow the canonical matrix order from a
/// ChaCha8 stream seeded with `seed`.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(config)?;
    let k = config.dim as f64;
    let emb_bound = 1.0 / libm::sqrt(k);
    let weight_bound = libm::sqrt(6.0 / (k + k));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    params.for_each_mut(|name, m| {
        let bound = match name.kind {
            ParamKind::UserEmbedding | ParamKind::ItemEmbedding => emb_bound,
            _ => weight_bound,
        };
        for x in m.as_mut_slice() {
            *x = rng.random_range(-bound..bound);
        }
    });
    Ok(params)
}
