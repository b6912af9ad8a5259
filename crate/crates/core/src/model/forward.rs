use alloc::vec::Vec;

use super::{ModelParams, RelationWeights, SharedWeights, Variant};
use crate::error::{Error, Result};
use crate::graph::{Csr, HeteroGraph};
use crate::numeric::{dot, matmul, relu, segment_sum, Matrix};

/// Neighbour sum over `csr` (targets × sources), optionally divided by each
/// target's degree.
pub fn aggregate(rows: &Matrix, csr: &Csr, mean: bool) -> Result<Matrix> {
    let mut out = segment_sum(rows, &csr.offsets, &csr.indices)?;
    if mean {
        scale_by_inverse_degree(&mut out, csr);
    }
    Ok(out)
}

pub(super) fn scale_by_inverse_degree(m: &mut Matrix, csr: &Csr) {
    for t in 0..csr.num_targets() {
        let deg = csr.degree(t);
        if deg > 1 {
            let inv = 1.0 / deg as f64;
            m.row_mut(t).iter_mut().for_each(|x| *x *= inv);
        }
    }
}

/// Pre-activations, aggregated neighbour rows and outputs of one specific
/// layer in one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecificLayerOutput {
    pub user_agg: Matrix,
    pub item_agg: Matrix,
    pub user_pre: Matrix,
    pub item_pre: Matrix,
    pub user: Matrix,
    pub item: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedLayerOutput {
    /// Per domain, item rows summed onto users.
    pub user_aggs: Vec<Matrix>,
    /// Per domain, user rows summed onto that domain's items.
    pub item_aggs: Vec<Matrix>,
    pub user_pre: Matrix,
    pub item_pre: Vec<Matrix>,
    pub user: Matrix,
    pub items: Vec<Matrix>,
}

fn add(mut a: Matrix, b: &Matrix) -> Result<Matrix> {
    a.add_assign(b)?;
    Ok(a)
}

/// One domain-specific layer. Users only hear from items of `domain` and
/// vice versa; isolated nodes keep just their self term.
pub fn forward_specific_layer(
    graph: &HeteroGraph,
    domain: usize,
    user: &Matrix,
    item: &Matrix,
    weights: &RelationWeights,
    mean: bool,
) -> Result<SpecificLayerOutput> {
    let user_agg = aggregate(item, graph.item_to_user(domain), mean)?;
    let item_agg = aggregate(user, graph.user_to_item(domain), mean)?;
    let user_pre = add(
        matmul(user, &weights.user_self)?,
        &matmul(&user_agg, &weights.item_to_user)?,
    )?;
    let item_pre = add(
        matmul(item, &weights.item_self)?,
        &matmul(&item_agg, &weights.user_to_item)?,
    )?;
    Ok(SpecificLayerOutput {
        user: relu(&user_pre),
        item: relu(&item_pre),
        user_agg,
        item_agg,
        user_pre,
        item_pre,
    })
}

/// One domain-shared layer. The user update sums messages from every
/// domain in ascending domain order.
pub fn forward_shared_layer(
    graph: &HeteroGraph,
    user: &Matrix,
    items: &[Matrix],
    weights: &SharedWeights,
    item_to_user: &[&Matrix],
    user_to_item: &[&Matrix],
    mean: bool,
) -> Result<SharedLayerOutput> {
    let nd = graph.num_domains();
    if items.len() != nd || item_to_user.len() != nd || user_to_item.len() != nd {
        return Err(Error::Data(alloc::format!(
            "shared layer needs {nd} domains of inputs"
        )));
    }
    let mut user_aggs = Vec::with_capacity(nd);
    let mut item_aggs = Vec::with_capacity(nd);
    let mut item_pre = Vec::with_capacity(nd);
    let mut user_pre = matmul(user, &weights.user_self)?;
    for d in 0..nd {
        let ua = aggregate(&items[d], graph.item_to_user(d), mean)?;
        user_pre.add_assign(&matmul(&ua, item_to_user[d])?)?;
        user_aggs.push(ua);
        let ia = aggregate(user, graph.user_to_item(d), mean)?;
        item_pre.push(add(
            matmul(&items[d], &weights.item_self)?,
            &matmul(&ia, user_to_item[d])?,
        )?);
        item_aggs.push(ia);
    }
    Ok(SharedLayerOutput {
        user: relu(&user_pre),
        items: item_pre.iter().map(relu).collect(),
        user_aggs,
        item_aggs,
        user_pre,
        item_pre,
    })
}

/// Fuses the two paths for one domain. Returns `(h + g, o_u, o_i)` where
/// `o_u = (h_u + g_u) · W_out` and `o_i = h_i + g_i`; a missing path counts
/// as zero.
pub fn forward_output(
    specific_user: Option<&Matrix>,
    shared_user: Option<&Matrix>,
    specific_item: Option<&Matrix>,
    shared_item: Option<&Matrix>,
    output: &Matrix,
) -> Result<(Matrix, Matrix, Matrix)> {
    let fuse = |a: Option<&Matrix>, b: Option<&Matrix>| -> Result<Matrix> {
        match (a, b) {
            (Some(a), Some(b)) => a.add(b),
            (Some(x), None) | (None, Some(x)) => Ok(x.clone()),
            (None, None) => Err(Error::Data("output fusion without any path".into())),
        }
    };
    let fused = fuse(specific_user, shared_user)?;
    let user_out = matmul(&fused, output)?;
    let item_out = fuse(specific_item, shared_item)?;
    Ok((fused, user_out, item_out))
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub variant: Variant,
    /// Indexed `[domain][layer]`.
    pub specific: Vec<Vec<SpecificLayerOutput>>,
    /// Indexed by layer.
    pub shared: Vec<SharedLayerOutput>,
    /// Per domain `h_u + g_u` before the output transform.
    pub fused_user: Vec<Matrix>,
    pub user_out: Vec<Matrix>,
    pub item_out: Vec<Matrix>,
}

impl Activations {
    /// Specific-path user representation entering layer `layer`.
    pub(super) fn specific_user_input<'a>(
        &'a self,
        params: &'a ModelParams,
        domain: usize,
        layer: usize,
    ) -> &'a Matrix {
        if layer == 0 {
            &params.user_embeddings[0]
        } else {
            &self.specific[domain][layer - 1].user
        }
    }

    pub(super) fn specific_item_input<'a>(
        &'a self,
        params: &'a ModelParams,
        domain: usize,
        layer: usize,
    ) -> &'a Matrix {
        if layer == 0 {
            &params.item_embeddings[domain]
        } else {
            &self.specific[domain][layer - 1].item
        }
    }

    pub(super) fn shared_user_input<'a>(&'a self, params: &'a ModelParams, layer: usize) -> &'a Matrix {
        if layer == 0 {
            &params.user_embeddings[0]
        } else {
            &self.shared[layer - 1].user
        }
    }

    pub(super) fn shared_item_input<'a>(
        &'a self,
        params: &'a ModelParams,
        domain: usize,
        layer: usize,
    ) -> &'a Matrix {
        if layer == 0 {
            &params.item_embeddings[domain]
        } else {
            &self.shared[layer - 1].items[domain]
        }
    }

    /// Score of `item` for `user` in `domain`.
    pub fn score(&self, domain: usize, user: usize, item: usize) -> f64 {
        let u = self.user_out[domain].row(user);
        let i = self.item_out[domain].row(item);
        u.iter().zip(i).map(|(a, b)| a * b).sum()
    }
}

/// Relation matrices used by the shared path at `layer`, honouring weight
/// tying.
pub(super) fn shared_relations(params: &ModelParams, layer: usize) -> (Vec<&Matrix>, Vec<&Matrix>) {
    if params.config.tie_relation_weights {
        let spec = &params.specific[layer];
        (
            spec.iter().map(|w| &w.item_to_user).collect(),
            spec.iter().map(|w| &w.user_to_item).collect(),
        )
    } else {
        let s = &params.shared[layer];
        (s.item_to_user.iter().collect(), s.user_to_item.iter().collect())
    }
}

/// Full-graph forward pass for every user and item of every domain.
pub fn forward(params: &ModelParams, graph: &HeteroGraph) -> Result<Activations> {
    let cfg = &params.config;
    cfg.check_graph(graph)?;
    let nd = cfg.num_domains();
    let variant = cfg.variant;
    if variant == Variant::Mf {
        return Ok(Activations {
            variant,
            specific: Vec::new(),
            shared: Vec::new(),
            fused_user: Vec::new(),
            user_out: params.user_embeddings.clone(),
            item_out: params.item_embeddings.clone(),
        });
    }
    let layers = cfg.layers;
    let mean = cfg.mean_aggregation;
    let user_emb = &params.user_embeddings[0];

    let mut specific: Vec<Vec<SpecificLayerOutput>> = Vec::new();
    if variant.has_specific() {
        for d in 0..nd {
            let mut per_layer: Vec<SpecificLayerOutput> = Vec::with_capacity(layers);
            for l in 0..layers {
                let (u, i) = match per_layer.last() {
                    Some(prev) => (&prev.user, &prev.item),
                    None => (user_emb, &params.item_embeddings[d]),
                };
                let out = forward_specific_layer(graph, d, u, i, &params.specific[l][d], mean)?;
                per_layer.push(out);
            }
            specific.push(per_layer);
        }
    }

    let mut shared: Vec<SharedLayerOutput> = Vec::new();
    if variant.has_shared() {
        for l in 0..layers {
            let (iu, ui) = shared_relations(params, l);
            let out = match shared.last() {
                Some(prev) => forward_shared_layer(
                    graph,
                    &prev.user,
                    &prev.items,
                    &params.shared[l],
                    &iu,
                    &ui,
                    mean,
                )?,
                None => forward_shared_layer(
                    graph,
                    user_emb,
                    &params.item_embeddings,
                    &params.shared[l],
                    &iu,
                    &ui,
                    mean,
                )?,
            };
            shared.push(out);
        }
    }

    let mut fused_user = Vec::with_capacity(nd);
    let mut user_out = Vec::with_capacity(nd);
    let mut item_out = Vec::with_capacity(nd);
    for d in 0..nd {
        let (spec_u, spec_i) = if variant.has_specific() {
            match specific[d].last() {
                Some(last) => (Some(&last.user), Some(&last.item)),
                None => (Some(user_emb), Some(&params.item_embeddings[d])),
            }
        } else {
            (None, None)
        };
        let (sh_u, sh_i) = if variant.has_shared() {
            match shared.last() {
                Some(last) => (Some(&last.user), Some(&last.items[d])),
                None => (Some(user_emb), Some(&params.item_embeddings[d])),
            }
        } else {
            (None, None)
        };
        let (fused, ou, oi) = forward_output(spec_u, sh_u, spec_i, sh_i, &params.output[d])?;
        fused_user.push(fused);
        user_out.push(ou);
        item_out.push(oi);
    }
    Ok(Activations {
        variant,
        specific,
        shared,
        fused_user,
        user_out,
        item_out,
    })
}

/// Dot-product preference of a user output row and an item output row.
pub fn score(user_row: &[f64], item_row: &[f64]) -> Result<f64> {
    dot(user_row, item_row)
}
