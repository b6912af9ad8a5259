use alloc::vec::Vec;

use super::forward::{scale_by_inverse_degree, shared_relations, Activations};
use super::{ModelParams, Variant};
use crate::error::{Error, Result};
use crate::graph::{Csr, HeteroGraph};
use crate::numeric::{matmul_nt, matmul_tn, relu_backward, segment_sum, Matrix};

/// Reverse of [`super::aggregate`]: scatters gradients on the aggregated
/// rows back to the source rows through the transposed adjacency.
fn scatter(grad_agg: Matrix, forward: &Csr, transposed: &Csr, mean: bool) -> Result<Matrix> {
    let mut g = grad_agg;
    if mean {
        scale_by_inverse_degree(&mut g, forward);
    }
    segment_sum(&g, &transposed.offsets, &transposed.indices)
}

fn accumulate(into: &mut Matrix, delta: &Matrix) -> Result<()> {
    into.add_assign(delta)
}

/// Gradients of a scalar loss with respect to every parameter, given the
/// loss gradients at the per-domain outputs `o_u^d` and `o_i^d`.
///
/// Shared-path gradients are accumulated over domains in ascending order.
pub fn backward(
    params: &ModelParams,
    graph: &HeteroGraph,
    acts: &Activations,
    grad_user_out: &[Matrix],
    grad_item_out: &[Matrix],
) -> Result<ModelParams> {
    let cfg = &params.config;
    cfg.check_graph(graph)?;
    let nd = cfg.num_domains();
    let variant = cfg.variant;
    if grad_user_out.len() != nd || grad_item_out.len() != nd {
        return Err(Error::Data(alloc::format!(
            "expected output gradients for {nd} domains"
        )));
    }
    check_caches(params, acts)?;
    let mut grads = params.zeros_like();

    if variant == Variant::Mf {
        for d in 0..nd {
            accumulate(&mut grads.user_embeddings[d], &grad_user_out[d])?;
            accumulate(&mut grads.item_embeddings[d], &grad_item_out[d])?;
        }
        return Ok(grads);
    }

    let layers = cfg.layers;
    let mean = cfg.mean_aggregation;

    // Output fusion.
    let mut spec_user_grad: Vec<Matrix> = Vec::new();
    let mut spec_item_grad: Vec<Matrix> = Vec::new();
    let mut shared_user_grad = Matrix::zeros(cfg.num_users, cfg.dim);
    let mut shared_item_grad: Vec<Matrix> = Vec::new();
    for d in 0..nd {
        grads.output[d] = matmul_tn(&acts.fused_user[d], &grad_user_out[d])?;
        let grad_fused = matmul_nt(&grad_user_out[d], &params.output[d])?;
        if variant.has_shared() {
            accumulate(&mut shared_user_grad, &grad_fused)?;
            shared_item_grad.push(grad_item_out[d].clone());
        }
        if variant.has_specific() {
            spec_user_grad.push(grad_fused);
            spec_item_grad.push(grad_item_out[d].clone());
        }
    }

    if variant.has_specific() {
        for d in 0..nd {
            let iu = graph.item_to_user(d);
            let ui = graph.user_to_item(d);
            let mut gu = core::mem::replace(&mut spec_user_grad[d], Matrix::zeros(0, 0));
            let mut gi = core::mem::replace(&mut spec_item_grad[d], Matrix::zeros(0, 0));
            for l in (0..layers).rev() {
                let cache = &acts.specific[d][l];
                let w = &params.specific[l][d];
                let user_in = acts.specific_user_input(params, d, l);
                let item_in = acts.specific_item_input(params, d, l);
                let pre_u = relu_backward(&cache.user_pre, &gu)?;
                let pre_i = relu_backward(&cache.item_pre, &gi)?;

                let gw = &mut grads.specific[l][d];
                accumulate(&mut gw.user_self, &matmul_tn(user_in, &pre_u)?)?;
                accumulate(&mut gw.item_to_user, &matmul_tn(&cache.user_agg, &pre_u)?)?;
                accumulate(&mut gw.item_self, &matmul_tn(item_in, &pre_i)?)?;
                accumulate(&mut gw.user_to_item, &matmul_tn(&cache.item_agg, &pre_i)?)?;

                let mut next_u = matmul_nt(&pre_u, &w.user_self)?;
                next_u.add_assign(&scatter(matmul_nt(&pre_i, &w.user_to_item)?, ui, iu, mean)?)?;
                let mut next_i = matmul_nt(&pre_i, &w.item_self)?;
                next_i.add_assign(&scatter(matmul_nt(&pre_u, &w.item_to_user)?, iu, ui, mean)?)?;
                gu = next_u;
                gi = next_i;
            }
            accumulate(&mut grads.user_embeddings[0], &gu)?;
            accumulate(&mut grads.item_embeddings[d], &gi)?;
        }
    }

    if variant.has_shared() {
        let mut gu = shared_user_grad;
        let mut gi = shared_item_grad;
        for l in (0..layers).rev() {
            let cache = &acts.shared[l];
            let (iu_w, ui_w) = shared_relations(params, l);
            let (iu_w, ui_w): (Vec<Matrix>, Vec<Matrix>) = (
                iu_w.into_iter().cloned().collect(),
                ui_w.into_iter().cloned().collect(),
            );
            let sw = &params.shared[l];
            let user_in = acts.shared_user_input(params, l);
            let pre_u = relu_backward(&cache.user_pre, &gu)?;
            accumulate(&mut grads.shared[l].user_self, &matmul_tn(user_in, &pre_u)?)?;
            let mut next_u = matmul_nt(&pre_u, &sw.user_self)?;
            let mut next_i = Vec::with_capacity(nd);
            for d in 0..nd {
                let iu = graph.item_to_user(d);
                let ui = graph.user_to_item(d);
                let item_in = acts.shared_item_input(params, d, l);
                let pre_i = relu_backward(&cache.item_pre[d], &gi[d])?;
                accumulate(&mut grads.shared[l].item_self, &matmul_tn(item_in, &pre_i)?)?;
                let g_iu = matmul_tn(&cache.user_aggs[d], &pre_u)?;
                let g_ui = matmul_tn(&cache.item_aggs[d], &pre_i)?;
                if cfg.tie_relation_weights {
                    accumulate(&mut grads.specific[l][d].item_to_user, &g_iu)?;
                    accumulate(&mut grads.specific[l][d].user_to_item, &g_ui)?;
                } else {
                    accumulate(&mut grads.shared[l].item_to_user[d], &g_iu)?;
                    accumulate(&mut grads.shared[l].user_to_item[d], &g_ui)?;
                }
                let mut gi_d = matmul_nt(&pre_i, &sw.item_self)?;
                gi_d.add_assign(&scatter(matmul_nt(&pre_u, &iu_w[d])?, iu, ui, mean)?)?;
                next_i.push(gi_d);
                next_u.add_assign(&scatter(matmul_nt(&pre_i, &ui_w[d])?, ui, iu, mean)?)?;
            }
            gu = next_u;
            gi = next_i;
        }
        accumulate(&mut grads.user_embeddings[0], &gu)?;
        for d in 0..nd {
            accumulate(&mut grads.item_embeddings[d], &gi[d])?;
        }
    }

    Ok(grads)
}

fn check_caches(params: &ModelParams, acts: &Activations) -> Result<()> {
    let cfg = &params.config;
    let nd = cfg.num_domains();
    let missing = |what: &str| Err(Error::Data(alloc::format!("missing forward cache: {what}")));
    if acts.variant != cfg.variant {
        return missing("activations belong to a different variant");
    }
    if acts.user_out.len() != nd || acts.item_out.len() != nd {
        return missing("outputs");
    }
    if cfg.variant == Variant::Mf {
        return Ok(());
    }
    if acts.fused_user.len() != nd {
        return missing("fused user representations");
    }
    if cfg.variant.has_specific()
        && (acts.specific.len() != nd || acts.specific.iter().any(|l| l.len() != cfg.layers))
    {
        return missing("specific layers");
    }
    if cfg.variant.has_shared() && acts.shared.len() != cfg.layers {
        return missing("shared layers");
    }
    Ok(())
}
