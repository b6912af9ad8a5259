use alloc::vec::Vec;

use super::Triplet;
use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::model::{backward, forward, Activations, ModelParams};
use crate::numeric::{finite_diff_grad, Matrix};

/// `ln(1 + eˣ)` without overflow for large `x` or cancellation for very
/// negative `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `−ln σ(x_pos − x_neg)`.
pub fn bpr_loss(x_pos: f64, x_neg: f64) -> f64 {
    softplus(x_neg - x_pos)
}

/// Derivative of [`bpr_loss`] with respect to `x_pos − x_neg`, i.e.
/// `−(1 − σ(diff))`.
pub fn bpr_grad(x_pos: f64, x_neg: f64) -> f64 {
    -sigmoid(x_neg - x_pos)
}

fn triplet_scores(user_out: &Matrix, item_out: &Matrix, t: &Triplet) -> Result<(f64, f64)> {
    let (u, p, n) = (t.user as usize, t.pos_item as usize, t.neg_item as usize);
    if u >= user_out.rows() || p >= item_out.rows() || n >= item_out.rows() {
        return Err(Error::OutOfRange {
            context: "triplet",
            index: u.max(p).max(n),
            len: user_out.rows().min(item_out.rows()),
        });
    }
    let urow = user_out.row(u);
    let dot = |i: usize| -> f64 { urow.iter().zip(item_out.row(i)).map(|(a, b)| a * b).sum() };
    Ok((dot(p), dot(n)))
}

/// Mean BPR loss of one domain's triplets.
pub fn domain_bpr(user_out: &Matrix, item_out: &Matrix, triplets: &[Triplet]) -> Result<f64> {
    if triplets.is_empty() {
        return Err(Error::Empty("triplet batch"));
    }
    let mut acc = 0.0;
    for t in triplets {
        let (xp, xn) = triplet_scores(user_out, item_out, t)?;
        acc += bpr_loss(xp, xn);
    }
    Ok(acc / triplets.len() as f64)
}

/// Per-domain objective: mean BPR plus `λ‖θ‖²`, where `param_sq_norm` is
/// `‖θ‖²`.
pub fn domain_loss(
    user_out: &Matrix,
    item_out: &Matrix,
    triplets: &[Triplet],
    lambda: f64,
    param_sq_norm: f64,
) -> Result<f64> {
    Ok(domain_bpr(user_out, item_out, triplets)? + lambda * param_sq_norm)
}

/// How per-domain losses combine into the training objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    /// `β_d`, one per domain.
    pub domain_weights: Vec<f64>,
    /// `λ_θ`.
    pub lambda: f64,
    /// Charge the L2 penalty inside every domain term (scaled by `β_d`)
    /// instead of once on the total.
    pub reg_per_domain: bool,
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(alloc::format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.domain_weights.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::Config("domain weights must be positive".into()));
        }
        Ok(())
    }

    fn reg_scale(&self, active: &[bool]) -> f64 {
        if self.reg_per_domain {
            self.domain_weights
                .iter()
                .zip(active)
                .filter(|(_, &a)| a)
                .map(|(b, _)| b)
                .sum()
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// Mean BPR per domain; `None` where the batch was empty.
    pub domain_bpr: Vec<Option<f64>>,
    pub regularization: f64,
    pub total: f64,
}

fn report(
    params: &ModelParams,
    acts: &Activations,
    batches: &[Vec<Triplet>],
    objective: &Objective,
) -> Result<LossReport> {
    let nd = params.config.num_domains();
    if batches.len() != nd || objective.domain_weights.len() != nd {
        return Err(Error::Data(alloc::format!(
            "expected triplet batches and weights for {nd} domains"
        )));
    }
    objective.validate()?;
    let mut domain = Vec::with_capacity(nd);
    let mut total = 0.0;
    for d in 0..nd {
        if batches[d].is_empty() {
            domain.push(None);
            continue;
        }
        let bpr = domain_bpr(&acts.user_out[d], &acts.item_out[d], &batches[d])?;
        total += objective.domain_weights[d] * bpr;
        domain.push(Some(bpr));
    }
    if domain.iter().all(Option::is_none) {
        return Err(Error::Empty("triplet batches"));
    }
    let active: Vec<bool> = domain.iter().map(Option::is_some).collect();
    let regularization = objective.lambda * objective.reg_scale(&active) * params.squared_norm();
    total += regularization;
    if !total.is_finite() {
        return Err(Error::NonFinite("training loss"));
    }
    Ok(LossReport {
        domain_bpr: domain,
        regularization,
        total,
    })
}

/// `Σ_d β_d · mean BPR_d + λ‖θ‖²` at the current parameters.
pub fn total_loss(
    params: &ModelParams,
    graph: &HeteroGraph,
    batches: &[Vec<Triplet>],
    objective: &Objective,
) -> Result<LossReport> {
    let acts = forward(params, graph)?;
    report(params, &acts, batches, objective)
}

/// Loss plus its exact gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &ModelParams,
    graph: &HeteroGraph,
    batches: &[Vec<Triplet>],
    objective: &Objective,
) -> Result<(LossReport, ModelParams)> {
    let acts = forward(params, graph)?;
    let rep = report(params, &acts, batches, objective)?;
    let nd = params.config.num_domains();
    let mut grad_user: Vec<Matrix> = acts
        .user_out
        .iter()
        .map(|m| Matrix::zeros(m.rows(), m.cols()))
        .collect();
    let mut grad_item: Vec<Matrix> = acts
        .item_out
        .iter()
        .map(|m| Matrix::zeros(m.rows(), m.cols()))
        .collect();
    for d in 0..nd {
        let batch = &batches[d];
        if batch.is_empty() {
            continue;
        }
        let scale = objective.domain_weights[d] / batch.len() as f64;
        let (uo, io) = (&acts.user_out[d], &acts.item_out[d]);
        for t in batch {
            let (xp, xn) = triplet_scores(uo, io, t)?;
            let c = scale * bpr_grad(xp, xn);
            let (u, p, n) = (t.user as usize, t.pos_item as usize, t.neg_item as usize);
            {
                let gu = grad_user[d].row_mut(u);
                for ((g, a), b) in gu.iter_mut().zip(io.row(p)).zip(io.row(n)) {
                    *g += c * (a - b);
                }
            }
            let urow = uo.row(u);
            for (g, x) in grad_item[d].row_mut(p).iter_mut().zip(urow) {
                *g += c * x;
            }
            for (g, x) in grad_item[d].row_mut(n).iter_mut().zip(urow) {
                *g -= c * x;
            }
        }
    }
    let mut grads = backward(params, graph, &acts, &grad_user, &grad_item)?;
    let active: Vec<bool> = rep.domain_bpr.iter().map(Option::is_some).collect();
    let reg = objective.lambda * objective.reg_scale(&active);
    if reg != 0.0 {
        grads.axpy(2.0 * reg, params)?;
    }
    Ok((rep, grads))
}

/// Central-difference gradient of [`total_loss`] for every parameter,
/// laid out like the analytic gradient. Costs two full forward passes per
/// scalar, so only suitable for tiny models.
pub fn numeric_gradient(
    params: &ModelParams,
    graph: &HeteroGraph,
    batches: &[Vec<Triplet>],
    objective: &Objective,
    h: f64,
) -> Result<ModelParams> {
    let mut out = params.zeros_like();
    let mut probe = params.clone();
    for idx in 0..params.num_matrices() {
        let base = params.matrices()[idx].clone();
        let grad = finite_diff_grad(
            |m| {
                *probe.matrices_mut()[idx] = m.clone();
                Ok(total_loss(&probe, graph, batches, objective)?.total)
            },
            &base,
            h,
        )?;
        *probe.matrices_mut()[idx] = base;
        *out.matrices_mut()[idx] = grad;
    }
    Ok(out)
}
