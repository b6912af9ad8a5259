//! Pairwise BPR training: triplet sampling, the weighted multi-domain
//! objective and Adam updates over the full graph.

mod loss;
mod sampler;
mod trainer;

pub use loss::{
    bpr_grad, bpr_loss, domain_bpr, domain_loss, loss_and_grad, numeric_gradient, sigmoid, softplus, total_loss,
    LossReport, Objective,
};
pub use sampler::{sample_triplets, sample_triplets_from, SampleOutcome, Triplet, MAX_NEGATIVE_RETRIES};
pub use trainer::{
    DomainWeights, EpochReport, FitOutcome, TrainConfig, Trainer, Validation,
};
