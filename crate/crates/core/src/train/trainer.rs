use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use super::loss::{loss_and_grad, Objective};
use super::sampler::{sample_triplets, sample_triplets_from, Triplet};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalTask, DEFAULT_CUTOFF};
use crate::graph::HeteroGraph;
use crate::model::ModelParams;
use crate::numeric::{adam_step, AdamConfig, AdamState};

#[derive(Debug, Clone, PartialEq)]
pub enum DomainWeights {
    /// `β_d = |E_d| / Σ |E_d'|`.
    Auto,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Triplets drawn per domain and epoch; `None` means `|E_d|`.
    pub triplets_per_epoch: Option<usize>,
    pub adam: AdamConfig,
    pub lambda_reg: f64,
    pub domain_weights: DomainWeights,
    pub seed: u64,
    pub reg_per_domain: bool,
    /// One optimiser step per domain instead of one joint step per epoch.
    pub alternate_domains: bool,
    /// Fraction of each domain's edges withheld from propagation every
    /// epoch. Positives are then drawn only from the withheld edges, so a
    /// training pair never passes a message along its own edge. 0 trains on
    /// the full graph.
    pub message_holdout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            triplets_per_epoch: None,
            adam: AdamConfig::default(),
            lambda_reg: 1e-5,
            domain_weights: DomainWeights::Auto,
            seed: 0,
            reg_per_domain: false,
            alternate_domains: false,
            message_holdout: 0.0,
        }
    }
}

impl TrainConfig {
    /// Resolves `β_d` against the graph's per-domain edge counts.
    pub fn resolve_weights(&self, graph: &HeteroGraph) -> Result<Vec<f64>> {
        let nd = graph.num_domains();
        match &self.domain_weights {
            DomainWeights::Auto => {
                let total = graph.total_edges();
                if total == 0 {
                    return Err(Error::Empty("training graph"));
                }
                let weights: Vec<f64> = (0..nd)
                    .map(|d| graph.num_edges(d) as f64 / total as f64)
                    .collect();
                Ok(weights)
            }
            DomainWeights::Fixed(w) if w.len() == nd => Ok(w.clone()),
            DomainWeights::Fixed(w) => Err(Error::Config(alloc::format!(
                "{} domain weights for {nd} domains",
                w.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean BPR per domain; `None` for domains that were not trained.
    pub domain_bpr: Vec<Option<f64>>,
    pub total_loss: f64,
    pub skipped_draws: usize,
}

/// Held-out tasks used to keep the best parameters seen during training.
#[derive(Debug, Clone)]
pub struct Validation<'a> {
    pub tasks: &'a [EvalTask],
    /// Evaluate every `every` epochs (and after the last one).
    pub every: usize,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub history: Vec<EpochReport>,
    /// Epoch (1-based) whose parameters were kept, with its mean NDCG.
    pub best: Option<(usize, f64)>,
}

/// Owns the parameters and optimiser state for one training run.
pub struct Trainer<'g> {
    graph: &'g HeteroGraph,
    params: ModelParams,
    optim: Vec<AdamState>,
    /// One sampling stream per domain, so a domain's triplets do not
    /// depend on how much randomness other domains consumed.
    rngs: Vec<ChaCha8Rng>,
    objective: Objective,
    config: TrainConfig,
    epoch: usize,
}

impl<'g> Trainer<'g> {
    pub fn new(graph: &'g HeteroGraph, params: ModelParams, config: TrainConfig) -> Result<Self> {
        params.config.check_graph(graph)?;
        params.validate()?;
        if !(0.0..1.0).contains(&config.message_holdout) {
            return Err(Error::Config(alloc::format!(
                "message_holdout must be in [0, 1), got {}",
                config.message_holdout
            )));
        }
        let objective = Objective {
            domain_weights: config.resolve_weights(graph)?,
            lambda: config.lambda_reg,
            reg_per_domain: config.reg_per_domain,
        };
        objective.validate()?;
        let optim = params
            .matrices()
            .into_iter()
            .map(|m| AdamState::for_param(m, config.adam))
            .collect();
        let rngs = (0..graph.num_domains())
            .map(|d| crate::seeded_stream(config.seed, 1 + d as u64))
            .collect();
        Ok(Self {
            graph,
            params,
            optim,
            rngs,
            objective,
            config,
            epoch: 0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn sample_epoch(&mut self) -> Result<(Vec<Vec<Triplet>>, usize, Option<HeteroGraph>)> {
        let nd = self.graph.num_domains();
        let mut batches = Vec::with_capacity(nd);
        let mut skipped = 0;
        let holdout = self.config.message_holdout;
        let mut kept_edges = Vec::new();
        for d in 0..nd {
            let edges = self.graph.num_edges(d);
            if edges == 0 {
                batches.push(Vec::new());
                continue;
            }
            let n = self.config.triplets_per_epoch.unwrap_or(edges);
            let rng = &mut self.rngs[d];
            let out = if holdout > 0.0 {
                let csr = self.graph.item_to_user(d);
                let all: Vec<(u32, u32)> = (0..self.graph.num_users())
                    .flat_map(|u| csr.neighbors(u).iter().map(move |&i| (u as u32, i)))
                    .collect();
                let k = ((holdout * edges as f64).round() as usize).clamp(1, edges);
                let mut withheld = alloc::vec![false; edges];
                for idx in rand::seq::index::sample(rng, edges, k) {
                    withheld[idx] = true;
                }
                let mut positives = Vec::with_capacity(k);
                for (e, &(u, i)) in all.iter().enumerate() {
                    if withheld[e] {
                        positives.push((u, i));
                    } else {
                        kept_edges.push((d as u32, u, i));
                    }
                }
                sample_triplets_from(self.graph, d, &positives, n, rng)?
            } else {
                sample_triplets(self.graph, d, n, rng)?
            };
            skipped += out.skipped;
            batches.push(out.triplets);
        }
        let message_graph = if holdout > 0.0 {
            Some(HeteroGraph::from_edges(
                self.graph.num_users(),
                self.graph.items_per_domain(),
                &kept_edges,
            )?)
        } else {
            None
        };
        Ok((batches, skipped, message_graph))
    }

    /// Applies one Adam step to every matrix using `grads`.
    fn apply(&mut self, grads: &ModelParams) -> Result<()> {
        let grads = grads.matrices();
        for ((p, g), s) in self
            .params
            .matrices_mut()
            .into_iter()
            .zip(grads)
            .zip(self.optim.iter_mut())
        {
            adam_step(p, g, s)?;
        }
        Ok(())
    }

    /// Samples triplets for every domain and takes one optimiser step on
    /// the weighted total loss (or one step per domain when alternating).
    pub fn train_epoch(&mut self) -> Result<EpochReport> {
        let (batches, skipped_draws, message_graph) = self.sample_epoch()?;
        let graph = message_graph.as_ref().unwrap_or(self.graph);
        self.epoch += 1;
        let report = if self.config.alternate_domains {
            let nd = batches.len();
            let mut domain_bpr = alloc::vec![None; nd];
            let mut total_loss = 0.0;
            for d in 0..nd {
                if batches[d].is_empty() {
                    continue;
                }
                let single: Vec<Vec<Triplet>> = (0..nd)
                    .map(|e| if e == d { batches[d].clone() } else { Vec::new() })
                    .collect();
                let (rep, grads) = loss_and_grad(&self.params, graph, &single, &self.objective)?;
                domain_bpr[d] = rep.domain_bpr[d];
                total_loss += rep.total;
                self.apply(&grads)?;
            }
            EpochReport {
                epoch: self.epoch,
                domain_bpr,
                total_loss,
                skipped_draws,
            }
        } else {
            let (rep, grads) = loss_and_grad(&self.params, graph, &batches, &self.objective)?;
            self.apply(&grads)?;
            EpochReport {
                epoch: self.epoch,
                domain_bpr: rep.domain_bpr,
                total_loss: rep.total,
                skipped_draws,
            }
        };
        if !report.total_loss.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        Ok(report)
    }

    /// Runs the configured number of epochs. With `validation`, the
    /// parameters with the best mean NDCG@10 are kept at the end.
    pub fn fit(
        &mut self,
        validation: Option<Validation<'_>>,
        mut on_epoch: impl FnMut(&EpochReport),
    ) -> Result<FitOutcome> {
        let mut history = Vec::with_capacity(self.config.epochs);
        let mut best: Option<(usize, f64, ModelParams)> = None;
        for e in 0..self.config.epochs {
            let report = self.train_epoch()?;
            on_epoch(&report);
            history.push(report);
            if let Some(v) = &validation {
                let last = e + 1 == self.config.epochs;
                if v.every > 0 && ((e + 1) % v.every == 0 || last) {
                    let score = evaluate(&self.params, self.graph, v.tasks, DEFAULT_CUTOFF)?.mean_ndcg();
                    if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
                        best = Some((self.epoch, score, self.params.clone()));
                    }
                }
            }
        }
        let best = best.map(|(epoch, score, params)| {
            self.params = params;
            (epoch, score)
        });
        Ok(FitOutcome { history, best })
    }
}
