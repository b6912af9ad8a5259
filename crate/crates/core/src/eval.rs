//! Sampled-candidate ranking evaluation: each held-out positive is ranked
//! against 99 items the user never interacted with, and hit rate / NDCG are
//! reported at cutoff 10.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::SplitDataset;
use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::model::{forward, Activations, ModelParams};

pub const DEFAULT_NEGATIVES: usize = 99;
pub const DEFAULT_CUTOFF: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTask {
    pub user: u32,
    pub domain: u32,
    pub positive: u32,
    pub negatives: Vec<u32>,
}

impl EvalTask {
    /// Candidate list with the positive first.
    pub fn candidates(&self) -> impl Iterator<Item = u32> + '_ {
        core::iter::once(self.positive).chain(self.negatives.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSet {
    pub tasks: Vec<EvalTask>,
    /// Test records dropped for lack of enough unobserved items.
    pub skipped: usize,
}

/// One task per test record. Negatives are drawn uniformly without
/// replacement from the domain's items that the user touched neither in
/// train nor in test, from a generator keyed on `(seed, user, domain)`.
pub fn build_eval_tasks(split: &SplitDataset, seed: u64, num_negatives: usize) -> Result<TaskSet> {
    let items_per_domain = split.train.items_per_domain();
    let mut observed: BTreeMap<(u32, u32), Vec<u32>> = split
        .test
        .iter()
        .map(|t| ((t.user, t.domain), alloc::vec![t.item]))
        .collect();
    for rec in &split.train.interactions {
        if let Some(items) = observed.get_mut(&(rec.user, rec.domain)) {
            items.push(rec.item);
        }
    }
    let mut tasks = Vec::with_capacity(split.test.len());
    let mut skipped = 0;
    for t in &split.test {
        let d = t.domain as usize;
        let n_items = *items_per_domain.get(d).ok_or(Error::OutOfRange {
            context: "test domain",
            index: d,
            len: items_per_domain.len(),
        })?;
        let seen = observed.get_mut(&(t.user, t.domain)).expect("test key present");
        seen.sort_unstable();
        seen.dedup();
        let eligible: Vec<u32> = (0..n_items as u32)
            .filter(|i| seen.binary_search(i).is_err())
            .collect();
        if eligible.len() < num_negatives {
            skipped += 1;
            continue;
        }
        let stream = ((t.domain as u64) << 32) | t.user as u64;
        let mut rng = crate::seeded_stream(seed, stream);
        let negatives = rand::seq::index::sample(&mut rng, eligible.len(), num_negatives)
            .into_iter()
            .map(|i| eligible[i])
            .collect();
        tasks.push(EvalTask {
            user: t.user,
            domain: t.domain,
            positive: t.item,
            negatives,
        });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} test records with fewer than {num_negatives} unobserved items");
    }
    Ok(TaskSet { tasks, skipped })
}

/// 1-based rank of `scores[pos_index]`. Ties with the positive count
/// against it, so a constant scorer ranks every positive last.
pub fn rank_of_positive(scores: &[f64], pos_index: usize) -> Result<usize> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("candidate scores"));
    }
    let pos = *scores.get(pos_index).ok_or(Error::OutOfRange {
        context: "positive index",
        index: pos_index,
        len: scores.len(),
    })?;
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(j, &s)| j != pos_index && s >= pos)
        .count();
    Ok(1 + ahead)
}

/// `1 / log2(rank + 1)` inside the cutoff, 0 outside.
pub fn ndcg_contribution(rank: usize, cutoff: usize) -> f64 {
    if rank >= 1 && rank <= cutoff {
        1.0 / libm::log2(rank as f64 + 1.0)
    } else {
        0.0
    }
}

/// Mean hit rate and NDCG at `cutoff` over a list of ranks.
pub fn hr_ndcg_at(ranks: &[usize], cutoff: usize) -> Result<(f64, f64)> {
    if ranks.is_empty() {
        return Err(Error::Empty("rank list"));
    }
    let n = ranks.len() as f64;
    let hits = ranks.iter().filter(|&&r| r >= 1 && r <= cutoff).count() as f64;
    let ndcg: f64 = ranks.iter().map(|&r| ndcg_contribution(r, cutoff)).sum();
    Ok((hits / n, ndcg / n))
}

pub fn hr_ndcg_at_10(ranks: &[usize]) -> Result<(f64, f64)> {
    hr_ndcg_at(ranks, DEFAULT_CUTOFF)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainMetrics {
    pub domain: usize,
    pub users: usize,
    pub hit_rate: f64,
    pub ndcg: f64,
}

/// Per-domain metrics as fractions in `[0, 1]`. Domains without tasks are
/// absent.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub cutoff: usize,
    pub domains: Vec<DomainMetrics>,
}

impl MetricReport {
    pub fn domain(&self, d: usize) -> Option<&DomainMetrics> {
        self.domains.iter().find(|m| m.domain == d)
    }

    /// Unweighted mean NDCG over reported domains.
    pub fn mean_ndcg(&self) -> f64 {
        if self.domains.is_empty() {
            return 0.0;
        }
        self.domains.iter().map(|m| m.ndcg).sum::<f64>() / self.domains.len() as f64
    }
}

/// Ranks of every task's positive under already-computed outputs.
pub fn task_ranks(acts: &Activations, tasks: &[EvalTask]) -> Result<Vec<usize>> {
    let mut scores = Vec::new();
    tasks
        .iter()
        .map(|task| {
            let d = task.domain as usize;
            let u = task.user as usize;
            if d >= acts.user_out.len() {
                return Err(Error::OutOfRange {
                    context: "task domain",
                    index: d,
                    len: acts.user_out.len(),
                });
            }
            scores.clear();
            for item in task.candidates() {
                if item as usize >= acts.item_out[d].rows() {
                    return Err(Error::OutOfRange {
                        context: "task item",
                        index: item as usize,
                        len: acts.item_out[d].rows(),
                    });
                }
                scores.push(acts.score(d, u, item as usize));
            }
            rank_of_positive(&scores, 0)
        })
        .collect()
}

pub fn evaluate_activations(
    acts: &Activations,
    tasks: &[EvalTask],
    cutoff: usize,
) -> Result<MetricReport> {
    let ranks = task_ranks(acts, tasks)?;
    let nd = acts.user_out.len();
    let mut per_domain: Vec<Vec<usize>> = alloc::vec![Vec::new(); nd];
    for (task, rank) in tasks.iter().zip(ranks) {
        per_domain[task.domain as usize].push(rank);
    }
    let mut domains = Vec::new();
    for (d, ranks) in per_domain.iter().enumerate() {
        if ranks.is_empty() {
            log::warn!("domain {d} has no evaluation tasks; omitted from report");
            continue;
        }
        let (hit_rate, ndcg) = hr_ndcg_at(ranks, cutoff)?;
        domains.push(DomainMetrics {
            domain: d,
            users: ranks.len(),
            hit_rate,
            ndcg,
        });
    }
    Ok(MetricReport { cutoff, domains })
}

/// Scores every task with a single forward pass of the frozen model.
pub fn evaluate(
    params: &ModelParams,
    graph: &HeteroGraph,
    tasks: &[EvalTask],
    cutoff: usize,
) -> Result<MetricReport> {
    let acts = forward(params, graph)?;
    evaluate_activations(&acts, tasks, cutoff)
}
