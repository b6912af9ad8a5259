use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::HeteroGraph;

/// Rejection-sampling attempts for a negative before the draw is skipped.
pub const MAX_NEGATIVE_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub user: u32,
    pub pos_item: u32,
    pub neg_item: u32,
    pub domain: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutcome {
    pub triplets: Vec<Triplet>,
    /// Draws abandoned after [`MAX_NEGATIVE_RETRIES`] rejections.
    pub skipped: usize,
}

/// Draws `n` triplets for `domain`: the positive is a uniformly chosen
/// training edge, the negative a uniformly chosen item of the same domain
/// that the user has no edge to.
pub fn sample_triplets<R: Rng + ?Sized>(
    graph: &HeteroGraph,
    domain: usize,
    n: usize,
    rng: &mut R,
) -> Result<SampleOutcome> {
    if domain >= graph.num_domains() {
        return Err(Error::OutOfRange {
            context: "sample domain",
            index: domain,
            len: graph.num_domains(),
        });
    }
    let csr = graph.item_to_user(domain);
    let n_items = graph.num_items(domain);
    let edges = csr.num_edges();
    if edges == 0 || n_items < 2 {
        return Err(Error::Data(alloc::format!(
            "domain {domain} needs at least one edge and two items to sample triplets"
        )));
    }
    let saturated = (0..graph.num_users())
        .all(|u| csr.degree(u) == 0 || csr.degree(u) == n_items);
    if saturated {
        return Err(Error::Data(alloc::format!(
            "every active user in domain {domain} interacted with every item"
        )));
    }
    let mut triplets = Vec::with_capacity(n);
    let mut skipped = 0;
    for _ in 0..n {
        let e = rng.random_range(0..edges) as u32;
        // First target whose segment ends after `e`.
        let user = csr.offsets.partition_point(|&o| o <= e) - 1;
        let pos_item = csr.indices[e as usize];
        let items = csr.neighbors(user);
        let mut neg = None;
        for _ in 0..MAX_NEGATIVE_RETRIES {
            let cand = rng.random_range(0..n_items) as u32;
            if items.binary_search(&cand).is_err() {
                neg = Some(cand);
                break;
            }
        }
        match neg {
            Some(neg_item) => triplets.push(Triplet {
                user: user as u32,
                pos_item,
                neg_item,
                domain: domain as u32,
            }),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::debug!("domain {domain}: skipped {skipped} draws after {MAX_NEGATIVE_RETRIES} rejections");
    }
    Ok(SampleOutcome { triplets, skipped })
}

/// Like [`sample_triplets`] but positives are drawn uniformly from
/// `positives` (pairs `(user, item)` of `domain`). Negatives still avoid
/// every item the user has in `graph`.
pub fn sample_triplets_from<R: Rng + ?Sized>(
    graph: &HeteroGraph,
    domain: usize,
    positives: &[(u32, u32)],
    n: usize,
    rng: &mut R,
) -> Result<SampleOutcome> {
    if domain >= graph.num_domains() {
        return Err(Error::OutOfRange {
            context: "sample domain",
            index: domain,
            len: graph.num_domains(),
        });
    }
    let n_items = graph.num_items(domain);
    if positives.is_empty() || n_items < 2 {
        return Err(Error::Data(alloc::format!(
            "domain {domain} needs at least one positive and two items to sample triplets"
        )));
    }
    let mut triplets = Vec::with_capacity(n);
    let mut skipped = 0;
    for _ in 0..n {
        let (user, pos_item) = positives[rng.random_range(0..positives.len())];
        let items = graph.user_items(domain, user as usize);
        let mut neg = None;
        for _ in 0..MAX_NEGATIVE_RETRIES {
            let cand = rng.random_range(0..n_items) as u32;
            if items.binary_search(&cand).is_err() {
                neg = Some(cand);
                break;
            }
        }
        match neg {
            Some(neg_item) => triplets.push(Triplet {
                user,
                pos_item,
                neg_item,
                domain: domain as u32,
            }),
            None => skipped += 1,
        }
    }
    Ok(SampleOutcome { triplets, skipped })
}
