//! The global heterogeneous graph: shared user nodes, per-domain item nodes
//! and one pair of CSR adjacencies per domain.
//!
//! Only user–item edges are stored. User–user and item–item relations show
//! up in the model as self-transform weights, not as edges.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::InteractionLog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Messages flow from items to users; targets are users.
    ItemToUser,
    /// Messages flow from users to items; targets are items.
    UserToItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId {
    pub domain: u32,
    pub direction: Direction,
}

impl RelationId {
    pub fn item_to_user(domain: u32) -> Self {
        Self {
            domain,
            direction: Direction::ItemToUser,
        }
    }

    pub fn user_to_item(domain: u32) -> Self {
        Self {
            domain,
            direction: Direction::UserToItem,
        }
    }
}

/// Compressed adjacency: the neighbours of target `t` are
/// `indices[offsets[t]..offsets[t + 1]]`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    pub offsets: Vec<u32>,
    pub indices: Vec<u32>,
}

impl Csr {
    /// Builds from `(target, source)` pairs that are already sorted and
    /// deduplicated.
    fn from_sorted_pairs(targets: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut offsets = vec![0u32; targets + 1];
        let mut indices = Vec::new();
        for (t, s) in pairs {
            offsets[t as usize + 1] += 1;
            indices.push(s);
        }
        for t in 0..targets {
            offsets[t + 1] += offsets[t];
        }
        Self { offsets, indices }
    }

    pub fn num_targets(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn neighbors(&self, target: usize) -> &[u32] {
        &self.indices[self.offsets[target] as usize..self.offsets[target + 1] as usize]
    }

    #[inline]
    pub fn degree(&self, target: usize) -> usize {
        (self.offsets[target + 1] - self.offsets[target]) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeteroGraph {
    num_users: usize,
    items_per_domain: Vec<usize>,
    /// Per domain, targets = users, neighbours = that domain's items.
    item_to_user: Vec<Csr>,
    /// Per domain, targets = items, neighbours = users.
    user_to_item: Vec<Csr>,
}

impl HeteroGraph {
    pub fn build(train: &InteractionLog) -> Result<Self> {
        if train.interactions.is_empty() {
            return Err(Error::Empty("training log"));
        }
        let edges: Vec<(u32, u32, u32)> = train
            .interactions
            .iter()
            .map(|r| (r.domain, r.user, r.item))
            .collect();
        Self::from_edges(train.num_users(), &train.items_per_domain(), &edges)
    }

    /// `edges` holds `(domain, user, item)` triples with domain-local item
    /// ids, in any order. Repeated edges are collapsed.
    pub fn from_edges(
        num_users: usize,
        items_per_domain: &[usize],
        edges: &[(u32, u32, u32)],
    ) -> Result<Self> {
        let nd = items_per_domain.len();
        let mut per_domain: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nd];
        for &(d, u, i) in edges {
            let du = d as usize;
            if du >= nd {
                return Err(Error::OutOfRange {
                    context: "edge domain",
                    index: du,
                    len: nd,
                });
            }
            if u as usize >= num_users {
                return Err(Error::OutOfRange {
                    context: "edge user",
                    index: u as usize,
                    len: num_users,
                });
            }
            if i as usize >= items_per_domain[du] {
                return Err(Error::OutOfRange {
                    context: "edge item",
                    index: i as usize,
                    len: items_per_domain[du],
                });
            }
            per_domain[du].push((u, i));
        }
        let mut item_to_user = Vec::with_capacity(nd);
        let mut user_to_item = Vec::with_capacity(nd);
        for (d, mut pairs) in per_domain.into_iter().enumerate() {
            pairs.sort_unstable();
            pairs.dedup();
            item_to_user.push(Csr::from_sorted_pairs(num_users, pairs.iter().copied()));
            let mut flipped: Vec<(u32, u32)> = pairs.iter().map(|&(u, i)| (i, u)).collect();
            flipped.sort_unstable();
            user_to_item.push(Csr::from_sorted_pairs(
                items_per_domain[d],
                flipped.into_iter(),
            ));
        }
        Ok(Self {
            num_users,
            items_per_domain: items_per_domain.to_vec(),
            item_to_user,
            user_to_item,
        })
    }

    /// Reassembles a graph from raw CSR arrays, checking every invariant.
    pub fn from_csr(
        num_users: usize,
        items_per_domain: Vec<usize>,
        item_to_user: Vec<Csr>,
        user_to_item: Vec<Csr>,
    ) -> Result<Self> {
        let nd = items_per_domain.len();
        if item_to_user.len() != nd || user_to_item.len() != nd {
            return Err(Error::Data(alloc::format!(
                "expected {nd} relations per direction"
            )));
        }
        let mut edges = Vec::new();
        for d in 0..nd {
            check_csr(&item_to_user[d], num_users, items_per_domain[d])?;
            check_csr(&user_to_item[d], items_per_domain[d], num_users)?;
            for u in 0..num_users {
                for &i in item_to_user[d].neighbors(u) {
                    edges.push((d as u32, u as u32, i));
                }
            }
        }
        let rebuilt = Self::from_edges(num_users, &items_per_domain, &edges)?;
        let given = Self {
            num_users,
            items_per_domain,
            item_to_user,
            user_to_item,
        };
        if rebuilt != given {
            return Err(Error::Data(alloc::string::String::from(
                "CSR arrays are not canonical or not mutually transposed",
            )));
        }
        Ok(given)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_domains(&self) -> usize {
        self.items_per_domain.len()
    }

    pub fn items_per_domain(&self) -> &[usize] {
        &self.items_per_domain
    }

    pub fn num_items(&self, domain: usize) -> usize {
        self.items_per_domain[domain]
    }

    pub fn relation(&self, rel: RelationId) -> Result<&Csr> {
        let d = rel.domain as usize;
        let table = match rel.direction {
            Direction::ItemToUser => &self.item_to_user,
            Direction::UserToItem => &self.user_to_item,
        };
        table.get(d).ok_or(Error::OutOfRange {
            context: "relation domain",
            index: d,
            len: self.num_domains(),
        })
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.num_domains() as u32).flat_map(|d| {
            [RelationId::item_to_user(d), RelationId::user_to_item(d)]
        })
    }

    /// Items of `user` in `domain`.
    #[inline]
    pub fn user_items(&self, domain: usize, user: usize) -> &[u32] {
        self.item_to_user[domain].neighbors(user)
    }

    /// Users of `item` in `domain`.
    #[inline]
    pub fn item_users(&self, domain: usize, item: usize) -> &[u32] {
        self.user_to_item[domain].neighbors(item)
    }

    pub fn item_to_user(&self, domain: usize) -> &Csr {
        &self.item_to_user[domain]
    }

    pub fn user_to_item(&self, domain: usize) -> &Csr {
        &self.user_to_item[domain]
    }

    pub fn has_edge(&self, domain: usize, user: usize, item: u32) -> bool {
        self.user_items(domain, user).binary_search(&item).is_ok()
    }

    pub fn num_edges(&self, domain: usize) -> usize {
        self.item_to_user[domain].num_edges()
    }

    pub fn total_edges(&self) -> usize {
        (0..self.num_domains()).map(|d| self.num_edges(d)).sum()
    }

    pub fn neighbors(&self, rel: RelationId, node: usize) -> Result<&[u32]> {
        let csr = self.relation(rel)?;
        if node >= csr.num_targets() {
            return Err(Error::OutOfRange {
                context: "neighbors node",
                index: node,
                len: csr.num_targets(),
            });
        }
        Ok(csr.neighbors(node))
    }

    /// Number of target nodes per degree.
    pub fn degree_histogram(&self, rel: RelationId) -> Result<BTreeMap<usize, usize>> {
        let csr = self.relation(rel)?;
        let mut hist = BTreeMap::new();
        for t in 0..csr.num_targets() {
            *hist.entry(csr.degree(t)).or_insert(0) += 1;
        }
        Ok(hist)
    }
}

fn check_csr(csr: &Csr, targets: usize, sources: usize) -> Result<()> {
    if csr.offsets.len() != targets + 1 || csr.offsets[0] != 0 {
        return Err(Error::Data(alloc::string::String::from("bad CSR offsets")));
    }
    if csr.offsets.windows(2).any(|w| w[0] > w[1])
        || *csr.offsets.last().unwrap_or(&0) as usize != csr.indices.len()
    {
        return Err(Error::Data(alloc::string::String::from(
            "CSR offsets not monotone or not covering indices",
        )));
    }
    if let Some(&bad) = csr.indices.iter().find(|&&s| s as usize >= sources) {
        return Err(Error::OutOfRange {
            context: "CSR index",
            index: bad as usize,
            len: sources,
        });
    }
    Ok(())
}
