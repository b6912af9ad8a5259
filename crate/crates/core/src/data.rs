//! Interaction logs: dense ID remapping, the leave-latest-out split and
//! per-domain statistics.
//!
//! Parsing from disk lives in the `hgdr` crate; this module only sees
//! already-tokenised [`RawInteraction`] records.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawInteraction {
    pub user_key: String,
    pub item_key: String,
    pub domain_key: String,
    pub timestamp: i64,
}

/// Bidirectional key ↔ dense id table; ids follow first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    keys: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_keys<I, S>(keys: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = Self::new();
        for key in keys {
            let key = key.into();
            if map.index.contains_key(&key) {
                return Err(Error::Data(format!("duplicate key {key:?}")));
            }
            map.intern(&key);
        }
        Ok(map)
    }

    pub fn intern(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.index.get(key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.keys.push(String::from(key));
        self.index.insert(String::from(key), id);
        id
    }

    pub fn id(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: u32) -> Option<&str> {
        self.keys.get(id as usize).map(String::as_str)
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    pub user: u32,
    /// Domain-local item id.
    pub item: u32,
    pub domain: u32,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionLog {
    pub users: IdMap,
    pub domains: IdMap,
    /// One item table per domain.
    pub items: Vec<IdMap>,
    /// Deduplicated records in first-seen order.
    pub interactions: Vec<Interaction>,
}

impl InteractionLog {
    /// Remaps keys to dense ids and collapses repeated (user, item, domain)
    /// records into one, keeping the largest timestamp at the position of
    /// the first occurrence.
    pub fn from_raw<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = RawInteraction>,
    {
        let mut users = IdMap::new();
        let mut domains = IdMap::new();
        let mut items: Vec<IdMap> = Vec::new();
        let mut item_domain: BTreeMap<String, u32> = BTreeMap::new();
        let mut seen: BTreeMap<(u32, u32, u32), usize> = BTreeMap::new();
        let mut interactions = Vec::new();

        for (n, rec) in records.into_iter().enumerate() {
            if rec.user_key.is_empty() || rec.item_key.is_empty() || rec.domain_key.is_empty() {
                return Err(Error::Data(format!("record {n}: empty field")));
            }
            let domain = domains.intern(&rec.domain_key);
            if domain as usize == items.len() {
                items.push(IdMap::new());
            }
            match item_domain.get(&rec.item_key) {
                Some(&d) if d != domain => {
                    return Err(Error::Data(format!(
                        "record {n}: item {:?} appears in domains {:?} and {:?}",
                        rec.item_key,
                        domains.key(d).unwrap_or_default(),
                        rec.domain_key
                    )));
                }
                Some(_) => {}
                None => {
                    item_domain.insert(rec.item_key.clone(), domain);
                }
            }
            let user = users.intern(&rec.user_key);
            let item = items[domain as usize].intern(&rec.item_key);
            match seen.get(&(user, domain, item)) {
                Some(&pos) => {
                    let existing: &mut Interaction = &mut interactions[pos];
                    existing.timestamp = existing.timestamp.max(rec.timestamp);
                }
                None => {
                    seen.insert((user, domain, item), interactions.len());
                    interactions.push(Interaction {
                        user,
                        item,
                        domain,
                        timestamp: rec.timestamp,
                    });
                }
            }
        }
        if interactions.is_empty() {
            return Err(Error::Empty("interaction log"));
        }
        Ok(Self {
            users,
            domains,
            items,
            interactions,
        })
    }

    /// Builds a log over pre-registered id tables, e.g. for generated data
    /// where items without interactions must still exist as nodes.
    pub fn from_parts(
        users: IdMap,
        domains: IdMap,
        items: Vec<IdMap>,
        interactions: Vec<Interaction>,
    ) -> Result<Self> {
        let log = Self {
            users,
            domains,
            items,
            interactions,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.len() != self.domains.len() {
            return Err(Error::Data(format!(
                "{} item tables for {} domains",
                self.items.len(),
                self.domains.len()
            )));
        }
        for rec in &self.interactions {
            if rec.user as usize >= self.num_users() {
                return Err(Error::OutOfRange {
                    context: "user id",
                    index: rec.user as usize,
                    len: self.num_users(),
                });
            }
            let d = rec.domain as usize;
            if d >= self.num_domains() {
                return Err(Error::OutOfRange {
                    context: "domain id",
                    index: d,
                    len: self.num_domains(),
                });
            }
            if rec.item as usize >= self.items[d].len() {
                return Err(Error::OutOfRange {
                    context: "item id",
                    index: rec.item as usize,
                    len: self.items[d].len(),
                });
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_domains(&self) -> usize {
        self.domains.len()
    }

    pub fn items_per_domain(&self) -> Vec<usize> {
        self.items.iter().map(IdMap::len).collect()
    }

    pub fn interactions_per_domain(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_domains()];
        for rec in &self.interactions {
            counts[rec.domain as usize] += 1;
        }
        counts
    }

    /// Inverse mapping of one record back to its original keys.
    pub fn keys_of(&self, rec: &Interaction) -> Option<(&str, &str, &str)> {
        Some((
            self.users.key(rec.user)?,
            self.items.get(rec.domain as usize)?.key(rec.item)?,
            self.domains.key(rec.domain)?,
        ))
    }

    /// Same id tables, different records.
    pub fn with_interactions(&self, interactions: Vec<Interaction>) -> Self {
        Self {
            users: self.users.clone(),
            domains: self.domains.clone(),
            items: self.items.clone(),
            interactions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub train: InteractionLog,
    /// At most one record per (user, domain), sorted by (user, domain).
    pub test: Vec<Interaction>,
}

impl SplitDataset {
    /// Train and test records recombined over the same id tables.
    pub fn merged(&self) -> InteractionLog {
        let mut all = self.train.interactions.clone();
        all.extend_from_slice(&self.test);
        self.train.with_interactions(all)
    }
}

/// Holds out the latest interaction of every (user, domain) pair that has at
/// least two. Ties on timestamp go to the larger item id, then to the later
/// record.
pub fn split_leave_latest(log: &InteractionLog) -> Result<SplitDataset> {
    if log.interactions.is_empty() {
        return Err(Error::Empty("interaction log"));
    }
    // (user, domain) -> (count, position of current latest)
    let mut groups: BTreeMap<(u32, u32), (usize, usize)> = BTreeMap::new();
    for (pos, rec) in log.interactions.iter().enumerate() {
        let entry = groups.entry((rec.user, rec.domain)).or_insert((0, pos));
        entry.0 += 1;
        let best = &log.interactions[entry.1];
        if (rec.timestamp, rec.item, pos) > (best.timestamp, best.item, entry.1) {
            entry.1 = pos;
        }
    }
    let mut held_out = alloc::vec![false; log.interactions.len()];
    let mut test = Vec::new();
    for &(count, pos) in groups.values() {
        if count >= 2 {
            held_out[pos] = true;
            test.push(log.interactions[pos]);
        }
    }
    let train = log
        .interactions
        .iter()
        .zip(&held_out)
        .filter(|(_, &out)| !out)
        .map(|(rec, _)| *rec)
        .collect();
    Ok(SplitDataset {
        train: log.with_interactions(train),
        test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainStats {
    pub domain: String,
    /// Users with at least one interaction in the domain.
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    /// `100 · interactions / (users · items)`.
    pub sparsity_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub domains: Vec<DomainStats>,
}

pub fn compute_stats(log: &InteractionLog) -> Result<DatasetStats> {
    if log.interactions.is_empty() {
        return Err(Error::Empty("interaction log"));
    }
    let nd = log.num_domains();
    let mut active: Vec<Vec<bool>> = alloc::vec![alloc::vec![false; log.num_users()]; nd];
    let mut seen_items: Vec<Vec<bool>> = log.items.iter().map(|m| alloc::vec![false; m.len()]).collect();
    let mut counts = alloc::vec![0usize; nd];
    for rec in &log.interactions {
        active[rec.domain as usize][rec.user as usize] = true;
        seen_items[rec.domain as usize][rec.item as usize] = true;
        counts[rec.domain as usize] += 1;
    }
    let mut domains = Vec::with_capacity(nd);
    for d in 0..nd {
        // Only users and items with at least one interaction count.
        let items = seen_items[d].iter().filter(|&&a| a).count();
        let name = String::from(log.domains.key(d as u32).unwrap_or_default());
        if items == 0 {
            return Err(Error::Data(format!("domain {name:?} has no interactions")));
        }
        let users = active[d].iter().filter(|&&a| a).count();
        let sparsity_percent = if users == 0 {
            0.0
        } else {
            100.0 * counts[d] as f64 / (users as f64 * items as f64)
        };
        domains.push(DomainStats {
            domain: name,
            users,
            items,
            interactions: counts[d],
            sparsity_percent,
        });
    }
    Ok(DatasetStats { domains })
}

/// Sparsity in percent for externally supplied counts.
pub fn sparsity_percent(users: usize, items: usize, interactions: usize) -> f64 {
    100.0 * interactions as f64 / (users as f64 * items as f64)
}
