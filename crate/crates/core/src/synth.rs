//! Synthetic multi-domain implicit feedback with a tunable amount of
//! preference shared across domains.
//!
//! Each user has a global latent vector `z_u` and one private vector `p_ud`
//! per domain; the preference used in domain `d` is
//! `√s · z_u + √(1 − s) · p_ud` with `s = shared_signal`, so the
//! correlation between a user's preferences in two domains is `s`. Items
//! get independent latent vectors and a user's interactions in a domain are
//! drawn without replacement with probability proportional to
//! `softmax(pref · item / (√dim · temperature))`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};

use crate::data::{IdMap, Interaction, InteractionLog};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub users: usize,
    pub domains: usize,
    pub items_per_domain: usize,
    pub latent_dim: usize,
    /// Fraction of a user's preference variance common to all domains.
    pub shared_signal: f64,
    pub interactions_per_user: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            users: 1000,
            domains: 2,
            items_per_domain: 200,
            latent_dim: 16,
            shared_signal: 0.5,
            interactions_per_user: 10,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.shared_signal) {
            return Err(Error::Config(format!(
                "shared_signal must lie in [0, 1], got {}",
                self.shared_signal
            )));
        }
        if self.users == 0
            || self.domains == 0
            || self.items_per_domain == 0
            || self.latent_dim == 0
            || self.interactions_per_user == 0
        {
            return Err(Error::Config("synthetic counts must be positive".into()));
        }
        if self.interactions_per_user > self.items_per_domain {
            return Err(Error::Config(format!(
                "{} interactions per user exceed {} items per domain",
                self.interactions_per_user, self.items_per_domain
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        Ok(())
    }
}

/// Ground-truth counts emitted alongside a generated log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub users: usize,
    pub domains: usize,
    pub items_per_domain: Vec<usize>,
    pub interactions_per_domain: Vec<usize>,
    /// Users with at least one interaction, per domain.
    pub active_users: Vec<usize>,
    /// Items with at least one interaction, per domain.
    pub active_items: Vec<usize>,
    /// Per domain, number of users by degree.
    pub user_degrees: Vec<BTreeMap<usize, usize>>,
    /// Per domain, number of items by degree (zero-degree items included).
    pub item_degrees: Vec<BTreeMap<usize, usize>>,
}

impl Manifest {
    pub fn total_interactions(&self) -> usize {
        self.interactions_per_domain.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `users × dim`.
    pub user_global: Matrix,
    /// Per domain, the mixed preference actually used for sampling.
    pub user_preference: Vec<Matrix>,
    /// Per domain, `items × dim`.
    pub item_latent: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub log: InteractionLog,
    pub manifest: Manifest,
    pub truth: GroundTruth,
}

fn normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn user_key(u: usize) -> alloc::string::String {
    format!("u{u}")
}

pub fn item_key(d: usize, i: usize) -> alloc::string::String {
    format!("d{d}:i{i}")
}

pub fn domain_key(d: usize) -> alloc::string::String {
    format!("d{d}")
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = crate::seeded_stream(spec.seed, 0);
    let k = spec.latent_dim;
    let s = spec.shared_signal;
    let (w_shared, w_private) = (libm::sqrt(s), libm::sqrt(1.0 - s));

    let user_global = normal_matrix(spec.users, k, &mut rng);
    let mut user_preference = Vec::with_capacity(spec.domains);
    let mut item_latent = Vec::with_capacity(spec.domains);
    for _ in 0..spec.domains {
        let private = normal_matrix(spec.users, k, &mut rng);
        let pref = Matrix::from_fn(spec.users, k, |u, c| {
            w_shared * user_global.get(u, c) + w_private * private.get(u, c)
        });
        user_preference.push(pref);
        item_latent.push(normal_matrix(spec.items_per_domain, k, &mut rng));
    }

    let per_user = spec.interactions_per_user.min(spec.items_per_domain);
    let scale = 1.0 / (libm::sqrt(k as f64) * spec.temperature);
    let gumbel = Gumbel::new(0.0, 1.0).expect("valid gumbel parameters");
    let mut interactions = Vec::with_capacity(spec.users * spec.domains * per_user);
    let mut keys: Vec<(f64, u32)> = Vec::with_capacity(spec.items_per_domain);
    let mut stamps: Vec<i64> = (0..per_user as i64).collect();
    for u in 0..spec.users {
        for d in 0..spec.domains {
            let pref = user_preference[d].row(u);
            keys.clear();
            for i in 0..spec.items_per_domain {
                let logit: f64 = pref
                    .iter()
                    .zip(item_latent[d].row(i))
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * scale;
                let g: f64 = gumbel.sample(&mut rng);
                keys.push((logit + g, i as u32));
            }
            // Top-k of logit + Gumbel noise is a draw without replacement
            // from the softmax distribution.
            keys.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            stamps.shuffle(&mut rng);
            let mut picked: Vec<(i64, u32)> = keys[..per_user]
                .iter()
                .zip(&stamps)
                .map(|(&(_, item), &t)| (t, item))
                .collect();
            picked.sort_unstable();
            interactions.extend(picked.into_iter().map(|(timestamp, item)| Interaction {
                user: u as u32,
                item,
                domain: d as u32,
                timestamp,
            }));
        }
    }
    if interactions.is_empty() {
        return Err(Error::Empty("synthetic interactions"));
    }

    let users = IdMap::from_keys((0..spec.users).map(user_key))?;
    let domains = IdMap::from_keys((0..spec.domains).map(domain_key))?;
    let items = (0..spec.domains)
        .map(|d| IdMap::from_keys((0..spec.items_per_domain).map(|i| item_key(d, i))))
        .collect::<Result<Vec<_>>>()?;
    let log = InteractionLog::from_parts(users, domains, items, interactions)?;
    let manifest = manifest_for(&log);
    Ok(SyntheticData {
        log,
        manifest,
        truth: GroundTruth {
            user_global,
            user_preference,
            item_latent,
        },
    })
}

/// Counts and degree distributions of a log.
pub fn manifest_for(log: &InteractionLog) -> Manifest {
    let nd = log.num_domains();
    let mut user_deg: Vec<Vec<usize>> = alloc::vec![alloc::vec![0; log.num_users()]; nd];
    let mut item_deg: Vec<Vec<usize>> = log.items.iter().map(|m| alloc::vec![0; m.len()]).collect();
    for rec in &log.interactions {
        user_deg[rec.domain as usize][rec.user as usize] += 1;
        item_deg[rec.domain as usize][rec.item as usize] += 1;
    }
    let hist = |deg: &[usize]| {
        let mut h = BTreeMap::new();
        for &x in deg {
            *h.entry(x).or_insert(0) += 1;
        }
        h
    };
    Manifest {
        users: log.num_users(),
        domains: nd,
        items_per_domain: log.items_per_domain(),
        interactions_per_domain: log.interactions_per_domain(),
        active_users: user_deg.iter().map(|v| v.iter().filter(|&&x| x > 0).count()).collect(),
        active_items: item_deg.iter().map(|v| v.iter().filter(|&&x| x > 0).count()).collect(),
        user_degrees: user_deg.iter().map(|v| hist(v)).collect(),
        item_degrees: item_deg.iter().map(|v| hist(v)).collect(),
    }
}
