//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

use hgdr_core::model::ModelParams;
use hgdr_core::numeric::{finite_diff_grad, max_relative_error, Matrix};
use hgdr_core::train::{loss_and_grad, total_loss, Objective, Triplet};
use hgdr_core::{HeteroGraph, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<f64>>;

fn to_rows(m: &Matrix) -> Rows {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `x · W` for a single row, written as an explicit loop.
fn row_times(x: &[f64], w: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for j in 0..w.cols() {
        let mut s = 0.0;
        for k in 0..x.len() {
            s += x[k] * w.get(k, j);
        }
        out[j] = s;
    }
    out
}

fn add_into(acc: &mut [f64], x: &[f64], scale: f64) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += scale * b;
    }
}

/// Outputs `(o_u^d, o_i^d)` per domain computed straight from the layer
/// equations with an edge list, nested loops and per-edge transforms. No
/// CSR, no batching, no shared code with the engine.
pub fn naive_forward(params: &ModelParams, edges: &[(u32, u32, u32)]) -> Vec<(Rows, Rows)> {
    let cfg = &params.config;
    let nd = cfg.num_domains();
    let nu = cfg.num_users;
    let k = cfg.dim;
    if cfg.variant == Variant::Mf {
        return (0..nd)
            .map(|d| (to_rows(&params.user_embeddings[d]), to_rows(&params.item_embeddings[d])))
            .collect();
    }
    let mut e: Vec<(u32, u32, u32)> = edges.to_vec();
    e.sort();
    e.dedup();
    let user_nbrs = |d: usize, u: usize| -> Vec<usize> {
        e.iter()
            .filter(|x| x.0 as usize == d && x.1 as usize == u)
            .map(|x| x.2 as usize)
            .collect()
    };
    let item_nbrs = |d: usize, i: usize| -> Vec<usize> {
        e.iter()
            .filter(|x| x.0 as usize == d && x.2 as usize == i)
            .map(|x| x.1 as usize)
            .collect()
    };
    let norm = |n: usize| if cfg.mean_aggregation && n > 0 { 1.0 / n as f64 } else { 1.0 };

    // Specific path.
    let mut h_u: Vec<Rows> = vec![to_rows(&params.user_embeddings[0]); nd];
    let mut h_i: Vec<Rows> = (0..nd).map(|d| to_rows(&params.item_embeddings[d])).collect();
    if cfg.variant.has_specific() {
        for l in 0..cfg.layers {
            for d in 0..nd {
                let w = &params.specific[l][d];
                let mut nu_rows = vec![vec![0.0; k]; nu];
                for u in 0..nu {
                    let mut pre = row_times(&h_u[d][u], &w.user_self);
                    let nb = user_nbrs(d, u);
                    for &i in &nb {
                        add_into(&mut pre, &row_times(&h_i[d][i], &w.item_to_user), norm(nb.len()));
                    }
                    nu_rows[u] = pre.into_iter().map(relu).collect();
                }
                let mut ni_rows = vec![vec![0.0; k]; cfg.items_per_domain[d]];
                for i in 0..cfg.items_per_domain[d] {
                    let mut pre = row_times(&h_i[d][i], &w.item_self);
                    let nb = item_nbrs(d, i);
                    for &u in &nb {
                        add_into(&mut pre, &row_times(&h_u[d][u], &w.user_to_item), norm(nb.len()));
                    }
                    ni_rows[i] = pre.into_iter().map(relu).collect();
                }
                h_u[d] = nu_rows;
                h_i[d] = ni_rows;
            }
        }
    }

    // Shared path.
    let mut g_u: Rows = to_rows(&params.user_embeddings[0]);
    let mut g_i: Vec<Rows> = (0..nd).map(|d| to_rows(&params.item_embeddings[d])).collect();
    if cfg.variant.has_shared() {
        for l in 0..cfg.layers {
            let s = &params.shared[l];
            let iu = |d: usize| {
                if cfg.tie_relation_weights {
                    &params.specific[l][d].item_to_user
                } else {
                    &s.item_to_user[d]
                }
            };
            let ui = |d: usize| {
                if cfg.tie_relation_weights {
                    &params.specific[l][d].user_to_item
                } else {
                    &s.user_to_item[d]
                }
            };
            let mut nu_rows = vec![vec![0.0; k]; nu];
            for u in 0..nu {
                let mut pre = row_times(&g_u[u], &s.user_self);
                for d in 0..nd {
                    let nb = user_nbrs(d, u);
                    for &i in &nb {
                        add_into(&mut pre, &row_times(&g_i[d][i], iu(d)), norm(nb.len()));
                    }
                }
                nu_rows[u] = pre.into_iter().map(relu).collect();
            }
            let mut ni: Vec<Rows> = Vec::new();
            for d in 0..nd {
                let mut rows = vec![vec![0.0; k]; cfg.items_per_domain[d]];
                for i in 0..cfg.items_per_domain[d] {
                    let mut pre = row_times(&g_i[d][i], &s.item_self);
                    let nb = item_nbrs(d, i);
                    for &u in &nb {
                        add_into(&mut pre, &row_times(&g_u[u], ui(d)), norm(nb.len()));
                    }
                    rows[i] = pre.into_iter().map(relu).collect();
                }
                ni.push(rows);
            }
            g_u = nu_rows;
            g_i = ni;
        }
    }

    // Output fusion.
    (0..nd)
        .map(|d| {
            let spec = cfg.variant.has_specific();
            let shared = cfg.variant.has_shared();
            let users: Rows = (0..nu)
                .map(|u| {
                    let mut fused = vec![0.0; k];
                    if spec {
                        add_into(&mut fused, &h_u[d][u], 1.0);
                    }
                    if shared {
                        add_into(&mut fused, &g_u[u], 1.0);
                    }
                    row_times(&fused, &params.output[d])
                })
                .collect();
            let items: Rows = (0..cfg.items_per_domain[d])
                .map(|i| {
                    let mut fused = vec![0.0; k];
                    if spec {
                        add_into(&mut fused, &h_i[d][i], 1.0);
                    }
                    if shared {
                        add_into(&mut fused, &g_i[d][i], 1.0);
                    }
                    fused
                })
                .collect();
            (users, items)
        })
        .collect()
}

/// Random graph with `users` users and the given item counts; each
/// possible edge is present with probability `density`.
pub fn random_edges(
    rng: &mut ChaCha8Rng,
    users: usize,
    items: &[usize],
    density: f64,
) -> Vec<(u32, u32, u32)> {
    let mut edges = Vec::new();
    for (d, &n) in items.iter().enumerate() {
        for u in 0..users {
            for i in 0..n {
                if rng.random_bool(density) {
                    edges.push((d as u32, u as u32, i as u32));
                }
            }
        }
    }
    edges
}

/// Triplets for every domain covering each edge once with a random
/// non-neighbour as negative (domains with no valid negative stay empty).
pub fn fixed_batches(graph: &HeteroGraph, seed: u64) -> Vec<Vec<Triplet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..graph.num_domains())
        .map(|d| {
            let mut out = Vec::new();
            for u in 0..graph.num_users() {
                let items = graph.user_items(d, u);
                let candidates: Vec<u32> = (0..graph.num_items(d) as u32)
                    .filter(|i| items.binary_search(i).is_err())
                    .collect();
                if candidates.is_empty() {
                    continue;
                }
                for &p in items {
                    let n = candidates[rng.random_range(0..candidates.len())];
                    out.push(Triplet {
                        user: u as u32,
                        pos_item: p,
                        neg_item: n,
                        domain: d as u32,
                    });
                }
            }
            out
        })
        .collect()
}

/// Per parameter matrix: (name, max relative error of analytic vs central
/// differences).
pub fn gradient_errors(
    params: &ModelParams,
    graph: &HeteroGraph,
    batches: &[Vec<Triplet>],
    objective: &Objective,
    h: f64,
) -> Vec<(String, f64)> {
    let (_, grads) = loss_and_grad(params, graph, batches, objective).unwrap();
    let analytic = grads.matrices();
    let names = params.names();
    let mut out = Vec::new();
    for (idx, name) in names.iter().enumerate() {
        let base = params.matrices()[idx].clone();
        let numeric = finite_diff_grad(
            |probe| {
                let mut p = params.clone();
                *p.matrices_mut()[idx] = probe.clone();
                Ok(total_loss(&p, graph, batches, objective)?.total)
            },
            &base,
            h,
        )
        .unwrap();
        out.push((name.to_string(), max_relative_error(analytic[idx], &numeric, 1e-8)));
    }
    out
}
