mod support;

use hgdr_core::model::{
    forward, forward_output, forward_shared_layer, forward_specific_layer, init_params, score,
    ModelParams, RelationWeights, SharedWeights,
};
use hgdr_core::numeric::Matrix;
use hgdr_core::train::Objective;
use hgdr_core::{HeteroGraph, ModelConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{fixed_batches, gradient_errors, naive_forward, random_edges};

fn identity_relations(k: usize) -> RelationWeights {
    RelationWeights {
        user_self: Matrix::identity(k),
        item_to_user: Matrix::identity(k),
        item_self: Matrix::identity(k),
        user_to_item: Matrix::identity(k),
    }
}

fn row(values: &[f64]) -> Matrix {
    Matrix::from_vec(1, values.len(), values.to_vec()).unwrap()
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }
}

#[test]
fn specific_layer_zero_embeddings_stay_zero() {
    let g = HeteroGraph::from_edges(2, &[3], &[(0, 0, 1), (0, 1, 2)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = RelationWeights {
        user_self: Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0)),
        item_to_user: Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0)),
        item_self: Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0)),
        user_to_item: Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0)),
    };
    let out =
        forward_specific_layer(&g, 0, &Matrix::zeros(2, 4), &Matrix::zeros(3, 4), &w, false).unwrap();
    assert_eq!(out.user, Matrix::zeros(2, 4));
    assert_eq!(out.item, Matrix::zeros(3, 4));
}

#[test]
fn specific_layer_identity_weights_add_neighbour() {
    let g = HeteroGraph::from_edges(1, &[1], &[(0, 0, 0)]).unwrap();
    let e_u = row(&[0.5, 1.0, 0.0]);
    let e_i = row(&[0.25, 0.0, 2.0]);
    let out = forward_specific_layer(&g, 0, &e_u, &e_i, &identity_relations(3), false).unwrap();
    assert_eq!(out.user.as_slice(), &[0.75, 1.0, 2.0]);
    assert_eq!(out.item.as_slice(), &[0.75, 1.0, 2.0]);
}

#[test]
fn shared_layer_identity_weights_sum_all_domains() {
    // One user with item A in domain 0 and item B in domain 1.
    let g = HeteroGraph::from_edges(1, &[1, 1], &[(0, 0, 0), (1, 0, 0)]).unwrap();
    let k = 2;
    let e_u = row(&[1.0, 0.5]);
    let items = vec![row(&[0.25, 0.0]), row(&[0.0, 3.0])];
    let w = SharedWeights {
        user_self: Matrix::identity(k),
        item_self: Matrix::identity(k),
        item_to_user: vec![Matrix::identity(k), Matrix::identity(k)],
        user_to_item: vec![Matrix::identity(k), Matrix::identity(k)],
    };
    let iu: Vec<&Matrix> = w.item_to_user.iter().collect();
    let ui: Vec<&Matrix> = w.user_to_item.iter().collect();
    let out = forward_shared_layer(&g, &e_u, &items, &w, &iu, &ui, false).unwrap();
    assert_eq!(out.user.as_slice(), &[1.25, 3.5]);

    // Active in one domain only: the other domain's term vanishes.
    let single = HeteroGraph::from_edges(1, &[1, 1], &[(0, 0, 0)]).unwrap();
    let out = forward_shared_layer(&single, &e_u, &items, &w, &iu, &ui, false).unwrap();
    assert_eq!(out.user.as_slice(), &[1.25, 0.5]);
}

#[test]
fn output_fusion_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rand = |r, c| Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let (h, g, hi, gi) = (rand(3, 4), rand(3, 4), rand(2, 4), rand(2, 4));
    let (_, ou, oi) =
        forward_output(Some(&h), Some(&g), Some(&hi), Some(&gi), &Matrix::identity(4)).unwrap();
    assert_eq!(ou, h.add(&g).unwrap());
    assert_eq!(oi, hi.add(&gi).unwrap());

    let mut neg = h.clone();
    neg.scale(-1.0);
    let w = rand(4, 4);
    let (_, zero, _) = forward_output(Some(&h), Some(&neg), Some(&hi), Some(&gi), &w).unwrap();
    assert_eq!(zero, Matrix::zeros(3, 4));

    // Direct re-evaluation of the fusion, entry by entry.
    let (_, ou, oi) = forward_output(Some(&h), Some(&g), Some(&hi), Some(&gi), &w).unwrap();
    for u in 0..3 {
        for j in 0..4 {
            let expect: f64 = (0..4).map(|k| (h.get(u, k) + g.get(u, k)) * w.get(k, j)).sum();
            assert!((ou.get(u, j) - expect).abs() < 1e-12);
        }
    }
    for i in 0..2 {
        for j in 0..4 {
            assert!((oi.get(i, j) - (hi.get(i, j) + gi.get(i, j))).abs() < 1e-12);
        }
    }
}

#[test]
fn score_cases() {
    assert_eq!(score(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
    let unit = [0.6, 0.8];
    assert!((score(&unit, &unit).unwrap() - 1.0).abs() < 1e-15);
    assert!(score(&[1.0], &[1.0, 2.0]).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<f64> = (0..128).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..128).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut expect = 0.0;
    for k in 0..128 {
        expect += a[k] * b[k];
    }
    assert!((score(&a, &b).unwrap() - expect).abs() < 1e-12);
}

fn config(users: usize, items: Vec<usize>, k: usize, layers: usize) -> ModelConfig {
    ModelConfig {
        dim: k,
        layers,
        ..ModelConfig::new(users, items)
    }
}

fn check_against_oracle(cfg: &ModelConfig, seed: u64, density: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_edges(&mut rng, cfg.num_users, &cfg.items_per_domain, density);
    let g = HeteroGraph::from_edges(cfg.num_users, &cfg.items_per_domain, &edges).unwrap();
    let p = init_params(cfg, seed).unwrap();
    let acts = forward(&p, &g).unwrap();
    let reference = naive_forward(&p, &edges);
    for d in 0..cfg.num_domains() {
        for u in 0..cfg.num_users {
            assert_close(acts.user_out[d].row(u), &reference[d].0[u], 1e-10);
        }
        for i in 0..cfg.items_per_domain[d] {
            assert_close(acts.item_out[d].row(i), &reference[d].1[i], 1e-10);
        }
    }
}

#[test]
fn forward_matches_nested_loop_oracle_all_variants() {
    for (n, variant) in Variant::ALL.into_iter().enumerate() {
        for seed in 0..4 {
            let cfg = ModelConfig {
                variant,
                ..config(4, vec![3, 2], 5, 2)
            };
            check_against_oracle(&cfg, 100 * n as u64 + seed, 0.4);
        }
    }
}

#[test]
fn forward_matches_oracle_with_flags() {
    for seed in 0..4 {
        let tied = ModelConfig {
            tie_relation_weights: true,
            ..config(5, vec![2, 3, 2], 4, 2)
        };
        check_against_oracle(&tied, seed, 0.5);
        let mean = ModelConfig {
            mean_aggregation: true,
            ..config(5, vec![4, 3], 4, 2)
        };
        check_against_oracle(&mean, seed, 0.6);
        let deep = config(3, vec![3, 3], 3, 3);
        check_against_oracle(&deep, seed, 0.5);
        let shallow = config(3, vec![2, 2], 3, 0);
        check_against_oracle(&shallow, seed, 0.5);
    }
}

#[test]
fn shared_path_zeroed_isolates_domains() {
    let cfg = config(5, vec![4, 4, 3], 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let edges = random_edges(&mut rng, 5, &cfg.items_per_domain, 0.4);
    let mut p = init_params(&cfg, 11).unwrap();
    p.zero_shared_path();
    let base = forward(&p, &HeteroGraph::from_edges(5, &cfg.items_per_domain, &edges).unwrap()).unwrap();
    // Add and drop edges of domain 2; domains 0 and 1 must not move at all.
    let mut perturbed: Vec<_> = edges.iter().copied().filter(|e| !(e.0 == 2 && e.1 == 0)).collect();
    perturbed.push((2, 3, 0));
    perturbed.push((2, 4, 2));
    let moved = forward(&p, &HeteroGraph::from_edges(5, &cfg.items_per_domain, &perturbed).unwrap()).unwrap();
    for d in 0..2 {
        assert_eq!(base.user_out[d], moved.user_out[d]);
        assert_eq!(base.item_out[d], moved.item_out[d]);
    }
}

#[test]
fn isolated_user_depends_only_on_itself() {
    let cfg = config(4, vec![3, 3], 4, 2);
    let p = init_params(&cfg, 5).unwrap();
    // User 3 has no edges in either graph; the rest of the graph differs.
    let a = HeteroGraph::from_edges(4, &[3, 3], &[(0, 0, 0), (1, 1, 2), (0, 2, 1)]).unwrap();
    let b = HeteroGraph::from_edges(4, &[3, 3], &[(0, 1, 1), (1, 0, 0), (1, 2, 2), (0, 0, 2)]).unwrap();
    let fa = forward(&p, &a).unwrap();
    let fb = forward(&p, &b).unwrap();
    for d in 0..2 {
        assert_eq!(fa.user_out[d].row(3), fb.user_out[d].row(3));
    }
}

#[test]
fn forward_rejects_mismatched_graph() {
    let p = init_params(&config(3, vec![2], 2, 1), 0).unwrap();
    let g = HeteroGraph::from_edges(4, &[2], &[(0, 0, 0)]).unwrap();
    assert!(forward(&p, &g).is_err());
}

fn objective(nd: usize) -> Objective {
    Objective {
        domain_weights: (0..nd).map(|d| 0.5 + d as f64).collect(),
        lambda: 1e-2,
        reg_per_domain: false,
    }
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let cfg = config(3, vec![2, 2], 3, 2);
    let p = init_params(&cfg, 0).unwrap();
    let g = HeteroGraph::from_edges(3, &[2, 2], &[(0, 0, 0), (1, 1, 1), (0, 2, 1)]).unwrap();
    let acts = forward(&p, &g).unwrap();
    let zu: Vec<_> = acts.user_out.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    let zi: Vec<_> = acts.item_out.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    let grads = hgdr_core::model::backward(&p, &g, &acts, &zu, &zi).unwrap();
    assert_eq!(grads, p.zeros_like());
    // Caches from another variant are refused.
    let other = init_params(&ModelConfig { variant: Variant::Mf, ..cfg }, 0).unwrap();
    let wrong = forward(&other, &g).unwrap();
    assert!(hgdr_core::model::backward(&p, &g, &wrong, &zu, &zi).is_err());
}

#[test]
fn single_edge_identity_gradient() {
    // Two items so a negative exists; one layer with identity weights.
    let cfg = config(1, vec![2], 3, 1);
    let mut p = init_params(&cfg, 4).unwrap();
    p.for_each_mut(|name, m| {
        if !matches!(
            name.kind,
            hgdr_core::model::ParamKind::UserEmbedding | hgdr_core::model::ParamKind::ItemEmbedding
        ) {
            *m = Matrix::identity(3);
        }
    });
    let g = HeteroGraph::from_edges(1, &[2], &[(0, 0, 0)]).unwrap();
    let batches = fixed_batches(&g, 0);
    let errs = gradient_errors(&p, &g, &batches, &objective(1), 1e-5);
    for (name, err) in errs {
        assert!(err < 1e-6, "{name}: {err}");
    }
}

fn assert_gradients(cfg: &ModelConfig, seed: u64, tol: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_edges(&mut rng, cfg.num_users, &cfg.items_per_domain, 0.45);
    let g = HeteroGraph::from_edges(cfg.num_users, &cfg.items_per_domain, &edges).unwrap();
    let p = init_params(cfg, seed).unwrap();
    let batches = fixed_batches(&g, seed);
    for (name, err) in gradient_errors(&p, &g, &batches, &objective(cfg.num_domains()), 1e-5) {
        assert!(err < tol, "{:?} seed {seed} {name}: {err}", cfg.variant);
    }
}

#[test]
fn full_model_gradients_match_finite_differences() {
    // 10 nodes: 4 users, 3 + 3 items.
    for seed in 0..3 {
        assert_gradients(&config(4, vec![3, 3], 4, 2), seed, 1e-4);
    }
}

#[test]
fn variant_and_flag_gradients_match_finite_differences() {
    for variant in [Variant::SpecificOnly, Variant::SharedOnly, Variant::Mf] {
        assert_gradients(&ModelConfig { variant, ..config(4, vec![3, 3], 3, 2) }, 7, 1e-4);
    }
    let tied = ModelConfig {
        tie_relation_weights: true,
        ..config(4, vec![3, 2], 3, 2)
    };
    assert_gradients(&tied, 8, 1e-4);
    let mean = ModelConfig {
        mean_aggregation: true,
        ..config(4, vec![3, 3], 3, 2)
    };
    assert_gradients(&mean, 9, 1e-4);
}

#[test]
fn regularisation_per_domain_gradient() {
    let cfg = config(3, vec![3, 3], 3, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let edges = random_edges(&mut rng, 3, &[3, 3], 0.5);
    let g = HeteroGraph::from_edges(3, &[3, 3], &edges).unwrap();
    let p: ModelParams = init_params(&cfg, 12).unwrap();
    let obj = Objective {
        reg_per_domain: true,
        ..objective(2)
    };
    for (name, err) in gradient_errors(&p, &g, &fixed_batches(&g, 1), &obj, 1e-5) {
        assert!(err < 1e-4, "{name}: {err}");
    }
}
