use hgdr_core::data::split_leave_latest;
use hgdr_core::eval::{build_eval_tasks, evaluate, DEFAULT_CUTOFF, DEFAULT_NEGATIVES};
use hgdr_core::model::{init_params, ModelParams};
use hgdr_core::synth::{generate_synthetic, SyntheticSpec};
use hgdr_core::{HeteroGraph, ModelConfig, Variant};
use std::collections::BTreeSet;

fn dataset(users: usize, items: usize, temperature: f64) -> hgdr_core::data::SplitDataset {
    let data = generate_synthetic(&SyntheticSpec {
        users,
        domains: 2,
        items_per_domain: items,
        interactions_per_user: 4,
        temperature,
        seed: 6,
        ..SyntheticSpec::default()
    })
    .unwrap();
    split_leave_latest(&data.log).unwrap()
}

#[test]
fn tasks_satisfy_membership_rules() {
    let split = dataset(300, 150, 1.0);
    let set = build_eval_tasks(&split, 1, DEFAULT_NEGATIVES).unwrap();
    assert_eq!(set.skipped, 0);
    assert_eq!(set.tasks.len(), split.test.len());
    for t in &set.tasks {
        let (d, u) = (t.domain, t.user);
        let observed: BTreeSet<u32> = split
            .merged()
            .interactions
            .iter()
            .filter(|r| r.domain == d && r.user == u)
            .map(|r| r.item)
            .collect();
        assert!(observed.contains(&t.positive));
        let negs: BTreeSet<u32> = t.negatives.iter().copied().collect();
        assert_eq!(negs.len(), DEFAULT_NEGATIVES);
        assert!(negs.is_disjoint(&observed));
        assert!(negs.iter().all(|&i| (i as usize) < 150));
        assert_eq!(t.candidates().count(), 100);
    }
    assert_eq!(build_eval_tasks(&split, 1, DEFAULT_NEGATIVES).unwrap(), set);
    assert_ne!(build_eval_tasks(&split, 2, DEFAULT_NEGATIVES).unwrap(), set);
}

#[test]
fn exactly_enough_items_uses_all_of_them() {
    // 4 interactions per user and 103 items leaves exactly 99 unobserved.
    let split = dataset(20, 103, 1.0);
    let set = build_eval_tasks(&split, 0, DEFAULT_NEGATIVES).unwrap();
    assert!(!set.tasks.is_empty());
    for t in &set.tasks {
        assert_eq!(t.negatives.len(), 99);
    }
    // One fewer item and every task is skipped.
    let short = dataset(20, 102, 1.0);
    let set = build_eval_tasks(&short, 0, DEFAULT_NEGATIVES).unwrap();
    assert_eq!(set.skipped, short.test.len());
}

#[test]
fn constant_model_never_hits() {
    let split = dataset(200, 120, 1.0);
    let g = HeteroGraph::build(&split.train).unwrap();
    let tasks = build_eval_tasks(&split, 0, DEFAULT_NEGATIVES).unwrap().tasks;
    let params = ModelParams::zeros(&ModelConfig { dim: 4, ..ModelConfig::for_graph(&g) }).unwrap();
    let report = evaluate(&params, &g, &tasks, DEFAULT_CUTOFF).unwrap();
    for m in &report.domains {
        assert_eq!(m.hit_rate, 0.0);
        assert_eq!(m.ndcg, 0.0);
    }
}

#[test]
fn random_model_hits_one_in_ten() {
    let split = dataset(1500, 200, 1e6);
    let g = HeteroGraph::build(&split.train).unwrap();
    let tasks = build_eval_tasks(&split, 0, DEFAULT_NEGATIVES).unwrap().tasks;
    assert!(tasks.len() >= 2000);
    for variant in [Variant::Full, Variant::Mf] {
        let cfg = ModelConfig { dim: 16, variant, ..ModelConfig::for_graph(&g) };
        let report = evaluate(&init_params(&cfg, 9).unwrap(), &g, &tasks, DEFAULT_CUTOFF).unwrap();
        let n: usize = report.domains.iter().map(|m| m.users).sum();
        let hits: f64 = report.domains.iter().map(|m| m.hit_rate * m.users as f64).sum();
        let hr = hits / n as f64;
        let se = (0.1 * 0.9 / n as f64).sqrt();
        assert!((hr - 0.1).abs() < 3.0 * se, "{variant:?}: HR {hr} over {n} tasks");
    }
}
