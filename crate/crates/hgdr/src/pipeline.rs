//! Shared steps of the commands: loading splits, training, evaluation.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hgdr_core::data::{split_leave_latest, InteractionLog, RawInteraction, SplitDataset};
use hgdr_core::eval::{build_eval_tasks, evaluate, MetricReport};
use hgdr_core::model::{init_params, ModelParams};
use hgdr_core::train::{EpochReport, Trainer, Validation};
use hgdr_core::HeteroGraph;

use crate::config::RunConfig;
use crate::tsv;

pub const TRAIN_FILE: &str = "train.tsv";
pub const TEST_FILE: &str = "test.tsv";
pub const STATS_FILE: &str = "stats.txt";
pub const GRAPH_FILE: &str = "graph.bin";

/// Writes `train.tsv` and `test.tsv` into `dir`.
pub fn write_split(split: &SplitDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    tsv::write_log(&split.train, &dir.join(TRAIN_FILE))?;
    let test = BufWriter::new(fs::File::create(dir.join(TEST_FILE))?);
    tsv::write_records(&split.train, &split.test, test)?;
    Ok(())
}

/// A directory written by `prepare` or a raw interaction TSV, which is
/// split here.
pub fn load_split(path: &Path) -> Result<SplitDataset> {
    if path.is_dir() {
        return read_split_dir(path);
    }
    let log = tsv::read_log(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(split_leave_latest(&log)?)
}

fn read_split_dir(dir: &Path) -> Result<SplitDataset> {
    let read = |name: &str| -> Result<Vec<RawInteraction>> {
        let p = dir.join(name);
        let log = tsv::read_log(&p).with_context(|| format!("reading {}", p.display()))?;
        Ok(log
            .interactions
            .iter()
            .map(|r| {
                let (u, i, d) = log.keys_of(r).expect("ids from this log");
                RawInteraction {
                    user_key: u.into(),
                    item_key: i.into(),
                    domain_key: d.into(),
                    timestamp: r.timestamp,
                }
            })
            .collect())
    };
    let train = read(TRAIN_FILE)?;
    let test = read(TEST_FILE)?;
    let n_train = train.len();
    // Keys are interned over train then test, matching the original log's
    // first-seen order for everything that survived into train.
    let mut all = train;
    all.extend(test);
    let n_all = all.len();
    let log = InteractionLog::from_raw(all)?;
    if log.interactions.len() != n_all {
        bail!("{} lists an interaction in both train and test", dir.display());
    }
    let (train_recs, test_recs) = log.interactions.split_at(n_train);
    Ok(SplitDataset {
        train: log.with_interactions(train_recs.to_vec()),
        test: test_recs.to_vec(),
    })
}

pub struct Trained {
    pub params: ModelParams,
    pub history: Vec<EpochReport>,
    /// Epoch and validation NDCG of the kept parameters when validating.
    pub best: Option<(usize, f64)>,
}

/// Trains from a fresh initialisation. With `validate_every > 0` the latest
/// interaction of each training pair is held out, the model trains on the
/// rest and the best-scoring parameters on that hold-out are returned.
pub fn train_model(
    cfg: &RunConfig,
    split: &SplitDataset,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<Trained> {
    let (train_log, inner) = if cfg.validate_every > 0 {
        let inner = split_leave_latest(&split.train)?;
        (inner.train.clone(), Some(inner))
    } else {
        (split.train.clone(), None)
    };
    let graph = HeteroGraph::build(&train_log)?;
    let model = cfg.model_config(graph.num_users(), graph.items_per_domain().to_vec());
    let params = init_params(&model, cfg.seed)?;
    let mut trainer = Trainer::new(&graph, params, cfg.train.clone())?;
    let tasks = match &inner {
        Some(inner) => build_eval_tasks(inner, cfg.seed, cfg.negatives)?.tasks,
        None => Vec::new(),
    };
    let validation = inner.as_ref().map(|_| Validation {
        tasks: &tasks,
        every: cfg.validate_every,
    });
    let outcome = trainer.fit(validation, &mut on_epoch)?;
    Ok(Trained {
        params: trainer.into_params(),
        history: outcome.history,
        best: outcome.best,
    })
}

/// Ranks each test positive against sampled negatives using the training
/// graph for propagation.
pub fn evaluate_model(
    params: &ModelParams,
    split: &SplitDataset,
    seed: u64,
    negatives: usize,
    cutoff: usize,
) -> Result<MetricReport> {
    let graph = HeteroGraph::build(&split.train)?;
    let tasks = build_eval_tasks(split, seed, negatives)?;
    if tasks.tasks.is_empty() {
        bail!("no evaluable test records ({} skipped)", tasks.skipped);
    }
    Ok(evaluate(params, &graph, &tasks.tasks, cutoff)?)
}

pub fn domain_names(log: &InteractionLog) -> Vec<String> {
    log.domains.keys().to_vec()
}
