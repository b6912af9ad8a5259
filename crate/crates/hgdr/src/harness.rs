//! Experiment grid: every (dataset, mode, seed) combination is trained and
//! evaluated with the same settings, and one row per domain is appended to
//! a tab-separated results ledger.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hgdr_core::data::{split_leave_latest, SplitDataset};
use hgdr_core::synth::generate_synthetic;

use crate::config::RunConfig;
use crate::pipeline::{domain_names, evaluate_model, load_split, train_model};

pub const LEDGER_HEADER: &str =
    "dataset\tmode\tseed\tdomain\tusers\thr\tndcg\tbest_epoch\tseconds";

/// The dataset name `synthetic` generates a fresh log per seed from the
/// `synth.*` settings instead of reading a file.
pub const SYNTHETIC: &str = "synthetic";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub mode: String,
    pub seed: u64,
    pub domain: String,
    pub users: usize,
    pub hr: f64,
    pub ndcg: f64,
    pub best_epoch: Option<usize>,
    pub seconds: f64,
}

impl ResultRow {
    pub fn to_line(&self) -> String {
        let best = self.best_epoch.map_or("-".to_string(), |e| e.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{:.1}",
            self.dataset, self.mode, self.seed, self.domain, self.users, self.hr, self.ndcg, best, self.seconds
        )
    }
}

pub fn run_grid(cfg: &RunConfig, mut on_row: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>> {
    let grid = &cfg.bench;
    if grid.modes.is_empty() || grid.seeds.is_empty() || grid.datasets.is_empty() {
        bail!("bench needs bench.modes, bench.seeds and bench.datasets");
    }
    let mut cache: BTreeMap<PathBuf, SplitDataset> = BTreeMap::new();
    let mut rows = Vec::new();
    for dataset in &grid.datasets {
        let synthetic = dataset.file_name().is_some_and(|n| n == SYNTHETIC);
        let label = if synthetic {
            SYNTHETIC.to_string()
        } else {
            dataset.display().to_string()
        };
        for &seed in &grid.seeds {
            let split = if synthetic {
                let mut spec = cfg.synth.clone();
                spec.seed = seed;
                split_leave_latest(&generate_synthetic(&spec)?.log)?
            } else {
                if !cache.contains_key(dataset) {
                    let s = load_split(dataset).with_context(|| format!("dataset {label}"))?;
                    cache.insert(dataset.clone(), s);
                }
                cache[dataset].clone()
            };
            let names = domain_names(&split.train);
            for &mode in &grid.modes {
                let mut run = cfg.clone();
                run.mode = mode;
                run.set_seed(seed);
                let start = Instant::now();
                let trained = train_model(&run, &split, |_| {})?;
                let report = evaluate_model(&trained.params, &split, seed, run.negatives, run.cutoff)?;
                let seconds = start.elapsed().as_secs_f64();
                for m in &report.domains {
                    let row = ResultRow {
                        dataset: label.clone(),
                        mode: mode.as_str().to_string(),
                        seed,
                        domain: names[m.domain].clone(),
                        users: m.users,
                        hr: m.hit_rate,
                        ndcg: m.ndcg,
                        best_epoch: trained.best.map(|b| b.0),
                        seconds,
                    };
                    on_row(&row);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Appends rows, writing the header first if the ledger is new or empty.
pub fn append_ledger(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening ledger {}", path.display()))?;
    if fresh {
        writeln!(f, "{LEDGER_HEADER}")?;
    }
    for r in rows {
        writeln!(f, "{}", r.to_line())?;
    }
    Ok(())
}
