//! Subcommands of the `hgdr` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hgdr_core::data::{compute_stats, split_leave_latest};
use hgdr_core::model::init_params;
use hgdr_core::numeric::max_relative_error;
use hgdr_core::synth::{generate_synthetic, Manifest};
use hgdr_core::train::{loss_and_grad, numeric_gradient, Objective, Triplet};
use hgdr_core::{HeteroGraph, ModelConfig, Variant};
use rand::Rng;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::graph_dump::write_graph;
use crate::harness::{append_ledger, run_grid};
use crate::pipeline::{self, domain_names, evaluate_model, load_split, train_model};
use crate::report::{training_log_header, training_log_line, write_metric_kv, write_metric_table};
use crate::stats::write_stats_table;
use crate::tsv;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRAIN_LOG_FILE: &str = "train.log";
pub const METRICS_FILE: &str = "metrics.tsv";
pub const METRICS_KV_FILE: &str = "metrics.kv";
pub const INTERACTIONS_FILE: &str = "interactions.tsv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const LEDGER_FILE: &str = "results.tsv";

#[derive(Debug, Parser)]
#[command(name = "hgdr", version, about = "Cross-domain recommendation on a heterogeneous user-item graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an interaction TSV, split it and write the split, statistics and graph dump.
    Prepare(Common),
    /// Train a model and write a checkpoint plus a per-epoch log.
    Train(Common),
    /// Evaluate a checkpoint on the held-out interactions.
    Eval(Common),
    /// Compare analytic and finite-difference gradients on a small random model.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Negative control: perturb the analytic gradient before comparing.
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Generate a synthetic multi-domain interaction log.
    Synth(Common),
    /// Run the experiment grid from the config and append to the results ledger.
    Bench(Common),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// key = value settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Interaction TSV or a directory written by `prepare`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// full, specific_only, shared_only or mf.
    #[arg(long)]
    pub mode: Option<Variant>,
}

impl Common {
    /// Config file settings with command-line flags taking precedence.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("config {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        for (slot, flag) in [
            (&mut cfg.out, &self.out),
            (&mut cfg.data, &self.data),
            (&mut cfg.checkpoint, &self.checkpoint),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(c) => cmd_prepare(&c.resolve()?),
        Command::Train(c) => cmd_train(&c.resolve()?),
        Command::Eval(c) => cmd_eval(&c.resolve()?, &mut std::io::stdout().lock()),
        Command::Gradcheck { common, corrupt_gradient } => {
            let report = cmd_gradcheck(&common.resolve()?, corrupt_gradient)?;
            print!("{}", report.render());
            if !report.passed() {
                bail!("gradient check failed");
            }
            Ok(())
        }
        Command::Synth(c) => cmd_synth(&c.resolve()?),
        Command::Bench(c) => cmd_bench(&c.resolve()?),
    }
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| anyhow!("--{flag} is required"))
}

fn need_existing<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let path = need(p, flag)?;
    if !path.exists() {
        bail!("--{flag} {} does not exist", path.display());
    }
    Ok(path)
}

fn out_dir<'a>(cfg: &'a RunConfig) -> Result<&'a Path> {
    let dir = need(&cfg.out, "out")?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn cmd_prepare(cfg: &RunConfig) -> Result<()> {
    let input = need_existing(&cfg.data, "data")?;
    let dir = out_dir(cfg)?;
    let log = tsv::read_log(input).with_context(|| format!("reading {}", input.display()))?;
    let stats = compute_stats(&log)?;
    let split = split_leave_latest(&log)?;
    pipeline::write_split(&split, dir)?;
    let mut table = Vec::new();
    write_stats_table(&stats, &mut table)?;
    fs::write(dir.join(pipeline::STATS_FILE), &table)?;
    let graph = HeteroGraph::build(&split.train)?;
    write_graph(&graph, create(&dir.join(pipeline::GRAPH_FILE))?)?;
    std::io::stdout().write_all(&table)?;
    log::info!(
        "{} interactions: {} train, {} test",
        log.interactions.len(),
        split.train.interactions.len(),
        split.test.len()
    );
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let data = need_existing(&cfg.data, "data")?;
    let dir = out_dir(cfg)?;
    let ckpt = cfg.checkpoint.clone().unwrap_or_else(|| dir.join(CHECKPOINT_FILE));
    let split = load_split(data)?;
    let names = domain_names(&split.train);
    let mut log_file = create(&dir.join(TRAIN_LOG_FILE))?;
    writeln!(log_file, "{}", training_log_header(&names))?;
    let start = Instant::now();
    let mut io_err = None;
    let trained = train_model(cfg, &split, |r| {
        let line = training_log_line(r, start.elapsed().as_millis());
        log::debug!("{line}");
        if let Err(e) = writeln!(log_file, "{line}") {
            io_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e).context("writing training log");
    }
    log_file.flush()?;
    if let Some((epoch, ndcg)) = trained.best {
        log::info!("kept epoch {epoch} (validation NDCG {ndcg:.4})");
    }
    save_checkpoint(&trained.params, &ckpt).with_context(|| format!("writing {}", ckpt.display()))?;
    log::info!("wrote {}", ckpt.display());
    Ok(())
}

pub fn cmd_eval<W: Write>(cfg: &RunConfig, stdout: &mut W) -> Result<()> {
    let ckpt = need_existing(&cfg.checkpoint, "checkpoint")?;
    let data = need_existing(&cfg.data, "data")?;
    let params = load_checkpoint(ckpt).with_context(|| format!("reading {}", ckpt.display()))?;
    let split = load_split(data)?;
    let report = evaluate_model(&params, &split, cfg.seed, cfg.negatives, cfg.cutoff)?;
    let names = domain_names(&split.train);
    write_metric_table(&report, &names, &mut *stdout)?;
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        write_metric_table(&report, &names, create(&dir.join(METRICS_FILE))?)?;
        let mut kv = create(&dir.join(METRICS_KV_FILE))?;
        write_metric_kv(&report, &names, &mut kv)?;
        kv.flush()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub entries: Vec<(String, f64)>,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn max_error(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_error() < self.tolerance
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (name, err) in &self.entries {
            s.push_str(&format!("{name}\t{err:.3e}\n"));
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        s.push_str(&format!("{verdict}\tmax relative error {:.3e}\n", self.max_error()));
        s
    }
}

/// Builds a random graph of the configured size and compares the analytic
/// gradient of the full objective against central differences.
pub fn cmd_gradcheck(cfg: &RunConfig, corrupt: bool) -> Result<GradcheckReport> {
    let size = &cfg.gradcheck;
    let mut rng = hgdr_core::seeded_stream(cfg.seed, 0);
    let items = vec![size.items; size.domains];
    let mut edges = Vec::new();
    for d in 0..size.domains as u32 {
        for u in 0..size.users as u32 {
            for i in 0..size.items as u32 {
                if rng.random_bool(size.density.clamp(0.0, 1.0)) {
                    edges.push((d, u, i));
                }
            }
        }
    }
    let graph = HeteroGraph::from_edges(size.users, &items, &edges)?;
    // One triplet per edge with a uniformly drawn unobserved negative.
    let mut batches = vec![Vec::new(); size.domains];
    for &(d, u, i) in &edges {
        let seen = graph.user_items(d as usize, u as usize);
        let free: Vec<u32> = (0..size.items as u32).filter(|j| !seen.contains(j)).collect();
        if free.is_empty() {
            continue;
        }
        let neg = free[rng.random_range(0..free.len())];
        batches[d as usize].push(Triplet { user: u, pos_item: i, neg_item: neg, domain: d });
    }
    let model = ModelConfig {
        dim: size.dim,
        ..cfg.model_config(size.users, items)
    };
    let params = init_params(&model, cfg.seed)?;
    let objective = Objective {
        domain_weights: cfg.train.resolve_weights(&graph)?,
        lambda: cfg.train.lambda_reg,
        reg_per_domain: cfg.train.reg_per_domain,
    };
    let (_, mut analytic) = loss_and_grad(&params, &graph, &batches, &objective)?;
    if corrupt {
        for m in analytic.matrices_mut() {
            m.scale(1.5);
        }
    }
    let numeric = numeric_gradient(&params, &graph, &batches, &objective, size.step)?;
    let entries = params
        .names()
        .into_iter()
        .zip(analytic.matrices().into_iter().zip(numeric.matrices()))
        .map(|(name, (a, n))| (name.to_string(), max_relative_error(a, n, 1e-8)))
        .collect();
    Ok(GradcheckReport { entries, tolerance: size.tolerance })
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let data = generate_synthetic(&cfg.synth)?;
    tsv::write_log(&data.log, &dir.join(INTERACTIONS_FILE))?;
    write_manifest(&data.manifest, create(&dir.join(MANIFEST_FILE))?)?;
    let mut table = create(&dir.join(pipeline::STATS_FILE))?;
    write_stats_table(&compute_stats(&data.log)?, &mut table)?;
    table.flush()?;
    log::info!("wrote {} interactions to {}", data.log.interactions.len(), dir.display());
    Ok(())
}

/// `key = value` lines; degree histograms as `degree:count` lists.
pub fn write_manifest<W: Write>(m: &Manifest, mut w: W) -> Result<()> {
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    writeln!(w, "users = {}", m.users)?;
    writeln!(w, "domains = {}", m.domains)?;
    writeln!(w, "items_per_domain = {}", join(&m.items_per_domain))?;
    writeln!(w, "interactions_per_domain = {}", join(&m.interactions_per_domain))?;
    writeln!(w, "active_users = {}", join(&m.active_users))?;
    writeln!(w, "active_items = {}", join(&m.active_items))?;
    for (label, hists) in [("user_degrees", &m.user_degrees), ("item_degrees", &m.item_degrees)] {
        for (d, h) in hists.iter().enumerate() {
            let body: Vec<String> = h.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            writeln!(w, "{label}.d{d} = {}", body.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let ledger = match (&cfg.bench.ledger, &cfg.out) {
        (Some(p), _) => p.clone(),
        (None, Some(_)) => out_dir(cfg)?.join(LEDGER_FILE),
        (None, None) => bail!("bench needs bench.ledger or --out"),
    };
    for d in &cfg.bench.datasets {
        if d.file_name().is_none_or(|n| n != crate::harness::SYNTHETIC) && !d.exists() {
            bail!("dataset {} does not exist", d.display());
        }
    }
    let stdout = std::io::stdout();
    let rows = run_grid(cfg, |r| {
        let _ = writeln!(stdout.lock(), "{}", r.to_line());
    })?;
    append_ledger(&ledger, &rows)?;
    Ok(())
}
