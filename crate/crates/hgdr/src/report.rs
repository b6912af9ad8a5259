//! Metric reports and per-epoch training log lines.

use std::io::Write;

use hgdr_core::eval::MetricReport;
use hgdr_core::train::EpochReport;

/// `domain, #users, HR@k, NDCG@k`, one row per domain.
pub fn write_metric_table<W: Write>(
    report: &MetricReport,
    domain_names: &[String],
    mut w: W,
) -> std::io::Result<()> {
    let k = report.cutoff;
    writeln!(w, "domain\tusers\tHR@{k}\tNDCG@{k}")?;
    for m in &report.domains {
        writeln!(
            w,
            "{}\t{}\t{:.4}\t{:.4}",
            name(domain_names, m.domain),
            m.users,
            m.hit_rate,
            m.ndcg
        )?;
    }
    Ok(())
}

/// Machine-readable form with full precision: `key = value` lines.
pub fn write_metric_kv<W: Write>(
    report: &MetricReport,
    domain_names: &[String],
    mut w: W,
) -> std::io::Result<()> {
    let k = report.cutoff;
    writeln!(w, "cutoff = {k}")?;
    for m in &report.domains {
        let d = name(domain_names, m.domain);
        writeln!(w, "{d}.users = {}", m.users)?;
        writeln!(w, "{d}.hr = {:?}", m.hit_rate)?;
        writeln!(w, "{d}.ndcg = {:?}", m.ndcg)?;
    }
    writeln!(w, "mean_ndcg = {:?}", report.mean_ndcg())?;
    Ok(())
}

fn name(names: &[String], d: usize) -> String {
    names.get(d).cloned().unwrap_or_else(|| format!("d{d}"))
}

pub fn training_log_header(domain_names: &[String]) -> String {
    let mut s = String::from("#epoch");
    for d in domain_names {
        s.push_str(&format!("\tbpr[{d}]"));
    }
    s.push_str("\ttotal\telapsed_ms");
    s
}

/// `epoch, per-domain mean BPR, total loss, elapsed ms`, tab-separated.
/// A domain without triplets this epoch prints `-`.
pub fn training_log_line(report: &EpochReport, elapsed_ms: u128) -> String {
    let mut s = report.epoch.to_string();
    for l in &report.domain_bpr {
        match l {
            Some(v) => s.push_str(&format!("\t{v:.6}")),
            None => s.push_str("\t-"),
        }
    }
    s.push_str(&format!("\t{:.6}\t{elapsed_ms}", report.total_loss));
    s
}
