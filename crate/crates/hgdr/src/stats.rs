//! Dataset statistics as a plain-text table: one column per domain, rows
//! for users, items, interactions and sparsity.

use std::io::Write;

use hgdr_core::data::DatasetStats;

pub fn write_stats_table<W: Write>(stats: &DatasetStats, mut w: W) -> std::io::Result<()> {
    let mut rows: Vec<Vec<String>> = vec![
        vec!["Domain".to_string()],
        vec!["# Users".to_string()],
        vec!["# Items".to_string()],
        vec!["# Interactions".to_string()],
        vec!["sparsity (%)".to_string()],
    ];
    for d in &stats.domains {
        rows[0].push(d.domain.clone());
        rows[1].push(d.users.to_string());
        rows[2].push(d.items.to_string());
        rows[3].push(d.interactions.to_string());
        rows[4].push(format_sparsity(d.sparsity_percent));
    }
    let ncols = rows[0].len();
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    for row in &rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                line.push_str(&format!("{cell:<w$}", w = widths[c]));
            } else {
                line.push_str(&format!("  {cell:>w$}", w = widths[c]));
            }
        }
        writeln!(w, "{}", line.trim_end())?;
    }
    Ok(())
}

/// Two decimals, or four below 0.1%.
pub fn format_sparsity(percent: f64) -> String {
    if percent >= 0.1 {
        format!("{percent:.2}")
    } else {
        format!("{percent:.4}")
    }
}
