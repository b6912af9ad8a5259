//! Interaction logs as tab-separated text:
//! `user_key <TAB> item_key <TAB> domain_key <TAB> timestamp`.
//! Blank lines and lines starting with `#` are skipped.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use hgdr_core::data::{Interaction, InteractionLog, RawInteraction};

use crate::FormatError;

pub fn parse_log<R: BufRead>(reader: R) -> Result<InteractionLog, FormatError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim_end_matches('\r');
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        records.push(parse_line(text).map_err(|msg| FormatError::Line { line: lineno, msg })?);
    }
    if records.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(InteractionLog::from_raw(records)?)
}

fn parse_line(text: &str) -> Result<RawInteraction, String> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
    }
    for (name, f) in ["user", "item", "domain"].iter().zip(&fields) {
        if f.trim().is_empty() {
            return Err(format!("empty {name} key"));
        }
    }
    let timestamp = fields[3]
        .trim()
        .parse::<i64>()
        .map_err(|e| format!("bad timestamp {:?}: {e}", fields[3]))?;
    Ok(RawInteraction {
        user_key: fields[0].to_string(),
        item_key: fields[1].to_string(),
        domain_key: fields[2].to_string(),
        timestamp,
    })
}

pub fn read_log(path: &Path) -> Result<InteractionLog, FormatError> {
    let file = File::open(path)?;
    parse_log(BufReader::new(file))
}

/// Writes `records` using the key tables of `log`, one line each.
pub fn write_records<W: Write>(
    log: &InteractionLog,
    records: &[Interaction],
    mut w: W,
) -> Result<(), FormatError> {
    for rec in records {
        let (u, i, d) = log
            .keys_of(rec)
            .ok_or_else(|| FormatError::Invalid(format!("record {rec:?} has no key")))?;
        writeln!(w, "{u}\t{i}\t{d}\t{}", rec.timestamp)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log(log: &InteractionLog, path: &Path) -> Result<(), FormatError> {
    let file = BufWriter::new(File::create(path)?);
    write_records(log, &log.interactions, file)
}
