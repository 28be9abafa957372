//! Result and range writers.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{FeatureRange, ResultRow};
use crate::error::Result;

pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const RESULTS_TABLE: &str = "results.txt";
pub const RANGES_CSV: &str = "ranges.csv";

/// `dataset,mode,model,scope,acc,f1` at full precision.
pub fn write_results_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "mode", "model", "scope", "acc", "f1"])?;
    for r in rows {
        w.write_record([
            r.dataset.as_str(),
            r.mode.name(),
            r.model.name(),
            r.scope.as_str(),
            &r.accuracy.to_string(),
            &r.macro_f1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table with percentages to two decimals.
pub fn render_table(rows: &[ResultRow]) -> String {
    let mut s = format!(
        "{:<16} {:<12} {:<14} {:<14} {:>8} {:>8}\n",
        "dataset", "mode", "model", "scope", "acc", "f1"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<16} {:<12} {:<14} {:<14} {:>8.2} {:>8.2}\n",
            r.dataset,
            r.mode.name(),
            r.model.name(),
            r.scope,
            100.0 * r.accuracy,
            100.0 * r.macro_f1
        ));
    }
    s
}

/// Writes `results.csv`, `results.json` and `results.txt` under `dir`.
pub fn write_results(dir: &Path, rows: &[ResultRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_results_csv(fs::File::create(dir.join(RESULTS_CSV))?, rows)?;
    fs::write(dir.join(RESULTS_JSON), serde_json::to_string_pretty(rows)?)?;
    fs::write(dir.join(RESULTS_TABLE), render_table(rows))?;
    Ok(())
}

/// `feature,label,min,max`, one row per feature.
pub fn write_ranges_csv<W: Write>(out: W, ranges: &[FeatureRange]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "label", "min", "max"])?;
    for r in ranges {
        w.write_record([
            r.feature.name(),
            r.feature.label(),
            &r.min.to_string(),
            &r.max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ranges(dir: &Path, ranges: &[FeatureRange]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_ranges_csv(fs::File::create(dir.join(RANGES_CSV))?, ranges)
}
