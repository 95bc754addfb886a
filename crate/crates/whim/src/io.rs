//! CSV ingestion and report writers.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use whim_core::stats::ComparisonReport;
use whim_core::{BacktestReport, Dataset, IngestOptions, Recommendation};

use crate::error::{Result, WhimError};

/// Default cap on data rows per dataset.
pub const DEFAULT_MAX_ROWS: usize = 5_000_000;

/// Parses CSV with a header row. Fails once more than `max_rows` data rows
/// are read.
pub fn read_csv<R: Read>(reader: R, options: &IngestOptions, max_rows: usize) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for record in rdr.into_records() {
        let record = record?;
        if rows.len() == max_rows {
            return Err(WhimError::TooManyRows(max_rows));
        }
        rows.push(record.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    Ok(Dataset::from_records(header, rows, options)?)
}

pub fn load_csv(path: &Path, options: &IngestOptions, max_rows: usize) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| WhimError::io(path, e))?;
    read_csv(io::BufReader::new(file), options, max_rows)
}

/// Writes `dataset` back to CSV; missing cells become empty fields.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let (header, rows) = dataset.to_records();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| WhimError::io("<csv>", e))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            let file = File::create(p).map_err(|e| WhimError::io(p, e))?;
            let mut w = BufWriter::new(file);
            w.write_all(contents.as_bytes()).and_then(|_| w.flush()).map_err(|e| WhimError::io(p, e))
        }
        _ => io::stdout()
            .lock()
            .write_all(contents.as_bytes())
            .map_err(|e| WhimError::io("<stdout>", e)),
    }
}

pub fn recommendations_csv(recs: &[Recommendation]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "rank",
        "column",
        "value",
        "current_fraction",
        "optimal_fraction",
        "baseline_metric",
        "projected_metric",
        "projected_std",
        "absolute_change",
        "impact",
        "ks_p_value",
        "support",
    ])?;
    for r in recs {
        w.write_record([
            r.rank.to_string(),
            r.scenario.column.clone(),
            r.value_label.clone(),
            r.current_fraction.to_string(),
            r.scenario.fraction.to_string(),
            r.baseline_metric.to_string(),
            r.projected_metric.to_string(),
            r.projected_std.to_string(),
            r.absolute_change.to_string(),
            r.impact.to_string(),
            r.ks_p_value.to_string(),
            r.support.to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Long-format plot data: one row per density grid point and per histogram
/// bin, tagged by `series`.
pub fn plot_data_csv(report: &ComparisonReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "x", "x_end", "value"])?;
    for (series, curve) in [("baseline_density", &report.densities.baseline), ("whatif_density", &report.densities.whatif)] {
        if let Some(c) = curve {
            for (x, d) in c.grid.iter().zip(&c.density) {
                w.write_record([series, &x.to_string(), "", &d.to_string()])?;
            }
        }
    }
    let h = &report.histograms;
    for (series, counts) in [("baseline_hist", &h.baseline), ("whatif_hist", &h.whatif)] {
        for (i, c) in counts.iter().enumerate() {
            w.write_record([series, &h.edges[i].to_string(), &h.edges[i + 1].to_string(), &c.to_string()])?;
        }
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| WhimError::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}

/// Plain-text table: one line per evaluated value, then the MAE.
pub fn backtest_table(report: &BacktestReport) -> String {
    let mut rows: Vec<[String; 7]> = vec![[
        "column".into(),
        "value".into(),
        "fraction A".into(),
        "fraction B".into(),
        "simulated".into(),
        "actual".into(),
        "error".into(),
    ]];
    for e in &report.entries {
        rows.push([
            e.column.clone(),
            e.value.clone(),
            format!("{:.3}", e.fraction_a),
            format!("{:.3}", e.fraction_b),
            format!("{:.4}", e.simulated_metric),
            format!("{:.4}", e.actual_metric),
            format!("{:.4}", e.error),
        ]);
    }
    let widths: Vec<usize> = (0..7).map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    let mut out = format!("slice A: {}  ({} rows)\nslice B: {}  ({} rows)\n\n", report.period_a, report.rows_a, report.period_b, report.rows_b);
    for (n, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| if i < 2 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if n == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 12));
            out.push('\n');
        }
    }
    out.push_str(&format!("\nMAE {:.4} +/- {:.4} over {} values\n", report.mae, report.mae_std, report.entries.len()));
    for s in &report.skipped {
        out.push_str(&format!("skipped {}={}: {}\n", s.column, s.value, s.reason));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_csv_and_enforces_row_cap() {
        let text = "a,b\n1,x\n2,y\n3,\n";
        let ds = read_csv(text.as_bytes(), &IngestOptions::default(), 10).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.column("b").unwrap().spec().missing_count, 1);
        assert!(matches!(read_csv(text.as_bytes(), &IngestOptions::default(), 2), Err(WhimError::TooManyRows(2))));
    }

    #[test]
    fn ragged_rows_are_data_errors() {
        let err = read_csv("a,b\n1,2\n3\n".as_bytes(), &IngestOptions::default(), 10).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let text = "a,b\n1,x\n2.5,\"y, z\"\n";
        let ds = read_csv(text.as_bytes(), &IngestOptions::default(), 10).unwrap();
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        let again = read_csv(out.as_slice(), &IngestOptions::default(), 10).unwrap();
        assert_eq!(ds, again);
    }
}
