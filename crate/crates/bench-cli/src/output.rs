//! Result files: CSV or JSON rows and the per-dimension plot series.
//!
//! Files are written to a temporary sibling and renamed into place, so a
//! failed write leaves no partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{BenchError, Result};
use crate::experiment::ResultRow;
use crate::spec::Format;

pub const CSV_COLUMNS: [&str; 14] = [
    "algorithm",
    "N",
    "K",
    "sigma",
    "epsilon_or_lambda",
    "metric",
    "value",
    "stderr",
    "replicates",
    "target_evals",
    "proposal_evals",
    "seed_base",
    "d_x",
    "variant",
];

pub const SERIES_COLUMNS: [&str; 8] = [
    "algorithm",
    "variant",
    "N",
    "K",
    "d_x",
    "metric",
    "value",
    "stderr",
];

/// Marker written in place of a missing value.
pub const DEGENERATE: &str = "degenerate";

/// A file that appears at `path` only once [`PendingFile::commit`] succeeds.
pub struct PendingFile {
    path: PathBuf,
    tmp: NamedTempFile,
}

impl PendingFile {
    /// Creates the temporary file next to `path`; fails early if the
    /// directory is missing or not writable.
    pub fn create(path: &Path) -> Result<Self> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let tmp = NamedTempFile::new_in(dir).map_err(|e| BenchError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            tmp,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn commit(mut self, bytes: &[u8]) -> Result<()> {
        let path = self.path.clone();
        self.tmp
            .write_all(bytes)
            .map_err(|e| BenchError::io(&path, e))?;
        self.tmp.flush().map_err(|e| BenchError::io(&path, e))?;
        self.tmp
            .persist(&path)
            .map_err(|e| BenchError::io(&path, e.error))?;
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| DEGENERATE.to_string(), |x| x.to_string())
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| BenchError::Spec(format!("CSV encoding failed: {e}"));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.sigma.to_string(),
            r.epsilon_or_lambda
                .map_or_else(String::new, |v| v.to_string()),
            r.metric.clone(),
            fmt_opt(r.value),
            fmt_opt(r.stderr),
            r.replicates.to_string(),
            r.target_evals.to_string(),
            r.proposal_evals.to_string(),
            r.seed_base.to_string(),
            r.d_x.to_string(),
            r.variant.clone(),
        ])
        .map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| BenchError::Spec(format!("CSV encoding failed: {e}")))
}

pub fn rows_from_csv(bytes: &[u8], path: &Path) -> Result<Vec<ResultRow>> {
    let bad = |m: String| BenchError::Results {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = csv::ReaderBuilder::new().from_reader(bytes);
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
    let opt = |s: &str| {
        if s == DEGENERATE || s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("'{s}': {e}")));
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            Ok(ResultRow {
                algorithm: rec[0].to_string(),
                n: int(&rec[1])? as usize,
                k: int(&rec[2])? as usize,
                sigma: num(&rec[3])?,
                epsilon_or_lambda: if rec[4].is_empty() {
                    None
                } else {
                    Some(num(&rec[4])?)
                },
                metric: rec[5].to_string(),
                value: opt(&rec[6])?,
                stderr: opt(&rec[7])?,
                replicates: int(&rec[8])? as usize,
                target_evals: int(&rec[9])?,
                proposal_evals: int(&rec[10])?,
                seed_base: int(&rec[11])?,
                d_x: int(&rec[12])? as usize,
                variant: rec[13].to_string(),
            })
        })
        .collect()
}

pub fn encode_rows(rows: &[ResultRow], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => rows_to_csv(rows),
        Format::Json => {
            let mut v =
                serde_json::to_vec_pretty(rows).map_err(|e| BenchError::Spec(e.to_string()))?;
            v.push(b'\n');
            Ok(v)
        }
    }
}

/// Writes `rows` to `path`; an empty row list is rejected.
pub fn emit_results(rows: &[ResultRow], format: Format, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(BenchError::Spec("no result rows to write".into()));
    }
    let file = PendingFile::create(path)?;
    file.commit(&encode_rows(rows, format)?)
}

pub fn read_results(path: &Path, format: Format) -> Result<Vec<ResultRow>> {
    let bytes = std::fs::read(path).map_err(|e| BenchError::io(path, e))?;
    match format {
        Format::Csv => rows_from_csv(&bytes, path),
        Format::Json => serde_json::from_slice(&bytes).map_err(|e| BenchError::Results {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
    }
}

/// One line per (variant, d_x, metric), sorted by variant then dimension.
pub fn series_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| (&a.variant, a.d_x, &a.metric).cmp(&(&b.variant, b.d_x, &b.metric)));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| BenchError::Spec(format!("CSV encoding failed: {e}"));
    w.write_record(SERIES_COLUMNS).map_err(io)?;
    for r in sorted {
        w.write_record([
            r.algorithm.clone(),
            r.variant.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.d_x.to_string(),
            r.metric.clone(),
            fmt_opt(r.value),
            fmt_opt(r.stderr),
        ])
        .map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| BenchError::Spec(format!("CSV encoding failed: {e}")))
}

pub fn emit_plot_data(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(BenchError::Spec("no result rows to plot".into()));
    }
    PendingFile::create(path)?.commit(&series_csv(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, d_x: usize, value: Option<f64>) -> ResultRow {
        ResultRow {
            algorithm: "hpmc_resample".into(),
            n: 100,
            k: 5,
            sigma: 1.0,
            epsilon_or_lambda: Some(0.1),
            metric: "mse_mean".into(),
            value,
            stderr: value.map(|v| v / 10.0),
            replicates: 50,
            target_evals: 200_000,
            proposal_evals: 7,
            seed_base: 3,
            d_x,
            variant: variant.into(),
        }
    }

    #[test]
    fn csv_round_trip_with_degenerate_values() {
        let rows = vec![
            row("a", 2, Some(0.1 + 0.2)),
            row("b", 5, None),
            row("c, quoted", 5, Some(1e-300)),
        ];
        let bytes = rows_to_csv(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.ends_with('\n'));
        assert!(text.starts_with("algorithm,N,K,sigma,epsilon_or_lambda,metric,value,stderr,replicates,target_evals,proposal_evals,seed_base"));
        assert!(text.contains(DEGENERATE));
        assert_eq!(rows_from_csv(&bytes, Path::new("x")).unwrap(), rows);
    }

    #[test]
    fn series_has_one_line_per_pair() {
        let rows: Vec<ResultRow> = [2, 5, 10]
            .iter()
            .flat_map(|&d| [row("a", d, Some(1.0)), row("b", d, Some(2.0))])
            .collect();
        let text = String::from_utf8(series_csv(&rows).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 6);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("hpmc_resample,a,100,5,2,"));
    }

    #[test]
    fn empty_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        assert!(matches!(
            emit_results(&[], Format::Csv, &p),
            Err(BenchError::Spec(_))
        ));
        assert!(!p.exists());
    }
}
