use std::io::Write;
use std::path::{Path, PathBuf};

use crate::ExperimentError;

/// Bumped whenever a column is added, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Row statuses whose metric columns describe a trade-off design.
const SUMMARISED: [&str; 3] = ["ok", "not_converged", "rank_failure"];

/// A CSV table with one header row. Cells are pre-formatted strings; floats
/// use the shortest round-trip representation, which keeps files stable.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem, e.g. `alpha_sweep`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width in {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of one column, in row order.
    pub fn values(&self, name: &str) -> Vec<&str> {
        let c = self.column(name).unwrap_or_else(|| panic!("no column {name} in {}", self.name));
        self.rows.iter().map(|r| r[c].as_str()).collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}.v{SCHEMA_VERSION}.csv", self.name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the table into `dir` (created if missing) and returns the path.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf, ExperimentError> {
        let wrap = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ExperimentError::Output { path, source }
        };
        std::fs::create_dir_all(dir).map_err(wrap(dir))?;
        let path = dir.join(self.file_name());
        let file = std::fs::File::create(&path).map_err(wrap(&path))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok(path)
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x}")
}

fn parse(cell: &str) -> Option<f64> {
    match cell {
        "true" => Some(1.0),
        "false" => Some(0.0),
        _ => cell.parse().ok(),
    }
}

/// Mean and sample standard deviation of `values` per group of `keys`, over
/// rows with a usable status. Groups appear in first-seen order.
pub fn summarize(table: &Table, keys: &[&str], values: &[&str]) -> Table {
    let key_cols: Vec<usize> = keys.iter().map(|k| table.column(k).expect("key column")).collect();
    let val_cols: Vec<usize> = values.iter().map(|v| table.column(v).expect("value column")).collect();
    let status = table.column("status");

    let mut groups: Vec<(Vec<String>, Vec<Vec<f64>>)> = Vec::new();
    for row in &table.rows {
        if status.is_some_and(|s| !SUMMARISED.contains(&row[s].as_str())) {
            continue;
        }
        let key: Vec<String> = key_cols.iter().map(|c| row[*c].clone()).collect();
        let idx = match groups.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                groups.push((key, vec![Vec::new(); val_cols.len()]));
                groups.len() - 1
            }
        };
        for (slot, c) in groups[idx].1.iter_mut().zip(&val_cols) {
            if let Some(x) = parse(&row[*c]) {
                slot.push(x);
            }
        }
    }

    let mut header: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
    header.push("n".into());
    for v in values {
        header.push(format!("{v}_mean"));
        header.push(format!("{v}_std"));
    }
    let mut out = Table {
        name: format!("{}_summary", table.name),
        header,
        rows: Vec::new(),
    };
    for (key, samples) in groups {
        let mut row = key;
        row.push(samples.iter().map(Vec::len).max().unwrap_or(0).to_string());
        for s in &samples {
            let (mean, std) = mean_std(s);
            row.push(mean.map(fmt).unwrap_or_default());
            row.push(std.map(fmt).unwrap_or_default());
        }
        out.rows.push(row);
    }
    out
}

/// Mean and sample (n − 1) standard deviation; `None` where undefined.
pub fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}
