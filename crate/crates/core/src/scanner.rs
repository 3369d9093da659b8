//! Corpus scanning: load every weight file in a directory, compute rate,
//! security and tolerable bias for each code, and extract Pareto frontiers.
//!
//! Output is deterministic: files are processed in name order and results
//! are reassembled in that order whatever the thread count.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bounds::{self, SecurityReport};
use crate::error::{Error, Result};
use crate::weights::{parse_weights, WeightDistribution};

pub const DEFAULT_DELTA_REF: f64 = 0.1;
pub const DEFAULT_SECURITY_REF: f64 = 80.0;
pub const INDEX_FILE: &str = "index.csv";

/// A weight file together with its display metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeRecord {
    pub id: String,
    pub name: Option<String>,
    pub path: PathBuf,
    pub dist: WeightDistribution,
}

/// One code's position in the rate/security plane.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub id: String,
    pub name: Option<String>,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub rate: f64,
    /// Security at the reference bias, floored at 0.
    pub security_bits: f64,
    /// Largest bias meeting the reference security target.
    pub max_delta: f64,
}

/// A file that could not be used, with the reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipRecord {
    pub path: PathBuf,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutcome {
    pub points: Vec<FrontierPoint>,
    pub skips: Vec<SkipRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub delta_ref: f64,
    pub security_ref: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            delta_ref: DEFAULT_DELTA_REF,
            security_ref: DEFAULT_SECURITY_REF,
        }
    }
}

struct IndexEntry {
    id: String,
    name: Option<String>,
}

/// `id,path,name` rows keyed by the file name they describe.
fn read_index(path: &Path) -> Result<HashMap<String, IndexEntry>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Validation(format!("{INDEX_FILE} lacks a `{name}` column")))
    };
    let (id_col, path_col) = (col("id")?, col("path")?);
    let name_col = col("name").ok();
    let mut map = HashMap::new();
    for row in reader.records() {
        let row = row?;
        let get = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        map.insert(
            get(path_col).to_string(),
            IndexEntry {
                id: get(id_col).to_string(),
                name: name_col.map(get).filter(|s| !s.is_empty()).map(str::to_string),
            },
        );
    }
    Ok(map)
}

/// Regular, non-hidden files of `dir` other than the index, sorted by name.
fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with('.') || name == INDEX_FILE {
            continue;
        }
        let path = entry.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Reads every weight file in `dir`. Unreadable or invalid files are
/// reported as skips; partial tables are rejected because they would
/// overstate security.
pub fn load_corpus(dir: &Path) -> Result<(Vec<CodeRecord>, Vec<SkipRecord>)> {
    let files = corpus_files(dir)?;
    let mut skips = Vec::new();
    let index_path = dir.join(INDEX_FILE);
    let index = if index_path.is_file() {
        read_index(&index_path).unwrap_or_else(|e| {
            skips.push(SkipRecord {
                path: index_path.clone(),
                error: e.to_string(),
            });
            HashMap::new()
        })
    } else {
        HashMap::new()
    };

    let loaded: Vec<std::result::Result<CodeRecord, SkipRecord>> = files
        .par_iter()
        .map(|path| {
            let skip = |e: Error| SkipRecord {
                path: path.clone(),
                error: e.to_string(),
            };
            let text = fs::read_to_string(path).map_err(|e| skip(Error::io(path, e)))?;
            let dist = parse_weights(&text, false).map_err(skip)?;
            let file_name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            let (id, name) = match index.get(&file_name) {
                Some(e) => (e.id.clone(), e.name.clone()),
                None => (
                    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                    None,
                ),
            };
            Ok(CodeRecord {
                id,
                name,
                path: path.clone(),
                dist,
            })
        })
        .collect();

    let mut records = Vec::new();
    for item in loaded {
        match item {
            Ok(r) => records.push(r),
            Err(s) => skips.push(s),
        }
    }
    Ok((records, skips))
}

/// Rate, security at `delta_ref` and tolerable bias at `security_ref`.
pub fn frontier_point(record: &CodeRecord, options: &ScanOptions) -> Result<FrontierPoint> {
    let dist = &record.dist;
    let d = dist.min_distance().ok_or(Error::EmptyCode)?;
    let security = bounds::security_at(dist, options.delta_ref)?;
    let max_delta = bounds::max_bias_for_security(dist, options.security_ref)?;
    Ok(FrontierPoint {
        id: record.id.clone(),
        name: record.name.clone(),
        n: dist.n(),
        k: dist.rank(),
        d,
        rate: dist.rank() as f64 / dist.n() as f64,
        security_bits: security.max(0.0),
        max_delta,
    })
}

/// Loads and evaluates a corpus. Fails only when no file could be used.
pub fn scan_corpus(dir: &Path, options: &ScanOptions) -> Result<ScanOutcome> {
    let (records, mut skips) = load_corpus(dir)?;
    let evaluated: Vec<_> = records
        .par_iter()
        .map(|r| {
            frontier_point(r, options).map_err(|e| SkipRecord {
                path: r.path.clone(),
                error: e.to_string(),
            })
        })
        .collect();
    let mut points = Vec::new();
    for item in evaluated {
        match item {
            Ok(p) => points.push(p),
            Err(s) => skips.push(s),
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    points.sort_by(|a, b| b.rate.total_cmp(&a.rate).then_with(|| a.id.cmp(&b.id)));
    skips.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(ScanOutcome { points, skips })
}

/// Quantity traded off against rate on a frontier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    #[default]
    SecurityBits,
    MaxDelta,
}

impl Objective {
    fn value(self, p: &FrontierPoint) -> f64 {
        match self {
            Objective::SecurityBits => p.security_bits,
            Objective::MaxDelta => p.max_delta,
        }
    }
}

/// Points not dominated in (rate, objective), both maximised. A point is
/// dominated when another is at least as good in both and strictly better
/// in one. Returned in input order.
pub fn pareto_frontier(points: &[FrontierPoint], objective: Objective) -> Vec<FrontierPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Sweep by rate descending; within equal rate, best objective first.
    order.sort_by(|&a, &b| {
        points[b]
            .rate
            .total_cmp(&points[a].rate)
            .then_with(|| objective.value(&points[b]).total_cmp(&objective.value(&points[a])))
    });
    let mut keep = vec![false; points.len()];
    let mut best = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // group of equal rate
        let rate = points[order[i]].rate;
        let mut j = i;
        while j < order.len() && points[order[j]].rate == rate {
            j += 1;
        }
        let top = objective.value(&points[order[i]]);
        if top > best {
            for &idx in &order[i..j] {
                if objective.value(&points[idx]) == top {
                    keep[idx] = true;
                }
            }
            best = top;
        }
        i = j;
    }
    points
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(p, _)| p.clone())
        .collect()
}

/// Floating-point text with 17 significant digits (round-trip exact).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A type that serialises as one CSV row under a fixed header.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for FrontierPoint {
    fn header() -> &'static [&'static str] {
        &["id", "n", "k", "d", "rate", "security_bits", "max_delta"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.id.clone(),
            self.n.to_string(),
            self.k.to_string(),
            self.d.to_string(),
            format_float(self.rate),
            format_float(self.security_bits),
            format_float(self.max_delta),
        ]
    }
}

impl CsvRow for SkipRecord {
    fn header() -> &'static [&'static str] {
        &["path", "error"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.path.display().to_string(), self.error.clone()]
    }
}

impl CsvRow for SecurityReport {
    fn header() -> &'static [&'static str] {
        &[
            "delta",
            "linf_norm",
            "l2_dist",
            "l1_lower",
            "l1_upper",
            "tv_upper",
            "security_bits",
            "prior_l1",
            "prior_linf_bias",
            "partial",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            format_float(self.delta),
            format_float(self.linf_norm.value),
            format_float(self.l2_dist.value),
            format_float(self.l1_lower.value),
            format_float(self.l1_upper.value),
            format_float(self.tv_upper()),
            format_float(self.security_bits()),
            format_float(self.prior_l1.value),
            format_float(self.prior_linf_bias.value),
            self.partial.to_string(),
        ]
    }
}

/// Writes a header plus one row per record.
pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header())?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_csv_file<R: CsvRow>(rows: &[R], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file))
}
