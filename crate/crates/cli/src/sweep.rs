//! Noise sweep over a grid of dephasing strengths.
//!
//! Every grid point owns a seed derived from the master seed and its index,
//! so results do not depend on scheduling. Finished points are appended to
//! the CSV and to a JSON-lines record file as soon as they complete; once
//! the whole grid is done both files are rewritten in grid order.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use qmag::experiments::{channel_hcrb_search, copies_bound_search, qc_bound_search, SearchOptions};
use qmag::qcore::Ket;
use qmag::search::substream;
use rand::Rng;
use rayon::prelude::*;

use crate::config::{SearchKind, SweepConfig};
use crate::record::{decode_state, write_csv, BoundKind, CsvRow, Record, CSV_HEADER};
use crate::{CliError, CliResult};

/// Seed of grid point `index`.
pub fn point_seed(master: u64, index: usize) -> u64 {
    substream(master, 0x5EED, index as u64).random()
}

/// Path of the record file kept next to the CSV.
pub fn records_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".records.jsonl");
    out.with_file_name(name)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

pub fn channel_record(gamma: f64, opts: &SearchOptions, wall: bool) -> CliResult<Record> {
    let (o, secs) = timed(|| channel_hcrb_search(gamma, opts));
    Ok(Record::channel(&o?, gamma, opts.seed, wall.then_some(secs)))
}

pub fn copies_record(psi: &Ket, gamma: f64, k: usize, opts: &SearchOptions, wall: bool) -> CliResult<Record> {
    let (o, secs) = timed(|| copies_bound_search(psi, gamma, k, opts));
    Ok(Record::copies(&o?, psi, gamma, opts.seed, wall.then_some(secs)))
}

pub fn qc_record(gamma: f64, independent: bool, opts: &SearchOptions, wall: bool) -> CliResult<Record> {
    let (o, secs) = timed(|| qc_bound_search(gamma, independent, opts));
    Ok(Record::qc(&o?, gamma, opts.seed, wall.then_some(secs)))
}

/// `(kind, k)` of the rows produced for every grid point, in output order.
pub fn expected_rows(cfg: &SweepConfig) -> Vec<(BoundKind, usize)> {
    let mut v = vec![(BoundKind::ChChannel, 1)];
    v.extend(cfg.copies.iter().map(|&k| (BoundKind::CkProj, k)));
    if cfg.qc {
        v.push((BoundKind::QC2, 2));
    }
    v
}

/// All rows of grid point `index`.
pub fn run_point(cfg: &SweepConfig, index: usize) -> CliResult<Vec<Record>> {
    let gamma = cfg.gamma_grid[index];
    let seed = point_seed(cfg.seed, index);
    let wall = cfg.record_wall_time;
    let channel = channel_record(gamma, &cfg.search_options(SearchKind::Channel, seed), wall)?;
    let psi = decode_state(&channel.state)?;
    let mut out = vec![channel];
    for &k in &cfg.copies {
        out.push(copies_record(&psi, gamma, k, &cfg.search_options(SearchKind::Copies, seed), wall)?);
    }
    if cfg.qc {
        out.push(qc_record(gamma, cfg.independent_qc_measurements, &cfg.search_options(SearchKind::Qc, seed), wall)?);
    }
    Ok(out)
}

fn agreement_tol(cfg: &SweepConfig, kind: BoundKind) -> f64 {
    match kind {
        BoundKind::CkProj => cfg.copies_search.agreement_tol,
        BoundKind::QC2 => cfg.qc_search.agreement_tol,
        _ => cfg.channel.agreement_tol,
    }
}

/// Records of points finished by an earlier run with the same settings.
fn completed_points(cfg: &SweepConfig, path: &Path) -> CliResult<Vec<Option<Vec<Record>>>> {
    let mut points: Vec<Vec<Record>> = vec![Vec::new(); cfg.gamma_grid.len()];
    if path.exists() {
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            // A line cut short by an interrupt is simply recomputed.
            let Ok(rec) = serde_json::from_str::<Record>(&line) else { continue };
            let idx = cfg.gamma_grid.iter().position(|&g| g == rec.result.gamma);
            if let Some(i) = idx {
                if rec.result.seed == point_seed(cfg.seed, i) {
                    points[i].push(rec);
                }
            }
        }
    }
    let expected = expected_rows(cfg);
    Ok(points
        .into_iter()
        .map(|recs| {
            let found: Option<Vec<Record>> = expected
                .iter()
                .map(|&(kind, k)| {
                    recs.iter()
                        .find(|r| r.result.bound_kind == kind && r.result.k == k)
                        .filter(|r| kind != BoundKind::QC2 || r.independent_measurements == cfg.independent_qc_measurements)
                        .cloned()
                })
                .collect();
            found
        })
        .collect())
}

struct Appender {
    csv: File,
    records: File,
}

impl Appender {
    fn push(&mut self, recs: &[Record]) -> CliResult<()> {
        let rows: Vec<CsvRow> = recs.iter().map(|r| r.result.csv_row()).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows)?;
        // Drop the header line written by write_csv.
        let body = &buf[CSV_HEADER.len() + 1..];
        self.csv.write_all(body)?;
        self.csv.flush()?;
        for r in recs {
            writeln!(self.records, "{}", serde_json::to_string(r)?)?;
        }
        self.records.flush()?;
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Records in grid order.
    pub records: Vec<Record>,
    /// Points that were loaded from an earlier run.
    pub resumed: usize,
    /// Rows whose restarts disagreed by more than the tolerance.
    pub nonconverged: Vec<String>,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.records.iter().map(|r| r.result.csv_row()).collect()
    }
}

/// Runs (or resumes) the sweep and writes `cfg.out` plus its record file.
pub fn run_sweep(cfg: &SweepConfig, resume: bool) -> CliResult<SweepOutcome> {
    cfg.validate()?;
    let rec_path = records_path(&cfg.out);
    let mut done = if resume { completed_points(cfg, &rec_path)? } else { vec![None; cfg.gamma_grid.len()] };
    let resumed = done.iter().filter(|d| d.is_some()).count();

    let mut csv = OpenOptions::new().create(true).append(true).open(&cfg.out)?;
    let records = OpenOptions::new().create(true).append(true).open(&rec_path)?;
    if !resume || csv.metadata()?.len() == 0 {
        csv.set_len(0)?;
        records.set_len(0)?;
        writeln!(csv, "{CSV_HEADER}")?;
        // Points kept from the record file must stay visible in the CSV.
        for recs in done.iter().flatten() {
            let mut a = Appender { csv: csv.try_clone()?, records: records.try_clone()? };
            a.push(recs)?;
        }
    }
    let appender = Mutex::new(Appender { csv, records });

    let pending: Vec<usize> = (0..cfg.gamma_grid.len()).filter(|&i| done[i].is_none()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<(usize, CliResult<Vec<Record>>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let r = run_point(cfg, i).and_then(|recs| {
                    appender.lock().expect("writer lock").push(&recs)?;
                    Ok(recs)
                });
                (i, r)
            })
            .collect()
    });
    for (i, r) in results {
        done[i] = Some(r?);
    }

    let all: Vec<Record> = done.into_iter().flatten().flatten().collect();
    let rows: Vec<CsvRow> = all.iter().map(|r| r.result.csv_row()).collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows)?;
    write_atomic(&cfg.out, &buf)?;
    let mut jl = String::new();
    for r in &all {
        jl.push_str(&serde_json::to_string(r)?);
        jl.push('\n');
    }
    write_atomic(&rec_path, jl.as_bytes())?;

    let nonconverged = all
        .iter()
        .filter(|r| r.result.restart_spread > agreement_tol(cfg, r.result.bound_kind))
        .map(|r| {
            format!(
                "gamma={} k={} {}: restart spread {:.3e}",
                r.result.gamma, r.result.k, r.result.bound_kind, r.result.restart_spread
            )
        })
        .collect();
    Ok(SweepOutcome { records: all, resumed, nonconverged })
}
