//! Plain-text `key = value` sweep configuration.
//!
//! ```text
//! # comments start with '#'
//! gamma_grid = 0:0.9:0.1        # or a list: 0, 0.1, 0.5
//! copies = 1, 2
//! restarts = 5
//! seed = 42
//! out = sweep.csv
//! optimizer.pso.max_iters = 200          # every search
//! optimizer.copies.local_starts = 10     # one search only
//! ```

use std::path::PathBuf;

use qmag::experiments::SearchOptions;
use serde_json::Value;

use crate::{CliError, CliResult};

/// Which search a set of optimizer settings belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchKind {
    Channel,
    Copies,
    Qc,
}

impl SearchKind {
    const ALL: [SearchKind; 3] = [SearchKind::Channel, SearchKind::Copies, SearchKind::Qc];

    fn name(self) -> &'static str {
        match self {
            SearchKind::Channel => "channel",
            SearchKind::Copies => "copies",
            SearchKind::Qc => "qc",
        }
    }

    fn preset(self) -> SearchOptions {
        match self {
            SearchKind::Channel => SearchOptions::channel(),
            SearchKind::Copies => SearchOptions::copies(),
            SearchKind::Qc => SearchOptions::qc(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gamma_grid: Vec<f64>,
    pub copies: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Include the entangled-input strategy.
    pub qc: bool,
    pub independent_qc_measurements: bool,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Write measured wall times. Off by default so that reruns produce
    /// byte-identical files.
    pub record_wall_time: bool,
    pub channel: SearchOptions,
    pub copies_search: SearchOptions,
    pub qc_search: SearchOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma_grid: (0..10).map(|i| i as f64 / 10.0).collect(),
            copies: vec![1, 2],
            restarts: 5,
            seed: 0,
            out: PathBuf::from("sweep.csv"),
            qc: true,
            independent_qc_measurements: false,
            threads: 0,
            record_wall_time: false,
            channel: SearchKind::Channel.preset(),
            copies_search: SearchKind::Copies.preset(),
            qc_search: SearchKind::Qc.preset(),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim().parse().map_err(|_| bad(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

/// Parses `a, b, c` or the inclusive range `start:stop:step`.
pub fn parse_grid(v: &str) -> CliResult<Vec<f64>> {
    let v = v.trim();
    let grid: Vec<f64> = if v.contains(':') {
        let parts: Vec<f64> =
            v.split(':').map(|p| parse_num("gamma_grid", p)).collect::<CliResult<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("gamma_grid range must be start:stop:step"));
        };
        if !(step > 0.0) || stop < start {
            return Err(bad("gamma_grid range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // Round to suppress accumulated representation error (0.30000000000000004).
        (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        v.split(',').filter(|s| !s.trim().is_empty()).map(|p| parse_num("gamma_grid", p)).collect::<CliResult<_>>()?
    };
    if grid.is_empty() {
        return Err(bad("gamma_grid is empty"));
    }
    if let Some(g) = grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(bad(format!("gamma {g} outside [0, 1]")));
    }
    Ok(grid)
}

/// Sets a nested field of `opts` addressed by a dotted path such as
/// `pso.max_iters`.
pub fn set_search_option(opts: &mut SearchOptions, path: &str, value: &str) -> CliResult<()> {
    let mut doc = serde_json::to_value(*opts)?;
    let mut slot = &mut doc;
    for part in path.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| bad(format!("unknown optimizer setting '{path}'")))?;
    }
    let parsed: Value = match slot {
        Value::Bool(_) => Value::Bool(parse_bool(path, value)?),
        Value::Number(_) => {
            serde_json::from_str(value.trim()).map_err(|_| bad(format!("{path}: cannot parse '{value}'")))?
        }
        _ => return Err(bad(format!("'{path}' is a group, not a setting"))),
    };
    *slot = parsed;
    *opts = serde_json::from_value(doc).map_err(|e| bad(format!("{path}: {e}")))?;
    Ok(())
}

impl SweepConfig {
    pub fn search_options_mut(&mut self, kind: SearchKind) -> &mut SearchOptions {
        match kind {
            SearchKind::Channel => &mut self.channel,
            SearchKind::Copies => &mut self.copies_search,
            SearchKind::Qc => &mut self.qc_search,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "gamma_grid" => self.gamma_grid = parse_grid(value)?,
            "copies" => {
                self.copies = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|p| parse_num(key, p))
                    .collect::<CliResult<_>>()?;
            }
            "restarts" => self.restarts = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "qc" => self.qc = parse_bool(key, value)?,
            "independent_qc_measurements" => self.independent_qc_measurements = parse_bool(key, value)?,
            "threads" => self.threads = parse_num(key, value)?,
            "record_wall_time" => self.record_wall_time = parse_bool(key, value)?,
            _ => {
                let Some(rest) = key.strip_prefix("optimizer.") else {
                    return Err(bad(format!("unknown key '{key}'")));
                };
                let target = SearchKind::ALL.into_iter().find(|k| rest.starts_with(&format!("{}.", k.name())));
                match target {
                    Some(kind) => {
                        let path = &rest[kind.name().len() + 1..];
                        set_search_option(self.search_options_mut(kind), path, value)?;
                    }
                    None => {
                        for kind in SearchKind::ALL {
                            set_search_option(self.search_options_mut(kind), rest, value)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.gamma_grid.is_empty() {
            return Err(bad("gamma_grid is empty"));
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(bad(format!("gamma {g} outside [0, 1]")));
        }
        if let Some(k) = self.copies.iter().find(|k| !(1..=3).contains(*k)) {
            return Err(bad(format!("copies = {k}: supported values are 1, 2, 3")));
        }
        if self.restarts == 0 {
            return Err(bad("restarts must be at least 1"));
        }
        for o in [&self.channel, &self.copies_search, &self.qc_search] {
            o.pso.validate().map_err(|e| bad(e.to_string()))?;
            if !(o.agreement_tol >= 0.0) {
                return Err(bad("agreement_tol must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Search settings for `kind` with the sweep's restart count.
    pub fn search_options(&self, kind: SearchKind, seed: u64) -> SearchOptions {
        let base = match kind {
            SearchKind::Channel => self.channel,
            SearchKind::Copies => self.copies_search,
            SearchKind::Qc => self.qc_search,
        };
        SearchOptions { restarts: self.restarts, seed, ..base }
    }
}
