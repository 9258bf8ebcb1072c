//! Result rows, the CSV schema and the JSON records that let every row be
//! recomputed from its stored state and measurement.

use std::fmt;
use std::io::{Read, Write};

use qmag::encoding::build_model_at_origin;
use qmag::experiments::{copies_bound_value, probe_hcrb, qc_value, ChannelOptimum, CopiesOptimum, QcOptimum};
use qmag::qcore::{CVec, Ket, C64};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const CSV_HEADER: &str = "gamma,k,strategy,bound_kind,value,seed,iterations,wall_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    CC,
    CS,
    CH,
    #[serde(rename = "CH_channel")]
    ChChannel,
    #[serde(rename = "Ck_proj")]
    CkProj,
    QC2,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::CC => "CC",
            BoundKind::CS => "CS",
            BoundKind::CH => "CH",
            BoundKind::ChChannel => "CH_channel",
            BoundKind::CkProj => "Ck_proj",
            BoundKind::QC2 => "QC2",
        })
    }
}

impl BoundKind {
    /// `CQ` for measurements collective over copies, `QC` for entangled
    /// inputs, `single` otherwise.
    pub fn strategy(self) -> &'static str {
        match self {
            BoundKind::ChChannel | BoundKind::CkProj => "CQ",
            BoundKind::QC2 => "QC",
            _ => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub bound_kind: BoundKind,
    pub value: f64,
    pub k: usize,
    pub gamma: f64,
    pub seed: u64,
    pub iterations: usize,
    pub wall_time_s: Option<f64>,
    /// The model could not estimate all three components; `value` is
    /// infinite.
    pub singular: bool,
    /// Relative gap between the two best restarts.
    pub restart_spread: f64,
}

impl BoundResult {
    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            gamma: self.gamma,
            k: self.k,
            strategy: self.bound_kind.strategy().to_string(),
            bound_kind: self.bound_kind,
            value: self.value,
            seed: self.seed,
            iterations: self.iterations,
            wall_time_s: self.wall_time_s,
        }
    }
}

/// One CSV line, in header order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub gamma: f64,
    pub k: usize,
    pub strategy: String,
    pub bound_kind: BoundKind,
    pub value: f64,
    pub seed: u64,
    pub iterations: usize,
    pub wall_time_s: Option<f64>,
}

pub fn write_csv<W: Write>(w: W, rows: &[CsvRow]) -> CliResult<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> CliResult<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(CliError::Config(format!("unexpected CSV header '{}'", header.join(","))));
    }
    rdr.deserialize().map(|r| r.map_err(CliError::from)).collect()
}

/// Amplitudes as `[re, im]` pairs.
pub fn encode_state(psi: &Ket) -> Vec<[f64; 2]> {
    psi.amplitudes().iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_state(amps: &[[f64; 2]]) -> CliResult<Ket> {
    Ok(Ket::new(CVec::from_iterator(amps.len(), amps.iter().map(|a| C64::new(a[0], a[1]))))?)
}

/// Everything needed to recompute a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub result: BoundResult,
    /// Probe state: two qubits, or four for the entangled-input strategy.
    pub state: Vec<[f64; 2]>,
    /// Generator coefficients of the state preparation (channel rows only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub state_coeffs: Vec<f64>,
    /// Generator coefficients of the measurement unitary.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurement_coeffs: Vec<f64>,
    #[serde(default)]
    pub independent_measurements: bool,
}

impl Record {
    pub fn channel(o: &ChannelOptimum, gamma: f64, seed: u64, wall: Option<f64>) -> Self {
        Record {
            result: BoundResult {
                bound_kind: BoundKind::ChChannel,
                value: o.value,
                k: 1,
                gamma,
                seed,
                iterations: o.search.iterations,
                wall_time_s: wall,
                singular: !o.value.is_finite(),
                restart_spread: o.search.spread(),
            },
            state: encode_state(&o.state),
            state_coeffs: o.search.x.clone(),
            measurement_coeffs: vec![],
            independent_measurements: false,
        }
    }

    pub fn copies(o: &CopiesOptimum, psi: &Ket, gamma: f64, seed: u64, wall: Option<f64>) -> Self {
        Record {
            result: BoundResult {
                bound_kind: BoundKind::CkProj,
                value: o.value,
                k: o.k,
                gamma,
                seed,
                iterations: o.search.iterations,
                wall_time_s: wall,
                singular: !o.value.is_finite(),
                restart_spread: o.search.spread(),
            },
            state: encode_state(psi),
            state_coeffs: vec![],
            measurement_coeffs: o.coeffs.clone(),
            independent_measurements: false,
        }
    }

    pub fn qc(o: &QcOptimum, gamma: f64, seed: u64, wall: Option<f64>) -> Self {
        Record {
            result: BoundResult {
                bound_kind: BoundKind::QC2,
                value: o.value,
                k: 2,
                gamma,
                seed,
                iterations: o.search.iterations,
                wall_time_s: wall,
                singular: !o.value.is_finite(),
                restart_spread: o.search.spread(),
            },
            state: encode_state(&o.state),
            state_coeffs: vec![],
            measurement_coeffs: o.meas_coeffs.clone(),
            independent_measurements: o.independent,
        }
    }

    /// Recomputes the bound from the stored state and measurement.
    pub fn recompute(&self) -> CliResult<f64> {
        let psi = decode_state(&self.state)?;
        let r = &self.result;
        let v = match r.bound_kind {
            BoundKind::ChChannel => probe_hcrb(&psi, r.gamma)?,
            BoundKind::CkProj => copies_bound_value(&psi, r.gamma, r.k, &self.measurement_coeffs)?,
            BoundKind::QC2 => qc_value(&psi, r.gamma, &self.measurement_coeffs, self.independent_measurements)?,
            BoundKind::CH => probe_hcrb(&psi, r.gamma)?,
            BoundKind::CS => qmag::fisher::sld_crb(&build_model_at_origin(&psi, r.gamma)?)?,
            BoundKind::CC => return Err(CliError::Config("CC records carry no measurement".into())),
        };
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_print_as_in_header_docs() {
        let names: Vec<String> = [
            BoundKind::CC,
            BoundKind::CS,
            BoundKind::CH,
            BoundKind::ChChannel,
            BoundKind::CkProj,
            BoundKind::QC2,
        ]
        .iter()
        .map(|k| k.to_string())
        .collect();
        assert_eq!(names, ["CC", "CS", "CH", "CH_channel", "Ck_proj", "QC2"]);
        assert_eq!(serde_json::to_string(&BoundKind::CkProj).unwrap(), "\"Ck_proj\"");
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let rows = vec![
            CsvRow {
                gamma: 0.1,
                k: 2,
                strategy: "CQ".into(),
                bound_kind: BoundKind::CkProj,
                value: 0.8799976875461636,
                seed: u64::MAX,
                iterations: 12,
                wall_time_s: None,
            },
            CsvRow {
                gamma: 0.9,
                k: 2,
                strategy: "QC".into(),
                bound_kind: BoundKind::QC2,
                value: f64::INFINITY,
                seed: 3,
                iterations: 0,
                wall_time_s: Some(1.25e-3),
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
