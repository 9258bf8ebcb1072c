//! Bounds of noiseless real two-qubit probes.

use std::fmt::Write as _;

use qmag::encoding::{encoded_pure_state, FieldParams};
use qmag::hcrb::{closed_form_hcrb, pure_vector_hcrb, sld_bound_real, RealTwoQubitState};
use qmag::Error;

use crate::{CliError, CliResult};

/// Largest accepted deviation of `Σ rᵢ²` from one for user input.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PureRow {
    pub r: [f64; 4],
    /// `None` for singular models.
    pub bounds: Option<PureBounds>,
    pub concurrence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureBounds {
    pub sld: f64,
    pub closed_form: f64,
    pub vector_solver: f64,
}

pub fn parse_state(r: [f64; 4]) -> CliResult<RealTwoQubitState> {
    let n2: f64 = r.iter().map(|x| x * x).sum();
    if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOL {
        return Err(CliError::Config(format!("state is not normalized: sum of squares {n2}")));
    }
    Ok(RealTwoQubitState::normalized(r)?)
}

pub fn evaluate(s: &RealTwoQubitState) -> CliResult<PureRow> {
    let bounds = || -> qmag::Result<PureBounds> {
        let (_, dpsi) = encoded_pure_state(&s.ket(), FieldParams::zero())?;
        Ok(PureBounds {
            sld: sld_bound_real(s)?,
            closed_form: closed_form_hcrb(s)?,
            vector_solver: pure_vector_hcrb(&s.ket(), &dpsi)?.value,
        })
    };
    let bounds = match bounds() {
        Ok(b) => Some(b),
        Err(Error::SingularModel { .. } | Error::DegenerateState(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(PureRow { r: s.r(), bounds, concurrence: s.concurrence() })
}

pub const TABLE_HEADER: &str = "r1 r2 r3 r4 C_S C_H_closed C_H_solver concurrence status";

pub fn format_table(rows: &[PureRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in rows {
        for x in row.r {
            let _ = write!(out, "{x:.8} ");
        }
        match row.bounds {
            Some(b) => {
                let _ = write!(out, "{:.10} {:.10} {:.10} ", b.sld, b.closed_form, b.vector_solver);
            }
            None => out.push_str("- - - "),
        }
        let _ = writeln!(out, "{:.8} {}", row.concurrence, if row.bounds.is_some() { "ok" } else { "singular" });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example() {
        let row = evaluate(&parse_state([0.8, 0.42426407, 0.42426407, 0.0]).unwrap()).unwrap();
        let b = row.bounds.unwrap();
        assert!((b.closed_form - 1.0374439).abs() < 1e-6, "{}", b.closed_form);
        assert!((b.vector_solver - b.closed_form).abs() < 1e-6 * b.closed_form);
        assert!(b.sld <= b.closed_form);
    }

    #[test]
    fn bell_state_is_flagged() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let row = evaluate(&parse_state([h, 0.0, 0.0, h]).unwrap()).unwrap();
        assert!(row.bounds.is_none());
        assert!(format_table(&[row]).lines().nth(1).unwrap().ends_with("singular"));
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        assert_eq!(parse_state([1.0, 1.0, 0.0, 0.0]).unwrap_err().exit_code(), 3);
    }
}
