//! Cramér-Rao-type bounds for three-parameter field sensing with pairs of
//! qubits under dephasing, together with the optimizers used to search
//! over probe states, collective measurements and gadget circuits.

pub mod circuits;
pub mod encoding;
pub mod error;
pub mod experiments;
pub mod fisher;
pub mod hcrb;
pub mod qcore;
pub mod search;

pub use error::{Error, Result};
