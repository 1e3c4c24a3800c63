//! Error classification: every failure is either bad input (exit 2),
//! a mathematically inadmissible request (exit 2, with witness payload
//! when an inner module provides one), or an internal numeric/system
//! failure (exit 1).

use serde_json::Value;
use thermoform::carpet::CarpetError;
use thermoform::levelset::LevelSetError;
use thermoform::oracle::OracleError;
use thermoform::{ShiftError, TransferError};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or schema-violating input; message carries a
    /// JSON-pointer-style path where applicable.
    Input(String),
    /// Admissibility violation (domain rejection); the payload carries
    /// the witness object defined by the inner module, e.g. the Birkhoff
    /// range with its extremal cycles.
    Domain {
        message: String,
        witness: Option<(&'static str, Value)>,
    },
    /// Solver or system failure on admissible input.
    Internal(String),
}

impl CliError {
    pub fn domain(message: impl Into<String>) -> Self {
        CliError::Domain {
            message: message.into(),
            witness: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Domain { .. } => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Internal(m) => m,
            CliError::Domain { message, .. } => message,
        }
    }
}

/// Structural errors always describe the input.
pub fn from_shift(e: ShiftError) -> CliError {
    CliError::domain(e.to_string())
}

pub fn from_transfer(e: TransferError) -> CliError {
    let msg = e.to_string();
    match e {
        TransferError::PowerIteration { .. } | TransferError::Root(_) => CliError::Internal(msg),
        _ => CliError::domain(msg),
    }
}

pub fn from_levelset(e: LevelSetError<f64>) -> CliError {
    let msg = e.to_string();
    match e {
        LevelSetError::Shift(inner) => from_shift(inner),
        LevelSetError::Transfer(inner) => from_transfer(inner),
        LevelSetError::AlphaOutsideRange { range, .. } => CliError::Domain {
            message: msg,
            witness: serde_json::to_value(&range)
                .ok()
                .map(|v| ("birkhoff_range", v)),
        },
        LevelSetError::DegenerateRange { .. } => CliError::domain(msg),
        LevelSetError::Root(m) => CliError::Internal(m),
    }
}

pub fn from_carpet(e: CarpetError<f64>) -> CliError {
    let msg = e.to_string();
    match e {
        CarpetError::Shift(inner) => from_shift(inner),
        CarpetError::Transfer(inner) => from_transfer(inner),
        CarpetError::LevelSet(inner) => from_levelset(inner),
        CarpetError::Solver(m) => CliError::Internal(m),
        _ => CliError::domain(msg),
    }
}

pub fn from_oracle(e: OracleError<f64>) -> CliError {
    let msg = e.to_string();
    match e {
        OracleError::Shift(inner) => from_shift(inner),
        OracleError::Carpet(inner) => from_carpet(inner),
        _ => CliError::domain(msg),
    }
}
