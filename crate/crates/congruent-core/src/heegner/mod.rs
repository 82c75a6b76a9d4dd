//! Heegner-point construction on X0(32): CM points attached to the order of
//! discriminant -8n, their traces to quadratic subfields, recognition of the
//! resulting rational points, and the right triangle they certify.

pub mod classes;
pub mod field;
pub mod height;
pub mod modular;
pub mod pipeline;
pub mod points;

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeegnerError {
    Precision(String),
    Calibration(String),
    ClassRep(String),
    Torsion(String),
    Recognition(String),
    NotApplicable(String),
}

impl fmt::Display for HeegnerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeegnerError::Precision(s) => write!(f, "precision: {s}"),
            HeegnerError::Calibration(s) => write!(f, "calibration: {s}"),
            HeegnerError::ClassRep(s) => write!(f, "class representative: {s}"),
            HeegnerError::Torsion(s) => write!(f, "torsion: {s}"),
            HeegnerError::Recognition(s) => write!(f, "recognition: {s}"),
            HeegnerError::NotApplicable(s) => write!(f, "not applicable: {s}"),
        }
    }
}

impl std::error::Error for HeegnerError {}
