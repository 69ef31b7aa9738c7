//! Three-phase radial feeder: model and file format, forward-backward sweep
//! power flow, time-series injection of a dispatch and the voltage
//! deviation index.

mod flow;
mod model;
mod trace;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub use flow::{power_flow, FlowOptions, Injections, PowerFlow};
pub use model::{
    parse_feeder, Branch, BranchKind, Bus, Capacitor, Connection, DistributedLoad, FeederModel, LineCode, LoadModel,
    Mat3, Phase, PhaseSet, SpotLoad, C64, FT_PER_MILE,
};
pub use trace::{time_series_flow, vdi, Attachment, InjectionMap, VdiEntry, VdiReport, VoltageTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeederError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown bus `{bus}`")]
    UnknownBus { line: usize, bus: String },
    #[error("line {line}: branch {from}-{to} closes a loop")]
    Cycle { line: usize, from: String, to: String },
    #[error("line {line}: phases not present at bus `{bus}`")]
    PhaseMismatch { line: usize, bus: String },
    #[error("buses cut off from the source: {}", .0.join(", "))]
    Disconnected(Vec<String>),
    #[error("branch {from}-{to} must be declared from the source side")]
    Orientation { from: String, to: String },
    #[error("load on absent phase {phase} at bus `{bus}`")]
    AbsentPhase { bus: String, phase: Phase },
    #[error("sweep did not converge in {iterations} iterations (last update {residual:e} pu)")]
    Diverged { iterations: usize, residual: f64 },
    #[error("voltage collapse at bus `{bus}`")]
    Collapse { bus: String },
    #[error("empty voltage trace")]
    EmptyTrace,
    #[error("{device} attached to unknown bus `{bus}`")]
    UnknownAttachment { device: &'static str, bus: String },
    #[error("{device} attachment: {reason}")]
    BadAttachment { device: &'static str, reason: &'static str },
    #[error("slot {slot}: {source}")]
    Slot { slot: usize, source: Box<FeederError> },
}

impl FeederError {
    /// Source line of a file-format error.
    pub fn line(&self) -> Option<usize> {
        match self {
            FeederError::Parse { line, .. }
            | FeederError::UnknownBus { line, .. }
            | FeederError::Cycle { line, .. }
            | FeederError::PhaseMismatch { line, .. } => Some(*line),
            _ => None,
        }
    }
}
