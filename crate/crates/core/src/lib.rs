//! Classical, quantum and no-signaling bounds for biased CHSH and
//! Svetlichny games, with grid scans of the quantum-advantage region.

pub mod analysis;
pub mod classical;
pub mod game;
pub mod linalg;
pub mod nosignaling;
pub mod quantum;
pub mod simplex;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Game(#[from] game::GameError),
    #[error(transparent)]
    Quantum(#[from] quantum::QuantumError),
    #[error(transparent)]
    NoSignaling(#[from] nosignaling::NsError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error("{0}")]
    InvalidArgument(String),
}
