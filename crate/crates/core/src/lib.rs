//! Entanglement monotones of bipartite states and quantum channels computed
//! by semidefinite programming: negativity, tempered negativity, PPT
//! robustness, channel robustness, max-relative-entropy capacity bounds and
//! diamond distances.

pub mod channels;
pub mod chmono;
pub mod corpus;
pub mod io;
pub mod linalg;
pub mod sdp;
pub mod states;

use linalg::LinalgError;
use sdp::SdpError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} is not SDP-representable; use the PPT cone")]
    NotSdpRepresentable(&'static str),
    #[error("primal value {primal} and dual value {dual} disagree by {diff:.3e}")]
    PrimalDualMismatch { primal: f64, dual: f64, diff: f64 },
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
