//! Spectral/energy efficiency trade-off beamforming for downlink MISO-NOMA.
//!
//! The crate is organised bottom-up:
//!
//! * [`system`]: channels, SIC decoding rates and the SE/GEE metrics;
//! * [`baselines`]: power minimisation (feasibility gate), sum-rate
//!   maximisation, Dinkelbach energy-efficiency maximisation and green power;
//! * [`sca`]: the weighted-sum trade-off solved by successive convex
//!   approximation over second-order cone subproblems;
//! * [`sdp`]: the semidefinite relaxation used to benchmark transmit power.

mod blocks;
pub mod baselines;
mod error;
pub mod sca;
pub mod sdp;
pub mod system;

pub use error::TradeoffError;
pub use system::{BeamformerSolution, CVector, ChannelSet, SystemParams};
