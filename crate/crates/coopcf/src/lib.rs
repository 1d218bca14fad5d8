//! Cooperative compute-and-forward.
//!
//! Transmitters that overhear each other decode their peers' messages and
//! beamform "resolution information" towards the receivers, which then decode
//! integer combinations of the messages with nested lattice codes. The crate
//! covers the whole chain at desk scale:
//!
//! - [`channel`]: channel matrices, Rayleigh draws and the example topologies.
//! - [`lattice`]: exact Construction-A codebooks with the resolution/vestigial split.
//! - [`rates`]: closed-form achievable rates and upper bounds.
//! - [`search`]: coefficient, cooperation-set and steering optimisation.
//! - [`dmt`]: diversity-multiplexing tradeoff curves and outage probabilities.
//! - [`link_sim`]: an end-to-end block-Markov simulation over real lattice codes.
//! - [`scenarios`]: the sweeps behind the command-line tool.

// Parameter checks use negated comparisons so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dmt;
pub mod error;
pub mod lattice;
pub mod link_sim;
pub mod rates;
pub mod scenarios;
pub mod search;

pub use channel::{ChannelPair, GeometryScenario, Preset};
pub use error::{Error, Result};
pub use lattice::{Codebook, CodebookSpec, FieldMessage, LatticePoint, Sublattice};
pub use rates::{CoefficientMatrix, RateBreakdown, SteeringConfig};
pub use search::{OptimizationResult, SearchBudget, SearchOptions, SubsetFamily};


/// Converts a power quoted in decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power to decibels.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
