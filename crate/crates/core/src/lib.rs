//! Erasure/list decoding exponents for known and unknown discrete memoryless channels.
//!
//! * [`known_exponents`]: exact `E₁`, `E₂` of Forney's decoder for fixed-composition codes.
//! * [`universal_fraction`]: the largest fraction `ξ*` of those exponents that one
//!   universal decoder achieves simultaneously over a finite channel family.
//! * [`lower_bound`]: the competitive-minimax lower bound `ξ_L` and saddle-point diagnostics.
//! * [`simulator`]: short-blocklength Monte-Carlo and exhaustive decoder simulation.
//!
//! All logarithms are natural; rates, thresholds and exponents are in nats.

// `!(v >= 0.0)` is used on purpose so that NaN fails range checks; matrix loops index
// several arrays by the same symbol.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod family;
pub mod info_math;
mod inner;
pub mod known_exponents;
pub mod lower_bound;
pub mod optim;
pub mod simulator;
mod transport;
pub mod universal_fraction;

pub use error::{Error, Result};
pub use family::{ChannelFamily, ExponentTable, FamilyKind};
pub use info_math::{Dmc, JointDist};
pub use known_exponents::{Branch, ExponentQuery, ExponentResult, MarginalPair};
pub use lower_bound::{GridSpec, SaddleDiagnostics};
pub use simulator::{SimConfig, SimReport};
pub use universal_fraction::{ActiveCondition, FractionResult};
