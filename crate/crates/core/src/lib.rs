//! Flavor-entangled neutrino pairs from tau decay.
//!
//! The antisymmetric pair `(ν̄_e ν̄_μ − ν̄_μ ν̄_e)/√2` is expanded in the mass basis of the
//! tri-bimaximal mixing matrix, evolved independently on each side, and projected back onto
//! flavor to give joint detection probabilities. On top of that core sit
//!
//! - [`bell`]: the Clauser–Horne combination and the Hardy-type ratio `H`, grid scans and the
//!   two-flavor detector placement helpers,
//! - [`optimizer`]: a multistart bounded Nelder–Mead search for the largest `H`,
//! - [`source`]: the tau-decay pair spectrum, `s ↔ km` conversions and energy smearing,
//! - [`qkd`]: a Monte Carlo of the flavor-correlation key distribution with an
//!   intercept-resend eavesdropper,
//! - [`cli`]: the `nu-entangle` command-line front end.
//!
//! Times are expressed in the dimensionless `s = L/2E` coordinate; the oscillation phase
//! between mass states `i` and `j` is `1e5 · Δm²_ij[eV²] · s` radians.

// `!(x > 0.0)` style guards are used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod cli;
pub mod error;
pub mod optimizer;
pub mod oscillation;
pub mod qkd;
pub mod source;

mod sampling;

pub use error::{Error, Result};
pub use oscillation::{
    coincidence_probability, coincidence_table, evolve_pair, initial_pair_state,
    marginal_probability, osc_probability, tribimaximal_matrix, CoincidenceTable, Flavor,
    MixingMatrix, OscillationParams, PairState, Side,
};
