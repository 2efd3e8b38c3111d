//! Simulation and stability analysis of a Hirota-Satsuma system
//!
//! ```text
//! u_t - u_xxx / 2 = 3 u u_x + 3 v v_x
//! v_t + v_xxx     = -3 u v_x
//! ```
//!
//! on `(0, L)` with `u(0) = u(L) = u_x(0) = v(0) = v(L) = 0` and the
//! delayed boundary feedback `v_x(t, L) = alpha u_x(t, L) + beta u_x(t - h, L)`.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod delayline;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod params;
pub mod spectral;

pub use delayline::DelayLine;
pub use diagnostics::{DecayEstimate, DecayVerdict, KatoCheck, SmallnessReport};
pub use discretization::{build_linear_operator, Grid, SpatialOperator, TraceSample};
pub use error::{Error, GainConstraint, Result};
pub use initial::{History, InitialData, Profile};
pub use integrator::{
    picard_solve, simulate, simulate_data, PicardOutcome, RunMode, SimulationRecord, SolverOptions,
    SourcePair, State, TimeScheme,
};
pub use params::{DecayBound, Gains, LyapunovWeights, MuBounds, SymMatrix2, SystemParams};
pub use spectral::{GeneratorMatrix, SpectrumReport};
