//! Frequency-domain analysis and hybrid simulation of reset control loops
//! built around a CgLp element.
//!
//! The loop is `r → e → C1 → R → C2 → (+d) → G → y` with `y + n` fed back,
//! where `R` is a reset element and everything else is LTI.

pub mod analysis;
pub mod checks;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod reset;
pub mod sim;
pub mod spectral;
pub mod tuning;

pub use analysis::{crossover_and_margin, prepost_ratio, Crossover, CurveKind, HosidfCurve, LoopTopology};
pub use error::{Error, Result};
pub use lti::{hz_to_rad, rad_to_hz, FrequencyGrid, RationalTf, StateSpace};
pub use reset::{gfore_corner_from_target, HarmonicResponse, ResetElement};
pub use sim::{simulate, SignalDescriptor, SimConfig, SimTrace};
pub use spectral::{cpsd, extract_harmonic, rms, CpsdCurve, HarmonicEstimate};
pub use tuning::{build_loop, ControllerParams, ControllerSpec, NotchParams, Scenario, Variant};
