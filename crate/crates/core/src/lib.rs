//! Simulation and schedule optimization for a pinching-antenna ISAC system.
//!
//! A dual-function base station activates one pinching antenna (PA) per time
//! slot along a dielectric waveguide. Each activation position sees the radar
//! target from a different angle, so the echo powers across slots are
//! independent exponential variables and the accumulated radar SNR follows a
//! hypoexponential law. This crate provides:
//!
//! - the physical scenario model and activation-schedule feasibility checks
//!   ([`scenario`]),
//! - deterministic channel gains, communication rate, and the per-slot radar
//!   gain factor ([`channel`]),
//! - exact, bounded, and Monte Carlo evaluation of the radar outage
//!   probability ([`outage`]),
//! - a successive-convex-approximation optimizer that minimizes a Chernoff
//!   surrogate of the outage under an accumulated-rate constraint ([`sca`]),
//! - reference schemes and an exhaustive oracle ([`baselines`]),
//! - a config-driven experiment harness with CSV output ([`harness`]).

pub mod baselines;
pub mod channel;
pub mod harness;
pub mod linalg;
pub mod outage;
pub mod rng;
pub mod scenario;
pub mod sca;

pub use channel::ChannelVector;
pub use outage::{OutageReport, RateVector, SurrogateMode};
pub use scenario::{SelectionSchedule, SystemParams, Vec3};
pub use sca::{OptimizationResult, ScaConfig};
