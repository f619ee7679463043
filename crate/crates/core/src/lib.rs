//! Simulation and signal-analysis toolkit for an electromechanical
//! temporal/spectral mode converter.
//!
//! A flexible drumhead capacitor couples a microwave circuit to a mechanical
//! oscillator. A pump-controlled exchange rate `Γ(t)` lets the device absorb
//! a propagating microwave signal into a vibration, hold it while the circuit
//! is retuned, and re-emit it with a new carrier and temporal envelope.
//!
//! Modules:
//! - [`device`]: physical parameters and their consistency checks.
//! - [`pulse`]: coupling schedules (optimal capture, exponential capture,
//!   Gaussian release) and the pump photon numbers that realize them.
//! - [`dynamics`]: full linearized and reduced weak-coupling integrators, the
//!   capture/store/release protocol and seeded Monte-Carlo ensembles.
//! - [`tf`]: voltage synthesis, analytic signal, Wigner-Ville distribution.
//! - [`receiver`]: calibrated receiver model, matched-filter quadratures,
//!   added-noise statistics and sideband thermometry.
//! - [`tuning`]: lumped electrostatic + Casimir model of the bias tuning.

pub mod consts;
pub mod device;
pub mod dynamics;
pub mod envelope;
mod error;
pub mod io;
pub mod pulse;
pub mod receiver;
pub mod tf;
pub mod tuning;

pub use device::{DeviceParams, ReceiverCal, ValidationReport, Violation};
pub use envelope::{Envelope, Grid};
pub use error::{Error, Result};
pub use pulse::CouplingSchedule;
