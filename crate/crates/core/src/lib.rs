//! Fast-signal protection of a dissipative qubit in an Ornstein-Uhlenbeck
//! bath, and control-assisted adiabatic passage of a swept two-level system.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod adiabatic;
pub mod bath;
pub mod ensemble;
pub mod error;
pub mod me2;
pub mod numerics;
pub mod qsd;
pub mod runner;
pub mod scalar;
pub mod signals;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TimeGrid64 = numerics::TimeGrid<f64>;
pub type BathSpec64 = bath::BathSpec<f64>;
pub type SignalFamily64 = signals::SignalFamily<f64>;
pub type SampledSignal64 = signals::SampledSignal<f64>;
pub type InitialState64 = qsd::InitialState<f64>;
pub type KernelCurve64 = qsd::KernelCurve<f64>;
pub type FidelityCurve64 = qsd::FidelityCurve<f64>;
pub type SweepSpec64 = adiabatic::SweepSpec<f64>;
pub type Psi0Curve64 = adiabatic::Psi0Curve<f64>;

pub type TimeGrid32 = numerics::TimeGrid<f32>;
pub type FidelityCurve32 = qsd::FidelityCurve<f32>;
