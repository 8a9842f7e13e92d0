//! Zero-temperature bath correlation functions.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ornstein-Uhlenbeck bath `α(t, s) = (Γγ/2) exp(-γ|t - s|)`.
///
/// `coupling` is Γ and `memory_rate` is γ, the inverse memory time. As
/// `memory_rate → ∞` the kernel tends to `Γ δ(t - s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec<T> {
    pub coupling: T,
    pub memory_rate: T,
}

impl<T: Real> BathSpec<T> {
    pub fn new(coupling: T, memory_rate: T) -> Result<Self> {
        let spec = Self {
            coupling,
            memory_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling.is_finite() && self.coupling >= T::zero()) {
            return Err(Error::invalid("bath.coupling", "must be finite and >= 0"));
        }
        if !(self.memory_rate.is_finite() && self.memory_rate > T::zero()) {
            return Err(Error::invalid("bath.memory_rate", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Zero-lag value `Γγ/2`.
    pub fn peak(&self) -> T {
        self.coupling * self.memory_rate * T::lit(0.5)
    }

    /// Correlation as a function of the lag `t - s`.
    pub fn at_lag(&self, lag: T) -> Complex<T> {
        Complex::new(
            self.peak() * (-self.memory_rate * lag.abs()).exp(),
            T::zero(),
        )
    }
}

/// Bath correlation `α(t, s)`. Real for this bath; complex so other
/// spectral densities can share the signature.
pub fn ou_correlation<T: Real>(t: T, s: T, bath: &BathSpec<T>) -> Complex<T> {
    bath.at_lag(t - s)
}
