//! Control signals `c(t)`: regular, jittered, chaotic and shot-noise pulse
//! trains sampled as piecewise-constant functions on a [`TimeGrid`].
//!
//! Values are sampled at cell midpoints, so a pulse edge that falls exactly
//! on a grid node is never ambiguous. All quantities are dimensionless with
//! the bare qubit frequency ω = 1: times are in units of 1/ω and a pulse
//! area Ψ is a phase, so the pulse height Ψ/Δ is a frequency.
//!
//! Random families draw from ChaCha8 streams addressed by
//! `(master_seed, stream index)`; see [`Substream`].

use log::warn;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::numerics::TimeGrid;
use crate::scalar::Real;

/// Rectangular pulse train: pulse `n >= 1` occupies `(nτ - Δ, nτ]` with
/// height `Ψ/Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrainSpec<T> {
    pub period: T,
    pub duration: T,
    pub area: T,
}

impl<T: Real> PulseTrainSpec<T> {
    pub fn new(period: T, duration: T, area: T) -> Result<Self> {
        let spec = Self {
            period,
            duration,
            area,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pulse train with duty cycle `Δ/τ`.
    pub fn with_duty(period: T, duty: T, area: T) -> Result<Self> {
        Self::new(period, period * duty, area)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > T::zero()) {
            return Err(Error::invalid("pulse.period", "must be finite and > 0"));
        }
        if !(self.duration > T::zero() && self.duration <= self.period) {
            return Err(Error::invalid(
                "pulse.duration",
                "must satisfy 0 < duration <= period",
            ));
        }
        if !(self.area.is_finite() && self.area >= T::zero()) {
            return Err(Error::invalid("pulse.area", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn height(&self) -> T {
        self.area / self.duration
    }
}

/// Deviation scales for `X' = X + D_X · Uniform(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JitterSpec<T> {
    pub period: T,
    pub duration: T,
    pub area: T,
}

impl<T: Real> JitterSpec<T> {
    pub fn validate(&self, base: &PulseTrainSpec<T>) -> Result<()> {
        for (field, v) in [
            ("jitter.period", self.period),
            ("jitter.duration", self.duration),
            ("jitter.area", self.area),
        ] {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::invalid(field, "must be finite and >= 0"));
            }
        }
        if self.period >= base.period {
            return Err(Error::invalid(
                "jitter.period",
                "must be smaller than the period so drawn periods stay positive",
            ));
        }
        Ok(())
    }
}

/// Logistic-map intensities `L_{n+1} = μ (L_n - L_n^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaoticSpec<T> {
    pub map_parameter: T,
    pub seed_amplitude: T,
}

impl<T: Real> ChaoticSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.map_parameter > T::zero() && self.map_parameter <= T::lit(4.0)) {
            return Err(Error::invalid("chaos.map_parameter", "must lie in (0, 4]"));
        }
        if !(self.seed_amplitude >= T::zero() && self.seed_amplitude < T::one()) {
            return Err(Error::invalid("chaos.seed_amplitude", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Logistic-map sequence `[L_0, L_1, ..., L_count]`.
pub fn logistic_sequence<T: Real>(chaos: &ChaoticSpec<T>, count: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(count + 1);
    let mut l = chaos.seed_amplitude;
    out.push(l);
    for _ in 0..count {
        l = chaos.map_parameter * (l - l * l);
        out.push(l);
    }
    out
}

/// Poisson shot noise: shots of area `strength` (J) at mean rate `rate` (W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoiseSpec<T> {
    pub strength: T,
    pub rate: T,
}

impl<T: Real> ShotNoiseSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength.is_finite() && self.strength >= T::zero()) {
            return Err(Error::invalid(
                "shot_noise.strength",
                "must be finite and >= 0",
            ));
        }
        if !(self.rate.is_finite() && self.rate >= T::zero()) {
            return Err(Error::invalid("shot_noise.rate", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Mean signal `J W`.
    pub fn mean(&self) -> T {
        self.strength * self.rate
    }
}

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Substream {
    pub master_seed: u64,
    pub index: u64,
}

impl Substream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self { master_seed, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.index);
        rng
    }
}

impl From<u64> for Substream {
    fn from(seed: u64) -> Self {
        Self::new(seed, 0)
    }
}

/// Piecewise-constant control amplitude, one value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    pub grid: TimeGrid<T>,
    pub values: Vec<T>,
}

impl<T: Real> SampledSignal<T> {
    pub fn zeros(grid: TimeGrid<T>) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.n_steps()],
        }
    }

    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> T) -> Self {
        let values = (0..grid.n_steps()).map(|k| f(grid.midpoint(k))).collect();
        Self { grid, values }
    }

    /// Value on the cell containing `t`.
    pub fn at(&self, t: T) -> T {
        self.values[self.grid.cell_of(t)]
    }

    /// Time average over the grid.
    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::count(self.values.len())
    }

    /// Exact integral of the piecewise-constant signal over the grid.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.dt()
    }
}

/// Index `n` of the period `((n-1)τ, nτ]` containing `t`.
fn period_index<T: Real>(t: T, period: T) -> i64 {
    let mut n = (t / period).ceil().to_i64().unwrap_or(i64::MAX);
    if T::lit(n as f64) * period < t {
        n += 1;
    }
    if n > 0 && T::lit((n - 1) as f64) * period >= t {
        n -= 1;
    }
    n
}

/// `Ψ/Δ` if `nτ - Δ < t <= nτ` for some integer `n >= 1`, otherwise 0.
pub fn regular_pulse_value<T: Real>(t: T, spec: &PulseTrainSpec<T>) -> T {
    let n = period_index(t, spec.period);
    if n < 1 {
        return T::zero();
    }
    let end = T::lit(n as f64) * spec.period;
    if t > end - spec.duration {
        spec.height()
    } else {
        T::zero()
    }
}

pub fn sample_regular<T: Real>(spec: &PulseTrainSpec<T>, grid: &TimeGrid<T>) -> SampledSignal<T> {
    SampledSignal::from_fn(*grid, |t| regular_pulse_value(t, spec))
}

/// One drawn pulse occupying `(end - duration, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse<T> {
    pub end: T,
    pub duration: T,
    pub area: T,
}

impl<T: Real> Pulse<T> {
    pub fn height(&self) -> T {
        self.area / self.duration
    }
}

/// Sequential jittered pulse generator. Every pulse consumes exactly three
/// uniforms (period, duration, area) whether or not a clamp fires.
pub struct JitteredPulses<T> {
    spec: PulseTrainSpec<T>,
    jitter: JitterSpec<T>,
    rng: ChaCha8Rng,
    index: u64,
    offset: T,
    previous_end: T,
}

impl<T: Real> JitteredPulses<T> {
    pub fn new(spec: PulseTrainSpec<T>, jitter: JitterSpec<T>, stream: Substream) -> Self {
        Self {
            spec,
            jitter,
            rng: stream.rng(),
            index: 0,
            offset: T::zero(),
            previous_end: T::zero(),
        }
    }

    fn uniform(&mut self) -> T {
        T::lit(self.rng.random_range(-1.0..1.0))
    }
}

impl<T: Real> Iterator for JitteredPulses<T> {
    type Item = Pulse<T>;

    fn next(&mut self) -> Option<Pulse<T>> {
        let floor = self.spec.period * T::lit(1e-6);
        let (u_period, u_duration, u_area) = (self.uniform(), self.uniform(), self.uniform());

        let period = (self.spec.period + self.jitter.period * u_period).max(floor);
        let duration = (self.spec.duration + self.jitter.duration * u_duration)
            .max(floor)
            .min(period);
        let area = (self.spec.area + self.jitter.area * u_area).max(T::zero());

        self.index += 1;
        // End times are nτ plus the accumulated deviations so zero jitter
        // reproduces the regular train bit for bit.
        self.offset += period - self.spec.period;
        let end = T::lit(self.index as f64) * self.spec.period + self.offset;
        // Rounding in `end` may shave an ulp off the drawn spacing.
        let duration = duration.min(end - self.previous_end);
        self.previous_end = end;
        Some(Pulse {
            end,
            duration,
            area,
        })
    }
}

pub fn sample_jittered<T: Real>(
    spec: &PulseTrainSpec<T>,
    jitter: &JitterSpec<T>,
    stream: impl Into<Substream>,
    grid: &TimeGrid<T>,
) -> SampledSignal<T> {
    let mut pulses = JitteredPulses::new(*spec, *jitter, stream.into());
    let mut current = pulses.next().expect("pulse generator is infinite");
    let values = (0..grid.n_steps())
        .map(|k| {
            let t = grid.midpoint(k);
            while current.end < t {
                current = pulses.next().expect("pulse generator is infinite");
            }
            if t > current.end - current.duration {
                current.height()
            } else {
                T::zero()
            }
        })
        .collect();
    SampledSignal {
        grid: *grid,
        values,
    }
}

/// Regular timing with pulse `n` scaled by the logistic intensity `L_n`.
pub fn sample_chaotic<T: Real>(
    spec: &PulseTrainSpec<T>,
    chaos: &ChaoticSpec<T>,
    grid: &TimeGrid<T>,
) -> SampledSignal<T> {
    let last = period_index(grid.t_max(), spec.period).max(1) as usize + 1;
    let intensities = logistic_sequence(chaos, last);
    SampledSignal::from_fn(*grid, |t| {
        let n = period_index(t, spec.period);
        if n < 1 {
            return T::zero();
        }
        let end = T::lit(n as f64) * spec.period;
        if t > end - spec.duration {
            spec.height() * intensities[n as usize]
        } else {
            T::zero()
        }
    })
}

/// Poisson arrivals at rate W; each shot is a one-cell rectangle of area J.
pub fn sample_shot_noise<T: Real>(
    spec: &ShotNoiseSpec<T>,
    stream: impl Into<Substream>,
    grid: &TimeGrid<T>,
) -> SampledSignal<T> {
    let mut signal = SampledSignal::zeros(*grid);
    let rate = spec.rate.as_f64();
    if rate <= 0.0 {
        return signal;
    }
    let dt = grid.dt().as_f64();
    if rate * dt > 0.1 {
        warn!(
            "shot-noise rate·dt = {:.3} exceeds 0.1; shots will pile up in single cells",
            rate * dt
        );
    }
    let waiting = Exp::new(rate).expect("positive rate");
    let mut rng = stream.into().rng();
    let height = spec.strength / grid.dt();
    let t_max = grid.t_max().as_f64();
    let mut t = waiting.sample(&mut rng);
    while t < t_max {
        let k = ((t / dt).floor() as usize).min(grid.n_steps() - 1);
        signal.values[k] += height;
        t += waiting.sample(&mut rng);
    }
    signal
}

/// `E(t) = ω + c(t)` on every cell.
pub fn effective_frequency<T: Real>(signal: &SampledSignal<T>, omega: T) -> Vec<T> {
    signal.values.iter().map(|c| omega + *c).collect()
}

/// A signal family that can be realized on a grid from a random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalFamily<T> {
    /// No control, `c ≡ 0`.
    Free,
    Regular(PulseTrainSpec<T>),
    Jittered {
        pulses: PulseTrainSpec<T>,
        jitter: JitterSpec<T>,
    },
    /// Chaotic intensities; with `seed_amplitude: None` every realization
    /// draws `L_0` uniformly from (0, 1).
    Chaotic {
        pulses: PulseTrainSpec<T>,
        map_parameter: T,
        seed_amplitude: Option<T>,
    },
    ShotNoise(ShotNoiseSpec<T>),
}

impl<T: Real> SignalFamily<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalFamily::Free => Ok(()),
            SignalFamily::Regular(p) => p.validate(),
            SignalFamily::Jittered { pulses, jitter } => {
                pulses.validate()?;
                jitter.validate(pulses)
            }
            SignalFamily::Chaotic {
                pulses,
                map_parameter,
                seed_amplitude,
            } => {
                pulses.validate()?;
                ChaoticSpec {
                    map_parameter: *map_parameter,
                    seed_amplitude: seed_amplitude.unwrap_or(T::lit(0.5)),
                }
                .validate()
            }
            SignalFamily::ShotNoise(s) => s.validate(),
        }
    }

    /// Whether realizations depend on the random stream.
    pub fn is_stochastic(&self) -> bool {
        match self {
            SignalFamily::Free | SignalFamily::Regular(_) => false,
            SignalFamily::Jittered { jitter, .. } => *jitter != JitterSpec::default(),
            SignalFamily::Chaotic { seed_amplitude, .. } => seed_amplitude.is_none(),
            SignalFamily::ShotNoise(s) => s.rate > T::zero(),
        }
    }

    pub fn realize(&self, stream: Substream, grid: &TimeGrid<T>) -> SampledSignal<T> {
        match self {
            SignalFamily::Free => SampledSignal::zeros(*grid),
            SignalFamily::Regular(p) => sample_regular(p, grid),
            SignalFamily::Jittered { pulses, jitter } => {
                sample_jittered(pulses, jitter, stream, grid)
            }
            SignalFamily::Chaotic {
                pulses,
                map_parameter,
                seed_amplitude,
            } => {
                let seed_amplitude = match seed_amplitude {
                    Some(l0) => *l0,
                    None => {
                        let mut rng = stream.rng();
                        let mut draw: f64 = rng.random();
                        while draw == 0.0 {
                            draw = rng.random();
                        }
                        T::lit(draw)
                    }
                };
                let chaos = ChaoticSpec {
                    map_parameter: *map_parameter,
                    seed_amplitude,
                };
                sample_chaotic(pulses, &chaos, grid)
            }
            SignalFamily::ShotNoise(s) => sample_shot_noise(s, stream, grid),
        }
    }
}

/// Complex helper used by the physics modules.
pub(crate) fn phasor<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}
