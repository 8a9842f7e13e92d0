//! Noise-averaged fidelity of a dissipative qubit under control `E(t)`.
//!
//! The qubit couples to the bath through `σ₋`. The bath-averaged fidelity
//! of `|φ⟩ = μ|1⟩ + ν|0⟩` is
//!
//! ```text
//! F(t) = 1 - |μ|² - (|μ|² - 2|μ|⁴) e^{-2∫Re K} + 2(|μ|² - |μ|⁴) Re e^{-∫K}
//! ```
//!
//! with the memory kernel `K(t) = ∫_0^t α(t,s) f(t,s) ds`, where
//! `∂_t f(t,s) = [iE(t) + K(t)] f(t,s)` and `f(s,s) = 1`.
//!
//! For the Ornstein-Uhlenbeck bath, differentiating `K` closes it into the
//! scalar Riccati equation `K' = Γγ/2 + (iE + K - γ) K`, `K(0) = 0`. That
//! route ([`solve_kernel_riccati`]) is the production path; the direct
//! double integral ([`solve_kernel_quadrature`]) is kept as an oracle.

use log::warn;
use num_complex::Complex;
use rayon::ThreadPool;

use crate::bath::{ou_correlation, BathSpec};
use crate::ensemble::{map_ordered, mean_and_stderr};
use crate::error::{Error, Result};
use crate::numerics::{cumulative_trapezoid, rk4_step, TimeGrid};
use crate::scalar::Real;
use crate::signals::{effective_frequency, SignalFamily, Substream};

/// `|K|` beyond this bound is treated as a diverging kernel.
const KERNEL_BOUND: f64 = 1e6;

/// Qubit state `μ|1⟩ + ν|0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState<T> {
    pub excited: Complex<T>,
    pub ground: Complex<T>,
}

impl<T: Real> InitialState<T> {
    pub fn new(excited: Complex<T>, ground: Complex<T>) -> Result<Self> {
        let norm = excited.norm_sqr() + ground.norm_sqr();
        let tolerance = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        if norm.is_nan() || (norm - T::one()).abs() > tolerance {
            return Err(Error::invalid(
                "state",
                format!("|μ|² + |ν|² must equal 1, got {norm}"),
            ));
        }
        Ok(Self { excited, ground })
    }

    /// Real amplitudes with `|μ|² = population`.
    pub fn from_excited_population(population: T) -> Result<Self> {
        if !(population >= T::zero() && population <= T::one()) {
            return Err(Error::invalid(
                "state",
                "excited population must lie in [0, 1]",
            ));
        }
        Ok(Self {
            excited: Complex::new(population.sqrt(), T::zero()),
            ground: Complex::new((T::one() - population).sqrt(), T::zero()),
        })
    }

    pub fn excited_population(&self) -> T {
        self.excited.norm_sqr()
    }
}

/// Fixed averaging set `|μ|² ∈ {0.1, 0.2, ..., 0.9}` with real amplitudes.
pub fn default_state_set<T: Real>() -> Vec<InitialState<T>> {
    (1..=9)
        .map(|k| InitialState::from_excited_population(T::lit(k as f64 / 10.0)).expect("valid"))
        .collect()
}

/// Memory kernel sampled on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCurve<T> {
    pub grid: TimeGrid<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> KernelCurve<T> {
    /// Running integral `∫_0^{t_k} K(s) ds`.
    pub fn integral(&self) -> Vec<Complex<T>> {
        cumulative_trapezoid(&self.values, self.grid.dt())
    }
}

/// Fidelity on the grid nodes, optionally with ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve<T> {
    pub grid: TimeGrid<T>,
    pub fidelity: Vec<T>,
    pub stderr: Option<Vec<T>>,
    pub samples: Option<usize>,
}

impl<T: Real> FidelityCurve<T> {
    pub fn new(grid: TimeGrid<T>, fidelity: Vec<T>) -> Self {
        Self {
            grid,
            fidelity,
            stderr: None,
            samples: None,
        }
    }

    pub fn last(&self) -> T {
        *self.fidelity.last().expect("grid has at least two nodes")
    }

    pub fn min(&self) -> T {
        self.fidelity.iter().copied().fold(T::infinity(), T::min)
    }
}

fn check_drive<T: Real>(drive: &[T], grid: &TimeGrid<T>) -> Result<()> {
    if drive.len() != grid.n_steps() {
        return Err(Error::invalid(
            "effective_frequency",
            format!(
                "expected {} cell values, got {}",
                grid.n_steps(),
                drive.len()
            ),
        ));
    }
    Ok(())
}

fn kernel_overflow<T: Real>(value: Complex<T>, t: T) -> Result<()> {
    let finite = value.re.is_finite() && value.im.is_finite();
    if !finite || value.norm() > T::lit(KERNEL_BOUND) {
        return Err(Error::NumericOverflow {
            context: "memory kernel",
            time: t.as_f64(),
        });
    }
    Ok(())
}

/// RK4 integration of `K' = Γγ/2 + (iE + K - γ) K` with `E` held at its
/// cell value over each step.
pub fn solve_kernel_riccati<T: Real>(
    drive: &[T],
    bath: &BathSpec<T>,
    grid: &TimeGrid<T>,
) -> Result<KernelCurve<T>> {
    check_drive(drive, grid)?;
    let dt = grid.dt();
    let source = Complex::new(bath.peak(), T::zero());
    let gamma = Complex::new(bath.memory_rate, T::zero());

    let mut values = Vec::with_capacity(grid.len());
    let mut state = [Complex::new(T::zero(), T::zero())];
    values.push(state[0]);
    for (k, e) in drive.iter().enumerate() {
        let ie = Complex::new(T::zero(), *e);
        state = rk4_step(
            |_, y: &[Complex<T>; 1]| [source + (ie + y[0] - gamma) * y[0]],
            grid.time(k),
            &state,
            dt,
        )
        .map_err(|_| Error::NumericOverflow {
            context: "memory kernel",
            time: grid.time(k + 1).as_f64(),
        })?;
        kernel_overflow(state[0], grid.time(k + 1))?;
        values.push(state[0]);
    }
    Ok(KernelCurve {
        grid: *grid,
        values,
    })
}

/// Direct evaluation of `K(t) = ∫_0^t α(t,s) f(t,s) ds`.
///
/// Every history point `s_j` carries its own propagator `f(t, s_j)`,
/// advanced with `exp(∫(iE + K))` over each step; the step integral of `K`
/// uses the trapezoid rule, which makes the update implicit in `K(t_{k+1})`
/// and is resolved by fixed-point iteration. `K` itself is a trapezoid sum
/// over `s`. Cost is `O(n_steps²)` correlation evaluations.
pub fn solve_kernel_quadrature<T: Real>(
    drive: &[T],
    bath: &BathSpec<T>,
    grid: &TimeGrid<T>,
) -> Result<KernelCurve<T>> {
    check_drive(drive, grid)?;
    let dt = grid.dt();
    let half = T::lit(0.5);
    let zero = Complex::new(T::zero(), T::zero());
    let tolerance = T::epsilon() * T::lit(16.0);

    let mut values = vec![zero; grid.len()];
    // propagators[j] = f(t_k, s_j) for j <= k.
    let mut propagators: Vec<Complex<T>> = Vec::with_capacity(grid.len());
    propagators.push(Complex::new(T::one(), T::zero()));

    for k in 0..grid.n_steps() {
        let t_next = grid.time(k + 1);
        let mut history = zero;
        for (j, f) in propagators.iter().enumerate() {
            let weight = if j == 0 { half } else { T::one() };
            history += ou_correlation(t_next, grid.time(j), bath) * *f * weight;
        }
        history *= dt;
        let diagonal = ou_correlation(t_next, t_next, bath) * (half * dt);

        let current = values[k];
        let mut guess = if k == 0 {
            current
        } else {
            current * T::lit(2.0) - values[k - 1]
        };
        let mut growth = Complex::new(T::one(), T::zero());
        let mut next = guess;
        for _ in 0..100 {
            let exponent = Complex::new(T::zero(), drive[k] * dt) + (current + guess) * (half * dt);
            growth = exponent.exp();
            next = growth * history + diagonal;
            let settled = (next - guess).norm() <= tolerance * next.norm().max(T::one());
            guess = next;
            if settled {
                break;
            }
        }
        kernel_overflow(next, t_next)?;
        for f in propagators.iter_mut() {
            *f *= growth;
        }
        propagators.push(Complex::new(T::one(), T::zero()));
        values[k + 1] = next;
    }
    Ok(KernelCurve {
        grid: *grid,
        values,
    })
}

fn fidelity_from_integral<T: Real>(population: T, integral: Complex<T>) -> T {
    let p = population;
    let two = T::lit(2.0);
    let decay = (-integral.re).exp();
    let population_term = (p - two * p * p) * decay * decay;
    let coherence_term = two * (p - p * p) * decay * integral.im.cos();
    T::one() - p - population_term + coherence_term
}

fn flag_out_of_range<T: Real>(curve: &[T], grid: &TimeGrid<T>) {
    let slack = T::lit(1e-9);
    if let Some(k) = curve
        .iter()
        .position(|f| *f > T::one() + slack || *f < -slack)
    {
        warn!(
            "fidelity {} leaves [0, 1] at t = {} (Re ∫K < 0 on this drive)",
            curve[k],
            grid.time(k)
        );
    }
}

/// Fidelity of one initial state from a solved kernel.
pub fn qsd_fidelity<T: Real>(state: &InitialState<T>, kernel: &KernelCurve<T>) -> FidelityCurve<T> {
    qsd_fidelity_averaged(std::slice::from_ref(state), kernel)
}

/// Fidelity averaged uniformly over `states`.
pub fn qsd_fidelity_averaged<T: Real>(
    states: &[InitialState<T>],
    kernel: &KernelCurve<T>,
) -> FidelityCurve<T> {
    let integral = kernel.integral();
    let weight = T::one() / T::count(states.len().max(1));
    let fidelity: Vec<T> = integral
        .iter()
        .map(|i| {
            states
                .iter()
                .map(|s| fidelity_from_integral(s.excited_population(), *i))
                .sum::<T>()
                * weight
        })
        .collect();
    flag_out_of_range(&fidelity, &kernel.grid);
    FidelityCurve::new(kernel.grid, fidelity)
}

/// State-averaged fidelity for one control realization.
pub fn fidelity_for_drive<T: Real>(
    drive: &[T],
    bath: &BathSpec<T>,
    states: &[InitialState<T>],
    grid: &TimeGrid<T>,
) -> Result<FidelityCurve<T>> {
    let kernel = solve_kernel_riccati(drive, bath, grid)?;
    Ok(qsd_fidelity_averaged(states, &kernel))
}

/// Ensemble of control realizations.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    /// Trajectory `k` draws from `Substream::new(master_seed, k)`.
    pub master_seed: u64,
}

/// Mean fidelity over trajectories (each already averaged over `states`),
/// with its standard error. Results are identical for any pool size.
pub fn ensemble_fidelity<T: Real>(
    family: &SignalFamily<T>,
    bath: &BathSpec<T>,
    states: &[InitialState<T>],
    ensemble: EnsembleSpec,
    grid: &TimeGrid<T>,
    pool: Option<&ThreadPool>,
) -> Result<FidelityCurve<T>> {
    if ensemble.n_traj == 0 {
        return Err(Error::invalid("n_traj", "must be >= 1"));
    }
    if states.is_empty() {
        return Err(Error::invalid(
            "states",
            "at least one initial state is required",
        ));
    }
    family.validate()?;
    let curves = map_ordered(pool, ensemble.n_traj, |k| {
        let signal = family.realize(Substream::new(ensemble.master_seed, k as u64), grid);
        let drive = effective_frequency(&signal, T::one());
        fidelity_for_drive(&drive, bath, states, grid).map(|c| c.fidelity)
    })?;
    let (mean, stderr) = mean_and_stderr(&curves);
    Ok(FidelityCurve {
        grid: *grid,
        fidelity: mean,
        stderr: Some(stderr),
        samples: Some(ensemble.n_traj),
    })
}
