//! Adiabatic passage of `H(t) = (ω + c(t)) [s σ_x + (1 - s) σ_z]`, `s = t/T`,
//! followed through the amplitude `ψ₀` of the instantaneous ground state.
//!
//! In the adiabatic frame `|ψ⟩ = Σ ψ_n e^{iθ_n} |E_n⟩` with
//! `θ_n = -∫E_n`, the two amplitudes obey
//!
//! ```text
//! ψ₀' = -⟨E₀|Ė₀⟩ψ₀ - ⟨E₀|Ė₁⟩ e^{iΛ} ψ₁,   ψ₁' = -⟨E₁|Ė₁⟩ψ₁ - ⟨E₁|Ė₀⟩ e^{-iΛ} ψ₀,
//! ```
//!
//! where `Λ(t) = ∫_0^t (E₀ - E₁)`. Eliminating `ψ₁` (with `ψ₁(0) = 0`)
//! leaves the closed memory equation `ψ₀' = -⟨E₀|Ė₀⟩ψ₀ - ∫_0^t g(t,s) ψ₀(s) ds`
//! with `g(t,s) = -⟨E₀(t)|Ė₁(t)⟩⟨E₁(s)|Ė₀(s)⟩ exp ∫_s^t (iE - ⟨E₁|Ė₁⟩)`.
//! [`solve_psi0`] integrates that equation; [`tdse_oracle`] integrates the
//! two-component system directly.
//!
//! Eigenvectors are kept real with sign continuity along the sweep, which
//! makes both Berry terms vanish. The control multiplies the whole
//! Hamiltonian, so it rescales eigenvalues and leaves eigenvectors alone.

use num_complex::Complex;
use rayon::ThreadPool;

use crate::ensemble::{map_ordered, mean_and_stderr};
use crate::error::{Error, Result};
use crate::numerics::{cumulative_trapezoid, rk4_step, volterra_solve, TimeGrid, VolterraOptions};
use crate::qsd::EnsembleSpec;
use crate::scalar::Real;
use crate::signals::{phasor, SampledSignal, SignalFamily, Substream};

/// The control prefactor is kept above `(1 - 0.9) ω`.
const CONTROL_FLOOR: f64 = -0.9;
const GAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec<T> {
    pub omega: T,
    pub passage_time: T,
}

impl<T: Real> SweepSpec<T> {
    pub fn new(omega: T, passage_time: T) -> Result<Self> {
        if !(omega.is_finite() && omega > T::zero()) {
            return Err(Error::invalid("sweep.omega", "must be finite and > 0"));
        }
        if !(passage_time.is_finite() && passage_time > T::zero()) {
            return Err(Error::invalid(
                "sweep.passage_time",
                "must be finite and > 0",
            ));
        }
        Ok(Self {
            omega,
            passage_time,
        })
    }

    /// Schedule `(a, b) = (s, 1 - s)` multiplying `(σ_x, σ_z)`.
    pub fn schedule(&self, t: T) -> (T, T) {
        let s = self.progress(t);
        (s, T::one() - s)
    }

    pub fn progress(&self, t: T) -> T {
        (t / self.passage_time).max(T::zero()).min(T::one())
    }

    /// Effective frequency `ω + c`, with `c` clamped above `-0.9 ω`.
    pub fn prefactor(&self, control: T) -> T {
        self.omega + control.max(T::lit(CONTROL_FLOOR) * self.omega)
    }

    /// `dθ/dt = (1/T) / (2s² - 2s + 1)`.
    pub fn mixing_rate(&self, t: T) -> T {
        let s = self.progress(t);
        let two = T::lit(2.0);
        T::one() / self.passage_time / (two * s * s - two * s + T::one())
    }

    fn radius(&self, t: T) -> T {
        let (a, b) = self.schedule(t);
        a.hypot(b)
    }

    /// `∫ √(s² + (1-s)²) ds` as a function of `s`.
    fn radius_antiderivative(s: T) -> T {
        let half = T::lit(0.5);
        let x = s - half;
        let root = (x * x + half * half).sqrt();
        T::SQRT_2() * half * (x * root + half * half * (x / half).asinh())
    }
}

/// Instantaneous eigensystem at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPoint<T> {
    /// `[E₀, E₁]` with `E₀ <= E₁`.
    pub energies: [T; 2],
    /// Signed gap `E₀ - E₁`.
    pub gap: T,
    pub mixing_angle: T,
    /// Real eigenvectors in the `σ_z` basis `(|↑⟩, |↓⟩)`; index 0 is the
    /// ground state.
    pub vectors: [[T; 2]; 2],
}

fn dot<T: Real>(a: &[T; 2], b: &[T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// `J v` with `J = [[0, -1], [1, 0]]`, the generator of the eigenvector rotation.
fn rotate<T: Real>(v: &[T; 2]) -> [T; 2] {
    [-v[1], v[0]]
}

/// Diagonalizes `H(t)` for control value `control`.
pub fn eigensystem<T: Real>(t: T, sweep: &SweepSpec<T>, control: T) -> Result<EigenPoint<T>> {
    let (a, b) = sweep.schedule(t);
    let scale = sweep.prefactor(control);
    let radius = sweep.radius(t);
    let energies = [-scale * radius, scale * radius];
    let spread = energies[1] - energies[0];
    if spread.is_nan() || spread < T::lit(GAP_TOLERANCE) {
        return Err(Error::DegenerateGap {
            time: t.as_f64(),
            gap: spread.as_f64(),
        });
    }
    let theta = a.atan2(b);
    let half = theta * T::lit(0.5);
    let (sin, cos) = half.sin_cos();
    Ok(EigenPoint {
        energies,
        gap: energies[0] - energies[1],
        mixing_angle: theta,
        vectors: [[-sin, cos], [cos, sin]],
    })
}

/// Eigensystems on every grid node, gauge-continued along the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame<T> {
    pub sweep: SweepSpec<T>,
    pub grid: TimeGrid<T>,
    pub points: Vec<EigenPoint<T>>,
}

/// Control value used at node `k`: the cell starting there (the last node
/// reuses the final cell).
fn node_control<T: Real>(control: &SampledSignal<T>, k: usize) -> T {
    control.values[k.min(control.values.len() - 1)]
}

fn check_passage_grid<T: Real>(sweep: &SweepSpec<T>, grid: &TimeGrid<T>) -> Result<()> {
    let mismatch = (grid.t_max() - sweep.passage_time).abs();
    if mismatch > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) * sweep.passage_time {
        return Err(Error::invalid(
            "grid.t_max",
            format!("must equal the passage time {}", sweep.passage_time),
        ));
    }
    Ok(())
}

impl<T: Real> EigenFrame<T> {
    pub fn build(
        sweep: &SweepSpec<T>,
        control: &SampledSignal<T>,
        grid: &TimeGrid<T>,
    ) -> Result<Self> {
        check_passage_grid(sweep, grid)?;
        if control.values.len() != grid.n_steps() {
            return Err(Error::invalid(
                "control",
                "must be sampled on the passage grid",
            ));
        }
        let mut points = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let mut point = eigensystem(grid.time(k), sweep, node_control(control, k))?;
            if let Some(prev) = points.last() {
                align(&mut point, prev);
            }
            points.push(point);
        }
        Ok(Self {
            sweep: *sweep,
            grid: *grid,
            points,
        })
    }

    /// Same frame with every eigenvector sign reversed.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            for v in &mut p.vectors {
                v[0] = -v[0];
                v[1] = -v[1];
            }
        }
        out
    }

    /// Smallest overlap between consecutive eigenvectors (gauge continuity
    /// requires this to be positive).
    pub fn min_continuity_overlap(&self) -> T {
        self.points
            .windows(2)
            .flat_map(|w| (0..2).map(move |n| dot(&w[0].vectors[n], &w[1].vectors[n])))
            .fold(T::infinity(), T::min)
    }
}

/// Flips eigenvector signs of `point` to keep positive overlap with `reference`.
fn align<T: Real>(point: &mut EigenPoint<T>, reference: &EigenPoint<T>) {
    for n in 0..2 {
        if dot(&point.vectors[n], &reference.vectors[n]) < T::zero() {
            point.vectors[n] = [-point.vectors[n][0], -point.vectors[n][1]];
        }
    }
}

/// Overlaps `⟨E_m|Ė_n⟩` on the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings<T> {
    /// `[⟨E₀|Ė₀⟩, ⟨E₁|Ė₁⟩]`.
    pub berry: [Vec<T>; 2],
    /// `⟨E₁|Ė₀⟩`.
    pub down: Vec<T>,
    /// `⟨E₀|Ė₁⟩`.
    pub up: Vec<T>,
}

fn coupling_matrix<T: Real>(point: &EigenPoint<T>, rate: T) -> [[T; 2]; 2] {
    let half = rate * T::lit(0.5);
    let v = &point.vectors;
    let mut m = [[T::zero(); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = dot(&v[i], &rotate(&v[j])) * half;
        }
    }
    m
}

/// Analytic overlaps: `Ė_n = (θ̇/2) J E_n` for the rotating real eigenbasis.
pub fn geometric_couplings<T: Real>(frame: &EigenFrame<T>) -> Couplings<T> {
    let matrices: Vec<_> = frame
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| coupling_matrix(p, frame.sweep.mixing_rate(frame.grid.time(k))))
        .collect();
    couplings_from(&matrices)
}

/// Overlaps from finite differences of the node eigenvectors (centered in
/// the interior, second-order one-sided at the ends).
pub fn finite_difference_couplings<T: Real>(frame: &EigenFrame<T>) -> Couplings<T> {
    let h = frame.grid.dt();
    let last = frame.points.len() - 1;
    let vec_at = |k: usize, n: usize| frame.points[k].vectors[n];
    let derivative = |k: usize, n: usize| -> [T; 2] {
        let two = T::lit(2.0);
        let (a, b, c, scale) = if k == 0 {
            (
                vec_at(0, n),
                vec_at(1, n),
                vec_at(2, n),
                [-T::lit(3.0), T::lit(4.0), -T::one()],
            )
        } else if k == last {
            (
                vec_at(last, n),
                vec_at(last - 1, n),
                vec_at(last - 2, n),
                [T::lit(3.0), -T::lit(4.0), T::one()],
            )
        } else {
            (
                vec_at(k - 1, n),
                vec_at(k, n),
                vec_at(k + 1, n),
                [-T::one(), T::zero(), T::one()],
            )
        };
        [
            (a[0] * scale[0] + b[0] * scale[1] + c[0] * scale[2]) / (two * h),
            (a[1] * scale[0] + b[1] * scale[1] + c[1] * scale[2]) / (two * h),
        ]
    };
    let matrices: Vec<_> = (0..=last)
        .map(|k| {
            let mut m = [[T::zero(); 2]; 2];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry = dot(&vec_at(k, i), &derivative(k, j));
                }
            }
            m
        })
        .collect();
    couplings_from(&matrices)
}

fn couplings_from<T: Real>(matrices: &[[[T; 2]; 2]]) -> Couplings<T> {
    Couplings {
        berry: [
            matrices.iter().map(|m| m[0][0]).collect(),
            matrices.iter().map(|m| m[1][1]).collect(),
        ],
        down: matrices.iter().map(|m| m[1][0]).collect(),
        up: matrices.iter().map(|m| m[0][1]).collect(),
    }
}

/// Gap phase `Λ(t) = ∫_0^t (E₀ - E₁) = -2 ∫_0^t (ω + c) r`, exact for a
/// piecewise-constant control.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalPhase<T> {
    sweep: SweepSpec<T>,
    grid: TimeGrid<T>,
    prefactors: Vec<T>,
    nodes: Vec<T>,
}

impl<T: Real> DynamicalPhase<T> {
    pub fn new(sweep: &SweepSpec<T>, control: &SampledSignal<T>, grid: &TimeGrid<T>) -> Self {
        let prefactors: Vec<T> = control.values.iter().map(|c| sweep.prefactor(*c)).collect();
        let mut nodes = Vec::with_capacity(grid.len());
        let mut acc = T::zero();
        nodes.push(acc);
        for (k, pref) in prefactors.iter().enumerate() {
            acc += Self::cell_increment(sweep, *pref, grid.time(k), grid.time(k + 1));
            nodes.push(acc);
        }
        Self {
            sweep: *sweep,
            grid: *grid,
            prefactors,
            nodes,
        }
    }

    fn cell_increment(sweep: &SweepSpec<T>, prefactor: T, from: T, to: T) -> T {
        let big_t = sweep.passage_time;
        let area = big_t
            * (SweepSpec::radius_antiderivative(sweep.progress(to))
                - SweepSpec::radius_antiderivative(sweep.progress(from)));
        -T::lit(2.0) * prefactor * area
    }

    pub fn at_node(&self, k: usize) -> T {
        self.nodes[k]
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn at(&self, t: T) -> T {
        let k = self.grid.cell_of(t);
        self.nodes[k] + Self::cell_increment(&self.sweep, self.prefactors[k], self.grid.time(k), t)
    }
}

/// Separable propagator `g(t_k, s_j) = left_k · right_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator<T> {
    left: Vec<Complex<T>>,
    right: Vec<Complex<T>>,
}

impl<T: Real> Propagator<T> {
    pub fn new(couplings: &Couplings<T>, phase: &DynamicalPhase<T>, grid: &TimeGrid<T>) -> Self {
        let berry_excited: Vec<Complex<T>> = couplings.berry[1]
            .iter()
            .map(|b| Complex::new(*b, T::zero()))
            .collect();
        let damping = cumulative_trapezoid(&berry_excited, grid.dt());
        let left = (0..grid.len())
            .map(|k| {
                let e = Complex::new(-damping[k].re, phase.at_node(k)).exp();
                e * (-couplings.up[k])
            })
            .collect();
        let right = (0..grid.len())
            .map(|j| {
                let e = Complex::new(damping[j].re, -phase.at_node(j)).exp();
                e * couplings.down[j]
            })
            .collect();
        Self { left, right }
    }

    /// `g(t_k, s_j)`.
    pub fn at(&self, k: usize, j: usize) -> Complex<T> {
        self.left[k] * self.right[j]
    }
}

/// `g(t_k, s_j)` for a frame and its gap phase.
pub fn propagator_g<T: Real>(k: usize, j: usize, passage: &Passage<T>) -> Complex<T> {
    passage.propagator().at(k, j)
}

/// Ground-state amplitude along the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi0Curve<T> {
    pub grid: TimeGrid<T>,
    pub amplitudes: Vec<Complex<T>>,
}

impl<T: Real> Psi0Curve<T> {
    pub fn magnitudes(&self) -> Vec<T> {
        self.amplitudes.iter().map(|z| z.norm()).collect()
    }

    pub fn final_magnitude(&self) -> T {
        self.amplitudes.last().expect("non-empty").norm()
    }

    pub fn min_magnitude(&self) -> T {
        self.amplitudes
            .iter()
            .map(|z| z.norm())
            .fold(T::infinity(), T::min)
    }
}

/// Both adiabatic-frame amplitudes from the two-component integration.
#[derive(Debug, Clone, PartialEq)]
pub struct TdseSolution<T> {
    pub psi0: Psi0Curve<T>,
    pub psi1: Vec<Complex<T>>,
}

impl<T: Real> TdseSolution<T> {
    /// `|ψ₀|² + |ψ₁|²` on every node.
    pub fn norms(&self) -> Vec<T> {
        self.psi0
            .amplitudes
            .iter()
            .zip(&self.psi1)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }

    /// Lab-frame state `Σ ψ_n e^{iθ_n} |E_n⟩` at node `k`, with
    /// `θ₀ = -Λ/2`, `θ₁ = Λ/2`.
    pub fn lab_state(&self, k: usize, passage: &Passage<T>) -> [Complex<T>; 2] {
        let lambda = passage.phase.at_node(k);
        let half = T::lit(0.5);
        let amp0 = self.psi0.amplitudes[k] * phasor(-lambda * half);
        let amp1 = self.psi1[k] * phasor(lambda * half);
        let v = &passage.frame.points[k].vectors;
        [
            amp0 * v[0][0] + amp1 * v[1][0],
            amp0 * v[0][1] + amp1 * v[1][1],
        ]
    }
}

/// Everything needed to integrate one passage for one control realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Passage<T> {
    pub frame: EigenFrame<T>,
    pub couplings: Couplings<T>,
    pub phase: DynamicalPhase<T>,
    control: SampledSignal<T>,
}

impl<T: Real> Passage<T> {
    pub fn new(
        sweep: &SweepSpec<T>,
        control: &SampledSignal<T>,
        grid: &TimeGrid<T>,
    ) -> Result<Self> {
        let frame = EigenFrame::build(sweep, control, grid)?;
        Ok(Self::with_frame(frame, control))
    }

    /// Passage over an explicitly supplied (gauge-continuous) frame.
    pub fn with_frame(frame: EigenFrame<T>, control: &SampledSignal<T>) -> Self {
        let couplings = geometric_couplings(&frame);
        let phase = DynamicalPhase::new(&frame.sweep, control, &frame.grid);
        Self {
            frame,
            couplings,
            phase,
            control: control.clone(),
        }
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.frame.grid
    }

    pub fn propagator(&self) -> Propagator<T> {
        Propagator::new(&self.couplings, &self.phase, &self.frame.grid)
    }

    pub fn solve_psi0(&self) -> Result<Psi0Curve<T>> {
        let grid = self.grid();
        let g = self.propagator();
        let berry = &self.couplings.berry[0];
        let amplitudes = volterra_solve(
            |k| Complex::new(-berry[k], T::zero()),
            |k, j| g.at(k, j),
            &grid,
            Complex::new(T::one(), T::zero()),
            VolterraOptions::default(),
        )?;
        Ok(Psi0Curve { grid, amplitudes })
    }

    /// Coupling matrix at an arbitrary time, in the gauge of node `k`.
    fn couplings_at(&self, t: T, k: usize) -> Result<[[T; 2]; 2]> {
        let sweep = &self.frame.sweep;
        let mut point = eigensystem(t, sweep, self.control.values[k])?;
        align(&mut point, &self.frame.points[k]);
        Ok(coupling_matrix(&point, sweep.mixing_rate(t)))
    }

    pub fn solve_tdse(&self) -> Result<TdseSolution<T>> {
        let grid = self.grid();
        let dt = grid.dt();
        let half = T::lit(0.5) * dt;
        let mut state = [
            Complex::new(T::one(), T::zero()),
            Complex::new(T::zero(), T::zero()),
        ];
        let mut psi0 = Vec::with_capacity(grid.len());
        let mut psi1 = Vec::with_capacity(grid.len());
        psi0.push(state[0]);
        psi1.push(state[1]);
        for k in 0..grid.n_steps() {
            let t = grid.time(k);
            // Coefficients at the three RK4 abscissae of this step.
            let mut coeffs = [[[T::zero(); 2]; 2]; 3];
            let mut rot = [Complex::new(T::zero(), T::zero()); 3];
            for (slot, tau) in [t, t + half, grid.time(k + 1)].into_iter().enumerate() {
                coeffs[slot] = self.couplings_at(tau, k)?;
                rot[slot] = phasor(self.phase.at(tau));
            }
            let slot_of = |tau: T| {
                if tau == t {
                    0
                } else if tau == t + half {
                    1
                } else {
                    2
                }
            };
            state = rk4_step(
                |tau, y: &[Complex<T>; 2]| {
                    let s = slot_of(tau);
                    let m = &coeffs[s];
                    let r = rot[s];
                    [
                        -(y[0] * m[0][0]) - r * y[1] * m[0][1],
                        -(y[1] * m[1][1]) - r.conj() * y[0] * m[1][0],
                    ]
                },
                t,
                &state,
                dt,
            )?;
            psi0.push(state[0]);
            psi1.push(state[1]);
        }
        Ok(TdseSolution {
            psi0: Psi0Curve {
                grid,
                amplitudes: psi0,
            },
            psi1,
        })
    }
}

/// Volterra solution for `ψ₀` under `control`.
pub fn solve_psi0<T: Real>(
    sweep: &SweepSpec<T>,
    control: &SampledSignal<T>,
    grid: &TimeGrid<T>,
) -> Result<Psi0Curve<T>> {
    Passage::new(sweep, control, grid)?.solve_psi0()
}

/// Two-component Runge-Kutta solution of the adiabatic-frame dynamics.
pub fn tdse_oracle<T: Real>(
    sweep: &SweepSpec<T>,
    control: &SampledSignal<T>,
    grid: &TimeGrid<T>,
) -> Result<TdseSolution<T>> {
    Passage::new(sweep, control, grid)?.solve_tdse()
}

/// Residual `|∫_0^t g(t,s) ψ₀(s) ds|` of the adiabatic condition.
pub fn adiabatic_defect<T: Real>(psi0: &Psi0Curve<T>, propagator: &Propagator<T>) -> Vec<T> {
    let dt = psi0.grid.dt();
    let half = T::lit(0.5);
    let y = &psi0.amplitudes;
    (0..y.len())
        .map(|k| {
            if k == 0 {
                return T::zero();
            }
            let mut acc = (propagator.at(k, 0) * y[0] + propagator.at(k, k) * y[k]) * half;
            for (j, yj) in y.iter().enumerate().take(k).skip(1) {
                acc += propagator.at(k, j) * *yj;
            }
            (acc * dt).norm()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassageSolver {
    Volterra,
    Tdse,
}

/// Ensemble statistics of `|ψ₀(t)|` over control realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageEnsemble<T> {
    pub grid: TimeGrid<T>,
    pub mean_magnitude: Vec<T>,
    pub stderr: Vec<T>,
    pub samples: usize,
}

impl<T: Real> PassageEnsemble<T> {
    pub fn final_mean(&self) -> T {
        *self.mean_magnitude.last().expect("non-empty")
    }

    pub fn final_stderr(&self) -> T {
        *self.stderr.last().expect("non-empty")
    }
}

pub fn ensemble_passage<T: Real>(
    sweep: &SweepSpec<T>,
    family: &SignalFamily<T>,
    ensemble: EnsembleSpec,
    grid: &TimeGrid<T>,
    solver: PassageSolver,
    pool: Option<&ThreadPool>,
) -> Result<PassageEnsemble<T>> {
    if ensemble.n_traj == 0 {
        return Err(Error::invalid("n_traj", "must be >= 1"));
    }
    family.validate()?;
    check_passage_grid(sweep, grid)?;
    let curves = map_ordered(pool, ensemble.n_traj, |k| {
        let control = family.realize(Substream::new(ensemble.master_seed, k as u64), grid);
        let passage = Passage::new(sweep, &control, grid)?;
        let curve = match solver {
            PassageSolver::Volterra => passage.solve_psi0()?,
            PassageSolver::Tdse => passage.solve_tdse()?.psi0,
        };
        Ok(curve.magnitudes())
    })?;
    let (mean_magnitude, stderr) = mean_and_stderr(&curves);
    Ok(PassageEnsemble {
        grid: *grid,
        mean_magnitude,
        stderr,
        samples: ensemble.n_traj,
    })
}
