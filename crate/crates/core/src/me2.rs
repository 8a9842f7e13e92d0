//! Second-order (Born) master-equation fidelity for the dissipative qubit.
//!
//! The survival probability `b(t)` of `|φ⟩` obeys
//! `b' = -2 b Re ∫_0^t C(-t') 𝒜(t, t - t') dt'`. At zero temperature only
//! the `σ₊ σ₋` channel survives, with `C(-t') = α(t')` and the connected
//! correlator `𝒜(t, s) = ⟨σ₊(t)σ₋(s)⟩ - ⟨σ₊(t)⟩⟨σ₋(s)⟩`. The result is
//! accumulated in exponential form, `b(t) = exp(-2 Re ∫_0^t rate)`.

use num_complex::Complex;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::numerics::{cumulative_trapezoid, TimeGrid};
use crate::qsd::{FidelityCurve, InitialState};
use crate::scalar::Real;
use crate::signals::phasor;

/// Interaction-picture phase `Φ(t_k) = ∫_0^{t_k} E(s) ds` on the nodes.
///
/// `E` is constant on each cell, so the running sum is exact.
pub fn accumulated_phase<T: Real>(drive: &[T], grid: &TimeGrid<T>) -> Vec<T> {
    let dt = grid.dt();
    let mut out = Vec::with_capacity(drive.len() + 1);
    let mut acc = T::zero();
    out.push(acc);
    for e in drive {
        acc += *e * dt;
        out.push(acc);
    }
    out
}

/// Connected correlator `𝒜(t_k, t_j)` of the dissipative channel.
///
/// In the interaction picture `σ₊(t) = e^{iΦ(t)} σ₊`, which gives the closed
/// form `𝒜(t, s) = |μ|⁴ e^{i(Φ(t) - Φ(s))}`. Entries are produced on demand
/// from the stored phases instead of a triangular table.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageKernel<T> {
    pub grid: TimeGrid<T>,
    weight: T,
    phase: Vec<T>,
    phasors: Vec<Complex<T>>,
}

impl<T: Real> LeakageKernel<T> {
    /// `𝒜(t_k, t_j)`, meaningful for `j <= k`.
    pub fn at(&self, k: usize, j: usize) -> Complex<T> {
        self.phasors[k] * self.phasors[j].conj() * self.weight
    }

    /// `|μ|⁴`, the modulus of every entry.
    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn phase(&self) -> &[T] {
        &self.phase
    }
}

pub fn leakage_kernel<T: Real>(
    state: &InitialState<T>,
    drive: &[T],
    grid: &TimeGrid<T>,
) -> Result<LeakageKernel<T>> {
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
    let p = state.excited_population();
    let phase = accumulated_phase(drive, grid);
    let phasors = phase.iter().map(|f| phasor(*f)).collect();
    Ok(LeakageKernel {
        grid: *grid,
        weight: p * p,
        phase,
        phasors,
    })
}

/// Leakage rate `∫_0^{t_k} α(t') 𝒜(t_k, t_k - t') dt'` on every node.
pub fn leakage_rate<T: Real>(kernel: &LeakageKernel<T>, bath: &BathSpec<T>) -> Vec<Complex<T>> {
    let grid = kernel.grid;
    let dt = grid.dt();
    let half = T::lit(0.5);
    let lags: Vec<Complex<T>> = (0..grid.len()).map(|l| bath.at_lag(grid.time(l))).collect();
    (0..grid.len())
        .map(|k| {
            if k == 0 {
                return Complex::new(T::zero(), T::zero());
            }
            // s = t_j, lag t' = t_k - t_j.
            let mut acc = (lags[k] * kernel.at(k, 0) + lags[0] * kernel.at(k, k)) * half;
            for j in 1..k {
                acc += lags[k - j] * kernel.at(k, j);
            }
            acc * dt
        })
        .collect()
}

/// Second-order master-equation fidelity of `state` under drive `E`.
pub fn me2_fidelity<T: Real>(
    state: &InitialState<T>,
    drive: &[T],
    bath: &BathSpec<T>,
    grid: &TimeGrid<T>,
) -> Result<FidelityCurve<T>> {
    let kernel = leakage_kernel(state, drive, grid)?;
    let rate = leakage_rate(&kernel, bath);
    let exponent = cumulative_trapezoid(&rate, grid.dt());
    let two = T::lit(2.0);
    let fidelity = exponent.iter().map(|x| (-two * x.re).exp()).collect();
    Ok(FidelityCurve::new(*grid, fidelity))
}

/// Uniform average of [`me2_fidelity`] over `states`.
pub fn me2_fidelity_averaged<T: Real>(
    states: &[InitialState<T>],
    drive: &[T],
    bath: &BathSpec<T>,
    grid: &TimeGrid<T>,
) -> Result<FidelityCurve<T>> {
    let mut total = vec![T::zero(); grid.len()];
    for state in states {
        let curve = me2_fidelity(state, drive, bath, grid)?;
        for (t, v) in total.iter_mut().zip(&curve.fidelity) {
            *t += *v;
        }
    }
    let weight = T::one() / T::count(states.len().max(1));
    Ok(FidelityCurve::new(
        *grid,
        total.into_iter().map(|v| v * weight).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{effective_frequency, sample_regular, PulseTrainSpec};
    use proptest::prelude::*;

    type C = Complex<f64>;
    type Mat = [[C; 2]; 2];

    // Basis order (|1⟩, |0⟩); σ₊ = |1⟩⟨0|.
    fn mul(a: &Mat, b: &Mat) -> Mat {
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn dagger(a: &Mat) -> Mat {
        [
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ]
    }

    fn expect(op: &Mat, psi: &[C; 2]) -> C {
        let mut acc = C::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += psi[i].conj() * op[i][j] * psi[j];
            }
        }
        acc
    }

    /// `U(t)† X U(t)` with `U = exp(-i Φ σ_z / 2)`.
    fn heisenberg(op: &Mat, phase: f64) -> Mat {
        let u: Mat = [
            [C::from_polar(1.0, -phase / 2.0), C::new(0.0, 0.0)],
            [C::new(0.0, 0.0), C::from_polar(1.0, phase / 2.0)],
        ];
        mul(&dagger(&u), &mul(op, &u))
    }

    fn brute_force(mu: C, nu: C, phase_t: f64, phase_s: f64) -> C {
        let zero = C::new(0.0, 0.0);
        let one = C::new(1.0, 0.0);
        let raise: Mat = [[zero, one], [zero, zero]];
        let lower = dagger(&raise);
        let psi = [mu, nu];
        let a_t = heisenberg(&raise, phase_t);
        let b_s = heisenberg(&lower, phase_s);
        expect(&mul(&a_t, &b_s), &psi) - expect(&a_t, &psi) * expect(&b_s, &psi)
    }

    fn kernel_for(state: &InitialState<f64>, phases: [f64; 2]) -> LeakageKernel<f64> {
        LeakageKernel {
            grid: TimeGrid::new(1.0, 1).unwrap(),
            weight: state.excited_population().powi(2),
            phase: phases.to_vec(),
            phasors: phases.iter().map(|p| phasor(*p)).collect(),
        }
    }

    #[test]
    fn accumulated_phase_examples() {
        let grid = TimeGrid::<f64>::new(10.0, 1000).unwrap();
        assert!(accumulated_phase(&vec![0.0; 1000], &grid)
            .iter()
            .all(|p| *p == 0.0));
        let linear = accumulated_phase(&vec![1.0; 1000], &grid);
        for (k, p) in linear.iter().enumerate() {
            assert!((p - grid.time(k)).abs() < 1e-12);
        }
        let pulses = PulseTrainSpec::new(0.02, 0.01, 0.2).unwrap();
        let drive = effective_frequency(&sample_regular(&pulses, &grid), 1.0);
        let phase = accumulated_phase(&drive, &grid);
        for n in [1usize, 10, 500] {
            let expected = n as f64 * (0.02 + 0.2);
            let k = (n as f64 * 0.02 / grid.dt()).round() as usize;
            assert!((phase[k] - expected).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn leakage_kernel_examples() {
        let ground = InitialState::from_excited_population(0.0).unwrap();
        assert_eq!(kernel_for(&ground, [0.3, 1.1]).at(1, 0), C::new(0.0, 0.0));
        let excited = InitialState::from_excited_population(1.0).unwrap();
        let k = kernel_for(&excited, [0.7, 0.7]);
        assert!((k.at(1, 1) - C::new(1.0, 0.0)).norm() < 1e-15);
        let half = InitialState::from_excited_population(0.5).unwrap();
        let a = kernel_for(&half, [0.0, 2.0]).at(1, 0).norm();
        let b = kernel_for(&half, [5.0, -3.0]).at(1, 0).norm();
        assert!((a - b).abs() < 1e-15 && (a - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn closed_form_matches_matrix_algebra(
            amp in 0.0f64..=1.0,
            rel in 0.0f64..std::f64::consts::TAU,
            glob in 0.0f64..std::f64::consts::TAU,
            phase_t in -50.0f64..50.0,
            phase_s in -50.0f64..50.0,
        ) {
            let mu = C::from_polar(amp, glob);
            let nu = C::from_polar((1.0 - amp * amp).sqrt(), glob + rel);
            let state = InitialState::new(mu, nu).unwrap();
            let kernel = kernel_for(&state, [phase_s, phase_t]);
            let closed = kernel.at(1, 0);
            let brute = brute_force(mu, nu, phase_t, phase_s);
            prop_assert!((closed - brute).norm() < 1e-12, "{closed} vs {brute}");
        }
    }

    #[test]
    fn trivial_fidelities() {
        let grid = TimeGrid::new(5.0, 500).unwrap();
        let drive = vec![1.0; 500];
        let decoupled = BathSpec::new(0.0, 0.5).unwrap();
        let half = InitialState::from_excited_population(0.5).unwrap();
        let f = me2_fidelity(&half, &drive, &decoupled, &grid).unwrap();
        assert!(f.fidelity.iter().all(|v| *v == 1.0));
        let bath = BathSpec::new(1.0, 0.5).unwrap();
        let ground = InitialState::from_excited_population(0.0).unwrap();
        let f = me2_fidelity(&ground, &drive, &bath, &grid).unwrap();
        assert!(f.fidelity.iter().all(|v| *v == 1.0));
        let f = me2_fidelity(&half, &drive, &bath, &grid).unwrap();
        assert_eq!(f.fidelity[0], 1.0);
        assert!(f.fidelity.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn markov_leakage_rate() {
        // For γ ≫ E the rate tends to |μ|⁴ Γ/2 after the memory time.
        let grid = TimeGrid::<f64>::new(2.0, 4000).unwrap();
        let bath = BathSpec::new(1.0, 200.0).unwrap();
        let state = InitialState::from_excited_population(1.0).unwrap();
        let kernel = leakage_kernel(&state, &vec![1.0; 4000], &grid).unwrap();
        let rate = leakage_rate(&kernel, &bath);
        assert!((rate.last().unwrap().re - 0.5).abs() < 0.01);
    }
}
