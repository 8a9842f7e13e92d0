//! Fixed-step integrators and quadrature on uniform time grids.
//!
//! Everything here is a pure function of its inputs. Step sizes are never
//! adapted, so two runs over the same grid perform the same floating-point
//! operations in the same order.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform grid `t_k = k * dt`, `k = 0..=n_steps`, with `dt = t_max / n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_max: T,
    n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_max: T, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be a positive integer"));
        }
        if !(t_max.is_finite() && t_max > T::zero()) {
            return Err(Error::invalid(
                "t_max",
                format!("must be finite and > 0, got {t_max}"),
            ));
        }
        Ok(Self { t_max, n_steps })
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid nodes (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> T {
        self.t_max / T::count(self.n_steps)
    }

    /// Node time `t_k`.
    pub fn time(&self, k: usize) -> T {
        T::count(k) * self.dt()
    }

    /// Midpoint of cell `k`, i.e. `(k + 1/2) dt`.
    pub fn midpoint(&self, k: usize) -> T {
        (T::count(k) + T::lit(0.5)) * self.dt()
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Cell index containing `t` (clamped to the grid).
    pub fn cell_of(&self, t: T) -> usize {
        let k = (t / self.dt()).floor();
        if k <= T::zero() {
            0
        } else {
            k.to_usize().unwrap_or(usize::MAX).min(self.n_steps - 1)
        }
    }
}

fn all_finite<T: Real>(values: &[Complex<T>]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// One classical fourth-order Runge-Kutta step of `y' = derivative(t, y)`.
pub fn rk4_step<T, F, const N: usize>(
    derivative: F,
    t: T,
    y: &[Complex<T>; N],
    dt: T,
) -> Result<[Complex<T>; N]>
where
    T: Real,
    F: Fn(T, &[Complex<T>; N]) -> [Complex<T>; N],
{
    let half = T::lit(0.5) * dt;
    let shifted = |base: &[Complex<T>; N], slope: &[Complex<T>; N], h: T| {
        let mut out = *base;
        for (o, s) in out.iter_mut().zip(slope) {
            *o += *s * h;
        }
        out
    };

    let k1 = derivative(t, y);
    let k2 = derivative(t + half, &shifted(y, &k1, half));
    let k3 = derivative(t + half, &shifted(y, &k2, half));
    let k4 = derivative(t + dt, &shifted(y, &k3, dt));

    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut next = *y;
    for i in 0..N {
        next[i] += (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * sixth;
    }
    if !all_finite(&next) {
        return Err(Error::NumericOverflow {
            context: "rk4_step",
            time: (t + dt).as_f64(),
        });
    }
    Ok(next)
}

/// Composite trapezoid rule over equally spaced samples. A single sample
/// spans an empty interval and integrates to zero.
pub fn trapezoid_integral<T: Real>(values: &[Complex<T>], dt: T) -> Complex<T> {
    match values {
        [] | [_] => Complex::new(T::zero(), T::zero()),
        [first, inner @ .., last] => {
            let half = T::lit(0.5);
            let interior: Complex<T> = inner.iter().copied().sum();
            (interior + (*first + *last) * half) * dt
        }
    }
}

/// Running trapezoid integral: `out[k] = ∫_0^{t_k}` of the sampled values.
pub fn cumulative_trapezoid<T: Real>(values: &[Complex<T>], dt: T) -> Vec<Complex<T>> {
    let half = T::lit(0.5) * dt;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            acc += (values[k - 1] + *v) * half;
        }
        out.push(acc);
    }
    out
}

/// Settings for [`volterra_solve`].
#[derive(Debug, Clone, Copy)]
pub struct VolterraOptions<T> {
    /// `|y|` above this value aborts the solve with a numeric-overflow error.
    pub divergence_bound: T,
}

impl<T: Real> Default for VolterraOptions<T> {
    fn default() -> Self {
        Self {
            divergence_bound: T::lit(1e6),
        }
    }
}

/// Solves `y' = a(t) y(t) - ∫_0^t g(t, s) y(s) ds` on the grid nodes.
///
/// `local_rate(k)` is `a(t_k)` and `kernel(k, j)` is `g(t_k, t_j)` for
/// `j <= k`. Stepping is Heun predictor-corrector with the memory integral
/// taken by the trapezoid rule over all previous nodes, which makes the
/// scheme second order and `O(n_steps^2)` in kernel evaluations.
pub fn volterra_solve<T, A, G>(
    local_rate: A,
    kernel: G,
    grid: &TimeGrid<T>,
    y0: Complex<T>,
    options: VolterraOptions<T>,
) -> Result<Vec<Complex<T>>>
where
    T: Real,
    A: Fn(usize) -> Complex<T>,
    G: Fn(usize, usize) -> Complex<T>,
{
    heun_memory(local_rate, Some(kernel), grid, y0, options)
}

/// [`volterra_solve`] with `a` and `g` expressed as functions of time.
pub fn volterra_solve_fn<T, A, G>(
    local_rate: A,
    kernel: G,
    grid: &TimeGrid<T>,
    y0: Complex<T>,
    options: VolterraOptions<T>,
) -> Result<Vec<Complex<T>>>
where
    T: Real,
    A: Fn(T) -> Complex<T>,
    G: Fn(T, T) -> Complex<T>,
{
    volterra_solve(
        |k| local_rate(grid.time(k)),
        |k, j| kernel(grid.time(k), grid.time(j)),
        grid,
        y0,
        options,
    )
}

/// Heun integration of the memoryless equation `y' = a(t) y`; the same
/// update as [`volterra_solve`] with the history term removed.
pub fn heun_solve<T, A>(
    local_rate: A,
    grid: &TimeGrid<T>,
    y0: Complex<T>,
    options: VolterraOptions<T>,
) -> Result<Vec<Complex<T>>>
where
    T: Real,
    A: Fn(usize) -> Complex<T>,
{
    heun_memory(
        local_rate,
        None::<fn(usize, usize) -> Complex<T>>,
        grid,
        y0,
        options,
    )
}

fn heun_memory<T, A, G>(
    local_rate: A,
    kernel: Option<G>,
    grid: &TimeGrid<T>,
    y0: Complex<T>,
    options: VolterraOptions<T>,
) -> Result<Vec<Complex<T>>>
where
    T: Real,
    A: Fn(usize) -> Complex<T>,
    G: Fn(usize, usize) -> Complex<T>,
{
    let dt = grid.dt();
    let half = T::lit(0.5);
    let zero = Complex::new(T::zero(), T::zero());
    let n = grid.n_steps();

    let mut y = Vec::with_capacity(n + 1);
    y.push(y0);
    let mut rate = local_rate(0) * y0;

    for k in 0..n {
        let next = k + 1;
        let predicted = y[k] + rate * dt;

        // Trapezoid history over nodes 0..=k, with the new node added below.
        let (settled, diagonal) = match &kernel {
            Some(g) => {
                let mut acc = g(next, 0) * y[0] * half;
                for (j, yj) in y.iter().enumerate().skip(1) {
                    acc += g(next, j) * *yj;
                }
                (acc, g(next, next) * half)
            }
            None => (zero, zero),
        };

        let a_next = local_rate(next);
        let history_pred = (settled + diagonal * predicted) * dt;
        let rate_pred = a_next * predicted - history_pred;
        let corrected = y[k] + (rate + rate_pred) * (dt * half);

        if !(corrected.re.is_finite() && corrected.im.is_finite())
            || corrected.norm() > options.divergence_bound
        {
            return Err(Error::NumericOverflow {
                context: "volterra_solve",
                time: grid.time(next).as_f64(),
            });
        }

        let history = (settled + diagonal * corrected) * dt;
        rate = a_next * corrected - history;
        y.push(corrected);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn grid_rejects_zero_steps_and_bad_tmax() {
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
        let g = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(g.dt(), 0.5);
        assert_eq!(g.len(), 5);
        assert_eq!(g.time(4), 2.0);
        assert_eq!(g.midpoint(0), 0.25);
    }

    #[test]
    fn rk4_identity_for_zero_derivative() {
        let y = rk4_step(|_, _| [c(0.0)], 0.0, &[c(1.0)], 0.1).unwrap();
        assert_eq!(y[0], c(1.0));
    }

    #[test]
    fn rk4_exponential_matches_taylor() {
        // e^0.1 from its Taylor series to well below the asserted tolerance.
        let mut taylor = 0.0;
        let mut term = 1.0;
        for n in 0..20 {
            taylor += term;
            term *= 0.1 / (n as f64 + 1.0);
        }
        let y = rk4_step(|_, y: &[C; 1]| [y[0]], 0.0, &[c(1.0)], 0.1).unwrap();
        assert!((y[0].re - taylor).abs() < 1e-7);
        assert!((y[0].re - 1.10517092).abs() < 1e-7);
    }

    #[test]
    fn rk4_rotation_preserves_modulus() {
        let mut y = [c(1.0)];
        for k in 0..100 {
            y = rk4_step(|_, y: &[C; 1]| [C::i() * y[0]], k as f64 * 0.01, &y, 0.01).unwrap();
        }
        assert!((y[0].norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rk4_reports_overflow() {
        let err = rk4_step(|_, _| [c(f64::INFINITY)], 0.0, &[c(1.0)], 0.1).unwrap_err();
        assert!(matches!(err, Error::NumericOverflow { .. }));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let run = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut y = [c(1.0)];
            for k in 0..n {
                y = rk4_step(|t, y: &[C; 1]| [y[0] * (-t)], k as f64 * dt, &y, dt).unwrap();
            }
            (y[0].re - (-0.5f64).exp()).abs()
        };
        let ratio = run(10) / run(20);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_integral(&[c(1.0); 3], 0.5), c(1.0));
        assert_eq!(trapezoid_integral(&[c(0.0), c(0.5), c(1.0)], 0.5), c(0.5));
        assert_eq!(trapezoid_integral(&[c(5.0)], 1.0), c(0.0));
        let running = cumulative_trapezoid(&[c(0.0), c(0.5), c(1.0)], 0.5);
        assert_eq!(running, vec![c(0.0), c(0.125), c(0.5)]);
    }

    #[test]
    fn volterra_trivial_dynamics() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let y =
            volterra_solve(|_| c(0.0), |_, _| c(0.0), &grid, c(1.0), Default::default()).unwrap();
        assert!(y.iter().all(|v| *v == c(1.0)));
    }

    #[test]
    fn volterra_decay_matches_exponential() {
        let grid = TimeGrid::new(2.0, 2000).unwrap();
        let y = volterra_solve(
            |_| c(-1.0),
            |_, _| c(0.0),
            &grid,
            c(1.0),
            Default::default(),
        )
        .unwrap();
        for (k, v) in y.iter().enumerate() {
            assert!((v.re - (-grid.time(k)).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn volterra_constant_kernel_is_cosine() {
        let strength = 2.0f64;
        let grid = TimeGrid::new(5.0, 5000).unwrap();
        let y = volterra_solve_fn(
            |_| c(0.0),
            |_, _| c(strength),
            &grid,
            c(1.0),
            Default::default(),
        )
        .unwrap();
        let max_err = y
            .iter()
            .enumerate()
            .map(|(k, v)| (v - c((strength.sqrt() * grid.time(k)).cos())).norm())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-5, "max error {max_err}");
    }

    #[test]
    fn volterra_is_second_order() {
        let err = |n: usize| {
            let grid = TimeGrid::new(3.0, n).unwrap();
            let y = volterra_solve(|_| c(0.0), |_, _| c(1.0), &grid, c(1.0), Default::default())
                .unwrap();
            (y[n].re - 3.0f64.cos()).abs()
        };
        let order = (err(200) / err(400)).log2();
        assert!(order > 1.8, "observed order {order}");
    }

    #[test]
    fn volterra_zero_kernel_equals_ode_path() {
        let grid = TimeGrid::new(3.0, 300).unwrap();
        let rate = |k: usize| C::new(-0.3, 1.7) * (1.0 + 0.1 * k as f64).sin();
        let a = volterra_solve(
            rate,
            |_, _| c(0.0),
            &grid,
            C::new(0.6, 0.8),
            Default::default(),
        )
        .unwrap();
        let b = heun_solve(rate, &grid, C::new(0.6, 0.8), Default::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn volterra_divergence_is_reported() {
        let grid = TimeGrid::new(100.0, 1000).unwrap();
        let err = volterra_solve(|_| c(1.0), |_, _| c(0.0), &grid, c(1.0), Default::default())
            .unwrap_err();
        match err {
            Error::NumericOverflow { time, .. } => assert!(time > 13.0 && time < 15.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn works_in_single_precision() {
        let grid = TimeGrid::new(1.0f32, 100).unwrap();
        let y = volterra_solve(
            |_| Complex::new(-1.0f32, 0.0),
            |_, _| Complex::new(0.0, 0.0),
            &grid,
            Complex::new(1.0, 0.0),
            Default::default(),
        )
        .unwrap();
        assert!((y[100].re - (-1.0f32).exp()).abs() < 1e-4);
    }
}
