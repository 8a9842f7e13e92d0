//! Trajectory-level parallel map with an order-fixed reduction.
//!
//! Work items are mapped on the caller's pool (or inline when none is
//! given) and collected in index order; the mean and standard error are
//! then summed sequentially, so results do not depend on worker count.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maps `job` over `0..count`, returning results in index order. The first
/// failing index (in index order) is reported.
pub fn map_ordered<R, F>(pool: Option<&ThreadPool>, count: usize, job: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    let results: Vec<Result<R>> = match pool {
        Some(pool) => pool.install(|| (0..count).into_par_iter().map(&job).collect()),
        None => (0..count).map(&job).collect(),
    };
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Trajectory {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Pointwise sample mean and standard error of the mean.
pub fn mean_and_stderr<T: Real>(curves: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let Some(first) = curves.first() else {
        return (Vec::new(), Vec::new());
    };
    let len = first.len();
    let n = T::count(curves.len());
    let mut mean = vec![T::zero(); len];
    for curve in curves {
        for (m, v) in mean.iter_mut().zip(curve) {
            *m += *v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut stderr = vec![T::zero(); len];
    if curves.len() > 1 {
        for curve in curves {
            for ((s, v), m) in stderr.iter_mut().zip(curve).zip(&mean) {
                *s += (*v - *m) * (*v - *m);
            }
        }
        for s in &mut stderr {
            *s = (*s / (n - T::one()) / n).sqrt();
        }
    }
    (mean, stderr)
}
