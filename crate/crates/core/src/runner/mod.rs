//! Experiment orchestration: config in, [`ResultTable`] out.
//!
//! The runner owns the worker pool. Each signal (or passage) gets its own
//! master seed derived from the config seed and its position, and every
//! reduction runs in trajectory order, so a table depends only on the
//! echoed config.

mod config;
mod plot;
mod table;

pub use config::{
    BathConfig, ControlConfig, ExperimentConfig, ExperimentKind, GridConfig, JitterConfig,
    PassageConfig, Resolved, SignalEntry, SweepConfig,
};
pub use plot::{emit_plot, render_svg};
pub use table::{emit_csv, read_csv, ResultTable, TableError};

use rayon::{ThreadPool, ThreadPoolBuilder};
use thiserror::Error;

use crate::adiabatic::{ensemble_passage, Passage, PassageSolver};
use crate::ensemble::map_ordered;
use crate::error::Error;
use crate::me2::me2_fidelity_averaged;
use crate::numerics::TimeGrid;
use crate::qsd::{ensemble_fidelity, fidelity_for_drive, EnsembleSpec};
use crate::signals::{effective_frequency, Substream};

pub const ARTIFACT: &str = concat!("pulseguard ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[source] Error),
    #[error("{label}: {source}")]
    Numeric {
        label: String,
        #[source]
        source: Error,
    },
    #[error(transparent)]
    Io(#[from] TableError),
}

impl RunError {
    /// Process exit code: 2 for config errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric { .. } => 3,
            RunError::Io(_) => 1,
        }
    }
}

/// SplitMix64 finalizer; decorrelates per-signal seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn build_pool(workers: usize) -> Result<ThreadPool, RunError> {
    ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Config(Error::invalid("workers", e.to_string())))
}

pub fn validate(config: &ExperimentConfig) -> Result<Resolved, RunError> {
    config.resolve().map_err(RunError::Config)
}

fn numeric(label: &str) -> impl Fn(Error) -> RunError + '_ {
    move |source| RunError::Numeric {
        label: label.to_string(),
        source,
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable, RunError> {
    let resolved = validate(config)?;
    let pool = build_pool(config.workers.unwrap_or(1))?;
    let grid = resolved.grid;
    let mut table = ResultTable::new(grid.times());
    table.metadata = vec![
        ("artifact".into(), ARTIFACT.into()),
        ("seed".into(), config.master_seed.to_string()),
        ("config".into(), config.echo()),
    ];
    match config.kind {
        ExperimentKind::MemoryMe2 | ExperimentKind::MemoryQsd => {
            let bath = resolved.bath.expect("memory runs resolve a bath");
            let with_me2 = config.kind == ExperimentKind::MemoryMe2;
            let curves = map_ordered(Some(&pool), resolved.signals.len(), |i| {
                let (_, family) = &resolved.signals[i];
                let signal = family.realize(
                    Substream::new(derive_seed(config.master_seed, i as u64), 0),
                    &grid,
                );
                let drive = effective_frequency(&signal, 1.0);
                let qsd = fidelity_for_drive(&drive, &bath, &resolved.states, &grid)?;
                let me2 = if with_me2 {
                    Some(me2_fidelity_averaged(
                        &resolved.states,
                        &drive,
                        &bath,
                        &grid,
                    )?)
                } else {
                    None
                };
                Ok((qsd, me2))
            })
            .map_err(|e| trajectory_label(e, &resolved.signals))?;
            for ((label, _), (qsd, me2)) in resolved.signals.iter().zip(curves) {
                match me2 {
                    Some(me2) => {
                        table.push_column(format!("{label}_me2"), me2.fidelity);
                        table.push_column(format!("{label}_qsd"), qsd.fidelity);
                    }
                    None => table.push_column(label.clone(), qsd.fidelity),
                }
            }
        }
        ExperimentKind::MemoryEnsemble => {
            let bath = resolved.bath.expect("memory runs resolve a bath");
            for (i, (label, family)) in resolved.signals.iter().enumerate() {
                let ensemble = EnsembleSpec {
                    n_traj: if family.is_stochastic() {
                        config.n_traj
                    } else {
                        1
                    },
                    master_seed: derive_seed(config.master_seed, i as u64),
                };
                let curve = ensemble_fidelity(
                    family,
                    &bath,
                    &resolved.states,
                    ensemble,
                    &grid,
                    Some(&pool),
                )
                .map_err(numeric(label))?;
                table.push_column(format!("{label}_mean"), curve.fidelity);
                table.push_column(
                    format!("{label}_stderr"),
                    curve.stderr.expect("ensemble stderr"),
                );
            }
        }
        ExperimentKind::Adiabatic => {
            for (i, (label, sweep, family)) in resolved.passages.iter().enumerate() {
                let passage_grid =
                    TimeGrid::new(sweep.passage_time, grid.n_steps()).map_err(RunError::Config)?;
                let seed = derive_seed(config.master_seed, i as u64);
                if family.is_stochastic() {
                    let ensemble = EnsembleSpec {
                        n_traj: config.n_traj,
                        master_seed: seed,
                    };
                    let stats = ensemble_passage(
                        sweep,
                        family,
                        ensemble,
                        &passage_grid,
                        PassageSolver::Volterra,
                        Some(&pool),
                    )
                    .map_err(numeric(label))?;
                    table.push_column(format!("{label}_psi0"), stats.mean_magnitude);
                    table.push_column(format!("{label}_stderr"), stats.stderr);
                } else {
                    let control = family.realize(Substream::new(seed, 0), &passage_grid);
                    let passage =
                        Passage::new(sweep, &control, &passage_grid).map_err(numeric(label))?;
                    let (volterra, tdse) =
                        pool.join(|| passage.solve_psi0(), || passage.solve_tdse());
                    table.push_column(
                        format!("{label}_psi0"),
                        volterra.map_err(numeric(label))?.magnitudes(),
                    );
                    table.push_column(
                        format!("{label}_tdse"),
                        tdse.map_err(numeric(label))?.psi0.magnitudes(),
                    );
                }
            }
        }
    }
    Ok(table)
}

/// Turns a trajectory-indexed failure over signals back into a labeled one.
fn trajectory_label<F>(err: Error, signals: &[(String, F)]) -> RunError {
    match err {
        Error::Trajectory { index, source } => RunError::Numeric {
            label: signals[index].0.clone(),
            source: *source,
        },
        other => RunError::Numeric {
            label: "experiment".into(),
            source: other,
        },
    }
}
