use rayon::prelude::*;

use crate::error::Result;
use crate::observables::{
    momentum_distribution, typical_distribution, EnsembleAccumulator, MomentumDistribution,
    TimeSeries,
};
use crate::params::{derive_seed, PhaseMode, Realization, SimParams};
use crate::rotor::Propagator;

/// Ensemble-averaged output of one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub series: TimeSeries,
    pub distribution: MomentumDistribution,
    /// Log-averaged distribution on the same bins.
    pub typical: MomentumDistribution,
    /// Largest lattice any realization needed.
    pub max_sites: usize,
}

/// Evolves `n_realizations` realizations of `params` in parallel.
/// Realization `i` is seeded with `derive_seed(master_seed, point, i)`;
/// the reduction runs in realization order, so the result is identical for
/// any number of worker threads.
pub fn run_ensemble(
    params: &SimParams,
    n_realizations: usize,
    master_seed: u64,
    point: u64,
    record_times: &[u32],
    mode: PhaseMode,
) -> Result<Ensemble> {
    let prop = Propagator::new(params)?;
    let runs = (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let real = Realization::from_seed(derive_seed(master_seed, point, i), mode);
            prop.evolve(&real, record_times)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = EnsembleAccumulator::new();
    for run in &runs {
        acc.push(&run.records)?;
    }
    let snapshots: Vec<_> = runs.into_iter().map(|r| r.snapshot).collect();
    let max_sites = snapshots.iter().map(|s| s.probs.len()).max().unwrap_or(0);
    Ok(Ensemble {
        series: acc.finish()?,
        distribution: momentum_distribution(&snapshots, params.hbar)?,
        typical: typical_distribution(&snapshots, params.hbar)?,
        max_sites,
    })
}

/// Runs `f` on a dedicated pool with `workers` threads (all cores if `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .expect("failed to build worker pool")
        .install(f)
}

/// Worker count from the `QKR_WORKERS` environment variable.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("QKR_WORKERS").ok()?.trim().parse().ok()
}
