use log::{info, warn};
use rayon::prelude::*;

use super::aggregate::{AggregateRow, AggregateTable};
use super::config::{ExperimentConfig, TestRule};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::observables::{compute_observables, EvalSet, ObservableSet};
use crate::posterior::{run_mcmc, run_quadrature_with, PosteriorAtoms};
use crate::seed::{self, Stream};

/// One replication's observables and sampler summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub observables: ObservableSet,
    /// Smallest per-coordinate ESS for MCMC; Kish effective atom count for
    /// the grid oracle.
    pub ess_min: f64,
    /// Mean post-burn-in acceptance rate; NaN for the grid oracle.
    pub accept_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<ReplicationRecord>,
    pub table: AggregateTable,
}

/// Runs one replication: draw data, form the posterior, compute observables.
///
/// A sampler that fails its mixing diagnostics is rerun once with doubled
/// burn-in and kept draws; a second failure is returned as an error.
pub fn run_replication(
    cfg: &ExperimentConfig,
    model: &ModelSpec,
    n: usize,
    r: usize,
    shared_eval: Option<&EvalSet>,
) -> Result<ReplicationRecord> {
    let rep_seed = seed::replication_seed(cfg.master_seed, n, r);
    let data = model.sample_true(n, seed::derive(rep_seed, &[Stream::Data as u64]))?;

    let (atoms, ess_min, accept_rate) = if cfg.use_quadrature_oracle {
        let nodes = cfg
            .quadrature_nodes
            .unwrap_or_else(|| crate::posterior::default_quadrature_nodes(model.dim_w));
        let atoms = run_quadrature_with(model, &data, cfg.beta, nodes)?.atoms();
        let ess = atoms.effective_size();
        (atoms, ess, f64::NAN)
    } else {
        let settings = cfg.mcmc_settings();
        let mcmc_seed = seed::derive(rep_seed, &[Stream::Mcmc as u64]);
        let draws = match run_mcmc(model, &data, &settings, mcmc_seed) {
            Err(e) if e.is_non_mixing() => {
                warn!("n={n} r={r}: {e}; retrying with doubled budget");
                run_mcmc(model, &data, &settings.doubled(), mcmc_seed)
            }
            other => other,
        }
        .map_err(|e| Error::Replication {
            n,
            replication: r,
            source: Box::new(e),
        })?;
        let diag = &draws.diagnostics;
        let (ess, acc) = (diag.min_ess(), diag.mean_accept_rate());
        (PosteriorAtoms::from(&draws), ess, acc)
    };

    let owned_eval;
    let eval = match shared_eval {
        Some(e) => e,
        None => {
            owned_eval = EvalSet::monte_carlo(
                model,
                cfg.test_size,
                seed::derive(rep_seed, &[Stream::TestSet as u64]),
            )?;
            &owned_eval
        }
    };
    let observables = compute_observables(model, &atoms, cfg.beta, &data, eval)?;
    info!(
        "{} beta={} n={n} r={r} Gg={:.6} Yt={:.6}",
        cfg.model, cfg.beta, observables.gg, observables.yt
    );
    Ok(ReplicationRecord {
        n,
        replication: r,
        seed: rep_seed,
        observables,
        ess_min,
        accept_rate,
    })
}

/// Runs every `(n, r)` replication and aggregates per `n`.
///
/// Replications run concurrently on the current rayon pool; results are
/// collected in `(n, r)` order, so output is independent of scheduling.
/// Any failing replication aborts the whole experiment: dropping it would
/// condition the averages on sampler success.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let model = cfg.model_spec();
    let shared_eval = match cfg.test_rule {
        TestRule::Hermite => Some(EvalSet::hermite(&model, cfg.hermite_order)?),
        TestRule::Mc => None,
    };
    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let records = tasks
        .par_iter()
        .map(|&(n, r)| run_replication(cfg, &model, n, r, shared_eval.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let table = aggregate(cfg, &records);
    Ok(ExperimentOutput {
        config: cfg.clone(),
        records,
        table,
    })
}

pub fn aggregate(cfg: &ExperimentConfig, records: &[ReplicationRecord]) -> AggregateTable {
    let rows = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let sets: Vec<ObservableSet> = records
                .iter()
                .filter(|rec| rec.n == n)
                .map(|rec| rec.observables)
                .collect();
            AggregateRow::from_sets(n, &sets)
        })
        .collect();
    AggregateTable {
        model: cfg.model,
        beta: cfg.beta,
        rows,
    }
}
