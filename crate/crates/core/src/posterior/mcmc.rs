use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::diagnostics::{effective_sample_size, split_rhat};
use super::{Diagnostics, McmcSettings, PosteriorDraws};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, SufficientStats};
use crate::seed::{self, Stream};

struct Chain {
    draws: Vec<f64>,
    accept_rate: f64,
    step: f64,
}

fn log_target(model: &ModelSpec, stats: &SufficientStats, beta: f64, w: &[f64]) -> f64 {
    if !model.contains(w) {
        return f64::NEG_INFINITY;
    }
    // Uniform prior: constant inside the box.
    beta * model.log_likelihood(stats, w)
}

fn run_chain(
    model: &ModelSpec,
    stats: &SufficientStats,
    settings: &McmcSettings,
    seed: u64,
    chain: usize,
) -> Chain {
    let d = model.dim_w;
    let mut rng = seed::rng(seed, Stream::Mcmc, chain as u64);
    let w0 = model.optimum();
    let mut w: Vec<f64> = w0
        .iter()
        .zip(&model.param_box)
        .map(|(&c, &(lo, hi))| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            (c + settings.init_jitter * u).clamp(lo, hi)
        })
        .collect();
    let mut lp = log_target(model, stats, settings.beta, &w);

    let width = model
        .param_box
        .iter()
        .map(|(lo, hi)| hi - lo)
        .fold(0.0, f64::max);
    let (log_min, log_max) = (1e-8f64.ln(), width.ln());
    let mut log_step = (1.0 / (settings.beta * stats.n as f64 + 1.0).sqrt())
        .min(width)
        .ln();
    let mut proposal = vec![0.0; d];

    let mut step =
        |w: &mut Vec<f64>, lp: &mut f64, scale: f64, rng: &mut rand_chacha::ChaCha8Rng| {
            for (p, &c) in proposal.iter_mut().zip(w.iter()) {
                let z: f64 = rng.sample(StandardNormal);
                *p = c + scale * z;
            }
            let lp_new = log_target(model, stats, settings.beta, &proposal);
            let log_alpha = lp_new - *lp;
            let alpha = if log_alpha >= 0.0 {
                1.0
            } else {
                log_alpha.exp()
            };
            let u: f64 = rng.random();
            let accepted = u < alpha;
            if accepted {
                w.copy_from_slice(&proposal);
                *lp = lp_new;
            }
            (alpha, accepted)
        };

    for t in 0..settings.burn_in {
        let (alpha, _) = step(&mut w, &mut lp, log_step.exp(), &mut rng);
        let gain = (t as f64 + 1.0).powf(-0.6);
        log_step = (log_step + gain * (alpha - settings.target_accept)).clamp(log_min, log_max);
    }

    let scale = log_step.exp();
    let mut draws = Vec::with_capacity(settings.kept_per_chain * d);
    let mut accepted = 0usize;
    let total = settings.kept_per_chain * settings.thin;
    for t in 0..total {
        if step(&mut w, &mut lp, scale, &mut rng).1 {
            accepted += 1;
        }
        if (t + 1) % settings.thin == 0 {
            draws.extend_from_slice(&w);
        }
    }
    Chain {
        draws,
        accept_rate: accepted as f64 / total as f64,
        step: scale,
    }
}

/// Runs the chains and computes diagnostics without enforcing mixing.
pub fn sample_chains(
    model: &ModelSpec,
    data: &Dataset,
    settings: &McmcSettings,
    seed: u64,
) -> Result<PosteriorDraws> {
    settings.validate()?;
    if data.dim() != model.dim_x {
        return Err(Error::Dimension {
            what: "sample point",
            expected: model.dim_x,
            got: data.dim(),
        });
    }
    let stats = data.stats();
    let chains: Vec<Chain> = (0..settings.n_chains)
        .into_par_iter()
        .map(|c| run_chain(model, &stats, settings, seed, c))
        .collect();

    let d = model.dim_w;
    let per_chain = settings.kept_per_chain;
    let mut values = Vec::with_capacity(per_chain * settings.n_chains * d);
    for c in &chains {
        values.extend_from_slice(&c.draws);
    }
    let mut ess = Vec::with_capacity(d);
    let mut rhat = Vec::with_capacity(d);
    for k in 0..d {
        let coord: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.draws.iter().skip(k).step_by(d).copied().collect())
            .collect();
        let refs: Vec<&[f64]> = coord.iter().map(|v| v.as_slice()).collect();
        ess.push(effective_sample_size(&refs));
        rhat.push(split_rhat(&refs));
    }
    Ok(PosteriorDraws {
        dim: d,
        n_chains: settings.n_chains,
        per_chain,
        values,
        beta: settings.beta,
        diagnostics: Diagnostics {
            accept_rate: chains.iter().map(|c| c.accept_rate).collect(),
            step_size: chains.iter().map(|c| c.step).collect(),
            ess,
            rhat,
        },
    })
}

/// Random-walk Metropolis on the tempered posterior.
///
/// Each chain starts at the optimum plus uniform jitter, adapts one shared
/// Gaussian proposal scale by stochastic approximation during burn-in, then
/// freezes it. Proposals outside the parameter box are rejected. Fails with
/// [`Error::NonMixing`] when any coordinate has pooled ESS below 100 or split
/// R-hat above 1.1.
pub fn run_mcmc(
    model: &ModelSpec,
    data: &Dataset,
    settings: &McmcSettings,
    seed: u64,
) -> Result<PosteriorDraws> {
    let draws = sample_chains(model, data, settings, seed)?;
    let diag = &draws.diagnostics;
    if !diag.mixed() {
        return Err(Error::NonMixing {
            min_ess: diag.min_ess(),
            max_rhat: diag.max_rhat(),
        });
    }
    Ok(draws)
}
